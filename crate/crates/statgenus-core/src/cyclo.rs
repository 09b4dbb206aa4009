//! Exact arithmetic in `Z[ζ_{p^n}]` on the power basis of
//! `Z[x]/Φ_{p^n}(x)`. Coefficients are i128: the character sums accumulated
//! here stay far below the overflow line, and exactness is the whole point.

/// The ring `Z[ζ_{p^n}]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycloRing {
    pub p: u64,
    pub n: u32,
    /// φ(p^n) = (p-1) p^{n-1}
    pub deg: usize,
    /// p^n
    pub order: u64,
}

/// An element on the power basis `1, ζ, …, ζ^{deg−1}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CycloNum {
    pub coeffs: Vec<i128>,
}

impl CycloRing {
    pub fn new(p: u64, n: u32) -> CycloRing {
        assert!(n >= 1);
        let deg = ((p - 1) * p.pow(n - 1)) as usize;
        CycloRing { p, n, deg, order: p.pow(n) }
    }

    pub fn zero(&self) -> CycloNum {
        CycloNum { coeffs: vec![0; self.deg] }
    }

    pub fn one(&self) -> CycloNum {
        self.integer(1)
    }

    pub fn integer(&self, v: i128) -> CycloNum {
        let mut c = vec![0; self.deg];
        c[0] = v;
        CycloNum { coeffs: c }
    }

    /// ζ^e for an exponent mod p^n.
    pub fn root_power(&self, e: u64) -> CycloNum {
        let e = (e % self.order) as usize;
        let mut c = vec![0i128; self.deg];
        if e < self.deg {
            c[e] = 1;
        } else {
            // x^{deg + s} = -Σ_{i<p-1} x^{i p^{n-1} + s}
            let s = e - self.deg;
            let step = self.p.pow(self.n - 1) as usize;
            for i in 0..(self.p - 1) as usize {
                c[i * step + s] -= 1;
            }
        }
        CycloNum { coeffs: c }
    }

    pub fn add_assign(&self, a: &mut CycloNum, b: &CycloNum) {
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x += *y;
        }
    }

    pub fn scale(&self, a: &CycloNum, s: i128) -> CycloNum {
        CycloNum { coeffs: a.coeffs.iter().map(|&x| x * s).collect() }
    }

    pub fn mul(&self, a: &CycloNum, b: &CycloNum) -> CycloNum {
        let mut raw = vec![0i128; 2 * self.deg];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (l, &y) in b.coeffs.iter().enumerate() {
                raw[i + l] += x * y;
            }
        }
        self.reduce(raw)
    }

    fn reduce(&self, mut raw: Vec<i128>) -> CycloNum {
        let step = self.p.pow(self.n - 1) as usize;
        // first fold exponents ≥ p^n (only arises transiently): ζ^{p^n} = 1
        while raw.len() > self.order as usize {
            let c = raw.pop().unwrap();
            let e = raw.len() - self.order as usize;
            raw[e] += c;
        }
        while raw.len() > self.deg {
            let c = raw.pop().unwrap();
            if c == 0 {
                continue;
            }
            let s = raw.len() - self.deg;
            for i in 0..(self.p - 1) as usize {
                raw[i * step + s] -= c;
            }
        }
        raw.resize(self.deg, 0);
        CycloNum { coeffs: raw }
    }

    pub fn is_zero(&self, a: &CycloNum) -> bool {
        a.coeffs.iter().all(|&x| x == 0)
    }

    /// Some(v) when the element is the rational integer v.
    pub fn as_integer(&self, a: &CycloNum) -> Option<i128> {
        if a.coeffs[1..].iter().all(|&x| x == 0) {
            Some(a.coeffs[0])
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_relations() {
        let r = CycloRing::new(3, 1); // Z[ζ_3], deg 2
        // 1 + ζ + ζ^2 = 0
        let mut s = r.zero();
        for e in 0..3 {
            r.add_assign(&mut s, &r.root_power(e));
        }
        assert!(r.is_zero(&s));
        // ζ * ζ^2 = 1
        assert_eq!(r.mul(&r.root_power(1), &r.root_power(2)), r.one());

        let r9 = CycloRing::new(3, 2); // deg 6
        let mut s = r9.zero();
        for e in 0..9 {
            r9.add_assign(&mut s, &r9.root_power(e));
        }
        assert!(r9.is_zero(&s));
        for e in 0..9 {
            assert_eq!(r9.mul(&r9.root_power(e), &r9.root_power(9 - e)), r9.one());
        }
    }

    #[test]
    fn orthogonality_sums() {
        // Σ_{c mod p^n} ζ^{c a} = p^n [a = 0]
        for (p, n) in [(3u64, 1u32), (3, 2), (5, 1)] {
            let r = CycloRing::new(p, n);
            let pn = p.pow(n);
            for a in 0..pn {
                let mut s = r.zero();
                for c in 0..pn {
                    r.add_assign(&mut s, &r.root_power(c * a % pn));
                }
                let expect = if a == 0 { r.integer(pn as i128) } else { r.zero() };
                assert_eq!(s, expect, "p={p} n={n} a={a}");
            }
        }
    }

    #[test]
    fn integrality_detection() {
        let r = CycloRing::new(3, 1);
        assert_eq!(r.as_integer(&r.integer(7)), Some(7));
        assert_eq!(r.as_integer(&r.root_power(1)), None);
        // ζ + ζ^2 = -1
        let mut s = r.root_power(1);
        r.add_assign(&mut s, &r.root_power(2));
        assert_eq!(r.as_integer(&s), Some(-1));
    }
}
