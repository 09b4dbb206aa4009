//! Linear algebra over the chain ring `Z/p^t`.
//!
//! Submodules of `(Z/p^t)^n` are kept in Howell echelon form, which is
//! canonical: membership tests, sizes and subgroup equality all reduce to it.
//! Kernels and solving go through a local Smith reduction with row and column
//! transforms tracked exactly. All entries stay below `p^t ≤ 3^12`, so plain
//! `u64`/`u128` arithmetic is exact.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ring {
    pub p: u64,
    pub t: u32,
    pub modulus: u64,
}

impl Ring {
    pub fn new(p: u64, t: u32) -> Ring {
        let modulus = p.checked_pow(t).expect("modulus overflow");
        Ring { p, t, modulus }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.modulus
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.modulus - b % self.modulus) % self.modulus
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    pub fn neg(&self, a: u64) -> u64 {
        (self.modulus - a % self.modulus) % self.modulus
    }

    /// p-adic valuation, capped at t for zero.
    pub fn val(&self, a: u64) -> u32 {
        if a % self.modulus == 0 {
            return self.t;
        }
        let mut a = a % self.modulus;
        let mut v = 0;
        while a % self.p == 0 {
            a /= self.p;
            v += 1;
        }
        v
    }

    /// Inverse of a unit mod p^t.
    pub fn inv_unit(&self, a: u64) -> u64 {
        let a = a % self.modulus;
        assert!(a % self.p != 0, "not a unit");
        // extended Euclid on (a, modulus)
        let (mut r0, mut r1) = (self.modulus as i128, a as i128);
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        debug_assert_eq!(r0, 1);
        (((s0 % self.modulus as i128) + self.modulus as i128) % self.modulus as i128) as u64
    }
}

/// Dense matrix over `Z/p^t`, row major.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<u64>,
}

impl Mat {
    pub fn zero(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, a: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<u64>>, cols: usize) -> Mat {
        let r = rows.len();
        let mut a = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols);
            a.extend(row);
        }
        Mat { rows: r, cols, a }
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, ring: &Ring, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let x = self[(i, k)];
                if x == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = ring.add(out[(i, j)], ring.mul(x, other[(k, j)]));
                }
            }
        }
        out
    }

    pub fn apply(&self, ring: &Ring, v: &[u64]) -> Vec<u64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = 0u64;
                for j in 0..self.cols {
                    acc = ring.add(acc, ring.mul(self[(i, j)], v[j]));
                }
                acc
            })
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = u64;
    fn index(&self, (i, j): (usize, usize)) -> &u64 {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut u64 {
        &mut self.a[i * self.cols + j]
    }
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.rows {
            writeln!(f, "{:?}", self.row(i))?;
        }
        Ok(())
    }
}

/// A submodule of `(Z/p^t)^n` in canonical Howell form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Subgroup {
    pub n: usize,
    /// echelon rows; row k has pivot `p^{a_k}` in column `pivot_col[k]`
    pub rows: Vec<Vec<u64>>,
    pub pivot_col: Vec<usize>,
    pub pivot_val: Vec<u32>,
}

impl Subgroup {
    /// log_p of the subgroup order.
    pub fn size_log(&self, ring: &Ring) -> u32 {
        self.pivot_val.iter().map(|&a| ring.t - a).sum()
    }
}

/// Canonical Howell form of the subgroup spanned by `gens`.
pub fn howell(ring: &Ring, n: usize, gens: &[Vec<u64>]) -> Subgroup {
    let mut work: Vec<Vec<u64>> = gens
        .iter()
        .map(|g| {
            assert_eq!(g.len(), n);
            g.iter().map(|&x| x % ring.modulus).collect()
        })
        .filter(|g: &Vec<u64>| g.iter().any(|&x| x != 0))
        .collect();
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut pivot_col: Vec<usize> = Vec::new();
    let mut pivot_val: Vec<u32> = Vec::new();

    for col in 0..n {
        // reduce work rows by existing pivots in earlier columns already done;
        // pick minimal-valuation entry in this column
        let mut best: Option<(usize, u32)> = None;
        for (i, r) in work.iter().enumerate() {
            if r[col] != 0 {
                let v = ring.val(r[col]);
                if best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((i, v));
                }
            }
        }
        let Some((bi, a)) = best else { continue };
        let mut piv = work.swap_remove(bi);
        // normalize pivot to p^a
        let unit = piv[col] / ring.p.pow(a);
        let inv = ring.inv_unit(unit);
        for x in piv.iter_mut() {
            *x = ring.mul(*x, inv);
        }
        // eliminate col from the remaining work rows
        let pa = ring.p.pow(a);
        let mut next_work = Vec::with_capacity(work.len() + 1);
        for mut r in work {
            if r[col] != 0 {
                debug_assert!(ring.val(r[col]) >= a);
                let f = r[col] / pa;
                for (x, pv) in r.iter_mut().zip(&piv) {
                    *x = ring.sub(*x, ring.mul(f, *pv));
                }
            }
            if r.iter().any(|&x| x != 0) {
                next_work.push(r);
            }
        }
        // Howell: the annihilator multiple of the pivot row stays in the span
        if a > 0 {
            let ann = ring.p.pow(ring.t - a);
            let extra: Vec<u64> = piv.iter().map(|&x| ring.mul(ann, x)).collect();
            if extra.iter().any(|&x| x != 0) {
                next_work.push(extra);
            }
        }
        work = next_work;
        rows.push(piv);
        pivot_col.push(col);
        pivot_val.push(a);
    }
    // back-reduce entries above pivots to canonical representatives; pivots
    // are processed left to right, so a step never disturbs the columns
    // canonicalized before it
    for k in 0..rows.len() {
        let col = pivot_col[k];
        let a = pivot_val[k];
        let pa = ring.p.pow(a);
        let piv = rows[k].clone();
        for j in 0..k {
            let f = rows[j][col] / pa;
            if f > 0 {
                for (x, pv) in rows[j].iter_mut().zip(&piv) {
                    *x = ring.sub(*x, ring.mul(f, *pv));
                }
            }
        }
    }
    Subgroup { n, rows, pivot_col, pivot_val }
}

/// Reduces `v` against the subgroup; returns the canonical residue.
pub fn reduce(ring: &Ring, sub: &Subgroup, v: &[u64]) -> Vec<u64> {
    let mut v: Vec<u64> = v.iter().map(|&x| x % ring.modulus).collect();
    for k in 0..sub.rows.len() {
        let col = sub.pivot_col[k];
        if v[col] == 0 {
            continue;
        }
        let a = sub.pivot_val[k];
        let pa = ring.p.pow(a);
        let f = v[col] / pa;
        if f > 0 {
            for (x, pv) in v.iter_mut().zip(&sub.rows[k]) {
                *x = ring.sub(*x, ring.mul(f, *pv));
            }
        }
    }
    v
}

pub fn contains(ring: &Ring, sub: &Subgroup, v: &[u64]) -> bool {
    reduce(ring, sub, v).iter().all(|&x| x == 0)
}

/// Local Smith reduction: returns (d, u, pivots) with `r·M·u = D`, where `D`
/// is diagonal with entries `p^{a_i}` on the recorded pivots. `r` is applied
/// to `rhs_tracker` if given (for solving). `u` is returned so kernels and
/// solutions can be pulled back.
pub struct Smith {
    pub pivots: Vec<u32>,
    pub u: Mat,
    pub r: Mat,
    pub d: Mat,
}

pub fn smith(ring: &Ring, m: &Mat) -> Smith {
    let mut d = m.clone();
    for x in d.a.iter_mut() {
        *x %= ring.modulus;
    }
    let mut u = Mat::identity(m.cols);
    let mut r = Mat::identity(m.rows);
    let mut pivots = Vec::new();
    let k = m.rows.min(m.cols);
    for step in 0..k {
        // find min-valuation entry in the remaining block
        let mut best: Option<(usize, usize, u32)> = None;
        for i in step..m.rows {
            for j in step..m.cols {
                if d[(i, j)] != 0 {
                    let v = ring.val(d[(i, j)]);
                    if best.map_or(true, |(_, _, bv)| v < bv) {
                        best = Some((i, j, v));
                    }
                }
            }
        }
        let Some((bi, bj, a)) = best else { break };
        // move to (step, step)
        if bi != step {
            for j in 0..m.cols {
                d.a.swap(bi * m.cols + j, step * m.cols + j);
            }
            for j in 0..m.rows {
                r.a.swap(bi * m.rows + j, step * m.rows + j);
            }
        }
        if bj != step {
            for i in 0..m.rows {
                d.a.swap(i * m.cols + bj, i * m.cols + step);
            }
            for i in 0..m.cols {
                u.a.swap(i * m.cols + bj, i * m.cols + step);
            }
        }
        // normalize pivot to p^a (scale row by unit inverse)
        let pa = ring.p.pow(a);
        let unit = d[(step, step)] / pa;
        let inv = ring.inv_unit(unit);
        for j in 0..m.cols {
            d[(step, j)] = ring.mul(d[(step, j)], inv);
        }
        for j in 0..m.rows {
            r[(step, j)] = ring.mul(r[(step, j)], inv);
        }
        // clear column below/above
        for i in 0..m.rows {
            if i != step && d[(i, step)] != 0 {
                let f = d[(i, step)] / pa;
                for j in 0..m.cols {
                    let s = ring.mul(f, d[(step, j)]);
                    d[(i, j)] = ring.sub(d[(i, j)], s);
                }
                for j in 0..m.rows {
                    let s = ring.mul(f, r[(step, j)]);
                    r[(i, j)] = ring.sub(r[(i, j)], s);
                }
            }
        }
        // clear row to the right (column ops, tracked in u)
        for j in 0..m.cols {
            if j != step && d[(step, j)] != 0 {
                let f = d[(step, j)] / pa;
                for i in 0..m.rows {
                    let s = ring.mul(f, d[(i, step)]);
                    d[(i, j)] = ring.sub(d[(i, j)], s);
                }
                for i in 0..m.cols {
                    let s = ring.mul(f, u[(i, step)]);
                    u[(i, j)] = ring.sub(u[(i, j)], s);
                }
            }
        }
        pivots.push(a);
    }
    Smith { pivots, u, r, d }
}

/// Generators of `{x : Mx = 0}` in `(Z/p^t)^cols`.
pub fn kernel(ring: &Ring, m: &Mat) -> Vec<Vec<u64>> {
    if m.cols == 0 {
        return Vec::new();
    }
    if m.rows == 0 {
        return (0..m.cols)
            .map(|j| {
                let mut v = vec![0; m.cols];
                v[j] = 1;
                v
            })
            .collect();
    }
    let s = smith(ring, m);
    let mut gens = Vec::new();
    for (i, &a) in s.pivots.iter().enumerate() {
        if a > 0 {
            let f = ring.p.pow(ring.t - a);
            let col: Vec<u64> = (0..m.cols).map(|r| ring.mul(f, s.u[(r, i)])).collect();
            if col.iter().any(|&x| x != 0) {
                gens.push(col);
            }
        }
    }
    for j in s.pivots.len()..m.cols {
        let col: Vec<u64> = (0..m.cols).map(|r| s.u[(r, j)]).collect();
        gens.push(col);
    }
    gens
}

/// One solution of `Mx = b`, if any.
pub fn solve(ring: &Ring, m: &Mat, b: &[u64]) -> Option<Vec<u64>> {
    assert_eq!(b.len(), m.rows);
    let s = smith(ring, m);
    let c = s.r.apply(ring, b);
    let mut y = vec![0u64; m.cols];
    for i in 0..m.rows {
        if i < s.pivots.len() {
            let a = s.pivots[i];
            let pa = ring.p.pow(a);
            if c[i] % pa != 0 {
                return None;
            }
            y[i] = c[i] / pa;
        } else if c[i] % ring.modulus != 0 {
            return None;
        }
    }
    Some(s.u.apply(ring, &y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Ring {
        Ring::new(3, 3) // Z/27
    }

    #[test]
    fn howell_membership_and_size() {
        let r = ring();
        // span{(3, 0), (0, 9)} in (Z/27)^2: size 9 * 3 = 27
        let sub = howell(&r, 2, &[vec![3, 0], vec![0, 9]]);
        assert_eq!(sub.size_log(&r), 3);
        assert!(contains(&r, &sub, &[6, 18]));
        assert!(!contains(&r, &sub, &[1, 0]));
        assert!(!contains(&r, &sub, &[3, 3]));
    }

    #[test]
    fn howell_is_canonical() {
        let r = ring();
        let a = howell(&r, 2, &[vec![3, 1], vec![0, 9]]);
        let b = howell(&r, 2, &[vec![6, 2], vec![3, 10], vec![0, 18]]);
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_of_diag() {
        let r = ring();
        // M = [[3, 0], [0, 1]] on (Z/27)^2: kernel = {(9k, 0)}
        let m = Mat::from_rows(vec![vec![3, 0], vec![0, 1]], 2);
        let k = kernel(&r, &m);
        let sub = howell(&r, 2, &k);
        assert_eq!(sub.size_log(&r), 1);
        assert!(contains(&r, &sub, &[9, 0]));
        for g in &k {
            assert!(m.apply(&r, g).iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn kernel_random_consistency() {
        let r = ring();
        // pseudo-random small matrices: kernel gens actually lie in the kernel,
        // and |ker| * |im| = |domain|
        let mut seed = 1u64;
        let mut rnd = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) % 27
        };
        for _ in 0..50 {
            let rows = 3;
            let cols = 4;
            let m = Mat { rows, cols, a: (0..rows * cols).map(|_| rnd()).collect() };
            let k = kernel(&r, &m);
            for g in &k {
                assert!(m.apply(&r, g).iter().all(|&x| x == 0), "{m:?} {g:?}");
            }
            let ker_sub = howell(&r, cols, &k);
            let im_cols: Vec<Vec<u64>> =
                (0..cols).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect();
            let im_sub = howell(&r, rows, &im_cols);
            assert_eq!(
                ker_sub.size_log(&r) + im_sub.size_log(&r),
                (cols as u32) * r.t,
                "rank-nullity over chain ring"
            );
        }
    }

    #[test]
    fn solve_works() {
        let r = ring();
        let mut seed = 7u64;
        let mut rnd = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) % 27
        };
        for _ in 0..50 {
            let m = Mat { rows: 3, cols: 3, a: (0..9).map(|_| rnd()).collect() };
            let x: Vec<u64> = (0..3).map(|_| rnd()).collect();
            let b = m.apply(&r, &x);
            let y = solve(&r, &m, &b).expect("solvable by construction");
            assert_eq!(m.apply(&r, &y), b);
        }
    }
}
