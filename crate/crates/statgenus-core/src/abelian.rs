//! Finite abelian p-groups, their elements, characters, and the subgroup
//! combinatorics used by the cohomological constants.
//!
//! Groups are stored in a fixed invariant-factor basis: `A ≅ ⊕ Z/p^{e_i}`
//! with `e_1 ≥ … ≥ e_n ≥ 1`. Elements are exponent vectors, characters are
//! additive (values in `Z/p^n` for `n = e_1`). Everything is immutable after
//! construction and cheap to clone at the sizes this crate targets.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

use crate::{Error, Result};

/// `A ≅ ⊕_i Z/p^{e_i}` for an odd prime `p` and non-increasing exponents `e_i`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbelianPGroup {
    p: u64,
    invariants: Vec<u32>,
}

/// An element of an [`AbelianPGroup`], coordinate `i` reduced mod `p^{e_i}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub coords: Vec<u64>,
}

/// A homomorphism `A → Z/p^n ⊂ Q/Z`, stored additively by its values on the
/// invariant-factor generators. `n` is the exponent of `A` for every
/// character so that the whole dual group lives in one target.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupChar {
    pub target_exponent: u32,
    pub values: Vec<u64>,
}

/// A pair `(D, I)` with `D ⊆ A` 2-generated, `I ⊆ D` cyclic and `D/I` cyclic.
///
/// The element lists are sorted, so equal pairs compare equal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubgroupPair {
    pub d_gens: Vec<GroupElement>,
    pub i_gen: GroupElement,
    pub d_elements: Vec<GroupElement>,
    pub i_elements: Vec<GroupElement>,
}

fn pow_u64(b: u64, e: u32) -> u64 {
    b.checked_pow(e).expect("group order overflow")
}

impl AbelianPGroup {
    pub fn new(p: u64, invariants: Vec<u32>) -> Result<Self> {
        if p < 3 || !crate::ext::is_prime(p) {
            return Err(Error::BadGroup(format!("p = {p} must be an odd prime")));
        }
        if invariants.is_empty() || invariants.iter().any(|&e| e == 0) {
            return Err(Error::BadGroup("invariants must be nonempty and positive".into()));
        }
        if invariants.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::BadGroup("invariants must be non-increasing".into()));
        }
        let bits: u32 = invariants.iter().sum();
        if (p as f64).log2() * bits as f64 > 62.0 {
            return Err(Error::BadGroup("group too large".into()));
        }
        Ok(AbelianPGroup { p, invariants })
    }

    /// Parses the `"p^{e1} x p^{e2} x ..."` surface syntax, e.g. `"3x3"`, `"9"`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut orders = Vec::new();
        for part in s.split(['x', 'X']) {
            let part = part.trim();
            let m: u64 = part
                .parse()
                .map_err(|_| Error::BadGroup(format!("bad factor {part:?} in group string")))?;
            orders.push(m);
        }
        orders.sort_unstable_by(|a, b| b.cmp(a));
        // All factors must be powers of one odd prime.
        let first = orders[0];
        let mut p = 0;
        for q in 3..=first {
            if first % q == 0 {
                p = q;
                break;
            }
        }
        if p == 0 {
            return Err(Error::BadGroup(format!("group order {first} has no odd prime factor")));
        }
        let mut invariants = Vec::new();
        for m in &orders {
            let mut m = *m;
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            if m != 1 || e == 0 {
                return Err(Error::BadGroup(format!("factor is not a power of {p}")));
            }
            invariants.push(e);
        }
        Self::new(p, invariants)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn invariants(&self) -> &[u32] {
        &self.invariants
    }

    /// Number of invariant factors, i.e. `dim_{F_p} A[p]`.
    pub fn rank(&self) -> usize {
        self.invariants.len()
    }

    pub fn order(&self) -> u64 {
        self.invariants.iter().map(|&e| pow_u64(self.p, e)).product()
    }

    /// Exponent of the group as a power of p.
    pub fn exponent_log(&self) -> u32 {
        self.invariants[0]
    }

    /// Order of the `i`-th invariant factor.
    pub fn factor_order(&self, i: usize) -> u64 {
        pow_u64(self.p, self.invariants[i])
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement { coords: vec![0; self.rank()] }
    }

    pub fn element(&self, coords: &[u64]) -> GroupElement {
        assert_eq!(coords.len(), self.rank());
        GroupElement {
            coords: coords
                .iter()
                .enumerate()
                .map(|(i, &c)| c % self.factor_order(i))
                .collect(),
        }
    }

    pub fn generator(&self, i: usize) -> GroupElement {
        let mut coords = vec![0; self.rank()];
        coords[i] = 1;
        GroupElement { coords }
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement {
            coords: a
                .coords
                .iter()
                .zip(&b.coords)
                .enumerate()
                .map(|(i, (&x, &y))| (x + y) % self.factor_order(i))
                .collect(),
        }
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        GroupElement {
            coords: a
                .coords
                .iter()
                .enumerate()
                .map(|(i, &x)| (self.factor_order(i) - x) % self.factor_order(i))
                .collect(),
        }
    }

    pub fn smul(&self, k: i64, a: &GroupElement) -> GroupElement {
        GroupElement {
            coords: a
                .coords
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let m = self.factor_order(i) as i128;
                    (((k as i128 * x as i128) % m + m) % m) as u64
                })
                .collect(),
        }
    }

    pub fn is_zero(&self, a: &GroupElement) -> bool {
        a.coords.iter().all(|&c| c == 0)
    }

    /// Smallest `m ≥ 1` with `m·g = 0`; a power of `p` (or 1).
    pub fn order_of(&self, g: &GroupElement) -> u64 {
        let mut ord = 1u64;
        for (i, &c) in g.coords.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let m = self.factor_order(i);
            ord = ord.max(m / gcd(m, c));
        }
        ord
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        let mut out = Vec::with_capacity(self.order() as usize);
        let mut cur = vec![0u64; self.rank()];
        loop {
            out.push(GroupElement { coords: cur.clone() });
            let mut i = 0;
            loop {
                if i == self.rank() {
                    return out;
                }
                cur[i] += 1;
                if cur[i] < self.factor_order(i) {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    /// Sorted list of the elements of `⟨gens⟩`.
    pub fn span(&self, gens: &[GroupElement]) -> Vec<GroupElement> {
        let mut seen: BTreeSet<GroupElement> = BTreeSet::new();
        seen.insert(self.zero());
        let mut frontier = vec![self.zero()];
        while let Some(x) = frontier.pop() {
            for g in gens {
                let y = self.add(&x, g);
                if seen.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// All `|A|` characters, closed under the unit-scaling action χ ↦ χ^u.
    pub fn characters(&self) -> Vec<GroupChar> {
        let n = self.exponent_log();
        let pn = pow_u64(self.p, n);
        let mut out = Vec::with_capacity(self.order() as usize);
        let steps: Vec<u64> = (0..self.rank()).map(|i| pow_u64(self.p, n - self.invariants[i])).collect();
        let mut cur = vec![0u64; self.rank()];
        loop {
            out.push(GroupChar {
                target_exponent: n,
                values: cur
                    .iter()
                    .zip(&steps)
                    .map(|(&k, &s)| (k * s) % pn)
                    .collect(),
            });
            let mut i = 0;
            loop {
                if i == self.rank() {
                    return out;
                }
                cur[i] += 1;
                if cur[i] < self.factor_order(i) {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    /// Exactly the set 𝒞 of pairs used by the typical kernel, in a canonical order.
    pub fn subgroup_pairs(&self) -> Vec<SubgroupPair> {
        let elems = self.elements();
        let mut seen_d: BTreeSet<Vec<GroupElement>> = BTreeSet::new();
        let mut pairs: BTreeSet<SubgroupPair> = BTreeSet::new();
        for x in &elems {
            for y in &elems {
                let d_elements = self.span(&[x.clone(), y.clone()]);
                if !seen_d.insert(d_elements.clone()) {
                    continue;
                }
                let d_gens = self.two_generators(&d_elements);
                // cyclic I ⊆ D with D/I cyclic
                let mut seen_i: BTreeSet<Vec<GroupElement>> = BTreeSet::new();
                for z in &d_elements {
                    let i_elements = self.span(std::slice::from_ref(z));
                    if !seen_i.insert(i_elements.clone()) {
                        continue;
                    }
                    if self.quotient_is_cyclic(&d_elements, &i_elements) {
                        pairs.insert(SubgroupPair {
                            d_gens: d_gens.clone(),
                            i_gen: z.clone(),
                            d_elements: d_elements.clone(),
                            i_elements,
                        });
                    }
                }
            }
        }
        pairs.into_iter().collect()
    }

    /// `D/I` is cyclic iff some `w ∈ D` satisfies `⟨I, w⟩ = D`.
    pub fn quotient_is_cyclic(&self, d: &[GroupElement], i: &[GroupElement]) -> bool {
        if d.len() == i.len() {
            return true;
        }
        d.iter().any(|w| {
            let mut gens: Vec<GroupElement> = i.to_vec();
            gens.push(w.clone());
            self.span(&gens).len() == d.len()
        })
    }

    /// A minimal generator list (≤ 2 elements) for a 2-generated subgroup
    /// given by its sorted element list.
    fn two_generators(&self, d: &[GroupElement]) -> Vec<GroupElement> {
        if d.len() == 1 {
            return Vec::new();
        }
        for x in d {
            if self.span(std::slice::from_ref(x)).len() == d.len() {
                return vec![x.clone()];
            }
        }
        let mut best: Option<(u64, GroupElement, GroupElement)> = None;
        for x in d {
            for y in d {
                if self.span(&[x.clone(), y.clone()]).len() == d.len() {
                    let key = self.order_of(x).max(self.order_of(y));
                    if best.as_ref().map_or(true, |(k, _, _)| key > *k) {
                        best = Some((key, x.clone(), y.clone()));
                    }
                }
            }
        }
        let (_, x, y) = best.expect("subgroup not 2-generated");
        vec![x, y]
    }

    /// Splits a subgroup (given by its sorted element list) into an internal
    /// direct sum of cyclic groups, returned as basis elements with
    /// non-increasing orders. Greedy max-order peeling; valid for abelian
    /// p-groups at these sizes.
    pub fn cyclic_basis(&self, elements: &[GroupElement]) -> Vec<GroupElement> {
        let mut basis: Vec<GroupElement> = Vec::new();
        let mut span_now: BTreeSet<GroupElement> = [self.zero()].into_iter().collect();
        while span_now.len() < elements.len() {
            // element of maximal order in the quotient by the current span,
            // among those whose own order equals the quotient order
            let mut best: Option<(u64, GroupElement)> = None;
            for y in elements {
                if span_now.contains(y) {
                    continue;
                }
                let oy = self.order_of(y);
                let mut t = 1u64;
                let mut z = y.clone();
                while !span_now.contains(&z) {
                    t *= self.p;
                    z = self.smul(self.p as i64, &z);
                }
                if t == oy && best.as_ref().map_or(true, |(o, _)| oy > *o) {
                    best = Some((oy, y.clone()));
                }
            }
            let (_, y) = best.expect("no exact-order lift found");
            basis.push(y.clone());
            let gens = basis.clone();
            span_now = self.span(&gens).into_iter().collect();
        }
        basis.sort_by_key(|b| std::cmp::Reverse(self.order_of(b)));
        basis
    }
}

impl GroupChar {
    /// χ(g) as an element of `Z/p^n`, additively.
    pub fn eval(&self, group: &AbelianPGroup, g: &GroupElement) -> u64 {
        let pn = pow_u64(group.p(), self.target_exponent);
        let mut acc: u128 = 0;
        for (v, c) in self.values.iter().zip(&g.coords) {
            acc += *v as u128 * *c as u128;
        }
        (acc % pn as u128) as u64
    }

    /// Order of the character, a power of p.
    pub fn order(&self, group: &AbelianPGroup) -> u64 {
        let pn = pow_u64(group.p(), self.target_exponent);
        let mut ord = 1;
        for &v in &self.values {
            if v != 0 {
                ord = ord.max(pn / gcd(pn, v));
            }
        }
        ord
    }

    /// χ^u for an integer u (the Galois/unit scaling).
    pub fn power(&self, group: &AbelianPGroup, u: u64) -> GroupChar {
        let pn = pow_u64(group.p(), self.target_exponent);
        GroupChar {
            target_exponent: self.target_exponent,
            values: self.values.iter().map(|&v| (v as u128 * u as u128 % pn as u128) as u64).collect(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl fmt::Display for AbelianPGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.invariants.iter().map(|&e| pow_u64(self.p, e).to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl fmt::Debug for AbelianPGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AbelianPGroup({self})")
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.encode())
    }
}

impl GroupElement {
    pub fn encode(&self) -> String {
        self.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    }

    pub fn decode(group: &AbelianPGroup, s: &str) -> Result<Self> {
        let coords: std::result::Result<Vec<u64>, _> = s.split(',').map(|t| t.trim().parse()).collect();
        let coords = coords.map_err(|_| Error::Parse(format!("bad element {s:?}")))?;
        if coords.len() != group.rank() {
            return Err(Error::Parse(format!("element {s:?} has wrong rank for {group}")));
        }
        Ok(group.element(&coords))
    }
}

impl fmt::Debug for GroupChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "chi[{}]/p^{}",
            self.values.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
            self.target_exponent
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> AbelianPGroup {
        AbelianPGroup::parse(s).unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(g("3x3").to_string(), "3x3");
        assert_eq!(g("9").to_string(), "9");
        assert_eq!(g("3 x 9").to_string(), "9x3");
        assert!(AbelianPGroup::parse("4").is_err());
        assert!(AbelianPGroup::parse("6").is_err());
    }

    #[test]
    fn character_counts() {
        assert_eq!(g("3").characters().len(), 3);
        let a = g("3x3");
        let chars = a.characters();
        assert_eq!(chars.len(), 9);
        assert_eq!(chars.iter().filter(|c| c.order(&a) == 3).count(), 8);

        let a9 = g("9");
        let chars = a9.characters();
        assert_eq!(chars.iter().filter(|c| c.order(&a9) == 9).count(), 6);
        assert_eq!(chars.iter().filter(|c| c.order(&a9) == 3).count(), 2);
        assert_eq!(chars.iter().filter(|c| c.order(&a9) == 1).count(), 1);
    }

    #[test]
    fn characters_separate_points() {
        for name in ["3", "9", "3x3", "9x3"] {
            let a = g(name);
            let chars = a.characters();
            for x in a.elements() {
                if !a.is_zero(&x) {
                    assert!(chars.iter().any(|c| c.eval(&a, &x) != 0), "{name} {x:?}");
                }
            }
        }
    }

    #[test]
    fn element_orders() {
        let a = g("9x3");
        assert_eq!(a.order_of(&a.zero()), 1);
        assert_eq!(a.order_of(&a.element(&[1, 0])), 9);
        assert_eq!(a.order_of(&a.element(&[3, 1])), 3);
        for x in a.elements() {
            for y in a.elements() {
                let s = a.add(&x, &y);
                let l = lcm(a.order_of(&x), a.order_of(&y));
                assert_eq!(l % a.order_of(&s), 0);
            }
        }
    }

    fn lcm(a: u64, b: u64) -> u64 {
        a / gcd(a, b) * b
    }

    #[test]
    fn pairs_z3() {
        let a = g("3");
        let pairs = a.subgroup_pairs();
        // {(1,1), (Z/3,1), (Z/3,Z/3)}
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().any(|p| p.d_elements.len() == 1 && p.i_elements.len() == 1));
    }

    #[test]
    fn pairs_z9_all_nested() {
        let a = g("9");
        let pairs = a.subgroup_pairs();
        // subgroups 1, Z/3, Z/9 all cyclic; pairs = all nested (D, I): 1+2+3
        assert_eq!(pairs.len(), 6);
    }

    #[test]
    fn pairs_z3z3() {
        let a = g("3x3");
        let pairs = a.subgroup_pairs();
        // D trivial: 1; D one of 4 cyclic: I in {1, D}: 8; D = A: I any of 4 cyclic: 4
        assert_eq!(pairs.len(), 13);
        for p in &pairs {
            assert!(p.i_elements.iter().all(|x| p.d_elements.contains(x)));
        }
    }

    #[test]
    fn cyclic_basis_splits() {
        for name in ["3", "9", "3x3", "9x3", "27x9"] {
            let a = g(name);
            let all = a.elements();
            let basis = a.cyclic_basis(&all);
            let orders: Vec<u64> = basis.iter().map(|b| a.order_of(b)).collect();
            assert_eq!(orders.iter().product::<u64>(), a.order(), "{name}");
            assert_eq!(a.span(&basis).len() as u64, a.order());
        }
    }
}
