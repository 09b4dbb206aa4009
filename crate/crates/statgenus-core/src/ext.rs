//! A-extensions of Q: parametrizing tuples, conductor-ordered enumeration,
//! evaluable local data (inertia, decomposition, Frobenius) through discrete
//! logarithms, special-prime classification and the rank predictor.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Mutex;

use crate::abelian::{AbelianPGroup, GroupElement};
use crate::blocks::IdempotentBlock;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// elementary number theory
// ---------------------------------------------------------------------------

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    // deterministic Miller-Rabin for u64
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Least positive primitive root mod an odd prime q.
pub fn least_primitive_root(q: u64) -> u64 {
    let phi = q - 1;
    let fac = factorize(phi);
    'g: for g in 2..q {
        for (f, _) in &fac {
            if pow_mod(g, phi / f, q) == 1 {
                continue 'g;
            }
        }
        return g;
    }
    unreachable!("no primitive root found for prime {q}")
}

/// Discrete logarithms to the least primitive root mod q. A full table is
/// walked out for moderate q; baby-step giant-step covers the rest. Tables
/// are cached per modulus because scans re-evaluate many residues.
pub struct DlogContext {
    tables: Mutex<BTreeMap<u64, DlogTable>>,
}

enum DlogTable {
    Full { g: u64, table: Vec<u32> },
    Bsgs { g: u64, baby: BTreeMap<u64, u64>, giant: u64, m: u64 },
}

const FULL_TABLE_LIMIT: u64 = 5_000;

impl Default for DlogContext {
    fn default() -> Self {
        DlogContext { tables: Mutex::new(BTreeMap::new()) }
    }
}

impl DlogContext {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure(&self, q: u64) {
        let mut tables = self.tables.lock().unwrap();
        if tables.contains_key(&q) {
            return;
        }
        let g = least_primitive_root(q);
        let entry = if q <= FULL_TABLE_LIMIT {
            let mut table = vec![0u32; q as usize];
            let mut x = 1u64;
            for i in 0..q - 1 {
                table[x as usize] = i as u32;
                x = mul_mod(x, g, q);
            }
            DlogTable::Full { g, table }
        } else {
            let m = (q as f64).sqrt().ceil() as u64 + 1;
            let mut baby = BTreeMap::new();
            let mut x = 1u64;
            for j in 0..m {
                baby.entry(x).or_insert(j);
                x = mul_mod(x, g, q);
            }
            // giant step multiplier g^{-m}
            let giant = pow_mod(pow_mod(g, q - 2, q), m, q);
            DlogTable::Bsgs { g, baby, giant, m }
        };
        tables.insert(q, entry);
    }

    pub fn primitive_root(&self, q: u64) -> u64 {
        self.ensure(q);
        match &self.tables.lock().unwrap()[&q] {
            DlogTable::Full { g, .. } => *g,
            DlogTable::Bsgs { g, .. } => *g,
        }
    }

    /// ind_g(x) mod q for x coprime to q.
    pub fn dlog(&self, q: u64, x: u64) -> u64 {
        let x = x % q;
        assert!(x != 0, "dlog of 0 mod {q}");
        self.ensure(q);
        match &self.tables.lock().unwrap()[&q] {
            DlogTable::Full { table, .. } => table[x as usize] as u64,
            DlogTable::Bsgs { baby, giant, m, .. } => {
                let mut y = x;
                for i in 0..=*m {
                    if let Some(j) = baby.get(&y) {
                        return (i * m + j) % (q - 1);
                    }
                    y = mul_mod(y, *giant, q);
                }
                unreachable!("bsgs failed for {x} mod {q}")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// characters of prime-power conductor (additive values in Z/p^n)
// ---------------------------------------------------------------------------

/// The tame character of modulus q and order p^n, additively:
/// `χ_{q,n}(x) = ind_{g_q}(x) mod p^n` when `q ≡ 1 mod p^n`, and the image of
/// the level-m character under `Z/p^m ↪ Z/p^n` when `p^m ∥ q − 1` with m < n.
/// The tame generator at q is identified with the least primitive root, so
/// `χ_{q,n}(σ_q) = 1`.
pub fn char_eval_tame(ctx: &DlogContext, p: u64, q: u64, n: u32, x: u64) -> Result<u64> {
    if x % q == 0 {
        return Err(Error::OutOfRange(format!("character argument {x} not coprime to {q}")));
    }
    let pn = p.pow(n);
    let mut m = 0u32;
    let mut rest = q - 1;
    while rest % p == 0 && m < n {
        rest /= p;
        m += 1;
    }
    if m == 0 {
        return Err(Error::OutOfRange(format!("{q} is not 1 mod {p}")));
    }
    let pm = p.pow(m);
    let ind = ctx.dlog(q, x % q);
    Ok((ind % pm) * (pn / pm) % pn)
}

/// The wild character of modulus p^{n+1} and order p^n, additively: discrete
/// log of the p-part of x, taken to the least generator 1 + p of the p-Sylow
/// subgroup of (Z/p^{n+1})^×. `χ_{p,n}(σ_p) = 1` with σ_p ↦ 1 + p.
pub fn char_eval_wild(p: u64, n: u32, x: u64) -> Result<u64> {
    if x % p == 0 {
        return Err(Error::OutOfRange(format!("character argument {x} not coprime to {p}")));
    }
    let modulus = p.pow(n + 1);
    let pn = p.pow(n);
    // project to the p-Sylow part: raise to (p-1)*inv(p-1) mod p^n
    let unit_exp = (p - 1) * inv_mod(p - 1, pn);
    let s = pow_mod(x % modulus, unit_exp, modulus);
    // discrete log base 1+p in the p-Sylow subgroup (order p^n, tiny)
    let g = (1 + p) % modulus;
    let gs = pow_mod(g, unit_exp, modulus);
    let mut acc = 1u64;
    for i in 0..pn {
        if acc == s {
            return Ok(i);
        }
        acc = mul_mod(acc, gs, modulus);
    }
    unreachable!("p-part dlog failed for {x} mod {modulus}")
}

fn inv_mod(a: u64, m: u64) -> u64 {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    assert_eq!(r0, 1, "not invertible");
    (((s0 % m as i128) + m as i128) % m as i128) as u64
}

/// Unified plain character evaluation used by the detectors: q = p routes to
/// the wild character, q ≡ 1 mod p to the tame one.
pub fn char_eval(ctx: &DlogContext, p: u64, q: u64, n: u32, x: u64) -> Result<u64> {
    if q == p {
        char_eval_wild(p, n, x)
    } else {
        char_eval_tame(ctx, p, q, n, x)
    }
}

/// Modified character: strongly multiplicative, with the q-part of the
/// argument dropped (so `ψ_q(q) = 0` additively).
pub fn char_eval_modified(ctx: &DlogContext, p: u64, q: u64, n: u32, x: u64) -> Result<u64> {
    let mut x = x;
    if q != p {
        while x % q == 0 {
            x /= q;
        }
    } else {
        while x % p == 0 {
            x /= p;
        }
    }
    if x == 1 {
        return Ok(0);
    }
    char_eval(ctx, p, q, n, x)
}

// ---------------------------------------------------------------------------
// parametrizing tuples and handles
// ---------------------------------------------------------------------------

/// A point of the parametrizing set: squarefree, pairwise coprime positive
/// integers `w_a` indexed by the nonidentity elements of A, with
/// `q | w_a ⇒ q = p or q ≡ 1 mod ord(a)`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ExtensionTuple {
    pub group: AbelianPGroup,
    /// (a, w_a) with w_a > 1, sorted by element encoding
    pub parts: Vec<(GroupElement, u64)>,
}

impl ExtensionTuple {
    pub fn new(group: &AbelianPGroup, parts: Vec<(GroupElement, u64)>) -> Result<Self> {
        let p = group.p();
        let mut seen_primes = Vec::new();
        for (a, w) in &parts {
            if group.is_zero(a) {
                return Err(Error::Parse("tuple indexed by the identity".into()));
            }
            if *w <= 1 {
                return Err(Error::Parse("tuple parts must be > 1".into()));
            }
            let ord = group.order_of(a);
            for (q, e) in factorize(*w) {
                if e > 1 {
                    return Err(Error::Parse(format!("{w} is not squarefree")));
                }
                if seen_primes.contains(&q) {
                    return Err(Error::Parse(format!("prime {q} repeated across parts")));
                }
                if q != p && q % ord != 1 {
                    return Err(Error::Parse(format!("prime {q} not 1 mod {ord}")));
                }
                seen_primes.push(q);
            }
        }
        let mut parts = parts;
        parts.sort_by(|x, y| x.0.cmp(&y.0));
        Ok(ExtensionTuple { group: group.clone(), parts })
    }

    /// Conductor radical: the product of the ramified primes.
    pub fn conductor(&self) -> u64 {
        self.parts.iter().map(|(_, w)| w).product()
    }

    pub fn is_surjective(&self) -> bool {
        let gens: Vec<GroupElement> = self.parts.iter().map(|(a, _)| a.clone()).collect();
        self.group.span(&gens).len() as u64 == self.group.order()
    }

    /// Class of the tame generator at a ramified prime q, i.e. the `a` with
    /// `q | w_a`; zero for unramified q.
    pub fn inertia_class(&self, q: u64) -> GroupElement {
        for (a, w) in &self.parts {
            if w % q == 0 {
                return a.clone();
            }
        }
        self.group.zero()
    }

    pub fn ramified_primes(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .parts
            .iter()
            .flat_map(|(_, w)| factorize(*w).into_iter().map(|(q, _)| q))
            .collect();
        v.sort_unstable();
        v
    }

    /// Textual encoding `a:w_a;a':w_{a'}` with elements as comma-joined coordinates.
    pub fn encode(&self) -> String {
        self.parts
            .iter()
            .map(|(a, w)| format!("{}:{}", a.encode(), w))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn decode(group: &AbelianPGroup, s: &str) -> Result<Self> {
        let mut parts = Vec::new();
        for chunk in s.split(';') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            let (a, w) = chunk
                .rsplit_once(':')
                .ok_or_else(|| Error::Parse(format!("bad tuple chunk {chunk:?}")))?;
            let a = GroupElement::decode(group, a)?;
            let w: u64 = w.parse().map_err(|_| Error::Parse(format!("bad w in {chunk:?}")))?;
            parts.push((a, w));
        }
        ExtensionTuple::new(group, parts)
    }
}

/// An enumerated A-extension with evaluable local data. The tame generator at
/// each ramified prime q is identified with the least primitive root mod q;
/// the wild component (if p ramifies with inertia of order p^m) lives on the
/// p-Sylow part of (Z/p^{m+1})^×.
#[derive(Clone)]
pub struct ExtensionHandle {
    pub tuple: ExtensionTuple,
    /// ramified primes q ≠ p with their inertia class
    pub tame: Vec<(u64, GroupElement)>,
    /// Some((m, a)) when p | w_a with ord(a) = p^m
    pub wild: Option<(u32, GroupElement)>,
    pub modulus: u64,
}

impl fmt::Debug for ExtensionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Handle(f={}, {})", self.tuple.conductor(), self.tuple.encode())
    }
}

/// Local data of a handle at one place.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalPlaceData {
    pub v: Place,
    pub inertia_gen: GroupElement,
    pub frob_part: GroupElement,
    pub d_elements: Vec<GroupElement>,
    pub i_elements: Vec<GroupElement>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Place {
    Finite(u64),
    Infinite,
}

impl ExtensionHandle {
    pub fn new(tuple: ExtensionTuple) -> Self {
        let p = tuple.group.p();
        let mut tame = Vec::new();
        let mut wild = None;
        for (a, w) in &tuple.parts {
            for (q, _) in factorize(*w) {
                if q == p {
                    let m = tuple.group.order_of(a).trailing_zeros(); // unused; p-power order
                    let _ = m;
                    let ordm = {
                        let mut m = 0u32;
                        let mut o = tuple.group.order_of(a);
                        while o > 1 {
                            o /= p;
                            m += 1;
                        }
                        m
                    };
                    wild = Some((ordm, a.clone()));
                } else {
                    tame.push((q, a.clone()));
                }
            }
        }
        tame.sort_by_key(|(q, _)| *q);
        let mut modulus: u64 = tame.iter().map(|(q, _)| q).product();
        if let Some((m, _)) = &wild {
            modulus *= p.pow(m + 1);
        }
        ExtensionHandle { tuple, tame, wild, modulus }
    }

    pub fn group(&self) -> &AbelianPGroup {
        &self.tuple.group
    }

    pub fn conductor(&self) -> u64 {
        self.tuple.conductor()
    }

    /// All ramified places (tame primes, plus p if wild).
    pub fn ramified(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.tame.iter().map(|(q, _)| *q).collect();
        if self.wild.is_some() {
            v.push(self.group().p());
        }
        v.sort_unstable();
        v
    }

    /// φ(Frob_ℓ) for ℓ coprime to the modulus, by component-wise discrete logs.
    pub fn frobenius_at(&self, ctx: &DlogContext, ell: u64) -> Result<GroupElement> {
        if ell == 0 || self.modulus % ell.max(1) == 0 && self.modulus % ell == 0 {
            // fallthrough to the gcd test below
        }
        if crate::abelian::gcd(ell, self.modulus) != 1 {
            return Err(Error::OutOfRange(format!("{ell} divides the modulus")));
        }
        Ok(self.eval_away_from(ctx, 0, ell))
    }

    /// Evaluation of all components except the one at `skip` (0 = none).
    fn eval_away_from(&self, ctx: &DlogContext, skip: u64, x: u64) -> GroupElement {
        let group = self.group();
        let p = group.p();
        let mut acc = group.zero();
        for (q, a) in &self.tame {
            if *q == skip {
                continue;
            }
            let ind = ctx.dlog(*q, x % *q);
            acc = group.add(&acc, &group.smul(ind as i64, a));
        }
        if let Some((m, a)) = &self.wild {
            if skip != p {
                let d = char_eval_wild(p, *m, x).expect("x coprime to modulus");
                acc = group.add(&acc, &group.smul(d as i64, a));
            }
        }
        acc
    }

    /// Inertia, Frobenius part and decomposition data at a place.
    pub fn local_data_at(&self, ctx: &DlogContext, v: Place) -> LocalPlaceData {
        let group = self.group();
        match v {
            Place::Infinite => LocalPlaceData {
                v,
                inertia_gen: group.zero(),
                frob_part: group.zero(),
                d_elements: vec![group.zero()],
                i_elements: vec![group.zero()],
            },
            Place::Finite(q) => {
                let inertia_gen = self.tuple.inertia_class(q);
                let frob_part = self.eval_away_from(ctx, q, q);
                let i_elements = group.span(std::slice::from_ref(&inertia_gen));
                let d_elements = group.span(&[inertia_gen.clone(), frob_part.clone()]);
                LocalPlaceData { v, inertia_gen, frob_part, d_elements, i_elements }
            }
        }
    }

    /// Round trip back to the parametrizing tuple.
    pub fn ev_roundtrip(&self) -> ExtensionTuple {
        let group = self.group().clone();
        let mut acc: BTreeMap<GroupElement, u64> = BTreeMap::new();
        for (q, a) in &self.tame {
            *acc.entry(a.clone()).or_insert(1) *= q;
        }
        if let Some((_, a)) = &self.wild {
            *acc.entry(a.clone()).or_insert(1) *= group.p();
        }
        ExtensionTuple::new(&group, acc.into_iter().collect()).expect("handle tuple is valid")
    }
}

// ---------------------------------------------------------------------------
// special primes and the rank predictor
// ---------------------------------------------------------------------------

/// For each ramified place: the largest level i ≤ d at which it is special,
/// or 0 when not special at any level (cannot happen for ramified places at
/// d ≥ 1). Also returns the set special at level d itself.
#[derive(Clone, Debug)]
pub struct SpecialPrimeReport {
    pub per_place: Vec<(u64, u32)>,
    pub special_at_d: Vec<u64>,
}

pub fn special_primes(
    ctx: &DlogContext,
    handle: &ExtensionHandle,
    block: &IdempotentBlock,
    d: u32,
) -> Result<SpecialPrimeReport> {
    let r_e = block.ie_exponent()?;
    if d == 0 || d > r_e {
        return Err(Error::OutOfRange(format!("level d = {d} out of 1..={r_e}")));
    }
    let group = handle.group();
    let mut per_place = Vec::new();
    let mut special_at_d = Vec::new();
    for q in handle.ramified() {
        let data = handle.local_data_at(ctx, Place::Finite(q));
        let inertia_order = group.order_of(&data.inertia_gen);
        let mut best = 0u32;
        for i in 1..=d {
            if block.subgroup_acts_trivially(&data.d_elements, i)
                && inertia_order % block.module_exponent(i) == 0
            {
                best = i;
            }
        }
        if best == d {
            special_at_d.push(q);
        }
        per_place.push((q, best));
    }
    Ok(SpecialPrimeReport { per_place, special_at_d })
}

/// Monotone check used by tests: special at level i+1 implies special at i.
pub fn special_levels_are_monotone(
    ctx: &DlogContext,
    handle: &ExtensionHandle,
    block: &IdempotentBlock,
    d: u32,
) -> bool {
    let group = handle.group();
    for q in handle.ramified() {
        let data = handle.local_data_at(ctx, Place::Finite(q));
        let inertia_order = group.order_of(&data.inertia_gen);
        let mut prev = true;
        for i in 1..=d {
            let s = block.subgroup_acts_trivially(&data.d_elements, i)
                && inertia_order % block.module_exponent(i) == 0;
            if s && !prev {
                return false;
            }
            prev = s;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// enumeration
// ---------------------------------------------------------------------------

/// Smallest-prime-factor sieve for conductor enumeration.
pub struct Sieve {
    pub spf: Vec<u32>,
}

impl Sieve {
    pub fn new(limit: u64) -> Sieve {
        let n = limit as usize + 1;
        let mut spf = vec![0u32; n];
        let mut i = 2usize;
        while i < n {
            if spf[i] == 0 {
                let mut j = i;
                while j < n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
            i += 1;
        }
        Sieve { spf }
    }

    /// Prime factors of n, or None if n is not squarefree.
    pub fn squarefree_factors(&self, mut n: u64) -> Option<Vec<u64>> {
        let mut out = Vec::new();
        while n > 1 {
            let q = self.spf[n as usize] as u64;
            n /= q;
            if n % q == 0 {
                return None;
            }
            out.push(q);
        }
        Some(out)
    }
}

/// All surjective parametrizing tuples with conductor at most `bound`, in
/// nondecreasing conductor order (ties broken by the textual encoding).
pub fn enumerate_extensions(group: &AbelianPGroup, bound: u64) -> Vec<ExtensionHandle> {
    let sieve = Sieve::new(bound.max(3));
    enumerate_extensions_with_sieve(group, bound, &sieve)
}

pub fn enumerate_extensions_with_sieve(
    group: &AbelianPGroup,
    bound: u64,
    sieve: &Sieve,
) -> Vec<ExtensionHandle> {
    let p = group.p();
    let nontrivial: Vec<GroupElement> =
        group.elements().into_iter().filter(|a| !group.is_zero(a)).collect();
    let mut out = Vec::new();
    for n in 2..=bound {
        let Some(primes) = sieve.squarefree_factors(n) else { continue };
        // admissible: every prime is p or 1 mod p
        if primes.iter().any(|&q| q != p && q % p != 1) {
            continue;
        }
        // distribute primes over classes
        let mut assignment: Vec<GroupElement> = Vec::with_capacity(primes.len());
        distribute(group, p, &primes, 0, &mut assignment, &nontrivial, &mut |assign| {
            let mut acc: BTreeMap<GroupElement, u64> = BTreeMap::new();
            for (q, a) in primes.iter().zip(assign) {
                *acc.entry(a.clone()).or_insert(1) *= q;
            }
            let tuple = ExtensionTuple::new(group, acc.into_iter().collect())
                .expect("constructed tuples are valid");
            if tuple.is_surjective() {
                out.push(ExtensionHandle::new(tuple));
            }
        });
    }
    out.sort_by(|a, b| {
        a.conductor().cmp(&b.conductor()).then_with(|| a.tuple.encode().cmp(&b.tuple.encode()))
    });
    out
}

fn distribute(
    group: &AbelianPGroup,
    p: u64,
    primes: &[u64],
    idx: usize,
    assignment: &mut Vec<GroupElement>,
    nontrivial: &[GroupElement],
    emit: &mut impl FnMut(&[GroupElement]),
) {
    if idx == primes.len() {
        emit(assignment);
        return;
    }
    let q = primes[idx];
    for a in nontrivial {
        if q != p && q % group.order_of(a) != 1 {
            continue;
        }
        assignment.push(a.clone());
        distribute(group, p, primes, idx + 1, assignment, nontrivial, emit);
        assignment.pop();
    }
}
