//! The character-sum laboratory: classification of the ramification classes
//! behind the local conditions, the index sets of the expanded average, the
//! detector identities (per extension and the thresholded outer sum, both in
//! exact cyclotomic arithmetic), and the unlinked-set combinatorics with the
//! classification checker and weights.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};

use crate::abelian::{AbelianPGroup, GroupChar, GroupElement};
use crate::blocks::IdempotentBlock;
use crate::cyclo::CycloRing;
use crate::ext::{
    char_eval, enumerate_extensions_with_sieve, DlogContext, ExtensionHandle, Place, Sieve,
};
use crate::selmer::{dual_line_for_classes, dual_selmer_mu_p, Line};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// classification of (inertia class, Frobenius class) pairs
// ---------------------------------------------------------------------------

/// Membership class of a pair (a, b): inside the unramified conditions (J'),
/// with the zero condition (J'' ⊆ J'), or neither.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum JClass {
    /// L_q = 0
    JDoublePrime,
    /// 0 ≠ L_q ⊆ unramified
    JPrimeOnly,
    /// L_q ⊄ unramified; carries an exponent e(a, b)
    Neither,
}

#[derive(Clone, Debug)]
pub struct PairClass {
    pub a: GroupElement,
    pub b: GroupElement,
    pub class: JClass,
    pub line: Line,
    /// e(a, b) for pairs outside J'
    pub exponent: Option<u64>,
}

/// Classification of every pair in (A − {id}) × A for a block and level.
pub fn classify_pairs(
    group: &AbelianPGroup,
    block: &IdempotentBlock,
    d: u32,
) -> Result<Vec<PairClass>> {
    let p = group.p();
    let mut out = Vec::new();
    for a in group.elements() {
        if group.is_zero(&a) {
            continue;
        }
        for b in group.elements() {
            let line = dual_line_for_classes(block, d, &a, &b)?;
            let (class, exponent) = match line {
                Line::Zero => (JClass::JDoublePrime, None),
                Line::Span { sigma: 0, .. } => (JClass::JPrimeOnly, None),
                Line::Span { sigma: 1, frob } => (JClass::Neither, Some((p - frob % p) % p)),
                _ => unreachable!("dual lines are never full"),
            };
            out.push(PairClass { a: a.clone(), b: b.clone(), class, exponent, line });
        }
    }
    Ok(out)
}

pub struct PairTable {
    pub group: AbelianPGroup,
    map: BTreeMap<(GroupElement, GroupElement), PairClass>,
}

impl PairTable {
    pub fn new(group: &AbelianPGroup, block: &IdempotentBlock, d: u32) -> Result<PairTable> {
        let map = classify_pairs(group, block, d)?
            .into_iter()
            .map(|c| ((c.a.clone(), c.b.clone()), c))
            .collect();
        Ok(PairTable { group: group.clone(), map })
    }

    pub fn get(&self, a: &GroupElement, b: &GroupElement) -> &PairClass {
        &self.map[&(a.clone(), b.clone())]
    }

    pub fn iter(&self) -> impl Iterator<Item = &PairClass> {
        self.map.values()
    }
}

// ---------------------------------------------------------------------------
// index entries and the unlinked relation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum IndexTag {
    /// (a, b, χ, c, ν) with (a, b) outside J'
    WithNu,
    /// (a, b, χ, c) with (a, b) in J''
    WithC,
    /// (a, b, χ) with (a, b) in J' − J''
    Plain,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct IndexEntry {
    pub tag: IndexTag,
    pub a: GroupElement,
    pub b: GroupElement,
    pub chi: GroupChar,
    pub c: u64,
    pub nu: u64,
    /// e(a, b) for entries outside J', 0 otherwise
    pub e_ab: u64,
}

/// The full index set for one classification table.
pub fn index_set(table: &PairTable) -> Vec<IndexEntry> {
    let group = &table.group;
    let p = group.p();
    let chars = group.characters();
    let mut out = Vec::new();
    for pc in table.iter() {
        for chi in &chars {
            match pc.class {
                JClass::Neither => {
                    for c in 0..p {
                        for nu in 0..p {
                            out.push(IndexEntry {
                                tag: IndexTag::WithNu,
                                a: pc.a.clone(),
                                b: pc.b.clone(),
                                chi: chi.clone(),
                                c,
                                nu,
                                e_ab: pc.exponent.unwrap(),
                            });
                        }
                    }
                }
                JClass::JDoublePrime => {
                    for c in 0..p {
                        out.push(IndexEntry {
                            tag: IndexTag::WithC,
                            a: pc.a.clone(),
                            b: pc.b.clone(),
                            chi: chi.clone(),
                            c,
                            nu: 0,
                            e_ab: 0,
                        });
                    }
                }
                JClass::JPrimeOnly => {
                    out.push(IndexEntry {
                        tag: IndexTag::Plain,
                        a: pc.a.clone(),
                        b: pc.b.clone(),
                        chi: chi.clone(),
                        c: 0,
                        nu: 0,
                        e_ab: 0,
                    });
                }
            }
        }
    }
    out.sort();
    out
}

/// The one-sided unlinked condition: vanishing of
/// `χ(u1)(a(u2)) + [u1,u2 ∈ I'] c(u2)ν(u1) + [u1 ∈ I', u2 ∈ I''] c(u2)ν(u1)`
/// in Q/Z, evaluated in Z/p^n with the F_p terms scaled by p^{n−1}.
pub fn unlinked_one_sided(group: &AbelianPGroup, u1: &IndexEntry, u2: &IndexEntry) -> bool {
    let p = group.p();
    let n = group.exponent_log();
    let pn = p.pow(n);
    let scale = pn / p;
    let mut acc = u1.chi.eval(group, &u2.a) % pn;
    let cross = (u1.tag == IndexTag::WithNu && u2.tag == IndexTag::WithNu)
        || (u1.tag == IndexTag::WithNu && u2.tag == IndexTag::WithC);
    if cross {
        acc = (acc + u2.c * u1.nu % p * scale) % pn;
    }
    acc == 0
}

/// Two distinct entries are unlinked when both orientations vanish.
pub fn unlinked_pair(group: &AbelianPGroup, u1: &IndexEntry, u2: &IndexEntry) -> bool {
    unlinked_one_sided(group, u1, u2) && unlinked_one_sided(group, u2, u1)
}

// ---------------------------------------------------------------------------
// the canonical maximal unlinked sets
// ---------------------------------------------------------------------------

fn trivial_char(group: &AbelianPGroup) -> GroupChar {
    GroupChar { target_exponent: group.exponent_log(), values: vec![0; group.rank()] }
}

/// Character attached to `x · f` for a homomorphism f: A → F_p given by its
/// values on the generators.
fn char_from_fp_hom(group: &AbelianPGroup, f: &[u64], x: u64) -> GroupChar {
    let n = group.exponent_log();
    let p = group.p();
    let pn = p.pow(n);
    let scale = pn / p;
    GroupChar {
        target_exponent: n,
        values: f.iter().map(|&v| v * x % p * scale % pn).collect(),
    }
}

/// The distinguished maximal unlinked set 𝒰.
pub fn canonical_u(table: &PairTable) -> Vec<IndexEntry> {
    let group = &table.group;
    let p = group.p();
    let chi0 = trivial_char(group);
    let mut out = Vec::new();
    for pc in table.iter() {
        match pc.class {
            JClass::JPrimeOnly => out.push(IndexEntry {
                tag: IndexTag::Plain,
                a: pc.a.clone(),
                b: pc.b.clone(),
                chi: chi0.clone(),
                c: 0,
                nu: 0,
                e_ab: 0,
            }),
            JClass::JDoublePrime => {
                for c in 0..p {
                    out.push(IndexEntry {
                        tag: IndexTag::WithC,
                        a: pc.a.clone(),
                        b: pc.b.clone(),
                        chi: chi0.clone(),
                        c,
                        nu: 0,
                        e_ab: 0,
                    });
                }
            }
            JClass::Neither => {
                for c in 0..p {
                    out.push(IndexEntry {
                        tag: IndexTag::WithNu,
                        a: pc.a.clone(),
                        b: pc.b.clone(),
                        chi: chi0.clone(),
                        c,
                        nu: 0,
                        e_ab: pc.exponent.unwrap(),
                    });
                }
            }
        }
    }
    out.sort();
    out
}

/// All admissible homomorphisms f: A → F_p (vanishing on the first
/// coordinates of the plain index entries), as generator-value vectors.
pub fn admissible_homs(table: &PairTable) -> Vec<Vec<u64>> {
    let group = &table.group;
    let p = group.p();
    let must_vanish: BTreeSet<GroupElement> = table
        .iter()
        .filter(|pc| pc.class == JClass::JPrimeOnly)
        .map(|pc| pc.a.clone())
        .collect();
    let mut out = Vec::new();
    let mut cur = vec![0u64; group.rank()];
    loop {
        let f = cur.clone();
        let vanishes = must_vanish.iter().all(|a| {
            let mut acc = 0u64;
            for (v, c) in f.iter().zip(&a.coords) {
                acc = (acc + v * (c % p)) % p;
            }
            acc == 0
        });
        if vanishes {
            out.push(f);
        }
        let mut i = 0;
        loop {
            if i == group.rank() {
                return out;
            }
            cur[i] += 1;
            if cur[i] < p {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

/// The maximal unlinked set 𝒰_f for an admissible f.
pub fn canonical_u_f(table: &PairTable, f: &[u64]) -> Vec<IndexEntry> {
    let group = &table.group;
    let p = group.p();
    let chi0 = trivial_char(group);
    let f_of = |a: &GroupElement| -> u64 {
        let mut acc = 0u64;
        for (v, c) in f.iter().zip(&a.coords) {
            acc = (acc + v * (c % p)) % p;
        }
        acc
    };
    let mut out = Vec::new();
    for pc in table.iter() {
        match pc.class {
            JClass::JPrimeOnly => out.push(IndexEntry {
                tag: IndexTag::Plain,
                a: pc.a.clone(),
                b: pc.b.clone(),
                chi: chi0.clone(),
                c: 0,
                nu: 0,
                e_ab: 0,
            }),
            JClass::JDoublePrime => out.push(IndexEntry {
                tag: IndexTag::WithC,
                a: pc.a.clone(),
                b: pc.b.clone(),
                chi: chi0.clone(),
                c: f_of(&pc.a),
                nu: 0,
                e_ab: 0,
            }),
            JClass::Neither => {
                for x in 0..p {
                    out.push(IndexEntry {
                        tag: IndexTag::WithNu,
                        a: pc.a.clone(),
                        b: pc.b.clone(),
                        chi: char_from_fp_hom(group, f, x),
                        c: f_of(&pc.a),
                        nu: (p - x) % p,
                        e_ab: pc.exponent.unwrap(),
                    });
                }
            }
        }
    }
    out.sort();
    out
}

/// 𝒰 together with the maximal 𝒰_f. Every candidate is verified unlinked;
/// a 𝒰_f that is a strict subset of another unlinked set (which happens
/// exactly in layers without non-J' pairs, where 𝒰_f ⊆ 𝒰) is dropped.
pub fn canonical_unlinked_sets(table: &PairTable) -> Result<Vec<Vec<IndexEntry>>> {
    let idx = index_set(table);
    let u = canonical_u(table);
    if !is_unlinked_set(&table.group, &u) || !is_maximal_unlinked(&table.group, &u, &idx) {
        return Err(Error::IdentityFailure("the distinguished set fails its checks".into()));
    }
    let mut out = vec![u];
    for f in admissible_homs(table) {
        let set = canonical_u_f(table, &f);
        if !is_unlinked_set(&table.group, &set) {
            return Err(Error::IdentityFailure("a canonical set is not unlinked".into()));
        }
        if is_maximal_unlinked(&table.group, &set, &idx) {
            out.push(set);
        }
    }
    out.dedup();
    Ok(out)
}

pub fn is_unlinked_set(group: &AbelianPGroup, set: &[IndexEntry]) -> bool {
    // pairwise unlinked and the projection to (A − id) × A surjective
    let fibers: BTreeSet<(GroupElement, GroupElement)> =
        set.iter().map(|u| (u.a.clone(), u.b.clone())).collect();
    let expected = (group.order() - 1) * group.order();
    if fibers.len() as u64 != expected {
        return false;
    }
    for (i, u1) in set.iter().enumerate() {
        for u2 in set.iter().skip(i + 1) {
            if !unlinked_pair(group, u1, u2) {
                return false;
            }
        }
    }
    true
}

pub fn is_maximal_unlinked(
    group: &AbelianPGroup,
    set: &[IndexEntry],
    universe: &[IndexEntry],
) -> bool {
    let members: BTreeSet<&IndexEntry> = set.iter().collect();
    for z in universe {
        if members.contains(z) {
            continue;
        }
        if set.iter().all(|u| unlinked_pair(group, u, z)) {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// randomized maximal unlinked sets and their classification
// ---------------------------------------------------------------------------

/// Pairwise compatibility bitset over the index set, for fast greedy runs.
pub struct UnlinkedGraph {
    pub entries: Vec<IndexEntry>,
    words: usize,
    bits: Vec<u64>,
}

impl UnlinkedGraph {
    pub fn new(group: &AbelianPGroup, entries: Vec<IndexEntry>) -> UnlinkedGraph {
        let n = entries.len();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..n {
                if i != j && unlinked_pair(group, &entries[i], &entries[j]) {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        UnlinkedGraph { entries, words, bits }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Greedy maximal unlinked set: one random seed entry per (a, b) fiber
    /// (restarted when a fiber becomes uncoverable), then a single shuffled
    /// extension pass. Compatibility only shrinks as entries are added, so
    /// one pass reaches a maximal set.
    pub fn random_maximal<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let n = self.entries.len();
        let fibers: Vec<Vec<usize>> = {
            let mut m: BTreeMap<(GroupElement, GroupElement), Vec<usize>> = BTreeMap::new();
            for (i, e) in self.entries.iter().enumerate() {
                m.entry((e.a.clone(), e.b.clone())).or_default().push(i);
            }
            m.into_values().collect()
        };
        'attempt: loop {
            let mut compatible = vec![!0u64; self.words];
            if n % 64 != 0 {
                compatible[self.words - 1] = (1u64 << (n % 64)) - 1;
            }
            let mut chosen: Vec<usize> = Vec::new();
            let add = |i: usize, compatible: &mut Vec<u64>, chosen: &mut Vec<usize>| {
                chosen.push(i);
                for (w, r) in compatible.iter_mut().zip(self.row(i)) {
                    *w &= r;
                }
            };
            let mut fiber_list: Vec<&Vec<usize>> = fibers.iter().collect();
            fiber_list.shuffle(rng);
            for fiber in &fiber_list {
                let mut cands: Vec<usize> = fiber
                    .iter()
                    .copied()
                    .filter(|&i| compatible[i / 64] >> (i % 64) & 1 == 1)
                    .collect();
                if cands.is_empty() {
                    continue 'attempt;
                }
                cands.shuffle(rng);
                add(cands[0], &mut compatible, &mut chosen);
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            for i in order {
                if compatible[i / 64] >> (i % 64) & 1 == 1 && !chosen.contains(&i) {
                    add(i, &mut compatible, &mut chosen);
                }
            }
            chosen.sort_unstable();
            return chosen;
        }
    }
}

/// Verdict of the classification of a maximal unlinked set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnlinkedVerdict {
    CanonicalU,
    AdmissibleUf,
    NearIso,
    ConditionRegime,
}

/// Checks the trichotomy for a maximal unlinked set.
pub fn classify_maximal_unlinked(
    table: &PairTable,
    set: &[IndexEntry],
    universe: &[IndexEntry],
) -> Result<UnlinkedVerdict> {
    let group = &table.group;
    if !is_unlinked_set(group, set) || !is_maximal_unlinked(group, set, universe) {
        return Err(Error::OutOfRange("input set is not maximal unlinked".into()));
    }
    let sorted: Vec<IndexEntry> = {
        let mut s = set.to_vec();
        s.sort();
        s
    };
    if sorted == canonical_u(table) {
        return Ok(UnlinkedVerdict::CanonicalU);
    }
    for f in admissible_homs(table) {
        if sorted == canonical_u_f(table, &f) {
            return Ok(UnlinkedVerdict::AdmissibleUf);
        }
    }
    // near-iso: removing one element makes the fiber projection bijective
    let fiber_count = ((group.order() - 1) * group.order()) as usize;
    if set.len() == fiber_count + 1 {
        for skip in 0..set.len() {
            let mut fibers = BTreeSet::new();
            let mut inj = true;
            for (i, u) in set.iter().enumerate() {
                if i == skip {
                    continue;
                }
                if !fibers.insert((u.a.clone(), u.b.clone())) {
                    inj = false;
                    break;
                }
            }
            if inj && fibers.len() == fiber_count {
                return Ok(UnlinkedVerdict::NearIso);
            }
        }
    }
    // the four simultaneous conditions
    let d = group.rank() as usize;
    let special: Vec<&IndexEntry> = set
        .iter()
        .filter(|u| u.tag == IndexTag::WithNu && (!u.chi.is_trivial() || u.nu != 0))
        .collect();
    let c1 = !special.is_empty() && special.len() <= 2 * d;
    let plain_as: BTreeSet<GroupElement> =
        table.iter().filter(|pc| pc.class == JClass::JPrimeOnly).map(|pc| pc.a.clone()).collect();
    let c2 = {
        let gens: Vec<GroupElement> = plain_as.iter().cloned().collect();
        (group.span(&gens).len() as u64) < group.order()
    };
    let c3 = set
        .iter()
        .filter(|u| u.tag != IndexTag::WithNu)
        .all(|u| u.chi.is_trivial());
    let c4 = {
        let mut ok = true;
        for (i, u1) in set.iter().enumerate() {
            for u2 in set.iter().skip(i + 1) {
                let same_fiber = u1.a == u2.a && u1.b == u2.b;
                if !same_fiber {
                    continue;
                }
                let both_c = u1.tag == IndexTag::WithC
                    && u2.tag == IndexTag::WithC
                    && u1.chi.is_trivial()
                    && u2.chi.is_trivial();
                let both_nu0 = u1.tag == IndexTag::WithNu
                    && u2.tag == IndexTag::WithNu
                    && u1.chi.is_trivial()
                    && u2.chi.is_trivial()
                    && u1.nu == 0
                    && u2.nu == 0;
                if (both_c || both_nu0) && u1.c != u2.c {
                    ok = false;
                }
            }
        }
        ok
    };
    if c1 && c2 && c3 && c4 {
        return Ok(UnlinkedVerdict::ConditionRegime);
    }
    Err(Error::IdentityFailure("maximal unlinked set escapes the classification".into()))
}

// ---------------------------------------------------------------------------
// weights
// ---------------------------------------------------------------------------

fn euler_phi(n: u64) -> u64 {
    let mut n = n;
    let mut out = n;
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out -= out / d;
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

fn t_of(entry: &IndexEntry) -> u64 {
    match entry.tag {
        IndexTag::Plain => 1,
        _ => 0, // replaced by p at the call site
    }
}

/// `wt(U)` as an exact rational.
pub fn weight_of_set(
    group: &AbelianPGroup,
    universe: &[IndexEntry],
    set: &[IndexEntry],
) -> BigRational {
    let p = group.p();
    let a_ord = group.order();
    let members: BTreeSet<&IndexEntry> = set.iter().collect();
    let mut inside = BigRational::zero();
    let mut outside = BigRational::zero();
    for u in universe {
        let t = if t_of(u) == 1 { 1 } else { p };
        let denom = BigInt::from(t * a_ord * euler_phi(group.order_of(&u.a)));
        let term = BigRational::new(BigInt::one(), denom);
        if members.contains(u) {
            inside += term;
        } else {
            outside += term;
        }
    }
    let eps = BigRational::new(
        BigInt::one(),
        BigInt::from(10 * p.pow(3)) * BigInt::from(a_ord).pow(5),
    );
    inside + eps * outside
}

/// The dominant part `Σ_{i∈U} 1/(t(i)|A|φ(ord a(i)))` alone.
pub fn weight_dominant(group: &AbelianPGroup, set: &[IndexEntry]) -> BigRational {
    let p = group.p();
    let a_ord = group.order();
    let mut acc = BigRational::zero();
    for u in set {
        let t = if t_of(u) == 1 { 1 } else { p };
        acc += BigRational::new(
            BigInt::one(),
            BigInt::from(t * a_ord * euler_phi(group.order_of(&u.a))),
        );
    }
    acc
}

/// RHS of the weight claim: `Σ_{a ≠ id} 1/φ(ord(a))`.
pub fn weight_budget(group: &AbelianPGroup) -> BigRational {
    let mut acc = BigRational::zero();
    for a in group.elements() {
        if !group.is_zero(&a) {
            acc += BigRational::new(BigInt::one(), BigInt::from(euler_phi(group.order_of(&a))));
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// detector identity, per extension
// ---------------------------------------------------------------------------

/// Both sides of the per-extension identity at level d: the dual-Selmer
/// count on the left, the expanded character sum (an exact integer after
/// clearing p-denominators) on the right.
#[derive(Clone, Debug)]
pub struct DetectorReport {
    pub lhs: u64,
    /// rhs accumulated as an integer, scaled by p^{detector_count}
    pub rhs_scaled: i128,
    pub detector_count: u32,
}

pub fn detector_identity_per_extension(
    ctx: &DlogContext,
    handle: &ExtensionHandle,
    block: &IdempotentBlock,
    d: u32,
) -> Result<DetectorReport> {
    let group = handle.group();
    let p = group.p();
    let ds = dual_selmer_mu_p(ctx, handle, block, d)?;
    let lhs = p.pow(ds.order_log);

    // per-prime classes and lines
    let mut zero_primes = Vec::new(); // J'' : detector on the residue
    let mut nu_primes = Vec::new(); // outside J': detector with e(a,b)
    for (q, line) in &ds.lines {
        match line {
            Line::Zero => zero_primes.push(*q),
            Line::Span { sigma: 0, .. } => {} // inside J', no condition beyond support
            Line::Span { sigma: 1, frob } => nu_primes.push((*q, (p - frob % p) % p)),
            _ => unreachable!(),
        }
    }
    let detector_count = (zero_primes.len() + nu_primes.len()) as u32;

    let ring = CycloRing::new(p, 1);
    let mut rhs = ring.zero();
    // α and the assignment of each non-J' prime to an exponent ν
    let assignments = p.pow(nu_primes.len() as u32);
    for alpha in 0..p {
        for code in 0..assignments {
            let mut c = code;
            let nus: Vec<u64> = (0..nu_primes.len())
                .map(|_| {
                    let v = c % p;
                    c /= p;
                    v
                })
                .collect();
            // κ = p^α ∏ q_i^{ν_i}
            let mut term = ring.one();
            for (i, (q, e_ab)) in nu_primes.iter().enumerate() {
                // (1/p) Σ_c ζ^{c(ν e + χ_q(κ/(−q)^ν))}
                let mut chi_val = alpha * char_eval(ctx, p, *q, 1, p)? % p;
                for (i2, (q2, _)) in nu_primes.iter().enumerate() {
                    if i2 != i && nus[i2] != 0 {
                        chi_val = (chi_val + nus[i2] * char_eval(ctx, p, *q, 1, *q2)?) % p;
                    }
                }
                let e = (nus[i] * e_ab + chi_val) % p;
                let mut factor = ring.zero();
                for cc in 0..p {
                    ring.add_assign(&mut factor, &ring.root_power(cc * e % p));
                }
                term = ring.mul(&term, &factor);
            }
            for q in &zero_primes {
                let mut chi_val = alpha * char_eval(ctx, p, *q, 1, p)? % p;
                for (i2, (q2, _)) in nu_primes.iter().enumerate() {
                    if nus[i2] != 0 {
                        chi_val = (chi_val + nus[i2] * char_eval(ctx, p, *q, 1, *q2)?) % p;
                    }
                }
                let mut factor = ring.zero();
                for cc in 0..p {
                    ring.add_assign(&mut factor, &ring.root_power(cc * chi_val % p));
                }
                term = ring.mul(&term, &factor);
            }
            ring.add_assign(&mut rhs, &term);
        }
    }
    let rhs_scaled = ring.as_integer(&rhs).ok_or_else(|| {
        Error::IdentityFailure(format!("rhs not an integer for {handle:?} level {d}"))
    })?;
    let expect = (lhs as i128) * (p as i128).pow(detector_count);
    if rhs_scaled != expect {
        return Err(Error::IdentityFailure(format!(
            "detector identity fails on {handle:?} level {d}: lhs {lhs} * p^{detector_count} != rhs {rhs_scaled}"
        )));
    }
    Ok(DetectorReport { lhs, rhs_scaled, detector_count })
}

// ---------------------------------------------------------------------------
// the outer thresholded character-sum identity
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct OuterReport {
    pub lhs: i128,
    pub rhs: BigRational,
    pub family_size: usize,
    pub rhs_terms: u64,
}

/// Whether a handle lies in the thresholded family: every (a, b) fiber of
/// tame primes has product exceeding `t`.
pub fn in_sharp_family(ctx: &DlogContext, handle: &ExtensionHandle, threshold: u64) -> bool {
    let group = handle.group();
    let mut fibers: BTreeMap<(GroupElement, GroupElement), u64> = BTreeMap::new();
    for a in group.elements() {
        if group.is_zero(&a) {
            continue;
        }
        for b in group.elements() {
            fibers.insert((a.clone(), b.clone()), 1);
        }
    }
    for (q, a) in &handle.tame {
        let b = handle.local_data_at(ctx, Place::Finite(*q)).frob_part;
        *fibers.get_mut(&(a.clone(), b)).unwrap() *= q;
    }
    fibers.values().all(|&w| w > threshold)
}

/// Per-slot data precomputed for the fast recursion.
struct SlotInfo {
    fiber: usize,
    ord_a: u64,
    /// tag != Plain
    conditioned: bool,
    /// carries a ν coordinate (outside J')
    with_nu: bool,
    /// p^{n-1}-scaled single-prime constant: χ(−b) + scale·c·ν·e(a,b)
    base_exp: u64,
    /// χ-order exponent n(ℓ) (0 for the trivial character)
    n_l: u32,
    c: u64,
    nu: u64,
    /// raw χ(a(k)) per slot k, for the Frobenius-detection couplings
    chi_of_slot_a: Vec<u64>,
    /// raw χ(a_wild) per nonzero class index
    chi_of_class: Vec<u64>,
}

struct OuterContext {
    p: u64,
    pn: u64,
    bound: u64,
    threshold: u64,
    slots: Vec<SlotInfo>,
    admissible: Vec<u64>,
    /// chi1[qa][qb]: order-p character of modulus admissible[qa] at admissible[qb]
    chi1: Vec<Vec<u64>>,
    /// chin[n-1][qa][qb]: the order-p^n character values, n = 1..=n_max
    chin: Vec<Vec<Vec<u64>>>,
    /// χ_{p,n}(admissible[qb]) for n = 1..=n_max
    wild_chi: Vec<Vec<u64>>,
    /// modified ψ_{q,1}(p) per admissible prime
    chi_of_p: Vec<u64>,
    /// suffix products of the smallest primes: completion(pos, k) ≤ bound test
    /// dense histogram: count[(exp * (m_cap) + m) * (m_cap) + cond]
    histogram: Vec<i128>,
    m_cap: usize,
    terms: u64,
}

impl OuterContext {
    fn hist_index(&self, exp: u64, m: u32, cond: u32) -> usize {
        (exp as usize * self.m_cap + m as usize) * self.m_cap + cond as usize
    }

    /// cheapest completion test: can `need` more primes from positions ≥ pos
    /// fit under `budget`?
    fn completion_fits(&self, pos: usize, need: usize, mut budget: u64) -> bool {
        let mut taken = 0;
        for &q in &self.admissible[pos..] {
            if taken == need {
                return true;
            }
            if q > budget {
                return false;
            }
            budget /= q;
            taken += 1;
        }
        taken >= need
    }

    /// pair contribution of the two orientations of (new prime, earlier
    /// prime), by table lookups
    fn pair_exp(&self, qi: usize, si: usize, qk: usize, sk: usize) -> u64 {
        let mut acc = 0u64;
        let p = self.p;
        let pn = self.pn;
        let scale1 = pn / p;
        for (qa, sa, qb, sb) in [(qk, sk, qi, si), (qi, si, qk, sk)] {
            let ea = &self.slots[sa];
            let eb = &self.slots[sb];
            if ea.conditioned && eb.with_nu && ea.c != 0 && eb.nu != 0 {
                let v = self.chi1[qa][qb];
                acc = (acc + ea.c * eb.nu % p * v % p * scale1) % pn;
            }
            if eb.n_l > 0 {
                let chi_b_aa = eb.chi_of_slot_a[sa];
                if chi_b_aa != 0 {
                    let v = self.chin[eb.n_l as usize - 1][qa][qb];
                    acc = (acc + chi_b_aa * v) % pn;
                }
            }
        }
        acc
    }
}

/// Exact evaluation of the thresholded outer identity. The left side sums
/// dual-Selmer orders over the family; the right side is the full
/// multi-index character sum with modified characters, accumulated exactly
/// in `Z[ζ_{p^n}]` with rational coefficients.
pub fn charsum_outer_sum(
    ctx: &DlogContext,
    group: &AbelianPGroup,
    block: &IdempotentBlock,
    d: u32,
    bound: u64,
    threshold: u64,
) -> Result<OuterReport> {
    if threshold == 0 {
        return Err(Error::OutOfRange("threshold must be at least 1".into()));
    }
    let p = group.p();
    let mut lhs: i128 = 0;
    let mut family_size = 0usize;
    if bound <= 1_000_000 {
        let sieve = Sieve::new(bound.max(3));
        let handles = enumerate_extensions_with_sieve(group, bound, &sieve);
        for h in &handles {
            if in_sharp_family(ctx, h, threshold) {
                family_size += 1;
                let ds = dual_selmer_mu_p(ctx, h, block, d)?;
                lhs += (p as i128).pow(ds.order_log);
            }
        }
    } else {
        let handles = enumerate_sharp_family(ctx, group, bound, threshold)?;
        for h in &handles {
            family_size += 1;
            let ds = dual_selmer_mu_p(ctx, h, block, d)?;
            lhs += (p as i128).pow(ds.order_log);
        }
    }

    // ---- right side ----
    let table = PairTable::new(group, block, d)?;
    let idx = index_set(&table);
    let n = group.exponent_log();
    let ring = CycloRing::new(p, n);
    let pn = ring.order;
    let scale1 = pn / p;

    let mut fiber_of: BTreeMap<(GroupElement, GroupElement), usize> = BTreeMap::new();
    for a in group.elements().into_iter().filter(|a| !group.is_zero(a)) {
        for b in group.elements() {
            let next = fiber_of.len();
            fiber_of.insert((a.clone(), b), next);
        }
    }
    let n_fibers = fiber_of.len();

    let nontrivial: Vec<GroupElement> =
        group.elements().into_iter().filter(|a| !group.is_zero(a)).collect();

    let slots: Vec<SlotInfo> = idx
        .iter()
        .map(|e| {
            let n_l = if e.chi.is_trivial() {
                0
            } else {
                let ord = e.chi.order(group);
                let mut m = 0u32;
                let mut o = ord;
                while o > 1 {
                    o /= p;
                    m += 1;
                }
                m
            };
            let minus_b = group.neg(&e.b);
            let mut base = e.chi.eval(group, &minus_b) % pn;
            if e.tag == IndexTag::WithNu {
                base = (base + e.c * e.nu % p * e.e_ab % p * scale1) % pn;
            }
            SlotInfo {
                fiber: fiber_of[&(e.a.clone(), e.b.clone())],
                ord_a: group.order_of(&e.a),
                conditioned: e.tag != IndexTag::Plain,
                with_nu: e.tag == IndexTag::WithNu,
                base_exp: base,
                n_l,
                c: e.c,
                nu: e.nu,
                chi_of_slot_a: idx.iter().map(|k| e.chi.eval(group, &k.a) % pn).collect(),
                chi_of_class: nontrivial.iter().map(|a| e.chi.eval(group, a) % pn).collect(),
            }
        })
        .collect();

    // admissible primes, capped by the budget left after filling the other
    // fibers with the smallest admissible primes
    let mut small: Vec<u64> = Vec::new();
    let mut q = p + 1;
    while small.len() + 1 < n_fibers && q <= bound {
        if crate::ext::is_prime(q) && q % p == 1 {
            small.push(q);
        }
        q += 1;
    }
    let min_product: u64 = small.iter().product::<u64>().max(1);
    let cap = (bound / min_product).max(60).min(bound);
    let admissible: Vec<u64> =
        (2..=cap).filter(|&q| crate::ext::is_prime(q) && q != p && q % p == 1).collect();

    // character tables over the admissible primes
    let n_max = n.max(1) as usize;
    let np = admissible.len();
    let chi1: Vec<Vec<u64>> = (0..np)
        .map(|a| {
            (0..np)
                .map(|b| {
                    if a == b {
                        0
                    } else {
                        crate::ext::char_eval_tame(ctx, p, admissible[a], 1, admissible[b]).unwrap()
                    }
                })
                .collect()
        })
        .collect();
    let chin: Vec<Vec<Vec<u64>>> = (1..=n_max as u32)
        .map(|nn| {
            (0..np)
                .map(|a| {
                    (0..np)
                        .map(|b| {
                            if a == b {
                                0
                            } else {
                                crate::ext::char_eval_tame(ctx, p, admissible[a], nn, admissible[b])
                                    .unwrap()
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let wild_chi: Vec<Vec<u64>> = (1..=n_max as u32)
        .map(|nn| (0..np).map(|b| crate::ext::char_eval_wild(p, nn, admissible[b]).unwrap()).collect())
        .collect();
    let chi_of_p: Vec<u64> =
        (0..np).map(|a| crate::ext::char_eval_tame(ctx, p, admissible[a], 1, p).unwrap()).collect();

    let m_cap = 24usize;
    let mut octx = OuterContext {
        p,
        pn,
        bound,
        threshold,
        slots,
        admissible,
        chi1,
        chin,
        wild_chi,
        chi_of_p,
        histogram: vec![0i128; pn as usize * m_cap * m_cap],
        m_cap,
        terms: 0,
    };

    let mut assigned: Vec<(usize, usize)> = Vec::new();
    let mut fiber_products = vec![1u64; n_fibers];
    outer_rec(&mut octx, 0, 1, 0, 0, None, &mut assigned, &mut fiber_products, n_fibers);
    if p <= bound {
        for ci in 0..nontrivial.len() {
            let mut assigned: Vec<(usize, usize)> = Vec::new();
            let mut fiber_products = vec![1u64; n_fibers];
            let saved = octx.bound;
            octx.bound = bound / p;
            outer_rec(&mut octx, 0, 1, 0, 0, Some(ci), &mut assigned, &mut fiber_products, n_fibers);
            octx.bound = saved;
        }
    }

    // assemble the exact rational cyclotomic sum
    let mut coeffs = vec![BigRational::zero(); ring.deg];
    for e in 0..pn {
        for m in 0..m_cap as u32 {
            for cond in 0..m_cap as u32 {
                let count = octx.histogram[octx.hist_index(e, m, cond)];
                if count == 0 {
                    continue;
                }
                let denom = BigInt::from(group.order()).pow(m) * BigInt::from(p).pow(cond);
                let z = ring.root_power(e);
                for (i, &zc) in z.coeffs.iter().enumerate() {
                    if zc != 0 {
                        coeffs[i] +=
                            BigRational::new(BigInt::from(count) * BigInt::from(zc), denom.clone());
                    }
                }
            }
        }
    }
    for c in coeffs.iter().skip(1) {
        if !c.is_zero() {
            return Err(Error::IdentityFailure(
                "outer character sum has a nonvanishing imaginary part".into(),
            ));
        }
    }
    let rhs = coeffs[0].clone();
    if BigRational::from(BigInt::from(lhs)) != rhs {
        return Err(Error::IdentityFailure(format!(
            "outer identity fails: lhs {lhs} vs rhs {rhs} (family {family_size}, terms {})",
            octx.terms
        )));
    }
    Ok(OuterReport { lhs, rhs, family_size, rhs_terms: octx.terms })
}

/// Depth-first enumeration of slot assignments with budget and fiber
/// pruning; the running exponent and its α-coefficient are carried along.
#[allow(clippy::too_many_arguments)]
fn outer_rec(
    octx: &mut OuterContext,
    pos: usize,
    product: u64,
    exp0: u64,
    alpha_coef: u64,
    wild_class: Option<usize>,
    assigned: &mut Vec<(usize, usize)>,
    fiber_products: &mut Vec<u64>,
    deficient: usize,
) {
    let p = octx.p;
    let pn = octx.pn;
    let scale1 = pn / p;
    if deficient == 0 {
        octx.terms += 1;
        let m = assigned.len() as u32;
        let cond = assigned.iter().filter(|(_, s)| octx.slots[*s].conditioned).count() as u32;
        for alpha in 0..p {
            let e = (exp0 + alpha * alpha_coef) % pn;
            let i = octx.hist_index(e, m, cond);
            octx.histogram[i] += 1;
        }
    }
    for i in pos..octx.admissible.len() {
        let q = octx.admissible[i];
        if product.saturating_mul(q) > octx.bound {
            break;
        }
        let budget_after = octx.bound / (product * q);
        for si in 0..octx.slots.len() {
            if q % octx.slots[si].ord_a != 1 {
                continue;
            }
            let f = octx.slots[si].fiber;
            let was_deficient = fiber_products[f] <= octx.threshold;
            let now_deficient = fiber_products[f].saturating_mul(q) <= octx.threshold;
            let new_deficient = deficient - usize::from(was_deficient && !now_deficient);
            // feasibility: the remaining deficient fibers need one prime each
            if new_deficient > 0 && !octx.completion_fits(i + 1, new_deficient, budget_after) {
                continue;
            }
            let mut new_exp = (exp0 + octx.slots[si].base_exp) % pn;
            let mut new_alpha = alpha_coef;
            if octx.slots[si].conditioned && octx.slots[si].c != 0 {
                new_alpha = (new_alpha + octx.slots[si].c * octx.chi_of_p[i] % p * scale1) % pn;
            }
            for &(qk, sk) in assigned.iter() {
                new_exp = (new_exp + octx.pair_exp(i, si, qk, sk)) % pn;
            }
            if let Some(ci) = wild_class {
                let sl = &octx.slots[si];
                if sl.n_l > 0 {
                    let chi_a = sl.chi_of_class[ci];
                    if chi_a != 0 {
                        let v = octx.wild_chi[sl.n_l as usize - 1][i];
                        new_exp = (new_exp + chi_a * v) % pn;
                    }
                }
            }
            assigned.push((i, si));
            fiber_products[f] = fiber_products[f].saturating_mul(q);
            outer_rec(
                octx,
                i + 1,
                product * q,
                new_exp,
                new_alpha,
                wild_class,
                assigned,
                fiber_products,
                new_deficient,
            );
            fiber_products[f] /= q;
            assigned.pop();
        }
    }
}

/// Enumeration of the thresholded family itself for bounds too large for a
/// full sieve: supports are built from the same pruned recursion, each
/// support expanded into the surjective class assignments it admits.
fn enumerate_sharp_family(
    ctx: &DlogContext,
    group: &AbelianPGroup,
    bound: u64,
    threshold: u64,
) -> Result<Vec<ExtensionHandle>> {
    let p = group.p();
    let n_fibers = ((group.order() - 1) * group.order()) as usize;
    // primes usable: same cap logic
    let mut small: Vec<u64> = Vec::new();
    let mut q = p + 1;
    while small.len() < n_fibers && q <= bound {
        if crate::ext::is_prime(q) && q % p == 1 {
            small.push(q);
        }
        q += 1;
    }
    let min_product: u64 = small.iter().take(n_fibers.saturating_sub(1)).product::<u64>().max(1);
    let cap = (bound / min_product).max(60).min(bound);
    let admissible: Vec<u64> =
        (2..=cap).filter(|&q| crate::ext::is_prime(q) && q != p && q % p == 1).collect();
    // choose supports: subsets of admissible (product ≤ bound, with optional
    // p) that can cover all fibers; then assign inertia classes and test
    let mut out = Vec::new();
    let nontrivial: Vec<GroupElement> =
        group.elements().into_iter().filter(|g| !group.is_zero(g)).collect();
    fn rec_support(
        admissible: &[u64],
        pos: usize,
        product: u64,
        bound: u64,
        need: usize,
        cur: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if cur.len() >= need {
            out.push(cur.clone());
        }
        for i in pos..admissible.len() {
            let q = admissible[i];
            if product.saturating_mul(q) > bound {
                break;
            }
            // feasibility: remaining needed primes must fit
            let still = need.saturating_sub(cur.len() + 1);
            let mut budget = bound / (product * q);
            let mut ok = true;
            let mut taken = 0;
            for &r in &admissible[i + 1..] {
                if taken == still {
                    break;
                }
                if r > budget {
                    ok = false;
                    break;
                }
                budget /= r;
                taken += 1;
            }
            if !ok || taken < still {
                continue;
            }
            cur.push(q);
            rec_support(admissible, i + 1, product * q, bound, need, cur, out);
            cur.pop();
        }
    }
    let mut supports = Vec::new();
    let mut cur = Vec::new();
    rec_support(&admissible, 0, 1, bound, n_fibers, &mut cur, &mut supports);
    for support in supports {
        // all assignments of inertia classes
        let mut assignment = Vec::with_capacity(support.len());
        assign_classes(ctx, group, &nontrivial, &support, 0, &mut assignment, threshold, &mut out);
    }
    // also supports including the wild prime (does not help fibers; only
    // makes the budget tighter, so reuse with bound / p)
    if p <= bound {
        let mut supports = Vec::new();
        let mut cur = Vec::new();
        rec_support(&admissible, 0, 1, bound / p, n_fibers, &mut cur, &mut supports);
        for support in supports {
            for a in &nontrivial {
                let mut assignment = Vec::with_capacity(support.len());
                assign_wild_classes(
                    ctx, group, &nontrivial, &support, 0, &mut assignment, a, threshold, &mut out,
                );
            }
        }
    }
    out.sort_by(|a, b| {
        a.conductor().cmp(&b.conductor()).then_with(|| a.tuple.encode().cmp(&b.tuple.encode()))
    });
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn assign_classes(
    ctx: &DlogContext,
    group: &AbelianPGroup,
    nontrivial: &[GroupElement],
    support: &[u64],
    i: usize,
    assignment: &mut Vec<GroupElement>,
    threshold: u64,
    out: &mut Vec<ExtensionHandle>,
) {
    if i == support.len() {
        let mut acc: BTreeMap<GroupElement, u64> = BTreeMap::new();
        for (q, a) in support.iter().zip(assignment.iter()) {
            *acc.entry(a.clone()).or_insert(1) *= q;
        }
        if let Ok(tuple) = crate::ext::ExtensionTuple::new(group, acc.into_iter().collect()) {
            if tuple.is_surjective() {
                let h = ExtensionHandle::new(tuple);
                if in_sharp_family(ctx, &h, threshold) {
                    out.push(h);
                }
            }
        }
        return;
    }
    for a in nontrivial {
        if support[i] % group.order_of(a) == 1 {
            assignment.push(a.clone());
            assign_classes(ctx, group, nontrivial, support, i + 1, assignment, threshold, out);
            assignment.pop();
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn assign_wild_classes(
    ctx: &DlogContext,
    group: &AbelianPGroup,
    nontrivial: &[GroupElement],
    support: &[u64],
    i: usize,
    assignment: &mut Vec<GroupElement>,
    wild_class: &GroupElement,
    threshold: u64,
    out: &mut Vec<ExtensionHandle>,
) {
    if i == support.len() {
        let mut acc: BTreeMap<GroupElement, u64> = BTreeMap::new();
        for (q, a) in support.iter().zip(assignment.iter()) {
            *acc.entry(a.clone()).or_insert(1) *= q;
        }
        *acc.entry(wild_class.clone()).or_insert(1) *= group.p();
        if let Ok(tuple) = crate::ext::ExtensionTuple::new(group, acc.into_iter().collect()) {
            if tuple.is_surjective() {
                let h = ExtensionHandle::new(tuple);
                if in_sharp_family(ctx, &h, threshold) {
                    out.push(h);
                }
            }
        }
        return;
    }
    for a in nontrivial {
        if support[i] % group.order_of(a) == 1 {
            assignment.push(a.clone());
            assign_wild_classes(
                ctx, group, nontrivial, support, i + 1, assignment, wild_class, threshold, out,
            );
            assignment.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// extension and gluing of partial homomorphisms into F_p
// ---------------------------------------------------------------------------

/// A homomorphism `⟨S⟩ → F_p` returned by the extension machinery: values on
/// an independent cyclic basis of the span.
#[derive(Clone, Debug)]
pub struct SpanHom {
    pub basis: Vec<GroupElement>,
    pub values: Vec<u64>,
}

impl SpanHom {
    pub fn eval(&self, group: &AbelianPGroup, x: &GroupElement) -> u64 {
        let coords = crate::cohomology::element_in_basis(group, &self.basis, x);
        let p = group.p();
        coords.iter().zip(&self.values).map(|(&c, &v)| c % p * v % p).sum::<u64>() % p
    }
}

/// Outcome of an extension attempt: a homomorphism on the span, or a
/// witnessing integer relation `Σ k_i s_i = 0` (coefficients indexed by the
/// input points) whose values refuse it.
#[derive(Clone, Debug)]
pub enum ExtendOutcome {
    Extended(SpanHom),
    Refused { relation: Vec<(u64, usize)> },
}

/// Extends a partial map `f0 : S → F_p` to a homomorphism on `⟨S⟩`, exactly
/// when every Z-linear relation among the points respects the values.
pub fn extend_partial_hom(
    group: &AbelianPGroup,
    points: &[(GroupElement, u64)],
) -> ExtendOutcome {
    let p = group.p();
    if points.is_empty() {
        return ExtendOutcome::Extended(SpanHom { basis: vec![], values: vec![] });
    }
    let span = group.span(&points.iter().map(|(s, _)| s.clone()).collect::<Vec<_>>());
    let basis = group.cyclic_basis(&span);
    // values y on the basis with Σ coords(s_i)·y = f0(s_i) over F_p
    let fp = crate::linalg::Ring::new(p, 1);
    let rows: Vec<Vec<u64>> = points
        .iter()
        .map(|(s, _)| {
            crate::cohomology::element_in_basis(group, &basis, s)
                .iter()
                .map(|&c| c % p)
                .collect()
        })
        .collect();
    let rhs: Vec<u64> = points.iter().map(|(_, v)| v % p).collect();
    if basis.is_empty() {
        // the span is trivial; the only consistent values are zero
        if rhs.iter().all(|&v| v == 0) {
            return ExtendOutcome::Extended(SpanHom { basis, values: vec![] });
        }
    } else {
        let m = crate::linalg::Mat::from_rows(rows, basis.len());
        if let Some(sol) = crate::linalg::solve(&fp, &m, &rhs) {
            return ExtendOutcome::Extended(SpanHom { basis, values: sol });
        }
    }
    // refused: find a relation among the points violating the values. The
    // kernel of Z^S → A (coefficients mod the group exponent) generates all
    // relations, so some generator must witness the failure.
    let e = group.exponent_log();
    let ring = crate::linalg::Ring::new(p, e);
    let n = group.rank();
    let rel: Vec<Vec<u64>> = (0..n)
        .filter(|&i| group.invariants()[i] < e)
        .map(|i| {
            let mut v = vec![0u64; n];
            v[i] = group.factor_order(i);
            v
        })
        .collect();
    let mut m = crate::linalg::Mat::zero(n, points.len() + rel.len());
    for (c, (s, _)) in points.iter().enumerate() {
        for r in 0..n {
            m[(r, c)] = s.coords[r] % ring.modulus;
        }
    }
    for (c, rv) in rel.iter().enumerate() {
        for r in 0..n {
            m[(r, points.len() + c)] = rv[r];
        }
    }
    for k in crate::linalg::kernel(&ring, &m) {
        let coeffs = &k[..points.len()];
        let mut check = group.zero();
        for (c, (s, _)) in coeffs.iter().zip(points) {
            check = group.add(&check, &group.smul(*c as i64, s));
        }
        debug_assert!(group.is_zero(&check), "kernel vectors are honest relations");
        let violation: u64 =
            coeffs.iter().zip(points).map(|(c, (_, v))| c % p * (v % p) % p).sum::<u64>() % p;
        if violation != 0 {
            let relation: Vec<(u64, usize)> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, &c)| c % ring.modulus != 0)
                .map(|(i, &c)| (c, i))
                .collect();
            return ExtendOutcome::Refused { relation };
        }
    }
    unreachable!("an unsolvable system has a witnessing relation generator")
}

/// Glues two homomorphisms given on generator lists into one on the joint
/// span, or refuses with a witnessing relation.
pub fn glue_homs(
    group: &AbelianPGroup,
    f: &[(GroupElement, u64)],
    g: &[(GroupElement, u64)],
) -> ExtendOutcome {
    let mut points = f.to_vec();
    points.extend(g.iter().cloned());
    extend_partial_hom(group, &points)
}
