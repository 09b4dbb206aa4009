//! Cohomology of finite abelian p-groups with finite p-torsion coefficients,
//! in degrees 0..2, plus the inflation kernels R(D, I, M), the typical and
//! per-extension kernels N, the constant C, and the local-condition sizes.
//!
//! Groups are presented as explicit products of cyclic p-groups. Cochains
//! live on the total complex of the tensor product of the periodic cyclic
//! resolutions; kernels and images are exact linear algebra mod p^t. Induced
//! maps along arbitrary group homomorphisms go through evaluation of tensor
//! cocycles as functions on the group (the classical comparison with the bar
//! resolution in low degrees) and recompression on the target side. A
//! brute-force bar-resolution oracle cross-checks all of this in the tests.

use crate::abelian::{AbelianPGroup, GroupElement, SubgroupPair};
use crate::blocks::IdempotentBlock;
use crate::linalg::{self, howell, Mat, Ring, Subgroup};
use crate::{Error, Result};

/// Bound on |G| accepted by the public cohomology entry point.
pub const DEFAULT_GROUP_BOUND: u64 = 729;

/// A finite abelian p-group presented as an explicit product of cyclic
/// groups of p-power order. Elements are exponent vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductGroup {
    pub p: u64,
    pub orders: Vec<u64>,
}

impl ProductGroup {
    pub fn order(&self) -> u64 {
        self.orders.iter().product()
    }

    pub fn scale(&self, s: u64, v: &[u64]) -> Vec<u64> {
        v.iter().zip(&self.orders).map(|(&x, &m)| (x as u128 * s as u128 % m as u128) as u64).collect()
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).zip(&self.orders).map(|((&x, &y), &m)| (x + y) % m).collect()
    }

    pub fn elements(&self) -> Vec<Vec<u64>> {
        let mut out = Vec::with_capacity(self.order() as usize);
        let mut cur = vec![0u64; self.orders.len()];
        loop {
            out.push(cur.clone());
            let mut i = 0;
            loop {
                if i == self.orders.len() {
                    return out;
                }
                cur[i] += 1;
                if cur[i] < self.orders[i] {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }
}

/// A finite module `⊕_c Z/p^{orders[c]}` with one commuting action matrix per
/// group generator. Matrices act on column vectors mod p^t.
#[derive(Clone, Debug)]
pub struct CohModule {
    pub p: u64,
    pub t: u32,
    pub orders: Vec<u32>,
    pub gens: Vec<Mat>,
}

impl CohModule {
    pub fn dim(&self) -> usize {
        self.orders.len()
    }

    pub fn size_log(&self) -> u32 {
        self.orders.iter().sum()
    }

    /// Relation vectors `p^{t_c} e_c` inside `(Z/p^t)^dim`.
    pub fn relations(&self) -> Vec<Vec<u64>> {
        let mut out = Vec::new();
        for (c, &tc) in self.orders.iter().enumerate() {
            if tc < self.t {
                let mut v = vec![0u64; self.dim()];
                v[c] = self.p.pow(tc);
                out.push(v);
            }
        }
        out
    }

    /// Action of an arbitrary group element (exponent vector).
    pub fn action_of(&self, ring: &Ring, exps: &[u64]) -> Mat {
        let mut acc = Mat::identity(self.dim());
        for (i, &e) in exps.iter().enumerate() {
            for _ in 0..e {
                acc = self.gens[i].mul(ring, &acc);
            }
        }
        acc
    }
}

/// Multidegrees summing to k over n factors.
fn multidegrees(n: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if n == 0 {
        if k == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[i] = v;
            rec(i + 1, left - v, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, k, &mut cur, &mut out);
    out
}

/// The tensor cochain complex of one (group, module) pair, degrees 0..3.
pub struct Complex {
    pub group: ProductGroup,
    pub module: CohModule,
    pub ring: Ring,
    act: Vec<Mat>,
    dec: Vec<Mat>,
    norm: Vec<Mat>,
    degs: Vec<Vec<Vec<u32>>>,
}

impl Complex {
    pub fn new(group: ProductGroup, module: CohModule) -> Complex {
        let ring = Ring::new(module.p, module.t);
        let n = group.orders.len();
        assert_eq!(module.gens.len(), n);
        let act = module.gens.clone();
        let dec: Vec<Mat> = act
            .iter()
            .map(|a| {
                let mut d = a.clone();
                for i in 0..d.rows {
                    d[(i, i)] = ring.sub(d[(i, i)], 1);
                }
                d
            })
            .collect();
        let norm: Vec<Mat> = act
            .iter()
            .zip(&group.orders)
            .map(|(a, &m)| {
                let mut acc = Mat::zero(a.rows, a.cols);
                let mut pw = Mat::identity(a.rows);
                for _ in 0..m {
                    for (x, y) in acc.a.iter_mut().zip(&pw.a) {
                        *x = ring.add(*x, *y);
                    }
                    pw = a.mul(&ring, &pw);
                }
                acc
            })
            .collect();
        let degs = (0..=3).map(|k| multidegrees(n, k)).collect();
        Complex { group, module, ring, act, dec, norm, degs }
    }

    pub fn dims(&self, k: u32) -> usize {
        self.degs[k as usize].len() * self.module.dim()
    }

    /// The differential C^k -> C^{k+1} as one matrix.
    pub fn delta(&self, k: u32) -> Mat {
        let md = self.module.dim();
        let src = &self.degs[k as usize];
        let dst = &self.degs[k as usize + 1];
        let mut m = Mat::zero(dst.len() * md, src.len() * md);
        for (si, d) in src.iter().enumerate() {
            for i in 0..self.group.orders.len() {
                let mut d2 = d.clone();
                d2[i] += 1;
                let ti = dst.iter().position(|x| x == &d2).unwrap();
                let sign_exp: u32 = d.iter().take(i).sum();
                let op = if d2[i] % 2 == 1 { &self.dec[i] } else { &self.norm[i] };
                for r in 0..md {
                    for c in 0..md {
                        let mut v = op[(r, c)];
                        if sign_exp % 2 == 1 {
                            v = self.ring.neg(v);
                        }
                        let cur = m[(ti * md + r, si * md + c)];
                        m[(ti * md + r, si * md + c)] = self.ring.add(cur, v);
                    }
                }
            }
        }
        m
    }

    /// Per-position coordinate relations of C^k.
    pub fn relations(&self, k: u32) -> Vec<Vec<u64>> {
        let md = self.module.dim();
        let rel = self.module.relations();
        let count = self.degs[k as usize].len();
        let mut out = Vec::new();
        for pos in 0..count {
            for r in &rel {
                let mut v = vec![0u64; count * md];
                v[pos * md..(pos + 1) * md].copy_from_slice(r);
                out.push(v);
            }
        }
        out
    }

    /// Generators of the cocycle submodule Z^k (relation vectors included).
    pub fn cocycle_gens(&self, k: u32) -> Vec<Vec<u64>> {
        assert!(k <= 2, "degree 3 classes are not needed");
        let delta = self.delta(k);
        let rel_out = self.relations(k + 1);
        let rows = delta.rows;
        let cols = delta.cols + rel_out.len();
        let mut m = Mat::zero(rows, cols);
        for r in 0..rows {
            for c in 0..delta.cols {
                m[(r, c)] = delta[(r, c)];
            }
        }
        for (exc, rv) in rel_out.iter().enumerate() {
            for r in 0..rows {
                m[(r, delta.cols + exc)] = rv[r];
            }
        }
        let ker = linalg::kernel(&self.ring, &m);
        let mut gens: Vec<Vec<u64>> = ker.into_iter().map(|v| v[..delta.cols].to_vec()).collect();
        gens.extend(self.relations(k));
        gens
    }

    /// Generators of the coboundary submodule B^k (relations included).
    pub fn coboundary_gens(&self, k: u32) -> Vec<Vec<u64>> {
        let mut out = self.relations(k);
        if k == 0 {
            return out;
        }
        let delta = self.delta(k - 1);
        for c in 0..delta.cols {
            let col: Vec<u64> = (0..delta.rows).map(|r| delta[(r, c)]).collect();
            out.push(col);
        }
        out
    }

    pub fn h_size_log(&self, k: u32) -> u32 {
        if self.module.dim() == 0 {
            return 0;
        }
        let z = howell(&self.ring, self.dims(k), &self.cocycle_gens(k));
        let b = howell(&self.ring, self.dims(k), &self.coboundary_gens(k));
        z.size_log(&self.ring) - b.size_log(&self.ring)
    }

    // -- cocycles as functions on the group --------------------------------

    /// `Σ_{s<count} g_i^s` applied to `v`.
    fn mu_apply(&self, i: usize, count: u64, v: &[u64]) -> Vec<u64> {
        let mut acc = vec![0u64; v.len()];
        let mut cur = v.to_vec();
        for _ in 0..count {
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a = self.ring.add(*a, *c);
            }
            cur = self.act[i].apply(&self.ring, &cur);
        }
        acc
    }

    fn act_tail(&self, exps: &[u64], from: usize, v: &[u64]) -> Vec<u64> {
        let mut cur = v.to_vec();
        for i in from..exps.len() {
            for _ in 0..exps[i] {
                cur = self.act[i].apply(&self.ring, &cur);
            }
        }
        cur
    }

    fn slice<'a>(&self, cochain: &'a [u64], k: u32, d: &[u32]) -> &'a [u64] {
        let md = self.module.dim();
        let pos = self.degs[k as usize].iter().position(|x| x == d).unwrap();
        &cochain[pos * md..(pos + 1) * md]
    }

    /// Value at `g` of the group 1-cochain attached to a tensor 1-cocycle.
    pub fn eval1(&self, cochain: &[u64], g: &[u64]) -> Vec<u64> {
        let n = self.group.orders.len();
        let md = self.module.dim();
        let mut acc = vec![0u64; md];
        for i in 0..n {
            let mut d = vec![0u32; n];
            d[i] = 1;
            let x = self.slice(cochain, 1, &d);
            let term = self.mu_apply(i, g[i], x);
            let term = self.act_tail(g, i + 1, &term);
            for (a, t) in acc.iter_mut().zip(&term) {
                *a = self.ring.add(*a, *t);
            }
        }
        acc
    }

    /// Value at `(g, h)` of the normalized bar 2-cocycle attached to a
    /// tensor 2-cocycle.
    pub fn eval2(&self, cochain: &[u64], g: &[u64], h: &[u64]) -> Vec<u64> {
        let n = self.group.orders.len();
        let md = self.module.dim();
        let mut acc = vec![0u64; md];
        for i in 0..n {
            // pure component 2e_i: carry term
            if g[i] + h[i] >= self.group.orders[i] {
                let mut d = vec![0u32; n];
                d[i] = 2;
                let x = self.slice(cochain, 2, &d);
                let sum = self.group.add(g, h);
                let term = self.act_tail(&sum, i + 1, x);
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a = self.ring.add(*a, *t);
                }
            }
            // cross components e_i + e_j, j > i
            for j in i + 1..n {
                let mut d = vec![0u32; n];
                d[i] = 1;
                d[j] = 1;
                let x = self.slice(cochain, 2, &d);
                let term = self.mu_apply(i, g[i], x);
                let term = self.mu_apply(j, h[j], &term);
                let term = self.act_tail(g, i + 1, &term);
                let term = self.act_tail(h, j + 1, &term);
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a = self.ring.add(*a, *t);
                }
            }
        }
        acc
    }
}

/// Contravariant transport of cocycles: pull back along `hom` (which sends
/// the generators of `dst.group` into `src.group`), apply `module_map` to
/// values, recompress on the destination complex.
pub struct Transport<'a> {
    pub src: &'a Complex,
    pub dst: &'a Complex,
    pub hom: Vec<Vec<u64>>,
    pub module_map: Option<Mat>,
}

impl<'a> Transport<'a> {
    fn map_value(&self, v: &[u64]) -> Vec<u64> {
        match &self.module_map {
            None => v.to_vec(),
            Some(f) => f.apply(&self.dst.ring, v),
        }
    }

    fn gen_image(&self, i: usize, power: u64) -> Vec<u64> {
        self.src.group.scale(power, &self.hom[i])
    }

    pub fn transport1(&self, cochain: &[u64]) -> Vec<u64> {
        let n = self.dst.group.orders.len();
        let md = self.dst.module.dim();
        let mut out = vec![0u64; self.dst.dims(1)];
        for i in 0..n {
            let val = self.src.eval1(cochain, &self.gen_image(i, 1));
            let val = self.map_value(&val);
            let mut d = vec![0u32; n];
            d[i] = 1;
            let pos = self.dst.degs[1].iter().position(|x| x == &d).unwrap();
            out[pos * md..(pos + 1) * md].copy_from_slice(&val);
        }
        out
    }

    pub fn transport2(&self, cochain: &[u64]) -> Vec<u64> {
        let n = self.dst.group.orders.len();
        let md = self.dst.module.dim();
        let mut out = vec![0u64; self.dst.dims(2)];
        for i in 0..n {
            // pure component: Σ_{s<m_i} c(f(g_i)^s, f(g_i))
            let m_i = self.dst.group.orders[i];
            let gi = self.gen_image(i, 1);
            let mut acc = vec![0u64; self.src.module.dim()];
            for s in 0..m_i {
                let gs = self.gen_image(i, s);
                let v = self.src.eval2(cochain, &gs, &gi);
                for (a, t) in acc.iter_mut().zip(&v) {
                    *a = self.src.ring.add(*a, *t);
                }
            }
            let val = self.map_value(&acc);
            let mut d = vec![0u32; n];
            d[i] = 2;
            let pos = self.dst.degs[2].iter().position(|x| x == &d).unwrap();
            out[pos * md..(pos + 1) * md].copy_from_slice(&val);
            // cross components: c(f(g_i), f(g_j)) - c(f(g_j), f(g_i))
            for j in i + 1..n {
                let gj = self.gen_image(j, 1);
                let v1 = self.src.eval2(cochain, &gi, &gj);
                let v2 = self.src.eval2(cochain, &gj, &gi);
                let diff: Vec<u64> =
                    v1.iter().zip(&v2).map(|(&x, &y)| self.src.ring.sub(x, y)).collect();
                let val = self.map_value(&diff);
                let mut d = vec![0u32; n];
                d[i] = 1;
                d[j] = 1;
                let pos = self.dst.degs[2].iter().position(|x| x == &d).unwrap();
                out[pos * md..(pos + 1) * md].copy_from_slice(&val);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// A-modules tied to a parent group
// ---------------------------------------------------------------------------

/// A module over a fixed [`AbelianPGroup`], with action matrices for the
/// invariant-factor generators. Restrictions to subgroups and the finite
/// approximations of the local groups are built from here.
#[derive(Clone, Debug)]
pub struct AModule {
    pub group: AbelianPGroup,
    pub p: u64,
    pub t: u32,
    pub orders: Vec<u32>,
    pub gens: Vec<Mat>,
}

impl AModule {
    pub fn from_block(block: &IdempotentBlock, j: u32) -> Result<AModule> {
        let ring_mj = block.mj_ring(j)?;
        let group = block.group().clone();
        let orders = ring_mj.coord_orders();
        let t = orders.iter().copied().max().unwrap_or(1);
        let modulus = block.p().pow(t);
        let gens: Vec<Mat> = (0..group.rank())
            .map(|i| {
                let m = ring_mj.action_matrix(&group.generator(i));
                Mat { rows: m.rows, cols: m.cols, a: m.a.iter().map(|&x| x % modulus).collect() }
            })
            .collect();
        Ok(AModule { group, p: block.p(), t, orders, gens })
    }

    /// The trivial module F_p.
    pub fn trivial_fp(group: &AbelianPGroup) -> AModule {
        AModule {
            group: group.clone(),
            p: group.p(),
            t: 1,
            orders: vec![1],
            gens: (0..group.rank()).map(|_| Mat::identity(1)).collect(),
        }
    }

    /// The zero module (used as M_0).
    pub fn zero(group: &AbelianPGroup) -> AModule {
        AModule {
            group: group.clone(),
            p: group.p(),
            t: 1,
            orders: vec![],
            gens: (0..group.rank()).map(|_| Mat::zero(0, 0)).collect(),
        }
    }

    pub fn size_log(&self) -> u32 {
        self.orders.iter().sum()
    }

    pub fn ring(&self) -> Ring {
        Ring::new(self.p, self.t)
    }

    /// Action matrix of an arbitrary element of the parent group.
    pub fn action_of(&self, a: &GroupElement) -> Mat {
        let ring = self.ring();
        let mut acc = Mat::identity(self.orders.len());
        for (i, &e) in a.coords.iter().enumerate() {
            for _ in 0..e {
                acc = self.gens[i].mul(&ring, &acc);
            }
        }
        acc
    }

    /// The (ProductGroup, CohModule) pair for a subgroup presented by an
    /// independent cyclic basis.
    pub fn restricted(&self, basis: &[GroupElement]) -> (ProductGroup, CohModule) {
        let orders: Vec<u64> = basis.iter().map(|b| self.group.order_of(b)).collect();
        let pg = ProductGroup { p: self.p, orders };
        let cm = CohModule {
            p: self.p,
            t: self.t,
            orders: self.orders.clone(),
            gens: basis.iter().map(|b| self.action_of(b)).collect(),
        };
        (pg, cm)
    }

    /// Presentation of the whole parent group.
    pub fn ambient(&self) -> (ProductGroup, CohModule) {
        let basis: Vec<GroupElement> =
            (0..self.group.rank()).map(|i| self.group.generator(i)).collect();
        self.restricted(&basis)
    }

    /// The fixed submodule `M^S` for the subgroup spanned by `sub_gens`, as
    /// an abstract module carrying the action of the listed outer elements.
    pub fn fixed_submodule(&self, sub_gens: &[GroupElement], outer: &[GroupElement]) -> AModuleView {
        let ring = self.ring();
        let n = self.orders.len();
        let rel: Vec<Vec<u64>> = self
            .orders
            .iter()
            .enumerate()
            .filter(|(_, &o)| o < self.t)
            .map(|(i, &o)| {
                let mut v = vec![0u64; n];
                v[i] = self.p.pow(o);
                v
            })
            .collect();
        let mut dec_mats = Vec::new();
        for g in sub_gens {
            let mut d = self.action_of(g);
            for i in 0..n {
                d[(i, i)] = ring.sub(d[(i, i)], 1);
            }
            dec_mats.push(d);
        }
        let blocks = dec_mats.len().max(1);
        let mut m = Mat::zero(blocks * n, n + blocks * rel.len());
        for (bi, d) in dec_mats.iter().enumerate() {
            for r in 0..n {
                for c in 0..n {
                    m[(bi * n + r, c)] = d[(r, c)];
                }
                for (ri, rv) in rel.iter().enumerate() {
                    m[(bi * n + r, n + bi * rel.len() + ri)] = rv[r];
                }
            }
        }
        let ker = linalg::kernel(&ring, &m);
        let mut gens: Vec<Vec<u64>> = ker.into_iter().map(|v| v[..n].to_vec()).collect();
        gens.extend(rel.clone());
        let sub = howell(&ring, n, &gens);
        let (basis, orders) = split_subgroup(&ring, self.p, &self.orders, &sub);
        let mats: Vec<Mat> = outer
            .iter()
            .map(|g| {
                let a = self.action_of(g);
                action_in_basis(&ring, self.p, &self.orders, &basis, &orders, &a)
            })
            .collect();
        AModuleView { p: self.p, t: self.t, orders, basis, gens: mats }
    }
}

/// An abstract submodule view: basis vectors in ambient coordinates plus the
/// induced action matrices of chosen elements.
#[derive(Clone, Debug)]
pub struct AModuleView {
    pub p: u64,
    pub t: u32,
    pub orders: Vec<u32>,
    pub basis: Vec<Vec<u64>>,
    pub gens: Vec<Mat>,
}

impl AModuleView {
    pub fn size_log(&self) -> u32 {
        self.orders.iter().sum()
    }
}

/// Splits a subgroup of `⊕ Z/p^{orders[c]}` (Howell form in `(Z/p^t)^n`)
/// into cyclic coordinates: basis vectors plus their p-power orders (log).
fn split_subgroup(
    ring: &Ring,
    p: u64,
    amb_orders: &[u32],
    sub: &Subgroup,
) -> (Vec<Vec<u64>>, Vec<u32>) {
    let n = amb_orders.len();
    let canon =
        |v: &[u64]| -> Vec<u64> { v.iter().zip(amb_orders).map(|(&x, &o)| x % p.pow(o)).collect() };
    let mut elems: Vec<Vec<u64>> = vec![vec![0; n]];
    for (k, row) in sub.rows.iter().enumerate() {
        let ord = ring.t - sub.pivot_val[k];
        let mut next = Vec::new();
        for e in &elems {
            let mut cur = e.clone();
            for _ in 0..p.pow(ord) {
                next.push(canon(&cur));
                for (x, r) in cur.iter_mut().zip(row) {
                    *x = ring.add(*x, *r);
                }
            }
        }
        next.sort();
        next.dedup();
        elems = next;
    }
    let mul_p = |v: &[u64]| -> Vec<u64> {
        canon(&v.iter().map(|&x| ring.mul(x, p)).collect::<Vec<_>>())
    };
    let order_of = |v: &[u64]| -> u32 {
        let mut o = 0u32;
        let mut cur = canon(v);
        while cur.iter().any(|&x| x != 0) {
            cur = mul_p(&cur);
            o += 1;
        }
        o
    };
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut orders: Vec<u32> = Vec::new();
    let mut spanned: Vec<Vec<u64>> = vec![vec![0; n]];
    while spanned.len() < elems.len() {
        let mut best: Option<(u32, Vec<u64>)> = None;
        for y in &elems {
            if spanned.contains(y) {
                continue;
            }
            let oy = order_of(y);
            let mut tq = 0u32;
            let mut z = canon(y);
            while !spanned.contains(&z) {
                z = mul_p(&z);
                tq += 1;
            }
            if tq == oy && best.as_ref().map_or(true, |(o, _)| oy > *o) {
                best = Some((oy, y.clone()));
            }
        }
        let (oy, y) = best.expect("p-group splitting failed");
        basis.push(y.clone());
        orders.push(oy);
        let mut next = vec![vec![0u64; n]];
        for b in &basis {
            let mut acc = Vec::new();
            for e in &next {
                let mut cur = e.clone();
                loop {
                    acc.push(cur.clone());
                    cur = canon(
                        &cur.iter().zip(b).map(|(&x, &r)| ring.add(x, r)).collect::<Vec<_>>(),
                    );
                    if &cur == e {
                        break;
                    }
                }
            }
            acc.sort();
            acc.dedup();
            next = acc;
        }
        spanned = next;
    }
    (basis, orders)
}

/// Rewrites an ambient action matrix in the coordinates of a split subgroup.
fn action_in_basis(
    ring: &Ring,
    p: u64,
    amb_orders: &[u32],
    basis: &[Vec<u64>],
    orders: &[u32],
    act: &Mat,
) -> Mat {
    let k = basis.len();
    let n = amb_orders.len();
    let mut out = Mat::zero(k, k);
    let rel: Vec<Vec<u64>> = amb_orders
        .iter()
        .enumerate()
        .filter(|(_, &o)| o < ring.t)
        .map(|(i, &o)| {
            let mut v = vec![0u64; n];
            v[i] = p.pow(o);
            v
        })
        .collect();
    for c in 0..k {
        let img = act.apply(ring, &basis[c]);
        let mut m = Mat::zero(n, k + rel.len());
        for r in 0..n {
            for (j, b) in basis.iter().enumerate() {
                m[(r, j)] = b[r];
            }
            for (j, rv) in rel.iter().enumerate() {
                m[(r, k + j)] = rv[r];
            }
        }
        let sol = linalg::solve(ring, &m, &img).expect("image lies in the subgroup");
        for r in 0..k {
            out[(r, c)] = sol[r] % p.pow(orders[r].min(ring.t));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// public cohomology API
// ---------------------------------------------------------------------------

/// Order and class generators of `H^n(G, M)` for n = 0, 1, 2.
pub struct CohGroup {
    pub order_log: u32,
    /// ambient cocycle vectors; classes are these mod coboundaries
    pub class_gens: Vec<Vec<u64>>,
    pub complex: Complex,
}

pub fn cohomology_group(n: u32, group: ProductGroup, module: CohModule) -> Result<CohGroup> {
    if n > 2 {
        return Err(Error::OutOfRange("degree must be 0, 1 or 2".into()));
    }
    if group.order() > DEFAULT_GROUP_BOUND {
        return Err(Error::BoundExceeded(format!(
            "|G| = {} exceeds {}",
            group.order(),
            DEFAULT_GROUP_BOUND
        )));
    }
    let cx = Complex::new(group, module);
    let z = cx.cocycle_gens(n);
    let b = howell(&cx.ring, cx.dims(n), &cx.coboundary_gens(n));
    let order_log = howell(&cx.ring, cx.dims(n), &z).size_log(&cx.ring) - b.size_log(&cx.ring);
    Ok(CohGroup { order_log, class_gens: z, complex: cx })
}

// ---------------------------------------------------------------------------
// R(D, I, M), N_typical, N_phi, the constant C, local-condition sizes
// ---------------------------------------------------------------------------

/// One local pair (D, I) inside the parent group.
#[derive(Clone, Debug)]
pub struct LocalPair {
    pub d_elements: Vec<GroupElement>,
    pub i_gen: GroupElement,
}

impl LocalPair {
    pub fn from_subgroup_pair(p: &SubgroupPair) -> LocalPair {
        LocalPair { d_elements: p.d_elements.clone(), i_gen: p.i_gen.clone() }
    }
}

/// Complexes and inflation data for one pair (D, I).
struct PairContexts {
    d_cx: Complex,
    ghat_cx: Complex,
    hom: Vec<Vec<u64>>,
}

fn pair_contexts(module: &AModule, pair: &LocalPair, n_exp: u32) -> PairContexts {
    let group = &module.group;
    let d_basis = group.cyclic_basis(&pair.d_elements);
    let (d_pg, d_cm) = module.restricted(&d_basis);
    let d_cx = Complex::new(d_pg, d_cm);

    // a generator of D whose class generates D/I
    let i_span = group.span(std::slice::from_ref(&pair.i_gen));
    let d0 = pair
        .d_elements
        .iter()
        .find(|w| {
            let mut gens: Vec<GroupElement> = i_span.to_vec();
            gens.push((*w).clone());
            group.span(&gens).len() == pair.d_elements.len()
        })
        .expect("D/I cyclic by construction")
        .clone();

    // Ghat = Z/p^N x <sigma>, split off the chosen Frobenius lift
    let p = module.p;
    let ghat_pg = ProductGroup { p, orders: vec![p.pow(n_exp), group.order_of(&pair.i_gen)] };
    let ghat_cm = CohModule {
        p,
        t: module.t,
        orders: module.orders.clone(),
        gens: vec![module.action_of(&d0), module.action_of(&pair.i_gen)],
    };
    let ghat_cx = Complex::new(ghat_pg, ghat_cm);

    let hom = vec![
        element_in_basis(group, &d_basis, &d0),
        element_in_basis(group, &d_basis, &pair.i_gen),
    ];
    PairContexts { d_cx, ghat_cx, hom }
}

/// Exponents of `x` over a cyclic basis of a subgroup (brute-force dlog).
pub fn element_in_basis(group: &AbelianPGroup, basis: &[GroupElement], x: &GroupElement) -> Vec<u64> {
    let orders: Vec<u64> = basis.iter().map(|b| group.order_of(b)).collect();
    let mut cur = vec![0u64; basis.len()];
    loop {
        let mut acc = group.zero();
        for (i, b) in basis.iter().enumerate() {
            acc = group.add(&acc, &group.smul(cur[i] as i64, b));
        }
        if &acc == x {
            return cur;
        }
        let mut i = 0;
        loop {
            if i == basis.len() {
                panic!("element not in subgroup span");
            }
            cur[i] += 1;
            if cur[i] < orders[i] {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

/// `N = v_p(exp M) + v_p(exp D) + 1`, the profinite approximation exponent.
fn stabilization_exponent(module: &AModule, pair: &LocalPair) -> u32 {
    let group = &module.group;
    let exp_d = pair.d_elements.iter().map(|d| group.order_of(d)).max().unwrap_or(1);
    let mut vd = 0u32;
    let mut e = exp_d;
    while e > 1 {
        e /= module.p;
        vd += 1;
    }
    module.t + vd + 1
}

/// `R(D, I, M)` as a subgroup of `H^2(D, M)` with stabilization certificate.
pub struct InflationKernel {
    pub d_cx: Complex,
    pub gens: Vec<Vec<u64>>,
    pub size_log: u32,
    pub approx_exponent: u32,
}

pub fn inflation_kernel_r(module: &AModule, pair: &LocalPair) -> Result<InflationKernel> {
    let n0 = stabilization_exponent(module, pair);
    let k0 = inflation_kernel_at(module, pair, n0);
    let k1 = inflation_kernel_at(module, pair, n0 + 1);
    let ring = k0.d_cx.ring;
    let dims = k0.d_cx.dims(2);
    let mut all0 = k0.gens.clone();
    all0.extend(k0.d_cx.coboundary_gens(2));
    let mut all1 = k1.gens.clone();
    all1.extend(k1.d_cx.coboundary_gens(2));
    if howell(&ring, dims, &all0) != howell(&ring, dims, &all1) {
        return Err(Error::Stabilization(format!(
            "inflation kernel did not stabilize at N = {n0}"
        )));
    }
    Ok(k0)
}

fn inflation_kernel_at(module: &AModule, pair: &LocalPair, n_exp: u32) -> InflationKernel {
    let ctx = pair_contexts(module, pair, n_exp);
    let ring = ctx.d_cx.ring;
    let z_gens = ctx.d_cx.cocycle_gens(2);
    let b_d = ctx.d_cx.coboundary_gens(2);
    let b_ghat = howell(&ring, ctx.ghat_cx.dims(2), &ctx.ghat_cx.coboundary_gens(2));
    let tr =
        Transport { src: &ctx.d_cx, dst: &ctx.ghat_cx, hom: ctx.hom.clone(), module_map: None };
    let kernel_gens = kernel_into_quotient(&ring, &z_gens, &b_ghat, |v| tr.transport2(v));
    let b_sub = howell(&ring, ctx.d_cx.dims(2), &b_d);
    let mut all = kernel_gens.clone();
    all.extend(b_d);
    let size_log = howell(&ring, ctx.d_cx.dims(2), &all).size_log(&ring) - b_sub.size_log(&ring);
    InflationKernel { d_cx: ctx.d_cx, gens: kernel_gens, size_log, approx_exponent: n_exp }
}

/// Generators of `{Σ c_i gens[i] : image ∈ target}` under a linear map.
fn kernel_into_quotient(
    ring: &Ring,
    gens: &[Vec<u64>],
    target: &Subgroup,
    map: impl Fn(&[u64]) -> Vec<u64>,
) -> Vec<Vec<u64>> {
    if gens.is_empty() {
        return Vec::new();
    }
    let out_dim = target.n;
    let images: Vec<Vec<u64>> = gens.iter().map(|g| map(g)).collect();
    let mut m = Mat::zero(out_dim, gens.len() + target.rows.len());
    for (c, img) in images.iter().enumerate() {
        for r in 0..out_dim {
            m[(r, c)] = img[r];
        }
    }
    for (c, tg) in target.rows.iter().enumerate() {
        for r in 0..out_dim {
            m[(r, gens.len() + c)] = tg[r];
        }
    }
    let ker = linalg::kernel(ring, &m);
    let in_dim = gens[0].len();
    let mut out = Vec::new();
    for coeffs in ker {
        let mut v = vec![0u64; in_dim];
        for (i, g) in gens.iter().enumerate() {
            let c = coeffs[i];
            if c == 0 {
                continue;
            }
            for (x, y) in v.iter_mut().zip(g) {
                *x = ring.add(*x, ring.mul(c, *y));
            }
        }
        if v.iter().any(|&x| x != 0) {
            out.push(v);
        }
    }
    out
}

/// The kernel of `H^2(A, M) → ⊕ H^2(D, M)/R(D, I, M)` over a list of pairs.
pub struct TypicalKernel {
    pub a_cx: Complex,
    pub gens: Vec<Vec<u64>>,
    pub size_log: u32,
}

pub fn kernel_over_pairs(module: &AModule, pairs: &[LocalPair]) -> Result<TypicalKernel> {
    let (a_pg, a_cm) = module.ambient();
    let a_cx = Complex::new(a_pg, a_cm);
    let ring = a_cx.ring;
    if module.orders.is_empty() {
        return Ok(TypicalKernel { a_cx, gens: vec![], size_log: 0 });
    }
    let mut k_gens = a_cx.cocycle_gens(2);
    let b_a = a_cx.coboundary_gens(2);
    for pair in pairs {
        if k_gens.is_empty() {
            break;
        }
        let infl = inflation_kernel_r(module, pair)?;
        let d_cx = infl.d_cx;
        let mut tgt = d_cx.coboundary_gens(2);
        tgt.extend(infl.gens.clone());
        let tgt_sub = howell(&ring, d_cx.dims(2), &tgt);
        let basis = module.group.cyclic_basis(&pair.d_elements);
        let hom: Vec<Vec<u64>> = basis.iter().map(|b| b.coords.clone()).collect();
        let tr = Transport { src: &a_cx, dst: &d_cx, hom, module_map: None };
        k_gens = kernel_into_quotient(&ring, &k_gens, &tgt_sub, |v| tr.transport2(v));
    }
    let b_sub = howell(&ring, a_cx.dims(2), &b_a);
    let mut all = k_gens.clone();
    all.extend(b_a);
    let size_log = howell(&ring, a_cx.dims(2), &all).size_log(&ring) - b_sub.size_log(&ring);
    Ok(TypicalKernel { a_cx, gens: k_gens, size_log })
}

/// `N_typical(A, M)`: the kernel over every pair in 𝒞.
pub fn n_typical(module: &AModule) -> Result<TypicalKernel> {
    let pairs: Vec<LocalPair> =
        module.group.subgroup_pairs().iter().map(LocalPair::from_subgroup_pair).collect();
    kernel_over_pairs(module, &pairs)
}

/// `N_φ(A, M)`: the kernel over the pairs realized by the listed ramified
/// places. Unramified places contribute no constraint.
pub fn n_phi(module: &AModule, ramified: &[LocalPair]) -> Result<TypicalKernel> {
    kernel_over_pairs(module, ramified)
}

/// The constant `C(A, eZ_p[A]/I)` for `I = m_e^d`.
pub fn constant_c(block: &IdempotentBlock, d: u32) -> Result<i64> {
    let r_e = block.ie_exponent()?;
    if d == 0 || d > r_e {
        return Err(Error::OutOfRange(format!("level d = {d} out of 1..={r_e}")));
    }
    if d == 1 {
        // M_1 = F_p
        return Ok(-(block.group().rank() as i64));
    }
    let m_d = AModule::from_block(block, d)?;
    let m_prev = AModule::from_block(block, d - 1)?;
    let n_d = n_typical(&m_d)?.size_log as i64;
    let n_prev = n_typical(&m_prev)?.size_log as i64;
    Ok(n_d - n_prev - 1)
}

/// Size mode for the local-condition computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeMode {
    Formula,
    Direct,
}

/// `log_p` of the ratio `|L_{v,j}| / |H^0(G_v, M_j)|`. Formula mode reads the
/// maximal special level; direct mode computes `|H^1|` of the finite
/// approximation of the local group by cocycle linear algebra.
pub fn local_condition_size(
    block: &IdempotentBlock,
    pair: &LocalPair,
    j: u32,
    mode: SizeMode,
) -> Result<u32> {
    let group = block.group();
    if group.is_zero(&pair.i_gen) {
        return Err(Error::UnramifiedPlace);
    }
    let r_e = block.ie_exponent()?;
    if j == 0 || j > r_e {
        return Err(Error::OutOfRange(format!("level j = {j} out of 1..={r_e}")));
    }
    match mode {
        SizeMode::Formula => {
            let inertia_order = group.order_of(&pair.i_gen);
            let mut best = 0u32;
            for i in 1..=j {
                if block.subgroup_acts_trivially(&pair.d_elements, i)
                    && inertia_order % block.module_exponent(i) == 0
                {
                    best = i;
                }
            }
            debug_assert!(best >= 1, "ramified places are special at level 1");
            Ok(best)
        }
        SizeMode::Direct => {
            let module = AModule::from_block(block, j)?;
            let n_exp = stabilization_exponent(&module, pair);
            let ctx = pair_contexts(&module, pair, n_exp);
            let h1 = ctx.ghat_cx.h_size_log(1);
            let h0 = ctx.d_cx.h_size_log(0);
            Ok(h1 - h0)
        }
    }
}

#[cfg(test)]
pub mod bar_oracle {
    //! Brute-force bar-resolution cohomology for small groups: the
    //! independent oracle behind the tensor machinery.

    use super::*;

    pub struct BarComplex {
        pub elements: Vec<Vec<u64>>,
        pub group: ProductGroup,
        pub module: CohModule,
        pub ring: Ring,
    }

    impl BarComplex {
        pub fn new(group: ProductGroup, module: CohModule) -> BarComplex {
            let ring = Ring::new(module.p, module.t);
            BarComplex { elements: group.elements(), group, module, ring }
        }

        fn idx(&self, g: &[u64]) -> usize {
            self.elements.iter().position(|e| e == g).unwrap()
        }

        fn act(&self, g: &[u64], v: &[u64]) -> Vec<u64> {
            self.module.action_of(&self.ring, g).apply(&self.ring, v)
        }

        pub fn dims(&self, k: u32) -> usize {
            self.elements.len().pow(k) * self.module.dim()
        }

        pub fn relations(&self, k: u32) -> Vec<Vec<u64>> {
            let rel = self.module.relations();
            let count = self.elements.len().pow(k);
            let md = self.module.dim();
            let mut out = Vec::new();
            for pos in 0..count {
                for r in &rel {
                    let mut v = vec![0u64; count * md];
                    v[pos * md..(pos + 1) * md].copy_from_slice(r);
                    out.push(v);
                }
            }
            out
        }

        pub fn delta(&self, k: u32, cochain: &[u64]) -> Vec<u64> {
            let n = self.elements.len();
            let md = self.module.dim();
            let fetch = |tuple: &[usize]| -> Vec<u64> {
                let mut pos = 0;
                for &t in tuple {
                    pos = pos * n + t;
                }
                cochain[pos * md..(pos + 1) * md].to_vec()
            };
            let mut out = vec![0u64; n.pow(k + 1) * md];
            let mut tuples: Vec<Vec<usize>> = vec![vec![]];
            for _ in 0..=k {
                let mut next = Vec::new();
                for t in &tuples {
                    for i in 0..n {
                        let mut t2 = t.clone();
                        t2.push(i);
                        next.push(t2);
                    }
                }
                tuples = next;
            }
            for t in &tuples {
                let mut pos = 0;
                for &x in t {
                    pos = pos * n + x;
                }
                let mut val = self.act(&self.elements[t[0]].clone(), &fetch(&t[1..]));
                for i in 0..k as usize {
                    let mut merged: Vec<usize> = Vec::new();
                    merged.extend(&t[..i]);
                    let g = self.group.add(&self.elements[t[i]], &self.elements[t[i + 1]]);
                    merged.push(self.idx(&g));
                    merged.extend(&t[i + 2..]);
                    let term = fetch(&merged);
                    for (o, x) in val.iter_mut().zip(&term) {
                        *o = if i % 2 == 0 { self.ring.sub(*o, *x) } else { self.ring.add(*o, *x) };
                    }
                }
                let last = fetch(&t[..k as usize]);
                for (o, x) in val.iter_mut().zip(&last) {
                    *o = if k % 2 == 0 { self.ring.sub(*o, *x) } else { self.ring.add(*o, *x) };
                }
                out[pos * md..(pos + 1) * md].copy_from_slice(&val);
            }
            out
        }

        pub fn coboundary_sub(&self, k: u32) -> Subgroup {
            let mut gens = self.relations(k);
            if k > 0 {
                for i in 0..self.dims(k - 1) {
                    let mut c = vec![0u64; self.dims(k - 1)];
                    c[i] = 1;
                    gens.push(self.delta(k - 1, &c));
                }
            }
            howell(&self.ring, self.dims(k), &gens)
        }

        pub fn h_size_log(&self, k: u32) -> u32 {
            let dims_in = self.dims(k);
            let out_dim = self.dims(k + 1);
            let rel_out = self.relations(k + 1);
            let mut m = Mat::zero(out_dim, dims_in + rel_out.len());
            for i in 0..dims_in {
                let mut c = vec![0u64; dims_in];
                c[i] = 1;
                let img = self.delta(k, &c);
                for r in 0..out_dim {
                    m[(r, i)] = img[r];
                }
            }
            for (c, rv) in rel_out.iter().enumerate() {
                for r in 0..out_dim {
                    m[(r, dims_in + c)] = rv[r];
                }
            }
            let ker = linalg::kernel(&self.ring, &m);
            let mut z_gens: Vec<Vec<u64>> =
                ker.into_iter().map(|v| v[..dims_in].to_vec()).collect();
            z_gens.extend(self.relations(k));
            let z = howell(&self.ring, dims_in, &z_gens);
            let b = self.coboundary_sub(k);
            z.size_log(&self.ring) - b.size_log(&self.ring)
        }
    }
}
