//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers. Exact identities are asserted exactly; the
//! statistical monitor asserts only positivity and monotonicity within the
//! stated sampling tolerance.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use statgenus_core::abelian::AbelianPGroup;
use statgenus_core::blocks::{primitive_idempotents, IdempotentBlock};
use statgenus_core::charsum::{
    self, canonical_unlinked_sets, charsum_outer_sum, classify_maximal_unlinked,
    detector_identity_per_extension, index_set, weight_budget, weight_of_set, PairTable,
    UnlinkedGraph,
};
use statgenus_core::cohomology::{local_condition_size, n_typical, AModule, LocalPair, SizeMode};
use statgenus_core::ext::{
    char_eval_tame, enumerate_extensions, enumerate_extensions_with_sieve, is_prime, DlogContext,
    ExtensionHandle, ExtensionTuple, Sieve,
};
use statgenus_core::selmer::{
    dual_selmer_mu_p, gw_identity_check, hom_nr_certified, hom_nr_fp_direct, predict_rank,
    random_structure,
};

fn group(s: &str) -> AbelianPGroup {
    AbelianPGroup::parse(s).unwrap()
}

fn nontrivial_blocks(g: &AbelianPGroup) -> Vec<IdempotentBlock> {
    primitive_idempotents(g).into_iter().filter(|b| !b.is_trivial()).collect()
}

#[test]
fn criterion_1_genus_theory_exactness() {
    let start = Instant::now();
    let a = group("3");
    let b = nontrivial_blocks(&a).remove(0);
    let ctx = DlogContext::new();
    let handles = enumerate_extensions(&a, 5000);
    let mut checked = 0usize;
    for h in &handles {
        let ram = h.ramified().len() as i64;
        let predicted = predict_rank(&ctx, h, &b, 1).unwrap().rank;
        assert_eq!(predicted, ram - 1, "prediction vs genus count on {h:?}");
        let direct = hom_nr_fp_direct(&ctx, h).unwrap();
        assert_eq!(predicted, direct, "prediction vs character side on {h:?}");
        let certified = hom_nr_certified(&ctx, h, &b, 1).unwrap().size_log;
        assert_eq!(predicted, certified, "prediction vs certified size on {h:?}");
        checked += 1;
    }
    let dt = start.elapsed();
    assert!(dt.as_secs() < 60, "runtime bound: {dt:?}");
    println!(
        "ACCEPTANCE 1 (genus-theory exactness, level 1): PASS — {checked} handles of conductor <= 5000, zero exceptions, {dt:?}"
    );
}

#[test]
fn criterion_2_n_typical_vanishing() {
    let start = Instant::now();
    let mut cases = 0usize;
    // all (H, F_p) with |H| <= 81
    for name in ["3", "9", "27", "81", "3x3", "9x3", "27x3", "9x9", "3x3x3", "9x3x3", "3x3x3x3"] {
        let h = group(name);
        let m = AModule::trivial_fp(&h);
        assert_eq!(n_typical(&m).unwrap().size_log, 0, "(H, F_p) for H = {name}");
        cases += 1;
    }
    // elementary abelian rank <= 3: every nontrivial block, every proper I ⊇ I_e
    for name in ["3", "3x3", "3x3x3"] {
        let a = group(name);
        for b in nontrivial_blocks(&a) {
            for d in 1..=b.ie_exponent().unwrap() {
                let m = AModule::from_block(&b, d).unwrap();
                assert_eq!(n_typical(&m).unwrap().size_log, 0, "{name} {} d={d}", b.id());
                cases += 1;
            }
        }
    }
    // cyclic of order <= 27
    for name in ["3", "9", "27"] {
        let a = group(name);
        for b in nontrivial_blocks(&a) {
            for d in 1..=b.ie_exponent().unwrap() {
                let m = AModule::from_block(&b, d).unwrap();
                assert_eq!(n_typical(&m).unwrap().size_log, 0, "{name} {} d={d}", b.id());
                cases += 1;
            }
        }
    }
    let dt = start.elapsed();
    assert!(dt.as_secs() < 300, "runtime bound: {dt:?}");
    println!("ACCEPTANCE 2 (N_typical vanishing): PASS — {cases} kernel computations all trivial, {dt:?}");
}

#[test]
fn criterion_3_local_condition_sizes() {
    let start = Instant::now();
    let mut cases = 0usize;
    for name in ["3", "9", "3x3"] {
        let a = group(name);
        for b in nontrivial_blocks(&a) {
            let r_e = b.ie_exponent().unwrap();
            for pair in a.subgroup_pairs() {
                if a.is_zero(&pair.i_gen) {
                    continue;
                }
                let lp = LocalPair::from_subgroup_pair(&pair);
                for j in 1..=r_e {
                    let f = local_condition_size(&b, &lp, j, SizeMode::Formula).unwrap();
                    let d = local_condition_size(&b, &lp, j, SizeMode::Direct).unwrap();
                    assert_eq!(f, d, "{name} {} j={j}", b.id());
                    cases += 1;
                }
            }
        }
    }
    let dt = start.elapsed();
    assert!(dt.as_secs() < 300, "runtime bound: {dt:?}");
    println!("ACCEPTANCE 3 (local-condition size formula): PASS — {cases} ramified (pair, level) instances agree, {dt:?}");
}

#[test]
fn criterion_4_greenberg_wiles_duality() {
    let start = Instant::now();
    let a = group("3");
    let ctx = DlogContext::new();
    let handles = enumerate_extensions(&a, 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(20260809);
    let mut checked = 0usize;
    while checked < 1200 {
        let h = &handles[rng.gen_range(0..handles.len())];
        let s = random_structure(h, 1, &mut rng);
        gw_identity_check(&ctx, h, &s).unwrap();
        checked += 1;
    }
    let dt = start.elapsed();
    println!(
        "ACCEPTANCE 4 (Greenberg–Wiles duality): PASS — {checked} randomized structures over conductors <= 10^4, zero failures, {dt:?}"
    );
}

#[test]
fn criterion_5_detector_identity_sweep() {
    let start = Instant::now();
    let a = group("3");
    let b = nontrivial_blocks(&a).remove(0);
    let r_e = b.ie_exponent().unwrap();
    let ctx = DlogContext::new();
    let handles = enumerate_extensions(&a, 10_000);
    let mut checked = 0usize;
    for h in &handles {
        for d in 1..=r_e {
            detector_identity_per_extension(&ctx, h, &b, d).unwrap();
            checked += 1;
        }
    }
    let dt = start.elapsed();
    assert!(dt.as_secs() < 600, "runtime bound: {dt:?}");
    println!(
        "ACCEPTANCE 5 (per-extension detector identity): PASS — {checked} (handle, level) pairs of conductor <= 10^4, exact equality, {dt:?}"
    );
}

#[test]
fn criterion_6_outer_character_sum() {
    let start = Instant::now();
    let a = group("3");
    let b = nontrivial_blocks(&a).remove(0);
    let ctx = DlogContext::new();
    // minimal nonempty family in threshold-1 mode: the six smallest primes
    // congruent to 1 mod 3 multiply to 85,276,009; the next support appears
    // at 93,208,661, so this bound isolates the minimal one
    let bound = 86_000_000u64;
    let rep = charsum_outer_sum(&ctx, &a, &b, 1, bound, 1).unwrap();
    assert!(rep.family_size > 0, "family must be nonempty at the minimal bound");
    assert!(rep.lhs > 0);
    // growth-threshold mode at small X: G(X) = exp((log X)^{1/2}) empties the family
    let x = 1000u64;
    let g = ((x as f64).ln().sqrt().exp()).floor() as u64;
    let trivial = charsum_outer_sum(&ctx, &a, &b, 1, x, g).unwrap();
    assert_eq!(trivial.lhs, 0);
    assert_eq!(trivial.family_size, 0);
    let dt = start.elapsed();
    println!(
        "ACCEPTANCE 6 (outer character-sum identity): PASS — minimal family of {} handles, lhs = rhs = {}, {} expanded terms; growth-threshold mode 0 = 0, {dt:?}",
        rep.family_size, rep.lhs, rep.rhs_terms
    );
}

#[test]
fn criterion_7_unlinked_classification() {
    let start = Instant::now();
    let configs: Vec<(&str, u32, u64)> =
        vec![("3", 1, 4000), ("3x3", 1, 3000), ("3x3", 2, 3000)];
    let mut total = 0u64;
    let mut canonical_total = 0usize;
    for (name, level, samples) in configs {
        let a = group(name);
        let b = nontrivial_blocks(&a).remove(0);
        let table = PairTable::new(&a, &b, level).unwrap();
        let canonical = canonical_unlinked_sets(&table).unwrap();
        canonical_total += canonical.len();
        let idx = index_set(&table);
        let graph = UnlinkedGraph::new(&a, idx.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(level as u64 * 1000 + a.order());
        let budget = weight_budget(&a);
        let u_sorted = charsum::canonical_u(&table);
        for _ in 0..samples {
            let chosen = graph.random_maximal(&mut rng);
            let set: Vec<charsum::IndexEntry> =
                chosen.iter().map(|&i| graph.entries[i].clone()).collect();
            // every sampled maximal set receives a verdict
            classify_maximal_unlinked(&table, &set, &idx).unwrap();
            // the weight claim for sampled maxima other than the distinguished set
            let mut sorted = set.clone();
            sorted.sort();
            if sorted != u_sorted {
                let wt = weight_of_set(&a, &idx, &set);
                assert!(wt < budget, "weight claim violated for {name} level {level}");
            }
            total += 1;
        }
    }
    let dt = start.elapsed();
    println!(
        "ACCEPTANCE 7 (unlinked classification): PASS — {canonical_total} canonical sets verified, {total} randomized maximal sets classified with the weight claim intact, {dt:?}"
    );
}

#[test]
fn criterion_8_parametrization_roundtrip() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = group("3x3");
    let admissible: Vec<u64> =
        (2..3000).filter(|&q| is_prime(q) && (q == 3 || q % 3 == 1)).collect();
    let nonzero: Vec<_> = a.elements().into_iter().filter(|x| !a.is_zero(x)).collect();
    let mut random_checked = 0usize;
    while random_checked < 10_000 {
        let k = rng.gen_range(1..=3);
        let mut used: Vec<u64> = Vec::new();
        let mut parts: std::collections::BTreeMap<_, u64> = Default::default();
        for _ in 0..k {
            let q = admissible[rng.gen_range(0..admissible.len())];
            if used.contains(&q) {
                continue;
            }
            let cand = &nonzero[rng.gen_range(0..nonzero.len())];
            if q != 3 && q % a.order_of(cand) != 1 {
                continue;
            }
            used.push(q);
            *parts.entry(cand.clone()).or_insert(1) *= q;
        }
        if parts.is_empty() {
            continue;
        }
        let Ok(tuple) = ExtensionTuple::new(&a, parts.into_iter().collect()) else { continue };
        let h = ExtensionHandle::new(tuple.clone());
        assert_eq!(h.ev_roundtrip(), tuple, "roundtrip failed");
        let product: u64 = tuple.parts.iter().map(|(_, w)| w).product();
        assert_eq!(h.conductor(), product, "conductor formula");
        random_checked += 1;
    }
    // the full conductor-ordered family for Z/3 up to 10^4
    let z3 = group("3");
    let handles = enumerate_extensions(&z3, 10_000);
    for h in &handles {
        assert_eq!(h.ev_roundtrip(), h.tuple);
        let product: u64 = h.tuple.parts.iter().map(|(_, w)| w).product();
        assert_eq!(h.conductor(), product);
    }
    let dt = start.elapsed();
    println!(
        "ACCEPTANCE 8 (parametrization roundtrip): PASS — {random_checked} random tuples + {} enumerated handles, conductor formula exact, {dt:?}",
        handles.len()
    );
}

#[test]
fn criterion_9_statistical_monitor() {
    let start = Instant::now();
    let a = group("3");
    let b = nontrivial_blocks(&a).remove(0);
    let ctx = DlogContext::new();
    let sieve = Sieve::new(100_000);
    // fast level-1 vanishing flag: the dual lines vanish, so the dual Selmer
    // group is trivial exactly when some tame ramified prime sees p as a
    // non-residue; cross-checked against the full computation on a sample
    let mut proportions = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for bound in [1000u64, 10_000, 100_000] {
        let handles = enumerate_extensions_with_sieve(&a, bound, &sieve);
        let mut vanish = 0usize;
        for h in &handles {
            let fast = h
                .tame
                .iter()
                .any(|(q, _)| char_eval_tame(&ctx, 3, *q, 1, 3).unwrap() != 0);
            if fast {
                vanish += 1;
            }
            if rng.gen_range(0..200) == 0 {
                let slow = dual_selmer_mu_p(&ctx, h, &b, 1).unwrap().order_log == 0;
                assert_eq!(fast, slow, "fast flag disagrees on {h:?}");
            }
        }
        proportions.push((bound, handles.len(), vanish as f64 / handles.len() as f64));
    }
    assert!(proportions[0].2 > 0.0, "vanishing proportion must be positive at 10^3");
    for w in proportions.windows(2) {
        assert!(
            w[1].2 >= w[0].2 - 0.05,
            "vanishing proportion decreased beyond tolerance: {proportions:?}"
        );
    }
    let dt = start.elapsed();
    let line: Vec<String> =
        proportions.iter().map(|(x, n, p)| format!("X=10^{} n={} p={:.4}", x.ilog10(), n, p)).collect();
    println!(
        "ACCEPTANCE 9 (statistical monitor, soft): PASS — dual-Selmer vanishing {}, nondecreasing within ±0.05, {dt:?}",
        line.join("; ")
    );
}
