//! Browser bindings for the workbench demo page: three interactive
//! operations returning JSON strings, thin enough to call from vanilla JS.

use wasm_bindgen::prelude::*;

use statgenus_core::abelian::AbelianPGroup;
use statgenus_core::blocks::{primitive_idempotents, IdempotentBlock};
use statgenus_core::charsum::detector_identity_per_extension;
use statgenus_core::cohomology::{constant_c, n_typical, AModule};
use statgenus_core::ext::{enumerate_extensions, DlogContext, ExtensionHandle, ExtensionTuple};
use statgenus_core::selmer::{dual_selmer_mu_p, hom_nr_certified, predict_rank, Certificate};

const ENUM_BOUND_CAP: u64 = 100_000;

fn err_json(e: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": e.to_string() }).to_string()
}

fn blocks_of(group: &AbelianPGroup) -> Vec<IdempotentBlock> {
    primitive_idempotents(group).into_iter().filter(|b| !b.is_trivial()).collect()
}

/// Block-ring panel: idempotent orbits, r_e, module exponents, the constant
/// C per level and the typical-kernel orders.
#[wasm_bindgen]
pub fn ring_info(group: &str) -> String {
    let inner = || -> statgenus_core::Result<serde_json::Value> {
        let g = AbelianPGroup::parse(group)?;
        let mut blocks = Vec::new();
        for b in blocks_of(&g) {
            let r_e = b.ie_exponent()?;
            let mut levels = Vec::new();
            for d in 1..=r_e {
                let m = AModule::from_block(&b, d)?;
                levels.push(serde_json::json!({
                    "level": d,
                    "size_log": d,
                    "exponent_log": b.module_exponent(d).ilog(b.p()),
                    "constant": constant_c(&b, d)?,
                    "n_typical_log": n_typical(&m)?.size_log,
                }));
            }
            blocks.push(serde_json::json!({
                "id": b.id(),
                "k": b.level(),
                "orbit_size": b.orbit_size(),
                "ramification": b.ramification(),
                "r_e": r_e,
                "levels": levels,
            }));
        }
        Ok(serde_json::json!({
            "group": g.to_string(),
            "order": g.order(),
            "rank": g.rank(),
            "blocks": blocks,
        }))
    };
    match inner() {
        Ok(v) => v.to_string(),
        Err(e) => err_json(e),
    }
}

/// Enumeration panel: conductor-ordered family with special primes,
/// predicted ranks and dual-Selmer vanishing flags at one level.
#[wasm_bindgen]
pub fn enumerate_predict(group: &str, bound: u64, block_index: usize, level: u32) -> String {
    let inner = || -> statgenus_core::Result<serde_json::Value> {
        let g = AbelianPGroup::parse(group)?;
        let bound = bound.min(ENUM_BOUND_CAP);
        let blocks = blocks_of(&g);
        let b = blocks
            .get(block_index)
            .ok_or_else(|| statgenus_core::Error::Parse("block index out of range".into()))?;
        let r_e = b.ie_exponent()?;
        let level = level.clamp(1, r_e);
        let ctx = DlogContext::new();
        let handles = enumerate_extensions(&g, bound);
        let mut rows = Vec::new();
        for h in handles.iter().take(2000) {
            let pred = predict_rank(&ctx, h, b, level)?;
            let ds = dual_selmer_mu_p(&ctx, h, b, level)?;
            rows.push(serde_json::json!({
                "conductor": h.conductor(),
                "tuple": h.tuple.encode(),
                "special": pred.special_count,
                "constant": pred.constant,
                "predicted_rank": pred.rank,
                "dual_vanishing": ds.order_log == 0,
            }));
        }
        Ok(serde_json::json!({
            "group": g.to_string(),
            "block": b.id(),
            "level": level,
            "bound": bound,
            "total": handles.len(),
            "shown": rows.len(),
            "rows": rows,
        }))
    };
    match inner() {
        Ok(v) => v.to_string(),
        Err(e) => err_json(e),
    }
}

/// Identity panel: the per-extension detector identity and the certified
/// size of the unramified homomorphism module for one tuple.
#[wasm_bindgen]
pub fn detector_check(group: &str, tuple: &str, block_index: usize, level: u32) -> String {
    let inner = || -> statgenus_core::Result<serde_json::Value> {
        let g = AbelianPGroup::parse(group)?;
        let blocks = blocks_of(&g);
        let b = blocks
            .get(block_index)
            .ok_or_else(|| statgenus_core::Error::Parse("block index out of range".into()))?;
        let r_e = b.ie_exponent()?;
        let level = level.clamp(1, r_e);
        let t = ExtensionTuple::decode(&g, tuple)?;
        let h = ExtensionHandle::new(t);
        let ctx = DlogContext::new();
        let det = detector_identity_per_extension(&ctx, &h, b, level)?;
        let ds = dual_selmer_mu_p(&ctx, &h, b, level)?;
        let hom = hom_nr_certified(&ctx, &h, b, level)?;
        let lines: Vec<serde_json::Value> = ds
            .lines
            .iter()
            .map(|(q, l)| serde_json::json!({ "prime": q, "line": format!("{l:?}") }))
            .collect();
        Ok(serde_json::json!({
            "conductor": h.conductor(),
            "tuple": h.tuple.encode(),
            "level": level,
            "detector_lhs": det.lhs,
            "detector_rhs_scaled": det.rhs_scaled,
            "detector_count": det.detector_count,
            "dual_selmer_log": ds.order_log,
            "dual_lines": lines,
            "certified_size_log": hom.size_log,
            "certificate": match hom.certificate {
                Certificate::Exact => "EXACT",
                Certificate::FormulaOnly => "FORMULA-ONLY",
            },
        }))
    };
    match inner() {
        Ok(v) => v.to_string(),
        Err(e) => err_json(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_surfaces() {
        let v: serde_json::Value = serde_json::from_str(&ring_info("9")).unwrap();
        assert_eq!(v["blocks"].as_array().unwrap().len(), 2);
        let v: serde_json::Value =
            serde_json::from_str(&enumerate_predict("3", 100, 0, 1)).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), v["total"].as_u64().unwrap() as usize);
        let v: serde_json::Value =
            serde_json::from_str(&detector_check("3", "1:91", 0, 1)).unwrap();
        assert_eq!(v["certificate"], "EXACT");
        assert_eq!(v["certified_size_log"], 1);
        let v: serde_json::Value = serde_json::from_str(&ring_info("6")).unwrap();
        assert!(v["error"].is_string());
    }
}
