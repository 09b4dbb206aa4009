use statgenus_core::abelian::AbelianPGroup;
use statgenus_core::blocks::primitive_idempotents;
use statgenus_core::ext::{enumerate_extensions, DlogContext};
use statgenus_core::selmer::{hom_nr_certified, predict_rank, Certificate};

fn main() {
    let a = AbelianPGroup::parse("3x3").unwrap();
    let blocks: Vec<_> = primitive_idempotents(&a).into_iter().filter(|b| !b.is_trivial()).collect();
    let ctx = DlogContext::new();
    let handles = enumerate_extensions(&a, 700);
    println!("{} handles", handles.len());
    let mut exact = 0; let mut formula_only = 0; let mut mismatch_exact = 0; let mut mismatch_any = 0;
    for h in &handles {
        for b in &blocks {
            let rep = hom_nr_certified(&ctx, h, b, 1).unwrap();
            let pred = predict_rank(&ctx, h, b, 1).unwrap();
            match rep.certificate {
                Certificate::Exact => {
                    exact += 1;
                    if rep.size_log != pred.rank { mismatch_exact += 1;
                        println!("EXACT MISMATCH {:?} {} size={} pred={} nphi={}", h, b.id(), rep.size_log, pred.rank, rep.n_phi_log); }
                }
                Certificate::FormulaOnly => {
                    formula_only += 1;
                    if rep.size_log != pred.rank { mismatch_any += 1; }
                }
            }
        }
    }
    println!("exact={exact} formula_only={formula_only} exact-mismatch={mismatch_exact} formulaonly-mismatch={mismatch_any}");
}
