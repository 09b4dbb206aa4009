//! Command-line workbench: enumeration, block-ring inspection, cohomological
//! constants, special primes, rank prediction, Selmer scans, character-sum
//! identity checks, unlinked-set experiments and table ingestion.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use statgenus_core::abelian::AbelianPGroup;
use statgenus_core::blocks::{primitive_idempotents, IdempotentBlock};
use statgenus_core::charsum;
use statgenus_core::cohomology::{self, AModule, Complex};
use statgenus_core::ext::{
    enumerate_extensions, special_primes, DlogContext, ExtensionHandle, ExtensionTuple,
};
use statgenus_core::scan::{self, ScanConfig};
use statgenus_core::selmer;

#[derive(Parser)]
#[command(name = "statgenus", version, about = "statistical genus theory workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GroupArg {
    /// group as invariant factors, e.g. "3", "9", "3x3"
    #[arg(long)]
    group: String,
}

#[derive(Args, Clone)]
struct BlockArg {
    /// zero-based index among the nontrivial idempotent blocks
    #[arg(long, default_value_t = 0)]
    block: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate surjective parametrizing tuples by conductor
    Enumerate {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long)]
        bound: u64,
        /// output CSV path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Block-ring data: idempotent orbits, r_e, quotient sizes
    RingInfo {
        #[command(flatten)]
        group: GroupArg,
    },
    /// Cohomology orders of the block module (degrees 0..2)
    Cohomology {
        #[command(flatten)]
        group: GroupArg,
        #[command(flatten)]
        block: BlockArg,
        #[arg(long, default_value_t = 1)]
        level: u32,
    },
    /// The constant C(A, eZ_p[A]/m^d)
    Constant {
        #[command(flatten)]
        group: GroupArg,
        #[command(flatten)]
        block: BlockArg,
        #[arg(long)]
        level: u32,
    },
    /// Special primes of one extension at a level
    SpecialPrimes {
        #[command(flatten)]
        group: GroupArg,
        #[command(flatten)]
        block: BlockArg,
        /// tuple encoding, e.g. "1:91" or "1,0:7;0,1:13"
        #[arg(long)]
        tuple: String,
        #[arg(long)]
        level: u32,
    },
    /// Rank prediction for one extension
    Predict {
        #[command(flatten)]
        group: GroupArg,
        #[command(flatten)]
        block: BlockArg,
        #[arg(long)]
        tuple: String,
        #[arg(long)]
        level: u32,
    },
    /// Conductor sweep with Selmer certificates
    SelmerScan {
        /// TOML config with [group], [scan], [output] sections
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        bound: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Character-sum identities, per extension or the thresholded outer sum
    Charsum {
        #[command(flatten)]
        group: GroupArg,
        #[command(flatten)]
        block: BlockArg,
        #[arg(long, default_value_t = 1)]
        level: u32,
        #[arg(long)]
        bound: u64,
        /// per-extension | outer
        #[arg(long, default_value = "per-extension")]
        mode: String,
        #[arg(long, default_value_t = 1)]
        threshold: u64,
        /// CSV of per-handle (lhs, rhs) for per-extension mode
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unlinked-set laboratory: canonical sets and randomized maxima
    Unlinked {
        #[command(flatten)]
        group: GroupArg,
        #[command(flatten)]
        block: BlockArg,
        #[arg(long, default_value_t = 1)]
        level: u32,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Join an external class-group table against scan records
    Ingest {
        #[arg(long)]
        table: PathBuf,
        /// JSON report produced by selmer-scan
        #[arg(long)]
        records: PathBuf,
        /// mismatches exit zero when set
        #[arg(long)]
        lenient: bool,
    },
    /// Re-emit a JSON report as CSV or JSON
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn nontrivial_blocks(group: &AbelianPGroup) -> Vec<IdempotentBlock> {
    primitive_idempotents(group).into_iter().filter(|b| !b.is_trivial()).collect()
}

fn pick_block(group: &AbelianPGroup, idx: usize) -> statgenus_core::Result<IdempotentBlock> {
    nontrivial_blocks(group)
        .into_iter()
        .nth(idx)
        .ok_or_else(|| statgenus_core::Error::Parse(format!("block index {idx} out of range")))
}

fn emit(path: &Option<PathBuf>, contents: &str) -> statgenus_core::Result<()> {
    match path {
        Some(p) => scan::write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> statgenus_core::Result<ExitCode> {
    match cli.command {
        Command::Enumerate { group, bound, out } => {
            let g = AbelianPGroup::parse(&group.group)?;
            let handles = enumerate_extensions(&g, bound);
            let mut w = csv::string_writer();
            w.push_str("conductor,tuple,surjective\n");
            for h in &handles {
                w.push_str(&format!("{},{},true\n", h.conductor(), csv::quote(&h.tuple.encode())));
            }
            emit(&out, &w)?;
            eprintln!("{} tuples with conductor <= {}", handles.len(), bound);
            Ok(ExitCode::SUCCESS)
        }
        Command::RingInfo { group } => {
            let g = AbelianPGroup::parse(&group.group)?;
            println!("group {} of order {}", g, g.order());
            for b in primitive_idempotents(&g) {
                if b.is_trivial() {
                    println!("block {} (trivial)", b.id());
                    continue;
                }
                let r_e = b.ie_exponent()?;
                print!(
                    "block {} orbit_size={} e={} r_e={}",
                    b.id(),
                    b.orbit_size(),
                    b.ramification(),
                    r_e
                );
                let sizes: Vec<String> = (1..=r_e)
                    .map(|j| format!("|M_{j}|=p^{j},exp=p^{}", b.module_exponent(j).ilog(b.p())))
                    .collect();
                println!(" {}", sizes.join(" "));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Cohomology { group, block, level } => {
            let g = AbelianPGroup::parse(&group.group)?;
            let b = pick_block(&g, block.block)?;
            let m = AModule::from_block(&b, level)?;
            let (pg, cm) = m.ambient();
            let cx = Complex::new(pg, cm);
            println!("group,module,degree,order_log");
            for n in 0..=2 {
                println!("{},{}/m^{},{},{}", g, b.id(), level, n, cx.h_size_log(n));
            }
            let typ = cohomology::n_typical(&m)?;
            println!("N_typical order = p^{}", typ.size_log);
            Ok(ExitCode::SUCCESS)
        }
        Command::Constant { group, block, level } => {
            let g = AbelianPGroup::parse(&group.group)?;
            let b = pick_block(&g, block.block)?;
            println!("C({}, {}/m^{}) = {}", g, b.id(), level, cohomology::constant_c(&b, level)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::SpecialPrimes { group, block, tuple, level } => {
            let g = AbelianPGroup::parse(&group.group)?;
            let b = pick_block(&g, block.block)?;
            let t = ExtensionTuple::decode(&g, &tuple)?;
            let h = ExtensionHandle::new(t);
            let ctx = DlogContext::new();
            let rep = special_primes(&ctx, &h, &b, level)?;
            println!("place,max_special_level");
            for (q, lvl) in &rep.per_place {
                println!("{q},{lvl}");
            }
            println!(
                "special at level {}: {{{}}}",
                level,
                rep.special_at_d.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(", ")
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict { group, block, tuple, level } => {
            let g = AbelianPGroup::parse(&group.group)?;
            let b = pick_block(&g, block.block)?;
            let t = ExtensionTuple::decode(&g, &tuple)?;
            let h = ExtensionHandle::new(t);
            let ctx = DlogContext::new();
            let pred = selmer::predict_rank(&ctx, &h, &b, level)?;
            println!(
                "conductor {} level {}: #special = {}, C = {}, predicted rank = {}{}",
                h.conductor(),
                level,
                pred.special_count,
                pred.constant,
                pred.rank,
                if pred.applicable { "" } else { " (formula inapplicable)" }
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::SelmerScan { config, group, bound, out, format } => {
            let cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    ScanConfig::from_toml(&text)?
                }
                None => {
                    let (Some(group), Some(bound)) = (group, bound) else {
                        return Err(statgenus_core::Error::Parse(
                            "need --config or both --group and --bound".into(),
                        ));
                    };
                    ScanConfig::from_toml(&format!(
                        "[group]\nname = \"{group}\"\n[scan]\nbound = {bound}\n[output]\nformat = \"{format}\"\n"
                    ))?
                }
            };
            let (records, summary) = scan::run_scan(&cfg)?;
            let fmt = cfg.output.format.clone();
            let target = out.or_else(|| cfg.output.records.clone().map(PathBuf::from));
            let contents = if fmt == "json" {
                scan::records_to_json(&records, &summary)?
            } else {
                scan::records_to_csv(&records)?
            };
            emit(&target, &contents)?;
            eprintln!("{}", serde_json_summary(&summary));
            Ok(ExitCode::SUCCESS)
        }
        Command::Charsum { group, block, level, bound, mode, threshold, out } => {
            let g = AbelianPGroup::parse(&group.group)?;
            let b = pick_block(&g, block.block)?;
            let ctx = DlogContext::new();
            match mode.as_str() {
                "per-extension" => {
                    let handles = enumerate_extensions(&g, bound);
                    let mut rows = String::from("conductor,tuple,lhs,rhs_scaled,detectors\n");
                    let mut failures = 0;
                    for h in &handles {
                        match charsum::detector_identity_per_extension(&ctx, h, &b, level) {
                            Ok(rep) => rows.push_str(&format!(
                                "{},{},{},{},{}\n",
                                h.conductor(),
                                csv::quote(&h.tuple.encode()),
                                rep.lhs,
                                rep.rhs_scaled,
                                rep.detector_count
                            )),
                            Err(e) => {
                                failures += 1;
                                eprintln!("FAIL {h:?}: {e}");
                            }
                        }
                    }
                    emit(&out, &rows)?;
                    println!(
                        "{{\"mode\":\"per-extension\",\"handles\":{},\"failures\":{}}}",
                        handles.len(),
                        failures
                    );
                    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
                }
                "outer" => {
                    let rep = charsum::charsum_outer_sum(&ctx, &g, &b, level, bound, threshold)?;
                    println!(
                        "{{\"mode\":\"outer\",\"lhs\":{},\"rhs\":\"{}\",\"family\":{},\"terms\":{}}}",
                        rep.lhs, rep.rhs, rep.family_size, rep.rhs_terms
                    );
                    Ok(ExitCode::SUCCESS)
                }
                other => Err(statgenus_core::Error::Parse(format!("unknown mode {other:?}"))),
            }
        }
        Command::Unlinked { group, block, level, samples, seed } => {
            use rand::SeedableRng;
            let g = AbelianPGroup::parse(&group.group)?;
            let b = pick_block(&g, block.block)?;
            let table = charsum::PairTable::new(&g, &b, level)?;
            let canonical = charsum::canonical_unlinked_sets(&table)?;
            println!("canonical maximal unlinked sets: {}", canonical.len());
            let idx = charsum::index_set(&table);
            let graph = charsum::UnlinkedGraph::new(&g, idx.clone());
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut verdicts: std::collections::BTreeMap<String, u64> = Default::default();
            let budget = charsum::weight_budget(&g);
            let mut weight_violations = 0u64;
            for _ in 0..samples {
                let chosen = graph.random_maximal(&mut rng);
                let set: Vec<charsum::IndexEntry> =
                    chosen.iter().map(|&i| graph.entries[i].clone()).collect();
                let v = charsum::classify_maximal_unlinked(&table, &set, &idx)?;
                *verdicts.entry(format!("{v:?}")).or_default() += 1;
                let mut sorted = set.clone();
                sorted.sort();
                if sorted != charsum::canonical_u(&table)
                    && charsum::weight_of_set(&g, &idx, &set) >= budget
                {
                    weight_violations += 1;
                }
            }
            for (v, n) in &verdicts {
                println!("{v}: {n}");
            }
            println!("weight violations: {weight_violations}");
            Ok(if weight_violations == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Ingest { table, records, lenient } => {
            let table_text = std::fs::read_to_string(table)?;
            let records_text = std::fs::read_to_string(records)?;
            let report: scan::JsonReport = serde_json::from_str(&records_text)
                .map_err(|e| statgenus_core::Error::Parse(format!("records: {e}")))?;
            let (rows, parse_errors) = scan::parse_class_table(&table_text)?;
            let mut outcome = scan::compare_with_records(&rows, &report.records);
            outcome.parse_errors = parse_errors;
            println!("{}", serde_json::to_string_pretty(&outcome).unwrap());
            if outcome.mismatches > 0 && !lenient {
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { records, format, out } => {
            let text = std::fs::read_to_string(records)?;
            let report: scan::JsonReport = serde_json::from_str(&text)
                .map_err(|e| statgenus_core::Error::Parse(format!("records: {e}")))?;
            let contents = if format == "json" {
                scan::records_to_json(&report.records, &report.summary)?
            } else {
                scan::records_to_csv(&report.records)?
            };
            emit(&out, &contents)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn serde_json_summary(summary: &scan::ScanSummary) -> String {
    serde_json::to_string(summary).unwrap_or_default()
}

/// Minimal CSV quoting helpers (RFC-style: quote when needed).
mod csv {
    pub fn string_writer() -> String {
        String::new()
    }

    pub fn quote(field: &str) -> String {
        if field.contains([',', '"', '\n']) {
            format!("\"{}\"", field.replace('"', "\"\""))
        } else {
            field.to_string()
        }
    }
}
