//! End-to-end checks of the command-line surface.

use std::process::Command;

fn statgenus() -> Command {
    Command::new(env!("CARGO_BIN_EXE_statgenus"))
}

#[test]
fn enumerate_matches_known_count() {
    let out = statgenus().args(["enumerate", "--group", "3", "--bound", "10"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "conductor,tuple,surjective");
    assert_eq!(lines.len(), 5, "4 tuples with conductor <= 10");
}

#[test]
fn scan_ingest_report_pipeline() {
    let dir = std::env::temp_dir().join(format!("statgenus-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("scan.toml");
    let records = dir.join("records.json");
    std::fs::write(
        &config,
        format!(
            "[group]\nname = \"3\"\n\n[scan]\nbound = 120\n\n[output]\nrecords = \"{}\"\nformat = \"json\"\n",
            records.display()
        ),
    )
    .unwrap();
    let out = statgenus()
        .args(["selmer-scan", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(records.exists());

    // ingest: the trivial-class-group baseline at conductor 7 matches
    let table = dir.join("table.csv");
    std::fs::write(&table, "conductor,label,p_part\n7,zeta7-plus,\n").unwrap();
    let out = statgenus()
        .args([
            "ingest",
            "--table",
            table.to_str().unwrap(),
            "--records",
            records.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"matches\": 1"), "{text}");

    // a mismatching row fails without --lenient and passes with it
    std::fs::write(&table, "conductor,label,p_part\n7,wrong,5\n").unwrap();
    let strict = statgenus()
        .args([
            "ingest",
            "--table",
            table.to_str().unwrap(),
            "--records",
            records.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!strict.status.success());
    let lenient = statgenus()
        .args([
            "ingest",
            "--table",
            table.to_str().unwrap(),
            "--records",
            records.to_str().unwrap(),
            "--lenient",
        ])
        .output()
        .unwrap();
    assert!(lenient.status.success());

    // report re-emission: CSV header plus one row per record
    let out = statgenus()
        .args(["report", "--records", records.to_str().unwrap(), "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv_text = String::from_utf8(out.stdout).unwrap();
    assert!(csv_text.lines().next().unwrap().starts_with("conductor,"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn charsum_per_extension_smoke() {
    let out = statgenus()
        .args(["charsum", "--group", "3", "--bound", "100", "--mode", "per-extension"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"failures\":0"), "{text}");
}
