//! Scripting the full pipeline through the CLI harness.
//!
//! The `snapcube` binary is a thin wrapper over `cli::run`, so the whole
//! command-line surface is also callable in-process. This drives
//! phantom -> simulate -> reconstruct -> metrics on a tiny scene and then
//! inspects the run manifest: every command records its resolved flags and
//! the SHA-256 of every file it read or wrote, which is what makes runs
//! reproducible bit for bit.
//!
//! Run with: cargo run --release --example cli_pipeline

use snapcube::{cli, io};

fn run(args: &[&str]) {
    let code = cli::run(std::iter::once("snapcube").chain(args.iter().copied()));
    assert_eq!(code, 0, "command failed: {args:?}");
}

fn main() -> snapcube::Result<()> {
    let dir = std::env::temp_dir().join("snapcube_cli_example");
    std::fs::create_dir_all(&dir)?;
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();

    run(&["phantom", "--dims", "16x16x4", "--blobs", "3", "--seed", "5", "--out", &p("scene.scb")]);
    run(&[
        "simulate",
        "--scene", &p("scene.scb"),
        "--shots", "2",
        "--snr", "30",
        "--seed", "9",
        "--out", &p("m.sme"),
        "--ca-out", &p("a.sca"),
    ]);
    run(&[
        "reconstruct",
        "--meas", &p("m.sme"),
        "--ca", &p("a.sca"),
        "--iters", "400",
        "--restarts", "1",
        "--width", "5",
        "--seed", "3",
        "--trace", &p("trace.csv"),
        "--out", &p("rec.scb"),
    ]);
    run(&["metrics", "--ref", &p("scene.scb"), "--rec", &p("rec.scb"), "--out", &p("row.csv")]);

    println!("\nmetrics row:");
    print!("{}", std::fs::read_to_string(p("row.csv"))?);

    println!("\nreconstruct manifest (one JSON line per run):");
    let manifest = std::fs::read_to_string(p("rec.scb.manifest.jsonl"))?;
    print!("{manifest}");

    // The digests in the manifest are the digests on disk.
    let parsed: serde_json::Value = serde_json::from_str(manifest.trim()).expect("valid JSON");
    let recorded = parsed["outputs"][&p("rec.scb")].as_str().unwrap();
    let actual = io::sha256_hex_file(p("rec.scb"))?;
    println!("\nrecorded output digest matches the file: {}", recorded == actual);

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
