//! Critical shear of the Lomer dipole for a few couplings, run through the
//! configuration layer. Takes several minutes per run in release mode.
//! `cargo run --release --example dipole -- atomistic qnl(3) qce(3)`

use qcbench::cli::config::RunSpec;
use qcbench::cli::{run_benchmark, Experiment, RunConfig};

fn main() -> qcbench::Result<()> {
    let mut cfg = RunConfig::defaults(Experiment::Dipole, std::env::temp_dir().join("qc-dipole"));
    let args: Vec<String> = std::env::args().skip(1).collect();
    let runs = if args.is_empty() { vec!["atomistic".into(), "qnl(3)".into()] } else { args };
    cfg.runs = runs.iter().map(|s| s.parse::<RunSpec>()).collect::<qcbench::Result<_>>()?;

    let bench = run_benchmark(&cfg, &|line: &str| eprintln!("{line}"))?;
    for (method, region, bracket, err) in bench.summary_rows() {
        let bracket = bracket.map_or("-".to_string(), |(lo, hi)| format!("[{lo:.7}, {hi:.7}]"));
        let err = err.map_or(String::new(), |e| format!("{e:.3}%"));
        println!("{method:<14} {region:<12} {bracket:<24} {err}");
    }
    Ok(())
}
