//! Edits the default configuration text, runs it and reads the outputs back.

use std::fs;

use qcbench::cli::{default_text, run, Experiment, RunConfig};

fn main() -> qcbench::Result<()> {
    let out = std::env::temp_dir().join("qc-config-example");
    let out_text = out.display().to_string();
    let overrides = [("method", "qcf-qnl"), ("patch.samples", "8"), ("output", out_text.as_str())];
    let text: String = default_text(Experiment::PatchTest)
        .lines()
        .map(|line| {
            let key = line.split('=').next().unwrap_or("").trim();
            match overrides.iter().find(|o| o.0 == key) {
                Some((k, v)) => format!("{k} = {v}\n"),
                None => format!("{line}\n"),
            }
        })
        .collect();
    let cfg = RunConfig::parse(&text, "<example>")?;
    let outcome = run(&cfg, &|_| {})?;
    println!("failures: {:?}", outcome.failures);
    for name in ["manifest.txt", "summary.csv"] {
        let path = out.join(name);
        let body = fs::read_to_string(&path).map_err(|e| qcbench::QcError::io(&path, e))?;
        println!("--- {name}\n{body}");
    }

    // keys that do not belong to the experiment are rejected
    if let Err(e) = RunConfig::parse("experiment = analytic\nsolver.c1 = 0.1\n", "bad.cfg") {
        println!("rejected: {e}");
    }
    Ok(())
}
