use std::fs;
use std::path::{Path, PathBuf};

use qcbench::cli::config::{Experiment, RunConfig};
use qcbench::cli::{compare, default_text, run};
use qcbench::QcError;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qcbench-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn run_text(text: &str, out: &Path) -> qcbench::cli::Outcome {
    let cfg = RunConfig::parse(&format!("{text}\noutput = {}\n", out.display()), "test.cfg").unwrap();
    run(&cfg, &|_| {}).unwrap()
}

fn manifest(dir: &Path) -> String {
    fs::read_to_string(dir.join("manifest.txt")).unwrap()
}

#[test]
fn lattice_constant_manifest() {
    let out = scratch("lattice").join("nested");
    let outcome = run_text("experiment = lattice-constant\npotential.alpha = 4.4", &out);
    assert!(outcome.failures.is_empty());
    let m = manifest(&out);
    let a: f64 = m
        .lines()
        .find_map(|l| l.strip_prefix("calibration.lattice_constant = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((a - 1.3338).abs() < 1e-3);
    assert!(m.contains("potential.lattice_constant = auto"));
}

#[test]
fn patch_test_summary() {
    let out = scratch("patch");
    run_text("experiment = patch-test\nmethod = qnl", &out);
    let s = fs::read_to_string(out.join("summary.csv")).unwrap();
    let row: Vec<&str> = s.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "qnl");
    assert!(row[3].parse::<f64>().unwrap() <= 1e-10);
}

#[test]
fn analytic_grid_and_determinism() {
    let (a, b) = (scratch("analytic-a"), scratch("analytic-b"));
    run_text("experiment = analytic\nanalytic.gamma_grid = 0 4 41", &a);
    run_text("experiment = analytic\nanalytic.gamma_grid = 0 4 41", &b);
    for f in ["summary.csv", "analytic_grid.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let grid = fs::read_to_string(a.join("analytic_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 196 * 41);
    // the fold load separates grids with and without a stable crossing
    let s = fs::read_to_string(a.join("summary.csv")).unwrap();
    let fold: f64 = s.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    let mut crossing = std::collections::BTreeMap::<String, bool>::new();
    let mut prev: Option<(String, f64)> = None;
    for line in grid.lines().skip(1) {
        let v: Vec<&str> = line.split(',').collect();
        let (w, g, f): (f64, String, f64) = (v[0].parse().unwrap(), v[1].to_string(), v[2].parse().unwrap());
        if let Some((pg, pf)) = &prev {
            if *pg == g && w >= 1.5 && *pf > 0.0 && f <= 0.0 {
                crossing.insert(g.clone(), true);
            }
        }
        prev = Some((g, f));
    }
    for (g, _) in crossing {
        assert!(g.parse::<f64>().unwrap() <= fold + 0.1);
    }
}

#[test]
fn defaults_are_valid_configs() {
    for exp in Experiment::ALL {
        let cfg = RunConfig::parse(&default_text(exp), "defaults").unwrap();
        assert_eq!(cfg.experiment, exp);
    }
}

#[test]
fn unknown_keys_are_rejected_with_line() {
    let e = RunConfig::parse("experiment = tension\n# c\nsolver.tolerance = 1\n", "x.cfg").unwrap_err();
    assert!(matches!(e, QcError::Config { line: 3, .. }), "{e}");
}

fn fake_run(dir: &Path, lattice: &str, rows: &[(&str, &str, &str, &str)], traces: &[(&str, &str)]) {
    fs::create_dir_all(dir).unwrap();
    fs::write(
        dir.join("manifest.txt"),
        format!(
            "experiment = tension\npotential.alpha = 4.4\ncb.b6_stencil = paired\ndomain.columns = 60\n\
             domain.rows = 15\ndomain.boundary = left-right\ndomain.boundary_depth = 2\n\
             calibration.lattice_constant = {lattice}\nloading = tension\n"
        ),
    )
    .unwrap();
    let mut s = String::from("method,region,gamma_minus,gamma_plus,error_percent\n");
    for (m, r, lo, hi) in rows {
        s.push_str(&format!("{m},{r},{lo},{hi},\n"));
    }
    fs::write(dir.join("summary.csv"), s).unwrap();
    for (name, body) in traces {
        fs::write(
            dir.join(format!("trace_{name}.csv")),
            format!("gamma,energy,solver_iterations,detector,err_rel,outer_gfc_iterations,status,slip\n{body}"),
        )
        .unwrap();
    }
}

#[test]
fn compare_orders_and_recomputes_errors() {
    let (a, b) = (scratch("cmp-a"), scratch("cmp-b"));
    fake_run(
        &a,
        "1.3337892463312919e0",
        &[("Atomistic", "atomistic", "0.0815", "0.0816"), ("QCE", "half-plane", "0.064", "0.0641")],
        &[("atomistic", "0.0,1.0,3,0,,,converged,0.0\n"), ("qce", "0.0,1.0,3,0,1e-2,,converged,0.0\n0.01,1.0,3,1,,,converged,0.5\n")],
    );
    fake_run(
        &b,
        "1.3337892463312919e0",
        &[("QNL", "half-plane", "0.08149", "0.08151")],
        &[("qnl", "0.0,1.0,3,0,1e-4,,converged,0.0\n")],
    );
    let c = compare(&[b.clone(), a.clone()]).unwrap();
    let methods: Vec<&str> = c.rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(methods, ["Atomistic", "QNL", "QCE"]);
    assert_eq!(c.rows[0].error_percent, Some(0.0));
    let qce = c.rows[2].error_percent.unwrap();
    assert!((qce - 100.0 * (0.08155 - 0.06405) / 0.08155).abs() < 1e-9);
    assert_eq!(c.curves.columns, ["qnl", "qce"]);
    assert_eq!(c.curves.rows, vec![(0.0, vec![Some(1e-4), Some(1e-2)])]);

    let mut table = Vec::new();
    c.write_table(&mut table).unwrap();
    assert!(String::from_utf8(table).unwrap().starts_with("method,region,gamma_minus"));

    // atomistic against itself
    let c = compare(&[a.clone(), a.clone()]).unwrap();
    assert!(c.rows.iter().filter(|r| r.method == "Atomistic").all(|r| r.error_percent == Some(0.0)));

    let other = scratch("cmp-c");
    fake_run(&other, "1.3e0", &[("QNL", "x", "0.08", "0.081")], &[]);
    assert!(matches!(compare(&[a, other]), Err(QcError::Mismatch(_))));
}
