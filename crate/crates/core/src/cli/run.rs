//! Experiment dispatch and output files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QcError, Result};
use crate::experiments::analytic::{force_grid, write_force_grid};
use crate::experiments::continuation::write_summary;
use crate::experiments::{
    analytic_fold, critical_error, run_continuation, ContinuationConfig, ContinuationTrace, Detector, DipoleConfig,
    EquilibriumSolver, Loading, Method,
};
use crate::lattice::{canonical_triangulation, Domain, Region};
use crate::models::{bond_force_scale, homogeneous_field, isotropic_fit, Mat2, Model, ModelKind, QcfOperator};
use crate::potentials::equilibrium_lattice_constant;

use super::config::{DetectorSpec, Experiment, RunConfig, RunSpec};

/// Failures that still produced output; the run exits nonzero.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub failures: Vec<String>,
}

/// Worker count: `QC_THREADS` if set, else the available parallelism.
pub fn worker_count(jobs: usize) -> usize {
    let cap = std::env::var("QC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.min(jobs).max(1)
}

pub fn lattice_constant(cfg: &RunConfig) -> Result<f64> {
    match cfg.lattice_constant {
        Some(a) => Ok(a),
        None => equilibrium_lattice_constant(&cfg.morse),
    }
}

/// One continuation run of a benchmark.
#[derive(Debug)]
pub struct BenchmarkRun {
    pub spec: RunSpec,
    pub region: Region,
    pub atomistic_sites: usize,
    pub trace: Result<ContinuationTrace>,
}

impl BenchmarkRun {
    /// Region column of the summary.
    pub fn region_label(&self) -> String {
        match (self.spec.method, self.spec.dipole_box) {
            (Method::Energy(ModelKind::Atomistic), _) | (_, None) => self.region.to_string(),
            (_, Some(k)) => format!("dipole-box {k}"),
        }
    }

    pub fn bracket(&self) -> Option<(f64, f64)> {
        self.trace.as_ref().ok().and_then(|t| t.bracket)
    }
}

#[derive(Debug)]
pub struct Benchmark {
    pub domain: Domain,
    pub loading: Loading,
    pub lattice_constant: f64,
    pub poisson_nu: Option<f64>,
    pub runs: Vec<BenchmarkRun>,
}

impl Benchmark {
    pub fn run(&self, spec: &str) -> Option<&BenchmarkRun> {
        self.runs.iter().find(|r| r.spec.to_string() == spec)
    }

    pub fn atomistic(&self) -> Option<&BenchmarkRun> {
        self.runs
            .iter()
            .find(|r| r.spec.method == Method::Energy(ModelKind::Atomistic) && r.trace.is_ok())
    }

    /// `(label, region, bracket, error %)` in run order.
    pub fn summary_rows(&self) -> Vec<(String, String, Option<(f64, f64)>, Option<f64>)> {
        let reference = self.atomistic().and_then(|r| r.bracket());
        self.runs
            .iter()
            .map(|r| {
                let b = r.bracket();
                let err = reference.zip(b).and_then(|(at, qc)| critical_error(at, qc).ok());
                (r.spec.method.label(), r.region_label(), b, err)
            })
            .collect()
    }

    /// `err_rel` of every QC run at the loads where the atomistic run is stable.
    pub fn error_curves(&self) -> (Vec<String>, Vec<(f64, Vec<Option<f64>>)>) {
        let Some(at) = self.atomistic().and_then(|r| r.trace.as_ref().ok()) else {
            return (Vec::new(), Vec::new());
        };
        let others: Vec<(&BenchmarkRun, &ContinuationTrace)> = self
            .runs
            .iter()
            .filter(|r| r.spec.method != Method::Energy(ModelKind::Atomistic))
            .filter_map(|r| r.trace.as_ref().ok().map(|t| (r, t)))
            .collect();
        let names = others.iter().map(|(r, _)| r.spec.slug()).collect();
        let rows = at
            .stable()
            .map(|(rec, _)| {
                let g = rec.gamma;
                let vals = others
                    .iter()
                    .map(|(_, t)| t.records.iter().find(|q| q.gamma == g && !q.unstable).and_then(|q| q.err_rel))
                    .collect();
                (g, vals)
            })
            .collect();
        (names, rows)
    }
}

fn build_detector(spec: &DetectorSpec, domain: &Domain, threshold: f64) -> Detector {
    match spec {
        DetectorSpec::Rows(r) => Detector::dipole_separation(domain, *r, threshold),
        DetectorSpec::Line { point, direction } => {
            let g = domain.geometry();
            let p = [point[0] * g.v1_length(), point[1] * g.v2_length()];
            let d = [direction[0] * g.v1_length(), direction[1] * g.v2_length()];
            Detector::slip_line(domain, p, d, threshold)
        }
        DetectorSpec::AllBonds => Detector::all_bonds(domain, threshold),
    }
}

/// Runs every continuation of a dipole or tension configuration, using
/// [`worker_count`] threads. `log` receives one line per solve.
pub fn run_benchmark(cfg: &RunConfig, log: &(dyn Fn(&str) + Sync)) -> Result<Benchmark> {
    let loading = match cfg.experiment {
        Experiment::Dipole => Loading::Shear,
        Experiment::Tension => Loading::Tension,
        other => {
            return Err(QcError::InvalidParameter(format!("`{other}` is not a continuation experiment")));
        }
    };
    let a = lattice_constant(cfg)?;
    let domain = Domain::build(cfg.domain.clone(), a, cfg.stencil)?;
    let threshold = cfg.continuation.threshold * domain.geometry().burgers();
    let detector = build_detector(&cfg.detector, &domain, threshold);
    let continuation = ContinuationConfig {
        threshold,
        ..cfg.continuation.clone()
    };

    let (poisson_nu, initial) = match loading {
        Loading::Shear => {
            let nu = match cfg.dipole.poisson_nu {
                Some(nu) => nu,
                None => isotropic_fit(domain.bonds(), domain.geometry(), cfg.morse).2,
            };
            let dipole = DipoleConfig {
                left_core: cfg.dipole.left_core,
                right_core: cfg.dipole.right_core,
                left_burgers: cfg.dipole.left_burgers,
                right_burgers: cfg.dipole.right_burgers,
                poisson_nu: nu,
                gamma0: continuation.gamma_start,
            };
            (Some(nu), dipole.initial_guess(&domain, continuation.gamma_start)?)
        }
        Loading::Tension => {
            let mut u = Vec::with_capacity(2 * domain.len());
            for i in 0..domain.len() {
                u.extend(loading.boundary_displacement(domain.cartesian(i), continuation.gamma_start));
            }
            (None, u)
        }
    };

    let jobs: Vec<(RunSpec, Region)> = cfg
        .runs
        .iter()
        .map(|s| (s.clone(), s.region(&cfg.domain.region)))
        .collect();
    let results: Mutex<Vec<Option<BenchmarkRun>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let work = || loop {
        let j = next.fetch_add(1, Ordering::SeqCst);
        let Some((spec, region)) = jobs.get(j) else {
            break;
        };
        let d = domain.with_region(region.clone());
        let trace = EquilibriumSolver::new(spec.method, &d, cfg.morse, cfg.precond_scale, cfg.solver.clone(), cfg.gfc.clone())
            .and_then(|solver| {
                run_continuation(&solver, &d, loading, &detector, initial.clone(), &continuation, |r| {
                    log(&format!(
                        "{spec}: gamma {:.7} {} it {} slip {:.3}{}",
                        r.gamma,
                        r.solve.status,
                        r.solve.iterations,
                        r.solve.slip / d.geometry().burgers(),
                        if r.unstable { " unstable" } else { "" }
                    ))
                })
            });
        let run = BenchmarkRun {
            spec: spec.clone(),
            region: region.clone(),
            atomistic_sites: d.atomistic_count(),
            trace,
        };
        results.lock().expect("worker panicked")[j] = Some(run);
    };
    let workers = worker_count(jobs.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(work);
        }
    });
    let mut runs: Vec<BenchmarkRun> = results
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect();

    let reference = runs
        .iter()
        .position(|r| r.spec.method == Method::Energy(ModelKind::Atomistic) && r.trace.is_ok());
    if let Some(i) = reference {
        let at = runs[i].trace.as_ref().map(|t| t.clone()).expect("checked ok");
        for (k, r) in runs.iter_mut().enumerate() {
            if k == i {
                continue;
            }
            if let Ok(t) = r.trace.as_mut() {
                t.attach_errors(&domain, &at)?;
            }
        }
    }
    Ok(Benchmark {
        domain,
        loading,
        lattice_constant: a,
        poisson_nu,
        runs,
    })
}

/// One sample of the patch test.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchSample {
    pub f: Mat2,
    pub max_free_force: f64,
    /// `max_free_force` over [`bond_force_scale`].
    pub scaled: f64,
}

/// Largest free-site force of `method` under random homogeneous
/// deformations with `‖F − I‖_F ≤ max_strain`.
pub fn patch_test(cfg: &RunConfig) -> Result<Vec<PatchSample>> {
    let a = lattice_constant(cfg)?;
    let domain = Domain::build(cfg.domain.clone(), a, cfg.stencil)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.patch.seed);
    let (model, qcf) = match cfg.method {
        Method::Energy(k) => (Some(Model::new(k, &domain, cfg.morse)?), None),
        Method::Qcf(_) => (None, Some(QcfOperator::new(&domain, cfg.morse)?)),
    };
    let mut out = Vec::with_capacity(cfg.patch.samples);
    for _ in 0..cfg.patch.samples {
        let e: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = cfg.patch.max_strain * rng.gen_range(0.0..=1.0) / norm;
        let f = [[1.0 + s * e[0], s * e[1]], [s * e[2], 1.0 + s * e[3]]];
        let u = homogeneous_field(&domain, &f);
        let force = match (&model, &qcf) {
            (Some(m), _) => m.gradient(&u)?,
            (_, Some(q)) => q.force(&u)?,
            _ => unreachable!(),
        };
        let max_free_force = domain
            .free_sites()
            .map(|x| force[2 * x].hypot(force[2 * x + 1]))
            .fold(0.0, f64::max);
        out.push(PatchSample {
            f,
            max_free_force,
            scaled: max_free_force / bond_force_scale(domain.bonds(), cfg.morse, &f),
        });
    }
    Ok(out)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| QcError::io(path, e))
}

fn finish(w: BufWriter<File>, dir: &Path, name: &str) -> Result<()> {
    w.into_inner()
        .map_err(|e| QcError::io(dir.join(name), e.into_error()))
        .map(|_| ())
}

fn write_with(dir: &Path, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(dir, name)?;
    body(&mut w).map_err(|e| QcError::io(dir.join(name), e))?;
    finish(w, dir, name)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Runs the configured experiment and writes `manifest.txt`, `summary.csv`
/// and the experiment's data files into `cfg.output`.
pub fn run(cfg: &RunConfig, log: &(dyn Fn(&str) + Sync)) -> Result<Outcome> {
    let dir = cfg.output.as_path();
    fs::create_dir_all(dir).map_err(|e| QcError::io(dir, e))?;
    let mut manifest: Vec<(String, String)> = cfg.entries().to_vec();
    manifest.push(("version.qcbench".into(), env!("CARGO_PKG_VERSION").into()));
    let mut outcome = Outcome::default();

    match cfg.experiment {
        Experiment::LatticeConstant => {
            let a = lattice_constant(cfg)?;
            manifest.push(("calibration.lattice_constant".into(), format!("{a:.16e}")));
            write_with(dir, "summary.csv", |w| {
                writeln!(w, "alpha,lattice_constant")?;
                writeln!(w, "{:.16e},{a:.16e}", cfg.morse.alpha)
            })?;
        }
        Experiment::Analytic => {
            let p = &cfg.analytic;
            let (w_fold, g_fold) = analytic_fold(p.beta, p.w_start)?;
            let grid = force_grid(p.beta, p.w_grid, p.gamma_grid);
            write_with(dir, "analytic_grid.csv", |w| write_force_grid(&grid, w))?;
            write_with(dir, "summary.csv", |w| {
                writeln!(w, "beta,w_start,w_fold,gamma_fold")?;
                writeln!(w, "{:.16e},{:.16e},{w_fold:.16e},{g_fold:.16e}", p.beta, p.w_start)
            })?;
        }
        Experiment::PatchTest => {
            let a = lattice_constant(cfg)?;
            manifest.push(("calibration.lattice_constant".into(), format!("{a:.16e}")));
            let samples = patch_test(cfg)?;
            let worst = samples.iter().map(|s| s.scaled).fold(0.0, f64::max);
            write_with(dir, "patch_samples.csv", |w| {
                writeln!(w, "sample,f11,f12,f21,f22,max_free_force,scaled_force")?;
                for (k, s) in samples.iter().enumerate() {
                    writeln!(
                        w,
                        "{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                        s.f[0][0], s.f[0][1], s.f[1][0], s.f[1][1], s.max_free_force, s.scaled
                    )?;
                }
                Ok(())
            })?;
            write_with(dir, "summary.csv", |w| {
                writeln!(w, "method,samples,max_strain,max_scaled_force")?;
                writeln!(w, "{},{},{:.16e},{worst:.16e}", cfg.method, samples.len(), cfg.patch.max_strain)
            })?;
        }
        Experiment::Dipole | Experiment::Tension => {
            let bench = run_benchmark(cfg, log)?;
            let b = bench.domain.geometry().burgers();
            manifest.push(("calibration.lattice_constant".into(), format!("{:.16e}", bench.lattice_constant)));
            if let Some(nu) = bench.poisson_nu {
                manifest.push(("calibration.poisson_nu".into(), format!("{nu:.16e}")));
            }
            manifest.push(("calibration.burgers".into(), format!("{b:.16e}")));
            manifest.push(("domain.sites".into(), bench.domain.len().to_string()));
            manifest.push(("domain.free_sites".into(), bench.domain.free_sites().count().to_string()));
            manifest.push(("loading".into(), bench.loading.to_string()));
            manifest.push(("loading.predictor".into(), bench.loading.predictor().into()));
            if cfg.mesh_export {
                let mesh = canonical_triangulation(&bench.domain);
                write_with(dir, "mesh.txt", |w| mesh.write_text(&bench.domain, w))?;
            }
            for r in &bench.runs {
                let slug = r.spec.slug();
                manifest.push((format!("run.{slug}.atomistic_sites"), r.atomistic_sites.to_string()));
                match &r.trace {
                    Ok(t) => {
                        write_with(dir, &format!("trace_{slug}.csv"), |w| t.write_csv(w))?;
                        let bracket = match t.bracket {
                            Some((lo, hi)) => format!("{lo:.16e} {hi:.16e}"),
                            None => "none".into(),
                        };
                        manifest.push((format!("run.{slug}.bracket"), bracket));
                        manifest.push((format!("run.{slug}.solves"), t.attempts.len().to_string()));
                        manifest.push((
                            format!("run.{slug}.wolfe"),
                            t.attempts.iter().all(|a| a.solve.wolfe).to_string(),
                        ));
                        manifest.push((
                            format!("run.{slug}.monotone"),
                            t.attempts.iter().all(|a| a.solve.monotone).to_string(),
                        ));
                        if t.bracket.is_none() {
                            let last = t.attempts.last().map_or(f64::NAN, |a| a.gamma);
                            outcome.failures.push(format!("{slug}: no instability up to gamma = {last:.16e}"));
                        }
                    }
                    Err(e) => {
                        let msg = format!("{slug}: {e} (gamma = {:.16e})", cfg.continuation.gamma_start);
                        outcome.failures.push(msg);
                    }
                }
            }
            write_with(dir, "summary.csv", |w| write_summary(&bench.summary_rows(), w))?;
            let (names, rows) = bench.error_curves();
            write_with(dir, "error_curves.csv", |w| {
                writeln!(w, "gamma,{}", names.join(","))?;
                for (g, vals) in &rows {
                    let cells: Vec<String> = vals.iter().map(|v| opt(*v)).collect();
                    writeln!(w, "{g:.16e},{}", cells.join(","))?;
                }
                Ok(())
            })?;
        }
    }

    for (k, f) in outcome.failures.iter().enumerate() {
        manifest.push((format!("failure.{k}"), f.clone()));
    }
    write_with(dir, "manifest.txt", |w| {
        for (k, v) in &manifest {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    })?;
    Ok(outcome)
}
