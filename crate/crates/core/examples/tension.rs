//! Uniaxial tension of a strip with a QC coupling of choice, built directly
//! from the library pieces. `cargo run --release --example tension -- qnl`

use qcbench::experiments::{run_continuation, ContinuationConfig, Detector, EquilibriumSolver, Loading, Method};
use qcbench::lattice::{CbStencil, Domain, DomainSpec, Region};
use qcbench::potentials::{equilibrium_lattice_constant, Morse};
use qcbench::solver::{GfcConfig, SolverConfig};

fn main() -> qcbench::Result<()> {
    let method: Method = std::env::args().nth(1).as_deref().unwrap_or("qnl").parse()?;
    let morse = Morse::default();
    let a = equilibrium_lattice_constant(&morse)?;
    let region = match method {
        Method::Energy(qcbench::models::ModelKind::Atomistic) => Region::AllAtomistic,
        _ => Region::tension_default(),
    };
    let d = Domain::build(DomainSpec::tension(region), a, CbStencil::Paired)?;
    let tol = SolverConfig {
        tol_u_inf: 1e-6,
        tol_u_p: 1e-6,
        tol_g_inf: 1e-6,
        tol_g_p: 1e-6,
        tol_e: 1e-6,
        ..SolverConfig::default()
    };
    let solver = EquilibriumSolver::new(method, &d, morse, 1.0, tol, GfcConfig::default())?;
    let detector = Detector::all_bonds(&d, 0.25 * d.geometry().burgers());
    let cfg = ContinuationConfig {
        abort_factor: 2.5,
        ..ContinuationConfig::tension(detector.threshold)
    };
    let u0 = vec![0.0; 2 * d.len()];
    let trace = run_continuation(&solver, &d, Loading::Tension, &detector, u0, &cfg, |r| {
        eprintln!("{:.7} {} it {}", r.gamma, r.solve.status, r.solve.iterations);
    })?;
    match trace.bracket {
        Some((lo, hi)) => println!("{}: critical strain in [{lo:.7}, {hi:.7}]", method.label()),
        None => println!("{}: no instability below {}", method.label(), cfg.gamma_max),
    }
    Ok(())
}
