//! Ghost-force correction: outer residual history for QCE and QNL
//! predictors on a clamped shear.

use qcbench::lattice::{canonical_triangulation, BoundaryStyle, CbStencil, Domain, DomainSpec, Region};
use qcbench::models::{homogeneous_field, Model, ModelKind, QcfOperator};
use qcbench::potentials::{equilibrium_lattice_constant, Morse};
use qcbench::solver::{gfc_solve, GfcConfig, Preconditioner, SolverConfig};

fn main() -> qcbench::Result<()> {
    let morse = Morse::default();
    let a = equilibrium_lattice_constant(&morse)?;
    let spec = DomainSpec {
        columns: 15,
        rows: 20,
        boundary: BoundaryStyle::FullPerimeter,
        boundary_depth: 2,
        region: Region::Box { nu1: [5.0, 10.0], nu2: [6.0, 13.0] },
    };
    let d = Domain::build(spec, a, CbStencil::Paired)?;
    let qcf = QcfOperator::new(&d, morse)?;
    let p1 = Preconditioner::assemble(&canonical_triangulation(&d), 1.0)?;
    let outer = homogeneous_field(&d, &[[1.0, 0.02], [0.0, 1.0]]);
    for kind in [ModelKind::Qce, ModelKind::Qnl] {
        let model = Model::new(kind, &d, morse)?;
        let mut u: Vec<f64> = (0..outer.len())
            .map(|k| if d.is_clamped(k / 2) { outer[k] } else { 0.0 })
            .collect();
        let rep = gfc_solve(&model, &qcf, d.clamped(), &mut u, &p1, &SolverConfig::default(), &GfcConfig::default())?;
        println!("{kind}: {:?} after {} outer, {} inner iterations", rep.status, rep.outer_iterations, rep.inner_iterations);
        for (n, r) in rep.residuals.iter().enumerate() {
            println!("  {n:>3} {r:.3e}");
        }
    }
    Ok(())
}
