//! Forces on a homogeneously deformed coupled domain. The QCE energy leaves
//! ghost forces near the interface; QNL and the force-based coupling do not.

use qcbench::lattice::{BoundaryStyle, CbStencil, Domain, DomainSpec, Region};
use qcbench::models::{ghost_force_profile, homogeneous_field, site_at, ModelKind, QcfOperator};
use qcbench::potentials::{equilibrium_lattice_constant, Morse};
use qcbench::solver::gfc::free_force_norm;

fn main() -> qcbench::Result<()> {
    let morse = Morse::default();
    let a = equilibrium_lattice_constant(&morse)?;
    let spec = DomainSpec {
        columns: 20,
        rows: 12,
        boundary: BoundaryStyle::FullPerimeter,
        boundary_depth: 2,
        region: Region::Box { nu1: [7.0, 12.0], nu2: [4.0, 7.0] },
    };
    let d = Domain::build(spec, a, CbStencil::Paired)?;
    let f = [[1.0, 0.01], [0.0, 1.0]];

    let profiles: Vec<(ModelKind, Vec<f64>)> = [ModelKind::Qce, ModelKind::Qnl]
        .into_iter()
        .map(|k| ghost_force_profile(k, &d, morse, &f).map(|p| (k, p)))
        .collect::<qcbench::Result<_>>()?;
    let qcf = QcfOperator::new(&d, morse)?.force(&homogeneous_field(&d, &f))?;
    println!("max free force: qcf {:.3e}", free_force_norm(&qcf, d.clamped()));

    // along the row through the middle of the atomistic box
    println!("{:>6} {:>6} {:>12} {:>12}", "nu1", "atom", "qce", "qnl");
    for i in 0..=40 {
        let nu1 = 0.5 * i as f64;
        let Some(x) = site_at(&d, nu1, 5.0) else { continue };
        println!(
            "{nu1:>6.1} {:>6} {:>12.3e} {:>12.3e}",
            d.is_atomistic(x),
            profiles[0].1[x],
            profiles[1].1[x]
        );
    }
    Ok(())
}
