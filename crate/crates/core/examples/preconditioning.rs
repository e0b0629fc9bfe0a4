//! Relaxing a perturbed sheared crystal with and without the P1 Laplacian
//! preconditioner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qcbench::lattice::{canonical_triangulation, BoundaryStyle, CbStencil, Domain, DomainSpec, Region};
use qcbench::models::{homogeneous_field, Model, ModelKind};
use qcbench::potentials::{equilibrium_lattice_constant, Morse};
use qcbench::solver::{pncg_minimize, Identity, ModelObjective, Preconditioner, SolverConfig};

fn main() -> qcbench::Result<()> {
    let morse = Morse::default();
    let a = equilibrium_lattice_constant(&morse)?;
    let cfg = SolverConfig {
        tol_g_inf: 1e-8,
        tol_g_p: 1e-8,
        ..SolverConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("{:>8} {:>10} {:>10}", "sites", "identity", "p1");
    for n in [10, 20, 40] {
        let spec = DomainSpec {
            columns: n,
            rows: n,
            boundary: BoundaryStyle::FullPerimeter,
            boundary_depth: 2,
            region: Region::AllAtomistic,
        };
        let d = Domain::build(spec, a, CbStencil::Paired)?;
        let model = Model::new(ModelKind::Atomistic, &d, morse)?;
        let obj = ModelObjective::new(&model, d.clamped());
        let mut u0 = homogeneous_field(&d, &[[1.0, 0.02], [0.0, 1.0]]);
        for x in d.free_sites() {
            u0[2 * x] += rng.gen_range(-0.02..0.02);
            u0[2 * x + 1] += rng.gen_range(-0.02..0.02);
        }
        let p1 = Preconditioner::assemble(&canonical_triangulation(&d), 1.0)?;
        let mut u = u0.clone();
        let plain = pncg_minimize(&obj, &mut u, &Identity, &cfg)?;
        let mut u = u0;
        let pre = pncg_minimize(&obj, &mut u, &p1, &cfg)?;
        println!("{:>8} {:>10} {:>10}", d.len(), plain.iterations, pre.iterations);
    }
    Ok(())
}
