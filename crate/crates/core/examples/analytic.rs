//! Fold of the one-dimensional dipole model: the largest load at which the
//! two cores stay bound, as a function of the core-interaction strength.

use qcbench::experiments::analytic::force_grid;
use qcbench::experiments::{analytic_fold, analytic_force};

fn main() -> qcbench::Result<()> {
    println!("{:>6} {:>10} {:>10}", "beta", "w*", "gamma*");
    for beta in [2.0, 4.0, 8.0, 12.0, 16.0, 24.0] {
        let (w, g) = analytic_fold(beta, 1.5)?;
        println!("{beta:>6.1} {w:>10.5} {g:>10.5}");
    }

    let beta = 12.0;
    let (_, fold) = analytic_fold(beta, 1.5)?;
    let grid = force_grid(beta, (0.5, 20.0, 400), (0.0, 4.0, 5));
    let sign_changes = |g: f64| {
        let f: Vec<f64> = grid.iter().filter(|p| p.1 == g).map(|p| p.2).collect();
        f.windows(2).filter(|w| w[0] > 0.0 && w[1] <= 0.0).count()
    };
    println!("beta {beta}: fold at {fold:.5}");
    for g in [0.0, 1.0, 2.0, 3.0, 4.0] {
        println!("  gamma {g}: {} stable roots, force at w=3 {:+.4}", sign_changes(g), analytic_force(3.0, g, beta));
    }
    Ok(())
}
