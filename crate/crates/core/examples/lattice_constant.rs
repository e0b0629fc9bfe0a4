//! Equilibrium lattice constant and isotropic elastic fit for a few Morse
//! stiffnesses.

use qcbench::lattice::{BondTable, CbStencil, LatticeGeometry};
use qcbench::models::isotropic_fit;
use qcbench::potentials::{equilibrium_lattice_constant, Morse};

fn main() -> qcbench::Result<()> {
    println!("{:>6} {:>12} {:>12} {:>12} {:>8}", "alpha", "a", "lambda", "mu", "nu");
    for alpha in [3.0, 4.0, 4.4, 5.0, 6.0] {
        let morse = Morse::new(alpha)?;
        let a = equilibrium_lattice_constant(&morse)?;
        let bonds = BondTable::build(a, CbStencil::Paired)?;
        let (lambda, mu, nu) = isotropic_fit(&bonds, &LatticeGeometry::new(a)?, morse);
        println!("{alpha:>6.2} {a:>12.8} {lambda:>12.6} {mu:>12.6} {nu:>8.4}");
    }
    Ok(())
}
