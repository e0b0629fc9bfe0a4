//! Planar bond classes of the projected FCC lattice with their
//! out-of-plane offsets and continuum stencils.

use qcbench::lattice::{BondTable, CbStencil};
use qcbench::potentials::{equilibrium_lattice_constant, Morse};

fn main() -> qcbench::Result<()> {
    let a = equilibrium_lattice_constant(&Morse::default())?;
    let stencil = std::env::args()
        .nth(1)
        .map(|s| s.parse::<CbStencil>())
        .transpose()?
        .unwrap_or(CbStencil::Paired);
    let table = BondTable::build(a, stencil)?;
    println!("{} classes, {} offsets, stencil {stencil}", table.len(), table.offset_count());
    for class in &table.classes {
        let offsets: Vec<String> = class.offsets.iter().map(|o| format!("{o:.4}")).collect();
        let stencil: Vec<String> = class
            .stencil
            .iter()
            .map(|(s, c)| format!("{c:+.1}*{s}"))
            .collect();
        println!(
            "{:<12} |r|={:.4}  offsets [{}]  {}",
            class.vector.to_string(),
            class.cartesian[0].hypot(class.cartesian[1]),
            offsets.join(" "),
            stencil.join(" ")
        );
    }
    Ok(())
}
