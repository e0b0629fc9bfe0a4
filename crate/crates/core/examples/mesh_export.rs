//! Writes the preconditioner triangulation of a small coupled domain and
//! reports its sparsity.

use qcbench::lattice::{canonical_triangulation, BoundaryStyle, CbStencil, Domain, DomainSpec, Region};
use qcbench::solver::Preconditioner;

fn main() -> qcbench::Result<()> {
    let spec = DomainSpec {
        columns: 10,
        rows: 6,
        boundary: BoundaryStyle::LeftRight,
        boundary_depth: 2,
        region: Region::HalfPlane { point: [4.0, 0.0], direction: [1.0, 0.0] },
    };
    let d = Domain::build(spec, 1.3338, CbStencil::Paired)?;
    let mesh = canonical_triangulation(&d);
    let area: f64 = (0..mesh.triangles.len()).map(|t| mesh.signed_area(t)).sum();
    eprintln!("{} nodes, {} triangles, area {area:.4}", mesh.nodes.len(), mesh.triangles.len());
    let p = Preconditioner::assemble(&mesh, 1.0)?;
    eprintln!("stiffness: {} nonzeros", p.stiffness().nnz());
    mesh.write_text(&d, std::io::stdout().lock())
        .map_err(|e| qcbench::QcError::io("<stdout>", e))
}
