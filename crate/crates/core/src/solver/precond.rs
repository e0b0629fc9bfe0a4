//! The inner product used by the minimiser.

use crate::error::{QcError, Result};
use crate::lattice::Mesh;

use super::sparse::{CsrMatrix, EnvelopeCholesky};

/// A symmetric positive definite operator `P` on interleaved planar fields.
pub trait Metric {
    /// `out = P⁻¹ r`.
    fn apply_inverse(&self, r: &[f64], out: &mut [f64]);
    /// `out = P v`.
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

/// `P = I`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Metric for Identity {
    fn apply_inverse(&self, r: &[f64], out: &mut [f64]) {
        out.copy_from_slice(r);
    }
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
    }
}

/// Element stiffness of `−Δ` for a linear triangle.
pub fn p1_element_stiffness(p: [[f64; 2]; 3]) -> Result<[[f64; 3]; 3]> {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
    if area2.abs() < 1e-14 {
        return Err(QcError::DegenerateTriangle(0));
    }
    let mut grad = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        grad[i] = [p[j][1] - p[k][1], p[k][0] - p[j][0]];
    }
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]) / (2.0 * area2.abs());
        }
    }
    Ok(k)
}

/// P1 stiffness of `−Δ` with identity rows on clamped nodes, applied to
/// each displacement component.
#[derive(Clone, Debug)]
pub struct Preconditioner {
    stiffness: CsrMatrix,
    factor: EnvelopeCholesky,
    scale: f64,
}

impl Preconditioner {
    /// `scale` multiplies the free block; it sets the natural step length.
    pub fn assemble(mesh: &Mesh, scale: f64) -> Result<Self> {
        if !mesh.clamped.iter().any(|&c| c) {
            return Err(QcError::InvalidParameter(
                "preconditioner needs at least one clamped node".into(),
            ));
        }
        if !(scale > 0.0) {
            return Err(QcError::InvalidParameter(format!("preconditioner scale {scale}")));
        }
        let n = mesh.nodes.len();
        let mut triplets = Vec::with_capacity(9 * mesh.triangles.len() + n);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let k = p1_element_stiffness(tri.map(|v| mesh.nodes[v]))
                .map_err(|_| QcError::DegenerateTriangle(t))?;
            for a in 0..3 {
                for b in 0..3 {
                    let (i, j) = (tri[a], tri[b]);
                    if !mesh.clamped[i] && !mesh.clamped[j] {
                        triplets.push((i, j, scale * k[a][b]));
                    }
                }
            }
        }
        for (i, &c) in mesh.clamped.iter().enumerate() {
            if c {
                triplets.push((i, i, 1.0));
            }
        }
        let stiffness = CsrMatrix::from_triplets(n, triplets);
        let factor = EnvelopeCholesky::factor(&stiffness)?;
        Ok(Self {
            stiffness,
            factor,
            scale,
        })
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Metric for Preconditioner {
    fn apply_inverse(&self, r: &[f64], out: &mut [f64]) {
        let n = self.stiffness.dim();
        let mut b = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut work = vec![0.0; n];
        for c in 0..2 {
            for i in 0..n {
                b[i] = r[2 * i + c];
            }
            self.factor.solve_into(&b, &mut x, &mut work);
            for i in 0..n {
                out[2 * i + c] = x[i];
            }
        }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.stiffness.dim();
        for i in 0..n {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, k) in self.stiffness.row(i) {
                a += k * v[2 * j];
                b += k * v[2 * j + 1];
            }
            out[2 * i] = a;
            out[2 * i + 1] = b;
        }
    }
}
