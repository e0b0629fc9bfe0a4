//! Discrete gradient norms and critical-strain errors.

use crate::error::{QcError, Result};
use crate::lattice::Domain;

/// `max_x max_b |D_b u(x)| / |b|` over the clipped planar bonds.
pub fn w1inf_norm(domain: &Domain, u: &[f64]) -> f64 {
    let classes = &domain.bonds().classes;
    let lengths: Vec<f64> = classes.iter().map(|c| c.cartesian[0].hypot(c.cartesian[1])).collect();
    let mut norm = 0.0f64;
    for x in 0..domain.len() {
        for (c, len) in lengths.iter().enumerate() {
            if let Some(y) = domain.neighbor(x, c) {
                let d = (u[2 * y] - u[2 * x]).hypot(u[2 * y + 1] - u[2 * x + 1]);
                norm = norm.max(d / len);
            }
        }
    }
    norm
}

/// `‖u_qc − u_a‖ / ‖u_a‖` in the discrete `w^{1,∞}` norm.
pub fn relative_error(domain: &Domain, u_qc: &[f64], u_a: &[f64]) -> Result<f64> {
    let reference = w1inf_norm(domain, u_a);
    if reference == 0.0 {
        return Err(QcError::ZeroDenominator("relative error"));
    }
    let diff: Vec<f64> = u_qc.iter().zip(u_a).map(|(a, b)| a - b).collect();
    Ok(w1inf_norm(domain, &diff) / reference)
}

/// Bracket midpoint.
pub fn midpoint(bracket: (f64, f64)) -> f64 {
    0.5 * (bracket.0 + bracket.1)
}

/// `100·(γ̄_at − γ̄_qc)/γ̄_at` from bracket midpoints.
pub fn critical_error(atomistic: (f64, f64), qc: (f64, f64)) -> Result<f64> {
    let at = midpoint(atomistic);
    if at == 0.0 {
        return Err(QcError::ZeroDenominator("critical error"));
    }
    Ok(100.0 * (at - midpoint(qc)) / at)
}
