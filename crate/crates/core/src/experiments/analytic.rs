//! The scalar dipole model `E(w, γ) = cos w + β ln w − γ w`.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{QcError, Result};

/// Constants of the unscaled model. Only `beta` enters the scaled form; the
/// others are carried for evaluating the separate energy contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticDipoleParams {
    pub beta: f64,
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub length: Option<f64>,
    pub spacing: Option<f64>,
    pub burgers: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub beta3: Option<f64>,
}

impl Default for AnalyticDipoleParams {
    fn default() -> Self {
        Self {
            beta: 12.0,
            mu: None,
            nu: None,
            length: None,
            spacing: None,
            burgers: None,
            beta1: None,
            beta2: None,
            beta3: None,
        }
    }
}

impl AnalyticDipoleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(QcError::InvalidParameter(format!("beta = {} must be positive", self.beta)));
        }
        Ok(())
    }

    /// Misfit, attraction and applied-shear energies of the unscaled model,
    /// with the boundary term dropped. Needs every optional constant.
    pub fn unscaled_energy(&self, w: f64, gamma: f64) -> Result<f64> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| QcError::InvalidParameter(format!("analytic constant `{name}` unset")))
        };
        let mu = need(self.mu, "mu")?;
        let nu = need(self.nu, "nu")?;
        let l = need(self.length, "length")?;
        let d = need(self.spacing, "spacing")?;
        let b = need(self.burgers, "burgers")?;
        let (b1, b2, b3) = (need(self.beta1, "beta1")?, need(self.beta2, "beta2")?, need(self.beta3, "beta3")?);
        if !(w > 0.0) {
            return Err(QcError::InvalidParameter(format!("separation w = {w} must be positive")));
        }
        let misfit = mu * b / (2.0 * PI * (1.0 - nu)) * (2.0 * PI * w / b).cos() * (-PI * d / ((1.0 - nu) * b)).exp();
        let attraction = mu * b * b / (2.0 * PI) * (w / l).ln();
        let shear = b1 * w + b2 * gamma - b3 * gamma * w / l;
        Ok(misfit + attraction + shear)
    }
}

pub fn analytic_energy(w: f64, gamma: f64, beta: f64) -> f64 {
    w.cos() + beta * w.ln() - gamma * w
}

/// `−∂E/∂w = sin w − β/w + γ`.
pub fn analytic_force(w: f64, gamma: f64, beta: f64) -> f64 {
    w.sin() - beta / w + gamma
}

/// Load at which `w` is an equilibrium.
fn equilibrium_load(w: f64, beta: f64) -> f64 {
    beta / w - w.sin()
}

/// `∂²E/∂w²`; equilibria are stable where it is positive.
fn stiffness(w: f64, beta: f64) -> f64 {
    -beta / (w * w) - w.cos()
}

/// Terminal point `(w*, γ*)` of the stable equilibrium branch reached from
/// `w_start` under increasing load: the first interval of positive stiffness
/// at or beyond `w_start` is followed to its right end, where the branch
/// folds.
pub fn analytic_fold(beta: f64, w_start: f64) -> Result<(f64, f64)> {
    if !(beta > 0.0 && w_start > 0.0) {
        return Err(QcError::InvalidParameter(format!(
            "analytic fold needs beta > 0 and w_start > 0, got {beta}, {w_start}"
        )));
    }
    let h = 1e-3;
    let w_max = w_start + 100.0 * (1.0 + beta.sqrt());
    let mut w = w_start;
    let mut entered = false;
    while w < w_max {
        let next = w + h;
        let (k0, k1) = (stiffness(w, beta), stiffness(next, beta));
        if k1 > 0.0 {
            entered = true;
        }
        if entered && k0 > 0.0 && k1 <= 0.0 {
            let (mut lo, mut hi) = (w, next);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if stiffness(mid, beta) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            let w_star = 0.5 * (lo + hi);
            return Ok((w_star, equilibrium_load(w_star, beta)));
        }
        w = next;
    }
    Err(QcError::NoBranch(format!("no stable interval beyond w = {w_start} up to {w_max}")))
}

/// Force on the grid `w ∈ [w0, w1]`, `γ ∈ [g0, g1]` with `n_w × n_g` points.
pub fn force_grid(beta: f64, w: (f64, f64, usize), gamma: (f64, f64, usize)) -> Vec<(f64, f64, f64)> {
    let pts = |(a, b, n): (f64, f64, usize)| -> Vec<f64> {
        if n <= 1 {
            vec![a]
        } else {
            (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
        }
    };
    let (ws, gs) = (pts(w), pts(gamma));
    let mut out = Vec::with_capacity(ws.len() * gs.len());
    for &g in &gs {
        for &x in &ws {
            out.push((x, g, analytic_force(x, g, beta)));
        }
    }
    out
}

pub fn write_force_grid<W: Write>(grid: &[(f64, f64, f64)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "w,gamma,force")?;
    for (w, g, f) in grid {
        writeln!(out, "{w:.16e},{g:.16e},{f:.16e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn force_values() {
        assert_eq!(analytic_force(PI, 12.0 / PI, 12.0), 0.0);
        assert_eq!(analytic_force(1.5, 0.0, 12.0), 1.5f64.sin() - 8.0);
    }

    #[test]
    fn force_is_minus_energy_slope() {
        for &(w, g) in &[(1.5, 0.0), (7.3, 1.2), (12.0, 2.5)] {
            let h = 1e-6;
            let fd = -(analytic_energy(w + h, g, 12.0) - analytic_energy(w - h, g, 12.0)) / (2.0 * h);
            assert!((fd - analytic_force(w, g, 12.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn fold_is_a_double_root() {
        let (w, g) = analytic_fold(12.0, 1.5).unwrap();
        assert!(analytic_force(w, g, 12.0).abs() < 1e-12);
        assert!(stiffness(w, 12.0).abs() < 1e-9);
        assert!(w > 10.0 && w < 11.5 && g > 2.0 && g < 2.2, "{w} {g}");
        assert!(analytic_fold(-1.0, 1.5).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = force_grid(12.0, (1.0, 20.0, 5), (0.0, 8.0, 3));
        assert_eq!(g.len(), 15);
        assert_eq!(g[0].0, 1.0);
        assert_eq!(g[14], (20.0, 8.0, analytic_force(20.0, 8.0, 12.0)));
    }
}
