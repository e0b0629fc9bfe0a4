//! Isotropic elastic edge dislocations and the Lomer dipole initial guess.

use std::f64::consts::PI;

use crate::error::{QcError, Result};
use crate::lattice::{Domain, LatticePoint};

use super::loading::Loading;

/// Displacement of an edge dislocation with Burgers vector `burgers·x̂` and
/// core `core`, evaluated at `x` (all Cartesian). The `u1` cut runs along
/// `x2 = core2` to the left of the core.
pub fn edge_dislocation_displacement(x: [f64; 2], core: [f64; 2], burgers: f64, nu: f64) -> Result<[f64; 2]> {
    let (x1, x2) = (x[0] - core[0], x[1] - core[1]);
    let r2 = x1 * x1 + x2 * x2;
    if r2 == 0.0 {
        return Err(QcError::InvalidParameter(
            "displacement evaluated at a dislocation core".into(),
        ));
    }
    let k = burgers / (2.0 * PI);
    let u1 = k * (x2.atan2(x1) + x1 * x2 / (2.0 * (1.0 - nu) * r2));
    let u2 = -k
        * ((1.0 - 2.0 * nu) / (4.0 * (1.0 - nu)) * r2.ln()
            + (x1 * x1 - x2 * x2) / (4.0 * (1.0 - nu) * r2));
    Ok([u1, u2])
}

/// Core positions (in `⟨ν1, ν2⟩`) and Burgers vectors of the Lomer dipole.
#[derive(Clone, Debug, PartialEq)]
pub struct DipoleConfig {
    pub left_core: [f64; 2],
    pub right_core: [f64; 2],
    /// Signed Burgers vectors along `V1`, in units of `|V1| = a/√2`.
    pub left_burgers: f64,
    pub right_burgers: f64,
    pub poisson_nu: f64,
    pub gamma0: f64,
}

impl DipoleConfig {
    /// The standard dipole with the given Poisson ratio.
    pub fn standard(poisson_nu: f64) -> Self {
        Self {
            left_core: [32.0, 30.0 + 1.0 / 6.0],
            right_core: [43.0, 30.0 + 1.0 / 3.0],
            left_burgers: -1.0,
            right_burgers: 1.0,
            poisson_nu,
            gamma0: 0.0375,
        }
    }

    fn cartesian(domain: &Domain, nu: [f64; 2]) -> [f64; 2] {
        let g = domain.geometry();
        [nu[0] * g.v1_length(), nu[1] * g.v2_length()]
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if !(self.poisson_nu > -1.0 && self.poisson_nu < 0.5) {
            return Err(QcError::InvalidParameter(format!(
                "Poisson ratio {} outside (-1, 0.5)",
                self.poisson_nu
            )));
        }
        let spec = domain.spec();
        for core in [self.left_core, self.right_core] {
            let inside = core[0] > 0.0
                && core[0] < spec.columns as f64
                && core[1] > 0.0
                && core[1] < spec.rows as f64;
            if !inside {
                return Err(QcError::InvalidParameter(format!(
                    "dislocation core {core:?} outside the domain"
                )));
            }
        }
        Ok(())
    }

    /// `u_elas = u^L + u^R`.
    pub fn elastic_field(&self, domain: &Domain) -> Result<Vec<f64>> {
        self.validate(domain)?;
        let b = domain.geometry().burgers();
        let left = Self::cartesian(domain, self.left_core);
        let right = Self::cartesian(domain, self.right_core);
        let mut u = Vec::with_capacity(2 * domain.len());
        for x in 0..domain.len() {
            let p = domain.cartesian(x);
            let l = edge_dislocation_displacement(p, left, self.left_burgers * b, self.poisson_nu)?;
            let r = edge_dislocation_displacement(p, right, self.right_burgers * b, self.poisson_nu)?;
            u.push(l[0] + r[0]);
            u.push(l[1] + r[1]);
        }
        Ok(u)
    }

    /// `σ(γ)(x + u_elas) − x` with the clamped layer set exactly to `σ(γ)x − x`.
    pub fn initial_guess(&self, domain: &Domain, gamma: f64) -> Result<Vec<f64>> {
        let mut u = self.elastic_field(domain)?;
        Loading::Shear.advance(domain, &mut u, 0.0, gamma);
        Loading::Shear.clamp(domain, &mut u, gamma);
        Ok(u)
    }

    /// Midpoint between the two cores, on the slip plane.
    pub fn centre(&self) -> LatticePoint {
        LatticePoint::from_nu(
            (0.5 * (self.left_core[0] + self.right_core[0])).round(),
            self.left_core[1].floor(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn on_axis_values() {
        let (b, nu) = (0.94, 0.3);
        let d: f64 = 2.5;
        let u = edge_dislocation_displacement([1.0 + d, 2.0], [1.0, 2.0], b, nu).unwrap();
        assert!(u[0].abs() < 1e-15);
        let expect = -(b / (2.0 * PI)) * ((1.0 - 2.0 * nu) / (4.0 * (1.0 - nu)) * (d * d).ln() + 1.0 / (4.0 * (1.0 - nu)));
        assert!((u[1] - expect).abs() < 1e-14);
        assert!(edge_dislocation_displacement([1.0, 2.0], [1.0, 2.0], b, nu).is_err());
    }

    #[test]
    fn circuit_closes_with_burgers_jump() {
        let (b, nu) = (0.94, 0.25);
        let above = edge_dislocation_displacement([-1.0, 1e-12], [0.0, 0.0], b, nu).unwrap();
        let below = edge_dislocation_displacement([-1.0, -1e-12], [0.0, 0.0], b, nu).unwrap();
        assert!((above[0] - below[0] - b).abs() < 1e-9);
        assert!((above[1] - below[1]).abs() < 1e-9);
        // continuous across the positive axis
        let a = edge_dislocation_displacement([1.0, 1e-12], [0.0, 0.0], b, nu).unwrap();
        let c = edge_dislocation_displacement([1.0, -1e-12], [0.0, 0.0], b, nu).unwrap();
        assert!((a[0] - c[0]).abs() < 1e-9);
    }

    #[test]
    fn opposite_cores_cancel_far_away() {
        let (b, nu) = (1.0, 0.3);
        let (l, r) = ([0.0, 0.0], [10.0, 0.3]);
        let at = |x: [f64; 2]| {
            let p = edge_dislocation_displacement(x, l, -b, nu).unwrap();
            let q = edge_dislocation_displacement(x, r, b, nu).unwrap();
            [p[0] + q[0], p[1] + q[1]]
        };
        let near = at([5.0, 40.0]);
        let far = at([5.0, 400.0]);
        let ratio = far[0].hypot(far[1]) / near[0].hypot(near[1]);
        assert!(ratio < 0.2, "{ratio}");
    }
}
