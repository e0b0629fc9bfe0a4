//! Boundary loadings and the continuation predictor.

use std::fmt;
use std::str::FromStr;

use crate::error::QcError;
use crate::lattice::Domain;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loading {
    /// `σ(γ) = [[1, γ], [0, 1]]`.
    Shear,
    /// `τ(γ) = [[1 + γ, 0], [0, 1]]`.
    Tension,
}

impl Loading {
    /// Prescribed displacement of a reference point at load `γ`.
    pub fn boundary_displacement(self, x: [f64; 2], gamma: f64) -> [f64; 2] {
        match self {
            Loading::Shear => [gamma * x[1], 0.0],
            Loading::Tension => [gamma * x[0], 0.0],
        }
    }

    /// Predictor from load `from` to `to`: maps the deformed positions
    /// `x + u` by the incremental loading.
    pub fn advance(self, domain: &Domain, u: &mut [f64], from: f64, to: f64) {
        for i in 0..domain.len() {
            let x = domain.cartesian(i);
            match self {
                Loading::Shear => u[2 * i] += (to - from) * (x[1] + u[2 * i + 1]),
                Loading::Tension => {
                    let ratio = (1.0 + to) / (1.0 + from);
                    u[2 * i] = ratio * (x[0] + u[2 * i]) - x[0];
                }
            }
        }
    }

    /// How [`Loading::advance`] maps one load to the next.
    pub fn predictor(self) -> &'static str {
        match self {
            Loading::Shear => "x1 += (g' - g) * (x2 + u2)",
            Loading::Tension => "x1 *= (1 + g') / (1 + g)",
        }
    }

    /// Overwrites the clamped layer with the exact boundary values.
    pub fn clamp(self, domain: &Domain, u: &mut [f64], gamma: f64) {
        for i in 0..domain.len() {
            if domain.is_clamped(i) {
                let d = self.boundary_displacement(domain.cartesian(i), gamma);
                u[2 * i] = d[0];
                u[2 * i + 1] = d[1];
            }
        }
    }
}

impl fmt::Display for Loading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loading::Shear => "shear",
            Loading::Tension => "tension",
        })
    }
}

impl FromStr for Loading {
    type Err = QcError;
    fn from_str(s: &str) -> Result<Self, QcError> {
        match s {
            "shear" => Ok(Loading::Shear),
            "tension" => Ok(Loading::Tension),
            other => Err(QcError::InvalidParameter(format!("unknown loading `{other}`"))),
        }
    }
}
