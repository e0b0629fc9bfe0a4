//! Morse pair potential, column-summed bond potentials and the lattice
//! constant calibration.

use std::f64::consts::SQRT_2;

use crate::error::{QcError, Result};

/// `φ(r) = (1 − exp(−α(r − 1)))²`, minimum at `r = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Morse {
    pub alpha: f64,
}

impl Default for Morse {
    fn default() -> Self {
        Self { alpha: 4.4 }
    }
}

impl Morse {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(QcError::InvalidParameter(format!(
                "Morse stiffness must be positive, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    #[inline]
    fn decay(&self, r: f64) -> f64 {
        (-self.alpha * (r - 1.0)).exp()
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        let d = 1.0 - self.decay(r);
        d * d
    }

    #[inline]
    pub fn derivative(&self, r: f64) -> f64 {
        let e = self.decay(r);
        2.0 * self.alpha * e * (1.0 - e)
    }

    #[inline]
    pub fn second_derivative(&self, r: f64) -> f64 {
        let e = self.decay(r);
        2.0 * self.alpha * self.alpha * e * (2.0 * e - 1.0)
    }

    pub fn checked_value(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.value(r))
    }

    pub fn checked_derivative(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.derivative(r))
    }

    /// `φ(r_new) − φ(r_old)` without cancellation, given `r_new − r_old`.
    #[inline]
    pub fn difference(&self, r_old: f64, dr: f64) -> f64 {
        let e_old = self.decay(r_old);
        let e_new = self.decay(r_old + dr);
        // e_old − e_new = −e_old·expm1(−α dr)
        let de = -e_old * (-self.alpha * dr).exp_m1();
        de * (2.0 - e_old - e_new)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(QcError::InvalidParameter(format!(
            "pair distance must be positive, got {r}"
        )))
    }
}

/// `φ_b(r) = Σ_j φ(√(r² + q_j²))` over the out-of-plane offsets of one
/// planar bond class.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedPotential {
    morse: Morse,
    offsets_sq: Vec<f64>,
}

impl ProjectedPotential {
    pub fn new(morse: Morse, offsets: &[f64]) -> Self {
        Self {
            morse,
            offsets_sq: offsets.iter().map(|q| q * q).collect(),
        }
    }

    pub fn morse(&self) -> Morse {
        self.morse
    }

    /// Returns `(φ_b, φ_b'(r)/r)` as functions of `r²`.
    #[inline]
    pub fn eval_sq(&self, r2: f64) -> (f64, f64) {
        let mut value = 0.0;
        let mut slope = 0.0;
        for &q2 in &self.offsets_sq {
            let rho = (r2 + q2).sqrt();
            value += self.morse.value(rho);
            slope += self.morse.derivative(rho) / rho;
        }
        (value, slope)
    }

    /// `φ_b'(r)/r` only.
    #[inline]
    pub fn slope_sq(&self, r2: f64) -> f64 {
        self.offsets_sq
            .iter()
            .map(|&q2| {
                let rho = (r2 + q2).sqrt();
                self.morse.derivative(rho) / rho
            })
            .sum()
    }

    /// `φ_b(√(r2 + dr2)) − φ_b(√r2)` without cancellation.
    #[inline]
    pub fn difference_sq(&self, r2: f64, dr2: f64) -> f64 {
        let mut total = 0.0;
        for &q2 in &self.offsets_sq {
            let old = (r2 + q2).sqrt();
            let new = (r2 + dr2 + q2).sqrt();
            total += self.morse.difference(old, dr2 / (old + new));
        }
        total
    }

    /// `φ_b(√(r2 + dr2)) − φ_b(√r2)` together with `φ_b'/r` at the new length.
    #[inline]
    pub fn difference_and_slope_sq(&self, r2: f64, dr2: f64) -> (f64, f64) {
        let alpha = self.morse.alpha;
        let mut diff = 0.0;
        let mut slope = 0.0;
        for &q2 in &self.offsets_sq {
            let old = (r2 + q2).sqrt();
            let new = (r2 + dr2 + q2).sqrt();
            let dr = dr2 / (old + new);
            let e_old = (-alpha * (old - 1.0)).exp();
            let e_new = (-alpha * (new - 1.0)).exp();
            diff += -e_old * (-alpha * dr).exp_m1() * (2.0 - e_old - e_new);
            slope += 2.0 * alpha * e_new * (1.0 - e_new) / new;
        }
        (diff, slope)
    }

    /// `(φ_b(r), φ_b'(r))`.
    pub fn value(&self, r: f64) -> Result<(f64, f64)> {
        check_radius(r)?;
        let (v, s) = self.eval_sq(r * r);
        Ok((v, s * r))
    }

    /// `φ_b''(r)`.
    pub fn second_derivative(&self, r: f64) -> f64 {
        self.offsets_sq
            .iter()
            .map(|&q2| {
                let rho = (r * r + q2).sqrt();
                let (d1, d2) = (self.morse.derivative(rho), self.morse.second_derivative(rho));
                let c = r / rho;
                d2 * c * c + d1 * (1.0 - c * c) / rho
            })
            .sum()
    }
}

/// Energy of one atom in the undeformed FCC lattice with cube side `r`,
/// summed over its first four neighbour shells (twice the site energy).
pub fn psi(morse: &Morse, r: f64) -> f64 {
    12.0 * morse.value(r / SQRT_2)
        + 6.0 * morse.value(r)
        + 24.0 * morse.value((1.5f64).sqrt() * r)
        + 12.0 * morse.value(SQRT_2 * r)
}

pub fn psi_derivative(morse: &Morse, r: f64) -> f64 {
    let s15 = (1.5f64).sqrt();
    12.0 / SQRT_2 * morse.derivative(r / SQRT_2)
        + 6.0 * morse.derivative(r)
        + 24.0 * s15 * morse.derivative(s15 * r)
        + 12.0 * SQRT_2 * morse.derivative(SQRT_2 * r)
}

const SEARCH_LO: f64 = 0.5;
const SEARCH_HI: f64 = 3.0;

/// The cube side minimising [`psi`], to absolute tolerance `1e-8`.
pub fn equilibrium_lattice_constant(morse: &Morse) -> Result<f64> {
    let f = |r: f64| psi(morse, r);
    // coarse scan for the first interior local minimum
    let n = 2500;
    let h = (SEARCH_HI - SEARCH_LO) / n as f64;
    let mut bracket = None;
    for k in 1..n {
        let (a, b, c) = (
            SEARCH_LO + (k - 1) as f64 * h,
            SEARCH_LO + k as f64 * h,
            SEARCH_LO + (k + 1) as f64 * h,
        );
        if f(b) < f(a) && f(b) <= f(c) {
            bracket = Some((a, c));
            break;
        }
    }
    let (a, b) = bracket.ok_or(QcError::NoBracket {
        lo: SEARCH_LO,
        hi: SEARCH_HI,
    })?;
    Ok(brent_minimize(f, a, b, 1e-10))
}

/// Brent's parabolic/golden minimiser on `[a, b]`.
pub fn brent_minimize(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol1 = tol + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    x
}
