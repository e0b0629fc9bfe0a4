//! Strong Wolfe linesearch: bracketing followed by cubic zoom.

use crate::error::Result;

/// `(φ(α) − φ(0), φ'(α))`, or `None` when `α` leaves the admissible set.
pub type Sample = Option<(f64, f64)>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WolfePoint {
    pub alpha: f64,
    pub change: f64,
    pub slope: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
struct Point {
    alpha: f64,
    value: f64,
    slope: f64,
    finite: bool,
}

/// Minimiser of the cubic matching values and slopes at `a` and `b`.
pub fn cubic_minimizer(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let den = db - da + 2.0 * d2;
    if den == 0.0 {
        return None;
    }
    let x = b - (b - a) * (db + d2 - d1) / den;
    x.is_finite().then_some(x)
}

/// As [`strong_wolfe`], but first tries the minimiser of the cubic through
/// `0` and `alpha0`, which is the exact line minimum for quadratics.
pub fn strong_wolfe_refined(
    mut phi: impl FnMut(f64) -> Result<Sample>,
    slope0: f64,
    alpha0: f64,
    c1: f64,
    c2: f64,
    max_evals: usize,
) -> Result<Option<WolfePoint>> {
    if max_evals >= 3 {
        if let Some((v0, d0)) = phi(alpha0)? {
            if let Some(a) = cubic_minimizer(0.0, 0.0, slope0, alpha0, v0, d0).filter(|a| *a > 0.0) {
                if let Some((v, d)) = phi(a)? {
                    if v <= c1 * a * slope0 && d.abs() <= -c2 * slope0 {
                        return Ok(Some(WolfePoint {
                            alpha: a,
                            change: v,
                            slope: d,
                            evaluations: 2,
                        }));
                    }
                }
            }
        }
    }
    let mut p = strong_wolfe(phi, slope0, alpha0, c1, c2, max_evals.saturating_sub(2))?;
    if let Some(p) = p.as_mut() {
        p.evaluations += 2;
    }
    Ok(p)
}

/// Finds `α > 0` with `φ(α) ≤ c1·α·φ'(0)` and `|φ'(α)| ≤ c2·|φ'(0)|`.
///
/// The accepted point is always the last one evaluated. Returns `None` if
/// no such point is found within `max_evals` evaluations.
pub fn strong_wolfe(
    mut phi: impl FnMut(f64) -> Result<Sample>,
    slope0: f64,
    alpha0: f64,
    c1: f64,
    c2: f64,
    max_evals: usize,
) -> Result<Option<WolfePoint>> {
    debug_assert!(slope0 < 0.0);
    let mut evals = 0;
    let mut eval = |alpha: f64, evals: &mut usize| -> Result<Point> {
        *evals += 1;
        Ok(match phi(alpha)? {
            Some((value, slope)) if value.is_finite() && slope.is_finite() => Point {
                alpha,
                value,
                slope,
                finite: true,
            },
            _ => Point {
                alpha,
                value: f64::INFINITY,
                slope: f64::NAN,
                finite: false,
            },
        })
    };
    let armijo = |p: &Point| p.finite && p.value <= c1 * p.alpha * slope0;
    let curvature = |p: &Point| p.slope.abs() <= -c2 * slope0;
    let accept = |p: Point, evals: usize| WolfePoint {
        alpha: p.alpha,
        change: p.value,
        slope: p.slope,
        evaluations: evals,
    };

    let origin = Point {
        alpha: 0.0,
        value: 0.0,
        slope: slope0,
        finite: true,
    };
    let mut prev = origin;
    let mut alpha = alpha0;
    let (mut lo, mut hi);
    loop {
        if evals >= max_evals {
            return Ok(None);
        }
        let p = eval(alpha, &mut evals)?;
        if !armijo(&p) || (prev.alpha > 0.0 && p.value >= prev.value) {
            lo = prev;
            hi = p;
            break;
        }
        if curvature(&p) {
            return Ok(Some(accept(p, evals)));
        }
        if p.slope >= 0.0 {
            lo = p;
            hi = prev;
            break;
        }
        prev = p;
        alpha *= 2.0;
    }

    // zoom: `lo` satisfies sufficient decrease with the smallest value so far
    let mut stalls = 0;
    let mut width = (hi.alpha - lo.alpha).abs();
    while evals < max_evals {
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        if b - a <= 1e-15 * b {
            return Ok(None);
        }
        let bisect = 0.5 * (a + b);
        let trial = if hi.finite && stalls < 2 {
            cubic_minimizer(lo.alpha, lo.value, lo.slope, hi.alpha, hi.value, hi.slope)
                .filter(|&x| x > a && x < b)
                .unwrap_or(bisect)
        } else {
            bisect
        };
        let p = eval(trial, &mut evals)?;
        if !armijo(&p) || p.value >= lo.value {
            hi = p;
        } else {
            if curvature(&p) {
                return Ok(Some(accept(p, evals)));
            }
            if p.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
        let w = (hi.alpha - lo.alpha).abs();
        if w > 0.5 * width {
            stalls += 1;
        } else {
            stalls = 0;
        }
        width = w;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_is_exact_on_cubics_and_quadratics() {
        let f = |x: f64| (x - 0.7) * (x - 0.7);
        let d = |x: f64| 2.0 * (x - 0.7);
        let x = cubic_minimizer(0.0, f(0.0), d(0.0), 2.0, f(2.0), d(2.0)).unwrap();
        assert!((x - 0.7).abs() < 1e-14);
        let g = |x: f64| x * x * x - 3.0 * x;
        let dg = |x: f64| 3.0 * x * x - 3.0;
        let x = cubic_minimizer(0.0, g(0.0), dg(0.0), 3.0, g(3.0), dg(3.0)).unwrap();
        assert!((x - 1.0).abs() < 1e-12);
    }

    fn check(f: impl Fn(f64) -> (f64, f64), alpha0: f64) -> WolfePoint {
        let (f0, d0) = f(0.0);
        let (c1, c2) = (1e-4, 0.5);
        let p = strong_wolfe(|a| Ok(Some((f(a).0 - f0, f(a).1))), d0, alpha0, c1, c2, 40)
            .unwrap()
            .unwrap();
        assert!(p.change <= c1 * p.alpha * d0);
        assert!(p.slope.abs() <= c2 * d0.abs());
        p
    }

    #[test]
    fn finds_wolfe_points() {
        let q = |a: f64| ((a - 3.0).powi(2), 2.0 * (a - 3.0));
        check(q, 1e-3);
        check(q, 100.0);
        let s = |a: f64| (-(a.sin()), -(a.cos()));
        check(s, 0.1);
        check(s, 5.0);
    }

    #[test]
    fn backs_off_inadmissible_steps() {
        let f = |a: f64| -> Sample {
            if a > 1.0 {
                None
            } else {
                Some(((a - 0.9).powi(2) - 0.81, 2.0 * (a - 0.9)))
            }
        };
        let p = strong_wolfe(|a| Ok(f(a)), -1.8, 8.0, 1e-4, 0.5, 40).unwrap().unwrap();
        assert!(p.alpha <= 1.0);
    }

    #[test]
    fn reports_failure() {
        // a linear decrease never satisfies the curvature condition
        let p = strong_wolfe(|a| Ok(Some((-a, -1.0))), -1.0, 1.0, 1e-4, 0.5, 10).unwrap();
        assert!(p.is_none());
    }
}
