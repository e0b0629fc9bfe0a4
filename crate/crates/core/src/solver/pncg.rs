//! Preconditioned Polak–Ribière nonlinear conjugate gradients.

use crate::error::{QcError, Result};

use super::linesearch::{strong_wolfe, strong_wolfe_refined};
use super::{dot, norm_inf, IterationRecord, Metric, Objective, SolveStatus, SolverConfig};

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub energy: f64,
    pub grad_inf: f64,
    pub grad_p: f64,
    pub evaluations: usize,
    pub records: Vec<IterationRecord>,
}

/// Minimises `obj` from `x` in place.
pub fn pncg_minimize<O, M>(obj: &O, x: &mut [f64], metric: &M, cfg: &SolverConfig) -> Result<SolveReport>
where
    O: Objective + ?Sized,
    M: Metric + ?Sized,
{
    pncg_minimize_with(obj, x, metric, cfg, |_, _| true)
}

/// As [`pncg_minimize`]; `monitor` sees every accepted iterate and may stop
/// the iteration by returning `false`.
pub fn pncg_minimize_with<O, M, F>(
    obj: &O,
    x: &mut [f64],
    metric: &M,
    cfg: &SolverConfig,
    mut monitor: F,
) -> Result<SolveReport>
where
    O: Objective + ?Sized,
    M: Metric + ?Sized,
    F: FnMut(&IterationRecord, &[f64]) -> bool,
{
    cfg.validate()?;
    let n = obj.dim();
    if x.len() != n {
        return Err(QcError::FieldSize {
            expected: n / 2,
            found: x.len() / 2,
        });
    }
    let mut r = vec![0.0; n];
    let mut energy = obj.energy_gradient(x, &mut r)?;
    let mut g = vec![0.0; n];
    metric.apply_inverse(&r, &mut g);
    let mut gp = dot(&r, &g);
    let mut evaluations = 1;
    let mut records = Vec::new();

    let report = |status, iterations, energy, r: &[f64], gp: f64, evaluations, records| SolveReport {
        status,
        iterations,
        energy,
        grad_inf: norm_inf(r),
        grad_p: gp.max(0.0).sqrt(),
        evaluations,
        records,
    };
    let gradient_small = |r: &[f64], gp: f64| norm_inf(r) <= cfg.tol_g_inf || gp.max(0.0).sqrt() <= cfg.tol_g_p;

    if gradient_small(&r, gp) {
        return Ok(report(SolveStatus::Converged, 0, energy, &r, gp, evaluations, records));
    }

    let mut s: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut steepest = true;
    let mut last_change: Option<f64> = None;
    let mut trial_grad = vec![0.0; n];
    let mut step = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut ps = vec![0.0; n];

    for iteration in 1..=cfg.max_iterations {
        let mut slope = dot(&r, &s);
        if !(slope < 0.0) {
            s.iter_mut().zip(&g).for_each(|(s, g)| *s = -g);
            slope = -gp;
            steepest = true;
        }
        let first_alpha = 1.0 / (1.0 + gp.max(0.0).sqrt());
        let mut alpha0 = match last_change {
            Some(de) if de < 0.0 => 2.0 * de / slope,
            _ => first_alpha,
        };
        if !(alpha0.is_finite() && alpha0 > 0.0) {
            alpha0 = first_alpha;
        }

        let mut found = None;
        for attempt in 0..2 {
            let mut phi = |alpha: f64| -> Result<Option<(f64, f64)>> {
                step.iter_mut().zip(&s).for_each(|(st, s)| *st = alpha * s);
                match obj.change_gradient(x, &step, &mut trial_grad) {
                    Ok(de) => Ok(Some((de, dot(&trial_grad, &s)))),
                    Err(QcError::DegenerateConfiguration { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            };
            let result = if cfg.exact_linesearch {
                strong_wolfe_refined(&mut phi, slope, alpha0, cfg.c1, cfg.c2, cfg.max_linesearch_steps)?
            } else {
                strong_wolfe(&mut phi, slope, alpha0, cfg.c1, cfg.c2, cfg.max_linesearch_steps)?
            };
            evaluations += match result {
                Some(p) => p.evaluations,
                None => cfg.max_linesearch_steps,
            };
            if result.is_some() || steepest || attempt == 1 {
                found = result;
                break;
            }
            // restart along steepest descent once
            s.iter_mut().zip(&g).for_each(|(s, g)| *s = -g);
            slope = -gp;
            alpha0 = first_alpha;
            steepest = true;
        }
        let Some(point) = found else {
            return Ok(report(
                SolveStatus::LinesearchFailed,
                iteration - 1,
                energy,
                &r,
                gp,
                evaluations,
                records,
            ));
        };

        let alpha = point.alpha;
        for k in 0..n {
            x[k] += alpha * s[k];
        }
        energy += point.change;
        std::mem::swap(&mut r, &mut trial_grad);
        metric.apply_inverse(&r, &mut g_new);
        let gp_new = dot(&r, &g_new);
        let beta = ((gp_new - dot(&r, &g)) / gp).max(0.0);

        metric.apply(&s, &mut ps);
        let du_inf = alpha * norm_inf(&s);
        let du_p = alpha * dot(&s, &ps).max(0.0).sqrt();

        let record = IterationRecord {
            iteration,
            energy,
            grad_inf: norm_inf(&r),
            grad_p: gp_new.max(0.0).sqrt(),
            alpha,
            beta,
            evaluations: point.evaluations,
            sufficient_decrease: point.change <= cfg.c1 * alpha * slope,
            curvature: point.slope.abs() <= -cfg.c2 * slope,
        };
        let keep_going = monitor(&record, x);
        records.push(record);

        std::mem::swap(&mut g, &mut g_new);
        gp = gp_new;
        last_change = Some(point.change);

        let moved_little = du_inf <= cfg.tol_u_inf || du_p <= cfg.tol_u_p;
        if moved_little && gradient_small(&r, gp) && -point.change <= cfg.tol_e {
            return Ok(report(SolveStatus::Converged, iteration, energy, &r, gp, evaluations, records));
        }
        if !keep_going {
            return Ok(report(SolveStatus::Interrupted, iteration, energy, &r, gp, evaluations, records));
        }

        for k in 0..n {
            s[k] = -g[k] + beta * s[k];
        }
        steepest = beta == 0.0;
    }
    let iterations = cfg.max_iterations;
    Ok(report(SolveStatus::MaxIterations, iterations, energy, &r, gp, evaluations, records))
}
