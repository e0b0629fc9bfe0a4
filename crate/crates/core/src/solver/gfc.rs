//! Ghost-force correction: solves the force-based equations by a sequence
//! of dead-load corrected energy minimisations.

use std::fmt;

use crate::error::Result;
use crate::models::{Model, QcfOperator};

use super::pncg::pncg_minimize_with;
use super::{Metric, ModelObjective, SolveStatus, SolverConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct GfcConfig {
    /// Stop when the largest free-site force is at most this.
    pub outer_tol: f64,
    pub max_outer: usize,
    /// Inner gradient tolerance relative to the current outer residual.
    pub forcing: f64,
    /// Consecutive residual increases treated as divergence.
    pub divergence_window: usize,
}

impl Default for GfcConfig {
    fn default() -> Self {
        Self {
            outer_tol: 1e-8,
            max_outer: 200,
            forcing: 0.1,
            divergence_window: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GfcStatus {
    Converged,
    Diverged,
    MaxIterations,
    InnerFailed(SolveStatus),
}

impl fmt::Display for GfcStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Converged => f.write_str("converged"),
            Self::Diverged => f.write_str("diverged"),
            Self::MaxIterations => f.write_str("max-iterations"),
            Self::InnerFailed(s) => write!(f, "inner-{s}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GfcReport {
    pub status: GfcStatus,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub residual: f64,
    pub residuals: Vec<f64>,
}

pub fn free_force_norm(force: &[f64], clamped: &[bool]) -> f64 {
    clamped
        .iter()
        .enumerate()
        .filter(|&(_, &c)| !c)
        .map(|(i, _)| force[2 * i].abs().max(force[2 * i + 1].abs()))
        .fold(0.0, f64::max)
}

/// Iterates `u ← argmin E^qc(v) − (F^qcf(u) + ∇E^qc(u))·v` from `u`.
pub fn gfc_solve<M: Metric + ?Sized>(
    qc: &Model,
    qcf: &QcfOperator,
    clamped: &[bool],
    u: &mut [f64],
    metric: &M,
    cfg: &SolverConfig,
    gfc: &GfcConfig,
) -> Result<GfcReport> {
    gfc_solve_with(qc, qcf, clamped, u, metric, cfg, gfc, |_, _| true)
}

/// As [`gfc_solve`]; `monitor` is handed to every inner minimisation.
#[allow(clippy::too_many_arguments)]
pub fn gfc_solve_with<M: Metric + ?Sized, F>(
    qc: &Model,
    qcf: &QcfOperator,
    clamped: &[bool],
    u: &mut [f64],
    metric: &M,
    cfg: &SolverConfig,
    gfc: &GfcConfig,
    mut monitor: F,
) -> Result<GfcReport>
where
    F: FnMut(&super::IterationRecord, &[f64]) -> bool,
{
    let mut residuals = Vec::new();
    let mut inner_iterations = 0;
    let mut growth = 0;
    let mut outer = 0;
    loop {
        let force = qcf.force(u)?;
        let residual = free_force_norm(&force, clamped);
        if let Some(&prev) = residuals.last() {
            growth = if residual > prev { growth + 1 } else { 0 };
        }
        residuals.push(residual);
        let finish = |status| GfcReport {
            status,
            outer_iterations: outer,
            inner_iterations,
            residual,
            residuals: residuals.clone(),
        };
        if residual <= gfc.outer_tol {
            return Ok(finish(GfcStatus::Converged));
        }
        if growth >= gfc.divergence_window || !residual.is_finite() {
            return Ok(finish(GfcStatus::Diverged));
        }
        if outer >= gfc.max_outer {
            return Ok(finish(GfcStatus::MaxIterations));
        }

        let grad = qc.gradient(u)?;
        let load: Vec<f64> = force.iter().zip(&grad).map(|(f, g)| f + g).collect();
        let objective = ModelObjective::new(qc, clamped).with_load(load);
        let inner_tol = cfg
            .tol_g_inf
            .min((gfc.forcing * residual).max(0.1 * gfc.outer_tol));
        let inner_cfg = SolverConfig {
            tol_g_inf: inner_tol,
            tol_g_p: 0.0,
            tol_u_inf: f64::INFINITY,
            tol_e: f64::INFINITY,
            ..cfg.clone()
        };
        let report = pncg_minimize_with(&objective, u, metric, &inner_cfg, &mut monitor)?;
        inner_iterations += report.iterations;
        outer += 1;
        if report.status != SolveStatus::Converged {
            let force = qcf.force(u)?;
            return Ok(GfcReport {
                status: GfcStatus::InnerFailed(report.status),
                outer_iterations: outer,
                inner_iterations,
                residual: free_force_norm(&force, clamped),
                residuals,
            });
        }
    }
}
