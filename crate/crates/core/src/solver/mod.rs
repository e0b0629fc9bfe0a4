//! Preconditioned nonlinear conjugate gradients and the ghost-force
//! correction iteration.

pub mod gfc;
pub mod linesearch;
pub mod pncg;
pub mod precond;
pub mod sparse;

use std::fmt;
use std::io::Write;

use crate::error::{QcError, Result};
use crate::models::Model;

pub use gfc::{gfc_solve, GfcConfig, GfcReport, GfcStatus};
pub use pncg::{pncg_minimize, SolveReport};
pub use precond::{Identity, Metric, Preconditioner};

/// Tolerances and limits for [`pncg_minimize`].
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub c1: f64,
    pub c2: f64,
    pub tol_u_inf: f64,
    pub tol_u_p: f64,
    pub tol_g_inf: f64,
    pub tol_g_p: f64,
    pub tol_e: f64,
    pub max_iterations: usize,
    pub max_linesearch_steps: usize,
    /// Try the cubic line minimum before the bracketing search.
    pub exact_linesearch: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.5,
            tol_u_inf: 1e-5,
            tol_u_p: 1e-5,
            tol_g_inf: 1e-4,
            tol_g_p: 1e-4,
            tol_e: 1e-4,
            max_iterations: 20_000,
            max_linesearch_steps: 40,
            exact_linesearch: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(QcError::InvalidParameter(format!(
                "Wolfe constants need 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        let tols = [
            self.tol_u_inf,
            self.tol_u_p,
            self.tol_g_inf,
            self.tol_g_p,
            self.tol_e,
        ];
        if tols.iter().any(|t| !(*t >= 0.0)) {
            return Err(QcError::InvalidParameter("tolerances must be non-negative".into()));
        }
        if self.max_linesearch_steps == 0 {
            return Err(QcError::InvalidParameter("max_linesearch_steps must be positive".into()));
        }
        Ok(())
    }
}

/// A smooth function of the free degrees of freedom.
pub trait Objective {
    fn dim(&self) -> usize;

    /// `E(x)`; `grad` receives `∇E(x)`.
    fn energy_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64>;

    /// `E(x + step) − E(x)`; `grad` receives `∇E(x + step)`.
    fn change_gradient(&self, x: &[f64], step: &[f64], grad: &mut [f64]) -> Result<f64> {
        let e0 = self.energy_gradient(x, grad)?;
        let moved: Vec<f64> = x.iter().zip(step).map(|(a, b)| a + b).collect();
        Ok(self.energy_gradient(&moved, grad)? - e0)
    }
}

/// A model energy with clamped sites held fixed and an optional dead load:
/// `E(v) − f·v`.
#[derive(Clone, Debug)]
pub struct ModelObjective<'a> {
    model: &'a Model,
    clamped: &'a [bool],
    load: Option<Vec<f64>>,
}

impl<'a> ModelObjective<'a> {
    pub fn new(model: &'a Model, clamped: &'a [bool]) -> Self {
        Self {
            model,
            clamped,
            load: None,
        }
    }

    /// Adds the dead load `f` (entries on clamped sites are ignored).
    pub fn with_load(mut self, mut f: Vec<f64>) -> Self {
        for (i, &c) in self.clamped.iter().enumerate() {
            if c {
                f[2 * i] = 0.0;
                f[2 * i + 1] = 0.0;
            }
        }
        self.load = Some(f);
        self
    }

    fn finish(&self, grad: &mut [f64]) {
        if let Some(f) = &self.load {
            for (g, f) in grad.iter_mut().zip(f) {
                *g -= f;
            }
        }
        for (i, &c) in self.clamped.iter().enumerate() {
            if c {
                grad[2 * i] = 0.0;
                grad[2 * i + 1] = 0.0;
            }
        }
    }

    fn load_dot(&self, v: &[f64]) -> f64 {
        self.load
            .as_ref()
            .map_or(0.0, |f| f.iter().zip(v).map(|(a, b)| a * b).sum())
    }
}

impl Objective for ModelObjective<'_> {
    fn dim(&self) -> usize {
        2 * self.model.sites()
    }

    fn energy_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let e = self.model.energy_gradient(x, grad)?;
        self.finish(grad);
        Ok(e - self.load_dot(x))
    }

    fn change_gradient(&self, x: &[f64], step: &[f64], grad: &mut [f64]) -> Result<f64> {
        let de = self.model.energy_change(x, step, Some(grad))?;
        self.finish(grad);
        Ok(de - self.load_dot(step))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LinesearchFailed,
    Interrupted,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Converged => "converged",
            Self::MaxIterations => "max-iterations",
            Self::LinesearchFailed => "linesearch-failed",
            Self::Interrupted => "interrupted",
        })
    }
}

/// One accepted P-nCG step.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub energy: f64,
    pub grad_inf: f64,
    pub grad_p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub evaluations: usize,
    pub sufficient_decrease: bool,
    pub curvature: bool,
}

pub fn write_trace<W: Write>(records: &[IterationRecord], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "iteration,energy,grad_inf,grad_p,alpha,beta,linesearch_evaluations,armijo,curvature"
    )?;
    for r in records {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
            r.iteration,
            r.energy,
            r.grad_inf,
            r.grad_p,
            r.alpha,
            r.beta,
            r.evaluations,
            r.sufficient_decrease,
            r.curvature
        )?;
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
