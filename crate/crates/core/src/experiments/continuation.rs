//! Loading continuation with bracketing of the critical load.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{QcError, Result};
use crate::lattice::{canonical_triangulation, Domain};
use crate::models::{Model, ModelKind, QcfOperator};
use crate::potentials::Morse;
use crate::solver::gfc::gfc_solve_with;
use crate::solver::pncg::pncg_minimize_with;
use crate::solver::{
    GfcConfig, GfcStatus, IterationRecord, ModelObjective, Preconditioner, SolveStatus, SolverConfig,
};

use super::detector::Detector;
use super::loading::Loading;
use super::metrics::relative_error;

/// An energy model minimised directly, or the force-based method solved by
/// ghost-force correction with the given energy as preconditioner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Energy(ModelKind),
    Qcf(ModelKind),
}

impl Method {
    pub fn label(self) -> String {
        match self {
            Method::Energy(ModelKind::Atomistic) => "Atomistic".into(),
            Method::Energy(ModelKind::CauchyBorn) => "Cauchy-Born".into(),
            Method::Energy(k) => k.name().to_uppercase(),
            Method::Qcf(k) => format!("{}-QCF", k.name().to_uppercase()),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Energy(k) => write!(f, "{k}"),
            Method::Qcf(k) => write!(f, "qcf-{k}"),
        }
    }
}

impl FromStr for Method {
    type Err = QcError;
    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("qcf-") {
            Some(rest) => match rest.parse()? {
                k @ (ModelKind::Qce | ModelKind::Qnl) => Ok(Method::Qcf(k)),
                _ => Err(QcError::InvalidParameter(format!("unknown method `{s}`"))),
            },
            None => Ok(Method::Energy(s.parse()?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationConfig {
    pub gamma_start: f64,
    pub initial_step: f64,
    /// Smallest load increment ever attempted.
    pub min_step: f64,
    /// Refinement stops once `γ⁺ − γ⁻` is at most this.
    pub target_width: f64,
    /// Continuation gives up (without a bracket) beyond this load.
    pub gamma_max: f64,
    pub max_steps: usize,
    pub threshold: f64,
    /// A solve is abandoned once the slip measure exceeds this multiple of
    /// `threshold`; infinity disables the shortcut.
    pub abort_factor: f64,
}

impl ContinuationConfig {
    pub fn dipole(gamma0: f64, threshold: f64) -> Self {
        Self {
            gamma_start: gamma0,
            initial_step: 1e-4,
            min_step: 1e-7,
            target_width: 5e-6,
            gamma_max: 0.1,
            max_steps: 1000,
            threshold,
            abort_factor: 1.5,
        }
    }

    pub fn tension(threshold: f64) -> Self {
        Self {
            gamma_start: 0.0,
            initial_step: 1e-3,
            min_step: 1e-7,
            target_width: 5e-6,
            gamma_max: 0.2,
            max_steps: 1000,
            threshold,
            abort_factor: 1.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.initial_step > 0.0
            && self.min_step > 0.0
            && self.target_width >= self.min_step
            && self.initial_step >= self.min_step
            && self.gamma_max > self.gamma_start
            && self.threshold > 0.0
            && self.abort_factor > 1.0
            && self.max_steps > 0;
        if !ok {
            return Err(QcError::InvalidParameter(format!("inconsistent continuation schedule {self:?}")));
        }
        Ok(())
    }
}

/// Result of one equilibrium solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveSummary {
    pub converged: bool,
    pub status: String,
    pub energy: f64,
    pub iterations: usize,
    pub outer_iterations: Option<usize>,
    /// Largest slip measured against the predictor.
    pub slip: f64,
    /// Every accepted step met both strong Wolfe conditions.
    pub wolfe: bool,
    /// Energy never increased within a minimisation.
    pub monotone: bool,
}

/// Solves the equilibrium equations of one method on one domain.
pub struct EquilibriumSolver {
    method: Method,
    model: Model,
    qcf: Option<QcfOperator>,
    clamped: Vec<bool>,
    precond: Preconditioner,
    pub solver: SolverConfig,
    pub gfc: GfcConfig,
}

impl EquilibriumSolver {
    pub fn new(
        method: Method,
        domain: &Domain,
        morse: Morse,
        precond_scale: f64,
        solver: SolverConfig,
        gfc: GfcConfig,
    ) -> Result<Self> {
        solver.validate()?;
        let (kind, qcf) = match method {
            Method::Energy(k) => (k, None),
            Method::Qcf(k) => (k, Some(QcfOperator::new(domain, morse)?)),
        };
        Ok(Self {
            method,
            model: Model::new(kind, domain, morse)?,
            qcf,
            clamped: domain.clamped().to_vec(),
            precond: Preconditioner::assemble(&canonical_triangulation(domain), precond_scale)?,
            solver,
            gfc,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Relaxes `u` in place. The slip against the starting field is tracked
    /// and the solve abandoned once it exceeds `abort_at`.
    pub fn solve(&self, u: &mut [f64], detector: &Detector, abort_at: f64) -> Result<SolveSummary> {
        let start = u.to_vec();
        let mut slip = 0.0f64;
        let mut wolfe = true;
        let mut monotone = true;
        let mut last = f64::INFINITY;
        let mut monitor = |r: &IterationRecord, x: &[f64]| {
            wolfe &= r.sufficient_decrease && r.curvature;
            if r.iteration == 1 {
                last = f64::INFINITY;
            }
            monotone &= r.energy <= last;
            last = r.energy;
            slip = slip.max(detector.measure(&start, x));
            slip <= abort_at
        };
        let summary = match &self.qcf {
            None => {
                let obj = ModelObjective::new(&self.model, &self.clamped);
                let rep = pncg_minimize_with(&obj, u, &self.precond, &self.solver, &mut monitor)?;
                SolveSummary {
                    converged: rep.status == SolveStatus::Converged,
                    status: rep.status.to_string(),
                    energy: rep.energy,
                    iterations: rep.iterations,
                    outer_iterations: None,
                    slip: 0.0,
                    wolfe,
                    monotone,
                }
            }
            Some(qcf) => {
                let rep = gfc_solve_with(
                    &self.model,
                    qcf,
                    &self.clamped,
                    u,
                    &self.precond,
                    &self.solver,
                    &self.gfc,
                    &mut monitor,
                )?;
                SolveSummary {
                    converged: rep.status == GfcStatus::Converged,
                    status: rep.status.to_string(),
                    energy: self.model.energy(u)?,
                    iterations: rep.inner_iterations,
                    outer_iterations: Some(rep.outer_iterations),
                    slip: 0.0,
                    wolfe,
                    monotone,
                }
            }
        };
        Ok(SolveSummary {
            slip: detector.measure(&start, u),
            wolfe,
            monotone,
            ..summary
        })
    }
}

/// One attempted load step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub gamma: f64,
    pub solve: SolveSummary,
    /// Slip detected or the solve failed.
    pub unstable: bool,
    pub err_rel: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ContinuationTrace {
    pub method: Method,
    /// Stable steps in increasing load, followed by the first unstable one.
    pub records: Vec<StepRecord>,
    /// Converged fields, one per entry of `records`.
    pub fields: Vec<Vec<f64>>,
    /// Every solve in the order performed.
    pub attempts: Vec<StepRecord>,
    pub bracket: Option<(f64, f64)>,
}

impl ContinuationTrace {
    pub fn stable(&self) -> impl Iterator<Item = (&StepRecord, &Vec<f64>)> {
        self.records.iter().zip(&self.fields).filter(|(r, _)| !r.unstable)
    }

    /// Stable field at exactly the load `gamma`.
    pub fn field_at(&self, gamma: f64) -> Option<&[f64]> {
        self.stable().find(|(r, _)| r.gamma == gamma).map(|(_, u)| u.as_slice())
    }

    /// Fills `err_rel` wherever `reference` has a stable field at the same load.
    pub fn attach_errors(&mut self, domain: &Domain, reference: &ContinuationTrace) -> Result<()> {
        for (r, u) in self.records.iter_mut().zip(&self.fields) {
            if r.unstable {
                continue;
            }
            if let Some(ua) = reference.field_at(r.gamma) {
                r.err_rel = Some(relative_error(domain, u, ua)?);
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "gamma,energy,solver_iterations,detector,err_rel,outer_gfc_iterations,status,slip"
        )?;
        for r in &self.records {
            writeln!(
                out,
                "{:.16e},{:.16e},{},{},{},{},{},{:.16e}",
                r.gamma,
                r.solve.energy,
                r.solve.iterations,
                u8::from(r.unstable),
                r.err_rel.map(|e| format!("{e:.16e}")).unwrap_or_default(),
                r.solve.outer_iterations.map(|n| n.to_string()).unwrap_or_default(),
                r.solve.status,
                r.solve.slip,
            )?;
        }
        Ok(())
    }
}

/// Quasi-static continuation from `initial` at `cfg.gamma_start`.
///
/// Each step maps the last stable field by the load increment, clamps the
/// boundary and re-solves. A step is unstable when the slip against its
/// predictor exceeds the threshold or the solve fails; the load is then
/// bisected between the last stable and first unstable values.
pub fn run_continuation(
    solver: &EquilibriumSolver,
    domain: &Domain,
    loading: Loading,
    detector: &Detector,
    initial: Vec<f64>,
    cfg: &ContinuationConfig,
    mut progress: impl FnMut(&StepRecord),
) -> Result<ContinuationTrace> {
    cfg.validate()?;
    if initial.len() != 2 * domain.len() {
        return Err(QcError::FieldSize {
            expected: domain.len(),
            found: initial.len() / 2,
        });
    }
    let abort_at = cfg.abort_factor * detector.threshold;
    let mut attempt = |gamma: f64, mut u: Vec<f64>, trace: &mut ContinuationTrace| -> Result<(StepRecord, Vec<f64>)> {
        loading.clamp(domain, &mut u, gamma);
        let solve = solver.solve(&mut u, detector, abort_at)?;
        let unstable = !solve.converged || solve.slip > detector.threshold;
        let rec = StepRecord {
            gamma,
            solve,
            unstable,
            err_rel: None,
        };
        progress(&rec);
        trace.attempts.push(rec.clone());
        Ok((rec, u))
    };

    let mut trace = ContinuationTrace {
        method: solver.method(),
        records: Vec::new(),
        fields: Vec::new(),
        attempts: Vec::new(),
        bracket: None,
    };
    let (rec, u) = attempt(cfg.gamma_start, initial, &mut trace)?;
    if rec.unstable {
        return Err(QcError::InitialStateUnstable);
    }
    let mut stable = (rec.gamma, u);
    trace.records.push(rec);
    trace.fields.push(stable.1.clone());

    let mut unstable: Option<(StepRecord, Vec<f64>)> = None;
    let mut k = 0usize;
    for _ in 1..cfg.max_steps {
        let gamma = match &unstable {
            Some((hi, _)) => {
                if hi.gamma - stable.0 <= cfg.target_width {
                    break;
                }
                let mid = 0.5 * (stable.0 + hi.gamma);
                if mid - stable.0 < cfg.min_step {
                    break;
                }
                mid
            }
            None => {
                let next = cfg.gamma_start + (k + 1) as f64 * cfg.initial_step;
                if next > cfg.gamma_max {
                    break;
                }
                k += 1;
                next
            }
        };
        let mut u = stable.1.clone();
        loading.advance(domain, &mut u, stable.0, gamma);
        let (rec, u) = attempt(gamma, u, &mut trace)?;
        if rec.unstable {
            unstable = Some((rec, u));
        } else {
            stable = (gamma, u);
            trace.records.push(rec);
            trace.fields.push(stable.1.clone());
        }
    }
    if let Some((hi, u)) = unstable {
        trace.bracket = Some((stable.0, hi.gamma));
        trace.records.push(hi);
        trace.fields.push(u);
    }
    Ok(trace)
}

/// Summary row: method, region, `γ⁻`, `γ⁺`, error in percent.
pub fn write_summary<W: Write>(rows: &[(String, String, Option<(f64, f64)>, Option<f64>)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "method,region,gamma_minus,gamma_plus,error_percent")?;
    for (method, region, bracket, err) in rows {
        let (lo, hi) = match bracket {
            Some((a, b)) => (format!("{a:.16e}"), format!("{b:.16e}")),
            None => (String::new(), String::new()),
        };
        let err = err.map(|e| format!("{e:.16e}")).unwrap_or_default();
        writeln!(out, "{method},{region},{lo},{hi},{err}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for s in ["atomistic", "cauchy-born", "qce", "qnl", "qcf-qce", "qcf-qnl"] {
            assert_eq!(s.parse::<Method>().unwrap().to_string(), s);
        }
        assert!("qcf-atomistic".parse::<Method>().is_err());
        assert_eq!(Method::Qcf(ModelKind::Qnl).label(), "QNL-QCF");
        assert_eq!(Method::Energy(ModelKind::Qce).label(), "QCE");
    }

    #[test]
    fn schedules_validate() {
        assert!(ContinuationConfig::dipole(0.0375, 0.47).validate().is_ok());
        assert!(ContinuationConfig::tension(0.47).validate().is_ok());
        let bad = ContinuationConfig {
            target_width: 1e-9,
            ..ContinuationConfig::tension(0.47)
        };
        assert!(bad.validate().is_err());
    }
}
