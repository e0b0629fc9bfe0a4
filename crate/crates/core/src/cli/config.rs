//! Flat `key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. Every experiment has a fixed
//! key set; keys outside it are rejected, keys left out take the defaults
//! printed by [`default_text`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{QcError, Result};
use crate::experiments::{ContinuationConfig, Method};
use crate::lattice::{BoundaryStyle, CbStencil, DomainSpec, Region};
use crate::models::ModelKind;
use crate::potentials::Morse;
use crate::solver::{GfcConfig, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    LatticeConstant,
    PatchTest,
    Dipole,
    Tension,
    Analytic,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::LatticeConstant,
        Experiment::PatchTest,
        Experiment::Dipole,
        Experiment::Tension,
        Experiment::Analytic,
    ];
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::LatticeConstant => "lattice-constant",
            Experiment::PatchTest => "patch-test",
            Experiment::Dipole => "dipole",
            Experiment::Tension => "tension",
            Experiment::Analytic => "analytic",
        })
    }
}

impl FromStr for Experiment {
    type Err = QcError;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| QcError::InvalidParameter(format!("unknown experiment `{s}`")))
    }
}

/// Sites watched for slip.
#[derive(Clone, Debug, PartialEq)]
pub enum DetectorSpec {
    /// Tangential slip between row `ν2 = r` and `r + ½`.
    Rows(i32),
    /// Nearest-neighbour pairs straddling a line in `⟨ν1, ν2⟩`.
    Line { point: [f64; 2], direction: [f64; 2] },
    /// Every free nearest-neighbour bond.
    AllBonds,
}

impl fmt::Display for DetectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectorSpec::Rows(r) => write!(f, "rows {r}"),
            DetectorSpec::Line { point, direction } => write!(
                f,
                "line {} {} {} {}",
                point[0], point[1], direction[0], direction[1]
            ),
            DetectorSpec::AllBonds => f.write_str("all-bonds"),
        }
    }
}

impl FromStr for DetectorSpec {
    type Err = QcError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || QcError::InvalidParameter(format!("cannot read detector `{s}`"));
        let w: Vec<&str> = s.split_whitespace().collect();
        match w.as_slice() {
            ["all-bonds"] => Ok(DetectorSpec::AllBonds),
            ["rows", r] => Ok(DetectorSpec::Rows(r.parse().map_err(|_| bad())?)),
            ["line", rest @ ..] if rest.len() == 4 => {
                let v = floats(rest).ok_or_else(bad)?;
                Ok(DetectorSpec::Line {
                    point: [v[0], v[1]],
                    direction: [v[2], v[3]],
                })
            }
            _ => Err(bad()),
        }
    }
}

/// One continuation run: a method, optionally on the atomistic box
/// [`Region::dipole_box`]`(k)` instead of `domain.region`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub method: Method,
    pub dipole_box: Option<usize>,
}

impl RunSpec {
    pub fn region(&self, fallback: &Region) -> Region {
        match (self.method, self.dipole_box) {
            (Method::Energy(ModelKind::Atomistic), _) => Region::AllAtomistic,
            (_, Some(k)) => Region::dipole_box(k),
            (_, None) => fallback.clone(),
        }
    }

    /// File-name friendly form, `qcf-qnl_k4`.
    pub fn slug(&self) -> String {
        match self.dipole_box {
            Some(k) => format!("{}_k{k}", self.method),
            None => self.method.to_string(),
        }
    }
}

impl fmt::Display for RunSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dipole_box {
            Some(k) => write!(f, "{}({k})", self.method),
            None => write!(f, "{}", self.method),
        }
    }
}

impl FromStr for RunSpec {
    type Err = QcError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (m, k) = match s.strip_suffix(')').and_then(|t| t.split_once('(')) {
            Some((m, k)) => (
                m,
                Some(k.trim().parse().map_err(|_| {
                    QcError::InvalidParameter(format!("bad box size in run `{s}`"))
                })?),
            ),
            None => (s, None),
        };
        Ok(RunSpec {
            method: m.trim().parse()?,
            dipole_box: k,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DipoleSpec {
    pub left_core: [f64; 2],
    pub right_core: [f64; 2],
    pub left_burgers: f64,
    pub right_burgers: f64,
    /// `None`: from the isotropic fit of the Cauchy–Born moduli.
    pub poisson_nu: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticSpec {
    pub beta: f64,
    pub w_start: f64,
    pub w_grid: (f64, f64, usize),
    pub gamma_grid: (f64, f64, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchSpec {
    pub samples: usize,
    pub max_strain: f64,
    pub seed: u64,
}

/// A fully resolved configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub output: PathBuf,
    pub morse: Morse,
    /// `None`: minimise the reference energy.
    pub lattice_constant: Option<f64>,
    pub stencil: CbStencil,
    pub domain: DomainSpec,
    pub method: Method,
    pub runs: Vec<RunSpec>,
    pub solver: SolverConfig,
    pub precond_scale: f64,
    pub gfc: GfcConfig,
    /// `threshold` is in units of the Burgers vector.
    pub continuation: ContinuationConfig,
    pub detector: DetectorSpec,
    pub dipole: DipoleSpec,
    pub analytic: AnalyticSpec,
    pub patch: PatchSpec,
    pub mesh_export: bool,
    entries: Vec<(String, String)>,
}

const KEYS: &[(&str, &str)] = &[
    ("experiment", "lattice-constant | patch-test | dipole | tension | analytic"),
    ("output", "output directory, created if missing"),
    ("potential.alpha", "Morse stiffness"),
    ("potential.lattice_constant", "auto | value"),
    ("cb.b6_stencil", "paired | literal | chain"),
    ("domain.columns", "integer columns K (2K atom columns)"),
    ("domain.rows", "atoms per column"),
    ("domain.boundary", "full | left-right"),
    ("domain.boundary_depth", "clamped integer layers per side"),
    (
        "domain.region",
        "atomistic | continuum | dipole-box k | box a b c d | half-plane px py dx dy | polygon x1 y1 ...",
    ),
    ("method", "atomistic | cauchy-born | qce | qnl | qcf-qce | qcf-qnl"),
    ("runs", "comma separated methods; method(k) uses the dipole box k"),
    ("solver.c1", "sufficient decrease constant"),
    ("solver.c2", "curvature constant"),
    ("solver.tol_u_inf", ""),
    ("solver.tol_u_p", ""),
    ("solver.tol_g_inf", ""),
    ("solver.tol_g_p", ""),
    ("solver.tol_e", ""),
    ("solver.max_iterations", ""),
    ("solver.max_linesearch_steps", ""),
    ("solver.exact_linesearch", "true | false"),
    ("solver.precond_scale", "multiplies the P1 Laplacian"),
    ("gfc.outer_tol", "largest free-site force at convergence"),
    ("gfc.max_outer", ""),
    ("gfc.forcing", "inner tolerance relative to the outer residual"),
    ("gfc.divergence_window", "consecutive residual increases"),
    ("continuation.gamma_start", ""),
    ("continuation.initial_step", ""),
    ("continuation.min_step", ""),
    ("continuation.target_width", ""),
    ("continuation.gamma_max", ""),
    ("continuation.max_steps", ""),
    ("continuation.threshold", "slip threshold in Burgers vectors"),
    ("continuation.abort_factor", "abandon a solve past this multiple of the threshold"),
    ("detector", "rows r | line px py dx dy | all-bonds"),
    ("dipole.left_core", "nu1 nu2"),
    ("dipole.right_core", "nu1 nu2"),
    ("dipole.left_burgers", "in units of a/sqrt(2)"),
    ("dipole.right_burgers", "in units of a/sqrt(2)"),
    ("dipole.poisson_nu", "auto | value"),
    ("analytic.beta", ""),
    ("analytic.w_start", "branch followed to the fold"),
    ("analytic.w_grid", "w0 w1 n"),
    ("analytic.gamma_grid", "g0 g1 n"),
    ("patch.samples", ""),
    ("patch.max_strain", "bound on the Frobenius norm of F - I"),
    ("patch.seed", ""),
    ("mesh.export", "write mesh.txt (true | false)"),
];

const TABLE_1_RUNS: &str = "atomistic, qnl(5), qcf-qce(5), qcf-qnl(5), qnl(4), qcf-qce(4), qcf-qnl(4), \
                            qnl(3), qcf-qce(3), qcf-qnl(3), qce(3)";

fn used_by(exp: Experiment, key: &str) -> bool {
    let section = key.split_once('.').map_or(key, |(s, _)| s);
    match (exp, section) {
        (_, "experiment" | "output") => true,
        (Experiment::Analytic, s) => s == "analytic",
        (Experiment::LatticeConstant, s) => s == "potential",
        (Experiment::PatchTest, s) => matches!(s, "potential" | "cb" | "domain" | "method" | "patch"),
        (Experiment::Dipole | Experiment::Tension, "dipole") => exp == Experiment::Dipole,
        (Experiment::Dipole | Experiment::Tension, s) => matches!(
            s,
            "potential" | "cb" | "domain" | "runs" | "solver" | "gfc" | "continuation" | "detector" | "mesh"
        ),
    }
}

/// Default value of every key for `exp`, including keys it does not use.
fn defaults(exp: Experiment) -> BTreeMap<&'static str, String> {
    let mut m: BTreeMap<&'static str, String> = [
        ("output", format!("out/{exp}")),
        ("potential.alpha", "4.4".into()),
        ("potential.lattice_constant", "auto".into()),
        ("cb.b6_stencil", "paired".into()),
        ("domain.columns", "75".into()),
        ("domain.rows", "60".into()),
        ("domain.boundary", "full".into()),
        ("domain.boundary_depth", "2".into()),
        ("domain.region", "atomistic".into()),
        ("method", "qnl".into()),
        ("runs", TABLE_1_RUNS.into()),
        ("solver.c1", "1e-4".into()),
        ("solver.c2", "0.5".into()),
        ("solver.tol_u_inf", "1e-5".into()),
        ("solver.tol_u_p", "1e-5".into()),
        ("solver.tol_g_inf", "1e-4".into()),
        ("solver.tol_g_p", "1e-4".into()),
        ("solver.tol_e", "1e-4".into()),
        ("solver.max_iterations", "20000".into()),
        ("solver.max_linesearch_steps", "40".into()),
        ("solver.exact_linesearch", "false".into()),
        ("solver.precond_scale", "1".into()),
        ("gfc.outer_tol", "1e-8".into()),
        ("gfc.max_outer", "200".into()),
        ("gfc.forcing", "0.1".into()),
        ("gfc.divergence_window", "3".into()),
        ("continuation.gamma_start", "0.0375".into()),
        ("continuation.initial_step", "1e-4".into()),
        ("continuation.min_step", "1e-7".into()),
        ("continuation.target_width", "5e-6".into()),
        ("continuation.gamma_max", "0.1".into()),
        ("continuation.max_steps", "1000".into()),
        ("continuation.threshold", "0.5".into()),
        ("continuation.abort_factor", "1.5".into()),
        ("detector", "rows 30".into()),
        ("dipole.left_core", format!("32 {}", 30.0 + 1.0 / 6.0)),
        ("dipole.right_core", format!("43 {}", 30.0 + 1.0 / 3.0)),
        ("dipole.left_burgers", "-1".into()),
        ("dipole.right_burgers", "1".into()),
        ("dipole.poisson_nu", "auto".into()),
        ("analytic.beta", "12".into()),
        ("analytic.w_start", "1.5".into()),
        ("analytic.w_grid", "0.5 20 196".into()),
        ("analytic.gamma_grid", "0 4 81".into()),
        ("patch.samples", "10".into()),
        ("patch.max_strain", "0.02".into()),
        ("patch.seed", "1".into()),
        ("mesh.export", "false".into()),
    ]
    .into_iter()
    .collect();
    m.insert("experiment", exp.to_string());
    let mut set = |k: &'static str, v: &str| {
        m.insert(k, v.to_string());
    };
    match exp {
        Experiment::Tension => {
            set("domain.columns", "60");
            set("domain.rows", "15");
            set("domain.boundary", "left-right");
            set("domain.region", &Region::tension_default().to_string());
            set("runs", "atomistic, qnl, qcf-qce, qcf-qnl, qce");
            for k in ["solver.tol_u_inf", "solver.tol_u_p", "solver.tol_g_inf", "solver.tol_g_p", "solver.tol_e"] {
                set(k, "1e-6");
            }
            set("continuation.gamma_start", "0");
            set("continuation.initial_step", "1e-3");
            set("continuation.gamma_max", "0.2");
            set("continuation.threshold", "0.25");
            set("continuation.abort_factor", "2.5");
            set("detector", "all-bonds");
        }
        Experiment::PatchTest => {
            set("domain.columns", "15");
            set("domain.rows", "20");
            set("domain.region", "box 5 10 6 13");
        }
        _ => {}
    }
    m
}

/// Commented default configuration of `exp`, valid input for [`RunConfig::parse`].
pub fn default_text(exp: Experiment) -> String {
    let d = defaults(exp);
    let mut out = String::new();
    for (key, doc) in KEYS {
        if !used_by(exp, key) {
            continue;
        }
        if !doc.is_empty() {
            out.push_str(&format!("# {doc}\n"));
        }
        out.push_str(&format!("{key} = {}\n", d[key]));
    }
    out
}

fn floats(words: &[&str]) -> Option<Vec<f64>> {
    words.iter().map(|w| w.parse().ok()).collect()
}

struct Resolver<'a> {
    path: &'a str,
    values: BTreeMap<&'static str, (String, usize)>,
}

impl Resolver<'_> {
    fn err(&self, key: &str, message: String) -> QcError {
        QcError::Config {
            path: self.path.to_string(),
            line: self.values.get(key).map_or(0, |v| v.1),
            message: format!("`{key}`: {message}"),
        }
    }

    fn raw(&self, key: &str) -> &str {
        &self.values[key].0
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.raw(key).parse().map_err(|e: T::Err| self.err(key, e.to_string()))
    }

    fn auto(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            "auto" => Ok(None),
            _ => self.get(key).map(Some),
        }
    }

    fn list(&self, key: &str, n: usize) -> Result<Vec<f64>> {
        let w: Vec<&str> = self.raw(key).split_whitespace().collect();
        match floats(&w) {
            Some(v) if v.len() == n => Ok(v),
            _ => Err(self.err(key, format!("expected {n} numbers"))),
        }
    }

    fn grid(&self, key: &str) -> Result<(f64, f64, usize)> {
        let w: Vec<&str> = self.raw(key).split_whitespace().collect();
        let parsed = match w.as_slice() {
            [a, b, n] => a.parse().ok().zip(b.parse().ok()).zip(n.parse().ok()),
            _ => None,
        };
        match parsed {
            Some(((a, b), n)) if n >= 2 && b > a => Ok((a, b, n)),
            _ => Err(self.err(key, "expected `start end count` with end > start, count >= 2".into())),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QcError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses configuration text; `path` is only used in messages.
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let err = |line: usize, message: String| QcError::Config {
            path: path.to_string(),
            line,
            message,
        };
        let mut given: Vec<(String, String, usize)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(n + 1, format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if given.iter().any(|g| g.0 == k) {
                return Err(err(n + 1, format!("duplicate key `{k}`")));
            }
            given.push((k.to_string(), v.to_string(), n + 1));
        }
        let (_, exp, exp_line) = given
            .iter()
            .find(|g| g.0 == "experiment")
            .ok_or_else(|| err(0, "missing key `experiment`".into()))?;
        let exp: Experiment = exp.parse().map_err(|e: QcError| err(*exp_line, e.to_string()))?;

        let mut values: BTreeMap<&'static str, (String, usize)> =
            defaults(exp).into_iter().map(|(k, v)| (k, (v, 0))).collect();
        for (k, v, line) in &given {
            let Some(&(key, _)) = KEYS.iter().find(|(key, _)| key == k) else {
                return Err(err(*line, format!("unknown key `{k}`")));
            };
            if !used_by(exp, key) {
                return Err(err(*line, format!("key `{k}` is not used by experiment `{exp}`")));
            }
            values.insert(key, (v.clone(), *line));
        }
        let r = Resolver { path, values };

        let alpha: f64 = r.get("potential.alpha")?;
        let morse = Morse::new(alpha).map_err(|e| r.err("potential.alpha", e.to_string()))?;
        let runs: Vec<RunSpec> = r
            .raw("runs")
            .split(',')
            .map(|s| s.parse().map_err(|e: QcError| r.err("runs", e.to_string())))
            .collect::<Result<_>>()?;
        for (i, a) in runs.iter().enumerate() {
            if runs[..i].iter().any(|b| b.slug() == a.slug()) {
                return Err(r.err("runs", format!("run `{a}` listed twice")));
            }
        }
        let cores = (r.list("dipole.left_core", 2)?, r.list("dipole.right_core", 2)?);
        let continuation = ContinuationConfig {
            gamma_start: r.get("continuation.gamma_start")?,
            initial_step: r.get("continuation.initial_step")?,
            min_step: r.get("continuation.min_step")?,
            target_width: r.get("continuation.target_width")?,
            gamma_max: r.get("continuation.gamma_max")?,
            max_steps: r.get("continuation.max_steps")?,
            threshold: r.get("continuation.threshold")?,
            abort_factor: r.get("continuation.abort_factor")?,
        };
        let solver = SolverConfig {
            c1: r.get("solver.c1")?,
            c2: r.get("solver.c2")?,
            tol_u_inf: r.get("solver.tol_u_inf")?,
            tol_u_p: r.get("solver.tol_u_p")?,
            tol_g_inf: r.get("solver.tol_g_inf")?,
            tol_g_p: r.get("solver.tol_g_p")?,
            tol_e: r.get("solver.tol_e")?,
            max_iterations: r.get("solver.max_iterations")?,
            max_linesearch_steps: r.get("solver.max_linesearch_steps")?,
            exact_linesearch: r.get("solver.exact_linesearch")?,
        };
        let cfg = RunConfig {
            experiment: exp,
            output: PathBuf::from(r.raw("output")),
            morse,
            lattice_constant: r.auto("potential.lattice_constant")?,
            stencil: r.get("cb.b6_stencil")?,
            domain: DomainSpec {
                columns: r.get("domain.columns")?,
                rows: r.get("domain.rows")?,
                boundary: r.get::<BoundaryStyle>("domain.boundary")?,
                boundary_depth: r.get("domain.boundary_depth")?,
                region: r.get("domain.region")?,
            },
            method: r.get("method")?,
            runs,
            solver,
            precond_scale: r.get("solver.precond_scale")?,
            gfc: GfcConfig {
                outer_tol: r.get("gfc.outer_tol")?,
                max_outer: r.get("gfc.max_outer")?,
                forcing: r.get("gfc.forcing")?,
                divergence_window: r.get("gfc.divergence_window")?,
            },
            continuation,
            detector: r.get("detector")?,
            dipole: DipoleSpec {
                left_core: [cores.0[0], cores.0[1]],
                right_core: [cores.1[0], cores.1[1]],
                left_burgers: r.get("dipole.left_burgers")?,
                right_burgers: r.get("dipole.right_burgers")?,
                poisson_nu: r.auto("dipole.poisson_nu")?,
            },
            analytic: AnalyticSpec {
                beta: r.get("analytic.beta")?,
                w_start: r.get("analytic.w_start")?,
                w_grid: r.grid("analytic.w_grid")?,
                gamma_grid: r.grid("analytic.gamma_grid")?,
            },
            patch: PatchSpec {
                samples: r.get("patch.samples")?,
                max_strain: r.get("patch.max_strain")?,
                seed: r.get("patch.seed")?,
            },
            mesh_export: r.get("mesh.export")?,
            entries: KEYS
                .iter()
                .filter(|(k, _)| used_by(exp, k))
                .map(|(k, _)| (k.to_string(), r.values[k].0.clone()))
                .collect(),
        };
        if used_by(exp, "solver.c1") {
            cfg.solver.validate().map_err(|e| r.err("solver.c1", e.to_string()))?;
            cfg.continuation
                .validate()
                .map_err(|e| r.err("continuation.gamma_start", e.to_string()))?;
        }
        Ok(cfg)
    }

    /// Defaults of `exp` with `output` replaced.
    pub fn defaults(exp: Experiment, output: impl Into<PathBuf>) -> Self {
        let mut cfg = Self::parse(&default_text(exp), "<defaults>").expect("defaults parse");
        cfg.output = output.into();
        if let Some(e) = cfg.entries.iter_mut().find(|e| e.0 == "output") {
            e.1 = cfg.output.display().to_string();
        }
        cfg
    }

    /// Every key of the experiment with its resolved value, in documentation order.
    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}
