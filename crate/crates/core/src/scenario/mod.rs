//! Scenario files: a TOML tree naming states, one task, numerical knobs and
//! output options.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mechanics::IdentityCheck;
use crate::output::json_float;
use crate::states::{build_wavefunction, PacketKind, PacketSpec, StateError, WaveModel, Wavefunction, XQuadrature};

mod checks;
mod tasks;

pub use checks::{list_checks, CheckDescriptor, CHECKS};

/// Exit codes of the command-line front end.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const VALIDATION: i32 = 3;
    pub const RUNTIME: i32 = 4;
}

pub const RNG_ALGORITHM: &str = "ChaCha8";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Read { .. } | ScenarioError::Parse(_) => exit::PARSE,
            ScenarioError::Validation { .. } => exit::VALIDATION,
            ScenarioError::Runtime(_) => exit::RUNTIME,
        }
    }

    fn invalid(path: impl Into<String>, message: impl ToString) -> Self {
        ScenarioError::Validation { path: path.into(), message: message.to_string() }
    }

    pub(crate) fn runtime(e: impl ToString) -> Self {
        ScenarioError::Runtime(e.to_string())
    }
}

/// `count` evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|k| if k + 1 == self.count { self.stop } else { self.start + k as f64 * h }).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntangledTerm {
    /// `[re, im]`
    pub coefficient: [f64; 2],
    /// Names of single-particle states, one per particle.
    pub factors: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntangledDef {
    pub terms: Vec<EntangledTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawSpec {
    Guided,
    Boosted { rapidity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    PositionSurrogates { t_f: f64, epsilon: f64, grid: XQuadrature },
    SampledPositions { t_f: f64, epsilon: f64, range: [f64; 2], count: usize },
    MomentumGrid { grid: XQuadrature },
}

fn default_step() -> f64 {
    1e-3
}

fn default_averaging_tol() -> f64 {
    1e-4
}

fn default_slice_tol() -> f64 {
    1e-8
}

fn default_mean_tol() -> f64 {
    1e-3
}

fn default_correlation_tol() -> f64 {
    1e-2
}

fn default_rapidity() -> f64 {
    0.1
}

fn default_max_current() -> f64 {
    1e6
}

fn default_law() -> LawSpec {
    LawSpec::Guided
}

fn yes() -> bool {
    true
}

/// Outcome imposed on the second particle to project the first, with the
/// two slices on which the overlaps are compared.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionSpec {
    #[serde(rename = "final")]
    pub final_state: String,
    pub slices: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    /// Current field sampled on a `(t, x)` lattice.
    CurrentGrid {
        initial: String,
        #[serde(rename = "final", default)]
        final_state: Option<String>,
        t: Range,
        x: Range,
        #[serde(default = "yes")]
        continuity: bool,
    },
    /// Flow lines through one or more start events.
    Trajectory {
        initial: String,
        #[serde(rename = "final", default)]
        final_state: Option<String>,
        starts: Vec<[f64; 2]>,
        lambda_span: f64,
        #[serde(default = "default_step")]
        step: f64,
        #[serde(default = "default_law")]
        law: LawSpec,
        #[serde(default = "default_max_current")]
        max_current: f64,
        #[serde(default)]
        bounds: Option<BoundsSpec>,
    },
    /// Average of conditional currents over a family of outcomes against
    /// the standard current.
    AveragingCheck {
        initial: String,
        family: FamilySpec,
        t: Range,
        x: Range,
        #[serde(default = "default_averaging_tol")]
        tolerance: f64,
        /// Repeat with the outcome grid spacing halved and check that the
        /// error halves.
        #[serde(default)]
        refine: bool,
    },
    /// Conditional density approaching a narrow position outcome.
    MeasurementLimit {
        initial: String,
        x_f: f64,
        t_f: f64,
        epsilon: f64,
        times: Vec<f64>,
        slice: XQuadrature,
        #[serde(default = "default_slice_tol")]
        tolerance: f64,
        #[serde(default = "default_mean_tol")]
        mean_tolerance: f64,
        /// Require a negative density on some slice in `times`.
        #[serde(default = "yes")]
        expect_negative: bool,
    },
    /// Two-particle marginal density against the joint quantum density.
    CorrelationPipeline {
        state: String,
        t_f: f64,
        t_f_prime: f64,
        epsilon: f64,
        grid: XQuadrature,
        #[serde(default)]
        grid_prime: Option<XQuadrature>,
        probes: Range,
        #[serde(default)]
        probes_prime: Option<Range>,
        times: Vec<[f64; 2]>,
        #[serde(default = "default_correlation_tol")]
        tolerance: f64,
        #[serde(default)]
        quadrature_tol: Option<f64>,
        /// The state is a product: check that the marginal factorizes
        /// instead of checking that it does not.
        #[serde(default)]
        product: bool,
        #[serde(default)]
        projection: Option<ProjectionSpec>,
    },
    /// Guidance, conservation and field identities for one boundary pair.
    IdentitySuite {
        initial: String,
        #[serde(rename = "final")]
        final_state: String,
        start: [f64; 2],
        lambda_span: f64,
        #[serde(default = "default_step")]
        step: f64,
        t: Range,
        x: Range,
        #[serde(default = "default_rapidity")]
        perturbation_rapidity: f64,
    },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::CurrentGrid { .. } => "current-grid",
            Task::Trajectory { .. } => "trajectory",
            Task::AveragingCheck { .. } => "averaging-check",
            Task::MeasurementLimit { .. } => "measurement-limit",
            Task::CorrelationPipeline { .. } => "correlation-pipeline",
            Task::IdentitySuite { .. } => "identity-suite",
        }
    }
}

fn default_fd_step() -> f64 {
    1e-2
}

fn default_null_tol() -> f64 {
    crate::spacetime::DEFAULT_NULL_TOL
}

fn default_overlap() -> XQuadrature {
    XQuadrature::new(-12.0, 12.0, 4801)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numeric {
    #[serde(default)]
    pub seed: u64,
    /// Coarse step of the finite-difference convergence checks; the fine
    /// step is half of it.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_null_tol")]
    pub null_tol: f64,
    /// Quadrature for overlaps between broad states.
    #[serde(default = "default_overlap")]
    pub overlap: XQuadrature,
    #[serde(default)]
    pub overlap_time: f64,
}

impl Default for Numeric {
    fn default() -> Self {
        Self {
            seed: 0,
            fd_step: default_fd_step(),
            null_tol: default_null_tol(),
            overlap: default_overlap(),
            overlap_time: 0.0,
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub json: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { dir: default_dir(), csv: true, json: true }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: WaveModel,
    #[serde(default)]
    pub states: BTreeMap<String, PacketKind>,
    #[serde(default)]
    pub entangled: BTreeMap<String, EntangledDef>,
    pub task: Task,
    #[serde(default)]
    pub numeric: Numeric,
    #[serde(default)]
    pub outputs: Outputs,
}

/// A validated scenario with its states built and the config hash taken.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub states: BTreeMap<String, Wavefunction>,
    /// sha256 of the configuration text.
    pub config_hash: String,
    /// Unknown keys dropped in non-strict mode.
    pub ignored_keys: Vec<String>,
}

impl LoadedScenario {
    pub fn state(&self, name: &str) -> &Wavefunction {
        &self.states[name]
    }
}

pub fn load_scenario(path: &Path, strict: bool) -> Result<LoadedScenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read { path: path.to_owned(), source })?;
    parse_scenario(&text, strict)
}

fn unknown_field(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

fn remove_key(value: &mut toml::Value, path: &str, key: &str) -> bool {
    let mut node = value;
    if !path.is_empty() && path != "." {
        for seg in path.split('.') {
            node = match node {
                toml::Value::Table(t) => match t.get_mut(seg) {
                    Some(v) => v,
                    None => return false,
                },
                toml::Value::Array(a) => match seg.parse::<usize>().ok().and_then(|i| a.get_mut(i)) {
                    Some(v) => v,
                    None => return false,
                },
                _ => return false,
            };
        }
    }
    match node {
        toml::Value::Table(t) => t.remove(key).is_some(),
        _ => false,
    }
}

pub fn parse_scenario(text: &str, strict: bool) -> Result<LoadedScenario, ScenarioError> {
    let mut tree: toml::Value = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let mut ignored_keys = Vec::new();
    let scenario: Scenario = loop {
        match serde_path_to_error::deserialize(tree.clone()) {
            Ok(s) => break s,
            Err(err) => {
                let path = err.path().to_string();
                let message = err.inner().to_string();
                if !strict {
                    if let Some(key) = unknown_field(&message) {
                        // the reported path already ends in the offending key
                        let parent = path.strip_suffix(key.as_str()).unwrap_or(&path).trim_end_matches('.');
                        if remove_key(&mut tree, parent, &key) {
                            let full = if parent.is_empty() || parent == "." { key } else { format!("{parent}.{key}") };
                            log::warn!("ignoring unknown key `{full}`");
                            ignored_keys.push(full);
                            continue;
                        }
                    }
                }
                return Err(ScenarioError::invalid(path, message));
            }
        }
    };
    let states = validate(&scenario)?;
    let config_hash = hex::encode(Sha256::digest(text.as_bytes()));
    Ok(LoadedScenario { scenario, states, config_hash, ignored_keys })
}

fn check_positive(path: &str, v: f64) -> Result<(), ScenarioError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::invalid(path, format!("must be positive and finite, got {v}")))
    }
}

fn check_range(path: &str, r: &Range) -> Result<(), ScenarioError> {
    if r.count == 0 || !r.start.is_finite() || !r.stop.is_finite() {
        return Err(ScenarioError::invalid(path, "range needs count >= 1 and finite bounds"));
    }
    Ok(())
}

fn check_quad(path: &str, q: &XQuadrature) -> Result<(), ScenarioError> {
    if q.n < 2 || !(q.b > q.a) || !q.a.is_finite() || !q.b.is_finite() {
        return Err(ScenarioError::invalid(path, "quadrature needs n >= 2 and a < b"));
    }
    Ok(())
}

fn validate(s: &Scenario) -> Result<BTreeMap<String, Wavefunction>, ScenarioError> {
    s.model.validate().map_err(|e| ScenarioError::invalid("model", e))?;
    let mut states = BTreeMap::new();
    for (name, kind) in &s.states {
        let psi = build_wavefunction(&PacketSpec::new(s.model, kind.clone()))
            .map_err(|e: StateError| ScenarioError::invalid(format!("states.{name}"), e))?;
        states.insert(name.clone(), psi);
    }
    for (name, def) in &s.entangled {
        if def.terms.is_empty() {
            return Err(ScenarioError::invalid(format!("entangled.{name}.terms"), "needs at least one term"));
        }
        for (k, t) in def.terms.iter().enumerate() {
            for f in &t.factors {
                if !states.contains_key(f) {
                    return Err(ScenarioError::invalid(
                        format!("entangled.{name}.terms.{k}.factors"),
                        format!("unknown state `{f}`"),
                    ));
                }
            }
        }
    }
    let need = |path: &str, name: &str| -> Result<(), ScenarioError> {
        if states.contains_key(name) {
            Ok(())
        } else {
            Err(ScenarioError::invalid(path, format!("unknown state `{name}`")))
        }
    };
    check_positive("numeric.fd_step", s.numeric.fd_step)?;
    check_quad("numeric.overlap", &s.numeric.overlap)?;
    if !(s.numeric.null_tol >= 0.0) {
        return Err(ScenarioError::invalid("numeric.null_tol", "must be non-negative"));
    }
    match &s.task {
        Task::CurrentGrid { initial, final_state, t, x, .. } => {
            need("task.initial", initial)?;
            if let Some(f) = final_state {
                need("task.final", f)?;
            }
            check_range("task.t", t)?;
            check_range("task.x", x)?;
        }
        Task::Trajectory { initial, final_state, starts, lambda_span, step, law, max_current, .. } => {
            need("task.initial", initial)?;
            if let Some(f) = final_state {
                need("task.final", f)?;
            }
            if starts.is_empty() {
                return Err(ScenarioError::invalid("task.starts", "needs at least one start event"));
            }
            check_positive("task.lambda_span", *lambda_span)?;
            check_positive("task.step", *step)?;
            check_positive("task.max_current", *max_current)?;
            if let LawSpec::Boosted { rapidity } = law {
                if !rapidity.is_finite() {
                    return Err(ScenarioError::invalid("task.law.rapidity", "must be finite"));
                }
            }
        }
        Task::AveragingCheck { initial, family, t, x, tolerance, refine } => {
            if *refine && matches!(family, FamilySpec::SampledPositions { .. }) {
                return Err(ScenarioError::invalid("task.refine", "sampled families have no grid to refine"));
            }
            need("task.initial", initial)?;
            check_range("task.t", t)?;
            check_range("task.x", x)?;
            check_positive("task.tolerance", *tolerance)?;
            match family {
                FamilySpec::PositionSurrogates { epsilon, grid, .. } => {
                    check_positive("task.family.epsilon", *epsilon)?;
                    check_quad("task.family.grid", grid)?;
                }
                FamilySpec::SampledPositions { epsilon, range, count, .. } => {
                    check_positive("task.family.epsilon", *epsilon)?;
                    if *count == 0 || !(range[1] > range[0]) {
                        return Err(ScenarioError::invalid("task.family", "needs count >= 1 and range[0] < range[1]"));
                    }
                }
                FamilySpec::MomentumGrid { grid } => check_quad("task.family.grid", grid)?,
            }
            if matches!(family, FamilySpec::PositionSurrogates { .. } | FamilySpec::SampledPositions { .. })
                && !matches!(s.model, WaveModel::Schrodinger { .. })
            {
                return Err(ScenarioError::invalid("task.family", "position outcomes need the schrodinger model"));
            }
        }
        Task::MeasurementLimit { initial, epsilon, times, slice, tolerance, mean_tolerance, .. } => {
            need("task.initial", initial)?;
            check_positive("task.epsilon", *epsilon)?;
            check_quad("task.slice", slice)?;
            check_positive("task.tolerance", *tolerance)?;
            check_positive("task.mean_tolerance", *mean_tolerance)?;
            if times.is_empty() {
                return Err(ScenarioError::invalid("task.times", "needs at least one time"));
            }
            if !matches!(s.model, WaveModel::Schrodinger { .. }) {
                return Err(ScenarioError::invalid("model", "measurement-limit needs the schrodinger model"));
            }
        }
        Task::CorrelationPipeline {
            state, epsilon, grid, grid_prime, probes, probes_prime, times, tolerance, projection, ..
        } => {
            if let Some(p) = projection {
                need("task.projection.final", &p.final_state)?;
            }
            let def = s
                .entangled
                .get(state)
                .ok_or_else(|| ScenarioError::invalid("task.state", format!("unknown entangled state `{state}`")))?;
            if def.terms.iter().any(|t| t.factors.len() != 2) {
                return Err(ScenarioError::invalid("task.state", "correlation pipeline needs two particles"));
            }
            check_positive("task.epsilon", *epsilon)?;
            check_quad("task.grid", grid)?;
            if let Some(g) = grid_prime {
                check_quad("task.grid_prime", g)?;
            }
            check_range("task.probes", probes)?;
            if let Some(p) = probes_prime {
                check_range("task.probes_prime", p)?;
            }
            check_positive("task.tolerance", *tolerance)?;
            if times.is_empty() {
                return Err(ScenarioError::invalid("task.times", "needs at least one time pair"));
            }
            if !matches!(s.model, WaveModel::Schrodinger { .. }) {
                return Err(ScenarioError::invalid("model", "correlation-pipeline needs the schrodinger model"));
            }
        }
        Task::IdentitySuite { initial, final_state, lambda_span, step, t, x, perturbation_rapidity, .. } => {
            need("task.initial", initial)?;
            need("task.final", final_state)?;
            check_positive("task.lambda_span", *lambda_span)?;
            check_positive("task.step", *step)?;
            check_range("task.t", t)?;
            check_range("task.x", x)?;
            check_positive("task.perturbation_rapidity", *perturbation_rapidity)?;
        }
    }
    Ok(states)
}

/// Outcome of one scenario run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub task: &'static str,
    pub checks: Vec<IdentityCheck>,
    /// File names relative to the output directory, in write order.
    pub artifacts: Vec<String>,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    /// Scalar results worth keeping next to the checks.
    pub summary: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            exit::PASS
        } else {
            exit::CHECK_FAILED
        }
    }

    /// Deterministic JSON: no wall-clock data.
    pub fn to_json(&self) -> serde_json::Value {
        let summary: serde_json::Map<String, serde_json::Value> =
            self.summary.iter().map(|(k, v)| (k.clone(), json_float(*v))).collect();
        serde_json::json!({
            "scenario": self.scenario,
            "task": self.task,
            "passed": self.passed(),
            "checks": self.checks.iter().map(IdentityCheck::to_json).collect::<Vec<_>>(),
            "artifacts": self.artifacts,
            "version": self.version,
            "config_hash": self.config_hash,
            "rng": { "algorithm": RNG_ALGORITHM, "seed": self.seed },
            "summary": summary,
        })
    }
}

/// Where and whether artifacts are written.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// `None` runs the checks without writing files.
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn run(loaded: &LoadedScenario, opts: &RunOptions) -> Result<RunReport, ScenarioError> {
    tasks::run(loaded, opts)
}
