//! Run configurations and manifests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavemap::geometry::TargetDescriptor;
use wavemap::norms::{EnsembleFamily, EstimateId, EstimateParams, RescaleGrid};
use wavemap::nullsolver::SolveOptions;
use wavemap::oracles::{ScalarProfile, WitnessOptions};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Solve,
    Conserve,
    Norms,
    Estimate,
    Oracle,
    Scatter,
    Counterexample,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Solve => "solve",
            Kind::Conserve => "conserve",
            Kind::Norms => "norms",
            Kind::Estimate => "estimate",
            Kind::Oracle => "oracle",
            Kind::Scatter => "scatter",
            Kind::Counterexample => "counterexample",
        }
    }
}

/// Cauchy data built from scalar profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// `f ≡ (1, 0)`, `g = (0, G')` into `S¹ ⊂ R²`.
    Circle { profile: ScalarProfile },
    /// `f = (sin θ, 0, cos θ)`, `g = (0, b, 0)` into `S² ⊂ R³`.
    SphereRotation { angle: ScalarProfile, velocity: ScalarProfile },
    /// `f ≡ point`, `g ≡ 0`.
    Constant { point: Vec<f64> },
    /// One profile per chart component of `f` and of `g`.
    Components { f: Vec<ScalarProfile>, g: Vec<ScalarProfile> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub h: f64,
    /// Forward time extent `T`.
    pub t_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweeps {
    pub h: Vec<f64>,
    pub lambda: Vec<f64>,
    pub n: Vec<usize>,
    pub t: Vec<f64>,
}

/// A declared invariant: `min ≤ metric ≤ max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub criterion: String,
    pub metric: String,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CausalitySpec {
    pub a: f64,
    pub b: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSpec {
    pub iterations: usize,
    /// Increments below this are round-off and excluded from the ratios.
    #[serde(default = "default_picard_floor")]
    pub floor: f64,
}

fn default_picard_floor() -> f64 {
    1e-13
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub options: SolveOptions,
    pub write_field: bool,
    pub causality: Option<CausalitySpec>,
    pub picard: Option<PicardSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConserveSection {
    pub options: SolveOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilePair {
    pub f: ScalarProfile,
    pub g: ScalarProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormsSection {
    /// Decay of the rescaled localized data over `sweeps.lambda`.
    Rellich {
        delta: f64,
        s_tilde: f64,
        profiles: Vec<ProfilePair>,
        #[serde(default)]
        grid: RescaleGrid,
    },
    /// Normalized global norms of the solution of `data` over `sweeps.lambda`,
    /// relative to the first `λ`.
    Rescaled { s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub ids: Vec<EstimateId>,
    /// Indices for every id; each id's defaults when absent.
    #[serde(default)]
    pub params: Option<EstimateParams>,
    #[serde(default = "default_ensemble_size")]
    pub size: usize,
    #[serde(default)]
    pub smoothness: Option<Vec<f64>>,
    #[serde(default)]
    pub max_rank: Option<usize>,
    #[serde(default = "default_family")]
    pub family: EnsembleFamily,
}

fn default_ensemble_size() -> usize {
    1000
}

fn default_family() -> EnsembleFamily {
    EnsembleFamily::Mixed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "oracle", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSection {
    /// Circle solve against the closed form over `sweeps.h`, with the
    /// Pohlmeyer constant and an optional Riccati negative control.
    S1Convergence {
        profile: ScalarProfile,
        #[serde(default)]
        riccati_control: Option<ScalarProfile>,
    },
    /// Upwind Riccati integration on the grid until the guard trips.
    Riccati { profile: ScalarProfile },
    /// Ḣ¹ defect floor over `T` log-spaced in `[t_min, t_max]`.
    Nonscattering {
        profile: ScalarProfile,
        #[serde(default)]
        control: Option<ScalarProfile>,
        t_min: f64,
        t_max: f64,
        count: usize,
        #[serde(default)]
        options: WitnessOptions,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSpec {
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSection {
    /// Support radius `R` of `f'` and `g`.
    pub radius: f64,
    /// Defects are reported for `|t| ≥ defect_from`.
    pub defect_from: f64,
    #[serde(default)]
    pub options: SolveOptions,
    #[serde(default)]
    pub concentration: Option<ConcentrationSpec>,
    /// Window radii of the concentration profile.
    #[serde(default)]
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    pub epsilon: f64,
    /// Also tabulate the `log^{1+ε}` control.
    #[serde(default)]
    pub control: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub sweeps: Sweeps,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conserve: Option<ConserveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norms: Option<NormsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatter: Option<ScatterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleSection>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub h: Option<f64>,
    pub t_max: Option<f64>,
}

fn bad<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

fn positive(name: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        bad(format!("{name} must be positive and finite, found {x}"))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        if o.h.is_some() || o.t_max.is_some() {
            let grid = self.grid.as_mut().ok_or_else(|| CliError::Config("--h and --T need a grid section".into()))?;
            if let Some(h) = o.h {
                grid.h = h;
            }
            if let Some(t) = o.t_max {
                grid.t_max = t;
            }
        }
        Ok(())
    }

    fn sections(&self) -> [(Kind, bool); 7] {
        [
            (Kind::Solve, self.solve.is_some()),
            (Kind::Conserve, self.conserve.is_some()),
            (Kind::Norms, self.norms.is_some()),
            (Kind::Estimate, self.estimate.is_some()),
            (Kind::Oracle, self.oracle.is_some()),
            (Kind::Scatter, self.scatter.is_some()),
            (Kind::Counterexample, self.counterexample.is_some()),
        ]
    }

    fn needs_solution(&self) -> bool {
        match self.kind {
            Kind::Solve | Kind::Conserve | Kind::Scatter => true,
            Kind::Norms => matches!(self.norms, Some(NormsSection::Rescaled { .. })),
            _ => false,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        for (k, present) in self.sections() {
            if present && k != self.kind {
                return bad(format!("section `{}` is not used by kind `{}`", k.name(), self.kind.name()));
            }
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1");
        }
        if let Some(g) = &self.grid {
            positive("grid.h", g.h)?;
            positive("grid.t_max", g.t_max)?;
            if !(g.x_max > g.x_min) {
                return bad("grid needs x_min < x_max");
            }
        }
        for &h in &self.sweeps.h {
            positive("sweeps.h", h)?;
        }
        for &l in &self.sweeps.lambda {
            positive("sweeps.lambda", l)?;
        }
        for c in &self.checks {
            if c.min.is_none() && c.max.is_none() {
                return bad(format!("check on `{}` needs a min or a max", c.metric));
            }
            if c.criterion.is_empty() || c.metric.is_empty() {
                return bad("checks need a criterion and a metric");
            }
        }
        if self.needs_solution() {
            if self.target.is_none() || self.data.is_none() || self.grid.is_none() {
                return bad(format!("kind `{}` needs target, data and grid", self.kind.name()));
            }
        }
        match self.kind {
            Kind::Solve => {
                if let Some(c) = self.solve.as_ref().and_then(|s| s.causality) {
                    if !(c.b > c.a) || c.amplitude == 0.0 {
                        return bad("causality needs a < b and a nonzero amplitude");
                    }
                }
                if let Some(p) = self.solve.as_ref().and_then(|s| s.picard) {
                    if p.iterations < 2 {
                        return bad("picard needs at least 2 iterations");
                    }
                }
            }
            Kind::Conserve => {}
            Kind::Norms => match &self.norms {
                None => return bad("kind `norms` needs a norms section"),
                Some(n) => {
                    if self.sweeps.lambda.is_empty() {
                        return bad("norms needs sweeps.lambda");
                    }
                    if let NormsSection::Rellich { profiles, .. } = n {
                        if profiles.is_empty() {
                            return bad("rellich needs at least one profile pair");
                        }
                    }
                }
            },
            Kind::Estimate => match &self.estimate {
                None => return bad("kind `estimate` needs an estimate section"),
                Some(e) => {
                    if e.ids.is_empty() || e.size == 0 {
                        return bad("estimate needs ids and a positive ensemble size");
                    }
                }
            },
            Kind::Oracle => match &self.oracle {
                None => return bad("kind `oracle` needs an oracle section"),
                Some(OracleSection::S1Convergence { .. }) => {
                    if self.grid.is_none() || self.sweeps.h.len() < 2 {
                        return bad("s1_convergence needs a grid and at least two sweeps.h");
                    }
                }
                Some(OracleSection::Riccati { .. }) => {
                    if self.grid.is_none() {
                        return bad("riccati needs a grid");
                    }
                }
                Some(OracleSection::Nonscattering { t_min, t_max, count, .. }) => {
                    positive("t_min", *t_min)?;
                    if !(t_max >= t_min) || *count == 0 {
                        return bad("nonscattering needs t_min ≤ t_max and a positive count");
                    }
                }
            },
            Kind::Scatter => match &self.scatter {
                None => return bad("kind `scatter` needs a scatter section"),
                Some(s) => {
                    positive("scatter.radius", s.radius)?;
                    if self.sweeps.t.is_empty() {
                        return bad("scatter needs sweeps.t");
                    }
                }
            },
            Kind::Counterexample => match &self.counterexample {
                None => return bad("kind `counterexample` needs a counterexample section"),
                Some(_) => {
                    if self.sweeps.n.len() < 2 {
                        return bad("counterexample needs at least two sweeps.n");
                    }
                }
            },
        }
        Ok(())
    }
}

/// A list of named runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub runs: Vec<RunConfig>,
}

impl Manifest {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        let mut seen = BTreeSet::new();
        for (k, run) in self.runs.iter().enumerate() {
            let name = run.name.as_deref().ok_or_else(|| CliError::Config(format!("run {k} has no name")))?;
            if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
                return bad(format!("run name `{name}` is not a plain directory name"));
            }
            if !seen.insert(name) {
                return bad(format!("duplicate run name `{name}`"));
            }
            run.validate().map_err(|e| CliError::Config(format!("run `{name}`: {e}")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let ok = r#"{"kind": "counterexample", "counterexample": {"epsilon": 0.01}, "sweeps": {"n": [16, 32]}}"#;
        RunConfig::from_json(ok).unwrap().validate().unwrap();
        let typo = r#"{"kind": "counterexample", "counterexample": {"epsilon": 0.01}, "sweep": {"n": [16, 32]}}"#;
        assert!(RunConfig::from_json(typo).is_err());
        let inner = r#"{"kind": "counterexample", "counterexample": {"epsilon": 0.01, "contol": true}, "sweeps": {"n": [16]}}"#;
        assert!(RunConfig::from_json(inner).is_err());
    }

    #[test]
    fn foreign_sections_are_rejected() {
        let c = r#"{"kind": "oracle", "counterexample": {"epsilon": 0.01}}"#;
        assert!(matches!(RunConfig::from_json(c).unwrap().validate(), Err(CliError::Config(_))));
    }
}
