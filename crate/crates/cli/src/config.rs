//! Experiment configuration: TOML with dotted keys, unknown keys rejected.
//!
//! ```toml
//! seed = 7
//! graph.kind = "random"        # random | triangle | path | cycle | star | complete | edges
//! graph.n = 20
//! graph.p = 0.2
//! schedule.kind = "telescoping" # or "independent"
//! schedule.sigma0 = 1.0
//! schedule.rho = 0.5
//! schedule.horizon = 20
//! noise.family = "gaussian"
//! domain.intervals = [[-2.0, 0.0]]
//! privacy.eps = [0.1, 0.5]
//! ```

use std::path::PathBuf;

use paca_core::{
    metropolis_weights, random_connected_graph, rng, DomainSet, Graph, Interval, NoiseKind,
    NoiseSchedule, RegimeKind, ScheduleKind, WeightMatrix,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub privacy: PrivacyConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub estimate: EstimateConfig,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default)]
    pub compare: CompareConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub kind: String,
    pub n: usize,
    pub p: f64,
    pub edges: Vec<(usize, usize)>,
    pub weights: String,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            kind: "triangle".into(),
            n: 3,
            p: 0.2,
            edges: Vec::new(),
            weights: "metropolis".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub kind: String,
    pub sigma0: f64,
    pub rho: f64,
    pub horizon: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            kind: "independent".into(),
            sigma0: 1.0,
            rho: 0.5,
            horizon: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub family: String,
    /// Families for `sweep`; defaults to `[family]`.
    pub families: Vec<String>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            family: "gaussian".into(),
            families: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    /// Closed intervals; empty means the whole real line.
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrivacyConfig {
    pub eps: Vec<f64>,
    pub x0: Vec<f64>,
    pub k: Vec<usize>,
    pub target: usize,
    pub observer: usize,
    pub regime: String,
    pub mc_n: u64,
    /// Grid points per interval for the worst-case `x0` row; 0 disables it.
    pub worst_case_grid: usize,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.1],
            x0: Vec::new(),
            k: vec![0],
            target: 0,
            observer: 1,
            regime: "independent".into(),
            mc_n: 0,
            worst_case_grid: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub iterations: usize,
    /// Explicit initial states; drawn uniformly from `x0_range` when empty.
    pub x0: Vec<f64>,
    pub x0_range: (f64, f64),
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            x0: Vec::new(),
            x0_range: (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    pub trace: Option<PathBuf>,
    pub target: usize,
    pub observer: usize,
    pub k: Vec<usize>,
    pub eps: f64,
    pub regime: String,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            trace: None,
            target: 0,
            observer: 1,
            k: vec![0],
            eps: 0.1,
            regime: "independent".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    /// Trace to attack; simulated from the config when absent.
    pub trace: Option<PathBuf>,
    pub observer: usize,
    /// Targets; every neighbour of the observer when empty.
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub sigma: f64,
    pub eps: Vec<f64>,
    pub families: Vec<String>,
    pub mc_n: u64,
    pub plot: Option<PathBuf>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            eps: vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0],
            families: vec!["uniform".into(), "gaussian".into(), "laplace".into()],
            mc_n: 0,
            plot: None,
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::config(format!("{key}: {msg}"))
}

pub fn parse_family(key: &str, s: &str) -> Result<NoiseKind, CliError> {
    s.parse().map_err(|_| bad(key, format!("unknown noise family `{s}`")))
}

pub fn parse_regime(key: &str, s: &str) -> Result<RegimeKind, CliError> {
    s.parse().map_err(|_| bad(key, format!("unknown regime `{s}`")))
}

fn check_eps(key: &str, eps: &[f64]) -> Result<(), CliError> {
    if eps.is_empty() {
        return Err(bad(key, "list is empty"));
    }
    match eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        Some(e) => Err(bad(key, format!("must be positive, got {e}"))),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("config: {}", e.message())))
    }

    /// Every section's numeric ranges, checked before anything runs.
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.graph;
        if g.n < 3 {
            return Err(bad("graph.n", format!("needs at least 3 nodes, got {}", g.n)));
        }
        if !(0.0..=1.0).contains(&g.p) {
            return Err(bad("graph.p", format!("must lie in [0, 1], got {}", g.p)));
        }
        if g.weights != "metropolis" {
            return Err(bad("graph.weights", format!("unknown weight recipe `{}`", g.weights)));
        }
        let s = &self.schedule;
        if !(s.rho > 0.0 && s.rho < 1.0) {
            return Err(bad("schedule.rho", format!("must lie in (0, 1), got {}", s.rho)));
        }
        if !(s.sigma0 >= 0.0 && s.sigma0.is_finite()) {
            return Err(bad("schedule.sigma0", format!("must be non-negative, got {}", s.sigma0)));
        }
        self.schedule_kind()?;
        parse_family("noise.family", &self.noise.family)?;
        for f in &self.noise.families {
            parse_family("noise.families", f)?;
        }
        self.domain_set()?;
        check_eps("privacy.eps", &self.privacy.eps)?;
        parse_regime("privacy.regime", &self.privacy.regime)?;
        parse_regime("estimate.regime", &self.estimate.regime)?;
        check_eps("estimate.eps", &[self.estimate.eps])?;
        check_eps("compare.eps", &self.compare.eps)?;
        if !(self.compare.sigma > 0.0 && self.compare.sigma.is_finite()) {
            return Err(bad("compare.sigma", format!("must be positive, got {}", self.compare.sigma)));
        }
        if self.compare.families.is_empty() {
            return Err(bad("compare.families", "list is empty"));
        }
        for f in &self.compare.families {
            parse_family("compare.families", f)?;
        }
        let (lo, hi) = self.simulate.x0_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(bad("simulate.x0_range", format!("invalid range [{lo}, {hi}]")));
        }
        Ok(())
    }

    pub fn schedule_kind(&self) -> Result<ScheduleKind, CliError> {
        match self.schedule.kind.as_str() {
            "independent" => Ok(ScheduleKind::IndependentDecaying),
            "telescoping" => Ok(ScheduleKind::TelescopingZeroSum),
            other => Err(bad("schedule.kind", format!("unknown schedule `{other}`"))),
        }
    }

    pub fn schedule_for(&self, family: NoiseKind) -> Result<NoiseSchedule, CliError> {
        let s = &self.schedule;
        NoiseSchedule::new(self.schedule_kind()?, family, s.sigma0, s.rho, s.horizon)
            .map_err(|e| bad("schedule", e))
    }

    pub fn noise_schedule(&self) -> Result<NoiseSchedule, CliError> {
        self.schedule_for(parse_family("noise.family", &self.noise.family)?)
    }

    pub fn domain_set(&self) -> Result<DomainSet, CliError> {
        if self.domain.intervals.is_empty() {
            return Ok(DomainSet::WholeLine);
        }
        let ivs = self
            .domain
            .intervals
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad("domain.intervals", e))?;
        Ok(DomainSet::from_intervals(ivs))
    }

    /// Builds the graph; random graphs draw from stream 0 of `seed`.
    pub fn build_graph(&self, seed: u64) -> Result<(Graph, WeightMatrix), CliError> {
        let g = &self.graph;
        let graph = match g.kind.as_str() {
            "random" => random_connected_graph(g.n, g.p, &mut rng::stream(seed, 0)),
            "triangle" => Ok(Graph::triangle()),
            "path" => Graph::path(g.n),
            "cycle" => Graph::cycle(g.n),
            "star" => Graph::star(g.n),
            "complete" => Graph::complete(g.n),
            "edges" => Graph::new(g.n, g.edges.iter().copied()),
            other => return Err(bad("graph.kind", format!("unknown graph kind `{other}`"))),
        }
        .map_err(|e| bad("graph", e))?;
        let weights = metropolis_weights(&graph);
        Ok((graph, weights))
    }
}
