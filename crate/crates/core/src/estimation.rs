//! Optimal estimation of a neighbour's initial state from observed outputs.
//!
//! An observer `j` estimates `x_i(0)` by estimating the first injected noise
//! `theta_i(0)` and subtracting it from the first broadcast `x_i^+(0)`. The
//! noise estimate maximizes the ε-shaded area of the (possibly conditional)
//! density of `theta_i(0)` over the shifted prior domain `x_i^+(0) - X_i`.
//!
//! What later outputs add depends on the observer's knowledge:
//!
//! * with independent noises they add nothing;
//! * if some input of node `i`'s update is hidden from `j`, the residual
//!   noises cannot be pinned down and again nothing is gained;
//! * if `j` sees every input of `i`'s update, it recovers every later noise
//!   exactly. For zero-sum schedules this reveals `theta_i(0)` once the
//!   horizon is reached; before that, Gaussian schedules admit exact
//!   linear-Gaussian conditioning.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::consensus::Trace;
use crate::dist::{DomainSet, Interval, NoiseDistribution, NoiseKind, ShadedAreaMaximizer};
use crate::error::{arg, state, Result};
use crate::graph::{Graph, NodeId, WeightMatrix};
use crate::schedule::{NoiseSchedule, ScheduleKind};

/// Node `i`'s update `x_i(t) = w_ii x_i^+(t-1) + sum_l w_il x_l^+(t-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateRule {
    pub node: NodeId,
    pub self_weight: f64,
    pub neighbor_weights: Vec<(NodeId, f64)>,
}

impl UpdateRule {
    pub fn new(graph: &Graph, weights: &WeightMatrix, node: NodeId) -> Result<Self> {
        if node >= graph.node_count() {
            return arg(format!("node {node} is not in the graph"));
        }
        Ok(Self {
            node,
            self_weight: weights.get(node, node),
            neighbor_weights: graph
                .neighbors(node)
                .iter()
                .map(|&l| (l, weights.get(node, l)))
                .collect(),
        })
    }

    pub fn from_trace(trace: &Trace, node: NodeId) -> Result<Self> {
        Self::new(&trace.graph, &trace.weights, node)
    }

    /// Predicted state from the previous outputs, or `None` when an input is
    /// not available.
    pub fn predict(&self, output_at: impl Fn(NodeId) -> Option<f64>) -> Option<f64> {
        let mut acc = self.self_weight * output_at(self.node)?;
        for &(l, w) in &self.neighbor_weights {
            acc += w * output_at(l)?;
        }
        Some(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeKind {
    Independent,
    Partial,
    Full,
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeKind::Independent => "independent",
            RegimeKind::Partial => "partial",
            RegimeKind::Full => "full",
        })
    }
}

impl std::str::FromStr for RegimeKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independent" | "independent_noise" => Ok(RegimeKind::Independent),
            "partial" | "partial_neighborhood" => Ok(RegimeKind::Partial),
            "full" | "full_knowledge" => Ok(RegimeKind::Full),
            other => arg(format!("unknown knowledge regime `{other}`")),
        }
    }
}

/// What the observer knows beyond its information set.
#[derive(Debug, Clone, PartialEq)]
pub enum KnowledgeRegime {
    IndependentNoise,
    PartialNeighborhood,
    /// The observer holds `N_i` and row `i` of `W`, and hears every node in `N_i`.
    FullKnowledge(UpdateRule),
}

impl KnowledgeRegime {
    /// Fails unless `N_i ⊆ N_j ∪ {j}`.
    pub fn full_knowledge(
        graph: &Graph,
        weights: &WeightMatrix,
        observer: NodeId,
        target: NodeId,
    ) -> Result<Self> {
        check_pair(graph, observer, target)?;
        let hidden = graph.hidden_neighbors(target, observer);
        if !hidden.is_empty() {
            return state(format!(
                "hidden neighbor: outputs of {hidden:?} (neighbors of target {target}) are not visible to observer {observer}"
            ));
        }
        Ok(KnowledgeRegime::FullKnowledge(UpdateRule::new(graph, weights, target)?))
    }

    pub fn kind(&self) -> RegimeKind {
        match self {
            KnowledgeRegime::IndependentNoise => RegimeKind::Independent,
            KnowledgeRegime::PartialNeighborhood => RegimeKind::Partial,
            KnowledgeRegime::FullKnowledge(_) => RegimeKind::Full,
        }
    }
}

fn check_pair(graph: &Graph, observer: NodeId, target: NodeId) -> Result<()> {
    let n = graph.node_count();
    if observer >= n || target >= n {
        return arg(format!("nodes ({observer}, {target}) outside 0..{n}"));
    }
    if !graph.has_edge(observer, target) {
        return arg(format!("observer {observer} is not a neighbor of target {target}"));
    }
    Ok(())
}

/// Outputs observer `j` holds about target `i` up to iteration `k`: those of
/// `i`, of `j` itself and of their common neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoSet {
    pub target: NodeId,
    pub observer: NodeId,
    pub k: usize,
    pub outputs: BTreeMap<NodeId, Vec<f64>>,
}

impl InfoSet {
    pub fn output(&self, node: NodeId, t: usize) -> Option<f64> {
        self.outputs.get(&node).and_then(|v| v.get(t)).copied()
    }

    pub fn target_initial_output(&self) -> f64 {
        self.outputs[&self.target][0]
    }

    pub fn visible_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.outputs.keys().copied()
    }
}

pub fn extract_info_set(trace: &Trace, observer: NodeId, target: NodeId, k: usize) -> Result<InfoSet> {
    check_pair(&trace.graph, observer, target)?;
    if k > trace.iterations() {
        return arg(format!("horizon {k} exceeds the trace length {}", trace.iterations()));
    }
    let mut visible = trace.graph.common_neighbors(target, observer);
    visible.insert(target);
    visible.insert(observer);
    let outputs = visible
        .into_iter()
        .map(|l| (l, (0..=k).map(|t| trace.output(l, t)).collect()))
        .collect();
    Ok(InfoSet {
        target,
        observer,
        k,
        outputs,
    })
}

/// Recovered noises `theta'_i(1..=k)`; `None` where an input is hidden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSequence {
    pub values: Vec<Option<f64>>,
}

impl ResidualSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `theta'_i(t)` for `t >= 1`.
    pub fn get(&self, t: usize) -> Option<f64> {
        self.values.get(t.checked_sub(1)?).copied().flatten()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn known(&self) -> Option<Vec<f64>> {
        self.values.iter().copied().collect()
    }
}

/// `theta'_i(t) = x_i^+(t) - f_i(x^+(t-1))` for `t = 1..=k`.
///
/// Under full knowledge the regime's own update rule is used; otherwise
/// `rule` is the observer's model of `f_i`, and entries whose inputs are
/// missing from the information set stay unknown.
pub fn residuals(info: &InfoSet, regime: &KnowledgeRegime, rule: &UpdateRule) -> ResidualSequence {
    let rule = match regime {
        KnowledgeRegime::FullKnowledge(r) => r,
        _ => rule,
    };
    let values = (1..=info.k)
        .map(|t| {
            let predicted = rule.predict(|l| info.output(l, t - 1))?;
            Some(info.output(info.target, t)? - predicted)
        })
        .collect();
    ResidualSequence { values }
}

/// Outcome of one estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    /// Estimated first noise.
    pub e_hat: f64,
    /// Estimated initial state `x_i^+(0) - e_hat`.
    pub x_hat: f64,
    pub k: usize,
    pub regime: RegimeKind,
    pub candidate_count: usize,
    /// Shaded-area mass achieved by `e_hat`.
    pub objective: f64,
}

/// Serialized estimation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRecord {
    pub target: NodeId,
    pub observer: NodeId,
    pub k: usize,
    pub regime: RegimeKind,
    pub e_hat: f64,
    pub x_hat: f64,
    pub objective: f64,
}

impl EstimationRecord {
    pub fn new(target: NodeId, observer: NodeId, r: &EstimationResult) -> Self {
        Self {
            target,
            observer,
            k: r.k,
            regime: r.regime,
            e_hat: r.e_hat,
            x_hat: r.x_hat,
            objective: r.objective,
        }
    }
}

/// Estimate from the first output alone.
pub fn estimate_k0(
    dist0: &NoiseDistribution,
    x_plus0: f64,
    domain: &DomainSet,
    eps: f64,
) -> Result<EstimationResult> {
    let maximizer = ShadedAreaMaximizer::new(*dist0, eps)?;
    estimate_with(&maximizer, x_plus0, domain, 0, RegimeKind::Independent)
}

fn estimate_with(
    maximizer: &ShadedAreaMaximizer,
    x_plus0: f64,
    domain: &DomainSet,
    k: usize,
    regime: RegimeKind,
) -> Result<EstimationResult> {
    if domain.is_empty() {
        return arg("domain is empty");
    }
    let region = domain.shift_reflect(x_plus0);
    let best = maximizer.maximize(&region)?;
    Ok(EstimationResult {
        e_hat: best.argmax,
        x_hat: x_plus0 - best.argmax,
        k,
        regime,
        candidate_count: best.candidate_count,
        objective: best.mass,
    })
}

/// Closed-form noise estimate for a symmetric unimodal density and the
/// prior domain `[-a, 0]`.
pub fn piecewise_oracle(x_plus0: f64, a: f64, _eps: f64) -> f64 {
    if x_plus0 >= 0.0 {
        x_plus0
    } else if x_plus0 >= -a {
        0.0
    } else {
        x_plus0 + a
    }
}

/// Reusable estimator for one `(schedule, domain, eps)` triple.
///
/// Shaded-area maximizers depend only on the family, the scale and `eps`,
/// so the prior and the per-horizon Gaussian posteriors are scanned once
/// and then relocated.
#[derive(Debug, Clone)]
pub struct Estimator {
    schedule: NoiseSchedule,
    domain: DomainSet,
    eps: f64,
    prior: Option<ShadedAreaMaximizer>,
    posteriors: BTreeMap<usize, ShadedAreaMaximizer>,
}

impl Estimator {
    pub fn new(schedule: &NoiseSchedule, domain: &DomainSet, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return arg(format!("eps must be positive, got {eps}"));
        }
        if domain.is_empty() {
            return arg("domain is empty");
        }
        let prior = schedule
            .initial_distribution()
            .map(|d| ShadedAreaMaximizer::new(d, eps))
            .transpose()?;
        Ok(Self {
            schedule: *schedule,
            domain: domain.clone(),
            eps,
            prior,
            posteriors: BTreeMap::new(),
        })
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn domain(&self) -> &DomainSet {
        &self.domain
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Estimate from `x_i^+(0)` alone.
    pub fn estimate_initial(&self, x_plus0: f64, k: usize, regime: RegimeKind) -> Result<EstimationResult> {
        match &self.prior {
            Some(m) => estimate_with(m, x_plus0, &self.domain, k, regime),
            None => Ok(self.point_mass(x_plus0, 0.0, k, regime)),
        }
    }

    /// Dispatches on the regime; see the module docs.
    pub fn estimate(
        &mut self,
        info: &InfoSet,
        residuals: &ResidualSequence,
        regime: &KnowledgeRegime,
    ) -> Result<EstimationResult> {
        let x_plus0 = info.target_initial_output();
        let k = info.k;
        let kind = regime.kind();
        let telescoping = self.schedule.kind() == ScheduleKind::TelescopingZeroSum;
        if !matches!(regime, KnowledgeRegime::FullKnowledge(_)) || !telescoping || k == 0 {
            return self.estimate_initial(x_plus0, k, kind);
        }
        let Some(known) = residuals.known() else {
            return state(format!(
                "full knowledge requested but residuals up to k = {k} contain unknown entries"
            ));
        };
        if self.prior.is_none() {
            return Ok(self.point_mass(x_plus0, 0.0, k, kind));
        }
        let horizon = self.schedule.horizon();
        if k >= horizon {
            let theta0 = -known[..horizon].iter().sum::<f64>();
            return Ok(self.point_mass(x_plus0, theta0, k, kind));
        }
        if self.schedule.family() != NoiseKind::Gaussian {
            return state(format!(
                "conditional estimation before the horizon needs Gaussian noise, schedule uses {}",
                self.schedule.family()
            ));
        }
        let (mean, sd) = gaussian_posterior(&self.schedule, &known);
        let eps = self.eps;
        if let Entry::Vacant(slot) = self.posteriors.entry(k) {
            slot.insert(ShadedAreaMaximizer::new(NoiseDistribution::gaussian(0.0, sd)?, eps)?);
        }
        let maximizer = self.posteriors[&k].relocated(mean);
        estimate_with(&maximizer, x_plus0, &self.domain, k, kind)
    }

    /// The posterior of `theta_i(0)` is a point mass at `theta0`.
    fn point_mass(&self, x_plus0: f64, theta0: f64, k: usize, regime: RegimeKind) -> EstimationResult {
        let region = self.domain.shift_reflect(x_plus0);
        let e_hat = nearest_point(&region, theta0);
        EstimationResult {
            e_hat,
            x_hat: x_plus0 - e_hat,
            k,
            regime,
            candidate_count: 1,
            objective: if (e_hat - theta0).abs() <= self.eps { 1.0 } else { 0.0 },
        }
    }
}

fn nearest_point(region: &DomainSet, y: f64) -> f64 {
    match region {
        DomainSet::WholeLine => y,
        DomainSet::Intervals(v) => v
            .iter()
            .map(|iv: &Interval| y.clamp(iv.lo, iv.hi))
            .min_by(|a, b| (a - y).abs().total_cmp(&(b - y).abs()))
            .unwrap_or(y),
    }
}

/// Posterior mean and standard deviation of `theta_i(0) = nu(0)` given
/// `theta'(1..=k)` for a Gaussian telescoping schedule with `k < K`.
///
/// The observations fix `nu(t) - nu(0) = S_t`, the partial sums of the
/// residuals; each contributes a factor `N(nu(0); -S_t, s_t^2)`.
pub fn gaussian_posterior(schedule: &NoiseSchedule, known: &[f64]) -> (f64, f64) {
    let s0 = schedule.draw_std_dev(0);
    let mut precision = 1.0 / (s0 * s0);
    let mut weighted = 0.0;
    let mut partial = 0.0;
    for (idx, &r) in known.iter().enumerate() {
        let t = idx + 1;
        partial += r;
        let st = schedule.draw_std_dev(t);
        precision += 1.0 / (st * st);
        weighted += partial / (st * st);
    }
    (-weighted / precision, precision.recip().sqrt())
}

/// Convenience wrapper over [`Estimator::estimate`].
pub fn estimate_k(
    schedule: &NoiseSchedule,
    info: &InfoSet,
    residuals: &ResidualSequence,
    domain: &DomainSet,
    eps: f64,
    regime: &KnowledgeRegime,
) -> Result<EstimationResult> {
    Estimator::new(schedule, domain, eps)?.estimate(info, residuals, regime)
}

/// Exact recovery of `x_i(0)` by an observer that sees every input of node
/// `i`'s update, using the zero-sum identity `theta_i(0) = -sum theta_i(t)`.
pub fn attack_full_knowledge(trace: &Trace, observer: NodeId, target: NodeId) -> Result<EstimationResult> {
    let regime = KnowledgeRegime::full_knowledge(&trace.graph, &trace.weights, observer, target)?;
    if trace.schedule.kind() != ScheduleKind::TelescopingZeroSum {
        return state("the attack needs a zero-sum (telescoping) noise schedule");
    }
    let horizon = trace.schedule.horizon();
    if trace.iterations() < horizon {
        return state(format!(
            "trace stops at {} before the schedule horizon {horizon}",
            trace.iterations()
        ));
    }
    let info = extract_info_set(trace, observer, target, horizon)?;
    let KnowledgeRegime::FullKnowledge(rule) = &regime else {
        unreachable!()
    };
    let seq = residuals(&info, &regime, rule);
    let Some(known) = seq.known() else {
        return state("residual sequence is incomplete");
    };
    let e_hat = -known.iter().sum::<f64>();
    let x_plus0 = info.target_initial_output();
    Ok(EstimationResult {
        e_hat,
        x_hat: x_plus0 - e_hat,
        k: horizon,
        regime: RegimeKind::Full,
        candidate_count: 1,
        objective: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::run_paca_with_noise;
    use crate::graph::metropolis_weights;

    fn std_normal() -> NoiseDistribution {
        NoiseDistribution::gaussian(0.0, 1.0).unwrap()
    }

    #[test]
    fn whole_line_estimate_is_the_output() {
        for x in [-3.0, 0.0, 1.7, 42.0] {
            let r = estimate_k0(&std_normal(), x, &DomainSet::WholeLine, 0.3).unwrap();
            assert!(r.e_hat.abs() < 1e-9);
            assert!((r.x_hat - x).abs() < 1e-9);
        }
    }

    #[test]
    fn bounded_domain_branches() {
        let d = DomainSet::interval(-2.0, 0.0).unwrap();
        let r = estimate_k0(&std_normal(), 1.3, &d, 0.1).unwrap();
        assert!((r.e_hat - 1.3).abs() < 1e-12);
        assert!(r.x_hat.abs() < 1e-12);
        let r = estimate_k0(&std_normal(), -2.5, &d, 0.1).unwrap();
        assert!((r.e_hat + 0.5).abs() < 1e-12);
        assert!((r.x_hat + 2.0).abs() < 1e-12);
        let r = estimate_k0(&std_normal(), -0.7, &d, 0.1).unwrap();
        assert!(r.e_hat.abs() < 1e-9);
    }

    #[test]
    fn x_hat_is_consistent() {
        let d = DomainSet::interval(-1.0, 4.0).unwrap();
        for x in [-5.0, -0.3, 2.0, 9.0] {
            let r = estimate_k0(&std_normal(), x, &d, 0.2).unwrap();
            assert!((r.x_hat - (x - r.e_hat)).abs() <= 1e-12);
        }
    }

    #[test]
    fn empty_domain_is_an_error() {
        assert!(estimate_k0(&std_normal(), 0.0, &DomainSet::Intervals(vec![]), 0.1).is_err());
    }

    #[test]
    fn uniform_ties_pick_smallest_candidate() {
        let u = NoiseDistribution::uniform(-1.0, 1.0).unwrap();
        let r = estimate_k0(&u, 0.3, &DomainSet::WholeLine, 0.1).unwrap();
        assert!(r.e_hat.abs() < 1e-9);
        let d = DomainSet::interval(-1.0, 0.0).unwrap();
        // shifted domain [0, 1]: every point of [0, 0.9] has mass 0.1
        let r = estimate_k0(&u, 0.0, &d, 0.1).unwrap();
        assert_eq!(r.e_hat, 0.0);
        assert!((r.objective - 0.1).abs() < 1e-12);
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(piecewise_oracle(1.3, 2.0, 0.1), 1.3);
        assert_eq!(piecewise_oracle(-0.7, 2.0, 0.1), 0.0);
        assert!((piecewise_oracle(-2.5, 2.0, 0.1) + 0.5).abs() < 1e-15);
    }

    fn triangle_trace(theta_target: [f64; 4]) -> Trace {
        let g = Graph::triangle();
        let w = metropolis_weights(&g);
        let s = NoiseSchedule::telescoping(NoiseKind::Gaussian, 1.0, 0.5, 3).unwrap();
        let noise: Vec<Vec<f64>> = theta_target
            .iter()
            .enumerate()
            .map(|(k, &t)| vec![t, 0.1 * k as f64 - 0.15, -0.05 * k as f64 + 0.075])
            .collect();
        run_paca_with_noise(&g, &w, &[5.0, 1.0, -2.0], &s, &noise, 6).unwrap()
    }

    #[test]
    fn info_set_on_triangle_holds_all_three_nodes() {
        let t = triangle_trace([1.0, -0.3, -0.5, -0.2]);
        let info = extract_info_set(&t, 1, 0, 0).unwrap();
        assert_eq!(info.visible_nodes().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(info.outputs[&0], vec![6.0]);
    }

    #[test]
    fn info_set_excludes_private_neighbors() {
        let g = Graph::path(4).unwrap();
        let w = metropolis_weights(&g);
        let s = NoiseSchedule::independent(NoiseKind::Gaussian, 1.0, 0.5, 2).unwrap();
        let t = crate::consensus::run_paca(&g, &w, &[0.0; 4], &s, 3, &mut crate::rng::stream(1, 0)).unwrap();
        let info = extract_info_set(&t, 0, 1, 3).unwrap();
        assert_eq!(info.visible_nodes().collect::<Vec<_>>(), vec![0, 1]);
        assert!(extract_info_set(&t, 0, 2, 1).is_err());
        assert!(extract_info_set(&t, 0, 1, 4).is_err());

        let rule = UpdateRule::from_trace(&t, 1).unwrap();
        let seq = residuals(&info, &KnowledgeRegime::PartialNeighborhood, &rule);
        assert_eq!(seq.len(), 3);
        assert!(seq.values.iter().all(Option::is_none));
        let info0 = extract_info_set(&t, 0, 1, 0).unwrap();
        assert!(residuals(&info0, &KnowledgeRegime::PartialNeighborhood, &rule).is_empty());
    }

    #[test]
    fn full_knowledge_residuals_match_noise() {
        let t = triangle_trace([1.0, -0.3, -0.5, -0.2]);
        let regime = KnowledgeRegime::full_knowledge(&t.graph, &t.weights, 1, 0).unwrap();
        let info = extract_info_set(&t, 1, 0, 6).unwrap();
        let rule = UpdateRule::from_trace(&t, 0).unwrap();
        let seq = residuals(&info, &regime, &rule);
        for step in 1..=6 {
            assert!((seq.get(step).unwrap() - t.noise(0, step)).abs() < 1e-12);
        }
    }

    #[test]
    fn telescoped_residuals_reveal_first_noise() {
        let t = triangle_trace([1.0, -0.3, -0.5, -0.2]);
        let regime = KnowledgeRegime::full_knowledge(&t.graph, &t.weights, 1, 0).unwrap();
        let info = extract_info_set(&t, 1, 0, 3).unwrap();
        let rule = UpdateRule::from_trace(&t, 0).unwrap();
        let seq = residuals(&info, &regime, &rule);
        let r = estimate_k(&t.schedule, &info, &seq, &DomainSet::WholeLine, 0.1, &regime).unwrap();
        assert!((r.e_hat - 1.0).abs() < 1e-12);
        let a = attack_full_knowledge(&t, 1, 0).unwrap();
        assert!((a.x_hat - 5.0).abs() < 1e-12);
    }

    #[test]
    fn full_knowledge_with_unknown_residuals_is_a_state_error() {
        let t = triangle_trace([1.0, -0.3, -0.5, -0.2]);
        let regime = KnowledgeRegime::full_knowledge(&t.graph, &t.weights, 1, 0).unwrap();
        let info = extract_info_set(&t, 1, 0, 2).unwrap();
        let seq = ResidualSequence {
            values: vec![Some(-0.3), None],
        };
        let err = estimate_k(&t.schedule, &info, &seq, &DomainSet::WholeLine, 0.1, &regime).unwrap_err();
        assert!(matches!(err, crate::Error::State(_)));
    }

    #[test]
    fn hidden_neighbor_blocks_full_knowledge() {
        let g = Graph::path(4).unwrap();
        let w = metropolis_weights(&g);
        let err = KnowledgeRegime::full_knowledge(&g, &w, 0, 1).unwrap_err();
        assert!(matches!(err, crate::Error::State(_)));
        assert!(err.to_string().contains("hidden neighbor"));
    }

    #[test]
    fn posterior_is_tighter_than_prior() {
        let s = NoiseSchedule::telescoping(NoiseKind::Gaussian, 1.0, 0.5, 5).unwrap();
        let (m, sd) = gaussian_posterior(&s, &[0.8]);
        // precision 1 + 2, mean -(0.8 * 2) / 3
        assert!((sd - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((m + 1.6 / 3.0).abs() < 1e-15);
    }
}
