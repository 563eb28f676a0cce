//! Disclosure probability: the chance that the best estimator lands within
//! `eps` of the true initial state.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{DomainSet, NoiseDistribution, NoiseKind, ShadedAreaMaximizer};
use crate::error::{arg, state, Result};
use crate::estimation::{residuals, Estimator, InfoSet, KnowledgeRegime, RegimeKind, UpdateRule};
use crate::graph::{Graph, NodeId, WeightMatrix};
use crate::rng;
use crate::schedule::{NoiseSchedule, ScheduleKind};

/// Smallest Monte Carlo sample count accepted.
pub const MIN_MC_SAMPLES: u64 = 10_000;
/// Default Monte Carlo sample count.
pub const DEFAULT_MC_SAMPLES: u64 = 1_000_000;
/// Samples per independently seeded batch.
pub const MC_BATCH: u64 = 8_192;

const NOISE_SET_SCAN_POINTS: usize = 4096;
const NOISE_SET_TOLERANCE: f64 = 1e-12;

/// Closed range of noise values; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRange {
    pub lo: f64,
    pub hi: f64,
}

impl NoiseRange {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl fmt::Display for NoiseRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = if self.lo == f64::NEG_INFINITY { "-inf".to_string() } else { self.lo.to_string() };
        let hi = if self.hi == f64::INFINITY { "+inf".to_string() } else { self.hi.to_string() };
        write!(f, "[{lo},{hi}]")
    }
}

/// Noise values `theta` for which the estimate from `x0 + theta` is
/// ε-accurate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccurateNoiseSet {
    pub intervals: Vec<NoiseRange>,
}

impl AccurateNoiseSet {
    pub fn contains(&self, theta: f64) -> bool {
        self.intervals.iter().any(|r| r.contains(theta))
    }

    /// Probability mass of `dist` on the set.
    pub fn mass(&self, dist: &NoiseDistribution) -> f64 {
        self.intervals
            .iter()
            .map(|r| dist.mass_between(r.lo, r.hi))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }
}

impl fmt::Display for AccurateNoiseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("{}");
        }
        let parts: Vec<String> = self.intervals.iter().map(|r| r.to_string()).collect();
        f.write_str(&parts.join("U"))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return arg(format!("eps must be positive, got {eps}"));
    }
    Ok(())
}

/// `max_y P(y - eps <= theta <= y + eps)`.
pub fn delta_whole_line(dist0: &NoiseDistribution, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(ShadedAreaMaximizer::new(*dist0, eps)?
        .maximize(&DomainSet::WholeLine)?
        .mass)
}

/// Solves `|theta - e(x0 + theta)| <= eps` for the first-output estimator.
pub fn accurate_noise_set(
    dist0: &NoiseDistribution,
    domain: &DomainSet,
    x0: f64,
    eps: f64,
) -> Result<AccurateNoiseSet> {
    check_eps(eps)?;
    if !domain.contains(x0) {
        return arg(format!("x0 = {x0} is not in the domain {domain}"));
    }
    let maximizer = ShadedAreaMaximizer::new(*dist0, eps)?;
    if domain.is_whole_line() {
        let e = maximizer.maximize(&DomainSet::WholeLine)?.argmax;
        return Ok(clip_to_support(
            dist0,
            vec![NoiseRange {
                lo: e - eps,
                hi: e + eps,
            }],
        ));
    }

    let accurate = |theta: f64| -> bool {
        let region = domain.shift_reflect(x0 + theta);
        maximizer
            .maximize(&region)
            .map(|m| (theta - m.argmax).abs() <= eps)
            .unwrap_or(false)
    };

    // Outside this window the region lies entirely on one side of every
    // stationary point, so the estimate pins to a domain end and accuracy
    // no longer changes.
    let reach = SCAN_REACH_SD * dist0.std_dev() + eps;
    let lo = domain.infimum() - x0 - reach + dist0.location();
    let hi = domain.supremum() - x0 + reach + dist0.location();
    let step = (hi - lo) / (NOISE_SET_SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..NOISE_SET_SCAN_POINTS)
        .map(|k| if k + 1 == NOISE_SET_SCAN_POINTS { hi } else { lo + step * k as f64 })
        .collect();
    let flags: Vec<bool> = grid.iter().map(|&t| accurate(t)).collect();

    let mut ranges = Vec::new();
    let mut open = flags[0].then_some(f64::NEG_INFINITY);
    for k in 1..grid.len() {
        match (flags[k - 1], flags[k]) {
            (false, true) => open = Some(refine(grid[k - 1], grid[k], &accurate)),
            (true, false) => {
                let end = refine(grid[k], grid[k - 1], &accurate);
                ranges.push(NoiseRange {
                    lo: open.take().expect("open range"),
                    hi: end,
                });
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        ranges.push(NoiseRange {
            lo: start,
            hi: f64::INFINITY,
        });
    }
    Ok(clip_to_support(dist0, ranges))
}

const SCAN_REACH_SD: f64 = 9.0;

/// Boundary between `outside` (fails) and `inside` (passes), on the passing side.
fn refine(mut outside: f64, mut inside: f64, pred: &impl Fn(f64) -> bool) -> f64 {
    while (inside - outside).abs() > NOISE_SET_TOLERANCE {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if pred(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

fn clip_to_support(dist: &NoiseDistribution, ranges: Vec<NoiseRange>) -> AccurateNoiseSet {
    let (lo, hi) = dist.support();
    let intervals = ranges
        .into_iter()
        .filter_map(|r| {
            let r = NoiseRange {
                lo: r.lo.max(lo),
                hi: r.hi.min(hi),
            };
            (r.lo <= r.hi).then_some(r)
        })
        .collect();
    AccurateNoiseSet { intervals }
}

/// Mass of the accurate noise set for a fixed true value `x0`.
pub fn delta_general(dist0: &NoiseDistribution, domain: &DomainSet, x0: f64, eps: f64) -> Result<f64> {
    Ok(accurate_noise_set(dist0, domain, x0, eps)?.mass(dist0))
}

/// Worst case of [`delta_general`] over an evenly spaced grid of `x0`
/// values in a bounded domain; returns `(x0, delta)`.
pub fn delta_worst_case(
    dist0: &NoiseDistribution,
    domain: &DomainSet,
    eps: f64,
    points_per_interval: usize,
) -> Result<(f64, f64)> {
    if domain.is_whole_line() {
        return Ok((0.0, delta_whole_line(dist0, eps)?));
    }
    if domain.is_empty() {
        return arg("domain is empty");
    }
    let points = points_per_interval.max(2);
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for iv in domain.intervals() {
        for k in 0..points {
            let x0 = if k + 1 == points {
                iv.hi
            } else {
                iv.lo + iv.width() * k as f64 / (points - 1) as f64
            };
            let d = delta_general(dist0, domain, x0, eps)?;
            if d > best.1 {
                best = (x0, d);
            }
        }
    }
    Ok(best)
}

/// Everything a Monte Carlo disclosure experiment needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: Graph,
    pub weights: WeightMatrix,
    pub schedule: NoiseSchedule,
    pub domain: DomainSet,
    pub x0: Vec<f64>,
    pub target: NodeId,
    pub observer: NodeId,
    pub k: usize,
    pub regime: RegimeKind,
}

impl Scenario {
    fn validate(&self) -> Result<()> {
        let n = self.graph.node_count();
        self.weights.validate(&self.graph)?;
        if self.x0.len() != n {
            return arg(format!("x0 has {} entries but graph has {n} nodes", self.x0.len()));
        }
        if self.target >= n || self.observer >= n {
            return arg("target/observer outside the graph");
        }
        if !self.graph.has_edge(self.target, self.observer) {
            return arg(format!(
                "observer {} is not a neighbor of target {}",
                self.observer, self.target
            ));
        }
        if !self.domain.contains(self.x0[self.target]) {
            return arg(format!(
                "x0[{}] = {} is not in the domain {}",
                self.target, self.x0[self.target], self.domain
            ));
        }
        Ok(())
    }

    fn knowledge(&self) -> Result<KnowledgeRegime> {
        Ok(match self.regime {
            RegimeKind::Independent => KnowledgeRegime::IndependentNoise,
            RegimeKind::Partial => KnowledgeRegime::PartialNeighborhood,
            RegimeKind::Full => {
                KnowledgeRegime::full_knowledge(&self.graph, &self.weights, self.observer, self.target)?
            }
        })
    }

    fn visible_nodes(&self) -> Vec<NodeId> {
        let mut v = self.graph.common_neighbors(self.target, self.observer);
        v.insert(self.target);
        v.insert(self.observer);
        v.into_iter().collect()
    }
}

/// Empirical disclosure probability over `n` simulated runs, with its
/// binomial standard error.
pub fn delta_monte_carlo(scenario: &Scenario, eps: f64, n: u64, seed: u64) -> Result<(f64, f64)> {
    check_eps(eps)?;
    if n < MIN_MC_SAMPLES {
        return arg(format!("Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {n}"));
    }
    scenario.validate()?;
    let regime = scenario.knowledge()?;
    let estimator = Estimator::new(&scenario.schedule, &scenario.domain, eps)?;
    let rule = UpdateRule::new(&scenario.graph, &scenario.weights, scenario.target)?;
    let visible = scenario.visible_nodes();

    let batches = n.div_ceil(MC_BATCH);
    let hits = (0..batches)
        .into_par_iter()
        .map(|b| {
            let size = MC_BATCH.min(n - b * MC_BATCH);
            let mut est = estimator.clone();
            let mut rng = rng::stream(seed, b);
            let mut hits = 0u64;
            for _ in 0..size {
                let noise = scenario.schedule.generate(scenario.graph.node_count(), &mut rng);
                let outputs = simulate_outputs(&scenario.weights, &scenario.x0, &noise, scenario.k);
                let info = InfoSet {
                    target: scenario.target,
                    observer: scenario.observer,
                    k: scenario.k,
                    outputs: visible
                        .iter()
                        .map(|&l| (l, outputs.iter().map(|row| row[l]).collect()))
                        .collect(),
                };
                let seq = residuals(&info, &regime, &rule);
                let r = est.estimate(&info, &seq, &regime)?;
                if (r.x_hat - scenario.x0[scenario.target]).abs() <= eps {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum::<u64>();
    let p = hits as f64 / n as f64;
    Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
}

/// Outputs `x^+(0..=k)` of consensus driven by `noise`.
fn simulate_outputs(weights: &WeightMatrix, x0: &[f64], noise: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let mut outputs = Vec::with_capacity(k + 1);
    let mut state = x0.to_vec();
    for t in 0..=k {
        let out: Vec<f64> = match noise.get(t) {
            Some(theta) => state.iter().zip(theta).map(|(x, n)| x + n).collect(),
            None => state.clone(),
        };
        if t < k {
            state = weights.apply(&out);
        }
        outputs.push(out);
    }
    outputs
}

/// Upper bound on the disclosure probability after `k` iterations.
pub fn delta_upper_bound_k(scenario: &Scenario, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    scenario.validate()?;
    let Some(dist0) = scenario.schedule.initial_distribution() else {
        return Ok(1.0);
    };
    let delta0 = || delta_general(&dist0, &scenario.domain, scenario.x0[scenario.target], eps);
    let telescoping = scenario.schedule.kind() == ScheduleKind::TelescopingZeroSum;
    match scenario.regime {
        RegimeKind::Independent => delta0(),
        RegimeKind::Partial => {
            if scenario.k > 0 && scenario.graph.hidden_neighbors(scenario.target, scenario.observer).is_empty() {
                return state(format!(
                    "no hidden neighbor: observer {} sees every input of target {}",
                    scenario.observer, scenario.target
                ));
            }
            delta0()
        }
        RegimeKind::Full => {
            scenario.knowledge()?;
            if !telescoping || scenario.k == 0 {
                delta0()
            } else if scenario.k >= scenario.schedule.horizon() {
                Ok(1.0)
            } else {
                state("no closed-form bound for full knowledge before the schedule horizon")
            }
        }
    }
}

/// One family in a fixed-variance comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyComparison {
    pub family: NoiseKind,
    pub scale: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub minimizer: bool,
}

/// Disclosure probability of each family calibrated to standard deviation
/// `sigma`; the smallest value is flagged.
pub fn compare_noise_families(sigma: f64, eps: f64, families: &[NoiseKind]) -> Result<Vec<FamilyComparison>> {
    check_eps(eps)?;
    if families.is_empty() {
        return arg("families list is empty");
    }
    let mut rows = families
        .iter()
        .map(|&family| {
            let dist = NoiseDistribution::from_std_dev(family, 0.0, sigma)?;
            Ok(FamilyComparison {
                family,
                scale: dist.scale(),
                sigma,
                epsilon: eps,
                delta: delta_whole_line(&dist, eps)?,
                minimizer: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.delta.total_cmp(&b.1.delta))
        .map(|(i, _)| i)
        .expect("non-empty");
    rows[best].minimizer = true;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal() -> NoiseDistribution {
        NoiseDistribution::gaussian(0.0, 1.0).unwrap()
    }

    #[test]
    fn whole_line_examples() {
        assert!((delta_whole_line(&std_normal(), 0.5).unwrap() - 0.382925).abs() < 1e-6);
        let u = NoiseDistribution::uniform(-1.0, 1.0).unwrap();
        assert!((delta_whole_line(&u, 0.1).unwrap() - 0.1).abs() < 1e-15);
        let l = NoiseDistribution::laplace(0.0, 1.0).unwrap();
        assert!((delta_whole_line(&l, 1.0).unwrap() - 0.632121).abs() < 1e-6);
    }

    #[test]
    fn accurate_set_examples() {
        let s = accurate_noise_set(&std_normal(), &DomainSet::WholeLine, 3.0, 0.1).unwrap();
        assert_eq!(s.intervals.len(), 1);
        assert!((s.intervals[0].lo + 0.1).abs() < 1e-9 && (s.intervals[0].hi - 0.1).abs() < 1e-9);

        let d = DomainSet::interval(-2.0, 0.0).unwrap();
        let s = accurate_noise_set(&std_normal(), &d, -1.0, 0.1).unwrap();
        assert_eq!(s.intervals.len(), 1, "{s}");
        assert!((s.intervals[0].lo + 0.1).abs() < 1e-9 && (s.intervals[0].hi - 0.1).abs() < 1e-9);

        let s = accurate_noise_set(&std_normal(), &d, 0.0, 0.1).unwrap();
        assert_eq!(s.intervals.len(), 1, "{s}");
        assert!((s.intervals[0].lo + 0.1).abs() < 1e-9);
        assert_eq!(s.intervals[0].hi, f64::INFINITY);

        assert!(accurate_noise_set(&std_normal(), &d, 1.0, 0.1).is_err());
    }

    #[test]
    fn general_examples() {
        let d = DomainSet::interval(-2.0, 0.0).unwrap();
        assert!((delta_general(&std_normal(), &DomainSet::WholeLine, 0.0, 0.1).unwrap() - 0.079656).abs() < 1e-6);
        assert!((delta_general(&std_normal(), &d, -1.0, 0.1).unwrap() - 0.079656).abs() < 1e-6);
        assert!((delta_general(&std_normal(), &d, 0.0, 0.1).unwrap() - 0.539828).abs() < 1e-6);
    }

    #[test]
    fn worst_case_hits_the_boundary() {
        let d = DomainSet::interval(-2.0, 0.0).unwrap();
        let (x0, delta) = delta_worst_case(&std_normal(), &d, 0.1, 9).unwrap();
        assert!(x0 == 0.0 || x0 == -2.0);
        assert!((delta - 0.539828).abs() < 1e-6);
    }

    #[test]
    fn family_comparison_values() {
        let rows = compare_noise_families(1.0, 0.1, &NoiseKind::ALL).unwrap();
        let by = |k| rows.iter().find(|r| r.family == k).unwrap();
        assert!((by(NoiseKind::Uniform).delta - 0.057735).abs() < 1e-6);
        assert!((by(NoiseKind::Gaussian).delta - 0.079656).abs() < 1e-6);
        let laplace = 1.0 - (-0.1 * 2f64.sqrt()).exp();
        assert!((by(NoiseKind::Laplace).delta - laplace).abs() < 1e-12);
        assert!((laplace - 0.131877).abs() < 1e-6);
        assert!(by(NoiseKind::Uniform).minimizer);
        assert_eq!(rows.iter().filter(|r| r.minimizer).count(), 1);
        assert!(compare_noise_families(1.0, 0.1, &[]).is_err());
    }

    #[test]
    fn monte_carlo_rejects_small_n() {
        let g = Graph::triangle();
        let s = Scenario {
            weights: crate::graph::metropolis_weights(&g),
            graph: g,
            schedule: NoiseSchedule::independent(NoiseKind::Gaussian, 1.0, 0.5, 0).unwrap(),
            domain: DomainSet::WholeLine,
            x0: vec![0.0; 3],
            target: 0,
            observer: 1,
            k: 0,
            regime: RegimeKind::Independent,
        };
        assert!(delta_monte_carlo(&s, 0.5, 100, 0).is_err());
    }
}
