//! Scalar noise distributions, prior domains and the ε-shaded-area kernel.
//!
//! The estimator never integrates densities numerically: all supported
//! families have closed-form cumulatives, so the ε-shaded area at `y` is just
//! `F(y + ε) - F(y - ε)`. Its stationary points solve `f(y + ε) = f(y - ε)`
//! and are located by a sign-change scan followed by bisection.

use std::fmt;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{arg, Result};

/// Grid size of the stationary-point scan.
pub const SCAN_POINTS: usize = 2048;
/// Half-width of the scan window, in standard deviations around the location.
pub const SCAN_WINDOW_SD: f64 = 8.0;
/// Bisection stops once the bracket is narrower than this.
pub const ROOT_TOLERANCE: f64 = 1e-12;
/// Two shaded areas whose relative difference is below this are treated as a tie.
pub const TIE_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Laplace,
    Uniform,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::Uniform, NoiseKind::Gaussian, NoiseKind::Laplace];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Laplace => "laplace",
            NoiseKind::Uniform => "uniform",
        }
    }

    /// Native scale parameter that yields the given standard deviation.
    pub fn scale_for_std_dev(self, sd: f64) -> f64 {
        match self {
            NoiseKind::Gaussian => sd,
            NoiseKind::Laplace => sd / std::f64::consts::SQRT_2,
            NoiseKind::Uniform => sd * 3f64.sqrt(),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseKind::Gaussian),
            "laplace" => Ok(NoiseKind::Laplace),
            "uniform" => Ok(NoiseKind::Uniform),
            other => arg(format!("unknown noise family `{other}`")),
        }
    }
}

/// A location-scale noise density.
///
/// `scale` is the family's native parameter: the standard deviation for
/// Gaussian noise, the diversity `b` for Laplace noise and the half-width
/// `M / 2` for uniform noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDistribution {
    kind: NoiseKind,
    location: f64,
    scale: f64,
}

impl NoiseDistribution {
    pub fn new(kind: NoiseKind, location: f64, scale: f64) -> Result<Self> {
        if !location.is_finite() {
            return arg(format!("location must be finite, got {location}"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return arg(format!("scale must be positive and finite, got {scale}"));
        }
        Ok(Self {
            kind,
            location,
            scale,
        })
    }

    pub fn gaussian(mean: f64, std_dev: f64) -> Result<Self> {
        Self::new(NoiseKind::Gaussian, mean, std_dev)
    }

    pub fn laplace(location: f64, diversity: f64) -> Result<Self> {
        Self::new(NoiseKind::Laplace, location, diversity)
    }

    /// Uniform density on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return arg(format!("uniform support needs lo < hi, got [{lo}, {hi}]"));
        }
        Self::new(NoiseKind::Uniform, 0.5 * (lo + hi), 0.5 * (hi - lo))
    }

    /// Member of `kind` with the requested standard deviation.
    pub fn from_std_dev(kind: NoiseKind, location: f64, std_dev: f64) -> Result<Self> {
        Self::new(kind, location, kind.scale_for_std_dev(std_dev))
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn variance(&self) -> f64 {
        let s = self.scale;
        match self.kind {
            NoiseKind::Gaussian => s * s,
            NoiseKind::Laplace => 2.0 * s * s,
            // (2s)^2 / 12
            NoiseKind::Uniform => s * s / 3.0,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Closed support `[lo, hi]`, with infinite ends for unbounded families.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            NoiseKind::Uniform => (self.location - self.scale, self.location + self.scale),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn has_full_support(&self) -> bool {
        self.kind != NoiseKind::Uniform
    }

    /// Same family and scale, centred elsewhere.
    pub fn relocated(&self, location: f64) -> Self {
        Self { location, ..*self }
    }

    pub fn density_at(&self, z: f64) -> f64 {
        let u = z - self.location;
        let s = self.scale;
        match self.kind {
            NoiseKind::Gaussian => {
                let t = u / s;
                (-0.5 * t * t).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
            }
            NoiseKind::Laplace => (-u.abs() / s).exp() / (2.0 * s),
            NoiseKind::Uniform => {
                if u.abs() <= s {
                    0.5 / s
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cumulative_at(&self, z: f64) -> f64 {
        if z == f64::INFINITY {
            return 1.0;
        }
        if z == f64::NEG_INFINITY {
            return 0.0;
        }
        let u = z - self.location;
        let s = self.scale;
        match self.kind {
            NoiseKind::Gaussian => 0.5 * erfc(-u / (s * std::f64::consts::SQRT_2)),
            NoiseKind::Laplace => {
                if u < 0.0 {
                    0.5 * (u / s).exp()
                } else {
                    1.0 - 0.5 * (-u / s).exp()
                }
            }
            NoiseKind::Uniform => ((u + s) / (2.0 * s)).clamp(0.0, 1.0),
        }
    }

    /// Probability mass of `[lo, hi]`; either end may be infinite.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let m = if lo >= self.location {
            self.survival_at(lo) - self.survival_at(hi)
        } else {
            self.cumulative_at(hi) - self.cumulative_at(lo)
        };
        m.clamp(0.0, 1.0)
    }

    /// `P(X > z)`, accurate in the upper tail.
    pub fn survival_at(&self, z: f64) -> f64 {
        let mirrored = NoiseDistribution {
            location: -self.location,
            ..*self
        };
        mirrored.cumulative_at(-z)
    }

    /// ε-shaded area at `y`: the mass of `[y - eps, y + eps]`.
    pub fn shaded_area(&self, y: f64, eps: f64) -> Result<f64> {
        if eps.is_nan() || eps < 0.0 {
            return arg(format!("eps must be non-negative, got {eps}"));
        }
        Ok(self.shaded_area_unchecked(y, eps))
    }

    pub(crate) fn shaded_area_unchecked(&self, y: f64, eps: f64) -> f64 {
        if eps == 0.0 {
            return 0.0;
        }
        self.mass_between(y - eps, y + eps)
    }

    /// Derivative of the shaded area with respect to `y`.
    pub fn shaded_area_slope(&self, y: f64, eps: f64) -> f64 {
        self.density_at(y + eps) - self.density_at(y - eps)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => {
                let z: f64 = rng.sample(StandardNormal);
                self.location + self.scale * z
            }
            NoiseKind::Laplace => {
                let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
                self.location - self.scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            NoiseKind::Uniform => {
                let u: f64 = rng.random();
                self.location + self.scale * (2.0 * u - 1.0)
            }
        }
    }

    /// `n` independent draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

impl fmt::Display for NoiseDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.kind, self.location, self.scale)
    }
}

/// Closed interval `[lo, hi]` with finite ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return arg(format!("interval ends must be finite, got [{lo}, {hi}]"));
        }
        if lo > hi {
            return arg(format!("interval needs lo <= hi, got [{lo}, {hi}]"));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Prior support of an initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DomainSet {
    WholeLine,
    /// Sorted, pairwise disjoint closed intervals.
    Intervals(Vec<Interval>),
}

impl DomainSet {
    /// Builds an interval union, merging overlapping pieces.
    pub fn from_intervals(mut intervals: Vec<Interval>) -> Self {
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        DomainSet::Intervals(merged)
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self::from_intervals(vec![Interval::new(lo, hi)?]))
    }

    pub fn is_whole_line(&self) -> bool {
        matches!(self, DomainSet::WholeLine)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, DomainSet::Intervals(v) if v.is_empty())
    }

    pub fn intervals(&self) -> &[Interval] {
        match self {
            DomainSet::WholeLine => &[],
            DomainSet::Intervals(v) => v,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            DomainSet::WholeLine => x.is_finite(),
            DomainSet::Intervals(v) => v.iter().any(|iv| iv.contains(x)),
        }
    }

    pub fn infimum(&self) -> f64 {
        match self {
            DomainSet::WholeLine => f64::NEG_INFINITY,
            DomainSet::Intervals(v) => v.first().map_or(f64::INFINITY, |iv| iv.lo),
        }
    }

    pub fn supremum(&self) -> f64 {
        match self {
            DomainSet::WholeLine => f64::INFINITY,
            DomainSet::Intervals(v) => v.last().map_or(f64::NEG_INFINITY, |iv| iv.hi),
        }
    }

    /// Boundary points, ascending.
    pub fn boundary_points(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for iv in self.intervals() {
            pts.push(iv.lo);
            if iv.hi != iv.lo {
                pts.push(iv.hi);
            }
        }
        pts
    }

    /// The set `{x_plus - v : v in self}`.
    pub fn shift_reflect(&self, x_plus: f64) -> DomainSet {
        match self {
            DomainSet::WholeLine => DomainSet::WholeLine,
            DomainSet::Intervals(v) => DomainSet::Intervals(
                v.iter()
                    .rev()
                    .map(|iv| Interval {
                        lo: x_plus - iv.hi,
                        hi: x_plus - iv.lo,
                    })
                    .collect(),
            ),
        }
    }

    /// Compact text form: `R` or `[a,b]U[c,d]`.
    pub fn descriptor(&self) -> String {
        match self {
            DomainSet::WholeLine => "R".to_string(),
            DomainSet::Intervals(v) if v.is_empty() => "{}".to_string(),
            DomainSet::Intervals(v) => v
                .iter()
                .map(|iv| iv.to_string())
                .collect::<Vec<_>>()
                .join("U"),
        }
    }
}

impl fmt::Display for DomainSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

/// Stationary points of the shaded area plus the flat stretches where its
/// derivative vanishes identically.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub points: Vec<f64>,
    pub intervals: Vec<Interval>,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.intervals.is_empty()
    }

    fn shifted(&self, delta: f64) -> CandidateSet {
        CandidateSet {
            points: self.points.iter().map(|p| p + delta).collect(),
            intervals: self
                .intervals
                .iter()
                .map(|iv| Interval {
                    lo: iv.lo + delta,
                    hi: iv.hi + delta,
                })
                .collect(),
        }
    }
}

/// Zeros of `f(y + eps) - f(y - eps)` inside `within`.
///
/// The scan covers `within` intersected with a window of
/// `SCAN_WINDOW_SD` standard deviations (plus `eps`) around the location.
/// Flat stretches carrying zero probability mass are dropped.
pub fn stationary_set(dist: &NoiseDistribution, eps: f64, within: &DomainSet) -> Result<CandidateSet> {
    if !(eps > 0.0 && eps.is_finite()) {
        return arg(format!("eps must be positive, got {eps}"));
    }
    let half = SCAN_WINDOW_SD * dist.std_dev() + eps;
    let window = Interval {
        lo: dist.location() - half,
        hi: dist.location() + half,
    };
    let mut out = CandidateSet::default();
    match within {
        DomainSet::WholeLine => scan_segment(dist, eps, window, &mut out),
        DomainSet::Intervals(v) => {
            for seg in v.iter().filter_map(|iv| iv.intersect(&window)) {
                scan_segment(dist, eps, seg, &mut out);
            }
        }
    }
    out.points.dedup();
    Ok(out)
}

fn scan_segment(dist: &NoiseDistribution, eps: f64, seg: Interval, out: &mut CandidateSet) {
    let slope = |y: f64| dist.shaded_area_slope(y, eps);
    if seg.width() == 0.0 {
        if slope(seg.lo) == 0.0 {
            out.points.push(seg.lo);
        }
        return;
    }
    let step = seg.width() / (SCAN_POINTS - 1) as f64;
    let ys: Vec<f64> = (0..SCAN_POINTS)
        .map(|k| if k + 1 == SCAN_POINTS { seg.hi } else { seg.lo + step * k as f64 })
        .collect();
    let gs: Vec<f64> = ys.iter().map(|&y| slope(y)).collect();

    let mut k = 0;
    while k < SCAN_POINTS {
        if gs[k] == 0.0 {
            let start = k;
            while k + 1 < SCAN_POINTS && gs[k + 1] == 0.0 {
                k += 1;
            }
            let end = k;
            if start == end {
                out.points.push(ys[start]);
            } else {
                let is_zero = |y: f64| slope(y) == 0.0;
                let lo = if start > 0 {
                    bisect_predicate(ys[start - 1], ys[start], is_zero)
                } else {
                    ys[start]
                };
                let hi = if end + 1 < SCAN_POINTS {
                    bisect_predicate(ys[end + 1], ys[end], is_zero)
                } else {
                    ys[end]
                };
                let flat = Interval { lo, hi };
                if dist.shaded_area_unchecked(flat.midpoint(), eps) > 0.0 {
                    out.intervals.push(flat);
                }
            }
        } else if k + 1 < SCAN_POINTS && gs[k + 1] != 0.0 && (gs[k] > 0.0) != (gs[k + 1] > 0.0) {
            out.points.push(bisect_sign_change(ys[k], ys[k + 1], slope));
        }
        k += 1;
    }
}

/// `outside` fails the predicate, `inside` satisfies it; returns the point
/// closest to the transition that still satisfies it.
fn bisect_predicate(mut outside: f64, mut inside: f64, pred: impl Fn(f64) -> bool) -> f64 {
    while (inside - outside).abs() > ROOT_TOLERANCE {
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

fn bisect_sign_change(mut a: f64, mut b: f64, g: impl Fn(f64) -> f64) -> f64 {
    let positive_at_a = g(a) > 0.0;
    while b - a > ROOT_TOLERANCE {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == positive_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Argmax of the ε-shaded area over a region, restricted to the finite
/// candidate set: stationary points in the region, the region's boundary
/// points, and one midpoint per flat stretch.
///
/// The whole-line stationary set is computed once, relative to the
/// distribution's location, so the maximizer can be moved to other
/// locations of the same family and scale without rescanning.
#[derive(Debug, Clone)]
pub struct ShadedAreaMaximizer {
    dist: NoiseDistribution,
    eps: f64,
    stationary: CandidateSet,
}

/// Winner of a shaded-area maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub argmax: f64,
    pub mass: f64,
    pub candidate_count: usize,
}

impl ShadedAreaMaximizer {
    pub fn new(dist: NoiseDistribution, eps: f64) -> Result<Self> {
        let stationary = stationary_set(&dist, eps, &DomainSet::WholeLine)?;
        Ok(Self {
            dist,
            eps,
            stationary,
        })
    }

    pub fn distribution(&self) -> &NoiseDistribution {
        &self.dist
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn stationary(&self) -> &CandidateSet {
        &self.stationary
    }

    pub fn relocated(&self, location: f64) -> Self {
        let delta = location - self.dist.location();
        Self {
            dist: self.dist.relocated(location),
            eps: self.eps,
            stationary: self.stationary.shifted(delta),
        }
    }

    /// Candidate set for `region`, ascending.
    pub fn candidates(&self, region: &DomainSet) -> Vec<f64> {
        let mut cands = Vec::new();
        match region {
            DomainSet::WholeLine => {
                cands.extend(&self.stationary.points);
                cands.extend(self.stationary.intervals.iter().map(Interval::midpoint));
            }
            DomainSet::Intervals(v) => {
                for iv in v {
                    cands.push(iv.lo);
                    cands.push(iv.hi);
                    cands.extend(self.stationary.points.iter().filter(|&&p| iv.contains(p)));
                    cands.extend(
                        self.stationary
                            .intervals
                            .iter()
                            .filter_map(|flat| flat.intersect(iv))
                            .map(|clip| clip.midpoint()),
                    );
                }
            }
        }
        cands.sort_by(f64::total_cmp);
        cands.dedup();
        cands
    }

    pub fn maximize(&self, region: &DomainSet) -> Result<Maximum> {
        if region.is_empty() {
            return arg("domain is empty");
        }
        let cands = self.candidates(region);
        let mut best: Option<(f64, f64)> = None;
        for &y in &cands {
            let mass = self.dist.shaded_area_unchecked(y, self.eps);
            match best {
                Some((_, m)) if mass <= m * (1.0 + TIE_TOLERANCE) => {}
                _ => best = Some((y, mass)),
            }
        }
        match best {
            Some((argmax, mass)) => Ok(Maximum {
                argmax,
                mass,
                candidate_count: cands.len(),
            }),
            None => arg(format!(
                "no shaded-area candidates for {} with eps {}",
                self.dist, self.eps
            )),
        }
    }
}
