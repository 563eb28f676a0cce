//! Per-node noise sequences for noise-adding consensus.
//!
//! Two constructions are supported:
//!
//! * independent noises whose standard deviation decays as `sigma0 * rho^(k/2)`;
//! * telescoping zero-sum noises `theta(0) = nu(0)`,
//!   `theta(k) = nu(k) - nu(k-1)` for `0 < k < K`, `theta(K) = -nu(K-1)`, built
//!   from independent latent draws `nu(k)` with standard deviation
//!   `sigma0 * rho^(k/2)`. Each node's noises sum to zero.
//!
//! Both stop at the horizon `K`; every later noise is zero.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{NoiseDistribution, NoiseKind};
use crate::error::{arg, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    IndependentDecaying,
    TelescopingZeroSum,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::IndependentDecaying => "independent",
            ScheduleKind::TelescopingZeroSum => "telescoping",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    kind: ScheduleKind,
    family: NoiseKind,
    sigma0: f64,
    rho: f64,
    horizon: usize,
}

/// Noise values indexed `[k][node]` for `k` in `0..=K`.
pub type NoiseTensor = Vec<Vec<f64>>;

impl NoiseSchedule {
    pub fn new(
        kind: ScheduleKind,
        family: NoiseKind,
        sigma0: f64,
        rho: f64,
        horizon: usize,
    ) -> Result<Self> {
        if !(sigma0.is_finite() && sigma0 >= 0.0) {
            return arg(format!("sigma0 must be finite and non-negative, got {sigma0}"));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return arg(format!("rho must lie in (0, 1), got {rho}"));
        }
        if kind == ScheduleKind::TelescopingZeroSum && horizon < 1 {
            return arg("telescoping schedules need a horizon K >= 1");
        }
        Ok(Self {
            kind,
            family,
            sigma0,
            rho,
            horizon,
        })
    }

    pub fn independent(family: NoiseKind, sigma0: f64, rho: f64, horizon: usize) -> Result<Self> {
        Self::new(ScheduleKind::IndependentDecaying, family, sigma0, rho, horizon)
    }

    pub fn telescoping(family: NoiseKind, sigma0: f64, rho: f64, horizon: usize) -> Result<Self> {
        Self::new(ScheduleKind::TelescopingZeroSum, family, sigma0, rho, horizon)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn family(&self) -> NoiseKind {
        self.family
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Standard deviation of the independent draw made at step `k`: the noise
    /// itself for independent schedules, the latent `nu(k)` for telescoping ones.
    pub fn draw_std_dev(&self, k: usize) -> f64 {
        let last = match self.kind {
            ScheduleKind::IndependentDecaying => self.horizon,
            ScheduleKind::TelescopingZeroSum => self.horizon - 1,
        };
        if k > last {
            0.0
        } else {
            self.sigma0 * self.rho.powf(k as f64 / 2.0)
        }
    }

    /// `Var theta(k)` implied by the construction.
    pub fn noise_variance(&self, k: usize) -> f64 {
        let v = |t: usize| self.draw_std_dev(t).powi(2);
        match self.kind {
            ScheduleKind::IndependentDecaying => v(k),
            ScheduleKind::TelescopingZeroSum => match k {
                0 => v(0),
                k if k < self.horizon => v(k) + v(k - 1),
                k if k == self.horizon => v(k - 1),
                _ => 0.0,
            },
        }
    }

    /// Distribution of `theta_i(0)`; `None` for a noiseless schedule.
    pub fn initial_distribution(&self) -> Option<NoiseDistribution> {
        (self.sigma0 > 0.0).then(|| {
            NoiseDistribution::from_std_dev(self.family, 0.0, self.sigma0)
                .expect("sigma0 validated")
        })
    }

    /// Distribution of the independent draw at step `k`.
    pub fn draw_distribution(&self, k: usize) -> Option<NoiseDistribution> {
        let sd = self.draw_std_dev(k);
        (sd > 0.0).then(|| NoiseDistribution::from_std_dev(self.family, 0.0, sd).expect("sd > 0"))
    }

    /// Draws the schedule for `n` nodes. Node-major draw order: all steps of
    /// node 0, then node 1, and so on.
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> NoiseTensor {
        let steps = self.horizon + 1;
        let mut tensor = vec![vec![0.0; n]; steps];
        let draws = match self.kind {
            ScheduleKind::IndependentDecaying => steps,
            ScheduleKind::TelescopingZeroSum => self.horizon,
        };
        let dists: Vec<Option<NoiseDistribution>> =
            (0..draws).map(|k| self.draw_distribution(k)).collect();
        let mut latent = vec![0.0; draws];
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            for (slot, d) in latent.iter_mut().zip(&dists) {
                *slot = d.map_or(0.0, |d| d.draw(rng));
            }
            let seq = match self.kind {
                ScheduleKind::IndependentDecaying => latent.clone(),
                ScheduleKind::TelescopingZeroSum => telescope(&latent),
            };
            for (k, v) in seq.into_iter().enumerate() {
                tensor[k][i] = v;
            }
        }
        tensor
    }
}

/// Successive differences of `latent`, closed by `-latent[K-1]`; the result
/// has `latent.len() + 1` entries summing to zero.
pub fn telescope(latent: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(latent.len() + 1);
    let mut prev = 0.0;
    for &v in latent {
        out.push(v - prev);
        prev = v;
    }
    out.push(-prev);
    out
}
