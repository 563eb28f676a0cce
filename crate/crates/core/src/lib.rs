//! Estimation of private initial states and disclosure-probability analysis
//! for noise-adding average consensus.
//!
//! * [`dist`]: noise families, the ε-shaded area and its maximization.
//! * [`graph`], [`schedule`], [`consensus`]: the network, the noise
//!   schedules and the consensus iteration with its trace format.
//! * [`estimation`]: the observer's optimal estimators and the exact attack.
//! * [`privacy`]: disclosure probabilities, analytic and simulated.
//! * [`report`]: CSV and JSON output.

pub mod consensus;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod graph;
pub mod privacy;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod schedule;

pub use consensus::{run_paca, run_paca_with_noise, Trace, TraceMetadata};
pub use dist::{
    stationary_set, CandidateSet, DomainSet, Interval, Maximum, NoiseDistribution, NoiseKind,
    ShadedAreaMaximizer,
};
pub use error::{Error, Result};
pub use estimation::{
    attack_full_knowledge, estimate_k, estimate_k0, extract_info_set, piecewise_oracle, residuals,
    EstimationRecord, EstimationResult, Estimator, InfoSet, KnowledgeRegime, RegimeKind,
    ResidualSequence, UpdateRule,
};
pub use graph::{metropolis_weights, random_connected_graph, Graph, NodeId, WeightMatrix};
pub use privacy::{
    accurate_noise_set, compare_noise_families, delta_general, delta_monte_carlo,
    delta_upper_bound_k, delta_whole_line, delta_worst_case, AccurateNoiseSet, FamilyComparison,
    NoiseRange, Scenario,
};
pub use report::{PrivacyReport, CSV_HEADER};
pub use schedule::{telescope, NoiseSchedule, NoiseTensor, ScheduleKind};
