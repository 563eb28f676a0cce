//! Privacy-preserving average consensus: `x(k+1) = W (x(k) + theta(k))`.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::graph::{Graph, NodeId, WeightMatrix};
use crate::schedule::{NoiseSchedule, NoiseTensor};

pub const TRACE_FORMAT: &str = "paca-trace";
pub const TRACE_VERSION: u32 = 1;

/// Full record of one consensus run.
///
/// Iterations are indexed `k = 0..=T`: `outputs[k] = states[k] + noises[k]`
/// is what every node broadcasts at step `k`, and
/// `states[k + 1] = W outputs[k]`. `states` therefore holds `T + 2` vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub metadata: TraceMetadata,
    pub graph: Graph,
    pub weights: WeightMatrix,
    pub schedule: NoiseSchedule,
    pub states: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub noises: Vec<Vec<f64>>,
}

/// Provenance carried in the trace header.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub seed: Option<u64>,
    pub config_digest: Option<String>,
}

impl Trace {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Last broadcast iteration `T`.
    pub fn iterations(&self) -> usize {
        self.outputs.len() - 1
    }

    pub fn initial_states(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn average(&self) -> f64 {
        let x0 = self.initial_states();
        x0.iter().sum::<f64>() / x0.len() as f64
    }

    pub fn output(&self, node: NodeId, k: usize) -> f64 {
        self.outputs[k][node]
    }

    pub fn noise(&self, node: NodeId, k: usize) -> f64 {
        self.noises[k][node]
    }

    /// `max_i |x_i(k) - x_bar|`.
    pub fn max_deviation(&self, k: usize) -> f64 {
        let xbar = self.average();
        self.states[k]
            .iter()
            .map(|v| (v - xbar).abs())
            .fold(0.0, f64::max)
    }

    /// `1'x(k+1) - 1'x(k) - 1'theta(k)` for every recorded step.
    pub fn sum_conservation_residuals(&self) -> Vec<f64> {
        (0..self.outputs.len())
            .map(|k| {
                let before: f64 = self.states[k].iter().sum();
                let after: f64 = self.states[k + 1].iter().sum();
                let injected: f64 = self.noises[k].iter().sum();
                after - before - injected
            })
            .collect()
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &TraceFile::from(self))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.to_writer(&mut buf)?;
        Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
    }

    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let file: TraceFile = serde_json::from_reader(r)?;
        file.try_into()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_reader(s.as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.to_writer(&mut w)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(f))
    }
}

/// Runs `T + 1` broadcast rounds with freshly drawn schedule noise.
pub fn run_paca<R: Rng + ?Sized>(
    graph: &Graph,
    weights: &WeightMatrix,
    x0: &[f64],
    schedule: &NoiseSchedule,
    iterations: usize,
    rng: &mut R,
) -> Result<Trace> {
    check_inputs(graph, weights, x0, schedule, iterations)?;
    let noise = schedule.generate(graph.node_count(), rng);
    run_paca_with_noise(graph, weights, x0, schedule, &noise, iterations)
}

/// Runs consensus with a pre-drawn noise tensor; steps beyond the tensor
/// are noiseless.
pub fn run_paca_with_noise(
    graph: &Graph,
    weights: &WeightMatrix,
    x0: &[f64],
    schedule: &NoiseSchedule,
    noise: &NoiseTensor,
    iterations: usize,
) -> Result<Trace> {
    check_inputs(graph, weights, x0, schedule, iterations)?;
    let n = graph.node_count();
    if noise.iter().any(|row| row.len() != n) {
        return arg(format!("noise rows must have {n} entries"));
    }
    let mut states = Vec::with_capacity(iterations + 2);
    let mut outputs = Vec::with_capacity(iterations + 1);
    let mut noises = Vec::with_capacity(iterations + 1);
    states.push(x0.to_vec());
    for k in 0..=iterations {
        let theta = noise.get(k).cloned().unwrap_or_else(|| vec![0.0; n]);
        let x_plus: Vec<f64> = states[k].iter().zip(&theta).map(|(x, t)| x + t).collect();
        states.push(weights.apply(&x_plus));
        outputs.push(x_plus);
        noises.push(theta);
    }
    Ok(Trace {
        metadata: TraceMetadata::default(),
        graph: graph.clone(),
        weights: weights.clone(),
        schedule: *schedule,
        states,
        outputs,
        noises,
    })
}

fn check_inputs(
    graph: &Graph,
    weights: &WeightMatrix,
    x0: &[f64],
    schedule: &NoiseSchedule,
    iterations: usize,
) -> Result<()> {
    let n = graph.node_count();
    if weights.size() != n {
        return arg(format!("weight matrix is {0}x{0} but graph has {n} nodes", weights.size()));
    }
    if x0.len() != n {
        return arg(format!("x0 has {} entries but graph has {n} nodes", x0.len()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return arg("x0 must be finite");
    }
    if iterations < schedule.horizon() {
        return arg(format!(
            "iterations T = {iterations} must be at least the schedule horizon K = {}",
            schedule.horizon()
        ));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceFile {
    format: String,
    version: u32,
    header: TraceHeader,
    records: Vec<IterationRecord>,
    final_state: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceHeader {
    seed: Option<u64>,
    config_digest: Option<String>,
    nodes: usize,
    iterations: usize,
    xbar: f64,
    graph: Graph,
    weights: WeightMatrix,
    schedule: NoiseSchedule,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IterationRecord {
    k: usize,
    x: Vec<f64>,
    x_plus: Vec<f64>,
    theta: Vec<f64>,
}

impl From<&Trace> for TraceFile {
    fn from(t: &Trace) -> Self {
        TraceFile {
            format: TRACE_FORMAT.to_string(),
            version: TRACE_VERSION,
            header: TraceHeader {
                seed: t.metadata.seed,
                config_digest: t.metadata.config_digest.clone(),
                nodes: t.node_count(),
                iterations: t.iterations(),
                xbar: t.average(),
                graph: t.graph.clone(),
                weights: t.weights.clone(),
                schedule: t.schedule,
            },
            records: (0..t.outputs.len())
                .map(|k| IterationRecord {
                    k,
                    x: t.states[k].clone(),
                    x_plus: t.outputs[k].clone(),
                    theta: t.noises[k].clone(),
                })
                .collect(),
            final_state: t.states.last().cloned().unwrap_or_default(),
        }
    }
}

impl TryFrom<TraceFile> for Trace {
    type Error = Error;

    fn try_from(f: TraceFile) -> Result<Self> {
        if f.format != TRACE_FORMAT || f.version != TRACE_VERSION {
            return arg(format!("unsupported trace format {} v{}", f.format, f.version));
        }
        let h = f.header;
        h.weights.validate(&h.graph)?;
        let schedule = NoiseSchedule::new(
            h.schedule.kind(),
            h.schedule.family(),
            h.schedule.sigma0(),
            h.schedule.rho(),
            h.schedule.horizon(),
        )?;
        if f.records.len() != h.iterations + 1 {
            return arg("record count disagrees with header iterations");
        }
        let mut states = Vec::with_capacity(f.records.len() + 1);
        let mut outputs = Vec::with_capacity(f.records.len());
        let mut noises = Vec::with_capacity(f.records.len());
        for (k, r) in f.records.into_iter().enumerate() {
            if r.k != k || [&r.x, &r.x_plus, &r.theta].iter().any(|v| v.len() != h.nodes) {
                return arg(format!("malformed record at iteration {k}"));
            }
            states.push(r.x);
            outputs.push(r.x_plus);
            noises.push(r.theta);
        }
        if f.final_state.len() != h.nodes {
            return arg("malformed final state");
        }
        states.push(f.final_state);
        Ok(Trace {
            metadata: TraceMetadata {
                seed: h.seed,
                config_digest: h.config_digest,
            },
            graph: h.graph,
            weights: h.weights,
            schedule,
            states,
            outputs,
            noises,
        })
    }
}
