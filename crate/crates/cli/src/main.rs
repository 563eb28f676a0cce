//! `paca`: configuration-driven experiments on noise-adding average consensus.

mod config;
mod manifest;
mod plot;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use paca_core::report::{write_csv, write_json};
use paca_core::{
    attack_full_knowledge, compare_noise_families, delta_monte_carlo, delta_upper_bound_k,
    delta_worst_case, extract_info_set, residuals, rng, run_paca, DomainSet, EstimationRecord,
    Estimator, Graph, KnowledgeRegime, NoiseKind, NoiseSchedule, PrivacyReport, RegimeKind,
    Scenario, ScheduleKind, Trace, UpdateRule, WeightMatrix,
};
use rand::Rng;
use serde::Serialize;

use config::{parse_family, parse_regime, ExperimentConfig};
use manifest::RunManifest;

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(e: impl fmt::Display) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<paca_core::Error> for CliError {
    fn from(e: paca_core::Error) -> Self {
        let code = match e {
            paca_core::Error::Argument(_) | paca_core::Error::Format(_) => 2,
            paca_core::Error::State(_) => 3,
            paca_core::Error::Io(_) | paca_core::Error::Csv(_) => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "paca", version, about = "Privacy analysis experiments for noise-adding average consensus")]
struct Cli {
    /// TOML experiment config (dotted keys).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent (and no output directory is set).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Default directory for output files.
    #[arg(long, env = "PACA_OUTPUT_DIR", global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Disclosure probability per (eps, x0, k) for `noise.family`.
    Delta,
    /// Run consensus and write a trace file plus manifest.
    Simulate,
    /// Estimate a neighbour's initial state from a trace.
    Estimate,
    /// Exact recovery of initial states under full knowledge.
    Attack,
    /// `delta` over every family in `noise.families`.
    Sweep,
    /// Disclosure probability of noise families at equal variance.
    Compare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Delta => "delta",
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Attack => "attack",
            Command::Sweep => "sweep",
            Command::Compare => "compare",
        }
    }
}

struct Context {
    config: ExperimentConfig,
    seed: u64,
    output: Option<PathBuf>,
    format: Option<Format>,
    command: Command,
}

impl Context {
    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn extension(&self, default: Format) -> &'static str {
        match self.format_or(default) {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// Writes `body` to the output file (plus manifest) or stdout.
    fn emit(&self, body: &[u8], extra_outputs: Vec<PathBuf>) -> Result<(), CliError> {
        match &self.output {
            Some(path) => {
                write_file(path, body)?;
                let mut outputs = vec![path.clone()];
                outputs.extend(extra_outputs);
                RunManifest::new(self.command.name(), &self.config, self.seed, outputs).write(path)?;
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(body).map_err(CliError::io)?;
                out.flush().map_err(CliError::io)?;
            }
        }
        Ok(())
    }

    fn render<T: Serialize + ?Sized>(&self, value: &T, default: Format, rows: Option<&[PrivacyReport]>) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        match (self.format_or(default), rows) {
            (Format::Csv, Some(rows)) => write_csv(rows, &mut buf)?,
            (Format::Csv, None) => write_generic_csv(value, &mut buf)?,
            (Format::Json, _) => write_json(value, &mut buf)?,
        }
        Ok(buf)
    }
}

fn write_file(path: &Path, body: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io)?;
    }
    std::fs::write(path, body).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

/// CSV for a JSON array of flat records.
fn write_generic_csv<T: Serialize + ?Sized>(value: &T, buf: &mut Vec<u8>) -> Result<(), CliError> {
    let json = serde_json::to_value(value).map_err(CliError::io)?;
    let rows = json.as_array().cloned().unwrap_or_else(|| vec![json]);
    let Some(first) = rows.first().and_then(|r| r.as_object()) else {
        return Ok(());
    };
    let header: Vec<String> = first.keys().cloned().collect();
    let mut wr = csv::Writer::from_writer(buf);
    wr.write_record(&header).map_err(CliError::io)?;
    for row in &rows {
        let cells: Vec<String> = header
            .iter()
            .map(|k| match &row[k] {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.clone(),
                v => v.to_string(),
            })
            .collect();
        wr.write_record(&cells).map_err(CliError::io)?;
    }
    wr.flush().map_err(CliError::io)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("paca: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    config.validate()?;
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let ctx = Context {
        seed,
        format: cli.format,
        command: cli.command,
        output: None,
        config,
    };
    let default_ext = match cli.command {
        Command::Simulate | Command::Estimate | Command::Attack => ctx.extension(Format::Json),
        _ => ctx.extension(Format::Csv),
    };
    let output = cli.output.clone().or_else(|| {
        cli.output_dir
            .as_ref()
            .map(|d| d.join(format!("{}.{default_ext}", cli.command.name())))
    });
    let ctx = Context { output, ..ctx };
    match cli.command {
        Command::Delta => cmd_privacy(&ctx, false),
        Command::Sweep => cmd_privacy(&ctx, true),
        Command::Simulate => cmd_simulate(&ctx),
        Command::Estimate => cmd_estimate(&ctx),
        Command::Attack => cmd_attack(&ctx),
        Command::Compare => cmd_compare(&ctx),
    }
}

fn cmd_privacy(ctx: &Context, sweep: bool) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let families: Vec<NoiseKind> = if sweep && !cfg.noise.families.is_empty() {
        cfg.noise
            .families
            .iter()
            .map(|f| parse_family("noise.families", f))
            .collect::<Result<_, _>>()?
    } else {
        vec![parse_family("noise.family", &cfg.noise.family)?]
    };
    let (graph, weights) = cfg.build_graph(ctx.seed)?;
    let domain = cfg.domain_set()?;
    let p = &cfg.privacy;
    let regime = parse_regime("privacy.regime", &p.regime)?;
    let x0s: Vec<Option<f64>> = if !p.x0.is_empty() {
        p.x0.iter().copied().map(Some).collect()
    } else if domain.is_whole_line() {
        vec![None]
    } else {
        return Err(CliError::config("privacy.x0: required for a bounded domain"));
    };

    let mut rows = Vec::new();
    for family in families {
        let schedule = cfg.schedule_for(family)?;
        for &eps in &p.eps {
            for &x0 in &x0s {
                for &k in &p.k {
                    let scenario = Scenario {
                        graph: graph.clone(),
                        weights: weights.clone(),
                        schedule,
                        domain: domain.clone(),
                        x0: vec![x0.unwrap_or(0.0); graph.node_count()],
                        target: p.target,
                        observer: p.observer,
                        k,
                        regime,
                    };
                    rows.push(privacy_row(ctx, &scenario, eps, x0)?);
                }
            }
            if p.worst_case_grid > 0 && !domain.is_whole_line() {
                if let Some(dist0) = schedule.initial_distribution() {
                    let (x0, delta) = delta_worst_case(&dist0, &domain, eps, p.worst_case_grid)?;
                    rows.push(PrivacyReport {
                        dist: family.to_string(),
                        sigma: schedule.sigma0(),
                        epsilon: eps,
                        x0: Some(x0),
                        domain: format!("{}:worst", domain.descriptor()),
                        k: 0,
                        regime: RegimeKind::Independent.to_string(),
                        delta_closed: None,
                        delta_general: Some(delta),
                        delta_mc: None,
                        stderr: None,
                        n: 0,
                        seed: None,
                    });
                }
            }
        }
    }
    let body = ctx.render(&rows, Format::Csv, Some(&rows))?;
    ctx.emit(&body, Vec::new())
}

fn privacy_row(ctx: &Context, scenario: &Scenario, eps: f64, x0: Option<f64>) -> Result<PrivacyReport, CliError> {
    let s = &scenario.schedule;
    let analytic = match delta_upper_bound_k(scenario, eps) {
        Ok(v) => Some(v),
        // no closed form for full knowledge strictly before the horizon
        Err(paca_core::Error::State(_))
            if scenario.regime == RegimeKind::Full
                && s.kind() == ScheduleKind::TelescopingZeroSum
                && scenario.k < s.horizon() =>
        {
            None
        }
        Err(e) => return Err(e.into()),
    };
    let mc_n = ctx.config.privacy.mc_n;
    let (delta_mc, stderr) = if mc_n > 0 {
        let (d, se) = delta_monte_carlo(scenario, eps, mc_n, ctx.seed)?;
        (Some(d), Some(se))
    } else {
        (None, None)
    };
    let whole = scenario.domain.is_whole_line();
    Ok(PrivacyReport {
        dist: s.family().to_string(),
        sigma: s.sigma0(),
        epsilon: eps,
        x0,
        domain: scenario.domain.descriptor(),
        k: scenario.k,
        regime: scenario.regime.to_string(),
        delta_closed: if whole { analytic } else { None },
        delta_general: if whole { None } else { analytic },
        delta_mc,
        stderr,
        n: mc_n,
        seed: (mc_n > 0).then_some(ctx.seed),
    })
}

/// Runs consensus as configured; draws `x0` from stream 1 and noise from
/// stream 2 of the seed.
fn simulate(ctx: &Context) -> Result<Trace, CliError> {
    let cfg = &ctx.config;
    let (graph, weights) = cfg.build_graph(ctx.seed)?;
    let schedule = cfg.noise_schedule()?;
    let x0 = initial_states(cfg, &graph, ctx.seed)?;
    let mut trace = run_paca(&graph, &weights, &x0, &schedule, cfg.simulate.iterations, &mut rng::stream(ctx.seed, 2))
        .map_err(|e| match e {
            paca_core::Error::Argument(m) => CliError::config(format!("simulate.iterations: {m}")),
            e => e.into(),
        })?;
    trace.metadata.seed = Some(ctx.seed);
    trace.metadata.config_digest = Some(manifest::config_digest(cfg, ctx.seed));
    Ok(trace)
}

fn initial_states(cfg: &ExperimentConfig, graph: &Graph, seed: u64) -> Result<Vec<f64>, CliError> {
    let n = graph.node_count();
    if !cfg.simulate.x0.is_empty() {
        if cfg.simulate.x0.len() != n {
            return Err(CliError::config(format!(
                "simulate.x0: has {} entries but the graph has {n} nodes",
                cfg.simulate.x0.len()
            )));
        }
        return Ok(cfg.simulate.x0.clone());
    }
    let (lo, hi) = cfg.simulate.x0_range;
    let mut r = rng::stream(seed, 1);
    Ok((0..n).map(|_| if lo == hi { lo } else { r.random_range(lo..=hi) }).collect())
}

fn cmd_simulate(ctx: &Context) -> Result<(), CliError> {
    let trace = simulate(ctx)?;
    let t = trace.iterations();
    let residual = trace
        .sum_conservation_residuals()
        .into_iter()
        .fold(0.0, |m: f64, r| m.max(r.abs()));
    let body = trace.to_json()? + "\n";
    let path = ctx
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("trace.json"));
    write_file(&path, body.as_bytes())?;
    RunManifest::new("simulate", &ctx.config, ctx.seed, vec![path.clone()]).write(&path)?;
    println!("trace {}", path.display());
    println!("iterations {t}");
    println!("max_deviation {:e}", trace.max_deviation(t));
    println!("max_sum_residual {residual:e}");
    Ok(())
}

fn load_or_simulate(ctx: &Context, path: Option<&Path>) -> Result<Trace, CliError> {
    match path {
        Some(p) => Trace::load(p).map_err(|e| CliError {
            message: format!("{}: {e}", p.display()),
            ..CliError::from(e)
        }),
        None => simulate(ctx),
    }
}

fn cmd_estimate(ctx: &Context) -> Result<(), CliError> {
    let e = &ctx.config.estimate;
    let trace = load_or_simulate(ctx, e.trace.as_deref())?;
    let domain = ctx.config.domain_set()?;
    let kind = parse_regime("estimate.regime", &e.regime)?;
    let regime = match kind {
        RegimeKind::Independent => KnowledgeRegime::IndependentNoise,
        RegimeKind::Partial => KnowledgeRegime::PartialNeighborhood,
        RegimeKind::Full => KnowledgeRegime::full_knowledge(&trace.graph, &trace.weights, e.observer, e.target)?,
    };
    let rule = UpdateRule::from_trace(&trace, e.target)?;
    let mut estimator = Estimator::new(&trace.schedule, &domain, e.eps)?;
    let mut records = Vec::new();
    for &k in &e.k {
        let info = extract_info_set(&trace, e.observer, e.target, k)?;
        let seq = residuals(&info, &regime, &rule);
        let r = estimator.estimate(&info, &seq, &regime)?;
        records.push(EstimationRecord::new(e.target, e.observer, &r));
    }
    let body = ctx.render(&records, Format::Json, None)?;
    ctx.emit(&body, Vec::new())
}

#[derive(Debug, Serialize)]
struct AttackRow {
    target: usize,
    observer: usize,
    e_hat: f64,
    x_hat: f64,
    x_true: f64,
    abs_error: f64,
}

fn cmd_attack(ctx: &Context) -> Result<(), CliError> {
    let a = &ctx.config.attack;
    let trace = load_or_simulate(ctx, a.trace.as_deref())?;
    if a.observer >= trace.node_count() {
        return Err(CliError::config(format!("attack.observer: node {} is not in the graph", a.observer)));
    }
    let targets: Vec<usize> = if a.targets.is_empty() {
        trace.graph.neighbors(a.observer).iter().copied().collect()
    } else {
        a.targets.clone()
    };
    let mut rows = Vec::new();
    for target in targets {
        let r = attack_full_knowledge(&trace, a.observer, target)?;
        let x_true = trace.initial_states()[target];
        rows.push(AttackRow {
            target,
            observer: a.observer,
            e_hat: r.e_hat,
            x_hat: r.x_hat,
            x_true,
            abs_error: (r.x_hat - x_true).abs(),
        });
    }
    let body = ctx.render(&rows, Format::Json, None)?;
    ctx.emit(&body, Vec::new())
}

#[derive(Debug, Serialize)]
struct CompareOutput {
    rows: Vec<PrivacyReport>,
    minimizers: Vec<Minimizer>,
}

#[derive(Debug, Serialize)]
struct Minimizer {
    epsilon: f64,
    family: NoiseKind,
}

fn cmd_compare(ctx: &Context) -> Result<(), CliError> {
    let c = &ctx.config.compare;
    let families: Vec<NoiseKind> = c
        .families
        .iter()
        .map(|f| parse_family("compare.families", f))
        .collect::<Result<_, _>>()?;
    let graph = Graph::triangle();
    let weights: WeightMatrix = paca_core::metropolis_weights(&graph);
    let mut rows = Vec::new();
    let mut minimizers = Vec::new();
    for &eps in &c.eps {
        for cmp in compare_noise_families(c.sigma, eps, &families)? {
            if cmp.minimizer {
                eprintln!("eps {eps}: minimizer {}", cmp.family);
                minimizers.push(Minimizer {
                    epsilon: eps,
                    family: cmp.family,
                });
            }
            let (delta_mc, stderr) = if c.mc_n > 0 {
                let scenario = Scenario {
                    graph: graph.clone(),
                    weights: weights.clone(),
                    schedule: NoiseSchedule::independent(cmp.family, c.sigma, 0.5, 0)?,
                    domain: DomainSet::WholeLine,
                    x0: vec![0.0; graph.node_count()],
                    target: 0,
                    observer: 1,
                    k: 0,
                    regime: RegimeKind::Independent,
                };
                let (d, se) = delta_monte_carlo(&scenario, eps, c.mc_n, ctx.seed)?;
                (Some(d), Some(se))
            } else {
                (None, None)
            };
            rows.push(PrivacyReport {
                dist: cmp.family.to_string(),
                sigma: c.sigma,
                epsilon: eps,
                x0: None,
                domain: DomainSet::WholeLine.descriptor(),
                k: 0,
                regime: RegimeKind::Independent.to_string(),
                delta_closed: Some(cmp.delta),
                delta_general: None,
                delta_mc,
                stderr,
                n: c.mc_n,
                seed: (c.mc_n > 0).then_some(ctx.seed),
            });
        }
    }
    let mut extra = Vec::new();
    if let Some(path) = &c.plot {
        let series: Vec<plot::Series> = families
            .iter()
            .map(|f| plot::Series {
                label: f.to_string(),
                points: rows
                    .iter()
                    .filter(|r| r.dist == f.to_string())
                    .map(|r| (r.epsilon, r.delta_closed.unwrap_or(0.0)))
                    .collect(),
            })
            .collect();
        let svg = plot::line_chart(
            &format!("disclosure probability at equal variance (sigma = {})", c.sigma),
            "epsilon",
            "delta",
            &series,
        );
        write_file(path, svg.as_bytes())?;
        extra.push(path.clone());
    }
    let body = match ctx.format_or(Format::Csv) {
        Format::Csv => ctx.render(&rows, Format::Csv, Some(&rows))?,
        Format::Json => ctx.render(&CompareOutput { rows, minimizers }, Format::Json, None)?,
    };
    ctx.emit(&body, extra)
}
