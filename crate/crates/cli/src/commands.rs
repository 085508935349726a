//! Argument parsing and subcommand dispatch.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use actsched_core::greedy::{default_ridge, greedy_static, greedy_time_varying, MetricOutcome};
use actsched_core::leverage::{leverage_table, sample_schedule, SamplingDistribution};
use actsched_core::models::{example1_system, ExampleOneInputs, SwingParameters};
use actsched_core::system::{controllability_matrix, is_eps_d_approximation};
use actsched_core::unweighted::{brute_force_schedule, schedule_unweighted};
use actsched_core::weighted::{
    activation_budget, schedule_max_ratio, schedule_per_input, schedule_per_time,
    schedule_two_sided, WeightedScheduleResult,
};
use actsched_core::{ControllabilityMatrix, DesignPool, Horizon, LtiSystem, MetricKind, Schedule};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::files::{
    linspace, load_schedule, load_system, to_json_text, write_epsilon_surface, write_heatmap,
    write_json, Rows, ScheduleFile,
};
use crate::report::{metrics_table, schedule_summary};
use crate::reproduce;

#[derive(Debug, Parser)]
#[command(name = "actsched", version, about = "Sparse actuator schedules for discrete-time LTI systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the controllability Gramian and its extreme eigenvalues as JSON.
    Gramian {
        #[command(flatten)]
        sys: SystemArgs,
        /// Write the JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Six controllability metrics of the full Gramian, and of a schedule's Gramian.
    Metrics {
        #[command(flatten)]
        sys: SystemArgs,
        /// Schedule file produced by `schedule --out`.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Build an actuator schedule.
    Schedule(ScheduleArgs),
    /// Leverage scores and sampling probabilities as CSV.
    Leverage {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid of the approximation factor over (d, t/n) as CSV.
    EpsilonSurface(SurfaceArgs),
    /// Rerun one of the benchmark studies.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// System file with fields `A`, `B` and optional `name`.
    /// Defaults to the built-in 8-state example with `B = I`.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Horizon; defaults to the state dimension.
    #[arg(long)]
    pub t: Option<usize>,
}

impl SystemArgs {
    fn load(&self) -> CliResult<(LtiSystem, Horizon)> {
        let sys = match &self.system {
            Some(path) => load_system(path)?.0,
            None => example1_system(ExampleOneInputs::Full),
        };
        let t = Horizon::new(self.t.unwrap_or(sys.state_dim()))?;
        Ok((sys, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    TwoSided,
    MaxRatio,
    PerInput,
    PerTime,
    Unweighted,
    Leverage,
    GreedyStatic,
    GreedyTv,
    BruteForce,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::TwoSided => "two-sided",
            Algo::MaxRatio => "max-ratio",
            Algo::PerInput => "per-input",
            Algo::PerTime => "per-time",
            Algo::Unweighted => "unweighted",
            Algo::Leverage => "leverage",
            Algo::GreedyStatic => "greedy-static",
            Algo::GreedyTv => "greedy-tv",
            Algo::BruteForce => "brute-force",
        }
    }
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long, value_enum)]
    pub algo: Algo,
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Average number of active inputs per step.
    #[arg(long)]
    pub d: f64,
    /// Metric for the greedy and exhaustive schedulers (A, D, T, E, V, G).
    #[arg(long, default_value = "A")]
    pub metric: MetricKind,
    /// Ridge for the greedy schedulers; defaults to 1e-8 lambda_max(W).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Seed of the leverage sampler.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Schedule file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Heatmap CSV to write.
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[arg(long, default_value_t = 1.0)]
    pub d_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub d_max: f64,
    #[arg(long, default_value_t = 100)]
    pub d_steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub ratio_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub ratio_max: f64,
    #[arg(long, default_value_t = 10)]
    pub ratio_steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Study {
    Example1,
    Example2,
    Example3,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub study: Study,
    /// Graph seed (example2).
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Node count (example2).
    #[arg(long, default_value_t = 200)]
    pub nodes: usize,
}

fn write_text(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn create(path: &Path) -> CliResult<std::fs::File> {
    std::fs::File::create(path).map_err(|e| CliError::io(path, e))
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Gramian { sys, out } => gramian(&sys, out.as_deref(), stdout),
        Command::Metrics { sys, schedule } => metrics(&sys, schedule.as_deref(), stdout),
        Command::Schedule(args) => schedule(&args, stdout),
        Command::Leverage { sys, out } => leverage(&sys, out.as_deref(), stdout),
        Command::EpsilonSurface(args) => surface(&args, stdout),
        Command::Reproduce(args) => reproduce_study(&args, stdout),
    }
}

fn gramian(args: &SystemArgs, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let (sys, t) = args.load()?;
    let w = controllability_matrix(&sys, t).gramian();
    let spec = w.spectrum();
    let doc = json!({
        "n": sys.state_dim(),
        "t": t.get(),
        "W": Rows::from_matrix(w.matrix()),
        "lambda_min": spec.min(),
        "lambda_max": spec.max(),
        "controllable": w.is_positive_definite(),
    });
    match out {
        Some(p) => write_json(p, &doc),
        None => write_text(None, &to_json_text(&doc)?, stdout),
    }
}

fn metrics(args: &SystemArgs, schedule: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let (sys, t) = args.load()?;
    let c = controllability_matrix(&sys, t);
    let mut text = String::new();
    let ws = match schedule {
        Some(p) => {
            let file = load_schedule(p)?;
            let s = file.to_schedule(&p.display().to_string())?;
            text += &schedule_summary(&s);
            Some(c.scheduled_gramian(&s)?)
        }
        None => None,
    };
    text += &metrics_table(&c, ws.as_ref(), None)?;
    write_text(None, &text, stdout)
}

/// Schedule plus what the scheduler certifies about it.
struct Outcome {
    schedule: Schedule,
    certified: Option<WeightedScheduleResult>,
    notes: Vec<String>,
}

fn certified(r: WeightedScheduleResult) -> Outcome {
    Outcome {
        schedule: r.schedule.clone(),
        certified: Some(r),
        notes: Vec::new(),
    }
}

fn run_algo(args: &ScheduleArgs, sys: &LtiSystem, t: Horizon, c: &ControllabilityMatrix) -> CliResult<Outcome> {
    let d = args.d;
    let pool = args.metric.needs_pool().then(|| DesignPool::from(c));
    let alpha = || args.alpha.unwrap_or_else(|| default_ridge(&c.gramian()));
    let greedy_note = |o: MetricOutcome| match o {
        MetricOutcome::Value(v) => format!("{}: {v:.6e}", args.metric),
        MetricOutcome::Uncontrollable => format!("{}: uncontrollable", args.metric),
    };
    Ok(match args.algo {
        Algo::TwoSided => certified(schedule_two_sided(sys, t, d)?),
        Algo::MaxRatio => certified(schedule_max_ratio(sys, t, d)?),
        Algo::PerInput => certified(schedule_per_input(sys, t, d)?),
        Algo::PerTime => certified(schedule_per_time(sys, t, d)?),
        Algo::Unweighted => certified(schedule_unweighted(sys, t, d)?),
        Algo::Leverage => {
            let schedule = sample_schedule(sys, t, d, args.seed)?;
            let draws = (d * t.get() as f64 - 1e-9).ceil();
            Outcome {
                schedule,
                certified: None,
                notes: vec![format!("draws: {draws}"), format!("seed: {}", args.seed)],
            }
        }
        Algo::GreedyStatic => {
            let k = activation_budget(1, d)?;
            let a = alpha();
            let r = greedy_static(sys, t, k, args.metric, pool.as_ref(), a)?;
            let picks: Vec<usize> = r.inputs.iter().map(|j| j + 1).collect();
            Outcome {
                schedule: r.schedule,
                certified: None,
                notes: vec![
                    format!("ridge alpha: {a:e}"),
                    format!("inputs (pick order, 1-based): {picks:?}"),
                    greedy_note(r.outcome),
                ],
            }
        }
        Algo::GreedyTv => {
            let a = alpha();
            let r = greedy_time_varying(sys, t, d, args.metric, pool.as_ref(), a)?;
            Outcome {
                schedule: r.schedule,
                certified: None,
                notes: vec![format!("ridge alpha: {a:e}"), greedy_note(r.outcome)],
            }
        }
        Algo::BruteForce => {
            let r = brute_force_schedule(sys, t, d, args.metric, pool.as_ref())?;
            let v = if r.value.controllable {
                format!("{}: {:.6e}", args.metric, r.value.value)
            } else {
                format!("{}: uncontrollable (ridged {:.6e})", args.metric, r.value.value)
            };
            Outcome {
                schedule: r.schedule,
                certified: None,
                notes: vec![v],
            }
        }
    })
}

fn schedule(args: &ScheduleArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let (sys, t) = args.sys.load()?;
    let c = controllability_matrix(&sys, t);
    let w = c.gramian();
    w.definite_spectrum()?;
    let outcome = run_algo(args, &sys, t, &c)?;
    let ws = c.scheduled_gramian(&outcome.schedule)?;

    let mut text = format!(
        "algorithm: {}\nstate dimension n = {}, requested d = {}\n",
        args.algo.name(),
        sys.state_dim(),
        args.d
    );
    text += &schedule_summary(&outcome.schedule);
    let mut bound = None;
    if let Some(r) = &outcome.certified {
        text += &format!("activation budget kappa = {} (d_eff = {})\n", r.kappa, r.effective_d());
        if let Some(eps) = r.epsilon {
            let pass = is_eps_d_approximation(&w, &ws, eps)?;
            text += &format!("epsilon: {eps}\n");
            text += &format!("sandwich check: {}\n", if pass { "pass" } else { "FAIL" });
        }
        if let Some(g) = r.gamma {
            text += &format!("energy budget ({:?}): gamma = {g}\n", r.budget_kind);
        }
        text += &format!("metric bound factor: {}\n", r.rho_bound_factor);
        bound = Some(r.rho_bound_factor);
    }
    for note in &outcome.notes {
        text += note;
        text.push('\n');
    }
    text += &metrics_table(&c, Some(&ws), bound)?;

    if let Some(p) = &args.out {
        let mut params = BTreeMap::new();
        params.insert("d".into(), json!(args.d));
        params.insert("t".into(), json!(t.get()));
        if matches!(args.algo, Algo::GreedyStatic | Algo::GreedyTv | Algo::BruteForce) {
            params.insert("metric".into(), json!(args.metric.name()));
        }
        if let Some(a) = args.alpha {
            params.insert("alpha".into(), json!(a));
        }
        let seed = (args.algo == Algo::Leverage).then_some(args.seed);
        write_json(p, &ScheduleFile::new(&outcome.schedule, args.algo.name(), params, seed))?;
    }
    if let Some(p) = &args.heatmap {
        write_heatmap(&outcome.schedule, create(p)?)?;
    }
    write_text(args.report.as_deref(), &text, stdout)
}

fn leverage(args: &SystemArgs, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let (sys, t) = args.load()?;
    let c = controllability_matrix(&sys, t);
    let table = leverage_table(&c);
    let dist = SamplingDistribution::from_table(&table, sys.state_dim()).ok();
    let tt = t.get();
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["input", "time", "power", "score", "probability"])?;
        for i in 0..sys.input_count() {
            for k in 0..tt {
                let power = tt - k - 1;
                let p = dist
                    .as_ref()
                    .map_or_else(String::new, |d| d.probabilities()[(i, k)].to_string());
                w.write_record(&[
                    i.to_string(),
                    k.to_string(),
                    power.to_string(),
                    table.scores()[(i, power)].to_string(),
                    p,
                ])?;
            }
        }
        w.flush().map_err(|e| CliError::io("<leverage>", e))?;
    }
    match out {
        Some(p) => {
            std::fs::write(p, &buf).map_err(|e| CliError::io(p, e))?;
            let mut text = format!("total score (rank of C): {}\n", table.total());
            for j in 0..sys.input_count() {
                text += &format!("input {}: {}\n", j, table.group(j)?);
            }
            write_text(None, &text, stdout)
        }
        None => stdout.write_all(&buf).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn surface(args: &SurfaceArgs, stdout: &mut dyn Write) -> CliResult<()> {
    if args.d_steps == 0 || args.ratio_steps == 0 {
        return Err(CliError::Usage("grid needs at least one point per axis".into()));
    }
    let ds = linspace(args.d_min, args.d_max, args.d_steps);
    let rs = linspace(args.ratio_min, args.ratio_max, args.ratio_steps);
    match &args.out {
        Some(p) => write_epsilon_surface(&ds, &rs, create(p)?),
        None => write_epsilon_surface(&ds, &rs, stdout),
    }
}

fn reproduce_study(args: &ReproduceArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let text = match args.study {
        Study::Example1 => reproduce::render("8-state example, t = 8", &reproduce::example1()?),
        Study::Example2 => {
            let leaders = args.nodes * 4 / 5;
            let d = args.nodes as f64 / 5.0;
            let r = reproduce::example2(args.nodes, 0.125, d, leaders, args.seed)?;
            reproduce::render_example2(&r, d, leaders)
        }
        Study::Example3 => {
            let params = SwingParameters::ten_machine();
            let ds: Vec<usize> = (2..=10).collect();
            reproduce::render_example3(&params, &reproduce::example3(&params, &ds)?)
        }
    };
    write_text(None, &text, stdout)
}
