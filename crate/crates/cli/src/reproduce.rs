//! Drivers for the three benchmark studies.

use std::fmt::Write as _;

use actsched_core::greedy::{default_ridge, greedy_static, greedy_time_varying, MetricOutcome};
use actsched_core::leverage::sample_schedule;
use actsched_core::metrics::evaluate;
use actsched_core::models::{
    consensus_system, example1_system, random_geometric_graph, swing_system, ExampleOneInputs,
    SwingParameters,
};
use actsched_core::system::controllability_matrix;
use actsched_core::unweighted::schedule_unweighted;
use actsched_core::weighted::{schedule_max_ratio, WeightedScheduleResult};
use actsched_core::{
    ControllabilityMatrix, Error, Horizon, LtiSystem, MetricKind, Result, Schedule,
};
use nalgebra::DMatrix;

/// `tr(W_s^{-1})`, `None` when `W_s` is singular.
pub fn a_value(c: &ControllabilityMatrix, schedule: &Schedule) -> Result<Option<f64>> {
    let ws = c.scheduled_gramian(schedule)?;
    match evaluate(MetricKind::AOptimality, &ws, None) {
        Ok(v) => Ok(Some(v)),
        Err(Error::SingularGramian { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Inputs in `rows` active at every time.
pub fn static_schedule(m: usize, t: usize, rows: &[usize]) -> Schedule {
    let mut s = DMatrix::zeros(m, t);
    for &j in rows {
        s.row_mut(j).fill(1.0);
    }
    Schedule::new(s).expect("0/1 grid")
}

/// Unweighted schedule from the smallest integer budget whose output has
/// exactly `support` activations, with that budget.
pub fn unweighted_by_support(
    sys: &LtiSystem,
    t: Horizon,
    support: usize,
) -> Result<Option<(usize, WeightedScheduleResult)>> {
    let (n, m) = (sys.state_dim(), sys.input_count());
    for kappa in n + 1..=m * t.get() {
        let r = schedule_unweighted(sys, t, kappa as f64 / t.get() as f64)?;
        if r.schedule.support_size() == support {
            return Ok(Some((kappa, r)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub label: String,
    /// Average number of active inputs per step.
    pub d: f64,
    pub value: Option<f64>,
    /// Value printed in the original study, if any.
    pub reference: Option<&'static str>,
}

impl Row {
    fn new(label: impl Into<String>, d: f64, value: Option<f64>, reference: Option<&'static str>) -> Self {
        Row {
            label: label.into(),
            d,
            value,
            reference,
        }
    }
}

pub fn render(title: &str, rows: &[Row]) -> String {
    let mut out = String::new();
    writeln!(out, "{title}").unwrap();
    writeln!(out, "{:<44} {:>8} {:>16} {:>16}", "schedule", "d_avg", "tr(W_s^-1)", "reference").unwrap();
    for r in rows {
        writeln!(
            out,
            "{:<44} {:>8.4} {:>16} {:>16}",
            r.label,
            r.d,
            r.value.map_or_else(|| "uncontrollable".into(), |v| format!("{v:.4}")),
            r.reference.unwrap_or("-")
        )
        .unwrap();
    }
    out
}

/// The 8-state example at `t = 8`.
pub fn example1() -> Result<Vec<Row>> {
    let sys = example1_system(ExampleOneInputs::Full);
    let t = Horizon::new(8)?;
    let c = controllability_matrix(&sys, t);
    let alpha = default_ridge(&c.gramian());
    let mut rows = Vec::new();

    let first = static_schedule(8, 8, &[0]);
    rows.push(Row::new("input 1 at every step", 1.0, a_value(&c, &first)?, Some("uncontrollable")));

    let r = schedule_unweighted(&sys, t, 1.125)?;
    rows.push(Row::new(
        "unweighted, d = 1.125",
        r.schedule.average_active(),
        a_value(&c, &r.schedule)?,
        Some("0.628"),
    ));

    let bmin = static_schedule(8, 8, &[0, 1, 7]);
    rows.push(Row::new("static inputs {1,2,8}", 3.0, a_value(&c, &bmin)?, Some("0.503")));

    let r = schedule_unweighted(&sys, t, 1.875)?;
    rows.push(Row::new(
        "unweighted, d = 1.875",
        r.schedule.average_active(),
        a_value(&c, &r.schedule)?,
        None,
    ));
    if let Some((kappa, r)) = unweighted_by_support(&sys, t, 15)? {
        rows.push(Row::new(
            format!("unweighted, 15 activations (budget {kappa})"),
            r.schedule.average_active(),
            a_value(&c, &r.schedule)?,
            Some("0.161"),
        ));
    }

    let g = greedy_static(&sys, t, 3, MetricKind::AOptimality, None, alpha)?;
    let label = format!(
        "greedy static, inputs {:?}",
        g.inputs.iter().map(|j| j + 1).collect::<Vec<_>>()
    );
    rows.push(Row::new(label, 3.0, g.outcome.value(), Some("uncontrollable")));

    let g = greedy_time_varying(&sys, t, 3.0, MetricKind::AOptimality, None, alpha)?;
    rows.push(Row::new("greedy time-varying", g.schedule.average_active(), g.outcome.value(), Some("0.294")));

    rows.push(Row::new("fully actuated", 8.0, a_value(&c, &Schedule::full(8, 8))?, Some("0.132")));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example2 {
    pub nodes: usize,
    pub connected: bool,
    pub full: Option<f64>,
    /// Leverage schedule as sampled.
    pub leverage_raw: Option<f64>,
    /// Leverage schedule rescaled to `sum s^2 = d n`.
    pub leverage: Option<f64>,
    pub static_greedy: MetricOutcome,
}

/// Consensus network on a random geometric graph, `t = n`.
pub fn example2(nodes: usize, radius: f64, d: f64, leaders: usize, seed: u64) -> Result<Example2> {
    let graph = random_geometric_graph(nodes, radius, seed)?;
    let sys = consensus_system(&graph);
    let t = Horizon::new(nodes)?;
    let c = controllability_matrix(&sys, t);
    let full = a_value(&c, &Schedule::full(nodes, nodes))?;
    let sampled = sample_schedule(&sys, t, d, seed)?;
    let leverage_raw = a_value(&c, &sampled)?;
    let leverage = a_value(&c, &sampled.normalized_energy(d * nodes as f64)?)?;
    let alpha = default_ridge(&c.gramian());
    let g = greedy_static(&sys, t, leaders, MetricKind::AOptimality, None, alpha)?;
    Ok(Example2 {
        nodes,
        connected: graph.is_connected(),
        full,
        leverage_raw,
        leverage,
        static_greedy: g.outcome,
    })
}

pub fn render_example2(r: &Example2, d: f64, leaders: usize) -> String {
    let rows = [
        Row::new("leverage sampling, as drawn", d, r.leverage_raw, Some("18.54")),
        Row::new("leverage sampling, sum s^2 = d n", d, r.leverage, Some("93.64")),
        Row::new(format!("greedy static, {leaders} leaders"), leaders as f64, r.static_greedy.value(), Some("676.68")),
        Row::new("fully actuated", r.nodes as f64, r.full, Some("18.16")),
    ];
    let title = format!(
        "consensus network, {} nodes ({}connected graph), t = n",
        r.nodes,
        if r.connected { "" } else { "dis" }
    );
    render(&title, &rows)
}

/// A-optimality of each method at integer `d`, every schedule rescaled to
/// `sum s^2 = d t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Example3Row {
    pub d: usize,
    pub max_ratio: Option<f64>,
    pub unweighted: Option<f64>,
    pub greedy_static: Option<f64>,
    pub greedy_time_varying: Option<f64>,
}

fn normalized_value(c: &ControllabilityMatrix, s: &Schedule, total: f64) -> Result<Option<f64>> {
    match s.normalized_energy(total) {
        Ok(n) => a_value(c, &n),
        Err(Error::InvalidParameter(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Ten-machine swing network, `t = 2g`.
pub fn example3(params: &SwingParameters, ds: &[usize]) -> Result<Vec<Example3Row>> {
    let sys = swing_system(params);
    let tt = sys.state_dim();
    let t = Horizon::new(tt)?;
    let c = controllability_matrix(&sys, t);
    let alpha = default_ridge(&c.gramian());
    let mut rows = Vec::new();
    for &d in ds {
        let total = (d * tt) as f64;
        let df = d as f64;
        let feasible = |r: Result<WeightedScheduleResult>| match r {
            Ok(r) => Ok(Some(r)),
            Err(Error::InvalidBudget(_)) => Ok(None),
            Err(e) => Err(e),
        };
        let max_ratio = match feasible(schedule_max_ratio(&sys, t, df))? {
            Some(r) => normalized_value(&c, &r.schedule, total)?,
            None => None,
        };
        let unweighted = match feasible(schedule_unweighted(&sys, t, df))? {
            Some(r) => normalized_value(&c, &r.schedule, total)?,
            None => None,
        };
        let gs = greedy_static(&sys, t, d.min(sys.input_count()), MetricKind::AOptimality, None, alpha)?;
        let gt = greedy_time_varying(&sys, t, df, MetricKind::AOptimality, None, alpha)?;
        rows.push(Example3Row {
            d,
            max_ratio,
            unweighted,
            greedy_static: normalized_value(&c, &gs.schedule, total)?,
            greedy_time_varying: normalized_value(&c, &gt.schedule, total)?,
        });
    }
    Ok(rows)
}

pub fn render_example3(params: &SwingParameters, rows: &[Example3Row]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "swing network, {} generators, sample time {} s, t = {}; tr(W_s^-1) with sum s^2 = d t",
        params.generators(),
        params.sample_time(),
        2 * params.generators()
    )
    .unwrap();
    writeln!(
        out,
        "{:>4} {:>16} {:>16} {:>16} {:>16}",
        "d", "max-ratio", "unweighted", "greedy-static", "greedy-tv"
    )
    .unwrap();
    let f = |v: Option<f64>| v.map_or_else(|| "-".into(), |x| format!("{x:.6e}"));
    for r in rows {
        writeln!(
            out,
            "{:>4} {:>16} {:>16} {:>16} {:>16}",
            r.d,
            f(r.max_ratio),
            f(r.unweighted),
            f(r.greedy_static),
            f(r.greedy_time_varying)
        )
        .unwrap();
    }
    out
}
