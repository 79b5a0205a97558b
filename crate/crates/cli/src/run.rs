//! Analyses over a scenario's sweep points.
//!
//! Each row compares the nonreciprocal and reciprocal branches at the same
//! rates, so the model's `coupling` field does not enter the tables. Points
//! are evaluated by an ordered parallel map; output order is input order.

use nrsense_core::closedform::{self, DetuningBranch, FormulaInputs, Precisions};
use nrsense_core::fisher::{collective_assumed_precision, compare_steady, compare_transient};
use nrsense_core::model::{build, p_index, q_index, stability_margin};
use nrsense_core::moments::vacuum_evolution;
use nrsense_core::trajectory::{simulate, SimConfig};
use nrsense_core::verify::{self, Report, VerifyOptions};
use nrsense_core::{Coupling, Error, ModelSpec, StarConvention, Topology};
use rayon::prelude::*;

use crate::error::CliError;
use crate::scenario::{Point, Scenario};
use crate::table::{Cell, Table};

pub const COLUMNS: &[&str] = &[
    "kappa",
    "lambda_eff",
    "N",
    "delta",
    "n_a",
    "n_b",
    "t",
    "dxi_nr_num",
    "dxi_nr_cf",
    "dxi_r_num",
    "dxi_r_cf",
    "eta",
    "improvement",
    "deviation",
    "delta_b",
    "xi",
    "mu",
    "eta_cf",
    "convention",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub spec: ModelSpec,
    pub t: Option<f64>,
    pub dxi_nr_num: Option<f64>,
    pub dxi_nr_cf: Option<f64>,
    pub dxi_r_num: Option<f64>,
    pub dxi_r_cf: Option<f64>,
    pub mu: Option<f64>,
    pub status: String,
}

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? / b?)
}

fn rel(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    let (a, b) = (a?, b?);
    Some(if a == b { 0.0 } else { (a - b).abs() / b.abs() })
}

impl Row {
    fn new(spec: ModelSpec, t: Option<f64>) -> Self {
        Self {
            spec,
            t,
            dxi_nr_num: None,
            dxi_nr_cf: None,
            dxi_r_num: None,
            dxi_r_cf: None,
            mu: None,
            status: "ok".into(),
        }
    }

    pub fn eta(&self) -> Option<f64> {
        ratio(self.dxi_nr_num, self.dxi_r_num)
    }

    pub fn eta_cf(&self) -> Option<f64> {
        ratio(self.dxi_nr_cf, self.dxi_r_cf)
    }

    /// Largest relative deviation of a numeric precision from its closed form.
    pub fn deviation(&self) -> Option<f64> {
        match (rel(self.dxi_nr_num, self.dxi_nr_cf), rel(self.dxi_r_num, self.dxi_r_cf)) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    fn set_numeric(&mut self, (nr, r): (f64, f64)) {
        self.dxi_nr_num = Some(nr);
        self.dxi_r_num = Some(r);
    }

    fn set_closed_form(&mut self, p: Precisions) {
        self.dxi_nr_cf = Some(p.nonreciprocal);
        self.dxi_r_cf = Some(p.reciprocal);
    }

    fn flag(&mut self, status: &str) {
        if self.status == "ok" {
            self.status = status.into();
        }
    }

    fn flag_error(&mut self, e: &Error) {
        match e {
            Error::Unstable { .. } => self.flag(&format!("unstable: {e}")),
            _ => self.flag(&format!("error: {e}")),
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        let s = &self.spec;
        let convention = match (s.topology, s.star_convention) {
            (Topology::Pair, _) => "pair",
            (_, StarConvention::Aggregate) => "aggregate",
            (_, StarConvention::PerBath) => "per_bath",
        };
        vec![
            Cell::num(s.kappa),
            Cell::num(s.lambda_eff),
            Cell::Int(s.topology.readout_modes() as u64),
            Cell::num(s.detuning_a),
            Cell::num(s.n_a),
            Cell::num(s.n_b),
            Cell::opt(self.t),
            Cell::opt(self.dxi_nr_num),
            Cell::opt(self.dxi_nr_cf),
            Cell::opt(self.dxi_r_num),
            Cell::opt(self.dxi_r_cf),
            Cell::opt(self.eta()),
            Cell::opt(self.eta().map(f64::recip)),
            Cell::opt(self.deviation()),
            Cell::num(s.detuning_b),
            Cell::num(s.xi),
            Cell::opt(self.mu),
            Cell::opt(self.eta_cf()),
            Cell::Text(convention.into()),
            Cell::Text(self.status.clone()),
        ]
    }
}

pub fn rows_table(rows: &[Row]) -> Table {
    let mut t = Table::new(COLUMNS);
    for r in rows {
        t.push(r.cells());
    }
    t
}

fn inputs(spec: &ModelSpec) -> FormulaInputs {
    FormulaInputs {
        n: spec.topology.readout_modes(),
        n_a: spec.n_a,
        n_b: spec.n_b,
        ..FormulaInputs::rates(spec.kappa, spec.lambda_eff)
    }
}

/// Closed-form steady precisions for the families the bank covers, plus the
/// thermal factor when it applies.
fn steady_closed_form(spec: &ModelSpec) -> Option<Result<(Precisions, Option<f64>), Error>> {
    let (da, db) = (spec.detuning_a, spec.detuning_b);
    let vacuum = spec.n_a == 0.0 && spec.n_b == 0.0;
    match spec.topology {
        Topology::Pair if da == 0.0 && db == 0.0 => {
            Some(closedform::thermal(&inputs(spec)).map(|t| (t.precisions, Some(t.mu))))
        }
        Topology::Pair if vacuum && da == db => Some(
            closedform::detuned(
                &FormulaInputs {
                    delta: da,
                    ..inputs(spec)
                },
                DetuningBranch::Equal,
            )
            .map(|p| (p, None)),
        ),
        Topology::Pair if vacuum && da == -db => Some(
            closedform::detuned(
                &FormulaInputs {
                    delta_prime: da,
                    ..inputs(spec)
                },
                DetuningBranch::Opposite,
            )
            .map(|p| (p, None)),
        ),
        Topology::Star(_) if vacuum && da == 0.0 && db == 0.0 && spec.star_convention == StarConvention::Aggregate => {
            Some(closedform::parallel(&inputs(spec)).map(|p| (p.precisions, None)))
        }
        _ => None,
    }
}

fn steady_numeric(spec: &ModelSpec) -> Result<(f64, f64), Error> {
    match spec.topology {
        Topology::Pair => {
            let (nr, r) = compare_steady(spec)?;
            Ok((nr.delta_xi, r.delta_xi))
        }
        Topology::Star(_) => {
            let nr = collective_assumed_precision(&build(&spec.with_coupling(Coupling::Nonreciprocal))?)?;
            let r = collective_assumed_precision(&build(&spec.with_coupling(Coupling::Reciprocal))?)?;
            Ok((nr, r))
        }
    }
}

pub fn steady_row(point: &Point, closed_form: bool) -> Row {
    let mut row = Row::new(point.spec, None);
    if let Some(e) = &point.error {
        row.flag(&format!("invalid: {e}"));
        return row;
    }
    match steady_numeric(&point.spec) {
        Ok(v) => row.set_numeric(v),
        Err(e) => row.flag_error(&e),
    }
    if closed_form {
        match steady_closed_form(&point.spec) {
            Some(Ok((p, mu))) => {
                row.set_closed_form(p);
                row.mu = mu;
            }
            Some(Err(e)) => row.flag(&format!("closed_form_error: {e}")),
            None => row.flag("no_closed_form"),
        }
    }
    row
}

pub fn transient_row(point: &Point, t: f64, closed_form: bool) -> Row {
    let mut row = Row::new(point.spec, Some(t));
    if let Some(e) = &point.error {
        row.flag(&format!("invalid: {e}"));
        return row;
    }
    let s = &point.spec;
    match compare_transient(s, t) {
        Ok((nr, r)) => row.set_numeric((nr.delta_xi, r.delta_xi)),
        Err(e) => row.flag_error(&e),
    }
    if closed_form {
        let plain =
            s.topology == Topology::Pair && s.detuning_a == 0.0 && s.detuning_b == 0.0 && s.n_a == 0.0 && s.n_b == 0.0;
        if !plain {
            row.flag("no_closed_form");
        } else {
            match closedform::pair_transient(&FormulaInputs { t, ..inputs(s) }) {
                Ok(p) => row.set_closed_form(p),
                Err(Error::UndefinedPrecision(_)) => row.flag("undefined_closed_form"),
                Err(e) => row.flag(&format!("closed_form_error: {e}")),
            }
        }
    }
    row
}

/// One steady row per sweep point.
pub fn run_steady(scenario: &Scenario) -> Result<Vec<Row>, CliError> {
    let points = scenario.points()?;
    let cf = scenario.analyses.closed_form;
    Ok(points.par_iter().map(|p| steady_row(p, cf)).collect())
}

/// One row per sweep point and time, point-major.
pub fn run_transient(scenario: &Scenario) -> Result<Vec<Row>, CliError> {
    let grid = scenario
        .analyses
        .transient
        .ok_or_else(|| CliError::Invalid("transient analysis needs a time grid".into()))?;
    let cf = scenario.analyses.closed_form;
    let jobs: Vec<(Point, f64)> = scenario
        .points()?
        .into_iter()
        .map(|p| Ok((grid.times(&p.spec)?, p)))
        .collect::<Result<Vec<_>, CliError>>()?
        .into_iter()
        .flat_map(|(times, p)| times.into_iter().map(move |t| (p.clone(), t)))
        .collect();
    if jobs.iter().any(|(_, t)| !(*t >= 0.0)) {
        return Err(CliError::Invalid("time grid must be non-negative".into()));
    }
    Ok(jobs.par_iter().map(|(p, t)| transient_row(p, *t, cf)).collect())
}

/// Every analysis the scenario selects that produces precision rows.
pub fn run_sweep(scenario: &Scenario) -> Result<Vec<Row>, CliError> {
    scenario.require_analysis()?;
    let mut rows = Vec::new();
    if scenario.analyses.steady || scenario.analyses.qfi || scenario.analyses.closed_form {
        rows.extend(run_steady(scenario)?);
    }
    if scenario.analyses.transient.is_some() {
        rows.extend(run_transient(scenario)?);
    }
    Ok(rows)
}

pub fn run_verify(tolerance: f64, monte_carlo: Option<SimConfig>) -> Result<Report, CliError> {
    if !(tolerance > 0.0) {
        return Err(CliError::Invalid(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    Ok(verify::run(&VerifyOptions { tolerance, monte_carlo }))
}

pub fn report_table(report: &Report) -> Table {
    let mut t = Table::new(&[
        "tag",
        "params",
        "numeric",
        "closed_form",
        "deviation",
        "tolerance",
        "verdict",
    ]);
    for c in &report.checks {
        t.push(vec![
            Cell::Text(c.tag.clone()),
            Cell::Text(c.params.clone()),
            Cell::num(c.numeric),
            Cell::num(c.closed_form),
            Cell::num(c.deviation),
            Cell::num(c.tolerance),
            Cell::Text(format!("{:?}", c.verdict).to_lowercase()),
        ]);
    }
    t
}

pub const MONTE_CARLO_COLUMNS: &[&str] = &[
    "kappa",
    "lambda_eff",
    "N",
    "delta",
    "n_a",
    "n_b",
    "xi",
    "dt",
    "t_end",
    "n_traj",
    "seed",
    "mode",
    "quadrature",
    "mean_sampled",
    "mean_stderr",
    "mean_exact",
    "z",
    "var_sampled",
    "var_stderr",
    "var_exact",
];

/// Default sampling for `spec`: `t_end = 20`, the largest step the
/// stability bound allows up to 0.005, and 10⁴ trajectories.
pub fn default_sim_config(spec: &ModelSpec, seed: u64) -> Result<SimConfig, CliError> {
    let sys = build(spec)?;
    let dt = SimConfig::max_dt(&sys).min(0.005);
    if !(dt > 0.0) || stability_margin(&sys).is_nan() {
        return Err(CliError::Model(Error::Unstable {
            margin: stability_margin(&sys),
        }));
    }
    Ok(SimConfig {
        dt,
        t_end: 20.0,
        n_traj: 10_000,
        seed,
    })
}

/// Sampled moments at `cfg.t_end` against the exact vacuum-started moments.
pub fn run_montecarlo(spec: &ModelSpec, cfg: &SimConfig) -> Result<Table, CliError> {
    let sys = build(spec)?;
    let sim = simulate(&sys, cfg)?;
    let exact = vacuum_evolution(&sys, &nrsense_core::model::to_quadrature(&sys), sim.state.time)?;
    let mut t = Table::new(MONTE_CARLO_COLUMNS);
    for mode in 0..sys.modes() {
        for (label, i) in [("q", q_index(mode)), ("p", p_index(mode))] {
            t.push(vec![
                Cell::num(spec.kappa),
                Cell::num(spec.lambda_eff),
                Cell::Int(spec.topology.readout_modes() as u64),
                Cell::num(spec.detuning_a),
                Cell::num(spec.n_a),
                Cell::num(spec.n_b),
                Cell::num(spec.xi),
                Cell::num(cfg.dt),
                Cell::num(cfg.t_end),
                Cell::Int(cfg.n_traj as u64),
                Cell::Int(cfg.seed),
                Cell::Text(if mode == 0 { "a".into() } else { format!("b{mode}") }),
                Cell::Text(label.into()),
                Cell::num(sim.state.mean[i]),
                Cell::num(sim.mean_stderr[i]),
                Cell::num(exact.mean[i]),
                Cell::num(sim.mean_zscore(i, exact.mean[i])),
                Cell::num(sim.state.covariance[(i, i)]),
                Cell::num(sim.variance_stderr[i]),
                Cell::num(exact.covariance[(i, i)]),
            ]);
        }
    }
    Ok(t)
}
