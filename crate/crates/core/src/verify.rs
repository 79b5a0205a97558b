//! Cross-checks of the numeric pipeline against the closed-form bank.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::closedform::{self, DetuningBranch, FormulaInputs};
use crate::error::Result;
use crate::fisher::{collective_assumed_precision, compare_steady, compare_transient, steady_readout};
use crate::model::{build, q_index, Coupling, ModelSpec, Topology};
use crate::moments::steady_mean;
use crate::trajectory::{simulate, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported for inspection, not judged.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub tag: String,
    pub params: String,
    pub numeric: f64,
    pub closed_form: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl Check {
    fn relative(tag: &str, params: String, numeric: f64, closed_form: f64, tolerance: f64) -> Self {
        let deviation = relative_deviation(numeric, closed_form);
        Self {
            tag: tag.into(),
            params,
            numeric,
            closed_form,
            deviation,
            tolerance,
            verdict: if deviation <= tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        }
    }

    fn info(tag: &str, params: String, numeric: f64, closed_form: f64) -> Self {
        Self {
            tag: tag.into(),
            params,
            numeric,
            closed_form,
            deviation: relative_deviation(numeric, closed_form),
            tolerance: f64::NAN,
            verdict: Verdict::Info,
        }
    }

    fn failed(tag: &str, params: String, err: impl std::fmt::Display) -> Self {
        Self {
            tag: tag.into(),
            params: format!("{params} error={err}"),
            numeric: f64::NAN,
            closed_form: f64::NAN,
            deviation: f64::NAN,
            tolerance: f64::NAN,
            verdict: Verdict::Fail,
        }
    }
}

pub fn relative_deviation(numeric: f64, reference: f64) -> f64 {
    if numeric == reference {
        0.0
    } else {
        (numeric - reference).abs() / reference.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Relative tolerance for the deterministic checks.
    pub tolerance: f64,
    pub monte_carlo: Option<SimConfig>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            monte_carlo: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
    pub info: usize,
}

impl Report {
    pub fn new(checks: Vec<Check>) -> Self {
        let count = |v| checks.iter().filter(|c| c.verdict == v).count();
        Self {
            passed: count(Verdict::Pass),
            failed: count(Verdict::Fail),
            info: count(Verdict::Info),
            checks,
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 10f64.powf(lo.log10() + (hi.log10() - lo.log10()) * i as f64 / (n - 1) as f64))
        .collect()
}

fn collect<F>(out: &mut Vec<Check>, tag: &str, params: String, f: F)
where
    F: FnOnce() -> Result<Vec<Check>>,
{
    match f() {
        Ok(mut checks) => out.append(&mut checks),
        Err(e) => out.push(Check::failed(tag, params, e)),
    }
}

fn pair_checks(tol: f64, out: &mut Vec<Check>) {
    for &k in &log_grid(1e-2, 1e2, 5) {
        for &l in &log_grid(1e-2, 1e2, 5) {
            let params = format!("kappa={k} lambda_eff={l}");
            collect(out, "pair.steady", params.clone(), || {
                let (nr, r) = compare_steady(&ModelSpec::pair(k, l, Coupling::Nonreciprocal))?;
                let cf = closedform::pair_steady(&FormulaInputs::rates(k, l))?;
                let nr_readout = steady_readout(&ModelSpec::pair(k, l, Coupling::Nonreciprocal))?;
                Ok(vec![
                    Check::relative(
                        "pair.steady.nonreciprocal",
                        params.clone(),
                        nr.delta_xi,
                        cf.nonreciprocal,
                        tol,
                    ),
                    Check::relative("pair.steady.reciprocal", params.clone(), r.delta_xi, cf.reciprocal, tol),
                    Check::relative(
                        "pair.steady.ratio",
                        params.clone(),
                        nr.eta.unwrap_or(f64::NAN),
                        cf.eta,
                        tol,
                    ),
                    Check::relative(
                        "homodyne.saturates_qfi",
                        params.clone(),
                        nr_readout.homodyne_delta_xi,
                        nr_readout.report.delta_xi,
                        tol,
                    ),
                ])
            });
        }
    }
}

fn parallel_checks(tol: f64, out: &mut Vec<Check>) {
    for (k, l) in [(1.0, 1.0), (0.1, 1.0), (1.0, 0.1)] {
        for n in [1usize, 2, 4, 8, 16, 32, 64] {
            let params = format!("kappa={k} lambda_eff={l} N={n}");
            collect(out, "parallel", params.clone(), || {
                let nr = collective_assumed_precision(&build(&ModelSpec::star(n, k, l, Coupling::Nonreciprocal))?)?;
                let r = collective_assumed_precision(&build(&ModelSpec::star(n, k, l, Coupling::Reciprocal))?)?;
                let cf = closedform::parallel(&FormulaInputs {
                    n,
                    ..FormulaInputs::rates(k, l)
                })?;
                let mut checks = vec![
                    Check::relative(
                        "parallel.nonreciprocal",
                        params.clone(),
                        nr,
                        cf.precisions.nonreciprocal,
                        tol,
                    ),
                    Check::relative("parallel.reciprocal", params.clone(), r, cf.precisions.reciprocal, tol),
                    Check::relative("parallel.ratio", params.clone(), nr / r, cf.precisions.eta, tol),
                ];
                if k == l {
                    checks.push(Check::relative(
                        "parallel.equal_rates",
                        params.clone(),
                        nr / r,
                        cf.eta_equal_rates,
                        tol,
                    ));
                }
                Ok(checks)
            });
        }
    }
}

fn detuned_checks(tol: f64, out: &mut Vec<Check>) {
    for (k, l) in [(1.0, 1.0), (0.1, 2.0), (3.0, 0.5)] {
        for d in [0.5, 1.0, 2.0] {
            for branch in [DetuningBranch::Equal, DetuningBranch::Opposite] {
                let (da, db, name) = match branch {
                    DetuningBranch::Equal => (d, d, "detuned.equal"),
                    DetuningBranch::Opposite => (d, -d, "detuned.opposite"),
                };
                let params = format!("kappa={k} lambda_eff={l} detuning_a={da} detuning_b={db}");
                collect(out, name, params.clone(), || {
                    let spec = ModelSpec {
                        detuning_a: da,
                        detuning_b: db,
                        ..ModelSpec::pair(k, l, Coupling::Nonreciprocal)
                    };
                    let (nr, r) = compare_steady(&spec)?;
                    let inputs = FormulaInputs {
                        delta: d,
                        delta_prime: d,
                        ..FormulaInputs::rates(k, l)
                    };
                    let cf = closedform::detuned(&inputs, branch)?;
                    Ok(vec![
                        Check::relative(
                            &format!("{name}.nonreciprocal"),
                            params.clone(),
                            nr.delta_xi,
                            cf.nonreciprocal,
                            tol,
                        ),
                        Check::relative(
                            &format!("{name}.reciprocal"),
                            params.clone(),
                            r.delta_xi,
                            cf.reciprocal,
                            tol,
                        ),
                        Check::relative(
                            &format!("{name}.ratio"),
                            params.clone(),
                            nr.eta.unwrap_or(f64::NAN),
                            cf.eta,
                            tol,
                        ),
                    ])
                });
            }
        }
    }
}

fn transient_checks(tol: f64, out: &mut Vec<Check>) {
    let l = 10.0 / SQRT_2;
    for k in [0.1, 1.0, 1000.0] {
        let scale = 1.0 / (k + l);
        for mult in [0.5, 1.0, 3.0, 10.0, 40.0] {
            let t = mult * scale;
            let params = format!("kappa={k} lambda_eff={l} t={t}");
            collect(out, "transient", params.clone(), || {
                let (nr, r) = compare_transient(&ModelSpec::pair(k, l, Coupling::Nonreciprocal), t)?;
                let cf = closedform::pair_transient(&FormulaInputs {
                    t,
                    ..FormulaInputs::rates(k, l)
                })?;
                Ok(vec![
                    Check::relative(
                        "transient.nonreciprocal",
                        params.clone(),
                        nr.delta_xi,
                        cf.nonreciprocal,
                        tol,
                    ),
                    Check::relative("transient.reciprocal", params.clone(), r.delta_xi, cf.reciprocal, tol),
                    Check::relative(
                        "transient.ratio",
                        params.clone(),
                        nr.eta.unwrap_or(f64::NAN),
                        cf.eta,
                        tol,
                    ),
                ])
            });
        }
    }
}

/// Thermal checks. The verdict-bearing row compares the exact squared ratio
/// `(η/η_vacuum)²` with the closed-form thermal factor, which holds to all
/// orders under [`closedform::LambdaReading::Effective`]. The deviation of
/// the exact `η` from the closed-form `η` itself is first order in `n` and is
/// reported as information only.
fn thermal_checks(tol: f64, out: &mut Vec<Check>) {
    for (k, l) in [(1.0, 1.0), (0.2, 2.0), (3.0, 0.7)] {
        for n in [1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let params = format!("kappa={k} lambda_eff={l} n_a={n} n_b={n}");
            collect(out, "thermal", params.clone(), || {
                let spec = ModelSpec {
                    n_a: n,
                    n_b: n,
                    ..ModelSpec::pair(k, l, Coupling::Nonreciprocal)
                };
                let (nr, _) = compare_steady(&spec)?;
                let eta = nr.eta.unwrap_or(f64::NAN);
                let eta0 = closedform::pair_eta(k, l);
                let cf = closedform::thermal(&FormulaInputs {
                    n_a: n,
                    n_b: n,
                    ..FormulaInputs::rates(k, l)
                })?;
                let mu = cf.mu_equal_temperature.unwrap_or(cf.mu);
                Ok(vec![
                    Check::relative("thermal.variance_ratio", params.clone(), (eta / eta0).powi(2), mu, tol),
                    Check::info("thermal.eta_deviation", params.clone(), eta, cf.precisions.eta),
                ])
            });
        }
    }
}

fn monte_carlo_checks(cfg: &SimConfig, out: &mut Vec<Check>) {
    let spec = ModelSpec::default();
    let params = format!(
        "kappa={} lambda_eff={} xi={} dt={} t_end={} n_traj={} seed={}",
        spec.kappa, spec.lambda_eff, spec.xi, cfg.dt, cfg.t_end, cfg.n_traj, cfg.seed
    );
    collect(out, "montecarlo", params.clone(), || {
        let sys = build(&spec)?;
        let expected = crate::model::to_quadrature_pair(steady_mean(&sys)?[1]).0;
        let sim = simulate(&sys, cfg)?;
        let qb = q_index(1);
        let z = sim.mean_zscore(qb, expected).abs();
        let var = sim.state.covariance[(qb, qb)];
        Ok(vec![
            Check {
                tag: "montecarlo.mean_qb".into(),
                params: format!("{params} z={z}"),
                numeric: sim.state.mean[qb],
                closed_form: expected,
                deviation: z,
                tolerance: 4.0,
                verdict: if z <= 4.0 { Verdict::Pass } else { Verdict::Fail },
            },
            Check::relative("montecarlo.var_qb", params.clone(), var, 0.5, 0.05),
        ])
    });
}

/// Run every cross-check and collect the results in a fixed order.
pub fn run(opts: &VerifyOptions) -> Report {
    let tol = opts.tolerance;
    let mut checks = Vec::new();
    pair_checks(tol, &mut checks);
    parallel_checks(tol, &mut checks);
    detuned_checks(tol, &mut checks);
    transient_checks(tol, &mut checks);
    thermal_checks(tol, &mut checks);
    if let Some(cfg) = &opts.monte_carlo {
        monte_carlo_checks(cfg, &mut checks);
    }
    Report::new(checks)
}

/// Readout topology label used in reports.
pub fn topology_label(t: Topology) -> String {
    match t {
        Topology::Pair => "pair".into(),
        Topology::Star(n) => format!("star{n}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_passes() {
        let report = run(&VerifyOptions::default());
        let failed: Vec<_> = report.checks.iter().filter(|c| c.verdict == Verdict::Fail).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert!(report.passed > 100);
        assert!(report.info > 0);
    }

    #[test]
    fn impossible_tolerance_fails() {
        let report = run(&VerifyOptions {
            tolerance: -1.0,
            monte_carlo: None,
        });
        assert!(!report.ok());
    }
}
