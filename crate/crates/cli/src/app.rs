//! Command dispatch shared by the binary and the tests.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use nrsense_core::trajectory::SimConfig;
use serde_json::json;

use crate::error::CliError;
use crate::run::{self, Row};
use crate::scenario::{self, get_field, Analyses, Format, Range, Scenario, TimeGrid};
use crate::svg::{Chart, Series};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "nrsense",
    version,
    about = "Precision of nonreciprocal versus reciprocal sensing networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Monte Carlo seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Relative tolerance for `verify`.
    #[arg(long, global = true, value_name = "REAL")]
    pub tol: Option<f64>,
    /// Override a model field of the scenario, e.g. `--set kappa=0.5`.
    #[arg(long = "set", global = true, value_name = "FIELD=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Steady-state precision table.
    Steady,
    /// Precision after a vacuum start, on the scenario's time grid.
    Transient,
    /// Every precision analysis the scenario selects.
    Sweep,
    /// Numeric versus closed-form cross-checks; exit status 1 on failure.
    Verify {
        /// Add the Monte Carlo checks.
        #[arg(long)]
        monte_carlo: bool,
    },
    /// Uncertainty ratio after a vacuum start for λ′ = 10/√2, κ ∈ {0.1, 1, 1000}.
    Fig2,
    /// Sampled moments from Langevin trajectories against the exact moments.
    Montecarlo,
}

/// Rendered output and whether the command succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub ok: bool,
    /// Human summary for standard error.
    pub summary: Option<String>,
    /// Where to write `text`; standard output when `None`.
    pub path: Option<PathBuf>,
}

fn default_time_grid() -> TimeGrid {
    TimeGrid {
        range: Range {
            start: 1e-2,
            stop: 50.0,
            n: 100,
            log: true,
        },
        relaxation_units: true,
    }
}

fn load(cli: &Cli) -> Result<Scenario, CliError> {
    let mut s = match (&cli.config, cli.command) {
        (Some(_), Command::Fig2) => {
            return Err(CliError::Invalid(
                "fig2 is a built-in scenario and takes no --config".into(),
            ))
        }
        (None, Command::Fig2) => scenario::fig2(),
        (Some(path), _) => Scenario::load(path)?,
        (None, _) => Scenario {
            analyses: Analyses {
                closed_form: true,
                ..Analyses::default()
            },
            ..Scenario::default()
        },
    };
    scenario::apply_overrides(&mut s.model, &cli.overrides)?;
    if let Some(seed) = cli.seed {
        if let Some(mc) = &mut s.analyses.monte_carlo {
            mc.seed = seed;
        }
    }
    Ok(s)
}

/// Resolved output format and destination.
pub fn destination(cli: &Cli, s: &Scenario) -> (Format, Option<PathBuf>) {
    let out = cli.out.clone().or_else(|| s.output.path.clone());
    (cli.format.unwrap_or(s.output.format), out)
}

fn label(row: &Row, fields: &[&str]) -> String {
    if fields.is_empty() {
        return "model".into();
    }
    fields
        .iter()
        .map(|f| format!("{f}={}", get_field(&row.spec, f).unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn axis_fields(s: &Scenario, from: usize) -> Vec<&str> {
    s.sweep.iter().skip(from).flat_map(|a| a.param.names()).collect()
}

fn steady_chart(s: &Scenario, rows: &[Row]) -> Chart {
    let x_field = s.sweep.first().map(|a| a.param.names()[0]).unwrap_or("kappa");
    let outer = s.sweep.first().and_then(|a| a.values().ok()).map_or(1, |v| v.len());
    let inner = (rows.len() / outer).max(1);
    let rest = axis_fields(s, 1);
    let series = (0..inner)
        .map(|j| Series {
            label: label(&rows[j], &rest),
            points: (0..outer)
                .filter_map(|k| rows.get(k * inner + j))
                .map(|r| {
                    (
                        get_field(&r.spec, x_field).unwrap_or(f64::NAN),
                        r.eta().unwrap_or(f64::NAN),
                    )
                })
                .collect(),
        })
        .collect();
    Chart {
        title: "steady uncertainty ratio".into(),
        x_label: x_field.into(),
        y_label: "eta = dxi_nr / dxi_r".into(),
        log_x: rows
            .iter()
            .all(|r| get_field(&r.spec, x_field).is_some_and(|x| x > 0.0)),
        reference_y: Some(1.0),
        series,
    }
}

fn transient_chart(s: &Scenario, rows: &[Row]) -> Chart {
    let fields = axis_fields(s, 0);
    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        let l = label(r, &fields);
        match series.last_mut() {
            Some(last) if last.label == l => {}
            _ => series.push(Series {
                label: l,
                points: Vec::new(),
            }),
        }
        let last = series.last_mut().expect("series was just pushed");
        last.points.push((r.t.unwrap_or(f64::NAN), r.eta().unwrap_or(f64::NAN)));
    }
    Chart {
        title: "uncertainty ratio after a vacuum start".into(),
        x_label: "t".into(),
        y_label: "eta = dxi_nr / dxi_r".into(),
        log_x: true,
        reference_y: Some(1.0),
        series,
    }
}

fn render_rows(format: Format, rows: &[Row], chart: impl FnOnce() -> Chart) -> Result<String, CliError> {
    match format {
        Format::Csv => run::rows_table(rows).to_csv(),
        Format::Json => Ok(run::rows_table(rows).to_json()),
        Format::Svg => Ok(chart().render()),
    }
}

fn flagged(rows: &[Row]) -> Option<String> {
    let n = rows.iter().filter(|r| r.status != "ok").count();
    (n > 0).then(|| format!("{} of {} rows flagged; see the status column", n, rows.len()))
}

/// Run one command and render its output.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let mut s = load(cli)?;
    let (format, path) = destination(cli, &s);
    let mut outcome = dispatch(cli, &mut s, format)?;
    outcome.path = path;
    Ok(outcome)
}

fn dispatch(cli: &Cli, s: &mut Scenario, format: Format) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Steady => {
            let rows = run::run_steady(s)?;
            Ok(Outcome {
                text: render_rows(format, &rows, || steady_chart(s, &rows))?,
                ok: true,
                summary: flagged(&rows),
                path: None,
            })
        }
        Command::Transient | Command::Fig2 => {
            s.analyses.transient.get_or_insert_with(default_time_grid);
            let rows = run::run_transient(s)?;
            Ok(Outcome {
                text: render_rows(format, &rows, || transient_chart(s, &rows))?,
                ok: true,
                summary: flagged(&rows),
                path: None,
            })
        }
        Command::Sweep => {
            let rows = run::run_sweep(s)?;
            let steady_only = s.analyses.transient.is_none();
            Ok(Outcome {
                text: render_rows(format, &rows, || {
                    if steady_only {
                        steady_chart(s, &rows)
                    } else {
                        transient_chart(s, &rows.iter().filter(|r| r.t.is_some()).cloned().collect::<Vec<_>>())
                    }
                })?,
                ok: true,
                summary: flagged(&rows),
                path: None,
            })
        }
        Command::Verify { monte_carlo } => {
            let tol = cli.tol.or(s.tolerance).unwrap_or(DEFAULT_TOLERANCE);
            let mc = match (s.analyses.monte_carlo, monte_carlo) {
                (Some(cfg), _) => Some(cfg),
                (None, true) => Some(SimConfig {
                    dt: 0.005,
                    t_end: 20.0,
                    n_traj: 20_000,
                    seed: cli.seed.unwrap_or(0),
                }),
                (None, false) => None,
            };
            let report = run::run_verify(tol, mc)?;
            let table = run::report_table(&report);
            let text = match format {
                Format::Csv => table.to_csv()?,
                Format::Json => {
                    let mut t = serde_json::to_string_pretty(&json!({
                        "summary": {
                            "passed": report.passed,
                            "failed": report.failed,
                            "info": report.info,
                            "tolerance": tol,
                            "ok": report.ok(),
                        },
                        "checks": table.to_json_value(),
                    }))
                    .expect("JSON values serialize");
                    t.push('\n');
                    t
                }
                Format::Svg => return Err(CliError::Invalid("verify has no svg output".into())),
            };
            Ok(Outcome {
                text,
                ok: report.ok(),
                summary: Some(format!(
                    "verify: {} passed, {} failed, {} informational (tolerance {tol:e})",
                    report.passed, report.failed, report.info
                )),
                path: None,
            })
        }
        Command::Montecarlo => {
            let cfg = match s.analyses.monte_carlo {
                Some(cfg) => cfg,
                None => run::default_sim_config(&s.model, cli.seed.unwrap_or(0))?,
            };
            let table = run::run_montecarlo(&s.model, &cfg)?;
            let text = match format {
                Format::Csv => table.to_csv()?,
                Format::Json => table.to_json(),
                Format::Svg => return Err(CliError::Invalid("montecarlo has no svg output".into())),
            };
            Ok(Outcome {
                text,
                ok: true,
                summary: None,
                path: None,
            })
        }
    }
}

/// Run, write the output and return the process exit status.
pub fn main_with(cli: &Cli) -> i32 {
    let result = execute(cli).and_then(|outcome| {
        match &outcome.path {
            Some(path) => std::fs::write(path, &outcome.text)?,
            None => {
                let mut out = std::io::stdout().lock();
                match out.write_all(outcome.text.as_bytes()).and_then(|_| out.flush()) {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                    _ => {}
                }
            }
        }
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            if let Some(summary) = outcome.summary {
                eprintln!("{summary}");
            }
            if outcome.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
