//! Subcommand bodies. Each returns an error carrying its exit code.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use valagg_core::diagnostics::{concentration_envelope, last_iterate_envelope};
use valagg_core::trace_io::{format_f64, read_trace_csv, write_trace_csv, TraceRow};
use valagg_core::verify::{run_suite, SuiteOptions};
use valagg_core::{run_loop, RunTrace};

use crate::config::{Emit, ExperimentConfig, PointConfig, RawConfig};
use crate::error::{CliError, CliResult};
use crate::summary::{summarize, SummaryRecord};
use crate::svg::{render_loglog, Series, SeriesClass};

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILE: &str = "plot.svg";
pub const SWEEP_JSONL: &str = "sweep.jsonl";
pub const SWEEP_CSV: &str = "sweep.csv";

/// Output files opened before any computation so an unwritable target fails fast.
struct OutputFiles {
    dir: PathBuf,
    csv: Option<File>,
    json: Option<File>,
    svg: Option<File>,
}

fn create(path: PathBuf) -> CliResult<File> {
    File::create(&path).map_err(|e| CliError::io(path, e))
}

impl OutputFiles {
    fn open(dir: &Path, emit: Emit) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let open = |on: bool, name: &str| on.then(|| create(dir.join(name))).transpose();
        Ok(Self {
            dir: dir.to_path_buf(),
            csv: open(emit.csv, TRACE_FILE)?,
            json: open(emit.json, SUMMARY_FILE)?,
            svg: open(emit.svg, PLOT_FILE)?,
        })
    }

    fn write(self, trace: &RunTrace, summary: &SummaryRecord) -> CliResult<()> {
        let dir = self.dir;
        if let Some(f) = self.csv {
            let path = dir.join(TRACE_FILE);
            let mut w = BufWriter::new(f);
            write_trace_csv(trace, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(path, e))?;
        }
        if let Some(f) = self.json {
            let path = dir.join(SUMMARY_FILE);
            let mut w = BufWriter::new(f);
            serde_json::to_writer_pretty(&mut w, summary)
                .map_err(std::io::Error::from)
                .and_then(|_| writeln!(w))
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(path, e))?;
        }
        if let Some(mut f) = self.svg {
            let path = dir.join(PLOT_FILE);
            let rows = valagg_core::trace_io::trace_rows(trace);
            let c = &trace.effective_constants;
            let consts = PlotConstants {
                theta: Some(c.theta),
                alpha: Some(c.alpha),
                g2: Some(c.g2),
                eps: Some(trace.base_constants.eps_tilde),
            };
            let series = plot_series(PlotKind::SelfValue, &[(trace.label.clone(), rows, consts)]);
            match render_loglog(
                PlotKind::SelfValue.title(),
                "n",
                PlotKind::SelfValue.y_label(),
                &series,
            ) {
                Ok(svg) => f
                    .write_all(svg.as_bytes())
                    .map_err(|e| CliError::io(path, e))?,
                Err(why) => {
                    drop(f);
                    let _ = fs::remove_file(&path);
                    eprintln!("note: no plot written: {why}");
                }
            }
        }
        Ok(())
    }
}

fn execute(point: &PointConfig) -> CliResult<(RunTrace, SummaryRecord)> {
    let (inst, cfg) = point.build()?;
    let start = Instant::now();
    let trace = run_loop(&inst, &cfg)?;
    let elapsed = start.elapsed().as_millis() as u64;
    let summary = summarize(&trace, point.echo(), elapsed);
    Ok((trace, summary))
}

fn one_line(s: &SummaryRecord) -> String {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), format_f64);
    let failed: Vec<&str> = s
        .bounds
        .iter()
        .filter(|(_, b)| b.applicable && !b.passed)
        .map(|(k, _)| k.as_str())
        .collect();
    format!(
        "{}: {} iterations, final F {}, fitted exponent {} (theory {}), {}{}",
        s.label,
        s.iterations_completed,
        opt(s.final_self_value),
        opt(s.fitted_exponent),
        opt(s.theoretical_exponent),
        if s.convergent {
            "convergent"
        } else {
            "not convergent"
        },
        if failed.is_empty() {
            String::new()
        } else {
            format!(", bounds failed: {}", failed.join(","))
        }
    )
}

pub fn run(raw: &RawConfig) -> CliResult<()> {
    let cfg = ExperimentConfig::resolve(
        raw,
        Emit {
            csv: true,
            json: true,
            svg: false,
        },
    )?;
    if let Some(axis) = cfg.swept_axes().first() {
        let location = raw
            .get(axis)
            .map(|e| e.source.to_string())
            .unwrap_or_default();
        return Err(CliError::Config {
            location,
            field: axis.to_string(),
            reason: "lists are only accepted by `sweep`".into(),
        });
    }
    let point = cfg.points()?.remove(0);
    // Reject bad parameters before touching the filesystem.
    point.build()?;
    let files = OutputFiles::open(&cfg.out, cfg.emit)?;
    let (trace, summary) = execute(&point)?;
    files.write(&trace, &summary)?;
    println!("{}", one_line(&summary));
    if let Some(why) = &summary.aborted {
        println!("aborted: {why}");
    }
    println!("wrote {}", cfg.out.display());
    Ok(())
}

fn axis_value(p: &PointConfig, axis: &str) -> String {
    match axis {
        "theta" => format_f64(p.theta),
        "lambda" => format_f64(p.lambda),
        "q" => format_f64(p.q),
        "m0" => p.m0.to_string(),
        "r" => format_f64(p.r),
        "iters" => p.iters.to_string(),
        "seed" => p.seed.to_string(),
        _ => String::new(),
    }
}

pub fn sweep(raw: &RawConfig) -> CliResult<()> {
    let cfg = ExperimentConfig::resolve(
        raw,
        Emit {
            csv: true,
            json: true,
            svg: false,
        },
    )?;
    let points = cfg.points()?;
    for p in &points {
        p.build()?;
    }
    let axes = {
        let swept = cfg.swept_axes();
        if swept.is_empty() {
            vec!["theta"]
        } else {
            swept
        }
    };

    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let jsonl = create(cfg.out.join(SWEEP_JSONL))?;
    let csv = create(cfg.out.join(SWEEP_CSV))?;
    let points_dir = cfg.out.join("points");
    fs::create_dir_all(&points_dir).map_err(|e| CliError::io(&points_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<CliResult<SummaryRecord>> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let files = OutputFiles::open(&points_dir.join(format!("{i:04}")), cfg.emit)?;
                let (trace, summary) = execute(p)?;
                files.write(&trace, &summary)?;
                Ok(summary)
            })
            .collect()
    });
    let summaries = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    let tags: BTreeSet<&str> = summaries
        .iter()
        .flat_map(|s| s.bounds.keys().map(String::as_str))
        .collect();
    let jsonl_path = cfg.out.join(SWEEP_JSONL);
    let csv_path = cfg.out.join(SWEEP_CSV);
    let mut jw = BufWriter::new(jsonl);
    let mut cw = BufWriter::new(csv);
    let header: Vec<String> = std::iter::once("point".to_string())
        .chain(axes.iter().map(|a| a.to_string()))
        .chain(["fitted_exponent".to_string()])
        .chain(tags.iter().map(|t| format!("{t}_passed")))
        .chain(["convergent".to_string()])
        .collect();
    writeln!(cw, "{}", header.join(",")).map_err(|e| CliError::io(&csv_path, e))?;
    for (i, (p, s)) in points.iter().zip(&summaries).enumerate() {
        let line = serde_json::to_string(s).map_err(|e| CliError::io(&jsonl_path, e.into()))?;
        writeln!(jw, "{line}").map_err(|e| CliError::io(&jsonl_path, e))?;
        let row: Vec<String> = std::iter::once(format!("{i:04}"))
            .chain(axes.iter().map(|a| axis_value(p, a)))
            .chain([s.fitted_exponent.map_or(String::new(), format_f64)])
            .chain(tags.iter().map(|t| match s.bounds.get(*t) {
                Some(b) if b.applicable => b.passed.to_string(),
                _ => "na".into(),
            }))
            .chain([s.convergent.to_string()])
            .collect();
        writeln!(cw, "{}", row.join(",")).map_err(|e| CliError::io(&csv_path, e))?;
        println!("[{i:04}] {}", one_line(s));
    }
    jw.flush().map_err(|e| CliError::io(&jsonl_path, e))?;
    cw.flush().map_err(|e| CliError::io(&csv_path, e))?;
    println!("wrote {} points to {}", summaries.len(), cfg.out.display());
    Ok(())
}

pub fn verify(only: &[String], theta_scale: f64) -> CliResult<()> {
    let options = SuiteOptions {
        theta_scale,
        only: only.to_vec(),
    };
    let reports = run_suite(&options);
    if reports.is_empty() {
        return Err(CliError::Invalid(format!(
            "no criterion matches `{}`",
            only.join(",")
        )));
    }
    for r in &reports {
        print!("{r}");
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| {
            let checks: Vec<&str> = r
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            format!("criterion {} ({})", r.id, checks.join(", "))
        })
        .collect();
    if failed.is_empty() {
        println!("all {} criteria passed", reports.len());
        Ok(())
    } else {
        Err(CliError::Verification(failed.join("; ")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    SelfValue,
    SCurve,
    StepNorm,
}

impl PlotKind {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "self_value" => Ok(PlotKind::SelfValue),
            "s_curve" => Ok(PlotKind::SCurve),
            "step_norm" => Ok(PlotKind::StepNorm),
            other => Err(CliError::Invalid(format!(
                "unknown plot kind `{other}` (self_value|s_curve|step_norm)"
            ))),
        }
    }

    fn title(&self) -> &'static str {
        match self {
            PlotKind::SelfValue => "Excess self-value F(x_n, x_n) − ε̃",
            PlotKind::SCurve => "Concentration S_n",
            PlotKind::StepNorm => "Step length ‖x_{n+1} − x_n‖",
        }
    }

    fn y_label(&self) -> &'static str {
        match self {
            PlotKind::SelfValue => "F − ε̃",
            PlotKind::SCurve => "S_n",
            PlotKind::StepNorm => "step",
        }
    }
}

/// Constants used for envelopes; any may be missing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlotConstants {
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub g2: Option<f64>,
    pub eps: Option<f64>,
}

impl PlotConstants {
    fn or(self, other: PlotConstants) -> PlotConstants {
        PlotConstants {
            theta: self.theta.or(other.theta),
            alpha: self.alpha.or(other.alpha),
            g2: self.g2.or(other.g2),
            eps: self.eps.or(other.eps),
        }
    }
}

fn sibling_summary(trace_path: &Path) -> Option<SummaryRecord> {
    let path = trace_path.parent()?.join(SUMMARY_FILE);
    serde_json::from_str(&fs::read_to_string(path).ok()?).ok()
}

fn summary_constants(s: &SummaryRecord) -> PlotConstants {
    PlotConstants {
        theta: s.effective_constants.theta,
        alpha: s.effective_constants.alpha,
        g2: s.effective_constants.g2,
        eps: s.base_constants.eps_tilde,
    }
}

/// Legend labels from the config echo: only the keys that differ between
/// traces, falling back to the run label or the file path.
fn legend_labels(paths: &[PathBuf], summaries: &[Option<SummaryRecord>]) -> Vec<String> {
    let configs: Option<Vec<&BTreeMap<String, String>>> = summaries
        .iter()
        .map(|s| s.as_ref().map(|s| &s.config))
        .collect();
    if let Some(configs) = configs.filter(|c| c.len() > 1) {
        let keys: BTreeSet<&String> = configs.iter().flat_map(|c| c.keys()).collect();
        let differing: Vec<&String> = keys
            .into_iter()
            .filter(|k| configs.iter().any(|c| c.get(*k) != configs[0].get(*k)))
            .collect();
        if !differing.is_empty() {
            return configs
                .iter()
                .map(|c| {
                    differing
                        .iter()
                        .map(|k| format!("{k}={}", c.get(*k).map_or("-", String::as_str)))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
        }
    }
    paths
        .iter()
        .zip(summaries)
        .map(|(p, s)| match s {
            Some(s) if paths.len() == 1 => s.label.clone(),
            _ => p.display().to_string(),
        })
        .collect()
}

type Points = Vec<(f64, f64)>;

fn plot_series(kind: PlotKind, traces: &[(String, Vec<TraceRow>, PlotConstants)]) -> Vec<Series> {
    let mut out = Vec::new();
    for (label, rows, c) in traces {
        let n = |r: &TraceRow| r.n as f64;
        let (empirical, envelope): (Points, Option<Points>) = match kind {
            PlotKind::SelfValue => {
                let eps = c.eps.unwrap_or(0.0);
                let emp = rows.iter().map(|r| (n(r), r.self_value - eps)).collect();
                let env = match (c.theta, c.alpha, c.g2) {
                    (Some(t), Some(a), Some(g)) if t < 1.0 => Some(
                        rows.iter()
                            .map(|r| (n(r), last_iterate_envelope(t, g, a, r.n)))
                            .collect(),
                    ),
                    _ => None,
                };
                (emp, env)
            }
            PlotKind::SCurve => {
                let emp = rows
                    .iter()
                    .filter_map(|r| r.s_n.map(|s| (n(r), s)))
                    .collect();
                let s2 = rows.iter().find(|r| r.n == 2).and_then(|r| r.s_n);
                let env = match (c.theta, s2) {
                    (Some(t), Some(s2)) if t <= 1.0 => Some(
                        rows.iter()
                            .filter(|r| r.n >= 2)
                            .map(|r| (n(r), concentration_envelope(t, r.n, s2)))
                            .collect(),
                    ),
                    _ => None,
                };
                (emp, env)
            }
            PlotKind::StepNorm => {
                let emp = rows
                    .iter()
                    .filter_map(|r| r.step_norm.map(|s| (n(r), s)))
                    .collect();
                let env = c.theta.map(|t| {
                    rows.iter()
                        .filter_map(|r| r.s_n.map(|s| (n(r), t * s / n(r))))
                        .collect()
                });
                (emp, env)
            }
        };
        out.push(Series {
            label: label.clone(),
            class: SeriesClass::Empirical,
            points: empirical,
        });
        if let Some(points) = envelope {
            out.push(Series {
                label: format!("{label} (envelope)"),
                class: SeriesClass::Envelope,
                points,
            });
        }
    }
    out
}

pub fn plot(
    traces: &[PathBuf],
    kind: PlotKind,
    out: &Path,
    overrides: PlotConstants,
) -> CliResult<()> {
    if traces.is_empty() {
        return Err(CliError::Invalid("plot needs at least one trace".into()));
    }
    let mut rows_all = Vec::with_capacity(traces.len());
    let mut summaries = Vec::with_capacity(traces.len());
    for path in traces {
        let f = File::open(path).map_err(|e| CliError::io(path, e))?;
        let rows = read_trace_csv(BufReader::new(f))
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        if rows.is_empty() {
            return Err(CliError::Invalid(format!(
                "{}: trace has no rows",
                path.display()
            )));
        }
        rows_all.push(rows);
        summaries.push(sibling_summary(path));
    }
    let labels = legend_labels(traces, &summaries);
    let mut loaded = Vec::with_capacity(traces.len());
    for (((path, rows), summary), label) in traces.iter().zip(rows_all).zip(&summaries).zip(labels)
    {
        let consts = overrides.or(summary.as_ref().map(summary_constants).unwrap_or_default());
        if consts.theta.is_none() {
            eprintln!(
                "note: no constants for {}; drawing it without an envelope",
                path.display()
            );
        }
        loaded.push((label, rows, consts));
    }
    let series = plot_series(kind, &loaded);
    let svg =
        render_loglog(kind.title(), "n", kind.y_label(), &series).map_err(CliError::Invalid)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(out, svg).map_err(|e| CliError::io(out, e))?;
    println!("wrote {}", out.display());
    Ok(())
}
