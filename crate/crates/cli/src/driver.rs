//! Runs a configured problem and writes its artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use goafem::catalog::lookup;
use goafem::history::{fit_slope, target_slope, write_csv};
use goafem::mesh::write_dump;
use goafem::{run_adaptive, AdaptiveOptions, AdaptiveRun, ConvergenceRecord, StopReason};

use crate::config::{unknown_problem, RunConfig};

/// Levels used by the least-squares rate fit.
pub const FIT_WINDOW: usize = 6;

#[derive(Debug)]
pub enum RunError {
    Config(anyhow::Error),
    Solver(anyhow::Error),
    Io(anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) | RunError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration: {e:#}"),
            RunError::Solver(e) => write!(f, "solver: {e:#}"),
            RunError::Io(e) => write!(f, "output: {e:#}"),
        }
    }
}

impl std::error::Error for RunError {}

#[derive(Debug)]
pub enum Outcome {
    Completed(AdaptiveRun),
    /// Stopped before the requested level count without a solver error.
    Stopped(AdaptiveRun, String),
}

pub fn history_path(out: &Path) -> PathBuf {
    out.join("history.csv")
}

fn write_history(out: &Path, history: &[ConvergenceRecord]) -> anyhow::Result<()> {
    let path = history_path(out);
    let mut w = BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
    write_csv(history, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Slope of the QoI error (or the estimate, without a reference value)
/// against `sqrt(ndofs)` over the last [`FIT_WINDOW`] levels.
pub fn ratefit_report(config: &RunConfig, regime: f64, history: &[ConvergenceRecord]) -> String {
    let ndofs: Vec<usize> = history.iter().map(|r| r.ndofs).collect();
    let use_qoi = history.iter().any(|r| r.rel_err.is_finite());
    let err: Vec<f64> = history.iter().map(|r| if use_qoi { r.rel_err } else { r.estimate }).collect();
    let slope = fit_slope(&ndofs, &err, FIT_WINDOW);
    let mut s = String::new();
    s.push_str(&format!("problem {}\n", config.problem));
    s.push_str(&format!("estimator {}\n", config.estimator));
    s.push_str(&format!("p {}\ndp {}\n", config.p, config.dp));
    s.push_str(&format!("quantity {}\n", if use_qoi { "rel_err" } else { "estimate" }));
    s.push_str("abscissa sqrt_ndofs\n");
    s.push_str(&format!("window {}\n", FIT_WINDOW.min(history.len())));
    match slope {
        Some(v) => s.push_str(&format!("slope {v:.6}\n")),
        None => s.push_str("slope nan\n"),
    }
    s.push_str(&format!("regime {regime}\n"));
    s.push_str(&format!("target {:.6}\n", target_slope(config.p, regime)));
    s
}

/// Parses the `slope` line of a rate-fit report.
pub fn parse_ratefit_slope(text: &str) -> Option<f64> {
    text.lines().find_map(|l| l.strip_prefix("slope ")).and_then(|v| v.trim().parse().ok())
}

/// Runs the configured problem. `log` receives one line per level.
pub fn run(config: &RunConfig, mut log: impl FnMut(&str)) -> Result<Outcome, RunError> {
    let entry = lookup(&config.problem).ok_or_else(|| RunError::Config(unknown_problem(&config.problem).into()))?;
    let prob = entry.problem(&config.params).map_err(|e| RunError::Config(e.into()))?;
    let mesh = entry.initial_mesh(&config.params).map_err(|e| RunError::Config(e.into()))?;
    let out = config.out.clone();
    fs::create_dir_all(&out).with_context(|| out.display().to_string()).map_err(RunError::Io)?;

    let opts = AdaptiveOptions {
        kind: config.estimator,
        p: config.p,
        dp: config.dp,
        theta: config.theta,
        max_levels: config.levels,
        ndof_cap: config.ndof_cap,
        scaling: config.scaling,
        ..AdaptiveOptions::default()
    };
    let mut history = Vec::new();
    let mut io_error = None;
    let result = run_adaptive(&prob, &mesh, &opts, |view| {
        let r = view.record;
        log(&format!(
            "level {:>2}  ndofs {:>8}  elems {:>7}  estimate {:.4e}  q(u_h) {:.12}  rel_err {:.3e}",
            r.level, r.ndofs, r.nelems, r.estimate, r.qoi_uh, r.rel_err
        ));
        history.push(r.clone());
        // rewritten per level so a failed run leaves its partial history
        let written = write_history(&out, &history).and_then(|_| {
            if config.emit_mesh {
                let path = out.join(format!("mesh_{}.txt", r.level));
                let mut w = BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
                write_dump(view.mesh, Some(&view.indicators.local), &mut w)?;
                w.flush()?;
            }
            Ok(())
        });
        if let (Err(e), None) = (written, &io_error) {
            io_error = Some(e);
        }
    });
    if let Some(e) = io_error {
        return Err(RunError::Io(e));
    }
    write_history(&out, &result.history).map_err(RunError::Io)?;
    let report = ratefit_report(config, entry.regime(&config.params), &result.history);
    fs::write(out.join("ratefit.txt"), report).context("ratefit.txt").map_err(RunError::Io)?;
    match &result.stop {
        StopReason::MaxLevels => Ok(Outcome::Completed(result)),
        StopReason::NdofCap => Ok(Outcome::Stopped(result, "dof cap reached".into())),
        StopReason::EstimatorExhausted => Ok(Outcome::Stopped(result, "estimator vanished".into())),
        StopReason::Failed(e) => Err(RunError::Solver(anyhow::Error::new(e.clone()))),
    }
}
