use std::fs;
use std::path::{Path, PathBuf};

use gpgd::diagnostics::{analyze, emit_report, DiagnosticsReport};
use gpgd::io::{encode_gpim, psnr, Image};
use gpgd::solvers::{default_x0, objective, solve, SolveTrace};
use gpgd::{Error, MeasurementOp, RngStream, Vector};
use serde::Serialize;

use crate::config::{parse, Experiment, OutputSpec};
use crate::Failure;

pub const TRACE_HEADER: &str = "n,error,objective,step";

#[derive(Debug, Serialize)]
struct Summary {
    algorithm: String,
    projection: String,
    iterations: usize,
    converged: bool,
    diverged: bool,
    final_error: Option<f64>,
    fitted_rate: Option<f64>,
    floor: Option<f64>,
    rate_bounded: Option<bool>,
    max_delta_beta: Option<f64>,
    /// `10·log10(1/MSE)` at peak 1; absent when the estimate is exact.
    psnr_db: Option<f64>,
}

pub fn run(config: &Path, out_dir: Option<&Path>) -> Result<(), Failure> {
    let text = fs::read_to_string(config).map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
    let cfg = parse(config, &text).map_err(|e| Failure::Usage(e.0))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let ex = cfg.build(base).map_err(|e| Failure::Usage(e.0))?;
    let out_base = out_dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));

    let y = ex.op.apply(&ex.target).map_err(Failure::from_core)?;
    let x0 = default_x0(&ex.op, &y, &mut RngStream::new(ex.init_seed, 0)).map_err(Failure::from_core)?;
    let result = solve(ex.algorithm, &ex.op, &y, &ex.projection, &ex.solve, &x0, Some(&ex.target));
    let (trace, diverged) = match result {
        Ok(t) => (t, None),
        Err(Error::Diverged { iteration, trace }) => (*trace, Some(iteration)),
        Err(e) => return Err(Failure::from_core(e)),
    };

    // partial outputs are written before reporting divergence
    let report = analyze(&trace, &ex.op, &ex.projection, &ex.target).ok();
    write_outputs(&cfg.outputs, &out_base, &ex, &y, &trace, report.as_ref())?;

    let fit = report.as_ref().and_then(|r| r.fit.clone());
    let final_error = trace.errors.last().copied();
    let summary = Summary {
        algorithm: serde_json::to_value(ex.algorithm).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        projection: ex.projection.name(),
        iterations: trace.iterations,
        converged: trace.converged,
        diverged: diverged.is_some(),
        final_error,
        fitted_rate: fit.as_ref().map(|f| f.r),
        floor: fit.as_ref().map(|f| f.floor),
        rate_bounded: fit.as_ref().map(|f| f.bounded),
        max_delta_beta: report.as_ref().and_then(|r| r.metrics.max_rate()),
        psnr_db: Some(psnr(trace.last(), &ex.target)).filter(|p| p.is_finite()),
    };
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    match diverged {
        Some(it) => Err(Failure::Numerical(format!("solver diverged at iteration {it}; partial outputs written"))),
        None => Ok(()),
    }
}

fn write_outputs(
    outputs: &OutputSpec,
    base: &Path,
    ex: &Experiment,
    y: &Vector,
    trace: &SolveTrace,
    report: Option<&DiagnosticsReport>,
) -> Result<(), Failure> {
    let write = |rel: &Path, bytes: &[u8]| -> Result<(), Failure> {
        let path = base.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
        }
        fs::write(&path, bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    };
    if let Some(p) = &outputs.trace {
        write(p, trace_csv(&ex.op, y, trace)?.as_bytes())?;
    }
    if let Some(r) = report {
        if let Some(p) = &outputs.diagnostics_csv {
            write(p, &emit_report(r, "csv").map_err(Failure::from_core)?)?;
        }
        if let Some(p) = &outputs.diagnostics_json {
            write(p, &emit_report(r, "json").map_err(Failure::from_core)?)?;
        }
    }
    if let Some(p) = &outputs.estimate {
        let (h, w) = ex.shape;
        let img = Image::new(h, w, trace.last().clone()).map_err(Failure::from_core)?;
        write(p, &encode_gpim(&img))?;
    }
    Ok(())
}

/// One row per iterate: target error, data misfit `½‖Ax − y‖²` and the
/// step length `‖x_n − x_{n−1}‖` (empty at `n = 0`).
pub fn trace_csv(op: &MeasurementOp, y: &Vector, trace: &SolveTrace) -> Result<String, Failure> {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for (n, x) in trace.iterates.iter().enumerate() {
        let err = trace.errors.get(n).map(|e| e.to_string()).unwrap_or_default();
        let obj = objective(op, y, x).map_err(Failure::from_core)?;
        let step = if n == 0 { String::new() } else { x.distance(&trace.iterates[n - 1]).to_string() };
        out.push_str(&format!("{n},{err},{obj},{step}\n"));
    }
    Ok(out)
}
