//! Per-iterate certification quantities, rate fitting and reports.
//!
//! For a solve with target `x̂`, denoiser input `w_n` and output `D(w_n)`:
//!
//! ```text
//! δ_n = ‖(I − μAᵀA)(D(w_n) − x̂)‖ / ‖D(w_n) − x̂‖
//! β_n = ‖D(w_n) − x̂‖ / ‖w_n − x̂‖
//! ```
//!
//! With `y = Ax̂` the product `δ_n β_n` is exactly the contraction factor
//! between consecutive denoiser inputs, so `max_n δ_n β_n < 1` certifies
//! linear convergence of the observed run.
//!
//! The rate envelope is `e_n ≤ r^{n/2}·‖x_0 − x*‖ + ‖x* − x̂‖`, with the
//! limit `x*` approximated by the final iterate. `r` is a rate on squared
//! errors; `√r` is the per-step factor.

use serde::{Deserialize, Serialize};

use crate::denoise::{idempotence_residual, GeneralizedProjection};
use crate::error::{Error, Result};
use crate::operators::MeasurementOp;
use crate::solvers::SolveTrace;
use crate::linalg::Vector;

const ABSENT_BELOW: f64 = 1e-14;
const MIN_FIT_LEN: usize = 5;

pub const CSV_HEADER: &str = "n,error,delta,beta,rate,idempotence";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterateMetrics {
    pub delta: Vec<Option<f64>>,
    pub beta: Vec<Option<f64>>,
    pub rate: Vec<Option<f64>>,
    pub idempotence: Vec<Option<f64>>,
}

impl IterateMetrics {
    /// Largest recorded `δ_n β_n`.
    pub fn max_rate(&self) -> Option<f64> {
        self.rate.iter().flatten().copied().reduce(f64::max)
    }

    pub fn max_idempotence(&self) -> Option<f64> {
        self.idempotence.iter().flatten().copied().reduce(f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Squared-error rate in `[0, 1]`.
    pub r: f64,
    pub sqrt_r: f64,
    pub floor: f64,
    pub initial_gap: f64,
    /// False when no `r < 1` bounds the curve and `r = 1` is reported.
    pub bounded: bool,
}

impl RateFit {
    pub fn envelope(&self, n: usize) -> f64 {
        pow_half(self.r, n) * self.initial_gap + self.floor
    }

    /// Whether `e_n ≤ envelope(n)` for every recorded error.
    pub fn covers(&self, errors: &[f64]) -> bool {
        covers(errors, self.r, self.floor, self.initial_gap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublinearFits {
    /// Sum of squared log-residuals of the best `C/n` fit.
    pub inv_n: Option<f64>,
    /// Sum of squared log-residuals of the best `C/n²` fit.
    pub inv_n2: Option<f64>,
    /// Same quantity for the linear-rate envelope, when one was fitted.
    pub linear: Option<f64>,
    /// Errors are constant or not all positive; fits are not meaningful.
    pub degenerate: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub errors: Vec<f64>,
    #[serde(flatten)]
    pub metrics: IterateMetrics,
    pub fit: Option<RateFit>,
    pub sublinear: Option<SublinearFits>,
    /// The floor (terminal error) is the smallest recorded error.
    pub floor_is_minimum: Option<bool>,
}

/// Computes `δ_n`, `β_n`, `δ_n β_n` and the idempotence residual of `P` for
/// every recorded iterate. Values whose denominator is below `1e-14` are
/// absent.
pub fn iterate_metrics(
    trace: &SolveTrace,
    op: &MeasurementOp,
    mu: f64,
    p: &GeneralizedProjection,
    target: &Vector,
) -> Result<IterateMetrics> {
    let mut m = IterateMetrics::default();
    for (n, w) in trace.denoiser_inputs.iter().enumerate() {
        let dw = match trace.projected.get(n) {
            Some(v) => v.clone(),
            None => p.apply(w)?,
        };
        let e = dw.sub(target);
        let ne = e.norm();
        let nw = w.distance(target);
        let delta = (ne >= ABSENT_BELOW).then(|| -> Result<f64> { Ok(e.axpy(-mu, &op.normal(&e)?).norm() / ne) });
        let delta = delta.transpose()?;
        let beta = (nw >= ABSENT_BELOW).then(|| ne / nw);
        m.rate.push(match (delta, beta) {
            (Some(d), Some(b)) => Some(d * b),
            _ => None,
        });
        m.delta.push(delta);
        m.beta.push(beta);
        m.idempotence.push(idempotence_residual(p, &dw)?);
    }
    Ok(m)
}

fn pow_half(r: f64, n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        r.powf(n as f64 / 2.0)
    }
}

fn covers(errors: &[f64], r: f64, floor: f64, gap: f64) -> bool {
    let slack = 1e-12 * errors.first().copied().unwrap_or(0.0).max(floor).max(gap).max(f64::MIN_POSITIVE);
    errors.iter().enumerate().all(|(n, e)| *e <= pow_half(r, n) * gap + floor + slack)
}

/// Smallest `r ∈ [0, 1]` (bisection to `1e-6`) such that
/// `e_n ≤ r^{n/2}·initial_gap + floor` for every `n`.
pub fn fit_linear_rate_errors(errors: &[f64], floor: f64, initial_gap: f64) -> Result<RateFit> {
    if errors.len() < MIN_FIT_LEN {
        return Err(Error::ShortTrace(errors.len()));
    }
    let make = |r: f64, bounded: bool| RateFit { r, sqrt_r: r.sqrt(), floor, initial_gap, bounded };
    if covers(errors, 0.0, floor, initial_gap) {
        return Ok(make(0.0, true));
    }
    if !covers(errors, 1.0 - 1e-6, floor, initial_gap) {
        return Ok(make(1.0, false));
    }
    let (mut lo, mut hi) = (0.0, 1.0 - 1e-6);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if covers(errors, mid, floor, initial_gap) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(make(hi, true))
}

/// Rate envelope of a solve: floor is the terminal error and the initial
/// gap is `‖x_0 − x_final‖`.
pub fn fit_linear_rate(trace: &SolveTrace) -> Result<RateFit> {
    let floor = *trace.errors.last().ok_or(Error::ShortTrace(0))?;
    let gap = trace.iterates[0].distance(trace.last());
    fit_linear_rate_errors(&trace.errors, floor, gap)
}

/// Fits `log e_n = log C − p·log n` for `p = 1, 2` over `n ≥ 1`.
pub fn sublinear_fits(errors: &[f64], envelope: Option<&RateFit>) -> SublinearFits {
    let tail = errors.get(1..).unwrap_or(&[]);
    let positive = !tail.is_empty() && tail.iter().all(|e| *e > 0.0);
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(*e), b.max(*e)));
    let constant = hi - lo <= 1e-15 * hi.abs();
    let degenerate = !positive || constant;
    let fit = |p: f64| -> Option<f64> {
        if degenerate {
            return None;
        }
        let shifted: Vec<f64> = tail.iter().enumerate().map(|(i, e)| e.ln() + p * ((i + 1) as f64).ln()).collect();
        let a = shifted.iter().sum::<f64>() / shifted.len() as f64;
        Some(shifted.iter().map(|s| (s - a).powi(2)).sum())
    };
    let linear = envelope.filter(|_| positive).map(|env| {
        tail.iter()
            .enumerate()
            .map(|(i, e)| (e.ln() - env.envelope(i + 1).max(f64::MIN_POSITIVE).ln()).powi(2))
            .sum()
    });
    SublinearFits { inv_n: fit(1.0), inv_n2: fit(2.0), linear, degenerate }
}

/// Full diagnostics of a solve against its target.
pub fn analyze(
    trace: &SolveTrace,
    op: &MeasurementOp,
    p: &GeneralizedProjection,
    target: &Vector,
) -> Result<DiagnosticsReport> {
    let metrics = iterate_metrics(trace, op, trace.mu, p, target)?;
    let errors = trace.errors.clone();
    let fit = if errors.len() >= MIN_FIT_LEN { Some(fit_linear_rate(trace)?) } else { None };
    let sublinear = fit.as_ref().map(|f| sublinear_fits(&errors, Some(f)));
    let floor_is_minimum = errors.last().map(|f| errors.iter().all(|e| *f <= e + 1e-12));
    Ok(DiagnosticsReport { errors, metrics, fit, sublinear, floor_is_minimum })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Serializes a report. CSV has one row per recorded iterate under
/// [`CSV_HEADER`], with empty cells for absent values; JSON carries the
/// whole report with absent values as `null`.
pub fn emit_report(report: &DiagnosticsReport, format: &str) -> Result<Vec<u8>> {
    match format.parse::<ReportFormat>()? {
        ReportFormat::Csv => {
            let m = &report.metrics;
            let rows = report.errors.len().max(m.delta.len());
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for n in 0..rows {
                let at = |v: &Vec<Option<f64>>| v.get(n).copied().flatten();
                out.push_str(&format!(
                    "{n},{},{},{},{},{}\n",
                    cell(report.errors.get(n).copied()),
                    cell(at(&m.delta)),
                    cell(at(&m.beta)),
                    cell(at(&m.rate)),
                    cell(at(&m.idempotence)),
                ));
            }
            Ok(out.into_bytes())
        }
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(report).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}
