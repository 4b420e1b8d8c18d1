//! Iterative recovery algorithms and the exhaustive sparse oracle.
//!
//! With `∇(x) = Aᵀ(Ax − y)`:
//!
//! | solver      | update                                   | denoiser input `w_n` |
//! |-------------|------------------------------------------|----------------------|
//! | `gpgd`      | `x⁺ = P(x) − μ∇(P(x))`                   | `x_n`                |
//! | `pnp_pgm`   | `x⁺ = D(x − μ∇(x))`                      | `x_n − μ∇(x_n)`      |
//! | `gm_red`    | `x⁺ = x − μ(∇(x) + λ(x − D(x)))`         | `x_n`                |
//! | `landweber` | `x⁺ = x − μ∇(x)`                         | `x_n`                |
//!
//! Every solve records `x_0 … x_n`, the denoiser input at each of them, and
//! (when diagnostics are requested) the denoiser output.

use serde::{Deserialize, Serialize};

use crate::denoise::GeneralizedProjection;
use crate::error::{Error, Result};
use crate::linalg::{binomial, least_squares, Combinations, RngStream, Vector};
use crate::operators::MeasurementOp;

pub const ORACLE_BUDGET: u128 = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default)]
    pub record_diagnostics: bool,
}

fn default_max_iters() -> usize {
    500
}

fn default_stop_tol() -> f64 {
    1e-12
}

impl SolveConfig {
    pub fn new(mu: f64) -> Self {
        Self { mu, lambda: 0.0, max_iters: default_max_iters(), stop_tol: default_stop_tol(), record_diagnostics: false }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn with_stop_tol(mut self, tol: f64) -> Self {
        self.stop_tol = tol;
        self
    }

    pub fn with_diagnostics(mut self, on: bool) -> Self {
        self.record_diagnostics = on;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {}", self.mu)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Gpgd,
    PnpPgm,
    GmRed,
    Landweber,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveTrace {
    pub algorithm: Algorithm,
    pub mu: f64,
    /// `x_0 … x_n`
    pub iterates: Vec<Vector>,
    /// Denoiser input `w_k` for every iterate `x_k`.
    pub denoiser_inputs: Vec<Vector>,
    /// `D(w_k)` for `k < n`, recorded only with diagnostics on.
    pub projected: Vec<Vector>,
    /// `‖x_k − x̂‖` when a target was supplied.
    pub errors: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl SolveTrace {
    pub fn last(&self) -> &Vector {
        self.iterates.last().expect("trace holds x_0")
    }
}

/// Seeded uniform `[0, 1)` noise shifted so its mean equals the mean of `Aᵀy`.
pub fn default_x0(op: &MeasurementOp, y: &Vector, rng: &mut RngStream) -> Result<Vector> {
    let back = op.adjoint(y)?;
    let noise = Vector::new((0..op.input_dim()).map(|_| rng.next_f64()).collect())?;
    let shift = back.mean() - noise.mean();
    Ok(Vector::from_raw(noise.as_slice().iter().map(|v| v + shift).collect()))
}

pub fn gpgd(
    op: &MeasurementOp,
    y: &Vector,
    p: &GeneralizedProjection,
    cfg: &SolveConfig,
    x0: &Vector,
    target: Option<&Vector>,
) -> Result<SolveTrace> {
    run(Algorithm::Gpgd, op, y, Some(p), cfg, x0, target)
}

pub fn pnp_pgm(
    op: &MeasurementOp,
    y: &Vector,
    d: &GeneralizedProjection,
    cfg: &SolveConfig,
    x0: &Vector,
    target: Option<&Vector>,
) -> Result<SolveTrace> {
    run(Algorithm::PnpPgm, op, y, Some(d), cfg, x0, target)
}

pub fn gm_red(
    op: &MeasurementOp,
    y: &Vector,
    d: &GeneralizedProjection,
    cfg: &SolveConfig,
    x0: &Vector,
    target: Option<&Vector>,
) -> Result<SolveTrace> {
    run(Algorithm::GmRed, op, y, Some(d), cfg, x0, target)
}

pub fn landweber(
    op: &MeasurementOp,
    y: &Vector,
    cfg: &SolveConfig,
    x0: &Vector,
    target: Option<&Vector>,
) -> Result<SolveTrace> {
    run(Algorithm::Landweber, op, y, None, cfg, x0, target)
}

/// Dispatch by algorithm tag. `d` is ignored by Landweber.
pub fn solve(
    algorithm: Algorithm,
    op: &MeasurementOp,
    y: &Vector,
    d: &GeneralizedProjection,
    cfg: &SolveConfig,
    x0: &Vector,
    target: Option<&Vector>,
) -> Result<SolveTrace> {
    let d = (algorithm != Algorithm::Landweber).then_some(d);
    run(algorithm, op, y, d, cfg, x0, target)
}

fn run(
    algorithm: Algorithm,
    op: &MeasurementOp,
    y: &Vector,
    d: Option<&GeneralizedProjection>,
    cfg: &SolveConfig,
    x0: &Vector,
    target: Option<&Vector>,
) -> Result<SolveTrace> {
    cfg.validate()?;
    x0.check_dim(op.input_dim())?;
    y.check_dim(op.output_dim())?;
    if let Some(t) = target {
        t.check_dim(op.input_dim())?;
    }
    let mu = cfg.mu;
    let bound = 1e8 * (1.0 + op.adjoint(y)?.norm());
    let apply_d = |v: &Vector| -> Result<Vector> {
        match d {
            Some(d) => d.apply(v),
            None => Ok(v.clone()),
        }
    };
    let input_of = |x: &Vector| -> Result<Vector> {
        match algorithm {
            Algorithm::PnpPgm => Ok(x.axpy(-mu, &op.gradient(x, y)?)),
            _ => Ok(x.clone()),
        }
    };

    let mut trace = SolveTrace {
        algorithm,
        mu,
        iterates: vec![x0.clone()],
        denoiser_inputs: Vec::new(),
        projected: Vec::new(),
        errors: Vec::new(),
        converged: false,
        iterations: 0,
    };
    if let Some(t) = target {
        trace.errors.push(x0.distance(t));
    }

    let mut x = x0.clone();
    for n in 0..cfg.max_iters {
        let w = input_of(&x)?;
        let (dw, next) = match algorithm {
            Algorithm::Gpgd => {
                let p = apply_d(&w)?;
                let next = p.axpy(-mu, &op.gradient(&p, y)?);
                (p, next)
            }
            Algorithm::PnpPgm => {
                let p = apply_d(&w)?;
                (p.clone(), p)
            }
            Algorithm::GmRed => {
                let p = apply_d(&w)?;
                let reg = x.sub(&p).scale(cfg.lambda);
                let next = x.axpy(-mu, &op.gradient(&x, y)?.add(&reg));
                (p, next)
            }
            Algorithm::Landweber => {
                let next = x.axpy(-mu, &op.gradient(&x, y)?);
                (x.clone(), next)
            }
        };
        trace.denoiser_inputs.push(w);
        if cfg.record_diagnostics {
            trace.projected.push(dw);
        }
        if !next.is_finite() || next.norm() > bound {
            trace.iterations = n;
            let w_last = input_of(&x).unwrap_or_else(|_| x.clone());
            trace.denoiser_inputs.truncate(trace.iterates.len() - 1);
            trace.projected.truncate(trace.iterates.len() - 1);
            trace.denoiser_inputs.push(w_last);
            return Err(Error::Diverged { iteration: n + 1, trace: Box::new(trace) });
        }
        let change = next.distance(&x) / x.norm().max(1.0);
        if let Some(t) = target {
            trace.errors.push(next.distance(t));
        }
        trace.iterates.push(next.clone());
        trace.iterations = n + 1;
        x = next;
        if change <= cfg.stop_tol {
            trace.converged = true;
            break;
        }
    }
    trace.denoiser_inputs.push(input_of(&x)?);
    Ok(trace)
}

/// Global minimizer of `½‖Ax − y‖²` over `k`-sparse `x`, by solving least
/// squares on every support of size `min(k, N)`. Ties keep the first
/// support in lexicographic order.
pub fn oracle_sparse(op: &MeasurementOp, y: &Vector, k: usize) -> Result<Vector> {
    let a = op.to_dense()?;
    y.check_dim(a.rows())?;
    let n = a.cols();
    let k = k.min(n);
    if k == 0 {
        return Err(Error::InvalidParameter("sparsity must be positive".into()));
    }
    let count = binomial(n, k);
    if count > ORACLE_BUDGET {
        return Err(Error::EnumerationBudget { needed: count, budget: ORACLE_BUDGET });
    }
    let mut best: Option<(f64, Vector)> = None;
    for support in Combinations::new(n, k) {
        let sub = a.select_columns(&support);
        let coef = least_squares(&sub, y)?;
        let resid = sub.matvec(&coef)?.sub(y).norm_sq();
        let better = match &best {
            None => true,
            Some((b, _)) => resid < *b - 1e-14 * (1.0 + *b),
        };
        if better {
            let mut x = vec![0.0; n];
            for (t, &i) in support.iter().enumerate() {
                x[i] = coef[t];
            }
            best = Some((resid, Vector::from_raw(x)));
        }
    }
    Ok(best.expect("at least one support").1)
}

/// `½‖Ax − y‖²`
pub fn objective(op: &MeasurementOp, y: &Vector, x: &Vector) -> Result<f64> {
    Ok(0.5 * op.apply(x)?.sub(y).norm_sq())
}
