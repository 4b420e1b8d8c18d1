//! `certify` and `ric`: constants of a projection or an operator, as JSON.

use clap::{Args, ValueEnum};
use gpgd::certify::{certify, grid_suite};
use gpgd::operators::{optimal_scale_with_trials, restricted_spectrum, ric_monte_carlo, RicReport, ScaleResult};
use gpgd::{GeneralizedProjection, MeasurementOp, ModelSet, RngStream};
use serde::Serialize;

use crate::{seeded_subspace, seeded_union, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelTag {
    Sparse,
    HaarSparse,
    Subspace,
    Union,
    EpsLines,
    LowRank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProjectionTag {
    Orth,
    HaarHt,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OperatorTag {
    Identity,
    Gaussian,
    Mask,
    Blur,
}

/// Model flags shared by `certify` and `ric`.
#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "sparse")]
    pub model: ModelTag,
    /// Ambient dimension.
    #[arg(long = "N", visible_alias = "n", default_value_t = 8)]
    pub n: usize,
    /// Sparsity.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Subspace dimension for `subspace` and `union`.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Number of subspaces for `union`.
    #[arg(long, default_value_t = 3)]
    pub subspaces: usize,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long, default_value_t = 4)]
    pub rows: usize,
    #[arg(long, default_value_t = 4)]
    pub cols: usize,
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    /// Seed of random subspaces and of sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ModelArgs {
    pub fn build(&self) -> Result<ModelSet, Failure> {
        match self.model {
            ModelTag::Sparse => ModelSet::sparse(self.n, self.k),
            ModelTag::HaarSparse => ModelSet::haar_sparse(self.n, self.k),
            ModelTag::Subspace => seeded_subspace(self.n, self.dim, self.seed),
            ModelTag::Union => seeded_union(self.n, self.dim, self.subspaces, self.seed),
            ModelTag::EpsLines => ModelSet::eps_lines(self.eps),
            ModelTag::LowRank => ModelSet::low_rank(self.rows, self.cols, self.rank),
        }
        .map_err(|e| Failure::Usage(e.to_string()))
    }
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "orth")]
    pub projection: ProjectionTag,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Also bisect an upper bound over the witnesses.
    #[arg(long)]
    pub upper: bool,
    /// Adds a `steps^N` grid on `[-1, 1]^N` to the bisection points.
    #[arg(long)]
    pub grid: Option<usize>,
}

pub fn run_certify(args: &CertifyArgs) -> Result<(), Failure> {
    let set = args.model.build()?;
    let n = set.ambient_dim();
    let p = match args.projection {
        ProjectionTag::Orth => GeneralizedProjection::orth(set.clone()),
        ProjectionTag::HaarHt => GeneralizedProjection::haar_ht(n, args.model.k).map_err(|e| Failure::Usage(e.to_string()))?,
        ProjectionTag::Identity => GeneralizedProjection::identity(),
    };
    if let Some(steps) = args.grid {
        let total = (steps.max(2) as f64).powi(n as i32);
        if total > 1e6 {
            return Err(Failure::Usage(format!("grid of {total:.0} points is too large")));
        }
    }
    let grid = args.grid.map(|s| grid_suite(n, s)).unwrap_or_default();
    let suite = (args.upper || args.grid.is_some()).then_some((grid.as_slice(), false));
    let rng = RngStream::new(args.model.seed, 0);
    let cert = certify(&p, &set, &rng, args.trials, suite).map_err(Failure::from_core)?;
    println!("{}", serde_json::to_string_pretty(&cert).expect("certificate serializes"));
    Ok(())
}

#[derive(Args, Debug)]
pub struct RicArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub operator: OperatorTag,
    /// Rows of the Gaussian operator.
    #[arg(long, default_value_t = 6)]
    pub m: usize,
    /// Seed of the operator.
    #[arg(long, default_value_t = 0)]
    pub op_seed: u64,
    /// Erased fraction for `mask`.
    #[arg(long, default_value_t = 0.3)]
    pub fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Step size at which the constant is reported.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// Sampled lower bound instead of exact enumeration.
    #[arg(long)]
    pub monte_carlo: bool,
    #[arg(long, default_value_t = 20_000)]
    pub trials: usize,
}

#[derive(Serialize)]
struct RicOutput {
    #[serde(flatten)]
    report: RicReport,
    optimal: ScaleResult,
}

pub fn run_ric(args: &RicArgs) -> Result<(), Failure> {
    if !(args.mu > 0.0 && args.mu.is_finite()) {
        return Err(Failure::Usage(format!("--mu must be positive, got {}", args.mu)));
    }
    let set = args.model.build()?;
    let n = set.ambient_dim();
    let op = match args.operator {
        OperatorTag::Identity => Ok(MeasurementOp::identity(n)),
        OperatorTag::Gaussian => MeasurementOp::gaussian(args.m, n, &mut RngStream::new(args.op_seed, 0)),
        OperatorTag::Mask => MeasurementOp::random_mask(n, args.fraction, &mut RngStream::new(args.op_seed, 0)),
        OperatorTag::Blur => MeasurementOp::gaussian_blur(args.sigma, 1, n),
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let rng = RngStream::new(args.model.seed, 0);
    let (report, optimal) = if args.monte_carlo {
        let r = ric_monte_carlo(&op, &set, args.mu, &rng, args.trials).map_err(Failure::from_core)?;
        let s = optimal_scale_with_trials(&op, &set, false, &rng, args.trials).map_err(Failure::from_core)?;
        (r, s)
    } else {
        let sp = restricted_spectrum(&op, &set).map_err(|e| match e {
            gpgd::Error::EnumerationBudget { .. } => Failure::Usage(format!("{e} (--monte-carlo)")),
            other => Failure::from_core(other),
        })?;
        let s = optimal_scale_with_trials(&op, &set, true, &rng, args.trials).map_err(Failure::from_core)?;
        (sp.report(args.mu), s)
    };
    let out = RicOutput { report, optimal };
    println!("{}", serde_json::to_string_pretty(&out).expect("report serializes"));
    Ok(())
}
