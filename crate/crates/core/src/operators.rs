//! Measurement operators and restricted isometry analysis.
//!
//! The restricted isometry constant of `B = μAᵀA` over a model is the
//! smallest `δ` with `‖(I − B)v‖ ≤ δ‖v‖` on every secant `v`. For sparse
//! models the secant set of `Σ_k` is `Σ_2k`, so the exact constant is an
//! extreme eigenvalue problem over all Gram submatrices of size `2k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{binomial, haar_inverse, sym_eigen, Combinations, Matrix, RngStream, Vector};
use crate::models::ModelSet;

/// Upper limit on enumerated supports for the exact constant.
pub const RIC_ENUMERATION_BUDGET: u128 = 1_000_000;

/// Upper limit on subspace pairs for the exact constant of a union.
const PAIR_BUDGET: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasurementOp {
    Dense { matrix: Matrix },
    /// Keeps the listed coordinates (sorted, distinct) of a length-`n` input.
    Mask { n: usize, kept: Vec<usize> },
    /// Periodic correlation with an odd-length kernel, on a signal of length
    /// `height·width` (`height = 1` for 1-D signals, separable on images).
    CircularBlur { kernel: Vector, height: usize, width: usize },
}

impl MeasurementOp {
    pub fn dense(matrix: Matrix) -> Self {
        MeasurementOp::Dense { matrix }
    }

    pub fn identity(n: usize) -> Self {
        MeasurementOp::Dense { matrix: Matrix::identity(n) }
    }

    /// `m × n` matrix with i.i.d. `N(0, 1/m)` entries, row-major from `rng`.
    pub fn gaussian(m: usize, n: usize, rng: &mut RngStream) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let scale = 1.0 / (m as f64).sqrt();
        let data = (0..m * n).map(|_| rng.normal() * scale).collect();
        Ok(MeasurementOp::Dense { matrix: Matrix::new(m, n, data)? })
    }

    pub fn mask(n: usize, kept: Vec<usize>) -> Result<Self> {
        let mut kept = kept;
        kept.sort_unstable();
        kept.dedup();
        if kept.iter().any(|&i| i >= n) {
            return Err(Error::InvalidParameter("mask index out of range".into()));
        }
        if kept.is_empty() {
            return Err(Error::InvalidParameter("mask keeps no coordinates".into()));
        }
        Ok(MeasurementOp::Mask { n, kept })
    }

    /// Erases `round(fraction·n)` coordinates chosen uniformly at random.
    pub fn random_mask(n: usize, erase_fraction: f64, rng: &mut RngStream) -> Result<Self> {
        if !(0.0..1.0).contains(&erase_fraction) {
            return Err(Error::InvalidParameter(format!("erase fraction {erase_fraction} outside [0, 1)")));
        }
        let erased = (erase_fraction * n as f64).round() as usize;
        let gone = rng.choose_distinct(n, erased);
        let mut keep = vec![true; n];
        for i in gone {
            keep[i] = false;
        }
        Self::mask(n, (0..n).filter(|&i| keep[i]).collect())
    }

    pub fn blur(kernel: Vector, height: usize, width: usize) -> Result<Self> {
        if kernel.dim() % 2 == 0 {
            return Err(Error::InvalidParameter("blur kernel length must be odd".into()));
        }
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter("blur shape must be positive".into()));
        }
        Ok(MeasurementOp::CircularBlur { kernel, height, width })
    }

    pub fn gaussian_blur(sigma: f64, height: usize, width: usize) -> Result<Self> {
        Self::blur(gaussian_kernel(sigma)?, height, width)
    }

    pub fn input_dim(&self) -> usize {
        match self {
            MeasurementOp::Dense { matrix } => matrix.cols(),
            MeasurementOp::Mask { n, .. } => *n,
            MeasurementOp::CircularBlur { height, width, .. } => height * width,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            MeasurementOp::Dense { matrix } => matrix.rows(),
            MeasurementOp::Mask { kept, .. } => kept.len(),
            MeasurementOp::CircularBlur { height, width, .. } => height * width,
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.input_dim())?;
        match self {
            MeasurementOp::Dense { matrix } => matrix.matvec(x),
            MeasurementOp::Mask { kept, .. } => Ok(Vector::from_raw(kept.iter().map(|&i| x[i]).collect())),
            MeasurementOp::CircularBlur { kernel, height, width } => {
                Ok(blur2(x.as_slice(), kernel.as_slice(), *height, *width, false))
            }
        }
    }

    pub fn adjoint(&self, y: &Vector) -> Result<Vector> {
        y.check_dim(self.output_dim())?;
        match self {
            MeasurementOp::Dense { matrix } => matrix.matvec_t(y),
            MeasurementOp::Mask { n, kept } => {
                let mut out = vec![0.0; *n];
                for (j, &i) in kept.iter().enumerate() {
                    out[i] = y[j];
                }
                Ok(Vector::from_raw(out))
            }
            MeasurementOp::CircularBlur { kernel, height, width } => {
                Ok(blur2(y.as_slice(), kernel.as_slice(), *height, *width, true))
            }
        }
    }

    /// `AᵀA x`
    pub fn normal(&self, x: &Vector) -> Result<Vector> {
        self.adjoint(&self.apply(x)?)
    }

    /// `Aᵀ(Ax − y)`
    pub fn gradient(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.adjoint(&self.apply(x)?.sub(y))
    }

    /// The operator as an explicit matrix (columns are images of basis vectors).
    pub fn to_dense(&self) -> Result<Matrix> {
        if let MeasurementOp::Dense { matrix } = self {
            return Ok(matrix.clone());
        }
        let n = self.input_dim();
        let cols = (0..n).map(|j| self.apply(&Vector::basis(n, j))).collect::<Result<Vec<_>>>()?;
        Matrix::from_columns(&cols)
    }

    /// Largest eigenvalue of `AᵀA` by power iteration.
    pub fn normal_spectral_radius(&self) -> Result<f64> {
        let n = self.input_dim();
        let mut v = Vector::from_raw((0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 101) as f64).collect());
        v = v.scale(1.0 / v.norm());
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let w = self.normal(&v)?;
            let next = w.norm();
            if next == 0.0 {
                return Ok(0.0);
            }
            v = w.scale(1.0 / next);
            if (next - lambda).abs() <= 1e-14 * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        Ok(lambda)
    }
}

/// Normalized Gaussian taps of length `ceil(6σ)` rounded up to odd.
pub fn gaussian_kernel(sigma: f64) -> Result<Vector> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("blur sigma must be positive, got {sigma}")));
    }
    let mut len = (6.0 * sigma).ceil() as usize;
    if len % 2 == 0 {
        len += 1;
    }
    let half = (len / 2) as f64;
    let taps: Vec<f64> = (0..len).map(|j| (-(j as f64 - half).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = taps.iter().sum();
    Vector::new(taps.into_iter().map(|t| t / total).collect())
}

/// Periodic correlation along one axis. `forward`: `out[i] = Σ_j k_j x[i + j − h]`;
/// adjoint: `out[i] = Σ_j k_j x[i − j + h]`.
fn blur1(x: &[f64], kernel: &[f64], adjoint: bool) -> Vec<f64> {
    let n = x.len() as isize;
    let h = (kernel.len() / 2) as isize;
    (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, k)| {
                    let off = j as isize - h;
                    let idx = if adjoint { i - off } else { i + off };
                    k * x[idx.rem_euclid(n) as usize]
                })
                .sum()
        })
        .collect()
}

fn blur2(x: &[f64], kernel: &[f64], height: usize, width: usize, adjoint: bool) -> Vector {
    let mut out = vec![0.0; height * width];
    for r in 0..height {
        let row = blur1(&x[r * width..(r + 1) * width], kernel, adjoint);
        out[r * width..(r + 1) * width].copy_from_slice(&row);
    }
    if height > 1 {
        for c in 0..width {
            let col: Vec<f64> = (0..height).map(|r| out[r * width + c]).collect();
            let col = blur1(&col, kernel, adjoint);
            for r in 0..height {
                out[r * width + c] = col[r];
            }
        }
    }
    Vector::from_raw(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RicMode {
    ExactEnumeration,
    MonteCarloLower,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RicReport {
    pub delta: f64,
    pub mode: RicMode,
    pub mu: f64,
    /// Unit secant direction attaining `delta`.
    pub witness: Vector,
}

impl RicReport {
    /// `‖(I − μAᵀA)w‖ / ‖w‖` for the stored witness.
    pub fn recheck(&self, op: &MeasurementOp) -> Result<f64> {
        contraction(op, self.mu, &self.witness)
    }
}

fn contraction(op: &MeasurementOp, mu: f64, v: &Vector) -> Result<f64> {
    let bv = op.normal(v)?;
    Ok(v.axpy(-mu, &bv).norm() / v.norm())
}

/// Secant subspace reduced to two small Gram blocks: with `Q` orthonormal,
/// `h1 = QᵀGQ` and `h2 = (GQ)ᵀ(GQ)` for `G = AᵀA`, so that
/// `‖(I − μG)Qc‖² = cᵀ(I − 2μh1 + μ²h2)c`.
#[derive(Clone, Debug)]
struct SecantBlock {
    h1: Matrix,
    h2: Matrix,
    embed: Embedding,
}

#[derive(Clone, Debug)]
enum Embedding {
    Support(Vec<usize>),
    Basis(Matrix),
}

impl SecantBlock {
    fn contraction_form(&self, mu: f64) -> Matrix {
        let d = self.h1.rows();
        let mut m = Matrix::identity(d);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, m.get(i, j) - 2.0 * mu * self.h1.get(i, j) + mu * mu * self.h2.get(i, j));
            }
        }
        m
    }

    /// Largest `‖(I − μG)v‖/‖v‖` on the block, with its coefficient vector.
    fn norm(&self, mu: f64) -> (f64, Vector) {
        let e = sym_eigen(&self.contraction_form(mu)).expect("square block");
        let last = e.values.dim() - 1;
        (e.values[last].max(0.0).sqrt(), e.vectors.column(last))
    }

    fn embed(&self, coeffs: &Vector, n: usize) -> Vector {
        match &self.embed {
            Embedding::Support(sup) => {
                let mut w = vec![0.0; n];
                for (t, &i) in sup.iter().enumerate() {
                    w[i] = coeffs[t];
                }
                Vector::from_raw(w)
            }
            Embedding::Basis(q) => q.matvec(coeffs).expect("conformant"),
        }
    }
}

/// The secant set of a model as an enumerated union of subspaces.
///
/// The constant is `δ(μ) = max_blocks σ_max((I − μAᵀA)Q)`, computed from the
/// cached blocks for each `μ`. The extreme eigenvalues `λ_min`, `λ_max` of
/// the compressed Gram `QᵀGQ` over all blocks give the two-sided RIP form
/// `max(|1 − μλ_min|, |1 − μλ_max|) ≤ δ(μ)`, minimized at `2/(λ_min + λ_max)`.
#[derive(Clone, Debug)]
pub struct RestrictedSpectrum {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub subspaces: u128,
    ambient: usize,
    blocks: Vec<SecantBlock>,
}

impl RestrictedSpectrum {
    fn from_blocks(blocks: Vec<SecantBlock>, ambient: usize) -> Self {
        let (lambda_min, lambda_max) = blocks
            .par_iter()
            .map(|b| {
                let e = sym_eigen(&b.h1).expect("square block");
                (e.values[0], e.values[e.values.dim() - 1])
            })
            .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        RestrictedSpectrum { lambda_min, lambda_max, subspaces: blocks.len() as u128, ambient, blocks }
    }

    /// Max block norm and the lowest attaining block index.
    fn worst(&self, mu: f64) -> (f64, usize) {
        self.blocks
            .par_iter()
            .enumerate()
            .map(|(i, b)| (b.norm(mu).0, i))
            .reduce(|| (f64::NEG_INFINITY, usize::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
    }

    pub fn delta(&self, mu: f64) -> f64 {
        self.worst(mu).0
    }

    pub fn report(&self, mu: f64) -> RicReport {
        let (delta, idx) = self.worst(mu);
        let block = &self.blocks[idx];
        let witness = block.embed(&block.norm(mu).1, self.ambient);
        RicReport { delta, mode: RicMode::ExactEnumeration, mu, witness }
    }

    /// `max(|1 − μλ_min|, |1 − μλ_max|)`, the two-sided RIP constant of `μAᵀA`.
    pub fn rip_delta(&self, mu: f64) -> f64 {
        (1.0 - mu * self.lambda_min).abs().max((1.0 - mu * self.lambda_max).abs())
    }

    /// `2/(λ_min + λ_max)`, the minimizer of [`Self::rip_delta`].
    pub fn optimal_mu(&self) -> f64 {
        2.0 / (self.lambda_min + self.lambda_max)
    }
}

/// Secant spectrum of `G = AᵀA` over all coordinate supports of size `s`.
pub fn sparse_spectrum(op: &MeasurementOp, s: usize) -> Result<RestrictedSpectrum> {
    let a = op.to_dense()?;
    support_spectrum(&a.gram(), s)
}

fn support_spectrum(gram: &Matrix, s: usize) -> Result<RestrictedSpectrum> {
    let n = gram.rows();
    let s = s.min(n);
    if s == 0 {
        return Err(Error::InvalidParameter("support size must be positive".into()));
    }
    let count = binomial(n, s);
    if count > RIC_ENUMERATION_BUDGET {
        return Err(Error::EnumerationBudget { needed: count, budget: RIC_ENUMERATION_BUDGET });
    }
    let g2 = gram.matmul(gram)?;
    let supports: Vec<Vec<usize>> = Combinations::new(n, s).collect();
    let blocks = supports
        .into_par_iter()
        .map(|sup| SecantBlock { h1: gram.principal(&sup), h2: g2.principal(&sup), embed: Embedding::Support(sup) })
        .collect();
    Ok(RestrictedSpectrum::from_blocks(blocks, n))
}

/// Secant spectrum over a list of orthonormal spanning matrices.
fn basis_spectrum(op: &MeasurementOp, spans: Vec<Matrix>) -> Result<RestrictedSpectrum> {
    let n = op.input_dim();
    let blocks = spans
        .into_par_iter()
        .map(|q| {
            let d = q.cols();
            let gq: Vec<Vector> = (0..d).map(|j| op.normal(&q.column(j))).collect::<Result<_>>()?;
            let aq: Vec<Vector> = (0..d).map(|j| op.apply(&q.column(j))).collect::<Result<_>>()?;
            let mut h1 = Matrix::zeros(d, d);
            let mut h2 = Matrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    h1.set(i, j, aq[i].dot(&aq[j]));
                    h2.set(i, j, gq[i].dot(&gq[j]));
                }
            }
            Ok(SecantBlock { h1, h2, embed: Embedding::Basis(q) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RestrictedSpectrum::from_blocks(blocks, n))
}

/// Orthonormal basis of the span of the given columns (Gram–Schmidt, twice).
fn orthonormal_span(columns: &[Vector]) -> Option<Matrix> {
    let mut out: Vec<Vector> = Vec::new();
    for c in columns {
        let mut w = c.clone();
        for _ in 0..2 {
            for q in &out {
                w = w.axpy(-q.dot(&w), q);
            }
        }
        let n = w.norm();
        if n > 1e-10 * (1.0 + c.norm()) {
            out.push(w.scale(1.0 / n));
        }
    }
    Matrix::from_columns(&out).ok()
}

/// Exact secant spectrum of `AᵀA` for `set`, when the secant set is a
/// finite union of subspaces small enough to enumerate.
pub fn restricted_spectrum(op: &MeasurementOp, set: &ModelSet) -> Result<RestrictedSpectrum> {
    if op.input_dim() != set.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: set.ambient_dim(), found: op.input_dim() });
    }
    match set {
        ModelSet::SparseK { k, .. } => sparse_spectrum(op, 2 * k),
        ModelSet::HaarSparseK { n, k } => {
            // the synthesis operator is orthogonal, so supports of Haar
            // coefficients map to orthonormal spans in the ambient space
            let s = (2 * k).min(*n);
            let count = binomial(*n, s);
            if count > RIC_ENUMERATION_BUDGET {
                return Err(Error::EnumerationBudget { needed: count, budget: RIC_ENUMERATION_BUDGET });
            }
            let atoms = (0..*n).map(|j| haar_inverse(&Vector::basis(*n, j))).collect::<Result<Vec<_>>>()?;
            let spans = Combinations::new(*n, s)
                .map(|sup| Matrix::from_columns(&sup.iter().map(|&j| atoms[j].clone()).collect::<Vec<_>>()))
                .collect::<Result<Vec<_>>>()?;
            basis_spectrum(op, spans)
        }
        ModelSet::Subspace { basis } => basis_spectrum(op, vec![basis.clone()]),
        ModelSet::UnionOfSubspaces { bases } => {
            let pairs = bases.len() * (bases.len() + 1) / 2;
            if pairs > PAIR_BUDGET {
                return Err(Error::EnumerationBudget { needed: pairs as u128, budget: PAIR_BUDGET as u128 });
            }
            let mut spans = Vec::with_capacity(pairs);
            for i in 0..bases.len() {
                for j in i..bases.len() {
                    let mut cols: Vec<Vector> = (0..bases[i].cols()).map(|t| bases[i].column(t)).collect();
                    if j != i {
                        cols.extend((0..bases[j].cols()).map(|t| bases[j].column(t)));
                    }
                    if let Some(q) = orthonormal_span(&cols) {
                        spans.push(q);
                    }
                }
            }
            basis_spectrum(op, spans)
        }
        ModelSet::LowRank { .. } => Err(Error::InvalidParameter(
            "no exact restricted isometry constant for low-rank models; use the Monte Carlo estimator".into(),
        )),
    }
}

/// Exact constant over `s`-sparse secants by support enumeration.
pub fn ric_exact_sparse(op: &MeasurementOp, mu: f64, s: usize) -> Result<RicReport> {
    Ok(sparse_spectrum(op, s)?.report(mu))
}

/// Fixed sample of secant directions, with the two quadratic quantities
/// that determine `‖(I − μAᵀA)v‖² = 1 − 2μ‖Av‖² + μ²‖AᵀAv‖²`.
struct SecantSample {
    dirs: Vec<Vector>,
    a2: Vec<f64>,
    g2: Vec<f64>,
}

impl SecantSample {
    fn draw(op: &MeasurementOp, set: &ModelSet, rng: &RngStream, trials: usize) -> Result<Self> {
        let rows = (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut sub = rng.substream(i as u64);
                let v = set.secant_sample(&mut sub)?;
                let av = op.apply(&v)?;
                let gv = op.adjoint(&av)?;
                Ok((v, av.norm_sq(), gv.norm_sq()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut s = SecantSample { dirs: Vec::new(), a2: Vec::new(), g2: Vec::new() };
        for (v, a, g) in rows {
            s.dirs.push(v);
            s.a2.push(a);
            s.g2.push(g);
        }
        Ok(s)
    }

    fn value(&self, i: usize, mu: f64) -> f64 {
        (1.0 - 2.0 * mu * self.a2[i] + mu * mu * self.g2[i]).max(0.0).sqrt()
    }

    /// Max ratio and its lowest attaining index.
    fn delta(&self, mu: f64) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for i in 0..self.dirs.len() {
            let v = self.value(i, mu);
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }
}

/// Sampled lower bound on the constant: the largest contraction ratio over
/// `trials` secant directions. Trial `i` draws from `rng.substream(i)`.
pub fn ric_monte_carlo(
    op: &MeasurementOp,
    set: &ModelSet,
    mu: f64,
    rng: &RngStream,
    trials: usize,
) -> Result<RicReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let sample = SecantSample::draw(op, set, rng, trials)?;
    let (_, idx) = sample.delta(mu);
    let witness = sample.dirs[idx].clone();
    // report the directly evaluated ratio so the witness rechecks exactly
    let delta = contraction(op, mu, &witness)?;
    Ok(RicReport { delta, mode: RicMode::MonteCarloLower, mu, witness })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleResult {
    pub mu: f64,
    pub delta: f64,
    pub mode: RicMode,
    /// `2/(λ_min + λ_max)` when the restricted spectrum is known.
    pub closed_form_mu: Option<f64>,
    /// Golden-section minimizer of the two-sided RIP form, when the
    /// restricted spectrum is known; it should agree with `closed_form_mu`.
    pub rip_mu: Option<f64>,
    /// Set when a coarse grid found a better value than golden-section search.
    pub warning: bool,
    pub witness: Vector,
}

const GOLDEN_TRIALS_DEFAULT: usize = 20_000;

/// Golden-section minimization of `μ ↦ δ(μAᵀA)` over `(0, 4/λ_max(AᵀA)]`.
///
/// Exact mode evaluates the cached restricted spectrum; Monte Carlo mode
/// reuses one fixed secant sample for every `μ`.
pub fn optimal_scale(op: &MeasurementOp, set: &ModelSet, exact: bool, rng: &RngStream) -> Result<ScaleResult> {
    optimal_scale_with_trials(op, set, exact, rng, GOLDEN_TRIALS_DEFAULT)
}

pub fn optimal_scale_with_trials(
    op: &MeasurementOp,
    set: &ModelSet,
    exact: bool,
    rng: &RngStream,
    trials: usize,
) -> Result<ScaleResult> {
    let top = op.normal_spectral_radius()?;
    if top <= 0.0 {
        return Err(Error::InvalidParameter("operator is zero".into()));
    }
    let mu_max = 4.0 / top;
    if exact {
        let sp = restricted_spectrum(op, set)?;
        let (mu, delta, warning) = golden_min(|m| sp.delta(m), mu_max);
        let (rip_mu, _, _) = golden_min(|m| sp.rip_delta(m), mu_max);
        let r = sp.report(mu);
        Ok(ScaleResult {
            mu,
            delta,
            mode: RicMode::ExactEnumeration,
            closed_form_mu: Some(sp.optimal_mu()),
            rip_mu: Some(rip_mu),
            warning,
            witness: r.witness,
        })
    } else {
        let sample = SecantSample::draw(op, set, rng, trials.max(1))?;
        let (mu, _, warning) = golden_min(|m| sample.delta(m).0, mu_max);
        let (_, idx) = sample.delta(mu);
        let witness = sample.dirs[idx].clone();
        let delta = contraction(op, mu, &witness)?;
        Ok(ScaleResult { mu, delta, mode: RicMode::MonteCarloLower, closed_form_mu: None, rip_mu: None, warning, witness })
    }
}

/// Returns `(argmin, min, warning)`.
fn golden_min(f: impl Fn(f64) -> f64, hi: f64) -> (f64, f64, bool) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 * hi {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    let mut warning = false;
    for i in 1..=64 {
        let m = hi * i as f64 / 64.0;
        let v = f(m);
        if v < best.1 - 1e-12 {
            best = (m, v);
            warning = true;
        }
    }
    (best.0, best.1, warning)
}

/// Two-sided check `(1 − δ)‖v‖² ≤ μ‖Av‖² ≤ (1 + δ)‖v‖²` on the report's
/// witness and on `trials` sampled secants (trial `i` from `rng.substream(i)`).
pub fn rip_check(
    op: &MeasurementOp,
    set: &ModelSet,
    report: &RicReport,
    rng: &RngStream,
    trials: usize,
) -> Result<bool> {
    let check = |v: &Vector| -> Result<bool> {
        let nv = v.norm_sq();
        let av = report.mu * op.apply(v)?.norm_sq();
        let tol = 1e-9 * nv.max(f64::MIN_POSITIVE);
        Ok((1.0 - report.delta) * nv <= av + tol && av <= (1.0 + report.delta) * nv + tol)
    };
    if !check(&report.witness)? {
        return Ok(false);
    }
    let oks = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut sub = rng.substream(i as u64);
            check(&set.secant_sample(&mut sub)?)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(oks.into_iter().all(|b| b))
}
