//! Restricted Lipschitz constants of projections.
//!
//! A map `P` is restricted `β`-Lipschitz on `Σ` when `‖P(z) − x‖ ≤ β‖z − x‖`
//! for every ambient `z` and every `x ∈ Σ`. With `u = P(z)` and `c = β²` the
//! condition reads `Q_c(u, z, x) ≤ 0` where
//!
//! ```text
//! Q_c(u, z, x) = ‖u‖² − c‖z‖² − 2⟨u − cz, x⟩ + (1 − c)‖x‖²  =  ‖u − x‖² − c‖z − x‖²
//! ```
//!
//! For `c > 1` and homogeneous proximinal `Σ`, the maximum over `x ∈ Σ` is
//! attained at `x* = P⊥((u − cz)/(1 − c))`, giving
//!
//! ```text
//! R_c(u, z) = ‖u‖² − c‖z‖² + (c − 1)‖P⊥((u − cz)/(1 − c))‖²
//! ```
//!
//! `R_c` is non-increasing in `c`, so the smallest admissible `c` for a
//! given `(u, z)` can be found by bisection.
//!
//! Lower bounds on `β` are always witnessed by a concrete pair `(z, x)`.
//! Upper bounds from bisection hold only over the tested points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoise::GeneralizedProjection;
use crate::error::{Error, Result};
use crate::linalg::{binomial, haar_forward, haar_inverse, sample_gaussian, sym_eigen, Combinations, Matrix, RngStream, Vector};
use crate::models::ModelSet;

/// Bracket used when searching for the smallest admissible `c`.
pub const C_BRACKET: (f64, f64) = (1.0 + 1e-6, 16.0);
const SAMPLING_C_LOW: f64 = 1.0 + 1e-9;
/// Maximum supports enumerated by the exact sparse search.
pub const SEARCH_BUDGET: u128 = 100_000;
const MAX_EXACT_SUBSPACES: usize = 64;

/// `(3 + √5)/2`, the squared restricted Lipschitz constant of hard thresholding.
pub fn ht_c_star() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

/// `√((3 + √5)/2) = (1 + √5)/2`.
pub fn ht_beta_constant() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// `1/ht_beta_constant() = (√5 − 1)/2`, the isometry constant below which
/// iterative hard thresholding is guaranteed to converge.
pub fn ht_delta_threshold() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// `(9 + √33)/6`: smallest `c` for which the optimal projection onto
/// 3-sparse vectors can be restricted `√c`-Lipschitz.
pub fn k3_threshold() -> f64 {
    (9.0 + 33f64.sqrt()) / 6.0
}

/// `F_k(v) = k v² + (c² + (k − 1)(v − c)²)/(c − 1) − c(k + 1)`
pub fn f_k(c: f64, k: usize, v: f64) -> f64 {
    let kf = k as f64;
    kf * v * v + (c * c + (kf - 1.0) * (v - c).powi(2)) / (c - 1.0) - c * (kf + 1.0)
}

/// Interior minimizer `(k − 1)c/(kc − 1)` of `F_k`.
pub fn f_k_argmin(c: f64, k: usize) -> f64 {
    let kf = k as f64;
    (kf - 1.0) * c / (kf * c - 1.0)
}

pub fn f_k_min(c: f64, k: usize) -> f64 {
    f_k(c, k, f_k_argmin(c, k))
}

/// `F_k(1) = c²/(c − 1) − 2c + 1`, independent of `k`.
pub fn f_k_at_one(c: f64) -> f64 {
    c * c / (c - 1.0) - 2.0 * c + 1.0
}

/// `F_3` at its interior minimizer: `c(−3c² + 9c − 4)/((3c − 1)(c − 1))`.
pub fn f_3_min_closed(c: f64) -> f64 {
    c * (-3.0 * c * c + 9.0 * c - 4.0) / ((3.0 * c - 1.0) * (c - 1.0))
}

pub fn q_value(c: f64, u: &Vector, z: &Vector, x: &Vector) -> f64 {
    u.norm_sq() - c * z.norm_sq() - 2.0 * u.axpy(-c, z).dot(x) + (1.0 - c) * x.norm_sq()
}

fn check_c(c: f64) -> Result<()> {
    if c.is_nan() || c <= 1.0 {
        return Err(Error::DegenerateC(c));
    }
    Ok(())
}

/// The maximizer `x* = P⊥((u − cz)/(1 − c))` of `Q_c(u, z, ·)` over the model.
pub fn r_maximizer(c: f64, set: &ModelSet, u: &Vector, z: &Vector) -> Result<Vector> {
    check_c(c)?;
    set.project(&u.axpy(-c, z).scale(1.0 / (1.0 - c)))
}

/// `R_c(u, z) = max_{x ∈ Σ} Q_c(u, z, x)`, for `c > 1`.
pub fn r_value(c: f64, set: &ModelSet, u: &Vector, z: &Vector) -> Result<f64> {
    let x = r_maximizer(c, set, u, z)?;
    Ok(u.norm_sq() - c * z.norm_sq() + (c - 1.0) * x.norm_sq())
}

/// Rounding allowance when testing `R_c ≤ 0`.
fn r_slack(c: f64, u: &Vector, z: &Vector) -> f64 {
    1e-12 * (u.norm_sq() + c * z.norm_sq())
}

/// The `c = 1` case: `Q_1(u, z, x) = ‖u‖² − ‖z‖² − 2⟨u − z, x⟩` is bounded
/// above over `Σ` iff `⟨u − z, x⟩ = 0` on all of `Σ`, checked on directions
/// spanning the model.
pub fn orthogonality_check(set: &ModelSet, u: &Vector, z: &Vector, tol: f64) -> Result<bool> {
    let n = set.ambient_dim();
    u.check_dim(n)?;
    z.check_dim(n)?;
    let d = u.sub(z);
    Ok(set.spanning_directions().iter().all(|x| d.dot(x).abs() <= tol))
}

/// `‖P(z) − x‖ / ‖z − x‖`, or `None` when `z` and `x` (nearly) coincide.
pub fn lipschitz_ratio(pz: &Vector, z: &Vector, x: &Vector) -> Option<f64> {
    let den = z.distance(x);
    if den <= 1e-12 * (1.0 + z.norm()) {
        return None;
    }
    Some(pz.distance(x) / den)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMethod {
    Sampled,
    ExhaustiveSmall,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSource {
    Isotropic,
    ModelSecant,
    ModelNoise,
    Extremal,
}

const SOURCES: [SampleSource; 4] =
    [SampleSource::Isotropic, SampleSource::ModelSecant, SampleSource::ModelNoise, SampleSource::Extremal];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub z: Vector,
    pub x: Vector,
    pub ratio: f64,
    pub source: SampleSource,
}

impl Witness {
    /// Re-evaluates the ratio from `(z, x)` with the given projection.
    pub fn recheck(&self, p: &GeneralizedProjection) -> Result<Option<f64>> {
        Ok(lipschitz_ratio(&p.apply(&self.z)?, &self.z, &self.x))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCertificate {
    pub beta_lower: f64,
    /// `√c` from bisection; valid over the tested points only.
    pub beta_upper: Option<f64>,
    /// Best witness first, then the best of each sampling source.
    pub witnesses: Vec<Witness>,
    pub method: CertMethod,
    pub trials: usize,
    pub skipped_pairs: usize,
}

#[derive(Clone)]
struct Candidate {
    ratio: f64,
    index: usize,
    z: Vector,
    x: Vector,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.ratio > b.ratio || (a.ratio == b.ratio && a.index < b.index)
}

fn pick(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if better(&b, &a) { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    }
}

#[derive(Clone, Default)]
struct Tally {
    best: [Option<Candidate>; 4],
    skipped: usize,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (slot, o) in self.best.iter_mut().zip(other.best) {
            *slot = pick(slot.take(), o);
        }
        self.skipped += other.skipped;
        self
    }
}

/// Smallest `c` in `[lo, hi]` with `R_c(u, z) ≤ 0`, as a bracket
/// `(c_bad, c_good)` with `R > 0` at `c_bad`. `None` when the condition
/// already holds at `lo`; `c_good = None` when it fails at `hi`.
fn admissible_c(
    set: &ModelSet,
    u: &Vector,
    z: &Vector,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<Option<(f64, Option<f64>)>> {
    let ok = |c: f64| -> Result<bool> { Ok(r_value(c, set, u, z)? <= r_slack(c, u, z)) };
    if ok(lo)? {
        return Ok(None);
    }
    if !ok(hi)? {
        return Ok(Some((hi, None)));
    }
    let (mut bad, mut good) = (lo, hi);
    while good - bad > rel_tol * good {
        let mid = 0.5 * (bad + good);
        if ok(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(Some((bad, Some(good))))
}

fn draw_z(set: &ModelSet, extremes: &[Vector], i: usize, rng: &mut RngStream) -> (Vector, SampleSource, bool) {
    let n = set.ambient_dim();
    if i < extremes.len() {
        return (extremes[i].clone(), SampleSource::Extremal, true);
    }
    let mut kind = i % 4;
    if kind == 3 && extremes.is_empty() {
        kind = 1;
    }
    match kind {
        0 => (sample_gaussian(rng, n), SampleSource::Isotropic, false),
        1 => {
            let a = set.sample(rng);
            let b = set.sample(rng);
            let t = rng.uniform(-0.5, 1.5);
            (a.axpy(t, &b.sub(&a)), SampleSource::ModelSecant, false)
        }
        2 => {
            let a = set.sample(rng);
            let sigma = 10f64.powf(rng.uniform(-3.0, 0.5));
            let noise = sample_gaussian(rng, n);
            (a.axpy(sigma, &noise), SampleSource::ModelNoise, false)
        }
        _ => {
            let e = &extremes[(i / 4) % extremes.len()];
            let scale = rng.uniform(0.5, 2.0) * if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
            let eps = 10f64.powf(rng.uniform(-6.0, -1.0));
            let noise = sample_gaussian(rng, n);
            (e.scale(scale).axpy(eps * e.norm().max(1.0), &noise), SampleSource::Extremal, false)
        }
    }
}

fn run_trial(
    p: &GeneralizedProjection,
    set: &ModelSet,
    extremes: &[Vector],
    i: usize,
    mut rng: RngStream,
) -> Result<Tally> {
    let (z, source, exact) = draw_z(set, extremes, i, &mut rng);
    let u = p.apply(&z)?;
    let mut xs = vec![set.sample(&mut rng)];
    match set.project_all(&z) {
        Ok(r) => xs.extend(r.minimizers.unwrap_or_else(|| vec![r.canonical])),
        Err(Error::TooManyMinimizers(_)) => xs.push(set.project(&z)?),
        Err(e) => return Err(e),
    }
    let tol = if exact { 1e-12 } else { 1e-6 };
    if let Some((bad, _)) = admissible_c(set, &u, &z, SAMPLING_C_LOW, C_BRACKET.1, tol)? {
        xs.push(r_maximizer(bad, set, &u, &z)?);
    }
    let mut tally = Tally::default();
    let mut best: Option<Candidate> = None;
    for x in xs {
        match lipschitz_ratio(&u, &z, &x) {
            Some(ratio) => {
                if best.as_ref().map_or(true, |b| ratio > b.ratio) {
                    best = Some(Candidate { ratio, index: i, z: z.clone(), x });
                }
            }
            None => tally.skipped += 1,
        }
    }
    let slot = SOURCES.iter().position(|s| *s == source).expect("known source");
    tally.best[slot] = best;
    Ok(tally)
}

/// Witnessed lower bound on the restricted Lipschitz constant of `p`.
///
/// Trial `i` uses `rng.substream(i)`. The first trials evaluate the model's
/// extremal points exactly; the rest cycle through isotropic points, points
/// on lines through two model elements, noisy model elements, and
/// perturbed extremal points. For each `z` the model argument `x` ranges
/// over a fresh model sample, every orthogonal projection of `z`, and the
/// maximizer `x*` at the largest violated `c`. Pairs with `z = x` are skipped.
pub fn beta_lower_sampled(
    p: &GeneralizedProjection,
    set: &ModelSet,
    rng: &RngStream,
    trials: usize,
) -> Result<LipschitzCertificate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let extremes = set.extremal_points();
    let tally = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(p, set, &extremes, i, rng.substream(i as u64)))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    let mut overall: Option<Candidate> = None;
    for c in tally.best.iter().flatten() {
        overall = pick(overall, Some(c.clone()));
    }
    let best = overall.ok_or(Error::AllDegenerate)?;
    let source_of = |idx: usize| SOURCES[idx];
    let best_source = (0..4)
        .find(|&s| tally.best[s].as_ref().is_some_and(|c| c.index == best.index && c.ratio == best.ratio))
        .map(source_of)
        .unwrap_or(SampleSource::Isotropic);
    let mut witnesses = vec![Witness { z: best.z.clone(), x: best.x.clone(), ratio: best.ratio, source: best_source }];
    for (s, c) in tally.best.iter().enumerate() {
        if let Some(c) = c {
            if c.index != best.index {
                witnesses.push(Witness { z: c.z.clone(), x: c.x.clone(), ratio: c.ratio, source: source_of(s) });
            }
        }
    }
    Ok(LipschitzCertificate {
        beta_lower: best.ratio,
        beta_upper: None,
        witnesses,
        method: CertMethod::Sampled,
        trials,
        skipped_pairs: tally.skipped,
    })
}

/// Smallest `c ∈ [1 + 1e-6, 16]` (to `1e-9`) with `R_c(P(z), z) ≤ 0` for
/// every `z` in `suite`. Returns `c`; the restricted Lipschitz constant over
/// the suite is `√c`.
pub fn beta_upper_bisect(p: &GeneralizedProjection, set: &ModelSet, suite: &[Vector]) -> Result<f64> {
    let per_z = suite
        .par_iter()
        .map(|z| {
            let u = p.apply(z)?;
            threshold_for(set, &u, z)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_z.into_iter().fold(C_BRACKET.0, f64::max))
}

fn threshold_for(set: &ModelSet, u: &Vector, z: &Vector) -> Result<f64> {
    let (lo, hi) = C_BRACKET;
    match admissible_c(set, u, z, lo, hi, 1e-10)? {
        None => Ok(lo),
        Some((_, Some(good))) => Ok(good),
        Some((_, None)) => Err(Error::BracketExhausted { lo, hi }),
    }
}

/// Smallest `c` (to `1e-9`) with `min_{u ∈ Σ} R_c(u, z) ≤ 0` for every `z`
/// in `suite`: the squared constant of the best projection over the suite.
pub fn optimal_threshold_bisect(set: &ModelSet, suite: &[Vector], mode: SearchMode) -> Result<f64> {
    let (lo, hi) = C_BRACKET;
    let mut worst = lo;
    for z in suite {
        let ok = |c: f64| -> Result<bool> {
            let u = optimal_projection_search(set, c, z, mode)?;
            Ok(r_value(c, set, &u, z)? <= r_slack(c, &u, z))
        };
        if ok(worst)? {
            continue;
        }
        if !ok(hi)? {
            return Err(Error::BracketExhausted { lo, hi });
        }
        let (mut bad, mut good) = (worst, hi);
        while good - bad > 1e-10 * good {
            let mid = 0.5 * (bad + good);
            if ok(mid)? {
                good = mid;
            } else {
                bad = mid;
            }
        }
        worst = good;
    }
    Ok(worst)
}

/// Sampled lower bound plus, when `suite` is given, the bisection upper
/// bound over the suite extended by the witnessed points.
pub fn certify(
    p: &GeneralizedProjection,
    set: &ModelSet,
    rng: &RngStream,
    trials: usize,
    suite: Option<(&[Vector], bool)>,
) -> Result<LipschitzCertificate> {
    let mut cert = beta_lower_sampled(p, set, rng, trials)?;
    if let Some((points, exhaustive)) = suite {
        let mut all: Vec<Vector> = points.to_vec();
        all.extend(cert.witnesses.iter().map(|w| w.z.clone()));
        cert.beta_upper = Some(beta_upper_bisect(p, set, &all)?.sqrt());
        if exhaustive {
            cert.method = CertMethod::ExhaustiveSmall;
        }
    }
    Ok(cert)
}

/// Known constants of orthogonal projections: `1` on a subspace and
/// `(1 + √5)/2` for hard thresholding with `k < N`, witnessed at
/// `z = ones_{k+1}`.
pub fn closed_form_certificate(set: &ModelSet) -> Result<Option<LipschitzCertificate>> {
    let beta = match set {
        ModelSet::Subspace { .. } => 1.0,
        ModelSet::SparseK { n, k } | ModelSet::HaarSparseK { n, k } if k < n => ht_beta_constant(),
        ModelSet::SparseK { .. } | ModelSet::HaarSparseK { .. } => 1.0,
        _ => return Ok(None),
    };
    let mut witnesses = Vec::new();
    if let Some(z) = set.extremal_points().into_iter().next() {
        let u = set.project(&z)?;
        let x = r_maximizer(ht_c_star(), set, &u, &z)?;
        if let Some(ratio) = lipschitz_ratio(&u, &z, &x) {
            witnesses.push(Witness { z, x, ratio, source: SampleSource::Extremal });
        }
    }
    let lower = witnesses.first().map_or(1.0, |w| w.ratio);
    Ok(Some(LipschitzCertificate {
        beta_lower: lower,
        beta_upper: Some(beta),
        witnesses,
        method: CertMethod::ClosedForm,
        trials: 0,
        skipped_pairs: 0,
    }))
}

/// Regular grid on `[-1, 1]^n` with `steps` points per axis.
pub fn grid_suite(n: usize, steps: usize) -> Vec<Vector> {
    let steps = steps.max(2);
    let total = steps.pow(n as u32);
    (0..total)
        .filter_map(|mut idx| {
            let mut v = vec![0.0; n];
            for x in v.iter_mut() {
                *x = -1.0 + 2.0 * (idx % steps) as f64 / (steps - 1) as f64;
                idx /= steps;
            }
            let v = Vector::from_raw(v);
            (v.norm() > 0.0).then_some(v)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Exact,
    Heuristic,
}

/// `u ∈ Σ` minimizing `R_c(u, z)`.
///
/// Exact for subspaces (`u = P⊥(z)`), for sparse and Haar-sparse models up
/// to [`SEARCH_BUDGET`] supports, and for unions of at most 64 subspaces.
/// Heuristic mode runs multi-start projected descent on any model.
pub fn optimal_projection_search(set: &ModelSet, c: f64, z: &Vector, mode: SearchMode) -> Result<Vector> {
    check_c(c)?;
    z.check_dim(set.ambient_dim())?;
    if mode == SearchMode::Heuristic {
        return heuristic_search(set, c, z);
    }
    match set {
        ModelSet::Subspace { basis } => {
            let coeffs = basis.matvec_t(z)?;
            basis.matvec(&coeffs)
        }
        ModelSet::SparseK { k, .. } => sparse_search(z, *k, c),
        ModelSet::HaarSparseK { k, .. } => {
            let zc = haar_forward(z)?;
            haar_inverse(&sparse_search(&zc, *k, c)?)
        }
        ModelSet::UnionOfSubspaces { bases } if bases.len() <= MAX_EXACT_SUBSPACES => union_search(bases, z, c),
        _ => Err(Error::ExactSearchUnavailable(format!(
            "no exact search for the {} model of this size; request heuristic mode",
            set.name()
        ))),
    }
}

/// `min_{u ∈ Σ} R_c(u, z)`
pub fn min_r_value(set: &ModelSet, c: f64, z: &Vector, mode: SearchMode) -> Result<f64> {
    let u = optimal_projection_search(set, c, z, mode)?;
    r_value(c, set, &u, z)
}

/// Exact minimization over `k`-sparse `u`.
///
/// On a fixed support `S` the objective `‖u‖² + topk((u − cz)²)/(c − 1)` is
/// convex. Writing the sum of the `k` largest entries of `b ≥ 0` as
/// `min_t k·t + Σ(b_i − t)_+` makes it separable for fixed `t`: each
/// coordinate of `S` has a two-case closed-form minimizer, coordinates off
/// `S` are zero. The resulting function of `t` is convex and is minimized
/// by golden-section search; the best support wins (lowest index on ties).
fn sparse_search(z: &Vector, k: usize, c: f64) -> Result<Vector> {
    let n = z.dim();
    let k = k.min(n);
    let count = binomial(n, k);
    if count > SEARCH_BUDGET {
        return Err(Error::ExactSearchUnavailable(format!(
            "{count} supports exceed the budget of {SEARCH_BUDGET}; request heuristic mode"
        )));
    }
    let a: Vec<f64> = z.as_slice().iter().map(|v| c * v).collect();
    let set = ModelSet::SparseK { n, k };
    let mut best: Option<(f64, Vector)> = None;
    for support in Combinations::new(n, k) {
        let u = support_minimizer(&a, &support, k, c);
        let val = r_value(c, &set, &u, z)?;
        let improves = match &best {
            None => true,
            Some((b, _)) => val < *b - 1e-15 * (1.0 + b.abs()),
        };
        if improves {
            best = Some((val, u));
        }
    }
    Ok(best.expect("non-empty support family").1)
}

/// Per-coordinate minimizer of `v² + ((v − a)² − t)_+/(c − 1)`, with its value.
fn coordinate_min(a: f64, t: f64, c: f64) -> (f64, f64) {
    let s = t.sqrt();
    // inside |v − a| ≤ s the objective is v²
    let (v_in, f_in) = if a.abs() <= s { (0.0, 0.0) } else { (a - s * a.signum(), (a.abs() - s).powi(2)) };
    // outside, the unconstrained minimizer a/c is admissible iff |a|(c − 1)/c ≥ s
    if a.abs() * (c - 1.0) / c >= s {
        let f_out = a * a / c - t / (c - 1.0);
        if f_out < f_in {
            return (a / c, f_out);
        }
    }
    (v_in, f_in)
}

fn support_objective(a: &[f64], in_support: &[bool], k: usize, c: f64, t: f64) -> f64 {
    let mut g = k as f64 * t / (c - 1.0);
    for (i, &ai) in a.iter().enumerate() {
        if in_support[i] {
            g += coordinate_min(ai, t, c).1;
        } else {
            g += (ai * ai - t).max(0.0) / (c - 1.0);
        }
    }
    g
}

fn support_minimizer(a: &[f64], support: &[usize], k: usize, c: f64) -> Vector {
    let n = a.len();
    let mut in_support = vec![false; n];
    for &i in support {
        in_support[i] = true;
    }
    let top = a.iter().map(|v| v * v).fold(0.0, f64::max);
    let g = |t: f64| support_objective(a, &in_support, k, c, t);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, top * (1.0 + 1e-12) + f64::MIN_POSITIVE);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-17 * top {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = g(x2);
        }
    }
    // compare the interior estimate with the endpoints, where kinks can sit
    let mut t_best = if f1 <= f2 { x1 } else { x2 };
    let mut f_best = g(t_best);
    for t in [0.0, top] {
        let f = g(t);
        if f < f_best {
            f_best = f;
            t_best = t;
        }
    }
    let mut u = vec![0.0; n];
    for &i in support {
        u[i] = coordinate_min(a[i], t_best, c).0;
    }
    Vector::from_raw(u)
}

/// Per-subspace minimax `min_α ‖α‖² + max_j ‖B_jᵀ(B_i α − cz)‖²/(c − 1)`,
/// then the best subspace.
fn union_search(bases: &[Matrix], z: &Vector, c: f64) -> Result<Vector> {
    let set = ModelSet::UnionOfSubspaces { bases: bases.to_vec() };
    let mut best: Option<(f64, Vector)> = None;
    for i in 0..bases.len() {
        let alpha = if bases.iter().all(|b| b.cols() == 1) {
            union_line_alpha(bases, i, z, c)
        } else {
            union_dual_alpha(bases, i, z, c)?
        };
        let u = bases[i].matvec(&alpha)?;
        let val = r_value(c, &set, &u, z)?;
        let improves = match &best {
            None => true,
            Some((b, _)) => val < *b - 1e-15 * (1.0 + b.abs()),
        };
        if improves {
            best = Some((val, u));
        }
    }
    Ok(best.expect("non-empty union").1)
}

/// Lines: the objective is the upper envelope of parabolas in one
/// variable, minimized at a parabola vertex or a pairwise crossing.
fn union_line_alpha(bases: &[Matrix], i: usize, z: &Vector, c: f64) -> Vector {
    let bi = bases[i].column(0);
    let params: Vec<(f64, f64)> = bases
        .iter()
        .map(|b| {
            let bj = b.column(0);
            (bj.dot(&bi), c * bj.dot(z))
        })
        .collect();
    // q_j(α) = α² + (g α − e)²/(c − 1)
    let q = |j: usize, al: f64| {
        let (g, e) = params[j];
        al * al + (g * al - e).powi(2) / (c - 1.0)
    };
    let env = |al: f64| (0..params.len()).map(|j| q(j, al)).fold(f64::NEG_INFINITY, f64::max);
    let mut candidates = vec![0.0];
    for &(g, e) in &params {
        candidates.push(g * e / (c - 1.0 + g * g));
    }
    for j in 0..params.len() {
        for l in j + 1..params.len() {
            // q_j − q_l = ((g_j² − g_l²)α² − 2(g_j e_j − g_l e_l)α + e_j² − e_l²)/(c − 1)
            let (gj, ej) = params[j];
            let (gl, el) = params[l];
            let qa = gj * gj - gl * gl;
            let qb = -2.0 * (gj * ej - gl * el);
            let qc = ej * ej - el * el;
            if qa.abs() < 1e-300 {
                if qb.abs() > 1e-300 {
                    candidates.push(-qc / qb);
                }
                continue;
            }
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let r = disc.sqrt();
                candidates.push((-qb + r) / (2.0 * qa));
                candidates.push((-qb - r) / (2.0 * qa));
            }
        }
    }
    let mut best = (f64::INFINITY, 0.0);
    for al in candidates {
        let v = env(al);
        if v < best.0 {
            best = (v, al);
        }
    }
    Vector::from_raw(vec![best.1])
}

/// General subspaces: dual ascent over the simplex of weights on the
/// `max_j`, solving the weighted quadratic in `α` exactly at each step, and
/// stopping when the duality gap is below `1e-12` relative.
fn union_dual_alpha(bases: &[Matrix], i: usize, z: &Vector, c: f64) -> Result<Vector> {
    let bi = &bases[i];
    let d = bi.cols();
    let m: Vec<Matrix> = bases.iter().map(|b| b.transpose().matmul(bi).expect("shared ambient")).collect();
    let e: Vec<Vector> = bases.iter().map(|b| b.matvec_t(z).expect("shared ambient").scale(c)).collect();
    let terms = |al: &Vector| -> Vec<f64> {
        m.iter().zip(&e).map(|(mj, ej)| mj.matvec(al).expect("conformant").sub(ej).norm_sq() / (c - 1.0)).collect()
    };
    let primal = |al: &Vector| al.norm_sq() + terms(al).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let solve = |lam: &[f64]| -> Result<Vector> {
        let mut h = Matrix::identity(d);
        let mut rhs = vec![0.0; d];
        for (j, &l) in lam.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let w = l / (c - 1.0);
            for r in 0..d {
                for s in 0..d {
                    let mut acc = 0.0;
                    for t in 0..m[j].rows() {
                        acc += m[j].get(t, r) * m[j].get(t, s);
                    }
                    h.set(r, s, h.get(r, s) + w * acc);
                }
                let mut acc = 0.0;
                for t in 0..m[j].rows() {
                    acc += m[j].get(t, r) * e[j][t];
                }
                rhs[r] += w * acc;
            }
        }
        let eig = sym_eigen(&h)?;
        let qt_rhs = eig.vectors.matvec_t(&Vector::from_raw(rhs))?;
        let scaled: Vec<f64> = (0..d).map(|t| qt_rhs[t] / eig.values[t]).collect();
        eig.vectors.matvec(&Vector::from_raw(scaled))
    };
    let count = bases.len();
    let mut lam = vec![1.0 / count as f64; count];
    let mut best_alpha = solve(&lam)?;
    let mut best_primal = primal(&best_alpha);
    let mut best_dual = f64::NEG_INFINITY;
    let mut step = 1.0;
    for _ in 0..5000 {
        let al = solve(&lam)?;
        let t = terms(&al);
        let dual = al.norm_sq() + lam.iter().zip(&t).map(|(l, v)| l * v).sum::<f64>();
        best_dual = best_dual.max(dual);
        let p = primal(&al);
        if p < best_primal {
            best_primal = p;
            best_alpha = al;
        }
        if best_primal - best_dual <= 1e-12 * (1.0 + best_primal.abs()) {
            break;
        }
        // exponentiated-gradient ascent on the simplex
        let scale = t.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut total = 0.0;
        for (l, v) in lam.iter_mut().zip(&t) {
            *l *= (step * v / scale).exp();
            total += *l;
        }
        lam.iter_mut().for_each(|l| *l /= total);
        step *= 0.999;
    }
    Ok(best_alpha)
}

/// Multi-start projected descent on `R_c(·, z)` using the gradient
/// `2u + 2P⊥(u − cz)/(c − 1)`; steps are accepted only when they decrease
/// the objective.
fn heuristic_search(set: &ModelSet, c: f64, z: &Vector) -> Result<Vector> {
    let base = set.project(z)?;
    let mut starts = vec![base.clone(), base.scale(0.5), base.scale(0.8)];
    let mut rng = RngStream::new(0x6f70_7469_6d61_6c, 0);
    for _ in 0..4 {
        starts.push(set.project(&z.axpy(0.3 * (1.0 + z.norm()), &sample_gaussian(&mut rng, z.dim())))?);
    }
    let mut best: Option<(f64, Vector)> = None;
    for start in starts {
        let mut u = start;
        let mut val = r_value(c, set, &u, z)?;
        let mut eta = 0.25;
        for _ in 0..300 {
            let pr = set.project(&u.axpy(-c, z))?;
            let grad = u.scale(2.0).axpy(2.0 / (c - 1.0), &pr);
            let cand = set.project(&u.axpy(-eta, &grad))?;
            let cv = r_value(c, set, &cand, z)?;
            if cv < val {
                u = cand;
                val = cv;
                eta = (eta * 1.5).min(1.0);
            } else {
                eta *= 0.5;
                if eta < 1e-12 {
                    break;
                }
            }
        }
        if best.as_ref().map_or(true, |(b, _)| val < *b) {
            best = Some((val, u));
        }
    }
    Ok(best.expect("at least one start").1)
}
