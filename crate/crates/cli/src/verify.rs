//! Property suites run by `gpgd verify`.

use gpgd::certify::{
    closed_form_certificate, f_3_min_closed, f_k, f_k_argmin, f_k_at_one, f_k_min, ht_beta_constant, ht_c_star,
    ht_delta_threshold, k3_threshold, q_value, r_maximizer, r_value,
};
use gpgd::linalg::sample_gaussian;
use gpgd::operators::{optimal_scale, restricted_spectrum, ric_monte_carlo, rip_check};
use gpgd::solvers::{default_x0, gpgd, SolveConfig};
use gpgd::{GeneralizedProjection, MeasurementOp, ModelSet, RngStream, Vector};
use serde::Serialize;

use crate::{seeded_subspace, seeded_union};

pub const SUITES: &[&str] = &["lemmas-q-r", "orth-props", "rip", "contraction", "ht-constants", "fk-identities"];

#[derive(Debug, Serialize)]
pub struct FailedCheck {
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: usize,
    pub passed: bool,
    pub failures: Vec<FailedCheck>,
}

#[derive(Default)]
struct Tally {
    checks: usize,
    failures: Vec<FailedCheck>,
}

impl Tally {
    fn check(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(FailedCheck { check: name.to_string(), detail: detail() });
        }
    }

    /// Records a library error as a failed check.
    fn attempt<T>(&mut self, name: &str, r: gpgd::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(name, false, || e.to_string());
                None
            }
        }
    }
}

/// `None` for an unknown suite name.
pub fn run_suite(name: &str) -> Option<SuiteReport> {
    let mut t = Tally::default();
    match name {
        "lemmas-q-r" => lemmas_q_r(&mut t),
        "orth-props" => orth_props(&mut t),
        "rip" => rip(&mut t),
        "contraction" => contraction(&mut t),
        "ht-constants" => ht_constants(&mut t),
        "fk-identities" => fk_identities(&mut t),
        _ => return None,
    }
    Some(SuiteReport { suite: name.to_string(), checks: t.checks, passed: t.failures.is_empty(), failures: t.failures })
}

fn test_models() -> Vec<ModelSet> {
    vec![
        ModelSet::sparse(6, 2).expect("valid"),
        ModelSet::haar_sparse(8, 2).expect("valid"),
        seeded_subspace(6, 3, 4).expect("valid"),
        seeded_union(6, 2, 3, 5).expect("valid"),
        ModelSet::low_rank(3, 3, 1).expect("valid"),
    ]
}

fn lemmas_q_r(t: &mut Tally) {
    let mut rng = RngStream::new(17, 0);
    for set in test_models() {
        let n = set.ambient_dim();
        let name = set.name();
        for trial in 0..200 {
            let c = 1.0 + 4.0 * rng.next_f64() + 1e-3;
            let z = sample_gaussian(&mut rng, n);
            let u = set.sample(&mut rng);
            let x = set.sample(&mut rng);
            let q = q_value(c, &u, &z, &x);
            let direct = u.distance(&x).powi(2) - c * z.distance(&x).powi(2);
            let scale = 1.0 + u.norm_sq() + c * z.norm_sq() + c * x.norm_sq();
            t.check("q-expansion", (q - direct).abs() <= 1e-10 * scale, || format!("{name} trial {trial}: {q} vs {direct}"));

            let (Some(r), Some(xs)) =
                (t.attempt("r-value", r_value(c, &set, &u, &z)), t.attempt("r-maximizer", r_maximizer(c, &set, &u, &z)))
            else {
                continue;
            };
            let at_max = q_value(c, &u, &z, &xs);
            t.check("r-attained", (r - at_max).abs() <= 1e-9 * scale, || format!("{name} trial {trial}: R {r} vs Q(x*) {at_max}"));
            for _ in 0..10 {
                let w = set.sample(&mut rng).scale(3.0 * rng.normal());
                let qw = q_value(c, &u, &z, &w);
                let s = 1.0 + u.norm_sq() + c * z.norm_sq() + c * w.norm_sq();
                t.check("r-dominates-q", qw <= r + 1e-9 * s, || format!("{name} trial {trial}: Q {qw} > R {r}"));
            }
            if let Some(r2) = t.attempt("r-value", r_value(c + 0.5, &set, &u, &z)) {
                t.check("r-non-increasing", r2 <= r + 1e-9 * scale, || format!("{name} trial {trial}: R({}) {r2} > R({c}) {r}", c + 0.5));
            }
        }
        let z = Vector::constant(n, 1.0);
        t.check("r-rejects-c-le-1", r_value(1.0, &set, &z, &z).is_err(), || format!("{name}: c = 1 accepted"));
    }
}

/// Orthogonal projections of a union of subspaces: best subspace, largest
/// norm, orthogonal residual and homogeneity.
fn orth_props(t: &mut Tally) {
    let mut rng = RngStream::new(23, 0);
    let sets: Vec<(ModelSet, Vec<ModelSet>)> = vec![
        {
            let s = ModelSet::sparse(6, 2).expect("valid");
            let parts = supports(6, 2)
                .into_iter()
                .map(|sup| ModelSet::span(&sup.iter().map(|&j| Vector::basis(6, j)).collect::<Vec<_>>()).expect("valid"))
                .collect();
            (s, parts)
        },
        {
            let u = seeded_union(5, 2, 4, 9).expect("valid");
            let parts = match &u {
                ModelSet::UnionOfSubspaces { bases } => {
                    bases.iter().map(|b| ModelSet::subspace(b.clone()).expect("valid")).collect()
                }
                _ => unreachable!("seeded_union builds a union"),
            };
            (u, parts)
        },
    ];
    for (set, parts) in &sets {
        let n = set.ambient_dim();
        let name = set.name();
        for trial in 0..300 {
            let z = sample_gaussian(&mut rng, n);
            let Some(u) = t.attempt("project", set.project(&z)) else { continue };
            let du = u.distance(&z).powi(2);
            let scale = 1.0 + z.norm_sq();
            for (i, v) in parts.iter().enumerate() {
                let Some(pv) = t.attempt("project-part", v.project(&z)) else { continue };
                let dv = pv.distance(&z).powi(2);
                t.check("closest-subspace", du <= dv + 1e-12 * scale, || format!("{name} trial {trial} part {i}: {du} > {dv}"));
                t.check("largest-norm", u.norm_sq() + 1e-12 * scale >= pv.norm_sq(), || {
                    format!("{name} trial {trial} part {i}: {} < {}", u.norm_sq(), pv.norm_sq())
                });
            }
            let inner = u.dot(&u.sub(&z));
            t.check("orthogonal-residual", inner.abs() <= 1e-12 * scale, || format!("{name} trial {trial}: <u, u - z> = {inner}"));
            for lambda in [-2.0, 0.5, 3.0] {
                let Some(pl) = t.attempt("project", set.project(&z.scale(lambda))) else { continue };
                let gap = pl.distance(&u.scale(lambda));
                t.check("homogeneous", gap <= 1e-12 * scale * lambda.abs(), || format!("{name} trial {trial} lambda {lambda}: gap {gap}"));
            }
            let fixed = t.attempt("project", set.project(&u)).map(|pu| pu.distance(&u));
            if let Some(gap) = fixed {
                t.check("idempotent", gap <= 1e-12 * scale, || format!("{name} trial {trial}: gap {gap}"));
            }
        }
    }
}

fn supports(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in supports(n, k - 1) {
            if rest.first().is_none_or(|&r| r > first) {
                let mut s = vec![first];
                s.extend(rest);
                out.push(s);
            }
        }
    }
    out
}

/// Two-sided isometry on secants, exact vs sampled dominance.
fn rip(t: &mut Tally) {
    for seed in 0..5u64 {
        let set = ModelSet::sparse(8, 1).expect("valid");
        let Some(op) = t.attempt("operator", MeasurementOp::gaussian(6, 8, &mut RngStream::new(seed, 0))) else {
            continue;
        };
        let Some(sp) = t.attempt("spectrum", restricted_spectrum(&op, &set)) else { continue };
        for mu in [0.5, 1.0, sp.optimal_mu()] {
            let exact = sp.report(mu);
            if let Some(again) = t.attempt("recheck", exact.recheck(&op)) {
                t.check("witness-recheck", (again - exact.delta).abs() <= 1e-9, || {
                    format!("seed {seed} mu {mu}: {again} vs {}", exact.delta)
                });
            }
            t.check("ambient-dominates-rip-form", exact.delta + 1e-12 >= sp.rip_delta(mu), || {
                format!("seed {seed} mu {mu}: {} < {}", exact.delta, sp.rip_delta(mu))
            });
            let rng = RngStream::new(seed, 1);
            if let Some(ok) = t.attempt("rip-check", rip_check(&op, &set, &exact, &rng, 2000)) {
                t.check("two-sided-rip", ok, || format!("seed {seed} mu {mu}"));
            }
            if let Some(mc) = t.attempt("monte-carlo", ric_monte_carlo(&op, &set, mu, &rng, 2000)) {
                t.check("monte-carlo-below-exact", mc.delta <= exact.delta + 1e-9, || {
                    format!("seed {seed} mu {mu}: {} > {}", mc.delta, exact.delta)
                });
            }
        }
    }
}

/// Per-step bounds of projected gradient descent:
/// `‖x_{n+1} − x̂‖ ≤ δ‖P(x_n) − x̂‖` and `‖P(x_n) − x̂‖ ≤ β‖x_n − x̂‖`.
fn contraction(t: &mut Tally) {
    let cases: Vec<(ModelSet, f64, usize)> = vec![
        (ModelSet::sparse(10, 1).expect("valid"), ht_beta_constant(), 8),
        (ModelSet::sparse(8, 2).expect("valid"), ht_beta_constant(), 7),
        (seeded_subspace(10, 3, 2).expect("valid"), 1.0, 5),
    ];
    let slack = 1e-9;
    for (ci, (set, beta, m)) in cases.iter().enumerate() {
        let n = set.ambient_dim();
        for seed in 0..4u64 {
            let label = format!("{} case {ci} seed {seed}", set.name());
            let Some(op) = t.attempt("operator", MeasurementOp::gaussian(*m, n, &mut RngStream::new(seed, 10))) else {
                continue;
            };
            let rng = RngStream::new(seed, 11);
            let Some(scale) = t.attempt("optimal-scale", optimal_scale(&op, set, true, &rng)) else { continue };
            let p = GeneralizedProjection::orth(set.clone());
            let x = set.sample(&mut RngStream::new(seed, 12));
            let Some(y) = t.attempt("apply", op.apply(&x)) else { continue };
            let Some(x0) = t.attempt("init", default_x0(&op, &y, &mut RngStream::new(seed, 13))) else { continue };
            let cfg = SolveConfig::new(scale.mu).with_max_iters(200).with_diagnostics(true);
            let Some(trace) = t.attempt("solve", gpgd(&op, &y, &p, &cfg, &x0, Some(&x))) else { continue };
            for (k, pk) in trace.projected.iter().enumerate() {
                let Some(next) = trace.iterates.get(k + 1) else { break };
                let e_next = next.distance(&x);
                let e_proj = pk.distance(&x);
                let e_k = trace.iterates[k].distance(&x);
                let tol = slack * (1.0 + e_k);
                t.check("isometry-step", e_next <= scale.delta * e_proj + tol, || {
                    format!("{label} step {k}: {e_next} > {} * {e_proj}", scale.delta)
                });
                t.check("lipschitz-step", e_proj <= beta * e_k + tol, || format!("{label} step {k}: {e_proj} > {beta} * {e_k}"));
            }
        }
    }
}

fn ht_constants(t: &mut Tally) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;
    t.check("c-star", close(ht_c_star(), (3.0 + 5f64.sqrt()) / 2.0, 1e-15), || format!("{}", ht_c_star()));
    t.check("beta-squared", close(ht_beta_constant().powi(2), ht_c_star(), 1e-14), || format!("{}", ht_beta_constant()));
    t.check("beta-golden-ratio", close(ht_beta_constant(), phi, 1e-15), || format!("{}", ht_beta_constant()));
    t.check("delta-threshold", close(ht_delta_threshold(), 0.618_033_988_749_894_8, 1e-15), || {
        format!("{}", ht_delta_threshold())
    });
    t.check("delta-threshold-times-beta", close(ht_delta_threshold() * ht_beta_constant(), 1.0, 1e-15), || {
        format!("{}", ht_delta_threshold() * ht_beta_constant())
    });
    let k3 = k3_threshold();
    t.check("k3-threshold", close(k3, (9.0 + 33f64.sqrt()) / 6.0, 1e-15) && close(k3, 2.457, 1e-3), || format!("{k3}"));
    t.check("k3-root", close(-3.0 * k3 * k3 + 9.0 * k3 - 4.0, 0.0, 1e-12), || format!("{k3}"));
    t.check("k3-below-c-star", k3 < ht_c_star(), || format!("{k3} vs {}", ht_c_star()));
    for (n, k) in [(4, 1), (8, 3), (16, 5)] {
        let set = ModelSet::sparse(n, k).expect("valid");
        match closed_form_certificate(&set) {
            Ok(Some(cert)) => {
                t.check("closed-form-beta", close(cert.beta_lower, phi, 1e-15), || format!("N {n} k {k}: {}", cert.beta_lower));
                let ratio = cert.witnesses.first().map(|w| w.ratio).unwrap_or(0.0);
                t.check("closed-form-witness", ratio >= phi - 1e-9 && ratio <= phi + 1e-9, || format!("N {n} k {k}: {ratio}"));
            }
            Ok(None) => t.check("closed-form-beta", false, || format!("N {n} k {k}: no closed form")),
            Err(e) => t.check("closed-form-beta", false, || e.to_string()),
        }
    }
}

fn fk_identities(t: &mut Tally) {
    let c_star = ht_c_star();
    for c in [1.5, 2.0, c_star, 3.0, 5.0] {
        for k in [2usize, 3, 10, 100, 1000] {
            let at_one = f_k(c, k, 1.0);
            t.check("value-at-one", (at_one - f_k_at_one(c)).abs() <= 1e-12 * (1.0 + c * c * k as f64), || {
                format!("c {c} k {k}: {at_one} vs {}", f_k_at_one(c))
            });
            let v = f_k_argmin(c, k);
            let h = 1e-4;
            let slope = (f_k(c, k, v + h) - f_k(c, k, v - h)) / (2.0 * h);
            t.check("argmin-stationary", slope.abs() <= 1e-6 * (1.0 + k as f64 * c * c), || format!("c {c} k {k}: slope {slope}"));
            let min = f_k_min(c, k);
            let below = (0..=40).all(|i| min <= f_k(c, k, -1.0 + i as f64 * 0.1) + 1e-9);
            t.check("argmin-minimizes", below, || format!("c {c} k {k}"));
        }
        t.check("f3-closed-form", (f_k_min(c, 3) - f_3_min_closed(c)).abs() <= 1e-12 * (1.0 + c * c), || {
            format!("c {c}: {} vs {}", f_k_min(c, 3), f_3_min_closed(c))
        });
    }
    t.check("zero-at-c-star", f_k_at_one(c_star).abs() <= 1e-10, || format!("{}", f_k_at_one(c_star)));
    t.check("f3-zero-at-threshold", f_3_min_closed(k3_threshold()).abs() <= 1e-10, || {
        format!("{}", f_3_min_closed(k3_threshold()))
    });
    let gap = (f_k_min(c_star, 1000) - f_k_at_one(c_star)).abs();
    t.check("large-k-limit", gap <= 1e-2, || format!("gap {gap}"));
}
