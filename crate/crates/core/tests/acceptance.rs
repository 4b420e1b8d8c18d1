//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use gpgd::certify::*;
use gpgd::denoise::{BridgeError, ExternalDenoiser};
use gpgd::diagnostics::{analyze, fit_linear_rate, RateFit};
use gpgd::linalg::sample_gaussian;
use gpgd::operators::*;
use gpgd::solvers::*;
use gpgd::{Error, GeneralizedProjection, Matrix, MeasurementOp, ModelSet, RngStream, Vector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t <= limit, format!("{:.1}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let b = ht_beta_constant();
    let closed = (b * b - (3.0 + 5f64.sqrt()) / 2.0).abs() <= 1e-15;
    let set = ModelSet::sparse(16, 3).unwrap();
    let p = GeneralizedProjection::orth(set.clone());
    let main = beta_lower_sampled(&p, &set, &RngStream::new(1, 0), 1_000_000).unwrap();
    let ones = main
        .witnesses
        .iter()
        .filter(|w| w.source == SampleSource::Extremal)
        .map(|w| w.ratio)
        .fold(0.0, f64::max);
    let mut worst = main.beta_lower;
    for (n, k) in [(8, 2), (12, 4), (16, 8)] {
        let s = ModelSet::sparse(n, k).unwrap();
        let c = beta_lower_sampled(&GeneralizedProjection::orth(s.clone()), &s, &RngStream::new(1, n as u64), 100_000).unwrap();
        worst = worst.max(c.beta_lower);
    }
    let (fast, timing) = within(Duration::from_secs(60), start);
    outcome(
        closed && worst <= 1.6181 && ones >= 1.567 && fast,
        format!("beta^2 closed form {closed}; max sampled beta {worst:.12} (<= 1.6181); ones_(k+1) witness {ones:.12} (>= 1.567); {timing}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let target = (9.0 + 33f64.sqrt()) / 6.0;
    let set = ModelSet::sparse(8, 3).unwrap();
    let z = Vector::ones_prefix(8, 4);
    let c = optimal_threshold_bisect(&set, &[z], SearchMode::Exact).unwrap();
    let (fast, timing) = within(Duration::from_secs(10), start);
    let err = (c - target).abs();
    outcome(err <= 1e-6 && fast, format!("c = {c:.12}, (9+sqrt 33)/6 = {target:.12}, |diff| = {err:.2e}; {timing}"))
}

fn criterion_3() -> Outcome {
    let mut worst_one: f64 = 0.0;
    for k in [3, 10, 100] {
        for c in [1.1, 1.5, 2.0, 2.6180339887, 3.0, 5.0] {
            worst_one = worst_one.max((f_k(c, k, 1.0) - (c * c / (c - 1.0) - 2.0 * c + 1.0)).abs());
        }
    }
    let cs = (3.0 + 5f64.sqrt()) / 2.0;
    let zero = f_k(cs, 3, 1.0).abs();
    let limit = (f_k_min(cs, 1000) - f_k(cs, 1000, 1.0)).abs();
    outcome(
        worst_one <= 1e-12 && zero <= 1e-10 && limit <= 1e-2,
        format!("max |F_k(1) - closed form| = {worst_one:.2e}; |F_k(1)| at c* = {zero:.2e}; |min F_1000 - F_1000(1)| = {limit:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    let eps = 1e-2;
    let set = ModelSet::eps_lines(eps).unwrap();
    let cert = beta_lower_sampled(&GeneralizedProjection::orth(set.clone()), &set, &RngStream::new(4, 0), 20_000).unwrap();
    let lo = 2.0 / (1.0 + eps * eps).sqrt() - 1e-4;
    outcome(
        cert.beta_lower >= lo && cert.beta_lower <= 2.0 + 1e-9,
        format!("beta = {:.12} in [{lo:.12}, 2 + 1e-9]", cert.beta_lower),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = RngStream::new(5, 0);
    let mut sub_worst: f64 = 0.0;
    for (n, d) in [(6, 2), (10, 3), (16, 1)] {
        let dirs: Vec<Vector> = (0..d).map(|_| sample_gaussian(&mut rng, n)).collect();
        let set = ModelSet::span(&dirs).unwrap();
        let c = beta_lower_sampled(&GeneralizedProjection::orth(set.clone()), &set, &RngStream::new(5, n as u64), 20_000).unwrap();
        sub_worst = sub_worst.max(c.beta_lower);
    }
    let planes = {
        let a = Matrix::from_columns(&[Vector::basis(4, 0), Vector::basis(4, 1)]).unwrap();
        let ModelSet::Subspace { basis: b } =
            ModelSet::span(&[sample_gaussian(&mut rng, 4), sample_gaussian(&mut rng, 4)]).unwrap()
        else {
            unreachable!()
        };
        ModelSet::union(vec![a, b]).unwrap()
    };
    let variants = vec![
        ModelSet::sparse(8, 2).unwrap(),
        ModelSet::span(&[sample_gaussian(&mut rng, 5)]).unwrap(),
        ModelSet::eps_lines(0.05).unwrap(),
        planes,
        ModelSet::low_rank(4, 4, 1).unwrap(),
        ModelSet::haar_sparse(16, 2).unwrap(),
    ];
    let mut all_worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (i, set) in variants.iter().enumerate() {
        let c = beta_lower_sampled(&GeneralizedProjection::orth(set.clone()), set, &RngStream::new(50, i as u64), 100_000).unwrap();
        parts.push(format!("{} {:.6}", set.name(), c.beta_lower));
        all_worst = all_worst.max(c.beta_lower);
    }
    outcome(
        sub_worst <= 1.0 + 1e-9 && all_worst <= 2.0 + 1e-6,
        format!("subspaces max {sub_worst:.12}; variants [{}]", parts.join(", ")),
    )
}

/// Instances with `δ·√c* < 1` are searched over a seed range. The two-sided
/// RIP form at its optimal step lower-bounds the constant at every step, so
/// it rules seeds out cheaply; survivors get the exact optimal scaling.
fn criterion_6() -> Outcome {
    let start = Instant::now();
    let (n, k, m) = (16, 2, 12);
    let set = ModelSet::sparse(n, k).unwrap();
    let threshold = ht_delta_threshold();
    let scan = 2000;
    let mut qualifying = Vec::new();
    let mut best_lower = f64::INFINITY;
    for seed in 0..scan {
        let op = MeasurementOp::gaussian(m, n, &mut RngStream::new(seed, 0)).unwrap();
        let sp = restricted_spectrum(&op, &set).unwrap();
        let lower = sp.rip_delta(sp.optimal_mu());
        best_lower = best_lower.min(lower);
        if lower < threshold {
            let r = optimal_scale(&op, &set, true, &RngStream::new(seed, 1)).unwrap();
            if r.delta < threshold {
                qualifying.push(seed);
                if qualifying.len() == 20 {
                    break;
                }
            }
        }
    }
    // the per-step chain on the first 20 seeds, whether or not they qualify
    let beta = ht_beta_constant();
    let mut chain_ok = true;
    let mut converged = 0;
    let mut oracle_match = 0;
    let mut min_delta = f64::INFINITY;
    let seeds: Vec<u64> = if qualifying.len() == 20 { qualifying.clone() } else { (0..20).collect() };
    for &seed in &seeds {
        let op = MeasurementOp::gaussian(m, n, &mut RngStream::new(seed, 0)).unwrap();
        let r = optimal_scale(&op, &set, true, &RngStream::new(seed, 1)).unwrap();
        min_delta = min_delta.min(r.delta);
        let x = set.sample(&mut RngStream::new(seed, 2));
        let y = op.apply(&x).unwrap();
        let p = GeneralizedProjection::orth(set.clone());
        let x0 = default_x0(&op, &y, &mut RngStream::new(seed, 3)).unwrap();
        let cfg = SolveConfig::new(r.mu).with_max_iters(2000);
        let t = match gpgd(&op, &y, &p, &cfg, &x0, Some(&x)) {
            Ok(t) => t,
            Err(Error::Diverged { trace, .. }) => *trace,
            Err(e) => panic!("{e}"),
        };
        for w in t.errors.windows(2) {
            if w[1] > r.delta * beta * w[0] + 1e-9 {
                chain_ok = false;
            }
        }
        if t.converged {
            converged += 1;
            let oracle = oracle_sparse(&op, &y, k).unwrap();
            if t.last().distance(&oracle) <= 1e-8 {
                oracle_match += 1;
            }
        }
    }
    let (fast, timing) = within(Duration::from_secs(120), start);
    let pass = qualifying.len() == 20 && chain_ok && oracle_match == 20 && fast;
    outcome(
        pass,
        format!(
            "{} of {scan} scanned seeds have delta*sqrt(c*) < 1 (need 20; smallest RIP-form lower bound {best_lower:.4} vs {threshold:.4}); \
             on {} instances: min delta {min_delta:.4}, chain ||x_(n+1) - x|| <= delta*beta*||x_n - x|| {}, {converged} converged, {oracle_match} match oracle; {timing}",
            qualifying.len(),
            seeds.len(),
            if chain_ok { "holds" } else { "violated" }
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut dominance = true;
    let mut rip = true;
    let mut worst_mu: f64 = 0.0;
    for seed in 0..10 {
        let op = MeasurementOp::gaussian(6, 8, &mut RngStream::new(70 + seed, 0)).unwrap();
        let set = ModelSet::sparse(8, 1).unwrap();
        let exact = ric_exact_sparse(&op, 1.0, 2).unwrap();
        let mc = ric_monte_carlo(&op, &set, 1.0, &RngStream::new(70 + seed, 1), 100_000).unwrap();
        dominance &= mc.delta <= exact.delta + 1e-12;
        rip &= rip_check(&op, &set, &exact, &RngStream::new(70 + seed, 2), 10_000).unwrap();
        let s = optimal_scale(&op, &set, true, &RngStream::new(70 + seed, 3)).unwrap();
        let scaled = RicReport { ..ric_exact_sparse(&op, s.mu, 2).unwrap() };
        rip &= rip_check(&op, &set, &scaled, &RngStream::new(70 + seed, 4), 10_000).unwrap();
        worst_mu = worst_mu.max((s.rip_mu.unwrap() - s.closed_form_mu.unwrap()).abs());
    }
    outcome(
        dominance && rip && worst_mu <= 1e-6,
        format!(
            "Monte Carlo <= exact on 10/10: {dominance}; two-sided RIP on all sampled secants: {rip}; \
             max |golden mu - 2/(l_min + l_max)| = {worst_mu:.2e}"
        ),
    )
}

struct PnpCase {
    name: &'static str,
    pnp: RateFit,
    red: RateFit,
    max_rate: f64,
    idempotence: f64,
    covers: bool,
    final_error: f64,
}

/// Picks the step (and for GM-RED the weight) with the smallest final error.
fn pnp_experiment() -> Vec<PnpCase> {
    let seed = 1;
    let set = ModelSet::haar_sparse(256, 8).unwrap();
    let x = set.sample_restricted(&mut RngStream::new(seed, 0), 32).unwrap();
    let d = GeneralizedProjection::haar_ht(256, 8).unwrap();
    let ops = vec![
        ("mask", MeasurementOp::random_mask(256, 0.3, &mut RngStream::new(seed, 1)).unwrap()),
        ("blur1", MeasurementOp::gaussian_blur(1.0, 1, 256).unwrap()),
        ("blur3", MeasurementOp::gaussian_blur(3.0, 1, 256).unwrap()),
    ];
    let iters = 3000;
    let mut out = Vec::new();
    for (name, op) in ops {
        let y = op.apply(&x).unwrap();
        let x0 = default_x0(&op, &y, &mut RngStream::new(seed, 2)).unwrap();
        let final_err = |t: Result<SolveTrace, Error>| t.ok().map(|t| *t.errors.last().unwrap());
        let mut best = (f64::INFINITY, 0.0);
        for mu in [0.5, 0.8, 1.0, 1.2, 1.5, 1.8] {
            if let Some(e) = final_err(pnp_pgm(&op, &y, &d, &SolveConfig::new(mu).with_max_iters(iters), &x0, Some(&x))) {
                if e < best.0 {
                    best = (e, mu);
                }
            }
        }
        let cfg = SolveConfig::new(best.1).with_max_iters(iters).with_diagnostics(true);
        let t = pnp_pgm(&op, &y, &d, &cfg, &x0, Some(&x)).unwrap();
        let rep = analyze(&t, &op, &d, &x).unwrap();
        let fit = rep.fit.clone().unwrap();
        let mut rbest = (f64::INFINITY, 0.0, 0.0);
        for mu in [0.5, 0.8, 1.0, 1.2, 1.5] {
            for lam in [0.25, 0.5, 1.0, 2.0, 4.0] {
                let cfg = SolveConfig::new(mu).with_lambda(lam).with_max_iters(iters);
                if let Some(e) = final_err(gm_red(&op, &y, &d, &cfg, &x0, Some(&x))) {
                    if e < rbest.0 {
                        rbest = (e, mu, lam);
                    }
                }
            }
        }
        let red_cfg = SolveConfig::new(rbest.1).with_lambda(rbest.2).with_max_iters(iters);
        let red = fit_linear_rate(&gm_red(&op, &y, &d, &red_cfg, &x0, Some(&x)).unwrap()).unwrap();
        out.push(PnpCase {
            name,
            covers: fit.covers(&rep.errors),
            pnp: fit,
            red,
            max_rate: rep.metrics.max_rate().unwrap_or(f64::INFINITY),
            idempotence: rep.metrics.max_idempotence().unwrap_or(0.0),
            final_error: *rep.errors.last().unwrap(),
        });
    }
    out
}

fn criterion_8(cases: &[PnpCase], elapsed: Duration) -> Outcome {
    let mut pass = elapsed <= Duration::from_secs(60);
    let mut parts = Vec::new();
    for c in cases {
        pass &= c.pnp.bounded && c.pnp.r < 1.0 && c.max_rate < 1.0 && c.idempotence <= 1e-12 && c.covers;
        parts.push(format!(
            "{}: r {:.4}, max delta*beta {:.4}, idempotence {:.1e}, envelope {}, final error {:.1e}",
            c.name,
            c.pnp.r,
            c.max_rate,
            c.idempotence,
            if c.covers { "covers" } else { "violated" },
            c.final_error
        ));
    }
    let r1 = cases.iter().find(|c| c.name == "blur1").unwrap().pnp.r;
    let r3 = cases.iter().find(|c| c.name == "blur3").unwrap().pnp.r;
    pass &= r3 >= r1;
    outcome(pass, format!("{}; r(3.0) {r3:.4} >= r(1.0) {r1:.4}; {:.1}s of 60s", parts.join("; "), elapsed.as_secs_f64()))
}

fn criterion_9(cases: &[PnpCase]) -> Outcome {
    let pass = cases.iter().all(|c| c.red.r >= c.pnp.r);
    let parts: Vec<String> =
        cases.iter().map(|c| format!("{}: GM-RED r {:.4} vs PnP r {:.4}", c.name, c.red.r, c.pnp.r)).collect();
    outcome(pass, parts.join("; "))
}

fn criterion_10() -> Outcome {
    // averaged-direction form x − μ∇f(x) − (I − μAᵀA)(x − P(x)), written out independently
    let op = MeasurementOp::gaussian(14, 20, &mut RngStream::new(10, 0)).unwrap();
    let set = ModelSet::sparse(20, 3).unwrap();
    let p = GeneralizedProjection::orth(set.clone());
    let x = set.sample(&mut RngStream::new(10, 1));
    let y = op.apply(&x).unwrap();
    let mu = 0.7;
    let t = gpgd(&op, &y, &p, &SolveConfig::new(mu).with_max_iters(200), &Vector::zeros(20), None).unwrap();
    let mut identity_err: f64 = 0.0;
    for w in t.iterates.windows(2) {
        let xn = &w[0];
        let px = p.apply(xn).unwrap();
        let grad = op.adjoint(&op.apply(xn).unwrap().sub(&y)).unwrap();
        let d = xn.sub(&px);
        let avg = xn.axpy(-mu, &grad).sub(&d.axpy(-mu, &op.normal(&d).unwrap()));
        identity_err = identity_err.max(avg.distance(&w[1]) / (1.0 + w[1].norm()));
    }
    let mut rng = RngStream::new(10, 2);
    let mut q_err: f64 = 0.0;
    for _ in 0..10_000 {
        let c = rng.uniform(1.0, 5.0);
        let (u, z, xx) = (sample_gaussian(&mut rng, 8), sample_gaussian(&mut rng, 8), sample_gaussian(&mut rng, 8));
        let direct = u.sub(&xx).norm_sq() - c * z.sub(&xx).norm_sq();
        q_err = q_err.max((q_value(c, &u, &z, &xx) - direct).abs());
    }
    let mut r_ok = true;
    let mut eq_err: f64 = 0.0;
    let sparse = ModelSet::sparse(8, 2).unwrap();
    for s in 0..20 {
        let mut rs = RngStream::new(11, s);
        let z = sample_gaussian(&mut rs, 8);
        let u = sparse.project(&z).unwrap();
        let c = rs.uniform(1.2, 4.0);
        let r = r_value(c, &sparse, &u, &z).unwrap();
        for _ in 0..2000 {
            let xx = sparse.sample(&mut rs).scale(rs.uniform(-3.0, 3.0));
            r_ok &= q_value(c, &u, &z, &xx) <= r + 1e-9;
        }
        let xs = r_maximizer(c, &sparse, &u, &z).unwrap();
        eq_err = eq_err.max((q_value(c, &u, &z, &xs) - r).abs());
    }
    outcome(
        identity_err <= 1e-12 && q_err <= 1e-10 && r_ok && eq_err <= 1e-9,
        format!(
            "GPGD vs averaged form {identity_err:.2e}; Q_c vs direct {q_err:.2e}; R_c >= sampled Q: {r_ok}; R_c - Q_c(x*) {eq_err:.2e}"
        ),
    )
}

fn plugin(name: &str, args: &[&str]) -> Vec<String> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "plugins", name].iter().collect();
    let mut cmd = vec!["python3".to_string(), path.to_string_lossy().into_owned()];
    cmd.extend(args.iter().map(|s| s.to_string()));
    cmd
}

fn fault_kind(mode: &str) -> String {
    let d = ExternalDenoiser::spawn_with_timeout(&plugin("fault.py", &[mode]), 0.1, Duration::from_secs(10)).unwrap();
    match d.denoise(&Vector::constant(8, 1.0)) {
        Ok(_) => "no error".into(),
        Err(Error::Bridge(BridgeError::Terminated(_))) => "terminated".into(),
        Err(Error::Bridge(BridgeError::MalformedFrame(_))) => "malformed".into(),
        Err(Error::Bridge(BridgeError::NonFinite(_))) => "non-finite".into(),
        Err(Error::Bridge(BridgeError::Timeout(_))) => "timeout".into(),
        Err(e) => format!("other: {e}"),
    }
}

fn criterion_11() -> Outcome {
    let echo = ExternalDenoiser::spawn(&plugin("echo.py", &[]), 0.1).unwrap();
    let x = sample_gaussian(&mut RngStream::new(12, 0), 256);
    let back = echo.denoise(&x).unwrap();
    let bitwise = back.as_slice().iter().zip(x.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
    let builtin = GeneralizedProjection::haar_ht(256, 8).unwrap();
    let external = GeneralizedProjection::external(ExternalDenoiser::spawn(&plugin("haar_ht.py", &["8"]), 0.1).unwrap());
    let mut ht_err: f64 = 0.0;
    for s in 0..5 {
        let z = sample_gaussian(&mut RngStream::new(12, 1 + s), 256);
        ht_err = ht_err.max(builtin.apply(&z).unwrap().distance(&external.apply(&z).unwrap()));
    }
    let start = Instant::now();
    let kinds = [fault_kind("exit"), fault_kind("garbage"), fault_kind("nan")];
    let quick = start.elapsed() < Duration::from_secs(10);
    let expected = ["terminated", "malformed", "non-finite"];
    let distinct = kinds.iter().zip(expected).all(|(k, e)| k == e);
    outcome(
        bitwise && ht_err <= 1e-12 && distinct && quick,
        format!("echo bitwise {bitwise}; plugin vs builtin {ht_err:.2e}; faults {kinds:?} in {:.2}s", start.elapsed().as_secs_f64()),
    )
}

fn run(id: usize, f: impl FnOnce() -> Outcome) -> bool {
    let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    println!("{} criterion {id}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    o.pass
}

fn main() {
    let mut results = Vec::new();
    results.push(run(1, criterion_1));
    results.push(run(2, criterion_2));
    results.push(run(3, criterion_3));
    results.push(run(4, criterion_4));
    results.push(run(5, criterion_5));
    results.push(run(6, criterion_6));
    results.push(run(7, criterion_7));
    let start = Instant::now();
    let cases = catch_unwind(pnp_experiment);
    let elapsed = start.elapsed();
    match &cases {
        Ok(c) => {
            results.push(run(8, || criterion_8(c, elapsed)));
            results.push(run(9, || criterion_9(c)));
        }
        Err(_) => {
            results.push(run(8, || outcome(false, "experiment panicked")));
            results.push(run(9, || outcome(false, "experiment panicked")));
        }
    }
    results.push(run(10, criterion_10));
    results.push(run(11, criterion_11));
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
