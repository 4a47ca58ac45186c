//! End-to-end checks of the library's headline guarantees, one test per guarantee,
//! each at the tolerance and time budget it is documented to meet.

use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use wpi::beta::{Interp, Tail};
use wpi::comparison;
use wpi::kernels::{estimate_decay, imh_beta, imh_rate, pm_rate, DecayOptions, ImhSpec, PmSpec, StartDist};
use wpi::numeric;
use wpi::oracle;
use wpi::rate::RateOptions;
use wpi::weights::{self, WeightModel};
use wpi::{BetaFn, PhiFunctional, RateBound};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn polynomial_rate_closed_form_and_numeric_agree() {
    let t0 = Instant::now();
    let beta = BetaFn::polynomial(1.0, 2.0).unwrap();
    let closed = RateBound::new(beta.clone()).unwrap();
    let numeric_rb = RateBound::with_options(
        beta,
        1.0,
        RateOptions { force_numeric: true, f_infinity: Some(true) },
    )
    .unwrap();

    let mut worst_k = 0.0f64;
    for &v in &numeric::log_spaced(1e-6, 0.9, 40) {
        worst_k = worst_k.max(rel(numeric_rb.kstar(v).unwrap(), closed.kstar(v).unwrap()));
    }
    assert!(worst_k <= 1e-6, "conjugate mismatch {worst_k:.3e}");

    let mut worst_f = 0.0f64;
    for &x in &numeric::log_spaced(1e-5, 0.9, 40) {
        worst_f = worst_f.max(rel(numeric_rb.f(x).unwrap(), closed.f(x).unwrap()));
    }
    assert!(worst_f <= 1e-6, "rate-integral mismatch {worst_f:.3e}");

    // The inverse rate never exceeds 27 n^-2 and meets it once the pure power form is
    // active (the capped region below the crossover is the sharper bound min(1, .)).
    for &n in &numeric::log_spaced(1.0, 1e6, 50) {
        let envelope = 27.0 * n.powi(-2);
        let f = closed.f_inverse(n).unwrap();
        assert!(f <= envelope * (1.0 + 1e-9), "inverse rate {f} above envelope {envelope} at n = {n}");
    }
    for &n in &[10.0, 100.0, 1e4] {
        assert!(rel(closed.f_inverse(n).unwrap(), 27.0 * n.powi(-2)) <= 1e-12);
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 1.0, "took {dt:.2}s, budget 1s");
    println!("polynomial closed form: pass (K* {worst_k:.1e}, F {worst_f:.1e}, {dt:.2}s)");
}

#[test]
fn strong_inequality_rate_is_exactly_exponential() {
    for &c_p in &[0.05, 0.3, 0.6, 1.0] {
        let rb = RateBound::new(BetaFn::strong_pi(1.0, c_p).unwrap()).unwrap();
        for n in 1..=100u32 {
            let nf = f64::from(n);
            let err = rel(rb.f_inverse(nf).unwrap(), (-c_p * nf).exp());
            assert!(err <= 1e-10, "exp rate off by {err:.3e} at n = {n}, c_p = {c_p}");
        }
    }
    println!("strong-inequality exponential rate: pass");
}

#[test]
fn weak_chaining_composes_polynomial_exponents() {
    let t0 = Instant::now();
    let b1 = BetaFn::polynomial(1.0, 1.0).unwrap();
    let b2 = BetaFn::polynomial(1.0, 1.0).unwrap();
    let rb = RateBound::new(comparison::chain_weak(&b1, &b2)).unwrap();

    // Two unit-exponent links compose to exponent 1/(1 + 1 + 1) in the induced rate.
    let n_grid = numeric::log_spaced(1e3, 1e7, 25);
    let ln: Vec<f64> = n_grid.iter().map(|n| n.ln()).collect();
    let lf: Vec<f64> = n_grid.iter().map(|n| rb.f_inverse(*n).unwrap().ln()).collect();
    let slope = numeric::ls_slope(&ln, &lf);
    assert!((slope + 1.0 / 3.0).abs() <= 0.02, "fitted exponent {slope:.4}, expected -1/3");

    // The composed conjugate equals the two-stage composition of the link conjugates.
    let mut worst = 0.0f64;
    for &v in &numeric::log_spaced(0.02, 0.5, 15) {
        worst = worst.max(rel(rb.kstar(v).unwrap(), comparison::chain_weak_conjugate(&b1, &b2, v).unwrap()));
    }
    assert!(worst <= 1e-4, "conjugate composition mismatch {worst:.3e}");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 10.0, "took {dt:.2}s, budget 10s");
    println!("weak chaining: pass (exponent {slope:.4}, conjugate {worst:.1e}, {dt:.2}s)");
}

// Iterated quadrature of the pair tail event for the exponential proposal family, the
// inner dimension resolved against the product law piece by piece.
fn exp_exp_beta_by_quadrature(a1: f64, a2: f64, s: f64) -> f64 {
    let xs = s.ln() / (a2 - a1);
    let pi = |x: f64| a1 * (-a1 * x).exp();
    let hi = xs + 60.0 / a1;
    let mut tail_f = |y: f64| pi(y);
    let tail = numeric::adaptive_simpson(&mut tail_f, xs, hi, 1e-14, 1e-12);
    let mut outer_low = |x: f64| pi(x) * tail;
    let below = numeric::adaptive_simpson(&mut outer_low, 0.0, xs, 1e-14, 1e-12);
    let mut outer_hi = |x: f64| pi(x);
    let above = numeric::adaptive_simpson(&mut outer_hi, xs, hi, 1e-14, 1e-12);
    0.5 * (below + above)
}

#[test]
fn independence_sampler_beta_rate_and_decay() {
    let t0 = Instant::now();
    let spec = ImhSpec::exp_exp(1.0, 2.0).unwrap();

    for &s in &[1.0, 4.0, 16.0, 100.0] {
        let u = 1.0 / s;
        let est = imh_beta(&spec, s).unwrap();
        assert_eq!(est.se, 0.0);
        assert!((est.value - (u - 0.5 * u * u)).abs() <= 1e-12, "closed form off at s = {s}");
    }
    for &s in &[2.0, 4.0, 25.0] {
        let q = exp_exp_beta_by_quadrature(1.0, 2.0, s);
        assert!((imh_beta(&spec, s).unwrap().value - q).abs() <= 1e-6, "quadrature off at s = {s}");
    }

    // A million paired steps of the sampler: the centered tail indicator (unit
    // oscillation) must stay below the certified inverse rate within noise.
    let rb = imh_rate(&spec).unwrap();
    let p_tail = (-1.0f64).exp();
    let f = move |x: &f64| f64::from(*x > 1.0) - p_tail;
    let start = |rng: &mut ChaCha12Rng| spec.draw_target(rng).expect("closed family samples its target");
    let opts = DecayOptions {
        n_grid: vec![1, 2, 4, 8, 16, 32],
        replicas: 8,
        pairs_per_replica: 2000,
        seed: 0xacce_55,
    };
    let est = estimate_decay(&spec, &f, StartDist::Stationary(&start), &opts)
        .unwrap()
        .with_bound(&rb, 1.0)
        .unwrap();
    let worst = est.worst_excess_se().unwrap();
    assert!(worst <= 3.0, "decay exceeds the bound by {worst:.2} standard errors");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 120.0, "took {dt:.2}s, budget 120s");
    println!("independence sampler: pass (worst excess {worst:.2} se, {dt:.2}s)");
}

#[test]
fn finite_state_battery_certifies_and_detects_sabotage() {
    let t0 = Instant::now();
    let phi = PhiFunctional::OscSquared;
    let battery = oracle::verify_battery(50, 10, 200, 0xba77, &phi, true).unwrap();
    assert!(battery.passed(), "{} violations in the clean battery", battery.violations);
    assert!(battery.worst_ratio <= 1.0 + 1e-6, "worst ratio {}", battery.worst_ratio);

    // Halving the coefficient must break the certificate somewhere nearby.
    let mut rng = ChaCha12Rng::seed_from_u64(0x5ab0);
    let mut detected = false;
    for i in 0..10usize {
        let chain = oracle::random_reversible_positive(2 + i % 5, &mut rng);
        let report = oracle::verify_decay_bound_scaled(&chain, &phi, 100, 7, 0.5).unwrap();
        if !report.passed() {
            detected = true;
            break;
        }
    }
    assert!(detected, "halved coefficient went undetected");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 300.0, "took {dt:.2}s, budget 300s");
    println!("finite-state battery: pass (worst ratio {:.4}, {dt:.2}s)", battery.worst_ratio);
}

#[test]
fn converse_construction_round_trips_the_rate() {
    let t0 = Instant::now();
    let src = RateBound::new(BetaFn::polynomial(1.0, 2.0).unwrap()).unwrap();
    let gamma = move |n: f64| src.f_inverse(n).unwrap_or(f64::NAN);

    for s in [5.0, 50.0, 500.0] {
        let b1 = oracle::necessity_beta(&gamma, s, None).unwrap();
        let env = core::f64::consts::E * gamma(s.floor());
        assert!(b1 <= env * (1.0 + 1e-9), "converse value {b1:.3e} above e-envelope {env:.3e} at s = {s}");
    }

    let s_grid = numeric::log_spaced(10.0, 1e4, 15);
    let mut values = Vec::with_capacity(s_grid.len());
    for &s in &s_grid {
        values.push(oracle::necessity_beta(&gamma, s, None).unwrap());
    }
    let ls: Vec<f64> = s_grid.iter().map(|s| s.ln()).collect();
    let lv: Vec<f64> = values.iter().map(|b| b.ln()).collect();
    let tail = -numeric::ls_slope(&ls, &lv);
    let rebuilt = RateBound::new(
        BetaFn::tabulated(s_grid, values, Some(Tail::Power(tail)), Interp::LogLog).unwrap(),
    )
    .unwrap();
    let n_grid = numeric::log_spaced(1e2, 1e5, 12);
    let ln: Vec<f64> = n_grid.iter().map(|n| n.ln()).collect();
    let lf: Vec<f64> = n_grid.iter().map(|n| rebuilt.f_inverse(*n).unwrap().ln()).collect();
    let slope = numeric::ls_slope(&ln, &lf);
    assert!((slope + 2.0).abs() <= 0.1, "round-trip exponent {slope:.3}, expected -2");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 60.0, "took {dt:.2}s, budget 60s");
    println!("converse round trip: pass (exponent {slope:.3}, {dt:.2}s)");
}

#[test]
fn lognormal_weight_suite_holds() {
    let t0 = Instant::now();

    // (a) The closed-form inverse rate dominates the numeric chained rate everywhere tested.
    for &sigma in &[0.5, 1.0, 2.0] {
        for &c_p in &[0.3, 1.0] {
            let spec = PmSpec::strong(c_p, WeightModel::Lognormal { sigma }).unwrap();
            let pmr = pm_rate(&spec).unwrap();
            for &n in &[1.0, 10.0, 100.0, 1000.0] {
                let numeric_v = pmr.bound.f_inverse(n).unwrap();
                let closed_v = weights::lognormal_finv(sigma, c_p, n).unwrap();
                assert!(
                    numeric_v <= closed_v * (1.0 + 1e-9),
                    "numeric {numeric_v:.3e} above closed {closed_v:.3e} at sigma {sigma}, c_p {c_p}, n {n}"
                );
            }
        }
    }

    // (b) The mixing step count brings the inverse rate under the squared target.
    for &(eps, sigma, c_p) in &[(0.1, 0.5, 0.4), (0.1, 1.5, 1.0), (0.01, 1.0, 0.7)] {
        let n = weights::lognormal_mixing_n(eps, sigma, c_p).unwrap();
        let v = weights::lognormal_finv(sigma, c_p, n).unwrap();
        assert!(v <= eps * eps * (1.0 + 1e-9), "mixing target missed: {v:.3e} > {:.3e}", eps * eps);
    }

    // (c) The simplified working point: sqrt(H) * sigma*(H) tends to 3.
    let h = 1e6f64;
    let limit = h.sqrt() * weights::sigma_star_exact(h);
    assert!((limit - 3.0).abs() <= 1e-2, "sqrt(H) sigma* = {limit:.5} at H = 1e6");

    // (d) The variance-optimal noise level, independent of the gap constant.
    let stars: Vec<f64> = [0.1, 0.5, 1.0].iter().map(|&c| weights::sigma_star(c).unwrap()).collect();
    for &s in &stars {
        assert!((s - 0.973).abs() <= 0.01, "sigma* = {s:.5}");
    }
    let spread = stars.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - stars.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread <= 1e-6, "sigma* varies with the gap constant by {spread:.2e}");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 60.0, "took {dt:.2}s, budget 60s");
    println!("lognormal suite: pass (sigma* {:.4}, sqrt(H) sigma* {limit:.4}, {dt:.2}s)", stars[0]);
}

fn brute_binomial_moment(n: u64, q: f64, m: u32) -> f64 {
    let mut total = 0.0;
    for b in 0..=n {
        let mut comb = 1.0;
        for i in 0..b {
            comb = comb * (n - i) as f64 / (i + 1) as f64;
        }
        total += comb * q.powi(b as i32) * (1.0 - q).powi((n - b) as i32) * (b as f64).powi(m as i32);
    }
    total
}

#[test]
fn moment_identities_match_enumeration() {
    let t0 = Instant::now();
    for n in 1..=8u64 {
        for &q in &[0.2, 0.5, 0.9] {
            for m in 1..=5u32 {
                let direct = weights::binomial_moment(n, q, m);
                let brute = brute_binomial_moment(n, q, m);
                assert!(
                    (direct - brute).abs() <= 1e-12 * brute.max(1.0),
                    "moment mismatch at n {n}, q {q}, m {m}: {direct} vs {brute}"
                );
            }
        }
    }

    // Second-order averaged bound collapses to 1 + Var/N.
    for &var in &[0.25, 0.7, 3.0] {
        for &n in &[1u64, 10, 100] {
            let bound = weights::averaged_moment_bound(&[var], n, 2).unwrap();
            let want = 1.0 + var / n as f64;
            assert!((bound - want).abs() <= 1e-14 * want, "p = 2 bound {bound} vs {want}");
        }
    }

    // The required per-factor sample size is plain ceiling arithmetic.
    let mut checked = 0usize;
    for &t in &[1u64, 2, 5, 10, 50] {
        for &alpha in &[0.3, 1.0, 2.5, 10.0] {
            let req = weights::product_required_n(t, alpha).unwrap();
            let x = alpha * t as f64 + 0.5 + (alpha * t as f64).sqrt();
            assert_eq!(req, (x - 1e-9).ceil() as u64, "at t {t}, alpha {alpha}");
            checked += 1;
        }
    }
    assert_eq!(checked, 20);
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 30.0, "took {dt:.2}s, budget 30s");
    println!("moment identities: pass ({dt:.2}s)");
}

#[test]
fn noise_curve_has_unique_interior_minimum() {
    let grid = numeric::lin_spaced(0.1, 3.0, 80);
    let ys: Vec<f64> = grid.iter().map(|&s| weights::lognormal_avar_bound(s, 0.5).unwrap().1).collect();
    let k = ys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    assert!(k > 0 && k + 1 < ys.len(), "minimum sits on the boundary at index {k}");
    for i in 0..k {
        assert!(ys[i + 1] < ys[i], "curve not falling left of the minimum at index {i}");
    }
    for i in k..ys.len() - 1 {
        assert!(ys[i + 1] > ys[i], "curve not rising right of the minimum at index {i}");
    }
    assert!((grid[k] - 0.973).abs() <= 0.05, "grid minimum at {:.4}", grid[k]);
    println!("noise curve: pass (unique interior minimum at sigma = {:.4})", grid[k]);
}
