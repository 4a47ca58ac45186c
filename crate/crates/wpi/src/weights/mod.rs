//! Weight models for pseudo-marginal chains: moment and tail analysis for averaged
//! estimators, ABC hit-frequency weights, products of averages, and lognormal perturbations.
//!
//! Every model here ultimately produces the integrated tail `s -> int pi(dx) q_x(W >= s)` (or
//! an envelope of it) as a [`BetaFn`], which the kernel layer chains into a rate bound.

mod lognormal;

pub use lognormal::{
    budget_split, lambert_w, lognormal_avar_bound, lognormal_avar_sum, lognormal_beta,
    lognormal_finv, lognormal_mixing_n, sigma_star, sigma_star_exact, BudgetReport,
};

use crate::beta::BetaFn;
use crate::rate::RateBound;
use crate::{Error, Result};

/// Distributional model for the multiplicative weight `W` attached to each proposal.
#[derive(Clone, Debug)]
pub enum WeightModel {
    /// `W` is an average of `n` i.i.d. mean-1 draws; `moments[k - 2]` holds the base central
    /// absolute moment `E|W_1 - 1|^k` for `k = 2, ..., moments.len() + 1`.
    Averaged { moments: Vec<f64>, n: u64 },
    /// ABC hit-frequency weight over `n` simulations; `neg_moments[j - 1]` holds the integrated
    /// negative moment `int pi(dx) l(x)^(-j)` of the acceptance probability `l`.
    Abc { neg_moments: Vec<f64>, n: u64 },
    /// Product of `t` independent averages of `n` draws each, with per-factor moment growth
    /// controlled by `M_p` and rate parameter `alpha`; `mp_integral = int pi(dx) e^(M_p(x)/alpha)`
    /// and `p` is the moment order behind `M_p`.
    ProductOfAverages { t: u64, n: u64, p: f64, mp_integral: f64, alpha: f64 },
    /// Mean-1 lognormal weight: `log W ~ N(-sigma^2/2, sigma^2)`.
    Lognormal { sigma: f64 },
    /// Weights bounded above by `w_bar >= 1` (and mean 1, so `w_bar = 1` forces `W = 1`).
    Bounded { w_bar: f64 },
    /// Directly supplied integrated tail function.
    Generic { tail: BetaFn },
}

impl WeightModel {
    /// Lognormal model in the particle parameterization `sigma^2 = sigma0_sq / n`.
    pub fn lognormal_from_budget(sigma0_sq: f64, n: u64) -> Result<WeightModel> {
        if !(sigma0_sq > 0.0) || !sigma0_sq.is_finite() || n == 0 {
            return Err(Error::domain(format!(
                "lognormal budget parameterization needs sigma0_sq > 0 and n >= 1, got {sigma0_sq}, {n}"
            )));
        }
        Ok(WeightModel::Lognormal { sigma: (sigma0_sq / n as f64).sqrt() })
    }

    /// Envelope from a uniform `k`-th moment of the size-biased weight law: `m_k s^-k` by
    /// Markov's inequality.
    pub fn from_size_biased_moment(m_k: f64, k: f64) -> Result<WeightModel> {
        Ok(WeightModel::Generic { tail: BetaFn::polynomial(m_k, k)? })
    }

    /// The size-biased integrated tail envelope `beta'(s) >= int pi(dx) pt_x(W >= s)`, where
    /// `pt_x` is the weighted proposal law. Moment-based models yield pure power envelopes,
    /// bounded weights an indicator, and the lognormal model its sub-Gaussian closed form.
    pub fn tail_beta(&self) -> Result<BetaFn> {
        match self {
            WeightModel::Averaged { moments, n } => {
                let p = moments.len() as u32 + 1;
                let mp = averaged_moment_bound(moments, *n, p)?;
                BetaFn::polynomial(mp, f64::from(p) - 1.0)
            }
            WeightModel::Abc { neg_moments, n } => {
                let p = neg_moments.len() as u32;
                let c = abc_tail_constant(neg_moments, *n, p)?;
                BetaFn::polynomial(c, f64::from(p))
            }
            WeightModel::ProductOfAverages { t, n, p, mp_integral, alpha } => {
                let needed = product_required_n(*t, *alpha)?;
                if *n < needed {
                    return Err(Error::validation(format!(
                        "product of averages needs n >= {needed} for t = {t}, alpha = {alpha}; got n = {n}"
                    )));
                }
                if !(*p > 1.0) || !(*mp_integral >= 1.0) || !mp_integral.is_finite() {
                    return Err(Error::validation(format!(
                        "product tail needs p > 1 and a finite integral >= 1, got p = {p}, integral = {mp_integral}"
                    )));
                }
                BetaFn::polynomial(*mp_integral, p - 1.0)
            }
            WeightModel::Lognormal { sigma } => BetaFn::lognormal_tail(*sigma),
            WeightModel::Bounded { w_bar } => {
                if !(*w_bar >= 1.0) || !w_bar.is_finite() {
                    return Err(Error::domain(format!("bounded weights need w_bar >= 1, got {w_bar}")));
                }
                BetaFn::strong_pi(1.0, 1.0 / w_bar)
            }
            WeightModel::Generic { tail } => Ok(tail.clone()),
        }
    }
}

/// Default Burkholder-type constant for the `k`-th moment of a centered i.i.d. average;
/// `B_2 = 1` makes the second-moment case exact.
pub fn default_mz_constant(k: u32) -> f64 {
    if k == 2 {
        1.0
    } else {
        f64::from(k - 1).powf(f64::from(k) / 2.0)
    }
}

/// Bound on `E|W_N|^p` for an average of `N` i.i.d. mean-1 draws:
/// `1 + sum_{k=2}^p N^(-k/2) binom(p, k) B_k E|W_1 - 1|^k`, using the default constants.
pub fn averaged_moment_bound(moments: &[f64], n: u64, p: u32) -> Result<f64> {
    let b: Vec<f64> = (2..=p).map(default_mz_constant).collect();
    averaged_moment_bound_with(moments, n, p, &b)
}

/// [`averaged_moment_bound`] with caller-supplied constants `b[k - 2] = B_k`.
pub fn averaged_moment_bound_with(moments: &[f64], n: u64, p: u32, b: &[f64]) -> Result<f64> {
    if p < 2 || n == 0 {
        return Err(Error::domain(format!("moment bound needs p >= 2 and n >= 1, got p = {p}, n = {n}")));
    }
    let orders = (p - 1) as usize;
    if moments.len() < orders || b.len() < orders {
        return Err(Error::validation(format!(
            "moment order missing: need E|W-1|^k for k = 2..={p} ({orders} values), got {}",
            moments.len()
        )));
    }
    if moments[..orders].iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
        return Err(Error::validation("base moments must be finite and nonnegative".to_string()));
    }
    let nf = n as f64;
    let mut bound = 1.0;
    for k in 2..=p {
        let idx = (k - 2) as usize;
        bound += nf.powf(-f64::from(k) / 2.0) * binomial(p, k) * b[idx] * moments[idx];
    }
    Ok(bound)
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut out = 1.0;
    for i in 0..k {
        out = out * f64::from(n - i) / f64::from(i + 1);
    }
    out
}

/// Stirling number of the second kind `S(m, k)`: partitions of an `m`-set into `k` blocks.
/// Exact for `m <= 20`.
pub fn stirling2(m: u32, k: u32) -> u128 {
    if k > m {
        return 0;
    }
    if m == 0 {
        return 1; // k == 0 here
    }
    if k == 0 {
        return 0;
    }
    let mut row = vec![0u128; m as usize + 1];
    row[0] = 1; // S(0, 0)
    for i in 1..=m as usize {
        for j in (1..=i.min(m as usize)).rev() {
            row[j] = j as u128 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    row[k as usize]
}

fn falling_factorial(n: u64, k: u32) -> f64 {
    let mut out = 1.0;
    for i in 0..u64::from(k) {
        if i >= n {
            return 0.0;
        }
        out *= (n - i) as f64;
    }
    out
}

/// Raw moment `E[Bin(n, q)^m]` via `sum_k S(m, k) n^(k falling) q^k`.
pub fn binomial_moment(n: u64, q: f64, m: u32) -> f64 {
    (1..=m).map(|k| stirling2(m, k) as f64 * falling_factorial(n, k) * q.powi(k as i32)).sum()
}

/// Tail coefficient `C_{N,p}` of the ABC weight: the integrated `(p+1)`-th weight moment, so
/// that the integrated size-biased tail is at most `C_{N,p} s^(-p)`.
///
/// `neg_moments[j - 1]` holds `I_j = int pi(dx) l(x)^(-j)` for `j = 1..=p`. The coefficient is
/// `sum_{k=1}^{p+1} S(p+1, k) n^(k falling) n^(-(p+1)) I_{p+1-k}`, which is `1 + O(1/n)`; it
/// equals 1 identically only when `l` is constant at 1, and the `p = 1` case reads
/// `1 + (I_1 - 1)/n`.
pub fn abc_tail_constant(neg_moments: &[f64], n: u64, p: u32) -> Result<f64> {
    if p == 0 || n == 0 {
        return Err(Error::domain(format!("abc tail needs p >= 1 and n >= 1, got p = {p}, n = {n}")));
    }
    if neg_moments.len() < p as usize {
        return Err(Error::validation(format!(
            "need integrated negative moments I_1..I_{p}, got {}",
            neg_moments.len()
        )));
    }
    if neg_moments[..p as usize].iter().any(|m| !m.is_finite()) {
        return Err(Error::divergent(
            "a negative moment of the ABC acceptance probability diverges; use a smaller p".to_string(),
        ));
    }
    if neg_moments[..p as usize].iter().any(|m| *m < 1.0 - 1e-9) {
        return Err(Error::validation(
            "negative moments of a probability are at least 1".to_string(),
        ));
    }
    let nf = n as f64;
    let mut c = 0.0;
    for k in 1..=p + 1 {
        let j = (p + 1 - k) as usize; // order of the needed negative moment
        let i_j = if j == 0 { 1.0 } else { neg_moments[j - 1] };
        c += stirling2(p + 1, k) as f64 * falling_factorial(n, k) * nf.powi(-(p as i32 + 1)) * i_j;
    }
    Ok(c)
}

/// Integrated negative moments `I_j = sum_i pi[i] * l[i]^(-j)` for `j = 1..=j_max` of a finite
/// acceptance-probability profile.
pub fn abc_neg_moments_from_finite(pi: &[f64], ell: &[f64], j_max: u32) -> Result<Vec<f64>> {
    if pi.len() != ell.len() || pi.is_empty() || j_max == 0 {
        return Err(Error::validation("need matching nonempty pi and ell and j_max >= 1".to_string()));
    }
    if ell.iter().any(|l| !(*l > 0.0 && *l <= 1.0)) {
        return Err(Error::validation("acceptance probabilities must lie in (0, 1]".to_string()));
    }
    let total: f64 = pi.iter().sum();
    if pi.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::validation("pi must be a probability vector".to_string()));
    }
    Ok((1..=j_max)
        .map(|j| pi.iter().zip(ell).map(|(w, l)| w * l.powi(-(j as i32))).sum())
        .collect())
}

/// Smallest particle count `n` with `n >= alpha t + 1/2 + sqrt(alpha t)`, the admissibility
/// threshold for a product of `t` averages.
pub fn product_required_n(t: u64, alpha: f64) -> Result<u64> {
    if t == 0 || !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain(format!("need t >= 1 and alpha > 0, got t = {t}, alpha = {alpha}")));
    }
    let at = alpha * t as f64;
    let x = at + 0.5 + at.sqrt();
    Ok((x - 1e-9).ceil() as u64)
}

/// Whether `int_0^inf exp(-c x^ell + (b/alpha) x^k) dx / int_0^inf exp(-c x^ell) dx` is finite:
/// the moment-growth term is dominated iff `ell > k`, or `ell = k` with `alpha > b / c`.
pub fn product_integral_finite(b: f64, k: f64, c: f64, ell: f64, alpha: f64) -> bool {
    if b == 0.0 {
        return true;
    }
    ell > k || (ell == k && alpha > b / c)
}

/// Numerical value of `int pi(dx) exp(M_p(x) / alpha)` for `M_p(x) = b x^k` and a density
/// `pi proportional to exp(-c x^ell)` on the positive axis.
pub fn product_mp_integral(b: f64, k: f64, c: f64, ell: f64, alpha: f64) -> Result<f64> {
    if !(c > 0.0) || !(ell > 0.0) || !(alpha > 0.0) || !(b >= 0.0) || !(k >= 0.0) {
        return Err(Error::domain(format!(
            "need c > 0, ell > 0, alpha > 0, b >= 0, k >= 0; got b = {b}, k = {k}, c = {c}, ell = {ell}, alpha = {alpha}"
        )));
    }
    if !product_integral_finite(b, k, c, ell, alpha) {
        return Err(Error::divergent(format!(
            "exp(M_p / alpha) is not pi-integrable for b = {b}, k = {k}, c = {c}, ell = {ell}, alpha = {alpha}"
        )));
    }
    let rate = b / alpha;
    let phi = |x: f64| -c * x.powf(ell) + rate * x.powf(k);
    // Peak of the exponent; closed stationary point when the growth term is active.
    let (x_peak, phi_max) = if rate > 0.0 && ell > k && k > 0.0 {
        let xs = (rate * k / (c * ell)).powf(1.0 / (ell - k));
        (xs, phi(xs))
    } else {
        (0.0, phi(0.0))
    };
    let mut x_hi = (2.0 * x_peak).max(1.0);
    let mut guard = 0;
    while phi(x_hi) > phi_max - 160.0 {
        x_hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::divergent("exponent fails to fall off numerically".to_string()));
        }
    }
    let mut f = |x: f64| (phi(x) - phi_max).exp();
    let scaled = crate::numeric::adaptive_simpson(&mut f, 0.0, x_hi, 1e-300, 1e-11);
    let numerator = scaled * phi_max.exp();
    // int_0^inf exp(-c x^ell) dx = Gamma(1 + 1/ell) / c^(1/ell).
    let denominator = statrs::function::gamma::gamma(1.0 + 1.0 / ell) / c.powf(1.0 / ell);
    Ok(numerator / denominator)
}

/// Tail bound `mp_integral * s^(-(p-1))` for the product-of-averages weight at level `s`.
pub fn product_tail_bound(mp_integral: f64, p: f64, s: f64) -> Result<f64> {
    if !(mp_integral >= 0.0) || !mp_integral.is_finite() {
        return Err(Error::domain(format!("integral must be finite and nonnegative, got {mp_integral}")));
    }
    if !(p > 1.0) || !(s > 0.0) {
        return Err(Error::domain(format!("need p > 1 and s > 0, got p = {p}, s = {s}")));
    }
    Ok(mp_integral * s.powf(1.0 - p))
}

/// Upper bound on the asymptotic variance of ergodic averages of `f`:
/// `v(f, P) <= -l2_f_sq + 4 phi_f sum_{n >= 0} Finv(n)`.
///
/// `phi_f` is `Phi(f)` and `l2_f_sq` the squared stationary L2 norm of the centered `f`.
/// Divergent rate series (inverse rates decaying like `n^(-1)` or slower) surface as a
/// divergence error rather than a number.
pub fn asymptotic_variance_bound(rb: &RateBound, phi_f: f64, l2_f_sq: f64) -> Result<f64> {
    if !(phi_f >= 0.0) || !phi_f.is_finite() || !(l2_f_sq >= 0.0) || !l2_f_sq.is_finite() {
        return Err(Error::domain(format!(
            "need finite phi_f >= 0 and l2_f_sq >= 0, got {phi_f} and {l2_f_sq}"
        )));
    }
    // The norm can never exceed a * Phi; tolerate float dust on the boundary case.
    if l2_f_sq > rb.a() * phi_f * (1.0 + 1e-9) {
        return Err(Error::validation(format!(
            "l2_f_sq = {l2_f_sq} exceeds a * phi_f = {}; the pair is inconsistent",
            rb.a() * phi_f
        )));
    }
    Ok(-l2_f_sq + 4.0 * phi_f * rb.sum_f_inverse()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn averaged_second_moment_is_exact() {
        // p = 2 reduces to the exact variance identity E[W_N^2] = 1 + Var(W_1)/N.
        let b = averaged_moment_bound(&[0.25], 100, 2).unwrap();
        assert_relative_eq!(b, 1.0025, max_relative = 1e-14);
        let b = averaged_moment_bound(&[1.0], 100, 2).unwrap();
        assert_relative_eq!(b, 1.01, max_relative = 1e-14);
    }

    /// Central absolute moments of the shape-6 inverse-gamma with raw moments
    /// `E[W^k] = 5^k / prod_{i=1..k} (6 - i)`; the odd order uses the Cauchy-Schwarz
    /// envelope `sqrt(m2 m4)`.
    fn inverse_gamma_moments() -> [f64; 3] {
        let e2 = 25.0 / 20.0;
        let e3 = 125.0 / 60.0;
        let e4 = 625.0 / 120.0;
        let m2 = e2 - 1.0;
        let m4 = e4 - 4.0 * e3 + 6.0 * e2 - 3.0;
        [m2, (m2 * m4).sqrt(), m4]
    }

    #[test]
    fn averaged_fourth_moment_decreases_in_n() {
        let m = inverse_gamma_moments();
        let bounds: Vec<f64> =
            [1u64, 10, 100].iter().map(|n| averaged_moment_bound(&m, *n, 4).unwrap()).collect();
        assert!(bounds[0] > bounds[1] && bounds[1] > bounds[2]);
        assert!(bounds.iter().all(|b| *b >= 1.0));
        // Missing third-order moment.
        assert!(averaged_moment_bound(&m[..1], 10, 4).is_err());
    }

    #[test]
    fn averaged_bound_approaches_one_like_inverse_n() {
        // The scaled excess (bound - 1) * n tends to the k = 2 term binom(p, 2) B_2 m_2; the
        // higher orders vanish like n^(1 - k/2).
        let m = inverse_gamma_moments();
        let limit = binomial(4, 2) * m[0];
        let dev = |n: u64| ((averaged_moment_bound(&m, n, 4).unwrap() - 1.0) * n as f64 - limit).abs();
        let d3 = dev(1_000);
        let d5 = dev(100_000);
        assert!(d5 < d3, "scaled excess should shrink: {d3} vs {d5}");
        assert!(d5 < 0.15 * d3, "excess decays like 1/sqrt(n): {d3} vs {d5}");
    }

    fn enumerated_bin_moment(n: u64, q: f64, m: u32) -> f64 {
        // Full pmf sweep; n is small.
        (0..=n)
            .map(|j| {
                let pmf = binomial(n as u32, j as u32) * q.powi(j as i32) * (1.0 - q).powi((n - j) as i32);
                pmf * (j as f64).powi(m as i32)
            })
            .sum()
    }

    #[test]
    fn stirling_moments_match_enumeration() {
        assert_eq!(stirling2(2, 1), 1);
        assert_eq!(stirling2(2, 2), 1);
        assert_eq!(stirling2(5, 3), 25);
        for n in 1..=8u64 {
            for &q in &[0.1, 0.3, 0.5, 0.9] {
                for m in 1..=5u32 {
                    assert_relative_eq!(
                        binomial_moment(n, q, m),
                        enumerated_bin_moment(n, q, m),
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    fn enumerated_weight_moment(n: u64, q: f64, m: u32) -> f64 {
        enumerated_bin_moment(n, q, m) / (n as f64 * q).powi(m as i32)
    }

    #[test]
    fn abc_constant_matches_enumeration() {
        // Point-mass acceptance probability: C_{N,p} integrates E[W_N^{p+1}] exactly.
        for &q in &[0.1f64, 0.5] {
            for n in 1..=5u64 {
                for p in 1..=3u32 {
                    let neg: Vec<f64> = (1..=p).map(|j| q.powi(-(j as i32))).collect();
                    assert_relative_eq!(
                        abc_tail_constant(&neg, n, p).unwrap(),
                        enumerated_weight_moment(n, q, p + 1),
                        max_relative = 1e-12
                    );
                }
            }
        }
        // n = 1 collapses to the pure negative moment l^(-p).
        for p in 1..=3u32 {
            let neg: Vec<f64> = (1..=p).map(|j| 0.4f64.powi(-(j as i32))).collect();
            assert_relative_eq!(
                abc_tail_constant(&neg, 1, p).unwrap(),
                0.4f64.powi(-(p as i32)),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn abc_first_order_constant() {
        // l identically 1: the weight is exactly 1 and C_{N,1} = 1 for every n.
        for n in 1..=5u64 {
            assert_relative_eq!(abc_tail_constant(&[1.0], n, 1).unwrap(), 1.0, max_relative = 1e-14);
        }
        // Two-point profile: C_{N,1} = 1 + (I_1 - 1)/n.
        let neg = abc_neg_moments_from_finite(&[0.5, 0.5], &[0.1, 0.5], 1).unwrap();
        assert_relative_eq!(neg[0], 6.0, max_relative = 1e-14);
        for n in 1..=5u64 {
            assert_relative_eq!(
                abc_tail_constant(&neg, n, 1).unwrap(),
                1.0 + 5.0 / n as f64,
                max_relative = 1e-12
            );
        }
        assert!(matches!(
            abc_tail_constant(&[f64::INFINITY], 4, 1),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn product_particle_threshold() {
        assert_eq!(product_required_n(1, 1.0).unwrap(), 3);
        assert_eq!(product_required_n(100, 1.0).unwrap(), 111);
        let mut prev = 0;
        for t in [1u64, 2, 5, 10, 50] {
            let n = product_required_n(t, 0.7).unwrap();
            assert!(n >= prev);
            prev = n;
        }
        assert!(product_required_n(5, 0.5).unwrap() <= product_required_n(5, 1.5).unwrap());
    }

    #[test]
    fn product_integral_classifier_and_quadrature() {
        // Linear exponent against a linear envelope: finite exactly when alpha > b/c.
        assert!(product_integral_finite(1.0, 1.0, 1.0, 1.0, 2.0));
        assert!(!product_integral_finite(1.0, 1.0, 1.0, 1.0, 0.5));
        assert!(!product_integral_finite(1.0, 1.0, 1.0, 1.0, 1.0));
        assert!(matches!(product_mp_integral(1.0, 1.0, 1.0, 1.0, 0.5), Err(Error::Divergent(_))));
        // Gaussian-type case has the closed form e^(r^2/(4c)) erfc(-r/(2 sqrt(c))), r = b/alpha.
        for &(b, c, alpha) in &[(1.0, 1.0, 2.0), (3.0, 2.0, 1.5)] {
            let r: f64 = b / alpha;
            let closed = (r * r / (4.0 * c)).exp()
                * statrs::function::erf::erfc(-r / (2.0 * c.sqrt()));
            let numeric = product_mp_integral(b, 1.0, c, 2.0, alpha).unwrap();
            assert_relative_eq!(numeric, closed, max_relative = 1e-6);
        }
    }

    #[test]
    fn product_tail_arithmetic() {
        // M_p identically zero gives the bare power.
        assert_relative_eq!(product_tail_bound(1.0, 3.0, 10.0).unwrap(), 0.01, max_relative = 1e-14);
        assert!(product_tail_bound(1.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn weight_models_produce_tails() {
        let b = WeightModel::Bounded { w_bar: 2.0 }.tail_beta().unwrap();
        assert_eq!(b.eval(1.9).unwrap(), 1.0);
        assert_eq!(b.eval(2.1).unwrap(), 0.0);

        let avg = WeightModel::Averaged { moments: vec![1.0], n: 100 }.tail_beta().unwrap();
        assert_relative_eq!(avg.eval(10.0).unwrap(), 0.101, max_relative = 1e-12);

        let abc = WeightModel::Abc { neg_moments: vec![1.0], n: 7 }.tail_beta().unwrap();
        assert_relative_eq!(abc.eval(5.0).unwrap(), 0.2, max_relative = 1e-12);

        let log = WeightModel::Lognormal { sigma: 1.0 }.tail_beta().unwrap();
        assert_relative_eq!(
            log.eval((2.5f64).exp()).unwrap(),
            (-2.0f64).exp(),
            max_relative = 1e-12
        );

        let short = WeightModel::ProductOfAverages {
            t: 100,
            n: 50,
            p: 2.0,
            mp_integral: 1.5,
            alpha: 1.0,
        };
        assert!(short.tail_beta().is_err());
        let ok = WeightModel::ProductOfAverages {
            t: 100,
            n: 111,
            p: 2.0,
            mp_integral: 1.5,
            alpha: 1.0,
        };
        assert_relative_eq!(ok.tail_beta().unwrap().eval(3.0).unwrap(), 0.5, max_relative = 1e-12);

        let m = WeightModel::lognormal_from_budget(4.0, 16).unwrap();
        match m {
            WeightModel::Lognormal { sigma } => assert_relative_eq!(sigma, 0.5, max_relative = 1e-15),
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn variance_bound_geometric_and_divergent() {
        use crate::Error;

        // Indicator coefficient: the rate series is exactly geometric, so the bound
        // collapses to -l2 + 4 phi / (1 - e^(-c_p)).
        for c_p in [0.1f64, 0.5, 1.0] {
            let rb = RateBound::new(BetaFn::strong_pi(1.0, c_p).unwrap()).unwrap();
            let got = asymptotic_variance_bound(&rb, 2.0, 0.7).unwrap();
            let want = -0.7 + 8.0 / (1.0 - (-c_p).exp());
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }

        // Inverse rates decaying like n^(-1/2) sum to infinity.
        let rb = RateBound::new(BetaFn::polynomial(1.0, 0.5).unwrap()).unwrap();
        assert!(matches!(
            asymptotic_variance_bound(&rb, 1.0, 0.0),
            Err(Error::Divergent(_))
        ));

        // Inconsistent pair: the norm cannot exceed a * phi.
        let rb = RateBound::new(BetaFn::strong_pi(1.0, 0.5).unwrap()).unwrap();
        assert!(asymptotic_variance_bound(&rb, 1.0, 1.5).is_err());
        assert!(asymptotic_variance_bound(&rb, -1.0, 0.0).is_err());
    }
}
