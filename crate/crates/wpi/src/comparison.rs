//! Chaining calculus: composing inequality coefficients across kernels.
//!
//! Each operation takes coefficients certified for one or two kernels and produces the
//! coefficient certified for the comparison target: Dirichlet-form domination with constant
//! `C_P` ([`chain_strong`]), two-kernel composition by the infimum rule ([`chain_weak`]),
//! left-spectral-gap laziness corrections ([`spectral_gap_correct`]), and tail-mass domination
//! terms with a Hölder exponent ([`dirichlet_domination_beta`]). [`beta_sequence_limit`]
//! quantifies how rate bounds converge along a family of coefficients shrinking to a limit.

use crate::beta::BetaFn;
use crate::numeric;
use crate::rate::{self, RateBound};
use crate::{Error, Result};

/// `beta(s) = beta_prime(C_P s) / C_P` for a kernel whose Dirichlet form dominates the original
/// with constant `C_P` in `(0, 1]`.
pub fn chain_strong(c_p: f64, beta_prime: &BetaFn) -> Result<BetaFn> {
    if !(c_p > 0.0 && c_p <= 1.0) {
        return Err(Error::domain(format!("chain_strong requires C_P in (0, 1], got {c_p}")));
    }
    beta_prime.clone().scaled(1.0 / c_p, c_p)
}

/// Two-kernel composition: `beta(s) = inf { s1 beta2(s2) + beta1(s1) : s1 s2 = s }`.
///
/// The returned coefficient evaluates the infimum by grid search plus golden-section refinement
/// over `log s1`. The conjugate identity `K* = K2* ∘ K1*` provides an independent evaluation
/// path, exposed as [`chain_weak_conjugate`].
///
/// Obligation carried by the caller: the composition is certified when the regularizer of the
/// first inequality is not inflated by the second kernel (`Phi1(P2 f) <= Phi1(f)`), which holds
/// for the oscillation and `2p`-norm functionals; an arbitrary user coefficient carries no such
/// certificate.
pub fn chain_weak(beta1: &BetaFn, beta2: &BetaFn) -> BetaFn {
    BetaFn::WeakChain { first: Box::new(beta1.clone()), second: Box::new(beta2.clone()) }
}

/// Conjugate-composition evaluation of the [`chain_weak`] coefficient: `K2*(K1*(v))`.
pub fn chain_weak_conjugate(beta1: &BetaFn, beta2: &BetaFn, v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("conjugate composition needs v > 0, got {v}")));
    }
    let k1 = rate::kstar_numeric(beta1, v)?;
    if k1 == 0.0 {
        return Ok(0.0);
    }
    if !k1.is_finite() {
        return Ok(f64::INFINITY);
    }
    rate::kstar_numeric(beta2, k1)
}

/// Laziness/left-spectral-gap correction: `beta_corrected(s) = beta(c_gap s)` with
/// `c_gap` in `(0, 1]`. With `c_gap = 1` this is the reversible positive case.
pub fn spectral_gap_correct(beta: &BetaFn, c_gap: f64) -> Result<BetaFn> {
    if !(c_gap > 0.0 && c_gap <= 1.0) {
        return Err(Error::domain(format!("spectral_gap_correct requires c_gap in (0, 1], got {c_gap}")));
    }
    beta.clone().scaled(1.0, c_gap)
}

/// Hölder-exponent tail term `s -> eps_tail(s)^(1/q)` with `q = p / (p - 1)`, the domination
/// remainder fed into the chaining rules. `p = inf` gives exponent one (the oscillation pairing).
///
/// `eps_tail` must behave like a tail-mass function where it matters: nonnegative everywhere
/// and at most one on `s >= 1`, checked on probe points at construction. Values above one below
/// `s = 1` are tolerated so that pure power envelopes of the mass can be passed directly.
pub fn dirichlet_domination_beta(eps_tail: &BetaFn, p: f64) -> Result<BetaFn> {
    if !(p > 1.0) {
        return Err(Error::domain(format!("dirichlet_domination_beta requires p > 1, got {p}")));
    }
    for s in [1e-9, 1e-3, 1.0, 1e3, 1e9, 1e13] {
        let v = eps_tail.eval(s)?;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::validation(format!(
                "eps_tail must be finite and nonnegative; got {v} at s = {s:.1e}"
            )));
        }
        if s >= 1.0 && v > 1.0 + 1e-9 {
            return Err(Error::validation(format!(
                "eps_tail must not exceed 1 on s >= 1; got {v} at s = {s:.1e}"
            )));
        }
    }
    let q = if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    if q == 1.0 {
        return Ok(eps_tail.clone());
    }
    let inv_q = 1.0 / q;
    Ok(match eps_tail {
        BetaFn::Polynomial { c0, c1 } => BetaFn::polynomial(c0.powf(inv_q), c1 * inv_q)?,
        BetaFn::StrongPi { a, c_p } => BetaFn::strong_pi(a.powf(inv_q), *c_p)?,
        BetaFn::StretchedExp { eta0, eta1, eta2 } => {
            BetaFn::stretched_exp(eta0.powf(inv_q), eta1 * inv_q, *eta2)?
        }
        other => {
            let inner = other.clone();
            BetaFn::callable(move |s| match inner.eval(s) {
                Ok(v) => v.powf(inv_q),
                Err(_) => f64::NAN,
            })
        }
    })
}

/// Tail-mass function `s -> sum { pi_i : 1 / eps_i >= s }` of a finite laziness profile,
/// the exact enumeration form of `mu(eps(X)^-1 >= s)`.
pub fn laziness_tail(pi: &[f64], eps: &[f64]) -> Result<BetaFn> {
    if pi.len() != eps.len() || pi.is_empty() {
        return Err(Error::validation("laziness_tail needs matching nonempty pi and eps".to_string()));
    }
    if pi.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::validation("laziness_tail weights must be nonnegative and finite".to_string()));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!("laziness_tail weights must sum to 1, got {total}")));
    }
    if eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::validation("laziness values must lie in (0, 1]".to_string()));
    }
    let inv: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
    let pi = pi.to_vec();
    Ok(BetaFn::callable(move |s| {
        inv.iter().zip(&pi).filter(|(i, _)| **i >= s).map(|(_, w)| w).sum()
    }))
}

/// One step of a comparison pipeline; see [`apply_links`].
#[derive(Clone, Debug)]
pub enum ChainLink {
    /// Replace the running coefficient `beta` by `chain_strong(c_p, beta)`.
    StrongToWeak { c_p: f64 },
    /// Replace `beta` by `chain_weak(beta, second)`; `a` of the combined regularizer is the max
    /// of the two sides and is tracked by the caller.
    WeakToWeak { second: BetaFn },
    /// Replace `beta` by `spectral_gap_correct(beta, c_gap)`.
    SpectralGapCorrection { c_gap: f64 },
    /// Replace `beta` by `chain_weak(beta, dirichlet_domination_beta(eps_tail, p))`: the weakly
    /// lazy comparison, with the joint tail mass upper-bounded by the marginal laziness tail.
    WeaklyLazy { eps_tail: BetaFn, p: f64 },
}

/// Applies comparison links in order to a base coefficient and checks the result is still a
/// valid coefficient (nonincreasing and decaying on a wide grid).
pub fn apply_links(base: BetaFn, links: &[ChainLink]) -> Result<BetaFn> {
    let mut current = base;
    for link in links {
        current = match link {
            ChainLink::StrongToWeak { c_p } => chain_strong(*c_p, &current)?,
            ChainLink::WeakToWeak { second } => chain_weak(&current, second),
            ChainLink::SpectralGapCorrection { c_gap } => spectral_gap_correct(&current, *c_gap)?,
            ChainLink::WeaklyLazy { eps_tail, p } => {
                chain_weak(&current, &dirichlet_domination_beta(eps_tail, *p)?)
            }
        };
    }
    check_decreasing_vanishing(&current)?;
    Ok(current)
}

/// Grid check that a composed coefficient is nonincreasing and actually decays.
fn check_decreasing_vanishing(beta: &BetaFn) -> Result<()> {
    let grid = numeric::log_spaced(1e-8, 1e12, 160);
    let mut prev = f64::INFINITY;
    for &s in &grid {
        let v = beta.eval(s)?;
        if v > prev * (1.0 + 1e-9) + 1e-300 {
            return Err(Error::validation(format!(
                "composed coefficient increases near s = {s:.3e} ({prev:.6e} -> {v:.6e})"
            )));
        }
        prev = prev.min(v);
    }
    let first = beta.eval(grid[0])?;
    let last = beta.eval(grid[grid.len() - 1])?;
    if first > 0.0 && first.is_finite() && last > 0.999 * first {
        return Err(Error::validation(
            "composed coefficient does not decay across the check grid".to_string(),
        ));
    }
    Ok(())
}

/// Per-member rate gap for a family of coefficients dominating a limit coefficient.
#[derive(Clone, Debug)]
pub struct SequenceGapReport {
    /// `(iota, sup_n { Finv_iota(n) - Finv_limit(n) })` in input order.
    pub gaps: Vec<(f64, f64)>,
    /// Whether the gap sequence is nonincreasing along the input order.
    pub decreasing: bool,
}

/// Verifies `beta_iota >= beta1` pointwise on a wide grid and measures, for each family member,
/// the worst rate-bound gap `sup_n { Finv_iota(n) - Finv_1(n) }` over a dense `n`-grid.
///
/// Finite-mode rate integrals (with `a = 1`) are used on both sides so the gap is a like-for-like
/// comparison. Pointwise domination of the coefficients forces `Finv_iota >= Finv_1`, so any
/// materially negative gap term is reported as an error rather than clamped away.
pub fn beta_sequence_limit(family: &[(f64, BetaFn)], beta1: &BetaFn) -> Result<SequenceGapReport> {
    let s_grid = numeric::log_spaced(1e-6, 1e10, 200);
    for (iota, b2) in family {
        for &s in &s_grid {
            let upper = b2.eval(s)?;
            let limit = beta1.eval(s)?;
            if upper < limit * (1.0 - 1e-9) - 1e-300 {
                return Err(Error::validation(format!(
                    "family member iota = {iota} drops below the limit coefficient at s = {s:.6e} \
                     ({upper:.6e} < {limit:.6e})"
                )));
            }
        }
    }
    let rb1 = RateBound::new(beta1.clone())?;
    let mut n_grid = vec![0.0];
    n_grid.extend(numeric::log_spaced(1e-2, 1e4, 120));
    let mut gaps = Vec::with_capacity(family.len());
    for (iota, b2) in family {
        let rb2 = RateBound::new(b2.clone())?;
        let mut sup = 0.0f64;
        for &n in &n_grid {
            let diff = rb2.f_a_inverse(n)? - rb1.f_a_inverse(n)?;
            if diff < -1e-6 {
                return Err(Error::validation(format!(
                    "rate ordering violated for iota = {iota} at n = {n}: gap {diff:.3e}"
                )));
            }
            sup = sup.max(diff);
        }
        gaps.push((*iota, sup));
    }
    let decreasing = gaps.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
    Ok(SequenceGapReport { gaps, decreasing })
}
