//! Inequality coefficient functions.
//!
//! A `BetaFn` is a nonincreasing map `beta: (0, inf) -> [0, inf)` decaying to zero; it is the
//! coefficient in a super Poincaré inequality `||f||^2 <= s * E(T, f) + beta(s) * Phi(f)`.
//! The dual description is an [`AlphaFn`], the coefficient in the weak form
//! `||f||^2 <= alpha(r) * E(T, f) + r * Phi(f)`; the two are generalized inverses of each other
//! and [`beta_to_alpha`] / [`alpha_to_beta`] convert between them (round trips produce the
//! right-continuous versions).

use crate::numeric;
use crate::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Shared callable used by the opaque variants.
pub type BetaCallable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tail behavior of a [`Tabulated`] table beyond its last grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    /// `beta(s) = beta(s_max) * (s / s_max)^(-e)` for `s > s_max`, with declared exponent `e > 0`.
    Power(f64),
    /// `beta(s) = 0` for `s > s_max` (an exact strong-inequality cutoff, used for finite chains).
    Zero,
}

/// Interpolation scheme between grid points of a [`Tabulated`] table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Interp {
    /// Linear in `(log s, log beta)`; exact for power-law data.
    #[default]
    LogLog,
    /// Linear in `(s, beta)`; chords of a convex decreasing function lie above it, so this mode
    /// yields a valid upper envelope of convex data (used by the finite-state oracle).
    Linear,
}

/// Strictly decreasing table of `(s, beta(s))` samples with declared extrapolation behavior.
///
/// Inside the grid values are interpolated per [`Interp`]. Below the grid the value is held
/// constant at `beta(s_min)`. Above the grid the declared [`Tail`] applies; if none was declared,
/// evaluation refuses to extrapolate and reports a domain error.
#[derive(Clone, Debug)]
pub struct Tabulated {
    s: Vec<f64>,
    b: Vec<f64>,
    tail: Option<Tail>,
    interp: Interp,
}

impl Tabulated {
    /// Validates and builds a table. Requires at least two points, strictly increasing positive
    /// `s`, strictly decreasing `b` with `b > 0` inside the grid, and a positive power exponent
    /// when `tail` is `Tail::Power`.
    pub fn new(s: Vec<f64>, b: Vec<f64>, tail: Option<Tail>, interp: Interp) -> Result<Self> {
        if s.len() != b.len() || s.len() < 2 {
            return Err(Error::validation(format!(
                "tabulated beta needs matching grids with at least 2 points, got {} and {}",
                s.len(),
                b.len()
            )));
        }
        for (i, w) in s.windows(2).enumerate() {
            if !(w[0] > 0.0 && w[1] > w[0] && w[0].is_finite() && w[1].is_finite()) {
                return Err(Error::validation(format!(
                    "tabulated s-grid must be positive, finite and strictly increasing (index {i})"
                )));
            }
        }
        for (i, w) in b.windows(2).enumerate() {
            if !(w[1] < w[0]) {
                return Err(Error::validation(format!(
                    "tabulated beta values must be strictly decreasing (index {i})"
                )));
            }
        }
        if b.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::validation("tabulated beta values must be positive and finite"));
        }
        if let Some(Tail::Power(e)) = tail {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::validation("tabulated tail exponent must be positive and finite"));
            }
        }
        Ok(Tabulated { s, b, tail, interp })
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s
    }

    pub fn values(&self) -> &[f64] {
        &self.b
    }

    fn eval(&self, s: f64) -> Result<f64> {
        let n = self.s.len();
        if s <= self.s[0] {
            return Ok(self.b[0]);
        }
        if s > self.s[n - 1] {
            return match self.tail {
                Some(Tail::Power(e)) => Ok(self.b[n - 1] * (s / self.s[n - 1]).powf(-e)),
                Some(Tail::Zero) => Ok(0.0),
                None => Err(Error::domain(format!(
                    "tabulated beta evaluated at s = {s} beyond the grid end {} with no declared tail",
                    self.s[n - 1]
                ))),
            };
        }
        let j = match self.s.partition_point(|x| *x < s) {
            0 => 0,
            k => k - 1,
        };
        let j = j.min(n - 2);
        let (s0, s1, b0, b1) = (self.s[j], self.s[j + 1], self.b[j], self.b[j + 1]);
        Ok(match self.interp {
            Interp::LogLog => {
                let t = (s.ln() - s0.ln()) / (s1.ln() - s0.ln());
                (b0.ln() + t * (b1.ln() - b0.ln())).exp()
            }
            Interp::Linear => {
                let t = (s - s0) / (s1 - s0);
                b0 + t * (b1 - b0)
            }
        })
    }
}

/// Nonincreasing inequality coefficient `beta(s)`, decaying to zero as `s -> inf`.
#[derive(Clone)]
pub enum BetaFn {
    /// `beta(s) = a * 1{s <= 1/c_p}`: a strong inequality with constant `c_p` in `(0, 1]`.
    StrongPi { a: f64, c_p: f64 },
    /// `beta(s) = c0 * s^(-c1)` with `c0, c1 > 0`.
    Polynomial { c0: f64, c1: f64 },
    /// `beta(s) = eta0 * exp(-eta1 * s^eta2)` with all parameters positive.
    StretchedExp { eta0: f64, eta1: f64, eta2: f64 },
    /// `beta(s) = exp(-((ln s - sigma^2/2)_+)^2 / (2 sigma^2))`: the integrated tail bound for
    /// unit-mean lognormal weights with log-variance `sigma^2`.
    LognormalTail { sigma: f64 },
    /// Interpolated table; see [`Tabulated`].
    Tabulated(Tabulated),
    /// Opaque user-supplied function, assumed nonincreasing with values in `[0, inf)`.
    Callable(BetaCallable),
    /// `beta(s) = c1 * inner(c2 * s)`: the rescaling closure, kept symbolic so conjugate and
    /// rate identities propagate in closed form.
    Scaled { c1: f64, c2: f64, inner: Box<BetaFn> },
    /// `beta(s) = inf { s1 * second(s / s1) + first(s1) : s1 > 0 }`: composition of two
    /// inequalities along a chain of kernels.
    WeakChain { first: Box<BetaFn>, second: Box<BetaFn> },
}

impl fmt::Debug for BetaFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaFn::StrongPi { a, c_p } => write!(f, "StrongPi {{ a: {a}, c_p: {c_p} }}"),
            BetaFn::Polynomial { c0, c1 } => write!(f, "Polynomial {{ c0: {c0}, c1: {c1} }}"),
            BetaFn::StretchedExp { eta0, eta1, eta2 } => {
                write!(f, "StretchedExp {{ eta0: {eta0}, eta1: {eta1}, eta2: {eta2} }}")
            }
            BetaFn::LognormalTail { sigma } => write!(f, "LognormalTail {{ sigma: {sigma} }}"),
            BetaFn::Tabulated(t) => write!(f, "Tabulated({} points)", t.s.len()),
            BetaFn::Callable(_) => write!(f, "Callable"),
            BetaFn::Scaled { c1, c2, inner } => {
                write!(f, "Scaled {{ c1: {c1}, c2: {c2}, inner: {inner:?} }}")
            }
            BetaFn::WeakChain { first, second } => {
                write!(f, "WeakChain {{ first: {first:?}, second: {second:?} }}")
            }
        }
    }
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::validation(msg.to_string()))
    }
}

impl BetaFn {
    /// Strong-inequality indicator `a * 1{s <= 1/c_p}`; requires `a > 0` and `c_p` in `(0, 1]`.
    pub fn strong_pi(a: f64, c_p: f64) -> Result<Self> {
        require(a > 0.0 && a.is_finite(), "strong_pi: a must be positive and finite")?;
        require(c_p > 0.0 && c_p <= 1.0, "strong_pi: c_p must lie in (0, 1]")?;
        Ok(BetaFn::StrongPi { a, c_p })
    }

    /// Polynomial decay `c0 * s^(-c1)`; requires `c0, c1 > 0`.
    pub fn polynomial(c0: f64, c1: f64) -> Result<Self> {
        require(c0 > 0.0 && c0.is_finite(), "polynomial: c0 must be positive and finite")?;
        require(c1 > 0.0 && c1.is_finite(), "polynomial: c1 must be positive and finite")?;
        Ok(BetaFn::Polynomial { c0, c1 })
    }

    /// Stretched-exponential decay `eta0 * exp(-eta1 * s^eta2)`; all parameters positive.
    pub fn stretched_exp(eta0: f64, eta1: f64, eta2: f64) -> Result<Self> {
        require(
            eta0 > 0.0 && eta1 > 0.0 && eta2 > 0.0 && eta0.is_finite() && eta1.is_finite() && eta2.is_finite(),
            "stretched_exp: eta0, eta1, eta2 must be positive and finite",
        )?;
        Ok(BetaFn::StretchedExp { eta0, eta1, eta2 })
    }

    /// Lognormal weight tail `exp(-((ln s - sigma^2/2)_+)^2 / (2 sigma^2))`; requires `sigma > 0`.
    pub fn lognormal_tail(sigma: f64) -> Result<Self> {
        require(sigma > 0.0 && sigma.is_finite(), "lognormal_tail: sigma must be positive and finite")?;
        Ok(BetaFn::LognormalTail { sigma })
    }

    /// Tabulated beta; see [`Tabulated::new`].
    pub fn tabulated(s: Vec<f64>, b: Vec<f64>, tail: Option<Tail>, interp: Interp) -> Result<Self> {
        Ok(BetaFn::Tabulated(Tabulated::new(s, b, tail, interp)?))
    }

    /// Opaque callable beta. The function must be nonincreasing with nonnegative values; this is
    /// not checked.
    pub fn callable(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        BetaFn::Callable(Arc::new(f))
    }

    /// Symbolic rescaling `s -> c1 * self(c2 * s)`; requires `c1, c2 > 0`. Collapses to a plain
    /// variant when that keeps closed forms exact.
    pub fn scaled(self, c1: f64, c2: f64) -> Result<Self> {
        require(c1 > 0.0 && c1.is_finite() && c2 > 0.0 && c2.is_finite(), "scaled: c1, c2 must be positive and finite")?;
        Ok(match self {
            BetaFn::Polynomial { c0, c1: e } => BetaFn::Polynomial { c0: c1 * c0 * c2.powf(-e), c1: e },
            BetaFn::StrongPi { a, c_p } if c2 * c_p <= 1.0 => BetaFn::StrongPi { a: c1 * a, c_p: c2 * c_p },
            BetaFn::Scaled { c1: d1, c2: d2, inner } => BetaFn::Scaled { c1: c1 * d1, c2: c2 * d2, inner },
            other => BetaFn::Scaled { c1, c2, inner: Box::new(other) },
        })
    }

    /// Evaluates `beta(s)`. Reports a domain error for `s <= 0`, non-finite `s`, and tabulated
    /// evaluation beyond an undeclared tail.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::domain(format!("beta is defined on s > 0, got s = {s}")));
        }
        Ok(match self {
            BetaFn::StrongPi { a, c_p } => {
                if s <= 1.0 / c_p {
                    *a
                } else {
                    0.0
                }
            }
            BetaFn::Polynomial { c0, c1 } => c0 * s.powf(-c1),
            BetaFn::StretchedExp { eta0, eta1, eta2 } => eta0 * (-eta1 * s.powf(*eta2)).exp(),
            BetaFn::LognormalTail { sigma } => {
                let t = (s.ln() - 0.5 * sigma * sigma).max(0.0);
                (-t * t / (2.0 * sigma * sigma)).exp()
            }
            BetaFn::Tabulated(t) => t.eval(s)?,
            BetaFn::Callable(f) => f(s),
            BetaFn::Scaled { c1, c2, inner } => c1 * inner.eval(c2 * s)?,
            BetaFn::WeakChain { first, second } => weak_chain_eval(first, second, s)?,
        })
    }

    /// Convenience alias for [`BetaFn::eval`].
    pub fn beta(&self, s: f64) -> Result<f64> {
        self.eval(s)
    }
}

/// Search window (natural log of `s1`) for the weak-chain infimum.
const CHAIN_LOG_LO: f64 = -30.0;
const CHAIN_LOG_HI: f64 = 30.0;
const CHAIN_GRID: usize = 400;

fn weak_chain_eval(first: &BetaFn, second: &BetaFn, s: f64) -> Result<f64> {
    let term = |t: f64| -> Result<f64> {
        let s1 = t.exp();
        let s2 = s / s1;
        Ok(s1 * second.eval(s2)? + first.eval(s1)?)
    };
    let mut best = f64::INFINITY;
    let mut best_t = CHAIN_LOG_LO;
    let step = (CHAIN_LOG_HI - CHAIN_LOG_LO) / (CHAIN_GRID - 1) as f64;
    for i in 0..CHAIN_GRID {
        let t = CHAIN_LOG_LO + step * i as f64;
        let v = term(t)?;
        if v < best {
            best = v;
            best_t = t;
        }
    }
    // Golden refinement around the best bracket; term errors inside the bracket cannot occur
    // anymore (the grid pass above already evaluated the extremes of the same inputs).
    let lo = (best_t - step).max(CHAIN_LOG_LO);
    let hi = (best_t + step).min(CHAIN_LOG_HI);
    let (_, refined) = numeric::golden_min(|t| term(t).unwrap_or(f64::INFINITY), lo, hi, 1e-12, 120);
    Ok(best.min(refined))
}

/// Nonincreasing weak-inequality coefficient `alpha(r)`.
///
/// Either an opaque callable or the generalized inverse `alpha(r) = inf { s > 0 : beta(s) <= r }`
/// of a [`BetaFn`].
#[derive(Clone)]
pub struct AlphaFn(AlphaRepr);

#[derive(Clone)]
enum AlphaRepr {
    OfBeta(BetaFn),
    Callable(BetaCallable),
}

impl fmt::Debug for AlphaFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            AlphaRepr::OfBeta(b) => write!(f, "AlphaFn::OfBeta({b:?})"),
            AlphaRepr::Callable(_) => write!(f, "AlphaFn::Callable"),
        }
    }
}

/// Numeric bracket for generalized-inverse searches over `s` or `r` (natural-log endpoints).
const INV_LO: f64 = 1e-30;
const INV_HI: f64 = 1e30;

impl AlphaFn {
    /// Wraps an opaque nonincreasing function `r -> alpha(r)`.
    pub fn callable(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        AlphaFn(AlphaRepr::Callable(Arc::new(f)))
    }

    /// Evaluates `alpha(r)`. Domain error for `r <= 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::domain(format!("alpha is defined on r > 0, got r = {r}")));
        }
        match &self.0 {
            AlphaRepr::Callable(f) => Ok(f(r)),
            AlphaRepr::OfBeta(beta) => generalized_inverse(beta, r),
        }
    }
}

/// `alpha(r) = inf { s > 0 : beta(s) <= r }`, with closed forms where available.
impl Tabulated {
    /// Grid knots `(s, beta)` in increasing `s` order.
    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.s, &self.b)
    }

    pub fn tail(&self) -> Option<Tail> {
        self.tail
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }
}

pub(crate) fn generalized_inverse(beta: &BetaFn, r: f64) -> Result<f64> {
    match beta {
        BetaFn::StrongPi { a, c_p } => Ok(if r < *a { 1.0 / c_p } else { 0.0 }),
        BetaFn::Polynomial { c0, c1 } => Ok(if r >= *c0 { 0.0 } else { (c0 / r).powf(1.0 / c1) }),
        BetaFn::StretchedExp { eta0, eta1, eta2 } => {
            Ok(if r >= *eta0 { 0.0 } else { ((eta0 / r).ln() / eta1).powf(1.0 / eta2) })
        }
        BetaFn::LognormalTail { sigma } => Ok(if r >= 1.0 {
            0.0
        } else {
            (0.5 * sigma * sigma + sigma * (2.0 * (1.0 / r).ln()).sqrt()).exp()
        }),
        BetaFn::Scaled { c1, c2, inner } => {
            // beta(s) = c1 * inner(c2 s) <= r  iff  inner(c2 s) <= r / c1.
            Ok(generalized_inverse(inner, r / c1)? / c2)
        }
        _ => {
            if beta.eval(INV_LO)? <= r {
                return Ok(0.0);
            }
            if beta.eval(INV_HI)? > r {
                return Ok(f64::INFINITY);
            }
            let t = numeric::first_below(
                |t: f64| beta.eval(t.exp()).unwrap_or(f64::INFINITY),
                r,
                INV_LO.ln(),
                INV_HI.ln(),
                200,
            );
            Ok(t.exp())
        }
    }
}

/// Converts a super-form coefficient into the weak-form coefficient
/// `alpha(r) = inf { s > 0 : beta(s) <= r }`.
pub fn beta_to_alpha(beta: &BetaFn) -> AlphaFn {
    AlphaFn(AlphaRepr::OfBeta(beta.clone()))
}

/// Converts a weak-form coefficient back: `beta(s) = inf { r > 0 : alpha(r) <= s }`.
///
/// The round trip `alpha_to_beta(beta_to_alpha(b))` recovers the right-continuous version of `b`.
pub fn alpha_to_beta(alpha: &AlphaFn) -> BetaFn {
    let alpha = alpha.clone();
    BetaFn::callable(move |s: f64| {
        let g = |r: f64| alpha.eval(r).unwrap_or(f64::INFINITY);
        if g(INV_LO) <= s {
            return 0.0;
        }
        if g(INV_HI) > s {
            return f64::INFINITY;
        }
        numeric::first_below(|t: f64| g(t.exp()), s, INV_LO.ln(), INV_HI.ln(), 200).exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eval_closed_forms() {
        let b = BetaFn::strong_pi(1.0, 0.5).unwrap();
        assert_eq!(b.eval(1.0).unwrap(), 1.0);
        assert_eq!(b.eval(2.0).unwrap(), 1.0);
        assert_eq!(b.eval(2.0 + 1e-12).unwrap(), 0.0);

        let b = BetaFn::polynomial(1.0, 2.0).unwrap();
        assert_relative_eq!(b.eval(10.0).unwrap(), 0.01, max_relative = 1e-14);

        let b = BetaFn::lognormal_tail(1.0).unwrap();
        assert_relative_eq!(b.eval(0.5f64.exp()).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(b.eval(2.5f64.exp()).unwrap(), (-2.0f64).exp(), max_relative = 1e-12);
        assert_eq!(b.eval(0.1).unwrap(), 1.0);

        let b = BetaFn::stretched_exp(2.0, 3.0, 0.5).unwrap();
        assert_relative_eq!(b.eval(4.0).unwrap(), 2.0 * (-6.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn eval_rejects_bad_s() {
        let b = BetaFn::polynomial(1.0, 1.0).unwrap();
        assert!(matches!(b.eval(0.0), Err(Error::Domain(_))));
        assert!(matches!(b.eval(-3.0), Err(Error::Domain(_))));
        assert!(matches!(b.eval(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn constructor_validation() {
        assert!(BetaFn::strong_pi(1.0, 1.5).is_err());
        assert!(BetaFn::strong_pi(0.0, 0.5).is_err());
        assert!(BetaFn::polynomial(-1.0, 2.0).is_err());
        assert!(BetaFn::stretched_exp(1.0, 0.0, 1.0).is_err());
        assert!(BetaFn::lognormal_tail(-0.1).is_err());
    }

    #[test]
    fn tabulated_validation_and_interp() {
        assert!(Tabulated::new(vec![1.0, 2.0], vec![1.0, 1.0], None, Interp::LogLog).is_err());
        assert!(Tabulated::new(vec![2.0, 1.0], vec![1.0, 0.5], None, Interp::LogLog).is_err());
        assert!(Tabulated::new(vec![1.0], vec![1.0], None, Interp::LogLog).is_err());

        // Power-law data: log-log interpolation is exact, and the declared tail continues it.
        let s: Vec<f64> = numeric::log_spaced(1.0, 1e4, 9);
        let b: Vec<f64> = s.iter().map(|x| 3.0 * x.powf(-1.5)).collect();
        let t = BetaFn::tabulated(s, b, Some(Tail::Power(1.5)), Interp::LogLog).unwrap();
        assert_relative_eq!(t.eval(37.0).unwrap(), 3.0 * 37f64.powf(-1.5), max_relative = 1e-12);
        assert_relative_eq!(t.eval(1e6).unwrap(), 3.0 * 1e6f64.powf(-1.5), max_relative = 1e-12);
        assert_relative_eq!(t.eval(0.01).unwrap(), 3.0, max_relative = 1e-12);

        // Without a declared tail, extrapolation is refused.
        let t = BetaFn::tabulated(vec![1.0, 10.0], vec![1.0, 0.1], None, Interp::LogLog).unwrap();
        assert!(matches!(t.eval(11.0), Err(Error::Domain(_))));

        // Zero tail evaluates to exactly zero beyond the grid.
        let t = BetaFn::tabulated(vec![1.0, 10.0], vec![1.0, 0.1], Some(Tail::Zero), Interp::Linear).unwrap();
        assert_eq!(t.eval(10.5).unwrap(), 0.0);
        assert_relative_eq!(t.eval(5.5).unwrap(), 0.55, max_relative = 1e-12);
    }

    #[test]
    fn scaling_simplifies_and_matches() {
        let b = BetaFn::polynomial(2.0, 1.5).unwrap().scaled(3.0, 4.0).unwrap();
        assert!(matches!(b, BetaFn::Polynomial { .. }));
        assert_relative_eq!(b.eval(7.0).unwrap(), 3.0 * 2.0 * 28.0f64.powf(-1.5), max_relative = 1e-13);

        let b = BetaFn::strong_pi(1.0, 0.25).unwrap().scaled(2.0, 2.0).unwrap();
        assert!(matches!(b, BetaFn::StrongPi { .. }));
        assert_eq!(b.eval(2.0).unwrap(), 2.0);
        assert_eq!(b.eval(2.1).unwrap(), 0.0);

        // c2 * c_p > 1 cannot stay a StrongPi; the symbolic wrapper still evaluates correctly.
        let b = BetaFn::strong_pi(1.0, 0.5).unwrap().scaled(1.0, 4.0).unwrap();
        assert!(matches!(b, BetaFn::Scaled { .. }));
        assert_eq!(b.eval(0.5).unwrap(), 1.0);
        assert_eq!(b.eval(0.51).unwrap(), 0.0);
    }

    #[test]
    fn alpha_closed_forms_and_round_trip() {
        // Indicator: alpha(r) = (1/c_p) * 1{r < a}.
        let b = BetaFn::strong_pi(1.0, 0.2).unwrap();
        let a = beta_to_alpha(&b);
        assert_eq!(a.eval(0.5).unwrap(), 5.0);
        assert_eq!(a.eval(1.0).unwrap(), 0.0);

        // beta(s) = 1/s inverts to alpha(r) = 1/r.
        let b = BetaFn::polynomial(1.0, 1.0).unwrap();
        let a = beta_to_alpha(&b);
        assert_relative_eq!(a.eval(0.01).unwrap(), 100.0, max_relative = 1e-12);

        // Numeric path through a callable agrees with the closed form.
        let b = BetaFn::callable(|s: f64| s.powf(-2.0));
        let a = beta_to_alpha(&b);
        assert_relative_eq!(a.eval(0.25).unwrap(), 2.0, max_relative = 1e-9);

        // Round trip through alpha recovers beta on a polynomial to 1e-9.
        let b = BetaFn::polynomial(1.0, 2.0).unwrap();
        let back = alpha_to_beta(&beta_to_alpha(&b));
        for s in [1.0, 2.0, 5.0] {
            assert_relative_eq!(back.eval(s).unwrap(), b.eval(s).unwrap(), max_relative = 1e-9);
        }
    }

    #[test]
    fn alpha_rejects_bad_r_and_handles_scaled() {
        let a = beta_to_alpha(&BetaFn::polynomial(1.0, 1.0).unwrap());
        assert!(matches!(a.eval(0.0), Err(Error::Domain(_))));

        // Scaled inverse: beta(s) = 2 * (3 s)^(-1) => alpha(r) = 2 / (3 r).
        let b = BetaFn::Scaled {
            c1: 2.0,
            c2: 3.0,
            inner: Box::new(BetaFn::callable(|s: f64| 1.0 / s)),
        };
        let a = beta_to_alpha(&b);
        assert_relative_eq!(a.eval(0.5).unwrap(), 4.0 / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn weak_chain_matches_hand_minimization() {
        // Two beta(s) = 1/s links: inf_t { t^2 / s + 1 / t } = (2^(1/3) + 2^(-2/3)) * s^(-1/3).
        let b = BetaFn::WeakChain {
            first: Box::new(BetaFn::polynomial(1.0, 1.0).unwrap()),
            second: Box::new(BetaFn::polynomial(1.0, 1.0).unwrap()),
        };
        let expect = |s: f64| (2f64.powf(1.0 / 3.0) + 2f64.powf(-2.0 / 3.0)) * s.powf(-1.0 / 3.0);
        for s in [1.0, 10.0, 1e4] {
            assert_relative_eq!(b.eval(s).unwrap(), expect(s), max_relative = 1e-9);
        }
    }
}
