//! From inequality coefficients to decay bounds.
//!
//! Given a nonincreasing coefficient `beta` and the compatibility constant `a` of the
//! regularizing functional, define `K(u) = u * beta(1/u)` with `K(0) = 0` and its convex
//! conjugate `K*(v) = sup_{u >= 0} { u v - K(u) }`. The rate integral
//! `F(x) = int_x^a dv / K*(v)` is strictly decreasing with `F(a) = 0` and `F(0+) = inf`, and the
//! central bound reads `||P^n f||^2 <= Phi(f) * Finv(n)`. When `int_a^inf dv / K*(v)` converges
//! the integral can be extended to infinity (`F_inf`), which tightens nothing but turns
//! rescalings of `beta` into exact rescalings of the rate.
//!
//! [`RateBound`] packages one coefficient with memoized evaluators for `K*`, `F`, and the
//! inverse. Closed forms are used for the indicator and polynomial families (and their symbolic
//! rescalings); everything else goes through a conjugate table built eagerly at construction:
//! for each table node the supremum is computed on a log-spaced `u` grid with golden-section
//! refinement, restricted to `u <= 1/alpha(v)` where the conjugate objective is nonnegative.

use crate::beta::{self, BetaFn, Interp, Tail};
use crate::numeric;
use crate::{Error, Result};

/// Regularizing functional choices for the right-hand side of the inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhiFunctional {
    /// `Phi(f) = osc(f)^2`, the squared oscillation (range) of `f`.
    OscSquared,
    /// `Phi(f) = 4 ||f||_{2p}^2` for `p` in `(1, inf)`.
    TwoPNormSquared { p: f64 },
    /// `Phi(f) = ||f||_2^2`.
    L2Squared,
}

impl PhiFunctional {
    /// `Phi = 4 ||f||_{2p}^2`; requires `p > 1`.
    pub fn two_p(p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::domain(format!("two_p norm functional requires p > 1, got {p}")));
        }
        Ok(PhiFunctional::TwoPNormSquared { p })
    }

    /// Compatibility constant `a` with `||f||^2 <= a * Phi(f)` for centered `f`; `1` for all
    /// supported functionals.
    pub fn a_constant(&self) -> f64 {
        1.0
    }

    /// Hölder conjugate exponent `q` used by Dirichlet-domination terms: `q = p / (p - 1)` for
    /// the `2p`-norm functional and `q = 1` for the oscillation functional (the `p = inf` case).
    pub fn holder_q(&self) -> Result<f64> {
        match self {
            PhiFunctional::OscSquared => Ok(1.0),
            PhiFunctional::TwoPNormSquared { p } => Ok(p / (p - 1.0)),
            PhiFunctional::L2Squared => Err(Error::unsupported(
                "the plain L2 functional has no Hölder pairing in the domination bound".to_string(),
            )),
        }
    }

    /// Evaluates `Phi` for a finite-state function `f` (already centered) under weights `pi`.
    pub fn value(&self, f: &[f64], pi: &[f64]) -> f64 {
        match self {
            PhiFunctional::OscSquared => {
                let mx = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mn = f.iter().cloned().fold(f64::INFINITY, f64::min);
                (mx - mn) * (mx - mn)
            }
            PhiFunctional::TwoPNormSquared { p } => {
                let s: f64 = f.iter().zip(pi).map(|(x, w)| w * x.abs().powf(2.0 * p)).sum();
                4.0 * s.powf(1.0 / p)
            }
            PhiFunctional::L2Squared => f.iter().zip(pi).map(|(x, w)| w * x * x).sum(),
        }
    }
}

/// Construction options for [`RateBound`].
#[derive(Clone, Copy, Debug, Default)]
pub struct RateOptions {
    /// Build the numeric conjugate table even when a closed form is available (cross-checks).
    pub force_numeric: bool,
    /// `None`: use the extended integral automatically when its tail converges to a positive
    /// value. `Some(true)`: require the extended integral (error if the tail diverges).
    /// `Some(false)`: always use the finite integral.
    pub f_infinity: Option<bool>,
}

/// Numeric search window and resolution for the conjugate supremum.
const U_LO: f64 = 1e-12;
const U_HI: f64 = 1e12;
const U_GRID: usize = 2000;
/// Conjugate table resolution (nodes per decade of `v`) and depth below `a`.
const NODES_PER_DECADE: usize = 160;
const FLOOR_DECADES: f64 = 27.0;
/// Stored conjugate values are capped here; beyond it the integrand is numerically zero.
const LOG_K_CAP: f64 = 690.0;

#[derive(Clone, Debug)]
enum KstarRepr {
    /// `K*(v) = slope * v` for `v <= cap`, infinite beyond.
    Linear { slope: f64, cap: f64 },
    /// `K*(v) = coeff * v^expo` everywhere, `expo > 1`.
    Power { coeff: f64, expo: f64 },
    Table(KstarTable),
}

#[derive(Clone, Debug)]
struct KstarTable {
    log_v: Vec<f64>,
    log_k: Vec<f64>,
    /// Cumulative rate integral: `cum_f[j] = int_{v_j}^{a} dv / K*`.
    cum_f: Vec<f64>,
    /// Log-log slope of the first segment, used to extend the table below its floor.
    head_slope: f64,
}

/// A coefficient `beta` paired with memoized evaluators for `K*`, `F`, and the inverse rate.
#[derive(Clone, Debug)]
pub struct RateBound {
    beta: BetaFn,
    a: f64,
    kstar: KstarRepr,
    /// Converged tail integral `int_a^inf dv / K*(v)`, `None` when it diverges.
    tail: Option<f64>,
    use_f_infinity: bool,
}

impl RateBound {
    /// Builds a rate bound with compatibility constant `a = 1` and default options.
    pub fn new(beta: BetaFn) -> Result<Self> {
        Self::with_options(beta, 1.0, RateOptions::default())
    }

    /// Builds a rate bound with explicit `a > 0`.
    pub fn with_a(beta: BetaFn, a: f64) -> Result<Self> {
        Self::with_options(beta, a, RateOptions::default())
    }

    /// Fully explicit constructor; see [`RateOptions`].
    pub fn with_options(beta: BetaFn, a: f64, opts: RateOptions) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::validation(format!("rate bound requires a > 0, got {a}")));
        }
        let closed = if opts.force_numeric { None } else { closed_kstar(&beta) };
        let (kstar, tail) = match closed {
            Some(KstarRepr::Linear { slope, cap }) => {
                let tail = if cap > a { (cap / a).ln() / slope } else { 0.0 };
                (KstarRepr::Linear { slope, cap }, Some(tail))
            }
            Some(KstarRepr::Power { coeff, expo }) => {
                let tail = a.powf(1.0 - expo) / (coeff * (expo - 1.0));
                (KstarRepr::Power { coeff, expo }, Some(tail))
            }
            Some(KstarRepr::Table(_)) => unreachable!("closed_kstar never returns a table"),
            None => {
                // Expensive composed coefficients are sampled once into a table so the
                // conjugate construction below stays linear in the node count.
                let beta_eval = pretabulate_if_composed(&beta)?;
                let table = KstarTable::build(&beta_eval, a)?;
                let tail = tail_integral(&beta_eval, a)?;
                (KstarRepr::Table(table), tail)
            }
        };
        let use_f_infinity = match opts.f_infinity {
            Some(true) => match tail {
                Some(_) => true,
                None => {
                    return Err(Error::unsupported(
                        "extended rate integral requested but its tail diverges".to_string(),
                    ))
                }
            },
            Some(false) => false,
            None => matches!(tail, Some(t) if t > 0.0),
        };
        Ok(RateBound { beta, a, kstar, tail, use_f_infinity })
    }

    pub fn beta(&self) -> &BetaFn {
        &self.beta
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Whether the automatically (or explicitly) selected mode extends the rate integral to
    /// infinity.
    pub fn uses_f_infinity(&self) -> bool {
        self.use_f_infinity
    }

    /// Converged tail integral `int_a^inf dv / K*(v)`, `None` when it diverges.
    pub fn tail_integral(&self) -> Option<f64> {
        self.tail
    }

    /// Convex conjugate `K*(v)` for `v` in `[0, a]`. Values can be `inf` when `v` exceeds the
    /// global supremum of `beta`.
    pub fn kstar(&self, v: f64) -> Result<f64> {
        if !(0.0..=self.a).contains(&v) || !v.is_finite() {
            return Err(Error::domain(format!("kstar is defined on [0, a] = [0, {}], got v = {v}", self.a)));
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.kstar {
            KstarRepr::Linear { slope, cap } => {
                if v <= *cap {
                    slope * v
                } else {
                    f64::INFINITY
                }
            }
            KstarRepr::Power { coeff, expo } => coeff * v.powf(*expo),
            KstarRepr::Table(t) => t.eval(v),
        })
    }

    /// Rate integral in the automatically selected mode.
    pub fn f(&self, x: f64) -> Result<f64> {
        if self.use_f_infinity {
            self.f_infinity(x)
        } else {
            self.f_a(x)
        }
    }

    /// Finite rate integral `F_a(x) = int_x^a dv / K*(v)` for `x` in `(0, a]`.
    pub fn f_a(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x <= self.a) || !x.is_finite() {
            return Err(Error::domain(format!("F is defined on (0, a] = (0, {}], got x = {x}", self.a)));
        }
        Ok(match &self.kstar {
            KstarRepr::Linear { slope, cap } => {
                let top = self.a.min(*cap);
                if x >= top {
                    0.0
                } else {
                    (top / x).ln() / slope
                }
            }
            KstarRepr::Power { coeff, expo } => {
                (x.powf(1.0 - expo) - self.a.powf(1.0 - expo)) / (coeff * (expo - 1.0))
            }
            KstarRepr::Table(t) => t.f(x),
        })
    }

    /// Extended rate integral `F_inf(x) = F_a(x) + int_a^inf dv / K*(v)`. Unsupported when the
    /// tail diverges.
    pub fn f_infinity(&self, x: f64) -> Result<f64> {
        match self.tail {
            Some(t) => Ok(self.f_a(x)? + t),
            None => Err(Error::unsupported(
                "extended rate integral unavailable: the tail integral diverges".to_string(),
            )),
        }
    }

    /// Inverse rate in the automatically selected mode; see [`RateBound::f_a_inverse`].
    pub fn f_inverse(&self, n: f64) -> Result<f64> {
        if self.use_f_infinity {
            self.f_infinity_inverse(n)
        } else {
            self.f_a_inverse(n)
        }
    }

    /// Inverse of the finite rate integral: the `x` in `(0, a]` with `F_a(x) = n`, with
    /// `F_a_inverse(0) = a`. Domain error for `n < 0`.
    pub fn f_a_inverse(&self, n: f64) -> Result<f64> {
        self.check_n(n)?;
        if n == 0.0 {
            return Ok(self.a);
        }
        Ok(match &self.kstar {
            KstarRepr::Linear { slope, cap } => self.a.min(*cap) * (-slope * n).exp(),
            KstarRepr::Power { coeff, expo } => {
                (n * coeff * (expo - 1.0) + self.a.powf(1.0 - expo)).powf(-1.0 / (expo - 1.0))
            }
            KstarRepr::Table(t) => t.f_inverse(n),
        })
    }

    /// Inverse of the extended rate integral, capped at `a` (the cap applies when `n` is below
    /// the tail mass, where the uncapped inverse would exceed `a`).
    pub fn f_infinity_inverse(&self, n: f64) -> Result<f64> {
        self.check_n(n)?;
        let tail = self.tail.ok_or_else(|| {
            Error::unsupported("extended rate integral unavailable: the tail integral diverges".to_string())
        })?;
        if n <= tail {
            return Ok(self.a);
        }
        self.f_a_inverse(n - tail)
    }

    fn check_n(&self, n: f64) -> Result<()> {
        if n < 0.0 || n.is_nan() {
            return Err(Error::domain(format!("inverse rate is defined for n >= 0, got n = {n}")));
        }
        Ok(())
    }

    /// Rate bound for the rescaled coefficient `s -> c1 * beta(c2 * s)` (same `a`, same options
    /// semantics). In extended mode this satisfies `Finv_scaled(n) = c1 * Finv(c2 * n)` and
    /// `K*_scaled(v) = c1 * c2 * K*(v / c1)`.
    pub fn rescale(&self, c1: f64, c2: f64) -> Result<RateBound> {
        RateBound::with_a(self.beta.clone().scaled(c1, c2)?, self.a)
    }

    /// Upper bound on the series `sum_{n >= 0} Finv(n)` in the bound's selected mode: a partial
    /// sum over the first 4097 terms plus a tail estimate. Linear conjugates finish with the
    /// exact geometric series, power conjugates with a closed integral comparison (a divergence
    /// error when the decay exponent is at most one), and tabulated conjugates with doubling
    /// integral chunks under a hard summation horizon.
    pub fn sum_f_inverse(&self) -> Result<f64> {
        const N0: usize = 4096;
        let mut acc = 0.0;
        for n in 0..=N0 {
            acc += self.f_inverse(n as f64)?;
        }
        let m = (N0 + 1) as f64;
        // In extended mode the first `tail` terms sit at the cap; skip past them before using
        // the decay-shape tail formulas, charging `a` per skipped term.
        let tau = if self.use_f_infinity { self.tail.unwrap_or(0.0) } else { 0.0 };
        let skip = (tau - m + 1.0).max(0.0).ceil();
        acc += self.a * skip;
        let m = m + skip;
        match &self.kstar {
            KstarRepr::Linear { slope, .. } => {
                // Terms past the cap are exactly geometric with ratio e^{-slope}.
                let r = (-slope).exp();
                acc += self.f_inverse(m)? / (1.0 - r);
            }
            KstarRepr::Power { coeff, expo } => {
                let decay = 1.0 / (expo - 1.0);
                if decay <= 1.0 {
                    return Err(Error::divergent(format!(
                        "rate series diverges: the inverse rate decays like n^(-{decay:.4})"
                    )));
                }
                // sum_{n >= m} Finv(n) <= int_{m-1}^inf Finv(t) dt, in closed form.
                let t0 = (m - 1.0 - tau).max(1e-9);
                let g0 = coeff * (expo - 1.0) * t0 + self.a.powf(1.0 - expo);
                acc += g0.powf(1.0 - decay) / (coeff * (expo - 1.0) * (decay - 1.0));
            }
            KstarRepr::Table(_) => {
                let mut lo = m - 1.0;
                let mut width = lo;
                let mut inner: Option<Error> = None;
                loop {
                    let mut g = |t: f64| match self.f_inverse(t) {
                        Ok(v) => v,
                        Err(e) => {
                            inner.get_or_insert(e);
                            f64::NAN
                        }
                    };
                    let chunk = numeric::adaptive_simpson(&mut g, lo, lo + width, 1e-13, 1e-9);
                    if let Some(e) = inner.take() {
                        return Err(e);
                    }
                    acc += chunk;
                    if chunk <= 1e-10 * acc {
                        break;
                    }
                    lo += width;
                    width *= 2.0;
                    if lo > 1e15 {
                        return Err(Error::divergent(
                            "rate series tail failed to converge below the 1e15 summation horizon"
                                .to_string(),
                        ));
                    }
                }
            }
        }
        Ok(acc)
    }
}

/// Closed conjugate forms: indicator and polynomial coefficients, and their symbolic rescalings.
fn closed_kstar(beta: &BetaFn) -> Option<KstarRepr> {
    match beta {
        BetaFn::StrongPi { a, c_p } => Some(KstarRepr::Linear { slope: *c_p, cap: *a }),
        BetaFn::Polynomial { c0, c1 } => {
            let expo = 1.0 + 1.0 / c1;
            let coeff = c0 * c1 / (c0 * (1.0 + c1)).powf(expo);
            Some(KstarRepr::Power { coeff, expo })
        }
        BetaFn::Scaled { c1, c2, inner } => match closed_kstar(inner)? {
            // K*_scaled(v) = c1 c2 K*(v / c1).
            KstarRepr::Linear { slope, cap } => Some(KstarRepr::Linear { slope: c2 * slope, cap: c1 * cap }),
            KstarRepr::Power { coeff, expo } => {
                Some(KstarRepr::Power { coeff: coeff * c2 * c1.powf(1.0 - expo), expo })
            }
            KstarRepr::Table(_) => None,
        },
        _ => None,
    }
}

/// One conjugate value `K*(v) = sup_u { u v - u beta(1/u) }` by restricted grid search plus
/// golden-section refinement. Always a lower approximation of the supremum (every candidate is a
/// true objective value). Returns `inf` when `v` exceeds the supremum of `beta`.
pub(crate) fn kstar_numeric(beta: &BetaFn, v: f64) -> Result<f64> {
    if v == 0.0 {
        return Ok(0.0);
    }
    let b_top = beta.eval(1e-30)?;
    if b_top.is_finite() && v > b_top && beta.eval(1e-12)? == b_top {
        // Strictly above the supremum of beta the objective is unbounded. The sampled value can
        // sit a hair below an unattained supremum, so the shortcut additionally requires a
        // plateau near zero; otherwise the finite search below returns a huge value instead,
        // which errs on the side of a larger rate integral.
        return Ok(f64::INFINITY);
    }
    // The objective is nonpositive beyond u = 1 / alpha(v) and provably positive at
    // u = 1 / (2 alpha(v/2)); use those to place the search window.
    let s_at_v = inverse_wide(beta, v)?;
    let u_hi = if s_at_v > 0.0 { ((1.0 + 1e-9) / s_at_v).min(1e15) } else { U_HI };
    let s_half = inverse_wide(beta, 0.5 * v)?;
    let u_lo = if s_half > 0.0 { (0.5 / s_half).min(U_LO) } else { U_LO };
    let u_lo = u_lo.min(1e-3 * u_hi);

    let objective = |u: f64, beta: &BetaFn| -> Result<f64> { Ok(u * (v - beta.eval(1.0 / u)?)) };
    let (t_lo, t_hi) = (u_lo.ln(), u_hi.ln());
    let step = (t_hi - t_lo) / (U_GRID - 1) as f64;
    let mut best = f64::NEG_INFINITY;
    let mut best_t = t_lo;
    for i in 0..U_GRID {
        let t = t_lo + step * i as f64;
        let g = objective(t.exp(), beta)?;
        if g > best {
            best = g;
            best_t = t;
        }
    }
    let (_, refined) = numeric::golden_max(
        |t| objective(t.exp(), beta).unwrap_or(f64::NEG_INFINITY),
        (best_t - step).max(t_lo),
        (best_t + step).min(t_hi),
        1e-14,
        120,
    );
    Ok(best.max(refined).max(0.0))
}

/// `alpha(v)` with the bracket pushed to the float edge when the standard window is too narrow
/// (coefficients with very flat tails need enormous `s` before dropping below small levels).
fn inverse_wide(beta: &BetaFn, r: f64) -> Result<f64> {
    let s = beta::generalized_inverse(beta, r)?;
    if s.is_finite() {
        return Ok(s);
    }
    if beta.eval(1e300)? > r {
        return Err(Error::validation(format!(
            "coefficient decays too slowly to resolve: beta(1e300) still exceeds {r:.3e}"
        )));
    }
    let t = numeric::first_below(
        |t: f64| beta.eval(t.exp()).unwrap_or(f64::INFINITY),
        r,
        (1e30f64).ln(),
        (1e300f64).ln(),
        200,
    );
    Ok(t.exp())
}

/// Tail integral `int_a^inf dv / K*(v)` by doubling truncation; `Ok(None)` when it fails to
/// converge before the probe cap (declared divergent).
fn tail_integral(beta: &BetaFn, a: f64) -> Result<Option<f64>> {
    // Fast path: conjugate already infinite just above `a` and far out means a zero tail.
    let probe_near = kstar_numeric(beta, a * (1.0 + 1e-9))?;
    let probe_far = kstar_numeric(beta, a * 1e6)?;
    if probe_near.is_infinite() && probe_far.is_infinite() {
        return Ok(Some(0.0));
    }
    let mut integrand_err: Option<Error> = None;
    let mut acc = 0.0f64;
    let mut t0 = a.ln();
    let mut width = core::f64::consts::LN_2;
    for _ in 0..48 {
        let t1 = t0 + width;
        if t1 > 345.0 {
            // v beyond ~1e150 with a still-live integrand: declare divergent.
            return Ok(None);
        }
        let mut f = |t: f64| match kstar_numeric(beta, t.exp()) {
            Ok(k) => {
                if k.is_infinite() {
                    0.0
                } else {
                    (t - k.ln().min(LOG_K_CAP)).exp()
                }
            }
            Err(e) => {
                integrand_err = Some(e);
                0.0
            }
        };
        let chunk = numeric::adaptive_simpson(&mut f, t0, t1, 1e-14, 1e-9);
        if let Some(e) = integrand_err.take() {
            return Err(e);
        }
        acc += chunk;
        if chunk <= 1e-14f64.max(1e-10 * acc) {
            return Ok(Some(acc));
        }
        t0 = t1;
        width *= 2.0;
    }
    Ok(None)
}

/// Samples a composed coefficient onto a dense log-log table so conjugate construction does not
/// repeatedly pay for the inner minimization. Plateaus are nudged strictly decreasing (relative
/// error below 1e-12) and an exact-zero tail is located by bisection.
fn pretabulate_if_composed(beta: &BetaFn) -> Result<BetaFn> {
    if !matches!(beta, BetaFn::WeakChain { .. }) {
        return Ok(beta.clone());
    }
    let grid = numeric::log_spaced(1e-14, 1e14, 28 * NODES_PER_DECADE);
    let mut s_out: Vec<f64> = Vec::with_capacity(grid.len());
    let mut b_out: Vec<f64> = Vec::with_capacity(grid.len());
    let mut zero_from: Option<f64> = None;
    for &s in &grid {
        let v = beta.eval(s)?.min(1e300);
        if v <= 0.0 {
            // Locate the exact cutoff inside the bracketing step.
            let lo = *s_out.last().unwrap_or(&1e-14);
            let cut = numeric::first_below(|t: f64| beta.eval(t).unwrap_or(0.0), 0.0, lo, s, 100);
            zero_from = Some(cut);
            break;
        }
        let v = match b_out.last() {
            Some(&prev) if v >= prev => prev * (1.0 - 1e-12),
            _ => v,
        };
        if v <= 0.0 {
            zero_from = Some(s);
            break;
        }
        s_out.push(s);
        b_out.push(v);
    }
    if s_out.len() < 2 {
        return Err(Error::validation(
            "composed coefficient is zero on essentially all of the sampling window".to_string(),
        ));
    }
    let tail = match zero_from {
        Some(cut) => {
            // Append a node just left of the cutoff so the zero tail starts at the true boundary.
            let s_edge = cut * (1.0 - 1e-9);
            if s_edge > *s_out.last().unwrap() {
                let v_edge = beta.eval(s_edge)?.min(1e300);
                if v_edge > 0.0 && v_edge < *b_out.last().unwrap() {
                    s_out.push(s_edge);
                    b_out.push(v_edge);
                }
            }
            Tail::Zero
        }
        None => {
            // Continue with the empirical slope of the last decade.
            let k = s_out.len();
            let from = k.saturating_sub(NODES_PER_DECADE);
            let ls: Vec<f64> = s_out[from..].iter().map(|x| x.ln()).collect();
            let lb: Vec<f64> = b_out[from..].iter().map(|x| x.ln()).collect();
            let slope = numeric::ls_slope(&ls, &lb);
            Tail::Power((-slope).max(1e-6))
        }
    };
    BetaFn::tabulated(s_out, b_out, Some(tail), Interp::LogLog)
}

impl KstarTable {
    fn build(beta: &BetaFn, a: f64) -> Result<Self> {
        let floor = a * 10f64.powf(-FLOOR_DECADES);
        let n = (FLOOR_DECADES * NODES_PER_DECADE as f64) as usize + 1;
        let vs = numeric::log_spaced(floor, a, n);
        let b_top = beta.eval(1e-30)?;
        let mut log_v = Vec::with_capacity(n);
        let mut log_k = Vec::with_capacity(n);
        for &v in &vs {
            // Past the head value of beta the conjugate is effectively infinite
            // (already u = 1e30 gives u (v - beta(1/u)) >= 1e18 v), but the numeric
            // sup over its bounded search window returns a large finite artifact
            // there. Cap such nodes outright so they read as the wall.
            if b_top.is_finite() && v > b_top * (1.0 + 1e-12) {
                log_v.push(v.ln());
                log_k.push(LOG_K_CAP);
                continue;
            }
            let k = kstar_numeric(beta, v)?;
            if !(k > 0.0) {
                return Err(Error::validation(format!(
                    "conjugate evaluated to a nonpositive value at v = {v}; beta may be degenerate"
                )));
            }
            log_v.push(v.ln());
            log_k.push(k.ln().min(LOG_K_CAP));
        }
        // Convexity with K*(0) = 0 forces a log-log slope of at least 1; a fitted value
        // below that is grid noise, and extrapolating with it below the floor would
        // undercut the bound, so the slope is fitted over the first decade and clamped.
        let fit_to = NODES_PER_DECADE.min(log_v.len() - 1);
        let head_slope = numeric::ls_slope(&log_v[..=fit_to], &log_k[..=fit_to]).max(1.0);
        let mut table = KstarTable { log_v, log_k, cum_f: vec![0.0; n], head_slope };
        for j in (0..n - 1).rev() {
            let seg = table.segment_integral(table.log_v[j], table.log_v[j + 1]);
            table.cum_f[j] = table.cum_f[j + 1] + seg;
        }
        Ok(table)
    }

    /// Log-log interpolated conjugate; power extension below the floor, `inf` above the cap.
    fn eval(&self, v: f64) -> f64 {
        let lv = v.ln();
        let lk = self.log_eval(lv);
        if lk >= LOG_K_CAP {
            f64::INFINITY
        } else {
            lk.exp()
        }
    }

    fn log_eval(&self, lv: f64) -> f64 {
        let n = self.log_v.len();
        if lv <= self.log_v[0] {
            return self.log_k[0] - self.head_slope * (self.log_v[0] - lv);
        }
        if lv >= self.log_v[n - 1] {
            return self.log_k[n - 1];
        }
        let j = match self.log_v.partition_point(|x| *x < lv) {
            0 => 0,
            k => k - 1,
        }
        .min(n - 2);
        // A node at the cap marks the wall where the conjugate is infinite. Interpolating
        // across it would manufacture huge finite values and starve the integral of mass
        // over the last gap, so the finite side extends flat instead: an underestimate of
        // the nondecreasing conjugate, which can only loosen the resulting rate.
        if self.log_k[j + 1] >= LOG_K_CAP && self.log_k[j] < LOG_K_CAP {
            return self.log_k[j];
        }
        let t = (lv - self.log_v[j]) / (self.log_v[j + 1] - self.log_v[j]);
        self.log_k[j] + t * (self.log_k[j + 1] - self.log_k[j])
    }

    /// `int` of `dv / K*` over `[e^t0, e^t1]` using the table interpolant (Simpson in `t`).
    fn segment_integral(&self, t0: f64, t1: f64) -> f64 {
        let mut f = |t: f64| (t - self.log_eval(t)).exp();
        numeric::adaptive_simpson(&mut f, t0, t1, 0.0, 1e-9)
    }

    fn f(&self, x: f64) -> f64 {
        let n = self.log_v.len();
        let lx = x.ln();
        if lx >= self.log_v[n - 1] {
            return 0.0;
        }
        if lx >= self.log_v[0] {
            let j = match self.log_v.partition_point(|t| *t < lx) {
                0 => 0,
                k => k - 1,
            }
            .min(n - 2);
            return self.cum_f[j + 1] + self.segment_integral(lx, self.log_v[j + 1]);
        }
        self.cum_f[0] + self.head_integral(lx)
    }

    /// `int_x^floor dv / K*` under the power extension `K*(v) = K_f (v / v_f)^p`.
    fn head_integral(&self, lx: f64) -> f64 {
        let p = self.head_slope;
        let vf = self.log_v[0].exp();
        let kf = self.log_k[0].exp();
        let d = self.log_v[0] - lx;
        if (p - 1.0).abs() < 1e-9 {
            vf / kf * d
        } else {
            vf / kf * (((p - 1.0) * d).exp() - 1.0) / (p - 1.0)
        }
    }

    fn f_inverse(&self, n_target: f64) -> f64 {
        let top = self.log_v[self.log_v.len() - 1];
        if n_target <= self.cum_f[0] {
            let lx = numeric::invert_decreasing(|t: f64| self.f(t.exp()), n_target, self.log_v[0], top, 200);
            return lx.exp();
        }
        // Invert the head extension in closed form.
        let p = self.head_slope;
        let vf = self.log_v[0].exp();
        let kf = self.log_k[0].exp();
        let m = n_target - self.cum_f[0];
        let d = if (p - 1.0).abs() < 1e-9 {
            m * kf / vf
        } else {
            ((p - 1.0) * m * kf / vf + 1.0).ln() / (p - 1.0)
        };
        (self.log_v[0] - d).exp()
    }
}

/// Analytic stretched-exponential envelope data; see [`stretched_exp_rate`].
#[derive(Clone, Copy, Debug)]
pub struct StretchedEnvelope {
    /// Conjugate lower-bound constant: `K*(v) >= c * v * (ln 1/v)^(-1/eta2)` on `(0, v0]`.
    pub c: f64,
    /// Envelope prefactor.
    pub c_prime: f64,
    /// Validity threshold for the conjugate lower bound.
    pub v0: f64,
    /// The envelope holds for `n >= burn_in`.
    pub burn_in: f64,
    /// Envelope exponent `eta2 / (1 + eta2)`.
    pub gamma: f64,
    /// The auxiliary decay split `eta` in `(0, eta1)` used to build the bound.
    pub eta: f64,
    c_tilde: f64,
}

impl StretchedEnvelope {
    /// `c_prime * exp(-(c (1 + eta2) / eta2 * n)^(eta2 / (1 + eta2)))`.
    pub fn eval(&self, n: f64) -> f64 {
        self.c_prime * (-(self.c_tilde * n).powf(self.gamma)).exp()
    }
}

/// Numeric inverse rate at `n` together with the analytic envelope for a stretched-exponential
/// coefficient `beta(s) = eta0 exp(-eta1 s^eta2)`.
///
/// `eta` is the auxiliary split in `(0, eta1)` (default `eta1 / 2`). The envelope constants
/// follow the conjugate lower bound `K*(v) >= v u_v - eta0 v^{eta1/eta}` with
/// `u_v = ((1/eta) ln(1/v))^(-1/eta2)`: on `(0, v0]` the second term eats at most half the first,
/// giving `K*(v) >= c v (ln 1/v)^(-1/eta2)` with `c = eta^(1/eta2) / 2`, hence
/// `Finv(n) <= exp(-(c_tilde (n - M))^gamma)` past the burn-in `M = F(v0)`.
pub fn stretched_exp_rate(rb: &RateBound, n: f64, eta: Option<f64>) -> Result<(f64, StretchedEnvelope)> {
    let (eta0, eta1, eta2) = match rb.beta() {
        BetaFn::StretchedExp { eta0, eta1, eta2 } => (*eta0, *eta1, *eta2),
        other => {
            return Err(Error::unsupported(format!(
                "stretched_exp_rate requires a stretched-exponential coefficient, got {other:?}"
            )))
        }
    };
    let eta = eta.unwrap_or(0.5 * eta1);
    if !(eta > 0.0 && eta < eta1) {
        return Err(Error::domain(format!("eta must lie in (0, eta1) = (0, {eta1}), got {eta}")));
    }
    let v0 = (0.5 / eta0)
        .powf(eta / (eta1 - eta))
        .min(0.999 * rb.a())
        .min((-1.0f64).exp());
    let c = 0.5 * eta.powf(1.0 / eta2);
    let gamma = eta2 / (1.0 + eta2);
    let c_tilde = c * (1.0 + eta2) / eta2;
    let m = rb.f_a(v0)?;
    let burn_in = m + 1.0;
    let c_prime = ((c_tilde * burn_in).powf(gamma) - c_tilde.powf(gamma)).exp();
    let envelope = StretchedEnvelope { c, c_prime, v0, burn_in, gamma, eta, c_tilde };
    Ok((rb.f_inverse(n)?, envelope))
}

/// Alternative fixed-point rate `gamma(n) = inf { r > 0 : (1 - 1/(alpha(r) ∨ 1))^n <= r }`,
/// bounding `||P^n f||^2 <= gamma(n) (||f||^2 + Phi(f))`.
///
/// Kept for side-by-side comparison: in subgeometric regimes it is polynomially weaker than the
/// rate-integral bound. Requires `n >= 1`.
pub fn rockner_wang_rate(beta_fn: &BetaFn, n: f64) -> Result<f64> {
    if !(n >= 1.0) || !n.is_finite() {
        return Err(Error::domain(format!("the fixed-point rate requires n >= 1, got n = {n}")));
    }
    let alpha = beta::beta_to_alpha(beta_fn);
    let lhs = |r: f64| -> f64 {
        let al = alpha.eval(r).map(|x| x.max(1.0)).unwrap_or(f64::INFINITY);
        if al.is_infinite() {
            1.0
        } else {
            (1.0 - 1.0 / al).powf(n)
        }
    };
    let r_lo = 1e-300;
    if lhs(r_lo) <= r_lo {
        return Ok(0.0);
    }
    let b_top = beta_fn.eval(1e-30)?;
    let r_hi = if b_top.is_finite() { b_top.max(1.0) * 2.0 } else { 1e12 };
    let t = numeric::first_below(|t: f64| lhs(t.exp()) - t.exp(), 0.0, r_lo.ln(), r_hi.ln(), 200);
    Ok(t.exp())
}

/// Total-variation transfer: `||nu P^n - mu||_TV <= sqrt(phi) * sqrt(finv_n)` where `phi` is the
/// regularizing functional of the density difference `d nu / d mu - 1` and `finv_n` the inverse
/// rate at `n`.
pub fn l2_to_tv(phi_density_diff: f64, finv_n: f64) -> Result<f64> {
    if !(phi_density_diff >= 0.0) || !(finv_n >= 0.0) {
        return Err(Error::domain(format!(
            "l2_to_tv requires nonnegative inputs, got phi = {phi_density_diff}, finv = {finv_n}"
        )));
    }
    Ok((phi_density_diff * finv_n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn strong(a: f64, c_p: f64) -> RateBound {
        RateBound::new(BetaFn::strong_pi(a, c_p).unwrap()).unwrap()
    }

    fn poly(c0: f64, c1: f64) -> RateBound {
        RateBound::new(BetaFn::polynomial(c0, c1).unwrap()).unwrap()
    }

    #[test]
    fn strong_pi_closed_forms() {
        let rb = strong(1.0, 0.3);
        assert!(!rb.uses_f_infinity());
        assert_eq!(rb.tail_integral(), Some(0.0));
        assert_relative_eq!(rb.kstar(0.5).unwrap(), 0.15, max_relative = 1e-15);
        assert_relative_eq!(rb.f(0.1).unwrap(), 10f64.ln() / 0.3, max_relative = 1e-15);
        assert_eq!(rb.f(1.0).unwrap(), 0.0);
        assert_eq!(rb.f_inverse(0.0).unwrap(), 1.0);
        for n in 1..=100 {
            let expect = (-0.3 * n as f64).exp();
            assert_relative_eq!(rb.f_inverse(n as f64).unwrap(), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn polynomial_closed_forms() {
        let rb = poly(1.0, 2.0);
        // K*(v) = C v^{3/2} with C = 2 / 27^(1/2); the extended mode engages automatically.
        let c = 2.0 / 27f64.sqrt();
        assert!(rb.uses_f_infinity());
        assert_relative_eq!(rb.kstar(0.25).unwrap(), c * 0.125, max_relative = 1e-14);
        let c_tilde = 27f64.sqrt();
        assert_relative_eq!(rb.tail_integral().unwrap(), c_tilde, max_relative = 1e-12);
        assert_relative_eq!(rb.f(0.01).unwrap(), c_tilde * 10.0, max_relative = 1e-12);
        for n in [10.0, 100.0, 1e4] {
            assert_relative_eq!(rb.f_inverse(n).unwrap(), 27.0 / (n * n), max_relative = 1e-12);
        }
        // Below the tail mass the capped inverse saturates at a.
        assert_eq!(rb.f_inverse(1.0).unwrap(), 1.0);
    }

    #[test]
    fn numeric_path_matches_closed_forms() {
        let opts = RateOptions { force_numeric: true, f_infinity: None };
        let rbn = RateBound::with_options(BetaFn::strong_pi(1.0, 0.5).unwrap(), 1.0, opts).unwrap();
        let rbc = strong(1.0, 0.5);
        for v in [1e-6, 1e-3, 0.2, 0.9, 1.0] {
            assert_relative_eq!(rbn.kstar(v).unwrap(), rbc.kstar(v).unwrap(), max_relative = 1e-8);
        }
        for x in [1e-9, 1e-4, 0.5] {
            assert_relative_eq!(rbn.f_a(x).unwrap(), rbc.f_a(x).unwrap(), max_relative = 1e-7);
        }
        for n in [1.0, 5.0, 20.0] {
            assert_relative_eq!(rbn.f_a_inverse(n).unwrap(), rbc.f_a_inverse(n).unwrap(), max_relative = 1e-7);
        }

        let rbn = RateBound::with_options(BetaFn::polynomial(1.0, 2.0).unwrap(), 1.0, opts).unwrap();
        let rbc = poly(1.0, 2.0);
        assert!(rbn.uses_f_infinity());
        for v in [1e-6, 1e-2, 0.5, 1.0] {
            assert_relative_eq!(rbn.kstar(v).unwrap(), rbc.kstar(v).unwrap(), max_relative = 1e-7);
        }
        for n in [10.0, 100.0, 1e4] {
            assert_relative_eq!(rbn.f_inverse(n).unwrap(), rbc.f_inverse(n).unwrap(), max_relative = 1e-6);
        }
    }

    #[test]
    fn round_trip_f_and_inverse() {
        for rb in [strong(1.0, 0.7), poly(2.0, 1.5)] {
            for n in [0.5, 3.0, 12.0, 40.0] {
                let x = rb.f_inverse(n).unwrap();
                if x < rb.a() {
                    assert_relative_eq!(rb.f(x).unwrap(), n, max_relative = 1e-10);
                }
            }
        }
        // Numeric table round trip on a coefficient with no closed form.
        let rb = RateBound::new(BetaFn::lognormal_tail(1.0).unwrap()).unwrap();
        for n in [1.0, 10.0, 200.0] {
            let x = rb.f_inverse(n).unwrap();
            assert_relative_eq!(rb.f(x).unwrap(), n, max_relative = 1e-8);
        }
    }

    #[test]
    fn domain_errors() {
        let rb = strong(1.0, 0.5);
        assert!(rb.kstar(-0.1).is_err());
        assert!(rb.kstar(1.1).is_err());
        assert!(rb.f(0.0).is_err());
        assert!(rb.f(1.5).is_err());
        assert!(rb.f_inverse(-1.0).is_err());
        // beta(s) = e^(1/s) - 1 has K*(v) growing like v ln v, so the tail integral diverges:
        // requesting the extended mode must fail, and the automatic mode must fall back.
        let slow = || BetaFn::callable(|s: f64| (1.0 / s).exp_m1());
        let err = RateBound::with_options(
            slow(),
            1.0,
            RateOptions { force_numeric: false, f_infinity: Some(true) },
        );
        assert!(matches!(err, Err(Error::Unsupported(_))));
        let rb = RateBound::new(slow()).unwrap();
        assert!(!rb.uses_f_infinity());
        assert_eq!(rb.tail_integral(), None);
        assert!(rb.f_infinity(0.5).is_err());
    }

    #[test]
    fn rescaling_identities() {
        // Closed polynomial path: Finv_scaled(n) = c1 * Finv(c2 n) in extended mode.
        let rb = poly(1.0, 2.0);
        let scaled = rb.rescale(3.0, 0.5).unwrap();
        for n in [20.0, 80.0, 640.0] {
            assert_relative_eq!(
                scaled.f_inverse(n).unwrap(),
                3.0 * rb.f_inverse(0.5 * n).unwrap(),
                max_relative = 1e-12
            );
        }
        for v in [0.01, 0.2, 0.9] {
            assert_relative_eq!(
                scaled.kstar(v).unwrap(),
                3.0 * 0.5 * rb.kstar(v / 3.0).unwrap(),
                max_relative = 1e-12
            );
        }
        // Numeric path: the chained lognormal coefficient keeps the same identities within
        // table accuracy.
        let ln_rb = RateBound::new(BetaFn::lognormal_tail(1.0).unwrap()).unwrap();
        let chained = ln_rb.rescale(2.0, 0.5).unwrap();
        assert!(chained.uses_f_infinity());
        for n in [50.0, 500.0] {
            assert_relative_eq!(
                chained.f_inverse(n).unwrap(),
                2.0 * ln_rb.f_inverse(0.5 * n).unwrap(),
                max_relative = 2e-4
            );
        }
    }

    #[test]
    fn stretched_envelope_dominates_numeric_rate() {
        let beta = BetaFn::stretched_exp(1.0, 1.0, 1.0).unwrap();
        let rb = RateBound::new(beta).unwrap();
        let (_, env) = stretched_exp_rate(&rb, 1.0, None).unwrap();
        assert!(env.v0 > 0.0 && env.v0 < 1.0);
        assert_relative_eq!(env.gamma, 0.5, max_relative = 1e-15);
        let start = env.burn_in.ceil() as u64;
        for n in [start, start * 4, start * 16, start * 256] {
            let numeric = rb.f_inverse(n as f64).unwrap();
            assert!(
                numeric <= env.eval(n as f64) * (1.0 + 1e-9),
                "numeric rate {numeric} above envelope {} at n = {n}",
                env.eval(n as f64)
            );
        }
        // Invalid eta split is rejected.
        assert!(stretched_exp_rate(&rb, 1.0, Some(1.5)).is_err());
        assert!(stretched_exp_rate(&poly(1.0, 1.0), 1.0, None).is_err());
    }

    #[test]
    fn fixed_point_rate() {
        // Indicator coefficient: gamma(n) = (1 - c_p)^n.
        let b = BetaFn::strong_pi(1.0, 0.25).unwrap();
        for n in [1.0, 10.0, 30.0] {
            assert_relative_eq!(rockner_wang_rate(&b, n).unwrap(), 0.75f64.powf(n), max_relative = 1e-8);
        }
        // alpha == 1 everywhere collapses the rate to zero.
        let b1 = BetaFn::strong_pi(1.0, 1.0).unwrap();
        assert_eq!(rockner_wang_rate(&b1, 5.0).unwrap(), 0.0);
        // Dense-scan oracle for beta(s) = 1/s, n = 10: smallest r with (1 - r)^10 <= r.
        let b = BetaFn::polynomial(1.0, 1.0).unwrap();
        let got = rockner_wang_rate(&b, 10.0).unwrap();
        let scan = (1..2_000_000)
            .map(|i| i as f64 * 5e-7)
            .find(|&r| (1.0 - r).powf(10.0) <= r)
            .unwrap();
        assert_relative_eq!(got, scan, max_relative = 1e-4);
        assert!(rockner_wang_rate(&b, 0.5).is_err());
    }

    #[test]
    fn tv_transfer() {
        assert_relative_eq!(
            l2_to_tv(1.0, (-2.0f64).exp()).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert!(l2_to_tv(-1.0, 0.5).is_err());
    }

    #[test]
    fn phi_functionals() {
        let f = [1.0, -1.0, 0.5];
        let pi = [0.5, 0.25, 0.25];
        assert_relative_eq!(PhiFunctional::OscSquared.value(&f, &pi), 4.0, max_relative = 1e-15);
        let l2 = 0.5 + 0.25 + 0.25 * 0.25;
        assert_relative_eq!(PhiFunctional::L2Squared.value(&f, &pi), l2, max_relative = 1e-15);
        let p = 2.0;
        let s = 0.5 + 0.25 + 0.25 * 0.5f64.powi(4);
        assert_relative_eq!(
            PhiFunctional::two_p(p).unwrap().value(&f, &pi),
            4.0 * s.sqrt(),
            max_relative = 1e-15
        );
        assert!(PhiFunctional::two_p(1.0).is_err());
        assert_eq!(PhiFunctional::OscSquared.holder_q().unwrap(), 1.0);
        assert_relative_eq!(
            PhiFunctional::two_p(3.0).unwrap().holder_q().unwrap(),
            1.5,
            max_relative = 1e-15
        );
    }
}
