//! Independence Metropolis-Hastings kernels.
//!
//! For a target `pi` and proposal `q` with weight `w = pi/q`, the kernel accepts a proposal `y`
//! from state `x` with probability `1 ∧ (w(y)/w(x))`. Its inequality coefficient with the squared
//! oscillation functional is `beta(s) = pi⊗pi(A(s)^c)/2` where
//! `A(s) = {(x, y): w(x)^-1 ∧ w(y)^-1 >= 1/s}`, i.e. half the probability that either endpoint
//! weight exceeds `s`. The two closed families here normalize the weight so its infimum over the
//! support is 1 (acceptance ratios are unaffected), which gives `beta(s)` in closed form for
//! `s >= 1`; the custom family evaluates the raw weight `exp(log_target - log_proposal)` and
//! estimates `beta(s)` by self-normalized importance sampling over proposal pairs.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Exp, Pareto};

use crate::beta::{BetaFn, Interp, Tail};
use crate::numeric;
use crate::rate::RateBound;
use crate::{Error, Result};

use super::MarkovSampler;

/// User-supplied kernel ingredients for the custom family. Log densities may be unnormalized;
/// the tail event uses the weight exactly as implied by the two functions, so the constant
/// folded into their difference is part of the model.
#[derive(Clone)]
pub struct CustomImh {
    pub log_target: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub log_proposal: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub sample_proposal: Arc<dyn Fn(&mut ChaCha12Rng) -> f64 + Send + Sync>,
}

/// Independence-sampler specification on a one-dimensional state space.
#[derive(Clone)]
pub enum ImhSpec {
    /// Exponential target with rate `a1`, exponential proposal with rate `a2 > a1`, on `(0, inf)`.
    /// The normalized weight `e^((a2-a1) x)` is unbounded, so convergence is subgeometric.
    ExpExp { a1: f64, a2: f64 },
    /// Pareto target with index `b1`, Pareto proposal with index `b2 > b1`, both on `[1, inf)`.
    PolyPoly { b1: f64, b2: f64 },
    /// User-supplied target, proposal, and proposal sampler.
    Custom(CustomImh),
}

impl std::fmt::Debug for ImhSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ImhSpec::ExpExp { a1, a2 } => write!(f, "ExpExp {{ a1: {a1}, a2: {a2} }}"),
            ImhSpec::PolyPoly { b1, b2 } => write!(f, "PolyPoly {{ b1: {b1}, b2: {b2} }}"),
            ImhSpec::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl ImhSpec {
    /// Exponential/exponential pair; requires `0 < a1 < a2`.
    pub fn exp_exp(a1: f64, a2: f64) -> Result<Self> {
        if !(a1 > 0.0 && a2 > a1 && a2.is_finite()) {
            return Err(Error::validation(format!(
                "exponential pair needs 0 < a1 < a2 (unbounded weight), got a1 = {a1}, a2 = {a2}"
            )));
        }
        Ok(ImhSpec::ExpExp { a1, a2 })
    }

    /// Pareto/Pareto pair; requires `0 < b1 < b2`.
    pub fn poly_poly(b1: f64, b2: f64) -> Result<Self> {
        if !(b1 > 0.0 && b2 > b1 && b2.is_finite()) {
            return Err(Error::validation(format!(
                "Pareto pair needs 0 < b1 < b2 (unbounded weight), got b1 = {b1}, b2 = {b2}"
            )));
        }
        Ok(ImhSpec::PolyPoly { b1, b2 })
    }

    /// Custom family from log densities and a proposal sampler.
    pub fn custom(
        log_target: impl Fn(f64) -> f64 + Send + Sync + 'static,
        log_proposal: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sample_proposal: impl Fn(&mut ChaCha12Rng) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ImhSpec::Custom(CustomImh {
            log_target: Arc::new(log_target),
            log_proposal: Arc::new(log_proposal),
            sample_proposal: Arc::new(sample_proposal),
        })
    }

    /// Decay exponent `a1/(a2-a1)` or `b1/(b2-b1)` of the closed-form tail; `None` for custom.
    pub fn tail_exponent(&self) -> Option<f64> {
        match self {
            ImhSpec::ExpExp { a1, a2 } => Some(a1 / (a2 - a1)),
            ImhSpec::PolyPoly { b1, b2 } => Some(b1 / (b2 - b1)),
            ImhSpec::Custom(_) => None,
        }
    }

    /// Log weight `ln w(x)`: normalized (infimum 0) for the closed families, raw
    /// `log_target - log_proposal` for custom.
    pub fn log_weight(&self, x: f64) -> f64 {
        match self {
            ImhSpec::ExpExp { a1, a2 } => (a2 - a1) * x,
            ImhSpec::PolyPoly { b1, b2 } => (b2 - b1) * x.max(1.0).ln(),
            ImhSpec::Custom(c) => (c.log_target)(x) - (c.log_proposal)(x),
        }
    }

    /// Log target density (unnormalized for custom); `-inf` off the support.
    pub fn log_target(&self, x: f64) -> f64 {
        match self {
            ImhSpec::ExpExp { a1, .. } => {
                if x >= 0.0 {
                    a1.ln() - a1 * x
                } else {
                    f64::NEG_INFINITY
                }
            }
            ImhSpec::PolyPoly { b1, .. } => {
                if x >= 1.0 {
                    b1.ln() - (1.0 + b1) * x.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            ImhSpec::Custom(c) => (c.log_target)(x),
        }
    }

    /// Log proposal density (unnormalized for custom); `-inf` off the support.
    pub fn log_proposal(&self, x: f64) -> f64 {
        match self {
            ImhSpec::ExpExp { a2, .. } => {
                if x >= 0.0 {
                    a2.ln() - a2 * x
                } else {
                    f64::NEG_INFINITY
                }
            }
            ImhSpec::PolyPoly { b2, .. } => {
                if x >= 1.0 {
                    b2.ln() - (1.0 + b2) * x.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            ImhSpec::Custom(c) => (c.log_proposal)(x),
        }
    }

    /// One draw from the proposal.
    pub fn draw_proposal(&self, rng: &mut ChaCha12Rng) -> f64 {
        match self {
            ImhSpec::ExpExp { a2, .. } => rng.sample(Exp::new(*a2).expect("validated rate")),
            ImhSpec::PolyPoly { b2, .. } => rng.sample(Pareto::new(1.0, *b2).expect("validated index")),
            ImhSpec::Custom(c) => (c.sample_proposal)(rng),
        }
    }

    /// One draw from the target; unsupported for the custom family.
    pub fn draw_target(&self, rng: &mut ChaCha12Rng) -> Result<f64> {
        match self {
            ImhSpec::ExpExp { a1, .. } => Ok(rng.sample(Exp::new(*a1).expect("validated rate"))),
            ImhSpec::PolyPoly { b1, .. } => Ok(rng.sample(Pareto::new(1.0, *b1).expect("validated index"))),
            ImhSpec::Custom(_) => Err(Error::unsupported(
                "the custom family has no target sampler; draw stationary states yourself".to_string(),
            )),
        }
    }
}

/// A coefficient value with Monte Carlo error information. Closed-form evaluations report
/// `se = 0` and `high_variance = false`.
#[derive(Clone, Copy, Debug)]
pub struct BetaEstimate {
    pub value: f64,
    pub se: f64,
    /// Set when the relative standard error exceeds 25% or no draw hit the tail event; the
    /// value is then unreliable and a larger draw budget (or smaller `s`) is needed.
    pub high_variance: bool,
}

/// Inequality coefficient of the independence sampler at level `s`.
///
/// Closed families require `s >= 1` and return `(1 - (1 - s^-e)^2)/2` exactly, `e` the tail
/// exponent. The custom family runs a 10^6-pair importance-sampling estimate; see
/// [`imh_beta_with`] to control the budget and seed.
pub fn imh_beta(spec: &ImhSpec, s: f64) -> Result<BetaEstimate> {
    imh_beta_with(spec, s, 1_000_000, 0x11a_5eed)
}

/// [`imh_beta`] with an explicit pair-draw budget and seed for the custom family (both are
/// ignored by the closed families).
pub fn imh_beta_with(spec: &ImhSpec, s: f64, draws: usize, seed: u64) -> Result<BetaEstimate> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("coefficient level must satisfy s > 0, got {s}")));
    }
    if let Some(e) = spec.tail_exponent() {
        if s < 1.0 {
            return Err(Error::domain(format!(
                "closed-form coefficient is available for s >= 1 only, got s = {s}"
            )));
        }
        let u = s.powf(-e);
        return Ok(BetaEstimate { value: u - 0.5 * u * u, se: 0.0, high_variance: false });
    }
    if draws < 2 {
        return Err(Error::validation(format!("need at least 2 pair draws, got {draws}")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let ln_s = s.ln();
    // Self-normalized estimate of pi⊗pi(max weight > s) from proposal pairs: the weight
    // product corrects q⊗q to pi⊗pi up to the unknown normalizing constant.
    let mut pairs = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x = spec.draw_proposal(&mut rng);
        let y = spec.draw_proposal(&mut rng);
        let (lwx, lwy) = (spec.log_weight(x), spec.log_weight(y));
        if lwx.is_nan() || lwy.is_nan() || lwx == f64::INFINITY || lwy == f64::INFINITY {
            return Err(Error::validation(format!(
                "log weight is not finite at a proposal draw (x = {x}, y = {y})"
            )));
        }
        let w = (lwx + lwy).exp();
        if !w.is_finite() {
            return Err(Error::validation(format!(
                "importance weight overflows at (x, y) = ({x}, {y}); rescale the log densities"
            )));
        }
        let hit = lwx.max(lwy) > ln_s;
        pairs.push((w, hit));
    }
    let total: f64 = pairs.iter().map(|(w, _)| *w).sum();
    if !(total > 0.0) {
        return Err(Error::validation("all importance weights vanished; check the densities".to_string()));
    }
    let ratio = pairs.iter().filter(|(_, h)| *h).map(|(w, _)| *w).sum::<f64>() / total;
    // Delta-method error of the ratio estimator.
    let resid: f64 = pairs
        .iter()
        .map(|(w, h)| {
            let g = if *h { 1.0 } else { 0.0 };
            let r = w * (g - ratio);
            r * r
        })
        .sum();
    let se = resid.sqrt() / total;
    let high_variance = ratio == 0.0 || se > 0.25 * ratio;
    Ok(BetaEstimate { value: 0.5 * ratio, se: 0.5 * se, high_variance })
}

/// Grid used when tabulating the custom-family coefficient.
const RATE_GRID_LO: f64 = 1.0;
const RATE_GRID_HI: f64 = 1e6;
const RATE_GRID_POINTS: usize = 25;

/// Rate bound for the independence sampler (squared oscillation functional, `a = 1`).
///
/// The kernel is positive, so its own Dirichlet form certifies the decay and no laziness or
/// two-step correction is needed. Closed families use the envelope `beta(s) <= s^-e`, whose
/// rate inverts in closed form to `(1+e)^(1+e) n^-e`; the custom family tabulates the Monte
/// Carlo coefficient on a log grid (400 000 pairs per point) and fits a power tail to the last
/// resolved decade, stopping early once the noise flag fires on consecutive points.
pub fn imh_rate(spec: &ImhSpec) -> Result<RateBound> {
    imh_rate_with(spec, 400_000, 0x11a_7a7e)
}

/// [`imh_rate`] with an explicit per-point draw budget and seed for the custom family.
pub fn imh_rate_with(spec: &ImhSpec, draws_per_knot: usize, seed: u64) -> Result<RateBound> {
    if let Some(e) = spec.tail_exponent() {
        return RateBound::new(BetaFn::polynomial(1.0, e)?);
    }
    let grid = numeric::log_spaced(RATE_GRID_LO, RATE_GRID_HI, RATE_GRID_POINTS);
    let mut s_kept: Vec<f64> = Vec::new();
    let mut v_kept: Vec<f64> = Vec::new();
    let mut noisy_streak = 0;
    for (i, &s) in grid.iter().enumerate() {
        let est = imh_beta_with(spec, s, draws_per_knot, seed ^ (i as u64).wrapping_mul(0x9e37_79b9))?;
        if est.high_variance {
            noisy_streak += 1;
            if noisy_streak >= 2 {
                break;
            }
            continue;
        }
        noisy_streak = 0;
        // The table requires strict decrease; Monte Carlo wiggles are dropped, which only
        // raises the envelope.
        if est.value > 0.0 && s_kept.last().map_or(true, |_| est.value < *v_kept.last().unwrap()) {
            s_kept.push(s);
            v_kept.push(est.value);
        }
    }
    if s_kept.len() < 4 {
        return Err(Error::validation(format!(
            "Monte Carlo resolved only {} coefficient points; raise the draw budget",
            s_kept.len()
        )));
    }
    let k = s_kept.len().min(6);
    let log_s: Vec<f64> = s_kept[s_kept.len() - k..].iter().map(|x| x.ln()).collect();
    let log_v: Vec<f64> = v_kept[v_kept.len() - k..].iter().map(|x| x.ln()).collect();
    let slope = numeric::ls_slope(&log_s, &log_v);
    if !(slope < 0.0) {
        return Err(Error::validation(format!(
            "tabulated coefficient does not decay (fitted slope {slope:.3}); raise the draw budget"
        )));
    }
    RateBound::new(BetaFn::tabulated(s_kept, v_kept, Some(Tail::Power(-slope)), Interp::LogLog)?)
}

/// One Metropolis step. Returns the new state and log weight plus (accepted, nonfinite) flags;
/// a proposal whose log weight is NaN or +inf is rejected and flagged, while `-inf` (a proposal
/// off the target support) is an ordinary zero-probability rejection.
fn imh_step(spec: &ImhSpec, x: f64, lw_x: f64, rng: &mut ChaCha12Rng) -> (f64, f64, bool, bool) {
    let y = spec.draw_proposal(rng);
    let lw_y = spec.log_weight(y);
    let (p, bad) = if lw_y.is_nan() || lw_y == f64::INFINITY {
        (0.0, true)
    } else {
        // min with 0 also resolves lw_x = -inf (start off support) to certain acceptance.
        ((lw_y - lw_x).min(0.0).exp(), false)
    };
    // The uniform is always drawn so the consumed stream does not depend on the branch.
    let u: f64 = rng.gen();
    if u < p {
        (y, lw_y, true, bad)
    } else {
        (x, lw_x, false, bad)
    }
}

/// Simulated path with acceptance and diagnostic counters.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// States including the start, so `states.len() = n_steps + 1`.
    pub states: Vec<f64>,
    pub accepted: u64,
    /// Proposals rejected because the log weight evaluated to NaN or +inf.
    pub nonfinite_rejections: u64,
}

impl Trajectory {
    pub fn acceptance_rate(&self) -> f64 {
        if self.states.len() <= 1 {
            return 0.0;
        }
        self.accepted as f64 / (self.states.len() - 1) as f64
    }

    /// CSV with columns `step,x`.
    pub fn csv(&self) -> String {
        let mut out = String::from("step,x\n");
        for (i, x) in self.states.iter().enumerate() {
            out.push_str(&format!("{i},{x:.16e}\n"));
        }
        out
    }
}

/// Runs the independence sampler for `n_steps` from `x0`. Deterministic given the seed.
pub fn imh_sample(spec: &ImhSpec, x0: f64, n_steps: usize, seed: u64) -> Result<Trajectory> {
    if !x0.is_finite() {
        return Err(Error::domain(format!("start point must be finite, got {x0}")));
    }
    match spec {
        ImhSpec::ExpExp { .. } if x0 < 0.0 => {
            return Err(Error::domain(format!("exponential target lives on (0, inf), got x0 = {x0}")))
        }
        ImhSpec::PolyPoly { .. } if x0 < 1.0 => {
            return Err(Error::domain(format!("Pareto target lives on [1, inf), got x0 = {x0}")))
        }
        _ => {}
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(x0);
    let (mut x, mut lw) = (x0, spec.log_weight(x0));
    let (mut accepted, mut nonfinite) = (0u64, 0u64);
    for _ in 0..n_steps {
        let (nx, nlw, acc, bad) = imh_step(spec, x, lw, &mut rng);
        x = nx;
        lw = nlw;
        accepted += u64::from(acc);
        nonfinite += u64::from(bad);
        states.push(x);
    }
    Ok(Trajectory { states, accepted, nonfinite_rejections: nonfinite })
}

impl MarkovSampler for ImhSpec {
    type State = f64;

    fn step(&self, x: &f64, rng: &mut ChaCha12Rng) -> f64 {
        imh_step(self, *x, self.log_weight(*x), rng).0
    }
}
