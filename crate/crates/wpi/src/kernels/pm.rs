//! Pseudo-marginal Metropolis-Hastings kernels.
//!
//! The chain lives on pairs `(x, w)` of a state and a positive weight: a proposal `y` comes with
//! a fresh nonnegative weight `W_y` whose law at each point has mean one, and is accepted with
//! probability `1 ∧ (r(x, y) W_y / W_x)` where `r` is the marginal acceptance ratio. The joint
//! chain is exact: its `x`-marginal under stationarity is the marginal target.
//!
//! The inequality data of the joint chain comes from two ingredients: the marginal chain's own
//! data (strong constant or weak coefficient) and the tail function `beta'(s)` of the
//! size-biased weight law described by a [`WeightModel`]. [`pm_rate`] composes them through the
//! comparison rules and reports which route produced the bound; [`pm_sample`] runs the pair
//! chain itself from user closures.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::beta::BetaFn;
use crate::comparison;
use crate::numeric;
use crate::rate::{PhiFunctional, RateBound};
use crate::weights::{self, WeightModel};
use crate::{Error, Result};

use super::MarkovSampler;

/// Inequality data of the marginal chain being perturbed.
#[derive(Clone)]
pub enum MarginalPi {
    /// Strong inequality with constant `c_p` in `(0, 1]`.
    Strong { c_p: f64 },
    /// Weak inequality with the given coefficient.
    Weak { beta: BetaFn },
}

/// Simulation closures for the pair chain. Log densities may be unnormalized; `log_mh_ratio`
/// is the marginal log acceptance ratio `ln(pi(y) q(y, x)) - ln(pi(x) q(x, y))`. The weight
/// sampler must return nonnegative draws with mean one at every point; [`pm_sample`] audits
/// this at the start point before running.
#[derive(Clone)]
pub struct PmSim {
    pub propose: Arc<dyn Fn(f64, &mut ChaCha12Rng) -> f64 + Send + Sync>,
    pub log_mh_ratio: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub sample_weight: Arc<dyn Fn(f64, &mut ChaCha12Rng) -> f64 + Send + Sync>,
}

impl PmSim {
    pub fn new(
        propose: impl Fn(f64, &mut ChaCha12Rng) -> f64 + Send + Sync + 'static,
        log_mh_ratio: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        sample_weight: impl Fn(f64, &mut ChaCha12Rng) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PmSim {
            propose: Arc::new(propose),
            log_mh_ratio: Arc::new(log_mh_ratio),
            sample_weight: Arc::new(sample_weight),
        }
    }
}

/// Pseudo-marginal problem description: marginal inequality data plus a weight model, with an
/// optional functional choice, tail bookkeeping factor, and simulation closures.
#[derive(Clone)]
pub struct PmSpec {
    pub marginal: MarginalPi,
    pub weights: WeightModel,
    pub phi: PhiFunctional,
    /// Doubles the weight tail term to account for both endpoints of a pair carrying an
    /// independent weight. Off by default: the single-tail envelope is the sharper published
    /// constant, the factor is kept for conservative bookkeeping.
    pub pair_tail_factor: bool,
    pub sim: Option<PmSim>,
}

impl PmSpec {
    /// Marginal chain with a strong inequality constant `c_p` in `(0, 1]`.
    pub fn strong(c_p: f64, weights: WeightModel) -> Result<Self> {
        if !(c_p > 0.0 && c_p <= 1.0) {
            return Err(Error::validation(format!("marginal constant must lie in (0, 1], got {c_p}")));
        }
        Ok(PmSpec {
            marginal: MarginalPi::Strong { c_p },
            weights,
            phi: PhiFunctional::OscSquared,
            pair_tail_factor: false,
            sim: None,
        })
    }

    /// Marginal chain with a weak inequality coefficient.
    pub fn weak(beta: BetaFn, weights: WeightModel) -> Self {
        PmSpec {
            marginal: MarginalPi::Weak { beta },
            weights,
            phi: PhiFunctional::OscSquared,
            pair_tail_factor: false,
            sim: None,
        }
    }

    pub fn with_phi(mut self, phi: PhiFunctional) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_pair_tail_factor(mut self, on: bool) -> Self {
        self.pair_tail_factor = on;
        self
    }

    pub fn with_sim(mut self, sim: PmSim) -> Self {
        self.sim = Some(sim);
        self
    }

    /// Sampler view for decay estimation; requires simulation closures.
    pub fn sampler(&self) -> Result<PmSampler<'_>> {
        match &self.sim {
            Some(sim) => Ok(PmSampler { sim }),
            None => Err(Error::unsupported(
                "no simulation closures attached; build the spec with with_sim".to_string(),
            )),
        }
    }
}

/// Weight tail term at level `s`: the size-biased tail mass capped at one, doubled when the
/// pair bookkeeping factor is set (the doubled value is an envelope and may exceed one).
pub fn pm_beta_prime(spec: &PmSpec, s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("tail level must satisfy s > 0, got {s}")));
    }
    let raw = spec.weights.tail_beta()?.eval(s)?;
    let capped = raw.min(1.0);
    Ok(if spec.pair_tail_factor { 2.0 * capped } else { capped })
}

/// Which composition produced a pseudo-marginal rate bound.
#[derive(Clone, Debug, PartialEq)]
pub enum PmRoute {
    /// Bounded weights under a strong marginal inequality: the constant is divided by the
    /// weight bound and the rate stays geometric. No tail term enters, so the pair
    /// bookkeeping factor does not apply here.
    BoundedWeights { w_bar: f64, rate: f64 },
    /// Strong marginal inequality chained with the weight tail term.
    StrongChained { c_p: f64 },
    /// Weak marginal coefficient composed with the weight tail term.
    WeakChained,
}

/// Closed-form envelope of the decay curve, when one is known for the route. This is a second,
/// independently assembled formula (sharing only the Lambert W evaluation), kept alongside the
/// numeric bound for cross-checking; the numeric bound is never looser than it.
#[derive(Clone, Copy, Debug)]
pub enum ClosedFinv {
    /// `a e^(-rate n)`.
    Geometric { a: f64, rate: f64 },
    /// `min(1, (2/c_p) exp(-W(c_p n sigma^2 / (2 e^(sigma^2/2)))^2 / (2 sigma^2)))` for
    /// lognormal weights of parameter `sigma` under a strong marginal constant `c_p`.
    LambertLognormal { sigma: f64, c_p: f64 },
}

/// Decay-rate bound for the pair chain together with the route that produced it.
pub struct PmRate {
    pub bound: RateBound,
    pub route: PmRoute,
    pub closed: Option<ClosedFinv>,
}

impl PmRate {
    /// Evaluates the closed-form envelope at `n`, when the route has one.
    pub fn closed_finv(&self, n: f64) -> Result<Option<f64>> {
        if !(n >= 0.0) || !n.is_finite() {
            return Err(Error::domain(format!("step count must be finite and nonnegative, got {n}")));
        }
        match self.closed {
            None => Ok(None),
            Some(ClosedFinv::Geometric { a, rate }) => Ok(Some(a * (-rate * n).exp())),
            Some(ClosedFinv::LambertLognormal { sigma, c_p }) => {
                let s2 = sigma * sigma;
                let w = weights::lambert_w(c_p * n * s2 / (2.0 * (s2 / 2.0).exp()))?;
                Ok(Some(((2.0 / c_p) * (-(w * w) / (2.0 * s2)).exp()).min(1.0)))
            }
        }
    }
}

/// Composes the marginal inequality data with the weight tail into a rate bound for the pair
/// chain.
///
/// Routes, in order: bounded weights under a strong marginal inequality keep a geometric rate
/// with constant `c_p / w_bar`; otherwise the weight tail (raised to the Hölder exponent of the
/// chosen functional, doubled if the pair factor is set) is chained through the strong or weak
/// composition rule. The moment-envelope tails stay in closed polynomial form through the
/// oscillation route, so e.g. a third-moment envelope `2 s^-3` under `c_p = 1` yields exactly
/// `512 n^-3`. The squared L2 norm has no Hölder pairing and is rejected.
pub fn pm_rate(spec: &PmSpec) -> Result<PmRate> {
    let q = spec.phi.holder_q()?;
    let a = spec.phi.a_constant();

    if let (MarginalPi::Strong { c_p }, WeightModel::Bounded { w_bar }) = (&spec.marginal, &spec.weights) {
        let rate = *c_p / *w_bar;
        let bound = RateBound::with_a(BetaFn::strong_pi(a, rate)?, a)?;
        return Ok(PmRate {
            bound,
            route: PmRoute::BoundedWeights { w_bar: *w_bar, rate },
            closed: Some(ClosedFinv::Geometric { a, rate }),
        });
    }

    let tail = spec.weights.tail_beta()?;
    // The oscillation pairing takes the tail as is; moment envelopes may exceed one near
    // s = 1 but remain valid upper bounds and keep their closed form. Other functionals raise
    // the capped tail to the Hölder exponent.
    let tail_term = if q <= 1.0 {
        tail
    } else {
        let p = match spec.phi {
            PhiFunctional::TwoPNormSquared { p } => p,
            _ => unreachable!("q > 1 only arises from the 2p-norm functional"),
        };
        let capped = {
            let inner = tail.clone();
            BetaFn::callable(move |s| match inner.eval(s) {
                Ok(v) => v.min(1.0),
                Err(_) => f64::NAN,
            })
        };
        comparison::dirichlet_domination_beta(&capped, p)?
    };
    let tail_term = if spec.pair_tail_factor { tail_term.scaled(2.0, 1.0)? } else { tail_term };

    let (chained, route) = match &spec.marginal {
        MarginalPi::Strong { c_p } => {
            (comparison::chain_strong(*c_p, &tail_term)?, PmRoute::StrongChained { c_p: *c_p })
        }
        MarginalPi::Weak { beta } => (comparison::chain_weak(beta, &tail_term), PmRoute::WeakChained),
    };
    let bound = RateBound::with_a(chained, a)?;

    let closed = match (&spec.marginal, &spec.weights) {
        (MarginalPi::Strong { c_p }, WeightModel::Lognormal { sigma })
            if !spec.pair_tail_factor && q <= 1.0 =>
        {
            Some(ClosedFinv::LambertLognormal { sigma: *sigma, c_p: *c_p })
        }
        _ => None,
    };
    Ok(PmRate { bound, route, closed })
}

struct PmStepOut {
    x: f64,
    w: f64,
    accepted: bool,
    zero_weight: bool,
    nonfinite: bool,
}

fn pm_step(sim: &PmSim, x: f64, w: f64, rng: &mut ChaCha12Rng) -> PmStepOut {
    let y = (sim.propose)(x, rng);
    let wy = (sim.sample_weight)(y, rng);
    let lr = (sim.log_mh_ratio)(x, y);
    let (p, zero, bad) = if !y.is_finite() || !(wy >= 0.0) || !wy.is_finite() || lr.is_nan() {
        (0.0, false, true)
    } else if wy == 0.0 {
        (0.0, true, false)
    } else if w == 0.0 {
        // A positive-weight proposal from a zero-weight state is accepted surely.
        (1.0, false, false)
    } else {
        ((lr + wy.ln() - w.ln()).exp().min(1.0), false, false)
    };
    // The uniform is always drawn so the consumed stream does not depend on the branch.
    let unif: f64 = rng.gen();
    if unif < p {
        PmStepOut { x: y, w: wy, accepted: true, zero_weight: zero, nonfinite: bad }
    } else {
        PmStepOut { x, w, accepted: false, zero_weight: zero, nonfinite: bad }
    }
}

/// Simulated pair-chain path with diagnostic counters.
#[derive(Clone, Debug)]
pub struct PmTrajectory {
    /// `(x, w)` pairs including the start, so `states.len() = n_steps + 1`.
    pub states: Vec<(f64, f64)>,
    pub accepted: u64,
    /// Proposals whose weight came back exactly zero (always rejected).
    pub zero_weight_proposals: u64,
    /// Proposals rejected because the state, weight, or ratio was not finite.
    pub nonfinite_rejections: u64,
    /// Mean and standard error of the start-point weight audit.
    pub weight_mean_check: (f64, f64),
}

impl PmTrajectory {
    pub fn acceptance_rate(&self) -> f64 {
        if self.states.len() <= 1 {
            return 0.0;
        }
        self.accepted as f64 / (self.states.len() - 1) as f64
    }

    /// CSV with columns `step,x,w`.
    pub fn csv(&self) -> String {
        let mut out = String::from("step,x,w\n");
        for (i, (x, w)) in self.states.iter().enumerate() {
            out.push_str(&format!("{i},{x:.16e},{w:.16e}\n"));
        }
        out
    }
}

const WEIGHT_AUDIT_DRAWS: usize = 10_000;

/// Runs the pair chain for `n_steps` from `(x0, w0)`. Requires simulation closures.
///
/// Before running, the weight law at `x0` is audited on a separate generator stream: 10^4
/// draws must be finite, nonnegative, and average to one within six standard errors, otherwise
/// the kernel would not be exact and the run is refused. Deterministic given the seed.
pub fn pm_sample(spec: &PmSpec, x0: f64, w0: f64, n_steps: usize, seed: u64) -> Result<PmTrajectory> {
    let sim = spec
        .sim
        .as_ref()
        .ok_or_else(|| Error::unsupported("no simulation closures attached; build the spec with with_sim".to_string()))?;
    if !x0.is_finite() {
        return Err(Error::domain(format!("start point must be finite, got {x0}")));
    }
    if !(w0 >= 0.0) || !w0.is_finite() {
        return Err(Error::domain(format!("start weight must be finite and nonnegative, got {w0}")));
    }

    // Audit stream u64::MAX is reserved so the main path never sees these draws.
    let mut audit_rng = ChaCha12Rng::seed_from_u64(seed);
    audit_rng.set_stream(u64::MAX);
    let draws: Vec<f64> = (0..WEIGHT_AUDIT_DRAWS).map(|_| (sim.sample_weight)(x0, &mut audit_rng)).collect();
    if let Some(badw) = draws.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::validation(format!("weight draws must be finite and nonnegative, got {badw}")));
    }
    let (mean, se) = numeric::mean_se(&draws);
    if (mean - 1.0).abs() > 6.0 * se + 1e-9 {
        return Err(Error::validation(format!(
            "weight draws at x0 = {x0} average {mean:.6} (se {se:.2e}); an exact kernel needs mean-one weights"
        )));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push((x0, w0));
    let (mut x, mut w) = (x0, w0);
    let (mut accepted, mut zero, mut nonfinite) = (0u64, 0u64, 0u64);
    for _ in 0..n_steps {
        let out = pm_step(sim, x, w, &mut rng);
        x = out.x;
        w = out.w;
        accepted += u64::from(out.accepted);
        zero += u64::from(out.zero_weight);
        nonfinite += u64::from(out.nonfinite);
        states.push((x, w));
    }
    Ok(PmTrajectory {
        states,
        accepted,
        zero_weight_proposals: zero,
        nonfinite_rejections: nonfinite,
        weight_mean_check: (mean, se),
    })
}

/// Borrowed sampler view of a [`PmSpec`] for decay estimation.
pub struct PmSampler<'a> {
    sim: &'a PmSim,
}

impl MarkovSampler for PmSampler<'_> {
    type State = (f64, f64);

    fn step(&self, state: &(f64, f64), rng: &mut ChaCha12Rng) -> (f64, f64) {
        let out = pm_step(self.sim, state.0, state.1, rng);
        (out.x, out.w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_distr::StandardNormal;

    fn lognormal_spec(sigma: f64, c_p: f64) -> PmSpec {
        PmSpec::strong(c_p, WeightModel::Lognormal { sigma }).unwrap()
    }

    #[test]
    fn beta_prime_closed_forms() {
        // Lognormal tail: exp(-((ln s - sigma^2/2)_+)^2 / (2 sigma^2)), capped at one below
        // the median of the size-biased law.
        let spec = lognormal_spec(1.0, 1.0);
        for s in [0.5f64, 1.0, 5.0, 100.0] {
            let expected = {
                let z = (s.ln() - 0.5).max(0.0);
                (-z * z / 2.0).exp()
            };
            assert_relative_eq!(pm_beta_prime(&spec, s).unwrap(), expected, max_relative = 1e-12);
        }

        // Third-moment envelope 2 s^-3, capped at one.
        let spec = PmSpec::strong(1.0, WeightModel::from_size_biased_moment(2.0, 3.0).unwrap()).unwrap();
        assert_relative_eq!(pm_beta_prime(&spec, 1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(pm_beta_prime(&spec, 2.0).unwrap(), 0.25, max_relative = 1e-15);
        assert_relative_eq!(pm_beta_prime(&spec, 10.0).unwrap(), 0.002, max_relative = 1e-15);

        let doubled = spec.clone().with_pair_tail_factor(true);
        assert_relative_eq!(pm_beta_prime(&doubled, 10.0).unwrap(), 0.004, max_relative = 1e-15);

        assert!(matches!(pm_beta_prime(&doubled, 0.0), Err(Error::Domain(_))));
        assert!(matches!(pm_beta_prime(&doubled, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn bounded_weights_keep_geometric_rate() {
        let pm = pm_rate(&PmSpec::strong(0.4, WeightModel::Bounded { w_bar: 2.0 }).unwrap()).unwrap();
        assert_eq!(pm.route, PmRoute::BoundedWeights { w_bar: 2.0, rate: 0.2 });
        for n in [1.0f64, 5.0, 50.0] {
            let expected = (-0.2 * n).exp();
            assert_relative_eq!(pm.bound.f_inverse(n).unwrap(), expected, max_relative = 1e-12);
            assert_relative_eq!(pm.closed_finv(n).unwrap().unwrap(), expected, max_relative = 1e-15);
        }
    }

    #[test]
    fn moment_envelope_rate_is_exact_power() {
        let spec = PmSpec::strong(1.0, WeightModel::from_size_biased_moment(2.0, 3.0).unwrap()).unwrap();
        let pm = pm_rate(&spec).unwrap();
        assert_eq!(pm.route, PmRoute::StrongChained { c_p: 1.0 });
        assert!(pm.closed_finv(1.0).unwrap().is_none());
        // Below the tail-integral crossover (8 here) the inverse sits at the start value;
        // past it the pure power form holds exactly.
        assert_relative_eq!(pm.bound.f_inverse(1.0).unwrap(), 1.0, max_relative = 1e-12);
        for n in [10.0, 50.0, 100.0] {
            assert_relative_eq!(pm.bound.f_inverse(n).unwrap(), 512.0 * n.powi(-3), max_relative = 1e-9);
        }
    }

    #[test]
    fn lognormal_rate_closed_envelope_two_assemblies_agree() {
        let pm = pm_rate(&lognormal_spec(1.0, 1.0)).unwrap();
        assert_eq!(pm.route, PmRoute::StrongChained { c_p: 1.0 });
        for n in [10.0, 100.0, 1000.0] {
            let here = pm.closed_finv(n).unwrap().expect("lognormal route has a closed envelope");
            let there = weights::lognormal_finv(1.0, 1.0, n).unwrap();
            assert_relative_eq!(here, there, max_relative = 1e-6);
            // The numeric inversion is never looser than the closed envelope.
            assert!(pm.bound.f_inverse(n).unwrap() <= here * (1.0 + 1e-9));
        }
    }

    #[test]
    fn weak_marginal_routes_through_composition() {
        let marg = BetaFn::polynomial(1.0, 1.0).unwrap();
        let weights = WeightModel::Generic { tail: BetaFn::polynomial(1.0, 1.0).unwrap() };
        let pm = pm_rate(&PmSpec::weak(marg, weights)).unwrap();
        assert_eq!(pm.route, PmRoute::WeakChained);
        // Two reciprocal coefficients compose to (2^(1/3) + 2^(-2/3)) s^(-1/3).
        let c = 2f64.powf(1.0 / 3.0) + 2f64.powf(-2.0 / 3.0);
        for s in [1e3, 1e6] {
            let got = pm.bound.beta().eval(s).unwrap();
            let expected = c * s.powf(-1.0 / 3.0);
            assert!(
                (got - expected).abs() <= 0.03 * expected,
                "s = {s}: composed {got} vs closed {expected}"
            );
        }
    }

    #[test]
    fn l2_functional_is_rejected() {
        let spec = lognormal_spec(1.0, 0.5).with_phi(PhiFunctional::L2Squared);
        assert!(matches!(pm_rate(&spec), Err(Error::Unsupported(_))));
    }

    #[test]
    fn unit_weights_reproduce_marginal_path() {
        // With W = 1 surely the pair chain consumes exactly the marginal chain's randomness:
        // one proposal draw and one uniform per step, the weight closure drawing nothing.
        let sim = PmSim::new(
            |x, rng| x + 0.5 * rng.sample::<f64, _>(StandardNormal),
            |x, y| 0.5 * (x * x - y * y),
            |_, _| 1.0,
        );
        let spec = lognormal_spec(1.0, 1.0).with_sim(sim);
        let traj = pm_sample(&spec, 0.2, 1.0, 2000, 42).unwrap();
        assert_eq!(traj.states.len(), 2001);
        assert!(traj.states.iter().all(|(_, w)| *w == 1.0));
        assert_eq!(traj.zero_weight_proposals, 0);
        assert_eq!(traj.nonfinite_rejections, 0);

        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mut x = 0.2f64;
        for (i, (got, _)) in traj.states.iter().enumerate().skip(1) {
            let y = x + 0.5 * rng.sample::<f64, _>(StandardNormal);
            let p = (0.5 * (x * x - y * y)).exp().min(1.0);
            let unif: f64 = rng.gen();
            if unif < p {
                x = y;
            }
            assert_eq!(x, *got, "paths diverged at step {i}");
        }
    }

    #[test]
    fn zero_weight_proposals_are_counted_and_never_accepted() {
        // Mean-one mixture: weight 0 with probability 1/3, else 3/2.
        let sim = PmSim::new(
            |x, rng| x + rng.sample::<f64, _>(StandardNormal),
            |_, _| 0.0,
            |_, rng| if rng.gen::<f64>() < 1.0 / 3.0 { 0.0 } else { 1.5 },
        );
        let spec = lognormal_spec(1.0, 1.0).with_sim(sim);
        let traj = pm_sample(&spec, 0.0, 1.0, 20_000, 5).unwrap();
        assert!(traj.zero_weight_proposals > 4000, "got {}", traj.zero_weight_proposals);
        assert!(traj.states.iter().all(|(_, w)| *w > 0.0));

        // Starting from weight zero, the first positive-weight proposal is accepted surely
        // and the chain never returns to zero.
        let from_zero = pm_sample(&spec, 0.0, 0.0, 50, 5).unwrap();
        assert!(from_zero.states.iter().skip(1).any(|(_, w)| *w > 0.0));
        assert_eq!(from_zero.states.last().unwrap().1, 1.5);
    }

    #[test]
    fn biased_weight_law_is_refused() {
        let sim = PmSim::new(
            |x, _| x,
            |_, _| 0.0,
            |_, rng| 2.0 * (rng.sample::<f64, _>(StandardNormal) - 0.5f64).exp(),
        );
        let spec = lognormal_spec(1.0, 1.0).with_sim(sim);
        let err = pm_sample(&spec, 0.0, 1.0, 10, 1).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));

        let no_sim = lognormal_spec(1.0, 1.0);
        assert!(matches!(pm_sample(&no_sim, 0.0, 1.0, 10, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn two_state_chain_preserves_the_marginal() {
        // Deterministic flip proposal between 0 and 1 (symmetric), target pi = (0.3, 0.7),
        // lognormal mean-one weights. The x-marginal must stay at pi; checked with a
        // batch-mean z statistic so the dependence within the path is accounted for.
        let pi = |x: f64| if x > 0.5 { 0.7f64 } else { 0.3 };
        let sim = PmSim::new(
            |x, _| 1.0 - x,
            move |x, y| (pi(y) / pi(x)).ln(),
            |_, rng| (rng.sample::<f64, _>(StandardNormal) - 0.5f64).exp(),
        );
        let spec = lognormal_spec(1.0, 1.0).with_sim(sim);
        let traj = pm_sample(&spec, 0.0, 1.0, 1_000_000, 17).unwrap();

        let burn = 10_000;
        let samples = &traj.states[burn..];
        let batch = 1000;
        let means: Vec<f64> = samples
            .chunks_exact(batch)
            .map(|c| c.iter().map(|(x, _)| if *x > 0.5 { 1.0 } else { 0.0 }).sum::<f64>() / batch as f64)
            .collect();
        assert!(means.len() >= 900);
        let (mean, se) = numeric::mean_se(&means);
        let z = (mean - 0.7) / se;
        assert!(z * z <= 16.0, "stationary frequency {mean:.5} (se {se:.1e}), z = {z:.2}");
        // The weight audit ran and recorded a mean near one.
        assert!((traj.weight_mean_check.0 - 1.0).abs() <= 0.05);

        let csv = traj.csv();
        assert!(csv.starts_with("step,x,w\n"));
        assert_eq!(csv.lines().count(), 1_000_002);
    }
}
