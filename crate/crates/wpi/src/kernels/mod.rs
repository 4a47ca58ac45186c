//! Kernel simulation and decay estimation.
//!
//! The submodules provide two concrete kernel families: independence Metropolis-Hastings
//! ([`imh`]) and pseudo-marginal chains ([`pm`]). This root holds what they share: the
//! [`MarkovSampler`] step interface and an unbiased Monte Carlo estimator of the decay curve
//! `n -> ||P^n f||^2` used to check rate bounds against simulation.
//!
//! The estimator runs pairs of trajectories: two chains started from the same stationary draw
//! and stepped independently satisfy `E[f(X_n) f(X'_n)] = ||P^n f||^2` exactly for centered
//! `f`, so no burn-in or autocorrelation correction enters. Replicas are independent
//! generator streams (replica `r` uses stream `r + 1` of the seed), making runs reproducible
//! and the pooled standard error honest.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::numeric;
use crate::oracle::FiniteChain;
use crate::rate::RateBound;
use crate::{Error, Result};

pub mod imh;
pub mod pm;

pub use imh::{
    imh_beta, imh_beta_with, imh_rate, imh_rate_with, imh_sample, BetaEstimate, CustomImh, ImhSpec,
    Trajectory,
};
pub use pm::{
    pm_beta_prime, pm_rate, pm_sample, ClosedFinv, MarginalPi, PmRate, PmRoute, PmSampler, PmSim,
    PmSpec, PmTrajectory,
};

/// One-step sampler for a Markov kernel. Implementations must be deterministic functions of
/// the state and the generator so that seeded runs reproduce.
pub trait MarkovSampler: Sync {
    type State: Clone + Send + Sync;

    fn step(&self, x: &Self::State, rng: &mut ChaCha12Rng) -> Self::State;
}

/// Start law for decay estimation.
pub enum StartDist<'a, S> {
    /// Sampler for the stationary law; the pair estimator is exactly unbiased under it.
    Stationary(&'a (dyn Fn(&mut ChaCha12Rng) -> S + Sync)),
    /// A fixed start point. Rejected by [`estimate_decay`]: away from stationarity the pair
    /// product no longer targets the decay curve on general spaces. Exact finite-state decay
    /// from a point is available through [`DecayEstimate::exact`].
    Point(S),
}

/// Monte Carlo budget and grid for [`estimate_decay`].
#[derive(Clone, Debug)]
pub struct DecayOptions {
    /// Step counts to record, any order; sorted and deduplicated internally. May include 0.
    pub n_grid: Vec<u64>,
    /// Independent generator streams.
    pub replicas: usize,
    /// Trajectory pairs per replica.
    pub pairs_per_replica: usize,
    pub seed: u64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { n_grid: vec![1, 2, 4, 8, 16, 32], replicas: 8, pairs_per_replica: 64, seed: 0xdeca }
    }
}

/// Estimated (or exact) decay curve on a step grid, with an optional bound column attached for
/// comparison.
#[derive(Clone, Debug)]
pub struct DecayEstimate {
    pub n_grid: Vec<u64>,
    /// The estimand is a square, so small negative Monte Carlo means are clamped to zero.
    pub estimates: Vec<f64>,
    /// Pooled standard errors; zero on exact rows.
    pub ses: Vec<f64>,
    /// Replica count that produced the estimates; zero on exact rows.
    pub replicas: usize,
    pub bounds: Option<Vec<f64>>,
}

impl DecayEstimate {
    /// Exact decay values `||P^n f_centered||^2` for a finite chain, no Monte Carlo error.
    pub fn exact(chain: &FiniteChain, f: &[f64], n_grid: &[u64]) -> Result<Self> {
        let grid = sorted_grid(n_grid)?;
        let mut estimates = Vec::with_capacity(grid.len());
        for &n in &grid {
            estimates.push(chain.exact_decay(f, n)?);
        }
        let ses = vec![0.0; grid.len()];
        Ok(DecayEstimate { n_grid: grid, estimates, ses, replicas: 0, bounds: None })
    }

    /// Attaches the bound column `phi_f * F^-1(n)` from a rate bound, where `phi_f` is the
    /// functional value of the (centered) observable.
    pub fn with_bound(mut self, rb: &RateBound, phi_f: f64) -> Result<Self> {
        if !(phi_f > 0.0) || !phi_f.is_finite() {
            return Err(Error::validation(format!("functional value must be positive and finite, got {phi_f}")));
        }
        let mut bounds = Vec::with_capacity(self.n_grid.len());
        for &n in &self.n_grid {
            bounds.push(phi_f * rb.f_inverse(n as f64)?);
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    /// Largest studentized excess of the estimate over the bound: positive means some grid
    /// point exceeds its bound by that many standard errors. Exact rows contribute negative
    /// infinity when within the bound and positive infinity when not. `None` without a bound
    /// column.
    pub fn worst_excess_se(&self) -> Option<f64> {
        let bounds = self.bounds.as_ref()?;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.n_grid.len() {
            let excess = self.estimates[i] - bounds[i];
            let z = if self.ses[i] > 0.0 {
                excess / self.ses[i]
            } else if excess <= 0.0 {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
        Some(worst)
    }

    /// CSV with columns `n,estimate,se,bound`; the bound cell is empty when no bound is
    /// attached.
    pub fn csv(&self) -> String {
        let mut out = String::from("n,estimate,se,bound\n");
        for i in 0..self.n_grid.len() {
            let bound = match &self.bounds {
                Some(b) => format!("{:.16e}", b[i]),
                None => String::new(),
            };
            out.push_str(&format!("{},{:.16e},{:.16e},{}\n", self.n_grid[i], self.estimates[i], self.ses[i], bound));
        }
        out
    }
}

fn sorted_grid(n_grid: &[u64]) -> Result<Vec<u64>> {
    if n_grid.is_empty() {
        return Err(Error::validation("step grid must not be empty".to_string()));
    }
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    Ok(grid)
}

/// Unbiased Monte Carlo estimate of the decay curve `n -> ||P^n f||^2` of a kernel.
///
/// `f` must be centered under the stationary law (the estimator targets the squared norm of
/// `P^n` applied to `f` as given; an uncentered observable adds the square of its mean). Each
/// pair draws one stationary start and advances two chains with interleaved draws from the
/// replica's stream; the product `f(X_n) f(X'_n)` then has mean exactly `||P^n f||^2`.
pub fn estimate_decay<K: MarkovSampler>(
    kernel: &K,
    f: &(dyn Fn(&K::State) -> f64 + Sync),
    start: StartDist<'_, K::State>,
    opts: &DecayOptions,
) -> Result<DecayEstimate> {
    let draw_start = match start {
        StartDist::Stationary(s) => s,
        StartDist::Point(_) => {
            return Err(Error::unsupported(
                "a point start is only exact on finite state spaces; draw starts from the stationary law or use the exact finite-state path".to_string(),
            ))
        }
    };
    if opts.replicas == 0 {
        return Err(Error::validation("need at least one replica".to_string()));
    }
    if opts.pairs_per_replica < 2 {
        return Err(Error::validation(format!(
            "need at least 2 pairs per replica for a standard error, got {}",
            opts.pairs_per_replica
        )));
    }
    let grid = sorted_grid(&opts.n_grid)?;
    let n_max = *grid.last().expect("grid nonempty");

    let per_replica: Vec<Vec<Vec<f64>>> = (0..opts.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64 + 1);
            let mut products: Vec<Vec<f64>> = vec![Vec::with_capacity(opts.pairs_per_replica); grid.len()];
            for _ in 0..opts.pairs_per_replica {
                let x0 = draw_start(&mut rng);
                let mut a = x0.clone();
                let mut b = x0;
                let mut gi = 0;
                if grid[gi] == 0 {
                    products[gi].push(f(&a) * f(&b));
                    gi += 1;
                }
                for n in 1..=n_max {
                    a = kernel.step(&a, &mut rng);
                    b = kernel.step(&b, &mut rng);
                    if gi < grid.len() && grid[gi] == n {
                        products[gi].push(f(&a) * f(&b));
                        gi += 1;
                    }
                }
            }
            products
        })
        .collect();

    let mut estimates = Vec::with_capacity(grid.len());
    let mut ses = Vec::with_capacity(grid.len());
    for gi in 0..grid.len() {
        let pooled: Vec<f64> = per_replica.iter().flat_map(|rep| rep[gi].iter().copied()).collect();
        let (mean, se) = numeric::mean_se(&pooled);
        if !mean.is_finite() || !se.is_finite() {
            return Err(Error::divergent(format!(
                "decay estimate at n = {} is not finite; check the observable and sampler",
                grid[gi]
            )));
        }
        estimates.push(mean.max(0.0));
        ses.push(se);
    }
    Ok(DecayEstimate { n_grid: grid, estimates, ses, replicas: opts.replicas, bounds: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beta::BetaFn;
    use approx::assert_relative_eq;
    use rand::Rng;

    /// Two-state flip chain with hold probability 0.7: the centered sign observable is an
    /// eigenfunction with eigenvalue 0.4, so the decay curve is exactly 0.16^n.
    struct TwoState;

    impl MarkovSampler for TwoState {
        type State = u8;

        fn step(&self, x: &u8, rng: &mut ChaCha12Rng) -> u8 {
            if rng.gen::<f64>() < 0.3 {
                1 - *x
            } else {
                *x
            }
        }
    }

    fn sign(x: &u8) -> f64 {
        if *x == 0 {
            -1.0
        } else {
            1.0
        }
    }

    fn uniform_start(rng: &mut ChaCha12Rng) -> u8 {
        u8::from(rng.gen::<f64>() < 0.5)
    }

    #[test]
    fn pair_estimator_matches_eigenvalue_decay_and_exact_path() {
        let opts = DecayOptions {
            n_grid: vec![4, 0, 1, 2, 4],
            replicas: 8,
            pairs_per_replica: 500,
            seed: 3,
        };
        let est = estimate_decay(&TwoState, &sign, StartDist::Stationary(&uniform_start), &opts).unwrap();
        assert_eq!(est.n_grid, vec![0, 1, 2, 4]);
        for (i, &n) in est.n_grid.iter().enumerate() {
            let truth = 0.16f64.powi(n as i32);
            assert!(
                (est.estimates[i] - truth).abs() <= 4.0 * est.ses[i] + 1e-12,
                "n = {n}: estimate {} vs truth {truth} (se {})",
                est.estimates[i],
                est.ses[i]
            );
        }

        // The exact finite-state path agrees with the same analytic curve to precision.
        let chain = FiniteChain::from_rows(
            &[vec![0.7, 0.3], vec![0.3, 0.7]],
            &[0.5, 0.5],
        )
        .unwrap();
        let exact = DecayEstimate::exact(&chain, &[-1.0, 1.0], &[0, 1, 2, 4]).unwrap();
        assert_eq!(exact.replicas, 0);
        for (i, &n) in exact.n_grid.iter().enumerate() {
            assert_relative_eq!(exact.estimates[i], 0.16f64.powi(n as i32), max_relative = 1e-12);
            assert_eq!(exact.ses[i], 0.0);
        }
    }

    #[test]
    fn bound_column_and_excess_statistic() {
        let chain = FiniteChain::from_rows(&[vec![0.7, 0.3], vec![0.3, 0.7]], &[0.5, 0.5]).unwrap();
        // The flip chain has a strong inequality with constant 1 - 0.4 = 0.6; its geometric
        // bound dominates the exact curve.
        let rb = RateBound::new(BetaFn::strong_pi(1.0, 0.6).unwrap()).unwrap();
        let est = DecayEstimate::exact(&chain, &[-1.0, 1.0], &[0, 1, 2, 8]).unwrap()
            .with_bound(&rb, 4.0)
            .unwrap();
        let worst = est.worst_excess_se().unwrap();
        assert!(worst <= 0.0, "exact curve should sit below the bound, got excess {worst}");

        let csv = est.csv();
        assert!(csv.starts_with("n,estimate,se,bound\n"));
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().split(',').count() == 4);

        // Without a bound column the excess is undefined and the cell is empty.
        let bare = DecayEstimate::exact(&chain, &[-1.0, 1.0], &[1]).unwrap();
        assert!(bare.worst_excess_se().is_none());
        assert!(bare.csv().lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn standard_error_shrinks_with_replicas() {
        let base = DecayOptions { n_grid: vec![1], replicas: 1, pairs_per_replica: 400, seed: 11 };
        let one = estimate_decay(&TwoState, &sign, StartDist::Stationary(&uniform_start), &base).unwrap();
        let many = estimate_decay(
            &TwoState,
            &sign,
            StartDist::Stationary(&uniform_start),
            &DecayOptions { replicas: 100, ..base.clone() },
        )
        .unwrap();
        let ratio = one.ses[0] / many.ses[0];
        assert!(
            (6.0..14.0).contains(&ratio),
            "pooling 100x the draws should shrink the error about tenfold, got {ratio:.2}"
        );
    }

    #[test]
    fn deterministic_and_validated() {
        let opts = DecayOptions { n_grid: vec![1, 3], replicas: 4, pairs_per_replica: 64, seed: 21 };
        let a = estimate_decay(&TwoState, &sign, StartDist::Stationary(&uniform_start), &opts).unwrap();
        let b = estimate_decay(&TwoState, &sign, StartDist::Stationary(&uniform_start), &opts).unwrap();
        assert_eq!(a.estimates, b.estimates);
        assert_eq!(a.ses, b.ses);

        assert!(matches!(
            estimate_decay(&TwoState, &sign, StartDist::Point(0u8), &opts),
            Err(Error::Unsupported(_))
        ));
        let empty = DecayOptions { n_grid: vec![], ..opts.clone() };
        assert!(estimate_decay(&TwoState, &sign, StartDist::Stationary(&uniform_start), &empty).is_err());
        let few = DecayOptions { pairs_per_replica: 1, ..opts.clone() };
        assert!(estimate_decay(&TwoState, &sign, StartDist::Stationary(&uniform_start), &few).is_err());
        let none = DecayOptions { replicas: 0, ..opts };
        assert!(estimate_decay(&TwoState, &sign, StartDist::Stationary(&uniform_start), &none).is_err());
    }
}
