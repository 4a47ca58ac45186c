//! The `pm` subcommands: rate and budget tooling for noisy-acceptance chains.

use std::path::Path;

use anyhow::{bail, Context, Result};
use wpi::kernels::{pm_rate, PmSpec};
use wpi::weights::{self, WeightModel};

use crate::config::{self, GridConfig, PmAbcRun, PmAvarRun, PmBudgetRun, PmLognormalRun, PmMixingRun, PmProductRun};
use crate::output::{e, Sink};

/// Tabulates the inverse rate of a lognormal-weight chain whose exact-weight version has a
/// spectral gap, with the closed-form envelope alongside the numeric column.
pub fn lognormal_rate(cfg_path: &Path, sink: &Sink, seed: Option<u64>) -> Result<()> {
    let mut cfg: PmLognormalRun = config::load(cfg_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let grid = GridConfig::resolve(&mut cfg.n_grid, 1.0, 1e4, 60);

    let spec = PmSpec::strong(cfg.pm.c_p, WeightModel::Lognormal { sigma: cfg.pm.sigma })?
        .with_pair_tail_factor(cfg.pm.pair_tail_factor);
    let pmr = pm_rate(&spec)?;

    let mut rows = Vec::new();
    for n in grid.values() {
        let f_inv = pmr.bound.f_inverse(n)?;
        let closed = pmr.closed_finv(n)?;
        rows.push(vec![e(n), e(f_inv), closed.map(e).unwrap_or_default()]);
    }
    sink.csv("pm_lognormal_rate.csv", "n,f_inv,closed", &rows)?;
    sink.resolved("pm_lognormal_rate_resolved.toml", &cfg)?;

    println!(
        "lognormal weights: sigma = {}, marginal gap constant = {}, route = {:?}",
        cfg.pm.sigma, cfg.pm.c_p, pmr.route
    );
    if pmr.closed.is_some() {
        println!("closed envelope column emitted next to the numeric inversion");
    } else {
        println!("no closed envelope applies to this configuration; closed column left empty");
    }
    Ok(())
}

/// Solves for the number of steps to reach squared accuracy `epsilon^2` and verifies the
/// inverse rate at that step count is below the target.
pub fn mixing(cfg_path: &Path, sink: &Sink, seed: Option<u64>) -> Result<()> {
    let mut cfg: PmMixingRun = config::load(cfg_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let b = cfg.pm.clone();
    let n = weights::lognormal_mixing_n(b.epsilon, b.sigma, b.c_p)?;
    let finv = weights::lognormal_finv(b.sigma, b.c_p, n)?;
    let eps_sq = b.epsilon * b.epsilon;

    let rows = vec![vec![e(b.epsilon), e(b.sigma), e(b.c_p), e(n), e(finv), e(eps_sq)]];
    sink.csv("pm_mixing.csv", "epsilon,sigma,c_p,n_mix,finv_at_n,eps_sq", &rows)?;
    sink.resolved("pm_mixing_resolved.toml", &cfg)?;

    println!("n_mix = {n:.3}, F_pm^-1(n_mix) = {finv:.6e}, target eps^2 = {eps_sq:.6e}");
    if finv <= eps_sq * (1.0 + 1e-9) {
        println!("check: inverse rate at n_mix is within the squared accuracy target");
    } else {
        bail!("inverse rate {finv:.6e} exceeds the squared accuracy target {eps_sq:.6e}");
    }
    Ok(())
}

/// Splits a simulation budget: optimal noise level, simplified working point, particle and
/// step counts, and the total budget bound.
pub fn budget(cfg_path: &Path, sink: &Sink, seed: Option<u64>) -> Result<()> {
    let mut cfg: PmBudgetRun = config::load(cfg_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let b = cfg.pm.clone();
    let report = weights::budget_split(b.epsilon, b.c_p, b.sigma0_sq)?;

    sink.write("pm_budget.csv", &report.csv())?;
    sink.resolved("pm_budget_resolved.toml", &cfg)?;

    print!("{}", report.table());
    println!(
        "sqrt(H) * sigma_star = {:.6} (tends to 3 as the accuracy target tightens)",
        report.h.sqrt() * report.sigma_star
    );
    Ok(())
}

/// Sweeps the asymptotic-variance prefactor over a noise-level grid and reports the
/// minimizing noise level from both the closed form and the grid.
pub fn avar_curve(cfg_path: &Path, sink: &Sink, seed: Option<u64>) -> Result<()> {
    let mut cfg: PmAvarRun = config::load(cfg_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let grid = GridConfig::resolve(&mut cfg.sigma_grid, 0.1, 3.0, 80);
    let c_p = cfg.pm.c_p;

    let mut rows = Vec::new();
    let mut best = (f64::INFINITY, f64::NAN);
    for sigma in grid.values() {
        let (v, prefactor) = weights::lognormal_avar_bound(sigma, c_p)?;
        if prefactor < best.0 {
            best = (prefactor, sigma);
        }
        rows.push(vec![e(sigma), e(v), e(prefactor), e(prefactor.ln())]);
    }
    sink.csv("pm_avar_curve.csv", "sigma,avar_bound,prefactor,log_prefactor", &rows)?;
    sink.resolved("pm_avar_curve_resolved.toml", &cfg)?;

    let star = weights::sigma_star(c_p)?;
    println!("variance-optimal noise level: closed form sigma* = {star:.6}, grid argmin = {:.6}", best.1);
    println!("the closed form does not depend on the gap constant; the curve height does");
    Ok(())
}

/// Hit-frequency weights: builds the integrated negative moments (directly supplied or from a
/// finite target/acceptance table), emits the weight tail, and optionally a chained rate.
pub fn abc(cfg_path: &Path, sink: &Sink, seed: Option<u64>) -> Result<()> {
    let mut cfg: PmAbcRun = config::load(cfg_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let b = &cfg.abc;
    let neg_moments = match (&b.neg_moments, &b.pi, &b.ell) {
        (Some(m), None, None) => m.clone(),
        (None, Some(pi), Some(ell)) => weights::abc_neg_moments_from_finite(pi, ell, b.p)
            .context("building integrated negative moments from the finite table")?,
        _ => bail!("supply either neg_moments or both pi and ell, not a mixture"),
    };
    if neg_moments.len() != b.p as usize {
        bail!("neg_moments must hold orders 1..=p; got {} entries for p = {}", neg_moments.len(), b.p);
    }
    let constant = weights::abc_tail_constant(&neg_moments, b.n, b.p)?;
    let model = WeightModel::Abc { neg_moments, n: b.n };

    let s_grid = GridConfig::resolve(&mut cfg.s_grid, 1.0, 1e6, 50);
    let tail = model.tail_beta()?;
    let mut rows = Vec::new();
    for s in s_grid.values() {
        rows.push(vec![e(s), e(tail.eval(s)?.min(1.0))]);
    }
    sink.csv("pm_abc_tail.csv", "s,beta_prime", &rows)?;

    println!("hit-frequency weight tail: beta'(s) <= {constant:.6e} * s^-{} (capped at 1)", b.p);

    if let Some(chain) = &cfg.pm {
        let spec = PmSpec::strong(chain.c_p, model)?;
        let pmr = pm_rate(&spec)?;
        let n_grid = GridConfig::resolve(&mut cfg.n_grid, 1.0, 1e4, 60);
        let mut rate_rows = Vec::new();
        for n in n_grid.values() {
            rate_rows.push(vec![e(n), e(pmr.bound.f_inverse(n)?)]);
        }
        sink.csv("pm_abc_rate.csv", "n,f_inv", &rate_rows)?;
        println!("chained rate emitted for marginal gap constant {}", chain.c_p);
    }
    sink.resolved("pm_abc_resolved.toml", &cfg)?;
    Ok(())
}

/// Product-of-averages weights: checks the per-factor sample size against the requirement,
/// emits the weight tail, and optionally a chained rate.
pub fn product(cfg_path: &Path, sink: &Sink, seed: Option<u64>) -> Result<()> {
    let mut cfg: PmProductRun = config::load(cfg_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let b = &cfg.product;
    let required = weights::product_required_n(b.t, b.alpha)?;
    println!("per-factor sample size: configured n = {}, required n >= {required}", b.n);
    let model = WeightModel::ProductOfAverages {
        t: b.t,
        n: b.n,
        p: b.p,
        mp_integral: b.mp_integral,
        alpha: b.alpha,
    };

    let s_grid = GridConfig::resolve(&mut cfg.s_grid, 1.0, 1e6, 50);
    let tail = model.tail_beta()?;
    let mut rows = Vec::new();
    for s in s_grid.values() {
        rows.push(vec![e(s), e(tail.eval(s)?.min(1.0))]);
    }
    sink.csv("pm_product_tail.csv", "s,beta_prime", &rows)?;

    if let Some(chain) = &cfg.pm {
        let spec = PmSpec::strong(chain.c_p, model)?;
        let pmr = pm_rate(&spec)?;
        let n_grid = GridConfig::resolve(&mut cfg.n_grid, 1.0, 1e4, 60);
        let mut rate_rows = Vec::new();
        for n in n_grid.values() {
            rate_rows.push(vec![e(n), e(pmr.bound.f_inverse(n)?)]);
        }
        sink.csv("pm_product_rate.csv", "n,f_inv", &rate_rows)?;
        println!("chained rate emitted for marginal gap constant {}", chain.c_p);
    }
    sink.resolved("pm_product_resolved.toml", &cfg)?;
    Ok(())
}
