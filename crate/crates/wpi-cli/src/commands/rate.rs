//! `rate`: decay-rate curve of a single coefficient.

use std::path::Path;

use wpi::config::BetaConfig;
use wpi::rate::{rockner_wang_rate, RateBound};

use crate::config::{self, GridConfig, RateRun};
use crate::output::{e, Sink};

/// Closed-form envelope of the inverse rate, for the configs where one is known: the extended
/// polynomial inversion and the strong-constant exponential. Written as a second assembly so
/// the CSV carries an independent cross-check of the numeric column.
fn envelope(beta: &BetaConfig, a: f64, n: f64) -> Option<f64> {
    match beta {
        BetaConfig::Polynomial { c0, c1 } => Some(c0 * (1.0 + c1).powf(1.0 + c1) * n.powf(-c1)),
        BetaConfig::StrongPi { a: amp, c_p } if a <= *amp => Some(a * (-c_p * n).exp()),
        _ => None,
    }
}

pub fn run(cfg_path: &Path, sink: &Sink, seed: Option<u64>) -> anyhow::Result<()> {
    let mut cfg: RateRun = config::load(cfg_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let grid = GridConfig::resolve(&mut cfg.n_grid, 1.0, 1e4, 60);

    let rb = RateBound::with_options(cfg.beta.to_beta()?, cfg.rate.a, cfg.rate.to_options())?;
    let header = if cfg.rate.gamma_tilde { "n,f_inv,envelope,gamma_tilde" } else { "n,f_inv,envelope" };
    let mut rows = Vec::with_capacity(grid.points);
    for n in grid.values() {
        let mut row = vec![e(n), e(rb.f_inverse(n)?)];
        row.push(envelope(&cfg.beta, cfg.rate.a, n).map(e).unwrap_or_default());
        if cfg.rate.gamma_tilde {
            row.push(e(rockner_wang_rate(rb.beta(), n)?));
        }
        rows.push(row);
    }
    sink.csv("rate.csv", header, &rows)?;
    sink.resolved("rate_resolved.toml", &cfg)?;
    println!(
        "rate curve over n in [{:.1e}, {:.1e}], {} points{}",
        grid.lo,
        grid.hi,
        grid.points,
        if rb.uses_f_infinity() { " (extended mode)" } else { "" }
    );
    Ok(())
}
