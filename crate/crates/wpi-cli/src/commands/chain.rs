//! `chain`: apply comparison links in order to a base coefficient.

use std::path::Path;

use wpi::comparison;
use wpi::config::BetaConfig;
use wpi::numeric;
use wpi::rate::RateBound;

use crate::config::{self, ChainRun, GridConfig, LinkConfig};
use crate::output::{e, Sink};

pub fn run(cfg_path: &Path, sink: &Sink, seed: Option<u64>) -> anyhow::Result<()> {
    let mut cfg: ChainRun = config::load(cfg_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let s_grid = GridConfig::resolve(&mut cfg.s_grid, 1.0, 1e6, 50);
    let n_grid = GridConfig::resolve(&mut cfg.n_grid, 1.0, 1e4, 60);

    let links: Vec<wpi::comparison::ChainLink> =
        cfg.links.iter().map(LinkConfig::to_link).collect::<anyhow::Result<_>>()?;
    let composed = comparison::apply_links(cfg.base.to_beta()?, &links)?;

    let svals = s_grid.values();
    let mut beta_rows = Vec::with_capacity(svals.len());
    for &s in &svals {
        beta_rows.push(vec![e(s), e(composed.eval(s)?)]);
    }
    sink.csv("chain_beta.csv", "s,beta", &beta_rows)?;

    let rb = RateBound::with_options(composed, cfg.rate.a, cfg.rate.to_options())?;
    let mut rate_rows = Vec::with_capacity(n_grid.points);
    for n in n_grid.values() {
        rate_rows.push(vec![e(n), e(rb.f_inverse(n)?)]);
    }
    sink.csv("chain_rate.csv", "n,f_inv", &rate_rows)?;
    sink.resolved("chain_resolved.toml", &cfg)?;

    // For a polynomial base composed with one weak polynomial link the decay exponent has the
    // closed form a1 a2 / (1 + a1 + a2); print it next to a fit of the emitted curve.
    if let (BetaConfig::Polynomial { c1: a1, .. }, [LinkConfig::Weak { beta: BetaConfig::Polynomial { c1: a2, .. } }]) =
        (&cfg.base, &cfg.links[..])
    {
        let predicted = a1 * a2 / (1.0 + a1 + a2);
        let tail = svals.len() / 2;
        let lx: Vec<f64> = svals[tail..].iter().map(|s| s.ln()).collect();
        let ly: Vec<f64> = beta_rows[tail..].iter().map(|r| r[1].parse::<f64>().unwrap().ln()).collect();
        let fitted = -numeric::ls_slope(&lx, &ly);
        println!("composed decay exponent: predicted {predicted:.4}, fitted on emitted grid {fitted:.4}");
    } else if cfg.links.is_empty() {
        println!("no links: composed coefficient equals the base");
    }
    Ok(())
}
