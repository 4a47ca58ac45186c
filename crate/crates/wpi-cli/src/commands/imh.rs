//! `imh`: independence-sampler coefficient table, rate curve, and optional decay overlay.

use std::path::Path;

use anyhow::bail;
use wpi::kernels::{estimate_decay, imh_beta, imh_rate, DecayOptions, ImhSpec, StartDist};

use crate::config::{self, GridConfig, ImhFamilyConfig, ImhRun};
use crate::output::{e, Sink};

pub fn run(cfg_path: &Path, sink: &Sink, seed: Option<u64>) -> anyhow::Result<()> {
    let mut cfg: ImhRun = config::load(cfg_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let s_grid = GridConfig::resolve(&mut cfg.s_grid, 1.0, 1e4, 40);
    let n_grid = GridConfig::resolve(&mut cfg.n_grid, 1.0, 1e4, 60);

    let (spec, default_threshold, tail_prob): (ImhSpec, f64, Box<dyn Fn(f64) -> f64>) =
        match &cfg.imh {
            ImhFamilyConfig::ExpExp { a1, a2 } => {
                let a1c = *a1;
                (ImhSpec::exp_exp(*a1, *a2)?, 1.0, Box::new(move |t| (-a1c * t).exp()))
            }
            ImhFamilyConfig::PolyPoly { b1, b2 } => {
                let b1c = *b1;
                (ImhSpec::poly_poly(*b1, *b2)?, 2.0, Box::new(move |t| t.powf(-b1c)))
            }
            ImhFamilyConfig::Custom {} => bail!(
                "custom families carry density and sampler closures, which have no text form; \
                 use the library interface for them"
            ),
        };

    let mut beta_rows = Vec::with_capacity(s_grid.points);
    for s in s_grid.values() {
        let est = imh_beta(&spec, s)?;
        beta_rows.push(vec![e(s), e(est.value), e(est.se)]);
    }
    sink.csv("imh_beta.csv", "s,beta,se", &beta_rows)?;

    let rb = imh_rate(&spec)?;
    let mut rate_rows = Vec::with_capacity(n_grid.points);
    for n in n_grid.values() {
        rate_rows.push(vec![e(n), e(rb.f_inverse(n)?)]);
    }
    sink.csv("imh_rate.csv", "n,f_inv", &rate_rows)?;

    if let Some(decay) = &cfg.decay {
        let threshold = decay.threshold.unwrap_or(default_threshold);
        let p_tail = tail_prob(threshold);
        if !(p_tail > 0.0 && p_tail < 1.0) {
            bail!("threshold {threshold} leaves a degenerate indicator (tail mass {p_tail})");
        }
        // Centered indicator: oscillation 1, so the bound column is F^-1(n) itself.
        let f = move |x: &f64| f64::from(*x > threshold) - p_tail;
        let start = |rng: &mut rand_chacha::ChaCha12Rng| {
            spec.draw_target(rng).expect("closed families sample their target")
        };
        let opts = DecayOptions {
            n_grid: decay.n_grid.clone(),
            replicas: decay.replicas,
            pairs_per_replica: decay.pairs_per_replica,
            seed: cfg.seed,
        };
        let est = estimate_decay(&spec, &f, StartDist::Stationary(&start), &opts)?
            .with_bound(&rb, 1.0)?;
        sink.write("imh_decay.csv", &est.csv())?;
        let worst = est.worst_excess_se().expect("bound column attached");
        println!("decay overlay: worst excess over bound = {worst:.2} standard errors");
    }
    sink.resolved("imh_resolved.toml", &cfg)?;
    Ok(())
}
