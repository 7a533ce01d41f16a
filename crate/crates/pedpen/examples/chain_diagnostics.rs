//! Multi-chain runs and convergence diagnostics.
//!
//! ```bash
//! cargo run --release -p pedpen --example chain_diagnostics
//! ```

use pedpen::curve::BaselineTable;
use pedpen::priors::default_priors;
use pedpen::report::diagnostics;
use pedpen::sampler::{run_chains, ChainConfig};
use pedpen::simulate::{simulate_study, SimConfig};

fn main() -> anyhow::Result<()> {
    let baseline = BaselineTable::bundled_default();
    let (pedigrees, _) = simulate_study(&SimConfig::crc_like(40, 3), &baseline)?;

    let cfg = ChainConfig {
        n_chains: 4,
        ncores: 4,
        n_iter_per_chain: 4000,
        burn_in: 0.25,
        seed: 99,
        ..ChainConfig::default()
    };
    let priors = default_priors(cfg.max_age);
    let samples = run_chains(&cfg, &pedigrees, &priors, &baseline, None)?;
    let report = diagnostics(&samples);

    println!(
        "{} chains x {} retained samples",
        report.n_chains, report.retained_per_chain
    );
    for c in &report.chains {
        println!(
            "chain {}: acceptance {:.3}, bounds rejections {}",
            c.chain, c.acceptance_rate, c.bounds_rejections
        );
    }

    println!("\n{:<24} {:>10} {:>8}", "coordinate", "pooled mean", "psrf");
    let psrf = report
        .potential_scale_reduction
        .as_ref()
        .expect("multi-chain run");
    for (k, name) in report.coordinate_names.iter().enumerate() {
        let pooled: f64 = report
            .chains
            .iter()
            .map(|c| c.coordinate_mean[k])
            .sum::<f64>()
            / report.n_chains as f64;
        println!("{name:<24} {pooled:>10.3} {:>8.4}", psrf[k]);
    }
    println!("\npotential scale reduction near 1 indicates the chains agree");
    Ok(())
}
