//! End-to-end estimation on a simulated study: run the adaptive Metropolis
//! chain, summarize the posterior, and compare against the known truth.
//!
//! ```bash
//! cargo run --release -p pedpen --example estimate_posterior
//! ```

use pedpen::curve::BaselineTable;
use pedpen::priors::default_priors;
use pedpen::report::{retained_samples, summarize_curves};
use pedpen::sampler::{run_chains, ChainConfig};
use pedpen::simulate::{simulate_study, SimConfig};

fn main() -> anyhow::Result<()> {
    let baseline = BaselineTable::bundled_default();
    let (pedigrees, truth) = simulate_study(&SimConfig::crc_like(60, 11), &baseline)?;
    println!(
        "study: {} families, {} members",
        pedigrees.len(),
        pedigrees.iter().map(|p| p.members.len()).sum::<usize>()
    );

    let cfg = ChainConfig {
        n_iter_per_chain: 6000,
        burn_in: 0.2,
        seed: 4,
        ..ChainConfig::default()
    };
    let priors = default_priors(cfg.max_age);
    let samples = run_chains(&cfg, &pedigrees, &priors, &baseline, None)?;
    let chain = &samples.chains[0];
    println!(
        "chain finished: acceptance {:.3}, bounds rejections {}",
        chain.acceptance_rate(),
        chain.bounds_rejections
    );

    // Posterior means per coordinate against the simulation truth.
    let rows = retained_samples(&samples);
    println!("\n{:<24} {:>10} {:>10}", "coordinate", "post.mean", "truth");
    for (k, name) in samples.coordinate_names.iter().enumerate() {
        let mean = rows.iter().map(|r| r.coords[k]).sum::<f64>() / rows.len() as f64;
        let (param, sex) = name.rsplit_once('_').unwrap();
        let q = if sex == "male" {
            &truth.male.quantiles
        } else {
            &truth.female.quantiles
        };
        let t = match param {
            "asymptote" => q.asymptote,
            "threshold" => q.threshold,
            "median" => q.median,
            _ => q.first_quartile,
        };
        println!("{name:<24} {mean:>10.3} {t:>10.3}");
    }

    let summary = summarize_curves(&samples, 0.95)?;
    println!("\nposterior cumulative risk (female), selected ages:");
    println!(" age   mean    2.5%   97.5%   truth");
    for age in [40u32, 50, 60, 70, 80] {
        let i = age as usize - 1;
        println!(
            "  {age}   {:.3}   {:.3}   {:.3}   {:.3}",
            summary.female.cum_mean[i],
            summary.female.cum_lo[i],
            summary.female.cum_hi[i],
            truth.female.weibull.cdf(age as f64)
        );
    }
    Ok(())
}
