//! Estimation with age imputation on a study where a fifth of the ages are
//! missing.
//!
//! ```bash
//! cargo run --release -p pedpen --example impute_missing_ages
//! ```

use pedpen::curve::BaselineTable;
use pedpen::imputation::build_plan;
use pedpen::priors::default_priors;
use pedpen::sampler::{run_chains, ChainConfig};
use pedpen::simulate::{simulate_study, SimConfig};

fn main() -> anyhow::Result<()> {
    let baseline = BaselineTable::bundled_default();
    let mut sim = SimConfig::crc_like(40, 19);
    sim.missing_age_dx_rate = 0.2;
    sim.missing_cur_age_rate = 0.2;
    let (pedigrees, _) = simulate_study(&sim, &baseline)?;

    let plan = build_plan(&pedigrees)?;
    println!(
        "imputation targets: {} affected without diagnosis age, {} unaffected without censoring age",
        plan.affected_targets.len(),
        plan.unaffected_targets.len()
    );

    let cfg = ChainConfig {
        n_iter_per_chain: 2000,
        burn_in: 0.25,
        age_imputation: true,
        imp_interval: 10,
        seed: 8,
        ..ChainConfig::default()
    };
    let priors = default_priors(cfg.max_age);
    let samples = run_chains(&cfg, &pedigrees, &priors, &baseline, None)?;
    let chain = &samples.chains[0];
    println!(
        "chain finished: acceptance {:.3}, {} imputation events",
        chain.acceptance_rate(),
        chain.imputation_log.len()
    );

    println!("\nfirst few imputation events:");
    for ev in chain.imputation_log.iter().take(8) {
        println!(
            "  iteration {:>4}: pedigree {} member {:>2} {:?} -> {}",
            ev.iteration, ev.pedigree_id, ev.member_id, ev.field, ev.value
        );
    }

    // Re-draws of the same member across events show the propagated
    // uncertainty.
    if let Some(first) = chain.imputation_log.first() {
        let values: Vec<u32> = chain
            .imputation_log
            .iter()
            .filter(|e| e.pedigree_id == first.pedigree_id && e.member_id == first.member_id)
            .map(|e| e.value)
            .collect();
        println!(
            "\nmember {} of pedigree {} was re-imputed {} times; first ten draws: {:?}",
            first.member_id,
            first.pedigree_id,
            values.len(),
            &values[..values.len().min(10)]
        );
    }
    Ok(())
}
