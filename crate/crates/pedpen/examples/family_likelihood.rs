//! Compute an exact pedigree likelihood by peeling, cross-check it against
//! brute-force enumeration, and read off per-person carrier posteriors.
//!
//! ```bash
//! cargo run -p pedpen --example family_likelihood
//! ```

use pedpen::curve::{BaselineTable, CurveTable, QuantileParams};
use pedpen::likelihood::{
    brute_force_loglik, carrier_posterior, FactorContext, GenotypeModel, NoncarrierModel,
    PreparedPedigree,
};
use pedpen::pedigree::parse_pedigrees_csv;

// Proband (id 4) is an affected, genotyped carrier; one affected aunt; the
// rest unaffected at known ages.
const FAMILY: &str = "\
PedigreeID,ID,Sex,MotherID,FatherID,isProband,CurAge,isAff,Age,Geno
1,1,0,NA,NA,0,80,0,NA,NA
1,2,1,NA,NA,0,82,0,NA,NA
1,3,0,1,2,0,58,1,49,NA
1,4,0,1,2,1,50,1,42,1
1,5,1,1,2,0,55,0,NA,NA
1,6,1,NA,NA,0,52,0,NA,NA
1,7,0,4,6,0,28,0,NA,NA
";

fn main() -> anyhow::Result<()> {
    let pedigrees = parse_pedigrees_csv(FAMILY.as_bytes())?;
    let ped = &pedigrees[0];

    // Carrier risk curve and population baseline.
    let carrier = QuantileParams {
        asymptote: 0.55,
        threshold: 18.0,
        first_quartile: 41.0,
        median: 51.0,
    }
    .to_weibull()?;
    let table = CurveTable::new(&carrier, 94);
    let baseline = BaselineTable::bundled_default();
    let ctx = FactorContext {
        carrier_female: &table,
        carrier_male: &table,
        noncarrier: NoncarrierModel::Baseline(&baseline),
        max_age: 94,
        remove_proband: false,
    };
    let gm = GenotypeModel::from_prevalence(0.0001)?;
    let factors = ctx.factors_for(ped);

    println!("person factors (carrier, noncarrier):");
    for (m, f) in ped.members.iter().zip(&factors.factors) {
        println!("  member {:>2}: ({:.6}, {:.6})", m.id, f.0, f.1);
    }

    let prepared = PreparedPedigree::new(ped)?;
    let peel = prepared.loglik(&gm, &factors);
    let brute = brute_force_loglik(ped, &factors, &gm)?;
    println!("\nlog-likelihood: peeling {peel:.10}");
    println!("                enumeration {brute:.10}");
    println!("                difference {:.2e}", (peel - brute).abs());

    println!("\nposterior carrier probabilities given the whole family:");
    for m in &ped.members {
        let p = carrier_posterior(ped, &factors, &gm, m.id)?;
        println!("  member {:>2}: {p:.4}", m.id);
    }
    Ok(())
}
