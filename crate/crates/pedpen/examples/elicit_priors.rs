//! Build prior distributions three ways: defaults, a relative-risk ratio,
//! and a published study's age distribution.
//!
//! ```bash
//! cargo run -p pedpen --example elicit_priors
//! ```

use pedpen::curve::{BaselineTable, Sex};
use pedpen::priors::{
    asymptote_prior_from_ratio, default_priors, priors_from_risk_data, AgeRows, DistributionData,
};

fn main() -> anyhow::Result<()> {
    let max_age = 94;
    let baseline = BaselineTable::bundled_default();

    // 1. Defaults, for exploratory analysis.
    let defaults = default_priors(max_age);
    println!("default priors:");
    println!(
        "  first quartile: Beta({}, {}) on [0, {max_age}], mean {:.1}",
        defaults.base.first_quartile.a,
        defaults.base.first_quartile.b,
        defaults.base.first_quartile.mean()
    );
    println!(
        "  median:         Beta({}, {}) on [0, {max_age}], mean {:.1}",
        defaults.base.median.a,
        defaults.base.median.b,
        defaults.base.median.mean()
    );
    println!(
        "  asymptote:      Beta({}, {}) on [0, 1] (flat)",
        defaults.base.asymptote.a, defaults.base.asymptote.b
    );
    println!(
        "  threshold:      Uniform({}, {})",
        defaults.base.threshold.lo, defaults.base.threshold.hi
    );

    // 2. A published overall relative risk informs the asymptote mean.
    let rr = asymptote_prior_from_ratio(8.0, &baseline, Sex::Female, 10.0)?;
    println!(
        "\nrelative risk 8.0 x female lifetime baseline {:.4}:",
        baseline.lifetime(Sex::Female)
    );
    println!(
        "  asymptote prior Beta({:.3}, {:.3}), mean {:.4}",
        rr.a,
        rr.b,
        rr.mean()
    );

    // 3. Age distribution of diagnoses plus a total sample size.
    let study = DistributionData {
        age: AgeRows {
            min: 22.0,
            first_quartile: 38.0,
            median: 47.0,
            max: 83.0,
        },
        at_risk: None,
        sample_size: Some(220.0),
        ratio: None,
    };
    let elicited = priors_from_risk_data(&study, max_age)?;
    println!("\nfrom a 220-carrier study (diagnosis ages 22/38/47/83):");
    println!(
        "  first quartile: Beta({:.3}, {:.3}), mean age {:.1}",
        elicited.first_quartile.a,
        elicited.first_quartile.b,
        elicited.first_quartile.mean()
    );
    println!(
        "  median:         Beta({:.3}, {:.3}), mean age {:.1}",
        elicited.median.a,
        elicited.median.b,
        elicited.median.mean()
    );
    println!(
        "  asymptote:      Beta({:.3}, {:.3}), mean {:.3}",
        elicited.asymptote.a,
        elicited.asymptote.b,
        elicited.asymptote.mean()
    );
    println!(
        "  threshold:      Uniform({}, {})",
        elicited.threshold.lo, elicited.threshold.hi
    );
    Ok(())
}
