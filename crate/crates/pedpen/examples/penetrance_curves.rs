//! Work with penetrance curves in both parameterizations.
//!
//! ```bash
//! cargo run -p pedpen --example penetrance_curves
//! ```

use pedpen::curve::{BaselineTable, QuantileParams, Sex};

fn main() -> anyhow::Result<()> {
    // A curve specified the way the sampler sees it: lifetime risk 60%,
    // onsets start at 18, a quarter of eventual cases by 40, half by 50.
    let q = QuantileParams {
        asymptote: 0.6,
        threshold: 18.0,
        first_quartile: 40.0,
        median: 50.0,
    };
    let curve = q.to_weibull()?;
    println!(
        "quantiles (asymptote {}, threshold {}, Q25 {}, Q50 {})",
        q.asymptote, q.threshold, q.first_quartile, q.median
    );
    println!(
        "natural parameters: scale {:.3}, shape {:.3}, asymptote {}, threshold {}",
        curve.alpha, curve.beta, curve.gamma, curve.delta
    );

    println!("\n age  cumulative  annual     survival");
    for age in (10..=90).step_by(10) {
        println!(
            "  {age:2}   {:.4}      {:.5}    {:.4}",
            curve.cdf(age as f64),
            curve.annual_probability(age),
            curve.survival(age as f64)
        );
    }

    // Round trip back to quantile space.
    let back = curve.to_quantiles();
    println!(
        "\nround trip: Q25 {:.3}, Q50 {:.3} (cdf there: {:.4}, {:.4})",
        back.first_quartile,
        back.median,
        curve.cdf(back.first_quartile),
        curve.cdf(back.median)
    );

    // The bundled population baseline used for noncarriers.
    let baseline = BaselineTable::bundled_default();
    println!("\nbundled baseline (noncarrier) risk:");
    println!(
        "  lifetime: female {:.4}, male {:.4}",
        baseline.lifetime(Sex::Female),
        baseline.lifetime(Sex::Male)
    );
    println!(
        "  median onset age: female {}, male {}",
        baseline.median_onset(Sex::Female),
        baseline.median_onset(Sex::Male)
    );
    Ok(())
}
