//! Posterior summarization and output serialization.
//!
//! Burn-in and thinning are applied here, never in the sampler, so the full
//! trace stays available for diagnostics. Curve summaries map every
//! retained quantile-space draw through the Weibull parameterization and
//! report pointwise means with equal-tailed empirical intervals
//! (nearest-rank percentiles).

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::curve::Sex;
use crate::error::{Error, Result};
use crate::sampler::{ChainConfig, PosteriorSamples};

/// Retained-sample indices for a chain of length `n`: drop the first
/// `floor(burn_in * n)`, then keep every `thinning`-th of the remainder
/// starting at the first.
pub fn apply_burnin_thinning(n: usize, burn_in: f64, thinning: usize) -> Vec<usize> {
    let drop = (burn_in * n as f64).floor() as usize;
    (drop..n).step_by(thinning.max(1)).collect()
}

/// One retained posterior draw with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct RetainedSample {
    pub chain: usize,
    /// 1-based iteration within the chain.
    pub iteration: usize,
    pub log_posterior: f64,
    pub coords: Vec<f64>,
}

/// Flatten a run into retained samples, chain by chain.
pub fn retained_samples(samples: &PosteriorSamples) -> Vec<RetainedSample> {
    let mut out = Vec::new();
    for chain in &samples.chains {
        let keep = apply_burnin_thinning(
            chain.samples.len(),
            samples.cfg.burn_in,
            samples.cfg.thinning_factor,
        );
        for idx in keep {
            out.push(RetainedSample {
                chain: chain.chain_index,
                iteration: idx + 1,
                log_posterior: chain.log_posterior[idx],
                coords: chain.samples[idx].clone(),
            });
        }
    }
    out
}

/// Nearest-rank percentile of sorted values.
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Pointwise posterior band for one sex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveBand {
    pub ages: Vec<u32>,
    pub cum_mean: Vec<f64>,
    pub cum_lo: Vec<f64>,
    pub cum_hi: Vec<f64>,
    pub annual_mean: Vec<f64>,
    pub annual_lo: Vec<f64>,
    pub annual_hi: Vec<f64>,
}

/// Posterior penetrance-curve summary for both sexes (identical in pooled
/// mode).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub ci_level: f64,
    pub female: CurveBand,
    pub male: CurveBand,
}

fn band_for_sex(
    rows: &[RetainedSample],
    sex_specific: bool,
    sex: Sex,
    max_age: u32,
    ci_level: f64,
) -> Result<CurveBand> {
    let n = rows.len();
    let ages: Vec<u32> = (1..=max_age).collect();
    let mut cum = vec![Vec::with_capacity(n); max_age as usize];
    let mut annual = vec![Vec::with_capacity(n); max_age as usize];
    for row in rows {
        let v = crate::sampler::ProposalVector {
            coords: row.coords.clone(),
            sex_specific,
        };
        let q = v.quantile_params(sex);
        let curve = q.to_weibull().map_err(|_| {
            Error::InvalidInput(format!(
                "retained sample has degenerate quantile spacing: {:?}",
                row.coords
            ))
        })?;
        let mut prev = 0.0;
        for &age in &ages {
            let c = curve.cdf(age as f64);
            cum[age as usize - 1].push(c);
            annual[age as usize - 1].push((c - prev).max(0.0));
            prev = c;
        }
    }
    let lo_p = (1.0 - ci_level) / 2.0;
    let hi_p = 1.0 - lo_p;
    let mut band = CurveBand {
        ages,
        cum_mean: Vec::new(),
        cum_lo: Vec::new(),
        cum_hi: Vec::new(),
        annual_mean: Vec::new(),
        annual_lo: Vec::new(),
        annual_hi: Vec::new(),
    };
    for (c, a) in cum.iter_mut().zip(annual.iter_mut()) {
        band.cum_mean.push(c.iter().sum::<f64>() / n as f64);
        band.annual_mean.push(a.iter().sum::<f64>() / n as f64);
        c.sort_by(|x, y| x.partial_cmp(y).unwrap());
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        band.cum_lo.push(nearest_rank(c, lo_p));
        band.cum_hi.push(nearest_rank(c, hi_p));
        band.annual_lo.push(nearest_rank(a, lo_p));
        band.annual_hi.push(nearest_rank(a, hi_p));
    }
    Ok(band)
}

/// Summarize retained samples into per-age cumulative and annual risk
/// bands.
pub fn summarize_curves_from(
    rows: &[RetainedSample],
    sex_specific: bool,
    max_age: u32,
    ci_level: f64,
) -> Result<CurveSummary> {
    if rows.is_empty() {
        return Err(Error::InvalidInput(
            "no retained samples to summarize".into(),
        ));
    }
    if !(0.0 < ci_level && ci_level < 1.0) {
        return Err(Error::InvalidInput("ci_level must lie in (0, 1)".into()));
    }
    Ok(CurveSummary {
        ci_level,
        female: band_for_sex(rows, sex_specific, Sex::Female, max_age, ci_level)?,
        male: band_for_sex(rows, sex_specific, Sex::Male, max_age, ci_level)?,
    })
}

pub fn summarize_curves(samples: &PosteriorSamples, ci_level: f64) -> Result<CurveSummary> {
    let rows = retained_samples(samples);
    summarize_curves_from(
        &rows,
        samples.cfg.sex_specific,
        samples.cfg.max_age,
        ci_level,
    )
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// Potential scale reduction across chains for one coordinate, in the
/// large-n form `sqrt((W + B/n) / W)`: exactly 1 when the chains agree
/// perfectly.
pub fn potential_scale_reduction(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    if m < 2 || chains.iter().any(|c| c.len() < 2) {
        return f64::NAN;
    }
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / m as f64;
    // B/n: variance of the chain means.
    let b_over_n = means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, &mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m as f64;
    if w <= 0.0 {
        return if b_over_n <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    ((w + b_over_n) / w).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainDiagnostics {
    pub chain: usize,
    pub acceptance_rate: f64,
    pub bounds_rejections: usize,
    pub imputation_events: usize,
    /// Full imputation log, included on request (one entry per re-drawn
    /// age).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imputation_log: Option<Vec<crate::imputation::ImputationEvent>>,
    pub coordinate_mean: Vec<f64>,
    pub coordinate_sd: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub coordinate_names: Vec<String>,
    pub n_chains: usize,
    pub retained_per_chain: usize,
    pub chains: Vec<ChainDiagnostics>,
    /// Per-coordinate potential scale reduction; absent for single chains.
    pub potential_scale_reduction: Option<Vec<f64>>,
}

/// Per-chain acceptance and trace summaries, plus the multi-chain scale
/// reduction when at least two chains ran. Computed on retained samples.
pub fn diagnostics(samples: &PosteriorSamples) -> DiagnosticsReport {
    diagnostics_with_options(samples, false)
}

/// As `diagnostics`, optionally embedding each chain's full imputation log.
pub fn diagnostics_with_options(
    samples: &PosteriorSamples,
    include_imputation_log: bool,
) -> DiagnosticsReport {
    let d = samples.coordinate_names.len();
    let mut per_chain = Vec::new();
    let mut retained_traces: Vec<Vec<Vec<f64>>> = Vec::new(); // [chain][coord][draw]
    for chain in &samples.chains {
        let keep = apply_burnin_thinning(
            chain.samples.len(),
            samples.cfg.burn_in,
            samples.cfg.thinning_factor,
        );
        let mut coords: Vec<Vec<f64>> = vec![Vec::with_capacity(keep.len()); d];
        for &idx in &keep {
            for (k, v) in chain.samples[idx].iter().enumerate() {
                coords[k].push(*v);
            }
        }
        let mean: Vec<f64> = coords
            .iter()
            .map(|c| c.iter().sum::<f64>() / c.len().max(1) as f64)
            .collect();
        let sd: Vec<f64> = coords
            .iter()
            .zip(&mean)
            .map(|(c, &mu)| {
                if c.len() < 2 {
                    0.0
                } else {
                    (c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (c.len() - 1) as f64).sqrt()
                }
            })
            .collect();
        per_chain.push(ChainDiagnostics {
            chain: chain.chain_index,
            acceptance_rate: chain.acceptance_rate(),
            bounds_rejections: chain.bounds_rejections,
            imputation_events: chain.imputation_log.len(),
            imputation_log: include_imputation_log.then(|| chain.imputation_log.clone()),
            coordinate_mean: mean,
            coordinate_sd: sd,
            warnings: chain.warnings.clone(),
        });
        retained_traces.push(coords);
    }
    let psrf = if samples.chains.len() >= 2 {
        Some(
            (0..d)
                .map(|k| {
                    let per: Vec<Vec<f64>> = retained_traces.iter().map(|c| c[k].clone()).collect();
                    potential_scale_reduction(&per)
                })
                .collect(),
        )
    } else {
        None
    };
    DiagnosticsReport {
        coordinate_names: samples.coordinate_names.clone(),
        n_chains: samples.chains.len(),
        retained_per_chain: retained_traces.first().map(|c| c[0].len()).unwrap_or(0),
        chains: per_chain,
        potential_scale_reduction: psrf,
    }
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

fn write_samples_csv<W: Write>(writer: W, names: &[String], rows: &[RetainedSample]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = names.to_vec();
    header.extend(["chain".into(), "iteration".into(), "log_posterior".into()]);
    wtr.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = row.coords.iter().map(|v| format!("{v}")).collect();
        rec.push(row.chain.to_string());
        rec.push(row.iteration.to_string());
        rec.push(format!("{}", row.log_posterior));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reload a samples CSV written by `write_outputs`. Floats round-trip
/// bit-exactly through the shortest-representation formatting.
pub fn read_samples_csv<R: std::io::Read>(reader: R) -> Result<(Vec<String>, Vec<RetainedSample>)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    if headers.len() < 4 {
        return Err(Error::InvalidInput("samples csv is missing columns".into()));
    }
    let d = headers.len() - 3;
    let names = headers[..d].to_vec();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let mut coords = Vec::with_capacity(d);
        for k in 0..d {
            coords.push(
                record[k]
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad float in samples csv: {e}")))?,
            );
        }
        rows.push(RetainedSample {
            chain: record[d]
                .parse()
                .map_err(|e| Error::InvalidInput(format!("bad chain: {e}")))?,
            iteration: record[d + 1]
                .parse()
                .map_err(|e| Error::InvalidInput(format!("bad iteration: {e}")))?,
            log_posterior: record[d + 2]
                .parse()
                .map_err(|e| Error::InvalidInput(format!("bad log posterior: {e}")))?,
            coords,
        });
    }
    Ok((names, rows))
}

fn write_curve_csv<W: Write>(writer: W, band: &CurveBand) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "age",
        "cum_mean",
        "cum_lo",
        "cum_hi",
        "annual_mean",
        "annual_lo",
        "annual_hi",
    ])?;
    for (i, &age) in band.ages.iter().enumerate() {
        wtr.write_record([
            age.to_string(),
            format!("{}", band.cum_mean[i]),
            format!("{}", band.cum_lo[i]),
            format!("{}", band.cum_hi[i]),
            format!("{}", band.annual_mean[i]),
            format!("{}", band.annual_lo[i]),
            format!("{}", band.annual_hi[i]),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Configuration echo written next to the results.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho<'a> {
    pub options: &'a ChainConfig,
    pub priors: &'a crate::priors::PriorSpec,
}

/// Write `samples.csv`, `curves_female.csv`, `curves_male.csv`,
/// `diagnostics.json` and `config_echo.json` into `out_dir`. The full
/// imputation log lands in `diagnostics.json` when `debug_imputation` is
/// set.
pub fn write_outputs(
    samples: &PosteriorSamples,
    priors: &crate::priors::PriorSpec,
    out_dir: &Path,
    ci_level: f64,
    debug_imputation: bool,
) -> Result<CurveSummary> {
    std::fs::create_dir_all(out_dir)?;
    let rows = retained_samples(samples);
    write_samples_csv(
        std::fs::File::create(out_dir.join("samples.csv"))?,
        &samples.coordinate_names,
        &rows,
    )?;
    let summary = summarize_curves_from(
        &rows,
        samples.cfg.sex_specific,
        samples.cfg.max_age,
        ci_level,
    )?;
    write_curve_csv(
        std::fs::File::create(out_dir.join("curves_female.csv"))?,
        &summary.female,
    )?;
    write_curve_csv(
        std::fs::File::create(out_dir.join("curves_male.csv"))?,
        &summary.male,
    )?;
    let report = diagnostics_with_options(samples, debug_imputation);
    serde_json::to_writer_pretty(
        std::fs::File::create(out_dir.join("diagnostics.json"))?,
        &report,
    )?;
    let echo = ConfigEcho {
        options: &samples.cfg,
        priors,
    };
    let mut f = std::fs::File::create(out_dir.join("config_echo.json"))?;
    f.write_all(config_echo_json(&echo)?.as_bytes())?;
    Ok(summary)
}

/// Stable pretty JSON for the configuration echo.
pub fn config_echo_json(echo: &ConfigEcho) -> Result<String> {
    let mut s = serde_json::to_string_pretty(echo)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{ChainResult, ProposalVector};
    use approx::assert_abs_diff_eq;

    fn fake_run(traces: Vec<Vec<Vec<f64>>>, cfg: ChainConfig) -> PosteriorSamples {
        let chains = traces
            .into_iter()
            .enumerate()
            .map(|(i, samples)| {
                let n = samples.len();
                ChainResult {
                    chain_index: i,
                    initial_state: samples[0].clone(),
                    log_posterior: vec![-1.0; n],
                    samples,
                    accepted: n / 2,
                    bounds_rejections: 3,
                    cov_snapshots: vec![],
                    imputation_log: vec![],
                    warnings: vec![],
                }
            })
            .collect();
        PosteriorSamples {
            coordinate_names: ProposalVector::coordinate_names(cfg.sex_specific),
            cfg,
            chains,
        }
    }

    #[test]
    fn burnin_thinning_enumerated_rule() {
        let idx = apply_burnin_thinning(10, 0.25, 3);
        assert_eq!(idx, vec![2, 5, 8]);
        assert_eq!(apply_burnin_thinning(20_000, 0.1, 1).len(), 18_000);
        let all = apply_burnin_thinning(7, 0.0, 1);
        assert_eq!(all, vec![0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn single_sample_band_is_degenerate() {
        let cfg = ChainConfig {
            sex_specific: false,
            max_age: 94,
            ..ChainConfig::default()
        };
        let run = fake_run(vec![vec![vec![0.5, 10.0, 50.0, 40.0]]], cfg);
        let s = summarize_curves(&run, 0.95).unwrap();
        for i in 0..94 {
            assert_eq!(s.female.cum_mean[i], s.female.cum_lo[i]);
            assert_eq!(s.female.cum_mean[i], s.female.cum_hi[i]);
        }
        // Pooled mode: both sexes share the curve.
        assert_eq!(s.female, s.male);
    }

    #[test]
    fn two_sample_mean_is_pointwise_average() {
        let cfg = ChainConfig {
            sex_specific: false,
            max_age: 94,
            ..ChainConfig::default()
        };
        let a = vec![0.5, 10.0, 50.0, 40.0];
        let b = vec![0.7, 12.0, 55.0, 42.0];
        let run = fake_run(vec![vec![a.clone(), b.clone()]], cfg);
        let s = summarize_curves(&run, 0.95).unwrap();
        let curve_a = ProposalVector {
            coords: a,
            sex_specific: false,
        }
        .quantile_params(Sex::Female)
        .to_weibull()
        .unwrap();
        let curve_b = ProposalVector {
            coords: b,
            sex_specific: false,
        }
        .quantile_params(Sex::Female)
        .to_weibull()
        .unwrap();
        for age in [30u32, 50, 70] {
            let want = 0.5 * (curve_a.cdf(age as f64) + curve_b.cdf(age as f64));
            assert_abs_diff_eq!(s.female.cum_mean[age as usize - 1], want, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_trace_band_width_is_zero() {
        let cfg = ChainConfig {
            sex_specific: false,
            max_age: 94,
            ..ChainConfig::default()
        };
        let run = fake_run(vec![vec![vec![0.5, 10.0, 50.0, 40.0]; 1000]], cfg);
        let s = summarize_curves(&run, 0.95).unwrap();
        for i in 0..94 {
            assert_eq!(s.female.cum_lo[i], s.female.cum_hi[i]);
            assert_eq!(s.female.annual_lo[i], s.female.annual_hi[i]);
        }
    }

    #[test]
    fn band_orders_lower_mean_upper() {
        let cfg = ChainConfig {
            sex_specific: false,
            max_age: 94,
            ..ChainConfig::default()
        };
        let traces: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                vec![
                    0.3 + 0.01 * i as f64 / 5.0,
                    10.0,
                    50.0 + (i % 7) as f64,
                    40.0,
                ]
            })
            .collect();
        let run = fake_run(vec![traces], cfg);
        let s = summarize_curves(&run, 0.95).unwrap();
        for i in 0..94 {
            assert!(s.female.cum_lo[i] <= s.female.cum_mean[i] + 1e-12);
            assert!(s.female.cum_mean[i] <= s.female.cum_hi[i] + 1e-12);
            assert!(s.female.cum_mean[i] >= s.female.cum_mean[i.saturating_sub(1)] - 1e-12);
        }
    }

    #[test]
    fn identical_chains_have_unit_scale_reduction() {
        let trace: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = potential_scale_reduction(&[trace.clone(), trace]);
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn scale_reduction_matches_hand_computed_value() {
        // Two chains with known means/variances.
        let c1 = vec![1.0, 2.0, 3.0, 4.0]; // mean 2.5, var 5/3
        let c2 = vec![2.0, 4.0, 6.0, 8.0]; // mean 5.0, var 20/3
        let w = (5.0 / 3.0 + 20.0 / 3.0) / 2.0;
        let b_over_n = ((2.5f64 - 3.75).powi(2) + (5.0f64 - 3.75).powi(2)) / 1.0;
        let want = ((w + b_over_n) / w).sqrt();
        let got = potential_scale_reduction(&[c1, c2]);
        assert_abs_diff_eq!(got, want, epsilon = 1e-9);
    }

    #[test]
    fn diagnostics_reports_acceptance_and_psrf() {
        let cfg = ChainConfig {
            sex_specific: false,
            max_age: 94,
            ..ChainConfig::default()
        };
        let t1 = vec![vec![0.5, 10.0, 50.0, 40.0]; 100];
        let t2 = vec![vec![0.5, 10.0, 50.0, 40.0]; 100];
        let mut run = fake_run(vec![t1, t2], cfg);
        let d = diagnostics(&run);
        assert_eq!(d.n_chains, 2);
        assert_abs_diff_eq!(d.chains[0].acceptance_rate, 0.5, epsilon = 1e-12);
        assert!(d.potential_scale_reduction.is_some());
        // A chain that never accepted anything reports rate zero.
        run.chains[0].accepted = 0;
        assert_abs_diff_eq!(
            diagnostics(&run).chains[0].acceptance_rate,
            0.0,
            epsilon = 0.0
        );
    }

    #[test]
    fn summaries_invariant_to_chain_order() {
        let cfg = ChainConfig {
            sex_specific: false,
            max_age: 94,
            ..ChainConfig::default()
        };
        let t1: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![0.4 + (i as f64) * 0.002, 10.0, 50.0, 40.0])
            .collect();
        let t2: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![0.6 - (i as f64) * 0.002, 12.0, 52.0, 41.0])
            .collect();
        let a =
            summarize_curves(&fake_run(vec![t1.clone(), t2.clone()], cfg.clone()), 0.95).unwrap();
        let b = summarize_curves(&fake_run(vec![t2, t1], cfg), 0.95).unwrap();
        // Percentiles are order statistics (exact); means agree up to
        // floating-point summation order.
        assert_eq!(a.female.cum_lo, b.female.cum_lo);
        assert_eq!(a.female.cum_hi, b.female.cum_hi);
        assert_eq!(a.female.annual_lo, b.female.annual_lo);
        assert_eq!(a.female.annual_hi, b.female.annual_hi);
        for i in 0..94 {
            assert_abs_diff_eq!(a.female.cum_mean[i], b.female.cum_mean[i], epsilon = 1e-13);
            assert_abs_diff_eq!(
                a.female.annual_mean[i],
                b.female.annual_mean[i],
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn samples_csv_roundtrip_is_bit_exact() {
        let cfg = ChainConfig {
            sex_specific: false,
            max_age: 94,
            ..ChainConfig::default()
        };
        let traces: Vec<Vec<f64>> = (0..25)
            .map(|i| {
                vec![
                    0.3 + (i as f64) / 97.0,
                    10.0 + (i as f64) / 13.0,
                    50.0 + (i as f64) / 7.0,
                    40.0 + (i as f64) / 11.0,
                ]
            })
            .collect();
        let run = fake_run(vec![traces], cfg);
        let rows = retained_samples(&run);
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &run.coordinate_names, &rows).unwrap();
        let (names, reread) = read_samples_csv(buf.as_slice()).unwrap();
        assert_eq!(names, run.coordinate_names);
        assert_eq!(rows, reread);
        let s1 = summarize_curves_from(&rows, false, 94, 0.95).unwrap();
        let s2 = summarize_curves_from(&reread, false, 94, 0.95).unwrap();
        assert_eq!(s1, s2);
    }
}
