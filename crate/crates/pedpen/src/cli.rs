//! Command-line interface: `estimate`, `simulate`, `validate`, `priors`.

use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::curve::{BaselineKind, BaselineTable, WeibullPenetrance};
use crate::pedigree::{self, Pedigree};
use crate::priors::{self, PriorSpec, DEFAULT_RATIO_CONCENTRATION};
use crate::report;
use crate::sampler::{run_chains, ChainConfig};
use crate::simulate::{simulate_study, SimConfig};

#[derive(Debug, Parser)]
#[command(
    name = "pedpen",
    about = "Bayesian age-specific penetrance estimation from family pedigrees",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the posterior penetrance from pedigree data.
    Estimate(EstimateArgs),
    /// Generate a synthetic ascertained study with known ground truth.
    Simulate(SimulateArgs),
    /// Check pedigree files for structural problems.
    Validate(ValidateArgs),
    /// Echo the prior specification built from a study summary.
    Priors(PriorsArgs),
}

#[derive(Debug, Args)]
struct PedigreeInput {
    /// Pedigree file (.csv with the ten schema columns, or .json mirror).
    #[arg(long)]
    pedigrees: PathBuf,
    /// Twins sidecar: JSON mapping pedigree id to arrays of member-id
    /// groups.
    #[arg(long)]
    twins: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: PedigreeInput,
    /// Baseline risk CSV (age,female,male or age,rate); bundled default
    /// when omitted.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Whether baseline rows are annual or cumulative probabilities.
    #[arg(long, value_parser = ["annual", "cumulative"], default_value = "annual")]
    baseline_kind: String,
    /// Prior configuration JSON; defaults when omitted.
    #[arg(long)]
    priors: Option<PathBuf>,
    /// Output directory for samples.csv, curves_*.csv, diagnostics.json,
    /// config_echo.json.
    #[arg(long)]
    out: PathBuf,
    /// Noncarrier curve JSON ({"female": {...}, "male": {...}}), required
    /// when --baseline-nc is false.
    #[arg(long)]
    noncarrier: Option<PathBuf>,
    /// Credible-interval level for curve bands.
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    /// Concentration (a+b) for ratio-elicited asymptote priors.
    #[arg(long, default_value_t = DEFAULT_RATIO_CONCENTRATION)]
    ratio_concentration: f64,
    /// Embed the full imputation log in diagnostics.json and print it to
    /// stderr.
    #[arg(long, default_value_t = false)]
    debug_imputation: bool,

    #[arg(long, default_value_t = 1)]
    n_chains: usize,
    #[arg(long, default_value_t = 10_000)]
    n_iter_per_chain: usize,
    #[arg(long, default_value_t = 6)]
    ncores: usize,
    #[arg(long, default_value_t = 94)]
    max_age: u32,
    #[arg(long, default_value_t = false)]
    remove_proband: bool,
    #[arg(long, default_value_t = false)]
    age_imputation: bool,
    #[arg(long, default_value_t = 10)]
    imp_interval: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    sex_specific: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    median_max: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    baseline_nc: bool,
    /// Initial proposal variances (8 comma-separated values; the first 4
    /// are used when sex-specific estimation is off).
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.1, 2.0, 2.0, 5.0, 5.0, 5.0, 5.0])]
    var: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    burn_in: f64,
    #[arg(long, default_value_t = 1)]
    thinning_factor: usize,
    #[arg(long, default_value_t = 0.0001)]
    prev: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Output directory for pedigrees.csv and truth.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 130)]
    n_probands: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Fraction of non-proband diagnosis ages masked to missing.
    #[arg(long, default_value_t = 0.0)]
    missing_age_dx_rate: f64,
    /// Fraction of non-proband censoring ages masked to missing.
    #[arg(long, default_value_t = 0.0)]
    missing_cur_age_rate: f64,
    /// Baseline risk CSV used for noncarrier onsets; bundled default when
    /// omitted.
    #[arg(long)]
    baseline: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: PedigreeInput,
    #[arg(long, default_value_t = 94)]
    max_age: u32,
}

#[derive(Debug, Args)]
struct PriorsArgs {
    /// Study summary or prior configuration JSON.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 94)]
    max_age: u32,
    /// Baseline risk CSV, needed when the summary carries a relative-risk
    /// ratio.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RATIO_CONCENTRATION)]
    ratio_concentration: f64,
}

/// Parse argv and run; returns the process exit code (0 success,
/// 1 validation errors, 2 runtime failure).
pub fn run() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Priors(args) => cmd_priors(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    }
}

fn load_pedigrees(input: &PedigreeInput) -> anyhow::Result<Vec<Pedigree>> {
    let path = &input.pedigrees;
    let file = std::fs::File::open(path)
        .with_context(|| format!("cannot open pedigree file {}", path.display()))?;
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    let mut peds = if is_json {
        pedigree::parse_pedigrees_json(file)?
    } else {
        pedigree::parse_pedigrees_csv(file)?
    };
    if let Some(twins_path) = &input.twins {
        let f = std::fs::File::open(twins_path)
            .with_context(|| format!("cannot open twins file {}", twins_path.display()))?;
        let twins = pedigree::parse_twins_json(f)?;
        pedigree::apply_twin_groups(&mut peds, &twins)?;
    }
    Ok(peds)
}

fn load_baseline(path: &Option<PathBuf>, kind: BaselineKind) -> anyhow::Result<BaselineTable> {
    match path {
        None => Ok(BaselineTable::bundled_default()),
        Some(p) => {
            let f = std::fs::File::open(p)
                .with_context(|| format!("cannot open baseline file {}", p.display()))?;
            Ok(BaselineTable::from_csv_reader(f, kind)?)
        }
    }
}

/// Validate all pedigrees, print issues, and report whether any were
/// errors.
fn report_validation(peds: &[Pedigree], max_age: u32) -> bool {
    let mut any_errors = false;
    let mut count = 0usize;
    for ped in peds {
        for issue in pedigree::validate(ped, max_age) {
            eprintln!("{issue}");
            count += 1;
            if issue.severity == pedigree::Severity::Error {
                any_errors = true;
            }
        }
    }
    if count == 0 {
        eprintln!("validation: no issues in {} pedigree(s)", peds.len());
    }
    any_errors
}

#[derive(Debug, Deserialize)]
struct NoncarrierFile {
    female: WeibullPenetrance,
    male: WeibullPenetrance,
}

fn cmd_estimate(args: EstimateArgs) -> anyhow::Result<i32> {
    let peds = load_pedigrees(&args.input)?;
    if peds.is_empty() {
        return Err(anyhow!("pedigree file contains no rows"));
    }
    if report_validation(&peds, args.max_age) {
        eprintln!("estimation aborted: fix the validation errors above");
        return Ok(1);
    }
    let kind = if args.baseline_kind == "cumulative" {
        BaselineKind::Cumulative
    } else {
        BaselineKind::Annual
    };
    let mut baseline = load_baseline(&args.baseline, kind)?;
    if baseline.max_age() > args.max_age {
        baseline = baseline.truncated(args.max_age)?;
    }

    let priors = match &args.priors {
        None => priors::default_priors(args.max_age),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read prior config {}", p.display()))?;
            priors::load_priors(&text, args.max_age, &baseline, args.ratio_concentration)?
        }
    };

    let noncarrier = match (&args.noncarrier, args.baseline_nc) {
        (_, true) => None,
        (Some(p), false) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read noncarrier curves {}", p.display()))?;
            let nc: NoncarrierFile = serde_json::from_str(&text)?;
            Some((nc.female, nc.male))
        }
        (None, false) => {
            return Err(anyhow!("--baseline-nc false requires --noncarrier <json>"));
        }
    };

    let cfg = ChainConfig {
        n_chains: args.n_chains,
        n_iter_per_chain: args.n_iter_per_chain,
        ncores: args.ncores,
        max_age: args.max_age,
        remove_proband: args.remove_proband,
        age_imputation: args.age_imputation,
        imp_interval: args.imp_interval,
        sex_specific: args.sex_specific,
        median_max: args.median_max,
        baseline_nc: args.baseline_nc,
        var: args.var.clone(),
        burn_in: args.burn_in,
        thinning_factor: args.thinning_factor,
        prev: args.prev,
        seed: args.seed,
    };
    let samples = run_chains(&cfg, &peds, &priors, &baseline, noncarrier)?;
    for chain in &samples.chains {
        for w in &chain.warnings {
            eprintln!("chain {}: {w}", chain.chain_index);
        }
        if args.debug_imputation {
            for ev in &chain.imputation_log {
                eprintln!(
                    "chain {} iter {}: pedigree {} member {} {:?} -> {}",
                    chain.chain_index,
                    ev.iteration,
                    ev.pedigree_id,
                    ev.member_id,
                    ev.field,
                    ev.value
                );
            }
        }
    }
    report::write_outputs(&samples, &priors, &args.out, args.ci_level, args.debug_imputation)?;
    let d = report::diagnostics(&samples);
    for c in &d.chains {
        eprintln!(
            "chain {}: acceptance {:.3}, bounds rejections {}",
            c.chain, c.acceptance_rate, c.bounds_rejections
        );
    }
    println!("wrote results to {}", args.out.display());
    Ok(0)
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<i32> {
    let baseline = load_baseline(&args.baseline, BaselineKind::Annual)?;
    let mut cfg = SimConfig::crc_like(args.n_probands, args.seed);
    cfg.missing_age_dx_rate = args.missing_age_dx_rate;
    cfg.missing_cur_age_rate = args.missing_cur_age_rate;
    let (peds, truth) = simulate_study(&cfg, &baseline)?;
    std::fs::create_dir_all(&args.out)?;
    let f = std::fs::File::create(args.out.join("pedigrees.csv"))?;
    pedigree::write_pedigrees_csv(&peds, f)?;
    serde_json::to_writer_pretty(std::fs::File::create(args.out.join("truth.json"))?, &truth)?;
    let members: usize = peds.iter().map(|p| p.members.len()).sum();
    println!(
        "simulated {} families, {} members, wrote {}",
        peds.len(),
        members,
        args.out.display()
    );
    Ok(0)
}

fn cmd_validate(args: ValidateArgs) -> anyhow::Result<i32> {
    let peds = load_pedigrees(&args.input)?;
    Ok(if report_validation(&peds, args.max_age) {
        1
    } else {
        0
    })
}

fn cmd_priors(args: PriorsArgs) -> anyhow::Result<i32> {
    let baseline = load_baseline(&args.baseline, BaselineKind::Annual)?;
    let text = std::fs::read_to_string(&args.data)
        .with_context(|| format!("cannot read {}", args.data.display()))?;
    // Accept either a full prior configuration or a bare study summary.
    let spec: PriorSpec =
        match priors::load_priors(&text, args.max_age, &baseline, args.ratio_concentration) {
            Ok(s) => s,
            Err(_) => {
                let d: priors::DistributionData = serde_json::from_str(&text)?;
                let mut s = priors::default_priors(args.max_age);
                if d.at_risk.is_some() || d.sample_size.is_some() {
                    s.base = priors::priors_from_risk_data(&d, args.max_age)?;
                }
                if let Some(r) = d.ratio {
                    s.base.asymptote = priors::asymptote_prior_from_ratio(
                        r,
                        &baseline,
                        crate::curve::Sex::Female,
                        args.ratio_concentration,
                    )?;
                }
                s
            }
        };
    println!("{}", serde_json::to_string_pretty(&spec)?);
    Ok(0)
}
