//! Prior distributions for the quantile-space parameters, built from
//! defaults, custom parameters, or summaries of published studies.
//!
//! Each parameter gets an independent prior: scaled Beta distributions for
//! the first quartile, median and asymptote, and a uniform for the
//! threshold. Study summaries enter through three routes: an overall
//! relative-risk ratio (informs the asymptote mean), explicit at-risk
//! counts at key ages, or ages plus a total sample size from which at-risk
//! counts are derived as fixed proportions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Continuous, ContinuousCDF};

use crate::curve::{BaselineTable, QuantileParams, Sex};
use crate::error::{Error, Result};

/// Default concentration (a + b) for a ratio-elicited asymptote Beta.
pub const DEFAULT_RATIO_CONCENTRATION: f64 = 10.0;

/// Beta(a, b) linearly mapped onto `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledBeta {
    pub a: f64,
    pub b: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ScaledBeta {
    pub fn new(a: f64, b: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidInput(format!(
                "beta shape parameters must be positive, got a={a}, b={b}"
            )));
        }
        if !(hi > lo) {
            return Err(Error::InvalidInput(format!("empty support [{lo}, {hi}]")));
        }
        Ok(Self { a, b, lo, hi })
    }

    fn dist(&self) -> Beta {
        Beta::new(self.a, self.b).expect("shape parameters validated at construction")
    }

    /// Log density at `x`; negative infinity outside the open support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.lo) / (self.hi - self.lo);
        if !(0.0..=1.0).contains(&z) {
            return f64::NEG_INFINITY;
        }
        self.dist().ln_pdf(z) - (self.hi - self.lo).ln()
    }

    pub fn mean(&self) -> f64 {
        self.lo + (self.hi - self.lo) * self.a / (self.a + self.b)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.lo + (self.hi - self.lo) * self.dist().inverse_cdf(p)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

/// Uniform prior on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformPrior {
    pub lo: f64,
    pub hi: f64,
}

impl UniformPrior {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidInput(format!("empty support [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            f64::NEG_INFINITY
        } else {
            -(self.hi - self.lo).ln()
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.lo + p * (self.hi - self.lo)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

/// The four independent priors for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPriors {
    pub first_quartile: ScaledBeta,
    pub median: ScaledBeta,
    pub asymptote: ScaledBeta,
    pub threshold: UniformPrior,
}

impl ParamPriors {
    /// Sum of the four independent log densities at `q`.
    pub fn log_density(&self, q: &QuantileParams) -> f64 {
        self.first_quartile.ln_pdf(q.first_quartile)
            + self.median.ln_pdf(q.median)
            + self.asymptote.ln_pdf(q.asymptote)
            + self.threshold.ln_pdf(q.threshold)
    }
}

/// Priors for the whole model. One parameter set is shared by both sexes
/// unless a distinct male set is supplied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub base: ParamPriors,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub male: Option<ParamPriors>,
}

impl PriorSpec {
    pub fn shared(base: ParamPriors) -> Self {
        Self { base, male: None }
    }

    pub fn for_sex(&self, sex: Sex) -> &ParamPriors {
        match sex {
            Sex::Male => self.male.as_ref().unwrap_or(&self.base),
            _ => &self.base,
        }
    }
}

/// Joint log prior density: four terms in pooled mode, eight in
/// sex-specific mode. Out-of-support points yield negative infinity.
pub fn log_prior(spec: &PriorSpec, female: &QuantileParams, male: Option<&QuantileParams>) -> f64 {
    let mut total = spec.for_sex(Sex::Female).log_density(female);
    if let Some(m) = male {
        total += spec.for_sex(Sex::Male).log_density(m);
    }
    total
}

/// Default weakly-informative priors: Beta(6,3) first quartile and
/// Beta(2,2) median scaled to `[0, max_age]`, flat Beta(1,1) asymptote,
/// Uniform(5,30) threshold.
pub fn default_priors(max_age: u32) -> PriorSpec {
    let m = max_age as f64;
    PriorSpec::shared(ParamPriors {
        first_quartile: ScaledBeta::new(6.0, 3.0, 0.0, m).expect("static parameters"),
        median: ScaledBeta::new(2.0, 2.0, 0.0, m).expect("static parameters"),
        asymptote: ScaledBeta::new(1.0, 1.0, 0.0, 1.0).expect("static parameters"),
        threshold: UniformPrior::new(5.0, 30.0).expect("static parameters"),
    })
}

// ---------------------------------------------------------------------------
// Elicitation from published-study summaries
// ---------------------------------------------------------------------------

/// Key ages of the diagnosis-age distribution reported by a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeRows {
    pub min: f64,
    pub first_quartile: f64,
    pub median: f64,
    pub max: f64,
}

/// Carriers still under observation at the corresponding ages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtRiskRows {
    pub first_quartile: f64,
    pub median: f64,
    pub max: f64,
}

/// Summary of a published study, as far as it is available: key ages, plus
/// either at-risk counts, a total sample size, or a relative-risk ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionData {
    pub age: AgeRows,
    #[serde(default)]
    pub at_risk: Option<AtRiskRows>,
    #[serde(default)]
    pub sample_size: Option<f64>,
    #[serde(default)]
    pub ratio: Option<f64>,
}

/// At-risk proportions assumed when only a total sample size is known:
/// 90% still at risk at the first-quartile age, 50% at the median, 10% at
/// the maximum.
pub const SAMPLE_SIZE_PROPORTIONS: [f64; 3] = [0.9, 0.5, 0.1];

impl DistributionData {
    fn check_ages(&self) -> Result<()> {
        let a = &self.age;
        if !(a.min < a.first_quartile && a.first_quartile < a.median && a.median <= a.max) {
            return Err(Error::InvalidInput(format!(
                "study ages must satisfy min < first_quartile < median <= max, got \
                 {}/{}/{}/{}",
                a.min, a.first_quartile, a.median, a.max
            )));
        }
        Ok(())
    }

    /// At-risk counts: reported directly, or derived from the sample size.
    fn resolve_at_risk(&self) -> Result<AtRiskRows> {
        if let Some(r) = self.at_risk {
            if !(r.first_quartile > 0.0 && r.median > 0.0 && r.max > 0.0) {
                return Err(Error::InvalidInput(
                    "at-risk counts must be positive".into(),
                ));
            }
            if !(r.first_quartile >= r.median && r.median >= r.max) {
                return Err(Error::InvalidInput(
                    "at-risk counts must be nonincreasing across the three ages".into(),
                ));
            }
            return Ok(r);
        }
        if let Some(n) = self.sample_size {
            if !(n > 0.0) {
                return Err(Error::InvalidInput("sample size must be positive".into()));
            }
            return Ok(AtRiskRows {
                first_quartile: SAMPLE_SIZE_PROPORTIONS[0] * n,
                median: SAMPLE_SIZE_PROPORTIONS[1] * n,
                max: SAMPLE_SIZE_PROPORTIONS[2] * n,
            });
        }
        Err(Error::InvalidInput(
            "study summary needs either at_risk counts or a sample_size".into(),
        ))
    }
}

/// Build the four priors from a study summary.
///
/// Each Beta gets `a = normalized age x at-risk count` and `b = count - a`;
/// the first quartile and median are scaled to `[0, max_age]`, the
/// asymptote (from the maximum age row) to `[0, 1]`, and the threshold is
/// uniform on `[0, minimum age]`.
pub fn priors_from_risk_data(d: &DistributionData, max_age: u32) -> Result<ParamPriors> {
    d.check_ages()?;
    let at_risk = d.resolve_at_risk()?;
    let m = max_age as f64;
    let beta_for = |age: f64, n: f64, lo: f64, hi: f64| -> Result<ScaledBeta> {
        let a = (age / m) * n;
        let b = n - a;
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidInput(format!(
                "degenerate elicited beta (a={a:.6}, b={b:.6}); check ages and counts"
            )));
        }
        ScaledBeta::new(a, b, lo, hi)
    };
    Ok(ParamPriors {
        first_quartile: beta_for(d.age.first_quartile, at_risk.first_quartile, 0.0, m)?,
        median: beta_for(d.age.median, at_risk.median, 0.0, m)?,
        asymptote: beta_for(d.age.max, at_risk.max, 0.0, 1.0)?,
        threshold: UniformPrior::new(0.0, d.age.min)?,
    })
}

/// Asymptote prior from a published relative-risk ratio: the prior mean is
/// the ratio times the lifetime baseline risk (capped at 0.999), with a
/// fixed concentration `a + b`.
pub fn asymptote_prior_from_ratio(
    ratio: f64,
    baseline: &BaselineTable,
    sex: Sex,
    concentration: f64,
) -> Result<ScaledBeta> {
    if !(ratio > 0.0) {
        return Err(Error::InvalidInput(format!(
            "relative risk ratio must be positive, got {ratio}"
        )));
    }
    if !(concentration > 0.0) {
        return Err(Error::InvalidInput("concentration must be positive".into()));
    }
    let mean = (ratio * baseline.lifetime(sex)).min(0.999);
    let a = mean * concentration;
    let b = concentration - a;
    ScaledBeta::new(a, b, 0.0, 1.0)
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorConfigFile {
    #[serde(default)]
    defaults: Option<bool>,
    #[serde(default)]
    first_quartile: Option<ScaledBeta>,
    #[serde(default)]
    median: Option<ScaledBeta>,
    #[serde(default)]
    asymptote: Option<ScaledBeta>,
    #[serde(default)]
    threshold: Option<UniformPrior>,
    #[serde(default)]
    male: Option<ParamPriors>,
    #[serde(default)]
    distribution_data: Option<DistributionData>,
}

/// Load a prior configuration from JSON. Accepts `{"defaults": true}`,
/// explicit per-parameter blocks (unspecified parameters keep their
/// defaults), or a `distribution_data` study summary, optionally with a
/// distinct `male` block.
pub fn load_priors(
    json: &str,
    max_age: u32,
    baseline: &BaselineTable,
    ratio_concentration: f64,
) -> Result<PriorSpec> {
    let cfg: PriorConfigFile = serde_json::from_str(json)?;
    let mut spec = default_priors(max_age);
    if let Some(d) = &cfg.distribution_data {
        // Ages are optional when only a ratio is given; detect by whether
        // the age block is meaningful for elicitation.
        if d.at_risk.is_some() || d.sample_size.is_some() {
            spec.base = priors_from_risk_data(d, max_age)?;
        }
        if let Some(ratio) = d.ratio {
            let female =
                asymptote_prior_from_ratio(ratio, baseline, Sex::Female, ratio_concentration)?;
            let male = asymptote_prior_from_ratio(ratio, baseline, Sex::Male, ratio_concentration)?;
            if (female.a - male.a).abs() > 1e-12 {
                let mut male_set = spec.base;
                male_set.asymptote = male;
                spec.male = Some(male_set);
            }
            spec.base.asymptote = female;
        }
    }
    for (slot, value) in [
        (&mut spec.base.first_quartile, cfg.first_quartile),
        (&mut spec.base.median, cfg.median),
        (&mut spec.base.asymptote, cfg.asymptote),
    ] {
        if let Some(v) = value {
            *slot = ScaledBeta::new(v.a, v.b, v.lo, v.hi)?;
        }
    }
    if let Some(t) = cfg.threshold {
        spec.base.threshold = UniformPrior::new(t.lo, t.hi)?;
    }
    if let Some(m) = cfg.male {
        ScaledBeta::new(
            m.first_quartile.a,
            m.first_quartile.b,
            m.first_quartile.lo,
            m.first_quartile.hi,
        )?;
        ScaledBeta::new(m.median.a, m.median.b, m.median.lo, m.median.hi)?;
        ScaledBeta::new(m.asymptote.a, m.asymptote.b, m.asymptote.lo, m.asymptote.hi)?;
        UniformPrior::new(m.threshold.lo, m.threshold.hi)?;
        spec.male = Some(m);
    }
    let _ = cfg.defaults;
    Ok(spec)
}
