//! Carrier penetrance curves and the population baseline risk table.
//!
//! Carrier risk follows a threshold Weibull scaled by an asymptote:
//!
//! ```text
//! F(t) = gamma * (1 - exp(-((t - delta) / alpha)^beta))   for t > delta
//! F(t) = 0                                                 otherwise
//! ```
//!
//! `gamma` is the lifetime risk, `delta` the minimum onset age, and
//! `(alpha, beta)` the usual Weibull scale and shape. The sampler works in
//! quantile space (asymptote, threshold, conditional Q25/Q50 of onset), so
//! this module also provides the closed-form map between the two
//! parameterizations.

use serde::{Deserialize, Serialize};

use crate::error::{DegenerateQuantiles, Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// Sex of an individual. Risk curves and baseline tables are sex-specific.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    Female,
    Male,
    Unknown,
}

/// Threshold Weibull penetrance curve in natural parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullPenetrance {
    /// Scale, in years. Must be positive.
    pub alpha: f64,
    /// Shape, dimensionless. Must be positive.
    pub beta: f64,
    /// Asymptote: lifetime risk, in [0, 1].
    pub gamma: f64,
    /// Threshold: minimum onset age, in years, nonnegative.
    pub delta: f64,
}

impl WeibullPenetrance {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!(
                "weibull scale must be positive, got {alpha}"
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "weibull shape must be positive, got {beta}"
            )));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidInput(format!(
                "asymptote must lie in [0, 1], got {gamma}"
            )));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "threshold must be nonnegative, got {delta}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            delta,
        })
    }

    /// Probability of disease onset by `age`.
    pub fn cdf(&self, age: f64) -> f64 {
        if age <= self.delta {
            return 0.0;
        }
        let z = (age - self.delta) / self.alpha;
        self.gamma * (1.0 - (-z.powf(self.beta)).exp())
    }

    /// Probability of onset in the year ending at integer `age`:
    /// `cdf(age) - cdf(age - 1)`.
    pub fn annual_probability(&self, age: u32) -> f64 {
        debug_assert!(age >= 1);
        (self.cdf(age as f64) - self.cdf(age as f64 - 1.0)).max(0.0)
    }

    /// Probability of remaining disease-free through `age`.
    pub fn survival(&self, age: f64) -> f64 {
        1.0 - self.cdf(age)
    }

    /// Quantile-space view of this curve. Q25/Q50 are quantiles of the
    /// onset distribution conditional on eventual onset, i.e. of `cdf/gamma`.
    pub fn to_quantiles(&self) -> QuantileParams {
        let q_at = |p: f64| self.delta + self.alpha * (-(1.0 - p).ln()).powf(1.0 / self.beta);
        QuantileParams {
            asymptote: self.gamma,
            threshold: self.delta,
            first_quartile: q_at(0.25),
            median: q_at(0.5),
        }
    }
}

/// Penetrance curve in quantile coordinates: the asymptote, the threshold,
/// and the conditional first-quartile and median onset ages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileParams {
    pub asymptote: f64,
    pub threshold: f64,
    pub median: f64,
    pub first_quartile: f64,
}

impl QuantileParams {
    /// Recover natural Weibull parameters from quantile coordinates.
    ///
    /// Solves `cdf(q25) = asymptote/4` and `cdf(q50) = asymptote/2` in
    /// closed form. Degenerate spacing (quartile at the threshold, or
    /// quartile meeting the median) has no finite solution and yields a
    /// rejection signal.
    pub fn to_weibull(&self) -> std::result::Result<WeibullPenetrance, DegenerateQuantiles> {
        let q25 = self.first_quartile - self.threshold;
        let q50 = self.median - self.threshold;
        if !(q25 > 0.0) || !(q50 > q25) {
            return Err(DegenerateQuantiles);
        }
        if !(0.0..=1.0).contains(&self.asymptote) || self.threshold < 0.0 {
            return Err(DegenerateQuantiles);
        }
        // Conditional cdf at the quartiles: 1 - exp(-(q25/alpha)^beta) = 1/4
        // and 1 - exp(-(q50/alpha)^beta) = 1/2, hence
        //   (q25/q50)^beta = ln(4/3) / ln 2.
        let beta = (f64::ln(4.0 / 3.0) / LN_2).ln() / (q25 / q50).ln();
        let alpha = q50 / LN_2.powf(1.0 / beta);
        if !beta.is_finite() || !alpha.is_finite() || beta <= 0.0 || alpha <= 0.0 {
            return Err(DegenerateQuantiles);
        }
        Ok(WeibullPenetrance {
            alpha,
            beta,
            gamma: self.asymptote,
            delta: self.threshold,
        })
    }
}

/// Per-sex cdf lookup on the integer age grid, precomputed once per
/// proposal. All individuals of a sex share one curve, so factor
/// evaluation reduces to table reads.
#[derive(Debug, Clone)]
pub struct CurveTable {
    /// cdf at ages 0..=max_age (index = age).
    cdf: Vec<f64>,
    /// Lifetime risk (the asymptote).
    pub gamma: f64,
}

impl CurveTable {
    pub fn new(curve: &WeibullPenetrance, max_age: u32) -> Self {
        let cdf = (0..=max_age).map(|a| curve.cdf(a as f64)).collect();
        Self {
            cdf,
            gamma: curve.gamma,
        }
    }

    pub fn cdf(&self, age: u32) -> f64 {
        self.cdf[age as usize]
    }

    pub fn annual(&self, age: u32) -> f64 {
        (self.cdf[age as usize] - self.cdf[age as usize - 1]).max(0.0)
    }

    pub fn survival(&self, age: u32) -> f64 {
        1.0 - self.cdf[age as usize]
    }

    pub fn max_age(&self) -> u32 {
        (self.cdf.len() - 1) as u32
    }
}

// ---------------------------------------------------------------------------
// Baseline (noncarrier) risk table
// ---------------------------------------------------------------------------

/// How a baseline CSV encodes risk per age row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Rows hold per-year onset probabilities.
    Annual,
    /// Rows hold cumulative onset probabilities; the loader differences them.
    Cumulative,
}

/// Age-by-sex population risk used as the noncarrier penetrance.
///
/// Stores annual probabilities for integer ages `1..=max_age` together with
/// their running sums.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable {
    max_age: u32,
    annual_female: Vec<f64>,
    annual_male: Vec<f64>,
    cum_female: Vec<f64>,
    cum_male: Vec<f64>,
}

impl BaselineTable {
    /// Build from per-year probabilities for ages `1..=max_age` (index 0 is
    /// age 1).
    pub fn from_annual(female: Vec<f64>, male: Vec<f64>, max_age: u32) -> Result<Self> {
        if max_age == 0 {
            return Err(Error::InvalidInput("max_age must be at least 1".into()));
        }
        for (sex, v) in [("female", &female), ("male", &male)] {
            if v.len() != max_age as usize {
                return Err(Error::InvalidInput(format!(
                    "baseline for {sex} covers {} ages, need 1..={max_age}",
                    v.len()
                )));
            }
            if v.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidInput(format!(
                    "baseline annual probabilities for {sex} must lie in [0, 1]"
                )));
            }
            let total: f64 = v.iter().sum();
            if total > 1.0 + 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "baseline annual probabilities for {sex} sum to {total:.6} > 1"
                )));
            }
        }
        let cumsum = |v: &[f64]| {
            let mut out = Vec::with_capacity(v.len() + 1);
            out.push(0.0);
            let mut acc = 0.0;
            for &p in v {
                acc += p;
                out.push(acc);
            }
            out
        };
        let cum_female = cumsum(&female);
        let cum_male = cumsum(&male);
        Ok(Self {
            max_age,
            annual_female: female,
            annual_male: male,
            cum_female,
            cum_male,
        })
    }

    /// Build from cumulative probabilities for ages `1..=max_age`, differencing
    /// to annual values. Any decrease is an error.
    pub fn from_cumulative(female: Vec<f64>, male: Vec<f64>, max_age: u32) -> Result<Self> {
        let diff = |v: &[f64], sex: &str| -> Result<Vec<f64>> {
            let mut prev = 0.0;
            let mut out = Vec::with_capacity(v.len());
            for (i, &c) in v.iter().enumerate() {
                if c < prev - 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "cumulative baseline for {sex} decreases at age {}",
                        i + 1
                    )));
                }
                out.push((c - prev).max(0.0));
                prev = c;
            }
            Ok(out)
        };
        let f = diff(&female, "female")?;
        let m = diff(&male, "male")?;
        Self::from_annual(f, m, max_age)
    }

    /// Annual onset probability at integer `age` for `sex`. Unknown sex
    /// averages the two curves.
    pub fn annual(&self, sex: Sex, age: u32) -> f64 {
        let i = age as usize - 1;
        match sex {
            Sex::Female => self.annual_female[i],
            Sex::Male => self.annual_male[i],
            Sex::Unknown => 0.5 * (self.annual_female[i] + self.annual_male[i]),
        }
    }

    /// Cumulative onset probability through `age` (0 for age 0).
    pub fn cdf(&self, sex: Sex, age: u32) -> f64 {
        let i = age as usize;
        match sex {
            Sex::Female => self.cum_female[i],
            Sex::Male => self.cum_male[i],
            Sex::Unknown => 0.5 * (self.cum_female[i] + self.cum_male[i]),
        }
    }

    /// Lifetime (through `max_age`) onset probability.
    pub fn lifetime(&self, sex: Sex) -> f64 {
        self.cdf(sex, self.max_age)
    }

    pub fn max_age(&self) -> u32 {
        self.max_age
    }

    /// Median onset age: the smallest age at which half of the lifetime
    /// risk has accrued. Used as the upper proposal bound for the median
    /// when `median_max` is set.
    pub fn median_onset(&self, sex: Sex) -> f64 {
        let half = 0.5 * self.lifetime(sex);
        if half <= 0.0 {
            return self.max_age as f64;
        }
        for age in 1..=self.max_age {
            if self.cdf(sex, age) >= half {
                return age as f64;
            }
        }
        self.max_age as f64
    }

    /// Truncate to a smaller maximum age.
    pub fn truncated(&self, max_age: u32) -> Result<Self> {
        if max_age > self.max_age {
            return Err(Error::InvalidInput(format!(
                "baseline covers ages 1..={}, cannot extend to {max_age}",
                self.max_age
            )));
        }
        Self::from_annual(
            self.annual_female[..max_age as usize].to_vec(),
            self.annual_male[..max_age as usize].to_vec(),
            max_age,
        )
    }

    /// Bundled default table: a smoothed registry-style colorectal-cancer
    /// baseline with annual risk growing exponentially in age, roughly 3.3%
    /// (female) and 4.0% (male) lifetime risk by age 94.
    pub fn bundled_default() -> Self {
        let rate = |scale: f64| {
            (1..=94u32)
                .map(|a| scale * (0.085 * a as f64).exp())
                .collect::<Vec<_>>()
        };
        Self::from_annual(rate(1.0e-6), rate(1.2e-6), 94).expect("default baseline is valid")
    }

    /// Read a baseline table from CSV. Accepts header `age,female,male` for
    /// sex-specific tables or `age,rate` for a shared table
    /// (case-insensitive). Rows must cover ages 1..=max contiguously.
    pub fn from_csv_reader<R: std::io::Read>(reader: R, kind: BaselineKind) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_ascii_lowercase())
            .collect();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let age_col = col("age")
            .ok_or_else(|| Error::InvalidInput("baseline csv needs an 'age' column".into()))?;
        let (female_col, male_col) = match (col("female"), col("male"), col("rate")) {
            (Some(f), Some(m), _) => (f, m),
            (None, None, Some(r)) => (r, r),
            _ => {
                return Err(Error::InvalidInput(
                    "baseline csv needs 'female' and 'male' columns, or a single 'rate' column"
                        .into(),
                ))
            }
        };
        let mut rows: Vec<(u32, f64, f64)> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let age: u32 = record
                .get(age_col)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidInput("baseline csv: bad age value".into()))?;
            let parse_rate = |i: usize| -> Result<f64> {
                record.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| {
                    Error::InvalidInput(format!("baseline csv: bad rate at age {age}"))
                })
            };
            rows.push((age, parse_rate(female_col)?, parse_rate(male_col)?));
        }
        rows.sort_by_key(|r| r.0);
        let max_age = rows.last().map(|r| r.0).unwrap_or(0);
        if max_age == 0 {
            return Err(Error::InvalidInput("baseline csv has no rows".into()));
        }
        let mut female = vec![f64::NAN; max_age as usize];
        let mut male = vec![f64::NAN; max_age as usize];
        for (age, f, m) in rows {
            if age == 0 {
                return Err(Error::InvalidInput(
                    "baseline csv: age 0 is not allowed".into(),
                ));
            }
            female[age as usize - 1] = f;
            male[age as usize - 1] = m;
        }
        if female.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput(format!(
                "baseline csv must cover every age 1..={max_age}"
            )));
        }
        match kind {
            BaselineKind::Annual => Self::from_annual(female, male, max_age),
            BaselineKind::Cumulative => Self::from_cumulative(female, male, max_age),
        }
    }
}
