//! Age imputation during sampling.
//!
//! Affected individuals with a missing diagnosis age get one drawn from the
//! current carrier curve or the baseline, weighted by their posterior
//! carrier probability computed with their own age evidence removed.
//! Unaffected individuals with a missing censoring age draw from the
//! empirical censoring-age distribution of observed unaffected individuals,
//! stratified by sex. Draws are refreshed periodically so the imputation
//! uncertainty propagates into the posterior.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::Sex;
use crate::error::{Error, Result};
use crate::likelihood::{FactorContext, GenotypeModel, PreparedPedigree};
use crate::pedigree::{AffectionStatus, Pedigree};

/// Number of full-range draws attempted before falling back to the
/// truncated distribution.
const REDRAW_CAP: usize = 50;

/// Which field an imputation event filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputedField {
    DiagnosisAge,
    CensoringAge,
}

/// One imputed value, for the diagnostics log.
#[derive(Debug, Clone, Serialize)]
pub struct ImputationEvent {
    pub iteration: usize,
    pub pedigree_id: String,
    pub member_id: u32,
    pub field: ImputedField,
    pub value: u32,
}

/// Imputation targets and the empirical censoring-age pools, identified
/// once from the raw data.
#[derive(Debug, Clone)]
pub struct ImputationPlan {
    /// (pedigree index, member index) of affected members missing age_dx.
    pub affected_targets: Vec<(usize, usize)>,
    /// (pedigree index, member index) of unaffected members missing cur_age.
    pub unaffected_targets: Vec<(usize, usize)>,
    censor_female: Vec<u32>,
    censor_male: Vec<u32>,
    censor_pooled: Vec<u32>,
}

impl ImputationPlan {
    pub fn is_empty(&self) -> bool {
        self.affected_targets.is_empty() && self.unaffected_targets.is_empty()
    }

    /// Observed censoring ages for a sex, falling back to the pooled set
    /// when the stratum is empty.
    pub fn censor_pool(&self, sex: Sex) -> &[u32] {
        let stratum = match sex {
            Sex::Female => &self.censor_female,
            Sex::Male => &self.censor_male,
            Sex::Unknown => &self.censor_pooled,
        };
        if stratum.is_empty() {
            &self.censor_pooled
        } else {
            stratum
        }
    }
}

/// Scan the data for members needing imputation and build the empirical
/// censoring-age pools from observed unaffected individuals.
pub fn build_plan(data: &[Pedigree]) -> Result<ImputationPlan> {
    let mut plan = ImputationPlan {
        affected_targets: Vec::new(),
        unaffected_targets: Vec::new(),
        censor_female: Vec::new(),
        censor_male: Vec::new(),
        censor_pooled: Vec::new(),
    };
    for (pi, ped) in data.iter().enumerate() {
        for (mi, m) in ped.members.iter().enumerate() {
            match m.affection {
                AffectionStatus::Affected => {
                    if m.age_dx.is_none() {
                        plan.affected_targets.push((pi, mi));
                    }
                }
                AffectionStatus::Unaffected => match m.cur_age {
                    Some(age) => {
                        plan.censor_pooled.push(age);
                        match m.sex {
                            Sex::Female => plan.censor_female.push(age),
                            Sex::Male => plan.censor_male.push(age),
                            Sex::Unknown => {}
                        }
                    }
                    None => plan.unaffected_targets.push((pi, mi)),
                },
                AffectionStatus::Unknown => {}
            }
        }
    }
    if !plan.unaffected_targets.is_empty() && plan.censor_pooled.is_empty() {
        return Err(Error::Imputation(
            "censoring ages need imputation but no unaffected individual has an observed age"
                .into(),
        ));
    }
    Ok(plan)
}

/// Draw an age from categorical `weights` over ages `1..=weights.len()`,
/// not exceeding `cap`: rejection first, then the truncated distribution,
/// then `fallback` weights, finally uniform.
fn draw_capped_age(weights: &[f64], fallback: &[f64], cap: u32, rng: &mut ChaCha8Rng) -> u32 {
    let draw_full = |rng: &mut ChaCha8Rng, w: &[f64], total: f64| -> u32 {
        let mut u = rng.random::<f64>() * total;
        for (i, &wi) in w.iter().enumerate() {
            u -= wi;
            if u <= 0.0 {
                return (i + 1) as u32;
            }
        }
        w.len() as u32
    };
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for _ in 0..REDRAW_CAP {
            let age = draw_full(rng, weights, total);
            if age <= cap {
                return age;
            }
        }
    }
    // Truncate to the admissible range; if the primary weights carry no
    // mass there, try the fallback weights, then uniform.
    for w in [weights, fallback] {
        let capped = &w[..(cap as usize).min(w.len())];
        let t: f64 = capped.iter().sum();
        if t > 0.0 {
            return draw_full(rng, capped, t);
        }
    }
    rng.random_range(1..=cap)
}

/// Re-draw every planned missing age in place.
///
/// Affected targets: compute the member's carrier posterior with its age
/// evidence removed (affection evidence is kept as lifetime mass), flip a
/// coin with that probability, and draw the diagnosis age from the carrier
/// curve's conditional onset distribution or from the baseline annual
/// probabilities, capped at the member's censoring age. Unaffected
/// targets: draw the censoring age from the sex-matched empirical pool.
#[allow(clippy::too_many_arguments)]
pub fn impute(
    plan: &ImputationPlan,
    ctx: &FactorContext,
    gm: &GenotypeModel,
    prepared: &[PreparedPedigree],
    pedigrees: &mut [Pedigree],
    rng: &mut ChaCha8Rng,
    iteration: usize,
) -> Result<Vec<ImputationEvent>> {
    let max_age = ctx.max_age;
    let mut events = Vec::new();

    for &(pi, mi) in &plan.affected_targets {
        let ped = &mut pedigrees[pi];
        // Remove the member's age evidence: same member, no diagnosis age,
        // contributes only its "ever affected" lifetime mass.
        let mut factors = ctx.factors_for(ped);
        let mut ghost = ped.members[mi].clone();
        ghost.age_dx = None;
        factors.factors[mi] = ctx.person_factor(&ghost);
        let p_carrier = prepared[pi].carrier_posterior(gm, &factors, mi)?;

        let sex = ped.members[mi].sex;
        let carrier_weights: Vec<f64> = (1..=max_age)
            .map(|a| match sex {
                Sex::Female => ctx.carrier_female.annual(a),
                Sex::Male => ctx.carrier_male.annual(a),
                Sex::Unknown => 0.5 * (ctx.carrier_female.annual(a) + ctx.carrier_male.annual(a)),
            })
            .collect();
        let baseline_weights: Vec<f64> = (1..=max_age)
            .map(|a| ctx.noncarrier_annual(sex, a))
            .collect();
        let cap = ped.members[mi]
            .cur_age
            .unwrap_or(max_age)
            .min(max_age)
            .max(1);
        let age = if rng.random::<f64>() < p_carrier {
            draw_capped_age(&carrier_weights, &baseline_weights, cap, rng)
        } else {
            draw_capped_age(&baseline_weights, &carrier_weights, cap, rng)
        };
        ped.members[mi].age_dx = Some(age);
        events.push(ImputationEvent {
            iteration,
            pedigree_id: ped.id.clone(),
            member_id: ped.members[mi].id,
            field: ImputedField::DiagnosisAge,
            value: age,
        });
    }

    for &(pi, mi) in &plan.unaffected_targets {
        let ped = &mut pedigrees[pi];
        let pool = plan.censor_pool(ped.members[mi].sex);
        let age = pool[rng.random_range(0..pool.len())].min(max_age);
        ped.members[mi].cur_age = Some(age);
        events.push(ImputationEvent {
            iteration,
            pedigree_id: ped.id.clone(),
            member_id: ped.members[mi].id,
            field: ImputedField::CensoringAge,
            value: age,
        });
    }

    Ok(events)
}
