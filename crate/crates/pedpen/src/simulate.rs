//! Synthetic ascertained family studies with known ground truth.
//!
//! Each family is built around a proband: grandparents, parents, aunts and
//! uncles with spouses and children, siblings, a spouse, and children.
//! Founder genotypes are drawn from the population allele frequency and
//! transmitted allele-by-allele; the proband is forced to be a carrier by
//! re-drawing the genotype lineage (ascertainment by carrier status, which
//! the estimation likelihood corrects for by conditioning on the observed
//! proband genotype). Onset ages come from the true carrier curves or the
//! baseline; censoring ages are generation-dependent.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::curve::{BaselineTable, CurveTable, QuantileParams, Sex, WeibullPenetrance};
use crate::error::{Error, Result};
use crate::pedigree::{AffectionStatus, GenotypeStatus, Individual, Pedigree};

/// Count distribution for family-structure knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CountDist {
    Fixed(u32),
    /// Poisson with the given mean, truncated at `max`.
    Poisson {
        lambda: f64,
        max: u32,
    },
}

impl CountDist {
    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        match *self {
            CountDist::Fixed(k) => k,
            CountDist::Poisson { lambda, max } => {
                let d = Poisson::new(lambda).expect("positive lambda");
                (d.sample(rng) as u32).min(max)
            }
        }
    }
}

/// Censoring (current) age model: normal per generation, rounded and
/// clamped to `[1, max_age]`. Generation 0 holds the grandparents,
/// 3 the proband's children.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoringModel {
    pub mean_by_generation: [f64; 4],
    pub sd: f64,
}

impl CensoringModel {
    fn sample(&self, generation: usize, max_age: u32, rng: &mut ChaCha8Rng) -> u32 {
        let normal = Normal::new(self.mean_by_generation[generation], self.sd)
            .expect("finite censoring parameters");
        (normal.sample(rng).round() as i64).clamp(1, max_age as i64) as u32
    }
}

/// Counts controlling the generated topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyStructure {
    pub siblings: CountDist,
    pub children: CountDist,
    pub aunts_uncles_per_side: CountDist,
    pub aunt_uncle_spouse_prob: f64,
    pub aunt_uncle_children: CountDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_probands: usize,
    pub female: WeibullPenetrance,
    pub male: WeibullPenetrance,
    pub prev: f64,
    pub missing_age_dx_rate: f64,
    pub missing_cur_age_rate: f64,
    pub censoring: CensoringModel,
    pub structure: FamilyStructure,
    pub max_age: u32,
    pub seed: u64,
}

impl SimConfig {
    /// Study design mirroring a familial colorectal-cancer setting: rare
    /// carrier prevalence, distinct female/male curves, large ascertained
    /// families.
    pub fn crc_like(n_probands: usize, seed: u64) -> Self {
        let female = QuantileParams {
            asymptote: 0.48,
            threshold: 20.0,
            first_quartile: 42.0,
            median: 52.0,
        }
        .to_weibull()
        .expect("valid preset quantiles");
        let male = QuantileParams {
            asymptote: 0.58,
            threshold: 18.0,
            first_quartile: 40.0,
            median: 50.0,
        }
        .to_weibull()
        .expect("valid preset quantiles");
        Self {
            n_probands,
            female,
            male,
            prev: 0.0001,
            missing_age_dx_rate: 0.0,
            missing_cur_age_rate: 0.0,
            censoring: CensoringModel {
                mean_by_generation: [86.0, 72.0, 57.0, 25.0],
                sd: 8.0,
            },
            structure: FamilyStructure {
                siblings: CountDist::Poisson {
                    lambda: 3.0,
                    max: 10,
                },
                children: CountDist::Poisson {
                    lambda: 2.4,
                    max: 8,
                },
                aunts_uncles_per_side: CountDist::Poisson {
                    lambda: 2.6,
                    max: 8,
                },
                aunt_uncle_spouse_prob: 0.85,
                aunt_uncle_children: CountDist::Poisson {
                    lambda: 2.8,
                    max: 8,
                },
            },
            max_age: 94,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prev > 0.0 && self.prev <= 1.0) {
            return Err(Error::InvalidInput("prev must lie in (0, 1]".into()));
        }
        for r in [self.missing_age_dx_rate, self.missing_cur_age_rate] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidInput(
                    "missingness rates must lie in [0, 1]".into(),
                ));
            }
        }
        if self.max_age == 0 {
            return Err(Error::InvalidInput("max_age must be positive".into()));
        }
        Ok(())
    }
}

/// True parameters written alongside a simulated study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub prev: f64,
    pub max_age: u32,
    pub seed: u64,
    pub n_probands: usize,
    pub female: TrueCurve,
    pub male: TrueCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueCurve {
    pub weibull: WeibullPenetrance,
    pub quantiles: QuantileParams,
}

// ---------------------------------------------------------------------------
// Structure generation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct SimMember {
    sex: Sex,
    /// Indices of (mother, father) in the member vector.
    parents: Option<(usize, usize)>,
    generation: usize,
    is_proband: bool,
}

fn random_sex(rng: &mut ChaCha8Rng) -> Sex {
    if rng.random::<f64>() < 0.5 {
        Sex::Female
    } else {
        Sex::Male
    }
}

fn opposite(sex: Sex) -> Sex {
    match sex {
        Sex::Female => Sex::Male,
        _ => Sex::Female,
    }
}

/// Build the family topology. Parents always precede their children in the
/// returned vector. Returns the members and the proband's index.
fn build_structure(structure: &FamilyStructure, rng: &mut ChaCha8Rng) -> (Vec<SimMember>, usize) {
    let mut members: Vec<SimMember> = Vec::new();
    let mut push = |sex, parents, generation, is_proband| {
        members.push(SimMember {
            sex,
            parents,
            generation,
            is_proband,
        });
        members.len() - 1
    };

    // Grandparents.
    let pat_gm = push(Sex::Female, None, 0, false);
    let pat_gf = push(Sex::Male, None, 0, false);
    let mat_gm = push(Sex::Female, None, 0, false);
    let mat_gf = push(Sex::Male, None, 0, false);

    // Parents.
    let father = push(Sex::Male, Some((pat_gm, pat_gf)), 1, false);
    let mother = push(Sex::Female, Some((mat_gm, mat_gf)), 1, false);

    // Aunts and uncles, with spouses and children.
    for side in [(pat_gm, pat_gf), (mat_gm, mat_gf)] {
        let n_au = structure.aunts_uncles_per_side.sample(rng);
        for _ in 0..n_au {
            let au_sex = random_sex(rng);
            let au = push(au_sex, Some(side), 1, false);
            if rng.random::<f64>() < structure.aunt_uncle_spouse_prob {
                let sp = push(opposite(au_sex), None, 1, false);
                let (m, f) = if au_sex == Sex::Female {
                    (au, sp)
                } else {
                    (sp, au)
                };
                let n_kids = structure.aunt_uncle_children.sample(rng);
                for _ in 0..n_kids {
                    let sex = random_sex(rng);
                    push(sex, Some((m, f)), 2, false);
                }
            }
        }
    }

    // Proband, siblings, spouse, children.
    let proband_sex = random_sex(rng);
    let proband = push(proband_sex, Some((mother, father)), 2, true);
    let n_sib = structure.siblings.sample(rng);
    for _ in 0..n_sib {
        let sex = random_sex(rng);
        push(sex, Some((mother, father)), 2, false);
    }
    let spouse = push(opposite(proband_sex), None, 2, false);
    let (m, f) = if proband_sex == Sex::Female {
        (proband, spouse)
    } else {
        (spouse, proband)
    };
    let n_children = structure.children.sample(rng);
    for _ in 0..n_children {
        let sex = random_sex(rng);
        push(sex, Some((m, f)), 3, false);
    }

    (members, proband)
}

/// Draw two alleles per member (risk allele frequency `q`), Mendelian
/// transmission from parents, re-drawing the proband's ancestral lineage
/// until the proband carries at least one risk allele.
fn assign_alleles(
    members: &[SimMember],
    proband: usize,
    q: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<(u8, u8)> {
    let draw_allele = |rng: &mut ChaCha8Rng| u8::from(rng.random::<f64>() < q);
    let transmit = |pair: (u8, u8), rng: &mut ChaCha8Rng| {
        if rng.random::<f64>() < 0.5 {
            pair.0
        } else {
            pair.1
        }
    };

    let mut alleles = vec![(0u8, 0u8); members.len()];

    // Ancestral lineage of the proband: both parents and all four
    // grandparents, by construction at fixed indices.
    let lineage = {
        let (mo, fa) = members[proband].parents.expect("proband has parents");
        let (mat_gm, mat_gf) = members[mo].parents.expect("mother has parents");
        let (pat_gm, pat_gf) = members[fa].parents.expect("father has parents");
        [pat_gm, pat_gf, mat_gm, mat_gf, fa, mo, proband]
    };
    loop {
        for &i in &lineage {
            alleles[i] = match members[i].parents {
                None => (draw_allele(rng), draw_allele(rng)),
                Some((mo, fa)) => (transmit(alleles[mo], rng), transmit(alleles[fa], rng)),
            };
        }
        let (a, b) = alleles[proband];
        if a + b >= 1 {
            break;
        }
    }

    // Everyone else, parents before children by construction order.
    for (i, m) in members.iter().enumerate() {
        if lineage.contains(&i) {
            continue;
        }
        alleles[i] = match m.parents {
            None => (draw_allele(rng), draw_allele(rng)),
            Some((mo, fa)) => (transmit(alleles[mo], rng), transmit(alleles[fa], rng)),
        };
    }
    alleles
}

/// Onset age implied by a single uniform draw against a cdf on the integer
/// age grid; None when onset does not occur by `max_age`.
fn onset_from_uniform(u: f64, cdf: impl Fn(u32) -> f64, max_age: u32) -> Option<u32> {
    if u >= cdf(max_age) {
        return None;
    }
    (1..=max_age).find(|&a| cdf(a) > u)
}

/// Generate one ascertained pedigree.
pub fn simulate_pedigree(
    cfg: &SimConfig,
    baseline: &BaselineTable,
    rng: &mut ChaCha8Rng,
    pedigree_id: &str,
) -> Pedigree {
    let (members, proband) = build_structure(&cfg.structure, rng);
    let q = 1.0 - (1.0 - cfg.prev).sqrt();
    let alleles = assign_alleles(&members, proband, q, rng);

    let table_f = CurveTable::new(&cfg.female, cfg.max_age);
    let table_m = CurveTable::new(&cfg.male, cfg.max_age);

    let mut out = Vec::with_capacity(members.len());
    for (i, m) in members.iter().enumerate() {
        let carrier = alleles[i].0 + alleles[i].1 >= 1;
        let cur_age = cfg.censoring.sample(m.generation, cfg.max_age, rng);
        let u = rng.random::<f64>();
        let onset = if carrier {
            let table = if m.sex == Sex::Male {
                &table_m
            } else {
                &table_f
            };
            onset_from_uniform(u, |a| table.cdf(a), cfg.max_age)
        } else {
            onset_from_uniform(u, |a| baseline.cdf(m.sex, a), cfg.max_age)
        };
        let affected = onset.map(|o| o <= cur_age).unwrap_or(false);

        let mut ind = Individual {
            id: (i + 1) as u32,
            sex: m.sex,
            mother_id: m.parents.map(|(mo, _)| (mo + 1) as u32),
            father_id: m.parents.map(|(_, fa)| (fa + 1) as u32),
            is_proband: m.is_proband,
            cur_age: Some(cur_age),
            affection: if affected {
                AffectionStatus::Affected
            } else {
                AffectionStatus::Unaffected
            },
            age_dx: if affected { onset } else { None },
            genotype: if m.is_proband {
                GenotypeStatus::Carrier
            } else {
                GenotypeStatus::Unknown
            },
        };

        // Missingness masks; the proband's report is kept complete.
        let mask_dx = rng.random::<f64>() < cfg.missing_age_dx_rate;
        let mask_cur = rng.random::<f64>() < cfg.missing_cur_age_rate;
        if !m.is_proband {
            if mask_dx {
                ind.age_dx = None;
            }
            if mask_cur {
                ind.cur_age = None;
            }
        }
        out.push(ind);
    }

    Pedigree {
        id: pedigree_id.to_string(),
        members: out,
        twin_groups: Vec::new(),
    }
}

/// Generate a whole study: independent families with per-family RNG
/// streams derived from the base seed plus the family index.
pub fn simulate_study(
    cfg: &SimConfig,
    baseline: &BaselineTable,
) -> Result<(Vec<Pedigree>, GroundTruth)> {
    cfg.validate()?;
    let pedigrees = (0..cfg.n_probands)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
            simulate_pedigree(cfg, baseline, &mut rng, &(i + 1).to_string())
        })
        .collect();
    let truth = GroundTruth {
        prev: cfg.prev,
        max_age: cfg.max_age,
        seed: cfg.seed,
        n_probands: cfg.n_probands,
        female: TrueCurve {
            weibull: cfg.female,
            quantiles: cfg.female.to_quantiles(),
        },
        male: TrueCurve {
            weibull: cfg.male,
            quantiles: cfg.male.to_quantiles(),
        },
    };
    Ok((pedigrees, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pedigree::{has_errors, validate};

    #[test]
    fn degenerate_prevalence_makes_everyone_a_carrier() {
        // With prev = 1 the allele frequency is 1, so every drawn and every
        // transmitted allele is the risk allele.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = SimConfig::crc_like(1, 9);
        for _ in 0..20 {
            let (members, proband) = build_structure(&cfg.structure, &mut rng);
            let alleles = assign_alleles(&members, proband, 1.0, &mut rng);
            assert!(alleles.iter().all(|&(a, b)| a + b >= 1));
        }
    }

    #[test]
    fn zero_asymptote_means_zero_affected() {
        let mut cfg = SimConfig::crc_like(5, 11);
        cfg.female = WeibullPenetrance::new(30.0, 3.0, 0.0, 20.0).unwrap();
        cfg.male = WeibullPenetrance::new(30.0, 3.0, 0.0, 20.0).unwrap();
        cfg.prev = 1.0; // everyone is a carrier, so the baseline never applies
        let baseline = BaselineTable::bundled_default();
        let (peds, _) = simulate_study(&cfg, &baseline).unwrap();
        let affected = peds
            .iter()
            .flat_map(|p| &p.members)
            .filter(|m| m.affection == AffectionStatus::Affected)
            .count();
        assert_eq!(affected, 0);
    }

    #[test]
    fn fixed_seed_reproduces_study() {
        let cfg = SimConfig::crc_like(4, 123);
        let baseline = BaselineTable::bundled_default();
        let a = simulate_study(&cfg, &baseline).unwrap();
        let b = simulate_study(&cfg, &baseline).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn zero_probands_gives_empty_study() {
        let cfg = SimConfig::crc_like(0, 1);
        let baseline = BaselineTable::bundled_default();
        let (peds, truth) = simulate_study(&cfg, &baseline).unwrap();
        assert!(peds.is_empty());
        assert_eq!(truth.n_probands, 0);
    }

    #[test]
    fn generated_pedigrees_validate_cleanly() {
        let mut cfg = SimConfig::crc_like(10, 7);
        cfg.prev = 0.01; // keep the rejection loop fast in tests
        cfg.missing_age_dx_rate = 0.2;
        cfg.missing_cur_age_rate = 0.2;
        let baseline = BaselineTable::bundled_default();
        let (peds, _) = simulate_study(&cfg, &baseline).unwrap();
        for ped in &peds {
            let issues = validate(ped, cfg.max_age);
            assert!(!has_errors(&issues), "{:?}", issues);
        }
    }

    #[test]
    fn alleles_transmit_mendelian_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = SimConfig::crc_like(1, 3);
        for _ in 0..50 {
            let (members, proband) = build_structure(&cfg.structure, &mut rng);
            let alleles = assign_alleles(&members, proband, 0.3, &mut rng);
            assert!(alleles[proband].0 + alleles[proband].1 >= 1);
            for (i, m) in members.iter().enumerate() {
                if let Some((mo, fa)) = m.parents {
                    let (mat, pat) = alleles[i];
                    assert!(mat == alleles[mo].0 || mat == alleles[mo].1);
                    assert!(pat == alleles[fa].0 || pat == alleles[fa].1);
                }
            }
        }
    }

    #[test]
    fn carrier_onset_draws_match_true_cdf() {
        // KS distance between the empirical onset distribution and the
        // curve cdf over the integer grid, 1e5 draws.
        let curve = WeibullPenetrance::new(30.0, 3.0, 0.8, 20.0).unwrap();
        let table = CurveTable::new(&curve, 94);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut counts = vec![0u32; 95];
        for _ in 0..n {
            let u = rng.random::<f64>();
            if let Some(a) = onset_from_uniform(u, |a| table.cdf(a), 94) {
                counts[a as usize] += 1;
            }
        }
        let mut acc = 0.0;
        let mut ks: f64 = 0.0;
        for a in 1..=94u32 {
            acc += counts[a as usize] as f64 / n as f64;
            ks = ks.max((acc - table.cdf(a)).abs());
        }
        assert!(ks < 0.03, "KS distance {ks}");
    }

    #[test]
    fn noncarrier_onset_draws_match_baseline_cdf() {
        let baseline = BaselineTable::bundled_default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 100_000;
        let mut counts = vec![0u32; 95];
        for _ in 0..n {
            let u = rng.random::<f64>();
            if let Some(a) = onset_from_uniform(u, |a| baseline.cdf(Sex::Male, a), 94) {
                counts[a as usize] += 1;
            }
        }
        let mut acc = 0.0;
        let mut ks: f64 = 0.0;
        for a in 1..=94u32 {
            acc += counts[a as usize] as f64 / n as f64;
            ks = ks.max((acc - baseline.cdf(Sex::Male, a)).abs());
        }
        assert!(ks < 0.03, "KS distance {ks}");
    }
}
