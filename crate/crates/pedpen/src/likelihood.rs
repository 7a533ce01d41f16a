//! Exact pedigree likelihoods for a single biallelic autosomal locus.
//!
//! Genotypes are tracked internally as the number of risk alleles (0, 1, 2)
//! so that transmission probabilities for the collapsed carrier classes are
//! exact; person-level evidence only distinguishes carrier (1 or 2 alleles)
//! from noncarrier (0). The likelihood is computed by peeling: sum-product
//! over the bipartite graph of genotype variables and nuclear families,
//! which is linear in family count on loop-free pedigrees. A brute-force
//! enumeration over genotype assignments serves as the defining reference
//! for small pedigrees.
//!
//! Identical twins and triplets share one genotype variable, so a twin
//! group contributes a single founder prior or a single transmission term.

use std::collections::HashMap;

use crate::curve::{BaselineTable, CurveTable, Sex};
use crate::error::{Error, Result};
use crate::pedigree::{AffectionStatus, GenotypeStatus, Individual, Pedigree};

/// Largest member count accepted by the brute-force oracle.
pub const BRUTE_FORCE_LIMIT: usize = 12;

// ---------------------------------------------------------------------------
// Genotype model
// ---------------------------------------------------------------------------

/// Convert a carrier prevalence into the risk-allele frequency `q` with
/// `1 - (1 - q)^2 = prev` under Hardy-Weinberg equilibrium.
pub fn prev_to_allele_freq(prev: f64) -> Result<f64> {
    if !(prev > 0.0 && prev < 1.0) {
        return Err(Error::InvalidInput(format!(
            "prevalence must lie in (0, 1), got {prev}"
        )));
    }
    Ok(1.0 - (1.0 - prev).sqrt())
}

/// Single biallelic autosomal locus in Hardy-Weinberg equilibrium.
#[derive(Debug, Clone, Copy)]
pub struct GenotypeModel {
    allele_freq: f64,
    founder_prior: [f64; 3],
    /// transmission[gm][gf][gc] = P(child has gc risk alleles | parents).
    transmission: [[[f64; 3]; 3]; 3],
}

impl GenotypeModel {
    pub fn new(allele_freq: f64) -> Result<Self> {
        if !(allele_freq > 0.0 && allele_freq < 0.5) {
            return Err(Error::InvalidInput(format!(
                "allele frequency must lie in (0, 0.5), got {allele_freq}"
            )));
        }
        let q = allele_freq;
        let founder_prior = [(1.0 - q) * (1.0 - q), 2.0 * q * (1.0 - q), q * q];
        let mut transmission = [[[0.0; 3]; 3]; 3];
        for gm in 0..3 {
            for gf in 0..3 {
                // Probability each parent transmits the risk allele.
                let tm = gm as f64 / 2.0;
                let tf = gf as f64 / 2.0;
                transmission[gm][gf][0] = (1.0 - tm) * (1.0 - tf);
                transmission[gm][gf][1] = tm * (1.0 - tf) + (1.0 - tm) * tf;
                transmission[gm][gf][2] = tm * tf;
            }
        }
        Ok(Self {
            allele_freq: q,
            founder_prior,
            transmission,
        })
    }

    pub fn from_prevalence(prev: f64) -> Result<Self> {
        Self::new(prev_to_allele_freq(prev)?)
    }

    pub fn allele_freq(&self) -> f64 {
        self.allele_freq
    }

    /// Founder carrier probability; equals the prevalence this model was
    /// built from.
    pub fn prevalence(&self) -> f64 {
        self.founder_prior[1] + self.founder_prior[2]
    }

    pub fn founder_prior(&self) -> &[f64; 3] {
        &self.founder_prior
    }
}

// ---------------------------------------------------------------------------
// Person factors
// ---------------------------------------------------------------------------

/// Per-member likelihood factors: `(f_carrier, f_noncarrier)`, both in
/// [0, 1]. A fully unobserved person contributes `(1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonFactors {
    /// Indexed like `Pedigree::members`.
    pub factors: Vec<(f64, f64)>,
}

/// Risk model for noncarriers: the population baseline by default, or
/// explicit per-sex curves when the baseline approximation is switched off.
#[derive(Debug, Clone, Copy)]
pub enum NoncarrierModel<'a> {
    Baseline(&'a BaselineTable),
    Curves {
        female: &'a CurveTable,
        male: &'a CurveTable,
    },
}

impl NoncarrierModel<'_> {
    fn annual(&self, sex: Sex, age: u32) -> f64 {
        match self {
            NoncarrierModel::Baseline(b) => b.annual(sex, age),
            NoncarrierModel::Curves { female, male } => match sex {
                Sex::Female => female.annual(age),
                Sex::Male => male.annual(age),
                Sex::Unknown => 0.5 * (female.annual(age) + male.annual(age)),
            },
        }
    }

    fn cdf(&self, sex: Sex, age: u32) -> f64 {
        match self {
            NoncarrierModel::Baseline(b) => b.cdf(sex, age),
            NoncarrierModel::Curves { female, male } => match sex {
                Sex::Female => female.cdf(age),
                Sex::Male => male.cdf(age),
                Sex::Unknown => 0.5 * (female.cdf(age) + male.cdf(age)),
            },
        }
    }
}

/// Everything needed to turn one individual's observations into factors.
#[derive(Debug, Clone, Copy)]
pub struct FactorContext<'a> {
    pub carrier_female: &'a CurveTable,
    pub carrier_male: &'a CurveTable,
    pub noncarrier: NoncarrierModel<'a>,
    pub max_age: u32,
    /// Drop the proband's phenotype and genotype evidence (ascertainment
    /// correction); the individual stays in the pedigree.
    pub remove_proband: bool,
}

impl FactorContext<'_> {
    /// Likelihood factors for one individual.
    ///
    /// Affected with a diagnosis age contribute the onset probability in
    /// that year; unaffected with a censoring age contribute survival
    /// through it; affected with no age contribute lifetime ("ever
    /// affected") mass; everyone else contributes `(1, 1)`. An observed
    /// genotype zeroes the contradicted side. Unknown-sex individuals are
    /// averaged over the two sexes with weight one half each.
    pub fn person_factor(&self, ind: &Individual) -> (f64, f64) {
        if self.remove_proband && ind.is_proband {
            return (1.0, 1.0);
        }
        let (mut fc, mut fnc) = match ind.sex {
            Sex::Female | Sex::Male => self.phenotype_factor(ind, ind.sex),
            Sex::Unknown => {
                let (fcf, fnf) = self.phenotype_factor(ind, Sex::Female);
                let (fcm, fnm) = self.phenotype_factor(ind, Sex::Male);
                (0.5 * (fcf + fcm), 0.5 * (fnf + fnm))
            }
        };
        match ind.genotype {
            GenotypeStatus::Carrier => fnc = 0.0,
            GenotypeStatus::Noncarrier => fc = 0.0,
            GenotypeStatus::Unknown => {}
        }
        (fc, fnc)
    }

    fn phenotype_factor(&self, ind: &Individual, sex: Sex) -> (f64, f64) {
        let carrier = match sex {
            Sex::Male => self.carrier_male,
            _ => self.carrier_female,
        };
        match ind.affection {
            AffectionStatus::Affected => match ind.age_dx {
                Some(a) => {
                    let a = a.clamp(1, self.max_age);
                    (carrier.annual(a), self.noncarrier.annual(sex, a))
                }
                None => (carrier.gamma, self.noncarrier.cdf(sex, self.max_age)),
            },
            AffectionStatus::Unaffected => match ind.cur_age {
                Some(c) => {
                    let c = c.min(self.max_age);
                    (carrier.survival(c), 1.0 - self.noncarrier.cdf(sex, c))
                }
                None => (1.0, 1.0),
            },
            AffectionStatus::Unknown => (1.0, 1.0),
        }
    }

    /// Factors for every member of a pedigree.
    pub fn factors_for(&self, ped: &Pedigree) -> PersonFactors {
        PersonFactors {
            factors: ped.members.iter().map(|m| self.person_factor(m)).collect(),
        }
    }

    /// Annual noncarrier onset probability, whichever model backs it.
    pub fn noncarrier_annual(&self, sex: Sex, age: u32) -> f64 {
        self.noncarrier.annual(sex, age)
    }
}

// ---------------------------------------------------------------------------
// Peeling structure
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Family {
    mother: usize,
    father: usize,
    children: Vec<usize>,
}

/// Static peeling structure for one pedigree: genotype variables (twin
/// groups merged), nuclear families, and the rooted traversal order over
/// the bipartite variable/family graph. Build once, evaluate per proposal.
#[derive(Debug, Clone)]
pub struct PreparedPedigree {
    n_members: usize,
    n_vars: usize,
    var_of_member: Vec<usize>,
    var_is_founder: Vec<bool>,
    /// Parent variables of each non-founder variable (mother, father).
    var_parents: Vec<Option<(usize, usize)>>,
    families: Vec<Family>,
    /// Bipartite adjacency: nodes 0..n_vars are variables, the rest are
    /// families.
    adj: Vec<Vec<usize>>,
    /// Post-order traversal (children before parents) and parent pointers.
    order: Vec<usize>,
    parent: Vec<Option<usize>>,
}

impl PreparedPedigree {
    pub fn new(ped: &Pedigree) -> Result<Self> {
        let n = ped.members.len();
        if n == 0 {
            return Err(Error::InvalidInput(format!(
                "pedigree {} has no members",
                ped.id
            )));
        }
        let index_of: HashMap<u32, usize> = ped
            .members
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id, i))
            .collect();

        // Merge twin groups into shared genotype variables.
        let mut var_of_member = vec![usize::MAX; n];
        let mut members_of_var: Vec<Vec<usize>> = Vec::new();
        for group in &ped.twin_groups {
            let var = members_of_var.len();
            let mut members = Vec::new();
            let mut parents: Option<(Option<u32>, Option<u32>)> = None;
            for &mid in group {
                let &mi = index_of.get(&mid).ok_or_else(|| {
                    Error::UnsupportedStructure(format!(
                        "pedigree {}: twin group references unknown member {mid}",
                        ped.id
                    ))
                })?;
                if var_of_member[mi] != usize::MAX {
                    return Err(Error::UnsupportedStructure(format!(
                        "pedigree {}: member {mid} appears in more than one twin group",
                        ped.id
                    )));
                }
                let p = (ped.members[mi].mother_id, ped.members[mi].father_id);
                match parents {
                    None => parents = Some(p),
                    Some(prev) if prev != p => {
                        return Err(Error::UnsupportedStructure(format!(
                            "pedigree {}: twin group members do not share both parents",
                            ped.id
                        )))
                    }
                    _ => {}
                }
                var_of_member[mi] = var;
                members.push(mi);
            }
            members_of_var.push(members);
        }
        for mi in 0..n {
            if var_of_member[mi] == usize::MAX {
                var_of_member[mi] = members_of_var.len();
                members_of_var.push(vec![mi]);
            }
        }
        let n_vars = members_of_var.len();

        // Nuclear families keyed by the parent couple.
        let mut var_is_founder = vec![true; n_vars];
        let mut var_parents = vec![None; n_vars];
        let mut families: Vec<Family> = Vec::new();
        let mut family_of_couple: HashMap<(usize, usize), usize> = HashMap::new();
        for v in 0..n_vars {
            let rep = members_of_var[v][0];
            let (mid, fid) = match (ped.members[rep].mother_id, ped.members[rep].father_id) {
                (Some(m), Some(f)) => (m, f),
                (None, None) => continue,
                _ => {
                    return Err(Error::UnsupportedStructure(format!(
                        "pedigree {}: member {} has exactly one recorded parent",
                        ped.id, ped.members[rep].id
                    )))
                }
            };
            let lookup = |id: u32| {
                index_of.get(&id).copied().ok_or_else(|| {
                    Error::UnsupportedStructure(format!(
                        "pedigree {}: parent id {id} does not exist",
                        ped.id
                    ))
                })
            };
            let mv = var_of_member[lookup(mid)?];
            let fv = var_of_member[lookup(fid)?];
            var_is_founder[v] = false;
            var_parents[v] = Some((mv, fv));
            let fam = *family_of_couple.entry((mv, fv)).or_insert_with(|| {
                families.push(Family {
                    mother: mv,
                    father: fv,
                    children: Vec::new(),
                });
                families.len() - 1
            });
            families[fam].children.push(v);
        }

        // Bipartite adjacency and tree check per component.
        let n_nodes = n_vars + families.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for (fi, fam) in families.iter().enumerate() {
            let fnode = n_vars + fi;
            for &v in [fam.mother, fam.father].iter().chain(fam.children.iter()) {
                adj[fnode].push(v);
                adj[v].push(fnode);
            }
        }

        let mut parent = vec![None; n_nodes];
        let mut order = Vec::with_capacity(n_nodes);
        let mut visited = vec![false; n_nodes];
        for start in 0..n_vars {
            if visited[start] {
                continue;
            }
            // Iterative DFS recording post-order.
            let mut stack = vec![(start, 0usize)];
            visited[start] = true;
            let mut component_nodes = 0usize;
            let mut component_edges = 0usize;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if *next == 0 {
                    component_nodes += 1;
                    component_edges += adj[node].len();
                }
                if *next < adj[node].len() {
                    let nb = adj[node][*next];
                    *next += 1;
                    if !visited[nb] {
                        visited[nb] = true;
                        parent[nb] = Some(node);
                        stack.push((nb, 0));
                    }
                } else {
                    order.push(node);
                    stack.pop();
                }
            }
            // Every component must be a tree; marriage loops and
            // consanguinity show up as extra edges.
            if component_edges / 2 != component_nodes - 1 {
                return Err(Error::UnsupportedStructure(format!(
                    "pedigree {}: contains a marriage loop or inbreeding; peeling supports \
                     loop-free pedigrees only",
                    ped.id
                )));
            }
        }

        Ok(Self {
            n_members: n,
            n_vars,
            var_of_member,
            var_is_founder,
            var_parents,
            families,
            adj,
            order,
            parent,
        })
    }

    pub fn n_members(&self) -> usize {
        self.n_members
    }

    fn evidence(&self, factors: &PersonFactors, clamp_carrier: Option<usize>) -> Vec<[f64; 3]> {
        let mut ev = vec![[1.0; 3]; self.n_vars];
        for (&var, &(fc, fnc)) in self.var_of_member.iter().zip(&factors.factors) {
            let e = &mut ev[var];
            e[0] *= fnc;
            e[1] *= fc;
            e[2] *= fc;
        }
        if let Some(mi) = clamp_carrier {
            ev[self.var_of_member[mi]][0] = 0.0;
        }
        ev
    }

    /// Log-likelihood by sum-product peeling. Returns negative infinity
    /// when the evidence has zero probability.
    pub fn loglik(&self, gm: &GenotypeModel, factors: &PersonFactors) -> f64 {
        self.peel(gm, factors, None)
    }

    fn peel(
        &self,
        gm: &GenotypeModel,
        factors: &PersonFactors,
        clamp_carrier: Option<usize>,
    ) -> f64 {
        assert_eq!(
            factors.factors.len(),
            self.n_members,
            "factors must cover every member"
        );
        let ev = self.evidence(factors, clamp_carrier);
        let trans = &gm.transmission;

        // Base vector per variable: evidence, plus the founder prior.
        let base = |v: usize| -> [f64; 3] {
            let mut b = ev[v];
            if self.var_is_founder[v] {
                for g in 0..3 {
                    b[g] *= gm.founder_prior[g];
                }
            }
            b
        };

        let mut msg: Vec<[f64; 3]> = vec![[1.0; 3]; self.adj.len()];
        let mut log_scale = 0.0f64;

        for &node in &self.order {
            let is_root = self.parent[node].is_none();
            let out = if node < self.n_vars {
                // Variable node: base times messages from child families.
                let mut out = base(node);
                for &nb in &self.adj[node] {
                    if self.parent[nb] == Some(node) {
                        for g in 0..3 {
                            out[g] *= msg[nb][g];
                        }
                    }
                }
                out
            } else {
                // Family node: absorb children sums, then marginalize over
                // the parent couple toward whichever neighbor is up-tree.
                let fam = &self.families[node - self.n_vars];
                let up = self.parent[node].expect("family nodes always have an up-tree variable");
                // child_sum[gm][gf] = product over down-tree children of
                // sum_gc T(gc|gm,gf) msg_child(gc)
                let mut child_sum = [[1.0f64; 3]; 3];
                let mut up_is_child = false;
                for &c in &fam.children {
                    if c == up {
                        up_is_child = true;
                        continue;
                    }
                    for gmo in 0..3 {
                        for gfa in 0..3 {
                            let mut s = 0.0;
                            for gc in 0..3 {
                                s += trans[gmo][gfa][gc] * msg[c][gc];
                            }
                            child_sum[gmo][gfa] *= s;
                        }
                    }
                }
                let mut out = [0.0f64; 3];
                if up_is_child {
                    for gmo in 0..3 {
                        for gfa in 0..3 {
                            let w =
                                msg[fam.mother][gmo] * msg[fam.father][gfa] * child_sum[gmo][gfa];
                            if w == 0.0 {
                                continue;
                            }
                            for gc in 0..3 {
                                out[gc] += w * trans[gmo][gfa][gc];
                            }
                        }
                    }
                } else if up == fam.mother {
                    for gmo in 0..3 {
                        let mut s = 0.0;
                        for gfa in 0..3 {
                            s += msg[fam.father][gfa] * child_sum[gmo][gfa];
                        }
                        out[gmo] = s;
                    }
                } else {
                    debug_assert_eq!(up, fam.father);
                    for gfa in 0..3 {
                        let mut s = 0.0;
                        for gmo in 0..3 {
                            s += msg[fam.mother][gmo] * child_sum[gmo][gfa];
                        }
                        out[gfa] = s;
                    }
                }
                out
            };

            if is_root {
                // Root of a component (always a variable node); its
                // combined vector sums to that component's likelihood.
                let sum: f64 = out.iter().sum();
                if sum <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                log_scale += sum.ln();
            } else {
                let peak = out.iter().cloned().fold(0.0f64, f64::max);
                if peak <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                log_scale += peak.ln();
                msg[node] = [out[0] / peak, out[1] / peak, out[2] / peak];
            }
        }
        log_scale
    }

    /// Posterior carrier probability of one member given all pedigree
    /// evidence, via two peeling passes (clamp to carrier, renormalize).
    pub fn carrier_posterior(
        &self,
        gm: &GenotypeModel,
        factors: &PersonFactors,
        member_index: usize,
    ) -> Result<f64> {
        let total = self.peel(gm, factors, None);
        if !total.is_finite() {
            return Err(Error::InvalidInput(
                "carrier posterior undefined: pedigree evidence has zero probability".into(),
            ));
        }
        let clamped = self.peel(gm, factors, Some(member_index));
        if clamped == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok((clamped - total).exp().clamp(0.0, 1.0))
    }
}

/// One-shot peeling likelihood; builds the structure and evaluates.
pub fn pedigree_loglik(ped: &Pedigree, factors: &PersonFactors, gm: &GenotypeModel) -> Result<f64> {
    Ok(PreparedPedigree::new(ped)?.loglik(gm, factors))
}

/// One-shot posterior carrier probability for the member with the given id.
pub fn carrier_posterior(
    ped: &Pedigree,
    factors: &PersonFactors,
    gm: &GenotypeModel,
    member_id: u32,
) -> Result<f64> {
    let idx = ped.member_index(member_id).ok_or_else(|| {
        Error::InvalidInput(format!("member {member_id} not in pedigree {}", ped.id))
    })?;
    PreparedPedigree::new(ped)?.carrier_posterior(gm, factors, idx)
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

fn brute_force_sums(
    ped: &Pedigree,
    factors: &PersonFactors,
    gm: &GenotypeModel,
    carrier_member: Option<usize>,
) -> Result<(f64, f64)> {
    if ped.members.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::PedigreeTooLarge {
            members: ped.members.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let prep = PreparedPedigree::new(ped)?;
    let ev = prep.evidence(factors, None);
    let n_vars = prep.n_vars;
    let mut assignment = vec![0usize; n_vars];
    let mut total = 0.0f64;
    let mut restricted = 0.0f64;
    loop {
        let mut p = 1.0f64;
        for v in 0..n_vars {
            let g = assignment[v];
            p *= ev[v][g];
            p *= match prep.var_parents[v] {
                None => gm.founder_prior[g],
                Some((mv, fv)) => gm.transmission[assignment[mv]][assignment[fv]][g],
            };
            if p == 0.0 {
                break;
            }
        }
        total += p;
        if let Some(mi) = carrier_member {
            if assignment[prep.var_of_member[mi]] >= 1 {
                restricted += p;
            }
        }
        // Next assignment in base 3.
        let mut k = 0;
        loop {
            if k == n_vars {
                return Ok((total, restricted));
            }
            assignment[k] += 1;
            if assignment[k] < 3 {
                break;
            }
            assignment[k] = 0;
            k += 1;
        }
    }
}

/// Exact log-likelihood by enumeration over all genotype assignments.
/// Defining reference for `pedigree_loglik`; limited to small pedigrees.
pub fn brute_force_loglik(
    ped: &Pedigree,
    factors: &PersonFactors,
    gm: &GenotypeModel,
) -> Result<f64> {
    let (total, _) = brute_force_sums(ped, factors, gm, None)?;
    Ok(total.ln())
}

/// Exact carrier posterior by enumeration; test oracle for
/// `carrier_posterior`.
pub fn brute_force_carrier_posterior(
    ped: &Pedigree,
    factors: &PersonFactors,
    gm: &GenotypeModel,
    member_id: u32,
) -> Result<f64> {
    let idx = ped.member_index(member_id).ok_or_else(|| {
        Error::InvalidInput(format!("member {member_id} not in pedigree {}", ped.id))
    })?;
    let (total, restricted) = brute_force_sums(ped, factors, gm, Some(idx))?;
    if total <= 0.0 {
        return Err(Error::InvalidInput(
            "carrier posterior undefined: pedigree evidence has zero probability".into(),
        ));
    }
    Ok(restricted / total)
}
