//! Pedigree data model: ingest tabular family-history files, validate
//! structural integrity, and expose the parent graph.
//!
//! The tabular schema has ten columns per family member:
//! `PedigreeID, ID, Sex, MotherID, FatherID, isProband, CurAge, isAff, Age,
//! Geno`. Missing values may be empty or `NA`. `isAff`, `Geno` decode
//! 1/0/NA to affected/unaffected/unknown and carrier/noncarrier/unknown;
//! `Sex` accepts 0/F/female and 1/M/male.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::curve::Sex;
use crate::error::{Error, Result};

pub const SCHEMA_COLUMNS: [&str; 10] = [
    "PedigreeID",
    "ID",
    "Sex",
    "MotherID",
    "FatherID",
    "isProband",
    "CurAge",
    "isAff",
    "Age",
    "Geno",
];

/// Disease status of an individual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AffectionStatus {
    Affected,
    Unaffected,
    Unknown,
}

/// Carrier status of an individual at the modeled locus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenotypeStatus {
    Carrier,
    Noncarrier,
    Unknown,
}

/// One family member.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    /// Positive integer, unique within the pedigree.
    pub id: u32,
    pub sex: Sex,
    pub mother_id: Option<u32>,
    pub father_id: Option<u32>,
    pub is_proband: bool,
    /// Censoring age: current age if alive, age at death otherwise.
    pub cur_age: Option<u32>,
    pub affection: AffectionStatus,
    /// Age at diagnosis; present only for affected individuals.
    pub age_dx: Option<u32>,
    pub genotype: GenotypeStatus,
}

impl Individual {
    pub fn is_founder(&self) -> bool {
        self.mother_id.is_none() && self.father_id.is_none()
    }
}

/// One family tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Pedigree {
    pub id: String,
    pub members: Vec<Individual>,
    /// Monozygotic groups, as sets of member ids. Members of a group share
    /// one genotype.
    pub twin_groups: Vec<Vec<u32>>,
}

impl Pedigree {
    pub fn member(&self, id: u32) -> Option<&Individual> {
        self.members.iter().find(|m| m.id == id)
    }

    pub fn member_index(&self, id: u32) -> Option<usize> {
        self.members.iter().position(|m| m.id == id)
    }

    /// Ids of members with no recorded parents.
    pub fn founders(&self) -> BTreeSet<u32> {
        self.members
            .iter()
            .filter(|m| m.is_founder())
            .map(|m| m.id)
            .collect()
    }

    /// Copy with all ages clamped to `max_age`.
    pub fn clamped_to(&self, max_age: u32) -> Pedigree {
        let mut out = self.clone();
        for m in &mut out.members {
            if let Some(a) = m.cur_age.as_mut() {
                *a = (*a).min(max_age);
            }
            if let Some(a) = m.age_dx.as_mut() {
                *a = (*a).min(max_age);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// Blocks estimation.
    Error,
    /// Reported but does not block estimation.
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueCode {
    DanglingParent,
    SingleParent,
    MotherNotFemale,
    FatherNotMale,
    ParentCycle,
    AgeDxWithoutAffected,
    AgeDxExceedsCurAge,
    AgeZero,
    AgeAboveMax,
    TwinGroupTooSmall,
    TwinUnknownMember,
    TwinParentMismatch,
    NoProband,
    MultipleProbands,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationIssue {
    pub pedigree_id: String,
    pub member_id: Option<u32>,
    pub severity: Severity,
    pub code: IssueCode,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.member_id {
            Some(id) => write!(
                f,
                "[{sev}] pedigree {} member {id}: {}",
                self.pedigree_id, self.message
            ),
            None => write!(f, "[{sev}] pedigree {}: {}", self.pedigree_id, self.message),
        }
    }
}

/// Check every structural invariant of a parsed pedigree. Issues are
/// returned, never thrown; callers decide whether errors block.
pub fn validate(ped: &Pedigree, max_age: u32) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let ids: HashMap<u32, usize> = ped
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| (m.id, i))
        .collect();
    let mut push = |member_id: Option<u32>, severity, code, message: String| {
        issues.push(ValidationIssue {
            pedigree_id: ped.id.clone(),
            member_id,
            severity,
            code,
            message,
        });
    };

    for m in &ped.members {
        match (m.mother_id, m.father_id) {
            (Some(_), None) | (None, Some(_)) => push(
                Some(m.id),
                Severity::Error,
                IssueCode::SingleParent,
                "exactly one parent recorded; founders must have neither".into(),
            ),
            _ => {}
        }
        for (parent, which) in [(m.mother_id, "mother"), (m.father_id, "father")] {
            if let Some(pid) = parent {
                match ids.get(&pid) {
                    None => push(
                        Some(m.id),
                        Severity::Error,
                        IssueCode::DanglingParent,
                        format!("{which} id {pid} does not exist in this pedigree"),
                    ),
                    Some(&pi) => {
                        let psex = ped.members[pi].sex;
                        if which == "mother" && psex == Sex::Male {
                            push(
                                Some(m.id),
                                Severity::Error,
                                IssueCode::MotherNotFemale,
                                format!("mother {pid} has sex male"),
                            );
                        }
                        if which == "father" && psex == Sex::Female {
                            push(
                                Some(m.id),
                                Severity::Error,
                                IssueCode::FatherNotMale,
                                format!("father {pid} has sex female"),
                            );
                        }
                    }
                }
            }
        }
        if m.age_dx.is_some() && m.affection != AffectionStatus::Affected {
            push(
                Some(m.id),
                Severity::Error,
                IssueCode::AgeDxWithoutAffected,
                "diagnosis age recorded but individual is not affected".into(),
            );
        }
        if let (Some(dx), Some(cur)) = (m.age_dx, m.cur_age) {
            if dx > cur {
                push(
                    Some(m.id),
                    Severity::Error,
                    IssueCode::AgeDxExceedsCurAge,
                    format!("diagnosis age {dx} exceeds censoring age {cur}"),
                );
            }
        }
        for (age, what) in [(m.cur_age, "censoring age"), (m.age_dx, "diagnosis age")] {
            match age {
                Some(0) => push(
                    Some(m.id),
                    Severity::Error,
                    IssueCode::AgeZero,
                    format!("{what} must be at least 1"),
                ),
                Some(a) if a > max_age => push(
                    Some(m.id),
                    Severity::Warning,
                    IssueCode::AgeAboveMax,
                    format!("{what} {a} exceeds max_age {max_age}; it will be clamped"),
                ),
                _ => {}
            }
        }
    }

    // Cycles in the parent graph (an individual being its own ancestor).
    let n = ped.members.len();
    let mut state = vec![0u8; n]; // 0 unvisited, 1 in progress, 2 done
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state[start] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let parents = [ped.members[v].mother_id, ped.members[v].father_id];
            let mut advanced = false;
            while *next < 2 {
                let p = parents[*next];
                *next += 1;
                if let Some(pi) = p.and_then(|pid| ids.get(&pid).copied()) {
                    match state[pi] {
                        0 => {
                            state[pi] = 1;
                            stack.push((pi, 0));
                            advanced = true;
                            break;
                        }
                        1 => {
                            push(
                                Some(ped.members[pi].id),
                                Severity::Error,
                                IssueCode::ParentCycle,
                                "individual is its own ancestor".into(),
                            );
                        }
                        _ => {}
                    }
                }
            }
            if !advanced
                && stack
                    .last()
                    .map(|&(v2, n2)| v2 == v && n2 >= 2)
                    .unwrap_or(false)
            {
                state[v] = 2;
                stack.pop();
            }
        }
    }

    // Twin groups: at least two members, all known, sharing both parents.
    for (gi, group) in ped.twin_groups.iter().enumerate() {
        if group.len() < 2 {
            push(
                None,
                Severity::Error,
                IssueCode::TwinGroupTooSmall,
                format!("twin group {gi} has fewer than 2 members"),
            );
            continue;
        }
        let mut parents: Option<(Option<u32>, Option<u32>)> = None;
        for &mid in group {
            match ids.get(&mid) {
                None => push(
                    Some(mid),
                    Severity::Error,
                    IssueCode::TwinUnknownMember,
                    format!("twin group {gi} references unknown member {mid}"),
                ),
                Some(&i) => {
                    let p = (ped.members[i].mother_id, ped.members[i].father_id);
                    match parents {
                        None => parents = Some(p),
                        Some(prev) if prev != p => push(
                            Some(mid),
                            Severity::Error,
                            IssueCode::TwinParentMismatch,
                            format!("twin group {gi} members do not share both parents"),
                        ),
                        _ => {}
                    }
                }
            }
        }
    }

    let probands = ped.members.iter().filter(|m| m.is_proband).count();
    if probands == 0 {
        push(
            None,
            Severity::Warning,
            IssueCode::NoProband,
            "no proband designated".into(),
        );
    } else if probands > 1 {
        push(
            None,
            Severity::Warning,
            IssueCode::MultipleProbands,
            format!("{probands} probands designated"),
        );
    }

    issues
}

pub fn has_errors(issues: &[ValidationIssue]) -> bool {
    issues.iter().any(|i| i.severity == Severity::Error)
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

fn is_missing(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na")
}

fn parse_sex(s: &str) -> Result<Sex> {
    if is_missing(s) {
        return Ok(Sex::Unknown);
    }
    match s.trim().to_ascii_lowercase().as_str() {
        "0" | "f" | "female" => Ok(Sex::Female),
        "1" | "m" | "male" => Ok(Sex::Male),
        other => Err(Error::Parse(format!("unrecognized sex code '{other}'"))),
    }
}

fn parse_tristate(s: &str, what: &str) -> Result<Option<bool>> {
    if is_missing(s) {
        return Ok(None);
    }
    match s.trim() {
        "1" => Ok(Some(true)),
        "0" => Ok(Some(false)),
        other => Err(Error::Parse(format!(
            "unrecognized {what} code '{other}' (want 0, 1 or NA)"
        ))),
    }
}

fn parse_opt_age(s: &str, what: &str) -> Result<Option<u32>> {
    if is_missing(s) {
        return Ok(None);
    }
    // Tolerate a decimal point from spreadsheet exports as long as the value
    // is integral.
    let t = s.trim();
    if let Ok(v) = t.parse::<u32>() {
        return Ok(Some(v));
    }
    if let Ok(v) = t.parse::<f64>() {
        if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 {
            return Ok(Some(v as u32));
        }
    }
    Err(Error::Parse(format!("non-numeric {what} '{t}'")))
}

fn parse_opt_id(s: &str, what: &str) -> Result<Option<u32>> {
    match parse_opt_age(s, what)? {
        // 0 is a conventional founder marker in linkage formats.
        Some(0) | None => Ok(None),
        Some(v) => Ok(Some(v)),
    }
}

struct RawRow {
    pedigree_id: String,
    individual: Individual,
}

fn row_from_fields(fields: &[&str]) -> Result<RawRow> {
    let id = parse_opt_id(fields[1], "ID")?
        .ok_or_else(|| Error::Parse(format!("non-numeric id '{}'", fields[1])))?;
    let affection = match parse_tristate(fields[7], "isAff")? {
        Some(true) => AffectionStatus::Affected,
        Some(false) => AffectionStatus::Unaffected,
        None => AffectionStatus::Unknown,
    };
    let genotype = match parse_tristate(fields[9], "Geno")? {
        Some(true) => GenotypeStatus::Carrier,
        Some(false) => GenotypeStatus::Noncarrier,
        None => GenotypeStatus::Unknown,
    };
    Ok(RawRow {
        pedigree_id: fields[0].trim().to_string(),
        individual: Individual {
            id,
            sex: parse_sex(fields[2])?,
            mother_id: parse_opt_id(fields[3], "MotherID")?,
            father_id: parse_opt_id(fields[4], "FatherID")?,
            is_proband: parse_tristate(fields[5], "isProband")?.unwrap_or(false),
            cur_age: parse_opt_age(fields[6], "CurAge")?,
            affection,
            age_dx: parse_opt_age(fields[8], "Age")?,
            genotype,
        },
    })
}

fn group_rows(rows: Vec<RawRow>) -> Result<Vec<Pedigree>> {
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<Individual>> = BTreeMap::new();
    let mut seen: HashSet<(String, u32)> = HashSet::new();
    for row in rows {
        if !seen.insert((row.pedigree_id.clone(), row.individual.id)) {
            return Err(Error::Parse(format!(
                "duplicate (PedigreeID, ID) pair ({}, {})",
                row.pedigree_id, row.individual.id
            )));
        }
        if !grouped.contains_key(&row.pedigree_id) {
            order.push(row.pedigree_id.clone());
        }
        grouped
            .entry(row.pedigree_id)
            .or_default()
            .push(row.individual);
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let members = grouped.remove(&id).unwrap();
            Pedigree {
                id,
                members,
                twin_groups: Vec::new(),
            }
        })
        .collect())
}

/// Parse pedigrees from CSV with the ten schema columns (header names
/// matched case-insensitively, in any order). One `Pedigree` per distinct
/// `PedigreeID`, member order preserved.
pub fn parse_pedigrees_csv<R: std::io::Read>(reader: R) -> Result<Vec<Pedigree>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let mut col_of = [0usize; 10];
    for (i, want) in SCHEMA_COLUMNS.iter().enumerate() {
        col_of[i] = headers
            .iter()
            .position(|h| h == &want.to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("missing required column '{want}'")))?;
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let fields: Vec<&str> = col_of
            .iter()
            .map(|&c| record.get(c).unwrap_or(""))
            .collect();
        rows.push(row_from_fields(&fields)?);
    }
    group_rows(rows)
}

/// Parse pedigrees from the JSON mirror of the schema: an array of row
/// objects keyed by the ten column names.
pub fn parse_pedigrees_json<R: std::io::Read>(reader: R) -> Result<Vec<Pedigree>> {
    let value: serde_json::Value = serde_json::from_reader(reader)?;
    let arr = value
        .as_array()
        .ok_or_else(|| Error::Parse("pedigree json must be an array of row objects".into()))?;
    let mut rows = Vec::new();
    for item in arr {
        let obj = item
            .as_object()
            .ok_or_else(|| Error::Parse("pedigree json rows must be objects".into()))?;
        let lower: HashMap<String, &serde_json::Value> = obj
            .iter()
            .map(|(k, v)| (k.to_ascii_lowercase(), v))
            .collect();
        let mut fields: Vec<String> = Vec::with_capacity(10);
        for want in SCHEMA_COLUMNS {
            let v = lower
                .get(&want.to_ascii_lowercase())
                .ok_or_else(|| Error::Parse(format!("missing required column '{want}'")))?;
            fields.push(match v {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Bool(b) => {
                    if *b {
                        "1".into()
                    } else {
                        "0".into()
                    }
                }
                other => other.to_string(),
            });
        }
        let refs: Vec<&str> = fields.iter().map(|s| s.as_str()).collect();
        rows.push(row_from_fields(&refs)?);
    }
    group_rows(rows)
}

/// Attach twin groups (pedigree id -> list of member-id groups) to parsed
/// pedigrees, e.g. from a twins sidecar file.
pub fn apply_twin_groups(
    pedigrees: &mut [Pedigree],
    twins: &BTreeMap<String, Vec<Vec<u32>>>,
) -> Result<()> {
    for (ped_id, groups) in twins {
        let ped = pedigrees
            .iter_mut()
            .find(|p| &p.id == ped_id)
            .ok_or_else(|| {
                Error::Parse(format!("twins file references unknown pedigree '{ped_id}'"))
            })?;
        ped.twin_groups = groups.clone();
    }
    Ok(())
}

/// Parse a twins sidecar: JSON object mapping pedigree id to an array of
/// member-id arrays.
pub fn parse_twins_json<R: std::io::Read>(reader: R) -> Result<BTreeMap<String, Vec<Vec<u32>>>> {
    let map: BTreeMap<String, Vec<Vec<u32>>> = serde_json::from_reader(reader)?;
    Ok(map)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn field_or_na<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".to_string())
}

/// Write pedigrees back to the ten-column CSV schema.
pub fn write_pedigrees_csv<W: std::io::Write>(pedigrees: &[Pedigree], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(SCHEMA_COLUMNS)?;
    for ped in pedigrees {
        for m in &ped.members {
            let sex = match m.sex {
                Sex::Female => "0",
                Sex::Male => "1",
                Sex::Unknown => "NA",
            };
            let aff = match m.affection {
                AffectionStatus::Affected => "1",
                AffectionStatus::Unaffected => "0",
                AffectionStatus::Unknown => "NA",
            };
            let geno = match m.genotype {
                GenotypeStatus::Carrier => "1",
                GenotypeStatus::Noncarrier => "0",
                GenotypeStatus::Unknown => "NA",
            };
            wtr.write_record([
                ped.id.clone(),
                m.id.to_string(),
                sex.to_string(),
                field_or_na(m.mother_id),
                field_or_na(m.father_id),
                if m.is_proband { "1".into() } else { "0".into() },
                field_or_na(m.cur_age),
                aff.to_string(),
                field_or_na(m.age_dx),
                geno.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}
