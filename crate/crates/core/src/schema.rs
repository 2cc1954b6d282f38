//! Schema profiles and the cross-schema column mapping.
//!
//! Two built-in profiles are supported: the MIMIC-style layout with thirteen
//! tables (four of them dictionaries) and the OMOP-style layout with six.
//! Each table declares column kinds plus a role map (which column holds the
//! value, the unit, the event time, and so on), and the profile carries the
//! dictionary joins and the legal event/dictionary pair set used by table
//! identification and query planning.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cell::ValueKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileName {
    MimicStyle,
    OmopStyle,
}

impl ProfileName {
    pub fn parse(s: &str) -> Result<ProfileName> {
        match s.to_ascii_lowercase().as_str() {
            "mimic" | "mimicstyle" | "mimic-style" | "mimic_style" => Ok(ProfileName::MimicStyle),
            "omop" | "omopstyle" | "omop-style" | "omop_style" => Ok(ProfileName::OmopStyle),
            other => Err(Error::UnknownProfile(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ColumnRole {
    Label,
    Value,
    Unit,
    PointTime,
    StartTime,
    EndTime,
    Organism,
    Specimen,
    SubjectKey,
    AdmissionKey,
    ItemKey,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ValueKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSpec {
    pub name: String,
    pub columns: Vec<ColumnSpec>,
    /// Role -> column name(s). Every role maps to one column, except Label
    /// in the ICD dictionaries which maps to both short and long titles.
    pub roles: BTreeMap<ColumnRole, Vec<String>>,
    pub is_dictionary: bool,
}

impl TableSpec {
    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn role_column(&self, role: ColumnRole) -> Option<&str> {
        self.roles.get(&role).and_then(|v| v.first()).map(|s| s.as_str())
    }

    pub fn role_columns(&self, role: ColumnRole) -> &[String] {
        self.roles.get(&role).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Reverse lookup: which role does a column carry, if any.
    pub fn role_of(&self, column: &str) -> Option<ColumnRole> {
        self.roles.iter().find_map(|(role, cols)| {
            cols.iter()
                .any(|c| c.eq_ignore_ascii_case(column))
                .then_some(*role)
        })
    }

    pub fn has_point_time(&self) -> bool {
        self.roles.contains_key(&ColumnRole::PointTime)
    }

    pub fn has_interval_time(&self) -> bool {
        self.roles.contains_key(&ColumnRole::StartTime)
    }
}

/// A dictionary join: `child.child_column = dict.dict_column`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinSpec {
    pub child_table: String,
    pub child_column: String,
    pub dict_table: String,
    pub dict_column: String,
    /// Alias for the dictionary instance in rendered SQL; distinct aliases
    /// let microbiology join the item dictionary twice.
    pub alias: String,
}

/// Legal (event table, dictionary) pair for table identification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TablePair {
    pub event: String,
    pub dict: Option<String>,
}

impl TablePair {
    pub fn display(&self) -> String {
        match &self.dict {
            Some(d) => format!("{{{}, {}}}", self.event, d),
            None => format!("{{{}}}", self.event),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaProfile {
    pub name: ProfileName,
    pub tables: Vec<TableSpec>,
    pub joins: Vec<JoinSpec>,
    pub pairs: Vec<TablePair>,
}

impl SchemaProfile {
    pub fn table(&self, name: &str) -> Result<&TableSpec> {
        self.tables
            .iter()
            .find(|t| t.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn joins_for(&self, event_table: &str) -> Vec<&JoinSpec> {
        self.joins
            .iter()
            .filter(|j| j.child_table.eq_ignore_ascii_case(event_table))
            .collect()
    }

    pub fn pair_for_event(&self, event: &str) -> Option<&TablePair> {
        self.pairs.iter().find(|p| p.event.eq_ignore_ascii_case(event))
    }

    pub fn is_legal_pair(&self, event: &str, dict: Option<&str>) -> bool {
        self.pairs.iter().any(|p| {
            p.event.eq_ignore_ascii_case(event)
                && match (&p.dict, dict) {
                    (Some(a), Some(b)) => a.eq_ignore_ascii_case(b),
                    (None, None) => true,
                    // tolerate an explicit dictionary name for a pair that
                    // has none only when they match an event-only pair
                    (None, Some(_)) | (Some(_), None) => false,
                }
        })
    }

    /// Item-search sources in presentation order: (table, label column).
    /// For the MIMIC profile this is d_labitems, d_items, prescriptions,
    /// d_icd_procedures, d_icd_diagnoses; for OMOP it is the concept table.
    pub fn search_order(&self) -> Vec<(String, String)> {
        match self.name {
            ProfileName::MimicStyle => vec![
                ("d_labitems".into(), "label".into()),
                ("d_items".into(), "label".into()),
                ("prescriptions".into(), "drug".into()),
                ("d_icd_procedures".into(), "short_title".into()),
                ("d_icd_procedures".into(), "long_title".into()),
                ("d_icd_diagnoses".into(), "short_title".into()),
                ("d_icd_diagnoses".into(), "long_title".into()),
            ],
            ProfileName::OmopStyle => vec![("concept".into(), "concept_name".into())],
        }
    }

    /// The dictionary searched for an event table's items; `None` means the
    /// event table itself carries its labels (prescriptions.drug).
    pub fn item_source_for_pair(&self, pair: &TablePair) -> (String, Vec<String>) {
        match &pair.dict {
            Some(d) => {
                let spec = self.table(d).expect("pair dictionary exists");
                let cols = spec.role_columns(ColumnRole::Label).to_vec();
                (d.clone(), cols)
            }
            None => {
                let spec = self.table(&pair.event).expect("pair event exists");
                let cols = spec.role_columns(ColumnRole::Label).to_vec();
                (pair.event.clone(), cols)
            }
        }
    }

    /// Structural validation: join columns exist, role columns exist, and
    /// each role maps to one column except Label in ICD dictionaries.
    pub fn validate(&self) -> Result<()> {
        for join in &self.joins {
            let child = self.table(&join.child_table)?;
            if child.column(&join.child_column).is_none() {
                return Err(Error::UnknownColumn(
                    join.child_table.clone(),
                    join.child_column.clone(),
                ));
            }
            let dict = self.table(&join.dict_table)?;
            if dict.column(&join.dict_column).is_none() {
                return Err(Error::UnknownColumn(
                    join.dict_table.clone(),
                    join.dict_column.clone(),
                ));
            }
        }
        for table in &self.tables {
            for (role, cols) in &table.roles {
                for col in cols {
                    if table.column(col).is_none() {
                        return Err(Error::UnknownColumn(table.name.clone(), col.clone()));
                    }
                }
                let multi_ok = *role == ColumnRole::Label && table.name.starts_with("d_icd");
                if cols.len() > 1 && !multi_ok {
                    return Err(Error::BadConfig(format!(
                        "role {:?} maps to {} columns in {}",
                        role,
                        cols.len(),
                        table.name
                    )));
                }
            }
        }
        for pair in &self.pairs {
            self.table(&pair.event)?;
            if let Some(d) = &pair.dict {
                self.table(d)?;
            }
        }
        Ok(())
    }
}

fn col(name: &str, kind: ValueKind) -> ColumnSpec {
    ColumnSpec {
        name: name.to_string(),
        kind,
    }
}

fn table(
    name: &str,
    is_dictionary: bool,
    columns: Vec<ColumnSpec>,
    roles: &[(ColumnRole, &[&str])],
) -> TableSpec {
    TableSpec {
        name: name.to_string(),
        columns,
        roles: roles
            .iter()
            .map(|(r, cs)| (*r, cs.iter().map(|c| c.to_string()).collect()))
            .collect(),
        is_dictionary,
    }
}

fn join(child: &str, child_col: &str, dict: &str, dict_col: &str, alias: &str) -> JoinSpec {
    JoinSpec {
        child_table: child.into(),
        child_column: child_col.into(),
        dict_table: dict.into(),
        dict_column: dict_col.into(),
        alias: alias.into(),
    }
}

fn pair(event: &str, dict: Option<&str>) -> TablePair {
    TablePair {
        event: event.into(),
        dict: dict.map(|d| d.to_string()),
    }
}

/// Load a built-in profile. Pure: identical output on every call.
pub fn load_profile(name: ProfileName) -> SchemaProfile {
    let profile = match name {
        ProfileName::MimicStyle => mimic_profile(),
        ProfileName::OmopStyle => omop_profile(),
    };
    profile.validate().expect("built-in profile is valid");
    profile
}

fn mimic_profile() -> SchemaProfile {
    use ColumnRole::*;
    use ValueKind::*;
    let point_event = |name: &str| {
        table(
            name,
            false,
            vec![
                col("subject_id", Integer),
                col("hadm_id", Integer),
                col("itemid", Integer),
                col("charttime", DateTime),
                col("valuenum", Decimal),
                col("valueuom", Text),
            ],
            &[
                (SubjectKey, &["subject_id"]),
                (AdmissionKey, &["hadm_id"]),
                (ItemKey, &["itemid"]),
                (PointTime, &["charttime"]),
                (Value, &["valuenum"]),
                (Unit, &["valueuom"]),
            ],
        )
    };
    let tables = vec![
        point_event("chartevents"),
        point_event("labevents"),
        point_event("outputevents"),
        table(
            "inputevents_cv",
            false,
            vec![
                col("subject_id", Integer),
                col("hadm_id", Integer),
                col("itemid", Integer),
                col("charttime", DateTime),
                col("amount", Decimal),
                col("amountuom", Text),
                col("rate", Decimal),
                col("rateuom", Text),
            ],
            &[
                (SubjectKey, &["subject_id"]),
                (AdmissionKey, &["hadm_id"]),
                (ItemKey, &["itemid"]),
                (PointTime, &["charttime"]),
                (Value, &["amount"]),
                (Unit, &["amountuom"]),
            ],
        ),
        table(
            "inputevents_mv",
            false,
            vec![
                col("subject_id", Integer),
                col("hadm_id", Integer),
                col("itemid", Integer),
                col("starttime", DateTime),
                col("endtime", DateTime),
                col("amount", Decimal),
                col("amountuom", Text),
                col("rate", Decimal),
                col("rateuom", Text),
            ],
            &[
                (SubjectKey, &["subject_id"]),
                (AdmissionKey, &["hadm_id"]),
                (ItemKey, &["itemid"]),
                (StartTime, &["starttime"]),
                (EndTime, &["endtime"]),
                (Value, &["amount"]),
                (Unit, &["amountuom"]),
            ],
        ),
        table(
            "microbiologyevents",
            false,
            vec![
                col("subject_id", Integer),
                col("hadm_id", Integer),
                col("charttime", DateTime),
                col("spec_itemid", Integer),
                col("spec_type_desc", Text),
                col("org_itemid", Integer),
                col("org_name", Text),
            ],
            &[
                (SubjectKey, &["subject_id"]),
                (AdmissionKey, &["hadm_id"]),
                (ItemKey, &["spec_itemid"]),
                (PointTime, &["charttime"]),
                (Organism, &["org_name"]),
                (Specimen, &["spec_type_desc"]),
            ],
        ),
        table(
            "prescriptions",
            false,
            vec![
                col("subject_id", Integer),
                col("hadm_id", Integer),
                col("startdate", DateTime),
                col("enddate", DateTime),
                col("drug", Text),
                col("dose_val_rx", Decimal),
                col("dose_unit_rx", Text),
            ],
            &[
                (SubjectKey, &["subject_id"]),
                (AdmissionKey, &["hadm_id"]),
                (StartTime, &["startdate"]),
                (EndTime, &["enddate"]),
                (Label, &["drug"]),
                (Value, &["dose_val_rx"]),
                (Unit, &["dose_unit_rx"]),
            ],
        ),
        table(
            "diagnoses_icd",
            false,
            vec![
                col("subject_id", Integer),
                col("hadm_id", Integer),
                col("icd9_code", Text),
            ],
            &[
                (SubjectKey, &["subject_id"]),
                (AdmissionKey, &["hadm_id"]),
                (ItemKey, &["icd9_code"]),
            ],
        ),
        table(
            "procedures_icd",
            false,
            vec![
                col("subject_id", Integer),
                col("hadm_id", Integer),
                col("icd9_code", Text),
            ],
            &[
                (SubjectKey, &["subject_id"]),
                (AdmissionKey, &["hadm_id"]),
                (ItemKey, &["icd9_code"]),
            ],
        ),
        table(
            "d_items",
            true,
            vec![
                col("itemid", Integer),
                col("label", Text),
                col("abbreviation", Text),
            ],
            &[(ItemKey, &["itemid"]), (Label, &["label"])],
        ),
        table(
            "d_labitems",
            true,
            vec![col("itemid", Integer), col("label", Text)],
            &[(ItemKey, &["itemid"]), (Label, &["label"])],
        ),
        table(
            "d_icd_diagnoses",
            true,
            vec![
                col("icd9_code", Text),
                col("short_title", Text),
                col("long_title", Text),
            ],
            &[
                (ItemKey, &["icd9_code"]),
                (Label, &["short_title", "long_title"]),
            ],
        ),
        table(
            "d_icd_procedures",
            true,
            vec![
                col("icd9_code", Text),
                col("short_title", Text),
                col("long_title", Text),
            ],
            &[
                (ItemKey, &["icd9_code"]),
                (Label, &["short_title", "long_title"]),
            ],
        ),
    ];
    let joins = vec![
        join("chartevents", "itemid", "d_items", "itemid", "d_items"),
        join("labevents", "itemid", "d_labitems", "itemid", "d_labitems"),
        join("outputevents", "itemid", "d_items", "itemid", "d_items"),
        join("inputevents_cv", "itemid", "d_items", "itemid", "d_items"),
        join("inputevents_mv", "itemid", "d_items", "itemid", "d_items"),
        join(
            "microbiologyevents",
            "spec_itemid",
            "d_items",
            "itemid",
            "spec_items",
        ),
        join(
            "microbiologyevents",
            "org_itemid",
            "d_items",
            "itemid",
            "org_items",
        ),
        join(
            "diagnoses_icd",
            "icd9_code",
            "d_icd_diagnoses",
            "icd9_code",
            "d_icd_diagnoses",
        ),
        join(
            "procedures_icd",
            "icd9_code",
            "d_icd_procedures",
            "icd9_code",
            "d_icd_procedures",
        ),
    ];
    let pairs = vec![
        pair("chartevents", Some("d_items")),
        pair("outputevents", Some("d_items")),
        pair("microbiologyevents", Some("d_items")),
        pair("inputevents_cv", Some("d_items")),
        pair("diagnoses_icd", Some("d_icd_diagnoses")),
        pair("procedures_icd", Some("d_icd_procedures")),
        pair("prescriptions", None),
        pair("inputevents_mv", Some("d_items")),
        pair("labevents", Some("d_labitems")),
    ];
    SchemaProfile {
        name: ProfileName::MimicStyle,
        tables,
        joins,
        pairs,
    }
}

fn omop_profile() -> SchemaProfile {
    use ColumnRole::*;
    use ValueKind::*;
    let tables = vec![
        table(
            "concept",
            true,
            vec![
                col("concept_id", Integer),
                col("concept_name", Text),
                col("domain_id", Text),
            ],
            &[(ItemKey, &["concept_id"]), (Label, &["concept_name"])],
        ),
        table(
            "measurement",
            false,
            vec![
                col("person_id", Integer),
                col("visit_occurrence_id", Integer),
                col("measurement_concept_id", Integer),
                col("measurement_datetime", DateTime),
                col("value_as_number", Decimal),
                col("unit_source_value", Text),
            ],
            &[
                (SubjectKey, &["person_id"]),
                (AdmissionKey, &["visit_occurrence_id"]),
                (ItemKey, &["measurement_concept_id"]),
                (PointTime, &["measurement_datetime"]),
                (Value, &["value_as_number"]),
                (Unit, &["unit_source_value"]),
            ],
        ),
        // Dose values, units and rates have no counterpart here, so drug
        // exposures verify on item and time conditions only.
        table(
            "drug_exposure",
            false,
            vec![
                col("person_id", Integer),
                col("visit_occurrence_id", Integer),
                col("drug_concept_id", Integer),
                col("drug_exposure_start_date", DateTime),
                col("drug_exposure_end_date", DateTime),
                col("quantity", Decimal),
                col("dose_unit_source_value", Text),
            ],
            &[
                (SubjectKey, &["person_id"]),
                (AdmissionKey, &["visit_occurrence_id"]),
                (ItemKey, &["drug_concept_id"]),
                (StartTime, &["drug_exposure_start_date"]),
                (EndTime, &["drug_exposure_end_date"]),
            ],
        ),
        table(
            "specimen",
            false,
            vec![
                col("person_id", Integer),
                col("visit_occurrence_id", Integer),
                col("specimen_concept_id", Integer),
                col("specimen_datetime", DateTime),
            ],
            &[
                (SubjectKey, &["person_id"]),
                (AdmissionKey, &["visit_occurrence_id"]),
                (ItemKey, &["specimen_concept_id"]),
                (PointTime, &["specimen_datetime"]),
            ],
        ),
        table(
            "condition_occurrence",
            false,
            vec![
                col("person_id", Integer),
                col("visit_occurrence_id", Integer),
                col("condition_concept_id", Integer),
            ],
            &[
                (SubjectKey, &["person_id"]),
                (AdmissionKey, &["visit_occurrence_id"]),
                (ItemKey, &["condition_concept_id"]),
            ],
        ),
        table(
            "procedure_occurrence",
            false,
            vec![
                col("person_id", Integer),
                col("visit_occurrence_id", Integer),
                col("procedure_concept_id", Integer),
            ],
            &[
                (SubjectKey, &["person_id"]),
                (AdmissionKey, &["visit_occurrence_id"]),
                (ItemKey, &["procedure_concept_id"]),
            ],
        ),
    ];
    let joins = vec![
        join(
            "measurement",
            "measurement_concept_id",
            "concept",
            "concept_id",
            "concept",
        ),
        join(
            "drug_exposure",
            "drug_concept_id",
            "concept",
            "concept_id",
            "concept",
        ),
        join(
            "specimen",
            "specimen_concept_id",
            "concept",
            "concept_id",
            "concept",
        ),
        join(
            "condition_occurrence",
            "condition_concept_id",
            "concept",
            "concept_id",
            "concept",
        ),
        join(
            "procedure_occurrence",
            "procedure_concept_id",
            "concept",
            "concept_id",
            "concept",
        ),
    ];
    let pairs = vec![
        pair("measurement", Some("concept")),
        pair("drug_exposure", Some("concept")),
        pair("specimen", Some("concept")),
        pair("condition_occurrence", Some("concept")),
        pair("procedure_occurrence", Some("concept")),
    ];
    SchemaProfile {
        name: ProfileName::OmopStyle,
        tables,
        joins,
        pairs,
    }
}

/// Apply a declarative column-name override file to a profile. Each line is
/// `table.column = replacement`; `#` starts a comment.
pub fn apply_overrides(profile: &mut SchemaProfile, text: &str) -> Result<()> {
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) = line.split_once('=').ok_or_else(|| {
            Error::BadConfig(format!("override line {}: expected `table.column = name`", idx + 1))
        })?;
        let (tname, cname) = lhs.trim().split_once('.').ok_or_else(|| {
            Error::BadConfig(format!("override line {}: expected `table.column`", idx + 1))
        })?;
        let replacement = rhs.trim().to_string();
        if replacement.is_empty() {
            return Err(Error::BadConfig(format!("override line {}: empty name", idx + 1)));
        }
        let table = profile
            .tables
            .iter_mut()
            .find(|t| t.name.eq_ignore_ascii_case(tname))
            .ok_or_else(|| Error::UnknownTable(tname.to_string()))?;
        let column = table
            .columns
            .iter_mut()
            .find(|c| c.name.eq_ignore_ascii_case(cname))
            .ok_or_else(|| Error::UnknownColumn(tname.to_string(), cname.to_string()))?;
        let old = column.name.clone();
        column.name = replacement.clone();
        for cols in table.roles.values_mut() {
            for c in cols.iter_mut() {
                if c.eq_ignore_ascii_case(&old) {
                    *c = replacement.clone();
                }
            }
        }
        for join in profile.joins.iter_mut() {
            if join.child_table.eq_ignore_ascii_case(tname)
                && join.child_column.eq_ignore_ascii_case(&old)
            {
                join.child_column = replacement.clone();
            }
            if join.dict_table.eq_ignore_ascii_case(tname)
                && join.dict_column.eq_ignore_ascii_case(&old)
            {
                join.dict_column = replacement.clone();
            }
        }
    }
    profile.validate()
}

/// One row of the cross-schema mapping table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MappingEntry {
    pub mimic: (String, String),
    /// Empty when the column has no counterpart.
    pub omop: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaMapping {
    pub entries: Vec<MappingEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Translation {
    Counterparts(Vec<(String, String)>),
    NoCounterpart,
}

impl SchemaMapping {
    /// Translate a column across schemas. A MIMIC-side source returns its
    /// OMOP counterparts; an OMOP-side source returns every MIMIC column
    /// that maps onto it. Unknown columns are an error.
    pub fn translate(&self, table: &str, column: &str) -> Result<Translation> {
        let matches_src = |(t, c): &(String, String)| {
            t.eq_ignore_ascii_case(table) && c.eq_ignore_ascii_case(column)
        };
        let mut found_src = false;
        let mut out: Vec<(String, String)> = Vec::new();
        for entry in &self.entries {
            if matches_src(&entry.mimic) {
                found_src = true;
                for pair in &entry.omop {
                    if !out.contains(pair) {
                        out.push(pair.clone());
                    }
                }
            }
        }
        if found_src {
            return Ok(if out.is_empty() {
                Translation::NoCounterpart
            } else {
                Translation::Counterparts(out)
            });
        }
        for entry in &self.entries {
            if entry.omop.iter().any(matches_src) {
                found_src = true;
                if !out.contains(&entry.mimic) {
                    out.push(entry.mimic.clone());
                }
            }
        }
        if found_src {
            Ok(Translation::Counterparts(out))
        } else {
            Err(Error::UnmappedColumn(format!("{table}.{column}")))
        }
    }
}

/// The built-in mapping between the two profiles.
pub fn schema_mapping() -> SchemaMapping {
    fn entry(mimic: (&str, &str), omop: &[(&str, &str)]) -> MappingEntry {
        MappingEntry {
            mimic: (mimic.0.into(), mimic.1.into()),
            omop: omop.iter().map(|(t, c)| (t.to_string(), c.to_string())).collect(),
        }
    }
    let e = entry;
    SchemaMapping {
        entries: vec![
            e(("chartevents", "charttime"), &[("measurement", "measurement_datetime")]),
            e(("chartevents", "valuenum"), &[("measurement", "value_as_number")]),
            e(("chartevents", "valueuom"), &[("measurement", "unit_source_value")]),
            e(("labevents", "charttime"), &[("measurement", "measurement_datetime")]),
            e(("labevents", "valuenum"), &[("measurement", "value_as_number")]),
            e(("labevents", "valueuom"), &[("measurement", "unit_source_value")]),
            e(("outputevents", "charttime"), &[("measurement", "measurement_datetime")]),
            e(("outputevents", "valuenum"), &[("measurement", "value_as_number")]),
            e(("outputevents", "valueuom"), &[("measurement", "unit_source_value")]),
            e(
                ("microbiologyevents", "charttime"),
                &[
                    ("measurement", "measurement_datetime"),
                    ("specimen", "specimen_datetime"),
                ],
            ),
            e(("microbiologyevents", "org_name"), &[("concept", "concept_name")]),
            e(("microbiologyevents", "spec_type_desc"), &[("concept", "concept_name")]),
            e(
                ("inputevents_mv", "starttime"),
                &[("drug_exposure", "drug_exposure_start_date")],
            ),
            e(
                ("inputevents_mv", "endtime"),
                &[("drug_exposure", "drug_exposure_end_date")],
            ),
            e(("inputevents_mv", "amount"), &[]),
            e(("inputevents_mv", "amountuom"), &[]),
            e(("inputevents_mv", "rate"), &[]),
            e(("inputevents_mv", "rateuom"), &[]),
            e(
                ("inputevents_cv", "charttime"),
                &[
                    ("drug_exposure", "drug_exposure_start_date"),
                    ("drug_exposure", "drug_exposure_end_date"),
                ],
            ),
            e(("inputevents_cv", "amount"), &[]),
            e(("inputevents_cv", "amountuom"), &[]),
            e(("inputevents_cv", "rate"), &[]),
            e(("inputevents_cv", "rateuom"), &[]),
            e(
                ("prescriptions", "startdate"),
                &[("drug_exposure", "drug_exposure_start_date")],
            ),
            e(
                ("prescriptions", "enddate"),
                &[("drug_exposure", "drug_exposure_end_date")],
            ),
            e(("prescriptions", "dose_val_rx"), &[]),
            e(("prescriptions", "dose_unit_rx"), &[]),
            e(("prescriptions", "drug"), &[("concept", "concept_name")]),
            e(("d_items", "label"), &[("concept", "concept_name")]),
            e(("d_labitems", "label"), &[("concept", "concept_name")]),
            e(("d_icd_diagnoses", "short_title"), &[("concept", "concept_name")]),
            e(("d_icd_diagnoses", "long_title"), &[("concept", "concept_name")]),
            e(("d_icd_procedures", "short_title"), &[("concept", "concept_name")]),
            e(("d_icd_procedures", "long_title"), &[("concept", "concept_name")]),
        ],
    }
}

/// True when an event-table column keeps the same role after translation.
/// This is what decides whether a verification condition survives the move
/// to the other schema.
pub fn role_preserving_counterpart(
    mapping: &SchemaMapping,
    mimic_profile: &SchemaProfile,
    omop_profile: &SchemaProfile,
    table: &str,
    column: &str,
) -> bool {
    let Ok(src_table) = mimic_profile.table(table) else {
        return false;
    };
    let Some(role) = src_table.role_of(column) else {
        return false;
    };
    match mapping.translate(table, column) {
        Ok(Translation::Counterparts(cands)) => cands.iter().any(|(t, c)| {
            omop_profile
                .table(t)
                .ok()
                .and_then(|spec| spec.role_of(c))
                .map_or(false, |r| r == role && !spec_is_dict(omop_profile, t))
        }),
        _ => false,
    }
}

fn spec_is_dict(profile: &SchemaProfile, table: &str) -> bool {
    profile.table(table).map(|t| t.is_dictionary).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mimic_profile_has_thirteen_tables_four_dictionaries() {
        let p = load_profile(ProfileName::MimicStyle);
        assert_eq!(p.tables.len(), 13);
        assert_eq!(p.tables.iter().filter(|t| t.is_dictionary).count(), 4);
        for name in [
            "chartevents",
            "labevents",
            "prescriptions",
            "inputevents_cv",
            "inputevents_mv",
            "outputevents",
            "microbiologyevents",
            "diagnoses_icd",
            "procedures_icd",
            "d_items",
            "d_icd_diagnoses",
            "d_icd_procedures",
            "d_labitems",
        ] {
            assert!(p.table(name).is_ok(), "missing {name}");
        }
    }

    #[test]
    fn omop_roles_of_point_events_land_on_measurement() {
        let mapping = schema_mapping();
        for src in ["chartevents", "labevents", "outputevents"] {
            for (col, want) in [
                ("charttime", "measurement_datetime"),
                ("valuenum", "value_as_number"),
                ("valueuom", "unit_source_value"),
            ] {
                match mapping.translate(src, col).unwrap() {
                    Translation::Counterparts(c) => {
                        assert_eq!(c, vec![("measurement".to_string(), want.to_string())])
                    }
                    Translation::NoCounterpart => panic!("{src}.{col} should map"),
                }
            }
        }
    }

    #[test]
    fn load_profile_is_idempotent() {
        let a = load_profile(ProfileName::MimicStyle);
        let b = load_profile(ProfileName::MimicStyle);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let a = load_profile(ProfileName::OmopStyle);
        let b = load_profile(ProfileName::OmopStyle);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn translate_examples_from_the_mapping_table() {
        let mapping = schema_mapping();
        assert_eq!(
            mapping.translate("labevents", "valuenum").unwrap(),
            Translation::Counterparts(vec![("measurement".into(), "value_as_number".into())])
        );
        assert_eq!(
            mapping.translate("inputevents_mv", "rate").unwrap(),
            Translation::NoCounterpart
        );
        // reverse direction enumerates every source column
        match mapping.translate("measurement", "value_as_number").unwrap() {
            Translation::Counterparts(c) => {
                assert_eq!(
                    c,
                    vec![
                        ("chartevents".to_string(), "valuenum".to_string()),
                        ("labevents".to_string(), "valuenum".to_string()),
                        ("outputevents".to_string(), "valuenum".to_string()),
                    ]
                );
            }
            _ => panic!("expected counterparts"),
        }
        assert!(mapping.translate("chartevents", "nosuch").is_err());
    }

    #[test]
    fn value_unit_time_roles_survive_mapping_where_counterparts_exist() {
        let mapping = schema_mapping();
        let mimic = load_profile(ProfileName::MimicStyle);
        let omop = load_profile(ProfileName::OmopStyle);
        for t in mimic.tables.iter().filter(|t| !t.is_dictionary) {
            for role in [ColumnRole::Value, ColumnRole::Unit, ColumnRole::PointTime] {
                if let Some(col) = t.role_column(role) {
                    match mapping.translate(&t.name, col).unwrap() {
                        Translation::NoCounterpart => {}
                        Translation::Counterparts(cands) => {
                            // at least one counterpart must carry the same role
                            // in a non-dictionary table, except microbiology
                            // text attributes which fold into concept names
                            let same_role = cands.iter().any(|(tt, cc)| {
                                omop.table(tt)
                                    .ok()
                                    .and_then(|s| s.role_of(cc))
                                    .map_or(false, |r| r == role)
                            });
                            assert!(
                                same_role,
                                "{}.{} lost role {:?} under mapping",
                                t.name, col, role
                            );
                        }
                    }
                }
            }
        }
        assert!(role_preserving_counterpart(
            &mapping, &mimic, &omop, "chartevents", "valuenum"
        ));
        assert!(!role_preserving_counterpart(
            &mapping, &mimic, &omop, "prescriptions", "dose_val_rx"
        ));
        assert!(!role_preserving_counterpart(
            &mapping, &mimic, &omop, "microbiologyevents", "org_name"
        ));
    }

    #[test]
    fn icd_dictionaries_expose_both_titles_as_labels() {
        let p = load_profile(ProfileName::MimicStyle);
        let d = p.table("d_icd_diagnoses").unwrap();
        assert_eq!(d.role_columns(ColumnRole::Label), ["short_title", "long_title"]);
    }

    #[test]
    fn overrides_rename_columns_and_joins() {
        let mut p = load_profile(ProfileName::MimicStyle);
        apply_overrides(&mut p, "chartevents.valuenum = value_num\n# comment\n").unwrap();
        let t = p.table("chartevents").unwrap();
        assert!(t.column("value_num").is_some());
        assert_eq!(t.role_column(ColumnRole::Value), Some("value_num"));
        assert!(apply_overrides(&mut p, "nosuch.c = x").is_err());
    }

    #[test]
    fn microbiology_joins_the_dictionary_twice() {
        let p = load_profile(ProfileName::MimicStyle);
        let joins = p.joins_for("microbiologyevents");
        assert_eq!(joins.len(), 2);
        assert!(joins.iter().any(|j| j.alias == "spec_items"));
        assert!(joins.iter().any(|j| j.alias == "org_items"));
    }
}
