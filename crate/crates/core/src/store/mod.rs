//! Tabular EHR storage with dual query execution.
//!
//! Ingestion is single-writer; `freeze` makes the store immutable, builds an
//! embedded SQLite mirror, and unlocks query execution. Every plan can run
//! through two independent paths: the rendered-SQL path against the mirror
//! and a brute-force row scan. The scan is the definitional semantics; the
//! SQL path must return the same row set.

mod scan;
mod sql;

use std::collections::HashMap;
use std::io::Read;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::cell::{CellValue, ValueKind};
use crate::error::{Error, Result};
use crate::plan::QueryPlan;
use crate::schema::{ColumnRole, SchemaProfile, TableSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecutionPath {
    SqlPath,
    ScanPath,
}

/// Result of a plan execution. Row identity is the event table's rowid
/// (1-based ingestion order); row order is not significant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowSet {
    pub table: String,
    pub provenance: ExecutionPath,
    pub row_ids: Vec<i64>,
    pub rows: Vec<Vec<(String, CellValue)>>,
}

impl RowSet {
    pub fn is_empty(&self) -> bool {
        self.row_ids.is_empty()
    }

    pub fn len(&self) -> usize {
        self.row_ids.len()
    }

    /// Set equality on row identities, ignoring order and provenance.
    pub fn same_rows(&self, other: &RowSet) -> bool {
        let mut a = self.row_ids.clone();
        let mut b = other.row_ids.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

#[derive(Debug, Clone)]
pub struct TableData {
    pub spec: TableSpec,
    pub rows: Vec<Vec<CellValue>>,
}

impl TableData {
    fn column_index(&self, name: &str) -> Option<usize> {
        self.spec
            .columns
            .iter()
            .position(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn cell(&self, row: &[CellValue], column: &str) -> Option<&CellValue> {
        self.column_index(column).map(|i| &row[i])
    }
}

pub struct RecordStore {
    profile: SchemaProfile,
    tables: HashMap<String, TableData>,
}

impl RecordStore {
    pub fn new(profile: SchemaProfile) -> RecordStore {
        let tables = profile
            .tables
            .iter()
            .map(|spec| {
                (
                    spec.name.clone(),
                    TableData {
                        spec: spec.clone(),
                        rows: Vec::new(),
                    },
                )
            })
            .collect();
        RecordStore { profile, tables }
    }

    pub fn profile(&self) -> &SchemaProfile {
        &self.profile
    }

    /// Ingest an RFC-4180 CSV stream into one table. The header must carry
    /// every schema column (case-insensitively, any order); extra columns
    /// are ignored. Rejects the whole file on the first malformed row,
    /// naming its line.
    pub fn ingest_csv<R: Read>(&mut self, table: &str, source: R) -> Result<usize> {
        let spec = self.profile.table(table)?.clone();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(source);
        let headers = reader
            .headers()
            .map_err(|e| Error::BadCsvRow {
                table: table.to_string(),
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let mut indices = Vec::with_capacity(spec.columns.len());
        for col in &spec.columns {
            let idx = headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(&col.name))
                .ok_or_else(|| Error::MissingColumn {
                    table: table.to_string(),
                    column: col.name.clone(),
                })?;
            indices.push(idx);
        }
        let mut staged: Vec<Vec<CellValue>> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::BadCsvRow {
                table: table.to_string(),
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let mut row = Vec::with_capacity(spec.columns.len());
            for (col, &idx) in spec.columns.iter().zip(&indices) {
                let raw = record.get(idx).unwrap_or("");
                let cell = CellValue::parse(col.kind, raw).map_err(|e| Error::BadCsvRow {
                    table: table.to_string(),
                    line,
                    message: format!("column {}: {}", col.name, e),
                })?;
                row.push(cell);
            }
            staged.push(row);
        }
        let count = staged.len();
        let data = self
            .tables
            .get_mut(&spec.name)
            .expect("table exists for spec");
        data.rows.extend(staged);
        Ok(count)
    }

    /// Insert an already-typed row; used by the fixture generator.
    pub fn push_row(&mut self, table: &str, cells: Vec<(&str, CellValue)>) -> Result<()> {
        let spec = self.profile.table(table)?.clone();
        let mut row = vec![CellValue::Null; spec.columns.len()];
        for (name, value) in cells {
            let idx = spec
                .columns
                .iter()
                .position(|c| c.name.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::UnknownColumn(table.to_string(), name.to_string()))?;
            row[idx] = value;
        }
        self.tables
            .get_mut(&spec.name)
            .expect("table exists for spec")
            .rows
            .push(row);
        Ok(())
    }

    /// Freeze the store: no further writes, queries become available.
    pub fn freeze(self) -> Result<FrozenStore> {
        let conn = sql::build_mirror(&self.profile, &self.tables)?;
        Ok(FrozenStore {
            profile: self.profile,
            tables: self.tables,
            conn: Mutex::new(conn),
        })
    }
}

/// Immutable store; safe to share across threads. The SQL mirror lives
/// behind a mutex (connections are not Sync), the scan path has no locks.
pub struct FrozenStore {
    profile: SchemaProfile,
    tables: HashMap<String, TableData>,
    conn: Mutex<rusqlite::Connection>,
}

impl FrozenStore {
    pub fn profile(&self) -> &SchemaProfile {
        &self.profile
    }

    pub fn table_data(&self, name: &str) -> Result<&TableData> {
        let spec = self.profile.table(name)?;
        self.tables
            .get(&spec.name)
            .ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn row_count(&self, table: &str) -> Result<usize> {
        Ok(self.table_data(table)?.rows.len())
    }

    /// Execute a plan through the requested path.
    pub fn execute_plan(&self, plan: &QueryPlan, path: ExecutionPath) -> Result<RowSet> {
        self.validate_plan(plan)?;
        match path {
            ExecutionPath::ScanPath => scan::execute(self, plan),
            ExecutionPath::SqlPath => {
                let conn = self.conn.lock().expect("sql mirror lock");
                sql::execute(&conn, self, plan)
            }
        }
    }

    /// Distinct labels of a `(table, column)` pair together with the item
    /// key of the first row carrying each label. Order follows first
    /// appearance in the table.
    pub fn distinct_labels(&self, table: &str, column: &str) -> Result<Vec<(Option<CellValue>, String)>> {
        let data = self.table_data(table)?;
        let key_col = data.spec.role_column(ColumnRole::ItemKey).map(|s| s.to_string());
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for row in &data.rows {
            let Some(CellValue::Text(label)) = data.cell(row, column) else {
                continue;
            };
            if seen.insert(label.clone()) {
                let key = key_col
                    .as_deref()
                    .and_then(|k| data.cell(row, k))
                    .cloned()
                    .filter(|c| !c.is_null());
                out.push((key, label.clone()));
            }
        }
        Ok(out)
    }

    fn validate_plan(&self, plan: &QueryPlan) -> Result<()> {
        let event = self.profile.table(&plan.event_table)?;
        if event.column(&plan.admission_column).is_none() {
            return Err(Error::UnknownColumn(
                plan.event_table.clone(),
                plan.admission_column.clone(),
            ));
        }
        for v in &plan.values {
            if event.column(&v.column).is_none() {
                return Err(Error::UnknownColumn(plan.event_table.clone(), v.column.clone()));
            }
        }
        if let Some(w) = &plan.window {
            match &w.binding {
                crate::plan::TimeBinding::Point { column } => {
                    if event.column(column).is_none() {
                        return Err(Error::UnknownColumn(plan.event_table.clone(), column.clone()));
                    }
                }
                crate::plan::TimeBinding::Interval {
                    start_column,
                    end_column,
                } => {
                    for c in [start_column, end_column] {
                        if event.column(c).is_none() {
                            return Err(Error::UnknownColumn(plan.event_table.clone(), c.clone()));
                        }
                    }
                }
            }
        }
        for j in &plan.joins {
            let dict = self.profile.table(&j.dict_table)?;
            if event.column(&j.child_column).is_none() {
                return Err(Error::UnknownColumn(
                    plan.event_table.clone(),
                    j.child_column.clone(),
                ));
            }
            if dict.column(&j.dict_column).is_none() {
                return Err(Error::UnknownColumn(j.dict_table.clone(), j.dict_column.clone()));
            }
        }
        for item in &plan.items {
            let target_is_event = item.target.eq_ignore_ascii_case(&plan.event_table);
            if target_is_event {
                if event.column(&item.column).is_none() {
                    return Err(Error::UnknownColumn(plan.event_table.clone(), item.column.clone()));
                }
            } else {
                let join = plan
                    .joins
                    .iter()
                    .find(|j| j.alias.eq_ignore_ascii_case(&item.target))
                    .ok_or_else(|| Error::UnknownTable(item.target.clone()))?;
                let dict = self.profile.table(&join.dict_table)?;
                if dict.column(&item.column).is_none() {
                    return Err(Error::UnknownColumn(join.dict_table.clone(), item.column.clone()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{ItemCondition, PlanJoin, TimeBinding, TimeWindow, WindowCondition, WindowForm};
    use crate::schema::{load_profile, ProfileName};

    fn store_with_appendix_row() -> FrozenStore {
        let mut store = RecordStore::new(load_profile(ProfileName::MimicStyle));
        let n = store
            .ingest_csv(
                "chartevents",
                "subject_id,hadm_id,itemid,charttime,valuenum,valueuom\n3,12345,128,2000-11-11 04:00:00,94.0,mmHg\n3,12345,128,2000-11-12 04:00:00,95.0,mmHg\n7,999,129,2000-11-11 04:00:00,94.0,mmHg\n"
                    .as_bytes(),
            )
            .unwrap();
        assert_eq!(n, 3);
        store
            .ingest_csv(
                "d_items",
                "itemid,label,abbreviation\n128,BP,\n129,HR,\n".as_bytes(),
            )
            .unwrap();
        store.freeze().unwrap()
    }

    fn bp_plan() -> QueryPlan {
        QueryPlan {
            event_table: "chartevents".into(),
            dict_table: Some("d_items".into()),
            joins: vec![PlanJoin {
                alias: "d_items".into(),
                dict_table: "d_items".into(),
                child_column: "itemid".into(),
                dict_column: "itemid".into(),
            }],
            admission_column: "hadm_id".into(),
            admission_key: 12345,
            items: vec![ItemCondition {
                target: "d_items".into(),
                column: "label".into(),
                label: "BP".into(),
            }],
            window: Some(WindowCondition {
                window: TimeWindow::ExactDate(
                    chrono::NaiveDate::from_ymd_opt(2000, 11, 11).unwrap(),
                ),
                binding: TimeBinding::Point {
                    column: "charttime".into(),
                },
            }),
            values: vec![
                ValueCondition {
                    role: ColumnRole::Value,
                    column: "valuenum".into(),
                    value: CellValue::Decimal(crate::cell::DecimalText::parse("94.0").unwrap()),
                },
                ValueCondition {
                    role: ColumnRole::Unit,
                    column: "valueuom".into(),
                    value: CellValue::Text("mmHg".into()),
                },
            ],
            form: WindowForm::ExactPoint,
        }
    }

    use crate::plan::ValueCondition;

    #[test]
    fn both_paths_find_the_single_joined_row() {
        let store = store_with_appendix_row();
        let plan = bp_plan();
        let scan = store.execute_plan(&plan, ExecutionPath::ScanPath).unwrap();
        let sql = store.execute_plan(&plan, ExecutionPath::SqlPath).unwrap();
        assert_eq!(scan.row_ids, vec![1]);
        assert!(scan.same_rows(&sql));
    }

    #[test]
    fn header_only_file_ingests_zero_rows() {
        let mut store = RecordStore::new(load_profile(ProfileName::MimicStyle));
        let n = store
            .ingest_csv(
                "chartevents",
                "subject_id,hadm_id,itemid,charttime,valuenum,valueuom\n".as_bytes(),
            )
            .unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn invalid_calendar_date_is_rejected_with_its_line() {
        let mut store = RecordStore::new(load_profile(ProfileName::MimicStyle));
        let err = store
            .ingest_csv(
                "chartevents",
                "subject_id,hadm_id,itemid,charttime,valuenum,valueuom\n3,12,128,2101-11-11,1,u\n3,12,128,2101-13-40,1,u\n"
                    .as_bytes(),
            )
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "got: {msg}");
        assert!(msg.contains("charttime"), "got: {msg}");
    }

    #[test]
    fn missing_required_column_is_an_error() {
        let mut store = RecordStore::new(load_profile(ProfileName::MimicStyle));
        let err = store
            .ingest_csv("chartevents", "subject_id,hadm_id,itemid\n1,2,3\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, Error::MissingColumn { .. }));
    }

    #[test]
    fn admission_only_plan_over_empty_table_is_empty() {
        let mut store = RecordStore::new(load_profile(ProfileName::MimicStyle));
        store
            .ingest_csv(
                "chartevents",
                "subject_id,hadm_id,itemid,charttime,valuenum,valueuom\n".as_bytes(),
            )
            .unwrap();
        let store = store.freeze().unwrap();
        let plan = QueryPlan {
            joins: vec![],
            items: vec![],
            window: None,
            values: vec![],
            dict_table: None,
            form: WindowForm::HadmOnly,
            ..bp_plan()
        };
        for path in [ExecutionPath::ScanPath, ExecutionPath::SqlPath] {
            assert!(store.execute_plan(&plan, path).unwrap().is_empty());
        }
    }

    #[test]
    fn unknown_plan_columns_are_rejected() {
        let store = store_with_appendix_row();
        let mut plan = bp_plan();
        plan.values[0].column = "nosuch".into();
        assert!(store.execute_plan(&plan, ExecutionPath::ScanPath).is_err());
    }
}
