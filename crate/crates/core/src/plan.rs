//! Structured query plans.
//!
//! A plan is a condition set over one event table (plus dictionary joins):
//! an admission scope, an item-label disjunction, an optional time window,
//! and value conditions. Plans are renderable to SQL and executable by a
//! brute-force scan, and carry the ordered list of maskable conditions used
//! for inconsistency localization. The admission key and item condition are
//! never maskable.

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::cell::{format_date, format_datetime, CellValue};
use crate::schema::ColumnRole;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WindowForm {
    /// A single stamped date or datetime.
    ExactPoint,
    /// One day before and after the admission date.
    AroundAdmission,
    /// Admission date through chart date.
    AdmissionToChart,
    /// One day before and after a resolved calendar date.
    AroundCalculated,
    /// Admission scope only; no time condition.
    HadmOnly,
}

impl WindowForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            WindowForm::ExactPoint => "exact_point",
            WindowForm::AroundAdmission => "around_admission",
            WindowForm::AdmissionToChart => "admission_to_chart",
            WindowForm::AroundCalculated => "around_calculated",
            WindowForm::HadmOnly => "hadm_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeWindow {
    ExactDate(NaiveDate),
    ExactDateTime(NaiveDateTime),
    DayRange { lo: NaiveDate, hi: NaiveDate },
}

impl TimeWindow {
    pub fn day_range(lo: NaiveDate, hi: NaiveDate) -> TimeWindow {
        assert!(lo <= hi, "day range must be ordered");
        TimeWindow::DayRange { lo, hi }
    }

    /// Day-granularity bounds of the window.
    pub fn date_bounds(&self) -> (NaiveDate, NaiveDate) {
        match self {
            TimeWindow::ExactDate(d) => (*d, *d),
            TimeWindow::ExactDateTime(dt) => (dt.date(), dt.date()),
            TimeWindow::DayRange { lo, hi } => (*lo, *hi),
        }
    }
}

/// Which time columns the window binds to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeBinding {
    Point { column: String },
    Interval { start_column: String, end_column: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCondition {
    pub window: TimeWindow,
    pub binding: TimeBinding,
}

impl WindowCondition {
    /// The window accepts a point timestamp at day or second granularity.
    pub fn accepts_point(&self, t: NaiveDateTime) -> bool {
        match self.window {
            TimeWindow::ExactDate(d) => t.date() == d,
            TimeWindow::ExactDateTime(dt) => t == dt,
            TimeWindow::DayRange { lo, hi } => lo <= t.date() && t.date() <= hi,
        }
    }

    /// Closed-interval overlap at day granularity: NOT(end < lo OR start > hi).
    /// A missing end collapses the interval to its start day.
    pub fn accepts_interval(&self, start: NaiveDateTime, end: Option<NaiveDateTime>) -> bool {
        let s = start.date();
        let e = end.map(|e| e.date()).unwrap_or(s);
        let (lo, hi) = self.window.date_bounds();
        !(e < lo || s > hi)
    }
}

/// One disjunct of the item condition: `target.column = label`, where the
/// target is a dictionary alias or the event table itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemCondition {
    pub target: String,
    pub column: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueCondition {
    pub role: ColumnRole,
    pub column: String,
    pub value: CellValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanJoin {
    pub alias: String,
    pub dict_table: String,
    pub child_column: String,
    pub dict_column: String,
}

/// Identity of a maskable condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaskId {
    Value,
    Unit,
    Time,
    Organism,
    Specimen,
}

impl MaskId {
    pub const DEFAULT_ORDER: [MaskId; 5] = [
        MaskId::Value,
        MaskId::Unit,
        MaskId::Time,
        MaskId::Organism,
        MaskId::Specimen,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MaskId::Value => "value",
            MaskId::Unit => "unit",
            MaskId::Time => "time",
            MaskId::Organism => "organism",
            MaskId::Specimen => "specimen",
        }
    }

    pub fn parse(s: &str) -> Option<MaskId> {
        match s.trim().to_ascii_lowercase().as_str() {
            "value" => Some(MaskId::Value),
            "unit" => Some(MaskId::Unit),
            "time" => Some(MaskId::Time),
            "organism" => Some(MaskId::Organism),
            "specimen" => Some(MaskId::Specimen),
            _ => None,
        }
    }

    fn role(&self) -> Option<ColumnRole> {
        match self {
            MaskId::Value => Some(ColumnRole::Value),
            MaskId::Unit => Some(ColumnRole::Unit),
            MaskId::Organism => Some(ColumnRole::Organism),
            MaskId::Specimen => Some(ColumnRole::Specimen),
            MaskId::Time => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub event_table: String,
    pub dict_table: Option<String>,
    pub joins: Vec<PlanJoin>,
    pub admission_column: String,
    pub admission_key: i64,
    /// Label disjunction; at least one disjunct must hold.
    pub items: Vec<ItemCondition>,
    pub window: Option<WindowCondition>,
    pub values: Vec<ValueCondition>,
    pub form: WindowForm,
}

impl QueryPlan {
    /// The maskable conditions present in this plan, in the given order.
    pub fn maskable(&self, order: &[MaskId]) -> Vec<MaskId> {
        order
            .iter()
            .copied()
            .filter(|id| match id {
                MaskId::Time => self.window.is_some(),
                other => {
                    let role = other.role().expect("non-time mask has a role");
                    self.values.iter().any(|v| v.role == role)
                }
            })
            .collect()
    }

    /// A copy of the plan with the given conditions removed.
    pub fn masked(&self, remove: &[MaskId]) -> QueryPlan {
        let mut plan = self.clone();
        for id in remove {
            match id {
                MaskId::Time => plan.window = None,
                other => {
                    let role = other.role().expect("non-time mask has a role");
                    plan.values.retain(|v| v.role != role);
                }
            }
        }
        plan
    }

    /// Columns attributed when the given condition is found inconsistent.
    /// Time over an interval binding names both endpoint columns.
    pub fn mask_columns(&self, id: MaskId) -> Vec<(String, String)> {
        match id {
            MaskId::Time => match &self.window {
                Some(w) => match &w.binding {
                    TimeBinding::Point { column } => {
                        vec![(self.event_table.clone(), column.clone())]
                    }
                    TimeBinding::Interval {
                        start_column,
                        end_column,
                    } => vec![
                        (self.event_table.clone(), start_column.clone()),
                        (self.event_table.clone(), end_column.clone()),
                    ],
                },
                None => vec![],
            },
            other => {
                let role = other.role().expect("non-time mask has a role");
                self.values
                    .iter()
                    .filter(|v| v.role == role)
                    .map(|v| (self.event_table.clone(), v.column.clone()))
                    .collect()
            }
        }
    }
}

pub fn render_window_sql(event_table: &str, cond: &WindowCondition) -> String {
    match &cond.binding {
        TimeBinding::Point { column } => {
            let col = format!("{event_table}.{column}");
            match cond.window {
                TimeWindow::ExactDate(d) => {
                    format!("strftime('%Y-%m-%d', {col}) = '{}'", format_date(d))
                }
                TimeWindow::ExactDateTime(dt) => format!(
                    "strftime('%Y-%m-%d %H:%M:%S', {col}) = '{}'",
                    format_datetime(dt)
                ),
                TimeWindow::DayRange { lo, hi } => format!(
                    "strftime('%Y-%m-%d', {col}) BETWEEN '{}' AND '{}'",
                    format_date(lo),
                    format_date(hi)
                ),
            }
        }
        TimeBinding::Interval {
            start_column,
            end_column,
        } => {
            let start = format!("{event_table}.{start_column}");
            let end = format!(
                "COALESCE({event_table}.{end_column}, {event_table}.{start_column})"
            );
            match cond.window {
                TimeWindow::ExactDate(d) => format!(
                    "strftime('%Y-%m-%d', '{}') BETWEEN strftime('%Y-%m-%d', {start}) AND strftime('%Y-%m-%d', {end})",
                    format_date(d)
                ),
                TimeWindow::ExactDateTime(dt) => format!(
                    "strftime('%Y-%m-%d', '{}') BETWEEN strftime('%Y-%m-%d', {start}) AND strftime('%Y-%m-%d', {end})",
                    format_date(dt.date())
                ),
                TimeWindow::DayRange { lo, hi } => format!(
                    "NOT (strftime('%Y-%m-%d', {end}) < '{}' OR strftime('%Y-%m-%d', {start}) > '{}')",
                    format_date(lo),
                    format_date(hi)
                ),
            }
        }
    }
}

pub fn sql_quote(text: &str) -> String {
    format!("'{}'", text.replace('\'', "''"))
}

/// Render the plan as executable SQL over the frozen store's mirror.
pub fn render_sql(plan: &QueryPlan) -> String {
    let e = &plan.event_table;
    let mut sql = format!("SELECT {e}.rowid AS __rid, {e}.* FROM {e}");
    for j in &plan.joins {
        if j.alias == j.dict_table {
            sql.push_str(&format!(
                " JOIN {d} ON {e}.{c} = {d}.{k}",
                d = j.dict_table,
                c = j.child_column,
                k = j.dict_column
            ));
        } else {
            sql.push_str(&format!(
                " JOIN {d} AS {a} ON {e}.{c} = {a}.{k}",
                d = j.dict_table,
                a = j.alias,
                c = j.child_column,
                k = j.dict_column
            ));
        }
    }
    let mut conds: Vec<String> = vec![format!(
        "{e}.{col} = {key}",
        col = plan.admission_column,
        key = plan.admission_key
    )];
    if !plan.items.is_empty() {
        let parts: Vec<String> = plan
            .items
            .iter()
            .map(|i| format!("{}.{} = {}", i.target, i.column, sql_quote(&i.label)))
            .collect();
        conds.push(format!("({})", parts.join(" OR ")));
    }
    if let Some(w) = &plan.window {
        conds.push(render_window_sql(e, w));
    }
    for v in &plan.values {
        let rendered = v
            .value
            .sql_text()
            .map(|t| sql_quote(&t))
            .unwrap_or_else(|| "NULL".to_string());
        conds.push(format!("{e}.{} = {}", v.column, rendered));
    }
    sql.push_str(" WHERE ");
    sql.push_str(&conds.join(" AND "));
    sql
}
