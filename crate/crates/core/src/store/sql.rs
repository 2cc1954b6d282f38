//! SQL-path execution: the rendered plan runs against an embedded SQLite
//! mirror built at freeze time. Integer columns are stored as INTEGER;
//! everything else as TEXT in canonical form (full datetimes, canonical
//! decimals) so plain equality matches the scan semantics.

use std::collections::HashMap;

use rusqlite::Connection;

use crate::cell::{CellValue, ValueKind};
use crate::error::Result;
use crate::plan::{render_sql, QueryPlan};
use crate::schema::SchemaProfile;
use crate::store::{ExecutionPath, FrozenStore, RowSet, TableData};

pub(super) fn build_mirror(
    profile: &SchemaProfile,
    tables: &HashMap<String, TableData>,
) -> Result<Connection> {
    let conn = Connection::open_in_memory()?;
    for spec in &profile.tables {
        let cols: Vec<String> = spec
            .columns
            .iter()
            .map(|c| {
                let ty = match c.kind {
                    ValueKind::Integer => "INTEGER",
                    _ => "TEXT",
                };
                format!("{} {}", c.name, ty)
            })
            .collect();
        conn.execute_batch(&format!("CREATE TABLE {} ({});", spec.name, cols.join(", ")))?;
        let data = &tables[&spec.name];
        let placeholders: Vec<String> = (1..=spec.columns.len() + 1)
            .map(|i| format!("?{i}"))
            .collect();
        let insert = format!(
            "INSERT INTO {} (rowid, {}) VALUES ({})",
            spec.name,
            spec.columns
                .iter()
                .map(|c| c.name.clone())
                .collect::<Vec<_>>()
                .join(", "),
            placeholders.join(", ")
        );
        let mut stmt = conn.prepare(&insert)?;
        for (idx, row) in data.rows.iter().enumerate() {
            let mut params: Vec<rusqlite::types::Value> =
                vec![rusqlite::types::Value::Integer(idx as i64 + 1)];
            for cell in row {
                params.push(match cell {
                    CellValue::Integer(i) => rusqlite::types::Value::Integer(*i),
                    CellValue::Null => rusqlite::types::Value::Null,
                    other => rusqlite::types::Value::Text(
                        other.sql_text().expect("non-null cell has text"),
                    ),
                });
            }
            stmt.execute(rusqlite::params_from_iter(params))?;
        }
    }
    Ok(conn)
}

pub(super) fn execute(conn: &Connection, store: &FrozenStore, plan: &QueryPlan) -> Result<RowSet> {
    let spec = store.profile().table(&plan.event_table)?.clone();
    let sql = render_sql(plan);
    let mut stmt = conn.prepare(&sql)?;
    let mut row_ids = Vec::new();
    let mut rows = Vec::new();
    let mut raw = stmt.query([])?;
    while let Some(r) = raw.next()? {
        let rid: i64 = r.get(0)?;
        if row_ids.contains(&rid) {
            // multiple dictionary matches duplicate the joined row; row
            // identity is the event row
            continue;
        }
        row_ids.push(rid);
        let mut cells = Vec::with_capacity(spec.columns.len());
        for (i, col) in spec.columns.iter().enumerate() {
            let value = match col.kind {
                ValueKind::Integer => r
                    .get::<_, Option<i64>>(i + 1)?
                    .map(CellValue::Integer)
                    .unwrap_or(CellValue::Null),
                kind => match r.get::<_, Option<String>>(i + 1)? {
                    Some(text) => CellValue::parse(kind, &text)?,
                    None => CellValue::Null,
                },
            };
            cells.push((col.name.clone(), value));
        }
        rows.push(cells);
    }
    Ok(RowSet {
        table: plan.event_table.clone(),
        provenance: ExecutionPath::SqlPath,
        row_ids,
        rows,
    })
}
