//! Brute-force plan execution: the definitional query semantics.

use std::collections::HashMap;

use crate::cell::CellValue;
use crate::error::Result;
use crate::plan::{QueryPlan, TimeBinding};
use crate::store::{ExecutionPath, FrozenStore, RowSet, TableData};

pub(super) fn execute(store: &FrozenStore, plan: &QueryPlan) -> Result<RowSet> {
    let event = store.table_data(&plan.event_table)?;
    // dictionary rows grouped by join key, one map per alias
    let mut dict_rows: HashMap<&str, (&TableData, HashMap<&CellValue, Vec<usize>>)> =
        HashMap::new();
    for join in &plan.joins {
        let dict = store.table_data(&join.dict_table)?;
        let mut by_key: HashMap<&CellValue, Vec<usize>> = HashMap::new();
        for (idx, row) in dict.rows.iter().enumerate() {
            if let Some(key) = dict.cell(row, &join.dict_column) {
                if !key.is_null() {
                    by_key.entry(key).or_default().push(idx);
                }
            }
        }
        dict_rows.insert(join.alias.as_str(), (dict, by_key));
    }

    let mut row_ids = Vec::new();
    let mut rows = Vec::new();
    'rows: for (idx, row) in event.rows.iter().enumerate() {
        // admission scope
        match event.cell(row, &plan.admission_column) {
            Some(CellValue::Integer(k)) if *k == plan.admission_key => {}
            _ => continue,
        }
        // time window
        if let Some(w) = &plan.window {
            let ok = match &w.binding {
                TimeBinding::Point { column } => match event.cell(row, column) {
                    Some(CellValue::DateTime(t)) => w.accepts_point(*t),
                    _ => false,
                },
                TimeBinding::Interval {
                    start_column,
                    end_column,
                } => match event.cell(row, start_column) {
                    Some(CellValue::DateTime(s)) => {
                        let e = event
                            .cell(row, end_column)
                            .and_then(|c| c.as_datetime());
                        w.accepts_interval(*s, e)
                    }
                    _ => false,
                },
            };
            if !ok {
                continue;
            }
        }
        // value conditions (exact equality on typed cells)
        for cond in &plan.values {
            match event.cell(row, &cond.column) {
                Some(cell) if !cell.is_null() && *cell == cond.value => {}
                _ => continue 'rows,
            }
        }
        // inner joins: every alias needs at least one key match
        let mut alias_matches: HashMap<&str, &Vec<usize>> = HashMap::new();
        for join in &plan.joins {
            let key = match event.cell(row, &join.child_column) {
                Some(k) if !k.is_null() => k,
                _ => continue 'rows,
            };
            let (_, by_key) = &dict_rows[join.alias.as_str()];
            match by_key.get(key) {
                Some(rows) if !rows.is_empty() => {
                    alias_matches.insert(join.alias.as_str(), rows);
                }
                _ => continue 'rows,
            }
        }
        // item-label disjunction
        if !plan.items.is_empty() {
            let satisfied = plan.items.iter().any(|item| {
                if item.target.eq_ignore_ascii_case(&plan.event_table) {
                    matches!(
                        event.cell(row, &item.column),
                        Some(CellValue::Text(t)) if *t == item.label
                    )
                } else {
                    let Some(candidates) = alias_matches.get(item.target.as_str()) else {
                        return false;
                    };
                    let (dict, _) = &dict_rows[item.target.as_str()];
                    candidates.iter().any(|&i| {
                        matches!(
                            dict.cell(&dict.rows[i], &item.column),
                            Some(CellValue::Text(t)) if *t == item.label
                        )
                    })
                }
            });
            if !satisfied {
                continue;
            }
        }
        row_ids.push(idx as i64 + 1);
        rows.push(
            event
                .spec
                .columns
                .iter()
                .zip(row.iter())
                .map(|(c, v)| (c.name.clone(), v.clone()))
                .collect(),
        );
    }
    Ok(RowSet {
        table: plan.event_table.clone(),
        provenance: ExecutionPath::ScanPath,
        row_ids,
        rows,
    })
}
