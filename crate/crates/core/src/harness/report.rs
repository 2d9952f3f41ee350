use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::ResultRow;
use crate::datagen::ModelKind;
use crate::error::Result;
use crate::methods::Method;

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

/// Mean full-information gaps per method for one (size, model, instance type) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n_customers: usize,
    pub model: ModelKind,
    /// Leading letters of the instance name, e.g. `RC`.
    pub kind: String,
    pub gaps: BTreeMap<Method, f64>,
    /// Mean absolute test cost of Full.
    pub full_abs: f64,
    pub count: usize,
}

fn instance_type(name: &str) -> String {
    name.chars().take_while(|c| c.is_ascii_alphabetic()).collect()
}

pub fn aggregate(rows: &[ResultRow]) -> Vec<TableRow> {
    type Key = (usize, ModelKind, String);
    let mut sums: BTreeMap<Key, (BTreeMap<Method, (f64, usize)>, f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = sums.entry((r.n_customers, r.model, instance_type(&r.instance))).or_default();
        let g = e.0.entry(r.method).or_default();
        g.0 += r.gap;
        g.1 += 1;
        if r.method == Method::Full {
            e.1 += r.test_cost;
            e.2 += 1;
        }
    }
    sums.into_iter()
        .map(|((n, model, kind), (gaps, full, count))| TableRow {
            n_customers: n,
            model,
            kind,
            gaps: gaps
                .into_iter()
                .filter(|(m, _)| *m != Method::Full)
                .map(|(m, (s, c))| (m, s / c as f64))
                .collect(),
            full_abs: if count > 0 { full / count as f64 } else { f64::NAN },
            count,
        })
        .collect()
}

/// Writes the aggregate as CSV with one column per method and `Full (Abs.)` last.
pub fn write_table(path: &Path, table: &[TableRow]) -> Result<()> {
    let methods: Vec<Method> = Method::ALL
        .into_iter()
        .filter(|m| *m != Method::Full && table.iter().any(|t| t.gaps.contains_key(m)))
        .collect();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["N".to_string(), "model".into(), "type".into()];
    header.extend(methods.iter().map(|m| m.as_str().to_string()));
    header.push("Full (Abs.)".into());
    w.write_record(&header)?;
    for t in table {
        let mut rec = vec![t.n_customers.to_string(), t.model.to_string(), t.kind.clone()];
        rec.extend(methods.iter().map(|m| t.gaps.get(m).map_or(String::new(), |g| format!("{g:.2}"))));
        rec.push(format!("{:.2}", t.full_abs));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
