//! Cramér's V association between categorical variables.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::schema::{EventDataset, CASE_VARIABLES, LABEL};

#[derive(Debug, Clone, PartialEq)]
pub struct CramersVMatrix {
    /// Variable names in `e_s, e_n, ..., d_c` order.
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Variables observed with a single value; their off-diagonal entries are 0.
    pub degenerate: Vec<String>,
}

/// Uncorrected Cramér's V of two equally long code columns, or `None` when
/// either column takes a single value.
///
/// Levels are the codes actually observed. χ² is evaluated as
/// `n·(Σ n_ij² / (n_i· n_·j) − 1)`, which is exact for perfectly associated
/// columns (every non-zero term is 1).
pub fn cramers_v(a: &[u8], b: &[u8]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "columns must have equal length");
    let n = a.len();
    if n == 0 {
        return None;
    }
    let mut table: BTreeMap<(u8, u8), u64> = BTreeMap::new();
    let mut rows: BTreeMap<u8, u64> = BTreeMap::new();
    let mut cols: BTreeMap<u8, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let (r, c) = (rows.len(), cols.len());
    if r < 2 || c < 2 {
        return None;
    }
    let sum: f64 = table
        .iter()
        .map(|(&(x, y), &nij)| {
            let nij = nij as f64;
            (nij * nij) / (rows[&x] as f64 * cols[&y] as f64)
        })
        .sum();
    let nf = n as f64;
    let chi2 = nf * (sum - 1.0);
    let v = (chi2 / (nf * (r.min(c) - 1) as f64)).sqrt();
    Some(v.clamp(0.0, 1.0))
}

/// 8×8 matrix over the label and the seven case variables.
pub fn cramers_v_matrix(dataset: &EventDataset) -> Result<CramersVMatrix> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = dataset.labels()?;
    let mut columns: Vec<Vec<u8>> = vec![labels];
    for k in 0..CASE_VARIABLES.len() {
        columns.push(dataset.rows.iter().map(|r| r.codes()[k]).collect());
    }
    let names: Vec<String> = std::iter::once(LABEL)
        .chain(CASE_VARIABLES)
        .map(str::to_string)
        .collect();
    let m = columns.len();
    let mut values = vec![vec![0.0; m]; m];
    let mut degenerate = Vec::new();
    for i in 0..m {
        values[i][i] = 1.0;
        let first = columns[i][0];
        if columns[i].iter().all(|&c| c == first) {
            degenerate.push(names[i].clone());
        }
        for j in (i + 1)..m {
            let v = cramers_v(&columns[i], &columns[j]).unwrap_or(0.0);
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(CramersVMatrix {
        names,
        values,
        degenerate,
    })
}

impl CramersVMatrix {
    /// Plain-text report, one row per variable.
    pub fn to_report(&self) -> String {
        let mut out = String::from("variable");
        for n in &self.names {
            out.push_str(&format!(" {n:>8}"));
        }
        out.push('\n');
        for (n, row) in self.names.iter().zip(&self.values) {
            out.push_str(&format!("{n:<8}"));
            for v in row {
                out.push_str(&format!(" {v:>8.4}"));
            }
            out.push('\n');
        }
        if !self.degenerate.is_empty() {
            out.push_str(&format!("degenerate: {}\n", self.degenerate.join(",")));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("variable,{}\n", self.names.join(","));
        for (n, row) in self.names.iter().zip(&self.values) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            out.push_str(&format!("{n},{}\n", cells.join(",")));
        }
        out
    }
}
