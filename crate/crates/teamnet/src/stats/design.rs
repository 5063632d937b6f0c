//! Design-matrix assembly from metric rows.
//!
//! `MetricRow -> NumericTable -> (optional firm aggregation) -> standardize
//! -> interaction column -> DesignMatrix`. Rows with an undefined value in
//! any required column are listwise-dropped and counted. Standardization is
//! applied after aggregation for the firm-level family.

use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

use super::ols::SpecTag;
use super::standardize;
use crate::error::{Error, Result};
use crate::metrics::{BlauVariant, InclusionMetric, MetricRow};

/// Dense numeric table with named columns, one row per observation.
#[derive(Debug, Clone)]
pub struct NumericTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub row_ids: Vec<String>,
    pub groups: Vec<String>,
}

/// Standardized predictors plus outcome, ready for fitting.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub spec: SpecTag,
    pub label: String,
    /// Predictor names; `intercept` first.
    pub columns: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub row_ids: Vec<String>,
    pub groups: Vec<String>,
    pub dropped_rows: usize,
    pub dropped_columns: Vec<String>,
}

impl DesignMatrix {
    /// Copy of the design without the named columns (same rows, same
    /// standardization); the restricted side of a nested comparison.
    pub fn without_columns(&self, names: &[&str]) -> DesignMatrix {
        let kept: Vec<usize> = (0..self.columns.len())
            .filter(|&j| !names.contains(&self.columns[j].as_str()))
            .collect();
        DesignMatrix {
            spec: self.spec,
            label: format!("{}_restricted", self.label),
            columns: kept.iter().map(|&j| self.columns[j].clone()).collect(),
            x: self.x.select_columns(kept.iter()),
            y: self.y.clone(),
            row_ids: self.row_ids.clone(),
            groups: self.groups.clone(),
            dropped_rows: self.dropped_rows,
            dropped_columns: self.dropped_columns.clone(),
        }
    }
}

/// Per-firm arithmetic means of every numeric column. Platform dummy
/// columns average into shares. Output rows are sorted by firm id.
pub fn firm_aggregate(table: &NumericTable) -> NumericTable {
    let mut by_firm: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in table.groups.iter().enumerate() {
        by_firm.entry(g.as_str()).or_default().push(i);
    }
    let mut rows = Vec::with_capacity(by_firm.len());
    let mut row_ids = Vec::with_capacity(by_firm.len());
    let mut groups = Vec::with_capacity(by_firm.len());
    for (firm, members) in &by_firm {
        let inv = 1.0 / members.len() as f64;
        let mean: Vec<f64> = (0..table.columns.len())
            .map(|j| members.iter().map(|&i| table.rows[i][j]).sum::<f64>() * inv)
            .collect();
        rows.push(mean);
        row_ids.push(firm.to_string());
        groups.push(firm.to_string());
    }
    NumericTable {
        columns: table.columns.clone(),
        rows,
        row_ids,
        groups,
    }
}

/// Collect the raw (pre-standardization) column table for one model.
///
/// Columns: diversity, the chosen inclusion metric (if any), every control,
/// one dummy per platform observed in `rows`, and the outcome. Rows with an
/// undefined required value are dropped and counted.
pub fn numeric_table(
    rows: &[MetricRow],
    inclusion: Option<InclusionMetric>,
    blau: BlauVariant,
) -> Result<(NumericTable, Vec<f64>, usize)> {
    let mut platforms: Vec<String> = rows
        .iter()
        .flat_map(|r| r.controls.platforms.iter().cloned())
        .collect();
    platforms.sort();
    platforms.dedup();

    let mut columns = vec!["diversity".to_string()];
    if let Some(m) = inclusion {
        columns.push(m.as_str().to_string());
    }
    columns.extend(
        [
            "team_size",
            "ratio_of_center",
            "n_newbies",
            "n_stars",
            "game_tenure",
            "single_firm",
            "n_countries",
            "release_year",
        ]
        .map(String::from),
    );
    columns.extend(platforms.iter().map(|p| format!("platform_{p}")));

    let mut data = Vec::new();
    let mut outcome = Vec::new();
    let mut row_ids = Vec::new();
    let mut groups = Vec::new();
    let mut dropped = 0usize;
    for r in rows {
        let (div, dist) = match (r.diversity(blau), r.distinctiveness) {
            (Some(d), Some(y)) => (d, y),
            _ => {
                dropped += 1;
                continue;
            }
        };
        let incl = match inclusion {
            Some(m) => match r.inclusion(m) {
                Some(v) => Some(v),
                None => {
                    dropped += 1;
                    continue;
                }
            },
            None => None,
        };
        let mut row = vec![div];
        if let Some(v) = incl {
            row.push(v);
        }
        let c = &r.controls;
        row.extend([
            c.team_size as f64,
            c.ratio_of_center,
            c.n_newbies as f64,
            c.n_stars as f64,
            c.game_tenure,
            if c.single_firm { 1.0 } else { 0.0 },
            c.n_countries as f64,
            c.release_year as f64,
        ]);
        for p in &platforms {
            row.push(if c.platforms.contains(p) { 1.0 } else { 0.0 });
        }
        data.push(row);
        outcome.push(dist);
        row_ids.push(r.project_id.clone());
        groups.push(r.firm_id.clone());
    }

    Ok((
        NumericTable {
            columns,
            rows: data,
            row_ids,
            groups,
        },
        outcome,
        dropped,
    ))
}

/// Build the standardized interaction design for one model specification.
///
/// The interaction column is the elementwise product of the standardized
/// diversity and inclusion columns. Control columns that are constant over
/// the retained rows cannot be standardized and are dropped with a note;
/// a constant diversity, inclusion or outcome column is an error.
pub fn build_interaction_model(
    rows: &[MetricRow],
    inclusion: Option<InclusionMetric>,
    blau: BlauVariant,
    spec: SpecTag,
) -> Result<DesignMatrix> {
    let (mut table, mut outcome, dropped_rows) = numeric_table(rows, inclusion, blau)?;
    if spec == SpecTag::FirmAggregate {
        // Outcome aggregates along with the predictors, then standardize.
        table.columns.push("distinctiveness".into());
        for (row, y) in table.rows.iter_mut().zip(&outcome) {
            row.push(*y);
        }
        table = firm_aggregate(&table);
        outcome = table.rows.iter_mut().map(|r| r.pop().unwrap()).collect();
        table.columns.pop();
    }
    let n = table.rows.len();
    if n < 2 {
        return Err(Error::Numeric(format!(
            "only {n} rows remain after dropping undefined metrics"
        )));
    }

    let essential = |name: &str| {
        name == "diversity" || inclusion.map(|m| m.as_str() == name).unwrap_or(false)
    };

    let mut kept_names: Vec<String> = Vec::new();
    let mut std_cols: Vec<Vec<f64>> = Vec::new();
    let mut dropped_columns = Vec::new();
    for (j, name) in table.columns.iter().enumerate() {
        let raw: Vec<f64> = table.rows.iter().map(|r| r[j]).collect();
        match standardize(name, &raw) {
            Ok(col) => {
                kept_names.push(name.clone());
                std_cols.push(col);
            }
            Err(e) if essential(name) => return Err(e),
            Err(_) => dropped_columns.push(name.clone()),
        }
    }
    let y_std = standardize("distinctiveness", &outcome)?;

    // Interaction: product of the two standardized columns, placed right
    // after the inclusion main effect.
    let mut label = "diversity".to_string();
    if let Some(m) = inclusion {
        let div_idx = kept_names.iter().position(|c| c == "diversity").unwrap();
        let incl_idx = kept_names.iter().position(|c| c == m.as_str()).unwrap();
        let product: Vec<f64> = std_cols[div_idx]
            .iter()
            .zip(&std_cols[incl_idx])
            .map(|(a, b)| a * b)
            .collect();
        let name = format!("diversity_x_{}", m.as_str());
        kept_names.insert(incl_idx + 1, name);
        std_cols.insert(incl_idx + 1, product);
        label = format!("diversity_{}", m.as_str());
    }

    let k = kept_names.len() + 1;
    let mut x = DMatrix::zeros(n, k);
    for i in 0..n {
        x[(i, 0)] = 1.0;
    }
    for (j, col) in std_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            x[(i, j + 1)] = v;
        }
    }
    let mut columns = vec!["intercept".to_string()];
    columns.extend(kept_names);

    Ok(DesignMatrix {
        spec,
        label,
        columns,
        x,
        y: DVector::from_vec(y_std),
        row_ids: table.row_ids,
        groups: table.groups,
        dropped_rows,
        dropped_columns,
    })
}
