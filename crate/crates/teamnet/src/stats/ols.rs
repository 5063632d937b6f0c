//! OLS estimation, firm fixed effects, and nested model comparison.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use super::design::DesignMatrix;
use super::{CiMode, StatsConfig};
use crate::error::{Error, Result};

/// Relative singular-value cutoff for the rank check.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecTag {
    Baseline,
    FixedEffects,
    FirmAggregate,
}

impl SpecTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SpecTag::Baseline => "baseline",
            SpecTag::FixedEffects => "fixed_effects",
            SpecTag::FirmAggregate => "firm_aggregate",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermFit {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFit {
    pub spec: SpecTag,
    /// Model label, e.g. `diversity` or `diversity_x_bonding`.
    pub label: String,
    pub terms: Vec<TermFit>,
    pub ssr: f64,
    pub n: usize,
    /// Residual degrees of freedom used for the error variance.
    pub dof: usize,
    /// Rows dropped for undefined metrics before fitting.
    pub dropped_rows: usize,
    /// Columns dropped before fitting (constant dummies; demeaned-away
    /// columns under fixed effects).
    pub dropped_columns: Vec<String>,
}

impl ModelFit {
    pub fn term(&self, name: &str) -> Option<&TermFit> {
        self.terms.iter().find(|t| t.term == name)
    }

    /// Significance at the 95% level: the CI excludes zero.
    pub fn significant(&self, name: &str) -> Option<bool> {
        self.term(name).map(|t| t.ci_low > 0.0 || t.ci_high < 0.0)
    }
}

fn ci_half_width(cfg: &StatsConfig, se: f64, dof: usize) -> f64 {
    match cfg.ci {
        CiMode::Normal => 1.96 * se,
        CiMode::StudentT => {
            let t = StudentsT::new(0.0, 1.0, dof.max(1) as f64)
                .map(|d| d.inverse_cdf(0.975))
                .unwrap_or(1.96);
            t * se
        }
    }
}

struct Solved {
    beta: DVector<f64>,
    ssr: f64,
    xtx_inv_diag: Vec<f64>,
}

/// Least squares via SVD with an explicit rank check; near-null right
/// singular vectors identify the collinear columns for the diagnostic.
fn solve_least_squares(columns: &[String], x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Solved> {
    let n = x.nrows();
    let k = x.ncols();
    if n <= k {
        return Err(Error::Numeric(format!(
            "need more rows than predictors to fit: n={n}, k={k}"
        )));
    }
    let svd = x.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    if sigma_max == 0.0 {
        return Err(Error::RankDeficient(columns.to_vec()));
    }
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut collinear: Vec<String> = Vec::new();
    for (j, &s) in sigma.iter().enumerate() {
        if s / sigma_max < RANK_TOL {
            for i in 0..k {
                if v_t[(j, i)].abs() > 1e-6 && !collinear.contains(&columns[i]) {
                    collinear.push(columns[i].clone());
                }
            }
        }
    }
    if !collinear.is_empty() {
        collinear.sort();
        return Err(Error::RankDeficient(collinear));
    }

    let beta = svd
        .solve(y, sigma_max * RANK_TOL)
        .map_err(|e| Error::Numeric(format!("SVD solve failed: {e}")))?;
    let residuals = y - x * &beta;
    let ssr = residuals.dot(&residuals);

    // (X'X)^-1 diagonal via V * diag(sigma^-2) * V'.
    let mut xtx_inv_diag = vec![0.0f64; k];
    for (i, d) in xtx_inv_diag.iter_mut().enumerate() {
        for (j, &s) in sigma.iter().enumerate() {
            let v_ij = v_t[(j, i)];
            *d += v_ij * v_ij / (s * s);
        }
    }
    Ok(Solved {
        beta,
        ssr,
        xtx_inv_diag,
    })
}

fn fit_with_dof(
    spec: SpecTag,
    label: &str,
    columns: &[String],
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    dof: usize,
    cfg: &StatsConfig,
) -> Result<ModelFit> {
    if dof == 0 {
        return Err(Error::Numeric(format!(
            "model `{label}` has zero residual degrees of freedom"
        )));
    }
    let solved = solve_least_squares(columns, x, y)?;
    let sigma2 = solved.ssr / dof as f64;
    let terms = columns
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let se = (sigma2 * solved.xtx_inv_diag[i]).max(0.0).sqrt();
            let hw = ci_half_width(cfg, se, dof);
            let estimate = solved.beta[i];
            TermFit {
                term: name.clone(),
                estimate,
                se,
                ci_low: estimate - hw,
                ci_high: estimate + hw,
            }
        })
        .collect();
    Ok(ModelFit {
        spec,
        label: label.to_string(),
        terms,
        ssr: solved.ssr,
        n: x.nrows(),
        dof,
        dropped_rows: 0,
        dropped_columns: Vec::new(),
    })
}

/// Classical OLS with sigma^2 * (X'X)^-1 standard errors.
pub fn ols_fit(design: &DesignMatrix, cfg: &StatsConfig) -> Result<ModelFit> {
    let dof = design
        .x
        .nrows()
        .checked_sub(design.x.ncols())
        .unwrap_or(0);
    let mut fit = fit_with_dof(
        design.spec,
        &design.label,
        &design.columns,
        &design.x,
        &design.y,
        dof,
        cfg,
    )?;
    fit.dropped_rows = design.dropped_rows;
    fit.dropped_columns = design.dropped_columns.clone();
    Ok(fit)
}

/// Firm fixed effects via the within transformation.
///
/// Every column and the outcome are demeaned within firm, which absorbs
/// per-firm intercepts. Columns that are constant within every firm (the
/// intercept, firm-level controls) vanish under demeaning and are dropped.
/// Residual degrees of freedom are reduced by the number of firms.
pub fn fixed_effects_fit(design: &DesignMatrix, cfg: &StatsConfig) -> Result<ModelFit> {
    // Keep only firms with at least two rows; singletons carry no within
    // variation and would silently inflate n.
    let mut firm_counts: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    for g in &design.groups {
        *firm_counts.entry(g.as_str()).or_insert(0) += 1;
    }
    let retained: Vec<usize> = (0..design.groups.len())
        .filter(|&i| firm_counts[design.groups[i].as_str()] >= 2)
        .collect();
    if retained.is_empty() {
        return Err(Error::Numeric(
            "fixed effects: every firm has a single row".into(),
        ));
    }
    let dropped_singletons = design.groups.len() - retained.len();

    let k_all = design.x.ncols();
    let mut x = DMatrix::zeros(retained.len(), k_all);
    let mut y = DVector::zeros(retained.len());
    let mut groups: Vec<&str> = Vec::with_capacity(retained.len());
    for (new_i, &old_i) in retained.iter().enumerate() {
        for j in 0..k_all {
            x[(new_i, j)] = design.x[(old_i, j)];
        }
        y[new_i] = design.y[old_i];
        groups.push(design.groups[old_i].as_str());
    }

    // Within-firm demeaning.
    let mut by_firm: std::collections::BTreeMap<&str, Vec<usize>> = std::collections::BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        by_firm.entry(g).or_default().push(i);
    }
    let n_groups = by_firm.len();
    for rows in by_firm.values() {
        let inv = 1.0 / rows.len() as f64;
        for j in 0..k_all {
            let mean: f64 = rows.iter().map(|&i| x[(i, j)]).sum::<f64>() * inv;
            for &i in rows {
                x[(i, j)] -= mean;
            }
        }
        let mean_y: f64 = rows.iter().map(|&i| y[i]).sum::<f64>() * inv;
        for &i in rows {
            y[i] -= mean_y;
        }
    }

    // Drop columns annihilated by demeaning (constant within every firm).
    let mut kept_cols = Vec::new();
    let mut dropped_columns = Vec::new();
    for j in 0..k_all {
        let norm: f64 = (0..x.nrows()).map(|i| x[(i, j)] * x[(i, j)]).sum();
        if norm.sqrt() < 1e-9 {
            dropped_columns.push(design.columns[j].clone());
        } else {
            kept_cols.push(j);
        }
    }
    if kept_cols.is_empty() {
        return Err(Error::Numeric(
            "fixed effects: all predictors are firm-constant".into(),
        ));
    }
    let columns: Vec<String> = kept_cols.iter().map(|&j| design.columns[j].clone()).collect();
    let x_kept = x.select_columns(kept_cols.iter());

    let n = x_kept.nrows();
    let dof = n
        .checked_sub(kept_cols.len() + n_groups)
        .filter(|&d| d > 0)
        .ok_or_else(|| {
            Error::Numeric(format!(
                "fixed effects: no residual degrees of freedom (n={n}, k={}, firms={n_groups})",
                kept_cols.len()
            ))
        })?;

    let mut fit = fit_with_dof(
        SpecTag::FixedEffects,
        &design.label,
        &columns,
        &x_kept,
        &y,
        dof,
        cfg,
    )?;
    fit.dropped_rows = design.dropped_rows + dropped_singletons;
    fit.dropped_columns = design
        .dropped_columns
        .iter()
        .cloned()
        .chain(dropped_columns)
        .collect();
    Ok(fit)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FTestResult {
    pub f: f64,
    pub p: f64,
    /// Number of restrictions (added columns).
    pub df_num: usize,
    pub df_den: usize,
    pub ssr_restricted: f64,
    pub ssr_full: f64,
}

/// Nested model comparison: `F = ((SSR_r - SSR_f)/q) / (SSR_f/(n - k_f))`.
pub fn nested_f_test(restricted: &ModelFit, full: &ModelFit) -> Result<FTestResult> {
    if restricted.n != full.n {
        return Err(Error::Numeric(format!(
            "nested F-test needs identical rows: n={} vs n={}",
            restricted.n, full.n
        )));
    }
    for t in &restricted.terms {
        if full.term(&t.term).is_none() {
            return Err(Error::Numeric(format!(
                "nested F-test: restricted term `{}` missing from full model",
                t.term
            )));
        }
    }
    let q = full.terms.len() - restricted.terms.len();
    if q == 0 {
        return Ok(FTestResult {
            f: 0.0,
            p: 1.0,
            df_num: 0,
            df_den: full.dof,
            ssr_restricted: restricted.ssr,
            ssr_full: full.ssr,
        });
    }
    let tol = 1e-8 * restricted.ssr.max(1.0);
    if full.ssr > restricted.ssr + tol {
        return Err(Error::Numeric(format!(
            "nesting violated: full SSR {} exceeds restricted SSR {}",
            full.ssr, restricted.ssr
        )));
    }
    let df_den = full.dof;
    let f = ((restricted.ssr - full.ssr).max(0.0) / q as f64) / (full.ssr / df_den as f64);
    let dist = FisherSnedecor::new(q as f64, df_den as f64)
        .map_err(|e| Error::Numeric(format!("F distribution: {e}")))?;
    let p = (1.0 - dist.cdf(f)).clamp(0.0, 1.0);
    Ok(FTestResult {
        f,
        p,
        df_num: q,
        df_den,
        ssr_restricted: restricted.ssr,
        ssr_full: full.ssr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::design::DesignMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn design(columns: &[&str], x: Vec<Vec<f64>>, y: Vec<f64>, groups: Vec<String>) -> DesignMatrix {
        let n = x.len();
        let k = columns.len();
        let flat: Vec<f64> = x.into_iter().flatten().collect();
        DesignMatrix {
            spec: SpecTag::Baseline,
            label: "test".into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            x: DMatrix::from_row_slice(n, k, &flat),
            y: DVector::from_vec(y),
            row_ids: (0..n).map(|i| i.to_string()).collect(),
            groups,
            dropped_rows: 0,
            dropped_columns: Vec::new(),
        }
    }

    #[test]
    fn exact_linear_fit_recovers_slope_with_zero_ssr() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        let d = design(&["intercept", "x"], x, y, vec!["f".into(); 10]);
        let fit = ols_fit(&d, &StatsConfig::default()).unwrap();
        assert!((fit.term("x").unwrap().estimate - 2.0).abs() < 1e-10);
        assert!(fit.term("intercept").unwrap().estimate.abs() < 1e-10);
        assert!(fit.ssr < 1e-18);
    }

    #[test]
    fn null_slope_ci_covers_zero_in_most_replications() {
        let mut covered = 0;
        for seed in 0..100u64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let n = 10_000;
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![1.0, rng.gen_range(-1.0..1.0)])
                .collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d = design(&["intercept", "x"], x, y, vec!["f".into(); n]);
            let fit = ols_fit(&d, &StatsConfig::default()).unwrap();
            let t = fit.term("x").unwrap();
            if t.ci_low <= 0.0 && 0.0 <= t.ci_high {
                covered += 1;
            }
        }
        assert!(covered >= 93, "covered {covered}/100");
    }

    #[test]
    fn rank_deficiency_names_collinear_columns() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let v = i as f64;
                vec![1.0, v, 2.0 * v]
            })
            .collect();
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let d = design(&["intercept", "a", "a_twice"], x, y, vec!["f".into(); 20]);
        match ols_fit(&d, &StatsConfig::default()) {
            Err(Error::RankDeficient(cols)) => {
                assert!(cols.contains(&"a".to_string()) && cols.contains(&"a_twice".to_string()));
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn residuals_orthogonal_to_design_columns() {
        let mut rng = StdRng::seed_from_u64(7);
        let n = 500;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![1.0, rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)])
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| 0.5 + r[1] - 0.3 * r[2] + rng.gen_range(-1.0..1.0))
            .collect();
        let d = design(&["intercept", "a", "b"], x, y, vec!["f".into(); n]);
        let fit = ols_fit(&d, &StatsConfig::default()).unwrap();
        let beta = DVector::from_vec(fit.terms.iter().map(|t| t.estimate).collect::<Vec<_>>());
        let resid = &d.y - &d.x * beta;
        let xt_e = d.x.transpose() * resid;
        assert!(xt_e.iter().all(|v| v.abs() < 1e-8), "X'e = {xt_e:?}");
    }

    #[test]
    fn fixed_effects_invariant_to_firm_offsets() {
        let mut rng = StdRng::seed_from_u64(3);
        let firms = ["a", "b", "c", "d"];
        let mut x_rows = Vec::new();
        let mut y0 = Vec::new();
        let mut y_off = Vec::new();
        let mut groups = Vec::new();
        for (fi, f) in firms.iter().enumerate() {
            for _ in 0..25 {
                let v = rng.gen_range(0.0..3.0);
                let noise = rng.gen_range(-0.5..0.5);
                x_rows.push(vec![1.0, v]);
                y0.push(1.5 * v + noise);
                y_off.push(1.5 * v + noise + (fi as f64) * 10.0);
                groups.push(f.to_string());
            }
        }
        let d0 = design(&["intercept", "x"], x_rows.clone(), y0, groups.clone());
        let d1 = design(&["intercept", "x"], x_rows, y_off, groups);
        let f0 = fixed_effects_fit(&d0, &StatsConfig::default()).unwrap();
        let f1 = fixed_effects_fit(&d1, &StatsConfig::default()).unwrap();
        let s0 = f0.term("x").unwrap().estimate;
        let s1 = f1.term("x").unwrap().estimate;
        assert!((s0 - s1).abs() < 1e-8);
        assert!(f0.dropped_columns.contains(&"intercept".to_string()));
    }

    #[test]
    fn nested_f_identical_models() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| 0.3 * i as f64 + ((i * 7) % 5) as f64).collect();
        let d = design(&["intercept", "x"], x, y, vec!["f".into(); 30]);
        let fit = ols_fit(&d, &StatsConfig::default()).unwrap();
        let ft = nested_f_test(&fit, &fit).unwrap();
        assert_eq!(ft.f, 0.0);
        assert_eq!(ft.p, 1.0);
    }

    #[test]
    fn nested_f_detects_planted_predictor() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = 1000;
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x_r: Vec<Vec<f64>> = (0..n).map(|i| vec![1.0, (i % 13) as f64]).collect();
        let x_f: Vec<Vec<f64>> = x_r
            .iter()
            .zip(&z)
            .map(|(r, &zi)| vec![r[0], r[1], zi])
            .collect();
        let y: Vec<f64> = x_f
            .iter()
            .map(|r| 0.1 * r[1] + 2.0 * r[2] + rng.gen_range(-1.0..1.0))
            .collect();
        let d_r = design(&["intercept", "x"], x_r, y.clone(), vec!["f".into(); n]);
        let d_f = design(&["intercept", "x", "z"], x_f, y, vec!["f".into(); n]);
        let fit_r = ols_fit(&d_r, &StatsConfig::default()).unwrap();
        let fit_f = ols_fit(&d_f, &StatsConfig::default()).unwrap();
        let ft = nested_f_test(&fit_r, &fit_f).unwrap();
        assert!(ft.p < 0.001, "p = {}", ft.p);
    }

    #[test]
    fn coefficients_invariant_to_column_order() {
        let mut rng = StdRng::seed_from_u64(19);
        let n = 200;
        let rows: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)))
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|&(a, b)| 1.0 + 0.8 * a - 0.4 * b + rng.gen_range(-0.2..0.2))
            .collect();
        let xa: Vec<Vec<f64>> = rows.iter().map(|&(a, b)| vec![1.0, a, b]).collect();
        let xb: Vec<Vec<f64>> = rows.iter().map(|&(a, b)| vec![1.0, b, a]).collect();
        let da = design(&["intercept", "a", "b"], xa, y.clone(), vec!["f".into(); n]);
        let db = design(&["intercept", "b", "a"], xb, y, vec!["f".into(); n]);
        let fa = ols_fit(&da, &StatsConfig::default()).unwrap();
        let fb = ols_fit(&db, &StatsConfig::default()).unwrap();
        for name in ["intercept", "a", "b"] {
            let ta = fa.term(name).unwrap();
            let tb = fb.term(name).unwrap();
            assert!((ta.estimate - tb.estimate).abs() < 1e-10);
            assert_eq!(fa.significant(name), fb.significant(name));
        }
    }
}
