//! Firm-level sequences and transfer entropy.
//!
//! Firms with enough analyzed projects get a time-ordered series of
//! (diversity, combined inclusion). Transfer entropy between the two series
//! is estimated in both directions with a plug-in (maximum-likelihood)
//! entropy over quantile-binned symbols; because release dates are annual,
//! same-year projects are re-ordered across many random tie sortings and
//! the transfer entropies averaged.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::metrics::{BlauVariant, MetricRow};
use crate::rng::substream;
use crate::stats::{ols_fit, standardize, DesignMatrix, ModelFit, SpecTag, StatsConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeseriesConfig {
    /// Minimum analyzed projects for a firm to enter the sequence analysis.
    pub min_games: usize,
    /// Embedding history length L.
    pub lag: usize,
    /// Quantile bins for discretization.
    pub bins: usize,
    /// Random tie sortings per firm.
    pub n_permutations: usize,
    /// Miller-Madow bias correction for the plug-in entropies
    /// (sensitivity flag; off by default).
    pub miller_madow: bool,
}

impl Default for TimeseriesConfig {
    fn default() -> Self {
        TimeseriesConfig {
            min_games: 4,
            lag: 1,
            bins: 2,
            n_permutations: 500,
            miller_madow: false,
        }
    }
}

/// Time-ordered per-firm series of (diversity, combined inclusion).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FirmSeries {
    pub firm_id: String,
    pub project_ids: Vec<String>,
    /// Non-decreasing release years.
    pub years: Vec<i32>,
    pub diversity: Vec<f64>,
    pub inclusion: Vec<f64>,
}

impl FirmSeries {
    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    /// Half-open index ranges of same-year runs with at least two entries.
    pub fn tie_groups(&self) -> Vec<(usize, usize)> {
        let mut groups = Vec::new();
        let mut start = 0usize;
        for i in 1..=self.years.len() {
            if i == self.years.len() || self.years[i] != self.years[start] {
                if i - start >= 2 {
                    groups.push((start, i));
                }
                start = i;
            }
        }
        groups
    }
}

/// Group metric rows into qualifying firm series.
///
/// Only rows with both diversity and combined inclusion defined can enter a
/// series; the second element of the return value counts the skipped rows.
/// Rows are assumed in (year, project_id) order, which metric tables are.
pub fn build_firm_series(
    rows: &[MetricRow],
    blau: BlauVariant,
    min_games: usize,
) -> (Vec<FirmSeries>, usize) {
    let mut by_firm: BTreeMap<&str, FirmSeries> = BTreeMap::new();
    let mut skipped = 0usize;
    for r in rows {
        let (div, incl) = match (r.diversity(blau), r.combined) {
            (Some(d), Some(i)) => (d, i),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let entry = by_firm
            .entry(r.firm_id.as_str())
            .or_insert_with(|| FirmSeries {
                firm_id: r.firm_id.clone(),
                project_ids: Vec::new(),
                years: Vec::new(),
                diversity: Vec::new(),
                inclusion: Vec::new(),
            });
        entry.project_ids.push(r.project_id.clone());
        entry.years.push(r.controls.release_year);
        entry.diversity.push(div);
        entry.inclusion.push(incl);
    }
    let series = by_firm
        .into_values()
        .filter(|s| s.len() >= min_games)
        .collect();
    (series, skipped)
}

/// Quantile binning with ties assigned to the lower bin.
///
/// Bin edges are linear-interpolation quantiles of the series itself; a
/// value maps to the number of edges strictly below it, so a constant
/// series maps to all zeros.
pub fn discretize(series: &[f64], bins: usize) -> Result<Vec<u16>> {
    if bins < 2 {
        return Err(Error::Numeric(format!("discretize: bins must be >= 2, got {bins}")));
    }
    if series.len() < bins {
        return Err(Error::Numeric(format!(
            "discretize: series of length {} is shorter than {bins} bins",
            series.len()
        )));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let edges: Vec<f64> = (1..bins)
        .map(|i| {
            let pos = (i as f64 / bins as f64) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if lo + 1 < n {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            } else {
                sorted[lo]
            }
        })
        .collect();
    Ok(series
        .iter()
        .map(|&v| edges.iter().filter(|&&e| v > e).count() as u16)
        .collect())
}

fn entropy_bits(counts: &BTreeMap<Vec<u16>, u32>, total: usize, miller_madow: bool) -> f64 {
    let n = total as f64;
    let mut h = 0.0;
    for &c in counts.values() {
        let p = c as f64 / n;
        h -= p * p.log2();
    }
    if miller_madow {
        h += (counts.len().saturating_sub(1)) as f64 / (2.0 * n * std::f64::consts::LN_2);
    }
    h
}

/// Plug-in transfer entropy from `x` to `y` in bits:
/// the entropy of `y_t` conditional on its own `lag`-history, minus the
/// entropy conditional on both histories.
pub fn transfer_entropy(x: &[u16], y: &[u16], lag: usize, miller_madow: bool) -> Result<f64> {
    if lag == 0 {
        return Err(Error::Numeric("transfer entropy: lag must be >= 1".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Numeric(format!(
            "transfer entropy: length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if y.len() < lag + 2 {
        return Err(Error::Numeric(format!(
            "transfer entropy: series of length {} too short for lag {lag}",
            y.len()
        )));
    }

    let mut yt_ypast_xpast: BTreeMap<Vec<u16>, u32> = BTreeMap::new();
    let mut ypast_xpast: BTreeMap<Vec<u16>, u32> = BTreeMap::new();
    let mut yt_ypast: BTreeMap<Vec<u16>, u32> = BTreeMap::new();
    let mut ypast: BTreeMap<Vec<u16>, u32> = BTreeMap::new();
    let mut total = 0usize;
    for t in lag..y.len() {
        let y_hist = &y[t - lag..t];
        let x_hist = &x[t - lag..t];
        let mut k_full = Vec::with_capacity(1 + 2 * lag);
        k_full.push(y[t]);
        k_full.extend_from_slice(y_hist);
        k_full.extend_from_slice(x_hist);
        let k_past_joint = k_full[1..].to_vec();
        let k_yy = k_full[..1 + lag].to_vec();
        let k_y = y_hist.to_vec();
        *yt_ypast_xpast.entry(k_full).or_insert(0) += 1;
        *ypast_xpast.entry(k_past_joint).or_insert(0) += 1;
        *yt_ypast.entry(k_yy).or_insert(0) += 1;
        *ypast.entry(k_y).or_insert(0) += 1;
        total += 1;
    }

    let h_yy = entropy_bits(&yt_ypast, total, miller_madow);
    let h_y = entropy_bits(&ypast, total, miller_madow);
    let h_full = entropy_bits(&yt_ypast_xpast, total, miller_madow);
    let h_joint_past = entropy_bits(&ypast_xpast, total, miller_madow);
    Ok((h_yy - h_y) - (h_full - h_joint_past))
}

/// Mean transfer entropies over random sortings of same-year ties.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TEResult {
    pub te_d_to_i: f64,
    pub te_i_to_d: f64,
    pub n_permutations: usize,
    pub lag: usize,
    pub bins: usize,
    /// Embedded points per permutation (series length minus lag).
    pub effective_n: usize,
}

/// Average both transfer entropies over `n_permutations` seeded shufflings
/// of the within-year tie groups. Deterministic given the master seed; the
/// per-firm stream is independent of scheduling.
pub fn tie_permutation_te(
    series: &FirmSeries,
    cfg: &TimeseriesConfig,
    master_seed: u64,
) -> Result<TEResult> {
    let d_sym = discretize(&series.diversity, cfg.bins)?;
    let i_sym = discretize(&series.inclusion, cfg.bins)?;
    let groups = series.tie_groups();
    let effective_n = series.len() - cfg.lag;

    let te_pair = |d: &[u16], i: &[u16]| -> Result<(f64, f64)> {
        Ok((
            transfer_entropy(d, i, cfg.lag, cfg.miller_madow)?,
            transfer_entropy(i, d, cfg.lag, cfg.miller_madow)?,
        ))
    };

    if groups.is_empty() || cfg.n_permutations == 0 {
        let (di, id) = te_pair(&d_sym, &i_sym)?;
        return Ok(TEResult {
            te_d_to_i: di,
            te_i_to_d: id,
            n_permutations: cfg.n_permutations,
            lag: cfg.lag,
            bins: cfg.bins,
            effective_n,
        });
    }

    let mut rng = substream(master_seed, "tie_sorting", &series.firm_id);
    let mut order: Vec<usize> = (0..series.len()).collect();
    let mut d_perm = vec![0u16; series.len()];
    let mut i_perm = vec![0u16; series.len()];
    let mut sum_di = 0.0;
    let mut sum_id = 0.0;
    for _ in 0..cfg.n_permutations {
        for &(start, end) in &groups {
            order[start..end].shuffle(&mut rng);
        }
        for (slot, &src) in order.iter().enumerate() {
            d_perm[slot] = d_sym[src];
            i_perm[slot] = i_sym[src];
        }
        let (di, id) = te_pair(&d_perm, &i_perm)?;
        sum_di += di;
        sum_id += id;
    }
    Ok(TEResult {
        te_d_to_i: sum_di / cfg.n_permutations as f64,
        te_i_to_d: sum_id / cfg.n_permutations as f64,
        n_permutations: cfg.n_permutations,
        lag: cfg.lag,
        bins: cfg.bins,
        effective_n,
    })
}

/// OLS slope of the values against the observation index 0..n-1.
pub fn trend(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::Numeric(format!(
            "trend: need at least 2 observations, got {n}"
        )));
    }
    let nf = n as f64;
    let mean_i = (nf - 1.0) / 2.0;
    let mean_v = series.iter().sum::<f64>() / nf;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &v) in series.iter().enumerate() {
        let di = i as f64 - mean_i;
        num += di * (v - mean_v);
        den += di * di;
    }
    Ok(num / den)
}

/// One firm's sequence summary: transfer entropies plus outcomes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequencePoint {
    pub firm_id: String,
    pub n_obs: usize,
    pub te: TEResult,
    pub final_diversity: f64,
    pub final_inclusion: f64,
    pub trend_diversity: f64,
    pub trend_inclusion: f64,
}

/// Compute per-firm transfer entropies and outcome summaries.
/// Firms are independent work units; output keeps input (firm id) order.
pub fn sequence_points(
    series_list: &[FirmSeries],
    cfg: &TimeseriesConfig,
    master_seed: u64,
) -> Result<Vec<SequencePoint>> {
    series_list
        .par_iter()
        .map(|s| {
            let te = tie_permutation_te(s, cfg, master_seed)?;
            Ok(SequencePoint {
                firm_id: s.firm_id.clone(),
                n_obs: s.len(),
                te,
                final_diversity: *s.diversity.last().expect("non-empty series"),
                final_inclusion: *s.inclusion.last().expect("non-empty series"),
                trend_diversity: trend(&s.diversity)?,
                trend_inclusion: trend(&s.inclusion)?,
            })
        })
        .collect()
}

pub const SEQUENCE_OUTCOMES: [&str; 4] = [
    "final_diversity",
    "final_inclusion",
    "trend_diversity",
    "trend_inclusion",
];

/// The four outcome regressions: each outcome on both standardized transfer
/// entropies entered jointly.
pub fn sequence_outcome_models(
    points: &[SequencePoint],
    stats_cfg: &StatsConfig,
) -> Result<Vec<ModelFit>> {
    if points.len() < 10 {
        return Err(Error::Numeric(format!(
            "sequence models: need at least 10 firms, got {}",
            points.len()
        )));
    }
    let te_di: Vec<f64> = points.iter().map(|p| p.te.te_d_to_i).collect();
    let te_id: Vec<f64> = points.iter().map(|p| p.te.te_i_to_d).collect();
    let te_di_std = standardize("te_d_to_i", &te_di)?;
    let te_id_std = standardize("te_i_to_d", &te_id)?;

    let n = points.len();
    let mut x = nalgebra::DMatrix::zeros(n, 3);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = te_di_std[i];
        x[(i, 2)] = te_id_std[i];
    }
    let row_ids: Vec<String> = points.iter().map(|p| p.firm_id.clone()).collect();

    SEQUENCE_OUTCOMES
        .iter()
        .map(|outcome| {
            let raw: Vec<f64> = points
                .iter()
                .map(|p| match *outcome {
                    "final_diversity" => p.final_diversity,
                    "final_inclusion" => p.final_inclusion,
                    "trend_diversity" => p.trend_diversity,
                    _ => p.trend_inclusion,
                })
                .collect();
            let y = standardize(outcome, &raw)?;
            let design = DesignMatrix {
                spec: SpecTag::Baseline,
                label: outcome.to_string(),
                columns: vec![
                    "intercept".to_string(),
                    "te_d_to_i".to_string(),
                    "te_i_to_d".to_string(),
                ],
                x: x.clone(),
                y: nalgebra::DVector::from_vec(y),
                row_ids: row_ids.clone(),
                groups: row_ids.clone(),
                dropped_rows: 0,
                dropped_columns: Vec::new(),
            };
            ols_fit(&design, stats_cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn discretize_median_split() {
        assert_eq!(discretize(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn discretize_constant_series_all_zero() {
        assert_eq!(discretize(&[2.0; 6], 2).unwrap(), vec![0; 6]);
    }

    #[test]
    fn discretize_balanced_bins_on_uniform_sample() {
        let mut rng = substream(1, "test", "discretize");
        let series: Vec<f64> = (0..10_000).map(|_| rng.gen_range(0.0..1.0)).collect();
        let symbols = discretize(&series, 2).unwrap();
        let share = symbols.iter().filter(|&&s| s == 1).count() as f64 / symbols.len() as f64;
        assert!((share - 0.5).abs() < 0.02, "share {share}");
    }

    #[test]
    fn discretize_rejects_bad_parameters() {
        assert!(discretize(&[1.0, 2.0], 1).is_err());
        assert!(discretize(&[1.0], 2).is_err());
    }

    #[test]
    fn te_independent_series_is_near_zero() {
        let mut rng = substream(2, "test", "te_indep");
        let n = 100_000;
        let x: Vec<u16> = (0..n).map(|_| rng.gen_range(0..2u16)).collect();
        let y: Vec<u16> = (0..n).map(|_| rng.gen_range(0..2u16)).collect();
        let te = transfer_entropy(&x, &y, 1, false).unwrap();
        assert!((0.0..=0.001).contains(&te), "te = {te}");
    }

    #[test]
    fn te_perfect_lagged_copy_is_one_bit() {
        let mut rng = substream(3, "test", "te_copy");
        let n = 100_000;
        let x: Vec<u16> = (0..n).map(|_| rng.gen_range(0..2u16)).collect();
        let mut y = vec![0u16; n];
        for t in 1..n {
            y[t] = x[t - 1];
        }
        let te = transfer_entropy(&x, &y, 1, false).unwrap();
        assert!((te - 1.0).abs() < 0.01, "te = {te}");
    }

    #[test]
    fn te_zero_entropy_target_is_zero() {
        let mut rng = substream(4, "test", "te_const");
        let x: Vec<u16> = (0..1000).map(|_| rng.gen_range(0..2u16)).collect();
        let y = vec![0u16; 1000];
        let te = transfer_entropy(&x, &y, 1, false).unwrap();
        assert!(te.abs() < 1e-12);
    }

    #[test]
    fn te_target_determined_by_own_past_is_zero() {
        let mut rng = substream(5, "test", "te_own");
        let n = 2000;
        let x: Vec<u16> = (0..n).map(|_| rng.gen_range(0..2u16)).collect();
        let mut y = vec![0u16; n];
        for t in 1..n {
            y[t] = 1 - y[t - 1];
        }
        let te = transfer_entropy(&x, &y, 1, false).unwrap();
        assert!(te.abs() < 1e-12, "te = {te}");
    }

    #[test]
    fn te_too_short_errors() {
        assert!(transfer_entropy(&[0, 1], &[1, 0], 1, false).is_err());
    }

    #[test]
    fn trend_examples() {
        assert_eq!(trend(&[0.0, 1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(trend(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert!((trend(&[3.0, 1.0, 2.0, 0.0]).unwrap() + 0.8).abs() < 1e-12);
        assert!(trend(&[1.0]).is_err());
    }

    fn series(years: &[i32], div: &[f64], incl: &[f64]) -> FirmSeries {
        FirmSeries {
            firm_id: "f1".into(),
            project_ids: (0..years.len()).map(|i| format!("p{i}")).collect(),
            years: years.to_vec(),
            diversity: div.to_vec(),
            inclusion: incl.to_vec(),
        }
    }

    #[test]
    fn tie_groups_detected() {
        let s = series(
            &[1995, 1995, 1997, 1999],
            &[0.1, 0.2, 0.3, 0.4],
            &[0.0, 0.1, 0.2, 0.3],
        );
        assert_eq!(s.tie_groups(), vec![(0, 2)]);
    }

    #[test]
    fn no_ties_mean_equals_single_te() {
        let cfg = TimeseriesConfig::default();
        let s = series(
            &[1995, 1996, 1997, 1998, 1999, 2000],
            &[0.1, 0.5, 0.2, 0.6, 0.3, 0.7],
            &[0.2, 0.1, 0.5, 0.3, 0.6, 0.4],
        );
        let res = tie_permutation_te(&s, &cfg, 42).unwrap();
        let d = discretize(&s.diversity, 2).unwrap();
        let i = discretize(&s.inclusion, 2).unwrap();
        assert_eq!(res.te_d_to_i, transfer_entropy(&d, &i, 1, false).unwrap());
        assert_eq!(res.te_i_to_d, transfer_entropy(&i, &d, 1, false).unwrap());
    }

    #[test]
    fn tie_permutation_deterministic_for_fixed_seed() {
        let cfg = TimeseriesConfig {
            n_permutations: 50,
            ..TimeseriesConfig::default()
        };
        let s = series(
            &[1995, 1995, 1995, 1996, 1997, 1997],
            &[0.1, 0.5, 0.3, 0.6, 0.2, 0.7],
            &[0.2, 0.1, 0.4, 0.3, 0.6, 0.5],
        );
        let a = tie_permutation_te(&s, &cfg, 42).unwrap();
        let b = tie_permutation_te(&s, &cfg, 42).unwrap();
        assert_eq!(a.te_d_to_i.to_bits(), b.te_d_to_i.to_bits());
        assert_eq!(a.te_i_to_d.to_bits(), b.te_i_to_d.to_bits());
        let c = tie_permutation_te(&s, &cfg, 43).unwrap();
        assert!(a.te_d_to_i != c.te_d_to_i || a.te_i_to_d != c.te_i_to_d);
    }

    #[test]
    fn build_firm_series_thresholds_and_order() {
        use crate::metrics::ControlVector;
        let row = |firm: &str, id: &str, year: i32, combined: Option<f64>| MetricRow {
            project_id: id.into(),
            firm_id: firm.into(),
            blau_raw: Some(0.3),
            blau_norm: Some(0.6),
            mixing: Some(0.5),
            bonding: Some(0.5),
            incorporating: Some(-0.2),
            combined,
            distinctiveness: Some(0.5),
            controls: ControlVector {
                team_size: 5,
                ratio_of_center: 0.4,
                n_newbies: 1,
                n_stars: 0,
                game_tenure: 2.0,
                single_firm: false,
                release_year: year,
                n_countries: 3,
                platforms: vec![],
            },
        };
        let rows = vec![
            row("small", "s1", 1995, Some(0.1)),
            row("small", "s2", 1996, Some(0.1)),
            row("small", "s3", 1997, Some(0.1)),
            row("big", "b1", 1995, Some(0.1)),
            row("big", "b2", 1995, Some(0.2)),
            row("big", "b3", 1997, Some(0.3)),
            row("big", "b4", 1999, Some(0.4)),
            row("big", "b5", 2000, None),
        ];
        let (series, skipped) = build_firm_series(&rows, BlauVariant::Raw, 4);
        assert_eq!(skipped, 1);
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].firm_id, "big");
        assert_eq!(series[0].len(), 4);
        assert_eq!(series[0].tie_groups(), vec![(0, 2)]);
    }
}
