//! Unknown-gender relabeling experiment.
//!
//! Per repetition, a fraction of each project's unknown-gendered roster
//! members is relabelled as male, every gender-dependent metric is
//! recomputed (including the per-repetition normalization constants), and
//! the per-project metrics are averaged over repetitions. Graph structure,
//! distinctiveness and controls do not depend on gender labels, so they are
//! computed once; an equivalence test pins that optimization.
//!
//! Averages short-circuit when every repetition produced the same value, so
//! a fraction of zero reproduces the baseline table bit-exactly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Gender};
use crate::error::Result;
use crate::graph::{project_team_graph, TeamGraph};
use crate::metrics::{
    constants_from, finalize_gender_metrics, gender_metrics, BlauVariant, GenderMetrics,
    InclusionMetric, MetricRow, MetricsConfig,
};
use crate::rng::substream;
use crate::stats::{build_interaction_model, ols_fit, ModelFit, SpecTag, StatsConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessConfig {
    /// Fractions of unknowns to relabel as male, one experiment per level.
    pub fractions: Vec<f64>,
    pub reps: usize,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            fractions: vec![0.25, 0.5],
            reps: 100,
        }
    }
}

/// Flip `round_half_up(fraction * n_unknown)` unknown members to male,
/// chosen uniformly without replacement. Returns the flip count.
pub fn relabel_unknowns<R: Rng>(genders: &mut [Gender], fraction: f64, rng: &mut R) -> usize {
    let unknowns: Vec<usize> = genders
        .iter()
        .enumerate()
        .filter(|(_, &g)| g == Gender::Unknown)
        .map(|(i, _)| i)
        .collect();
    if unknowns.is_empty() || fraction <= 0.0 {
        return 0;
    }
    let k = ((fraction * unknowns.len() as f64) + 0.5).floor() as usize;
    let k = k.min(unknowns.len());
    if k == 0 {
        return 0;
    }
    for idx in rand::seq::index::sample(rng, unknowns.len(), k) {
        genders[unknowns[idx]] = Gender::Male;
    }
    k
}

/// Streaming mean that stays bit-exact when every observation is identical.
#[derive(Debug, Clone, Copy, Default)]
struct ExactMean {
    first: Option<f64>,
    all_equal: bool,
    sum: f64,
    count: usize,
}

impl ExactMean {
    fn push(&mut self, v: f64) {
        match self.first {
            None => {
                self.first = Some(v);
                self.all_equal = true;
            }
            Some(f) => {
                if f.to_bits() != v.to_bits() {
                    self.all_equal = false;
                }
            }
        }
        self.sum += v;
        self.count += 1;
    }

    fn value(&self) -> Option<f64> {
        let first = self.first?;
        if self.all_equal {
            Some(first)
        } else {
            Some(self.sum / self.count as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct MeanSet {
    blau_raw: ExactMean,
    blau_norm: ExactMean,
    mixing: ExactMean,
    bonding: ExactMean,
    incorporating: ExactMean,
    combined: ExactMean,
}

/// Result of one relabeling level.
#[derive(Debug, Clone)]
pub struct RelabelExperiment {
    pub fraction: f64,
    pub reps: usize,
    /// Baseline rows with the gender-dependent metrics replaced by their
    /// across-repetition means.
    pub rows: Vec<MetricRow>,
    /// The four interaction models refit on the averaged table.
    pub fits: Vec<ModelFit>,
    /// Total flips across all repetitions and projects.
    pub total_flips: usize,
}

/// Run the relabeling experiment at one fraction level.
///
/// `baseline_rows` must be the metric table of `corpus` (same order as the
/// analysis set); distinctiveness and controls are reused from it.
pub fn relabel_experiment(
    corpus: &Corpus,
    baseline_rows: &[MetricRow],
    fraction: f64,
    reps: usize,
    master_seed: u64,
    metrics_cfg: &MetricsConfig,
    stats_cfg: &StatsConfig,
) -> Result<RelabelExperiment> {
    assert_eq!(
        baseline_rows.len(),
        corpus.analysis().len(),
        "baseline rows must match the corpus analysis set"
    );
    let graphs: Vec<TeamGraph> = corpus
        .analysis()
        .par_iter()
        .map(|&p| project_team_graph(corpus, p))
        .collect();
    let base_genders: Vec<Vec<Gender>> = graphs.iter().map(|g| g.genders()).collect();

    let mut means: Vec<MeanSet> = vec![MeanSet::default(); graphs.len()];
    let mut total_flips = 0usize;

    for rep in 0..reps {
        // Per-(rep, project) substreams keep results independent of
        // scheduling and worker count.
        let rep_metrics: Vec<(GenderMetrics, usize)> = graphs
            .par_iter()
            .zip(base_genders.par_iter())
            .zip(baseline_rows.par_iter())
            .map(|((graph, genders), row)| {
                let mut genders = genders.clone();
                let mut rng = substream(
                    master_seed,
                    "relabel",
                    &format!("{rep}:{}", row.project_id),
                );
                let flips = relabel_unknowns(&mut genders, fraction, &mut rng);
                (
                    gender_metrics(graph.view(&genders), metrics_cfg.weighted_assortativity),
                    flips,
                )
            })
            .collect();

        let raw: Vec<GenderMetrics> = rep_metrics.iter().map(|(m, _)| *m).collect();
        total_flips += rep_metrics.iter().map(|(_, f)| f).sum::<usize>();
        let (mix_norm, inc_min) = constants_from(&raw, metrics_cfg.mixing_norm);
        for (m, mean) in raw.iter().zip(means.iter_mut()) {
            let (mixing_val, combined) = finalize_gender_metrics(m, mix_norm, inc_min);
            if let Some(v) = m.blau_raw {
                mean.blau_raw.push(v);
            }
            if let Some(v) = m.blau_norm {
                mean.blau_norm.push(v);
            }
            if let Some(v) = mixing_val {
                mean.mixing.push(v);
            }
            if let Some(v) = m.bonding {
                mean.bonding.push(v);
            }
            if let Some(v) = m.incorporating {
                mean.incorporating.push(v);
            }
            if let Some(v) = combined {
                mean.combined.push(v);
            }
        }
    }

    let rows: Vec<MetricRow> = baseline_rows
        .iter()
        .zip(&means)
        .map(|(base, m)| MetricRow {
            blau_raw: m.blau_raw.value(),
            blau_norm: m.blau_norm.value(),
            mixing: m.mixing.value(),
            bonding: m.bonding.value(),
            incorporating: m.incorporating.value(),
            combined: m.combined.value(),
            ..base.clone()
        })
        .collect();

    let fits = refit_interaction_models(&rows, metrics_cfg.blau, stats_cfg)?;
    Ok(RelabelExperiment {
        fraction,
        reps,
        rows,
        fits,
        total_flips,
    })
}

/// The four inclusion interaction models on a metric table.
pub fn refit_interaction_models(
    rows: &[MetricRow],
    blau: BlauVariant,
    stats_cfg: &StatsConfig,
) -> Result<Vec<ModelFit>> {
    InclusionMetric::ALL
        .iter()
        .map(|&metric| {
            let design = build_interaction_model(rows, Some(metric), blau, SpecTag::Baseline)?;
            ols_fit(&design, stats_cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_unknowns_is_identity() {
        let mut genders = vec![Gender::Female, Gender::Male, Gender::Male];
        let before = genders.clone();
        let mut rng = substream(1, "test", "relabel");
        assert_eq!(relabel_unknowns(&mut genders, 0.5, &mut rng), 0);
        assert_eq!(genders, before);
    }

    #[test]
    fn half_of_four_unknowns_flips_exactly_two() {
        let mut rng = substream(2, "test", "relabel");
        for _ in 0..50 {
            let mut genders = vec![
                Gender::Unknown,
                Gender::Unknown,
                Gender::Unknown,
                Gender::Unknown,
                Gender::Female,
            ];
            assert_eq!(relabel_unknowns(&mut genders, 0.5, &mut rng), 2);
            let males = genders.iter().filter(|&&g| g == Gender::Male).count();
            let unknowns = genders.iter().filter(|&&g| g == Gender::Unknown).count();
            assert_eq!(males, 2);
            assert_eq!(unknowns, 2);
            assert_eq!(genders[4], Gender::Female);
        }
    }

    #[test]
    fn rounding_is_half_up() {
        let mut rng = substream(3, "test", "relabel");
        // 3 unknowns at 0.5 -> 1.5 rounds up to 2.
        let mut genders = vec![Gender::Unknown; 3];
        assert_eq!(relabel_unknowns(&mut genders, 0.5, &mut rng), 2);
        // 3 unknowns at 0.25 -> 0.75 rounds up to 1.
        let mut genders = vec![Gender::Unknown; 3];
        assert_eq!(relabel_unknowns(&mut genders, 0.25, &mut rng), 1);
    }

    #[test]
    fn per_unknown_flip_frequency_matches_fraction() {
        for &fraction in &[0.25f64, 0.5] {
            let mut rng = substream(4, "test", "relabel_freq");
            let n_draws = 10_000;
            let mut flips_first = 0usize;
            for _ in 0..n_draws {
                let mut genders = vec![Gender::Unknown; 8];
                relabel_unknowns(&mut genders, fraction, &mut rng);
                if genders[0] == Gender::Male {
                    flips_first += 1;
                }
            }
            let freq = flips_first as f64 / n_draws as f64;
            assert!(
                (freq - fraction).abs() < 0.02,
                "fraction {fraction}: frequency {freq}"
            );
        }
    }

    #[test]
    fn relabeling_never_decreases_males_nor_changes_females() {
        let mut rng = substream(5, "test", "relabel_prop");
        for n in 1..20usize {
            let mut genders: Vec<Gender> = (0..n)
                .map(|i| match i % 3 {
                    0 => Gender::Female,
                    1 => Gender::Male,
                    _ => Gender::Unknown,
                })
                .collect();
            let females = genders.iter().filter(|&&g| g == Gender::Female).count();
            let males = genders.iter().filter(|&&g| g == Gender::Male).count();
            relabel_unknowns(&mut genders, 0.4, &mut rng);
            assert_eq!(
                females,
                genders.iter().filter(|&&g| g == Gender::Female).count()
            );
            assert!(genders.iter().filter(|&&g| g == Gender::Male).count() >= males);
        }
    }
}
