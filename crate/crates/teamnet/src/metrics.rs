//! Per-project diversity, inclusion, distinctiveness and control variables.
//!
//! Metric values are `Option<f64>`: `None` is an explicit undefined marker
//! (log-domain boundary, no eligible edges, empty comparison window) and is
//! never silently coerced to zero. Corpus-level constants (the mixing
//! normalizer and the incorporating minimum used by the combined index) come
//! from a dedicated first pass and are surfaced in [`MetricConstants`] so a
//! run manifest can pin them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Gender, ProjectIdx};
use crate::error::{Error, Result};
use crate::graph::{jordan_center, project_team_graph, GraphView, TeamGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingNorm {
    /// Largest observed `|1 - r|` across the analysis set.
    Empirical,
    /// The theoretical maximum 2.
    Theoretical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlauVariant {
    /// `1 - sum(p_i^2)`, at most 0.5 for two categories.
    Raw,
    /// Raw rescaled to [0, 1].
    Normalized,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Distinctiveness compares against projects of the preceding N years.
    pub window_years: i32,
    pub mixing_norm: MixingNorm,
    /// Which Blau variant feeds the regression diversity column.
    pub blau: BlauVariant,
    /// Use edge weights in the mixing matrix (unweighted is a sensitivity check).
    pub weighted_assortativity: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            window_years: 5,
            mixing_norm: MixingNorm::Empirical,
            blau: BlauVariant::Raw,
            weighted_assortativity: true,
        }
    }
}

/// Control variables for the regression models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlVector {
    pub team_size: usize,
    pub ratio_of_center: f64,
    pub n_newbies: usize,
    pub n_stars: usize,
    pub game_tenure: f64,
    pub single_firm: bool,
    pub release_year: i32,
    pub n_countries: u32,
    pub platforms: Vec<String>,
}

/// One project's metric vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub project_id: String,
    pub firm_id: String,
    pub blau_raw: Option<f64>,
    pub blau_norm: Option<f64>,
    pub mixing: Option<f64>,
    pub bonding: Option<f64>,
    pub incorporating: Option<f64>,
    pub combined: Option<f64>,
    pub distinctiveness: Option<f64>,
    pub controls: ControlVector,
}

impl MetricRow {
    /// Diversity column for the models, per configured Blau variant.
    pub fn diversity(&self, variant: BlauVariant) -> Option<f64> {
        match variant {
            BlauVariant::Raw => self.blau_raw,
            BlauVariant::Normalized => self.blau_norm,
        }
    }

    pub fn inclusion(&self, metric: InclusionMetric) -> Option<f64> {
        match metric {
            InclusionMetric::Mixing => self.mixing,
            InclusionMetric::Bonding => self.bonding,
            InclusionMetric::Incorporating => self.incorporating,
            InclusionMetric::Combined => self.combined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InclusionMetric {
    Mixing,
    Bonding,
    Incorporating,
    Combined,
}

impl InclusionMetric {
    pub const ALL: [InclusionMetric; 4] = [
        InclusionMetric::Mixing,
        InclusionMetric::Bonding,
        InclusionMetric::Incorporating,
        InclusionMetric::Combined,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InclusionMetric::Mixing => "mixing",
            InclusionMetric::Bonding => "bonding",
            InclusionMetric::Incorporating => "incorporating",
            InclusionMetric::Combined => "combined",
        }
    }
}

/// Corpus-level constants pinned by the first pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricConstants {
    /// `max |1 - r|` over the analysis set (empirical mode), or 2.0.
    pub mixing_norm_const: Option<f64>,
    /// Minimum defined incorporating value; the combined index multiplies
    /// the min-shifted incorporating so every factor is nonnegative.
    pub incorporating_min: Option<f64>,
    pub style_universe_size: usize,
    pub projects: usize,
    pub undefined_mixing: usize,
    pub undefined_bonding: usize,
    pub undefined_incorporating: usize,
    pub undefined_combined: usize,
    pub undefined_distinctiveness: usize,
}

/// Blau heterogeneity index over the known-gender counts.
/// Undefined when no member has a known gender.
pub fn blau_index(female: usize, male: usize) -> Option<f64> {
    let total = female + male;
    if total == 0 {
        return None;
    }
    let pf = female as f64 / total as f64;
    let pm = male as f64 / total as f64;
    Some(1.0 - (pf * pf + pm * pm))
}

/// Blau index rescaled so a 50-50 team scores 1.
pub fn blau_normalized(female: usize, male: usize) -> Option<f64> {
    blau_index(female, male).map(|h| h / 0.5)
}

fn known_counts(view: GraphView<'_>) -> (usize, usize) {
    let mut female = 0;
    let mut male = 0;
    for &g in view.genders {
        match g {
            Gender::Female => female += 1,
            Gender::Male => male += 1,
            Gender::Unknown => {}
        }
    }
    (female, male)
}

/// `|1 - r|` before normalization; undefined when assortativity is.
pub fn mixing_raw(view: GraphView<'_>, weighted: bool) -> Option<f64> {
    crate::graph::assortativity(view, weighted).map(|r| (1.0 - r).abs())
}

/// Normalized mixing. A zero normalizer can only arise when every graph in
/// the corpus is perfectly segregated; everything maps to 0 then.
pub fn mixing(raw: Option<f64>, norm_const: Option<f64>) -> Option<f64> {
    let raw = raw?;
    let norm = norm_const?;
    if norm == 0.0 {
        return Some(0.0);
    }
    Some(raw / norm)
}

/// Weighted share of cross-gender ties among ties with both endpoints of
/// known gender. Undefined when no such tie exists.
pub fn bonding(view: GraphView<'_>) -> Option<f64> {
    let mut cross = 0.0f64;
    let mut total = 0.0f64;
    for e in view.edges {
        let (ga, gb) = (view.genders[e.a], view.genders[e.b]);
        if ga == Gender::Unknown || gb == Gender::Unknown {
            continue;
        }
        total += e.weight as f64;
        if ga != gb {
            cross += e.weight as f64;
        }
    }
    if total == 0.0 {
        None
    } else {
        Some(cross / total)
    }
}

/// Natural log of (women in the Jordan center) / (women in the team).
/// Undefined when the graph has no edges, the team has no women, or no
/// woman sits in the center (the log-domain boundary is flagged, not -inf).
pub fn incorporating(view: GraphView<'_>) -> Option<f64> {
    let center = jordan_center(view)?;
    let women_total = view
        .genders
        .iter()
        .filter(|&&g| g == Gender::Female)
        .count();
    if women_total == 0 {
        return None;
    }
    let women_center = center
        .nodes
        .iter()
        .filter(|&&n| view.genders[n] == Gender::Female)
        .count();
    if women_center == 0 {
        return None;
    }
    Some((women_center as f64 / women_total as f64).ln())
}

/// Product of the three inclusion measures, with incorporating min-shifted
/// to be nonnegative. Undefined if any factor is.
pub fn combined_inclusion(
    mixing: Option<f64>,
    bonding: Option<f64>,
    incorporating_shifted: Option<f64>,
) -> Option<f64> {
    Some(mixing? * bonding? * incorporating_shifted?)
}

/// Cosine distance between two stylistic-element sets (sorted interned ids).
///
/// Element vectors carry 1/K on present elements, K being the corpus style
/// universe size; the factor cancels in the cosine but is applied as part
/// of the definition.
pub fn cosine_distance(a: &[u32], b: &[u32], universe_size: usize) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Numeric(
            "cosine distance over an empty stylistic-element set".into(),
        ));
    }
    let inv_k = 1.0 / universe_size.max(1) as f64;
    let inter = sorted_intersection_count(a, b) as f64;
    let dot = inter * inv_k * inv_k;
    // Norm product via sqrt(|a|*|b|) so the 1/K factors cancel exactly and
    // identical sets give distance 0 with no rounding residue.
    let norm_product = ((a.len() * b.len()) as f64).sqrt() * inv_k * inv_k;
    Ok(1.0 - dot / norm_product)
}

fn sorted_intersection_count(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Mean cosine distance to every project released in the preceding
/// `window_years` years (full corpus history, same-year projects excluded).
/// Undefined when the window is empty or the project has no style elements.
pub fn distinctiveness(corpus: &Corpus, project: ProjectIdx, window_years: i32) -> Option<f64> {
    let focal = corpus.project(project);
    if focal.style_elements.is_empty() {
        return None;
    }
    let k = corpus.style_universe().len();
    let lo = focal.release_year - window_years;
    let hi = focal.release_year - 1;
    let mut sum = 0.0;
    let mut n = 0usize;
    for other in corpus.history() {
        if other.release_year < lo || other.release_year > hi || other.style_elements.is_empty() {
            continue;
        }
        sum += cosine_distance(&focal.style_elements, &other.style_elements, k)
            .expect("both sets checked non-empty");
        n += 1;
    }
    if n == 0 {
        None
    } else {
        Some(sum / n as f64)
    }
}

/// Control variables from the roster, graph and career index.
pub fn compute_controls(corpus: &Corpus, graph: &TeamGraph, project: ProjectIdx) -> ControlVector {
    let p = corpus.project(project);
    let year = p.release_year;
    let genders = graph.genders();
    let center_size = jordan_center(graph.view(&genders))
        .map(|c| c.nodes.len())
        .unwrap_or(0);
    let n = p.roster.len();
    let mut newbies = 0usize;
    let mut prior_total = 0usize;
    for c in &p.roster {
        let prior = corpus.prior_project_count(c.person, year);
        if prior == 0 {
            newbies += 1;
        }
        prior_total += prior;
    }
    ControlVector {
        team_size: n,
        ratio_of_center: center_size as f64 / n as f64,
        n_newbies: newbies,
        n_stars: p.roster.iter().filter(|c| c.award).count(),
        game_tenure: prior_total as f64 / n as f64,
        single_firm: p.firm_id == p.publisher_id,
        release_year: year,
        n_countries: p.countries_released,
        platforms: p
            .platforms
            .iter()
            .map(|&id| corpus.platform_universe()[id as usize].clone())
            .collect(),
    }
}

/// Gender-dependent metrics of one graph, before corpus-level normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenderMetrics {
    pub blau_raw: Option<f64>,
    pub blau_norm: Option<f64>,
    pub mixing_raw: Option<f64>,
    pub bonding: Option<f64>,
    pub incorporating: Option<f64>,
}

pub fn gender_metrics(view: GraphView<'_>, weighted: bool) -> GenderMetrics {
    let (female, male) = known_counts(view);
    GenderMetrics {
        blau_raw: blau_index(female, male),
        blau_norm: blau_normalized(female, male),
        mixing_raw: mixing_raw(view, weighted),
        bonding: bonding(view),
        incorporating: incorporating(view),
    }
}

/// Normalization constants derived from a set of per-project gender metrics.
pub fn constants_from(
    metrics: &[GenderMetrics],
    mixing_norm: MixingNorm,
) -> (Option<f64>, Option<f64>) {
    let mixing_norm_const = match mixing_norm {
        MixingNorm::Theoretical => Some(2.0),
        MixingNorm::Empirical => metrics
            .iter()
            .filter_map(|m| m.mixing_raw)
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            }),
    };
    let incorporating_min = metrics
        .iter()
        .filter_map(|m| m.incorporating)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        });
    (mixing_norm_const, incorporating_min)
}

/// Assemble final metric values from raw gender metrics and constants.
pub fn finalize_gender_metrics(
    m: &GenderMetrics,
    mixing_norm_const: Option<f64>,
    incorporating_min: Option<f64>,
) -> (Option<f64>, Option<f64>) {
    let mixing_val = mixing(m.mixing_raw, mixing_norm_const);
    let shifted = match (m.incorporating, incorporating_min) {
        (Some(v), Some(min)) => Some(v - min),
        _ => None,
    };
    let combined = combined_inclusion(mixing_val, m.bonding, shifted);
    (mixing_val, combined)
}

/// Compute the full metric table over the corpus analysis set.
///
/// Pass 1 builds the graphs and collects the normalization constants;
/// pass 2 assembles rows. Both passes iterate the analysis set in corpus
/// order, so output order and reductions are deterministic regardless of
/// the worker count.
pub fn compute_metric_table(
    corpus: &Corpus,
    cfg: &MetricsConfig,
) -> (Vec<MetricRow>, MetricConstants) {
    let graphs: Vec<TeamGraph> = corpus
        .analysis()
        .par_iter()
        .map(|&p| project_team_graph(corpus, p))
        .collect();

    let raw: Vec<GenderMetrics> = graphs
        .par_iter()
        .map(|g| {
            let genders = g.genders();
            gender_metrics(g.view(&genders), cfg.weighted_assortativity)
        })
        .collect();

    let (mixing_norm_const, incorporating_min) = constants_from(&raw, cfg.mixing_norm);

    let rows: Vec<MetricRow> = corpus
        .analysis()
        .par_iter()
        .zip(graphs.par_iter())
        .zip(raw.par_iter())
        .map(|((&p, graph), m)| {
            let (mixing_val, combined) =
                finalize_gender_metrics(m, mixing_norm_const, incorporating_min);
            let project = corpus.project(p);
            MetricRow {
                project_id: project.project_id.clone(),
                firm_id: project.firm_id.clone(),
                blau_raw: m.blau_raw,
                blau_norm: m.blau_norm,
                mixing: mixing_val,
                bonding: m.bonding,
                incorporating: m.incorporating,
                combined,
                distinctiveness: distinctiveness(corpus, p, cfg.window_years),
                controls: compute_controls(corpus, graph, p),
            }
        })
        .collect();

    let constants = MetricConstants {
        mixing_norm_const,
        incorporating_min,
        style_universe_size: corpus.style_universe().len(),
        projects: rows.len(),
        undefined_mixing: rows.iter().filter(|r| r.mixing.is_none()).count(),
        undefined_bonding: rows.iter().filter(|r| r.bonding.is_none()).count(),
        undefined_incorporating: rows.iter().filter(|r| r.incorporating.is_none()).count(),
        undefined_combined: rows.iter().filter(|r| r.combined.is_none()).count(),
        undefined_distinctiveness: rows
            .iter()
            .filter(|r| r.distinctiveness.is_none())
            .count(),
    };
    (rows, constants)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TeamGraph;

    fn graph(nodes: &[Gender], edges: &[(usize, usize, u32)]) -> TeamGraph {
        let nodes = nodes
            .iter()
            .enumerate()
            .map(|(i, &g)| (format!("n{i}"), g))
            .collect();
        TeamGraph::new(nodes, edges.to_vec(), 2000)
    }

    #[test]
    fn blau_examples() {
        assert_eq!(blau_index(0, 5), Some(0.0));
        assert_eq!(blau_index(2, 2), Some(0.5));
        assert_eq!(blau_normalized(2, 2), Some(1.0));
        assert!((blau_index(1, 3).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(blau_index(0, 0), None);
    }

    #[test]
    fn mixing_examples() {
        // Fully segregated: r = 1, |1 - r| = 0.
        let seg = graph(
            &[Gender::Female, Gender::Female, Gender::Male, Gender::Male],
            &[(0, 1, 1), (2, 3, 1)],
        );
        let genders = seg.genders();
        let raw = mixing_raw(seg.view(&genders), true);
        assert_eq!(raw, Some(0.0));
        assert_eq!(mixing(raw, Some(2.0)), Some(0.0));

        // Complete bipartite: r = -1, |1 - r| = 2; with corpus max 2 -> 1.
        let bip = graph(
            &[Gender::Female, Gender::Female, Gender::Male, Gender::Male],
            &[(0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1)],
        );
        let genders = bip.genders();
        let raw = mixing_raw(bip.view(&genders), true).unwrap();
        assert!((raw - 2.0).abs() < 1e-12);
        assert!((mixing(Some(raw), Some(2.0)).unwrap() - 1.0).abs() < 1e-12);

        // The corpus-max graph normalizes to exactly 1.
        assert_eq!(mixing(Some(raw), Some(raw)), Some(1.0));
    }

    #[test]
    fn bonding_examples() {
        let star = graph(
            &[Gender::Female, Gender::Male, Gender::Male, Gender::Male],
            &[(0, 1, 1), (0, 2, 1), (0, 3, 1)],
        );
        let genders = star.genders();
        assert_eq!(bonding(star.view(&genders)), Some(1.0));

        let split = graph(
            &[Gender::Female, Gender::Male, Gender::Male],
            &[(0, 1, 2), (1, 2, 2)],
        );
        let genders = split.genders();
        assert_eq!(bonding(split.view(&genders)), Some(0.5));

        let all_male = graph(&[Gender::Male, Gender::Male], &[(0, 1, 3)]);
        let genders = all_male.genders();
        assert_eq!(bonding(all_male.view(&genders)), Some(0.0));

        let unknown_only = graph(&[Gender::Unknown, Gender::Unknown], &[(0, 1, 3)]);
        let genders = unknown_only.genders();
        assert_eq!(bonding(unknown_only.view(&genders)), None);
    }

    #[test]
    fn incorporating_examples() {
        // Path M-F-M: the woman is the center.
        let path = graph(
            &[Gender::Male, Gender::Female, Gender::Male],
            &[(0, 1, 1), (1, 2, 1)],
        );
        let genders = path.genders();
        assert_eq!(incorporating(path.view(&genders)), Some(0.0));

        // Two women, one in the center: log(1/2).
        let path = graph(
            &[Gender::Male, Gender::Female, Gender::Female],
            &[(0, 1, 1), (1, 2, 1)],
        );
        let genders = path.genders();
        let v = incorporating(path.view(&genders)).unwrap();
        assert!((v - 0.5f64.ln()).abs() < 1e-12);
        assert!((v + 0.6931).abs() < 1e-4);

        // No woman in the center: flagged undefined.
        let path = graph(
            &[Gender::Female, Gender::Male, Gender::Female],
            &[(0, 1, 1), (1, 2, 1)],
        );
        let genders = path.genders();
        assert_eq!(incorporating(path.view(&genders)), None);

        // All isolates: undefined.
        let iso = graph(&[Gender::Female, Gender::Male], &[]);
        let genders = iso.genders();
        assert_eq!(incorporating(iso.view(&genders)), None);
    }

    #[test]
    fn combined_examples() {
        assert_eq!(
            combined_inclusion(Some(0.0), Some(0.7), Some(0.9)),
            Some(0.0)
        );
        assert_eq!(
            combined_inclusion(Some(1.0), Some(1.0), Some(1.0)),
            Some(1.0)
        );
        let v = combined_inclusion(Some(0.8), Some(0.5), Some(0.6)).unwrap();
        assert!((v - 0.24).abs() < 1e-15);
        assert_eq!(combined_inclusion(Some(0.8), None, Some(0.6)), None);
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_distance(&[1, 2, 3], &[1, 2, 3], 10).unwrap(), 0.0);
        assert!((cosine_distance(&[1, 2], &[3, 4], 10).unwrap() - 1.0).abs() < 1e-15);
        // {a,b} vs {b,c}: 1 - 1/2, and the 1/K scaling cancels.
        let d5 = cosine_distance(&[0, 1], &[1, 2], 5).unwrap();
        let d50 = cosine_distance(&[0, 1], &[1, 2], 50).unwrap();
        assert!((d5 - 0.5).abs() < 1e-15);
        assert!((d5 - d50).abs() < 1e-15);
        assert!(cosine_distance(&[], &[1], 5).is_err());
    }
}
