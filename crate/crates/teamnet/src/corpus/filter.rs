//! Analysis-set filtering.
//!
//! Four criteria applied in order: release-year window, collaboration-graph
//! edge count, unknown-gender roster ratio, minimum women count. Filtering
//! narrows the corpus analysis set but keeps full history, so collaboration
//! weights are unchanged and re-filtering is a no-op.

use serde::{Deserialize, Serialize};

use super::{Corpus, Gender, Project};
use crate::graph::project_team_graph;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterCriteria {
    pub year_min: i32,
    pub year_max: i32,
    /// Edge count must satisfy `min_edges_exclusive < edges < max_edges_exclusive`.
    pub min_edges_exclusive: usize,
    pub max_edges_exclusive: usize,
    /// Unknown roster ratio must be strictly below this.
    pub max_unknown_ratio: f64,
    pub min_women: usize,
}

impl Default for FilterCriteria {
    fn default() -> Self {
        FilterCriteria {
            year_min: 1993,
            year_max: 2009,
            min_edges_exclusive: 1,
            max_edges_exclusive: 2000,
            max_unknown_ratio: 0.5,
            min_women: 1,
        }
    }
}

/// Projects remaining after each filter stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub initial: usize,
    pub after_year_window: usize,
    pub after_edge_count: usize,
    pub after_unknown_ratio: usize,
    pub after_min_women: usize,
}

impl FilterReport {
    pub fn stages(&self) -> [usize; 5] {
        [
            self.initial,
            self.after_year_window,
            self.after_edge_count,
            self.after_unknown_ratio,
            self.after_min_women,
        ]
    }

    pub fn final_count(&self) -> usize {
        self.after_min_women
    }
}

impl std::fmt::Display for FilterReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<28}{}", "all projects", self.initial)?;
        writeln!(f, "{:<28}{}", "within year window", self.after_year_window)?;
        writeln!(f, "{:<28}{}", "edge count in range", self.after_edge_count)?;
        writeln!(f, "{:<28}{}", "unknown ratio below cap", self.after_unknown_ratio)?;
        write!(f, "{:<28}{}", "minimum women present", self.after_min_women)
    }
}

fn unknown_ratio(corpus: &Corpus, project: &Project) -> f64 {
    let unknown = project
        .roster
        .iter()
        .filter(|c| corpus.person(c.person).gender == Gender::Unknown)
        .count();
    unknown as f64 / project.roster.len() as f64
}

fn women_count(corpus: &Corpus, project: &Project) -> usize {
    project
        .roster
        .iter()
        .filter(|c| corpus.person(c.person).gender == Gender::Female)
        .count()
}

/// Narrow the corpus analysis set by the four criteria, in order.
pub fn apply_filters(mut corpus: Corpus, criteria: &FilterCriteria) -> (Corpus, FilterReport) {
    let initial = corpus.analysis().to_vec();

    let after_year: Vec<usize> = initial
        .iter()
        .copied()
        .filter(|&p| {
            let y = corpus.project(p).release_year;
            y >= criteria.year_min && y <= criteria.year_max
        })
        .collect();

    let after_edges: Vec<usize> = after_year
        .iter()
        .copied()
        .filter(|&p| {
            let edges = project_team_graph(&corpus, p).edge_count();
            edges > criteria.min_edges_exclusive && edges < criteria.max_edges_exclusive
        })
        .collect();

    let after_unknown: Vec<usize> = after_edges
        .iter()
        .copied()
        .filter(|&p| unknown_ratio(&corpus, corpus.project(p)) < criteria.max_unknown_ratio)
        .collect();

    let after_women: Vec<usize> = after_unknown
        .iter()
        .copied()
        .filter(|&p| women_count(&corpus, corpus.project(p)) >= criteria.min_women)
        .collect();

    let report = FilterReport {
        initial: initial.len(),
        after_year_window: after_year.len(),
        after_edge_count: after_edges.len(),
        after_unknown_ratio: after_unknown.len(),
        after_min_women: after_women.len(),
    };
    corpus.set_analysis(after_women);
    (corpus, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse::{RawCredit, RawProject};
    use crate::corpus::{build_corpus, CorpusConfig};

    fn project(id: &str, year: i32) -> RawProject {
        RawProject {
            row: 0,
            project_id: id.into(),
            title: String::new(),
            release_year: year,
            firm_id: "f".into(),
            publisher_id: "p".into(),
            countries_released: 1,
            platforms: vec!["pc".into()],
            style_elements: vec!["s".into()],
            exclude_flag: false,
        }
    }

    fn credit(project: &str, person: &str, gender: Gender) -> RawCredit {
        RawCredit {
            row: 0,
            project_id: project.into(),
            person_id: person.into(),
            full_name: String::new(),
            role: String::new(),
            gender_label: Some(gender),
            award_flag: false,
        }
    }

    /// Three prior projects establish history; the four 2000-era projects
    /// exercise each filter stage.
    fn corpus() -> Corpus {
        let projects = vec![
            project("h1", 1995),
            project("h2", 1996),
            project("h3", 1997),
            project("too_old", 1980),
            project("no_edges", 2000),
            project("all_male", 2001),
            project("keeper", 2002),
            project("too_unknown", 2003),
        ];
        let mut credits = Vec::new();
        // history: a,b,c,d work together three times (d female, u unknown)
        for h in ["h1", "h2", "h3"] {
            credits.push(credit(h, "a", Gender::Male));
            credits.push(credit(h, "b", Gender::Male));
            credits.push(credit(h, "c", Gender::Male));
            credits.push(credit(h, "d", Gender::Female));
            credits.push(credit(h, "u1", Gender::Unknown));
            credits.push(credit(h, "u2", Gender::Unknown));
        }
        credits.push(credit("too_old", "a", Gender::Male));
        credits.push(credit("too_old", "b", Gender::Male));
        // no shared history between fresh persons
        credits.push(credit("no_edges", "e1", Gender::Female));
        credits.push(credit("no_edges", "e2", Gender::Male));
        // enough edges but all male
        credits.push(credit("all_male", "a", Gender::Male));
        credits.push(credit("all_male", "b", Gender::Male));
        credits.push(credit("all_male", "c", Gender::Male));
        // passes everything
        credits.push(credit("keeper", "a", Gender::Male));
        credits.push(credit("keeper", "b", Gender::Male));
        credits.push(credit("keeper", "c", Gender::Male));
        credits.push(credit("keeper", "d", Gender::Female));
        // mostly unknown roster
        credits.push(credit("too_unknown", "a", Gender::Male));
        credits.push(credit("too_unknown", "d", Gender::Female));
        credits.push(credit("too_unknown", "u1", Gender::Unknown));
        credits.push(credit("too_unknown", "u2", Gender::Unknown));

        let (corpus, _) = build_corpus(projects, credits, None, &CorpusConfig::default()).unwrap();
        corpus
    }

    fn criteria() -> FilterCriteria {
        FilterCriteria {
            year_min: 1993,
            year_max: 2009,
            ..FilterCriteria::default()
        }
    }

    #[test]
    fn stages_are_monotone_and_final_count_matches() {
        let (filtered, report) = apply_filters(corpus(), &criteria());
        let stages = report.stages();
        for w in stages.windows(2) {
            assert!(w[0] >= w[1], "stage counts must not increase: {stages:?}");
        }
        assert_eq!(report.final_count(), filtered.len());
        // h1 (no priors) and no_edges drop at the edge stage; too_unknown at
        // the ratio stage; all_male at the women stage.
        assert_eq!(stages, [8, 7, 5, 4, 3]);
    }

    #[test]
    fn zero_edge_project_excluded_at_edge_stage() {
        let (filtered, report) = apply_filters(corpus(), &criteria());
        assert_eq!(report.after_year_window - report.after_edge_count, 2);
        assert!(filtered
            .analysis()
            .iter()
            .all(|&p| filtered.project(p).project_id != "no_edges"));
    }

    #[test]
    fn all_male_project_excluded_at_women_stage() {
        let (filtered, _) = apply_filters(corpus(), &criteria());
        let ids: Vec<&str> = filtered
            .analysis()
            .iter()
            .map(|&p| filtered.project(p).project_id.as_str())
            .collect();
        assert!(!ids.contains(&"all_male"));
        assert_eq!(ids, vec!["h2", "h3", "keeper"]);
    }

    #[test]
    fn filtering_is_idempotent() {
        let crit = criteria();
        let (once, first) = apply_filters(corpus(), &crit);
        let once_ids: Vec<String> = once
            .analysis()
            .iter()
            .map(|&p| once.project(p).project_id.clone())
            .collect();
        let (twice, second) = apply_filters(once, &crit);
        let twice_ids: Vec<String> = twice
            .analysis()
            .iter()
            .map(|&p| twice.project(p).project_id.clone())
            .collect();
        assert_eq!(once_ids, twice_ids);
        assert_eq!(first.final_count(), second.final_count());
        assert_eq!(second.initial, first.final_count());
    }
}
