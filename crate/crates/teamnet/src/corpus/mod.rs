//! Project-credit corpus: domain types, construction, and filtering.
//!
//! A [`Corpus`] is immutable after construction. It keeps the *full* project
//! history (needed for collaboration weights and distinctiveness windows)
//! together with an *analysis set*: the subset of projects that survive
//! filtering and receive metric rows. [`filter::apply_filters`] narrows the
//! analysis set without discarding history, which keeps filtering idempotent
//! even though one criterion depends on collaboration history.

mod build;
pub mod filter;
pub mod parse;

pub use build::{build_corpus, ParseSummary};
pub use filter::{apply_filters, FilterCriteria, FilterReport};
pub use parse::{infer_gender, parse_corpus, read_lexicon, Lexicon};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Gender label attached to a person. The taxonomy is deliberately the
/// three-way one used by name-based labelers: anything else is `Unknown`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
    Unknown,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Unknown => "unknown",
        }
    }

    /// Parse a label cell. Empty means "not labelled" and is distinct from
    /// an explicit `unknown`, so it is reported as `None`.
    pub fn parse(s: &str) -> Option<Option<Gender>> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" => Some(None),
            "female" | "f" => Some(Some(Gender::Female)),
            "male" | "m" => Some(Some(Gender::Male)),
            "unknown" | "u" => Some(Some(Gender::Unknown)),
            _ => None,
        }
    }
}

/// Index of a person within [`Corpus::persons`].
pub type PersonIdx = usize;
/// Index of a project within [`Corpus::projects`].
pub type ProjectIdx = usize;

#[derive(Debug, Clone)]
pub struct Person {
    pub person_id: String,
    pub full_name: Option<String>,
    pub gender: Gender,
}

/// One credited roster member of a project.
#[derive(Debug, Clone)]
pub struct Credit {
    pub person: PersonIdx,
    pub role: String,
    pub award: bool,
}

#[derive(Debug, Clone)]
pub struct Project {
    pub project_id: String,
    pub title: String,
    pub release_year: i32,
    pub firm_id: String,
    pub publisher_id: String,
    pub countries_released: u32,
    /// Interned platform ids, sorted ascending. See [`Corpus::platform_universe`].
    pub platforms: Vec<u32>,
    /// Interned stylistic-element ids, sorted ascending. See [`Corpus::style_universe`].
    pub style_elements: Vec<u32>,
    /// Unique roster members (one entry per person).
    pub roster: Vec<Credit>,
}

/// Validation bounds applied at parse time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Hard sanity bounds on release years; rows outside are malformed.
    pub min_year: i32,
    pub max_year: i32,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            min_year: 1900,
            max_year: 2100,
        }
    }
}

/// Immutable analysis corpus.
///
/// `projects` is the full history sorted by `(release_year, project_id)`.
/// `analysis` holds the indices of projects currently in the analysis set,
/// in the same order. Collaboration weights and distinctiveness windows
/// always consult the full history regardless of the analysis set.
#[derive(Debug, Clone)]
pub struct Corpus {
    projects: Vec<Project>,
    persons: Vec<Person>,
    person_index: HashMap<String, PersonIdx>,
    /// Per person: project indices in (release_year, project_id) order.
    career: Vec<Vec<ProjectIdx>>,
    style_universe: Vec<String>,
    platform_universe: Vec<String>,
    analysis: Vec<ProjectIdx>,
}

impl Corpus {
    pub(crate) fn from_parts(
        projects: Vec<Project>,
        persons: Vec<Person>,
        person_index: HashMap<String, PersonIdx>,
        career: Vec<Vec<ProjectIdx>>,
        style_universe: Vec<String>,
        platform_universe: Vec<String>,
    ) -> Self {
        let analysis = (0..projects.len()).collect();
        Corpus {
            projects,
            persons,
            person_index,
            career,
            style_universe,
            platform_universe,
            analysis,
        }
    }

    /// Full project history, sorted by (release_year, project_id).
    pub fn history(&self) -> &[Project] {
        &self.projects
    }

    pub fn project(&self, idx: ProjectIdx) -> &Project {
        &self.projects[idx]
    }

    pub fn persons(&self) -> &[Person] {
        &self.persons
    }

    pub fn person(&self, idx: PersonIdx) -> &Person {
        &self.persons[idx]
    }

    pub fn person_idx(&self, person_id: &str) -> Option<PersonIdx> {
        self.person_index.get(person_id).copied()
    }

    pub fn project_idx(&self, project_id: &str) -> Option<ProjectIdx> {
        self.projects
            .iter()
            .position(|p| p.project_id == project_id)
    }

    /// Time-ordered project indices for one person.
    pub fn career(&self, person: PersonIdx) -> &[ProjectIdx] {
        &self.career[person]
    }

    /// Number of projects this person participated in strictly before `year`.
    pub fn prior_project_count(&self, person: PersonIdx, year: i32) -> usize {
        self.career[person]
            .iter()
            .take_while(|&&p| self.projects[p].release_year < year)
            .count()
    }

    pub fn style_universe(&self) -> &[String] {
        &self.style_universe
    }

    pub fn platform_universe(&self) -> &[String] {
        &self.platform_universe
    }

    /// Indices of the projects in the analysis set.
    pub fn analysis(&self) -> &[ProjectIdx] {
        &self.analysis
    }

    pub(crate) fn set_analysis(&mut self, analysis: Vec<ProjectIdx>) {
        self.analysis = analysis;
    }

    /// Number of projects in the analysis set.
    pub fn len(&self) -> usize {
        self.analysis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.analysis.is_empty()
    }
}
