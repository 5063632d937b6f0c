//! Corpus assembly: cross-reference validation, interning, career index.

use std::collections::HashMap;

use serde::Serialize;

use super::parse::{Lexicon, RawCredit, RawProject};
use super::{Corpus, CorpusConfig, Credit, Gender, Person, Project};
use crate::error::{Error, Result};

/// Counts reported by corpus construction.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ParseSummary {
    pub projects_read: usize,
    /// Projects dropped because their `exclude_flag` was set.
    pub projects_excluded: usize,
    pub credit_rows_read: usize,
    /// Credit rows merged into an existing roster entry for the same person.
    pub duplicate_credits_merged: usize,
    pub persons: usize,
    /// Persons whose label came from the lexicon fallback.
    pub lexicon_labelled: usize,
}

pub fn build_corpus(
    raw_projects: Vec<RawProject>,
    raw_credits: Vec<RawCredit>,
    lexicon: Option<&Lexicon>,
    config: &CorpusConfig,
) -> Result<(Corpus, ParseSummary)> {
    let mut summary = ParseSummary {
        projects_read: raw_projects.len(),
        credit_rows_read: raw_credits.len(),
        ..ParseSummary::default()
    };

    // Excluded releases (re-releases etc.) are dropped before anything else;
    // they are invisible to both history and filtering.
    let mut kept: Vec<RawProject> = Vec::with_capacity(raw_projects.len());
    let mut known_ids: HashMap<String, usize> = HashMap::new();
    for p in raw_projects {
        if p.release_year < config.min_year || p.release_year > config.max_year {
            return Err(Error::MalformedRow {
                table: "projects".into(),
                row: p.row,
                field: "release_year".into(),
                message: format!(
                    "{} outside corpus range {}..={}",
                    p.release_year, config.min_year, config.max_year
                ),
            });
        }
        if known_ids.insert(p.project_id.clone(), p.row).is_some() {
            return Err(Error::DuplicateProject(p.project_id));
        }
        if p.exclude_flag {
            summary.projects_excluded += 1;
        } else {
            kept.push(p);
        }
    }

    kept.sort_by(|a, b| {
        (a.release_year, &a.project_id).cmp(&(b.release_year, &b.project_id))
    });
    let project_pos: HashMap<&str, usize> = kept
        .iter()
        .enumerate()
        .map(|(i, p)| (p.project_id.as_str(), i))
        .collect();

    // Intern platform and style tags in sorted order so ids are stable
    // regardless of input row order.
    let mut platform_names: Vec<String> = kept.iter().flat_map(|p| p.platforms.clone()).collect();
    platform_names.sort();
    platform_names.dedup();
    let platform_ids: HashMap<&str, u32> = platform_names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as u32))
        .collect();
    let mut style_names: Vec<String> = kept
        .iter()
        .flat_map(|p| p.style_elements.clone())
        .collect();
    style_names.sort();
    style_names.dedup();
    let style_ids: HashMap<&str, u32> = style_names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as u32))
        .collect();

    let mut projects: Vec<Project> = kept
        .iter()
        .map(|p| {
            let mut platforms: Vec<u32> = p.platforms.iter().map(|t| platform_ids[t.as_str()]).collect();
            platforms.sort_unstable();
            platforms.dedup();
            let mut style: Vec<u32> = p
                .style_elements
                .iter()
                .map(|t| style_ids[t.as_str()])
                .collect();
            style.sort_unstable();
            style.dedup();
            Project {
                project_id: p.project_id.clone(),
                title: p.title.clone(),
                release_year: p.release_year,
                firm_id: p.firm_id.clone(),
                publisher_id: p.publisher_id.clone(),
                countries_released: p.countries_released,
                platforms,
                style_elements: style,
                roster: Vec::new(),
            }
        })
        .collect();

    let mut persons: Vec<Person> = Vec::new();
    let mut person_index: HashMap<String, usize> = HashMap::new();
    // Person index -> whether the stored label was explicit (vs lexicon/unlabelled).
    let mut explicit: Vec<bool> = Vec::new();

    for c in &raw_credits {
        let Some(&proj) = project_pos.get(c.project_id.as_str()) else {
            // Credits of excluded projects are silently dropped with them.
            if known_ids.contains_key(&c.project_id) {
                continue;
            }
            return Err(Error::DanglingProject {
                row: c.row,
                project_id: c.project_id.clone(),
            });
        };

        let idx = match person_index.get(&c.person_id) {
            Some(&idx) => {
                match (explicit[idx], c.gender_label) {
                    (true, Some(label)) if label != persons[idx].gender => {
                        return Err(Error::ConflictingGender {
                            person_id: c.person_id.clone(),
                            row: c.row,
                        });
                    }
                    (false, Some(label)) => {
                        persons[idx].gender = label;
                        explicit[idx] = true;
                    }
                    _ => {}
                }
                if persons[idx].full_name.is_none() && !c.full_name.is_empty() {
                    persons[idx].full_name = Some(c.full_name.clone());
                }
                idx
            }
            None => {
                let gender = match c.gender_label {
                    Some(label) => label,
                    None => match lexicon {
                        Some(lex) => {
                            let g = lex.label(&c.full_name);
                            summary.lexicon_labelled += 1;
                            g
                        }
                        None => Gender::Unknown,
                    },
                };
                let idx = persons.len();
                persons.push(Person {
                    person_id: c.person_id.clone(),
                    full_name: if c.full_name.is_empty() {
                        None
                    } else {
                        Some(c.full_name.clone())
                    },
                    gender,
                });
                explicit.push(c.gender_label.is_some());
                person_index.insert(c.person_id.clone(), idx);
                idx
            }
        };

        let roster = &mut projects[proj].roster;
        if let Some(existing) = roster.iter_mut().find(|cr| cr.person == idx) {
            existing.award |= c.award_flag;
            summary.duplicate_credits_merged += 1;
        } else {
            roster.push(Credit {
                person: idx,
                role: c.role.clone(),
                award: c.award_flag,
            });
        }
    }

    for p in &projects {
        if p.roster.is_empty() {
            return Err(Error::Input(format!(
                "project `{}` has an empty roster",
                p.project_id
            )));
        }
    }

    // Career index: projects are already in (year, project_id) order, so a
    // single in-order sweep yields time-ordered careers.
    let mut career: Vec<Vec<usize>> = vec![Vec::new(); persons.len()];
    for (proj_idx, p) in projects.iter().enumerate() {
        for credit in &p.roster {
            career[credit.person].push(proj_idx);
        }
    }

    summary.persons = persons.len();
    Ok((
        Corpus::from_parts(
            projects,
            persons,
            person_index,
            career,
            style_names,
            platform_names,
        ),
        summary,
    ))
}
