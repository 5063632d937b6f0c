//! Input-table readers: CSV or line-delimited JSON, plus the name lexicon.
//!
//! Parsing is two-stage: readers produce raw rows with their source row
//! numbers, then [`super::build`] validates cross-references and assembles
//! the immutable [`Corpus`](super::Corpus). All diagnostics carry the table
//! name, row number and field.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::Deserialize;

use super::build::build_corpus;
use super::{Corpus, CorpusConfig, Gender, ParseSummary};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RawProject {
    pub row: usize,
    pub project_id: String,
    pub title: String,
    pub release_year: i32,
    pub firm_id: String,
    pub publisher_id: String,
    pub countries_released: u32,
    pub platforms: Vec<String>,
    pub style_elements: Vec<String>,
    pub exclude_flag: bool,
}

#[derive(Debug, Clone)]
pub struct RawCredit {
    pub row: usize,
    pub project_id: String,
    pub person_id: String,
    pub full_name: String,
    pub role: String,
    /// `None` when the cell was empty (label not provided).
    pub gender_label: Option<Gender>,
    pub award_flag: bool,
}

/// First-name lookup table. Names marked `unisex` or `unknown` resolve to
/// [`Gender::Unknown`].
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, Gender>,
}

impl Lexicon {
    pub fn new(entries: impl IntoIterator<Item = (String, Gender)>) -> Self {
        Lexicon {
            entries: entries
                .into_iter()
                .map(|(k, v)| (k.to_ascii_lowercase(), v))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Label the first name token of `full_name`; absent names are unknown.
    pub fn label(&self, full_name: &str) -> Gender {
        infer_gender(full_name, self)
    }

    fn lookup(&self, first_name: &str) -> Option<Gender> {
        self.entries.get(&first_name.to_ascii_lowercase()).copied()
    }
}

/// Look up the first name token of `full_name` in the lexicon. Returns
/// `Unknown` for empty names, absent names, and names marked unisex.
pub fn infer_gender(full_name: &str, lexicon: &Lexicon) -> Gender {
    match full_name.split_whitespace().next() {
        Some(first) => lexicon.lookup(first).unwrap_or(Gender::Unknown),
        None => Gender::Unknown,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    JsonLines,
}

impl TableFormat {
    pub fn from_path(path: &Path) -> Result<TableFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(TableFormat::Csv),
            Some("jsonl") | Some("ndjson") => Ok(TableFormat::JsonLines),
            _ => Err(Error::UnknownFormat(path.to_path_buf())),
        }
    }
}

/// Parse, validate and assemble a corpus from the two input tables.
///
/// When a lexicon is supplied it is used as a fallback for credit rows whose
/// gender cell is empty; explicit labels always win.
pub fn parse_corpus(
    projects_path: &Path,
    credits_path: &Path,
    lexicon: Option<&Lexicon>,
    config: &CorpusConfig,
) -> Result<(Corpus, ParseSummary)> {
    let projects = read_projects(projects_path)?;
    let credits = read_credits(credits_path)?;
    build_corpus(projects, credits, lexicon, config)
}

pub fn read_projects(path: &Path) -> Result<Vec<RawProject>> {
    let format = TableFormat::from_path(path)?;
    let file = open(path)?;
    match format {
        TableFormat::Csv => parse_projects_csv(file),
        TableFormat::JsonLines => parse_projects_jsonl(file),
    }
}

pub fn read_credits(path: &Path) -> Result<Vec<RawCredit>> {
    let format = TableFormat::from_path(path)?;
    let file = open(path)?;
    match format {
        TableFormat::Csv => parse_credits_csv(file),
        TableFormat::JsonLines => parse_credits_jsonl(file),
    }
}

/// Read a `first_name,label` CSV into a [`Lexicon`].
pub fn read_lexicon(path: &Path) -> Result<Lexicon> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let headers = headers_of(&mut reader, "name_lexicon")?;
    let name_col = column(&headers, "name_lexicon", "first_name")?;
    let label_col = column(&headers, "name_lexicon", "label")?;
    let mut entries = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| malformed("name_lexicon", row, "<record>", &e.to_string()))?;
        let name = field(&record, name_col, "name_lexicon", row, "first_name")?;
        let label = field(&record, label_col, "name_lexicon", row, "label")?;
        let gender = match label.trim().to_ascii_lowercase().as_str() {
            "female" | "f" => Gender::Female,
            "male" | "m" => Gender::Male,
            "unisex" | "unknown" | "u" => Gender::Unknown,
            other => {
                return Err(malformed(
                    "name_lexicon",
                    row,
                    "label",
                    &format!("unrecognized label `{other}`"),
                ))
            }
        };
        entries.insert(name.trim().to_ascii_lowercase(), gender);
    }
    Ok(Lexicon { entries })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn malformed(table: &str, row: usize, fld: &str, message: &str) -> Error {
    Error::MalformedRow {
        table: table.to_string(),
        row,
        field: fld.to_string(),
        message: message.to_string(),
    }
}

fn headers_of<R: Read>(reader: &mut csv::Reader<R>, table: &str) -> Result<csv::StringRecord> {
    reader
        .headers()
        .map(|h| h.clone())
        .map_err(|e| malformed(table, 0, "<header>", &e.to_string()))
}

fn column(headers: &csv::StringRecord, table: &str, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| malformed(table, 0, name, "missing column"))
}

fn field<'r>(
    record: &'r csv::StringRecord,
    idx: usize,
    table: &str,
    row: usize,
    name: &str,
) -> Result<&'r str> {
    record
        .get(idx)
        .ok_or_else(|| malformed(table, row, name, "missing field"))
}

fn require<'r>(value: &'r str, table: &str, row: usize, name: &str) -> Result<&'r str> {
    let v = value.trim();
    if v.is_empty() {
        Err(malformed(table, row, name, "required field is empty"))
    } else {
        Ok(v)
    }
}

fn parse_int<T: std::str::FromStr>(value: &str, table: &str, row: usize, name: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| malformed(table, row, name, &format!("not a valid integer: `{value}`")))
}

fn parse_flag(value: &str, table: &str, row: usize, name: &str) -> Result<bool> {
    match value.trim() {
        "" | "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(malformed(
            table,
            row,
            name,
            &format!("expected 0/1, got `{other}`"),
        )),
    }
}

fn split_tags(value: &str) -> Vec<String> {
    value
        .split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn parse_projects_csv<R: Read>(reader: R) -> Result<Vec<RawProject>> {
    const TABLE: &str = "projects";
    let mut reader = csv::Reader::from_reader(reader);
    let headers = headers_of(&mut reader, TABLE)?;
    let cols: Vec<usize> = [
        "project_id",
        "title",
        "release_year",
        "firm_id",
        "publisher_id",
        "countries_released",
        "platforms",
        "style_elements",
        "exclude_flag",
    ]
    .iter()
    .map(|name| column(&headers, TABLE, name))
    .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| malformed(TABLE, row, "<record>", &e.to_string()))?;
        let get = |c: usize, name: &str| field(&record, cols[c], TABLE, row, name);
        out.push(RawProject {
            row,
            project_id: require(get(0, "project_id")?, TABLE, row, "project_id")?.to_string(),
            title: get(1, "title")?.trim().to_string(),
            release_year: parse_int(get(2, "release_year")?, TABLE, row, "release_year")?,
            firm_id: require(get(3, "firm_id")?, TABLE, row, "firm_id")?.to_string(),
            publisher_id: require(get(4, "publisher_id")?, TABLE, row, "publisher_id")?.to_string(),
            countries_released: parse_int(
                get(5, "countries_released")?,
                TABLE,
                row,
                "countries_released",
            )?,
            platforms: split_tags(get(6, "platforms")?),
            style_elements: split_tags(get(7, "style_elements")?),
            exclude_flag: parse_flag(get(8, "exclude_flag")?, TABLE, row, "exclude_flag")?,
        });
    }
    Ok(out)
}

pub fn parse_credits_csv<R: Read>(reader: R) -> Result<Vec<RawCredit>> {
    const TABLE: &str = "credits";
    let mut reader = csv::Reader::from_reader(reader);
    let headers = headers_of(&mut reader, TABLE)?;
    let cols: Vec<usize> = [
        "project_id",
        "person_id",
        "full_name",
        "role",
        "gender_label",
        "award_flag",
    ]
    .iter()
    .map(|name| column(&headers, TABLE, name))
    .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| malformed(TABLE, row, "<record>", &e.to_string()))?;
        let get = |c: usize, name: &str| field(&record, cols[c], TABLE, row, name);
        let label_raw = get(4, "gender_label")?;
        let gender_label = Gender::parse(label_raw).ok_or_else(|| {
            malformed(
                TABLE,
                row,
                "gender_label",
                &format!("unrecognized label `{label_raw}`"),
            )
        })?;
        out.push(RawCredit {
            row,
            project_id: require(get(0, "project_id")?, TABLE, row, "project_id")?.to_string(),
            person_id: require(get(1, "person_id")?, TABLE, row, "person_id")?.to_string(),
            full_name: get(2, "full_name")?.trim().to_string(),
            role: get(3, "role")?.trim().to_string(),
            gender_label,
            award_flag: parse_flag(get(5, "award_flag")?, TABLE, row, "award_flag")?,
        });
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct ProjectJson {
    project_id: String,
    #[serde(default)]
    title: String,
    release_year: i32,
    firm_id: String,
    publisher_id: String,
    countries_released: u32,
    #[serde(default)]
    platforms: Vec<String>,
    #[serde(default)]
    style_elements: Vec<String>,
    #[serde(default)]
    exclude_flag: bool,
}

#[derive(Debug, Deserialize)]
struct CreditJson {
    project_id: String,
    person_id: String,
    #[serde(default)]
    full_name: String,
    #[serde(default)]
    role: String,
    #[serde(default)]
    gender_label: String,
    #[serde(default)]
    award_flag: u8,
}

pub fn parse_projects_jsonl<R: Read>(reader: R) -> Result<Vec<RawProject>> {
    const TABLE: &str = "projects";
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| malformed(TABLE, row, "<line>", &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: ProjectJson = serde_json::from_str(&line)
            .map_err(|e| malformed(TABLE, row, "<record>", &e.to_string()))?;
        if p.project_id.trim().is_empty() {
            return Err(malformed(TABLE, row, "project_id", "required field is empty"));
        }
        out.push(RawProject {
            row,
            project_id: p.project_id.trim().to_string(),
            title: p.title.trim().to_string(),
            release_year: p.release_year,
            firm_id: require(&p.firm_id, TABLE, row, "firm_id")?.to_string(),
            publisher_id: require(&p.publisher_id, TABLE, row, "publisher_id")?.to_string(),
            countries_released: p.countries_released,
            platforms: p.platforms.iter().map(|s| s.trim().to_string()).collect(),
            style_elements: p
                .style_elements
                .iter()
                .map(|s| s.trim().to_string())
                .collect(),
            exclude_flag: p.exclude_flag,
        });
    }
    Ok(out)
}

pub fn parse_credits_jsonl<R: Read>(reader: R) -> Result<Vec<RawCredit>> {
    const TABLE: &str = "credits";
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| malformed(TABLE, row, "<line>", &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let c: CreditJson = serde_json::from_str(&line)
            .map_err(|e| malformed(TABLE, row, "<record>", &e.to_string()))?;
        let gender_label = Gender::parse(&c.gender_label).ok_or_else(|| {
            malformed(
                TABLE,
                row,
                "gender_label",
                &format!("unrecognized label `{}`", c.gender_label),
            )
        })?;
        out.push(RawCredit {
            row,
            project_id: require(&c.project_id, TABLE, row, "project_id")?.to_string(),
            person_id: require(&c.person_id, TABLE, row, "person_id")?.to_string(),
            full_name: c.full_name.trim().to_string(),
            role: c.role.trim().to_string(),
            gender_label,
            award_flag: c.award_flag != 0,
        });
    }
    Ok(out)
}
