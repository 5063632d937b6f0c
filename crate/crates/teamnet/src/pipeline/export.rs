//! Artifact writers and readers: CSV tables and JSON manifests.
//!
//! Every value is formatted deterministically (shortest round-trip floats,
//! sorted JSON maps, fixed column orders), so identical runs produce
//! byte-identical files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::metrics::{ControlVector, MetricRow};
use crate::stats::{FTestResult, ModelFit};
use crate::timeseries::SequencePoint;

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

pub const METRIC_COLUMNS: [&str; 18] = [
    "project_id",
    "firm_id",
    "release_year",
    "team_size",
    "ratio_of_center",
    "n_newbies",
    "n_stars",
    "game_tenure",
    "single_firm",
    "n_countries",
    "platforms",
    "blau_raw",
    "blau_norm",
    "mixing",
    "bonding",
    "incorporating",
    "combined",
    "distinctiveness",
];

/// Metric table CSV; undefined metrics are empty cells.
pub fn write_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(METRIC_COLUMNS).map_err(csv_err(path))?;
    for r in rows {
        let c = &r.controls;
        w.write_record([
            r.project_id.as_str(),
            r.firm_id.as_str(),
            &c.release_year.to_string(),
            &c.team_size.to_string(),
            &c.ratio_of_center.to_string(),
            &c.n_newbies.to_string(),
            &c.n_stars.to_string(),
            &c.game_tenure.to_string(),
            if c.single_firm { "1" } else { "0" },
            &c.n_countries.to_string(),
            &c.platforms.join("|"),
            &fmt_opt(r.blau_raw),
            &fmt_opt(r.blau_norm),
            &fmt_opt(r.mixing),
            &fmt_opt(r.bonding),
            &fmt_opt(r.incorporating),
            &fmt_opt(r.combined),
            &fmt_opt(r.distinctiveness),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Input(format!("{}: {e}", path.display()))
}

fn parse_opt(cell: &str) -> Result<Option<f64>> {
    if cell.is_empty() {
        Ok(None)
    } else {
        cell.parse::<f64>()
            .map(Some)
            .map_err(|_| Error::Input(format!("bad numeric cell `{cell}` in metrics table")))
    }
}

/// Read back a metric table written by [`write_metrics_csv`].
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(csv_err(path))?
        .clone();
    let idx = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Input(format!("{}: missing column {name}", path.display())))
    };
    let cols: Vec<usize> = METRIC_COLUMNS
        .iter()
        .map(|c| idx(c))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let get = |i: usize| record.get(cols[i]).unwrap_or_default();
        let parse_num = |i: usize| -> Result<f64> {
            get(i)
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("bad numeric cell `{}`", get(i))))
        };
        rows.push(MetricRow {
            project_id: get(0).to_string(),
            firm_id: get(1).to_string(),
            blau_raw: parse_opt(get(11))?,
            blau_norm: parse_opt(get(12))?,
            mixing: parse_opt(get(13))?,
            bonding: parse_opt(get(14))?,
            incorporating: parse_opt(get(15))?,
            combined: parse_opt(get(16))?,
            distinctiveness: parse_opt(get(17))?,
            controls: ControlVector {
                release_year: get(2)
                    .parse()
                    .map_err(|_| Error::Input(format!("bad year `{}`", get(2))))?,
                team_size: parse_num(3)? as usize,
                ratio_of_center: parse_num(4)?,
                n_newbies: parse_num(5)? as usize,
                n_stars: parse_num(6)? as usize,
                game_tenure: parse_num(7)?,
                single_firm: get(8) == "1",
                n_countries: parse_num(9)? as u32,
                platforms: if get(10).is_empty() {
                    Vec::new()
                } else {
                    get(10).split('|').map(str::to_string).collect()
                },
            },
        });
    }
    Ok(rows)
}

/// Coefficient table for forest-plot rendering.
pub fn write_coefficients_csv(path: &Path, fits: &[ModelFit]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["family", "model", "term", "estimate", "se", "ci_low", "ci_high"])
        .map_err(csv_err(path))?;
    for fit in fits {
        for t in &fit.terms {
            w.write_record([
                fit.spec.as_str(),
                fit.label.as_str(),
                t.term.as_str(),
                &t.estimate.to_string(),
                &t.se.to_string(),
                &t.ci_low.to_string(),
                &t.ci_high.to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_ftests_csv(path: &Path, tests: &[(String, FTestResult)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "model",
        "f",
        "p",
        "df_num",
        "df_den",
        "ssr_restricted",
        "ssr_full",
    ])
    .map_err(csv_err(path))?;
    for (label, t) in tests {
        w.write_record([
            label.as_str(),
            &t.f.to_string(),
            &t.p.to_string(),
            &t.df_num.to_string(),
            &t.df_den.to_string(),
            &t.ssr_restricted.to_string(),
            &t.ssr_full.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_te_table_csv(path: &Path, points: &[SequencePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "firm_id",
        "n_obs",
        "effective_n",
        "te_d_to_i",
        "te_i_to_d",
        "final_div",
        "final_incl",
        "trend_div",
        "trend_incl",
    ])
    .map_err(csv_err(path))?;
    for p in points {
        w.write_record([
            p.firm_id.as_str(),
            &p.n_obs.to_string(),
            &p.te.effective_n.to_string(),
            &p.te.te_d_to_i.to_string(),
            &p.te.te_i_to_d.to_string(),
            &p.final_diversity.to_string(),
            &p.final_inclusion.to_string(),
            &p.trend_diversity.to_string(),
            &p.trend_inclusion.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Long-format export for overlaid metric histograms: (metric, level, value).
pub fn write_histogram_csv(
    path: &Path,
    levels: &[(String, &[MetricRow])],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["metric", "level", "project_id", "value"])
        .map_err(csv_err(path))?;
    for (level, rows) in levels {
        for r in rows.iter() {
            for (metric, value) in [
                ("diversity", r.blau_raw),
                ("mixing", r.mixing),
                ("bonding", r.bonding),
                ("incorporating", r.incorporating),
                ("combined", r.combined),
            ] {
                if let Some(v) = value {
                    w.write_record([metric, level, r.project_id.as_str(), &v.to_string()])
                        .map_err(csv_err(path))?;
                }
            }
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Write any serializable artifact as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numeric(format!("serialize {}: {e}", path.display())))?;
    w.write_all(text.as_bytes()).map_err(io_err(path))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Run manifest: everything needed to reproduce the artifacts.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool_version: &'static str,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub details: BTreeMap<String, serde_json::Value>,
    pub config: Config,
}

impl Manifest {
    pub fn new(subcommand: &str, config: &Config) -> Manifest {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            config_hash: config.hash(),
            seed: config.run.seed,
            inputs: BTreeMap::new(),
            details: BTreeMap::new(),
            config: config.clone(),
        }
    }

    pub fn input(mut self, name: &str, path: &Path) -> Manifest {
        self.inputs
            .insert(name.to_string(), path.display().to_string());
        self
    }

    pub fn detail<T: Serialize>(mut self, key: &str, value: &T) -> Manifest {
        self.details.insert(
            key.to_string(),
            serde_json::to_value(value).expect("manifest detail serializes"),
        );
        self
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(format!("{}_manifest.json", self.subcommand));
        write_json(&path, self)?;
        Ok(path)
    }
}
