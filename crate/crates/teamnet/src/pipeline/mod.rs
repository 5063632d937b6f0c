//! Pipeline stages behind the CLI subcommands.
//!
//! Each stage is a plain function from (config, inputs, output directory) to
//! artifacts plus a manifest, so the stages compose: `metrics` consumes the
//! input tables, `model` and `sequence` consume the metric table, `report`
//! only bundles prior artifacts. Identical config and seed give byte-identical
//! artifacts regardless of the worker count.

pub mod export;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::corpus::parse::{RawCredit, RawProject};
use crate::corpus::{
    apply_filters, parse_corpus, read_lexicon, Corpus, FilterReport, Lexicon, ParseSummary,
};
use crate::error::{Error, Result};
use crate::metrics::{compute_metric_table, InclusionMetric, MetricConstants, MetricRow};
use crate::robustness::{relabel_experiment, RelabelExperiment};
use crate::stats::{
    build_interaction_model, fixed_effects_fit, ks_test, nested_f_test, ols_fit,
    wilcoxon_rank_sum, DesignMatrix, FTestResult, ModelFit, SpecTag,
};
use crate::synth::generate_corpus;
use crate::timeseries::{build_firm_series, sequence_outcome_models, sequence_points};
use export::{io_err, Manifest};

#[derive(Debug, Clone)]
pub struct InputPaths {
    pub projects: PathBuf,
    pub credits: PathBuf,
    pub lexicon: Option<PathBuf>,
}

/// Configure the global worker pool. 0 means all cores. Results never
/// depend on this; it only sets the degree of parallelism.
pub fn init_threads(threads: usize) {
    if threads > 0 {
        // Ignore the error when a pool already exists (tests, repeat calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

/// Parse inputs and apply the analysis filters.
pub fn load_filtered_corpus(
    config: &Config,
    paths: &InputPaths,
) -> Result<(Corpus, ParseSummary, FilterReport)> {
    let lexicon: Option<Lexicon> = match &paths.lexicon {
        Some(p) => Some(read_lexicon(p)?),
        None => None,
    };
    let (corpus, summary) = parse_corpus(
        &paths.projects,
        &paths.credits,
        lexicon.as_ref(),
        &config.corpus,
    )?;
    let (filtered, report) = apply_filters(corpus, &config.filters);
    Ok((filtered, summary, report))
}

/// `validate`: schema check plus the filter report.
pub fn run_validate(config: &Config, paths: &InputPaths, out_dir: &Path) -> Result<FilterReport> {
    let (_, summary, report) = load_filtered_corpus(config, paths)?;
    export::write_json(&out_dir.join("filter_report.json"), &report)?;
    Manifest::new("validate", config)
        .input("projects", &paths.projects)
        .input("credits", &paths.credits)
        .detail("parse_summary", &summary)
        .detail("filter_report", &report)
        .write(out_dir)?;
    Ok(report)
}

pub struct MetricsStage {
    pub rows: Vec<MetricRow>,
    pub constants: MetricConstants,
    pub report: FilterReport,
}

/// `metrics`: the per-project metric table plus the run manifest with the
/// pinned normalization constants.
pub fn run_metrics(config: &Config, paths: &InputPaths, out_dir: &Path) -> Result<MetricsStage> {
    let (corpus, summary, report) = load_filtered_corpus(config, paths)?;
    let (rows, constants) = compute_metric_table(&corpus, &config.metrics);
    export::write_metrics_csv(&out_dir.join("metrics.csv"), &rows)?;
    Manifest::new("metrics", config)
        .input("projects", &paths.projects)
        .input("credits", &paths.credits)
        .detail("parse_summary", &summary)
        .detail("filter_report", &report)
        .detail("constants", &constants)
        .write(out_dir)?;
    Ok(MetricsStage {
        rows,
        constants,
        report,
    })
}

pub struct ModelStage {
    /// Five fits per family: diversity-only plus one per inclusion metric.
    pub fits: Vec<ModelFit>,
    /// Baseline-family nested F-tests: each inclusion model against the
    /// diversity model on the same rows.
    pub ftests: Vec<(String, FTestResult)>,
}

fn fit_for_family(
    design: &DesignMatrix,
    family: SpecTag,
    stats_cfg: &crate::stats::StatsConfig,
) -> Result<ModelFit> {
    match family {
        SpecTag::FixedEffects => fixed_effects_fit(design, stats_cfg),
        _ => ols_fit(design, stats_cfg),
    }
}

/// The regression suite over a metric table: for each family (game-level
/// baseline, firm fixed effects, firm-aggregated), the diversity-only model
/// plus the four diversity-inclusion interaction models.
pub fn model_suite(rows: &[MetricRow], config: &Config) -> Result<ModelStage> {
    let blau = config.metrics.blau;
    let stats_cfg = &config.stats;
    let mut fits = Vec::new();
    let mut ftests = Vec::new();
    for family in [SpecTag::Baseline, SpecTag::FixedEffects, SpecTag::FirmAggregate] {
        let d0 = build_interaction_model(rows, None, blau, family)?;
        fits.push(fit_for_family(&d0, family, stats_cfg)?);
        for metric in InclusionMetric::ALL {
            let design = build_interaction_model(rows, Some(metric), blau, family)?;
            let full = fit_for_family(&design, family, stats_cfg)?;
            if family == SpecTag::Baseline {
                let interaction = format!("diversity_x_{}", metric.as_str());
                let restricted_design =
                    design.without_columns(&[metric.as_str(), interaction.as_str()]);
                let restricted = ols_fit(&restricted_design, stats_cfg)?;
                ftests.push((full.label.clone(), nested_f_test(&restricted, &full)?));
            }
            fits.push(full);
        }
    }
    Ok(ModelStage { fits, ftests })
}

/// `model`: run the suite over a previously written metric table.
pub fn run_model(config: &Config, metrics_path: &Path, out_dir: &Path) -> Result<ModelStage> {
    let rows = export::read_metrics_csv(metrics_path)?;
    let stage = model_suite(&rows, config)?;
    export::write_json(&out_dir.join("models.json"), &stage.fits)?;
    export::write_coefficients_csv(&out_dir.join("coefficients.csv"), &stage.fits)?;
    export::write_ftests_csv(&out_dir.join("ftests.csv"), &stage.ftests)?;
    Manifest::new("model", config)
        .input("metrics", metrics_path)
        .detail("n_rows", &rows.len())
        .detail("n_fits", &stage.fits.len())
        .detail("n_ftests", &stage.ftests.len())
        .write(out_dir)?;
    Ok(stage)
}

pub struct SequenceStage {
    pub points: Vec<crate::timeseries::SequencePoint>,
    pub fits: Vec<ModelFit>,
    pub distribution_checks: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize)]
struct DistCheck {
    ks_d: f64,
    ks_p: f64,
    wilcoxon_w: f64,
    wilcoxon_p: f64,
    n_full: usize,
    n_subset: usize,
}

/// `sequence`: firm series, tie-averaged transfer entropies, and the four
/// outcome regressions; also checks that the qualifying-firm subset matches
/// the full table distributionally.
pub fn run_sequence(config: &Config, metrics_path: &Path, out_dir: &Path) -> Result<SequenceStage> {
    let rows = export::read_metrics_csv(metrics_path)?;
    let (series, skipped) =
        build_firm_series(&rows, config.metrics.blau, config.timeseries.min_games);
    let qualifying: std::collections::BTreeSet<&str> =
        series.iter().map(|s| s.firm_id.as_str()).collect();

    // Distribution comparison of the subset entering the sequence analysis
    // against the full metric table.
    let mut checks: BTreeMap<String, serde_json::Value> = BTreeMap::new();
    for (name, accessor) in [
        (
            "distinctiveness",
            Box::new(|r: &MetricRow| r.distinctiveness) as Box<dyn Fn(&MetricRow) -> Option<f64>>,
        ),
        (
            "diversity",
            Box::new(|r: &MetricRow| r.diversity(config.metrics.blau)),
        ),
        ("combined", Box::new(|r: &MetricRow| r.combined)),
    ] {
        let full: Vec<f64> = rows.iter().filter_map(&accessor).collect();
        let subset: Vec<f64> = rows
            .iter()
            .filter(|r| qualifying.contains(r.firm_id.as_str()))
            .filter_map(&accessor)
            .collect();
        if full.len() >= 2 && subset.len() >= 2 {
            let (d, ks_p) = ks_test(&subset, &full)?;
            let (w, wil_p) = wilcoxon_rank_sum(&subset, &full)?;
            checks.insert(
                name.to_string(),
                serde_json::to_value(DistCheck {
                    ks_d: d,
                    ks_p,
                    wilcoxon_w: w,
                    wilcoxon_p: wil_p,
                    n_full: full.len(),
                    n_subset: subset.len(),
                })
                .expect("serializes"),
            );
        }
    }

    let points = sequence_points(&series, &config.timeseries, config.run.seed)?;
    let fits = sequence_outcome_models(&points, &config.stats)?;

    export::write_te_table_csv(&out_dir.join("te_table.csv"), &points)?;
    export::write_json(&out_dir.join("sequence_models.json"), &fits)?;
    export::write_coefficients_csv(&out_dir.join("sequence_coefficients.csv"), &fits)?;
    Manifest::new("sequence", config)
        .input("metrics", metrics_path)
        .detail("n_firms", &points.len())
        .detail(
            "n_games_in_series",
            &series.iter().map(|s| s.len()).sum::<usize>(),
        )
        .detail("rows_skipped_undefined", &skipped)
        .detail("distribution_checks", &checks)
        .write(out_dir)?;
    Ok(SequenceStage {
        points,
        fits,
        distribution_checks: checks,
    })
}

pub struct RobustnessStage {
    pub baseline_rows: Vec<MetricRow>,
    pub baseline_fits: Vec<ModelFit>,
    pub experiments: Vec<RelabelExperiment>,
}

/// `robustness`: relabeling experiments at each configured fraction, with
/// the original table and refits emitted side by side.
pub fn run_robustness(config: &Config, paths: &InputPaths, out_dir: &Path) -> Result<RobustnessStage> {
    let (corpus, _, report) = load_filtered_corpus(config, paths)?;
    let (baseline_rows, constants) = compute_metric_table(&corpus, &config.metrics);
    let baseline_fits = crate::robustness::refit_interaction_models(
        &baseline_rows,
        config.metrics.blau,
        &config.stats,
    )?;

    let mut experiments = Vec::new();
    for &fraction in &config.robustness.fractions {
        experiments.push(relabel_experiment(
            &corpus,
            &baseline_rows,
            fraction,
            config.robustness.reps,
            config.run.seed,
            &config.metrics,
            &config.stats,
        )?);
    }

    export::write_metrics_csv(&out_dir.join("relabel_original.csv"), &baseline_rows)?;
    let mut hist_levels: Vec<(String, &[MetricRow])> =
        vec![("original".to_string(), baseline_rows.as_slice())];
    let mut all_fits: Vec<(String, &[ModelFit])> =
        vec![("original".to_string(), baseline_fits.as_slice())];
    for exp in &experiments {
        let level = format!("relabel_{:02}", (exp.fraction * 100.0).round() as u32);
        export::write_metrics_csv(&out_dir.join(format!("{level}.csv")), &exp.rows)?;
        hist_levels.push((level.clone(), exp.rows.as_slice()));
        all_fits.push((level, exp.fits.as_slice()));
    }
    export::write_histogram_csv(&out_dir.join("relabel_hist.csv"), &hist_levels)?;

    // Side-by-side coefficient table across levels.
    let labelled: Vec<ModelFit> = all_fits
        .iter()
        .flat_map(|(level, fits)| {
            fits.iter().map(move |f| {
                let mut f = f.clone();
                f.label = format!("{level}:{}", f.label);
                f
            })
        })
        .collect();
    export::write_coefficients_csv(&out_dir.join("relabel_models.csv"), &labelled)?;

    Manifest::new("robustness", config)
        .input("projects", &paths.projects)
        .input("credits", &paths.credits)
        .detail("filter_report", &report)
        .detail("constants", &constants)
        .detail(
            "levels",
            &experiments
                .iter()
                .map(|e| (e.fraction, e.reps, e.total_flips))
                .collect::<Vec<_>>(),
        )
        .write(out_dir)?;
    Ok(RobustnessStage {
        baseline_rows,
        baseline_fits,
        experiments,
    })
}

pub struct SynthStage {
    pub projects_path: PathBuf,
    pub credits_path: PathBuf,
    pub ground_truth: crate::synth::GroundTruth,
}

/// `synth`: generate a corpus and write it in the exact input schema.
pub fn run_synth(config: &Config, out_dir: &Path) -> Result<SynthStage> {
    let output = generate_corpus(&config.synth, config.run.seed)?;
    let projects_path = out_dir.join("projects.csv");
    let credits_path = out_dir.join("credits.csv");
    write_projects_csv(&projects_path, &output.projects)?;
    write_credits_csv(&credits_path, &output.credits)?;
    export::write_json(&out_dir.join("ground_truth.json"), &output.ground_truth)?;
    Manifest::new("synth", config)
        .detail("n_projects", &output.projects.len())
        .detail("n_credit_rows", &output.credits.len())
        .detail("ground_truth", &output.ground_truth)
        .write(out_dir)?;
    Ok(SynthStage {
        projects_path,
        credits_path,
        ground_truth: output.ground_truth,
    })
}

pub fn write_projects_csv(path: &Path, projects: &[RawProject]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let werr = |e: csv::Error| Error::Input(format!("{}: {e}", path.display()));
    w.write_record([
        "project_id",
        "title",
        "release_year",
        "firm_id",
        "publisher_id",
        "countries_released",
        "platforms",
        "style_elements",
        "exclude_flag",
    ])
    .map_err(werr)?;
    for p in projects {
        w.write_record([
            p.project_id.as_str(),
            p.title.as_str(),
            &p.release_year.to_string(),
            p.firm_id.as_str(),
            p.publisher_id.as_str(),
            &p.countries_released.to_string(),
            &p.platforms.join("|"),
            &p.style_elements.join("|"),
            if p.exclude_flag { "1" } else { "0" },
        ])
        .map_err(werr)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_credits_csv(path: &Path, credits: &[RawCredit]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let werr = |e: csv::Error| Error::Input(format!("{}: {e}", path.display()));
    w.write_record([
        "project_id",
        "person_id",
        "full_name",
        "role",
        "gender_label",
        "award_flag",
    ])
    .map_err(werr)?;
    for c in credits {
        w.write_record([
            c.project_id.as_str(),
            c.person_id.as_str(),
            c.full_name.as_str(),
            c.role.as_str(),
            c.gender_label.map(|g| g.as_str()).unwrap_or(""),
            if c.award_flag { "1" } else { "0" },
        ])
        .map_err(werr)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Serialize)]
struct ReportEntry {
    name: String,
    bytes: u64,
    sha256: String,
}

/// `report`: bundle previously produced artifacts into `report/` with an
/// index; never recomputes anything.
pub fn run_report(config: &Config, out_dir: &Path) -> Result<usize> {
    let report_dir = out_dir.join("report");
    std::fs::create_dir_all(&report_dir).map_err(io_err(&report_dir))?;
    let mut names: Vec<String> = Vec::new();
    let entries = std::fs::read_dir(out_dir).map_err(io_err(out_dir))?;
    for entry in entries {
        let entry = entry.map_err(io_err(out_dir))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") | Some("json") => {
                names.push(entry.file_name().to_string_lossy().to_string())
            }
            _ => {}
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(Error::Input(format!(
            "report: no artifacts found in {}",
            out_dir.display()
        )));
    }
    let mut index = Vec::new();
    for name in &names {
        let src = out_dir.join(name);
        let dst = report_dir.join(name);
        let bytes = std::fs::read(&src).map_err(io_err(&src))?;
        std::fs::write(&dst, &bytes).map_err(io_err(&dst))?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        index.push(ReportEntry {
            name: name.clone(),
            bytes: bytes.len() as u64,
            sha256: format!("{:x}", hasher.finalize()),
        });
    }
    export::write_json(&report_dir.join("index.json"), &index)?;
    Manifest::new("report", config)
        .detail("bundled", &names)
        .write(&report_dir)?;
    Ok(index.len())
}
