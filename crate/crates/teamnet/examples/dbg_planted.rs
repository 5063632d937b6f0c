use teamnet::config::Config;
use teamnet::corpus::{apply_filters, FilterCriteria};
use teamnet::metrics::{compute_metric_table, InclusionMetric};
use teamnet::stats::{build_interaction_model, ols_fit, SpecTag};
use teamnet::synth::{generate_corpus, SynthConfig};

fn main() {
    let planted = 0.05;
    let mut covered = 0;
    let n_seeds = 10;
    for seed in 0..n_seeds {
        let cfg = SynthConfig {
            planted_interaction: planted,
            planted_metric: InclusionMetric::Bonding,
            ..SynthConfig::default()
        };
        let out = generate_corpus(&cfg, seed).unwrap();
        let gt = &out.ground_truth;
        let criteria = FilterCriteria::default();
        let (filtered, _) = apply_filters(out.corpus, &criteria);
        let config = Config::default();
        let (rows, _) = compute_metric_table(&filtered, &config.metrics);
        let design = build_interaction_model(&rows, Some(InclusionMetric::Bonding), config.metrics.blau, SpecTag::Baseline).unwrap();
        let fit = ols_fit(&design, &config.stats).unwrap();
        let t = fit.term("diversity_x_bonding").unwrap();
        let truth = gt.sd_effect_interaction;
        let cov = t.ci_low <= truth && truth <= t.ci_high;
        if cov { covered += 1; }
        println!(
            "seed {seed}: n={} est={:.4} ci=[{:.4},{:.4}] truth={:.4} covered={} target_rows={}",
            fit.n, t.estimate, t.ci_low, t.ci_high, truth, cov, gt.n_target_rows
        );
    }
    println!("covered {covered}/{n_seeds}");
}
