use teamnet::config::Config;
use teamnet::corpus::{apply_filters, FilterCriteria};
use teamnet::metrics::compute_metric_table;
use teamnet::synth::{generate_corpus, GrangerDirection, SynthConfig};
use teamnet::timeseries::{build_firm_series, sequence_outcome_models, sequence_points};

fn main() {
    let n_seeds = 8;
    let mut te_order_ok = 0;
    let mut incl_pos_sig = 0;
    let mut incl_id_null = 0;
    for seed in 0..n_seeds {
        let cfg = SynthConfig {
            granger: GrangerDirection::DToI,
            ..SynthConfig::default()
        };
        let out = generate_corpus(&cfg, seed).unwrap();
        let (filtered, _) = apply_filters(out.corpus, &FilterCriteria::default());
        let config = Config::default();
        let (rows, _) = compute_metric_table(&filtered, &config.metrics);
        let (series, skipped) = build_firm_series(&rows, config.metrics.blau, config.timeseries.min_games);
        let mut ts_cfg = config.timeseries.clone();
        ts_cfg.n_permutations = 100; // faster for the probe
        let points = sequence_points(&series, &ts_cfg, seed).unwrap();
        let n = points.len();
        let mean_di: f64 = points.iter().map(|p| p.te.te_d_to_i).sum::<f64>() / n as f64;
        let mean_id: f64 = points.iter().map(|p| p.te.te_i_to_d).sum::<f64>() / n as f64;
        if mean_di > mean_id { te_order_ok += 1; }
        let fits = sequence_outcome_models(&points, &config.stats).unwrap();
        let f_incl = fits.iter().find(|f| f.label == "final_inclusion").unwrap();
        let di = f_incl.term("te_d_to_i").unwrap();
        let id = f_incl.term("te_i_to_d").unwrap();
        let pos_sig = di.ci_low > 0.0;
        let id_null = id.ci_low <= 0.0 && 0.0 <= id.ci_high;
        if pos_sig { incl_pos_sig += 1; }
        if id_null { incl_id_null += 1; }
        println!(
            "seed {seed}: firms={n} skipped={skipped} meanTE d→i={mean_di:.4} i→d={mean_id:.4} | final_incl: d→i est={:.3} ci=[{:.3},{:.3}] sig+={pos_sig} | i→d est={:.3} null={id_null}",
            di.estimate, di.ci_low, di.ci_high, id.estimate
        );
    }
    println!("TE ordering ok {te_order_ok}/{n_seeds}; final_incl d→i positive-significant {incl_pos_sig}/{n_seeds}; i→d null {incl_id_null}/{n_seeds}");
}
