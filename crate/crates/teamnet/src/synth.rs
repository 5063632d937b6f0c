//! Synthetic corpus generation with known ground truth.
//!
//! Firms keep a persistent roster pool: each game re-hires a fraction of
//! earlier members, so prior co-participation (and hence edge weight) arises
//! naturally, including "warmup" games released before the analysis window
//! that seed collaboration history. Two per-game knobs steer the corpus:
//!
//! - a diversity driver sets each game's women count;
//! - an inclusion knob biases which members return: high values prefer
//!   cross-gender pairs with shared history (raising bonding/mixing),
//!   low values prefer same-gender clusters.
//!
//! Under a Granger coupling the lagged value of one knob drives the other,
//! firm by firm with heterogeneous coupling strength, which the transfer
//! entropy analysis should recover.
//!
//! The distinctiveness outcome is planted through style choice: every game
//! draws `style_per_game` elements, some from a shared pool and the rest
//! freshly minted, and the shared fraction is an affine function of a target
//! that follows the planted linear model of the standardized diversity and
//! inclusion columns. Mean cosine distance to the window is then affine in
//! the target, so the pipeline's standardized regression should recover the
//! planted coefficients divided by the target's standard deviation
//! (standardization is invariant to positive affine maps).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::Normal;
use std::collections::HashMap;

use crate::corpus::parse::{RawCredit, RawProject};
use crate::corpus::{apply_filters, build_corpus, Corpus, CorpusConfig, FilterCriteria, Gender};
use crate::error::{Error, Result};
use crate::graph::project_team_graph;
use crate::metrics::{
    constants_from, finalize_gender_metrics, gender_metrics, InclusionMetric, MixingNorm,
};
use crate::rng::substream;
use crate::stats::{sample_std, standardize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrangerDirection {
    None,
    DToI,
    IToD,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_firms: usize,
    pub games_per_firm_min: usize,
    pub games_per_firm_max: usize,
    pub team_size_min: usize,
    pub team_size_max: usize,
    /// Target share of women among all credited persons.
    pub female_share: f64,
    pub unknown_share: f64,
    /// Size of the shared style pool; fresh unique elements are minted on top.
    pub style_pool: usize,
    pub style_per_game: usize,
    pub n_platforms: usize,
    pub n_publishers: usize,
    /// Fraction of each team re-hired from the firm pool.
    pub returning_fraction: f64,
    pub year_min: i32,
    pub year_max: i32,
    /// History-only games per firm released before `year_min`.
    pub warmup_games: usize,
    /// Probability that the next game shares the previous game's year.
    pub tie_probability: f64,
    pub planted_diversity: f64,
    pub planted_inclusion: f64,
    pub planted_interaction: f64,
    pub planted_metric: InclusionMetric,
    pub noise_sd: f64,
    pub granger: GrangerDirection,
    pub granger_coupling_min: f64,
    pub granger_coupling_max: f64,
    /// Append deliberately invalid games to exercise the filters.
    pub inject_violations: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_firms: 350,
            games_per_firm_min: 6,
            games_per_firm_max: 16,
            team_size_min: 5,
            team_size_max: 14,
            female_share: 0.15,
            unknown_share: 0.18,
            style_pool: 48,
            style_per_game: 24,
            n_platforms: 8,
            n_publishers: 40,
            returning_fraction: 0.65,
            year_min: 1993,
            year_max: 2009,
            warmup_games: 2,
            tie_probability: 0.35,
            planted_diversity: 0.0,
            planted_inclusion: 0.0,
            planted_interaction: 0.0,
            planted_metric: InclusionMetric::Bonding,
            noise_sd: 1.0,
            granger: GrangerDirection::None,
            granger_coupling_min: 0.4,
            granger_coupling_max: 1.0,
            inject_violations: false,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.team_size_min < 4 || self.team_size_max < self.team_size_min {
            return Err(Error::Config(format!(
                "synth team size range [{}, {}] invalid (minimum 4: founding trio plus one)",
                self.team_size_min, self.team_size_max
            )));
        }
        if self.games_per_firm_min < 1 || self.games_per_firm_max < self.games_per_firm_min {
            return Err(Error::Config("synth games-per-firm range invalid".into()));
        }
        if !(0.0..=0.5).contains(&self.female_share)
            || !(0.0..0.5).contains(&self.unknown_share)
            || self.female_share + self.unknown_share > 1.0
        {
            return Err(Error::Config(
                "synth gender shares must satisfy female <= 0.5, unknown < 0.5".into(),
            ));
        }
        if self.style_per_game < 2 || self.style_per_game > self.style_pool {
            return Err(Error::Config(format!(
                "synth style_per_game {} must be in [2, style_pool={}]",
                self.style_per_game, self.style_pool
            )));
        }
        if self.year_min >= self.year_max {
            return Err(Error::Config("synth year range invalid".into()));
        }
        if self.warmup_games < 1 {
            return Err(Error::Config(
                "synth needs at least one warmup game per firm to seed history".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.returning_fraction) {
            return Err(Error::Config("synth returning_fraction must be in [0,1]".into()));
        }
        Ok(())
    }
}

/// Realized planted effects, in the standardized units the pipeline reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub planted_metric: InclusionMetric,
    pub planted_diversity: f64,
    pub planted_inclusion: f64,
    pub planted_interaction: f64,
    /// Sample std of the generated outcome target over the regression rows.
    pub target_sd: f64,
    pub sd_effect_diversity: f64,
    pub sd_effect_inclusion: f64,
    pub sd_effect_interaction: f64,
    /// Rows that carried a planted (non-noise) target.
    pub n_target_rows: usize,
}

pub struct SynthOutput {
    pub projects: Vec<RawProject>,
    pub credits: Vec<RawCredit>,
    pub corpus: Corpus,
    pub ground_truth: GroundTruth,
}

struct FirmPerson {
    global: usize,
    gender: Gender,
    /// Co-appearance weight with opposite-gender firm members.
    cross_weight: u32,
    /// Co-appearance weight with same-gender firm members.
    within_weight: u32,
}

struct FirmState {
    pool: Vec<FirmPerson>,
    /// Pairwise co-appearance counts within the firm pool.
    pair_count: HashMap<(usize, usize), u32>,
}

impl FirmState {
    fn pair(&self, a: usize, b: usize) -> u32 {
        let key = if a < b { (a, b) } else { (b, a) };
        self.pair_count.get(&key).copied().unwrap_or(0)
    }
}

struct GameDraft {
    firm: usize,
    year: i32,
    /// Indices into the global person table.
    members: Vec<usize>,
    single_firm: bool,
    publisher: usize,
    platforms: Vec<usize>,
    countries: u32,
    awards: Vec<bool>,
}

/// Pick `take` returning members of one gender class. The inclusion knob
/// `mu` splits the picks between two history-rich rankings: cross-gender
/// collaborators (raising bonding and mixing) and same-gender collaborators
/// (segregated cliques).
fn pick_returning(
    state: &FirmState,
    candidates: &[usize],
    take: usize,
    mu: f64,
    chosen_women: &[usize],
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    if take == 0 || candidates.is_empty() {
        return Vec::new();
    }
    let take = take.min(candidates.len());
    let mut cross_ranked: Vec<(i64, usize)> = candidates
        .iter()
        .map(|&p| {
            let base = state.pool[p].cross_weight as i64;
            let with_chosen: i64 = chosen_women.iter().map(|&w| state.pair(p, w) as i64).sum();
            (base + 4 * with_chosen, p)
        })
        .collect();
    cross_ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut within_ranked: Vec<(i64, usize)> = candidates
        .iter()
        .map(|&p| (state.pool[p].within_weight as i64, p))
        .collect();
    within_ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    let from_cross = ((mu * take as f64).round() as usize).min(take);
    let mut picked: Vec<usize> = cross_ranked[..from_cross].iter().map(|&(_, p)| p).collect();
    for &(_, p) in &within_ranked {
        if picked.len() == take {
            break;
        }
        if !picked.contains(&p) {
            picked.push(p);
        }
    }
    picked.shuffle(rng);
    picked
}

struct Generator<'a> {
    cfg: &'a SynthConfig,
    persons: Vec<(String, Gender)>,
    games: Vec<GameDraft>,
}

impl<'a> Generator<'a> {
    fn next_person(&mut self, firm: usize, gender: Gender) -> usize {
        let id = format!("f{firm:04}p{:05}", self.persons.len());
        self.persons.push((id.clone(), gender));
        self.persons.len() - 1
    }

    fn generate_firm(&mut self, firm: usize, seed: u64) {
        let cfg = self.cfg;
        let mut rng = substream(seed, "synth_firm", &firm.to_string());
        let n_games = rng.gen_range(cfg.games_per_firm_min..=cfg.games_per_firm_max);
        let total = n_games + cfg.warmup_games;
        let coupling = rng.gen_range(cfg.granger_coupling_min..=cfg.granger_coupling_max);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");

        // Known-slot women share targeted so the corpus-wide female share
        // matches the configured marginal.
        let known_share = 1.0 - cfg.unknown_share;
        let div_mean = (cfg.female_share / known_share).clamp(0.06, 0.45);
        let div_lo = (div_mean - 0.10).max(0.05);
        let div_hi = (div_mean + 0.10).min(0.48);

        // Per-game drivers.
        let mut delta = vec![0.0f64; total]; // diversity driver
        let mut mu = vec![0.0f64; total]; // inclusion knob
        match cfg.granger {
            GrangerDirection::None => {
                for t in 0..total {
                    delta[t] = rng.gen_range(div_lo..div_hi);
                    mu[t] = rng.gen_range(0.0..1.0);
                }
            }
            GrangerDirection::DToI => {
                let span = div_hi - div_lo;
                delta[0] = div_lo + rng.gen_range(0.0..0.3) * span;
                for t in 1..total {
                    let step = 1.2 * span / total as f64 + 0.15 * span * rng.sample(normal);
                    delta[t] = (delta[t - 1] + step).clamp(div_lo, div_hi);
                }
                for t in 0..total {
                    let noise = rng.gen_range(0.0..0.35);
                    mu[t] = if t == 0 {
                        noise
                    } else {
                        let driven = (delta[t - 1] - div_lo) / span;
                        (coupling * driven + (1.0 - coupling) * noise).clamp(0.0, 1.0)
                    };
                }
            }
            GrangerDirection::IToD => {
                mu[0] = rng.gen_range(0.0..0.3);
                for t in 1..total {
                    let step = 1.2 / total as f64 + 0.15 * rng.sample(normal);
                    mu[t] = (mu[t - 1] + step).clamp(0.0, 1.0);
                }
                let span = div_hi - div_lo;
                for t in 0..total {
                    let noise = rng.gen_range(0.0..0.35) * span;
                    delta[t] = if t == 0 {
                        div_lo + noise
                    } else {
                        (div_lo + coupling * mu[t - 1] * span + (1.0 - coupling) * noise)
                            .clamp(div_lo, div_hi)
                    };
                }
            }
        }

        // Release schedule: warmups immediately before the window, then a
        // year walk with deliberate same-year ties.
        let mut years = Vec::with_capacity(total);
        for w in 0..cfg.warmup_games {
            let back = cfg.warmup_games - w;
            years.push(cfg.year_min - back as i32);
        }
        let offset = rng.gen_range(0..4i32).min(cfg.year_max - cfg.year_min);
        let mut year = cfg.year_min + offset;
        for _ in 0..n_games {
            years.push(year.min(cfg.year_max));
            if !rng.gen_bool(cfg.tie_probability) {
                year += 1;
            }
        }

        let mut state = FirmState {
            pool: Vec::new(),
            pair_count: HashMap::new(),
        };
        let add_pool = |state: &mut FirmState, gen: &mut Self, gender: Gender| -> usize {
            let global = gen.next_person(firm, gender);
            state.pool.push(FirmPerson {
                global,
                gender,
                cross_weight: 0,
                within_weight: 0,
            });
            state.pool.len() - 1
        };
        // Founding trio appears in every game of the firm; together with the
        // warmup games it guarantees every in-window game at least three
        // strictly-earlier shared projects, hence more than one edge.
        let core_f = add_pool(&mut state, self, Gender::Female);
        let core_m1 = add_pool(&mut state, self, Gender::Male);
        let core_m2 = add_pool(&mut state, self, Gender::Male);

        for t in 0..total {
            let team_size = rng.gen_range(cfg.team_size_min..=cfg.team_size_max);
            let mut n_unknown = (0..team_size)
                .filter(|_| rng.gen_bool(cfg.unknown_share))
                .count();
            let max_unknown = team_size.div_ceil(2).saturating_sub(1);
            n_unknown = n_unknown.min(max_unknown);
            let known = team_size - n_unknown;
            let n_women = ((delta[t] * known as f64).round() as usize).clamp(1, known - 2);
            let n_men = known - n_women;

            let mut members: Vec<usize> = vec![core_f, core_m1, core_m2];
            let mut chosen_women_local: Vec<usize> = vec![core_f];
            for (gender, slots, core_slots) in [
                (Gender::Female, n_women - 1, 1usize),
                (Gender::Male, n_men - 2, 2),
                (Gender::Unknown, n_unknown, 0),
            ] {
                let candidates: Vec<usize> = (0..state.pool.len())
                    .filter(|&p| state.pool[p].gender == gender && !members.contains(&p))
                    .collect();
                // Target the returning share over the full class including
                // its core occupants, with probabilistic rounding, so the
                // fresh-hire gender mix tracks the slot mix.
                let exact = (cfg.returning_fraction * (slots + core_slots) as f64
                    - core_slots as f64)
                    .max(0.0);
                let want_return = exact.floor() as usize
                    + usize::from(rng.gen_bool((exact - exact.floor()).clamp(0.0, 1.0)));
                let returning = pick_returning(
                    &state,
                    &candidates,
                    want_return.min(slots),
                    mu[t],
                    if gender == Gender::Male {
                        &chosen_women_local
                    } else {
                        &[]
                    },
                    &mut rng,
                );
                if gender == Gender::Female {
                    chosen_women_local.extend(returning.iter().copied());
                }
                for &p in &returning {
                    members.push(p);
                }
                for _ in returning.len()..slots {
                    let p = add_pool(&mut state, self, gender);
                    members.push(p);
                }
            }

            // Update firm collaboration history.
            for i in 0..members.len() {
                for j in (i + 1)..members.len() {
                    let (a, b) = (members[i].min(members[j]), members[i].max(members[j]));
                    *state.pair_count.entry((a, b)).or_insert(0) += 1;
                    let (ga, gb) = (state.pool[a].gender, state.pool[b].gender);
                    if ga == Gender::Unknown || gb == Gender::Unknown {
                        continue;
                    }
                    if ga != gb {
                        state.pool[a].cross_weight += 1;
                        state.pool[b].cross_weight += 1;
                    } else {
                        state.pool[a].within_weight += 1;
                        state.pool[b].within_weight += 1;
                    }
                }
            }

            let single_firm = rng.gen_bool(0.3);
            let publisher = rng.gen_range(0..cfg.n_publishers);
            let n_plat = rng.gen_range(1..=3usize.min(cfg.n_platforms));
            let mut platform_ids: Vec<usize> = (0..cfg.n_platforms).collect();
            platform_ids.shuffle(&mut rng);
            platform_ids.truncate(n_plat);
            let awards = (0..members.len()).map(|_| rng.gen_bool(0.02)).collect();

            let global_members: Vec<usize> = members.iter().map(|&p| state.pool[p].global).collect();

            self.games.push(GameDraft {
                firm,
                year: years[t],
                members: global_members,
                single_firm,
                publisher,
                platforms: platform_ids,
                countries: rng.gen_range(1..=12),
                awards,
            });
        }
    }
}

/// Generate a corpus with the configured shape, couplings and planted
/// outcome model. Same seed, same bytes.
pub fn generate_corpus(cfg: &SynthConfig, seed: u64) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut generator = Generator {
        cfg,
        persons: Vec::new(),
        games: Vec::new(),
    };
    for firm in 0..cfg.n_firms {
        generator.generate_firm(firm, seed);
    }
    let Generator { games, persons, .. } = generator;

    // Deterministic game ids in (year, firm, draft order).
    let mut order: Vec<usize> = (0..games.len()).collect();
    order.sort_by_key(|&i| (games[i].year, games[i].firm, i));

    let mut raw_projects: Vec<RawProject> = Vec::with_capacity(games.len());
    let mut raw_credits: Vec<RawCredit> = Vec::new();
    for (serial, &gi) in order.iter().enumerate() {
        let g = &games[gi];
        let project_id = format!("g{serial:05}");
        let firm_id = format!("firm{:04}", g.firm);
        let publisher_id = if g.single_firm {
            firm_id.clone()
        } else {
            format!("pub{:03}", g.publisher)
        };
        raw_projects.push(RawProject {
            row: serial + 1,
            project_id: project_id.clone(),
            title: format!("Game {serial}"),
            release_year: g.year,
            firm_id,
            publisher_id,
            countries_released: g.countries,
            platforms: g.platforms.iter().map(|p| format!("plat{p:02}")).collect(),
            style_elements: Vec::new(), // assigned below
            exclude_flag: false,
        });
        for (m, &person) in g.members.iter().enumerate() {
            let (id, gender) = &persons[person];
            raw_credits.push(RawCredit {
                row: raw_credits.len() + 1,
                project_id: project_id.clone(),
                person_id: id.clone(),
                full_name: String::new(),
                role: "developer".into(),
                gender_label: Some(*gender),
                award_flag: g.awards[m],
            });
        }
    }

    if cfg.inject_violations {
        append_violations(cfg, &mut raw_projects, &mut raw_credits);
    }

    let ground_truth = assign_styles(cfg, seed, &mut raw_projects, &raw_credits)?;

    let corpus_cfg = CorpusConfig {
        min_year: cfg.year_min - 15,
        max_year: cfg.year_max + 1,
    };
    let (corpus, _) = build_corpus(
        raw_projects.clone(),
        raw_credits.clone(),
        None,
        &corpus_cfg,
    )?;

    Ok(SynthOutput {
        projects: raw_projects,
        credits: raw_credits,
        corpus,
        ground_truth,
    })
}

/// Append one game per filter criterion that must fail exactly there:
/// out-of-window year, no collaboration edges, unknown ratio at 0.75, and
/// an all-male roster. A pair of warmup games gives the violators history
/// so the later stages are actually reached.
fn append_violations(
    cfg: &SynthConfig,
    raw_projects: &mut Vec<RawProject>,
    raw_credits: &mut Vec<RawCredit>,
) {
    let mid_year = (cfg.year_min + cfg.year_max) / 2;
    let violators: Vec<(&str, Gender)> = vec![
        ("viol_m1", Gender::Male),
        ("viol_m2", Gender::Male),
        ("viol_m3", Gender::Male),
        ("viol_m4", Gender::Male),
        ("viol_u1", Gender::Unknown),
        ("viol_u2", Gender::Unknown),
        ("viol_u3", Gender::Unknown),
        ("viol_f1", Gender::Female),
    ];
    let mut push_game = |id: &str, year: i32, roster: &[(&str, Gender)]| {
        raw_projects.push(RawProject {
            row: raw_projects.len() + 1,
            project_id: id.to_string(),
            title: id.to_string(),
            release_year: year,
            firm_id: "firm_violations".into(),
            publisher_id: "pub_violations".into(),
            countries_released: 1,
            platforms: vec!["plat00".into()],
            style_elements: Vec::new(),
            exclude_flag: false,
        });
        for &(person, gender) in roster {
            raw_credits.push(RawCredit {
                row: raw_credits.len() + 1,
                project_id: id.to_string(),
                person_id: person.to_string(),
                full_name: String::new(),
                role: "developer".into(),
                gender_label: Some(gender),
                award_flag: false,
            });
        }
    };

    // History for the violator roster (outside the analysis window).
    push_game("viol_warm1", cfg.year_min - 2, &violators);
    push_game("viol_warm2", cfg.year_min - 1, &violators);
    // Fails the year window.
    push_game("viol_year", cfg.year_min - 10, &violators[..3]);
    // Fresh persons, zero edges.
    push_game(
        "viol_edges",
        mid_year,
        &[
            ("viol_fresh1", Gender::Female),
            ("viol_fresh2", Gender::Male),
            ("viol_fresh3", Gender::Male),
        ],
    );
    // 3 of 4 unknown.
    push_game(
        "viol_unknown",
        mid_year,
        &[
            ("viol_m1", Gender::Male),
            ("viol_u1", Gender::Unknown),
            ("viol_u2", Gender::Unknown),
            ("viol_u3", Gender::Unknown),
        ],
    );
    // No women.
    push_game(
        "viol_women",
        mid_year,
        &[
            ("viol_m1", Gender::Male),
            ("viol_m2", Gender::Male),
            ("viol_m3", Gender::Male),
            ("viol_m4", Gender::Male),
        ],
    );
}

/// Compute realized metric columns on the filtered corpus, form the planted
/// target, and translate targets into style-element choices.
fn assign_styles(
    cfg: &SynthConfig,
    seed: u64,
    raw_projects: &mut [RawProject],
    raw_credits: &[RawCredit],
) -> Result<GroundTruth> {
    // Provisional corpus without styles for the gender metrics.
    let corpus_cfg = CorpusConfig {
        min_year: cfg.year_min - 15,
        max_year: cfg.year_max + 1,
    };
    let (corpus, _) = build_corpus(
        raw_projects.to_vec(),
        raw_credits.to_vec(),
        None,
        &corpus_cfg,
    )?;
    let criteria = FilterCriteria {
        year_min: cfg.year_min,
        year_max: cfg.year_max,
        ..FilterCriteria::default()
    };
    let (filtered, _) = apply_filters(corpus, &criteria);

    // Diversity and the planted inclusion metric per analysis project.
    let raw_metrics: Vec<_> = filtered
        .analysis()
        .iter()
        .map(|&p| {
            let g = project_team_graph(&filtered, p);
            let genders = g.genders();
            gender_metrics(g.view(&genders), true)
        })
        .collect();
    let (mix_norm, inc_min) = constants_from(&raw_metrics, MixingNorm::Empirical);

    let mut ids: Vec<&str> = Vec::new();
    let mut div: Vec<f64> = Vec::new();
    let mut incl: Vec<f64> = Vec::new();
    for (&p, m) in filtered.analysis().iter().zip(&raw_metrics) {
        let (mixing_val, combined) = finalize_gender_metrics(m, mix_norm, inc_min);
        let inclusion = match cfg.planted_metric {
            InclusionMetric::Mixing => mixing_val,
            InclusionMetric::Bonding => m.bonding,
            InclusionMetric::Incorporating => m.incorporating,
            InclusionMetric::Combined => combined,
        };
        if let (Some(d), Some(i)) = (m.blau_raw, inclusion) {
            ids.push(filtered.project(p).project_id.as_str());
            div.push(d);
            incl.push(i);
        }
    }
    if ids.len() < 8 {
        return Err(Error::Numeric(format!(
            "synth: only {} analysis rows have defined metrics; corpus too small to plant effects",
            ids.len()
        )));
    }

    let div_std = standardize("diversity", &div)?;
    let incl_std = standardize("inclusion", &incl)?;
    let normal = Normal::new(0.0, cfg.noise_sd.max(1e-12)).expect("noise distribution");
    let mut rng = substream(seed, "synth_target", "outcome");

    let mut targets: HashMap<&str, f64> = HashMap::new();
    for i in 0..ids.len() {
        let planted = cfg.planted_diversity * div_std[i]
            + cfg.planted_inclusion * incl_std[i]
            + cfg.planted_interaction * div_std[i] * incl_std[i];
        targets.insert(ids[i], planted + rng.sample(normal));
    }
    let target_rows: Vec<f64> = ids.iter().map(|id| targets[id]).collect();
    let target_sd = sample_std(&target_rows);

    // Noise-only targets for history and filtered-out games keep the style
    // distribution homogeneous across comparison windows.
    let mut all_targets: Vec<f64> = Vec::with_capacity(raw_projects.len());
    for p in raw_projects.iter() {
        let t = targets
            .get(p.project_id.as_str())
            .copied()
            .unwrap_or_else(|| rng.sample(normal));
        all_targets.push(t);
    }
    let mean_all = all_targets.iter().sum::<f64>() / all_targets.len() as f64;
    let sd_all = sample_std(&all_targets).max(1e-12);

    // Style assignment: the shared-element count is affine in the target.
    let k = cfg.style_per_game;
    let pool = cfg.style_pool;
    let mut unique_serial = 0usize;
    let mut style_rng = substream(seed, "synth_style", "elements");
    for (p, &t) in raw_projects.iter_mut().zip(&all_targets) {
        let z = (0.5 + (t - mean_all) / (8.0 * sd_all)).clamp(0.0, 1.0);
        let shared = ((1.0 - z) * k as f64).round() as usize;
        let mut pool_ids: Vec<usize> = (0..pool).collect();
        pool_ids.shuffle(&mut style_rng);
        let mut elements: Vec<String> = pool_ids[..shared]
            .iter()
            .map(|s| format!("style{s:03}"))
            .collect();
        for _ in shared..k {
            elements.push(format!("uniq{unique_serial:07}"));
            unique_serial += 1;
        }
        p.style_elements = elements;
    }

    Ok(GroundTruth {
        planted_metric: cfg.planted_metric,
        planted_diversity: cfg.planted_diversity,
        planted_inclusion: cfg.planted_inclusion,
        planted_interaction: cfg.planted_interaction,
        target_sd,
        sd_effect_diversity: cfg.planted_diversity / target_sd,
        sd_effect_inclusion: cfg.planted_inclusion / target_sd,
        sd_effect_interaction: cfg.planted_interaction / target_sd,
        n_target_rows: ids.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SynthConfig {
        SynthConfig {
            n_firms: 25,
            games_per_firm_min: 4,
            games_per_firm_max: 8,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let cfg = small_cfg();
        let a = generate_corpus(&cfg, 7).unwrap();
        let b = generate_corpus(&cfg, 7).unwrap();
        assert_eq!(format!("{:?}", a.projects), format!("{:?}", b.projects));
        assert_eq!(format!("{:?}", a.credits), format!("{:?}", b.credits));
        let c = generate_corpus(&cfg, 8).unwrap();
        assert_ne!(format!("{:?}", a.projects), format!("{:?}", c.projects));
    }

    #[test]
    fn in_window_games_pass_every_filter() {
        let cfg = small_cfg();
        let out = generate_corpus(&cfg, 3).unwrap();
        let criteria = FilterCriteria {
            year_min: cfg.year_min,
            year_max: cfg.year_max,
            ..FilterCriteria::default()
        };
        let (_, report) = apply_filters(out.corpus, &criteria);
        assert!(report.after_year_window > 0);
        assert_eq!(report.after_year_window, report.final_count());
    }

    #[test]
    fn injected_violations_drop_at_their_stages() {
        let cfg = SynthConfig {
            inject_violations: true,
            ..small_cfg()
        };
        let out = generate_corpus(&cfg, 3).unwrap();
        let criteria = FilterCriteria {
            year_min: cfg.year_min,
            year_max: cfg.year_max,
            ..FilterCriteria::default()
        };
        let (filtered, report) = apply_filters(out.corpus, &criteria);
        // viol_edges, viol_unknown, viol_women each cost one stage drop.
        assert_eq!(report.after_year_window - report.after_edge_count, 1);
        assert_eq!(report.after_edge_count - report.after_unknown_ratio, 1);
        assert_eq!(report.after_unknown_ratio - report.after_min_women, 1);
        for &p in filtered.analysis() {
            assert!(!filtered.project(p).project_id.starts_with("viol_"));
        }
    }

    #[test]
    fn marginal_gender_shares_match_configuration() {
        let cfg = SynthConfig {
            n_firms: 80,
            ..SynthConfig::default()
        };
        let out = generate_corpus(&cfg, 11).unwrap();
        let persons = out.corpus.persons();
        let n = persons.len() as f64;
        let female = persons.iter().filter(|p| p.gender == Gender::Female).count() as f64 / n;
        let unknown = persons.iter().filter(|p| p.gender == Gender::Unknown).count() as f64 / n;
        assert!((female - cfg.female_share).abs() < 0.05, "female share {female}");
        assert!((unknown - cfg.unknown_share).abs() < 0.05, "unknown share {unknown}");
    }

    #[test]
    fn infeasible_parameters_are_rejected() {
        let cfg = SynthConfig {
            team_size_min: 2,
            ..SynthConfig::default()
        };
        assert!(generate_corpus(&cfg, 1).is_err());
        let cfg = SynthConfig {
            style_per_game: 100,
            style_pool: 50,
            ..SynthConfig::default()
        };
        assert!(generate_corpus(&cfg, 1).is_err());
    }
}
