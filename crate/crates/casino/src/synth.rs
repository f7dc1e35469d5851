//! Deterministic synthetic EBSN generator with planted ground truth.
//!
//! Users, groups, events, and RSVP cascades are drawn from independent
//! ChaCha streams derived from one master seed, so each entity class is
//! reproducible on its own. Popularity targets are planted as
//! `alpha + sum(w_j * z_j) + beta * I(e) + noise`, where the `z_j` are
//! standardized values of attendance-independent contextual features
//! (spatial and semantic slots) and `I(e)` is this library's own event
//! influence feature evaluated at the planted lambdas. Attendance is then
//! realized by appending crowd RSVPs after the seed horizon, which leaves
//! the seed DAGs and the planted influence values untouched.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DatasetSummary, Event, Group, Rsvp, SplitSpec, User};
use crate::influence::{
    build_event_influence_from_parts, estimate_propagation_stats,
};
use crate::predictor::{assemble_features, EventStub, FeatureArtifacts, N_FEATURES};
use crate::semantic::{PosTagger, SentimentLexicon};
use crate::spatial::{
    build_attractiveness_matrix, build_event_index, build_user_home_index, user_category_sets,
    SpatialConfig,
};
use crate::temporal::{user_time_profile, DecayConfig, TimeVector};
use crate::group::{active_members, group_features, EntropyMode};
use crate::{Error, Result};

const DAY: i64 = 86_400;

/// Feature slots the generator may plant weights on: values must not depend
/// on realized attendance (spatial and semantic blocks).
const PLANTABLE: [bool; N_FEATURES] = [
    true, true, // spatial quality, competitiveness
    false, false, false, // group entropy, loyalty, temporal satisfaction
    true, true, true, // sentiment shares
    true, true, true, true, true, true, true, true, true, true, true, // pos flags
    true, // novelty
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_groups: usize,
    pub n_categories: usize,
    pub events_per_group: usize,
    pub bbox: BoundingBox,
    /// Citywide venue hotspots shared across categories with
    /// category-specific mixture weights.
    pub n_hotspots: usize,
    pub venue_spread_deg: f64,
    pub home_spread_deg: f64,
    pub members_per_group: usize,
    pub influencers_per_group: usize,
    pub influencer_pool_per_category: usize,
    pub avg_attendance_target: f64,
    /// Standardized weight per contextual feature slot; attendance-derived
    /// slots must stay zero.
    pub feature_weights: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub lambda_same: f64,
    pub lambda_cross: f64,
    pub noise_sigma: f64,
    /// Extra influencer seeds per event are drawn from 0..=this.
    pub max_extra_seeds: usize,
    /// Seed RSVPs land within this window after the announcement.
    pub seed_window_secs: i64,
    pub seed_horizon_secs: i64,
    pub window_start: i64,
    pub cadence_secs: i64,
    pub announce_lead_secs: i64,
    pub split: SplitSpec,
    pub spatial: SpatialConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let mut feature_weights = vec![0.0; N_FEATURES];
        feature_weights[0] = 0.35; // spatial quality
        feature_weights[1] = 0.08; // competitiveness
        feature_weights[7] = 0.12; // sentiment positive share
        feature_weights[19] = 0.12; // title novelty
        SynthConfig {
            seed: 42,
            n_users: 3_000,
            n_groups: 50,
            n_categories: 5,
            events_per_group: 40,
            bbox: BoundingBox {
                lat_min: 40.60,
                lat_max: 40.80,
                lon_min: -74.05,
                lon_max: -73.85,
            },
            n_hotspots: 6,
            venue_spread_deg: 0.0008,
            home_spread_deg: 0.012,
            members_per_group: 140,
            influencers_per_group: 6,
            influencer_pool_per_category: 25,
            avg_attendance_target: 40.0,
            feature_weights,
            alpha: 1.0,
            beta: 0.28,
            lambda_same: 0.15,
            lambda_cross: 0.05,
            noise_sigma: 0.1,
            max_extra_seeds: 7,
            seed_window_secs: 43_200,
            seed_horizon_secs: crate::influence::DEFAULT_SEED_HORIZON_SECS,
            window_start: 1_372_636_800, // 2013-07-01
            cadence_secs: 7 * DAY,
            announce_lead_secs: 14 * DAY,
            split: SplitSpec::default(),
            spatial: SpatialConfig::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0
            || self.n_groups == 0
            || self.n_categories == 0
            || self.events_per_group == 0
        {
            return Err(Error::Config("synth counts must be >= 1".into()));
        }
        if self.feature_weights.len() != N_FEATURES {
            return Err(Error::Config(format!(
                "feature_weights must have {N_FEATURES} entries"
            )));
        }
        for (i, (&w, &ok)) in self.feature_weights.iter().zip(&PLANTABLE).enumerate() {
            if w != 0.0 && !ok {
                return Err(Error::Config(format!(
                    "cannot plant weight on attendance-derived feature slot {i}"
                )));
            }
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::Config("noise_sigma must be >= 0".into()));
        }
        if self.alpha * self.avg_attendance_target < 1.0 {
            return Err(Error::Config(
                "infeasible config: implied mean attendance below one attendee".into(),
            ));
        }
        if self.announce_lead_secs <= self.seed_horizon_secs + self.seed_window_secs + DAY {
            return Err(Error::Config(
                "announce lead must exceed seed horizon + seed window by a day".into(),
            ));
        }
        if self.influencers_per_group > self.influencer_pool_per_category {
            return Err(Error::Config(
                "influencers_per_group exceeds the per-category pool".into(),
            ));
        }
        if self.members_per_group <= self.influencers_per_group {
            return Err(Error::Config("members_per_group too small".into()));
        }
        let influencers = self.n_categories * self.influencer_pool_per_category;
        if self.n_users <= influencers {
            return Err(Error::Config("n_users too small for influencer pools".into()));
        }
        Ok(())
    }
}

/// Per-event planted decomposition. `noise_total` absorbs the Gaussian draw
/// plus attendance rounding, so `contextual_part + influence_part +
/// noise_total` reproduces `realized_p` by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub event_id: String,
    pub features: Vec<f64>,
    pub contextual_part: f64,
    pub influence_raw: f64,
    pub influence_part: f64,
    pub noise_draw: f64,
    pub p_target: f64,
    pub n_attendees: usize,
    pub realized_p: f64,
    pub noise_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub alpha: f64,
    pub beta: f64,
    pub lambda_same: f64,
    pub lambda_cross: f64,
    pub feature_weights: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    /// Standardization constants applied to the raw influence feature in
    /// the plant.
    pub influence_mean: f64,
    pub influence_std: f64,
    pub avg_attendance_target: f64,
    pub records: Vec<GroundTruthRecord>,
}

impl GroundTruth {
    /// Writes a meta line followed by one record per line.
    pub fn save(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Meta<'a> {
            alpha: f64,
            beta: f64,
            lambda_same: f64,
            lambda_cross: f64,
            feature_weights: &'a [f64],
            feature_means: &'a [f64],
            feature_stds: &'a [f64],
            influence_mean: f64,
            influence_std: f64,
            avg_attendance_target: f64,
        }
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer(
            &mut w,
            &Meta {
                alpha: self.alpha,
                beta: self.beta,
                lambda_same: self.lambda_same,
                lambda_cross: self.lambda_cross,
                feature_weights: &self.feature_weights,
                feature_means: &self.feature_means,
                feature_stds: &self.feature_stds,
                influence_mean: self.influence_mean,
                influence_std: self.influence_std,
                avg_attendance_target: self.avg_attendance_target,
            },
        )?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<GroundTruth> {
        #[derive(Deserialize)]
        struct Meta {
            alpha: f64,
            beta: f64,
            lambda_same: f64,
            lambda_cross: f64,
            feature_weights: Vec<f64>,
            feature_means: Vec<f64>,
            feature_stds: Vec<f64>,
            influence_mean: f64,
            influence_std: f64,
            avg_attendance_target: f64,
        }
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let meta_line = lines
            .next()
            .ok_or_else(|| Error::EmptyInput(format!("{} is empty", path.display())))??;
        let meta: Meta = serde_json::from_str(&meta_line)?;
        let mut records = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Ok(GroundTruth {
            alpha: meta.alpha,
            beta: meta.beta,
            lambda_same: meta.lambda_same,
            lambda_cross: meta.lambda_cross,
            feature_weights: meta.feature_weights,
            feature_means: meta.feature_means,
            feature_stds: meta.feature_stds,
            influence_mean: meta.influence_mean,
            influence_std: meta.influence_std,
            avg_attendance_target: meta.avg_attendance_target,
            records,
        })
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn clamp_box(bbox: &BoundingBox, lat: f64, lon: f64) -> (f64, f64) {
    (
        lat.clamp(bbox.lat_min, bbox.lat_max),
        lon.clamp(bbox.lon_min, bbox.lon_max),
    )
}

const TITLE_TOPICS: [&str; 10] = [
    "hike", "trivia", "jazz", "yoga", "startup", "book", "wine", "photo", "chess", "salsa",
];
const TITLE_EXTRAS: [&str; 12] = [
    "night", "meetup", "social", "workshop", "series", "club", "session", "jam", "circle",
    "lab", "hour", "festival",
];
const POSITIVE_WORDS: [&str; 8] = [
    "great", "awesome", "fun", "amazing", "friendly", "wonderful", "beautiful", "excellent",
];
const NEGATIVE_WORDS: [&str; 6] = ["hard", "crowded", "late", "difficult", "noisy", "expensive"];
const FILLER_WORDS: [&str; 10] = [
    "join", "us", "for", "an", "evening", "of", "the", "with", "group", "community",
];

fn make_title(
    rng: &mut ChaCha8Rng,
    category_idx: usize,
    hype: f64,
    prev_title: Option<&str>,
) -> String {
    if let Some(prev) = prev_title {
        if rng.gen_bool(0.35) {
            return prev.to_string();
        }
    }
    let topic = TITLE_TOPICS[category_idx % TITLE_TOPICS.len()];
    let extra = TITLE_EXTRAS[rng.gen_range(0..TITLE_EXTRAS.len())];
    let mut title = format!("{topic} {extra}");
    if rng.gen_bool(0.4) {
        title.push_str(&format!(" {}", rng.gen_range(1..40)));
    }
    if rng.gen_bool(0.3) {
        title.push('!');
    }
    if rng.gen_bool(0.2 + 0.5 * hype) {
        title = format!("the {} {}", POSITIVE_WORDS[rng.gen_range(0..POSITIVE_WORDS.len())], title);
    }
    title
}

/// Hyped events read more positive; hype also drives early RSVP seeding.
fn make_description(rng: &mut ChaCha8Rng, hype: f64) -> String {
    let mut words = Vec::new();
    let n_pos = (hype * 6.0).round() as usize + rng.gen_range(0..2);
    let n_neg = ((1.0 - hype) * 3.0).round() as usize + rng.gen_range(0..2);
    let n_fill = rng.gen_range(3..8);
    for _ in 0..n_fill {
        words.push(FILLER_WORDS[rng.gen_range(0..FILLER_WORDS.len())]);
    }
    for _ in 0..n_pos {
        words.push(POSITIVE_WORDS[rng.gen_range(0..POSITIVE_WORDS.len())]);
    }
    for _ in 0..n_neg {
        words.push(NEGATIVE_WORDS[rng.gen_range(0..NEGATIVE_WORDS.len())]);
    }
    words.shuffle(rng);
    words.join(" ")
}

struct Entities {
    users: Vec<User>,
    groups: Vec<Group>,
    events: Vec<Event>,
    /// Per event: (user index, rsvp time) seed RSVPs, organizer first.
    seed_rsvps: Vec<Vec<(usize, i64)>>,
    /// Sorted crowd user indices per group (members minus influencers).
    crowd_by_group: Vec<Vec<usize>>,
}

fn generate_entities(cfg: &SynthConfig) -> Entities {
    let mut user_rng = stream(cfg.seed, 0);
    let mut group_rng = stream(cfg.seed, 1);
    let mut event_rng = stream(cfg.seed, 2);
    let mut title_rng = stream(cfg.seed, 3);
    let mut cascade_rng = stream(cfg.seed, 4);

    // citywide hotspot pool; each category mixes over three of them so that
    // different categories co-locate with category-dependent intensity
    let mut layout_rng = stream(cfg.seed, 7);
    let hotspots: Vec<(f64, f64)> = (0..cfg.n_hotspots)
        .map(|_| {
            (
                layout_rng.gen_range(cfg.bbox.lat_min..cfg.bbox.lat_max),
                layout_rng.gen_range(cfg.bbox.lon_min..cfg.bbox.lon_max),
            )
        })
        .collect();
    let hotspot_for = |category: usize, rng: &mut ChaCha8Rng| -> (f64, f64) {
        let h = cfg.n_hotspots;
        let roll: f64 = rng.gen();
        let pick = if roll < 0.5 {
            category % h
        } else if roll < 0.8 {
            (category + 1) % h
        } else {
            (category + 2) % h
        };
        hotspots[pick]
    };

    let n_influencers = cfg.n_categories * cfg.influencer_pool_per_category;
    let home_noise = Normal::new(0.0, cfg.home_spread_deg).unwrap();
    let users: Vec<User> = (0..cfg.n_users)
        .map(|i| {
            // the first users form the per-category influencer pools
            let preferred = if i < n_influencers {
                i / cfg.influencer_pool_per_category
            } else {
                user_rng.gen_range(0..cfg.n_categories)
            };
            let (lat, lon) = if i >= n_influencers && user_rng.gen_bool(0.2) {
                (
                    user_rng.gen_range(cfg.bbox.lat_min..cfg.bbox.lat_max),
                    user_rng.gen_range(cfg.bbox.lon_min..cfg.bbox.lon_max),
                )
            } else {
                let (hl, ho) = hotspot_for(preferred, &mut user_rng);
                clamp_box(
                    &cfg.bbox,
                    hl + home_noise.sample(&mut user_rng),
                    ho + home_noise.sample(&mut user_rng),
                )
            };
            User {
                user_id: format!("u{i:05}"),
                home_lat: lat,
                home_lon: lon,
                joined_groups: BTreeSet::new(),
            }
        })
        .collect();
    let mut users = users;

    let mut groups = Vec::with_capacity(cfg.n_groups);
    let mut influencers_by_group: Vec<Vec<usize>> = Vec::with_capacity(cfg.n_groups);
    let mut crowd_by_group: Vec<Vec<usize>> = Vec::with_capacity(cfg.n_groups);
    for g in 0..cfg.n_groups {
        let category_idx = g % cfg.n_categories;
        let pool_start = category_idx * cfg.influencer_pool_per_category;
        let pool: Vec<usize> =
            (pool_start..pool_start + cfg.influencer_pool_per_category).collect();
        let mut picked: Vec<usize> = pool
            .choose_multiple(&mut group_rng, cfg.influencers_per_group)
            .copied()
            .collect();
        picked.sort_unstable();
        let organizer = picked[group_rng.gen_range(0..picked.len())];

        let crowd_pool: Vec<usize> = (n_influencers..cfg.n_users).collect();
        let mut crowd: Vec<usize> = crowd_pool
            .choose_multiple(
                &mut group_rng,
                cfg.members_per_group - cfg.influencers_per_group,
            )
            .copied()
            .collect();
        crowd.sort_unstable();

        let gid = format!("g{g:03}");
        let mut member_ids: BTreeSet<String> = BTreeSet::new();
        for &u in picked.iter().chain(&crowd) {
            member_ids.insert(users[u].user_id.clone());
            users[u].joined_groups.insert(gid.clone());
        }
        groups.push(Group {
            group_id: gid,
            category: format!("cat{category_idx:02}"),
            organizer_id: users[organizer].user_id.clone(),
            member_ids,
        });
        influencers_by_group.push(picked);
        crowd_by_group.push(crowd);
    }

    let venue_noise = Normal::new(0.0, cfg.venue_spread_deg).unwrap();
    let mut events = Vec::with_capacity(cfg.n_groups * cfg.events_per_group);
    let mut seed_rsvps = Vec::with_capacity(cfg.n_groups * cfg.events_per_group);
    for g in 0..cfg.n_groups {
        let category_idx = g % cfg.n_categories;
        let stagger = event_rng.gen_range(0..cfg.cadence_secs);
        let mut prev_title: Option<String> = None;
        for k in 0..cfg.events_per_group {
            let jitter = event_rng.gen_range(-(cfg.cadence_secs / 5)..cfg.cadence_secs / 5);
            let start = cfg.window_start
                + cfg.announce_lead_secs
                + stagger
                + k as i64 * cfg.cadence_secs
                + jitter;
            let announce = start - cfg.announce_lead_secs;
            let (hl, ho) = hotspot_for(category_idx, &mut event_rng);
            let (lat, lon) = clamp_box(
                &cfg.bbox,
                hl + venue_noise.sample(&mut event_rng),
                ho + venue_noise.sample(&mut event_rng),
            );
            let title = make_title(&mut title_rng, category_idx, prev_title.as_deref());
            prev_title = Some(title.clone());
            let description = make_description(&mut title_rng);
            let eid = format!("g{g:03}e{k:03}");
            events.push(Event {
                event_id: eid,
                group_id: groups[g].group_id.clone(),
                venue_lat: lat,
                venue_lon: lon,
                start_time: start,
                announce_time: announce,
                title,
                description,
            });

            // cascade seeds: organizer at the announcement, then extra
            // influencers at sorted times within the seed window, each
            // following an earlier seed
            let organizer = groups[g].organizer_id.clone();
            let organizer_idx = influencers_by_group[g]
                .iter()
                .copied()
                .find(|&u| users[u].user_id == organizer)
                .unwrap();
            let mut seeds: Vec<(usize, i64)> = vec![(organizer_idx, announce)];
            let n_extra = cascade_rng.gen_range(0..=cfg.max_extra_seeds);
            let candidates: Vec<usize> = influencers_by_group[g]
                .iter()
                .copied()
                .filter(|&u| u != organizer_idx)
                .collect();
            let chosen: Vec<usize> = candidates
                .choose_multiple(&mut cascade_rng, n_extra.min(candidates.len()))
                .copied()
                .collect();
            let mut times: Vec<i64> = chosen
                .iter()
                .map(|_| announce + cascade_rng.gen_range(60..cfg.seed_window_secs - 1))
                .collect();
            times.sort_unstable();
            let mut last = announce;
            for (u, t) in chosen.into_iter().zip(times) {
                let t = t.max(last + 1).min(announce + cfg.seed_window_secs - 1);
                if t <= last {
                    continue;
                }
                seeds.push((u, t));
                last = t;
            }
            seed_rsvps.push(seeds);
        }
    }

    Entities {
        users,
        groups,
        events,
        seed_rsvps,
        crowd_by_group,
    }
}

fn rsvps_from_seeds(entities: &Entities) -> Vec<Rsvp> {
    let mut rsvps = Vec::new();
    for (e, seeds) in entities.events.iter().zip(&entities.seed_rsvps) {
        for &(u, t) in seeds {
            rsvps.push(Rsvp {
                event_id: e.event_id.clone(),
                user_id: entities.users[u].user_id.clone(),
                rsvp_time: t,
            });
        }
    }
    rsvps
}

struct FeaturePass {
    /// Raw 20-vectors for every event, in event order.
    features: Vec<Vec<f64>>,
    means: Vec<f64>,
    stds: Vec<f64>,
}

fn compute_features(ds: &Dataset, train: &Dataset, cfg: &SynthConfig) -> Result<FeaturePass> {
    let lexicon = SentimentLexicon::default();
    let tagger = PosTagger::default();
    let matrix = build_attractiveness_matrix(train, cfg.spatial.r_meters);
    let event_index = build_event_index(train, cfg.spatial.r_meters);
    let user_index = build_user_home_index(train, cfg.spatial.big_r_meters);
    let user_categories = user_category_sets(train);
    let decay = DecayConfig {
        eta: 0.01,
        reference_time: train.time_window().1,
    };
    let mut group_feature_map = std::collections::HashMap::new();
    let mut active_member_map = std::collections::HashMap::new();
    let mut titles_by_group = std::collections::HashMap::new();
    for g in 0..train.groups().len() {
        if let Ok(f) = group_features(g, train, EntropyMode::PerUserShare) {
            group_feature_map.insert(g, f);
        }
        let members = active_members(g, train);
        if !members.is_empty() {
            active_member_map.insert(g, members);
        }
        let titles: Vec<(i64, String)> = train
            .group_events(g)
            .iter()
            .map(|&ev| {
                let e = &train.events()[ev];
                (e.start_time, e.title.clone())
            })
            .collect();
        if !titles.is_empty() {
            titles_by_group.insert(g, titles);
        }
    }
    let mut profiles: std::collections::HashMap<usize, TimeVector> =
        std::collections::HashMap::new();
    for up in 0..train.users().len() {
        if !train.user_events(up).is_empty() {
            let (p, cold) = user_time_profile(up, train, &decay, 0);
            if !cold {
                profiles.insert(up, p);
            }
        }
    }
    let art = FeatureArtifacts {
        train,
        matrix: &matrix,
        event_index: &event_index,
        user_index: &user_index,
        user_categories: &user_categories,
        spatial: cfg.spatial,
        group_features: &group_feature_map,
        profiles: &profiles,
        active_members: &active_member_map,
        titles_by_group: &titles_by_group,
        lexicon: &lexicon,
        tagger: &tagger,
        city_offset_secs: 0,
    };
    let mut features = Vec::with_capacity(ds.events().len());
    for ev in 0..ds.events().len() {
        let (fv, _) = assemble_features(&EventStub::from(&ds.events()[ev]), &art)?;
        features.push(fv.0.to_vec());
    }
    let n = features.len() as f64;
    let mut means = vec![0.0; N_FEATURES];
    let mut stds = vec![0.0; N_FEATURES];
    for j in 0..N_FEATURES {
        let sum: f64 = features.iter().map(|f| f[j]).sum();
        means[j] = sum / n;
        let var: f64 = features.iter().map(|f| (f[j] - means[j]).powi(2)).sum::<f64>() / n;
        stds[j] = var.sqrt();
    }
    Ok(FeaturePass { features, means, stds })
}

fn standardized_dot(weights: &[f64], feats: &[f64], means: &[f64], stds: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..N_FEATURES {
        if weights[j] != 0.0 && stds[j] > 0.0 {
            acc += weights[j] * (feats[j] - means[j]) / stds[j];
        }
    }
    acc
}

/// Generates a dataset plus its planted ground truth.
pub fn generate(cfg: &SynthConfig) -> Result<(Dataset, GroundTruth)> {
    cfg.validate()?;
    let entities = generate_entities(cfg);
    let preliminary = Dataset::build(
        entities.users.clone(),
        entities.groups.clone(),
        entities.events.clone(),
        rsvps_from_seeds(&entities),
    )?;
    let (prelim_train, _, _) = preliminary.split_per_group(&cfg.split)?;
    if prelim_train.events().is_empty() {
        return Err(Error::Config("split leaves no training events".into()));
    }

    // planted contextual features on the would-be training split
    let pass = compute_features(&preliminary, &prelim_train, cfg)?;

    // planted influence from this library's own feature, at the plant lambdas
    let stats = estimate_propagation_stats(&prelim_train);
    let influences: Vec<f64> = (0..preliminary.events().len())
        .map(|ev| {
            let e = &preliminary.events()[ev];
            let group_pos = preliminary.group_index(&e.group_id).unwrap();
            let nodes: Vec<(usize, i64)> = preliminary
                .event_rsvps(ev)
                .iter()
                .map(|&ri| {
                    let r = &preliminary.rsvps()[ri];
                    (preliminary.user_index(&r.user_id).unwrap(), r.rsvp_time)
                })
                .collect();
            build_event_influence_from_parts(
                group_pos,
                e.announce_time,
                &nodes,
                &prelim_train,
                &stats,
                cfg.seed_horizon_secs,
                true,
            )
            .influence(cfg.lambda_same, cfg.lambda_cross)
        })
        .collect();

    // standardize the influence feature so beta directly controls its
    // standard-deviation contribution to the target
    let n_events = preliminary.events().len();
    let influence_mean = influences.iter().sum::<f64>() / n_events as f64;
    let influence_var = influences
        .iter()
        .map(|&v| (v - influence_mean).powi(2))
        .sum::<f64>()
        / n_events as f64;
    let influence_std = influence_var.sqrt();

    // targets and attendance realization
    let mut noise_rng = stream(cfg.seed, 5);
    let mut tail_rng = stream(cfg.seed, 6);
    let normal = Normal::new(0.0, cfg.noise_sigma.max(1e-300)).unwrap();
    let mut noise_draws = Vec::with_capacity(n_events);
    let mut p_targets = Vec::with_capacity(n_events);
    let mut contextual_parts = Vec::with_capacity(n_events);
    let mut influence_parts = Vec::with_capacity(n_events);
    for ev in 0..n_events {
        let ctx_part = standardized_dot(
            &cfg.feature_weights,
            &pass.features[ev],
            &pass.means,
            &pass.stds,
        );
        let inf_part = if influence_std > 0.0 {
            cfg.beta * (influences[ev] - influence_mean) / influence_std
        } else {
            0.0
        };
        let draw = if cfg.noise_sigma > 0.0 {
            normal.sample(&mut noise_rng)
        } else {
            0.0
        };
        contextual_parts.push(ctx_part);
        influence_parts.push(inf_part);
        noise_draws.push(draw);
        p_targets.push(cfg.alpha + ctx_part + inf_part + draw);
    }

    let mut final_rsvps = rsvps_from_seeds(&entities);
    let mut attendee_counts = Vec::with_capacity(n_events);
    for ev in 0..n_events {
        let e = &entities.events[ev];
        let group_pos = preliminary.group_index(&e.group_id).unwrap();
        let seeds = &entities.seed_rsvps[ev];
        let crowd = &entities.crowd_by_group[group_pos];
        let target = (p_targets[ev] * cfg.avg_attendance_target).round() as i64;
        let n_e = (target.max(1) as usize)
            .max(seeds.len())
            .min(seeds.len() + crowd.len());
        let tail_count = n_e - seeds.len();
        let lo = e.announce_time + cfg.seed_horizon_secs + 1;
        let hi = e.start_time;
        let tail_users: Vec<usize> = crowd
            .choose_multiple(&mut tail_rng, tail_count)
            .copied()
            .collect();
        for u in tail_users {
            final_rsvps.push(Rsvp {
                event_id: e.event_id.clone(),
                user_id: entities.users[u].user_id.clone(),
                rsvp_time: tail_rng.gen_range(lo..=hi),
            });
        }
        attendee_counts.push(n_e);
    }

    let dataset = Dataset::build(
        entities.users,
        entities.groups,
        entities.events,
        final_rsvps,
    )?;

    // post-hoc feature record and realized popularity on the final data
    let (final_train, _, _) = dataset.split_per_group(&cfg.split)?;
    let final_pass = compute_features(&dataset, &final_train, cfg)?;
    let category_stats = final_train.category_averages()?;

    let mut records = Vec::with_capacity(n_events);
    for ev in 0..n_events {
        let realized_p = dataset.relative_popularity(ev, &category_stats)?;
        let contextual_part = contextual_parts[ev];
        let influence_part = influence_parts[ev];
        let noise_total = realized_p - contextual_part - influence_part - cfg.alpha;
        records.push(GroundTruthRecord {
            event_id: dataset.events()[ev].event_id.clone(),
            features: final_pass.features[ev].clone(),
            contextual_part,
            influence_raw: influences[ev],
            influence_part,
            noise_draw: noise_draws[ev],
            p_target: p_targets[ev],
            n_attendees: attendee_counts[ev],
            realized_p,
            noise_total,
        });
    }
    let truth = GroundTruth {
        alpha: cfg.alpha,
        beta: cfg.beta,
        lambda_same: cfg.lambda_same,
        lambda_cross: cfg.lambda_cross,
        feature_weights: cfg.feature_weights.clone(),
        feature_means: pass.means,
        feature_stds: pass.stds,
        influence_mean,
        influence_std,
        avg_attendance_target: cfg.avg_attendance_target,
        records,
    };
    Ok((dataset, truth))
}

/// Counts table matching the usual dataset-summary column layout.
pub fn describe(d: &Dataset) -> DatasetSummary {
    d.summary()
}

pub fn format_summary(s: &DatasetSummary) -> String {
    format!(
        "#groups  #users  #events  #rsvps\n{:<8} {:<7} {:<8} {:<7}",
        s.n_groups, s.n_users, s.n_events, s.n_rsvps
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> SynthConfig {
        SynthConfig {
            n_users: 400,
            n_groups: 6,
            n_categories: 3,
            events_per_group: 20,
            members_per_group: 60,
            influencer_pool_per_category: 10,
            influencers_per_group: 4,
            avg_attendance_target: 20.0,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_generation() {
        let cfg = tiny_config();
        let (d1, t1) = generate(&cfg).unwrap();
        let (d2, t2) = generate(&cfg).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(t1, t2);
        // byte-identical file output
        let dir = tempfile::tempdir().unwrap();
        let mut paths = Vec::new();
        for (i, name) in ["users", "groups", "events", "rsvps"].iter().enumerate() {
            paths.push(dir.path().join(format!("{name}{i}.jsonl")));
        }
        d1.save(&paths[0], &paths[1], &paths[2], &paths[3]).unwrap();
        let first: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
        d2.save(&paths[0], &paths[1], &paths[2], &paths[3]).unwrap();
        let second: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn generated_dataset_validates_and_matches_counts() {
        let cfg = tiny_config();
        let (d, truth) = generate(&cfg).unwrap();
        let s = describe(&d);
        assert_eq!(s.n_groups, cfg.n_groups);
        assert_eq!(s.n_users, cfg.n_users);
        assert_eq!(s.n_events, cfg.n_groups * cfg.events_per_group);
        assert_eq!(truth.records.len(), s.n_events);
        // attendee counts in the ground truth match the data
        for (ev, rec) in truth.records.iter().enumerate() {
            assert_eq!(d.n_attendees(ev), rec.n_attendees);
        }
        let table = format_summary(&s);
        assert!(table.starts_with("#groups  #users  #events  #rsvps"));
    }

    #[test]
    fn decomposition_reconstructs_realized_popularity() {
        let cfg = tiny_config();
        let (_, truth) = generate(&cfg).unwrap();
        for rec in &truth.records {
            let sum = truth.alpha + rec.contextual_part + rec.influence_part + rec.noise_total;
            assert!(
                (sum - rec.realized_p).abs() < 1e-12,
                "decomposition drifted: {sum} vs {}",
                rec.realized_p
            );
        }
    }

    #[test]
    fn cascade_respects_time_ordering() {
        let cfg = tiny_config();
        let entities = generate_entities(&cfg);
        for (e, seeds) in entities.events.iter().zip(&entities.seed_rsvps) {
            let mut last = i64::MIN;
            for &(_, t) in seeds {
                assert!(t > last || (last == i64::MIN && t == e.announce_time));
                assert!(t >= e.announce_time);
                assert!(t < e.announce_time + cfg.seed_window_secs);
                last = t;
            }
        }
    }

    #[test]
    fn infeasible_config_errors() {
        let cfg = SynthConfig {
            alpha: 0.01,
            ..tiny_config()
        };
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn ground_truth_roundtrip() {
        let cfg = tiny_config();
        let (_, truth) = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ground_truth.jsonl");
        truth.save(&p).unwrap();
        let loaded = GroundTruth::load(&p).unwrap();
        assert_eq!(truth, loaded);
    }
}
