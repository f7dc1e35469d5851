//! Feature assembly, residual influence fitting, baselines, and the
//! coefficient of determination.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::bfgs::{bfgs_minimize, BfgsOptions};
use crate::data::{CategoryStats, Dataset, Event, SplitSpec};
use crate::group::EntropyMode;
use crate::influence::{EventInfluence, InfluenceParams, PropagationStatsArtifact};
use crate::semantic::{pos_presence, sentiment_scores, title_novelty, PosTagger, SentimentLexicon};
use crate::spatial::{
    location_competitiveness, location_quality, AttractivenessMatrix, SpatialConfig, SpatialIndex,
};
use crate::temporal::{event_time_vector, temporal_satisfaction, TimeVector};
use crate::tree::{predict_cart, CartParams, RegressionTree};
use crate::{Error, Result};

pub const FEATURE_SCHEMA_VERSION: u32 = 1;
pub const N_FEATURES: usize = 20;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "spatial_quality",
    "spatial_competitiveness",
    "group_entropy",
    "group_loyalty",
    "temporal_satisfaction",
    "sentiment_neg",
    "sentiment_neu",
    "sentiment_pos",
    "pos_adjective",
    "pos_adposition",
    "pos_adverb",
    "pos_conjunction",
    "pos_determiner",
    "pos_noun",
    "pos_numeral",
    "pos_particle",
    "pos_pronoun",
    "pos_verb",
    "pos_punctuation",
    "title_novelty",
];

/// The fixed 20-slot contextual feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureFlags {
    pub cold_start_group: bool,
    pub degenerate_spatial: bool,
    pub no_nearby_users: bool,
}

/// The fields of an event needed to score it; real events convert directly,
/// what-if stubs fill it by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStub {
    #[serde(default)]
    pub event_id: String,
    pub group_id: String,
    pub lat: f64,
    pub lon: f64,
    pub start_time: i64,
    #[serde(default)]
    pub announce_time: Option<i64>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
}

impl From<&Event> for EventStub {
    fn from(e: &Event) -> Self {
        EventStub {
            event_id: e.event_id.clone(),
            group_id: e.group_id.clone(),
            lat: e.venue_lat,
            lon: e.venue_lon,
            start_time: e.start_time,
            announce_time: Some(e.announce_time),
            title: e.title.clone(),
            description: e.description.clone(),
        }
    }
}

/// Everything assembled from the training split that feature extraction
/// needs. Built once, then shared read-only across workers.
pub struct FeatureArtifacts<'a> {
    pub train: &'a Dataset,
    pub matrix: &'a AttractivenessMatrix,
    /// Index over training event venues at radius r.
    pub event_index: &'a SpatialIndex,
    /// Index over all user homes at radius R.
    pub user_index: &'a SpatialIndex,
    pub user_categories: &'a HashMap<String, HashSet<String>>,
    pub spatial: SpatialConfig,
    /// group position -> (entropy, loyalty); groups without training
    /// attendance are absent (cold start).
    pub group_features: &'a HashMap<usize, (f64, f64)>,
    /// user position -> decayed temporal profile (cold users absent).
    pub profiles: &'a HashMap<usize, TimeVector>,
    /// group position -> active member user positions.
    pub active_members: &'a HashMap<usize, Vec<usize>>,
    /// group position -> (start_time, title) of its training events.
    pub titles_by_group: &'a HashMap<usize, Vec<(i64, String)>>,
    pub lexicon: &'a SentimentLexicon,
    pub tagger: &'a PosTagger,
    pub city_offset_secs: i64,
}

/// Builds the deterministic 20-vector for one event against the training
/// artifacts.
pub fn assemble_features(
    stub: &EventStub,
    art: &FeatureArtifacts,
) -> Result<(FeatureVector, FeatureFlags)> {
    let group_pos = art
        .train
        .group_index(&stub.group_id)
        .ok_or_else(|| Error::Validation(format!("unknown group {}", stub.group_id)))?;
    let category = art.train.groups()[group_pos].category.clone();
    let mut flags = FeatureFlags::default();
    let mut v = [0.0; N_FEATURES];

    let exclude = if stub.event_id.is_empty() {
        None
    } else {
        Some(stub.event_id.as_str())
    };
    let (quality, degenerate) =
        location_quality(stub.lat, stub.lon, exclude, &category, art.matrix, art.event_index);
    flags.degenerate_spatial = degenerate;
    v[0] = quality;

    let (compet, nobody) = location_competitiveness(
        stub.lat,
        stub.lon,
        art.user_index,
        art.spatial.big_r_meters,
        |user_id| {
            art.user_categories
                .get(user_id)
                .map_or(false, |cats| cats.contains(&category))
        },
    );
    flags.no_nearby_users = nobody;
    v[1] = compet;

    match art.group_features.get(&group_pos) {
        Some(&(entropy, loyalty)) => {
            v[2] = entropy;
            v[3] = loyalty;
        }
        None => flags.cold_start_group = true,
    }

    let e_t = event_time_vector(stub.start_time, art.city_offset_secs);
    let member_profiles: Vec<TimeVector> = art
        .active_members
        .get(&group_pos)
        .map(|members| {
            members
                .iter()
                .filter_map(|up| art.profiles.get(up).cloned())
                .collect()
        })
        .unwrap_or_default();
    v[4] = temporal_satisfaction(&e_t, &member_profiles);

    let content = format!("{} {}", stub.title, stub.description);
    let (neg, neu, pos) = sentiment_scores(&content, art.lexicon);
    v[5] = neg;
    v[6] = neu;
    v[7] = pos;
    let present = pos_presence(&stub.title, art.tagger);
    for (i, &flag) in present.iter().enumerate() {
        v[8 + i] = if flag { 1.0 } else { 0.0 };
    }
    let priors: Vec<&str> = art
        .titles_by_group
        .get(&group_pos)
        .map(|titles| {
            titles
                .iter()
                .filter(|(start, _)| *start < stub.start_time)
                .map(|(_, t)| t.as_str())
                .collect()
        })
        .unwrap_or_default();
    v[19] = title_novelty(&stub.title, &priors);

    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite feature for event {}",
            stub.event_id
        )));
    }
    Ok((FeatureVector(v), flags))
}

/// Residual targets y = P - tree(x) for a training split.
pub fn residual_targets(p: &[f64], tree: &RegressionTree, x: &[FeatureVector]) -> Vec<f64> {
    p.iter()
        .zip(x)
        .map(|(&pe, fv)| pe - predict_cart(tree, &fv.0))
        .collect()
}

/// Coefficient of determination.
pub fn r_squared(p: &[f64], p_hat: &[f64]) -> Result<f64> {
    if p.len() != p_hat.len() {
        return Err(Error::Config(format!(
            "length mismatch: {} vs {}",
            p.len(),
            p_hat.len()
        )));
    }
    if p.len() < 2 {
        return Err(Error::EmptyInput("r_squared needs at least 2 points".into()));
    }
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    let ss_tot: f64 = p.iter().map(|&v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Numeric("zero-variance targets in r_squared".into()));
    }
    let ss_res: f64 = p.iter().zip(p_hat).map(|(&a, &b)| (a - b).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Naive-mean baseline: mean training popularity of the event's group, with
/// category- then global-mean fallbacks for cold groups (flagged).
pub fn baseline_nm(
    group_pos: usize,
    train: &Dataset,
    stats: &CategoryStats,
) -> Result<(f64, bool)> {
    let events = train.group_events(group_pos);
    if !events.is_empty() {
        let sum: f64 = events
            .iter()
            .map(|&ev| train.relative_popularity(ev, stats))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum();
        return Ok((sum / events.len() as f64, false));
    }
    // cold group: category mean of training popularity
    let cat = &train.groups()[group_pos].category;
    let mut sum = 0.0;
    let mut n = 0usize;
    for ev in 0..train.events().len() {
        if train.event_category(ev) == cat {
            sum += train.relative_popularity(ev, stats)?;
            n += 1;
        }
    }
    if n > 0 {
        return Ok((sum / n as f64, true));
    }
    // no category history either: global mean
    let mut sum = 0.0;
    let mut n = 0usize;
    for ev in 0..train.events().len() {
        sum += train.relative_popularity(ev, stats)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInput("baseline_nm on empty training split".into()));
    }
    Ok((sum / n as f64, true))
}

/// Outcome of the least-squares residual fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualFit {
    pub params: InfluenceParams,
    /// Fitted with lambda_same tied to lambda_cross.
    pub tied: bool,
    pub all_zero_influence: bool,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
}

const LOG_LAMBDA_BOUND: f64 = 30.0;

fn lambda_of(log_lambda: f64) -> f64 {
    log_lambda.clamp(-LOG_LAMBDA_BOUND, LOG_LAMBDA_BOUND).exp()
}

/// Fits alpha, beta and the lambdas by least squares on the residuals.
///
/// Lambdas are optimized in log space to stay nonnegative; alpha and beta
/// start from the ordinary-least-squares solution at the initial lambdas.
/// When every event influence is zero, beta is unidentifiable and comes
/// back as 0 with the flag set.
pub fn fit_residual_model(
    structures: &[EventInfluence],
    residuals: &[f64],
    lambda_init: (f64, f64),
    seed_horizon_secs: i64,
    tied: bool,
) -> Result<ResidualFit> {
    if structures.len() != residuals.len() {
        return Err(Error::Config(format!(
            "structure/residual length mismatch: {} vs {}",
            structures.len(),
            residuals.len()
        )));
    }
    if structures.is_empty() {
        return Err(Error::EmptyInput("fit_residual_model on empty split".into()));
    }
    let (l_same0, l_cross0) = if tied {
        (lambda_init.0, lambda_init.0)
    } else {
        lambda_init
    };
    let influence_at = |ls: f64, lc: f64| -> Vec<f64> {
        structures.iter().map(|s| s.influence(ls, lc)).collect()
    };
    let i0 = influence_at(l_same0, l_cross0);
    let n = residuals.len() as f64;
    let mean_y = residuals.iter().sum::<f64>() / n;

    if i0.iter().all(|&v| v == 0.0) {
        return Ok(ResidualFit {
            params: InfluenceParams {
                lambda_same: l_same0,
                lambda_cross: l_cross0,
                alpha: mean_y,
                beta: 0.0,
                seed_horizon_secs,
            },
            tied,
            all_zero_influence: true,
            converged: true,
            iterations: 0,
            objective: residuals.iter().map(|y| (y - mean_y).powi(2)).sum(),
        });
    }

    // OLS warm start for (alpha, beta) at the initial lambdas
    let mean_i = i0.iter().sum::<f64>() / n;
    let var_i: f64 = i0.iter().map(|&v| (v - mean_i).powi(2)).sum();
    let cov: f64 = i0
        .iter()
        .zip(residuals)
        .map(|(&iv, &y)| (iv - mean_i) * (y - mean_y))
        .sum();
    let beta0 = if var_i > 0.0 { cov / var_i } else { 0.0 };
    let alpha0 = mean_y - beta0 * mean_i;

    let objective = |theta: &[f64]| -> f64 {
        let alpha = theta[0];
        let beta = theta[1];
        let (ls, lc) = if tied {
            let l = lambda_of(theta[2]);
            (l, l)
        } else {
            (lambda_of(theta[2]), lambda_of(theta[3]))
        };
        let mut sse = 0.0;
        for (s, &y) in structures.iter().zip(residuals) {
            let pred = alpha + beta * s.influence(ls, lc);
            sse += (y - pred).powi(2);
        }
        sse
    };

    let x0 = if tied {
        vec![alpha0, beta0, l_same0.max(1e-12).ln()]
    } else {
        vec![
            alpha0,
            beta0,
            l_same0.max(1e-12).ln(),
            l_cross0.max(1e-12).ln(),
        ]
    };
    let result = bfgs_minimize(objective, &x0, &BfgsOptions::default())?;
    let (ls, lc) = if tied {
        let l = lambda_of(result.x[2]);
        (l, l)
    } else {
        (lambda_of(result.x[2]), lambda_of(result.x[3]))
    };
    Ok(ResidualFit {
        params: InfluenceParams {
            lambda_same: ls,
            lambda_cross: lc,
            alpha: result.x[0],
            beta: result.x[1],
            seed_horizon_secs,
        },
        tied,
        all_zero_influence: false,
        converged: result.converged,
        iterations: result.iterations,
        objective: result.value,
    })
}

/// Model variants compared in evaluation reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Nm,
    Cont,
    CasinoMinus,
    Casino,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Nm, Variant::Cont, Variant::CasinoMinus, Variant::Casino];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Nm => "nm",
            Variant::Cont => "cont",
            Variant::CasinoMinus => "casino-",
            Variant::Casino => "casino",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.iter().copied().find(|v| v.name() == s)
    }
}

/// Evaluation report emitted as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: String,
    pub split: String,
    pub r2: f64,
    pub n_events: usize,
    pub per_category: BTreeMap<String, f64>,
}

/// Self-contained trained model: everything prediction needs besides the
/// dataset context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub schema_version: u32,
    pub feature_names: Vec<String>,
    pub tree: RegressionTree,
    pub cart: CartParams,
    /// Group-differentiated residual fit.
    pub residual: ResidualFit,
    /// Residual fit with the lambdas tied (group-agnostic variant).
    pub residual_tied: ResidualFit,
    pub propagation: PropagationStatsArtifact,
    pub category_stats: CategoryStats,
    pub attractiveness: AttractivenessMatrix,
    pub spatial: SpatialConfig,
    pub decay_eta: f64,
    pub decay_reference_time: i64,
    pub split: SplitSpec,
    pub min_events: usize,
    pub city_offset_secs: i64,
    pub entropy_mode: EntropyMode,
    pub restrict_dag_to_training_users: bool,
    pub lambda_init: (f64, f64),
}

impl ModelBundle {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let body = serde_json::to_string(self)?;
        std::fs::write(path, body)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<ModelBundle> {
        #[derive(Deserialize)]
        struct VersionProbe {
            schema_version: u32,
        }
        let body = std::fs::read_to_string(path)?;
        let probe: VersionProbe = serde_json::from_str(&body)?;
        if probe.schema_version != FEATURE_SCHEMA_VERSION {
            return Err(Error::SchemaMismatch {
                expected: FEATURE_SCHEMA_VERSION,
                found: probe.schema_version,
            });
        }
        Ok(serde_json::from_str(&body)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_squared_values() {
        let p = vec![1.0, 2.0, 3.0];
        assert_eq!(r_squared(&p, &p).unwrap(), 1.0);
        let mean = p.iter().sum::<f64>() / 3.0;
        let hat = vec![mean; 3];
        assert_eq!(r_squared(&p, &hat).unwrap(), 0.0);
        let r = r_squared(&p, &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        assert!(r_squared(&[1.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn r_squared_affine_invariance() {
        let p = vec![0.5, 1.5, 2.0, 4.0];
        let hat = vec![0.6, 1.2, 2.5, 3.9];
        let base = r_squared(&p, &hat).unwrap();
        let scale = 3.0;
        let shift = -2.0;
        let p2: Vec<f64> = p.iter().map(|v| scale * v + shift).collect();
        let h2: Vec<f64> = hat.iter().map(|v| scale * v + shift).collect();
        let mapped = r_squared(&p2, &h2).unwrap();
        assert!((base - mapped).abs() < 1e-12);
        assert!(base <= 1.0);
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in Variant::ALL {
            assert_eq!(Variant::parse(v.name()), Some(v));
        }
        assert_eq!(Variant::parse("svd-mfn"), None);
    }

    #[test]
    fn feature_names_match_width() {
        assert_eq!(FEATURE_NAMES.len(), N_FEATURES);
    }
}
