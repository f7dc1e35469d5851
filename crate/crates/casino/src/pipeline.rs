//! End-to-end orchestration: train a model bundle, rebuild runtime context
//! from a saved bundle, evaluate the four variants, run the grid search,
//! and score what-if event stubs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DatasetSummary, SplitSpec};
use crate::group::{active_members, group_features, EntropyMode};
use crate::influence::{
    build_event_influence, build_event_influence_from_parts, estimate_propagation_stats,
    EventInfluence, InfluenceParams, PropagationStats,
};
use crate::predictor::{
    assemble_features, baseline_nm, fit_residual_model, r_squared, residual_targets, EvalReport,
    EventStub, FeatureArtifacts, FeatureFlags, FeatureVector, ModelBundle, ResidualFit, Variant,
    FEATURE_NAMES, FEATURE_SCHEMA_VERSION,
};
use crate::semantic::{PosTagger, SentimentLexicon};
use crate::spatial::{
    build_attractiveness_matrix, build_event_index, build_user_home_index, user_category_sets,
    SpatialConfig, SpatialIndex, METERS_PER_MILE,
};
use crate::temporal::{user_time_profile, DecayConfig, TimeVector};
use crate::tree::{fit_cart, predict_cart, predict_with_path, CartParams};
use crate::{Error, Result};

const DEFAULT_ANNOUNCE_LEAD_SECS: i64 = 14 * 86_400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub split: SplitSpec,
    pub min_events: usize,
    pub spatial: SpatialConfig,
    pub decay_eta: f64,
    pub city_offset_secs: i64,
    pub cart: CartParams,
    pub seed_horizon_secs: i64,
    /// Starting lambdas for the residual fit.
    pub lambda_init: (f64, f64),
    pub restrict_dag_to_training_users: bool,
    pub entropy_mode: EntropyMode,
    pub lexicon_path: Option<PathBuf>,
    pub tagger_path: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            split: SplitSpec::default(),
            min_events: 15,
            spatial: SpatialConfig::default(),
            decay_eta: 0.01,
            city_offset_secs: 0,
            cart: CartParams::default(),
            seed_horizon_secs: crate::influence::DEFAULT_SEED_HORIZON_SECS,
            lambda_init: (1.0, 1.0),
            restrict_dag_to_training_users: true,
            entropy_mode: EntropyMode::PerUserShare,
            lexicon_path: None,
            tagger_path: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.spatial.validate()?;
        if self.decay_eta < 0.0 {
            return Err(Error::Config("decay_eta must be >= 0".into()));
        }
        if self.seed_horizon_secs < 0 {
            return Err(Error::Config("seed_horizon_secs must be >= 0".into()));
        }
        if self.lambda_init.0 <= 0.0 || self.lambda_init.1 <= 0.0 {
            return Err(Error::Config("lambda_init must be positive".into()));
        }
        Ok(())
    }

    pub fn load_lexicon(&self) -> Result<SentimentLexicon> {
        match &self.lexicon_path {
            Some(p) => SentimentLexicon::from_file(p),
            None => Ok(SentimentLexicon::default()),
        }
    }

    pub fn load_tagger(&self) -> Result<PosTagger> {
        match &self.tagger_path {
            Some(p) => PosTagger::from_file(p),
            None => Ok(PosTagger::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: PipelineConfig,
    pub pre_filter: DatasetSummary,
    pub post_filter: DatasetSummary,
    pub n_train_events: usize,
    pub n_val_events: usize,
    pub n_test_events: usize,
    pub residual: ResidualFit,
    pub residual_tied: ResidualFit,
    pub train_r2: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitSel {
    Train,
    Val,
    Test,
}

impl SplitSel {
    pub fn name(&self) -> &'static str {
        match self {
            SplitSel::Train => "train",
            SplitSel::Val => "val",
            SplitSel::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<SplitSel> {
        match s {
            "train" => Some(SplitSel::Train),
            "val" => Some(SplitSel::Val),
            "test" => Some(SplitSel::Test),
            _ => None,
        }
    }
}

/// A trained bundle plus everything rebuilt from the dataset context that
/// scoring needs. Immutable; safe to share across worker threads.
pub struct ModelContext {
    pub bundle: ModelBundle,
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub stats: PropagationStats,
    matrix_index: SpatialIndex,
    user_index: SpatialIndex,
    user_categories: HashMap<String, HashSet<String>>,
    group_feature_map: HashMap<usize, (f64, f64)>,
    profiles: HashMap<usize, TimeVector>,
    active_member_map: HashMap<usize, Vec<usize>>,
    titles_by_group: HashMap<usize, Vec<(i64, String)>>,
    lexicon: SentimentLexicon,
    tagger: PosTagger,
}

struct BuiltArtifacts {
    matrix_index: SpatialIndex,
    user_index: SpatialIndex,
    user_categories: HashMap<String, HashSet<String>>,
    group_feature_map: HashMap<usize, (f64, f64)>,
    profiles: HashMap<usize, TimeVector>,
    active_member_map: HashMap<usize, Vec<usize>>,
    titles_by_group: HashMap<usize, Vec<(i64, String)>>,
}

fn build_artifacts(
    train: &Dataset,
    spatial: &SpatialConfig,
    decay: &DecayConfig,
    city_offset_secs: i64,
    entropy_mode: EntropyMode,
) -> BuiltArtifacts {
    let matrix_index = build_event_index(train, spatial.r_meters);
    let user_index = build_user_home_index(train, spatial.big_r_meters);
    let user_categories = user_category_sets(train);

    let mut group_feature_map = HashMap::new();
    let mut active_member_map = HashMap::new();
    let mut titles_by_group = HashMap::new();
    for g in 0..train.groups().len() {
        if let Ok(features) = group_features(g, train, entropy_mode) {
            group_feature_map.insert(g, features);
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

    let profile_list: Vec<(usize, Option<TimeVector>)> = (0..train.users().len())
        .into_par_iter()
        .map(|up| {
            if train.user_events(up).is_empty() {
                (up, None)
            } else {
                let (profile, cold) = user_time_profile(up, train, decay, city_offset_secs);
                (up, if cold { None } else { Some(profile) })
            }
        })
        .collect();
    let profiles: HashMap<usize, TimeVector> = profile_list
        .into_iter()
        .filter_map(|(up, p)| p.map(|v| (up, v)))
        .collect();

    BuiltArtifacts {
        matrix_index,
        user_index,
        user_categories,
        group_feature_map,
        profiles,
        active_member_map,
        titles_by_group,
    }
}

impl ModelContext {
    pub fn artifacts(&self) -> FeatureArtifacts<'_> {
        FeatureArtifacts {
            train: &self.train,
            matrix: &self.bundle.attractiveness,
            event_index: &self.matrix_index,
            user_index: &self.user_index,
            user_categories: &self.user_categories,
            spatial: self.bundle.spatial,
            group_features: &self.group_feature_map,
            profiles: &self.profiles,
            active_members: &self.active_member_map,
            titles_by_group: &self.titles_by_group,
            lexicon: &self.lexicon,
            tagger: &self.tagger,
            city_offset_secs: self.bundle.city_offset_secs,
        }
    }

    fn split(&self, sel: SplitSel) -> &Dataset {
        match sel {
            SplitSel::Train => &self.train,
            SplitSel::Val => &self.val,
            SplitSel::Test => &self.test,
        }
    }

    fn variant_params(&self, variant: Variant) -> &ResidualFit {
        match variant {
            Variant::Casino => &self.bundle.residual,
            _ => &self.bundle.residual_tied,
        }
    }

    /// Features for every event of a split, in split order.
    fn split_features(&self, ds: &Dataset) -> Result<Vec<(FeatureVector, FeatureFlags)>> {
        let art = self.artifacts();
        (0..ds.events().len())
            .into_par_iter()
            .map(|ev| assemble_features(&EventStub::from(&ds.events()[ev]), &art))
            .collect()
    }

    /// Scores one split under one variant.
    pub fn evaluate(&self, sel: SplitSel, variant: Variant) -> Result<EvalReport> {
        let ds = self.split(sel);
        if ds.events().is_empty() {
            return Err(Error::EmptyInput(format!("empty {} split", sel.name())));
        }
        let stats = &self.bundle.category_stats;
        let p: Vec<f64> = (0..ds.events().len())
            .map(|ev| ds.relative_popularity(ev, stats))
            .collect::<Result<_>>()?;
        let p_hat = self.predictions(ds, variant)?;
        let r2 = r_squared(&p, &p_hat)?;

        let mut per_category = BTreeMap::new();
        for cat in ds.categories() {
            let idx: Vec<usize> = (0..ds.events().len())
                .filter(|&ev| ds.event_category(ev) == cat)
                .collect();
            if idx.len() < 2 {
                continue;
            }
            let pc: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
            let hc: Vec<f64> = idx.iter().map(|&i| p_hat[i]).collect();
            if let Ok(r) = r_squared(&pc, &hc) {
                per_category.insert(cat.clone(), r);
            }
        }
        Ok(EvalReport {
            variant: variant.name().to_string(),
            split: sel.name().to_string(),
            r2,
            n_events: ds.events().len(),
            per_category,
        })
    }

    fn predictions(&self, ds: &Dataset, variant: Variant) -> Result<Vec<f64>> {
        match variant {
            Variant::Nm => (0..ds.events().len())
                .map(|ev| {
                    let g = self
                        .train
                        .group_index(&ds.events()[ev].group_id)
                        .ok_or_else(|| {
                            Error::Validation(format!(
                                "unknown group {}",
                                ds.events()[ev].group_id
                            ))
                        })?;
                    Ok(baseline_nm(g, &self.train, &self.bundle.category_stats)?.0)
                })
                .collect(),
            Variant::Cont => {
                let features = self.split_features(ds)?;
                Ok(features
                    .iter()
                    .map(|(fv, _)| predict_cart(&self.bundle.tree, &fv.0))
                    .collect())
            }
            Variant::CasinoMinus | Variant::Casino => {
                let features = self.split_features(ds)?;
                let fit = self.variant_params(variant);
                let residuals = self.residual_predictions(ds, &fit.params)?;
                Ok(features
                    .iter()
                    .zip(residuals)
                    .map(|((fv, _), y_hat)| predict_cart(&self.bundle.tree, &fv.0) + y_hat)
                    .collect())
            }
        }
    }

    /// alpha + beta * I(e) for every event of a split, in split order.
    fn residual_predictions(&self, ds: &Dataset, params: &InfluenceParams) -> Result<Vec<f64>> {
        let restrict = self.bundle.restrict_dag_to_training_users;
        let values: Vec<f64> = (0..ds.events().len())
            .into_par_iter()
            .map(|ev| {
                let structure = build_event_influence(
                    ds,
                    ev,
                    &self.train,
                    &self.stats,
                    params.seed_horizon_secs,
                    restrict,
                );
                params.alpha
                    + params.beta * structure.influence(params.lambda_same, params.lambda_cross)
            })
            .collect();
        Ok(values)
    }

    /// Full prediction with attributions for one event stub.
    pub fn whatif(&self, stub: &EventStub) -> Result<WhatIfReport> {
        let art = self.artifacts();
        let mut stub = stub.clone();
        if stub.announce_time.is_none() {
            stub.announce_time = Some(stub.start_time - DEFAULT_ANNOUNCE_LEAD_SECS);
        }
        let (fv, flags) = assemble_features(&stub, &art)?;
        let (p_hat, path) = predict_with_path(&self.bundle.tree, &fv.0);
        let group_pos = self
            .train
            .group_index(&stub.group_id)
            .ok_or_else(|| Error::Validation(format!("unknown group {}", stub.group_id)))?;
        let params = &self.bundle.residual.params;
        let structure = build_event_influence_from_parts(
            group_pos,
            stub.announce_time.unwrap(),
            &[],
            &self.train,
            &self.stats,
            params.seed_horizon_secs,
            self.bundle.restrict_dag_to_training_users,
        );
        let influence = structure.influence(params.lambda_same, params.lambda_cross);
        let y_hat = params.alpha + params.beta * influence;
        let mut features = BTreeMap::new();
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            features.insert(name.to_string(), fv.0[i]);
        }
        Ok(WhatIfReport {
            p_hat,
            y_hat,
            prediction: p_hat + y_hat,
            influence,
            alpha: params.alpha,
            beta: params.beta,
            features,
            leaf_path: path
                .iter()
                .map(|s| WhatIfPathStep {
                    feature: FEATURE_NAMES[s.feature].to_string(),
                    threshold: s.threshold,
                    went_left: s.went_left,
                })
                .collect(),
            flags,
        })
    }

    /// Rebuilds a runtime context from a saved bundle plus the dataset it
    /// was trained on.
    pub fn from_bundle(
        bundle: ModelBundle,
        dataset: &Dataset,
        lexicon: SentimentLexicon,
        tagger: PosTagger,
    ) -> Result<ModelContext> {
        let filtered = dataset.filter_inactive_groups(bundle.min_events)?;
        let (train, val, test) = filtered.split_per_group(&bundle.split)?;
        let decay = DecayConfig {
            eta: bundle.decay_eta,
            reference_time: bundle.decay_reference_time,
        };
        let built = build_artifacts(
            &train,
            &bundle.spatial,
            &decay,
            bundle.city_offset_secs,
            bundle.entropy_mode,
        );
        let stats = PropagationStats::from_artifact(&bundle.propagation, &train);
        Ok(ModelContext {
            bundle,
            train,
            val,
            test,
            stats,
            matrix_index: built.matrix_index,
            user_index: built.user_index,
            user_categories: built.user_categories,
            group_feature_map: built.group_feature_map,
            profiles: built.profiles,
            active_member_map: built.active_member_map,
            titles_by_group: built.titles_by_group,
            lexicon,
            tagger,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfPathStep {
    pub feature: String,
    pub threshold: f64,
    pub went_left: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfReport {
    pub p_hat: f64,
    pub y_hat: f64,
    pub prediction: f64,
    pub influence: f64,
    pub alpha: f64,
    pub beta: f64,
    pub features: BTreeMap<String, f64>,
    pub leaf_path: Vec<WhatIfPathStep>,
    pub flags: FeatureFlags,
}

/// Trains the full two-stage model and returns the runtime context plus a
/// machine-readable report.
pub fn train(dataset: &Dataset, cfg: &PipelineConfig) -> Result<(ModelContext, TrainReport)> {
    cfg.validate()?;
    let lexicon = cfg.load_lexicon()?;
    let tagger = cfg.load_tagger()?;
    let pre_filter = dataset.summary();
    let filtered = dataset.filter_inactive_groups(cfg.min_events)?;
    let post_filter = filtered.summary();
    let (train_ds, val, test) = filtered.split_per_group(&cfg.split)?;
    if train_ds.events().is_empty() {
        return Err(Error::EmptyInput(
            "no training events after filtering and splitting".into(),
        ));
    }
    let mut warnings = Vec::new();

    let category_stats = train_ds.category_averages()?;
    let matrix = build_attractiveness_matrix(&train_ds, cfg.spatial.r_meters);
    let reference_time = train_ds.time_window().1;
    let decay = DecayConfig {
        eta: cfg.decay_eta,
        reference_time,
    };
    let built = build_artifacts(
        &train_ds,
        &cfg.spatial,
        &decay,
        cfg.city_offset_secs,
        cfg.entropy_mode,
    );

    // assemble training features and targets
    let art = FeatureArtifacts {
        train: &train_ds,
        matrix: &matrix,
        event_index: &built.matrix_index,
        user_index: &built.user_index,
        user_categories: &built.user_categories,
        spatial: cfg.spatial,
        group_features: &built.group_feature_map,
        profiles: &built.profiles,
        active_members: &built.active_member_map,
        titles_by_group: &built.titles_by_group,
        lexicon: &lexicon,
        tagger: &tagger,
        city_offset_secs: cfg.city_offset_secs,
    };
    let features: Vec<(FeatureVector, FeatureFlags)> = (0..train_ds.events().len())
        .into_par_iter()
        .map(|ev| assemble_features(&EventStub::from(&train_ds.events()[ev]), &art))
        .collect::<Result<_>>()?;
    let x: Vec<FeatureVector> = features.iter().map(|(fv, _)| fv.clone()).collect();
    let x_rows: Vec<Vec<f64>> = x.iter().map(|fv| fv.0.to_vec()).collect();
    let y: Vec<f64> = (0..train_ds.events().len())
        .map(|ev| train_ds.relative_popularity(ev, &category_stats))
        .collect::<Result<_>>()?;

    let tree = fit_cart(&x_rows, &y, &cfg.cart)?;
    let residuals = residual_targets(&y, &tree, &x);

    let stats = estimate_propagation_stats(&train_ds);
    let structures: Vec<EventInfluence> = (0..train_ds.events().len())
        .into_par_iter()
        .map(|ev| {
            build_event_influence(
                &train_ds,
                ev,
                &train_ds,
                &stats,
                cfg.seed_horizon_secs,
                cfg.restrict_dag_to_training_users,
            )
        })
        .collect();

    // the tied fit is better conditioned; its lambda warm-starts the
    // group-differentiated fit
    let residual_tied = fit_residual_model(
        &structures,
        &residuals,
        cfg.lambda_init,
        cfg.seed_horizon_secs,
        true,
    )?;
    let warm = (
        residual_tied.params.lambda_same,
        residual_tied.params.lambda_cross,
    );
    let residual = fit_residual_model(
        &structures,
        &residuals,
        warm,
        cfg.seed_horizon_secs,
        false,
    )?;
    if residual.all_zero_influence {
        warnings.push("all event influences are zero; beta unidentifiable".into());
    }

    let bundle = ModelBundle {
        schema_version: FEATURE_SCHEMA_VERSION,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        tree,
        cart: cfg.cart,
        residual,
        residual_tied,
        propagation: stats.to_artifact(&train_ds),
        category_stats,
        attractiveness: matrix,
        spatial: cfg.spatial,
        decay_eta: cfg.decay_eta,
        decay_reference_time: reference_time,
        split: cfg.split,
        min_events: cfg.min_events,
        city_offset_secs: cfg.city_offset_secs,
        entropy_mode: cfg.entropy_mode,
        restrict_dag_to_training_users: cfg.restrict_dag_to_training_users,
        lambda_init: cfg.lambda_init,
    };

    let ctx = ModelContext {
        bundle,
        train: train_ds,
        val,
        test,
        stats,
        matrix_index: built.matrix_index,
        user_index: built.user_index,
        user_categories: built.user_categories,
        group_feature_map: built.group_feature_map,
        profiles: built.profiles,
        active_member_map: built.active_member_map,
        titles_by_group: built.titles_by_group,
        lexicon,
        tagger,
    };

    let mut train_r2 = BTreeMap::new();
    for variant in Variant::ALL {
        if let Ok(report) = ctx.evaluate(SplitSel::Train, variant) {
            train_r2.insert(variant.name().to_string(), report.r2);
        }
    }

    let report = TrainReport {
        config: cfg.clone(),
        pre_filter,
        post_filter,
        n_train_events: ctx.train.events().len(),
        n_val_events: ctx.val.events().len(),
        n_test_events: ctx.test.events().len(),
        residual: ctx.bundle.residual.clone(),
        residual_tied: ctx.bundle.residual_tied.clone(),
        train_r2,
        warnings,
    };
    Ok((ctx, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub big_r_meters: f64,
    pub eta: f64,
    pub val_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchReport {
    pub best_big_r_meters: f64,
    pub best_eta: f64,
    pub cells: Vec<GridCell>,
}

pub fn default_r_grid_meters() -> Vec<f64> {
    [0.5, 1.0, 1.5, 2.0, 3.0]
        .iter()
        .map(|m| m * METERS_PER_MILE)
        .collect()
}

pub fn default_eta_grid() -> Vec<f64> {
    vec![0.001, 0.01, 0.05, 0.1]
}

/// Grid search over the competitiveness radius and the decay rate,
/// retraining the contextual model per cell and scoring validation R^2.
/// Ties break toward the first cell in declared grid order.
pub fn grid_search(
    dataset: &Dataset,
    cfg: &PipelineConfig,
    r_grid_meters: &[f64],
    eta_grid: &[f64],
) -> Result<GridSearchReport> {
    if r_grid_meters.is_empty() || eta_grid.is_empty() {
        return Err(Error::Config("grids must be nonempty".into()));
    }
    cfg.validate()?;
    let lexicon = cfg.load_lexicon()?;
    let tagger = cfg.load_tagger()?;
    let filtered = dataset.filter_inactive_groups(cfg.min_events)?;
    let (train_ds, val, _test) = filtered.split_per_group(&cfg.split)?;
    if train_ds.events().is_empty() || val.events().is_empty() {
        return Err(Error::EmptyInput("grid search needs train and val events".into()));
    }
    let category_stats = train_ds.category_averages()?;
    let matrix = build_attractiveness_matrix(&train_ds, cfg.spatial.r_meters);
    let event_index = build_event_index(&train_ds, cfg.spatial.r_meters);
    let max_r = r_grid_meters.iter().cloned().fold(0.0, f64::max);
    let user_index = build_user_home_index(&train_ds, max_r);
    let user_categories = user_category_sets(&train_ds);
    let reference_time = train_ds.time_window().1;

    let y_train: Vec<f64> = (0..train_ds.events().len())
        .map(|ev| train_ds.relative_popularity(ev, &category_stats))
        .collect::<Result<_>>()?;
    let y_val: Vec<f64> = (0..val.events().len())
        .map(|ev| val.relative_popularity(ev, &category_stats))
        .collect::<Result<_>>()?;

    let cells_in_order: Vec<(f64, f64)> = r_grid_meters
        .iter()
        .flat_map(|&r| eta_grid.iter().map(move |&eta| (r, eta)))
        .collect();

    let cells: Vec<GridCell> = cells_in_order
        .par_iter()
        .map(|&(big_r, eta)| -> Result<GridCell> {
            let spatial = SpatialConfig {
                r_meters: cfg.spatial.r_meters,
                big_r_meters: big_r,
            };
            let decay = DecayConfig { eta, reference_time };
            let built = build_artifacts(
                &train_ds,
                &spatial,
                &decay,
                cfg.city_offset_secs,
                cfg.entropy_mode,
            );
            let art = FeatureArtifacts {
                train: &train_ds,
                matrix: &matrix,
                event_index: &event_index,
                user_index: &user_index,
                user_categories: &user_categories,
                spatial,
                group_features: &built.group_feature_map,
                profiles: &built.profiles,
                active_members: &built.active_member_map,
                titles_by_group: &built.titles_by_group,
                lexicon: &lexicon,
                tagger: &tagger,
                city_offset_secs: cfg.city_offset_secs,
            };
            let x_train: Vec<Vec<f64>> = (0..train_ds.events().len())
                .map(|ev| {
                    assemble_features(&EventStub::from(&train_ds.events()[ev]), &art)
                        .map(|(fv, _)| fv.0.to_vec())
                })
                .collect::<Result<_>>()?;
            let tree = fit_cart(&x_train, &y_train, &cfg.cart)?;
            let x_val: Vec<Vec<f64>> = (0..val.events().len())
                .map(|ev| {
                    assemble_features(&EventStub::from(&val.events()[ev]), &art)
                        .map(|(fv, _)| fv.0.to_vec())
                })
                .collect::<Result<_>>()?;
            let p_hat: Vec<f64> = x_val.iter().map(|row| predict_cart(&tree, row)).collect();
            let val_r2 = r_squared(&y_val, &p_hat)?;
            Ok(GridCell {
                big_r_meters: big_r,
                eta,
                val_r2,
            })
        })
        .collect::<Result<_>>()?;

    let mut best = 0usize;
    for (i, cell) in cells.iter().enumerate() {
        if cell.val_r2 > cells[best].val_r2 {
            best = i;
        }
    }
    Ok(GridSearchReport {
        best_big_r_meters: cells[best].big_r_meters,
        best_eta: cells[best].eta,
        cells,
    })
}
