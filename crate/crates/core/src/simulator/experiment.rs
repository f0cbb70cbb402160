//! Round-by-round active-learning experiment on a synthetic task.
//!
//! Layout of the videos: the test video is held out entirely; the lowest
//! remaining video seeds the labeled set via [`initial_split`] (its
//! validation part stays unlabeled and is never selected); round `r` draws
//! from the `r`-th remaining video. Selection in round `r` uses
//! `stream_rng(seed, r)`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{select_round, AcquisitionConfig, DEFAULT_BUDGET, DEFAULT_METRIC_EPSILON, DEFAULT_N_BATCHES};
use crate::error::{Error, Result};
use crate::model::{initial_split, Arm, FeatureVector, FrameId, LabelMask, PoolState, ProbMap, RoundLog, Strategy};
use crate::rng::stream_rng;
use crate::simulator::centroid::{fit_model, CentroidModel};
use crate::simulator::metrics::compute_miou;
use crate::simulator::task::SyntheticTask;
use crate::store::ArtifactStore;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    pub rounds: usize,
    pub budget: usize,
    pub n_batches: usize,
    pub metric_epsilon: f64,
    pub temperature: f64,
    pub train_fraction: f64,
    /// Held-out video; the highest video id when unset.
    pub test_video: Option<u32>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            strategies: Strategy::ALL.to_vec(),
            seeds: (0..20).collect(),
            rounds: 3,
            budget: DEFAULT_BUDGET,
            n_batches: DEFAULT_N_BATCHES,
            metric_epsilon: DEFAULT_METRIC_EPSILON,
            temperature: 0.5,
            train_fraction: 0.8,
            test_video: None,
        }
    }
}

impl ExperimentConfig {
    pub fn acquisition(&self, strategy: Strategy) -> AcquisitionConfig {
        AcquisitionConfig {
            strategy,
            budget: self.budget,
            n_batches: self.n_batches,
            metric_epsilon: self.metric_epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("no strategies given".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("no seeds given".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidConfig("temperature must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig("train_fraction must be in (0, 1)".into()));
        }
        for &s in &self.strategies {
            self.acquisition(s).validate()?;
        }
        Ok(())
    }
}

/// Which video plays which part in an experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VideoPlan {
    pub test: u32,
    pub init: u32,
    /// One video per round, in order.
    pub rounds: Vec<u32>,
}

pub fn plan_videos(task: &SyntheticTask, cfg: &ExperimentConfig) -> Result<VideoPlan> {
    let videos = task.video_ids();
    let test = cfg.test_video.unwrap_or(videos.len() as u32 - 1);
    if !videos.contains(&test) {
        return Err(Error::UnknownVideo(test));
    }
    let rest: Vec<u32> = videos.into_iter().filter(|&v| v != test).collect();
    if rest.len() < cfg.rounds + 1 {
        return Err(Error::InsufficientVideos {
            rounds: cfg.rounds,
            needed: cfg.rounds + 2,
            available: task.cfg.n_videos,
        });
    }
    Ok(VideoPlan {
        test,
        init: rest[0],
        rounds: rest[1..=cfg.rounds].to_vec(),
    })
}

/// Serves frame features from the task and probability maps from the
/// current model, computed on demand.
struct SimStore<'a> {
    task: &'a SyntheticTask,
    model: &'a CentroidModel,
}

impl ArtifactStore for SimStore<'_> {
    fn feature(&self, id: FrameId) -> Result<FeatureVector> {
        self.task
            .frame(id)
            .map(|f| f.feature.clone())
            .ok_or(Error::MissingFeature(id))
    }

    fn probmap(&self, id: FrameId) -> Result<ProbMap> {
        let f = self.task.frame(id).ok_or(Error::MissingProbMap(id))?;
        let [h, w] = f.labels.shape();
        self.model.predict_probmap(&f.pixels, h, w)
    }
}

fn fit(task: &SyntheticTask, labeled: &BTreeSet<FrameId>, temperature: f64) -> Result<CentroidModel> {
    let frames = labeled.iter().map(|&id| {
        let f = task.frame(id).expect("labeled ids come from the task");
        (&f.labels, f.pixels.as_slice())
    });
    fit_model(frames, task.cfg.classes, task.cfg.dim, temperature)
}

/// Test-video mIoU of `model`, with per-class IoU.
pub fn evaluate(task: &SyntheticTask, model: &CentroidModel, test_video: u32) -> Result<(Option<f64>, Vec<Option<f64>>)> {
    let frames = task.video_frames(test_video);
    let preds: Vec<LabelMask> = frames
        .par_iter()
        .map(|f| {
            let [h, w] = f.labels.shape();
            model.predict_labels(&f.pixels, h, w)
        })
        .collect::<Result<_>>()?;
    let gts: Vec<LabelMask> = frames.iter().map(|f| f.labels.clone()).collect();
    let r = compute_miou(&preds, &gts, task.cfg.classes)?;
    Ok((r.miou, r.per_class))
}

fn initial_pool(task: &SyntheticTask, plan: &VideoPlan, cfg: &ExperimentConfig, seed: u64) -> Result<PoolState> {
    let init: Vec<FrameId> = task.video_frames(plan.init).iter().map(|f| f.id).collect();
    let (train, val) = initial_split(&init, cfg.train_fraction, seed)?;
    let mut unlabeled = val;
    for &v in &plan.rounds {
        unlabeled.extend(task.video_frames(v).iter().map(|f| f.id));
    }
    Ok(PoolState {
        labeled: train,
        unlabeled,
        test: task.video_frames(plan.test).iter().map(|f| f.id).collect(),
        round: 0,
        seed,
    })
}

/// Runs one strategy under one seed: the round-0 log plus one log per round.
pub fn run_cell(task: &SyntheticTask, cfg: &ExperimentConfig, strategy: Strategy, seed: u64) -> Result<Vec<RoundLog>> {
    let plan = plan_videos(task, cfg)?;
    let acq = cfg.acquisition(strategy);
    let mut pool = initial_pool(task, &plan, cfg, seed)?;
    let mut model = fit(task, &pool.labeled, cfg.temperature)?;
    let mut logs = Vec::with_capacity(cfg.rounds + 1);
    let mut selected = Vec::new();
    for round in 0..=cfg.rounds {
        if round > 0 {
            let video = plan.rounds[round - 1];
            let store = SimStore { task, model: &model };
            let mut rng = stream_rng(seed, round as u64);
            selected = select_round(&pool, video, &acq, &store, &mut rng)?;
            pool = pool.apply_selection(&selected)?;
            model = fit(task, &pool.labeled, cfg.temperature)?;
        }
        let (miou, per_class_iou) = evaluate(task, &model, plan.test)?;
        logs.push(RoundLog {
            strategy: Arm::Select(strategy),
            seed,
            round: round as u64,
            n_labeled: pool.labeled.len(),
            selected: std::mem::take(&mut selected),
            miou,
            per_class_iou,
        });
    }
    Ok(logs)
}

/// The "all data" anchor: every non-test frame labeled.
pub fn run_anchor(task: &SyntheticTask, cfg: &ExperimentConfig, seed: u64) -> Result<RoundLog> {
    let plan = plan_videos(task, cfg)?;
    let labeled: BTreeSet<FrameId> = task
        .frames
        .iter()
        .filter(|f| f.id.video != plan.test)
        .map(|f| f.id)
        .collect();
    let model = fit(task, &labeled, cfg.temperature)?;
    let (miou, per_class_iou) = evaluate(task, &model, plan.test)?;
    Ok(RoundLog {
        strategy: Arm::AllData,
        seed,
        round: cfg.rounds as u64,
        n_labeled: labeled.len(),
        selected: Vec::new(),
        miou,
        per_class_iou,
    })
}

/// Runs every (strategy, seed) cell in parallel, plus one anchor log per
/// seed. Output order: strategies in config order, then seeds, then rounds;
/// anchors last, by seed.
pub fn run_experiment(task: &SyntheticTask, cfg: &ExperimentConfig) -> Result<Vec<RoundLog>> {
    cfg.validate()?;
    plan_videos(task, cfg)?;
    let cells: Vec<(Strategy, u64)> = cfg
        .strategies
        .iter()
        .flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let per_cell: Vec<Vec<RoundLog>> = cells
        .par_iter()
        .map(|&(s, seed)| run_cell(task, cfg, s, seed))
        .collect::<Result<_>>()?;
    let anchors: Vec<RoundLog> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_anchor(task, cfg, seed))
        .collect::<Result<_>>()?;
    Ok(per_cell.into_iter().flatten().chain(anchors).collect())
}
