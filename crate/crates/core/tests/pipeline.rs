//! Disk-backed round trip: a synthetic task written as TNSR files and a
//! manifest, then filtered, scored and selected through the file store.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use alframe_core::io::manifest::{load_manifest, save_manifest, Manifest};
use alframe_core::io::state::{load_state, save_state};
use alframe_core::io::tensor::{write_tensor, Tensor};
use alframe_core::preprocess::{filter_frames, DedupThreshold, PreprocessConfig};
use alframe_core::rng::stream_rng;
use alframe_core::simulator::{fit_model, generate_task, SyntheticTask, SyntheticTaskConfig};
use alframe_core::{
    select_round, AcquisitionConfig, ArtifactStore, FileStore, FrameId, FrameRecord, MemoryStore, PoolState, Split,
    Strategy,
};

fn small_task() -> SyntheticTask {
    generate_task(&SyntheticTaskConfig {
        n_videos: 4,
        frames_per_video: 24,
        classes: 4,
        height: 8,
        width: 8,
        dim: 6,
        ..SyntheticTaskConfig::default()
    })
    .unwrap()
}

/// Writes features, model probmaps, labels and squashed RGB-like pixels.
fn write_dataset(task: &SyntheticTask, dir: &Path) -> (PathBuf, MemoryStore) {
    let cfg = &task.cfg;
    let (k, h, w, d) = (cfg.classes, cfg.height, cfg.width, cfg.dim);
    let init = task.video_frames(0);
    let model = fit_model(init.iter().map(|f| (&f.labels, f.pixels.as_slice())), k, d, 0.5).unwrap();
    let mut mem = MemoryStore::default();
    let mut records = Vec::new();
    for f in &task.frames {
        let tag = format!("{}_{}", f.id.video, f.id.index);
        let path = |kind: &str| PathBuf::from(format!("{kind}/{tag}.tnsr"));
        for kind in ["feat", "prob", "label", "px"] {
            std::fs::create_dir_all(dir.join(kind)).unwrap();
        }
        let pm = model.predict_probmap(&f.pixels, h, w).unwrap();
        write_tensor(dir.join(path("feat")), &Tensor::f64(&[d], f.feature.as_ref().to_vec()).unwrap()).unwrap();
        write_tensor(dir.join(path("prob")), &Tensor::f64(&[k, h, w], pm.as_slice().to_vec()).unwrap()).unwrap();
        write_tensor(dir.join(path("label")), &Tensor::u16(&[h, w], f.labels.as_slice().to_vec()).unwrap()).unwrap();
        let mut px = vec![0.0; 3 * h * w];
        for c in 0..3 {
            for p in 0..h * w {
                px[c * h * w + p] = 1.0 / (1.0 + (-f.pixels[p * d + c]).exp());
            }
        }
        write_tensor(dir.join(path("px")), &Tensor::f64(&[3, h, w], px).unwrap()).unwrap();
        mem.features.insert(f.id, f.feature.clone());
        mem.probmaps.insert(f.id, pm);
        records.push(FrameRecord {
            id: f.id,
            feature_ref: path("feat"),
            probmap_ref: Some(path("prob")),
            label_ref: Some(path("label")),
            pixel_ref: Some(path("px")),
            split: match f.id.video {
                0 => Split::Labeled,
                3 => Split::Test,
                _ => Split::Pool,
            },
        });
    }
    let m = dir.join("manifest.csv");
    save_manifest(&m, &records).unwrap();
    (m, mem)
}

fn setup() -> (tempfile::TempDir, SyntheticTask, Manifest, MemoryStore) {
    let dir = tempfile::tempdir().unwrap();
    let task = small_task();
    let (m, mem) = write_dataset(&task, dir.path());
    let manifest = load_manifest(&m).unwrap();
    (dir, task, manifest, mem)
}

#[test]
fn manifest_dims_and_artifacts_match_the_task() {
    let (_dir, task, manifest, mem) = setup();
    assert_eq!(manifest.records.len(), 96);
    assert_eq!((manifest.dims.k, manifest.dims.h, manifest.dims.w, manifest.dims.d), (Some(4), Some(8), Some(8), 6));
    let store = FileStore::new(&manifest.base_dir, &manifest.records);
    for f in task.frames.iter().step_by(7) {
        assert_eq!(store.feature(f.id).unwrap(), f.feature);
        assert_eq!(store.probmap(f.id).unwrap(), mem.probmap(f.id).unwrap());
        assert_eq!(store.label(f.id, 4).unwrap(), f.labels);
        assert_eq!(store.pixels(f.id).unwrap().shape(), [3, 8, 8]);
    }
}

#[test]
fn file_store_selection_matches_memory_store() {
    let (_dir, _task, manifest, mem) = setup();
    let store = FileStore::new(&manifest.base_dir, &manifest.records);
    let pool = PoolState::from_records(&manifest.records, 9);
    for strategy in Strategy::ALL {
        let cfg = AcquisitionConfig { budget: 10, ..AcquisitionConfig::new(strategy) };
        let from_disk = select_round(&pool, 1, &cfg, &store, &mut stream_rng(9, 0)).unwrap();
        let in_memory = select_round(&pool, 1, &cfg, &mem, &mut stream_rng(9, 0)).unwrap();
        assert_eq!(from_disk, in_memory, "{strategy}");
        assert_eq!(from_disk.len(), 10);
    }
}

#[test]
fn rounds_through_the_state_file() {
    let (dir, _task, manifest, _mem) = setup();
    let store = FileStore::new(&manifest.base_dir, &manifest.records);
    let all: BTreeSet<FrameId> = manifest.records.iter().map(|r| r.id).collect();
    let state_path = dir.path().join("state.json");
    save_state(&state_path, &PoolState::from_records(&manifest.records, 4)).unwrap();
    let cfg = AcquisitionConfig { budget: 8, n_batches: 4, ..AcquisitionConfig::new(Strategy::Entropy) };

    for video in [1u32, 2] {
        let state = load_state(&state_path).unwrap();
        let picked = select_round(&state, video, &cfg, &store, &mut stream_rng(4, state.round)).unwrap();
        assert!(picked.iter().all(|id| id.video == video));
        let next = state.apply_selection(&picked).unwrap();
        assert!(next.is_partition_of(&all));
        assert_eq!(next.labeled.len(), state.labeled.len() + 8);
        save_state(&state_path, &next).unwrap();
    }
    let last = load_state(&state_path).unwrap();
    assert_eq!(last.round, 2);
    assert_eq!(last.labeled.len(), 24 + 16);
    assert_eq!(last.test.len(), 24);
}

#[test]
fn filtering_the_written_pixels() {
    let (_dir, _task, manifest, _mem) = setup();
    let store = FileStore::new(&manifest.base_dir, &manifest.records);
    let cfg = PreprocessConfig { dedup: DedupThreshold::Percentile(50.0), blur_threshold: 0.0 };
    let out = filter_frames(&manifest.records, &cfg, |r| store.pixels(r.id)).unwrap();
    assert_eq!(out.audit.len(), manifest.records.len());
    for v in 0..4 {
        assert!(out.kept.iter().any(|r| r.id == FrameId::new(v, 0)));
    }
    assert!(out.kept.len() < manifest.records.len());
    assert!(out.kept.len() >= 4);
    let kept: BTreeSet<FrameId> = out.kept.iter().map(|r| r.id).collect();
    let flagged: BTreeSet<FrameId> = out.audit.iter().filter(|a| a.kept).map(|a| a.id).collect();
    assert_eq!(kept, flagged);
}
