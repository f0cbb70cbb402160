use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use alframe_core::io::manifest::{load_manifest, save_manifest};
use alframe_core::io::roundlog::{load_round_logs, parse_round_logs};
use alframe_core::io::state::load_state;
use alframe_core::io::tensor::{write_tensor, Tensor};
use alframe_core::{FrameId, FrameRecord, Split};
use tempfile::TempDir;

const K: usize = 3;
const H: usize = 4;
const W: usize = 4;

fn alframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alframe"))
        .args(args)
        .output()
        .expect("spawn alframe")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Five videos of `frames` frames: video 0 labeled, 1..=3 pool, 4 test.
/// Features spread on a circle, probmaps with varying sharpness, 1x4x4 pixels.
fn dataset(dir: &Path, frames: u32, skip_probmap: Option<FrameId>) -> PathBuf {
    fs::create_dir_all(dir.join("t")).unwrap();
    let mut records = Vec::new();
    for video in 0..5u32 {
        for index in 0..frames {
            let id = FrameId::new(video, index);
            let tag = format!("{video}_{index}");
            let a = (video * 31 + index * 7) as f64 * 0.13;
            let feat = vec![a.cos(), a.sin(), video as f64 * 0.5, (index % 5) as f64];
            let f = PathBuf::from(format!("t/f{tag}.tnsr"));
            write_tensor(dir.join(&f), &Tensor::f64(&[4], feat).unwrap()).unwrap();

            let sharp = 0.34 + 0.6 * ((index * 13 % 17) as f64 / 17.0);
            let mut probs = Vec::with_capacity(K * H * W);
            for c in 0..K {
                let p = if c == 0 { sharp } else { (1.0 - sharp) / (K - 1) as f64 };
                probs.extend(std::iter::repeat_n(p, H * W));
            }
            let p = PathBuf::from(format!("t/p{tag}.tnsr"));
            write_tensor(dir.join(&p), &Tensor::f64(&[K, H, W], probs).unwrap()).unwrap();

            let pixels: Vec<f64> = (0..H * W).map(|i| ((i as u32 + index / 2) % 4) as f64 / 4.0).collect();
            let px = PathBuf::from(format!("t/x{tag}.tnsr"));
            write_tensor(dir.join(&px), &Tensor::f64(&[1, H, W], pixels).unwrap()).unwrap();

            records.push(FrameRecord {
                id,
                feature_ref: f,
                probmap_ref: (Some(id) != skip_probmap).then_some(p),
                label_ref: None,
                pixel_ref: Some(px),
                split: match video {
                    0 => Split::Labeled,
                    4 => Split::Test,
                    _ => Split::Pool,
                },
            });
        }
    }
    let m = dir.join("manifest.csv");
    save_manifest(&m, &records).unwrap();
    m
}

struct Select<'a> {
    manifest: &'a Path,
    dir: &'a Path,
    strategy: &'a str,
    seed: &'a str,
}

impl Select<'_> {
    fn run(&self, extra: &[&str]) -> Output {
        let state = self.dir.join("state.json");
        let out = self.dir.join("ids.txt");
        let log = self.dir.join("log.csv");
        let mut args = vec![
            "select",
            "--manifest",
            s(self.manifest),
            "--state",
            s(&state),
            "--strategy",
            self.strategy,
            "--seed",
            self.seed,
            "--output",
            s(&out),
            "--log",
            s(&log),
        ];
        args.extend_from_slice(extra);
        alframe(&args)
    }
}

fn ids(path: &Path) -> Vec<FrameId> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.parse().unwrap()).collect()
}

#[test]
fn select_euclidean_fifty_from_fresh_pool() {
    let tmp = TempDir::new().unwrap();
    let m = dataset(tmp.path(), 60, None);
    let sel = Select { manifest: &m, dir: tmp.path(), strategy: "euclidean", seed: "7" };
    let o = sel.run(&["--budget", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let chosen = ids(&tmp.path().join("ids.txt"));
    assert_eq!(chosen.len(), 50);
    assert!(chosen.iter().all(|id| id.video == 1));
    let mut dedup = chosen.clone();
    dedup.sort();
    dedup.dedup();
    assert_eq!(dedup.len(), 50);

    let state = load_state(tmp.path().join("state.json")).unwrap();
    assert_eq!(state.round, 1);
    assert_eq!(state.labeled.len(), 110);
    assert!(!tmp.path().join("state.json.lock").exists());

    let (k, logs) = load_round_logs(tmp.path().join("log.csv")).unwrap();
    assert_eq!(k, K);
    assert_eq!(logs.len(), 1);
    assert_eq!(logs[0].round, 1);
    assert_eq!(logs[0].n_labeled, 110);
    assert_eq!(logs[0].selected, chosen);
}

#[test]
fn select_rounds_append_and_advance_videos() {
    let tmp = TempDir::new().unwrap();
    let m = dataset(tmp.path(), 20, None);
    for (strategy, video) in [("random", 1), ("entropy", 2), ("cosine", 3)] {
        let sel = Select { manifest: &m, dir: tmp.path(), strategy, seed: "3" };
        let o = sel.run(&["--budget", "10"]);
        assert!(o.status.success(), "{strategy}: {}", stderr(&o));
        let chosen = ids(&tmp.path().join("ids.txt"));
        assert_eq!(chosen.len(), 10);
        assert!(chosen.iter().all(|id| id.video == video));
    }
    let (_, logs) = load_round_logs(tmp.path().join("log.csv")).unwrap();
    let rounds: Vec<u64> = logs.iter().map(|l| l.round).collect();
    assert_eq!(rounds, [1, 2, 3]);
    assert_eq!(logs[2].n_labeled, 50);
}

#[test]
fn select_is_replayable() {
    let tmp = TempDir::new().unwrap();
    let m = dataset(tmp.path(), 30, None);
    let sel = Select { manifest: &m, dir: tmp.path(), strategy: "entropy", seed: "11" };
    let o = sel.run(&["--budget", "12", "--n-batches", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let state = tmp.path().join("state.json");
    let saved = fs::read(&state).unwrap();
    let first = fs::read(tmp.path().join("ids.txt")).unwrap();

    // second round, then roll the state back and replay it
    assert!(sel.run(&["--budget", "12", "--n-batches", "3"]).status.success());
    let round2 = fs::read(tmp.path().join("ids.txt")).unwrap();
    assert_ne!(first, round2);
    fs::write(&state, &saved).unwrap();
    assert!(sel.run(&["--budget", "12", "--n-batches", "3"]).status.success());
    assert_eq!(fs::read(tmp.path().join("ids.txt")).unwrap(), round2);
}

#[test]
fn missing_probmap_is_a_validation_error_and_leaves_state_alone() {
    let tmp = TempDir::new().unwrap();
    let m = dataset(tmp.path(), 20, Some(FrameId::new(1, 3)));
    let state = tmp.path().join("state.json");
    // bootstrap a state file with one random round on another video
    let boot = Select { manifest: &m, dir: tmp.path(), strategy: "random", seed: "5" };
    assert!(boot.run(&["--budget", "1", "--video", "2"]).status.success());
    let before_state = fs::read(&state).unwrap();
    let before_log = fs::read(tmp.path().join("log.csv")).unwrap();
    fs::remove_file(tmp.path().join("ids.txt")).unwrap();

    let sel = Select { manifest: &m, dir: tmp.path(), strategy: "entropy", seed: "5" };
    let o = sel.run(&["--video", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("1:3"), "{}", stderr(&o));
    assert_eq!(fs::read(&state).unwrap(), before_state);
    assert_eq!(fs::read(tmp.path().join("log.csv")).unwrap(), before_log);
    assert!(!tmp.path().join("ids.txt").exists());
    assert!(!tmp.path().join("state.json.lock").exists());
}

#[test]
fn held_lock_refuses_to_run() {
    let tmp = TempDir::new().unwrap();
    let m = dataset(tmp.path(), 10, None);
    fs::write(tmp.path().join("state.json.lock"), b"").unwrap();
    let sel = Select { manifest: &m, dir: tmp.path(), strategy: "random", seed: "1" };
    let o = sel.run(&[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!tmp.path().join("state.json").exists());
    assert!(tmp.path().join("state.json.lock").exists());
}

#[test]
fn select_flag_validation() {
    let tmp = TempDir::new().unwrap();
    let m = dataset(tmp.path(), 10, None);
    let sel = Select { manifest: &m, dir: tmp.path(), strategy: "entropy", seed: "1" };
    let o = sel.run(&["--budget", "3", "--n-batches", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("state.json").exists());

    // no seed
    let o = alframe(&["select", "--manifest", s(&m), "--state", "x", "--strategy", "random", "--output", "o", "--log", "l"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));

    let o = alframe(&["select", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));

    let sel = Select { manifest: &m, dir: tmp.path(), strategy: "greedy", seed: "1" };
    assert_eq!(sel.run(&[]).status.code(), Some(2));

    let missing = tmp.path().join("nope.csv");
    let sel = Select { manifest: &missing, dir: tmp.path(), strategy: "random", seed: "1" };
    assert_eq!(sel.run(&[]).status.code(), Some(1));
}

#[test]
fn score_is_read_only() {
    let tmp = TempDir::new().unwrap();
    let m = dataset(tmp.path(), 15, None);
    let out = tmp.path().join("scores.csv");
    let o = alframe(&["score", "--manifest", s(&m), "--strategy", "cosine", "--output", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("video,index,strategy,score,inter_norm,intra_norm"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r[0] == "1" && r[2] == "cosine" && !r[4].is_empty()));
    let scores: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let o = alframe(&["score", "--manifest", s(&m), "--strategy", "entropy", "--video", "3", "--output", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    // entropy has no distance components
    assert!(text.lines().skip(1).all(|l| l.starts_with("3,") && l.ends_with(",,")));

    let o = alframe(&["score", "--manifest", s(&m), "--strategy", "random", "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 3);
}

#[test]
fn preprocess_prunes_duplicates_and_writes_audit() {
    let tmp = TempDir::new().unwrap();
    let m = dataset(tmp.path(), 8, None);
    let out_dir = tmp.path().join("out");
    fs::create_dir(&out_dir).unwrap();
    let filtered = out_dir.join("filtered.csv");
    let audit = out_dir.join("audit.csv");
    let o = alframe(&[
        "preprocess",
        "--manifest",
        s(&m),
        "--output",
        s(&filtered),
        "--audit",
        s(&audit),
        "--dedup-threshold",
        "0.5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    // frames come in identical pairs, so every odd frame duplicates its predecessor
    let kept = load_manifest(&filtered).unwrap();
    assert_eq!(kept.records.len(), 5 * 4);
    assert!(kept.records.iter().all(|r| r.id.index % 2 == 0));

    let text = fs::read_to_string(&audit).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("video,index,blur_score,distance_to_last_kept,kept"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 40);
    assert_eq!(rows[0][3], "");
    assert_eq!(rows[0][4], "true");
    assert_eq!(rows[1][1], "1");
    assert_eq!(rows[1][3], "0.0");
    assert_eq!(rows[1][4], "false");
    assert_eq!(rows[2][4], "true");

    let o = alframe(&[
        "preprocess",
        "--manifest",
        s(&m),
        "--output",
        s(&filtered),
        "--audit",
        s(&audit),
        "--dedup-threshold",
        "1",
        "--dedup-percentile",
        "50",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = alframe(&["preprocess", "--manifest", s(&m), "--output", s(&filtered), "--audit", s(&audit)]);
    assert_eq!(o.status.code(), Some(2));
}

fn simulate(cfg: Option<&Path>, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--output", s(out)];
    if let Some(c) = cfg {
        args.extend(["--config", s(c)]);
    }
    args.extend_from_slice(extra);
    alframe(&args)
}

const SMALL: &str = r#"
[task]
n_videos = 4
frames_per_video = 30
classes = 4
height = 6
width = 6
dim = 6

[experiment]
seeds = [0, 1]
rounds = 2
budget = 10
"#;

#[test]
fn simulate_rows_summary_and_determinism() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("sim.toml");
    fs::write(&cfg, SMALL).unwrap();
    let a = tmp.path().join("a.csv");
    let o = simulate(Some(&cfg), &a, &[]);
    assert!(o.status.success(), "{}", stderr(&o));

    let (k, logs) = parse_round_logs(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(k, 4);
    // strategies * seeds * (rounds + 1) + one anchor per seed
    assert_eq!(logs.len(), 4 * 2 * 3 + 2);
    let header = fs::read_to_string(&a).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "strategy,seed,round,n_labeled,miou,iou_class_0,iou_class_1,iou_class_2,iou_class_3");

    let stdout = String::from_utf8(o.stdout).unwrap();
    let summary: Vec<&str> = stdout.lines().collect();
    assert_eq!(summary.len(), 5, "{stdout}");
    for name in ["random", "entropy", "euclidean", "cosine", "all data"] {
        assert!(summary.iter().any(|l| l.starts_with(name) && l.contains(" ± ")), "{stdout}");
    }

    let b = tmp.path().join("b.csv");
    assert!(simulate(Some(&cfg), &b, &[]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let z = tmp.path().join("z.csv");
    assert!(simulate(Some(&cfg), &z, &["--rounds", "0"]).status.success());
    let (_, logs) = parse_round_logs(&fs::read(&z).unwrap()).unwrap();
    assert_eq!(logs.len(), 4 * 2 + 2);
    assert!(logs.iter().all(|l| l.round == 0));
}

#[test]
fn default_simulation_row_count() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("curves.csv");
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let o = simulate(Some(&shipped), &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (k, logs) = parse_round_logs(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(k, 8);
    assert_eq!(logs.len(), 4 * 20 * 4 + 20);

    let builtin = tmp.path().join("builtin.csv");
    assert!(simulate(None, &builtin, &[]).status.success());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&builtin).unwrap());
}

#[test]
fn simulate_config_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("c.csv");
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[experiment]\nroundz = 3\n").unwrap();
    let o = simulate(Some(&cfg), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("roundz"));

    fs::write(&cfg, "[experiment]\ntemperature = -1.0\n").unwrap();
    assert_eq!(simulate(Some(&cfg), &out, &[]).status.code(), Some(2));

    fs::write(&cfg, SMALL).unwrap();
    assert_eq!(simulate(Some(&cfg), &out, &["--rounds", "9"]).status.code(), Some(2));

    let missing = tmp.path().join("missing.toml");
    assert_eq!(simulate(Some(&missing), &out, &[]).status.code(), Some(1));
    assert!(!out.exists());
}

fn write_log(path: &Path, k: usize, rows: &[&str]) {
    let mut text = String::from("strategy,seed,round,n_labeled,miou");
    for c in 0..k {
        text.push_str(&format!(",iou_class_{c}"));
    }
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

#[test]
fn report_single_row_and_class_subset() {
    let tmp = TempDir::new().unwrap();
    let log = tmp.path().join("one.csv");
    write_log(&log, 3, &["cosine,0,0,16,0.5,0.25,0.75,"]);
    let o = alframe(&["report", s(&log), "--classes", "2,1", "--names", "tip,shaft"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("| Round | Labeled | cosine |"), "{text}");
    assert!(text.contains("| Init | 16 | **0.5000** |"), "{text}");
    assert!(text.contains("| Round & strategy | Labeled | tip | shaft |"), "{text}");
    assert!(text.contains("| Init cosine | 16 | n/a | **0.7500** |"), "{text}");

    let out = tmp.path().join("report.md");
    assert!(alframe(&["report", s(&log), "--output", s(&out)]).status.success());
    assert_eq!(fs::read_to_string(&out).unwrap().matches("| Init").count(), 2);
}

#[test]
fn report_rejects_inconsistent_inputs() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    write_log(&a, 3, &["random,0,1,20,0.5,0.5,0.5,0.5"]);
    write_log(&b, 4, &["random,1,1,20,0.5,0.5,0.5,0.5,0.5"]);
    let o = alframe(&["report", s(&a), s(&b)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("classes"));

    assert_eq!(alframe(&["report", s(&a), "--classes", "7"]).status.code(), Some(2));
    assert_eq!(alframe(&["report", s(&a), "--classes", "0", "--names", "x,y"]).status.code(), Some(2));
    assert_eq!(alframe(&["report"]).status.code(), Some(2));
    let missing = tmp.path().join("missing.csv");
    assert_eq!(alframe(&["report", s(&missing)]).status.code(), Some(1));
}

#[test]
fn report_marks_the_best_strategy_per_class() {
    let tmp = TempDir::new().unwrap();
    let log = tmp.path().join("r3.csv");
    write_log(
        &log,
        6,
        &[
            "random,0,3,222,,0.2094,0.7497,0.7065,0.8501,0.5131,0.0994",
            "entropy,0,3,222,,0.2407,0.7500,0.7578,0.8617,0.5224,0.2671",
            "euclidean,0,3,222,,0.2609,0.7497,0.7452,0.8544,0.5452,0.3529",
            "cosine,0,3,222,,0.2616,0.7501,0.7425,0.8569,0.5449,0.3391",
            "all,0,3,440,,0.2523,0.7749,0.7413,0.8694,0.5386,0.1417",
        ],
    );
    let o = alframe(&["report", s(&log), "--classes", "5", "--names", "rare"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("| R3 euclidean | 222 | **0.3529** |"), "{text}");
    assert!(text.contains("| R3 random | 222 | 0.0994 |"), "{text}");
    assert!(text.contains("| All data | 440 | 0.1417 |"), "{text}");
}
