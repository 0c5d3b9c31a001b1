// Temporary timing/tuning probe; removed once pipeline defaults are pinned.
use std::time::Instant;

use asdbench::dataset::{build_index, load_wav, Condition, Domain, Split};
use asdbench::detectors::{score_ae, train_ae, AeConfig};
use asdbench::nnet::TrainConfig;
use asdbench::pipeline::{run_detection, DetectorKind, PipelineConfig};
use asdbench::rng;
use asdbench::synth::{generate_dataset, read_ground_truth, SynthConfig};

#[test]
#[ignore]
fn probe_cell_scores() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    let probe_seed: u64 = std::env::var("PROBE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(7);
    let index = generate_dataset(&SynthConfig::mini(probe_seed), &root).unwrap();
    let truth = read_ground_truth(root.join("ground_truth.csv")).unwrap();

    for (batch, epochs, lr) in [(64usize, 10usize, 1e-3)] {
        println!("=== batch {batch} epochs {epochs} lr {lr}");
        for machine in ["motor", "pump"] {
            for section in 0..3u8 {
                let t = Instant::now();
                let cfg = AeConfig {
                    train: TrainConfig {
                        epochs,
                        batch_size: batch,
                        learning_rate: lr,
                        seed: rng::derive_seed(probe_seed, &format!("run/ae/{machine}/{section}")),
                        ..TrainConfig::default()
                    },
                    ..AeConfig::default()
                };
                let (ae, hist) = train_ae(&index, machine, section, &cfg).unwrap();
                let mut sums = std::collections::BTreeMap::new();
                for (path, meta) in index.select(machine, section, Some(Split::Test), None) {
                    let clip = load_wav(path).unwrap();
                    let score = score_ae(&ae, &clip).unwrap();
                    let fname = path.file_name().unwrap().to_string_lossy().into_owned();
                    let row = truth
                        .iter()
                        .find(|r| r.filename == fname && r.machine == machine)
                        .unwrap();
                    let entry = sums
                        .entry((meta.domain, row.condition))
                        .or_insert((0.0f64, 0usize, f64::MAX, f64::MIN));
                    entry.0 += score;
                    entry.1 += 1;
                    entry.2 = entry.2.min(score);
                    entry.3 = entry.3.max(score);
                }
                print!(
                    "{machine}/{section}: loss {:.3} -> {:.4} | ",
                    hist[0],
                    hist.last().unwrap()
                );
                for ((d, c), (sum, n, lo, hi)) in &sums {
                    let tag = match (d, c) {
                        (Domain::Source, Condition::Normal) => "sN",
                        (Domain::Source, Condition::Anomaly) => "sA",
                        (Domain::Target, Condition::Normal) => "tN",
                        (Domain::Target, Condition::Anomaly) => "tA",
                        _ => "??",
                    };
                    print!("{tag} {:.2}[{:.2},{:.2}] ", sum / *n as f64, lo, hi);
                }
                println!("({:?})", t.elapsed());
            }
        }
    }
    let _ = build_index(&root).unwrap();
}

#[test]
#[ignore]
fn probe_mini_run_timing() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    let t0 = Instant::now();
    let probe_seed: u64 = std::env::var("PROBE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = SynthConfig::mini(probe_seed);
    let index = generate_dataset(&cfg, &root).unwrap();
    println!("generate: {:?} ({} clips)", t0.elapsed(), index.clips.len());

    let t1 = Instant::now();
    let pipeline = PipelineConfig {
        dataset_root: root.clone(),
        work_dir: dir.path().join("work"),
        detector: DetectorKind::Ae,
        seed: probe_seed,
        ..PipelineConfig::default()
    };
    let summary = run_detection(&pipeline).unwrap();
    println!(
        "run: {:?} ({} test clips scored)",
        t1.elapsed(),
        summary.scored_test_clips
    );

    let t2 = Instant::now();
    let report = asdbench::pipeline::evaluate_submission(
        summary.submission_dir,
        asdbench::pipeline::ground_truth_path(&root),
        &pipeline.metrics,
    )
    .unwrap();
    println!("evaluate: {:?}", t2.elapsed());
    println!("{}", asdbench::report::report_to_table(&report));
    println!("total: {:?}", t0.elapsed());
}
