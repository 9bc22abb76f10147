mod common;

use std::collections::BTreeMap;
use std::fs;
use std::sync::atomic::{AtomicUsize, Ordering};

use bundlescope::checkpoint::{from_bytes, load_checkpoint, save_checkpoint, to_bytes, Checkpoint};
use bundlescope::config_file::load_config_file;
use bundlescope::report::{emit_summary_json, entropy_csv, read_entropy_csv, to_sorted_json, RunSummary};
use bundlescope::runner::{cell_file_name, run_grid_with, RunOptions};
use bundlescope::Error;
use bundlescope_core::bundle::EntropyRecord;
use bundlescope_core::experiment::{earliest_conflict, grid_cells, run_toy_experiment, CellResult, CellSpec, ToyVariant};
use bundlescope_core::nn::{he_init, ArchitectureSpec, TrainingLog};
use bundlescope_core::TrainConfig;
use proptest::prelude::*;

fn record_strategy(depth: usize) -> impl Strategy<Value = EntropyRecord> {
    (
        0usize..60,
        proptest::collection::vec(0.0f64..2.302585, depth),
        proptest::collection::vec(1usize..2048, depth),
        1usize..=2048,
    )
        .prop_map(|(step, h, k, probe_size)| EntropyRecord {
            step,
            per_layer_entropy: h,
            per_layer_bundle_count: k,
            probe_size,
        })
}

fn records_from_rows(rows: &[bundlescope::report::EntropyRow]) -> Vec<EntropyRecord> {
    let mut by_epoch: BTreeMap<usize, EntropyRecord> = BTreeMap::new();
    for r in rows {
        let e = by_epoch.entry(r.epoch).or_insert_with(|| EntropyRecord {
            step: r.epoch,
            per_layer_entropy: Vec::new(),
            per_layer_bundle_count: Vec::new(),
            probe_size: r.probe_size,
        });
        e.per_layer_entropy.push(r.bundle_entropy);
        e.per_layer_bundle_count.push(r.num_bundles);
    }
    by_epoch.into_values().collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn entropy_csv_round_trips_and_reemits_identically(
        depth in 1usize..6,
        seed_records in proptest::collection::vec(record_strategy(6), 1..8),
    ) {
        // distinct epochs, equal depth
        let records: Vec<EntropyRecord> = seed_records
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                r.step = i * 3 + r.step % 3;
                r.per_layer_entropy.truncate(depth);
                r.per_layer_bundle_count.truncate(depth);
                r
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("entropy.csv");
        let first = entropy_csv(&records).unwrap();
        fs::write(&path, &first).unwrap();
        let rows = read_entropy_csv(&path).unwrap();
        prop_assert_eq!(rows.len(), records.len() * depth);
        for (row, (r, l)) in rows.iter().zip(records.iter().flat_map(|r| (0..depth).map(move |l| (r, l)))) {
            prop_assert_eq!(row.epoch, r.step);
            prop_assert_eq!(row.layer, l + 1);
            prop_assert_eq!(row.num_bundles, r.per_layer_bundle_count[l]);
            let h = r.per_layer_entropy[l];
            prop_assert!((row.bundle_entropy - h).abs() <= 1e-8 * h.abs().max(1e-300));
        }
        let again = entropy_csv(&records_from_rows(&rows)).unwrap();
        prop_assert_eq!(first, again);
    }

    #[test]
    fn checkpoints_round_trip_bit_exact(
        input in 1usize..10,
        widths in proptest::collection::vec(1usize..12, 1..5),
        classes in 2usize..6,
        seed in any::<u64>(),
        epoch in 0usize..100,
    ) {
        let depth = widths.len();
        let arch = ArchitectureSpec::new(input, widths, classes, vec![false; depth]).unwrap();
        let ckpt = Checkpoint {
            params: he_init(&arch, seed),
            arch,
            config: TrainConfig { seed, ..Default::default() },
            seed,
            epoch,
        };
        let bytes = to_bytes(&ckpt).unwrap();
        let back = from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &ckpt);
        let bits = |c: &Checkpoint| -> Vec<u64> {
            c.params.weights.iter().flat_map(|w| w.as_slice().to_vec())
                .chain(c.params.biases.iter().flatten().copied())
                .map(f64::to_bits).collect()
        };
        prop_assert_eq!(bits(&back), bits(&ckpt));
        prop_assert_eq!(to_bytes(&back).unwrap(), bytes);
    }

    #[test]
    fn truncated_checkpoints_never_load(seed in any::<u64>(), cut in 0.0f64..1.0) {
        let arch = ArchitectureSpec::uniform(4, 6, 3, 3).unwrap();
        let bytes = to_bytes(&Checkpoint {
            params: he_init(&arch, seed),
            arch,
            config: TrainConfig::default(),
            seed,
            epoch: 1,
        }).unwrap();
        let n = ((bytes.len() - 1) as f64 * cut) as usize;
        let err = from_bytes(&bytes[..n]).unwrap_err();
        prop_assert!(
            matches!(err, Error::BadMagic { .. } | Error::LengthMismatch { .. } | Error::Header(_)),
            "{err:?}"
        );
    }
}

#[test]
fn checkpoint_files_round_trip_and_leave_no_temporaries() {
    let arch = ArchitectureSpec::uniform_residual(5, 5, 3, 10).unwrap();
    let ckpt = Checkpoint {
        params: he_init(&arch, 9),
        arch,
        config: TrainConfig::default(),
        seed: 9,
        epoch: 4,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&path, &ckpt).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), ckpt);
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("model.ckpt")]);
    assert!(matches!(load_checkpoint(&dir.path().join("missing")), Err(Error::Io { .. })));
}

#[test]
fn corrupt_header_is_a_header_error() {
    let arch = ArchitectureSpec::uniform(2, 2, 1, 2).unwrap();
    let mut bytes = to_bytes(&Checkpoint {
        params: he_init(&arch, 0),
        arch,
        config: TrainConfig::default(),
        seed: 0,
        epoch: 0,
    })
    .unwrap();
    bytes[16] = b'[';
    assert!(matches!(from_bytes(&bytes), Err(Error::Header(_))));
}

fn toy_summary() -> RunSummary {
    let config = TrainConfig {
        epochs: 3,
        ..Default::default()
    };
    let report = run_toy_experiment(ToyVariant::ConflictBalanced, &config).unwrap();
    let mut s = RunSummary::new("toy", &config);
    s.arch = Some(report.arch.clone());
    s.final_accuracy = Some(report.last().train_accuracy);
    s.final_train_accuracy = Some(report.last().train_accuracy);
    s.output_means = Some(report.last().output_means.clone());
    s.layer_entropy = report.layer_entropy.clone();
    s.bundle_entropy_last_layer = report.layer_entropy.last().copied();
    s.first_conflicting_layer = earliest_conflict(&report.records());
    s.wall_clock_seconds = 0.5;
    s
}

#[test]
fn summary_json_matches_schema_and_reemits_identically() {
    let schema: serde_json::Value = serde_json::from_str(&fs::read_to_string(common::schema_path()).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();

    let summary = toy_summary();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("summary.json");
    emit_summary_json(&summary, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");

    let parsed: RunSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, summary);
    assert_eq!(to_sorted_json(&parsed).unwrap(), text);

    let empty = serde_json::to_value(RunSummary::new("grid", &TrainConfig::default())).unwrap();
    assert!(validator.is_valid(&empty));

    let mut bad = value.clone();
    bad["layer_entropy"] = serde_json::json!([-0.5]);
    assert!(!validator.is_valid(&bad));
    let mut bad = value;
    bad.as_object_mut().unwrap().remove("config");
    assert!(!validator.is_valid(&bad));
}

fn fake_result(cell: CellSpec, seed: u64) -> CellResult {
    let h = cell.depth as f64 / (cell.width as f64 + 1.0);
    CellResult {
        cell,
        seed,
        test_accuracy: 1.0 / (1.0 + h),
        layer_entropy: vec![h; cell.depth],
        first_conflicting_layer: (h > 0.5).then_some(1),
        records: Vec::new(),
        log: TrainingLog::default(),
    }
}

#[test]
fn resume_skips_every_persisted_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cells = grid_cells(&[2, 4, 8], &[1, 2, 3, 4]).unwrap();
    let config = TrainConfig::default();
    let options = RunOptions {
        workers: 3,
        out_dir: Some(dir.path().to_path_buf()),
        resume: true,
    };

    // first pass dies on some cells
    let calls = AtomicUsize::new(0);
    let first = run_grid_with(
        &cells,
        &config,
        &options,
        |c| {
            calls.fetch_add(1, Ordering::SeqCst);
            if c.depth == 3 {
                Err(bundlescope_core::Error::InvalidConfig("interrupted".into()))
            } else {
                Ok(fake_result(c, config.seed))
            }
        },
        |_| {},
    )
    .unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 12);
    assert_eq!(first.cells.len(), 9);
    assert_eq!(first.failures.len(), 3);
    for c in &first.cells {
        assert!(dir.path().join("cells").join(cell_file_name(&c.result.cell)).is_file());
    }

    let calls = AtomicUsize::new(0);
    let second = run_grid_with(
        &cells,
        &config,
        &options,
        |c| {
            calls.fetch_add(1, Ordering::SeqCst);
            assert_eq!(c.depth, 3, "completed cell {c:?} was recomputed");
            Ok(fake_result(c, config.seed))
        },
        |_| {},
    )
    .unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 3);
    assert_eq!((second.computed, second.resumed), (3, 9));
    assert!(second.failures.is_empty());
    let got: Vec<CellSpec> = second.cells.iter().map(|c| c.result.cell).collect();
    assert_eq!(got, cells);
    for (a, b) in first.cells.iter().zip(second.cells.iter().filter(|c| c.result.cell.depth != 3)) {
        assert_eq!(a, b);
    }
}

#[test]
fn resume_recomputes_cells_from_other_settings_or_damaged_files() {
    let dir = tempfile::tempdir().unwrap();
    let cells = grid_cells(&[3], &[1, 2]).unwrap();
    let options = RunOptions {
        workers: 1,
        out_dir: Some(dir.path().to_path_buf()),
        resume: true,
    };
    let config = TrainConfig::default();
    let run = |config: &TrainConfig| {
        let calls = AtomicUsize::new(0);
        run_grid_with(
            &cells,
            config,
            &options,
            |c| {
                calls.fetch_add(1, Ordering::SeqCst);
                Ok(fake_result(c, config.seed))
            },
            |_| {},
        )
        .unwrap();
        calls.into_inner()
    };
    assert_eq!(run(&config), 2);
    assert_eq!(run(&config), 0);
    let other = TrainConfig {
        epochs: 7,
        ..config.clone()
    };
    assert_eq!(run(&other), 2);
    fs::write(dir.path().join("cells").join(cell_file_name(&cells[0])), "{ truncated").unwrap();
    assert_eq!(run(&other), 1);
}

#[test]
fn without_resume_every_cell_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cells = grid_cells(&[3, 5], &[1]).unwrap();
    let config = TrainConfig::default();
    let mut options = RunOptions {
        workers: 2,
        out_dir: Some(dir.path().to_path_buf()),
        resume: false,
    };
    for _ in 0..2 {
        let r = run_grid_with(&cells, &config, &options, |c| Ok(fake_result(c, 0)), |_| {}).unwrap();
        assert_eq!(r.computed, 2);
    }
    options.resume = true;
    let r = run_grid_with(&cells, &config, &options, |c| Ok(fake_result(c, 0)), |_| {}).unwrap();
    assert_eq!(r.resumed, 2);
}

#[test]
fn config_files_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(&path, "# quick run\nepochs = 4\nseed = 11\ngamma = 1e-6\n").unwrap();
    let c = load_config_file(&TrainConfig::default(), &path).unwrap();
    assert_eq!((c.epochs, c.seed, c.gamma), (4, 11, 1e-6));
    assert!(matches!(
        load_config_file(&TrainConfig::default(), &dir.path().join("nope.conf")),
        Err(Error::Io { .. })
    ));
}
