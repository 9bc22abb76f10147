//! Command-line front end.
//!
//! Every command writes its machine-readable output under `--out` and
//! progress lines to stderr. Exit status is 0 on success, 1 when a run
//! fails and 2 for usage errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bundlescope_core::bundle::{training_bundle_entropy, EntropyRecord};
use bundlescope_core::data::{probe_subset, toy_dataset, Dataset, Split};
use bundlescope_core::experiment::{
    auto_tune, correlate, earliest_conflict, grid_cells, run_toy_experiment, train_probed, CellSpec, ToyVariant,
    WidthSchedule, ACCURACY_TAIL_EPOCHS,
};
use bundlescope_core::nn::{he_init, mean_output, ArchitectureSpec, ModelParams, TrainingLog};
use bundlescope_core::TrainConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::checkpoint::{save_checkpoint, Checkpoint};
use crate::config_file::load_config_file;
use crate::error::{Error, IoContext, Result};
use crate::mnist::{load_mnist_dir, resolve_mnist_dir, MNIST_DIR_ENV};
use crate::report::{boundary_csv, emit_entropy_csv, emit_json, emit_summary_json, grid_csv, RunSummary};
use crate::runner::{self, GridCell, Progress, RunOptions};

pub const ENTROPY_FILE: &str = "entropy.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CHECKPOINT_FILE: &str = "model.ckpt";

/// The held-out toy split is drawn from a separate seed.
const TOY_TEST_SEED_OFFSET: u64 = 0x5eed_7e57;

#[derive(Debug, Parser)]
#[command(name = "bundlescope", version, about = "Conflicting-bundle experiments on dense ReLU networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-neuron toy study: clean, fully conflicting, or conflicting on imbalanced data.
    Toy {
        #[arg(long, value_enum)]
        variant: ToyChoice,
        #[command(flatten)]
        common: Common,
    },
    /// One training run with bundle probing after every epoch.
    Train {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        depth: usize,
        /// Identity skip connections around equal-width hidden layers.
        #[arg(long)]
        residual: bool,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: Common,
    },
    /// First conflicting layer of the deepest network of each width.
    Boundary {
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<usize>,
        #[arg(long)]
        max_depth: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Train every (width, depth) cell and correlate bundle entropy with accuracy.
    Grid {
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        depths: Vec<usize>,
        #[arg(long)]
        residual: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Reuse cells already finished under --out with the same settings.
        #[arg(long)]
        resume: bool,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Remove layers from the first conflicting one on until training is conflict-free.
    Autotune {
        #[arg(long)]
        max_depth: usize,
        #[arg(long)]
        width: usize,
        /// Epochs trained before a conflict is acted on.
        #[arg(long)]
        probe_epochs: Option<usize>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToyChoice {
    Clean,
    Conflict,
    Imbalanced,
}

impl From<ToyChoice> for ToyVariant {
    fn from(c: ToyChoice) -> Self {
        match c {
            ToyChoice::Clean => ToyVariant::Clean,
            ToyChoice::Conflict => ToyVariant::ConflictBalanced,
            ToyChoice::Imbalanced => ToyVariant::ConflictImbalanced,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetChoice {
    Mnist,
    Toy,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long, value_enum, default_value_t = DatasetChoice::Toy)]
    pub dataset: DatasetChoice,
    /// Directory holding the four MNIST IDX files.
    #[arg(long, env = MNIST_DIR_ENV)]
    pub mnist_dir: Option<PathBuf>,
    /// Training samples for the toy dataset (the test split has as many).
    #[arg(long, default_value_t = 1000)]
    pub toy_samples: usize,
}

/// Options shared by every command. Explicit flags override the config file.
#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub out: PathBuf,
    /// Flat `key = value` file with training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Bundling resolution.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Training samples used for bundle probes.
    #[arg(long)]
    pub eval_subset_size: Option<usize>,
    /// Random shifts and brightness changes of MNIST images during training.
    #[arg(long)]
    pub augment: bool,
}

impl Common {
    fn config(&self) -> Result<TrainConfig> {
        let mut c = match &self.config {
            Some(path) => load_config_file(&TrainConfig::default(), path)?,
            None => TrainConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.learning_rate {
            c.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = self.weight_decay {
            c.weight_decay = v;
        }
        if let Some(v) = self.gamma {
            c.gamma = v;
        }
        if let Some(v) = self.eval_subset_size {
            c.eval_subset_size = v;
        }
        c.augment |= self.augment;
        c.validate()?;
        Ok(c)
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).at(&self.out)?;
        Ok(&self.out)
    }
}

fn load_data(args: &DataArgs, seed: u64) -> Result<(Dataset, Dataset)> {
    match args.dataset {
        DatasetChoice::Mnist => {
            let dir = resolve_mnist_dir(args.mnist_dir.as_deref())?;
            eprintln!("loading MNIST from {}", dir.display());
            load_mnist_dir(&dir)
        }
        DatasetChoice::Toy => {
            let train = toy_dataset(args.toy_samples, 0.5, seed)?;
            let held_out = toy_dataset(args.toy_samples, 0.5, seed.wrapping_add(TOY_TEST_SEED_OFFSET))?;
            Ok((train, Dataset::new(held_out.samples().clone(), Split::Test)))
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    match cli.command {
        Command::Toy { variant, common } => toy(variant.into(), &common, start),
        Command::Train {
            width,
            depth,
            residual,
            data,
            common,
        } => train(CellSpec { width, depth, residual }, &data, &common, start),
        Command::Boundary {
            widths,
            max_depth,
            workers,
            data,
            common,
        } => boundary(&widths, max_depth, workers, &data, &common, start),
        Command::Grid {
            widths,
            depths,
            residual,
            workers,
            resume,
            data,
            common,
        } => {
            let cells: Vec<CellSpec> = grid_cells(&widths, &depths)?
                .into_iter()
                .map(|c| CellSpec { residual, ..c })
                .collect();
            grid(&cells, workers, resume, &data, &common, start)
        }
        Command::Autotune {
            max_depth,
            width,
            probe_epochs,
            data,
            common,
        } => autotune(max_depth, width, probe_epochs, &data, &common, start),
    }
}

fn fill_entropy(summary: &mut RunSummary, records: &[EntropyRecord]) -> Result<()> {
    summary.layer_entropy = training_bundle_entropy(records)?;
    summary.bundle_entropy_last_layer = summary.layer_entropy.last().copied();
    summary.first_conflicting_layer = earliest_conflict(records);
    Ok(())
}

fn tail_train_accuracy(log: &TrainingLog) -> Option<f64> {
    let tail: Vec<f64> = log
        .epochs
        .iter()
        .rev()
        .take(ACCURACY_TAIL_EPOCHS)
        .map(|e| e.train_accuracy)
        .collect();
    (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
}

fn write_model(out: &Path, arch: &ArchitectureSpec, params: &ModelParams, config: &TrainConfig, epoch: usize) -> Result<()> {
    save_checkpoint(
        &out.join(CHECKPOINT_FILE),
        &Checkpoint {
            arch: arch.clone(),
            params: params.clone(),
            config: config.clone(),
            seed: config.seed,
            epoch,
        },
    )
}

fn finish(mut summary: RunSummary, out: &Path, start: Instant) -> Result<()> {
    summary.wall_clock_seconds = start.elapsed().as_secs_f64();
    emit_summary_json(&summary, &out.join(SUMMARY_FILE))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn toy(variant: ToyVariant, common: &Common, start: Instant) -> Result<()> {
    let config = common.config()?;
    let out = common.out_dir()?;
    eprintln!("toy {variant:?}: {} epochs, seed {}", config.epochs, config.seed);
    let report = run_toy_experiment(variant, &config)?;
    let records = report.records();
    let last = report.last();
    eprintln!(
        "epoch {}: train accuracy {:.4}, output means {:?}, last-layer entropy {:.6}",
        last.epoch,
        last.train_accuracy,
        last.output_means,
        last.entropy.last_layer_entropy()
    );

    emit_entropy_csv(&records, &out.join(ENTROPY_FILE))?;
    emit_json(&report, &out.join("toy.json"))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["input", "derivative"])?;
    for (x, d) in report.gradient.inputs.iter().zip(&report.gradient.derivatives) {
        w.write_record([crate::report::fmt_real(*x), crate::report::fmt_real(*d)])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    crate::checkpoint::write_atomic(&out.join("gradient.csv"), &bytes)?;
    write_model(out, &report.arch, &report.params, &config, report.log.epochs.len())?;

    let mut summary = RunSummary::new("toy", &config);
    summary.arch = Some(report.arch.clone());
    summary.final_accuracy = Some(last.train_accuracy);
    summary.final_train_accuracy = Some(last.train_accuracy);
    summary.output_means = Some(last.output_means.clone());
    fill_entropy(&mut summary, &records)?;
    finish(summary, out, start)
}

fn train(cell: CellSpec, data: &DataArgs, common: &Common, start: Instant) -> Result<()> {
    let config = common.config()?;
    let out = common.out_dir()?;
    let (train_set, test_set) = load_data(data, config.seed)?;
    let arch = cell.arch(train_set.input_dim(), train_set.num_classes())?;
    let probe = probe_subset(&train_set, config.eval_subset_size, config.seed);
    eprintln!(
        "train width {} depth {}{}: {} epochs, seed {}",
        cell.width,
        cell.depth,
        if cell.residual { " residual" } else { "" },
        config.epochs,
        config.seed
    );
    let run = train_probed(
        he_init(&arch, config.seed),
        &arch,
        &train_set,
        Some(&test_set),
        &config,
        &probe,
        |r| {
            eprintln!("epoch {}: last-layer entropy {:.6}", r.step, r.last_layer_entropy());
            false
        },
    )?;

    emit_entropy_csv(&run.records, &out.join(ENTROPY_FILE))?;
    emit_json(&run.log, &out.join("log.json"))?;
    write_model(out, &arch, &run.params, &config, run.log.epochs.len())?;

    let mut summary = RunSummary::new("train", &config);
    summary.final_accuracy = run.log.tail_test_accuracy(ACCURACY_TAIL_EPOCHS);
    summary.final_train_accuracy = tail_train_accuracy(&run.log);
    summary.output_means = Some(mean_output(&run.params, &arch, train_set.inputs())?);
    summary.arch = Some(arch);
    fill_entropy(&mut summary, &run.records)?;
    finish(summary, out, start)
}

fn boundary(widths: &[usize], max_depth: usize, workers: usize, data: &DataArgs, common: &Common, start: Instant) -> Result<()> {
    let mut config = common.config()?;
    if let Some(e) = common.epochs {
        config.boundary_epochs = e;
    }
    let out = common.out_dir()?;
    let (train_set, _) = load_data(data, config.seed)?;
    let found = runner::find_boundary(widths, max_depth, &train_set, &config, workers, |p| {
        eprintln!("width {}: first conflicting layer {:?}", p.width, p.first_conflicting_layer)
    })?;
    crate::checkpoint::write_atomic(&out.join("boundary.csv"), &boundary_csv(&found)?)?;
    emit_json(&found, &out.join("boundary.json"))?;
    finish(RunSummary::new("boundary", &config), out, start)
}

#[derive(Serialize)]
struct GridSummary<'a> {
    cells: usize,
    computed: usize,
    resumed: usize,
    failures: &'a [runner::CellFailure],
    spearman: Option<f64>,
    pearson: Option<f64>,
}

fn grid(cells: &[CellSpec], workers: usize, resume: bool, data: &DataArgs, common: &Common, start: Instant) -> Result<()> {
    let config = common.config()?;
    let out = common.out_dir()?;
    let (train_set, test_set) = load_data(data, config.seed)?;
    let options = RunOptions {
        workers,
        out_dir: Some(out.to_path_buf()),
        resume,
    };
    eprintln!("grid: {} cells, {} workers, {} epochs", cells.len(), workers, config.epochs);
    let result = runner::grid_experiment(cells, &train_set, Some(&test_set), &config, &options, |p| match p {
        Progress::Resumed(c) => eprintln!("resumed width {} depth {}", c.width, c.depth),
        Progress::Done(GridCell { result: r, seconds, .. }) => eprintln!(
            "done width {} depth {}: accuracy {:.4}, entropy {:.6}, conflict {:?}, {:.1}s",
            r.cell.width,
            r.cell.depth,
            r.test_accuracy,
            r.bundle_entropy(),
            r.first_conflicting_layer,
            seconds
        ),
        Progress::Failed(f) => eprintln!("failed width {} depth {}: {}", f.cell.width, f.cell.depth, f.error),
    })?;

    crate::checkpoint::write_atomic(&out.join("grid.csv"), &grid_csv(&result.cells)?)?;
    let finished: Vec<_> = result.cells.iter().map(|c| c.result.clone()).collect();
    let corr = correlate(&finished).ok();
    if let Some(c) = &corr {
        eprintln!("spearman {:.4}, pearson {:.4} over {} cells", c.spearman, c.pearson, c.cells);
    }
    emit_json(
        &GridSummary {
            cells: cells.len(),
            computed: result.computed,
            resumed: result.resumed,
            failures: &result.failures,
            spearman: corr.as_ref().map(|c| c.spearman),
            pearson: corr.as_ref().map(|c| c.pearson),
        },
        &out.join("grid.json"),
    )?;
    finish(RunSummary::new("grid", &config), out, start)?;
    if result.failures.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{} of {} cells failed", result.failures.len(), cells.len())))
    }
}

fn autotune(
    max_depth: usize,
    width: usize,
    probe_epochs: Option<usize>,
    data: &DataArgs,
    common: &Common,
    start: Instant,
) -> Result<()> {
    let mut config = common.config()?;
    if let Some(p) = probe_epochs {
        config.probe_epochs = p;
    }
    let out = common.out_dir()?;
    let (train_set, test_set) = load_data(data, config.seed)?;
    eprintln!("autotune width {width} from depth {max_depth}");
    let result = auto_tune(max_depth, &WidthSchedule::Uniform(width), &train_set, Some(&test_set), &config)?;
    for (i, r) in result.trace.rounds.iter().enumerate() {
        eprintln!(
            "round {}: depth {} probed to epoch {}, first conflicting layer {:?} -> depth {}",
            i + 1,
            r.arch_before.depth(),
            r.epoch_probed,
            r.first_conflicting_layer,
            r.arch_after.depth()
        );
    }

    emit_entropy_csv(&result.records, &out.join(ENTROPY_FILE))?;
    emit_json(&result.trace, &out.join("prune_trace.json"))?;
    emit_json(&result.log, &out.join("log.json"))?;
    write_model(out, &result.arch, &result.params, &config, result.log.epochs.len())?;

    let mut summary = RunSummary::new("autotune", &config);
    summary.final_accuracy = result.log.tail_test_accuracy(ACCURACY_TAIL_EPOCHS);
    summary.final_train_accuracy = tail_train_accuracy(&result.log);
    summary.arch = Some(result.arch.clone());
    summary.prune_trace = Some(result.trace.clone());
    fill_entropy(&mut summary, &result.records)?;
    finish(summary, out, start)
}
