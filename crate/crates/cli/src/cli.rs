//! Command-line surface: dataset cutting, synthetic data, training, score
//! tensors, reconstruction, and the benchmark harness.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use puzzle_cm_core::classical::ClassicalKind;
use puzzle_cm_core::cm::{
    compute_cm, gallagher_rescale, minmax_scale, symmetrize, top1_accuracy, Backend,
};
use puzzle_cm_core::net::{ModelConfig, ModelParams};
use puzzle_cm_core::puzzle::{cut_puzzle, scramble, ProblemType};
use puzzle_cm_core::solver::{greedy_solve, neighbor_accuracy, perfect_reconstruction};
use puzzle_cm_core::trainer::{train_pair_scorer, PairTrainConfig, TrainConfig};

use crate::bench::{loglog_slope, run_bench, BenchBackend};
use crate::error::{CliError, CliResult};
use crate::exec::Threads;
use crate::formats::{
    load_bundle, load_checkpoint, load_cm_tensor, load_pair_checkpoint, peek_checkpoint_kind,
    save_bundle, save_checkpoint, save_cm_tensor, save_pair_checkpoint, save_placement,
    CheckpointKind,
};
use crate::imgio::{load_image, save_image};
use crate::render::{save_board, save_distance_heatmap};
use crate::synth::synth_image;
use crate::train_io::{list_images, prepare_corpus, train_with_log, DataConfig};

/// Compatibility-measure toolkit for square jigsaw puzzles: cut and scramble
/// images, train the edge-embedding scorer, compute pairwise score tensors,
/// reconstruct boards, and benchmark the backends.
#[derive(Parser)]
#[command(name = "puzzle-cm", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for the compute-heavy steps (default: all CPUs).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Cut every image in a directory into a scrambled puzzle bundle.
    Cut(CutArgs),
    /// Generate deterministic synthetic photographs.
    Synth(SynthArgs),
    /// Train the edge-embedding network (or the pair proxy) on a directory
    /// of images.
    Train(TrainArgs),
    /// Compute the pairwise score tensor of a bundle with some backend.
    Cm(CmArgs),
    /// Reconstruct a bundle from a score tensor and report accuracy.
    Solve(SolveArgs),
    /// Wall-clock and accounting benchmark across puzzle sizes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CutArgs {
    /// Directory of PNG/JPEG images.
    #[arg(long)]
    input: PathBuf,
    /// Output directory (one bundle subdirectory per image).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 28)]
    piece_size: usize,
    /// Outer frame pixels to zero on every piece.
    #[arg(long, default_value_t = 0)]
    erosion: usize,
    #[arg(long = "type", value_enum, default_value_t = TypeArg::Type1)]
    problem_type: TypeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Integer bicubic downscale factor applied before cutting.
    #[arg(long, default_value_t = 1)]
    downscale: usize,
    /// Center-crop the grid so a bundle has at most this many pieces.
    #[arg(long)]
    max_pieces: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TypeArg {
    Type1,
    Type2,
}

impl From<TypeArg> for ProblemType {
    fn from(t: TypeArg) -> Self {
        match t {
            TypeArg::Type1 => ProblemType::Type1,
            TypeArg::Type2 => ProblemType::Type2,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 476)]
    height: usize,
    #[arg(long, default_value_t = 504)]
    width: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of training images.
    #[arg(long)]
    corpus: PathBuf,
    /// JSON config (see --print-config for the defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output checkpoint directory.
    #[arg(long, required_unless_present = "print_config")]
    out: Option<PathBuf>,
    /// JSONL training log (default: <out>/train_log.jsonl).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Start from an existing checkpoint instead of a seeded init.
    #[arg(long)]
    init_checkpoint: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config epoch count.
    #[arg(long)]
    epochs: Option<usize>,
    /// Override the config batch size.
    #[arg(long)]
    batch: Option<usize>,
    /// Override the config learning rate.
    #[arg(long)]
    lr: Option<f32>,
    /// Print the default config JSON and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct CmArgs {
    /// Bundle directory.
    #[arg(long)]
    bundle: PathBuf,
    /// ssd | l1 | pbc | mgc | edge2vec | e2e_proxy | oracle (debug).
    #[arg(long)]
    backend: String,
    /// Checkpoint directory (required for edge2vec / e2e_proxy).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PostArg::None)]
    postprocess: PostArg,
    /// Output CMT1 tensor file.
    #[arg(long)]
    out: PathBuf,
    /// Optional distance-map PNG.
    #[arg(long)]
    heatmap: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PostArg {
    /// Raw scores.
    None,
    /// Per-anchor min-max scaling.
    Scaled,
    /// Scaling plus mirror-pose averaging.
    Symmetric,
    /// Scaling, averaging, and second-best confidence rescaling.
    Rescaled,
}

#[derive(Args)]
struct SolveArgs {
    /// CMT1 tensor file.
    #[arg(long)]
    cm: PathBuf,
    /// Bundle directory (for dimensions, ground truth, and rendering).
    #[arg(long)]
    bundle: PathBuf,
    /// Output placement JSON.
    #[arg(long)]
    out: PathBuf,
    /// Optional assembled-board PNG.
    #[arg(long)]
    render: Option<PathBuf>,
    /// Reconstruction engine (hook for future engines).
    #[arg(long, default_value = "greedy")]
    solver: String,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated puzzle sizes.
    #[arg(long, value_delimiter = ',', default_values_t = vec![100usize, 200, 400, 800])]
    sizes: Vec<usize>,
    /// Comma-separated backends.
    #[arg(long, value_delimiter = ',', default_values_t = vec!["edge2vec".to_string(), "e2e_proxy".to_string()])]
    backends: Vec<String>,
    /// Timed repetitions per point (median reported).
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[arg(long, default_value_t = 28)]
    piece_size: usize,
    /// JSONL report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// The training config file: `model` and `train` mirror the library
/// config fields, `data` controls corpus preparation.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainFile {
    pub model: ModelSection,
    pub train: TrainSection,
    pub data: DataConfig,
    /// "triplet" trains the embedding network; "pair_bce" trains the
    /// end-to-end pair proxy on adjacency labels.
    pub objective: Objective,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub piece_size: usize,
    pub channels_in: usize,
    pub conv_channels: [usize; 4],
    pub embedding_dim: usize,
    pub groups: usize,
    pub twin_mode: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = ModelConfig::default();
        Self {
            piece_size: d.piece_size,
            channels_in: d.channels_in,
            conv_channels: d.conv_channels,
            embedding_dim: d.embedding_dim,
            groups: d.groups,
            twin_mode: d.twin,
        }
    }
}

impl From<ModelSection> for ModelConfig {
    fn from(m: ModelSection) -> Self {
        ModelConfig {
            piece_size: m.piece_size,
            channels_in: m.channels_in,
            conv_channels: m.conv_channels,
            embedding_dim: m.embedding_dim,
            groups: m.groups,
            twin: m.twin_mode,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub margin: f32,
    pub lambda: f32,
    pub batch: usize,
    pub learning_rate: f32,
    pub lr_decay: f32,
    pub plateau_epochs: usize,
    pub iters_per_epoch: usize,
    pub epochs: usize,
    pub intra_fraction: f32,
    pub hbt_enabled: bool,
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            margin: d.margin,
            lambda: d.lambda,
            batch: d.batch,
            learning_rate: d.learning_rate,
            lr_decay: d.lr_decay,
            plateau_epochs: d.plateau_epochs,
            iters_per_epoch: d.iters_per_epoch,
            epochs: d.epochs,
            intra_fraction: d.intra_fraction,
            hbt_enabled: d.hbt_enabled,
            seed: d.seed,
        }
    }
}

impl From<TrainSection> for TrainConfig {
    fn from(t: TrainSection) -> Self {
        TrainConfig {
            margin: t.margin,
            lambda: t.lambda,
            batch: t.batch,
            learning_rate: t.learning_rate,
            lr_decay: t.lr_decay,
            plateau_epochs: t.plateau_epochs,
            iters_per_epoch: t.iters_per_epoch,
            epochs: t.epochs,
            intra_fraction: t.intra_fraction,
            hbt_enabled: t.hbt_enabled,
            seed: t.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Triplet,
    PairBce,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let workers = cli
        .workers
        .map(Threads)
        .unwrap_or_else(Threads::available);
    match cli.command {
        Command::Cut(args) => cmd_cut(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => cmd_train(args, &workers),
        Command::Cm(args) => cmd_cm(args, &workers),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args, &workers),
    }
}

fn cmd_cut(args: CutArgs) -> CliResult<()> {
    let paths = list_images(&args.input)?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    println!("bundle\trows\tcols\tpieces");
    for (i, path) in paths.iter().enumerate() {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("image")
            .to_string();
        let img = load_image(path)?.downscale_bicubic(args.downscale.max(1))?;
        let grid = cut_puzzle(&img, args.piece_size, args.max_pieces)?.eroded(args.erosion)?;
        let bundle = scramble(
            &grid,
            args.problem_type.into(),
            args.seed.wrapping_add(i as u64),
            &stem,
        );
        save_bundle(&bundle, args.out.join(&stem))?;
        println!("{stem}\t{}\t{}\t{}", bundle.rows, bundle.cols, bundle.len());
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> CliResult<()> {
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    for i in 0..args.count {
        let img = synth_image(args.height, args.width, args.seed.wrapping_add(i as u64));
        let path = args.out.join(format!("synth_{i:03}.png"));
        save_image(&img, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_train(args: TrainArgs, workers: &Threads) -> CliResult<()> {
    let mut file: TrainFile = match &args.config {
        Some(path) => {
            let raw = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&raw)?
        }
        None => TrainFile::default(),
    };
    if args.print_config {
        println!("{}", serde_json::to_string_pretty(&file)?);
        return Ok(());
    }
    let out = args.out.expect("clap enforces --out");
    if let Some(seed) = args.seed {
        file.train.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        file.train.epochs = epochs;
    }
    if let Some(batch) = args.batch {
        file.train.batch = batch;
    }
    if let Some(lr) = args.lr {
        file.train.learning_rate = lr;
    }

    let model_cfg: ModelConfig = file.model.clone().into();
    let train_cfg: TrainConfig = file.train.clone().into();
    let paths = list_images(&args.corpus)?;
    let (corpus, validation) =
        prepare_corpus(&paths, &model_cfg, &file.data, train_cfg.seed)?;
    println!(
        "corpus: {} training images, {} validation puzzles",
        corpus.images.len(),
        validation.len()
    );

    let log_path = args
        .log
        .clone()
        .unwrap_or_else(|| out.join("train_log.jsonl"));
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;

    match file.objective {
        Objective::Triplet => {
            let initial = match &args.init_checkpoint {
                Some(dir) => {
                    let params = load_checkpoint(dir)?;
                    if params.config() != &model_cfg {
                        return Err(CliError::Data(
                            "init checkpoint architecture differs from the config".into(),
                        ));
                    }
                    params
                }
                None => ModelParams::init(model_cfg, train_cfg.seed)?,
            };
            let result = train_with_log(
                initial,
                &corpus,
                &train_cfg,
                &validation,
                workers,
                Some(&log_path),
                |r| {
                    println!(
                        "epoch {:>3}  loss {:.5}  lr {:.2e}  top1(t1) {}  top1(t2) {}  {:.1}s",
                        r.epoch,
                        r.mean_loss,
                        r.lr,
                        r.val_top1_type1.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
                        r.val_top1_type2.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
                        r.wall_secs,
                    );
                },
            )?;
            save_checkpoint(&result.params, &out)?;
        }
        Objective::PairBce => {
            let pair_cfg = model_cfg.pair_proxy();
            let cfg = PairTrainConfig {
                batch: train_cfg.batch,
                learning_rate: train_cfg.learning_rate,
                steps: train_cfg.epochs * train_cfg.iters_per_epoch,
                seed: train_cfg.seed,
            };
            let (params, losses) = train_pair_scorer(&corpus, pair_cfg, &cfg, workers)?;
            save_pair_checkpoint(&params, &out)?;
            let per_epoch = train_cfg.iters_per_epoch.max(1);
            for (epoch, chunk) in losses.chunks(per_epoch).enumerate() {
                let mean = chunk.iter().sum::<f64>() / chunk.len() as f64;
                println!("epoch {epoch:>3}  loss {mean:.5}");
            }
        }
    }
    println!("checkpoint written to {}", out.display());
    println!("log written to {}", log_path.display());
    Ok(())
}

fn cmd_cm(args: CmArgs, workers: &Threads) -> CliResult<()> {
    let bundle = load_bundle(&args.bundle)?;
    let embed_params;
    let pair_params;
    let backend = match args.backend.as_str() {
        "ssd" => Backend::Classical(ClassicalKind::Ssd),
        "l1" => Backend::Classical(ClassicalKind::L1),
        "pbc" => Backend::Classical(ClassicalKind::Pbc),
        "mgc" => Backend::Classical(ClassicalKind::Mgc),
        "oracle" => Backend::Oracle,
        "edge2vec" => {
            let dir = args.checkpoint.as_ref().ok_or_else(|| {
                CliError::Usage("backend edge2vec needs --checkpoint".into())
            })?;
            if peek_checkpoint_kind(dir)? != CheckpointKind::Embedding {
                return Err(CliError::Data(
                    "checkpoint does not hold an embedding model".into(),
                ));
            }
            embed_params = load_checkpoint(dir)?;
            Backend::Embedding(&embed_params)
        }
        "e2e_proxy" => {
            let dir = args.checkpoint.as_ref().ok_or_else(|| {
                CliError::Usage("backend e2e_proxy needs --checkpoint".into())
            })?;
            if peek_checkpoint_kind(dir)? != CheckpointKind::PairProxy {
                return Err(CliError::Data(
                    "checkpoint does not hold a pair-proxy model".into(),
                ));
            }
            pair_params = load_pair_checkpoint(dir)?;
            Backend::E2eProxy(&pair_params)
        }
        other => {
            return Err(CliError::Usage(format!("unknown backend {other:?}")));
        }
    };

    let (mut tensor, stats) = compute_cm(&bundle, &backend, workers)?;
    if stats.embed_passes > 0 {
        println!("embedding forward passes: {}", stats.embed_passes);
    }
    if stats.pair_passes > 0 {
        println!("pair forward passes: {}", stats.pair_passes);
    }

    if args.postprocess != PostArg::None {
        let s = minmax_scale(&mut tensor);
        if s.constant_rows > 0 {
            eprintln!("warning: {} constant anchor rows mapped to zero", s.constant_rows);
        }
    }
    if matches!(args.postprocess, PostArg::Symmetric | PostArg::Rescaled) {
        symmetrize(&mut tensor);
    }
    if args.postprocess == PostArg::Rescaled {
        let s = gallagher_rescale(&mut tensor);
        if s.zero_second_best > 0 {
            eprintln!(
                "warning: {} anchor rows had a zero second-best score",
                s.zero_second_best
            );
        }
    }

    let top1 = top1_accuracy(&tensor, &bundle)?;
    println!("top-1 accuracy: {top1:.4}");
    save_cm_tensor(&tensor, &args.out)?;
    println!("tensor written to {}", args.out.display());
    if let Some(path) = &args.heatmap {
        save_distance_heatmap(&tensor, &bundle, path)?;
        println!("heatmap written to {}", path.display());
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> CliResult<()> {
    if args.solver != "greedy" {
        return Err(CliError::Usage(format!(
            "unknown solver {:?} (available: greedy)",
            args.solver
        )));
    }
    let bundle = load_bundle(&args.bundle)?;
    let mut tensor = load_cm_tensor(&args.cm)?;
    if tensor.n() != bundle.len() || tensor.problem_type() != bundle.problem_type {
        return Err(CliError::Data(format!(
            "tensor covers {} pieces ({:?}), bundle has {} ({:?})",
            tensor.n(),
            tensor.problem_type(),
            bundle.len(),
            bundle.problem_type
        )));
    }
    gallagher_rescale(&mut tensor);
    let placement = greedy_solve(&tensor, bundle.rows, bundle.cols)?;
    let acc = neighbor_accuracy(&placement, &bundle)?;
    let perfect = perfect_reconstruction(&placement, &bundle)?;
    println!("neighbor accuracy: {acc:.4}");
    println!("perfect reconstruction: {perfect}");
    save_placement(&placement, &args.out)?;
    println!("placement written to {}", args.out.display());
    if let Some(path) = &args.render {
        save_board(&bundle, &placement, path)?;
        println!("board written to {}", path.display());
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs, workers: &Threads) -> CliResult<()> {
    let backends = args
        .backends
        .iter()
        .map(|b| BenchBackend::parse(b))
        .collect::<CliResult<Vec<_>>>()?;
    println!("backend\tn\twall_secs\tanalytic_gmacs\tparams");
    let records = run_bench(
        &backends,
        &args.sizes,
        args.repeat,
        args.piece_size,
        workers,
        |r| {
            println!(
                "{}\t{}\t{:.4}\t{}\t{}",
                r.backend,
                r.n,
                r.wall_secs,
                r.analytic_gmacs.map(|g| format!("{g:.1}")).unwrap_or_else(|| "-".into()),
                r.params.map(|p| p.to_string()).unwrap_or_else(|| "-".into()),
            );
        },
    )?;
    for backend in &backends {
        if let Some(slope) = loglog_slope(&records, backend.name(), 0) {
            println!("{} log-log slope: {slope:.3}", backend.name());
        }
    }
    if let Some(path) = &args.out {
        let mut lines = String::new();
        for r in &records {
            lines.push_str(&serde_json::to_string(r)?);
            lines.push('\n');
        }
        fs::write(path, lines).map_err(|e| CliError::io(path, e))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

/// Writes a default config file next to nothing in particular; used by docs
/// and tests.
pub fn default_train_file_json() -> String {
    serde_json::to_string_pretty(&TrainFile::default()).expect("serializable defaults")
}
