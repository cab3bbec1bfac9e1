//! Training orchestration on top of the core engine: corpus preparation
//! from image files, per-epoch wall-clock timing, and the JSON-lines log.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use puzzle_cm_core::net::ModelConfig;
use puzzle_cm_core::puzzle::{cut_puzzle, scramble, ProblemType, PuzzleBundle};
use puzzle_cm_core::trainer::{train_from, Corpus, TrainConfig, TrainOutput};
use puzzle_cm_core::{net::ModelParams, ParallelMap};
use serde::{Deserialize, Serialize};

use crate::imgio::load_image;
use crate::{CliError, CliResult};

/// One JSONL record per epoch.
#[derive(Debug, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub lr: f32,
    pub val_top1_type1: Option<f64>,
    pub val_top1_type2: Option<f64>,
    pub wall_secs: f64,
}

/// Dataset preparation settings for `train`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub erosion: usize,
    pub downscale: usize,
    /// Images held out from the end of the (sorted) corpus for validation.
    pub validation_images: usize,
    /// Pieces kept per validation puzzle (center crop).
    pub validation_pieces: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            erosion: 1,
            downscale: 1,
            validation_images: 2,
            validation_pieces: 100,
        }
    }
}

/// Paths of the image files in a corpus directory, sorted by name.
pub fn list_images(dir: impl AsRef<Path>) -> CliResult<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(str::to_lowercase).as_deref(),
                Some("png" | "jpg" | "jpeg")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(format!(
            "no PNG/JPEG images under {}",
            dir.display()
        )));
    }
    Ok(paths)
}

/// Cuts corpus images into eroded training grids plus Type-1 validation
/// bundles built from the trailing images.
pub fn prepare_corpus(
    paths: &[PathBuf],
    model: &ModelConfig,
    data: &DataConfig,
    seed: u64,
) -> CliResult<(Corpus, Vec<PuzzleBundle>)> {
    if paths.len() <= data.validation_images {
        return Err(CliError::Data(format!(
            "corpus has {} images but {} are reserved for validation",
            paths.len(),
            data.validation_images
        )));
    }
    let split = paths.len() - data.validation_images;
    let mut train_grids = Vec::with_capacity(split);
    for path in &paths[..split] {
        let img = load_image(path)?.downscale_bicubic(data.downscale.max(1))?;
        train_grids.push(cut_puzzle(&img, model.piece_size, None)?.eroded(data.erosion)?);
    }
    let mut validation = Vec::new();
    for (i, path) in paths[split..].iter().enumerate() {
        let img = load_image(path)?.downscale_bicubic(data.downscale.max(1))?;
        let grid = cut_puzzle(&img, model.piece_size, Some(data.validation_pieces))?
            .eroded(data.erosion)?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("val");
        validation.push(scramble(
            &grid,
            ProblemType::Type1,
            seed.wrapping_add(i as u64),
            name,
        ));
    }
    Ok((Corpus::new(train_grids), validation))
}

/// Runs the core trainer, timing each epoch and appending JSONL records to
/// `log` as they complete.
pub fn train_with_log(
    initial: ModelParams<f32>,
    corpus: &Corpus,
    cfg: &TrainConfig,
    validation: &[PuzzleBundle],
    mapper: &impl ParallelMap,
    log: Option<&Path>,
    mut echo: impl FnMut(&EpochRecord),
) -> CliResult<TrainOutput> {
    let mut writer = match log {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
                }
            }
            Some(fs::File::create(path).map_err(|e| CliError::io(path, e))?)
        }
        None => None,
    };
    let mut last = Instant::now();
    let mut io_error: Option<CliError> = None;
    let out = train_from(initial, corpus, cfg, validation, mapper, |stats| {
        let record = EpochRecord {
            epoch: stats.epoch,
            mean_loss: stats.mean_loss,
            lr: stats.lr,
            val_top1_type1: stats.val_top1_type1,
            val_top1_type2: stats.val_top1_type2,
            wall_secs: last.elapsed().as_secs_f64(),
        };
        last = Instant::now();
        if let Some(w) = writer.as_mut() {
            let line = serde_json::to_string(&record).expect("serializable record");
            if let Err(e) = writeln!(w, "{line}").and_then(|()| w.flush()) {
                io_error.get_or_insert(CliError::Io {
                    path: "train log".into(),
                    source: e,
                });
            }
        }
        echo(&record);
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    Ok(out)
}
