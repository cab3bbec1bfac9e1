//! The puzzle bundle directory: `manifest.json` plus one 8-bit RGB PNG per
//! scrambled piece under `pieces/`.

use std::fs;
use std::path::Path;

use puzzle_cm_core::puzzle::{ProblemType, PuzzleBundle};
use serde::{Deserialize, Serialize};

use crate::imgio::{load_piece, save_piece};
use crate::{CliError, CliResult};

const FORMAT_VERSION: &str = "pzb1";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: String,
    rows: usize,
    cols: usize,
    piece_size: usize,
    erosion_width: usize,
    problem_type: String,
    permutation: Vec<usize>,
    rotations: Vec<u16>,
    source_id: String,
}

/// Writes `manifest.json` and `pieces/<index>.png` (5-digit zero-padded
/// scrambled index). Pixel data is quantized to 8 bits; bundles produced by
/// the cut pipeline are already 8-bit-exact, so save/load round-trips.
pub fn save_bundle(bundle: &PuzzleBundle, dir: impl AsRef<Path>) -> CliResult<()> {
    let dir = dir.as_ref();
    bundle.validate()?;
    fs::create_dir_all(dir.join("pieces")).map_err(|e| CliError::io(dir, e))?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION.into(),
        rows: bundle.rows,
        cols: bundle.cols,
        piece_size: bundle.piece_size,
        erosion_width: bundle.erosion,
        problem_type: match bundle.problem_type {
            ProblemType::Type1 => "type1".into(),
            ProblemType::Type2 => "type2".into(),
        },
        permutation: bundle.permutation.clone(),
        rotations: bundle.rotations.iter().map(|&r| u16::from(r) * 90).collect(),
        source_id: bundle.source_id.clone(),
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    for (s, piece) in bundle.pieces.iter().enumerate() {
        save_piece(piece, dir.join("pieces").join(format!("{s:05}.png")))?;
    }
    Ok(())
}

pub fn load_bundle(dir: impl AsRef<Path>) -> CliResult<PuzzleBundle> {
    let dir = dir.as_ref();
    let path = dir.join("manifest.json");
    let raw = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&raw)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(CliError::Data(format!(
            "unsupported bundle format version {:?} (expected {FORMAT_VERSION:?})",
            manifest.format_version
        )));
    }
    let problem_type = match manifest.problem_type.as_str() {
        "type1" => ProblemType::Type1,
        "type2" => ProblemType::Type2,
        other => {
            return Err(CliError::Data(format!("unknown problem type {other:?}")));
        }
    };
    let n = manifest.rows * manifest.cols;
    let mut pieces = Vec::with_capacity(n);
    for s in 0..n {
        let piece_path = dir.join("pieces").join(format!("{s:05}.png"));
        if !piece_path.exists() {
            return Err(CliError::Data(format!(
                "manifest declares {n} pieces but {} is missing",
                piece_path.display()
            )));
        }
        let piece = load_piece(&piece_path, manifest.piece_size)?;
        pieces.push(if manifest.erosion_width > 0 {
            piece.erode(manifest.erosion_width)?
        } else {
            piece
        });
    }
    let rotations = manifest
        .rotations
        .iter()
        .map(|&deg| match deg {
            0 => Ok(0u8),
            90 => Ok(1),
            180 => Ok(2),
            270 => Ok(3),
            other => Err(CliError::Data(format!("invalid rotation {other} degrees"))),
        })
        .collect::<CliResult<Vec<u8>>>()?;
    let bundle = PuzzleBundle {
        rows: manifest.rows,
        cols: manifest.cols,
        piece_size: manifest.piece_size,
        erosion: manifest.erosion_width,
        problem_type,
        pieces,
        permutation: manifest.permutation,
        rotations,
        source_id: manifest.source_id,
    };
    bundle.validate()?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use puzzle_cm_core::image::Image;
    use puzzle_cm_core::puzzle::{cut_puzzle, scramble};

    fn sample_bundle(pt: ProblemType) -> PuzzleBundle {
        let data: Vec<u8> = (0..24 * 16 * 3).map(|v| (v % 256) as u8).collect();
        let img = Image::from_u8(24, 16, 3, &data).unwrap();
        let grid = cut_puzzle(&img, 8, None).unwrap().eroded(1).unwrap();
        scramble(&grid, pt, 7, "sample")
    }

    #[test]
    fn save_load_round_trips_bit_exactly() {
        for pt in [ProblemType::Type1, ProblemType::Type2] {
            let bundle = sample_bundle(pt);
            let dir = tempfile::tempdir().unwrap();
            save_bundle(&bundle, dir.path()).unwrap();
            let back = load_bundle(dir.path()).unwrap();
            assert_eq!(back, bundle);
        }
    }

    #[test]
    fn missing_piece_file_is_detected() {
        let bundle = sample_bundle(ProblemType::Type1);
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&bundle, dir.path()).unwrap();
        fs::remove_file(dir.path().join("pieces/00003.png")).unwrap();
        let err = load_bundle(dir.path()).unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
    }

    #[test]
    fn unknown_version_is_rejected() {
        let bundle = sample_bundle(ProblemType::Type1);
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&bundle, dir.path()).unwrap();
        let path = dir.path().join("manifest.json");
        let raw = fs::read_to_string(&path).unwrap().replace("pzb1", "pzb9");
        fs::write(&path, raw).unwrap();
        let err = load_bundle(dir.path()).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }
}
