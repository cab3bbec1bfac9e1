//! Placement files: JSON with the grid dimensions and per-cell
//! `[piece_index, rotation_degrees]` entries (null for empty cells).

use std::fs;
use std::path::Path;

use puzzle_cm_core::solver::Placement;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Debug, Serialize, Deserialize)]
struct PlacementFile {
    rows: usize,
    cols: usize,
    cells: Vec<Option<(usize, u16)>>,
}

pub fn save_placement(placement: &Placement, path: impl AsRef<Path>) -> CliResult<()> {
    let path = path.as_ref();
    let file = PlacementFile {
        rows: placement.rows,
        cols: placement.cols,
        cells: placement
            .cells
            .iter()
            .map(|c| c.map(|(p, q)| (p, u16::from(q) * 90)))
            .collect(),
    };
    fs::write(path, serde_json::to_string_pretty(&file)?).map_err(|e| CliError::io(path, e))
}

pub fn load_placement(path: impl AsRef<Path>) -> CliResult<Placement> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: PlacementFile = serde_json::from_str(&raw)?;
    if file.cells.len() != file.rows * file.cols {
        return Err(CliError::Data(format!(
            "placement has {} cells for a {}x{} grid",
            file.cells.len(),
            file.rows,
            file.cols
        )));
    }
    let cells = file
        .cells
        .iter()
        .map(|c| match c {
            None => Ok(None),
            Some((p, deg)) => match deg {
                0 | 90 | 180 | 270 => Ok(Some((*p, (deg / 90) as u8))),
                other => Err(CliError::Data(format!("invalid rotation {other} degrees"))),
            },
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Placement {
        rows: file.rows,
        cols: file.cols,
        cells,
    })
}
