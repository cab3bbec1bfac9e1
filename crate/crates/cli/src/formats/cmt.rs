//! The binary score-tensor file: magic "CMT1", u32 piece count, u8 problem
//! type (1 or 2), three reserved bytes, then the `N*4*N*4` scores as 32-bit
//! little-endian reals in `[i][r_i][j][r_j]` row-major order. Sentinels are
//! IEEE +inf.

use std::fs;
use std::io::Write;
use std::path::Path;

use puzzle_cm_core::cm::CmTensor;
use puzzle_cm_core::puzzle::ProblemType;

use crate::{CliError, CliResult};

const MAGIC: &[u8; 4] = b"CMT1";

pub fn save_cm_tensor(tensor: &CmTensor, path: impl AsRef<Path>) -> CliResult<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(12 + tensor.raw().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(tensor.n() as u32).to_le_bytes());
    out.push(match tensor.problem_type() {
        ProblemType::Type1 => 1,
        ProblemType::Type2 => 2,
    });
    out.extend_from_slice(&[0u8; 3]);
    for v in tensor.raw() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    file.write_all(&out).map_err(|e| CliError::io(path, e))?;
    Ok(())
}

pub fn load_cm_tensor(path: impl AsRef<Path>) -> CliResult<CmTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.len() < 12 || &bytes[0..4] != MAGIC {
        return Err(CliError::Data(format!(
            "{} is not a CMT1 tensor file",
            path.display()
        )));
    }
    let n = u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
    let problem_type = match bytes[8] {
        1 => ProblemType::Type1,
        2 => ProblemType::Type2,
        other => {
            return Err(CliError::Data(format!("invalid problem type byte {other}")));
        }
    };
    let expect = 12 + n * 4 * n * 4 * 4;
    if bytes.len() != expect {
        return Err(CliError::Data(format!(
            "tensor file holds {} bytes, N={n} needs {expect}",
            bytes.len()
        )));
    }
    let scores: Vec<f32> = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(CmTensor::from_raw(n, problem_type, scores)?)
}
