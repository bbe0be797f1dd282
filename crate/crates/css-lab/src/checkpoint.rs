//! Field checkpoint files.
//!
//! Layout (little-endian throughout): magic bytes `CSSL`, format version
//! `u32`, `n: u32`, `L: f64`, `t: f64`, `g: f64`, then `n*n` complex
//! samples of `phi` as interleaved `f64` pairs in row-major order.
//! Round trips are bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{Interactions, SimulationState};
use crate::field::{ComplexField, Space};
use crate::grid::SpectralGrid;

pub const MAGIC: [u8; 4] = *b"CSSL";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 + 4 + 8 + 8 + 8;

pub fn write_checkpoint(path: &Path, state: &SimulationState) -> Result<()> {
    if state.g.im != 0.0 {
        return Err(Error::parameter(
            "checkpoint format version 1 stores a real coupling; state has Im(g) != 0",
        ));
    }
    state.phi.require_space(Space::Physical)?;
    let grid = state.phi.grid();
    let mut buf: Vec<u8> =
        Vec::with_capacity(HEADER_LEN as usize + 16 * grid.n() * grid.n());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.length().to_le_bytes());
    buf.extend_from_slice(&state.t.to_le_bytes());
    buf.extend_from_slice(&state.g.re.to_le_bytes());
    for v in state.phi.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Read a checkpoint; the gauge configuration is re-solved from the
/// stored field and the step counter restarts at zero.
pub fn read_checkpoint(path: &Path) -> Result<SimulationState> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;

    let need = |offset: u64, len: u64| -> Result<()> {
        if (bytes.len() as u64) < offset + len {
            Err(Error::CheckpointFormat {
                offset,
                msg: format!(
                    "file truncated: need {} bytes, have {}",
                    offset + len,
                    bytes.len()
                ),
            })
        } else {
            Ok(())
        }
    };

    need(0, 4)?;
    if bytes[0..4] != MAGIC {
        return Err(Error::CheckpointFormat {
            offset: 0,
            msg: format!("bad magic bytes {:?}, expected {:?}", &bytes[0..4], MAGIC),
        });
    }
    need(4, 4)?;
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::CheckpointFormat {
            offset: 4,
            msg: format!("unsupported format version {version}, expected {FORMAT_VERSION}"),
        });
    }
    need(8, 4)?;
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    need(12, 24)?;
    let length = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let t = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let g = f64::from_le_bytes(bytes[28..36].try_into().unwrap());

    let samples = n
        .checked_mul(n)
        .ok_or_else(|| Error::CheckpointFormat {
            offset: 8,
            msg: format!("grid size {n} overflows"),
        })?;
    need(HEADER_LEN, 16 * samples as u64)?;
    if bytes.len() as u64 != HEADER_LEN + 16 * samples as u64 {
        return Err(Error::CheckpointFormat {
            offset: HEADER_LEN + 16 * samples as u64,
            msg: "trailing bytes after the sample block".into(),
        });
    }

    let grid = SpectralGrid::new(n, length)?;
    let mut values = Vec::with_capacity(samples);
    let mut cursor = HEADER_LEN as usize;
    for _ in 0..samples {
        let re = f64::from_le_bytes(bytes[cursor..cursor + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[cursor + 8..cursor + 16].try_into().unwrap());
        values.push(Complex64::new(re, im));
        cursor += 16;
    }
    let phi = ComplexField::from_values(grid, Space::Physical, values)?;
    let mut state = SimulationState::new(phi, t, Complex64::new(g, 0.0), Interactions::Full)?;
    state.step_index = 0;
    Ok(state)
}
