//! Binary checkpoints.
//!
//! Layout, all little-endian: magic `TDKSIM01`, u64 n_modes, u64 n_y, f64 t, τ, ε, δ, r, L_x,
//! y_max, then re/im pairs of w̄ (mode-major, y fastest) and of A, then the CRC32 of everything
//! before the trailer as u32.

use num_complex::Complex64;
use std::path::Path;

use crate::deck::DeckState;
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField, SurfaceSpectrum};

pub const MAGIC: &[u8; 8] = b"TDKSIM01";
const HEADER_LEN: usize = 8 + 2 * 8 + 7 * 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub state: DeckState,
    pub tau: f64,
    pub delta: f64,
    pub r: f64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let g = self.state.grid();
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * (g.n_modes() * (g.n_y() + 1)) + 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(g.n_modes() as u64).to_le_bytes());
        out.extend_from_slice(&(g.n_y() as u64).to_le_bytes());
        for v in [self.state.t, self.tau, self.state.eps, self.delta, self.r, g.lx(), g.y_max()] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for z in self.state.wbar.data().iter().chain(self.state.a.data()) {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| Error::CorruptCheckpoint(m.to_string());
        if bytes.len() < HEADER_LEN + 4 {
            return Err(corrupt("file shorter than the header"));
        }
        if &bytes[..8] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(trailer.try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let (n_modes, n_y) = (u64_at(8), u64_at(16));
        let cells = n_modes.checked_mul(n_y.checked_add(1).ok_or_else(|| corrupt("dimension overflow"))?);
        let expected = cells.and_then(|c| c.checked_mul(16)).and_then(|c| c.checked_add((HEADER_LEN + 4) as u64));
        if expected != Some(bytes.len() as u64) {
            return Err(corrupt("length does not match the stored dimensions"));
        }
        if crc32fast::hash(body) != stored {
            return Err(corrupt("CRC mismatch"));
        }
        let s: Vec<f64> = (0..7).map(|k| f64_at(24 + 8 * k)).collect();
        let (t, tau, eps, delta, r, lx, y_max) = (s[0], s[1], s[2], s[3], s[4], s[5], s[6]);
        let grid = Grid::new(n_modes as usize, lx, n_y as usize, y_max)
            .map_err(|e| Error::CorruptCheckpoint(format!("stored grid is invalid: {e}")))?;
        let mut values = body[HEADER_LEN..]
            .chunks_exact(16)
            .map(|c| Complex64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap())));
        let nw = grid.n_modes() * grid.n_y();
        let wbar = SpectralField::from_vec(grid, values.by_ref().take(nw).collect())?;
        let a = SurfaceSpectrum::from_vec(grid, values.collect())?;
        let state = DeckState::new(wbar, a, t, eps).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        Ok(Self { state, tau, delta, r })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
