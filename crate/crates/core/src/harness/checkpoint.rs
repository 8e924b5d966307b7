//! Versioned binary snapshots of a particle run or a mean-field grid.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "QWAVECKP"
//! version  u32
//! kind     u8       1 = particles, 2 = grid
//! length   u64      payload bytes
//! payload
//! sha256   32 bytes of the payload
//! ```
//!
//! Floats are stored as their bit patterns, and a particle checkpoint holds
//! the generator's key, stream and word position, so a resumed run draws
//! exactly the numbers the uninterrupted run would have drawn.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::mfm::GridCdf;
use crate::particle::{ParticleState, SortedPositions, Storage};
use crate::rng::SimRng;

use super::{HarnessError, Result};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"QWAVECKP";
pub const CHECKPOINT_VERSION: u32 = 1;

const KIND_PARTICLES: u8 = 1;
const KIND_GRID: u8 = 2;
const HEADER_LEN: usize = 8 + 4 + 1 + 8;

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Checkpoint {
    Particles { state: ParticleState, rng: SimRng },
    Grid { time: f64, grid: GridCdf },
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u128(&mut self, v: u128) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(malformed(self.path, "payload ends early"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().expect("16 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn len(&mut self, elem: usize) -> Result<usize> {
        let n = self.u64()? as usize;
        if n.checked_mul(elem).is_none_or(|b| b > self.buf.len()) {
            return Err(malformed(self.path, "length exceeds the payload"));
        }
        Ok(n)
    }
}

fn malformed(path: &Path, reason: &str) -> HarnessError {
    HarnessError::Malformed {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn encode(cp: &Checkpoint) -> (u8, Vec<u8>) {
    let mut w = Writer(Vec::new());
    match cp {
        Checkpoint::Particles { state, rng } => {
            w.u8(matches!(state.storage(), Storage::Chunked) as u8);
            w.f64(state.clock());
            w.f64(state.running_sum());
            match state.pending_event() {
                Some(t) => {
                    w.u8(1);
                    w.f64(t);
                }
                None => {
                    w.u8(0);
                    w.f64(0.0);
                }
            }
            w.u64(state.n() as u64);
            for x in state.iter() {
                w.f64(x);
            }
            w.0.extend_from_slice(&rng.get_seed());
            w.u64(rng.get_stream());
            w.u128(rng.get_word_pos());
            (KIND_PARTICLES, w.0)
        }
        Checkpoint::Grid { time, grid } => {
            w.f64(*time);
            w.f64(grid.x0());
            w.f64(grid.dx());
            w.u64(grid.len() as u64);
            for &v in grid.values() {
                w.f64(v);
            }
            (KIND_GRID, w.0)
        }
    }
}

fn decode(kind: u8, payload: &[u8], path: &Path) -> Result<Checkpoint> {
    let mut r = Reader { buf: payload, path };
    let cp = match kind {
        KIND_PARTICLES => {
            let storage = if r.u8()? == 1 { Storage::Chunked } else { Storage::Flat };
            let clock = r.f64()?;
            let sum = r.f64()?;
            let pending = match (r.u8()?, r.f64()?) {
                (0, _) => None,
                (_, t) => Some(t),
            };
            let n = r.len(8)?;
            let x = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            if x.windows(2).any(|w| w[1] < w[0]) {
                return Err(malformed(path, "positions are not sorted"));
            }
            let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
            let stream = r.u64()?;
            let word_pos = r.u128()?;
            let mut state =
                ParticleState::from_parts(&x, clock, pending).map_err(|e| malformed(path, &e.to_string()))?;
            state.positions = SortedPositions::from_sorted(x, storage);
            state.sum = sum;
            let mut rng = <SimRng as rand::SeedableRng>::from_seed(seed);
            rng.set_stream(stream);
            rng.set_word_pos(word_pos);
            Checkpoint::Particles { state, rng }
        }
        KIND_GRID => {
            let time = r.f64()?;
            let x0 = r.f64()?;
            let dx = r.f64()?;
            let n = r.len(8)?;
            let values = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let grid = GridCdf::new(x0, dx, values).map_err(|e| malformed(path, &e.to_string()))?;
            Checkpoint::Grid { time, grid }
        }
        other => return Err(malformed(path, &format!("unknown record kind {other}"))),
    };
    if !r.buf.is_empty() {
        return Err(malformed(path, "trailing bytes after the record"));
    }
    Ok(cp)
}

pub fn save_checkpoint(cp: &Checkpoint, path: &Path) -> Result<()> {
    let (kind, payload) = encode(cp);
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 32);
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(kind);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&Sha256::digest(&payload));
    // written beside the target and renamed into place
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &out).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    if bytes.len() < 8 || bytes[..8] != CHECKPOINT_MAGIC {
        return Err(HarnessError::BadMagic { path: path.to_path_buf() });
    }
    if bytes.len() < HEADER_LEN {
        return Err(malformed(path, "header ends early"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(HarnessError::VersionMismatch {
            path: path.to_path_buf(),
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let kind = bytes[12];
    let len = u64::from_le_bytes(bytes[13..21].try_into().expect("8 bytes")) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != len.saturating_add(32) {
        return Err(HarnessError::Checksum { path: path.to_path_buf() });
    }
    let (payload, digest) = body.split_at(len);
    if Sha256::digest(payload).as_slice() != digest {
        return Err(HarnessError::Checksum { path: path.to_path_buf() });
    }
    decode(kind, payload, path)
}
