//! Snapshot archive (`GCSR1`) and its `key=value` sidecar.
//!
//! Layout: magic `"GCSR1\n"`, little-endian `u32` version, nx, nz, n_snapshots, then
//! per snapshot an `f64` time in months, nx·nz `f32` pressures (Pa) and nx·nz `f32`
//! saturations, each row-major with x fastest.

use std::path::{Path, PathBuf};

use super::simulate::SimResult;
use super::state::SimState;
use crate::binio::{read_file, write_file_atomic, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::kv::{self, KvMap};

pub const ARCHIVE_MAGIC: &[u8; 6] = b"GCSR1\n";
pub const ARCHIVE_VERSION: u32 = 1;

/// Snapshots read back from an archive, stored at `f32` precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub nx: usize,
    pub nz: usize,
    pub snapshots: Vec<SimState>,
}

impl Archive {
    pub fn from_result(result: &SimResult) -> Self {
        let first = &result.snapshots[0];
        let round = |f: &Field2D| f.map(|v| v as f32 as f64);
        Self {
            nx: first.p.nx(),
            nz: first.p.nz(),
            snapshots: result
                .snapshots
                .iter()
                .map(|s| SimState::new(round(&s.p), round(&s.sg), s.t))
                .collect(),
        }
    }

    /// Snapshot at whole month `month`, if present.
    pub fn at_month(&self, month: u32) -> Option<&SimState> {
        self.snapshots.iter().find(|s| s.t == month as f64)
    }
}

pub fn encode_archive(states: &[SimState]) -> Result<Vec<u8>> {
    let Some(first) = states.first() else {
        return Err(Error::Contract("archive needs at least one snapshot".into()));
    };
    let (nx, nz) = (first.p.nx(), first.p.nz());
    let mut w = ByteWriter::new();
    w.bytes(ARCHIVE_MAGIC);
    w.u32(ARCHIVE_VERSION);
    w.u32(nx as u32);
    w.u32(nz as u32);
    w.u32(states.len() as u32);
    for s in states {
        if s.p.nx() != nx || s.p.nz() != nz || !s.p.same_shape(&s.sg) {
            return Err(Error::Contract("snapshots differ in shape".into()));
        }
        w.f64(s.t);
        w.f32s(s.p.data().iter().map(|&v| v as f32));
        w.f32s(s.sg.data().iter().map(|&v| v as f32));
    }
    Ok(w.into_inner())
}

pub fn decode_archive(bytes: &[u8]) -> Result<Archive> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(ARCHIVE_MAGIC)?;
    let version = r.u32()?;
    if version != ARCHIVE_VERSION {
        return Err(Error::Version {
            found: version,
            expected: ARCHIVE_VERSION,
        });
    }
    let nx = r.u32()? as usize;
    let nz = r.u32()? as usize;
    let n = r.u32()? as usize;
    let cells = nx * nz;
    let mut snapshots = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        let t = r.f64()?;
        let to_field = |v: Vec<f32>| Field2D::from_vec(nx, nz, v.into_iter().map(f64::from).collect());
        let p = to_field(r.f32_vec(cells)?)?;
        let sg = to_field(r.f32_vec(cells)?)?;
        snapshots.push(SimState::new(p, sg, t));
    }
    r.finish()?;
    Ok(Archive { nx, nz, snapshots })
}

pub fn sidecar_path(archive: &Path) -> PathBuf {
    archive.with_extension("txt")
}

/// Writes the archive and its sidecar (`case parameters`, seed, ...).
pub fn write_archive(path: &Path, result: &SimResult, meta: &KvMap) -> Result<()> {
    let bytes = encode_archive(&result.snapshots)?;
    let mut meta = meta.clone();
    meta.insert("case_id".into(), result.case_id.to_string());
    meta.insert("n_snapshots".into(), result.snapshots.len().to_string());
    meta.insert("wall_time_s".into(), format!("{:.6}", result.wall_time));
    meta.insert("pressure_steps".into(), result.pressure_steps.to_string());
    meta.insert(
        "max_mass_balance_error".into(),
        format!("{:e}", result.max_mass_balance_error()),
    );
    meta.insert(
        "injected_volume_series".into(),
        result
            .injected_volume_series
            .iter()
            .map(|v| format!("{v:e}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    write_file_atomic(path, &bytes)?;
    kv::write(&sidecar_path(path), &meta)
}

pub fn read_archive(path: &Path) -> Result<Archive> {
    decode_archive(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn states() -> Vec<SimState> {
        (1..=3)
            .map(|k| {
                let p = Field2D::from_fn(4, 2, |i, j| 2e7 + (i + 10 * j + k) as f64);
                let s = Field2D::from_fn(4, 2, |i, _| 0.1 * i as f64);
                SimState::new(p, s, k as f64)
            })
            .collect()
    }

    #[test]
    fn header_layout() {
        let b = encode_archive(&states()).unwrap();
        assert_eq!(&b[..6], b"GCSR1\n");
        assert_eq!(u32::from_le_bytes(b[6..10].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[10..14].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(b[14..18].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[18..22].try_into().unwrap()), 3);
        assert_eq!(b.len(), 22 + 3 * (8 + 2 * 8 * 4));
    }

    #[test]
    fn round_trip_is_f32_exact() {
        let s = states();
        let a = decode_archive(&encode_archive(&s).unwrap()).unwrap();
        assert_eq!(a.snapshots.len(), 3);
        for (x, y) in s.iter().zip(&a.snapshots) {
            assert_eq!(x.t, y.t);
            for (u, v) in x.p.data().iter().zip(y.p.data()) {
                assert_eq!(*u as f32 as f64, *v);
            }
        }
        // Re-encoding the decoded archive reproduces the bytes exactly.
        assert_eq!(encode_archive(&a.snapshots).unwrap(), encode_archive(&s).unwrap());
    }

    #[test]
    fn corruption_is_reported_with_offset() {
        let mut b = encode_archive(&states()).unwrap();
        b[2] = b'X';
        match decode_archive(&b) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected format error, got {other:?}"),
        }
        let b = encode_archive(&states()).unwrap();
        assert!(matches!(decode_archive(&b[..b.len() - 3]), Err(Error::Format { .. })));
        let mut b = encode_archive(&states()).unwrap();
        b[6] = 9;
        assert!(matches!(decode_archive(&b), Err(Error::Version { found: 9, .. })));
    }
}
