//! Trained-model file (`FNOC1`).
//!
//! Layout, little-endian: magic `"FNOC1\n"`; `u32` version, scenario id, target code,
//! width, modes_x, modes_z, fc2 width, nx, nz; `f64` t_inj in months; every parameter
//! tensor as `f32` in [`FnoParams::tensors`] order, except that each spectral weight is
//! written as interleaved (re, im) pairs; finally a `u32` byte length followed by a
//! UTF-8 `key=value` block holding the normalizer and training metadata.

use std::path::Path;

use super::model::{fno_init, FnoArch, FnoParams};
use crate::binio::{read_file, write_file_atomic, ByteReader, ByteWriter};
use crate::data::{Normalizer, Scenario, Target};
use crate::error::{Error, Result};
use crate::kv::{self, KvMap};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"FNOC1\n";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained surrogate together with what is needed to run it.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub scenario: Scenario,
    pub target: Target,
    pub nx: usize,
    pub nz: usize,
    pub t_inj: f64,
    pub params: FnoParams<f32>,
    pub normalizer: Normalizer,
    /// Free-form metadata (seeds, history digest, training settings).
    pub meta: KvMap,
}

impl Checkpoint {
    pub fn bitwise_eq(&self, other: &Checkpoint) -> bool {
        self.scenario == other.scenario
            && self.target == other.target
            && (self.nx, self.nz) == (other.nx, other.nz)
            && self.t_inj.to_bits() == other.t_inj.to_bits()
            && self.params.bitwise_eq(&other.params)
            && self.normalizer == other.normalizer
            && self.meta == other.meta
    }
}

fn text_block(ck: &Checkpoint) -> String {
    let mut m = ck.meta.clone();
    m.retain(|k, _| !k.starts_with("norm."));
    ck.normalizer.to_kv("norm.", &mut m);
    m.insert("fourier_bias".into(), ck.params.arch.fourier_bias.to_string());
    kv::render(&m)
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Result<Vec<u8>> {
    ck.params.validate()?;
    let a = &ck.params.arch;
    let mut w = ByteWriter::new();
    w.bytes(CHECKPOINT_MAGIC);
    for v in [
        CHECKPOINT_VERSION,
        ck.scenario.id,
        ck.target.code(),
        a.width as u32,
        a.modes_x as u32,
        a.modes_z as u32,
        a.fc2_width as u32,
        ck.nx as u32,
        ck.nz as u32,
    ] {
        w.u32(v);
    }
    w.f64(ck.t_inj);
    let p = &ck.params;
    let dense = |w: &mut ByteWriter, d: &crate::grad::Dense<f32>| {
        w.f32s(d.w.data().iter().copied());
        w.f32s(d.b.data().iter().copied());
    };
    dense(&mut w, &p.fc1);
    for l in &p.fourier {
        for (re, im) in l.spectral.re.data().iter().zip(l.spectral.im.data()) {
            w.f32(*re);
            w.f32(*im);
        }
        dense(&mut w, &l.bypass);
    }
    dense(&mut w, &p.fc2);
    dense(&mut w, &p.fc3);
    let text = text_block(ck);
    w.u32(text.len() as u32);
    w.bytes(text.as_bytes());
    Ok(w.into_inner())
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(CHECKPOINT_MAGIC)?;
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let at = r.offset();
    let scenario = Scenario::from_id(r.u32()?).map_err(|e| Error::format(at, e.to_string()))?;
    let at = r.offset();
    let target = Target::from_code(r.u32()?).map_err(|e| Error::format(at, e.to_string()))?;
    let at = r.offset();
    let mut dims = [0usize; 6];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let [width, modes_x, modes_z, fc2_width, nx, nz] = dims;
    if dims.iter().any(|&d| d == 0) || dims.iter().any(|&d| d > 1 << 16) {
        return Err(Error::format(at, format!("implausible architecture header {dims:?}")));
    }
    let t_inj = r.f64()?;

    // Parameter shapes come from a template; fourier_bias is fixed up after the text block.
    let arch = FnoArch {
        width,
        modes_x,
        modes_z,
        fc2_width,
        fourier_bias: true,
    };
    let mut params: FnoParams<f32> = fno_init(&arch, 0)?;
    let read_into = |r: &mut ByteReader, dst: &mut [f32]| -> Result<()> {
        let v = r.f32_vec(dst.len())?;
        dst.copy_from_slice(&v);
        Ok(())
    };
    {
        let p = &mut params;
        read_into(&mut r, p.fc1.w.data_mut())?;
        read_into(&mut r, p.fc1.b.data_mut())?;
        for l in &mut p.fourier {
            let n = l.spectral.re.len();
            let pairs = r.f32_vec(2 * n)?;
            for (k, pair) in pairs.chunks_exact(2).enumerate() {
                l.spectral.re.data_mut()[k] = pair[0];
                l.spectral.im.data_mut()[k] = pair[1];
            }
            read_into(&mut r, l.bypass.w.data_mut())?;
            read_into(&mut r, l.bypass.b.data_mut())?;
        }
        read_into(&mut r, p.fc2.w.data_mut())?;
        read_into(&mut r, p.fc2.b.data_mut())?;
        read_into(&mut r, p.fc3.w.data_mut())?;
        read_into(&mut r, p.fc3.b.data_mut())?;
    }
    let len = r.u32()? as usize;
    let at = r.offset();
    let text = std::str::from_utf8(r.take(len)?).map_err(|e| Error::format(at, format!("metadata is not UTF-8: {e}")))?;
    r.finish()?;
    let mut meta = kv::parse(text).map_err(|e| Error::format(at, e.to_string()))?;
    let normalizer = Normalizer::from_kv("norm.", &meta).map_err(|e| Error::format(at, e.to_string()))?;
    params.arch.fourier_bias = match meta.get("fourier_bias").map(String::as_str) {
        Some("true") => true,
        Some("false") => false,
        other => return Err(Error::format(at, format!("bad fourier_bias entry {other:?}"))),
    };
    meta.retain(|k, _| !k.starts_with("norm.") && k != "fourier_bias");
    let ck = Checkpoint {
        scenario,
        target,
        nx,
        nz,
        t_inj,
        params,
        normalizer,
        meta,
    };
    ck.params.validate()?;
    Ok(ck)
}

pub fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    write_file_atomic(path, &encode_checkpoint(ck)?)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Range, SCENARIOS};

    fn sample_checkpoint() -> Checkpoint {
        let arch = FnoArch {
            width: 4,
            modes_x: 2,
            modes_z: 3,
            fc2_width: 5,
            fourier_bias: false,
        };
        let mut meta = KvMap::new();
        meta.insert("init_seed".into(), "9".into());
        Checkpoint {
            scenario: SCENARIOS[2],
            target: Target::Pressure,
            nx: 8,
            nz: 8,
            t_inj: 360.0,
            params: fno_init(&arch, 5).unwrap(),
            normalizer: Normalizer {
                x: [Range { min: 0.1, max: 0.7 }; 5],
                y: Range { min: 1.9e7, max: 2.3e7 },
            },
            meta,
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let ck = sample_checkpoint();
        let bytes = encode_checkpoint(&ck).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        assert!(back.bitwise_eq(&ck));
        assert_eq!(encode_checkpoint(&back).unwrap(), bytes);
    }

    #[test]
    fn corruption_is_reported_with_offset() {
        let bytes = encode_checkpoint(&sample_checkpoint()).unwrap();
        let mut bad = bytes.clone();
        bad[2] = b'X';
        assert!(matches!(decode_checkpoint(&bad), Err(Error::Format { offset: 2, .. })));
        let mut old = bytes.clone();
        old[6..10].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(decode_checkpoint(&old), Err(Error::Version { found: 7, .. })));
        assert!(matches!(decode_checkpoint(&bytes[..bytes.len() - 3]), Err(Error::Format { .. })));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(decode_checkpoint(&longer), Err(Error::Format { .. })));
    }
}
