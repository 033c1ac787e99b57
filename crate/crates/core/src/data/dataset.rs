use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::normalize::Normalizer;
use super::sample::{assemble_sample, AssemblyStats, CaseInputs, Sample, N_CHANNELS};
use super::scenario::{Scenario, Target};
use super::steps::select_time_steps;
use crate::binio::{read_file, write_file_atomic, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::kv::{self, KvMap};
use crate::sim::Archive;

pub const DATASET_MAGIC: &[u8; 6] = b"FNOD1\n";
pub const DATASET_VERSION: u32 = 1;
pub const MIN_CASES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Case-level membership of the three splits, each sorted by case id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: Vec<u32>,
    pub val: Vec<u32>,
    pub test: Vec<u32>,
}

impl SplitPlan {
    /// Shuffles the case ids with `seed` and cuts them 80/10/10 (rounded to nearest).
    pub fn new(case_ids: &[u32], seed: u64) -> Result<Self> {
        let mut ids = case_ids.to_vec();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Contract(format!("case id {} appears twice", w[0])));
        }
        if ids.len() < MIN_CASES {
            return Err(Error::Contract(format!(
                "need at least {MIN_CASES} cases to split, got {}",
                ids.len()
            )));
        }
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n = ids.len();
        let n_train = (0.8 * n as f64).round() as usize;
        let n_val = (0.1 * n as f64).round() as usize;
        let sorted = |s: &[u32]| {
            let mut v = s.to_vec();
            v.sort_unstable();
            v
        };
        Ok(Self {
            train: sorted(&ids[..n_train]),
            val: sorted(&ids[n_train..n_train + n_val]),
            test: sorted(&ids[n_train + n_val..]),
        })
    }

    pub fn split_of(&self, case_id: u32) -> Option<Split> {
        Split::ALL
            .into_iter()
            .find(|&s| self.ids(s).binary_search(&case_id).is_ok())
    }

    pub fn ids(&self, split: Split) -> &[u32] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// Samples of one scenario and target, grouped by split, plus the fitted normalizer.
/// Samples hold physical values; normalization is applied by consumers.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub scenario: Scenario,
    pub target: Target,
    pub nx: usize,
    pub nz: usize,
    pub t_inj: u32,
    pub t_total: u32,
    pub split_seed: u64,
    /// Identifies the simulation outputs the dataset was assembled from.
    pub source_digest: String,
    pub plan: SplitPlan,
    pub normalizer: Normalizer,
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
    pub stats: AssemblyStats,
}

impl Dataset {
    pub fn samples(&self, split: Split) -> &[Sample] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bitwise_eq(&self, other: &Dataset) -> bool {
        let same = |a: &[Sample], b: &[Sample]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.bitwise_eq(y));
        self.scenario == other.scenario
            && self.target == other.target
            && (self.nx, self.nz, self.t_inj, self.t_total) == (other.nx, other.nz, other.t_inj, other.t_total)
            && self.split_seed == other.split_seed
            && self.source_digest == other.source_digest
            && self.plan == other.plan
            && self.normalizer == other.normalizer
            && Split::ALL
                .into_iter()
                .all(|s| same(self.samples(s), other.samples(s)))
    }
}

/// Accumulates cases one at a time so only one archive needs to be in memory.
pub struct DatasetBuilder {
    scenario: Scenario,
    target: Target,
    split_seed: u64,
    plan: SplitPlan,
    trained_months: BTreeSet<u32>,
    shape: Option<(usize, usize, u32, u32)>,
    seen: BTreeSet<u32>,
    train: Vec<Sample>,
    val: Vec<Sample>,
    test: Vec<Sample>,
    stats: AssemblyStats,
}

impl DatasetBuilder {
    pub fn new(case_ids: &[u32], scenario: Scenario, target: Target, split_seed: u64) -> Result<Self> {
        Ok(Self {
            scenario,
            target,
            split_seed,
            plan: SplitPlan::new(case_ids, split_seed)?,
            trained_months: BTreeSet::new(),
            shape: None,
            seen: BTreeSet::new(),
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
            stats: AssemblyStats::default(),
        })
    }

    pub fn plan(&self) -> &SplitPlan {
        &self.plan
    }

    pub fn add_case(&mut self, inputs: &CaseInputs, archive: &Archive) -> Result<()> {
        let id = inputs.case_id;
        let split = self
            .plan
            .split_of(id)
            .ok_or_else(|| Error::Contract(format!("case {id} is not part of the split plan")))?;
        if !self.seen.insert(id) {
            return Err(Error::Contract(format!("case {id} added twice")));
        }
        let shape = (inputs.nx(), inputs.nz(), inputs.t_inj, inputs.t_total);
        match self.shape {
            None => {
                self.trained_months = select_time_steps(inputs.t_inj, inputs.t_total)?.into_iter().collect();
                self.shape = Some(shape);
            }
            Some(s) if s != shape => {
                return Err(Error::Contract(format!("case {id} differs in grid or schedule from earlier cases")));
            }
            Some(_) => {}
        }
        let mut months = BTreeSet::new();
        for snap in &archive.snapshots {
            if snap.t == 0.0 {
                continue;
            }
            let month = super::sample::snapshot_month(snap)?;
            if !months.insert(month) {
                return Err(Error::Contract(format!("case {id} has two snapshots at month {month}")));
            }
            if split != Split::Test && !self.trained_months.contains(&month) {
                continue;
            }
            match assemble_sample(inputs, snap, self.scenario, self.target)? {
                Some(s) => {
                    self.stats.assembled += 1;
                    match split {
                        Split::Train => self.train.push(s),
                        Split::Val => self.val.push(s),
                        Split::Test => self.test.push(s),
                    }
                }
                None => self.stats.filtered += 1,
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<Dataset> {
        let missing: Vec<u32> = Split::ALL
            .iter()
            .flat_map(|&s| self.plan.ids(s).to_vec())
            .filter(|id| !self.seen.contains(id))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Contract(format!("cases never added: {missing:?}")));
        }
        let (nx, nz, t_inj, t_total) = self.shape.expect("at least MIN_CASES cases were added");
        for v in [&mut self.train, &mut self.val, &mut self.test] {
            v.sort_by_key(|s| (s.case_id, s.month));
        }
        let normalizer = Normalizer::fit(&self.train)?;
        Ok(Dataset {
            scenario: self.scenario,
            target: self.target,
            nx,
            nz,
            t_inj,
            t_total,
            split_seed: self.split_seed,
            source_digest: String::new(),
            plan: self.plan,
            normalizer,
            train: self.train,
            val: self.val,
            test: self.test,
            stats: self.stats,
        })
    }
}

/// Builds a dataset from cases held in memory.
pub fn build_dataset(
    cases: &[(CaseInputs, Archive)],
    scenario: Scenario,
    target: Target,
    split_seed: u64,
) -> Result<Dataset> {
    let ids: Vec<u32> = cases.iter().map(|(c, _)| c.case_id).collect();
    let mut b = DatasetBuilder::new(&ids, scenario, target, split_seed)?;
    for (inputs, archive) in cases {
        b.add_case(inputs, archive)?;
    }
    b.finish()
}

pub fn dataset_sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("txt")
}

fn join_ids(ids: &[u32]) -> String {
    ids.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

fn parse_ids(map: &KvMap, key: &str) -> Result<Vec<u32>> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::Config(format!("missing key {key}")))?;
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|t| t.parse().map_err(|_| Error::Config(format!("key {key}: bad case id {t:?}"))))
        .collect()
}

pub fn encode_dataset(ds: &Dataset) -> Vec<u8> {
    let n = ds.nx * ds.nz;
    let mut w = ByteWriter::new();
    w.bytes(DATASET_MAGIC);
    for v in [
        DATASET_VERSION,
        ds.len() as u32,
        N_CHANNELS as u32,
        ds.nx as u32,
        ds.nz as u32,
        ds.scenario.id,
        ds.target.code(),
    ] {
        w.u32(v);
    }
    for s in Split::ALL.iter().flat_map(|&sp| ds.samples(sp)) {
        debug_assert_eq!(s.y.len(), n);
        w.u32(s.case_id);
        w.f32(s.month as f32);
        w.f32s(s.x.iter().copied());
        w.f32s(s.y.iter().copied());
    }
    w.into_inner()
}

pub fn dataset_metadata(ds: &Dataset) -> KvMap {
    let mut m = KvMap::new();
    m.insert("scenario".into(), ds.scenario.id.to_string());
    m.insert("target".into(), ds.target.name().into());
    m.insert("nx".into(), ds.nx.to_string());
    m.insert("nz".into(), ds.nz.to_string());
    m.insert("t_inj_months".into(), ds.t_inj.to_string());
    m.insert("t_total_months".into(), ds.t_total.to_string());
    m.insert("split_seed".into(), ds.split_seed.to_string());
    m.insert("source_digest".into(), ds.source_digest.clone());
    for s in Split::ALL {
        m.insert(format!("split.{}", s.name()), join_ids(ds.plan.ids(s)));
        m.insert(format!("samples.{}", s.name()), ds.samples(s).len().to_string());
    }
    m.insert("assembled".into(), ds.stats.assembled.to_string());
    m.insert("filtered".into(), ds.stats.filtered.to_string());
    ds.normalizer.to_kv("norm.", &mut m);
    m
}

/// Writes the binary dataset and its `key=value` sidecar.
pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    write_file_atomic(path, &encode_dataset(ds))?;
    kv::write(&dataset_sidecar_path(path), &dataset_metadata(ds))
}

pub fn decode_dataset(bytes: &[u8], meta: &KvMap) -> Result<Dataset> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(DATASET_MAGIC)?;
    let version = r.u32()?;
    if version != DATASET_VERSION {
        return Err(Error::Version {
            found: version,
            expected: DATASET_VERSION,
        });
    }
    let n_samples = r.u32()? as usize;
    let at = r.offset();
    let channels = r.u32()? as usize;
    if channels != N_CHANNELS {
        return Err(Error::format(at, format!("expected {N_CHANNELS} channels, found {channels}")));
    }
    let nx = r.u32()? as usize;
    let nz = r.u32()? as usize;
    let at = r.offset();
    let scenario = Scenario::from_id(r.u32()?).map_err(|e| Error::format(at, e.to_string()))?;
    let at = r.offset();
    let target = Target::from_code(r.u32()?).map_err(|e| Error::format(at, e.to_string()))?;
    let n = nx
        .checked_mul(nz)
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::format(at, "invalid grid size"))?;
    let per_sample = 8 + 4 * n * (N_CHANNELS + 1);
    if r.remaining() != n_samples.saturating_mul(per_sample) {
        return Err(Error::format(
            r.offset(),
            format!("{} payload bytes do not match {n_samples} samples of {per_sample} bytes", r.remaining()),
        ));
    }

    let check = |key: &str, expect: String| -> Result<()> {
        let got = meta.get(key).map(String::as_str).unwrap_or("");
        if got == expect {
            Ok(())
        } else {
            Err(Error::Config(format!("sidecar {key}={got} disagrees with the data file ({expect})")))
        }
    };
    check("scenario", scenario.id.to_string())?;
    check("target", target.name().into())?;
    check("nx", nx.to_string())?;
    check("nz", nz.to_string())?;
    let plan = SplitPlan {
        train: parse_ids(meta, "split.train")?,
        val: parse_ids(meta, "split.val")?,
        test: parse_ids(meta, "split.test")?,
    };
    let mut ds = Dataset {
        scenario,
        target,
        nx,
        nz,
        t_inj: kv::get(meta, "t_inj_months")?,
        t_total: kv::get(meta, "t_total_months")?,
        split_seed: kv::get(meta, "split_seed")?,
        source_digest: meta.get("source_digest").cloned().unwrap_or_default(),
        normalizer: Normalizer::from_kv("norm.", meta)?,
        plan,
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        stats: AssemblyStats {
            assembled: kv::get(meta, "assembled")?,
            filtered: kv::get(meta, "filtered")?,
        },
    };
    for _ in 0..n_samples {
        let at = r.offset();
        let case_id = r.u32()?;
        let month = r.f32()?;
        if !(month >= 1.0 && month.fract() == 0.0) {
            return Err(Error::format(at + 4, format!("month {month} is not a whole month")));
        }
        let x = r.f32_vec(N_CHANNELS * n)?;
        let y = r.f32_vec(n)?;
        let split = ds
            .plan
            .split_of(case_id)
            .ok_or_else(|| Error::format(at, format!("case {case_id} is in no split")))?;
        let s = Sample {
            case_id,
            month: month as u32,
            x,
            y,
        };
        match split {
            Split::Train => ds.train.push(s),
            Split::Val => ds.val.push(s),
            Split::Test => ds.test.push(s),
        }
    }
    r.finish()?;
    for s in Split::ALL {
        let expect: usize = kv::get(meta, &format!("samples.{}", s.name()))?;
        if ds.samples(s).len() != expect {
            return Err(Error::Config(format!(
                "sidecar lists {expect} {} samples, file holds {}",
                s.name(),
                ds.samples(s).len()
            )));
        }
    }
    Ok(ds)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let meta = kv::read(&dataset_sidecar_path(path))?;
    decode_dataset(&read_file(path)?, &meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ninety_cases_split_72_9_9() {
        let ids: Vec<u32> = (1..=90).collect();
        let p = SplitPlan::new(&ids, 17).unwrap();
        assert_eq!((p.train.len(), p.val.len(), p.test.len()), (72, 9, 9));
        assert_eq!(p, SplitPlan::new(&ids, 17).unwrap());
        assert_ne!(p, SplitPlan::new(&ids, 18).unwrap());
        let mut all: Vec<u32> = [p.train.clone(), p.val.clone(), p.test.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, ids);
    }

    #[test]
    fn duplicates_and_tiny_sets_rejected() {
        let mut ids: Vec<u32> = (1..=12).collect();
        assert!(SplitPlan::new(&ids[..9], 1).is_err());
        ids.push(3);
        assert!(matches!(SplitPlan::new(&ids, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn plan_is_independent_of_input_order() {
        let ids: Vec<u32> = (1..=30).collect();
        let rev: Vec<u32> = ids.iter().rev().copied().collect();
        assert_eq!(SplitPlan::new(&ids, 5).unwrap(), SplitPlan::new(&rev, 5).unwrap());
    }
}
