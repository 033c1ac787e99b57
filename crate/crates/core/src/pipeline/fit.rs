use std::path::PathBuf;

use sha2::{Digest, Sha256};

use super::layout::{ensure_dir, Layout};
use crate::config::RunConfig;
use crate::data::{dataset_sidecar_path, read_dataset, write_dataset, CaseInputs, Dataset, DatasetBuilder, Scenario, Target};
use crate::error::{Error, Result};
use crate::fno::write_checkpoint;
use crate::kv;
use crate::sim::archive::sidecar_path;
use crate::sim::read_archive;
use crate::train::{train as train_model, units};

/// Outcome of one training command.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub best_epoch: usize,
    pub best_val_phys: f64,
    pub units: &'static str,
    pub checkpoint: PathBuf,
    pub history: PathBuf,
    pub seconds: f64,
}

/// Static inputs of every configured case, in case-id order.
pub fn all_case_inputs(cfg: &RunConfig) -> Result<Vec<CaseInputs>> {
    cfg.design
        .case_specs()
        .iter()
        .map(|spec| Ok(CaseInputs::from_case(&cfg.design.build_case(spec)?)))
        .collect()
}

/// Digest over the per-case digests recorded next to the archives. Fails with a
/// configuration error naming every missing or stale archive.
pub fn source_digest(cfg: &RunConfig, layout: &Layout) -> Result<String> {
    let mut h = Sha256::new();
    let mut missing = Vec::new();
    for spec in cfg.design.case_specs() {
        let path = layout.archive(spec.case_id);
        let expect = super::generate::case_digest(cfg, &spec);
        let found = kv::read(&sidecar_path(&path)).ok().and_then(|m| m.get("digest").cloned());
        if !path.exists() || found.as_deref() != Some(expect.as_str()) {
            missing.push(path.display().to_string());
            continue;
        }
        h.update(expect.as_bytes());
    }
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "{} simulation archive(s) missing or out of date; run generate first: {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    h.update(cfg.split_seed.to_le_bytes());
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Reads the dataset if an up-to-date copy exists, otherwise assembles it from the
/// archives and writes it.
pub fn load_or_build_dataset(
    cfg: &RunConfig,
    layout: &Layout,
    scenario: Scenario,
    target: Target,
    log: &dyn Fn(&str),
) -> Result<Dataset> {
    let digest = source_digest(cfg, layout)?;
    let path = layout.dataset(scenario, target);
    let current = kv::read(&dataset_sidecar_path(&path))
        .ok()
        .is_some_and(|m| m.get("source_digest") == Some(&digest));
    if path.exists() && current {
        return read_dataset(&path);
    }
    log(&format!("assembling {scenario} {target} dataset"));
    let inputs = all_case_inputs(cfg)?;
    let ids: Vec<u32> = inputs.iter().map(|c| c.case_id).collect();
    let mut builder = DatasetBuilder::new(&ids, scenario, target, cfg.split_seed)?;
    for case in &inputs {
        let archive = read_archive(&layout.archive(case.case_id))?;
        builder.add_case(case, &archive)?;
    }
    let mut ds = builder.finish()?;
    ds.source_digest = digest;
    ensure_dir(&layout.datasets_dir())?;
    write_dataset(&path, &ds)?;
    log(&format!(
        "{scenario} {target} dataset: {} train, {} val, {} test samples",
        ds.train.len(),
        ds.val.len(),
        ds.test.len()
    ));
    Ok(ds)
}

/// Builds the dataset if needed, trains, and writes the checkpoint and history CSV.
pub fn train(
    cfg: &RunConfig,
    layout: &Layout,
    scenario: Scenario,
    target: Target,
    log: &dyn Fn(&str),
) -> Result<TrainReport> {
    cfg.validate()?;
    let mut ds = load_or_build_dataset(cfg, layout, scenario, target, log)?;
    ds.test = Vec::new();
    let out = train_model(&ds, &cfg.arch, &cfg.train, log)?;
    ensure_dir(&layout.models_dir())?;
    let checkpoint = layout.checkpoint(scenario, target);
    let history = layout.history(scenario, target);
    write_checkpoint(&checkpoint, &out.checkpoint)?;
    out.history.write_csv(&history)?;
    let best = out.history.best().expect("history has a validated epoch");
    Ok(TrainReport {
        best_epoch: out.best_epoch,
        best_val_phys: best.val_rmse_phys,
        units: units(target),
        checkpoint,
        history,
        seconds: out.history.total_seconds(),
    })
}
