use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::layout::{ensure_dir, Layout};
use crate::config::RunConfig;
use crate::design::CaseSpec;
use crate::error::{Error, Result};
use crate::kv;
use crate::sim::archive::sidecar_path;
use crate::sim::{simulate, write_archive};

/// What happened to each case during generation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerateReport {
    pub simulated: Vec<u32>,
    pub skipped: Vec<u32>,
    pub max_mass_balance_error: f64,
    pub sim_seconds: f64,
}

/// Bumped whenever a solver change alters simulation output, so stale archives are redone.
const SOLVER_REVISION: &str = "2";

/// Digest of everything that determines a case's simulation output.
pub fn case_digest(cfg: &RunConfig, spec: &CaseSpec) -> String {
    let d = &cfg.design;
    let mut h = Sha256::new();
    h.update(format!("solver={SOLVER_REVISION}\n").as_bytes());
    for line in cfg.render().lines() {
        let physical = ["grid.", "rock.", "fluid.", "relperm.", "wells.", "sampling.", "schedule.", "sim."]
            .iter()
            .any(|p| line.starts_with(p));
        if physical && !line.starts_with("sampling.cases=") {
            h.update(line.as_bytes());
            h.update(b"\n");
        }
    }
    for (k, v) in d.case_metadata(spec) {
        h.update(format!("{k}={v}\n").as_bytes());
    }
    let bytes = h.finalize();
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn up_to_date(layout: &Layout, spec: &CaseSpec, digest: &str) -> bool {
    let path = layout.archive(spec.case_id);
    path.exists()
        && kv::read(&sidecar_path(&path))
            .map(|m| m.get("digest").map(String::as_str) == Some(digest))
            .unwrap_or(false)
}

/// Simulates every configured case and writes its archive, skipping cases whose archive
/// already carries a matching digest. Cases run on `jobs` threads; the report lists ids
/// in ascending order regardless of completion order.
pub fn generate(cfg: &RunConfig, layout: &Layout, jobs: usize, log: &(dyn Fn(&str) + Sync)) -> Result<GenerateReport> {
    cfg.validate()?;
    ensure_dir(&layout.cases_dir())?;
    let specs = cfg.design.case_specs();
    let next = AtomicUsize::new(0);
    let report = Mutex::new(GenerateReport::default());
    let failure: Mutex<Option<Error>> = Mutex::new(None);

    let work = || loop {
        if failure.lock().expect("lock").is_some() {
            return;
        }
        let k = next.fetch_add(1, Ordering::SeqCst);
        let Some(spec) = specs.get(k) else { return };
        let digest = case_digest(cfg, spec);
        if up_to_date(layout, spec, &digest) {
            report.lock().expect("lock").skipped.push(spec.case_id);
            continue;
        }
        let outcome = (|| -> Result<(f64, f64)> {
            let case = cfg.design.build_case(spec)?;
            let result = simulate(&case)?;
            let mut meta = cfg.design.case_metadata(spec);
            meta.insert("digest".into(), digest.clone());
            write_archive(&layout.archive(spec.case_id), &result, &meta)?;
            Ok((result.max_mass_balance_error(), result.wall_time))
        })();
        match outcome {
            Ok((mb, secs)) => {
                log(&format!(
                    "case {:>3}: {:.1} s, mass balance {:.1e} ({})",
                    spec.case_id,
                    secs,
                    mb,
                    spec.wells.label()
                ));
                let mut r = report.lock().expect("lock");
                r.simulated.push(spec.case_id);
                r.max_mass_balance_error = r.max_mass_balance_error.max(mb);
                r.sim_seconds += secs;
            }
            Err(e) => {
                let e = match e {
                    Error::Numerical(m) if !m.contains("case ") => {
                        Error::Numerical(format!("case {}: {m}", spec.case_id))
                    }
                    other => other,
                };
                failure.lock().expect("lock").get_or_insert(e);
                return;
            }
        }
    };

    let jobs = jobs.max(1);
    if jobs == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(&work);
            }
        });
    }
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    let mut r = report.into_inner().expect("lock");
    r.simulated.sort_unstable();
    r.skipped.sort_unstable();
    Ok(r)
}
