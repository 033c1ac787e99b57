use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use super::fit::{all_case_inputs, source_digest};
use super::layout::{ensure_dir, Layout};
use crate::config::RunConfig;
use crate::data::{assemble_inputs, select_time_steps, CaseInputs, Period, Scenario, SplitPlan, Split, Target, SCENARIOS};
use crate::error::{Error, Result};
use crate::eval::{
    linearity_deviation, pore_volume_of, series_text, well_series_error, CompositeModel, ErrorAccumulator, Prediction,
    ScenarioReport, TimingReport,
};
use crate::field::Field2D;
use crate::fno::{read_checkpoint, Checkpoint};
use crate::kv::{self, KvMap};
use crate::sim::{read_archive, simulate, Archive};
use crate::train::{predict_inputs, units, TrainConfig, TrainHistory};

/// Outcome of the evaluate command: headline numbers, the metrics map and the files written.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub metrics: KvMap,
    pub files: Vec<PathBuf>,
    pub missing: Vec<PathBuf>,
    lines: Vec<String>,
}

impl EvalReport {
    pub fn summary_lines(&self) -> Vec<String> {
        self.lines.clone()
    }
}

fn z_fastest(f: &Field2D, target: Target) -> Vec<f64> {
    let (nx, nz) = (f.nx(), f.nz());
    let mut out = vec![0.0; nx * nz];
    for ix in 0..nx {
        for iz in 0..nz {
            out[ix * nz + iz] = target.report_units(f.get(ix, iz));
        }
    }
    out
}

fn truth_at(archive: &Archive, case_id: u32, month: u32, target: Target) -> Result<Vec<f64>> {
    let s = archive
        .at_month(month)
        .ok_or_else(|| Error::Contract(format!("archive of case {case_id} has no snapshot at month {month}")))?;
    Ok(match target {
        Target::Pressure => z_fastest(&s.p, target),
        Target::Saturation => z_fastest(&s.sg, target),
    })
}

fn model_months(scenario: Scenario, t_inj: u32, t_total: u32) -> Vec<u32> {
    (1..=t_total).filter(|&m| scenario.covers(m, t_inj)).collect()
}

/// Surrogate predictions for one case, converted to reporting units.
fn predict_case(model: &Checkpoint, case: &CaseInputs, months: &[u32]) -> Result<Vec<Vec<f64>>> {
    let inputs: Vec<Vec<f32>> = months.iter().map(|&m| assemble_inputs(case, m, model.scenario)).collect();
    let refs: Vec<&[f32]> = inputs.iter().map(Vec::as_slice).collect();
    let mut preds = predict_inputs(&model.params, &model.normalizer, &refs, model.nx, model.nz)?;
    for p in &mut preds {
        for v in p.iter_mut() {
            *v = model.target.report_units(*v);
        }
    }
    Ok(preds)
}

fn key(scenario: Scenario, target: Target) -> String {
    format!("s{}.{}", scenario.id, target.name())
}

/// Cells whose pressure history is compared: the configured list, or the topmost
/// perforation of every well.
fn monitored_cells(cfg: &RunConfig) -> Vec<(usize, usize)> {
    if !cfg.eval.monitored_cells.is_empty() {
        return cfg.eval.monitored_cells.clone();
    }
    let w = &cfg.design.wells;
    let mut cells: Vec<(usize, usize)> = w.injector_x.iter().map(|&x| (x, w.injector_rows.0)).collect();
    cells.extend(w.producer_x.iter().map(|&x| (x, w.producer_rows.0)));
    cells
}

struct Tracked {
    checkpoint: Checkpoint,
    acc: ErrorAccumulator,
}

/// Scores every available checkpoint on the held-out cases and writes the report files.
/// `scenario` and `target` restrict which models are scored.
pub fn evaluate(
    cfg: &RunConfig,
    layout: &Layout,
    scenario: Option<Scenario>,
    target: Option<Target>,
    log: &dyn Fn(&str),
) -> Result<EvalReport> {
    cfg.validate()?;
    source_digest(cfg, layout)?;
    let (nx, nz) = (cfg.design.grid.nx, cfg.design.grid.nz);
    let t_inj = cfg.design.schedule.t_inj;
    let t_total = cfg.design.schedule.t_total;

    let mut models: BTreeMap<(u32, u32), Tracked> = BTreeMap::new();
    let mut missing = Vec::new();
    for s in SCENARIOS.iter().filter(|s| scenario.is_none_or(|x| x == **s)) {
        for t in Target::ALL.into_iter().filter(|t| target.is_none_or(|x| x == *t)) {
            let path = layout.checkpoint(*s, t);
            if !path.exists() {
                missing.push(path);
                continue;
            }
            let ck = read_checkpoint(&path)?;
            if (ck.nx, ck.nz) != (nx, nz) || ck.t_inj != t_inj as f64 || ck.scenario != *s || ck.target != t {
                return Err(Error::Config(format!(
                    "{} was trained for {} {} on {}×{} with injection ending at month {}, which does not match the configuration",
                    path.display(),
                    ck.scenario,
                    ck.target,
                    ck.nx,
                    ck.nz,
                    ck.t_inj
                )));
            }
            models.insert(
                (s.id, t.code()),
                Tracked {
                    checkpoint: ck,
                    acc: ErrorAccumulator::new(nx, nz),
                },
            );
        }
    }
    if models.is_empty() {
        let list: Vec<String> = missing.iter().map(|p| p.display().to_string()).collect();
        return Err(Error::Config(format!(
            "no trained models to evaluate; run train first. Missing: {}",
            list.join(", ")
        )));
    }

    let inputs = all_case_inputs(cfg)?;
    let ids: Vec<u32> = inputs.iter().map(|c| c.case_id).collect();
    let plan = SplitPlan::new(&ids, cfg.split_seed)?;
    let test_ids: Vec<u32> = plan.ids(Split::Test).to_vec();
    let trained: BTreeSet<u32> = select_time_steps(t_inj, t_total)?.into_iter().collect();

    let composites: Vec<CompositeModel> = Target::ALL
        .into_iter()
        .filter_map(|t| {
            let inj = models.get(&(1, t.code()))?;
            let post = models.get(&(3, t.code()))?;
            Some(CompositeModel::new(inj.checkpoint.clone(), post.checkpoint.clone()))
        })
        .collect::<Result<_>>()?;
    let mut comp_acc: Vec<ErrorAccumulator> = composites.iter().map(|_| ErrorAccumulator::new(nx, nz)).collect();
    let mut comp_identical = vec![true; composites.len()];

    let cells = monitored_cells(cfg);
    let mut well_rows = String::from("model,case,ix,iz,error_percent\n");
    let mut well_errors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut pv_rows = String::from("case,error_percent,truth_injection_linearity\n");
    let mut pv_errors = Vec::new();
    let mut linearity = Vec::new();

    for &id in &test_ids {
        let case = &inputs[ids.iter().position(|&c| c == id).expect("test id is a configured case")];
        let archive = read_archive(&layout.archive(id))?;
        log(&format!("evaluating test case {id}"));
        let mut case_preds: BTreeMap<(u32, u32), (Vec<u32>, Vec<Vec<f64>>)> = BTreeMap::new();
        for (&(sid, tc), tr) in models.iter_mut() {
            let t = tr.checkpoint.target;
            let months = model_months(tr.checkpoint.scenario, t_inj, t_total);
            let preds = predict_case(&tr.checkpoint, case, &months)?;
            for (m, p) in months.iter().zip(&preds) {
                tr.acc.add(&Prediction {
                    case_id: id,
                    month: *m,
                    pred: p.clone(),
                    truth: truth_at(&archive, id, *m, t)?,
                })?;
            }
            case_preds.insert((sid, tc), (months, preds));
        }

        let all_months: Vec<u32> = (1..=t_total).collect();
        for (k, cm) in composites.iter().enumerate() {
            let t = cm.target();
            let mut preds = cm.predict(case, &all_months)?;
            for p in &mut preds {
                for v in p.iter_mut() {
                    *v = t.report_units(*v);
                }
            }
            for (m, p) in all_months.iter().zip(&preds) {
                let sid = cm.select(*m).scenario.id;
                if let Some((months, direct)) = case_preds.get(&(sid, t.code())) {
                    let pos = months.iter().position(|x| x == m).expect("constituent covers its months");
                    if direct[pos].iter().zip(p).any(|(a, b)| a.to_bits() != b.to_bits()) {
                        comp_identical[k] = false;
                    }
                }
                comp_acc[k].add(&Prediction {
                    case_id: id,
                    month: *m,
                    pred: p.clone(),
                    truth: truth_at(&archive, id, *m, t)?,
                })?;
            }
            if t == Target::Pressure {
                record_wells("composite", id, &cells, nz, &all_months, &preds, &archive, &mut well_rows, &mut well_errors)?;
            }
        }

        if let Some((months, preds)) = case_preds.get(&(5, Target::Pressure.code())) {
            record_wells("s5", id, &cells, nz, months, preds, &archive, &mut well_rows, &mut well_errors)?;
        }
        if let Some((months, preds)) = case_preds.get(&(5, Target::Saturation.code())) {
            let poro: Vec<f64> = z_fastest(&case.poro, Target::Saturation);
            let mut pv_pred = Vec::with_capacity(months.len());
            let mut pv_true = Vec::with_capacity(months.len());
            let mut pv_inj = Vec::new();
            for (m, p) in months.iter().zip(preds) {
                let truth = truth_at(&archive, id, *m, Target::Saturation)?;
                pv_pred.push(pore_volume_of(p, &poro));
                let v = pore_volume_of(&truth, &poro);
                pv_true.push(v);
                if *m <= t_inj {
                    pv_inj.push(v);
                }
            }
            let err = well_series_error(&pv_pred, &pv_true)?;
            let lin = linearity_deviation(&pv_inj);
            let _ = writeln!(pv_rows, "{id},{},{lin}", err.map_or("NA".into(), |e| e.to_string()));
            pv_errors.extend(err);
            linearity.push(lin);
        }
    }

    let mut metrics = KvMap::new();
    let mut put = |k: String, v: f64| {
        metrics.insert(k, v.to_string());
    };
    let mut lines = Vec::new();
    let mut files = Vec::new();
    ensure_dir(&layout.reports_dir())?;
    let mut write = |name: &str, text: &str| -> Result<()> {
        let path = layout.report(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        files.push(path);
        Ok(())
    };

    let mut table = ScenarioReport::default();
    let mut per_row = String::from("model,row,rmse\n");
    for tr in models.values() {
        let (s, t) = (tr.checkpoint.scenario, tr.checkpoint.target);
        let k = key(s, t);
        let acc = &tr.acc;
        let overall = acc.rmse().expect("test cases were scored");
        put(format!("{k}.rmse"), overall);
        let row = table.row_mut(s);
        for p in [Period::Injection, Period::PostInjection] {
            if let Some(v) = acc.rmse_where(|m| p.covers(m, t_inj)) {
                row.set_rmse(t, p, v);
                put(format!("{k}.rmse.{}", p.name()), v);
            }
        }
        let hist_path = layout.history(s, t);
        if hist_path.exists() {
            let text = std::fs::read_to_string(&hist_path).map_err(|e| Error::io(&hist_path, e))?;
            let h = TrainHistory::from_csv(&text, TrainConfig::default())?;
            row.train_seconds[t.code() as usize] = Some(h.total_seconds());
        }
        let on_steps = acc.rmse_where(|m| trained.contains(&m));
        let between = acc.rmse_where(|m| !trained.contains(&m));
        if let (Some(a), Some(b)) = (on_steps, between) {
            put(format!("{k}.rmse.trained_months"), a);
            put(format!("{k}.rmse.interpolated_months"), b);
        }
        let (lo, hi) = acc.truth_range();
        put(format!("{k}.truth_min"), lo);
        put(format!("{k}.truth_max"), hi);
        if let (Some(a), Some(b)) = (acc.month(t_inj), acc.month(t_inj + 1)) {
            put(format!("{k}.shut_in_jump"), (b - a).abs());
        }
        let (em, er) = acc.identity_errors();
        put(format!("{k}.identity.months"), em);
        put(format!("{k}.identity.rows"), er);

        let name = format!("rmse_vs_time_s{}_{}", s.id, t.name());
        let series = acc.series();
        let mut csv = format!("month,rmse_{},trained_month\n", units(t));
        for (m, v) in &series {
            let _ = writeln!(csv, "{m},{v},{}", trained.contains(m) as u8);
        }
        write(&format!("{name}.csv"), &csv)?;
        write(&format!("{name}.txt"), &series_text(&series))?;
        for (iz, v) in acc.per_row().iter().enumerate() {
            let _ = writeln!(per_row, "s{}_{},{iz},{v}", s.id, t.name());
        }
        lines.push(format!(
            "{s} {t}: test RMSE {overall:.6} {} (trained months {}, other months {})",
            units(t),
            on_steps.map_or("NA".into(), |v| format!("{v:.6}")),
            between.map_or("NA".into(), |v| format!("{v:.6}")),
        ));
    }

    for ((cm, acc), identical) in composites.iter().zip(&comp_acc).zip(&comp_identical) {
        let t = cm.target();
        let k = format!("composite.{}", t.name());
        let overall = acc.rmse().expect("test cases were scored");
        put(format!("{k}.rmse"), overall);
        if let (Some(a), Some(b)) = (acc.month(t_inj), acc.month(t_inj + 1)) {
            put(format!("{k}.shut_in_jump"), (b - a).abs());
        }
        put(format!("{k}.identical_to_constituents"), *identical as u8 as f64);
        let (em, er) = acc.identity_errors();
        put(format!("{k}.identity.months"), em);
        put(format!("{k}.identity.rows"), er);
        let series = acc.series();
        let name = format!("rmse_vs_time_composite_{}", t.name());
        let mut csv = format!("month,rmse_{},model\n", units(t));
        for (m, v) in &series {
            let _ = writeln!(csv, "{m},{v},s{}", cm.select(*m).scenario.id);
        }
        write(&format!("{name}.csv"), &csv)?;
        write(&format!("{name}.txt"), &series_text(&series))?;
        for (iz, v) in acc.per_row().iter().enumerate() {
            let _ = writeln!(per_row, "composite_{},{iz},{v}", t.name());
        }
        lines.push(format!(
            "composite 1+3 {t}: test RMSE {overall:.6} {}, identical to constituents: {identical}",
            units(t)
        ));
    }

    write("scenario_report.csv", &table.to_csv())?;
    write("rmse_per_row.csv", &per_row)?;
    if !well_errors.is_empty() {
        write("well_errors.csv", &well_rows)?;
        for (model, errs) in &well_errors {
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let max = errs.iter().copied().fold(0.0, f64::max);
            put(format!("wells.{model}.mean_error_percent"), mean);
            put(format!("wells.{model}.max_error_percent"), max);
            lines.push(format!("{model} well-cell pressure error: mean {mean:.4}%, max {max:.4}%"));
        }
    }
    if !linearity.is_empty() {
        write("pore_volume.csv", &pv_rows)?;
        if !pv_errors.is_empty() {
            let mean = pv_errors.iter().sum::<f64>() / pv_errors.len() as f64;
            put("pore_volume.s5.mean_error_percent".into(), mean);
            lines.push(format!("s5 CO2 pore-volume series error: mean {mean:.4}%"));
        }
        put(
            "pore_volume.truth_injection_linearity_max".into(),
            linearity.iter().copied().fold(0.0, f64::max),
        );
    }

    let p5 = models.get(&(5, Target::Pressure.code()));
    let s5 = models.get(&(5, Target::Saturation.code()));
    if let (Some(p5), Some(s5)) = (p5, s5) {
        let n = if cfg.eval.timing_cases == 0 {
            test_ids.len()
        } else {
            cfg.eval.timing_cases.min(test_ids.len())
        };
        let timing = time_cases(cfg, &inputs, &test_ids[..n], &p5.checkpoint, &s5.checkpoint, log)?;
        put("timing.cases".into(), timing.cases as f64);
        put("timing.pressure_seconds".into(), timing.pressure_s);
        put("timing.saturation_seconds".into(), timing.saturation_s);
        put("timing.simulator_seconds".into(), timing.simulator_s);
        put("timing.ratio".into(), timing.ratio());
        write("timing.csv", &timing.to_csv())?;
        lines.push(format!(
            "timing over {} case(s): surrogate {:.3} s (pressure {:.3}, saturation {:.3}), simulator {:.3} s, speedup {:.1}x",
            timing.cases,
            timing.surrogate_s(),
            timing.pressure_s,
            timing.saturation_s,
            timing.simulator_s,
            timing.ratio()
        ));
    }

    put("test_cases".into(), test_ids.len() as f64);
    let metrics_path = layout.report("metrics.txt");
    kv::write(&metrics_path, &metrics)?;
    files.push(metrics_path);
    for m in &missing {
        lines.push(format!("not evaluated (no checkpoint): {}", m.display()));
    }
    lines.push(format!("reports written to {}", layout.reports_dir().display()));
    Ok(EvalReport {
        metrics,
        files,
        missing,
        lines,
    })
}

#[allow(clippy::too_many_arguments)]
fn record_wells(
    model: &str,
    case_id: u32,
    cells: &[(usize, usize)],
    nz: usize,
    months: &[u32],
    preds: &[Vec<f64>],
    archive: &Archive,
    rows: &mut String,
    errors: &mut BTreeMap<String, Vec<f64>>,
) -> Result<()> {
    for &(ix, iz) in cells {
        let pred: Vec<f64> = preds.iter().map(|p| p[ix * nz + iz]).collect();
        let truth = months
            .iter()
            .map(|&m| {
                let s = archive
                    .at_month(m)
                    .ok_or_else(|| Error::Contract(format!("archive of case {case_id} has no month {m}")))?;
                Ok(Target::Pressure.report_units(s.p.get(ix, iz)))
            })
            .collect::<Result<Vec<f64>>>()?;
        let err = well_series_error(&pred, &truth)?;
        let _ = writeln!(
            rows,
            "{model},{case_id},{ix},{iz},{}",
            err.map_or("NA".into(), |e| e.to_string())
        );
        errors.entry(model.to_string()).or_default().extend(err);
    }
    Ok(())
}

/// Wall time of full-horizon surrogate inference against rerunning the simulator,
/// both on the calling thread.
fn time_cases(
    cfg: &RunConfig,
    inputs: &[CaseInputs],
    ids: &[u32],
    pressure: &Checkpoint,
    saturation: &Checkpoint,
    log: &dyn Fn(&str),
) -> Result<TimingReport> {
    let months: Vec<u32> = (1..=cfg.design.schedule.t_total).collect();
    let specs = cfg.design.case_specs();
    let mut report = TimingReport {
        cases: ids.len(),
        pressure_s: 0.0,
        saturation_s: 0.0,
        simulator_s: 0.0,
    };
    for &id in ids {
        let case = inputs.iter().find(|c| c.case_id == id).expect("configured case");
        for (model, slot) in [(pressure, &mut report.pressure_s), (saturation, &mut report.saturation_s)] {
            let t0 = Instant::now();
            let out = predict_case(model, case, &months)?;
            *slot += t0.elapsed().as_secs_f64();
            std::hint::black_box(out);
        }
        let spec = specs.iter().find(|s| s.case_id == id).expect("configured case");
        let sim_case = cfg.design.build_case(spec)?;
        let t0 = Instant::now();
        let result = simulate(&sim_case)?;
        let dt = t0.elapsed().as_secs_f64();
        report.simulator_s += dt;
        std::hint::black_box(result);
        log(&format!("timed case {id}: simulator {dt:.2} s"));
    }
    Ok(report)
}
