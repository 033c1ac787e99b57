//! End-to-end acceptance report. Prints one PASS/FAIL line per criterion.
//!
//! Criteria 1, 2 and 6 are computed here and asserted. Criteria 3 to 5 depend on the
//! full benchmark run (`plumecast generate/train/evaluate --config configs/benchmark.conf`)
//! and are read from its `reports/metrics.txt`; they are printed but never asserted, so a
//! shortfall is visible without hiding the rest of the suite. Set `PLUMECAST_RUN_DIR` to
//! point at a different run directory.

mod common;

use std::io::Write;
use std::path::PathBuf;

use num_complex::Complex64;
use plumecast::config::RunConfig;
use plumecast::data::{build_dataset, decode_dataset, encode_dataset, dataset_metadata, select_time_steps, Split, SplitPlan, Target, SCENARIOS};
use plumecast::eval::{
    recombination_error, rmse_overall, rmse_per_row, rmse_vs_time, CompositeModel, Prediction, ScenarioReport,
};
use plumecast::field::Field2D;
use plumecast::fno::{decode_checkpoint, encode_checkpoint, fno_backward, fno_forward, fno_init, fno_predict, FnoArch, FnoParams};
use plumecast::grad::check::{check_function, grad_check, probe, FD_EPS};
use plumecast::grad::{relu, relu_backward, rmse_loss, Dense, LeakyRelu, Tensor};
use plumecast::kv::{self, KvMap};
use plumecast::sim::{pressure_solve, simulate, FlowSystem, FluidProps, Grid, RelPermModel, RockFields, SimState, WellStatus};
use plumecast::spectral::conv::seeded_weights;
use plumecast::spectral::{fft2, ifft2, spectral_backward, spectral_forward, SpectralPlan};
use plumecast::train::{train, TrainConfig};
use plumecast::units::MILLIDARCY;

struct Report {
    lines: Vec<String>,
    hard_failures: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, hard: bool, detail: String) {
        let verdict = if ok { "PASS" } else { "FAIL" };
        let kind = if hard { "" } else { " [benchmark]" };
        self.lines.push(format!("{verdict} criterion {id}{kind}: {detail}"));
        if hard && !ok {
            self.hard_failures.push(id.to_string());
        }
    }

    fn skip(&mut self, id: &str, detail: &str) {
        self.lines.push(format!("NOT RUN criterion {id} [benchmark]: {detail}"));
    }
}

fn run_dir() -> PathBuf {
    std::env::var_os("PLUMECAST_RUN_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| common::repo_root().join("runs/benchmark"))
}

fn benchmark_config() -> RunConfig {
    RunConfig::load(&common::repo_root().join("configs/benchmark.conf")).expect("benchmark config parses")
}

// ------------------------------------------------------------------ criterion 1

fn transform_errors() -> (f64, f64) {
    let (nx, nz) = (64, 32);
    let f = probe(&[nx * nz], 1).into_vec();
    let s = fft2(&f, nx, nz).unwrap();
    let back = ifft2(&s).unwrap();
    let round = f.iter().zip(&back).map(|(a, b)| (Complex64::new(*a, 0.0) - b).norm()).fold(0.0, f64::max);
    let lhs: f64 = f.iter().map(|v| v * v).sum();
    let rhs: f64 = s.data.iter().map(|c| c.norm_sqr()).sum::<f64>() / (nx * nz) as f64;
    (round, ((lhs - rhs) / lhs).abs())
}

fn gradient_errors() -> Vec<(&'static str, f64)> {
    let mut out = Vec::new();
    let d = Dense::new(probe(&[4, 3], 1), probe(&[4], 2)).unwrap();
    out.push(("dense", grad_check(&d, &probe(&[3, 2, 4, 4], 3), FD_EPS)));

    let mut x = probe(&[2, 6, 6], 4);
    x.data_mut().iter_mut().filter(|v| v.abs() < 1e-3).for_each(|v| *v += 0.1);
    out.push(("leaky_relu", grad_check(&LeakyRelu { slope: 0.01 }, &x, FD_EPS)));

    let c = probe(x.shape(), 5);
    let f = |a: &[Tensor<f64>]| relu(&a[0]).data().iter().zip(c.data()).map(|(u, v)| u * v).sum::<f64>();
    out.push(("relu", check_function(&f, &[x.clone()], &[relu_backward(&x, &c).unwrap()], FD_EPS)));

    let y = probe(&[1, 2, 4, 4], 6);
    let yhat = probe(&[1, 2, 4, 4], 7);
    let (_, g) = rmse_loss(&y, &yhat).unwrap();
    let f = |a: &[Tensor<f64>]| rmse_loss(&y, &a[0]).unwrap().0;
    out.push(("rmse", check_function(&f, &[yhat.clone()], &[g], FD_EPS)));

    let v = probe(&[2, 2, 8, 8], 8);
    let w = seeded_weights::<f64>(2, 3, 2, 3, 0.5, 9);
    let plan = SpectralPlan::new(8, 8, 2, 3).unwrap();
    let (u, ctx) = spectral_forward(&plan, &w, &v).unwrap();
    let c = probe(u.shape(), 10);
    let (dv, dw) = spectral_backward(&plan, &w, &ctx, &c).unwrap();
    let f = |a: &[Tensor<f64>]| {
        let mut wk = w.clone();
        wk.re = a[1].clone();
        wk.im = a[2].clone();
        let (u, _) = spectral_forward(&plan, &wk, &a[0]).unwrap();
        u.data().iter().zip(c.data()).map(|(x, y)| x * y).sum::<f64>()
    };
    out.push((
        "spectral_conv",
        check_function(&f, &[v.clone(), w.re.clone(), w.im.clone()], &[dv, dw.re, dw.im], FD_EPS),
    ));

    let arch = FnoArch {
        width: 4,
        modes_x: 2,
        modes_z: 2,
        fc2_width: 6,
        fourier_bias: true,
    };
    let params: FnoParams<f64> = fno_init(&arch, 3).unwrap();
    let x = probe(&[5, 8, 8], 4);
    let (y, cache) = fno_forward(&params, &x).unwrap();
    let c = probe(y.shape(), 5);
    let (grads, dx) = fno_backward(&params, &cache, &c).unwrap();
    let mut args: Vec<Tensor<f64>> = params.tensors().into_iter().cloned().collect();
    args.push(x);
    let mut analytic: Vec<Tensor<f64>> = grads.tensors().into_iter().cloned().collect();
    analytic.push(dx);
    let n = args.len() - 1;
    let f = |a: &[Tensor<f64>]| {
        let mut p = params.clone();
        for (dst, src) in p.tensors_mut().into_iter().zip(&a[..n]) {
            *dst = src.clone();
        }
        let y = fno_predict(&p, &a[n]).unwrap();
        y.data().iter().zip(c.data()).map(|(u, v)| u * v).sum::<f64>()
    };
    out.push(("fno_end_to_end", check_function(&f, &args, &analytic, FD_EPS)));
    out
}

/// Largest recorded mass-balance error over the benchmark archives, or over freshly
/// simulated smoke cases when the benchmark has not been generated.
fn mass_balance() -> (f64, usize, &'static str) {
    let cfg = benchmark_config();
    let dir = run_dir().join("cases");
    let mut worst = 0.0f64;
    let mut found = 0;
    for spec in cfg.design.case_specs() {
        let side = dir.join(format!("case_{:04}.txt", spec.case_id));
        if let Some(v) = kv::read(&side).ok().and_then(|m| m.get("max_mass_balance_error")?.parse::<f64>().ok()) {
            worst = worst.max(v);
            found += 1;
        }
    }
    if found == cfg.design.case_specs().len() {
        return (worst, found, "benchmark archives");
    }
    let smoke = common::smoke_config();
    let mut worst = 0.0f64;
    for spec in smoke.design.case_specs() {
        let r = simulate(&smoke.design.build_case(&spec).unwrap()).unwrap();
        worst = worst.max(r.max_mass_balance_error());
    }
    (worst, smoke.design.case_specs().len(), "smoke cases (benchmark archives not generated)")
}

fn linear_pressure_error() -> f64 {
    let grid = Grid::new(6, 1, 10.0, 10.0).unwrap();
    let rock = RockFields::uniform(&grid, 100.0 * MILLIDARCY, 0.2, 0.1).unwrap();
    let sys = FlowSystem::new(
        grid,
        rock,
        FluidProps::default().incompressible().without_gravity(),
        RelPermModel::default(),
        Vec::new(),
        vec![(0, 2.0e7), (5, 1.0e7)],
    )
    .unwrap();
    let mut p0 = Field2D::new(6, 1, 1.5e7);
    p0.set(0, 0, 2.0e7);
    p0.set(5, 0, 1.0e7);
    let state = SimState::new(p0, Field2D::new(6, 1, 0.0), 0.0);
    let sol = pressure_solve(&sys, &state, 86_400.0, WellStatus::Shut, 1e-10).unwrap();
    (0..6)
        .map(|i| (sol.p.data()[i] - (2.0e7 - 2.0e6 * i as f64)).abs() / 2.0e7)
        .fold(0.0, f64::max)
}

/// Dataset and checkpoint round trips plus reruns of simulation, assembly and training.
fn reproducibility() -> Vec<(&'static str, bool)> {
    let cases = common::smoke_cases();
    let cfg = common::smoke_config();
    let ds = build_dataset(cases, SCENARIOS[4], Target::Pressure, 2024).unwrap();
    let bytes = encode_dataset(&ds);
    let back = decode_dataset(&bytes, &dataset_metadata(&ds)).unwrap();
    let rebuilt = build_dataset(cases, SCENARIOS[4], Target::Pressure, 2024).unwrap();

    let spec = &cfg.design.case_specs()[0];
    let sim_case = cfg.design.build_case(spec).unwrap();
    let (a, b) = (simulate(&sim_case).unwrap(), simulate(&sim_case).unwrap());

    let arch = FnoArch {
        width: 4,
        modes_x: 2,
        modes_z: 2,
        fc2_width: 8,
        fourier_bias: true,
    };
    let tc = TrainConfig {
        max_epochs: 1,
        ..TrainConfig::default()
    };
    let mut small = ds.clone();
    small.test.clear();
    let t1 = train(&small, &arch, &tc, &|_| {}).unwrap();
    let t2 = train(&small, &arch, &tc, &|_| {}).unwrap();
    let ck_bytes = encode_checkpoint(&t1.checkpoint).unwrap();
    let ck_back = decode_checkpoint(&ck_bytes).unwrap();
    vec![
        ("dataset round trip", back.bitwise_eq(&ds)),
        ("dataset rebuild", rebuilt.bitwise_eq(&ds)),
        ("simulation rerun", a.bitwise_eq(&b)),
        ("training rerun", t1.checkpoint.bitwise_eq(&t2.checkpoint) && t1.history.digest() == t2.history.digest()),
        ("checkpoint round trip", ck_back.bitwise_eq(&t1.checkpoint) && encode_checkpoint(&ck_back).unwrap() == ck_bytes),
    ]
}

// ------------------------------------------------------------------ criterion 6

fn identity_errors() -> (f64, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..8u64 {
        let (nx, nz) = (16, 8);
        let preds: Vec<Prediction> = (1..=12)
            .flat_map(|m| {
                (0..3).map(move |c| {
                    let truth = probe(&[nx * nz], seed * 1000 + m as u64 * 10 + c).into_vec();
                    let noise = probe(&[nx * nz], seed * 1000 + m as u64 * 10 + c + 500).into_vec();
                    Prediction {
                        case_id: c as u32,
                        month: m,
                        pred: truth.iter().zip(&noise).map(|(t, e)| t + 0.1 * m as f64 * e).collect(),
                        truth,
                    }
                })
            })
            .collect();
        let overall = rmse_overall(&preds).unwrap();
        let months: Vec<u32> = (1..=12).collect();
        let per_month: Vec<(f64, usize)> = rmse_vs_time(&preds, &months)
            .unwrap()
            .into_iter()
            .map(|(_, r)| (r, 3 * nx * nz))
            .collect();
        let per_row: Vec<(f64, usize)> = rmse_per_row(&preds, nx, nz)
            .unwrap()
            .into_iter()
            .map(|r| (r, preds.len() * nx))
            .collect();
        worst.0 = worst.0.max(recombination_error(overall, &per_month));
        worst.1 = worst.1.max(recombination_error(overall, &per_row));
    }
    worst
}

fn composite_is_pixel_identical() -> bool {
    let cases = common::smoke_cases();
    let (case, _) = &cases[0];
    let arch = FnoArch {
        width: 4,
        modes_x: 2,
        modes_z: 2,
        fc2_width: 8,
        fourier_bias: true,
    };
    let tc = TrainConfig {
        max_epochs: 1,
        ..TrainConfig::default()
    };
    let mut models = Vec::new();
    for s in [SCENARIOS[0], SCENARIOS[2]] {
        let mut ds = build_dataset(cases, s, Target::Pressure, 2024).unwrap();
        ds.test.clear();
        models.push(train(&ds, &arch, &tc, &|_| {}).unwrap().checkpoint);
    }
    let post = models.pop().unwrap();
    let inj = models.pop().unwrap();
    let cm = CompositeModel::new(inj, post).unwrap();
    let months: Vec<u32> = (1..=case.t_total).collect();
    let got = cm.predict(case, &months).unwrap();
    months.iter().zip(&got).all(|(&m, g)| {
        let model = cm.select(m);
        let x = plumecast::data::assemble_inputs(case, m, model.scenario);
        let direct = plumecast::train::predict_inputs(&model.params, &model.normalizer, &[&x], model.nx, model.nz)
            .unwrap()
            .remove(0);
        direct.iter().zip(g).all(|(a, b)| a.to_bits() == b.to_bits())
    })
}

// ------------------------------------------------------------------ criteria 3 to 5

fn metric(m: &KvMap, key: &str) -> Option<f64> {
    m.get(key)?.parse().ok()
}

fn benchmark_criteria(r: &mut Report) {
    let dir = run_dir();
    let Ok(m) = kv::read(&dir.join("reports/metrics.txt")) else {
        for id in ["3", "4", "5"] {
            r.skip(id, &format!("no metrics at {}; run the benchmark workflow first", dir.display()));
        }
        return;
    };
    let cfg = benchmark_config();
    let ids: Vec<u32> = cfg.design.case_specs().iter().map(|s| s.case_id).collect();
    let plan = SplitPlan::new(&ids, cfg.split_seed).unwrap();
    let shape = format!(
        "{}x{} grid, {} cases, split {}/{}/{}",
        cfg.design.grid.nx,
        cfg.design.grid.nz,
        ids.len(),
        plan.ids(Split::Train).len(),
        plan.ids(Split::Val).len(),
        plan.ids(Split::Test).len()
    );
    let setup_ok = (cfg.design.grid.nx, cfg.design.grid.nz, ids.len()) == (64, 32, 90)
        && (plan.ids(Split::Train).len(), plan.ids(Split::Val).len(), plan.ids(Split::Test).len()) == (72, 9, 9);
    let train_hours = std::fs::read_to_string(dir.join("reports/scenario_report.csv"))
        .ok()
        .and_then(|t| ScenarioReport::from_csv(&t).ok())
        .map(|t| t.rows.iter().flat_map(|row| row.train_seconds.iter().flatten()).sum::<f64>() / 3600.0);
    r.check(
        "3a",
        setup_ok && train_hours.is_some_and(|h| h <= 4.0),
        false,
        format!(
            "{shape}; training time {} h (budget 4 h)",
            train_hours.map_or("NA".into(), |h| format!("{h:.2}"))
        ),
    );

    let get = |k: &str| metric(&m, k);
    match (get("s4.saturation.rmse.post_injection"), get("s5.saturation.rmse.post_injection")) {
        (Some(a), Some(b)) => r.check(
            "3b",
            a >= 2.0 * b,
            false,
            format!("scenario 4 post-injection saturation RMSE {a:.5} vs 2 x scenario 5's {b:.5} (ratio {:.2})", a / b),
        ),
        _ => r.skip("3b", "scenario 4/5 saturation metrics missing"),
    }
    match (get("s4.pressure.shut_in_jump"), get("s5.pressure.shut_in_jump"), get("composite.pressure.shut_in_jump")) {
        (Some(j4), Some(j5), Some(j3)) => r.check(
            "3c",
            j4 >= 1.5 * j3 && j5 >= 1.5 * j3,
            false,
            format!(
                "shut-in pressure RMSE jump: scenario 4 {j4:.3} psi, scenario 5 {j5:.3} psi, scenario 3 (after scenario 1) {j3:.3} psi; ratios {:.2}, {:.2} (need >= 1.5)",
                j4 / j3,
                j5 / j3
            ),
        ),
        _ => r.skip("3c", "shut-in jump metrics missing"),
    }
    match (get("composite.pressure.rmse"), get("s4.pressure.rmse"), get("s5.pressure.rmse")) {
        (Some(c), Some(p4), Some(p5)) => r.check(
            "3d",
            c <= p4 && c <= p5,
            false,
            format!("composite 1+3 pressure RMSE {c:.3} psi vs scenario 4 {p4:.3}, scenario 5 {p5:.3}"),
        ),
        _ => r.skip("3d", "composite or scenario 4/5 pressure metrics missing"),
    }
    match (get("s5.saturation.rmse"), get("s4.saturation.rmse")) {
        (Some(a), Some(b)) => r.check(
            "3e",
            a <= b,
            false,
            format!("scenario 5 saturation RMSE {a:.5} vs scenario 4 {b:.5}"),
        ),
        _ => r.skip("3e", "scenario 4/5 saturation metrics missing"),
    }

    // Best model per target, by overall test RMSE relative to what the target needs.
    let best = |t: Target| -> Option<(u32, f64)> {
        SCENARIOS
            .iter()
            .filter_map(|s| {
                let k = format!("s{}.{}", s.id, t.name());
                let rmse = get(&format!("{k}.rmse"))?;
                let score = match t {
                    Target::Saturation => rmse,
                    Target::Pressure => rmse / (get(&format!("{k}.truth_max"))? - get(&format!("{k}.truth_min"))?),
                };
                Some((s.id, score))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
    };
    let sat = best(Target::Saturation);
    let pre = best(Target::Pressure);
    match (sat, pre) {
        (Some((ss, sr)), Some((ps, pr))) => {
            r.check(
                "4a",
                sr < 0.05,
                false,
                format!("best saturation model (scenario {ss}) test RMSE {sr:.5} (need < 0.05)"),
            );
            r.check(
                "4b",
                pr < 0.05,
                false,
                format!(
                    "best pressure model (scenario {ps}) test RMSE is {:.2}% of the test pressure range (need < 5%)",
                    100.0 * pr
                ),
            );
            let ratio = |s: u32, t: Target| {
                let k = format!("s{s}.{}", t.name());
                Some(get(&format!("{k}.rmse.interpolated_months"))? / get(&format!("{k}.rmse.trained_months"))?)
            };
            match (ratio(ss, Target::Saturation), ratio(ps, Target::Pressure)) {
                (Some(a), Some(b)) => r.check(
                    "4c",
                    a <= 1.5 && b <= 1.5,
                    false,
                    format!("interpolated/trained-month RMSE: saturation {a:.3}, pressure {b:.3} (need <= 1.5)"),
                ),
                _ => r.skip("4c", "trained/interpolated month metrics missing"),
            }
        }
        _ => r.skip("4", "no evaluated models"),
    }

    match (get("timing.ratio"), get("timing.simulator_seconds"), get("timing.pressure_seconds"), get("timing.saturation_seconds")) {
        (Some(ratio), Some(sim), Some(p), Some(s)) => r.check(
            "5",
            ratio >= 20.0,
            false,
            format!("simulator {sim:.2} s vs surrogate {:.3} s (pressure {p:.3} + saturation {s:.3}): {ratio:.1}x (need >= 20x)", p + s),
        ),
        _ => r.skip("5", "timing metrics missing"),
    }
    if let (Some(a), Some(b)) = (get("s5.pressure.identity.months"), get("s5.pressure.identity.rows")) {
        r.check(
            "6c",
            a < 1e-10 && b < 1e-10,
            false,
            format!("benchmark scenario 5 pressure identities: months {a:.1e}, rows {b:.1e}"),
        );
    }
    if let Some(v) = get("composite.pressure.identical_to_constituents") {
        r.check("6d", v == 1.0, false, "benchmark composite pixel-identical to its constituents".into());
    }
}

#[test]
fn acceptance() {
    let mut r = Report {
        lines: Vec::new(),
        hard_failures: Vec::new(),
    };

    let (round, parseval) = transform_errors();
    r.check(
        "1a",
        round < 1e-10 && parseval < 1e-10,
        true,
        format!("FFT round trip {round:.1e}, Parseval {parseval:.1e} (need < 1e-10)"),
    );
    let grads = gradient_errors();
    let worst = grads.iter().map(|g| g.1).fold(0.0, f64::max);
    r.check(
        "1b",
        worst < 1e-5,
        true,
        format!(
            "gradient checks {} (need < 1e-5)",
            grads.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", ")
        ),
    );
    let (mb, n, source) = mass_balance();
    r.check("1c", mb < 1e-6, true, format!("max mass-balance error {mb:.1e} over {n} {source} (need < 1e-6)"));
    let (bl, analytic) = common::buckley_leverett_error(100, 10.0);
    r.check(
        "1d",
        bl <= 40.0,
        true,
        format!("Buckley-Leverett front off by {:.1} cells at {analytic:.0} m (need <= 4)", bl / 10.0),
    );
    let lin = linear_pressure_error();
    r.check("1e", lin < 1e-10, true, format!("linear pressure profile relative error {lin:.1e}"));
    let repro = reproducibility();
    r.check(
        "1f",
        repro.iter().all(|x| x.1),
        true,
        repro.iter().map(|(n, ok)| format!("{n} {}", if *ok { "bitwise" } else { "DIFFERS" })).collect::<Vec<_>>().join(", "),
    );

    let steps = select_time_steps(360, 960).unwrap();
    let reduction = 1.0 - steps.len() as f64 / 960.0;
    r.check(
        "2",
        steps.len() == 102 && reduction >= 0.85,
        true,
        format!("{} of 960 months selected, {:.1}% reduction (need >= 85%)", steps.len(), 100.0 * reduction),
    );

    let (em, er) = identity_errors();
    r.check("6a", em < 1e-10 && er < 1e-10, true, format!("RMSE identities: per month {em:.1e}, per row {er:.1e}"));
    r.check("6b", composite_is_pixel_identical(), true, "composite output equals the selected constituent bitwise".into());

    benchmark_criteria(&mut r);

    // Written to the process stdout directly so the lines show up without --nocapture.
    let mut text = String::from("\n");
    for line in &r.lines {
        text.push_str(line);
        text.push('\n');
    }
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes()).expect("stdout");
    out.flush().expect("stdout");
    assert!(r.hard_failures.is_empty(), "failed criteria: {:?}", r.hard_failures);
}
