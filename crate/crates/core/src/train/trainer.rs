use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::history::{EpochRecord, TrainHistory};
use crate::data::{Dataset, Normalizer, Sample, Target, N_CHANNELS};
use crate::error::{Error, Result};
use crate::fno::{fno_backward, fno_forward, fno_init, fno_predict, Checkpoint, FnoArch, FnoParams};
use crate::grad::{adam_step, rmse_loss, AdamState, Tensor};
use crate::kv::KvMap;

/// Samples per forward pass when only predicting.
pub const PREDICT_BATCH: usize = 20;

/// Packs samples into `[5 × B × nx × nz]` inputs and `[1 × B × nx × nz]` targets,
/// normalizing both.
pub fn pack_batch(samples: &[&Sample], nx: usize, nz: usize, norm: &Normalizer) -> Result<(Tensor<f32>, Tensor<f32>)> {
    let n = nx * nz;
    let b = samples.len();
    let mut x = vec![0.0f32; N_CHANNELS * b * n];
    let mut y = vec![0.0f32; b * n];
    for (k, s) in samples.iter().enumerate() {
        if s.y.len() != n || s.x.len() != N_CHANNELS * n {
            return Err(Error::Contract(format!(
                "sample of case {} month {} does not match the {nx}×{nz} grid",
                s.case_id, s.month
            )));
        }
        for c in 0..N_CHANNELS {
            let dst = &mut x[(c * b + k) * n..][..n];
            dst.copy_from_slice(&s.x[c * n..(c + 1) * n]);
            norm.apply_x_channel(c, dst);
        }
        let dst = &mut y[k * n..][..n];
        dst.copy_from_slice(&s.y);
        norm.apply_y(dst);
    }
    Ok((
        Tensor::from_vec(&[N_CHANNELS, b, nx, nz], x)?,
        Tensor::from_vec(&[1, b, nx, nz], y)?,
    ))
}

/// Physical-unit predictions (model units: Pa or saturation) for each sample, in order.
/// Samples are processed in fixed groups of [`PREDICT_BATCH`].
pub fn predict_physical(
    params: &FnoParams<f32>,
    norm: &Normalizer,
    samples: &[&Sample],
    nx: usize,
    nz: usize,
) -> Result<Vec<Vec<f64>>> {
    let inputs: Vec<&[f32]> = samples.iter().map(|s| s.x.as_slice()).collect();
    predict_inputs(params, norm, &inputs, nx, nz)
}

/// Same as [`predict_physical`] for bare `[5 × nx × nz]` input stacks in physical units.
pub fn predict_inputs(
    params: &FnoParams<f32>,
    norm: &Normalizer,
    inputs: &[&[f32]],
    nx: usize,
    nz: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = nx * nz;
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(PREDICT_BATCH) {
        let b = chunk.len();
        let mut x = vec![0.0f32; N_CHANNELS * b * n];
        for (k, src) in chunk.iter().enumerate() {
            if src.len() != N_CHANNELS * n {
                return Err(Error::Contract(format!(
                    "input stack of {} values does not match the {nx}×{nz} grid",
                    src.len()
                )));
            }
            for c in 0..N_CHANNELS {
                let dst = &mut x[(c * b + k) * n..][..n];
                dst.copy_from_slice(&src[c * n..(c + 1) * n]);
                norm.apply_x_channel(c, dst);
            }
        }
        let y = fno_predict(params, &Tensor::from_vec(&[N_CHANNELS, b, nx, nz], x)?)?;
        for k in 0..b {
            out.push(y.data()[k * n..(k + 1) * n].iter().map(|&v| norm.y.invert(v as f64)).collect());
        }
    }
    Ok(out)
}

/// Validation-style error of a model over samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    /// RMSE of the normalized prediction against the normalized target.
    pub norm: f64,
    /// RMSE in reporting units (psia for pressure).
    pub phys: f64,
}

/// RMSE over every pixel of every sample, in normalized and reporting units.
pub fn evaluate_loss(
    params: &FnoParams<f32>,
    samples: &[Sample],
    norm: &Normalizer,
    target: Target,
    nx: usize,
    nz: usize,
) -> Result<LossReport> {
    if samples.is_empty() {
        return Err(Error::Contract("evaluate_loss needs at least one sample".into()));
    }
    let n = nx * nz;
    let refs: Vec<&Sample> = samples.iter().collect();
    let (mut sq_norm, mut sq_phys) = (0.0f64, 0.0f64);
    for chunk in refs.chunks(PREDICT_BATCH) {
        let (x, y) = pack_batch(chunk, nx, nz, norm)?;
        let yhat = fno_predict(params, &x)?;
        for (k, s) in chunk.iter().enumerate() {
            for i in 0..n {
                let p = yhat.data()[k * n + i];
                let d = (p - y.data()[k * n + i]) as f64;
                sq_norm += d * d;
                let e = target.report_units(norm.y.invert(p as f64)) - target.report_units(s.y[i] as f64);
                sq_phys += e * e;
            }
        }
    }
    let count = (samples.len() * n) as f64;
    Ok(LossReport {
        norm: (sq_norm / count).sqrt(),
        phys: (sq_phys / count).sqrt(),
    })
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation RMSE.
    pub checkpoint: Checkpoint,
    pub history: TrainHistory,
    pub best_epoch: usize,
}

/// Trains a fresh network on the dataset's training split with Adam on the RMSE loss,
/// validating after every `eval_every` epochs and keeping the best validated parameters.
pub fn train(
    ds: &Dataset,
    arch: &FnoArch,
    cfg: &TrainConfig,
    log: &dyn Fn(&str),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if ds.train.is_empty() || ds.val.is_empty() {
        return Err(Error::Contract(format!(
            "{} {} dataset needs training and validation samples",
            ds.scenario, ds.target
        )));
    }
    let (nx, nz) = (ds.nx, ds.nz);
    let norm = &ds.normalizer;
    let mut params: FnoParams<f32> = fno_init(arch, cfg.init_seed)?;
    let names = params.tensor_names();
    let mut adam = AdamState::new(&params.tensors());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..ds.train.len()).collect();
    let mut history = TrainHistory::new(*cfg);
    let mut best: Option<(f64, usize, FnoParams<f32>)> = None;

    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Sample> = idx.iter().map(|&i| &ds.train[i]).collect();
            let (x, y) = pack_batch(&batch, nx, nz, norm)?;
            let numerical = |m: String| Error::Numerical(format!("epoch {epoch}, batch {}: {m}", bi + 1));
            let (yhat, cache) = fno_forward(&params, &x).map_err(|e| match e {
                Error::Numerical(m) => numerical(m),
                other => other,
            })?;
            let (loss, grad) = rmse_loss(&y, &yhat)?;
            if !loss.is_finite() {
                return Err(numerical(format!("loss is {loss}")));
            }
            loss_sum += loss as f64 * batch.len() as f64;
            let (grads, _) = fno_backward(&params, &cache, &grad)?;
            adam_step(&mut params.tensors_mut(), &grads.into_tensors(), &names, &mut adam, cfg.lr).map_err(
                |e| match e {
                    Error::Numerical(m) => numerical(m),
                    other => other,
                },
            )?;
        }
        let train_loss = loss_sum / ds.train.len() as f64;
        let validate = epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs;
        let (val_norm, val_phys) = if validate {
            let v = evaluate_loss(&params, &ds.val, norm, ds.target, nx, nz)?;
            if best.as_ref().is_none_or(|b| v.norm < b.0) {
                best = Some((v.norm, epoch, params.clone()));
            }
            (v.norm, v.phys)
        } else {
            (f64::NAN, f64::NAN)
        };
        let rec = EpochRecord {
            epoch,
            train_loss,
            val_rmse_norm: val_norm,
            val_rmse_phys: val_phys,
            seconds: start.elapsed().as_secs_f64(),
        };
        log(&format!(
            "{} {} epoch {epoch}/{}: train {:.5}, val {:.5} ({:.5} {}), {:.1} s",
            ds.scenario,
            ds.target,
            cfg.max_epochs,
            rec.train_loss,
            rec.val_rmse_norm,
            rec.val_rmse_phys,
            units(ds.target),
            rec.seconds
        ));
        history.epochs.push(rec);
    }

    let (_, best_epoch, best_params) = best.expect("the last epoch is always validated");
    let mut meta = KvMap::new();
    meta.insert("init_seed".into(), cfg.init_seed.to_string());
    meta.insert("shuffle_seed".into(), cfg.shuffle_seed.to_string());
    meta.insert("split_seed".into(), ds.split_seed.to_string());
    meta.insert("batch_size".into(), cfg.batch_size.to_string());
    meta.insert("max_epochs".into(), cfg.max_epochs.to_string());
    meta.insert("lr".into(), cfg.lr.to_string());
    meta.insert("best_epoch".into(), best_epoch.to_string());
    meta.insert("history_digest".into(), history.digest());
    meta.insert("train_samples".into(), ds.train.len().to_string());
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            scenario: ds.scenario,
            target: ds.target,
            nx,
            nz,
            t_inj: ds.t_inj as f64,
            params: best_params,
            normalizer: norm.clone(),
            meta,
        },
        history,
        best_epoch,
    })
}

pub fn units(target: Target) -> &'static str {
    match target {
        Target::Pressure => "psia",
        Target::Saturation => "fraction",
    }
}
