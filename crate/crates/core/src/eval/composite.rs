use crate::data::{assemble_inputs, CaseInputs, Period, Target};
use crate::error::{Error, Result};
use crate::fno::Checkpoint;
use crate::train::predict_inputs;

/// Two period-specific surrogates stitched at the end of injection.
#[derive(Debug, Clone)]
pub struct CompositeModel {
    pub injection: Checkpoint,
    pub post: Checkpoint,
    pub t_inj: u32,
}

impl CompositeModel {
    pub fn new(injection: Checkpoint, post: Checkpoint) -> Result<Self> {
        if injection.scenario.period != Period::Injection || post.scenario.period != Period::PostInjection {
            return Err(Error::Contract(format!(
                "a composite needs an injection-period and a post-injection model, got {} and {}",
                injection.scenario, post.scenario
            )));
        }
        if injection.target != post.target {
            return Err(Error::Contract(format!(
                "composite targets differ: {} and {}",
                injection.target, post.target
            )));
        }
        if (injection.nx, injection.nz) != (post.nx, post.nz) {
            return Err(Error::Contract(format!(
                "composite grids differ: {}×{} and {}×{}",
                injection.nx, injection.nz, post.nx, post.nz
            )));
        }
        if injection.t_inj != post.t_inj || injection.t_inj.fract() != 0.0 || injection.t_inj < 1.0 {
            return Err(Error::Contract(format!(
                "composite injection ends differ or are not whole months: {} and {}",
                injection.t_inj, post.t_inj
            )));
        }
        let t_inj = injection.t_inj as u32;
        Ok(Self { injection, post, t_inj })
    }

    pub fn target(&self) -> Target {
        self.injection.target
    }

    /// The constituent responsible for `month`; the last injection month belongs to the
    /// injection model.
    pub fn select(&self, month: u32) -> &Checkpoint {
        if month <= self.t_inj {
            &self.injection
        } else {
            &self.post
        }
    }

    /// Predictions (model units) for a case at each month, in order. Each month's inputs
    /// use the rate representation of the constituent that handles it, and every month
    /// gets exactly what that constituent returns for the same group of months.
    pub fn predict(&self, case: &CaseInputs, months: &[u32]) -> Result<Vec<Vec<f64>>> {
        if (case.nx(), case.nz()) != (self.injection.nx, self.injection.nz) {
            return Err(Error::Contract(format!(
                "case {} is {}×{} but the composite was trained on {}×{}",
                case.case_id,
                case.nx(),
                case.nz(),
                self.injection.nx,
                self.injection.nz
            )));
        }
        let mut out: Vec<Option<Vec<f64>>> = vec![None; months.len()];
        for model in [&self.injection, &self.post] {
            let idx: Vec<usize> = (0..months.len())
                .filter(|&k| std::ptr::eq(self.select(months[k]), model))
                .collect();
            if idx.is_empty() {
                continue;
            }
            let inputs: Vec<Vec<f32>> = idx
                .iter()
                .map(|&k| assemble_inputs(case, months[k], model.scenario))
                .collect();
            let refs: Vec<&[f32]> = inputs.iter().map(Vec::as_slice).collect();
            let preds = predict_inputs(&model.params, &model.normalizer, &refs, model.nx, model.nz)?;
            for (k, p) in idx.into_iter().zip(preds) {
                out[k] = Some(p);
            }
        }
        Ok(out.into_iter().map(|p| p.expect("every month is assigned")).collect())
    }
}
