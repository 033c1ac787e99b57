use super::scenario::{RateFeature, Scenario, Target};
use super::steps::cumulative_injection;
use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::sim::{RateSchedule, SimCase, SimState, WellControl};
use crate::units::MILLIDARCY;

pub const N_CHANNELS: usize = 5;
pub const CH_PERM: usize = 0;
pub const CH_PORO: usize = 1;
pub const CH_PRODUCERS: usize = 2;
pub const CH_RATE: usize = 3;
pub const CH_TIME: usize = 4;

/// An injector as seen by the feature assembler.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectorFeature {
    pub cells: Vec<(usize, usize)>,
    pub schedule: RateSchedule,
}

/// Static inputs of one simulated case, independent of time.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseInputs {
    pub case_id: u32,
    /// `log10` of horizontal permeability in millidarcy.
    pub log_perm: Field2D,
    pub poro: Field2D,
    pub producer_mask: Field2D,
    pub injectors: Vec<InjectorFeature>,
    pub t_inj: u32,
    pub t_total: u32,
}

impl CaseInputs {
    pub fn from_case(case: &SimCase) -> Self {
        let sys = &case.system;
        let mut producer_mask = Field2D::new(sys.grid.nx, sys.grid.nz, 0.0);
        let mut injectors = Vec::new();
        for w in sys.wells() {
            match &w.control {
                WellControl::Injector { schedule } => injectors.push(InjectorFeature {
                    cells: w.cells.clone(),
                    schedule: schedule.clone(),
                }),
                WellControl::Producer { .. } => {
                    for &(ix, iz) in &w.cells {
                        producer_mask.set(ix, iz, 1.0);
                    }
                }
            }
        }
        Self {
            case_id: case.case_id,
            log_perm: sys.rock.perm_h.map(|k| (k / MILLIDARCY).log10()),
            poro: sys.rock.poro.clone(),
            producer_mask,
            injectors,
            t_inj: case.schedule.t_inj,
            t_total: case.schedule.t_total,
        }
    }

    pub fn nx(&self) -> usize {
        self.log_perm.nx()
    }

    pub fn nz(&self) -> usize {
        self.log_perm.nz()
    }

    /// Value written at an injector's perforations for `month`: the rate in m³/day
    /// during that month, or the cumulative injected volume in m³.
    pub fn rate_value(&self, well: &InjectorFeature, month: u32, feature: RateFeature) -> f64 {
        match feature {
            RateFeature::Rate if month <= self.t_inj => well.schedule.rate_in_month(month) * 86_400.0,
            RateFeature::Rate => 0.0,
            RateFeature::Cumulative => cumulative_injection(&well.schedule, self.t_inj, month as f64),
        }
    }

    pub fn rate_channel(&self, month: u32, feature: RateFeature) -> Field2D {
        let mut f = Field2D::new(self.nx(), self.nz(), 0.0);
        for w in &self.injectors {
            let v = self.rate_value(w, month, feature);
            for &(ix, iz) in &w.cells {
                f.set(ix, iz, v);
            }
        }
        f
    }
}

/// One training or test example. `x` is `[5 × nx × nz]` and `y` is `[nx × nz]`,
/// both with z varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub case_id: u32,
    pub month: u32,
    pub x: Vec<f32>,
    pub y: Vec<f32>,
}

impl Sample {
    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.y.len();
        &self.x[c * n..(c + 1) * n]
    }

    pub fn bitwise_eq(&self, other: &Sample) -> bool {
        self.case_id == other.case_id
            && self.month == other.month
            && self.x.len() == other.x.len()
            && self.y.len() == other.y.len()
            && self.x.iter().zip(&other.x).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.y.iter().zip(&other.y).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Counts of snapshots kept and dropped by period filtering.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyStats {
    pub assembled: usize,
    pub filtered: usize,
}

/// Copies an x-fastest field into a z-fastest `f32` block.
fn write_transposed(dst: &mut [f32], f: &Field2D) {
    let nz = f.nz();
    for ix in 0..f.nx() {
        for iz in 0..nz {
            dst[ix * nz + iz] = f.get(ix, iz) as f32;
        }
    }
}

/// Month number of a snapshot, which must sit on a whole month after the start.
pub fn snapshot_month(s: &SimState) -> Result<u32> {
    if !(s.t >= 1.0 && s.t.fract() == 0.0 && s.t <= u32::MAX as f64) {
        return Err(Error::Contract(format!("snapshot time {} is not a whole month >= 1", s.t)));
    }
    Ok(s.t as u32)
}

/// Input channels `[5 × nx × nz]` of a case at a month, with the rate channel in the
/// scenario's representation. No period check; no simulator state needed.
pub fn assemble_inputs(case: &CaseInputs, month: u32, scenario: Scenario) -> Vec<f32> {
    let n = case.nx() * case.nz();
    let mut x = vec![0.0f32; N_CHANNELS * n];
    write_transposed(&mut x[CH_PERM * n..][..n], &case.log_perm);
    write_transposed(&mut x[CH_PORO * n..][..n], &case.poro);
    write_transposed(&mut x[CH_PRODUCERS * n..][..n], &case.producer_mask);
    write_transposed(&mut x[CH_RATE * n..][..n], &case.rate_channel(month, scenario.rate_feature));
    x[CH_TIME * n..].fill((month as f64 / case.t_total as f64) as f32);
    x
}

/// Builds the sample for one snapshot. Returns `None` when the month lies outside the
/// scenario's period.
pub fn assemble_sample(
    case: &CaseInputs,
    snapshot: &SimState,
    scenario: Scenario,
    target: Target,
) -> Result<Option<Sample>> {
    let (nx, nz) = (case.nx(), case.nz());
    if snapshot.p.nx() != nx || snapshot.p.nz() != nz {
        return Err(Error::Contract(format!(
            "case {} inputs are {nx}×{nz} but the snapshot is {}×{}",
            case.case_id,
            snapshot.p.nx(),
            snapshot.p.nz()
        )));
    }
    let month = snapshot_month(snapshot)?;
    if !scenario.covers(month, case.t_inj) {
        return Ok(None);
    }
    let x = assemble_inputs(case, month, scenario);
    let mut y = vec![0.0f32; nx * nz];
    match target {
        Target::Pressure => write_transposed(&mut y, &snapshot.p),
        Target::Saturation => write_transposed(&mut y, &snapshot.sg),
    }
    Ok(Some(Sample {
        case_id: case.case_id,
        month,
        x,
        y,
    }))
}

/// Assembles a stack of sections of the same case and month, one sample per section,
/// in stack order. Sections outside the period are dropped and counted.
pub fn assemble_sections(
    sections: &[(&CaseInputs, &SimState)],
    scenario: Scenario,
    target: Target,
    stats: &mut AssemblyStats,
) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity(sections.len());
    for &(case, snap) in sections {
        match assemble_sample(case, snap, scenario, target)? {
            Some(s) => {
                stats.assembled += 1;
                out.push(s);
            }
            None => stats.filtered += 1,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::scenario::SCENARIOS;

    fn tiny_case() -> CaseInputs {
        CaseInputs {
            case_id: 4,
            log_perm: Field2D::from_fn(3, 2, |ix, iz| (ix * 10 + iz) as f64),
            poro: Field2D::new(3, 2, 0.2),
            producer_mask: Field2D::from_fn(3, 2, |ix, _| (ix == 2) as u8 as f64),
            injectors: vec![InjectorFeature {
                cells: vec![(0, 1)],
                schedule: RateSchedule::constant(1.0 / 86_400.0, 24).unwrap(),
            }],
            t_inj: 24,
            t_total: 48,
        }
    }

    fn snap(t: f64) -> SimState {
        SimState::new(Field2D::new(3, 2, 2e7), Field2D::new(3, 2, 0.1), t)
    }

    #[test]
    fn layout_is_z_fastest() {
        let c = tiny_case();
        let s = assemble_sample(&c, &snap(6.0), SCENARIOS[0], Target::Pressure).unwrap().unwrap();
        // Cell (ix=1, iz=0) holds 10 and (ix=0, iz=1) holds 1.
        assert_eq!(s.channel(CH_PERM), &[0.0, 1.0, 10.0, 11.0, 20.0, 21.0]);
        assert_eq!(s.channel(CH_PRODUCERS), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(s.channel(CH_RATE), &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(s.channel(CH_TIME).iter().all(|&v| v == 0.125));
        assert!(s.y.iter().all(|&v| v == 2e7));
    }

    #[test]
    fn period_filtering() {
        let c = tiny_case();
        let s3 = SCENARIOS[2];
        assert!(assemble_sample(&c, &snap(24.0), s3, Target::Saturation).unwrap().is_none());
        assert!(assemble_sample(&c, &snap(25.0), s3, Target::Saturation).unwrap().is_some());
        let mut stats = AssemblyStats::default();
        let (a, b) = (snap(3.0), snap(30.0));
        let out = assemble_sections(&[(&c, &a), (&c, &b)], SCENARIOS[0], Target::Pressure, &mut stats).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(stats, AssemblyStats { assembled: 1, filtered: 1 });
    }

    #[test]
    fn rate_feature_after_shut_in() {
        let c = tiny_case();
        let s4 = assemble_sample(&c, &snap(30.0), SCENARIOS[3], Target::Pressure).unwrap().unwrap();
        assert!(s4.channel(CH_RATE).iter().all(|&v| v == 0.0));
        let s5a = assemble_sample(&c, &snap(30.0), SCENARIOS[4], Target::Pressure).unwrap().unwrap();
        let s5b = assemble_sample(&c, &snap(48.0), SCENARIOS[4], Target::Pressure).unwrap().unwrap();
        assert_eq!(s5a.channel(CH_RATE), s5b.channel(CH_RATE));
        assert!(s5a.channel(CH_RATE)[1] > 0.0);
    }

    #[test]
    fn rejects_fractional_month_and_shape_mismatch() {
        let c = tiny_case();
        assert!(assemble_sample(&c, &snap(2.5), SCENARIOS[3], Target::Pressure).is_err());
        let bad = SimState::new(Field2D::new(2, 2, 0.0), Field2D::new(2, 2, 0.0), 1.0);
        assert!(assemble_sample(&c, &bad, SCENARIOS[3], Target::Pressure).is_err());
    }
}
