use crate::error::{Error, Result};
use crate::sim::RateSchedule;

/// Snapshot months kept for training.
///
/// The first year after start-up and the first year after shut-in are kept monthly,
/// the rest of each period at year ends only. `t_inj` and `t_total` must be whole years.
pub fn select_time_steps(t_inj: u32, t_total: u32) -> Result<Vec<u32>> {
    if t_inj == 0 || t_inj >= t_total {
        return Err(Error::Config(format!("need 0 < t_inj < t_total, got {t_inj} and {t_total}")));
    }
    if t_inj % 12 != 0 || t_total % 12 != 0 {
        return Err(Error::Config(format!(
            "time-step selection needs whole years, got t_inj={t_inj} and t_total={t_total} months"
        )));
    }
    let mut months: Vec<u32> = Vec::new();
    months.extend(1..=12.min(t_inj));
    months.extend((24..=t_inj).step_by(12));
    months.extend(t_inj + 1..=(t_inj + 12).min(t_total));
    months.extend((t_inj + 24..=t_total).step_by(12));
    months.sort_unstable();
    months.dedup();
    Ok(months)
}

/// Injected volume up to month `t`, frozen at its shut-in value after `t_inj`.
pub fn cumulative_injection(schedule: &RateSchedule, t_inj: u32, t: f64) -> f64 {
    schedule.integral(t.min(t_inj as f64))
}
