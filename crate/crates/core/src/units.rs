//! Unit conversions. Everything internal is SI.

/// Pascals per psi (1 psia = 6894.757 Pa).
pub const PA_PER_PSI: f64 = 6894.757;

/// One millidarcy in m².
pub const MILLIDARCY: f64 = 9.869_233e-16;

/// Length of a month: 365.25 / 12 days.
pub const SECONDS_PER_MONTH: f64 = 365.25 / 12.0 * 86_400.0;

pub fn pa_to_psi(p: f64) -> f64 {
    p / PA_PER_PSI
}

pub fn months_to_seconds(months: f64) -> f64 {
    months * SECONDS_PER_MONTH
}
