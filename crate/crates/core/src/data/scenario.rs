use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Part of the timeline a model is trained on. Month `t_inj` counts as injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Period {
    Injection,
    PostInjection,
    Both,
}

impl Period {
    pub fn covers(self, month: u32, t_inj: u32) -> bool {
        match self {
            Period::Injection => month <= t_inj,
            Period::PostInjection => month > t_inj,
            Period::Both => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Period::Injection => "injection",
            Period::PostInjection => "post_injection",
            Period::Both => "both",
        }
    }
}

/// How the injector channel encodes the rate schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateFeature {
    /// Instantaneous rate, zero once the wells are shut.
    Rate,
    /// Cumulative injected volume, flat after shut-in.
    Cumulative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub id: u32,
    pub period: Period,
    pub rate_feature: RateFeature,
}

pub const SCENARIOS: [Scenario; 5] = [
    Scenario { id: 1, period: Period::Injection, rate_feature: RateFeature::Rate },
    Scenario { id: 2, period: Period::Injection, rate_feature: RateFeature::Cumulative },
    Scenario { id: 3, period: Period::PostInjection, rate_feature: RateFeature::Cumulative },
    Scenario { id: 4, period: Period::Both, rate_feature: RateFeature::Rate },
    Scenario { id: 5, period: Period::Both, rate_feature: RateFeature::Cumulative },
];

impl Scenario {
    pub fn from_id(id: u32) -> Result<Self> {
        SCENARIOS
            .iter()
            .copied()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::Config(format!("unknown scenario {id}; valid ids are 1, 2, 3, 4, 5")))
    }

    pub fn covers(&self, month: u32, t_inj: u32) -> bool {
        self.period.covers(month, t_inj)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scenario {}", self.id)
    }
}

/// Predicted field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Pressure,
    Saturation,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Pressure, Target::Saturation];

    pub fn code(self) -> u32 {
        match self {
            Target::Pressure => 0,
            Target::Saturation => 1,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Target::Pressure),
            1 => Ok(Target::Saturation),
            _ => Err(Error::Config(format!("unknown target code {code}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::Pressure => "pressure",
            Target::Saturation => "saturation",
        }
    }

    /// Converts a value in model units to reporting units (psia for pressure).
    pub fn report_units(self, v: f64) -> f64 {
        match self {
            Target::Pressure => crate::units::pa_to_psi(v),
            Target::Saturation => v,
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pressure" => Ok(Target::Pressure),
            "saturation" => Ok(Target::Saturation),
            _ => Err(Error::Config(format!("unknown target {s:?}; expected pressure or saturation"))),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_rows() {
        let rows: Vec<(u32, Period, RateFeature)> =
            SCENARIOS.iter().map(|s| (s.id, s.period, s.rate_feature)).collect();
        assert_eq!(
            rows,
            vec![
                (1, Period::Injection, RateFeature::Rate),
                (2, Period::Injection, RateFeature::Cumulative),
                (3, Period::PostInjection, RateFeature::Cumulative),
                (4, Period::Both, RateFeature::Rate),
                (5, Period::Both, RateFeature::Cumulative),
            ]
        );
    }

    #[test]
    fn unknown_scenario_lists_valid_ids() {
        let err = Scenario::from_id(6).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("1, 2, 3, 4, 5"));
    }

    #[test]
    fn boundary_month_is_injection() {
        assert!(Period::Injection.covers(360, 360));
        assert!(!Period::PostInjection.covers(360, 360));
        assert!(Period::PostInjection.covers(361, 360));
    }

    #[test]
    fn target_parsing() {
        assert_eq!("pressure".parse::<Target>().unwrap(), Target::Pressure);
        assert!("temperature".parse::<Target>().is_err());
        for t in Target::ALL {
            assert_eq!(Target::from_code(t.code()).unwrap(), t);
        }
    }
}
