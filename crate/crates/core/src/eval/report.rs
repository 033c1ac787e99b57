use crate::data::{Period, Scenario, Target, SCENARIOS};
use crate::error::{Error, Result};

pub const SCENARIO_REPORT_HEADER: &str = "scenario,train_seconds_pressure,train_seconds_saturation,\
pressure_rmse_inj_psi,pressure_rmse_post_psi,saturation_rmse_inj,saturation_rmse_post";

/// One row of the scenario comparison. `None` marks a missing checkpoint or a period
/// the scenario does not cover and is written as `NA`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRow {
    pub scenario: u32,
    /// Training wall time, indexed by [`Target::code`].
    pub train_seconds: [Option<f64>; 2],
    /// Test RMSE in reporting units, indexed by target code then (injection, post).
    pub rmse: [[Option<f64>; 2]; 2],
}

impl ScenarioRow {
    pub fn absent(scenario: u32) -> Self {
        Self {
            scenario,
            train_seconds: [None; 2],
            rmse: [[None; 2]; 2],
        }
    }

    pub fn set_rmse(&mut self, target: Target, period: Period, value: f64) {
        let t = target.code() as usize;
        match period {
            Period::Injection => self.rmse[t][0] = Some(value),
            Period::PostInjection => self.rmse[t][1] = Some(value),
            Period::Both => panic!("period RMSEs are stored per injection or post-injection period"),
        }
    }

    pub fn get_rmse(&self, target: Target, period: Period) -> Option<f64> {
        let t = target.code() as usize;
        match period {
            Period::Injection => self.rmse[t][0],
            Period::PostInjection => self.rmse[t][1],
            Period::Both => None,
        }
    }
}

/// Scenario comparison table, one row per scenario in id order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub rows: Vec<ScenarioRow>,
}

impl Default for ScenarioReport {
    fn default() -> Self {
        Self {
            rows: SCENARIOS.iter().map(|s| ScenarioRow::absent(s.id)).collect(),
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl ScenarioReport {
    pub fn row_mut(&mut self, scenario: Scenario) -> &mut ScenarioRow {
        let pos = self.rows.iter().position(|r| r.scenario == scenario.id);
        match pos {
            Some(i) => &mut self.rows[i],
            None => {
                self.rows.push(ScenarioRow::absent(scenario.id));
                self.rows.last_mut().expect("just pushed")
            }
        }
    }

    pub fn row(&self, scenario: u32) -> Option<&ScenarioRow> {
        self.rows.iter().find(|r| r.scenario == scenario)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{SCENARIO_REPORT_HEADER}\n");
        for r in &self.rows {
            let cells = [
                r.train_seconds[0],
                r.train_seconds[1],
                r.rmse[0][0],
                r.rmse[0][1],
                r.rmse[1][0],
                r.rmse[1][1],
            ];
            s.push_str(&r.scenario.to_string());
            for c in cells {
                s.push(',');
                s.push_str(&cell(c));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(SCENARIO_REPORT_HEADER) {
            return Err(Error::Config(format!("scenario report must start with {SCENARIO_REPORT_HEADER}")));
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || Error::Config(format!("scenario report line {}: cannot parse {line:?}", k + 2));
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 7 {
                return Err(bad());
            }
            let num = |s: &str| -> Result<Option<f64>> {
                if s == "NA" {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad())
                }
            };
            rows.push(ScenarioRow {
                scenario: f[0].parse().map_err(|_| bad())?,
                train_seconds: [num(f[1])?, num(f[2])?],
                rmse: [[num(f[3])?, num(f[4])?], [num(f[5])?, num(f[6])?]],
            });
        }
        Ok(Self { rows })
    }
}

/// Inference against simulation wall time for the same cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingReport {
    pub cases: usize,
    pub pressure_s: f64,
    pub saturation_s: f64,
    pub simulator_s: f64,
}

impl TimingReport {
    pub fn surrogate_s(&self) -> f64 {
        self.pressure_s + self.saturation_s
    }

    /// Simulator time over combined surrogate time.
    pub fn ratio(&self) -> f64 {
        self.simulator_s / self.surrogate_s()
    }

    pub fn to_csv(&self) -> String {
        let per = |v: f64| v / self.cases as f64;
        format!(
            "item,total_seconds,seconds_per_case\n\
             surrogate_pressure,{},{}\n\
             surrogate_saturation,{},{}\n\
             surrogate_total,{},{}\n\
             simulator,{},{}\n\
             speedup,{},{}\n",
            self.pressure_s,
            per(self.pressure_s),
            self.saturation_s,
            per(self.saturation_s),
            self.surrogate_s(),
            per(self.surrogate_s()),
            self.simulator_s,
            per(self.simulator_s),
            self.ratio(),
            self.ratio()
        )
    }
}

/// Two-column `month value` text for plotting tools.
pub fn series_text(series: &[(u32, f64)]) -> String {
    series.iter().map(|(m, v)| format!("{m} {v}\n")).collect()
}
