use std::path::{Path, PathBuf};

use crate::data::{Scenario, Target};

/// File locations under a run's output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn cases_dir(&self) -> PathBuf {
        self.root.join("cases")
    }

    pub fn archive(&self, case_id: u32) -> PathBuf {
        self.cases_dir().join(format!("case_{case_id:04}.gcsr"))
    }

    pub fn datasets_dir(&self) -> PathBuf {
        self.root.join("datasets")
    }

    pub fn dataset(&self, scenario: Scenario, target: Target) -> PathBuf {
        self.datasets_dir().join(format!("s{}_{}.fnod", scenario.id, target.name()))
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn checkpoint(&self, scenario: Scenario, target: Target) -> PathBuf {
        self.models_dir().join(format!("s{}_{}.fnoc", scenario.id, target.name()))
    }

    pub fn history(&self, scenario: Scenario, target: Target) -> PathBuf {
        self.models_dir().join(format!("s{}_{}_history.csv", scenario.id, target.name()))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.reports_dir().join(name)
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> crate::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))
}
