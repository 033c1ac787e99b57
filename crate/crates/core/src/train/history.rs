use std::path::Path;

use sha2::{Digest, Sha256};

use super::config::TrainConfig;
use crate::error::{Error, Result};

pub const HISTORY_HEADER: &str = "epoch,train_loss,val_rmse_norm,val_rmse_phys,seconds";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Sample-weighted mean of the normalized batch losses.
    pub train_loss: f64,
    pub val_rmse_norm: f64,
    /// Validation RMSE in reporting units (psia or saturation fraction).
    pub val_rmse_phys: f64,
    /// Wall time of the epoch including validation.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn new(config: TrainConfig) -> Self {
        Self {
            config,
            epochs: Vec::new(),
        }
    }

    pub fn total_seconds(&self) -> f64 {
        self.epochs.iter().map(|e| e.seconds).sum()
    }

    /// Epoch with the lowest validation RMSE; ties go to the earliest.
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs
            .iter()
            .filter(|e| e.val_rmse_norm.is_finite())
            .fold(None, |best: Option<&EpochRecord>, e| match best {
                Some(b) if b.val_rmse_norm <= e.val_rmse_norm => Some(b),
                _ => Some(e),
            })
    }

    /// Digest of the loss curve, excluding wall times so reruns agree.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.epochs {
            h.update((e.epoch as u64).to_le_bytes());
            for v in [e.train_loss, e.val_rmse_norm, e.val_rmse_phys] {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(HISTORY_HEADER);
        s.push('\n');
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{:.3}\n",
                e.epoch, e.train_loss, e.val_rmse_norm, e.val_rmse_phys, e.seconds
            ));
        }
        s
    }

    /// Parses the CSV written by [`TrainHistory::to_csv`]. The training settings are not
    /// part of the CSV and are taken from `config`.
    pub fn from_csv(text: &str, config: TrainConfig) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(HISTORY_HEADER) {
            return Err(Error::Config(format!("history CSV must start with {HISTORY_HEADER}")));
        }
        let mut out = Self::new(config);
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || Error::Config(format!("history CSV line {}: cannot parse {line:?}", k + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad());
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
            out.epochs.push(EpochRecord {
                epoch: f[0].trim().parse().map_err(|_| bad())?,
                train_loss: num(f[1])?,
                val_rmse_norm: num(f[2])?,
                val_rmse_phys: num(f[3])?,
                seconds: num(f[4])?,
            });
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(epoch: usize, val: f64) -> EpochRecord {
        EpochRecord {
            epoch,
            train_loss: 0.5 / epoch as f64,
            val_rmse_norm: val,
            val_rmse_phys: val * 300.0,
            seconds: 1.25,
        }
    }

    #[test]
    fn best_prefers_earliest_minimum() {
        let mut h = TrainHistory::new(TrainConfig::default());
        h.epochs = vec![record(1, 0.3), record(2, 0.1), record(3, 0.1), record(4, 0.2)];
        assert_eq!(h.best().unwrap().epoch, 2);
    }

    #[test]
    fn csv_round_trip() {
        let mut h = TrainHistory::new(TrainConfig::default());
        h.epochs = vec![record(1, 0.123456789012345), record(2, 0.1)];
        let back = TrainHistory::from_csv(&h.to_csv(), h.config).unwrap();
        assert_eq!(back, h);
        assert!(h.to_csv().starts_with("epoch,train_loss,val_rmse_norm,val_rmse_phys,seconds\n"));
    }

    #[test]
    fn digest_ignores_wall_time() {
        let mut a = TrainHistory::new(TrainConfig::default());
        a.epochs = vec![record(1, 0.2)];
        let mut b = a.clone();
        b.epochs[0].seconds = 99.0;
        assert_eq!(a.digest(), b.digest());
        b.epochs[0].train_loss += 1e-12;
        assert_ne!(a.digest(), b.digest());
    }
}
