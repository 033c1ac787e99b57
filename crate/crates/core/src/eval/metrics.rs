use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::Field2D;

/// A predicted field next to its truth, both `[nx × nz]` with z fastest, in reporting units.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub case_id: u32,
    pub month: u32,
    pub pred: Vec<f64>,
    pub truth: Vec<f64>,
}

impl Prediction {
    fn check(&self, n: usize) -> Result<()> {
        if self.pred.len() != n || self.truth.len() != n {
            return Err(Error::Contract(format!(
                "case {} month {}: expected {n} pixels, got {} predicted and {} true",
                self.case_id,
                self.month,
                self.pred.len(),
                self.truth.len()
            )));
        }
        Ok(())
    }

    pub fn sum_sq(&self) -> f64 {
        self.pred.iter().zip(&self.truth).map(|(p, t)| (p - t) * (p - t)).sum()
    }
}

fn pixels(preds: &[Prediction]) -> Result<usize> {
    let n = preds
        .first()
        .ok_or_else(|| Error::Contract("no predictions to score".into()))?
        .truth
        .len();
    for p in preds {
        p.check(n)?;
    }
    Ok(n)
}

/// RMSE over every pixel of every prediction.
pub fn rmse_overall(preds: &[Prediction]) -> Result<f64> {
    let n = pixels(preds)?;
    let sq: f64 = preds.iter().map(Prediction::sum_sq).sum();
    Ok((sq / (n * preds.len()) as f64).sqrt())
}

/// Per-month RMSE over all cases and pixels, for each month in `months`.
/// A month without predictions is a contract error.
pub fn rmse_vs_time(preds: &[Prediction], months: &[u32]) -> Result<Vec<(u32, f64)>> {
    let n = pixels(preds)?;
    let mut acc: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for p in preds {
        let e = acc.entry(p.month).or_insert((0.0, 0));
        e.0 += p.sum_sq();
        e.1 += n;
    }
    months
        .iter()
        .map(|m| {
            let (sq, count) = acc
                .get(m)
                .ok_or_else(|| Error::Contract(format!("no predictions for month {m}")))?;
            Ok((*m, (sq / *count as f64).sqrt()))
        })
        .collect()
}

/// RMSE restricted to each depth row `iz`, over all predictions.
pub fn rmse_per_row(preds: &[Prediction], nx: usize, nz: usize) -> Result<Vec<f64>> {
    let n = pixels(preds)?;
    if n != nx * nz {
        return Err(Error::Contract(format!("{n} pixels do not form a {nx}×{nz} grid")));
    }
    let mut sq = vec![0.0; nz];
    for p in preds {
        for ix in 0..nx {
            for (iz, s) in sq.iter_mut().enumerate() {
                let k = ix * nz + iz;
                let d = p.pred[k] - p.truth[k];
                *s += d * d;
            }
        }
    }
    let count = (nx * preds.len()) as f64;
    Ok(sq.into_iter().map(|s| (s / count).sqrt()).collect())
}

/// Streaming sums of squared errors, kept per month and per depth row so that the
/// overall, per-month and per-row RMSEs come from the same pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorAccumulator {
    nx: usize,
    nz: usize,
    month_sq: BTreeMap<u32, (f64, usize)>,
    row_sq: Vec<f64>,
    samples: usize,
    truth_min: f64,
    truth_max: f64,
}

impl ErrorAccumulator {
    pub fn new(nx: usize, nz: usize) -> Self {
        Self {
            nx,
            nz,
            month_sq: BTreeMap::new(),
            row_sq: vec![0.0; nz],
            samples: 0,
            truth_min: f64::INFINITY,
            truth_max: f64::NEG_INFINITY,
        }
    }

    pub fn add(&mut self, p: &Prediction) -> Result<()> {
        let n = self.nx * self.nz;
        p.check(n)?;
        let mut total = 0.0;
        for ix in 0..self.nx {
            for iz in 0..self.nz {
                let k = ix * self.nz + iz;
                let d = p.pred[k] - p.truth[k];
                self.row_sq[iz] += d * d;
                total += d * d;
                self.truth_min = self.truth_min.min(p.truth[k]);
                self.truth_max = self.truth_max.max(p.truth[k]);
            }
        }
        let e = self.month_sq.entry(p.month).or_insert((0.0, 0));
        e.0 += total;
        e.1 += n;
        self.samples += 1;
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }

    pub fn months(&self) -> Vec<u32> {
        self.month_sq.keys().copied().collect()
    }

    /// RMSE over the months for which `keep` holds, or `None` if there are none.
    pub fn rmse_where(&self, keep: impl Fn(u32) -> bool) -> Option<f64> {
        let (sq, n) = self
            .month_sq
            .iter()
            .filter(|(m, _)| keep(**m))
            .fold((0.0, 0usize), |(s, c), (_, (ms, mc))| (s + ms, c + mc));
        (n > 0).then(|| (sq / n as f64).sqrt())
    }

    pub fn rmse(&self) -> Option<f64> {
        self.rmse_where(|_| true)
    }

    pub fn series(&self) -> Vec<(u32, f64)> {
        self.month_sq.iter().map(|(m, (s, c))| (*m, (s / *c as f64).sqrt())).collect()
    }

    pub fn month(&self, month: u32) -> Option<f64> {
        self.month_sq.get(&month).map(|(s, c)| (s / *c as f64).sqrt())
    }

    pub fn per_row(&self) -> Vec<f64> {
        let count = (self.nx * self.samples) as f64;
        self.row_sq.iter().map(|s| (s / count).sqrt()).collect()
    }

    /// Smallest and largest true value seen.
    pub fn truth_range(&self) -> (f64, f64) {
        (self.truth_min, self.truth_max)
    }

    /// Relative residuals of the per-month and per-row recombination identities.
    pub fn identity_errors(&self) -> (f64, f64) {
        let overall = self.rmse().unwrap_or(0.0);
        let months: Vec<(f64, usize)> = self.month_sq.values().map(|(s, c)| ((s / *c as f64).sqrt(), *c)).collect();
        let rows: Vec<(f64, usize)> = self.per_row().into_iter().map(|r| (r, self.nx * self.samples)).collect();
        (recombination_error(overall, &months), recombination_error(overall, &rows))
    }
}

/// Relative residual of the identity `overall² = pixel-weighted mean of parts²`,
/// where every part carries `weight` pixels.
pub fn recombination_error(overall: f64, parts: &[(f64, usize)]) -> f64 {
    let total: usize = parts.iter().map(|p| p.1).sum();
    let mean_sq: f64 = parts.iter().map(|(r, w)| r * r * *w as f64).sum::<f64>() / total as f64;
    let o2 = overall * overall;
    if o2 == 0.0 {
        mean_sq.abs()
    } else {
        (mean_sq - o2).abs() / o2
    }
}

/// Percent L2 error `100·‖pred − truth‖ / ‖truth‖`; `None` when the truth has zero norm.
pub fn well_series_error(pred: &[f64], truth: &[f64]) -> Result<Option<f64>> {
    if pred.len() != truth.len() {
        return Err(Error::Contract(format!(
            "series lengths differ: {} predicted, {} true",
            pred.len(),
            truth.len()
        )));
    }
    let num: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    let den: f64 = truth.iter().map(|t| t * t).sum();
    Ok((den > 0.0).then(|| 100.0 * (num / den).sqrt()))
}

/// Plain sum of `sg·φ` over all cells.
pub fn co2_pore_volume(sg: &Field2D, poro: &Field2D) -> Result<f64> {
    if !sg.same_shape(poro) {
        return Err(Error::Contract(format!(
            "saturation is {}×{} but porosity is {}×{}",
            sg.nx(),
            sg.nz(),
            poro.nx(),
            poro.nz()
        )));
    }
    Ok(sg.data().iter().zip(poro.data()).map(|(s, p)| s * p).sum())
}

/// Same sum for z-fastest pixel vectors.
pub fn pore_volume_of(sg: &[f64], poro: &[f64]) -> f64 {
    sg.iter().zip(poro).map(|(s, p)| s * p).sum()
}

/// Largest distance of a series from its least-squares line, relative to its last value.
pub fn linearity_deviation(series: &[f64]) -> f64 {
    let n = series.len() as f64;
    if series.len() < 2 {
        return 0.0;
    }
    let xm = (n - 1.0) / 2.0;
    let ym = series.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in series.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    let dev = series
        .iter()
        .enumerate()
        .map(|(i, y)| (y - (ym + slope * (i as f64 - xm))).abs())
        .fold(0.0, f64::max);
    dev / series.last().expect("non-empty").abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(month: u32, pred: Vec<f64>, truth: Vec<f64>) -> Prediction {
        Prediction {
            case_id: 1,
            month,
            pred,
            truth,
        }
    }

    #[test]
    fn identical_predictions_score_zero() {
        let p = vec![pred(1, vec![1.0, 2.0], vec![1.0, 2.0]), pred(2, vec![3.0, 4.0], vec![3.0, 4.0])];
        assert_eq!(rmse_overall(&p).unwrap(), 0.0);
        assert_eq!(rmse_vs_time(&p, &[1, 2]).unwrap(), vec![(1, 0.0), (2, 0.0)]);
        assert_eq!(rmse_per_row(&p, 1, 2).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn constant_offset_series() {
        let p: Vec<Prediction> = (1..=4).map(|m| pred(m, vec![1.5; 6], vec![1.0; 6])).collect();
        for (_, r) in rmse_vs_time(&p, &[1, 2, 3, 4]).unwrap() {
            assert!((r - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn missing_month_is_an_error() {
        let p = vec![pred(1, vec![0.0], vec![0.0])];
        assert!(matches!(rmse_vs_time(&p, &[1, 2]), Err(Error::Contract(_))));
        assert!(rmse_overall(&[]).is_err());
    }

    #[test]
    fn row_indicator() {
        // nx = 2, nz = 3; error only in row 1.
        let truth = vec![0.0; 6];
        let mut p = truth.clone();
        p[1] = 2.0;
        p[4] = 2.0;
        let rows = rmse_per_row(&[pred(1, p, truth)], 2, 3).unwrap();
        assert_eq!(rows, vec![0.0, 2.0, 0.0]);
    }

    #[test]
    fn well_error_examples() {
        let t = vec![2.0, 3.0, 4.0];
        assert_eq!(well_series_error(&t, &t).unwrap(), Some(0.0));
        let scaled: Vec<f64> = t.iter().map(|v| v * 1.001).collect();
        assert!((well_series_error(&scaled, &t).unwrap().unwrap() - 0.1).abs() < 1e-9);
        assert_eq!(well_series_error(&[1.0], &[0.0]).unwrap(), None);
    }

    #[test]
    fn pore_volume_examples() {
        let sg = Field2D::from_vec(2, 1, vec![0.5, 0.25]).unwrap();
        let phi = Field2D::from_vec(2, 1, vec![0.2, 0.4]).unwrap();
        assert!((co2_pore_volume(&sg, &phi).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(co2_pore_volume(&Field2D::new(2, 1, 0.0), &phi).unwrap(), 0.0);
        assert!(co2_pore_volume(&Field2D::new(1, 2, 0.0), &phi).is_err());
    }

    #[test]
    fn accumulator_agrees_with_batch_functions() {
        let p: Vec<Prediction> = (1..=3)
            .flat_map(|m| {
                (0..2).map(move |c| Prediction {
                    case_id: c,
                    month: m,
                    pred: (0..6).map(|k| (k * m as usize + c as usize) as f64 * 0.1).collect(),
                    truth: (0..6).map(|k| k as f64 * 0.05).collect(),
                })
            })
            .collect();
        let mut acc = ErrorAccumulator::new(2, 3);
        for q in &p {
            acc.add(q).unwrap();
        }
        assert!((acc.rmse().unwrap() - rmse_overall(&p).unwrap()).abs() < 1e-14);
        let series = rmse_vs_time(&p, &[1, 2, 3]).unwrap();
        for ((m, a), (mb, b)) in acc.series().into_iter().zip(series) {
            assert_eq!(m, mb);
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in acc.per_row().into_iter().zip(rmse_per_row(&p, 2, 3).unwrap()) {
            assert!((a - b).abs() < 1e-14);
        }
        let (em, er) = acc.identity_errors();
        assert!(em < 1e-12 && er < 1e-12);
        assert_eq!(acc.rmse_where(|m| m > 5), None);
        assert_eq!(acc.truth_range(), (0.0, 0.25));
    }

    #[test]
    fn linearity_of_a_line_is_exact() {
        let s: Vec<f64> = (1..=10).map(|i| 3.0 * i as f64).collect();
        assert!(linearity_deviation(&s) < 1e-12);
        let bent: Vec<f64> = (1..=10).map(|i| (i * i) as f64).collect();
        assert!(linearity_deviation(&bent) > 0.05);
    }
}
