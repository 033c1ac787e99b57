use plumecast::eval::{
    recombination_error, rmse_overall, rmse_per_row, rmse_vs_time, well_series_error, ErrorAccumulator, Prediction,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_predictions(seed: u64, months: u32, cases: u32, nx: usize, nz: usize) -> Vec<Prediction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for case_id in 0..cases {
        for month in 1..=months {
            let truth: Vec<f64> = (0..nx * nz).map(|_| rng.random_range(0.0..3000.0)).collect();
            let pred = truth.iter().map(|t| t + rng.random_range(-50.0..50.0) * month as f64).collect();
            out.push(Prediction {
                case_id,
                month,
                pred,
                truth,
            });
        }
    }
    out
}

#[test]
fn single_month_matches_brute_force() {
    let preds = random_predictions(3, 6, 4, 8, 4);
    let series = rmse_vs_time(&preds, &[4]).unwrap();
    let mut sq = 0.0;
    let mut n = 0;
    for p in preds.iter().filter(|p| p.month == 4) {
        for (a, b) in p.pred.iter().zip(&p.truth) {
            sq += (a - b).powi(2);
            n += 1;
        }
    }
    let brute = (sq / n as f64).sqrt();
    assert!((series[0].1 - brute).abs() <= 1e-10 * brute);
}

#[test]
fn well_error_is_undefined_not_fatal_for_zero_truth() {
    assert_eq!(well_series_error(&[0.1, 0.2], &[0.0, 0.0]).unwrap(), None);
    assert!(well_series_error(&[0.1], &[0.0, 0.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn month_and_row_decompositions_recombine(seed in any::<u64>(), months in 1u32..12, cases in 1u32..4, px in 1u32..4, pz in 1u32..4) {
        let (nx, nz) = (1usize << px, 1usize << pz);
        let preds = random_predictions(seed, months, cases, nx, nz);
        let overall = rmse_overall(&preds).unwrap();
        let ms: Vec<u32> = (1..=months).collect();
        let per_month: Vec<(f64, usize)> = rmse_vs_time(&preds, &ms)
            .unwrap()
            .into_iter()
            .map(|(_, r)| (r, cases as usize * nx * nz))
            .collect();
        prop_assert!(recombination_error(overall, &per_month) < 1e-10);
        let per_row: Vec<(f64, usize)> = rmse_per_row(&preds, nx, nz)
            .unwrap()
            .into_iter()
            .map(|r| (r, preds.len() * nx))
            .collect();
        prop_assert!(recombination_error(overall, &per_row) < 1e-10);

        let mut acc = ErrorAccumulator::new(nx, nz);
        for p in &preds {
            acc.add(p).unwrap();
        }
        let (em, er) = acc.identity_errors();
        prop_assert!(em < 1e-10 && er < 1e-10);
        prop_assert!((acc.rmse().unwrap() - overall).abs() <= 1e-10 * overall);
    }

    #[test]
    fn constant_offset_gives_flat_series(offset in -100.0f64..100.0, months in 1u32..10) {
        let preds: Vec<Prediction> = (1..=months)
            .map(|m| Prediction { case_id: 0, month: m, pred: vec![2.0 + offset; 8], truth: vec![2.0; 8] })
            .collect();
        let ms: Vec<u32> = (1..=months).collect();
        for (_, r) in rmse_vs_time(&preds, &ms).unwrap() {
            prop_assert!((r - offset.abs()).abs() < 1e-12 * (1.0 + offset.abs()));
        }
    }
}
