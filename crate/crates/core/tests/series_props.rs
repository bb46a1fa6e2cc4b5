use chrono::{Duration, TimeZone, Utc};
use newscast::{
    compute_metrics, make_windows, parse_digits, serialize_digits, split_tasks, Domain, FormatPolicy, ParseMode,
    SplitRole, TimeSeries,
};
use proptest::prelude::*;

fn series(values: Vec<f64>) -> TimeSeries {
    let start = Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap();
    TimeSeries::new("s", Domain::Traffic, "CA", Duration::hours(1), start, values).unwrap()
}

proptest! {
    #[test]
    fn digits_round_trip(values in prop::collection::vec(-1e5f64..1e5, 0..40), digits in 0u8..4) {
        let policy = FormatPolicy::Decimals(digits);
        let text = serialize_digits(&values, policy).unwrap();
        let back: Vec<f64> = parse_digits(&text, Some(values.len()), ParseMode::Strict).unwrap();
        let half = 0.5 * 10f64.powi(-(digits as i32)) + 1e-9;
        for (a, b) in values.iter().zip(&back) {
            prop_assert!((a - b).abs() <= half * (1.0 + a.abs() * 1e-12));
        }
        prop_assert_eq!(serialize_digits(&back, policy).unwrap(), text);
    }

    #[test]
    fn digits_round_trip_f32(values in prop::collection::vec(-1e4f32..1e4, 1..20)) {
        let text = serialize_digits(&values, FormatPolicy::default()).unwrap();
        let back: Vec<f32> = parse_digits(&text, Some(values.len()), ParseMode::Strict).unwrap();
        prop_assert_eq!(back.len(), values.len());
        prop_assert_eq!(serialize_digits(&back, FormatPolicy::default()).unwrap(), text);
    }

    #[test]
    fn strict_rejects_wrong_length(values in prop::collection::vec(0f64..100.0, 1..20), extra in 1usize..3) {
        let text = serialize_digits(&values, FormatPolicy::default()).unwrap();
        prop_assert!(parse_digits::<f64>(&text, Some(values.len() + extra), ParseMode::Strict).is_err());
    }

    #[test]
    fn windows_cover_without_overlap_in_time(
        len in 10usize..200, input in 1usize..20, horizon in 1usize..10, stride in 1usize..15,
    ) {
        prop_assume!(len >= input + horizon);
        let s = series((0..len).map(|i| i as f64).collect());
        let tasks = make_windows(&s, input, horizon, stride).unwrap();
        prop_assert_eq!(tasks.len(), (len - input - horizon) / stride + 1);
        for t in &tasks {
            prop_assert_eq!(t.input_len(), input);
            prop_assert!(t.target_range().end <= len);
            prop_assert!(t.history_start < t.forecast_start);
            prop_assert_eq!(t.forecast_start, s.timestamp(t.history.end));
        }
        prop_assert!(tasks.windows(2).all(|w| w[0].forecast_start < w[1].forecast_start));
    }

    #[test]
    fn split_is_a_seeded_partition(n in 2usize..80, fraction in 0.05f64..0.95, seed in any::<u64>(), cap in 1usize..40) {
        let s = series((0..n + 2).map(|i| i as f64).collect());
        let tasks = make_windows(&s, 2, 1, 1).unwrap();
        let (train, val) = split_tasks(&tasks, fraction, seed, cap).unwrap();
        prop_assert_eq!(train.len() + val.len(), tasks.len());
        prop_assert_eq!(val.len(), ((fraction * tasks.len() as f64).ceil() as usize).min(cap).min(tasks.len()));
        prop_assert!(train.iter().all(|t| t.split == SplitRole::Train));
        prop_assert!(val.iter().all(|t| t.split == SplitRole::Validation));
        prop_assert!(!train.iter().any(|t| val.iter().any(|v| v.id == t.id)));
        let (train2, val2) = split_tasks(&tasks, fraction, seed, cap).unwrap();
        prop_assert_eq!(train, train2);
        prop_assert_eq!(val, val2);
    }

    #[test]
    fn metric_relations(pairs in prop::collection::vec((1f64..1e3, -1e3f64..1e3), 1..50)) {
        let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = compute_metrics(&a, &p).unwrap();
        prop_assert!(m.mse >= 0.0 && m.mae >= 0.0);
        prop_assert!((m.rmse * m.rmse - m.mse).abs() <= 1e-9 * m.mse.max(1.0));
        prop_assert!(m.mae <= m.rmse + 1e-9);
        prop_assert_eq!(m.n, a.len());
        let same = compute_metrics(&a, &a).unwrap();
        prop_assert_eq!(same.mse, 0.0);
        prop_assert_eq!(same.mape, Some(0.0));
    }
}
