use std::io::Write;

use flowexec::flow_metrics::{
    bucket_imbalance, ingest_trades, write_buckets, write_imbalance, ewma_imbalance, KindFilter, TradeKind,
    TradeReader, TradeRecord,
};
use flowexec::Error;
use proptest::prelude::*;

fn read_all(text: &str, filter: KindFilter) -> flowexec::Result<Vec<TradeRecord>> {
    TradeReader::new(text.as_bytes(), "tape.csv", filter).collect()
}

#[test]
fn reader_skips_header_and_comments() {
    let text = "index,signed_volume,kind\n# opening auction\n0,100\n1, -50 ,limit_at_touch\n2,25,execution\n";
    let all = read_all(text, KindFilter::IncludeTouch).unwrap();
    assert_eq!(all.len(), 3);
    assert_eq!(all[1].signed_volume, -50.0);
    assert_eq!(all[1].kind, TradeKind::LimitAtTouch);
    let exec = read_all(text, KindFilter::ExecutionOnly).unwrap();
    assert_eq!(exec.iter().map(|t| t.index).collect::<Vec<_>>(), [0, 2]);
}

#[test]
fn reader_reports_file_and_line() {
    for (text, line) in [("0,1\n1,abc\n", 2), ("0,1\n1,2\n2,0\n", 3), ("0,1,market\n", 1), ("0\n", 1)] {
        match read_all(text, KindFilter::ExecutionOnly) {
            Err(Error::Parse { path, line: l, .. }) => {
                assert_eq!(path.to_str(), Some("tape.csv"));
                assert_eq!(l, line, "{text:?}");
            }
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn files_round_trip_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    for k in 0..40 {
        writeln!(f, "{k},{}", if k % 2 == 0 { 30 } else { -10 }).unwrap();
    }
    drop(f);

    let trades: Vec<_> = ingest_trades(&path, KindFilter::ExecutionOnly).unwrap().collect::<Result<_, _>>().unwrap();
    let series = bucket_imbalance(trades.iter().copied(), 100.0).unwrap();
    // 800 units traded, 600 bought
    assert_eq!(series.buckets.len(), 8);
    let mut out = Vec::new();
    write_buckets(&mut out, &series, 4).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.lines().nth(4).unwrap().split(',').nth(2).is_some_and(|v| !v.is_empty()));

    let ewma = ewma_imbalance(trades, 1e-3, 0.0).unwrap();
    let mut out = Vec::new();
    write_imbalance(&mut out, &ewma).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 42);
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(ingest_trades("/no/such/tape.csv", KindFilter::ExecutionOnly), Err(Error::Io(_))));
}

proptest! {
    #[test]
    fn buckets_conserve_integer_volume(
        vols in prop::collection::vec((1u32..5000, any::<bool>()), 1..400),
        v in 1u32..3000,
    ) {
        let trades = vols.iter().enumerate().map(|(k, &(q, buy))| {
            TradeRecord::new(k as u64, if buy { q as f64 } else { -(q as f64) })
        });
        let series = bucket_imbalance(trades, v as f64).unwrap();
        let bought: u64 = vols.iter().filter(|t| t.1).map(|t| t.0 as u64).sum();
        let total: u64 = vols.iter().map(|t| t.0 as u64).sum();
        prop_assert_eq!(series.buckets.len() as u64, total / v as u64);
        for b in &series.buckets {
            prop_assert_eq!(b.buy_volume + b.sell_volume, v as f64);
        }
        let bucketed_buys: f64 = series.buy_volumes().iter().sum();
        prop_assert!(bucketed_buys <= bought as f64 + 1e-9);
        prop_assert!(series.imbalances().iter().all(|i| (-1.0..=1.0).contains(i)));
    }

    #[test]
    fn ewma_bounded_for_any_stream(
        vols in prop::collection::vec(prop_oneof![-1e12f64..-1e-9, 1e-9f64..1e12], 1..300),
        beta in 1e-9f64..10.0,
        i0 in -1.0f64..=1.0,
    ) {
        let trades = vols.iter().enumerate().map(|(k, &v)| TradeRecord::new(k as u64, v));
        let s = ewma_imbalance(trades, beta, i0).unwrap();
        prop_assert!(s.values.iter().all(|i| (-1.0..=1.0).contains(i)));
    }
}
