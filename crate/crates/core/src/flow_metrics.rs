//! Order-flow imbalance measured from a trade tape.
//!
//! * EWMA imbalance in volume time: each trade of signed size `V` moves
//!   the imbalance towards `sgn(V)` by a weight `1 - e^{-beta |V|}`.
//! * Bucket imbalance: the tape is cut into buckets of equal absolute
//!   volume and each bucket reports `(buy - sell) / V`.
//! * VPIN: trailing mean of absolute bucket imbalances.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Memory parameter `a` of the EWMA in units of daily volume.
pub const DEFAULT_MEMORY: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeKind {
    #[default]
    Execution,
    /// A limit order at the touch, which trades like a market order.
    LimitAtTouch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub index: u64,
    /// Shares; positive for buyer-initiated, negative for seller-initiated.
    pub signed_volume: f64,
    pub kind: TradeKind,
}

impl TradeRecord {
    pub fn new(index: u64, signed_volume: f64) -> Self {
        TradeRecord {
            index,
            signed_volume,
            kind: TradeKind::Execution,
        }
    }
}

/// `beta = a / V_daily`.
pub fn beta_from_daily(a: f64, daily_volume: f64) -> Result<f64> {
    if !(a > 0.0) || !(daily_volume > 0.0) {
        return Err(Error::domain(format!(
            "memory and daily volume must be positive, got a = {a}, V = {daily_volume}"
        )));
    }
    Ok(a / daily_volume)
}

/// Streaming EWMA state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ewma {
    beta: f64,
    value: f64,
    count: usize,
}

impl Ewma {
    pub fn new(beta: f64, i0: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::domain(format!("beta must be positive, got {beta}")));
        }
        if !(-1.0..=1.0).contains(&i0) {
            return Err(Error::domain(format!("initial imbalance must lie in [-1, 1], got {i0}")));
        }
        Ok(Ewma {
            beta,
            value: i0,
            count: 0,
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Applies one trade and returns the new imbalance.
    pub fn update(&mut self, trade: &TradeRecord) -> Result<f64> {
        let v = trade.signed_volume;
        if v == 0.0 || !v.is_finite() {
            return Err(Error::Data {
                index: self.count,
                reason: format!("trade {} has volume {v}", trade.index),
            });
        }
        self.count += 1;
        let keep = (-self.beta * v.abs()).exp();
        // convex combination, so the value stays in [-1, 1]
        self.value = (keep * self.value + (1.0 - keep) * v.signum()).clamp(-1.0, 1.0);
        Ok(self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceSeries {
    pub beta: f64,
    /// `I_0, I_1, ...`; `values[k]` is the imbalance after `k` trades.
    pub values: Vec<f64>,
}

/// EWMA imbalance after every trade, starting from `i0`.
pub fn ewma_imbalance<I>(trades: I, beta: f64, i0: f64) -> Result<ImbalanceSeries>
where
    I: IntoIterator<Item = TradeRecord>,
{
    let mut state = Ewma::new(beta, i0)?;
    let mut values = vec![i0];
    for t in trades {
        values.push(state.update(&t)?);
    }
    Ok(ImbalanceSeries { beta, values })
}

/// Writes `k,I_k`.
pub fn write_imbalance<W: Write>(out: W, series: &ImbalanceSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "I_k"])?;
    for (k, v) in series.values.iter().enumerate() {
        w.write_record([k.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Streaming bucket filler. A trade that crosses a bucket boundary is
/// split pro rata, keeping its sign in every bucket it touches.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketFiller {
    volume: f64,
    buy: f64,
    sell: f64,
}

/// A completed bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub buy_volume: f64,
    pub sell_volume: f64,
}

impl BucketFiller {
    pub fn new(bucket_volume: f64) -> Result<Self> {
        if !(bucket_volume > 0.0) || !bucket_volume.is_finite() {
            return Err(Error::domain(format!("bucket volume must be positive, got {bucket_volume}")));
        }
        Ok(BucketFiller {
            volume: bucket_volume,
            buy: 0.0,
            sell: 0.0,
        })
    }

    /// Adds a trade and appends every bucket it completes to `done`.
    pub fn push(&mut self, signed_volume: f64, done: &mut Vec<Bucket>) {
        let mut rest = signed_volume.abs();
        let buy = signed_volume > 0.0;
        while rest > 0.0 {
            let room = self.volume - self.buy - self.sell;
            let (take, closes) = if rest >= room { (room, true) } else { (rest, false) };
            if buy {
                self.buy += take;
            } else {
                self.sell += take;
            }
            rest -= take;
            if closes {
                done.push(Bucket {
                    buy_volume: self.buy,
                    sell_volume: self.sell,
                });
                self.buy = 0.0;
                self.sell = 0.0;
            }
        }
    }

    /// Volume in the open bucket.
    pub fn pending(&self) -> f64 {
        self.buy + self.sell
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSeries {
    pub bucket_volume: f64,
    pub buckets: Vec<Bucket>,
}

impl BucketSeries {
    /// `2 V^B / V - 1` per bucket.
    pub fn imbalances(&self) -> Vec<f64> {
        self.buckets
            .iter()
            .map(|b| (2.0 * b.buy_volume / self.bucket_volume - 1.0).clamp(-1.0, 1.0))
            .collect()
    }

    pub fn buy_volumes(&self) -> Vec<f64> {
        self.buckets.iter().map(|b| b.buy_volume).collect()
    }
}

/// Completed buckets of `bucket_volume` shares; a trailing partial bucket
/// is dropped.
pub fn bucket_imbalance<I>(trades: I, bucket_volume: f64) -> Result<BucketSeries>
where
    I: IntoIterator<Item = TradeRecord>,
{
    let mut filler = BucketFiller::new(bucket_volume)?;
    let mut buckets = Vec::new();
    for t in trades {
        filler.push(t.signed_volume, &mut buckets);
    }
    Ok(BucketSeries {
        bucket_volume,
        buckets,
    })
}

/// Trailing mean of `|I_l|` over `n` buckets, one value per bucket from
/// the `n`-th on. Shorter series give an empty result.
pub fn vpin(imbalances: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("VPIN window must be at least 1"));
    }
    Ok(imbalances
        .windows(n)
        .map(|w| (w.iter().map(|v| v.abs()).sum::<f64>() / n as f64).min(1.0))
        .collect())
}

/// Writes `l,I_l,VPIN_l`; VPIN is blank until the window fills.
pub fn write_buckets<W: Write>(out: W, series: &BucketSeries, n: usize) -> Result<()> {
    let imb = series.imbalances();
    let v = vpin(&imb, n)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["l", "I_l", "VPIN_l"])?;
    for (l, i) in imb.iter().enumerate() {
        let p = if l + 1 >= n { v[l + 1 - n].to_string() } else { String::new() };
        w.write_record([l.to_string(), i.to_string(), p])?;
    }
    w.flush()?;
    Ok(())
}

/// Which trade kinds count as order flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindFilter {
    #[default]
    ExecutionOnly,
    IncludeTouch,
}

impl KindFilter {
    pub fn accepts(&self, kind: TradeKind) -> bool {
        matches!(
            (self, kind),
            (_, TradeKind::Execution) | (KindFilter::IncludeTouch, TradeKind::LimitAtTouch)
        )
    }
}

/// Streaming reader of `index,signed_volume[,kind]` lines. A header line
/// starting with `index` and lines starting with `#` are skipped.
pub struct TradeReader<R: Read> {
    inner: csv::Reader<R>,
    record: csv::StringRecord,
    path: PathBuf,
    filter: KindFilter,
}

/// Opens a trade file for streaming.
pub fn ingest_trades(path: impl AsRef<Path>, filter: KindFilter) -> Result<TradeReader<File>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    Ok(TradeReader::new(file, path, filter))
}

impl<R: Read> TradeReader<R> {
    /// `origin` only labels errors.
    pub fn new(reader: R, origin: impl Into<PathBuf>, filter: KindFilter) -> Self {
        let inner = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        TradeReader {
            inner,
            record: csv::StringRecord::new(),
            path: origin.into(),
            filter,
        }
    }

    fn parse(&self, line: u64) -> Result<Option<TradeRecord>> {
        let r = &self.record;
        let err = |reason: String| Error::Parse {
            path: self.path.clone(),
            line,
            reason,
        };
        if r.len() < 2 || r.len() > 3 {
            return Err(err(format!("expected 2 or 3 fields, found {}", r.len())));
        }
        if line == 1 && r[0].eq_ignore_ascii_case("index") {
            return Ok(None);
        }
        let index = r[0]
            .parse::<u64>()
            .map_err(|e| err(format!("bad index {:?}: {e}", &r[0])))?;
        let signed_volume = r[1]
            .parse::<f64>()
            .map_err(|e| err(format!("bad volume {:?}: {e}", &r[1])))?;
        if signed_volume == 0.0 || !signed_volume.is_finite() {
            return Err(err(format!("volume must be non-zero and finite, got {signed_volume}")));
        }
        let kind = match r.get(2).unwrap_or("execution") {
            "" | "execution" => TradeKind::Execution,
            "limit_at_touch" => TradeKind::LimitAtTouch,
            other => return Err(err(format!("unknown trade kind {other:?}"))),
        };
        Ok(Some(TradeRecord {
            index,
            signed_volume,
            kind,
        }))
    }
}

impl<R: Read> Iterator for TradeReader<R> {
    type Item = Result<TradeRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.inner.read_record(&mut self.record) {
                Ok(false) => return None,
                Ok(true) => {}
                Err(e) => return Some(Err(e.into())),
            }
            let line = self.record.position().map_or(0, |p| p.line());
            match self.parse(line) {
                Ok(Some(t)) if self.filter.accepts(t.kind) => return Some(Ok(t)),
                Ok(_) => continue,
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trades(vols: &[f64]) -> Vec<TradeRecord> {
        vols.iter().enumerate().map(|(k, &v)| TradeRecord::new(k as u64, v)).collect()
    }

    #[test]
    fn one_step_identity() {
        let s = ewma_imbalance(trades(&[1e4]), 1e-5, 0.0).unwrap();
        assert!((s.values[1] - 0.0951626).abs() < 1e-7);
        assert!((s.values[1] - (1.0 - (-0.1f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn all_buys_converge_up() {
        let s = ewma_imbalance(trades(&[500.0; 2000]), 1e-4, -0.5).unwrap();
        assert!(s.values.windows(2).all(|w| w[1] >= w[0]));
        assert!(s.values.last().unwrap() > &0.999);
    }

    #[test]
    fn alternating_flow_settles_on_two_cycle() {
        let (beta, v) = (1e-3, 400.0);
        let vols: Vec<f64> = (0..400).map(|k| if k % 2 == 0 { v } else { -v }).collect();
        let s = ewma_imbalance(trades(&vols), beta, 0.0).unwrap();
        let e = (-beta * v).exp();
        let star = (1.0 - e) / (1.0 + e);
        let n = s.values.len();
        let (a, b) = (s.values[n - 1], s.values[n - 2]);
        assert!((a.abs() - star).abs() < 1e-12 && (b.abs() - star).abs() < 1e-12);
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn zero_volume_is_a_data_error() {
        let err = ewma_imbalance(trades(&[10.0, 0.0]), 1e-3, 0.0).unwrap_err();
        assert!(matches!(err, Error::Data { index: 1, .. }));
    }

    #[test]
    fn bucket_definition_and_split() {
        let b = bucket_imbalance(trades(&[15000.0, -10000.0, -25000.0, 3.0]), 25000.0).unwrap();
        let imb = b.imbalances();
        assert!((imb[0] - 0.2).abs() < 1e-15 && imb[1] == -1.0);
        assert_eq!(b.buckets.len(), 2);

        // one trade spanning three buckets
        let b = bucket_imbalance(trades(&[5.0, -27.0]), 10.0).unwrap();
        assert_eq!(b.buckets.len(), 3);
        assert_eq!(b.buckets[0], Bucket { buy_volume: 5.0, sell_volume: 5.0 });
        assert_eq!(b.buckets[1], Bucket { buy_volume: 0.0, sell_volume: 10.0 });
        for k in &b.buckets {
            assert_eq!(k.buy_volume + k.sell_volume, 10.0);
        }
    }

    #[test]
    fn vpin_extremes_and_short_series() {
        assert_eq!(vpin(&[1.0, -1.0, 1.0], 2).unwrap(), vec![1.0, 1.0]);
        assert_eq!(vpin(&[0.0; 5], 3).unwrap(), vec![0.0; 3]);
        assert!(vpin(&[0.5], 3).unwrap().is_empty());
        assert!(vpin(&[0.5], 0).is_err());
    }

    #[test]
    fn reader_parses_and_filters() {
        let text = "index,signed_volume,kind\n12,500,execution\n13,-200,limit_at_touch\n# note\n14,-7\n";
        let all: Vec<_> = TradeReader::new(text.as_bytes(), "mem", KindFilter::IncludeTouch)
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[0], TradeRecord::new(12, 500.0));
        assert_eq!(all[1].kind, TradeKind::LimitAtTouch);
        let exec: Vec<_> = TradeReader::new(text.as_bytes(), "mem", KindFilter::ExecutionOnly)
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(exec.len(), 2);
    }

    #[test]
    fn reader_reports_line_numbers() {
        let text = "1,10\n2,abc\n3,0\n4,5,market\n";
        let out: Vec<_> = TradeReader::new(text.as_bytes(), "tape.csv", KindFilter::ExecutionOnly).collect();
        assert!(out[0].is_ok());
        let lines: Vec<u64> = out[1..]
            .iter()
            .map(|r| match r {
                Err(Error::Parse { line, .. }) => *line,
                other => panic!("expected parse error, got {other:?}"),
            })
            .collect();
        assert_eq!(lines, vec![2, 3, 4]);
    }

    #[test]
    fn empty_input_is_empty_stream() {
        assert_eq!(TradeReader::new("".as_bytes(), "e", KindFilter::default()).count(), 0);
    }
}
