//! EWMA imbalance, bucket imbalance and VPIN on a synthetic trade tape
//! whose buy probability drifts during the day.

use flowexec::flow_metrics::{
    beta_from_daily, bucket_imbalance, ewma_imbalance, vpin, TradeRecord, DEFAULT_MEMORY,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> flowexec::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 200_000;
    let trades: Vec<TradeRecord> = (0..n)
        .map(|k| {
            let p_buy = 0.5 + 0.2 * (6.0 * k as f64 / n as f64).sin();
            let size = rng.random_range(1..=400) as f64;
            let side = if rng.random_bool(p_buy) { 1.0 } else { -1.0 };
            TradeRecord::new(k as u64, side * size)
        })
        .collect();

    let daily: f64 = trades.iter().map(|t| t.signed_volume.abs()).sum();
    let beta = beta_from_daily(DEFAULT_MEMORY, daily)?;
    let ewma = ewma_imbalance(trades.iter().copied(), beta, 0.0)?;
    let buckets = bucket_imbalance(trades.iter().copied(), 25_000.0)?;
    let imb = buckets.imbalances();
    let toxicity = vpin(&imb, 20)?;

    println!("{n} trades, {daily:.0} shares, beta = {beta:.3e}");
    println!("{} buckets, {} VPIN values", imb.len(), toxicity.len());
    for q in 1..=5 {
        let k = q * n / 5;
        let l = (q * imb.len() / 5).min(imb.len()) - 1;
        let v = toxicity.get(l.saturating_sub(19)).copied().unwrap_or(f64::NAN);
        println!(
            "  {:>3}% of the day: I = {:+.3}, bucket I = {:+.3}, VPIN = {:.3}",
            q * 20,
            ewma.values[k],
            imb[l],
            v
        );
    }
    Ok(())
}
