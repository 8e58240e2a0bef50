//! Entropy estimators over symbol sequences and their cumulative and
//! windowed traces.
//!
//! All values are in bits. Shannon uses the plug-in frequencies
//! `p(s) = N(s) / N`, Hartley is `log2` of the number of distinct symbols,
//! and the match-length estimator lives in [`grassberger`].

pub mod grassberger;
pub mod window;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{csv_err, slots_per_day, weekday_index, IngestError};
use crate::symbolize::SymbolSequence;

pub use window::{WindowedHartley, WindowedShannon};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EntropyError {
    #[error("empty sequence")]
    EmptyInput,
    #[error("sequence too short: {0} symbols, need at least 2")]
    TooShort(usize),
}

/// Symbol occurrence counts `N(s)` and their total `N`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountTable {
    counts: BTreeMap<u32, u64>,
    total: u64,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_symbols(seq: &[u32]) -> Self {
        let mut t = CountTable::new();
        for &s in seq {
            t.add(s);
        }
        t
    }

    pub fn add(&mut self, s: u32) {
        *self.counts.entry(s).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn remove(&mut self, s: u32) {
        if let Some(c) = self.counts.get_mut(&s) {
            *c -= 1;
            self.total -= 1;
            if *c == 0 {
                self.counts.remove(&s);
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, s: u32) -> u64 {
        self.counts.get(&s).copied().unwrap_or(0)
    }

    /// `p(s) = N(s) / N`.
    pub fn probability(&self, s: u32) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(s) as f64 / self.total as f64
        }
    }

    /// `-Σ p log2 p`, summed in symbol order.
    pub fn shannon(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        let h: f64 = self
            .counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum();
        h.max(0.0)
    }

    pub fn hartley(&self) -> f64 {
        if self.counts.is_empty() {
            0.0
        } else {
            (self.counts.len() as f64).log2()
        }
    }
}

pub fn shannon(seq: &[u32]) -> Result<f64, EntropyError> {
    if seq.is_empty() {
        return Err(EntropyError::EmptyInput);
    }
    Ok(CountTable::from_symbols(seq).shannon())
}

pub fn hartley(seq: &[u32]) -> Result<f64, EntropyError> {
    if seq.is_empty() {
        return Err(EntropyError::EmptyInput);
    }
    Ok(CountTable::from_symbols(seq).hartley())
}

/// Match-length entropy-rate estimate; needs at least two symbols.
pub fn grassberger(seq: &[u32]) -> Result<f64, EntropyError> {
    if seq.len() < 2 {
        return Err(EntropyError::TooShort(seq.len()));
    }
    Ok(grassberger::estimate_from_lambdas(&grassberger::lambdas(
        seq,
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Shannon,
    Hartley,
    Grassberger,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [
        Estimator::Shannon,
        Estimator::Hartley,
        Estimator::Grassberger,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Shannon => "shannon",
            Estimator::Hartley => "hartley",
            Estimator::Grassberger => "grassberger",
        }
    }

    /// Batch estimate. Sequences the estimator cannot handle (empty, or a
    /// single symbol for the match-length estimator) report 0.
    pub fn estimate(self, seq: &[u32]) -> f64 {
        match self {
            Estimator::Shannon => shannon(seq).unwrap_or(0.0),
            Estimator::Hartley => hartley(seq).unwrap_or(0.0),
            Estimator::Grassberger => grassberger(seq).unwrap_or(0.0),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "shannon" => Ok(Estimator::Shannon),
            "hartley" => Ok(Estimator::Hartley),
            "grassberger" => Ok(Estimator::Grassberger),
            other => Err(format!("unknown estimator {other:?}")),
        }
    }
}

/// Entropy of every prefix `S[1..i]`, `i = 1..=N`.
pub fn trace_cumulative(seq: &[u32], estimator: Estimator) -> Vec<f64> {
    match estimator {
        Estimator::Shannon => {
            let mut table = CountTable::new();
            seq.iter()
                .map(|&s| {
                    table.add(s);
                    table.shannon()
                })
                .collect()
        }
        Estimator::Hartley => {
            let mut table = CountTable::new();
            seq.iter()
                .map(|&s| {
                    table.add(s);
                    table.hartley()
                })
                .collect()
        }
        Estimator::Grassberger => grassberger::prefix_estimates(seq),
    }
}

/// Entropy of the most recent `min(i, window)` symbols at every position.
///
/// Shannon and Hartley update in O(1) per symbol; the match-length
/// estimator is recomputed over each window.
pub fn trace_windowed(seq: &[u32], window: usize, estimator: Estimator) -> Vec<f64> {
    let window = window.max(1);
    match estimator {
        Estimator::Shannon => {
            let mut acc = WindowedShannon::new(window);
            seq.iter().map(|&s| acc.push(s)).collect()
        }
        Estimator::Hartley => {
            let mut acc = WindowedHartley::new(window);
            seq.iter().map(|&s| acc.push(s)).collect()
        }
        Estimator::Grassberger => (0..seq.len())
            .map(|t| {
                let lo = (t + 1).saturating_sub(window);
                Estimator::Grassberger.estimate(&seq[lo..=t])
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntropyConfig {
    pub estimator: Estimator,
    /// Window length in same-weekday days; `None` is cumulative.
    pub window_weeks: Option<u32>,
    pub slot_minutes: u32,
    pub cells_per_side: u32,
}

impl EntropyConfig {
    /// Window length in symbols (`W · slots_per_day`).
    pub fn window_symbols(&self) -> Option<usize> {
        self.window_weeks
            .map(|w| w as usize * slots_per_day(self.slot_minutes) as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub date: NaiveDate,
    pub slot_index: u32,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    pub weekday: u8,
    pub rep_index: u32,
    pub config: EntropyConfig,
    pub values: Vec<TracePoint>,
}

/// Entropy trace of one symbol stream under `config`.
pub fn trace_sequence(seq: &SymbolSequence, config: &EntropyConfig) -> EntropyTrace {
    let symbols = seq.symbols();
    let bits = match config.window_symbols() {
        Some(w) => trace_windowed(&symbols, w, config.estimator),
        None => trace_cumulative(&symbols, config.estimator),
    };
    EntropyTrace {
        weekday: seq.weekday,
        rep_index: seq.rep_index,
        config: *config,
        values: seq
            .entries
            .iter()
            .zip(bits)
            .map(|(e, bits)| TracePoint {
                date: e.date,
                slot_index: e.slot_index,
                bits,
            })
            .collect(),
    }
}

/// Writes `date,slot_index,rep_index,H_bits`, ordered by date, slot, rep.
pub fn write_traces_csv<W: Write>(writer: W, traces: &[EntropyTrace]) -> Result<(), IngestError> {
    let mut rows: Vec<(NaiveDate, u32, u32, f64)> = traces
        .iter()
        .flat_map(|t| {
            t.values
                .iter()
                .map(move |v| (v.date, v.slot_index, t.rep_index, v.bits))
        })
        .collect();
    rows.sort_by_key(|r| (r.0, r.1, r.2));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "slot_index", "rep_index", "H_bits"])
        .map_err(csv_err)?;
    for (d, s, r, h) in rows {
        w.write_record([d.to_string(), s.to_string(), r.to_string(), h.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    date: NaiveDate,
    slot_index: u32,
    rep_index: u32,
    #[serde(rename = "H_bits")]
    bits: f64,
}

/// Reads traces back; the configuration is not stored in the CSV and is
/// supplied by the caller.
pub fn read_traces_csv<R: Read>(
    reader: R,
    config: EntropyConfig,
) -> Result<Vec<EntropyTrace>, IngestError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut streams: BTreeMap<(u8, u32), Vec<TracePoint>> = BTreeMap::new();
    for row in rdr.deserialize::<TraceRow>() {
        let row = row.map_err(csv_err)?;
        if !row.bits.is_finite() || row.bits < 0.0 {
            return Err(IngestError::Format(format!(
                "invalid entropy value {}",
                row.bits
            )));
        }
        streams
            .entry((weekday_index(row.date), row.rep_index))
            .or_default()
            .push(TracePoint {
                date: row.date,
                slot_index: row.slot_index,
                bits: row.bits,
            });
    }
    Ok(streams
        .into_iter()
        .map(|((weekday, rep_index), mut values)| {
            values.sort_by_key(|v| (v.date, v.slot_index));
            EntropyTrace {
                weekday,
                rep_index,
                config,
                values,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_shannon(seq: &[u32]) -> f64 {
        let mut distinct: Vec<u32> = seq.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let n = seq.len() as f64;
        distinct
            .iter()
            .map(|d| {
                let p = seq.iter().filter(|s| *s == d).count() as f64 / n;
                -p * p.log2()
            })
            .sum()
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon(&[0, 0, 0, 0]).unwrap(), 0.0);
        let alt: Vec<u32> = (0..100).map(|i| i % 2).collect();
        assert!((shannon(&alt).unwrap() - 1.0).abs() < 1e-15);
        let h = shannon(&[0, 0, 1]).unwrap();
        assert!((h - 0.918_295_834_054_489_6).abs() < 1e-12);
        assert_eq!(shannon(&[]), Err(EntropyError::EmptyInput));
    }

    #[test]
    fn hartley_examples() {
        assert_eq!(hartley(&[5, 5, 5, 5]).unwrap(), 0.0);
        assert_eq!(hartley(&[0, 1, 2, 3, 4, 5, 6, 7]).unwrap(), 3.0);
        assert_eq!(hartley(&[]), Err(EntropyError::EmptyInput));
    }

    #[test]
    fn grassberger_errors_and_constant_sequence() {
        assert_eq!(grassberger(&[1]), Err(EntropyError::TooShort(1)));
        let constant = vec![0u32; 1000];
        assert!(grassberger(&constant).unwrap() < 0.2);
    }

    #[test]
    fn grassberger_is_order_sensitive() {
        // Same multiset, so Shannon agrees; the periodic arrangement is far
        // more predictable than the scrambled one.
        let periodic: Vec<u32> = (0..64).map(|i| i % 4).collect();
        let mut scrambled = periodic.clone();
        let mut state = 3u64;
        for i in (1..scrambled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            scrambled.swap(i, (state >> 33) as usize % (i + 1));
        }
        assert_eq!(shannon(&periodic).unwrap(), shannon(&scrambled).unwrap());
        assert!(grassberger(&periodic).unwrap() < grassberger(&scrambled).unwrap());
    }

    #[test]
    fn cumulative_trace_examples() {
        let t = trace_cumulative(&[0, 0, 1], Estimator::Shannon);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[1], 0.0);
        assert!((t[2] - 0.918_295_834_054_489_6).abs() < 1e-12);
        let seq: Vec<u32> = (0..500).map(|i| (i * i % 11) as u32).collect();
        let t = trace_cumulative(&seq, Estimator::Shannon);
        assert_eq!(*t.last().unwrap(), shannon(&seq).unwrap());
    }

    #[test]
    fn wide_window_equals_cumulative() {
        let seq: Vec<u32> = (0..800).map(|i| ((i * 31 + i / 50) % 9) as u32).collect();
        let cum = trace_cumulative(&seq, Estimator::Shannon);
        let win = trace_windowed(&seq, 10_000, Estimator::Shannon);
        for (a, b) in cum.iter().zip(&win) {
            assert!((a - b).abs() < 1e-10);
        }
        let cum = trace_cumulative(&seq[..120], Estimator::Grassberger);
        let win = trace_windowed(&seq[..120], 10_000, Estimator::Grassberger);
        for (a, b) in cum.iter().zip(&win) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn window_forgets_the_old_regime() {
        let spd = 96;
        let mut seq: Vec<u32> = (0..8 * spd).map(|i| (i % 3) as u32).collect();
        let regime_b: Vec<u32> = (0..6 * spd).map(|i| 10 + (i * 7 % 5) as u32).collect();
        seq.extend(&regime_b);
        let w = 4 * spd;
        let win = trace_windowed(&seq, w, Estimator::Shannon);
        let cum = trace_cumulative(&seq, Estimator::Shannon);
        let last = seq.len() - 1;
        let expected = brute_shannon(&seq[seq.len() - w..]);
        assert!((win[last] - expected).abs() < 1e-10);
        assert!((cum[last] - expected).abs() > 0.05);
    }

    #[test]
    fn estimator_parsing() {
        assert_eq!("Shannon".parse::<Estimator>().unwrap(), Estimator::Shannon);
        assert!("renyi".parse::<Estimator>().is_err());
    }

    proptest! {
        #[test]
        fn shannon_bounds(seq in prop::collection::vec(0u32..12, 1..300)) {
            let s = shannon(&seq).unwrap();
            let h = hartley(&seq).unwrap();
            prop_assert!(s >= 0.0);
            prop_assert!(s <= h + 1e-12);
            prop_assert!(h <= (12f64).log2() + 1e-12);
            prop_assert!((s - brute_shannon(&seq)).abs() < 1e-9);
        }

        #[test]
        fn shannon_permutation_invariant(mut seq in prop::collection::vec(0u32..6, 1..200)) {
            let a = shannon(&seq).unwrap();
            seq.reverse();
            let third = seq.len() / 3;
            seq.rotate_left(third);
            prop_assert_eq!(a, shannon(&seq).unwrap());
        }
    }
}
