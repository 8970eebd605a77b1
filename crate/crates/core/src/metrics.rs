//! Operation counters for a single conversion run.
//!
//! Counters measure model operations (table probes, descent steps, re-keyed
//! values). Big-integer cost is not folded in; it shows up only in the
//! per-phase wall times.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Header of the metrics CSV; columns appear in this order.
pub const CSV_HEADER: &str = "n,probes,match_steps,levels_pushed,max_top,merge_rekeys,ladder_writes,max_key_bits,branch_count,insert_ns,merge_ns,finalize_ns,sort_ns";

/// Extra column appended by benchmark sweeps.
pub const BENCH_EXTRA_COLUMN: &str = "probes_per_n_over_sqrtlog";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("malformed metrics row: {0}")]
    Csv(#[from] csv::Error),
    #[error("metrics row is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub n: u64,
    pub probes: u64,
    pub match_steps: u64,
    pub levels_pushed: u64,
    pub max_top: u64,
    pub merge_rekeys: u64,
    pub ladder_writes: u64,
    pub max_key_bits: u64,
    pub branch_count: u64,
    pub insert_ns: u64,
    pub merge_ns: u64,
    pub finalize_ns: u64,
    pub sort_ns: u64,
}

impl MetricsRecord {
    /// `(probes / n) / sqrt(log2 n)`; zero when `n < 2`.
    pub fn probes_per_n_over_sqrtlog(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        (self.probes as f64 / n) / n.log2().sqrt()
    }

    /// Same record with every wall-time field cleared.
    pub fn without_timings(mut self) -> Self {
        self.insert_ns = 0;
        self.merge_ns = 0;
        self.finalize_ns = 0;
        self.sort_ns = 0;
        self
    }
}

/// One CSV row (no header, no trailing newline).
pub fn to_csv(record: &MetricsRecord) -> String {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    writer
        .serialize(record)
        .expect("serializing integers into memory cannot fail");
    let bytes = writer.into_inner().expect("in-memory writer");
    String::from_utf8(bytes)
        .expect("csv output is ascii")
        .trim_end()
        .to_string()
}

pub fn from_csv(row: &str) -> Result<MetricsRecord, MetricsError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(row.as_bytes());
    match reader.deserialize().next() {
        Some(record) => Ok(record?),
        None => Err(MetricsError::Empty),
    }
}

/// Header plus one row per record.
pub fn to_csv_table(records: &[MetricsRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&to_csv(r));
        out.push('\n');
    }
    out
}

/// Benchmark table: the metrics columns followed by the derived ratio.
pub fn to_bench_table(records: &[MetricsRecord]) -> String {
    let mut out = format!("{CSV_HEADER},{BENCH_EXTRA_COLUMN}\n");
    for r in records {
        out.push_str(&format!("{},{:.6}\n", to_csv(r), r.probes_per_n_over_sqrtlog()));
    }
    out
}
