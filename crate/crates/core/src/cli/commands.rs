use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::converter::{ConvertError, ConvertOptions, InvariantReport};
use crate::metrics::MetricsRecord;
use crate::pipeline::{oracle_order, sort_values};

use super::gen::{generate, Distribution, GenParams};
use super::input::{parse_input, InputError, InputFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BIT_CAP: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] InputError),
    #[error(transparent)]
    Convert(#[from] ConvertError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse(_) => EXIT_INPUT,
            CliError::Convert(ConvertError::Capacity(_)) => EXIT_BIT_CAP,
            CliError::Convert(_) => EXIT_MISMATCH,
        }
    }
}

pub fn read_input(path: &Path) -> Result<InputFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_input(&text)?)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct SortRun {
    /// Input lines in ascending value order.
    pub lines: Vec<String>,
    pub metrics: MetricsRecord,
    /// Comparison with the reference sort, when requested.
    pub oracle_match: Option<bool>,
}

pub fn run_sort(file: &InputFile, options: &ConvertOptions, oracle: bool) -> Result<SortRun, CliError> {
    if file.is_empty() {
        return Ok(SortRun {
            lines: Vec::new(),
            metrics: MetricsRecord::default(),
            oracle_match: oracle.then_some(true),
        });
    }
    let out = sort_values(&file.values, options)?;
    let oracle_match = oracle.then(|| out.order == oracle_order(&file.values));
    Ok(SortRun {
        lines: out.order.iter().map(|&i| file.lines[i].clone()).collect(),
        metrics: out.conversion.metrics,
        oracle_match,
    })
}

#[derive(Debug, Clone)]
pub struct VerifyRun {
    pub matched: bool,
    /// First output position that differs from the reference.
    pub first_mismatch: Option<usize>,
    pub distinct_keys: usize,
    pub max_key_bits: u64,
    pub invariants: InvariantReport,
    pub metrics: MetricsRecord,
}

impl VerifyRun {
    pub fn passed(&self) -> bool {
        self.matched && self.invariants.passed()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        if self.matched {
            s.push_str("MATCH\n");
        } else {
            let at = self.first_mismatch.map_or(String::new(), |p| format!(" at position {p}"));
            let _ = writeln!(s, "MISMATCH{at}");
        }
        let _ = writeln!(s, "distinct keys: {}", self.distinct_keys);
        let _ = writeln!(s, "max key bits: {}", self.max_key_bits);
        s.push_str(&self.invariants.to_string());
        s
    }
}

/// Sorts with invariant checks on and compares against the reference sort.
pub fn run_verify(file: &InputFile, options: &ConvertOptions) -> Result<VerifyRun, CliError> {
    if file.is_empty() {
        return Ok(VerifyRun {
            matched: true,
            first_mismatch: None,
            distinct_keys: 0,
            max_key_bits: 0,
            invariants: InvariantReport::default(),
            metrics: MetricsRecord::default(),
        });
    }
    let options = ConvertOptions {
        check_invariants: true,
        ..*options
    };
    let out = sort_values(&file.values, &options)?;
    let expected = oracle_order(&file.values);
    let first_mismatch = out.order.iter().zip(&expected).position(|(a, b)| a != b);
    let keys = &out.conversion.keys;
    Ok(VerifyRun {
        matched: first_mismatch.is_none() && out.order.len() == expected.len(),
        first_mismatch,
        distinct_keys: keys.records.len(),
        max_key_bits: keys.max_key_bits,
        invariants: out.conversion.report,
        metrics: out.conversion.metrics,
    })
}

/// One metrics row per input size, each on freshly generated input.
pub fn run_bench(
    sizes: &[usize],
    dist: Distribution,
    seed: u64,
    params: GenParams,
    options: &ConvertOptions,
) -> Result<Vec<MetricsRecord>, CliError> {
    sizes
        .iter()
        .map(|&n| {
            let text = generate(dist, n, seed, params).join("\n");
            let file = parse_input(&text)?;
            Ok(run_sort(&file, options, false)?.metrics)
        })
        .collect()
}
