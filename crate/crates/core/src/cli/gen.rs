//! Deterministic input generators.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distribution {
    /// Twelve-digit decimals in `[0, 1)`.
    Uniform,
    /// Decimals packed around a few centers, sixteen digits deep.
    Clustered,
    /// Pairs of values `2^-k` apart with `k` swept up to `max_k`.
    GeometricGaps,
    /// About half of the lines repeat an earlier line.
    DuplicatesHeavy,
}

impl Distribution {
    pub const ALL: [Distribution; 4] = [
        Distribution::Uniform,
        Distribution::Clustered,
        Distribution::GeometricGaps,
        Distribution::DuplicatesHeavy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Clustered => "clustered",
            Distribution::GeometricGaps => "geometric-gaps",
            Distribution::DuplicatesHeavy => "duplicates-heavy",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Distribution::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown distribution {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    /// Deepest gap exponent for `geometric-gaps`.
    pub max_k: u32,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { max_k: 64 }
    }
}

fn decimal(rng: &mut ChaCha8Rng) -> String {
    format!("0.{:012}", rng.gen_range(0..1_000_000_000_000u64))
}

/// `n` value lines drawn from `dist`; identical for identical arguments.
pub fn generate(dist: Distribution, n: usize, seed: u64, params: GenParams) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match dist {
        Distribution::Uniform => (0..n).map(|_| decimal(&mut rng)).collect(),
        Distribution::Clustered => {
            let centers: Vec<u32> = (0..4).map(|_| rng.gen_range(0..100)).collect();
            (0..n)
                .map(|_| {
                    let c = centers[rng.gen_range(0..centers.len())];
                    format!("0.{c:02}000000{:08}", rng.gen_range(0..100_000_000u32))
                })
                .collect()
        }
        Distribution::GeometricGaps => geometric(&mut rng, n, params.max_k.max(1)),
        Distribution::DuplicatesHeavy => {
            let mut out: Vec<String> = Vec::with_capacity(n);
            for _ in 0..n {
                if !out.is_empty() && rng.gen_bool(0.5) {
                    let j = rng.gen_range(0..out.len());
                    out.push(out[j].clone());
                } else {
                    out.push(decimal(&mut rng));
                }
            }
            out
        }
    }
}

fn geometric(rng: &mut ChaCha8Rng, n: usize, max_k: u32) -> Vec<String> {
    let pairs = n / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..pairs {
        // k runs from 1 to max_k across the pairs.
        let k = if pairs == 1 {
            max_k
        } else {
            1 + (i as u64 * u64::from(max_k - 1) / (pairs as u64 - 1)) as u32
        };
        let a = BigUint::from(rng.gen::<u32>());
        let base = if k >= 32 { a << (k - 32) } else { a };
        let den = k.max(32);
        let partner = &base + (BigUint::from(1u8) << (den - k));
        out.push(format!("{base}/{}", BigUint::from(1u8) << den));
        out.push(format!("{partner}/{}", BigUint::from(1u8) << den));
    }
    if n % 2 == 1 {
        out.push(decimal(rng));
    }
    // Interleave so pairs are not adjacent in the input.
    for i in (1..out.len()).rev() {
        let j = rng.gen_range(0..=i);
        out.swap(i, j);
    }
    out
}
