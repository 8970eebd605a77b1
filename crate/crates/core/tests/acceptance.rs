//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::time::Instant;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use realsort::cli::{generate, parse_input, run_sort, run_verify, Distribution, GenParams};
use realsort::converter::{ConvertOptions, Invariant};
use realsort::intsort::{key_comparisons, radix_sort_indices, reset_key_comparisons, KeyRecord, SortKey};
use realsort::metrics::MetricsRecord;
use realsort::numeric::{floor_scale, separating_level, ExactReal};

const SUITES: u64 = 100;
const SIZES: [usize; 5] = [10, 100, 1_000, 10_000, 100_000];
/// Gap exponents cycled through the geometric-gaps suites (all at most 4096).
const MAX_KS: [u32; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

struct Verdict {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn report(v: &Verdict) {
    let status = if v.ok { "PASS" } else { "FAIL" };
    println!("[{status}] {}: {}", v.name, v.detail);
}

#[derive(Default)]
struct SuiteTotals {
    runs: usize,
    mismatches: Vec<String>,
    invariant_failures: Vec<String>,
    probe_checks: u64,
    probe_violations: u64,
    errors: Vec<String>,
}

fn params_for(dist: Distribution, seed: u64) -> GenParams {
    match dist {
        Distribution::GeometricGaps => GenParams {
            max_k: MAX_KS[(seed % MAX_KS.len() as u64) as usize],
        },
        _ => GenParams::default(),
    }
}

/// Oracle equivalence over generated suites; also gathers the invariant and
/// probe-budget results of the same runs.
fn oracle_suites() -> SuiteTotals {
    let mut jobs = Vec::new();
    for dist in Distribution::ALL {
        for n in SIZES {
            for seed in 0..SUITES {
                jobs.push((dist, n, seed));
            }
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(dist, n, seed)| {
            let label = format!("{dist} n={n} seed={seed}");
            let lines = generate(dist, n, seed, params_for(dist, seed));
            let file = parse_input(&lines.join("\n")).map_err(|e| format!("{label}: {e}"))?;
            let run = run_verify(&file, &ConvertOptions::default()).map_err(|e| format!("{label}: {e}"))?;
            Ok((label, run))
        })
        .collect();

    let mut totals = SuiteTotals::default();
    for r in results {
        match r {
            Err(e) => totals.errors.push(e),
            Ok((label, run)) => {
                totals.runs += 1;
                if !run.matched {
                    totals.mismatches.push(label.clone());
                }
                let inv = &run.invariants;
                let core = [
                    Invariant::Ladder,
                    Invariant::LeafCapacity,
                    Invariant::BranchLeaves,
                    Invariant::LeafMass,
                    Invariant::StackBound,
                    Invariant::Structure,
                ];
                if core.iter().any(|&i| !inv.tally(i).ok()) {
                    totals.invariant_failures.push(format!("{label}: {:?}", inv.messages));
                }
                let probes = inv.tally(Invariant::ProbeBudget);
                totals.probe_checks += probes.checked;
                totals.probe_violations += probes.violated;
            }
        }
    }
    totals
}

fn criterion_1(t: &SuiteTotals) -> Verdict {
    let expected = Distribution::ALL.len() * SIZES.len() * SUITES as usize;
    Verdict {
        name: "1 oracle equivalence",
        ok: t.errors.is_empty() && t.mismatches.is_empty() && t.runs == expected,
        detail: format!(
            "{} of {expected} suites verified, {} mismatches, {} errors {:?}",
            t.runs,
            t.mismatches.len(),
            t.errors.len(),
            t.mismatches.iter().chain(&t.errors).take(3).collect::<Vec<_>>()
        ),
    }
}

/// `2 * exp(floor(1 / |a - b|))` computed from the definition.
fn separating_oracle(a: &BigRational, b: &BigRational) -> BigUint {
    let m = (BigRational::one() / (a - b).abs()).floor().to_integer();
    let mut p = BigInt::one();
    while p < m {
        p <<= 1;
    }
    (p << 1u8).magnitude().clone()
}

fn random_unit(rng: &mut ChaCha8Rng) -> BigRational {
    let bits = rng.gen_range(1..200u64);
    let den = rng.gen_biguint(bits) + 2u8;
    let num = rng.gen_biguint_below(&(&den - 1u8)) + 1u8;
    BigRational::new(num.into(), den.into())
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    let mut pairs = 0;
    while pairs < 10_000 {
        let a = random_unit(&mut rng);
        // Half of the pairs are nudged very close together.
        let b = if rng.gen_bool(0.5) {
            let k = rng.gen_range(1..300u32);
            let nudged = &a + BigRational::new(BigInt::one(), BigInt::one() << k);
            if nudged >= BigRational::one() {
                continue;
            }
            nudged
        } else {
            random_unit(&mut rng)
        };
        if a == b {
            continue;
        }
        pairs += 1;
        let (x, y) = (ExactReal::from(a.clone()), ExactReal::from(b.clone()));
        let level = separating_level(&x, &y).unwrap();
        let oracle = separating_oracle(&a, &b);
        let scaled = |r: &BigRational| (r * BigRational::from_integer(oracle.clone().into())).floor();
        let distinct = floor_scale(&x, level).unwrap() != floor_scale(&y, level).unwrap();
        if level.value() != oracle || !distinct || scaled(&a) == scaled(&b) {
            failures += 1;
        }
    }
    Verdict {
        name: "2 separation soundness",
        ok: failures == 0,
        detail: format!("{pairs} pairs, {failures} failures"),
    }
}

fn criterion_3(t: &SuiteTotals) -> Verdict {
    Verdict {
        name: "3 invariant suite",
        ok: t.runs > 0 && t.invariant_failures.is_empty(),
        detail: format!(
            "{} verification runs, {} with invariant violations {:?}",
            t.runs,
            t.invariant_failures.len(),
            t.invariant_failures.iter().take(2).collect::<Vec<_>>()
        ),
    }
}

fn criterion_4(t: &SuiteTotals) -> Verdict {
    Verdict {
        name: "4 probe budget",
        ok: t.probe_checks > 0 && t.probe_violations == 0,
        detail: format!(
            "{} match calls checked, {} over floor(log top) + 1",
            t.probe_checks, t.probe_violations
        ),
    }
}

fn criterion_5() -> Verdict {
    let sizes: Vec<usize> = (8..=18).map(|k| 1usize << k).collect();
    let rows: Vec<MetricsRecord> = sizes
        .par_iter()
        .map(|&n| {
            let lines = generate(Distribution::Uniform, n, 5, GenParams::default());
            let file = parse_input(&lines.join("\n")).unwrap();
            run_sort(&file, &ConvertOptions::default(), false).unwrap().metrics
        })
        .collect();
    let ratios: Vec<f64> = rows.iter().map(MetricsRecord::probes_per_n_over_sqrtlog).collect();
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    Verdict {
        name: "5 scaling band",
        ok: min > 0.0 && max / min < 4.0,
        detail: format!(
            "(probes/n)/sqrt(log2 n) over n=2^8..2^18: min {min:.4}, max {max:.4}, spread {:.3}x (limit 4x)",
            max / min
        ),
    }
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut wrong = 0;
    let mut comparisons = 0;
    for _ in 0..100 {
        let width = rng.gen_range(1..300u64);
        let records: Vec<KeyRecord> = (0..10_000)
            .map(|i| KeyRecord {
                key: SortKey(rng.gen_biguint(width)),
                input_index: i,
                multiplicity: 1,
            })
            .collect();
        reset_key_comparisons();
        let (order, _) = radix_sort_indices(&records);
        comparisons += key_comparisons();
        let mut expected: Vec<usize> = (0..records.len()).collect();
        expected.sort_by(|&a, &b| records[a].key.0.cmp(&records[b].key.0).then(a.cmp(&b)));
        if order != expected {
            wrong += 1;
        }
    }
    Verdict {
        name: "6 radix backend",
        ok: wrong == 0 && comparisons == 0,
        detail: format!("100 key sets of 10^4: {wrong} wrong permutations, {comparisons} key comparisons"),
    }
}

fn sorted_lines(text: &str) -> Result<(Vec<String>, u64), String> {
    let file = parse_input(text).map_err(|e| e.to_string())?;
    let run = run_sort(&file, &ConvertOptions::default(), true).map_err(|e| e.to_string())?;
    if run.oracle_match != Some(true) {
        return Err("differs from the reference sort".into());
    }
    Ok((run.lines, run.metrics.max_key_bits))
}

fn criterion_7() -> Verdict {
    let mut problems = Vec::new();

    let file = parse_input(&"0.375\n".repeat(10_000)).unwrap();
    match run_verify(&file, &ConvertOptions::default()) {
        Ok(v) => {
            if !(v.passed() && v.distinct_keys == 1) {
                problems.push(format!("all-equal: {} keys", v.distinct_keys));
            }
        }
        Err(e) => problems.push(format!("all-equal: {e}")),
    }
    let multiplicity = realsort::convert(&file.values, &ConvertOptions::default())
        .map(|c| c.keys.records.iter().map(|r| r.multiplicity).collect::<Vec<_>>());
    if multiplicity != Ok(vec![10_000]) {
        problems.push(format!("all-equal multiplicity {multiplicity:?}"));
    }

    match sorted_lines("42/5\n") {
        Ok((lines, _)) if lines == ["42/5"] => {}
        other => problems.push(format!("single: {other:?}")),
    }
    match sorted_lines("1/2\n-1/2\n") {
        Ok((lines, _)) if lines == ["-1/2", "1/2"] => {}
        other => problems.push(format!("pair: {other:?}")),
    }

    let tiny = format!("{}/{}", (BigUint::one() << 4095u32) + 1u8, BigUint::one() << 4096u32);
    let text = format!("{tiny}\n1/2\n");
    let mut bits = 0;
    match sorted_lines(&text) {
        Ok((lines, b)) => {
            bits = b;
            if lines != ["1/2", tiny.as_str()] || b < 4096 {
                problems.push(format!("gap 2^-4096: order ok {}, max_key_bits {b}", lines[0] == "1/2"));
            }
        }
        Err(e) => problems.push(format!("gap 2^-4096: {e}")),
    }
    Verdict {
        name: "7 degenerate inputs",
        ok: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("all-equal 10^4 -> one key x10000; n=1 and n=2 sorted; gap 2^-4096 sorted with max_key_bits {bits}")
        } else {
            problems.join("; ")
        },
    }
}

fn timed<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    eprintln!("  ({label} took {:.1}s)", start.elapsed().as_secs_f64());
    out
}

fn main() {
    let mut verdicts = Vec::new();
    verdicts.push(timed("criterion 2", criterion_2));
    report(verdicts.last().unwrap());
    verdicts.push(timed("criterion 5", criterion_5));
    report(verdicts.last().unwrap());
    verdicts.push(timed("criterion 6", criterion_6));
    report(verdicts.last().unwrap());
    verdicts.push(timed("criterion 7", criterion_7));
    report(verdicts.last().unwrap());

    let totals = timed("criteria 1, 3, 4", oracle_suites);
    for v in [criterion_1(&totals), criterion_3(&totals), criterion_4(&totals)] {
        report(&v);
        verdicts.push(v);
    }
    verdicts.sort_by_key(|v| v.name);

    println!("\nacceptance summary");
    for v in &verdicts {
        report(v);
    }
    let failed = verdicts.iter().filter(|v| !v.ok).count();
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all {} criteria passed", verdicts.len());
}
