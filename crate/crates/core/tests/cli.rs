use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

use realsort::metrics::{BENCH_EXTRA_COLUMN, CSV_HEADER};
use realsort::numeric::ExactReal;

fn realsort(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_realsort"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn gen(dir: &TempDir, dist: &str, n: usize, seed: u64) -> String {
    let path = dir.path().join(format!("{dist}-{n}-{seed}.txt"));
    let p = path.to_str().unwrap();
    let out = realsort(&["gen", "--dist", dist, "-n", &n.to_string(), "--seed", &seed.to_string(), "-o", p]);
    assert!(out.status.success());
    p.to_string()
}

#[test]
fn sorts_three_values() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.txt", "3/4\n1/4\n1/2\n");
    let out = realsort(&["sort", &input]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "1/4\n1/2\n3/4\n");
}

#[test]
fn single_value_is_echoed() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.txt", "# one value\n-0.125\n");
    let out = realsort(&["sort", "--stable", &input]);
    assert_eq!(stdout(&out), "-0.125\n");
}

#[test]
fn large_uniform_matches_reference_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let input = gen(&dir, "uniform", 10_000, 4);
    let out = realsort(&["sort", "--oracle", &input]);
    assert_eq!(out.status.code(), Some(0));

    let text = fs::read_to_string(&input).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.sort_by_key(|l| l.parse::<ExactReal>().unwrap());
    let expected: String = lines.iter().map(|l| format!("{l}\n")).collect();
    assert_eq!(stdout(&out), expected);
}

#[test]
fn output_is_a_permutation_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = gen(&dir, "duplicates-heavy", 2000, 8);
    let m1 = dir.path().join("m1.csv");
    let m2 = dir.path().join("m2.csv");
    let a = realsort(&["sort", &input, "--metrics", m1.to_str().unwrap()]);
    let b = realsort(&["sort", &input, "--metrics", m2.to_str().unwrap()]);
    assert_eq!(stdout(&a), stdout(&b));

    let mut got: Vec<String> = stdout(&a).lines().map(str::to_string).collect();
    let mut want: Vec<String> = fs::read_to_string(&input).unwrap().lines().map(str::to_string).collect();
    got.sort();
    want.sort();
    assert_eq!(got, want);

    let strip = |p: &Path| {
        let text = fs::read_to_string(p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
        row[..9].to_vec()
    };
    assert_eq!(strip(&m1), strip(&m2));
}

#[test]
fn parse_error_exits_two_with_line_number() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "bad.txt", "1/2\n# note\n0.3x\n");
    let out = realsort(&["sort", &input]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn bit_cap_exits_three_naming_the_pair() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "tight.txt", "0.1\n0.1000000001\n0.7\n");
    let out = realsort(&["sort", "--bit-cap", "16", &input]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("1/10") && err.contains("1000000001/10000000000"), "{err}");
}

#[test]
fn verify_reports_match_and_invariants() {
    let dir = TempDir::new().unwrap();
    for dist in ["uniform", "clustered", "geometric-gaps", "duplicates-heavy"] {
        let input = gen(&dir, dist, 3000, 1);
        let out = realsort(&["verify", &input]);
        let text = stdout(&out);
        assert_eq!(out.status.code(), Some(0), "{dist}: {text}");
        assert!(text.starts_with("MATCH\n"));
        for name in ["ladder completeness", "leaf capacity", "leaf mass", "stack bound"] {
            assert!(text.lines().any(|l| l.starts_with(name) && l.contains("PASS")), "{name}");
        }
    }
}

#[test]
fn verify_duplicate_only_file() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "dups.txt", "2/3\n2/3\n4/6\n");
    let out = realsort(&["verify", &input]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("distinct keys: 1"));
}

#[test]
fn injected_fault_is_a_mismatch() {
    let dir = TempDir::new().unwrap();
    let input = gen(&dir, "uniform", 50, 2);
    let out = realsort(&["verify", "--inject-fault", &input]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("MISMATCH"));
    let out = realsort(&["sort", "--oracle", "--inject-fault", &input]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_is_deterministic() {
    let a = realsort(&["gen", "--dist", "uniform", "-n", "10", "--seed", "1"]);
    let b = realsort(&["gen", "--dist", "uniform", "-n", "10", "--seed", "1"]);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().count(), 10);
    let bad = realsort(&["gen", "--dist", "normal", "-n", "10"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn bench_sweep_rows() {
    let out = realsort(&["bench", "-n", "256"]);
    assert_eq!(stdout(&out).lines().count(), 2);

    let sizes: Vec<String> = (8..=16).map(|k| (1u64 << k).to_string()).collect();
    let out = realsort(&["bench", "-n", &sizes.join(","), "--dist", "uniform", "--seed", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("{CSV_HEADER},{BENCH_EXTRA_COLUMN}"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    let ratios: Vec<f64> = rows.iter().map(|r| r.rsplit(',').next().unwrap().parse().unwrap()).collect();
    let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo < 4.0, "{ratios:?}");
}

#[test]
fn bench_key_bits_grow_with_gap_depth() {
    let bits: Vec<u64> = [64, 256, 1024]
        .iter()
        .map(|k| {
            let out = realsort(&["bench", "-n", "200", "--dist", "geometric-gaps", "--max-k", &k.to_string()]);
            let text = stdout(&out);
            let row = text.lines().nth(1).unwrap();
            row.split(',').nth(7).unwrap().parse().unwrap()
        })
        .collect();
    assert!(bits[0] > 64 && bits[1] > 256 && bits[2] > 1024, "{bits:?}");
    assert!(bits[2] < 1024 + 16, "{bits:?}");
}
