//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use qvam_core::analysis::capacity_for;
use qvam_core::experiment::rng::{substream, uniform_below, Domain, Stream};
use qvam_core::{
    baseline_scan_identify, critical_distortion, decode_key, effective_dim, error_probability,
    map_binary, oracle_identify_with, random_patterns, required_digits, sweep_noise, unmap_binary,
    BinaryVector, CurvePoint, ExperimentConfig, HebbNetwork, KeyScheme, KeyVector, NoiseSpec,
    Recall, TheoryInput, TrainOptions,
};

const BIN: &str = env!("CARGO_BIN_EXE_qvam");

type Check = (&'static str, &'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn unit_float(rng: &mut Stream) -> f64 {
    uniform_below(rng, 1 << 53) as f64 / (1u64 << 53) as f64
}

fn criterion_1() -> Outcome {
    let (mut probes, mut mismatches) = (0u32, 0u32);
    for case in 0..1000u64 {
        let mut rng = substream(101, Domain::Noise, 1, case);
        let len = 1 + uniform_below(&mut rng, 32) as usize;
        let q = 2 + uniform_below(&mut rng, 15) as u32;
        let m = 1 + uniform_below(&mut rng, 32);
        let exclude_diagonal = case % 5 != 0;
        let patterns = random_patterns(len, q, m, case).unwrap();
        let n = required_digits(m, q).unwrap() + uniform_below(&mut rng, 2) as usize;
        let keys: Vec<_> = (0..m)
            .map(|_| {
                let digits = (0..n)
                    .map(|_| uniform_below(&mut rng, q as u64) as u32)
                    .collect();
                KeyVector::new(digits, q).unwrap()
            })
            .collect();
        let options = TrainOptions { exclude_diagonal };
        let net = HebbNetwork::train_with(&patterns, &keys, options).unwrap();
        for b in [0.0, 0.25, 0.5, 1.0] {
            let mu = uniform_below(&mut rng, m) as usize;
            let probe = NoiseSpec::new(b, case).distort(&patterns[mu], mu as u64);
            let weights = net.identify(&probe).unwrap();
            let oracle = oracle_identify_with(&patterns, &keys, &probe, options).unwrap();
            probes += 1;
            mismatches += u32::from(weights != oracle);
        }
    }
    outcome(
        mismatches == 0,
        format!("1000 instances, {probes} probes, {mismatches} mismatches in digits/index/margins"),
    )
}

fn criterion_2() -> Outcome {
    let patterns = random_patterns(100, 8, 50, 2).unwrap();
    let net = HebbNetwork::train_indexed(&patterns).unwrap();
    let errors = patterns
        .iter()
        .enumerate()
        .filter(|(mu, p)| {
            let id = net.identify(p).unwrap();
            !(id.valid && id.index == *mu as u64)
        })
        .count();
    let mc = qvam_core::run_point(&net, &patterns, 0.0, 10_000, 2).unwrap();
    outcome(
        errors == 0 && mc.errors == 0,
        format!(
            "N=100 q=8 M=50 b=0: {errors}/50 stored patterns wrong, {}/10000 random trials wrong",
            mc.errors
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, b) in [0.1, 0.2, 0.3].into_iter().enumerate() {
        let theory = error_probability(&TheoryInput::new(100, 200, 8, b).with_key_len(3))
            .unwrap()
            .raw;
        if !(1e-3..=0.2).contains(&theory) {
            parts.push(format!(
                "b={b}: P={theory:.2e} outside [1e-3, 0.2], skipped"
            ));
            continue;
        }
        let cfg = ExperimentConfig {
            key_len: Some(3),
            b_start: b,
            b_end: b,
            trials: 100_000,
            seed: 3 + k as u64,
            baseline: false,
            ..ExperimentConfig::new(100, 200, 8)
        };
        let p = sweep_noise(&cfg).unwrap()[0];
        let measured = p.errors as f64 / p.trials as f64;
        let ratio = measured / theory;
        let ok = (1.0 / 3.0..=3.0).contains(&ratio);
        pass &= ok;
        parts.push(format!(
            "b={b}: measured {measured:.4} vs P {theory:.4} (x{ratio:.2}{})",
            if ok { "" } else { ", outside x3" }
        ));
    }
    outcome(pass, parts.join("; "))
}

/// Interpolated distortion where `reliability` first drops below 0.5.
fn crossing(points: &[CurvePoint], reliability: impl Fn(&CurvePoint) -> f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (r0, r1) = (reliability(&w[0]), reliability(&w[1]));
        (r0 >= 0.5 && r1 < 0.5).then(|| w[0].b + (w[1].b - w[0].b) * (r0 - 0.5) / (r0 - r1))
    })
}

fn monotone_within_wilson(points: &[CurvePoint]) -> bool {
    points.iter().enumerate().all(|(i, a)| {
        points[i + 1..].iter().all(|c| {
            c.reliability_measured
                <= a.reliability_measured + a.wilson_halfwidth + c.wilson_halfwidth
        })
    })
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut crossings = Vec::new();
    for q in [8u32, 16, 32] {
        let cfg = ExperimentConfig {
            b_start: 0.0,
            b_end: 0.95,
            steps: 20,
            trials: 20_000,
            seed: 4,
            baseline: false,
            ..ExperimentConfig::new(500, 1000, q)
        };
        let points = sweep_noise(&cfg).unwrap();
        let b_max = critical_distortion(500.0, 1000.0, q).raw;
        let measured = crossing(&points, |p| p.reliability_measured);
        let closed_form = crossing(&points, |p| p.reliability_theory);
        let monotone = monotone_within_wilson(&points);
        let near = measured.is_some_and(|c| (c - b_max).abs() <= 0.10);
        pass &= monotone && near;
        crossings.push(measured.unwrap_or(f64::NAN));
        parts.push(format!(
            "q={q}: crossing {} vs b_max {b_max:.3}{} (1-P curve crosses at {}), monotone={monotone}",
            measured.map_or("none".into(), |c| format!("{c:.3}")),
            if near { "" } else { " OUT OF ±0.10" },
            closed_form.map_or("none".into(), |c| format!("{c:.3}")),
        ));
    }
    let ordered = crossings[0] < crossings[1] && crossings[1] < crossings[2];
    pass &= ordered;
    parts.push(format!("ordered={ordered}"));
    outcome(pass, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let (len, q, m) = (100usize, 8u32, 200u64);
    let patterns = random_patterns(len, q, m, 5).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for exclude_diagonal in [true, false] {
        let dims = qvam_core::Dimensions::new(len, m, q).unwrap();
        let keys = KeyScheme::Index.assign(&dims).unwrap();
        let net =
            HebbNetwork::train_with(&patterns, &keys, TrainOptions { exclude_diagonal }).unwrap();
        let n = dims.key_len();
        let z = if exclude_diagonal { 1 } else { 0 };
        let expect = (n * (len - z) * q as usize) as u64;
        let counts: Vec<u64> = [0.0, 0.5, 0.9]
            .iter()
            .map(|&b| {
                let probe = NoiseSpec::new(b, 5).distort(&patterns[7], 0);
                net.identify_counted(&probe).unwrap().1.accumulations
            })
            .collect();
        let ok = counts.iter().all(|&c| c == expect);
        pass &= ok;
        parts.push(format!(
            "exclude_diagonal={exclude_diagonal}: {counts:?} vs n(N-z)q = {expect}"
        ));
    }
    let scan = baseline_scan_identify(&patterns, &patterns[3]).unwrap();
    let scan_ok = scan.comparisons == len as u64 * m;
    pass &= scan_ok;
    parts.push(format!(
        "scan {} vs N*M = {}",
        scan.comparisons,
        len as u64 * m
    ));
    outcome(pass, parts.join("; "))
}

fn criterion_6() -> Outcome {
    let out = Command::new(BIN)
        .args([
            "theory",
            "--n",
            "40800",
            "--q",
            "256",
            "--m",
            "100000",
            "--b",
            "0.95",
            "--key-len",
            "3",
        ])
        .output()
        .expect("run qvam theory");
    if !out.status.success() {
        return outcome(
            false,
            format!(
                "qvam theory failed: {}",
                String::from_utf8_lossy(&out.stderr)
            ),
        );
    }
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).expect("theory JSON");
    let ne = report["effective_dim"].as_f64().unwrap();
    let p = report["error_probability"]["raw"].as_f64().unwrap();
    let ok = (ne - 102.0).abs() <= 1e-9 * 102.0 && p <= 3e-5;
    outcome(ok, format!("N_e = {ne:.6}, raw P = {p:.3e} (bound 3e-5)"))
}

fn criterion_7() -> Outcome {
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let mut rng = substream(7, Domain::Noise, 7, 0);
    let mut worst_capacity: f64 = 0.0;
    for _ in 0..200 {
        let len = 1.0 + unit_float(&mut rng) * 1e5;
        let b = unit_float(&mut rng) * 0.99;
        let q = 2 + uniform_below(&mut rng, 255) as u32;
        let p0 = 10f64.powf(-12.0 * unit_float(&mut rng)).min(0.999);
        let ne = effective_dim(len, b);
        let m_max = capacity_for(ne, q, p0);
        let lhs = (-ne * (q as f64).powi(2) / (4.0 * m_max)).exp();
        worst_capacity = worst_capacity.max(rel(lhs, p0));
    }

    // Sets where 1 - b_max is below 1e-3 are skipped: b_max itself is then
    // only known to about 1e-16 / (1 - b_max) relative precision.
    let mut worst_critical: f64 = 0.0;
    let mut accepted = 0;
    while accepted < 200 {
        let len = 10.0 + (unit_float(&mut rng) * 1e5).floor();
        let q = 2 + uniform_below(&mut rng, 255) as u32;
        let m = 1.0 + (unit_float(&mut rng) * len * (q as f64).powi(2) / 4.0).floor();
        let b_max = critical_distortion(len, m, q).raw;
        if !(0.0..=0.999).contains(&b_max) {
            continue;
        }
        accepted += 1;
        let ne = effective_dim(len, b_max);
        worst_critical = worst_critical.max(rel(ne * (q as f64).powi(2) / (4.0 * m), 1.0));
    }
    let ok = worst_capacity <= 1e-12 && worst_critical <= 1e-12;
    outcome(
        ok,
        format!(
            "200 sets each: max rel error {worst_capacity:.1e} (capacity), {worst_critical:.1e} (critical distortion)"
        ),
    )
}

fn sweep_csv(dir: &Path, name: &str, threads: &str) -> (Vec<u8>, Vec<u8>) {
    let out = dir.join(name);
    let status = Command::new(BIN)
        .env("QVAM_THREADS", threads)
        .args([
            "sweep", "--n", "60", "--q", "8", "--m", "100", "--steps", "6", "--trials", "4000",
        ])
        .args(["--seed", "88", "--out"])
        .arg(&out)
        .status()
        .expect("run qvam sweep");
    assert!(status.success());
    let meta = std::fs::read(qvam_cli::meta_path(&out)).unwrap();
    (std::fs::read(&out).unwrap(), meta)
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;

    let cases: [(u32, usize); 11] = [
        (2, 19),
        (3, 12),
        (4, 9),
        (5, 8),
        (8, 6),
        (10, 6),
        (16, 4),
        (31, 4),
        (100, 3),
        (1000, 2),
        (1_000_000, 1),
    ];
    let mut keys_checked = 0u64;
    let mut codec_ok = true;
    for (q, n) in cases {
        let space = (q as u64).pow(n as u32);
        assert!(space <= 1_000_000);
        for m in 0..space {
            let key = KeyVector::from_index(m, q, n).unwrap();
            codec_ok &= decode_key(&key) == m;
        }
        codec_ok &= KeyVector::from_index(space, q, n).is_err();
        keys_checked += space;
    }
    pass &= codec_ok;
    parts.push(format!(
        "{keys_checked} keys over {} (q,n) spaces round-trip={codec_ok}",
        cases.len()
    ));

    let mut mapping_ok = true;
    for v in 0..10_000u64 {
        let mut rng = substream(8, Domain::Noise, 8, v);
        let r = 1 + uniform_below(&mut rng, 30) as u32;
        let symbols = 1 + uniform_below(&mut rng, 40) as usize;
        let bits: Vec<bool> = (0..r as usize * symbols)
            .map(|_| uniform_below(&mut rng, 2) == 1)
            .collect();
        let vector = BinaryVector::new(bits);
        let mapped = map_binary(&vector, r).unwrap();
        mapping_ok &= mapped.len() == symbols && unmap_binary(&mapped, r).unwrap() == vector;
    }
    pass &= mapping_ok;
    parts.push(format!("10000 binary vectors map/unmap={mapping_ok}"));

    let dir = tempfile::tempdir().unwrap();
    let a = sweep_csv(dir.path(), "a.csv", "1");
    let b = sweep_csv(dir.path(), "b.csv", "1");
    let c = sweep_csv(dir.path(), "c.csv", "4");
    let identical = a == b && a == c;
    pass &= identical;
    parts.push(format!(
        "sweep CSV + sidecar byte-identical over 2 runs x 2 thread counts={identical}"
    ));
    outcome(pass, parts.join("; "))
}

fn main() {
    let criteria: [Check; 8] = [
        (
            "1",
            "oracle equivalence",
            Duration::from_secs(10),
            criterion_1,
        ),
        (
            "2",
            "exact recall within capacity",
            Duration::from_secs(1),
            criterion_2,
        ),
        (
            "3",
            "error estimate agreement",
            Duration::from_secs(300),
            criterion_3,
        ),
        (
            "4",
            "reliability curves and critical distortion",
            Duration::from_secs(1800),
            criterion_4,
        ),
        (
            "5",
            "complexity accounting",
            Duration::from_secs(1),
            criterion_5,
        ),
        ("6", "numeric anchor", Duration::from_secs(1), criterion_6),
        (
            "7",
            "algebraic identities",
            Duration::from_secs(1),
            criterion_7,
        ),
        (
            "8",
            "codec, mapping and sweep reproducibility",
            Duration::from_secs(30),
            criterion_8,
        ),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = result.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "{} criterion {id} ({name}): {} [{:.2}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
        );
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
