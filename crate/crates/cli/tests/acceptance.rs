//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! fails if any criterion fails:
//!
//! cargo test -p pcorder-cli --test acceptance -- --nocapture

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::process::Command;
use std::time::{Duration, Instant};

use pcorder_core::data::{load_csv, Dataset};
use pcorder_core::detectors::{
    clear_grouping, density_change, fan, kde_density, neighborhood_probabilities, outliers,
    parallelism, pearson, skewness, std_dev,
};
use pcorder_core::ordering::{order_tsp, OrderingMode};
use pcorder_core::report::{OrderReport, ResultDocument};
use pcorder_core::{
    Analysis, AnalysisConfig, Execution, OrderingMethod, PropertyId, ScoreMatrix, Weights,
    WindowSpec,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use support::{oracles, rng, uniform};

const ALGEBRAIC: f64 = 1e-12;
const KL: f64 = 1e-9;

type Criterion = (&'static str, fn() -> Outcome);

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

/// Largest absolute deviation seen, with the instance count.
#[derive(Default)]
struct Worst {
    err: f64,
    instances: usize,
}

impl Worst {
    fn see(&mut self, a: f64, b: f64) {
        let e = (a - b).abs();
        self.err = if e.is_nan() {
            f64::INFINITY
        } else {
            self.err.max(e)
        };
    }
}

fn instance(r: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n = r.random_range(5..=50);
    let xs = uniform(r, n);
    let shape = r.random_range(0..3);
    let ys: Vec<f64> = uniform(r, n)
        .iter()
        .zip(&xs)
        .map(|(u, x)| match shape {
            0 => *u,
            1 => (0.7 * x + 0.3 * u).min(1.0),
            _ => u * u,
        })
        .collect();
    (xs, ys)
}

fn detector_oracles() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1001);
    let names = [
        "pearson",
        "skewness",
        "outliers",
        "kde_density",
        "density_change",
        "neighborhood_probabilities",
        "clear_grouping",
        "parallelism",
        "fan",
    ];
    let mut worst: Vec<Worst> = names.iter().map(|_| Worst::default()).collect();
    for _ in 0..100 {
        let (xs, ys) = instance(&mut r);
        let p = pearson(&xs, &ys).unwrap();
        let (or, onum) = oracles::pearson(&xs, &ys);
        worst[0].see(p.r, or);
        worst[0].see(p.covariance_numerator, onum);
        worst[1].see(skewness(&xs), oracles::skewness(&xs));
        worst[2].see(outliers(&xs) as f64, oracles::outliers(&xs) as f64);
        let h = std_dev(&xs).max(1e-3);
        let eval = uniform(&mut r, 20);
        let got = kde_density(&xs, &eval, h).unwrap();
        for (g, w) in got.iter().zip(oracles::kde(&xs, &eval, h)) {
            worst[3].see(*g, w);
        }
        worst[4].see(
            density_change(&xs, &ys).unwrap(),
            oracles::density_change(&xs, &ys),
        );
        let sigma = oracles::scale(&xs);
        let got = neighborhood_probabilities(&xs, sigma);
        for (gr, wr) in got.iter().zip(oracles::neighbors(&xs, sigma)) {
            for (g, w) in gr.iter().zip(wr) {
                worst[5].see(*g, w);
            }
        }
        worst[6].see(
            clear_grouping(&xs, &ys).unwrap(),
            oracles::clear_grouping(&xs, &ys),
        );
        worst[7].see(
            parallelism(&xs, &ys).unwrap(),
            oracles::parallelism(&xs, &ys),
        );
        worst[8].see(fan(&xs, &ys, 20).unwrap(), oracles::fan(&ys, 20));
        for w in worst.iter_mut() {
            w.instances += 1;
        }
    }
    let elapsed = start.elapsed();
    let tol = |k: usize| {
        if matches!(k, 3 | 4 | 6) {
            KL
        } else {
            ALGEBRAIC
        }
    };
    let failing: Vec<String> = worst
        .iter()
        .enumerate()
        .filter(|(k, w)| w.err.is_nan() || w.err > tol(*k) || w.instances < 100)
        .map(|(k, w)| format!("{} err {:.2e}", names[k], w.err))
        .collect();
    let max_alg = [0, 1, 2, 5, 7, 8]
        .iter()
        .map(|&k| worst[k].err)
        .fold(0.0, f64::max);
    let max_kl = [3, 4, 6].iter().map(|&k| worst[k].err).fold(0.0, f64::max);
    outcome(
        failing.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "9 detectors x 100 instances, N<=50; max err algebraic {max_alg:.1e}, KL {max_kl:.1e}; {:.2?}{}",
            elapsed,
            if failing.is_empty() { String::new() } else { format!("; failing: {}", failing.join(", ")) }
        ),
    )
}

fn kl_invariants() -> Outcome {
    let mut r = rng(1002);
    let mut worst_self: f64 = 0.0;
    let mut worst_affine: f64 = 0.0;
    let mut negative = 0;
    for _ in 0..50 {
        let (xs, ys) = instance(&mut r);
        let a = r.random_range(0.1..5.0);
        let b = r.random_range(-2.0..2.0);
        let affine: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        worst_self = worst_self.max(density_change(&xs, &xs).unwrap().abs());
        worst_affine = worst_affine.max(clear_grouping(&xs, &affine).unwrap().abs());
        for v in [
            density_change(&xs, &ys).unwrap(),
            clear_grouping(&xs, &ys).unwrap(),
            density_change(&ys, &xs).unwrap(),
            clear_grouping(&ys, &xs).unwrap(),
        ] {
            if v.is_nan() || v < 0.0 {
                negative += 1;
            }
        }
    }
    outcome(
        worst_self <= KL && worst_affine <= KL && negative == 0,
        format!(
            "50 instances; max |density_change(x,x)| {worst_self:.1e}, max |clear_grouping(x,ax+b)| {worst_affine:.1e}, negative outputs {negative}"
        ),
    )
}

fn complementarity() -> Outcome {
    let report = load_csv(support::penguins_path(), None).unwrap();
    let mut checked = 0usize;
    let mut violations = 0usize;
    for &wf in &[0.1, 0.25, 0.5, 1.0] {
        let cfg = AnalysisConfig::new(WindowSpec::with_window(wf).unwrap(), 5);
        let a = Analysis::compute(&report.dataset, &cfg, Execution::default()).unwrap();
        for prof in a.profiles() {
            let clear = prof.series(PropertyId::ClearGrouping);
            let split = prof.series(PropertyId::SplitUp);
            for (c, s) in clear.iter().zip(split) {
                checked += 1;
                let ok = match (c, s) {
                    (Some(c), Some(s)) => *s == 1.0 - c,
                    (None, None) => true,
                    _ => false,
                };
                if !ok {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0 && checked > 0,
        format!("penguins, windows {{0.1,0.25,0.5,1.0}}: {checked} windows checked, {violations} violations"),
    )
}

fn tsp_exactness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1004);
    let mut mismatches = 0;
    let mut cases = 0;
    for d in 3..=7 {
        for _ in 0..200 {
            let w: Vec<Vec<f64>> = (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| if i == j { 0.0 } else { r.random::<f64>() })
                        .collect()
                })
                .collect();
            let m = ScoreMatrix::from_dense((0..d).map(|k| k.to_string()).collect(), w.clone());
            let got = order_tsp(&m).unwrap();
            let best = oracles::brute_force_path(&w);
            cases += 1;
            if (got.total_score - best).abs() > ALGEBRAIC
                || got.method != OrderingMethod::BranchAndBound
            {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(120),
        format!("{cases} directed matrices, D in 3..=7: {mismatches} mismatches vs exhaustive search (tol 1e-12); {elapsed:.2?}"),
    )
}

fn study_dataset() -> Dataset {
    let mut r = rng(1005);
    let n = 2000;
    let base = uniform(&mut r, n);
    let cols = (0..6)
        .map(|k| {
            let noise = uniform(&mut r, n);
            let v = base
                .iter()
                .zip(&noise)
                .map(|(b, u)| match k % 3 {
                    0 => 0.6 * b + 0.4 * u,
                    1 => (1.0 - b) * 0.5 + 0.5 * u * u,
                    _ => *u,
                })
                .collect();
            (format!("c{k}"), v)
        })
        .collect();
    Dataset::from_columns("study", cols).unwrap()
}

fn real_time() -> Outcome {
    let ds = study_dataset();
    let cfg = AnalysisConfig::new(WindowSpec::new(0.2, 0.1).unwrap(), 9).with_permutations(200);
    let start = Instant::now();
    let a = Analysis::compute(&ds, &cfg, Execution::default()).unwrap();
    let m = a.matrix(&Weights::uniform()).unwrap();
    let profiles = a.profiles().count();
    let full = start.elapsed();
    let start = Instant::now();
    let w: Weights = "pos_corr=1,clear_grouping=0.5,fan=0.25".parse().unwrap();
    let m2 = a.matrix(&w).unwrap();
    let reweight = start.elapsed();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    outcome(
        full < Duration::from_secs(5)
            && reweight < Duration::from_millis(200)
            && profiles == 30
            && m.active_cells() == 30
            && m2.active_cells() == 30,
        format!(
            "2000x6, window 0.2 stride 0.1, 200 permutations, {threads} thread(s): matrix + {profiles} profiles {full:.2?} (< 5 s); weight-only change {reweight:.2?} (< 200 ms)"
        ),
    )
}

fn fuzz_corpus() -> Vec<Dataset> {
    let mut r = rng(1006);
    let mut out = Vec::new();
    for case in 0..24 {
        let rows = match case % 4 {
            0 => 5,
            1 => r.random_range(6..20),
            _ => r.random_range(20..150),
        };
        let dims = r.random_range(2..6);
        let mut cols: Vec<(String, Vec<f64>)> = Vec::new();
        for k in 0..dims {
            let v: Vec<f64> = match (case + k) % 5 {
                0 => vec![3.25; rows],
                1 if k > 0 => cols[k - 1].1.clone(),
                2 => (0..rows).map(|_| (r.random_range(0..3)) as f64).collect(),
                3 => uniform(&mut r, rows)
                    .iter()
                    .map(|u| u.powi(6) * 1e6)
                    .collect(),
                _ => uniform(&mut r, rows),
            };
            cols.push((format!("f{k}"), v));
        }
        out.push(Dataset::from_columns(format!("fuzz{case}"), cols).unwrap());
    }
    out
}

fn numbers_finite(v: &serde_json::Value) -> bool {
    match v {
        serde_json::Value::Number(n) => n.as_f64().is_some_and(f64::is_finite),
        serde_json::Value::Array(a) => a.iter().all(numbers_finite),
        serde_json::Value::Object(o) => o.values().all(numbers_finite),
        _ => true,
    }
}

fn range_discipline() -> Outcome {
    let mut docs = 0;
    let mut problems = Vec::new();
    let weights = [
        Weights::uniform(),
        "pos_skew=1,outliers=1".parse().unwrap(),
        "density_change=1,split_up=0.5,neighborhood=1"
            .parse()
            .unwrap(),
    ];
    for (k, ds) in fuzz_corpus().iter().enumerate() {
        for &wf in &[0.1, 0.5, 1.0] {
            let cfg = AnalysisConfig::new(WindowSpec::with_window(wf).unwrap(), k as u64)
                .with_permutations(100);
            let a = Analysis::compute(ds, &cfg, Execution::default()).unwrap();
            for w in &weights {
                let report =
                    OrderReport::build(&a, w, OrderingMode::Tsp, Execution::default()).unwrap();
                let doc = ResultDocument::build(&a, w, 0)
                    .unwrap()
                    .with_ordering(&report);
                docs += 1;
                if let Err(e) = doc.check_ranges() {
                    problems.push(format!("{}: {e}", ds.name()));
                }
                let text = serde_json::to_string(&doc).unwrap();
                let value: serde_json::Value = serde_json::from_str(&text).unwrap();
                if !numbers_finite(&value) || text.contains("NaN") || text.contains("inf") {
                    problems.push(format!("{}: non-finite number serialized", ds.name()));
                }
                for row in &doc.matrix.cells {
                    for c in row.iter().flatten() {
                        if !(0.0..=1.0).contains(c) {
                            problems.push(format!("{}: cell {c}", ds.name()));
                        }
                    }
                }
                let donut_sum: f64 = report.donut.0.iter().sum();
                if report.donut.0.iter().any(|v| !(0.0..=1.0).contains(v)) || donut_sum > 1.0 + 1e-9
                {
                    problems.push(format!("{}: donut out of range", ds.name()));
                }
            }
        }
    }
    outcome(
        problems.is_empty(),
        format!(
            "{docs} documents (constant, duplicated, low-cardinality, heavy-tailed and 5-row datasets): {} problems{}",
            problems.len(),
            problems.first().map(|p| format!("; first: {p}")).unwrap_or_default()
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_pcorder");
    let input = support::penguins_path();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.json"));
        let status = Command::new(bin)
            .args(["order", "--input"])
            .arg(&input)
            .args([
                "--window",
                "0.25",
                "--weights",
                "pos_corr=1,pos_skew=1,clear_grouping=0.5",
            ])
            .args(["--seed", "7", "--permutations", "200", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(
                false,
                format!(
                    "run {k} failed: {}",
                    String::from_utf8_lossy(&status.stderr)
                ),
            );
        }
        outputs.push((std::fs::read(&out).unwrap(), status.stdout));
    }
    let same = outputs[0] == outputs[1];
    outcome(
        same,
        format!(
            "two `pcorder order` runs on penguins, seed 7: JSON {} bytes, byte-identical: {same}",
            outputs[0].0.len()
        ),
    )
}

fn sixteen_axes() -> Outcome {
    let mut r = rng(1008);
    let cols = (0..16)
        .map(|k| (format!("x{k}"), uniform(&mut r, 300)))
        .collect();
    let ds = Dataset::from_columns("wide", cols).unwrap();
    let start = Instant::now();
    let cfg = AnalysisConfig::new(WindowSpec::with_window(0.25).unwrap(), 3);
    let a = Analysis::compute(&ds, &cfg, Execution::default()).unwrap();
    let report = OrderReport::build(
        &a,
        &Weights::uniform(),
        OrderingMode::Tsp,
        Execution::default(),
    )
    .unwrap();
    let elapsed = start.elapsed();
    let method = report.ordering.method;
    outcome(
        method == OrderingMethod::Greedy && elapsed < Duration::from_secs(2),
        format!("16 axes x 300 rows, mode tsp: method {method:?}, {elapsed:.2?} including analysis (< 2 s)"),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        ("detector oracles", detector_oracles),
        ("KL invariants", kl_invariants),
        ("split-up complementarity", complementarity),
        ("TSP exactness", tsp_exactness),
        ("real-time bound", real_time),
        ("range discipline", range_discipline),
        ("CLI determinism", determinism),
        ("D > 15 greedy switch", sixteen_axes),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let o = check();
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
