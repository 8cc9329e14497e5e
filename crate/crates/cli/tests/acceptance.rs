//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and a summary. A failing criterion is reported, not raised, so the rest
//! of the workspace tests still run; pass `--strict` to exit non-zero on
//! any failure.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;
use relevance_core::bench::{run_bench, BenchConfig, BenchResult, Method};
use relevance_core::data::{Dataset, Task};
use relevance_core::decompose::minimal_set;
use relevance_core::forest::TreeNode;
use relevance_core::rng::seeded;
use relevance_core::stats::sample_null;
use relevance_core::synth::{gen_linear, LinearSpec, LINEAR_PRESETS, NONLINEAR_PRESETS};
use relevance_core::{
    decompose, prediction_interval, t_quantile, Forest, ForestParams, PipelineConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    println!(
        "{id} {} {} ({:.0}s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        start.elapsed().as_secs_f64()
    );
    o.pass
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("NA".into(), |x| format!("{x:.3}"))
}

// ---- C1-C3: linear benchmark ------------------------------------------

fn c1(sq: &BenchResult) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in sq.summary() {
        let f1 = s.f1.unwrap_or(0.0);
        let bar = if ["Set 1", "Set 5", "Set 6", "Set 8"].contains(&s.preset.as_str()) {
            0.90
        } else {
            0.85
        };
        pass &= f1 >= bar;
        parts.push(format!("{} {f1:.3}/{bar}", s.preset));
    }
    let seconds: f64 = sq.rows.iter().map(|r| r.seconds).sum();
    Outcome {
        pass,
        detail: format!("mean F1 {}; selection time {seconds:.0}s", parts.join(", ")),
    }
}

fn c2(sq: &BenchResult) -> Outcome {
    let strong: Vec<f64> = sq.rows.iter().filter_map(|r| r.strong.and_then(|m| m.recall)).collect();
    let weak: Vec<f64> = sq.rows.iter().filter_map(|r| r.weak.and_then(|m| m.precision)).collect();
    let (sr, wp) = (mean(strong.iter().copied()), mean(weak.iter().copied()));
    let per_set: Vec<String> = sq
        .summary()
        .iter()
        .map(|s| format!("{} {}/{}", s.preset, fmt(s.strong_recall), fmt(s.weak_precision)))
        .collect();
    Outcome {
        pass: sr >= 0.90 && wp >= 0.90,
        detail: format!(
            "strong recall {sr:.3} (>= 0.90, {} runs), weak precision {wp:.3} (>= 0.90, {} runs); per set {}",
            strong.len(),
            weak.len(),
            per_set.join(", ")
        ),
    }
}

fn c3(sq: &BenchResult, rfe: &BenchResult) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for set in ["Set 6", "Set 7"] {
        let a = mean(sq.rows_for(set, Method::Sq).map(|r| r.overall.f1));
        let b = mean(rfe.rows_for(set, Method::Rfe).map(|r| r.overall.f1));
        pass &= a - b >= 0.3;
        parts.push(format!("{set} SQ {a:.3} vs RFE {b:.3} (gap {:.3})", a - b));
    }
    Outcome {
        pass,
        detail: parts.join(", "),
    }
}

// ---- C4: non-linear benchmark ----------------------------------------

fn c4(nl: &BenchResult) -> Outcome {
    let recall = |m: Method| mean(nl.rows.iter().filter(|r| r.method == m).filter_map(|r| r.overall.recall));
    let accuracy = mean(nl.rows.iter().filter(|r| r.method == Method::Sq).map(|r| r.train_accuracy));
    let (sq, rfe) = (recall(Method::Sq), recall(Method::Rfe));
    Outcome {
        pass: sq >= 0.75 && accuracy >= 0.78 && sq > rfe,
        detail: format!(
            "SQ recall {sq:.3} (>= 0.75), SQ accuracy {accuracy:.3} (>= 0.78), RFE recall {rfe:.3} (< SQ)"
        ),
    }
}

// ---- C5: null control -------------------------------------------------

fn noise_dataset(seed: u64) -> Dataset {
    let mut r = seeded(seed);
    let n = 200;
    let cols = (0..20)
        .map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();
    let y = (0..n).map(|_| r.random_range(0..2) as f64).collect();
    Dataset::from_columns(cols, y, Task::Classification).unwrap()
}

fn c5() -> Outcome {
    let config = PipelineConfig::default();
    let (mut empty_a, mut empty_m) = (0, 0);
    for seed in 0..10 {
        let ds = noise_dataset(seed);
        let report = decompose(&ds, &config, &mut seeded(seed)).unwrap();
        if report.diagnostics.all_relevant.is_empty() {
            empty_a += 1;
        }
        let null = sample_null(&config.minimal_set, &ds, config.alpha, &mut seeded(100 + seed)).unwrap();
        let gamma = prediction_interval(&null.shadow_importances, config.p_value).unwrap();
        if minimal_set(&config.minimal_set, &ds, gamma.upper, &mut seeded(200 + seed))
            .unwrap()
            .is_empty()
        {
            empty_m += 1;
        }
    }
    Outcome {
        pass: empty_a >= 9 && empty_m >= 9,
        detail: format!("A empty in {empty_a}/10, minimal set empty in {empty_m}/10 (need 9)"),
    }
}

// ---- C6: statistics kernel --------------------------------------------

/// Lanczos log-gamma, independent of the library.
fn lgamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let t = x + 7.5;
    let a = C[0] + (1..9).map(|i| C[i] / (x + i as f64)).sum::<f64>();
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Upper tail P(T > t), t ≥ 0, by composite Simpson integration of the
/// density after substituting x = tan(u).
fn t_upper_tail(t: f64, dof: f64) -> f64 {
    let ln_c = lgamma((dof + 1.0) / 2.0) - lgamma(dof / 2.0) - 0.5 * (dof * std::f64::consts::PI).ln();
    let f = |u: f64| {
        let c = u.cos();
        if c <= 0.0 {
            return 0.0;
        }
        let x = u.tan();
        (ln_c - (dof + 1.0) / 2.0 * (1.0 + x * x / dof).ln()).exp() / (c * c)
    };
    let (a, b) = (t.atan(), std::f64::consts::FRAC_PI_2);
    let steps = 20_000;
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// Quantile by bisection on the integrated tail.
fn t_quantile_oracle(prob: f64, dof: f64) -> f64 {
    let target = 1.0 - prob;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while t_upper_tail(hi, dof) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_upper_tail(mid, dof) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn c6() -> Outcome {
    let mut worst: f64 = 0.0;
    for prob in [0.9, 0.975, 1.0 - 5e-7] {
        for dof in [1u64, 5, 49, 1000] {
            let q = t_quantile(prob, dof).unwrap();
            let oracle = t_quantile_oracle(prob, dof as f64);
            // absolute for moderate quantiles, relative for the far tail
            worst = worst.max((q - oracle).abs() / oracle.max(1.0));
        }
    }
    let point = prediction_interval(&[1.0; 4], 1e-6).unwrap();
    let collapses = point.lower == 1.0 && point.upper == 1.0;

    let mut r = seeded(6);
    let normal = |r: &mut relevance_core::rng::StreamRng| -> f64 {
        // Box-Muller keeps the draw independent of the library's samplers
        let (u1, u2): (f64, f64) = (1.0 - r.random::<f64>(), r.random());
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let trials = 10_000;
    let mut covered = 0;
    for _ in 0..trials {
        let xs: Vec<f64> = (0..20).map(|_| normal(&mut r)).collect();
        let pi = prediction_interval(&xs, 0.1).unwrap();
        if pi.contains(normal(&mut r)) {
            covered += 1;
        }
    }
    let coverage = covered as f64 / trials as f64;
    Outcome {
        pass: worst <= 1e-6 && collapses && (coverage - 0.9).abs() <= 0.02,
        detail: format!(
            "max quantile error {worst:.1e} (<= 1e-6), zero-variance interval collapses: {collapses}, coverage at p=0.1 {coverage:.4} (0.90 +- 0.02)"
        ),
    }
}

// ---- C7: exhaustive split search ---------------------------------------

fn gini_mass(ys: &[f64]) -> f64 {
    // n * gini = n * 2 p (1 - p)
    let n = ys.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = ys.iter().sum::<f64>() / n;
    n * 2.0 * p * (1.0 - p)
}

/// Checks the subtree at `node` against a brute-force search over every
/// (feature, threshold) pair on `rows`. Returns a description of the first
/// mismatch.
fn compare_node(ds: &Dataset, nodes: &[TreeNode], node: usize, rows: &[usize]) -> Result<(), String> {
    let y = ds.target();
    let total = ds.n_rows() as f64;
    let parent: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let parent_mass = gini_mass(&parent);
    let tol = 1e-12 * (parent_mass / rows.len() as f64).max(f64::MIN_POSITIVE);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..ds.n_features() {
        let x = ds.column(f);
        let mut values: Vec<f64> = rows.iter().map(|&i| x[i]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let thr = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i] <= thr);
            let ly: Vec<f64> = l.iter().map(|&i| y[i]).collect();
            let ry: Vec<f64> = r.iter().map(|&i| y[i]).collect();
            let decrease = (parent_mass - gini_mass(&ly) - gini_mass(&ry)) / rows.len() as f64;
            let better = match best {
                None => decrease > tol,
                Some((_, _, g)) => decrease > g + tol,
            };
            if better {
                best = Some((f, thr, decrease));
            }
        }
    }
    match (&nodes[node], best) {
        (TreeNode::Leaf { value, samples }, None) => {
            let p = parent.iter().sum::<f64>() / parent.len() as f64;
            if *samples != rows.len() || (value - p).abs() > 1e-12 {
                return Err(format!("leaf {node}: value {value}/{samples} vs {p}/{}", rows.len()));
            }
            Ok(())
        }
        (
            &TreeNode::Split {
                feature,
                threshold,
                gain,
                left,
                right,
            },
            Some((f, thr, decrease)),
        ) => {
            let expected_gain = decrease * rows.len() as f64 / total;
            if feature != f || threshold != thr || (gain - expected_gain).abs() > 1e-12 {
                return Err(format!(
                    "node {node}: split ({feature}, {threshold}, {gain}) vs ({f}, {thr}, {expected_gain})"
                ));
            }
            let x = ds.column(feature);
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i] <= threshold);
            compare_node(ds, nodes, left, &l)?;
            compare_node(ds, nodes, right, &r)
        }
        (n, b) => Err(format!("node {node}: tree has {n:?}, search found {b:?}")),
    }
}

fn check_instance(n: usize, d: usize, code: u64, params: &ForestParams) -> Result<(), String> {
    let bit = |k: usize| ((code >> k) & 1) as f64;
    let cols = (0..d).map(|f| (0..n).map(|i| bit(f * n + i)).collect()).collect();
    let y = (0..n).map(|i| bit(d * n + i)).collect();
    let ds = Dataset::from_columns(cols, y, Task::Classification).unwrap();
    let forest = Forest::fit(params, &ds, &mut seeded(code)).unwrap();
    let rows: Vec<usize> = (0..n).collect();
    compare_node(&ds, forest.trees()[0].nodes(), 0, &rows)
        .map_err(|e| format!("n={n} d={d} code={code:#x}: {e}"))
}

fn c7() -> Outcome {
    let params = ForestParams {
        n_trees: 1,
        feature_fraction: 1.0,
        bagging_fraction: 1.0,
        num_leaves: 1024,
        max_depth: 64,
        min_samples_leaf: 1,
        ..Default::default()
    };
    let mut instances = 0usize;
    let mut failure = None;
    'outer: for n in 2..=8usize {
        for d in 1..=2usize {
            let bits = (d + 1) * n;
            // exhaustive up to 2^18 label/feature patterns, sampled beyond
            let codes: Vec<u64> = if bits <= 18 {
                (0..1u64 << bits).collect()
            } else {
                let mut r = seeded(bits as u64);
                (0..50_000).map(|_| r.random_range(0..1u64 << bits)).collect()
            };
            for code in codes {
                instances += 1;
                if let Err(e) = check_instance(n, d, code, &params) {
                    failure = Some(e);
                    break 'outer;
                }
            }
        }
    }
    Outcome {
        pass: failure.is_none(),
        detail: match failure {
            None => format!("{instances} binary instances with n <= 8, d <= 2 match the brute-force search"),
            Some(e) => format!("mismatch: {e}"),
        },
    }
}

// ---- C8: set algebra ----------------------------------------------------

fn c8() -> Outcome {
    let mut r = seeded(8);
    let mut bad = Vec::new();
    for run in 0..50u64 {
        let n_strong = r.random_range(0..4);
        let n_weak = [0, 2, 3, 4][r.random_range(0..4)];
        let n_irrelevant = r.random_range(usize::from(n_strong + n_weak == 0)..5);
        let spec = LinearSpec::new(r.random_range(60..160), n_strong, n_weak, n_irrelevant);
        let (ds, _) = gen_linear(&spec, &mut seeded(run)).unwrap();
        let trees = r.random_range(20..60);
        let shrink = |p: ForestParams| ForestParams { n_trees: trees, ..p };
        let base = PipelineConfig::default();
        let config = PipelineConfig {
            boruta: shrink(base.boruta.clone()),
            minimal_set: shrink(base.minimal_set.clone()),
            comparison: shrink(base.comparison.clone()),
            alpha: r.random_range(5..20),
            boruta_max_iter: 20,
            ..base
        };
        let report = decompose(&ds, &config, &mut seeded(1000 + run)).unwrap();
        let d = ds.n_features();
        let a = &report.diagnostics.all_relevant;
        let m = &report.diagnostics.minimal_set;
        let ok = report.strong.union(&report.weak) == *a
            && report.strong.is_disjoint(&report.weak)
            && report.irrelevant == a.complement(d)
            && report.strong.is_subset(&m.intersection(a))
            && report.diagnostics.strong_tests == m.intersection(a).len();
        if !ok {
            bad.push(run);
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            "50/50 randomized reports satisfy S ∪ W = A, S ∩ W = ∅, I = G ∖ A, S ⊆ M ∩ A, tests = |M ∩ A|".into()
        } else {
            format!("violations in runs {bad:?}")
        },
    }
}

// ---- C9: CLI determinism ------------------------------------------------

fn c9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_relevance");
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let status = Command::new(bin)
        .args(["generate", "--preset", "Set 3", "--out", &p("d.csv"), "--truth", &p("t.json"), "--seed", "9"])
        .status()
        .unwrap();
    assert!(status.success());
    let select = |out: &str| {
        let status = Command::new(bin)
            .args(["select", "--input", &p("d.csv"), "--out", &p(out), "--seed", "3"])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(p(out)).unwrap()
    };
    let (a, b) = (select("a.json"), select("b.json"));
    Outcome {
        pass: a == b && !a.is_empty(),
        detail: format!("two select runs produced {} and {} bytes, identical: {}", a.len(), b.len(), a == b),
    }
}

fn bench(presets: &[&str], methods: Vec<Method>) -> BenchResult {
    let config = BenchConfig::new(presets.iter().map(|s| s.to_string()).collect(), 10, methods, 0);
    run_bench(&config).unwrap()
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as --nocapture; listing must
    // not trigger the full run
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut results = Vec::new();
    results.push(check("C6", c6));
    results.push(check("C7", c7));
    results.push(check("C9", c9));
    results.push(check("C8", c8));
    results.push(check("C5", c5));

    let start = Instant::now();
    let sq = bench(&LINEAR_PRESETS, vec![Method::Sq]);
    println!("   linear SQ bench, 8 presets x 10 repeats: {:.0}s wall", start.elapsed().as_secs_f64());
    results.push(check("C1", || c1(&sq)));
    results.push(check("C2", || c2(&sq)));
    let rfe = bench(&["Set 6", "Set 7"], vec![Method::Rfe]);
    results.push(check("C3", || c3(&sq, &rfe)));
    let nl = bench(&NONLINEAR_PRESETS, vec![Method::Sq, Method::Rfe]);
    results.push(check("C4", || c4(&nl)));

    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed < results.len() && std::env::args().any(|a| a == "--strict") {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
