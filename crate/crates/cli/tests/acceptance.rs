//! Acceptance suite: one PASS/FAIL/SKIP line per criterion, non-zero exit on
//! any FAIL. The two dataset-dependent checks read their inputs from
//! environment variables and are skipped when those are unset:
//!
//! - `SLCE_ARCENE_CSV`: Arcene, one sample per row, label in the last column.
//! - `SLCE_MNIST_TRAIN_CSV`, `SLCE_MNIST_TEST_CSV`: MNIST in the same layout.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slce_core::baselines::fit_pca_with;
use slce_core::dataset::{center, centroid_matrix};
use slce_core::harness::{run_experiment_with_data, EmbeddingTable, Partition};
use slce_core::linalg::{centroid_cost, max_principal_angle, sym_eig};
use slce_core::slce::{self, build_cross_matrix, build_system_matrix, positivity_tol};
use slce_core::synthetic::random_dataset;
use slce_core::{knn, load_csv, CsvOptions, ExperimentConfig, LabeledDataset, Method, SolverOptions};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::{Fail, Pass, Skip};

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The 100 randomized datasets shared by criteria 1 and 5.
fn property_datasets() -> Vec<LabeledDataset> {
    let mut r = rng(0x5eed_0001);
    (0..100)
        .map(|_| {
            let d = r.random_range(2..=50);
            let n = r.random_range(10..=300);
            let m = r.random_range(1..=8);
            random_dataset(&mut r, d, n, m).expect("valid generator arguments")
        })
        .collect()
}

#[derive(Default)]
struct PropertyTally {
    psd: usize,
    rank: usize,
    positive: usize,
    dominance: usize,
    identity: usize,
    curve: usize,
    literal_plateau: usize,
    worst_identity: f64,
}

/// Properties 1-6 on one dataset, with violations added to `t`.
fn check_properties(ds: &LabeledDataset, t: &mut PropertyTally) {
    let (c, _) = center(ds);
    let xc = c.data();
    let ctilde = centroid_matrix(&c).data;
    let (d, m) = (ds.n_features(), ds.n_classes());
    let data_energy = xc.norm_squared();

    let cross = sym_eig(&build_cross_matrix(xc, &ctilde).unwrap()).unwrap().eigenvalues;
    let sys = sym_eig(&build_system_matrix(xc, &ctilde).unwrap()).unwrap();
    let mu = &sys.eigenvalues;

    // PSD and rank are judged on the data energy, which also covers M = 1
    // where the cross matrix vanishes.
    t.psd += usize::from(cross.min() < -1e-8 * data_energy);
    t.rank += usize::from(cross.iter().filter(|v| v.abs() > 1e-8 * data_energy).count() > m - 1);
    let tol = positivity_tol(mu);
    let positive = mu.iter().filter(|&&v| v > tol).count();
    t.positive += usize::from(positive > m - 1);
    let slack = 1e-8 * cross.amax().max(mu.amax());
    t.dominance += usize::from((0..d).any(|i| mu[i] > cross[i] + slack));

    let trace = ctilde.norm_squared();
    let cost = |k: usize| centroid_cost(&ctilde, &sys.eigenvectors.columns(0, k).into_owned(), xc).unwrap();
    let mut ks = vec![1, d.min(m.saturating_sub(1)), d.min(m + 2)];
    ks.retain(|&k| k >= 1);
    for k in ks {
        let cost_k = cost(k);
        let predicted = trace - mu.rows(0, k).sum();
        // Relative to the centroid energy; with one class that energy is zero
        // and the data energy is the only meaningful scale.
        let scale = if trace > 1e-12 * data_energy {
            cost_k.abs().max(trace)
        } else {
            data_energy
        };
        let rel = (cost_k - predicted).abs() / scale;
        t.worst_identity = t.worst_identity.max(rel);
        t.identity += usize::from(rel > 1e-6);
    }

    // Strictly decreasing through the positive eigenvalues, flat through the
    // zero ones, and nothing beyond the positive count does better.
    let costs: Vec<f64> = (0..=d).map(cost).collect();
    let flat = 1e-8 * trace.max(mu.amax());
    let zero_block_end = positive + mu.iter().skip(positive).take_while(|&&v| v >= -tol).count();
    let mut bad = (1..=positive).any(|k| costs[k] >= costs[k - 1]);
    bad |= (positive + 1..=zero_block_end).any(|k| (costs[k] - costs[k - 1]).abs() > flat);
    bad |= costs.iter().any(|&c| c < costs[positive] - flat);
    t.curve += usize::from(bad);
    // Constancy over every k ≥ positive count, which negative eigenvalues rule out.
    t.literal_plateau += usize::from((positive + 1..=d).any(|k| (costs[k] - costs[k - 1]).abs() > flat));
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let sets = property_datasets();
    let mut t = PropertyTally::default();
    for ds in &sets {
        check_properties(ds, &mut t);
    }
    let elapsed = start.elapsed();
    let failures = t.psd + t.rank + t.positive + t.dominance + t.identity + t.curve;
    verdict(
        failures == 0 && elapsed < Duration::from_secs(60),
        format!(
            "{} datasets in {:.1}s; violations psd={} rank={} positive={} dominance={} identity={} curve={} \
             (worst identity error {:.1e}); {} datasets rise after the zero eigenvalues, as negative \
             eigenvalues require",
            sets.len(),
            elapsed.as_secs_f64(),
            t.psd,
            t.rank,
            t.positive,
            t.dominance,
            t.identity,
            t.curve,
            t.worst_identity,
            t.literal_plateau
        ),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut r = rng(0x5eed_0002);
    let mut worst_margin = f64::INFINITY;
    let mut failures = 0;
    for _ in 0..25 {
        let m = r.random_range(2..=4);
        let n = r.random_range(12..=80);
        let ds = random_dataset(&mut r, 2, n, m).unwrap();
        let (c, _) = center(&ds);
        let ctilde = centroid_matrix(&c).data;
        let fitted = slce::fit(&ds, 1).unwrap();
        let best = centroid_cost(&ctilde, &fitted.basis, c.data()).unwrap();
        let grid_min = (0..10_000)
            .map(|i| {
                let theta = std::f64::consts::PI * i as f64 / 10_000.0;
                let a = DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()]);
                centroid_cost(&ctilde, &a, c.data()).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        worst_margin = worst_margin.min(grid_min - best);
        failures += usize::from(best > grid_min + 1e-9);
    }
    let elapsed = start.elapsed();
    verdict(
        failures == 0 && elapsed < Duration::from_secs(5),
        format!(
            "25 datasets x 10^4 directions in {:.2}s; {failures} above the grid minimum; smallest margin {worst_margin:.3e}",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Verdict {
    let mut r = rng(0x5eed_0003);
    let (mut worst_spec, mut worst_angle) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let d = r.random_range(3..=20);
        let n = r.random_range(10..=40);
        let base = random_dataset(&mut r, d, n, 1).unwrap();
        let ds = LabeledDataset::new(base.data().clone(), (0..n).collect()).unwrap();
        let k = d.min(n);
        let opts = SolverOptions::dense();
        let s = slce::fit_with(&ds, k, &opts).unwrap();
        let p = fit_pca_with(&ds, k, &opts).unwrap();
        let top = p.spectrum[0];
        for i in 0..k {
            worst_spec = worst_spec.max((s.spectrum[i] - p.spectrum[i]).abs() / top);
        }
        worst_angle = worst_angle.max(max_principal_angle(
            &s.basis.columns(0, 2).into_owned(),
            &p.basis.columns(0, 2).into_owned(),
        ));
    }
    verdict(
        worst_spec <= 1e-8 && worst_angle < 1e-6,
        format!("10 singleton-class datasets; worst spectrum gap {worst_spec:.1e} of λ_1, worst top-2 angle {worst_angle:.1e} rad"),
    )
}

fn criterion_4() -> Verdict {
    let mut r = rng(0x5eed_0004);
    let (mut worst_spec, mut worst_angle) = (0.0f64, 0.0f64);
    let mut compared = 0;
    for _ in 0..10 {
        let d = r.random_range(60..=200);
        let n = r.random_range(10..=30);
        let m = r.random_range(2..=5);
        let ds = random_dataset(&mut r, d, n, m).unwrap();
        let dense = slce::fit_with(&ds, d, &SolverOptions::dense()).unwrap();
        let reduced = slce::fit_with(&ds, d, &SolverOptions::reduced()).unwrap();
        let scale = dense.spectrum.amax();
        worst_spec = worst_spec.max((&dense.spectrum - &reduced.spectrum).amax() / scale);
        // The zero eigenvalue is repeated and its eigenvectors are not unique,
        // so subspaces are compared on the positive and negative blocks.
        let tol = positivity_tol(&dense.spectrum);
        let pos = dense.positive_count;
        let neg = dense.spectrum.iter().filter(|&&v| v < -tol).count();
        let block = |start: usize, len: usize| {
            max_principal_angle(
                &dense.basis.columns(start, len).into_owned(),
                &reduced.basis.columns(start, len).into_owned(),
            )
        };
        if pos > 0 && neg > 0 {
            compared += 1;
            worst_angle = worst_angle.max(block(0, pos)).max(block(d - neg, neg));
        }
    }
    verdict(
        worst_spec <= 1e-8 && worst_angle < 1e-6 && compared == 10,
        format!(
            "10 wide datasets (d up to 200); worst full-spectrum gap {worst_spec:.1e} relative, worst angle over the \
             positive and negative blocks {worst_angle:.1e} rad"
        ),
    )
}

fn criterion_5() -> Verdict {
    let sets = property_datasets();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for ds in &sets {
        let (c, _) = center(ds);
        let cm = centroid_matrix(&c);
        let mut weighted = DVector::zeros(ds.n_features());
        for j in 0..c.n_classes() {
            weighted += cm.centroids.column(j) * c.class_indices(j).len() as f64;
        }
        let bound = 1e-9 * ds.n_samples() as f64 * c.data().amax();
        worst = worst.max(weighted.norm() / bound);
        failures += usize::from(weighted.norm() > bound);
    }
    verdict(
        failures == 0,
        format!(
            "{} datasets; {failures} over the bound; largest norm is {worst:.1e} of the bound",
            sets.len()
        ),
    )
}

fn criterion_6() -> Verdict {
    let x = DMatrix::from_column_slice(2, 5, &[1.0, 2.0, 2.0, 0.0, 3.0, 4.0, 4.0, 6.0, 5.0, 9.0]);
    let ds = LabeledDataset::new(x, vec![0, 1, 0, 1, 0]).unwrap();
    let got = centroid_matrix(&ds).data;
    let (c1, c2) = ([3.0, 5.0], [3.0, 3.0]);
    let expected = DMatrix::from_column_slice(
        2,
        5,
        &[c1[0], c1[1], c2[0], c2[1], c1[0], c1[1], c2[0], c2[1], c1[0], c1[1]],
    );
    verdict(
        got == expected,
        format!(
            "columns {:?}",
            got.column_iter().map(|c| (c[0], c[1])).collect::<Vec<_>>()
        ),
    )
}

/// Repeatedly takes the unused point with the smallest distance (lowest index
/// on ties), then picks the most voted class, preferring the class that was
/// reached first.
fn brute_force_knn(train: &DMatrix<f64>, labels: &[usize], q: &[f64], k: usize) -> usize {
    let dist: Vec<f64> = (0..train.ncols())
        .map(|i| (0..q.len()).map(|r| (train[(r, i)] - q[r]).powi(2)).sum())
        .collect();
    let mut used = vec![false; dist.len()];
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..dist.len() {
            if !used[i] && best.is_none_or(|b| dist[i] < dist[b]) {
                best = Some(i);
            }
        }
        let b = best.unwrap();
        used[b] = true;
        picked.push(labels[b]);
    }
    let count = |c: usize| picked.iter().filter(|&&l| l == c).count();
    let top = picked.iter().map(|&c| count(c)).max().unwrap();
    *picked.iter().find(|&&c| count(c) == top).unwrap()
}

fn criterion_7() -> Verdict {
    let mut r = rng(0x5eed_0007);
    let mut mismatches = 0;
    let mut queries = 0;
    for instance in 0..50 {
        let p = r.random_range(1..=4);
        let n = r.random_range(1..=200);
        let m = r.random_range(1..=50);
        let classes = r.random_range(1..=6);
        let k = r.random_range(1..=n.min(9));
        // Half the instances use a small integer grid so that distance and
        // vote ties are frequent.
        let draw = |r: &mut ChaCha8Rng| {
            if instance % 2 == 0 {
                r.random_range(-3i32..=3) as f64
            } else {
                r.random_range(-1.0..1.0)
            }
        };
        let train = DMatrix::from_fn(p, n, |_, _| draw(&mut r));
        let query = DMatrix::from_fn(p, m, |_, _| draw(&mut r));
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..classes)).collect();
        let got = knn::knn_predict(&train, &labels, &query, k).unwrap();
        for (j, &g) in got.iter().enumerate() {
            let q: Vec<f64> = query.column(j).iter().copied().collect();
            mismatches += usize::from(g != brute_force_knn(&train, &labels, &q, k));
        }
        queries += m;
    }
    verdict(
        mismatches == 0,
        format!("50 instances, {queries} queries, {mismatches} disagreements"),
    )
}

fn criterion_8() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config = data_dir().join("iris_bench.toml");
    let mut reports = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("report{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_slce"))
            .args([
                "bench",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--jobs",
                "4",
            ])
            .output()
            .unwrap();
        if !status.status.success() {
            return Fail(format!(
                "bench exited with {:?}: {}",
                status.status.code(),
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        reports.push(std::fs::read(&out).unwrap());
    }
    verdict(
        reports[0] == reports[1],
        format!(
            "two `slce bench` runs on iris_bench.toml, {} bytes each",
            reports[0].len()
        ),
    )
}

fn iris() -> LabeledDataset {
    load_csv(data_dir().join("iris.csv"), &CsvOptions::default()).unwrap()
}

fn criterion_9() -> Verdict {
    let ds = iris();
    let keep: Vec<usize> = (0..ds.n_samples()).filter(|&i| ds.labels()[i] < 2).collect();
    let sub = ds.select(&keep).unwrap().select_features(&[0, 1]).unwrap();
    let pair = LabeledDataset::new(sub.data().clone(), sub.labels().to_vec()).unwrap();
    let (c, _) = center(&pair);
    let ctilde = centroid_matrix(&c).data;
    let model = slce::fit(&pair, 1).unwrap();
    let fitted = centroid_cost(&ctilde, &model.basis, c.data()).unwrap();
    let sampled: Vec<f64> = (0..360)
        .map(|i| {
            let theta = std::f64::consts::PI * i as f64 / 360.0;
            centroid_cost(
                &ctilde,
                &DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()]),
                c.data(),
            )
            .unwrap()
        })
        .collect();
    let beaten = sampled.iter().filter(|&&s| s < fitted).count();
    let best = sampled.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(
        beaten == 0,
        format!("fitted line cost {fitted:.6}, best of 360 sampled lines {best:.6}, {beaten} sampled lines lower"),
    )
}

fn env_path(var: &str) -> Option<PathBuf> {
    std::env::var_os(var).map(PathBuf::from).filter(|p| p.exists())
}

fn criterion_10() -> Verdict {
    let Some(path) = env_path("SLCE_ARCENE_CSV") else {
        return Skip("set SLCE_ARCENE_CSV to an Arcene CSV (label in the last column)".into());
    };
    let has_header = std::fs::read_to_string(&path)
        .ok()
        .and_then(|t| {
            t.lines()
                .next()
                .map(|l| l.split(',').next().is_some_and(|f| f.trim().parse::<f64>().is_err()))
        })
        .unwrap_or(true);
    let ds = match load_csv(
        &path,
        &CsvOptions {
            has_header,
            ..CsvOptions::default()
        },
    ) {
        Ok(ds) => ds,
        Err(e) => return Fail(format!("cannot load {}: {e}", path.display())),
    };
    let cfg = ExperimentConfig {
        methods: vec![Method::Slce],
        dims: vec![1, 2],
        repetitions: 25,
        split_ratio: 0.8,
        ..ExperimentConfig::for_dataset(&path)
    };
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = match run_experiment_with_data(&cfg, &ds, None, jobs) {
        Ok(r) => r,
        Err(e) => return Fail(format!("benchmark failed: {e}")),
    };
    let mean = |dim| report.cell(Method::Slce, dim).and_then(|c| c.mean).map(|m| 100.0 * m);
    match (mean(1), mean(2)) {
        (Some(one), Some(two)) => verdict(
            (two - 83.61).abs() <= 5.0 && (one - 83.12).abs() <= 7.0,
            format!("2-D {two:.2}% (target 83.61 ± 5), 1-D {one:.2}% (target 83.12 ± 7) over 25 splits"),
        ),
        _ => Fail("no SLCE accuracy recorded".into()),
    }
}

fn criterion_11() -> Verdict {
    let (Some(train_p), Some(test_p)) = (env_path("SLCE_MNIST_TRAIN_CSV"), env_path("SLCE_MNIST_TEST_CSV")) else {
        return Skip("set SLCE_MNIST_TRAIN_CSV and SLCE_MNIST_TEST_CSV (label in the last column)".into());
    };
    let load = |p: &Path| -> Result<LabeledDataset, String> {
        let all = load_csv(p, &CsvOptions::default()).map_err(|e| format!("{}: {e}", p.display()))?;
        let keep: Vec<usize> = (0..all.n_samples())
            .filter(|&i| ["4", "7", "9"].contains(&all.class_name(all.labels()[i])))
            .collect();
        let sub = all.select(&keep).map_err(|e| e.to_string())?;
        let names = vec!["4".to_string(), "7".to_string(), "9".to_string()];
        let tokens: Vec<usize> = sub
            .labels()
            .iter()
            .map(|&l| names.iter().position(|n| n == sub.class_name(l)).unwrap())
            .collect();
        LabeledDataset::new(sub.data().clone(), tokens)
            .and_then(|d| d.with_class_names(names))
            .map_err(|e| e.to_string())
    };
    let (train, test) = match (load(&train_p), load(&test_p)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Fail(e),
    };
    let separation = |model: slce_core::LinearReducer| -> Result<f64, String> {
        EmbeddingTable::build(&model, &train, Some(&test), 2)
            .and_then(|t| t.centroid_separation(Some(Partition::Test)))
            .map_err(|e| e.to_string())
    };
    let slce_sep = slce::fit(&train, 2)
        .map_err(|e| e.to_string())
        .and_then(|m| separation(m.to_reducer()));
    let pca_sep = slce_core::baselines::fit_pca(&train, 2)
        .map_err(|e| e.to_string())
        .and_then(separation);
    match (slce_sep, pca_sep) {
        (Ok(s), Ok(p)) => verdict(s > p, format!("test-set centroid separation: SLCE {s:.4}, PCA {p:.4}")),
        (Err(e), _) | (_, Err(e)) => Fail(e),
    }
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("property suite on 100 random datasets", criterion_1),
        ("1-D optimum against 10^4 grid directions", criterion_2),
        ("singleton classes reduce to PCA", criterion_3),
        ("reduced and dense solvers agree", criterion_4),
        ("weighted centroids sum to zero after centering", criterion_5),
        ("centroid matrix column pattern c1,c2,c1,c2,c1", criterion_6),
        ("k-NN matches a brute-force scan", criterion_7),
        ("bench reports are byte-identical", criterion_8),
        ("Iris fitted line beats 360 sampled lines", criterion_9),
        ("Arcene 5-NN accuracy (needs data)", criterion_10),
        ("MNIST 4/7/9 SLCE separates better than PCA (needs data)", criterion_11),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match v {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{tag} [{:>2}] {title} ({secs:.2}s): {detail}", i + 1);
    }
    println!("{} criteria, {failed} failed", criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
