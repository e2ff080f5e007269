use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use slce_core::harness::{emit_embedding, emit_spectrum_diagnostics};
use slce_core::{knn, load_csv, slce, CsvOptions, LinearReducer, SolverOptions};

fn iris_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv")
}

fn slce_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slce"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Compares against `tests/snapshots/<name>.txt`; `SLCE_UPDATE_SNAPSHOTS=1`
/// rewrites the file instead.
fn check_snapshot(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/snapshots")
        .join(format!("{name}.txt"));
    if std::env::var_os("SLCE_UPDATE_SNAPSHOTS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing snapshot {}", path.display()));
    assert_eq!(
        actual, expected,
        "help text for {name} changed; rerun with SLCE_UPDATE_SNAPSHOTS=1 if intended"
    );
}

#[test]
fn help_text_is_stable() {
    let top = slce_cmd(&["--help"]);
    assert!(top.status.success());
    check_snapshot("help", &String::from_utf8(top.stdout).unwrap());
    for sub in ["fit", "transform", "eval", "bench", "spectrum", "embed"] {
        let out = slce_cmd(&[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help");
        check_snapshot(&format!("help_{sub}"), &String::from_utf8(out.stdout).unwrap());
    }
}

#[test]
fn zero_dimension_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = slce_cmd(&[
        "fit",
        "--data",
        s(&iris_path()),
        "--dim",
        "0",
        "--out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k ≥ 1"));
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn unknown_flag_prints_usage_and_exits_1() {
    let out = slce_cmd(&["fit", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage:"));
    assert_eq!(slce_cmd(&[]).status.code(), Some(1));
}

#[test]
fn missing_or_malformed_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b,label\n1,2,x\n3,oops,y\n").unwrap();
    for data in [dir.path().join("absent.csv"), bad] {
        let out = slce_cmd(&[
            "fit",
            "--data",
            s(&data),
            "--dim",
            "1",
            "--out",
            s(&dir.path().join("m.json")),
        ]);
        assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let out = slce_cmd(&[
        "fit",
        "--method",
        "lda",
        "--data",
        s(&iris_path()),
        "--dim",
        "3",
        "--out",
        "x.json",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        format!(
            "dataset = {:?}\nmethods = [\"slce\", \"pca\", \"lda\", \"bair_spca\", \"hsic_spca\"]\n\
             dims = [1, 2, 3]\nrepetitions = 4\nbase_seed = 3\n",
            s(&iris_path())
        ),
    )
    .unwrap();
    let mut reports = Vec::new();
    for (i, jobs) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.json"));
        let csv = dir.path().join(format!("r{i}.csv"));
        let run = slce_cmd(&[
            "bench",
            "--config",
            s(&cfg),
            "--out",
            s(&out),
            "--csv",
            s(&csv),
            "--jobs",
            jobs,
        ]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        reports.push((std::fs::read(&out).unwrap(), std::fs::read(&csv).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
    let csv = String::from_utf8(reports[0].1.clone()).unwrap();
    assert_eq!(csv.lines().count(), 2 + 15);
}

#[test]
fn fit_then_transform_matches_library_embedding() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("m.json");
    let emb_path = dir.path().join("emb.csv");
    assert!(slce_cmd(&[
        "fit",
        "--method",
        "slce",
        "--data",
        s(&iris_path()),
        "--dim",
        "2",
        "--out",
        s(&model_path)
    ])
    .status
    .success());
    assert!(slce_cmd(&[
        "transform",
        "--model",
        s(&model_path),
        "--data",
        s(&iris_path()),
        "--out",
        s(&emb_path)
    ])
    .status
    .success());

    let iris = load_csv(iris_path(), &CsvOptions::default()).unwrap();
    let direct = slce::fit(&iris, 2).unwrap().to_reducer();
    assert_eq!(LinearReducer::load(&model_path).unwrap(), direct);
    let lib_path = dir.path().join("lib.csv");
    emit_embedding(&direct, &iris, None, 2, &lib_path, None).unwrap();
    assert_eq!(std::fs::read(&emb_path).unwrap(), std::fs::read(&lib_path).unwrap());
}

#[test]
fn eval_and_spectrum_agree_with_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let iris = load_csv(iris_path(), &CsvOptions::default()).unwrap();
    let pair = slce_core::split(&iris, 0.8, 5).unwrap();
    let write = |name: &str, ds: &slce_core::LabeledDataset| {
        let p = dir.path().join(name);
        let mut text = String::from("f1,f2,f3,f4,species\n");
        for (i, col) in ds.data().column_iter().enumerate() {
            let vals: Vec<String> = col.iter().map(f64::to_string).collect();
            text += &format!("{},{}\n", vals.join(","), ds.class_name(ds.labels()[i]));
        }
        std::fs::write(&p, text).unwrap();
        p
    };
    let (train_p, test_p) = (write("train.csv", &pair.train), write("test.csv", &pair.test));
    let model_p = dir.path().join("pca.json");
    let result_p = dir.path().join("eval.json");
    assert!(slce_cmd(&[
        "fit",
        "--method",
        "pca",
        "--data",
        s(&train_p),
        "--dim",
        "3",
        "--out",
        s(&model_p)
    ])
    .status
    .success());
    let out = slce_cmd(&[
        "eval",
        "--model",
        s(&model_p),
        "--train",
        s(&train_p),
        "--test",
        s(&test_p),
        "--dim",
        "2",
        "--out",
        s(&result_p),
    ]);
    assert!(out.status.success());

    let model = slce_core::baselines::fit_pca(&pair.train, 3).unwrap();
    let tr = model.transform_dim(pair.train.data(), 2).unwrap();
    let te = model.transform_dim(pair.test.data(), 2).unwrap();
    let expected = knn::evaluate(&tr, pair.train.labels(), &te, pair.test.labels(), 5)
        .unwrap()
        .accuracy;
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&result_p).unwrap()).unwrap();
    assert_eq!(doc["accuracy"].as_f64().unwrap(), expected);
    assert!(String::from_utf8_lossy(&out.stdout).contains(&format!("{expected:.4}")));

    let cli_spec = dir.path().join("spec_cli.csv");
    let lib_spec = dir.path().join("spec_lib.csv");
    assert!(
        slce_cmd(&["spectrum", "--data", s(&iris_path()), "--out", s(&cli_spec)])
            .status
            .success()
    );
    emit_spectrum_diagnostics(&iris, &lib_spec, None, &SolverOptions::default()).unwrap();
    assert_eq!(std::fs::read(&cli_spec).unwrap(), std::fs::read(&lib_spec).unwrap());
}

#[test]
fn embed_writes_train_and_test_rows_with_svg() {
    let dir = tempfile::tempdir().unwrap();
    let model_p = dir.path().join("m.json");
    assert!(
        slce_cmd(&["fit", "--data", s(&iris_path()), "--dim", "3", "--out", s(&model_p)])
            .status
            .success()
    );
    let (csv, svg) = (dir.path().join("t.csv"), dir.path().join("t.svg"));
    let out = slce_cmd(&[
        "embed",
        "--model",
        s(&model_p),
        "--train",
        s(&iris_path()),
        "--test",
        s(&iris_path()),
        "--dim",
        "3",
        "--out",
        s(&csv),
        "--svg",
        s(&svg),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().nth(1), Some("coord_1,coord_2,coord_3,label,partition"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",test")).count(), 150);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let four = slce_cmd(&[
        "embed",
        "--model",
        s(&model_p),
        "--train",
        s(&iris_path()),
        "--dim",
        "4",
        "--out",
        s(&csv),
    ]);
    assert_eq!(four.status.code(), Some(1));
}

#[test]
fn headerless_csv_with_named_options() {
    let dir = tempfile::tempdir().unwrap();
    let raw = std::fs::read_to_string(iris_path()).unwrap();
    let headerless = dir.path().join("nohead.csv");
    // Label moved to the front so `--label-col 0` is exercised too.
    let body: String = raw
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let (feats, label) = l.rsplit_once(',').unwrap();
            format!("{label},{feats}\n")
        })
        .collect();
    std::fs::write(&headerless, body).unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let out = slce_cmd(&[
        "fit",
        "--data",
        s(&headerless),
        "--header=false",
        "--label-col",
        "0",
        "--dim",
        "2",
        "--out",
        s(&a),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(
        slce_cmd(&["fit", "--data", s(&iris_path()), "--dim", "2", "--out", s(&b)])
            .status
            .success()
    );
    assert_eq!(LinearReducer::load(&a).unwrap(), LinearReducer::load(&b).unwrap());
}
