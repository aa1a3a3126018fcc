use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cfrank::config::RunConfig;
use cfrank::model::{EpochRecord, FactorModel};

fn cfrank(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cfrank"));
    cmd.args(args).env("RUST_LOG", "warn");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(args: &[&str]) {
    let out = cfrank(args, &[]);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(args: &[&str]) -> i32 {
    cfrank(args, &[]).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// 30 users × 25 items, 5 rating levels, deterministic pattern.
fn write_ratings(dir: &Path) -> PathBuf {
    let mut text = String::from("# user item rating\n");
    for u in 0..30u32 {
        for j in 0..25u32 {
            if (u * 7 + j * 3) % 4 != 0 {
                let r = 1 + (u * j + u / 3 + j) % 5;
                text.push_str(&format!("{}\t{}\t{}\n", 100 + u, 5000 + 2 * j, r));
            }
        }
    }
    let path = dir.join("ratings.tsv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["train", "--algorithm", "svd", "--data", "x", "--out", "y"]), 1);
    assert_eq!(code(&["split", "--out", "y"]), 1);
    assert_eq!(code(&["train", "--algorithm", "grmf", "--data", "x", "--out", "y"]), 1);
}

#[test]
fn missing_files_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    assert_eq!(code(&["encode", "--graph", p(&missing), "--capacity", "10", "--out", p(&dir.path().join("e"))]), 2);
    assert_eq!(code(&["eval", "--model", p(&missing), "--data", p(dir.path()), "--out", p(&dir.path().join("r"))]), 2);
}

#[test]
fn split_train_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ratings = write_ratings(d);
    let data = d.join("data");
    ok(&["split", "--ratings", p(&ratings), "--test-frac", "0.25", "--seed", "3", "--out", p(&data)]);
    for f in ["train.txt", "test.txt", "users.ids", "items.ids", "manifest.txt"] {
        assert!(data.join(f).exists(), "{f}");
    }
    let run = d.join("run");
    ok(&["train", "--algorithm", "primal-crpp", "--data", p(&data), "--rank", "4", "--outer-iters", "3", "--out", p(&run)]);

    let model = FactorModel::read(fs::read_to_string(run.join("model.txt")).unwrap().as_bytes()).unwrap();
    assert_eq!(model.algorithm, "primal-crpp");
    let log = fs::read_to_string(run.join("log.tsv")).unwrap();
    let records: Vec<EpochRecord> = log.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert!(!records.is_empty() && records.len() <= 3);
    assert!(records.iter().all(|r| r.metrics.len() == 2));

    let (r1, r2) = (d.join("r1.tsv"), d.join("r2.tsv"));
    ok(&["eval", "--model", p(&run.join("model.txt")), "--data", p(&data), "--out", p(&r1)]);
    ok(&["eval", "--model", p(&run.join("model.txt")), "--data", p(&data), "--out", p(&r2)]);
    let report = fs::read_to_string(&r1).unwrap();
    assert_eq!(report, fs::read_to_string(&r2).unwrap());
    for metric in ["rmse\t-", "ndcg\t10", "precision\t1", "pairwise_error\t-"] {
        assert!(report.contains(metric), "{metric} missing from\n{report}");
    }
}

#[test]
fn implicit_split_and_listwise_training() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ratings = write_ratings(d);
    let data = d.join("data");
    ok(&["split", "--ratings", p(&ratings), "--binarize", "4", "--n-train", "5", "--min-test", "2", "--out", p(&data)]);
    let manifest = RunConfig::read(fs::read(data.join("manifest.txt")).unwrap().as_slice()).unwrap();
    assert_eq!(manifest.get("mode"), Some("implicit"));
    let run = d.join("run");
    ok(&["train", "--algorithm", "sql-rank", "--data", p(&data), "--rank", "3", "--epochs", "5", "--out", p(&run)]);
    let report = d.join("r.tsv");
    ok(&["eval", "--model", p(&run.join("model.txt")), "--data", p(&data), "--ks", "1,3", "--out", p(&report)]);
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("map\t-") && text.contains("recall\t3"), "{text}");
}

#[test]
fn synthetic_graph_encoding_and_rgg() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (a, b) = (d.join("a"), d.join("b"));
    let synth = |out: &Path| {
        ok(&[
            "synth", "--users", "60", "--items", "20", "--rank", "3", "--edge-prob", "0.05", "--train-frac", "0.3",
            "--test-frac", "0.1", "--seed", "5", "--out", p(out),
        ])
    };
    synth(&a);
    synth(&b);
    for f in ["train.txt", "test.txt", "graph.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    let enc = d.join("dna.txt");
    ok(&["encode", "--graph", p(&a.join("graph.txt")), "--data", p(&a), "--capacity", "10", "--depth", "2", "--out", p(&enc)]);
    let header = fs::read_to_string(&enc).unwrap();
    assert!(header.lines().nth(1).unwrap().contains("c=48 k=3"), "{header}");
    let explicit = d.join("dna2.txt");
    ok(&["encode", "--graph", p(&a.join("graph.txt")), "--c", "96", "--k", "2", "--out", p(&explicit)]);
    assert!(fs::read_to_string(&explicit).unwrap().lines().nth(1).unwrap().contains("c=96 k=2"));

    let train = |alg: &str, extra: &[&str], out: &str| {
        let mut args = vec!["train", "--algorithm", alg, "--data", p(&a), "--rank", "3", "--epochs", "5", "--out"];
        let out = d.join(out);
        args.push(p(&out));
        args.extend_from_slice(extra);
        ok(&args);
        out.join("model.txt")
    };
    let mf = train("mf", &[], "mf");
    let graph_arg = a.join("graph.txt");
    let grmf = train("grmf", &["--graph", p(&graph_arg)], "grmf");
    let dna = train("grmf", &["--graph", p(&graph_arg), "--encoding", p(&enc)], "dna");
    train("cofactor", &["--encoding", p(&enc)], "cofactor");
    let report = d.join("rgg.tsv");
    ok(&[
        "eval", "--model", p(&dna), "--baseline-model", p(&mf), "--graph-model", p(&grmf), "--data", p(&a), "--out",
        p(&report),
    ]);
    assert!(fs::read_to_string(&report).unwrap().contains("rgg\t-\t"));
}

#[test]
fn flags_override_env_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data");
    ok(&["split", "--ratings", p(&write_ratings(d)), "--out", p(&data)]);
    let cfg = d.join("run.cfg");
    fs::write(&cfg, format!("algorithm=mf\ndata={}\nrank=3\nepochs=2\nlambda=0.5\n", p(&data))).unwrap();
    let rank_of = |args: &[&str], env: &[(&str, &str)], out: &str| {
        let out = d.join(out);
        let mut full = vec!["--config", p(&cfg), "train", "--out", p(&out)];
        full.extend_from_slice(args);
        let o = cfrank(&full, env);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let saved = RunConfig::read(fs::read(out.join("config.txt")).unwrap().as_slice()).unwrap();
        assert_eq!(saved.get("lambda"), Some("0.5"));
        let model = FactorModel::read(fs::read(out.join("model.txt")).unwrap().as_slice()).unwrap();
        assert_eq!(saved.get("rank").unwrap().parse::<usize>().unwrap(), model.rank());
        model.rank()
    };
    assert_eq!(rank_of(&[], &[], "a"), 3);
    assert_eq!(rank_of(&[], &[("CFRANK_RANK", "4")], "b"), 4);
    assert_eq!(rank_of(&["--rank", "5"], &[("CFRANK_RANK", "4")], "c"), 5);

    fs::write(&cfg, "rnak=3\n").unwrap();
    assert_eq!(cfrank(&["--config", p(&cfg), "train", "--out", p(&d.join("z"))], &[]).status.code(), Some(1));
}

#[test]
fn bench_single_cell_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.tsv");
    ok(&["bench", "--users", "10", "--rank", "2", "--grid", "8", "--reps", "1", "--kernels", "crpp", "--out", p(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2, "{text}");
    assert!(rows[1].starts_with("crpp\t8\t80\t"));
    assert_eq!(code(&["bench", "--kernels", "fast", "--out", p(&out)]), 1);
}
