use std::path::Path;

use cfrank::bench::{self, BenchGrid, BenchKernel};
use cfrank::bloom::{augment_graph, bipartite_view, bloom_params, dna_encode, DnaEncoding};
use cfrank::config::RunConfig;
use cfrank::data::{binarize, generate_synthetic, load_ratings, split_fixed_count, split_fraction, FeedbackMode, SyntheticSpec};
use cfrank::graph::Graph;
use cfrank::metrics::{self, MetricReport};
use cfrank::mf::{self, HyperParams};
use cfrank::model::FactorModel;
use cfrank::primal_cr::{self, CrHyper, Variant};
use cfrank::sql_rank::{self, ListHyper};

use crate::dataset::{self, identity_ids};
use crate::error::{usage, Result};
use crate::settings::{create, create_dir, open, Settings};

pub fn split(s: &Settings) -> Result<()> {
    let input = s.required_path("ratings")?;
    let out = s.required_path("out")?;
    let mode: FeedbackMode = s.or("mode", FeedbackMode::Explicit)?;
    let seed = s.seed()?;
    let threshold: Option<u8> = s.get("binarize")?;
    let (mut ratings, ids) = load_ratings(open(&input)?, if threshold.is_some() { FeedbackMode::Explicit } else { mode })?;
    if let Some(t) = threshold {
        ratings = binarize(&ratings, t)?;
    }
    let split = match s.get::<usize>("n-train")? {
        Some(n) => split_fixed_count(&ratings, n, s.or("min-test", 10)?, seed)?,
        None => split_fraction(&ratings, s.or("test-frac", 0.2)?, seed)?,
    };
    let mut buf = Vec::new();
    split.write_manifest(&mut buf)?;
    let mut manifest = RunConfig::read(buf.as_slice())?;
    manifest.set("mode", ratings.mode());
    manifest.set("source", input.display());
    dataset::save(&out, &split.train, &split.test, &ids, &manifest)?;
    log::info!(
        "split {}: {} train / {} test ratings -> {}",
        input.display(),
        split.train.nnz(),
        split.test.nnz(),
        out.display()
    );
    Ok(())
}

pub fn synth(s: &Settings) -> Result<()> {
    let out = s.required_path("out")?;
    let d = SyntheticSpec::paper_scale();
    let spec = SyntheticSpec {
        n_users: s.or("users", d.n_users)?,
        n_items: s.or("items", d.n_items)?,
        rank: s.or("rank", d.rank)?,
        influence_weight: s.or("influence", d.influence_weight)?,
        propagation_steps: s.or("steps", d.propagation_steps)?,
        edge_prob: s.or("edge-prob", d.edge_prob)?,
        train_frac: s.or("train-frac", d.train_frac)?,
        test_frac: s.or("test-frac", d.test_frac)?,
    };
    let seed = s.seed()?;
    let data = generate_synthetic(&spec, seed)?;
    let ids = identity_ids(spec.n_users, spec.n_items);
    let mut manifest = RunConfig::new();
    manifest.set("mode", FeedbackMode::Explicit);
    manifest.set("seed", seed);
    manifest.set("users", spec.n_users);
    manifest.set("items", spec.n_items);
    manifest.set("rank", spec.rank);
    manifest.set("influence", spec.influence_weight);
    manifest.set("steps", spec.propagation_steps);
    manifest.set("edge-prob", spec.edge_prob);
    manifest.set("train_nnz", data.train.nnz());
    manifest.set("test_nnz", data.test.nnz());
    dataset::save(&out, &data.train, &data.test, &ids, &manifest)?;
    data.graph.write(create(&out.join("graph.txt"))?, None)?;
    log::info!(
        "synthetic data: {} train, {} test ratings, {} graph edges -> {}",
        data.train.nnz(),
        data.test.nnz(),
        data.graph.n_edges(),
        out.display()
    );
    Ok(())
}

/// Bit and hash counts from explicit `c`/`k` or from capacity and fp-rate.
fn encoding_size(s: &Settings) -> Result<(usize, usize, Option<usize>)> {
    let capacity: Option<usize> = s.get("capacity")?;
    let (c, k): (Option<usize>, Option<usize>) = (s.get("c")?, s.get("k")?);
    match (capacity, c) {
        (Some(_), Some(_)) => Err(usage("give either --capacity or --c, not both")),
        (Some(cap), None) => {
            let (c, k_formula) = bloom_params(cap, s.or("fp-rate", 0.1)?)?;
            Ok((c, k.unwrap_or(k_formula), Some(cap)))
        }
        (None, Some(c)) => Ok((c, k.ok_or_else(|| usage("--c needs --k"))?, None)),
        (None, None) => Err(usage("one of --capacity or --c is required")),
    }
}

pub fn encode(s: &Settings) -> Result<()> {
    let graph_path = s.required_path("graph")?;
    let out = s.required_path("out")?;
    let (c, k, capacity) = encoding_size(s)?;
    let depth = s.or("depth", 3)?;
    let theta = s.or("theta", capacity.map_or(f64::INFINITY, |cap| cap as f64))?;
    let ids = match s.path("data") {
        Some(dir) => Some(dataset::load(&dir, None)?.ids.users),
        None => None,
    };
    let graph = dataset::load_graph(&graph_path, ids.as_ref())?;
    let enc = dna_encode(&graph, c, k, depth, theta, s.seed()?)?;
    enc.write(create(&out)?)?;
    log::info!(
        "encoded {} nodes with c={c}, k={k}, d={depth}, theta={theta}: {} set bits -> {}",
        graph.n(),
        enc.nnz(),
        out.display()
    );
    Ok(())
}

fn read_encoding(path: &Path, n_users: usize) -> Result<DnaEncoding> {
    let enc = DnaEncoding::read(open(path)?)?;
    if enc.n() != n_users {
        return Err(cfrank::Error::Dimension(format!("encoding has {} rows, dataset has {n_users} users", enc.n())).into());
    }
    Ok(enc)
}

const ALGORITHMS: &str = "mf, grmf, grwmf, cofactor, primal-cr, primal-crpp, sql-rank";

pub fn train(s: &Settings) -> Result<()> {
    let algorithm: String = s.required("algorithm")?;
    if !ALGORITHMS.split(", ").any(|a| a == algorithm) {
        return Err(usage(format!("unknown algorithm '{algorithm}' (expected one of {ALGORITHMS})")));
    }
    let data_dir = s.required_path("data")?;
    let out = s.required_path("out")?;
    let (graph_path, enc_path) = (s.path("graph"), s.path("encoding"));
    let needs_graph = matches!(algorithm.as_str(), "grmf" | "grwmf" | "cofactor");
    if needs_graph && graph_path.is_none() && enc_path.is_none() {
        return Err(usage(format!("{algorithm} needs --graph or --encoding")));
    }
    let data = dataset::load(&data_dir, s.get("mode")?)?;
    let (train, n) = (&data.train, data.train.n_users());
    let seed = s.seed()?;
    let graph = graph_path.map(|p| dataset::load_graph(&p, Some(&data.ids.users))).transpose()?;
    let enc = enc_path.map(|p| read_encoding(&p, n)).transpose()?;

    let model = match algorithm.as_str() {
        "mf" | "grmf" | "grwmf" | "cofactor" => {
            let d = HyperParams::default();
            let hyper = HyperParams {
                lambda: s.or("lambda", d.lambda)?,
                mu: s.or("mu", d.mu)?,
                rho_zero: s.or("rho-zero", d.rho_zero)?,
                rank: s.or("rank", d.rank)?,
                step: s.or("step", d.step)?,
                decay: s.or("decay", d.decay)?,
                epochs: s.or("epochs", d.epochs)?,
                seed,
            };
            hyper.validate()?;
            let regularizer = || -> Result<Graph> {
                let base = graph.clone().unwrap_or_else(|| Graph::empty(n));
                Ok(match &enc {
                    Some(b) => augment_graph(&base, b)?,
                    None => base,
                })
            };
            match algorithm.as_str() {
                "mf" => mf::mf_train(train, &hyper)?,
                "grmf" => mf::grmf_train(train, &regularizer()?, &hyper)?,
                "grwmf" => mf::grwmf_train(train, &regularizer()?, &hyper)?,
                _ => {
                    let side = match (&enc, &graph) {
                        (Some(b), _) => bipartite_view(b),
                        (None, Some(g)) => mf::graph_side_matrix(g),
                        (None, None) => unreachable!("checked above"),
                    };
                    mf::cofactor_train(train, &side, &hyper)?
                }
            }
        }
        "primal-cr" | "primal-crpp" => {
            let d = CrHyper::default();
            let hyper = CrHyper {
                lambda: s.or("lambda", d.lambda)?,
                rank: s.or("rank", d.rank)?,
                outer_iters: s.or("outer-iters", d.outer_iters)?,
                tol: s.or("tol", d.tol)?,
                cg_max_iter: s.or("cg-max-iter", d.cg_max_iter)?,
                cg_tol: s.or("cg-tol", d.cg_tol)?,
                u_newton_steps: s.or("u-newton-steps", d.u_newton_steps)?,
                seed,
                ..d
            };
            let variant: Variant = algorithm.parse()?;
            primal_cr::train_primal_cr(train, &hyper, variant, data.test.as_ref())?
        }
        _ => {
            let d = ListHyper::default();
            let hyper = ListHyper {
                lambda: s.or("lambda", d.lambda)?,
                rank: s.or("rank", d.rank)?,
                k: s.get("list-k")?,
                rho_neg: s.or("rho-neg", d.rho_neg)?,
                step: s.or("step", d.step)?,
                decay: s.or("decay", d.decay)?,
                epochs: s.or("epochs", d.epochs)?,
                seed,
                queuing: s.or("queuing", d.queuing)?,
            };
            sql_rank::train_sql_rank(train, &hyper, data.test.as_ref())?
        }
    };
    if let Some(last) = model.log.last() {
        log::info!("{algorithm}: {} epochs, final objective {}", model.log.len(), last.objective);
    }
    create_dir(&out)?;
    model.write(create(&out.join("model.txt"))?)?;
    model.write_log(create(&out.join("log.tsv"))?)?;
    s.0.write(create(&out.join("config.txt"))?)?;
    log::info!("wrote {}", out.display());
    Ok(())
}

fn read_model(path: &Path) -> Result<FactorModel> {
    Ok(FactorModel::read(open(path)?)?)
}

/// Records `value` unless the metric is undefined on this data.
fn record(report: &mut MetricReport, name: &str, k: Option<usize>, value: cfrank::Result<f64>) -> Result<()> {
    match value {
        Ok(v) => report.push(name, k, v),
        Err(cfrank::Error::UndefinedMetric(why)) => log::warn!("{name}: {why}"),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

pub fn eval(s: &Settings) -> Result<()> {
    let model_path = s.required_path("model")?;
    let data_dir = s.required_path("data")?;
    let model = read_model(&model_path)?;
    let data = dataset::load(&data_dir, Some(model.mode))?;
    let test = data
        .test
        .ok_or_else(|| usage(format!("{} has no test.txt", data_dir.display())))?;
    let train = &data.train;
    if model.n_users() != train.n_users() || model.n_items() != train.n_items() {
        return Err(cfrank::Error::Dimension(format!(
            "model is {}x{}, dataset is {}x{}",
            model.n_users(),
            model.n_items(),
            train.n_users(),
            train.n_items()
        ))
        .into());
    }
    let ks: Vec<usize> = s.list("ks", "1,5,10")?;
    let mut report = MetricReport::default();
    match model.mode {
        FeedbackMode::Explicit => {
            let relevance = s.or("relevance", 4)?;
            record(&mut report, "rmse", None, metrics::rmse(&model, &test))?;
            // NDCG gains and the relevance threshold assume whole rating
            // levels; real-valued ratings (synthetic data) get neither.
            if test.levels().is_none() {
                log::info!("test ratings are not whole levels: skipping ndcg and precision");
            }
            for &k in ks.iter().filter(|_| test.levels().is_some()) {
                record(&mut report, "ndcg", Some(k), metrics::ndcg_at_k(&model, &test, k))?;
                record(
                    &mut report,
                    "precision",
                    Some(k),
                    metrics::precision_at_k_explicit(&model, train, &test, k, relevance),
                )?;
            }
            record(&mut report, "pairwise_error", None, metrics::pairwise_error(&model, &test))?;
        }
        FeedbackMode::Implicit => {
            for &k in &ks {
                record(&mut report, "precision", Some(k), metrics::precision_at_k_implicit(&model, train, &test, k))?;
                record(&mut report, "recall", Some(k), metrics::recall_at_k(&model, train, &test, k))?;
                record(&mut report, "ndcg", Some(k), metrics::ndcg_at_k(&model, &test, k))?;
            }
            record(&mut report, "map", None, metrics::map_score(&model, train, &test))?;
            record(&mut report, "hlu", None, metrics::hlu(&model, train, &test, s.or("halflife", 5.0)?, 0.0))?;
        }
    }
    match (s.path("baseline-model"), s.path("graph-model")) {
        (Some(b), Some(g)) => {
            let no_graph = metrics::rmse(&read_model(&b)?, &test)?;
            let with_g = metrics::rmse(&read_model(&g)?, &test)?;
            let with_x = metrics::rmse(&model, &test)?;
            record(&mut report, "rgg", None, mf::rgg(no_graph, with_g, with_x))?;
        }
        (None, None) => {}
        _ => return Err(usage("RGG needs both --baseline-model and --graph-model")),
    }
    // Without --out the report goes to stdout.
    match s.path("out") {
        Some(out) => {
            report.write(create(&out)?)?;
            log::info!("wrote {} metrics to {}", report.entries.len(), out.display());
        }
        None => report.write(std::io::stdout().lock())?,
    }
    Ok(())
}

pub fn bench(s: &Settings) -> Result<()> {
    let out = s.required_path("out")?;
    let d = BenchGrid::default();
    let grid = BenchGrid {
        n_users: s.or("users", d.n_users)?,
        rank: s.or("rank", d.rank)?,
        per_user: s.list("grid", "50,100,200,400")?,
        levels: s.or("levels", d.levels)?,
        reps: s.or("reps", d.reps)?,
        hessvecs: s.or("hessvecs", d.hessvecs)?,
        kernels: s
            .list::<String>("kernels", "crpp,naive")?
            .iter()
            .map(|k| k.parse::<BenchKernel>())
            .collect::<cfrank::Result<_>>()?,
        seed: s.seed()?,
    };
    let cells = bench::run_bench(&grid)?;
    bench::write_bench(&cells, create(&out)?)?;
    for k in &grid.kernels {
        if let Some(slope) = bench::kernel_slope(&cells, *k) {
            log::info!("{k}: log-log slope {slope:.3} of epoch time against ratings");
        }
    }
    Ok(())
}
