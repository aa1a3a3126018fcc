use rand::seq::SliceRandom;

use super::objective::{cofactor_objective, grmf_objective, grwmf_gradient, grwmf_objective};
use super::HyperParams;
use crate::data::{FeedbackMode, RatingsMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{dot, FactorTable};
use crate::model::{EpochRecord, FactorModel};
use crate::rng;

const STREAM_USERS: u64 = 1;
const STREAM_ITEMS: u64 = 2;
const STREAM_ORDER: u64 = 3;
const STREAM_PSEUDO: u64 = 4;
const STREAM_SIDE: u64 = 5;

/// `n_users` user rows followed by `extra` pseudo-node rows drawn from their
/// own stream, so the user rows do not depend on `extra`.
fn init_users(n_users: usize, extra: usize, hyper: &HyperParams) -> FactorTable {
    let std = 1.0 / (hyper.rank as f64).sqrt();
    let mut data = FactorTable::gaussian(n_users, hyper.rank, std, &mut rng::stream(hyper.seed, &[STREAM_USERS])).into_vec();
    data.extend(FactorTable::gaussian(extra, hyper.rank, std, &mut rng::stream(hyper.seed, &[STREAM_PSEUDO])).into_vec());
    FactorTable::from_vec(n_users + extra, hyper.rank, data)
}

fn init_table(rows: usize, tag: u64, hyper: &HyperParams) -> FactorTable {
    let std = 1.0 / (hyper.rank as f64).sqrt();
    FactorTable::gaussian(rows, hyper.rank, std, &mut rng::stream(hyper.seed, &[tag]))
}

fn stored_entries(r: &RatingsMatrix) -> Vec<(u32, u32, f64)> {
    r.all_triples().into_iter().map(|t| (t.user, t.item, t.rating)).collect()
}

fn train_rmse(r: &RatingsMatrix, u: &FactorTable, v: &FactorTable) -> f64 {
    let mut se = 0.0;
    for t in r.triples() {
        let e = t.rating - dot(u.row(t.user as usize), v.row(t.item as usize));
        se += e * e;
    }
    if r.nnz() == 0 {
        f64::NAN
    } else {
        (se / r.nnz() as f64).sqrt()
    }
}

/// One SGD problem: squared loss on the ratings (against `V`) and on an
/// optional side matrix (against `V'`), plus weighted graph edges on `U`.
struct Sgd<'a> {
    ratings: Vec<(u32, u32, f64)>,
    edges: Vec<(u32, u32, f64)>,
    side: Vec<(u32, u32, f64)>,
    mu: f64,
    lambda: f64,
    hyper: &'a HyperParams,
}

struct Factors {
    u: FactorTable,
    v: FactorTable,
    vs: FactorTable,
}

impl Sgd<'_> {
    /// Runs all epochs and returns the iterate with the lowest objective.
    fn run(&self, mut x: Factors, objective: impl Fn(&Factors) -> Result<f64>, rmse: impl Fn(&Factors) -> f64) -> Result<(Factors, Vec<EpochRecord>)> {
        let r = self.hyper.rank;
        let (nr, ne) = (self.ratings.len(), self.edges.len());
        let total = nr + ne + self.side.len();

        // The ℓ2 term of a row is shared evenly among the events touching it,
        // so one pass over all events follows the full objective's gradient.
        let mut touch_u = vec![0u32; x.u.rows()];
        let mut touch_v = vec![0u32; x.v.rows()];
        let mut touch_s = vec![0u32; x.vs.rows()];
        for &(i, j, _) in &self.ratings {
            touch_u[i as usize] += 1;
            touch_v[j as usize] += 1;
        }
        for &(a, b, _) in &self.edges {
            touch_u[a as usize] += 1;
            touch_u[b as usize] += 1;
        }
        for &(i, j, _) in &self.side {
            touch_u[i as usize] += 1;
            touch_s[j as usize] += 1;
        }
        let share = |t: &[u32]| -> Vec<f64> { t.iter().map(|&c| if c == 0 { 0.0 } else { self.lambda / c as f64 }).collect() };
        let (reg_u, reg_v, reg_s) = (share(&touch_u), share(&touch_v), share(&touch_s));

        let mut order: Vec<u32> = (0..total as u32).collect();
        let mut shuffle_rng = rng::stream(self.hyper.seed, &[STREAM_ORDER]);
        let mut log = Vec::with_capacity(self.hyper.epochs);
        let mut best: Option<(f64, Factors)> = None;
        let mut ui = vec![0.0; r];
        let mut step = self.hyper.step;

        for epoch in 0..self.hyper.epochs {
            order.shuffle(&mut shuffle_rng);
            for &ev in &order {
                let ev = ev as usize;
                if ev < nr || ev >= nr + ne {
                    let (i, j, y, w, reg_w) = if ev < nr {
                        let (i, j, y) = self.ratings[ev];
                        (i as usize, j as usize, y, &mut x.v, &reg_v)
                    } else {
                        let (i, j, y) = self.side[ev - nr - ne];
                        (i as usize, j as usize, y, &mut x.vs, &reg_s)
                    };
                    ui.copy_from_slice(x.u.row(i));
                    let wj = w.row_mut(j);
                    let e = y - dot(&ui, wj);
                    let (ru, rw) = (reg_u[i], reg_w[j]);
                    let urow = x.u.row_mut(i);
                    for t in 0..r {
                        let (a, b) = (ui[t], wj[t]);
                        urow[t] -= step * (-2.0 * e * b + ru * a);
                        wj[t] -= step * (-2.0 * e * a + rw * b);
                    }
                } else {
                    let (a, b, wt) = self.edges[ev - nr];
                    let (a, b) = (a as usize, b as usize);
                    ui.copy_from_slice(x.u.row(a));
                    let c = 2.0 * self.mu * wt;
                    let (ra, rb) = (reg_u[a], reg_u[b]);
                    for t in 0..r {
                        let ua = ui[t];
                        let ub = x.u.row(b)[t];
                        let d = c * (ua - ub);
                        x.u.row_mut(a)[t] -= step * (d + ra * ua);
                        x.u.row_mut(b)[t] -= step * (-d + rb * ub);
                    }
                }
            }
            step *= self.hyper.decay;

            let f = objective(&x)?;
            if !f.is_finite() {
                return Err(Error::Divergence { epoch, value: f });
            }
            log.push(EpochRecord {
                epoch,
                objective: f,
                metrics: vec![rmse(&x)],
            });
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((
                    f,
                    Factors {
                        u: x.u.clone(),
                        v: x.v.clone(),
                        vs: x.vs.clone(),
                    },
                ));
            }
        }
        Ok((best.map_or(x, |(_, b)| b), log))
    }
}

fn finish(algorithm: &str, mode: FeedbackMode, n_users: usize, x: Factors, hyper: &HyperParams, log: Vec<EpochRecord>) -> Result<FactorModel> {
    // Pseudo-node rows are dropped: only real users are ever scored.
    let mut model = FactorModel::new(algorithm, mode, x.u.truncated(n_users), x.v)?;
    hyper.record(&mut model);
    if log.first().is_some_and(|r| !r.metrics.is_empty()) {
        model.log_columns = vec!["train_rmse".into()];
    }
    model.log = log;
    Ok(model)
}

/// Plain ℓ2-regularized matrix factorization by SGD.
pub fn mf_train(train: &RatingsMatrix, hyper: &HyperParams) -> Result<FactorModel> {
    let plain = HyperParams { mu: 0.0, ..hyper.clone() };
    let mut model = grmf_train(train, &Graph::empty(train.n_users()), &plain)?;
    model.algorithm = "mf".into();
    Ok(model)
}

/// Graph-regularized MF by SGD over ratings and graph edges, shuffled
/// together each epoch. `g` may be an augmented graph with more nodes than
/// users; the extra rows are trained and then discarded.
pub fn grmf_train(train: &RatingsMatrix, g: &Graph, hyper: &HyperParams) -> Result<FactorModel> {
    hyper.validate()?;
    let n = train.n_users();
    if g.n() < n {
        return Err(Error::Dimension(format!("graph has {} nodes but there are {n} users", g.n())));
    }
    let x = Factors {
        u: init_users(n, g.n() - n, hyper),
        v: init_table(train.n_items(), STREAM_ITEMS, hyper),
        vs: FactorTable::zeros(0, hyper.rank),
    };
    let sgd = Sgd {
        ratings: stored_entries(train),
        edges: if hyper.mu > 0.0 { g.edges().collect() } else { Vec::new() },
        side: Vec::new(),
        mu: hyper.mu,
        lambda: hyper.lambda,
        hyper,
    };
    let (x, log) = sgd.run(
        x,
        |x| grmf_objective(train, &x.u, &x.v, g, hyper.lambda, hyper.mu),
        |x| train_rmse(train, &x.u, &x.v),
    )?;
    finish("grmf", train.mode(), n, x, hyper, log)
}

/// Co-Factor: the ratings and a side matrix (graph adjacency or DNA bits)
/// share the user factors. Trained by SGD over the union of both entry sets.
pub fn cofactor_train(train: &RatingsMatrix, side: &RatingsMatrix, hyper: &HyperParams) -> Result<FactorModel> {
    hyper.validate()?;
    let n = train.n_users();
    if side.n_users() > n {
        return Err(Error::Dimension(format!("side matrix has {} rows but there are {n} users", side.n_users())));
    }
    let x = Factors {
        u: init_users(n, 0, hyper),
        v: init_table(train.n_items(), STREAM_ITEMS, hyper),
        vs: init_table(side.n_items(), STREAM_SIDE, hyper),
    };
    let sgd = Sgd {
        ratings: stored_entries(train),
        edges: Vec::new(),
        side: stored_entries(side),
        mu: 0.0,
        lambda: hyper.lambda,
        hyper,
    };
    let (x, log) = sgd.run(
        x,
        |x| cofactor_objective(train, side, &x.u, &x.v, &x.vs, hyper.lambda),
        |x| train_rmse(train, &x.u, &x.v),
    )?;
    let vs = x.vs.clone();
    let mut model = finish("cofactor", train.mode(), n, x, hyper, log)?;
    model.side = Some(vs);
    Ok(model)
}

/// Graph-regularized weighted MF on implicit feedback by full-batch gradient
/// descent. The step halves whenever it fails to decrease the objective
/// sufficiently and doubles after each accepted step.
pub fn grwmf_train(train: &RatingsMatrix, g: &Graph, hyper: &HyperParams) -> Result<FactorModel> {
    hyper.validate()?;
    let n = train.n_users();
    if g.n() < n {
        return Err(Error::Dimension(format!("graph has {} nodes but there are {n} users", g.n())));
    }
    let (lambda, mu, rho) = (hyper.lambda, hyper.mu, hyper.rho_zero);
    let mut u = init_users(n, g.n() - n, hyper);
    let mut v = init_table(train.n_items(), STREAM_ITEMS, hyper);
    let mut f = grwmf_objective(train, &u, &v, g, lambda, mu, rho)?;
    let mut step = hyper.step;
    let mut log = Vec::with_capacity(hyper.epochs);
    for epoch in 0..hyper.epochs {
        let (gu, gv) = grwmf_gradient(train, &u, &v, g, lambda, mu, rho)?;
        let gnorm = gu.frobenius_sq() + gv.frobenius_sq();
        if !gnorm.is_finite() {
            return Err(Error::Divergence { epoch, value: gnorm });
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut u2 = u.clone();
            let mut v2 = v.clone();
            u2.axpy(-step, &gu);
            v2.axpy(-step, &gv);
            let f2 = grwmf_objective(train, &u2, &v2, g, lambda, mu, rho)?;
            if f2.is_finite() && f2 <= f - 1e-4 * step * gnorm {
                (u, v, f) = (u2, v2, f2);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        log.push(EpochRecord {
            epoch,
            objective: f,
            metrics: Vec::new(),
        });
        if !accepted {
            break;
        }
        step *= 2.0;
    }
    let x = Factors {
        u,
        v,
        vs: FactorTable::zeros(0, hyper.rank),
    };
    finish("grwmf", train.mode(), n, x, hyper, log)
}
