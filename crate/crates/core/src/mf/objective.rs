use crate::data::{FeedbackMode, RatingsMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{axpy, dot, symv, FactorTable};
use crate::par;

fn check_dims(r: &RatingsMatrix, u: &FactorTable, v: &FactorTable, g: &Graph) -> Result<()> {
    if u.rank() != v.rank() {
        return Err(Error::Dimension(format!("U has rank {}, V has rank {}", u.rank(), v.rank())));
    }
    if u.rows() < r.n_users() || v.rows() != r.n_items() {
        return Err(Error::Dimension(format!(
            "factors {}x{} do not cover a {}x{} ratings matrix",
            u.rows(),
            v.rows(),
            r.n_users(),
            r.n_items()
        )));
    }
    if g.n() != u.rows() {
        return Err(Error::Dimension(format!("graph has {} nodes, U has {} rows", g.n(), u.rows())));
    }
    Ok(())
}

/// Every stored entry of user `i`, observed zeros included.
fn entries(r: &RatingsMatrix, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    let (items, vals) = r.user(i);
    items
        .iter()
        .zip(vals)
        .map(|(&j, &x)| (j as usize, x))
        .chain(r.observed_zeros(i).iter().map(|&j| (j as usize, 0.0)))
}

fn regularizer(lambda: f64, u: &FactorTable, v: &FactorTable) -> f64 {
    0.5 * lambda * (u.frobenius_sq() + v.frobenius_sq())
}

/// `Σ_Ω (R_ij − u_i·v_j)² + (λ/2)(‖U‖² + ‖V‖²) + μ Σ_{edges} w‖u_a − u_b‖²`.
///
/// `U` may carry extra rows beyond the users of `R` (pseudo-nodes of an
/// augmented graph); they enter the regularizers only.
pub fn grmf_objective(
    r: &RatingsMatrix,
    u: &FactorTable,
    v: &FactorTable,
    g: &Graph,
    lambda: f64,
    mu: f64,
) -> Result<f64> {
    check_dims(r, u, v, g)?;
    let data = par::sum(r.n_users(), |i| {
        entries(r, i)
            .map(|(j, x)| {
                let e = x - dot(u.row(i), v.row(j));
                e * e
            })
            .sum()
    });
    Ok(data + regularizer(lambda, u, v) + mu * g.laplacian_quadratic(u))
}

/// Gradients of [`grmf_objective`] in `U` and `V`.
pub fn grmf_gradient(
    r: &RatingsMatrix,
    u: &FactorTable,
    v: &FactorTable,
    g: &Graph,
    lambda: f64,
    mu: f64,
) -> Result<(FactorTable, FactorTable)> {
    check_dims(r, u, v, g)?;
    let mut gu = FactorTable::zeros(u.rows(), u.rank());
    let mut gv = FactorTable::zeros(v.rows(), v.rank());
    for i in 0..r.n_users() {
        for (j, x) in entries(r, i) {
            let e = x - dot(u.row(i), v.row(j));
            axpy(-2.0 * e, v.row(j), gu.row_mut(i));
            axpy(-2.0 * e, u.row(i), gv.row_mut(j));
        }
    }
    gu.axpy(lambda, u);
    gv.axpy(lambda, v);
    g.add_laplacian_product(u, 2.0 * mu, &mut gu);
    Ok((gu, gv))
}

fn require_implicit(r: &RatingsMatrix) -> Result<()> {
    if r.mode() != FeedbackMode::Implicit {
        return Err(Error::Config("weighted factorization needs implicit feedback".into()));
    }
    Ok(())
}

/// Weighted implicit objective
/// `Σ_{R=1}(1 − u_i·v_j)² + ρ Σ_{R=0}(u_i·v_j)² + regularizers + graph term`,
/// where every cell that is not a 1 counts as a zero. The zero sum is
/// `Σ_i u_iᵀ(VᵀV)u_i − Σ_{R=1}(u_i·v_j)²`, so the cost is O((nnz + n·r)·r).
pub fn grwmf_objective(
    r: &RatingsMatrix,
    u: &FactorTable,
    v: &FactorTable,
    g: &Graph,
    lambda: f64,
    mu: f64,
    rho: f64,
) -> Result<f64> {
    require_implicit(r)?;
    check_dims(r, u, v, g)?;
    let gram = v.gram(v.rows());
    let k = u.rank();
    let data = par::sum(r.n_users(), |i| {
        let ui = u.row(i);
        let mut gu = vec![0.0; k];
        symv(&gram, ui, &mut gu);
        let mut acc = rho * dot(ui, &gu);
        for &j in r.user(i).0 {
            let s = dot(ui, v.row(j as usize));
            acc += (1.0 - s) * (1.0 - s) - rho * s * s;
        }
        acc
    });
    Ok(data + regularizer(lambda, u, v) + mu * g.laplacian_quadratic(u))
}

/// Gradients of [`grwmf_objective`] in `U` and `V`, parallel over rows.
pub fn grwmf_gradient(
    r: &RatingsMatrix,
    u: &FactorTable,
    v: &FactorTable,
    g: &Graph,
    lambda: f64,
    mu: f64,
    rho: f64,
) -> Result<(FactorTable, FactorTable)> {
    require_implicit(r)?;
    check_dims(r, u, v, g)?;
    let k = u.rank();
    let gram_v = v.gram(v.rows());
    let gram_u = u.gram(r.n_users());
    let n = r.n_users();

    let mut gu = FactorTable::zeros(u.rows(), k);
    par::rows_mut(gu.as_mut_slice(), k, |i, out| {
        let ui = u.row(i);
        axpy(lambda, ui, out);
        if i >= n {
            return;
        }
        let mut tmp = vec![0.0; k];
        symv(&gram_v, ui, &mut tmp);
        axpy(2.0 * rho, &tmp, out);
        for &j in r.user(i).0 {
            let vj = v.row(j as usize);
            let s = dot(ui, vj);
            axpy(-2.0 * (1.0 - s) - 2.0 * rho * s, vj, out);
        }
    });
    g.add_laplacian_product(u, 2.0 * mu, &mut gu);

    let mut gv = FactorTable::zeros(v.rows(), k);
    par::rows_mut(gv.as_mut_slice(), k, |j, out| {
        let vj = v.row(j);
        axpy(lambda, vj, out);
        let mut tmp = vec![0.0; k];
        symv(&gram_u, vj, &mut tmp);
        axpy(2.0 * rho, &tmp, out);
        for &i in r.item(j).0 {
            let ui = u.row(i as usize);
            let s = dot(ui, vj);
            axpy(-2.0 * (1.0 - s) - 2.0 * rho * s, ui, out);
        }
    });
    Ok((gu, gv))
}

fn check_side(r: &RatingsMatrix, side: &RatingsMatrix, u: &FactorTable, v: &FactorTable, vs: &FactorTable) -> Result<()> {
    check_dims(r, u, v, &Graph::empty(u.rows()))?;
    if side.n_users() > u.rows() || vs.rows() != side.n_items() || vs.rank() != u.rank() {
        return Err(Error::Dimension(format!(
            "side matrix {}x{} does not match factors {}x{}",
            side.n_users(),
            side.n_items(),
            u.rows(),
            vs.rows()
        )));
    }
    Ok(())
}

/// `Σ_{Ω_R}(R − u·v)² + Σ_{Ω_S}(S − u·v')² + (λ/2)(‖U‖² + ‖V‖² + ‖V'‖²)`.
pub fn cofactor_objective(
    r: &RatingsMatrix,
    side: &RatingsMatrix,
    u: &FactorTable,
    v: &FactorTable,
    vs: &FactorTable,
    lambda: f64,
) -> Result<f64> {
    check_side(r, side, u, v, vs)?;
    let sq = |m: &RatingsMatrix, w: &FactorTable| {
        par::sum(m.n_users(), |i| {
            entries(m, i)
                .map(|(j, x)| {
                    let e = x - dot(u.row(i), w.row(j));
                    e * e
                })
                .sum()
        })
    };
    Ok(sq(r, v) + sq(side, vs) + regularizer(lambda, u, v) + 0.5 * lambda * vs.frobenius_sq())
}

/// Gradients of [`cofactor_objective`] in `U`, `V` and `V'`.
pub fn cofactor_gradient(
    r: &RatingsMatrix,
    side: &RatingsMatrix,
    u: &FactorTable,
    v: &FactorTable,
    vs: &FactorTable,
    lambda: f64,
) -> Result<(FactorTable, FactorTable, FactorTable)> {
    check_side(r, side, u, v, vs)?;
    let mut gu = FactorTable::zeros(u.rows(), u.rank());
    let mut gv = FactorTable::zeros(v.rows(), v.rank());
    let mut gs = FactorTable::zeros(vs.rows(), vs.rank());
    for (m, w, gw) in [(r, v, &mut gv), (side, vs, &mut gs)] {
        for i in 0..m.n_users() {
            for (j, x) in entries(m, i) {
                let e = x - dot(u.row(i), w.row(j));
                axpy(-2.0 * e, w.row(j), gu.row_mut(i));
                axpy(-2.0 * e, u.row(i), gw.row_mut(j));
            }
        }
    }
    gu.axpy(lambda, u);
    gv.axpy(lambda, v);
    gs.axpy(lambda, vs);
    Ok((gu, gv, gs))
}
