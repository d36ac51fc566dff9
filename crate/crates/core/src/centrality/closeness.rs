//! Current-flow (information) closeness from effective resistances.

use nalgebra::{DMatrix, DVector};

use super::{Measure, ScoreVector, SolverMeta};
use crate::error::{Error, Result};
use crate::netbuild::WeightedNetwork;

/// Components up to this size are solved by dense Cholesky; larger ones by
/// preconditioned conjugate gradients.
pub const DIRECT_SOLVE_LIMIT: usize = 2000;

const CG_TOLERANCE: f64 = 1e-10;

fn components(n: usize, adj: &[Vec<(usize, f64)>]) -> Vec<Vec<usize>> {
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut k = 0;
        while k < members.len() {
            let v = members[k];
            for &(u, _) in &adj[v] {
                if comp[u] == usize::MAX {
                    comp[u] = id;
                    members.push(u);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Laplacian of one component with its first member grounded (removed).
fn grounded_laplacian(members: &[usize], adj: &[Vec<(usize, f64)>]) -> DMatrix<f64> {
    let m = members.len() - 1;
    let local = |v: usize| members.binary_search(&v).expect("component member");
    let mut lap = DMatrix::zeros(m, m);
    for &v in members {
        let a = local(v);
        for &(u, w) in &adj[v] {
            let b = local(u);
            if a > 0 {
                lap[(a - 1, a - 1)] += w;
                if b > 0 {
                    lap[(a - 1, b - 1)] -= w;
                }
            }
        }
    }
    lap
}

/// Inverse of the grounded Laplacian, column by column via Jacobi-
/// preconditioned conjugate gradients.
fn cg_inverse(lap: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = lap.nrows();
    let diag: Vec<f64> = (0..m).map(|i| lap[(i, i)]).collect();
    let mut inv = DMatrix::zeros(m, m);
    for col in 0..m {
        let mut b = DVector::zeros(m);
        b[col] = 1.0;
        let mut x = DVector::zeros(m);
        let mut r = b.clone();
        let mut z = r.component_div(&DVector::from_column_slice(&diag));
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        let mut converged = false;
        for _ in 0..(10 * m).max(100) {
            let ap = lap * &p;
            let alpha = rz / p.dot(&ap);
            x.axpy(alpha, &p, 1.0);
            r.axpy(-alpha, &ap, 1.0);
            if r.norm() < CG_TOLERANCE {
                converged = true;
                break;
            }
            z = r.component_div(&DVector::from_column_slice(&diag));
            let rz_next = r.dot(&z);
            p = &z + (rz_next / rz) * &p;
            rz = rz_next;
        }
        if !converged {
            return Err(Error::Solver(format!("conjugate gradients stalled on column {col}")));
        }
        inv.set_column(col, &x);
    }
    Ok(inv)
}

/// For each node, the sum of effective resistances to the other members of
/// its component, plus the component size. Weights act as conductances.
pub fn effective_resistance_sums(g: &WeightedNetwork) -> Result<Vec<(f64, usize)>> {
    if g.is_directed() {
        return Err(Error::Config("current-flow closeness needs an undirected network".into()));
    }
    let n = g.node_count();
    let adj = g.out_adjacency();
    let mut out = vec![(0.0, 1); n];
    for members in components(n, &adj) {
        let size = members.len();
        if size == 1 {
            continue;
        }
        let lap = grounded_laplacian(&members, &adj);
        let inv = if size <= DIRECT_SOLVE_LIMIT {
            lap.cholesky()
                .ok_or_else(|| Error::Solver("grounded Laplacian is not positive definite".into()))?
                .inverse()
        } else {
            cg_inverse(&lap)?
        };
        // With the ground's row and column fixed at zero:
        // sum_j R(i,j) = n G_ii + tr G - 2 sum_j G_ij.
        let trace = inv.trace();
        let g_ii = |a: usize| if a == 0 { 0.0 } else { inv[(a - 1, a - 1)] };
        let row_sum = |a: usize| if a == 0 { 0.0 } else { inv.row(a - 1).sum() };
        for (a, &v) in members.iter().enumerate() {
            let total = size as f64 * g_ii(a) + trace - 2.0 * row_sum(a);
            out[v] = (total, size);
        }
    }
    Ok(out)
}

/// `c_i = (n_c - 1) / sum_j R(i,j)` over the component of `i`; isolated
/// nodes score 0.
pub fn current_flow_closeness(g: &WeightedNetwork) -> Result<ScoreVector> {
    let sums = effective_resistance_sums(g)?;
    let scores = sums
        .iter()
        .map(|&(total, size)| if size < 2 { 0.0 } else { (size - 1) as f64 / total })
        .collect();
    Ok(ScoreVector {
        measure: Measure::CurrentFlow,
        stations: g.stations().to_vec(),
        scores,
        meta: SolverMeta::default(),
    })
}
