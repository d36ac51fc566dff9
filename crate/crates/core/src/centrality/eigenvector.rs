use super::{memory_labels, Measure, MemoryScores, ScoreVector, SolverConfig, SolverMeta};
use crate::error::{Error, Result};
use crate::netbuild::{MemoryNetwork, WeightedNetwork};

/// `y_i = sum_j w_ji x_j`: a node is fed by the nodes pointing at it.
fn apply(adj: &[Vec<(usize, f64)>], x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for (j, edges) in adj.iter().enumerate() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for &(i, w) in edges {
            y[i] += w * xj;
        }
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn is_acyclic(adj: &[Vec<(usize, f64)>]) -> bool {
    let n = adj.len();
    let mut indeg = vec![0usize; n];
    for edges in adj {
        for &(i, w) in edges {
            if w > 0.0 {
                indeg[i] += 1;
            }
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(j) = stack.pop() {
        seen += 1;
        for &(i, w) in &adj[j] {
            if w > 0.0 {
                indeg[i] -= 1;
                if indeg[i] == 0 {
                    stack.push(i);
                }
            }
        }
    }
    seen == n
}

fn residual(adj: &[Vec<(usize, f64)>], x: &[f64]) -> (f64, f64) {
    let mut y = vec![0.0; x.len()];
    apply(adj, x, &mut y);
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let lambda = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / xx;
    let r = y
        .iter()
        .zip(x)
        .map(|(yi, xi)| (yi - lambda * xi).powi(2))
        .sum::<f64>()
        .sqrt()
        / xx.sqrt();
    (lambda, r)
}

/// Principal eigenvector of the in-edge operator, unit Euclidean norm.
///
/// Iterates `x <- (c I + M) x` with `c` the mean in-strength. The shift
/// keeps the dominant eigenvalue strictly largest in modulus, so bipartite
/// and periodic graphs converge. On an acyclic graph the operator is
/// nilpotent and the shifted iteration tends (very slowly) to the last
/// non-zero power `M^d 1`, which is returned directly; it is an exact
/// eigenvector for eigenvalue 0.
pub fn eigenvector_adjacency(adj: &[Vec<(usize, f64)>], cfg: &SolverConfig) -> Result<(Vec<f64>, SolverMeta)> {
    cfg.validate()?;
    let n = adj.len();
    if n == 0 {
        return Err(Error::Solver("eigenvector centrality on an empty network".into()));
    }
    let total: f64 = adj.iter().flatten().map(|&(_, w)| w).sum();
    if total <= 0.0 {
        return Err(Error::Solver("eigenvector centrality undefined without edges".into()));
    }

    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];

    if is_acyclic(adj) {
        let mut depth = 0;
        loop {
            apply(adj, &x, &mut y);
            let norm = norm2(&y);
            if norm == 0.0 {
                break;
            }
            y.iter_mut().for_each(|v| *v /= norm);
            std::mem::swap(&mut x, &mut y);
            depth += 1;
        }
        let (_, r) = residual(adj, &x);
        return Ok((
            x,
            SolverMeta {
                iterations: depth,
                residual: r,
                max_mass_drift: 0.0,
            },
        ));
    }

    let shift = total / n as f64;
    let mut meta = SolverMeta::default();
    for iter in 1..=cfg.max_iterations {
        apply(adj, &x, &mut y);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += shift * xi;
        }
        let norm = norm2(&y);
        y.iter_mut().for_each(|v| *v /= norm);
        let change: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut y);
        meta.iterations = iter;
        meta.residual = change;
        if change < cfg.tolerance {
            // Iterates stay non-negative; clear any -0.0.
            x.iter_mut().for_each(|v| *v = v.max(0.0));
            meta.residual = residual(adj, &x).1;
            return Ok((x, meta));
        }
    }
    Err(Error::NonConvergence {
        iterations: meta.iterations,
        residual: meta.residual,
    })
}

pub fn eigenvector_centrality(g: &WeightedNetwork, cfg: &SolverConfig) -> Result<ScoreVector> {
    let (scores, meta) = eigenvector_adjacency(&g.out_adjacency(), cfg)?;
    Ok(ScoreVector {
        measure: Measure::Eigenvector,
        stations: g.stations().to_vec(),
        scores,
        meta,
    })
}

pub fn eigenvector_memory(g: &MemoryNetwork, cfg: &SolverConfig) -> Result<MemoryScores> {
    let (scores, meta) = eigenvector_adjacency(&g.out_adjacency(), cfg)?;
    Ok(MemoryScores {
        measure: Measure::Eigenvector,
        nodes: memory_labels(g),
        scores,
        meta,
    })
}
