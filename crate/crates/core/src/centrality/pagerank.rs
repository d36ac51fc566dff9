use super::{memory_labels, Measure, MemoryScores, ScoreVector, SolverConfig, SolverMeta};
use crate::error::{Error, Result};
use crate::netbuild::{MemoryNetwork, WeightedNetwork};

/// Weighted PageRank by power iteration over an out-adjacency list.
///
/// Each node passes `damping` of its mass along out-edges in proportion to
/// edge weight; nodes with zero out-strength spread theirs uniformly. The
/// remaining `1 - damping` teleports uniformly.
pub fn pagerank_adjacency(adj: &[Vec<(usize, f64)>], cfg: &SolverConfig) -> Result<(Vec<f64>, SolverMeta)> {
    cfg.validate()?;
    let n = adj.len();
    if n == 0 {
        return Err(Error::Solver("PageRank on an empty network".into()));
    }
    let out_strength: Vec<f64> = adj.iter().map(|e| e.iter().map(|&(_, w)| w).sum()).collect();
    let inv_n = 1.0 / n as f64;
    let s = cfg.damping;

    let mut x = vec![inv_n; n];
    let mut next = vec![0.0; n];
    let mut meta = SolverMeta::default();
    for iter in 1..=cfg.max_iterations {
        let dangling: f64 = x
            .iter()
            .zip(&out_strength)
            .filter(|&(_, &o)| o <= 0.0)
            .map(|(&v, _)| v)
            .sum();
        let base = (1.0 - s) * inv_n + s * dangling * inv_n;
        next.iter_mut().for_each(|v| *v = base);
        for (j, edges) in adj.iter().enumerate() {
            if out_strength[j] <= 0.0 {
                continue;
            }
            let share = s * x[j] / out_strength[j];
            for &(i, w) in edges {
                next[i] += share * w;
            }
        }
        let mass: f64 = next.iter().sum();
        meta.max_mass_drift = meta.max_mass_drift.max((mass - 1.0).abs());
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        meta.iterations = iter;
        meta.residual = change;
        if change < cfg.tolerance {
            return Ok((x, meta));
        }
    }
    Err(Error::NonConvergence {
        iterations: meta.iterations,
        residual: meta.residual,
    })
}

/// PageRank on a station network; undirected pairs act as two equal arcs.
pub fn pagerank(g: &WeightedNetwork, cfg: &SolverConfig) -> Result<ScoreVector> {
    let (scores, meta) = pagerank_adjacency(&g.out_adjacency(), cfg)?;
    Ok(ScoreVector {
        measure: Measure::PageRank,
        stations: g.stations().to_vec(),
        scores,
        meta,
    })
}

pub fn pagerank_memory(g: &MemoryNetwork, cfg: &SolverConfig) -> Result<MemoryScores> {
    let (scores, meta) = pagerank_adjacency(&g.out_adjacency(), cfg)?;
    Ok(MemoryScores {
        measure: Measure::PageRank,
        nodes: memory_labels(g),
        scores,
        meta,
    })
}
