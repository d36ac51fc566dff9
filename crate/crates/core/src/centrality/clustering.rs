use std::collections::HashMap;

use super::{Measure, ScoreVector, SolverMeta};
use crate::error::{Error, Result};
use crate::netbuild::WeightedNetwork;

/// Weighted clustering: geometric mean of triangle weights over ordered
/// neighbour pairs, scaled by `k(k-1)` and the global maximum weight.
/// Nodes with fewer than two neighbours score 0.
pub fn weighted_clustering(g: &WeightedNetwork) -> Result<ScoreVector> {
    if g.is_directed() {
        return Err(Error::Config("clustering needs an undirected network".into()));
    }
    let n = g.node_count();
    let adj = g.out_adjacency();
    let weight: HashMap<(usize, usize), f64> = g
        .edges()
        .flat_map(|(i, j, w)| [((i, j), w), ((j, i), w)])
        .collect();
    let max_w = g.edges().map(|(_, _, w)| w).fold(0.0, f64::max);

    let mut scores = vec![0.0; n];
    for (i, nbrs) in adj.iter().enumerate() {
        let k = nbrs.len();
        if k < 2 {
            continue;
        }
        let mut sum = 0.0;
        for (a, &(j, wij)) in nbrs.iter().enumerate() {
            for (b, &(l, wil)) in nbrs.iter().enumerate() {
                if a == b {
                    continue;
                }
                if let Some(&wjl) = weight.get(&(j, l)) {
                    sum += (wij * wil * wjl).cbrt();
                }
            }
        }
        scores[i] = sum / ((k * (k - 1)) as f64 * max_w);
    }
    Ok(ScoreVector {
        measure: Measure::Clustering,
        stations: g.stations().to_vec(),
        scores,
        meta: SolverMeta::default(),
    })
}
