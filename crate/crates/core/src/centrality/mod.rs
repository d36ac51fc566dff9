//! Node-importance measures on station and memory networks.

mod closeness;
mod clustering;
mod eigenvector;
mod pagerank;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netbuild::{MemoryNetwork, Network, Strategy, WeightedNetwork};
use crate::station::StationId;

pub use closeness::{current_flow_closeness, effective_resistance_sums, DIRECT_SOLVE_LIMIT};
pub use clustering::weighted_clustering;
pub use eigenvector::{eigenvector_adjacency, eigenvector_centrality, eigenvector_memory};
pub use pagerank::{pagerank, pagerank_adjacency, pagerank_memory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    PageRank,
    Eigenvector,
    CurrentFlow,
    Clustering,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::PageRank,
        Measure::Eigenvector,
        Measure::CurrentFlow,
        Measure::Clustering,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::PageRank => "pagerank",
            Measure::Eigenvector => "eigenvector",
            Measure::CurrentFlow => "currentflow",
            Measure::Clustering => "clustering",
        }
    }

    pub fn requires_undirected(self) -> bool {
        matches!(self, Measure::CurrentFlow | Measure::Clustering)
    }

    /// Whether this measure is defined on the network `strategy` builds.
    pub fn supports(self, strategy: Strategy) -> bool {
        !self.requires_undirected() || strategy.is_undirected()
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown measure `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub damping: f64,
    /// L1 change between iterates at which iteration stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            damping: 0.85,
            tolerance: 1e-10,
            max_iterations: 1000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::Config(format!("damping must lie in (0,1), got {}", self.damping)));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolverMeta {
    pub iterations: usize,
    /// Final L1 change for iterative solvers, or the eigen-residual.
    pub residual: f64,
    /// Largest |sum - 1| seen over all PageRank iterates.
    pub max_mass_drift: f64,
}

/// Scores for the stations of one network, in station order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub measure: Measure,
    pub stations: Vec<StationId>,
    pub scores: Vec<f64>,
    pub meta: SolverMeta,
}

impl ScoreVector {
    pub fn get(&self, id: &str) -> Option<f64> {
        self.stations
            .binary_search_by(|s| s.as_str().cmp(id))
            .ok()
            .map(|k| self.scores[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StationId, f64)> {
        self.stations.iter().zip(self.scores.iter().copied())
    }
}

/// Scores over the memory nodes (trips `i→j`) of a second-order network.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryScores {
    pub measure: Measure,
    pub nodes: Vec<(StationId, StationId)>,
    pub scores: Vec<f64>,
    pub meta: SolverMeta,
}

/// Station score = sum of scores of memory nodes arriving at that station.
/// PageRank mass is renormalized to sum to 1. Every station of `stations`
/// appears in the output; stations with no arrivals score 0.
pub fn project_memory_scores(ms: &MemoryScores, stations: &[StationId]) -> Result<ScoreVector> {
    let mut stations = stations.to_vec();
    stations.sort();
    stations.dedup();
    let mut scores = vec![0.0; stations.len()];
    for ((_, dest), &s) in ms.nodes.iter().zip(&ms.scores) {
        let k = stations
            .binary_search(dest)
            .map_err(|_| Error::StationMismatch(format!("memory node ends at unknown station `{dest}`")))?;
        scores[k] += s;
    }
    if ms.measure == Measure::PageRank {
        let total: f64 = scores.iter().sum();
        if total > 0.0 {
            scores.iter_mut().for_each(|s| *s /= total);
        }
    }
    Ok(ScoreVector {
        measure: ms.measure,
        stations,
        scores,
        meta: ms.meta,
    })
}

/// Runs `measure` on any built network; memory-network scores are projected
/// onto `stations` (or the network's own stations when empty).
pub fn score_network(network: &Network, measure: Measure, cfg: &SolverConfig, stations: &[StationId]) -> Result<ScoreVector> {
    cfg.validate()?;
    match network {
        Network::Station(g) => score_station_network(g, measure, cfg),
        Network::Memory(g) => {
            let ms = match measure {
                Measure::PageRank => pagerank_memory(g, cfg)?,
                Measure::Eigenvector => eigenvector_memory(g, cfg)?,
                other => {
                    return Err(Error::Config(format!(
                        "{other} is not defined on a memory network"
                    )))
                }
            };
            let target = if stations.is_empty() { g.stations() } else { stations };
            project_memory_scores(&ms, target)
        }
    }
}

fn score_station_network(g: &WeightedNetwork, measure: Measure, cfg: &SolverConfig) -> Result<ScoreVector> {
    match measure {
        Measure::PageRank => pagerank(g, cfg),
        Measure::Eigenvector => eigenvector_centrality(g, cfg),
        Measure::CurrentFlow => current_flow_closeness(g),
        Measure::Clustering => weighted_clustering(g),
    }
}

pub(crate) fn memory_labels(g: &MemoryNetwork) -> Vec<(StationId, StationId)> {
    (0..g.node_count())
        .map(|k| {
            let (a, b) = g.node_label(k);
            (a.clone(), b.clone())
        })
        .collect()
}
