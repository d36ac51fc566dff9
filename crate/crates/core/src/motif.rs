//! Daily mobility motifs and their isomorphism classes.
//!
//! A motif is the directed multigraph of one passenger's trips on one day.
//! Classes ignore edge multiplicity and the initial-station marker: two
//! motifs share a class iff their unweighted digraphs are isomorphic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Write;

use chrono::NaiveDate;

use crate::error::Result;
use crate::ingest::PassengerDay;
use crate::station::StationId;

/// Node-count cap for exhaustive canonical labeling.
pub const DEFAULT_NODE_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailyMotif {
    pub card_id: String,
    pub date: NaiveDate,
    /// Origin of the day's first trip.
    pub initial: StationId,
    pub nodes: BTreeSet<StationId>,
    /// Trip counts per directed station pair.
    pub edges: BTreeMap<(StationId, StationId), u32>,
}

impl DailyMotif {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn trip_count(&self) -> u64 {
        self.edges.values().map(|&c| u64::from(c)).sum()
    }

    /// Weighted in-degree: number of trips arriving at `station`.
    pub fn in_strength(&self, station: &StationId) -> u64 {
        self.edges
            .iter()
            .filter(|((_, d), _)| d == station)
            .map(|(_, &c)| u64::from(c))
            .sum()
    }
}

/// Builds the motif of one passenger-day.
///
/// # Panics
/// If `day.trips` is empty; [`crate::ingest::partition_by_day`] never
/// produces such a day.
pub fn build_motif(day: &PassengerDay) -> DailyMotif {
    let first = day.trips.first().expect("passenger day without trips");
    let mut nodes = BTreeSet::new();
    let mut edges: BTreeMap<(StationId, StationId), u32> = BTreeMap::new();
    for t in &day.trips {
        nodes.insert(t.origin.clone());
        nodes.insert(t.destination.clone());
        *edges
            .entry((t.origin.clone(), t.destination.clone()))
            .or_default() += 1;
    }
    DailyMotif {
        card_id: day.card_id.clone(),
        date: day.date,
        initial: first.origin.clone(),
        nodes,
        edges,
    }
}

pub fn build_motifs(days: &[PassengerDay]) -> Vec<DailyMotif> {
    days.iter().map(build_motif).collect()
}

/// Isomorphism class of an unweighted digraph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CanonicalMotif {
    /// Lexicographically smallest sorted edge list over all relabelings of
    /// the nodes onto `0..node_count`.
    Exact { node_count: u8, edges: Vec<(u8, u8)> },
    /// Motifs above the node cap, counted together.
    Overflow,
}

impl CanonicalMotif {
    pub fn node_count(&self) -> Option<usize> {
        match self {
            CanonicalMotif::Exact { node_count, .. } => Some(usize::from(*node_count)),
            CanonicalMotif::Overflow => None,
        }
    }

    /// Stable identifier: node count plus the adjacency bitmask (bit `8i+j`).
    pub fn id(&self) -> String {
        match self {
            CanonicalMotif::Exact { node_count, edges } => {
                let bits = edges
                    .iter()
                    .fold(0u64, |acc, &(i, j)| acc | 1u64 << (8 * u32::from(i) + u32::from(j)));
                format!("n{node_count}-{bits:016x}")
            }
            CanonicalMotif::Overflow => "overflow".to_owned(),
        }
    }

    /// Space-separated `i>j` edge list, e.g. `0>1 1>0`.
    pub fn edge_encoding(&self) -> String {
        match self {
            CanonicalMotif::Exact { edges, .. } => {
                let mut s = String::new();
                for (k, (i, j)) in edges.iter().enumerate() {
                    if k > 0 {
                        s.push(' ');
                    }
                    let _ = write!(s, "{i}>{j}");
                }
                s
            }
            CanonicalMotif::Overflow => String::new(),
        }
    }
}

/// Canonical form of a digraph on `0..n` given as an edge list.
///
/// Exhaustive over all `n!` relabelings, so callers must keep `n` small.
pub fn canonical_edges(n: usize, edges: &[(u8, u8)]) -> Vec<(u8, u8)> {
    assert!(n <= 12, "exhaustive canonical labeling on {n} nodes");
    let mut perm: Vec<u8> = (0..n as u8).collect();
    let mut best: Vec<(u8, u8)> = {
        let mut e = edges.to_vec();
        e.sort_unstable();
        e.dedup();
        e
    };
    let mut scratch = Vec::with_capacity(best.len());
    let mut consider = |perm: &[u8], best: &mut Vec<(u8, u8)>| {
        scratch.clear();
        scratch.extend(edges.iter().map(|&(i, j)| (perm[i as usize], perm[j as usize])));
        scratch.sort_unstable();
        scratch.dedup();
        if scratch < *best {
            best.clone_from(&scratch);
        }
    };

    // Heap's algorithm.
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            consider(&perm, &mut best);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Relabels the motif's stations onto `0..n` in identifier order.
fn labeled_edges(m: &DailyMotif) -> Vec<(u8, u8)> {
    let index: HashMap<&StationId, u8> = m
        .nodes
        .iter()
        .enumerate()
        .map(|(k, s)| (s, k as u8))
        .collect();
    m.edges
        .keys()
        .map(|(o, d)| (index[o], index[d]))
        .collect()
}

pub fn canonical_form(m: &DailyMotif, node_cap: usize) -> CanonicalMotif {
    let n = m.node_count();
    if n > node_cap.min(12) {
        return CanonicalMotif::Overflow;
    }
    CanonicalMotif::Exact {
        node_count: n as u8,
        edges: canonical_edges(n, &labeled_edges(m)),
    }
}

/// Memoizing wrapper around [`canonical_form`]: corpora repeat the same
/// labeled shapes many times.
#[derive(Debug)]
pub struct Canonicalizer {
    node_cap: usize,
    cache: HashMap<(usize, Vec<(u8, u8)>), CanonicalMotif>,
}

impl Canonicalizer {
    pub fn new(node_cap: usize) -> Self {
        Canonicalizer {
            node_cap,
            cache: HashMap::new(),
        }
    }

    pub fn classify(&mut self, m: &DailyMotif) -> CanonicalMotif {
        let n = m.node_count();
        if n > self.node_cap.min(12) {
            return CanonicalMotif::Overflow;
        }
        let key = (n, labeled_edges(m));
        if let Some(c) = self.cache.get(&key) {
            return c.clone();
        }
        let c = CanonicalMotif::Exact {
            node_count: n as u8,
            edges: canonical_edges(n, &key.1),
        };
        self.cache.insert(key, c.clone());
        c
    }
}

impl Default for Canonicalizer {
    fn default() -> Self {
        Canonicalizer::new(DEFAULT_NODE_CAP)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotifShare {
    pub class: CanonicalMotif,
    pub count: u64,
    pub share: f64,
}

/// Class frequencies, most common first (ties by class encoding), truncated
/// to `top_k` classes when given.
pub fn motif_distribution(
    motifs: &[DailyMotif],
    top_k: Option<usize>,
    node_cap: usize,
) -> Vec<MotifShare> {
    let mut canon = Canonicalizer::new(node_cap);
    let mut counts: BTreeMap<CanonicalMotif, u64> = BTreeMap::new();
    for m in motifs {
        *counts.entry(canon.classify(m)).or_default() += 1;
    }
    let total = motifs.len() as f64;
    let mut shares: Vec<MotifShare> = counts
        .into_iter()
        .map(|(class, count)| MotifShare {
            class,
            count,
            share: count as f64 / total,
        })
        .collect();
    shares.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.class.cmp(&b.class)));
    if let Some(k) = top_k {
        shares.truncate(k);
    }
    shares
}

pub fn write_distribution<W: Write>(out: W, shares: &[MotifShare]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["canonical_id", "node_count", "edge_encoding", "count", "share"])?;
    for s in shares {
        let n = s.class.node_count().map(|n| n.to_string()).unwrap_or_default();
        w.write_record([
            s.class.id(),
            n,
            s.class.edge_encoding(),
            s.count.to_string(),
            s.share.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
