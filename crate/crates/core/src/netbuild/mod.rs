//! Station-level networks aggregated from daily motifs.
//!
//! Every builder is an additive reduction over per-motif contributions.
//! Contributions are accumulated exactly (integers, or fractions grouped by
//! denominator for the normalized motif-wise weighting) and converted to
//! `f64` once, so the result does not depend on motif order.

mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::PassengerDay;
use crate::motif::DailyMotif;
use crate::station::StationId;

pub use io::{
    parse_edge_list, parse_memory_edge_list, read_network, write_edge_list,
    write_memory_edge_list, write_network, EDGE_HEADER, MEMORY_EDGE_HEADER,
};

/// Non-negative rational `num / den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den).max(1);
        Fraction {
            num: num / g,
            den: den / g,
        }
    }

    pub fn integer(n: u64) -> Self {
        Fraction { num: n, den: 1 }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Exact sum of fractions, kept as numerator totals per denominator.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExactWeight {
    parts: BTreeMap<u64, u64>,
}

impl ExactWeight {
    pub fn add(&mut self, f: Fraction) {
        if f.num > 0 {
            *self.parts.entry(f.den).or_default() += f.num;
        }
    }

    pub fn merge(&mut self, other: &ExactWeight) {
        for (&den, &num) in &other.parts {
            *self.parts.entry(den).or_default() += num;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    /// The integer value, if every contribution was integral.
    pub fn as_integer(&self) -> Option<u64> {
        match self.parts.len() {
            0 => Some(0),
            1 => self.parts.get(&1).copied(),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.parts
            .iter()
            .map(|(&den, &num)| num as f64 / den as f64)
            .sum()
    }
}

/// Station graph with non-negative real weights. Undirected networks store
/// each pair once, under `(min, max)` station index.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNetwork {
    directed: bool,
    stations: Vec<StationId>,
    edges: BTreeMap<(usize, usize), f64>,
}

impl WeightedNetwork {
    /// Builds a network from explicit weights. Self-loops and non-positive
    /// weights are rejected; undirected duplicates (`a,b` and `b,a`) too.
    pub fn from_weights<I>(directed: bool, stations: I, weights: &[(StationId, StationId, f64)]) -> Result<Self>
    where
        I: IntoIterator<Item = StationId>,
    {
        let mut set: BTreeSet<StationId> = stations.into_iter().collect();
        for (a, b, _) in weights {
            set.insert(a.clone());
            set.insert(b.clone());
        }
        let stations: Vec<StationId> = set.into_iter().collect();
        let index: HashMap<&StationId, usize> =
            stations.iter().enumerate().map(|(k, s)| (s, k)).collect();
        let mut edges = BTreeMap::new();
        for (a, b, w) in weights {
            if a == b {
                return Err(Error::Format(format!("self-loop on `{a}`")));
            }
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::Format(format!("weight of {a}->{b} must be positive, got {w}")));
            }
            let (i, j) = (index[a], index[b]);
            let key = if directed { (i, j) } else { (i.min(j), i.max(j)) };
            if edges.insert(key, *w).is_some() {
                return Err(Error::Format(format!("duplicate edge {a}-{b}")));
            }
        }
        Ok(WeightedNetwork {
            directed,
            stations,
            edges,
        })
    }

    fn from_exact(directed: bool, stations: Vec<StationId>, exact: BTreeMap<(usize, usize), ExactWeight>) -> Self {
        let edges = exact
            .into_iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|(k, w)| (k, w.to_f64()))
            .collect();
        WeightedNetwork {
            directed,
            stations,
            edges,
        }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn stations(&self) -> &[StationId] {
        &self.stations
    }

    pub fn node_count(&self) -> usize {
        self.stations.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.stations.binary_search_by(|s| s.as_str().cmp(id)).ok()
    }

    /// Stored edges by station index; undirected pairs appear once.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    /// Weight between two stations; zero when absent.
    pub fn weight(&self, a: &str, b: &str) -> f64 {
        let (Some(i), Some(j)) = (self.index_of(a), self.index_of(b)) else {
            return 0.0;
        };
        let key = if self.directed { (i, j) } else { (i.min(j), i.max(j)) };
        self.edges.get(&key).copied().unwrap_or(0.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    /// Adds isolated stations so the node set covers `extra`.
    pub fn with_stations<'a, I>(self, extra: I) -> Self
    where
        I: IntoIterator<Item = &'a StationId>,
    {
        let mut set: BTreeSet<StationId> = self.stations.iter().cloned().collect();
        set.extend(extra.into_iter().cloned());
        if set.len() == self.stations.len() {
            return self;
        }
        let stations: Vec<StationId> = set.into_iter().collect();
        let remap: Vec<usize> = self
            .stations
            .iter()
            .map(|s| stations.binary_search(s).expect("superset"))
            .collect();
        let edges = self
            .edges
            .into_iter()
            .map(|((i, j), w)| ((remap[i], remap[j]), w))
            .collect();
        WeightedNetwork {
            directed: self.directed,
            stations,
            edges,
        }
    }

    /// Outgoing adjacency with undirected pairs expanded in both directions.
    pub fn out_adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.stations.len()];
        for (&(i, j), &w) in &self.edges {
            adj[i].push((j, w));
            if !self.directed {
                adj[j].push((i, w));
            }
        }
        adj
    }
}

/// Second-order network: nodes are observed trips `i→j`, edges link
/// consecutive connected trips `i→j`, `j→k` of the same passenger-day.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryNetwork {
    stations: Vec<StationId>,
    /// Memory nodes as (origin, destination) station indices, sorted.
    nodes: Vec<(usize, usize)>,
    /// Edge weights keyed by memory-node indices.
    edges: BTreeMap<(usize, usize), u64>,
}

impl MemoryNetwork {
    pub fn from_parts(
        stations: Vec<StationId>,
        nodes: Vec<(usize, usize)>,
        edges: BTreeMap<(usize, usize), u64>,
    ) -> Result<Self> {
        let mut sorted = stations.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != stations {
            return Err(Error::Format("memory network stations must be sorted and unique".into()));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("memory nodes must be sorted and unique".into()));
        }
        for &(i, j) in &nodes {
            if i >= stations.len() || j >= stations.len() || i == j {
                return Err(Error::Format("memory node out of range".into()));
            }
        }
        for (&(a, b), &w) in &edges {
            if a >= nodes.len() || b >= nodes.len() || w == 0 {
                return Err(Error::Format("memory edge out of range".into()));
            }
            if nodes[a].1 != nodes[b].0 {
                return Err(Error::Format(format!(
                    "memory edge {}{}->{}{} is not connected",
                    stations[nodes[a].0], stations[nodes[a].1], stations[nodes[b].0], stations[nodes[b].1]
                )));
            }
        }
        Ok(MemoryNetwork {
            stations,
            nodes,
            edges,
        })
    }

    pub fn stations(&self) -> &[StationId] {
        &self.stations
    }

    pub fn memory_nodes(&self) -> &[(usize, usize)] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Weight of `a→b → b→c` by station id; zero when absent.
    pub fn weight(&self, a: &str, b: &str, c: &str) -> u64 {
        let idx = |s: &str| self.stations.binary_search_by(|x| x.as_str().cmp(s)).ok();
        let (Some(a), Some(b), Some(c)) = (idx(a), idx(b), idx(c)) else {
            return 0;
        };
        let node = |p: (usize, usize)| self.nodes.binary_search(&p).ok();
        match (node((a, b)), node((b, c))) {
            (Some(x), Some(y)) => self.edges.get(&(x, y)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn out_adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (&(a, b), &w) in &self.edges {
            adj[a].push((b, w as f64));
        }
        adj
    }

    /// Label `ij` for a memory node.
    pub fn node_label(&self, node: usize) -> (&StationId, &StationId) {
        let (i, j) = self.nodes[node];
        (&self.stations[i], &self.stations[j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weighting {
    /// Each visited non-initial station receives its in-trip count.
    Unit,
    /// In-trip counts divided by their motif total, so each motif spends 1.
    Normalized,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(Weighting::Unit),
            "normalized" => Ok(Weighting::Normalized),
            other => Err(Error::Config(format!("unknown weighting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Classic,
    ClassicUndirected,
    MotifBased,
    MotifWise(Weighting),
    DeBruijn,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Classic,
        Strategy::ClassicUndirected,
        Strategy::MotifBased,
        Strategy::MotifWise(Weighting::Unit),
        Strategy::MotifWise(Weighting::Normalized),
        Strategy::DeBruijn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Classic => "classic",
            Strategy::ClassicUndirected => "classic-undirected",
            Strategy::MotifBased => "motif-based",
            Strategy::MotifWise(Weighting::Unit) => "motif-wise",
            Strategy::MotifWise(Weighting::Normalized) => "motif-wise-normalized",
            Strategy::DeBruijn => "debruijn",
        }
    }

    /// Whether the built network is an undirected station graph.
    pub fn is_undirected(self) -> bool {
        matches!(self, Strategy::ClassicUndirected | Strategy::MotifBased)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Station(WeightedNetwork),
    Memory(MemoryNetwork),
}

impl Network {
    pub fn stations(&self) -> &[StationId] {
        match self {
            Network::Station(g) => g.stations(),
            Network::Memory(g) => g.stations(),
        }
    }
}

/// Builds the network for `strategy`. The de Bruijn graph needs trip order,
/// which only the passenger-days carry.
pub fn build(strategy: Strategy, motifs: &[DailyMotif], days: &[PassengerDay]) -> Network {
    match strategy {
        Strategy::Classic => Network::Station(build_classic(motifs)),
        Strategy::ClassicUndirected => Network::Station(symmetrize(&build_classic(motifs))),
        Strategy::MotifBased => Network::Station(build_motif_based(motifs)),
        Strategy::MotifWise(w) => Network::Station(build_motif_wise(motifs, w)),
        Strategy::DeBruijn => Network::Memory(build_debruijn(days)),
    }
}

struct Indexer {
    stations: Vec<StationId>,
}

impl Indexer {
    fn from_motifs(motifs: &[DailyMotif]) -> Self {
        let set: BTreeSet<&StationId> = motifs.iter().flat_map(|m| m.nodes.iter()).collect();
        Indexer {
            stations: set.into_iter().cloned().collect(),
        }
    }

    fn idx(&self, s: &StationId) -> usize {
        self.stations.binary_search(s).expect("station indexed")
    }
}

/// Directed network; `W(i,j)` is the total number of `i→j` trips.
pub fn build_classic(motifs: &[DailyMotif]) -> WeightedNetwork {
    let ix = Indexer::from_motifs(motifs);
    let mut acc: BTreeMap<(usize, usize), ExactWeight> = BTreeMap::new();
    for m in motifs {
        for ((o, d), &c) in &m.edges {
            acc.entry((ix.idx(o), ix.idx(d)))
                .or_default()
                .add(Fraction::integer(u64::from(c)));
        }
    }
    WeightedNetwork::from_exact(true, ix.stations, acc)
}

/// Undirected network with `W'{i,j} = W(i,j) + W(j,i)`.
///
/// # Panics
/// If `g` is already undirected.
pub fn symmetrize(g: &WeightedNetwork) -> WeightedNetwork {
    assert!(g.directed, "symmetrize expects a directed network");
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(i, j), &w) in &g.edges {
        *edges.entry((i.min(j), i.max(j))).or_default() += w;
    }
    WeightedNetwork {
        directed: false,
        stations: g.stations.clone(),
        edges,
    }
}

/// Undirected network; each motif adds 1 to every pair of its stations.
pub fn build_motif_based(motifs: &[DailyMotif]) -> WeightedNetwork {
    let ix = Indexer::from_motifs(motifs);
    let mut acc: BTreeMap<(usize, usize), ExactWeight> = BTreeMap::new();
    for m in motifs {
        let nodes: Vec<usize> = m.nodes.iter().map(|s| ix.idx(s)).collect();
        for (a, &i) in nodes.iter().enumerate() {
            for &j in &nodes[a + 1..] {
                acc.entry((i.min(j), i.max(j)))
                    .or_default()
                    .add(Fraction::integer(1));
            }
        }
    }
    WeightedNetwork::from_exact(false, ix.stations, acc)
}

/// One motif's reorganized edges: initial station → each other visited
/// station with positive in-strength.
///
/// Under normalized weighting a motif whose non-initial stations receive no
/// trips would divide by zero; it contributes nothing instead.
pub fn motif_wise_contribution(m: &DailyMotif, weighting: Weighting) -> BTreeMap<StationId, Fraction> {
    let mut strength: BTreeMap<&StationId, u64> = BTreeMap::new();
    for ((_, d), &c) in &m.edges {
        if *d != m.initial {
            *strength.entry(d).or_default() += u64::from(c);
        }
    }
    let total: u64 = strength.values().sum();
    strength
        .into_iter()
        .filter(|&(_, s)| s > 0)
        .map(|(station, s)| {
            let w = match weighting {
                Weighting::Unit => Fraction::integer(s),
                Weighting::Normalized => Fraction::new(s, total),
            };
            (station.clone(), w)
        })
        .collect()
}

/// Directed network aggregating every motif's reorganized edges.
pub fn build_motif_wise(motifs: &[DailyMotif], weighting: Weighting) -> WeightedNetwork {
    let ix = Indexer::from_motifs(motifs);
    let mut acc: BTreeMap<(usize, usize), ExactWeight> = BTreeMap::new();
    for m in motifs {
        let a = ix.idx(&m.initial);
        for (station, w) in motif_wise_contribution(m, weighting) {
            acc.entry((a, ix.idx(&station))).or_default().add(w);
        }
    }
    WeightedNetwork::from_exact(true, ix.stations, acc)
}

/// Second-order network over consecutive same-day trips. Days with a single
/// trip are skipped entirely.
pub fn build_debruijn(days: &[PassengerDay]) -> MemoryNetwork {
    let stations: Vec<StationId> = days
        .iter()
        .flat_map(|d| d.trips.iter().flat_map(|t| [&t.origin, &t.destination]))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    let idx = |s: &StationId| stations.binary_search(s).expect("station indexed");

    let mut node_set: BTreeSet<(usize, usize)> = BTreeSet::new();
    type Leg = (usize, usize);
    let mut pair_counts: BTreeMap<(Leg, Leg), u64> = BTreeMap::new();
    for day in days.iter().filter(|d| d.trips.len() >= 2) {
        let legs: Vec<(usize, usize)> = day
            .trips
            .iter()
            .map(|t| (idx(&t.origin), idx(&t.destination)))
            .collect();
        node_set.extend(legs.iter().copied());
        for w in legs.windows(2) {
            if w[0].1 == w[1].0 {
                *pair_counts.entry((w[0], w[1])).or_default() += 1;
            }
        }
    }
    let nodes: Vec<(usize, usize)> = node_set.into_iter().collect();
    let node_idx = |p: &(usize, usize)| nodes.binary_search(p).expect("memory node indexed");
    let edges = pair_counts
        .iter()
        .map(|((a, b), &w)| ((node_idx(a), node_idx(b)), w))
        .collect();
    MemoryNetwork {
        stations,
        nodes,
        edges,
    }
}
