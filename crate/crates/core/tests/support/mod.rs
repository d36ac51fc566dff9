//! Test-only oracles. Everything here takes a different computational route
//! from the library code it is compared against.

#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{NaiveDate, NaiveDateTime};
use mobility_motifs::ingest::{OdRecord, PassengerDay, Trip};
use mobility_motifs::StationId;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn at(date: NaiveDate, h: u32, m: u32) -> NaiveDateTime {
    date.and_hms_opt(h, m, 0).unwrap()
}

pub fn monday() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 9, 5).unwrap()
}

/// The three passengers of the worked example: P1 A→B→A; P2 A→B→C→A;
/// P3 B→C→D→C→E.
pub fn three_passenger_records() -> Vec<OdRecord> {
    let d = monday();
    let rows = [
        ("p1", 8, "A", "B"),
        ("p1", 18, "B", "A"),
        ("p2", 8, "A", "B"),
        ("p2", 12, "B", "C"),
        ("p2", 18, "C", "A"),
        ("p3", 7, "B", "C"),
        ("p3", 10, "C", "D"),
        ("p3", 13, "D", "C"),
        ("p3", 17, "C", "E"),
    ];
    rows.iter()
        .map(|&(c, h, o, dst)| OdRecord {
            card_id: c.into(),
            depart: at(d, h, 0),
            origin: o.into(),
            destination: dst.into(),
        })
        .collect()
}

pub fn station(k: usize) -> StationId {
    StationId::new(format!("T{k:02}"))
}

/// Random records: `days` passenger-days over `stations` stations, 1..=6
/// trips each, origins not always equal to the previous destination.
pub fn random_records(seed: u64, days: usize, stations: usize) -> Vec<OdRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for d in 0..days {
        let card = format!("r{:04}", d / 3);
        let date = monday() + chrono::Duration::days((d % 3) as i64);
        let trips = rng.random_range(1..=6);
        let mut here = rng.random_range(0..stations);
        for t in 0..trips {
            if rng.random_bool(0.2) {
                here = rng.random_range(0..stations);
            }
            let mut next = rng.random_range(0..stations - 1);
            if next >= here {
                next += 1;
            }
            out.push(OdRecord {
                card_id: card.clone(),
                depart: at(date, 5 + 2 * t as u32, rng.random_range(0..60)),
                origin: station(here),
                destination: station(next),
            });
            here = next;
        }
    }
    out
}

/// Direct aggregation of raw OD pairs, bypassing motifs.
pub fn od_counts(records: &[OdRecord]) -> BTreeMap<(StationId, StationId), u64> {
    let mut m = BTreeMap::new();
    for r in records {
        *m.entry((r.origin.clone(), r.destination.clone())).or_default() += 1;
    }
    m
}

/// Number of consecutive same-day trip pairs `i→j, j→k`, by a plain scan.
pub fn connected_pairs(days: &[PassengerDay]) -> u64 {
    let mut n = 0;
    for d in days {
        for k in 1..d.trips.len() {
            let (a, b): (&Trip, &Trip) = (&d.trips[k - 1], &d.trips[k]);
            if a.destination == b.origin {
                n += 1;
            }
        }
    }
    n
}

/// Dense matrix `A[i][j] = w(i→j)` from an out-adjacency list.
pub fn dense(adj: &[Vec<(usize, f64)>]) -> DMatrix<f64> {
    let n = adj.len();
    let mut a = DMatrix::zeros(n, n);
    for (i, edges) in adj.iter().enumerate() {
        for &(j, w) in edges {
            a[(i, j)] += w;
        }
    }
    a
}

/// PageRank as the solution of `(I - s P^T) x = (1 - s)/n 1`, where
/// dangling rows of `P` are uniform.
pub fn pagerank_dense(adj: &[Vec<(usize, f64)>], damping: f64) -> Vec<f64> {
    let n = adj.len();
    let a = dense(adj);
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let row_sum: f64 = a.row(i).sum();
        for j in 0..n {
            p[(i, j)] = if row_sum > 0.0 { a[(i, j)] / row_sum } else { 1.0 / n as f64 };
        }
    }
    let lhs = DMatrix::identity(n, n) - damping * p.transpose();
    let rhs = DVector::from_element(n, (1.0 - damping) / n as f64);
    lhs.lu().solve(&rhs).expect("non-singular").iter().copied().collect()
}

/// Principal eigenvector of a symmetric matrix by full eigendecomposition.
pub fn eigenvector_symmetric(a: &DMatrix<f64>) -> Vec<f64> {
    let eig = a.clone().symmetric_eigen();
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .unwrap();
    let v = eig.eigenvectors.column(k);
    let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
    let norm = v.norm();
    v.iter().map(|x| sign * x / norm).collect()
}

/// Perron vector of `M = A^T` by repeated squaring of `I + M/||M||`.
pub fn eigenvector_by_squaring(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let m = a.transpose();
    let scale = m.amax();
    let mut b = DMatrix::identity(n, n) + m / scale;
    for _ in 0..80 {
        b = &b * &b;
        let mx = b.amax();
        b /= mx;
    }
    let x = b * DVector::from_element(n, 1.0);
    let norm = x.norm();
    x.iter().map(|v| v / norm).collect()
}

/// Current-flow closeness of a connected undirected graph from the
/// Moore–Penrose pseudo-inverse of its Laplacian.
pub fn closeness_pinv(adj: &[Vec<(usize, f64)>]) -> Vec<f64> {
    let n = adj.len();
    let a = dense(adj);
    let mut lap = -a.clone();
    for i in 0..n {
        lap[(i, i)] = a.row(i).sum();
    }
    let pinv = lap.pseudo_inverse(1e-12).unwrap();
    (0..n)
        .map(|i| {
            let total: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| pinv[(i, i)] + pinv[(j, j)] - 2.0 * pinv[(i, j)])
                .sum();
            (n - 1) as f64 / total
        })
        .collect()
}

/// Random weighted digraph on `n` nodes containing a Hamiltonian cycle (so
/// it is strongly connected) plus extra random arcs.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Vec<(String, String, f64)> {
    let mut arcs = BTreeMap::new();
    let name = |k: usize| format!("v{k:02}");
    for k in 0..n {
        arcs.insert((k, (k + 1) % n), rng.random_range(0.5..5.0));
    }
    for _ in 0..extra {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            arcs.insert((i, j), rng.random_range(0.5..5.0));
        }
    }
    arcs.into_iter().map(|((i, j), w)| (name(i), name(j), w)).collect()
}

/// Random connected undirected graph: a random spanning tree plus chords.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Vec<(String, String, f64)> {
    let mut edges = BTreeMap::new();
    let name = |k: usize| format!("v{k:02}");
    for k in 1..n {
        let parent = rng.random_range(0..k);
        edges.insert((parent, k), rng.random_range(0.5..5.0));
    }
    for _ in 0..extra {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            edges.insert((i.min(j), i.max(j)), rng.random_range(0.5..5.0));
        }
    }
    edges.into_iter().map(|((i, j), w)| (name(i), name(j), w)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
