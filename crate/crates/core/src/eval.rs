//! Ranking tables and their evaluation against ground-truth importance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::centrality::ScoreVector;
use crate::error::{Error, Result};
use crate::station::{trim_bytes, StationId};

pub const RANKING_HEADER: [&str; 3] = ["station_id", "score", "rank"];

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub station: StationId,
    pub score: f64,
    /// 1-based position.
    pub rank: usize,
}

/// Stations in descending score order, ties by ascending station id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    /// Provenance, e.g. `motif-wise/pagerank`.
    pub label: String,
    pub entries: Vec<RankEntry>,
}

impl RankingTable {
    pub fn from_scores<I>(label: impl Into<String>, scores: I) -> Self
    where
        I: IntoIterator<Item = (StationId, f64)>,
    {
        let mut v: Vec<(StationId, f64)> = scores.into_iter().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        RankingTable {
            label: label.into(),
            entries: v
                .into_iter()
                .enumerate()
                .map(|(k, (station, score))| RankEntry {
                    station,
                    score,
                    rank: k + 1,
                })
                .collect(),
        }
    }

    pub fn from_score_vector(label: impl Into<String>, sv: &ScoreVector) -> Self {
        Self::from_scores(label, sv.iter().map(|(s, v)| (s.clone(), v)))
    }

    /// Ranking of the truth scores themselves.
    pub fn from_truth(truth: &BTreeMap<StationId, f64>) -> Self {
        Self::from_scores("truth", truth.iter().map(|(s, &v)| (s.clone(), v)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stations(&self) -> BTreeSet<&StationId> {
        self.entries.iter().map(|e| &e.station).collect()
    }

    /// Keeps only stations in `keep`, re-ranking densely from 1.
    pub fn restrict<V>(&self, keep: &BTreeMap<StationId, V>) -> RankingTable {
        RankingTable {
            label: self.label.clone(),
            entries: self
                .entries
                .iter()
                .filter(|e| keep.contains_key(&e.station))
                .enumerate()
                .map(|(k, e)| RankEntry {
                    station: e.station.clone(),
                    score: e.score,
                    rank: k + 1,
                })
                .collect(),
        }
    }

    fn rank_map(&self) -> BTreeMap<&StationId, usize> {
        self.entries.iter().map(|e| (&e.station, e.rank)).collect()
    }
}

pub fn write_ranking<W: Write>(out: W, table: &RankingTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RANKING_HEADER)?;
    for e in &table.entries {
        w.write_record([e.station.as_str(), &e.score.to_string(), &e.rank.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a `station_id,score,rank` table. Ranks must form a permutation of
/// `1..=N` and scores must not increase with rank.
pub fn parse_ranking<R: Read>(input: R, label: impl Into<String>) -> Result<RankingTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = rdr.byte_headers()?.clone();
    let header: Vec<&[u8]> = header.iter().map(trim_bytes).collect();
    if header != RANKING_HEADER.iter().map(|h| h.as_bytes()).collect::<Vec<_>>() {
        return Err(Error::Format(format!("ranking header must be `{}`", RANKING_HEADER.join(","))));
    }
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    let mut rec = csv::StringRecord::new();
    loop {
        let next = rdr.position().line() + 1;
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => return Err(Error::Format(format!("line {next}: {e}"))),
        }
        let line = rec.position().map_or(next, |p| p.line());
        if rec.len() != 3 {
            return Err(Error::Format(format!("line {line}: expected 3 fields")));
        }
        let id = rec[0].trim();
        if id.is_empty() || !seen.insert(id.to_owned()) {
            return Err(Error::Format(format!("line {line}: empty or duplicate station `{id}`")));
        }
        let score: f64 = rec[1]
            .trim()
            .parse()
            .ok()
            .filter(|s: &f64| !s.is_nan())
            .ok_or_else(|| Error::Format(format!("line {line}: bad score")))?;
        let rank: usize = rec[2]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: bad rank")))?;
        entries.push(RankEntry {
            station: StationId::new(id),
            score,
            rank,
        });
    }
    entries.sort_by_key(|e| e.rank);
    for (k, e) in entries.iter().enumerate() {
        if e.rank != k + 1 {
            return Err(Error::Format("ranks must be a permutation of 1..N".into()));
        }
    }
    if entries.windows(2).any(|w| w[1].score > w[0].score) {
        return Err(Error::Format("scores must not increase with rank".into()));
    }
    Ok(RankingTable {
        label: label.into(),
        entries,
    })
}

/// NDCG cutoff: the top `k` positions, or the whole list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cutoff {
    Top(usize),
    All,
}

impl Cutoff {
    fn resolve(self, n: usize) -> usize {
        match self {
            Cutoff::Top(k) => k.min(n),
            Cutoff::All => n,
        }
    }
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::Top(k) => write!(f, "{k}"),
            Cutoff::All => f.write_str("inf"),
        }
    }
}

impl FromStr for Cutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "all" | "∞" => Ok(Cutoff::All),
            t => match t.parse::<usize>() {
                Ok(k) if k > 0 => Ok(Cutoff::Top(k)),
                _ => Err(Error::Config(format!("bad cutoff `{s}`; expected a positive integer or `inf`"))),
            },
        }
    }
}

/// Parses `5,10,30,inf`; duplicates collapse, order is preserved.
pub fn parse_cutoffs(s: &str) -> Result<Vec<Cutoff>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let c: Cutoff = part.parse()?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RelevanceMode {
    /// Relevance is the raw truth score.
    Graded,
    /// Relevance is 1 for members of the truth top-k, else 0.
    Binary,
}

impl FromStr for RelevanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graded" => Ok(RelevanceMode::Graded),
            "binary" => Ok(RelevanceMode::Binary),
            other => Err(Error::Config(format!("unknown relevance mode `{other}`"))),
        }
    }
}

fn discount(position: usize) -> f64 {
    // position is 0-based; the first slot divides by log2(2) = 1.
    ((position + 2) as f64).log2()
}

/// Normalized discounted cumulative gain of `ranking` at `cutoff`.
///
/// Stations without truth are dropped from both the ranking and the ideal
/// ordering first. A cutoff beyond the remaining length covers the list.
pub fn ndcg(
    ranking: &RankingTable,
    truth: &BTreeMap<StationId, f64>,
    cutoff: Cutoff,
    mode: RelevanceMode,
) -> Result<f64> {
    let kept = ranking.restrict(truth);
    let n = kept.len();
    if n == 0 {
        return Err(Error::Undefined("no ranked station has a truth score".into()));
    }
    let k = cutoff.resolve(n);
    let rels: Vec<f64> = match mode {
        RelevanceMode::Graded => kept.entries.iter().map(|e| truth[&e.station]).collect(),
        RelevanceMode::Binary => {
            let sub: BTreeMap<StationId, f64> = kept
                .entries
                .iter()
                .map(|e| (e.station.clone(), truth[&e.station]))
                .collect();
            let top: BTreeSet<StationId> = RankingTable::from_truth(&sub)
                .entries
                .into_iter()
                .take(k)
                .map(|e| e.station)
                .collect();
            kept.entries
                .iter()
                .map(|e| if top.contains(&e.station) { 1.0 } else { 0.0 })
                .collect()
        }
    };
    let dcg: f64 = rels[..k].iter().enumerate().map(|(i, r)| r / discount(i)).sum();
    let mut ideal = rels.clone();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal[..k].iter().enumerate().map(|(i, r)| r / discount(i)).sum();
    if idcg <= 0.0 {
        return Err(Error::Undefined(format!("ideal DCG@{cutoff} is zero")));
    }
    Ok(dcg / idcg)
}

/// Pearson correlation of (rank position, truth score) after dropping
/// stations without truth and re-ranking densely.
pub fn pearson_rank_vs_score(ranking: &RankingTable, truth: &BTreeMap<StationId, f64>) -> Result<f64> {
    let kept = ranking.restrict(truth);
    if kept.len() < 3 {
        return Err(Error::Undefined(format!(
            "Pearson r needs at least 3 stations with truth, found {}",
            kept.len()
        )));
    }
    let xs: Vec<f64> = kept.entries.iter().map(|e| e.rank as f64).collect();
    let ys: Vec<f64> = kept.entries.iter().map(|e| truth[&e.station]).collect();
    pearson(&xs, &ys)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Improvement {
    /// `sum |rA(i) - rB(i)|`.
    pub upper: i64,
    /// `sum (|rA(i) - rT(i)| - |rB(i) - rT(i)|)`; positive when B is closer
    /// to the truth ranking than A.
    pub relative: i64,
}

pub fn ranking_improvement(a: &RankingTable, b: &RankingTable, truth: &RankingTable) -> Result<Improvement> {
    if a.stations() != b.stations() || a.stations() != truth.stations() {
        return Err(Error::StationMismatch(format!(
            "`{}`, `{}` and `{}` rank different station sets",
            a.label, b.label, truth.label
        )));
    }
    let (ra, rb, rt) = (a.rank_map(), b.rank_map(), truth.rank_map());
    let mut imp = Improvement { upper: 0, relative: 0 };
    for (s, &x) in &ra {
        let (x, y, t) = (x as i64, rb[s] as i64, rt[s] as i64);
        imp.upper += (x - y).abs();
        imp.relative += (x - t).abs() - (y - t).abs();
    }
    Ok(imp)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub label: String,
    pub mode: RelevanceMode,
    pub pearson_r: Option<f64>,
    /// NDCG per cutoff, keyed `5`, `10`, ..., `inf`.
    pub ndcg: BTreeMap<String, Option<f64>>,
    pub baseline: Option<String>,
    pub improvement_upper: Option<i64>,
    pub improvement_relative: Option<i64>,
    pub excluded_stations: Vec<StationId>,
    /// Reasons for any metric left undefined.
    pub notes: Vec<String>,
}

/// Scores one ranking. With a `baseline`, also the improvement of `ranking`
/// over it relative to the truth order.
pub fn evaluate(
    ranking: &RankingTable,
    truth: &BTreeMap<StationId, f64>,
    cutoffs: &[Cutoff],
    mode: RelevanceMode,
    baseline: Option<&RankingTable>,
) -> EvalReport {
    let mut notes = Vec::new();
    let mut note = |what: &str, e: Error| notes.push(format!("{what}: {e}"));
    let pearson_r = pearson_rank_vs_score(ranking, truth)
        .map_err(|e| note("pearson_r", e))
        .ok();
    let mut ndcg_map = BTreeMap::new();
    for &c in cutoffs {
        let v = ndcg(ranking, truth, c, mode)
            .map_err(|e| note(&format!("ndcg@{c}"), e))
            .ok();
        ndcg_map.insert(c.to_string(), v);
    }
    let (mut upper, mut relative) = (None, None);
    if let Some(base) = baseline {
        let b = ranking.restrict(truth);
        let a = base.restrict(truth);
        let sub: BTreeMap<StationId, f64> = b
            .entries
            .iter()
            .map(|e| (e.station.clone(), truth[&e.station]))
            .collect();
        match ranking_improvement(&a, &b, &RankingTable::from_truth(&sub)) {
            Ok(imp) => {
                upper = Some(imp.upper);
                relative = Some(imp.relative);
            }
            Err(e) => note("improvement", e),
        }
    }
    let excluded_stations = ranking
        .entries
        .iter()
        .filter(|e| !truth.contains_key(&e.station))
        .map(|e| e.station.clone())
        .collect();
    EvalReport {
        label: ranking.label.clone(),
        mode,
        pearson_r,
        ndcg: ndcg_map,
        baseline: baseline.map(|b| b.label.clone()),
        improvement_upper: upper,
        improvement_relative: relative,
        excluded_stations,
        notes,
    }
}

/// One row per report: label, status, Pearson r, NDCG per cutoff, and the
/// improvement over the baseline when there is one. Undefined values are
/// written as [`ERROR_MARKER`](crate::pipeline::ERROR_MARKER).
pub fn write_eval_matrix<W: Write>(out: W, reports: &[EvalReport], cutoffs: &[Cutoff]) -> Result<()> {
    fn cell<T: ToString>(v: Option<T>) -> String {
        v.map_or_else(|| crate::pipeline::ERROR_MARKER.to_owned(), |x| x.to_string())
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["ranking".to_owned(), "status".to_owned(), "r".to_owned()];
    header.extend(cutoffs.iter().map(|c| format!("ndcg@{c}")));
    header.extend(["baseline".to_owned(), "upper".to_owned(), "relative".to_owned()]);
    w.write_record(&header)?;
    for r in reports {
        let mut row = vec![
            r.label.clone(),
            if r.notes.is_empty() { "ok".into() } else { r.notes.join("; ") },
            cell(r.pearson_r),
        ];
        row.extend(cutoffs.iter().map(|k| cell(r.ndcg.get(&k.to_string()).copied().flatten())));
        match &r.baseline {
            Some(b) => row.extend([b.clone(), cell(r.improvement_upper), cell(r.improvement_relative)]),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
