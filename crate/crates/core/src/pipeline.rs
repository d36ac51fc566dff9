//! End-to-end comparison of network strategies and centrality measures.
//!
//! Every intermediate artifact is written to the output directory: rejected
//! rows, the motif distribution, one edge list per strategy, one ranking and
//! one evaluation report per grid cell, plus the cross-strategy matrix and
//! the ranking-improvement table.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::centrality::{score_network, Measure, ScoreVector, SolverConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate, write_ranking, Cutoff, EvalReport, RankingTable, RelevanceMode};
use crate::ingest::{parse_records, partition_by_day, write_rejects, DayFilter, IngestConfig, OdRecord, RejectedRow};
use crate::motif::{build_motifs, motif_distribution, write_distribution, DEFAULT_NODE_CAP};
use crate::netbuild::{build, write_network, Network, Strategy};
use crate::station::{parse_stations, StationId, StationUniverse};

/// Marker written into matrix cells whose computation failed.
pub const ERROR_MARKER: &str = "ERR";

#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub strategies: Vec<Strategy>,
    pub measures: Vec<Measure>,
    pub cutoffs: Vec<Cutoff>,
    pub mode: RelevanceMode,
    pub solver: SolverConfig,
    pub motif_top_k: usize,
    pub out_dir: PathBuf,
}

impl CompareConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        CompareConfig {
            strategies: vec![Strategy::ClassicUndirected, Strategy::MotifBased],
            measures: vec![Measure::PageRank],
            cutoffs: vec![Cutoff::Top(5), Cutoff::Top(10), Cutoff::Top(30), Cutoff::All],
            mode: RelevanceMode::Graded,
            solver: SolverConfig::default(),
            motif_top_k: 15,
            out_dir: out_dir.into(),
        }
    }

    /// Rejects bad grids before any data is touched.
    pub fn validate(&self) -> Result<()> {
        if self.strategies.len() < 2 {
            return Err(Error::Config("compare needs at least two strategies".into()));
        }
        if self.measures.is_empty() || self.cutoffs.is_empty() {
            return Err(Error::Config("compare needs at least one measure and one cutoff".into()));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(s) {
                return Err(Error::Config(format!("strategy `{s}` listed twice")));
            }
        }
        for &m in &self.measures {
            for &s in &self.strategies {
                if !m.supports(s) {
                    return Err(Error::Config(format!("measure `{m}` is not defined on `{s}` networks")));
                }
            }
        }
        self.solver.validate()
    }
}

/// Inputs of a pipeline run, paths resolved.
#[derive(Debug, Clone)]
pub struct PipelineInputs {
    pub records: Vec<PathBuf>,
    pub stations: PathBuf,
    pub day_filter: DayFilter,
    pub utc_offset_secs: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub strategy: Strategy,
    pub measure: Measure,
    /// `Err` carries the failure message.
    pub report: std::result::Result<EvalReport, String>,
}

#[derive(Debug, Clone)]
pub struct CompareSummary {
    pub accepted_records: usize,
    pub rejected_records: usize,
    pub passenger_days: usize,
    pub cells: Vec<CellOutcome>,
}

impl CompareSummary {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.report.is_err()).count()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Reads the station universe and every record file.
pub fn load_inputs(inputs: &PipelineInputs) -> Result<(StationUniverse, Vec<OdRecord>, Vec<RejectedRow>)> {
    let universe = parse_stations(File::open(&inputs.stations)?)?;
    let cfg = IngestConfig {
        stations: Some(universe.id_set()),
        utc_offset_secs: inputs.utc_offset_secs,
        day_filter: inputs.day_filter,
    };
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for path in &inputs.records {
        let parsed = parse_records(File::open(path)?, &cfg)?;
        records.extend(parsed.records);
        rejects.extend(parsed.rejects);
    }
    Ok((universe, records, rejects))
}

/// Runs the full grid from files on disk.
pub fn run_compare(inputs: &PipelineInputs, cfg: &CompareConfig) -> Result<CompareSummary> {
    cfg.validate()?;
    let (universe, records, rejects) = load_inputs(inputs)?;
    compare_records(&universe, &records, &rejects, cfg)
}

fn cell_label(s: Strategy, m: Measure) -> String {
    format!("{s}/{m}")
}

/// Runs the full grid on already-parsed records.
pub fn compare_records(
    universe: &StationUniverse,
    records: &[OdRecord],
    rejects: &[RejectedRow],
    cfg: &CompareConfig,
) -> Result<CompareSummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let out = |name: &str| cfg.out_dir.join(name);

    write_rejects(create(&out("rejects.csv"))?, rejects)?;
    let days = partition_by_day(records);
    let motifs = build_motifs(&days);
    write_distribution(
        create(&out("motifs.csv"))?,
        &motif_distribution(&motifs, Some(cfg.motif_top_k), DEFAULT_NODE_CAP),
    )?;

    // Common node set: every visited station.
    let visited: Vec<StationId> = {
        let mut v: Vec<StationId> = motifs.iter().flat_map(|m| m.nodes.iter().cloned()).collect();
        v.sort();
        v.dedup();
        v
    };

    let networks: Vec<(Strategy, Network)> = cfg
        .strategies
        .par_iter()
        .map(|&s| {
            let net = match build(s, &motifs, &days) {
                Network::Station(g) => Network::Station(g.with_stations(&visited)),
                memory => memory,
            };
            (s, net)
        })
        .collect();
    for (s, net) in &networks {
        write_network(create(&out(&format!("network_{s}.csv")))?, net)?;
    }

    let grid: Vec<(Strategy, Measure, &Network)> = cfg
        .measures
        .iter()
        .flat_map(|&m| networks.iter().map(move |(s, net)| (*s, m, net)))
        .collect();
    let scored: Vec<(Strategy, Measure, Result<ScoreVector>)> = grid
        .par_iter()
        .map(|&(s, m, net)| (s, m, score_network(net, m, &cfg.solver, &visited)))
        .collect();

    let truth = universe.truth();
    let mut tables: BTreeMap<(Measure, Strategy), RankingTable> = BTreeMap::new();
    for (s, m, res) in &scored {
        if let Ok(sv) = res {
            let table = RankingTable::from_score_vector(cell_label(*s, *m), sv);
            write_ranking(create(&out(&format!("ranking_{s}_{m}.csv")))?, &table)?;
            tables.insert((*m, *s), table);
        }
    }

    let baseline_strategy = cfg.strategies[0];
    let mut cells = Vec::with_capacity(scored.len());
    for (s, m, res) in scored {
        let report = match res {
            Ok(_) => {
                let table = &tables[&(m, s)];
                let baseline = if s == baseline_strategy {
                    None
                } else {
                    tables.get(&(m, baseline_strategy))
                };
                let report = evaluate(table, &truth, &cfg.cutoffs, cfg.mode, baseline);
                let mut f = create(&out(&format!("eval_{s}_{m}.json")))?;
                serde_json::to_writer_pretty(&mut f, &report).map_err(|e| Error::Io(e.into()))?;
                writeln!(f)?;
                f.flush()?;
                Ok(report)
            }
            Err(e) => Err(e.to_string()),
        };
        cells.push(CellOutcome {
            strategy: s,
            measure: m,
            report,
        });
    }

    write_matrix(create(&out("matrix.csv"))?, &cells, &cfg.cutoffs)?;
    write_improvements(create(&out("improvements.csv"))?, &cells)?;

    Ok(CompareSummary {
        accepted_records: records.len(),
        rejected_records: rejects.len(),
        passenger_days: days.len(),
        cells,
    })
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| ERROR_MARKER.to_owned(), |x| x.to_string())
}

/// One row per (strategy, measure): status, Pearson r, then NDCG per cutoff.
pub fn write_matrix<W: Write>(out: W, cells: &[CellOutcome], cutoffs: &[Cutoff]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["strategy".to_owned(), "measure".to_owned(), "status".to_owned(), "r".to_owned()];
    header.extend(cutoffs.iter().map(|c| format!("ndcg@{c}")));
    w.write_record(&header)?;
    for c in cells {
        let mut row = vec![c.strategy.to_string(), c.measure.to_string()];
        match &c.report {
            Ok(r) => {
                row.push(if r.notes.is_empty() { "ok".into() } else { r.notes.join("; ") });
                row.push(fmt_opt(r.pearson_r));
                row.extend(cutoffs.iter().map(|k| fmt_opt(r.ndcg.get(&k.to_string()).copied().flatten())));
            }
            Err(e) => {
                row.push(format!("error: {e}"));
                row.extend(std::iter::repeat_n(ERROR_MARKER.to_owned(), cutoffs.len() + 1));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_improvements<W: Write>(out: W, cells: &[CellOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["measure", "baseline", "strategy", "upper", "relative"])?;
    for c in cells {
        if let Ok(r) = &c.report {
            if let Some(base) = &r.baseline {
                let base = base.split('/').next().unwrap_or(base);
                w.write_record([
                    c.measure.to_string(),
                    base.to_owned(),
                    c.strategy.to_string(),
                    fmt_opt(r.improvement_upper),
                    fmt_opt(r.improvement_relative),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_grids() {
        let mut cfg = CompareConfig::new("unused");
        cfg.strategies = vec![Strategy::Classic, Strategy::MotifWise(crate::netbuild::Weighting::Unit)];
        cfg.measures = vec![Measure::Clustering];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));

        cfg.strategies = vec![Strategy::Classic];
        cfg.measures = vec![Measure::PageRank];
        assert!(cfg.validate().is_err());

        cfg.strategies = vec![Strategy::Classic, Strategy::Classic];
        assert!(cfg.validate().is_err());

        cfg.strategies = vec![Strategy::ClassicUndirected, Strategy::MotifBased];
        cfg.measures = Measure::ALL.to_vec();
        assert!(cfg.validate().is_ok());
    }
}
