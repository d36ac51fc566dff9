//! `mobmotif`: command-line front-end for the mobility-motif pipeline.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use mobility_motifs::centrality::{score_network, Measure, SolverConfig};
use mobility_motifs::eval::{
    evaluate, parse_cutoffs, parse_ranking, write_eval_matrix, write_ranking, Cutoff, RankingTable, RelevanceMode,
};
use mobility_motifs::ingest::{parse_records, partition_by_day, write_records, write_rejects, DayFilter, IngestConfig};
use mobility_motifs::motif::{build_motifs, motif_distribution, write_distribution, DEFAULT_NODE_CAP};
use mobility_motifs::netbuild::{build, read_network, write_network, Network, Strategy, Weighting};
use mobility_motifs::pipeline::{run_compare, CompareConfig, PipelineInputs};
use mobility_motifs::station::{parse_stations, write_stations};
use mobility_motifs::synthgen::{generate, parse_synth_spec, SynthSpec};
use mobility_motifs::{Error, ErrorClass, StationId, StationUniverse};

#[derive(Parser, Debug)]
#[command(name = "mobmotif", version, about = "Daily mobility motifs and motif-aggregated station networks")]
struct Cli {
    /// Seed for the synthetic generator; overrides `seed` in a synth config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for outputs without an explicit path.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate record files; write accepted rows and rejected rows.
    Ingest(IngestArgs),
    /// Classify passenger-days into motif classes and write their frequencies.
    Motifs(MotifsArgs),
    /// Aggregate records into one network and write its edge list.
    Build(BuildArgs),
    /// Score the nodes of an edge list with one centrality measure.
    Rank(RankArgs),
    /// Score rankings against ground-truth station importance.
    Eval(EvalArgs),
    /// Generate a synthetic corpus with planted station importance.
    Synth(SynthArgs),
    /// Run every strategy × measure cell and write the comparison tables.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Record files with header `card_id,depart_time,origin,destination`.
    #[arg(required = true)]
    records: Vec<PathBuf>,

    /// Station universe (`station_id,name,ground_truth`); rows naming other
    /// stations are rejected.
    #[arg(long)]
    stations: Option<PathBuf>,

    /// Keep only weekdays or weekends.
    #[arg(long, default_value = "all")]
    filter: DayFilter,

    /// Seconds added to epoch timestamps to get local time.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    utc_offset: i32,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// PageRank damping factor.
    #[arg(long, default_value_t = 0.85)]
    damping: f64,

    /// Convergence tolerance (L1 change between iterations).
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,

    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            damping: self.damping,
            tolerance: self.tol,
            max_iterations: self.max_iter,
        }
    }
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args, Debug)]
struct MotifsArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Keep only the most frequent classes.
    #[arg(long)]
    top_k: Option<usize>,

    /// Days visiting more stations are pooled into one overflow class.
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,

    /// Output path (default `<out-dir>/motifs.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    input: InputArgs,

    /// classic, classic-undirected, motif-based, motif-wise or debruijn.
    #[arg(long)]
    strategy: Strategy,

    /// unit or normalized; motif-wise only.
    #[arg(long)]
    weighting: Option<Weighting>,

    /// Output path (default `<out-dir>/network_<strategy>.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RankArgs {
    /// Edge list (`src,dst,weight` or the memory-network layout).
    network: PathBuf,

    /// pagerank, eigenvector, currentflow or clustering.
    #[arg(long)]
    measure: Measure,

    /// Read a station edge list as undirected.
    #[arg(long)]
    undirected: bool,

    /// Station universe; its stations are all ranked, unvisited ones as
    /// isolated nodes.
    #[arg(long)]
    stations: Option<PathBuf>,

    #[command(flatten)]
    solver: SolverArgs,

    /// Output path (default `<out-dir>/ranking_<network>_<measure>.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Station file carrying the ground-truth column.
    #[arg(long)]
    truth: PathBuf,

    /// Ranking files; the first one is the baseline for the others.
    #[arg(long = "ranking", required = true)]
    rankings: Vec<PathBuf>,

    /// Comma-separated cutoffs; `inf` covers the whole list.
    #[arg(long, default_value = "5,10,30,inf")]
    k: String,

    #[arg(long, default_value = "graded")]
    mode: RelevanceMode,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// File of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,

    /// `key=value` overrides applied after the config file. Any `mix.*`
    /// override replaces the whole template mix.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Records output (default `<out-dir>/records.csv`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Station file output with planted importance (default
    /// `<out-dir>/stations.csv`).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Record files.
    #[arg(required = true)]
    records: Vec<PathBuf>,

    /// Station universe with ground truth.
    #[arg(long)]
    stations: PathBuf,

    /// Comma-separated strategies; the first is the improvement baseline.
    #[arg(long, value_delimiter = ',', default_value = "classic-undirected,motif-based")]
    strategies: Vec<Strategy>,

    /// Comma-separated measures.
    #[arg(long, value_delimiter = ',', default_value = "pagerank")]
    measures: Vec<Measure>,

    #[arg(long, default_value = "5,10,30,inf")]
    k: String,

    #[arg(long, default_value = "graded")]
    mode: RelevanceMode,

    #[arg(long, default_value = "all")]
    filter: DayFilter,

    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    utc_offset: i32,

    #[arg(long, default_value_t = 15)]
    top_k: usize,

    #[command(flatten)]
    solver: SolverArgs,
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> anyhow::Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn read_universe(path: &Path) -> anyhow::Result<StationUniverse> {
    parse_stations(open(path)?).with_context(|| format!("reading {}", path.display()))
}

struct Loaded {
    records: Vec<mobility_motifs::ingest::OdRecord>,
    rejects: Vec<mobility_motifs::ingest::RejectedRow>,
    filtered: usize,
}

fn load(input: &InputArgs) -> anyhow::Result<Loaded> {
    let universe = input.stations.as_deref().map(read_universe).transpose()?;
    let cfg = IngestConfig {
        stations: universe.map(|u| u.id_set()),
        utc_offset_secs: input.utc_offset,
        day_filter: input.filter,
    };
    let mut loaded = Loaded {
        records: Vec::new(),
        rejects: Vec::new(),
        filtered: 0,
    };
    for path in &input.records {
        let parsed = parse_records(open(path)?, &cfg).with_context(|| format!("reading {}", path.display()))?;
        loaded.records.extend(parsed.records);
        loaded.rejects.extend(parsed.rejects);
        loaded.filtered += parsed.filtered;
    }
    Ok(loaded)
}

fn finish(mut w: BufWriter<File>) -> anyhow::Result<()> {
    w.flush()?;
    Ok(())
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "input".to_owned(), |s| s.to_string_lossy().into_owned())
}

fn cmd_ingest(out_dir: &Path, args: &IngestArgs) -> anyhow::Result<ExitCode> {
    let loaded = load(&args.input)?;
    write_records(create(&out_dir.join("records.csv"))?, &loaded.records)?;
    write_rejects(create(&out_dir.join("rejects.csv"))?, &loaded.rejects)?;
    eprintln!(
        "accepted {} rows, rejected {}, filtered out {}",
        loaded.records.len(),
        loaded.rejects.len(),
        loaded.filtered
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_motifs(out_dir: &Path, args: &MotifsArgs) -> anyhow::Result<ExitCode> {
    if args.node_cap == 0 || args.node_cap > 10 {
        return Err(Error::Config(format!("node cap must lie in 1..=10, got {}", args.node_cap)).into());
    }
    let loaded = load(&args.input)?;
    let motifs = build_motifs(&partition_by_day(&loaded.records));
    let dist = motif_distribution(&motifs, args.top_k, args.node_cap);
    let path = args.out.clone().unwrap_or_else(|| out_dir.join("motifs.csv"));
    write_distribution(create(&path)?, &dist)?;
    eprintln!("{} passenger-days in {} classes", motifs.len(), dist.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_build(out_dir: &Path, args: &BuildArgs) -> anyhow::Result<ExitCode> {
    let strategy = match (args.strategy, args.weighting) {
        (Strategy::MotifWise(_), Some(w)) => Strategy::MotifWise(w),
        (s, None) => s,
        (s, Some(_)) => {
            return Err(Error::Config(format!("--weighting applies to motif-wise only, not `{s}`")).into())
        }
    };
    let loaded = load(&args.input)?;
    let days = partition_by_day(&loaded.records);
    let net = build(strategy, &build_motifs(&days), &days);
    let path = args.out.clone().unwrap_or_else(|| out_dir.join(format!("network_{strategy}.csv")));
    write_network(create(&path)?, &net)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_rank(out_dir: &Path, args: &RankArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.solver.config();
    cfg.validate()?;
    let net = read_network(open(&args.network)?, !args.undirected)
        .with_context(|| format!("reading {}", args.network.display()))?;
    let stations: Vec<StationId> = match &args.stations {
        Some(p) => read_universe(p)?.ids().cloned().collect(),
        None => Vec::new(),
    };
    let net = match net {
        Network::Station(g) => Network::Station(g.with_stations(&stations)),
        memory => memory,
    };
    let scores = score_network(&net, args.measure, &cfg, &stations)?;
    let label = format!("{}_{}", file_stem(&args.network), args.measure);
    let table = RankingTable::from_score_vector(&label, &scores);
    let path = args.out.clone().unwrap_or_else(|| out_dir.join(format!("ranking_{label}.csv")));
    write_ranking(create(&path)?, &table)?;
    eprintln!(
        "{} stations, {} iterations, residual {:e}",
        table.len(),
        scores.meta.iterations,
        scores.meta.residual
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(out_dir: &Path, args: &EvalArgs) -> anyhow::Result<ExitCode> {
    let cutoffs: Vec<Cutoff> = parse_cutoffs(&args.k)?;
    let truth = read_universe(&args.truth)?.truth();
    if truth.is_empty() {
        return Err(Error::Format(format!("{} has no ground-truth values", args.truth.display())).into());
    }
    let mut tables = Vec::new();
    for path in &args.rankings {
        let label = file_stem(path);
        if tables.iter().any(|t: &RankingTable| t.label == label) {
            return Err(Error::Config(format!("two rankings named `{label}`")).into());
        }
        tables.push(parse_ranking(open(path)?, label).with_context(|| format!("reading {}", path.display()))?);
    }
    let mut reports = Vec::new();
    for (k, table) in tables.iter().enumerate() {
        let baseline = (k > 0).then(|| &tables[0]);
        let report = evaluate(table, &truth, &cutoffs, args.mode, baseline);
        let mut f = create(&out_dir.join(format!("eval_{}.json", table.label)))?;
        serde_json::to_writer_pretty(&mut f, &report)?;
        writeln!(f)?;
        finish(f)?;
        reports.push(report);
    }
    write_eval_matrix(create(&out_dir.join("eval_matrix.csv"))?, &reports, &cutoffs)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(out_dir: &Path, seed: Option<u64>, args: &SynthArgs) -> anyhow::Result<ExitCode> {
    let mut spec = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_synth_spec(&text)?
        }
        None => SynthSpec::default(),
    };
    let mut mix_started = false;
    for kv in &args.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(Error::Config(format!("override `{kv}` is not KEY=VALUE")).into());
        };
        spec.set(k.trim(), v.trim(), &mut mix_started)?;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    let corpus = generate(&spec.resolve()?)?;
    let records = args.out.clone().unwrap_or_else(|| out_dir.join("records.csv"));
    let truth = args.truth.clone().unwrap_or_else(|| out_dir.join("stations.csv"));
    write_records(create(&records)?, &corpus.records)?;
    write_stations(create(&truth)?, &corpus.truth)?;
    eprintln!("{} records over {} stations", corpus.records.len(), corpus.truth.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(out_dir: &Path, args: &CompareArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = CompareConfig::new(out_dir);
    cfg.strategies = args.strategies.clone();
    cfg.measures = args.measures.clone();
    cfg.cutoffs = parse_cutoffs(&args.k)?;
    cfg.mode = args.mode;
    cfg.solver = args.solver.config();
    cfg.motif_top_k = args.top_k;
    let inputs = PipelineInputs {
        records: args.records.clone(),
        stations: args.stations.clone(),
        day_filter: args.filter,
        utc_offset_secs: args.utc_offset,
    };
    let summary = run_compare(&inputs, &cfg)?;
    eprintln!(
        "{} records accepted, {} rejected, {} passenger-days, {} of {} cells failed",
        summary.accepted_records,
        summary.rejected_records,
        summary.passenger_days,
        summary.failed_cells(),
        summary.cells.len()
    );
    for c in &summary.cells {
        if let Err(e) = &c.report {
            eprintln!("  {}/{}: {e}", c.strategy, c.measure);
        }
    }
    Ok(if summary.failed_cells() > 0 { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::class) {
        Some(ErrorClass::Config) => 1,
        Some(ErrorClass::Solver) => 3,
        // Unreadable files and malformed inputs are data problems.
        Some(ErrorClass::Data) | None => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let out = cli.out_dir.as_path();
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(out, a),
        Command::Motifs(a) => cmd_motifs(out, a),
        Command::Build(a) => cmd_build(out, a),
        Command::Rank(a) => cmd_rank(out, a),
        Command::Eval(a) => cmd_eval(out, a),
        Command::Synth(a) => cmd_synth(out, cli.seed, a),
        Command::Compare(a) => cmd_compare(out, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
