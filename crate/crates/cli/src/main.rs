//! Command-line driver: end-to-end feasibility tests of static
//! latent-homophily explanations on citation/coauthor data, plus the
//! supporting ingest, simulation and export plumbing.

use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use homsieve_core::error::Error;
use homsieve_core::experiment::{
    digest_bytes, run_windows, test_series, ExperimentConfig, RunReport,
};
use homsieve_core::network::{
    build_coauthor_graph, direct_by_degree, ingest_records, validate_year_range, write_records_csv,
    write_records_jsonl, CitationRecord, DirectedInfluenceGraph, IngestFormat, NodeStateSeries,
    WindowScheme, YearRange,
};
use homsieve_core::relaxation::{build_relaxation, CertTolerances, FeasibilityConfig};
use homsieve_core::sdp::{SdpStatus, SolverOptions};
use homsieve_core::simulator::{self, SimulationConfig};
use homsieve_core::statistics::{pair_sequence_counts, EmpiricalDistribution};
use homsieve_core::synthetic::{generate_records, SyntheticConfig};

#[derive(Parser)]
#[command(
    name = "homsieve",
    version,
    about = "Test whether correlations in temporal coauthor networks are explainable by static latent homophily"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Seed for randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Relaxation level of the moment hierarchy.
    #[arg(long, global = true, default_value_t = 3)]
    level: usize,

    /// Number of time slices per window.
    #[arg(long = "T", global = true, default_value_t = 3)]
    slices: usize,

    /// Worker threads for independent windows.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Most negative admissible certificate Gram eigenvalue.
    #[arg(long = "tol-psd", global = true, default_value_t = 1e-8)]
    tol_psd: f64,

    /// Certificate identity-residual bound (max norm).
    #[arg(long = "tol-id", global = true, default_value_t = 1e-8)]
    tol_id: f64,

    /// Required certificate margin.
    #[arg(long = "tol-margin", global = true, default_value_t = 1e-6)]
    tol_margin: f64,

    /// Solver feasibility tolerance.
    #[arg(long = "tol-feas", global = true, default_value_t = 1e-7)]
    tol_feas: f64,

    /// Solver gap tolerance.
    #[arg(long = "tol-gap", global = true, default_value_t = 1e-6)]
    tol_gap: f64,

    /// Solver iteration cap.
    #[arg(long = "max-iter", global = true, default_value_t = 200)]
    max_iter: usize,

    /// Refuse to test pooled distributions smaller than this.
    #[arg(long = "min-samples", global = true, default_value_t = 1000)]
    min_samples: u64,

    /// Optional interval half-width on the observable equalities.
    #[arg(long, global = true, default_value_t = 0.0)]
    epsilon: f64,
}

impl Cli {
    fn feasibility(&self) -> FeasibilityConfig {
        FeasibilityConfig {
            level: self.level,
            epsilon: self.epsilon,
            min_samples: self.min_samples,
            tolerances: CertTolerances {
                tol_psd: self.tol_psd,
                tol_id: self.tol_id,
                tol_margin: self.tol_margin,
            },
            witness_tol: 1e-7,
            solver: SolverOptions {
                max_iterations: self.max_iter,
                tol_feas: self.tol_feas,
                tol_gap: self.tol_gap,
                ..Default::default()
            },
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate citation records, writing them in canonical form.
    Ingest(IngestArgs),
    /// Generate a synthetic citation corpus (and optionally its influence graph).
    GenSynthetic(GenSyntheticArgs),
    /// Run the copy dynamics on a directed influence graph.
    Simulate(SimulateArgs),
    /// Pool paired sequence statistics from a state series.
    Stats(StatsArgs),
    /// Run the windowed latent-homophily feasibility test.
    Test(TestArgs),
    /// Export the moment relaxation of a distribution in SDPA sparse format.
    ExportSdpa(ExportArgs),
    /// Solve an SDPA sparse problem with the built-in solver.
    Solve(SolveArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Input records (csv or jsonl).
    #[arg(long)]
    input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// Output path; `-` or omitted writes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format (csv or jsonl).
    #[arg(long, default_value = "jsonl")]
    output_format: String,
    /// Reject records before this year.
    #[arg(long)]
    min_year: Option<i32>,
    /// Reject records at or after this year.
    #[arg(long)]
    max_year: Option<i32>,
}

#[derive(Args)]
struct GenSyntheticArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 100)]
    authors: usize,
    /// Year range `start:end` (half open).
    #[arg(long, default_value = "1950:2010")]
    years: String,
    #[arg(long, default_value_t = 40)]
    papers_per_year: usize,
    /// Authors per paper, `min:max`.
    #[arg(long, default_value = "1:4")]
    authors_per_paper: String,
    #[arg(long, default_value_t = 200)]
    reference_pool: usize,
    /// References per paper, `min:max`.
    #[arg(long, default_value = "0:8")]
    refs_per_paper: String,
    #[arg(long, default_value = "jsonl")]
    format: String,
    /// Also write the degree-directed influence graph derived from the corpus.
    #[arg(long)]
    graph_out: Option<PathBuf>,
    /// Edge-defining window `start:end` for --graph-out (defaults to the full range).
    #[arg(long)]
    edge_window: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Directed influence graph (JSON).
    #[arg(long)]
    graph: PathBuf,
    /// Output series path; omitted writes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Arc picks per step (defaults to the number of arcs).
    #[arg(long)]
    picks: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    /// State series (JSON).
    #[arg(long)]
    series: PathBuf,
    /// Directed influence graph (JSON).
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    /// Citation records to test.
    #[arg(long, conflicts_with = "series")]
    records: Option<PathBuf>,
    /// Record format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// Precomputed state series (JSON); requires --graph.
    #[arg(long, requires = "graph")]
    series: Option<PathBuf>,
    /// Directed influence graph for --series.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Window scheme: `three-period` or `span:<years>:<start>:<stride>`.
    #[arg(long, default_value = "three-period")]
    scheme: String,
    /// Corpus year range `start:end`; derived from the records when omitted.
    #[arg(long)]
    corpus: Option<String>,
    /// Report output path; omitted writes JSON to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Empirical distribution (JSON).
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem in SDPA sparse format.
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Input and configuration problems exit with 2, pipeline failures with 1.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::MalformedRecord { .. }
        | Error::UnknownFormat(_)
        | Error::SdpaParse { .. }
        | Error::InvalidInput(_)
        | Error::LevelTooLow { .. }
        | Error::InvalidProblem(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Cmd::Ingest(args) => cmd_ingest(args),
        Cmd::GenSynthetic(args) => cmd_gen_synthetic(cli, args),
        Cmd::Simulate(args) => cmd_simulate(cli, args),
        Cmd::Stats(args) => cmd_stats(args),
        Cmd::Test(args) => cmd_test(cli, args),
        Cmd::ExportSdpa(args) => cmd_export_sdpa(cli, args),
        Cmd::Solve(args) => cmd_solve(cli, args),
    }
}

fn parse_range(s: &str, what: &str) -> Result<(i32, i32), Error> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidInput(format!("{what}: expected `start:end`, got `{s}`")))?;
    let lo = a
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("{what}: bad integer `{a}`")))?;
    let hi = b
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("{what}: bad integer `{b}`")))?;
    Ok((lo, hi))
}

fn parse_usize_range(s: &str, what: &str) -> Result<(usize, usize), Error> {
    let (lo, hi) = parse_range(s, what)?;
    if lo < 0 || hi < 0 {
        return Err(Error::InvalidInput(format!("{what}: must be nonnegative")));
    }
    Ok((lo as usize, hi as usize))
}

fn parse_scheme(s: &str) -> Result<WindowScheme, Error> {
    let lower = s.to_ascii_lowercase();
    if lower == "three-period" || lower == "three_period" {
        return Ok(WindowScheme::ThreePeriod);
    }
    let parts: Vec<&str> = lower.split(':').collect();
    if parts.len() == 4 && parts[0] == "span" {
        let parse = |t: &str, what: &str| -> Result<i32, Error> {
            t.parse()
                .map_err(|_| Error::InvalidInput(format!("scheme {what}: bad integer `{t}`")))
        };
        return Ok(WindowScheme::Span {
            span_years: parse(parts[1], "span")?,
            first_start: parse(parts[2], "start")?,
            stride: parse(parts[3], "stride")?,
        });
    }
    Err(Error::InvalidInput(format!(
        "unknown scheme `{s}` (expected `three-period` or `span:<years>:<start>:<stride>`)"
    )))
}

fn format_from(path: &Path, explicit: Option<&str>) -> Result<IngestFormat, Error> {
    if let Some(f) = explicit {
        return f.parse();
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(IngestFormat::Csv),
        Some("jsonl") | Some("json") => Ok(IngestFormat::Jsonl),
        other => Err(Error::UnknownFormat(other.unwrap_or("<none>").to_string())),
    }
}

fn load_records(
    path: &Path,
    explicit: Option<&str>,
) -> Result<(Vec<CitationRecord>, String), Error> {
    let format = format_from(path, explicit)?;
    let bytes = std::fs::read(path)?;
    let digest = digest_bytes(&bytes);
    let records = ingest_records(BufReader::new(bytes.as_slice()), format)?;
    Ok((records, digest))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, String), Error> {
    let bytes = std::fs::read(path)?;
    let digest = digest_bytes(&bytes);
    Ok((serde_json::from_slice(&bytes)?, digest))
}

fn write_out(path: Option<&Path>, contents: &str) -> Result<(), Error> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::write(p, contents)?;
        }
        _ => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes())?;
            if !contents.ends_with('\n') {
                writeln!(stdout)?;
            }
        }
    }
    Ok(())
}

fn cmd_ingest(args: &IngestArgs) -> Result<ExitCode, Error> {
    let (records, _) = load_records(&args.input, args.format.as_deref())?;
    if args.min_year.is_some() || args.max_year.is_some() {
        let range = YearRange::new(
            args.min_year.unwrap_or(i32::MIN),
            args.max_year.unwrap_or(i32::MAX),
        );
        validate_year_range(&records, range)?;
    }
    let mut buf = Vec::new();
    match args.output_format.parse::<IngestFormat>()? {
        IngestFormat::Csv => write_records_csv(&records, &mut buf)?,
        IngestFormat::Jsonl => write_records_jsonl(&records, &mut buf)?,
    }
    write_out(args.output.as_deref(), &String::from_utf8_lossy(&buf))?;
    eprintln!("ingested {} records", records.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_synthetic(cli: &Cli, args: &GenSyntheticArgs) -> Result<ExitCode, Error> {
    let (ystart, yend) = parse_range(&args.years, "--years")?;
    let cfg = SyntheticConfig {
        seed: cli.seed,
        num_authors: args.authors,
        years: YearRange::new(ystart, yend),
        papers_per_year: args.papers_per_year,
        authors_per_paper: parse_usize_range(&args.authors_per_paper, "--authors-per-paper")?,
        reference_pool: args.reference_pool,
        refs_per_paper: parse_usize_range(&args.refs_per_paper, "--refs-per-paper")?,
    };
    let records = generate_records(&cfg)?;
    let mut buf = Vec::new();
    match args.format.parse::<IngestFormat>()? {
        IngestFormat::Csv => write_records_csv(&records, &mut buf)?,
        IngestFormat::Jsonl => write_records_jsonl(&records, &mut buf)?,
    }
    std::fs::write(&args.output, &buf)?;
    eprintln!(
        "wrote {} records to {}",
        records.len(),
        args.output.display()
    );

    if let Some(graph_path) = &args.graph_out {
        let window = match &args.edge_window {
            Some(s) => {
                let (a, b) = parse_range(s, "--edge-window")?;
                YearRange::new(a, b)
            }
            None => cfg.years,
        };
        let graph = build_coauthor_graph(&records, window);
        let directed = direct_by_degree(&graph);
        std::fs::write(graph_path, serde_json::to_string_pretty(&directed)?)?;
        eprintln!(
            "wrote influence graph ({} nodes, {} arcs) to {}",
            directed.node_count(),
            directed.arc_count(),
            graph_path.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<ExitCode, Error> {
    let (graph, _): (DirectedInfluenceGraph, _) = load_json(&args.graph)?;
    let config = SimulationConfig {
        seed: cli.seed,
        num_slices: cli.slices,
        picks_per_step: args.picks,
    };
    let series = simulator::run(&graph, &config)?;
    write_out(
        args.output.as_deref(),
        &serde_json::to_string_pretty(&series)?,
    )?;
    eprintln!(
        "simulated {} nodes over {} slices (seed {}, {} picks/step)",
        series.len(),
        series.num_slices(),
        config.seed,
        series.meta().picks_per_step.unwrap_or(0)
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_stats(args: &StatsArgs) -> Result<ExitCode, Error> {
    let (series, _): (NodeStateSeries, _) = load_json(&args.series)?;
    let (graph, _): (DirectedInfluenceGraph, _) = load_json(&args.graph)?;
    let dist = pair_sequence_counts(&series, &graph)?;
    write_out(
        args.output.as_deref(),
        &serde_json::to_string_pretty(&dist)?,
    )?;
    eprintln!(
        "pooled {} samples over {} outcomes",
        dist.total(),
        dist.counts().len()
    );
    Ok(ExitCode::SUCCESS)
}

fn report_table(reports: &[RunReport]) {
    eprintln!(
        "{:<12} {:>9} {:>8} {:>12} {:>6}  note",
        "window", "samples", "verdict", "margin", "iters"
    );
    for r in reports {
        let margin = r
            .certificate
            .map(|c| format!("{:.3e}", c.margin))
            .unwrap_or_else(|| "-".to_string());
        let note = r.error.as_deref().unwrap_or(&r.diagnostics);
        eprintln!(
            "{:<12} {:>9} {:>8} {:>12} {:>6}  {}",
            r.window.to_string(),
            r.sample_total,
            r.verdict.to_string(),
            margin,
            r.solver_iterations,
            note
        );
    }
}

fn cmd_test(cli: &Cli, args: &TestArgs) -> Result<ExitCode, Error> {
    let scheme = parse_scheme(&args.scheme)?;
    let reports: Vec<RunReport> = if let Some(series_path) = &args.series {
        let (series, digest): (NodeStateSeries, _) = load_json(series_path)?;
        let graph_path = args
            .graph
            .as_ref()
            .expect("clap enforces --graph with --series");
        let (graph, _): (DirectedInfluenceGraph, _) = load_json(graph_path)?;
        let config = ExperimentConfig {
            corpus: series.window().range(),
            scheme,
            num_slices: series.num_slices(),
            feasibility: cli.feasibility(),
            jobs: cli.jobs,
        };
        vec![test_series(&series, &graph, &config, Some(digest))?]
    } else {
        let records_path = args.records.as_ref().ok_or_else(|| {
            Error::InvalidInput("either --records or --series is required".into())
        })?;
        let (records, digest) = load_records(records_path, args.format.as_deref())?;
        let corpus = match &args.corpus {
            Some(s) => {
                let (a, b) = parse_range(s, "--corpus")?;
                YearRange::new(a, b)
            }
            None => {
                let min = records.iter().map(|r| r.year).min();
                let max = records.iter().map(|r| r.year).max();
                match (min, max) {
                    (Some(lo), Some(hi)) => YearRange::new(lo, hi + 1),
                    _ => {
                        return Err(Error::InvalidInput(
                            "no records to derive a corpus range".into(),
                        ))
                    }
                }
            }
        };
        let config = ExperimentConfig {
            corpus,
            scheme,
            num_slices: cli.slices,
            feasibility: cli.feasibility(),
            jobs: cli.jobs,
        };
        run_windows(&records, &config, Some(digest))?
    };

    report_table(&reports);
    write_out(
        args.output.as_deref(),
        &serde_json::to_string_pretty(&reports)?,
    )?;
    if reports.iter().any(|r| r.error.is_some()) {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_export_sdpa(cli: &Cli, args: &ExportArgs) -> Result<ExitCode, Error> {
    let (dist, _): (EmpiricalDistribution, _) = load_json(&args.dist)?;
    let observables = homsieve_core::model::joint_observable_polys(dist.num_slices())?;
    let relax = build_relaxation(&dist.y_hat(), observables.polys(), cli.level, cli.epsilon)?;
    homsieve_core::sdpa::write_sdpa_file(&relax.problem, &args.output)?;
    eprintln!(
        "wrote level-{} relaxation ({} variables, {} blocks, {} equalities) to {}",
        cli.level,
        relax.problem.num_vars,
        relax.problem.blocks.len(),
        relax.problem.equalities.len(),
        args.output.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SolveReport {
    status: homsieve_core::sdp::StatusKind,
    iterations: usize,
    residuals: homsieve_core::sdp::Residuals,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

fn cmd_solve(cli: &Cli, args: &SolveArgs) -> Result<ExitCode, Error> {
    let problem = homsieve_core::sdpa::read_sdpa_file(&args.problem)?;
    let options = SolverOptions {
        max_iterations: cli.max_iter,
        tol_feas: cli.tol_feas,
        tol_gap: cli.tol_gap,
        ..Default::default()
    };
    let outcome = homsieve_core::sdp::solve(&problem, &options)?;
    let report = match &outcome.status {
        SdpStatus::Feasible(_) => SolveReport {
            status: outcome.status.kind(),
            iterations: outcome.iterations,
            residuals: outcome.residuals,
            certificate_margin: None,
            certificate_residual: None,
            reason: None,
        },
        SdpStatus::Infeasible(ray) => SolveReport {
            status: outcome.status.kind(),
            iterations: outcome.iterations,
            residuals: outcome.residuals,
            certificate_margin: Some(ray.margin),
            certificate_residual: Some(ray.residual),
            reason: None,
        },
        SdpStatus::Unknown { reason } => SolveReport {
            status: outcome.status.kind(),
            iterations: outcome.iterations,
            residuals: outcome.residuals,
            certificate_margin: None,
            certificate_residual: None,
            reason: Some(reason.clone()),
        },
    };
    write_out(
        args.output.as_deref(),
        &serde_json::to_string_pretty(&report)?,
    )?;
    Ok(ExitCode::SUCCESS)
}
