//! The `tbm` command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tbm_core::ensemble::DEFAULT_MEMORY_BUDGET;
use tbm_core::{
    build_matrix_with_budget, eigenvalues_band, goe_moment, gue_moment, mixed_trace_gue, BandwidthSchedule,
    DensityModel, EnsembleClass, EnsembleSpec, EntryDistribution, Normalization, QuadratureConfig, SymmetryClass,
    TraceWord,
};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::harness::run_experiment;
use crate::output::{histogram_table, write_csv, write_json, Cell, Table};
use crate::report::{load_report, persist_report, to_canonical_json, ExperimentReport};
use crate::verify::verify_report;

/// Largest `--grid` point count.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "tbm", version, about = "Random block Toeplitz band matrices: densities, moments, sampling, experiments")]
pub struct Cli {
    /// Seed for every random draw (overrides spec and config seeds).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads for experiments.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Limiting one-point density on a grid.
    Density(DensityArgs),
    /// Exact moment tables from pair-partition sums.
    Moments(MomentsArgs),
    /// One matrix draw: its spectrum or its band entries.
    Sample(SampleArgs),
    /// Run an experiment config and write its report.
    Experiment(ExperimentArgs),
    /// Recompute the reference values of a report and diff them.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityEnsemble {
    Gue,
    Goe,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long, value_enum)]
    pub ensemble: DensityEnsemble,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: u64,
    /// `lo:hi:points`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentEnsemble {
    Gue,
    Goe,
    Mixed,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long, value_enum)]
    pub ensemble: MomentEnsemble,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: u64,
    #[arg(long, conflicts_with = "word")]
    pub k_max: Option<usize>,
    /// Exponents `ν_1,...,ν_r` of `Π (tr H^i)^{ν_i}`.
    #[arg(long, value_delimiter = ',')]
    pub word: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    TransposeCoupled,
    SymmetricBlocks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Gaussian,
    Rademacher,
    UniformScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Raw,
    GueScaled,
    TraceScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Spectrum,
    Matrix,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Ensemble spec JSON file, instead of the inline flags.
    #[arg(long, conflicts_with_all = ["n", "m", "b", "alpha", "log_c", "class", "dist"])]
    pub spec: Option<PathBuf>,
    /// Block count.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Block order.
    #[arg(long)]
    pub m: Option<usize>,
    /// Fixed bandwidth.
    #[arg(long, conflicts_with_all = ["alpha", "log_c"])]
    pub b: Option<usize>,
    /// Bandwidth `⌈N^alpha⌉`.
    #[arg(long, conflicts_with = "log_c")]
    pub alpha: Option<f64>,
    /// Bandwidth `⌈c ln N⌉`.
    #[arg(long)]
    pub log_c: Option<f64>,
    #[arg(long, value_enum)]
    pub class: Option<ClassArg>,
    #[arg(long, value_enum)]
    pub dist: Option<DistArg>,
    #[arg(long, value_enum, default_value_t = NormalizationArg::GueScaled)]
    pub normalization: NormalizationArg,
    #[arg(long, value_enum)]
    pub emit: Emit,
    /// Cap on stored band entries.
    #[arg(long, default_value_t = DEFAULT_MEMORY_BUDGET)]
    pub memory_budget: usize,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Record wall-clock timings (makes the report machine-dependent).
    #[arg(long)]
    pub timing: bool,
    /// Also write `histogram_N<n>.csv` files here.
    #[arg(long)]
    pub histogram_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub report: PathBuf,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    match out {
        Some(p) => Ok(Box::new(BufWriter::new(File::create(p).map_err(|e| LabError::io(p, e))?))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn emit<C: Serialize>(cli: &Cli, command: &str, config: &C, table: &Table) -> Result<()> {
    let out = sink(cli.out.as_deref())?;
    match cli.format {
        Format::Csv => write_csv(out, command, config, table),
        Format::Json => write_json(out, command, config, table),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct GridSpec {
    lo: f64,
    hi: f64,
    points: usize,
}

fn parse_grid(text: &str) -> Result<GridSpec> {
    let usage = || LabError::Usage(format!("--grid expects lo:hi:points with lo <= hi and points >= 1, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, points] = parts.as_slice() else {
        return Err(usage());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| usage())?;
    let hi: f64 = hi.trim().parse().map_err(|_| usage())?;
    let points: usize = points.trim().parse().map_err(|_| usage())?;
    if points == 0 || !lo.is_finite() || !hi.is_finite() || lo > hi || (points == 1 && lo != hi) {
        return Err(usage());
    }
    if points > MAX_GRID_POINTS {
        return Err(tbm_core::Error::SizeLimit {
            what: "grid points",
            value: points,
            max: MAX_GRID_POINTS,
        }
        .into());
    }
    Ok(GridSpec { lo, hi, points })
}

fn cmd_density(cli: &Cli, args: &DensityArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Echo {
        ensemble: DensityEnsemble,
        m: u64,
        grid: GridSpec,
        quadrature: QuadratureConfig,
    }
    let grid = parse_grid(&args.grid)?;
    let class = match args.ensemble {
        DensityEnsemble::Gue => EnsembleClass::Gue,
        DensityEnsemble::Goe => EnsembleClass::Goe,
    };
    let model = DensityModel::new(class, args.m as usize)?;
    let rows = model.grid_dump(grid.lo, grid.hi, grid.points)?;
    let mut table = Table::new(vec!["x", "pdf", "cdf"]);
    table.rows = rows
        .into_iter()
        .map(|(x, p, c)| vec![Cell::Float(x), Cell::Float(p), Cell::Float(c)])
        .collect();
    let echo = Echo {
        ensemble: args.ensemble,
        m: args.m,
        grid,
        quadrature: *model.config(),
    };
    emit(cli, "density", &echo, &table)
}

fn cmd_moments(cli: &Cli, args: &MomentsArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a> {
        ensemble: MomentEnsemble,
        m: u64,
        k_max: Option<usize>,
        word: Option<&'a [usize]>,
    }
    let echo = Echo {
        ensemble: args.ensemble,
        m: args.m,
        k_max: args.k_max,
        word: args.word.as_deref(),
    };
    let name = match args.ensemble {
        MomentEnsemble::Gue => "gue",
        MomentEnsemble::Goe => "goe",
        MomentEnsemble::Mixed => "mixed",
    };
    let table = match args.ensemble {
        MomentEnsemble::Mixed => {
            let word = args
                .word
                .clone()
                .ok_or_else(|| LabError::Usage("--ensemble mixed needs --word".into()))?;
            let tw = TraceWord::new(word);
            if tw.letter_count() == 0 {
                return Err(LabError::Usage("--word needs at least one nonzero exponent".into()));
            }
            let v = mixed_trace_gue(args.m, &tw)?;
            let mut t = Table::new(vec!["ensemble", "m", "word", "letters", "exact", "decimal"]);
            let word_text = tw.exponents().iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
            t.rows.push(vec![
                Cell::Text(name.into()),
                Cell::Int(args.m as i64),
                Cell::Text(word_text),
                Cell::Int(tw.letter_count() as i64),
                Cell::Text(v.to_string()),
                Cell::Float(v as f64),
            ]);
            t
        }
        MomentEnsemble::Gue | MomentEnsemble::Goe => {
            let k_max = args
                .k_max
                .ok_or_else(|| LabError::Usage(format!("--ensemble {name} needs --k-max")))?;
            let mut t = Table::new(vec!["ensemble", "m", "n", "exact", "decimal"]);
            for n in 1..=k_max {
                let r = if args.ensemble == MomentEnsemble::Gue {
                    gue_moment(args.m, n)?
                } else {
                    goe_moment(args.m, n)?
                };
                t.rows.push(vec![
                    Cell::Text(name.into()),
                    Cell::Int(args.m as i64),
                    Cell::Int(n as i64),
                    Cell::Text(r.to_string()),
                    Cell::Float(*r.numer() as f64 / *r.denom() as f64),
                ]);
            }
            t
        }
    };
    emit(cli, "moments", &echo, &table)
}

fn sample_spec(cli: &Cli, args: &SampleArgs) -> Result<EnsembleSpec> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
            serde_json::from_str::<EnsembleSpec>(&text)?
        }
        None => {
            let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| LabError::Usage(format!("sample needs {flag} (or --spec)")));
            let bandwidth = match (args.b, args.alpha, args.log_c) {
                (Some(b), None, None) => BandwidthSchedule::Fixed(b),
                (None, Some(a), None) => BandwidthSchedule::PowerLaw(a),
                (None, None, Some(c)) => BandwidthSchedule::Logarithmic(c),
                _ => return Err(LabError::Usage("sample needs one of --b, --alpha, --log-c".into())),
            };
            EnsembleSpec {
                n: need(args.n, "--N")?,
                m: need(args.m, "--m")?,
                bandwidth,
                symmetry_class: match args.class.unwrap_or(ClassArg::TransposeCoupled) {
                    ClassArg::TransposeCoupled => SymmetryClass::TransposeCoupled,
                    ClassArg::SymmetricBlocks => SymmetryClass::SymmetricBlocks,
                },
                distribution: match args.dist.unwrap_or(DistArg::Rademacher) {
                    DistArg::Gaussian => EntryDistribution::Gaussian,
                    DistArg::Rademacher => EntryDistribution::Rademacher,
                    DistArg::UniformScaled => EntryDistribution::UniformScaled,
                },
                seed: 0,
            }
        }
    };
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

fn cmd_sample(cli: &Cli, args: &SampleArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Echo {
        spec: EnsembleSpec,
        resolved_bandwidth: usize,
        dimension: usize,
        normalization: Normalization,
        emit: Emit,
        memory_budget: usize,
    }
    let spec = sample_spec(cli, args)?;
    let normalization = match args.normalization {
        NormalizationArg::Raw => Normalization::Raw,
        NormalizationArg::GueScaled => Normalization::GueScaled,
        NormalizationArg::TraceScaled => Normalization::TraceScaled,
    };
    let matrix = build_matrix_with_budget(&spec, normalization, args.memory_budget)?;
    let echo = Echo {
        spec,
        resolved_bandwidth: matrix.bandwidth(),
        dimension: matrix.dimension(),
        normalization,
        emit: args.emit,
        memory_budget: args.memory_budget,
    };
    let table = match args.emit {
        Emit::Spectrum => {
            let s = eigenvalues_band(matrix.band())?;
            let mut t = Table::new(vec!["eigenvalue"]);
            t.csv_header = false;
            t.rows = s.eigenvalues.into_iter().map(|x| vec![Cell::Float(x)]).collect();
            t
        }
        Emit::Matrix => {
            let mut t = Table::new(vec!["row", "col", "value"]);
            t.rows = matrix
                .band()
                .lower_triplets()
                .map(|(i, j, v)| vec![Cell::Int(i as i64), Cell::Int(j as i64), Cell::Float(v)])
                .collect();
            t
        }
    };
    emit(cli, "sample", &echo, &table)
}

fn check_summary(report: &ExperimentReport) -> String {
    let mut s = String::new();
    for c in &report.checks {
        let status = match (c.passed, c.hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FLAG",
        };
        s.push_str(&format!("{status} {}: {}\n", c.name, c.detail));
    }
    if let Some(f) = &report.failure {
        s.push_str(&format!("incomplete: {f}\n"));
    }
    s
}

fn cmd_experiment(cli: &Cli, args: &ExperimentArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| LabError::io(&args.config, e))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)?;
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(t) = cli.threads {
        config.threads = Some(t as usize);
    }
    if args.timing {
        config.record_timing = true;
    }
    if let Some(out) = &cli.out {
        config.output = Some(out.display().to_string());
    }
    config.validate()?;
    let report = run_experiment(&config)?;
    match &config.output {
        Some(path) => persist_report(&report, Path::new(path))?,
        None => {
            let mut out = io::stdout().lock();
            writeln!(out, "{}", to_canonical_json(&report)?).map_err(|e| LabError::io("<stdout>", e))?;
        }
    }
    if let Some(dir) = &args.histogram_dir {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        for r in &report.results {
            if let Some(h) = &r.histogram {
                let path = dir.join(format!("histogram_N{}.csv", r.n));
                let file = File::create(&path).map_err(|e| LabError::io(&path, e))?;
                write_csv(BufWriter::new(file), &format!("experiment N={}", r.n), &config, &histogram_table(h))?;
            }
        }
    }
    let summary = check_summary(&report);
    eprint!("{summary}");
    if report.passed() {
        Ok(())
    } else {
        Err(LabError::Assertion("experiment failed one or more hard checks".into()))
    }
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<()> {
    let mut report = load_report(&args.report)?;
    if let Some(t) = cli.threads {
        report.config.threads = Some(t as usize);
    }
    let v = verify_report(&report)?;
    let mut out = sink(cli.out.as_deref())?;
    let io_err = |e| LabError::io("<output>", e);
    writeln!(out, "checked {} reference values, {} discrepancies", v.checked, v.discrepancies.len()).map_err(io_err)?;
    for d in &v.discrepancies {
        writeln!(out, "DIFF {}: recorded {} recomputed {}", d.location, d.recorded, d.recomputed).map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    if v.clean() {
        Ok(())
    } else {
        Err(LabError::Assertion(format!("{} reference values differ", v.discrepancies.len())))
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Density(a) => cmd_density(cli, a),
        Command::Moments(a) => cmd_moments(cli, a),
        Command::Sample(a) => cmd_sample(cli, a),
        Command::Experiment(a) => cmd_experiment(cli, a),
        Command::Verify(a) => cmd_verify(cli, a),
    }
}

/// Parses the process arguments, runs, and maps errors onto exit codes.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tbm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
