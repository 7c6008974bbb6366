//! Command-line front end for `fairtopk`: audits, calibration, re-ranking and
//! plot-data export over CSV ranking files.
//!
//! Exit codes: 0 success or passing audit, 1 failing audit, 2 usage, parse
//! or domain error.

mod error;
pub mod ingest;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairtopk::audit::{
    boundary_curves, confidence_band, multi_test, required_samples, AdjustedAlpha, CdfMode,
    NullZSample,
};
use fairtopk::null_model::odds_ratio_for_target;
use fairtopk::rerank::{rerank, rerank_with_alpha_c, BoundKind};
use fairtopk::sampler::{sample_batch, with_workers};
use fairtopk::{NullModel, PopulationSpec, Side, TargetQuota, TestConfig, Verdict};

pub use error::{CliError, CliResult};
use ingest::{ingest, OrderPolicy, RankingFile};
use report::{
    InputInfo, PositionSummary, ReportDocument, RerankSummary, SampleSize, SimulationSummary,
};

#[derive(Debug, Parser)]
#[command(
    name = "fairtopk",
    version,
    about = "Group fairness audits for rankings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Multi-prefix fairness audit of a ranking file.
    Audit(AuditArgs),
    /// Calibrate the per-test level only.
    Alpha(AlphaArgs),
    /// Re-rank a file so that every prefix passes.
    Rerank(RerankArgs),
    /// Two-sided confidence band of the protected count, as CSV.
    Bands(BandsArgs),
    /// Attainable protected-share boundaries, as CSV.
    Boundaries(BoundariesArgs),
    /// Summary statistics of simulated null rankings.
    Simulate(SimulateArgs),
    /// Replications needed for a given DKW precision.
    Samples(SamplesArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelKind {
    Hyper,
    Binom,
    Weighted,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "hyper")]
    model: ModelKind,
    /// Coin of the finite binomial model (defaults to the protected share).
    #[arg(long)]
    f: Option<f64>,
    /// Odds ratio of the weighted model.
    #[arg(long, conflicts_with = "rho")]
    omega: Option<f64>,
    /// Target protected share at the top; sets the odds ratio.
    #[arg(long)]
    rho: Option<f64>,
}

impl ModelArgs {
    /// Rejects flag combinations that do not fit the chosen model.
    fn check(&self) -> CliResult<()> {
        let bad = match self.model {
            ModelKind::Hyper if self.f.is_some() || self.omega.is_some() || self.rho.is_some() => {
                "--model hyper takes no --f, --omega or --rho"
            }
            ModelKind::Binom if self.omega.is_some() || self.rho.is_some() => {
                "--model binom takes --f, not --omega or --rho"
            }
            ModelKind::Weighted if self.f.is_some() => {
                "--model weighted takes --omega or --rho, not --f"
            }
            ModelKind::Weighted if self.omega.is_none() && self.rho.is_none() => {
                "--model weighted needs --omega or --rho"
            }
            _ => return Ok(()),
        };
        Err(CliError::Usage(bad.to_string()))
    }

    fn resolve(&self, pop: &PopulationSpec) -> CliResult<NullModel> {
        self.check()?;
        Ok(match self.model {
            ModelKind::Hyper => NullModel::Hypergeometric,
            ModelKind::Binom => {
                NullModel::finite_binomial(self.f.unwrap_or_else(|| pop.proportion()))?
            }
            ModelKind::Weighted => match (self.omega, self.rho) {
                (Some(w), _) => NullModel::weighted(w)?,
                (None, Some(rho)) => {
                    NullModel::weighted(odds_ratio_for_target(pop, TargetQuota::new(rho)?)?)?
                }
                (None, None) => unreachable!("checked above"),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SideArg {
    Lower,
    Upper,
    TwoSided,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Lower => Side::Lower,
            SideArg::Upper => Side::Upper,
            SideArg::TwoSided => Side::TwoSided,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CdfModeArg {
    Analytical,
    Empirical,
}

impl From<CdfModeArg> for CdfMode {
    fn from(m: CdfModeArg) -> Self {
        match m {
            CdfModeArg::Analytical => CdfMode::Analytical,
            CdfModeArg::Empirical => CdfMode::Empirical,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrderArg {
    AsGiven,
    ByScore,
}

impl From<OrderArg> for OrderPolicy {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::AsGiven => OrderPolicy::AsGiven,
            OrderArg::ByScore => OrderPolicy::ByScore,
        }
    }
}

#[derive(Debug, Args)]
struct TestArgs {
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Number of prefixes tested (defaults to the whole ranking).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "lower")]
    side: SideArg,
    /// Monte Carlo replications.
    #[arg(long, default_value_t = fairtopk::audit::DEFAULT_N_E)]
    ne: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "analytical")]
    cdf_mode: CdfModeArg,
    /// Simulation threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

impl TestArgs {
    fn config(&self, pop: &PopulationSpec) -> TestConfig {
        TestConfig::new(self.alpha, self.k.unwrap_or(pop.n()))
            .with_side(self.side.into())
            .with_n_e(self.ne)
            .with_seed(self.seed)
            .with_cdf_mode(self.cdf_mode.into())
            .with_workers(self.workers)
    }
}

/// Population from a ranking file or from explicit counts.
#[derive(Debug, Args)]
struct PopulationArgs {
    /// Ranking file; its composition sets the population.
    input: Option<PathBuf>,
    #[arg(long, requires = "np", conflicts_with = "input")]
    n: Option<usize>,
    #[arg(long, requires = "n", conflicts_with = "input")]
    np: Option<usize>,
}

impl PopulationArgs {
    fn resolve(&self) -> CliResult<(PopulationSpec, Option<InputInfo>)> {
        match (&self.input, self.n, self.np) {
            (Some(path), _, _) => {
                let file = ingest(path, OrderPolicy::AsGiven)?;
                Ok((file.population()?, Some(input_info(path, &file))))
            }
            (None, Some(n), Some(np)) => Ok((PopulationSpec::new(n, np)?, None)),
            _ => Err(CliError::Usage(
                "give a ranking file or both --n and --np".into(),
            )),
        }
    }
}

#[derive(Debug, Args)]
struct AuditArgs {
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    test: TestArgs,
    #[arg(long, value_enum, default_value = "as-given")]
    order: OrderArg,
    /// Report path (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AlphaArgs {
    #[command(flatten)]
    population: PopulationArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    test: TestArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Direction {
    /// Lift protected candidates where they are too few.
    Under,
    /// Lift non-protected candidates where protected ones are too many.
    Over,
}

#[derive(Debug, Args)]
struct RerankArgs {
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = fairtopk::audit::DEFAULT_N_E)]
    ne: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "under")]
    direction: Direction,
    #[arg(long, value_enum, default_value = "as-given")]
    order: OrderArg,
    /// Re-ranked CSV.
    #[arg(long)]
    csv_out: PathBuf,
    /// Report path (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct BandsArgs {
    #[command(flatten)]
    population: PopulationArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundariesArgs {
    /// Protected share of the pool.
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 100)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    population: PopulationArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Number of rankings drawn.
    #[arg(long, default_value_t = 10_000)]
    ne: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SamplesArgs {
    /// Target precision `10^-delta` of the estimated CDF.
    #[arg(long, default_value_t = 3.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Errors go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> CliResult<i32> {
    match &command {
        Command::Audit(a) => a.model.check()?,
        Command::Alpha(a) => a.model.check()?,
        Command::Rerank(a) => a.model.check()?,
        Command::Bands(a) => a.model.check()?,
        Command::Simulate(a) => a.model.check()?,
        Command::Boundaries(_) | Command::Samples(_) => {}
    }
    match command {
        Command::Audit(a) => audit(a),
        Command::Alpha(a) => alpha(a),
        Command::Rerank(a) => rerank_cmd(a),
        Command::Bands(a) => bands(a),
        Command::Boundaries(a) => boundaries(a),
        Command::Simulate(a) => simulate(a),
        Command::Samples(a) => samples(a),
    }
}

fn input_info(path: &Path, file: &RankingFile) -> InputInfo {
    InputInfo {
        path: path.display().to_string(),
        sha256: file.digest.clone(),
        rows: file.rows.len(),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| error::io_error(path, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| error::io_error(Path::new("<stdout>"), e)),
    }
}

fn emit_report(out: Option<&Path>, doc: &ReportDocument) -> CliResult<()> {
    emit(out, doc.to_string()?.as_bytes())
}

fn audit(args: AuditArgs) -> CliResult<i32> {
    let file = ingest(&args.input, args.order.into())?;
    let pop = file.population()?;
    let model = args.model.resolve(&pop)?;
    let config = args.test.config(&pop);
    let report = multi_test(&file.ranking()?, &pop, &model, &config)?;
    let verdict = report.verdict;
    let mut doc = ReportDocument::new("audit");
    doc.input = Some(input_info(&args.input, &file));
    doc.population = Some(pop);
    doc.model = Some(model);
    doc.config = Some(config);
    doc.audit = Some(report);
    emit_report(args.out.as_deref(), &doc)?;
    Ok(if verdict == Verdict::Pass { 0 } else { 1 })
}

fn alpha(args: AlphaArgs) -> CliResult<i32> {
    let (pop, input) = args.population.resolve()?;
    let model = args.model.resolve(&pop)?;
    let config = args.test.config(&pop);
    let adjusted = NullZSample::simulate(&model, &pop, &config)?.alpha_c(config.alpha);
    let mut doc = ReportDocument::new("alpha");
    doc.input = input;
    doc.population = Some(pop);
    doc.model = Some(model);
    doc.config = Some(config);
    doc.adjusted_alpha = Some(adjusted);
    emit_report(args.out.as_deref(), &doc)?;
    if adjusted.under_resolved {
        eprintln!(
            "warning: n_e * alpha = {} < 10; alpha_c is poorly resolved",
            adjusted.n_e_used as f64 * adjusted.alpha
        );
    }
    Ok(0)
}

fn rerank_cmd(args: RerankArgs) -> CliResult<i32> {
    let file = ingest(&args.input, args.order.into())?;
    let pop = file.population()?;
    let model = args.model.resolve(&pop)?;
    let ranking = file.ranking()?;
    let (result, adjusted): (_, AdjustedAlpha) = match args.direction {
        Direction::Under => with_workers(args.workers, || {
            rerank(&ranking, &pop, &model, args.alpha, args.ne, args.seed)
        })?,
        Direction::Over => {
            let config = TestConfig::new(args.alpha, pop.n())
                .with_side(Side::Upper)
                .with_n_e(args.ne)
                .with_seed(args.seed)
                .with_workers(args.workers);
            let adjusted = NullZSample::simulate(&model, &pop, &config)?.alpha_c(args.alpha);
            let result = rerank_with_alpha_c(
                &ranking,
                &pop,
                &model,
                adjusted.alpha_c,
                BoundKind::MaxProtected,
            )?;
            (result, adjusted)
        }
    };

    let by_id: std::collections::HashMap<&str, &ingest::Row> =
        file.rows.iter().map(|r| (r.id.as_str(), r)).collect();
    let rows: Vec<&ingest::Row> = result
        .ranking
        .ids()
        .expect("ranking built with ids")
        .iter()
        .map(|id| by_id[id.as_str()])
        .collect();
    let mut csv = Vec::new();
    ingest::write_rows(&mut csv, &rows, file.has_score)?;
    emit(Some(&args.csv_out), &csv)?;

    let mut doc = ReportDocument::new("rerank");
    doc.input = Some(input_info(&args.input, &file));
    doc.population = Some(pop);
    doc.model = Some(model);
    doc.adjusted_alpha = Some(adjusted);
    doc.rerank = Some(RerankSummary {
        swap_count: result.swap_count,
        positions_adjusted: result.positions_adjusted,
        alpha_c: result.alpha_c,
        output: Some(args.csv_out.display().to_string()),
    });
    emit_report(args.out.as_deref(), &doc)?;
    Ok(0)
}

fn bands(args: BandsArgs) -> CliResult<i32> {
    let (pop, _) = args.population.resolve()?;
    let model = args.model.resolve(&pop)?;
    let band = confidence_band(&pop, &model, args.alpha)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "j",
        "lower",
        "upper",
        "lower_proportion",
        "upper_proportion",
    ])?;
    for row in &band.rows {
        writer.serialize((
            row.j,
            row.lower,
            row.upper,
            row.lower_proportion,
            row.upper_proportion,
        ))?;
    }
    emit(args.out.as_deref(), &finish(writer)?)?;
    Ok(0)
}

fn boundaries(args: BoundariesArgs) -> CliResult<i32> {
    let curves = boundary_curves(args.p, args.grid)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["x", "upper", "lower"])?;
    for point in &curves.points {
        writer.serialize((point.x, point.upper, point.lower))?;
    }
    emit(args.out.as_deref(), &finish(writer)?)?;
    Ok(0)
}

fn finish(writer: csv::Writer<Vec<u8>>) -> CliResult<Vec<u8>> {
    writer
        .into_inner()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn simulate(args: SimulateArgs) -> CliResult<i32> {
    let (pop, input) = args.population.resolve()?;
    let model = args.model.resolve(&pop)?;
    let batch = with_workers(args.workers, || {
        sample_batch(&model, &pop, args.ne, args.seed)
    })?;
    let n = pop.n();
    let count = batch.len() as f64;
    let mut at_position = vec![0u64; n];
    let mut sum = vec![0f64; n];
    let mut sum_sq = vec![0f64; n];
    for r in &batch {
        let mut y = 0u64;
        for (j, &g) in r.groups().iter().enumerate() {
            y += g as u64;
            at_position[j] += g as u64;
            sum[j] += y as f64;
            sum_sq[j] += (y * y) as f64;
        }
    }
    let positions = (0..n)
        .map(|j| {
            let mean = sum[j] / count;
            PositionSummary {
                j: j + 1,
                protected_share_at_position: at_position[j] as f64 / count,
                mean_prefix_count: mean,
                sd_prefix_count: (sum_sq[j] / count - mean * mean).max(0.0).sqrt(),
            }
        })
        .collect();
    let mut doc = ReportDocument::new("simulate");
    doc.input = input;
    doc.population = Some(pop);
    doc.model = Some(model);
    doc.simulation = Some(SimulationSummary {
        count: batch.len(),
        seed: args.seed,
        positions,
    });
    emit_report(args.out.as_deref(), &doc)?;
    Ok(0)
}

fn samples(args: SamplesArgs) -> CliResult<i32> {
    let n_e = required_samples(args.delta, args.beta)?;
    let mut doc = ReportDocument::new("samples");
    doc.samples = Some(SampleSize {
        delta: args.delta,
        beta: args.beta,
        n_e,
    });
    emit_report(args.out.as_deref(), &doc)?;
    Ok(0)
}
