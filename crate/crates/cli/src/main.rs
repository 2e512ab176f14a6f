mod dataset;
mod error;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dataset::{read_dataset, DatasetOptions};
use error::CliError;
use pairperm::harness::{emit_plot_data, emit_timing, parse_study_config, run_study_with_threads};
use pairperm::randomization::{TwoSidedMethod, DEFAULT_GROUP_LIMIT};
use pairperm::{PermutationConfig, Side, WeightRule};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pairperm",
    version,
    about = "Randomization tests for matched pairs with missing values"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test H0: mu1 = mu2.
    Test(TestArgs),
    /// Permutation confidence interval for mu1 - mu2.
    Ci(CiArgs),
    /// Permutation TOST for H0: |mu1 - mu2| >= epsilon.
    Tost(TostArgs),
    /// Run a simulation study from a TOML config.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Perm,
    Asymptotic,
    LinStivers,
    Kim,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    One,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Record,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TwoSidedArg {
    Doubled,
    Absolute,
}

#[derive(Args, Clone)]
struct Input {
    /// Two-column delimited file (arm 1, arm 2); optional header.
    file: PathBuf,
    /// Field delimiter.
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// Missing-value tokens, comma separated. An empty field is missing unless omitted here.
    #[arg(long, default_value = ",NA,na", allow_hyphen_values = true)]
    missing: String,
}

#[derive(Args, Clone)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args, Clone)]
struct Resampling {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Monte Carlo permutation replicates.
    #[arg(long = "B", default_value_t = 1000)]
    b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// paper (2 n1/(n+n1)), prop (n1/n) or fixed=<a>.
    #[arg(long, default_value = "paper")]
    weight: String,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    resampling: Resampling,
    #[arg(long, value_enum, default_value_t = MethodArg::Perm)]
    method: MethodArg,
    /// one: H1 mu1 > mu2; two: H1 mu1 != mu2.
    #[arg(long, value_enum, default_value_t = SideArg::Two)]
    side: SideArg,
    /// Two-sided permutation p-value: doubled one-sided tail or |T| tail.
    #[arg(long, value_enum, default_value_t = TwoSidedArg::Doubled)]
    two_sided: TwoSidedArg,
    /// Enumerate the whole randomization group instead of sampling it.
    #[arg(long)]
    exact: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CiArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    resampling: Resampling,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TostArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    resampling: Resampling,
    /// Equivalence margin, > 0.
    #[arg(long)]
    epsilon: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SimulateArgs {
    /// Study configuration (TOML).
    config: PathBuf,
    /// Plot-data CSV; `<stem>.timing.csv` and `<stem>.meta.json` are written next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn dataset_options(input: &Input) -> Result<DatasetOptions, CliError> {
    if !input.delimiter.is_ascii() {
        return Err(CliError::Parse(format!("delimiter {:?} is not ASCII", input.delimiter)));
    }
    Ok(DatasetOptions {
        delimiter: input.delimiter as u8,
        missing: input.missing.split(',').map(|s| s.trim().to_string()).collect(),
    })
}

fn permutation_config(r: &Resampling, side: Side) -> Result<PermutationConfig, CliError> {
    let rule: WeightRule = r.weight.parse()?;
    Ok(PermutationConfig {
        rule,
        replicates: r.b,
        seed: r.seed,
        alpha: r.alpha,
        side,
        ..PermutationConfig::default()
    })
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Precondition(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn emit(output: &Output, text: String) -> Result<(), CliError> {
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_test(args: TestArgs) -> Result<bool, CliError> {
    let data = read_dataset(&args.input.file, &dataset_options(&args.input)?)?;
    let side = match args.side {
        SideArg::One => Side::Greater,
        SideArg::Two => Side::TwoSided,
    };
    let mut config = permutation_config(&args.resampling, side)?;
    config.two_sided = match args.two_sided {
        TwoSidedArg::Doubled => TwoSidedMethod::DoubledTail,
        TwoSidedArg::Absolute => TwoSidedMethod::Absolute,
    };
    let methods: &[MethodArg] = match args.method {
        MethodArg::All => &[
            MethodArg::Perm,
            MethodArg::Asymptotic,
            MethodArg::LinStivers,
            MethodArg::Kim,
        ],
        ref m => std::slice::from_ref(m),
    };
    let exact = args.exact.then_some(DEFAULT_GROUP_LIMIT);
    let rec = with_threads(args.output.threads, || {
        report::test_record(
            &args.input.file,
            &data,
            methods,
            &config,
            &args.resampling.weight,
            exact,
        )
    })??;
    let failed = rec.results.iter().find_map(|r| r.error.clone());
    if let (Some(e), 1) = (&failed, methods.len()) {
        return Err(CliError::Precondition(e.clone()));
    }
    let text = match args.output.format {
        Format::Record => report::to_record(&rec)?,
        Format::Text => report::test_text(&rec),
    };
    emit(&args.output, text)?;
    Ok(failed.is_none())
}

fn cmd_ci(args: CiArgs) -> Result<bool, CliError> {
    let data = read_dataset(&args.input.file, &dataset_options(&args.input)?)?;
    let config = permutation_config(&args.resampling, Side::TwoSided)?;
    let ci = with_threads(args.output.threads, || {
        pairperm::confidence_interval(&data.sample, &config)
    })??;
    let rec = report::ci_record(&args.input.file, &data, &config, &args.resampling.weight, &ci);
    let text = match args.output.format {
        Format::Record => report::to_record(&rec)?,
        Format::Text => report::ci_text(&rec),
    };
    emit(&args.output, text)?;
    Ok(true)
}

fn cmd_tost(args: TostArgs) -> Result<bool, CliError> {
    let data = read_dataset(&args.input.file, &dataset_options(&args.input)?)?;
    let config = permutation_config(&args.resampling, Side::TwoSided)?;
    let res = with_threads(args.output.threads, || {
        pairperm::tost_equivalence_test(&data.sample, args.epsilon, &config)
    })??;
    let rec = report::tost_record(&args.input.file, &data, &config, &args.resampling.weight, &res);
    let text = match args.output.format {
        Format::Record => report::to_record(&rec)?,
        Format::Text => report::tost_text(&rec),
    };
    emit(&args.output, text)?;
    Ok(true)
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "study".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn cmd_simulate(args: SimulateArgs) -> Result<bool, CliError> {
    let text =
        std::fs::read_to_string(&args.config).map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let grid = parse_study_config(&text)?;
    let table = run_study_with_threads(&grid, args.threads)?;
    emit_plot_data(&table, create(&args.out)?)?;
    let timing = sidecar(&args.out, "timing.csv");
    emit_timing(&table, create(&timing)?)?;
    let meta = report::study_meta(&args.config, &args.out, &timing, &grid, &table, args.threads);
    let meta_path = sidecar(&args.out, "meta.json");
    std::fs::write(&meta_path, report::to_record(&meta)?)
        .map_err(|e| CliError::Io(format!("{}: {e}", meta_path.display())))?;
    let summary = match args.format {
        Format::Record => report::to_record(&meta)?,
        Format::Text => report::study_text(&meta),
    };
    std::io::stdout().lock().write_all(summary.as_bytes())?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Ci(a) => cmd_ci(a),
        Command::Tost(a) => cmd_tost(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("pairperm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
