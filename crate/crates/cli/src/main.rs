//! `trajclass`: dataset conversion, preprocessing, featurization and
//! experiment runs driven by JSON specs.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use trajclass::featurize::write_feature_csv;
use trajclass::harness::{self, ExperimentSpec, SweepParameter};
use trajclass::trajectory::{convert, save_canonical_csv, Format, LoadOptions};
use trajclass::{Error, Label};

const EXIT_SPEC: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(name = "trajclass", version, about = "Landmark-based trajectory classification experiments")]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArgs {
    /// Experiment spec or run manifest (JSON).
    #[arg(long)]
    spec: PathBuf,

    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw logs into the canonical CSV.
    Convert {
        #[arg(long)]
        input: PathBuf,
        /// canonical-csv, geolife-plt, tdrive-txt, geolife-labeled or uci-go-track.
        #[arg(long)]
        format: String,
        #[arg(long)]
        output: PathBuf,
        /// Label for formats that carry none.
        #[arg(long, default_value_t = 0)]
        label: Label,
    },
    /// Load and preprocess the spec's dataset, writing the canonical CSV.
    Preprocess {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Featurize the spec's dataset into a `traj_id,label,f0..` matrix.
    Featurize {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        output: PathBuf,
        /// Also write the landmarks used.
        #[arg(long)]
        landmarks_out: Option<PathBuf>,
    },
    /// Pairwise distance matrix of the spec's dataset under its `distance`.
    Distances {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Evaluate the spec and write the result table plus a run manifest.
    Run {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "results.csv")]
        output: PathBuf,
    },
    /// Run once per parameter value and write a long-form CSV.
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        /// n_landmarks, k, n_estimators or voters.
        #[arg(long)]
        parameter: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long, default_value = "sweep.csv")]
        output: PathBuf,
    },
}

enum Failure {
    Spec(Error),
    Data(Error),
}

fn data<T>(r: trajclass::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Data)
}

fn load_spec(args: &SpecArgs) -> Result<ExperimentSpec, Failure> {
    let mut spec = ExperimentSpec::load(&args.spec).map_err(|e| match e {
        Error::Io { .. } => Failure::Data(e),
        other => Failure::Spec(other),
    })?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(Error::Io {
            path: path.to_owned(),
            source: e,
        }))
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Convert {
            input,
            format,
            output,
            label,
        } => {
            let format: Format = format.parse().map_err(Failure::Spec)?;
            let n = data(convert(&input, format, &output, &LoadOptions { label }))?;
            if n == 0 {
                warn!("no trajectories found in {}", input.display());
            }
            println!("{n}");
        }
        Command::Preprocess { spec, output } => {
            let spec = load_spec(&spec)?;
            let ds = data(harness::prepare_dataset(&spec))?;
            data(save_canonical_csv(&ds, &output))?;
            println!("{}", ds.len());
        }
        Command::Featurize {
            spec,
            output,
            landmarks_out,
        } => {
            let spec = load_spec(&spec)?;
            spec.validate().map_err(Failure::Spec)?;
            let ds = data(harness::prepare_dataset(&spec))?;
            let (featurizer, matrix) = data(harness::featurize(&spec, &ds))?;
            data(write_feature_csv(&ds, &matrix, create(&output)?))?;
            if let (Some(path), Some(q)) = (landmarks_out, &featurizer.landmarks) {
                data(q.save(&path))?;
            }
        }
        Command::Distances { spec, output } => {
            let spec = load_spec(&spec)?;
            if spec.distance.is_none() {
                return Err(Failure::Spec(Error::Spec {
                    field: "distance".into(),
                    message: "the distances command needs a `distance` section".into(),
                }));
            }
            let ds = data(harness::prepare_dataset(&spec))?;
            let (_, matrix) = data(harness::distances(&spec, &ds))?;
            data(trajclass::distances::write_matrix_csv(&ds, &matrix, create(&output)?))?;
        }
        Command::Run { spec, output } => {
            let spec = load_spec(&spec)?;
            spec.validate().map_err(Failure::Spec)?;
            let table = data(harness::run(&spec))?;
            let manifest = data(harness::write_run(&spec, &table, &output))?;
            info!("wrote {} and {}", output.display(), manifest.display());
            println!("mean {} std {}", table.mean(), table.std());
        }
        Command::Sweep {
            spec,
            parameter,
            values,
            output,
        } => {
            let spec = load_spec(&spec)?;
            spec.validate().map_err(Failure::Spec)?;
            let param: SweepParameter = parameter.parse().map_err(Failure::Spec)?;
            for &v in &values {
                param
                    .apply(&spec, v)
                    .and_then(|s| s.validate())
                    .map_err(Failure::Spec)?;
            }
            let tables = data(harness::sweep(&spec, param, &values))?;
            data(harness::write_sweep_csv(param, &tables, create(&output)?))?;
            for (v, t) in &tables {
                println!("{}={v}: mean {} std {}", param.as_str(), t.mean(), t.std());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match harness::with_threads(cli.threads, || execute(cli.command)) {
        Ok(r) => r,
        Err(e) => Err(Failure::Spec(e)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Spec(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_SPEC)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
