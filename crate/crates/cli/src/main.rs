use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use qimsim::bench::{self, ParseOptions, SourceKind, PRESETS};
use qimsim::detection::Scale;
use qimsim::optics::BucketMode;
use qimsim::qudit::{expectation, ppt_threshold, random_product_mixture, witness_suite, DensityMatrix};
use qimsim::run::{apply_overrides, resolve, run, RunOutput, RunOverrides};
use qimsim::Error;

#[derive(Parser)]
#[command(name = "qimsim", version, about = "Coincidence-imaging bench simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a bench file (or a built-in preset) and write pattern CSVs.
    Run(RunArgs),
    /// Two-qubit entanglement-witness demos.
    Witness {
        #[command(subcommand)]
        sub: WitnessCmd,
    },
    /// Built-in bench presets.
    Presets {
        #[command(subcommand)]
        sub: PresetsCmd,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Bench file; a preset name is accepted when no such file exists.
    bench: String,
    /// Pattern CSV path. Defaults to `<bench stem>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    bucket: Option<BucketArg>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Keep raw sums instead of peak-normalizing.
    #[arg(long)]
    raw: bool,
    /// Accept negative focal lengths.
    #[arg(long)]
    allow_diverging: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BucketArg {
    Intensity,
    Amplitude,
}

#[derive(Subcommand)]
enum WitnessCmd {
    /// Witness expectation on the maximally entangled and maximally mixed states.
    Expect,
    /// Noise-mixing parameter at which the entangled state turns PPT.
    Threshold,
    /// Witness values over random separable states, as CSV.
    Sweep {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PresetsCmd {
    List,
    /// Print a preset's bench text.
    Show { name: String },
}

enum Failure {
    Usage(String),
    Sim(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Sim(e)
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Sim(Error::Io { path: path.display().to_string(), source: e })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Witness { sub } => cmd_witness(&sub),
        Command::Presets { sub } => cmd_presets(&sub),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Sim(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric_guard() { 2 } else { 1 })
        }
    }
}

/// Bench text, the directory mask files resolve against, and the label
/// echoed into outputs.
fn load_bench(arg: &str) -> Result<(String, PathBuf, String), Failure> {
    let path = Path::new(arg);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        return Ok((text, dir, arg.to_string()));
    }
    let stem = arg.strip_suffix(".bench").unwrap_or(arg);
    match bench::preset(stem) {
        Some(text) => Ok((text.to_string(), PathBuf::from("."), format!("preset:{stem}"))),
        None => Err(Failure::Usage(format!("no bench file or preset named `{arg}`"))),
    }
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| io_failure(path, e))
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let (text, dir, label) = load_bench(&args.bench)?;
    let opts = ParseOptions { allow_diverging: args.allow_diverging };
    let mut model = bench::parse_with(&text, &opts).map_err(Error::from)?;
    let overrides = RunOverrides {
        grid_n: args.grid_n,
        p_max: args.p_max,
        seed: args.seed,
        bucket: args.bucket.map(|b| match b {
            BucketArg::Intensity => BucketMode::IntensitySum,
            BucketArg::Amplitude => BucketMode::Amplitude,
        }),
        realizations: args.realizations,
    };
    apply_overrides(&mut model, &overrides)?;
    let resolved = resolve(&model, &dir)?;
    let scale = if args.raw { Scale::Raw } else { Scale::Peak };
    let output = run(&resolved, scale)?;

    let source = match model.source.kind {
        SourceKind::Spdc => "spdc".to_string(),
        SourceKind::Classical { epsilon } => format!("classical epsilon={epsilon}"),
        SourceKind::RandomPhase => format!("randomphase realizations={}", resolved.realizations),
    };
    let seed = model.seed().map_or("none".to_string(), |s| s.to_string());
    let comments = vec![
        format!("bench {label}"),
        format!(
            "grid n={} extent_m={} p_max={} modes={}",
            model.grid.n,
            model.grid.extent,
            model.grid.p_max,
            resolved.grid.mode_count()
        ),
        format!("source {source}"),
        format!("seed {seed}"),
        format!("scale {}", if args.raw { "raw" } else { "peak" }),
    ];

    let out = args.out.clone().unwrap_or_else(|| {
        let stem = Path::new(&args.bench).file_stem().map(|s| s.to_string_lossy().into_owned());
        PathBuf::from(format!("{}.csv", stem.unwrap_or_else(|| "pattern".into())))
    });
    write_outputs(&out, &comments, &output)?;
    let metrics = metrics_json(&label, &model, &resolved.grid.mode_count(), &output);
    let mut body = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    body.push('\n');
    write_file(&sibling(&out, ".metrics.json"), body.as_bytes())
}

fn write_outputs(out: &Path, comments: &[String], output: &RunOutput) -> Result<(), Failure> {
    let mut buf = Vec::new();
    output
        .pattern
        .write_csv(&mut buf, comments, output.stderr.as_deref())
        .map_err(|e| io_failure(out, e))?;
    write_file(out, &buf)?;
    if let Some(singles) = &output.singles {
        let path = sibling(out, ".singles.csv");
        let mut buf = Vec::new();
        let mut c = comments.to_vec();
        c.push("singles".into());
        singles.write_csv(&mut buf, &c, None).map_err(|e| io_failure(&path, e))?;
        write_file(&path, &buf)?;
    }
    if let Some(reference) = &output.reference {
        let path = sibling(out, ".reference.csv");
        let mut buf = Vec::new();
        let mut c = comments.to_vec();
        c.push("reference".into());
        reference.write_csv(&mut buf, &c, None).map_err(|e| io_failure(&path, e))?;
        write_file(&path, &buf)?;
    }
    Ok(())
}

fn metrics_json(label: &str, model: &bench::BenchModel, modes: &usize, output: &RunOutput) -> serde_json::Value {
    let m = &output.metrics;
    json!({
        "bench": label,
        "grid_n": model.grid.n,
        "modes": modes,
        "seed": model.seed(),
        "fringe_spacing_m": m.fringe_spacing_m,
        "visibility": m.visibility,
        "image_error": m.image_error,
        "singles_visibility": m.singles_visibility,
        "rms_vs_closed_form": m.rms_vs_closed_form,
    })
}

fn cmd_witness(sub: &WitnessCmd) -> Result<(), Failure> {
    let suite = witness_suite();
    match sub {
        WitnessCmd::Expect => {
            let phi = suite.phi_plus.projector();
            let mixed = DensityMatrix::maximally_mixed((2, 2));
            println!("tr(W phi+) = {:.12}", expectation(&phi, &suite.w)?);
            println!("tr(W I/4) = {:.12}", expectation(&mixed, &suite.w)?);
        }
        WitnessCmd::Threshold => {
            println!("ppt_threshold = {:.9}", ppt_threshold(&suite.phi_plus.projector())?);
        }
        WitnessCmd::Sweep { n, seed, out } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let values = (0..*n)
                .map(|_| expectation(&random_product_mixture((2, 2), 8, &mut rng).density(), &suite.w))
                .collect::<qimsim::Result<Vec<f64>>>()?;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut buf = Vec::new();
            writeln!(buf, "# qimsim witness-sweep v1").unwrap();
            writeln!(buf, "# n={n} seed={seed}").unwrap();
            writeln!(buf, "# min={min:e} max={max:e}").unwrap();
            writeln!(buf, "index,value").unwrap();
            for (i, v) in values.iter().enumerate() {
                writeln!(buf, "{i},{v:e}").unwrap();
            }
            match out {
                Some(path) => {
                    write_file(path, &buf)?;
                    println!("min = {min:e}");
                    println!("max = {max:e}");
                }
                None => io::stdout().write_all(&buf).map_err(|e| io_failure(Path::new("-"), e))?,
            }
        }
    }
    Ok(())
}

fn cmd_presets(sub: &PresetsCmd) -> Result<(), Failure> {
    match sub {
        PresetsCmd::List => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
        }
        PresetsCmd::Show { name } => match bench::preset(name.strip_suffix(".bench").unwrap_or(name)) {
            Some(text) => print!("{text}"),
            None => return Err(Failure::Usage(format!("no preset named `{name}`"))),
        },
    }
    Ok(())
}
