use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iaac_cli::error::CliError;
use iaac_cli::{config, evaluate, gen, hscic_cmd, manifest, plot, rpe_cmd, train};

#[derive(Parser)]
#[command(
    name = "iaac",
    version,
    about = "Runs informed actor-critic experiments: generate instances, train, test signals, plot"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a noise ladder of synthetic tabular instances
    Gen(ConfigArgs),
    /// Train actor-critic runs over critic variants and seeds
    Train(ConfigArgs),
    /// Roll out a trained actor and summarize returns
    Evaluate(ConfigArgs),
    /// Kernel conditional-independence screening over generated instances
    HscicTest(ConfigArgs),
    /// Bound one critic's return-prediction advantage over another
    RpeTest(ConfigArgs),
    /// Draw SVG figures from run outputs
    Plot(PlotCmd),
    /// Re-hash a run directory against its manifest
    Verify { dir: PathBuf },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path config override, e.g. --set seed=3 --set base.num_states=6
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write outputs here instead of the config's out_dir
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PlotCmd {
    #[command(subcommand)]
    kind: PlotKind,
}

#[derive(Subcommand)]
enum PlotKind {
    /// Learning-curve bands from training logs, one series per parent directory
    Curves {
        /// Training log CSVs
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, default_value = "out/plots/curves")]
        out_dir: PathBuf,
        /// Number of grid points the logs are interpolated onto
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value = "learning curves")]
        title: String,
    },
    /// Per-delta boxplots of the per-episode bound from an rpe-test rows table
    Epsilon {
        /// rows.csv written by rpe-test
        rows: PathBuf,
        #[arg(long, default_value = "out/plots/epsilon")]
        out_dir: PathBuf,
        #[arg(long, default_value = "return-prediction advantage bound")]
        title: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn override_dir(out_dir: &mut String, flag: Option<PathBuf>) {
    if let Some(d) = flag {
        *out_dir = d.to_string_lossy().into_owned();
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Gen(a) => {
            let mut cfg: gen::GenConfig = config::load_config(&a.config, &a.set)?;
            override_dir(&mut cfg.out_dir, a.out_dir);
            let m = gen::run(&cfg)?;
            done("gen", m.outputs.len(), &cfg.out_dir);
        }
        Cmd::Train(a) => {
            let mut cfg: train::TrainCmdConfig = config::load_config(&a.config, &a.set)?;
            override_dir(&mut cfg.out_dir, a.out_dir);
            let m = train::run(&cfg)?;
            done("train", m.outputs.len(), &cfg.out_dir);
        }
        Cmd::Evaluate(a) => {
            let mut cfg: evaluate::EvaluateConfig = config::load_config(&a.config, &a.set)?;
            override_dir(&mut cfg.out_dir, a.out_dir);
            let m = evaluate::run(&cfg)?;
            done("evaluate", m.outputs.len(), &cfg.out_dir);
        }
        Cmd::HscicTest(a) => {
            let mut cfg: hscic_cmd::HscicTestConfig = config::load_config(&a.config, &a.set)?;
            override_dir(&mut cfg.out_dir, a.out_dir);
            let m = hscic_cmd::run(&cfg)?;
            done("hscic-test", m.outputs.len(), &cfg.out_dir);
        }
        Cmd::RpeTest(a) => {
            let mut cfg: rpe_cmd::RpeCmdConfig = config::load_config(&a.config, &a.set)?;
            override_dir(&mut cfg.out_dir, a.out_dir);
            let m = rpe_cmd::run(&cfg)?;
            done("rpe-test", m.outputs.len(), &cfg.out_dir);
        }
        Cmd::Plot(p) => match p.kind {
            PlotKind::Curves {
                logs,
                out_dir,
                points,
                title,
            } => {
                let args = plot::CurveArgs {
                    logs,
                    out_dir,
                    points,
                    title,
                };
                let m = plot::curves(&args)?;
                done("plot curves", m.outputs.len(), &args.out_dir.display().to_string());
            }
            PlotKind::Epsilon {
                rows,
                out_dir,
                title,
            } => {
                let args = plot::EpsilonArgs {
                    rows,
                    out_dir,
                    title,
                };
                let m = plot::epsilon(&args)?;
                done("plot epsilon", m.outputs.len(), &args.out_dir.display().to_string());
            }
        },
        Cmd::Verify { dir } => {
            let m = manifest::verify_manifest(&dir)?;
            println!(
                "verify: {} files match under {} ({})",
                m.outputs.len(),
                dir.display(),
                m.command
            );
        }
    }
    Ok(())
}

fn done(cmd: &str, files: usize, dir: &str) {
    println!("{cmd}: wrote {files} files under {dir} (+ manifest.json)");
}
