use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use distpoison_core::attack::PerturbationSet;
use distpoison_core::experiment::{emit_results, prepare_dir, replay, run_experiment, scaling_benchmark, ExperimentConfig};
use distpoison_core::gnn::{check_gradients, ParamSet};
use distpoison_core::graph::{generate_sbm, SbmParams};
use distpoison_core::Error;

#[derive(Parser)]
#[command(name = "distpoison", version, about = "Poisoning experiments on simulated distributed GNN training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment config; unset keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted override such as `attack.params.lambda_homo=0`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Paired clean and poisoned runs for every configured seed.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory; falls back to `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        /// Seeds to run concurrently.
        #[arg(long, default_value_t = 1)]
        parallel_seeds: usize,
    },
    /// Attack time over SBM graphs scaled by each multiplier.
    Bench {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        multipliers: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Retrains with a stored perturbation set applied.
    Replay {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// A `perturbations.json` written by `run`.
        #[arg(long)]
        perturbations: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Compares analytic gradients with central differences.
    Gradcheck {
        #[arg(long, default_value_t = 12)]
        nodes: usize,
        #[arg(long, default_value_t = 8)]
        hidden: usize,
        #[arg(long, default_value_t = 6)]
        feature_dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
        /// Exit with status 1 when the max relative error reaches this.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Error> {
    let loaded = match &args.config {
        Some(path) => ExperimentConfig::load(path, &args.overrides),
        None => ExperimentConfig::from_toml_str("", &args.overrides),
    };
    // a config file that cannot be read or parsed is the user's to fix
    loaded.map_err(|e| match e {
        Error::Io { .. } | Error::Parse { .. } => Error::config("--config", e.to_string()),
        e => e,
    })
}

fn refuse_existing(path: &Path, force: bool) -> Result<(), Error> {
    if path.exists() && !force {
        return Err(Error::config(
            "out",
            format!("{} already exists; pass --force to overwrite", path.display()),
        ));
    }
    Ok(())
}

fn write_json(value: &impl serde::Serialize, path: &Path) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::parse("json", e))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run {
            cfg,
            out,
            force,
            parallel_seeds,
        } => {
            let mut config = load_config(&cfg)?;
            let dir = out
                .or_else(|| config.output.clone())
                .ok_or_else(|| Error::config("output", "pass --out or set `output`"))?;
            config.output = Some(dir.clone());
            // refuse before spending the compute
            prepare_dir(&dir, force)?;
            let outputs = run_experiment(&config, parallel_seeds)?;
            emit_results(&config, &outputs, &dir, true)?;
            for o in &outputs {
                let r = &o.result;
                println!(
                    "seed {:>3}  clean {:.4}  attacked {:.4}  drop {:+.4}  w1 {:.4}  attack {:.2}s",
                    r.seed, r.clean_accuracy, r.attacked_accuracy, r.accuracy_drop, r.homophily_w1, r.attack_seconds
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::Bench {
            cfg,
            multipliers,
            repeats,
            out,
            force,
        } => {
            let config = load_config(&cfg)?;
            if let Some(path) = &out {
                refuse_existing(path, force)?;
            }
            let report = scaling_benchmark(&config, &multipliers, repeats)?;
            match out {
                Some(path) => {
                    write_json(&report, &path)?;
                    println!("r2 {:.4}, wrote {}", report.fit.r2, path.display());
                }
                None => println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::parse("json", e))?),
            }
        }
        Command::Replay {
            cfg,
            perturbations,
            seed,
            out,
            force,
        } => {
            let config = load_config(&cfg)?;
            let set = PerturbationSet::load(&perturbations)?;
            prepare_dir(&out, force)?;
            let output = replay(&config, seed, set)?;
            emit_results(&config, std::slice::from_ref(&output), &out, true)?;
            println!(
                "seed {seed}  clean {:.4}  attacked {:.4}  drop {:+.4}",
                output.result.clean_accuracy, output.result.attacked_accuracy, output.result.accuracy_drop
            );
        }
        Command::Gradcheck {
            nodes,
            hidden,
            feature_dim,
            seed,
            epsilon,
            tolerance,
        } => {
            let blocks = 3.min(nodes.max(1));
            let mut sizes = vec![nodes / blocks; blocks];
            sizes[0] += nodes % blocks;
            let g = generate_sbm(&SbmParams {
                block_sizes: sizes,
                p_intra: 0.5,
                p_inter: 0.2,
                feature_dim,
                seed,
                ..SbmParams::default()
            })?;
            let params = ParamSet::init_gcn(feature_dim, hidden, g.num_classes(), 0.1, seed);
            let all: Vec<usize> = (0..g.num_nodes()).collect();
            let report = check_gradients(&params, &g, &all, epsilon)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::parse("json", e))?);
            if report.max_rel_error >= tolerance {
                eprintln!("max relative error {:e} >= {tolerance:e}", report.max_rel_error);
                return Err(Error::parse("gradcheck", "tolerance exceeded"));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
