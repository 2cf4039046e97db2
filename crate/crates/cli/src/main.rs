//! `fsbayes` command line: batch experiments over configured Bayesian
//! inverse problems on truncated function spaces.

use clap::{Parser, Subcommand};
use fsbayes_cli::config::{parse_config, ExperimentConfig};
use fsbayes_cli::error::{CliError, CliResult};
use fsbayes_cli::{io, recipes, runner};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "fsbayes",
    version,
    about = "Bayesian inverse problems on truncated function spaces: particle posteriors, \
             likelihood-ratio noise models, and convergence diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads for particle loops (results are identical at any
    /// count).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the prior ensemble and synthesize (or load) the observation.
    Generate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute the posterior reweighting and its summary.
    Posterior {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the discretization-level ladder and the uniform-integrability
    /// profile.
    Ladder {
        #[arg(long)]
        config: PathBuf,
    },
    /// Probe posterior continuity under perturbed observations.
    Probe {
        #[arg(long)]
        config: PathBuf,
    },
    /// List, show, or run the bundled recipes.
    Recipes {
        #[command(subcommand)]
        action: Option<RecipeAction>,
    },
}

#[derive(Subcommand)]
enum RecipeAction {
    /// List recipe names.
    List,
    /// Print a recipe's config.
    Show { name: String },
    /// Run a recipe end to end.
    Run { name: String },
}

fn load_config(path: &Path, cli: &Cli) -> CliResult<(ExperimentConfig, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    finalize_config(text, cli)
}

fn finalize_config(text: String, cli: &Cli) -> CliResult<(ExperimentConfig, String)> {
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.directory = out.clone();
    }
    runner::validate_combination(&cfg)?;
    Ok((cfg, text))
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate { config } => {
            let (cfg, _) = load_config(config, cli)?;
            let out = io::out_dir(&cfg.output.directory);
            let exp = runner::Experiment::assemble(cfg)?;
            let artifacts = runner::stage_generate(&exp, &out)?;
            for a in &artifacts {
                println!("wrote {}", a.path);
            }
            Ok(())
        }
        Command::Posterior { config } => {
            let (cfg, text) = load_config(config, cli)?;
            let out = io::out_dir(&cfg.output.directory);
            let hash = io::config_hash(&text);
            let exp = runner::Experiment::assemble(cfg)?;
            let (artifacts, valid) = runner::stage_posterior(&exp, &out, &hash)?;
            for a in &artifacts {
                println!("wrote {}", a.path);
            }
            if !valid {
                return Err(CliError::Degenerate(
                    "posterior is degenerate; diagnostics written to summary.json".into(),
                ));
            }
            Ok(())
        }
        Command::Ladder { config } => {
            let (cfg, _) = load_config(config, cli)?;
            let out = io::out_dir(&cfg.output.directory);
            let exp = runner::Experiment::assemble(cfg)?;
            let artifacts = runner::stage_ladder(&exp, &out)?;
            for a in &artifacts {
                println!("wrote {}", a.path);
            }
            Ok(())
        }
        Command::Probe { config } => {
            let (cfg, _) = load_config(config, cli)?;
            let out = io::out_dir(&cfg.output.directory);
            let exp = runner::Experiment::assemble(cfg)?;
            let artifacts = runner::stage_probe(&exp, &out)?;
            for a in &artifacts {
                println!("wrote {}", a.path);
            }
            Ok(())
        }
        Command::Recipes { action } => match action {
            None | Some(RecipeAction::List) => {
                for name in recipes::names() {
                    println!("{name}");
                }
                Ok(())
            }
            Some(RecipeAction::Show { name }) => {
                let text = recipes::find(name)
                    .ok_or_else(|| CliError::Config(format!("unknown recipe `{name}`")))?;
                print!("{text}");
                Ok(())
            }
            Some(RecipeAction::Run { name }) => {
                let text = recipes::find(name)
                    .ok_or_else(|| CliError::Config(format!("unknown recipe `{name}`")))?;
                let (cfg, text) = finalize_config(text.to_string(), cli)?;
                let out = io::out_dir(&cfg.output.directory);
                let manifest = runner::run_experiment(cfg, &text, &out)?;
                for a in &manifest.artifacts {
                    println!("wrote {}", a.path);
                }
                Ok(())
            }
        },
    }
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads;
    let result = fsbayes::exec::run_with_threads(threads, || dispatch(&cli));
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
