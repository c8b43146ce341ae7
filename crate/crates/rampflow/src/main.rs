//! Command-line front end for the rampflow solver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rampflow::config::{resolve_config, RunConfig};
use rampflow::experiments::{compare_models, convergence_study, run, OutputOptions};
use rampflow::scheme::ModelVariant;

#[derive(Parser)]
#[command(name = "rampflow", version, about = "Nonlocal traffic flow solver with on- and off-ramps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Preset name (example1..example4) or path to a JSON config file.
    config: String,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Validate the configuration and report the plan without running.
    #[arg(long)]
    dry_run: bool,
    /// Override the CFL safety factor in (0, 1].
    #[arg(long)]
    cfl_safety: Option<f64>,
    /// Skip per-step diagnostics recording and output.
    #[arg(long)]
    no_diagnostics: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write snapshots plus diagnostics.
    Run(CommonOpts),
    /// Compare runs at several kernel radii against the local Godunov
    /// reference.
    Convergence {
        #[command(flatten)]
        common: CommonOpts,
        /// Kernel radii to test, e.g. --eta 0.1,0.05,0.01,0.004
        #[arg(long, value_delimiter = ',', required = true)]
        eta: Vec<f64>,
    },
    /// Run the same scenario under several source models.
    Compare {
        #[command(flatten)]
        common: CommonOpts,
        /// Models to include, e.g. --models model0,model1,model2
        #[arg(long, value_delimiter = ',', required = true)]
        models: Vec<String>,
    },
    /// Inspect the built-in presets.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
}

#[derive(Subcommand)]
enum PresetsAction {
    /// List the preset names.
    List,
    /// Print a preset as JSON.
    Show { name: String },
}

fn parse_model(s: &str) -> Result<ModelVariant, String> {
    match s.trim() {
        "model0" | "0" => Ok(ModelVariant::Model0),
        "model1" | "1" => Ok(ModelVariant::Model1),
        "model2" | "2" => Ok(ModelVariant::Model2),
        other => Err(format!("unknown model '{other}', expected model0, model1 or model2")),
    }
}

fn load(common: &CommonOpts) -> Result<(RunConfig, OutputOptions), String> {
    let mut cfg = resolve_config(&common.config).map_err(|e| e.to_string())?;
    if let Some(s) = common.cfl_safety {
        cfg.cfl_safety = s;
    }
    let opts = OutputOptions {
        out_dir: common.out.clone(),
        dry_run: common.dry_run,
        diagnostics: !common.no_diagnostics,
    };
    Ok((cfg, opts))
}

fn execute(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run(common) => {
            let (cfg, opts) = load(&common)?;
            let summary = run(&cfg, &opts).map_err(|e| e.to_string())?;
            if opts.dry_run {
                println!(
                    "dry run: {} ({}, {} cells), dt = {:.6e}, about {} steps to t = {:?}",
                    summary.name, summary.model, summary.n_cells, summary.dt, summary.steps,
                    summary.output_times
                );
            } else {
                println!(
                    "{} ({}) finished: {} steps, dt = {:.6e}, wall time {:.3} s",
                    summary.name,
                    summary.model,
                    summary.steps,
                    summary.dt,
                    summary.wall_time.as_secs_f64()
                );
                for file in &summary.files {
                    println!("  wrote {}", opts.out_dir.join(file).display());
                }
                if let Some(d) = &summary.diagnostics {
                    println!(
                        "  density range [{:.6}, {:.6}], {} max-principle / {} L1 / {} TV bound violations",
                        d.min_density,
                        d.max_density,
                        d.max_principle_violations,
                        d.l1_violations,
                        d.tv_violations
                    );
                    if let Some(e) = d.worst_entropy_residual {
                        println!("  worst entropy residual {e:.3e}");
                    }
                }
            }
            Ok(())
        }
        Command::Convergence { common, eta } => {
            let (cfg, opts) = load(&common)?;
            let rows = convergence_study(&cfg, &eta, &opts).map_err(|e| e.to_string())?;
            if opts.dry_run {
                println!("dry run: {} eta values validated", eta.len());
            } else {
                println!("eta        L1 distance to local reference");
                for row in &rows {
                    println!("{:<10.4} {:.6e}", row.eta, row.l1_distance);
                }
                println!("wrote {}", opts.out_dir.join("convergence.csv").display());
            }
            Ok(())
        }
        Command::Compare { common, models } => {
            let (cfg, opts) = load(&common)?;
            let variants = models
                .iter()
                .map(|s| parse_model(s))
                .collect::<Result<Vec<_>, _>>()?;
            let files = compare_models(&cfg, &variants, &opts).map_err(|e| e.to_string())?;
            if opts.dry_run {
                println!("dry run: {} model variants validated", variants.len());
            } else {
                for f in &files {
                    println!("wrote {}", f.display());
                }
            }
            Ok(())
        }
        Command::Presets { action } => match action {
            PresetsAction::List => {
                for name in RunConfig::preset_names() {
                    println!("{name}");
                }
                Ok(())
            }
            PresetsAction::Show { name } => {
                let cfg = RunConfig::preset(&name)
                    .ok_or_else(|| format!("unknown preset '{name}'"))?;
                let json = serde_json::to_string_pretty(&cfg).map_err(|e| e.to_string())?;
                println!("{json}");
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
