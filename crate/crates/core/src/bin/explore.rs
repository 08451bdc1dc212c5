use clap::{Parser, Subcommand};
use multifloor_explore::policies::PolicyKind;
use multifloor_explore::runner::{run_batch, run_episode, write_outputs, BatchConfig, RunConfig, RunError, Seeds, WorldSource};
use multifloor_explore::world::{generate_world, save_world, WorldSpec};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "explore", version, about = "Multi-floor indoor exploration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its record.
    Run {
        /// World directory, or `gen:` with an optional spec.
        #[arg(long)]
        world: String,
        /// nearest, utility, rrt-nbv, stochastic or external:<cmd>.
        #[arg(long, default_value = "nearest")]
        policy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Primitive-step budget; 1000 for one floor, 3000 otherwise.
        #[arg(long)]
        budget: Option<usize>,
        /// Episode settings as JSON; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every (world, policy, seed) combination of a batch file.
    Batch {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output directory of the batch file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a world and save it as PGM floors plus metadata.
    GenWorld {
        /// World spec as JSON; defaults when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::Config(format!("invalid {}: {e}", path.display())))
}

fn execute(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run {
            world,
            policy,
            seed,
            budget,
            config,
            out,
        } => {
            let source: WorldSource = world.parse()?;
            let kind: PolicyKind = policy.parse().map_err(RunError::Config)?;
            let mut cfg: RunConfig = match &config {
                Some(path) => read_json(path)?,
                None => RunConfig::default(),
            };
            if budget.is_some() {
                cfg.budget = budget;
            }
            cfg.validate()?;
            let world_seed = Seeds::split(seed).world;
            let w = source.resolve(world_seed)?;
            let record = run_episode(&w, &kind, &cfg, seed)?;
            let extra = serde_json::json!({
                "seed": seed,
                "policy": kind.to_string(),
                "world": world,
                "world_seed": world_seed,
            });
            write_outputs(&record, &out, extra)?;
            let m = record.metrics();
            println!(
                "{}: {} steps, CR {:.4}, CA {:.2} m², APL {:.4}, SR {}, status {}",
                out.display(),
                m.steps,
                m.cr,
                m.ca,
                m.apl,
                m.sr,
                record.summary.final_status
            );
            Ok(())
        }
        Command::Batch { config, out } => {
            let mut batch: BatchConfig = read_json(&config)?;
            if out.is_some() {
                batch.out = out;
            }
            let dir = batch
                .out
                .clone()
                .ok_or_else(|| RunError::Config("no output directory; set \"out\" or pass --out".into()))?;
            let outcome = run_batch(&batch)?;
            outcome.write(&dir)?;
            for (policy, agg) in &outcome.aggregate {
                println!(
                    "{policy}: {} runs, CR {:.4} ± {:.4}, APL {:.4} ± {:.4}, SR {:.3}",
                    agg.runs, agg.cr.mean, agg.cr.std, agg.apl.mean, agg.apl.std, agg.sr.mean
                );
            }
            Ok(())
        }
        Command::GenWorld { spec, seed, out } => {
            let spec: WorldSpec = match &spec {
                Some(path) => read_json(path)?,
                None => WorldSpec::default(),
            };
            let world = generate_world(seed, &spec)?;
            save_world(&world, &out)?;
            println!(
                "{}: {} floor(s), {} stair link(s)",
                out.display(),
                world.n_floors(),
                world.stair_links().len()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
