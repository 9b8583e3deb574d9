use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use travnav::harness::{
    collect_dataset, labelgen, run_batch, run_episode, write_batch, write_collection, write_episode, Config,
    ControllerKind, EpisodeOptions, HarnessError,
};

#[derive(Parser)]
#[command(name = "travnav", version, about = "Traversability-aware navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop episode.
    Episode {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run many seeds per controller and print the success table.
    Batch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 20)]
        runs: u64,
        #[arg(long, value_delimiter = ',', default_value = "wayfast,blind,geometric")]
        controllers: Vec<ControllerKind>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Drive a scripted route and write a labeled dataset.
    Collect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        duration: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild labels from a collection directory.
    Labelgen {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Episode { config, seed, out } => {
            let mut cfg = Config::load(&config)?;
            if let Some(s) = seed {
                cfg.episode.seed = s;
            }
            let options = EpisodeOptions {
                image_dir: (cfg.episode.image_dump_every > 0).then(|| out.join("images")),
            };
            let (result, trace) = run_episode(&cfg, &options)?;
            let result = write_episode(&out, &result, &trace)?;
            println!(
                "{} seed {}: {} after {:.1} s, path {:.2} m, {:.2} m from goal",
                result.controller,
                result.seed,
                result.outcome.name(),
                result.elapsed,
                result.path_length,
                result.final_distance
            );
        }
        Command::Batch {
            config,
            runs,
            controllers,
            out,
        } => {
            let cfg = Config::load(&config)?;
            let seeds: Vec<u64> = (0..runs).map(|k| cfg.episode.seed + k).collect();
            let report = run_batch(&cfg, &controllers, &seeds, Some(&out.join("episodes")))?;
            write_batch(&out, &report)?;
            print!("{report}");
        }
        Command::Collect { config, duration, out } => {
            let cfg = Config::load(&config)?;
            let collection = collect_dataset(&cfg, duration)?;
            write_collection(&out, &cfg, &collection)?;
            println!(
                "{} trajectory entries, {} labeled frames",
                collection.log.entries().len(),
                collection.frames.len()
            );
        }
        Command::Labelgen { log, out } => {
            let frames = labelgen(&log, &out)?;
            println!("{} labeled frames", frames.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
