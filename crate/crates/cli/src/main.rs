//! coemit: two-photon coincidence statistics of cooperatively emitting
//! quantum dots, batch front-end.

mod config;
mod presets;
mod runner;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use config::{diagnose, Experiment, RawConfig};

#[derive(Parser)]
#[command(name = "coemit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an experiment (config file or figure preset) and write CSVs.
    Run {
        /// TOML config; mutually exclusive with a preset name.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Figure preset name (see list-presets).
        preset: Option<String>,
        /// Output directory for CSV bundles.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Concurrent experiments within a suite.
        #[arg(long, default_value_t = 2)]
        workers: usize,
        /// Process-tensor cache directory; COEMIT_CACHE_DIR overrides the
        /// default, --cache-dir overrides both. "none" disables caching.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Dry-run checks of a config or preset without computing anything.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        preset: Option<String>,
    },
    /// List the built-in figure presets and their runs.
    ListPresets,
}

fn load_experiments(
    config: &Option<PathBuf>,
    preset: &Option<String>,
) -> Result<Vec<(String, RawConfig)>> {
    match (config, preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let raw = RawConfig::parse(&text)?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "experiment".into());
            Ok(vec![(stem, raw)])
        }
        (None, Some(name)) => presets::preset(name)
            .with_context(|| format!("unknown preset {name:?}; see list-presets")),
        (Some(_), Some(_)) => bail!("give either --config or a preset name, not both"),
        (None, None) => bail!("nothing to do: give --config or a preset name"),
    }
}

fn cache_dir_from(flag: Option<PathBuf>) -> Option<PathBuf> {
    let dir = flag.or_else(|| std::env::var_os("COEMIT_CACHE_DIR").map(PathBuf::from));
    match dir {
        Some(d) if d.as_os_str() == "none" => None,
        Some(d) => Some(d),
        None => Some(PathBuf::from(".coemit-cache")),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            preset,
            out,
            workers,
            cache_dir,
        } => {
            let raws = load_experiments(&config, &preset)?;
            let exps: Vec<Experiment> = raws
                .iter()
                .map(|(name, raw)| raw.to_experiment(name))
                .collect::<Result<_>>()?;
            let cache = cache_dir_from(cache_dir);
            let artifacts = runner::run_suite(&exps, &out, cache.as_deref(), workers)?;
            for a in artifacts {
                for f in a.files {
                    println!("{}: {}", a.name, f.display());
                }
            }
            Ok(())
        }
        Command::Validate { config, preset } => {
            let raws = load_experiments(&config, &preset)?;
            let mut failed = false;
            for (name, raw) in &raws {
                for d in diagnose(raw, name) {
                    failed = true;
                    eprintln!("{name}: {d}");
                }
            }
            if failed {
                std::process::exit(1);
            }
            println!("ok: {} run(s) valid", raws.len());
            Ok(())
        }
        Command::ListPresets => {
            for name in presets::PRESET_NAMES {
                let runs = presets::preset(name).unwrap();
                let tags: Vec<&str> = runs.iter().map(|(n, _)| n.as_str()).collect();
                println!("{name}: {}", tags.join(", "));
            }
            Ok(())
        }
    }
}
