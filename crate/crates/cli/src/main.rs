use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use imu_dse::config::{load_corpus_spec, RunConfig, DEFAULT_OUTPUT_DIR};
use imu_dse::config_space::{enumerate_configurations, SensorConfiguration, SensorTable};
use imu_dse::dse::analysis::{best_per_count, lambda_sweep, occurrence_analysis, pareto_front, rank};
use imu_dse::dse::results::{
    load_results, save_best_per_count, save_lambda_sweep, save_occurrences, save_pareto, save_rankings, write_occurrences,
    write_ranking,
};
use imu_dse::dse::{default_lambda_grid, execute, synthesize_for, MANIFEST_FILE, RESULTS_FILE};
use imu_dse::imu::save_imu;
use imu_dse::metrics::Metric;
use imu_dse::motion::{generate_corpus, load_motion, save_motion};

/// Environment variable naming the output directory when the config has none.
const OUT_ENV: &str = "IMU_DSE_OUT";

#[derive(Parser)]
#[command(name = "imu-dse", version, about = "Design-space exploration of body-worn IMU sensor configurations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic motion corpora.
    Motions {
        #[command(subcommand)]
        command: MotionsCommand,
    },
    /// Synthesize virtual IMU data for one motion file and sensor set.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        motion: PathBuf,
        /// Sensor ids, e.g. "0,2,16,17".
        #[arg(long)]
        sensors: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print every valid configuration and the total count.
    Enumerate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exploration runs.
    Dse {
        #[command(subcommand)]
        command: DseCommand,
    },
    /// Rank results by the combined score.
    Rank {
        #[command(flatten)]
        input: ResultsInput,
        #[arg(long)]
        lambda: f64,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sensor occurrences in the best and worst configurations per count.
    Occurrences {
        #[command(flatten)]
        input: ResultsInput,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Sensor table JSON used for symmetric pairs (default: built-in table).
        #[arg(long)]
        sensor_table: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write best-per-count, Pareto, ranking, occurrence and lambda-sweep files.
    Report {
        #[command(flatten)]
        input: ResultsInput,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Comma-separated lambda values (default 0, 0.05, ..., 1).
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long)]
        sensor_table: Option<PathBuf>,
        /// Defaults to the directory holding the results file.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ResultsInput {
    #[arg(long)]
    results: PathBuf,
    /// One of sip, angular, positional, mesh, jitter.
    #[arg(long, default_value = "mesh")]
    metric: String,
}

impl ResultsInput {
    fn metric(&self) -> Result<Metric> {
        Ok(self.metric.parse()?)
    }
}

#[derive(Subcommand)]
enum MotionsCommand {
    /// Generate a corpus from a TOML spec.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DseCommand {
    /// Evaluate every configuration; writes results.csv and manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides the config and $IMU_DSE_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn table_or_default(path: Option<&Path>) -> Result<SensorTable> {
    Ok(match path {
        Some(p) => SensorTable::load(p)?,
        None => SensorTable::basic(),
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Motions {
            command: MotionsCommand::Gen { spec, out },
        } => {
            let spec = load_corpus_spec(&spec)?;
            let seqs = generate_corpus(&spec)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for s in &seqs {
                save_motion(s, out.join(format!("{}.json", s.name)))?;
            }
            println!("wrote {} sequences to {}", seqs.len(), out.display());
        }
        Command::Synth {
            config,
            motion,
            sensors,
            out,
            seed,
        } => {
            let cfg = load_config(&config)?;
            let ids = SensorConfiguration::parse_field(&sensors)?;
            let motion = load_motion(&motion)?;
            let skeleton = cfg.plan(None)?.skeleton()?;
            let table = cfg.sensor_table()?;
            let imu = synthesize_for(&motion, &skeleton, &table, ids.ids(), &cfg.synthesis, seed.unwrap_or(cfg.seed))?;
            save_imu(&imu, &cfg.synthesis, &out)?;
            println!("wrote {} frames x {} sensors to {}", imu.len(), ids.count(), out.display());
        }
        Command::Enumerate { config } => {
            let cfg = load_config(&config)?;
            let configs = enumerate_configurations(&cfg.sensor_table()?, &cfg.constraints);
            let mut w = std::io::stdout().lock();
            for c in &configs {
                writeln!(w, "{c}")?;
            }
            writeln!(w, "count: {}", configs.len())?;
        }
        Command::Dse {
            command: DseCommand::Run {
                config,
                workers,
                seed,
                out,
            },
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out_dir = out
                .or_else(|| cfg.paths.output_dir.clone())
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
            let plan = cfg.plan(Some(&out_dir))?;
            let run = execute(&plan)?;
            for f in &run.failures {
                eprintln!("configuration {} {}: {}", f.config_id, f.sensor_ids, f.reason);
            }
            println!(
                "evaluated {} configurations ({} invalid); wrote {} and {}",
                run.records.len(),
                run.failures.len(),
                out_dir.join(RESULTS_FILE).display(),
                out_dir.join(MANIFEST_FILE).display()
            );
        }
        Command::Rank { input, lambda, out } => {
            let metric = input.metric()?;
            let records = load_results(&input.results)?;
            let ranking = rank(&records, metric, lambda)?;
            let mut w = output(out.as_deref())?;
            write_ranking(&ranking, metric, lambda, &mut w)?;
            w.flush()?;
        }
        Command::Occurrences {
            input,
            k,
            sensor_table,
            out,
        } => {
            let metric = input.metric()?;
            let records = load_results(&input.results)?;
            let table = table_or_default(sensor_table.as_deref())?;
            let occ = occurrence_analysis(&records, &table, metric, k);
            let mut w = output(out.as_deref())?;
            write_occurrences(&occ, &mut w)?;
            w.flush()?;
        }
        Command::Report {
            input,
            k,
            lambdas,
            sensor_table,
            out_dir,
        } => {
            let metric = input.metric()?;
            let records = load_results(&input.results)?;
            let table = table_or_default(sensor_table.as_deref())?;
            let lambdas = lambdas.unwrap_or_else(default_lambda_grid);
            let dir = out_dir.unwrap_or_else(|| {
                input
                    .results
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_default()
            });
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let name = |kind: &str| dir.join(format!("{}_{kind}.csv", metric.name()));

            save_best_per_count(&best_per_count(&records, metric, k), metric, name("best_per_count"))?;
            save_pareto(&pareto_front(&records, metric), metric, name("pareto"))?;
            save_occurrences(&occurrence_analysis(&records, &table, metric, k), name("occurrences"))?;
            let rankings = lambdas
                .iter()
                .map(|&l| Ok((l, rank(&records, metric, l)?)))
                .collect::<Result<Vec<_>>>()?;
            save_rankings(&rankings, metric, name("rankings"))?;
            save_lambda_sweep(&lambda_sweep(&records, metric, &lambdas)?, metric, name("lambda_sweep"))?;
            println!("wrote {} reports to {}", metric.name(), dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e
                .downcast_ref::<imu_dse::Error>()
                .is_some_and(imu_dse::Error::is_validation);
            ExitCode::from(if validation { 1 } else { 2 })
        }
    }
}
