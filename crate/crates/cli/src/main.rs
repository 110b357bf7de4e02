use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use maddm::harness::{
    build_report, execute_plan, read_results, trace_cell, write_report_files, CellId,
    EnvironmentSpec, ExperimentPlan,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "maddm",
    version,
    about = "Multi-advisor decision making experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Template {
    Env1,
    Env2,
}

#[derive(Subcommand)]
enum Command {
    /// Write a simulated environment as JSON.
    Generate {
        /// Take the environment of one plan cell instead of a template.
        #[arg(long, conflicts_with_all = ["template", "accuracy", "seed"])]
        plan: Option<PathBuf>,
        #[arg(long, requires = "plan")]
        environment: Option<String>,
        #[arg(long, default_value_t = 0)]
        grid_index: usize,
        #[arg(long, default_value_t = 0)]
        repetition: usize,

        #[arg(long, value_enum, default_value = "env1")]
        template: Template,
        #[arg(long, default_value_t = 0.75)]
        accuracy: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        decisions: Option<usize>,
        #[arg(long)]
        advisors: Option<usize>,
        /// Output file; stdout if omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Execute a plan and write results.csv, summary.csv and significance.csv.
    Run {
        /// Plan TOML; the built-in desk-scale plan if omitted.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Use the full 50-point, 100-repetition sweep (ignored with --plan).
        #[arg(long)]
        full: bool,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; all cores if omitted.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Rebuild summary.csv and significance.csv from a results.csv.
    Report {
        results: PathBuf,
        /// Directory for the tables; next to the results file if omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print per-decision rows of one method on one cell as JSON lines.
    Trace {
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, default_value = "env1")]
        environment: String,
        #[arg(long, default_value_t = 0)]
        grid_index: usize,
        #[arg(long, default_value_t = 0)]
        repetition: usize,
        #[arg(long, default_value = "maddm")]
        method: String,
    },
    /// Print the built-in plan as TOML.
    Plan {
        #[arg(long)]
        full: bool,
    },
}

fn load_plan(path: Option<&Path>) -> Result<ExperimentPlan> {
    match path {
        None => Ok(ExperimentPlan::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentPlan::from_toml(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate {
            plan,
            environment,
            grid_index,
            repetition,
            template,
            accuracy,
            seed,
            decisions,
            advisors,
            out,
        } => {
            let env = if let Some(path) = plan {
                let plan = load_plan(Some(&path))?;
                let name = environment.unwrap_or_else(|| plan.environments[0].name.clone());
                let Some(index) = plan.environments.iter().position(|e| e.name == name) else {
                    bail!("plan has no environment named {name:?}");
                };
                if grid_index >= plan.grid.len() || repetition >= plan.repetitions {
                    bail!("cell grid {grid_index} rep {repetition} lies outside the plan");
                }
                plan.environment(CellId {
                    environment: index,
                    grid_index,
                    repetition,
                })?
            } else {
                let mut spec = match template {
                    Template::Env1 => EnvironmentSpec::env1(),
                    Template::Env2 => EnvironmentSpec::env2(),
                };
                spec.n_decisions = decisions.unwrap_or(spec.n_decisions);
                spec.n_advisors = advisors.unwrap_or(spec.n_advisors);
                maddm::generate_environment(
                    &spec.config(accuracy),
                    &mut ChaCha8Rng::seed_from_u64(seed),
                )?
            };
            emit(out.as_deref(), &(env.to_json() + "\n"))
        }
        Command::Run {
            plan,
            full,
            out,
            threads,
        } => {
            let plan = match plan {
                Some(p) => load_plan(Some(&p))?,
                None if full => ExperimentPlan::full(),
                None => ExperimentPlan::default(),
            };
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()?;
            }
            let outcome = execute_plan(&plan, &out)?;
            eprintln!(
                "{} rows, {} cells computed, {} reused; wrote {}",
                outcome.rows.len(),
                outcome.cells_computed,
                plan.cells().len() - outcome.cells_computed,
                out.display()
            );
            Ok(())
        }
        Command::Report { results, out } => {
            let file = fs::File::open(&results)
                .with_context(|| format!("opening {}", results.display()))?;
            let rows =
                read_results(file).with_context(|| format!("reading {}", results.display()))?;
            let report = build_report(&rows)?;
            let dir =
                out.unwrap_or_else(|| results.parent().map(Path::to_path_buf).unwrap_or_default());
            fs::create_dir_all(&dir)?;
            write_report_files(&report, &dir)?;
            let significant = report.significance.iter().filter(|s| s.significant).count();
            eprintln!(
                "{} summary rows, {significant} of {} comparisons significant",
                report.summary.len(),
                report.significance.len()
            );
            Ok(())
        }
        Command::Trace {
            plan,
            environment,
            grid_index,
            repetition,
            method,
        } => {
            let plan = load_plan(plan.as_deref())?;
            let rows = trace_cell(&plan, &environment, grid_index, repetition, &method)?;
            let mut out = BufWriter::new(io::stdout().lock());
            for row in rows {
                serde_json::to_writer(&mut out, &row)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
            Ok(())
        }
        Command::Plan { full } => {
            let plan = if full {
                ExperimentPlan::full()
            } else {
                ExperimentPlan::default()
            };
            print!("{}", plan.to_toml());
            Ok(())
        }
    }
}
