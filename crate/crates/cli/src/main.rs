mod commands;
mod render;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uniset::constructions::Kind;
use uniset::inequalities::{IneqGrid, Span};
use uniset::search::{Constraint, Method, Objective};
use uniset::verify::UniverseStore;

use commands::{CacheAction, ConstructArgs, CoverView, CoversArgs, Emit, Env, FormulaName, SearchArgs, Side};
use render::{Format, Rendered};

/// Exact enumeration, constructions and extremal search for cross
/// t-intersecting families of uniform set partitions.
#[derive(Parser)]
#[command(name = "uniset", version)]
struct Cli {
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for cached universes.
    #[arg(long, global = true, env = "UNISET_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Node budget for branch and bound, concept budget for enumeration.
    #[arg(long, global = true, env = "SEARCH_CAP")]
    cap: Option<u64>,
    /// Add wall-clock and node counts to the output.
    #[arg(long, global = true)]
    timing: bool,
    /// Lift the default size limits.
    #[arg(long, global = true)]
    unsafe_cap: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List every c-uniform partition of [ck].
    Enumerate {
        #[arg(long)]
        c: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        count_only: bool,
    },
    /// Evaluate a closed-form count.
    CountFormula {
        #[arg(value_enum)]
        formula: FormulaName,
        #[arg(long)]
        c: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, alias = "s")]
        z: Option<usize>,
    },
    /// Check the bounding inequalities over a parameter grid.
    VerifyInequalities {
        #[arg(long, default_value = "all")]
        lemma: String,
        #[arg(long, default_value = "3-12")]
        c_range: Span,
        #[arg(long)]
        k_range: Option<Span>,
        #[arg(long, default_value = "1-8")]
        t_range: Span,
        /// Include points outside each inequality's hypotheses.
        #[arg(long)]
        all_points: bool,
    },
    /// Build a construction from anchors.
    Construct {
        /// JSON spec, inline or as a file path.
        #[arg(long, conflicts_with = "kind")]
        spec: Option<String>,
        /// Use canonical anchors for this kind.
        #[arg(long)]
        kind: Option<Kind>,
        #[arg(long)]
        c: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, value_enum, default_value = "size")]
        emit: Emit,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Covering number, minimum covers and cover structure of a family.
    Covers {
        /// JSON spec or a list of universe ids, inline or as a file path.
        #[arg(long)]
        family: String,
        #[arg(long)]
        c: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, value_enum, default_value = "first")]
        side: Side,
        #[arg(long, value_enum, default_value = "covers")]
        report: CoverView,
    },
    /// Find all maximum cross t-intersecting pairs.
    Search {
        #[arg(long)]
        c: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value = "product")]
        objective: Objective,
        #[arg(long, default_value = "none")]
        constraint: Constraint,
        #[arg(long, default_value = "auto")]
        method: Method,
    },
    /// Check a main statement on one parameter set.
    VerifyTheorem {
        #[arg(long = "id", required = true)]
        ids: Vec<String>,
        #[arg(long)]
        c: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Run every formula-level check.
    FormulaSuite {
        #[arg(long, default_value = "3-12")]
        c_range: Span,
        #[arg(long, default_value = "1-8")]
        t_range: Span,
    },
    /// Manage cached universes.
    Cache {
        #[arg(value_enum)]
        action: CacheAction,
        #[arg(long)]
        c: usize,
        #[arg(long)]
        k: usize,
    },
}

fn run(cli: Cli) -> anyhow::Result<Rendered> {
    let env = Env {
        seed: cli.seed,
        store: UniverseStore { dir: cli.cache_dir, cap: commands::enumeration_cap(cli.unsafe_cap) },
        search_cap: cli.cap,
        max_search_ground: if cli.unsafe_cap { usize::MAX } else { 12 },
        timing: cli.timing,
    };
    match cli.command {
        Command::Enumerate { c, k, limit, count_only } => commands::enumerate(&env, c, k, limit, count_only),
        Command::CountFormula { formula, c, k, t, z } => commands::count_formula(formula, c, k, t, z),
        Command::VerifyInequalities { lemma, c_range, k_range, t_range, all_points } => {
            commands::verify_inequalities(&lemma, IneqGrid { c: c_range, t: t_range, k: k_range }, all_points)
        }
        Command::Construct { spec, kind, c, k, t, emit, samples } => {
            commands::construct(&env, ConstructArgs { spec, kind, c, k, t, emit, samples })
        }
        Command::Covers { family, c, k, t, side, report } => {
            commands::covers(&env, CoversArgs { family, c, k, t, side, report })
        }
        Command::Search { c, k, t, objective, constraint, method } => {
            commands::search(&env, SearchArgs { c, k, t, objective, constraint, method })
        }
        Command::VerifyTheorem { ids, c, k, t, samples } => commands::verify_theorem(&env, &ids, c, k, t, samples),
        Command::FormulaSuite { c_range, t_range } => {
            commands::formula_suite(&env, IneqGrid { c: c_range, t: t_range, k: None })
        }
        Command::Cache { action, c, k } => commands::cache(&env, action, c, k),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let format = cli.format;
    match run(cli) {
        Ok(rendered) => {
            let mut out = io::stdout().lock();
            if let Err(e) = rendered.write(format, &mut out).and_then(|_| Ok(out.flush()?)) {
                let broken_pipe = e
                    .chain()
                    .filter_map(|c| c.downcast_ref::<io::Error>())
                    .any(|io| io.kind() == io::ErrorKind::BrokenPipe);
                if broken_pipe {
                    return ExitCode::SUCCESS;
                }
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if rendered.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
