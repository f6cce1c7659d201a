use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use corrint::game::{Externality, SolveMode};
use corrint::sequence_space::NormFlavor;
use corrint_cli::ops::{ConvexityOp, GameOp, LemmaOp, LyapunovOp, Mode, NecessityOp, Operation, RcdOp, StartChoice, UhcOp};
use corrint_cli::scenario::{AlgebraChoice, ConstructionSpec, OpSpec, SpaceSpec, Tolerances, WorkspaceSpec, SCHEMA};
use corrint_cli::{collect_configs, emit, load, run_scenario, CliError, Scenario};

#[derive(Parser)]
#[command(name = "corrint", version, about = "Selections, set-valued integrals and large games on dyadic spaces")]
struct Cli {
    /// Write gap / residual / semidistance series as CSV files into DIR.
    #[arg(long, global = true, value_name = "DIR")]
    emit_plot_data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files (directories contribute their *.json files).
    Run {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Write one <name>.json report per scenario into DIR instead of stdout.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Convexity gap of the integral set as cells are split into 2^m atoms.
    ConvexityDemo {
        #[command(flatten)]
        common: Common,
        /// Exponents m, as `a..b` or a comma list.
        #[arg(long, default_value = "1..6", value_parser = parse_levels)]
        levels: Levels,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
    },
    /// Mix the cell-constant selections 0, f_1..f_k with equal weights.
    LyapunovMix {
        #[command(flatten)]
        common: Common,
    },
    /// Is the midpoint (e_1+..+e_k)/(k+1) an integral of some selection?
    NecessityDemo {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "enumerate")]
        mode: ModeArg,
    },
    /// Semidistance from the integral sets of the truncations F^m to that of F.
    UhcDemo {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "enumerate")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
    /// Search for a pure equilibrium of the counterexample game.
    GameEquilibrium {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "br-iterate")]
        mode: SolveArg,
        #[arg(long, value_enum, default_value = "zero")]
        start: StartArg,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1.0)]
        damping: f64,
        #[arg(long, value_enum, default_value = "integral")]
        externality: ExternalityArg,
        /// Extra action as comma-separated coordinates; repeatable.
        #[arg(long, value_parser = parse_vector)]
        extra: Vec<Vec<f64>>,
    },
    /// Weighted Walsh sums of indicator systems against 4 d_0.
    LemmaBound {
        #[command(flatten)]
        common: Common,
        /// Mesh exponents e with d_0 = 2^-e, as `a..b` or a comma list.
        #[arg(long, default_value = "3..8", value_parser = parse_levels)]
        exponents: Levels,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Walsh indices below 2^LEVEL enter the sum.
        #[arg(long, default_value_t = 10)]
        walsh_level: u32,
    },
    /// Realize dyadic mixtures of conditional distributions by selections.
    RcdCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        atoms_per_block: usize,
        #[arg(long, default_value_t = 4)]
        resolution: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value = "0")]
    gamma: String,
    #[arg(long = "L", default_value_t = 3)]
    level: u32,
    #[arg(long = "N", default_value_t = 7)]
    n_trunc: u64,
    /// Atoms per dyadic cell [default: k+1 for lyapunov-mix and game-equilibrium, else 1].
    #[arg(long)]
    refinement: Option<usize>,
    /// Truncation dimension [default: k(N+1)].
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_enum, default_value = "euclid")]
    norm: NormArg,
    /// Selections / strategies constant on cells.
    #[arg(long)]
    coincide: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000_000)]
    cap: u64,
    /// Required verdict, e.g. `converged=true`; repeatable. Exit 1 if unmet.
    #[arg(long, value_parser = parse_expect)]
    expect: Vec<(String, bool)>,
    /// Write the report as <DIR>/<subcommand>.json instead of stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Enumerate,
    Minkowski,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveArg {
    BrIterate,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum StartArg {
    Zero,
    Mean,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExternalityArg {
    Integral,
    Conditional,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Sum,
    Euclid,
    Max,
}

fn mode(m: ModeArg) -> Mode {
    match m {
        ModeArg::Enumerate => Mode::Enumerate,
        ModeArg::Minkowski => Mode::Minkowski,
    }
}

/// A whole list in one argument, so clap does not treat it as repeated.
#[derive(Clone)]
struct Levels(Vec<u32>);

fn parse_levels(s: &str) -> Result<Levels, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
        let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|e| format!("{b:?}: {e}"))?;
        if a > b {
            return Err(format!("empty range {s}"));
        }
        return Ok(Levels((a..=b).collect()));
    }
    s.split(',').map(|x| x.trim().parse().map_err(|e| format!("{x:?}: {e}"))).collect::<Result<_, _>>().map(Levels)
}

fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| x.trim().parse().map_err(|e| format!("{x:?}: {e}"))).collect()
}

fn parse_expect(s: &str) -> Result<(String, bool), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=true|false, got {s:?}"))?;
    Ok((k.trim().to_string(), v.trim().parse().map_err(|e| format!("{v:?}: {e}"))?))
}

impl Common {
    fn scenario(&self, name: &str, default_refinement: usize, run: Operation) -> (Scenario, Option<PathBuf>) {
        let norm = match self.norm {
            NormArg::Sum => NormFlavor::Sum,
            NormArg::Euclid => NormFlavor::Euclid,
            NormArg::Max => NormFlavor::Max,
        };
        let sc = Scenario {
            schema: SCHEMA,
            name: name.into(),
            seed: self.seed,
            workspace: WorkspaceSpec { dim: self.dim, norm, topology: Default::default() },
            space: SpaceSpec {
                gamma: self.gamma.clone(),
                level: self.level,
                refinement: self.refinement.unwrap_or(default_refinement),
            },
            construction: ConstructionSpec { k: self.k, n_trunc: self.n_trunc },
            algebra: if self.coincide { AlgebraChoice::Coincide } else { AlgebraChoice::Atoms },
            cap: self.cap,
            tolerances: Tolerances::default(),
            operations: vec![OpSpec { run, expect: self.expect.iter().cloned().collect::<BTreeMap<_, _>>() }],
        };
        (sc, self.out.clone())
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("CORRINT_THREADS") {
        let n: usize = v.parse().map_err(|_| CliError::Invalid(format!("CORRINT_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn single(sc: Scenario, out: Option<PathBuf>, plot: Option<&PathBuf>) -> Result<i32, CliError> {
    let run = run_scenario(&sc)?;
    emit(&run, out.as_deref(), plot.map(|p| p.as_path()))
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let plot = cli.emit_plot_data.as_ref();
    let (sc, out) = match cli.command {
        Command::Run { paths, out } => {
            let mut code = 0;
            for path in collect_configs(&paths)? {
                let outcome = load(&path).and_then(|sc| {
                    let run = run_scenario(&sc)?;
                    emit(&run, out.as_deref(), plot.map(|p| p.as_path()))
                });
                let c = match outcome {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("corrint: {e}");
                        e.exit_code()
                    }
                };
                if c != 0 {
                    eprintln!("{}: exit {c}", path.display());
                }
                code = code.max(c);
            }
            return Ok(code);
        }
        Command::ConvexityDemo { common, levels, samples, threshold } => {
            common.scenario("convexity-demo", 1, Operation::Convexity(ConvexityOp { exponents: levels.0, samples, threshold }))
        }
        Command::LyapunovMix { common } => {
            let r = common.k + 1;
            common.scenario("lyapunov-mix", r, Operation::Lyapunov(LyapunovOp {}))
        }
        Command::NecessityDemo { common, mode: m } => {
            common.scenario("necessity-demo", 1, Operation::Necessity(NecessityOp { mode: mode(m) }))
        }
        Command::UhcDemo { common, mode: m, threshold } => {
            common.scenario("uhc-demo", 1, Operation::Uhc(UhcOp { mode: mode(m), threshold }))
        }
        Command::GameEquilibrium { common, mode: m, start, max_iter, tol, damping, externality, extra } => {
            let op = GameOp {
                mode: match m {
                    SolveArg::BrIterate => SolveMode::BrIterate,
                    SolveArg::Exhaustive => SolveMode::Exhaustive,
                },
                start: match start {
                    StartArg::Zero => StartChoice::Zero,
                    StartArg::Mean => StartChoice::Mean,
                },
                max_iter,
                damping,
                externality: match externality {
                    ExternalityArg::Integral => Externality::Integral,
                    ExternalityArg::Conditional => Externality::Conditional,
                },
                extra_actions: extra,
            };
            let r = if common.coincide { 1 } else { common.k + 1 };
            let (mut sc, out) = common.scenario("game-equilibrium", r, Operation::Game(op));
            sc.tolerances.solver = tol;
            (sc, out)
        }
        Command::LemmaBound { common, exponents, trials, walsh_level } => common.scenario(
            "lemma-bound",
            1,
            Operation::Lemma(LemmaOp { exponents: exponents.0, trials, level: walsh_level }),
        ),
        Command::RcdCheck { common, atoms_per_block, resolution } => {
            common.scenario("rcd-check", 1, Operation::Rcd(RcdOp { atoms_per_block, resolution }))
        }
    };
    single(sc, out, plot)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("corrint: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
