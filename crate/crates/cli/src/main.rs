use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use gcsc::gcsc::{self as synth, DeltaSearchError, Rejection, SynthesisError};
use gcsc::lyapriccati;
use gcsc::matlib::Vector;
use gcsc::model::{self, io, GameDefinition, GcscProblem, StructuredGain};
use gcsc::{cases, pareto, sim};

#[derive(Parser)]
#[command(name = "gcsc", version, about = "Guaranteed-cost structured control for cooperative games")]
struct Cli {
    /// Reserved for randomized restarts; all solvers are currently deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a structured gain against a cost threshold.
    Verify {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        gain: PathBuf,
        /// Write the certificate (or rejection) JSON here as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a certified structured gain.
    Synth {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        /// Write the synthesized gain file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted Riccati solves and the output-structure residual over a weight grid.
    ParetoScan {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        grid: f64,
        #[arg(long, default_value_t = pareto::SC1_TOL)]
        tol: f64,
        /// Write the scan CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the closed loop and write the trajectory CSV.
    Simulate {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        gain: PathBuf,
        /// Initial state as comma-separated values.
        #[arg(long)]
        x0: String,
        #[arg(long)]
        t_final: f64,
        #[arg(long, default_value_t = sim::DEFAULT_STEP)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Costs, optimal team cost and efficiency ratios of a gain.
    Metrics {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        gain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
    },
    /// Two-player Nash bargaining over the weighted-optimal frontier.
    Bargain {
        #[arg(long)]
        game: PathBuf,
        /// Disagreement costs `d1,d2`.
        #[arg(long)]
        disagreement: String,
        #[arg(long)]
        grid: f64,
        /// Initial state as comma-separated values.
        #[arg(long)]
        x0: String,
    },
    /// Smallest threshold in an ascending list at which synthesis succeeds.
    MinDelta {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        /// Comma-separated ascending thresholds.
        #[arg(long)]
        deltas: String,
    },
    /// Built-in case-study report.
    Case {
        #[arg(value_enum)]
        name: CaseName,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseName {
    TwoPlayer,
    FiveAgent,
    Microgrid,
}

/// Failure classes mapped onto exit codes 1 and 2.
enum Failure {
    Inconclusive(String),
    Invalid(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Invalid(e)
    }
}

type Outcome = Result<(), Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(anyhow::anyhow!(msg.into()))
}

fn read(flag: &str, path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("--{flag} {}", path.display()))
}

fn load_game(path: &Path) -> anyhow::Result<GameDefinition> {
    io::parse_game(&read("game", path)?).with_context(|| format!("--game {}", path.display()))
}

fn load_problem(path: &Path, game: GameDefinition) -> anyhow::Result<GcscProblem> {
    io::parse_problem(&read("problem", path)?, game)
        .with_context(|| format!("--problem {}", path.display()))
}

fn load_gain(path: &Path, game: &GameDefinition) -> anyhow::Result<StructuredGain> {
    io::parse_gain(&read("gain", path)?, game).with_context(|| format!("--gain {}", path.display()))
}

fn parse_list(flag: &str, text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            let x: f64 = v.trim().parse().with_context(|| format!("--{flag}: bad number {v:?}"))?;
            anyhow::ensure!(x.is_finite(), "--{flag}: non-finite value {v:?}");
            Ok(x)
        })
        .collect()
}

fn parse_x0(text: &str, game: &GameDefinition) -> anyhow::Result<Vector> {
    let v = parse_list("x0", text)?;
    anyhow::ensure!(
        v.len() == game.n(),
        "--x0: {} values given, the game has {} states",
        v.len(),
        game.n()
    );
    Ok(Vector::from_vec(v))
}

fn write(flag: &str, path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("--{flag} {}", path.display()))
}

/// Stdout write that tolerates a closed pipe.
fn say(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    say(&format!("{text}\n"));
    if let Some(p) = out {
        write("out", p, text)?;
    }
    Ok(())
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Verify {
            game,
            problem,
            gain,
            out,
        } => {
            let g = load_game(&game)?;
            let p = load_problem(&problem, g)?;
            let f = load_gain(&gain, &p.game)?;
            match synth::verify(&f, &p) {
                Ok(cert) => Ok(emit(&cert.to_json(), out.as_deref())?),
                Err(Rejection::Invalid { message }) => Err(invalid(message)),
                Err(r) => {
                    emit(&json(&r), out.as_deref())?;
                    Err(Failure::Inconclusive(r.to_string()))
                }
            }
        }
        Command::Synth { game, problem, out } => {
            let g = load_game(&game)?;
            let p = load_problem(&problem, g)?;
            match synth::synthesize(&p) {
                Ok(res) => {
                    say(&format!("{}\n", res.to_json()));
                    if let Some(path) = out {
                        write("out", &path, &io::gain_to_json(&res.gain))?;
                    }
                    Ok(())
                }
                Err(SynthesisError::Shortfall(s)) => {
                    say(&format!("{}\n", json(&s)));
                    Err(Failure::Inconclusive(s.to_string()))
                }
                Err(SynthesisError::Invalid(e)) => Err(invalid(e.to_string())),
            }
        }
        Command::ParetoScan {
            game,
            grid,
            tol,
            out,
        } => {
            let g = load_game(&game)?;
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(invalid("--tol must be positive"));
            }
            let weights = model::simplex_grid(g.num_players(), grid).context("--grid")?;
            let scan = pareto::pareto_scan(&g, &weights, tol);
            let csv = scan.to_csv();
            match out {
                Some(p) => write("out", &p, &csv)?,
                None => say(&csv),
            }
            if scan.all_fail {
                eprintln!("no grid weight satisfies the output-structure condition");
            }
            Ok(())
        }
        Command::Simulate {
            game,
            gain,
            x0,
            t_final,
            dt,
            out,
        } => {
            let g = load_game(&game)?;
            let f = load_gain(&gain, &g)?;
            let x0 = parse_x0(&x0, &g)?;
            let a_cl = lyapriccati::closed_loop(&g, f.matrix());
            let traj = sim::simulate(&a_cl, f.matrix(), &x0, t_final, dt)
                .map_err(|e| invalid(format!("--t-final/--dt: {e}")))?;
            write("out", &out, &traj.to_csv())?;
            Ok(())
        }
        Command::Metrics {
            game,
            gain,
            problem,
        } => {
            let g = load_game(&game)?;
            let p = load_problem(&problem, g)?;
            let f = load_gain(&gain, &p.game)?;
            let x0 = p
                .x0
                .clone()
                .ok_or_else(|| invalid(format!("--problem {}: metrics need x0", problem.display())))?;
            let j_po = match pareto::eta1(&p.game, &x0, &p.alpha).map_err(|e| invalid(e.to_string()))? {
                pareto::Eta1::Available { j_po, .. } => Some(j_po),
                pareto::Eta1::Unavailable { .. } => None,
            };
            let m = synth::metrics(&f, &p.game, &x0, p.delta, &p.alpha, j_po)
                .map_err(|e| invalid(e.to_string()))?;
            say(&format!("{}\n", json(&m)));
            Ok(())
        }
        Command::Bargain {
            game,
            disagreement,
            grid,
            x0,
        } => {
            let g = load_game(&game)?;
            let d = parse_list("disagreement", &disagreement)?;
            if d.len() != 2 {
                return Err(invalid("--disagreement: expected two values d1,d2"));
            }
            let x0 = parse_x0(&x0, &g)?;
            let weights = model::simplex_grid(2, grid).context("--grid")?;
            match pareto::nash_bargain_2p(&g, &x0, (d[0], d[1]), &weights) {
                Ok(b) => {
                    say(&format!("{}\n", json(&b)));
                    Ok(())
                }
                Err(e @ pareto::ParetoError::NoIndividuallyRationalPoint) => {
                    Err(Failure::Inconclusive(e.to_string()))
                }
                Err(pareto::ParetoError::BadDisagreement) => {
                    Err(invalid("--disagreement: costs must be positive"))
                }
                Err(e) => Err(invalid(format!("--game {}: {e}", game.display()))),
            }
        }
        Command::MinDelta {
            game,
            problem,
            deltas,
        } => {
            let g = load_game(&game)?;
            let p = load_problem(&problem, g)?;
            let list = parse_list("deltas", &deltas)?;
            match synth::min_delta_search(&p, &list) {
                Ok(r) => {
                    let v = serde_json::json!({
                        "delta": r.delta,
                        "attempts": r.attempts,
                        "result": r.result,
                    });
                    say(&format!("{}\n", json(&v)));
                    Ok(())
                }
                Err(DeltaSearchError::AllShortfall { attempts }) => {
                    say(&format!("{}\n", json(&serde_json::json!({ "attempts": attempts }))));
                    Err(Failure::Inconclusive(
                        "synthesis fell short at every threshold (inconclusive)".into(),
                    ))
                }
                Err(DeltaSearchError::BadGrid) => {
                    Err(invalid("--deltas: must be non-empty and strictly ascending"))
                }
                Err(DeltaSearchError::Invalid(e)) => Err(invalid(e.to_string())),
            }
        }
        Command::Case { name, out } => {
            let report = match name {
                CaseName::TwoPlayer => cases::case_two_player(),
                CaseName::FiveAgent => cases::case_five_agent(),
                CaseName::Microgrid => cases::case_microgrid(),
            }
            .map_err(|e| invalid(e.to_string()))?;
            Ok(emit(&report.to_json(), out.as_deref())?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Inconclusive(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
