use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ifp_core::encoder::{full_encode, BoundChoice, EncodedInstance, RationalLinearSystem};
use ifp_core::game::{self, GameConfig, GameState};
use ifp_core::io::{self as wire, DemoRecord};
use ifp_core::moves::{ifp_solve_with, replay_certificate, Budget, IfpOutcome, Strategy};
use ifp_core::projection::{project_action, ProjectOptions, RealTable};
use ifp_core::solvers::{bfs_solve, greedy_rollout, BfsOutcome, Candidates, Greedy, GreedyOptions, RolloutEnd};
use ifp_core::tables::parse_table2;

#[derive(Parser)]
#[command(name = "ifp", version, about = "Integer feasibility through games on tables")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundRule {
    Vertex,
    Hadamard,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Pruned,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Greedy,
    Random,
    Stdin,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode `Ay = b, y >= 0` as a 3-way plane-sum instance.
    Encode {
        #[arg(long)]
        system: PathBuf,
        /// Bound on every original coordinate; computed when absent.
        #[arg(long)]
        bound: Option<i64>,
        #[arg(long, value_enum, default_value = "vertex")]
        bound_rule: BoundRule,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decide an encoded instance and write a certificate on YES.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        fiber_cap: u64,
        #[arg(long, default_value_t = 1_000_000)]
        step_cap: u64,
        #[arg(long, value_enum, default_value = "pruned")]
        strategy: StrategyArg,
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Round a real matrix to the closest legal action.
    Project {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=2))]
        d: u32,
        #[arg(long)]
        c1: Option<usize>,
        #[arg(long)]
        c2: Option<usize>,
        #[arg(long)]
        no_respect_state: bool,
    },
    /// Play one episode and print every step.
    Play {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "greedy")]
        policy: PolicyArg,
    },
    /// Write greedy episodes as JSON lines.
    Demo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        episodes: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shortest solution length by breadth-first search.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Maximum number of visited tables.
        #[arg(long)]
        cap: usize,
    },
    /// Serve the environment protocol on stdio or a Unix socket.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        socket: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config(path: &Path) -> Result<GameConfig> {
    Ok(GameConfig::parse(&read(path)?)?)
}

fn initial_state(cfg: &GameConfig, seed: u64) -> Result<GameState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match cfg.walk_len {
        Some(w) => game::generate_solvable_instance(cfg, &mut rng, w)?,
        None => game::generate_instance(cfg, &mut rng)?,
    })
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Encode {
            system,
            bound,
            bound_rule,
            out,
        } => {
            let sys = RationalLinearSystem::parse(&read(&system)?)?;
            let choice = match (bound, bound_rule) {
                (Some(b), _) => BoundChoice::Fixed(b),
                (None, BoundRule::Vertex) => BoundChoice::Vertex,
                (None, BoundRule::Hadamard) => BoundChoice::Hadamard,
            };
            let inst = full_encode(&sys, choice)?;
            fs::write(&out, inst.to_text())?;
            let [r, h, _] = inst.dims();
            println!("encoded {r}x{h}x{h} instance, U = {}", inst.bound);
        }
        Cmd::Solve {
            instance,
            fiber_cap,
            step_cap,
            strategy,
            certificate,
        } => {
            let inst = EncodedInstance::parse(&read(&instance)?)?;
            let budget = Budget { fiber_cap, step_cap };
            let strategy = match strategy {
                StrategyArg::Pruned => Strategy::Pruned,
                StrategyArg::Exhaustive => Strategy::Exhaustive,
            };
            match ifp_solve_with(&inst, &budget, strategy)? {
                IfpOutcome::Yes(cert) => {
                    replay_certificate(&inst, &cert)?;
                    fs::write(&certificate, cert.to_text())?;
                    let y: Vec<String> = cert.solution.iter().map(i64::to_string).collect();
                    println!("YES {}", y.join(" "));
                }
                IfpOutcome::No(reason) => println!("NO {reason:?}"),
                IfpOutcome::BudgetExhausted(msg) => {
                    println!("UNKNOWN {msg}");
                    std::process::exit(2);
                }
            }
        }
        Cmd::Project {
            state,
            target,
            d,
            c1,
            c2,
            no_respect_state,
        } => {
            let state = parse_table2(&read(&state)?)?;
            let target = RealTable::parse(&read(&target)?)?;
            let opts = ProjectOptions {
                d,
                c1,
                c2,
                respect_state: !no_respect_state,
            };
            let p = project_action(&state, &target, &opts)?;
            print!("{}", p.action.table().to_text());
            println!("distance {}", p.distance);
        }
        Cmd::Play { config, policy } => play(&load_config(&config)?, policy)?,
        Cmd::Demo { config, episodes, out } => {
            let cfg = load_config(&config)?;
            let mut w = BufWriter::new(fs::File::create(&out)?);
            let mut solved = 0;
            for ep in 0..episodes {
                let state = initial_state(&cfg, cfg.seed.wrapping_add(ep))?;
                let rollout = greedy_rollout(&cfg, &state, GreedyOptions::default())?;
                solved += u64::from(rollout.end == RolloutEnd::Solved);
                let records: Vec<DemoRecord> = rollout
                    .transitions
                    .into_iter()
                    .enumerate()
                    .map(|(step, transition)| DemoRecord {
                        episode: ep,
                        step: step as u32,
                        reward_variant: cfg.reward_variant,
                        transition,
                    })
                    .collect();
                wire::write_demos(&mut w, &records)?;
            }
            w.flush()?;
            println!("{episodes} episodes, {solved} solved");
        }
        Cmd::Oracle { config, cap } => {
            let cfg = load_config(&config)?;
            let state = initial_state(&cfg, cfg.seed)?;
            print!("{}", state.table.to_text());
            match bfs_solve(&state.table, &cfg.goal, Candidates::Actions, cap) {
                BfsOutcome::Solved(path) => println!("shortest {}", path.len()),
                BfsOutcome::Unreachable => println!("unreachable"),
                BfsOutcome::BudgetExhausted { visited } => {
                    println!("unknown after {visited} tables");
                    std::process::exit(2);
                }
            }
        }
        Cmd::Serve { config, socket } => {
            let cfg = load_config(&config)?;
            match socket {
                #[cfg(unix)]
                Some(path) => wire::serve_unix(&cfg, &path)?,
                #[cfg(not(unix))]
                Some(_) => bail!("socket transport needs a Unix platform"),
                None => wire::serve(&cfg, io::stdin().lock(), io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn play(cfg: &GameConfig, policy: PolicyArg) -> Result<()> {
    let mut state = initial_state(cfg, cfg.seed)?;
    let greedy = Greedy::new(cfg.m, cfg.n, GreedyOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let mut total = game::Reward::from_integer(0);
    print!("{}", state.table.to_text());
    loop {
        if game::is_terminal(&state.table, &cfg.goal) {
            println!("solved in {} steps, return {total}", state.step_count);
            return Ok(());
        }
        if state.step_count >= cfg.max_steps {
            println!("timeout, return {total}");
            return Ok(());
        }
        let action = match policy {
            PolicyArg::Greedy => greedy.choose(&state.table, &cfg.goal).map(|g| g.into_table()),
            PolicyArg::Random => game::random_legal_circuit(&state.table, &mut rng).map(|g| g.into_table()),
            PolicyArg::Stdin => {
                println!("action ({} rows):", cfg.m);
                let mut rows = Vec::new();
                while rows.len() < cfg.m {
                    let Some(line) = lines.next() else { bail!("input ended") };
                    let row = line?
                        .split_whitespace()
                        .map(str::parse::<i64>)
                        .collect::<Result<Vec<_>, _>>()
                        .context("action rows are integers")?;
                    rows.push(row);
                }
                match wire::table_from_rows(&rows) {
                    Ok(t) if game::is_legal(&state, &t) => Some(t),
                    _ => {
                        println!("illegal action");
                        continue;
                    }
                }
            }
        };
        let Some(action) = action else {
            println!("no move available, return {total}");
            return Ok(());
        };
        let (next, tr) = game::step(cfg, &state, &action)?;
        total += tr.reward;
        println!("step {} reward {}", next.step_count, tr.reward);
        print!("{}", next.table.to_text());
        state = next;
    }
}
