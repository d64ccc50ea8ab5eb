//! `queuelay`: generate k-trees, build and check queue layouts, solve small
//! instances exactly, bound the local queue number and play layout games.
//!
//! Exit codes: 0 success, 1 negative result, 2 usage or input error,
//! 3 budget exceeded.

mod render;

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use queuelay_core::bounds::density_bounds;
use queuelay_core::constructors::{
    bfs_tree_layout, degeneracy_construction_order, degeneracy_star_partition, star_queue_layout, stars_to_queues,
};
use queuelay_core::graph::Graph;
use queuelay_core::io::{
    bounds_to_json, document, emit_graph, layout_from_json, layout_to_json, layout_value, parse_graph,
    sequence_from_json, sequence_to_json, solve_result_to_json, to_text,
};
use queuelay_core::ktree::{
    five_round_witness, halfclique_family, mary_ktree_capped, random_ktree, random_tree, ConstructionSequence,
    DEFAULT_VERTEX_CAP,
};
use queuelay_core::layout::{layout_locality, validate_layout, LinearOrder, QueueLayout, Validation};
use queuelay_core::solver::{exact_lqn, exact_qn, SolveOptions, DEFAULT_CAP};
use queuelay_games::lifts::{
    lift_iii_to_ii, lift_iv_to_iii, lift_v_to_iv, lift_vi_to_v, lift_vii_to_vi, play, SharedStats,
};
use queuelay_games::state::{level_name, parse_level};
use queuelay_games::strategy::{five_round_strategy, overload_strategy, Strategy};
use queuelay_games::verify::{verify_alice_wins, Verdict};
use queuelay_games::{initial_layouts, Caps, GameConfig, Level};

#[derive(Parser)]
#[command(name = "queuelay", version, about = "Queue layouts with bounded local queue number")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write the artifact here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph or k-tree construction sequence.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        /// `sequence` (JSON) or `edges` (edge-list text).
        #[arg(long, value_enum, default_value_t = Format::Sequence, global = true)]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
    /// Build a queue layout with a constructive method.
    Layout {
        /// Edge list or construction sequence JSON.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Construction)]
        method: Method,
        #[command(flatten)]
        out: Output,
    },
    /// Validate a layout; exit 1 with a witness when invalid.
    Check {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        layout: PathBuf,
        /// Also require every vertex to see at most this many queues.
        #[arg(long)]
        local: Option<u32>,
        #[command(flatten)]
        out: Output,
    },
    /// Exact queue number or local queue number of a small graph.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Lqn)]
        mode: Mode,
        /// Decide whether the value is at most this bound; exit 1 if not.
        #[arg(long)]
        local: Option<u32>,
        /// Time budget in seconds; exit 3 with the best layout when it runs out.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Density bounds on the local queue number.
    Bounds {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Verify or play an Alice strategy in a layout game.
    Game(GameArgs),
    /// Draw a layout as an SVG arc diagram.
    Render {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        layout: PathBuf,
        /// Thicken a nesting pair and mark an overloaded vertex when present.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        highlight: bool,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Random k-tree on n vertices.
    RandomKtree {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random tree on n vertices (edge list only).
    RandomTree {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// m-ary 2-tree of depth t.
    Mary {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        t: u32,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
    /// The 2-tree grown by the five-round strategy's main line.
    FiveRound,
    /// A k-clique with 2s children.
    Halfclique {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        s: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Sequence,
    Edges,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// One queue per vertex on the construction order (k-trees).
    Construction,
    /// Star partition along a degeneracy order.
    Degeneracy,
    /// One queue on a breadth-first order (trees).
    Bfs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Lqn,
    Qn,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameMode {
    /// Exhaustive search over Bob's replies.
    Verify,
    /// Random replies, with reduction counters for lifted strategies.
    Play,
}

#[derive(Args)]
struct GameArgs {
    /// Game level, `i`..`vii` or `1`..`7`.
    #[arg(long)]
    level: String,
    #[arg(long)]
    k: usize,
    #[arg(long = "l")]
    ell: u32,
    /// `five-round`, `overload`, or `lifted:<base>` to lift a base strategy
    /// down to the requested level.
    #[arg(long)]
    strategy: String,
    #[arg(long, value_enum, default_value_t = GameMode::Verify)]
    mode: GameMode,
    #[arg(long, default_value_t = Caps::default().max_vertices)]
    max_vertices: usize,
    #[arg(long, default_value_t = Caps::default().max_rounds)]
    max_rounds: usize,
    /// Keep one refutation per leaf in the win tree.
    #[arg(long)]
    prune: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random games in play mode.
    #[arg(long, default_value_t = 10)]
    plays: usize,
    /// Placement samples per reply in play mode.
    #[arg(long, default_value_t = 300)]
    tries: usize,
    #[command(flatten)]
    out: Output,
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl ToString) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

/// An artifact and the exit code that goes with it.
struct Artifact {
    text: String,
    code: u8,
}

fn ok(v: &Value) -> Artifact {
    Artifact { text: to_text(v), code: 0 }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(usage)?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

enum Input {
    Graph(Graph),
    Sequence(ConstructionSequence),
}

fn load(path: &PathBuf) -> Result<Input, Failure> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        sequence_from_json(&text)
            .map(Input::Sequence)
            .map_err(|e| usage(format!("{}: {e}", path.display())))
    } else {
        parse_graph(&text)
            .map(Input::Graph)
            .map_err(|e| usage(format!("{}: {e}", path.display())))
    }
}

fn load_graph(path: &PathBuf) -> Result<Graph, Failure> {
    match load(path)? {
        Input::Graph(g) => Ok(g),
        Input::Sequence(s) => s.expand().map_err(usage),
    }
}

fn load_layout(path: &PathBuf) -> Result<QueueLayout, Failure> {
    layout_from_json(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn gen(kind: &GenKind, format: Format) -> Result<Artifact, Failure> {
    let seq = match kind {
        GenKind::RandomTree { n, seed } => {
            if matches!(format, Format::Sequence) {
                return Err(usage("random-tree only supports --format edges"));
            }
            return Ok(Artifact {
                text: emit_graph(&random_tree(*n, *seed)),
                code: 0,
            });
        }
        GenKind::RandomKtree { k, n, seed } => random_ktree(*k, *n, *seed),
        GenKind::Mary { m, t, cap } => mary_ktree_capped(*m, *t, *cap).map(|(s, _)| s),
        GenKind::FiveRound => Ok(five_round_witness()),
        GenKind::Halfclique { k, s } => halfclique_family(*k, *s),
    }
    .map_err(|e| match e {
        queuelay_core::ktree::KTreeError::SizeOverflow { .. } => Failure {
            code: 3,
            message: e.to_string(),
        },
        other => usage(other),
    })?;
    Ok(match format {
        Format::Sequence => ok(&sequence_to_json(&seq)),
        Format::Edges => Artifact {
            text: emit_graph(&seq.expand().map_err(usage)?),
            code: 0,
        },
    })
}

fn layout(input: &PathBuf, method: Method) -> Result<Artifact, Failure> {
    let l = match (method, load(input)?) {
        (Method::Construction, Input::Sequence(seq)) => star_queue_layout(&seq, None).map_err(usage)?,
        (Method::Construction, Input::Graph(_)) => {
            return Err(usage("the construction method needs a construction sequence"));
        }
        (Method::Degeneracy, input) => {
            let g = match input {
                Input::Graph(g) => g,
                Input::Sequence(s) => s.expand().map_err(usage)?,
            };
            let (order, _) = degeneracy_construction_order(&g);
            let order = LinearOrder::new(order).map_err(usage)?;
            stars_to_queues(&g, &degeneracy_star_partition(&g), &order).map_err(usage)?
        }
        (Method::Bfs, input) => {
            let g = match input {
                Input::Graph(g) => g,
                Input::Sequence(s) => s.expand().map_err(usage)?,
            };
            bfs_tree_layout(&g).map_err(usage)?
        }
    };
    Ok(ok(&layout_to_json(&l)))
}

fn check(graph: &PathBuf, layout: &PathBuf, local: Option<u32>) -> Result<Artifact, Failure> {
    let g = load_graph(graph)?;
    let l = load_layout(layout)?;
    let v = validate_layout(&g, &l, local).map_err(usage)?;
    let mut body = json!({
        "valid": v.is_ok(),
        "queues": l.queue_count(),
        "locality": layout_locality(&l),
    });
    match &v {
        Validation::Ok => {}
        Validation::Rainbow(w) => body["rainbow"] = serde_json::to_value(w).expect("serializable"),
        Validation::Locality(w) => body["overloaded"] = serde_json::to_value(w).expect("serializable"),
    }
    let code = if v.is_ok() { 0 } else { 1 };
    Ok(Artifact {
        text: to_text(&document(&body)),
        code,
    })
}

fn solve(graph: &PathBuf, mode: Mode, local: Option<u32>, budget: Option<f64>, cap: usize) -> Result<Artifact, Failure> {
    let g = load_graph(graph)?;
    let budget = match budget {
        Some(b) if !(b.is_finite() && b > 0.0) => return Err(usage("--budget must be a positive number of seconds")),
        Some(b) => Some(Duration::from_secs_f64(b)),
        None => None,
    };
    let opts = SolveOptions {
        cap,
        budget,
        parallel: true,
    };
    let (name, res) = match mode {
        Mode::Lqn => ("lqn", exact_lqn(&g, &opts)),
        Mode::Qn => ("qn", exact_qn(&g, &opts)),
    };
    let res = res.map_err(usage)?;
    let mut doc = solve_result_to_json(name, &res);
    let mut code = 0;
    if let Some(bound) = local {
        let holds = res.value <= bound;
        doc["bound"] = json!(bound);
        doc["satisfiable"] = json!(holds);
        if !holds && res.exact {
            code = 1;
        }
        if holds {
            return Ok(Artifact { text: to_text(&doc), code: 0 });
        }
    }
    if !res.exact {
        code = 3;
    }
    Ok(Artifact { text: to_text(&doc), code })
}

fn bounds(graph: &PathBuf) -> Result<Artifact, Failure> {
    let g = load_graph(graph)?;
    let rep = density_bounds(&g).map_err(usage)?;
    Ok(ok(&bounds_to_json(&rep)))
}

fn render(graph: &PathBuf, layout: &PathBuf, highlight: bool) -> Result<Artifact, Failure> {
    let g = load_graph(graph)?;
    let l = load_layout(layout)?;
    let mut hl = render::Highlight::default();
    if highlight {
        match validate_layout(&g, &l, None).map_err(usage)? {
            Validation::Rainbow(w) => hl.edges.extend(w.edges),
            Validation::Locality(v) => {
                hl.vertices.insert(v.vertex);
            }
            Validation::Ok => {}
        }
    }
    Ok(Artifact {
        text: render::arc_diagram(&g, &l, &hl),
        code: 0,
    })
}

/// The base strategy and the level it wins.
fn base_strategy(name: &str, k: usize, ell: u32) -> Result<(Box<dyn Strategy>, Level), Failure> {
    match name {
        "five-round" => Ok((Box::new(five_round_strategy()), 5)),
        "overload" => Ok((Box::new(overload_strategy(k, ell)), 7)),
        other => Err(usage(format!("unknown strategy {other:?}; use five-round, overload or lifted:<base>"))),
    }
}

/// Wraps the base strategy in lifts from its level down to `level`.
fn lifted(base: &str, level: Level, k: usize, ell: u32) -> Result<(Box<dyn Strategy>, Vec<(String, SharedStats)>), Failure> {
    let (mut s, from) = base_strategy(base, k, ell)?;
    if level >= from || level < 2 {
        return Err(usage(format!(
            "{base} wins level {}; lifting reaches levels ii..{}",
            level_name(from),
            level_name(from - 1)
        )));
    }
    let mut stats = Vec::new();
    for at in (level..from).rev() {
        s = match at {
            6 => {
                let l = lift_vii_to_vi(s, k, ell);
                stats.push(("vii>vi".to_string(), l.stats()));
                Box::new(l)
            }
            5 => {
                let l = lift_vi_to_v(s, k, ell);
                stats.push(("vi>v".to_string(), l.stats()));
                Box::new(l)
            }
            4 => {
                let l = lift_v_to_iv(s, k, ell);
                stats.push(("v>iv".to_string(), l.stats()));
                Box::new(l)
            }
            3 => {
                let l = lift_iv_to_iii(s, k, ell);
                stats.push(("iv>iii".to_string(), l.stats()));
                Box::new(l)
            }
            _ => {
                let l = lift_iii_to_ii(s, k, ell);
                stats.push(("iii>ii".to_string(), l.stats()));
                Box::new(l)
            }
        };
    }
    Ok((s, stats))
}

fn game(args: &GameArgs) -> Result<Artifact, Failure> {
    let level = parse_level(&args.level).ok_or_else(|| usage(format!("unknown level {:?}", args.level)))?;
    let cfg = GameConfig::new(args.k, args.ell, level)
        .map_err(usage)?
        .with_caps(Caps {
            max_vertices: args.max_vertices,
            max_rounds: args.max_rounds,
        });
    let (strategy, stats) = match args.strategy.strip_prefix("lifted:") {
        Some(base) => lifted(base, level, args.k, args.ell)?,
        None => (base_strategy(&args.strategy, args.k, args.ell)?.0, Vec::new()),
    };
    strategy.check_config(&cfg).map_err(usage)?;
    match args.mode {
        GameMode::Verify => match verify_alice_wins(strategy.as_ref(), &cfg) {
            Ok(Verdict::Win(tree)) => {
                let tree = if args.prune { tree.pruned() } else { tree };
                Ok(ok(&document(&json!({ "verdict": "win", "leaves": tree.leaf_count(), "tree": tree }))))
            }
            Ok(Verdict::Counter(c)) => Ok(Artifact {
                text: to_text(&document(&json!({ "verdict": "counter", "counter": c }))),
                code: 1,
            }),
            Ok(Verdict::BudgetExceeded { reason, finished_roots }) => Ok(Artifact {
                text: to_text(&document(&json!({
                    "verdict": "budget_exceeded",
                    "reason": reason,
                    "finished_roots": finished_roots,
                }))),
                code: 3,
            }),
            Err(e) => Err(Failure {
                code: 1,
                message: e.to_string(),
            }),
        },
        GameMode::Play => {
            let inits = initial_layouts(&cfg);
            let mut games = Vec::new();
            for i in 0..args.plays {
                let mut s = strategy.box_clone();
                let init = inits[i % inits.len()].clone();
                let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(i as u64));
                games.push(match play(s.as_mut(), &cfg, init, &mut rng, args.tries) {
                    Ok(r) => json!({
                        "outcome": r.outcome,
                        "rounds": r.rounds,
                        "vertices": r.state.n(),
                        "layout": layout_value(&r.state.layout),
                    }),
                    Err(e) => json!({ "error": e.to_string() }),
                });
            }
            let failed = games.iter().any(|g| g.get("error").is_some());
            let counters: serde_json::Map<String, Value> = stats
                .iter()
                .map(|(name, s)| (name.clone(), serde_json::to_value(&*s.lock().expect("stats lock")).expect("serializable")))
                .collect();
            Ok(Artifact {
                text: to_text(&document(&json!({
                    "strategy": strategy.name(),
                    "seed": args.seed,
                    "games": games,
                    "counters": counters,
                }))),
                code: if failed { 1 } else { 0 },
            })
        }
    }
}

fn run(cli: &Cli) -> Result<(Artifact, &Output), Failure> {
    Ok(match &cli.command {
        Command::Gen { kind, format, out } => (gen(kind, *format)?, out),
        Command::Layout { input, method, out } => (layout(input, *method)?, out),
        Command::Check { graph, layout, local, out } => (check(graph, layout, *local)?, out),
        Command::Solve {
            graph,
            mode,
            local,
            budget,
            cap,
            out,
        } => (solve(graph, *mode, *local, *budget, *cap)?, out),
        Command::Bounds { graph, out } => (bounds(graph)?, out),
        Command::Game(args) => (game(args)?, &args.out),
        Command::Render {
            graph,
            layout,
            highlight,
            out,
        } => (render(graph, layout, *highlight)?, out),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((artifact, out)) => {
            match &out.output {
                Some(path) => {
                    if let Err(e) = fs::write(path, &artifact.text) {
                        eprintln!("error: {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    match stdout.write_all(artifact.text.as_bytes()).and_then(|_| stdout.flush()) {
                        Ok(()) => {}
                        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                        Err(e) => {
                            eprintln!("error: stdout: {e}");
                            return ExitCode::from(2);
                        }
                    }
                }
            }
            ExitCode::from(artifact.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
