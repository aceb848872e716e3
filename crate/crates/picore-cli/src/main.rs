//! Command-line front end: parse specifications, replay random closed runs,
//! check invariants (directly and via the soundness theorem for the proof
//! system), check rely-guarantee derivations, and regenerate the bundled
//! example specifications.
//!
//! Exit codes: 0 = verdict holds / derivation accepted, 1 = verdict fails /
//! derivation rejected (an artifact is printed), 2 = usage or input error,
//! 3 = a resource cap was hit (state-space cap or atomic step budget).

use clap::{Args, Parser, Subcommand, ValueEnum};
use picore::casestudies::{arinc_source, stepper_source, ArincScale, StepperScale};
use picore::explorer::{computation_to_dot, computation_to_json};
use picore::{
    annotate_event, annotate_par, check_compositional, check_derivation_capped,
    check_invariant_direct, check_invariant_via_theorem_capped, check_validity, enumerate_states,
    eval_bool, parse_spec, pretty_spec, CompEdge, Computation, Config, Error, EventContext, Expr,
    ProofReport, RGCond, Spec, SpecFile, State, Verdict, DEFAULT_CAP,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "picore",
    version,
    about = "Toolkit for event-based rely-guarantee specifications over finite domains"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Args)]
struct Bounds {
    /// Exploration depth bound (number of transitions).
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// Step budget inside a single atomic section.
    #[arg(long, default_value_t = 64)]
    atom_bound: usize,
    /// Cap on enumerated state-space sizes.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u128,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a specification and report diagnostics.
    Parse {
        spec: PathBuf,
    },
    /// Replay one pseudo-random closed interleaving.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        /// Seed for the interleaving choices; equal seeds give equal traces.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check a named invariant, directly and/or via the invariant theorem.
    CheckInv {
        spec: PathBuf,
        /// Name of an invariant declared in the INVARIANTS section.
        invariant: String,
        #[command(flatten)]
        bounds: Bounds,
        /// Only the bounded reachability check.
        #[arg(long, conflicts_with_all = ["theorem", "both"])]
        direct: bool,
        /// Only the proof-system pipeline (initial states ⊆ I, every event
        /// guarantee preserves I, the system derives its specification).
        #[arg(long, conflicts_with = "both")]
        theorem: bool,
        /// Both pipelines; they must agree (the default).
        #[arg(long)]
        both: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check rely-guarantee derivations for an event (`name` or `name@unit`)
    /// or for ALL events plus the whole system.
    CheckRg {
        spec: PathBuf,
        /// Event name, `name@unit`, or ALL.
        target: String,
        #[command(flatten)]
        bounds: Bounds,
        /// After an accepted derivation, cross-check semantic validity by
        /// bounded exploration to this depth and require it to hold.
        #[arg(long, value_name = "DEPTH")]
        xcheck: Option<usize>,
        /// Worker threads for per-event derivation checks.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check that the parallel system's bounded computations equal the
    /// conjoin-combinations of its units' computations.
    Compositionality {
        spec: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Example-specification management.
    Examples {
        #[command(subcommand)]
        cmd: ExamplesCmd,
    },
}

#[derive(Subcommand)]
enum ExamplesCmd {
    /// Write the bundled case studies as `.picore` files.
    Generate {
        /// Output directory.
        #[arg(long, default_value = "specs")]
        dir: PathBuf,
        /// Stepper: half-width of the position range (positions -r..=r).
        #[arg(long, default_value_t = 4)]
        pos_range: i64,
        /// Stepper: largest move distance.
        #[arg(long, default_value_t = 2)]
        max_v: i64,
        /// Stepper: maximum number of inserted obstacles.
        #[arg(long, default_value_t = 2)]
        max_obstacles: usize,
        /// Kernel: number of cores (= schedulers).
        #[arg(long, default_value_t = 2)]
        cores: usize,
        /// Kernel: number of partitions (≥ cores; round-robin deployment).
        #[arg(long, default_value_t = 2)]
        partitions: usize,
        /// Kernel: queuing-channel capacity.
        #[arg(long, default_value_t = 1)]
        chmax: usize,
        /// Kernel: number of message symbols.
        #[arg(long, default_value_t = 1)]
        messages: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Parse { spec } => cmd_parse(&spec),
        Cmd::Run {
            spec,
            bounds,
            seed,
            format,
        } => load(&spec).and_then(|sp| cmd_run(&sp, &bounds, seed, format)),
        Cmd::CheckInv {
            spec,
            invariant,
            bounds,
            direct,
            theorem,
            both: _,
            format,
        } => load(&spec).and_then(|sp| {
            let mode = if direct {
                Mode::Direct
            } else if theorem {
                Mode::Theorem
            } else {
                Mode::Both
            };
            cmd_check_inv(&sp, &invariant, &bounds, mode, format)
        }),
        Cmd::CheckRg {
            spec,
            target,
            bounds,
            xcheck,
            jobs,
            format,
        } => load(&spec).and_then(|sp| cmd_check_rg(&sp, &target, &bounds, xcheck, jobs, format)),
        Cmd::Compositionality { spec, bounds } => {
            load(&spec).and_then(|sp| cmd_compositionality(&sp, &bounds))
        }
        Cmd::Examples {
            cmd:
                ExamplesCmd::Generate {
                    dir,
                    pos_range,
                    max_v,
                    max_obstacles,
                    cores,
                    partitions,
                    chmax,
                    messages,
                },
        } => cmd_examples_generate(
            &dir,
            pos_range,
            max_v,
            max_obstacles,
            cores,
            partitions,
            chmax,
            messages,
        ),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(exit_for(&e))
        }
    }
}

enum Mode {
    Direct,
    Theorem,
    Both,
}

/// Resource-cap errors exit 3, everything else that reaches main exits 2.
fn exit_for(e: &CliError) -> u8 {
    match e {
        CliError::Core(Error::StateSpaceTooLarge(..)) | CliError::Core(Error::AtomBoundExceeded(_)) => 3,
        _ => 2,
    }
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Io(PathBuf, std::io::Error),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{}", e),
            CliError::Io(p, e) => write!(f, "{}: {}", p.display(), e),
            CliError::Usage(m) => write!(f, "{}", m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError::Core(e)
    }
}

type CliResult = Result<u8, CliError>;

fn load(path: &Path) -> Result<SpecFile, CliError> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    parse_spec(&src).map_err(CliError::Core)
}

fn cmd_parse(path: &Path) -> CliResult {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    match parse_spec(&src) {
        Ok(sp) => {
            println!(
                "ok: {} variables, {} units, {} events, {} rely-guarantee declarations, {} invariants",
                sp.domains.all_vars().len(),
                sp.system.systems.len(),
                sp.events().len(),
                sp.rgspecs.len(),
                sp.invariants.len()
            );
            Ok(0)
        }
        Err(e) => {
            eprintln!("{}", e);
            Ok(1)
        }
    }
}

/// Initial states: all declared-domain states satisfying INIT.
fn init_states(sp: &SpecFile) -> Result<Vec<State>, CliError> {
    let all = enumerate_states(&sp.domains, &sp.domains.all_vars())?;
    let mut out = Vec::new();
    for s in all {
        if eval_bool(&sp.init, &s)? {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage(
            "no state over the declared domains satisfies INIT".to_string(),
        ));
    }
    Ok(out)
}

fn print_computation(w: &Computation, format: Format) {
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&computation_to_json(w)).expect("serializable")
        ),
        Format::Dot => println!("{}", computation_to_dot(w)),
        Format::Text => {
            for (i, cfg) in w.configs.iter().enumerate() {
                if i > 0 {
                    match &w.edges[i - 1] {
                        CompEdge::Env => println!("  -env->"),
                        CompEdge::Act(l) => println!("  -{}->", l),
                    }
                }
                println!("  {}", cfg.state);
            }
        }
    }
}

fn cmd_run(sp: &SpecFile, bounds: &Bounds, seed: u64, format: Format) -> CliResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inits = init_states(sp)?;
    let s0 = inits[rng.gen_range(0..inits.len())].clone();
    let mut w = Computation::singleton(Config::new(
        Spec::Par(sp.system.clone()),
        s0,
        EventContext::empty(),
    ));
    for _ in 0..bounds.depth {
        let last = w.last();
        let succs = last
            .spec
            .step(&last.state, &last.ctx, &sp.domains, bounds.atom_bound)?;
        if succs.is_empty() {
            break;
        }
        let (spec, state, ctx, label) = succs[rng.gen_range(0..succs.len())].clone();
        w.edges.push(CompEdge::Act(label));
        w.configs.push(Config::new(spec, state, ctx));
    }
    print_computation(&w, format);
    Ok(0)
}

fn print_verdict(v: &Verdict, format: Format) {
    match format {
        Format::Text | Format::Dot => println!("{}", v),
        Format::Json => {
            let j = match v {
                Verdict::Holds { depth } => {
                    serde_json::json!({ "verdict": "holds", "depth": depth })
                }
                Verdict::Counterexample { comp, clause } => serde_json::json!({
                    "verdict": "counterexample",
                    "clause": clause,
                    "trace": computation_to_json(comp),
                }),
            };
            println!("{}", serde_json::to_string_pretty(&j).expect("serializable"));
        }
    }
}

fn print_report(rep: &ProofReport, format: Format) {
    match format {
        Format::Text | Format::Dot => print!("{}", rep),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&rep.to_json()).expect("serializable")
        ),
    }
}

fn cmd_check_inv(
    sp: &SpecFile,
    name: &str,
    bounds: &Bounds,
    mode: Mode,
    format: Format,
) -> CliResult {
    let inv = sp
        .invariants
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, e)| e.clone())
        .ok_or_else(|| CliError::Usage(format!("unknown invariant `{}`", name)))?;
    let direct = |sp: &SpecFile| -> Result<Verdict, Error> {
        check_invariant_direct(
            &sp.system,
            &sp.init,
            &inv,
            &sp.domains,
            bounds.depth,
            bounds.atom_bound,
            bounds.cap,
        )
    };
    match mode {
        Mode::Direct => {
            let v = direct(sp)?;
            if format == Format::Text {
                println!("direct check (depth {}):", bounds.depth);
            }
            print_verdict(&v, format);
            Ok(if v.holds() { 0 } else { 1 })
        }
        Mode::Theorem => {
            let rep = check_invariant_via_theorem_capped(sp, &inv, bounds.atom_bound, bounds.cap)?;
            print_report(&rep, format);
            Ok(if rep.accepted { 0 } else { 1 })
        }
        Mode::Both => {
            let rep = check_invariant_via_theorem_capped(sp, &inv, bounds.atom_bound, bounds.cap)?;
            let v = direct(sp)?;
            println!("theorem pipeline: {}", if rep.accepted { "accepted" } else { "rejected" });
            println!("direct check (depth {}): {}", bounds.depth, if v.holds() { "holds" } else { "counterexample" });
            if rep.accepted && !v.holds() {
                // The theorem is sound, so this combination indicates a bug
                // in this toolkit; dump both artifacts.
                eprintln!("TOOLKIT BUG: derivation accepted but a bounded counterexample exists");
                print_report(&rep, format);
                print_verdict(&v, format);
                return Ok(1);
            }
            if !rep.accepted {
                print_report(&rep, format);
            }
            if !v.holds() {
                print_verdict(&v, format);
            }
            Ok(if rep.accepted && v.holds() { 0 } else { 1 })
        }
    }
}

fn cmd_check_rg(
    sp: &SpecFile,
    target: &str,
    bounds: &Bounds,
    xcheck: Option<usize>,
    jobs: usize,
    format: Format,
) -> CliResult {
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be ≥ 1".to_string()));
    }
    let (want_name, want_unit) = match target.split_once('@') {
        Some((n, u)) => (n, Some(u)),
        None => (target, None),
    };
    let all = target == "ALL";
    let mut picked = Vec::new();
    for ev in sp.events() {
        let Some(l) = ev.label() else { continue };
        if all || (l.name == want_name && want_unit.is_none_or(|u| l.unit.to_string() == u)) {
            picked.push(ev.clone());
        }
    }
    if picked.is_empty() {
        return Err(CliError::Usage(format!("no event matches `{}`", target)));
    }

    // Per-event derivation checks, distributed over worker threads.
    let n = picked.len();
    let jobs = jobs.min(n);
    let mut results: Vec<Option<Result<(String, ProofReport, RGCond, Spec), Error>>> = Vec::new();
    results.resize_with(n, || None);
    let chunks = std::sync::Mutex::new(results);
    std::thread::scope(|scope| {
        for worker in 0..jobs {
            let sp = &sp;
            let picked = &picked;
            let chunks = &chunks;
            scope.spawn(move || {
                for (i, ev) in picked.iter().enumerate() {
                    if i % jobs != worker {
                        continue;
                    }
                    let label = ev.label().expect("picked events are labeled").clone();
                    let out = sp.gamma(&label).and_then(|(rg, mids)| {
                        let node = annotate_event(ev, &rg, &mids)?;
                        let rep = check_derivation_capped(&node, &sp.domains, bounds.atom_bound, bounds.cap)?;
                        Ok((
                            label.to_string(),
                            rep,
                            rg,
                            Spec::Evt(ev.clone(), label.unit.clone()),
                        ))
                    });
                    chunks.lock().expect("no panics while locked")[i] = Some(out);
                }
            });
        }
    });
    let results = chunks.into_inner().expect("workers finished");

    let mut all_ok = true;
    for r in results {
        let (label, rep, rg, subject) = r.expect("every index filled")?;
        println!("== {} ==", label);
        print_report(&rep, format);
        if !rep.accepted {
            all_ok = false;
            for f in rep.failures() {
                println!("  failing premise: {}", f);
            }
            continue;
        }
        if let Some(xdepth) = xcheck {
            let v = check_validity(&subject, &rg, &sp.domains, xdepth, bounds.atom_bound, bounds.cap)?;
            println!("semantic cross-check (depth {}): {}", xdepth, v);
            if !v.holds() {
                eprintln!("TOOLKIT BUG: accepted derivation but semantic validity fails");
                all_ok = false;
            }
        }
    }

    if all {
        // System-level report: the whole system against ⟨INIT, {}, UNIV, UNIV⟩.
        let rg = RGCond::new(sp.init.clone(), Expr::Empty, Expr::Univ, Expr::Univ);
        let node = annotate_par(sp, &rg)?;
        let rep = check_derivation_capped(&node, &sp.domains, bounds.atom_bound, bounds.cap)?;
        println!("== system ==");
        print_report(&rep, format);
        if !rep.accepted {
            all_ok = false;
            for f in rep.failures() {
                println!("  failing premise: {}", f);
            }
        }
    }
    Ok(if all_ok { 0 } else { 1 })
}

fn cmd_compositionality(sp: &SpecFile, bounds: &Bounds) -> CliResult {
    let s0 = init_states(sp)?.remove(0);
    let v = check_compositional(
        &sp.system,
        &s0,
        &EventContext::empty(),
        bounds.depth,
        &sp.domains,
        bounds.atom_bound,
        bounds.cap,
    )?;
    println!("{}", v);
    Ok(if v.holds() { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_examples_generate(
    dir: &Path,
    pos_range: i64,
    max_v: i64,
    max_obstacles: usize,
    cores: usize,
    partitions: usize,
    chmax: usize,
    messages: usize,
) -> CliResult {
    let stepper = StepperScale {
        min_pos: -pos_range,
        max_pos: pos_range,
        max_v,
        obstacle_params: vec![pos_range / 2, -pos_range / 2],
        max_obstacles,
    };
    let arinc = ArincScale {
        cores,
        partitions,
        ports: partitions,
        channels: 1,
        messages,
        c2s: (0..cores).collect(),
        p2s: (0..partitions).map(|p| p % cores).collect(),
        p2p: (0..partitions).collect(),
        chsrc: vec![0],
        chdest: vec![partitions.saturating_sub(1)],
        chmax: vec![chmax],
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    let files = [
        ("stepper.picore", stepper_source(&stepper)?),
        ("arinc.picore", arinc_source(&arinc, false)?),
        ("arinc_mutated.picore", arinc_source(&arinc, true)?),
    ];
    for (name, src) in files {
        let path = dir.join(name);
        // Normalize through the pretty-printer so the bundled files match the
        // parser's canonical layout.
        let normalized = pretty_spec(&parse_spec(&src)?);
        std::fs::write(&path, normalized).map_err(|e| CliError::Io(path.clone(), e))?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}
