use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sharkov::continuity::delta;
use sharkov::orbit::{find_periodic_points, first_return, verify_forcing, ScanMode};
use sharkov::perturbation::{build_perturbation, certify, find_witness, PlanInputs};
use sharkov::pipeline::{run, PipelineConfig, PipelineStatus};
use sharkov::sharkovskii::{chain, compare, forced_periods_sorted, star_compare, ForcedOrder};
use sharkov::{Error, HyperInteger, HyperNumber, Interval, OrderVerdict, PiecewiseLinearMap, Verdict};

const EXIT_PASS: u8 = 0;
const EXIT_FALSE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_UNDETERMINED: u8 = 3;
const EXIT_INVARIANCE: u8 = 4;
const EXIT_REJECTED: u8 = 5;

#[derive(Parser)]
#[command(name = "sharkov", version, about = "Period forcing and perturbation toolkit for interval maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Queries on the Sharkovskii order
    #[command(subcommand)]
    Order(OrderCmd),
    /// Arithmetic on eventually periodic sequence classes
    #[command(subcommand)]
    Hyper(HyperCmd),
    /// Evaluate and compare piecewise linear maps
    #[command(subcommand)]
    Map(MapCmd),
    /// Periodic orbits, first returns and forcing
    #[command(subcommand)]
    Detect(DetectCmd),
    /// Build and certify a closing perturbation
    Perturb(PerturbArgs),
    /// End-to-end runs from a TOML config
    #[command(subcommand)]
    Pipeline(PipelineCmd),
}

#[derive(Subcommand)]
enum OrderCmd {
    /// Compare two positive integers
    Compare { p: u64, q: u64 },
    /// Periods forced by P, up to a bound
    Forced {
        p: u64,
        #[arg(long)]
        bound: u64,
        /// Sort the list by the Sharkovskii order instead of numerically
        #[arg(long)]
        sharkovskii: bool,
    },
    /// Integers 1..=MAX listed in Sharkovskii order
    Chain {
        #[arg(long)]
        max: u64,
    },
    /// Index-wise order of two integer sequences (literal or file)
    StarCompare { r: String, s: String },
}

#[derive(Subcommand)]
enum HyperCmd {
    Add { x: String, y: String },
    Mul { x: String, y: String },
    /// Whether X < Y (or X <= Y with --le)
    Order {
        x: String,
        y: String,
        #[arg(long)]
        le: bool,
    },
    Classify { x: String },
    Shadow { x: String },
    /// Whether X and Y are infinitely close
    Close { x: String, y: String },
}

#[derive(Subcommand)]
enum MapCmd {
    Eval {
        map: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    Iterate {
        map: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long)]
        k: usize,
        /// Print the whole orbit
        #[arg(long)]
        orbit: bool,
        #[arg(long)]
        json: bool,
    },
    /// Sup distance between two maps on a common domain
    NormDist {
        f: PathBuf,
        g: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// CSV samples of f^k for external plotting
    Sample {
        map: PathBuf,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Sample uniformly at random instead of on a grid
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write f^k as a map file
    Power {
        map: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DetectCmd {
    /// Orbits of minimal period P
    Periods {
        map: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[arg(long)]
        json: bool,
    },
    /// First return time of (x0 - radius, x0 + radius)
    FirstReturn {
        map: PathBuf,
        #[arg(long)]
        x0: f64,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 64)]
        max_time: usize,
        #[arg(long)]
        json: bool,
    },
    /// Search for every period forced by P
    Forcing {
        map: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        bound: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct PerturbArgs {
    map: PathBuf,
    #[arg(long)]
    x0: f64,
    /// Radius of the neighbourhood; defaults to the budget for --epsilon, --s, --n
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    s: u64,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    max_time: usize,
    /// Write the perturbed map here
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum PipelineCmd {
    Run {
        config: PathBuf,
        /// Report path; overrides `output` in the config
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the stage table
        #[arg(long)]
        summary: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain { .. } | Error::Invariance { .. } | Error::DomainMismatch(..) => EXIT_INVARIANCE,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_USAGE, message: e.to_string() }
    }
}

type Outcome = Result<u8, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }
    let result = match cli.command {
        Command::Order(c) => cmd_order(c),
        Command::Hyper(c) => cmd_hyper(c),
        Command::Map(c) => cmd_map(c),
        Command::Detect(c) => cmd_detect(c),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Pipeline(c) => cmd_pipeline(c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("SHARKOV_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("SHARKOV_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(e.to_string()))
}

fn read_map(path: &Path) -> Result<PiecewiseLinearMap, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    text.parse().map_err(|e: Error| usage(format!("{}: {e}", path.display())))
}

/// A literal `prefix=[..];cycle=[..]`, or a file holding one.
fn read_text(arg: &str) -> Result<String, Failure> {
    if arg.trim_start().starts_with("prefix=") {
        Ok(arg.to_string())
    } else {
        fs::read_to_string(arg).map_err(|e| usage(format!("{arg}: {e}")))
    }
}

fn hyper_number(arg: &str) -> Result<HyperNumber, Failure> {
    read_text(arg)?.trim().parse().map_err(|e: Error| usage(e.to_string()))
}

fn hyper_integer(arg: &str) -> Result<HyperInteger, Failure> {
    read_text(arg)?.trim().parse().map_err(|e: Error| usage(e.to_string()))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Holds => EXIT_PASS,
        Verdict::Fails => EXIT_FALSE,
        Verdict::UltrafilterDependent => EXIT_UNDETERMINED,
    }
}

fn cmd_order(cmd: OrderCmd) -> Outcome {
    match cmd {
        OrderCmd::Compare { p, q } => {
            match compare(p, q)? {
                OrderVerdict::Before => println!("{p} ◁ {q}"),
                OrderVerdict::Equal => println!("equal"),
                OrderVerdict::After => println!("{q} ◁ {p}"),
            }
            Ok(EXIT_PASS)
        }
        OrderCmd::Forced { p, bound, sharkovskii } => {
            let order = if sharkovskii { ForcedOrder::Sharkovskii } else { ForcedOrder::Numeric };
            let list = forced_periods_sorted(p, bound, order)?;
            println!("{}", join(&list));
            Ok(EXIT_PASS)
        }
        OrderCmd::Chain { max } => {
            let list: Vec<String> = chain(max).iter().map(u64::to_string).collect();
            println!("{}", list.join(" ◁ "));
            Ok(EXIT_PASS)
        }
        OrderCmd::StarCompare { r, s } => {
            let v = star_compare(&hyper_integer(&r)?, &hyper_integer(&s)?)?;
            println!("{v}");
            Ok(verdict_code(v))
        }
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn cmd_hyper(cmd: HyperCmd) -> Outcome {
    match cmd {
        HyperCmd::Add { x, y } => {
            println!("{}", hyper_number(&x)? + hyper_number(&y)?);
            Ok(EXIT_PASS)
        }
        HyperCmd::Mul { x, y } => {
            println!("{}", hyper_number(&x)? * hyper_number(&y)?);
            Ok(EXIT_PASS)
        }
        HyperCmd::Order { x, y, le } => {
            let (x, y) = (hyper_number(&x)?, hyper_number(&y)?);
            let v = if le { x.less_eq(&y) } else { x.less(&y) };
            println!("{v}");
            Ok(verdict_code(v))
        }
        HyperCmd::Classify { x } => {
            println!("{}", hyper_number(&x)?.classify());
            Ok(EXIT_PASS)
        }
        HyperCmd::Shadow { x } => {
            println!("{}", hyper_number(&x)?.shadow()?);
            Ok(EXIT_PASS)
        }
        HyperCmd::Close { x, y } => {
            let v = hyper_number(&x)?.infinitely_close(&hyper_number(&y)?);
            println!("{v}");
            Ok(verdict_code(v))
        }
    }
}

fn cmd_map(cmd: MapCmd) -> Outcome {
    match cmd {
        MapCmd::Eval { map, x } => {
            println!("{}", read_map(&map)?.eval(x)?);
            Ok(EXIT_PASS)
        }
        MapCmd::Iterate { map, x, k, orbit, json } => {
            let points = read_map(&map)?.orbit(k, x)?;
            if json {
                print_json(&serde_json::json!({ "x": x, "k": k, "orbit": points }));
            } else if orbit {
                for (i, p) in points.iter().enumerate() {
                    println!("{i}\t{p}");
                }
            } else {
                println!("{}", points[k]);
            }
            Ok(EXIT_PASS)
        }
        MapCmd::NormDist { f, g, json } => {
            let (f, g) = (read_map(&f)?, read_map(&g)?);
            let (d, at) = f.sup_distance_at(&g)?;
            if json {
                print_json(&serde_json::json!({ "distance": d, "at": at }));
            } else {
                println!("{d}");
            }
            Ok(EXIT_PASS)
        }
        MapCmd::Sample { map, points, k, random, seed } => {
            let f = read_map(&map)?;
            let Interval { lo, hi } = f.domain();
            let mut xs: Vec<f64> = if random {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..points).map(|_| rng.gen_range(lo..=hi)).collect()
            } else if points == 1 {
                vec![lo]
            } else {
                (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
            };
            xs.sort_by(f64::total_cmp);
            let mut out = io::stdout().lock();
            writeln!(out, "x,y")?;
            for x in xs {
                writeln!(out, "{x},{}", f.iterate(k, x)?)?;
            }
            Ok(EXIT_PASS)
        }
        MapCmd::Power { map, k, out } => {
            let power = read_map(&map)?.iterate_map(k)?;
            match out {
                Some(path) => fs::write(path, power.to_string())?,
                None => print!("{power}"),
            }
            Ok(EXIT_PASS)
        }
    }
}

fn mode_name(mode: ScanMode) -> &'static str {
    match mode {
        ScanMode::Exact => "exact",
        ScanMode::Pointwise => "pointwise",
    }
}

fn cmd_detect(cmd: DetectCmd) -> Outcome {
    match cmd {
        DetectCmd::Periods { map, p, grid, json } => {
            let orbits = find_periodic_points(&read_map(&map)?, p, grid)?;
            if json {
                print_json(&orbits);
            } else {
                println!("{} orbit(s) of period {p}", orbits.len());
                for o in &orbits {
                    println!(
                        "{}  residual {:e}  {}",
                        join(&o.orbit),
                        o.residual,
                        mode_name(o.mode)
                    );
                }
            }
            Ok(if orbits.is_empty() { EXIT_FALSE } else { EXIT_PASS })
        }
        DetectCmd::FirstReturn { map, x0, radius, max_time, json } => {
            if radius <= 0.0 {
                return Err(usage("radius must be positive"));
            }
            let v = Interval::ball(x0, radius);
            let r = first_return(&read_map(&map)?, v, max_time)?;
            if json {
                print_json(&serde_json::json!({ "x0": x0, "radius": radius, "first_return": r }));
            } else {
                match r {
                    Some(r) => println!("{r}"),
                    None => println!("none within {max_time}"),
                }
            }
            Ok(if r.is_some() { EXIT_PASS } else { EXIT_FALSE })
        }
        DetectCmd::Forcing { map, p, bound, json } => {
            let report = verify_forcing(&read_map(&map)?, p, bound)?;
            if json {
                print_json(&report);
            } else {
                for e in &report.entries {
                    match &e.orbit {
                        Some(o) => println!("{:>4}  found  {}  grid {}", e.period, join(&o.orbit), e.grid),
                        None => println!("{:>4}  missing  grid {}", e.period, e.grid),
                    }
                }
                println!("{}", if report.complete { "complete" } else { "incomplete" });
            }
            Ok(if report.complete { EXIT_PASS } else { EXIT_FALSE })
        }
    }
}

fn cmd_perturb(args: PerturbArgs) -> Outcome {
    let f = read_map(&args.map)?;
    let delta = match args.delta {
        Some(d) => d,
        None => delta(&f, args.epsilon, args.s, args.n as u64)?,
    };
    let witness = find_witness(&f, args.x0, delta, args.max_time)?;
    let plan = build_perturbation(&f, PlanInputs::from_witness(args.n, args.x0, delta, &witness))?;
    let cert = certify(&plan, &f)?;
    if let Some(path) = &args.out {
        fs::write(path, plan.perturbed.to_string())?;
    }
    if args.json {
        print_json(&serde_json::json!({ "plan": plan, "certificate": cert }));
    } else {
        println!("delta        {delta}");
        println!("witness      {} (return {}, {:?})", witness.y, witness.return_time, witness.status);
        println!("displacement {}", plan.displacement);
        for c in &cert.checks {
            println!("{:<28} {:<4} {:e}", c.name, if c.passed { "ok" } else { "FAIL" }, c.residual);
        }
    }
    Ok(if cert.passed { EXIT_PASS } else { EXIT_FALSE })
}

fn cmd_pipeline(cmd: PipelineCmd) -> Outcome {
    let PipelineCmd::Run { config, out, summary } = cmd;
    let config = PipelineConfig::from_file(&config).map_err(|e| usage(e.to_string()))?;
    let report = run(&config)?;
    let json = report.to_json();
    match out.or(config.output.clone()) {
        Some(path) => fs::write(&path, &json).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None if !summary => print!("{json}"),
        None => {}
    }
    if summary {
        print!("{}", report.summary());
    }
    match report.status {
        PipelineStatus::Pass => Ok(EXIT_PASS),
        PipelineStatus::OrderUndetermined => {
            eprintln!("{}", report.status.as_str());
            Ok(EXIT_UNDETERMINED)
        }
        status => {
            eprintln!("{}", status.as_str());
            Ok(EXIT_REJECTED)
        }
    }
}
