use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use glbrown::error::HarnessError;
use glbrown::free_process::{ProcessEngine, TimedWord};
use glbrown::harness::{
    report_rows, run_mc, scaling_sweep, verify, write_csv, write_csv_file, write_json_file, CompareTo, Experiment,
    ReportRow, VerifyLevel,
};
use glbrown::oracle::{
    moment_b2b2star, moment_b2bstar, moment_b_power, moment_bbstar_power, nonnormality_witness,
    parse_star_pattern, word_moment_recursive, EvalPoint,
};
use glbrown::sde::Scheme;
use glbrown::trace_poly::{finite_n_moment, limit_moment, Word};

/// Imaginary parts above this fail the realness check.
const REALNESS_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "glbrown", version, about = "Brownian motion on GL(N): simulation, exact moments and large-N limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo moments for the words of an experiment file.
    Simulate(SimulateArgs),
    /// Exact large-N (or finite-N with --N) moment of a word in independent motions.
    Limit(LimitArgs),
    /// Closed-form single-time moments as CSV.
    Moments(MomentsArgs),
    /// Multi-time moment of the limit process, by both routes.
    ProcessMoment(ProcessMomentArgs),
    /// Variance and bias scaling in N.
    Sweep(SweepArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    #[arg(long, value_parser = parse_compare)]
    compare_to: Option<CompareTo>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Refuse to run without an explicit --seed.
    #[arg(long, requires = "seed")]
    publication: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct LimitArgs {
    /// Word such as "1 1 1* 1*"; index j uses the j-th time.
    #[arg(long)]
    word: String,
    /// One time per index, comma separated.
    #[arg(long = "t", value_delimiter = ',', required = true)]
    times: Vec<f64>,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    s: f64,
    #[arg(long = "N")]
    n: Option<usize>,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long)]
    r: f64,
    #[arg(long)]
    s: f64,
    #[arg(long = "t", value_delimiter = ',', required = true)]
    times: Vec<f64>,
    #[arg(long, default_value_t = 6)]
    n_max: i64,
    /// Extra single-time word as a star pattern, e.g. "11**".
    #[arg(long)]
    word: Vec<String>,
}

#[derive(Args)]
struct ProcessMomentArgs {
    /// Word with a time per letter, e.g. "1.0 2.0* 1.0*".
    #[arg(long)]
    word: String,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    s: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "Ns", value_delimiter = ',', required = true)]
    ns: Vec<usize>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    full: bool,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "euler" => Ok(Scheme::Euler),
        "geometric" => Ok(Scheme::Geometric),
        _ => Err(format!("unknown scheme {s:?}")),
    }
}

fn parse_compare(s: &str) -> Result<CompareTo, String> {
    match s {
        "limit" => Ok(CompareTo::Limit),
        "finiteN" => Ok(CompareTo::FiniteN),
        "none" => Ok(CompareTo::None),
        _ => Err(format!("unknown reference {s:?}")),
    }
}

fn load_experiment(path: &PathBuf, o: &Overrides) -> Result<Experiment, HarnessError> {
    let mut exp = Experiment::from_json(&std::fs::read_to_string(path)?)?;
    if let Some(v) = o.seed {
        exp.sim.seed = v;
    }
    if let Some(v) = o.paths {
        exp.sim.paths = v;
    }
    if let Some(v) = o.n {
        exp.sim.n = v;
    }
    if let Some(v) = o.dt {
        exp.sim.dt = Some(v);
    }
    if let Some(v) = o.scheme {
        exp.sim.scheme = v;
    }
    if let Some(v) = o.compare_to {
        exp.compare_to = v;
    }
    if o.csv.is_some() {
        exp.outputs.csv = o.csv.clone();
    }
    if o.json.is_some() {
        exp.outputs.json = o.json.clone();
    }
    Ok(exp)
}

fn emit(rows: &[ReportRow], exp: &Experiment) -> Result<(), HarnessError> {
    match &exp.outputs.csv {
        Some(p) => write_csv_file(rows, p)?,
        None => write_csv(rows, std::io::stdout().lock())?,
    }
    if let Some(p) = &exp.outputs.json {
        write_json_file(rows, p)?;
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<bool, HarnessError> {
    let exp = load_experiment(&args.config, &args.overrides)?;
    let report = run_mc(&exp)?;
    emit(&report_rows(&report), &exp)?;
    eprintln!(
        "N={} paths={} dt={} blow-ups={} wall={:.2}s",
        report.n, report.paths, report.dt, report.blowups, report.wall_time_s
    );
    Ok(true)
}

fn limit(args: &LimitArgs) -> Result<bool, HarnessError> {
    let word = Word::parse(&args.word)?;
    let value = match args.n {
        Some(n) => finite_n_moment(&word, &args.times, args.r, args.s, n)?,
        None => limit_moment(&word, &args.times, args.r, args.s)?,
    };
    let real = value.im.abs() <= REALNESS_TOL;
    let mut out = std::io::stdout().lock();
    writeln!(out, "value = {:e} {:+e}i", value.re, value.im)?;
    writeln!(out, "realness (|im| <= {REALNESS_TOL:e}): {}", if real { "pass" } else { "FAIL" })?;
    Ok(real)
}

fn moments(args: &MomentsArgs) -> Result<bool, HarnessError> {
    let patterns = args.word.iter().map(|w| parse_star_pattern(w).map(|p| (w.clone(), p))).collect::<Result<Vec<_>, _>>()?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "r,s,t,name,n,value")?;
    for &t in &args.times {
        let p = EvalPoint::new(args.r, args.s, t)?;
        let (r, s) = (args.r, args.s);
        for n in 1..=args.n_max {
            writeln!(out, "{r},{s},{t},b_power,{n},{}", moment_b_power(&p, n)?)?;
            writeln!(out, "{r},{s},{t},bbstar_power,{n},{}", moment_bbstar_power(&p, n)?)?;
        }
        writeln!(out, "{r},{s},{t},b2b2star,4,{}", moment_b2b2star(&p)?)?;
        writeln!(out, "{r},{s},{t},b2bstar,3,{}", moment_b2bstar(&p)?)?;
        writeln!(out, "{r},{s},{t},nonnormality,4,{}", nonnormality_witness(&p)?)?;
        for (name, stars) in &patterns {
            writeln!(out, "{r},{s},{t},word[{name}],{},{}", stars.len(), word_moment_recursive(stars, &p)?)?;
        }
    }
    Ok(true)
}

fn process_moment(args: &ProcessMomentArgs) -> Result<bool, HarnessError> {
    let word = TimedWord::parse(&args.word)?;
    let mut engine = ProcessEngine::new(args.r, args.s)?;
    let m = engine.moment(&word)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "value = {:e} {:+e}i", m.value.re, m.value.im)?;
    writeln!(out, "route A - route B = {:e}", (m.route_a - m.route_b).norm())?;
    Ok(true)
}

fn sweep(args: &SweepArgs) -> Result<bool, HarnessError> {
    let exp = load_experiment(&args.config, &args.overrides)?;
    let res = scaling_sweep(&exp, &args.ns)?;
    let mut rows = Vec::new();
    for (k, &n) in res.ns.iter().enumerate() {
        let rep = &res.reports[k];
        for (i, w) in res.words.iter().enumerate() {
            for (name, value) in [("variance", w.variances[k]), ("deviation", w.deviations[k])] {
                rows.push(ReportRow {
                    module: "sweep".into(),
                    name: name.into(),
                    r: rep.r,
                    s: rep.s,
                    n,
                    t_spec: w.word.clone(),
                    value_re: value,
                    value_im: 0.0,
                    se: (name == "deviation").then_some(rep.words[i].se),
                    ref_re: Some(w.limit),
                    ref_im: Some(0.0),
                    z: rep.words[i].z.filter(|z| z.is_finite()),
                });
            }
        }
    }
    match &exp.outputs.csv {
        Some(p) => write_csv_file(&rows, p)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    if let Some(p) = &exp.outputs.json {
        std::fs::write(p, serde_json::to_string_pretty(&res)?)?;
    }
    for w in &res.words {
        let show = |f: Option<glbrown::harness::SlopeFit>| match f {
            Some(f) => format!("{:.3} [{:.3}, {:.3}]", f.slope, f.ci_low, f.ci_high),
            None => "undefined".to_string(),
        };
        eprintln!("{}: variance slope {}, deviation slope {}", w.word, show(w.variance_fit), show(w.deviation_fit));
    }
    Ok(true)
}

fn run(cli: &Cli) -> Result<bool, HarnessError> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Limit(a) => limit(a),
        Command::Moments(a) => moments(a),
        Command::ProcessMoment(a) => process_moment(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => {
            let level = if a.full { VerifyLevel::Full } else { VerifyLevel::Fast };
            let rep = verify(level)?;
            let mut out = std::io::stdout().lock();
            for c in &rep.checks {
                writeln!(out, "{c}")?;
            }
            Ok(rep.all_passed())
        }
    }
}

/// A closed stdout (e.g. piped into `head`) is not an error.
fn is_broken_pipe(e: &HarnessError) -> bool {
    let io = match e {
        HarnessError::Io(io) => io,
        HarnessError::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => io,
            _ => return false,
        },
        _ => return false,
    };
    io.kind() == std::io::ErrorKind::BrokenPipe
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
