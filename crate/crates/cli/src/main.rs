//! `canonrep`: command-line front end over the JSON interchange formats.

mod plot;

use canonrep_core::bench::{decoupling_ratio, exact_ratio, path_sums, sample_pairs, BenchError, BenchReport};
use canonrep_core::canon::{canonical_representation, law_of_representation, CellRepresentation, CellTree};
use canonrep_core::generate::{generate_process, GenError, GenSpec};
use canonrep_core::json::{
    cell_tree_from_json, looks_like_representation, process_from_json, process_to_json, representation_from_json,
    representation_to_json, transport_to_json, FormatError, FORMAT_VERSION,
};
use canonrep_core::mds::{construct_ci_copy, describe_sections, pair_law, represent_mds, verify_zero_sections};
use canonrep_core::process::{are_tangent, is_mds, joint_law, satisfies_ci, Component, FiniteProcess, PairProcess, Verdict};
use canonrep_core::skorohod::{
    increment_chi_square, integer_grid, martingale_check, simulate_batch, BrownianConfig, MartingaleReport, Scheme,
    SkorohodError,
};
use canonrep_core::stats::ChiSquare;
use canonrep_core::transport::{build_transport, pair_from_representations, verify_measure_preserving, TransportError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "canonrep", version, about = "Canonical representations of finite martingales")]
struct Cli {
    /// Input document ("-" for stdin).
    #[arg(long = "in", global = true, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Output document; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Seed for stochastic subcommands; required by them.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress the summary line.
    #[arg(long, global = true)]
    quiet: bool,
    /// Schema version of emitted documents.
    #[arg(long = "format-version", global = true, default_value_t = FORMAT_VERSION)]
    format_version: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a process or representation and report its properties.
    Validate(ValidateArgs),
    /// Build the canonical representation of a process.
    Represent(RepresentArgs),
    /// Emit the exact pair law of the decoupled copy.
    Decouple,
    /// Build measure-preserving maps between the halves of a tangent pair.
    Transport(TransportArgs),
    /// Monte Carlo decoupling ratio with an exact oracle on small trees.
    Bench(BenchArgs),
    /// Embed the sequence in planar Brownian motion and test the embedding.
    Skorohod(SkorohodArgs),
    /// Generate a random process.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Fail unless the process is a martingale difference sequence.
    #[arg(long)]
    require_mds: bool,
    /// Treat the input as a pair process and fail unless it is tangent.
    #[arg(long)]
    require_tangent: bool,
}

#[derive(Debug, Args)]
struct RepresentArgs {
    /// Fail unless every section integral vanishes.
    #[arg(long)]
    mds: bool,
}

#[derive(Debug, Args)]
struct TransportArgs {
    /// First representation (the `h` half).
    #[arg(long, requires = "k")]
    h: Option<PathBuf>,
    /// Second representation (the `k` half).
    #[arg(long, requires = "h")]
    k: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Largest depth at which the enumeration oracle runs automatically.
    #[arg(long, default_value_t = 4)]
    depth_limit: usize,
    /// Run the enumeration oracle regardless of size.
    #[arg(long)]
    exact: bool,
    /// CSV of per-path sums.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Euler,
    ExitSample,
}

#[derive(Debug, Args)]
struct SkorohodArgs {
    #[arg(long, value_enum, default_value = "exit-sample")]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Comma-separated grid times in [0, N]; defaults to the integers plus
    /// five interior points per block.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = BrownianConfig::DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = BrownianConfig::DEFAULT_CAP)]
    cap: f64,
    #[arg(long, default_value_t = BrownianConfig::DEFAULT_EPS)]
    boundary_eps: f64,
    /// CSV of (path, t, F_t) for the first `csv_paths` paths.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    csv_paths: usize,
    /// SVG of up to 20 trajectories.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    branching: usize,
    #[arg(long, default_value_t = 1)]
    dimension: usize,
    /// Center every node.
    #[arg(long)]
    mds: bool,
}

/// Exit statuses: 1 domain invariant, 2 I/O or parse, 3 statistical test.
#[derive(Debug)]
enum Failure {
    Invariant(String),
    Input(String),
    Statistical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invariant(_) => 1,
            Failure::Input(_) => 2,
            Failure::Statistical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invariant(m) | Failure::Input(m) | Failure::Statistical(m) => m,
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        if e.is_parse_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Invariant(e.to_string())
        }
    }
}

macro_rules! invariant_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Invariant(e.to_string())
            }
        }
    )*};
}
invariant_from!(BenchError, GenError, SkorohodError, TransportError, canonrep_core::mds::MdsError);

type Outcome = Result<String, Failure>;

fn read_text(path: Option<&Path>) -> Result<String, Failure> {
    match path {
        None => Err(Failure::Input("missing --in".into())),
        Some(p) if p == Path::new("-") => {
            std::io::read_to_string(std::io::stdin()).map_err(|e| Failure::Input(format!("stdin: {e}")))
        }
        Some(p) => std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn require_seed(seed: Option<u64>) -> Result<u64, Failure> {
    seed.ok_or_else(|| Failure::Input("this subcommand requires --seed".into()))
}

enum Input {
    Process(FiniteProcess),
    Representation(CellRepresentation),
}

fn read_input(cli: &Cli) -> Result<Input, Failure> {
    let text = read_text(cli.input.as_deref())?;
    if looks_like_representation(&text) {
        Ok(Input::Representation(representation_from_json(&text)?))
    } else {
        Ok(Input::Process(process_from_json(&text)?))
    }
}

fn read_representation(cli: &Cli) -> Result<CellRepresentation, Failure> {
    Ok(match read_input(cli)? {
        Input::Process(p) => canonical_representation(&p),
        Input::Representation(r) => r,
    })
}

fn verdict<W: std::fmt::Debug>(v: &Verdict<W>) -> String {
    match v {
        Verdict::Holds => "holds".into(),
        Verdict::Fails(w) => format!("fails at {w:?}"),
    }
}

fn cmd_validate(cli: &Cli, args: &ValidateArgs) -> Outcome {
    let process = match read_input(cli)? {
        Input::Representation(r) => {
            let sections = verify_zero_sections(&r);
            if args.require_mds && !sections.is_zero() {
                return Err(Failure::Invariant(format!("not a martingale difference: {}", describe_sections(&sections))));
            }
            return Ok(format!(
                "valid representation: dimension {}, depth {}, {} paths; sections: {}",
                r.dimension(),
                r.depth(),
                law_of_representation(&r).len(),
                describe_sections(&sections)
            ));
        }
        Input::Process(p) => p,
    };
    let mds = is_mds(&process);
    let mut summary = format!(
        "valid process: dimension {}, depth {}, {} paths; mds {}",
        process.dimension,
        process.depth,
        joint_law(&process).len(),
        verdict(&mds)
    );
    if args.require_mds && !mds.holds() {
        return Err(Failure::Invariant(summary));
    }
    if args.require_tangent {
        let pq = PairProcess::new(process).map_err(|e| Failure::Invariant(e.to_string()))?;
        let tangent = are_tangent(&pq);
        let _ = write!(summary, "; tangent {}", verdict(&tangent));
        if !tangent.holds() {
            return Err(Failure::Invariant(summary));
        }
    }
    Ok(summary)
}

fn cmd_represent(cli: &Cli, args: &RepresentArgs) -> Outcome {
    let p = match read_input(cli)? {
        Input::Process(p) => p,
        Input::Representation(_) => return Err(Failure::Input("represent expects a process document".into())),
    };
    let r = if args.mds { represent_mds(&p)? } else { canonical_representation(&p) };
    write_text(cli.out.as_deref(), &representation_to_json(&r))?;
    let equal = law_of_representation(&r) == joint_law(&p);
    if !equal {
        return Err(Failure::Invariant("representation law differs from the process law".into()));
    }
    Ok(format!(
        "representation written; law equality holds; sections: {}",
        describe_sections(&verify_zero_sections(&r))
    ))
}

fn cmd_decouple(cli: &Cli) -> Outcome {
    let r = read_representation(cli)?;
    let pq = pair_law(&construct_ci_copy(&r));
    write_text(cli.out.as_deref(), &process_to_json(pq.process()))?;
    let tangent = are_tangent(&pq);
    let ci = satisfies_ci(&pq, Component::Second);
    if !tangent.holds() || !ci.holds() {
        return Err(Failure::Invariant(format!("tangent {}; ci {}", verdict(&tangent), verdict(&ci))));
    }
    Ok(format!("pair law written: {} paths; tangent holds; ci holds", joint_law(pq.process()).len()))
}

fn cmd_transport(cli: &Cli, args: &TransportArgs) -> Outcome {
    let pq = match (&args.h, &args.k) {
        (Some(h), Some(k)) => {
            let h: CellTree = cell_tree_from_json(&read_text(Some(h))?)?;
            let k: CellTree = cell_tree_from_json(&read_text(Some(k))?)?;
            pair_from_representations(&h, &k)?
        }
        _ => {
            let p = process_from_json(&read_text(cli.input.as_deref())?)?;
            PairProcess::new(p).map_err(|e| Failure::Invariant(e.to_string()))?
        }
    };
    let base = canonical_representation(pq.process());
    let maps = build_transport(&pq, &base)?;
    write_text(cli.out.as_deref(), &transport_to_json(&maps))?;
    let sections: Vec<_> = maps.iter().flatten().collect();
    if let Some(bad) = sections.iter().find(|t| !verify_measure_preserving(t).holds()) {
        return Err(Failure::Invariant(format!("section at step {} is not measure preserving", bad.step)));
    }
    Ok(format!("{} sections written; all measure preserving", sections.len()))
}

fn max_branching(r: &CellRepresentation) -> usize {
    r.nodes().iter().map(|(_, n)| n.len()).max().unwrap_or(0)
}

fn cmd_bench(cli: &Cli, args: &BenchArgs) -> Outcome {
    let seed = require_seed(cli.seed)?;
    let r = read_representation(cli)?;
    let est = decoupling_ratio(&r, args.p, args.samples, seed)?;
    let oracle = if args.exact || (r.depth() <= args.depth_limit && max_branching(&r) <= 4) {
        Some(exact_ratio(&r, args.p)?)
    } else {
        None
    };
    let report = BenchReport::new(&r, &est, args.p, args.samples, seed, oracle.as_ref());
    write_text(cli.out.as_deref(), &to_json(&report))?;
    if let Some(path) = &args.csv {
        let batch = sample_pairs(&construct_ci_copy(&r), args.samples, seed);
        let (ds, es) = (path_sums(&batch.d), path_sums(&batch.e));
        let d = r.dimension();
        let mut csv = String::from("path");
        for i in 1..=d {
            let _ = write!(csv, ",sum_d_{i}");
        }
        for i in 1..=d {
            let _ = write!(csv, ",sum_e_{i}");
        }
        csv.push('\n');
        for (m, (a, b)) in ds.iter().zip(&es).enumerate() {
            let _ = write!(csv, "{m}");
            for x in a.iter().chain(b) {
                let _ = write!(csv, ",{x}");
            }
            csv.push('\n');
        }
        write_text(Some(path), &csv)?;
    }
    let summary = format!(
        "ratio {:.6} ± {:.6} (95% CI [{:.6}, {:.6}]), p = {}, M = {}, exact {}",
        est.ratio,
        est.ratio - est.ci_low,
        est.ci_low,
        est.ci_high,
        args.p,
        args.samples,
        oracle
            .as_ref()
            .and_then(|o| o.ratio)
            .map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
    );
    if let Some(exact) = oracle.as_ref().and_then(|o| o.ratio) {
        if (est.ratio - exact).abs() > 5.0 * est.se {
            return Err(Failure::Statistical(format!("{summary}; estimate is more than 5 SE from the exact ratio")));
        }
    }
    Ok(summary)
}

/// Integers `0..=N` plus `n + (2j + 1) / 10`, `j = 0..5`, in every block.
fn default_grid(depth: usize) -> Vec<f64> {
    let mut grid = integer_grid(depth);
    for n in 0..depth {
        for j in 0..5 {
            grid.push(n as f64 + (2 * j + 1) as f64 / 10.0);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid
}

#[derive(Debug, Serialize)]
struct SkorohodReport {
    format_version: u32,
    scheme: Scheme,
    samples: usize,
    seed: u64,
    generator: &'static str,
    source: String,
    dt: f64,
    cap: f64,
    boundary_eps: f64,
    grid: Vec<f64>,
    chi_square: ChiSquare,
    martingale: Option<MartingaleReport>,
    blocks: usize,
    coarse_blocks: usize,
    restarts: u64,
    passed: bool,
}

/// Paths needed before the martingale proxy is judged.
const MARTINGALE_MIN_PATHS: usize = 10_000;

fn cmd_skorohod(cli: &Cli, args: &SkorohodArgs) -> Outcome {
    let seed = require_seed(cli.seed)?;
    let r = read_representation(cli)?;
    let scheme = match args.scheme {
        SchemeArg::Euler => Scheme::Euler,
        SchemeArg::ExitSample => Scheme::ExitSample,
    };
    let cfg = BrownianConfig {
        dt_base: args.dt,
        boundary_eps: args.boundary_eps,
        seed,
        scheme,
        cap: args.cap,
    };
    let grid = match (&args.grid, scheme) {
        (_, Scheme::ExitSample) => integer_grid(r.depth()),
        (Some(g), Scheme::Euler) => g.clone(),
        (None, Scheme::Euler) => default_grid(r.depth()),
    };
    let sim = simulate_batch(&r, &grid, &cfg, args.samples)?;
    let chi = increment_chi_square(&r, &sim.paths);
    let martingale = match scheme {
        Scheme::Euler if !sim.paths.is_empty() => Some(martingale_check(&sim.paths, &grid)?),
        _ => None,
    };
    let martingale_ok = martingale
        .as_ref()
        .is_none_or(|m| m.paths < MARTINGALE_MIN_PATHS || m.passes(5.0));
    let passed = chi.passes(0.01) && martingale_ok;
    let report = SkorohodReport {
        format_version: FORMAT_VERSION,
        scheme,
        samples: args.samples,
        seed,
        generator: sim.generator,
        source: canonrep_core::bench::source_id(&r),
        dt: args.dt,
        cap: args.cap,
        boundary_eps: args.boundary_eps,
        grid: grid.clone(),
        chi_square: chi.clone(),
        martingale: martingale.clone(),
        blocks: sim.blocks,
        coarse_blocks: sim.coarse_blocks,
        restarts: sim.restarts,
        passed,
    };
    write_text(cli.out.as_deref(), &to_json(&report))?;
    if let Some(path) = &args.csv {
        write_text(Some(path), &plot::paths_csv(&sim.paths, args.csv_paths))?;
    }
    if let Some(path) = &args.svg {
        write_text(Some(path), &plot::paths_svg(&sim.paths, r.depth()))?;
    }
    let mut summary = format!(
        "chi-square p = {:.4} (statistic {:.3}, dof {}), {} paths",
        chi.p_value, chi.statistic, chi.dof, args.samples
    );
    if let Some(m) = &martingale {
        let worst_slope = m.slopes.iter().map(|s| s.z()).fold(0.0, f64::max);
        let _ = write!(
            summary,
            "; max |mean F_t| = {:.2e} ({:.2} SE); worst slope deviation {:.2} SE",
            m.max_abs_mean, m.max_mean_z, worst_slope
        );
    }
    if passed {
        Ok(summary)
    } else {
        Err(Failure::Statistical(summary))
    }
}

fn cmd_gen(cli: &Cli, args: &GenArgs) -> Outcome {
    let seed = require_seed(cli.seed)?;
    let spec = GenSpec {
        depth: args.depth,
        branching: args.branching,
        dimension: args.dimension,
        mds: args.mds,
        seed,
    };
    let p = generate_process(&spec)?;
    write_text(cli.out.as_deref(), &process_to_json(&p))?;
    Ok(format!("generated process: {} paths", joint_law(&p).len()))
}

fn run(cli: &Cli) -> Outcome {
    if cli.format_version != FORMAT_VERSION {
        return Err(Failure::Input(format!(
            "unsupported format version {} (this build writes {FORMAT_VERSION})",
            cli.format_version
        )));
    }
    match &cli.command {
        Command::Validate(a) => cmd_validate(cli, a),
        Command::Represent(a) => cmd_represent(cli, a),
        Command::Decouple => cmd_decouple(cli),
        Command::Transport(a) => cmd_transport(cli, a),
        Command::Bench(a) => cmd_bench(cli, a),
        Command::Skorohod(a) => cmd_skorohod(cli, a),
        Command::Gen(a) => cmd_gen(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(summary) => {
            if !cli.quiet {
                eprintln!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
