//! `exact-simon`: batch experiments over the exact Simon solvers and their
//! Abelian generalization. Reports go to stdout as newline-delimited JSON
//! (or CSV with `--format csv`); human summaries go to stderr.
//!
//! Exit codes: 0 success, 2 usage or malformed input, 3 a cap was hit,
//! 4 an invariant was violated.

mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exact_simon::abelian::{
    self, check_commutative_laws, discrete_log, zqp_solve_abelian, AbelianElement, AbelianGroupSpec, AbelianOracle,
    AbelianSubgroup, LawReport,
};
use exact_simon::classical::{defeat_experiment, DefeatReport};
use exact_simon::gf2::Gf2Basis;
use exact_simon::oracle::{random_promise_oracle, random_subgroup, BalancedFunction, PromiseOracle, SimonOracle};
use exact_simon::simon::{solve, Solver, SolverOptions, SolverReport};
use exact_simon::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use report::{emit, Format};

const VERSION: &str = env!("EXACT_SIMON_VERSION");

#[derive(Parser)]
#[command(name = "exact-simon", version = VERSION, about = "Exact and zero-error solvers for Simon's subgroup problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover a hidden subgroup of Z₂ⁿ with one of the solvers.
    Solve(SolveArgs),
    /// Run the classical collision adversary on random Simon instances.
    Adversary(AdversaryArgs),
    /// Hidden subgroups, operator laws and discrete logarithms over Z_{m₁} ⊕ … ⊕ Z_{m_k}.
    Abelian(AbelianArgs),
    /// Write a random promise oracle in the JSON oracle format.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Exact,
    ExactOpt,
    Zqp,
}

#[derive(Args)]
struct SolveArgs {
    /// Group dimension; required with `--oracle random`.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value = "exact-opt")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `random`, or a path to a JSON oracle file.
    #[arg(long, default_value = "random")]
    oracle: String,
    /// Hidden subgroup for random oracles: comma-separated bitstrings,
    /// `random:RANK`, or `trivial`.
    #[arg(long, default_value = "random:1")]
    subgroup: String,
    /// Output width of random oracles (default n).
    #[arg(long)]
    codomain_bits: Option<u32>,
    /// Subroutine runs allowed to the ZQP solver.
    #[arg(long, default_value_t = 10_000)]
    max_samples: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct AdversaryArgs {
    #[arg(long)]
    n: usize,
    /// Distinct queries per trial (default ⌊2^{n/3}⌋).
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value = "parity")]
    gamma: BalancedFunction,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct AbelianArgs {
    /// Comma-separated moduli, e.g. "4,3,2".
    #[arg(long)]
    group: Option<String>,
    /// Planted subgroup generators separated by ';' (each "1,0,2" or a
    /// 0/1 string for Z₂ factors), or `random:COUNT`.
    #[arg(long)]
    subgroup: Option<String>,
    /// Check the translation/phase/Fourier commutation laws on the group.
    #[arg(long)]
    check_laws: bool,
    /// Solve ζ^r ≡ a (mod p) instead; needs --p, --zeta and --a.
    #[arg(long)]
    dlog: bool,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    zeta: Option<u64>,
    #[arg(long)]
    a: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_samples: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    n: usize,
    /// Comma-separated bitstrings, `random:RANK`, or `trivial`.
    #[arg(long, default_value = "random:1")]
    subgroup: String,
    #[arg(long)]
    codomain_bits: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Cap(String),
    Invariant(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Cap(_) => 3,
            Failure::Invariant(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Cap(m) | Failure::Invariant(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::IterationCap(_)
            | Error::SupportCap { .. }
            | Error::LayoutTooWide { .. }
            | Error::GroupTooLarge { .. }
            | Error::SpanTooLarge { .. } => Failure::Cap(m),
            Error::NotOrthogonal(_) | Error::PromiseViolation(_) | Error::ZeroNorm => Failure::Invariant(m),
            _ => Failure::Usage(m),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Oracle and solver randomness come from separate streams of one seed.
fn streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let a = ChaCha8Rng::seed_from_u64(seed);
    let mut b = a.clone();
    b.set_stream(1);
    (a, b)
}

fn parse_hidden(n: usize, spec: &str, rng: &mut ChaCha8Rng) -> Result<Gf2Basis, Failure> {
    if spec == "trivial" {
        return Ok(Gf2Basis::empty(n));
    }
    if let Some(rank) = spec.strip_prefix("random:") {
        let rank: usize = rank
            .parse()
            .map_err(|_| Failure::Usage(format!("bad rank in --subgroup {spec:?}")))?;
        return Ok(random_subgroup(n, rank, rng)?);
    }
    let items: Vec<&str> = spec.split(',').map(str::trim).collect();
    if let Some(bad) = items.iter().find(|s| s.len() != n) {
        return Err(Failure::Usage(format!("subgroup element {bad:?} does not have {n} bits")));
    }
    Ok(Gf2Basis::from_bitstrings(n, &items)?)
}

fn random_oracle(n: usize, subgroup: &str, codomain_bits: Option<u32>, seed: u64) -> Result<PromiseOracle, Failure> {
    if n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let (mut rng, _) = streams(seed);
    let hidden = parse_hidden(n, subgroup, &mut rng)?;
    let bits = codomain_bits.unwrap_or(n as u32);
    Ok(random_promise_oracle(n, &hidden, bits, &mut rng)?.with_seed(seed))
}

#[derive(Serialize)]
struct SolveParams {
    mode: Mode,
    oracle: String,
    subgroup: Option<String>,
    codomain_bits: u32,
    max_samples: usize,
}

#[derive(Serialize)]
struct SolveOutput {
    command: &'static str,
    version: &'static str,
    params: SolveParams,
    #[serde(flatten)]
    report: SolverReport,
    hidden_basis_matches: bool,
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let oracle = if args.oracle == "random" {
        let n = args.n.ok_or_else(|| Failure::Usage("--n is required with --oracle random".into()))?;
        random_oracle(n, &args.subgroup, args.codomain_bits, args.seed)?
    } else {
        let text = fs::read_to_string(&args.oracle)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.oracle)))?;
        let o = PromiseOracle::from_json(&text).map_err(|e| Failure::Usage(format!("bad oracle file: {e}")))?;
        if args.n.is_some_and(|n| n != o.dimension()) {
            return Err(Failure::Usage(format!("--n disagrees with the oracle file (n = {})", o.dimension())));
        }
        let (mut rng, _) = streams(args.seed);
        o.verify_promise(&mut rng)
            .map_err(|e| Failure::Usage(format!("oracle file breaks the promise: {e}")))?;
        o
    };
    let solver = match args.mode {
        Mode::Exact => Solver::Exact,
        Mode::ExactOpt => Solver::ExactOptimized,
        Mode::Zqp => Solver::Zqp,
    };
    let options = SolverOptions {
        max_samples: args.max_samples,
        ..SolverOptions::default()
    };
    let (_, mut rng) = streams(args.seed);
    let report = solve(&oracle, solver, args.seed, &mut rng, &options)?;
    let matches = report.basis == oracle.hidden_basis().to_bitstrings();
    eprintln!(
        "solve: n={} mode={:?} basis={:?} rho_evaluations={} iterations={}{}",
        report.n,
        args.mode,
        report.basis,
        report.rho_evaluations,
        report.iterations,
        if matches { "" } else { " (DOES NOT MATCH the planted subgroup)" }
    );
    emit(
        &SolveOutput {
            command: "solve",
            version: VERSION,
            params: SolveParams {
                mode: args.mode,
                oracle: args.oracle.clone(),
                subgroup: (args.oracle == "random").then(|| args.subgroup.clone()),
                codomain_bits: oracle.codomain_bits(),
                max_samples: args.max_samples,
            },
            report,
            hidden_basis_matches: matches,
        },
        args.format,
    )?;
    if matches {
        Ok(())
    } else {
        Err(Failure::Invariant("solver result differs from the planted subgroup".into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "OUT-OF-REGIME")]
    OutOfRegime,
}

#[derive(Serialize)]
struct AdversaryOutput {
    command: &'static str,
    version: &'static str,
    jobs: usize,
    #[serde(flatten)]
    report: DefeatReport,
    verdict: Verdict,
}

fn cmd_adversary(args: AdversaryArgs) -> Result<(), Failure> {
    if args.jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let budget = args.budget.unwrap_or_else(|| 2f64.powf(args.n as f64 / 3.0).floor() as u64);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let report = pool.install(|| defeat_experiment(args.n, args.trials, budget, args.gamma, args.seed))?;
    let verdict = if !report.in_regime {
        Verdict::OutOfRegime
    } else if report.within_bounds() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    eprintln!(
        "adversary: n={} budget={} trials={} success={:.4} (ceiling {:.4}) collisions={:.4} verdict={verdict:?}",
        report.n, report.budget, report.trials, report.success_rate, report.bound, report.collision_rate
    );
    emit(
        &AdversaryOutput {
            command: "adversary",
            version: VERSION,
            jobs: args.jobs,
            report,
            verdict,
        },
        args.format,
    )?;
    if verdict == Verdict::Fail {
        Err(Failure::Invariant("success rate above the classical ceiling".into()))
    } else {
        Ok(())
    }
}

#[derive(Serialize)]
struct AbelianOutput<T: Serialize> {
    command: &'static str,
    experiment: &'static str,
    version: &'static str,
    seed: u64,
    group: Option<String>,
    #[serde(flatten)]
    result: T,
}

#[derive(Serialize)]
struct LawOutput {
    #[serde(flatten)]
    laws: LawReport,
    verdict: Verdict,
}

#[derive(Serialize)]
struct DlogOutput {
    p: u64,
    zeta: u64,
    a: u64,
    r: u64,
    samples: usize,
    queries: u64,
}

#[derive(Serialize)]
struct HiddenOutput {
    subgroup: String,
    planted: Vec<String>,
    recovered: Vec<String>,
    generators: Vec<String>,
    samples: usize,
    queries: u64,
    matches: bool,
}

fn parse_group(spec: Option<&String>) -> Result<AbelianGroupSpec, Failure> {
    let spec = spec.ok_or_else(|| Failure::Usage("--group is required".into()))?;
    spec.parse::<AbelianGroupSpec>().map_err(Failure::from)
}

fn planted_subgroup(group: &AbelianGroupSpec, spec: &str, rng: &mut ChaCha8Rng) -> Result<AbelianSubgroup, Failure> {
    if let Some(count) = spec.strip_prefix("random:") {
        let count: usize = count
            .parse()
            .map_err(|_| Failure::Usage(format!("bad count in --subgroup {spec:?}")))?;
        return Ok(abelian::random_subgroup(group, count, rng));
    }
    let gens = spec
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(AbelianElement::parse)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AbelianSubgroup::generated(group, &gens)?)
}

fn cmd_abelian(args: AbelianArgs) -> Result<(), Failure> {
    let chosen = [args.check_laws, args.dlog, args.subgroup.is_some()];
    if chosen.iter().filter(|&&c| c).count() != 1 {
        return Err(Failure::Usage("choose exactly one of --check-laws, --dlog, --subgroup".into()));
    }
    let (mut oracle_rng, mut rng) = streams(args.seed);
    let wrap = |experiment, group: Option<&AbelianGroupSpec>| (experiment, group.map(ToString::to_string));
    if args.dlog {
        let need = |v: Option<u64>, name: &str| v.ok_or_else(|| Failure::Usage(format!("--dlog needs --{name}")));
        let (p, zeta, a) = (need(args.p, "p")?, need(args.zeta, "zeta")?, need(args.a, "a")?);
        let out = discrete_log(p, zeta, a, &mut rng, args.max_samples)?;
        eprintln!("abelian dlog: {zeta}^{} ≡ {a} (mod {p}) after {} samples", out.r, out.samples);
        let (experiment, group) = wrap("dlog", None);
        emit(
            &AbelianOutput {
                command: "abelian",
                experiment,
                version: VERSION,
                seed: args.seed,
                group,
                result: DlogOutput {
                    p,
                    zeta,
                    a,
                    r: out.r,
                    samples: out.samples,
                    queries: out.queries,
                },
            },
            args.format,
        )?;
        return Ok(());
    }
    let group = parse_group(args.group.as_ref())?;
    if args.check_laws {
        let laws = check_commutative_laws(&group, &mut rng)?;
        let verdict = if laws.holds { Verdict::Pass } else { Verdict::Fail };
        eprintln!(
            "abelian check-laws: G = {group}, {} pairs, max defect {:.1e}, verdict {verdict:?}",
            laws.pairs_checked, laws.max_defect
        );
        let failure = laws.counterexample.clone();
        let (experiment, g) = wrap("check-laws", Some(&group));
        emit(
            &AbelianOutput {
                command: "abelian",
                experiment,
                version: VERSION,
                seed: args.seed,
                group: g,
                result: LawOutput { laws, verdict },
            },
            args.format,
        )?;
        return match failure {
            Some(c) => Err(Failure::Invariant(c)),
            None => Ok(()),
        };
    }
    let spec = args.subgroup.clone().expect("checked above");
    let planted = planted_subgroup(&group, &spec, &mut oracle_rng)?;
    let oracle = AbelianOracle::planted(&group, &planted, &mut oracle_rng)?;
    let out = zqp_solve_abelian(&oracle, &mut rng, args.max_samples)?;
    let show = |s: &AbelianSubgroup| s.elements(&group).iter().map(ToString::to_string).collect::<Vec<_>>();
    let matches = out.subgroup.same_elements(&planted);
    eprintln!(
        "abelian hidden subgroup: G = {group}, |H₀| = {}, recovered {} elements after {} samples{}",
        planted.order(),
        out.subgroup.order(),
        out.samples,
        if matches { "" } else { " (DOES NOT MATCH)" }
    );
    let (experiment, g) = wrap("hidden-subgroup", Some(&group));
    emit(
        &AbelianOutput {
            command: "abelian",
            experiment,
            version: VERSION,
            seed: args.seed,
            group: g,
            result: HiddenOutput {
                subgroup: spec,
                planted: show(&planted),
                recovered: show(&out.subgroup),
                generators: out.subgroup.generators().iter().map(ToString::to_string).collect(),
                samples: out.samples,
                queries: out.queries,
                matches,
            },
        },
        args.format,
    )?;
    if matches {
        Ok(())
    } else {
        Err(Failure::Invariant("recovered subgroup differs from the planted one".into()))
    }
}

fn cmd_oracle(args: OracleArgs) -> Result<(), Failure> {
    let oracle = random_oracle(args.n, &args.subgroup, args.codomain_bits, args.seed)?;
    let json = oracle.to_json()?;
    match &args.out {
        Some(path) => fs::write(path, format!("{json}\n"))?,
        None => println!("{json}"),
    }
    eprintln!(
        "oracle: n={} codomain_bits={} hidden={:?}{}",
        oracle.dimension(),
        oracle.codomain_bits(),
        oracle.hidden_basis().to_bitstrings(),
        args.out.map(|p| format!(" written to {}", p.display())).unwrap_or_default()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Adversary(a) => cmd_adversary(a),
        Command::Abelian(a) => cmd_abelian(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
