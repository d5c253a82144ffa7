mod problem;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qesforge::catalog::{self, EntryReport, Fixture};
use qesforge::potential::{partial_fractions, FPiece};
use qesforge::susy::{plus_functions, u_function, u_function_two_state, TuneReport};
use qesforge::verify::{linspace, schrodinger_residual_symbolic};
use qesforge::{
    build_potential, chain_from_states, classify_u, master_residual, riccati_residual, solve, susy_from_u,
    tune_constant, Ansatz, Branch, FrameDescriptor, QesError, RationalFn, Solution, SusyFromU, SusyOptions,
    UClassification, UExpr,
};
use rayon::prelude::*;
use serde::Serialize;

use problem::ProblemSpec;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;
const EXIT_COLLISION: u8 = 5;
const SCREEN_SYMBOLIC: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "qesforge", version, about = "Quasi-exactly solvable potentials: build, solve, verify, SUSY chains")]
struct Cli {
    /// Worker threads for the solver (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the potential of a fully pinned ground ansatz.
    Build {
        problem: PathBuf,
        /// Sample table with columns x, V, psi1, psi2, ...
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve the constraint systems of a problem file.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        starts: Option<usize>,
        /// Residual norm accepted as a root.
        #[arg(long)]
        tol: Option<f64>,
        /// Emit every cluster, verified or not.
        #[arg(long)]
        raw: bool,
    },
    /// Verify catalog entries, fixture files or solve output.
    Verify {
        #[arg(required = true)]
        targets: Vec<String>,
    },
    /// Superpotential chain of an entry, or potentials from a U expression.
    Susy(SusyArgs),
    /// Built-in catalog (or the fixtures in $QESFORGE_FIXTURES).
    Catalog {
        #[command(subcommand)]
        cmd: CatalogCmd,
    },
}

#[derive(Args)]
struct SusyArgs {
    /// Catalog id or fixture file.
    entry: Option<String>,
    /// Rational expression in x, e.g. "c*x^2".
    #[arg(long, conflicts_with = "entry")]
    u: Option<String>,
    /// Two or three energies, lowest first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    energies: Vec<f64>,
    /// Constant values, `name=value`; a single unset constant is tuned.
    #[arg(long = "set", value_parser = parse_assignment)]
    set: Vec<(String, f64)>,
    /// Starting value for tuning.
    #[arg(long, default_value_t = 0.5)]
    guess: f64,
    #[arg(long, value_enum, default_value_t = BranchArg::Both)]
    branch: BranchArg,
    /// Sample grid `a,b,n`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Vec<f64>,
    /// Report branch collisions instead of failing.
    #[arg(long)]
    allow_collision: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Plus,
    Minus,
    Both,
}

#[derive(Subcommand)]
enum CatalogCmd {
    List,
    Show { id: String },
    Verify {
        #[arg(long)]
        all: bool,
        ids: Vec<String>,
    },
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Failure {
        Failure { code, msg: msg.into() }
    }
}

impl From<QesError> for Failure {
    fn from(e: QesError) -> Failure {
        let code = match e {
            QesError::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
            QesError::BranchCollision { .. } => EXIT_COLLISION,
            _ => EXIT_VALIDATION,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(EXIT_VALIDATION, format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// A closed pipe (e.g. `| head`) is not an error worth a panic.
fn stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: stdout: {e}");
        }
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(1, e.to_string()))?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| io_err(p, e)),
        None => {
            stdout(&(text + "\n"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    let out = cli.out.as_deref();
    let result = match cli.cmd {
        Command::Build { problem, csv } => cmd_build(&problem, csv.as_deref(), out),
        Command::Solve {
            problem,
            seed,
            starts,
            tol,
            raw,
        } => cmd_solve(&problem, seed, starts, tol, raw, out),
        Command::Verify { targets } => cmd_verify(&targets, out),
        Command::Susy(args) => cmd_susy(&args, out),
        Command::Catalog { cmd } => cmd_catalog(cmd, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Serialize)]
struct StateLine {
    state: Ansatz,
    symbolic_residual: f64,
}

#[derive(Serialize)]
struct BuildOutput {
    id: String,
    frame: FrameDescriptor,
    potential: RationalFn,
    partial_fractions: Vec<FPiece>,
    states: Vec<StateLine>,
}

fn cmd_build(path: &Path, csv: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let spec = ProblemSpec::parse(&read(path)?)?;
    let (frame, ground) = spec.ground_state(&BTreeMap::new())?;
    let pot = build_potential(&frame, &ground)?;
    let mut states = vec![ground];
    states.extend(spec.states.iter().cloned());
    let lines = states
        .iter()
        .map(|s| {
            Ok(StateLine {
                state: s.clone(),
                symbolic_residual: schrodinger_residual_symbolic(&frame, &pot.v, s)?,
            })
        })
        .collect::<Result<Vec<_>, QesError>>()?;
    if let Some(p) = csv {
        let v = pot.sampler();
        let psis = states.iter().map(|s| frame.psi(s)).collect::<Result<Vec<_>, _>>()?;
        let mut text = String::from("x,V_re,V_im");
        for k in 1..=psis.len() {
            let _ = write!(text, ",psi{k}_re,psi{k}_im");
        }
        text.push('\n');
        for x in linspace(spec.interval[0], spec.interval[1], spec.plot_points) {
            let vx = v(x);
            let _ = write!(text, "{x},{},{}", vx.re, vx.im);
            for psi in &psis {
                let z = psi(x);
                let _ = write!(text, ",{},{}", z.re, z.im);
            }
            text.push('\n');
        }
        std::fs::write(p, text).map_err(|e| io_err(p, e))?;
    }
    emit(
        &BuildOutput {
            id: spec.id(),
            frame: frame.descriptor(),
            partial_fractions: partial_fractions(&pot)?,
            potential: pot.v,
            states: lines,
        },
        out,
    )
}

#[derive(Serialize)]
struct SolvedLine {
    index: usize,
    assignment: BTreeMap<String, Complex64>,
    fixed: BTreeMap<String, Complex64>,
    residual_norm: f64,
    null_dimension: usize,
    multiplicity_hint: usize,
    verified: bool,
    failures: Vec<String>,
    fixture: Option<Fixture>,
}

#[derive(Serialize)]
struct SolveOutput {
    id: String,
    seed: u64,
    starts: usize,
    systems: Vec<qesforge::constraints::SystemDescriptor>,
    clusters: usize,
    rejected: usize,
    solutions: Vec<SolvedLine>,
}

fn check_solution(spec: &ProblemSpec, index: usize, sol: &Solution) -> SolvedLine {
    let id = format!("{}-{index}", spec.id());
    let built = spec.solution_states(sol).and_then(|(frame, states)| {
        let description = spec
            .description
            .clone()
            .unwrap_or_else(|| format!("solution {index} of {}", spec.id()));
        spec.fixture(id, description, &frame, states)
    });
    let (fixture, failures) = match built {
        Ok(f) => {
            let failures = match screen(&f) {
                Some(reason) => vec![reason],
                None => match catalog::verify_fixture(f.clone()) {
                    Ok(r) => r.failures,
                    Err(e) => vec![e.to_string()],
                },
            };
            (Some(f), failures)
        }
        Err(e) => (None, vec![e.to_string()]),
    };
    SolvedLine {
        index,
        assignment: sol.assignment.clone(),
        fixed: sol.fixed.clone(),
        residual_norm: sol.residual_norm,
        null_dimension: sol.null_dimension,
        multiplicity_hint: sol.multiplicity_hint,
        verified: failures.is_empty(),
        failures,
        fixture,
    }
}

/// Cheap necessary conditions checked before the full (quadrature based)
/// verification, which is slow on singular or growing states.
fn screen(f: &Fixture) -> Option<String> {
    let (entry, _) = match f.clone().into_entry() {
        Ok(e) => e,
        Err(e) => return Some(e.to_string()),
    };
    let (a, b) = entry.interval;
    for (k, st) in entry.states.iter().enumerate() {
        match schrodinger_residual_symbolic(&entry.frame, &entry.potential.v, st) {
            Ok(r) if r < SCREEN_SYMBOLIC => {}
            Ok(r) => return Some(format!("state {k}: symbolic residual {r:.3e}")),
            Err(e) => return Some(format!("state {k}: {e}")),
        }
    }
    if let Some(p) = entry
        .potential
        .v
        .poles()
        .iter()
        .find(|p| p.center.im.abs() < 1e-8 && p.center.re > a && p.center.re < b)
    {
        return Some(format!("potential has a real pole at x = {:.6}", p.center.re));
    }
    for (k, st) in entry.states.iter().enumerate() {
        let psi = match entry.frame.psi(st) {
            Ok(p) => p,
            Err(e) => return Some(format!("state {k}: {e}")),
        };
        let decays = [(b, 2.0 * b), (a, 2.0 * a)]
            .iter()
            .all(|&(near, far)| psi(far).norm() < psi(near).norm() || psi(far).norm() == 0.0);
        if !decays {
            return Some(format!("state {k}: not normalizable"));
        }
    }
    None
}

fn cmd_solve(
    path: &Path,
    seed: Option<u64>,
    starts: Option<usize>,
    tol: Option<f64>,
    raw: bool,
    out: Option<&Path>,
) -> CliResult<()> {
    let spec = ProblemSpec::parse(&read(path)?)?;
    let systems = spec.systems()?;
    let mut opts = spec.solver.clone();
    if let Some(s) = seed {
        opts.seed = s;
    }
    if let Some(n) = starts {
        opts.starts = n;
    }
    if let Some(t) = tol {
        opts.tol_residual = t;
    }
    let sols = solve(&systems, &opts)?;
    let lines: Vec<SolvedLine> = sols
        .par_iter()
        .enumerate()
        .map(|(i, s)| check_solution(&spec, i, s))
        .collect();
    let clusters = lines.len();
    let kept: Vec<SolvedLine> = lines.into_iter().filter(|l| raw || l.verified).collect();
    let output = SolveOutput {
        id: spec.id(),
        seed: opts.seed,
        starts: opts.starts,
        systems: systems.iter().map(|s| s.descriptor()).collect(),
        clusters,
        rejected: clusters - kept.len(),
        solutions: kept,
    };
    eprintln!(
        "{} clusters, {} verified{}",
        clusters,
        clusters - output.rejected,
        if raw { " (raw output)" } else { "" }
    );
    let none_verified = !raw && output.solutions.is_empty();
    emit(&output, out)?;
    if none_verified {
        return Err(Failure::new(
            EXIT_VERIFICATION,
            format!("none of the {clusters} clusters passed verification (use --raw to see them)"),
        ));
    }
    Ok(())
}

fn fixtures_dir() -> Option<PathBuf> {
    std::env::var_os("QESFORGE_FIXTURES").map(PathBuf::from)
}

/// A catalog entry as a fixture, from $QESFORGE_FIXTURES when set.
fn catalog_fixture(id: &str) -> CliResult<Fixture> {
    match fixtures_dir() {
        Some(dir) => {
            let path = dir.join(format!("{id}.json"));
            if !path.exists() {
                return Err(QesError::UnknownEntry(id.to_string()).into());
            }
            Ok(catalog::load_file(&path)?)
        }
        None => Ok(catalog::get(id)?.fixture()),
    }
}

/// Fixtures named by a target: a catalog id, a fixture file or solve output.
fn resolve_target(target: &str) -> CliResult<Vec<Fixture>> {
    let path = Path::new(target);
    if !path.is_file() {
        return Ok(vec![catalog_fixture(target)?]);
    }
    let value: serde_json::Value = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::new(EXIT_VALIDATION, format!("{target}: {e}")))?;
    let bad = |e: serde_json::Error| Failure::new(EXIT_VALIDATION, format!("{target}: {e}"));
    match value.get("solutions") {
        Some(list) => {
            let list = list.as_array().ok_or_else(|| Failure::new(EXIT_VALIDATION, "`solutions` is not a list"))?;
            list.iter()
                .map(|s| {
                    let f = s
                        .get("fixture")
                        .filter(|f| !f.is_null())
                        .ok_or_else(|| Failure::new(EXIT_VERIFICATION, format!("{target}: a solution has no fixture")))?;
                    serde_json::from_value(f.clone()).map_err(bad)
                })
                .collect()
        }
        None => Ok(vec![serde_json::from_value(value).map_err(bad)?]),
    }
}

fn table(reports: &[EntryReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<22} {:>5} {:>11} {:>11} {:>24} {:>8}",
        "entry", "state", "symbolic", "grid", "energy estimate", "norm"
    );
    for r in reports {
        for st in &r.states {
            let e = st.report.energy_estimate.quotient;
            let _ = writeln!(
                s,
                "{:<22} {:>5} {:>11.3e} {:>11.3e} {:>24} {:>8}",
                r.id,
                st.index,
                st.report.symbolic_residual_max,
                st.report.grid_residual_max,
                format!("{:.8}{:+.2e}i", e.re, e.im),
                if st.report.normalizable { "yes" } else { "no" },
            );
        }
        if let Some(d) = r.pt_deviation {
            let _ = writeln!(s, "{:<22} PT deviation {d:.3e}", r.id);
        }
        let verdict = if r.passed { "PASS".to_string() } else { format!("FAIL: {}", r.failures.join("; ")) };
        let _ = writeln!(s, "{:<22} {verdict}", r.id);
    }
    s
}

fn report_all(fixtures: Vec<Fixture>, out: Option<&Path>) -> CliResult<()> {
    let reports = fixtures
        .into_iter()
        .map(catalog::verify_fixture)
        .collect::<Result<Vec<_>, _>>()?;
    stdout(&table(&reports));
    if let Some(p) = out {
        emit(&reports, Some(p))?;
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.id.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_VERIFICATION, format!("verification failed: {}", failed.join(", "))))
    }
}

fn cmd_verify(targets: &[String], out: Option<&Path>) -> CliResult<()> {
    let mut fixtures = Vec::new();
    for t in targets {
        fixtures.extend(resolve_target(t)?);
    }
    report_all(fixtures, out)
}

fn cmd_catalog(cmd: CatalogCmd, out: Option<&Path>) -> CliResult<()> {
    let all_ids = || -> CliResult<Vec<String>> {
        match fixtures_dir() {
            Some(dir) => Ok(catalog::load_dir(&dir)?.into_iter().map(|f| f.id).collect()),
            None => Ok(catalog::list().into_iter().map(str::to_string).collect()),
        }
    };
    match cmd {
        CatalogCmd::List => {
            let mut rows = BTreeMap::new();
            for id in all_ids()? {
                let f = catalog_fixture(&id)?;
                stdout(&format!("{:<16} {}\n", f.id, f.description));
                rows.insert(f.id, f.description);
            }
            if let Some(p) = out {
                emit(&rows, Some(p))?;
            }
            Ok(())
        }
        CatalogCmd::Show { id } => emit(&catalog_fixture(&id)?, out),
        CatalogCmd::Verify { all, ids } => {
            let ids = match (all, ids.is_empty()) {
                (true, _) => all_ids()?,
                (false, false) => ids,
                (false, true) => return Err(Failure::new(EXIT_VALIDATION, "name entries or pass --all")),
            };
            let fixtures = ids.iter().map(|id| catalog_fixture(id)).collect::<CliResult<Vec<_>>>()?;
            report_all(fixtures, out)
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
enum Classification {
    Classified(UClassification),
    ComplexValued { x: f64, imag: f64 },
}

#[derive(Serialize)]
struct ChainOutput {
    id: String,
    energies: Vec<Complex64>,
    superpotentials: Vec<RationalFn>,
    riccati_residuals: Vec<f64>,
    u: RationalFn,
    master_residual: Option<f64>,
    classification: Classification,
    admissible: bool,
}

fn cmd_susy(args: &SusyArgs, out: Option<&Path>) -> CliResult<()> {
    match (&args.entry, &args.u) {
        (Some(entry), None) => susy_chain(entry, out),
        (None, Some(u)) => susy_u(args, u, out),
        _ => Err(Failure::new(EXIT_VALIDATION, "give an entry or --u")),
    }
}

fn susy_chain(entry: &str, out: Option<&Path>) -> CliResult<()> {
    let fixture = resolve_target(entry)?
        .into_iter()
        .next()
        .ok_or_else(|| Failure::new(EXIT_VALIDATION, "no entry"))?;
    let (entry, _) = fixture.into_entry()?;
    let states: Vec<Ansatz> = entry.states.iter().take(3).cloned().collect();
    if states.len() < 2 {
        return Err(Failure::new(EXIT_VALIDATION, "a chain needs at least two states"));
    }
    let (a, b) = entry.interval;
    let grid = linspace(a, b, 62);
    let chain = chain_from_states(&entry.frame, &states)?;
    let riccati = chain
        .windows(2)
        .zip(states.windows(2))
        .map(|(w, s)| riccati_residual(&w[0], &w[1], s[0].energy, s[1].energy, &grid))
        .collect();
    let plus = plus_functions(&chain)?;
    let (u, master) = if plus.len() >= 2 {
        let m = master_residual(&plus[0], &plus[1], states[1].energy - states[0].energy, states[2].energy - states[0].energy, &grid);
        (u_function(&plus[0], &plus[1])?, Some(m))
    } else {
        (u_function_two_state(&plus[0])?, None)
    };
    let classification = match classify_u(&u, entry.interval) {
        Ok(c) => Classification::Classified(c),
        Err(QesError::ComplexValuedOnInterval { x, imag }) => Classification::ComplexValued { x, imag },
        Err(e) => return Err(e.into()),
    };
    let admissible = matches!(&classification, Classification::Classified(c) if c.admissible);
    emit(
        &ChainOutput {
            id: entry.id,
            energies: states.iter().map(|s| s.energy).collect(),
            superpotentials: chain.into_iter().map(|w| w.w).collect(),
            riccati_residuals: riccati,
            u: u.u,
            master_residual: master,
            classification,
            admissible,
        },
        out,
    )
}

#[derive(Serialize)]
struct BranchOutput {
    branch: Branch,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<SusyFromU>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct UOutput {
    u: String,
    constants: BTreeMap<String, f64>,
    tuning: Option<TuneReport>,
    energies: Vec<f64>,
    branches: Vec<BranchOutput>,
}

fn susy_u(args: &SusyArgs, src: &str, out: Option<&Path>) -> CliResult<()> {
    let expr = UExpr::parse(src)?;
    let levels = args.energies.len();
    if !(levels == 2 || levels == 3) {
        return Err(Failure::new(EXIT_VALIDATION, "--energies takes two or three values"));
    }
    let e: Vec<f64> = args.energies.iter().map(|x| x - args.energies[0]).collect();
    let (e1, e2) = (e[1], if levels == 3 { e[2] } else { 0.0 });
    let grid = match args.grid.as_slice() {
        [] => linspace(-2.95, 2.95, 60),
        [a, b, n] if a < b && *n >= 2.0 && n.fract() == 0.0 => linspace(*a, *b, *n as usize),
        _ => return Err(Failure::new(EXIT_VALIDATION, "--grid takes a,b,n with a < b and integer n >= 2")),
    };
    let mut constants: BTreeMap<String, f64> = args.set.iter().cloned().collect();
    let free: Vec<String> = expr.constants().into_iter().filter(|c| !constants.contains_key(c)).collect();
    let to_map = |k: &BTreeMap<String, f64>| -> BTreeMap<String, Complex64> {
        k.iter().map(|(n, v)| (n.clone(), Complex64::new(*v, 0.0))).collect()
    };
    let tuning = match free.as_slice() {
        [] => None,
        [name] if levels == 3 => {
            let family = |v: f64| {
                let mut k = to_map(&constants);
                k.insert(name.clone(), Complex64::new(v, 0.0));
                expr.to_rational(&k)
            };
            let report = tune_constant(family, e1, e2, args.guess)?;
            constants.insert(name.clone(), report.value);
            Some(report)
        }
        _ => {
            return Err(Failure::new(
                EXIT_VALIDATION,
                format!("set the constants {free:?} with --set (only one can be tuned, with three energies)"),
            ))
        }
    };
    let u = expr.to_rational(&to_map(&constants))?;
    let branches = match args.branch {
        BranchArg::Plus => vec![Branch::Plus],
        BranchArg::Minus => vec![Branch::Minus],
        BranchArg::Both => vec![Branch::Plus, Branch::Minus],
    };
    let mut outputs = Vec::new();
    for branch in branches {
        let opts = SusyOptions {
            branch,
            levels,
            allow_collision: args.allow_collision,
        };
        let r = susy_from_u(&u, Complex64::new(e1, 0.0), Complex64::new(e2, 0.0), &grid, &opts);
        outputs.push(match r {
            Ok(r) => BranchOutput { branch, result: Some(r), error: None },
            Err(e @ QesError::BranchCollision { .. }) => return Err(e.into()),
            Err(e) => BranchOutput { branch, result: None, error: Some(e.to_string()) },
        });
    }
    emit(
        &UOutput {
            u: src.to_string(),
            constants,
            tuning,
            energies: args.energies.clone(),
            branches: outputs,
        },
        out,
    )
}
