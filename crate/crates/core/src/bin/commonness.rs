use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use commonness::certify::{self, ConstantLedger};
use commonness::counting::{self, parse_rational, DefectReport, ExactFunction, Property};
use commonness::exactpoly::Certificate;
use commonness::optimize::{self, SearchConfig};
use commonness::report::{Envelope, RunManifest};
use commonness::{Error, GroupFunction, LinearSystem};

#[derive(Parser)]
#[command(name = "commonness", version, about = "Solution densities, defect search and certified constants for linear systems over F_p^n")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate T(f), T(1-f) and a defect.
    Eval(EvalArgs),
    /// Search for a colouring with negative defect.
    Search(SearchArgs),
    /// Best defect across a grid of pinned means, as tab-separated text.
    ScanAlpha(ScanArgs),
    /// Certify the lemma-level inequalities and the constant chain.
    Verify(OutArgs),
    /// Derive the constant ledger.
    Constants(ConstantsArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// JSON system file, or a preset `phi|a4|a5|ap3|schur` with optional `:p`.
    #[arg(long)]
    system: String,
    /// Field size for presets given without `:p`.
    #[arg(long, default_value_t = 3)]
    p: u64,
}

#[derive(Args)]
struct PropertyArgs {
    #[arg(long, value_enum)]
    property: PropertyName,
    /// Free variables for the Alon property.
    #[arg(long)]
    l: Option<u64>,
    /// Target mean for the prevalence property.
    #[arg(long)]
    alpha: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PropertyName {
    Common,
    Geometric,
    Sidorenko,
    Alon,
    Prevalence,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodName {
    Brute,
    Fourier,
    Both,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    property: PropertyArgs,
    /// Function file (JSON or binary).
    #[arg(long, conflicts_with_all = ["constant", "coset"])]
    function: Option<PathBuf>,
    /// Constant function with this value.
    #[arg(long = "const", conflicts_with = "coset")]
    constant: Option<String>,
    /// Indicator of a coset such as `x1=1` (coordinates 1-based).
    #[arg(long)]
    coset: Option<String>,
    /// Dimension n for `--const` and `--coset`.
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, value_enum, default_value = "fourier")]
    method: MethodName,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchOpts {
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 400)]
    iters: usize,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    property: PropertyArgs,
    #[command(flatten)]
    opts: SearchOpts,
    /// Pin the mean of every iterate.
    #[arg(long)]
    mean: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    property: PropertyArgs,
    #[command(flatten)]
    opts: SearchOpts,
    /// Grid points k/(r+1), k = 1..r.
    #[arg(long, default_value_t = 9)]
    resolution: usize,
    /// Explicit comma-separated means, overriding `--resolution`.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstantsArgs {
    /// Replay the conditions at this l.
    #[arg(long)]
    check_l: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::TooLarge { .. } => 4,
        Error::VerificationFailed(_) | Error::DepthExhausted(_) | Error::NoSuchL(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Search(a) => cmd_search(a),
        Command::ScanAlpha(a) => cmd_scan_alpha(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Constants(a) => cmd_constants(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_system(a: &SystemArgs, manifest: &mut RunManifest) -> Result<LinearSystem, Error> {
    let path = Path::new(&a.system);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        manifest.add_input("system", text.as_bytes());
        return LinearSystem::parse(&text);
    }
    let (name, p) = match a.system.split_once(':') {
        Some((n, p)) => (
            n,
            p.parse()
                .map_err(|_| Error::MalformedDocument(format!("bad field size in `{}`", a.system)))?,
        ),
        None => (a.system.as_str(), a.p),
    };
    manifest.add_input("system", format!("preset:{name}:{p}").as_bytes());
    LinearSystem::preset(name, p)
}

fn parse_float(s: &str) -> Result<f64, Error> {
    parse_rational(s)
        .map(|r| counting::rational_to_f64(&r))
        .ok_or_else(|| Error::MalformedDocument(format!("cannot read `{s}` as a number")))
}

fn property(a: &PropertyArgs) -> Result<Property, Error> {
    let name = match a.property {
        PropertyName::Common => "common",
        PropertyName::Geometric => "geometric",
        PropertyName::Sidorenko => "sidorenko",
        PropertyName::Alon => "alon",
        PropertyName::Prevalence => "prevalence",
    };
    let alpha = a.alpha.as_deref().map(parse_float).transpose()?;
    Property::from_name(name, a.l, alpha)
}

fn emit<T: Serialize>(mut manifest: RunManifest, out: Option<&Path>, result: T) -> Result<(), Error> {
    if let Some(path) = out {
        manifest.add_output(path.display().to_string());
        Envelope::new(manifest, result).write(path)?;
    } else {
        println!("{}", Envelope::new(manifest, result).to_json()?);
    }
    Ok(())
}

/// Exact and floating forms of the function selected on the command line.
fn load_function(
    a: &EvalArgs,
    p: u32,
    manifest: &mut RunManifest,
) -> Result<(GroupFunction, Option<ExactFunction>), Error> {
    if let Some(path) = &a.function {
        let bytes = std::fs::read(path)?;
        manifest.add_input("function", &bytes);
        let f = GroupFunction::parse_bytes(&bytes)?;
        return Ok((f, None));
    }
    if let Some(c) = &a.constant {
        manifest.add_input("function", format!("const:{c}:n={}", a.n).as_bytes());
        let exact = parse_rational(c)
            .ok_or_else(|| Error::MalformedDocument(format!("cannot read `{c}` as a number")))?;
        let f = GroupFunction::constant(p, a.n, counting::rational_to_f64(&exact))?;
        let ef = ExactFunction::constant(p, a.n, exact)?;
        return Ok((f, Some(ef)));
    }
    if let Some(expr) = &a.coset {
        manifest.add_input("function", format!("coset:{expr}:n={}", a.n).as_bytes());
        let bad = || Error::MalformedDocument(format!("coset `{expr}` is not of the form x<i>=<v>"));
        let (lhs, rhs) = expr.split_once('=').ok_or_else(bad)?;
        let coord: usize = lhs.trim().strip_prefix('x').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let value: u32 = rhs.trim().parse().map_err(|_| bad())?;
        if coord == 0 {
            return Err(bad());
        }
        let f = GroupFunction::coset_indicator(p, a.n, coord - 1, value)?;
        return Ok((f, None));
    }
    Err(Error::InvalidConfig("one of --function, --const, --coset is required".into()))
}

#[derive(Serialize)]
struct EvalOutput {
    reports: Vec<DefectReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discrepancy: Option<f64>,
}

fn cmd_eval(a: EvalArgs) -> Result<(), Error> {
    let mut manifest = RunManifest::new("eval");
    let system = load_system(&a.system, &mut manifest)?;
    let prop = property(&a.property)?;
    manifest.add_input("property", prop.to_string().as_bytes());
    let (f, exact) = load_function(&a, system.p(), &mut manifest)?;
    let digest = manifest.inputs.clone();
    let mut reports = Vec::new();
    if a.method != MethodName::Brute {
        reports.push(counting::defect(&system, &f, prop)?);
    }
    if a.method != MethodName::Fourier {
        let ef = match exact {
            Some(ef) => ef,
            None => ExactFunction::from_decimal(&f)?,
        };
        reports.push(counting::defect_brute(&system, &ef, prop)?);
    }
    for r in &mut reports {
        r.digests = digest.clone();
    }
    let discrepancy = (reports.len() == 2).then(|| (reports[0].value - reports[1].value).abs());
    for r in &reports {
        eprintln!("{} {:?}: defect {:.12e}", r.property, r.method, r.value);
    }
    if let Some(d) = discrepancy {
        eprintln!("discrepancy {d:.3e}");
    }
    emit(manifest, a.out.as_deref(), EvalOutput { reports, discrepancy })
}

fn search_config(
    system: &LinearSystem,
    prop: Property,
    opts: &SearchOpts,
    manifest: &mut RunManifest,
) -> SearchConfig {
    manifest.seed = Some(opts.seed);
    manifest.add_input(
        "search",
        format!("{prop}:n={}:restarts={}:iters={}", opts.n, opts.restarts, opts.iters).as_bytes(),
    );
    SearchConfig::new(prop, system.p(), opts.n)
        .with_restarts(opts.restarts)
        .with_seed(opts.seed)
        .with_max_iters(opts.iters)
}

fn cmd_search(a: SearchArgs) -> Result<(), Error> {
    let mut manifest = RunManifest::new("search");
    let system = load_system(&a.system, &mut manifest)?;
    let prop = property(&a.property)?;
    let mut cfg = search_config(&system, prop, &a.opts, &mut manifest);
    if let Some(m) = &a.mean {
        manifest.add_input("mean", m.as_bytes());
        cfg = cfg.with_mean(parse_float(m)?);
    }
    let result = optimize::minimize_defect(&system, &cfg)?;
    eprintln!(
        "best defect {:.6e} (restart {}, violation: {})",
        result.best_defect, result.restart, result.violation
    );
    emit(manifest, a.out.as_deref(), result.to_document())
}

fn cmd_scan_alpha(a: ScanArgs) -> Result<(), Error> {
    let mut manifest = RunManifest::new("scan-alpha");
    let system = load_system(&a.system, &mut manifest)?;
    let prop = property(&a.property)?;
    let cfg = search_config(&system, prop, &a.opts, &mut manifest);
    let grid = match &a.grid {
        Some(points) => {
            manifest.add_input("grid", points.join(",").as_bytes());
            let grid = points.iter().map(|s| parse_float(s)).collect::<Result<Vec<_>, _>>()?;
            if grid.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
                return Err(Error::InvalidConfig("grid means must lie in (0, 1)".into()));
            }
            grid
        }
        None => {
            manifest.add_input("resolution", a.resolution.to_string().as_bytes());
            optimize::alpha_grid(a.resolution)?
        }
    };
    let rows = optimize::scan_alpha(&system, &cfg, &grid)?;
    if let Some(path) = &a.out {
        manifest.add_output(path.display().to_string());
    }
    let mut text = String::new();
    let _ = writeln!(text, "# manifest {}", manifest.digest());
    let _ = writeln!(text, "alpha\tbest_defect\tviolation");
    for r in &rows {
        let _ = writeln!(text, "{:.6}\t{:.9e}\t{}", r.alpha, r.best_defect, r.violation);
    }
    match &a.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            let mut mpath = path.clone().into_os_string();
            mpath.push(".manifest.json");
            std::fs::write(mpath, serde_json::to_string_pretty(&manifest)? + "\n")?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput {
    lemmas: Vec<Certificate>,
    ledger: ConstantLedger,
}

fn cmd_verify(a: OutArgs) -> Result<(), Error> {
    let manifest = RunManifest::new("verify");
    let lemmas = certify::verify_lemma_suite()?;
    let ok = lemmas.iter().filter(|c| c.verified).count();
    for c in &lemmas {
        println!("{} {}", if c.verified { "ok  " } else { "FAIL" }, c.claim);
    }
    println!("{ok}/{} certificates verified", lemmas.len());
    if let Some(c) = lemmas.iter().find(|c| !c.verified) {
        return Err(Error::VerificationFailed(c.claim.clone()));
    }
    let ledger = certify::derive_constants()?;
    let n = ledger.certificates.len();
    println!("constant chain: {n}/{n} certificates verified, l0 = {}", ledger.l0);
    emit_file_only(manifest, a.out.as_deref(), VerifyOutput { lemmas, ledger })
}

fn emit_file_only<T: Serialize>(manifest: RunManifest, out: Option<&Path>, result: T) -> Result<(), Error> {
    match out {
        Some(path) => emit(manifest, Some(path), result),
        None => Ok(()),
    }
}

fn cmd_constants(a: ConstantsArgs) -> Result<(), Error> {
    let mut manifest = RunManifest::new("constants");
    let ledger = certify::derive_constants()?;
    print!("{}", ledger.summary_table());
    if let Some(l) = a.check_l {
        manifest.add_input("check_l", l.to_string().as_bytes());
        let row = ledger.check_l(l);
        println!("check l = {l}");
        for c in &row.conditions {
            println!("  {} slack {:.4e}  {}", if c.holds { "ok  " } else { "FAIL" }, c.slack, c.name);
        }
        match row.first_failure() {
            Some(c) => println!("l = {l} fails condition {}", c.name),
            None => println!("l = {l} satisfies every condition"),
        }
    }
    emit_file_only(manifest, a.out.as_deref(), ledger)
}
