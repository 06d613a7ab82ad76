use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dynmand::error::Error;
use dynmand::family::{marked_hypothesis, predicted_degree, ParamFamily};
use dynmand::heights::{global_height_poly, local_height_nonarch, HeightOptions};
use dynmand::mandelbrot::{
    capacity_estimate, default_g_cap, grid_csv, grid_metadata, grid_pgm, render_grid, RenderSpec, Window,
};
use dynmand::parse::{parse_lampoly, parse_ratpoly, parse_rational};
use dynmand::places::good_places;
use dynmand::prep::{adelic_height, equidist_potential, prep_csv, prep_roots_capped, shared_prep_experiment, Verdict};
use dynmand::{LamPoly, RatPoly};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "dynmand", version, about = "Heights, Green's functions and generalized Mandelbrot sets")]
struct Cli {
    /// JSON file whose keys mirror the long flags (snake_case); flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true, env = "DYNMAND_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    degree_cap: Option<u128>,
    #[arg(long, global = true)]
    iter_cap: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Pgm,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Canonical height of a rational point, globally and per place.
    Height(HeightArgs),
    /// Grid of G_c over a window of the parameter plane.
    Render(RenderArgs),
    /// Logarithmic capacity of M_c from circle means.
    Capacity(CapacityArgs),
    /// Preperiodic parameters up to a relation depth.
    Prep(PrepArgs),
    /// Logarithmic potential of preperiodic parameters at an exterior point.
    Equidist(EquidistArgs),
    /// Adelic height of a rational parameter.
    Adelic(AdelicArgs),
    /// Shared-preperiodic-parameter experiment for two marked points.
    VerifyTheorem(VerifyArgs),
    /// Good and bad places of a family with a marked point.
    GoodPlaces(FamilyArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct FamilyArgs {
    /// Family in normal form, e.g. "x^2+l".
    #[arg(long)]
    family: Option<String>,
    /// Marked point as a polynomial in l.
    #[arg(long)]
    c: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct HeightArgs {
    #[arg(long)]
    family: Option<String>,
    /// A single polynomial in x with rational coefficients, instead of a family.
    #[arg(long)]
    poly: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Restrict to one place: "arch" or a prime.
    #[arg(long)]
    place: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct RenderArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    /// x_min,x_max,y_min,y_max
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    g_cap: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct CapacityArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    /// Comma-separated circle radii.
    #[arg(long)]
    radii: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct PrepArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    #[arg(long)]
    max_n: Option<u32>,
}

#[derive(Args, Debug, Clone)]
struct EquidistArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    #[arg(long)]
    max_n: Option<u32>,
    /// Exterior point "re" or "re,im".
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct AdelicArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct VerifyArgs {
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    l: Option<u32>,
    #[arg(long)]
    max_n: Option<u32>,
    #[arg(long)]
    pair_tol: Option<f64>,
}

/// Values from `--config`; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    family: Option<String>,
    poly: Option<String>,
    c: Option<String>,
    a: Option<String>,
    b: Option<String>,
    lambda: Option<String>,
    x: Option<String>,
    place: Option<String>,
    tol: Option<f64>,
    degree_cap: Option<u128>,
    iter_cap: Option<usize>,
    threads: Option<usize>,
    output: Option<PathBuf>,
    format: Option<Format>,
    window: Option<String>,
    nx: Option<usize>,
    ny: Option<usize>,
    g_cap: Option<f64>,
    radii: Option<String>,
    samples: Option<usize>,
    max_n: Option<u32>,
    w: Option<String>,
    k: Option<u32>,
    l: Option<u32>,
    pair_tol: Option<f64>,
}

/// Failures that are the caller's fault (bad input or a failed
/// mathematical hypothesis) rather than the program's.
#[derive(Debug)]
struct Precondition(Error);

impl std::fmt::Display for Precondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for Precondition {}

fn classify(e: Error) -> anyhow::Error {
    match e {
        Error::DegreeTooSmall(_)
        | Error::DegreeCapExceeded { .. }
        | Error::NotNormalForm(_)
        | Error::InvalidInput(_)
        | Error::HypothesisFailed(_)
        | Error::NonRealScaling(_)
        | Error::OutsideCertifiedDomain(_)
        | Error::Parse { .. } => Precondition(e).into(),
        other => other.into(),
    }
}

trait OrPrecondition<T> {
    fn pre(self) -> anyhow::Result<T>;
}

impl<T> OrPrecondition<T> for dynmand::Result<T> {
    fn pre(self) -> anyhow::Result<T> {
        self.map_err(classify)
    }
}

fn missing(name: &str) -> anyhow::Error {
    Precondition(Error::InvalidInput(format!("missing required option --{}", name.replace('_', "-")))).into()
}

fn required<T>(v: Option<T>, name: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| missing(name))
}

fn parse_floats(s: &str, name: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Precondition(Error::InvalidInput(format!("--{name}: cannot parse '{t}' as a number"))).into())
        })
        .collect()
}

struct Settings {
    cfg: FileConfig,
    tol: f64,
    degree_cap: u128,
    iter_cap: usize,
    output: Option<PathBuf>,
    format: Option<Format>,
}

impl Settings {
    fn family(&self, flag: &Option<String>) -> anyhow::Result<ParamFamily> {
        let src = required(flag.clone().or(self.cfg.family.clone()), "family")?;
        ParamFamily::parse(&src).pre()
    }

    fn lampoly(&self, flag: &Option<String>, from_cfg: &Option<String>, name: &str) -> anyhow::Result<LamPoly> {
        let src = required(flag.clone().or(from_cfg.clone()), name)?;
        parse_lampoly(&src).pre()
    }

    fn check_cap(&self, family: &ParamFamily, c: &LamPoly, n: u32) -> anyhow::Result<()> {
        let predicted = predicted_degree(family, c, n).unwrap_or(u128::MAX);
        if predicted > self.degree_cap {
            return Err(classify(Error::DegreeCapExceeded { predicted, cap: self.degree_cap }));
        }
        Ok(())
    }
}

enum Payload {
    Json(Value),
    Text(String),
    Bytes(Vec<u8>),
}

struct Outcome {
    payload: Payload,
    /// Extra files written next to the main output.
    sidecars: Vec<(PathBuf, String)>,
    exit: u8,
}

impl Outcome {
    fn json(v: Value) -> Self {
        Outcome { payload: Payload::Json(v), sidecars: Vec::new(), exit: 0 }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn run_height(a: &HeightArgs, s: &Settings) -> anyhow::Result<Outcome> {
    let x = parse_rational(&required(a.x.clone().or(s.cfg.x.clone()), "x")?).pre()?;
    let (f, lambda): (RatPoly, Option<String>) = match a.poly.clone().or(s.cfg.poly.clone()) {
        Some(p) => (parse_ratpoly(&p).pre()?, None),
        None => {
            let fam = s.family(&a.family)?;
            let l = parse_rational(&required(a.lambda.clone().or(s.cfg.lambda.clone()), "lambda")?).pre()?;
            (fam.specialize(&l), Some(l.to_string()))
        }
    };
    let place = a.place.clone().or(s.cfg.place.clone());
    let value = match place.as_deref() {
        None => to_json(&global_height_poly(&f, &x, s.tol).pre()?)?,
        Some("arch") | Some("inf") => {
            let opts = HeightOptions { iter_cap: s.iter_cap, ..HeightOptions::default() };
            let xf = Complex64::new(dynmand::poly::rational_to_f64(&x), 0.0);
            to_json(&dynmand::heights::local_height_arch_with(&f.to_cpoly(), xf, s.tol, opts).pre()?)?
        }
        Some(p) => {
            let p: u64 = p
                .parse()
                .ok()
                .filter(|&p| is_prime(p))
                .ok_or_else(|| Precondition(Error::InvalidInput(format!("--place must be 'arch' or a prime, got '{p}'"))))?;
            to_json(&local_height_nonarch(&f, &x, p).pre()?)?
        }
    };
    Ok(Outcome::json(json!({
        "polynomial": f.to_string(),
        "lambda": lambda,
        "x": x.to_string(),
        "height": value,
    })))
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|i| i * i <= p).all(|i| p % i != 0)
}

fn run_render(a: &RenderArgs, s: &Settings) -> anyhow::Result<Outcome> {
    let fam = s.family(&a.fam.family)?;
    let c = s.lampoly(&a.fam.c, &s.cfg.c, "c")?;
    let window = match a.window.clone().or(s.cfg.window.clone()) {
        None => Window::CLASSICAL,
        Some(w) => {
            let v = parse_floats(&w, "window")?;
            if v.len() != 4 {
                return Err(missing("window (four comma-separated numbers)"));
            }
            Window::new(v[0], v[1], v[2], v[3]).pre()?
        }
    };
    let spec = RenderSpec {
        window,
        nx: a.nx.or(s.cfg.nx).unwrap_or(200),
        ny: a.ny.or(s.cfg.ny).unwrap_or(200),
        tol: s.tol,
        opts: HeightOptions { iter_cap: s.iter_cap, ..HeightOptions::default() },
    };
    let grid = render_grid(&fam, &c, &spec).pre()?;
    let g_cap = a.g_cap.or(s.cfg.g_cap).unwrap_or_else(|| default_g_cap(&grid));
    let meta = grid_metadata(&grid, g_cap);
    let meta_text = serde_json::to_string_pretty(&meta)? + "\n";
    let sidecar = |out: &Option<PathBuf>| {
        out.as_ref().map(|p| vec![(sidecar_path(p), meta_text.clone())]).unwrap_or_default()
    };
    Ok(match s.format.unwrap_or(Format::Json) {
        Format::Json => Outcome::json(json!({ "metadata": to_json(&meta)?, "grid": to_json(&grid)? })),
        Format::Csv => Outcome { payload: Payload::Text(grid_csv(&grid)), sidecars: sidecar(&s.output), exit: 0 },
        Format::Pgm => {
            if s.output.is_none() {
                return Err(missing("output (required for pgm)"));
            }
            Outcome { payload: Payload::Bytes(grid_pgm(&grid, g_cap)), sidecars: sidecar(&s.output), exit: 0 }
        }
    })
}

fn sidecar_path(p: &Path) -> PathBuf {
    let mut name = p.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".json");
    p.with_file_name(name)
}

fn run_capacity(a: &CapacityArgs, s: &Settings) -> anyhow::Result<Outcome> {
    let fam = s.family(&a.fam.family)?;
    let c = s.lampoly(&a.fam.c, &s.cfg.c, "c")?;
    let radii = parse_floats(&a.radii.clone().or(s.cfg.radii.clone()).unwrap_or_else(|| "1e3,1e4,1e5".into()), "radii")?;
    let samples = a.samples.or(s.cfg.samples).unwrap_or(64);
    let fit = capacity_estimate(&fam, &c, &radii, samples, s.tol).pre()?;
    Ok(Outcome::json(to_json(&fit)?))
}

fn run_prep(a: &PrepArgs, s: &Settings) -> anyhow::Result<Outcome> {
    let fam = s.family(&a.fam.family)?;
    let c = s.lampoly(&a.fam.c, &s.cfg.c, "c")?;
    let max_n = required(a.max_n.or(s.cfg.max_n), "max_n")?;
    marked_hypothesis(&fam, &c).pre()?;
    s.check_cap(&fam, &c, max_n)?;
    let roots = prep_roots_capped(&fam, &c, max_n, s.degree_cap).pre()?;
    Ok(match s.format.unwrap_or(Format::Csv) {
        Format::Csv => Outcome { payload: Payload::Text(prep_csv(&roots.solutions)), sidecars: Vec::new(), exit: 0 },
        _ => Outcome::json(to_json(&roots)?),
    })
}

fn run_equidist(a: &EquidistArgs, s: &Settings) -> anyhow::Result<Outcome> {
    let fam = s.family(&a.fam.family)?;
    let c = s.lampoly(&a.fam.c, &s.cfg.c, "c")?;
    let max_n = required(a.max_n.or(s.cfg.max_n), "max_n")?;
    marked_hypothesis(&fam, &c).pre()?;
    s.check_cap(&fam, &c, max_n)?;
    let w = parse_floats(&required(a.w.clone().or(s.cfg.w.clone()), "w")?, "w")?;
    let w = Complex64::new(w[0], w.get(1).copied().unwrap_or(0.0));
    Ok(Outcome::json(to_json(&equidist_potential(&fam, &c, max_n, w, s.tol).pre()?)?))
}

fn run_adelic(a: &AdelicArgs, s: &Settings) -> anyhow::Result<Outcome> {
    let fam = s.family(&a.fam.family)?;
    let c = s.lampoly(&a.fam.c, &s.cfg.c, "c")?;
    let lambda = parse_rational(&required(a.lambda.clone().or(s.cfg.lambda.clone()), "lambda")?).pre()?;
    Ok(Outcome::json(to_json(&adelic_height(&fam, &c, &lambda, s.tol).pre()?)?))
}

fn run_verify(a: &VerifyArgs, s: &Settings) -> anyhow::Result<Outcome> {
    let fam = s.family(&a.family)?;
    let pa = s.lampoly(&a.a, &s.cfg.a, "a")?;
    let pb = s.lampoly(&a.b, &s.cfg.b, "b")?;
    let k = a.k.or(s.cfg.k).unwrap_or(0);
    let l = a.l.or(s.cfg.l).unwrap_or(0);
    let max_n = required(a.max_n.or(s.cfg.max_n), "max_n")?;
    let pair_tol = a.pair_tol.or(s.cfg.pair_tol).unwrap_or(1e-6);
    for p in [&pa, &pb] {
        if marked_hypothesis(&fam, p).is_ok() {
            s.check_cap(&fam, p, max_n.max(k).max(l))?;
        }
    }
    let rep = shared_prep_experiment(&fam, &pa, &pb, k, l, max_n, pair_tol).pre()?;
    let sets_equal = !rep.intersection.is_empty() && rep.intersection.iter().all(|lv| lv.sets_equal);
    let exit = if rep.verdict == Verdict::HypothesisFailed { 2 } else { 0 };
    let mut v = to_json(&rep)?;
    v["sets_equal"] = json!(sets_equal);
    Ok(Outcome { payload: Payload::Json(v), sidecars: Vec::new(), exit })
}

fn run_good_places(a: &FamilyArgs, s: &Settings) -> anyhow::Result<Outcome> {
    let fam = s.family(&a.family)?;
    let c = s.lampoly(&a.c, &s.cfg.c, "c")?;
    let gp = good_places(&fam, &c);
    let mut v = to_json(&gp)?;
    v["bad_primes"] = json!(gp.bad_primes());
    Ok(Outcome::json(v))
}

fn emit(outcome: &Outcome, output: &Option<PathBuf>) -> anyhow::Result<()> {
    let bytes = match &outcome.payload {
        Payload::Json(v) => (serde_json::to_string_pretty(v)? + "\n").into_bytes(),
        Payload::Text(t) => t.clone().into_bytes(),
        Payload::Bytes(b) => b.clone(),
    };
    match output {
        Some(p) => fs::write(p, &bytes).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    for (p, text) in &outcome.sidecars {
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let cfg: FileConfig = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| Precondition(Error::InvalidInput(format!("config {}: {e}", p.display()))))?
        }
        None => FileConfig::default(),
    };
    let threads = cli.threads.or(cfg.threads);
    if let Some(n) = threads {
        if n == 0 {
            return Err(Precondition(Error::InvalidInput("--threads must be positive".into())).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| anyhow!(e))?;
    }
    let tol = cli.tol.or(cfg.tol).unwrap_or(1e-10);
    if !(tol > 0.0) {
        return Err(Precondition(Error::InvalidInput(format!("--tol must be positive, got {tol}"))).into());
    }
    let settings = Settings {
        tol,
        degree_cap: cli.degree_cap.or(cfg.degree_cap).unwrap_or(dynmand::family::DEFAULT_DEGREE_CAP),
        iter_cap: cli.iter_cap.or(cfg.iter_cap).unwrap_or(dynmand::heights::DEFAULT_ITER_CAP),
        output: cli.output.clone().or(cfg.output.clone()),
        format: cli.format.or(cfg.format),
        cfg,
    };
    if settings.degree_cap == 0 || settings.iter_cap == 0 {
        return Err(Precondition(Error::InvalidInput("caps must be positive".into())).into());
    }
    let outcome = match &cli.command {
        Command::Height(a) => run_height(a, &settings),
        Command::Render(a) => run_render(a, &settings),
        Command::Capacity(a) => run_capacity(a, &settings),
        Command::Prep(a) => run_prep(a, &settings),
        Command::Equidist(a) => run_equidist(a, &settings),
        Command::Adelic(a) => run_adelic(a, &settings),
        Command::VerifyTheorem(a) => run_verify(a, &settings),
        Command::GoodPlaces(a) => run_good_places(a, &settings),
    }?;
    emit(&outcome, &settings.output)?;
    Ok(outcome.exit)
}

fn error_json(kind: &str, e: &anyhow::Error) -> String {
    let mut detail = json!({ "kind": kind, "message": format!("{e:#}") });
    if let Some(Precondition(Error::Parse { pos, .. })) = e.downcast_ref::<Precondition>() {
        detail["position"] = json!(pos);
    }
    serde_json::to_string_pretty(&json!({ "error": detail })).unwrap_or_default()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) if e.downcast_ref::<Precondition>().is_some() => {
            println!("{}", error_json("precondition", &e));
            eprintln!("dynmand: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            println!("{}", error_json("internal", &e));
            eprintln!("dynmand: {e:#}");
            ExitCode::from(1)
        }
    }
}
