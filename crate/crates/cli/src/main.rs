//! `starpath` command-line runner. One experiment per invocation.
//!
//! Exit codes: 0 pass, 1 tolerance violation, 2 configuration error,
//! 3 numerical failure.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};
use starpath::fock;
use starpath::path_integral::{compare_all, convergence_study, AmplitudeReport, PathError};
use starpath::quadrature::ComplexPlaneRule;
use starpath::quasiprob::{QuasiError, QuasiTransform, SOrder};
use starpath::selftest::{run_selftest, SelftestConfig};

use config::{complex, ExperimentConfig};

#[derive(Parser)]
#[command(name = "starpath", version, about = "Star-product path integral experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Compare the amplitude across the requested routes.
    Amplitude,
    /// Sliced amplitude error against the slice count.
    Convergence,
    /// Quasi-probability grid of a density operator.
    Qdist,
    /// Star product and commutator of two symbols.
    StarProduct,
    /// Run the acceptance suite.
    Selftest,
}

#[derive(Args, Default)]
struct Flags {
    /// JSON config; its keys override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Hamiltonian records as JSON, e.g. '[[1,1,1,0]]'.
    #[arg(long, global = true)]
    hamiltonian: Option<String>,
    /// Initial label as `re,im`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha_i: Option<String>,
    /// Final label as `re,im`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha_f: Option<String>,
    #[arg(short = 'T', long = "time", global = true, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Comma-separated subset of star, oracle, sliced, optical.
    #[arg(long, global = true, value_delimiter = ',')]
    routes: Option<Vec<String>>,
    /// Fock truncation.
    #[arg(short = 'D', long = "dim", global = true)]
    dim: Option<usize>,
    /// Maximum star-series order.
    #[arg(short = 'K', long = "max-order", global = true)]
    max_order: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    agreement_tol: Option<f64>,
    /// Quadrature nodes per axis for the sliced route.
    #[arg(long, global = true)]
    rule_nodes: Option<usize>,
    /// Quadrature nodes per axis for `qdist`.
    #[arg(long, global = true)]
    quasi_rule_nodes: Option<usize>,
    /// Comma-separated slice counts.
    #[arg(long, global = true, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Ordering parameter for `qdist`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    s: Option<f64>,
    /// State as JSON, e.g. '{"kind":"thermal","mean_number":0.5}'.
    #[arg(long, global = true)]
    state: Option<String>,
    /// Grid window as `lo,hi`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    /// Left factor records as JSON.
    #[arg(long, global = true)]
    left: Option<String>,
    /// Right factor records as JSON.
    #[arg(long, global = true)]
    right: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<PathError> for Failure {
    fn from(e: PathError) -> Self {
        match e {
            PathError::InvalidConfig(_) => Failure::Config(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<QuasiError> for Failure {
    fn from(e: QuasiError) -> Self {
        match e {
            QuasiError::InvalidOrder(_) => Failure::Config(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn pair(name: &str, text: &str) -> Result<Value, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let parsed: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
    match parsed {
        Ok(v) if v.len() == 2 => Ok(json!([v[0], v[1]])),
        _ => Err(Failure::Config(format!("--{name} expects `a,b`, got {text:?}"))),
    }
}

fn json_flag(name: &str, text: &str) -> Result<Value, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Config(format!("--{name}: {e}")))
}

/// Defaults, then flags, then the config file.
fn resolve(flags: &Flags) -> Result<ExperimentConfig, Failure> {
    let mut map = Map::new();
    let mut set = |key: &str, v: Value| {
        map.insert(key.to_string(), v);
    };
    if let Some(v) = &flags.hamiltonian {
        set("hamiltonian", json_flag("hamiltonian", v)?);
    }
    if let Some(v) = &flags.alpha_i {
        set("alpha_i", pair("alpha-i", v)?);
    }
    if let Some(v) = &flags.alpha_f {
        set("alpha_f", pair("alpha-f", v)?);
    }
    if let Some(v) = flags.t {
        set("T", json!(v));
    }
    if let Some(v) = &flags.routes {
        set("routes", json!(v));
    }
    if let Some(v) = flags.dim {
        set("D", json!(v));
    }
    if let Some(v) = flags.max_order {
        set("K", json!(v));
    }
    if let Some(v) = flags.tol {
        set("tol", json!(v));
    }
    if let Some(v) = flags.agreement_tol {
        set("agreement_tol", json!(v));
    }
    if let Some(v) = flags.rule_nodes {
        set("rule_nodes", json!(v));
    }
    if let Some(v) = flags.quasi_rule_nodes {
        set("quasi_rule_nodes", json!(v));
    }
    if let Some(v) = &flags.n_list {
        set("n_list", json!(v));
    }
    if let Some(v) = flags.s {
        set("s", json!(v));
    }
    if let Some(v) = &flags.state {
        set("state", json_flag("state", v)?);
    }
    if let Some(v) = &flags.window {
        set("window", pair("window", v)?);
    }
    if let Some(v) = flags.grid_points {
        set("grid_points", json!(v));
    }
    if let Some(v) = &flags.left {
        set("left", json_flag("left", v)?);
    }
    if let Some(v) = &flags.right {
        set("right", json_flag("right", v)?);
    }
    if let Some(v) = flags.seed {
        set("seed", json!(v));
    }
    if let Some(v) = &flags.output_dir {
        set("output_dir", json!(v));
    }
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let Value::Object(file) = file else {
            return Err(Failure::Config(format!("{}: expected a JSON object", path.display())));
        };
        map.extend(file);
    }
    let cfg: ExperimentConfig =
        serde_json::from_value(Value::Object(map)).map_err(|e| Failure::Config(e.to_string()))?;
    cfg.validate().map_err(Failure::Config)?;
    Ok(cfg)
}

/// Temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Config(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_atomic(path, &text)
}

fn timing(start: Instant) -> Value {
    json!({ "elapsed_ms": start.elapsed().as_secs_f64() * 1e3 })
}

fn fmt_complex(z: num_complex::Complex64) -> String {
    format!("{:+.15e} {:+.15e}i", z.re, z.im)
}

fn amplitude_summary(cfg: &ExperimentConfig, report: &AmplitudeReport, passed: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "amplitude  T = {}  alpha_i = {}  alpha_f = {}\n",
        cfg.t,
        fmt_complex(complex(cfg.alpha_i)),
        fmt_complex(complex(cfg.alpha_f))
    ));
    for (name, v) in [
        ("star", report.star_value),
        ("oracle", report.oracle_value),
        ("sliced", report.sliced_value),
        ("optical", report.optical_value),
    ] {
        if let Some(v) = v {
            out.push_str(&format!("  {name:<8}{}\n", fmt_complex(v)));
        }
    }
    if let Some(e) = report.star_error_estimate {
        out.push_str(&format!("  star error estimate     {e:.3e}\n"));
    }
    if let Some(b) = report.oracle_truncation_bound {
        out.push_str(&format!("  oracle truncation bound {b:.3e}\n"));
    }
    for e in report.errors() {
        out.push_str(&format!("  {:<16}abs {:.3e}  rel {:.3e}\n", e.pair, e.abs_error, e.rel_error));
    }
    out.push_str(&format!(
        "{} (max rel error {:.3e}, tolerance {:.1e})\n",
        if passed { "PASS" } else { "FAIL" },
        report.max_rel_error(),
        cfg.agreement_tol
    ));
    out
}

fn run_amplitude(cfg: &ExperimentConfig) -> Outcome {
    let start = Instant::now();
    let h = cfg.hamiltonian().map_err(Failure::Config)?;
    let slice = cfg.slice_config().map_err(Failure::Config)?;
    if cfg.routes().oracle {
        for label in [slice.alpha_i, slice.alpha_f] {
            fock::check_admissible(label, cfg.dim).map_err(|e| Failure::Numeric(e.to_string()))?;
        }
    }
    let report = compare_all(&slice, &h, &cfg.compare_params())?;
    let passed = report.max_rel_error() <= cfg.agreement_tol;
    let summary = amplitude_summary(cfg, &report, passed);
    write_json(
        &cfg.output_dir.join("amplitude.json"),
        &json!({
            "command": "amplitude",
            "config": cfg,
            "report": report,
            "passed": passed,
            "timing": timing(start),
        }),
    )?;
    write_atomic(&cfg.output_dir.join("amplitude.txt"), &summary)?;
    print!("{summary}");
    Ok(passed)
}

fn run_convergence(cfg: &ExperimentConfig) -> Outcome {
    let start = Instant::now();
    if cfg.n_list.len() < 3 {
        return Err(Failure::Config(format!(
            "n_list needs at least 3 entries, got {}",
            cfg.n_list.len()
        )));
    }
    let h = cfg.hamiltonian().map_err(Failure::Config)?;
    let slice = cfg.slice_config().map_err(Failure::Config)?;
    let rule = ComplexPlaneRule::gauss_hermite(cfg.rule_nodes, 1.0).map_err(|e| Failure::Numeric(e.to_string()))?;
    let report = convergence_study(&slice, &h, &cfg.n_list, &rule, cfg.dim)?;
    let passed = report.exact || report.slope.is_some_and(|s| (0.9..=1.1).contains(&s));
    write_atomic(&cfg.output_dir.join("convergence.csv"), &report.to_csv())?;
    write_json(
        &cfg.output_dir.join("convergence.json"),
        &json!({
            "command": "convergence",
            "config": cfg,
            "slope": report.slope,
            "exact": report.exact,
            "reference": report.reference,
            "points": report.points,
            "passed": passed,
            "timing": timing(start),
        }),
    )?;
    print!("{}", report.to_csv());
    match report.slope {
        Some(s) => println!("slope {s:.4} {}", if passed { "PASS" } else { "FAIL" }),
        None => println!("exact (errors at rounding floor) PASS"),
    }
    Ok(passed)
}

fn run_qdist(cfg: &ExperimentConfig) -> Outcome {
    let start = Instant::now();
    let s = SOrder::new(cfg.s)?;
    let rho = cfg.density().map_err(|e| Failure::Numeric(e.to_string()))?;
    let rule = ComplexPlaneRule::gauss_hermite(cfg.quasi_rule_nodes, 1.0).map_err(|e| Failure::Numeric(e.to_string()))?;
    let transform = QuasiTransform::new(&rho, s, &rule)?;
    let grid = transform.grid(cfg.window[0], cfg.window[1], cfg.grid_points);
    let normalization = transform.normalization()?;
    let residual = (normalization - 1.0).norm();
    let passed = residual <= cfg.agreement_tol;
    write_atomic(&cfg.output_dir.join("qdist.csv"), &grid.to_csv())?;
    write_json(
        &cfg.output_dir.join("qdist.json"),
        &json!({
            "command": "qdist",
            "config": cfg,
            "s": cfg.s,
            "normalization": normalization,
            "normalization_residual": residual,
            "max_imag_residual": grid.max_imag_residual(),
            "passed": passed,
            "timing": timing(start),
        }),
    )?;
    println!(
        "s = {}  normalization residual {residual:.3e}  {}",
        cfg.s,
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(passed)
}

fn run_star_product(cfg: &ExperimentConfig) -> Outcome {
    let start = Instant::now();
    let left = cfg.left().map_err(Failure::Config)?;
    let right = cfg.right().map_err(Failure::Config)?;
    let product = left.star_multiply(&right);
    let commutator = left.star_commutator(&right);
    write_json(
        &cfg.output_dir.join("star_product.json"),
        &json!({
            "command": "star-product",
            "config": cfg,
            "product": product,
            "commutator": commutator,
            "timing": timing(start),
        }),
    )?;
    println!("product     {product}");
    println!("commutator  {commutator}");
    Ok(true)
}

fn run_selftest_command(cfg: &ExperimentConfig) -> Outcome {
    let selftest = SelftestConfig {
        seed: cfg.seed,
        ..SelftestConfig::default()
    };
    let report = run_selftest(&selftest);
    for c in &report.criteria {
        println!(
            "criterion {:>2} {} {} (metric {:.3e}, threshold {:.1e}){}",
            c.id,
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.metric,
            c.threshold,
            c.error.as_ref().map(|e| format!(" error: {e}")).unwrap_or_default()
        );
    }
    write_json(
        &cfg.output_dir.join("selftest.json"),
        &json!({
            "command": "selftest",
            "config": cfg,
            "report": report.deterministic_json(),
            "passed": report.passed,
            "timing": report.timing,
        }),
    )?;
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = resolve(&cli.flags).and_then(|cfg| match cli.command {
        Command::Amplitude => run_amplitude(&cfg),
        Command::Convergence => run_convergence(&cfg),
        Command::Qdist => run_qdist(&cfg),
        Command::StarProduct => run_star_product(&cfg),
        Command::Selftest => run_selftest_command(&cfg),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
