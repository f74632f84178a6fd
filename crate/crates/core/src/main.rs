use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use hmtk::doubling::doubling_profile;
use hmtk::dyadic::{build_tree, verify_cube_axioms, TreeOptions};
use hmtk::experiment::{coordinate_function, equiv_experiment, ExperimentConfig, ProbeContext, TreeOptionsSer, DEFAULT_PROBES};
use hmtk::generate::{generate, GeneratorKind, GeneratorSpec};
use hmtk::geometry::{classify, GeometryConfig};
use hmtk::io::{self, ArrayEncoding};
use hmtk::norms::carleson::carleson_norm;
use hmtk::norms::lip::lip_norm;
use hmtk::space::{validate_space, FiniteHomSpace};
use hmtk::wavelet::{analyze, build_mra, check_basis, fit_decay, WaveletBasis};
use hmtk::{par, Error, Result};

#[derive(Parser)]
#[command(name = "hmtk", version, about = "Dyadic cubes, wavelets and Lipschitz/Carleson norms on finite metric-measure spaces")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated space.
    Generate {
        #[arg(long)]
        kind: GeneratorKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        spacing: Option<f64>,
        /// Snowflake eps, power p, or weight exponent a.
        #[arg(long)]
        exponent: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the space axioms and compute A0.
    Validate {
        #[command(flatten)]
        input: SpaceInput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the dyadic cube tree.
    Cubes {
        #[command(flatten)]
        input: SpaceInput,
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include the full axiom report in the summary.
        #[arg(long)]
        verify: bool,
    },
    /// Build the wavelet basis on a saved tree.
    Wavelets {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        fit_decay: bool,
        /// Write coefficient arrays as plain JSON numbers instead of base64.
        #[arg(long)]
        plain: bool,
    },
    /// Both norms of one function.
    Norm {
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        basis: Option<PathBuf>,
        #[arg(long)]
        theta: f64,
        /// Probe name or one of x, sin(x), cos(x), exp(x), abs(x).
        #[arg(long = "fn", conflicts_with = "fn_file")]
        func: Option<String>,
        /// CSV of per-point values.
        #[arg(long)]
        fn_file: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Norm-equivalence experiment over the probe suite.
    Equiv {
        #[command(flatten)]
        input: SpaceInput,
        #[arg(long)]
        theta: f64,
        #[command(flatten)]
        tree: TreeArgs,
        /// Comma-separated probe names.
        #[arg(long, value_delimiter = ',')]
        probes: Option<Vec<String>>,
        #[arg(long, default_value_t = 0x1a2b3c)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Lower, upper and Ahlfors classifiers.
    Geometry {
        #[command(flatten)]
        input: SpaceInput,
        #[arg(long, default_value_t = 0.3)]
        theta: f64,
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        lower_min: Option<f64>,
        #[arg(long)]
        upper_max: Option<f64>,
        #[arg(long)]
        reg_max: Option<f64>,
        #[arg(long)]
        spread_max: Option<f64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Merge JSON outputs into one document with a pass/fail summary.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SpaceInput {
    /// Space JSON.
    #[arg(long, required_unless_present = "csv")]
    space: Option<PathBuf>,
    /// CSV with columns id, weight, coordinates.
    #[arg(long, conflicts_with = "space")]
    csv: Option<PathBuf>,
    /// Metric for CSV input: euclidean, snowflake or power.
    #[arg(long, default_value = "euclidean")]
    metric: String,
    #[arg(long)]
    metric_param: Option<f64>,
}

impl SpaceInput {
    fn load(&self) -> Result<FiniteHomSpace> {
        match (&self.space, &self.csv) {
            (Some(p), _) => io::load_space(p),
            (None, Some(p)) => {
                let metric = io::metric_from_parts(&self.metric, self.metric_param)?;
                let text = std::fs::read_to_string(p)?;
                let name = p.file_stem().map_or("csv".into(), |s| s.to_string_lossy().into_owned());
                io::space_from_csv(&name, &text, metric)
            }
            (None, None) => Err(Error::InvalidSpec("need --space or --csv".into())),
        }
    }
}

#[derive(Args, Clone, Copy)]
struct TreeArgs {
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long = "C0")]
    big_c0: Option<f64>,
    /// Fail on inadmissible constants instead of halving delta.
    #[arg(long)]
    strict_delta: bool,
}

impl From<TreeArgs> for TreeOptionsSer {
    fn from(t: TreeArgs) -> Self {
        TreeOptionsSer { delta: t.delta, c0: t.c0, big_c0: t.big_c0, strict: t.strict_delta }
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = io::report_to_string(value)?;
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Usage-type errors and malformed input exit with 2; spaces or trees that
/// fail a check exit with 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_)
        | Error::Parse { .. }
        | Error::InvalidSpec(_)
        | Error::Precondition(_)
        | Error::UnknownKey(_)
        | Error::LengthMismatch { .. } => 2,
        _ => 1,
    }
}

/// Collects every boolean named `pass` or found under `verdicts`, with its
/// JSON path.
fn collect_flags(v: &Value, path: &str, under_verdicts: bool, out: &mut Vec<(String, bool)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = format!("{path}.{k}");
                match x {
                    Value::Bool(b) if k == "pass" || under_verdicts => out.push((p, *b)),
                    _ => collect_flags(x, &p, under_verdicts || k == "verdicts", out),
                }
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                collect_flags(x, &format!("{path}[{i}]"), under_verdicts, out);
            }
        }
        _ => {}
    }
}

fn function_values(space: &FiniteHomSpace, basis: &WaveletBasis, theta: f64, name: &str) -> Result<Vec<f64>> {
    if name == "zero" || DEFAULT_PROBES.contains(&name) {
        let omega = doubling_profile(space).omega;
        ProbeContext::new(space, basis, theta, omega, ExperimentConfig::new(theta).seed).values(name)
    } else {
        coordinate_function(space, name)
    }
}

/// Returns whether every check passed.
fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Generate { kind, n, spacing, exponent, out } => {
            let space = generate(&GeneratorSpec { kind, n, spacing, exponent })?;
            io::save_space(&out, &space)?;
            Ok(true)
        }
        Cmd::Validate { input, out } => {
            let space = input.load()?;
            emit(&validate_space(&space)?, out.as_deref())?;
            Ok(true)
        }
        Cmd::Cubes { input, tree: targs, out, verify } => {
            let space = input.load()?;
            let v = validate_space(&space)?;
            let opts: TreeOptions = TreeOptionsSer::from(targs).into();
            let (tree, report) = build_tree(&space, v.a0, opts)?;
            if let Some(p) = &out {
                io::save_tree(p, &tree, &space)?;
            }
            let mut summary = json!({
                "space": space.name(),
                "n": space.n(),
                "a0": v.a0,
                "params": tree.params,
                "k_min": tree.k_min,
                "k_max": tree.k_max,
                "cubes_per_level": tree.levels().map(|(_, c)| c.len()).collect::<Vec<_>>(),
                "violations": report.violations.len(),
            });
            if verify {
                summary["axioms"] = serde_json::to_value(&report)?;
            }
            emit(&summary, None)?;
            Ok(report.is_clean())
        }
        Cmd::Wavelets { tree, out, fit_decay: fit, plain } => {
            let (space, tree) = io::load_tree(&tree)?;
            let report = verify_cube_axioms(&space, &tree);
            if !report.is_clean() {
                return Err(Error::AxiomViolation(format!("{} violations in the loaded tree", report.violations.len())));
            }
            let basis = build_mra(&tree)?;
            if let Some(p) = &out {
                let enc = if plain { ArrayEncoding::Plain } else { ArrayEncoding::Base64 };
                io::save_basis(p, &basis, &space, enc)?;
            }
            let checks = check_basis(&basis, &space);
            let ok = checks.gram_max_dev <= 1e-10 && checks.max_mother_mean <= 1e-10;
            let mut summary = json!({ "basis_checks": checks, "elements": basis.len() });
            if fit {
                summary["decay"] = serde_json::to_value(fit_decay(&basis, &space))?;
            }
            emit(&summary, None)?;
            Ok(ok)
        }
        Cmd::Norm { space, basis, theta, func, fn_file, report } => {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(Error::Precondition(format!("theta must lie in (0, 1), got {theta}")));
            }
            let (space, basis) = match (&space, &basis) {
                (_, Some(b)) => {
                    let (s, b) = io::load_basis(b)?;
                    if let Some(p) = &space {
                        if io::load_space(p)? != s {
                            return Err(Error::InvalidSpec("--space differs from the space embedded in --basis".into()));
                        }
                    }
                    (s, b)
                }
                (Some(p), None) => {
                    let s = io::load_space(p)?;
                    let a0 = validate_space(&s)?.a0;
                    let (tree, _) = build_tree(&s, a0, TreeOptions::default())?;
                    let b = build_mra(&tree)?;
                    (s, b)
                }
                (None, None) => return Err(Error::InvalidSpec("need --space or --basis".into())),
            };
            let f = match (&func, &fn_file) {
                (Some(name), _) => function_values(&space, &basis, theta, name)?,
                (None, Some(p)) => io::values_from_csv(&std::fs::read_to_string(p)?, space.n())?,
                (None, None) => return Err(Error::InvalidSpec("need --fn or --fn-file".into())),
            };
            let lip = lip_norm(&f, &space, theta);
            let car = carleson_norm(&analyze(&f, &basis, &space)?, &basis.tree, theta);
            let ratio = (lip.value > 0.0 && car.value > 0.0).then(|| car.value / lip.value);
            let out = json!({
                "space": space.name(),
                "theta": theta,
                "function": func.unwrap_or_else(|| fn_file.unwrap().display().to_string()),
                "lip": lip,
                "carleson": car,
                "ratio": ratio,
                "degenerate": lip.value == 0.0 && car.value == 0.0,
            });
            emit(&out, report.as_deref())?;
            Ok(true)
        }
        Cmd::Equiv { input, theta, tree, probes, seed, report } => {
            let space = input.load()?;
            let mut cfg = ExperimentConfig::new(theta);
            cfg.tree = tree.into();
            cfg.seed = seed;
            if let Some(p) = probes {
                cfg.probes = p;
            }
            let r = equiv_experiment(&space, &cfg)?;
            emit(&r, report.as_deref())?;
            let v = &r.verdicts;
            Ok(v.axioms_clean && v.basis_orthonormal && v.reconstruction && v.envelope_finite && v.partial_sums)
        }
        Cmd::Geometry { input, theta, tree, lower_min, upper_max, reg_max, spread_max, report } => {
            let space = input.load()?;
            let a0 = validate_space(&space)?.a0;
            let (t, _) = build_tree(&space, a0, TreeOptionsSer::from(tree).into())?;
            let basis = build_mra(&t)?;
            let mut cfg = GeometryConfig::default();
            cfg.lower_min = lower_min.unwrap_or(cfg.lower_min);
            cfg.upper_max = upper_max.unwrap_or(cfg.upper_max);
            cfg.reg_max = reg_max.unwrap_or(cfg.reg_max);
            cfg.spread_max = spread_max.unwrap_or(cfg.spread_max);
            emit(&classify(&space, &basis, theta, &cfg), report.as_deref())?;
            Ok(true)
        }
        Cmd::Report { inputs, out } => {
            let mut sections = serde_json::Map::new();
            let mut flags = Vec::new();
            for p in &inputs {
                let text = std::fs::read_to_string(p)?;
                let v: Value = io::from_json_str(&text).map_err(|e| match e {
                    Error::Parse { context, message } => Error::Parse { context: format!("{}: {context}", p.display()), message },
                    e => e,
                })?;
                let key = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                collect_flags(&v, &key, false, &mut flags);
                sections.insert(key, v);
            }
            let failures: Vec<&String> = flags.iter().filter(|f| !f.1).map(|f| &f.0).collect();
            let doc = json!({
                "sections": sections,
                "summary": { "checks": flags.len(), "failed": failures, "pass": failures.is_empty() },
            });
            emit(&doc, out.as_deref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    match par::with_threads(threads, move || run(cli.cmd)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
