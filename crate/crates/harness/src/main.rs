use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flagbeta::closed_form::{
    convergence_margin, hua_converges, hua_rhs, main_rhs, nu_from_lambda, pushforward_constant, ColumnExponents,
};
use flagbeta::rng::{configured_workers, WORKERS_ENV};
use flagbeta::MeasureSpec;
use flagbeta_harness::config::{
    parse_lambda_arg, parse_tolerance_flag, ConfigError, Overrides, Profile, RunSpec, Suite, MIN_SAMPLES,
};
use flagbeta_harness::oracle::{quadrature_oracle, IntegrandSpec};
use flagbeta_harness::samples_io::{emit_samples, render_samples};
use flagbeta_harness::suites::{exponent_set, main_integral, run_suite};
use num_complex::Complex64;
use serde_json::json;

const USAGE: u8 = 2;
const ORACLE_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "flagbeta",
    version,
    about = "Beta-integrals over flag spaces: closed forms, samplers and verification"
)]
struct Cli {
    /// TOML file with run settings; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write a JSON report.
    Verify {
        suite: Suite,
        #[command(flatten)]
        common: Common,
        /// Store per-check wall time in the report (makes reports run-dependent).
        #[arg(long)]
        record_timings: bool,
    },
    /// Draw exact samples from a column measure.
    Sample {
        #[command(flatten)]
        common: Common,
    },
    /// Print closed-form values as JSON.
    Rhs {
        #[command(flatten)]
        common: Common,
    },
    /// Run the quadrature oracle for the flag integral (or Hua's, with --alpha).
    Oracle {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Default)]
struct Common {
    #[arg(long)]
    n: Option<usize>,
    /// r, c or h.
    #[arg(long)]
    field: Option<String>,
    /// Comma list or file: all n(n-1)/2 pair exponents, or n-1 last-column exponents.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Exponent of Hua's integral.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    tolerance_profile: Option<Profile>,
    /// Override one tolerance, e.g. --tol z_score=5.
    #[arg(long = "tol", value_name = "KEY=VALUE", value_parser = parse_tolerance_flag)]
    tol: Vec<(String, toml::Value)>,
}

enum Failure {
    Usage(String),
    Oracle(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl Common {
    fn overrides(&self, config: Option<&PathBuf>) -> Result<Overrides, ConfigError> {
        let file = match config {
            Some(p) => Overrides::from_toml_file(p)?,
            None => Overrides::default(),
        };
        let tolerances = if self.tol.is_empty() { None } else { Some(self.tol.iter().cloned().collect()) };
        let cli = Overrides {
            n: self.n,
            field: self.field.clone(),
            lambda: self.lambda.as_deref().map(parse_lambda_arg).transpose()?,
            alpha: self.alpha,
            samples: self.samples,
            seed: self.seed,
            tolerance_profile: self.tolerance_profile,
            tolerances,
            out: self.out.clone(),
        };
        Ok(cli.over(file))
    }
}

fn complex(z: Complex64) -> serde_json::Value {
    json!([z.re, z.im])
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("writing {}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Usage(format!("stdout: {e}"))),
    }
}

fn verify(spec: RunSpec, record_timings: bool) -> Result<u8, Failure> {
    let report = run_suite(&spec, record_timings);
    write_output(spec.out.as_ref(), &report.to_json())?;
    eprint!("{}", report.text_summary());
    Ok(report.exit_code() as u8)
}

fn sample(common: &Common, config: Option<&PathBuf>) -> Result<u8, Failure> {
    let mut o = common.overrides(config)?;
    let count = o.samples.unwrap_or(MIN_SAMPLES);
    if count == 0 {
        return Err(Failure::Usage("--samples must be positive".into()));
    }
    o.samples = Some(MIN_SAMPLES);
    let spec = RunSpec::resolve(Suite::Pushforward, o)?;
    let lambda = match &spec.lambda {
        None => vec![spec.field.kappa_f64() / 2.0 + 1.0; spec.n - 1],
        Some(l) if l.len() == spec.n - 1 && l.iter().all(|z| z.im == 0.0) => l.iter().map(|z| z.re).collect(),
        Some(_) => return Err(Failure::Usage(format!("sample needs {} real column exponents", spec.n - 1))),
    };
    let measure = MeasureSpec::new(spec.n, spec.field, lambda).map_err(|e| Failure::Usage(e.to_string()))?;
    match &spec.out {
        Some(path) => emit_samples(&measure, count, spec.seed, path).map_err(|e| Failure::Usage(e.to_string()))?,
        None => {
            write_output(None, &render_samples(&measure, count, spec.seed).map_err(|e| Failure::Usage(e.to_string()))?)?
        }
    }
    Ok(0)
}

fn rhs(spec: RunSpec) -> Result<u8, Failure> {
    let tag = spec.field;
    let l = exponent_set(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    let nu = nu_from_lambda(&l, tag);
    let margin = convergence_margin(&nu, tag);
    let mut out = json!({
        "n": spec.n,
        "field": tag.code().to_string(),
        "lambda": l.iter().map(|((p, q), v)| json!({"p": p, "q": q, "value": complex(v)})).collect::<Vec<_>>(),
        "nu": nu.iter().map(|((p, q), v)| json!({"p": p, "q": q, "value": complex(v)})).collect::<Vec<_>>(),
        "converges": margin > 0.0,
        "margin": margin,
    });
    if margin > 0.0 {
        let log = main_rhs(&l, tag).map_err(|e| Failure::Usage(e.to_string()))?;
        out["log_rhs"] = complex(log);
        out["rhs"] = complex(log.exp());
    }
    if let Some(c) = spec.lambda.as_ref().filter(|c| c.len() == spec.n - 1 && spec.n > 2) {
        if let Ok(v) = ColumnExponents::new(c.clone()).and_then(|c| pushforward_constant(&c, tag)) {
            out["log_pushforward_constant"] = complex(v);
        }
    }
    if let Some(alpha) = spec.alpha {
        let a = Complex64::new(alpha, 0.0);
        let mut hua = serde_json::Map::new();
        for n in 1..=spec.n {
            let v = if hua_converges(a, n) { hua_rhs(a, n).ok().map(complex) } else { None };
            hua.insert(format!("log_I_{n}"), v.unwrap_or(serde_json::Value::Null));
        }
        out["hua"] = serde_json::Value::Object(hua);
    }
    write_output(spec.out.as_ref(), &format!("{}\n", serde_json::to_string_pretty(&out).expect("json")))?;
    Ok(0)
}

fn oracle(spec: RunSpec) -> Result<u8, Failure> {
    let integrand = match spec.alpha {
        Some(alpha) => IntegrandSpec::Hua { n: spec.n, alpha },
        None => {
            let l = exponent_set(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
            main_integral::oracle_for(&l, spec.field).ok_or_else(|| {
                Failure::Usage(format!(
                    "no quadrature oracle for n={} over {} (available: n=2 any field, n=3 over r, real exponents)",
                    spec.n,
                    spec.field.name()
                ))
            })?
        }
    };
    let est = quadrature_oracle(&integrand).map_err(|e| Failure::Oracle(format!("{}: {e}", integrand.name())))?;
    let closed = integrand.closed_form().map_err(|e| Failure::Usage(e.to_string()))?;
    let out = json!({
        "integrand": integrand,
        "value": est.value,
        "error": est.error,
        "closed_form": closed,
        "rel_err": (est.value - closed).abs() / closed.abs(),
    });
    write_output(spec.out.as_ref(), &format!("{}\n", serde_json::to_string_pretty(&out).expect("json")))?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let config = cli.config.as_ref();
    match cli.command {
        Command::Verify { suite, common, record_timings } => {
            verify(RunSpec::resolve(suite, common.overrides(config)?)?, record_timings)
        }
        Command::Sample { common } => sample(&common, config),
        Command::Rhs { common } => {
            let mut o = common.overrides(config)?;
            o.samples.get_or_insert(MIN_SAMPLES);
            rhs(RunSpec::resolve(Suite::Main, o)?)
        }
        Command::Oracle { common } => {
            let mut o = common.overrides(config)?;
            o.samples.get_or_insert(MIN_SAMPLES);
            oracle(RunSpec::resolve(Suite::Main, o)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = configured_workers() {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            eprintln!("error: {WORKERS_ENV}: {e}");
            return ExitCode::from(USAGE);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
        Err(Failure::Oracle(msg)) => {
            eprintln!("oracle failure: {msg}");
            ExitCode::from(ORACLE_FAILURE)
        }
    }
}
