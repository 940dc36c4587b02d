//! Run settings: defaults, TOML config files and command-line overrides.
//!
//! Precedence is command-line flag, then config file, then the suite default.
//! A config file looks like
//!
//! ```toml
//! n = 3
//! field = "r"
//! lambda = [2.0, 1.5, "2.5+0.5i"]
//! samples = 100000
//! seed = 7
//! tolerance_profile = "strict"
//!
//! [tolerances]
//! z_score = 4.5
//! ```

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use flagbeta::closed_form::pair_count;
use flagbeta::{FieldTag, Tolerances};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MIN_SAMPLES: usize = 1000;
pub const MAX_ORDER: usize = 10;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn usage<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Usage(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Scalar integral formula and the column-integration step.
    #[value(alias = "lemma22")]
    Lemma,
    /// Quadratic-form coefficients of `s_pn` in one entry.
    Coeffs,
    /// Desnanot–Jacobi identity.
    Dj,
    /// Dieudonné determinant properties.
    Qdet,
    /// Closed form of the flag integral.
    Main,
    /// Last-column pushforward.
    Pushforward,
    /// Hua's integral over symmetric matrices.
    Hua,
    /// Behaviour at the edge of the convergence domain.
    Boundary,
    /// Every suite above.
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::Lemma,
        Suite::Coeffs,
        Suite::Dj,
        Suite::Qdet,
        Suite::Main,
        Suite::Pushforward,
        Suite::Hua,
        Suite::Boundary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma => "lemma",
            Suite::Coeffs => "coeffs",
            Suite::Dj => "dj",
            Suite::Qdet => "qdet",
            Suite::Main => "main",
            Suite::Pushforward => "pushforward",
            Suite::Hua => "hua",
            Suite::Boundary => "boundary",
            Suite::All => "all",
        }
    }

    fn default_n(self) -> usize {
        match self {
            Suite::Coeffs => 5,
            Suite::Dj | Suite::Qdet => 4,
            Suite::Main | Suite::Hua | Suite::Boundary => 2,
            Suite::Lemma | Suite::Pushforward | Suite::All => 3,
        }
    }

    fn default_field(self) -> FieldTag {
        match self {
            Suite::Qdet => FieldTag::Quaternion,
            _ => FieldTag::Real,
        }
    }

    fn is_statistical(self) -> bool {
        matches!(self, Suite::Main | Suite::Boundary | Suite::All)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Default,
    Strict,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Default => "default",
            Profile::Strict => "strict",
        }
    }

    pub fn tolerances(self) -> Tolerances {
        match self {
            Profile::Default => Tolerances::DEFAULT,
            Profile::Strict => Tolerances::STRICT,
        }
    }
}

mod field_code {
    use flagbeta::FieldTag;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(tag: &FieldTag, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(tag.code())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<FieldTag, D::Error> {
        let code = String::deserialize(d)?;
        FieldTag::from_code(&code).ok_or_else(|| serde::de::Error::custom(format!("unknown field {code:?}")))
    }
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub suite: Suite,
    pub n: usize,
    #[serde(with = "field_code")]
    pub field: FieldTag,
    /// Either all `n(n-1)/2` exponents in row-major pair order or `n-1` column exponents.
    pub lambda: Option<Vec<Complex64>>,
    pub alpha: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub tolerance_profile: Profile,
    pub tolerances: Tolerances,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Optional settings from a config file or the command line.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub n: Option<usize>,
    pub field: Option<String>,
    pub lambda: Option<Vec<LambdaValue>>,
    pub alpha: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tolerance_profile: Option<Profile>,
    pub tolerances: Option<toml::Table>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum LambdaValue {
    Number(f64),
    Text(String),
}

impl LambdaValue {
    fn value(&self) -> Result<Complex64, ConfigError> {
        match self {
            LambdaValue::Number(x) => Ok(Complex64::new(*x, 0.0)),
            LambdaValue::Text(s) => parse_complex(s),
        }
    }
}

impl Overrides {
    pub fn from_toml_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        toml::from_str(&text).map_err(|e| ConfigError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Fields set here replace those of `base`; tolerance tables are merged key by key.
    pub fn over(self, base: Overrides) -> Overrides {
        let tolerances = match (base.tolerances, self.tolerances) {
            (Some(mut b), Some(t)) => {
                b.extend(t);
                Some(b)
            }
            (b, t) => t.or(b),
        };
        Overrides {
            n: self.n.or(base.n),
            field: self.field.or(base.field),
            lambda: self.lambda.or(base.lambda),
            alpha: self.alpha.or(base.alpha),
            samples: self.samples.or(base.samples),
            seed: self.seed.or(base.seed),
            tolerance_profile: self.tolerance_profile.or(base.tolerance_profile),
            tolerances,
            out: self.out.or(base.out),
        }
    }
}

impl RunSpec {
    pub fn defaults(suite: Suite) -> Self {
        let n = suite.default_n();
        let field = suite.default_field();
        RunSpec {
            suite,
            n,
            field,
            lambda: None,
            alpha: None,
            samples: default_samples(suite, n, field),
            seed: 0,
            tolerance_profile: Profile::Default,
            tolerances: Tolerances::DEFAULT,
            out: None,
        }
    }

    pub fn resolve(suite: Suite, o: Overrides) -> Result<Self, ConfigError> {
        let mut spec = RunSpec::defaults(suite);
        if let Some(n) = o.n {
            spec.n = n;
        }
        if let Some(code) = &o.field {
            spec.field = FieldTag::from_code(code)
                .map_or_else(|| usage(format!("unknown field {code:?}; use r, c or h")), Ok)?;
        }
        spec.samples = o.samples.unwrap_or_else(|| default_samples(suite, spec.n, spec.field));
        if let Some(values) = &o.lambda {
            spec.lambda = Some(values.iter().map(LambdaValue::value).collect::<Result<_, _>>()?);
        }
        spec.alpha = o.alpha;
        spec.seed = o.seed.unwrap_or(0);
        spec.tolerance_profile = o.tolerance_profile.unwrap_or(Profile::Default);
        spec.tolerances = apply_tolerance_overrides(spec.tolerance_profile.tolerances(), o.tolerances.as_ref())?;
        spec.out = o.out;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(2..=MAX_ORDER).contains(&self.n) {
            return usage(format!("--n must be between 2 and {MAX_ORDER}, got {}", self.n));
        }
        if self.samples < MIN_SAMPLES {
            return usage(format!("--samples must be at least {MIN_SAMPLES}, got {}", self.samples));
        }
        if let Some(l) = &self.lambda {
            let full = pair_count(self.n);
            if l.len() != full && l.len() != self.n - 1 {
                return usage(format!(
                    "--lambda has {} values; order {} takes {full} (all pairs) or {} (last column)",
                    l.len(),
                    self.n,
                    self.n - 1
                ));
            }
            if l.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return usage("--lambda values must be finite");
            }
        }
        if let Some(a) = self.alpha {
            if !a.is_finite() {
                return usage("--alpha must be finite");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the run (output path excluded).
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("run specs serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// The same run with a different suite, for `all`.
    pub fn for_suite(&self, suite: Suite) -> RunSpec {
        RunSpec { suite, ..self.clone() }
    }
}

fn default_samples(suite: Suite, n: usize, field: FieldTag) -> usize {
    if !suite.is_statistical() {
        MIN_SAMPLES
    } else if field == FieldTag::Quaternion && n >= 4 {
        100_000
    } else {
        1_000_000
    }
}

fn apply_tolerance_overrides(base: Tolerances, table: Option<&toml::Table>) -> Result<Tolerances, ConfigError> {
    let Some(table) = table else { return Ok(base) };
    let mut value = serde_json::to_value(base).expect("tolerances serialize");
    let map = value.as_object_mut().expect("tolerances are a struct");
    for (key, v) in table {
        if !map.contains_key(key) {
            let known: Vec<&str> = map.keys().map(String::as_str).collect();
            return usage(format!("unknown tolerance {key:?}; known: {}", known.join(", ")));
        }
        let json = match v {
            toml::Value::Integer(i) => serde_json::Value::from(*i),
            toml::Value::Float(f) => serde_json::Value::from(*f),
            other => return usage(format!("tolerance {key} must be a number, got {other}")),
        };
        map.insert(key.clone(), json);
    }
    serde_json::from_value(value).map_err(|e| ConfigError::Usage(format!("tolerances: {e}")))
}

/// Parses `key=value` tolerance overrides from the command line.
pub fn parse_tolerance_flag(s: &str) -> Result<(String, toml::Value), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v = v.trim();
    let value = match v.parse::<i64>() {
        Ok(i) => toml::Value::Integer(i),
        Err(_) => toml::Value::Float(v.parse::<f64>().map_err(|e| format!("{k}: {e}"))?),
    };
    Ok((k.trim().to_string(), value))
}

/// Parses `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(s: &str) -> Result<Complex64, ConfigError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || ConfigError::Usage(format!("cannot parse {s:?} as a number"));
    let num = |x: &str| -> Result<f64, ConfigError> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse().map_err(|_| bad()),
        }
    };
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(t.parse().map_err(|_| bad())?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Complex64::new(body[..k].parse().map_err(|_| bad())?, num(&body[k..])?)),
        None => Ok(Complex64::new(0.0, num(body)?)),
    }
}

/// A `--lambda` argument: a comma list, or a file of whitespace- or
/// comma-separated values (`#` starts a comment). A matrix file lists row `p`
/// of the strict upper triangle on line `p`.
pub fn parse_lambda_arg(arg: &str) -> Result<Vec<LambdaValue>, ConfigError> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?
    } else {
        arg.to_string()
    };
    let tokens: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return usage(format!("--lambda {arg:?} contains no values"));
    }
    tokens
        .into_iter()
        .map(|t| {
            parse_complex(t)?;
            Ok(match t.parse::<f64>() {
                Ok(x) => LambdaValue::Number(x),
                Err(_) => LambdaValue::Text(t.to_string()),
            })
        })
        .collect()
}
