//! Experiment configuration: a line-based `key = value` file with `#`
//! comments. Unknown keys and out-of-range values are rejected with the line
//! they came from.

use std::fmt;
use std::path::PathBuf;

use icae_core::genproc::Mixing;
use icae_core::numkit::Activation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub key: String,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "config line {}: {}", self.line, self.msg)
        } else {
            write!(f, "config line {}: {}: {}", self.line, self.key, self.msg)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Binary,
    Csv,
}

impl InputFormat {
    pub fn name(self) -> &'static str {
        match self {
            InputFormat::Binary => "binary",
            InputFormat::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub k_s: usize,
    pub k_c: usize,
    pub d_u: usize,
    pub d_c: usize,
    pub mixing: Mixing,
    pub alpha: f64,
    pub n_train: usize,
    pub n_eval: usize,
    /// Proxy unit count; unset means `k_s` on synthetic data and 100 on
    /// ingested data.
    pub k_units: Option<usize>,
    pub ref_cond: Option<u32>,
    pub d_latent: usize,
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
    pub lambda: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub n_perm: usize,
    pub hsic_n: usize,
    pub lipschitz_pairs: usize,
    pub gap_tol: f64,
    pub margin_tol: f64,
    pub spread_tol: f64,
    pub input: Option<PathBuf>,
    pub input_format: InputFormat,
    pub input_d_x: Option<usize>,
    pub input_d_c: Option<usize>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_UNITS_EXTERNAL: usize = 100;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k_s: 20,
            k_c: 5,
            d_u: 8,
            d_c: 4,
            mixing: Mixing::Affine,
            alpha: 0.5,
            n_train: 20_000,
            n_eval: 2000,
            k_units: None,
            ref_cond: None,
            d_latent: 1,
            hidden_dims: vec![64, 64],
            activation: Activation::Tanh,
            lambda: 1.0,
            lr: 2e-3,
            batch_size: 64,
            epochs: 120,
            seed: 0,
            n_perm: 199,
            hsic_n: 2000,
            lipschitz_pairs: 1000,
            gap_tol: 1e-3,
            margin_tol: 1e-3,
            spread_tol: 0.25,
            input: None,
            input_format: InputFormat::Binary,
            input_d_x: None,
            input_d_c: None,
            out: None,
        }
    }
}

const KEYS: &[&str] = &[
    "k_s",
    "k_c",
    "d_u",
    "d_c",
    "mixing",
    "alpha",
    "n_train",
    "n_eval",
    "k_units",
    "ref_cond",
    "d_latent",
    "hidden_dims",
    "activation",
    "lambda",
    "lr",
    "batch_size",
    "epochs",
    "seed",
    "n_perm",
    "hsic_n",
    "lipschitz_pairs",
    "gap_tol",
    "margin_tol",
    "spread_tol",
    "input",
    "input_format",
    "input_d_x",
    "input_d_c",
    "out",
];

impl ExperimentConfig {
    pub fn synthetic(&self) -> bool {
        self.input.is_none()
    }

    pub fn units(&self) -> usize {
        self.k_units.unwrap_or(if self.synthetic() {
            self.k_s
        } else {
            DEFAULT_UNITS_EXTERNAL
        })
    }

    /// Checks constraints that span several keys.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |key: &str, msg: String| ConfigError {
            line: 0,
            key: key.into(),
            msg,
        };
        if self.batch_size > self.n_train && self.synthetic() {
            return Err(err(
                "batch_size",
                format!("must not exceed n_train = {}", self.n_train),
            ));
        }
        if let Some(r) = self.ref_cond {
            if self.synthetic() && r as usize >= self.k_c {
                return Err(err("ref_cond", format!("must be below k_c = {}", self.k_c)));
            }
        }
        if self.input_format == InputFormat::Csv && self.input.is_some() {
            if self.input_d_x.is_none() || self.input_d_c.is_none() {
                return Err(err("input_format", "csv input needs input_d_x and input_d_c".into()));
            }
        }
        Ok(())
    }

    /// Renders every key in a fixed order; unset optional keys are omitted.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("k_s", self.k_s.to_string());
        put("k_c", self.k_c.to_string());
        put("d_u", self.d_u.to_string());
        put("d_c", self.d_c.to_string());
        put("mixing", self.mixing.name().into());
        put("alpha", self.alpha.to_string());
        put("n_train", self.n_train.to_string());
        put("n_eval", self.n_eval.to_string());
        if let Some(k) = self.k_units {
            put("k_units", k.to_string());
        }
        if let Some(r) = self.ref_cond {
            put("ref_cond", r.to_string());
        }
        put("d_latent", self.d_latent.to_string());
        put(
            "hidden_dims",
            self.hidden_dims.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
        );
        put("activation", self.activation.name().into());
        put("lambda", self.lambda.to_string());
        put("lr", self.lr.to_string());
        put("batch_size", self.batch_size.to_string());
        put("epochs", self.epochs.to_string());
        put("seed", self.seed.to_string());
        put("n_perm", self.n_perm.to_string());
        put("hsic_n", self.hsic_n.to_string());
        put("lipschitz_pairs", self.lipschitz_pairs.to_string());
        put("gap_tol", self.gap_tol.to_string());
        put("margin_tol", self.margin_tol.to_string());
        put("spread_tol", self.spread_tol.to_string());
        if let Some(p) = &self.input {
            put("input", p.display().to_string());
        }
        put("input_format", self.input_format.name().into());
        if let Some(d) = self.input_d_x {
            put("input_d_x", d.to_string());
        }
        if let Some(d) = self.input_d_c {
            put("input_d_c", d.to_string());
        }
        if let Some(p) = &self.out {
            put("out", p.display().to_string());
        }
        out
    }
}

struct Field<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Field<'_> {
    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError {
            line: self.line,
            key: self.key.into(),
            msg: msg.into(),
        })
    }

    fn parse<T: std::str::FromStr>(&self, what: &str) -> Result<T, ConfigError> {
        match self.value.parse() {
            Ok(v) => Ok(v),
            Err(_) => self.fail(format!("expected {what}, got {:?}", self.value)),
        }
    }

    fn count(&self, min: usize) -> Result<usize, ConfigError> {
        let v: usize = self.parse("a non-negative integer")?;
        if v < min {
            return self.fail(format!("must be >= {min}, got {v}"));
        }
        Ok(v)
    }

    fn real(&self) -> Result<f64, ConfigError> {
        let v: f64 = self.parse("a number")?;
        if !v.is_finite() {
            return self.fail("must be finite");
        }
        Ok(v)
    }

    fn non_negative(&self) -> Result<f64, ConfigError> {
        let v = self.real()?;
        if v < 0.0 {
            return self.fail(format!("must be >= 0, got {v}"));
        }
        Ok(v)
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        let v = self.real()?;
        if v <= 0.0 {
            return self.fail(format!("must be > 0, got {v}"));
        }
        Ok(v)
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError {
                line,
                key: String::new(),
                msg: format!("expected `key = value`, got {content:?}"),
            });
        };
        let f = Field {
            line,
            key: key.trim(),
            value: value.trim(),
        };
        if !KEYS.contains(&f.key) {
            return f.fail("unknown key");
        }
        if seen.contains(&f.key) {
            return f.fail("set more than once");
        }
        seen.push(f.key);
        match f.key {
            "k_s" => cfg.k_s = f.count(2)?,
            "k_c" => cfg.k_c = f.count(2)?,
            "d_u" => cfg.d_u = f.count(1)?,
            "d_c" => cfg.d_c = f.count(1)?,
            "mixing" => {
                cfg.mixing = match Mixing::from_name(f.value) {
                    Some(m) => m,
                    None => return f.fail("expected affine or smooth"),
                }
            }
            "alpha" => {
                let a = f.real()?;
                if !(0.0..1.0).contains(&a) {
                    return f.fail(format!("must lie in [0, 1), got {a}"));
                }
                cfg.alpha = a;
            }
            "n_train" => cfg.n_train = f.count(1)?,
            "n_eval" => cfg.n_eval = f.count(1)?,
            "k_units" => cfg.k_units = Some(f.count(1)?),
            "ref_cond" => cfg.ref_cond = Some(f.parse("a condition id")?),
            "d_latent" => cfg.d_latent = f.count(1)?,
            "hidden_dims" => {
                cfg.hidden_dims = if f.value.is_empty() {
                    Vec::new()
                } else {
                    f.value
                        .split(',')
                        .map(|p| match p.trim().parse::<usize>() {
                            Ok(w) if w > 0 => Ok(w),
                            _ => f.fail(format!("expected positive widths, got {:?}", p.trim())),
                        })
                        .collect::<Result<_, _>>()?
                };
            }
            "activation" => {
                cfg.activation = match Activation::from_name(f.value) {
                    Some(a) => a,
                    None => return f.fail("expected tanh, relu or identity"),
                }
            }
            "lambda" => cfg.lambda = f.non_negative()?,
            "lr" => cfg.lr = f.positive()?,
            "batch_size" => cfg.batch_size = f.count(1)?,
            "epochs" => cfg.epochs = f.count(0)?,
            "seed" => cfg.seed = f.parse("an unsigned 64-bit integer")?,
            "n_perm" => cfg.n_perm = f.count(99)?,
            "hsic_n" => cfg.hsic_n = f.count(2)?,
            "lipschitz_pairs" => cfg.lipschitz_pairs = f.count(1)?,
            "gap_tol" => cfg.gap_tol = f.non_negative()?,
            "margin_tol" => cfg.margin_tol = f.non_negative()?,
            "spread_tol" => cfg.spread_tol = f.positive()?,
            "input" => cfg.input = Some(PathBuf::from(f.value)),
            "input_format" => {
                cfg.input_format = match f.value {
                    "binary" => InputFormat::Binary,
                    "csv" => InputFormat::Csv,
                    _ => return f.fail("expected binary or csv"),
                }
            }
            "input_d_x" => cfg.input_d_x = Some(f.count(1)?),
            "input_d_c" => cfg.input_d_c = Some(f.count(1)?),
            "out" => cfg.out = Some(PathBuf::from(f.value)),
            _ => unreachable!("key list and match arms agree"),
        }
    }
    cfg.validate().map_err(|mut e| {
        e.line = text.lines().count();
        e
    })?;
    Ok(cfg)
}
