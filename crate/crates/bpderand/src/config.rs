//! Experiment configuration.
//!
//! The text form is one `key = value` per line with `#` comments. Values
//! are integers, floats, `true`/`false`, or strings (bare or in double
//! quotes). A file starting with `{` is read as JSON instead. Unknown keys
//! are rejected in both forms.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    HybridCompare,
    MistakeRate,
    ExtractorVerify,
    FfVerify,
    PrgFool,
    AmplifyCheck,
}

impl ExperimentKind {
    /// Kinds whose results depend on sampled randomness.
    pub fn needs_seed(self) -> bool {
        !matches!(
            self,
            ExperimentKind::AmplifyCheck | ExperimentKind::MistakeRate
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::HybridCompare => "hybrid-compare",
            ExperimentKind::MistakeRate => "mistake-rate",
            ExperimentKind::ExtractorVerify => "extractor-verify",
            ExperimentKind::FfVerify => "ff-verify",
            ExperimentKind::PrgFool => "prg-fool",
            ExperimentKind::AmplifyCheck => "amplify-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Program files, comma-separated, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<String>,
    /// Generated instances: count, shape and seed of the first one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_depth: Option<usize>,
    /// `r-ow`, `s-ow`, `s-r` or `any`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_discipline: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_seed: Option<u64>,

    /// `A`, `H1`, `H2` or `H3` for hybrid-compare.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequential: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bad_threshold: Option<f64>,
    /// Largest tolerated number of inputs over the bad threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bad: Option<u64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prg_block: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h3_cap_factor: Option<usize>,

    /// Extractor: `hash`, `walk` or `guv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ext_kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ext_ell: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ext_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ext_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ext_seed_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ext_out: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ext_alpha: Option<f64>,
    /// Number of flat sources and of random test functions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<usize>,

    /// Generator parameters for prg-fool and amplify-check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prg_space: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prg_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prg_eps: Option<f64>,

    /// Tower parameters for ff-verify.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ff_samples: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,

    /// Number of random inputs drawn from the master seed instead of
    /// looping over every input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<usize>,

    /// Largest tolerated mistake density for mistake-rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_density: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    /// `exact` or `float`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arithmetic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({ "kind": kind })).expect("only kind is required")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.kind.needs_seed() && self.master_seed.is_none() {
            return Err(ConfigError::Invalid(format!(
                "{} needs master_seed",
                self.kind.name()
            )));
        }
        if let Some(a) = &self.arithmetic {
            if a != "exact" && a != "float" {
                return Err(ConfigError::Invalid(format!(
                    "arithmetic must be exact or float, not `{a}`"
                )));
            }
        }
        Ok(())
    }
}

fn parse_value(raw: &str, line: usize) -> Result<Value, ConfigError> {
    let raw = raw.trim();
    if let Some(inner) = raw.strip_prefix('"') {
        let inner = inner.strip_suffix('"').ok_or_else(|| ConfigError::Syntax {
            line,
            msg: "unterminated string".into(),
        })?;
        return Ok(Value::String(inner.to_string()));
    }
    if raw.is_empty() {
        return Err(ConfigError::Syntax {
            line,
            msg: "missing value".into(),
        });
    }
    Ok(match raw {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => {
            if let Ok(v) = raw.parse::<u64>() {
                v.into()
            } else if let Some(hex) = raw.strip_prefix("0x") {
                u64::from_str_radix(hex, 16)
                    .map_err(|e| ConfigError::Syntax {
                        line,
                        msg: format!("bad hex `{raw}`: {e}"),
                    })?
                    .into()
            } else if let Ok(v) = raw.parse::<i64>() {
                v.into()
            } else if let Ok(v) = raw.parse::<f64>() {
                serde_json::Number::from_f64(v)
                    .map(Value::Number)
                    .ok_or_else(|| ConfigError::Syntax {
                        line,
                        msg: format!("non-finite `{raw}`"),
                    })?
            } else {
                Value::String(raw.to_string())
            }
        }
    })
}

/// Reads the flat text form into a JSON object, keeping line numbers for
/// errors.
fn parse_text(text: &str) -> Result<Map<String, Value>, ConfigError> {
    let mut map = Map::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            msg: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        if map
            .insert(key.to_string(), parse_value(value, line)?)
            .is_some()
        {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(map)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (k, ch) in line.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..k],
            _ => {}
        }
    }
    line
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.line(),
            msg: e.to_string(),
        })?
    } else {
        Value::Object(parse_text(text)?)
    };
    let cfg: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Text form with keys in declaration order.
pub fn dump_config(cfg: &ExperimentConfig) -> String {
    let Value::Object(map) = serde_json::to_value(cfg).expect("plain data serializes") else {
        unreachable!("struct serializes to an object")
    };
    let mut s = String::new();
    for (k, v) in map {
        match v {
            Value::String(text) => writeln!(s, "{k} = \"{text}\""),
            other => writeln!(s, "{k} = {other}"),
        }
        .unwrap();
    }
    s
}
