//! Run configuration: reference defaults, overridden by a config file, then
//! by command-line flags. Every value goes through [`RunConfig::set`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use qnd_core::{InterferometerParams, LossModel, Method};

/// Invalid input; reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

fn invalid(field: &str, message: impl fmt::Display) -> ValidationError {
    ValidationError(format!("{field}: {message}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub g1: f64,
    pub g2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub phi0: f64,
    pub kappa: f64,
    pub n_alpha: f64,
    pub theta_alpha: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub d1: f64,
    pub d2: f64,
    /// Mean photon number of a coherent signal.
    pub n_beta: f64,
    /// Photon number of a Fock signal.
    pub n_b: u64,
    /// Explicit interferometer phase; otherwise `phi0 + kappa n_b`.
    pub phi: Option<f64>,
    pub lossy: bool,
    pub method: Method,
    pub grid: usize,
    pub level: f64,
    pub g2_lo: Option<f64>,
    pub g2_hi: Option<f64>,
    pub cutoff: usize,
    pub max_cutoff: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = InterferometerParams::reference();
        Self {
            g1: p.g1,
            g2: p.g2,
            theta1: p.theta1,
            theta2: p.theta2,
            phi0: p.phi0,
            kappa: p.kappa,
            n_alpha: p.n_alpha,
            theta_alpha: p.theta_alpha,
            eta1: p.eta1,
            eta2: p.eta2,
            d1: p.d1,
            d2: p.d2,
            n_beta: 1e8,
            n_b: 10_000,
            phi: None,
            lossy: false,
            method: Method::Exact,
            grid: qnd_core::sweep::DEFAULT_GRID,
            level: 0.6,
            g2_lo: None,
            g2_hi: None,
            cutoff: qnd_core::fock::MIN_CUTOFF,
            max_cutoff: 30,
        }
    }
}

/// Parses a real number or an angle shorthand such as `pi`, `-pi/2`,
/// `3pi/4`, `2*pi`.
pub fn parse_real(text: &str) -> Result<f64, String> {
    let s = text.trim();
    if let Ok(x) = s.parse::<f64>() {
        return Ok(x);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(s)),
    };
    let (numerator, denominator) = match body.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (body, None),
    };
    let factor = numerator
        .strip_suffix("pi")
        .map(|f| f.trim().trim_end_matches('*').trim())
        .ok_or_else(|| format!("cannot parse `{text}` as a number"))?;
    let factor = if factor.is_empty() {
        1.0
    } else {
        factor.parse::<f64>().map_err(|_| format!("cannot parse `{text}` as a number"))?
    };
    let denominator = match denominator {
        Some(d) => d.parse::<f64>().map_err(|_| format!("cannot parse `{text}` as a number"))?,
        None => 1.0,
    };
    Ok(sign * factor * PI / denominator)
}

fn parse_bool(text: &str) -> Result<bool, String> {
    match text.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("expected true or false, got `{other}`")),
    }
}

fn parse_count(text: &str) -> Result<u64, String> {
    let s = text.trim();
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    // accept integral values written as reals, e.g. 1e4
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(x as u64),
        _ => Err(format!("expected a nonnegative integer, got `{s}`")),
    }
}

impl RunConfig {
    /// Sets one field from its textual value. Keys may use `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ValidationError> {
        let key = key.trim().replace('-', "_");
        let real = |v: &str| parse_real(v).map_err(|e| invalid(&key, e));
        let count = |v: &str| parse_count(v).map_err(|e| invalid(&key, e));
        let optional = |v: &str| -> Result<Option<f64>, ValidationError> {
            match v.trim() {
                "" | "null" | "none" => Ok(None),
                other => real(other).map(Some),
            }
        };
        match key.as_str() {
            "g1" => self.g1 = real(value)?,
            "g2" => self.g2 = real(value)?,
            "theta1" => self.theta1 = real(value)?,
            "theta2" => self.theta2 = real(value)?,
            "phi0" => self.phi0 = real(value)?,
            "kappa" => self.kappa = real(value)?,
            "n_alpha" => self.n_alpha = real(value)?,
            "theta_alpha" => self.theta_alpha = real(value)?,
            "eta1" => self.eta1 = real(value)?,
            "eta2" => self.eta2 = real(value)?,
            "d1" => self.d1 = real(value)?,
            "d2" => self.d2 = real(value)?,
            "n_beta" => self.n_beta = real(value)?,
            "n_b" => self.n_b = count(value)?,
            "phi" => self.phi = optional(value)?,
            "lossy" => self.lossy = parse_bool(value).map_err(|e| invalid(&key, e))?,
            "method" => {
                self.method = match value.trim() {
                    "exact" => Method::Exact,
                    "linearized" => Method::Linearized,
                    other => return Err(invalid(&key, format!("expected exact or linearized, got `{other}`"))),
                }
            }
            "grid" => self.grid = count(value)? as usize,
            "level" => self.level = real(value)?,
            "g2_lo" => self.g2_lo = optional(value)?,
            "g2_hi" => self.g2_hi = optional(value)?,
            "cutoff" => self.cutoff = count(value)? as usize,
            "max_cutoff" => self.max_cutoff = count(value)? as usize,
            _ => return Err(ValidationError(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a config file: a JSON object (or a JSON report holding a
    /// `config` object), or flat `key = value` lines with `#` comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), anyhow::Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config file {}: {e}", path.display()))?;
        for (key, value) in parse_entries(&text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn params(&self) -> InterferometerParams {
        InterferometerParams {
            g1: self.g1,
            g2: self.g2,
            theta1: self.theta1,
            theta2: self.theta2,
            phi0: self.phi0,
            kappa: self.kappa,
            n_alpha: self.n_alpha,
            theta_alpha: self.theta_alpha,
            eta1: self.eta1,
            eta2: self.eta2,
            d1: self.d1,
            d2: self.d2,
        }
    }

    pub fn loss_model(&self) -> LossModel {
        if self.lossy {
            LossModel::Lossy
        } else {
            LossModel::Lossless
        }
    }

    /// Interferometer phase for coefficient and conditional evaluations.
    pub fn phase(&self) -> f64 {
        self.phi.unwrap_or_else(|| self.params().phase_for(self.n_b as f64))
    }

    pub fn g2_bounds(&self) -> (f64, f64) {
        let (lo, hi) = qnd_core::sweep::default_g2_bounds(self.g1);
        (self.g2_lo.unwrap_or(lo), self.g2_hi.unwrap_or(hi))
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        self.params().validate().map_err(|e| invalid(e.field, e.message))?;
        if !(self.n_beta.is_finite() && self.n_beta >= 0.0) {
            return Err(invalid("n_beta", "n_beta must be finite and ≥ 0"));
        }
        if let Some(phi) = self.phi {
            if !phi.is_finite() {
                return Err(invalid("phi", "phi must be finite"));
            }
        }
        if self.grid < 2 {
            return Err(invalid("grid", "grid must have at least 2 points per axis"));
        }
        if !self.level.is_finite() {
            return Err(invalid("level", "level must be finite"));
        }
        let (lo, hi) = self.g2_bounds();
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(invalid("g2_lo", format!("g2 bounds [{lo}, {hi}] need 0 ≤ lo ≤ hi")));
        }
        if self.max_cutoff < self.cutoff {
            return Err(invalid("max_cutoff", "max_cutoff must be ≥ cutoff"));
        }
        Ok(())
    }
}

fn json_scalar(key: &str, value: &Value) -> Result<String, ValidationError> {
    match value {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Null => Ok("null".to_string()),
        _ => Err(invalid(key, "expected a scalar value")),
    }
}

fn parse_entries(text: &str) -> Result<Vec<(String, String)>, anyhow::Error> {
    if text.trim_start().starts_with('{') {
        let root: BTreeMap<String, Value> = serde_json::from_str(text)?;
        let object = match root.get("config") {
            Some(Value::Object(inner)) => inner.clone().into_iter().collect(),
            _ => root,
        };
        return object
            .iter()
            .map(|(k, v)| Ok((k.clone(), json_scalar(k, v)?)))
            .collect();
    }
    let mut entries = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ValidationError(format!("config line {}: expected `key = value`", number + 1)))?;
        entries.push((key.trim().to_string(), value.trim().trim_matches('"').to_string()));
    }
    Ok(entries)
}
