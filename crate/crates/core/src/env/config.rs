use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::lattice::MAX_DIM;

/// Default structural cutoff between hash-resolved and shell-sampled pairs.
pub const DEFAULT_SHORT_CUTOFF: i64 = 8;
/// Default maximum jump range of the lazy backend (sup-norm, lattice units).
pub const DEFAULT_MAX_JUMP: i64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    /// Full configuration on the box `[-half_width, half_width]^d`.
    ExactBoxed { half_width: i64 },
    /// Infinite-volume configuration revealed on demand.
    LazyShell,
}

/// Parameters of a long-range percolation environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub d: usize,
    pub s: f64,
    pub beta: f64,
    pub nn_open: bool,
    pub seed: u64,
    #[serde(default = "default_short_cutoff")]
    pub short_cutoff: i64,
    #[serde(default = "default_max_jump")]
    pub max_jump: i64,
    #[serde(default = "default_backend")]
    pub backend: BackendKind,
}

fn default_short_cutoff() -> i64 {
    DEFAULT_SHORT_CUTOFF
}

fn default_max_jump() -> i64 {
    DEFAULT_MAX_JUMP
}

fn default_backend() -> BackendKind {
    BackendKind::LazyShell
}

/// Which limit theorem a parameter set falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `d >= 2`, `s in [d+1, d+2)`.
    Stable,
    /// `d = 1`, `s > 2`, nearest neighbours forced open.
    Gaussian,
    /// Anything else with `s > d`.
    Other,
}

impl EnvConfig {
    /// The desk-scale default: `d = 2`, `s = 3.2`, `beta = 1`, nearest neighbours open.
    pub fn desk_default(seed: u64) -> Self {
        Self {
            d: 2,
            s: 3.2,
            beta: 1.0,
            nn_open: true,
            seed,
            short_cutoff: DEFAULT_SHORT_CUTOFF,
            max_jump: DEFAULT_MAX_JUMP,
            backend: BackendKind::LazyShell,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn with_backend(&self, backend: BackendKind) -> Self {
        Self {
            backend,
            ..self.clone()
        }
    }

    /// Stability index `alpha = s - d`.
    pub fn alpha(&self) -> f64 {
        alpha(self.d, self.s)
    }

    pub fn regime(&self) -> Regime {
        let d = self.d as f64;
        if self.d >= 2 && self.s >= d + 1.0 && self.s < d + 2.0 {
            Regime::Stable
        } else if self.d == 1 && self.s > 2.0 && self.nn_open {
            Regime::Gaussian
        } else {
            Regime::Other
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > MAX_DIM {
            return Err(LabError::InvalidConfig(format!(
                "d must be in 1..={MAX_DIM}, got {}",
                self.d
            )));
        }
        if !(self.s > self.d as f64) || !self.s.is_finite() {
            return Err(LabError::InvalidConfig(format!(
                "s must exceed d (s = {}, d = {})",
                self.s, self.d
            )));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(LabError::InvalidConfig(format!(
                "beta must be a finite non-negative number, got {}",
                self.beta
            )));
        }
        if self.short_cutoff < 1 {
            return Err(LabError::InvalidConfig(
                "short_cutoff must be at least 1".into(),
            ));
        }
        if self.max_jump <= self.short_cutoff {
            return Err(LabError::InvalidConfig(format!(
                "max_jump ({}) must exceed short_cutoff ({})",
                self.max_jump, self.short_cutoff
            )));
        }
        // Keep every coordinate sum far from i64 overflow.
        if self.max_jump > 1 << 60 {
            return Err(LabError::InvalidConfig("max_jump above 2^60".into()));
        }
        if let BackendKind::ExactBoxed { half_width } = self.backend {
            if half_width < 1 {
                return Err(LabError::InvalidConfig(
                    "box half-width must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Reads a config from JSON or from `key=value` lines.
    ///
    /// Recognised keys: `d`, `s`, `beta`, `nn_open`, `seed`, `short_cutoff`,
    /// `max_jump`, `backend` (`lazy` or `exact`) and `N` (box half-width).
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        let cfg = if trimmed.starts_with('{') {
            parse_json(trimmed)?
        } else {
            parse_key_values(text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text)
    }

    /// Renders the config as `key=value` lines (the snapshot header format).
    pub fn to_key_values(&self) -> String {
        let (backend, n) = match self.backend {
            BackendKind::ExactBoxed { half_width } => ("exact", Some(half_width)),
            BackendKind::LazyShell => ("lazy", None),
        };
        let mut out = format!(
            "d={}\ns={}\nbeta={}\nnn_open={}\nseed={}\nshort_cutoff={}\nmax_jump={}\nbackend={}\n",
            self.d, self.s, self.beta, self.nn_open, self.seed, self.short_cutoff, self.max_jump, backend
        );
        if let Some(n) = n {
            out.push_str(&format!("N={n}\n"));
        }
        out
    }
}

/// `alpha = s - d`.
pub fn alpha(d: usize, s: f64) -> f64 {
    s - d as f64
}

#[derive(Deserialize)]
struct FlatConfig {
    d: usize,
    s: f64,
    beta: f64,
    #[serde(default)]
    nn_open: bool,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_short_cutoff")]
    short_cutoff: i64,
    #[serde(default = "default_max_jump")]
    max_jump: i64,
    #[serde(default)]
    backend: Option<serde_json::Value>,
    #[serde(default, alias = "n")]
    #[serde(rename = "N")]
    half_width: Option<i64>,
}

fn parse_json(text: &str) -> Result<EnvConfig> {
    let flat: FlatConfig = serde_json::from_str(text)?;
    let backend = match flat.backend {
        None => default_backend(),
        Some(serde_json::Value::String(name)) => backend_from_name(&name, flat.half_width)?,
        Some(other) => serde_json::from_value(other)?,
    };
    Ok(EnvConfig {
        d: flat.d,
        s: flat.s,
        beta: flat.beta,
        nn_open: flat.nn_open,
        seed: flat.seed,
        short_cutoff: flat.short_cutoff,
        max_jump: flat.max_jump,
        backend,
    })
}

fn backend_from_name(name: &str, half_width: Option<i64>) -> Result<BackendKind> {
    match name.to_ascii_lowercase().as_str() {
        "lazy" | "lazy_shell" | "lazyshell" => Ok(BackendKind::LazyShell),
        "exact" | "exact_boxed" | "exactboxed" => {
            let half_width = half_width.ok_or_else(|| {
                LabError::Parse("backend `exact` requires the box half-width N".into())
            })?;
            Ok(BackendKind::ExactBoxed { half_width })
        }
        other => Err(LabError::Parse(format!("unknown backend `{other}`"))),
    }
}

fn parse_key_values(text: &str) -> Result<EnvConfig> {
    let mut d = None;
    let mut s = None;
    let mut beta = None;
    let mut nn_open = false;
    let mut seed = 0u64;
    let mut short_cutoff = DEFAULT_SHORT_CUTOFF;
    let mut max_jump = DEFAULT_MAX_JUMP;
    let mut backend_name = None;
    let mut half_width = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim().trim_start_matches('#').trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            // Free-form comment lines are allowed in headers.
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| LabError::Parse(format!("line {}: bad {what} `{value}`", lineno + 1));
        match key {
            "d" => d = Some(value.parse::<usize>().map_err(|_| bad("d"))?),
            "s" => s = Some(value.parse::<f64>().map_err(|_| bad("s"))?),
            "beta" => beta = Some(value.parse::<f64>().map_err(|_| bad("beta"))?),
            "nn_open" => nn_open = parse_bool(value).ok_or_else(|| bad("nn_open"))?,
            "seed" => seed = value.parse::<u64>().map_err(|_| bad("seed"))?,
            "short_cutoff" => short_cutoff = value.parse::<i64>().map_err(|_| bad("short_cutoff"))?,
            "max_jump" => max_jump = value.parse::<i64>().map_err(|_| bad("max_jump"))?,
            "backend" => backend_name = Some(value.to_string()),
            "N" | "n" => half_width = Some(value.parse::<i64>().map_err(|_| bad("N"))?),
            _ => {}
        }
    }

    let missing = |k: &str| LabError::Parse(format!("missing key `{k}`"));
    let backend = match backend_name {
        Some(name) => backend_from_name(&name, half_width)?,
        None => match half_width {
            Some(n) => BackendKind::ExactBoxed { half_width: n },
            None => default_backend(),
        },
    };
    Ok(EnvConfig {
        d: d.ok_or_else(|| missing("d"))?,
        s: s.ok_or_else(|| missing("s"))?,
        beta: beta.ok_or_else(|| missing("beta"))?,
        nn_open,
        seed,
        short_cutoff,
        max_jump,
        backend,
    })
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_values() {
        assert!((alpha(2, 3.2) - 1.2).abs() < 1e-12);
        assert!((alpha(1, 1.5) - 0.5).abs() < 1e-12);
        assert!((alpha(2, 3.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regimes() {
        assert_eq!(EnvConfig::desk_default(1).regime(), Regime::Stable);
        let mut c = EnvConfig::desk_default(1);
        c.d = 1;
        c.s = 2.5;
        assert_eq!(c.regime(), Regime::Gaussian);
        c.nn_open = false;
        assert_eq!(c.regime(), Regime::Other);
    }

    #[test]
    fn key_value_round_trip() {
        let cfg = EnvConfig {
            backend: BackendKind::ExactBoxed { half_width: 16 },
            ..EnvConfig::desk_default(99)
        };
        let parsed = EnvConfig::parse(&cfg.to_key_values()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn json_forms() {
        let a = EnvConfig::parse(r#"{"d":2,"s":3.2,"beta":1.0,"nn_open":true,"seed":5,"backend":"exact","N":8}"#)
            .unwrap();
        assert_eq!(a.backend, BackendKind::ExactBoxed { half_width: 8 });
        let b = EnvConfig::parse(r#"{"d":2,"s":3.2,"beta":1.0}"#).unwrap();
        assert_eq!(b.backend, BackendKind::LazyShell);
        assert_eq!(b.short_cutoff, DEFAULT_SHORT_CUTOFF);
    }

    #[test]
    fn rejects_invalid() {
        assert!(EnvConfig::parse("d=2\ns=1.5\nbeta=1").is_err());
        assert!(EnvConfig::parse("d=2\ns=3.2").is_err());
        assert!(EnvConfig::parse("d=2\ns=3.2\nbeta=1\nbackend=exact").is_err());
        assert!(EnvConfig::parse("d=2\ns=3.2\nbeta=-1").is_err());
    }
}
