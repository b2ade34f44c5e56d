//! Scenario parameters and the flat `key=value` config format.
//!
//! Gains may be given linearly (`gamma_b=10`) or in dB (`gamma_b_db=10`);
//! everything downstream of the parser is linear. `#` starts a comment and
//! several pairs may share a line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub gamma_b: f64,
    pub gamma_u: f64,
    pub gamma_m: f64,
    pub eps_b: f64,
    pub eps_u: f64,
    pub eps_m: f64,
    /// Number of frequency channels.
    pub f: usize,
    /// Channels reserved for URLLC under orthogonal slicing.
    pub f_u: usize,
    /// Minislots per slot.
    pub s: usize,
    pub a_u: f64,
    /// mMTC rate in bits per symbol.
    pub r_m: f64,
    /// Symbols per resource. Carried for completeness, unused by the
    /// asymptotic rate model.
    pub n_per_resource: Option<u64>,
}

pub const VALID_KEYS: &[&str] = &[
    "gamma_b", "gamma_b_db", "gamma_u", "gamma_u_db", "gamma_m", "gamma_m_db", "eps_b", "eps_u",
    "eps_m", "f", "f_u", "s", "a_u", "r_m", "n_per_resource",
];

const REQUIRED: &[&str] = &["gamma_b", "gamma_u", "gamma_m", "eps_b", "eps_u", "eps_m", "f", "s", "a_u", "r_m"];

/// URLLC target substituted by fast mode.
pub const FAST_EPS_U: f64 = 1e-3;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl ScenarioConfig {
    /// Checks every invariant. `relaxed` allows `eps_u == eps_b`, which fast
    /// mode needs when the eMBB target is itself 1e-3.
    pub fn validate(&self, relaxed: bool) -> Result<()> {
        let fail = |m: String| Err(Error::Config { line: 0, message: m });
        for (name, g) in [("gamma_b", self.gamma_b), ("gamma_u", self.gamma_u), ("gamma_m", self.gamma_m)] {
            if !(g > 0.0 && g.is_finite()) {
                return fail(format!("{name} must be > 0, got {g}"));
            }
        }
        for (name, e) in [("eps_b", self.eps_b), ("eps_u", self.eps_u), ("eps_m", self.eps_m)] {
            if !(e > 0.0 && e < 1.0) {
                return fail(format!("{name} must lie in (0,1), got {e}"));
            }
        }
        if relaxed {
            if self.eps_u > self.eps_b {
                return fail("eps_u must be <= eps_b".into());
            }
        } else if self.eps_u >= self.eps_b {
            return fail("eps_u must be < eps_b".into());
        }
        if self.eps_b >= self.eps_m {
            return fail("eps_b must be < eps_m".into());
        }
        if self.f == 0 {
            return fail("f must be >= 1".into());
        }
        if self.f_u > self.f {
            return fail("f_u must be <= f".into());
        }
        if self.s == 0 {
            return fail("s must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.a_u) {
            return fail(format!("a_u must lie in [0,1], got {}", self.a_u));
        }
        if !(self.r_m > 0.0 && self.r_m.is_finite()) {
            return fail(format!("r_m must be > 0, got {}", self.r_m));
        }
        Ok(())
    }

    /// Copy with the URLLC target replaced for smoke runs.
    pub fn fast(&self) -> Self {
        ScenarioConfig { eps_u: FAST_EPS_U, ..self.clone() }
    }

    /// Linear-valued `key=value` lines that parse back to this config.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "gamma_b={:?}", self.gamma_b);
        let _ = writeln!(s, "gamma_u={:?}", self.gamma_u);
        let _ = writeln!(s, "gamma_m={:?}", self.gamma_m);
        let _ = writeln!(s, "eps_b={:?}", self.eps_b);
        let _ = writeln!(s, "eps_u={:?}", self.eps_u);
        let _ = writeln!(s, "eps_m={:?}", self.eps_m);
        let _ = writeln!(s, "f={}", self.f);
        let _ = writeln!(s, "f_u={}", self.f_u);
        let _ = writeln!(s, "s={}", self.s);
        let _ = writeln!(s, "a_u={:?}", self.a_u);
        let _ = writeln!(s, "r_m={:?}", self.r_m);
        if let Some(n) = self.n_per_resource {
            let _ = writeln!(s, "n_per_resource={n}");
        }
        s
    }
}

/// Parses a config. With `fast`, `eps_u` is replaced by [`FAST_EPS_U`]
/// before validation and the `eps_u < eps_b` ordering is relaxed to `<=`.
pub fn parse_config(text: &str, fast: bool) -> Result<ScenarioConfig> {
    let mut seen: BTreeMap<&'static str, (f64, usize)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        for token in content.split_whitespace() {
            let (key, value) = token.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected key=value, got `{token}`"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            let canonical = VALID_KEYS.iter().find(|k| **k == key).ok_or_else(|| Error::Config {
                line,
                message: format!("unknown key `{key}`; valid keys: {}", VALID_KEYS.join(", ")),
            })?;
            let v: f64 = value.trim().parse().map_err(|_| Error::Config {
                line,
                message: format!("`{key}` expects a number, got `{value}`"),
            })?;
            let (base, linear) = match canonical.strip_suffix("_db") {
                Some(base) => (VALID_KEYS.iter().find(|k| **k == base).copied().unwrap_or(base), db_to_linear(v)),
                None => (*canonical, v),
            };
            if let Some((_, first)) = seen.get(base) {
                return Err(Error::Config {
                    line,
                    message: format!("`{base}` already set on line {first}"),
                });
            }
            seen.insert(base, (linear, line));
        }
    }
    for key in REQUIRED {
        if !seen.contains_key(key) {
            return Err(Error::Config { line: 0, message: format!("missing required key `{key}`") });
        }
    }
    let get = |k: &str| seen.get(k).map(|(v, _)| *v);
    let count = |k: &str| -> Result<Option<usize>> {
        match seen.get(k) {
            None => Ok(None),
            Some((v, line)) if *v >= 0.0 && v.fract() == 0.0 => {
                let _ = line;
                Ok(Some(*v as usize))
            }
            Some((v, line)) => Err(Error::Config {
                line: *line,
                message: format!("`{k}` must be a nonnegative integer, got {v}"),
            }),
        }
    };
    let mut cfg = ScenarioConfig {
        gamma_b: get("gamma_b").unwrap_or_default(),
        gamma_u: get("gamma_u").unwrap_or_default(),
        gamma_m: get("gamma_m").unwrap_or_default(),
        eps_b: get("eps_b").unwrap_or_default(),
        eps_u: get("eps_u").unwrap_or_default(),
        eps_m: get("eps_m").unwrap_or_default(),
        f: count("f")?.unwrap_or(0),
        f_u: count("f_u")?.unwrap_or(0),
        s: count("s")?.unwrap_or(0),
        a_u: get("a_u").unwrap_or_default(),
        r_m: get("r_m").unwrap_or_default(),
        n_per_resource: count("n_per_resource")?.map(|n| n as u64),
    };
    if fast {
        cfg.eps_u = FAST_EPS_U;
    }
    cfg.validate(fast).map_err(|e| match e {
        Error::Config { message, .. } => {
            // Point at the line of the first key the message names.
            let line = message
                .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .find_map(|w| seen.get(w).map(|(_, l)| *l))
                .unwrap_or(0);
            Error::Config { line, message }
        }
        other => other,
    })?;
    Ok(cfg)
}
