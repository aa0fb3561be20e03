//! Run configuration: defaults, then a `key = value` file, then environment,
//! then command-line flags. Everything is validated before any solver runs.
//!
//! File format: one `key = value` per line, `#` starts a comment. Keys are
//! `dimension`, `exponent`, `grid`, `lambda_max`, `lambda_step`, `lmax`,
//! `tol`, `seed`, `out`, `threads`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plasmaball::ProblemParams;
use serde::Serialize;
use thiserror::Error;

pub const ENV_OUT: &str = "PLASMABALL_OUT";
pub const ENV_THREADS: &str = "PLASMABALL_THREADS";

/// Below this the σ₁ solves and the free boundary are not resolved well
/// enough for any check to mean something.
pub const MIN_GRID: usize = 32;
pub const MAX_GRID: usize = 1 << 16;
pub const MAX_POINTS: usize = 10_000;
pub const MAX_LMAX: usize = 8;
pub const DEFAULT_CAP: f64 = 5.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Syntax { path: PathBuf, line: usize, msg: String },
    #[error("invalid value for {key}: {msg}")]
    Invalid { key: &'static str, msg: String },
}

/// Unresolved settings; `None` means "not given at this layer".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dimension: Option<usize>,
    pub exponent: Option<f64>,
    pub grid: Option<usize>,
    pub lambda_max: Option<f64>,
    pub lambda_step: Option<f64>,
    pub lmax: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Overrides {
    /// Fields set in `other` win.
    pub fn merge(self, other: Overrides) -> Overrides {
        Overrides {
            dimension: other.dimension.or(self.dimension),
            exponent: other.exponent.or(self.exponent),
            grid: other.grid.or(self.grid),
            lambda_max: other.lambda_max.or(self.lambda_max),
            lambda_step: other.lambda_step.or(self.lambda_step),
            lmax: other.lmax.or(self.lmax),
            tol: other.tol.or(self.tol),
            seed: other.seed.or(self.seed),
            out: other.out.or(self.out),
            threads: other.threads.or(self.threads),
        }
    }

    pub fn from_file(path: &Path) -> Result<Overrides, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Overrides, ConfigError> {
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ConfigError::Syntax {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if seen.insert(k.to_string(), v.to_string()).is_some() {
                return Err(err(format!("duplicate key `{k}`")));
            }
        }
        let mut o = Overrides::default();
        for (k, v) in &seen {
            let bad = |e: &dyn std::fmt::Display| ConfigError::Syntax {
                path: path.to_path_buf(),
                line: 0,
                msg: format!("key `{k}`: cannot parse `{v}`: {e}"),
            };
            match k.as_str() {
                "dimension" => o.dimension = Some(v.parse().map_err(|e| bad(&e))?),
                "exponent" => o.exponent = Some(v.parse().map_err(|e| bad(&e))?),
                "grid" => o.grid = Some(v.parse().map_err(|e| bad(&e))?),
                "lambda_max" => o.lambda_max = Some(v.parse().map_err(|e| bad(&e))?),
                "lambda_step" => o.lambda_step = Some(v.parse().map_err(|e| bad(&e))?),
                "lmax" => o.lmax = Some(v.parse().map_err(|e| bad(&e))?),
                "tol" => o.tol = Some(v.parse().map_err(|e| bad(&e))?),
                "seed" => o.seed = Some(v.parse().map_err(|e| bad(&e))?),
                "out" => o.out = Some(PathBuf::from(v)),
                "threads" => o.threads = Some(v.parse().map_err(|e| bad(&e))?),
                _ => {
                    return Err(ConfigError::Syntax {
                        path: path.to_path_buf(),
                        line: 0,
                        msg: format!("unknown key `{k}`"),
                    })
                }
            }
        }
        Ok(o)
    }

    pub fn from_env() -> Result<Overrides, ConfigError> {
        let mut o = Overrides::default();
        if let Ok(v) = std::env::var(ENV_OUT) {
            o.out = Some(PathBuf::from(v));
        }
        if let Ok(v) = std::env::var(ENV_THREADS) {
            o.threads = Some(v.trim().parse().map_err(|e| ConfigError::Invalid {
                key: "threads",
                msg: format!("{ENV_THREADS}={v}: {e}"),
            })?);
        }
        Ok(o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dimension: usize,
    pub exponent: f64,
    pub grid: usize,
    /// Upper end of the λ range; `None` means 5λ₊ for sweeps and 3λ₊ for
    /// `verify`.
    pub lambda_max: Option<f64>,
    /// `None` means 40 points over the range.
    pub lambda_step: Option<f64>,
    pub lmax: usize,
    /// Tolerance of the equation-residual checks (multiplier identity).
    pub tol: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dimension: 2,
            exponent: 2.0,
            grid: 1024,
            lambda_max: None,
            lambda_step: None,
            lmax: plasmaball::spectrum::DEFAULT_LMAX,
            tol: 1e-9,
            seed: 20_240_611,
            out: PathBuf::from("out"),
            threads: None,
        }
    }
}

fn invalid(key: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, msg: msg.into() }
}

impl RunConfig {
    pub fn resolve(o: Overrides) -> Result<RunConfig, ConfigError> {
        let d = RunConfig::default();
        let cfg = RunConfig {
            dimension: o.dimension.unwrap_or(d.dimension),
            exponent: o.exponent.unwrap_or(d.exponent),
            grid: o.grid.unwrap_or(d.grid),
            lambda_max: o.lambda_max.or(d.lambda_max),
            lambda_step: o.lambda_step.or(d.lambda_step),
            lmax: o.lmax.unwrap_or(d.lmax),
            tol: o.tol.unwrap_or(d.tol),
            seed: o.seed.unwrap_or(d.seed),
            out: o.out.unwrap_or(d.out),
            threads: o.threads.or(d.threads),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        ProblemParams::new(self.dimension, self.exponent).map_err(|e| invalid("dimension/exponent", e.to_string()))?;
        if !(MIN_GRID..=MAX_GRID).contains(&self.grid) {
            return Err(invalid("grid", format!("{} not in {MIN_GRID}..={MAX_GRID}", self.grid)));
        }
        if let Some(lm) = self.lambda_max {
            if !(lm.is_finite() && lm >= 0.0) {
                return Err(invalid("lambda_max", format!("{lm} must be finite and >= 0")));
            }
        }
        if let Some(step) = self.lambda_step {
            if !(step.is_finite() && step > 0.0) {
                return Err(invalid("lambda_step", format!("{step} must be finite and > 0")));
            }
            if let Some(lm) = self.lambda_max {
                if lm / step > MAX_POINTS as f64 {
                    return Err(invalid("lambda_step", format!("more than {MAX_POINTS} points")));
                }
            }
        }
        if !(2..=MAX_LMAX).contains(&self.lmax) {
            return Err(invalid("lmax", format!("{} not in 2..={MAX_LMAX}", self.lmax)));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(invalid("tol", format!("{} must be finite and >= 0", self.tol)));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be >= 1"));
        }
        Ok(())
    }

    pub fn params(&self) -> ProblemParams {
        ProblemParams::new(self.dimension, self.exponent).expect("validated")
    }

    /// The λ values of a sweep, given λ₊.
    pub fn lambdas(&self, lambda_plus: f64) -> Vec<f64> {
        let max = self.lambda_max.unwrap_or(DEFAULT_CAP * lambda_plus);
        if max == 0.0 {
            return vec![0.0];
        }
        let count = match self.lambda_step {
            Some(step) => ((max / step).round() as usize).max(1) + 1,
            None => 40,
        };
        plasmaball::branch::lambda_grid(max, count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Overrides, ConfigError> {
        Overrides::parse(s, Path::new("test.conf"))
    }

    #[test]
    fn file_layer_parses_and_merges() {
        let o = parse("# run\ndimension = 3\nexponent=1.5 # subcritical\n\ngrid = 256\n").unwrap();
        let flags = Overrides {
            grid: Some(512),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(o.merge(flags)).unwrap();
        assert_eq!((cfg.dimension, cfg.exponent, cfg.grid), (3, 1.5, 512));
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(parse("grid 12").is_err());
        assert!(parse("grid = 12\ngrid = 13").is_err());
        assert!(parse("colour = red").is_err());
        assert!(parse("grid = many").is_err());
    }

    #[test]
    fn validation_rejects_out_of_range() {
        let bad = [
            Overrides { grid: Some(16), ..Default::default() },
            Overrides { dimension: Some(1), ..Default::default() },
            Overrides { dimension: Some(3), exponent: Some(3.0), ..Default::default() },
            Overrides { exponent: Some(0.5), ..Default::default() },
            Overrides { lmax: Some(1), ..Default::default() },
            Overrides { tol: Some(-1.0), ..Default::default() },
            Overrides { lambda_step: Some(0.0), ..Default::default() },
            Overrides { lambda_max: Some(f64::NAN), ..Default::default() },
            Overrides { threads: Some(0), ..Default::default() },
        ];
        for o in bad {
            assert!(RunConfig::resolve(o.clone()).is_err(), "{o:?}");
        }
        // Zero tolerance is legal; it only makes the affected checks fail.
        assert!(RunConfig::resolve(Overrides { tol: Some(0.0), ..Default::default() }).is_ok());
    }

    #[test]
    fn lambda_ranges() {
        let mut cfg = RunConfig { lambda_max: Some(0.0), ..Default::default() };
        assert_eq!(cfg.lambdas(10.0), vec![0.0]);
        cfg.lambda_max = None;
        let l = cfg.lambdas(10.0);
        assert_eq!(l.len(), 40);
        assert_eq!(*l.last().unwrap(), 50.0);
        cfg.lambda_max = Some(2.0);
        cfg.lambda_step = Some(0.5);
        assert_eq!(cfg.lambdas(10.0), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }
}
