//! `key = value` run configuration files.
//!
//! ```text
//! # qubit sweep
//! dim = 2
//! lengths = 200, 500
//! jitters = 0, 1e-12, 4e-12
//! methods = LS, MLE
//! sample = qubit-grid
//! ```
//!
//! Lists are comma separated. `#` starts a comment. Unknown and repeated
//! keys are rejected.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::estimate::Method;
use crate::linalg::DensityMatrix;
use crate::sampling::{bloch_state, qubit_phase_state, qutrit_phase_state, qutrit_state};
use crate::sweep::{log_spaced, SampleKind, SampleSpec, SweepConfig, SweepError};

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{key}: {message}")]
    Config { key: String, message: String },
}

impl ConfigFileError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: message.into(),
        }
    }

    fn config(key: &str, message: impl Into<String>) -> Self {
        Self::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl From<SweepError> for ConfigFileError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Config { field, message } => Self::Config { key: field, message },
            other => Self::config("config", other.to_string()),
        }
    }
}

/// Input state for the single-state commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    Bloch { r: f64, theta: f64, phi: f64 },
    Qutrit { p: f64, phi12: f64, phi13: f64 },
    QubitPhase { phi: f64 },
    QutritPhase { phi12: f64, phi13: f64 },
    Mixed { dim: usize },
}

impl StateSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Bloch { .. } | Self::QubitPhase { .. } => 2,
            Self::Qutrit { .. } | Self::QutritPhase { .. } => 3,
            Self::Mixed { dim } => *dim,
        }
    }

    pub fn build(&self) -> DensityMatrix {
        match *self {
            Self::Bloch { r, theta, phi } => bloch_state(r, theta, phi),
            Self::Qutrit { p, phi12, phi13 } => qutrit_state(p, phi12, phi13),
            Self::QubitPhase { phi } => qubit_phase_state(phi),
            Self::QutritPhase { phi12, phi13 } => qutrit_phase_state(phi12, phi13),
            Self::Mixed { dim } => DensityMatrix::maximally_mixed(dim),
        }
    }
}

impl FromStr for StateSpec {
    type Err = String;

    /// `bloch:r,theta,phi`, `qutrit:p,phi12,phi13`, `phase:phi`,
    /// `qutrit-phase:phi12,phi13`, `mixed:d`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.trim().is_empty() {
            vec![]
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", a.trim())))
                .collect::<Result<_, _>>()?
        };
        let want = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(format!("`{kind}` takes {n} values, got {}", nums.len()))
            }
        };
        let spec = match kind.trim() {
            "bloch" => {
                want(3)?;
                if !(0.0..=1.0).contains(&nums[0]) {
                    return Err(format!("bloch radius {} outside [0, 1]", nums[0]));
                }
                Self::Bloch { r: nums[0], theta: nums[1], phi: nums[2] }
            }
            "qutrit" => {
                want(3)?;
                if !(0.0..=1.0).contains(&nums[0]) {
                    return Err(format!("mixing weight {} outside [0, 1]", nums[0]));
                }
                Self::Qutrit { p: nums[0], phi12: nums[1], phi13: nums[2] }
            }
            "phase" => {
                want(1)?;
                Self::QubitPhase { phi: nums[0] }
            }
            "qutrit-phase" => {
                want(2)?;
                Self::QutritPhase { phi12: nums[0], phi13: nums[1] }
            }
            "mixed" => {
                want(1)?;
                let d = nums[0];
                if d.fract() != 0.0 || !(2.0..=3.0).contains(&d) {
                    return Err(format!("mixed dimension must be 2 or 3, got {d}"));
                }
                Self::Mixed { dim: d as usize }
            }
            other => return Err(format!("unknown state kind `{other}`")),
        };
        Ok(spec)
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bloch { r, theta, phi } => write!(f, "bloch:{r},{theta},{phi}"),
            Self::Qutrit { p, phi12, phi13 } => write!(f, "qutrit:{p},{phi12},{phi13}"),
            Self::QubitPhase { phi } => write!(f, "phase:{phi}"),
            Self::QutritPhase { phi12, phi13 } => write!(f, "qutrit-phase:{phi12},{phi13}"),
            Self::Mixed { dim } => write!(f, "mixed:{dim}"),
        }
    }
}

/// Everything a run needs: sweep axes plus the single-state settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub sweep: SweepConfig,
    pub state: Option<StateSpec>,
    pub full_scale: bool,
}

impl RunConfig {
    /// The input state, or a default pure state of the configured dimension.
    pub fn state_or_default(&self) -> StateSpec {
        self.state.unwrap_or(match self.sweep.base.dim {
            3 => StateSpec::QutritPhase { phi12: 0.0, phi13: 0.0 },
            _ => StateSpec::Bloch { r: 1.0, theta: std::f64::consts::FRAC_PI_2, phi: 0.0 },
        })
    }

    /// Switches to the full-size sample of the configured kind.
    pub fn apply_full_scale(&mut self) {
        self.full_scale = true;
        self.sweep.sample.size = self.sweep.sample.kind.full_size();
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

fn number<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigFileError> {
    v.parse::<T>()
        .map_err(|_| ConfigFileError::parse(line, format!("{key}: `{v}` is not a valid number")))
}

fn list<T: FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>, ConfigFileError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| number(line, key, s))
        .collect()
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool, ConfigFileError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigFileError::parse(line, format!("{key}: `{v}` is not a boolean"))),
    }
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigFileError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigFileError::config(key, format!("must be > 0, got {x}")))
    }
}

fn nonnegative(key: &str, x: f64) -> Result<f64, ConfigFileError> {
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigFileError::config(key, format!("must be >= 0, got {x}")))
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigFileError> {
    let mut cfg = RunConfig::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut sample_kind: Option<SampleKind> = None;
    let mut sample_size: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigFileError::parse(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigFileError::parse(line, "missing key"));
        }
        if value.is_empty() {
            return Err(ConfigFileError::parse(line, format!("{key}: missing value")));
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigFileError::config(key, format!("repeated on line {line}")));
        }
        let s = &mut cfg.sweep;
        match key {
            "dim" => {
                let d: usize = number(line, key, value)?;
                if !(2..=3).contains(&d) {
                    return Err(ConfigFileError::config(key, format!("must be 2 or 3, got {d}")));
                }
                s.base.dim = d;
            }
            "sigma0" => s.base.sigma0 = positive(key, number(line, key, value)?)?,
            "tau" => s.base.tau = positive(key, number(line, key, value)?)?,
            "beta" => s.base.beta = nonnegative(key, number(line, key, value)?)?,
            "photons" => s.base.photons = positive(key, number(line, key, value)?)?,
            "length" => s.base.length = nonnegative(key, number(line, key, value)?)?,
            "sigma_d" => s.base.sigma_d = nonnegative(key, number(line, key, value)?)?,
            "lengths" | "log_lengths" => {
                if seen.contains("lengths") && seen.contains("log_lengths") {
                    return Err(ConfigFileError::config(key, "lengths and log_lengths are mutually exclusive"));
                }
                if key == "lengths" {
                    s.lengths = list(line, key, value)?;
                    for &l in &s.lengths {
                        nonnegative(key, l)?;
                    }
                } else {
                    let v: Vec<f64> = list(line, key, value)?;
                    if v.len() != 3 || v[2].fract() != 0.0 {
                        return Err(ConfigFileError::config(key, "expects `start, stop, count`"));
                    }
                    s.lengths = log_spaced(v[0], v[1], v[2] as usize)?;
                }
                if s.lengths.is_empty() {
                    return Err(ConfigFileError::config(key, "must not be empty"));
                }
            }
            "jitters" => {
                s.jitters = list(line, key, value)?;
                for &j in &s.jitters {
                    nonnegative(key, j)?;
                }
                if s.jitters.is_empty() {
                    return Err(ConfigFileError::config(key, "must not be empty"));
                }
            }
            "methods" => {
                s.methods = value
                    .split(',')
                    .map(str::trim)
                    .filter(|m| !m.is_empty())
                    .map(|m| m.parse::<Method>().map_err(|e| ConfigFileError::config(key, e.to_string())))
                    .collect::<Result<_, _>>()?;
                if s.methods.is_empty() {
                    return Err(ConfigFileError::config(key, "must not be empty"));
                }
            }
            "sample" => {
                sample_kind = Some(value.parse::<SampleKind>().map_err(|e| ConfigFileError::config(key, e.to_string()))?)
            }
            "sample_size" => {
                let n: usize = number(line, key, value)?;
                if n == 0 {
                    return Err(ConfigFileError::config(key, "must be >= 1"));
                }
                sample_size = Some(n);
            }
            "grid_points" => s.grid_points = number(line, key, value)?,
            "window_widths" => s.window_widths = positive(key, number(line, key, value)?)?,
            "restarts" => s.restarts = number(line, key, value)?,
            "seed" => s.seed = number(line, key, value)?,
            "workers" => s.workers = number(line, key, value)?,
            "timing" => s.timing = boolean(line, key, value)?,
            "full_scale" => cfg.full_scale = boolean(line, key, value)?,
            "state" => {
                cfg.state = Some(value.parse::<StateSpec>().map_err(|e| ConfigFileError::config(key, e))?)
            }
            _ => return Err(ConfigFileError::config(key, format!("unknown key on line {line}"))),
        }
    }

    let kind = sample_kind.unwrap_or_else(|| SampleKind::default_for_dim(cfg.sweep.base.dim));
    let size = sample_size.unwrap_or(if cfg.full_scale {
        kind.full_size()
    } else {
        kind.default_size()
    });
    cfg.sweep.sample = SampleSpec::new(kind, size);
    if let Some(state) = cfg.state {
        if state.dim() != cfg.sweep.base.dim {
            return Err(ConfigFileError::config(
                "state",
                format!("{state} has dim {}, config has dim {}", state.dim(), cfg.sweep.base.dim),
            ));
        }
    }
    cfg.sweep.validate()?;
    Ok(cfg)
}
