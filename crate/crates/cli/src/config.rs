//! Run configuration: flags, JSON config files, and their merge.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use bcheun::oracle::DEFAULT_POINTS;
use bcheun::quantize::DEFAULT_DEGREE_CAP;

use crate::CliError;

pub const DEFAULT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Quasi-exact energies and the potentials that carry them.
    Spectrum,
    /// Polynomial and finite-difference radial functions side by side.
    Wavefunction,
    /// Roots of the turning-point quartic for an arbitrary system.
    TurningPoints,
    /// The full acceptance suite.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Inclusive index range, written `3` or `0..2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RangeRepr", into = "RangeRepr")]
pub struct IndexRange {
    pub start: u32,
    pub end: u32,
}

impl IndexRange {
    pub fn single(v: u32) -> Self {
        Self { start: v, end: v }
    }

    pub fn is_single(&self) -> bool {
        self.start == self.end
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> {
        self.start..=self.end
    }
}

impl fmt::Display for IndexRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_single() {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}..{}", self.start, self.end)
        }
    }
}

impl FromStr for IndexRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| format!("`{s}` is not an index or an `a..b` range"))
        };
        let range = match s.split_once("..") {
            Some((a, b)) => Self {
                start: parse(a)?,
                end: parse(b)?,
            },
            None => Self::single(parse(s)?),
        };
        if range.start > range.end {
            return Err(format!("range `{s}` is empty"));
        }
        Ok(range)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    Single(u32),
    Text(String),
}

impl TryFrom<RangeRepr> for IndexRange {
    type Error = String;

    fn try_from(r: RangeRepr) -> Result<Self, String> {
        match r {
            RangeRepr::Single(v) => Ok(Self::single(v)),
            RangeRepr::Text(s) => s.parse(),
        }
    }
}

impl From<IndexRange> for RangeRepr {
    fn from(r: IndexRange) -> Self {
        if r.is_single() {
            RangeRepr::Single(r.start)
        } else {
            RangeRepr::Text(r.to_string())
        }
    }
}

/// A fully resolved run. This is also the `config` object of JSON output,
/// so a JSON result file can be fed back with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: IndexRange,
    pub l: IndexRange,
    pub alpha: f64,
    pub k: f64,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    /// Which root of the family `wavefunction` plots, in ascending `b`.
    pub branch: usize,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub grid_points: usize,
    pub tol: f64,
    pub degree_cap: usize,
    pub verify: bool,
    pub format: Format,
    pub out: Option<PathBuf>,
}

/// Same fields as [`RunConfig`], all optional; what a config file may hold.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialConfig {
    pub command: Option<Command>,
    pub n: Option<IndexRange>,
    pub l: Option<IndexRange>,
    pub alpha: Option<f64>,
    pub k: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub branch: Option<usize>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub tol: Option<f64>,
    pub degree_cap: Option<usize>,
    pub verify: Option<bool>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

/// Quasi-exact bound states of U = -alpha/r + beta r + k r^2.
///
/// All quantities are in scaled units: with reduced mass M, the physical
/// energy is E = (hbar^2 / 2M) * 2 epsilon and the physical couplings are
/// (hbar^2 / 2M) times alpha, beta, k.
#[derive(Debug, Parser)]
#[command(name = "bcheun", version, about, allow_negative_numbers = true)]
pub struct Cli {
    /// What to compute. May instead come from the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Polynomial degree, `3` or an inclusive range `0..4`.
    #[arg(long)]
    pub n: Option<IndexRange>,
    /// Angular momentum, `1` or an inclusive range `0..2`.
    #[arg(long)]
    pub l: Option<IndexRange>,
    /// Coulomb strength, non-negative.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Harmonic coefficient, positive.
    #[arg(long)]
    pub k: Option<f64>,
    /// Linear coefficient (turning-points only).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Energy (turning-points only).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Root index within the family (wavefunction only).
    #[arg(long)]
    pub branch: Option<usize>,
    /// Inner edge of the finite-difference grid.
    #[arg(long)]
    pub r_min: Option<f64>,
    /// Outer edge of the finite-difference grid.
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Finite-difference grid size.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Relative tolerance applied by --verify.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Largest degree accepted before refusing to build the constraint.
    #[arg(long)]
    pub degree_cap: Option<usize>,
    /// Cross-check every result against the finite-difference solver.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the table here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// JSON config, or a previous JSON result to replay. Flags win.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// Read a config file. A JSON result document is accepted too, in which case
/// its `config` member is used.
pub fn load_file(path: &Path) -> Result<PartialConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_config_text(text: &str) -> Result<PartialConfig, String> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if let Some(obj) = value.as_object_mut() {
        if obj.contains_key("results") {
            if let Some(inner) = obj.remove("config") {
                value = inner;
            }
        }
    }
    serde_json::from_value(value).map_err(|e| e.to_string())
}

impl Cli {
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => load_file(p)?,
            None => PartialConfig::default(),
        };
        let cfg = RunConfig {
            command: self.command.or(file.command).ok_or_else(|| {
                CliError::Config(
                    "no command given (spectrum, wavefunction, turning-points, verify)".into(),
                )
            })?,
            n: self.n.or(file.n).unwrap_or(IndexRange::single(0)),
            l: self.l.or(file.l).unwrap_or(IndexRange::single(0)),
            alpha: self.alpha.or(file.alpha).unwrap_or(0.0),
            k: self.k.or(file.k).unwrap_or(1.0),
            beta: self.beta.or(file.beta),
            epsilon: self.epsilon.or(file.epsilon),
            branch: self.branch.or(file.branch).unwrap_or(0),
            r_min: self.r_min.or(file.r_min),
            r_max: self.r_max.or(file.r_max),
            grid_points: self
                .grid_points
                .or(file.grid_points)
                .unwrap_or(DEFAULT_POINTS),
            tol: self.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
            degree_cap: self
                .degree_cap
                .or(file.degree_cap)
                .unwrap_or(DEFAULT_DEGREE_CAP),
            verify: self.verify || file.verify.unwrap_or(false),
            format: self.format.or(file.format).unwrap_or(Format::Csv),
            out: self.out.or(file.out),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.k > 0.0) || !self.k.is_finite() {
            return bad(format!("k must be positive and finite, got {}", self.k));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad(format!(
                "alpha must be non-negative and finite, got {}",
                self.alpha
            ));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.grid_points < 16 {
            return bad(format!(
                "grid-points must be at least 16, got {}",
                self.grid_points
            ));
        }
        for (name, v) in [("r-min", self.r_min), ("r-max", self.r_max)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if let (Some(a), Some(b)) = (self.r_min, self.r_max) {
            if !(a < b) {
                return bad(format!("r-min {a} must be below r-max {b}"));
            }
        }
        if self.n.end as usize > self.degree_cap {
            return bad(format!(
                "degree {} exceeds the cap {}; raise it with --degree-cap",
                self.n.end, self.degree_cap
            ));
        }
        let turning = self.command == Command::TurningPoints;
        if !turning && (self.beta.is_some() || self.epsilon.is_some()) {
            return bad("--beta and --epsilon apply to turning-points only; \
                        for spectra beta is fixed by the quasi-exactness condition"
                .into());
        }
        if turning {
            if self.beta.is_none() || self.epsilon.is_none() {
                return bad("turning-points needs --beta and --epsilon".into());
            }
            if !self.beta.unwrap().is_finite() || !self.epsilon.unwrap().is_finite() {
                return bad("beta and epsilon must be finite".into());
            }
        }
        if matches!(self.command, Command::Wavefunction | Command::TurningPoints)
            && !(self.n.is_single() && self.l.is_single())
        {
            return bad("this command takes a single n and l, not a range".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges() {
        assert_eq!("3".parse::<IndexRange>().unwrap(), IndexRange::single(3));
        let r: IndexRange = "0..2".parse().unwrap();
        assert_eq!(r.iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!("2..0".parse::<IndexRange>().is_err());
        assert!("a..b".parse::<IndexRange>().is_err());
        assert!("-1".parse::<IndexRange>().is_err());
    }

    #[test]
    fn range_serde_forms() {
        let r: IndexRange = serde_json::from_str("\"1..4\"").unwrap();
        assert_eq!((r.start, r.end), (1, 4));
        let r: IndexRange = serde_json::from_str("2").unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), "2");
        assert_eq!(
            serde_json::to_string(&IndexRange { start: 0, end: 3 }).unwrap(),
            "\"0..3\""
        );
        assert!(serde_json::from_str::<IndexRange>("\"5..1\"").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("bcheun-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        std::fs::write(
            &path,
            r#"{"command":"spectrum","alpha":2.0,"l":"0..1","k":4.0}"#,
        )
        .unwrap();
        let cli = Cli::parse_from([
            "bcheun",
            "--config",
            path.to_str().unwrap(),
            "--alpha",
            "0.5",
        ]);
        let cfg = cli.resolve().unwrap();
        assert_eq!(cfg.command, Command::Spectrum);
        assert_eq!(cfg.alpha, 0.5);
        assert_eq!(cfg.k, 4.0);
        assert_eq!(cfg.l, IndexRange { start: 0, end: 1 });
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config_text(r#"{"alpah": 1}"#).is_err());
    }

    #[test]
    fn result_document_unwrapped() {
        let p =
            parse_config_text(r#"{"config":{"command":"verify"},"results":[],"diagnostics":{}}"#)
                .unwrap();
        assert_eq!(p.command, Some(Command::Verify));
    }

    #[test]
    fn validation() {
        let ok = |args: &[&str]| {
            let mut v = vec!["bcheun"];
            v.extend_from_slice(args);
            Cli::parse_from(v).resolve()
        };
        assert!(ok(&["spectrum", "--k", "0"]).is_err());
        assert!(ok(&["spectrum", "--alpha", "-1"]).is_err());
        assert!(ok(&["spectrum", "--tol", "0"]).is_err());
        assert!(ok(&["spectrum", "--beta", "1"]).is_err());
        assert!(ok(&["spectrum", "--n", "40"]).is_err());
        assert!(ok(&["spectrum", "--n", "40", "--degree-cap", "40"]).is_ok());
        assert!(ok(&["spectrum", "--r-min", "2", "--r-max", "1"]).is_err());
        assert!(ok(&["turning-points", "--epsilon", "1"]).is_err());
        assert!(ok(&["turning-points", "--epsilon", "1", "--beta", "-2"]).is_ok());
        assert!(ok(&["wavefunction", "--l", "0..1"]).is_err());
        assert!(ok(&[]).is_err());
    }
}
