//! Run configuration: a versioned JSON file plus command-line overrides.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tvbound::measures::MeasureSpec;
use tvbound::moments::basis_len;
use tvbound::{RelaxationSettings, SolverSettings};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<tvbound::TvError> for ConfigError {
    fn from(e: tvbound::TvError) -> Self {
        ConfigError(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Pretty,
}

/// Inclusive level range written `A..B` (or a single level `A`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Levels {
    pub first: usize,
    pub last: usize,
}

impl Levels {
    pub fn range(&self) -> RangeInclusive<usize> {
        self.first..=self.last
    }
}

impl Default for Levels {
    fn default() -> Self {
        Levels { first: 1, last: 4 }
    }
}

impl FromStr for Levels {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad level `{t}` in `{s}`"))
        };
        let (first, last) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let n = parse(s)?;
                (n, n)
            }
        };
        if first == 0 || first > last {
            return Err(format!("level range `{s}` must satisfy 1 <= A <= B"));
        }
        Ok(Levels { first, last })
    }
}

impl fmt::Display for Levels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

impl Serialize for Levels {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Levels {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Single(usize),
            Pair([usize; 2]),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Single(n) => format!("{n}").parse().map_err(serde::de::Error::custom),
            Raw::Pair([a, b]) => format!("{a}..{b}").parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverSettings::default();
        SolverSection {
            tol: s.tol,
            max_iter: s.max_iter,
        }
    }
}

/// On-disk schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    pub mu: MeasureSpec,
    #[serde(default)]
    pub nu: Option<MeasureSpec>,
    #[serde(default)]
    pub levels: Levels,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default = "yes")]
    pub scale: bool,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub normalized: bool,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
}

fn yes() -> bool {
    true
}

fn default_rank_tol() -> f64 {
    tvbound::extraction::DEFAULT_RANK_TOL
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub levels: Option<Levels>,
    pub tol: Option<f64>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub no_scale: bool,
    pub normalized: bool,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Sample draws already materialized with `seed`.
    pub mu: MeasureSpec,
    pub nu: Option<MeasureSpec>,
    pub levels: Levels,
    pub relaxation: RelaxationSettings,
    pub format: Format,
    pub seed: u64,
    pub normalized: bool,
    pub rank_tol: f64,
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn load(path: &Path, over: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, over)
    }

    pub fn from_json(text: &str, over: &Overrides) -> Result<Self, ConfigError> {
        let file: ConfigFile = serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))?;
        Self::from_file(file, over)
    }

    pub fn from_file(file: ConfigFile, over: &Overrides) -> Result<Self, ConfigError> {
        if file.version != SCHEMA_VERSION {
            return Err(ConfigError(format!(
                "unsupported config version {} (expected {SCHEMA_VERSION})",
                file.version
            )));
        }
        let levels = over.levels.unwrap_or(file.levels);
        let tol = over.tol.unwrap_or(file.solver.tol);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(ConfigError(format!("solver tolerance {tol} outside (0, 1)")));
        }
        if file.solver.max_iter == 0 {
            return Err(ConfigError("solver max_iter must be positive".into()));
        }
        if !(file.rank_tol > 0.0 && file.rank_tol < 1.0) {
            return Err(ConfigError(format!("rank_tol {} outside (0, 1)", file.rank_tol)));
        }
        let seed = over.seed.unwrap_or(file.seed);
        let prepare = |spec: &MeasureSpec| -> Result<MeasureSpec, ConfigError> {
            spec.validate()?;
            Ok(spec.materialize(seed)?)
        };
        let mu = prepare(&file.mu)?;
        let nu = file.nu.as_ref().map(prepare).transpose()?;
        if let Some(nu) = &nu {
            if nu.dim() != mu.dim() {
                return Err(ConfigError(format!(
                    "mu has dimension {} but nu has dimension {}",
                    mu.dim(),
                    nu.dim()
                )));
            }
        }

        let needed = 100 * basis_len(mu.dim(), 2 * levels.last);
        let mut warnings = Vec::new();
        for (name, spec) in std::iter::once(("mu", &mu)).chain(nu.as_ref().map(|s| ("nu", s))) {
            for count in sample_counts(spec) {
                if count < needed {
                    warnings.push(format!(
                        "{name}: empirical component has {count} samples, fewer than {needed} (100 per moment up to degree {})",
                        2 * levels.last
                    ));
                }
            }
        }

        Ok(RunConfig {
            mu,
            nu,
            levels,
            relaxation: RelaxationSettings {
                solver: SolverSettings {
                    tol,
                    max_iter: file.solver.max_iter,
                },
                scale: file.scale && !over.no_scale,
            },
            format: over.format.unwrap_or(file.format),
            seed,
            normalized: file.normalized || over.normalized,
            rank_tol: file.rank_tol,
            warnings,
        })
    }

    pub fn nu(&self) -> Result<&MeasureSpec, ConfigError> {
        self.nu
            .as_ref()
            .ok_or_else(|| ConfigError("this command needs both `mu` and `nu`".into()))
    }

    /// Distances are on the [0, 2] scale unless normalized.
    pub fn distance(&self, v: f64) -> f64 {
        if self.normalized {
            0.5 * v
        } else {
            v
        }
    }
}

fn sample_counts(spec: &MeasureSpec) -> Vec<usize> {
    match spec {
        MeasureSpec::Empirical { samples: Some(s), .. } => vec![s.len()],
        MeasureSpec::Mixture { components } => components.iter().flat_map(|c| sample_counts(&c.measure)).collect(),
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_syntax() {
        assert_eq!("1..4".parse::<Levels>().unwrap(), Levels { first: 1, last: 4 });
        assert_eq!("2..=3".parse::<Levels>().unwrap(), Levels { first: 2, last: 3 });
        assert_eq!("3".parse::<Levels>().unwrap(), Levels { first: 3, last: 3 });
        assert!("0..2".parse::<Levels>().is_err());
        assert!("4..1".parse::<Levels>().is_err());
        assert!("a..b".parse::<Levels>().is_err());
    }

    #[test]
    fn overrides_win() {
        let text = r#"{"version": 1, "levels": "1..2", "mu": {"type": "gaussian", "mean": 0, "stddev": 1},
                       "nu": {"type": "gaussian", "mean": 1, "stddev": 1}}"#;
        let over = Overrides {
            levels: Some("3..3".parse().unwrap()),
            tol: Some(1e-6),
            no_scale: true,
            ..Overrides::default()
        };
        let cfg = RunConfig::from_json(text, &over).unwrap();
        assert_eq!(cfg.levels, Levels { first: 3, last: 3 });
        assert_eq!(cfg.relaxation.solver.tol, 1e-6);
        assert!(!cfg.relaxation.scale);
        assert_eq!(cfg.format, Format::Csv);
    }

    #[test]
    fn rejects_bad_version_and_fields() {
        let bad = r#"{"version": 2, "mu": {"type": "gaussian", "mean": 0, "stddev": 1}}"#;
        assert!(RunConfig::from_json(bad, &Overrides::default()).is_err());
        let unknown = r#"{"version": 1, "mu": {"type": "gaussian", "mean": 0, "stddev": 1}, "colour": 3}"#;
        assert!(RunConfig::from_json(unknown, &Overrides::default()).is_err());
    }

    #[test]
    fn small_samples_warn() {
        let text = r#"{"version": 1, "levels": "1..2",
                       "mu": {"type": "empirical", "draw": {"from": {"type": "gaussian", "mean": 0, "stddev": 1}, "count": 50}},
                       "nu": {"type": "gaussian", "mean": 0, "stddev": 1}}"#;
        let cfg = RunConfig::from_json(text, &Overrides::default()).unwrap();
        assert_eq!(cfg.warnings.len(), 1);
        assert!(cfg.warnings[0].contains("fewer than 500"));
    }
}
