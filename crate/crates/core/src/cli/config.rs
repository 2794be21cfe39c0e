use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::metrics::{CoverageDirection, EvalOptions};
use crate::ranking::WeightPreset;
use crate::volume::DEFAULT_THRESHOLD;

/// Environment variable that sets the worker count when neither a flag nor
/// the config file does.
pub const JOBS_ENV: &str = "TREEVAL_JOBS";

/// Optional settings read from a TOML config file.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub pred: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub no_cache: Option<bool>,
    pub jobs: Option<usize>,
    pub weights: Option<String>,
    pub normalize: Option<bool>,
    pub coverage_direction: Option<String>,
    pub threshold: Option<f64>,
    pub min_branch_mm: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Resolved settings for one run: flags over config file over defaults.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub pred: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub out: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub jobs: usize,
    pub weights: String,
    pub normalize: bool,
    pub coverage_direction: CoverageDirection,
    pub threshold: f64,
    pub min_branch_mm: f64,
}

/// Command-line values that can override the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub pred: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub no_cache: bool,
    pub jobs: Option<usize>,
    pub weights: Option<String>,
    pub normalize: Option<bool>,
    pub coverage_direction: Option<String>,
    pub threshold: Option<f64>,
    pub min_branch_mm: Option<f64>,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn env_jobs() -> Result<Option<usize>, CliError> {
    match std::env::var(JOBS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{JOBS_ENV}={v} is not a worker count"))),
        _ => Ok(None),
    }
}

impl RunConfig {
    pub fn resolve(flags: Overrides, file: ConfigFile) -> Result<RunConfig, CliError> {
        let jobs = match flags.jobs.or(file.jobs) {
            Some(j) => j,
            None => env_jobs()?.unwrap_or_else(default_jobs),
        };
        if jobs == 0 {
            return Err(CliError::Usage("jobs must be at least 1".into()));
        }
        let weights = flags.weights.or(file.weights).unwrap_or_else(|| "mean".into());
        let preset: WeightPreset = weights.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
        let normalize = flags.normalize.or(file.normalize).unwrap_or(preset.normalize);
        let coverage_direction = match flags.coverage_direction.or(file.coverage_direction) {
            Some(s) => s.parse().map_err(|e| CliError::Usage(format!("{e}")))?,
            None => CoverageDirection::default(),
        };
        let threshold = flags.threshold.or(file.threshold).unwrap_or(DEFAULT_THRESHOLD);
        if !threshold.is_finite() {
            return Err(CliError::Usage("threshold must be finite".into()));
        }
        let min_branch_mm = flags.min_branch_mm.or(file.min_branch_mm).unwrap_or(0.0);
        if !(min_branch_mm.is_finite() && min_branch_mm >= 0.0) {
            return Err(CliError::Usage("min-branch-mm must be >= 0".into()));
        }
        let out = flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));
        let no_cache = flags.no_cache || file.no_cache.unwrap_or(false);
        let cache_dir = if no_cache {
            None
        } else {
            Some(flags.cache_dir.or(file.cache_dir).unwrap_or_else(|| out.join("skeleton_cache")))
        };
        Ok(RunConfig {
            pred: flags.pred.or(file.pred),
            gt: flags.gt.or(file.gt),
            pairs: flags.pairs.or(file.pairs),
            out,
            cache_dir,
            jobs,
            weights,
            normalize,
            coverage_direction,
            threshold,
            min_branch_mm,
        })
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            min_branch_mm: self.min_branch_mm,
            coverage_direction: self.coverage_direction,
        }
    }

    pub fn weight_preset(&self) -> WeightPreset {
        self.weights.parse().expect("validated in resolve")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: ConfigFile = toml::from_str("jobs = 3\nweights = \"weighted\"\nthreshold = 0.5").unwrap();
        let flags = Overrides {
            jobs: Some(5),
            ..Overrides::default()
        };
        let c = RunConfig::resolve(flags, file).unwrap();
        assert_eq!(c.jobs, 5);
        assert_eq!(c.weights, "weighted");
        assert!(c.normalize);
        assert_eq!(c.threshold, 0.5);
        assert_eq!(c.min_branch_mm, 0.0);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(toml::from_str::<ConfigFile>("colour = 1").is_err());
        let bad = Overrides {
            jobs: Some(0),
            ..Overrides::default()
        };
        assert!(RunConfig::resolve(bad, ConfigFile::default()).is_err());
        let bad = Overrides {
            weights: Some("0,0,0,0".into()),
            ..Overrides::default()
        };
        assert!(RunConfig::resolve(bad, ConfigFile::default()).is_err());
    }

    #[test]
    fn no_cache_disables_cache_dir() {
        let flags = Overrides {
            no_cache: true,
            ..Overrides::default()
        };
        assert_eq!(RunConfig::resolve(flags, ConfigFile::default()).unwrap().cache_dir, None);
    }
}
