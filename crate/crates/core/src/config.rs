//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//! workers = 4
//!
//! [paths]
//! dataset_dir = "motions"
//!
//! [sensors]
//! subset = [0, 2, 16, 17, 18, 19, 20]
//!
//! [split]
//! test_subjects = ["s09", "s10"]
//! finetune_subjects = ["s07", "s08"]
//! validation_holdout = 1
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config_space::{Constraints, SensorTable};
use crate::dse::{default_lambda_grid, DsePlan};
use crate::error::{Error, Result};
use crate::estimator::EstimatorSpec;
use crate::imu::SynthesisParams;
use crate::motion::{CorpusSpec, SplitRule};

/// Directory used for outputs when neither the config nor the caller names one.
pub const DEFAULT_OUTPUT_DIR: &str = "dse_out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_lambda_grid")]
    pub lambdas: Vec<f64>,
    #[serde(default = "one")]
    pub workers: usize,
    /// Write wall-clock seconds into the results; makes files run-dependent.
    #[serde(default)]
    pub record_runtime: bool,
    pub paths: Paths,
    #[serde(default)]
    pub sensors: Sensors,
    #[serde(default)]
    pub constraints: Constraints,
    #[serde(default)]
    pub synthesis: SynthesisParams,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    pub split: SplitRule,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub dataset_dir: PathBuf,
    #[serde(default)]
    pub skeleton: Option<PathBuf>,
    #[serde(default)]
    pub sensor_table: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensors {
    /// Restrict the sensor table to these ids.
    #[serde(default)]
    pub subset: Option<Vec<usize>>,
}

/// Prefixes a parameter error with the config section it came from.
fn in_section<T>(section: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter { name, reason } if !name.starts_with(section) => Error::InvalidParameter {
            name: format!("{section}.{name}"),
            reason,
        },
        other => other,
    })
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string().trim_end().to_string(),
    })
}

impl RunConfig {
    /// Parses, resolves relative paths, and validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: RunConfig = read_toml(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.dataset_dir);
        for p in [&mut self.paths.skeleton, &mut self.paths.sensor_table, &mut self.paths.output_dir]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &l in &self.lambdas {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::param("lambdas", format!("{l} is outside [0, 1]")));
            }
        }
        if self.workers < 1 {
            return Err(Error::param("workers", "must be at least 1"));
        }
        in_section("constraints", self.constraints.validate())?;
        in_section("synthesis", self.synthesis.validate())?;
        if self.synthesis.noise.seed != 0 {
            return Err(Error::param(
                "synthesis.noise.seed",
                "noise seeds are derived from the top-level seed; remove this field",
            ));
        }
        in_section("estimator", self.estimator.validate())?;
        if self.split.test_subjects.is_empty() {
            return Err(Error::param("split.test_subjects", "must name at least one subject"));
        }
        if !self.paths.dataset_dir.is_dir() {
            return Err(Error::param(
                "paths.dataset_dir",
                format!("{} is not a directory", self.paths.dataset_dir.display()),
            ));
        }
        for (name, p) in [("paths.skeleton", &self.paths.skeleton), ("paths.sensor_table", &self.paths.sensor_table)] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(Error::param(name, format!("{} does not exist", p.display())));
                }
            }
        }
        self.sensor_table()?;
        Ok(())
    }

    /// The built-in or file-provided table, restricted to `sensors.subset`.
    pub fn sensor_table(&self) -> Result<SensorTable> {
        let table = match &self.paths.sensor_table {
            Some(p) => SensorTable::load(p)?,
            None => SensorTable::basic(),
        };
        match &self.sensors.subset {
            Some(ids) => table.restrict(ids).map_err(|e| match e {
                Error::UnknownSensor(id) => Error::param("sensors.subset", format!("sensor {id} is not in the table")),
                other => other,
            }),
            None => Ok(table),
        }
    }

    /// Output directory: the caller's override, then the config, then the default.
    pub fn output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        override_dir
            .map(Path::to_path_buf)
            .or_else(|| self.paths.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn plan(&self, output_override: Option<&Path>) -> Result<DsePlan> {
        Ok(DsePlan {
            dataset_dir: self.paths.dataset_dir.clone(),
            skeleton_path: self.paths.skeleton.clone(),
            sensor_table: self.sensor_table()?,
            constraints: self.constraints,
            synthesis: self.synthesis,
            estimator: self.estimator,
            split: self.split.clone(),
            seed: self.seed,
            output_dir: self.output_dir(output_override),
            lambdas: self.lambdas.clone(),
            workers: self.workers,
            record_runtime: self.record_runtime,
        })
    }
}

pub fn load_corpus_spec(path: impl AsRef<Path>) -> Result<CorpusSpec> {
    read_toml(path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(extra: &str) -> Result<RunConfig> {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("motions")).unwrap();
        let text = format!(
            "{extra}\n[paths]\ndataset_dir = \"motions\"\n[split]\ntest_subjects = [\"s09\"]\n"
        );
        RunConfig::from_toml_str(&text, dir.path())
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.workers, 1);
        assert_eq!(cfg.lambdas.len(), 21);
        assert_eq!(cfg.constraints, Constraints::default());
        assert_eq!(cfg.estimator, EstimatorSpec::default());
        assert_eq!(cfg.split.validation_holdout, 5);
        assert!(cfg.paths.dataset_dir.is_absolute());
        assert_eq!(cfg.sensor_table().unwrap().len(), 25);
    }

    #[test]
    fn sections_override() {
        let cfg = parse(
            "seed = 5\n[constraints]\nmax_sensors = 3\n[estimator]\nkind = \"ridge\"\nwindow = 3\n[synthesis.noise]\nsigma_acc = 0.0\n[sensors]\nsubset = [0, 2, 20]",
        )
        .unwrap();
        assert_eq!(cfg.constraints.max_sensors, 3);
        assert!(cfg.constraints.symmetric_only);
        assert_eq!(cfg.estimator.window, 3);
        assert_eq!(cfg.synthesis.noise.sigma_acc, 0.0);
        assert_eq!(cfg.synthesis.noise.sigma_ori, 0.05);
        assert_eq!(cfg.sensor_table().unwrap().ids().collect::<Vec<_>>(), vec![0, 2, 20]);
        let plan = cfg.plan(Some(Path::new("/tmp/x"))).unwrap();
        assert_eq!(plan.seed, 5);
        assert_eq!(plan.output_dir, PathBuf::from("/tmp/x"));
    }

    fn param_name(r: Result<RunConfig>) -> String {
        match r {
            Err(Error::InvalidParameter { name, .. }) => name,
            other => panic!("expected a parameter error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_fields_report_their_path() {
        assert_eq!(param_name(parse("[estimator]\nwindow = 4")), "estimator.window");
        assert_eq!(param_name(parse("[constraints]\nmax_sensors = 0")), "constraints.max_sensors");
        assert_eq!(param_name(parse("[synthesis.noise]\nsigma_ori = -1.0")), "synthesis.noise.sigma_ori");
        assert_eq!(param_name(parse("[synthesis]\nsmoothing_span = 0")), "synthesis.smoothing_span");
        assert_eq!(param_name(parse("lambdas = [0.5, 1.5]")), "lambdas");
        assert_eq!(param_name(parse("[sensors]\nsubset = [0, 99]")), "sensors.subset");
    }

    #[test]
    fn unknown_keys_and_missing_dirs_are_rejected() {
        assert!(matches!(parse("bogus = 1"), Err(Error::Config(_))));
        let dir = tempfile::tempdir().unwrap();
        let r = RunConfig::from_toml_str("[paths]\ndataset_dir = \"nope\"\n[split]\ntest_subjects = [\"a\"]", dir.path());
        assert_eq!(param_name(r), "paths.dataset_dir");
    }
}
