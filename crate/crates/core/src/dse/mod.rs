//! The exploration run: per configuration, synthesize IMU features, fit the
//! estimator, evaluate on the test split, and collect one record.
//!
//! Synthesis runs once per sequence over the whole sensor table; each
//! configuration then selects its sensors. Noise is drawn per (sequence,
//! sensor), so selecting from the full synthesis equals synthesizing the
//! subset directly, and results do not depend on evaluation order.

pub mod analysis;
pub mod results;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::body_model::{Pose, Skeleton};
use crate::config_space::{enumerate_configurations, Constraints, SensorConfiguration, SensorSpec, SensorTable, ROOT_SENSOR};
use crate::error::{Error, Result};
use crate::estimator::{build_features, fit, predict, EstimatorSpec, TrainingSet};
use crate::imu::{normalize_root_relative, sequence_noise_seed, synthesize, SensorSite, SynthesisParams, VirtualImuSequence};
use crate::metrics::{evaluate_sums, ErrorSums, PoseErrorReport};
use crate::motion::{load_motion_dir, split_dataset, Dataset, MotionSequence, SplitLabel, SplitRule};
use crate::seed::derive_seed;

pub use analysis::{combined_metric, default_lambda_grid};

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// One evaluated configuration. `report` is `None` when evaluation failed.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    pub config_id: usize,
    pub configuration: SensorConfiguration,
    pub report: Option<PoseErrorReport>,
    pub runtime_s: Option<f64>,
}

impl EvaluationRecord {
    pub fn is_valid(&self) -> bool {
        self.report.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub config_id: usize,
    pub sensor_ids: SensorConfiguration,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsePlan {
    pub dataset_dir: PathBuf,
    pub skeleton_path: Option<PathBuf>,
    pub sensor_table: SensorTable,
    pub constraints: Constraints,
    pub synthesis: SynthesisParams,
    pub estimator: EstimatorSpec,
    pub split: SplitRule,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub lambdas: Vec<f64>,
    pub workers: usize,
    pub record_runtime: bool,
}

impl DsePlan {
    pub fn validate(&self) -> Result<()> {
        self.constraints.validate()?;
        self.synthesis.validate()?;
        self.estimator.validate()?;
        for &l in &self.lambdas {
            analysis::check_lambda(l)?;
        }
        if self.workers < 1 {
            return Err(Error::param("workers", "must be at least 1"));
        }
        Ok(())
    }

    pub fn skeleton(&self) -> Result<Skeleton> {
        match &self.skeleton_path {
            Some(p) => Skeleton::load(p),
            None => Ok(Skeleton::smpl_default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DseRun {
    pub records: Vec<EvaluationRecord>,
    pub failures: Vec<Failure>,
}

/// Attachment of every listed sensor, looked up by its vertex in the skeleton.
pub fn sensor_sites(table: &SensorTable, skeleton: &Skeleton, ids: &[usize]) -> Result<Vec<SensorSite>> {
    ids.iter()
        .map(|&id| {
            let spec = table.get(id).ok_or(Error::UnknownSensor(id))?;
            let attachment = skeleton
                .attachment_for_vertex(spec.vertex_id)
                .ok_or(Error::MissingAttachment {
                    sensor: id,
                    vertex: spec.vertex_id,
                })?;
            Ok(SensorSite {
                sensor_id: id,
                attachment: *attachment,
            })
        })
        .collect()
}

/// Sensor used as the reference frame: the root if present, else the lowest id.
pub fn reference_sensor(ids: &[usize]) -> Option<usize> {
    if ids.contains(&ROOT_SENSOR) {
        Some(ROOT_SENSOR)
    } else {
        ids.iter().min().copied()
    }
}

/// Synthesizes the IMU stream a run would feed the estimator for `ids`.
pub fn synthesize_for(
    motion: &MotionSequence,
    skeleton: &Skeleton,
    table: &SensorTable,
    ids: &[usize],
    params: &SynthesisParams,
    global_seed: u64,
) -> Result<VirtualImuSequence> {
    let sites = sensor_sites(table, skeleton, ids)?;
    let mut p = *params;
    p.noise.seed = sequence_noise_seed(global_seed, &motion.name);
    let imu = synthesize(motion, skeleton, &sites, &p)?;
    finish_features(imu, params)
}

fn finish_features(imu: VirtualImuSequence, params: &SynthesisParams) -> Result<VirtualImuSequence> {
    match (params.root_relative, reference_sensor(&imu.sensor_ids)) {
        (true, Some(root)) => normalize_root_relative(&imu, root),
        _ => Ok(imu),
    }
}

struct Prepared<'a> {
    label: SplitLabel,
    fps: f64,
    imu: VirtualImuSequence,
    /// Ground-truth poses aligned with `imu` frames.
    poses: &'a [Pose],
}

fn prepare<'a>(dataset: &'a Dataset, skeleton: &Skeleton, plan: &DsePlan) -> Result<Vec<Prepared<'a>>> {
    let ids: Vec<usize> = plan.sensor_table.ids().collect();
    let sites = sensor_sites(&plan.sensor_table, skeleton, &ids)?;
    let n = plan.synthesis.smoothing_span;
    dataset
        .sequences
        .iter()
        .zip(&dataset.labels)
        .filter(|(_, l)| **l != SplitLabel::Validation)
        .map(|(seq, &label)| {
            let mut p = plan.synthesis;
            p.noise.seed = sequence_noise_seed(plan.seed, &seq.name);
            let imu = synthesize(seq, skeleton, &sites, &p)?;
            Ok(Prepared {
                label,
                fps: seq.fps,
                imu,
                poses: &seq.frames[n..seq.len() - n],
            })
        })
        .collect()
}

fn evaluate_configuration(
    config: &SensorConfiguration,
    prepared: &[Prepared<'_>],
    skeleton: &Skeleton,
    plan: &DsePlan,
) -> Result<PoseErrorReport> {
    let mut spec = plan.estimator;
    spec.seed = derive_seed(plan.estimator.seed, &[b"estimator", config.to_field().as_bytes()]);
    let features = |p: &Prepared<'_>| finish_features(p.imu.select(config.ids())?, &plan.synthesis);

    let dim = spec.window * config.count() * crate::estimator::VALUES_PER_SENSOR;
    let target_dim = prepared.first().map_or(0, |p| 3 * p.poses[0].joint_count());
    let mut train = TrainingSet::empty(dim, target_dim);
    let mut finetune = TrainingSet::empty(dim, target_dim);
    for p in prepared {
        let set = match p.label {
            SplitLabel::Train => &mut train,
            SplitLabel::Finetune => &mut finetune,
            _ => continue,
        };
        set.append(&TrainingSet::from_sequence(&features(p)?, p.poses, spec.window)?)?;
    }
    let est = fit(&spec, &train, &finetune)?;

    let half = spec.window / 2;
    let mut sums = ErrorSums::default();
    for p in prepared.iter().filter(|p| p.label == SplitLabel::Test) {
        let pred = predict(&est, &build_features(&features(p)?, spec.window)?)?;
        let gt = &p.poses[half..p.poses.len() - half];
        sums.merge(&evaluate_sums(&pred, gt, skeleton, p.fps)?);
    }
    Ok(sums.report())
}

/// Evaluates every enumerated configuration on an already split dataset.
/// Records come back in canonical configuration order whatever the worker count.
pub fn run_dse(plan: &DsePlan, dataset: &Dataset, skeleton: &Skeleton) -> Result<DseRun> {
    plan.validate()?;
    let configs = enumerate_configurations(&plan.sensor_table, &plan.constraints);
    if configs.is_empty() {
        return Err(Error::EmptyEnumeration);
    }
    let counts = dataset.counts();
    for label in [SplitLabel::Train, SplitLabel::Test] {
        if counts.get(&label).copied().unwrap_or(0) == 0 {
            return Err(Error::Split(format!("the {label} split is empty")));
        }
    }
    let prepared = prepare(dataset, skeleton, plan)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    let outcomes: Vec<(EvaluationRecord, Option<String>)> = pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(config_id, config)| {
                let start = Instant::now();
                let result = evaluate_configuration(config, &prepared, skeleton, plan);
                let runtime_s = plan.record_runtime.then(|| start.elapsed().as_secs_f64());
                let (report, failure) = match result {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                let record = EvaluationRecord {
                    config_id,
                    configuration: config.clone(),
                    report,
                    runtime_s,
                };
                (record, failure)
            })
            .collect()
    });

    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (record, failure) in outcomes {
        if let Some(reason) = failure {
            failures.push(Failure {
                config_id: record.config_id,
                sensor_ids: record.configuration.clone(),
                reason,
            });
        }
        records.push(record);
    }
    Ok(DseRun { records, failures })
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'static str,
    dataset_dir: &'a Path,
    skeleton: Option<&'a Path>,
    sensor_table: &'a [SensorSpec],
    constraints: &'a Constraints,
    synthesis: &'a SynthesisParams,
    estimator: &'a EstimatorSpec,
    split: &'a SplitRule,
    seed: u64,
    lambdas: &'a [f64],
    workers: usize,
    record_runtime: bool,
    sequences: Vec<(String, String)>,
    configuration_count: usize,
    invalid_count: usize,
    failures: &'a [Failure],
}

/// Loads the dataset named by the plan, runs it, and writes the results CSV
/// and manifest into the output directory.
pub fn execute(plan: &DsePlan) -> Result<DseRun> {
    plan.validate()?;
    let skeleton = plan.skeleton()?;
    let sequences = load_motion_dir(&plan.dataset_dir)?;
    let dataset = split_dataset(sequences, &plan.split)?;
    let run = run_dse(plan, &dataset, &skeleton)?;

    std::fs::create_dir_all(&plan.output_dir).map_err(|e| Error::io(&plan.output_dir, e))?;
    results::save_results(&run.records, plan.output_dir.join(RESULTS_FILE))?;
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        dataset_dir: &plan.dataset_dir,
        skeleton: plan.skeleton_path.as_deref(),
        sensor_table: plan.sensor_table.entries(),
        constraints: &plan.constraints,
        synthesis: &plan.synthesis,
        estimator: &plan.estimator,
        split: &plan.split,
        seed: plan.seed,
        lambdas: &plan.lambdas,
        workers: plan.workers,
        record_runtime: plan.record_runtime,
        sequences: dataset
            .sequences
            .iter()
            .zip(&dataset.labels)
            .map(|(s, l)| (s.name.clone(), l.to_string()))
            .collect(),
        configuration_count: run.records.len(),
        invalid_count: run.failures.len(),
        failures: &run.failures,
    };
    let path = plan.output_dir.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(run)
}
