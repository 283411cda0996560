//! Motion sequences: file format, synthetic generation and dataset splits.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::body_model::{Pose, SMPL_JOINT_COUNT};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

pub const DEFAULT_FPS: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub fps: f64,
    pub frames: Vec<Pose>,
    pub subject: String,
    pub name: String,
}

impl MotionSequence {
    /// Checks the fps and per-frame joint count invariants.
    pub fn new(fps: f64, frames: Vec<Pose>, subject: impl Into<String>, name: impl Into<String>) -> Result<Self> {
        let seq = MotionSequence {
            fps,
            frames,
            subject: subject.into(),
            name: name.into(),
        };
        seq.validate(None)?;
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn joint_count(&self) -> usize {
        self.frames.first().map_or(0, Pose::joint_count)
    }

    fn validate(&self, declared_joints: Option<usize>) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::param("fps", format!("must be positive, got {}", self.fps)));
        }
        let first = self.frames.first().ok_or(Error::EmptySequence)?;
        let expected = declared_joints.unwrap_or(first.joint_count());
        for (i, f) in self.frames.iter().enumerate() {
            if f.joint_count() != expected {
                return Err(Error::InconsistentFrame {
                    frame: i,
                    expected,
                    found: f.joint_count(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MotionFile {
    fps: f64,
    joint_count: usize,
    subject: String,
    name: String,
    frames: Vec<FrameRecord>,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    root_translation: [f64; 3],
    rotations: Vec<[f64; 3]>,
}

pub fn load_motion(path: impl AsRef<Path>) -> Result<MotionSequence> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: MotionFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let frames = file
        .frames
        .into_iter()
        .map(|f| Pose {
            local_rotations: f.rotations.into_iter().map(Vector3::from).collect(),
            root_translation: Vector3::from(f.root_translation),
        })
        .collect();
    let seq = MotionSequence {
        fps: file.fps,
        frames,
        subject: file.subject,
        name: file.name,
    };
    seq.validate(Some(file.joint_count)).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(seq)
}

pub fn save_motion(seq: &MotionSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    seq.validate(None)?;
    let file = MotionFile {
        fps: seq.fps,
        joint_count: seq.joint_count(),
        subject: seq.subject.clone(),
        name: seq.name.clone(),
        frames: seq
            .frames
            .iter()
            .map(|p| FrameRecord {
                root_translation: p.root_translation.into(),
                rotations: p.local_rotations.iter().map(|&r| r.into()).collect(),
            })
            .collect(),
    };
    let text = serde_json::to_string(&file)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads every `*.json` motion file in `dir`, ordered by file name.
pub fn load_motion_dir(dir: impl AsRef<Path>) -> Result<Vec<MotionSequence>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths.iter().map(load_motion).collect()
}

/// One joint driven by `axis · amplitude · sin(2π·frequency·t + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSinusoid {
    pub joint: usize,
    pub axis: [f64; 3],
    /// radians
    pub amplitude: f64,
    /// Hz
    pub frequency: f64,
    /// radians
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSpec {
    #[serde(default = "default_joint_count")]
    pub joint_count: usize,
    pub joints: Vec<JointSinusoid>,
    /// Replace each joint's phase with a seeded uniform draw in [0, 2π).
    #[serde(default)]
    pub randomize_phases: bool,
}

fn default_joint_count() -> usize {
    SMPL_JOINT_COUNT
}

pub fn generate_synthetic_motion(
    spec: &MotionSpec,
    duration: f64,
    fps: f64,
    seed: u64,
    subject: &str,
    name: &str,
) -> Result<MotionSequence> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::param("duration", "must be positive"));
    }
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::param("fps", "must be positive"));
    }
    let frame_count = (duration * fps).round() as usize;
    if frame_count == 0 {
        return Err(Error::EmptySequence);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drivers = Vec::with_capacity(spec.joints.len());
    for (k, js) in spec.joints.iter().enumerate() {
        if js.joint >= spec.joint_count {
            return Err(Error::InvalidJoint {
                joint: js.joint,
                joint_count: spec.joint_count,
            });
        }
        let axis = Vector3::from(js.axis);
        let norm = axis.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::param(format!("joints[{k}].axis"), "must be a nonzero vector"));
        }
        let phase = if spec.randomize_phases {
            rng.random::<f64>() * TAU
        } else {
            js.phase
        };
        drivers.push((js.joint, axis / norm, js.amplitude, js.frequency, phase));
    }
    let frames = (0..frame_count)
        .map(|t| {
            let mut pose = Pose::rest(spec.joint_count);
            for &(joint, axis, amplitude, frequency, phase) in &drivers {
                let angle = amplitude * (TAU * frequency * t as f64 / fps + phase).sin();
                pose.local_rotations[joint] += axis * angle;
            }
            pose
        })
        .collect();
    MotionSequence::new(fps, frames, subject, name)
}

/// Corpus description consumed by `motions gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    pub subjects: Vec<CorpusSubject>,
    #[serde(flatten)]
    pub motion: MotionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSubject {
    pub id: String,
    pub sequences: usize,
}

fn default_fps() -> f64 {
    DEFAULT_FPS
}

/// Generates one sequence per (subject, index), named `<subject>_seq<NN>`.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<MotionSequence>> {
    let mut out = Vec::new();
    for subject in &spec.subjects {
        for k in 0..subject.sequences {
            let name = format!("{}_seq{:02}", subject.id, k);
            let seed = derive_seed(spec.seed, &[b"motion", name.as_bytes()]);
            out.push(generate_synthetic_motion(
                &spec.motion,
                spec.duration_s,
                spec.fps,
                seed,
                &subject.id,
                &name,
            )?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitLabel {
    Train,
    Finetune,
    Validation,
    Test,
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SplitLabel::Train => "train",
            SplitLabel::Finetune => "finetune",
            SplitLabel::Validation => "validation",
            SplitLabel::Test => "test",
        };
        f.write_str(s)
    }
}

/// Subject patterns are exact ids, or prefixes when they end in `*`.
/// Subjects matching neither list are training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub test_subjects: Vec<String>,
    #[serde(default)]
    pub finetune_subjects: Vec<String>,
    #[serde(default = "default_holdout")]
    pub validation_holdout: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_holdout() -> usize {
    5
}

fn subject_matches(pattern: &str, subject: &str) -> bool {
    match pattern.strip_suffix('*') {
        Some(prefix) => subject.starts_with(prefix),
        None => pattern == subject,
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub sequences: Vec<MotionSequence>,
    pub labels: Vec<SplitLabel>,
}

impl Dataset {
    pub fn split(&self, label: SplitLabel) -> impl Iterator<Item = &MotionSequence> {
        self.sequences
            .iter()
            .zip(&self.labels)
            .filter(move |(_, l)| **l == label)
            .map(|(s, _)| s)
    }

    pub fn counts(&self) -> BTreeMap<SplitLabel, usize> {
        let mut m = BTreeMap::new();
        for l in &self.labels {
            *m.entry(*l).or_insert(0) += 1;
        }
        m
    }
}

pub fn split_dataset(sequences: Vec<MotionSequence>, rule: &SplitRule) -> Result<Dataset> {
    let mut labels: Vec<SplitLabel> = sequences
        .iter()
        .map(|s| {
            if rule.test_subjects.iter().any(|p| subject_matches(p, &s.subject)) {
                SplitLabel::Test
            } else if rule.finetune_subjects.iter().any(|p| subject_matches(p, &s.subject)) {
                SplitLabel::Finetune
            } else {
                SplitLabel::Train
            }
        })
        .collect();
    if !labels.contains(&SplitLabel::Test) {
        return Err(Error::Split("no sequence matches the test subjects".into()));
    }
    let mut pool: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == SplitLabel::Finetune)
        .collect();
    if rule.validation_holdout > pool.len() {
        return Err(Error::Split(format!(
            "validation holdout of {} exceeds the finetune pool of {}",
            rule.validation_holdout,
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rule.seed);
    pool.shuffle(&mut rng);
    for &i in &pool[..rule.validation_holdout] {
        labels[i] = SplitLabel::Validation;
    }
    Ok(Dataset { sequences, labels })
}
