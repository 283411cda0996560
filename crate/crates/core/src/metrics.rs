//! Pose error metrics: SIP, angular, positional, mesh and jitter.
//!
//! Positional and mesh errors are measured after translating each predicted
//! frame so its root joint coincides with the ground truth; no rotational
//! alignment is applied. Angular errors compare global joint rotations.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::body_model::{forward_kinematics, vertex_position, FkResult, Pose, Skeleton};
use crate::error::{Error, Result};
use crate::rotation::geodesic_angle;

/// Thighs (hips 1, 2) and upper arms (shoulders 16, 17).
pub const SIP_JOINTS: [usize; 4] = [1, 2, 16, 17];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseErrorReport {
    pub sip_deg: f64,
    pub angular_deg: f64,
    pub positional_cm: f64,
    pub mesh_cm: f64,
    pub jitter_km_s3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Sip,
    Angular,
    Positional,
    Mesh,
    Jitter,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Sip,
        Metric::Angular,
        Metric::Positional,
        Metric::Mesh,
        Metric::Jitter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Sip => "sip",
            Metric::Angular => "angular",
            Metric::Positional => "positional",
            Metric::Mesh => "mesh",
            Metric::Jitter => "jitter",
        }
    }

    pub fn value(self, r: &PoseErrorReport) -> f64 {
        match self {
            Metric::Sip => r.sip_deg,
            Metric::Angular => r.angular_deg,
            Metric::Positional => r.positional_cm,
            Metric::Mesh => r.mesh_cm,
            Metric::Jitter => r.jitter_km_s3,
        }
    }

    /// Factor bringing the raw value to the order of magnitude of a sensor
    /// count before it enters the combined metric. Jitter is reported in
    /// units of 0.1 km/s³ there.
    pub fn combined_scale(self) -> f64 {
        match self {
            Metric::Jitter => 0.1,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownMetric(s.to_string()))
    }
}

fn fk_all(skeleton: &Skeleton, poses: &[Pose]) -> Result<Vec<FkResult>> {
    poses.iter().map(|p| forward_kinematics(skeleton, p)).collect()
}

fn check_lengths(pred: &[Pose], gt: &[Pose]) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction length",
            expected: gt.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(())
}

/// Running sums of each metric, so results over several sequences can be
/// combined into exact frame-weighted means.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorSums {
    sip: (f64, usize),
    angular: (f64, usize),
    positional: (f64, usize),
    mesh: (f64, usize),
    jitter: (f64, usize),
}

impl ErrorSums {
    pub fn merge(&mut self, other: &ErrorSums) {
        for (a, b) in [
            (&mut self.sip, other.sip),
            (&mut self.angular, other.angular),
            (&mut self.positional, other.positional),
            (&mut self.mesh, other.mesh),
            (&mut self.jitter, other.jitter),
        ] {
            a.0 += b.0;
            a.1 += b.1;
        }
    }

    pub fn report(&self) -> PoseErrorReport {
        let mean = |(s, n): (f64, usize)| if n == 0 { 0.0 } else { s / n as f64 };
        PoseErrorReport {
            sip_deg: mean(self.sip),
            angular_deg: mean(self.angular),
            positional_cm: mean(self.positional) * 100.0,
            mesh_cm: mean(self.mesh) * 100.0,
            jitter_km_s3: mean(self.jitter) / 1000.0,
        }
    }
}

fn angle_sum(pred: &[FkResult], gt: &[FkResult], joints: impl Iterator<Item = usize> + Clone) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0;
    for (p, g) in pred.iter().zip(gt) {
        for j in joints.clone() {
            sum += geodesic_angle(&p.global_rotations[j], &g.global_rotations[j]);
            n += 1;
        }
    }
    (sum, n)
}

fn root_shift(p: &FkResult, g: &FkResult) -> Vector3<f64> {
    g.global_positions[0] - p.global_positions[0]
}

fn positional_sum(pred: &[FkResult], gt: &[FkResult]) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0;
    for (p, g) in pred.iter().zip(gt) {
        let shift = root_shift(p, g);
        for (pp, gp) in p.global_positions.iter().zip(&g.global_positions) {
            sum += (pp + shift - gp).norm();
            n += 1;
        }
    }
    (sum, n)
}

fn mesh_sum(pred: &[FkResult], gt: &[FkResult], skeleton: &Skeleton) -> Result<(f64, usize)> {
    if skeleton.tracked_vertices.is_empty() {
        return Err(Error::InvalidSkeleton("mesh error needs tracked vertices".into()));
    }
    let mut sum = 0.0;
    let mut n = 0;
    for (p, g) in pred.iter().zip(gt) {
        let shift = root_shift(p, g);
        for a in &skeleton.tracked_vertices {
            sum += (vertex_position(p, a)? + shift - vertex_position(g, a)?).norm();
            n += 1;
        }
    }
    Ok((sum, n))
}

/// Third difference `p(t+2) − 3p(t+1) + 3p(t) − p(t−1)` scaled by fps³, m/s³.
fn jerk_sum(fk: &[FkResult], fps: f64) -> Result<(f64, usize)> {
    if fk.len() < 4 {
        return Err(Error::TooShort {
            needed: 4,
            actual: fk.len(),
        });
    }
    let scale = fps * fps * fps;
    let mut sum = 0.0;
    let mut n = 0;
    for t in 1..fk.len() - 2 {
        let joints = fk[t].global_positions.len();
        for j in 0..joints {
            let jerk = fk[t + 2].global_positions[j] - 3.0 * fk[t + 1].global_positions[j]
                + 3.0 * fk[t].global_positions[j]
                - fk[t - 1].global_positions[j];
            sum += jerk.norm() * scale;
            n += 1;
        }
    }
    Ok((sum, n))
}

/// Mean geodesic angle (degrees) over the upper arms and thighs.
pub fn sip_error(pred: &[Pose], gt: &[Pose], skeleton: &Skeleton) -> Result<f64> {
    check_lengths(pred, gt)?;
    if let Some(&j) = SIP_JOINTS.iter().find(|&&j| j >= skeleton.joint_count) {
        return Err(Error::InvalidJoint {
            joint: j,
            joint_count: skeleton.joint_count,
        });
    }
    let (s, n) = angle_sum(&fk_all(skeleton, pred)?, &fk_all(skeleton, gt)?, SIP_JOINTS.into_iter());
    Ok(s / n as f64)
}

/// Mean geodesic angle (degrees) over all joints.
pub fn angular_error(pred: &[Pose], gt: &[Pose], skeleton: &Skeleton) -> Result<f64> {
    check_lengths(pred, gt)?;
    let (s, n) = angle_sum(&fk_all(skeleton, pred)?, &fk_all(skeleton, gt)?, 0..skeleton.joint_count);
    Ok(s / n as f64)
}

/// Mean root-aligned joint position error, cm.
pub fn positional_error(pred: &[Pose], gt: &[Pose], skeleton: &Skeleton) -> Result<f64> {
    check_lengths(pred, gt)?;
    let (s, n) = positional_sum(&fk_all(skeleton, pred)?, &fk_all(skeleton, gt)?);
    Ok(s / n as f64 * 100.0)
}

/// Mean root-aligned tracked-vertex position error, cm.
pub fn mesh_error(pred: &[Pose], gt: &[Pose], skeleton: &Skeleton) -> Result<f64> {
    check_lengths(pred, gt)?;
    let (s, n) = mesh_sum(&fk_all(skeleton, pred)?, &fk_all(skeleton, gt)?, skeleton)?;
    Ok(s / n as f64 * 100.0)
}

/// Mean jerk magnitude of the predicted joints, km/s³.
pub fn jitter(pred: &[Pose], skeleton: &Skeleton, fps: f64) -> Result<f64> {
    let (s, n) = jerk_sum(&fk_all(skeleton, pred)?, fps)?;
    Ok(s / n as f64 / 1000.0)
}

/// All five metrics as sums, for aggregation across sequences.
pub fn evaluate_sums(pred: &[Pose], gt: &[Pose], skeleton: &Skeleton, fps: f64) -> Result<ErrorSums> {
    check_lengths(pred, gt)?;
    let pfk = fk_all(skeleton, pred)?;
    let gfk = fk_all(skeleton, gt)?;
    Ok(ErrorSums {
        sip: angle_sum(&pfk, &gfk, SIP_JOINTS.into_iter().filter(|&j| j < skeleton.joint_count)),
        angular: angle_sum(&pfk, &gfk, 0..skeleton.joint_count),
        positional: positional_sum(&pfk, &gfk),
        mesh: mesh_sum(&pfk, &gfk, skeleton)?,
        jitter: jerk_sum(&pfk, fps)?,
    })
}

pub fn evaluate(pred: &[Pose], gt: &[Pose], skeleton: &Skeleton, fps: f64) -> Result<PoseErrorReport> {
    Ok(evaluate_sums(pred, gt, skeleton, fps)?.report())
}
