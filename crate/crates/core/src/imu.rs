//! Virtual IMU synthesis from motion sequences.
//!
//! Orientations are the global rotations of the joint each sensor is attached
//! to. Accelerations are central second differences of the sensor vertex
//! trajectory with a span of `n` frames,
//!
//! ```text
//! a(t) = (p(t+n) − 2·p(t) + p(t−n)) · fps² / n²,   t ∈ [n, T−n)
//! ```
//!
//! so every synthesized stream is `2n` frames shorter than its source and IMU
//! frame `k` corresponds to source frame `k + n`. Gravity is added after
//! differencing, then white noise.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::body_model::{forward_kinematics, vertex_position, Skeleton, VertexAttachment};
use crate::error::{Error, Result};
use crate::motion::MotionSequence;
use crate::rotation::rotation_about;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Standard deviation of the orientation perturbation angle, radians.
    pub sigma_ori: f64,
    /// Per-axis standard deviation of additive acceleration noise, m/s².
    pub sigma_acc: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            sigma_ori: 0.05,
            sigma_acc: 0.2,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            sigma_ori: 0.0,
            sigma_acc: 0.0,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_ori >= 0.0) {
            return Err(Error::param("noise.sigma_ori", "must be non-negative"));
        }
        if !(self.sigma_acc >= 0.0) {
            return Err(Error::param("noise.sigma_acc", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisParams {
    pub smoothing_span: usize,
    pub include_gravity: bool,
    pub gravity: Vector3<f64>,
    pub noise: NoiseSpec,
    pub root_relative: bool,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        SynthesisParams {
            smoothing_span: 4,
            include_gravity: true,
            gravity: Vector3::new(0.0, -9.81, 0.0),
            noise: NoiseSpec::default(),
            root_relative: true,
        }
    }
}

impl SynthesisParams {
    pub fn validate(&self) -> Result<()> {
        if self.smoothing_span < 1 {
            return Err(Error::param("smoothing_span", "must be at least 1"));
        }
        self.noise.validate()
    }
}

/// A sensor id together with the mesh vertex it sits on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSite {
    pub sensor_id: usize,
    pub attachment: VertexAttachment,
}

/// Frame-major orientation and acceleration streams for an ordered sensor list.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualImuSequence {
    pub fps: f64,
    pub sensor_ids: Vec<usize>,
    /// `orientations[frame][sensor]`
    pub orientations: Vec<Vec<Matrix3<f64>>>,
    /// `accelerations[frame][sensor]`, m/s²
    pub accelerations: Vec<Vec<Vector3<f64>>>,
}

impl VirtualImuSequence {
    pub fn len(&self) -> usize {
        self.orientations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orientations.is_empty()
    }

    pub fn sensor_index(&self, sensor_id: usize) -> Option<usize> {
        self.sensor_ids.iter().position(|&s| s == sensor_id)
    }

    /// Keeps only `ids`, in the given order.
    pub fn select(&self, ids: &[usize]) -> Result<Self> {
        let idx = ids
            .iter()
            .map(|&id| self.sensor_index(id).ok_or(Error::MissingSensor(id)))
            .collect::<Result<Vec<_>>>()?;
        Ok(VirtualImuSequence {
            fps: self.fps,
            sensor_ids: ids.to_vec(),
            orientations: self
                .orientations
                .iter()
                .map(|f| idx.iter().map(|&i| f[i]).collect())
                .collect(),
            accelerations: self
                .accelerations
                .iter()
                .map(|f| idx.iter().map(|&i| f[i]).collect())
                .collect(),
        })
    }
}

pub fn synthesize_orientations(
    motion: &MotionSequence,
    skeleton: &Skeleton,
    attachments: &[VertexAttachment],
) -> Result<Vec<Vec<Matrix3<f64>>>> {
    check_attachments(skeleton, attachments.iter())?;
    motion
        .frames
        .iter()
        .map(|pose| {
            let fk = forward_kinematics(skeleton, pose)?;
            Ok(attachments.iter().map(|a| fk.global_rotations[a.joint_id]).collect())
        })
        .collect()
}

/// Central second difference with span `n`; output has `len − 2n` entries.
pub fn synthesize_accelerations(trajectory: &[Vector3<f64>], fps: f64, n: usize) -> Result<Vec<Vector3<f64>>> {
    if n < 1 {
        return Err(Error::param("smoothing_span", "must be at least 1"));
    }
    let needed = 2 * n + 1;
    if trajectory.len() < needed {
        return Err(Error::TooShort {
            needed,
            actual: trajectory.len(),
        });
    }
    let scale = fps * fps / (n * n) as f64;
    Ok((n..trajectory.len() - n)
        .map(|t| (trajectory[t + n] - 2.0 * trajectory[t] + trajectory[t - n]) * scale)
        .collect())
}

/// Perturbs every orientation by a rotation about a uniformly random axis with
/// a Normal(0, σ_ori) angle, and every acceleration component by Normal(0, σ_acc²).
///
/// Each sensor draws from its own stream seeded by `(noise.seed, sensor id)`,
/// so selecting a subset of sensors does not change the noise on the rest.
pub fn add_noise(imu: &VirtualImuSequence, noise: &NoiseSpec) -> VirtualImuSequence {
    let mut out = imu.clone();
    if noise.sigma_ori == 0.0 && noise.sigma_acc == 0.0 {
        return out;
    }
    let ori = Normal::new(0.0, noise.sigma_ori).expect("sigma validated non-negative");
    let acc = Normal::new(0.0, noise.sigma_acc).expect("sigma validated non-negative");
    for (s, &sensor_id) in imu.sensor_ids.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(sensor_noise_seed(noise.seed, sensor_id));
        for t in 0..imu.len() {
            if noise.sigma_ori > 0.0 {
                let axis = Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng));
                let angle: f64 = ori.sample(&mut rng);
                out.orientations[t][s] = rotation_about(&axis, angle) * out.orientations[t][s];
            }
            if noise.sigma_acc > 0.0 {
                let d = Vector3::from_fn(|_, _| acc.sample(&mut rng));
                out.accelerations[t][s] += d;
            }
        }
    }
    out
}

pub fn sensor_noise_seed(seed: u64, sensor_id: usize) -> u64 {
    derive_seed(seed, &[b"sensor", &(sensor_id as u64).to_le_bytes()])
}

/// Noise seed for one motion sequence, independent of which configuration is evaluated.
pub fn sequence_noise_seed(global_seed: u64, sequence_name: &str) -> u64 {
    derive_seed(global_seed, &[b"noise", sequence_name.as_bytes()])
}

/// Expresses non-root sensors in the root sensor's frame:
/// `R_rootᵀ·R_s` and `R_rootᵀ·(a_s − a_root)`. The root keeps its global values.
pub fn normalize_root_relative(imu: &VirtualImuSequence, root_sensor_id: usize) -> Result<VirtualImuSequence> {
    let r = imu
        .sensor_index(root_sensor_id)
        .ok_or(Error::MissingSensor(root_sensor_id))?;
    let mut out = imu.clone();
    for t in 0..imu.len() {
        let root_t = imu.orientations[t][r].transpose();
        let root_a = imu.accelerations[t][r];
        for s in 0..imu.sensor_ids.len() {
            if s == r {
                continue;
            }
            out.orientations[t][s] = root_t * imu.orientations[t][s];
            out.accelerations[t][s] = root_t * (imu.accelerations[t][s] - root_a);
        }
    }
    Ok(out)
}

/// Orientations and positions, then accelerations, gravity and noise.
/// Output frames correspond to source frames `[n, T−n)`.
pub fn synthesize(
    motion: &MotionSequence,
    skeleton: &Skeleton,
    sites: &[SensorSite],
    params: &SynthesisParams,
) -> Result<VirtualImuSequence> {
    params.validate()?;
    check_attachments(skeleton, sites.iter().map(|s| &s.attachment))?;
    let n = params.smoothing_span;
    let frames = motion.len();
    if frames < 2 * n + 1 {
        return Err(Error::TooShort {
            needed: 2 * n + 1,
            actual: frames,
        });
    }

    let mut rotations = Vec::with_capacity(frames);
    let mut trajectories: Vec<Vec<Vector3<f64>>> = vec![Vec::with_capacity(frames); sites.len()];
    for pose in &motion.frames {
        let fk = forward_kinematics(skeleton, pose)?;
        let mut row = Vec::with_capacity(sites.len());
        for (s, site) in sites.iter().enumerate() {
            row.push(fk.global_rotations[site.attachment.joint_id]);
            trajectories[s].push(vertex_position(&fk, &site.attachment)?);
        }
        rotations.push(row);
    }

    let per_sensor = trajectories
        .iter()
        .map(|p| synthesize_accelerations(p, motion.fps, n))
        .collect::<Result<Vec<_>>>()?;
    let out_len = frames - 2 * n;
    let gravity = if params.include_gravity {
        params.gravity
    } else {
        Vector3::zeros()
    };
    let accelerations = (0..out_len)
        .map(|t| per_sensor.iter().map(|a| a[t] + gravity).collect())
        .collect();

    let imu = VirtualImuSequence {
        fps: motion.fps,
        sensor_ids: sites.iter().map(|s| s.sensor_id).collect(),
        orientations: rotations.drain(n..frames - n).collect(),
        accelerations,
    };
    Ok(add_noise(&imu, &params.noise))
}

fn check_attachments<'a>(skeleton: &Skeleton, attachments: impl Iterator<Item = &'a VertexAttachment>) -> Result<()> {
    for a in attachments {
        if a.joint_id >= skeleton.joint_count {
            return Err(Error::InvalidJoint {
                joint: a.joint_id,
                joint_count: skeleton.joint_count,
            });
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ImuFile {
    fps: f64,
    sensor_ids: Vec<usize>,
    params: SynthesisParams,
    /// `frames[t][s]` = 9 row-major orientation values followed by 3 acceleration values.
    frames: Vec<Vec<Vec<f64>>>,
}

pub fn save_imu(imu: &VirtualImuSequence, params: &SynthesisParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let frames = (0..imu.len())
        .map(|t| {
            (0..imu.sensor_ids.len())
                .map(|s| {
                    let r = &imu.orientations[t][s];
                    let a = &imu.accelerations[t][s];
                    let mut v = Vec::with_capacity(12);
                    for i in 0..3 {
                        for j in 0..3 {
                            v.push(r[(i, j)]);
                        }
                    }
                    v.extend(a.iter());
                    v
                })
                .collect()
        })
        .collect();
    let file = ImuFile {
        fps: imu.fps,
        sensor_ids: imu.sensor_ids.clone(),
        params: *params,
        frames,
    };
    std::fs::write(path, serde_json::to_string(&file)?).map_err(|e| Error::io(path, e))
}

pub fn load_imu(path: impl AsRef<Path>) -> Result<(VirtualImuSequence, SynthesisParams)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let file: ImuFile = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
    let sensors = file.sensor_ids.len();
    let mut orientations = Vec::with_capacity(file.frames.len());
    let mut accelerations = Vec::with_capacity(file.frames.len());
    for (t, frame) in file.frames.iter().enumerate() {
        if frame.len() != sensors || frame.iter().any(|v| v.len() != 12) {
            return Err(parse_err(format!("frame {t}: expected {sensors} records of 12 values")));
        }
        orientations.push(frame.iter().map(|v| Matrix3::from_row_slice(&v[..9])).collect());
        accelerations.push(frame.iter().map(|v| Vector3::new(v[9], v[10], v[11])).collect());
    }
    Ok((
        VirtualImuSequence {
            fps: file.fps,
            sensor_ids: file.sensor_ids,
            orientations,
            accelerations,
        },
        file.params,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::Pose;
    use crate::rotation::{axis_angle_to_matrix, orthonormality_error};
    use std::f64::consts::FRAC_PI_2;

    fn rest_motion(frames: usize) -> MotionSequence {
        MotionSequence::new(60.0, vec![Pose::rest(24); frames], "s", "rest").unwrap()
    }

    fn default_sites(ids: &[usize]) -> Vec<SensorSite> {
        let skel = Skeleton::smpl_default();
        ids.iter()
            .map(|&i| SensorSite {
                sensor_id: i,
                attachment: skel.tracked_vertices[i],
            })
            .collect()
    }

    #[test]
    fn rest_motion_gives_identity_orientations() {
        let skel = Skeleton::smpl_default();
        let atts: Vec<_> = skel.tracked_vertices.clone();
        let ori = synthesize_orientations(&rest_motion(5), &skel, &atts).unwrap();
        assert!(ori.iter().flatten().all(|r| *r == Matrix3::identity()));
    }

    #[test]
    fn rotated_root_sensor_orientation() {
        let skel = Skeleton::smpl_default();
        let mut motion = rest_motion(3);
        for f in &mut motion.frames {
            f.local_rotations[0] = Vector3::new(0.0, 0.0, FRAC_PI_2);
        }
        let ori = synthesize_orientations(&motion, &skel, &[skel.tracked_vertices[0]]).unwrap();
        let expected = axis_angle_to_matrix(&Vector3::new(0.0, 0.0, FRAC_PI_2));
        assert_eq!(ori[1][0], expected);
        assert!((ori[1][0] * Vector3::x() - Vector3::y()).amax() < 1e-15);
    }

    #[test]
    fn invalid_attachment_is_rejected() {
        let skel = Skeleton::smpl_default();
        let bad = VertexAttachment {
            vertex_id: 1,
            joint_id: 30,
            rest_offset: Vector3::zeros(),
        };
        assert!(synthesize_orientations(&rest_motion(3), &skel, &[bad]).is_err());
    }

    #[test]
    fn constant_trajectory_has_zero_or_gravity_acceleration() {
        let p = vec![Vector3::new(1.0, 2.0, 3.0); 20];
        let a = synthesize_accelerations(&p, 60.0, 4).unwrap();
        assert_eq!(a.len(), 12);
        assert!(a.iter().all(|v| *v == Vector3::zeros()));

        let params = SynthesisParams {
            noise: NoiseSpec::none(),
            ..Default::default()
        };
        let imu = synthesize(&rest_motion(20), &Skeleton::smpl_default(), &default_sites(&[0, 5]), &params).unwrap();
        assert!(imu
            .accelerations
            .iter()
            .flatten()
            .all(|v| *v == Vector3::new(0.0, -9.81, 0.0)));
    }

    #[test]
    fn quadratic_trajectory_recovers_acceleration() {
        let fps = 60.0;
        let p: Vec<_> = (0..40)
            .map(|t| {
                let s = t as f64 / fps;
                Vector3::new(0.5 * 2.0 * s * s, 0.0, 0.0)
            })
            .collect();
        for a in synthesize_accelerations(&p, fps, 4).unwrap() {
            assert!((a.x - 2.0).abs() <= 2.0 * 1e-9, "{a:?}");
            assert_eq!(a.y, 0.0);
        }
    }

    #[test]
    fn short_trajectory_is_rejected() {
        let p = vec![Vector3::zeros(); 8];
        assert!(matches!(
            synthesize_accelerations(&p, 60.0, 4),
            Err(Error::TooShort { needed: 9, actual: 8 })
        ));
        assert!(synthesize_accelerations(&p, 60.0, 0).is_err());
    }

    #[test]
    fn zero_noise_is_identity_and_seeded_noise_is_reproducible() {
        let params = SynthesisParams {
            noise: NoiseSpec::none(),
            ..Default::default()
        };
        let mut motion = rest_motion(30);
        for (t, f) in motion.frames.iter_mut().enumerate() {
            f.local_rotations[16] = Vector3::new(0.0, 0.02 * t as f64, 0.0);
        }
        let imu = synthesize(&motion, &Skeleton::smpl_default(), &default_sites(&[0, 11]), &params).unwrap();
        assert_eq!(add_noise(&imu, &NoiseSpec::none()), imu);

        let noise = NoiseSpec {
            sigma_ori: 0.1,
            sigma_acc: 0.5,
            seed: 77,
        };
        let a = add_noise(&imu, &noise);
        assert_eq!(a, add_noise(&imu, &noise));
        assert_ne!(a, imu);
        for r in a.orientations.iter().flatten() {
            assert!(orthonormality_error(r) < 1e-9);
        }
    }

    #[test]
    fn acceleration_noise_mean_is_near_zero() {
        let frames = 100_000;
        let imu = VirtualImuSequence {
            fps: 60.0,
            sensor_ids: vec![3],
            orientations: vec![vec![Matrix3::identity()]; frames],
            accelerations: vec![vec![Vector3::zeros()]; frames],
        };
        let sigma = 0.2;
        let noisy = add_noise(
            &imu,
            &NoiseSpec {
                sigma_ori: 0.0,
                sigma_acc: sigma,
                seed: 5,
            },
        );
        let mean: Vector3<f64> = noisy.accelerations.iter().map(|f| f[0]).sum::<Vector3<f64>>() / frames as f64;
        let bound = 3.0 * sigma / (frames as f64).sqrt();
        assert!(mean.amax() < bound, "{mean:?} vs {bound}");
    }

    #[test]
    fn root_relative_features() {
        let r = axis_angle_to_matrix(&Vector3::new(0.2, -0.4, 0.9));
        let a = Vector3::new(0.3, -9.0, 1.0);
        let imu = VirtualImuSequence {
            fps: 60.0,
            sensor_ids: vec![0, 4],
            orientations: vec![vec![r, r]],
            accelerations: vec![vec![a, a]],
        };
        let f = normalize_root_relative(&imu, 0).unwrap();
        assert!((f.orientations[0][1] - Matrix3::identity()).amax() < 1e-15);
        assert_eq!(f.accelerations[0][1], Vector3::zeros());
        assert_eq!(f.orientations[0][0], r);
        assert_eq!(f.accelerations[0][0], a);
        assert!(matches!(normalize_root_relative(&imu, 7), Err(Error::MissingSensor(7))));
    }

    #[test]
    fn synthesize_trims_and_selects_consistently() {
        let mut motion = rest_motion(50);
        for (t, f) in motion.frames.iter_mut().enumerate() {
            f.local_rotations[1] = Vector3::new(0.01 * t as f64, 0.0, 0.0);
            f.local_rotations[18] = Vector3::new(0.0, 0.0, (0.1 * t as f64).sin());
        }
        let skel = Skeleton::smpl_default();
        let params = SynthesisParams::default();
        let all = synthesize(&motion, &skel, &default_sites(&[0, 4, 16, 22]), &params).unwrap();
        assert_eq!(all.len(), 50 - 8);
        let sub = synthesize(&motion, &skel, &default_sites(&[0, 16]), &params).unwrap();
        assert_eq!(all.select(&[0, 16]).unwrap(), sub);
    }

    #[test]
    fn imu_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("imu.json");
        let params = SynthesisParams::default();
        let mut motion = rest_motion(12);
        motion.frames[6].local_rotations[2] = Vector3::new(0.1, 0.2, 0.3);
        let imu = synthesize(&motion, &Skeleton::smpl_default(), &default_sites(&[0, 3]), &params).unwrap();
        save_imu(&imu, &params, &path).unwrap();
        let (back, p) = load_imu(&path).unwrap();
        assert_eq!(p, params);
        assert_eq!(back, imu);
    }
}
