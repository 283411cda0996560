//! 24-joint kinematic skeleton with forward kinematics and rigid vertex attachment.
//!
//! Joint indices follow the SMPL convention:
//!
//! | idx | joint      | idx | joint      | idx | joint       |
//! |-----|------------|-----|------------|-----|-------------|
//! | 0   | pelvis     | 8   | R ankle    | 16  | L shoulder  |
//! | 1   | L hip      | 9   | spine 3    | 17  | R shoulder  |
//! | 2   | R hip      | 10  | L foot     | 18  | L elbow     |
//! | 3   | spine 1    | 11  | R foot     | 19  | R elbow     |
//! | 4   | L knee     | 12  | neck       | 20  | L wrist     |
//! | 5   | R knee     | 13  | L collar   | 21  | R wrist     |
//! | 6   | spine 2    | 14  | R collar   | 22  | L hand      |
//! | 7   | L ankle    | 15  | head       | 23  | R hand      |
//!
//! A joint's rotation actuates the segment hanging below it, so a sensor on the
//! thigh is attached to the hip joint and a sensor on the forearm to the elbow.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotation::axis_angle_to_matrix;

pub const SMPL_JOINT_COUNT: usize = 24;
pub const SMPL_VERTEX_COUNT: usize = 6890;

/// SMPL kinematic tree; `None` marks the root.
pub const SMPL_PARENTS: [Option<usize>; SMPL_JOINT_COUNT] = [
    None,
    Some(0),
    Some(0),
    Some(0),
    Some(1),
    Some(2),
    Some(3),
    Some(4),
    Some(5),
    Some(6),
    Some(7),
    Some(8),
    Some(9),
    Some(9),
    Some(9),
    Some(12),
    Some(13),
    Some(14),
    Some(16),
    Some(17),
    Some(18),
    Some(19),
    Some(20),
    Some(21),
];

/// Stand-in rest offsets (meters, y up, +x toward the body's left, +z forward).
/// Proportions approximate an adult template; they are not SMPL template values.
const DEFAULT_REST_OFFSETS: [[f64; 3]; SMPL_JOINT_COUNT] = [
    [0.0, 0.0, 0.0],
    [0.06, -0.09, 0.0],
    [-0.06, -0.09, 0.0],
    [0.0, 0.11, -0.02],
    [0.04, -0.38, 0.0],
    [-0.04, -0.38, 0.0],
    [0.0, 0.13, 0.0],
    [-0.01, -0.40, -0.04],
    [0.01, -0.40, -0.04],
    [0.0, 0.05, 0.02],
    [0.04, -0.06, 0.12],
    [-0.04, -0.06, 0.12],
    [0.0, 0.21, -0.03],
    [0.08, 0.11, -0.01],
    [-0.08, 0.11, -0.01],
    [0.0, 0.09, 0.05],
    [0.12, 0.05, -0.01],
    [-0.12, 0.05, -0.01],
    [0.26, -0.01, -0.02],
    [-0.26, -0.01, -0.02],
    [0.25, 0.01, 0.0],
    [-0.25, 0.01, 0.0],
    [0.08, -0.01, -0.01],
    [-0.08, -0.01, -0.01],
];

/// (vertex id, joint id, offset in the joint's rest frame) for the 25 basic sensor sites.
const DEFAULT_SENSOR_SITES: [(usize, usize, [f64; 3]); 25] = [
    (3021, 0, [0.0, 0.0, -0.09]),
    (3016, 3, [0.0, 0.05, -0.10]),
    (3496, 9, [0.0, 0.12, 0.10]),
    (4362, 2, [-0.07, -0.15, 0.06]),
    (876, 1, [0.07, -0.15, 0.06]),
    (4197, 14, [-0.12, 0.08, 0.0]),
    (707, 13, [0.12, 0.08, 0.0]),
    (1305, 9, [0.0, 0.10, -0.11]),
    (958, 1, [0.10, -0.20, 0.0]),
    (4444, 2, [-0.10, -0.20, 0.0]),
    (5335, 17, [-0.12, 0.0, 0.04]),
    (1874, 16, [0.12, 0.0, 0.04]),
    (1719, 16, [0.22, 0.0, -0.04]),
    (5188, 17, [-0.22, 0.0, -0.04]),
    (4516, 2, [-0.02, -0.33, 0.06]),
    (1032, 1, [0.02, -0.33, 0.06]),
    (1623, 18, [0.06, 0.0, -0.03]),
    (5092, 19, [-0.06, 0.0, -0.03]),
    (4662, 5, [-0.01, -0.15, 0.06]),
    (1177, 4, [0.01, -0.15, 0.06]),
    (411, 12, [0.0, 0.15, 0.02]),
    (5424, 19, [-0.22, 0.0, 0.0]),
    (1961, 18, [0.22, 0.0, 0.0]),
    (3322, 4, [0.01, -0.35, 0.04]),
    (6723, 5, [-0.01, -0.35, 0.04]),
];

/// A mesh vertex rigidly attached to the joint that actuates it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexAttachment {
    pub vertex_id: usize,
    pub joint_id: usize,
    pub rest_offset: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub joint_count: usize,
    pub parents: Vec<Option<usize>>,
    pub rest_offsets: Vec<Vector3<f64>>,
    pub tracked_vertices: Vec<VertexAttachment>,
}

impl Skeleton {
    /// Builds a skeleton after checking the tree invariants.
    pub fn new(
        parents: Vec<Option<usize>>,
        rest_offsets: Vec<Vector3<f64>>,
        tracked_vertices: Vec<VertexAttachment>,
    ) -> Result<Self> {
        let skeleton = Skeleton {
            joint_count: parents.len(),
            parents,
            rest_offsets,
            tracked_vertices,
        };
        skeleton.validate()?;
        Ok(skeleton)
    }

    /// SMPL joint layout with stand-in rest offsets; tracks the 25 basic sensor vertices.
    pub fn smpl_default() -> Self {
        let tracked = DEFAULT_SENSOR_SITES
            .iter()
            .map(|&(vertex_id, joint_id, o)| VertexAttachment {
                vertex_id,
                joint_id,
                rest_offset: Vector3::from(o),
            })
            .collect();
        Skeleton {
            joint_count: SMPL_JOINT_COUNT,
            parents: SMPL_PARENTS.to_vec(),
            rest_offsets: DEFAULT_REST_OFFSETS.iter().map(|&o| Vector3::from(o)).collect(),
            tracked_vertices: tracked,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSkeleton(msg));
        if self.joint_count == 0 {
            return bad("joint_count must be at least 1".into());
        }
        if self.parents.len() != self.joint_count {
            return bad(format!(
                "parents has {} entries, joint_count is {}",
                self.parents.len(),
                self.joint_count
            ));
        }
        if self.rest_offsets.len() != self.joint_count {
            return bad(format!(
                "rest_offsets has {} entries, joint_count is {}",
                self.rest_offsets.len(),
                self.joint_count
            ));
        }
        if self.parents[0].is_some() {
            return bad("joint 0 must be the root".into());
        }
        for (j, p) in self.parents.iter().enumerate().skip(1) {
            match p {
                None => return bad(format!("joint {j} has no parent; only joint 0 may be a root")),
                Some(p) if *p >= j => {
                    return bad(format!("parent of joint {j} is {p}; parents must precede children"))
                }
                _ => {}
            }
        }
        let smpl = self.joint_count == SMPL_JOINT_COUNT;
        for v in &self.tracked_vertices {
            if v.joint_id >= self.joint_count {
                return bad(format!(
                    "tracked vertex {} references joint {}",
                    v.vertex_id, v.joint_id
                ));
            }
            if smpl && v.vertex_id >= SMPL_VERTEX_COUNT {
                return bad(format!("vertex id {} out of SMPL range", v.vertex_id));
            }
        }
        Ok(())
    }

    pub fn attachment_for_vertex(&self, vertex_id: usize) -> Option<&VertexAttachment> {
        self.tracked_vertices.iter().find(|a| a.vertex_id == vertex_id)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let skeleton: Skeleton = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        skeleton.validate()?;
        Ok(skeleton)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

impl Default for Skeleton {
    fn default() -> Self {
        Self::smpl_default()
    }
}

/// Per-joint local rotations (axis-angle, radians) plus root translation (meters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub local_rotations: Vec<Vector3<f64>>,
    pub root_translation: Vector3<f64>,
}

impl Pose {
    pub fn rest(joint_count: usize) -> Self {
        Pose {
            local_rotations: vec![Vector3::zeros(); joint_count],
            root_translation: Vector3::zeros(),
        }
    }

    pub fn joint_count(&self) -> usize {
        self.local_rotations.len()
    }

    /// Flattened axis-angle triples, joint-major.
    pub fn rotation_vector(&self) -> Vec<f64> {
        self.local_rotations.iter().flat_map(|r| r.iter().copied()).collect()
    }

    /// Inverse of [`Pose::rotation_vector`] with zero root translation.
    pub fn from_rotation_vector(values: &[f64]) -> Self {
        Pose {
            local_rotations: values
                .chunks_exact(3)
                .map(|c| Vector3::new(c[0], c[1], c[2]))
                .collect(),
            root_translation: Vector3::zeros(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FkResult {
    pub global_rotations: Vec<Matrix3<f64>>,
    pub global_positions: Vec<Vector3<f64>>,
}

pub fn forward_kinematics(skeleton: &Skeleton, pose: &Pose) -> Result<FkResult> {
    if pose.joint_count() != skeleton.joint_count {
        return Err(Error::DimensionMismatch {
            what: "pose joint count",
            expected: skeleton.joint_count,
            actual: pose.joint_count(),
        });
    }
    let n = skeleton.joint_count;
    let mut rotations: Vec<Matrix3<f64>> = Vec::with_capacity(n);
    let mut positions: Vec<Vector3<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let local = axis_angle_to_matrix(&pose.local_rotations[j]);
        match skeleton.parents[j] {
            None => {
                rotations.push(local);
                positions.push(pose.root_translation);
            }
            Some(p) => {
                rotations.push(rotations[p] * local);
                positions.push(positions[p] + rotations[p] * skeleton.rest_offsets[j]);
            }
        }
    }
    Ok(FkResult {
        global_rotations: rotations,
        global_positions: positions,
    })
}

pub fn vertex_position(fk: &FkResult, attachment: &VertexAttachment) -> Result<Vector3<f64>> {
    let j = attachment.joint_id;
    if j >= fk.global_positions.len() {
        return Err(Error::InvalidJoint {
            joint: j,
            joint_count: fk.global_positions.len(),
        });
    }
    Ok(fk.global_positions[j] + fk.global_rotations[j] * attachment.rest_offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::orthonormality_error;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn chain(offsets: &[[f64; 3]]) -> Skeleton {
        let parents = (0..offsets.len())
            .map(|j| if j == 0 { None } else { Some(j - 1) })
            .collect();
        Skeleton::new(
            parents,
            offsets.iter().map(|&o| Vector3::from(o)).collect(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn default_skeleton_is_valid() {
        let s = Skeleton::smpl_default();
        s.validate().unwrap();
        assert_eq!(s.tracked_vertices.len(), 25);
    }

    #[test]
    fn identity_pose_accumulates_rest_offsets() {
        let s = Skeleton::smpl_default();
        let fk = forward_kinematics(&s, &Pose::rest(24)).unwrap();
        for j in 0..24 {
            let mut path = vec![j];
            while let Some(p) = s.parents[*path.last().unwrap()] {
                path.push(p);
            }
            // accumulate root-first
            let expected = path
                .iter()
                .rev()
                .skip(1)
                .fold(Vector3::zeros(), |acc, &k| acc + s.rest_offsets[k]);
            assert_eq!(fk.global_positions[j], expected, "joint {j}");
            assert_eq!(fk.global_rotations[j], Matrix3::identity());
        }
    }

    #[test]
    fn root_quarter_turn_moves_child() {
        let s = chain(&[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let t = Vector3::new(0.5, -2.0, 3.0);
        let pose = Pose {
            local_rotations: vec![Vector3::new(0.0, 0.0, FRAC_PI_2), Vector3::zeros()],
            root_translation: t,
        };
        let fk = forward_kinematics(&s, &pose).unwrap();
        let expected = t + Vector3::new(-1.0, 0.0, 0.0);
        assert!((fk.global_positions[1] - expected).amax() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s = Skeleton::smpl_default();
        assert!(matches!(
            forward_kinematics(&s, &Pose::rest(23)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn vertex_on_half_turned_joint() {
        let s = chain(&[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let pose = Pose {
            local_rotations: vec![Vector3::zeros(), Vector3::new(0.0, 0.0, PI)],
            root_translation: Vector3::zeros(),
        };
        let fk = forward_kinematics(&s, &pose).unwrap();
        let a = VertexAttachment {
            vertex_id: 0,
            joint_id: 1,
            rest_offset: Vector3::new(1.0, 0.0, 0.0),
        };
        let p = vertex_position(&fk, &a).unwrap();
        assert!((p - (fk.global_positions[1] + Vector3::new(-1.0, 0.0, 0.0))).amax() < 1e-15);
    }

    #[test]
    fn vertex_with_zero_offset_is_joint_position() {
        let s = Skeleton::smpl_default();
        let mut pose = Pose::rest(24);
        pose.local_rotations[4] = Vector3::new(0.3, 0.2, -0.9);
        let fk = forward_kinematics(&s, &pose).unwrap();
        let a = VertexAttachment {
            vertex_id: 1,
            joint_id: 7,
            rest_offset: Vector3::zeros(),
        };
        assert_eq!(vertex_position(&fk, &a).unwrap(), fk.global_positions[7]);
        let bad = VertexAttachment { joint_id: 24, ..a };
        assert!(matches!(vertex_position(&fk, &bad), Err(Error::InvalidJoint { .. })));
    }

    #[test]
    fn skeleton_invariants_are_checked() {
        let offs = vec![Vector3::zeros(); 3];
        assert!(Skeleton::new(vec![None, Some(0), Some(2)], offs.clone(), vec![]).is_err());
        assert!(Skeleton::new(vec![None, None, Some(0)], offs.clone(), vec![]).is_err());
        assert!(Skeleton::new(vec![], vec![], vec![]).is_err());
        let bad_vertex = VertexAttachment {
            vertex_id: 0,
            joint_id: 5,
            rest_offset: Vector3::zeros(),
        };
        assert!(Skeleton::new(vec![None, Some(0), Some(1)], offs, vec![bad_vertex]).is_err());
    }

    #[test]
    fn skeleton_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("skeleton.json");
        let s = Skeleton::smpl_default();
        s.save(&path).unwrap();
        assert_eq!(Skeleton::load(&path).unwrap(), s);
    }

    #[test]
    fn fk_rotations_stay_orthonormal_for_large_angles() {
        let s = Skeleton::smpl_default();
        let mut pose = Pose::rest(24);
        for (j, r) in pose.local_rotations.iter_mut().enumerate() {
            *r = Vector3::new(1.0, -2.0, 0.5).normalize() * (0.1 * j as f64 + 2.5);
        }
        let fk = forward_kinematics(&s, &pose).unwrap();
        for r in &fk.global_rotations {
            assert!(orthonormality_error(r) < 1e-9);
            assert!((r.determinant() - 1.0).abs() < 1e-9);
        }
    }
}
