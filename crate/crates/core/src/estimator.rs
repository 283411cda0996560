//! Baseline pose estimators over windowed IMU features.
//!
//! Two closed-form baselines stand behind one interface: ridge regression
//! and 1-nearest-neighbour retrieval. Both map a per-frame feature vector to
//! the 24 axis-angle joint rotations of that frame. Fine-tuning data enters
//! the fit with a multiplicity of `finetune_weight`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::body_model::Pose;
use crate::error::{Error, Result};
use crate::imu::VirtualImuSequence;

/// Values per sensor per frame: 9 orientation entries + 3 acceleration entries.
pub const VALUES_PER_SENSOR: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    NearestNeighbor,
    Ridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// Centered window length in frames; odd.
    pub window: usize,
    pub ridge_alpha: f64,
    pub finetune_weight: usize,
    pub seed: u64,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        EstimatorSpec {
            kind: EstimatorKind::NearestNeighbor,
            window: 5,
            ridge_alpha: 1.0,
            finetune_weight: 2,
            seed: 0,
        }
    }
}

impl EstimatorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window % 2 == 0 {
            return Err(Error::param("estimator.window", "must be odd and at least 1"));
        }
        if !(self.ridge_alpha >= 0.0) {
            return Err(Error::param("estimator.ridge_alpha", "must be non-negative"));
        }
        if self.finetune_weight < 1 {
            return Err(Error::param("estimator.finetune_weight", "must be at least 1"));
        }
        Ok(())
    }
}

/// Dense row-major matrix of per-frame vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(dim: usize) -> Self {
        FeatureMatrix { dim, data: Vec::new() }
    }

    pub fn from_rows(dim: usize, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<Self> {
        let mut m = FeatureMatrix::new(dim);
        for r in rows {
            m.push_row(&r)?;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "row length",
                expected: self.dim,
                actual: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn append(&mut self, other: &FeatureMatrix) -> Result<()> {
        if other.is_empty() {
            return Ok(());
        }
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                what: "feature dimension",
                expected: self.dim,
                actual: other.dim,
            });
        }
        self.data.extend_from_slice(&other.data);
        Ok(())
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows(), self.dim, &self.data)
    }
}

/// Paired features and flattened target poses.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub features: FeatureMatrix,
    pub targets: FeatureMatrix,
}

impl TrainingSet {
    pub fn new(features: FeatureMatrix, targets: FeatureMatrix) -> Result<Self> {
        if features.rows() != targets.rows() {
            return Err(Error::DimensionMismatch {
                what: "target rows",
                expected: features.rows(),
                actual: targets.rows(),
            });
        }
        Ok(TrainingSet { features, targets })
    }

    pub fn empty(feature_dim: usize, target_dim: usize) -> Self {
        TrainingSet {
            features: FeatureMatrix::new(feature_dim),
            targets: FeatureMatrix::new(target_dim),
        }
    }

    pub fn rows(&self) -> usize {
        self.features.rows()
    }

    pub fn append(&mut self, other: &TrainingSet) -> Result<()> {
        self.features.append(&other.features)?;
        self.targets.append(&other.targets)
    }

    /// Builds rows from an IMU feature sequence and the poses of the frames it
    /// was synthesized from. `poses[k]` must be the pose at IMU frame `k`.
    pub fn from_sequence(imu: &VirtualImuSequence, poses: &[Pose], window: usize) -> Result<Self> {
        if poses.len() != imu.len() {
            return Err(Error::DimensionMismatch {
                what: "pose count",
                expected: imu.len(),
                actual: poses.len(),
            });
        }
        let features = build_features(imu, window)?;
        let half = window / 2;
        let target_dim = poses.first().map_or(0, |p| 3 * p.joint_count());
        let targets = FeatureMatrix::from_rows(
            target_dim,
            poses[half..poses.len() - half].iter().map(Pose::rotation_vector),
        )?;
        TrainingSet::new(features, targets)
    }
}

/// Concatenates, per sensor and per frame of a centered window, the 9
/// row-major orientation values and 3 acceleration values. Output row `k`
/// belongs to input frame `k + window/2`.
pub fn build_features(imu: &VirtualImuSequence, window: usize) -> Result<FeatureMatrix> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::param("window", "must be odd and at least 1"));
    }
    if imu.len() < window {
        return Err(Error::TooShort {
            needed: window,
            actual: imu.len(),
        });
    }
    let sensors = imu.sensor_ids.len();
    let dim = window * sensors * VALUES_PER_SENSOR;
    let mut m = FeatureMatrix::new(dim);
    m.data.reserve(dim * (imu.len() - window + 1));
    for start in 0..=imu.len() - window {
        for s in 0..sensors {
            for t in start..start + window {
                let r = &imu.orientations[t][s];
                for i in 0..3 {
                    for j in 0..3 {
                        m.data.push(r[(i, j)]);
                    }
                }
                m.data.extend(imu.accelerations[t][s].iter());
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone)]
enum Model {
    Ridge {
        /// feature_dim × target_dim
        weights: DMatrix<f64>,
    },
    NearestNeighbor {
        features: FeatureMatrix,
        targets: FeatureMatrix,
        /// finetune rows are stored once with their weight as multiplicity
        multiplicity: Vec<usize>,
        norms: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct TrainedEstimator {
    spec: EstimatorSpec,
    feature_dim: usize,
    target_dim: usize,
    model: Model,
}

impl TrainedEstimator {
    pub fn spec(&self) -> &EstimatorSpec {
        &self.spec
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    /// Ridge weight matrix (feature_dim × target_dim); `None` for nearest neighbour.
    pub fn ridge_weights(&self) -> Option<&DMatrix<f64>> {
        match &self.model {
            Model::Ridge { weights } => Some(weights),
            Model::NearestNeighbor { .. } => None,
        }
    }
}

pub fn fit(spec: &EstimatorSpec, train: &TrainingSet, finetune: &TrainingSet) -> Result<TrainedEstimator> {
    spec.validate()?;
    if train.rows() == 0 {
        return Err(Error::Estimator("empty training data".into()));
    }
    let feature_dim = train.features.dim();
    let target_dim = train.targets.dim();
    if finetune.rows() > 0 {
        if finetune.features.dim() != feature_dim {
            return Err(Error::DimensionMismatch {
                what: "finetune feature dimension",
                expected: feature_dim,
                actual: finetune.features.dim(),
            });
        }
        if finetune.targets.dim() != target_dim {
            return Err(Error::DimensionMismatch {
                what: "finetune target dimension",
                expected: target_dim,
                actual: finetune.targets.dim(),
            });
        }
    }
    let model = match spec.kind {
        EstimatorKind::Ridge => Model::Ridge {
            weights: fit_ridge(spec, train, finetune)?,
        },
        EstimatorKind::NearestNeighbor => {
            let mut features = train.features.clone();
            let mut targets = train.targets.clone();
            features.append(&finetune.features)?;
            targets.append(&finetune.targets)?;
            let mut multiplicity = vec![1; train.rows()];
            multiplicity.resize(train.rows() + finetune.rows(), spec.finetune_weight);
            let norms = (0..features.rows())
                .map(|i| features.row(i).iter().map(|x| x * x).sum())
                .collect();
            Model::NearestNeighbor {
                features,
                targets,
                multiplicity,
                norms,
            }
        }
    };
    Ok(TrainedEstimator {
        spec: *spec,
        feature_dim,
        target_dim,
        model,
    })
}

/// Solves `(XᵀX + αI) W = XᵀY` with finetune rows counted `finetune_weight` times.
fn fit_ridge(spec: &EstimatorSpec, train: &TrainingSet, finetune: &TrainingSet) -> Result<DMatrix<f64>> {
    let x = train.features.to_dmatrix();
    let y = train.targets.to_dmatrix();
    let mut gram = x.tr_mul(&x);
    let mut rhs = x.tr_mul(&y);
    if finetune.rows() > 0 {
        let w = spec.finetune_weight as f64;
        let xf = finetune.features.to_dmatrix();
        let yf = finetune.targets.to_dmatrix();
        gram += xf.tr_mul(&xf) * w;
        rhs += xf.tr_mul(&yf) * w;
    }
    for i in 0..gram.nrows() {
        gram[(i, i)] += spec.ridge_alpha;
    }
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Estimator(format!(
            "normal matrix is not positive definite (alpha = {}); use a positive ridge_alpha",
            spec.ridge_alpha
        ))
    })?;
    Ok(chol.solve(&rhs))
}

/// Queries per distance block in nearest-neighbour search.
const QUERY_BLOCK: usize = 256;

pub fn predict(est: &TrainedEstimator, features: &FeatureMatrix) -> Result<Vec<Pose>> {
    if features.dim() != est.feature_dim && !features.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "feature dimension",
            expected: est.feature_dim,
            actual: features.dim(),
        });
    }
    match &est.model {
        Model::Ridge { weights } => {
            if features.is_empty() {
                return Ok(Vec::new());
            }
            let y = features.to_dmatrix() * weights;
            Ok((0..y.nrows())
                .map(|i| Pose::from_rotation_vector(&y.row(i).iter().copied().collect::<Vec<_>>()))
                .collect())
        }
        Model::NearestNeighbor {
            features: train,
            targets,
            multiplicity,
            norms,
        } => {
            let mut out = Vec::with_capacity(features.rows());
            let train_m = train.to_dmatrix();
            let mut start = 0;
            while start < features.rows() {
                let end = (start + QUERY_BLOCK).min(features.rows());
                let q = DMatrix::from_row_slice(end - start, features.dim(), &features.data[start * features.dim()..end * features.dim()]);
                // ‖x‖² − 2·x·q per (train row, query); ‖q‖² is constant per query
                let cross = &train_m * q.transpose();
                for k in 0..end - start {
                    let query = features.row(start + k);
                    let qn: f64 = query.iter().map(|v| v * v).sum();
                    let approx: Vec<f64> = (0..train.rows()).map(|i| norms[i] - 2.0 * cross[(i, k)]).collect();
                    let best_approx = approx.iter().copied().fold(f64::INFINITY, f64::min);
                    // expansion error is bounded by a few ulps of the norms involved
                    let slack = 1e-9 * (qn + norms.iter().copied().fold(0.0, f64::max)) + 1e-300;
                    let mut best: Option<(f64, usize)> = None;
                    for (i, &a) in approx.iter().enumerate() {
                        if a > best_approx + slack {
                            continue;
                        }
                        let d = squared_distance(query, train.row(i));
                        let better = match best {
                            None => true,
                            Some((bd, bi)) => d < bd || (d == bd && multiplicity[i] > multiplicity[bi]),
                        };
                        if better {
                            best = Some((d, i));
                        }
                    }
                    let (_, i) = best.expect("training set is non-empty");
                    out.push(Pose::from_rotation_vector(targets.row(i)));
                }
                start = end;
            }
            Ok(out)
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
