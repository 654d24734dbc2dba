//! Shape and portion evaluation: surface sampling, exact nearest-neighbor
//! distances, point-to-point ICP, symmetric Chamfer distance, and MAPE.

mod icp;
mod kdtree;

use nalgebra::{Matrix3, Matrix4, Point3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::meshkit::TriangleMesh;

pub use icp::{icp_register, IcpParams, IcpResult};
pub use kdtree::KdTree3;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),
}

/// A set of 3D points sampled from or compared against a mesh surface.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3<f64>>,
    pub source: String,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>, source: impl Into<String>) -> Result<Self, EvalError> {
        for p in &points {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(EvalError::InvalidInput(
                    "point cloud contains non-finite coordinates".into(),
                ));
            }
        }
        Ok(Self {
            points,
            source: source.into(),
        })
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            source: self.source.clone(),
        }
    }
}

/// Proper rigid motion: rotation (orthonormal, det +1) plus translation.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    pub const ORTHONORMALITY_TOL: f64 = 1e-9;

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Validates orthonormality and det = +1 within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, EvalError> {
        let gram = rotation.transpose() * rotation;
        let ortho_err = (gram - Matrix3::identity()).abs().max();
        let det_err = (rotation.determinant() - 1.0).abs();
        if ortho_err > Self::ORTHONORMALITY_TOL || det_err > Self::ORTHONORMALITY_TOL {
            return Err(EvalError::InvalidInput(format!(
                "not a proper rotation (orthonormality error {ortho_err:.2e}, det error {det_err:.2e})"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Rotation about a unit axis by `angle` radians, then translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(axis),
            angle,
        )
        .into_inner();
        Self {
            rotation,
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn inverse(&self) -> Self {
        let r_inv = self.rotation.transpose();
        Self {
            rotation: r_inv,
            translation: -(r_inv * self.translation),
        }
    }

    /// Angle in radians separating this rotation from `other`'s.
    pub fn rotation_angle_to(&self, other: &Self) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        let cos = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        cos.acos()
    }

    /// Row-major 4x4 homogeneous matrix.
    pub fn to_homogeneous_rows(&self) -> [[f64; 4]; 4] {
        let m: Matrix4<f64> = {
            let mut h = Matrix4::identity();
            h.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
            h.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
            h
        };
        let mut rows = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                rows[r][c] = m[(r, c)];
            }
        }
        rows
    }
}

/// Outcome of comparing a reconstructed mesh against its ground truth.
#[derive(Debug, Clone)]
pub struct EvalResult {
    /// Chamfer distance after registering the reconstruction onto the
    /// ground truth.
    pub chamfer_with_transform: f64,
    /// Chamfer distance between the raw, unregistered clouds. Frame
    /// dependent: both meshes are compared in whatever frames they arrived
    /// in.
    pub chamfer_without_transform: f64,
    pub icp_rmse: f64,
    pub iterations_used: usize,
    pub transform: RigidTransform,
}

impl EvalResult {
    /// Soft diagnostic: registration should not worsen the Chamfer
    /// distance on a converged pair, but sampling noise can flip it on
    /// near-identical inputs, so this is not enforced as an invariant.
    pub fn registration_improved(&self) -> bool {
        self.chamfer_with_transform <= self.chamfer_without_transform
    }

    /// The `x 10^-3` rendering used for reporting.
    pub fn chamfer_with_transform_milli(&self) -> f64 {
        self.chamfer_with_transform * 1e3
    }

    pub fn chamfer_without_transform_milli(&self) -> f64 {
        self.chamfer_without_transform * 1e3
    }
}

/// Draw `n` points area-proportionally across the mesh triangles with
/// uniform barycentric placement. Deterministic for a fixed seed.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud, EvalError> {
    if mesh.is_empty() || mesh.triangle_count() == 0 {
        return Err(EvalError::InvalidInput(
            "cannot sample an empty mesh".into(),
        ));
    }
    if n == 0 {
        return Err(EvalError::InvalidInput("sample count must be >= 1".into()));
    }

    let mut cumulative = Vec::with_capacity(mesh.triangle_count());
    let mut total = 0.0;
    for t in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.triangle_points(t);
        total += 0.5 * (b - a).cross(&(c - a)).norm();
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(EvalError::InvalidInput(
            "mesh has zero surface area".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        let t = cumulative.partition_point(|&acc| acc < u).min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle_points(t);
        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let sqrt_r1 = r1.sqrt();
        let w0 = 1.0 - sqrt_r1;
        let w1 = sqrt_r1 * (1.0 - r2);
        let w2 = sqrt_r1 * r2;
        points.push(Point3::from(a.coords * w0 + b.coords * w1 + c.coords * w2));
    }
    PointCloud::new(points, mesh.name.clone())
}

/// For each query point, the Euclidean distance to its nearest target
/// point, via the exact k-d tree.
pub fn nearest_distances(queries: &PointCloud, target: &PointCloud) -> Result<Vec<f64>, EvalError> {
    if target.is_empty() {
        return Err(EvalError::InvalidInput("target cloud is empty".into()));
    }
    let tree = KdTree3::build(target.points());
    Ok(queries
        .points()
        .iter()
        .map(|q| tree.nearest_distance(q))
        .collect())
}

/// Symmetric Chamfer distance: the mean squared nearest-neighbor distance
/// from `a` to `b` plus the mean squared distance from `b` to `a`.
pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> Result<f64, EvalError> {
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::InvalidInput(
            "Chamfer distance needs two nonempty clouds".into(),
        ));
    }
    let tree_b = KdTree3::build(b.points());
    let tree_a = KdTree3::build(a.points());
    let sum_ab: f64 = a.points().iter().map(|p| tree_b.nearest(p).1).sum();
    let sum_ba: f64 = b.points().iter().map(|p| tree_a.nearest(p).1).sum();
    Ok(sum_ab / a.len() as f64 + sum_ba / b.len() as f64)
}

/// Mean absolute percentage error of predicted against true volumes.
pub fn mape(v_true: &[f64], v_pred: &[f64]) -> Result<f64, EvalError> {
    if v_true.is_empty() || v_true.len() != v_pred.len() {
        return Err(EvalError::InvalidInput(format!(
            "need equal nonempty lists, got {} true / {} predicted",
            v_true.len(),
            v_pred.len()
        )));
    }
    let mut sum = 0.0;
    for (&t, &p) in v_true.iter().zip(v_pred) {
        if !(t > 0.0) {
            return Err(EvalError::InvalidInput(format!(
                "true volumes must be positive, got {t}"
            )));
        }
        sum += ((t - p) / t).abs();
    }
    Ok(sum / v_true.len() as f64 * 100.0)
}

/// Sample both meshes with the same seed, compute the raw Chamfer
/// distance, register ours onto the ground truth, and compute the Chamfer
/// distance again on the registered cloud.
pub fn evaluate_pair(
    ours: &TriangleMesh,
    ground_truth: &TriangleMesh,
    samples: usize,
    seed: u64,
    icp_params: &IcpParams,
) -> Result<EvalResult, EvalError> {
    let cloud_ours = sample_surface(ours, samples, seed)?;
    let cloud_gt = sample_surface(ground_truth, samples, seed)?;

    let chamfer_without_transform = chamfer_distance(&cloud_ours, &cloud_gt)?;
    let reg = icp_register(&cloud_ours, &cloud_gt, icp_params)?;
    let registered = cloud_ours.transformed(&reg.transform);
    let chamfer_with_transform = chamfer_distance(&registered, &cloud_gt)?;

    Ok(EvalResult {
        chamfer_with_transform,
        chamfer_without_transform,
        icp_rmse: reg.rmse,
        iterations_used: reg.iterations,
        transform: reg.transform,
    })
}
