//! Point-to-point ICP registration.
//!
//! Alternates exact nearest-neighbor correspondence with a closed-form
//! least-squares rigid fit (SVD of the cross-covariance, with a reflection
//! guard so the rotation stays proper). The RMSE recorded after each
//! iteration is non-increasing: re-correspondence can only shorten matches
//! and the solver minimizes over the matched pairs.
//!
//! ICP is a local method. With identity initialization (plus the default
//! centroid pre-alignment) it refines poses within the nearest-neighbor
//! capture basin; grossly rotated starts need an external coarse alignment,
//! which is out of scope here.

use nalgebra::{Matrix3, Point3, Vector3};

use super::kdtree::KdTree3;
use super::{EvalError, PointCloud, RigidTransform};

#[derive(Debug, Clone)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Stop when the RMSE improvement over one iteration falls below this.
    pub convergence_eps: f64,
    /// Translate the source centroid onto the target centroid before
    /// iterating.
    pub centroid_init: bool,
    /// Fraction of the worst correspondences excluded from each fit
    /// (0 = untrimmed).
    pub trim_fraction: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            convergence_eps: 1e-6,
            centroid_init: true,
            trim_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcpResult {
    /// Composed transform mapping the original source cloud into the target
    /// frame.
    pub transform: RigidTransform,
    /// RMSE over the correspondences of the final iteration.
    pub rmse: f64,
    pub iterations: usize,
    /// RMSE after each iteration, for convergence diagnostics.
    pub rmse_history: Vec<f64>,
}

/// Register `source` onto `target`.
pub fn icp_register(
    source: &PointCloud,
    target: &PointCloud,
    params: &IcpParams,
) -> Result<IcpResult, EvalError> {
    check_conditioning(source, "source")?;
    check_conditioning(target, "target")?;
    if !(0.0..1.0).contains(&params.trim_fraction) {
        return Err(EvalError::InvalidInput(format!(
            "trim fraction must be in [0, 1), got {}",
            params.trim_fraction
        )));
    }

    let tree = KdTree3::build(target.points());
    let n = source.len();

    let mut rotation = Matrix3::identity();
    let mut translation = if params.centroid_init {
        centroid(target.points()) - centroid(source.points())
    } else {
        Vector3::zeros()
    };

    let mut current: Vec<Point3<f64>> = source
        .points()
        .iter()
        .map(|p| p + translation)
        .collect();

    let keep = if params.trim_fraction > 0.0 {
        ((n as f64 * (1.0 - params.trim_fraction)).ceil() as usize).clamp(3, n)
    } else {
        n
    };

    let mut rmse_history = Vec::new();
    let mut prev_rmse = f64::INFINITY;
    let mut matched: Vec<Point3<f64>> = vec![Point3::origin(); n];

    for _ in 0..params.max_iterations.max(1) {
        let mut pairs: Vec<(usize, f64)> = Vec::with_capacity(n);
        for (i, p) in current.iter().enumerate() {
            let (j, d2) = tree.nearest(p);
            matched[i] = target.points()[j];
            pairs.push((i, d2));
        }
        if keep < n {
            pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
            pairs.truncate(keep);
        }

        let (step_r, step_t) = fit_rigid(&current, &matched, &pairs)?;

        for p in current.iter_mut() {
            *p = Point3::from(step_r * p.coords + step_t);
        }
        rotation = step_r * rotation;
        translation = step_r * translation + step_t;

        // error of the updated transform against this iteration's matches
        let sq_sum: f64 = pairs
            .iter()
            .map(|&(i, _)| (current[i] - matched[i]).norm_squared())
            .sum();
        let rmse = (sq_sum / pairs.len() as f64).sqrt();
        rmse_history.push(rmse);

        if (prev_rmse - rmse).abs() < params.convergence_eps {
            break;
        }
        prev_rmse = rmse;
    }

    let rmse = *rmse_history.last().expect("at least one iteration runs");
    Ok(IcpResult {
        transform: RigidTransform::new(rotation, translation)?,
        rmse,
        iterations: rmse_history.len(),
        rmse_history,
    })
}

fn centroid(points: &[Point3<f64>]) -> Vector3<f64> {
    points.iter().map(|p| p.coords).sum::<Vector3<f64>>() / points.len() as f64
}

/// Reject clouds on which the rigid fit is rank-deficient: fewer than three
/// points, or all points within numerical tolerance of a single line.
fn check_conditioning(cloud: &PointCloud, role: &str) -> Result<(), EvalError> {
    let pts = cloud.points();
    if pts.len() < 3 {
        return Err(EvalError::IllConditioned(format!(
            "{role} cloud has {} points, registration needs at least 3",
            pts.len()
        )));
    }
    let c = centroid(pts);
    let mut scatter = Matrix3::zeros();
    for p in pts {
        let d = p.coords - c;
        scatter += d * d.transpose();
    }
    let svd = scatter.svd(false, false);
    let s = svd.singular_values;
    if s[0] <= 0.0 || s[1] <= s[0] * 1e-12 {
        return Err(EvalError::IllConditioned(format!(
            "{role} cloud is degenerate (coincident or collinear points)"
        )));
    }
    Ok(())
}

/// Least-squares rigid transform mapping `src[i]` onto `dst[i]` over the
/// selected pairs (Kabsch, reflection-guarded).
fn fit_rigid(
    src: &[Point3<f64>],
    dst: &[Point3<f64>],
    pairs: &[(usize, f64)],
) -> Result<(Matrix3<f64>, Vector3<f64>), EvalError> {
    let m = pairs.len() as f64;
    let mut cs = Vector3::zeros();
    let mut cd = Vector3::zeros();
    for &(i, _) in pairs {
        cs += src[i].coords;
        cd += dst[i].coords;
    }
    cs /= m;
    cd /= m;

    let mut h = Matrix3::zeros();
    for &(i, _) in pairs {
        let a = src[i].coords - cs;
        let b = dst[i].coords - cd;
        h += a * b.transpose();
    }

    let svd = h.svd(true, true);
    let u = svd.u.ok_or_else(|| EvalError::IllConditioned("SVD failed".into()))?;
    let v_t = svd.v_t.ok_or_else(|| EvalError::IllConditioned("SVD failed".into()))?;
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    let r = v * correction * u.transpose();
    let t = cd - r * cs;
    Ok((r, t))
}
