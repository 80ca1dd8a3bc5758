//! Per-point Gaussian occupancy and its probabilistic aggregation.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use super::SplatError;
use crate::instance::Gaussian3D;

fn rotation_matrix(q: [f64; 4]) -> Matrix3<f64> {
    let [w, x, y, z] = q;
    UnitQuaternion::new_unchecked(Quaternion::new(w, x, y, z))
        .to_rotation_matrix()
        .into_inner()
}

/// `Σ = R S Sᵀ Rᵀ` for the Gaussian's rotation `R` and diagonal scale `S`.
///
/// Fails with [`SplatError::DegenerateScale`] when a scale is below
/// `scale_floor`; this only happens for Gaussians built with clamping off.
pub fn build_covariance(g: &Gaussian3D, scale_floor: f64) -> Result<Matrix3<f64>, SplatError> {
    let s = g.scale();
    if s.iter().any(|&v| v < scale_floor) {
        return Err(SplatError::DegenerateScale {
            scale: s,
            floor: scale_floor,
        });
    }
    let r = rotation_matrix(g.rotation());
    let rs = r * Matrix3::from_diagonal(&Vector3::from(s));
    let cov = rs * rs.transpose();
    // symmetrize exactly; the product is symmetric only up to rounding
    Ok((cov + cov.transpose()) * 0.5)
}

/// `Σ⁻¹ = R S⁻² Rᵀ`, built from the factors rather than by inversion.
pub(crate) fn precision_matrix(g: &Gaussian3D) -> Matrix3<f64> {
    let r = rotation_matrix(g.rotation());
    let inv_sq = Vector3::from(g.scale().map(|s| 1.0 / (s * s)));
    let p = r * Matrix3::from_diagonal(&inv_sq) * r.transpose();
    (p + p.transpose()) * 0.5
}

/// Occupancy probability of point `x` under a Gaussian with mean `mean` and
/// covariance `cov`: `exp(-½ (x−m)ᵀ Σ⁻¹ (x−m))`. Equals 1 at the mean.
///
/// Returns `None` when `cov` is not positive definite.
pub fn gaussian_prob(x: [f64; 3], mean: [f64; 3], cov: &Matrix3<f64>) -> Option<f64> {
    let chol = cov.cholesky()?;
    let d = Vector3::from(x) - Vector3::from(mean);
    let y = chol.l().solve_lower_triangular(&d)?;
    Some((-0.5 * y.norm_squared()).exp())
}

/// Axis-aligned box given by center and half-extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub center: [f64; 3],
    pub half_extent: [f64; 3],
}

impl Aabb {
    pub fn min(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.center[a] - self.half_extent[a])
    }

    pub fn max(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.center[a] + self.half_extent[a])
    }
}

/// Tight bounding box of the Mahalanobis ellipsoid of radius `cutoff`:
/// half-extent along axis `a` is `cutoff * sqrt(Σ_aa)`.
pub fn support_aabb(g: &Gaussian3D, instance_center: [f64; 3], cutoff: f64) -> Aabb {
    let r = rotation_matrix(g.rotation());
    let s = g.scale();
    let mut half = [0.0; 3];
    for (a, h) in half.iter_mut().enumerate() {
        // Σ_aa = Σ_j (R_aj s_j)²
        let var: f64 = (0..3).map(|j| (r[(a, j)] * s[j]).powi(2)).sum();
        *h = cutoff * var.sqrt();
    }
    let o = g.offset();
    Aabb {
        center: [0, 1, 2].map(|a| instance_center[a] + o[a]),
        half_extent: half,
    }
}

/// Running `Σ log(1 − pᵢ)` with saturation to exactly 1.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct LogComplement {
    log_sum: f64,
    saturated: bool,
}

impl LogComplement {
    /// Adds the contribution `p = exp(-½ d²)` given the squared distance.
    #[inline]
    pub(crate) fn add_mahalanobis_sq(&mut self, d_sq: f64, epsilon: f64) {
        if self.saturated {
            return;
        }
        let half = -0.5 * d_sq;
        let p = half.exp();
        if p >= 1.0 - epsilon {
            self.saturated = true;
        } else {
            // log(1 - p) without cancellation near p = 1
            self.log_sum += (-half.exp_m1()).ln();
        }
    }

    #[inline]
    pub(crate) fn add_prob(&mut self, p: f64, epsilon: f64) {
        if self.saturated {
            return;
        }
        if p >= 1.0 - epsilon {
            self.saturated = true;
        } else {
            self.log_sum += (-p).ln_1p();
        }
    }

    #[inline]
    pub(crate) fn probability(&self) -> f64 {
        if self.saturated {
            1.0
        } else {
            -self.log_sum.exp_m1()
        }
    }
}

/// `1 − ∏(1 − pᵢ)`, accumulated in log space. Any `pᵢ ≥ 1 − epsilon`
/// saturates the result to exactly 1.
pub fn aggregate_occupancy_eps(probs: &[f64], epsilon: f64) -> f64 {
    let mut acc = LogComplement::default();
    for &p in probs {
        acc.add_prob(p.clamp(0.0, 1.0), epsilon);
    }
    acc.probability()
}

/// [`aggregate_occupancy_eps`] with the default saturation epsilon.
pub fn aggregate_occupancy(probs: &[f64]) -> f64 {
    aggregate_occupancy_eps(probs, super::DEFAULT_SATURATION_EPSILON)
}

/// A Gaussian resolved into world coordinates with its precision matrix.
/// Both splatting paths evaluate distances through this type.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PreparedGaussian {
    mean: [f64; 3],
    // upper triangle of Σ⁻¹: xx, yy, zz, xy, xz, yz
    prec: [f64; 6],
}

impl PreparedGaussian {
    pub(crate) fn new(g: &Gaussian3D, instance_center: [f64; 3]) -> Self {
        let p = precision_matrix(g);
        let o = g.offset();
        Self {
            mean: [0, 1, 2].map(|a| instance_center[a] + o[a]),
            prec: [
                p[(0, 0)],
                p[(1, 1)],
                p[(2, 2)],
                p[(0, 1)],
                p[(0, 2)],
                p[(1, 2)],
            ],
        }
    }

    #[inline]
    pub(crate) fn mahalanobis_sq(&self, x: [f64; 3]) -> f64 {
        let dx = x[0] - self.mean[0];
        let dy = x[1] - self.mean[1];
        let dz = x[2] - self.mean[2];
        let [xx, yy, zz, xy, xz, yz] = self.prec;
        xx * dx * dx + yy * dy * dy + zz * dz * dz + 2.0 * (xy * dx * dy + xz * dx * dz + yz * dy * dz)
    }
}
