//! Euclidean projections onto the convex sets used for the noise vectors and
//! for the decision domains.
//!
//! Every set is described by a [`SetDescriptor`]; points are flat vectors.
//! Matrix-valued sets (the PSD kinds) act on column-major flattenings of
//! `order × order` matrices, so the ambient inner product is the Frobenius one.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::{flatten, l1_norm, min_eigenvalue, symmetric_eigen, symmetrize, unflatten};

/// A nonempty closed convex set with an exact Euclidean projector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SetDescriptor {
    EuclideanBall { center: Vec<f64>, radius: f64 },
    /// The unit simplex `{x ≥ 0, Σx = 1}`.
    Simplex { dim: usize },
    L1Ball { dim: usize, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{X ⪰ 0, ‖X‖_F ≤ radius}` over `order × order` symmetric matrices.
    PsdFrobeniusBall { order: usize, radius: f64 },
    /// `{X ⪰ 0, ‖X‖_F ≤ radius, X₁₁ = corner}`.
    PsdFrobeniusBallWithCorner { order: usize, radius: f64, corner: f64 },
    /// Cartesian product; the point is the concatenation of the parts.
    Product { parts: Vec<SetDescriptor> },
}

impl SetDescriptor {
    pub fn unit_ball(dim: usize) -> Self {
        SetDescriptor::EuclideanBall {
            center: vec![0.0; dim],
            radius: 1.0,
        }
    }

    /// Ambient dimension of the flattened points.
    pub fn dim(&self) -> usize {
        match self {
            SetDescriptor::EuclideanBall { center, .. } => center.len(),
            SetDescriptor::Simplex { dim } | SetDescriptor::L1Ball { dim, .. } => *dim,
            SetDescriptor::Box { lower, .. } => lower.len(),
            SetDescriptor::PsdFrobeniusBall { order, .. }
            | SetDescriptor::PsdFrobeniusBallWithCorner { order, .. } => order * order,
            SetDescriptor::Product { parts } => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    /// Rejects descriptors that would describe an empty or ill-posed set.
    pub fn validate(&self) -> Result<()> {
        match self {
            SetDescriptor::EuclideanBall { radius, .. } => {
                if !(*radius > 0.0) {
                    return param("ball radius must be positive");
                }
            }
            SetDescriptor::Simplex { dim } => {
                if *dim == 0 {
                    return param("simplex dimension must be at least 1");
                }
            }
            SetDescriptor::L1Ball { radius, .. } => {
                if !(*radius > 0.0) {
                    return param("l1-ball radius must be positive");
                }
            }
            SetDescriptor::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(Error::Dimension("box bounds differ in length".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return param("box lower bound exceeds upper bound");
                }
            }
            SetDescriptor::PsdFrobeniusBall { radius, .. } => {
                if !(*radius > 0.0) {
                    return param("Frobenius radius must be positive");
                }
            }
            SetDescriptor::PsdFrobeniusBallWithCorner {
                order,
                radius,
                corner,
            } => {
                if *order == 0 {
                    return param("matrix order must be at least 1");
                }
                if !(*corner > 0.0 && corner < radius) {
                    return param("corner value must lie strictly between 0 and the Frobenius radius");
                }
            }
            SetDescriptor::Product { parts } => {
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// A fixed point of the set, used to initialize iterates.
    pub fn canonical_member(&self) -> DVector<f64> {
        match self {
            SetDescriptor::EuclideanBall { center, .. } => DVector::from_column_slice(center),
            SetDescriptor::Simplex { dim } => DVector::from_element(*dim, 1.0 / *dim as f64),
            SetDescriptor::L1Ball { dim, .. } => DVector::zeros(*dim),
            SetDescriptor::Box { lower, upper } => {
                DVector::from_iterator(lower.len(), lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)))
            }
            SetDescriptor::PsdFrobeniusBall { order, .. } => DVector::zeros(order * order),
            SetDescriptor::PsdFrobeniusBallWithCorner { order, corner, .. } => {
                let mut v = DVector::zeros(order * order);
                v[0] = *corner;
                v
            }
            SetDescriptor::Product { parts } => concat(parts.iter().map(|p| p.canonical_member())),
        }
    }

    /// An upper bound on `max_{x,y ∈ S} ‖x − y‖₂`.
    pub fn l2_diameter(&self) -> f64 {
        match self {
            SetDescriptor::EuclideanBall { radius, .. } => 2.0 * radius,
            SetDescriptor::Simplex { dim } => {
                if *dim > 1 {
                    std::f64::consts::SQRT_2
                } else {
                    0.0
                }
            }
            SetDescriptor::L1Ball { radius, .. } => 2.0 * radius,
            SetDescriptor::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l).powi(2))
                .sum::<f64>()
                .sqrt(),
            SetDescriptor::PsdFrobeniusBall { radius, .. } => 2.0 * radius,
            // the hyperplane X₁₁ = c cuts the R-ball in a ball of radius √(R² − c²)
            SetDescriptor::PsdFrobeniusBallWithCorner { radius, corner, .. } => {
                2.0 * (radius * radius - corner * corner).max(0.0).sqrt()
            }
            SetDescriptor::Product { parts } => parts
                .iter()
                .map(|p| p.l2_diameter().powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Exact Euclidean projection of `v` onto the set.
    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point of length {} projected onto a set of dimension {}",
                v.len(),
                self.dim()
            )));
        }
        match self {
            SetDescriptor::EuclideanBall { center, radius } => {
                Ok(project_ball(v, &DVector::from_column_slice(center), *radius))
            }
            SetDescriptor::Simplex { .. } => Ok(project_simplex(v)),
            SetDescriptor::L1Ball { radius, .. } => Ok(project_l1_ball(v, *radius)),
            SetDescriptor::Box { lower, upper } => Ok(project_box(v, lower, upper)),
            SetDescriptor::PsdFrobeniusBall { order, radius } => {
                let m = project_psd_frobenius(&unflatten(v.as_slice(), *order), *radius)?;
                Ok(flatten(&m))
            }
            SetDescriptor::PsdFrobeniusBallWithCorner {
                order,
                radius,
                corner,
            } => {
                let m = project_psd_frobenius_corner(&unflatten(v.as_slice(), *order), *radius, *corner)?;
                Ok(flatten(&m))
            }
            SetDescriptor::Product { parts } => {
                let mut out = Vec::with_capacity(parts.len());
                let mut offset = 0;
                for p in parts {
                    let k = p.dim();
                    let block = v.rows(offset, k).into_owned();
                    out.push(p.project(&block)?);
                    offset += k;
                }
                Ok(concat(out.into_iter()))
            }
        }
    }

    /// Membership test with absolute tolerance `tol`.
    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        if v.len() != self.dim() || v.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self {
            SetDescriptor::EuclideanBall { center, radius } => {
                (v - DVector::from_column_slice(center)).norm() <= radius + tol
            }
            SetDescriptor::Simplex { .. } => {
                v.iter().all(|&x| x >= -tol) && (v.sum() - 1.0).abs() <= tol
            }
            SetDescriptor::L1Ball { radius, .. } => l1_norm(v) <= radius + tol,
            SetDescriptor::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, u))| *x >= l - tol && *x <= u + tol),
            SetDescriptor::PsdFrobeniusBall { order, radius } => {
                psd_ball_contains(&unflatten(v.as_slice(), *order), *radius, tol)
            }
            SetDescriptor::PsdFrobeniusBallWithCorner {
                order,
                radius,
                corner,
            } => {
                (v[0] - corner).abs() <= tol
                    && psd_ball_contains(&unflatten(v.as_slice(), *order), *radius, tol)
            }
            SetDescriptor::Product { parts } => {
                let mut offset = 0;
                parts.iter().all(|p| {
                    let k = p.dim();
                    let ok = p.contains(&v.rows(offset, k).into_owned(), tol);
                    offset += k;
                    ok
                })
            }
        }
    }
}

fn psd_ball_contains(m: &DMatrix<f64>, radius: f64, tol: f64) -> bool {
    if (m - m.transpose()).amax() > tol {
        return false;
    }
    if m.norm() > radius + tol {
        return false;
    }
    matches!(min_eigenvalue(m), Ok(l) if l >= -tol)
}

fn concat(parts: impl Iterator<Item = DVector<f64>>) -> DVector<f64> {
    let data: Vec<f64> = parts.flat_map(|p| p.data.as_vec().clone()).collect();
    DVector::from_vec(data)
}

/// Radial projection onto the ball `‖v − center‖₂ ≤ radius`.
pub fn project_ball(v: &DVector<f64>, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let diff = v - center;
    let norm = diff.norm();
    if norm <= radius {
        return v.clone();
    }
    center + diff * (radius / norm)
}

pub fn project_box(v: &DVector<f64>, lower: &[f64], upper: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        v.len(),
        v.iter().zip(lower.iter().zip(upper)).map(|(x, (l, u))| x.clamp(*l, *u)),
    )
}

/// Projection onto `{x ≥ 0, Σx = total}` by sorting and thresholding, O(d log d).
fn project_scaled_simplex(v: &DVector<f64>, total: f64) -> DVector<f64> {
    let mut sorted: Vec<f64> = v.iter().cloned().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let candidate = (cumsum - total) / (k + 1) as f64;
        if x - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Projection onto the unit simplex.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    project_scaled_simplex(v, 1.0)
}

/// Projection onto `‖x‖₁ ≤ radius`: soft-thresholding with the simplex threshold of `|v|`.
pub fn project_l1_ball(v: &DVector<f64>, radius: f64) -> DVector<f64> {
    if l1_norm(v) <= radius {
        return v.clone();
    }
    let magnitudes = v.map(f64::abs);
    let w = project_scaled_simplex(&magnitudes, radius);
    DVector::from_iterator(v.len(), v.iter().zip(w.iter()).map(|(x, m)| m.copysign(*x)))
}

/// Projection onto `{X ⪰ 0, ‖X‖_F ≤ radius}`.
///
/// The input is symmetrized first; its skew part is orthogonal to the set.
/// Negative eigenvalues are clipped, then the spectrum is rescaled onto the
/// ball. Both steps act on the eigenvalue vector and commute, so the
/// composition is the exact projection.
pub fn project_psd_frobenius(m: &DMatrix<f64>, radius: f64) -> Result<DMatrix<f64>> {
    let sym = symmetrize(m);
    let eig = symmetric_eigen(sym)?;
    let mut lambda = eig.eigenvalues.map(|l| l.max(0.0));
    let norm = lambda.norm();
    if norm > radius {
        lambda *= radius / norm;
    }
    let q = &eig.eigenvectors;
    let out = q * DMatrix::from_diagonal(&lambda) * q.transpose();
    Ok(symmetrize(&out))
}

/// Projection onto `{X ⪰ 0, ‖X‖_F ≤ radius, X₁₁ = corner}`.
///
/// With `K` the PSD Frobenius ball, the projection equals `P_K(M + μE₁₁)` for
/// the multiplier `μ` of the hyperplane constraint. `μ ↦ P_K(M + μE₁₁)₁₁` is
/// continuous and nondecreasing, so `μ` is found by bracketing and bisection.
pub fn project_psd_frobenius_corner(m: &DMatrix<f64>, radius: f64, corner: f64) -> Result<DMatrix<f64>> {
    if !(corner > 0.0 && corner < radius) {
        return param("corner value must lie strictly between 0 and the Frobenius radius");
    }
    let base = symmetrize(m);
    let shifted = |mu: f64| -> Result<DMatrix<f64>> {
        let mut s = base.clone();
        s[(0, 0)] += mu;
        project_psd_frobenius(&s, radius)
    };

    let mut x = shifted(0.0)?;
    if x[(0, 0)] == corner {
        return Ok(x);
    }
    let scale = 1.0 + base.amax();
    let (mut lo, mut hi) = if x[(0, 0)] < corner { (0.0, scale) } else { (-scale, 0.0) };
    // expand the bracket until it straddles the root
    for _ in 0..200 {
        if x[(0, 0)] < corner {
            x = shifted(hi)?;
            if x[(0, 0)] >= corner {
                break;
            }
            lo = hi;
            hi *= 2.0;
        } else {
            x = shifted(lo)?;
            if x[(0, 0)] <= corner {
                break;
            }
            hi = lo;
            lo *= 2.0;
        }
    }
    let mut best = x;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let xm = shifted(mid)?;
        let g = xm[(0, 0)];
        if (g - corner).abs() < (best[(0, 0)] - corner).abs() {
            best = xm.clone();
        }
        if g == corner {
            return Ok(xm);
        }
        if g < corner {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best[(0, 0)] - corner).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "corner multiplier search stalled at X11 = {}",
            best[(0, 0)]
        )));
    }
    Ok(best)
}

/// Stopping rule for [`dykstra_project`].
#[derive(Debug, Clone, Copy)]
pub struct DykstraConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for DykstraConfig {
    fn default() -> Self {
        DykstraConfig {
            max_iter: 1000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DykstraOutcome {
    pub point: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Dykstra's alternating projections onto the intersection of `sets`.
///
/// Runs full sweeps until one sweep moves the iterate and every correction
/// term by less than `tol`. Non-convergence is reported through the `converged` flag.
pub fn dykstra_project(v: &DVector<f64>, sets: &[SetDescriptor], config: DykstraConfig) -> Result<DykstraOutcome> {
    if sets.is_empty() {
        return param("dykstra_project needs at least one set");
    }
    let mut x = v.clone();
    let mut increments = vec![DVector::zeros(v.len()); sets.len()];
    for iter in 1..=config.max_iter {
        let before = x.clone();
        let mut moved = 0.0f64;
        for (set, inc) in sets.iter().zip(increments.iter_mut()) {
            let shifted = &x + &*inc;
            let y = set.project(&shifted)?;
            let next = shifted - &y;
            moved = moved.max((&next - &*inc).norm());
            *inc = next;
            x = y;
        }
        if (&x - before).norm().max(moved) < config.tol {
            return Ok(DykstraOutcome {
                point: x,
                converged: true,
                iterations: iter,
            });
        }
    }
    Ok(DykstraOutcome {
        point: x,
        converged: false,
        iterations: config.max_iter,
    })
}
