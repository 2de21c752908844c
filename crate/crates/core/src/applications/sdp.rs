//! Robust semidefinite programs
//! `(A_i + s_i Σ_j u_ij P_j) • X + c_i z − b_i ≤ 0 ∀u_i ∈ U`,
//! and the truss topology design encoding.
//!
//! The decision vector is the column-major flattening of `X`, followed by
//! the scalar `z` when the instance has one. `s_i` scales the shared noise
//! term per constraint; constraints with `s_i = 0` are noise-free.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_finite, floored, DenseMatrix, CONSTANT_FLOOR};
use crate::error::{param, Error, Result};
use crate::linalg::{flatten, frobenius_dot, unflatten};
use crate::problem::{Bounds, RobustProblem, UncertaintySet};
use crate::projections::SetDescriptor;

#[derive(Debug, Clone, PartialEq)]
pub struct RobustSdpInstance {
    pub order: usize,
    pub a: Vec<DMatrix<f64>>,
    pub b: DVector<f64>,
    /// Noise matrices shared by every constraint.
    pub p: Vec<DMatrix<f64>>,
    pub noise_scale: Vec<f64>,
    /// Coefficients of the scalar `z`; absent when the instance has no `z`.
    pub z_coeff: Option<Vec<f64>>,
    pub domain: SetDescriptor,
    pub uncertainty: UncertaintySet,
}

impl RobustSdpInstance {
    /// `(A_i + Σ_j u_ij P_j) • X − b_i ≤ 0` over `domain`, with the unit uncertainty ball.
    pub fn new(a: Vec<DMatrix<f64>>, b: DVector<f64>, p: Vec<DMatrix<f64>>, domain: SetDescriptor) -> Result<Self> {
        let order = a.first().map_or(0, |a| a.nrows());
        let m = a.len();
        let d = p.len();
        let inst = RobustSdpInstance {
            order,
            a,
            b,
            p,
            noise_scale: vec![1.0; m],
            z_coeff: None,
            domain,
            uncertainty: UncertaintySet::unit_ball(d),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.a.len();
        if m == 0 {
            return param("robust SDP needs at least one constraint");
        }
        let k = self.order;
        let sym = |name: &str, mat: &DMatrix<f64>| -> Result<()> {
            if mat.nrows() != k || mat.ncols() != k {
                return Err(Error::Dimension(format!("{name} is {}x{}, expected {k}x{k}", mat.nrows(), mat.ncols())));
            }
            check_finite(name, mat.iter().cloned())?;
            if (mat - mat.transpose()).amax() > 1e-12 {
                return param(format!("{name} is not symmetric"));
            }
            Ok(())
        };
        for a in &self.a {
            sym("A_i", a)?;
        }
        for p in &self.p {
            sym("P_j", p)?;
        }
        if self.b.len() != m || self.noise_scale.len() != m {
            return Err(Error::Dimension(format!(
                "{m} constraints, {} offsets, {} noise scales",
                self.b.len(),
                self.noise_scale.len()
            )));
        }
        check_finite("b", self.b.iter().cloned())?;
        check_finite("noise scale", self.noise_scale.iter().cloned())?;
        if let Some(zc) = &self.z_coeff {
            if zc.len() != m {
                return Err(Error::Dimension(format!("{} z coefficients for {m} constraints", zc.len())));
            }
            check_finite("z coefficient", zc.iter().cloned())?;
        }
        if self.uncertainty.dimension() != self.p.len() {
            return Err(Error::Dimension("uncertainty dimension differs from the number of noise matrices".into()));
        }
        if self.domain.dim() != self.decision_dim() {
            return Err(Error::Dimension(format!(
                "domain of dimension {} for {} decision variables",
                self.domain.dim(),
                self.decision_dim()
            )));
        }
        self.domain.validate()
    }

    pub fn has_z(&self) -> bool {
        self.z_coeff.is_some()
    }

    /// Splits a decision vector into `X` and `z` (zero when absent).
    pub fn split(&self, x: &DVector<f64>) -> (DMatrix<f64>, f64) {
        let k2 = self.order * self.order;
        let z = if self.has_z() { x[k2] } else { 0.0 };
        (unflatten(&x.as_slice()[..k2], self.order), z)
    }

    /// The decision vector for `(X, z)`.
    pub fn join(&self, x: &DMatrix<f64>, z: f64) -> DVector<f64> {
        let mut v: Vec<f64> = x.as_slice().to_vec();
        if self.has_z() {
            v.push(z);
        }
        DVector::from_vec(v)
    }

    /// `(P₁ • X, …, P_d • X)`.
    pub fn noise_inner_products(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.p.len(), self.p.iter().map(|p| frobenius_dot(p, x)))
    }

    fn z_term(&self, i: usize, z: f64) -> f64 {
        self.z_coeff.as_ref().map_or(0.0, |c| c[i] * z)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SdpDocument::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<SdpDocument>(s)?.try_into()
    }
}

impl RobustProblem for RobustSdpInstance {
    fn num_constraints(&self) -> usize {
        self.a.len()
    }

    fn decision_dim(&self) -> usize {
        self.order * self.order + usize::from(self.has_z())
    }

    fn noise_dim(&self) -> usize {
        self.p.len()
    }

    fn domain(&self) -> &SetDescriptor {
        &self.domain
    }

    fn uncertainty(&self) -> &UncertaintySet {
        &self.uncertainty
    }

    fn constraint_value(&self, i: usize, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        let (mat, z) = self.split(x);
        frobenius_dot(&self.a[i], &mat) + self.noise_scale[i] * self.noise_inner_products(&mat).dot(u)
            + self.z_term(i, z)
            - self.b[i]
    }

    fn noise_gradient_entry(&self, i: usize, j: usize, x: &DVector<f64>, _u: &DVector<f64>) -> f64 {
        let (mat, _) = self.split(x);
        self.noise_scale[i] * frobenius_dot(&self.p[j], &mat)
    }

    fn noise_gradient(&self, i: usize, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        let (mat, _) = self.split(x);
        self.noise_inner_products(&mat) * self.noise_scale[i]
    }

    fn decision_subgradient(&self, i: usize, _x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut g = self.a[i].clone();
        if self.noise_scale[i] != 0.0 {
            for (p, uj) in self.p.iter().zip(u.iter()) {
                g += p * (self.noise_scale[i] * uj);
            }
        }
        let z = self.z_coeff.as_ref().map_or(0.0, |c| c[i]);
        self.join(&g, z)
    }

    fn linear_decomposition(&self, i: usize, x: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
        let (mat, z) = self.split(x);
        Some((
            self.noise_inner_products(&mat) * self.noise_scale[i],
            frobenius_dot(&self.a[i], &mat) + self.z_term(i, z) - self.b[i],
        ))
    }
}

/// `max ‖X‖_F` over the matrix part of the domain.
pub fn frobenius_radius(domain: &SetDescriptor) -> Result<f64> {
    match domain {
        SetDescriptor::PsdFrobeniusBall { radius, .. } | SetDescriptor::PsdFrobeniusBallWithCorner { radius, .. } => {
            Ok(*radius)
        }
        SetDescriptor::Product { parts } if !parts.is_empty() => frobenius_radius(&parts[0]),
        other => param(format!("SDP constants need a PSD Frobenius-ball domain, got {other:?}")),
    }
}

/// Gradient constants of a robust SDP.
///
/// With `σ = (Σ_j ‖P_j‖_F²)^{1/2}`, `Σ = Σ_j ‖P_j‖_F`, Frobenius radius `R`,
/// and uncertainty radius `r`: `G₂ = Rσ max|s_i|`, `G∞ = RΣ max|s_i|`,
/// `G₁ = RΣ Σ_i|s_i|`, `D = 2r`, `F = r G₂`, `ν = 0`.
pub fn sdp_constants(instance: &RobustSdpInstance) -> Result<Bounds> {
    let radius = frobenius_radius(&instance.domain)?;
    let r = instance.uncertainty.radius;
    let sigma = instance.p.iter().map(|p| p.norm_squared()).sum::<f64>().sqrt();
    let big_sigma: f64 = instance.p.iter().map(|p| p.norm()).sum();
    let scale_max = instance.noise_scale.iter().map(|s| s.abs()).fold(0.0, f64::max);
    let scale_sum: f64 = instance.noise_scale.iter().map(|s| s.abs()).sum();
    let (g2, g_inf, g1) = floored(radius * sigma * scale_max, radius * big_sigma * scale_max, radius * big_sigma * scale_sum);
    let mut bounds = Bounds::new(
        (2.0 * r).max(CONSTANT_FLOOR),
        (r * g2).max(CONSTANT_FLOOR),
        g2,
        g1,
        g_inf,
        0.0,
    )?;
    bounds.per_constraint_g1 = Some(
        instance
            .noise_scale
            .iter()
            .map(|s| (radius * big_sigma * s.abs()).max(CONSTANT_FLOOR))
            .collect(),
    );
    Ok(bounds)
}

/// `max_{u ∈ U} f_i(X, z, u)` for each constraint:
/// `A_i • X + c_i z − b_i + s_i (P•X)ᵀc + r |s_i| ‖(P_j • X)_j‖₂`.
pub fn worst_case_sdp_violation(instance: &RobustSdpInstance, x: &DVector<f64>) -> Vec<f64> {
    let (mat, z) = instance.split(x);
    let inner = instance.noise_inner_products(&mat);
    let r = instance.uncertainty.radius;
    let c = &instance.uncertainty.center;
    (0..instance.a.len())
        .map(|i| {
            let s = instance.noise_scale[i];
            frobenius_dot(&instance.a[i], &mat) + instance.z_term(i, z) - instance.b[i]
                + s * inner.dot(c)
                + r * s.abs() * inner.norm()
        })
        .collect()
}

/// Truss topology design data.
#[derive(Debug, Clone, PartialEq)]
pub struct TtdInstance {
    /// Bar direction vectors `v_i ∈ ℝⁿ`.
    pub nodes: Vec<DVector<f64>>,
    /// Total volume `V > 0`.
    pub volume: f64,
    /// Load ellipsoid `{Qu : ‖u‖₂ ≤ 1}`, `Q ∈ ℝ^{n×d}`.
    pub q: DMatrix<f64>,
    /// Compliance level `λ`.
    pub lambda: f64,
    /// Frobenius radius `R` of the matrix domain.
    pub radius: f64,
    /// Nominal load `f`; zero when absent.
    pub nominal_load: Option<DVector<f64>>,
}

impl TtdInstance {
    pub fn new(nodes: Vec<DVector<f64>>, volume: f64, q: DMatrix<f64>, lambda: f64) -> Self {
        TtdInstance {
            nodes,
            volume,
            q,
            lambda,
            radius: 2.0,
            nominal_load: None,
        }
    }
}

/// `[[0, wᵀ], [w, 0]]` of order `n + 1`.
pub fn arrow_block(w: &DVector<f64>) -> DMatrix<f64> {
    let n = w.len();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    for k in 0..n {
        m[(0, k + 1)] = w[k];
        m[(k + 1, 0)] = w[k];
    }
    m
}

/// Encodes the robust truss problem at compliance level `λ`:
///
/// - index 0: `λ − C • X − V z − (Σ_j u_j P_j) • X ≤ 0` with `C = [[0, fᵀ], [f, 0]]`;
/// - index `i ≥ 1`: `A_i • X − z ≤ 0` with `A_i = diag(0, v_i v_iᵀ)`;
///
/// over `{X ⪰ 0, ‖X‖_F ≤ R, X₁₁ = 1} × [−1, 1]`, with `P_j = [[0, Q_jᵀ], [Q_j, 0]]`.
pub fn build_ttd(t: &TtdInstance) -> Result<RobustSdpInstance> {
    if !(t.volume > 0.0 && t.volume.is_finite()) {
        return param(format!("volume must be positive, got {}", t.volume));
    }
    let n = t.q.nrows();
    if t.nodes.iter().any(|v| v.len() != n) {
        return Err(Error::Dimension("node vectors and Q disagree in dimension".into()));
    }
    let load = t.nominal_load.clone().unwrap_or_else(|| DVector::zeros(n));
    if load.len() != n {
        return Err(Error::Dimension("nominal load has the wrong dimension".into()));
    }
    let order = n + 1;
    let mut a = vec![-arrow_block(&load)];
    let mut b = vec![-t.lambda];
    let mut scale = vec![-1.0];
    let mut zc = vec![-t.volume];
    for v in &t.nodes {
        let mut ai = DMatrix::zeros(order, order);
        ai.view_mut((1, 1), (n, n)).copy_from(&(v * v.transpose()));
        a.push(ai);
        b.push(0.0);
        scale.push(0.0);
        zc.push(-1.0);
    }
    let p: Vec<DMatrix<f64>> = t.q.column_iter().map(|c| arrow_block(&c.into_owned())).collect();
    let d = p.len();
    let inst = RobustSdpInstance {
        order,
        a,
        b: DVector::from_vec(b),
        p,
        noise_scale: scale,
        z_coeff: Some(zc),
        domain: SetDescriptor::Product {
            parts: vec![
                SetDescriptor::PsdFrobeniusBallWithCorner {
                    order,
                    radius: t.radius,
                    corner: 1.0,
                },
                SetDescriptor::Box {
                    lower: vec![-1.0],
                    upper: vec![1.0],
                },
            ],
        },
        uncertainty: UncertaintySet::unit_ball(d),
    };
    inst.validate()?;
    Ok(inst)
}

/// JSON form of a robust SDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpDocument {
    pub order: usize,
    pub m: usize,
    pub d: usize,
    pub a: Vec<DenseMatrix>,
    pub b: Vec<f64>,
    pub p: Vec<DenseMatrix>,
    #[serde(default)]
    pub noise_scale: Option<Vec<f64>>,
    #[serde(default)]
    pub z_coeff: Option<Vec<f64>>,
    pub domain: SetDescriptor,
    #[serde(default)]
    pub uncertainty_radius: Option<f64>,
}

impl From<&RobustSdpInstance> for SdpDocument {
    fn from(inst: &RobustSdpInstance) -> Self {
        SdpDocument {
            order: inst.order,
            m: inst.a.len(),
            d: inst.p.len(),
            a: inst.a.iter().map(DenseMatrix::from_matrix).collect(),
            b: inst.b.iter().cloned().collect(),
            p: inst.p.iter().map(DenseMatrix::from_matrix).collect(),
            noise_scale: Some(inst.noise_scale.clone()),
            z_coeff: inst.z_coeff.clone(),
            domain: inst.domain.clone(),
            uncertainty_radius: Some(inst.uncertainty.radius),
        }
    }
}

impl TryFrom<SdpDocument> for RobustSdpInstance {
    type Error = Error;

    fn try_from(doc: SdpDocument) -> Result<Self> {
        if doc.a.len() != doc.m || doc.b.len() != doc.m || doc.p.len() != doc.d {
            return Err(Error::Dimension("SDP document dimensions disagree with its arrays".into()));
        }
        let inst = RobustSdpInstance {
            order: doc.order,
            a: doc.a.iter().map(DenseMatrix::to_matrix).collect::<Result<_>>()?,
            b: DVector::from_vec(doc.b),
            p: doc.p.iter().map(DenseMatrix::to_matrix).collect::<Result<_>>()?,
            noise_scale: doc.noise_scale.unwrap_or_else(|| vec![1.0; doc.m]),
            z_coeff: doc.z_coeff,
            domain: doc.domain,
            uncertainty: UncertaintySet::ball(DVector::zeros(doc.d), doc.uncertainty_radius.unwrap_or(1.0))?,
        };
        inst.validate()?;
        Ok(inst)
    }
}

/// Flattened `X` with `z` appended, for callers assembling decision vectors by hand.
pub fn decision_vector(x: &DMatrix<f64>, z: Option<f64>) -> DVector<f64> {
    let mut v = flatten(x);
    if let Some(z) = z {
        v = v.push(z);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    fn psd_ball(order: usize) -> SetDescriptor {
        SetDescriptor::PsdFrobeniusBall { order, radius: 1.0 }
    }

    #[test]
    fn single_swap_constants() {
        let inst = RobustSdpInstance::new(vec![DMatrix::zeros(2, 2)], DVector::zeros(1), vec![swap()], psd_ball(2)).unwrap();
        let b = sdp_constants(&inst).unwrap();
        assert!((b.g2 * b.g2 - 2.0).abs() < 1e-12);
        assert!((b.g_inf - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identical_unit_matrices() {
        let d = 4;
        let m = 3;
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let inst =
            RobustSdpInstance::new(vec![DMatrix::zeros(2, 2); m], DVector::zeros(m), vec![e; d], psd_ball(2)).unwrap();
        let b = sdp_constants(&inst).unwrap();
        assert!((b.g2 * b.g2 - d as f64).abs() < 1e-12);
        assert!((b.g_inf - d as f64).abs() < 1e-12);
        assert!((b.g1 * b.g_inf / (b.g2 * b.g2) - (m * d) as f64).abs() < 1e-9);
    }

    #[test]
    fn ttd_blocks_from_identity() {
        let t = TtdInstance::new(vec![DVector::from_column_slice(&[1.0, 0.0])], 1.0, DMatrix::identity(2, 2), 0.5);
        let inst = build_ttd(&t).unwrap();
        assert_eq!(inst.p.len(), 2);
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(inst.p[0], expected);
        for p in &inst.p {
            assert!((p.norm() - 2f64.sqrt()).abs() < 1e-15);
        }
        let sigma_sq: f64 = inst.p.iter().map(|p| p.norm_squared()).sum();
        assert!((sigma_sq - 4.0).abs() < 1e-12);
        // only the compliance constraint carries noise
        assert_eq!(inst.noise_scale.iter().filter(|s| **s != 0.0).count(), 1);
    }

    #[test]
    fn ttd_sum_of_frobenius_norms() {
        let q = DMatrix::from_row_slice(2, 3, &[0.3, -1.0, 0.0, 0.4, 2.0, 0.0]);
        let t = TtdInstance::new(vec![DVector::from_column_slice(&[1.0, 1.0])], 2.0, q.clone(), 0.1);
        let inst = build_ttd(&t).unwrap();
        let big_sigma: f64 = inst.p.iter().map(|p| p.norm()).sum();
        let cols: f64 = q.column_iter().map(|c| c.norm()).sum();
        assert!((big_sigma - 2f64.sqrt() * cols).abs() < 1e-12);
    }

    #[test]
    fn worst_case_examples() {
        let inst = RobustSdpInstance::new(vec![DMatrix::identity(2, 2)], DVector::from_element(1, 0.5), vec![swap()], psd_ball(2))
            .unwrap();
        let x = decision_vector(&(DMatrix::identity(2, 2) / 2f64.sqrt()), None);
        let nominal = 2f64.sqrt() - 0.5;
        assert!((worst_case_sdp_violation(&inst, &x)[0] - nominal).abs() < 1e-15);
    }

    #[test]
    fn ttd_feasible_point_and_z() {
        let t = TtdInstance::new(
            vec![DVector::from_column_slice(&[1.0, 0.0]), DVector::from_column_slice(&[0.0, 1.0])],
            1.0,
            DMatrix::identity(2, 2) * 0.1,
            0.5,
        );
        let inst = build_ttd(&t).unwrap();
        let mut x = DMatrix::zeros(3, 3);
        x[(0, 0)] = 1.0;
        let v = inst.join(&x, 1.0);
        assert!(inst.domain.contains(&v, 1e-12));
        let w = worst_case_sdp_violation(&inst, &v);
        assert_eq!(w, vec![-0.5, -1.0, -1.0]);
    }

    #[test]
    fn json_round_trip() {
        let t = TtdInstance::new(vec![DVector::from_column_slice(&[0.6, 0.8])], 1.5, DMatrix::identity(2, 2) * 0.1, 0.3);
        let inst = build_ttd(&t).unwrap();
        assert_eq!(RobustSdpInstance::from_json(&inst.to_json().unwrap()).unwrap(), inst);
    }

    #[test]
    fn rejects_asymmetric_and_bad_volume() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(RobustSdpInstance::new(vec![bad], DVector::zeros(1), vec![swap()], psd_ball(2)).is_err());
        let t = TtdInstance::new(vec![DVector::zeros(2)], 0.0, DMatrix::identity(2, 2), 0.1);
        assert!(build_ttd(&t).is_err());
    }

    #[test]
    fn inert_noise_direction() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let inst = build_ttd(&TtdInstance::new(vec![DVector::from_column_slice(&[1.0, 0.0])], 1.0, q, 0.1)).unwrap();
        assert_eq!(inst.p[1], DMatrix::zeros(3, 3));
    }
}
