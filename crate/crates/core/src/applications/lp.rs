//! Robust linear programs `(a_i + P_i u_i)ᵀx − b_i ≤ 0 ∀u_i ∈ U`, and the
//! worst-case portfolio problem as a special case.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_finite, floored, DenseMatrix, CONSTANT_FLOOR};
use crate::error::{param, Error, Result};
use crate::linalg::{max_row_sum, spectral_norm};
use crate::problem::{Bounds, RobustProblem, UncertaintySet};
use crate::projections::SetDescriptor;

#[derive(Debug, Clone, PartialEq)]
pub struct RobustLpInstance {
    pub a: Vec<DVector<f64>>,
    pub b: DVector<f64>,
    /// `n × d` noise maps.
    pub p: Vec<DMatrix<f64>>,
    pub domain: SetDescriptor,
    pub uncertainty: UncertaintySet,
}

impl RobustLpInstance {
    /// Instance over the unit uncertainty ball.
    pub fn new(a: Vec<DVector<f64>>, b: DVector<f64>, p: Vec<DMatrix<f64>>, domain: SetDescriptor) -> Result<Self> {
        let d = p.first().map_or(0, |p| p.ncols());
        Self::with_uncertainty(a, b, p, domain, UncertaintySet::unit_ball(d))
    }

    pub fn with_uncertainty(
        a: Vec<DVector<f64>>,
        b: DVector<f64>,
        p: Vec<DMatrix<f64>>,
        domain: SetDescriptor,
        uncertainty: UncertaintySet,
    ) -> Result<Self> {
        let inst = RobustLpInstance {
            a,
            b,
            p,
            domain,
            uncertainty,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.a.len();
        if m == 0 {
            return param("robust LP needs at least one constraint");
        }
        let n = self.a[0].len();
        let d = self.uncertainty.dimension();
        if self.b.len() != m || self.p.len() != m {
            return Err(Error::Dimension(format!(
                "{m} rows of a, {} entries of b, {} noise maps",
                self.b.len(),
                self.p.len()
            )));
        }
        for (i, (a, p)) in self.a.iter().zip(&self.p).enumerate() {
            if a.len() != n || p.nrows() != n || p.ncols() != d {
                return Err(Error::Dimension(format!(
                    "constraint {i}: a has length {}, P is {}x{}, expected {n} and {n}x{d}",
                    a.len(),
                    p.nrows(),
                    p.ncols()
                )));
            }
            check_finite("a", a.iter().cloned())?;
            check_finite("P", p.iter().cloned())?;
        }
        check_finite("b", self.b.iter().cloned())?;
        if self.domain.dim() != n {
            return Err(Error::Dimension(format!(
                "domain of dimension {} for {n} decision variables",
                self.domain.dim()
            )));
        }
        self.domain.validate()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&LpDocument::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<LpDocument>(s)?.try_into()
    }
}

impl RobustProblem for RobustLpInstance {
    fn num_constraints(&self) -> usize {
        self.a.len()
    }

    fn decision_dim(&self) -> usize {
        self.a[0].len()
    }

    fn noise_dim(&self) -> usize {
        self.uncertainty.dimension()
    }

    fn domain(&self) -> &SetDescriptor {
        &self.domain
    }

    fn uncertainty(&self) -> &UncertaintySet {
        &self.uncertainty
    }

    fn constraint_value(&self, i: usize, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        self.a[i].dot(x) + (&self.p[i] * u).dot(x) - self.b[i]
    }

    fn noise_gradient_entry(&self, i: usize, j: usize, x: &DVector<f64>, _u: &DVector<f64>) -> f64 {
        self.p[i].column(j).dot(x)
    }

    fn noise_gradient(&self, i: usize, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        self.p[i].tr_mul(x)
    }

    fn decision_subgradient(&self, i: usize, _x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a[i] + &self.p[i] * u
    }

    fn linear_decomposition(&self, i: usize, x: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
        Some((self.p[i].tr_mul(x), self.a[i].dot(x) - self.b[i]))
    }
}

/// `max ‖x‖₁` over the domain; LP constants are stated for ℓ1-bounded domains.
pub fn l1_radius(domain: &SetDescriptor) -> Result<f64> {
    match domain {
        SetDescriptor::L1Ball { radius, .. } => Ok(*radius),
        SetDescriptor::Simplex { .. } => Ok(1.0),
        other => param(format!("LP constants need an l1-ball or simplex domain, got {other:?}")),
    }
}

/// Gradient constants of a robust LP over an ℓ1-bounded domain.
///
/// With `ρ = max ‖x‖₁` and uncertainty radius `r`:
/// `G₂ = ρ max_i min(‖P_i‖₂, ‖P_i‖∞)`, `G∞ = ρ max_i ‖P_i‖∞`,
/// `G₁ = ρ Σ_i ‖P_i‖∞`, `D = 2r`, `F = r G₂`, `ν = 0`.
/// Zero constants are floored at [`CONSTANT_FLOOR`].
pub fn lp_constants(instance: &RobustLpInstance) -> Result<Bounds> {
    let rho = l1_radius(&instance.domain)?;
    let r = instance.uncertainty.radius;
    let per: Vec<f64> = instance.p.iter().map(|p| rho * max_row_sum(p)).collect();
    let g2 = instance
        .p
        .iter()
        .map(|p| rho * spectral_norm(p).min(max_row_sum(p)))
        .fold(0.0, f64::max);
    let g_inf = per.iter().cloned().fold(0.0, f64::max);
    let g1: f64 = per.iter().sum();
    let (g2, g_inf, g1) = floored(g2, g_inf, g1);
    let mut bounds = Bounds::new(
        (2.0 * r).max(CONSTANT_FLOOR),
        (r * g2).max(CONSTANT_FLOOR),
        g2,
        g1,
        g_inf,
        0.0,
    )?;
    bounds.per_constraint_g1 = Some(per.iter().map(|v| v.max(CONSTANT_FLOOR)).collect());
    Ok(bounds)
}

/// `max_{u ∈ U} f_i(x, u) = (a_i + P_i c)ᵀx + r‖P_iᵀx‖₂ − b_i` for each constraint.
pub fn worst_case_lp_violation(instance: &RobustLpInstance, x: &DVector<f64>) -> Vec<f64> {
    let c = &instance.uncertainty.center;
    let r = instance.uncertainty.radius;
    (0..instance.a.len())
        .map(|i| {
            let grad = instance.p[i].tr_mul(x);
            instance.a[i].dot(x) + grad.dot(c) + r * grad.norm() - instance.b[i]
        })
        .collect()
}

/// Worst-case portfolio data: market `i` has returns `r̃_i + κ_i S_i^{1/2} u_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmrpInstance {
    pub r_tilde: Vec<DVector<f64>>,
    pub kappa: Vec<f64>,
    /// `n × d` square-root shape matrices `S_i^{1/2}`, supplied by the caller.
    pub s_half: Vec<DMatrix<f64>>,
    /// Minimum required return `c`.
    pub c: f64,
}

impl GmrpInstance {
    pub fn validate(&self) -> Result<()> {
        let m = self.r_tilde.len();
        if self.kappa.len() != m || self.s_half.len() != m {
            return Err(Error::Dimension(format!(
                "{m} markets, {} scales, {} shape matrices",
                self.kappa.len(),
                self.s_half.len()
            )));
        }
        if self.kappa.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
            return param("market scales kappa must be nonnegative");
        }
        Ok(())
    }

    /// `min_i min_{u ∈ U} (r̃_i + κ_i S_i^{1/2} u)ᵀx` over the unit ball.
    pub fn worst_case_return(&self, x: &DVector<f64>) -> f64 {
        (0..self.r_tilde.len())
            .map(|i| self.r_tilde[i].dot(x) - self.kappa[i] * self.s_half[i].tr_mul(x).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn with_min_return(&self, c: f64) -> Self {
        GmrpInstance { c, ..self.clone() }
    }
}

/// `a_i = −r̃_i`, `b_i = −c`, `P_i = −κ_i S_i^{1/2}` over the simplex and the unit ball.
pub fn build_gmrp(g: &GmrpInstance) -> Result<RobustLpInstance> {
    g.validate()?;
    let n = g.r_tilde.first().map_or(0, |r| r.len());
    let m = g.r_tilde.len();
    RobustLpInstance::new(
        g.r_tilde.iter().map(|r| -r).collect(),
        DVector::from_element(m, -g.c),
        g.s_half.iter().zip(&g.kappa).map(|(s, k)| s * (-k)).collect(),
        SetDescriptor::Simplex { dim: n },
    )
}

/// A random robust LP over the unit ℓ1 ball that is robustly feasible with slack `margin`.
///
/// `a_i` and `P_i` have entries uniform in `[−1, 1]` (`P_i` scaled by `noise_scale`);
/// a random `x₀` with `‖x₀‖₁ = 1/2` gets `max_u f_i(x₀, u) = −margin`.
pub fn random_feasible_lp<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    d: usize,
    noise_scale: f64,
    margin: f64,
    rng: &mut R,
) -> Result<(RobustLpInstance, DVector<f64>)> {
    let mut uniform = |rows: usize, cols: usize| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0));
    let a: Vec<DVector<f64>> = (0..m).map(|_| uniform(n, 1).column(0).into_owned()).collect();
    let p: Vec<DMatrix<f64>> = (0..m).map(|_| uniform(n, d) * noise_scale).collect();
    let raw = uniform(n, 1).column(0).into_owned();
    let norm = raw.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let x0 = raw * (0.5 / norm);
    let b = DVector::from_iterator(m, (0..m).map(|i| a[i].dot(&x0) + p[i].tr_mul(&x0).norm() + margin));
    let inst = RobustLpInstance::new(a, b, p, SetDescriptor::L1Ball { dim: n, radius: 1.0 })?;
    Ok((inst, x0))
}

/// `x₁ ≤ −1` and `−x₁ ≤ −1` over the unit ℓ1 ball, with inert noise: `min_D max_i f_i = 1`.
pub fn two_sided_infeasible_lp(n: usize, d: usize) -> RobustLpInstance {
    let mut e1 = DVector::zeros(n);
    e1[0] = 1.0;
    RobustLpInstance::new(
        vec![e1.clone(), -e1],
        DVector::from_element(2, -1.0),
        vec![DMatrix::zeros(n, d); 2],
        SetDescriptor::L1Ball { dim: n, radius: 1.0 },
    )
    .expect("well-formed instance")
}

/// JSON form of a robust LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpDocument {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    /// `m × n`, row `i` is `a_i`.
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub p: Vec<DenseMatrix>,
    pub domain: SetDescriptor,
    #[serde(default)]
    pub uncertainty_center: Option<Vec<f64>>,
    #[serde(default)]
    pub uncertainty_radius: Option<f64>,
}

impl From<&RobustLpInstance> for LpDocument {
    fn from(inst: &RobustLpInstance) -> Self {
        let m = inst.a.len();
        let n = inst.a[0].len();
        let mut rows = DMatrix::zeros(m, n);
        for (i, a) in inst.a.iter().enumerate() {
            rows.row_mut(i).copy_from(&a.transpose());
        }
        LpDocument {
            m,
            n,
            d: inst.uncertainty.dimension(),
            a: DenseMatrix::from_matrix(&rows),
            b: inst.b.iter().cloned().collect(),
            p: inst.p.iter().map(DenseMatrix::from_matrix).collect(),
            domain: inst.domain.clone(),
            uncertainty_center: Some(inst.uncertainty.center.iter().cloned().collect()),
            uncertainty_radius: Some(inst.uncertainty.radius),
        }
    }
}

impl TryFrom<LpDocument> for RobustLpInstance {
    type Error = Error;

    fn try_from(doc: LpDocument) -> Result<Self> {
        let a = doc.a.to_matrix()?;
        if a.nrows() != doc.m || a.ncols() != doc.n || doc.b.len() != doc.m || doc.p.len() != doc.m {
            return Err(Error::Dimension("LP document dimensions disagree with its arrays".into()));
        }
        let p = doc.p.iter().map(DenseMatrix::to_matrix).collect::<Result<Vec<_>>>()?;
        let center = DVector::from_vec(doc.uncertainty_center.unwrap_or_else(|| vec![0.0; doc.d]));
        if center.len() != doc.d {
            return Err(Error::Dimension("uncertainty center length differs from d".into()));
        }
        let uncertainty = UncertaintySet::ball(center, doc.uncertainty_radius.unwrap_or(1.0))?;
        RobustLpInstance::with_uncertainty(
            a.row_iter().map(|r| r.transpose()).collect(),
            DVector::from_vec(doc.b),
            p,
            doc.domain,
            uncertainty,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1(n: usize) -> SetDescriptor {
        SetDescriptor::L1Ball { dim: n, radius: 1.0 }
    }

    fn single(p: DMatrix<f64>) -> RobustLpInstance {
        let n = p.nrows();
        RobustLpInstance::new(vec![DVector::zeros(n)], DVector::zeros(1), vec![p], l1(n)).unwrap()
    }

    #[test]
    fn identity_constants() {
        let b = lp_constants(&single(DMatrix::identity(2, 2))).unwrap();
        assert!((b.g2 - 1.0).abs() < 1e-12);
        assert_eq!((b.g_inf, b.g1, b.diameter), (1.0, 1.0, 2.0));
    }

    #[test]
    fn copies_add_up_in_g1() {
        let m = 5;
        let inst = RobustLpInstance::new(
            vec![DVector::zeros(2); m],
            DVector::zeros(m),
            vec![DMatrix::identity(2, 2); m],
            l1(2),
        )
        .unwrap();
        let b = lp_constants(&inst).unwrap();
        assert_eq!((b.g1, b.g_inf), (5.0, 1.0));
        assert!((b.g1 * b.g_inf / (b.g2 * b.g2) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn jordan_block_constants() {
        let b = lp_constants(&single(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]))).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((b.g2 - golden).abs() < 1e-12);
        assert_eq!(b.g_inf, 2.0);
    }

    #[test]
    fn worst_case_examples() {
        let inst = single(DMatrix::identity(2, 2));
        let x = DVector::from_column_slice(&[1.0, 0.0]);
        assert!((worst_case_lp_violation(&inst, &x)[0] - 1.0).abs() < 1e-15);

        let a = DVector::from_column_slice(&[0.5, -0.25]);
        let inst = RobustLpInstance::new(vec![a.clone()], DVector::from_element(1, 0.1), vec![DMatrix::zeros(2, 3)], l1(2))
            .unwrap();
        let x = DVector::from_column_slice(&[0.4, -0.6]);
        assert_eq!(worst_case_lp_violation(&inst, &x)[0], a.dot(&x) - 0.1);
    }

    #[test]
    fn gmrp_gradient_is_negated_shape() {
        let s_half = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 2.0]);
        let g = GmrpInstance {
            r_tilde: vec![DVector::from_column_slice(&[0.1, 0.2])],
            kappa: vec![0.3],
            s_half: vec![s_half.clone()],
            c: 0.15,
        };
        let lp = build_gmrp(&g).unwrap();
        let x = DVector::from_column_slice(&[0.25, 0.75]);
        let u = DVector::from_column_slice(&[0.6, -0.1]);
        let grad = lp.noise_gradient(0, &x, &u);
        assert!((grad + s_half.tr_mul(&x) * 0.3).norm() < 1e-15);
        assert!((lp.constraint_value(0, &x, &u) - (0.15 - (g.r_tilde[0].clone() + &s_half * &u * 0.3).dot(&x))).abs() < 1e-15);
    }

    #[test]
    fn zero_kappa_is_nominal() {
        let g = GmrpInstance {
            r_tilde: vec![DVector::from_column_slice(&[0.1, 0.2])],
            kappa: vec![0.0],
            s_half: vec![DMatrix::identity(2, 2)],
            c: 0.15,
        };
        let lp = build_gmrp(&g).unwrap();
        let x = DVector::from_column_slice(&[0.3, 0.7]);
        assert_eq!(worst_case_lp_violation(&lp, &x)[0], 0.15 - g.r_tilde[0].dot(&x));
        assert!(lp_constants(&lp).unwrap().g2 <= CONSTANT_FLOOR);
    }

    #[test]
    fn generated_instance_has_margin() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (inst, x0) = random_feasible_lp(5, 6, 4, 0.3, 0.1, &mut rng).unwrap();
        for v in worst_case_lp_violation(&inst, &x0) {
            assert!((v + 0.1).abs() < 1e-12);
        }
        assert!((x0.iter().map(|v| v.abs()).sum::<f64>() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let inst = RobustLpInstance::new(
            vec![DVector::from_column_slice(&[0.1, -0.2, 0.3]), DVector::from_column_slice(&[1.0 / 3.0, 0.0, 2.0])],
            DVector::from_column_slice(&[0.5, -1.0]),
            vec![
                DMatrix::from_fn(3, 2, |i, j| (i as f64 + 1.0) / (j as f64 + 7.0)),
                DMatrix::from_fn(3, 2, |i, j| (i as f64 - j as f64) * 0.1),
            ],
            l1(3),
        )
        .unwrap();
        let back = RobustLpInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let err = RobustLpInstance::new(vec![DVector::zeros(2)], DVector::zeros(1), vec![DMatrix::zeros(3, 1)], l1(2));
        assert!(matches!(err, Err(Error::Dimension(_))));
        assert!(lp_constants(
            &RobustLpInstance::new(
                vec![DVector::zeros(2)],
                DVector::zeros(1),
                vec![DMatrix::zeros(2, 1)],
                SetDescriptor::unit_ball(2)
            )
            .unwrap()
        )
        .is_err());
    }
}
