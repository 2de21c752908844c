//! Idempotence, nonexpansiveness, membership, and the variational inequality
//! `⟨v − P(v), y − P(v)⟩ ≤ 0` for every set kind, plus grid-search checks in
//! dimension two.

use nalgebra::DVector;
use proptest::prelude::*;
use robopt::linalg::flatten;
use robopt::projections::{dykstra_project, DykstraConfig, SetDescriptor};

const TOL: f64 = 1e-9;

fn point(dim: usize, scale: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-scale..scale, dim).prop_map(DVector::from_vec)
}

fn symmetric(order: usize, scale: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-scale..scale, order * order).prop_map(move |v| {
        let m = nalgebra::DMatrix::from_vec(order, order, v);
        flatten(&((&m + m.transpose()) * 0.5))
    })
}

fn set_kinds() -> impl Strategy<Value = SetDescriptor> {
    prop_oneof![
        (1usize..6, 0.1f64..3.0).prop_flat_map(|(d, r)| {
            point(d, 2.0).prop_map(move |c| SetDescriptor::EuclideanBall {
                center: c.iter().cloned().collect(),
                radius: r,
            })
        }),
        (1usize..8).prop_map(|dim| SetDescriptor::Simplex { dim }),
        (1usize..8, 0.1f64..3.0).prop_map(|(dim, radius)| SetDescriptor::L1Ball { dim, radius }),
        prop::collection::vec((-2.0f64..0.0, 0.0f64..2.0), 1..6).prop_map(|b| SetDescriptor::Box {
            lower: b.iter().map(|x| x.0).collect(),
            upper: b.iter().map(|x| x.1).collect(),
        }),
        (1usize..5, 0.2f64..3.0).prop_map(|(order, radius)| SetDescriptor::PsdFrobeniusBall { order, radius }),
        (1usize..5, 1.1f64..3.0).prop_map(|(order, radius)| SetDescriptor::PsdFrobeniusBallWithCorner {
            order,
            radius,
            corner: 1.0,
        }),
    ]
}

fn is_matrix_kind(s: &SetDescriptor) -> Option<usize> {
    match s {
        SetDescriptor::PsdFrobeniusBall { order, .. } | SetDescriptor::PsdFrobeniusBallWithCorner { order, .. } => {
            Some(*order)
        }
        _ => None,
    }
}

fn inputs() -> impl Strategy<Value = (SetDescriptor, DVector<f64>, DVector<f64>, DVector<f64>)> {
    set_kinds().prop_flat_map(|s| {
        let pt = match is_matrix_kind(&s) {
            Some(order) => symmetric(order, 4.0).boxed(),
            None => point(s.dim(), 4.0).boxed(),
        };
        (Just(s), pt.clone(), pt.clone(), pt)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn projection_laws((set, v, w, y) in inputs()) {
        let pv = set.project(&v).unwrap();
        let pw = set.project(&w).unwrap();
        prop_assert!(set.contains(&pv, TOL), "P(v) = {pv} not in {set:?}");
        let ppv = set.project(&pv).unwrap();
        prop_assert!((&ppv - &pv).norm() <= TOL, "not idempotent: {}", (&ppv - &pv).norm());
        prop_assert!((&pv - &pw).norm() <= (&v - &w).norm() + TOL);
        let py = set.project(&y).unwrap();
        prop_assert!((&v - &pv).dot(&(&py - &pv)) <= TOL * (1.0 + (&v - &pv).norm() * (&py - &pv).norm()));
    }

    #[test]
    fn product_projects_blockwise(v in point(5, 3.0)) {
        let ball = SetDescriptor::unit_ball(2);
        let simplex = SetDescriptor::Simplex { dim: 3 };
        let product = SetDescriptor::Product { parts: vec![ball.clone(), simplex.clone()] };
        let p = product.project(&v).unwrap();
        let head = ball.project(&v.rows(0, 2).into_owned()).unwrap();
        let tail = simplex.project(&v.rows(2, 3).into_owned()).unwrap();
        prop_assert_eq!(p.rows(0, 2).into_owned(), head);
        prop_assert_eq!(p.rows(2, 3).into_owned(), tail);
    }

    #[test]
    fn corner_projection_matches_dykstra(v in symmetric(3, 2.0)) {
        let exact = SetDescriptor::PsdFrobeniusBallWithCorner { order: 3, radius: 2.0, corner: 1.0 }
            .project(&v)
            .unwrap();
        let mut lower = vec![f64::NEG_INFINITY; 9];
        let mut upper = vec![f64::INFINITY; 9];
        lower[0] = 1.0;
        upper[0] = 1.0;
        let sets = [
            SetDescriptor::PsdFrobeniusBall { order: 3, radius: 2.0 },
            SetDescriptor::Box { lower, upper },
        ];
        let out = dykstra_project(&v, &sets, DykstraConfig { max_iter: 20_000, tol: 1e-13 }).unwrap();
        prop_assert!((out.point - exact).norm() < 1e-5);
    }
}

/// Nearest point on a grid of spacing `h` over `[-3, 3]²` restricted to the set.
fn grid_nearest(set: &SetDescriptor, v: &DVector<f64>, h: f64) -> f64 {
    let k = (6.0 / h).round() as i64;
    let mut best = f64::INFINITY;
    for i in 0..=k {
        for j in 0..=k {
            let p = DVector::from_column_slice(&[-3.0 + i as f64 * h, -3.0 + j as f64 * h]);
            if set.contains(&p, 1e-12) {
                best = best.min((v - p).norm());
            }
        }
    }
    best
}

#[test]
fn grid_search_agrees_in_the_plane() {
    let h = 0.005;
    let sets = [
        SetDescriptor::unit_ball(2),
        SetDescriptor::L1Ball { dim: 2, radius: 1.0 },
        SetDescriptor::Box {
            lower: vec![-0.5, -1.0],
            upper: vec![1.0, 0.25],
        },
    ];
    let points = [[2.0, 0.0], [1.3, -2.2], [0.1, 0.2], [-2.5, 1.7]];
    for set in &sets {
        for p in &points {
            let v = DVector::from_column_slice(p);
            let proj = set.project(&v).unwrap();
            let grid = grid_nearest(set, &v, h);
            let exact = (&v - proj).norm();
            assert!(exact <= grid + 1e-12, "{set:?} at {p:?}: exact {exact} grid {grid}");
            assert!(grid <= exact + h * 2f64.sqrt(), "{set:?} at {p:?}: exact {exact} grid {grid}");
        }
    }
}

#[test]
fn simplex_grid_search_on_the_segment() {
    // the 2-simplex is the segment from (1, 0) to (0, 1)
    let set = SetDescriptor::Simplex { dim: 2 };
    for p in [[2.0, 0.0], [0.3, 0.9], [-1.0, -4.0], [0.5, 0.5]] {
        let v = DVector::from_column_slice(&p);
        let proj = set.project(&v).unwrap();
        let grid = (0..=100_000)
            .map(|k| {
                let t = k as f64 / 100_000.0;
                (&v - DVector::from_column_slice(&[t, 1.0 - t])).norm()
            })
            .fold(f64::INFINITY, f64::min);
        let exact = (&v - proj).norm();
        assert!(exact <= grid + 1e-12 && grid <= exact + 1e-5);
    }
}
