use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use curveband::curve_model::{
    extract_zero_level_set, random_curve, Component, FrequencySupport, PointSet, Polyline,
};
use curveband::denoise::{graph_laplacian, solve_quadratic};
use curveband::io;
use curveband::lifting::{dirichlet_gram, gaussian_kernel_real};
use curveband::recovery::{chamfer_distance, nullspace_basis, rank_bound, shift_set, sos_polynomial, TolerancePolicy};
use curveband::segmentation::{gradient_spectrum, GrayImage, ToeplitzLift};

fn points(max: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| [a, b]), 1..max)
}

fn support(max: usize) -> impl Strategy<Value = FrequencySupport> {
    (1..=max, 1..=max).prop_map(|(a, b)| FrequencySupport::new(a, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shift_count_is_rectangular((g1, g2, l1, l2) in (1usize..12, 1usize..12, 1usize..12, 1usize..12)
        .prop_filter("lambda fits", |(g1, g2, l1, l2)| l1 <= g1 && l2 <= g2))
    {
        let gamma = FrequencySupport::new(g1, g2).unwrap();
        let lambda = FrequencySupport::new(l1, l2).unwrap();
        let n = shift_set(gamma, lambda).unwrap().len();
        prop_assert_eq!(n, (g1 - l1 + 1) * (g2 - l2 + 1));
        prop_assert_eq!(rank_bound(gamma, lambda).unwrap(), g1 * g2 - n);
    }

    #[test]
    fn dirichlet_gram_is_hermitian_psd(pts in points(30), s in support(6)) {
        let k = dirichlet_gram(&PointSet::from_planar(&pts), s).unwrap().data;
        let scale = k.norm();
        for i in 0..pts.len() {
            prop_assert!((k[(i, i)] - Complex64::new(s.len() as f64, 0.0)).norm() < 1e-9);
            for j in 0..pts.len() {
                prop_assert!((k[(i, j)] - k[(j, i)].conj()).norm() < 1e-9);
            }
        }
        let min = k.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-8 * scale);
    }

    #[test]
    fn gaussian_entries_in_unit_interval(pts in points(30), sigma in 0.01f64..1.0) {
        let k = gaussian_kernel_real(&PointSet::from_planar(&pts), sigma).unwrap();
        for i in 0..pts.len() {
            prop_assert_eq!(k[(i, i)], 1.0);
            for j in 0..pts.len() {
                prop_assert!(k[(i, j)] >= 0.0 && k[(i, j)] <= 1.0);
                prop_assert_eq!(k[(i, j)], k[(j, i)]);
            }
        }
    }

    #[test]
    fn laplacian_rows_vanish(vals in prop::collection::vec(-1.0f64..1.0, 36)) {
        let w = DMatrix::from_fn(6, 6, |i, j| vals[i.min(j) * 6 + i.max(j)]);
        let l = graph_laplacian(&w).unwrap();
        for i in 0..6 {
            prop_assert!(l.row(i).sum().abs() <= 1e-12);
        }
    }

    #[test]
    fn quadratic_solve_is_equivariant(
        ys in prop::collection::vec(-1.0f64..1.0, 10),
        ws in prop::collection::vec(0.0f64..1.0, 25),
        t in (-2.0f64..2.0, -2.0f64..2.0),
        lambda in 0.0f64..3.0,
    ) {
        let y = DMatrix::from_column_slice(2, 5, &ys);
        let w = DMatrix::from_fn(5, 5, |i, j| if i == j { 0.0 } else { ws[i.min(j) * 5 + i.max(j)] });
        let l = graph_laplacian(&w).unwrap();
        let x = solve_quadratic(&y, &l, lambda).unwrap();
        let shifted = DMatrix::from_fn(2, 5, |d, p| y[(d, p)] + if d == 0 { t.0 } else { t.1 });
        let xs = solve_quadratic(&shifted, &l, lambda).unwrap();
        for p in 0..5 {
            prop_assert!((xs[(0, p)] - x[(0, p)] - t.0).abs() <= 1e-10);
            prop_assert!((xs[(1, p)] - x[(1, p)] - t.1).abs() <= 1e-10);
        }
        // reversing the points reverses the solution
        let rev: Vec<usize> = (0..5).rev().collect();
        let yr = DMatrix::from_fn(2, 5, |d, p| y[(d, rev[p])]);
        let lr = DMatrix::from_fn(5, 5, |i, j| l[(rev[i], rev[j])]);
        let xr = solve_quadratic(&yr, &lr, lambda).unwrap();
        for p in 0..5 {
            for d in 0..2 {
                prop_assert!((xr[(d, p)] - x[(d, rev[p])]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn chamfer_is_a_symmetric_premetric(a in points(40), b in points(40)) {
        let line = |v: &[[f64; 2]]| Polyline::new(vec![Component { vertices: v.to_vec(), closed: false }]);
        let (la, lb) = (line(&a), line(&b));
        let ab = chamfer_distance(&la, &lb).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - chamfer_distance(&lb, &la).unwrap()).abs() <= 1e-15);
        prop_assert_eq!(chamfer_distance(&la, &la).unwrap(), 0.0);
    }

    #[test]
    fn nullspace_is_orthonormal_and_sos_nonnegative(pts in points(40), s in support(5)) {
        let basis = nullspace_basis(&PointSet::from_planar(&pts), s, TolerancePolicy::analytic()).unwrap();
        prop_assert_eq!(basis.dim() + basis.rank(), s.len());
        for (i, u) in basis.vectors.iter().enumerate() {
            for (j, v) in basis.vectors.iter().enumerate() {
                let ip: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - Complex64::new(expected, 0.0)).norm() <= 1e-10);
            }
        }
        if basis.dim() > 0 {
            let sos = sos_polynomial(&basis).unwrap();
            for p in &pts {
                prop_assert!(sos.value_at([p[1], p[0]]) >= 0.0);
            }
        }
    }

    #[test]
    fn lift_is_linear(pixels in prop::collection::vec(0.0f64..1.0, 256), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let img = GrayImage::new(16, 16, pixels).unwrap();
        let lift = ToeplitzLift::new(gradient_spectrum(&img), FrequencySupport::square(3).unwrap()).unwrap();
        let c1: Vec<Complex64> = (0..9).map(|i| Complex64::new(i as f64 - 4.0, 1.0)).collect();
        let c2: Vec<Complex64> = (0..9).map(|i| Complex64::new(0.5, (i * i) as f64 / 10.0)).collect();
        let mix: Vec<Complex64> = c1.iter().zip(&c2).map(|(x, y)| a * x + b * y).collect();
        let lhs = lift.apply(&mix).unwrap();
        let (r1, r2) = (lift.apply(&c1).unwrap(), lift.apply(&c2).unwrap());
        let scale = lhs.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (a * r1[i] + b * r2[i])).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn zero_sets_are_closed_loops(seed in 0u64..1000, k in prop::sample::select(vec![3usize, 5])) {
        let poly = random_curve(FrequencySupport::square(k).unwrap(), seed).unwrap();
        let line = extract_zero_level_set(&poly, 128).unwrap();
        for comp in &line.components {
            prop_assert!(comp.closed);
        }
    }

    #[test]
    fn text_formats_round_trip(pts in points(30), seed in 0u64..1000) {
        let set = PointSet::from_planar(&pts);
        prop_assert_eq!(io::points_from_csv(&io::points_to_csv(&set)).unwrap(), set);
        let poly = random_curve(FrequencySupport::square(3).unwrap(), seed).unwrap();
        let back = io::coefficients_from_json(&io::coefficients_to_json(&poly).unwrap()).unwrap();
        prop_assert_eq!(back, poly);
    }
}
