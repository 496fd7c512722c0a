use eqles::closures::classical::{clark, smagorinsky};
use eqles::tensor3::{
    from_sym, matmul, sym_trace, to_sym, transpose, Mat3, IDENTITY,
};
use eqles::tensor_basis::{basis, deviatoric_basis, invariants, normalize, split, tbnn_stress};
use nalgebra::{Matrix3, Rotation3, Vector3};
use proptest::prelude::*;

fn mat() -> impl Strategy<Value = Mat3> {
    prop::array::uniform3(prop::array::uniform3(-2.0f64..2.0))
}

fn rotation() -> impl Strategy<Value = Mat3> {
    (prop::array::uniform3(-1.0f64..1.0), 0.0f64..std::f64::consts::TAU, any::<bool>()).prop_filter_map(
        "degenerate axis",
        |(axis, angle, reflect)| {
            let v = Vector3::from(axis);
            if v.norm() < 1e-3 {
                return None;
            }
            let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(v), angle);
            let sign = if reflect { -1.0 } else { 1.0 };
            let m = r.matrix() * sign;
            Some(std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])))
        },
    )
}

fn conj(r: &Mat3, a: &Mat3) -> Mat3 {
    matmul(&matmul(r, a), &transpose(r))
}

fn na(a: &Mat3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| a[i][j])
}

fn close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
    (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
}

proptest! {
    #[test]
    fn split_matches_nalgebra(a in mat()) {
        let (s, w) = split(&a);
        let m = na(&a);
        let s_ref = (m + m.transpose()) * 0.5;
        let w_ref = (m - m.transpose()) * 0.5;
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((s[i][j] - s_ref[(i, j)]).abs() < 1e-15);
                prop_assert!((w[i][j] - w_ref[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn invariants_match_nalgebra(a in mat()) {
        let (s, w) = split(&a);
        let (sn, wn) = (na(&s), na(&w));
        let expected = [
            (sn * sn).trace(),
            (wn * wn).trace(),
            (sn * sn * sn).trace(),
            (sn * wn * wn).trace(),
            (sn * sn * wn * wn).trace(),
        ];
        let got = invariants(&s, &w);
        for k in 0..5 {
            prop_assert!((got[k] - expected[k]).abs() < 1e-12, "{k}: {} vs {}", got[k], expected[k]);
        }
    }

    #[test]
    fn invariants_are_rotation_invariant(a in mat(), r in rotation()) {
        let (s, w) = split(&a);
        let (sr, wr) = split(&conj(&r, &a));
        let (i0, i1) = (invariants(&s, &w), invariants(&sr, &wr));
        for k in 0..5 {
            prop_assert!((i0[k] - i1[k]).abs() < 1e-11);
        }
    }

    #[test]
    fn basis_tensors_rotate_with_the_input(a in mat(), r in rotation()) {
        let (s, w) = split(&a);
        let (sr, wr) = split(&conj(&r, &a));
        let t = basis(&s, &w);
        let tr = basis(&sr, &wr);
        for k in 0..8 {
            prop_assert!(close(&tr[k], &conj(&r, &t[k]), 1e-11), "T{k}");
        }
    }

    #[test]
    fn basis_tensors_are_symmetric(a in mat()) {
        let (s, w) = split(&a);
        for (k, t) in basis(&s, &w).iter().enumerate() {
            prop_assert!(close(t, &transpose(t), 1e-12), "T{k}");
        }
    }

    #[test]
    fn deviatoric_basis_is_trace_free(a in mat()) {
        if let Some((a_star, _)) = normalize(&a) {
            for t in deviatoric_basis(&a_star) {
                prop_assert!(sym_trace(&t).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn normalized_input_has_unit_norm(a in mat()) {
        if let Some((a_star, n2)) = normalize(&a) {
            let f: f64 = a_star.iter().flatten().map(|x| x * x).sum();
            prop_assert!((f - 1.0).abs() < 1e-14);
            prop_assert!((n2 - na(&a).norm_squared()).abs() < 1e-12 * n2.max(1.0));
        }
    }

    #[test]
    fn tbnn_stress_is_quadratic_and_equivariant(
        a in mat(),
        r in rotation(),
        alpha in prop::array::uniform7(-1.0f64..1.0),
        c in 0.1f64..5.0,
    ) {
        let m = tbnn_stress(&a, 0.5, &alpha);
        let scaled: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| c * a[i][j]));
        let ms = tbnn_stress(&scaled, 0.5, &alpha);
        let big = m.iter().fold(1e-300, |x: f64, v| x.max(v.abs()));
        for k in 0..6 {
            prop_assert!((ms[k] - c * c * m[k]).abs() < 1e-11 * big * c * c);
        }
        let rotated = tbnn_stress(&conj(&r, &a), 0.5, &alpha);
        prop_assert!(close(&from_sym(&rotated), &conj(&r, &from_sym(&m)), 1e-11 * big.max(1.0)));
    }

    #[test]
    fn classical_closures_are_equivariant(a in mat(), r in rotation()) {
        for f in [|a: &Mat3| smagorinsky(a, 0.7, 0.17), |a: &Mat3| clark(a, 0.7)] {
            let lhs = from_sym(&f(&conj(&r, &a)));
            let rhs = conj(&r, &from_sym(&f(&a)));
            prop_assert!(close(&lhs, &rhs, 1e-12));
        }
    }
}

#[test]
fn zero_gradient_gives_zero_stress() {
    assert!(normalize(&[[0.0; 3]; 3]).is_none());
    assert_eq!(tbnn_stress(&[[0.0; 3]; 3], 1.0, &[1.0; 7]), [0.0; 6]);
    assert_eq!(tbnn_stress(&[[1e-200, 0.0, 0.0], [0.0; 3], [0.0; 3]], 1.0, &[1.0; 7]), [0.0; 6]);
}

#[test]
fn identity_is_the_first_basis_tensor() {
    let a = [[0.3, 0.1, 0.0], [0.2, -0.1, 0.4], [0.0, 0.5, -0.2]];
    let (s, w) = split(&a);
    let t = basis(&s, &w);
    assert_eq!(t[0], IDENTITY);
    assert_eq!(t[1], s);
    assert_eq!(to_sym(&t[1]), to_sym(&s));
}
