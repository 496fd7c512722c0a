//! Strain/rotation split, scalar invariants and the eight-tensor integrity
//! basis of a velocity-gradient tensor.

use crate::tensor3::{self, matmul, sub, to_sym, trace, Mat3, Sym6, IDENTITY};

/// Inputs with squared Frobenius norm below this are treated as zero.
pub const NORM_FLOOR: f64 = 1e-300;

/// Symmetric and skew parts `(S, W)` with `S + W = A`.
pub fn split(a: &Mat3) -> (Mat3, Mat3) {
    let mut s = [[0.0; 3]; 3];
    let mut w = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = 0.5 * (a[i][j] + a[j][i]);
            w[i][j] = a[i][j] - s[i][j];
        }
    }
    (s, w)
}

/// `tr(S²), tr(W²), tr(S³), tr(SW²), tr(S²W²)`.
pub fn invariants(s: &Mat3, w: &Mat3) -> [f64; 5] {
    let s2 = matmul(s, s);
    let w2 = matmul(w, w);
    [
        trace(&s2),
        trace(&w2),
        tensor3::trace_of_product(&s2, s),
        tensor3::trace_of_product(s, &w2),
        tensor3::trace_of_product(&s2, &w2),
    ]
}

/// `I, S, S², W², SW − WS, WSW, S²W − WS², WSW² − W²SW`.
pub fn basis(s: &Mat3, w: &Mat3) -> [Mat3; 8] {
    let s2 = matmul(s, s);
    let w2 = matmul(w, w);
    let sw = matmul(s, w);
    let ws = matmul(w, s);
    let wsw = matmul(&ws, w);
    [
        IDENTITY,
        *s,
        s2,
        w2,
        sub(&sw, &ws),
        wsw,
        sub(&matmul(&s2, w), &matmul(w, &s2)),
        sub(&matmul(&wsw, w), &matmul(&w2, &sw)),
    ]
}

pub fn deviatoric(a: &Mat3) -> Mat3 {
    tensor3::deviatoric(a)
}

/// `(A/‖A‖_F, ‖A‖_F²)`, or `None` below the norm floor.
pub fn normalize(a: &Mat3) -> Option<(Mat3, f64)> {
    let n2 = tensor3::frobenius_sq(a);
    if n2 < NORM_FLOOR || !n2.is_finite() {
        return None;
    }
    Some((tensor3::scale(a, 1.0 / n2.sqrt()), n2))
}

/// Packed deviatoric parts of `T1..T7` evaluated at `A*`.
pub fn deviatoric_basis(a_star: &Mat3) -> [Sym6; 7] {
    let (s, w) = split(a_star);
    let t = basis(&s, &w);
    std::array::from_fn(|k| tensor3::sym_deviatoric(&to_sym(&t[k + 1])))
}

/// `Δ² ‖A‖² Σ_k α_k dev T_k(A*)`, packed.
pub fn tbnn_stress(a: &Mat3, delta: f64, alpha: &[f64; 7]) -> Sym6 {
    let Some((a_star, n2)) = normalize(a) else {
        return [0.0; 6];
    };
    let pre = delta * delta * n2;
    let tb = deviatoric_basis(&a_star);
    let mut m = [0.0; 6];
    for (k, t) in tb.iter().enumerate() {
        for c in 0..6 {
            m[c] += alpha[k] * t[c];
        }
    }
    m.iter_mut().for_each(|x| *x *= pre);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor3::from_sym;

    #[test]
    fn split_of_shear() {
        let a = [[0.0, 1.0, 0.0], [0.0; 3], [0.0; 3]];
        let (s, w) = split(&a);
        assert_eq!(s[0][1], 0.5);
        assert_eq!(s[1][0], 0.5);
        assert_eq!(w[0][1], 0.5);
        assert_eq!(w[1][0], -0.5);
    }

    #[test]
    fn invariants_of_plane_strain() {
        let a = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0; 3]];
        let (s, w) = split(&a);
        assert_eq!(invariants(&s, &w), [2.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn strain_only_basis_vanishes_in_rotation_terms() {
        let a = [[1.0, 2.0, 0.0], [2.0, -1.0, 0.5], [0.0, 0.5, 0.0]];
        let (s, w) = split(&a);
        let t = basis(&s, &w);
        for k in 3..8 {
            assert_eq!(t[k], [[0.0; 3]; 3]);
        }
    }

    #[test]
    fn rotation_only_basis() {
        let a = [[0.0, 1.0, -2.0], [-1.0, 0.0, 0.5], [2.0, -0.5, 0.0]];
        let (s, w) = split(&a);
        let t = basis(&s, &w);
        assert_eq!(t[1], [[0.0; 3]; 3]);
        assert_eq!(t[2], [[0.0; 3]; 3]);
        assert_eq!(t[3], matmul(&w, &w));
    }

    #[test]
    fn single_coefficient_stress() {
        let a = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0; 3]];
        let mut alpha = [0.0; 7];
        alpha[0] = 1.0;
        let m = from_sym(&tbnn_stress(&a, 1.0, &alpha));
        let r2 = std::f64::consts::SQRT_2;
        assert!((m[0][0] - r2).abs() < 1e-15);
        assert!((m[1][1] + r2).abs() < 1e-15);
        assert!(m[2][2].abs() < 1e-15);
    }

    #[test]
    fn zero_input_gives_zero() {
        assert_eq!(tbnn_stress(&[[0.0; 3]; 3], 1.0, &[1.0; 7]), [0.0; 6]);
    }
}
