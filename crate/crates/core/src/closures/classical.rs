//! Algebraic closures evaluated pointwise from the filtered velocity gradient.

use crate::tensor3::{matmul, sym_deviatoric, to_sym, transpose, Mat3, Sym6};
use crate::tensor_basis::split;

pub const SMAGORINSKY_CONSTANT: f64 = 0.17;

/// `−2 (C_s Δ)² |S| S` with `|S| = √(2 S:S)`.
pub fn smagorinsky(a: &Mat3, delta: f64, cs: f64) -> Sym6 {
    let (s, _) = split(a);
    let ss: f64 = s.iter().flatten().map(|x| x * x).sum();
    let mag = (2.0 * ss).sqrt();
    let f = -2.0 * (cs * delta).powi(2) * mag;
    let mut m = to_sym(&s);
    m.iter_mut().for_each(|x| *x *= f);
    sym_deviatoric(&m)
}

/// Gradient model `Δ²/12 A Aᵀ`, deviatoric part.
pub fn clark(a: &Mat3, delta: f64) -> Sym6 {
    let aat = matmul(a, &transpose(a));
    let mut m = to_sym(&aat);
    let f = delta * delta / 12.0;
    m.iter_mut().for_each(|x| *x *= f);
    sym_deviatoric(&m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smagorinsky_shear() {
        let a = [[0.0, 1.0, 0.0], [0.0; 3], [0.0; 3]];
        let m = smagorinsky(&a, 1.0, 0.17);
        assert!((m[3] + 0.0289).abs() < 1e-15);
        assert_eq!(smagorinsky(&[[0.0; 3]; 3], 1.0, 0.17), [0.0; 6]);
    }

    #[test]
    fn clark_shear() {
        let a = [[0.0, 1.0, 0.0], [0.0; 3], [0.0; 3]];
        let m = clark(&a, 1.0);
        assert!((m[0] - 2.0 / 36.0).abs() < 1e-16);
        assert!((m[1] + 1.0 / 36.0).abs() < 1e-16);
        assert!((m[2] + 1.0 / 36.0).abs() < 1e-16);
        assert_eq!(&m[3..], &[0.0; 3]);
    }
}
