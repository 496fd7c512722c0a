//! Small dense 3×3 tensor algebra used pointwise on grids.
//!
//! Symmetric tensors are stored as six components in the order
//! `11, 22, 33, 12, 13, 23`.

pub type Mat3 = [[f64; 3]; 3];
pub type Sym6 = [f64; 6];

/// `(row, col)` of each stored symmetric component.
pub const SYM_INDEX: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Frobenius weights of the stored components (off-diagonals appear twice).
pub const SYM_WEIGHT: Sym6 = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0];

pub const ZERO: Mat3 = [[0.0; 3]; 3];
pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn add(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] += b[i][j];
        }
    }
    c
}

pub fn sub(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] -= b[i][j];
        }
    }
    c
}

pub fn scale(a: &Mat3, s: f64) -> Mat3 {
    let mut c = *a;
    c.iter_mut().flatten().for_each(|x| *x *= s);
    c
}

pub fn trace(a: &Mat3) -> f64 {
    a[0][0] + a[1][1] + a[2][2]
}

pub fn frobenius_sq(a: &Mat3) -> f64 {
    a.iter().flatten().map(|x| x * x).sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &Mat3, b: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            s += a[i][k] * b[k][i];
        }
    }
    s
}

/// Double contraction `A_ij B_ij`.
pub fn contract(a: &Mat3, b: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

pub fn deviatoric(a: &Mat3) -> Mat3 {
    let t = trace(a) / 3.0;
    let mut d = *a;
    for (i, row) in d.iter_mut().enumerate() {
        row[i] -= t;
    }
    d
}

pub fn flatten(a: &Mat3) -> [f64; 9] {
    let mut v = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            v[3 * i + j] = a[i][j];
        }
    }
    v
}

pub fn unflatten(v: &[f64]) -> Mat3 {
    let mut a = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = v[3 * i + j];
        }
    }
    a
}

/// Packs the symmetric part `(A + Aᵀ)/2`.
pub fn to_sym(a: &Mat3) -> Sym6 {
    let mut s = [0.0; 6];
    for (c, &(i, j)) in SYM_INDEX.iter().enumerate() {
        s[c] = if i == j { a[i][i] } else { 0.5 * (a[i][j] + a[j][i]) };
    }
    s
}

pub fn from_sym(s: &Sym6) -> Mat3 {
    [[s[0], s[3], s[4]], [s[3], s[1], s[5]], [s[4], s[5], s[2]]]
}

pub fn sym_trace(s: &Sym6) -> f64 {
    s[0] + s[1] + s[2]
}

pub fn sym_deviatoric(s: &Sym6) -> Sym6 {
    let t = sym_trace(s) / 3.0;
    [s[0] - t, s[1] - t, s[2] - t, s[3], s[4], s[5]]
}

/// Full-tensor squared Frobenius norm of a packed symmetric tensor.
pub fn sym_norm_sq(s: &Sym6) -> f64 {
    s.iter().zip(SYM_WEIGHT).map(|(x, w)| w * x * x).sum()
}
