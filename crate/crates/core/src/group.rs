//! The octahedral group: the 48 signed permutations of the Cartesian axes.
//!
//! Elements are numbered in the flat ordering `k = i + 6 (j - 1)` where `i`
//! indexes the axis permutation and `j` the sign flip, both taken from the
//! fixed lists [`PERMUTATIONS`] and [`SIGN_FLIPS`]. Element 1 is the identity
//! and element 43 is the inversion `-I`.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::tensor3::{Mat3, Sym6, SYM_INDEX};

pub const ORDER: usize = 48;

/// Axis permutations `p` (zero-based): `P_ij = δ[p_i, j]`.
pub const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
    [1, 0, 2],
    [0, 2, 1],
];

/// Diagonals of the sign-flip matrices.
pub const SIGN_FLIPS: [[i8; 3]; 8] = [
    [1, 1, 1],
    [-1, 1, 1],
    [1, -1, 1],
    [1, 1, -1],
    [-1, -1, 1],
    [1, -1, -1],
    [-1, 1, -1],
    [-1, -1, -1],
];

/// A roto-reflection `R = S P` with `(R x)_i = s_i x[p_i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignedPermutation {
    pub perm: [usize; 3],
    pub signs: [i8; 3],
}

impl SignedPermutation {
    pub fn matrix(&self) -> [[i32; 3]; 3] {
        let mut m = [[0; 3]; 3];
        for i in 0..3 {
            m[i][self.perm[i]] = self.signs[i] as i32;
        }
        m
    }

    pub fn matrix_f64(&self) -> Mat3 {
        let m = self.matrix();
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = m[i][j] as f64;
            }
        }
        r
    }

    pub fn from_matrix(m: &[[i32; 3]; 3]) -> Option<Self> {
        let mut perm = [0; 3];
        let mut signs = [0; 3];
        for i in 0..3 {
            let nz: Vec<usize> = (0..3).filter(|&j| m[i][j] != 0).collect();
            if nz.len() != 1 || m[i][nz[0]].abs() != 1 {
                return None;
            }
            perm[i] = nz[0];
            signs[i] = m[i][nz[0]] as i8;
        }
        let mut seen = [false; 3];
        for &p in &perm {
            if seen[p] {
                return None;
            }
            seen[p] = true;
        }
        Some(SignedPermutation { perm, signs })
    }

    pub fn determinant(&self) -> i32 {
        let m = self.matrix();
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn transpose(&self) -> Self {
        let mut perm = [0; 3];
        let mut signs = [0; 3];
        for i in 0..3 {
            perm[self.perm[i]] = i;
            signs[self.perm[i]] = self.signs[i];
        }
        SignedPermutation { perm, signs }
    }

    /// `R x`.
    #[inline]
    pub fn apply(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut y = [0.0; 3];
        for i in 0..3 {
            y[i] = f64::from(self.signs[i]) * x[self.perm[i]];
        }
        y
    }

    /// `R σ Rᵀ`; exact because the entries of `R` are 0 and ±1.
    #[inline]
    pub fn conjugate(&self, a: &Mat3) -> Mat3 {
        let mut b = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let s = f64::from(self.signs[i] * self.signs[j]);
                b[i][j] = s * a[self.perm[i]][self.perm[j]];
            }
        }
        b
    }

    /// `R σ Rᵀ` on a packed symmetric tensor.
    #[inline]
    pub fn conjugate_sym(&self, s: &Sym6) -> Sym6 {
        let full = crate::tensor3::from_sym(s);
        let mut out = [0.0; 6];
        for (c, &(i, j)) in SYM_INDEX.iter().enumerate() {
            let sg = f64::from(self.signs[i] * self.signs[j]);
            out[c] = sg * full[self.perm[i]][self.perm[j]];
        }
        out
    }

    /// Integer image `Rᵀ n` of a lattice vector, reduced modulo `modulus`.
    #[inline]
    pub fn preimage_index(&self, n: [usize; 3], modulus: usize) -> [usize; 3] {
        let m = modulus as i64;
        let mut out = [0usize; 3];
        for i in 0..3 {
            let v = i64::from(self.signs[i]) * n[i] as i64;
            out[self.perm[i]] = v.rem_euclid(m) as usize;
        }
        out
    }
}

fn int_matmul(a: &[[i32; 3]; 3], b: &[[i32; 3]; 3]) -> [[i32; 3]; 3] {
    let mut c = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// One of the 48 group elements, stored by zero-based flat index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(u8);

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.flat_index())
    }
}

struct Tables {
    matrices: [SignedPermutation; ORDER],
    cayley: [[u8; ORDER]; ORDER],
    inverse: [u8; ORDER],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

fn build_tables() -> Tables {
    let matrices: [SignedPermutation; ORDER] = std::array::from_fn(|k| SignedPermutation {
        perm: PERMUTATIONS[k % 6],
        signs: SIGN_FLIPS[k / 6],
    });
    let ints: Vec<[[i32; 3]; 3]> = matrices.iter().map(|m| m.matrix()).collect();
    let lookup = |m: &[[i32; 3]; 3]| -> u8 {
        let k = ints
            .iter()
            .position(|x| x == m)
            .expect("octahedral enumeration is not closed under composition");
        k as u8
    };
    let mut cayley = [[0u8; ORDER]; ORDER];
    for i in 0..ORDER {
        for j in 0..ORDER {
            cayley[i][j] = lookup(&int_matmul(&ints[i], &ints[j]));
        }
    }
    let mut inverse = [0u8; ORDER];
    for i in 0..ORDER {
        inverse[i] = (0..ORDER)
            .find(|&j| cayley[i][j] == 0)
            .expect("element without inverse") as u8;
    }
    Tables {
        matrices,
        cayley,
        inverse,
    }
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement(0);
    /// `g43 = -I`.
    pub const INVERSION: GroupElement = GroupElement(42);

    /// From the 1-based flat index `1..=48`.
    pub fn from_flat(k: usize) -> Result<Self> {
        if (1..=ORDER).contains(&k) {
            Ok(GroupElement((k - 1) as u8))
        } else {
            Err(Error::InvalidArgument(format!(
                "group element index {k} outside 1..=48"
            )))
        }
    }

    /// From 1-based permutation (`1..=6`) and sign-flip (`1..=8`) numbers.
    pub fn from_parts(perm_index: usize, sign_index: usize) -> Result<Self> {
        if !(1..=6).contains(&perm_index) || !(1..=8).contains(&sign_index) {
            return Err(Error::InvalidArgument(format!(
                "({perm_index}, {sign_index}) is not a valid (permutation, sign) pair"
            )));
        }
        GroupElement::from_flat(perm_index + 6 * (sign_index - 1))
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        assert!(i < ORDER);
        GroupElement(i as u8)
    }

    pub fn from_matrix(m: &[[i32; 3]; 3]) -> Option<Self> {
        let sp = SignedPermutation::from_matrix(m)?;
        tables()
            .matrices
            .iter()
            .position(|x| *x == sp)
            .map(|k| GroupElement(k as u8))
    }

    /// Zero-based position in the flat ordering.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// 1-based flat index `k = perm_index + 6 (sign_index - 1)`.
    #[inline]
    pub fn flat_index(self) -> usize {
        self.0 as usize + 1
    }

    #[inline]
    pub fn perm_index(self) -> usize {
        self.0 as usize % 6 + 1
    }

    #[inline]
    pub fn sign_index(self) -> usize {
        self.0 as usize / 6 + 1
    }

    #[inline]
    pub fn matrix(self) -> SignedPermutation {
        tables().matrices[self.index()]
    }

    /// The element whose matrix is `R_self R_other`.
    #[inline]
    pub fn compose(self, other: GroupElement) -> GroupElement {
        GroupElement(tables().cayley[self.index()][other.index()])
    }

    #[inline]
    pub fn inverse(self) -> GroupElement {
        GroupElement(tables().inverse[self.index()])
    }

    pub fn regular_rep(self) -> RegularRep {
        let row = &tables().cayley[self.index()];
        RegularRep {
            perm: std::array::from_fn(|j| row[j]),
        }
    }

    pub fn tensor_rep(self) -> TensorRep {
        let r = self.matrix().matrix_f64();
        let mut q = [[0.0; 9]; 9];
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        q[3 * i + j][3 * a + b] = r[i][a] * r[j][b];
                    }
                }
            }
        }
        TensorRep { matrix: q }
    }
}

/// All 48 elements in flat order.
pub fn enumerate_group() -> Vec<GroupElement> {
    (0..ORDER).map(GroupElement::from_index).collect()
}

pub fn rotation_matrix(g: GroupElement) -> SignedPermutation {
    g.matrix()
}

pub fn compose(g: GroupElement, h: GroupElement) -> GroupElement {
    g.compose(h)
}

pub fn inverse(g: GroupElement) -> GroupElement {
    g.inverse()
}

/// Cayley table with 1-based entries: `table[i][j] = k` iff `g_k = g_i g_j`.
pub fn cayley_table() -> [[usize; ORDER]; ORDER] {
    let t = &tables().cayley;
    std::array::from_fn(|i| std::array::from_fn(|j| t[i][j] as usize + 1))
}

/// Regular representation `ρ_ij(g) = δ[g_i, g g_j]` stored as the permutation
/// `j ↦ perm[j]` (zero-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegularRep {
    pub perm: [u8; ORDER],
}

impl RegularRep {
    pub fn identity() -> Self {
        RegularRep {
            perm: std::array::from_fn(|j| j as u8),
        }
    }

    /// `self ∘ other`, i.e. the matrix product `ρ(self) ρ(other)`.
    pub fn then_after(&self, other: &RegularRep) -> RegularRep {
        RegularRep {
            perm: std::array::from_fn(|j| self.perm[other.perm[j] as usize]),
        }
    }

    /// `ρ v`: moves entry `j` to position `perm[j]`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; ORDER];
        for j in 0..ORDER {
            out[self.perm[j] as usize] = v[j];
        }
        out
    }

    pub fn matrix(&self) -> Vec<f64> {
        let mut m = vec![0.0; ORDER * ORDER];
        for j in 0..ORDER {
            m[self.perm[j] as usize * ORDER + j] = 1.0;
        }
        m
    }
}

/// `Q_g = R_g ⊗ R_g`, acting on row-major flattened 3×3 tensors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorRep {
    pub matrix: [[f64; 9]; 9],
}

impl TensorRep {
    pub fn apply(&self, v: &[f64; 9]) -> [f64; 9] {
        std::array::from_fn(|i| (0..9).map(|j| self.matrix[i][j] * v[j]).sum())
    }
}

/// Gridded physical fields of the supported tensor ranks.
#[derive(Clone, Debug, PartialEq)]
pub enum PhysicalField {
    Scalar(Vec<f64>),
    Vector(Vec<[f64; 3]>),
    Tensor(Vec<Mat3>),
    SymTensor(Vec<Sym6>),
}

impl PhysicalField {
    pub fn len(&self) -> usize {
        match self {
            PhysicalField::Scalar(v) => v.len(),
            PhysicalField::Vector(v) => v.len(),
            PhysicalField::Tensor(v) => v.len(),
            PhysicalField::SymTensor(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Gathers `out[n] = value(in[Rᵀ n mod N])`.
fn remap<T: Copy + Default, F: Fn(&T) -> T>(
    g: GroupElement,
    grid: &Grid,
    input: &[T],
    value: F,
) -> Vec<T> {
    let r = g.matrix();
    let n = grid.n();
    let mut out = vec![T::default(); input.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let src = grid.index(r.preimage_index(grid.coords(idx), n));
        *o = value(&input[src]);
    }
    out
}

/// `g p(x) = p(R⁻¹x)`, `g u(x) = R u(R⁻¹x)`, `g σ(x) = R σ(R⁻¹x) Rᵀ` on the
/// grid points `x_i = i h`.
pub fn act_on_physical_field(
    g: GroupElement,
    field: &PhysicalField,
    grid: &Grid,
) -> Result<PhysicalField> {
    grid.check_len(field.len())?;
    let r = g.matrix();
    Ok(match field {
        PhysicalField::Scalar(v) => PhysicalField::Scalar(remap(g, grid, v, |x| *x)),
        PhysicalField::Vector(v) => PhysicalField::Vector(remap(g, grid, v, |x| r.apply(x))),
        PhysicalField::Tensor(v) => PhysicalField::Tensor(remap(g, grid, v, |x| r.conjugate(x))),
        PhysicalField::SymTensor(v) => {
            PhysicalField::SymTensor(remap(g, grid, v, |x| r.conjugate_sym(x)))
        }
    })
}

/// Tensor action on a VGT-like field of full 3×3 matrices.
pub fn act_on_tensor_field(g: GroupElement, grid: &Grid, field: &[Mat3]) -> Vec<Mat3> {
    let r = g.matrix();
    remap(g, grid, field, |x| r.conjugate(x))
}

pub fn act_on_sym_field(g: GroupElement, grid: &Grid, field: &[Sym6]) -> Vec<Sym6> {
    let r = g.matrix();
    remap(g, grid, field, |x| r.conjugate_sym(x))
}
