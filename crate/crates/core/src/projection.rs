//! Equivariant weight projectors for group-convolution layers and their
//! compression to free-parameter bases.
//!
//! A layer weight `w` (out×in) is equivariant when `A_g w = w B_g` for all
//! group elements, with `A`/`B` the regular (48-dim) or tensor (9-dim)
//! representation depending on the layer kind. The group average
//! `w = (1/48) Σ_g A_gᵀ w̃ B_g` projects onto that space. Every representation
//! matrix here is a signed permutation, so the average is evaluated by index
//! gathering and the projector on flattened weights is sparse.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::group::{enumerate_group, GroupElement, ORDER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerKind {
    /// Flattened 3×3 tensor (9) to one regular channel (48).
    Lift,
    /// Regular channel to regular channel.
    Inner,
    /// Regular channel back to a flattened tensor.
    Final,
}

impl LayerKind {
    pub const ALL: [LayerKind; 3] = [LayerKind::Lift, LayerKind::Inner, LayerKind::Final];

    pub fn in_dim(self) -> usize {
        match self {
            LayerKind::Lift => 9,
            LayerKind::Inner | LayerKind::Final => ORDER,
        }
    }

    pub fn out_dim(self) -> usize {
        match self {
            LayerKind::Lift | LayerKind::Inner => ORDER,
            LayerKind::Final => 9,
        }
    }

    /// Dimension of the flattened weight space.
    pub fn weight_len(self) -> usize {
        self.in_dim() * self.out_dim()
    }

    /// Dimension of the equivariant subspace.
    pub fn expected_rank(self) -> usize {
        match self {
            LayerKind::Inner => ORDER,
            LayerKind::Lift | LayerKind::Final => 9,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            LayerKind::Lift => 0,
            LayerKind::Inner => 1,
            LayerKind::Final => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(LayerKind::Lift),
            1 => Some(LayerKind::Inner),
            2 => Some(LayerKind::Final),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            LayerKind::Lift => "lift",
            LayerKind::Inner => "inner",
            LayerKind::Final => "final",
        }
    }

    fn reps(self, g: GroupElement) -> (SignedPerm, SignedPerm) {
        match self {
            LayerKind::Lift => (SignedPerm::regular(g), SignedPerm::tensor(g)),
            LayerKind::Inner => (SignedPerm::regular(g), SignedPerm::regular(g)),
            LayerKind::Final => (SignedPerm::tensor(g), SignedPerm::regular(g)),
        }
    }
}

/// A signed permutation matrix stored by columns: column `j` has its single
/// nonzero `sign[j]` in row `row[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedPerm {
    pub row: Vec<usize>,
    pub sign: Vec<f64>,
}

impl SignedPerm {
    pub fn regular(g: GroupElement) -> Self {
        let rep = g.regular_rep();
        SignedPerm {
            row: rep.perm.iter().map(|&p| p as usize).collect(),
            sign: vec![1.0; ORDER],
        }
    }

    pub fn tensor(g: GroupElement) -> Self {
        let q = g.tensor_rep().matrix;
        let mut row = vec![0; 9];
        let mut sign = vec![0.0; 9];
        for c in 0..9 {
            for (r, q_row) in q.iter().enumerate() {
                if q_row[c] != 0.0 {
                    row[c] = r;
                    sign[c] = q_row[c];
                }
            }
        }
        SignedPerm { row, sign }
    }

    pub fn dim(&self) -> usize {
        self.row.len()
    }

    /// `M x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        for j in 0..self.dim() {
            y[self.row[j]] = self.sign[j] * x[j];
        }
        y
    }
}

/// `(1/48) Σ_g A_gᵀ w̃ B_g` for a row-major `out×in` weight.
pub fn project(kind: LayerKind, w: &[f64]) -> Result<Vec<f64>> {
    let (no, ni) = (kind.out_dim(), kind.in_dim());
    if w.len() != no * ni {
        return Err(Error::ShapeMismatch {
            expected: no * ni,
            actual: w.len(),
        });
    }
    let mut out = vec![0.0; no * ni];
    for g in enumerate_group() {
        let (a, b) = kind.reps(g);
        for i in 0..no {
            for j in 0..ni {
                out[i * ni + j] += a.sign[i] * b.sign[j] * w[a.row[i] * ni + b.row[j]];
            }
        }
    }
    let inv = 1.0 / ORDER as f64;
    out.iter_mut().for_each(|x| *x *= inv);
    Ok(out)
}

pub fn project_lift(w: &[f64]) -> Result<Vec<f64>> {
    project(LayerKind::Lift, w)
}

pub fn project_inner(w: &[f64]) -> Result<Vec<f64>> {
    project(LayerKind::Inner, w)
}

pub fn project_final(w: &[f64]) -> Result<Vec<f64>> {
    project(LayerKind::Final, w)
}

/// `max_g ‖A_g w − w B_g‖_F`, with dense representation matrices.
pub fn commutation_violation(kind: LayerKind, w: &[f64]) -> f64 {
    let (no, ni) = (kind.out_dim(), kind.in_dim());
    let mut worst = 0.0_f64;
    for g in enumerate_group() {
        let (a, b) = kind.reps(g);
        // (A w)[r][j] = sign_a[i] w[i][j] where r = row_a[i];
        // (w B)[i][j] = w[i][row_b[j]] sign_b[j].
        let mut aw = vec![0.0; no * ni];
        let mut wb = vec![0.0; no * ni];
        for i in 0..no {
            for j in 0..ni {
                aw[a.row[i] * ni + j] += a.sign[i] * w[i * ni + j];
                wb[i * ni + j] = w[i * ni + b.row[j]] * b.sign[j];
            }
        }
        let d: f64 = aw.iter().zip(&wb).map(|(x, y)| (x - y) * (x - y)).sum();
        worst = worst.max(d.sqrt());
    }
    worst
}

/// The projector as a sparse matrix on flattened (row-major) weights.
#[derive(Clone, Debug, PartialEq)]
pub struct NaiveProjector {
    pub kind: LayerKind,
    dim: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl NaiveProjector {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col[range.clone()]
            .iter()
            .copied()
            .zip(self.val[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|r| self.get(r, r)).sum()
    }

    /// `max |(𝒫𝒫 − 𝒫)_rc|` via a sparse product.
    pub fn idempotence_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.dim {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for (k, v) in self.row(r) {
                for (c, u) in self.row(k) {
                    *acc.entry(c).or_insert(0.0) += v * u;
                }
            }
            for (c, v) in self.row(r) {
                *acc.entry(c).or_insert(0.0) -= v;
            }
            worst = acc.values().fold(worst, |m, x| m.max(x.abs()));
        }
        worst
    }

    /// `max |𝒫_rc − 𝒫_cr|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }
}

pub fn projector_matrix(kind: LayerKind) -> NaiveProjector {
    let (no, ni) = (kind.out_dim(), kind.in_dim());
    let dim = no * ni;
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); dim];
    let inv = 1.0 / ORDER as f64;
    for g in enumerate_group() {
        let (a, b) = kind.reps(g);
        for i in 0..no {
            for j in 0..ni {
                let c = a.row[i] * ni + b.row[j];
                *rows[i * ni + j].entry(c).or_insert(0.0) += inv * a.sign[i] * b.sign[j];
            }
        }
    }
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut col = Vec::new();
    let mut val = Vec::new();
    row_ptr.push(0);
    for r in rows {
        for (c, v) in r {
            if v != 0.0 {
                col.push(c);
                val.push(v);
            }
        }
        row_ptr.push(col.len());
    }
    NaiveProjector {
        kind,
        dim,
        row_ptr,
        col,
        val,
    }
}

/// Orthonormal basis of the equivariant weight space, column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SharedBasis {
    pub kind: LayerKind,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SharedBasis {
    pub fn rank(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Row-major `out×in` weight `E θ`.
    pub fn expand(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.cols {
            return Err(Error::ShapeMismatch {
                expected: self.cols,
                actual: theta.len(),
            });
        }
        let mut w = vec![0.0; self.rows];
        self.expand_into(theta, &mut w);
        Ok(w)
    }

    pub fn expand_into(&self, theta: &[f64], w: &mut [f64]) {
        w.iter_mut().for_each(|x| *x = 0.0);
        for (c, &t) in theta.iter().enumerate() {
            if t != 0.0 {
                for (x, e) in w.iter_mut().zip(self.column(c)) {
                    *x += t * e;
                }
            }
        }
    }

    /// `Eᵀ dW`, the gradient with respect to the free parameters.
    pub fn pull_back(&self, dw: &[f64], dtheta: &mut [f64]) {
        for (c, d) in dtheta.iter_mut().enumerate() {
            *d += self.column(c).iter().zip(dw).map(|(e, x)| e * x).sum::<f64>();
        }
    }

    /// `max |EᵀE − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for a in 0..self.cols {
            for b in a..self.cols {
                let d: f64 = self.column(a).iter().zip(self.column(b)).map(|(x, y)| x * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(17 + 8 * self.data.len());
        buf.extend_from_slice(b"EQBASIS1");
        buf.push(self.kind.tag());
        buf.extend_from_slice(&(self.rows as u32).to_le_bytes());
        buf.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for x in &self.data {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        let mut f = fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    /// Reads a cached basis and checks that it still spans the equivariant
    /// space of its layer kind.
    pub fn load(path: &Path) -> Result<SharedBasis> {
        let bytes = fs::read(path)?;
        let bad = |reason: &str| Error::format(path, reason);
        if bytes.len() < 17 || &bytes[..8] != b"EQBASIS1" {
            return Err(bad("missing EQBASIS1 header"));
        }
        let kind = LayerKind::from_tag(bytes[8]).ok_or_else(|| bad("unknown layer kind"))?;
        let rows = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(bytes[13..17].try_into().unwrap()) as usize;
        if rows != kind.weight_len() || cols != kind.expected_rank() {
            return Err(bad("dimensions do not match the layer kind"));
        }
        if bytes.len() != 17 + 8 * rows * cols {
            return Err(bad("payload length does not match header"));
        }
        let data: Vec<f64> = bytes[17..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let basis = SharedBasis {
            kind,
            rows,
            cols,
            data,
        };
        basis.verify().map_err(|e| bad(&e))?;
        Ok(basis)
    }

    /// Orthonormal columns, each fixed by the projector.
    pub fn verify(&self) -> std::result::Result<(), String> {
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err("non-finite entries".into());
        }
        let ortho = self.orthonormality_defect();
        if ortho > 1e-10 {
            return Err(format!("columns not orthonormal (defect {ortho:e})"));
        }
        for c in 0..self.cols {
            let col = self.column(c);
            let p = project(self.kind, col).map_err(|e| e.to_string())?;
            let d = p.iter().zip(col).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            if d > 1e-12 {
                return Err(format!("column {c} is not equivariant (defect {d:e})"));
            }
        }
        Ok(())
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Eigendecomposes the projector block by block (its sparsity pattern splits
/// into orbits) and keeps the unit-eigenvalue eigenvectors.
pub fn shared_basis(kind: LayerKind) -> Result<SharedBasis> {
    const TOL: f64 = 1e-8;
    let p = projector_matrix(kind);
    let dim = p.dim();
    let mut parent: Vec<usize> = (0..dim).collect();
    for r in 0..dim {
        for (c, _) in p.row(r) {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for r in 0..dim {
        let root = find(&mut parent, r);
        blocks.entry(root).or_default().push(r);
    }

    let mut data = Vec::new();
    let mut cols = 0;
    for members in blocks.values() {
        let m = members.len();
        let local = DMatrix::from_fn(m, m, |a, b| p.get(members[a], members[b]));
        let eig = SymmetricEigen::new(local);
        let mut keep: Vec<usize> = Vec::new();
        for (e, &lambda) in eig.eigenvalues.iter().enumerate() {
            if (lambda - 1.0).abs() <= TOL {
                keep.push(e);
            } else if lambda.abs() > TOL {
                return Err(Error::Spectrum {
                    kind: kind.name(),
                    value: lambda,
                });
            }
        }
        for e in keep {
            let v = eig.eigenvectors.column(e);
            let pivot = v.iter().fold(0.0_f64, |best, &x| {
                if x.abs() > best.abs() + 1e-12 {
                    x
                } else {
                    best
                }
            });
            let s = if pivot < 0.0 { -1.0 } else { 1.0 };
            let mut col = vec![0.0; dim];
            for (a, &r) in members.iter().enumerate() {
                col[r] = s * v[a];
            }
            data.extend_from_slice(&col);
            cols += 1;
        }
    }
    if cols != kind.expected_rank() {
        return Err(Error::Spectrum {
            kind: kind.name(),
            value: cols as f64,
        });
    }
    Ok(SharedBasis {
        kind,
        rows: dim,
        cols,
        data,
    })
}

/// Process-wide bases, computed on first use.
pub fn cached_basis(kind: LayerKind) -> &'static SharedBasis {
    static CACHE: [OnceLock<SharedBasis>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    CACHE[kind.tag() as usize].get_or_init(|| {
        shared_basis(kind).expect("octahedral projector spectrum must be bimodal")
    })
}
