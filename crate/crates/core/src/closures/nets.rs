//! The three learned pointwise closures and their shared evaluation and
//! differentiation driver.
//!
//! Every model maps the normalized gradient `A* = A/‖A‖` through a network
//! and scales the assembled stress by `Δ²‖A‖²`.

use ndarray::Array2;
use rand::Rng;

use super::mlp::{Dense, Mlp, MlpGrad};
use crate::par;
use crate::projection::{cached_basis, LayerKind};
use crate::tensor3::{flatten, sym_deviatoric, to_sym, unflatten, Mat3, Sym6, SYM_WEIGHT};
use crate::tensor_basis::{deviatoric_basis, invariants, normalize, split};

/// A pointwise network closure.
pub trait PointNet: Sync {
    fn mlp(&self) -> &Mlp;
    /// Network input for a normalized gradient.
    fn features(&self, a_star: &Mat3, out: &mut [f64]);
    /// Stress before the `Δ²‖A‖²` prefactor.
    fn assemble(&self, a_star: &Mat3, y: &[f64]) -> Sym6;
    /// Network output sensitivities from sensitivities of the unscaled stress.
    fn assemble_grad(&self, a_star: &Mat3, y: &[f64], gm: &Sym6, dy: &mut [f64]);
    fn parameter_count(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, p: &[f64]);
    /// Gradient with respect to the free parameters.
    fn pull_back(&self, g: &MlpGrad) -> Vec<f64>;
}

/// Adjoint of the deviatoric projection on packed components.
fn deviatoric_adjoint(gm: &Sym6) -> Sym6 {
    let t = (gm[0] + gm[1] + gm[2]) / 3.0;
    [gm[0] - t, gm[1] - t, gm[2] - t, gm[3], gm[4], gm[5]]
}

/// Tensor-basis network: invariants in, basis coefficients out.
#[derive(Clone, Debug, PartialEq)]
pub struct TbnnNet {
    pub net: Mlp,
}

impl TbnnNet {
    pub const DEFAULT_WIDTHS: [usize; 6] = [5, 64, 64, 64, 64, 7];

    pub fn new<R: Rng>(hidden: &[usize], rng: &mut R) -> Self {
        let mut w = vec![5];
        w.extend_from_slice(hidden);
        w.push(7);
        TbnnNet {
            net: Mlp::new(&w, rng),
        }
    }
}

impl PointNet for TbnnNet {
    fn mlp(&self) -> &Mlp {
        &self.net
    }

    fn features(&self, a_star: &Mat3, out: &mut [f64]) {
        let (s, w) = split(a_star);
        out.copy_from_slice(&invariants(&s, &w));
    }

    fn assemble(&self, a_star: &Mat3, y: &[f64]) -> Sym6 {
        let tb = deviatoric_basis(a_star);
        let mut m = [0.0; 6];
        for (k, t) in tb.iter().enumerate() {
            for c in 0..6 {
                m[c] += y[k] * t[c];
            }
        }
        m
    }

    fn assemble_grad(&self, a_star: &Mat3, _y: &[f64], gm: &Sym6, dy: &mut [f64]) {
        let tb = deviatoric_basis(a_star);
        for (k, t) in tb.iter().enumerate() {
            dy[k] = (0..6).map(|c| gm[c] * t[c]).sum();
        }
    }

    fn parameter_count(&self) -> usize {
        self.net.parameter_count()
    }

    fn params(&self) -> Vec<f64> {
        self.net.params()
    }

    fn set_params(&mut self, p: &[f64]) {
        self.net.set_params(p)
    }

    fn pull_back(&self, g: &MlpGrad) -> Vec<f64> {
        g.flatten()
    }
}

/// Unconstrained network: nine gradient entries in, six stress components out.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvNet {
    pub net: Mlp,
}

impl ConvNet {
    pub const DEFAULT_WIDTHS: [usize; 6] = [9, 60, 60, 60, 60, 6];

    pub fn new<R: Rng>(hidden: &[usize], rng: &mut R) -> Self {
        let mut w = vec![9];
        w.extend_from_slice(hidden);
        w.push(6);
        ConvNet {
            net: Mlp::new(&w, rng),
        }
    }
}

impl PointNet for ConvNet {
    fn mlp(&self) -> &Mlp {
        &self.net
    }

    fn features(&self, a_star: &Mat3, out: &mut [f64]) {
        out.copy_from_slice(&flatten(a_star));
    }

    fn assemble(&self, _a_star: &Mat3, y: &[f64]) -> Sym6 {
        sym_deviatoric(&[y[0], y[1], y[2], y[3], y[4], y[5]])
    }

    fn assemble_grad(&self, _a_star: &Mat3, _y: &[f64], gm: &Sym6, dy: &mut [f64]) {
        dy.copy_from_slice(&deviatoric_adjoint(gm));
    }

    fn parameter_count(&self) -> usize {
        self.net.parameter_count()
    }

    fn params(&self) -> Vec<f64> {
        self.net.params()
    }

    fn set_params(&mut self, p: &[f64]) {
        self.net.set_params(p)
    }

    fn pull_back(&self, g: &MlpGrad) -> Vec<f64> {
        g.flatten()
    }
}

/// One group-convolution layer: `c_out × c_in` blocks, each an equivariant
/// map spanned by the shared basis of its kind.
#[derive(Clone, Debug, PartialEq)]
pub struct GLayer {
    pub kind: LayerKind,
    pub c_out: usize,
    pub c_in: usize,
    /// Free coefficients, block `(o, i)` at `(o c_in + i) r`.
    pub theta: Vec<f64>,
    /// One bias per output regular channel; empty for the final layer.
    pub bias: Vec<f64>,
}

impl GLayer {
    fn rank(&self) -> usize {
        self.kind.expected_rank()
    }

    pub fn parameter_count(&self) -> usize {
        self.theta.len() + self.bias.len()
    }

    fn dense(&self) -> Dense {
        let basis = cached_basis(self.kind);
        let (bo, bi) = (self.kind.out_dim(), self.kind.in_dim());
        let r = self.rank();
        let mut w = Array2::zeros((bo * self.c_out, bi * self.c_in));
        let mut block = vec![0.0; bo * bi];
        for o in 0..self.c_out {
            for i in 0..self.c_in {
                let off = (o * self.c_in + i) * r;
                basis.expand_into(&self.theta[off..off + r], &mut block);
                for a in 0..bo {
                    for b in 0..bi {
                        w[[o * bo + a, i * bi + b]] = block[a * bi + b];
                    }
                }
            }
        }
        let b = if self.bias.is_empty() {
            ndarray::Array1::zeros(bo * self.c_out)
        } else {
            ndarray::Array1::from_shape_fn(bo * self.c_out, |k| self.bias[k / bo])
        };
        Dense {
            w,
            b,
            relu: self.kind != LayerKind::Final,
        }
    }

    fn pull_back(&self, dw: &Array2<f64>, db: &ndarray::Array1<f64>, out: &mut Vec<f64>) {
        let basis = cached_basis(self.kind);
        let (bo, bi) = (self.kind.out_dim(), self.kind.in_dim());
        let r = self.rank();
        let mut block = vec![0.0; bo * bi];
        let mut dtheta = vec![0.0; self.theta.len()];
        for o in 0..self.c_out {
            for i in 0..self.c_in {
                for a in 0..bo {
                    for b in 0..bi {
                        block[a * bi + b] = dw[[o * bo + a, i * bi + b]];
                    }
                }
                let off = (o * self.c_in + i) * r;
                basis.pull_back(&block, &mut dtheta[off..off + r]);
            }
        }
        out.extend(dtheta);
        if !self.bias.is_empty() {
            for o in 0..self.c_out {
                out.push((0..bo).map(|a| db[o * bo + a]).sum());
            }
        }
    }
}

/// Octahedral group-convolution network on the flattened gradient tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct GConvNet {
    pub layers: Vec<GLayer>,
    dense: Mlp,
}

impl GConvNet {
    pub const DEFAULT_CHANNELS: usize = 11;
    pub const DEFAULT_INNER_LAYERS: usize = 2;

    pub fn new<R: Rng>(channels: usize, inner_layers: usize, rng: &mut R) -> Self {
        let mut specs = vec![(LayerKind::Lift, channels, 1)];
        specs.extend(std::iter::repeat_n((LayerKind::Inner, channels, channels), inner_layers));
        specs.push((LayerKind::Final, 1, channels));
        let layers = specs
            .into_iter()
            .map(|(kind, c_out, c_in)| {
                let fan_in = (kind.in_dim() * c_in) as f64;
                let tb = (48.0 / fan_in).sqrt();
                let bb = 1.0 / fan_in.sqrt();
                let n_theta = c_out * c_in * kind.expected_rank();
                GLayer {
                    kind,
                    c_out,
                    c_in,
                    theta: (0..n_theta).map(|_| rng.gen_range(-tb..tb)).collect(),
                    bias: if kind == LayerKind::Final {
                        Vec::new()
                    } else {
                        (0..c_out).map(|_| rng.gen_range(-bb..bb)).collect()
                    },
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn from_layers(layers: Vec<GLayer>) -> Self {
        let dense = Mlp {
            layers: layers.iter().map(GLayer::dense).collect(),
        };
        GConvNet { layers, dense }
    }

    pub fn channels(&self) -> usize {
        self.layers[0].c_out
    }
}

impl PointNet for GConvNet {
    fn mlp(&self) -> &Mlp {
        &self.dense
    }

    fn features(&self, a_star: &Mat3, out: &mut [f64]) {
        out.copy_from_slice(&flatten(a_star));
    }

    fn assemble(&self, _a_star: &Mat3, y: &[f64]) -> Sym6 {
        sym_deviatoric(&to_sym(&unflatten(y)))
    }

    fn assemble_grad(&self, _a_star: &Mat3, _y: &[f64], gm: &Sym6, dy: &mut [f64]) {
        let gs = deviatoric_adjoint(gm);
        for i in 0..3 {
            dy[4 * i] = gs[i];
        }
        for (c, &(i, j)) in crate::tensor3::SYM_INDEX.iter().enumerate().skip(3) {
            dy[3 * i + j] = 0.5 * gs[c];
            dy[3 * j + i] = 0.5 * gs[c];
        }
    }

    fn parameter_count(&self) -> usize {
        self.layers.iter().map(GLayer::parameter_count).sum()
    }

    fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            p.extend_from_slice(&l.theta);
            p.extend_from_slice(&l.bias);
        }
        p
    }

    fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.parameter_count());
        let mut pos = 0;
        for l in &mut self.layers {
            let nt = l.theta.len();
            l.theta.copy_from_slice(&p[pos..pos + nt]);
            pos += nt;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[pos..pos + nb]);
            pos += nb;
        }
        self.dense = Mlp {
            layers: self.layers.iter().map(GLayer::dense).collect(),
        };
    }

    fn pull_back(&self, g: &MlpGrad) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (l, layer) in self.layers.iter().enumerate() {
            layer.pull_back(&g.w[l], &g.b[l], &mut out);
        }
        out
    }
}

struct Normalized {
    point: usize,
    a_star: Mat3,
    prefactor: f64,
}

fn normalized_points(a: &[Mat3], delta: f64) -> Vec<Normalized> {
    a.iter()
        .enumerate()
        .filter_map(|(point, m)| {
            normalize(m).map(|(a_star, n2)| Normalized {
                point,
                a_star,
                prefactor: delta * delta * n2,
            })
        })
        .collect()
}

fn feature_matrix<N: PointNet + ?Sized>(net: &N, pts: &[Normalized]) -> Array2<f64> {
    let d = net.mlp().in_dim();
    let mut x = Array2::zeros((pts.len(), d));
    for (r, p) in pts.iter().enumerate() {
        net.features(&p.a_star, x.row_mut(r).as_slice_mut().unwrap());
    }
    x
}

fn predict_chunk<N: PointNet + ?Sized>(net: &N, a: &[Mat3], delta: f64) -> Vec<Sym6> {
    let mut out = vec![[0.0; 6]; a.len()];
    let pts = normalized_points(a, delta);
    if pts.is_empty() {
        return out;
    }
    let y = net.mlp().forward(feature_matrix(net, &pts).view());
    for (r, p) in pts.iter().enumerate() {
        let m = net.assemble(&p.a_star, y.row(r).as_slice().unwrap());
        out[p.point] = m.map(|v| v * p.prefactor);
    }
    out
}

/// Model stress at every point of a gradient field.
pub fn predict<N: PointNet + ?Sized>(net: &N, a: &[Mat3], delta: f64) -> Vec<Sym6> {
    par::map_chunks(a, par::POINT_CHUNK, |_, c| predict_chunk(net, c, delta))
        .into_iter()
        .flatten()
        .collect()
}

/// Contribution of a chunk to `scale · Σ ‖m − τ‖²` and its parameter gradient.
fn loss_grad_chunk<N: PointNet + ?Sized>(
    net: &N,
    a: &[Mat3],
    tau: &[Sym6],
    delta: f64,
    scale: f64,
) -> (f64, MlpGrad) {
    let mlp = net.mlp();
    let mut grad = MlpGrad::zeros_like(mlp);
    let pts = normalized_points(a, delta);
    let mut loss = 0.0;
    let mut valid = vec![false; a.len()];
    if !pts.is_empty() {
        let acts = mlp.forward_cached(feature_matrix(net, &pts).view());
        let y = acts.last().unwrap();
        let mut dy = Array2::zeros(y.raw_dim());
        for (r, p) in pts.iter().enumerate() {
            valid[p.point] = true;
            let yr = y.row(r);
            let yr = yr.as_slice().unwrap();
            let m = net.assemble(&p.a_star, yr);
            let t = &tau[p.point];
            let mut gm = [0.0; 6];
            for c in 0..6 {
                let d = p.prefactor * m[c] - t[c];
                loss += scale * SYM_WEIGHT[c] * d * d;
                gm[c] = 2.0 * scale * SYM_WEIGHT[c] * d * p.prefactor;
            }
            net.assemble_grad(&p.a_star, yr, &gm, dy.row_mut(r).as_slice_mut().unwrap());
        }
        mlp.backward(&acts, dy, &mut grad);
    }
    for (point, t) in tau.iter().enumerate() {
        if !valid[point] {
            loss += scale * crate::tensor3::sym_norm_sq(t);
        }
    }
    (loss, grad)
}

/// `scale · Σ_x ‖m(x) − τ(x)‖²` and its gradient with respect to the free
/// parameters, with a summation order independent of the thread count.
pub fn loss_and_gradient<N: PointNet + ?Sized>(
    net: &N,
    a: &[Mat3],
    tau: &[Sym6],
    delta: f64,
    scale: f64,
) -> (f64, Vec<f64>) {
    assert_eq!(a.len(), tau.len());
    let chunk = par::POINT_CHUNK;
    let parts = par::map_range(a.len().div_ceil(chunk), |c| {
        let lo = c * chunk;
        let hi = (lo + chunk).min(a.len());
        loss_grad_chunk(net, &a[lo..hi], &tau[lo..hi], delta, scale)
    });
    let mut parts = parts.into_iter();
    let (mut loss, mut grad) = parts.next().unwrap_or_else(|| (0.0, MlpGrad::zeros_like(net.mlp())));
    for (l, g) in parts {
        loss += l;
        grad.add(&g);
    }
    (loss, net.pull_back(&grad))
}
