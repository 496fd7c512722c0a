//! Fully connected networks with manual reverse-mode differentiation.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `out × in`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub relu: bool,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.nrows()
    }
}

/// Dense layers with relu on every layer except the last.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Gradients with the same shapes as the layers.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrad {
    pub w: Vec<Array2<f64>>,
    pub b: Vec<Array1<f64>>,
}

impl MlpGrad {
    pub fn zeros_like(net: &Mlp) -> Self {
        MlpGrad {
            w: net.layers.iter().map(|l| Array2::zeros(l.w.raw_dim())).collect(),
            b: net.layers.iter().map(|l| Array1::zeros(l.b.raw_dim())).collect(),
        }
    }

    pub fn add(&mut self, other: &MlpGrad) {
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            *a += b;
        }
        for (a, b) in self.b.iter_mut().zip(&other.b) {
            *a += b;
        }
    }

    /// Flattened in the same order as [`Mlp::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.w.iter().zip(&self.b) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

impl Mlp {
    /// Uniform initialization in `±1/√fan_in` for weights and biases.
    pub fn new<R: Rng>(widths: &[usize], rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "a network needs input and output widths");
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|l| {
                let (fi, fo) = (widths[l], widths[l + 1]);
                let bound = 1.0 / (fi as f64).sqrt();
                Dense {
                    w: Array2::from_shape_fn((fo, fi), |_| rng.gen_range(-bound..bound)),
                    b: Array1::from_shape_fn(fo, |_| rng.gen_range(-bound..bound)),
                    relu: l + 1 < n,
                }
            })
            .collect();
        Mlp { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.in_dim()];
        w.extend(self.layers.iter().map(|l| l.out_dim()));
        w
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.parameter_count());
        let mut pos = 0;
        for l in &mut self.layers {
            for x in l.w.iter_mut().chain(l.b.iter_mut()) {
                *x = p[pos];
                pos += 1;
            }
        }
    }

    /// Rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut h = x.to_owned();
        for l in &self.layers {
            h = layer_forward(l, h.view());
        }
        h
    }

    /// Forward pass keeping every layer input; the last entry is the output.
    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        for l in &self.layers {
            let next = layer_forward(l, acts.last().unwrap().view());
            acts.push(next);
        }
        acts
    }

    /// Accumulates parameter gradients for output sensitivities `dy` and
    /// returns the input sensitivities.
    pub fn backward(&self, acts: &[Array2<f64>], dy: Array2<f64>, grad: &mut MlpGrad) -> Array2<f64> {
        let mut delta = dy;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            if layer.relu {
                // The stored output is relu(z); its positivity is the mask.
                delta.zip_mut_with(&acts[l + 1], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            grad.w[l] += &delta.t().dot(&acts[l]);
            grad.b[l] += &delta.sum_axis(Axis(0));
            delta = delta.dot(&layer.w);
        }
        delta
    }
}

fn layer_forward(l: &Dense, x: ArrayView2<f64>) -> Array2<f64> {
    let mut z = x.dot(&l.w.t());
    z += &l.b;
    if l.relu {
        z.mapv_inplace(|v| v.max(0.0));
    }
    z
}
