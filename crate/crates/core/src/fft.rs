//! Three-dimensional FFTs on cubic grids, assembled from 1-D rustfft lines.
//!
//! Forward transforms return Fourier-series coefficients (divided by `n³`);
//! inverse transforms are unnormalized sums, so `inverse(forward(u)) = u`.
//! Real fields are transformed in pairs packed into one complex transform.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::par;

pub type C64 = Complex<f64>;

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan(n: usize) -> Arc<Plan> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Plan>>>> = OnceLock::new();
    let mut map = PLANS
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .unwrap_or_else(|p| p.into_inner());
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plan {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// In-place unnormalized 3-D DFT of an `n³` array (last index fastest).
fn transform3(data: &mut [C64], n: usize, inverse: bool) {
    assert_eq!(data.len(), n * n * n, "array length is not n³");
    let p = plan(n);
    let fft = if inverse { &p.inverse } else { &p.forward };
    let plane = n * n;
    let scratch_len = fft.get_inplace_scratch_len();

    // Along the fastest axis and then the middle axis, one plane per task.
    par::for_each_chunk_mut(data, plane, |_, chunk| {
        let mut scratch = vec![C64::default(); scratch_len];
        fft.process_with_scratch(chunk, &mut scratch);
        let mut buf = vec![C64::default(); plane];
        for i2 in 0..n {
            for i3 in 0..n {
                buf[i3 * n + i2] = chunk[i2 * n + i3];
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for i2 in 0..n {
            for i3 in 0..n {
                chunk[i2 * n + i3] = buf[i3 * n + i2];
            }
        }
    });

    // Slowest axis: gather lines for each middle index.
    let src: &[C64] = data;
    let slabs = par::map_range(n, |i2| {
        let mut scratch = vec![C64::default(); scratch_len];
        let mut buf = vec![C64::default(); plane];
        for i1 in 0..n {
            let row = &src[(i1 * n + i2) * n..(i1 * n + i2 + 1) * n];
            for (i3, v) in row.iter().enumerate() {
                buf[i3 * n + i1] = *v;
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        buf
    });
    for (i2, buf) in slabs.into_iter().enumerate() {
        for i1 in 0..n {
            let row = &mut data[(i1 * n + i2) * n..(i1 * n + i2 + 1) * n];
            for (i3, v) in row.iter_mut().enumerate() {
                *v = buf[i3 * n + i1];
            }
        }
    }
}

/// Fourier coefficients of a complex field.
pub fn forward(data: &mut [C64], n: usize) {
    transform3(data, n, false);
    let s = 1.0 / (n * n * n) as f64;
    par::for_each_chunk_mut(data, par::POINT_CHUNK, |_, c| {
        c.iter_mut().for_each(|z| *z *= s)
    });
}

/// Synthesis `Σ_k û(k) e^{2πi k·x/L}` at the grid points.
pub fn inverse(data: &mut [C64], n: usize) {
    transform3(data, n, true);
}

/// Storage index of `-k` for the index `idx`.
#[inline]
pub fn mirror_index(idx: usize, n: usize) -> usize {
    let m = |i: usize| (n - i) % n;
    let (i1, i2, i3) = (idx / (n * n), (idx / n) % n, idx % n);
    (m(i1) * n + m(i2)) * n + m(i3)
}

/// Splits the transform `Z` of `a + i b` (both real) into the exactly
/// conjugate-symmetric transforms of `a` and `b`.
pub fn unpack_pair(z: &[C64], n: usize) -> (Vec<C64>, Vec<C64>) {
    let len = z.len();
    let mut fa = vec![C64::default(); len];
    let mut fb = vec![C64::default(); len];
    par::fill_indexed(&mut fa, |k| (z[k] + z[mirror_index(k, n)].conj()) * 0.5);
    par::fill_indexed(&mut fb, |k| {
        let d = (z[k] - z[mirror_index(k, n)].conj()) * 0.5;
        // d / i
        C64::new(d.im, -d.re)
    });
    (fa, fb)
}

/// Fourier coefficients of real fields; two fields share one transform.
/// The results are exactly conjugate-symmetric.
pub fn forward_real_many(fields: &[&[f64]], n: usize) -> Vec<Vec<C64>> {
    let len = n * n * n;
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        let a = pair[0];
        assert_eq!(a.len(), len);
        let mut z: Vec<C64> = match pair.get(1) {
            Some(b) => a.iter().zip(b.iter()).map(|(&x, &y)| C64::new(x, y)).collect(),
            None => a.iter().map(|&x| C64::new(x, 0.0)).collect(),
        };
        forward(&mut z, n);
        let (fa, fb) = unpack_pair(&z, n);
        out.push(fa);
        if pair.len() == 2 {
            out.push(fb);
        }
    }
    out
}

pub fn forward_real(field: &[f64], n: usize) -> Vec<C64> {
    forward_real_many(&[field], n).pop().unwrap()
}

/// Real parts of the syntheses of conjugate-symmetric spectra, two per
/// complex transform.
pub fn inverse_real_many(spectra: &[&[C64]], n: usize) -> Vec<Vec<f64>> {
    let len = n * n * n;
    let mut out = Vec::with_capacity(spectra.len());
    for pair in spectra.chunks(2) {
        let a = pair[0];
        assert_eq!(a.len(), len);
        let mut z = a.to_vec();
        if let Some(b) = pair.get(1) {
            for (x, y) in z.iter_mut().zip(b.iter()) {
                // a + i b
                *x += C64::new(-y.im, y.re);
            }
        }
        inverse(&mut z, n);
        out.push(z.iter().map(|c| c.re).collect());
        if pair.len() == 2 {
            out.push(z.iter().map(|c| c.im).collect());
        }
    }
    out
}

pub fn inverse_real(spectrum: &[C64], n: usize) -> Vec<f64> {
    inverse_real_many(&[spectrum], n).pop().unwrap()
}
