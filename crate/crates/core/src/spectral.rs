//! Pseudo-spectral operators on the periodic box: velocity/stress containers,
//! derivatives, Leray projection, 2/3-rule dealiasing, the discrete
//! nonlinear-plus-viscous stress and the pressure-free right-hand side.

use crate::error::Result;
use crate::fft::{self, C64};
use crate::grid::Grid;
use crate::group::GroupElement;
use crate::par;
use crate::tensor3::{Mat3, Sym6, SYM_INDEX};

/// Fourier coefficients of a 3-component field, full `n³` layout per
/// component in FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVelocity {
    pub grid: Grid,
    pub comp: [Vec<C64>; 3],
}

/// Fourier coefficients of a symmetric tensor field, components ordered
/// `11, 22, 33, 12, 13, 23`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralStress {
    pub grid: Grid,
    pub comp: [Vec<C64>; 6],
}

impl SpectralVelocity {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![C64::default(); grid.len()];
        SpectralVelocity {
            grid,
            comp: [z.clone(), z.clone(), z],
        }
    }

    pub fn from_components(grid: Grid, comp: [Vec<C64>; 3]) -> Result<Self> {
        for c in &comp {
            grid.check_len(c.len())?;
        }
        Ok(SpectralVelocity { grid, comp })
    }

    pub fn from_physical(grid: Grid, u: &[Vec<f64>; 3]) -> Result<Self> {
        for c in u {
            grid.check_len(c.len())?;
        }
        let mut f = fft::forward_real_many(&[&u[0], &u[1], &u[2]], grid.n()).into_iter();
        Ok(SpectralVelocity {
            grid,
            comp: [f.next().unwrap(), f.next().unwrap(), f.next().unwrap()],
        })
    }

    pub fn to_physical(&self) -> [Vec<f64>; 3] {
        let mut p =
            fft::inverse_real_many(&[&self.comp[0], &self.comp[1], &self.comp[2]], self.grid.n())
                .into_iter();
        [p.next().unwrap(), p.next().unwrap(), p.next().unwrap()]
    }

    /// `½ Σ_k ‖û(k)‖²`, equal to the volume-averaged kinetic energy.
    pub fn energy(&self) -> f64 {
        let n = self.grid.len();
        0.5 * par::sum_range(n, |k| {
            self.comp.iter().map(|c| c[k].norm_sqr()).sum::<f64>()
        })
    }

    /// `√(Σ_k ‖û(k)‖²)`.
    pub fn norm(&self) -> f64 {
        (2.0 * self.energy()).sqrt()
    }

    pub fn axpy(&mut self, a: f64, x: &SpectralVelocity) {
        for (c, xc) in self.comp.iter_mut().zip(&x.comp) {
            par::for_each_chunk_mut(c, par::POINT_CHUNK, |ci, chunk| {
                let base = ci * par::POINT_CHUNK;
                for (j, v) in chunk.iter_mut().enumerate() {
                    *v += xc[base + j] * a;
                }
            });
        }
    }

    pub fn scale(&mut self, a: f64) {
        for c in self.comp.iter_mut() {
            par::for_each_chunk_mut(c, par::POINT_CHUNK, |_, chunk| {
                chunk.iter_mut().for_each(|v| *v *= a)
            });
        }
    }

    /// `‖self − other‖ / ‖other‖` over all coefficients.
    pub fn relative_distance(&self, other: &SpectralVelocity) -> f64 {
        let n = self.grid.len();
        let num = par::sum_range(n, |k| {
            (0..3).map(|c| (self.comp[c][k] - other.comp[c][k]).norm_sqr()).sum::<f64>()
        });
        let den = 2.0 * other.energy();
        (num / den).sqrt()
    }

    /// `max_k |ξ·û(k)|`.
    pub fn max_divergence(&self) -> f64 {
        let g = self.grid;
        let kb = g.base_wavenumber();
        par::max_range(g.len(), |idx| {
            let k = g.wavevector(idx);
            let d: C64 = (0..3).map(|j| self.comp[j][idx] * (kb * k[j] as f64)).sum();
            d.norm()
        })
    }

    pub fn is_finite(&self) -> bool {
        self.comp
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

impl SpectralStress {
    pub fn from_physical(grid: Grid, s: &[Sym6]) -> Result<Self> {
        grid.check_len(s.len())?;
        let comps: Vec<Vec<f64>> = (0..6).map(|c| s.iter().map(|x| x[c]).collect()).collect();
        let refs: Vec<&[f64]> = comps.iter().map(|c| c.as_slice()).collect();
        let mut f = fft::forward_real_many(&refs, grid.n()).into_iter();
        Ok(SpectralStress {
            grid,
            comp: std::array::from_fn(|_| f.next().unwrap()),
        })
    }

    pub fn to_physical(&self) -> Vec<Sym6> {
        let refs: Vec<&[C64]> = self.comp.iter().map(|c| c.as_slice()).collect();
        let p = fft::inverse_real_many(&refs, self.grid.n());
        (0..self.grid.len())
            .map(|i| std::array::from_fn(|c| p[c][i]))
            .collect()
    }

    /// Component `(i, j)` of the symmetric tensor.
    pub fn get(&self, i: usize, j: usize) -> &[C64] {
        &self.comp[sym_slot(i, j)]
    }
}

/// Packed slot of tensor entry `(i, j)`.
#[inline]
pub fn sym_slot(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    SYM_INDEX.iter().position(|&p| p == (a, b)).unwrap()
}

/// Angular wavenumber `2π k_j / L` along `axis`, zero on the Nyquist index.
#[inline]
pub fn angular_wavenumber(grid: &Grid, idx: usize, axis: usize) -> f64 {
    let i = grid.coords(idx)[axis];
    if grid.is_nyquist(i) {
        0.0
    } else {
        grid.base_wavenumber() * grid.wavenumber(i) as f64
    }
}

/// Angular wavevector with Nyquist components zeroed.
#[inline]
pub fn angular_wavevector(grid: &Grid, idx: usize) -> [f64; 3] {
    std::array::from_fn(|a| angular_wavenumber(grid, idx, a))
}

/// `−i z`.
#[inline]
pub fn times_neg_i(z: C64) -> C64 {
    C64::new(z.im, -z.re)
}

/// Spectral derivative `ξ_axis û` with `ξ = 2πi k / L`.
pub fn derivative(grid: &Grid, u: &[C64], axis: usize) -> Vec<C64> {
    assert!(axis < 3);
    let mut out = vec![C64::default(); u.len()];
    par::fill_indexed(&mut out, |idx| {
        u[idx] * C64::new(0.0, angular_wavenumber(grid, idx, axis))
    });
    out
}

/// Applies `π_ij = δ_ij − k_i k_j / |k|²` (identity at `k = 0`).
pub fn leray_project(u: &SpectralVelocity) -> SpectralVelocity {
    let mut out = u.clone();
    leray_project_in_place(&mut out);
    out
}

pub fn leray_project_in_place(u: &mut SpectralVelocity) {
    let g = u.grid;
    let [a, b, c] = &mut u.comp;
    let chunk = par::POINT_CHUNK;
    // Walk the three components in lockstep chunks.
    let mut chunks: Vec<(&mut [C64], &mut [C64], &mut [C64])> = a
        .chunks_mut(chunk)
        .zip(b.chunks_mut(chunk))
        .zip(c.chunks_mut(chunk))
        .map(|((x, y), z)| (x, y, z))
        .collect();
    par::for_each_chunk_mut(&mut chunks, 1, |ci, item| {
        let (x, y, z) = &mut item[0];
        for j in 0..x.len() {
            let idx = ci * chunk + j;
            let k = g.wavevector(idx);
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            if k2 == 0.0 {
                continue;
            }
            let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
            let dot = (x[j] * kf[0] + y[j] * kf[1] + z[j] * kf[2]) / k2;
            x[j] -= dot * kf[0];
            y[j] -= dot * kf[1];
            z[j] -= dot * kf[2];
        }
    });
}

/// True when the mode survives the 2/3 rule: `3 |k_i| < n` on every axis.
#[inline]
pub fn in_dealias_band(grid: &Grid, idx: usize) -> bool {
    let n = grid.n() as i64;
    grid.wavevector(idx).iter().all(|&k| 3 * k.abs() < n)
}

pub fn dealias_truncate(grid: &Grid, u: &mut [C64]) {
    let chunk = par::POINT_CHUNK;
    par::for_each_chunk_mut(u, chunk, |ci, c| {
        for (j, v) in c.iter_mut().enumerate() {
            if !in_dealias_band(grid, ci * chunk + j) {
                *v = C64::default();
            }
        }
    });
}

pub fn dealias_velocity(u: &mut SpectralVelocity) {
    let g = u.grid;
    for c in u.comp.iter_mut() {
        dealias_truncate(&g, c);
    }
}

/// `a + i b` restricted to the dealiasing band, ready for a packed inverse
/// transform.
fn pack_dealiased(grid: &Grid, a: &[C64], b: Option<&[C64]>) -> Vec<C64> {
    let mut z = vec![C64::default(); a.len()];
    par::fill_indexed(&mut z, |k| {
        if !in_dealias_band(grid, k) {
            return C64::default();
        }
        match b {
            Some(b) => a[k] + C64::new(-b[k].im, b[k].re),
            None => a[k],
        }
    });
    z
}

/// Physical-space velocity of the dealiased field.
pub fn dealiased_physical(u: &SpectralVelocity) -> [Vec<f64>; 3] {
    let g = u.grid;
    let mut z1 = pack_dealiased(&g, &u.comp[0], Some(&u.comp[1]));
    let mut z2 = pack_dealiased(&g, &u.comp[2], None);
    fft::inverse(&mut z1, g.n());
    fft::inverse(&mut z2, g.n());
    [
        z1.iter().map(|z| z.re).collect(),
        z1.iter().map(|z| z.im).collect(),
        z2.iter().map(|z| z.re).collect(),
    ]
}

/// Transform of the pointwise products `ǔ_i ǔ_j` of the dealiased velocity.
pub fn nonlinear_stress(u: &SpectralVelocity) -> SpectralStress {
    let g = u.grid;
    let n = g.n();
    let mut z1 = pack_dealiased(&g, &u.comp[0], Some(&u.comp[1]));
    let mut z2 = pack_dealiased(&g, &u.comp[2], None);
    fft::inverse(&mut z1, n);
    fft::inverse(&mut z2, n);
    // Products packed in pairs: (11, 22), (33, 12), (13, 23).
    let mut prods: [Vec<C64>; 3] = std::array::from_fn(|_| vec![C64::default(); g.len()]);
    for (p, slot) in prods.iter_mut().enumerate() {
        par::fill_indexed(slot, |x| {
            let (a, b, c) = (z1[x].re, z1[x].im, z2[x].re);
            match p {
                0 => C64::new(a * a, b * b),
                1 => C64::new(c * c, a * b),
                _ => C64::new(a * c, b * c),
            }
        });
    }
    let mut comps = Vec::with_capacity(6);
    for mut z in prods {
        fft::forward(&mut z, n);
        let (fa, fb) = fft::unpack_pair(&z, n);
        comps.push(fa);
        comps.push(fb);
    }
    let mut it = comps.into_iter();
    SpectralStress {
        grid: g,
        comp: std::array::from_fn(|_| it.next().unwrap()),
    }
}

/// Transform of the pointwise products of three physical components.
pub fn products_to_spectral(grid: Grid, phys: &[Vec<f64>; 3]) -> SpectralStress {
    let n = grid.len();
    let prods: Vec<Vec<f64>> = SYM_INDEX
        .iter()
        .map(|&(i, j)| {
            let mut p = vec![0.0; n];
            par::fill_indexed(&mut p, |x| phys[i][x] * phys[j][x]);
            p
        })
        .collect();
    let refs: Vec<&[f64]> = prods.iter().map(|p| p.as_slice()).collect();
    let mut f = fft::forward_real_many(&refs, grid.n()).into_iter();
    SpectralStress {
        grid,
        comp: std::array::from_fn(|_| f.next().unwrap()),
    }
}

/// `σ_ij = FFT(ǔ_i ǔ_j) − ν (ξ_j û_i + ξ_i û_j)`.
pub fn numerical_stress(u: &SpectralVelocity, nu: f64) -> SpectralStress {
    let mut s = nonlinear_stress(u);
    if nu != 0.0 {
        let g = u.grid;
        for (c, &(i, j)) in SYM_INDEX.iter().enumerate() {
            let ui = &u.comp[i];
            let uj = &u.comp[j];
            let chunk = par::POINT_CHUNK;
            par::for_each_chunk_mut(&mut s.comp[c], chunk, |ci, out| {
                for (l, v) in out.iter_mut().enumerate() {
                    let idx = ci * chunk + l;
                    let xi = C64::new(0.0, angular_wavenumber(&g, idx, j));
                    let xj = C64::new(0.0, angular_wavenumber(&g, idx, i));
                    *v -= (xi * ui[idx] + xj * uj[idx]) * nu;
                }
            });
        }
    }
    s
}

/// `−π ξ_j σ_ij`, dealias-truncated.
pub fn projected_divergence(s: &SpectralStress) -> SpectralVelocity {
    let g = s.grid;
    let mut out = SpectralVelocity::zeros(g);
    for i in 0..3 {
        let cols = [s.get(i, 0), s.get(i, 1), s.get(i, 2)];
        par::fill_indexed(&mut out.comp[i], |idx| {
            if !in_dealias_band(&g, idx) {
                return C64::default();
            }
            let xi = angular_wavevector(&g, idx);
            let d = cols[0][idx] * xi[0] + cols[1][idx] * xi[1] + cols[2][idx] * xi[2];
            times_neg_i(d)
        });
    }
    leray_project_in_place(&mut out);
    out
}

/// Adds `−ν |ξ|² û` to `out`.
fn add_viscous(out: &mut SpectralVelocity, u: &SpectralVelocity, nu: f64) {
    let g = u.grid;
    for c in 0..3 {
        let uc = &u.comp[c];
        let chunk = par::POINT_CHUNK;
        par::for_each_chunk_mut(&mut out.comp[c], chunk, |ci, o| {
            for (l, v) in o.iter_mut().enumerate() {
                let idx = ci * chunk + l;
                let xi = angular_wavevector(&g, idx);
                let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                *v -= uc[idx] * (nu * k2);
            }
        });
    }
}

/// Pressure-free right-hand side `−ξ_j π σ_ij + π f` for divergence-free
/// `û`. The nonlinear tendency is truncated to the dealiasing band so that
/// dealiased states stay dealiased. An optional extra stress (a closure)
/// enters alongside the nonlinear one.
pub fn rhs(
    u: &SpectralVelocity,
    forcing: Option<&SpectralVelocity>,
    extra_stress: Option<&SpectralStress>,
    nu: f64,
) -> SpectralVelocity {
    let mut s = nonlinear_stress(u);
    if let Some(m) = extra_stress {
        for (a, b) in s.comp.iter_mut().zip(&m.comp) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }
    let mut out = projected_divergence(&s);
    add_viscous(&mut out, u, nu);
    if let Some(f) = forcing {
        let pf = leray_project(f);
        out.axpy(1.0, &pf);
    }
    out
}

/// Velocity-gradient tensor `A_ij = ∂_j u_i` at every grid point.
pub fn velocity_gradient(u: &SpectralVelocity) -> Vec<Mat3> {
    let g = u.grid;
    let mut ders = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            ders.push(derivative(&g, &u.comp[i], j));
        }
    }
    let refs: Vec<&[C64]> = ders.iter().map(|d| d.as_slice()).collect();
    let phys = fft::inverse_real_many(&refs, g.n());
    let mut out = vec![[[0.0; 3]; 3]; g.len()];
    par::fill_indexed(&mut out, |x| {
        std::array::from_fn(|i| std::array::from_fn(|j| phys[3 * i + j][x]))
    });
    out
}

/// `û'(k) = R û(Rᵀ k)`, the spectral image of the physical-space action.
pub fn act_on_spectral_field(g: GroupElement, u: &SpectralVelocity) -> SpectralVelocity {
    let grid = u.grid;
    let r = g.matrix();
    let n = grid.n();
    let mut out = SpectralVelocity::zeros(grid);
    let src: Vec<usize> = (0..grid.len())
        .map(|idx| grid.index(r.preimage_index(grid.coords(idx), n)))
        .collect();
    for i in 0..3 {
        let from = &u.comp[r.perm[i]];
        let s = f64::from(r.signs[i]);
        for (idx, v) in out.comp[i].iter_mut().enumerate() {
            *v = from[src[idx]] * s;
        }
    }
    out
}

/// Spectral image of the tensor action on a symmetric stress field.
pub fn act_on_spectral_stress(g: GroupElement, s: &SpectralStress) -> SpectralStress {
    let grid = s.grid;
    let r = g.matrix();
    let n = grid.n();
    let src: Vec<usize> = (0..grid.len())
        .map(|idx| grid.index(r.preimage_index(grid.coords(idx), n)))
        .collect();
    let comp = std::array::from_fn(|c| {
        let (i, j) = SYM_INDEX[c];
        let from = s.get(r.perm[i], r.perm[j]);
        let sg = f64::from(r.signs[i] * r.signs[j]);
        src.iter().map(|&m| from[m] * sg).collect()
    });
    SpectralStress { grid, comp }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::periodic(n).unwrap()
    }

    #[test]
    fn sine_coefficients() {
        let g = grid(8);
        let h = g.spacing();
        let u: Vec<f64> = (0..g.len()).map(|i| (g.coords(i)[0] as f64 * h).sin()).collect();
        let f = fft::forward_real(&u, 8);
        for idx in 0..g.len() {
            let k = g.wavevector(idx);
            let expect = match k {
                [1, 0, 0] => C64::new(0.0, -0.5),
                [-1, 0, 0] => C64::new(0.0, 0.5),
                _ => C64::default(),
            };
            assert!((f[idx] - expect).norm() < 1e-14, "{k:?}");
        }
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let g = grid(16);
        let h = g.spacing();
        let u: Vec<f64> = (0..g.len()).map(|i| (g.coords(i)[0] as f64 * h).sin()).collect();
        let d = fft::inverse_real(&derivative(&g, &fft::forward_real(&u, 16), 0), 16);
        for i in 0..g.len() {
            assert!((d[i] - (g.coords(i)[0] as f64 * h).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn dealias_band_on_nine_points() {
        // The band depends only on n; n = 9 is odd so test the rule directly.
        let keep = |k: i64, n: i64| 3 * k.abs() < n;
        assert!(keep(2, 9));
        assert!(!keep(3, 9));
        let g = grid(12);
        let kept: Vec<i64> = (0..12)
            .filter(|&i| in_dealias_band(&g, g.index([i, 0, 0])))
            .map(|i| g.wavenumber(i))
            .collect();
        assert_eq!(kept, vec![0, 1, 2, 3, -3, -2, -1]);
    }
}
