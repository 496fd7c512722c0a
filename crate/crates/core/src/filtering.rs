//! Spectral filtering, fine-to-coarse restriction and the discrete
//! sub-filter stress used as the training target.

use crate::error::{Error, Result};
use crate::fft::C64;
use crate::grid::Grid;
use crate::par;
use crate::spectral::{self, SpectralStress, SpectralVelocity};
use crate::tensor3::{sym_deviatoric, Sym6};

/// Gaussian filter that leaves the modes with `‖k‖ < passthrough` untouched.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    /// Filter width `Δ`.
    pub width: f64,
    pub passthrough: f64,
}

impl FilterSpec {
    /// `Δ = factor · h` on the coarse grid.
    pub fn for_grid(coarse: &Grid, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 1.0) {
            return Err(Error::Config(format!(
                "filter width factor must be at least 1, got {factor}"
            )));
        }
        Ok(FilterSpec {
            width: factor * coarse.spacing(),
            passthrough: 3.0,
        })
    }

    /// `G(k)`: 1 inside the passthrough ball, `exp(−|ξ|²Δ²/24)` outside.
    pub fn kernel(&self, grid: &Grid, k: [i64; 3]) -> f64 {
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        if k2.sqrt() < self.passthrough {
            1.0
        } else {
            let kb = grid.base_wavenumber();
            (-k2 * kb * kb * self.width * self.width / 24.0).exp()
        }
    }

    pub fn apply(&self, grid: &Grid, data: &mut [C64]) {
        let chunk = par::POINT_CHUNK;
        par::for_each_chunk_mut(data, chunk, |ci, c| {
            for (j, v) in c.iter_mut().enumerate() {
                let g = self.kernel(grid, grid.wavevector(ci * chunk + j));
                if g != 1.0 {
                    *v *= g;
                }
            }
        });
    }
}

pub fn apply_filter(u: &SpectralVelocity, spec: &FilterSpec) -> SpectralVelocity {
    let mut out = u.clone();
    for c in out.comp.iter_mut() {
        spec.apply(&u.grid, c);
    }
    out
}

fn check_grids(fine: &Grid, coarse: &Grid) -> Result<()> {
    if coarse.n() >= fine.n() {
        return Err(Error::InvalidGrid(format!(
            "coarse grid ({}) must be smaller than the fine grid ({})",
            coarse.n(),
            fine.n()
        )));
    }
    if coarse.length() != fine.length() {
        return Err(Error::InvalidGrid("grids cover different boxes".into()));
    }
    Ok(())
}

/// Copies the modes with every `|k_i| ≤ M/2 − 1` onto the coarse layout; the
/// coarse Nyquist planes stay zero.
pub fn restrict(fine: &Grid, coarse: &Grid, data: &[C64]) -> Result<Vec<C64>> {
    check_grids(fine, coarse)?;
    fine.check_len(data.len())?;
    let mut out = vec![C64::default(); coarse.len()];
    let half = coarse.n() as i64 / 2;
    par::fill_indexed(&mut out, |idx| {
        let k = coarse.wavevector(idx);
        if k.iter().any(|&x| x.abs() >= half) {
            C64::default()
        } else {
            data[fine.mode_index(k)]
        }
    });
    Ok(out)
}

/// Zero-padding of coarse coefficients onto the fine layout.
pub fn prolong(coarse: &Grid, fine: &Grid, data: &[C64]) -> Result<Vec<C64>> {
    check_grids(fine, coarse)?;
    coarse.check_len(data.len())?;
    let mut out = vec![C64::default(); fine.len()];
    let half = coarse.n() as i64 / 2;
    for (idx, v) in data.iter().enumerate() {
        let k = coarse.wavevector(idx);
        if k.iter().all(|&x| x.abs() < half) {
            out[fine.mode_index(k)] = *v;
        }
    }
    Ok(out)
}

pub fn restrict_velocity(u: &SpectralVelocity, coarse: &Grid) -> Result<SpectralVelocity> {
    let c = [
        restrict(&u.grid, coarse, &u.comp[0])?,
        restrict(&u.grid, coarse, &u.comp[1])?,
        restrict(&u.grid, coarse, &u.comp[2])?,
    ];
    SpectralVelocity::from_components(*coarse, c)
}

/// Result of the sub-filter stress computation for one fine-grid field.
#[derive(Clone, Debug)]
pub struct SfsParts {
    /// Filtered, restricted velocity on the coarse grid.
    pub u_bar: SpectralVelocity,
    /// Restriction of the filtered fine-grid nonlinear stress.
    pub filtered_fine: SpectralStress,
    /// Coarse-grid nonlinear stress of `u_bar`.
    pub coarse: SpectralStress,
    /// `filtered_fine − coarse`, spectral and not yet made deviatoric.
    pub tau: SpectralStress,
}

/// `τ = restrict(G σ_N(v)) − σ_M(restrict(G v))`, nonlinear parts only.
pub fn sfs_parts(v: &SpectralVelocity, coarse: &Grid, spec: &FilterSpec) -> Result<SfsParts> {
    check_grids(&v.grid, coarse)?;
    let fine = v.grid;
    let mut sigma_n = spectral::nonlinear_stress(v);
    let mut filtered = Vec::with_capacity(6);
    for c in sigma_n.comp.iter_mut() {
        spec.apply(&fine, c);
        filtered.push(restrict(&fine, coarse, c)?);
    }
    let mut it = filtered.into_iter();
    let filtered_fine = SpectralStress {
        grid: *coarse,
        comp: std::array::from_fn(|_| it.next().unwrap()),
    };
    let u_bar = restrict_velocity(&apply_filter(v, spec), coarse)?;
    let coarse_stress = spectral::nonlinear_stress(&u_bar);
    let tau = SpectralStress {
        grid: *coarse,
        comp: std::array::from_fn(|c| {
            filtered_fine.comp[c]
                .iter()
                .zip(&coarse_stress.comp[c])
                .map(|(a, b)| a - b)
                .collect()
        }),
    };
    Ok(SfsParts {
        u_bar,
        filtered_fine,
        coarse: coarse_stress,
        tau,
    })
}

/// Filtered velocity and deviatoric discrete SFS in physical space.
pub fn discrete_sfs(
    v: &SpectralVelocity,
    coarse: &Grid,
    spec: &FilterSpec,
) -> Result<(SpectralVelocity, Vec<Sym6>)> {
    let parts = sfs_parts(v, coarse, spec)?;
    let tau = parts
        .tau
        .to_physical()
        .iter()
        .map(sym_deviatoric)
        .collect();
    Ok((parts.u_bar, tau))
}

/// One training datum: filtered velocity and its deviatoric SFS.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotPair {
    pub time: f64,
    pub u_bar: SpectralVelocity,
    pub tau: Vec<Sym6>,
}

pub fn make_pair(
    time: f64,
    v: &SpectralVelocity,
    coarse: &Grid,
    spec: &FilterSpec,
) -> Result<SnapshotPair> {
    let (u_bar, tau) = discrete_sfs(v, coarse, spec)?;
    Ok(SnapshotPair { time, u_bar, tau })
}

/// Chronological split: the first `⌈fraction · n⌉` pairs train, the rest test.
pub fn build_dataset(
    mut pairs: Vec<SnapshotPair>,
    fraction: f64,
) -> Result<(Vec<SnapshotPair>, Vec<SnapshotPair>)> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no snapshot pairs".into()));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "split fraction must lie in [0, 1], got {fraction}"
        )));
    }
    pairs.sort_by(|a, b| a.time.total_cmp(&b.time));
    let n_train = ((fraction * pairs.len() as f64).ceil() as usize).min(pairs.len());
    let test = pairs.split_off(n_train);
    Ok((pairs, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        let g = Grid::periodic(16).unwrap();
        let f = FilterSpec::for_grid(&g, 4.0).unwrap();
        assert_eq!(f.kernel(&g, [2, 0, 0]), 1.0);
        assert_eq!(f.kernel(&g, [1, 1, 1]), 1.0);
        let d = f.width;
        assert!((f.kernel(&g, [3, 0, 0]) - (-9.0 * d * d / 24.0).exp()).abs() < 1e-15);
        assert!(FilterSpec::for_grid(&g, 0.5).is_err());
    }

    #[test]
    fn split_counts() {
        let g = Grid::periodic(4).unwrap();
        let pairs: Vec<SnapshotPair> = (0..4)
            .map(|i| SnapshotPair {
                time: i as f64,
                u_bar: SpectralVelocity::zeros(g),
                tau: vec![[0.0; 6]; g.len()],
            })
            .collect();
        let (a, b) = build_dataset(pairs, 0.5).unwrap();
        assert_eq!((a.len(), b.len()), (2, 2));
        assert!(a[1].time < b[0].time);
        assert!(build_dataset(Vec::new(), 0.5).is_err());
    }

    #[test]
    fn restriction_rejects_larger_target() {
        let f = Grid::periodic(8).unwrap();
        let c = Grid::periodic(8).unwrap();
        assert!(restrict(&f, &c, &vec![C64::default(); f.len()]).is_err());
    }
}
