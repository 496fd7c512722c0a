use crate::error::{Error, Result};

/// Uniform periodic grid on the cube `[0, L)³` with `n` points per axis.
///
/// Flat storage order is `(i1, i2, i3)` with `i3` fastest. Spectral arrays
/// use the same layout in FFT order: index `i` holds wavenumber `i` for
/// `i < n/2` and `i - n` otherwise, so each axis covers `-n/2 ..= n/2 - 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 2, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive, got {length}"
            )));
        }
        Ok(Grid { n, length })
    }

    /// `n` points on the standard `2π` box.
    pub fn periodic(n: usize) -> Result<Self> {
        Grid::new(n, std::f64::consts::TAU)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.n + i[1]) * self.n + i[2]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Signed wavenumber stored at FFT index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let c = self.coords(idx);
        [
            self.wavenumber(c[0]),
            self.wavenumber(c[1]),
            self.wavenumber(c[2]),
        ]
    }

    /// Storage index of wavenumber `k` (taken modulo `n`).
    #[inline]
    pub fn mode_index(&self, k: [i64; 3]) -> usize {
        let n = self.n as i64;
        let w = |x: i64| x.rem_euclid(n) as usize;
        self.index([w(k[0]), w(k[1]), w(k[2])])
    }

    /// True if `i` is the Nyquist index `-n/2` on its axis.
    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// `2π/L`, the factor turning integer wavenumbers into angular ones.
    #[inline]
    pub fn base_wavenumber(&self) -> f64 {
        std::f64::consts::TAU / self.length
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: self.len(),
                actual: len,
            })
        }
    }
}
