//! Periodic uniform grids, fields sampled on them, and the Fourier symbols of
//! the three diffusion operators.
//!
//! The physical lattice on each axis is `x_j = -L + j dx`, `j = 0..n`, with
//! `dx = 2L / n`. The dual lattice is `xi_k = pi k / L` for
//! `k = -n/2 .. n/2 - 1`. Frequency-space fields use the unitary continuous
//! normalization
//!
//! ```text
//! F(u)(xi) = (2 pi)^{-N/2} * sum_j u(x_j) e^{-i x_j . xi} dx^N
//! ```
//!
//! so that sampled spectra compare directly with whole-space transforms.

mod spectral;

pub use spectral::{apply_multiplier, Multiplier, Scratch, SpectralPlan};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic sampling lattice on `[-L, L)^N`, `N` in {1, 2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    dim: usize,
    points_per_axis: usize,
    half_width: f64,
}

impl UniformGrid {
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Self {
            dim,
            points_per_axis,
            half_width,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Total number of lattice points, `n^N`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `dx^N`, the quadrature weight of one lattice point.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Spacing of the dual lattice, `pi / L`.
    pub fn frequency_step(&self) -> f64 {
        PI / self.half_width
    }

    /// Largest representable frequency magnitude per axis (the Nyquist mode).
    pub fn nyquist(&self) -> f64 {
        self.frequency_step() * (self.points_per_axis / 2) as f64
    }

    /// Coordinate of lattice index `j` along one axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Axis coordinates `-L, -L + dx, ..., L - dx`.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|j| self.coordinate(j)).collect()
    }

    /// Index of the lattice point `x = 0` along one axis.
    pub fn origin_index(&self) -> usize {
        self.points_per_axis / 2
    }

    /// Centered dual lattice `pi k / L`, `k = -n/2 .. n/2 - 1`.
    pub fn frequency_axis(&self) -> Vec<f64> {
        let half = (self.points_per_axis / 2) as i64;
        (0..self.points_per_axis as i64)
            .map(|c| (c - half) as f64 * self.frequency_step())
            .collect()
    }

    /// Cartesian coordinates of flat index `idx` (row-major in 2D).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let n = self.points_per_axis;
        match self.dim {
            1 => [self.coordinate(idx), 0.0],
            _ => [self.coordinate(idx / n), self.coordinate(idx % n)],
        }
    }

    /// Euclidean norm of the point at flat index `idx`.
    pub fn radius(&self, idx: usize) -> f64 {
        let [a, b] = self.point(idx);
        a.hypot(b)
    }

    /// Flat index of the mirror point `-x` (periodically wrapped).
    pub fn mirror_index(&self, idx: usize) -> usize {
        let n = self.points_per_axis;
        let flip = |j: usize| (n - j) % n;
        match self.dim {
            1 => flip(idx),
            _ => flip(idx / n) * n + flip(idx % n),
        }
    }

    /// Samples `f` at every lattice point.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Field {
        let values = (0..self.len())
            .map(|idx| {
                let p = self.point(idx);
                f(&p[..self.dim])
            })
            .collect();
        Field {
            grid: *self,
            data: FieldData::Physical(values),
        }
    }

    /// Samples a radial profile `f(|x|)`.
    pub fn sample_radial(&self, f: impl Fn(f64) -> f64) -> Field {
        let values = (0..self.len()).map(|idx| f(self.radius(idx))).collect();
        Field {
            grid: *self,
            data: FieldData::Physical(values),
        }
    }

    /// True when the point lies within `fraction * L` of the origin in every coordinate.
    pub fn in_bulk(&self, idx: usize, fraction: f64) -> bool {
        let [a, b] = self.point(idx);
        let limit = fraction * self.half_width;
        a.abs() <= limit && b.abs() <= limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Physical,
    Frequency,
}

#[derive(Debug, Clone, PartialEq)]
enum FieldData {
    Physical(Vec<f64>),
    /// Centered order `k = -n/2 .. n/2 - 1` per axis, row-major.
    Frequency(Vec<Complex64>),
}

/// Samples of a function on a [`UniformGrid`], in physical or frequency space.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: UniformGrid,
    data: FieldData,
}

impl Field {
    pub fn physical(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        Ok(Self {
            grid,
            data: FieldData::Physical(values),
        })
    }

    pub fn frequency(grid: UniformGrid, spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(Error::param(
                "spectrum",
                format!("expected {} modes, got {}", grid.len(), spectrum.len()),
            ));
        }
        Ok(Self {
            grid,
            data: FieldData::Frequency(spectrum),
        })
    }

    pub fn constant(grid: UniformGrid, value: f64) -> Self {
        Self {
            grid,
            data: FieldData::Physical(vec![value; grid.len()]),
        }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn space(&self) -> Space {
        match self.data {
            FieldData::Physical(_) => Space::Physical,
            FieldData::Frequency(_) => Space::Frequency,
        }
    }

    /// Physical samples.
    ///
    /// # Panics
    /// If the field is in frequency space; use [`Field::try_values`] to check.
    pub fn values(&self) -> &[f64] {
        self.try_values().expect("field is in frequency space")
    }

    pub fn try_values(&self) -> Result<&[f64]> {
        match &self.data {
            FieldData::Physical(v) => Ok(v),
            FieldData::Frequency(_) => Err(Error::SpaceMismatch {
                expected: Space::Physical,
                found: Space::Frequency,
            }),
        }
    }

    pub fn into_values(self) -> Result<Vec<f64>> {
        match self.data {
            FieldData::Physical(v) => Ok(v),
            FieldData::Frequency(_) => Err(Error::SpaceMismatch {
                expected: Space::Physical,
                found: Space::Frequency,
            }),
        }
    }

    pub fn spectrum(&self) -> Result<&[Complex64]> {
        match &self.data {
            FieldData::Frequency(v) => Ok(v),
            FieldData::Physical(_) => Err(Error::SpaceMismatch {
                expected: Space::Frequency,
                found: Space::Physical,
            }),
        }
    }

    pub fn to_frequency(&self) -> Result<Field> {
        let values = self.try_values()?;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        spectral::full_transform(&self.grid, &mut buf, rustfft::FftDirection::Forward);
        let scale = (self.grid.spacing() / (2.0 * PI).sqrt()).powi(self.grid.dim as i32);
        let mut out = vec![Complex64::new(0.0, 0.0); buf.len()];
        for (fft_idx, z) in buf.iter().enumerate() {
            let (c, parity) = centered_index(&self.grid, fft_idx);
            out[c] = z * (scale * parity);
        }
        Field::frequency(self.grid, out)
    }

    pub fn to_physical(&self) -> Result<Field> {
        let spectrum = self.spectrum()?;
        let mut buf = vec![Complex64::new(0.0, 0.0); spectrum.len()];
        for fft_idx in 0..buf.len() {
            let (c, parity) = centered_index(&self.grid, fft_idx);
            buf[fft_idx] = spectrum[c] * parity;
        }
        spectral::full_transform(&self.grid, &mut buf, rustfft::FftDirection::Inverse);
        let scale = (self.grid.frequency_step() / (2.0 * PI).sqrt()).powi(self.grid.dim as i32);
        let values = buf.iter().map(|z| z.re * scale).collect();
        Field::physical(self.grid, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        let values = self.try_values()?.iter().map(|&v| f(v)).collect();
        Field::physical(self.grid, values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Riemann sum `sum u dx^N`.
    pub fn mass(&self) -> f64 {
        self.values().iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Discrete L2 norm `(sum u^2 dx^N)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values().iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Sup-norm distance to another physical field on the same grid.
    pub fn sup_distance(&self, other: &Field) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let a = self.try_values()?;
        let b = other.try_values()?;
        Ok(a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
    }
}

/// Maps an FFT-order flat index to its centered flat index and the phase
/// `(-1)^{k_1 + k_2}` that accounts for the lattice starting at `-L`.
fn centered_index(grid: &UniformGrid, fft_idx: usize) -> (usize, f64) {
    let n = grid.points_per_axis;
    let half = n / 2;
    let shift = |m: usize| (m + half) % n;
    let (c, parity_sum) = match grid.dim {
        1 => (shift(fft_idx), fft_idx),
        _ => {
            let (m1, m2) = (fft_idx / n, fft_idx % n);
            (shift(m1) * n + shift(m2), m1 + m2)
        }
    };
    let parity = if parity_sum % 2 == 0 { 1.0 } else { -1.0 };
    (c, parity)
}

/// Selects which of `-Delta` and `(-Delta)^s` enter the operator.
///
/// The symbol is `m(xi) = [local] |xi|^2 + [fractional] |xi|^{2s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolSpec {
    s: f64,
    include_local: bool,
    include_fractional: bool,
}

impl SymbolSpec {
    pub fn new(s: f64, include_local: bool, include_fractional: bool) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::param("s", format!("must lie in (0, 1), got {s}")));
        }
        if !include_local && !include_fractional {
            return Err(Error::param(
                "operator",
                "at least one of the local and fractional parts must be enabled",
            ));
        }
        Ok(Self {
            s,
            include_local,
            include_fractional,
        })
    }

    /// `-Delta + (-Delta)^s`.
    pub fn mixed(s: f64) -> Result<Self> {
        Self::new(s, true, true)
    }

    /// `(-Delta)^s` alone.
    pub fn fractional(s: f64) -> Result<Self> {
        Self::new(s, false, true)
    }

    /// `-Delta` alone. `s` is carried along but unused.
    pub fn local() -> Self {
        Self {
            s: 0.5,
            include_local: true,
            include_fractional: false,
        }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn includes_local(&self) -> bool {
        self.include_local
    }

    pub fn includes_fractional(&self) -> bool {
        self.include_fractional
    }

    /// `m(|xi|)`.
    pub fn eval(&self, xi_abs: f64) -> f64 {
        let mut m = 0.0;
        if self.include_local {
            m += xi_abs * xi_abs;
        }
        if self.include_fractional && xi_abs > 0.0 {
            m += xi_abs.powf(2.0 * self.s);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_lattice() {
        let g = UniformGrid::new(1, 8, 4.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.axis(), vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        let xi = g.frequency_axis();
        assert!((xi[0] + PI).abs() < 1e-15);
        assert!((xi[7] - 0.75 * PI).abs() < 1e-15);
        for w in xi.windows(2) {
            assert!((w[1] - w[0] - PI / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pi_lattice_has_unit_frequency_step() {
        let g = UniformGrid::new(1, 16, PI).unwrap();
        assert!((g.spacing() - PI / 8.0).abs() < 1e-15);
        assert!((g.frequency_step() - 1.0).abs() < 1e-15);
        assert!((g.spacing() * 16.0 - 2.0 * PI).abs() <= f64::EPSILON * 2.0 * PI);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(UniformGrid::new(1, 10, 4.0).is_err());
        assert!(UniformGrid::new(1, 4, 4.0).is_err());
        assert!(UniformGrid::new(1, 16, 0.0).is_err());
        assert!(UniformGrid::new(1, 16, -1.0).is_err());
        assert!(UniformGrid::new(3, 16, 1.0).is_err());
    }

    #[test]
    fn frequency_lattice_symmetric_except_nyquist() {
        let g = UniformGrid::new(1, 32, 3.0).unwrap();
        let xi = g.frequency_axis();
        assert!((xi[0] + g.nyquist()).abs() < 1e-12);
        for c in 1..32 {
            assert!((xi[c] + xi[32 - c]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_transforms_to_zero_mode() {
        let g = UniformGrid::new(1, 64, 5.0).unwrap();
        let f = Field::constant(g, 1.0).to_frequency().unwrap();
        let spec = f.spectrum().unwrap();
        let zero = g.origin_index();
        let expected = 2.0 * 5.0 / (2.0 * PI).sqrt();
        assert!((spec[zero].re - expected).abs() < 1e-12);
        for (c, z) in spec.iter().enumerate() {
            if c != zero {
                assert!(z.norm() < 1e-12, "mode {c} = {z}");
            }
        }
    }

    #[test]
    fn cosine_has_two_modes() {
        let g = UniformGrid::new(1, 32, PI).unwrap();
        let f = g.sample(|x| x[0].cos()).to_frequency().unwrap();
        let spec = f.spectrum().unwrap();
        let zero = g.origin_index();
        for (c, z) in spec.iter().enumerate() {
            if c == zero + 1 || c == zero - 1 {
                // (2 pi)^{-1/2} * pi from the continuous-normalized sum
                assert!((z.re - PI / (2.0 * PI).sqrt()).abs() < 1e-12);
            } else {
                assert!(z.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_white_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [1, 2] {
            let n = if dim == 1 { 1024 } else { 64 };
            let g = UniformGrid::new(dim, n, 3.7).unwrap();
            let values: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = Field::physical(g, values.clone()).unwrap();
            let back = f.to_frequency().unwrap().to_physical().unwrap();
            let scale = f.sup_norm();
            for (a, b) in back.values().iter().zip(&values) {
                assert!((a - b).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn space_mismatch_is_an_error() {
        let g = UniformGrid::new(1, 16, 1.0).unwrap();
        let f = Field::constant(g, 2.0);
        assert!(matches!(f.to_physical(), Err(Error::SpaceMismatch { .. })));
        let h = f.to_frequency().unwrap();
        assert!(h.to_frequency().is_err());
    }

    #[test]
    fn mirror_index_flips_coordinates() {
        let g = UniformGrid::new(2, 8, 2.0).unwrap();
        for idx in 0..g.len() {
            let [a, b] = g.point(idx);
            let [c, d] = g.point(g.mirror_index(idx));
            let wrap = |v: f64, w: f64| (v + w).abs() < 1e-12 || (v + w).abs() - 4.0 < 1e-12;
            assert!(wrap(a, c) && wrap(b, d));
        }
    }

    #[test]
    fn symbol_selector() {
        assert!(SymbolSpec::new(0.5, false, false).is_err());
        assert!(SymbolSpec::mixed(1.0).is_err());
        let m = SymbolSpec::mixed(0.25).unwrap();
        assert_eq!(m.eval(0.0), 0.0);
        assert!((m.eval(4.0) - (16.0 + 2.0)).abs() < 1e-14);
        assert_eq!(SymbolSpec::local().eval(3.0), 9.0);
        assert!((SymbolSpec::fractional(0.75).unwrap().eval(4.0) - 8.0).abs() < 1e-12);
    }
}
