//! Real-to-complex transform plans and diagonal Fourier multipliers.
//!
//! Fields are real, so the hot path works on the half spectrum produced by a
//! real FFT: `n/2 + 1` bins in 1D, `n x (n/2 + 1)` in 2D (complex FFT along the
//! first axis, real FFT along the second).

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftDirection, FftPlanner};

use super::{Field, SymbolSpec, UniformGrid};
use crate::error::{Error, Result};

fn complex_planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn real_planner() -> &'static Mutex<RealFftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<RealFftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(RealFftPlanner::new()))
}

fn plan_complex(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    complex_planner()
        .lock()
        .expect("fft planner poisoned")
        .plan_fft(n, direction)
}

/// Unnormalized complex DFT in FFT order, applied along every axis in place.
pub(super) fn full_transform(grid: &UniformGrid, buf: &mut [Complex64], direction: FftDirection) {
    let n = grid.points_per_axis();
    let fft = plan_complex(n, direction);
    fft.process(buf);
    if grid.dim() == 2 {
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for i2 in 0..n {
            for i1 in 0..n {
                column[i1] = buf[i1 * n + i2];
            }
            fft.process(&mut column);
            for i1 in 0..n {
                buf[i1 * n + i2] = column[i1];
            }
        }
    }
}

/// Cached transform plans for one grid.
#[derive(Clone)]
pub struct SpectralPlan {
    grid: UniformGrid,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    column_forward: Option<Arc<dyn Fft<f64>>>,
    column_inverse: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan").field("grid", &self.grid).finish()
    }
}

impl SpectralPlan {
    pub fn new(grid: &UniformGrid) -> Self {
        let n = grid.points_per_axis();
        let (r2c, c2r) = {
            let mut planner = real_planner().lock().expect("fft planner poisoned");
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        };
        let (column_forward, column_inverse) = if grid.dim() == 2 {
            (
                Some(plan_complex(n, FftDirection::Forward)),
                Some(plan_complex(n, FftDirection::Inverse)),
            )
        } else {
            (None, None)
        };
        Self {
            grid: *grid,
            r2c,
            c2r,
            column_forward,
            column_inverse,
        }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    /// Number of stored half-spectrum bins.
    pub fn half_len(&self) -> usize {
        let n = self.grid.points_per_axis();
        let row = n / 2 + 1;
        if self.grid.dim() == 1 {
            row
        } else {
            n * row
        }
    }

    /// Signed wavenumbers `(k1, k2)` of a half-spectrum bin (`k2 = 0` in 1D).
    pub fn wavenumbers(&self, bin: usize) -> (i64, i64) {
        let n = self.grid.points_per_axis();
        let half = (n / 2) as i64;
        match self.grid.dim() {
            1 => (bin as i64, 0),
            _ => {
                let row = n / 2 + 1;
                let (i1, i2) = ((bin / row) as i64, (bin % row) as i64);
                let k1 = if i1 < half { i1 } else { i1 - n as i64 };
                (k1, i2)
            }
        }
    }

    /// `|xi|` for every half-spectrum bin. Nyquist modes carry their positive magnitude.
    pub fn frequency_moduli(&self) -> Vec<f64> {
        let step = self.grid.frequency_step();
        (0..self.half_len())
            .map(|bin| {
                let (k1, k2) = self.wavenumbers(bin);
                step * (k1 as f64).hypot(k2 as f64)
            })
            .collect()
    }

    /// `m(xi)` for every half-spectrum bin.
    pub fn symbol_values(&self, spec: &SymbolSpec) -> Vec<f64> {
        self.frequency_moduli().into_iter().map(|r| spec.eval(r)).collect()
    }

    /// Reusable scratch space for [`SpectralPlan::forward_into`] and
    /// [`SpectralPlan::inverse_into`].
    pub fn scratch(&self) -> Scratch {
        Scratch {
            forward: self.r2c.make_scratch_vec(),
            inverse: self.c2r.make_scratch_vec(),
            column: if self.grid.dim() == 2 {
                vec![Complex64::new(0.0, 0.0); self.grid.points_per_axis()]
            } else {
                Vec::new()
            },
        }
    }

    /// Unnormalized forward real DFT of physical samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut input = values.to_vec();
        let mut out = vec![Complex64::new(0.0, 0.0); self.half_len()];
        self.forward_into(&mut input, &mut out, &mut self.scratch());
        out
    }

    /// Inverse of [`SpectralPlan::forward`], including the `1/n^N` factor.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.inverse_into(&mut spectrum, &mut out, &mut self.scratch());
        out
    }

    /// Allocation-free forward transform. `input` is used as workspace and
    /// left in an unspecified state.
    pub fn forward_into(&self, input: &mut [f64], out: &mut [Complex64], scratch: &mut Scratch) {
        let n = self.grid.points_per_axis();
        let row = n / 2 + 1;
        let rows = if self.grid.dim() == 1 { 1 } else { n };
        for r in 0..rows {
            self.r2c
                .process_with_scratch(
                    &mut input[r * n..(r + 1) * n],
                    &mut out[r * row..(r + 1) * row],
                    &mut scratch.forward,
                )
                .expect("real fft length mismatch");
        }
        if let Some(fft) = &self.column_forward {
            transform_columns(fft.as_ref(), out, &mut scratch.column, row);
        }
    }

    /// Allocation-free normalized inverse. `spectrum` is used as workspace.
    pub fn inverse_into(&self, spectrum: &mut [Complex64], out: &mut [f64], scratch: &mut Scratch) {
        let n = self.grid.points_per_axis();
        let row = n / 2 + 1;
        if let Some(fft) = &self.column_inverse {
            transform_columns(fft.as_ref(), spectrum, &mut scratch.column, row);
        }
        let rows = if self.grid.dim() == 1 { 1 } else { n };
        for r in 0..rows {
            let bins = &mut spectrum[r * row..(r + 1) * row];
            // DC and Nyquist bins of a real row are real; drop rounding residue.
            bins[0].im = 0.0;
            bins[row - 1].im = 0.0;
            self.c2r
                .process_with_scratch(bins, &mut out[r * n..(r + 1) * n], &mut scratch.inverse)
                .expect("real fft length mismatch");
        }
        let scale = 1.0 / self.grid.len() as f64;
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
}

impl SpectralPlan {
    /// `(-1)^{k1 + k2}` for a half-spectrum bin: the phase between FFT
    /// order and the lattice that starts at `-L`.
    pub fn parity(&self, bin: usize) -> f64 {
        let (k1, k2) = self.wavenumbers(bin);
        if (k1 + k2).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Spectral partial derivative along `axis` (0 or 1); Nyquist modes of
    /// that axis are dropped since an odd derivative has no real value there.
    pub fn derivative(&self, values: &[f64], axis: usize) -> Vec<f64> {
        assert!(axis < self.grid.dim(), "axis out of range");
        let half = (self.grid.points_per_axis() / 2) as i64;
        let step = self.grid.frequency_step();
        let mut spectrum = self.forward(values);
        for (bin, z) in spectrum.iter_mut().enumerate() {
            let (k1, k2) = self.wavenumbers(bin);
            let k = if axis == 0 { k1 } else { k2 };
            *z = if k.abs() == half {
                Complex64::new(0.0, 0.0)
            } else {
                *z * Complex64::new(0.0, step * k as f64)
            };
        }
        self.inverse(spectrum)
    }

    /// Periodic convolution of two lattice functions whose origin sits at
    /// index `n/2`: `(a * b)(x_j) = dx^N sum_i a(x_i) b(x_j - x_i)`.
    pub fn convolve(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let fa = self.forward(a);
        let fb = self.forward(b);
        let w = self.grid.cell_volume();
        let product = fa
            .iter()
            .zip(&fb)
            .enumerate()
            .map(|(bin, (x, y))| x * y * (w * self.parity(bin)))
            .collect();
        self.inverse(product)
    }
}

/// Per-thread transform workspace.
#[derive(Debug, Clone)]
pub struct Scratch {
    forward: Vec<Complex64>,
    inverse: Vec<Complex64>,
    column: Vec<Complex64>,
}

fn transform_columns(fft: &dyn Fft<f64>, data: &mut [Complex64], column: &mut [Complex64], row: usize) {
    let n = column.len();
    for c in 0..row {
        for r in 0..n {
            column[r] = data[r * row + c];
        }
        fft.process(column);
        for r in 0..n {
            data[r * row + c] = column[r];
        }
    }
}

/// The diagonal factor `e^{-t m(xi)}` tabulated on the half spectrum.
#[derive(Debug, Clone)]
pub struct Multiplier {
    plan: SpectralPlan,
    factors: Vec<f64>,
}

impl Multiplier {
    pub fn heat(grid: &UniformGrid, spec: &SymbolSpec, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::param("t", format!("time must be finite and >= 0, got {t}")));
        }
        let plan = SpectralPlan::new(grid);
        let factors = plan
            .symbol_values(spec)
            .into_iter()
            .map(|m| (-t * m).exp())
            .collect();
        Ok(Self { plan, factors })
    }

    /// Arbitrary real even multiplier given per half-spectrum bin.
    pub fn from_factors(plan: SpectralPlan, factors: Vec<f64>) -> Result<Self> {
        if factors.len() != plan.half_len() {
            return Err(Error::param(
                "factors",
                format!("expected {} bins, got {}", plan.half_len(), factors.len()),
            ));
        }
        Ok(Self { plan, factors })
    }

    pub fn plan(&self) -> &SpectralPlan {
        &self.plan
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn apply_values(&self, values: &[f64]) -> Vec<f64> {
        let mut spectrum = self.plan.forward(values);
        for (z, m) in spectrum.iter_mut().zip(&self.factors) {
            *z *= *m;
        }
        self.plan.inverse(spectrum)
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if f.grid() != self.plan.grid() {
            return Err(Error::GridMismatch);
        }
        Field::physical(*f.grid(), self.apply_values(f.try_values()?))
    }
}

/// Multiplies the spectrum of `f` by `e^{-t m(xi)}`; `t = 0` returns `f` unchanged.
pub fn apply_multiplier(f: &Field, spec: &SymbolSpec, t: f64) -> Result<Field> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("time must be finite and >= 0, got {t}")));
    }
    let values = f.try_values()?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    Multiplier::heat(f.grid(), spec, t)?.apply(&Field::physical(*f.grid(), values.to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_time_is_identity() {
        let g = UniformGrid::new(1, 64, 3.0).unwrap();
        let f = g.sample(|x| (x[0] * 1.3).sin() + 0.2);
        let spec = SymbolSpec::mixed(0.4).unwrap();
        assert_eq!(apply_multiplier(&f, &spec, 0.0).unwrap(), f);
        assert!(apply_multiplier(&f, &spec, -1.0).is_err());
    }

    #[test]
    fn eigenmode_decay() {
        let g = UniformGrid::new(1, 128, PI).unwrap();
        let spec = SymbolSpec::mixed(0.3).unwrap();
        for k in [1.0f64, 3.0, 7.0] {
            let f = g.sample(|x| (k * x[0]).cos());
            let t = 0.37;
            let out = apply_multiplier(&f, &spec, t).unwrap();
            let factor = (-t * (k * k + k.powf(0.6))).exp();
            for (a, b) in out.values().iter().zip(f.values()) {
                assert!((a - factor * b).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn two_dim_eigenmode() {
        let g = UniformGrid::new(2, 32, PI).unwrap();
        let spec = SymbolSpec::fractional(0.5).unwrap();
        let f = g.sample(|x| (2.0 * x[0]).cos() * (-(1.0 * x[1])).sin());
        let out = apply_multiplier(&f, &spec, 0.5).unwrap();
        let factor = (-0.5 * 5.0f64.sqrt()).exp();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - factor * b).abs() <= 1e-13);
        }
    }

    #[test]
    fn derivatives_of_trig_modes() {
        let g = UniformGrid::new(2, 32, PI).unwrap();
        let plan = SpectralPlan::new(&g);
        let f = g.sample(|x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
        let d0 = plan.derivative(f.values(), 0);
        let d1 = plan.derivative(f.values(), 1);
        for idx in 0..g.len() {
            let [x, y] = g.point(idx);
            assert!((d0[idx] - 3.0 * (3.0 * x).cos() * (2.0 * y).cos()).abs() < 1e-12);
            assert!((d1[idx] + 2.0 * (3.0 * x).sin() * (2.0 * y).sin()).abs() < 1e-12);
        }
        let g1 = UniformGrid::new(1, 64, 2.0).unwrap();
        let h = g1.sample(|x| (PI * x[0]).cos());
        let d = SpectralPlan::new(&g1).derivative(h.values(), 0);
        for (j, v) in d.iter().enumerate() {
            assert!((v + PI * (PI * g1.coordinate(j)).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn plan_round_trip_matches_field_transform() {
        let g = UniformGrid::new(2, 16, 2.0).unwrap();
        let f = g.sample(|x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp() + 0.1 * x[0]);
        let plan = SpectralPlan::new(&g);
        let back = plan.inverse(plan.forward(f.values()));
        for (a, b) in back.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let g = UniformGrid::new(1, 32, 4.0).unwrap();
        let a = g.sample(|x| (-(x[0] - 0.5).powi(2)).exp());
        let b = g.sample(|x| 1.0 / (1.0 + x[0] * x[0]));
        let plan = SpectralPlan::new(&g);
        let fast = plan.convolve(a.values(), b.values());
        let n = 32;
        for j in 0..n {
            let direct: f64 = (0..n)
                .map(|i| a.values()[i] * b.values()[(j + n + n / 2 - i) % n])
                .sum::<f64>()
                * g.spacing();
            assert!((fast[j] - direct).abs() < 1e-13, "{j}: {} vs {direct}", fast[j]);
        }
    }

    #[test]
    fn two_dim_convolution_matches_direct_sum() {
        let g = UniformGrid::new(2, 8, 2.0).unwrap();
        let a = g.sample(|x| (-(x[0] * x[0] + 0.5 * x[1])).exp());
        let b = g.sample(|x| 1.0 + x[0] - 0.3 * x[1] * x[1]);
        let fast = SpectralPlan::new(&g).convolve(a.values(), b.values());
        let n = 8;
        let wrap = |j: usize, i: usize| (j + n + n / 2 - i) % n;
        for j1 in 0..n {
            for j2 in 0..n {
                let mut direct = 0.0;
                for i1 in 0..n {
                    for i2 in 0..n {
                        direct += a.values()[i1 * n + i2] * b.values()[wrap(j1, i1) * n + wrap(j2, i2)];
                    }
                }
                direct *= g.cell_volume();
                assert!((fast[j1 * n + j2] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constants_are_preserved() {
        let g = UniformGrid::new(1, 256, 10.0).unwrap();
        let f = Field::constant(g, 1.0);
        let out = apply_multiplier(&f, &SymbolSpec::local(), 5.0).unwrap();
        for v in out.values() {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
