//! Heat kernels of `-Delta`, `(-Delta)^s` and their sum, sampled on a grid.
//!
//! Spectral tables invert `e^{-t m(xi)}` on the dual lattice, so they are the
//! *periodized* kernels `sum_m p(t, x + 2Lm)`: unit mass and the semigroup law
//! hold to rounding, but they differ from the whole-space kernel by the image
//! terms `m != 0`. [`KernelTable::whole_line_values`] removes those terms
//! for 1D comparisons against whole-space oracles.

mod bounds;
mod images;
mod quadrature;

pub use bounds::{
    check_chapman_kolmogorov, check_scaling, check_two_sided_bounds, fit_sup_decay,
    fractional_tail_constant, tail_alpha, tail_report, HarnackRegion, KernelBoundSpec,
};
pub use images::{hurwitz_zeta, image_sum};

pub use quadrature::{
    kernel_by_quadrature, kernel_by_quadrature_with, radial_kernel_by_quadrature, QuadratureOptions,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, SpectralPlan, SymbolSpec, UniformGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian,
    Fractional,
    Mixed,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Gaussian, KernelKind::Fractional, KernelKind::Mixed];

    pub fn symbol(self, s: f64) -> Result<SymbolSpec> {
        match self {
            KernelKind::Gaussian => Ok(SymbolSpec::local()),
            KernelKind::Fractional => SymbolSpec::fractional(s),
            KernelKind::Mixed => SymbolSpec::mixed(s),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Fractional => "fractional",
            KernelKind::Mixed => "mixed",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelKind::Gaussian),
            "fractional" => Ok(KernelKind::Fractional),
            "mixed" => Ok(KernelKind::Mixed),
            other => Err(Error::param("kind", format!("unknown kernel kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    ClosedForm,
    Spectral,
    Quadrature,
    Convolution,
}

/// A heat kernel sampled at one time on the lattice of `grid`.
///
/// `values` follow the grid's lattice order, so the origin sits at flat
/// index `n/2` (1D) or `(n/2) * n + n/2` (2D).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    grid: UniformGrid,
    t: f64,
    s: f64,
    kind: KernelKind,
    construction: Construction,
    values: Vec<f64>,
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("kernel time must be positive, got {t}")));
    }
    Ok(())
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::param("s", format!("must lie in (0, 1), got {s}")));
    }
    Ok(())
}

/// `(4 pi t)^{-N/2} e^{-r^2 / 4t}`.
pub fn gaussian_density(dim: usize, t: f64, r: f64) -> f64 {
    (4.0 * PI * t).powf(-(dim as f64) / 2.0) * (-r * r / (4.0 * t)).exp()
}

/// Whole-line `p^{(1/2)}(t, x) = t / (pi (t^2 + x^2))`.
pub fn poisson_kernel(t: f64, x: f64) -> f64 {
    t / (PI * (t * t + x * x))
}

/// Closed-form Gaussian table.
pub fn gaussian_kernel(grid: &UniformGrid, t: f64) -> Result<KernelTable> {
    check_time(t)?;
    let dim = grid.dim();
    let values = (0..grid.len())
        .map(|idx| gaussian_density(dim, t, grid.radius(idx)))
        .collect();
    Ok(KernelTable {
        grid: *grid,
        t,
        s: f64::NAN,
        kind: KernelKind::Gaussian,
        construction: Construction::ClosedForm,
        values,
    })
}

/// Spectral inversion of `e^{-t |xi|^{2s}}`.
pub fn fractional_kernel(grid: &UniformGrid, t: f64, s: f64) -> Result<KernelTable> {
    check_order(s)?;
    spectral_kernel(grid, KernelKind::Fractional, t, s)
}

/// Spectral inversion of `e^{-t (|xi|^2 + |xi|^{2s})}`.
pub fn mixed_kernel(grid: &UniformGrid, t: f64, s: f64) -> Result<KernelTable> {
    check_order(s)?;
    spectral_kernel(grid, KernelKind::Mixed, t, s)
}

/// Table of `kind`: closed form for the Gaussian, spectral otherwise.
pub fn kernel(grid: &UniformGrid, kind: KernelKind, t: f64, s: f64) -> Result<KernelTable> {
    match kind {
        KernelKind::Gaussian => gaussian_kernel(grid, t),
        KernelKind::Fractional => fractional_kernel(grid, t, s),
        KernelKind::Mixed => mixed_kernel(grid, t, s),
    }
}

/// Spectral inversion for any kind, the Gaussian included (periodized).
pub fn spectral_kernel(grid: &UniformGrid, kind: KernelKind, t: f64, s: f64) -> Result<KernelTable> {
    check_time(t)?;
    let spec = kind.symbol(s)?;
    let plan = SpectralPlan::new(grid);
    // Lattice sum (2L)^{-N} sum_k e^{-t m} e^{i xi_k x_j}; the n^N undoes the
    // inverse-FFT normalization and the parity moves the origin to index n/2.
    let scale = grid.len() as f64 / (2.0 * grid.half_width()).powi(grid.dim() as i32);
    let spectrum: Vec<Complex64> = plan
        .symbol_values(&spec)
        .iter()
        .enumerate()
        .map(|(bin, m)| Complex64::new(scale * plan.parity(bin) * (-t * m).exp(), 0.0))
        .collect();
    let values = plan.inverse(spectrum);
    Ok(KernelTable {
        grid: *grid,
        t,
        s: if kind == KernelKind::Gaussian { f64::NAN } else { s },
        kind,
        construction: Construction::Spectral,
        values,
    })
}

/// Smallest 1D grid on `[-L, L)` (points per axis at most `2^max_log2`)
/// whose discarded spectral tail `(1/pi) int_{xi_N}^inf e^{-t m}` is below
/// `tol`, so spectral tables have no visible truncation ripple.
pub fn resolved_grid(
    kind: KernelKind,
    s: f64,
    t: f64,
    half_width: f64,
    tol: f64,
    max_log2: u32,
) -> Result<UniformGrid> {
    check_time(t)?;
    let mut n = 8usize;
    loop {
        let grid = UniformGrid::new(1, n, half_width)?;
        let tail = quadrature::tail_bound(kind, s, t, 0, grid.nyquist()) / PI;
        if tail <= tol || n >= 1 << max_log2 {
            return Ok(grid);
        }
        n *= 2;
    }
}

impl KernelTable {
    /// Wraps externally computed samples (for example a convolution product).
    pub fn from_values(
        grid: UniformGrid,
        kind: KernelKind,
        t: f64,
        s: f64,
        construction: Construction,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_time(t)?;
        if values.len() != grid.len() {
            return Err(Error::param(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        Ok(Self {
            grid,
            t,
            s,
            kind,
            construction,
            values,
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Fractional order; NaN for Gaussian tables.
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_field(&self) -> Field {
        Field::physical(self.grid, self.values.clone()).expect("table length matches grid")
    }

    /// Value at the origin.
    pub fn peak(&self) -> f64 {
        let n = self.grid.points_per_axis();
        let o = self.grid.origin_index();
        match self.grid.dim() {
            1 => self.values[o],
            _ => self.values[o * n + o],
        }
    }

    /// `sum values * dx^N`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `max |p(x) - p(-x)|` over lattice points whose mirror is on the lattice.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.values.len()).fold(0.0f64, |m, idx| {
            m.max((self.values[idx] - self.values[self.grid.mirror_index(idx)]).abs())
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Periodic convolution with another table on the same grid.
    pub fn convolve(&self, other: &KernelTable) -> Result<Vec<f64>> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(SpectralPlan::new(&self.grid).convolve(&self.values, &other.values))
    }

    /// Evaluates the periodized kernel at an arbitrary 1D point by summing its
    /// cosine series directly. Only meaningful for spectral tables.
    pub fn periodized_value_at(&self, y: f64) -> Result<f64> {
        if self.grid.dim() != 1 {
            return Err(Error::Precondition("off-lattice evaluation is 1D only".into()));
        }
        let spec = self.kind.symbol(if self.s.is_nan() { 0.5 } else { self.s })?;
        let n = self.grid.points_per_axis();
        let step = self.grid.frequency_step();
        let two_l = 2.0 * self.grid.half_width();
        let mut sum = 1.0;
        let mut comp = 0.0;
        for k in 1..=n / 2 {
            let xi = step * k as f64;
            let w = (-self.t * spec.eval(xi)).exp();
            if w < 1e-18 {
                break;
            }
            let weight = if k == n / 2 { w } else { 2.0 * w };
            let term = weight * (xi * y).cos();
            // Neumaier compensation
            let tsum = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - tsum) + term;
            } else {
                comp += (term - tsum) + sum;
            }
            sum = tsum;
        }
        Ok((sum + comp) / two_l)
    }

    /// Estimate of the whole-line kernel on the lattice (1D spectral tables):
    /// the table minus its periodic images.
    pub fn whole_line_values(&self) -> Result<Vec<f64>> {
        if self.grid.dim() != 1 {
            return Err(Error::Precondition("image correction is 1D only".into()));
        }
        if self.construction != Construction::Spectral {
            return Ok(self.values.clone());
        }
        let l = self.grid.half_width();
        (0..self.values.len())
            .map(|j| {
                let x = self.grid.coordinate(j);
                Ok(self.values[j] - image_sum(self.kind, self.s, self.t, x, l)?)
            })
            .collect()
    }

    /// Whole-line value at an arbitrary 1D point.
    pub fn whole_line_value_at(&self, y: f64) -> Result<f64> {
        let l = self.grid.half_width();
        Ok(self.periodized_value_at(y)? - image_sum(self.kind, self.s, self.t, y, l)?)
    }
}
