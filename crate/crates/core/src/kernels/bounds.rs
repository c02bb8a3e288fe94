//! Checkers for the scaling law, the semigroup law, two-sided bounds, tail
//! asymptotics and the decay of the peak.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::{
    fractional_kernel, gaussian_density, kernel, kernel_by_quadrature, Construction, KernelKind,
    KernelTable,
};
use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::report::{Check, Report};
use crate::stats::linear_fit;

/// `2^{N+2s} pi^{N/2-1} s Gamma(N/2+s) Gamma(s)`.
pub fn tail_alpha(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    2f64.powf(n + 2.0 * s) * PI.powf(n / 2.0 - 1.0) * s * gamma(n / 2.0 + s) * gamma(s)
}

/// `C_{N,s} = 2^{2s-1} 2s Gamma((N+2s)/2) / (pi^{N/2} Gamma(1-s))`, the
/// coefficient of `|x|^{-N-2s}` in the singular-integral form of `(-Delta)^s`.
pub fn fractional_tail_constant(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    2f64.powf(2.0 * s - 1.0) * 2.0 * s * gamma((n + 2.0 * s) / 2.0) / (PI.powf(n / 2.0) * gamma(1.0 - s))
}

/// The four cases of the parabolic Harnack comparison, tested in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarnackRegion {
    /// `|x|^2 < t < |x|^{2s} <= 1`
    GaussianCore,
    /// `t < |x|^2 <= 1`
    Crossover,
    /// `|x|^{2s} <= t <= 1`
    ShortTime,
    /// `t >= 1` or `|x| >= 1`, and anything the first three miss
    Fractional,
}

impl HarnackRegion {
    pub const ALL: [HarnackRegion; 4] = [
        HarnackRegion::GaussianCore,
        HarnackRegion::Crossover,
        HarnackRegion::ShortTime,
        HarnackRegion::Fractional,
    ];

    pub fn classify(t: f64, r: f64, s: f64) -> Self {
        let r2 = r * r;
        let r2s = r.powf(2.0 * s);
        if r2 < t && t < r2s && r2s <= 1.0 {
            HarnackRegion::GaussianCore
        } else if t < r2 && r2 <= 1.0 {
            HarnackRegion::Crossover
        } else if r2s <= t && t <= 1.0 {
            HarnackRegion::ShortTime
        } else {
            HarnackRegion::Fractional
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HarnackRegion::GaussianCore => "gaussian_core",
            HarnackRegion::Crossover => "crossover",
            HarnackRegion::ShortTime => "short_time",
            HarnackRegion::Fractional => "fractional",
        }
    }

    /// Lower and upper comparison functions `(q1, q2)` given the Gaussian
    /// radius, time and the fractional kernel value at the same point.
    fn comparison(self, dim: usize, t: f64, r: f64, fractional: f64) -> (f64, f64) {
        let pref = (4.0 * PI * t).powf(-(dim as f64) / 2.0);
        let hat = pref * (-r * r / t).exp();
        let tilde = pref * (-r * r / (16.0 * t)).exp();
        let gauss = gaussian_density(dim, t, r);
        match self {
            HarnackRegion::GaussianCore => (hat, gauss),
            HarnackRegion::Crossover => (hat.max(fractional), tilde.max(fractional)),
            HarnackRegion::ShortTime => (gauss, gauss),
            HarnackRegion::Fractional => (fractional, fractional),
        }
    }
}

/// Constants and windows used by [`check_two_sided_bounds`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundSpec {
    /// Fractional two-sided constant; the checker fits it, this is its floor.
    pub b: f64,
    /// Tail coefficient from the closed formula.
    pub alpha: f64,
    /// Tail onset multiplier: the tail window is `|x| > M t^{1/2s}`.
    pub m: f64,
    /// Fraction of the half width kept as bulk (the rest sees images).
    pub bulk_fraction: f64,
    /// Tolerance for `max rho / min rho` over the tail window.
    pub tail_constancy: f64,
}

impl KernelBoundSpec {
    pub fn new(dim: usize, s: f64) -> Self {
        Self {
            b: 1.0,
            alpha: tail_alpha(dim, s),
            m: 5.0,
            bulk_fraction: 0.9,
            tail_constancy: 1.1,
        }
    }
}

/// Whole-line values when the image series applies, raw values otherwise.
fn best_values(table: &KernelTable) -> Vec<f64> {
    if table.grid().dim() == 1 && table.construction() == Construction::Spectral {
        if let Ok(v) = table.whole_line_values() {
            return v;
        }
    }
    table.values().to_vec()
}

fn require_fractional_1d(table: &KernelTable) -> Result<()> {
    if table.kind() != KernelKind::Fractional {
        return Err(Error::Precondition(format!(
            "scaling with exponent 1/(2s) applies to the fractional kernel, got {}",
            table.kind().name()
        )));
    }
    if table.grid().dim() != 1 {
        return Err(Error::Precondition("scaling check is 1D only".into()));
    }
    Ok(())
}

/// Compares `p(t, x)` with `t^{-1/2s} p(1, t^{-1/2s} x)` on at most 256 bulk
/// points `|x| <= L/4`. The unit-time kernel is evaluated off-lattice from
/// its cosine series with images removed.
pub fn check_scaling(table: &KernelTable) -> Result<Report> {
    require_fractional_1d(table)?;
    let grid = *table.grid();
    let (t, s) = (table.t(), table.s());
    let mut report = Report::new();
    let deviation = if t == 1.0 {
        0.0
    } else {
        let whole = table.whole_line_values()?;
        let unit = fractional_kernel(&grid, 1.0, s)?;
        let bulk: Vec<usize> = (0..grid.len()).filter(|&j| grid.in_bulk(j, 0.25)).collect();
        let stride = bulk.len().div_ceil(256).max(1);
        let factor = t.powf(-1.0 / (2.0 * s));
        let mut worst = 0.0f64;
        for &j in bulk.iter().step_by(stride) {
            let x = grid.coordinate(j);
            let rhs = factor * unit.whole_line_value_at(factor * x)?;
            worst = worst.max(((whole[j] - rhs) / rhs).abs());
        }
        worst
    };
    report.push(Check::at_most("scaling_max_rel_deviation", deviation, 1e-6));
    Ok(report)
}

/// Semigroup law `p(t) * p(tau) = p(t + tau)` on `grid`.
pub fn check_chapman_kolmogorov(
    grid: &UniformGrid,
    kind: KernelKind,
    s: f64,
    t: f64,
    tau: f64,
) -> Result<Report> {
    let a = kernel(grid, kind, t, s)?;
    let b = kernel(grid, kind, tau, s)?;
    let c = kernel(grid, kind, t + tau, s)?;
    let product = a.convolve(&b)?;
    let sup = product
        .iter()
        .zip(c.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let mut report = Report::new();
    report.push(Check::at_most("ck_sup_error", sup, 1e-7));
    report.push(Check::info("ck_relative_error", sup / c.peak()));
    Ok(report)
}

fn bulk_points(grid: &UniformGrid, fraction: f64) -> Vec<usize> {
    (0..grid.len()).filter(|&j| grid.in_bulk(j, fraction)).collect()
}

/// Tail window `{|x| > M t^{1/2s}} ∩ bulk`, sorted by radius.
fn tail_window(table: &KernelTable, spec: &KernelBoundSpec) -> Result<Vec<usize>> {
    let grid = table.grid();
    let onset = spec.m * table.t().powf(1.0 / (2.0 * table.s()));
    let mut points: Vec<usize> = bulk_points(grid, spec.bulk_fraction)
        .into_iter()
        .filter(|&j| grid.radius(j) > onset)
        .collect();
    if points.len() < 3 {
        return Err(Error::EmptyWindow(format!(
            "tail window |x| > {onset} is empty inside {} L; enlarge the domain",
            spec.bulk_fraction
        )));
    }
    points.sort_by(|&a, &b| grid.radius(a).total_cmp(&grid.radius(b)));
    Ok(points)
}

/// Fitted fractional constant `B`, the tail ratio `rho = H |x|^{N+2s} / t`,
/// and the Harnack constant `C` with per-region counts.
pub fn check_two_sided_bounds(table: &KernelTable, spec: &KernelBoundSpec) -> Result<Report> {
    let grid = *table.grid();
    let dim = grid.dim();
    let n = dim as f64;
    let (t, s) = (table.t(), table.s());
    let values = best_values(table);
    let mut report = Report::new();
    match table.kind() {
        KernelKind::Gaussian => {
            return Err(Error::Precondition("two-sided bounds concern the fractional and mixed kernels".into()))
        }
        KernelKind::Fractional => {
            let scale = t.powf(-1.0 / (2.0 * s));
            let mut b = 1.0f64;
            for j in bulk_points(&grid, spec.bulk_fraction) {
                let g = scale.powf(n) / (1.0 + (scale * grid.radius(j)).powf(n + 2.0 * s));
                let p = values[j];
                b = b.max(if p > 0.0 { (p / g).max(g / p) } else { f64::INFINITY });
            }
            report.push(Check::info("fitted_b", b));
            report.push(Check::at_least("fitted_b_is_finite_and_at_least_one", if b.is_finite() { b } else { 0.0 }, spec.b));
        }
        KernelKind::Mixed => {
            if t >= 1.0 {
                let window = tail_window(table, spec)?;
                let rho: Vec<f64> = window
                    .iter()
                    .map(|&j| values[j] * grid.radius(j).powf(n + 2.0 * s) / t)
                    .collect();
                let lo = rho.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let limit = *rho.last().expect("window nonempty");
                let c_ns = fractional_tail_constant(dim, s);
                report.push(Check::info("tail_rho_min", lo));
                report.push(Check::info("tail_rho_max", hi));
                report.push(Check::at_most("tail_rho_constancy", hi / lo, spec.tail_constancy));
                report.push(Check::info("tail_rho_limit", limit));
                report.push(Check::info("tail_rho_over_alpha", limit / spec.alpha));
                report.push(Check::info(
                    "tail_rho_in_alpha_band",
                    f64::from(u8::from(limit > 0.5 * spec.alpha && limit < 2.0 * spec.alpha)),
                ));
                report.push(Check::info("tail_rho_over_c_ns", limit / c_ns));
            }
            let companion = fractional_kernel(&grid, t, s)?;
            let frac = best_values(&companion);
            let mut counts = [0usize; 4];
            let mut c = 1.0f64;
            for j in bulk_points(&grid, spec.bulk_fraction) {
                let r = grid.radius(j);
                let region = HarnackRegion::classify(t, r, s);
                counts[region as usize] += 1;
                let (q1, q2) = region.comparison(dim, t, r, frac[j]);
                let h = values[j];
                if h > 0.0 && q1 > 0.0 && q2 > 0.0 {
                    c = c.max(q1 / h).max(h / q2);
                } else {
                    c = f64::INFINITY;
                }
            }
            for region in HarnackRegion::ALL {
                report.push(Check::info(
                    format!("harnack_points_{}", region.name()),
                    counts[region as usize] as f64,
                ));
            }
            report.push(Check::info("harnack_c", c));
            report.push(Check::at_least("harnack_c_is_finite", if c.is_finite() { 1.0 } else { 0.0 }, 1.0));
        }
    }
    Ok(report)
}

/// Log-log tail statistics on `r_min <= |x| <= r_max` for a 1D table: the
/// slope, the tail coefficient against the quadrature oracle at `r_max`, and
/// the two closed-form coefficients for the record.
pub fn tail_report(table: &KernelTable, r_min: f64, r_max: f64) -> Result<Report> {
    let grid = *table.grid();
    if grid.dim() != 1 {
        return Err(Error::Precondition("tail report is 1D only".into()));
    }
    if r_max > grid.half_width() {
        return Err(Error::EmptyWindow(format!("r_max = {r_max} exceeds the half width")));
    }
    let (t, s) = (table.t(), table.s());
    let values = best_values(table);
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    let mut outer = None;
    for j in grid.origin_index()..grid.points_per_axis() {
        let x = grid.coordinate(j);
        if x >= r_min && x <= r_max * (1.0 + 1e-12) {
            lx.push(x.ln());
            ly.push(values[j].ln());
            outer = Some(j);
        }
    }
    let outer = outer.ok_or_else(|| Error::EmptyWindow(format!("no lattice points in [{r_min}, {r_max}]")))?;
    let fit = linear_fit(&lx, &ly)?;
    let power = 1.0 + 2.0 * s;
    let expected = -power;
    let x = grid.coordinate(outer);
    let rho_table = values[outer] * x.powf(power) / t;
    let rho_oracle = kernel_by_quadrature(t, x, s, table.kind())? * x.powf(power) / t;
    let mut report = Report::new();
    report.push(Check::info("tail_slope", fit.slope));
    report.push(Check::at_most("tail_slope_rel_error", ((fit.slope - expected) / expected).abs(), 0.02));
    report.push(Check::info("tail_coefficient", rho_table));
    report.push(Check::info("tail_coefficient_oracle", rho_oracle));
    report.push(Check::at_most(
        "tail_coefficient_vs_oracle",
        ((rho_table - rho_oracle) / rho_oracle).abs(),
        0.05,
    ));
    report.push(Check::info("tail_coefficient_over_alpha", rho_table / tail_alpha(1, s)));
    report.push(Check::info("tail_coefficient_over_c_ns", rho_table / fractional_tail_constant(1, s)));
    Ok(report)
}

/// Fits `sup_x p(t, x) ~ t^{e}` over `times` (all `>= 1`) and checks that
/// `e` is within 5% of `-N/(2s)` and that the supremum never increases.
pub fn fit_sup_decay(grid: &UniformGrid, kind: KernelKind, s: f64, times: &[f64]) -> Result<Report> {
    if times.len() < 3 {
        return Err(Error::EmptyWindow("decay fit needs at least three times".into()));
    }
    let mut sups = Vec::with_capacity(times.len());
    for &t in times {
        let table = kernel(grid, kind, t, s)?;
        sups.push(table.values().iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = sups.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    let expected = -(grid.dim() as f64) / (2.0 * s);
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let increases = order
        .windows(2)
        .filter(|w| sups[w[1]] > sups[w[0]] * (1.0 + 1e-12))
        .count();
    let mut report = Report::new();
    report.push(Check::info("sup_decay_exponent", fit.slope));
    report.push(Check::at_most("sup_decay_rel_error", ((fit.slope - expected) / expected).abs(), 0.05));
    report.push(Check::at_most("sup_increases", increases as f64, 0.0));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_constants() {
        assert!((tail_alpha(1, 0.5) - 2.0).abs() < 1e-12);
        assert!((fractional_tail_constant(1, 0.5) - 1.0 / PI).abs() < 1e-14);
        // N = 2, s = 1/2: C = Gamma(3/2) / pi^{3/2} = 1 / (2 pi)
        assert!((fractional_tail_constant(2, 0.5) - 1.0 / (2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn region_order() {
        let s = 0.5;
        assert_eq!(HarnackRegion::classify(2.0, 0.1, s), HarnackRegion::Fractional);
        assert_eq!(HarnackRegion::classify(0.5, 3.0, s), HarnackRegion::Fractional);
        assert_eq!(HarnackRegion::classify(0.1, 0.2, s), HarnackRegion::GaussianCore);
        assert_eq!(HarnackRegion::classify(0.1, 0.9, s), HarnackRegion::Crossover);
        assert_eq!(HarnackRegion::classify(0.5, 0.0, s), HarnackRegion::ShortTime);
    }

    #[test]
    fn scaling_rejects_other_kinds() {
        let g = UniformGrid::new(1, 64, 8.0).unwrap();
        let table = kernel(&g, KernelKind::Mixed, 1.0, 0.5).unwrap();
        assert!(check_scaling(&table).is_err());
        let unit = fractional_kernel(&g, 1.0, 0.5).unwrap();
        assert_eq!(check_scaling(&unit).unwrap().stat("scaling_max_rel_deviation"), 0.0);
    }

    #[test]
    fn tail_window_requires_room() {
        let g = UniformGrid::new(1, 64, 8.0).unwrap();
        let table = kernel(&g, KernelKind::Mixed, 4.0, 0.5).unwrap();
        let spec = KernelBoundSpec::new(1, 0.5);
        assert!(matches!(check_two_sided_bounds(&table, &spec), Err(Error::EmptyWindow(_))));
    }
}
