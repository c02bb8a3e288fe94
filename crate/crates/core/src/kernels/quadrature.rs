//! Independent evaluation of kernels by quadrature of their Fourier integral.
//!
//! In 1D the kernel is `(1/pi) int_0^inf cos(x xi) e^{-t m(xi)} dxi`. The
//! integral is truncated at `Xi` where a closed-form bound on the neglected
//! tail falls below a tenth of the absolute tolerance, split into half-period
//! panels of width `pi/|x|`, and refined by adaptive 21-point Gauss-Kronrod
//! with a global error queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, gamma_ur};

use super::KernelKind;
use crate::error::{Error, Result};
use crate::grid::SymbolSpec;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077632297337058,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

/// Gauss weights paired with `XGK[1], XGK[3], ..., XGK[9]`.
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of subintervals, panels included.
    pub budget: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            budget: 400_000,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Rounding floor: refinement stops once the estimate reaches it.
    floor: f64,
}

impl Segment {
    fn refinable(&self) -> bool {
        self.error > self.floor
    }
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        // Finished segments sink to the bottom of the heap.
        (self.refinable(), self.error)
            .partial_cmp(&(other.refinable(), other.error))
            .unwrap_or(Ordering::Equal)
    }
}

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut abs = WGK[10] * fc.abs();
    let mut values = [(0.0, 0.0); 10];
    for i in 0..10 {
        let dx = half * XGK[i];
        let (f1, f2) = (f(center - dx), f(center + dx));
        values[i] = (f1, f2);
        kron += WGK[i] * (f1 + f2);
        abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[10] * (fc - mean).abs();
    for i in 0..10 {
        asc += WGK[i] * ((values[i].0 - mean).abs() + (values[i].1 - mean).abs());
    }
    let value = kron * half;
    let abs = abs * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kron - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs;
    Segment {
        a,
        b,
        value,
        error: error.max(floor),
        floor,
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Globally adaptive integration over consecutive panels `edges`.
fn integrate_panels(f: &impl Fn(f64) -> f64, edges: &[f64], opts: &QuadratureOptions) -> Result<f64> {
    if edges.len() > opts.budget {
        return Err(Error::QuadratureBudget {
            tol: opts.abs_tol,
            budget: opts.budget,
            estimate: f64::INFINITY,
        });
    }
    let mut heap: BinaryHeap<Segment> = edges.windows(2).map(|w| kronrod(f, w[0], w[1])).collect();
    loop {
        let total = compensated_sum(heap.iter().map(|s| s.value));
        let error: f64 = heap.iter().map(|s| s.error).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if error <= tol {
            return Ok(total);
        }
        let exhausted = heap.peek().is_none_or(|s| !s.refinable());
        if exhausted || heap.len() >= opts.budget {
            return Err(Error::QuadratureBudget {
                tol,
                budget: opts.budget,
                estimate: error,
            });
        }
        // Bisect a batch of the worst segments before re-summing.
        let batch = (heap.len() / 8).clamp(1, 256);
        for _ in 0..batch {
            match heap.peek() {
                Some(top) if top.refinable() => {}
                _ => break,
            }
            let worst = heap.pop().expect("peeked");
            let mid = 0.5 * (worst.a + worst.b);
            heap.push(kronrod(f, worst.a, mid));
            heap.push(kronrod(f, mid, worst.b));
        }
    }
}

/// Smallest `Xi` (to bisection accuracy) with `bound(Xi) <= target`.
fn truncation_point(bound: impl Fn(f64) -> f64, target: f64) -> f64 {
    let mut hi = 1.0;
    while bound(hi) > target {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Upper incomplete gamma `Gamma(a, x)`.
fn upper_gamma(a: f64, x: f64) -> f64 {
    gamma_ur(a, x) * gamma(a)
}

fn symbol_for(kind: KernelKind, s: f64) -> Result<SymbolSpec> {
    if kind != KernelKind::Gaussian && !(s > 0.0 && s < 1.0) {
        return Err(Error::param("s", format!("must lie in (0, 1), got {s}")));
    }
    kind.symbol(s)
}

/// `int_Xi^inf xi^{power} e^{-t m(xi)} dxi` bounded above, `power` in {0, 1}.
pub(super) fn tail_bound(kind: KernelKind, s: f64, t: f64, power: i32, xi: f64) -> f64 {
    let gaussian = || match power {
        0 => 0.5 * (PI / t).sqrt() * erfc(t.sqrt() * xi),
        _ => (-t * xi * xi).exp() / (2.0 * t),
    };
    let fractional = || {
        let a = (power as f64 + 1.0) / (2.0 * s);
        a / (power as f64 + 1.0) * t.powf(-a) * upper_gamma(a, t * xi.powf(2.0 * s))
    };
    match kind {
        KernelKind::Gaussian => gaussian(),
        KernelKind::Fractional => fractional(),
        KernelKind::Mixed => gaussian().min(fractional()),
    }
}

fn panel_edges(upper: f64, frequency: f64, budget: usize) -> Result<Vec<f64>> {
    let mut count = if frequency > 0.0 {
        (upper * frequency / PI).ceil() as usize
    } else {
        0
    };
    count = count.max(16);
    if count >= budget {
        return Err(Error::QuadratureBudget {
            tol: f64::NAN,
            budget,
            estimate: f64::INFINITY,
        });
    }
    Ok((0..=count).map(|i| upper * i as f64 / count as f64).collect())
}

/// 1D kernel value at `(t, x)` with default tolerances.
pub fn kernel_by_quadrature(t: f64, x: f64, s: f64, kind: KernelKind) -> Result<f64> {
    kernel_by_quadrature_with(t, x, s, kind, &QuadratureOptions::default())
}

pub fn kernel_by_quadrature_with(
    t: f64,
    x: f64,
    s: f64,
    kind: KernelKind,
    opts: &QuadratureOptions,
) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("kernel time must be positive, got {t}")));
    }
    let spec = symbol_for(kind, s)?;
    let target = 0.1 * opts.abs_tol * PI;
    let upper = truncation_point(|xi| tail_bound(kind, s, t, 0, xi), target);
    let edges = panel_edges(upper, x.abs(), opts.budget)?;
    let f = |xi: f64| (x * xi).cos() * (-t * spec.eval(xi)).exp();
    let scaled = QuadratureOptions {
        abs_tol: opts.abs_tol * PI,
        ..*opts
    };
    Ok(integrate_panels(&f, &edges, &scaled)? / PI)
}

/// Bessel `J0`: power series for `z <= 12`, Hankel expansion beyond.
fn bessel_j0(z: f64) -> f64 {
    let z = z.abs();
    if z <= 12.0 {
        j0_series(z)
    } else {
        j0_hankel(z)
    }
}

fn j0_series(z: f64) -> f64 {
    {
        let q = -0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / (k as f64 * k as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    }
}

fn j0_hankel(z: f64) -> f64 {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut c = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60usize {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            c *= -odd * odd / (k as f64 * 8.0 * z);
        }
        if c.abs() > last {
            break;
        }
        last = c.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * c;
        } else {
            q += sign * c;
        }
        if c.abs() < 1e-17 {
            break;
        }
    }
    let phase = z - 0.25 * PI;
    (2.0 / (PI * z)).sqrt() * (p * phase.cos() - q * phase.sin())
}

/// Experimental 2D oracle for radial kernels:
/// `(1/2pi) int_0^inf J0(r rho) e^{-t m(rho)} rho drho`.
pub fn radial_kernel_by_quadrature(t: f64, r: f64, s: f64, kind: KernelKind) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("kernel time must be positive, got {t}")));
    }
    let opts = QuadratureOptions::default();
    let spec = symbol_for(kind, s)?;
    let norm = 2.0 * PI;
    let upper = truncation_point(|xi| tail_bound(kind, s, t, 1, xi), 0.1 * opts.abs_tol * norm);
    let edges = panel_edges(upper, r, opts.budget)?;
    let f = |rho: f64| bessel_j0(r * rho) * (-t * spec.eval(rho)).exp() * rho;
    let scaled = QuadratureOptions {
        abs_tol: opts.abs_tol * norm,
        ..opts
    };
    Ok(integrate_panels(&f, &edges, &scaled)? / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{gaussian_density, poisson_kernel};

    #[test]
    fn poisson_values() {
        for (t, x) in [(1.0, 0.0), (2.0, 2.0), (0.5, 7.3), (1.0, 128.0)] {
            let q = kernel_by_quadrature(t, x, 0.5, KernelKind::Fractional).unwrap();
            let exact = poisson_kernel(t, x);
            assert!((q - exact).abs() < 1e-12, "t={t} x={x}: {q} vs {exact}");
            assert!((q - exact).abs() < 1e-8 * exact);
        }
    }

    #[test]
    fn gaussian_values() {
        for (t, x) in [(1.0, 0.0), (0.3, 1.0), (4.0, 5.0)] {
            let q = kernel_by_quadrature(t, x, 0.5, KernelKind::Gaussian).unwrap();
            assert!((q - gaussian_density(1, t, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_at_order_half_has_closed_form_peak() {
        // (1/pi) int_0^inf e^{-t(xi + xi^2)} dxi = sqrt(1/4 pi t) e^{t/4} erfc(sqrt(t)/2) / sqrt(pi),
        // evaluated at t = 1.3 to 16 digits with an independent erfc
        let q = kernel_by_quadrature(1.3, 0.0, 0.5, KernelKind::Mixed).unwrap();
        assert!((q - 0.143_858_288_044_868_6).abs() < 1e-13, "{q}");
    }

    #[test]
    fn budget_errors_surface() {
        let opts = QuadratureOptions {
            budget: 20,
            ..Default::default()
        };
        let r = kernel_by_quadrature_with(1.0, 500.0, 0.5, KernelKind::Fractional, &opts);
        assert!(matches!(r, Err(Error::QuadratureBudget { .. })));
    }

    #[test]
    fn bessel_branches_agree() {
        // J0 zeros and a value on either side of the branch switch
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-13);
        assert!(bessel_j0(14.930_917_708_487_79).abs() < 1e-11);
        for z in [12.0, 13.5] {
            assert!((j0_series(z) - j0_hankel(z)).abs() < 1e-10);
        }
    }

    #[test]
    fn two_dim_gaussian_by_hankel() {
        for (t, r) in [(1.0, 0.0), (0.5, 1.5), (2.0, 3.0)] {
            let q = radial_kernel_by_quadrature(t, r, 0.5, KernelKind::Gaussian).unwrap();
            assert!((q - gaussian_density(2, t, r)).abs() < 1e-10, "{q}");
        }
        // 2D Poisson kernel t / (2 pi (t^2 + r^2)^{3/2})
        let (t, r) = (1.0, 2.0);
        let q = radial_kernel_by_quadrature(t, r, 0.5, KernelKind::Fractional).unwrap();
        let exact = t / (2.0 * PI * (t * t + r * r).powf(1.5));
        assert!((q - exact).abs() < 1e-9, "{q} vs {exact}");
    }
}
