//! Periodic image sums `sum_{m != 0} p(t, x + 2Lm)` for 1D kernels.
//!
//! Far from the origin the fractional kernel has the expansion
//!
//! ```text
//! p(t, y) ~ sum_{j>=1} A_j t^j |y|^{-1-2sj},
//! A_j = (-1)^{j+1} Gamma(2sj + 1) sin(pi s j) / (pi j!)
//! ```
//!
//! and Gaussian smoothing maps `|y|^{-q}` to
//! `sum_k t^k / k! (q)_{2k} |y|^{-q-2k}`. Summing each power over the image
//! lattice gives two Hurwitz zeta values, so the whole correction costs a few
//! dozen special-function calls per point.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use super::{gaussian_density, KernelKind};
use crate::error::{Error, Result};

/// `B_{2j} / (2j)!` for `j = 1..=10`.
const BERNOULLI_OVER_FACTORIAL: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
];

/// Hurwitz zeta `sum_{k>=0} (k + a)^{-q}` for `q > 1`, `a > 0`, by
/// Euler-Maclaurin after twelve explicit terms.
pub fn hurwitz_zeta(q: f64, a: f64) -> f64 {
    assert!(q > 1.0 && a > 0.0, "hurwitz_zeta needs q > 1 and a > 0");
    const HEAD: usize = 12;
    let mut sum = 0.0;
    for k in (0..HEAD).rev() {
        sum += (k as f64 + a).powf(-q);
    }
    let b = HEAD as f64 + a;
    let bq = b.powf(-q);
    sum += b * bq / (q - 1.0) + 0.5 * bq;
    // rising (q)_{2j-1} b^{-q-2j+1}
    let mut rising = q;
    let mut power = bq / b;
    for (j, c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let term = c * rising * power;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let m = 2.0 * (j as f64 + 1.0);
        rising *= (q + m - 1.0) * (q + m);
        power /= b * b;
    }
    sum
}

/// `sum_{m>=1} (2Lm + x)^{-q} + (2Lm - x)^{-q}` for `|x| < 2L`.
fn lattice_power_sum(q: f64, x: f64, half_width: f64) -> f64 {
    let period = 2.0 * half_width;
    let u = x / period;
    period.powf(-q) * (hurwitz_zeta(q, 1.0 + u) + hurwitz_zeta(q, 1.0 - u))
}

/// `ln Gamma(2sj + 1) - ln j!`, the size of the `j`-th far-field coefficient.
fn ln_coefficient(s: f64, j: usize) -> f64 {
    ln_gamma(2.0 * s * j as f64 + 1.0) - ln_gamma(j as f64 + 1.0)
}

/// Smallest retained term relative to the sum; beyond this the asymptotic
/// series is not trusted.
const SERIES_ACCEPT: f64 = 1e-10;
const SERIES_STOP: f64 = 1e-17;
const MAX_TERMS: usize = 80;

/// Gaussian smoothing of the lattice sum of `|y|^{-q}`.
fn smoothed_power_sum(q: f64, t: f64, x: f64, half_width: f64) -> Result<f64> {
    let mut sum = 0.0f64;
    let mut coef = 1.0; // t^k / k! (q)_{2k}
    let mut last = f64::INFINITY;
    for k in 0..MAX_TERMS {
        let term = coef * lattice_power_sum(q + 2.0 * k as f64, x, half_width);
        let size = term.abs();
        if size > last {
            return if last <= SERIES_ACCEPT * sum.abs() {
                Ok(sum)
            } else {
                Err(series_failure())
            };
        }
        sum += term;
        if size <= SERIES_STOP * sum.abs() || size == 0.0 {
            return Ok(sum);
        }
        last = size;
        let kf = k as f64;
        coef *= t * (q + 2.0 * kf) * (q + 2.0 * kf + 1.0) / (kf + 1.0);
    }
    Err(series_failure())
}

fn series_failure() -> Error {
    Error::Precondition(
        "far-field series for the image sum does not converge; enlarge the domain".into(),
    )
}

/// Sum over the periodic images `m != 0` of the whole-line kernel of `kind`
/// at `(t, x)` on a period-`2L` lattice, `|x| <= L`.
pub fn image_sum(kind: KernelKind, s: f64, t: f64, x: f64, half_width: f64) -> Result<f64> {
    if x.abs() > half_width * (1.0 + 1e-12) {
        return Err(Error::param("x", format!("|x| = {} exceeds L = {half_width}", x.abs())));
    }
    let period = 2.0 * half_width;
    if kind == KernelKind::Gaussian {
        let mut sum = 0.0;
        for m in 1..64 {
            let shift = period * m as f64;
            let term = gaussian_density(1, t, x + shift) + gaussian_density(1, t, x - shift);
            sum += term;
            if term == 0.0 || term < 1e-18 * sum {
                break;
            }
        }
        return Ok(sum);
    }
    let mut sum = 0.0f64;
    let mut last = f64::INFINITY;
    for j in 1..MAX_TERMS {
        let q = 1.0 + 2.0 * s * j as f64;
        let magnitude = (ln_coefficient(s, j) + j as f64 * t.ln()).exp() / PI;
        let lattice = match kind {
            KernelKind::Fractional => lattice_power_sum(q, x, half_width),
            _ => smoothed_power_sum(q, t, x, half_width)?,
        };
        let size = magnitude * lattice.abs();
        if size > last {
            return if last <= SERIES_ACCEPT * sum.abs() {
                Ok(sum)
            } else {
                Err(series_failure())
            };
        }
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * (PI * s * j as f64).sin() * magnitude * lattice;
        if size <= SERIES_STOP * sum.abs() || size == 0.0 {
            return Ok(sum);
        }
        last = size;
    }
    Err(series_failure())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_special_values() {
        assert!((hurwitz_zeta(2.0, 1.0) - PI * PI / 6.0).abs() < 1e-15);
        assert!((hurwitz_zeta(4.0, 1.0) - PI.powi(4) / 90.0).abs() < 1e-15);
        // zeta(2, 1/2) = pi^2 / 2
        assert!((hurwitz_zeta(2.0, 0.5) - PI * PI / 2.0).abs() < 1e-14);
        // recurrence zeta(q, a) = a^{-q} + zeta(q, a + 1)
        let (q, a) = (1.37, 0.61);
        let lhs = hurwitz_zeta(q, a);
        let rhs = a.powf(-q) + hurwitz_zeta(q, a + 1.0);
        assert!((lhs - rhs).abs() < 1e-14 * lhs);
    }

    #[test]
    fn lattice_sum_against_brute_force() {
        let (q, x, l) = (1.5, 3.0, 10.0);
        let mut brute = 0.0;
        for m in (1..2_000_000).rev() {
            let shift = 2.0 * l * m as f64;
            brute += (shift + x).powf(-q) + (shift - x).powf(-q);
        }
        // tail beyond M: ~ 2 (2L)^{-q} M^{1-q} / (q - 1)
        brute += 2.0 * (2.0 * l).powf(-q) * 2.0e6f64.powf(1.0 - q) / (q - 1.0);
        let fast = lattice_power_sum(q, x, l);
        assert!((fast - brute).abs() < 1e-9 * fast, "{fast} vs {brute}");
    }

    #[test]
    fn poisson_images_match_closed_form() {
        // periodized Poisson kernel: sinh(a) / (2L (cosh(a) - cos(pi x / L))), a = pi t / L
        let (t, l) = (1.5, 20.0);
        for x in [0.0, 3.0, -11.0, 19.5] {
            let a = PI * t / l;
            let periodic = a.sinh() / (2.0 * l * (a.cosh() - (PI * x / l).cos()));
            let whole = t / (PI * (t * t + x * x));
            let images = image_sum(KernelKind::Fractional, 0.5, t, x, l).unwrap();
            assert!((periodic - whole - images).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn small_domain_is_rejected() {
        assert!(image_sum(KernelKind::Fractional, 0.25, 10.0, 0.0, 2.0).is_err());
    }
}
