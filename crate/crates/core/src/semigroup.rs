//! The linear propagator `T_t = e^{-tL}`, the weighted sup-norms of `X_gamma`,
//! growth estimates on probe families, barrier pushes and the discrete
//! maximum principle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{apply_multiplier, Field, Multiplier, SpectralPlan, SymbolSpec, UniformGrid};
use crate::kernels::KernelTable;
use crate::report::{Check, Report};

/// `T_t u0` by the multiplier route.
pub fn propagate(u0: &Field, spec: &SymbolSpec, t: f64) -> Result<Field> {
    apply_multiplier(u0, spec, t)
}

/// Largest lattice for which [`propagate_by_convolution`] sums directly.
const DIRECT_LIMIT: usize = 8192;

/// `T_t u0` as the kernel table convolved with `u0`: a direct lattice sum on
/// small grids, FFT convolution beyond [`DIRECT_LIMIT`] points.
pub fn propagate_by_convolution(u0: &Field, table: &KernelTable) -> Result<Field> {
    let grid = *u0.grid();
    if &grid != table.grid() {
        return Err(Error::GridMismatch);
    }
    let u = u0.try_values()?;
    let k = table.values();
    if grid.len() > DIRECT_LIMIT {
        return Field::physical(grid, SpectralPlan::new(&grid).convolve(k, u));
    }
    let n = grid.points_per_axis();
    let w = grid.cell_volume();
    let wrap = |j: usize, i: usize| (j + n + n / 2 - i) % n;
    let out = match grid.dim() {
        1 => (0..n)
            .map(|j| w * (0..n).map(|i| u[i] * k[wrap(j, i)]).sum::<f64>())
            .collect(),
        _ => {
            let mut out = vec![0.0; grid.len()];
            for j1 in 0..n {
                for j2 in 0..n {
                    let mut acc = 0.0;
                    for i1 in 0..n {
                        let row = wrap(j1, i1) * n;
                        for i2 in 0..n {
                            acc += u[i1 * n + i2] * k[row + wrap(j2, i2)];
                        }
                    }
                    out[j1 * n + j2] = w * acc;
                }
            }
            out
        }
    };
    Field::physical(grid, out)
}

/// The norm `sup |u| / (1 + |x|^gamma)` of `X_gamma`, `0 <= gamma < 2s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    gamma: f64,
    s: f64,
}

impl WeightedNorm {
    pub fn new(gamma: f64, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::param("s", format!("must lie in (0, 1), got {s}")));
        }
        if !(gamma >= 0.0) {
            return Err(Error::param("gamma", format!("must be >= 0, got {gamma}")));
        }
        if gamma >= 2.0 * s {
            return Err(Error::param("gamma", format!("gamma must be < 2s (gamma = {gamma}, 2s = {})", 2.0 * s)));
        }
        Ok(Self { gamma, s })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn weight(&self, r: f64) -> f64 {
        1.0 + self.power(r)
    }

    /// `|x|^gamma`, with `0^0 = 1`.
    pub fn power(&self, r: f64) -> f64 {
        if self.gamma == 0.0 {
            1.0
        } else {
            r.powf(self.gamma)
        }
    }

    /// `w_gamma(x) = |x|^gamma` sampled on `grid`.
    pub fn sample_weight(&self, grid: &UniformGrid) -> Field {
        grid.sample_radial(|r| self.power(r))
    }
}

pub fn xgamma_norm(u: &Field, w: &WeightedNorm) -> f64 {
    let grid = u.grid();
    u.values()
        .iter()
        .enumerate()
        .fold(0.0f64, |m, (idx, v)| m.max(v.abs() / w.weight(grid.radius(idx))))
}

/// The documented probe family for operator-norm estimates: the constant 1,
/// `w_gamma`, the indicator of the unit ball, the indicator of `|x| <= L/8`,
/// and four seeded uniform random fields in `[-1, 1]`.
pub fn probe_family(grid: &UniformGrid, w: &WeightedNorm, seed: u64) -> Vec<(String, Field)> {
    let l = grid.half_width();
    let mut probes = vec![
        ("constant".to_string(), Field::constant(*grid, 1.0)),
        ("weight".to_string(), w.sample_weight(grid)),
        ("unit_ball".to_string(), grid.sample_radial(|r| if r <= 1.0 { 1.0 } else { 0.0 })),
        ("wide_ball".to_string(), grid.sample_radial(|r| if r <= l / 8.0 { 1.0 } else { 0.0 })),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..4 {
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        probes.push((format!("random_{i}"), Field::physical(*grid, values).expect("sized")));
    }
    probes
}

/// `max_probe ||T_t u|| / ||u||` in `X_gamma`.
fn operator_ratio(probes: &[(String, Field)], spec: &SymbolSpec, w: &WeightedNorm, t: f64) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::Precondition("empty probe family".into()));
    }
    let mut worst = 0.0f64;
    for (_, u) in probes {
        let norm = xgamma_norm(u, w);
        if norm > 0.0 {
            worst = worst.max(xgamma_norm(&propagate(u, spec, t)?, w) / norm);
        }
    }
    Ok(worst)
}

/// Estimates `||T_t||` on `X_gamma` over the probe family and fits
/// `C_gamma(t) = ratio / (1 + t^{gamma/2} + t^{gamma/2s})`.
pub fn check_semigroup_growth(
    grid: &UniformGrid,
    spec: &SymbolSpec,
    w: &WeightedNorm,
    times: &[f64],
    seed: u64,
) -> Result<Report> {
    if times.is_empty() || times.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::param("times", "need a nonempty list of nonnegative times"));
    }
    let probes = probe_family(grid, w, seed);
    let g = w.gamma();
    let mut report = Report::new();
    let mut constants = Vec::with_capacity(times.len());
    for &t in times {
        let ratio = operator_ratio(&probes, spec, w, t)?;
        let envelope = 1.0 + t.powf(g / 2.0) + t.powf(g / (2.0 * w.s()));
        report.push(Check::info(format!("ratio_t{t}"), ratio));
        if g == 0.0 {
            report.push(Check::at_most(format!("contraction_t{t}"), ratio, 1.0 + 1e-10));
        }
        if t > 0.0 {
            constants.push(ratio / envelope);
        }
    }
    if !constants.is_empty() {
        let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = constants.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        report.push(Check::info("fitted_c_gamma", hi));
        report.push(Check::at_least("c_gamma_positive_finite", if hi.is_finite() { lo } else { 0.0 }, f64::MIN_POSITIVE));
        report.push(Check::at_most("c_gamma_spread", hi / lo, 2.0));
    }
    Ok(report)
}

/// `||T_t u - u||_{X_gamma}` at each time; passes if it decreases as `t` does.
pub fn check_strong_continuity(u: &Field, spec: &SymbolSpec, w: &WeightedNorm, times: &[f64]) -> Result<Report> {
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut report = Report::new();
    let mut previous = f64::INFINITY;
    let mut violations = 0usize;
    for &t in &sorted {
        let moved = propagate(u, spec, t)?;
        let diff = Field::physical(
            *u.grid(),
            moved.values().iter().zip(u.values()).map(|(a, b)| a - b).collect(),
        )?;
        let d = xgamma_norm(&diff, w);
        report.push(Check::info(format!("distance_t{t}"), d));
        if d >= previous {
            violations += 1;
        }
        previous = d;
    }
    report.push(Check::at_most("continuity_non_monotone_steps", violations as f64, 0.0));
    Ok(report)
}

/// `a0 |x|^{-N-2s}` for `|x| >= r0`, the constant `eps = a0 r0^{-N-2s}` inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawBarrier {
    pub a0: f64,
    pub r0: f64,
    pub s: f64,
    pub dim: usize,
}

impl PowerLawBarrier {
    pub fn new(a0: f64, r0: f64, s: f64, dim: usize) -> Result<Self> {
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(Error::param("a0", format!("must be positive, got {a0}")));
        }
        if !(r0 >= 1.0 && r0.is_finite()) {
            return Err(Error::param("r0", format!("must be >= 1, got {r0}")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::param("s", format!("must lie in (0, 1), got {s}")));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::param("dim", format!("must be 1 or 2, got {dim}")));
        }
        Ok(Self { a0, r0, s, dim })
    }

    pub fn exponent(&self) -> f64 {
        self.dim as f64 + 2.0 * self.s
    }

    pub fn epsilon(&self) -> f64 {
        self.a0 * self.r0.powf(-self.exponent())
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.r0 {
            self.epsilon()
        } else {
            self.a0 * r.powf(-self.exponent())
        }
    }

    pub fn sample(&self, grid: &UniformGrid) -> Field {
        grid.sample_radial(|r| self.value(r))
    }
}

/// Bulk fraction for barrier and weight windows.
const WINDOW_FRACTION: f64 = 0.25;

/// Pushes the barrier by `T_t` and fits the band
/// `c t / (t^{N/2s+1} + 1) <= T_t v0 |x|^{N+2s} / a0 <= C (1 + r0^{-2s} t)`
/// on `{|x| >= r0} ∩ {|x| <= L/4}`.
pub fn push_powerlaw_barrier(
    grid: &UniformGrid,
    b: &PowerLawBarrier,
    spec: &SymbolSpec,
    t: f64,
) -> Result<(Field, Report)> {
    if !(t >= 1.0) {
        return Err(Error::param("t", format!("barrier push needs t >= 1, got {t}")));
    }
    if grid.dim() != b.dim {
        return Err(Error::GridMismatch);
    }
    let v0 = b.sample(grid);
    let pushed = propagate(&v0, spec, t)?;
    let p = b.exponent();
    let mut window: Vec<(f64, f64)> = (0..grid.len())
        .filter(|&j| grid.in_bulk(j, WINDOW_FRACTION) && grid.radius(j) >= b.r0)
        .map(|j| {
            let r = grid.radius(j);
            (r, pushed.values()[j] * r.powf(p) / b.a0)
        })
        .collect();
    if window.len() < 4 {
        return Err(Error::EmptyWindow(format!(
            "no lattice points with r0 <= |x| <= L/4 (r0 = {}, L = {})",
            b.r0,
            grid.half_width()
        )));
    }
    window.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lower_env = t / (t.powf(grid.dim() as f64 / (2.0 * b.s) + 1.0) + 1.0);
    let upper_env = 1.0 + b.r0.powf(-2.0 * b.s) * t;
    let lo = window.iter().map(|w| w.1).fold(f64::INFINITY, f64::min);
    let hi = window.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
    let spread = |part: &[(f64, f64)]| {
        let a = part.iter().map(|w| w.1).fold(f64::INFINITY, f64::min);
        let z = part.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
        z / a
    };
    let mid = window.len() / 2;
    let plateau_sup = (0..grid.len())
        .filter(|&j| grid.radius(j) <= b.r0)
        .map(|j| pushed.values()[j])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut report = Report::new();
    report.push(Check::info("ratio_min", lo));
    report.push(Check::info("ratio_max", hi));
    report.push(Check::at_least("fitted_c", lo / lower_env, f64::MIN_POSITIVE));
    report.push(Check::at_least(
        "fitted_upper_c",
        if (hi / upper_env).is_finite() { hi / upper_env } else { 0.0 },
        f64::MIN_POSITIVE,
    ));
    report.push(Check::info("inner_spread", spread(&window[..mid])));
    report.push(Check::info("outer_spread", spread(&window[mid..])));
    report.push(Check::at_most("plateau_over_epsilon", plateau_sup / b.epsilon(), 1.0 + 1e-12));
    Ok((pushed, report))
}

/// Two-sided estimate for `T_t w_gamma` on the bulk `|x| <= L/4`: the upper
/// constant `sup T_t w / (|x|^gamma + t^{gamma/2s})` and the lower constant
/// `inf_{|x| >= t^{1/2s}} T_t w / |x|^gamma`.
pub fn push_polynomial_weight(grid: &UniformGrid, w: &WeightedNorm, spec: &SymbolSpec, t: f64) -> Result<Report> {
    if !(t >= 1.0) {
        return Err(Error::param("t", format!("weight push needs t >= 1, got {t}")));
    }
    let weight = w.sample_weight(grid);
    let pushed = propagate(&weight, spec, t)?;
    let g = w.gamma();
    let mut report = Report::new();
    if g == 0.0 {
        let defect = pushed.values().iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
        report.push(Check::at_most("constant_defect", defect, 1e-12));
        return Ok(report);
    }
    let onset = t.powf(1.0 / (2.0 * w.s()));
    let mut upper = 0.0f64;
    let mut lower = f64::INFINITY;
    for j in (0..grid.len()).filter(|&j| grid.in_bulk(j, WINDOW_FRACTION)) {
        let r = grid.radius(j);
        let v = pushed.values()[j];
        upper = upper.max(v / (w.power(r) + t.powf(g / (2.0 * w.s()))));
        if r >= onset {
            lower = lower.min(v / w.power(r));
        }
    }
    if !lower.is_finite() {
        return Err(Error::EmptyWindow(format!("no bulk points with |x| >= t^(1/2s) = {onset}")));
    }
    report.push(Check::at_least("fitted_upper_c_gamma", if upper.is_finite() { upper } else { 0.0 }, f64::MIN_POSITIVE));
    report.push(Check::at_least("fitted_lower_c_gamma", lower, f64::MIN_POSITIVE));
    Ok(report)
}

/// Spectral `L u` with `L = [local](-Delta) + [fractional](-Delta)^s`.
pub fn apply_operator(u: &Field, spec: &SymbolSpec) -> Result<Field> {
    let plan = SpectralPlan::new(u.grid());
    let symbol = plan.symbol_values(spec);
    Multiplier::from_factors(plan, symbol)?.apply(u)
}

/// Evaluates `L u` at the lattice argmax of `u` and requires it to be
/// `>= -tol`, `tol = 1e-8 ||L u||_inf` plus a rounding floor of
/// `64 eps ||u||_inf max m` (the size of transform noise after multiplying
/// by the largest symbol value).
pub fn check_discrete_max_principle(u: &Field, spec: &SymbolSpec) -> Result<Report> {
    let values = u.try_values()?;
    let lu = apply_operator(u, spec)?;
    let (argmax, _) = values
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    let plan = SpectralPlan::new(u.grid());
    let max_symbol = plan.symbol_values(spec).into_iter().fold(0.0f64, f64::max);
    let floor = 64.0 * f64::EPSILON * u.sup_norm() * max_symbol;
    let tol = 1e-8 * lu.sup_norm() + floor;
    let at_max = lu.values()[argmax];
    let mut report = Report::new();
    report.push(Check::info("operator_at_argmax", at_max));
    report.push(Check::at_least("max_principle_margin", at_max + tol, 0.0));
    Ok(report)
}

/// A random real trigonometric polynomial with wavenumbers `<= k_max` on the
/// grid's own periodic lattice (band-limited probe).
pub fn band_limited_probe(grid: &UniformGrid, k_max: usize, rng: &mut impl Rng) -> Field {
    let step = grid.frequency_step();
    let modes: Vec<(f64, f64, f64, f64)> = (1..=k_max)
        .flat_map(|k1| (0..=if grid.dim() == 2 { k_max } else { 0 }).map(move |k2| (k1, k2)))
        .map(|(k1, k2)| (k1 as f64 * step, k2 as f64 * step))
        .map(|(a, b)| (a, b, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let offset = rng.gen_range(-1.0..1.0);
    grid.sample(|x| {
        let y = if x.len() > 1 { x[1] } else { 0.0 };
        offset
            + modes
                .iter()
                .map(|(a, b, c, d)| {
                    let phase = a * x[0] + b * y;
                    c * phase.cos() + d * phase.sin()
                })
                .sum::<f64>()
    })
}
