//! Level-set fronts: radius extraction, rate fits, the three-regime spreading
//! comparison and the traveling-wave residual.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{solve_with, ReactionKPP, Scheme, SolverConfig, StepDiagnostics, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{Field, SpectralPlan, SymbolSpec, UniformGrid};
use crate::report::{Check, Report};
use crate::semigroup::{apply_operator, PowerLawBarrier};
use crate::stats::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Classical,
    Fractional,
    Mixed,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Classical, Regime::Fractional, Regime::Mixed];

    pub fn spec(self, s: f64) -> Result<SymbolSpec> {
        match self {
            Regime::Classical => Ok(SymbolSpec::local()),
            Regime::Fractional => SymbolSpec::fractional(s),
            Regime::Mixed => SymbolSpec::mixed(s),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Classical => "classical",
            Regime::Fractional => "fractional",
            Regime::Mixed => "mixed",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::param("regime", format!("unknown regime `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontTrace {
    pub threshold: f64,
    pub regime: Regime,
    pub samples: Vec<(f64, f64)>,
}

impl FrontTrace {
    pub fn new(threshold: f64, regime: Regime) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::param("lambda", format!("must lie in (0, 1), got {threshold}")));
        }
        Ok(Self {
            threshold,
            regime,
            samples: Vec::new(),
        })
    }

    pub fn push(&mut self, t: f64, r: f64) -> Result<()> {
        if let Some(&(last, _)) = self.samples.last() {
            if !(t > last) {
                return Err(Error::param("t", format!("samples must increase in time ({t} after {last})")));
            }
        }
        self.samples.push((t, r));
        Ok(())
    }

    pub fn in_window(&self, window: (f64, f64)) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .copied()
            .filter(|&(t, _)| t >= window.0 - 1e-12 && t <= window.1 + 1e-12)
            .collect()
    }
}

/// Outermost `|x|` with `u >= lambda`. In 1D the crossing is refined by
/// linear interpolation towards the next lattice point outward; in 2D the
/// lattice radius is returned.
pub fn front_radius(grid: &UniformGrid, u: &[f64], lambda: f64) -> Option<f64> {
    let n = grid.points_per_axis();
    if grid.dim() == 2 {
        return (0..grid.len())
            .filter(|&j| u[j] >= lambda)
            .map(|j| grid.radius(j))
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    }
    let right = (0..n).rev().find(|&j| u[j] >= lambda)?;
    let left = (0..n).find(|&j| u[j] >= lambda)?;
    let dx = grid.spacing();
    let refine = |j: usize, outward: Option<usize>, sign: f64| {
        let x = grid.coordinate(j);
        match outward {
            Some(k) if u[j] > u[k] => x + sign * dx * (u[j] - lambda) / (u[j] - u[k]),
            _ => x,
        }
    };
    let r = refine(right, (right + 1 < n).then_some(right + 1), 1.0).abs();
    let l = refine(left, left.checked_sub(1), -1.0).abs();
    Some(r.max(l))
}

/// `R_lambda(t)` for every snapshot; snapshots where `lambda` is not reached
/// are omitted.
pub fn extract_front(traj: &Trajectory, lambda: f64, regime: Regime) -> Result<FrontTrace> {
    let mut trace = FrontTrace::new(lambda, regime)?;
    for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
        if let Some(r) = front_radius(&traj.grid, snap.try_values()?, lambda) {
            trace.push(*t, r)?;
        }
    }
    if trace.samples.is_empty() {
        return Err(Error::EmptyWindow(format!("level {lambda} is never attained")));
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `log R = sigma t + b`
    Exponential,
    /// `R = c t + b`
    Linear,
}

/// Least-squares rate; `r_squared` is measured in the model's own
/// regression variables (`log R` or `R` against `t`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    pub window: (f64, f64),
    pub estimate: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 5;

pub fn fit_rate(trace: &FrontTrace, model: RateModel, window: (f64, f64)) -> Result<RateFit> {
    if !(window.1 > window.0) {
        return Err(Error::param("window", format!("degenerate window {window:?}")));
    }
    let pts = trace.in_window(window);
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::EmptyWindow(format!(
            "{} samples in window {window:?}, need {MIN_FIT_SAMPLES}",
            pts.len()
        )));
    }
    let t: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = match model {
        RateModel::Linear => pts.iter().map(|p| p.1).collect(),
        RateModel::Exponential => {
            if pts.iter().any(|p| !(p.1 > 0.0)) {
                return Err(Error::param("trace", "exponential model needs positive radii"));
            }
            pts.iter().map(|p| p.1.ln()).collect()
        }
    };
    let fit = linear_fit(&t, &y)?;
    Ok(RateFit {
        model,
        window,
        estimate: fit.slope,
        intercept: fit.intercept,
        stderr: fit.slope_stderr,
        r_squared: fit.r_squared.clamp(0.0, 1.0),
        samples: pts.len(),
    })
}

/// Slope of a local linear fit to the samples within `half_span` of `t`.
fn local_speed(samples: &[(f64, f64)], t: f64, half_span: f64) -> Result<f64> {
    let near: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|p| (p.0 - t).abs() <= half_span + 1e-12)
        .collect();
    if near.len() < 3 {
        return Err(Error::EmptyWindow(format!("fewer than 3 samples near t = {t}")));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = near.into_iter().unzip();
    Ok(linear_fit(&x, &y)?.slope)
}

/// Instantaneous front speed at both ends of `window` and their ratio. A
/// constant-speed wave gives a ratio near 1.
pub fn moving_frame_speed(trace: &FrontTrace, window: (f64, f64), half_span: f64) -> Result<Report> {
    let pts = trace.in_window(window);
    if pts.len() < 10 {
        return Err(Error::EmptyWindow(format!("{} samples in window, need 10", pts.len())));
    }
    let (t0, t1) = (pts[0].0, pts[pts.len() - 1].0);
    let v0 = local_speed(&trace.samples, t0, half_span)?;
    let v1 = local_speed(&trace.samples, t1, half_span)?;
    let mut report = Report::new();
    report.push(Check::info("speed_start", v0));
    report.push(Check::info("speed_end", v1));
    report.push(Check::info("speed_ratio", v1 / v0));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `height` on `|x| <= radius`.
    Indicator { radius: f64, height: f64 },
    /// `height (tanh((r + radius)/width) - tanh((r - radius)/width)) / 2`, a
    /// smooth plateau that spectral steps resolve without ringing.
    Plateau { radius: f64, width: f64, height: f64 },
    /// The power-law barrier with decay `|x|^{-N-2s}`.
    Barrier { a0: f64, r0: f64 },
}

impl InitialData {
    pub fn sample(&self, grid: &UniformGrid, s: f64) -> Result<Field> {
        match *self {
            InitialData::Indicator { radius, height } => {
                if !(radius > 0.0 && (0.0..=1.0).contains(&height)) {
                    return Err(Error::param("initial", "indicator needs radius > 0 and height in [0, 1]"));
                }
                Ok(grid.sample_radial(|r| if r <= radius { height } else { 0.0 }))
            }
            InitialData::Plateau { radius, width, height } => {
                if !(radius > 0.0 && width > 0.0 && (0.0..=1.0).contains(&height)) {
                    return Err(Error::param("initial", "plateau needs radius, width > 0 and height in [0, 1]"));
                }
                Ok(grid.sample_radial(|r| {
                    0.5 * height * (((r + radius) / width).tanh() - ((r - radius) / width).tanh())
                }))
            }
            InitialData::Barrier { a0, r0 } => Ok(PowerLawBarrier::new(a0, r0, s, grid.dim())?.sample(grid)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadConfig {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub s: f64,
    pub rate: f64,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub thresholds: Vec<f64>,
    pub fit_window: (f64, f64),
    /// Time between recorded front samples.
    pub sample_every: f64,
    pub initial: InitialData,
    pub boundary_guard: f64,
    /// Accepted relative error of the fitted exponential rate.
    pub rate_tolerance: f64,
}

impl Default for SpreadConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            n: 1 << 21,
            half_width: 16384.0,
            s: 0.5,
            rate: 1.0,
            dt: 0.01,
            t_end: 16.0,
            scheme: Scheme::ExponentialEuler,
            thresholds: vec![0.5, 0.1, 0.9],
            fit_window: (8.0, 16.0),
            sample_every: 0.1,
            initial: InitialData::Plateau {
                radius: 4.0,
                width: 1.0,
                height: 1.0,
            },
            boundary_guard: 0.5,
            rate_tolerance: 0.15,
        }
    }
}

impl SpreadConfig {
    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::new(self.dim, self.n, self.half_width)
    }

    pub fn reaction(&self) -> Result<ReactionKPP> {
        ReactionKPP::logistic(self.rate)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            t_end: self.t_end,
            scheme: self.scheme,
            boundary_guard: self.boundary_guard,
            snapshot_stride: 0,
            ..SolverConfig::default()
        }
    }

    /// `sigma* = f'(0) / (N + 2s)`.
    pub fn critical_rate(&self) -> f64 {
        self.rate / (self.dim as f64 + 2.0 * self.s)
    }

    /// `c* = 2 sqrt(f'(0))`.
    pub fn classical_speed(&self) -> f64 {
        2.0 * self.rate.sqrt()
    }

    /// The primary level: 0.5 when listed, otherwise the first threshold.
    pub fn primary_threshold(&self) -> f64 {
        self.thresholds
            .iter()
            .copied()
            .find(|&l| l == 0.5)
            .or_else(|| self.thresholds.first().copied())
            .unwrap_or(0.5)
    }
}

#[derive(Debug, Clone)]
pub struct SpreadRun {
    pub regime: Regime,
    pub traces: Vec<FrontTrace>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub final_state: Field,
}

impl SpreadRun {
    pub fn trace(&self, lambda: f64) -> Option<&FrontTrace> {
        self.traces.iter().find(|t| t.threshold == lambda)
    }
}

/// One spreading run with fronts sampled every `sample_every` time units.
pub fn run_spread(regime: Regime, cfg: &SpreadConfig) -> Result<SpreadRun> {
    let grid = cfg.grid()?;
    let spec = regime.spec(cfg.s)?;
    let reaction = cfg.reaction()?;
    let u0 = cfg.initial.sample(&grid, cfg.s)?;
    let stride = ((cfg.sample_every / cfg.dt).round() as usize).max(1);
    let mut traces = cfg
        .thresholds
        .iter()
        .map(|&l| FrontTrace::new(l, regime))
        .collect::<Result<Vec<_>>>()?;
    let mut step = 0usize;
    let mut failure = None;
    let traj = solve_with(&u0, &reaction, &spec, &cfg.solver(), |t, values| {
        if step % stride == 0 {
            for trace in traces.iter_mut() {
                if let Some(r) = front_radius(&grid, values, trace.threshold) {
                    if let Err(e) = trace.push(t, r) {
                        failure.get_or_insert(e);
                    }
                }
            }
        }
        step += 1;
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(SpreadRun {
        regime,
        traces,
        final_state: traj.last().clone(),
        diagnostics: traj.diagnostics,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeFits {
    pub regime: Regime,
    pub threshold: f64,
    pub exponential: RateFit,
    pub linear: RateFit,
}

pub fn fit_both(trace: &FrontTrace, window: (f64, f64)) -> Result<RegimeFits> {
    Ok(RegimeFits {
        regime: trace.regime,
        threshold: trace.threshold,
        exponential: fit_rate(trace, RateModel::Exponential, window)?,
        linear: fit_rate(trace, RateModel::Linear, window)?,
    })
}

#[derive(Debug, Clone)]
pub struct RegimeComparison {
    pub runs: Vec<SpreadRun>,
    pub fits: Vec<RegimeFits>,
    pub report: Report,
}

/// Half width of the local fit behind instantaneous speeds.
pub const SPEED_HALF_SPAN: f64 = 0.5;

/// Verdicts for one regime's run, appended to `report`.
pub fn regime_checks(run: &SpreadRun, cfg: &SpreadConfig, report: &mut Report) -> Result<Vec<RegimeFits>> {
    let w = cfg.fit_window;
    let fits = run
        .traces
        .iter()
        .map(|t| fit_both(t, w))
        .collect::<Result<Vec<_>>>()?;
    let lambda = cfg.primary_threshold();
    let primary = fits
        .iter()
        .find(|f| f.threshold == lambda)
        .ok_or_else(|| Error::EmptyWindow(format!("no trace at level {lambda}")))?;
    let name = run.regime.name();
    let edge = crate::dynamics::edge_magnitude(run.final_state.grid(), run.final_state.values());
    report.push(Check::info(format!("{name}_final_edge_magnitude"), edge));
    let speed = moving_frame_speed(run.trace(lambda).expect("primary trace"), w, SPEED_HALF_SPAN)?;
    let ratio = speed.stat("speed_ratio");
    match run.regime {
        Regime::Classical => {
            let c_star = cfg.classical_speed();
            report.push(Check::info("classical_speed", primary.linear.estimate));
            report.push(Check::at_most(
                "classical_speed_rel_error",
                (primary.linear.estimate - c_star).abs() / c_star,
                0.10,
            ));
            report.push(Check::at_least(
                "classical_r2_margin",
                primary.linear.r_squared - primary.exponential.r_squared,
                0.05,
            ));
            report.push(Check::at_least("classical_speed_ratio_low", ratio, 0.8));
            report.push(Check::at_most("classical_speed_ratio_high", ratio, 1.25));
        }
        _ => {
            let sigma_star = cfg.critical_rate();
            let sigmas: Vec<f64> = fits.iter().map(|f| f.exponential.estimate).collect();
            let lo = sigmas.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = sigmas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            report.push(Check::info(format!("{name}_rate"), primary.exponential.estimate));
            report.push(Check::at_most(
                format!("{name}_rate_rel_error"),
                (primary.exponential.estimate - sigma_star).abs() / sigma_star,
                cfg.rate_tolerance,
            ));
            report.push(Check::at_least(
                format!("{name}_r2_margin"),
                primary.exponential.r_squared - primary.linear.r_squared,
                0.05,
            ));
            report.push(Check::at_most(format!("{name}_threshold_spread"), hi / lo - 1.0, 0.10));
            report.push(Check::at_least(format!("{name}_speed_ratio"), ratio, 5.0));
        }
    }
    Ok(fits)
}

/// Runs the three regimes on identical grid, reaction and data, fits both
/// models on the window and reports the verdicts.
pub fn regime_comparison(cfg: &SpreadConfig) -> Result<RegimeComparison> {
    let runs = Regime::ALL
        .par_iter()
        .map(|&r| run_spread(r, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut report = Report::new();
    let mut fits = Vec::new();
    for run in &runs {
        fits.extend(regime_checks(run, cfg, &mut report)?);
    }
    let lambda = cfg.primary_threshold();
    let rate_of = |r: Regime| {
        fits.iter()
            .find(|f| f.regime == r && f.threshold == lambda)
            .map(|f| f.exponential.estimate)
            .unwrap_or(f64::NAN)
    };
    let (sf, sm) = (rate_of(Regime::Fractional), rate_of(Regime::Mixed));
    report.push(Check::at_most("fractional_mixed_rate_agreement", (sf - sm).abs() / sm, 0.10));
    Ok(RegimeComparison { runs, fits, report })
}

/// A periodic front: `(1 + tanh(x / 2w)) / 2` near the origin with the
/// return to 0 placed at the domain edge.
pub fn tanh_profile(grid: &UniformGrid, width: f64) -> Result<Field> {
    if grid.dim() != 1 {
        return Err(Error::param("dim", "tanh profiles are one-dimensional"));
    }
    if !(width > 0.0) {
        return Err(Error::param("width", format!("must be positive, got {width}")));
    }
    let l = grid.half_width();
    let k = 0.5 / width;
    Ok(grid.sample(|x| {
        let x = x[0];
        0.5 * ((k * x).tanh() - (k * (x - l)).tanh() - (k * (x + l)).tanh()) + 0.5
    }))
}

/// Bulk fraction of the half width on which residuals are measured.
const RESIDUAL_BULK: f64 = 0.25;

/// The spectral residual `L phi + c . grad phi - f(phi)` as a field.
pub fn traveling_wave_residual_field(phi: &Field, c: &[f64], spec: &SymbolSpec, reaction: &ReactionKPP) -> Result<Field> {
    let grid = *phi.grid();
    if c.len() != grid.dim() {
        return Err(Error::param("c", format!("speed vector needs {} components", grid.dim())));
    }
    let values = phi.try_values()?;
    let lphi = apply_operator(phi, spec)?;
    let plan = SpectralPlan::new(&grid);
    let mut out: Vec<f64> = lphi
        .values()
        .iter()
        .zip(values)
        .map(|(l, &p)| l - reaction.eval(p))
        .collect();
    for (axis, &ca) in c.iter().enumerate() {
        if ca != 0.0 {
            for (o, d) in out.iter_mut().zip(plan.derivative(values, axis)) {
                *o += ca * d;
            }
        }
    }
    Field::physical(grid, out)
}

/// `sup |L phi + c . grad phi - f(phi)|` over the bulk `|x_i| <= L/4`.
pub fn traveling_wave_residual(phi: &Field, c: &[f64], spec: &SymbolSpec, reaction: &ReactionKPP) -> Result<f64> {
    let res = traveling_wave_residual_field(phi, c, spec, reaction)?;
    let grid = res.grid();
    Ok((0..grid.len())
        .filter(|&j| grid.in_bulk(j, RESIDUAL_BULK))
        .map(|j| res.values()[j].abs())
        .fold(0.0, f64::max))
}

/// Residuals of tanh profiles over `widths x speeds` as `(width, c, rho)`.
pub fn residual_table(
    grid: &UniformGrid,
    spec: &SymbolSpec,
    reaction: &ReactionKPP,
    widths: &[f64],
    speeds: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    let bulk: Vec<usize> = (0..grid.len()).filter(|&j| grid.in_bulk(j, RESIDUAL_BULK)).collect();
    let mut rows = Vec::with_capacity(widths.len() * speeds.len());
    for &w in widths {
        let phi = tanh_profile(grid, w)?;
        let values = phi.values();
        let lphi = apply_operator(&phi, spec)?;
        let grad = SpectralPlan::new(grid).derivative(values, 0);
        let base: Vec<f64> = lphi.values().iter().zip(values).map(|(l, &p)| l - reaction.eval(p)).collect();
        for &c in speeds {
            let rho = bulk.iter().map(|&j| (base[j] + c * grad[j]).abs()).fold(0.0, f64::max);
            rows.push((w, c, rho));
        }
    }
    Ok(rows)
}

/// Minimum of [`residual_table`] against `1e-2`, plus the constant states 0
/// and 1.
pub fn residual_sweep(
    grid: &UniformGrid,
    spec: &SymbolSpec,
    reaction: &ReactionKPP,
    widths: &[f64],
    speeds: &[f64],
) -> Result<Report> {
    let rows = residual_table(grid, spec, reaction, widths, speeds)?;
    sweep_report(grid, spec, reaction, &rows)
}

pub fn sweep_report(
    grid: &UniformGrid,
    spec: &SymbolSpec,
    reaction: &ReactionKPP,
    rows: &[(f64, f64, f64)],
) -> Result<Report> {
    let best = rows
        .iter()
        .copied()
        .fold((f64::NAN, f64::NAN, f64::INFINITY), |b, r| if r.2 < b.2 { r } else { b });
    let zero = vec![0.0; grid.dim()];
    let r0 = traveling_wave_residual(&Field::constant(*grid, 0.0), &zero, spec, reaction)?;
    let r1 = traveling_wave_residual(&Field::constant(*grid, 1.0), &zero, spec, reaction)?;
    let mut report = Report::new();
    report.push(Check::at_least("profile_residual_min", best.2, 1e-2));
    report.push(Check::info("best_width", best.0));
    report.push(Check::info("best_speed", best.1));
    report.push(Check::at_most("zero_state_residual", r0, 1e-10));
    report.push(Check::at_most("one_state_residual", r1, 1e-10));
    Ok(report)
}

/// Evenly spaced speeds `0, step, ..., max`.
pub fn speed_grid(max: f64, step: f64) -> Vec<f64> {
    let count = (max / step).round() as usize;
    (0..=count).map(|k| k as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_front() {
        let g = UniformGrid::new(1, 1024, 16.0).unwrap();
        let u = g.sample_radial(|r| if r <= 3.0 { 1.0 } else { 0.0 });
        let r = front_radius(&g, u.values(), 0.5).unwrap();
        assert!((r - 3.0).abs() <= g.spacing());
        assert!(front_radius(&g, u.values(), 1.5).is_none());
    }

    #[test]
    fn synthetic_fits_are_exact() {
        let mut t = FrontTrace::new(0.5, Regime::Mixed).unwrap();
        for k in 0..=40 {
            let s = k as f64 * 0.5;
            t.push(s, (0.5 * s).exp()).unwrap();
        }
        let f = fit_rate(&t, RateModel::Exponential, (4.0, 20.0)).unwrap();
        assert!((f.estimate - 0.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_rate(&t, RateModel::Linear, (4.0, 5.0)).is_err());
        assert!(t.push(3.0, 1.0).is_err());
    }

    #[test]
    fn linear_front_has_unit_speed_ratio() {
        let mut t = FrontTrace::new(0.5, Regime::Classical).unwrap();
        for k in 0..=200 {
            let s = k as f64 * 0.1;
            t.push(s, 3.0 * s).unwrap();
        }
        let r = moving_frame_speed(&t, (8.0, 16.0), 0.5).unwrap();
        assert!((r.stat("speed_ratio") - 1.0).abs() < 1e-10);
    }

    #[test]
    fn profile_is_periodic_and_monotone_in_bulk() {
        let g = UniformGrid::new(1, 2048, 64.0).unwrap();
        let p = tanh_profile(&g, 1.0).unwrap();
        let v = p.values();
        assert!((v[0] - 0.5).abs() < 1e-12);
        assert!((v[g.origin_index()] - 0.5).abs() < 1e-12);
        assert!(v.windows(2).take(g.len() / 2).skip(g.len() / 4).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn constant_states_have_zero_residual() {
        let g = UniformGrid::new(1, 512, 32.0).unwrap();
        let f = ReactionKPP::logistic(1.0).unwrap();
        let spec = SymbolSpec::mixed(0.5).unwrap();
        for v in [0.0, 1.0] {
            let rho = traveling_wave_residual(&Field::constant(g, v), &[2.0], &spec, &f).unwrap();
            assert!(rho <= 1e-10);
        }
    }
}
