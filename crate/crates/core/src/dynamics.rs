//! Mild solutions of `u_t + L u = f(u)`: a Duhamel fixed-point step, an
//! exponential Euler step, the driver with its edge and range guards, the
//! comparison harness and the barrier iteration.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Scratch, SpectralPlan, SymbolSpec, UniformGrid};
use crate::report::{Check, Report};
use crate::semigroup::PowerLawBarrier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionForm {
    Logistic,
    CustomConcave,
    /// `f = 0`; the linear equation, kept for testing the Duhamel machinery.
    Inert,
}

/// A KPP nonlinearity on `[0, 1]` with its constants: `f'(0)`, the
/// Lipschitz constant on `[0, 1]` and the growth constant `c` with
/// `f(v) <= c v` (taken as `f'(0)`, exact for concave `f`).
#[derive(Clone)]
pub struct ReactionKPP {
    form: ReactionForm,
    rate: f64,
    fprime0: f64,
    lipschitz: f64,
    custom: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl fmt::Debug for ReactionKPP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReactionKPP")
            .field("form", &self.form)
            .field("rate", &self.rate)
            .field("fprime0", &self.fprime0)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

const CERTIFY_POINTS: usize = 1001;

impl ReactionKPP {
    /// `f(u) = r u (1 - u)`.
    pub fn logistic(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::param("rate", format!("must be positive, got {rate}")));
        }
        Ok(Self {
            form: ReactionForm::Logistic,
            rate,
            fprime0: rate,
            lipschitz: rate,
            custom: None,
        })
    }

    pub fn inert() -> Self {
        Self {
            form: ReactionForm::Inert,
            rate: 0.0,
            fprime0: 0.0,
            lipschitz: 0.0,
            custom: None,
        }
    }

    /// A user nonlinearity, certified by finite differences: `f(0) = f(1) = 0`,
    /// `f'(1) < 0 < f'(0)`, and second differences `<= 1e-10` on a 1001-point
    /// probe of `[0, 1]`.
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let scale = (1..CERTIFY_POINTS - 1)
            .map(|i| f(i as f64 / (CERTIFY_POINTS - 1) as f64).abs())
            .fold(1.0f64, f64::max);
        if f(0.0).abs() > 1e-14 * scale || f(1.0).abs() > 1e-14 * scale {
            return Err(Error::param("reaction", "f(0) and f(1) must vanish"));
        }
        let h = 1e-6;
        let fprime0 = (f(h) - f(0.0)) / h;
        let fprime1 = (f(1.0) - f(1.0 - h)) / h;
        if !(fprime0 > 0.0 && fprime1 < 0.0) {
            return Err(Error::param(
                "reaction",
                format!("need f'(1) < 0 < f'(0), got f'(0) = {fprime0:e}, f'(1) = {fprime1:e}"),
            ));
        }
        let step = 1.0 / (CERTIFY_POINTS - 1) as f64;
        let probe: Vec<f64> = (0..CERTIFY_POINTS).map(|i| f(i as f64 * step)).collect();
        if let Some(w) = probe.windows(3).find(|w| w[0] - 2.0 * w[1] + w[2] > 1e-10) {
            return Err(Error::param(
                "reaction",
                format!("not concave on [0, 1]: second difference {:e}", w[0] - 2.0 * w[1] + w[2]),
            ));
        }
        let lipschitz = probe.windows(2).map(|w| (w[1] - w[0]).abs() / step).fold(0.0f64, f64::max);
        Ok(Self {
            form: ReactionForm::CustomConcave,
            rate: fprime0,
            fprime0,
            lipschitz: lipschitz.max(fprime0),
            custom: Some(Arc::new(f)),
        })
    }

    pub fn form(&self) -> ReactionForm {
        self.form
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn fprime0(&self) -> f64 {
        self.fprime0
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn growth_constant(&self) -> f64 {
        self.fprime0
    }

    /// `1 / (4c)`, infinite for the inert reaction.
    pub fn contraction_window(&self) -> f64 {
        1.0 / (4.0 * self.growth_constant())
    }

    /// `f(u)`, extended by 0 below `u = 0` so that rounding noise in the far
    /// field is not amplified by the instability of the zero state.
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        match self.form {
            ReactionForm::Logistic => self.rate * u * (1.0 - u),
            ReactionForm::Inert => 0.0,
            ReactionForm::CustomConcave => (self.custom.as_ref().expect("custom reaction"))(u),
        }
    }

    /// Exact solution of `u' = f(u)` for the logistic form.
    pub fn logistic_flow(&self, u0: f64, t: f64) -> Option<f64> {
        match self.form {
            ReactionForm::Logistic => {
                let e = (self.rate * t).exp();
                Some(u0 * e / (1.0 - u0 + u0 * e))
            }
            ReactionForm::Inert => Some(u0),
            ReactionForm::CustomConcave => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[serde(alias = "picard")]
    PicardDuhamel,
    #[serde(alias = "exp_euler")]
    ExponentialEuler,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "picard_duhamel" | "picard" => Ok(Scheme::PicardDuhamel),
            "exponential_euler" | "exp_euler" => Ok(Scheme::ExponentialEuler),
            other => Err(Error::param("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Largest allowed `|u|` on the outermost lattice ring; spatially uniform
    /// states are exempt since they carry no truncation error.
    pub boundary_guard: f64,
    /// Keep every `stride`-th state; 0 keeps only the first and last.
    pub snapshot_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 1.0,
            scheme: Scheme::ExponentialEuler,
            picard_tol: 1e-10,
            picard_max_iters: 50,
            boundary_guard: 1e-3,
            snapshot_stride: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, reaction: &ReactionKPP) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::param("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iters == 0 {
            return Err(Error::param("picard_tol", "need a positive tolerance and at least one iteration"));
        }
        if !(self.boundary_guard > 0.0) {
            return Err(Error::param("boundary_guard", "must be positive"));
        }
        let window = reaction.contraction_window();
        if self.scheme == Scheme::PicardDuhamel && self.dt > window * (1.0 + 1e-12) {
            return Err(Error::param("dt", format!("dt exceeds contraction window 1/(4c)={window}")));
        }
        self.steps()?;
        Ok(())
    }

    /// Number of steps; `t_end` must be an integer multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        let steps = (self.t_end / self.dt).round();
        if steps < 1.0 || (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::param(
                "t_end",
                format!("must be a positive multiple of dt = {} (got {})", self.dt, self.t_end),
            ));
        }
        Ok(steps as usize)
    }
}

/// Gauss-Legendre nodes on `[0, 1]`.
const GAUSS_NODES: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];

/// `(e^z - 1) / z`.
fn phi1(z: f64) -> f64 {
    if z.abs() < 0.5 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 2..20 {
            term *= z / k as f64;
            sum += term;
        }
        sum
    } else {
        z.exp_m1() / z
    }
}

/// `(e^z - 1 - z) / z^2`.
fn phi2(z: f64) -> f64 {
    if z.abs() < 0.5 {
        let mut term = 0.5;
        let mut sum = 0.5;
        for k in 3..22 {
            term *= z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Per-bin weights of `v(r) = e^{-rm} u + int_0^r e^{-(r-p)m} (F1 l1(p) + F2 l2(p)) dp`
/// with `l1, l2` the Lagrange basis on the Gauss nodes.
#[derive(Debug, Clone)]
struct StageWeights {
    decay: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl StageWeights {
    fn new(symbol: &[f64], dt: f64, fraction: f64) -> Self {
        let [c1, c2] = GAUSS_NODES;
        let r = fraction * dt;
        let h = (c2 - c1) * dt;
        let mut decay = Vec::with_capacity(symbol.len());
        let mut first = Vec::with_capacity(symbol.len());
        let mut second = Vec::with_capacity(symbol.len());
        for &m in symbol {
            let z = -r * m;
            let i0 = r * phi1(z);
            let i1 = r * r * phi2(z);
            decay.push(z.exp());
            first.push((c2 * dt * i0 - i1) / h);
            second.push((i1 - c1 * dt * i0) / h);
        }
        Self { decay, first, second }
    }

    fn combine(&self, u: &[Complex64], f1: &[Complex64], f2: &[Complex64], out: &mut [Complex64]) {
        for (j, z) in out.iter_mut().enumerate() {
            *z = u[j] * self.decay[j] + f1[j] * self.first[j] + f2[j] * self.second[j];
        }
    }
}

/// A prepared time stepper for one grid, operator, reaction, scheme and `dt`.
pub struct Stepper {
    plan: SpectralPlan,
    scratch: Scratch,
    reaction: ReactionKPP,
    scheme: Scheme,
    dt: f64,
    tol: f64,
    max_iters: usize,
    heat: Vec<f64>,
    stages: Option<[StageWeights; 3]>,
    work: Vec<f64>,
    spectra: [Vec<Complex64>; 4],
    stage_values: [Vec<f64>; 2],
}

impl fmt::Debug for Stepper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stepper")
            .field("grid", self.plan.grid())
            .field("scheme", &self.scheme)
            .field("dt", &self.dt)
            .finish()
    }
}

impl Stepper {
    pub fn new(grid: &UniformGrid, spec: &SymbolSpec, reaction: &ReactionKPP, config: &SolverConfig) -> Result<Self> {
        config.validate(reaction)?;
        let plan = SpectralPlan::new(grid);
        let symbol = plan.symbol_values(spec);
        let dt = config.dt;
        let heat = symbol.iter().map(|m| (-dt * m).exp()).collect();
        let stages = match config.scheme {
            Scheme::PicardDuhamel => Some([
                StageWeights::new(&symbol, dt, GAUSS_NODES[0]),
                StageWeights::new(&symbol, dt, GAUSS_NODES[1]),
                StageWeights::new(&symbol, dt, 1.0),
            ]),
            Scheme::ExponentialEuler => None,
        };
        let half = plan.half_len();
        let zeros = || vec![Complex64::new(0.0, 0.0); half];
        Ok(Self {
            scratch: plan.scratch(),
            reaction: reaction.clone(),
            scheme: config.scheme,
            dt,
            tol: config.picard_tol,
            max_iters: config.picard_max_iters,
            heat,
            stages,
            work: vec![0.0; grid.len()],
            spectra: [zeros(), zeros(), zeros(), zeros()],
            stage_values: [vec![0.0; grid.len()], vec![0.0; grid.len()]],
            plan,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Advances `u` in place by `dt`; returns the number of fixed-point sweeps
    /// (0 for exponential Euler).
    pub fn step(&mut self, u: &mut [f64]) -> Result<usize> {
        match self.scheme {
            Scheme::ExponentialEuler => {
                self.exponential_euler(u);
                Ok(0)
            }
            Scheme::PicardDuhamel => self.picard(u, None),
        }
    }

    /// `u+ = T_dt (u + dt f(u))`.
    fn exponential_euler(&mut self, u: &mut [f64]) {
        let dt = self.dt;
        for (w, &v) in self.work.iter_mut().zip(u.iter()) {
            *w = v + dt * self.reaction.eval(v);
        }
        let spectrum = &mut self.spectra[0];
        self.plan.forward_into(&mut self.work, spectrum, &mut self.scratch);
        for (z, e) in spectrum.iter_mut().zip(&self.heat) {
            *z *= *e;
        }
        self.plan.inverse_into(spectrum, u, &mut self.scratch);
    }

    fn forward_reaction(&mut self, stage: usize, slot: usize) {
        for (w, &v) in self.work.iter_mut().zip(&self.stage_values[stage]) {
            *w = self.reaction.eval(v);
        }
        self.plan.forward_into(&mut self.work, &mut self.spectra[slot], &mut self.scratch);
    }

    /// Fixed point of the discretized Duhamel map on the two Gauss stages.
    /// `guess` seeds the stage values (default: `u` itself).
    fn picard(&mut self, u: &mut [f64], guess: Option<[&[f64]; 2]>) -> Result<usize> {
        let stages = self.stages.take().expect("picard weights");
        let result = self.picard_inner(&stages, u, guess);
        self.stages = Some(stages);
        result
    }

    fn picard_inner(&mut self, stages: &[StageWeights; 3], u: &mut [f64], guess: Option<[&[f64]; 2]>) -> Result<usize> {
        self.work.copy_from_slice(u);
        self.plan.forward_into(&mut self.work, &mut self.spectra[0], &mut self.scratch);
        for (i, values) in self.stage_values.iter_mut().enumerate() {
            values.copy_from_slice(guess.map_or(&*u, |g| g[i]));
        }
        let mut change = f64::INFINITY;
        let mut iterations = 0;
        while iterations < self.max_iters {
            iterations += 1;
            self.forward_reaction(0, 1);
            self.forward_reaction(1, 2);
            change = 0.0;
            for i in 0..2 {
                let [u_hat, f1, f2, out] = &mut self.spectra;
                stages[i].combine(u_hat, f1, f2, out);
                self.plan.inverse_into(out, &mut self.work, &mut self.scratch);
                for (old, &new) in self.stage_values[i].iter_mut().zip(&self.work) {
                    change = change.max((new - *old).abs());
                    *old = new;
                }
            }
            if change <= self.tol {
                break;
            }
        }
        if !(change <= self.tol) {
            return Err(Error::PicardDiverged { iterations, change });
        }
        self.forward_reaction(0, 1);
        self.forward_reaction(1, 2);
        let [u_hat, f1, f2, out] = &mut self.spectra;
        stages[2].combine(u_hat, f1, f2, out);
        self.plan.inverse_into(out, u, &mut self.scratch);
        Ok(iterations)
    }

    /// One Picard step seeded with the given stage values.
    pub fn step_picard_seeded(&mut self, u: &mut [f64], seeds: [&[f64]; 2]) -> Result<usize> {
        if self.scheme != Scheme::PicardDuhamel {
            return Err(Error::Precondition("seeded steps need the picard scheme".into()));
        }
        let n = self.plan.grid().len();
        if u.len() != n || seeds.iter().any(|s| s.len() != n) {
            return Err(Error::GridMismatch);
        }
        self.picard(u, Some(seeds))
    }
}

fn single_step(u: &Field, reaction: &ReactionKPP, spec: &SymbolSpec, dt: f64, scheme: Scheme) -> Result<(Field, usize)> {
    let config = SolverConfig {
        dt,
        t_end: dt,
        scheme,
        ..SolverConfig::default()
    };
    let mut stepper = Stepper::new(u.grid(), spec, reaction, &config)?;
    let mut values = u.try_values()?.to_vec();
    let iterations = stepper.step(&mut values)?;
    Ok((Field::physical(*u.grid(), values)?, iterations))
}

/// One Duhamel fixed-point step at the default tolerance `1e-10`.
pub fn step_picard(u: &Field, reaction: &ReactionKPP, spec: &SymbolSpec, dt: f64) -> Result<(Field, usize)> {
    let range_tol = 1e-8;
    if u.min() < -range_tol || u.max() > 1.0 + range_tol {
        return Err(Error::Precondition(format!(
            "picard step needs data in [0, 1], got [{}, {}]",
            u.min(),
            u.max()
        )));
    }
    single_step(u, reaction, spec, dt, Scheme::PicardDuhamel)
}

pub fn step_exponential_euler(u: &Field, reaction: &ReactionKPP, spec: &SymbolSpec, dt: f64) -> Result<Field> {
    single_step(u, reaction, spec, dt, Scheme::ExponentialEuler).map(|(f, _)| f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
    pub iters: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: UniformGrid,
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("trajectory has the initial state")
    }
}

/// Range slack beyond which a run aborts; values are never clipped.
const RANGE_ABORT: f64 = 1e-8;

/// `|u|` on the outermost lattice ring, or 0 for spatially uniform data.
pub fn edge_magnitude(grid: &UniformGrid, u: &[f64]) -> f64 {
    let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    edge_given_range(grid, u, lo, hi)
}

fn edge_given_range(grid: &UniformGrid, u: &[f64], lo: f64, hi: f64) -> f64 {
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return 0.0;
    }
    let n = grid.points_per_axis();
    match grid.dim() {
        1 => u[0].abs(),
        _ => (0..n).map(|j| u[j].abs().max(u[j * n].abs())).fold(0.0, f64::max),
    }
}

fn diagnose(grid: &UniformGrid, t: f64, u: &[f64], iters: usize) -> StepDiagnostics {
    let (min, max, sum) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(a, b, s), &v| (a.min(v), b.max(v), s + v));
    StepDiagnostics {
        t,
        mass: sum * grid.cell_volume(),
        min,
        max,
        iters,
    }
}

/// One trajectory advanced step by step with the guards applied.
struct Evolution {
    grid: UniformGrid,
    stepper: Stepper,
    values: Vec<f64>,
    guard: f64,
    step: usize,
    dt: f64,
}

impl Evolution {
    fn new(u0: &Field, reaction: &ReactionKPP, spec: &SymbolSpec, config: &SolverConfig) -> Result<(Self, StepDiagnostics)> {
        let grid = *u0.grid();
        let values = u0.try_values()?.to_vec();
        let stepper = Stepper::new(&grid, spec, reaction, config)?;
        let d = diagnose(&grid, 0.0, &values, 0);
        if d.min < -1e-12 || d.max > 1.0 + 1e-12 {
            return Err(Error::Precondition(format!("initial data must lie in [0, 1], got [{}, {}]", d.min, d.max)));
        }
        let edge = edge_magnitude(&grid, &values);
        if edge > config.boundary_guard {
            return Err(Error::BoundaryGuard {
                t: 0.0,
                edge,
                guard: config.boundary_guard,
            });
        }
        Ok((
            Self {
                grid,
                stepper,
                values,
                guard: config.boundary_guard,
                step: 0,
                dt: config.dt,
            },
            d,
        ))
    }

    fn advance(&mut self) -> Result<StepDiagnostics> {
        let iters = self.stepper.step(&mut self.values)?;
        self.step += 1;
        let t = self.step as f64 * self.dt;
        let d = diagnose(&self.grid, t, &self.values, iters);
        if !(d.min >= -RANGE_ABORT && d.max <= 1.0 + RANGE_ABORT) {
            return Err(Error::RangeViolation { t, min: d.min, max: d.max });
        }
        let edge = edge_given_range(&self.grid, &self.values, d.min, d.max);
        if edge > self.guard {
            return Err(Error::BoundaryGuard { t, edge, guard: self.guard });
        }
        Ok(d)
    }
}

pub fn solve(u0: &Field, reaction: &ReactionKPP, spec: &SymbolSpec, config: &SolverConfig) -> Result<Trajectory> {
    solve_with(u0, reaction, spec, config, |_, _| {})
}

/// [`solve`] with `observer(t, values)` called on the initial state and after
/// every step, for measurements that should not keep snapshots.
pub fn solve_with(
    u0: &Field,
    reaction: &ReactionKPP,
    spec: &SymbolSpec,
    config: &SolverConfig,
    mut observer: impl FnMut(f64, &[f64]),
) -> Result<Trajectory> {
    let (mut evo, first) = Evolution::new(u0, reaction, spec, config)?;
    let steps = config.steps()?;
    let grid = evo.grid;
    observer(0.0, &evo.values);
    let mut traj = Trajectory {
        grid,
        times: vec![0.0],
        snapshots: vec![u0.clone()],
        diagnostics: vec![first],
    };
    for k in 1..=steps {
        let d = evo.advance()?;
        observer(d.t, &evo.values);
        traj.diagnostics.push(d);
        let keep = k == steps || (config.snapshot_stride > 0 && k % config.snapshot_stride == 0);
        if keep {
            traj.times.push(d.t);
            traj.snapshots.push(Field::physical(grid, evo.values.clone())?);
        }
    }
    Ok(traj)
}

/// Co-evolves `u0 <= v0` and reports `max_t max_x (u - v)^+` and the range.
pub fn check_comparison(
    u0: &Field,
    v0: &Field,
    reaction: &ReactionKPP,
    spec: &SymbolSpec,
    config: &SolverConfig,
) -> Result<Report> {
    if u0.grid() != v0.grid() {
        return Err(Error::GridMismatch);
    }
    let initial = u0
        .try_values()?
        .iter()
        .zip(v0.try_values()?)
        .map(|(a, b)| a - b)
        .fold(0.0f64, f64::max);
    if initial > 0.0 {
        return Err(Error::Precondition(format!("u0 <= v0 fails by {initial:e}")));
    }
    let (mut eu, du) = Evolution::new(u0, reaction, spec, config)?;
    let (mut ev, dv) = Evolution::new(v0, reaction, spec, config)?;
    let steps = config.steps()?;
    let mut violation = 0.0f64;
    let mut lo = du.min.min(dv.min);
    let mut hi = du.max.max(dv.max);
    for _ in 0..steps {
        let (a, b) = rayon::join(|| eu.advance(), || ev.advance());
        let (a, b) = (a?, b?);
        lo = lo.min(a.min).min(b.min);
        hi = hi.max(a.max).max(b.max);
        let gap = eu.values.iter().zip(&ev.values).map(|(x, y)| x - y).fold(0.0f64, f64::max);
        violation = violation.max(gap);
    }
    let mut report = Report::new();
    report.push(Check::at_most("ordering_violation", violation, 1e-10));
    report.push(Check::at_least("range_min", lo, -1e-10));
    report.push(Check::at_most("range_max", hi, 1.0 + 1e-10));
    Ok(report)
}

/// Evolves from the barrier and checks `u(k t0, x) >= eps` on
/// `|x| <= r0 e^{sigma k t0}` for `k = 0..=k_max`. The radius must stay within
/// `L/2`.
pub fn run_barrier_iteration(
    grid: &UniformGrid,
    b: &PowerLawBarrier,
    reaction: &ReactionKPP,
    spec: &SymbolSpec,
    sigma: f64,
    t0: f64,
    k_max: usize,
    config: &SolverConfig,
) -> Result<Report> {
    if grid.dim() != b.dim {
        return Err(Error::GridMismatch);
    }
    if !(sigma > 0.0) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    let reach = b.r0 * (sigma * k_max as f64 * t0).exp();
    if reach > 0.5 * grid.half_width() {
        return Err(Error::EmptyWindow(format!(
            "domain exhausted: r0 e^(sigma k_max t0) = {reach} exceeds L/2 = {}",
            0.5 * grid.half_width()
        )));
    }
    let per_leg = (t0 / config.dt).round() as usize;
    if per_leg == 0 || ((per_leg as f64) * config.dt - t0).abs() > 1e-9 * t0 {
        return Err(Error::param("t0", format!("must be a multiple of dt = {}", config.dt)));
    }
    let run = SolverConfig {
        t_end: (per_leg * k_max.max(1)) as f64 * config.dt,
        snapshot_stride: 0,
        ..*config
    };
    let eps = b.epsilon();
    let u0 = b.sample(grid);
    let mut margins = vec![f64::NAN; k_max + 1];
    let mut previous: Option<Vec<f64>> = None;
    let mut monotone_start = None;
    let mut decreases = 0usize;
    let mut step = 0usize;
    let radii: Vec<f64> = (0..grid.len()).map(|j| grid.radius(j)).collect();
    solve_with(&u0, reaction, spec, &run, |_, values| {
        if step % per_leg == 0 && step / per_leg <= k_max {
            let k = step / per_leg;
            let radius = b.r0 * (sigma * k as f64 * t0).exp();
            margins[k] = values
                .iter()
                .zip(&radii)
                .filter(|(_, &r)| r <= radius)
                .map(|(&v, _)| v / eps)
                .fold(f64::INFINITY, f64::min);
        }
        if let Some(prev) = &previous {
            let increasing = values.iter().zip(prev).all(|(a, b)| a >= b);
            if monotone_start.is_none() {
                monotone_start = Some(increasing);
            } else if !increasing {
                decreases += 1;
            }
        }
        previous = Some(values.to_vec());
        step += 1;
    })?;
    let mut report = Report::new();
    let mut achieved = -1.0;
    for (k, &m) in margins.iter().enumerate() {
        report.push(Check::at_least(format!("plateau_k{k}"), m, 1.0));
        if m >= 1.0 && achieved == k as f64 - 1.0 {
            achieved = k as f64;
        }
    }
    report.push(Check::info("largest_k", achieved));
    report.push(Check::info(
        "sigma_over_critical",
        sigma / (reaction.fprime0() / b.exponent()),
    ));
    if monotone_start == Some(true) {
        report.push(Check::at_most("time_monotonicity_breaks", decreases as f64, 0.0));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::propagate;

    fn grid() -> UniformGrid {
        UniformGrid::new(1, 256, 32.0).unwrap()
    }

    #[test]
    fn phi_functions_are_smooth_across_branches() {
        for z in [-0.5000001f64, -0.4999999, 0.4999999, 0.5000001] {
            assert!((phi1(z) - z.exp_m1() / z).abs() < 1e-14);
            assert!((phi2(z) - (z.exp_m1() - z) / (z * z)).abs() < 1e-13);
        }
        assert_eq!(phi1(0.0), 1.0);
        assert_eq!(phi2(0.0), 0.5);
    }

    #[test]
    fn reaction_constants() {
        let f = ReactionKPP::logistic(2.0).unwrap();
        assert_eq!(f.contraction_window(), 0.125);
        assert_eq!(f.eval(0.5), 0.5);
        let g = ReactionKPP::custom(|u| u * (1.0 - u) * (1.0 + 3.0 * u)).unwrap_err();
        assert!(g.to_string().contains("concave"), "{g}");
        let h = ReactionKPP::custom(|u| u * (1.0 - u)).unwrap();
        assert!((h.fprime0() - 1.0).abs() < 1e-5);
        assert!((h.lipschitz() - 1.0).abs() < 1e-2);
        assert!(ReactionKPP::custom(|u| u * u * (1.0 - u)).is_err());
    }

    #[test]
    fn contraction_window_error() {
        let f = ReactionKPP::logistic(1.0).unwrap();
        let c = SolverConfig {
            dt: 1.0,
            scheme: Scheme::PicardDuhamel,
            ..SolverConfig::default()
        };
        let e = c.validate(&f).unwrap_err().to_string();
        assert!(e.contains("dt exceeds contraction window 1/(4c)=0.25"), "{e}");
    }

    #[test]
    fn inert_picard_is_the_linear_flow() {
        let g = grid();
        let spec = SymbolSpec::mixed(0.5).unwrap();
        let u = g.sample_radial(|r| if r <= 2.0 { 0.8 } else { 0.0 });
        let (p, _) = step_picard(&u, &ReactionKPP::inert(), &spec, 0.3).unwrap();
        let e = step_exponential_euler(&u, &ReactionKPP::inert(), &spec, 0.3).unwrap();
        let exact = propagate(&u, &spec, 0.3).unwrap();
        assert!(p.sup_distance(&exact).unwrap() < 1e-15);
        assert!(e.sup_distance(&exact).unwrap() < 1e-15);
    }

    #[test]
    fn uniform_picard_matches_logistic_flow() {
        let g = grid();
        let f = ReactionKPP::logistic(1.0).unwrap();
        let spec = SymbolSpec::mixed(0.5).unwrap();
        let u = Field::constant(g, 0.3);
        let (p, _) = step_picard(&u, &f, &spec, 0.01).unwrap();
        let exact = f.logistic_flow(0.3, 0.01).unwrap();
        assert!(p.values().iter().all(|v| (v - exact).abs() < 1e-8));
    }

    #[test]
    fn equilibria_are_fixed() {
        let g = grid();
        let f = ReactionKPP::logistic(1.0).unwrap();
        let spec = SymbolSpec::mixed(0.5).unwrap();
        for (value, scheme) in [(0.0, Scheme::ExponentialEuler), (1.0, Scheme::PicardDuhamel)] {
            let config = SolverConfig {
                dt: 0.1,
                t_end: 2.0,
                scheme,
                ..SolverConfig::default()
            };
            let traj = solve(&Field::constant(g, value), &f, &spec, &config).unwrap();
            assert!(traj.last().values().iter().all(|v| (v - value).abs() < 1e-14));
        }
    }

    #[test]
    fn boundary_guard_trips() {
        let g = UniformGrid::new(1, 128, 4.0).unwrap();
        let f = ReactionKPP::logistic(1.0).unwrap();
        let u = g.sample_radial(|r| if r <= 1.0 { 0.5 } else { 0.0 });
        let config = SolverConfig {
            dt: 0.1,
            t_end: 10.0,
            boundary_guard: 1e-4,
            ..SolverConfig::default()
        };
        let err = solve(&u, &f, &SymbolSpec::mixed(0.5).unwrap(), &config).unwrap_err();
        assert!(matches!(err, Error::BoundaryGuard { .. }), "{err}");
    }
}
