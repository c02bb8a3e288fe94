//! The subcommands behind the `mixkpp` binary, usable from tests.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::RunConfig;
use super::output::{emit_outputs, Artifact, Cell, Csv, RunManifest, Timer};
use super::svg::{render, Plot, Series};
use crate::dynamics::solve;
use crate::error::Result;
use crate::fronts::{
    regime_checks, regime_comparison, residual_table, run_spread, speed_grid, sweep_report, RateFit,
    RateModel, Regime, RegimeFits, SpreadRun,
};
use crate::grid::UniformGrid;
use crate::kernels::{
    check_chapman_kolmogorov, check_scaling, check_two_sided_bounds, image_sum, kernel, kernel_by_quadrature,
    KernelBoundSpec, KernelKind, KernelTable,
};
use crate::report::{Check, Report};
use crate::semigroup::{
    band_limited_probe, check_discrete_max_principle, check_semigroup_growth, push_polynomial_weight,
    push_powerlaw_barrier,
};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub manifest: RunManifest,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

fn finish(
    out_dir: &Path,
    command: &str,
    cfg: &RunConfig,
    mut artifacts: Vec<Artifact>,
    report: Report,
    timer: Timer,
) -> Result<Outcome> {
    artifacts.push(Artifact::json("report.json", &report)?);
    let manifest = emit_outputs(out_dir, command, cfg, &artifacts, timer.into_vec())?;
    Ok(Outcome { report, manifest })
}

fn coordinate_header(grid: &UniformGrid) -> Vec<&'static str> {
    if grid.dim() == 1 {
        vec!["x"]
    } else {
        vec!["x", "y"]
    }
}

fn coordinates(grid: &UniformGrid, idx: usize) -> Vec<f64> {
    let p = grid.point(idx);
    p[..grid.dim()].to_vec()
}

/// Image-corrected table values against the quadrature oracle at up to
/// eight bulk points.
fn oracle_error(table: &KernelTable) -> Result<f64> {
    let grid = table.grid();
    let l = grid.half_width();
    let bulk: Vec<usize> = (0..grid.len())
        .filter(|&j| grid.coordinate(j) >= 0.0 && grid.in_bulk(j, 0.25))
        .collect();
    let stride = (bulk.len() / 8).max(1);
    let mut worst = 0.0f64;
    for &j in bulk.iter().step_by(stride) {
        let x = grid.coordinate(j);
        let value = table.values()[j] - image_sum(table.kind(), table.s(), table.t(), x, l)?;
        let exact = kernel_by_quadrature(table.t(), x, table.s(), table.kind())?;
        worst = worst.max((value - exact).abs() / exact.abs());
    }
    Ok(worst)
}

fn table_checks(cfg: &RunConfig, table: &KernelTable, label: &str, timer: &mut Timer, report: &mut Report) {
    let grid = table.grid();
    let kind = table.kind();
    let wants = |c: &str| cfg.experiment.kernel_checks.iter().any(|k| k == c);
    let record = |name: String, r: Result<Report>, report: &mut Report| match r {
        Ok(r) => report.extend_prefixed(&format!("{name}_"), r),
        Err(e) => report.push_error(name, &e),
    };
    if wants("mass") {
        report.push(Check::at_most(format!("{label}_mass_defect"), (table.mass() - 1.0).abs(), 1e-8));
    }
    if wants("symmetry") {
        report.push(Check::at_most(format!("{label}_symmetry_defect"), table.symmetry_defect(), 1e-12));
    }
    if wants("bounds") {
        report.push(Check::at_least(format!("{label}_min"), table.min(), -1e-12));
        if kind != KernelKind::Gaussian {
            let spec = KernelBoundSpec::new(grid.dim(), table.s());
            let r = timer.time(&format!("bounds_{label}"), || check_two_sided_bounds(table, &spec));
            record(format!("{label}_bounds"), r, report);
        }
    }
    if wants("scaling") && kind == KernelKind::Fractional && grid.dim() == 1 {
        let r = timer.time(&format!("scaling_{label}"), || check_scaling(table));
        record(label.to_string(), r, report);
    }
    if wants("ck") {
        let (s, t) = (table.s(), table.t());
        let r = timer.time(&format!("ck_{label}"), || check_chapman_kolmogorov(grid, kind, s, t, t));
        record(label.to_string(), r, report);
    }
    if wants("oracle") && grid.dim() == 1 && kind != KernelKind::Gaussian {
        match timer.time(&format!("oracle_{label}"), || oracle_error(table)) {
            Ok(e) => report.push(Check::at_most(format!("{label}_oracle_rel_error"), e, 1e-6)),
            Err(e) => report.push_error(format!("{label}_oracle_rel_error"), &e),
        }
    }
}

/// Kernel tables for every configured kind and time, with the configured
/// subset of mass, symmetry, bounds, scaling, Chapman-Kolmogorov and (1D)
/// oracle checks.
pub fn kernel_command(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let s = cfg.operator.s;
    let mut timer = Timer::default();
    let mut report = Report::new();
    let mut header = vec!["kind", "t"];
    header.extend(coordinate_header(&grid));
    header.push("value");
    let mut csv = Csv::new(&header);
    for kind in cfg.kernel_kinds()? {
        for &t in &cfg.experiment.kernel_times {
            let label = format!("{}_t{t}", kind.name());
            let table = timer.time(&format!("table_{label}"), || kernel(&grid, kind, t, s))?;
            table_checks(cfg, &table, &label, &mut timer, &mut report);
            for (idx, &v) in table.values().iter().enumerate() {
                let mut cells = vec![Cell::Text(kind.name()), Cell::Num(t)];
                cells.extend(coordinates(&grid, idx).into_iter().map(Cell::Num));
                cells.push(Cell::Num(v));
                csv.row(&cells);
            }
        }
    }
    finish(out_dir, "kernel", cfg, vec![Artifact::new("kernel.csv", csv.into_string())], report, timer)
}

/// The configured verification suites on the configured grid: `kernel`
/// (Chapman-Kolmogorov and two-sided bounds), `semigroup` (growth in
/// `X_gamma` and weight pushes), `barriers` and `maxprinciple`.
pub fn verify_command(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let spec = cfg.symbol()?;
    let w = cfg.weight()?;
    let times = &cfg.experiment.verify_times;
    let seed = cfg.experiment.seed;
    let suite = |name: &str| cfg.experiment.verify_suites.iter().any(|k| k == name);
    let mut timer = Timer::default();
    let mut report = Report::new();
    if suite("kernel") {
        let s = cfg.operator.s;
        for kind in cfg.kernel_kinds()? {
            let r = timer.time(&format!("ck_{}", kind.name()), || check_chapman_kolmogorov(&grid, kind, s, 1.0, 1.0))?;
            report.extend_prefixed(&format!("ck_{}_", kind.name()), r);
            if kind != KernelKind::Gaussian {
                let table = kernel(&grid, kind, 2.0, s)?;
                let bs = KernelBoundSpec::new(grid.dim(), s);
                match timer.time(&format!("bounds_{}", kind.name()), || check_two_sided_bounds(&table, &bs)) {
                    Ok(r) => report.extend_prefixed(&format!("bounds_{}_", kind.name()), r),
                    Err(e) => report.push_error(format!("bounds_{}", kind.name()), &e),
                }
            }
        }
    }
    if suite("semigroup") {
        let growth = timer.time("growth", || check_semigroup_growth(&grid, &spec, &w, times, seed))?;
        report.extend_prefixed("growth_", growth);
        for &t in times {
            let r = timer.time(&format!("weight_t{t}"), || push_polynomial_weight(&grid, &w, &spec, t))?;
            report.extend_prefixed(&format!("weight_t{t}_"), r);
        }
    }
    if suite("barriers") {
        let barrier = cfg.barrier()?;
        for &t in times.iter().filter(|&&t| t >= 1.0) {
            let (_, r) = timer.time(&format!("barrier_t{t}"), || push_powerlaw_barrier(&grid, &barrier, &spec, t))?;
            report.extend_prefixed(&format!("barrier_t{t}_"), r);
        }
    }
    if suite("maxprinciple") {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..8 {
            let probe = band_limited_probe(&grid, 4, &mut rng);
            report.extend_prefixed(&format!("max_principle_{i}_"), check_discrete_max_principle(&probe, &spec)?);
        }
    }
    finish(out_dir, "verify", cfg, Vec::new(), report, timer)
}

/// One trajectory with snapshot and diagnostics CSVs.
pub fn evolve_command(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let spec = cfg.symbol()?;
    let reaction = cfg.reaction()?;
    let u0 = cfg.initial_data()?.sample(&grid, cfg.operator.s)?;
    let mut timer = Timer::default();
    let traj = timer.time("solve", || solve(&u0, &reaction, &spec, &cfg.solver()))?;
    let mut artifacts = Vec::new();
    let mut header = coordinate_header(&grid);
    header.push("u");
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let mut csv = Csv::new(&header);
        for (idx, &v) in snap.values().iter().enumerate() {
            let mut row = coordinates(&grid, idx);
            row.push(v);
            csv.nums(&row);
        }
        artifacts.push(Artifact::new(format!("snapshot_{k:04}.csv"), csv.into_string()));
    }
    let mut diag = Csv::new(&["t", "mass", "min", "max", "iters"]);
    for d in &traj.diagnostics {
        diag.row(&[Cell::Num(d.t), Cell::Num(d.mass), Cell::Num(d.min), Cell::Num(d.max), Cell::Int(d.iters as i64)]);
    }
    artifacts.push(Artifact::new("diagnostics.csv", diag.into_string()));
    let lo = traj.diagnostics.iter().map(|d| d.min).fold(f64::INFINITY, f64::min);
    let hi = traj.diagnostics.iter().map(|d| d.max).fold(f64::NEG_INFINITY, f64::max);
    let mut report = Report::new();
    report.push(Check::at_least("range_min", lo, -1e-10));
    report.push(Check::at_most("range_max", hi, 1.0 + 1e-10));
    report.push(Check::info("final_mass", traj.diagnostics.last().map_or(f64::NAN, |d| d.mass)));
    finish(out_dir, "evolve", cfg, artifacts, report, timer)
}

#[derive(Debug, Serialize)]
struct FitDocument<'a> {
    sigma_star: f64,
    c_star: f64,
    rate_tolerance: f64,
    fits: &'a [RegimeFits],
    checks: &'a [Check],
}

fn colour(r: Regime) -> &'static str {
    match r {
        Regime::Classical => "#1f77b4",
        Regime::Fractional => "#2ca02c",
        Regime::Mixed => "#d62728",
    }
}

fn spread_plot(runs: &[SpreadRun], fits: &[RegimeFits], lambda: f64, sigma_star: f64, c_star: f64) -> Plot {
    let mut series = Vec::new();
    for run in runs {
        let Some(trace) = run.trace(lambda) else { continue };
        let name = run.regime.name();
        series.push(Series {
            label: format!("{name} log R"),
            points: trace.samples.iter().map(|&(t, r)| (t, r.ln())).collect(),
            color: colour(run.regime),
            dashed: false,
        });
        let Some(fit) = fits.iter().find(|f| f.regime == run.regime && f.threshold == lambda) else {
            continue;
        };
        let (t0, t1) = fit.exponential.window;
        let line = |f: &RateFit, t: f64| match f.model {
            RateModel::Exponential => f.intercept + f.estimate * t,
            RateModel::Linear => (f.intercept + f.estimate * t).ln(),
        };
        let chosen = if run.regime == Regime::Classical { &fit.linear } else { &fit.exponential };
        series.push(Series {
            label: format!("{name} fit"),
            points: (0..=20).map(|k| t0 + (t1 - t0) * k as f64 / 20.0).map(|t| (t, line(chosen, t))).collect(),
            color: colour(run.regime),
            dashed: true,
        });
        let y0 = line(chosen, t0);
        let reference: Vec<(f64, f64)> = (0..=20)
            .map(|k| t0 + (t1 - t0) * k as f64 / 20.0)
            .map(|t| match run.regime {
                Regime::Classical => (t, (y0.exp() + c_star * (t - t0)).ln()),
                _ => (t, y0 + sigma_star * (t - t0)),
            })
            .collect();
        series.push(Series {
            label: if run.regime == Regime::Classical {
                format!("c* = {c_star}")
            } else {
                format!("{name} sigma* = {sigma_star}")
            },
            points: reference,
            color: "#7f7f7f",
            dashed: true,
        });
    }
    Plot {
        title: format!("front radius at level {lambda}"),
        x_label: "t".into(),
        y_label: "log R".into(),
        series,
    }
}

/// Spreading runs for the configured regimes with front traces, fits and a plot.
pub fn spread_command(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let sc = cfg.spread_config()?;
    let regimes = cfg.regimes();
    let mut timer = Timer::default();
    let (runs, fits, report) = if regimes.len() == Regime::ALL.len() {
        let cmp = timer.time("regimes", || regime_comparison(&sc))?;
        (cmp.runs, cmp.fits, cmp.report)
    } else {
        let mut report = Report::new();
        let mut runs = Vec::new();
        let mut fits = Vec::new();
        for r in regimes {
            let run = timer.time(r.name(), || run_spread(r, &sc))?;
            fits.extend(regime_checks(&run, &sc, &mut report)?);
            runs.push(run);
        }
        (runs, fits, report)
    };
    let mut artifacts = Vec::new();
    for &lambda in &sc.thresholds {
        let mut csv = Csv::new(&["regime", "t", "R_lambda"]);
        for run in &runs {
            if let Some(trace) = run.trace(lambda) {
                for &(t, r) in &trace.samples {
                    csv.row(&[Cell::Text(run.regime.name()), Cell::Num(t), Cell::Num(r)]);
                }
            }
        }
        artifacts.push(Artifact::new(format!("trace_{lambda}.csv"), csv.into_string()));
    }
    let doc = FitDocument {
        sigma_star: sc.critical_rate(),
        c_star: sc.classical_speed(),
        rate_tolerance: sc.rate_tolerance,
        fits: &fits,
        checks: &report.checks,
    };
    artifacts.push(Artifact::json("fit.json", &doc)?);
    let plot = spread_plot(&runs, &fits, sc.primary_threshold(), sc.critical_rate(), sc.classical_speed());
    artifacts.push(Artifact::new("spread.svg", render(&plot)));
    let manifest = emit_outputs(out_dir, "spread", cfg, &artifacts, timer.into_vec())?;
    Ok(Outcome { report, manifest })
}

/// The traveling-wave residual sweep over tanh profiles and speeds.
pub fn wave_command(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let spec = cfg.symbol()?;
    let reaction = cfg.reaction()?;
    let x = &cfg.experiment;
    let speeds = speed_grid(x.wave_speed_max, x.wave_speed_step);
    let mut timer = Timer::default();
    let rows = timer.time("sweep", || residual_table(&grid, &spec, &reaction, &x.wave_widths, &speeds))?;
    let mut csv = Csv::new(&["width", "c", "residual"]);
    for &(w, c, r) in &rows {
        csv.nums(&[w, c, r]);
    }
    let report = sweep_report(&grid, &spec, &reaction, &rows)?;
    finish(out_dir, "wave", cfg, vec![Artifact::new("wave.csv", csv.into_string())], report, timer)
}
