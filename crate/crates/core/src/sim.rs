//! Time integration of `ẏ = (A y')' + M(x) y` on the finite-volume grid.
//!
//! Crank–Nicolson with backward-Euler damping. Crank–Nicolson maps stiff
//! modes to factors near −1, so stiff content outlives a fast-decaying
//! principal mode and ends up dominating it. Steps are therefore taken as
//! two backward-Euler half steps (positivity preserving, stiff modes damped)
//! at the start, once per damping interval of fixed length in time (so
//! the scheme stays second order in `dt`), and whenever a Crank–Nicolson
//! step dips below `−UNDERSHOOT_TOL·‖y‖∞`. Both schemes share the matrix
//! `(2/dt)·I − L`.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_layout, BoundaryCondition, ModelError, PatchLayout, Resolution, SpectralMethod, SpectralReport};
use crate::oracle::{assemble, DiscreteOperator, GridSpec};

/// Renormalize once `‖y‖∞` leaves `[1/RENORM_BOUND, RENORM_BOUND]`.
pub const RENORM_BOUND: f64 = 1e100;

/// Largest RMS residual of the affine fit accepted by [`growth_exponent`].
pub const FIT_RESIDUAL_TOL: f64 = 1e-3;

/// Relative undershoot that triggers the backward-Euler fallback.
pub const UNDERSHOOT_TOL: f64 = 1e-13;

/// Minimum number of steps over a default horizon.
pub const DEFAULT_STEPS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error(transparent)]
    Layout(#[from] ModelError),
    #[error("Instability: non-finite solution at t = {t}")]
    Instability { t: f64 },
    #[error("TransientNotResolved: affine-fit residual {residual:.3e} exceeds {FIT_RESIDUAL_TOL:.0e}; try a longer horizon")]
    TransientNotResolved { residual: f64 },
    #[error("step matrix is singular")]
    Singular,
}

/// Everything needed to reproduce a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub layout: PatchLayout,
    pub grid: GridSpec,
    /// Grid level of `grid` to integrate on.
    pub level: u32,
    /// Nodal values, node-major; `None` selects the default bump.
    pub initial_profile: Option<Vec<f64>>,
    pub dt: f64,
    pub horizon: f64,
    pub snapshot_times: Vec<f64>,
}

impl SimulationRun {
    /// Default horizon `20/max(|λ|, 0.1)` with `λ` the largest reaction
    /// entry of the beneficial zone; see [`default_dt`] for the step.
    pub fn new(layout: PatchLayout) -> Self {
        let (ben, _) = layout.zones.as_stage_zones();
        let horizon = 20.0 / ben.reaction.max_abs().max(0.1);
        Self {
            dt: default_dt(&layout, horizon),
            layout,
            grid: GridSpec::default(),
            level: 0,
            initial_profile: None,
            horizon,
            snapshot_times: Vec::new(),
        }
    }

    /// Sets the horizon and resets the step to [`default_dt`].
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self.dt = default_dt(&self.layout, horizon);
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_grid(mut self, grid: GridSpec, level: u32) -> Self {
        self.grid = grid;
        self.level = level;
        self
    }

    pub fn with_initial_profile(mut self, y0: Vec<f64>) -> Self {
        self.initial_profile = Some(y0);
        self
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn operator(&self) -> DiscreteOperator {
        assemble(&self.layout, &self.grid, self.level)
    }
}

/// Upper bound `ρ ≥ |E|` on the principal decay rate: `max|M|` over the
/// zones present (no control zone when `r = 0`), plus `a_max·(π/L)²` under
/// absorbing ends.
pub fn decay_rate_bound(layout: &PatchLayout) -> f64 {
    let (ben, ctl) = layout.zones.as_stage_zones();
    let mut zones = vec![&ben];
    if layout.control_width > 0.0 {
        zones.push(&ctl);
    }
    let mut rate = zones.iter().map(|z| z.reaction.max_abs()).fold(0.0, f64::max);
    if layout.bc == BoundaryCondition::Dirichlet {
        let a_max = zones.iter().flat_map(|z| z.diffusion.iter()).cloned().fold(0.0, f64::max);
        rate += a_max * (PI / layout.domain_length()).powi(2);
    }
    rate
}

/// `min(T/DEFAULT_STEPS, 0.02/ρ)` with `ρ` from [`decay_rate_bound`], so
/// the principal mode is resolved with `|E|·dt ≤ 0.02`.
pub fn default_dt(layout: &PatchLayout, horizon: f64) -> f64 {
    let by_steps = horizon / DEFAULT_STEPS as f64;
    let rate = decay_rate_bound(layout);
    if rate > 0.0 {
        by_steps.min(0.02 / rate)
    } else {
        by_steps
    }
}

/// `min(T/20, 1/ρ)`: stiff content grows by at most `e` relative to the
/// principal mode between damping steps.
pub fn damping_interval(layout: &PatchLayout, horizon: f64) -> f64 {
    let rate = decay_rate_bound(layout);
    let by_horizon = horizon / 20.0;
    if rate > 0.0 {
        by_horizon.min(1.0 / rate)
    } else {
        by_horizon
    }
}

/// Normalized Gaussian of width `R/8` centred in the first beneficial
/// zone, identical in every stage.
pub fn default_profile(layout: &PatchLayout, op: &DiscreteOperator) -> Vec<f64> {
    let centre = layout.patch_width / 2.0;
    let width = layout.patch_width / 8.0;
    let n = op.stages;
    let mut y = Vec::with_capacity(op.nodes * n);
    for &x in &op.positions {
        let g = (-0.5 * ((x - centre) / width).powi(2)).exp();
        y.extend(std::iter::repeat(g).take(n));
    }
    let norm = op.l2_norm(&y, None);
    y.iter_mut().for_each(|v| *v /= norm);
    y
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub profile: Vec<f64>,
}

/// Recorded output of [`simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub stages: usize,
    pub dt: f64,
    pub horizon: f64,
    pub positions: Vec<f64>,
    pub times: Vec<f64>,
    pub log_l2_norm: Vec<f64>,
    pub total_mass: Vec<f64>,
    /// `log ‖y_s‖₂` per stage, recorded only when there are several stages.
    pub stage_log_norms: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    /// `min_t min_i y_i(t)/‖y(t)‖∞`.
    pub min_relative_density: f64,
    /// Steps taken as backward-Euler half-step pairs.
    pub damped_steps: usize,
}

/// Integrates `run` from 0 to its horizon.
pub fn simulate(run: &SimulationRun) -> Result<Trajectory, SimError> {
    let layout = validate_layout(run.layout.clone())?;
    if !(run.dt > 0.0 && run.dt.is_finite()) {
        return Err(SimError::InvalidRun(format!("dt must be positive, got {}", run.dt)));
    }
    if !(run.horizon >= 10.0 * run.dt) {
        return Err(SimError::InvalidRun(format!(
            "horizon {} is shorter than 10 steps of {}",
            run.horizon, run.dt
        )));
    }
    let op = assemble(&layout, &run.grid, run.level);
    let mut y = match &run.initial_profile {
        Some(y0) => {
            if y0.len() != op.nodes * op.stages {
                return Err(SimError::InvalidRun(format!(
                    "initial profile has {} values, grid needs {}",
                    y0.len(),
                    op.nodes * op.stages
                )));
            }
            if y0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || y0.iter().all(|v| *v == 0.0) {
                return Err(SimError::InvalidRun("initial profile must be nonnegative and nonzero".into()));
            }
            y0.clone()
        }
        None => default_profile(&layout, &op),
    };

    let steps = (run.horizon / run.dt).round() as usize;
    let dt = run.horizon / steps as f64;
    let two_over_dt = 2.0 / dt;
    let lu = op.factor(two_over_dt, 1.0).ok_or(SimError::Singular)?;

    let mut traj = Trajectory {
        stages: op.stages,
        dt,
        horizon: run.horizon,
        positions: op.positions.clone(),
        times: Vec::with_capacity(steps + 1),
        log_l2_norm: Vec::with_capacity(steps + 1),
        total_mass: Vec::with_capacity(steps + 1),
        stage_log_norms: vec![Vec::new(); if op.stages > 1 { op.stages } else { 0 }],
        snapshots: Vec::new(),
        min_relative_density: f64::INFINITY,
        damped_steps: 0,
    };
    let mut pending: Vec<f64> = run.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    let mut pending = pending.into_iter().peekable();
    let mut log_scale = 0.0;

    let backward_euler = |y: &[f64]| lu.solve(&y.iter().map(|v| two_over_dt * v).collect::<Vec<_>>());
    let interval = damping_interval(&layout, run.horizon);
    let epoch = |k: usize| ((k as f64 - 1.0) * dt / interval).floor() as i64;
    for k in 0..=steps {
        let t = k as f64 * dt;
        if k > 0 {
            let cn = if k == 1 || epoch(k) != epoch(k - 1) {
                None
            } else {
                let ly = op.apply(&y);
                let rhs: Vec<f64> = y.iter().zip(&ly).map(|(v, l)| two_over_dt * v + l).collect();
                Some(lu.solve(&rhs)).filter(|next| {
                    let sup = next.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                    next.iter().all(|v| *v >= -UNDERSHOOT_TOL * sup)
                })
            };
            y = match cn {
                Some(next) => next,
                None => {
                    traj.damped_steps += 1;
                    backward_euler(&backward_euler(&y))
                }
            };
        }
        let sup = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !sup.is_finite() {
            return Err(SimError::Instability { t });
        }
        if sup > RENORM_BOUND || (sup > 0.0 && sup < 1.0 / RENORM_BOUND) {
            y.iter_mut().for_each(|v| *v /= sup);
            log_scale += sup.ln();
        }
        let sup = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let low = y.iter().cloned().fold(f64::INFINITY, f64::min);
        traj.min_relative_density = traj.min_relative_density.min(low / sup);

        traj.times.push(t);
        traj.log_l2_norm.push(op.l2_norm(&y, None).ln() + log_scale);
        traj.total_mass.push(op.mass(&y) * log_scale.exp());
        for (s, series) in traj.stage_log_norms.iter_mut().enumerate() {
            series.push(op.l2_norm(&y, Some(s)).ln() + log_scale);
        }
        while let Some(&ts) = pending.peek() {
            if ts > t + 0.5 * dt {
                break;
            }
            let factor = log_scale.exp();
            traj.snapshots.push(Snapshot {
                t,
                profile: y.iter().map(|v| v * factor).collect(),
            });
            pending.next();
        }
    }
    Ok(traj)
}

/// Least-squares slope of `log ‖y(t)‖₂` over the second half of the horizon.
pub fn growth_exponent(traj: &Trajectory) -> Result<f64, SimError> {
    let (slope, residual) = affine_fit(traj);
    if residual > FIT_RESIDUAL_TOL {
        return Err(SimError::TransientNotResolved { residual });
    }
    Ok(slope)
}

/// The slope as a spectral estimate.
pub fn growth_report(traj: &Trajectory) -> Result<SpectralReport, SimError> {
    let (slope, residual) = affine_fit(traj);
    if residual > FIT_RESIDUAL_TOL {
        return Err(SimError::TransientNotResolved { residual });
    }
    Ok(SpectralReport {
        top_eigenvalue: slope,
        method: SpectralMethod::SimulationSlope,
        error_estimate: residual,
        resolution: Resolution::TimeStep(traj.dt),
    })
}

/// `(slope, rms residual)` over `t ≥ T/2`.
fn affine_fit(traj: &Trajectory) -> (f64, f64) {
    let half = traj.horizon / 2.0;
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.log_l2_norm)
        .filter(|(t, _)| **t >= half)
        .map(|(t, l)| (*t, *l))
        .collect();
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum();
    let slope = sxy / sxx;
    let rss: f64 = pts.iter().map(|p| (p.1 - lm - slope * (p.0 - tm)).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

/// `x` with `digits` significant digits, trailing zeros trimmed.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Columns `t,log_l2_norm,total_mass` plus `log_l2_norm_stage<j>` per stage.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    let mut header = String::from("t,log_l2_norm,total_mass");
    for s in 0..traj.stage_log_norms.len() {
        header.push_str(&format!(",log_l2_norm_stage{s}"));
    }
    writeln!(out, "{header}")?;
    for k in 0..traj.times.len() {
        let mut row = format!(
            "{},{},{}",
            format_significant(traj.times[k], 6),
            format_significant(traj.log_l2_norm[k], 6),
            format_significant(traj.total_mass[k], 6)
        );
        for series in &traj.stage_log_norms {
            row.push(',');
            row.push_str(&format_significant(series[k], 6));
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Columns `x,stage_index,density` for one snapshot of `traj`.
pub fn write_snapshot_csv<W: Write>(traj: &Trajectory, snap: &Snapshot, mut out: W) -> io::Result<()> {
    writeln!(out, "x,stage_index,density")?;
    let n = traj.stages;
    for (i, x) in traj.positions.iter().enumerate() {
        for s in 0..n {
            writeln!(
                out,
                "{},{},{}",
                format_significant(*x, 6),
                s,
                format_significant(snap.profile[i * n + s], 6)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScalarZone;

    fn scalar_layout(a: f64, lambda: f64, big_r: f64, r: f64, mu: f64, bc: BoundaryCondition) -> PatchLayout {
        PatchLayout::scalar(ScalarZone::new(a, lambda), ScalarZone::control(a, mu), big_r, r, 1, bc)
    }

    #[test]
    fn formats_significant_digits() {
        assert_eq!(format_significant(15.9134, 4), "15.91");
        assert_eq!(format_significant(0.000123456789, 6), "0.000123457");
        assert_eq!(format_significant(1234567.0, 6), "1.23457e6");
        assert_eq!(format_significant(-2.5, 6), "-2.5");
        assert_eq!(format_significant(0.0, 6), "0");
        assert_eq!(format_significant(100.0, 6), "100");
    }

    #[test]
    fn pure_kiss_exponent() {
        let layout = scalar_layout(1.0, 5.0, PI, 0.0, 0.0, BoundaryCondition::Dirichlet);
        let run = SimulationRun::new(layout).with_horizon(4.0);
        let traj = simulate(&run).unwrap();
        assert!((growth_exponent(&traj).unwrap() - 4.0).abs() < 1e-2);
        assert!(traj.min_relative_density >= -1e-12);
    }

    #[test]
    fn neumann_mass_conservation() {
        let layout = scalar_layout(1.0, 0.0, 2.0, 1.0, 0.0, BoundaryCondition::Neumann);
        let run = SimulationRun::new(layout).with_horizon(5.0);
        let traj = simulate(&run).unwrap();
        let m0 = traj.total_mass[0];
        let drift = traj.total_mass.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-10 * 5.0 * m0.max(1.0), "drift {drift}");
    }

    #[test]
    fn renormalization_keeps_growth_finite() {
        let layout = scalar_layout(1.0, 50.0, 1.0, 0.0, 0.0, BoundaryCondition::Periodic);
        let run = SimulationRun::new(layout).with_horizon(20.0).with_dt(2.5e-4);
        let traj = simulate(&run).unwrap();
        assert!(traj.log_l2_norm.last().unwrap().is_finite());
        let e = growth_exponent(&traj).unwrap();
        assert!((e - 50.0).abs() < 1e-2, "exponent {e}, {} damped steps", traj.damped_steps);
    }

    #[test]
    fn rejects_bad_runs() {
        let layout = scalar_layout(1.0, 1.0, 1.0, 1.0, 1.0, BoundaryCondition::Neumann);
        let run = SimulationRun::new(layout.clone()).with_dt(0.0);
        assert!(matches!(simulate(&run), Err(SimError::InvalidRun(_))));
        let run = SimulationRun::new(layout.clone()).with_horizon(1.0).with_dt(0.5);
        assert!(matches!(simulate(&run), Err(SimError::InvalidRun(_))));
        let run = SimulationRun::new(layout).with_initial_profile(vec![0.0; 3]);
        assert!(matches!(simulate(&run), Err(SimError::InvalidRun(_))));
    }

    #[test]
    fn snapshots_at_requested_times() {
        let layout = scalar_layout(1.0, 1.0, 1.0, 1.0, 1.0, BoundaryCondition::Neumann);
        let run = SimulationRun::new(layout).with_horizon(1.0).with_snapshots(vec![0.0, 0.5, 1.0]);
        let traj = simulate(&run).unwrap();
        assert_eq!(traj.snapshots.len(), 3);
        assert!((traj.snapshots[1].t - 0.5).abs() <= traj.dt / 2.0);
        let mut buf = Vec::new();
        write_snapshot_csv(&traj, &traj.snapshots[1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,stage_index,density\n"));
        assert_eq!(text.lines().count(), 1 + traj.positions.len());
    }
}
