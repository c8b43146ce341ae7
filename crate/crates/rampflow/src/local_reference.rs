//! Godunov scheme for the local limit of the model.
//!
//! As the kernel support shrinks, the nonlocal flux ρ·v(ρ*ω_η) tends to
//! the local flux f(ρ) = ρ·v(ρ). This module solves that local balance
//! law with the classical Godunov flux and the same splitting for the
//! ramp sources, providing the reference solution for convergence
//! studies.

use crate::error::Result;
use crate::grid::{project_initial_datum, Grid, InitialDatum, RampGeometry, RampRates};
use crate::scheme::{pad, BoundaryPolicy, ModelConfig, SchemeState, Trajectory, VelocityLaw};

/// Configuration of a local reference run; mirrors [`ModelConfig`]
/// without the kernel.
#[derive(Debug, Clone)]
pub struct LocalConfig {
    pub grid: Grid,
    pub ramps: RampGeometry,
    pub rates: RampRates,
    pub velocity: VelocityLaw,
    pub boundary: BoundaryPolicy,
    pub initial: InitialDatum,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    pub cfl_safety: f64,
}

impl LocalConfig {
    /// The local counterpart of a nonlocal configuration.
    pub fn from_model(cfg: &ModelConfig) -> Self {
        LocalConfig {
            grid: cfg.grid.clone(),
            ramps: cfg.ramps.clone(),
            rates: cfg.rates.clone(),
            velocity: cfg.velocity.clone(),
            boundary: cfg.boundary,
            initial: cfg.initial.clone(),
            t_end: cfg.t_end,
            output_times: cfg.output_times.clone(),
            cfl_safety: cfg.cfl_safety,
        }
    }
}

/// Godunov numerical flux for the concave flux f(ρ) = ρ·v(ρ):
/// the minimum of f over [ul, ur] when ul ≤ ur, otherwise the maximum
/// over [ur, ul], attained at the critical density when it lies inside.
pub fn godunov_flux(velocity: &VelocityLaw, ul: f64, ur: f64) -> f64 {
    if ul <= ur {
        velocity.flux(ul).min(velocity.flux(ur))
    } else {
        velocity.flux(velocity.critical_density().clamp(ur, ul))
    }
}

/// Time step for the local scheme: min{Δx/max|f'|, L/(‖q_on‖+‖q_off‖)}
/// scaled by the safety factor.
pub fn compute_local_cfl_dt(
    velocity: &VelocityLaw,
    ramps: &RampGeometry,
    rates: &RampRates,
    t_end: f64,
    dx: f64,
    safety: f64,
) -> f64 {
    let convective = dx / velocity.max_flux_slope();
    let q_sum = rates.on.sup(t_end) + rates.off.sup(t_end);
    let ramp = if ramps.has_ramps() && q_sum > 0.0 {
        ramps.ramp_length / q_sum
    } else {
        f64::INFINITY
    };
    safety * convective.min(ramp)
}

/// One Godunov step with source splitting.
pub fn local_step(cfg: &LocalConfig, state: &mut SchemeState, dt: f64) {
    let n = cfg.grid.n_cells;
    let lambda = dt / cfg.grid.dx;
    let t = state.field.time;
    let padded = pad(&state.field.values, 1, cfg.boundary);

    let mut fluxes = vec![0.0; n + 1];
    for (i, f) in fluxes.iter_mut().enumerate() {
        *f = godunov_flux(&cfg.velocity, padded[i], padded[i + 1]);
    }
    let mut half = vec![0.0; n];
    for j in 0..n {
        half[j] = padded[j + 1] - lambda * (fluxes[j + 1] - fluxes[j]);
    }

    if cfg.ramps.has_ramps() {
        let q_on = cfg.rates.on.average(t, dt);
        let q_off = cfg.rates.off.average(t, dt);
        for j in cfg.ramps.on_cells.clone() {
            half[j] += dt * cfg.ramps.indicator_on[j] * q_on * (1.0 - half[j]);
        }
        for j in cfg.ramps.off_cells.clone() {
            half[j] -= dt * cfg.ramps.indicator_off[j] * q_off * half[j];
        }
    }

    state.field.values = half;
    state.field.time = t + dt;
    state.step += 1;
}

/// Run the local reference simulation, stepping to each output time
/// exactly.
pub fn simulate_local(cfg: &LocalConfig) -> Result<Trajectory> {
    cfg.velocity.validate()?;
    cfg.rates.on.validate()?;
    cfg.rates.off.validate()?;
    let mut output_times = cfg.output_times.clone();
    output_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    output_times.dedup();
    let t_end = output_times.last().copied().unwrap_or(0.0).max(cfg.t_end);
    let dt_max = compute_local_cfl_dt(
        &cfg.velocity,
        &cfg.ramps,
        &cfg.rates,
        t_end,
        cfg.grid.dx,
        cfg.cfl_safety,
    );

    let field = project_initial_datum(&cfg.initial, &cfg.grid)?;
    let mut state = SchemeState { field, step: 0 };
    let mut trajectory = Trajectory {
        times: Vec::new(),
        snapshots: Vec::new(),
    };
    let mut remaining: Vec<f64> = output_times.into_iter().filter(|&t| t > 0.0).rev().collect();
    if cfg.output_times.iter().any(|&t| t == 0.0) {
        trajectory.times.push(0.0);
        trajectory.snapshots.push(state.field.clone());
    }
    let mut t = 0.0_f64;
    while let Some(target) = remaining.pop() {
        while t < target {
            let dt = if target - t <= dt_max * (1.0 + 1e-12) {
                target - t
            } else {
                dt_max
            };
            local_step(cfg, &mut state, dt);
            t = state.field.time;
        }
        state.field.time = target;
        t = target;
        trajectory.times.push(target);
        trajectory.snapshots.push(state.field.clone());
    }
    Ok(trajectory)
}
