//! Upwind scheme with operator splitting for the nonlocal balance law.
//!
//! One time step performs: ghost fill → discrete convective convolution
//! R_{j+1/2} → upwind flux update to the half step ρ^{n+1/2} → reactive
//! convolution R_on,j on the ramp cells → source update to ρ^{n+1}.
//! The time step obeys a two-branch CFL condition: a convective bound
//! Δx/(γ_0‖v'‖+‖v‖) and a ramp-rate bound L/(‖q_on‖+‖q_off‖).

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsOptions, DiagnosticsReport, Recorder};
use crate::error::{Error, Result};
use crate::grid::{
    project_initial_datum, DensityField, Grid, InitialDatum, RampGeometry, RampRates,
};
use crate::kernels::{KernelParams, KernelWeights};

/// Velocity law v(ρ) satisfying v' ≤ 0 and v: [0,1] → [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VelocityLaw {
    /// v(ρ) = v_max·(1 − ρ).
    Affine { v_max: f64 },
    /// Monotone piecewise-linear interpolation of (ρ, v) samples on [0, 1].
    Tabulated { points: Vec<(f64, f64)> },
}

impl VelocityLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            VelocityLaw::Affine { v_max } => {
                if !(*v_max > 0.0 && *v_max <= 1.0) {
                    return Err(Error::config(format!(
                        "affine velocity v_max must lie in (0, 1], got {v_max}"
                    )));
                }
            }
            VelocityLaw::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::config("tabulated velocity needs at least two points"));
                }
                if (points[0].0 - 0.0).abs() > 1e-12 || (points[points.len() - 1].0 - 1.0).abs() > 1e-12 {
                    return Err(Error::config("tabulated velocity must cover rho in [0, 1]"));
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::config("tabulated velocity rho values must increase"));
                    }
                    if w[1].1 > w[0].1 + 1e-12 {
                        return Err(Error::config("tabulated velocity must be nonincreasing"));
                    }
                }
                if points.iter().any(|&(_, v)| !(0.0..=1.0).contains(&v)) {
                    return Err(Error::config("tabulated velocity values must lie in [0, 1]"));
                }
            }
        }
        Ok(())
    }

    pub fn v(&self, rho: f64) -> f64 {
        match self {
            VelocityLaw::Affine { v_max } => v_max * (1.0 - rho),
            VelocityLaw::Tabulated { points } => {
                if rho <= points[0].0 {
                    return points[0].1;
                }
                if rho >= points[points.len() - 1].0 {
                    return points[points.len() - 1].1;
                }
                let i = points.partition_point(|&(r, _)| r <= rho) - 1;
                let (r0, v0) = points[i];
                let (r1, v1) = points[i + 1];
                v0 + (v1 - v0) * (rho - r0) / (r1 - r0)
            }
        }
    }

    /// ‖v‖∞ on [0, 1].
    pub fn sup_v(&self) -> f64 {
        match self {
            VelocityLaw::Affine { v_max } => *v_max,
            VelocityLaw::Tabulated { points } => points.iter().fold(0.0, |m, &(_, v)| m.max(v)),
        }
    }

    /// ‖v'‖∞ on [0, 1].
    pub fn sup_dv(&self) -> f64 {
        match self {
            VelocityLaw::Affine { v_max } => *v_max,
            VelocityLaw::Tabulated { points } => points
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
        }
    }

    /// ‖v''‖∞ on [0, 1]. Estimated from second divided differences for
    /// tabulated laws; zero for the affine law.
    pub fn sup_ddv(&self) -> f64 {
        match self {
            VelocityLaw::Affine { .. } => 0.0,
            VelocityLaw::Tabulated { points } => points
                .windows(3)
                .map(|w| {
                    let s0 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                    let s1 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
                    (2.0 * (s1 - s0) / (w[2].0 - w[0].0)).abs()
                })
                .fold(0.0, f64::max),
        }
    }

    /// Local flux f(ρ) = ρ·v(ρ).
    pub fn flux(&self, rho: f64) -> f64 {
        rho * self.v(rho)
    }

    /// argmax of f on [0, 1]; ρ* = 1/2 for the affine law.
    pub fn critical_density(&self) -> f64 {
        match self {
            VelocityLaw::Affine { .. } => 0.5,
            VelocityLaw::Tabulated { .. } => {
                let samples = 10_000;
                (0..=samples)
                    .map(|i| i as f64 / samples as f64)
                    .max_by(|&a, &b| self.flux(a).partial_cmp(&self.flux(b)).unwrap())
                    .unwrap()
            }
        }
    }

    /// max |f'| on [0, 1]; equals v_max for the affine law.
    pub fn max_flux_slope(&self) -> f64 {
        match self {
            VelocityLaw::Affine { v_max } => *v_max,
            VelocityLaw::Tabulated { .. } => {
                let samples = 10_000;
                (0..samples)
                    .map(|i| {
                        let a = i as f64 / samples as f64;
                        let b = (i + 1) as f64 / samples as f64;
                        ((self.flux(b) - self.flux(a)) / (b - a)).abs()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// Selects the on-ramp source term variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// S_on = 1_on·q_on·(1 − R_on). No maximum principle.
    Model0,
    /// S_on = 1_on·q_on·(1 − ρ)(1 − R_on).
    Model1,
    /// S_on = 1_on·q_on·(1 − max{ρ, R_on}).
    Model2,
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelVariant::Model0 => "model0",
            ModelVariant::Model1 => "model1",
            ModelVariant::Model2 => "model2",
        })
    }
}

/// Ghost-cell policy at the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Constant extrapolation of the boundary cells on both sides.
    Outflow,
    /// Fixed Dirichlet value on the left, outflow on the right.
    Inflow { left: f64 },
    /// Periodic wrap; used by conservation tests.
    Periodic,
}

/// Everything a single simulation needs.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub grid: Grid,
    pub ramps: RampGeometry,
    pub rates: RampRates,
    pub velocity: VelocityLaw,
    pub kernel: KernelParams,
    pub variant: ModelVariant,
    pub boundary: BoundaryPolicy,
    pub initial: InitialDatum,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    pub cfl_safety: f64,
    pub diagnostics: DiagnosticsOptions,
}

/// Solution field plus step bookkeeping.
#[derive(Debug, Clone)]
pub struct SchemeState {
    pub field: DensityField,
    pub step: usize,
}

/// Snapshots of the solution at requested output times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<DensityField>,
}

/// Per-step data handed to the diagnostics recorder.
#[derive(Debug, Clone)]
pub struct StepData {
    pub dt: f64,
    pub lambda: f64,
    /// ρ^n.
    pub prev: Vec<f64>,
    /// ρ_{-1}^n, the left ghost value used by the convective step.
    pub prev_left_ghost: f64,
    /// ρ^{n+1/2}.
    pub half: Vec<f64>,
    /// ρ^{n+1}.
    pub next: Vec<f64>,
    /// v(R_{i-1/2}) for interfaces i = 0..=n.
    pub v_interfaces: Vec<f64>,
    pub s_on: Vec<f64>,
    pub s_off: Vec<f64>,
}

impl StepData {
    /// Boundary fluxes (F_in at the left interface, F_out at the right).
    pub fn boundary_fluxes(&self) -> (f64, f64) {
        let n = self.prev.len();
        let f_in = self.prev_left_ghost * self.v_interfaces[0];
        let f_out = self.prev[n - 1] * self.v_interfaces[n];
        (f_in, f_out)
    }
}

/// Δt from the two-branch CFL condition, scaled by the safety factor.
pub fn compute_cfl_dt(
    velocity: &VelocityLaw,
    weights: &KernelWeights,
    ramps: &RampGeometry,
    rates: &RampRates,
    t_end: f64,
    dx: f64,
    safety: f64,
) -> f64 {
    let convective = dx / (weights.gamma0() * velocity.sup_dv() + velocity.sup_v());
    let q_sum = rates.on.sup(t_end) + rates.off.sup(t_end);
    let ramp = if ramps.has_ramps() && q_sum > 0.0 {
        ramps.ramp_length / q_sum
    } else {
        f64::INFINITY
    };
    safety * convective.min(ramp)
}

/// Field padded with `ghost` cells on each side per the boundary policy.
pub fn pad(values: &[f64], ghost: usize, boundary: BoundaryPolicy) -> Vec<f64> {
    let n = values.len();
    let mut padded = vec![0.0; n + 2 * ghost];
    padded[ghost..ghost + n].copy_from_slice(values);
    match boundary {
        BoundaryPolicy::Outflow => {
            padded[..ghost].fill(values[0]);
            padded[ghost + n..].fill(values[n - 1]);
        }
        BoundaryPolicy::Inflow { left } => {
            padded[..ghost].fill(left);
            padded[ghost + n..].fill(values[n - 1]);
        }
        BoundaryPolicy::Periodic => {
            for g in 0..ghost {
                padded[g] = values[n - ghost + g];
                padded[ghost + n + g] = values[g % n];
            }
        }
    }
    padded
}

/// Discrete convective convolutions R_{i-1/2} = Σ_p γ_p ρ_{i+p} for the
/// n+1 interfaces i = 0..=n of a padded field.
pub fn convolution_flux(padded: &[f64], ghost: usize, n: usize, convective: &[f64]) -> Vec<f64> {
    assert!(ghost + 1 >= 1 && padded.len() >= ghost + n + convective.len());
    let mut r = vec![0.0; n + 1];
    for (i, ri) in r.iter_mut().enumerate() {
        let window = &padded[ghost + i..ghost + i + convective.len()];
        let mut acc = 0.0;
        for (w, rho) in convective.iter().zip(window) {
            acc += w * rho;
        }
        *ri = acc;
    }
    r
}

/// Reactive convolution R_on,j = Σ_h γ̂_h ρ_{j+h} for every cell.
pub fn convolution_reactive(padded: &[f64], ghost: usize, n: usize, weights: &KernelWeights) -> Vec<f64> {
    (0..n)
        .map(|j| reactive_at(padded, ghost, j, weights))
        .collect()
}

/// Reactive convolution at a single cell.
pub fn reactive_at(padded: &[f64], ghost: usize, j: usize, weights: &KernelWeights) -> f64 {
    let start = (ghost as i64 + j as i64 + weights.first_reactive_offset) as usize;
    let window = &padded[start..start + weights.reactive.len()];
    let mut acc = 0.0;
    for (w, rho) in weights.reactive.iter().zip(window) {
        acc += w * rho;
    }
    acc
}

/// Upwind convective step ρ_j^{n+1/2} = ρ_j − λ(ρ_j v(R_{j+1/2}) − ρ_{j-1} v(R_{j-1/2})).
///
/// `v_interfaces[i]` holds v(R_{i-1/2}); `padded` is the ρ^n field.
pub fn convective_step(
    padded: &[f64],
    ghost: usize,
    n: usize,
    v_interfaces: &[f64],
    lambda: f64,
) -> Vec<f64> {
    let mut half = vec![0.0; n];
    for j in 0..n {
        let rho_j = padded[ghost + j];
        let rho_jm1 = padded[ghost + j - 1];
        half[j] = rho_j - lambda * (rho_j * v_interfaces[j + 1] - rho_jm1 * v_interfaces[j]);
    }
    half
}

/// On-ramp source value for one cell.
pub fn source_on(variant: ModelVariant, rho: f64, r_on: f64, indicator_on: f64, q_on: f64) -> f64 {
    if indicator_on == 0.0 {
        return 0.0;
    }
    match variant {
        ModelVariant::Model0 => indicator_on * q_on * (1.0 - r_on),
        ModelVariant::Model1 => indicator_on * q_on * (1.0 - rho) * (1.0 - r_on),
        ModelVariant::Model2 => indicator_on * q_on * (1.0 - rho.max(r_on)),
    }
}

/// Off-ramp sink value for one cell.
pub fn source_off(rho: f64, indicator_off: f64, q_off: f64) -> f64 {
    indicator_off * q_off * rho
}

/// Splitting step ρ^{n+1} = ρ^{n+1/2} + Δt·(S_on − S_off).
pub fn source_step(half: &[f64], s_on: &[f64], s_off: &[f64], dt: f64) -> Vec<f64> {
    half.iter()
        .zip(s_on.iter().zip(s_off))
        .map(|(&h, (&on, &off))| h + dt * (on - off))
        .collect()
}

/// The assembled solver for one configuration.
pub struct Solver {
    pub grid: Grid,
    pub ramps: RampGeometry,
    pub rates: RampRates,
    pub velocity: VelocityLaw,
    pub weights: KernelWeights,
    pub variant: ModelVariant,
    pub boundary: BoundaryPolicy,
    pub cfl_dt: f64,
    ghost: usize,
}

impl Solver {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        cfg.velocity.validate()?;
        cfg.rates.on.validate()?;
        cfg.rates.off.validate()?;
        if !(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0) {
            return Err(Error::config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                cfg.cfl_safety
            )));
        }
        if cfg.velocity.sup_v() <= 0.0 {
            return Err(Error::config("velocity law must have positive sup norm"));
        }
        let weights = KernelWeights::build(&cfg.kernel, cfg.grid.dx)?;
        let n_conv = weights.convective.len();
        let h0 = weights.first_reactive_offset;
        let h1 = weights.last_reactive_offset_excl();
        let ghost = [
            1i64,
            n_conv as i64,
            (-h0).max(0),
            (h1 - 1).max(0),
        ]
        .into_iter()
        .max()
        .unwrap() as usize;
        if ghost >= cfg.grid.n_cells {
            return Err(Error::config(format!(
                "kernel stencil of {ghost} cells does not fit the {}-cell grid",
                cfg.grid.n_cells
            )));
        }
        let cfl_dt = compute_cfl_dt(
            &cfg.velocity,
            &weights,
            &cfg.ramps,
            &cfg.rates,
            cfg.t_end,
            cfg.grid.dx,
            cfg.cfl_safety,
        );
        Ok(Self {
            grid: cfg.grid.clone(),
            ramps: cfg.ramps.clone(),
            rates: cfg.rates.clone(),
            velocity: cfg.velocity.clone(),
            weights,
            variant: cfg.variant,
            boundary: cfg.boundary,
            cfl_dt,
            ghost,
        })
    }

    pub fn ghost_width(&self) -> usize {
        self.ghost
    }

    pub fn initial_state(&self, datum: &InitialDatum) -> Result<SchemeState> {
        let field = project_initial_datum(datum, &self.grid)?;
        Ok(SchemeState { field, step: 0 })
    }

    /// Advance one step of size `dt`, returning the step data for
    /// diagnostics.
    pub fn advance(&self, state: &mut SchemeState, dt: f64) -> StepData {
        let n = self.grid.n_cells;
        let t = state.field.time;
        let lambda = dt / self.grid.dx;

        let padded = pad(&state.field.values, self.ghost, self.boundary);
        let r = convolution_flux(&padded, self.ghost, n, &self.weights.convective);
        let v_interfaces: Vec<f64> = r.iter().map(|&x| self.velocity.v(x)).collect();
        let half = convective_step(&padded, self.ghost, n, &v_interfaces, lambda);

        let q_on = self.rates.on.average(t, dt);
        let q_off = self.rates.off.average(t, dt);
        let mut s_on = vec![0.0; n];
        let mut s_off = vec![0.0; n];
        if self.ramps.has_ramps() {
            let padded_half = pad(&half, self.ghost, self.boundary);
            for j in self.ramps.on_cells.clone() {
                let r_on = reactive_at(&padded_half, self.ghost, j, &self.weights);
                s_on[j] = source_on(self.variant, half[j], r_on, self.ramps.indicator_on[j], q_on);
            }
            for j in self.ramps.off_cells.clone() {
                s_off[j] = source_off(half[j], self.ramps.indicator_off[j], q_off);
            }
        }
        let next = source_step(&half, &s_on, &s_off, dt);

        let prev = std::mem::replace(&mut state.field.values, next.clone());
        state.field.time = t + dt;
        state.step += 1;

        StepData {
            dt,
            lambda,
            prev,
            prev_left_ghost: padded[self.ghost - 1],
            half,
            next,
            v_interfaces,
            s_on,
            s_off,
        }
    }
}

/// Run a full simulation, stepping to each output time exactly.
pub fn simulate(cfg: &ModelConfig) -> Result<(Trajectory, DiagnosticsReport)> {
    let solver = Solver::new(cfg)?;
    let mut output_times = cfg.output_times.clone();
    output_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    output_times.dedup();
    if output_times.iter().any(|&t| t < 0.0) {
        return Err(Error::config("output times must be nonnegative"));
    }
    let t_end = output_times.last().copied().unwrap_or(0.0).max(cfg.t_end);

    let mut state = solver.initial_state(&cfg.initial)?;
    let mut recorder = Recorder::new(cfg, &solver, &state.field);

    let mut trajectory = Trajectory {
        times: Vec::new(),
        snapshots: Vec::new(),
    };
    let mut targets = output_times.iter().peekable();
    let mut t = 0.0_f64;
    // Snapshot at t = 0 if requested.
    while let Some(&&target) = targets.peek() {
        if target > 0.0 {
            break;
        }
        trajectory.times.push(target);
        trajectory.snapshots.push(state.field.clone());
        targets.next();
    }
    let mut remaining: Vec<f64> = targets.copied().collect();
    if remaining.is_empty() && t_end > 0.0 {
        remaining.push(t_end);
    }
    remaining.reverse();
    while let Some(target) = remaining.pop() {
        while t < target {
            let dt = if target - t <= solver.cfl_dt * (1.0 + 1e-12) {
                target - t
            } else {
                solver.cfl_dt
            };
            let data = solver.advance(&mut state, dt);
            t = state.field.time;
            recorder.record_step(&data, t);
        }
        // Land on the target exactly; accumulated time may be off by rounding.
        state.field.time = target;
        t = target;
        trajectory.times.push(target);
        trajectory.snapshots.push(state.field.clone());
    }
    Ok((trajectory, recorder.finish()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, build_ramps, Schedule};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn affine() -> VelocityLaw {
        VelocityLaw::Affine { v_max: 1.0 }
    }

    fn weights(eta: f64, delta: f64, dx: f64) -> KernelWeights {
        KernelWeights::build(&KernelParams::new(eta, delta).unwrap(), dx).unwrap()
    }

    fn example1_like_config(variant: ModelVariant) -> ModelConfig {
        let grid = build_grid(-1.0, 9.0, 1.0 / 1000.0).unwrap();
        let ramps = build_ramps(&grid, (1.0, 1.1), (3.0, 3.1), 0.1).unwrap();
        ModelConfig {
            grid,
            ramps,
            rates: RampRates {
                on: Schedule::Constant { value: 1.2 },
                off: Schedule::Constant { value: 0.8 },
            },
            velocity: affine(),
            kernel: KernelParams::new(0.05, -0.01).unwrap(),
            variant,
            boundary: BoundaryPolicy::Outflow,
            initial: InitialDatum::Constant { value: 0.3 },
            t_end: 0.0,
            output_times: vec![],
            cfl_safety: 0.9,
            diagnostics: DiagnosticsOptions::default(),
        }
    }

    #[test]
    fn cfl_two_branch_example() {
        let grid = build_grid(-1.0, 9.0, 1.0 / 1000.0).unwrap();
        let ramps = build_ramps(&grid, (1.0, 1.1), (3.0, 3.1), 0.1).unwrap();
        let rates = RampRates {
            on: Schedule::Constant { value: 1.2 },
            off: Schedule::Constant { value: 0.8 },
        };
        let w = weights(0.05, -0.01, grid.dx);
        let dt = compute_cfl_dt(&affine(), &w, &ramps, &rates, 5.0, grid.dx, 1.0);
        // min{Δx/(γ_0 + 1), L/2.0} = min{9.619e-4, 0.05}
        assert_relative_eq!(dt, 0.001 / (w.gamma0() + 1.0), max_relative = 1e-14);
        assert_relative_eq!(dt, 9.619e-4, max_relative = 1e-4);
    }

    #[test]
    fn cfl_no_ramp_limit() {
        let grid = build_grid(-1.0, 9.0, 1.0 / 1000.0).unwrap();
        let ramps = RampGeometry::none(&grid);
        let w = weights(0.05, -0.01, grid.dx);
        let dt = compute_cfl_dt(&affine(), &w, &ramps, &RampRates::zero(), 5.0, grid.dx, 1.0);
        assert_relative_eq!(dt, grid.dx / (w.gamma0() + 1.0), max_relative = 1e-14);
    }

    #[test]
    fn cfl_scales_linearly_in_dx() {
        let w1 = weights(0.05, 0.0, 0.001);
        let grid1 = build_grid(-1.0, 9.0, 0.001).unwrap();
        let grid2 = build_grid(-1.0, 9.0, 0.002).unwrap();
        let w2 = weights(0.05, 0.0, 0.002);
        let none1 = RampGeometry::none(&grid1);
        let none2 = RampGeometry::none(&grid2);
        let dt1 = compute_cfl_dt(&affine(), &w1, &none1, &RampRates::zero(), 1.0, 0.001, 1.0);
        let dt2 = compute_cfl_dt(&affine(), &w2, &none2, &RampRates::zero(), 1.0, 0.002, 1.0);
        // γ_0 differs slightly between resolutions, but the branch is
        // proportional to Δx at fixed γ_0.
        assert_relative_eq!(dt2 / dt1, 2.0, max_relative = 0.05);
    }

    #[test]
    fn convolution_flux_constant_field() {
        let w = weights(0.005, 0.0, 0.001);
        let padded = vec![0.4; 120];
        let r = convolution_flux(&padded, 10, 100, &w.convective);
        for &x in &r {
            assert_abs_diff_eq!(x, 0.4, epsilon = 1e-14);
        }
    }

    #[test]
    fn convolution_flux_degenerate_stencil() {
        // η = Δx: single weight, R_{j+1/2} = ρ_{j+1}.
        let w = weights(0.001, 0.0, 0.001);
        assert_eq!(w.convective.len(), 1);
        let mut padded = vec![0.0; 14];
        for (i, v) in padded.iter_mut().enumerate() {
            *v = i as f64;
        }
        let r = convolution_flux(&padded, 2, 10, &w.convective);
        for (i, &x) in r.iter().enumerate() {
            // interface i-1/2 sees cell i (padded index i + ghost)
            assert_abs_diff_eq!(x, (i + 2) as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn convolution_flux_two_equal_weights() {
        let conv = vec![0.5, 0.5];
        let mut padded = vec![0.0; 16];
        padded[8] = 1.0; // cell 4 with ghost 4
        let r = convolution_flux(&padded, 4, 8, &conv);
        // interface i-1/2 = cells i, i+1; hit when i = 3 or 4
        assert_abs_diff_eq!(r[3], 0.5);
        assert_abs_diff_eq!(r[4], 0.5);
        assert_abs_diff_eq!(r[2], 0.0);
    }

    #[test]
    fn convolution_reactive_constant_and_bounds() {
        let w = weights(0.005, -0.001, 0.001);
        let padded = vec![0.7; 140];
        let r = convolution_reactive(&padded, 20, 100, &w);
        for &x in &r {
            assert_abs_diff_eq!(x, 0.7, epsilon = 1e-14);
        }
    }

    #[test]
    fn convective_step_constant_fixed_point() {
        let w = weights(0.005, 0.0, 0.001);
        let padded = vec![0.3; 120];
        let r = convolution_flux(&padded, 10, 100, &w.convective);
        let v: Vec<f64> = r.iter().map(|&x| affine().v(x)).collect();
        let half = convective_step(&padded, 10, 100, &v, 0.9);
        for &x in &half {
            assert_abs_diff_eq!(x, 0.3, epsilon = 1e-13);
        }
    }

    #[test]
    fn convective_step_jam_density_fixed_point() {
        let w = weights(0.005, 0.0, 0.001);
        let padded = vec![1.0; 120];
        let r = convolution_flux(&padded, 10, 100, &w.convective);
        let v: Vec<f64> = r.iter().map(|&x| affine().v(x)).collect();
        let half = convective_step(&padded, 10, 100, &v, 0.9);
        for &x in &half {
            assert_abs_diff_eq!(x, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn convective_step_conserves_mass_periodic() {
        let grid = build_grid(0.0, 1.0, 1.0 / 200.0).unwrap();
        let w = weights(0.02, 0.0, grid.dx);
        let ghost = w.convective.len().max(1);
        // Compact bump.
        let values: Vec<f64> = grid
            .cell_centers()
            .map(|x| {
                if (0.3..0.7).contains(&x) {
                    0.5 * (1.0 - ((x - 0.5) / 0.2).powi(2))
                } else {
                    0.0
                }
            })
            .collect();
        let mass_before: f64 = values.iter().sum();
        let padded = pad(&values, ghost, BoundaryPolicy::Periodic);
        let r = convolution_flux(&padded, ghost, grid.n_cells, &w.convective);
        let v: Vec<f64> = r.iter().map(|&x| affine().v(x)).collect();
        let half = convective_step(&padded, ghost, grid.n_cells, &v, 0.9);
        let mass_after: f64 = half.iter().sum();
        // Telescoping oracle: with periodic ghosts the flux differences
        // cancel exactly up to rounding.
        assert_abs_diff_eq!(mass_after, mass_before, epsilon = 1e-14 * grid.n_cells as f64);
    }

    #[test]
    fn source_on_variants() {
        assert_abs_diff_eq!(source_on(ModelVariant::Model1, 1.0, 0.3, 10.0, 1.2), 0.0);
        assert_abs_diff_eq!(source_on(ModelVariant::Model2, 0.3, 0.5, 10.0, 1.2), 6.0);
        assert_abs_diff_eq!(source_on(ModelVariant::Model0, 0.7, 1.0, 10.0, 1.2), 0.0);
    }

    proptest! {
        #[test]
        fn source_monotonicity(rho in 0.0..=1.0f64, r_on in 0.0..=1.0f64, q in 0.0..=2.0f64) {
            let m0 = source_on(ModelVariant::Model0, rho, r_on, 10.0, q);
            let m1 = source_on(ModelVariant::Model1, rho, r_on, 10.0, q);
            let m2 = source_on(ModelVariant::Model2, rho, r_on, 10.0, q);
            prop_assert!(m1 <= m0 + 1e-12);
            prop_assert!(m2 <= m0 + 1e-12);
            prop_assert!(m0 >= 0.0 && m1 >= 0.0 && m2 >= 0.0);
        }

        #[test]
        fn reactive_convolution_tv_contraction(values in proptest::collection::vec(0.0..=1.0f64, 30..60)) {
            let dx = 0.001;
            let w = weights(0.005, -0.002, dx);
            let n = values.len();
            let ghost = 10;
            let padded = pad(&values, ghost, BoundaryPolicy::Outflow);
            let r = convolution_reactive(&padded, ghost, n, &w);
            let tv_r: f64 = r.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
            let tv_rho: f64 = values.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
            prop_assert!(tv_r <= tv_rho + 1e-12);
        }
    }

    #[test]
    fn advance_constant_no_ramps_fixed_point() {
        let mut cfg = example1_like_config(ModelVariant::Model1);
        cfg.ramps = RampGeometry::none(&cfg.grid);
        cfg.rates = RampRates::zero();
        let solver = Solver::new(&cfg).unwrap();
        let mut state = solver.initial_state(&cfg.initial).unwrap();
        let dt = solver.cfl_dt;
        solver.advance(&mut state, dt);
        for &x in &state.field.values {
            assert_abs_diff_eq!(x, 0.3, epsilon = 1e-13);
        }
    }

    #[test]
    fn advance_equals_manual_composition() {
        let cfg = example1_like_config(ModelVariant::Model1);
        let solver = Solver::new(&cfg).unwrap();
        let mut state = solver.initial_state(&cfg.initial).unwrap();
        let dt = solver.cfl_dt;
        let ghost = solver.ghost_width();
        let n = cfg.grid.n_cells;

        // Manual composition of the two sub-steps.
        let padded = pad(&state.field.values, ghost, cfg.boundary);
        let r = convolution_flux(&padded, ghost, n, &solver.weights.convective);
        let v: Vec<f64> = r.iter().map(|&x| cfg.velocity.v(x)).collect();
        let half = convective_step(&padded, ghost, n, &v, dt / cfg.grid.dx);
        let padded_half = pad(&half, ghost, cfg.boundary);
        let q_on = cfg.rates.on.average(0.0, dt);
        let q_off = cfg.rates.off.average(0.0, dt);
        let mut expected = half.clone();
        for j in 0..n {
            let r_on = reactive_at(&padded_half, ghost, j, &solver.weights);
            let on = source_on(cfg.variant, half[j], r_on, cfg.ramps.indicator_on[j], q_on);
            let off = source_off(half[j], cfg.ramps.indicator_off[j], q_off);
            expected[j] += dt * (on - off);
        }

        solver.advance(&mut state, dt);
        for (a, b) in state.field.values.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn models_1_and_2_diverge_on_ramp_after_one_step() {
        let cfg1 = example1_like_config(ModelVariant::Model1);
        let cfg2 = example1_like_config(ModelVariant::Model2);
        let s1 = Solver::new(&cfg1).unwrap();
        let s2 = Solver::new(&cfg2).unwrap();
        let mut st1 = s1.initial_state(&cfg1.initial).unwrap();
        let mut st2 = s2.initial_state(&cfg2.initial).unwrap();
        let dt = s1.cfl_dt;
        s1.advance(&mut st1, dt);
        s2.advance(&mut st2, dt);
        let j = cfg1.ramps.on_cells.start + 50;
        // At ρ = 0.3 the Model 1 source carries an extra (1-ρ) factor.
        assert!((st1.field.values[j] - st2.field.values[j]).abs() > 1e-9);
        // Off the ramps both agree.
        assert_abs_diff_eq!(st1.field.values[0], st2.field.values[0], epsilon = 1e-15);
    }

    #[test]
    fn simulate_snapshot_times_and_t_zero() {
        let mut cfg = example1_like_config(ModelVariant::Model1);
        cfg.grid = build_grid(-1.0, 9.0, 1.0 / 100.0).unwrap();
        cfg.ramps = build_ramps(&cfg.grid, (1.0, 1.1), (3.0, 3.1), 0.1).unwrap();
        cfg.output_times = vec![0.0, 0.05, 0.1];
        let (traj, _) = simulate(&cfg).unwrap();
        assert_eq!(traj.times, vec![0.0, 0.05, 0.1]);
        assert_eq!(traj.snapshots.len(), 3);
        // t = 0 snapshot is the initial projection.
        assert!(traj.snapshots[0].values.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn simulate_deterministic() {
        let mut cfg = example1_like_config(ModelVariant::Model2);
        cfg.grid = build_grid(-1.0, 9.0, 1.0 / 100.0).unwrap();
        cfg.ramps = build_ramps(&cfg.grid, (1.0, 1.1), (3.0, 3.1), 0.1).unwrap();
        cfg.output_times = vec![0.2];
        let (a, _) = simulate(&cfg).unwrap();
        let (b, _) = simulate(&cfg).unwrap();
        assert_eq!(a.snapshots[0].values, b.snapshots[0].values);
    }
}
