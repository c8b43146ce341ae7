//! Uniform mesh, ramp geometry with discrete indicators, time-varying
//! ramp rates and cell-averaged initial data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ALIGN_TOL;

/// Uniform spatial mesh. Interfaces sit at `x_left + j·dx`, cell centers
/// at `x_left + (j + 1/2)·dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x_left: f64,
    pub x_right: f64,
    pub dx: f64,
    pub n_cells: usize,
}

impl Grid {
    pub fn cell_center(&self, j: usize) -> f64 {
        self.x_left + (j as f64 + 0.5) * self.dx
    }

    pub fn interface(&self, j: usize) -> f64 {
        self.x_left + j as f64 * self.dx
    }

    pub fn cell_centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(|j| self.cell_center(j))
    }
}

pub fn build_grid(x_left: f64, x_right: f64, dx: f64) -> Result<Grid> {
    if !(dx > 0.0) {
        return Err(Error::config(format!("dx must be positive, got {dx}")));
    }
    if x_left >= x_right {
        return Err(Error::config(format!(
            "domain bounds must satisfy x_left < x_right, got [{x_left}, {x_right}]"
        )));
    }
    let width = x_right - x_left;
    let ratio = width / dx;
    let n = ratio.round();
    if (ratio - n).abs() > ALIGN_TOL * ratio.max(1.0) {
        return Err(Error::config(format!(
            "domain width {width} is not an integer multiple of dx = {dx}"
        )));
    }
    Ok(Grid {
        x_left,
        x_right,
        dx,
        n_cells: n as usize,
    })
}

/// On- and off-ramp intervals with their discrete indicator weights
/// 1_on,j and 1_off,j (value 1/L on ramp cells, 0 elsewhere).
#[derive(Debug, Clone)]
pub struct RampGeometry {
    /// Cell index range of the on-ramp, empty when there is no on-ramp.
    pub on_cells: std::ops::Range<usize>,
    pub off_cells: std::ops::Range<usize>,
    pub ramp_length: f64,
    pub indicator_on: Vec<f64>,
    pub indicator_off: Vec<f64>,
}

impl RampGeometry {
    /// Geometry with no ramps; all indicators zero.
    pub fn none(grid: &Grid) -> Self {
        Self {
            on_cells: 0..0,
            off_cells: 0..0,
            ramp_length: 1.0,
            indicator_on: vec![0.0; grid.n_cells],
            indicator_off: vec![0.0; grid.n_cells],
        }
    }

    pub fn has_ramps(&self) -> bool {
        !self.on_cells.is_empty() || !self.off_cells.is_empty()
    }
}

fn interval_cells(
    grid: &Grid,
    (start, end): (f64, f64),
    length: f64,
    name: &str,
) -> Result<std::ops::Range<usize>> {
    if ((end - start) - length).abs() > ALIGN_TOL * length.max(1.0) {
        return Err(Error::config(format!(
            "{name} interval [{start}, {end}] does not have length L = {length}"
        )));
    }
    if start < grid.x_left - ALIGN_TOL || end > grid.x_right + ALIGN_TOL {
        return Err(Error::config(format!(
            "{name} interval [{start}, {end}] not inside domain [{}, {}]",
            grid.x_left, grid.x_right
        )));
    }
    let lo = (start - grid.x_left) / grid.dx;
    let hi = (end - grid.x_left) / grid.dx;
    for (r, edge) in [(lo, start), (hi, end)] {
        if (r - r.round()).abs() > ALIGN_TOL * r.abs().max(1.0) {
            return Err(Error::config(format!(
                "{name} endpoint {edge} does not coincide with a cell interface"
            )));
        }
    }
    Ok(lo.round() as usize..hi.round() as usize)
}

pub fn build_ramps(
    grid: &Grid,
    on_interval: (f64, f64),
    off_interval: (f64, f64),
    ramp_length: f64,
) -> Result<RampGeometry> {
    let ell = ramp_length / grid.dx;
    if ell < 1.0 - ALIGN_TOL || (ell - ell.round()).abs() > ALIGN_TOL * ell.max(1.0) {
        return Err(Error::config(format!(
            "ramp length L = {ramp_length} must be a positive integer multiple of dx = {}",
            grid.dx
        )));
    }
    let on_cells = interval_cells(grid, on_interval, ramp_length, "on-ramp")?;
    let off_cells = interval_cells(grid, off_interval, ramp_length, "off-ramp")?;
    if on_cells.start < off_cells.end && off_cells.start < on_cells.end {
        return Err(Error::config(format!(
            "on-ramp cells {on_cells:?} overlap off-ramp cells {off_cells:?}"
        )));
    }
    let mut indicator_on = vec![0.0; grid.n_cells];
    let mut indicator_off = vec![0.0; grid.n_cells];
    for j in on_cells.clone() {
        indicator_on[j] = 1.0 / ramp_length;
    }
    for j in off_cells.clone() {
        indicator_off[j] = 1.0 / ramp_length;
    }
    Ok(RampGeometry {
        on_cells,
        off_cells,
        ramp_length,
        indicator_on,
        indicator_off,
    })
}

/// Time schedule for a ramp rate q(t) ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Constant { value: f64 },
    /// a·(sin(πt)+1)/2.
    Sinusoidal { amplitude: f64 },
    /// Piecewise-linear table of (t, q) samples; constant extrapolation
    /// outside the tabulated range.
    Tabulated { points: Vec<(f64, f64)> },
}

impl Schedule {
    pub fn zero() -> Self {
        Schedule::Constant { value: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Schedule::Constant { value } => {
                if *value < 0.0 {
                    return Err(Error::config(format!("ramp rate must be >= 0, got {value}")));
                }
            }
            Schedule::Sinusoidal { amplitude } => {
                if *amplitude < 0.0 {
                    return Err(Error::config(format!(
                        "sinusoidal rate amplitude must be >= 0, got {amplitude}"
                    )));
                }
            }
            Schedule::Tabulated { points } => {
                if points.is_empty() {
                    return Err(Error::config("tabulated rate needs at least one point"));
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::config("tabulated rate times must be increasing"));
                    }
                }
                if points.iter().any(|&(_, q)| q < 0.0) {
                    return Err(Error::config("tabulated rate values must be >= 0"));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Schedule::Constant { value } => *value,
            Schedule::Sinusoidal { amplitude } => {
                amplitude * ((std::f64::consts::PI * t).sin() + 1.0) / 2.0
            }
            Schedule::Tabulated { points } => {
                if t <= points[0].0 {
                    return points[0].1;
                }
                if t >= points[points.len() - 1].0 {
                    return points[points.len() - 1].1;
                }
                let i = points.partition_point(|&(ti, _)| ti <= t) - 1;
                let (t0, q0) = points[i];
                let (t1, q1) = points[i + 1];
                q0 + (q1 - q0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Supremum over [0, t_end].
    pub fn sup(&self, t_end: f64) -> f64 {
        match self {
            Schedule::Constant { value } => *value,
            Schedule::Sinusoidal { amplitude } => {
                if t_end >= 0.5 {
                    *amplitude
                } else {
                    self.value(t_end)
                }
            }
            Schedule::Tabulated { points } => points
                .iter()
                .take_while(|&&(ti, _)| ti <= t_end)
                .map(|&(_, q)| q)
                .chain(std::iter::once(self.value(t_end)))
                .fold(self.value(0.0), f64::max),
        }
    }

    /// ∫_{t0}^{t1} q(t) dt, closed form where the schedule allows.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Schedule::Constant { value } => value * (t1 - t0),
            Schedule::Sinusoidal { amplitude } => {
                // ∫ a(sin(πt)+1)/2 dt = a/2·(t − cos(πt)/π)
                let pi = std::f64::consts::PI;
                let prim = |t: f64| 0.5 * amplitude * (t - (pi * t).cos() / pi);
                prim(t1) - prim(t0)
            }
            Schedule::Tabulated { .. } => {
                // Trapezoid over the sample points clipped to [t0, t1].
                let panels = 256;
                let h = (t1 - t0) / panels as f64;
                let mut acc = 0.5 * (self.value(t0) + self.value(t1));
                for i in 1..panels {
                    acc += self.value(t0 + i as f64 * h);
                }
                acc * h
            }
        }
    }

    /// Time average q^{n+1/2} = (1/Δt)·∫_{t}^{t+Δt} q dτ.
    pub fn average(&self, t: f64, dt: f64) -> f64 {
        if dt == 0.0 {
            return self.value(t);
        }
        self.integral(t, t + dt) / dt
    }
}

/// On- and off-ramp rate schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampRates {
    pub on: Schedule,
    pub off: Schedule,
}

impl RampRates {
    pub fn zero() -> Self {
        Self {
            on: Schedule::zero(),
            off: Schedule::zero(),
        }
    }
}

/// Initial datum ρ_0 mapping into [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDatum {
    Constant { value: f64 },
    /// left for x <= at, right for x > at.
    Step { left: f64, right: f64, at: f64 },
}

/// Cell-averaged densities at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub values: Vec<f64>,
    pub time: f64,
}

/// Exact cell averages of constant and step data.
pub fn project_initial_datum(datum: &InitialDatum, grid: &Grid) -> Result<DensityField> {
    let check = |v: f64| -> Result<()> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::data(format!("initial density {v} outside [0, 1]")));
        }
        Ok(())
    };
    let values = match datum {
        InitialDatum::Constant { value } => {
            check(*value)?;
            vec![*value; grid.n_cells]
        }
        InitialDatum::Step { left, right, at } => {
            check(*left)?;
            check(*right)?;
            (0..grid.n_cells)
                .map(|j| {
                    let (xl, xr) = (grid.interface(j), grid.interface(j + 1));
                    if *at <= xl {
                        *right
                    } else if *at >= xr {
                        *left
                    } else {
                        (left * (at - xl) + right * (xr - at)) / grid.dx
                    }
                })
                .collect()
        }
    };
    Ok(DensityField { values, time: 0.0 })
}

/// Midpoint-rule cell averages of a general datum.
pub fn project_fn(rho0: impl Fn(f64) -> f64, grid: &Grid) -> Result<DensityField> {
    let values: Vec<f64> = grid.cell_centers().map(&rho0).collect();
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::data(format!("initial density {v} outside [0, 1]")));
    }
    Ok(DensityField { values, time: 0.0 })
}
