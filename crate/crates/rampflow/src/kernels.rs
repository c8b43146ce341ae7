//! Convolution kernels and their cell-integrated discrete weights.
//!
//! Two kernel families are supported: the convective kernel
//! ω_η(x) = 2(η−x)/η² on [0, η], and the reactive kernel
//! ω_{η,δ}(x) = (16/(5πη⁶))(η²−(x−δ)²)^{5/2} on [δ−η, δ+η].
//! Both integrate to one over their support. The discrete weights are
//! the kernel integrals over mesh cells, renormalized so the partition
//! of unity holds exactly at working precision.

use crate::error::{Error, Result};

/// Relative tolerance for mesh alignment of kernel supports.
pub const ALIGN_TOL: f64 = 1e-9;

/// Kernel support radius η and reactive shift δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub eta: f64,
    pub delta: f64,
}

impl KernelParams {
    pub fn new(eta: f64, delta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::config(format!("kernel eta must be positive, got {eta}")));
        }
        if delta < -eta || delta > eta {
            return Err(Error::config(format!(
                "kernel delta must lie in [-eta, eta] = [{}, {}], got {delta}",
                -eta, eta
            )));
        }
        Ok(Self { eta, delta })
    }
}

/// Discrete convolution weights γ_p (convective) and γ̂_h (reactive).
///
/// The convective weights cover offsets p = 0..N-1 with N = η/Δx; the
/// reactive weights cover offsets h = first_reactive_offset.. and are
/// indexed relative to that first offset.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    pub convective: Vec<f64>,
    pub reactive: Vec<f64>,
    pub first_reactive_offset: i64,
}

impl KernelWeights {
    pub fn build(params: &KernelParams, dx: f64) -> Result<Self> {
        let convective = discretize_convective_weights(params, dx)?;
        let (reactive, first_reactive_offset) = discretize_reactive_weights(params, dx)?;
        Ok(Self {
            convective,
            reactive,
            first_reactive_offset,
        })
    }

    /// Largest convective weight, γ_0. Enters the CFL condition.
    pub fn gamma0(&self) -> f64 {
        self.convective[0]
    }

    /// One past the last reactive offset: h ranges over
    /// `first_reactive_offset..last_reactive_offset_excl`.
    pub fn last_reactive_offset_excl(&self) -> i64 {
        self.first_reactive_offset + self.reactive.len() as i64
    }
}

/// ω_η(x) = 2(η−x)/η² for x ∈ [0, η].
pub fn eval_convective_kernel(x: f64, params: &KernelParams) -> Result<f64> {
    let eta = params.eta;
    if x < 0.0 || x > eta {
        return Err(Error::domain(format!(
            "convective kernel argument {x} outside [0, {eta}]"
        )));
    }
    Ok(2.0 * (eta - x) / (eta * eta))
}

/// ω_{η,δ}(x) = (16/(5πη⁶))(η²−(x−δ)²)^{5/2} for x ∈ [δ−η, δ+η].
pub fn eval_reactive_kernel(x: f64, params: &KernelParams) -> Result<f64> {
    let (eta, delta) = (params.eta, params.delta);
    if x < delta - eta || x > delta + eta {
        return Err(Error::domain(format!(
            "reactive kernel argument {x} outside [{}, {}]",
            delta - eta,
            delta + eta
        )));
    }
    let u = x - delta;
    // The radicand can go ~1 ulp negative at the support edge.
    let r = (eta * eta - u * u).max(0.0);
    Ok(16.0 / (5.0 * std::f64::consts::PI * eta.powi(6)) * r.powf(2.5))
}

fn aligned_ratio(value: f64, dx: f64, what: &str) -> Result<i64> {
    let ratio = value / dx;
    let rounded = ratio.round();
    let scale = ratio.abs().max(1.0);
    if (ratio - rounded).abs() > ALIGN_TOL * scale {
        return Err(Error::config(format!(
            "{what} = {value} is not an integer multiple of dx = {dx}"
        )));
    }
    Ok(rounded as i64)
}

/// Cell-integrated convective weights γ_p = ∫_{pΔx}^{(p+1)Δx} ω_η(s) ds,
/// computed in closed form and renormalized to sum exactly to one.
pub fn discretize_convective_weights(params: &KernelParams, dx: f64) -> Result<Vec<f64>> {
    let eta = params.eta;
    let n = aligned_ratio(eta, dx, "kernel support eta")?;
    if n < 1 {
        return Err(Error::config(format!(
            "kernel support eta = {eta} must cover at least one cell of width {dx}"
        )));
    }
    let mut weights = Vec::with_capacity(n as usize);
    for p in 0..n {
        let a = p as f64 * dx;
        let b = ((p + 1) as f64 * dx).min(eta);
        // Antiderivative of 2(η−s)/η² is (2ηs − s²)/η².
        let w = (2.0 * eta * (b - a) - (b * b - a * a)) / (eta * eta);
        weights.push(w.max(0.0));
    }
    normalize(&mut weights);
    Ok(weights)
}

/// Cell-integrated reactive weights γ̂_h = ∫_{hΔx}^{(h+1)Δx} ω_{η,δ}(s) ds
/// via 8-point Gauss–Legendre quadrature per cell, renormalized. Returns
/// the weights together with the first offset h = (δ−η)/Δx.
pub fn discretize_reactive_weights(params: &KernelParams, dx: f64) -> Result<(Vec<f64>, i64)> {
    let (eta, delta) = (params.eta, params.delta);
    let h_min = aligned_ratio(delta - eta, dx, "reactive support lower edge delta - eta")?;
    let h_max = aligned_ratio(delta + eta, dx, "reactive support upper edge delta + eta")?;
    if h_max <= h_min {
        return Err(Error::config(format!(
            "reactive kernel support [{}, {}] does not cover a full cell",
            delta - eta,
            delta + eta
        )));
    }
    let mut weights = Vec::with_capacity((h_max - h_min) as usize);
    for h in h_min..h_max {
        let a = h as f64 * dx;
        let b = (h + 1) as f64 * dx;
        weights.push(gauss_legendre_8(a, b, |s| {
            let u = s - delta;
            let r = (eta * eta - u * u).max(0.0);
            16.0 / (5.0 * std::f64::consts::PI * eta.powi(6)) * r.powf(2.5)
        }));
    }
    normalize(&mut weights);
    Ok((weights, h_min))
}

fn normalize(weights: &mut [f64]) {
    let sum: f64 = weights.iter().sum();
    debug_assert!(sum > 0.0);
    for w in weights.iter_mut() {
        *w /= sum;
    }
}

// Abscissae and weights of the 8-point Gauss-Legendre rule on [-1, 1].
const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss_legendre_8(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..4 {
        acc += GL8_W[i] * (f(mid - half * GL8_X[i]) + f(mid + half * GL8_X[i]));
    }
    acc * half
}
