//! Run configuration: JSON schema, validation and built-in presets.
//!
//! A configuration file describes one simulation completely. Validation
//! collects every problem it finds before reporting, so a bad file is
//! fixed in one round trip. The presets reproduce the reference
//! scenarios used by the acceptance suite and the convergence study.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsOptions;
use crate::error::{Error, Result};
use crate::grid::{build_grid, build_ramps, InitialDatum, RampGeometry, RampRates, Schedule};
use crate::kernels::KernelParams;
use crate::local_reference::LocalConfig;
use crate::scheme::{BoundaryPolicy, ModelConfig, ModelVariant, VelocityLaw};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub x_left: f64,
    pub x_right: f64,
    pub dx: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub eta: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSpec {
    /// On-ramp interval [start, end].
    pub on: [f64; 2],
    /// Off-ramp interval [start, end].
    pub off: [f64; 2],
    /// Ramp length L used in the 1/L indicator scaling.
    pub length: f64,
}

fn default_cfl_safety() -> f64 {
    0.9
}

fn default_kappa_spacing() -> f64 {
    0.05
}

fn default_boundary() -> BoundaryPolicy {
    BoundaryPolicy::Outflow
}

/// The on-disk shape of a run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub domain: DomainSpec,
    pub kernel: KernelSpec,
    pub velocity: VelocityLaw,
    pub model: ModelVariant,
    #[serde(default)]
    pub ramps: Option<RampSpec>,
    #[serde(default = "RampRates::zero")]
    pub rates: RampRates,
    pub initial: InitialDatum,
    #[serde(default = "default_boundary")]
    pub boundary: BoundaryPolicy,
    pub output_times: Vec<f64>,
    #[serde(default)]
    pub t_end: f64,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_kappa_spacing")]
    pub kappa_spacing: f64,
}

impl RunConfig {
    /// Validate everything and assemble the solver configuration.
    /// All failures are collected before returning.
    pub fn build(&self) -> Result<ModelConfig> {
        let mut problems: Vec<String> = Vec::new();

        let grid = match build_grid(self.domain.x_left, self.domain.x_right, self.domain.dx) {
            Ok(g) => Some(g),
            Err(e) => {
                problems.push(e.to_string());
                None
            }
        };
        let kernel = match KernelParams::new(self.kernel.eta, self.kernel.delta) {
            Ok(k) => Some(k),
            Err(e) => {
                problems.push(e.to_string());
                None
            }
        };
        for check in [
            self.velocity.validate(),
            self.rates.on.validate(),
            self.rates.off.validate(),
        ] {
            if let Err(e) = check {
                problems.push(e.to_string());
            }
        }

        let ramps = match (&grid, &self.ramps) {
            (Some(g), Some(spec)) => {
                match build_ramps(
                    g,
                    (spec.on[0], spec.on[1]),
                    (spec.off[0], spec.off[1]),
                    spec.length,
                ) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        problems.push(e.to_string());
                        None
                    }
                }
            }
            (Some(g), None) => Some(RampGeometry::none(g)),
            (None, _) => None,
        };

        match &self.initial {
            InitialDatum::Constant { value } => {
                if !(0.0..=1.0).contains(value) {
                    problems.push(format!("initial density {value} lies outside [0, 1]"));
                }
            }
            InitialDatum::Step { left, right, at } => {
                if !(0.0..=1.0).contains(left) || !(0.0..=1.0).contains(right) {
                    problems.push(format!(
                        "initial step values ({left}, {right}) must lie in [0, 1]"
                    ));
                }
                if *at <= self.domain.x_left || *at >= self.domain.x_right {
                    problems.push(format!("initial step position {at} lies outside the domain"));
                }
            }
        }
        if let BoundaryPolicy::Inflow { left } = self.boundary {
            if !(0.0..=1.0).contains(&left) {
                problems.push(format!("inflow density {left} lies outside [0, 1]"));
            }
        }
        if self.output_times.is_empty() && self.t_end <= 0.0 {
            problems.push("either output_times or a positive t_end is required".into());
        }
        if self.output_times.iter().any(|&t| !t.is_finite() || t < 0.0) {
            problems.push("output times must be finite and nonnegative".into());
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            problems.push(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            ));
        }
        if crate::diagnostics::kappa_grid(self.kappa_spacing).is_err() {
            problems.push(format!(
                "kappa_spacing {} must divide 1",
                self.kappa_spacing
            ));
        }

        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(ModelConfig {
            grid: grid.unwrap(),
            ramps: ramps.unwrap(),
            rates: self.rates.clone(),
            velocity: self.velocity.clone(),
            kernel: kernel.unwrap(),
            variant: self.model,
            boundary: self.boundary,
            initial: self.initial.clone(),
            t_end: self.t_end,
            output_times: self.output_times.clone(),
            cfl_safety: self.cfl_safety,
            diagnostics: DiagnosticsOptions {
                kappa_spacing: self.kappa_spacing,
                ..DiagnosticsOptions::default()
            },
        })
    }

    /// The local reference counterpart of this configuration.
    pub fn build_local(&self) -> Result<LocalConfig> {
        Ok(LocalConfig::from_model(&self.build()?))
    }

    pub fn preset(name: &str) -> Option<RunConfig> {
        match name {
            "example1" => Some(RunConfig {
                name: Some("example1".into()),
                domain: DomainSpec {
                    x_left: -1.0,
                    x_right: 9.0,
                    dx: 1.0 / 1000.0,
                },
                kernel: KernelSpec {
                    eta: 0.05,
                    delta: -0.01,
                },
                velocity: VelocityLaw::Affine { v_max: 1.0 },
                model: ModelVariant::Model1,
                ramps: Some(standard_ramps()),
                rates: RampRates {
                    on: Schedule::Constant { value: 1.2 },
                    off: Schedule::Constant { value: 0.8 },
                },
                initial: InitialDatum::Constant { value: 0.3 },
                boundary: BoundaryPolicy::Outflow,
                output_times: vec![0.5, 2.0, 5.0, 7.0],
                t_end: 0.0,
                cfl_safety: default_cfl_safety(),
                kappa_spacing: default_kappa_spacing(),
            }),
            "example2" => Some(RunConfig {
                name: Some("example2".into()),
                domain: DomainSpec {
                    x_left: -1.0,
                    x_right: 9.0,
                    dx: 1.0 / 1000.0,
                },
                kernel: KernelSpec {
                    eta: 0.05,
                    delta: 0.0,
                },
                velocity: VelocityLaw::Affine { v_max: 1.0 },
                model: ModelVariant::Model2,
                ramps: Some(standard_ramps()),
                rates: RampRates {
                    on: Schedule::Constant { value: 1.2 },
                    off: Schedule::Constant { value: 0.8 },
                },
                initial: InitialDatum::Constant { value: 0.3 },
                boundary: BoundaryPolicy::Outflow,
                output_times: vec![5.0],
                t_end: 0.0,
                cfl_safety: default_cfl_safety(),
                kappa_spacing: default_kappa_spacing(),
            }),
            "example3" => Some(RunConfig {
                name: Some("example3".into()),
                domain: DomainSpec {
                    x_left: -1.0,
                    x_right: 9.0,
                    dx: 1.0 / 100.0,
                },
                kernel: KernelSpec {
                    eta: 0.05,
                    delta: -0.01,
                },
                velocity: VelocityLaw::Affine { v_max: 1.0 },
                model: ModelVariant::Model1,
                ramps: Some(standard_ramps()),
                rates: RampRates {
                    on: Schedule::Constant { value: 1.0 },
                    off: Schedule::Constant { value: 0.2 },
                },
                initial: InitialDatum::Step {
                    left: 0.1,
                    right: 0.9,
                    at: 1.1,
                },
                boundary: BoundaryPolicy::Outflow,
                output_times: vec![0.3],
                t_end: 0.0,
                cfl_safety: default_cfl_safety(),
                kappa_spacing: default_kappa_spacing(),
            }),
            "example4" => Some(RunConfig {
                name: Some("example4".into()),
                domain: DomainSpec {
                    x_left: -1.0,
                    x_right: 5.0,
                    dx: 1.0 / 1000.0,
                },
                kernel: KernelSpec {
                    eta: 0.1,
                    delta: -0.02,
                },
                velocity: VelocityLaw::Affine { v_max: 1.0 },
                model: ModelVariant::Model1,
                ramps: Some(standard_ramps()),
                rates: RampRates {
                    on: Schedule::Sinusoidal { amplitude: 1.0 },
                    off: Schedule::Constant { value: 0.2 },
                },
                initial: InitialDatum::Constant { value: 0.0 },
                boundary: BoundaryPolicy::Inflow { left: 0.4 },
                output_times: vec![1.0, 2.0, 5.0, 7.0],
                t_end: 0.0,
                cfl_safety: default_cfl_safety(),
                kappa_spacing: default_kappa_spacing(),
            }),
            _ => None,
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["example1", "example2", "example3", "example4"]
    }
}

fn standard_ramps() -> RampSpec {
    RampSpec {
        on: [1.0, 1.1],
        off: [3.0, 3.1],
        length: 0.1,
    }
}

/// Load a configuration from a JSON file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let cfg: RunConfig = serde_json::from_str(&text)?;
    Ok(cfg)
}

/// Interpret `arg` as a preset name first, then as a file path.
pub fn resolve_config(arg: &str) -> Result<RunConfig> {
    if let Some(preset) = RunConfig::preset(arg) {
        return Ok(preset);
    }
    let path = Path::new(arg);
    if path.exists() {
        load_config(path)
    } else {
        Err(Error::config(format!(
            "'{arg}' is neither a preset ({}) nor an existing file",
            RunConfig::preset_names().join(", ")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        for name in RunConfig::preset_names() {
            let cfg = RunConfig::preset(name).unwrap();
            let model = cfg.build().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(model.grid.n_cells > 0);
            assert!(model.ramps.has_ramps());
            cfg.build_local().unwrap();
        }
    }

    #[test]
    fn example1_geometry() {
        let cfg = RunConfig::preset("example1").unwrap().build().unwrap();
        assert_eq!(cfg.grid.n_cells, 10_000);
        assert_eq!(cfg.ramps.on_cells, 2000..2100);
        assert_eq!(cfg.ramps.off_cells, 4000..4100);
        assert_eq!(cfg.output_times, vec![0.5, 2.0, 5.0, 7.0]);
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig::preset("example4").unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.kernel.eta, 0.1);
        assert_eq!(back.boundary, BoundaryPolicy::Inflow { left: 0.4 });
        assert_eq!(back.rates.on, Schedule::Sinusoidal { amplitude: 1.0 });
        back.build().unwrap();
    }

    #[test]
    fn validation_collects_multiple_errors() {
        let mut cfg = RunConfig::preset("example1").unwrap();
        cfg.cfl_safety = 2.0;
        cfg.initial = InitialDatum::Constant { value: 1.5 };
        cfg.kernel.eta = -0.1;
        match cfg.build() {
            Err(Error::Validation(problems)) => {
                assert!(problems.len() >= 3, "got {problems:?}");
            }
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"domain": {"x_left": 0, "x_right": 1, "dx": 0.1}, "bogus": 1}"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
    }

    #[test]
    fn unknown_preset_and_missing_file() {
        assert!(resolve_config("example9").is_err());
    }
}
