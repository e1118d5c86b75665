//! JSON run configuration: one document holding the model, pulses,
//! schedules, integration controls and the unit convention.
//!
//! Rate-like numbers (g, J, γᵢ, Δω, detunings) are interpreted through the
//! `convention` field: `as-given` uses them verbatim as rad/µs, `times-2pi`
//! multiplies them by 2π on load. Times are always µs.

use serde::{Deserialize, Serialize};

use slh_switch::model::{
    CouplingSchedule, NetworkSpec, PhysicalRates, PulseSpec, RateConvention, SchedulePreset,
    Variant,
};
use slh_switch::{Scenario, SwitchError};

pub const CONFIG_SCHEMA: &str = "slh-switch/config/1";

fn default_schema() -> String {
    CONFIG_SCHEMA.to_string()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub model: ModelConfig,
    pub pulses: PulsesConfig,
    pub schedules: SchedulesConfig,
    pub integration: IntegrationConfig,
    #[serde(default = "default_convention")]
    pub convention: RateConvention,
}

fn default_convention() -> RateConvention {
    RateConvention::AsGiven
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    pub g: f64,
    #[serde(default)]
    pub j: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// Signal carrier detuning ω_s − ω₀; defaults to −(√2−1)g.
    #[serde(default)]
    pub delta_s: Option<f64>,
    /// Control carrier detuning ω_c − ω₀; defaults to −g.
    #[serde(default)]
    pub delta_c: Option<f64>,
    #[serde(default = "default_cutoff")]
    pub cavity_cutoff: usize,
    #[serde(default = "default_cutoff")]
    pub cavity2_cutoff: usize,
}

fn default_omega0() -> f64 {
    4000.0
}

fn default_cutoff() -> usize {
    2
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PulsesConfig {
    pub signal: PulseConfig,
    pub control: PulseConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub present: bool,
    #[serde(default)]
    pub bandwidth: f64,
    #[serde(default)]
    pub arrival: f64,
}

/// Either a named preset (re-derivable, hence sweepable) or explicit
/// per-channel breakpoint lists.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, untagged)]
pub enum SchedulesConfig {
    Preset {
        preset: String,
        #[serde(default)]
        t0: Option<f64>,
    },
    Explicit {
        explicit: ExplicitSchedules,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSchedules {
    pub gamma1: ScheduleConfig,
    pub gamma2: ScheduleConfig,
    pub gamma3: ScheduleConfig,
}

/// `initial` holds from t = −∞; each `[t, value]` step holds from t on.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub initial: f64,
    #[serde(default)]
    pub steps: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub full_label_set: bool,
    #[serde(default = "default_residual")]
    pub residual_threshold: f64,
}

fn default_dt() -> f64 {
    5e-4
}

fn default_stride() -> usize {
    100
}

fn default_residual() -> f64 {
    1e-6
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, SwitchError> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| SwitchError::InvalidScenario(format!("config parse error: {e}")))?;
        if cfg.schema != CONFIG_SCHEMA {
            return Err(SwitchError::InvalidScenario(format!(
                "unsupported config schema `{}` (expected `{CONFIG_SCHEMA}`)",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    /// The schedule preset, when the config uses one (sweeps require it).
    pub fn preset(&self) -> Result<Option<SchedulePreset>, SwitchError> {
        match &self.schedules {
            SchedulesConfig::Preset { preset, t0 } => {
                Ok(Some(SchedulePreset::from_name(preset, *t0)?))
            }
            SchedulesConfig::Explicit { .. } => Ok(None),
        }
    }

    /// Build the validated scenario, applying the unit convention to every
    /// rate-like quantity.
    pub fn to_scenario(&self) -> Result<Scenario, SwitchError> {
        let s = self.convention.scale();
        let m = &self.model;
        let mut rates = PhysicalRates::with_default_carriers(
            m.omega0,
            m.g,
            m.j,
            [m.gamma1, m.gamma2, m.gamma3],
        )?;
        if let Some(ds) = m.delta_s {
            rates.delta_s = ds;
        }
        if let Some(dc) = m.delta_c {
            rates.delta_c = dc;
        }
        let rates = rates.scaled(s);

        let mk_pulse = |p: &PulseConfig| -> Result<PulseSpec, SwitchError> {
            if p.present {
                let mut pulse = PulseSpec::new(p.bandwidth * s, p.arrival)?;
                pulse.phase = 0.0;
                Ok(pulse)
            } else {
                Ok(PulseSpec::absent())
            }
        };
        let signal = mk_pulse(&self.pulses.signal)?;
        let control = mk_pulse(&self.pulses.control)?;

        let schedules = match &self.schedules {
            SchedulesConfig::Preset { preset, t0 } => {
                let preset = SchedulePreset::from_name(preset, *t0)?;
                preset.materialize(rates.gamma, signal.arrival, control.arrival)?
            }
            SchedulesConfig::Explicit { explicit } => {
                let mk = |c: &ScheduleConfig| -> Result<CouplingSchedule, SwitchError> {
                    CouplingSchedule::new(
                        c.initial * s,
                        c.steps.iter().map(|&(t, v)| (t, v * s)).collect(),
                    )
                };
                [mk(&explicit.gamma1)?, mk(&explicit.gamma2)?, mk(&explicit.gamma3)?]
            }
        };

        let spec = NetworkSpec {
            variant: m.variant,
            rates,
            cutoff_cavity1: m.cavity_cutoff,
            cutoff_cavity2: m.cavity2_cutoff,
            schedules,
            signal,
            control,
        };
        let scenario = Scenario {
            spec,
            horizon: self.integration.t_end,
            dt: self.integration.dt,
            record_stride: self.integration.record_stride,
            full_label_set: self.integration.full_label_set,
            residual_threshold: self.integration.residual_threshold,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> String {
        r#"{
            "model": {"variant": "A", "g": 400.0, "gamma1": 3.5, "gamma2": 0.0, "gamma3": 6.0},
            "pulses": {
                "signal": {"present": true, "bandwidth": 11.0, "arrival": 5.0},
                "control": {"present": true, "bandwidth": 3.0, "arrival": 4.8}
            },
            "schedules": {"preset": "constant"},
            "integration": {"t_end": 20.0}
        }"#
        .to_string()
    }

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = RunConfig::from_json(&minimal_json()).unwrap();
        assert_eq!(cfg.integration.dt, 5e-4);
        assert_eq!(cfg.model.cavity_cutoff, 2);
        assert_eq!(cfg.convention, RateConvention::AsGiven);
        let sc = cfg.to_scenario().unwrap();
        assert_eq!(sc.spec.rates.gamma, [3.5, 0.0, 6.0]);
        // Default carriers.
        assert!((sc.spec.rates.delta_c + 400.0).abs() < 1e-12);
    }

    #[test]
    fn convention_scales_rates_not_times() {
        let json = minimal_json().replace(
            r#""integration": {"t_end": 20.0}"#,
            r#""integration": {"t_end": 20.0}, "convention": "times-2pi""#,
        );
        let cfg = RunConfig::from_json(&json).unwrap();
        let sc = cfg.to_scenario().unwrap();
        let tau = std::f64::consts::TAU;
        assert!((sc.spec.rates.g - 400.0 * tau).abs() < 1e-9);
        assert!((sc.spec.signal.bandwidth - 11.0 * tau).abs() < 1e-9);
        assert_eq!(sc.spec.signal.arrival, 5.0);
        assert_eq!(sc.horizon, 20.0);
    }

    #[test]
    fn rejects_negative_gamma() {
        let json = minimal_json().replace(r#""gamma1": 3.5"#, r#""gamma1": -1.0"#);
        let cfg = RunConfig::from_json(&json).unwrap();
        assert!(cfg.to_scenario().is_err());
    }

    #[test]
    fn rejects_unknown_fields_and_schema() {
        let json = minimal_json().replace(r#""variant": "A""#, r#""variant": "A", "bogus": 1"#);
        assert!(RunConfig::from_json(&json).is_err());
        let json = minimal_json().replace(
            r#"{
            "model""#,
            r#"{
            "schema": "slh-switch/config/999",
            "model""#,
        );
        assert!(RunConfig::from_json(&json).is_err());
    }

    #[test]
    fn explicit_schedules_parse() {
        let json = minimal_json().replace(
            r#""schedules": {"preset": "constant"}"#,
            r#""schedules": {"explicit": {
                "gamma1": {"initial": 0.0, "steps": [[3.7, 3.5], [5.0, 0.0]]},
                "gamma2": {"initial": 0.0, "steps": [[5.0, 3.5]]},
                "gamma3": {"initial": 6.0, "steps": [[4.3, 0.0]]}
            }}"#,
        );
        let cfg = RunConfig::from_json(&json).unwrap();
        assert!(cfg.preset().unwrap().is_none());
        let sc = cfg.to_scenario().unwrap();
        assert_eq!(sc.spec.schedules[0].eval(4.0), 3.5);
        assert_eq!(sc.spec.schedules[2].eval(4.3), 0.0);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig::from_json(&minimal_json()).unwrap();
        let emitted = serde_json::to_string_pretty(&cfg).unwrap();
        let reparsed = RunConfig::from_json(&emitted).unwrap();
        assert_eq!(cfg, reparsed);
    }
}
