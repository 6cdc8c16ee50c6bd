//! JSON run configuration.

use crate::model::{ConstraintVariant, SystemParams};
use crate::oracle::GridSpec;
use crate::solver::SolverConfig;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Joint,
    DurationOnly,
    Both,
}

impl Scheme {
    /// Schemes to run, joint first.
    pub fn expand(self) -> &'static [SchemeKind] {
        match self {
            Self::Joint => &[SchemeKind::Joint],
            Self::DurationOnly => &[SchemeKind::DurationOnly],
            Self::Both => &[SchemeKind::Joint, SchemeKind::DurationOnly],
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "joint" => Ok(Self::Joint),
            "duration_only" => Ok(Self::DurationOnly),
            "both" => Ok(Self::Both),
            other => Err(format!(
                "unknown scheme `{other}` (expected joint, duration_only or both)"
            )),
        }
    }
}

/// A single optimization scheme as it appears in output rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Joint,
    DurationOnly,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Joint => "joint",
            Self::DurationOnly => "duration_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Alpha,
    NT,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::NT => "n_t",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum RawSweep {
    One(SweepAxis),
    Many(Vec<SweepAxis>),
}

/// Operating point for the Monte Carlo rate-gap report.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPoint {
    pub p_w: f64,
    pub tau_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    bandwidth_hz: f64,
    slot_s: f64,
    eta: f64,
    alpha: f64,
    #[serde(default)]
    theta: Option<f64>,
    noise_power: f64,
    n_t: f64,
    p0_w: f64,
    p1_max_w: f64,
    p2_max_w: f64,
    r_min_bps: f64,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    grid: GridSpec,
    #[serde(default)]
    sweep: Option<RawSweep>,
    #[serde(default)]
    scheme: Option<Scheme>,
    #[serde(default)]
    variant: Option<ConstraintVariant>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output_path: Option<PathBuf>,
    #[serde(default)]
    mc_samples: Option<usize>,
    #[serde(default)]
    operating_point: Option<OperatingPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    /// `theta` was given explicitly; otherwise it tracks `alpha` in sweeps.
    pub theta_explicit: bool,
    pub solver: SolverConfig,
    pub grid: GridSpec,
    /// Sweep axes, outermost first; rows follow their Cartesian product.
    pub sweep: Vec<SweepAxis>,
    pub scheme: Scheme,
    pub variant: ConstraintVariant,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub mc_samples: usize,
    pub operating_point: Option<OperatingPoint>,
}

/// One point of a sweep, fully resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub params: SystemParams,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let positive = [
            ("bandwidth_hz", raw.bandwidth_hz),
            ("slot_s", raw.slot_s),
            ("eta", raw.eta),
            ("alpha", raw.alpha),
            ("noise_power", raw.noise_power),
            ("p0_w", raw.p0_w),
            ("p1_max_w", raw.p1_max_w),
            ("p2_max_w", raw.p2_max_w),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(key, format!("{v} is not strictly positive")));
            }
        }
        if let Some(theta) = raw.theta {
            if !(theta.is_finite() && theta > 0.0) {
                return Err(invalid(
                    "theta",
                    format!("{theta} is not strictly positive"),
                ));
            }
        }
        if raw.eta > 1.0 {
            return Err(invalid("eta", "conversion efficiency cannot exceed 1"));
        }
        let n_t = antenna_count("n_t", raw.n_t)?;
        if !(raw.r_min_bps.is_finite() && raw.r_min_bps >= 0.0) {
            return Err(invalid("r_min_bps", "must be non-negative"));
        }
        raw.solver
            .validate()
            .map_err(|e| invalid("solver", e.to_string()))?;
        raw.grid.validate().map_err(|e| invalid("grid", e))?;

        let sweep = match raw.sweep {
            None => Vec::new(),
            Some(RawSweep::One(axis)) => vec![axis],
            Some(RawSweep::Many(axes)) => axes,
        };
        for axis in &sweep {
            check_axis(axis)?;
        }
        if let Some(op) = raw.operating_point {
            if !(op.p_w > 0.0 && op.tau_s > 0.0 && op.tau_s < raw.slot_s) {
                return Err(invalid(
                    "operating_point",
                    "needs p_w > 0 and 0 < tau_s < slot_s",
                ));
            }
        }
        let mc_samples = raw.mc_samples.unwrap_or(10_000);
        if mc_samples < 2 {
            return Err(invalid("mc_samples", "need at least 2 samples"));
        }

        let params = SystemParams {
            bandwidth: raw.bandwidth_hz,
            slot: raw.slot_s,
            eta: raw.eta,
            alpha: raw.alpha,
            theta: raw.theta.unwrap_or(raw.alpha),
            noise_power: raw.noise_power,
            n_t,
            p_static: raw.p0_w,
            p1_max: raw.p1_max_w,
            p2_max: raw.p2_max_w,
            r_min: raw.r_min_bps,
        };
        Ok(Self {
            params,
            theta_explicit: raw.theta.is_some(),
            solver: raw.solver,
            grid: raw.grid,
            sweep,
            scheme: raw.scheme.unwrap_or(Scheme::Both),
            variant: raw.variant.unwrap_or(ConstraintVariant::BoxTauMax),
            seed: raw.seed,
            output_path: raw.output_path,
            mc_samples,
            operating_point: raw.operating_point,
        })
    }

    /// `params` with one sweep coordinate applied.
    fn apply(&self, mut params: SystemParams, var: SweepVariable, value: f64) -> SystemParams {
        match var {
            SweepVariable::Alpha => {
                params.alpha = value;
                if !self.theta_explicit {
                    params.theta = value;
                }
            }
            SweepVariable::NT => params.n_t = value as u32,
        }
        params
    }

    /// Cartesian product of the sweep axes, first axis outermost. Without a
    /// sweep this is the single configured point.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = vec![self.params];
        for axis in &self.sweep {
            out = out
                .into_iter()
                .flat_map(|p| axis.values.iter().map(move |v| (p, *v)))
                .map(|(p, v)| self.apply(p, axis.variable, v))
                .collect();
        }
        out.into_iter()
            .map(|params| SweepPoint { params })
            .collect()
    }
}

fn antenna_count(key: &str, v: f64) -> Result<u32, ConfigError> {
    if v.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&v) {
        return Err(invalid(key, format!("{v} is not a positive integer")));
    }
    Ok(v as u32)
}

fn check_axis(axis: &SweepAxis) -> Result<(), ConfigError> {
    if axis.values.is_empty() {
        return Err(invalid("sweep.values", "empty"));
    }
    for v in &axis.values {
        if !(v.is_finite() && *v > 0.0) {
            return Err(invalid(
                "sweep.values",
                format!("{v} is not strictly positive"),
            ));
        }
        if axis.variable == SweepVariable::NT {
            antenna_count("sweep.values", *v)?;
        }
    }
    if axis.values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("sweep.values", "must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "bandwidth_hz": 10000, "slot_s": 0.005, "eta": 0.8, "alpha": 0.05,
        "noise_power": 1, "n_t": 100, "p0_w": 45, "p1_max_w": 15, "p2_max_w": 15,
        "r_min_bps": 12000
    }"#;

    fn with(extra: &str) -> String {
        let trimmed = BASE.trim_end().trim_end_matches('}');
        format!("{trimmed}, {extra} }}")
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_json(BASE).unwrap();
        assert_eq!(cfg.params, SystemParams::baseline(0.05, 100));
        assert_eq!(cfg.scheme, Scheme::Both);
        assert_eq!(cfg.variant, ConstraintVariant::BoxTauMax);
        assert_eq!(cfg.points().len(), 1);
    }

    #[test]
    fn missing_key_is_named() {
        let text = BASE.replace("\"bandwidth_hz\": 10000,", "");
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("bandwidth_hz"), "{err}");
    }

    #[test]
    fn nonpositive_value_is_named() {
        let text = BASE.replace("\"p0_w\": 45", "\"p0_w\": 0");
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("p0_w"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::from_json(&with(r#""bandwith_hz": 1"#))
            .unwrap_err()
            .to_string();
        assert!(err.contains("bandwith_hz"), "{err}");
    }

    #[test]
    fn theta_tracks_alpha_unless_given() {
        let cfg = RunConfig::from_json(&with(
            r#""sweep": {"variable": "alpha", "values": [0.01, 0.02]}"#,
        ))
        .unwrap();
        let pts = cfg.points();
        assert_eq!(pts[1].params.theta, 0.02);

        let cfg = RunConfig::from_json(&with(
            r#""theta": 0.03, "sweep": {"variable": "alpha", "values": [0.01, 0.02]}"#,
        ))
        .unwrap();
        assert_eq!(cfg.points()[1].params.theta, 0.03);
    }

    #[test]
    fn two_axis_sweep_is_row_major() {
        let cfg = RunConfig::from_json(&with(
            r#""sweep": [{"variable": "n_t", "values": [20, 50]},
                         {"variable": "alpha", "values": [0.01, 0.02, 0.03]}]"#,
        ))
        .unwrap();
        let pts: Vec<_> = cfg
            .points()
            .iter()
            .map(|p| (p.params.n_t, p.params.alpha))
            .collect();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], (20, 0.01));
        assert_eq!(pts[2], (20, 0.03));
        assert_eq!(pts[3], (50, 0.01));
    }

    #[test]
    fn sweep_values_must_increase() {
        let err = RunConfig::from_json(&with(
            r#""sweep": {"variable": "alpha", "values": [0.02, 0.01]}"#,
        ))
        .unwrap_err()
        .to_string();
        assert!(err.contains("sweep.values"));
        assert!(
            RunConfig::from_json(&with(r#""sweep": {"variable": "n_t", "values": [20.5]}"#))
                .is_err()
        );
    }

    #[test]
    fn solver_section_parses() {
        let cfg = RunConfig::from_json(&with(
            r#""solver": {"epsilon_bits": 0.01, "steps": {"mu": 0.002, "vartheta": 0.001, "nu": 1, "upsilon": 1e-7},
                          "max_outer": 7, "max_dual_iters": 10, "bisection_tol_s": 1e-14,
                          "init_fraction": 0.25, "paper_eq18_literal": true}"#,
        ))
        .unwrap();
        assert_eq!(cfg.solver.max_outer, 7);
        assert_eq!(cfg.solver.epsilon, Some(0.01));
        assert!(cfg.solver.literal_tau_gradient);
        assert_eq!(cfg.solver.steps.mu, 0.002);
    }
}
