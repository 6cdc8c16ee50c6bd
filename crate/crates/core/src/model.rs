//! Closed-form link model: energy beamforming on the downlink, harvest-then-transmit
//! on the uplink, and the energy-efficiency objective built from them.
//!
//! Everything here is a pure function over value types. Quantities are SI
//! throughout (Hz, s, W, J, bits).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use thiserror::Error;

/// Relative tolerance for constraint comparisons.
pub const FEASIBILITY_RTOL: f64 = 1e-9;
/// Tolerance on unit-norm checks.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("channel vector is zero or non-finite")]
    DegenerateChannel,
    #[error("beamforming vector is not unit norm (norm = {0})")]
    NotUnitNorm(f64),
    #[error("transfer duration {tau} s outside (0, {slot}) s")]
    TauOutOfRange { tau: f64, slot: f64 },
    #[error("rate log argument {0} is not positive")]
    NonPositiveLogArgument(f64),
    #[error("parameter `{name}` = {value} is invalid: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Physical and system constants of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Spectrum bandwidth, Hz.
    pub bandwidth: f64,
    /// Slot length, s.
    pub slot: f64,
    /// RF-to-DC conversion efficiency.
    pub eta: f64,
    /// Downlink path-loss gain.
    pub alpha: f64,
    /// Uplink path-loss gain.
    pub theta: f64,
    /// Receiver noise power, W.
    pub noise_power: f64,
    /// Transmit antennas at the base station.
    pub n_t: u32,
    /// Static circuit power, W.
    pub p_static: f64,
    /// Peak transmit power at the base station, W.
    pub p1_max: f64,
    /// Peak retransmit power at the harvesting node, W.
    pub p2_max: f64,
    /// Minimum average rate, bits/s. Zero disables the QoS constraint.
    pub r_min: f64,
}

impl SystemParams {
    /// The reference scenario: 10 kHz, 5 ms slots, η = 0.8, unit noise,
    /// 12 kb/s QoS, 45 W static power, 15 W caps and θ = α.
    pub fn baseline(alpha: f64, n_t: u32) -> Self {
        Self {
            bandwidth: 10e3,
            slot: 5e-3,
            eta: 0.8,
            alpha,
            theta: alpha,
            noise_power: 1.0,
            n_t,
            p_static: 45.0,
            p1_max: 15.0,
            p2_max: 15.0,
            r_min: 12e3,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("bandwidth", self.bandwidth),
            ("slot", self.slot),
            ("eta", self.eta),
            ("alpha", self.alpha),
            ("theta", self.theta),
            ("noise_power", self.noise_power),
            ("p_static", self.p_static),
            ("p1_max", self.p1_max),
            ("p2_max", self.p2_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParam {
                    name,
                    value,
                    reason: "must be finite and strictly positive",
                });
            }
        }
        if self.eta > 1.0 {
            return Err(ModelError::InvalidParam {
                name: "eta",
                value: self.eta,
                reason: "conversion efficiency cannot exceed 1",
            });
        }
        if self.n_t == 0 {
            return Err(ModelError::InvalidParam {
                name: "n_t",
                value: 0.0,
                reason: "need at least one antenna",
            });
        }
        if !(self.r_min.is_finite() && self.r_min >= 0.0) {
            return Err(ModelError::InvalidParam {
                name: "r_min",
                value: self.r_min,
                reason: "must be finite and non-negative",
            });
        }
        Ok(())
    }

    /// η·α·θ·N_t²/σ², the coefficient of P·τ/(T−τ) inside the hardened rate.
    pub fn snr_gain(&self) -> f64 {
        let n = f64::from(self.n_t);
        self.eta * self.alpha * self.theta * n * n / self.noise_power
    }

    /// η·α·N_t, harvested power per watt transmitted under hardening.
    pub(crate) fn harvest_gain(&self) -> f64 {
        self.eta * self.alpha * f64::from(self.n_t)
    }
}

/// Decision variables: transmit power at the base station and the
/// power-transfer duration within the slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Transmit power, W.
    pub p: f64,
    /// Power-transfer duration, s.
    pub tau: f64,
}

impl Allocation {
    pub fn new(p: f64, tau: f64) -> Self {
        Self { p, tau }
    }

    pub fn validate(&self, params: &SystemParams) -> Result<(), ModelError> {
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(ModelError::InvalidParam {
                name: "p",
                value: self.p,
                reason: "transmit power must be strictly positive",
            });
        }
        check_tau(params, self.tau)
    }
}

/// Which form of the harvesting node's power cap to enforce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintVariant {
    /// τ ≤ τ_max together with P ≤ P1,max.
    BoxTauMax,
    /// P ≤ P2,max·(T−τ)/(η·α·N_t·τ), the cap itself.
    ExactHarvestCap,
}

impl ConstraintVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BoxTauMax => "box_tau_max",
            Self::ExactHarvestCap => "exact_harvest_cap",
        }
    }
}

impl std::str::FromStr for ConstraintVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "box_tau_max" => Ok(Self::BoxTauMax),
            "exact_harvest_cap" => Ok(Self::ExactHarvestCap),
            other => Err(format!(
                "unknown variant `{other}` (expected box_tau_max or exact_harvest_cap)"
            )),
        }
    }
}

/// First violated constraint, checked in the order P1 cap, harvest cap,
/// slot length, QoS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasibilityStatus {
    Feasible,
    ViolatesP1,
    ViolatesP2,
    ViolatesTau,
    ViolatesQoS,
}

impl FeasibilityStatus {
    pub fn is_feasible(self) -> bool {
        self == Self::Feasible
    }
}

fn check_tau(params: &SystemParams, tau: f64) -> Result<(), ModelError> {
    if tau.is_finite() && tau > 0.0 && tau < params.slot {
        Ok(())
    } else {
        Err(ModelError::TauOutOfRange {
            tau,
            slot: params.slot,
        })
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Maximum ratio transmission weights, w = h/‖h‖.
pub fn mrt_weights(h: &[Complex64]) -> Result<Vec<Complex64>, ModelError> {
    let n2 = norm_sqr(h);
    if !(n2.is_finite() && n2 > 0.0) {
        return Err(ModelError::DegenerateChannel);
    }
    let inv = n2.sqrt().recip();
    Ok(h.iter().map(|z| z * inv).collect())
}

/// |hᴴw|².
pub fn beam_gain(h: &[Complex64], w: &[Complex64]) -> Result<f64, ModelError> {
    if h.len() != w.len() {
        return Err(ModelError::LengthMismatch(h.len(), w.len()));
    }
    let inner: Complex64 = h.iter().zip(w).map(|(a, b)| a.conj() * b).sum();
    Ok(inner.norm_sqr())
}

/// Power harvested by the uplink node, η·α·p·|hᴴw|².
pub fn harvested_power(
    params: &SystemParams,
    p: f64,
    h: &[Complex64],
    w: &[Complex64],
) -> Result<f64, ModelError> {
    let wn = norm_sqr(w).sqrt();
    if (wn - 1.0).abs() > NORM_TOL * 10.0 {
        return Err(ModelError::NotUnitNorm(wn));
    }
    if !(p >= 0.0) {
        return Err(ModelError::InvalidParam {
            name: "p",
            value: p,
            reason: "transmit power must be non-negative",
        });
    }
    Ok(params.eta * params.alpha * p * beam_gain(h, w)?)
}

/// Energy harvested over the transfer phase with ‖h‖² hardened to N_t.
pub fn harvested_energy_hardened(params: &SystemParams, alloc: &Allocation) -> f64 {
    params.harvest_gain() * alloc.p * alloc.tau
}

/// Slot-averaged rate with the exact log2(1 + SNR), for given channel norms.
pub fn avg_rate_exact(
    params: &SystemParams,
    alloc: &Allocation,
    h_norm2: f64,
    g_norm2: f64,
) -> Result<f64, ModelError> {
    check_tau(params, alloc.tau)?;
    let t = params.slot;
    let snr = params.eta * params.alpha * params.theta * alloc.p * alloc.tau * h_norm2 * g_norm2
        / ((t - alloc.tau) * params.noise_power);
    Ok((t - alloc.tau) / t * params.bandwidth * snr.ln_1p() / LN_2)
}

/// Argument of the hardened log: η·α·θ·N_t²·P·τ / ((T−τ)·σ²).
pub fn hardened_log_argument(params: &SystemParams, p: f64, tau: f64) -> f64 {
    params.snr_gain() * p * tau / (params.slot - tau)
}

/// Hardened rate without range checks. Callers guarantee 0 < τ < T.
#[inline]
pub(crate) fn rate_hardened_unchecked(params: &SystemParams, p: f64, tau: f64) -> f64 {
    let t = params.slot;
    (t - tau) / t * params.bandwidth * hardened_log_argument(params, p, tau).log2()
}

/// Slot-averaged rate under channel hardening, dropping the "+1". Negative
/// whenever the log argument is below 1; reporting code clamps.
pub fn avg_rate_hardened(params: &SystemParams, alloc: &Allocation) -> Result<f64, ModelError> {
    check_tau(params, alloc.tau)?;
    Ok(rate_hardened_unchecked(params, alloc.p, alloc.tau))
}

/// Bits per Joule: clamped slot throughput over slot energy.
pub fn energy_efficiency(params: &SystemParams, alloc: &Allocation) -> f64 {
    let bits = rate_hardened_unchecked(params, alloc.p, alloc.tau).max(0.0) * params.slot;
    bits / slot_energy(params, alloc)
}

/// P0·T + P·τ, Joules consumed per slot.
pub fn slot_energy(params: &SystemParams, alloc: &Allocation) -> f64 {
    params.p_static * params.slot + alloc.p * alloc.tau
}

/// Largest transfer duration compatible with running at P1,max under the
/// harvesting node's power cap.
pub fn tau_max(params: &SystemParams) -> f64 {
    params.p2_max * params.slot / (params.harvest_gain() * params.p1_max + params.p2_max)
}

/// Largest base-station power allowed by the harvesting node's cap at a given τ.
pub fn p2_cap(params: &SystemParams, tau: f64) -> Result<f64, ModelError> {
    check_tau(params, tau)?;
    Ok(params.p2_max * (params.slot - tau) / (params.harvest_gain() * tau))
}

fn le_rel(a: f64, b: f64) -> bool {
    a <= b + FEASIBILITY_RTOL * b.abs()
}

/// Feasibility with the hardened rate already computed; returns the rate too
/// so hot loops evaluate the log once.
#[inline]
pub(crate) fn feasibility_and_rate(
    params: &SystemParams,
    alloc: &Allocation,
    variant: ConstraintVariant,
) -> (FeasibilityStatus, f64) {
    let t = params.slot;
    let rate = if alloc.tau > 0.0 && alloc.tau < t {
        rate_hardened_unchecked(params, alloc.p, alloc.tau)
    } else {
        f64::NEG_INFINITY
    };
    if !le_rel(alloc.p, params.p1_max) {
        return (FeasibilityStatus::ViolatesP1, rate);
    }
    let harvest_ok = match variant {
        ConstraintVariant::BoxTauMax => le_rel(alloc.tau, tau_max(params)),
        ConstraintVariant::ExactHarvestCap => {
            // Q_harv/(T−τ) ≤ P2,max, multiplied through by (T−τ) to stay finite at τ → T.
            le_rel(
                params.harvest_gain() * alloc.p * alloc.tau,
                params.p2_max * (t - alloc.tau),
            )
        }
    };
    if !harvest_ok {
        return (FeasibilityStatus::ViolatesP2, rate);
    }
    if !le_rel(alloc.tau, t) {
        return (FeasibilityStatus::ViolatesTau, rate);
    }
    if params.r_min > 0.0 && !(rate >= params.r_min - FEASIBILITY_RTOL * params.r_min) {
        return (FeasibilityStatus::ViolatesQoS, rate);
    }
    (FeasibilityStatus::Feasible, rate)
}

pub fn check_feasible(
    params: &SystemParams,
    alloc: &Allocation,
    variant: ConstraintVariant,
) -> FeasibilityStatus {
    feasibility_and_rate(params, alloc, variant).0
}

/// ∂R̄/∂P = W·(T−τ)/(ln2·T·P).
pub fn rate_gradient_p(params: &SystemParams, p: f64, tau: f64) -> f64 {
    params.bandwidth * (params.slot - tau) / (LN_2 * params.slot * p)
}

/// ∂R̄/∂τ = W·[1/(τ·ln2) − log2(arg)/T].
///
/// With `literal_form` the first term is 1/((T−τ)·ln2) instead, which does not
/// match differentiation of the hardened rate; kept for comparison runs.
pub fn rate_gradient_tau(
    params: &SystemParams,
    p: f64,
    tau: f64,
    literal_form: bool,
) -> Result<f64, ModelError> {
    check_tau(params, tau)?;
    let arg = hardened_log_argument(params, p, tau);
    if !(arg > 0.0) {
        return Err(ModelError::NonPositiveLogArgument(arg));
    }
    let first = if literal_form {
        1.0 / ((params.slot - tau) * LN_2)
    } else {
        1.0 / (tau * LN_2)
    };
    Ok(params.bandwidth * (first - arg.log2() / params.slot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn point() -> (SystemParams, Allocation) {
        (
            SystemParams::baseline(0.05, 100),
            Allocation::new(15.0, 2.5e-3),
        )
    }

    #[test]
    fn mrt_examples() {
        let w = mrt_weights(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(w, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);

        let w = mrt_weights(&[c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
        assert!((w[0] - c(0.6, 0.0)).norm() < 1e-15);
        assert!((w[1] - c(0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn mrt_rejects_zero_channel() {
        assert_eq!(
            mrt_weights(&[c(0.0, 0.0); 4]),
            Err(ModelError::DegenerateChannel)
        );
    }

    #[test]
    fn mrt_beats_random_unit_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let h: Vec<_> = (0..8)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let w = mrt_weights(&h).unwrap();
            let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < NORM_TOL);
            let best = beam_gain(&h, &w).unwrap();
            for _ in 0..1000 {
                let v: Vec<_> = (0..8)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let v = mrt_weights(&v).unwrap();
                assert!(best >= beam_gain(&h, &v).unwrap() * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn harvested_power_examples() {
        let mut params = SystemParams::baseline(1.0, 1);
        let e1 = [c(1.0, 0.0), c(0.0, 0.0)];
        assert_eq!(harvested_power(&params, 0.0, &e1, &e1).unwrap(), 0.0);

        params.eta = 1.0;
        assert_eq!(harvested_power(&params, 7.0, &e1, &e1).unwrap(), 7.0);

        // ‖h‖² = 2 with MRT: 0.8·0.05·10·2 = 0.8 W.
        params.eta = 0.8;
        params.alpha = 0.05;
        let h = [c(1.0, 0.0), c(0.0, 1.0)];
        let w = mrt_weights(&h).unwrap();
        let got = harvested_power(&params, 10.0, &h, &w).unwrap();
        assert!((got - 0.8).abs() < 1e-12);
    }

    #[test]
    fn harvested_power_rejects_non_unit_beam() {
        let params = SystemParams::baseline(0.05, 2);
        let h = [c(1.0, 0.0), c(1.0, 0.0)];
        assert!(matches!(
            harvested_power(&params, 1.0, &h, &h),
            Err(ModelError::NotUnitNorm(_))
        ));
    }

    #[test]
    fn harvested_energy_examples() {
        let params = SystemParams::baseline(0.05, 100);
        let a = Allocation::new(15.0, 1e-3);
        assert!((harvested_energy_hardened(&params, &a) - 0.06).abs() < 1e-15);
        let doubled = Allocation::new(15.0, 2e-3);
        assert!(
            (harvested_energy_hardened(&params, &doubled)
                - 2.0 * harvested_energy_hardened(&params, &a))
            .abs()
                < 1e-15
        );
        let tiny = SystemParams {
            alpha: 1e-12,
            ..params
        };
        assert!(harvested_energy_hardened(&tiny, &a) < 1e-11);
    }

    #[test]
    fn exact_rate_examples() {
        let (params, a) = point();
        assert_eq!(avg_rate_exact(&params, &a, 0.0, 100.0).unwrap(), 0.0);
        assert_eq!(avg_rate_exact(&params, &a, 100.0, 0.0).unwrap(), 0.0);
        let r = avg_rate_exact(&params, &a, 100.0, 100.0).unwrap();
        assert!((r - 5000.0 * 301f64.log2()).abs() < 1e-8, "{r}");
        assert!((r - 41168.1).abs() < 0.05);
    }

    #[test]
    fn rates_reject_tau_at_slot_end() {
        let (params, _) = point();
        let a = Allocation::new(15.0, params.slot);
        assert!(matches!(
            avg_rate_exact(&params, &a, 1.0, 1.0),
            Err(ModelError::TauOutOfRange { .. })
        ));
        assert!(avg_rate_hardened(&params, &a).is_err());
    }

    #[test]
    fn hardened_rate_examples() {
        let (params, a) = point();
        let r = avg_rate_hardened(&params, &a).unwrap();
        assert!((r - 5000.0 * 300f64.log2()).abs() < 1e-8);
        assert!((r - 41144.1).abs() < 0.01);

        // η·α·θ·N_t²·p = 0.125·4·2 = 1 at τ = T/2 gives a log argument of exactly 1.
        let unit = SystemParams {
            eta: 0.5,
            alpha: 0.5,
            theta: 0.5,
            n_t: 2,
            ..params
        };
        let half = Allocation::new(2.0, unit.slot / 2.0);
        assert_eq!(avg_rate_hardened(&unit, &half).unwrap(), 0.0);

        let doubled = SystemParams { n_t: 200, ..params };
        let shift = avg_rate_hardened(&doubled, &a).unwrap() - r;
        let expected = 2.0 * params.bandwidth * (params.slot - a.tau) / params.slot;
        assert!((shift - expected).abs() < 1e-8);
    }

    #[test]
    fn energy_efficiency_examples() {
        let (params, a) = point();
        let ee = energy_efficiency(&params, &a);
        assert!((ee - 783.7).abs() < 0.1, "{ee}");

        let weak = Allocation::new(1e-9, a.tau);
        assert!(hardened_log_argument(&params, weak.p, weak.tau) < 1.0);
        assert_eq!(energy_efficiency(&params, &weak), 0.0);
    }

    #[test]
    fn tau_max_examples() {
        let params = SystemParams::baseline(0.05, 100);
        let tm = tau_max(&params);
        assert!((tm - 1e-3).abs() <= 1e-12 * 1e-3);
        let faint = SystemParams {
            alpha: 1e-12,
            ..params
        };
        assert!((tau_max(&faint) - faint.slot).abs() < 1e-12);
        assert!((p2_cap(&params, tm).unwrap() - params.p1_max).abs() < 1e-12 * params.p1_max);
    }

    #[test]
    fn p2_cap_examples() {
        let params = SystemParams::baseline(0.05, 100);
        assert!((p2_cap(&params, 0.5e-3).unwrap() - 33.75).abs() < 1e-12);
        assert!(p2_cap(&params, params.slot * (1.0 - 1e-12)).unwrap() < 1e-9);
        assert!(p2_cap(&params, 0.0).is_err());
        assert!(p2_cap(&params, params.slot).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let params = SystemParams::baseline(0.05, 100);
        let a = Allocation::new(15.0, 1e-3);
        let r = avg_rate_hardened(&params, &a).unwrap();
        assert!((r - 49830.5).abs() < 1.0, "{r}");
        assert_eq!(
            check_feasible(&params, &a, ConstraintVariant::BoxTauMax),
            FeasibilityStatus::Feasible
        );
        let over = Allocation::new(16.5, 1e-3);
        for v in [
            ConstraintVariant::BoxTauMax,
            ConstraintVariant::ExactHarvestCap,
        ] {
            assert_eq!(
                check_feasible(&params, &over, v),
                FeasibilityStatus::ViolatesP1
            );
        }
        let late = Allocation::new(15.0, 1.5e-3);
        assert_eq!(
            check_feasible(&params, &late, ConstraintVariant::BoxTauMax),
            FeasibilityStatus::ViolatesP2
        );
        assert_eq!(
            check_feasible(&params, &late, ConstraintVariant::ExactHarvestCap),
            FeasibilityStatus::ViolatesP2
        );
        // Lower power is allowed past τ_max under the exact cap.
        let late_low = Allocation::new(5.0, 1.5e-3);
        assert_eq!(
            check_feasible(&params, &late_low, ConstraintVariant::ExactHarvestCap),
            FeasibilityStatus::Feasible
        );
        // Past the slot end the harvest cap's right side turns negative, so it
        // is reported ahead of the slot-length check.
        let past = Allocation::new(1.0, params.slot * 1.01);
        for v in [
            ConstraintVariant::BoxTauMax,
            ConstraintVariant::ExactHarvestCap,
        ] {
            assert_eq!(
                check_feasible(&params, &past, v),
                FeasibilityStatus::ViolatesP2
            );
        }
    }

    #[test]
    fn weak_link_violates_qos_everywhere_in_box() {
        let params = SystemParams::baseline(0.01, 20);
        let tm = tau_max(&params);
        for i in 1..=50 {
            for j in 1..=50 {
                let a = Allocation::new(params.p1_max * i as f64 / 50.0, tm * j as f64 / 50.0);
                assert_eq!(
                    check_feasible(&params, &a, ConstraintVariant::BoxTauMax),
                    FeasibilityStatus::ViolatesQoS
                );
            }
        }
    }

    #[test]
    fn validate_rejects_bad_params() {
        let mut p = SystemParams::baseline(0.05, 100);
        assert!(p.validate().is_ok());
        p.eta = 1.2;
        assert!(p.validate().is_err());
        p.eta = 0.8;
        p.n_t = 0;
        assert!(p.validate().is_err());
        p.n_t = 4;
        p.bandwidth = -1.0;
        assert!(matches!(
            p.validate(),
            Err(ModelError::InvalidParam {
                name: "bandwidth",
                ..
            })
        ));
    }

    fn arb_params() -> impl Strategy<Value = SystemParams> {
        (
            0.1f64..1.0,
            1e-3f64..1.0,
            1e-3f64..1.0,
            1u32..512,
            0.1f64..100.0,
            0.1f64..100.0,
        )
            .prop_map(|(eta, alpha, theta, n_t, p1, p2)| SystemParams {
                eta,
                alpha,
                theta,
                n_t,
                p1_max: p1,
                p2_max: p2,
                ..SystemParams::baseline(alpha, n_t)
            })
    }

    proptest! {
        #[test]
        fn tau_max_cap_identity(params in arb_params()) {
            let tm = tau_max(&params);
            prop_assert!(tm > 0.0 && tm < params.slot);
            let cap = p2_cap(&params, tm).unwrap();
            prop_assert!((cap - params.p1_max).abs() <= 1e-12 * params.p1_max * 4.0);
        }

        #[test]
        fn box_is_inside_exact_cap(params in arb_params(), u in 1e-6f64..1.0, v in 1e-6f64..1.0) {
            let a = Allocation::new(u * params.p1_max, v * tau_max(&params));
            prop_assert!(a.p <= p2_cap(&params, a.tau).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn exact_rate_gap_is_log_identity(params in arb_params(), p in 0.01f64..15.0, frac in 0.01f64..0.99) {
            let a = Allocation::new(p, frac * params.slot);
            let n = f64::from(params.n_t);
            let x = hardened_log_argument(&params, a.p, a.tau);
            let exact = avg_rate_exact(&params, &a, n, n).unwrap();
            let hard = avg_rate_hardened(&params, &a).unwrap();
            let scale = (params.slot - a.tau) / params.slot * params.bandwidth;
            prop_assert!(exact >= hard);
            let gap = scale * (x.ln_1p() - x.ln()) / LN_2;
            prop_assert!(((exact - hard) - gap).abs() <= 1e-9 * exact.abs().max(scale));
        }

        #[test]
        fn hardened_rate_increases_in_p_and_n_t(params in arb_params(), p in 0.01f64..15.0, frac in 0.01f64..0.99) {
            let tau = frac * params.slot;
            prop_assume!(hardened_log_argument(&params, p, tau) >= 1.0);
            let base = rate_hardened_unchecked(&params, p, tau);
            prop_assert!(rate_hardened_unchecked(&params, p * 1.01, tau) > base);
            let more = SystemParams { n_t: params.n_t + 1, ..params };
            prop_assert!(rate_hardened_unchecked(&more, p, tau) > base);
        }

        #[test]
        fn efficiency_times_energy_is_throughput(params in arb_params(), p in 1e-4f64..15.0, frac in 0.01f64..0.99) {
            let a = Allocation::new(p, frac * params.slot);
            let lhs = energy_efficiency(&params, &a) * slot_energy(&params, &a);
            let rhs = avg_rate_hardened(&params, &a).unwrap().max(0.0) * params.slot;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }
    }
}
