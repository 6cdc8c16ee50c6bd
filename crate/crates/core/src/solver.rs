//! Energy-efficiency maximization over transmit power and transfer duration.
//!
//! The ratio objective is handled with a Dinkelbach outer loop: for a trial
//! efficiency `q` the subtractive problem `max R̄·T − q·(P0·T + P·τ)` is solved
//! by a Lagrangian inner loop, and `q` is replaced by the ratio achieved at the
//! inner optimum until the subtractive value drops below `ε`.
//!
//! The inner loop alternates a primal step, which solves the KKT stationarity
//! conditions for `(P, τ)` at fixed multipliers, with projected subgradient
//! steps on the multipliers of `P ≤ P1,max`, `τ ≤ τ_max`, `τ ≤ T` and
//! `R̄ ≥ r_min`.

use crate::model::{
    self, energy_efficiency, rate_gradient_tau, rate_hardened_unchecked, slot_energy, tau_max,
    Allocation, ConstraintVariant, FeasibilityStatus, ModelError, SystemParams,
};
use crate::numeric::{bisect_decreasing, golden_section_max, Bracket};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use thiserror::Error;

/// Relative tolerance on primal residuals used to stop the dual iteration.
const DUAL_RTOL: f64 = 1e-9;
/// Margin kept between the search interval and the slot end.
const SLOT_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("log argument is below 1 across the whole feasible box")]
    InnerInfeasible,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Lagrange multipliers for `P ≤ P1,max`, `τ ≤ τ_max`, `τ ≤ T` and `R̄ ≥ r_min`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub mu: f64,
    pub vartheta: f64,
    pub nu: f64,
    pub upsilon: f64,
}

/// Constant subgradient step sizes, one per multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualSteps {
    /// Per watt of slack in `P ≤ P1,max`.
    pub mu: f64,
    /// Per watt-equivalent of slack in `τ ≤ τ_max`.
    pub vartheta: f64,
    /// Per second of slack in `τ ≤ T`.
    pub nu: f64,
    /// Per bit/s of slack in the QoS constraint.
    pub upsilon: f64,
}

impl Default for DualSteps {
    fn default() -> Self {
        Self {
            mu: 1e-3,
            vartheta: 1e-3,
            nu: 1.0,
            upsilon: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Dinkelbach termination threshold in bits per slot. `None` scales it
    /// to `1e-6·W·T`.
    #[serde(rename = "epsilon_bits")]
    pub epsilon: Option<f64>,
    pub steps: DualSteps,
    pub max_outer: usize,
    pub max_dual_iters: usize,
    #[serde(rename = "bisection_tol_s")]
    pub bisection_tol: f64,
    pub init_fraction: f64,
    /// Use 1/((T−τ)·ln2) in the τ-stationarity condition instead of the
    /// derivative of the hardened rate. Comparison runs only.
    #[serde(rename = "paper_eq18_literal")]
    pub literal_tau_gradient: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            steps: DualSteps::default(),
            max_outer: 100,
            max_dual_iters: 5000,
            bisection_tol: 1e-15,
            init_fraction: 0.5,
            literal_tau_gradient: false,
        }
    }
}

impl SolverConfig {
    pub fn epsilon(&self, params: &SystemParams) -> f64 {
        self.epsilon
            .unwrap_or(1e-6 * params.bandwidth * params.slot)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str| Err(SolverError::InvalidConfig(what.to_string()));
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return bad("epsilon_bits must be positive");
            }
        }
        let s = &self.steps;
        if ![s.mu, s.vartheta, s.nu, s.upsilon]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite())
        {
            return bad("dual steps must be positive");
        }
        if self.max_outer == 0 {
            return bad("max_outer must be at least 1");
        }
        if self.max_dual_iters == 0 {
            return bad("max_dual_iters must be at least 1");
        }
        if !(self.bisection_tol > 0.0) {
            return bad("bisection_tol_s must be positive");
        }
        if !(self.init_fraction > 0.0 && self.init_fraction < 1.0) {
            return bad("init_fraction must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterationsReached,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::Infeasible => "infeasible",
            Self::MaxIterationsReached => "max_iterations_reached",
        }
    }
}

/// One outer iteration: the trial efficiency and the subtractive value
/// reached by the inner solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub q: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub alloc: Allocation,
    /// Achieved efficiency in bits/J; zero when infeasible.
    pub ee: f64,
    /// Clamped average rate at `alloc`, bits/s.
    pub rate: f64,
    pub status: SolveStatus,
    pub outer_iterations: usize,
    pub trace: Vec<TracePoint>,
    /// Multipliers at the last inner solve.
    pub duals: DualState,
}

impl Solution {
    pub fn is_feasible(&self) -> bool {
        self.status != SolveStatus::Infeasible
    }

    fn infeasible(params: &SystemParams, alloc: Allocation) -> Self {
        Self {
            alloc,
            ee: 0.0,
            rate: clamped_rate(params, &alloc),
            status: SolveStatus::Infeasible,
            outer_iterations: 0,
            trace: Vec::new(),
            duals: DualState::default(),
        }
    }
}

fn clamped_rate(params: &SystemParams, alloc: &Allocation) -> f64 {
    rate_hardened_unchecked(params, alloc.p, alloc.tau).max(0.0)
}

/// Upper end of the τ search interval: τ_max, kept off the slot end.
fn tau_upper(params: &SystemParams) -> f64 {
    tau_max(params).min(params.slot * (1.0 - SLOT_MARGIN))
}

/// Smallest τ at which the hardened log argument reaches 1 for power `p`.
pub fn tau_unit_argument(params: &SystemParams, p: f64) -> f64 {
    let k = params.snr_gain() * p;
    params.slot / (k + 1.0)
}

/// Subtractive objective `R̄·T − q·(P0·T + P·τ)`, bits per slot, unclamped rate.
pub fn dinkelbach_value(params: &SystemParams, alloc: &Allocation, q: f64) -> f64 {
    rate_hardened_unchecked(params, alloc.p, alloc.tau) * params.slot
        - q * slot_energy(params, alloc)
}

/// Power that zeroes the P-stationarity condition at fixed τ, clamped to `(0, P1,max]`.
pub fn stationary_p(params: &SystemParams, tau: f64, q: f64, mu: f64, upsilon: f64) -> f64 {
    let denom = q * tau + mu;
    if !(denom > 0.0) {
        return params.p1_max;
    }
    let t = params.slot;
    let p = params.bandwidth * (t + upsilon) * (t - tau) / (LN_2 * t * denom);
    p.min(params.p1_max)
}

/// Residual of the P-stationarity condition, `(T+υ)·∂R̄/∂P − q·τ − μ`.
pub fn power_stationarity_residual(
    params: &SystemParams,
    alloc: &Allocation,
    q: f64,
    duals: &DualState,
) -> f64 {
    (params.slot + duals.upsilon) * model::rate_gradient_p(params, alloc.p, alloc.tau)
        - q * alloc.tau
        - duals.mu
}

/// Residual of the τ-stationarity condition, `(T+υ)·∂R̄/∂τ − q·P − ϑ − ν`.
pub fn tau_stationarity_residual(
    params: &SystemParams,
    p: f64,
    tau: f64,
    q: f64,
    duals: &DualState,
    literal_form: bool,
) -> Result<f64, ModelError> {
    let grad = rate_gradient_tau(params, p, tau, literal_form)?;
    Ok((params.slot + duals.upsilon) * grad - q * p - duals.vartheta - duals.nu)
}

/// One projected subgradient step on every multiplier.
pub fn update_duals(
    params: &SystemParams,
    alloc: &Allocation,
    duals: &DualState,
    cfg: &SolverConfig,
) -> DualState {
    let s = &cfg.steps;
    let rate = rate_hardened_unchecked(params, alloc.p, alloc.tau);
    DualState {
        mu: (duals.mu - s.mu * (params.p1_max - alloc.p)).max(0.0),
        vartheta: (duals.vartheta - s.vartheta * (tau_max(params) - alloc.tau)).max(0.0),
        nu: (duals.nu - s.nu * (params.slot - alloc.tau)).max(0.0),
        upsilon: (duals.upsilon - s.upsilon * (rate - params.r_min)).max(0.0),
    }
}

fn lagrangian(params: &SystemParams, alloc: &Allocation, q: f64, d: &DualState) -> f64 {
    let rate = rate_hardened_unchecked(params, alloc.p, alloc.tau);
    (params.slot + d.upsilon) * rate
        - q * slot_energy(params, alloc)
        - d.mu * alloc.p
        - (d.vartheta + d.nu) * alloc.tau
}

/// Maximizer of the Lagrangian over the box at fixed multipliers.
fn primal_response(
    params: &SystemParams,
    q: f64,
    duals: &DualState,
    cfg: &SolverConfig,
    tau_lo: f64,
    tau_hi: f64,
) -> Allocation {
    let at = |tau: f64| Allocation::new(stationary_p(params, tau, q, duals.mu, duals.upsilon), tau);
    let residual = |tau: f64| {
        let a = at(tau);
        tau_stationarity_residual(params, a.p, tau, q, duals, cfg.literal_tau_gradient)
            .unwrap_or(f64::INFINITY)
    };
    let mut candidates = vec![at(tau_lo), at(tau_hi)];
    if let Bracket::Root(tau) = bisect_decreasing(residual, tau_lo, tau_hi, cfg.bisection_tol, 200)
    {
        candidates.push(at(tau));
    }
    candidates
        .into_iter()
        .map(|a| (lagrangian(params, &a, q, duals), a))
        .fold(None::<(f64, Allocation)>, |best, cand| match best {
            Some(b) if b.0 >= cand.0 => Some(b),
            _ => Some(cand),
        })
        .map(|(_, a)| a)
        .expect("at least two candidates")
}

/// τ maximizing the rate at fixed `p` on `[lo, hi]`; the rate is concave in τ.
fn rate_peak_tau(params: &SystemParams, p: f64, lo: f64, hi: f64, xtol: f64) -> f64 {
    let g = |tau: f64| rate_gradient_tau(params, p, tau, false).unwrap_or(f64::INFINITY);
    match bisect_decreasing(g, lo, hi, xtol, 200) {
        Bracket::Root(t) => t,
        Bracket::BelowAtLo => lo,
        Bracket::AboveAtHi => hi,
    }
}

fn meets_qos(params: &SystemParams, p: f64, tau: f64) -> bool {
    params.r_min <= 0.0 || rate_hardened_unchecked(params, p, tau) >= params.r_min
}

/// Moves τ from `from` toward `peak` until the QoS constraint holds, keeping
/// the end of the bisection interval that satisfies it.
fn qos_boundary(params: &SystemParams, p: f64, from: f64, peak: f64) -> f64 {
    let (mut bad, mut good) = (from, peak);
    for _ in 0..200 {
        let mid = 0.5 * (bad + good);
        if mid == bad || mid == good {
            break;
        }
        if meets_qos(params, p, mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Nearest QoS-feasible allocation along τ, raising P to P1,max if needed.
fn restore_qos(
    params: &SystemParams,
    alloc: Allocation,
    tau_hi: f64,
    xtol: f64,
) -> Result<Allocation, SolverError> {
    if meets_qos(params, alloc.p, alloc.tau) {
        return Ok(alloc);
    }
    let lo = params.slot * 1e-12;
    let mut p = alloc.p;
    let mut peak = rate_peak_tau(params, p, lo, tau_hi, xtol);
    if !meets_qos(params, p, peak) {
        p = params.p1_max;
        peak = rate_peak_tau(params, p, lo, tau_hi, xtol);
        if !meets_qos(params, p, peak) {
            return Err(SolverError::InnerInfeasible);
        }
        if meets_qos(params, p, alloc.tau) {
            return Ok(Allocation::new(p, alloc.tau));
        }
    }
    Ok(Allocation::new(p, qos_boundary(params, p, alloc.tau, peak)))
}

/// Lagrangian dual solve of the subtractive problem at efficiency `q`.
pub fn inner_maximize(
    params: &SystemParams,
    q: f64,
    cfg: &SolverConfig,
) -> Result<(Allocation, DualState), SolverError> {
    inner_maximize_from(params, q, DualState::default(), cfg)
}

/// [`inner_maximize`] warm-started from the given multipliers.
pub fn inner_maximize_from(
    params: &SystemParams,
    q: f64,
    start: DualState,
    cfg: &SolverConfig,
) -> Result<(Allocation, DualState), SolverError> {
    let tau_hi = tau_upper(params);
    let tau_lo = tau_unit_argument(params, params.p1_max) + 1e-12;
    if tau_lo >= tau_hi {
        return Err(SolverError::InnerInfeasible);
    }
    let tm = tau_max(params);
    let mut duals = start;
    let mut alloc = primal_response(params, q, &duals, cfg, tau_lo, tau_hi);
    for _ in 0..cfg.max_dual_iters {
        let next = update_duals(params, &alloc, &duals, cfg);
        let converged = dual_converged(params, &alloc, &next, tm);
        duals = next;
        if converged {
            break;
        }
        alloc = primal_response(params, q, &duals, cfg, tau_lo, tau_hi);
    }
    let projected = Allocation::new(alloc.p.min(params.p1_max), alloc.tau.min(tm));
    let alloc = restore_qos(params, projected, tau_hi, cfg.bisection_tol)?;
    Ok((alloc, duals))
}

/// Primal feasibility and complementary slackness, both to `DUAL_RTOL`.
fn dual_converged(params: &SystemParams, alloc: &Allocation, d: &DualState, tm: f64) -> bool {
    let rate = rate_hardened_unchecked(params, alloc.p, alloc.tau);
    let slack_ok = |mult: f64, slack: f64, scale: f64| {
        slack >= -DUAL_RTOL * scale && (mult == 0.0 || slack.abs() <= DUAL_RTOL * scale)
    };
    slack_ok(d.mu, params.p1_max - alloc.p, params.p1_max)
        && slack_ok(d.vartheta, tm - alloc.tau, tm)
        && slack_ok(d.nu, params.slot - alloc.tau, params.slot)
        && (params.r_min <= 0.0 || slack_ok(d.upsilon, rate - params.r_min, params.r_min))
}

/// Highest clamped rate over the feasible set of `variant`, with its allocation.
///
/// The rate grows with P, so P sits at its cap and only τ is searched.
pub fn max_rate_allocation(params: &SystemParams, variant: ConstraintVariant) -> (f64, Allocation) {
    let lo = params.slot * 1e-12;
    let tm = tau_max(params);
    let rate_at = |p: f64, tau: f64| rate_hardened_unchecked(params, p, tau);
    let (tau, r) = golden_section_max(
        |t| rate_at(params.p1_max, t),
        lo,
        tau_upper(params),
        1e-15,
        400,
    );
    let mut best = (r, Allocation::new(params.p1_max, tau));
    if variant == ConstraintVariant::ExactHarvestCap {
        let capped = |t: f64| {
            model::p2_cap(params, t)
                .map(|c| c.min(params.p1_max))
                .unwrap_or(params.p1_max)
        };
        let hi = params.slot * (1.0 - SLOT_MARGIN);
        if tm < hi {
            let (tau, r) = golden_section_max(|t| rate_at(capped(t), t), tm, hi, 1e-15, 400);
            if r > best.0 {
                best = (r, Allocation::new(capped(tau), tau));
            }
        }
    }
    (best.0.max(0.0), best.1)
}

pub fn max_achievable_rate(params: &SystemParams, variant: ConstraintVariant) -> f64 {
    max_rate_allocation(params, variant).0
}

fn qos_unreachable(params: &SystemParams, max_rate: f64) -> bool {
    params.r_min > 0.0 && max_rate < params.r_min * (1.0 - model::FEASIBILITY_RTOL)
}

fn prepare(params: &SystemParams, cfg: &SolverConfig) -> Result<(), SolverError> {
    params.validate()?;
    cfg.validate()
}

/// Joint power and duration allocation by Dinkelbach iteration.
pub fn solve_joint(params: &SystemParams, cfg: &SolverConfig) -> Result<Solution, SolverError> {
    prepare(params, cfg)?;
    let (max_rate, max_alloc) = max_rate_allocation(params, ConstraintVariant::BoxTauMax);
    if qos_unreachable(params, max_rate) {
        return Ok(Solution::infeasible(params, max_alloc));
    }
    let eps = cfg.epsilon(params);
    let tau_hi = tau_upper(params);
    let start = Allocation::new(
        cfg.init_fraction * params.p1_max,
        cfg.init_fraction * tau_max(params),
    );
    let mut alloc = match restore_qos(params, start, tau_hi, cfg.bisection_tol) {
        Ok(a) => a,
        Err(SolverError::InnerInfeasible) => return Ok(Solution::infeasible(params, max_alloc)),
        Err(e) => return Err(e),
    };
    let mut q = energy_efficiency(params, &alloc);
    let mut duals = DualState::default();
    let mut trace = Vec::new();

    for _ in 0..cfg.max_outer {
        let (cand, d) = match inner_maximize_from(params, q, duals, cfg) {
            Ok(r) => r,
            Err(SolverError::InnerInfeasible) => {
                return Ok(Solution::infeasible(params, max_alloc))
            }
            Err(e) => return Err(e),
        };
        duals = d;
        let f = dinkelbach_value(params, &cand, q);
        trace.push(TracePoint { q, f });
        if f > eps {
            alloc = cand;
            q = energy_efficiency(params, &cand);
            continue;
        }
        if energy_efficiency(params, &cand) > energy_efficiency(params, &alloc) {
            alloc = cand;
        }
        return Ok(finish(params, alloc, SolveStatus::Optimal, trace, duals));
    }
    Ok(finish(
        params,
        alloc,
        SolveStatus::MaxIterationsReached,
        trace,
        duals,
    ))
}

fn finish(
    params: &SystemParams,
    alloc: Allocation,
    status: SolveStatus,
    trace: Vec<TracePoint>,
    duals: DualState,
) -> Solution {
    debug_assert!(
        status != SolveStatus::Optimal
            || model::check_feasible(params, &alloc, ConstraintVariant::BoxTauMax)
                == FeasibilityStatus::Feasible
    );
    Solution {
        alloc,
        ee: energy_efficiency(params, &alloc),
        rate: clamped_rate(params, &alloc),
        status,
        outer_iterations: trace.len(),
        trace,
        duals,
    }
}

/// Baseline that fixes P = P1,max and optimizes τ alone.
pub fn solve_duration_only(
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<Solution, SolverError> {
    prepare(params, cfg)?;
    let (max_rate, max_alloc) = max_rate_allocation(params, ConstraintVariant::BoxTauMax);
    if qos_unreachable(params, max_rate) {
        return Ok(Solution::infeasible(params, max_alloc));
    }
    let p = params.p1_max;
    let tau_hi = tau_upper(params);
    let floor = tau_unit_argument(params, p) + 1e-12;
    if floor >= tau_hi {
        return Ok(Solution::infeasible(params, max_alloc));
    }
    // QoS-feasible interval around the rate peak.
    let peak = max_alloc.tau;
    let (lo, hi) = if params.r_min > 0.0 {
        let lo = if meets_qos(params, p, floor) {
            floor
        } else {
            qos_boundary(params, p, floor, peak)
        };
        let hi = if meets_qos(params, p, tau_hi) {
            tau_hi
        } else {
            qos_boundary(params, p, tau_hi, peak)
        };
        (lo, hi)
    } else {
        (floor, tau_hi)
    };

    let ee_at = |tau: f64| energy_efficiency(params, &Allocation::new(p, tau));
    let (mut tau, _) = golden_section_max(ee_at, lo, hi, cfg.bisection_tol, 400);
    let mut q = ee_at(tau);
    let eps = cfg.epsilon(params);
    let mut trace = Vec::new();
    let mut status = SolveStatus::MaxIterationsReached;
    for _ in 0..cfg.max_outer {
        let g = |t: f64| {
            params.slot * rate_gradient_tau(params, p, t, false).unwrap_or(f64::INFINITY) - q * p
        };
        let cand = match bisect_decreasing(g, lo, hi, cfg.bisection_tol, 200) {
            Bracket::Root(t) => t,
            Bracket::BelowAtLo => lo,
            Bracket::AboveAtHi => hi,
        };
        let f = dinkelbach_value(params, &Allocation::new(p, cand), q);
        trace.push(TracePoint { q, f });
        if f > eps {
            tau = cand;
            q = ee_at(cand);
        } else {
            if ee_at(cand) > ee_at(tau) {
                tau = cand;
            }
            status = SolveStatus::Optimal;
            break;
        }
    }
    Ok(finish(
        params,
        Allocation::new(p, tau),
        status,
        trace,
        DualState::default(),
    ))
}
