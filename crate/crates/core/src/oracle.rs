//! Brute-force reference maximizer of the energy efficiency over a `(P, τ)` grid.
//!
//! Independent of the solver's calculus: it only evaluates the objective and
//! the feasibility check. It is also the only route that searches under the
//! exact harvesting cap.

use crate::model::{
    energy_efficiency, feasibility_and_rate, slot_energy, tau_max, Allocation, ConstraintVariant,
    FeasibilityStatus, SystemParams,
};
use crate::solver::{max_rate_allocation, DualState, Solution, SolveStatus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub n_p: usize,
    pub n_tau: usize,
    pub refine_levels: usize,
    pub refine_factor: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_p: 2001,
            n_tau: 2001,
            refine_levels: 2,
            refine_factor: 0.05,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_p < 2 || self.n_tau < 2 {
            return Err("grid counts n_p and n_tau must be at least 2".into());
        }
        if !(self.refine_factor > 0.0 && self.refine_factor < 1.0) {
            return Err("refine_factor must lie in (0, 1)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    ee: f64,
    alloc: Allocation,
}

impl Candidate {
    /// Higher efficiency wins; ties go to smaller P, then smaller τ.
    fn better(self, other: Self) -> Self {
        match self.ee.partial_cmp(&other.ee).unwrap_or(Ordering::Equal) {
            Ordering::Greater => self,
            Ordering::Less => other,
            Ordering::Equal => {
                let key = |c: &Self| (c.alloc.p, c.alloc.tau);
                if key(&self) <= key(&other) {
                    self
                } else {
                    other
                }
            }
        }
    }
}

/// A rectangle of the search space and its grid.
#[derive(Debug, Clone, Copy)]
struct Window {
    p_lo: f64,
    p_hi: f64,
    tau_lo: f64,
    tau_hi: f64,
}

fn linspace(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    lo + (hi - lo) * i as f64 / (n - 1) as f64
}

fn scan(
    params: &SystemParams,
    variant: ConstraintVariant,
    grid: &GridSpec,
    w: Window,
) -> Option<Candidate> {
    (0..grid.n_p)
        .into_par_iter()
        .filter_map(|i| {
            let p = linspace(w.p_lo, w.p_hi, grid.n_p, i);
            (0..grid.n_tau)
                .filter_map(|j| {
                    let alloc = Allocation::new(p, linspace(w.tau_lo, w.tau_hi, grid.n_tau, j));
                    let (status, rate) = feasibility_and_rate(params, &alloc, variant);
                    (status == FeasibilityStatus::Feasible).then(|| Candidate {
                        ee: rate.max(0.0) * params.slot / slot_energy(params, &alloc),
                        alloc,
                    })
                })
                .reduce(Candidate::better)
        })
        .reduce_with(Candidate::better)
}

/// Per-level record of the best efficiency found, for refinement checks.
#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub solution: Solution,
    pub level_best: Vec<f64>,
}

/// Refines around `best` inside `domain`, returning the final best and the
/// best value after each level (level 0 included).
fn refine(
    params: &SystemParams,
    variant: ConstraintVariant,
    grid: &GridSpec,
    domain: Window,
    mut best: Candidate,
) -> (Candidate, Vec<f64>) {
    let mut level_best = vec![best.ee];
    let (mut span_p, mut span_tau) = (domain.p_hi - domain.p_lo, domain.tau_hi - domain.tau_lo);
    for _ in 0..grid.refine_levels {
        span_p *= grid.refine_factor;
        span_tau *= grid.refine_factor;
        let w = Window {
            p_lo: (best.alloc.p - 0.5 * span_p).max(domain.p_lo),
            p_hi: (best.alloc.p + 0.5 * span_p).min(domain.p_hi),
            tau_lo: (best.alloc.tau - 0.5 * span_tau).max(domain.tau_lo),
            tau_hi: (best.alloc.tau + 0.5 * span_tau).min(domain.tau_hi),
        };
        if let Some(c) = scan(params, variant, grid, w) {
            best = best.better(c);
        }
        level_best.push(best.ee);
    }
    (best, level_best)
}

fn search(
    params: &SystemParams,
    variant: ConstraintVariant,
    grid: &GridSpec,
    domain: Window,
) -> Option<(Candidate, Vec<f64>)> {
    scan(params, variant, grid, domain).map(|c| refine(params, variant, grid, domain, c))
}

/// Exhaustive grid maximization with local refinement.
pub fn grid_search(params: &SystemParams, variant: ConstraintVariant, grid: &GridSpec) -> Solution {
    grid_search_report(params, variant, grid).solution
}

/// Like [`grid_search`], also returning the per-level best values.
///
/// Under the exact cap the feasible set is the τ ≤ τ_max box plus a tail
/// τ ∈ (τ_max, T) where P is capped below P1,max. The box part is searched
/// exactly as for [`ConstraintVariant::BoxTauMax`] and the tail separately, so
/// the exact-cap result can never fall below the box result.
pub fn grid_search_report(
    params: &SystemParams,
    variant: ConstraintVariant,
    grid: &GridSpec,
) -> GridReport {
    let p_hi = params.p1_max;
    let tm = tau_max(params);
    // Lower edges one step above zero keep the open domains open.
    let boxed = Window {
        p_lo: p_hi / grid.n_p as f64,
        p_hi,
        tau_lo: tm / grid.n_tau as f64,
        tau_hi: tm,
    };
    let tail = Window {
        tau_lo: tm,
        tau_hi: params.slot * (1.0 - 1e-9),
        ..boxed
    };

    let mut found = search(params, ConstraintVariant::BoxTauMax, grid, boxed);
    if variant == ConstraintVariant::ExactHarvestCap && tail.tau_hi > tail.tau_lo {
        if let Some((c, levels)) = search(params, variant, grid, tail) {
            found = Some(match found {
                None => (c, levels),
                Some((b, box_levels)) => (
                    b.better(c),
                    box_levels
                        .iter()
                        .zip(&levels)
                        .map(|(x, y)| x.max(*y))
                        .collect(),
                ),
            });
        }
    }

    let (max_rate, max_alloc) = max_rate_allocation(params, variant);
    let (best, level_best) = match found {
        Some(f) => f,
        None if params.r_min > 0.0 && max_rate < params.r_min => {
            return GridReport {
                solution: Solution {
                    alloc: max_alloc,
                    ee: 0.0,
                    rate: max_rate,
                    status: SolveStatus::Infeasible,
                    outer_iterations: 0,
                    trace: Vec::new(),
                    duals: DualState::default(),
                },
                level_best: vec![0.0],
            };
        }
        None => {
            // Feasible set thinner than the grid: seed from the max-rate point.
            let seed = Candidate {
                ee: energy_efficiency(params, &max_alloc),
                alloc: max_alloc,
            };
            let domain = if max_alloc.tau <= tm { boxed } else { tail };
            refine(params, variant, grid, domain, seed)
        }
    };

    let alloc = best.alloc;
    GridReport {
        solution: Solution {
            alloc,
            ee: best.ee,
            rate: feasibility_and_rate(params, &alloc, variant).1.max(0.0),
            status: SolveStatus::Optimal,
            outer_iterations: grid.refine_levels,
            trace: Vec::new(),
            duals: DualState::default(),
        },
        level_best,
    }
}
