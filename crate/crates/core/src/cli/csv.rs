//! Result rows and their CSV encoding.

use super::config::SchemeKind;
use crate::model::{ConstraintVariant, SystemParams};
use crate::solver::Solution;
use std::fmt::Write as _;

pub const RESULT_HEADER: &str = "alpha,theta,n_t,scheme,variant,p_star_w,tau_star_s,ee_bits_per_joule,rate_bps,feasible,outer_iterations,status";
pub const TRACE_HEADER: &str = "alpha,theta,n_t,scheme,iteration,q,f";
pub const PLOT_HEADER: &str = "figure,series,x,ee";
pub const VALIDATE_HEADER: &str =
    "alpha,theta,n_t,variant,solver_status,solver_ee,oracle_ee,rel_gap,flagged";

/// Formats like C's `%.9g`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone)]
pub struct ResultRow {
    pub params: SystemParams,
    pub scheme: SchemeKind,
    pub variant: ConstraintVariant,
    pub solution: Solution,
}

impl ResultRow {
    pub fn encode(&self, ee_scale: f64) -> String {
        let s = &self.solution;
        [
            sig9(self.params.alpha),
            sig9(self.params.theta),
            self.params.n_t.to_string(),
            self.scheme.as_str().to_string(),
            self.variant.as_str().to_string(),
            sig9(s.alloc.p),
            sig9(s.alloc.tau),
            sig9(s.ee * ee_scale),
            sig9(s.rate),
            s.is_feasible().to_string(),
            s.outer_iterations.to_string(),
            s.status.as_str().to_string(),
        ]
        .join(",")
    }

    pub fn encode_trace(&self, out: &mut String) {
        for (i, tp) in self.solution.trace.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                sig9(self.params.alpha),
                sig9(self.params.theta),
                self.params.n_t,
                self.scheme.as_str(),
                i + 1,
                sig9(tp.q),
                sig9(tp.f)
            );
        }
    }
}

pub fn results_csv(rows: &[ResultRow], ee_scale: f64) -> String {
    let mut out = String::from(RESULT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.encode(ee_scale));
        out.push('\n');
    }
    out
}

pub fn trace_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        r.encode_trace(&mut out);
    }
    out
}
