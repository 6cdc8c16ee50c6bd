//! One-dimensional search helpers shared by the solver and the feasibility
//! pre-check.

/// 1/φ.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximizer of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(x, f(x))` for the best point seen, endpoints included, so a
/// monotone `f` resolves to the right boundary.
pub fn golden_section_max<F>(f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [(lo, f(lo)), (hi, f(hi)), (c, fc), (d, fd), (mid, f(mid))]
        .into_iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cand| {
            if cand.1 > best.1 {
                cand
            } else {
                best
            }
        })
}

/// Outcome of bracketing a root of a decreasing function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bracket {
    /// Sign change inside the interval; root located.
    Root(f64),
    /// `g(lo) ≤ 0`: the function is non-positive on the whole interval.
    BelowAtLo,
    /// `g(hi) ≥ 0`: the function is non-negative on the whole interval.
    AboveAtHi,
}

/// Bisection for a root of a non-increasing `g` on `[lo, hi]`.
pub fn bisect_decreasing<G>(g: G, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Bracket
where
    G: Fn(f64) -> f64,
{
    let glo = g(lo);
    if !(glo > 0.0) {
        return Bracket::BelowAtLo;
    }
    let ghi = g(hi);
    if !(ghi < 0.0) {
        return Bracket::AboveAtHi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if b - a <= xtol || m <= a || m >= b {
            break;
        }
        if g(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Bracket::Root(0.5 * (a + b))
}
