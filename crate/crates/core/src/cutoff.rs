//! Collision-ordering cutoff: a cheap sufficient condition that one axis
//! reaches its collision before another, used to stop classification runs
//! long before the collision itself is resolved.
//!
//! For an ordered axis pair (i, j) the condition reads, in physical
//! variables, 0 < q_i < 0.4 q_j together with p_i < p_j. Its validity
//! reduces to the positivity of
//!
//!   f(a, b) = 4(1−a)/(a²+1)^{3/2} + 4/(b²+1)^{3/2} − 4a/(a²+b²)^{3/2}
//!           + 1/2 − 1/(2a²)
//!
//! being controlled on a ≥ 0.4-free region; the b → ∞ reduction of f has a
//! single root in (0, 1) that fixes the 0.4 margin.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Axis, PhysState, RegState};

/// Which ordered pairs a cutoff event watches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffScope {
    /// All six ordered pairs.
    AllPairs,
    /// Only (X, Y) and (Y, X): the orderings that decide membership in the
    /// first-collision region scanned by the search.
    XyPairs,
}

const ALL_PAIRS: [(Axis, Axis); 6] = [
    (Axis::X, Axis::Y),
    (Axis::Y, Axis::X),
    (Axis::X, Axis::Z),
    (Axis::Z, Axis::X),
    (Axis::Y, Axis::Z),
    (Axis::Z, Axis::Y),
];

/// Margin in the coordinate comparison q_i < MARGIN * q_j.
pub const CUTOFF_MARGIN: f64 = 0.4;

/// The comparison function underlying the cutoff condition.
pub fn cutoff_f(a: f64, b: f64) -> f64 {
    4.0 * (1.0 - a) / (a * a + 1.0).powf(1.5) + 4.0 / (b * b + 1.0).powf(1.5)
        - 4.0 * a / (a * a + b * b).powf(1.5)
        + 0.5
        - 0.5 / (a * a)
}

/// b → ∞ reduction of [`cutoff_f`]; only the pair (a, 1) interaction and the
/// self terms survive.
pub fn cutoff_f_limit(a: f64) -> f64 {
    4.0 * (1.0 - a) / (a * a + 1.0).powf(1.5) + 0.5 - 0.5 / (a * a)
}

/// Root of the b → ∞ reduction in (0, 1); the 0.4 margin sits safely below
/// it. Bisection to 1e-14.
pub fn cutoff_limit_root() -> f64 {
    let (mut lo, mut hi) = (0.3_f64, 0.9_f64);
    debug_assert!(cutoff_f_limit(lo) < 0.0 && cutoff_f_limit(hi) > 0.0);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if cutoff_f_limit(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Returns the first ordered pair (first, later) in scope whose cutoff
/// condition holds at `st`: axis `first` is then guaranteed to reach its
/// collision before axis `later`.
pub fn cutoff_pair(st: &RegState, scope: CutoffScope) -> Option<(Axis, Axis)> {
    let pairs: &[(Axis, Axis)] = match scope {
        CutoffScope::AllPairs => &ALL_PAIRS,
        CutoffScope::XyPairs => &ALL_PAIRS[..2],
    };
    for &(first, later) in pairs {
        let (i, j) = (first.index(), later.index());
        let qi = st.q[i] * st.q[i];
        let qj = st.q[j] * st.q[j];
        if qi > 0.0 && qi < CUTOFF_MARGIN * qj {
            let pi = st.p[i] / (2.0 * st.q[i]);
            let pj = st.p[j] / (2.0 * st.q[j]);
            if pi < pj {
                return Some((first, later));
            }
        }
    }
    None
}

/// True when some ordered pair's collision order is already decided at the
/// physical state.
pub fn cutoff_predicate(st: &PhysState) -> bool {
    for &(first, later) in &ALL_PAIRS {
        let (i, j) = (first.index(), later.index());
        if st.q[i] > 0.0 && st.q[i] < CUTOFF_MARGIN * st.q[j] && st.p[i] < st.p[j] {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PhysState;
    use approx::assert_abs_diff_eq;

    #[test]
    fn limit_root_value() {
        // Independent oracle: symbolic bisection of the reduced function.
        assert_abs_diff_eq!(cutoff_limit_root(), 0.523142561925, epsilon = 1e-9);
    }

    #[test]
    fn limit_agrees_with_large_b() {
        for a in [0.45, 0.523, 0.6] {
            assert_abs_diff_eq!(cutoff_f(a, 1e8), cutoff_f_limit(a), epsilon = 1e-10);
        }
    }

    #[test]
    fn margin_sits_below_limit_root() {
        assert!(CUTOFF_MARGIN < cutoff_limit_root());
        assert!(cutoff_f_limit(CUTOFF_MARGIN) < 0.0);
    }

    #[test]
    fn pair_detects_leading_axis() {
        // x well inside y's coordinate with smaller momentum.
        let phys = PhysState::new([0.01, 1.0, 1.0], [-1.0, 0.0, 0.0]);
        let st = phys.to_regularized().unwrap();
        assert_eq!(
            cutoff_pair(&st, CutoffScope::AllPairs),
            Some((Axis::X, Axis::Y))
        );
        assert_eq!(
            cutoff_pair(&st, CutoffScope::XyPairs),
            Some((Axis::X, Axis::Y))
        );
        assert!(cutoff_predicate(&phys));
    }

    #[test]
    fn pair_scope_masks_z_orderings() {
        // z leads but the xy scope must ignore it.
        let phys = PhysState::new([1.0, 1.0, 0.01], [0.0, 0.0, -1.0]);
        let st = phys.to_regularized().unwrap();
        assert_eq!(
            cutoff_pair(&st, CutoffScope::AllPairs),
            Some((Axis::Z, Axis::X))
        );
        assert_eq!(cutoff_pair(&st, CutoffScope::XyPairs), None);
        assert!(cutoff_predicate(&phys));
    }

    #[test]
    fn pair_requires_momentum_ordering() {
        // Coordinate condition holds but the momentum ordering fails.
        let st = PhysState::new([0.01, 1.0, 1.0], [5.0, 0.0, 0.0])
            .to_regularized()
            .unwrap();
        assert_eq!(cutoff_pair(&st, CutoffScope::AllPairs), None);
    }

    #[test]
    fn predicate_false_on_comparable_coordinates() {
        let phys = PhysState::new([1.0, 1.0, 1.0], [3.0, -2.0, 0.5]);
        assert!(!cutoff_predicate(&phys));
    }

    #[test]
    fn pair_false_at_collision_start() {
        let st = RegState::new([0.0, 1.5, 1.5], [std::f64::consts::SQRT_2, -1.48, 1.48]);
        assert_eq!(cutoff_pair(&st, CutoffScope::AllPairs), None);
    }
}
