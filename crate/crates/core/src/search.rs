//! First-collision classification and the two-level shooting search for the
//! collision-based periodic orbit.
//!
//! Initial conditions live on the one-collision section
//! γ(0) = (0, α, α, √2, −β, β): an x-axis collision with the other two pairs
//! at equal height α and mirrored transverse momenta ±β. The region Σ
//! collects the (α, β) whose next collision is the y axis. Inside Σ the
//! trajectory first reaches the symmetric crossing Q1 = Q2 at a rescaled
//! time τ, and the orbit closes when the crossing state has the reflected
//! form (a, a, b, c, −c, 0):
//!
//!   inner level — given α, shoot in β for P3(τ) = 0;
//!   outer level — shoot in α for P1(τ) + P2(τ) = 0.
//!
//! Twelve τ-legs assembled by the symmetries close the periodic orbit.

use serde::{Deserialize, Serialize};

pub use crate::cutoff::{
    cutoff_f, cutoff_f_limit, cutoff_limit_root, cutoff_pair, cutoff_predicate, CutoffScope,
    CUTOFF_MARGIN,
};
use crate::dynamics::{self, Axis, RegState, COLLISION_MOMENTUM};
use crate::error::{Error, Result};
use crate::integrator::{
    self, EventDirection, EventHit, EventKind, EventSpec, IntegratorConfig, Sample, Trajectory,
};

/// Coarse scan step in β (and in α for the outer grid).
const SCAN_STEP: f64 = 0.1;
/// β scan ceiling for the inner root.
const BETA_SCAN_MAX: f64 = 6.0;
/// Outer coarse α grid endpoints.
const ALPHA_GRID: (f64, f64) = (0.5, 3.3);
/// Half-width of the guided β bracket around a neighbouring root.
const GUIDED_HALF_WIDTH: f64 = 0.15;
/// Classification-boundary bisections stop at this bracket width: deciding a
/// point costs integration time inversely proportional to its distance from
/// the boundary, so root tolerances meant for smooth functions do not apply.
const BOUNDARY_WIDTH_TOL: f64 = 1e-4;
const BOUNDARY_SPAN_BASE: f64 = 8.0;
const BOUNDARY_SPAN_CAP: f64 = 1200.0;

/// Energy and tolerances threaded through the search layer.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Fixed energy level; must be negative.
    pub energy: f64,
    /// Bisection width for the smooth shooting roots (β and α).
    pub tol_root: f64,
    pub integrator: IntegratorConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            energy: -1.0,
            tol_root: 1e-10,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.energy.is_nan() || self.energy >= 0.0 {
            return Err(Error::EnergyNotNegative {
                energy: self.energy,
            });
        }
        if !(self.tol_root > 0.0 && self.tol_root.is_finite()) {
            return Err(Error::InvalidConfig {
                reason: format!("tol_root = {}", self.tol_root),
            });
        }
        self.integrator.validate()
    }
}

/// A point of the (α, β) section plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaQuery {
    pub alpha: f64,
    pub beta: f64,
}

impl SigmaQuery {
    pub fn new(alpha: f64, beta: f64) -> Self {
        SigmaQuery { alpha, beta }
    }
}

/// Collision-section state for (α, β).
pub fn initial_state(alpha: f64, beta: f64) -> RegState {
    RegState::new([0.0, alpha, alpha], [COLLISION_MOMENTUM, -beta, beta])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SigmaOutcome {
    /// The x pair collides next (directly located or cutoff-predicted).
    FirstCollisionAxis1,
    /// The y pair collides next: the point belongs to Σ.
    FirstCollisionAxis2,
    /// The z pair collides next.
    FirstCollisionAxis3,
    /// A cutoff firing fixed a collision ordering that does not by itself
    /// decide membership. The classifier only arms membership-deciding
    /// pairs, so this appears when mapping general cutoff events.
    CutoffTriggered { first: Axis, later: Axis },
    /// The quadruple-collision guard tripped.
    QuadrupleApproach,
    /// Nothing decided within the integration span.
    Inconclusive,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SigmaVerdict {
    pub outcome: SigmaOutcome,
    /// Rescaled time of the deciding event (for cutoff decisions this is
    /// the prediction time, not the collision time).
    pub s_star: Option<f64>,
    /// True when the verdict came from the collision-ordering cutoff rather
    /// than a located collision.
    pub via_cutoff: bool,
    /// State at the deciding event.
    pub terminal: Option<RegState>,
}

impl SigmaVerdict {
    /// Membership in Σ, when decided.
    pub fn in_sigma(&self) -> Option<bool> {
        match self.outcome {
            SigmaOutcome::FirstCollisionAxis2 => Some(true),
            SigmaOutcome::FirstCollisionAxis1 | SigmaOutcome::FirstCollisionAxis3 => Some(false),
            SigmaOutcome::CutoffTriggered { first, .. } => Some(first == Axis::Y),
            SigmaOutcome::QuadrupleApproach | SigmaOutcome::Inconclusive => None,
        }
    }

    pub fn first_axis(&self) -> Option<Axis> {
        match self.outcome {
            SigmaOutcome::FirstCollisionAxis1 => Some(Axis::X),
            SigmaOutcome::FirstCollisionAxis2 => Some(Axis::Y),
            SigmaOutcome::FirstCollisionAxis3 => Some(Axis::Z),
            SigmaOutcome::CutoffTriggered { first, .. } => Some(first),
            _ => None,
        }
    }
}

fn check_alpha(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite() && beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidQuery {
            reason: format!("(alpha, beta) = ({alpha}, {beta})"),
        });
    }
    Ok(())
}

/// Decides which pair collides next after the s = 0 collision. Terminates on
/// a located collision, on the membership-deciding cutoff orderings (x, y) /
/// (y, x), or on the quadruple guard; otherwise reports the span ran out.
/// Orderings involving the z pair do not decide membership and are left to
/// the located events.
pub fn classify_sigma(query: SigmaQuery, sc: &SearchConfig) -> Result<SigmaVerdict> {
    classify_with_span(query, sc, sc.integrator.max_span)
}

/// [`classify_sigma`] with an explicit span; boundary bisections escalate it
/// far beyond the configured default.
pub fn classify_with_span(query: SigmaQuery, sc: &SearchConfig, span: f64) -> Result<SigmaVerdict> {
    sc.validate()?;
    check_alpha(query.alpha, query.beta)?;
    let events = [
        EventSpec::terminal(EventKind::QZero(Axis::X), EventDirection::Any),
        EventSpec::terminal(EventKind::QZero(Axis::Y), EventDirection::Any),
        EventSpec::terminal(EventKind::QZero(Axis::Z), EventDirection::Any),
        EventSpec::terminal(
            EventKind::Cutoff(CutoffScope::XyPairs),
            EventDirection::Rising,
        ),
    ];
    let cfg = sc.integrator.with_span(span);
    match integrator::propagate(
        &initial_state(query.alpha, query.beta),
        sc.energy,
        &cfg,
        &events,
    ) {
        Ok(traj) => {
            let hit = traj.terminal_hit().expect("terminal end has a hit");
            let (outcome, via_cutoff) = match (hit.kind, hit.pair) {
                (EventKind::QZero(Axis::X), _) => (SigmaOutcome::FirstCollisionAxis1, false),
                (EventKind::QZero(Axis::Y), _) => (SigmaOutcome::FirstCollisionAxis2, false),
                (EventKind::QZero(Axis::Z), _) => (SigmaOutcome::FirstCollisionAxis3, false),
                (EventKind::Cutoff(_), Some((Axis::X, _))) => {
                    (SigmaOutcome::FirstCollisionAxis1, true)
                }
                (EventKind::Cutoff(_), Some((Axis::Y, _))) => {
                    (SigmaOutcome::FirstCollisionAxis2, true)
                }
                (kind, pair) => unreachable!("unexpected terminal event {kind:?} / {pair:?}"),
            };
            Ok(SigmaVerdict {
                outcome,
                s_star: Some(hit.s),
                via_cutoff,
                terminal: Some(hit.state),
            })
        }
        Err(Error::NearQuadruple { s, .. }) => Ok(SigmaVerdict {
            outcome: SigmaOutcome::QuadrupleApproach,
            s_star: Some(s),
            via_cutoff: false,
            terminal: None,
        }),
        Err(Error::MaxSpanExceeded { .. }) => Ok(SigmaVerdict {
            outcome: SigmaOutcome::Inconclusive,
            s_star: None,
            via_cutoff: false,
            terminal: None,
        }),
        Err(e) => Err(e),
    }
}

/// The crossing event for one (α, β), or why it was not reached.
pub(crate) fn crossing(alpha: f64, beta: f64, sc: &SearchConfig) -> Result<EventHit> {
    check_alpha(alpha, beta)?;
    let events = [
        EventSpec::terminal(EventKind::Q1EqualsQ2, EventDirection::Rising),
        EventSpec::terminal(EventKind::QZero(Axis::X), EventDirection::Any),
        EventSpec::terminal(EventKind::QZero(Axis::Y), EventDirection::Any),
        EventSpec::terminal(EventKind::QZero(Axis::Z), EventDirection::Any),
        EventSpec::terminal(
            EventKind::Cutoff(CutoffScope::XyPairs),
            EventDirection::Rising,
        ),
    ];
    let stopped = match integrator::propagate(
        &initial_state(alpha, beta),
        sc.energy,
        &sc.integrator,
        &events,
    ) {
        Ok(traj) => {
            let hit = *traj.terminal_hit().expect("terminal end has a hit");
            if hit.kind == EventKind::Q1EqualsQ2 {
                return Ok(hit);
            }
            match (hit.kind, hit.pair) {
                (EventKind::QZero(ax), _) => format!("axis {ax} collision at s = {:.6}", hit.s),
                (EventKind::Cutoff(_), Some((f, l))) => {
                    format!(
                        "cutoff predicts axis {f} before axis {l} at s = {:.6}",
                        hit.s
                    )
                }
                _ => "unexpected terminal event".to_string(),
            }
        }
        Err(Error::MaxSpanExceeded { span }) => format!("no crossing within span {span}"),
        Err(Error::NearQuadruple { s, .. }) => format!("quadruple approach at s = {s:.6}"),
        Err(e) => return Err(e),
    };
    Err(Error::CrossingNotReached {
        alpha,
        beta,
        stopped,
    })
}

/// Inner shooting root: β with P3(τ) = 0 at fixed α.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BetaRoot {
    pub alpha: f64,
    pub beta: f64,
    /// Rescaled time of the crossing.
    pub tau: f64,
    /// Physical time of the crossing.
    pub t_tau: f64,
    /// Crossing state at the root.
    pub crossing: RegState,
    /// Residual P3 at the accepted root.
    pub p3: f64,
    /// Sign changes seen on the scan grid beyond the first bracket.
    pub extra_sign_changes: usize,
}

fn bisect_beta(
    alpha: f64,
    mut lo: (f64, f64),
    mut hi: (f64, f64),
    extra_sign_changes: usize,
    sc: &SearchConfig,
) -> Result<BetaRoot> {
    debug_assert!(lo.1 * hi.1 <= 0.0);
    while (hi.0 - lo.0).abs() > sc.tol_root {
        let mid = 0.5 * (lo.0 + hi.0);
        let p3 = crossing(alpha, mid, sc)?.state.p[2];
        if p3 == 0.0 {
            lo = (mid, p3);
            break;
        }
        if (p3 < 0.0) == (lo.1 < 0.0) {
            lo = (mid, p3);
        } else {
            hi = (mid, p3);
        }
    }
    let beta = 0.5 * (lo.0 + hi.0);
    let hit = crossing(alpha, beta, sc)?;
    Ok(BetaRoot {
        alpha,
        beta,
        tau: hit.s,
        t_tau: hit.t,
        crossing: hit.state,
        p3: hit.state.p[2],
        extra_sign_changes,
    })
}

/// Confirms the accepted root still classifies inside Σ (escalating the span
/// a few times if the default is undecided). Undecided is tolerated; a
/// decided "outside" is the error the caller wants to see.
fn confirm_in_sigma(alpha: f64, beta: f64, sc: &SearchConfig) -> Result<()> {
    let mut span = sc.integrator.max_span;
    for _ in 0..3 {
        let verdict = classify_with_span(SigmaQuery::new(alpha, beta), sc, span)?;
        match verdict.in_sigma() {
            Some(true) => return Ok(()),
            Some(false) => return Err(Error::RootOutsideSigma { alpha, beta }),
            None => span *= 4.0,
        }
    }
    Ok(())
}

/// Scans β upward in steps of 0.1 from 0, brackets the first sign change of
/// P3(τ), bisects it to `tol_root`, and confirms the root lies in Σ. Extra
/// sign changes further up the scanned grid are counted, not followed.
pub fn find_beta(alpha: f64, sc: &SearchConfig) -> Result<BetaRoot> {
    sc.validate()?;
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket: Option<((f64, f64), (f64, f64))> = None;
    let mut extra = 0;
    let mut evaluations = 0;
    let steps = (BETA_SCAN_MAX / SCAN_STEP).round() as usize;
    for k in 0..=steps {
        let beta = k as f64 * SCAN_STEP;
        let p3 = match crossing(alpha, beta, sc) {
            Ok(hit) => hit.state.p[2],
            Err(e @ Error::CrossingNotReached { .. }) => {
                if bracket.is_some() {
                    break; // the admissible β interval ended past our bracket
                }
                if evaluations == 0 {
                    return Err(e);
                }
                return Err(Error::NoSignChange {
                    alpha,
                    beta_max: beta,
                    evaluations,
                });
            }
            Err(e) => return Err(e),
        };
        evaluations += 1;
        if let Some((pb, pr)) = prev {
            if pr * p3 < 0.0 {
                if bracket.is_none() {
                    bracket = Some(((pb, pr), (beta, p3)));
                } else {
                    extra += 1;
                }
            }
        }
        prev = Some((beta, p3));
    }
    let (lo, hi) = bracket.ok_or(Error::NoSignChange {
        alpha,
        beta_max: BETA_SCAN_MAX,
        evaluations,
    })?;
    let root = bisect_beta(alpha, lo, hi, extra, sc)?;
    confirm_in_sigma(alpha, root.beta, sc)?;
    Ok(root)
}

/// Inner root with a bracket seeded near `guess` (from a neighbouring α);
/// widens the bracket geometrically and falls back to the full scan if the
/// guess never straddles the root. Skips the scan-grid bookkeeping.
pub fn find_beta_near(alpha: f64, guess: f64, sc: &SearchConfig) -> Result<BetaRoot> {
    sc.validate()?;
    let mut half = GUIDED_HALF_WIDTH;
    while half < 2.0 {
        let lo_b = (guess - half).max(0.0);
        let hi_b = guess + half;
        let lo = crossing(alpha, lo_b, sc).map(|h| (lo_b, h.state.p[2]));
        let hi = crossing(alpha, hi_b, sc).map(|h| (hi_b, h.state.p[2]));
        match (lo, hi) {
            (Ok(lo), Ok(hi)) if lo.1 * hi.1 < 0.0 => {
                return bisect_beta(alpha, lo, hi, 0, sc);
            }
            (Ok(_), Ok(_)) => half *= 2.0,
            _ => break,
        }
    }
    find_beta(alpha, sc)
}

/// Inner root from a narrow bracket around a known-good guess; errors
/// instead of falling back to the full scan.
fn beta_root_close(alpha: f64, guess: f64, sc: &SearchConfig) -> Result<BetaRoot> {
    let mut half = 1e-6;
    while half <= 0.1 {
        let lo_b = (guess - half).max(0.0);
        let hi_b = guess + half;
        let lo = (lo_b, crossing(alpha, lo_b, sc)?.state.p[2]);
        let hi = (hi_b, crossing(alpha, hi_b, sc)?.state.p[2]);
        if lo.1 * hi.1 < 0.0 {
            return bisect_beta(alpha, lo, hi, 0, sc);
        }
        half *= 4.0;
    }
    Err(Error::BracketFailure {
        reason: format!("no inner sign change near (alpha, beta) = ({alpha}, {guess})"),
    })
}

/// Re-roots the section data of a known solution at bisection-limited
/// tolerances. The monodromy's trivial multiplier pair splits like the
/// square root of the section error, so the stability reduction needs far
/// more accurate (α, β, τ) than the orbit constants themselves.
pub(crate) fn polish(sol: &OrbitSolution, sc: &SearchConfig) -> Result<OrbitSolution> {
    let mut tight = *sc;
    tight.energy = sol.energy;
    tight.tol_root = sc.tol_root.min(1e-13);
    tight.integrator.event_tol = sc.integrator.event_tol.min(1e-12);
    tight.validate()?;

    let residual_at = |alpha: f64, guess: f64| -> Result<(f64, f64)> {
        let root = beta_root_close(alpha, guess, &tight)?;
        Ok((root.crossing.p[0] + root.crossing.p[1], root.beta))
    };

    let mut half = 1e-7;
    let (mut lo, mut hi) = loop {
        let (a0, a1) = (sol.alpha - half, sol.alpha + half);
        let (r0, b0) = residual_at(a0, sol.beta)?;
        let (r1, b1) = residual_at(a1, sol.beta)?;
        if r0 * r1 <= 0.0 {
            break ((a0, r0, b0), (a1, r1, b1));
        }
        half *= 4.0;
        if half > 1e-2 {
            return Err(Error::BracketFailure {
                reason: format!("no outer sign change within 1e-2 of alpha = {}", sol.alpha),
            });
        }
    };

    let mut beta_guess = 0.5 * (lo.2 + hi.2);
    while (hi.0 - lo.0).abs() > tight.tol_root {
        let mid = 0.5 * (lo.0 + hi.0);
        let (r, b) = residual_at(mid, beta_guess)?;
        beta_guess = b;
        if r == 0.0 {
            lo = (mid, r, b);
            hi = (mid, r, b);
            break;
        }
        if (r < 0.0) == (lo.1 < 0.0) {
            lo = (mid, r, b);
        } else {
            hi = (mid, r, b);
        }
    }
    let alpha = 0.5 * (lo.0 + hi.0);
    let root = beta_root_close(alpha, beta_guess, &tight)?;
    Ok(OrbitSolution {
        alpha,
        beta: root.beta,
        tau: root.tau,
        period: 12.0 * root.tau,
        period_t: 12.0 * root.t_tau,
        energy: sol.energy,
    })
}

/// One point of the outer shooting curve.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ResidualSample {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    /// P1 + P2 at the crossing; zero on the periodic orbit.
    pub residual: f64,
}

impl ResidualSample {
    fn from_root(root: &BetaRoot) -> Self {
        ResidualSample {
            alpha: root.alpha,
            beta: root.beta,
            tau: root.tau,
            residual: root.crossing.p[0] + root.crossing.p[1],
        }
    }
}

/// Outer residual P1(τ) + P2(τ) at the inner root for this α.
pub fn residual(alpha: f64, sc: &SearchConfig) -> Result<ResidualSample> {
    Ok(ResidualSample::from_root(&find_beta(alpha, sc)?))
}

/// The closed orbit's defining data.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OrbitSolution {
    pub alpha: f64,
    pub beta: f64,
    /// Rescaled time to the first crossing; the period is 12 τ.
    pub tau: f64,
    /// Full period in rescaled time.
    pub period: f64,
    /// Full period in physical time.
    pub period_t: f64,
    pub energy: f64,
}

impl OrbitSolution {
    pub fn gamma0(&self) -> RegState {
        initial_state(self.alpha, self.beta)
    }
}

/// Orbit plus the coarse residual curve that bracketed it.
#[derive(Clone, Debug)]
pub struct OrbitSearch {
    pub solution: OrbitSolution,
    pub residuals: Vec<ResidualSample>,
}

/// Two-level shooting search. Walks the coarse α grid 0.5..=3.3 in steps of
/// 0.1 chaining β guesses, demands exactly one sign change of the residual,
/// then bisects α to `tol_root` with interpolated β seeds.
pub fn find_orbit(sc: &SearchConfig) -> Result<OrbitSearch> {
    sc.validate()?;
    let steps = ((ALPHA_GRID.1 - ALPHA_GRID.0) / SCAN_STEP).round() as usize;
    let mut residuals = Vec::with_capacity(steps + 1);
    let mut guess: Option<f64> = None;
    for k in 0..=steps {
        let alpha = ALPHA_GRID.0 + k as f64 * SCAN_STEP;
        let root = match guess {
            None => find_beta(alpha, sc)?,
            Some(g) => find_beta_near(alpha, g, sc)?,
        };
        guess = Some(root.beta);
        residuals.push(ResidualSample::from_root(&root));
    }
    let changes = residuals
        .windows(2)
        .filter(|w| w[0].residual * w[1].residual < 0.0)
        .count();
    if changes != 1 {
        return Err(Error::ResidualBracket {
            changes,
            samples: residuals
                .iter()
                .map(|r| (r.alpha, r.beta, r.residual))
                .collect(),
        });
    }
    let at = residuals
        .windows(2)
        .position(|w| w[0].residual * w[1].residual < 0.0)
        .expect("counted above");
    let mut lo = residuals[at];
    let mut hi = residuals[at + 1];
    while hi.alpha - lo.alpha > sc.tol_root {
        let alpha = 0.5 * (lo.alpha + hi.alpha);
        // Linear β seed between the bracket's roots.
        let w = (alpha - lo.alpha) / (hi.alpha - lo.alpha);
        let seed = lo.beta + w * (hi.beta - lo.beta);
        let sample = ResidualSample::from_root(&find_beta_near(alpha, seed, sc)?);
        if sample.residual == 0.0 {
            lo = sample;
            hi = sample;
            break;
        }
        if (sample.residual < 0.0) == (lo.residual < 0.0) {
            lo = sample;
        } else {
            hi = sample;
        }
    }
    let alpha = 0.5 * (lo.alpha + hi.alpha);
    let root = find_beta_near(alpha, 0.5 * (lo.beta + hi.beta), sc)?;
    let solution = OrbitSolution {
        alpha,
        beta: root.beta,
        tau: root.tau,
        period: 12.0 * root.tau,
        period_t: 12.0 * root.t_tau,
        energy: sc.energy,
    };
    Ok(OrbitSearch {
        solution,
        residuals,
    })
}

/// The orbit integrated over its full period in six 2τ legs.
#[derive(Clone, Debug)]
pub struct OrbitExtension {
    /// States at 0, 2τ, ..., 12τ (collision checkpoints).
    pub checkpoints: [Sample; 7],
    /// ‖γ(2kτ) − S_f^k γ(0)‖_∞ for k = 1..6.
    pub checkpoint_defects: [f64; 6],
    /// ||P_axis| − √2| at each collision checkpoint (axes cycle y, z, x).
    pub collision_defects: [f64; 6],
    /// ‖γ(12τ) − γ(0)‖_∞.
    pub closure_error: f64,
    /// max |Γ| over all recorded samples.
    pub gamma_drift: f64,
    /// Stitched samples over [0, 12τ].
    pub samples: Vec<Sample>,
    /// Collision events located strictly inside the legs, if any.
    pub events: Vec<EventHit>,
}

/// Integrates the solved orbit over one period in 2τ legs, checking each
/// collision checkpoint against the symmetry-propagated start state.
pub fn extend_orbit(sol: &OrbitSolution, sc: &SearchConfig) -> Result<OrbitExtension> {
    sc.validate()?;
    let sf = dynamics::forward_symmetry();
    let observers = [
        EventSpec::observer(EventKind::QZero(Axis::X), EventDirection::Any),
        EventSpec::observer(EventKind::QZero(Axis::Y), EventDirection::Any),
        EventSpec::observer(EventKind::QZero(Axis::Z), EventDirection::Any),
    ];
    let leg_cfg = sc.integrator.with_span(2.0 * sol.tau);

    let gamma0 = sol.gamma0();
    let mut checkpoints = [Sample {
        s: 0.0,
        t: 0.0,
        state: gamma0,
    }; 7];
    let mut checkpoint_defects = [0.0; 6];
    let mut collision_defects = [0.0; 6];
    let mut samples: Vec<Sample> = Vec::new();
    let mut events: Vec<EventHit> = Vec::new();
    let mut gamma_drift = 0.0_f64;

    let mut state = gamma0;
    let mut expected = gamma0.to_vector();
    let mut s_base = 0.0;
    let mut t_base = 0.0;
    let collision_axes = [Axis::Y, Axis::Z, Axis::X, Axis::Y, Axis::Z, Axis::X];
    for k in 0..6 {
        let traj: Trajectory = integrator::propagate(&state, sc.energy, &leg_cfg, &observers)?;
        for sm in &traj.samples {
            let shifted = Sample {
                s: s_base + sm.s,
                t: t_base + sm.t,
                state: sm.state,
            };
            if samples.last().map(|l| l.s) != Some(shifted.s) {
                samples.push(shifted);
            }
            gamma_drift = gamma_drift.max(dynamics::gamma(&sm.state, sc.energy)?.abs());
        }
        for ev in &traj.events {
            let mut shifted = *ev;
            shifted.s += s_base;
            shifted.t += t_base;
            events.push(shifted);
        }
        s_base += traj.end.s;
        t_base += traj.end.t;
        state = traj.end.state;
        checkpoints[k + 1] = Sample {
            s: s_base,
            t: t_base,
            state,
        };

        expected = sf * expected;
        let got = state.to_vector();
        checkpoint_defects[k] = (got - expected).abs().max();
        let ax = collision_axes[k].index();
        collision_defects[k] = (state.p[ax].abs() - COLLISION_MOMENTUM).abs();
    }

    Ok(OrbitExtension {
        checkpoints,
        checkpoint_defects,
        collision_defects,
        closure_error: checkpoint_defects[5],
        gamma_drift,
        samples,
        events,
    })
}

/// A classification-boundary point located by bisection.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub alpha: f64,
    pub beta: f64,
    /// Final bracket width (in the bisected coordinate).
    pub width: f64,
    /// True when the location is resolved to the width tolerance, either
    /// by bisection or by an undecidable point pinning the edge.
    pub decided: bool,
}

fn span_hint(width: f64) -> f64 {
    (0.1 / width).clamp(BOUNDARY_SPAN_BASE, BOUNDARY_SPAN_CAP)
}

/// Classifies with escalating spans until decided or the cap is reached.
fn classify_decided(query: SigmaQuery, sc: &SearchConfig, start_span: f64) -> Result<Option<bool>> {
    let mut span = start_span;
    loop {
        let verdict = classify_with_span(query, sc, span)?;
        match verdict.in_sigma() {
            Some(v) => return Ok(Some(v)),
            None if span >= BOUNDARY_SPAN_CAP => return Ok(None),
            None => span = (span * 4.0).min(BOUNDARY_SPAN_CAP),
        }
    }
}

/// Bisects the membership boundary along a line in the (α, β) plane.
/// `point(x)` names the query at parameter x; `lo` must be inside, `hi`
/// outside; `decide` maps (query, bracket width) to a membership call.
fn bisect_boundary(
    point: impl Fn(f64) -> SigmaQuery,
    mut lo: f64,
    mut hi: f64,
    decide: impl Fn(SigmaQuery, f64) -> Result<Option<bool>>,
) -> Result<(f64, f64, bool)> {
    for (x, expect) in [(lo, true), (hi, false)] {
        match decide(point(x), (hi - lo).abs())? {
            Some(v) if v == expect => {}
            other => {
                return Err(Error::BracketFailure {
                    reason: format!(
                        "endpoint {x} classified {other:?}, expected in_sigma = {expect}"
                    ),
                })
            }
        }
    }
    loop {
        let width = (hi - lo).abs();
        let mid = 0.5 * (lo + hi);
        if width <= BOUNDARY_WIDTH_TOL {
            return Ok((mid, width, true));
        }
        match decide(point(mid), width)? {
            Some(true) => lo = mid,
            // An undecided midpoint hugs the boundary inside the decision
            // window's resolution band. Interior points always decide once
            // they sit further than (decision-time constant) / window from
            // the edge, so folding the band toward `hi` biases the result
            // by less than that band. The exterior band can be much wider
            // (decision times there grow faster than c/d), so an undecided
            // point must not fold toward `lo`.
            Some(false) | None => hi = mid,
        }
    }
}

/// Decision window for the on-axis boundary. Approaching the axis edge the
/// time to the deciding y collision rises smoothly and steeply (roughly
/// c/d at distance d, then faster), so the located edge is a function of
/// how long a non-deciding trajectory is allowed to run. 128 resolves the
/// steep regime: quadrupling the window moves the edge by under 2e-4, and
/// a 10% change moves it by about 3e-5.
const AXIS_DECISION_SPAN: f64 = 128.0;

/// Largest α for which the on-axis point (α, 0) still lies in Σ, bisected
/// from the bracket [3, 4] to width 1e-4. Membership is decided within the
/// fixed window [`AXIS_DECISION_SPAN`]; trajectories still undecided there
/// count as outside.
pub fn find_alpha_star(sc: &SearchConfig) -> Result<BoundaryPoint> {
    sc.validate()?;
    let (alpha, width, decided) = bisect_boundary(
        |a| SigmaQuery::new(a, 0.0),
        3.0,
        4.0,
        |q, _| Ok(classify_with_span(q, sc, AXIS_DECISION_SPAN)?.in_sigma()),
    )?;
    Ok(BoundaryPoint {
        alpha,
        beta: 0.0,
        width,
        decided,
    })
}

/// Upper β edge of Σ at fixed α: scans β upward for an outside endpoint,
/// then bisects to width 1e-4.
pub fn sigma_boundary(alpha: f64, sc: &SearchConfig) -> Result<BoundaryPoint> {
    sc.validate()?;
    check_alpha(alpha, 0.0)?;
    let mut lo = 0.0_f64;
    let mut hi = None;
    for beta in [0.5, 1.0, 2.0, 4.0, 8.0] {
        match classify_decided(SigmaQuery::new(alpha, beta), sc, sc.integrator.max_span)? {
            Some(true) => lo = beta,
            Some(false) => {
                hi = Some(beta);
                break;
            }
            // A scan point undecidable at the span cap lies on the edge
            // itself, within the decision-time resolution.
            None => {
                return Ok(BoundaryPoint {
                    alpha,
                    beta,
                    width: BOUNDARY_WIDTH_TOL,
                    decided: true,
                })
            }
        }
    }
    let hi = hi.ok_or_else(|| Error::BracketFailure {
        reason: format!("no outside endpoint up to beta = 8 at alpha = {alpha}"),
    })?;
    let (beta, width, decided) = bisect_boundary(
        |b| SigmaQuery::new(alpha, b),
        lo,
        hi,
        |q, w| classify_decided(q, sc, span_hint(w)),
    )?;
    Ok(BoundaryPoint {
        alpha,
        beta,
        width,
        decided,
    })
}
