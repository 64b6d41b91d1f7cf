//! Fixed-step RK4 propagation of the regularized flow, with bisection event
//! location and a coupled variational frame.
//!
//! The combined state is (Q, P, t): physical time rides along through
//! dt/ds = Q1²Q2²Q3², so event states carry both clocks. Event location
//! re-steps from the last stored grid point with a single shrunken RK4 step,
//! which keeps located states on the same accuracy budget as the grid.

use nalgebra::Matrix6;

use crate::cutoff::{cutoff_pair, CutoffScope};
use crate::dynamics::{self, Axis, RegState};
use crate::error::{Error, Result};

/// Step-size and guard parameters for a propagation run.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct IntegratorConfig {
    /// RK4 step in rescaled time s.
    pub step: f64,
    /// Abort (or stop, when no terminal event is armed) at this span.
    pub max_span: f64,
    /// Bisection width for event location, in s.
    pub event_tol: f64,
    /// Quadruple-collision guard: abort when min over pairs of
    /// Q_i² + Q_j² drops below this floor.
    pub quad_floor: f64,
    /// Record every k-th grid point; 0 keeps endpoints and events only.
    pub sample_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            step: 1e-5,
            max_span: 10.0,
            event_tol: 1e-8,
            quad_floor: 1e-12,
            sample_stride: 0,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step > 0.0
            && self.step.is_finite()
            && self.max_span > 0.0
            && self.max_span.is_finite()
            && self.event_tol > 0.0
            && self.quad_floor >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig {
                reason: format!(
                    "step = {}, max_span = {}, event_tol = {}, quad_floor = {}",
                    self.step, self.max_span, self.event_tol, self.quad_floor
                ),
            })
        }
    }

    /// Same parameters with a different span.
    pub fn with_span(mut self, span: f64) -> Self {
        self.max_span = span;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventDirection {
    Rising,
    Falling,
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// Q_i crosses zero: a binary collision on that axis.
    QZero(Axis),
    /// P_i crosses zero.
    PZero(Axis),
    /// Q1 − Q2 crosses zero: the symmetric crossing section.
    Q1EqualsQ2,
    /// The collision-ordering cutoff fires (false → true transition).
    /// Direction is ignored for this kind.
    Cutoff(CutoffScope),
}

#[derive(Clone, Copy, Debug)]
pub struct EventSpec {
    pub kind: EventKind,
    pub direction: EventDirection,
    pub terminal: bool,
}

impl EventSpec {
    pub fn terminal(kind: EventKind, direction: EventDirection) -> Self {
        EventSpec {
            kind,
            direction,
            terminal: true,
        }
    }

    pub fn observer(kind: EventKind, direction: EventDirection) -> Self {
        EventSpec {
            kind,
            direction,
            terminal: false,
        }
    }
}

/// One recorded point of a trajectory.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub s: f64,
    pub t: f64,
    pub state: RegState,
}

/// A located event.
#[derive(Clone, Copy, Debug)]
pub struct EventHit {
    /// Index into the spec slice handed to the propagator.
    pub spec_index: usize,
    pub kind: EventKind,
    pub s: f64,
    pub t: f64,
    pub state: RegState,
    /// For cutoff hits: (first, later) collision ordering detected.
    pub pair: Option<(Axis, Axis)>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<EventHit>,
    pub end: Sample,
    /// Index into `events` of the terminal hit that stopped the run, if any.
    pub terminal_event: Option<usize>,
}

impl Trajectory {
    pub fn terminal_hit(&self) -> Option<&EventHit> {
        self.terminal_event.map(|i| &self.events[i])
    }
}

/// One RK4 step of the combined (Q, P, t) system.
pub fn rk4_step(state: &RegState, t: f64, h: f64, energy: f64) -> Result<(RegState, f64)> {
    let mut rhs = base_rhs(energy);
    let y = pack_base(state, t);
    let out = rk4_step_vec(&y, h, &mut rhs)?;
    Ok((unpack_state(&out), out[6]))
}

/// Integrates from `reg0` (t = 0) until the first terminal event or
/// `cfg.max_span`. Reaching the span is an error when a terminal event was
/// armed, and a normal end otherwise.
pub fn propagate(
    reg0: &RegState,
    energy: f64,
    cfg: &IntegratorConfig,
    events: &[EventSpec],
) -> Result<Trajectory> {
    let y0 = pack_base(reg0, 0.0);
    let mut rhs = base_rhs(energy);
    drive(&y0, &mut rhs, cfg, events)
}

/// Integrates the state together with a 6×6 variational frame X(s) solving
/// X' = J ∇²Γ(γ(s)) X from X(0) = `frame0`. Event location re-steps the
/// combined system, so the returned frame matches the end state exactly.
pub fn propagate_variational(
    reg0: &RegState,
    frame0: &Matrix6<f64>,
    energy: f64,
    cfg: &IntegratorConfig,
    events: &[EventSpec],
) -> Result<(Trajectory, Matrix6<f64>)> {
    let mut y0 = [0.0; 43];
    y0[..6].copy_from_slice(&pack_base(reg0, 0.0)[..6]);
    y0[6] = 0.0;
    for col in 0..6 {
        for row in 0..6 {
            y0[7 + 6 * col + row] = frame0[(row, col)];
        }
    }
    let mut rhs = variational_rhs(energy);
    let (traj, end_y) = drive_full(&y0, &mut rhs, cfg, events)?;
    let mut frame = Matrix6::zeros();
    for col in 0..6 {
        for row in 0..6 {
            frame[(row, col)] = end_y[7 + 6 * col + row];
        }
    }
    Ok((traj, frame))
}

/// End state and physical time after integrating a fixed span with no
/// events armed.
pub fn state_at(
    reg0: &RegState,
    energy: f64,
    span: f64,
    cfg: &IntegratorConfig,
) -> Result<(RegState, f64)> {
    let traj = propagate(reg0, energy, &cfg.with_span(span), &[])?;
    Ok((traj.end.state, traj.end.t))
}

fn pack_base(state: &RegState, t: f64) -> [f64; 7] {
    let a = state.as_array();
    [a[0], a[1], a[2], a[3], a[4], a[5], t]
}

fn unpack_state<const N: usize>(y: &[f64; N]) -> RegState {
    RegState::new([y[0], y[1], y[2]], [y[3], y[4], y[5]])
}

fn base_rhs(energy: f64) -> impl FnMut(&[f64; 7]) -> Result<[f64; 7]> {
    move |y| {
        let st = unpack_state(y);
        let v = dynamics::vector_field(&st, energy)?;
        Ok([
            v[0],
            v[1],
            v[2],
            v[3],
            v[4],
            v[5],
            dynamics::time_rescale(&st),
        ])
    }
}

fn variational_rhs(energy: f64) -> impl FnMut(&[f64; 43]) -> Result<[f64; 43]> {
    move |y| {
        let st = unpack_state(y);
        let v = dynamics::vector_field(&st, energy)?;
        let hess = dynamics::hess_gamma(&st, energy)?;
        let mut out = [0.0; 43];
        out[..6].copy_from_slice(&v);
        out[6] = dynamics::time_rescale(&st);
        // J ∇²Γ: top rows take the P-rows of the Hessian, bottom rows the
        // negated Q-rows.
        for col in 0..6 {
            let x = &y[7 + 6 * col..13 + 6 * col];
            for row in 0..3 {
                let mut top = 0.0;
                let mut bot = 0.0;
                for k in 0..6 {
                    top += hess[(row + 3, k)] * x[k];
                    bot -= hess[(row, k)] * x[k];
                }
                out[7 + 6 * col + row] = top;
                out[7 + 6 * col + row + 3] = bot;
            }
        }
        Ok(out)
    }
}

fn lin_comb<const N: usize>(y: &[f64; N], k: &[f64; N], c: f64) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += c * k[i];
    }
    out
}

fn rk4_step_vec<const N: usize, F>(y: &[f64; N], h: f64, rhs: &mut F) -> Result<[f64; N]>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    let k1 = rhs(y)?;
    let k2 = rhs(&lin_comb(y, &k1, 0.5 * h))?;
    let k3 = rhs(&lin_comb(y, &k2, 0.5 * h))?;
    let k4 = rhs(&lin_comb(y, &k3, h))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
    Ok(out)
}

fn min_pair_sum(st: &RegState) -> f64 {
    let s = [st.q[0] * st.q[0], st.q[1] * st.q[1], st.q[2] * st.q[2]];
    (s[0] + s[1]).min(s[0] + s[2]).min(s[1] + s[2])
}

/// Signed event function for smooth kinds; cutoff uses ±1 as a pseudo-sign.
fn event_value(kind: EventKind, st: &RegState) -> f64 {
    match kind {
        EventKind::QZero(ax) => st.q[ax.index()],
        EventKind::PZero(ax) => st.p[ax.index()],
        EventKind::Q1EqualsQ2 => st.q[0] - st.q[1],
        EventKind::Cutoff(scope) => {
            if cutoff_pair(st, scope).is_some() {
                1.0
            } else {
                -1.0
            }
        }
    }
}

fn crossed(kind: EventKind, direction: EventDirection, g0: f64, g1: f64) -> bool {
    // Strict sign requirement on the left keeps an event that starts exactly
    // on its zero (the s = 0 collision) from firing immediately.
    let rising = g0 < 0.0 && g1 >= 0.0;
    let falling = g0 > 0.0 && g1 <= 0.0;
    match kind {
        EventKind::Cutoff(_) => rising,
        _ => match direction {
            EventDirection::Rising => rising,
            EventDirection::Falling => falling,
            EventDirection::Any => rising || falling,
        },
    }
}

type Located<const N: usize> = (f64, [f64; N]);

/// Bisects the crossing inside (s0, s0 + h], re-stepping from y0 each probe.
#[allow(clippy::too_many_arguments)]
fn locate<const N: usize, F>(
    spec: &EventSpec,
    s0: f64,
    y0: &[f64; N],
    h: f64,
    g0: f64,
    y1: &[f64; N],
    tol: f64,
    rhs: &mut F,
) -> Result<Located<N>>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    let mut lo = 0.0_f64;
    let mut hi = h;
    let mut y_hi = *y1;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let y_mid = rk4_step_vec(y0, mid, rhs)?;
        let g_mid = event_value(spec.kind, &unpack_state(&y_mid));
        if crossed(spec.kind, spec.direction, g0, g_mid) {
            hi = mid;
            y_hi = y_mid;
        } else {
            lo = mid;
        }
    }
    Ok((s0 + hi, y_hi))
}

fn drive<F>(
    y0: &[f64; 7],
    rhs: &mut F,
    cfg: &IntegratorConfig,
    events: &[EventSpec],
) -> Result<Trajectory>
where
    F: FnMut(&[f64; 7]) -> Result<[f64; 7]>,
{
    drive_full(y0, rhs, cfg, events).map(|(traj, _)| traj)
}

fn drive_full<const N: usize, F>(
    y_init: &[f64; N],
    rhs: &mut F,
    cfg: &IntegratorConfig,
    events: &[EventSpec],
) -> Result<(Trajectory, [f64; N])>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    cfg.validate()?;
    let has_terminal = events.iter().any(|e| e.terminal);

    let mut y = *y_init;
    let mut s = 0.0_f64;
    let state0 = unpack_state(&y);
    guard(&state0, s, cfg)?;

    let mut g: Vec<f64> = events
        .iter()
        .map(|e| event_value(e.kind, &state0))
        .collect();

    let mut samples = vec![Sample {
        s,
        t: y[6],
        state: state0,
    }];
    let mut hits: Vec<EventHit> = Vec::new();

    let mut step_index = 0_usize;
    while s < cfg.max_span {
        let h = cfg.step.min(cfg.max_span - s);
        let y_next = rk4_step_vec(&y, h, rhs)?;
        let s_next = if h < cfg.step { cfg.max_span } else { s + h };
        let st_next = unpack_state(&y_next);
        if !y_next.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { s: s_next });
        }

        // Locate every crossing inside this step, earliest first; stop at
        // the first terminal one.
        let mut located: Vec<(usize, Located<N>)> = Vec::new();
        for (idx, spec) in events.iter().enumerate() {
            let g1 = event_value(spec.kind, &st_next);
            if crossed(spec.kind, spec.direction, g[idx], g1) {
                let loc = locate(spec, s, &y, h, g[idx], &y_next, cfg.event_tol, rhs)?;
                located.push((idx, loc));
            }
            g[idx] = g1;
        }
        located.sort_by(|a, b| a.1 .0.total_cmp(&b.1 .0));
        for (idx, (s_hit, y_hit)) in located {
            let st_hit = unpack_state(&y_hit);
            let pair = match events[idx].kind {
                EventKind::Cutoff(scope) => cutoff_pair(&st_hit, scope),
                _ => None,
            };
            hits.push(EventHit {
                spec_index: idx,
                kind: events[idx].kind,
                s: s_hit,
                t: y_hit[6],
                state: st_hit,
                pair,
            });
            if events[idx].terminal {
                let end = Sample {
                    s: s_hit,
                    t: y_hit[6],
                    state: st_hit,
                };
                let terminal_event = Some(hits.len() - 1);
                if samples.last().map(|l| l.s) != Some(end.s) {
                    samples.push(end);
                }
                return Ok((
                    Trajectory {
                        samples,
                        events: hits,
                        end,
                        terminal_event,
                    },
                    y_hit,
                ));
            }
        }

        y = y_next;
        s = s_next;
        guard(&st_next, s, cfg)?;
        step_index += 1;
        if cfg.sample_stride > 0 && step_index.is_multiple_of(cfg.sample_stride) && s < cfg.max_span
        {
            samples.push(Sample {
                s,
                t: y[6],
                state: st_next,
            });
        }
    }

    if has_terminal {
        return Err(Error::MaxSpanExceeded { span: cfg.max_span });
    }
    let end = Sample {
        s,
        t: y[6],
        state: unpack_state(&y),
    };
    samples.push(end);
    Ok((
        Trajectory {
            samples,
            events: hits,
            end,
            terminal_event: None,
        },
        y,
    ))
}

fn guard(st: &RegState, s: f64, cfg: &IntegratorConfig) -> Result<()> {
    let min_pair = min_pair_sum(st);
    if min_pair < cfg.quad_floor {
        return Err(Error::NearQuadruple { s, min_pair });
    }
    Ok(())
}
