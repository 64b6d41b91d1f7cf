//! Property checks spanning the chart, the derivatives, the flow, and the
//! classifier. Randomized cases stay in boxes around the orbit; the seeded
//! finite-difference sweeps pin the analytic derivatives.

use approx::assert_abs_diff_eq;
use nalgebra::{Matrix6, Vector6};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use octorbit::dynamics::{
    self, apply_map, forward_symmetry, gamma, grad_gamma, hess_gamma, reversal_symmetry, PhysState,
    RegState, COLLISION_MOMENTUM,
};
use octorbit::integrator::{self, state_at, IntegratorConfig};
use octorbit::search::{classify_sigma, initial_state, SearchConfig, SigmaOutcome, SigmaQuery};
use octorbit::sweep::{classify_grid, classify_grid_serial, grid, grid_queries};

fn orbit_gamma0() -> RegState {
    initial_state(2.698372, 1.484464)
}

fn coarse(step: f64) -> IntegratorConfig {
    IntegratorConfig {
        step,
        ..IntegratorConfig::default()
    }
}

// -------------------------------------------------------------------------
// Chart and scalar identities.

proptest! {
    #[test]
    fn chart_round_trips(
        q in prop::array::uniform3(1e-3..10.0f64),
        p in prop::array::uniform3(-5.0..5.0f64),
    ) {
        let phys = PhysState::new(q, p);
        let back = phys.to_regularized().unwrap().to_physical().unwrap();
        for i in 0..3 {
            prop_assert!((back.q[i] - q[i]).abs() <= 1e-14 * q[i].abs().max(1.0));
            prop_assert!((back.p[i] - p[i]).abs() <= 1e-14 * p[i].abs().max(1.0));
        }
    }

    // Γ = Q1²Q2²Q3² (H − E) ties the regularized residual to the physical
    // Hamiltonian wherever both charts are defined.
    #[test]
    fn gamma_matches_rescaled_energy_error(
        q in prop::array::uniform3(0.45..2.75f64),
        p in prop::array::uniform3(-2.5..2.5f64),
        energy in -2.0..-0.25f64,
    ) {
        let reg = RegState::new(q, p);
        let phys = reg.to_physical().unwrap();
        let m = dynamics::time_rescale(&reg);
        let h = dynamics::hamiltonian_phys(&phys).unwrap();
        let g = gamma(&reg, energy).unwrap();
        // H − E can cancel, so the comparison scale is m·(|H| + |E|).
        let scale = 1.0 + m * (h.abs() + energy.abs());
        prop_assert!((g - m * (h - energy)).abs() <= 1e-12 * scale);
    }

    // The flow commutes with the cyclic symmetry and anti-commutes with the
    // time-reversing one.
    #[test]
    fn flow_direction_is_equivariant(
        q in prop::array::uniform3(0.45..2.75f64),
        p in prop::array::uniform3(-2.5..2.5f64),
    ) {
        let st = RegState::new(q, p);
        let f = Vector6::from(dynamics::vector_field(&st, -1.0).unwrap());
        for (m, sign) in [(forward_symmetry(), 1.0), (reversal_symmetry(), -1.0)] {
            let mapped = apply_map(&m, &st);
            let fm = Vector6::from(dynamics::vector_field(&mapped, -1.0).unwrap());
            let expected = m * f * sign;
            prop_assert!((fm - expected).amax() <= 1e-9 * (1.0 + expected.amax()));
        }
    }
}

// -------------------------------------------------------------------------
// Finite-difference oracles for the analytic derivatives.

fn fd_gradient(st: &RegState, energy: f64, eps: f64) -> [f64; 6] {
    let x = st.as_array();
    let mut g = [0.0; 6];
    for (i, slot) in g.iter_mut().enumerate() {
        let mut hi = x;
        let mut lo = x;
        hi[i] += eps;
        lo[i] -= eps;
        let fhi = gamma(&RegState::from_array(hi), energy).unwrap();
        let flo = gamma(&RegState::from_array(lo), energy).unwrap();
        *slot = (fhi - flo) / (2.0 * eps);
    }
    g
}

fn fd_hessian(st: &RegState, energy: f64, eps: f64) -> Matrix6<f64> {
    let x = st.as_array();
    let mut h = Matrix6::zeros();
    for j in 0..6 {
        let mut hi = x;
        let mut lo = x;
        hi[j] += eps;
        lo[j] -= eps;
        let ghi = grad_gamma(&RegState::from_array(hi), energy).unwrap();
        let glo = grad_gamma(&RegState::from_array(lo), energy).unwrap();
        for i in 0..6 {
            h[(i, j)] = (ghi[i] - glo[i]) / (2.0 * eps);
        }
    }
    h
}

#[test]
fn gradient_matches_finite_differences_at_100_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6f637461);
    for _ in 0..100 {
        let q = [(); 3].map(|_| rng.gen_range(0.45..2.75));
        let p = [(); 3].map(|_| rng.gen_range(-2.5..2.5));
        let st = RegState::new(q, p);
        let analytic = grad_gamma(&st, -1.0).unwrap();
        let fd = fd_gradient(&st, -1.0, 1e-6);
        for i in 0..6 {
            let scale = analytic[i].abs().max(1.0);
            assert!(
                (analytic[i] - fd[i]).abs() <= 1e-6 * scale,
                "component {i} of grad at {st:?}: {} vs {}",
                analytic[i],
                fd[i]
            );
        }
    }
}

#[test]
fn hessian_matches_finite_differences_at_100_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x68657373);
    for _ in 0..100 {
        let q = [(); 3].map(|_| rng.gen_range(0.45..2.75));
        let p = [(); 3].map(|_| rng.gen_range(-2.5..2.5));
        let st = RegState::new(q, p);
        let analytic = hess_gamma(&st, -1.0).unwrap();
        let fd = fd_hessian(&st, -1.0, 1e-6);
        for r in 0..6 {
            for c in 0..6 {
                let scale = analytic[(r, c)].abs().max(1.0);
                assert!(
                    (analytic[(r, c)] - fd[(r, c)]).abs() <= 1e-5 * scale,
                    "entry ({r}, {c}) at {st:?}: {} vs {}",
                    analytic[(r, c)],
                    fd[(r, c)]
                );
            }
        }
    }
}

// -------------------------------------------------------------------------
// Flow-level properties.

#[test]
fn gamma_stays_conserved_along_the_flow() {
    let drift = |step: f64| {
        let mut cfg = coarse(step);
        cfg.sample_stride = 50;
        let traj = integrator::propagate(&orbit_gamma0(), -1.0, &cfg.with_span(0.3), &[]).unwrap();
        traj.samples
            .iter()
            .chain(std::iter::once(&traj.end))
            .map(|s| gamma(&s.state, -1.0).unwrap().abs())
            .fold(0.0_f64, f64::max)
    };
    // Truncation-dominated drift, so halving the step buys a factor of 16.
    let coarse_drift = drift(1e-4);
    let fine_drift = drift(1e-5);
    assert!(
        coarse_drift < 2e-8,
        "max |Gamma| at 1e-4 = {coarse_drift:.3e}"
    );
    assert!(fine_drift < 2e-11, "max |Gamma| at 1e-5 = {fine_drift:.3e}");
}

#[test]
fn located_collisions_carry_sqrt2_momentum() {
    let sc = SearchConfig {
        integrator: coarse(1e-4),
        ..SearchConfig::default()
    };
    // One query per verdict axis: inside Σ, far along the axis, z-risk region.
    for (alpha, beta) in [(2.698372, 1.484464), (3.8, 0.0), (1.0, 0.3)] {
        let v = classify_sigma(SigmaQuery::new(alpha, beta), &sc).unwrap();
        if v.via_cutoff {
            continue;
        }
        let (axis, state) = match (v.outcome, v.terminal) {
            (SigmaOutcome::FirstCollisionAxis1, Some(st)) => (0, st),
            (SigmaOutcome::FirstCollisionAxis2, Some(st)) => (1, st),
            (SigmaOutcome::FirstCollisionAxis3, Some(st)) => (2, st),
            other => panic!("expected a located collision, got {other:?}"),
        };
        assert!(state.q[axis].abs() < 1e-6);
        assert_abs_diff_eq!(state.p[axis].abs(), COLLISION_MOMENTUM, epsilon = 1e-8);
    }
}

// Dyadic span and steps keep the step schedule exact, so the measured ratio
// isolates the truncation order.
#[test]
fn rk4_error_drops_sixteenfold_per_halving() {
    let g0 = orbit_gamma0();
    let span = 0.25_f64;
    let (reference, _) = state_at(&g0, -1.0, span, &coarse(span / 65536.0)).unwrap();
    let err = |step: f64| {
        let (st, _) = state_at(&g0, -1.0, span, &coarse(step)).unwrap();
        st.as_array()
            .iter()
            .zip(reference.as_array().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max)
    };
    let ratio = err(span / 512.0) / err(span / 1024.0);
    assert!((11.0..22.0).contains(&ratio), "ratio = {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // The variational frame of a symplectic flow stays symplectic.
    #[test]
    fn variational_frame_stays_symplectic(
        alpha in 0.9..3.0f64,
        beta in 0.0..2.0f64,
    ) {
        let g0 = initial_state(alpha, beta);
        let cfg = coarse(1e-4).with_span(0.15);
        let (_, frame) =
            integrator::propagate_variational(&g0, &Matrix6::identity(), -1.0, &cfg, &[]).unwrap();
        let mut j = Matrix6::zeros();
        for i in 0..3 {
            j[(i, i + 3)] = 1.0;
            j[(i + 3, i)] = -1.0;
        }
        let defect = (frame.transpose() * j * frame - j).amax();
        prop_assert!(defect < 1e-8, "symplectic defect {defect:.3e}");
    }

    // Verdict bookkeeping stays internally consistent wherever classification
    // succeeds.
    #[test]
    fn verdict_fields_are_consistent(
        alpha in 0.6..3.2f64,
        beta in 0.0..2.5f64,
    ) {
        let sc = SearchConfig {
            integrator: coarse(1e-3),
            ..SearchConfig::default()
        };
        let v = classify_sigma(SigmaQuery::new(alpha, beta), &sc).unwrap();
        match v.in_sigma() {
            Some(_) => {
                prop_assert!(v.s_star.is_some());
                prop_assert!(v.s_star.unwrap() >= 0.0);
                prop_assert!(v.terminal.is_some());
                if v.via_cutoff {
                    prop_assert!(matches!(
                        v.outcome,
                        SigmaOutcome::FirstCollisionAxis1 | SigmaOutcome::FirstCollisionAxis2
                    ));
                }
            }
            None => prop_assert!(!v.via_cutoff),
        }
    }
}

// -------------------------------------------------------------------------
// Classifier stability under refinement and pooling.

#[test]
fn verdicts_are_invariant_under_step_halving() {
    let queries = grid_queries(&grid(1.0, 3.0, 1.0), &grid(0.0, 2.0, 1.0));
    let run = |step: f64| {
        let sc = SearchConfig {
            integrator: coarse(step),
            ..SearchConfig::default()
        };
        classify_grid_serial(&queries, &sc)
    };
    for ((q, a), (_, b)) in run(1e-3).iter().zip(run(5e-4).iter()) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        assert_eq!(
            a.outcome, b.outcome,
            "verdict changed under halving at {q:?}"
        );
    }
}

#[test]
fn pooled_grid_matches_serial_on_curve_queries() {
    let sc = SearchConfig {
        integrator: coarse(1e-3),
        ..SearchConfig::default()
    };
    let queries = grid_queries(&grid(0.6, 3.0, 0.8), &grid(0.2, 1.8, 0.8));
    let par = classify_grid(&queries, &sc);
    let ser = classify_grid_serial(&queries, &sc);
    for ((qa, ra), (_, rb)) in par.iter().zip(ser.iter()) {
        let (a, b) = (ra.as_ref().unwrap(), rb.as_ref().unwrap());
        assert_eq!(a.outcome, b.outcome, "pool/serial divergence at {qa:?}");
        assert_eq!(a.s_star, b.s_star);
    }
}

// The β = 0 slice starts invariant under the y/z pair exchange, and the
// exchange commutes with the flow, so the equalities persist.
#[test]
fn zero_beta_slice_keeps_yz_exchange_symmetry() {
    let g0 = initial_state(3.2, 0.0);
    let (end, _) = state_at(&g0, -1.0, 0.25, &coarse(1e-4)).unwrap();
    assert_abs_diff_eq!(end.q[1], end.q[2], epsilon = 1e-12);
    assert_abs_diff_eq!(end.p[1], end.p[2], epsilon = 1e-12);
}
