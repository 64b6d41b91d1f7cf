//! Acceptance gate. One test per headline criterion; each prints a single
//! PASS/FAIL line (run with --nocapture to see them) and asserts it.
//! Tolerances are pinned here and nowhere else.

use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::Vector6;
use octorbit::cutoff::cutoff_limit_root;
use octorbit::dynamics::{self, grad_gamma, hess_gamma, RegState, COLLISION_MOMENTUM};
use octorbit::integrator::{state_at, EventKind, IntegratorConfig};
use octorbit::search::{
    extend_orbit, find_alpha_star, find_orbit, OrbitExtension, OrbitSearch, SearchConfig,
};
use octorbit::stability::{analyze, StabilityReport, StabilityVerdict};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Everything the production solve yields, computed once and shared.
struct Production {
    search: OrbitSearch,
    ext: OrbitExtension,
    report: StabilityReport,
    solve_secs: f64,
}

fn production_config() -> SearchConfig {
    SearchConfig {
        energy: -1.0,
        tol_root: 1e-10,
        integrator: IntegratorConfig {
            step: 1e-5,
            max_span: 10.0,
            event_tol: 1e-8,
            quad_floor: 1e-12,
            sample_stride: 200,
        },
    }
}

fn production() -> &'static Production {
    static CELL: OnceLock<Production> = OnceLock::new();
    CELL.get_or_init(|| {
        let sc = production_config();
        let started = Instant::now();
        let search = find_orbit(&sc).expect("orbit search");
        let ext = extend_orbit(&search.solution, &sc).expect("orbit extension");
        let report = analyze(&search.solution, &sc).expect("stability analysis");
        Production {
            search,
            ext,
            report,
            solve_secs: started.elapsed().as_secs_f64(),
        }
    })
}

fn check(name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[acceptance] {name}: {tag} ({detail})");
    assert!(pass, "{name}: {detail}");
}

#[test]
fn criterion_1_orbit_parameters() {
    let p = production();
    let sol = &p.search.solution;
    let pass = (sol.alpha - 2.698372).abs() < 1e-4
        && (sol.beta - 1.484464).abs() < 1e-4
        && (sol.period - 0.527482).abs() < 1e-4
        && p.solve_secs < 300.0;
    check(
        "criterion 1, orbit parameters",
        pass,
        &format!(
            "alpha = {:.7}, beta = {:.7}, period = {:.7}, solve = {:.1} s",
            sol.alpha, sol.beta, sol.period, p.solve_secs
        ),
    );
}

#[test]
fn criterion_2_axis_boundary() {
    let mut sc = production_config();
    // The boundary bisection is step-converged already at 1e-4.
    sc.integrator.step = 1e-4;
    let b = find_alpha_star(&sc).expect("axis boundary");
    let pass = (b.alpha - 3.53652).abs() < 1e-4 && b.decided;
    check(
        "criterion 2, axis boundary alpha*",
        pass,
        &format!("alpha* = {:.7}, width = {:.1e}", b.alpha, b.width),
    );
}

#[test]
fn criterion_3_cutoff_asymptote_root() {
    let root = cutoff_limit_root();
    let pass = root > 0.0 && root < 1.0 && (root - 0.523143).abs() < 1e-5;
    check(
        "criterion 3, cutoff asymptote root",
        pass,
        &format!("root = {root:.7}"),
    );
}

#[test]
fn criterion_4_residual_anchors() {
    let p = production();
    let first = p.search.residuals.first().expect("scan start");
    let last = p.search.residuals.last().expect("scan end");
    let pass = (first.alpha - 0.5).abs() < 1e-12
        && (last.alpha - 3.3).abs() < 1e-12
        && (first.residual - 3.475).abs() < 0.01
        && (last.residual + 4.112).abs() < 0.01;
    check(
        "criterion 4, residual anchors",
        pass,
        &format!(
            "residual({:.1}) = {:.5}, residual({:.1}) = {:.5}",
            first.alpha, first.residual, last.alpha, last.residual
        ),
    );
}

#[test]
fn criterion_5_stability_numbers() {
    let r = &production().report;
    let l1 = r.block_eigenvalues[0];
    let l2 = r.block_eigenvalues[1];
    // Reference K, rows below the trivial (1, 0, 0) first row.
    let frozen = [[-0.33061, 0.46342, 0.04988], [0.90212, -1.96273, -1.28477]];
    let mut k_err = 0f64;
    for (i, row) in frozen.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            k_err = k_err.max((r.k[i + 1][j] - v).abs());
        }
    }
    let pass = (l1[0] - 0.40550).abs() < 1e-3
        && l1[1].abs() < 1e-3
        && (l2[0] + 1.22685).abs() < 1e-3
        && l2[1].abs() < 1e-3
        && r.verdict == StabilityVerdict::LinearlyUnstable
        && k_err <= 5e-3;
    check(
        "criterion 5, stability numbers",
        pass,
        &format!(
            "lambda1 = {:.5}, lambda2 = {:.5}, verdict = {:?}, K error = {:.1e}",
            l1[0], l2[0], r.verdict, k_err
        ),
    );
}

#[test]
fn criterion_6a_gamma_conservation() {
    let p = production();
    let pass = p.ext.gamma_drift < 1e-9;
    check(
        "criterion 6a, Gamma conservation over one period",
        pass,
        &format!("max |Gamma| = {:.1e}", p.ext.gamma_drift),
    );
}

#[test]
fn criterion_6b_collision_momentum() {
    let p = production();
    let checkpoint_worst = p.ext.collision_defects.iter().fold(0f64, |m, d| m.max(*d));
    // Events located inside the legs must carry the same momentum value.
    let mut event_worst = 0f64;
    for hit in &p.ext.events {
        if let EventKind::QZero(axis) = hit.kind {
            let defect = (hit.state.p[axis.index()].abs() - COLLISION_MOMENTUM).abs();
            event_worst = event_worst.max(defect);
        }
    }
    let pass = checkpoint_worst < 1e-8 && event_worst < 1e-8;
    check(
        "criterion 6b, collision momentum sqrt(2)",
        pass,
        &format!(
            "worst checkpoint defect = {checkpoint_worst:.1e}, worst located-event defect = {event_worst:.1e} over {} events",
            p.ext.events.len()
        ),
    );
}

#[test]
fn criterion_6c_forward_symmetry_relation() {
    let p = production();
    let sol = &p.search.solution;
    let sc = production_config();
    let sf = dynamics::forward_symmetry();
    let g0 = sol.gamma0();
    let two_tau = 2.0 * sol.tau;
    let mut worst = 0f64;
    for k in 0..20 {
        // s spans (0, 10 tau] so that s + 2 tau stays inside one period.
        let s = 10.0 * sol.tau * (k + 1) as f64 / 20.0;
        let (at_s, _) = state_at(&g0, sol.energy, s, &sc.integrator).expect("flow to s");
        let (ahead, _) =
            state_at(&g0, sol.energy, s + two_tau, &sc.integrator).expect("flow to s + 2 tau");
        let mapped = dynamics::apply_map(&sf, &at_s);
        let defect = (ahead.to_vector() - mapped.to_vector()).abs().max();
        worst = worst.max(defect);
    }
    let pass = worst < 1e-5;
    check(
        "criterion 6c, forward symmetry gamma(s + 2 tau) = S_f gamma(s)",
        pass,
        &format!("worst defect over 20 points = {worst:.1e}"),
    );
}

#[test]
fn criterion_6d_frame_identities() {
    let r = &production().report;
    let pass = r.symplectic_defect < 1e-8 && r.we1_defect < 1e-5 && r.block_defect < 1e-5;
    check(
        "criterion 6d, frame identities",
        pass,
        &format!(
            "symplectic defect = {:.1e}, W e1 defect = {:.1e}, off-block defect = {:.1e}",
            r.symplectic_defect, r.we1_defect, r.block_defect
        ),
    );
}

#[test]
fn criterion_6e_monodromy_spectrum() {
    let r = &production().report;
    let pass =
        r.two_route_defect < 1e-4 && r.reciprocal_defect < 1e-4 && r.unit_eigenvalue_count >= 2;
    check(
        "criterion 6e, monodromy spectrum",
        pass,
        &format!(
            "two-route defect = {:.1e}, reciprocal defect = {:.1e}, unit eigenvalues = {}",
            r.two_route_defect, r.reciprocal_defect, r.unit_eigenvalue_count
        ),
    );
}

fn random_state(rng: &mut ChaCha8Rng) -> RegState {
    let mut q = [0.0; 3];
    let mut p = [0.0; 3];
    for v in &mut q {
        *v = rng.gen_range(0.45..2.75);
    }
    for v in &mut p {
        *v = rng.gen_range(-2.5..2.5);
    }
    RegState::new(q, p)
}

fn perturbed(st: &RegState, i: usize, eps: f64) -> RegState {
    let mut a = st.as_array();
    a[i] += eps;
    RegState::from_array(a)
}

#[test]
fn criterion_6f_derivative_oracles() {
    let energy = -1.0;
    let eps = 1e-6;
    let mut grad_worst = 0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x616b_6772);
    for _ in 0..100 {
        let st = random_state(&mut rng);
        let grad = grad_gamma(&st, energy).expect("gradient");
        for i in 0..6 {
            let hi = dynamics::gamma(&perturbed(&st, i, eps), energy).expect("gamma");
            let lo = dynamics::gamma(&perturbed(&st, i, -eps), energy).expect("gamma");
            let fd = (hi - lo) / (2.0 * eps);
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(1.0);
            grad_worst = grad_worst.max(rel);
        }
    }
    let mut hess_worst = 0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x616b_6865);
    for _ in 0..100 {
        let st = random_state(&mut rng);
        let hess = hess_gamma(&st, energy).expect("hessian");
        for j in 0..6 {
            let hi = grad_gamma(&perturbed(&st, j, eps), energy).expect("gradient");
            let lo = grad_gamma(&perturbed(&st, j, -eps), energy).expect("gradient");
            let fd: Vector6<f64> = (hi - lo) / (2.0 * eps);
            for i in 0..6 {
                let rel = (hess[(i, j)] - fd[i]).abs() / hess[(i, j)].abs().max(1.0);
                hess_worst = hess_worst.max(rel);
            }
        }
    }
    let pass = grad_worst < 1e-6 && hess_worst < 1e-5;
    check(
        "criterion 6f, derivative oracles at 100 random points",
        pass,
        &format!("gradient rel err = {grad_worst:.1e}, hessian rel err = {hess_worst:.1e}"),
    );
}

#[test]
fn criterion_6g_rk4_order_over_orbit_span() {
    let p = production();
    let sol = &p.search.solution;
    let g0 = sol.gamma0();
    let span = sol.period;
    // Steps are exact binary fractions of the span, so every run lands on
    // the same endpoint and the ratio isolates the truncation order.
    let end_at = |k: i32| -> Vector6<f64> {
        let cfg = IntegratorConfig {
            step: span / f64::powi(2.0, k),
            sample_stride: 0,
            ..production_config().integrator
        };
        let (end, _) = state_at(&g0, sol.energy, span, &cfg).expect("fixed-step endpoint");
        end.to_vector()
    };
    let reference = end_at(16);
    let coarse = (end_at(9) - reference).abs().max();
    let fine = (end_at(10) - reference).abs().max();
    let ratio = coarse / fine;
    let pass = (11.0..22.0).contains(&ratio);
    check(
        "criterion 6g, RK4 order over the orbit span",
        pass,
        &format!("err(span/512) = {coarse:.2e}, err(span/1024) = {fine:.2e}, ratio = {ratio:.2}"),
    );
}

#[test]
fn criterion_7_closure() {
    let p = production();
    let pass = p.ext.closure_error < 1e-5;
    check(
        "criterion 7, closure after one period",
        pass,
        &format!("closure error = {:.1e}", p.ext.closure_error),
    );
}
