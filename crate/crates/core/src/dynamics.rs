//! Regularized Hamiltonian of the octahedral six-body configuration.
//!
//! Three symmetric pairs of unit masses sit at (±q1, 0, 0), (0, ±q2, 0),
//! (0, 0, ±q3) with q_i > 0 and mirror momenta, so the system reduces to
//! three degrees of freedom with Hamiltonian H = p1² + p2² + p3² − U and
//!
//!   U = 4/√(q1²+q2²) + 4/√(q1²+q3²) + 4/√(q2²+q3²)
//!     + 1/(2q1) + 1/(2q2) + 1/(2q3).
//!
//! Binary collisions q_i = 0 are removed by the Levi-Civita-style chart
//! q_i = Q_i², p_i = P_i/(2Q_i) with time rescaling dt/ds = Q1²Q2²Q3².
//! On the energy level H = E the flow in rescaled time s is the canonical
//! flow of
//!
//!   Γ = Σ_i P_i² Q_j² Q_k² / 4
//!     − 4 Q1²Q2²Q3² Σ_{i<j} (Q_i⁴ + Q_j⁴)^{−1/2}
//!     − Σ_{i<j} Q_i² Q_j² / 2
//!     − Q1²Q2²Q3² E,
//!
//! which vanishes identically along solutions and is smooth through every
//! binary collision. Only the quadruple collision Q_i = Q_j = 0 remains
//! singular. At a collision Q_i = 0 the conserved Γ forces |P_i| = √2.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// |P_i| at a regularized binary collision Q_i = 0 (from Γ = 0).
pub const COLLISION_MOMENTUM: f64 = std::f64::consts::SQRT_2;

/// One coordinate axis of the reduced configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Zero-based component index.
    pub fn index(self) -> usize {
        self as usize
    }

    /// One-based label used in reports and file columns.
    pub fn label(self) -> usize {
        self as usize + 1
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Reduced physical state: q_i > 0 away from collisions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysState {
    pub q: [f64; 3],
    pub p: [f64; 3],
}

/// Regularized state (Q, P); sign of Q_i is a chart artifact (q_i = Q_i²).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegState {
    pub q: [f64; 3],
    pub p: [f64; 3],
}

impl PhysState {
    pub fn new(q: [f64; 3], p: [f64; 3]) -> Self {
        PhysState { q, p }
    }

    /// Maps into the regularized chart with Q_i = +√q_i, P_i = 2 Q_i p_i.
    pub fn to_regularized(&self) -> Result<RegState> {
        for (i, &v) in self.q.iter().enumerate() {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::NonPositiveCoordinate {
                    axis: i + 1,
                    value: v,
                });
            }
        }
        let rq = [self.q[0].sqrt(), self.q[1].sqrt(), self.q[2].sqrt()];
        let rp = [
            2.0 * rq[0] * self.p[0],
            2.0 * rq[1] * self.p[1],
            2.0 * rq[2] * self.p[2],
        ];
        Ok(RegState { q: rq, p: rp })
    }
}

impl RegState {
    pub fn new(q: [f64; 3], p: [f64; 3]) -> Self {
        RegState { q, p }
    }

    /// Inverse chart map; fails at a collision where p_i = P_i/(2Q_i) is
    /// undefined.
    pub fn to_physical(&self) -> Result<PhysState> {
        for i in 0..3 {
            if self.q[i] == 0.0 {
                return Err(Error::CollisionState { axis: i + 1 });
            }
        }
        let q = [
            self.q[0] * self.q[0],
            self.q[1] * self.q[1],
            self.q[2] * self.q[2],
        ];
        let p = [
            self.p[0] / (2.0 * self.q[0]),
            self.p[1] / (2.0 * self.q[1]),
            self.p[2] / (2.0 * self.q[2]),
        ];
        Ok(PhysState { q, p })
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.q[0], self.q[1], self.q[2], self.p[0], self.p[1], self.p[2],
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        RegState {
            q: [a[0], a[1], a[2]],
            p: [a[3], a[4], a[5]],
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::from_column_slice(&self.as_array())
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        RegState::from_array([v[0], v[1], v[2], v[3], v[4], v[5]])
    }
}

/// Cyclic forward symmetry of the flow: one sixth of the orbit period acts
/// on states as this orthogonal symplectic map (applied to (Q, P) stacked).
/// Its Q- and P-blocks coincide; the sixth power is the identity.
pub fn forward_symmetry() -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for (r, c, v) in [(0, 2, 1.0), (1, 0, -1.0), (2, 1, 1.0)] {
        m[(r, c)] = v;
        m[(r + 3, c + 3)] = v;
    }
    m
}

/// Reversal symmetry about the Q1 = Q2 crossing: swaps the first two axes
/// and flips momenta so that it conjugates the flow to its time reverse.
pub fn reversal_symmetry() -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for (r, c, v) in [(0, 1, 1.0), (1, 0, 1.0), (2, 2, 1.0)] {
        m[(r, c)] = v;
        m[(r + 3, c + 3)] = -v;
    }
    m
}

/// Applies a 6×6 map to a stacked (Q, P) state.
pub fn apply_map(m: &Matrix6<f64>, st: &RegState) -> RegState {
    RegState::from_vector(&(m * st.to_vector()))
}

/// Unordered coordinate pairs, with the third index alongside.
const PAIRS: [(usize, usize, usize); 3] = [(0, 1, 2), (0, 2, 1), (1, 2, 0)];

fn check_pairs(f4: &[f64; 3]) -> Result<()> {
    for &(a, b, _) in &PAIRS {
        if f4[a] + f4[b] == 0.0 {
            return Err(Error::DegeneratePair { i: a + 1, j: b + 1 });
        }
    }
    Ok(())
}

/// Physical potential U(q); requires q_i > 0.
pub fn potential_phys(q: &[f64; 3]) -> Result<f64> {
    for (i, &v) in q.iter().enumerate() {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositiveCoordinate {
                axis: i + 1,
                value: v,
            });
        }
    }
    let mut u = 0.0;
    for &(a, b, _) in &PAIRS {
        u += 4.0 / (q[a] * q[a] + q[b] * q[b]).sqrt();
    }
    for &v in q {
        u += 0.5 / v;
    }
    Ok(u)
}

/// Physical Hamiltonian H = Σ p_i² − U.
pub fn hamiltonian_phys(st: &PhysState) -> Result<f64> {
    let k = st.p[0] * st.p[0] + st.p[1] * st.p[1] + st.p[2] * st.p[2];
    Ok(k - potential_phys(&st.q)?)
}

/// Canonical flow of H in physical time: dq_i/dt = 2 p_i, dp_i/dt = ∂U/∂q_i.
pub fn phys_vector_field(st: &PhysState) -> Result<[f64; 6]> {
    let q = &st.q;
    for (i, &v) in q.iter().enumerate() {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositiveCoordinate {
                axis: i + 1,
                value: v,
            });
        }
    }
    let mut dp = [0.0; 3];
    for &(a, b, _) in &PAIRS {
        let r3 = (q[a] * q[a] + q[b] * q[b]).powf(1.5);
        dp[a] -= 4.0 * q[a] / r3;
        dp[b] -= 4.0 * q[b] / r3;
    }
    for i in 0..3 {
        dp[i] -= 0.5 / (q[i] * q[i]);
    }
    Ok([
        2.0 * st.p[0],
        2.0 * st.p[1],
        2.0 * st.p[2],
        dp[0],
        dp[1],
        dp[2],
    ])
}

/// Time rescale factor dt/ds = Q1² Q2² Q3².
pub fn time_rescale(st: &RegState) -> f64 {
    let s0 = st.q[0] * st.q[0];
    let s1 = st.q[1] * st.q[1];
    let s2 = st.q[2] * st.q[2];
    s0 * s1 * s2
}

/// Regularized Hamiltonian Γ at energy E; zero along E-level solutions.
pub fn gamma(st: &RegState, energy: f64) -> Result<f64> {
    let s = [st.q[0] * st.q[0], st.q[1] * st.q[1], st.q[2] * st.q[2]];
    let f4 = [s[0] * s[0], s[1] * s[1], s[2] * s[2]];
    check_pairs(&f4)?;

    let p = &st.p;
    let kin =
        (p[0] * p[0] * s[1] * s[2] + s[0] * p[1] * p[1] * s[2] + s[0] * s[1] * p[2] * p[2]) / 4.0;
    let m = s[0] * s[1] * s[2];
    let mut wsum = 0.0;
    let mut pair = 0.0;
    for &(a, b, _) in &PAIRS {
        wsum += 1.0 / (f4[a] + f4[b]).sqrt();
        pair += s[a] * s[b];
    }
    Ok(kin - 4.0 * m * wsum - 0.5 * pair - m * energy)
}

/// ∇Γ in the order (Q1, Q2, Q3, P1, P2, P3).
pub fn grad_gamma(st: &RegState, energy: f64) -> Result<Vector6<f64>> {
    Ok(Vector6::from_column_slice(&grad_gamma_array(st, energy)?))
}

fn grad_gamma_array(st: &RegState, energy: f64) -> Result<[f64; 6]> {
    let q = &st.q;
    let p = &st.p;
    let s = [q[0] * q[0], q[1] * q[1], q[2] * q[2]];
    let f4 = [s[0] * s[0], s[1] * s[1], s[2] * s[2]];
    check_pairs(&f4)?;

    let p2 = [p[0] * p[0], p[1] * p[1], p[2] * p[2]];
    let m = s[0] * s[1] * s[2];

    // w, dw/dQ per pair; the radical only involves the pair's own axes.
    let mut wsum = 0.0;
    let mut dw = [0.0; 3]; // Σ_pairs ∂w/∂Q_a
    for &(a, b, _) in &PAIRS {
        let w = 1.0 / (f4[a] + f4[b]).sqrt();
        let w3 = w * w * w;
        wsum += w;
        dw[a] += -2.0 * q[a] * s[a] * w3;
        dw[b] += -2.0 * q[b] * s[b] * w3;
    }

    let mut g = [0.0; 6];
    for a in 0..3 {
        let (b, c) = other_two(a);
        // ∂/∂Q_a of the kinetic form: only the terms with i ≠ a carry Q_a².
        let kin = q[a] * (p2[b] * s[c] + p2[c] * s[b]) / 2.0;
        let dm = 2.0 * q[a] * s[b] * s[c];
        let pot = -4.0 * (dm * wsum + m * dw[a]);
        let pair = -q[a] * (s[b] + s[c]);
        g[a] = kin + pot + pair - energy * dm;
        g[3 + a] = p[a] * s[b] * s[c] / 2.0;
    }
    Ok(g)
}

fn other_two(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Hessian of Γ, symmetric 6×6 in the (Q, P) ordering. The P-P block is
/// diagonal and ∂²Γ/∂P_i∂Q_i ≡ 0, which the variational flow relies on.
pub fn hess_gamma(st: &RegState, energy: f64) -> Result<Matrix6<f64>> {
    let q = &st.q;
    let p = &st.p;
    let s = [q[0] * q[0], q[1] * q[1], q[2] * q[2]];
    let f4 = [s[0] * s[0], s[1] * s[1], s[2] * s[2]];
    check_pairs(&f4)?;

    let p2 = [p[0] * p[0], p[1] * p[1], p[2] * p[2]];
    let m = s[0] * s[1] * s[2];

    let mut wsum = 0.0;
    let mut dw = [0.0; 3];
    // d²w: diagonal and the off-diagonal entry of the pair that owns it.
    let mut d2w = [[0.0; 3]; 3];
    for &(a, b, _) in &PAIRS {
        let w = 1.0 / (f4[a] + f4[b]).sqrt();
        let w3 = w * w * w;
        let w5 = w3 * w * w;
        wsum += w;
        dw[a] += -2.0 * q[a] * s[a] * w3;
        dw[b] += -2.0 * q[b] * s[b] * w3;
        d2w[a][a] += -6.0 * s[a] * w3 + 12.0 * f4[a] * s[a] * w5;
        d2w[b][b] += -6.0 * s[b] * w3 + 12.0 * f4[b] * s[b] * w5;
        let cross = 12.0 * q[a] * s[a] * q[b] * s[b] * w5;
        d2w[a][b] += cross;
        d2w[b][a] += cross;
    }

    // First partials of m = Q1²Q2²Q3².
    let dm = [
        2.0 * q[0] * s[1] * s[2],
        2.0 * s[0] * q[1] * s[2],
        2.0 * s[0] * s[1] * q[2],
    ];

    let mut h = Matrix6::zeros();
    for a in 0..3 {
        let (b, c) = other_two(a);

        // Q_a Q_a
        let kin = (p2[b] * s[c] + p2[c] * s[b]) / 2.0;
        let d2m = 2.0 * s[b] * s[c];
        let pot = -4.0 * (d2m * wsum + 2.0 * dm[a] * dw[a] + m * d2w[a][a]);
        let pair = -(s[b] + s[c]);
        h[(a, a)] = kin + pot + pair - energy * d2m;

        // P_a P_a
        h[(3 + a, 3 + a)] = s[b] * s[c] / 2.0;

        // P_a Q_b for b ≠ a; P_a Q_a vanishes identically.
        let mpq_b = p[a] * q[b] * s[c];
        let mpq_c = p[a] * q[c] * s[b];
        h[(3 + a, b)] = mpq_b;
        h[(b, 3 + a)] = mpq_b;
        h[(3 + a, c)] = mpq_c;
        h[(c, 3 + a)] = mpq_c;
    }

    // Q_a Q_b cross terms, a < b, third index c.
    for &(a, b, c) in &PAIRS {
        let kin = p2[c] * q[a] * q[b];
        let d2m = 4.0 * q[a] * q[b] * s[c];
        let pot = -4.0 * (d2m * wsum + dm[a] * dw[b] + dm[b] * dw[a] + m * d2w[a][b]);
        let pair = -2.0 * q[a] * q[b];
        let v = kin + pot + pair - energy * d2m;
        h[(a, b)] = v;
        h[(b, a)] = v;
    }
    Ok(h)
}

/// Canonical vector field of Γ in rescaled time: (dQ, dP) = (∂Γ/∂P, −∂Γ/∂Q).
pub fn vector_field(st: &RegState, energy: f64) -> Result<[f64; 6]> {
    let g = grad_gamma_array(st, energy)?;
    Ok([g[3], g[4], g[5], -g[0], -g[1], -g[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Oracle values computed symbolically (sympy, 30 digits) at
    // Q = (0.7, 1.3, -0.9), P = (0.4, -1.1, 0.6), E = -1.
    const ORACLE_Q: [f64; 3] = [0.7, 1.3, -0.9];
    const ORACLE_P: [f64; 3] = [0.4, -1.1, 0.6];

    fn oracle_state() -> RegState {
        RegState::new(ORACLE_Q, ORACLE_P)
    }

    #[test]
    fn gamma_matches_symbolic_oracle() {
        let g = gamma(&oracle_state(), -1.0).unwrap();
        assert_abs_diff_eq!(g, -6.167463798295205, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_symbolic_oracle() {
        let g = grad_gamma(&oracle_state(), -1.0).unwrap();
        let expect = [
            -13.314937194849138,
            -5.412777156134035,
            7.745852059791308,
            0.27378,
            -0.218295,
            0.24843,
        ];
        for i in 0..6 {
            assert_abs_diff_eq!(g[i], expect[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn hessian_matches_symbolic_oracle() {
        let h = hess_gamma(&oracle_state(), -1.0).unwrap();
        assert_abs_diff_eq!(h[(0, 0)], -2.736860240123277, epsilon = 1e-12);
        assert_abs_diff_eq!(h[(0, 1)], -10.278202533166319, epsilon = 1e-12);
        assert_abs_diff_eq!(h[(1, 2)], 5.090326566000454, epsilon = 1e-12);
        assert_abs_diff_eq!(h[(3, 3)], 0.68445, epsilon = 1e-14);
        // Structural zeros: P_i-Q_i coupling and collision-free P-P cross terms.
        assert_eq!(h[(0, 3)], 0.0);
        assert_eq!(h[(2, 5)], 0.0);
        assert_eq!(h[(3, 4)], 0.0);
    }

    #[test]
    fn hessian_is_symmetric_as_computed() {
        let h = hess_gamma(&oracle_state(), -1.0).unwrap();
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn gamma_at_simple_point() {
        // Q = (0,1,1), P = (2,0,0): kinetic 1, pair -1/2, rest vanishes.
        let st = RegState::new([0.0, 1.0, 1.0], [2.0, 0.0, 0.0]);
        assert_abs_diff_eq!(gamma(&st, -1.0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gamma_vanishes_at_collision_start() {
        let (alpha, beta) = (1.7_f64, 0.9_f64);
        let st = RegState::new([0.0, alpha, alpha], [COLLISION_MOMENTUM, -beta, beta]);
        assert_abs_diff_eq!(gamma(&st, -1.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn vector_field_at_collision_start_points_along_q1() {
        let alpha = 2.1_f64;
        let st = RegState::new([0.0, alpha, alpha], [COLLISION_MOMENTUM, -0.8, 0.8]);
        let v = vector_field(&st, -1.0).unwrap();
        let expect = std::f64::consts::FRAC_1_SQRT_2 * alpha.powi(4);
        assert_abs_diff_eq!(v[0], expect, epsilon = 1e-12);
        for &vi in &v[1..6] {
            assert_abs_diff_eq!(vi, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn degenerate_pair_rejected() {
        let st = RegState::new([0.0, 0.0, 1.0], [1.0, 1.0, 1.0]);
        assert!(matches!(
            gamma(&st, -1.0),
            Err(Error::DegeneratePair { i: 1, j: 2 })
        ));
        assert!(grad_gamma(&st, -1.0).is_err());
        assert!(hess_gamma(&st, -1.0).is_err());
    }

    #[test]
    fn chart_round_trip() {
        let phys = PhysState::new([0.49, 1.69, 0.81], [0.3, -1.2, 2.0]);
        let reg = phys.to_regularized().unwrap();
        let back = reg.to_physical().unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(back.q[i], phys.q[i], epsilon = 1e-15);
            assert_abs_diff_eq!(back.p[i], phys.p[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn chart_rejects_collisions_and_negative_coordinates() {
        let at_collision = RegState::new([0.0, 1.0, 1.0], [1.4, 0.0, 0.0]);
        assert!(matches!(
            at_collision.to_physical(),
            Err(Error::CollisionState { axis: 1 })
        ));
        let bad = PhysState::new([1.0, -0.5, 1.0], [0.0; 3]);
        assert!(matches!(
            bad.to_regularized(),
            Err(Error::NonPositiveCoordinate { axis: 2, .. })
        ));
    }

    #[test]
    fn gamma_equals_rescaled_energy_defect() {
        // Γ = Q1²Q2²Q3² (H − E) wherever both charts are defined.
        let reg = RegState::new([0.8, 1.2, -0.6], [0.5, -1.7, 0.3]);
        let phys = reg.to_physical().unwrap();
        let h = hamiltonian_phys(&phys).unwrap();
        let g = gamma(&reg, -1.0).unwrap();
        assert_abs_diff_eq!(g, time_rescale(&reg) * (h + 1.0), epsilon = 1e-12);
    }

    #[test]
    fn gamma_is_equivariant_under_symmetries() {
        let st = oracle_state();
        let g0 = gamma(&st, -1.0).unwrap();
        for m in [forward_symmetry(), reversal_symmetry()] {
            let mapped = apply_map(&m, &st);
            assert_abs_diff_eq!(gamma(&mapped, -1.0).unwrap(), g0, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetry_maps_are_orthogonal_symplectic_and_cyclic() {
        let mut j = Matrix6::zeros();
        for i in 0..3 {
            j[(i, i + 3)] = 1.0;
            j[(i + 3, i)] = -1.0;
        }
        let id = Matrix6::identity();
        for m in [forward_symmetry(), reversal_symmetry()] {
            assert_eq!(m.transpose() * m, id);
        }
        let f = forward_symmetry();
        // Time preservation: S_f is symplectic; time reversal: S_r is
        // anti-symplectic.
        assert_eq!(f.transpose() * j * f, j);
        assert_eq!(f * f * f * f * f * f, id);
        let r = reversal_symmetry();
        assert_eq!(r.transpose() * j * r, -j);
        assert_eq!(r * r, id);
    }

    #[test]
    fn collision_momentum_from_gamma() {
        // At Q1 = 0, Γ = 0 forces P1² Q2² Q3² / 4 = Q2² Q3² / 2.
        let st = RegState::new([0.0, 1.3, 0.7], [COLLISION_MOMENTUM, 0.4, -0.2]);
        assert_abs_diff_eq!(gamma(&st, -1.0).unwrap(), 0.0, epsilon = 1e-14);
    }
}
