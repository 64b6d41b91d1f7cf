//! Grid fan-out for classification and curve tables.
//!
//! Every point is an independent computation, so grids map cleanly over a
//! thread pool. With the `parallel` feature (default) the maps run on
//! rayon's pool; without it they fall back to the serial versions. Both
//! produce identical, index-ordered output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;
use crate::search::{
    classify_sigma, find_beta, residual, sigma_boundary, BetaRoot, BoundaryPoint, ResidualSample,
    SearchConfig, SigmaQuery, SigmaVerdict,
};

/// Inclusive grid start, start+step, ..., stop (within rounding of step).
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if step <= 0.0 || stop < start {
        return Vec::new();
    }
    let count = ((stop - start) / step).round() as usize;
    (0..=count).map(|k| start + k as f64 * step).collect()
}

/// Cartesian product of the two grids, row-major in α.
pub fn grid_queries(alphas: &[f64], betas: &[f64]) -> Vec<SigmaQuery> {
    let mut out = Vec::with_capacity(alphas.len() * betas.len());
    for &a in alphas {
        for &b in betas {
            out.push(SigmaQuery::new(a, b));
        }
    }
    out
}

pub fn classify_grid_serial(
    queries: &[SigmaQuery],
    sc: &SearchConfig,
) -> Vec<(SigmaQuery, Result<SigmaVerdict>)> {
    queries
        .iter()
        .map(|q| (*q, classify_sigma(*q, sc)))
        .collect()
}

/// Classifies every query; order matches the input regardless of pool size.
pub fn classify_grid(
    queries: &[SigmaQuery],
    sc: &SearchConfig,
) -> Vec<(SigmaQuery, Result<SigmaVerdict>)> {
    #[cfg(feature = "parallel")]
    {
        queries
            .par_iter()
            .map(|q| (*q, classify_sigma(*q, sc)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        classify_grid_serial(queries, sc)
    }
}

pub fn beta_curve_serial(alphas: &[f64], sc: &SearchConfig) -> Vec<(f64, Result<BetaRoot>)> {
    alphas.iter().map(|&a| (a, find_beta(a, sc))).collect()
}

/// β(α) table. Each α runs its own full scan so points stay independent;
/// failures are recorded per row and do not stop the sweep.
pub fn beta_curve(alphas: &[f64], sc: &SearchConfig) -> Vec<(f64, Result<BetaRoot>)> {
    #[cfg(feature = "parallel")]
    {
        alphas.par_iter().map(|&a| (a, find_beta(a, sc))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        beta_curve_serial(alphas, sc)
    }
}

pub fn residual_curve_serial(
    alphas: &[f64],
    sc: &SearchConfig,
) -> Vec<(f64, Result<ResidualSample>)> {
    alphas.iter().map(|&a| (a, residual(a, sc))).collect()
}

/// P1(τ)+P2(τ) at the inner root, per α.
pub fn residual_curve(alphas: &[f64], sc: &SearchConfig) -> Vec<(f64, Result<ResidualSample>)> {
    #[cfg(feature = "parallel")]
    {
        alphas.par_iter().map(|&a| (a, residual(a, sc))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        residual_curve_serial(alphas, sc)
    }
}

pub fn boundary_curve_serial(
    alphas: &[f64],
    sc: &SearchConfig,
) -> Vec<(f64, Result<BoundaryPoint>)> {
    alphas.iter().map(|&a| (a, sigma_boundary(a, sc))).collect()
}

/// Largest-β membership edge per α.
pub fn boundary_curve(alphas: &[f64], sc: &SearchConfig) -> Vec<(f64, Result<BoundaryPoint>)> {
    #[cfg(feature = "parallel")]
    {
        alphas
            .par_iter()
            .map(|&a| (a, sigma_boundary(a, sc)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        boundary_curve_serial(alphas, sc)
    }
}
