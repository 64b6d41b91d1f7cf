//! The five subcommands. Each returns the artifact tally; the caller turns
//! failure fractions into the exit status.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use octorbit::dynamics::gamma;
use octorbit::integrator::{self, Sample};
use octorbit::search::{
    extend_orbit, find_alpha_star, find_orbit, initial_state, OrbitSolution, ResidualSample,
    SigmaOutcome, SigmaQuery, SigmaVerdict,
};
use octorbit::stability::{self, StabilityReport};
use octorbit::sweep;

use crate::config::RunConfig;
use crate::emit::{fnum, status_cell, write_json, ArtifactReport, Csv};

/// Orbit JSON artifact; `stability --orbit` reads this back.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitArtifact {
    pub config_hash: String,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub period: f64,
    pub period_t: f64,
    pub energy: f64,
    pub gamma0: [f64; 6],
    pub closure_error: f64,
    pub gamma_drift: f64,
    pub checkpoint_defect_max: f64,
    pub collision_defect_max: f64,
    /// Coarse residual scan that bracketed the orbit.
    pub residuals: Vec<ResidualSample>,
}

impl OrbitArtifact {
    pub fn solution(&self) -> OrbitSolution {
        OrbitSolution {
            alpha: self.alpha,
            beta: self.beta,
            tau: self.tau,
            period: self.period,
            period_t: self.period_t,
            energy: self.energy,
        }
    }
}

#[derive(Serialize)]
struct StabilityArtifact {
    config_hash: String,
    orbit: OrbitSolution,
    report: StabilityReport,
}

fn ensure_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))
}

fn trajectory_row(sample: &Sample) -> Vec<String> {
    let a = sample.state.as_array();
    let mut row = vec![fnum(sample.s), fnum(sample.t)];
    row.extend(a.iter().map(|&v| fnum(v)));
    row
}

/// Locates the orbit, integrates the full period, and writes the orbit JSON
/// plus the trajectory table. A failed search still leaves a diagnostic JSON.
pub fn cmd_search(cfg: &RunConfig) -> Result<Vec<ArtifactReport>> {
    ensure_out(cfg)?;
    let sc = cfg.search_config();
    let hash = cfg.hash();

    let found = match find_orbit(&sc) {
        Ok(found) => found,
        Err(e) => {
            let diag = serde_json::json!({
                "config_hash": hash,
                "error": e.to_string(),
            });
            let _ = write_json(&cfg.out_dir.join("search_error.json"), &diag);
            return Err(e).context("orbit search failed");
        }
    };
    let sol = found.solution;
    let ext = extend_orbit(&sol, &sc)?;
    if ext.closure_error > cfg.tol_closure {
        eprintln!(
            "octorbit: closure error {:.3e} exceeds tol_closure {:.3e}",
            ext.closure_error, cfg.tol_closure
        );
    }

    let artifact = OrbitArtifact {
        config_hash: hash.clone(),
        alpha: sol.alpha,
        beta: sol.beta,
        tau: sol.tau,
        period: sol.period,
        period_t: sol.period_t,
        energy: sol.energy,
        gamma0: sol.gamma0().as_array(),
        closure_error: ext.closure_error,
        gamma_drift: ext.gamma_drift,
        checkpoint_defect_max: ext
            .checkpoint_defects
            .iter()
            .fold(0.0_f64, |m, &d| m.max(d)),
        collision_defect_max: ext.collision_defects.iter().fold(0.0_f64, |m, &d| m.max(d)),
        residuals: found.residuals,
    };
    let json = write_json(&cfg.out_dir.join("orbit.json"), &artifact)?;

    let mut csv = Csv::create(
        &cfg.out_dir.join("orbit_trajectory.csv"),
        &hash,
        &["s", "t", "Q1", "Q2", "Q3", "P1", "P2", "P3"],
    )?;
    for sample in &ext.samples {
        csv.row(&trajectory_row(sample), false)?;
    }
    Ok(vec![json, csv.finish()])
}

fn verdict_label(v: &SigmaVerdict) -> String {
    let base = match v.outcome {
        SigmaOutcome::FirstCollisionAxis1 => "axis1",
        SigmaOutcome::FirstCollisionAxis2 => "axis2",
        SigmaOutcome::FirstCollisionAxis3 => "axis3",
        SigmaOutcome::CutoffTriggered { .. } => "cutoff",
        SigmaOutcome::QuadrupleApproach => return "quadruple".into(),
        SigmaOutcome::Inconclusive => return "inconclusive".into(),
    };
    if v.via_cutoff {
        format!("{base}_cutoff")
    } else {
        base.into()
    }
}

/// Classifies the (α, β) grid row by row and traces the upper β edge of the
/// region, ending with its intersection with the β = 0 axis.
pub fn cmd_sigma_map(cfg: &RunConfig) -> Result<Vec<ArtifactReport>> {
    ensure_out(cfg)?;
    let sc = cfg.search_config();
    let hash = cfg.hash();
    let alphas = cfg.alpha_grid();
    let betas = cfg.beta_grid();

    let mut map = Csv::create(
        &cfg.out_dir.join("sigma_map.csv"),
        &hash,
        &["alpha", "beta", "verdict", "s_star"],
    )?;
    // One α row per pool dispatch: rows land in order and flush early.
    for &alpha in &alphas {
        let row: Vec<SigmaQuery> = betas.iter().map(|&b| SigmaQuery::new(alpha, b)).collect();
        for (q, res) in sweep::classify_grid(&row, &sc) {
            match res {
                Ok(v) => map.row(
                    &[
                        fnum(q.alpha),
                        fnum(q.beta),
                        verdict_label(&v),
                        v.s_star.map(fnum).unwrap_or_default(),
                    ],
                    false,
                )?,
                Err(e) => {
                    eprintln!("octorbit: sigma-map ({}, {}): {e}", q.alpha, q.beta);
                    map.row(
                        &[fnum(q.alpha), fnum(q.beta), "error".into(), String::new()],
                        true,
                    )?;
                }
            }
        }
    }

    let mut boundary = Csv::create(
        &cfg.out_dir.join("sigma_boundary.csv"),
        &hash,
        &["alpha", "beta", "width", "decided"],
    )?;
    for (alpha, res) in sweep::boundary_curve(&alphas, &sc) {
        match res {
            Ok(bp) => boundary.row(
                &[
                    fnum(bp.alpha),
                    fnum(bp.beta),
                    fnum(bp.width),
                    bp.decided.to_string(),
                ],
                false,
            )?,
            Err(e) => {
                eprintln!("octorbit: sigma-map boundary at alpha = {alpha}: {e}");
                boundary.row(
                    &[fnum(alpha), String::new(), String::new(), "error".into()],
                    true,
                )?;
            }
        }
    }
    // Where the boundary meets the axis: the largest in-region α at β = 0.
    match find_alpha_star(&sc) {
        Ok(bp) => boundary.row(
            &[
                fnum(bp.alpha),
                fnum(bp.beta),
                fnum(bp.width),
                bp.decided.to_string(),
            ],
            false,
        )?,
        Err(e) => {
            eprintln!("octorbit: sigma-map axis intersection: {e}");
            boundary.row(
                &[String::new(), fnum(0.0), String::new(), "error".into()],
                true,
            )?;
        }
    }
    Ok(vec![map.finish(), boundary.finish()])
}

/// Monodromy factorization and verdict; reuses a saved orbit JSON when given.
pub fn cmd_stability(cfg: &RunConfig, orbit: Option<&Path>) -> Result<Vec<ArtifactReport>> {
    ensure_out(cfg)?;
    let sc = cfg.search_config();
    let sol = match orbit {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading orbit {}", path.display()))?;
            let artifact: OrbitArtifact = serde_json::from_str(&text)
                .with_context(|| format!("parsing orbit {}", path.display()))?;
            artifact.solution()
        }
        None => find_orbit(&sc)?.solution,
    };
    let report = stability::analyze(&sol, &sc)?;
    for warning in &report.warnings {
        eprintln!("octorbit: stability: {warning}");
    }
    let artifact = StabilityArtifact {
        config_hash: cfg.hash(),
        orbit: sol,
        report,
    };
    Ok(vec![write_json(
        &cfg.out_dir.join("stability.json"),
        &artifact,
    )?])
}

/// β(α) and crossing-residual curves over the α grid; per-point failures
/// become status rows and the sweep keeps going.
pub fn cmd_curves(cfg: &RunConfig) -> Result<Vec<ArtifactReport>> {
    ensure_out(cfg)?;
    let sc = cfg.search_config();
    let hash = cfg.hash();
    let alphas = cfg.alpha_grid();

    let mut beta = Csv::create(
        &cfg.out_dir.join("beta_curve.csv"),
        &hash,
        &["alpha", "beta", "tau", "status"],
    )?;
    for (alpha, res) in sweep::beta_curve(&alphas, &sc) {
        match res {
            Ok(root) => beta.row(
                &[
                    fnum(root.alpha),
                    fnum(root.beta),
                    fnum(root.tau),
                    "ok".into(),
                ],
                false,
            )?,
            Err(e) => beta.row(
                &[
                    fnum(alpha),
                    String::new(),
                    String::new(),
                    status_cell(&e.to_string()),
                ],
                true,
            )?,
        }
    }

    let mut residual = Csv::create(
        &cfg.out_dir.join("residual_curve.csv"),
        &hash,
        &["alpha", "beta", "tau", "residual", "status"],
    )?;
    for (alpha, res) in sweep::residual_curve(&alphas, &sc) {
        match res {
            Ok(r) => residual.row(
                &[
                    fnum(r.alpha),
                    fnum(r.beta),
                    fnum(r.tau),
                    fnum(r.residual),
                    "ok".into(),
                ],
                false,
            )?,
            Err(e) => residual.row(
                &[
                    fnum(alpha),
                    String::new(),
                    String::new(),
                    String::new(),
                    status_cell(&e.to_string()),
                ],
                true,
            )?,
        }
    }
    Ok(vec![beta.finish(), residual.finish()])
}

/// Integrates one initial condition for a fixed span and dumps the sampled
/// trajectory with its energy residual.
pub fn cmd_integrate(
    cfg: &RunConfig,
    alpha: f64,
    beta: f64,
    span: f64,
) -> Result<Vec<ArtifactReport>> {
    ensure_out(cfg)?;
    let sc = cfg.search_config();
    let icfg = sc.integrator.with_span(span);
    let traj = integrator::propagate(&initial_state(alpha, beta), cfg.energy, &icfg, &[])?;

    let mut csv = Csv::create(
        &cfg.out_dir.join("trajectory.csv"),
        &cfg.hash(),
        &[
            "s",
            "t",
            "Q1",
            "Q2",
            "Q3",
            "P1",
            "P2",
            "P3",
            "gamma_residual",
        ],
    )?;
    for sample in &traj.samples {
        let mut row = trajectory_row(sample);
        row.push(fnum(gamma(&sample.state, cfg.energy)?));
        csv.row(&row, false)?;
    }
    Ok(vec![csv.finish()])
}
