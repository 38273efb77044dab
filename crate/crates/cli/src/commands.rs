//! One function per subcommand, each turning the resolved configuration
//! into CSV rows plus a text summary. Hard errors (bad parameters) abort
//! before artifacts exist; solver shortfalls are reported through
//! `soft_error` after the artifacts are written.

use std::collections::BTreeSet;

use pamlab_core::asymptotics::{
    c_heavy_tail, c_negative, classify_regime, intermittency_gap, mu_exponent, one_dim_constant,
    predicted_log_moment, IntermittencyGap, Regime,
};
use pamlab_core::coarse::{
    choose_meo_params, enumerate_relevant, rarefied_set, volume_bound_trial, MeoParams,
};
use pamlab_core::domain::{centered_cell_range, GridDomain};
use pamlab_core::feynman_kac::{
    annealed_moment, exponent_fit, intermittency_ratio, quenched_mass, Integrator, PathEstimator,
};
use pamlab_core::model::{
    box_points, sample_config, trunc_radius_for, DisplacementConfig, LatticePotential, ModelParams,
    SingleSitePotential,
};
use pamlab_core::rng::stream;
use pamlab_core::spectral::{assemble_operator, principal_eigenpair, Mesh};
use pamlab_core::variational::{
    minimize_functional, minimize_interval_1d, scaling_context, Optimizer, ScalingRegime,
};
use pamlab_core::{Error, Result};
use rand::Rng;

use crate::config::Config;
use crate::report::{num, CommandOutput};

fn regime_name(regime: Regime) -> &'static str {
    match regime {
        Regime::NegativeCoupling => "negative_coupling",
        Regime::HeavyTail => "heavy_tail",
        Regime::OneDimSharp => "one_dim_sharp",
        Regime::OneDimBoundary => "one_dim_boundary",
        Regime::TwoDimLog => "two_dim_log",
        Regime::HighDim => "high_dim",
    }
}

fn model_comments(params: &ModelParams) -> Vec<String> {
    vec![format!(
        "d={} alpha={} theta={} c0={} core_radius={}",
        params.d,
        num(params.alpha),
        num(params.theta),
        num(params.c0),
        num(params.core_radius)
    )]
}

/// Closed-form rates, scaling exponents and constants for the configured
/// model, one row per (quantity, moment order).
pub fn constants(cfg: &Config) -> Result<CommandOutput> {
    let params = cfg.model_params()?;
    let t = cfg.f64("run", "t")?;
    let tol = cfg.f64("run", "tol")?;
    let p_grid = cfg.list_f64("run", "p_grid")?;
    let regime = classify_regime(&params);

    let mut comments = model_comments(&params);
    comments.push(format!("regime={}", regime_name(regime)));
    comments.push(format!("t={}", num(t)));

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut push = |quantity: &str, p: Option<f64>, value: f64| {
        rows.push(vec![
            quantity.to_string(),
            p.map(num).unwrap_or_default(),
            num(value),
        ]);
    };

    push("mu", None, mu_exponent(params.d, params.alpha));
    let head = predicted_log_moment(&params, t, p_grid.first().copied().unwrap_or(1.0), tol)?;
    push("t_exponent", None, head.exponent);
    push("log_t_exponent", None, head.log_exponent);
    for &p in &p_grid {
        let pred = predicted_log_moment(&params, t, p, tol)?;
        if let Some(rate) = pred.rate {
            push("rate", Some(p), rate);
        }
        if let Some(value) = pred.value {
            push("log_moment", Some(p), value);
        }
        match regime {
            Regime::NegativeCoupling => {
                let depth = params.c0 * params.core_radius.powf(-params.alpha);
                push(
                    "c_negative",
                    Some(p),
                    c_negative(params.d, params.theta, p * depth)?,
                );
            }
            Regime::HeavyTail => {
                push(
                    "c_heavy_tail",
                    Some(p),
                    c_heavy_tail(params.d, params.alpha, params.theta, p * params.c0, tol)?,
                );
            }
            _ => {}
        }
    }
    if regime == Regime::OneDimSharp {
        push("one_dim_constant", None, one_dim_constant(params.theta)?);
    }

    let summary = vec![format!(
        "regime {} with t-exponent {}",
        regime_name(regime),
        num(head.exponent)
    )];
    Ok(CommandOutput {
        slug: "constants",
        comments,
        columns: vec!["quantity", "p", "value"],
        rows,
        summary,
        soft_error: None,
    })
}

fn sweep_subdiv(h: f64) -> Result<u32> {
    let inv = 1.0 / h;
    if !(h > 0.0) || (inv - inv.round()).abs() > 1e-9 * inv.abs() || inv.round() < 1.0 {
        return Err(Error::InvalidInput(format!(
            "mesh width {h} is not the reciprocal of a whole number"
        )));
    }
    Ok(inv.round() as u32)
}

/// Principal Dirichlet eigenvalue under mesh refinement, either in vacuum
/// on the unit box (the discretization oracle) or with a sampled
/// environment on a centered box.
pub fn eigen(cfg: &Config) -> Result<CommandOutput> {
    let params = cfg.model_params()?;
    let tol = cfg.f64("run", "tol")?;
    let max_iter = cfg.usize("eigen", "max_iter")?;
    let mesh_override = cfg.f64("run", "mesh")?;
    let sweep = if mesh_override > 0.0 {
        vec![mesh_override]
    } else {
        cfg.list_f64("eigen", "sweep")?
    };
    let potential = cfg.get("eigen", "potential").to_string();
    let d = params.d;

    let environment = match potential.as_str() {
        "vacuum" => None,
        "environment" => {
            let side = cfg.f64("eigen", "box_side")?;
            let trunc = trunc_radius_for(&params, 1e-6);
            let reach = (side / 2.0 + trunc).ceil() as i64 + 1;
            let config = sample_config(
                &params,
                box_points(d, -reach, reach),
                stream(cfg.u64("run", "seed")?, &[0x45]).random(),
            )?;
            let u = SingleSitePotential::new(params);
            Some((side, LatticePotential::new(u, &config, trunc)?))
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "[eigen] potential must be vacuum or environment, got {other}"
            )))
        }
    };

    let mut comments = model_comments(&params);
    comments.push(format!("potential={potential}"));
    let mut rows = Vec::new();
    let mut lambdas = Vec::new();
    let mut worst: Option<Error> = None;
    for &h in &sweep {
        let subdiv = sweep_subdiv(h)?;
        let domain = match &environment {
            None => {
                let cell: BTreeSet<Vec<i64>> = [vec![0i64; d]].into_iter().collect();
                GridDomain::new(d, cell, subdiv)?
            }
            Some((side, _)) => GridDomain::centered_box(d, *side, subdiv)?,
        };
        let mesh = Mesh::build(&domain)?;
        let field = match &environment {
            None => vec![0.0; mesh.len()],
            Some((_, pot)) => mesh.sample(|x| pot.value(x)),
        };
        let op = assemble_operator(&mesh, &field)?;
        let eig = principal_eigenpair(&op, tol, max_iter)?;
        if !eig.converged {
            worst = Some(Error::NonConvergence {
                what: "eigen sweep",
                achieved: eig.residual,
                tol,
                iterations: eig.iterations,
            });
        }
        rows.push(vec![
            num(h),
            num(eig.lambda),
            num(eig.residual),
            eig.iterations.to_string(),
            eig.converged.to_string(),
        ]);
        lambdas.push(eig.lambda);
    }

    let mut summary = Vec::new();
    if environment.is_none() {
        let exact = d as f64 * std::f64::consts::PI.powi(2) / 2.0;
        comments.push(format!("vacuum_reference={}", num(exact)));
        summary.push(format!("vacuum reference {}", num(exact)));
        if lambdas.len() >= 3 {
            for w in lambdas.windows(3) {
                let (e1, e2) = (w[0] - w[1], w[1] - w[2]);
                if e1.abs() > 0.0 && e2.abs() > 0.0 {
                    summary.push(format!("empirical order {}", num((e1 / e2).abs().log2())));
                }
            }
        }
    }
    for (h, l) in sweep.iter().zip(&lambdas) {
        summary.push(format!("h={} lambda={}", num(*h), num(*l)));
    }
    Ok(CommandOutput {
        slug: "eigen",
        comments,
        columns: vec!["h", "lambda", "residual", "iterations", "converged"],
        rows,
        summary,
        soft_error: worst,
    })
}

/// Scaled eigenvalue-plus-cost minimization over the time grid.
pub fn variational(cfg: &Config) -> Result<CommandOutput> {
    let params = cfg.model_params()?;
    let seed = cfg.u64("run", "seed")?;
    let t_grid = cfg.list_f64("run", "t_grid")?;
    let optimizer = cfg.get("variational", "optimizer").to_string();
    let budget = cfg.usize("variational", "budget")?;
    let subdiv = cfg.u64("variational", "subdiv")? as u32;
    let halo_width = cfg.f64("variational", "halo_width")?;
    let mesh_override = cfg.f64("run", "mesh")?;
    let target_h = if mesh_override > 0.0 {
        mesh_override
    } else {
        cfg.f64("variational", "target_h")?
    };

    let mut comments = model_comments(&params);
    comments.push(format!("optimizer={optimizer} halo_width={halo_width}"));
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (i, &t) in t_grid.iter().enumerate() {
        let ctx = scaling_context(t, &params)?;
        let use_interval = match optimizer.as_str() {
            "interval" => true,
            "auto" => params.d == 1 && params.c0 > 0.0,
            "greedy" | "annealing" => false,
            other => {
                return Err(Error::InvalidInput(format!(
                    "[variational] optimizer must be auto|interval|greedy|annealing, got {other}"
                )))
            }
        };
        let sol = if use_interval {
            minimize_interval_1d(&ctx, halo_width, target_h)?
        } else {
            let opt = if optimizer == "annealing" {
                Optimizer::Annealing
            } else {
                Optimizer::Greedy
            };
            minimize_functional(
                &ctx,
                opt,
                budget,
                stream(seed, &[0x76, i as u64]).random(),
                subdiv,
            )?
        };
        let regime = match ctx.regime {
            ScalingRegime::OneDim => "one_dim",
            ScalingRegime::TwoDimLog => "two_dim_log",
            ScalingRegime::HighDim => "high_dim",
            ScalingRegime::HeavyTail => "heavy_tail",
            ScalingRegime::NegativeU => "negative_u",
        };
        let evals = sol.trace.last().map(|e| e.evals).unwrap_or(0);
        rows.push(vec![
            num(t),
            num(ctx.r),
            num(ctx.gamma_r),
            num(ctx.mu),
            regime.to_string(),
            num(sol.value),
            num(sol.eig.lambda),
            num(sol.cost),
            evals.to_string(),
            sol.incomplete.to_string(),
        ]);
        summary.push(format!(
            "t={} value={} ({} evals)",
            num(t),
            num(sol.value),
            evals
        ));
    }
    if params.d == 1 && params.c0 > 0.0 && params.alpha > 3.0 {
        let c = one_dim_constant(params.theta)?;
        comments.push(format!("continuum_value={}", num(c)));
        summary.push(format!("continuum value {}", num(c)));
    }
    Ok(CommandOutput {
        slug: "variational",
        comments,
        columns: vec![
            "t",
            "r",
            "gamma_r",
            "mu",
            "regime",
            "value",
            "lambda",
            "cost",
            "evals",
            "incomplete",
        ],
        rows,
        summary,
        soft_error: None,
    })
}

fn meo_params_for(params: &ModelParams) -> Result<MeoParams> {
    if params.d == 1 {
        Ok(MeoParams::one_dimensional())
    } else {
        choose_meo_params(params)
    }
}

fn meo_comments(params: &ModelParams, meo: &MeoParams, r: f64, t: f64) -> Vec<String> {
    let mut comments = model_comments(params);
    comments.push(format!(
        "r={} t={} chi={} eta={} gamma={} halo_width={} cap={}",
        num(r),
        num(t),
        num(meo.chi),
        num(meo.eta),
        num(meo.gamma),
        num(meo.halo_width),
        num(meo.cap)
    ));
    comments
}

fn join_coords(q: &[i64]) -> String {
    q.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Density test over every unit cube of the t/r box, on a zero or sampled
/// displacement field.
pub fn meo_classify(cfg: &Config) -> Result<CommandOutput> {
    let params = cfg.model_params()?;
    let meo = meo_params_for(&params)?;
    let r = cfg.f64("meo", "r")?;
    let t = cfg.f64("meo", "t")?;
    let d = params.d;
    if !(r >= 2.0) || r.fract() != 0.0 {
        return Err(Error::InvalidInput(
            "[meo] r must be a whole number >= 2".into(),
        ));
    }
    let ri = r as i64;
    let (lo, hi) = centered_cell_range(t / r);
    if hi < lo {
        return Err(Error::InvalidInput(
            "[meo] t/r leaves no unit cube to classify".into(),
        ));
    }
    let sites = box_points(d, ri * (lo - 1), ri * (hi + 2));
    let source = cfg.get("meo", "config").to_string();
    let config = match source.as_str() {
        "zeros" => DisplacementConfig::zeros_on_box(d, ri * (lo - 1), ri * (hi + 2))?,
        "sampled" => sample_config(
            &params,
            sites,
            stream(cfg.u64("run", "seed")?, &[0x4d]).random(),
        )?,
        other => {
            return Err(Error::InvalidInput(format!(
                "[meo] config must be zeros or sampled, got {other}"
            )))
        }
    };
    let rs = rarefied_set(&config, r, t, &meo)?;

    let mut comments = meo_comments(&params, &meo, r, t);
    comments.push(format!("config={source}"));
    comments.push(format!(
        "rarefied_volume={} cells={} levels_collapsed={}",
        num(rs.volume()),
        box_points(d, lo, hi).len(),
        rs.levels_collapsed
    ));
    let rows = box_points(d, lo, hi)
        .into_iter()
        .map(|q| {
            let rare = rs.cells.contains(&q);
            vec![join_coords(&q), (!rare).to_string()]
        })
        .collect();
    let summary = vec![format!(
        "{} of {} cubes rarefied on the {source} field",
        num(rs.volume()),
        box_points(d, lo, hi).len()
    )];
    Ok(CommandOutput {
        slug: "meo-classify",
        comments,
        columns: vec!["cube", "is_density"],
        rows,
        summary,
        soft_error: None,
    })
}

/// Monte Carlo frequency of a rarefied volume reaching its threshold.
pub fn meo_volume(cfg: &Config) -> Result<CommandOutput> {
    let params = cfg.model_params()?;
    let meo = meo_params_for(&params)?;
    let r = cfg.f64("meo", "r")?;
    let t = cfg.f64("meo", "t")?;
    let trials = cfg.usize("meo", "trials")?;
    let seed = cfg.u64("run", "seed")?;
    let trial = volume_bound_trial(&params, r, t, &meo, trials, seed)?;

    let comments = meo_comments(&params, &meo, r, t);
    let rows = vec![vec![
        num(r),
        num(t),
        num(trial.threshold),
        trial.n.to_string(),
        trial.hits.to_string(),
        num(trial.empirical),
        num(trial.wilson_low),
        num(trial.wilson_high),
        num(trial.bound_exponent),
        trial.min_cost_ratio.map(num).unwrap_or_default(),
        trial.levels_collapsed.to_string(),
    ]];
    let summary = vec![format!(
        "{} of {} samples reached volume {} (95% interval [{}, {}])",
        trial.hits,
        trial.n,
        num(trial.threshold),
        num(trial.wilson_low),
        num(trial.wilson_high)
    )];
    Ok(CommandOutput {
        slug: "meo-volume",
        comments,
        columns: vec![
            "r",
            "t",
            "threshold",
            "n",
            "hits",
            "empirical",
            "wilson_low",
            "wilson_high",
            "bound_exponent",
            "min_cost_ratio",
            "levels_collapsed",
        ],
        rows,
        summary,
        soft_error: None,
    })
}

/// Exhaustive animal/displacement pair counts at toy scale.
pub fn meo_enumerate(cfg: &Config) -> Result<CommandOutput> {
    let params = cfg.model_params()?;
    let r = cfg.f64("meo", "r")?;
    let t = cfg.f64("meo", "t")?;
    let size_cap = cfg.usize("meo", "size_cap")?;
    let disp_cap = cfg.f64("meo", "disp_cap")?;
    let halo_width = cfg.f64("meo", "halo_width")?;
    let subdiv = cfg.u64("meo", "subdiv")? as u32;
    let en = enumerate_relevant(params.d, r, t, size_cap, disp_cap, halo_width, subdiv)?;

    let mut comments = model_comments(&params);
    comments.push(format!(
        "r={} t={} size_cap={size_cap} disp_cap={} halo_width={}",
        num(r),
        num(t),
        num(disp_cap),
        num(halo_width)
    ));
    comments.push(format!(
        "displacements={} animals={} pairs={}",
        en.displacements.len(),
        en.animals.len(),
        en.count
    ));
    let n_disp = en.displacements.len() as u128;
    let rows = en
        .animals
        .iter()
        .enumerate()
        .map(|(i, animal)| {
            let halo = en.halo_sites(i).len();
            let assignments = n_disp.pow(halo as u32);
            vec![
                i.to_string(),
                animal.n_cells().to_string(),
                halo.to_string(),
                assignments.to_string(),
            ]
        })
        .collect();
    let summary = vec![format!(
        "{} animals, {} displacement vectors, {} pairs",
        en.animals.len(),
        en.displacements.len(),
        en.count
    )];
    Ok(CommandOutput {
        slug: "meo-enumerate",
        comments,
        columns: vec!["animal", "cells", "halo_sites", "assignments"],
        rows,
        summary,
        soft_error: None,
    })
}

fn integrator_from(cfg: &Config) -> Result<Integrator> {
    match cfg.get("fk", "integrator") {
        "left" => Ok(Integrator::LeftPoint),
        "trapezoid" => Ok(Integrator::Trapezoid),
        other => Err(Error::InvalidInput(format!(
            "[fk] integrator must be left or trapezoid, got {other}"
        ))),
    }
}

fn estimator_for(cfg: &Config, d: usize, t: f64) -> Result<PathEstimator> {
    let n_paths = cfg.usize("fk", "n_paths")?;
    let dt = cfg.f64("fk", "dt")?;
    let mut est = PathEstimator::new(d, t, n_paths)?.with_integrator(integrator_from(cfg)?);
    if dt > 0.0 {
        est = est.with_dt(dt)?;
    }
    Ok(est)
}

fn fk_comments(cfg: &Config, params: &ModelParams) -> Result<Vec<String>> {
    let mut comments = model_comments(params);
    comments.push(format!(
        "n_paths={} n_env={} integrator={} seed={}",
        cfg.usize("fk", "n_paths")?,
        cfg.usize("fk", "n_env")?,
        cfg.get("fk", "integrator"),
        cfg.u64("run", "seed")?
    ));
    Ok(comments)
}

/// Path-average mass on one frozen environment across the time grid.
pub fn fk_quenched(cfg: &Config) -> Result<CommandOutput> {
    let params = cfg.model_params()?;
    let seed = cfg.u64("run", "seed")?;
    let t_grid = cfg.list_f64("run", "t_grid")?;
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    if !(t_max > 0.0) {
        return Err(Error::InvalidInput(
            "[run] t_grid needs a positive entry".into(),
        ));
    }
    let d = params.d;
    let trunc = trunc_radius_for(&params, 1e-4);
    let walk = 6.0 * (t_max * d as f64).sqrt();
    let reach = (walk + 0.5 + trunc).ceil() as i64 + 1;
    let config = sample_config(
        &params,
        box_points(d, -reach, reach),
        stream(seed, &[0x45]).random(),
    )?;

    let mut comments = fk_comments(cfg, &params)?;
    comments.push(format!("trunc_radius={} site_reach={reach}", num(trunc)));
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (i, &t) in t_grid.iter().enumerate() {
        let est = estimator_for(cfg, d, t)?;
        let mut rng = stream(seed, &[0x51, i as u64]);
        let (mass, se) = quenched_mass(&config, &params, &est, &mut rng)?;
        let rate = -mass.ln() / t;
        rows.push(vec![num(t), num(mass), num(se), num(mass.ln()), num(rate)]);
        summary.push(format!(
            "t={} mass={} rate={}",
            num(t),
            num(mass),
            num(rate)
        ));
    }
    Ok(CommandOutput {
        slug: "fk-quenched",
        comments,
        columns: vec!["t", "mass", "std_err", "log_mass", "rate"],
        rows,
        summary,
        soft_error: None,
    })
}

/// Environment-averaged moments over the (t, p) grid, sharing random
/// numbers across moment orders.
pub fn fk_annealed(cfg: &Config) -> Result<CommandOutput> {
    let params = cfg.model_params()?;
    let seed = cfg.u64("run", "seed")?;
    let t_grid = cfg.list_f64("run", "t_grid")?;
    let p_grid = cfg.list_f64("run", "p_grid")?;
    let n_env = cfg.usize("fk", "n_env")?;

    let comments = fk_comments(cfg, &params)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &t in &t_grid {
        let est = estimator_for(cfg, params.d, t)?;
        for &p in &p_grid {
            let m = annealed_moment(&params, p, n_env, &est, seed)?;
            rows.push(vec![
                num(t),
                num(p),
                num(m.mean),
                num(m.std_err),
                num(m.mean.powf(1.0 / p)),
                m.n_env.to_string(),
                m.n_paths.to_string(),
            ]);
        }
        summary.push(format!("t={} done", num(t)));
    }
    Ok(CommandOutput {
        slug: "fk-annealed",
        comments,
        columns: vec![
            "t",
            "p",
            "mean",
            "std_err",
            "normalized",
            "n_env",
            "n_paths",
        ],
        rows,
        summary,
        soft_error: None,
    })
}

/// Normalized moment ratio with its bootstrap interval, plus the
/// predicted gap where a closed form exists.
pub fn fk_ratio(cfg: &Config) -> Result<CommandOutput> {
    let params = cfg.model_params()?;
    let seed = cfg.u64("run", "seed")?;
    let t = cfg.f64("run", "t")?;
    let tol = cfg.f64("run", "tol")?;
    let p1 = cfg.f64("fk", "p1")?;
    let p2 = cfg.f64("fk", "p2")?;
    let n_env = cfg.usize("fk", "n_env")?;
    let est = estimator_for(cfg, params.d, t)?;
    let ratio = intermittency_ratio(&params, p1, p2, n_env, &est, seed)?;

    let mut comments = fk_comments(cfg, &params)?;
    comments.push(format!("t={} p1={} p2={}", num(t), num(p1), num(p2)));
    if t > std::f64::consts::E {
        match intermittency_gap(&params, t, p1, p2, tol)? {
            IntermittencyGap::Rate(g) => comments.push(format!("predicted_log_gap={}", num(g))),
            IntermittencyGap::OrderOnly { exponent, p_power } => comments.push(format!(
                "predicted_gap_order_t_exponent={} p_power={}",
                num(exponent),
                num(p_power)
            )),
        }
    }
    let rows = vec![vec![
        num(t),
        num(p1),
        num(p2),
        num(ratio.ratio),
        num(ratio.ci_low),
        num(ratio.ci_high),
        ratio.degenerate.to_string(),
        ratio.n_env.to_string(),
    ]];
    let summary = vec![format!(
        "ratio {} with 95% interval [{}, {}] over {} environments",
        num(ratio.ratio),
        num(ratio.ci_low),
        num(ratio.ci_high),
        ratio.n_env
    )];
    Ok(CommandOutput {
        slug: "fk-ratio",
        comments,
        columns: vec![
            "t",
            "p1",
            "p2",
            "ratio",
            "ci_low",
            "ci_high",
            "degenerate",
            "n_env",
        ],
        rows,
        summary,
        soft_error: None,
    })
}

/// Annealed log-mass series over the time grid with its power-law fit.
/// Desk-scale fits are indicative; the fitted range and r-squared always
/// travel with the estimate.
pub fn exponent(cfg: &Config) -> Result<CommandOutput> {
    let params = cfg.model_params()?;
    let seed = cfg.u64("run", "seed")?;
    let t_grid = cfg.list_f64("run", "t_grid")?;
    let tol = cfg.f64("run", "tol")?;
    let n_env = cfg.usize("fk", "n_env")?;
    let p = cfg
        .list_f64("run", "p_grid")?
        .first()
        .copied()
        .unwrap_or(1.0);

    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &t in &t_grid {
        let est = estimator_for(cfg, params.d, t)?;
        let m = annealed_moment(&params, p, n_env, &est, seed)?;
        series.push((t, m.mean.ln()));
        rows.push(vec![
            num(t),
            num(p),
            num(m.mean),
            num(m.std_err),
            num(m.mean.ln()),
        ]);
    }
    let (fitted, intercept, r2) = exponent_fit(&series)?;

    let mut comments = fk_comments(cfg, &params)?;
    let (t_min, t_max) = (
        t_grid.iter().cloned().fold(f64::INFINITY, f64::min),
        t_grid.iter().cloned().fold(0.0, f64::max),
    );
    comments.push(format!(
        "fitted_exponent={} intercept={} r2={} fit_range=[{},{}]",
        num(fitted),
        num(intercept),
        num(r2),
        num(t_min),
        num(t_max)
    ));
    let mut summary = vec![format!(
        "fitted exponent {} over t in [{}, {}], r2 {}",
        num(fitted),
        num(t_min),
        num(t_max),
        num(r2)
    )];
    if t_max > std::f64::consts::E {
        let pred = predicted_log_moment(&params, t_max, p, tol)?;
        comments.push(format!("predicted_exponent={}", num(pred.exponent)));
        summary.push(format!("predicted exponent {}", num(pred.exponent)));
    }
    Ok(CommandOutput {
        slug: "exponent",
        comments,
        columns: vec!["t", "p", "mean", "std_err", "log_mean"],
        rows,
        summary,
        soft_error: None,
    })
}
