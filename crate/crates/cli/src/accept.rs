//! The acceptance gate: ten criteria checked against closed forms,
//! independent test-side oracles, and cross-module consistency, each with
//! pinned tolerances. Criteria use fixed internal seeds so the gate is
//! reproducible regardless of the run configuration. Failures are
//! reported, never thrown.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use pamlab_core::asymptotics::{c_heavy_tail, c_negative, mu_exponent, one_dim_constant};
use pamlab_core::coarse::{choose_meo_params, enumerate_relevant, rarefied_set};
use pamlab_core::domain::{centered_cell_range, GridDomain};
use pamlab_core::feynman_kac::{
    annealed_moment, exponent_fit, intermittency_ratio, path_functional, quenched_mass,
    PathEstimator,
};
use pamlab_core::model::{
    box_points, sample_config, trunc_radius_for, DisplacementConfig, LatticePotential, ModelParams,
    SingleSitePotential,
};
use pamlab_core::numerics::min_scan_refine;
use pamlab_core::rng::stream;
use pamlab_core::spectral::{assemble_operator, principal_eigenpair, semigroup_evolve, Mesh};
use pamlab_core::variational::{
    compare_variational_forms, continuum_profile, minimize_interval_1d, scaling_context,
    ScalingContext, ScalingRegime,
};
use pamlab_core::{Error, Result};
use rand::Rng;

use crate::config::Config;
use crate::report::{num, CommandOutput};

/// Reference value of the sharp one-dimensional constant at theta = 1.
const ONE_DIM_THETA1: f64 = 2.221441;

pub const FAST: &[&str] = &["A1", "A2", "A3", "A5", "A6", "A10"];
pub const FULL: &[&str] = &["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10"];

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: &'static str,
    pub pass: bool,
    /// Headline measured quantity; what `tolerance` bounds.
    pub measured: f64,
    pub tolerance: f64,
    pub runtime: Duration,
    pub detail: Vec<String>,
}

struct Check {
    pass: bool,
    measured: f64,
    tolerance: f64,
    detail: Vec<String>,
}

pub fn run_criterion(id: &str) -> Result<CriterionResult> {
    let (id, body): (&'static str, fn() -> Result<Check>) = match id {
        "A1" => ("A1", a1_eigensolver_oracle),
        "A2" => ("A2", a2_negative_constant_closed_form),
        "A3" => ("A3", a3_one_dim_constant_consistency),
        "A4" => ("A4", a4_interval_convergence),
        "A5" => ("A5", a5_heavy_tail_scaling),
        "A6" => ("A6", a6_meo_sanity),
        "A7" => ("A7", a7_feynman_kac_calibration),
        "A8" => ("A8", a8_moment_monotonicity),
        "A9" => ("A9", a9_form_equivalence),
        "A10" => ("A10", a10_exponent_fit),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown acceptance criterion {other}"
            )))
        }
    };
    let started = Instant::now();
    let check = body()?;
    Ok(CriterionResult {
        id,
        pass: check.pass,
        measured: check.measured,
        tolerance: check.tolerance,
        runtime: started.elapsed(),
        detail: check.detail,
    })
}

/// The `accept` subcommand: runs the chosen suite and tabulates it.
/// Criteria report rather than throw, so the command itself succeeds
/// whenever the suite ran to completion.
pub fn accept_command(_cfg: &Config, full: bool) -> Result<CommandOutput> {
    let (slug, ids): (&'static str, &[&str]) = if full {
        ("accept-full", FULL)
    } else {
        ("accept-fast", FAST)
    };
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut failures = 0usize;
    for id in ids {
        let res = run_criterion(id)?;
        rows.push(vec![
            res.id.to_string(),
            if res.pass { "PASS" } else { "FAIL" }.to_string(),
            num(res.measured),
            num(res.tolerance),
        ]);
        summary.push(format!(
            "{} {} measured={} tolerance={} ({:.1}s)",
            res.id,
            if res.pass { "PASS" } else { "FAIL" },
            num(res.measured),
            num(res.tolerance),
            res.runtime.as_secs_f64()
        ));
        for line in &res.detail {
            summary.push(format!("    {line}"));
        }
        if !res.pass {
            failures += 1;
        }
    }
    summary.push(if failures == 0 {
        format!("all {} criteria pass", ids.len())
    } else {
        format!("{failures} of {} criteria FAIL", ids.len())
    });
    Ok(CommandOutput {
        slug,
        // Runtimes stay out of the CSV so replays remain byte-identical;
        // the summary carries them.
        comments: vec![format!("criteria={}", ids.join(";"))],
        columns: vec!["id", "pass", "measured", "tolerance"],
        rows,
        summary,
        soft_error: None,
    })
}

fn vacuum_lambda(d: usize, subdiv: u32) -> Result<(f64, bool)> {
    let cell: BTreeSet<Vec<i64>> = [vec![0i64; d]].into_iter().collect();
    let mesh = Mesh::build(&GridDomain::new(d, cell, subdiv)?)?;
    let op = assemble_operator(&mesh, &vec![0.0; mesh.len()])?;
    let eig = principal_eigenpair(&op, 1e-11, 40_000)?;
    Ok((eig.lambda, eig.converged))
}

/// A1: vacuum Dirichlet eigenvalue on the unit interval and unit square
/// converges at second order to d*pi^2/2 under h in {1/8, 1/16, 1/32}.
fn a1_eigensolver_oracle() -> Result<Check> {
    let mut detail = Vec::new();
    let mut min_order = f64::INFINITY;
    let mut pass = true;
    for d in [1usize, 2] {
        let exact = d as f64 * std::f64::consts::PI.powi(2) / 2.0;
        let mut errors = Vec::new();
        for subdiv in [8u32, 16, 32] {
            let (lambda, converged) = vacuum_lambda(d, subdiv)?;
            pass &= converged;
            errors.push((exact - lambda).abs());
            detail.push(format!("d={d} h=1/{subdiv} lambda={}", num(lambda)));
        }
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            min_order = min_order.min(order);
            detail.push(format!("d={d} empirical order {}", num(order)));
        }
        pass &= errors[2] <= 0.01 * exact;
    }
    pass &= min_order >= 1.9;
    Ok(Check {
        pass,
        measured: min_order,
        tolerance: 1.9,
        detail,
    })
}

/// A2: the negative-coupling growth constant against its two hand
/// arithmetic values, 4/3 and pi/2.
fn a2_negative_constant_closed_form() -> Result<Check> {
    let one = c_negative(1, 2.0, -1.0)?;
    let two = c_negative(2, 2.0, -1.0)?;
    let dev = (one - 4.0 / 3.0)
        .abs()
        .max((two - std::f64::consts::PI / 2.0).abs());
    Ok(Check {
        pass: dev <= 1e-12,
        measured: dev,
        tolerance: 1e-12,
        detail: vec![
            format!("c(1,2,-1)={} expected {}", num(one), num(4.0 / 3.0)),
            format!(
                "c(2,2,-1)={} expected {}",
                num(two),
                num(std::f64::consts::PI / 2.0)
            ),
        ],
    })
}

/// A3: the closed-form one-dimensional constant equals the numerically
/// minimized continuum profile, and hits its tabulated value at theta=1.
fn a3_one_dim_constant_consistency() -> Result<Check> {
    let mut detail = Vec::new();
    let mut dev: f64 = 0.0;
    for theta in [0.5, 1.0, 2.0, 3.0] {
        let closed = one_dim_constant(theta)?;
        let (ell, minimum) =
            min_scan_refine(|l| continuum_profile(l, theta), 0.05, 12.0, 2000, 1e-10);
        dev = dev.max((closed - minimum).abs());
        detail.push(format!(
            "theta={} closed={} profile_min={} at ell={}",
            num(theta),
            num(closed),
            num(minimum),
            num(ell)
        ));
    }
    let at_one = (one_dim_constant(1.0)? - ONE_DIM_THETA1).abs();
    detail.push(format!("theta=1 tabulated deviation {}", num(at_one)));
    Ok(Check {
        pass: dev <= 1e-8 && at_one <= 1e-5,
        measured: dev,
        tolerance: 1e-8,
        detail,
    })
}

/// A4: interval minimization at theta=1, alpha=3 decreases over
/// r in {16, 32, 64} and lands within 15% of the continuum constant.
fn a4_interval_convergence() -> Result<Check> {
    let params = ModelParams::with_unit_core(1, 3.0, 1.0, 1.0)?;
    let mut detail = Vec::new();
    let mut values = Vec::new();
    for r in [16.0f64, 32.0, 64.0] {
        let ctx = scaling_context(r.powi(4), &params)?;
        let sol = minimize_interval_1d(&ctx, 4.0, 1.0 / 16.0)?;
        detail.push(format!(
            "r={} value={} lambda={} cost={}",
            num(ctx.r),
            num(sol.value),
            num(sol.eig.lambda),
            num(sol.cost)
        ));
        values.push(sol.value);
    }
    let decreasing = values[0] > values[1] && values[1] > values[2];
    let rel = (values[2] / ONE_DIM_THETA1 - 1.0).abs();
    detail.push(format!("relative gap to continuum at r=64: {}", num(rel)));
    Ok(Check {
        pass: decreasing && rel <= 0.15,
        measured: rel,
        tolerance: 0.15,
        detail,
    })
}

/// Deliberately dumb grid evaluation of the heavy-tail constant at
/// d=1, alpha=2, theta=1, c0=1: an inner displacement scan refined twice,
/// an outer trapezoid, and the exact pure-power tail beyond the region
/// where pushing no longer pays.
fn heavy_tail_grid_oracle() -> f64 {
    let g = |rho: f64| -> f64 {
        let f = |s: f64| (rho + s).powi(-2) + s;
        let mut best_s = 0.0;
        let mut best = f(0.0);
        let mut lo = 0.0;
        let mut step = 0.01;
        let mut hi = 3.0;
        for _ in 0..3 {
            let mut s = lo;
            while s <= hi {
                let v = f(s);
                if v < best {
                    best = v;
                    best_s = s;
                }
                s += step;
            }
            lo = (best_s - step).max(0.0);
            hi = best_s + step;
            step /= 10.0;
        }
        best
    };
    let (b, n) = (2.0, 20_000);
    let h = b / n as f64;
    let mut acc = 0.5 * (g(1e-12) + g(b));
    for i in 1..n {
        acc += g(i as f64 * h);
    }
    // Beyond b the infimum sits at s = 0, so the integrand is exactly
    // rho^{-2} and the tail integrates to 1/b.
    2.0 * (acc * h + 1.0 / b)
}

/// A5: heavy-tail constant scales as p^{2/3} in the coupling and matches
/// the brute-force grid oracle.
fn a5_heavy_tail_scaling() -> Result<Check> {
    let c1 = c_heavy_tail(1, 2.0, 1.0, 1.0, 1e-6)?;
    let mut detail = vec![format!("c(1,2,1,1)={}", num(c1))];
    let mut identity_dev: f64 = 0.0;
    for p in [2.0, 4.0] {
        let cp = c_heavy_tail(1, 2.0, 1.0, p, 1e-6)?;
        let scaled = p.powf(2.0 / 3.0) * c1;
        identity_dev = identity_dev.max((cp / scaled - 1.0).abs());
        detail.push(format!(
            "c(1,2,1,{})={} vs p^(2/3)c1={}",
            num(p),
            num(cp),
            num(scaled)
        ));
    }
    let oracle = heavy_tail_grid_oracle();
    let oracle_dev = (c1 / oracle - 1.0).abs();
    detail.push(format!(
        "grid oracle {} deviation {}",
        num(oracle),
        num(oracle_dev)
    ));
    Ok(Check {
        pass: identity_dev <= 1e-4 && oracle_dev <= 0.01,
        measured: identity_dev,
        tolerance: 1e-4,
        detail,
    })
}

fn expelled_config(d: usize, r: i64, lo: i64, hi: i64) -> Result<DisplacementConfig> {
    let mut cfg = DisplacementConfig::new(d);
    let mut xi = vec![0i64; d];
    xi[0] = 3 * r;
    for q in box_points(d, r * (lo - 1), r * (hi + 2)) {
        cfg.insert(q, xi.clone())?;
    }
    Ok(cfg)
}

fn connected(cells: &[&Vec<i64>]) -> bool {
    let mut seen = vec![false; cells.len()];
    let mut frontier = vec![0usize];
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = frontier.pop() {
        for (j, c) in cells.iter().enumerate() {
            if seen[j] {
                continue;
            }
            let dist: i64 = cells[i]
                .iter()
                .zip(c.iter())
                .map(|(a, b)| (a - b).abs())
                .sum();
            if dist == 1 {
                seen[j] = true;
                reached += 1;
                frontier.push(j);
            }
        }
    }
    reached == cells.len()
}

fn oracle_halo_count(d: usize, r: i64, cells: &[&Vec<i64>], halo_width: f64) -> usize {
    let bound = (r as f64 * halo_width).powi(2) + 1e-9;
    let pad = (r as f64 * halo_width).ceil() as i64 + 1;
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for c in cells {
        for a in 0..d {
            lo[a] = lo[a].min(r * c[a] - pad);
            hi[a] = hi[a].max(r * (c[a] + 1) + pad);
        }
    }
    let mut count = 0;
    let mut site = lo.clone();
    'scan: loop {
        let dsq = cells
            .iter()
            .map(|c| {
                site.iter()
                    .enumerate()
                    .map(|(a, &y)| {
                        let g = (r * c[a] - y).max(y - r * (c[a] + 1)).max(0);
                        g * g
                    })
                    .sum::<i64>()
            })
            .min()
            .expect("animal has cells");
        if (dsq as f64) <= bound {
            count += 1;
        }
        for a in 0..d {
            site[a] += 1;
            if site[a] <= hi[a] {
                continue 'scan;
            }
            site[a] = lo[a];
        }
        break;
    }
    count
}

/// Leaf-counting recursion over displacement assignments: exponential on
/// purpose, so the count is earned rather than computed as a power.
fn count_assignments(sites: usize, n_disp: usize) -> u128 {
    if sites == 0 {
        return 1;
    }
    let mut total = 0u128;
    for _ in 0..n_disp {
        total += count_assignments(sites - 1, n_disp);
    }
    total
}

fn oracle_pairs(d: usize, r: i64, t: f64, size_cap: usize, disp_cap: f64, halo_width: f64) -> u128 {
    let (lo, hi) = centered_cell_range(t / r as f64);
    let cells = box_points(d, lo, hi);
    let n_disp = box_points(d, -2, 2)
        .into_iter()
        .filter(|v| v.iter().map(|&c| (c * c) as f64).sum::<f64>() <= disp_cap * disp_cap + 1e-9)
        .count();
    let mut total = 0u128;
    for mask in 1u32..(1 << cells.len()) {
        if mask.count_ones() as usize > size_cap {
            continue;
        }
        let subset: Vec<&Vec<i64>> = cells
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, c)| c)
            .collect();
        if !connected(&subset) {
            continue;
        }
        total += count_assignments(oracle_halo_count(d, r, &subset, halo_width), n_disp);
    }
    total
}

/// A6: the perfect lattice leaves no rarefied cube and the fully expelled
/// field rarefies the whole box; pair enumeration counts match a
/// recursive brute-force oracle on ten toy instances.
fn a6_meo_sanity() -> Result<Check> {
    let params = ModelParams::with_unit_core(2, 6.0, 1.0, 1.0)?;
    let meo = choose_meo_params(&params)?;
    let mut detail = Vec::new();
    let mut pass = true;
    for r in [32i64, 64, 128] {
        let t = 2.0 * r as f64;
        let (lo, hi) = centered_cell_range(t / r as f64);
        let zeros = DisplacementConfig::zeros_on_box(2, r * (lo - 1), r * (hi + 2))?;
        let on_lattice = rarefied_set(&zeros, r as f64, t, &meo)?;
        let expelled = rarefied_set(&expelled_config(2, r, lo, hi)?, r as f64, t, &meo)?;
        let n_cubes = box_points(2, lo, hi).len();
        pass &= on_lattice.is_empty() && expelled.volume() as usize == n_cubes;
        detail.push(format!(
            "r={r}: zeros rarefied {} cubes, expelled {} of {n_cubes}",
            num(on_lattice.volume()),
            num(expelled.volume())
        ));
    }

    let toys: [(usize, f64, f64, usize, f64, f64); 10] = [
        (1, 2.0, 2.0, 1, 0.0, 1.0),
        (1, 2.0, 4.0, 2, 1.0, 1.0),
        (1, 2.0, 4.0, 2, 1.5, 0.5),
        (1, 3.0, 6.0, 3, 1.0, 1.0),
        (1, 2.0, 6.0, 2, 2.0, 0.5),
        (2, 2.0, 2.0, 1, 1.0, 0.25),
        (2, 2.0, 2.0, 1, 0.0, 1.0),
        (2, 2.0, 4.0, 2, 0.0, 0.5),
        (2, 2.0, 4.0, 1, 1.0, 0.25),
        (1, 4.0, 8.0, 4, 1.0, 0.25),
    ];
    let mut mismatches = 0usize;
    for &(d, r, t, size_cap, disp_cap, halo_width) in &toys {
        let en = enumerate_relevant(d, r, t, size_cap, disp_cap, halo_width, 2)?;
        let oracle = oracle_pairs(d, r as i64, t, size_cap, disp_cap, halo_width);
        let mut ok = en.count == oracle;
        if oracle <= 200_000 {
            ok &= en.iter().count() as u128 == oracle;
        }
        if !ok {
            mismatches += 1;
        }
        detail.push(format!(
            "d={d} r={} t={} cap={size_cap} disp={} halo={}: {} vs oracle {}{}",
            num(r),
            num(t),
            num(disp_cap),
            num(halo_width),
            en.count,
            oracle,
            if ok { "" } else { " MISMATCH" }
        ));
    }
    pass &= mismatches == 0;
    Ok(Check {
        pass,
        measured: mismatches as f64,
        tolerance: 0.0,
        detail,
    })
}

/// A7: the constant-potential closed form within three standard errors,
/// and the quenched decay rate against a Crank-Nicolson semigroup oracle
/// sharing the identical truncated potential.
fn a7_feynman_kac_calibration() -> Result<Check> {
    let mut detail = Vec::new();

    let (c, t) = (0.7, 1.5);
    let est = PathEstimator::new(1, t, 10_000)?;
    let (mean, se) = path_functional(|_| c, &est, stream(0xa7, &[1]).random())?;
    let exact = (-c * t).exp();
    let const_dev = (mean - exact).abs();
    let const_tol = (3.0 * se).max(1e-12);
    detail.push(format!(
        "constant potential: mean={} exact={} dev={} 3se={}",
        num(mean),
        num(exact),
        num(const_dev),
        num(const_tol)
    ));

    let params = ModelParams::with_unit_core(1, 6.0, 1.0, 1.0)?;
    let trunc = trunc_radius_for(&params, 1e-4);
    let t: f64 = 2.0;
    let reach = (6.0 * t.sqrt() + 0.5 + trunc).ceil() as i64 + 1;
    let config = sample_config(&params, box_points(1, -reach, reach), 0xa7b)?;
    let est = PathEstimator::new(1, t, 20_000)?.with_dt(t / 512.0)?;
    let mut rng = stream(0xa7, &[2]);
    let (m_mc, _) = quenched_mass(&config, &params, &est, &mut rng)?;

    let u = SingleSitePotential::new(params);
    let pot = LatticePotential::new(u, &config, trunc)?;
    let mesh = Mesh::build(&GridDomain::interval(-10, 9, 16)?)?;
    let field = mesh.sample(|x| pot.value(x));
    let op = assemble_operator(&mesh, &field)?;
    let evolved = semigroup_evolve(&op, &vec![1.0; mesh.len()], t, 4096)?;
    let origin = mesh.node_index(&[0]).expect("origin is an interior node");
    let m_pde = evolved[origin];
    let (rate_mc, rate_pde) = (-m_mc.ln() / t, -m_pde.ln() / t);
    let rate_dev = (rate_mc / rate_pde - 1.0).abs();
    detail.push(format!(
        "quenched rate: sampled={} semigroup={} relative gap {}",
        num(rate_mc),
        num(rate_pde),
        num(rate_dev)
    ));

    Ok(Check {
        pass: const_dev <= const_tol && rate_dev <= 0.10,
        measured: rate_dev,
        tolerance: 0.10,
        detail,
    })
}

/// A8: normalized moments nondecreasing in p on shared random numbers,
/// and the attractive-well toy ratio above 1 at bootstrap confidence.
fn a8_moment_monotonicity() -> Result<Check> {
    let params = ModelParams::with_unit_core(1, 4.0, 1.0, 1.0)?;
    let est = PathEstimator::new(1, 4.0, 30)?.with_dt(4.0 / 256.0)?;
    let mut normalized = Vec::new();
    for p in [1.0, 2.0, 4.0] {
        let m = annealed_moment(&params, p, 60, &est, 0xa8)?;
        normalized.push(m.mean.powf(1.0 / p));
    }
    let mono = normalized[0] <= normalized[1] * (1.0 + 1e-12)
        && normalized[1] <= normalized[2] * (1.0 + 1e-12);
    let mut detail = vec![format!(
        "normalized moments p=1,2,4: {}, {}, {}",
        num(normalized[0]),
        num(normalized[1]),
        num(normalized[2])
    )];

    let attractive = ModelParams::with_unit_core(1, 6.0, 1.0, -1.0)?;
    let est = PathEstimator::new(1, 4.0, 40)?.with_dt(4.0 / 256.0)?;
    let ratio = intermittency_ratio(&attractive, 1.0, 2.0, 150, &est, 0xa8b)?;
    detail.push(format!(
        "attractive ratio {} with 95% interval [{}, {}]",
        num(ratio.ratio),
        num(ratio.ci_low),
        num(ratio.ci_high)
    ));
    Ok(Check {
        pass: mono && !ratio.degenerate && ratio.ci_low > 1.0,
        measured: ratio.ci_low,
        tolerance: 1.0,
        detail,
    })
}

/// A9: restricted and full-box variational forms agree within the
/// two-sided band on three exhaustively enumerable instances.
fn a9_form_equivalence() -> Result<Check> {
    let mut detail = Vec::new();
    let mut worst: f64 = 1.0;
    let mut pass = true;
    for (alpha, theta) in [(3.0, 1.0), (4.0, 1.0), (3.0, 2.0)] {
        let params = ModelParams::with_unit_core(1, alpha, theta, 1.0)?;
        let ctx = ScalingContext {
            params,
            t: 4.0,
            r: 2.0,
            gamma_r: 1.0,
            mu: mu_exponent(1, alpha),
            regime: ScalingRegime::OneDim,
        };
        let rep = compare_variational_forms(&ctx, 2, 1.0, 1.0, 8)?;
        pass &= (0.8..=1.25).contains(&rep.ratio);
        if (rep.ratio - 1.0).abs() > (worst - 1.0).abs() {
            worst = rep.ratio;
        }
        detail.push(format!(
            "alpha={} theta={}: ratio={} over {} pairs and {} box sweeps",
            num(alpha),
            num(theta),
            num(rep.ratio),
            rep.pairs,
            rep.full_box_configs
        ));
    }
    Ok(Check {
        pass,
        measured: worst,
        tolerance: 1.25,
        detail,
    })
}

/// A10: the exponent fit recovers a clean power law exactly and stays
/// within 0.05 of 1/2 under 5% multiplicative log-noise.
fn a10_exponent_fit() -> Result<Check> {
    let series: Vec<(f64, f64)> = (1..=10)
        .map(|k| {
            let t = 2f64.powi(k);
            (t, -3.0 * t.sqrt())
        })
        .collect();
    let (slope, _, r2) = exponent_fit(&series)?;
    let exact_ok = (slope - 0.5).abs() < 1e-10 && (1.0 - r2) < 1e-12;
    let mut detail = vec![format!(
        "clean series: slope={} 1-r2={}",
        num(slope),
        num(1.0 - r2)
    )];

    let mut rng = stream(0xa10, &[]);
    let mut gauss = move || {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let noisy: Vec<(f64, f64)> = series
        .iter()
        .map(|&(t, y)| (t, y * (1.0 + 0.05 * gauss())))
        .collect();
    let (noisy_slope, _, noisy_r2) = exponent_fit(&noisy)?;
    let noisy_dev = (noisy_slope - 0.5).abs();
    detail.push(format!(
        "5% noise: slope={} r2={} deviation {}",
        num(noisy_slope),
        num(noisy_r2),
        num(noisy_dev)
    ));
    Ok(Check {
        pass: exact_ok && noisy_dev <= 0.05,
        measured: noisy_dev,
        tolerance: 0.05,
        detail,
    })
}
