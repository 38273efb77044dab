//! Finite-difference discretization of H = -½Δ + V with Dirichlet boundary
//! on unions of unit cells: principal eigenpairs by shifted inverse power
//! iteration (CG inner solves) and semigroup action by Crank-Nicolson.

use crate::domain::GridDomain;
use crate::{Error, Result};
use std::collections::HashMap;

const MAX_NODES: usize = 3_000_000;
pub const DEFAULT_EIG_TOL: f64 = 1e-8;

/// Interior mesh nodes of a domain at spacing h = 1/subdiv, with the
/// neighbor table of the (2d+1)-point stencil. Exterior and boundary nodes
/// are Dirichlet zeros and never stored.
#[derive(Debug, Clone)]
pub struct Mesh {
    domain: GridDomain,
    nodes: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, u32>,
    /// 2d entries per node; u32::MAX marks a Dirichlet neighbor.
    neighbors: Vec<u32>,
}

const NO_NODE: u32 = u32::MAX;

impl Mesh {
    pub fn build(domain: &GridDomain) -> Result<Mesh> {
        let d = domain.d();
        let m = domain.subdiv() as i64;
        let mut candidates: std::collections::BTreeSet<Vec<i64>> = Default::default();
        for cell in domain.cells() {
            let mut n: Vec<i64> = cell.iter().map(|&a| a * m).collect();
            let lo = n.clone();
            loop {
                candidates.insert(n.clone());
                let mut axis = 0;
                loop {
                    if axis == d {
                        break;
                    }
                    n[axis] += 1;
                    if n[axis] <= (cell[axis] + 1) * m {
                        break;
                    }
                    n[axis] = lo[axis];
                    axis += 1;
                }
                if axis == d {
                    break;
                }
            }
            if candidates.len() > MAX_NODES * 2 {
                return Err(Error::InvalidInput("mesh exceeds the node budget".into()));
            }
        }
        // A node is interior iff every unit cell whose closure contains it
        // belongs to the domain (then the union covers a neighborhood).
        let interior = |n: &[i64]| -> bool {
            let mut choices: Vec<[i64; 2]> = Vec::with_capacity(d);
            let mut counts: Vec<usize> = Vec::with_capacity(d);
            for &ni in n {
                if ni.rem_euclid(m) == 0 {
                    let c = ni.div_euclid(m);
                    choices.push([c - 1, c]);
                    counts.push(2);
                } else {
                    choices.push([ni.div_euclid(m), 0]);
                    counts.push(1);
                }
            }
            let mut pick = vec![0usize; d];
            loop {
                let cell: Vec<i64> = (0..d).map(|i| choices[i][pick[i]]).collect();
                if !domain.contains_cell(&cell) {
                    return false;
                }
                let mut axis = 0;
                loop {
                    if axis == d {
                        return true;
                    }
                    pick[axis] += 1;
                    if pick[axis] < counts[axis] {
                        break;
                    }
                    pick[axis] = 0;
                    axis += 1;
                }
            }
        };
        let nodes: Vec<Vec<i64>> = candidates.into_iter().filter(|n| interior(n)).collect();
        if nodes.is_empty() {
            return Err(Error::InvalidInput(
                "domain has no interior mesh nodes at this subdivision".into(),
            ));
        }
        if nodes.len() > MAX_NODES {
            return Err(Error::InvalidInput("mesh exceeds the node budget".into()));
        }
        let index: HashMap<Vec<i64>, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        let mut neighbors = vec![NO_NODE; nodes.len() * 2 * d];
        for (i, n) in nodes.iter().enumerate() {
            for axis in 0..d {
                for (step, slot) in [-1i64, 1].into_iter().enumerate() {
                    let mut nb = n.clone();
                    nb[axis] += slot;
                    if let Some(&j) = index.get(&nb) {
                        neighbors[(i * d + axis) * 2 + step] = j;
                    }
                }
            }
        }
        Ok(Mesh {
            domain: domain.clone(),
            nodes,
            index,
            neighbors,
        })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn d(&self) -> usize {
        self.domain.d()
    }

    pub fn h(&self) -> f64 {
        self.domain.mesh_h()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_coords(&self, i: usize) -> Vec<f64> {
        let h = self.h();
        self.nodes[i].iter().map(|&n| n as f64 * h).collect()
    }

    pub fn node_index(&self, n: &[i64]) -> Option<usize> {
        self.index.get(n).map(|&i| i as usize)
    }

    /// Evaluate a function at every node, in node order.
    pub fn sample<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> Vec<f64> {
        let h = self.h();
        let mut coords = vec![0.0; self.d()];
        self.nodes
            .iter()
            .map(|n| {
                for (c, &v) in coords.iter_mut().zip(n) {
                    *c = v as f64 * h;
                }
                f(&coords)
            })
            .collect()
    }

    /// h^d Σ u_i: the discrete integral of a node field.
    pub fn mass(&self, field: &[f64]) -> f64 {
        let hd = self.h().powi(self.d() as i32);
        crate::numerics::pairwise_sum(field) * hd
    }
}

/// Anything that acts like a symmetric discrete Schrödinger operator.
pub trait SymOp {
    fn len(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Lower bound used to pick a positive-definite shift.
    fn min_potential(&self) -> f64;
    /// Volume of one mesh cell (h^d), for L² normalization.
    fn volume_element(&self) -> f64;
}

/// Matrix-free H = -½Δ_h + V on mesh nodes: diagonal d/h² + V_i, off-diagonal
/// -1/(2h²) to each stencil neighbor, Dirichlet outside.
pub struct DirichletOperator<'a> {
    mesh: &'a Mesh,
    v: Vec<f64>,
    v_min: f64,
}

pub fn assemble_operator<'a>(mesh: &'a Mesh, potential: &[f64]) -> Result<DirichletOperator<'a>> {
    if potential.len() != mesh.len() {
        return Err(Error::InvalidInput(format!(
            "potential field has {} values for {} nodes",
            potential.len(),
            mesh.len()
        )));
    }
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "potential must be finite at all nodes".into(),
        ));
    }
    let v_min = potential.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DirichletOperator {
        mesh,
        v: potential.to_vec(),
        v_min,
    })
}

impl DirichletOperator<'_> {
    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn potential(&self) -> &[f64] {
        &self.v
    }
}

impl SymOp for DirichletOperator<'_> {
    fn len(&self) -> usize {
        self.mesh.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let d = self.mesh.d();
        let h = self.mesh.h();
        let inv2h2 = 0.5 / (h * h);
        let diag0 = d as f64 / (h * h);
        let nb = &self.mesh.neighbors;
        for i in 0..x.len() {
            let mut acc = (diag0 + self.v[i]) * x[i];
            for k in 0..2 * d {
                let j = nb[i * 2 * d + k];
                if j != NO_NODE {
                    acc -= inv2h2 * x[j as usize];
                }
            }
            y[i] = acc;
        }
    }

    fn min_potential(&self) -> f64 {
        self.v_min
    }

    fn volume_element(&self) -> f64 {
        self.mesh.h().powi(self.mesh.d() as i32)
    }
}

/// 1D Dirichlet operator on a uniform interval grid that need not be
/// lattice-aligned: nodes j·h for j = 1..n inside an interval of length
/// (n+1)·h.
pub struct UniformIntervalOp {
    pub h: f64,
    pub v: Vec<f64>,
}

impl SymOp for UniformIntervalOp {
    fn len(&self) -> usize {
        self.v.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        let inv2h2 = 0.5 / (self.h * self.h);
        for i in 0..n {
            let mut acc = (2.0 * inv2h2 + self.v[i]) * x[i];
            if i > 0 {
                acc -= inv2h2 * x[i - 1];
            }
            if i + 1 < n {
                acc -= inv2h2 * x[i + 1];
            }
            y[i] = acc;
        }
    }

    fn min_potential(&self) -> f64 {
        self.v.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn volume_element(&self) -> f64 {
        self.h
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// CG solve of (a·I + b·A) x = rhs for a symmetric positive-definite
/// combination.
fn cg<T: SymOp>(
    op: &T,
    a: f64,
    b: f64,
    rhs: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = rhs.len();
    let mut ax = vec![0.0; n];
    let apply = |x: &[f64], out: &mut Vec<f64>| {
        op.apply(x, out);
        for i in 0..n {
            out[i] = a * x[i] + b * out[i];
        }
    };
    apply(x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let mut p = r.clone();
    let rhs_norm = dot(rhs, rhs).sqrt().max(f64::MIN_POSITIVE);
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= rel_tol * rhs_norm {
        return Ok(0);
    }
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NonConvergence {
                what: "conjugate gradient (operator not positive definite)",
                achieved: rr.sqrt() / rhs_norm,
                tol: rel_tol,
                iterations: it,
            });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= rel_tol * rhs_norm {
            return Ok(it);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::NonConvergence {
        what: "conjugate gradient",
        achieved: rr.sqrt() / rhs_norm,
        tol: rel_tol,
        iterations: max_iter,
    })
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub lambda: f64,
    /// Nonnegative eigenfunction, normalized so that h^d Σ phi_i² = 1.
    pub phi: Vec<f64>,
    /// Relative residual ‖(H - λ)phi‖ / ‖phi‖.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Smallest eigenpair by inverse power iteration with the fixed shift
/// σ = min(0, min V) - 1 (H - σ is positive definite because -½Δ_h ≥ 0 on a
/// Dirichlet domain). On max_iter exhaustion the best iterate is returned
/// with `converged = false` rather than an error.
pub fn principal_eigenpair<T: SymOp>(op: &T, tol: f64, max_iter: usize) -> Result<SpectralResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(
            "eigensolver tolerance must be positive".into(),
        ));
    }
    let n = op.len();
    if n == 0 {
        return Err(Error::InvalidInput("operator acts on an empty mesh".into()));
    }
    let sigma = op.min_potential().min(0.0) - 1.0;
    let mut phi = vec![1.0 / (n as f64).sqrt(); n];
    let mut hphi = vec![0.0; n];
    let mut lambda = {
        op.apply(&phi, &mut hphi);
        dot(&phi, &hphi)
    };
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let max_inner = (20 * n).max(4000);
    for it in 1..=max_iter {
        iterations = it;
        // Solve (H - σ) w = phi; the solve tightens as the residual shrinks.
        let inner_tol = (residual * 1e-2).clamp(1e-13, 1e-4);
        let mut w = phi.clone();
        cg(op, -sigma, 1.0, &phi, &mut w, inner_tol, max_inner)?;
        let norm = dot(&w, &w).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NonConvergence {
                what: "inverse power iteration degenerated",
                achieved: norm,
                tol,
                iterations: it,
            });
        }
        for (p, w) in phi.iter_mut().zip(&w) {
            *p = w / norm;
        }
        op.apply(&phi, &mut hphi);
        lambda = dot(&phi, &hphi);
        residual = hphi
            .iter()
            .zip(&phi)
            .map(|(h, p)| (h - lambda * p) * (h - lambda * p))
            .sum::<f64>()
            .sqrt();
        if residual <= tol {
            converged = true;
            break;
        }
    }
    // Orient nonnegative; inverse iteration from a positive start keeps the
    // Perron sign structure, so stray negatives are at round-off level.
    if phi.iter().sum::<f64>() < 0.0 {
        for p in phi.iter_mut() {
            *p = -*p;
        }
    }
    for p in phi.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let scale = 1.0 / (dot(&phi, &phi) * op.volume_element()).sqrt();
    for p in phi.iter_mut() {
        *p *= scale;
    }
    Ok(SpectralResult {
        lambda,
        phi,
        residual,
        iterations,
        converged,
    })
}

/// e^{-tH} applied to `initial` by `steps` Crank-Nicolson steps.
pub fn semigroup_evolve<T: SymOp>(
    op: &T,
    initial: &[f64],
    t: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    if !(t > 0.0) || steps == 0 {
        return Err(Error::InvalidInput(
            "semigroup needs t > 0 and steps >= 1".into(),
        ));
    }
    if initial.len() != op.len() {
        return Err(Error::InvalidInput("initial field length mismatch".into()));
    }
    let dt = t / steps as f64;
    let v_min = op.min_potential();
    if v_min < 0.0 && dt >= 2.0 / (-v_min) {
        return Err(Error::InvalidInput(format!(
            "time step {dt} too large for potential minimum {v_min}; I + dt/2·H loses definiteness"
        )));
    }
    let n = op.len();
    let mut u = initial.to_vec();
    let mut rhs = vec![0.0; n];
    let max_inner = (20 * n).max(4000);
    for _ in 0..steps {
        op.apply(&u, &mut rhs);
        for i in 0..n {
            rhs[i] = u[i] - 0.5 * dt * rhs[i];
        }
        // (I + dt/2 H) u_next = (I - dt/2 H) u
        cg(op, 1.0, 0.5 * dt, &rhs, &mut u, 1e-12, max_inner)?;
    }
    Ok(u)
}

#[derive(Debug, Clone)]
pub struct MassCell {
    /// Lower corner of the best cell, in units of 1/r.
    pub cell: Vec<i64>,
    pub mass: f64,
    /// r^{-d-chi} / (2‖phi‖_∞), the mass the best cell must carry.
    pub bound: f64,
    pub meets_bound: bool,
}

/// Finds the side-1/r cell with the largest ∫ phi (trapezoid rule on the
/// mesh) and checks it against the pivotal-cell lower bound.
pub fn eigenfunction_mass_cell(
    result: &SpectralResult,
    mesh: &Mesh,
    r: u32,
    chi: f64,
) -> Result<MassCell> {
    if !result.converged {
        return Err(Error::NonConvergence {
            what: "eigenfunction mass cell needs a converged eigenpair",
            achieved: result.residual,
            tol: 0.0,
            iterations: result.iterations,
        });
    }
    let d = mesh.d();
    let m = mesh.domain().subdiv();
    if r == 0 || !m.is_multiple_of(r) {
        return Err(Error::InvalidInput(format!(
            "cell scale r = {r} must divide the mesh subdivision {m}"
        )));
    }
    if !mesh.domain().is_face_connected() {
        return Err(Error::InvalidInput(
            "mass cell probe expects a lattice-animal domain".into(),
        ));
    }
    let vol = mesh.domain().n_cells() as f64;
    if vol >= (r as f64).powf(chi) {
        return Err(Error::InvalidInput(format!(
            "domain volume {vol} is not below r^chi = {}",
            (r as f64).powf(chi)
        )));
    }
    if result.phi.len() != mesh.len() {
        return Err(Error::InvalidInput("eigenfunction length mismatch".into()));
    }
    let w = (m / r) as i64; // mesh cells per side of one 1/r-cell
    let h = mesh.h();
    let hd = h.powi(d as i32);
    let node_val = |n: &[i64]| -> f64 { mesh.node_index(n).map(|i| result.phi[i]).unwrap_or(0.0) };
    let mut best_cell: Option<Vec<i64>> = None;
    let mut best_mass = f64::NEG_INFINITY;
    let corners = 1usize << d;
    for cell in mesh.domain().cells() {
        let mut sub = vec![0i64; d];
        loop {
            // Trapezoid mass over the subcell at cell*r + sub.
            let base: Vec<i64> = (0..d).map(|i| cell[i] * m as i64 + sub[i] * w).collect();
            let mut mass = 0.0;
            let mut off = vec![0i64; d];
            loop {
                let mut corner_sum = 0.0;
                for c in 0..corners {
                    let node: Vec<i64> = (0..d)
                        .map(|i| base[i] + off[i] + ((c >> i) & 1) as i64)
                        .collect();
                    corner_sum += node_val(&node);
                }
                mass += hd * corner_sum / corners as f64;
                let mut axis = 0;
                loop {
                    if axis == d {
                        break;
                    }
                    off[axis] += 1;
                    if off[axis] < w {
                        break;
                    }
                    off[axis] = 0;
                    axis += 1;
                }
                if axis == d {
                    break;
                }
            }
            if mass > best_mass {
                best_mass = mass;
                best_cell = Some((0..d).map(|i| cell[i] * r as i64 + sub[i]).collect());
            }
            let mut axis = 0;
            loop {
                if axis == d {
                    break;
                }
                sub[axis] += 1;
                if sub[axis] < r as i64 {
                    break;
                }
                sub[axis] = 0;
                axis += 1;
            }
            if axis == d {
                break;
            }
        }
    }
    let sup = result.phi.iter().cloned().fold(0.0, f64::max);
    let bound = (r as f64).powf(-(d as f64) - chi) / (2.0 * sup);
    Ok(MassCell {
        cell: best_cell.expect("domain has cells"),
        mass: best_mass,
        bound,
        meets_bound: best_mass >= bound,
    })
}

/// Capped principal eigenvalues of the scaled operator -½Δ + r²V(r·) on
/// the rarefied region and on the full lattice box for side t/r.
#[derive(Debug, Clone)]
pub struct SpectralGap {
    /// min(lambda_rarefied, cap) - min(lambda_box, cap), nonnegative.
    pub gap: f64,
    pub lambda_box: f64,
    /// None when the rarefied region is empty (an infinitely high ground
    /// state, entering the gap at the cap).
    pub lambda_rarefied: Option<f64>,
    pub rarefied_empty: bool,
    pub cap: f64,
}

fn capped_ground_state(
    domain: &GridDomain,
    pot: &crate::model::LatticePotential,
    r: f64,
) -> Result<SpectralResult> {
    let mesh = Mesh::build(domain)?;
    let field = mesh.sample(|x| pot.scaled_value(r, x));
    let op = assemble_operator(&mesh, &field)?;
    principal_eigenpair(&op, DEFAULT_EIG_TOL, 40_000)
}

/// How much higher the ground state sits on the rarefied region than on
/// the whole box, both capped. Domain monotonicity makes this nonnegative;
/// an empty rarefied region contributes the cap itself.
pub fn spectral_control_gap(
    params: &crate::model::ModelParams,
    config: &crate::model::DisplacementConfig,
    r: f64,
    t: f64,
    meo: &crate::coarse::MeoParams,
    subdiv: u32,
) -> Result<SpectralGap> {
    let rs = crate::coarse::rarefied_set(config, r, t, meo)?;
    let (lo, hi) = rs.cell_range;
    let cells: std::collections::BTreeSet<Vec<i64>> = crate::model::box_points(params.d, lo, hi)
        .into_iter()
        .collect();
    let box_domain = GridDomain::new(params.d, cells, subdiv)?;
    let u = crate::model::SingleSitePotential::new(*params);
    let pot =
        crate::model::LatticePotential::new(u, config, crate::model::default_trunc_radius(params))?;
    let cap = meo.cap;
    let lambda_box = capped_ground_state(&box_domain, &pot, r)?.lambda;
    let lambda_rarefied = match rs.to_domain(subdiv) {
        Some(region) => Some(capped_ground_state(&region, &pot, r)?.lambda),
        None => None,
    };
    let high = lambda_rarefied.map_or(cap, |l| l.min(cap));
    Ok(SpectralGap {
        gap: high - lambda_box.min(cap),
        lambda_box,
        lambda_rarefied,
        rarefied_empty: rs.is_empty(),
        cap,
    })
}
