//! Dyadic coarse graining of displaced lattice clouds: density
//! classification of unit cubes, rarefied regions, lattice animals, and a
//! toy-scale enumeration of animal/configuration pairs.
//!
//! All box membership tests run in integer arithmetic, so boundary points
//! are classified exactly; the radius must be a whole number for that to
//! work and every entry point checks it.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::asymptotics::mu_exponent;
use crate::domain::{centered_cell_range, GridDomain};
use crate::error::{Error, Result};
use crate::model::{box_points, config_hull, DisplacementConfig, DisplacementLaw, ModelParams};
use crate::rng::stream;

/// Hard cap on enumerated animal/configuration pairs.
pub const ENUM_WORK_BOUND: u128 = 10_000_000;

const MAX_LEVEL: u32 = 40;

/// The unique integer n with 2^{-n-1} < r^{-beta} <= 2^{-n}, i.e. the
/// dyadic level whose box side best matches the scale r^{-beta}.
///
/// Exact powers of two are snapped before flooring so that e.g.
/// (beta, r) = (1, 8) lands on n = 3 rather than drifting below it.
pub fn n_beta(beta: f64, r: f64) -> Result<u32> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput("n_beta needs beta > 0".into()));
    }
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::InvalidInput("n_beta needs r > 1".into()));
    }
    let x = beta * r.log2();
    let n = if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x.floor()
    };
    if n > MAX_LEVEL as f64 {
        return Err(Error::InvalidInput(format!(
            "dyadic level {n} exceeds the exact-arithmetic range"
        )));
    }
    Ok(n.max(0.0) as u32)
}

/// Coarse-graining parameters: dyadic exponents chi (volume threshold),
/// eta and gamma (refinement scales), plus the halo width and the
/// eigenvalue cap used by the spectral comparison built on top.
#[derive(Debug, Clone, Copy)]
pub struct MeoParams {
    pub chi: f64,
    pub eta: f64,
    pub gamma: f64,
    pub halo_width: f64,
    pub cap: f64,
}

impl MeoParams {
    /// Stand-in for one-dimensional runs, where the density test ignores
    /// every exponent and only the halo width and cap are read.
    pub fn one_dimensional() -> Self {
        MeoParams {
            chi: 1.0,
            eta: 0.5,
            gamma: 1.0,
            halo_width: 4.0,
            cap: default_cap(1),
        }
    }
}

fn default_cap(d: usize) -> f64 {
    10.0 * (d as f64) * std::f64::consts::PI.powi(2) / 2.0
}

/// Picks (chi, eta, gamma) for d >= 2 and alpha >= d + 2: chi is the
/// midpoint of the admissible interval ((mu - 2/d)theta, mu*theta) and eta
/// the largest dyadic 2^{-k} keeping the slack inequality
/// chi > (mu - 2/d)theta + 2 eta^2 + (d - 2 + 2 theta/d) eta strict.
pub fn choose_meo_params(params: &ModelParams) -> Result<MeoParams> {
    let (d, alpha, theta) = (params.d, params.alpha, params.theta);
    if d < 2 || alpha < d as f64 + 2.0 - 1e-12 {
        return Err(Error::RegimeNotCovered { d, alpha });
    }
    let df = d as f64;
    let mu = mu_exponent(d, alpha);
    let lo = (mu - 2.0 / df) * theta;
    let hi = mu * theta;
    let chi = 0.5 * (lo + hi);
    let slack = |eta: f64| lo + 2.0 * eta * eta + (df - 2.0 + 2.0 * theta / df) * eta;
    let mut eta = None;
    for k in 1..=MAX_LEVEL {
        let cand = 0.5f64.powi(k as i32);
        if chi > slack(cand) {
            eta = Some(cand);
            break;
        }
    }
    let eta = eta.ok_or(Error::InvalidInput(
        "no dyadic eta satisfies the slack inequality; theta/d is degenerate".into(),
    ))?;
    let gamma = (df - 2.0) / df + 2.0 * eta / df;
    debug_assert!(lo < chi && chi < hi);
    debug_assert!(gamma > 0.0 && gamma < 1.0);
    Ok(MeoParams {
        chi,
        eta,
        gamma,
        halo_width: 4.0,
        cap: default_cap(d),
    })
}

/// Outer and inner refinement levels of the density test at radius r.
/// An outer level of 0 collapses the majority sweep to the cube itself.
pub fn density_levels(meo: &MeoParams, r: f64) -> Result<(u32, u32)> {
    let outer = n_beta(meo.eta * meo.gamma, r)?;
    let inner = n_beta(meo.gamma, r)?;
    Ok((outer, inner.max(outer)))
}

fn integer_radius(r: f64) -> Result<i64> {
    if !(r >= 2.0) || r.fract() != 0.0 || r > 1e9 {
        return Err(Error::InvalidInput(format!(
            "radius {r} must be a whole number >= 2 for exact box tests"
        )));
    }
    Ok(r as i64)
}

/// Sites a single-cube classification is allowed to read: the integer
/// points of r·(q + [-1,2]^d).
fn site_window(r: i64, q: &[i64]) -> (Vec<i64>, Vec<i64>) {
    let lo = q.iter().map(|&c| r * (c - 1)).collect();
    let hi = q.iter().map(|&c| r * (c + 2)).collect();
    (lo, hi)
}

fn window_covered(config: &DisplacementConfig, lo: &[i64], hi: &[i64]) -> Result<()> {
    let (hull_lo, hull_hi) =
        config_hull(config).ok_or(Error::Coverage("empty configuration".into()))?;
    let mut volume: u128 = 1;
    for a in 0..hull_lo.len() {
        if hull_lo[a] > lo[a] || hull_hi[a] < hi[a] {
            return Err(Error::Coverage(format!(
                "sites {:?}..{:?} not covered by the configuration hull",
                lo, hi
            )));
        }
        volume = volume.saturating_mul((hull_hi[a] - hull_lo[a] + 1) as u128);
    }
    if volume != config.len() as u128 {
        return Err(Error::Coverage(
            "configuration has holes inside its hull".into(),
        ));
    }
    Ok(())
}

fn in_window(site: &[i64], lo: &[i64], hi: &[i64]) -> bool {
    site.iter()
        .enumerate()
        .all(|(a, &s)| lo[a] <= s && s <= hi[a])
}

/// Density verdict for d >= 2. `pts` holds integer numerators m = site + xi;
/// the point m/r contributes when it falls in the closed cube q + [0,1]^d.
fn classify_points(
    d: usize,
    r: i64,
    q: &[i64],
    pts: &[Vec<i64>],
    outer: u32,
    inner: u32,
) -> Result<bool> {
    let side = 1i64 << inner;
    let mut hit: HashSet<Vec<i64>> = HashSet::new();
    'pt: for m in pts {
        let mut idx = Vec::with_capacity(d);
        for a in 0..d {
            let w = m[a] - r * q[a];
            if w < 0 || w > r {
                continue 'pt;
            }
            let v = w << inner;
            let j = v / r;
            if j >= side {
                continue 'pt;
            }
            if 2 * (v - j * r) > r {
                continue 'pt;
            }
            idx.push(j);
        }
        hit.insert(idx);
    }
    if (d as u32) * outer > 32 {
        return Err(Error::WorkBound {
            what: "density majority sweep",
            required: 1u128 << ((d as u32) * outer).min(127),
            bound: 1u128 << 32,
        });
    }
    let span = side >> outer;
    let total = (span as u128).pow(d as u32);
    let need = total.div_ceil(2);
    let mut per_outer: HashMap<Vec<i64>, u128> = HashMap::new();
    for idx in &hit {
        let key: Vec<i64> = idx.iter().map(|&j| j / span).collect();
        *per_outer.entry(key).or_insert(0) += 1;
    }
    let outer_side = 1i64 << outer;
    let mut cur = vec![0i64; d];
    loop {
        if per_outer.get(&cur).copied().unwrap_or(0) < need {
            return Ok(false);
        }
        let mut a = 0;
        loop {
            if a == d {
                return Ok(true);
            }
            cur[a] += 1;
            if cur[a] < outer_side {
                break;
            }
            cur[a] = 0;
            a += 1;
        }
    }
}

/// One-dimensional verdict: every closed dyadic subbox of the unit
/// interval at the given level must contain a point.
fn classify_points_1d(r: i64, q: i64, pts: &[i64], level: u32) -> bool {
    let side = 1i64 << level;
    let mut covered = vec![false; side as usize];
    for &m in pts {
        let w = m - r * q;
        if w < 0 || w > r {
            continue;
        }
        let v = w << level;
        let j = v / r;
        if j < side {
            covered[j as usize] = true;
        }
        if v == j * r && j >= 1 {
            covered[(j - 1) as usize] = true;
        }
    }
    covered.into_iter().all(|c| c)
}

fn classify_with(
    d: usize,
    r: i64,
    q: &[i64],
    pts: &[Vec<i64>],
    meo: &MeoParams,
    rf: f64,
) -> Result<bool> {
    if d == 1 {
        let flat: Vec<i64> = pts.iter().map(|m| m[0]).collect();
        Ok(classify_points_1d(r, q[0], &flat, n_beta(1.0, rf)?))
    } else {
        let (outer, inner) = density_levels(meo, rf)?;
        classify_points(d, r, q, pts, outer, inner)
    }
}

/// Whether the unit cube at base q is a density box for the scaled cloud
/// {(site + xi_site)/r}. Reads the configuration only through the sites in
/// r·(q + [-1,2]^d) and errors if that window is not fully covered.
pub fn classify_density(
    config: &DisplacementConfig,
    r: f64,
    q: &[i64],
    meo: &MeoParams,
) -> Result<bool> {
    let d = config.d();
    if q.len() != d {
        return Err(Error::InvalidInput(
            "cube base has the wrong dimension".into(),
        ));
    }
    let ri = integer_radius(r)?;
    let (lo, hi) = site_window(ri, q);
    window_covered(config, &lo, &hi)?;
    let pts: Vec<Vec<i64>> = config
        .sites()
        .filter(|(site, _)| in_window(site, &lo, &hi))
        .map(|(site, xi)| (0..d).map(|a| site[a] + xi[a]).collect())
        .collect();
    classify_with(d, ri, q, &pts, meo, r)
}

/// Displaced point paired with the site it came from.
type Placed = (Vec<i64>, Vec<i64>);

/// Scaled cloud bucketed by the floor cube of each point, kept together
/// with the originating site so the per-cube window filter stays exact.
struct BucketedCloud {
    d: usize,
    buckets: HashMap<Vec<i64>, Vec<Placed>>,
}

impl BucketedCloud {
    fn build(config: &DisplacementConfig, r: i64) -> Self {
        let d = config.d();
        let mut buckets: HashMap<Vec<i64>, Vec<Placed>> = HashMap::new();
        for (site, xi) in config.sites() {
            let m: Vec<i64> = (0..d).map(|a| site[a] + xi[a]).collect();
            let cube: Vec<i64> = m.iter().map(|&c| c.div_euclid(r)).collect();
            buckets.entry(cube).or_default().push((m, site.clone()));
        }
        BucketedCloud { d, buckets }
    }

    /// Candidate numerators for the closed cube at q: points bucketed in q
    /// or on its upper faces, restricted to sites in the cube's window.
    fn candidates(&self, r: i64, q: &[i64]) -> Vec<Vec<i64>> {
        let (lo, hi) = site_window(r, q);
        let mut out = Vec::new();
        let mut delta = vec![0i64; self.d];
        loop {
            let key: Vec<i64> = (0..self.d).map(|a| q[a] + delta[a]).collect();
            if let Some(list) = self.buckets.get(&key) {
                for (m, site) in list {
                    if in_window(site, &lo, &hi) {
                        out.push(m.clone());
                    }
                }
            }
            let mut a = 0;
            loop {
                if a == self.d {
                    return out;
                }
                delta[a] += 1;
                if delta[a] <= 1 {
                    break;
                }
                delta[a] = 0;
                a += 1;
            }
        }
    }
}

/// Union of non-density unit cubes inside the centered lattice box with
/// round(t/r) cells per axis. May be empty.
#[derive(Debug, Clone)]
pub struct RarefiedSet {
    pub d: usize,
    pub cells: BTreeSet<Vec<i64>>,
    pub cell_range: (i64, i64),
    /// True when the outer refinement level collapsed to the cube itself.
    pub levels_collapsed: bool,
}

impl RarefiedSet {
    pub fn volume(&self) -> f64 {
        self.cells.len() as f64
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// The rarefied region as a mesh domain, or None when it is empty.
    pub fn to_domain(&self, subdiv: u32) -> Option<GridDomain> {
        if self.cells.is_empty() {
            None
        } else {
            Some(GridDomain::new(self.d, self.cells.clone(), subdiv).expect("nonempty cells"))
        }
    }
}

/// Classifies every unit cube of the lattice box for side t/r and returns
/// the non-density ones. The configuration must cover the site window of
/// every cube in the box.
pub fn rarefied_set(
    config: &DisplacementConfig,
    r: f64,
    t: f64,
    meo: &MeoParams,
) -> Result<RarefiedSet> {
    let d = config.d();
    let ri = integer_radius(r)?;
    let (lo, hi) = centered_cell_range(t / r);
    if hi < lo {
        return Err(Error::InvalidInput(format!(
            "box for side {} holds no unit cell",
            t / r
        )));
    }
    let win_lo = vec![ri * (lo - 1); d];
    let win_hi = vec![ri * (hi + 2); d];
    window_covered(config, &win_lo, &win_hi)?;
    let cloud = BucketedCloud::build(config, ri);
    let levels_collapsed = if d >= 2 {
        density_levels(meo, r)?.0 == 0
    } else {
        false
    };
    let mut cells = BTreeSet::new();
    for q in box_points(d, lo, hi) {
        let pts = cloud.candidates(ri, &q);
        if !classify_with(d, ri, &q, &pts, meo, r)? {
            cells.insert(q);
        }
    }
    Ok(RarefiedSet {
        d,
        cells,
        cell_range: (lo, hi),
        levels_collapsed,
    })
}

/// Face-connected components of a cell set, in increasing order of their
/// smallest cell. Empty input gives an empty list.
pub fn lattice_animals(d: usize, cells: &BTreeSet<Vec<i64>>, subdiv: u32) -> Vec<GridDomain> {
    let mut unvisited: BTreeSet<Vec<i64>> = cells.clone();
    let mut out = Vec::new();
    while let Some(seed) = unvisited.iter().next().cloned() {
        unvisited.remove(&seed);
        let mut comp = BTreeSet::new();
        let mut frontier = vec![seed];
        while let Some(cell) = frontier.pop() {
            for a in 0..d {
                for step in [-1i64, 1] {
                    let mut nb = cell.clone();
                    nb[a] += step;
                    if unvisited.remove(&nb) {
                        frontier.push(nb);
                    }
                }
            }
            comp.insert(cell);
        }
        out.push(GridDomain::new(d, comp, subdiv).expect("component is nonempty"));
    }
    out
}

/// Exact squared distance from an integer point to the union of scaled
/// unit cells r·(c + [0,1]^d), minimized over the cells.
fn dist_sq_to_scaled_cells(site: &[i64], cells: &BTreeSet<Vec<i64>>, r: i64) -> i64 {
    let mut best = i64::MAX;
    for c in cells {
        let mut s = 0i64;
        for (a, &y) in site.iter().enumerate() {
            let g = (r * c[a] - y).max(y - r * (c[a] + 1)).max(0);
            s += g * g;
        }
        best = best.min(s);
    }
    best
}

/// All animal/configuration pairs relevant at toy scale: every lattice
/// animal of at most `size_cap` cells in the box for side t/r, paired with
/// every displacement assignment of norm at most `disp_cap` on the sites
/// within distance r·halo_width of the scaled animal.
#[derive(Debug)]
pub struct RelevantEnumeration {
    d: usize,
    pub animals: Vec<GridDomain>,
    pub displacements: Vec<Vec<i64>>,
    halo_sites: Vec<Vec<Vec<i64>>>,
    /// Exact number of pairs the iterator yields.
    pub count: u128,
}

impl RelevantEnumeration {
    pub fn halo_sites(&self, animal: usize) -> &[Vec<i64>] {
        &self.halo_sites[animal]
    }

    pub fn iter(&self) -> RelevantIter<'_> {
        RelevantIter {
            en: self,
            animal: 0,
            digits: Vec::new(),
            exhausted: false,
        }
    }
}

/// Streams (animal index, displacement configuration) pairs in
/// lexicographic order without materializing them.
pub struct RelevantIter<'a> {
    en: &'a RelevantEnumeration,
    animal: usize,
    digits: Vec<usize>,
    exhausted: bool,
}

impl Iterator for RelevantIter<'_> {
    type Item = (usize, DisplacementConfig);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.animal >= self.en.animals.len() {
                return None;
            }
            let sites = &self.en.halo_sites[self.animal];
            if self.exhausted {
                self.animal += 1;
                self.digits.clear();
                self.exhausted = false;
                continue;
            }
            if self.digits.is_empty() {
                self.digits = vec![0; sites.len()];
            }
            let mut config = DisplacementConfig::new(self.en.d);
            for (site, &digit) in sites.iter().zip(&self.digits) {
                config
                    .insert(site.clone(), self.en.displacements[digit].clone())
                    .expect("dimensions agree");
            }
            let item = (self.animal, config);
            let base = self.en.displacements.len();
            let mut a = 0;
            loop {
                if a == self.digits.len() {
                    self.exhausted = true;
                    break;
                }
                self.digits[a] += 1;
                if self.digits[a] < base {
                    break;
                }
                self.digits[a] = 0;
                a += 1;
            }
            return Some(item);
        }
    }
}

pub fn enumerate_relevant(
    d: usize,
    r: f64,
    t: f64,
    size_cap: usize,
    disp_cap: f64,
    halo_width: f64,
    subdiv: u32,
) -> Result<RelevantEnumeration> {
    if size_cap == 0 || size_cap > 4 {
        return Err(Error::InvalidInput(
            "animal size cap must be in 1..=4".into(),
        ));
    }
    if !(0.0..=2.0).contains(&disp_cap) {
        return Err(Error::InvalidInput(
            "displacement cap must be in [0, 2]".into(),
        ));
    }
    if !(halo_width > 0.0) {
        return Err(Error::InvalidInput("halo width must be positive".into()));
    }
    let ri = integer_radius(r)?;
    let (lo, hi) = centered_cell_range(t / r);
    if hi < lo {
        return Err(Error::InvalidInput(format!(
            "box for side {} holds no unit cell",
            t / r
        )));
    }
    let box_cells: BTreeSet<Vec<i64>> = box_points(d, lo, hi).into_iter().collect();

    // Connected subsets by breadth-first growth, deduplicated on the
    // canonical sorted cell list.
    let mut seen: BTreeSet<Vec<Vec<i64>>> = BTreeSet::new();
    let mut level: Vec<Vec<Vec<i64>>> = Vec::new();
    for c in &box_cells {
        let single = vec![c.clone()];
        seen.insert(single.clone());
        level.push(single);
    }
    for _ in 2..=size_cap {
        let mut next = Vec::new();
        for subset in &level {
            for cell in subset {
                for a in 0..d {
                    for step in [-1i64, 1] {
                        let mut nb = cell.clone();
                        nb[a] += step;
                        if !box_cells.contains(&nb) || subset.contains(&nb) {
                            continue;
                        }
                        let mut grown = subset.clone();
                        grown.push(nb);
                        grown.sort();
                        if seen.insert(grown.clone()) {
                            next.push(grown);
                        }
                    }
                }
            }
        }
        level = next;
    }

    let cap_sq = disp_cap * disp_cap + 1e-9;
    let reach = disp_cap.floor() as i64;
    let displacements: Vec<Vec<i64>> = box_points(d, -reach, reach)
        .into_iter()
        .filter(|p| (p.iter().map(|&c| (c * c) as f64).sum::<f64>()) <= cap_sq)
        .collect();

    let halo = (ri as f64 * halo_width).ceil() as i64;
    let halo_sq_bound = (r * halo_width) * (r * halo_width) + 1e-9;
    let mut animals = Vec::new();
    let mut halo_sites = Vec::new();
    let mut count: u128 = 0;
    for subset in &seen {
        let cells: BTreeSet<Vec<i64>> = subset.iter().cloned().collect();
        let mut site_lo = vec![i64::MAX; d];
        let mut site_hi = vec![i64::MIN; d];
        for c in &cells {
            for a in 0..d {
                site_lo[a] = site_lo[a].min(ri * c[a] - halo);
                site_hi[a] = site_hi[a].max(ri * (c[a] + 1) + halo);
            }
        }
        let mut sites = Vec::new();
        let mut cur = site_lo.clone();
        loop {
            if (dist_sq_to_scaled_cells(&cur, &cells, ri) as f64) <= halo_sq_bound {
                sites.push(cur.clone());
            }
            let mut a = 0;
            loop {
                if a == d {
                    break;
                }
                cur[a] += 1;
                if cur[a] <= site_hi[a] {
                    break;
                }
                cur[a] = site_lo[a];
                a += 1;
            }
            if a == d {
                break;
            }
        }
        let choices = (displacements.len() as u128)
            .checked_pow(sites.len() as u32)
            .unwrap_or(u128::MAX);
        count = count.saturating_add(choices);
        animals.push(GridDomain::new(d, cells, subdiv).expect("nonempty subset"));
        halo_sites.push(sites);
    }
    if count > ENUM_WORK_BOUND {
        return Err(Error::WorkBound {
            what: "relevant pair enumeration",
            required: count,
            bound: ENUM_WORK_BOUND,
        });
    }
    Ok(RelevantEnumeration {
        d,
        animals,
        displacements,
        halo_sites,
        count,
    })
}

/// Monte Carlo estimate of how often the rarefied volume reaches the
/// threshold r^chi, with a 95% Wilson interval and the cheapest
/// displacement cost observed among the hits (normalized by the predicted
/// r power).
#[derive(Debug, Clone)]
pub struct VolumeTrial {
    pub n: usize,
    pub hits: usize,
    pub empirical: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub threshold: f64,
    pub bound_exponent: f64,
    pub min_cost_ratio: Option<f64>,
    pub levels_collapsed: bool,
}

pub fn volume_bound_trial(
    params: &ModelParams,
    r: f64,
    t: f64,
    meo: &MeoParams,
    n_samples: usize,
    seed: u64,
) -> Result<VolumeTrial> {
    if r > 32.0 || t > 256.0 || n_samples < 100 {
        return Err(Error::InvalidInput(
            "volume trials are capped at r <= 32, t <= 256 and need >= 100 samples".into(),
        ));
    }
    let d = params.d;
    let ri = integer_radius(r)?;
    let (lo, hi) = centered_cell_range(t / r);
    if hi < lo {
        return Err(Error::InvalidInput(format!(
            "box for side {} holds no unit cell",
            t / r
        )));
    }
    let sites = box_points(d, ri * (lo - 1), ri * (hi + 2));
    let law = DisplacementLaw::build(d, params.theta)?;
    let threshold = r.powf(meo.chi);
    let bound_exponent =
        (d as f64) * (1.0 - meo.eta * meo.gamma) + (1.0 - meo.gamma) * params.theta + meo.chi;
    let mut hits = 0usize;
    let mut min_ratio: Option<f64> = None;
    let mut collapsed = false;
    for i in 0..n_samples {
        let mut rng = stream(seed, &[0x7a, i as u64]);
        let config = law.sample_config(sites.iter().cloned(), &mut rng);
        let rs = rarefied_set(&config, r, t, meo)?;
        collapsed = rs.levels_collapsed;
        if rs.volume() >= threshold {
            hits += 1;
            let cost: f64 = config
                .sites()
                .map(|(_, xi)| {
                    let norm = (xi.iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt();
                    norm.powf(params.theta)
                })
                .sum();
            let ratio = cost / r.powf(bound_exponent);
            min_ratio = Some(min_ratio.map_or(ratio, |m: f64| m.min(ratio)));
        }
    }
    let nf = n_samples as f64;
    let p = hits as f64 / nf;
    let z = 1.96f64;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    Ok(VolumeTrial {
        n: n_samples,
        hits,
        empirical: p,
        wilson_low: (center - half).max(0.0),
        wilson_high: (center + half).min(1.0),
        threshold,
        bound_exponent,
        min_cost_ratio: min_ratio,
        levels_collapsed: collapsed,
    })
}
