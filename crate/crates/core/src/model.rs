//! Model parameters, the single-site potential family
//! `u(x) = C0 · max(|x|, r0)^{-alpha}`, the integer displacement law
//! `P(xi = p) ∝ exp(-|p|^theta)`, and evaluation of the displaced-lattice
//! potential `V(x) = Σ_q u(x - q - xi_q)` with certified truncation bounds.

use crate::domain::GridDomain;
use crate::numerics::lattice_norm;
use crate::rng::stream;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub d: usize,
    pub alpha: f64,
    pub theta: f64,
    pub c0: f64,
    pub core_radius: f64,
}

impl ModelParams {
    pub fn new(d: usize, alpha: f64, theta: f64, c0: f64, core_radius: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        for (name, v) in [
            ("alpha", alpha),
            ("theta", theta),
            ("c0", c0),
            ("core_radius", core_radius),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be finite")));
            }
        }
        if alpha <= d as f64 {
            return Err(Error::InvalidInput(format!(
                "alpha = {alpha} must exceed the dimension {d} for a summable tail"
            )));
        }
        if theta <= 0.0 {
            return Err(Error::InvalidInput("theta must be positive".into()));
        }
        if c0 == 0.0 {
            return Err(Error::InvalidInput("c0 must be nonzero".into()));
        }
        if core_radius <= 0.0 {
            return Err(Error::InvalidInput("core_radius must be positive".into()));
        }
        Ok(ModelParams {
            d,
            alpha,
            theta,
            c0,
            core_radius,
        })
    }

    /// Canonical profile cutoff r0 = 1.
    pub fn with_unit_core(d: usize, alpha: f64, theta: f64, c0: f64) -> Result<Self> {
        Self::new(d, alpha, theta, c0, 1.0)
    }
}

/// Radial profile `u(x) = C0 · max(|x|, r0)^{-alpha}`: bounded at the core,
/// exact power tail beyond it, sign fixed by C0.
#[derive(Debug, Clone, Copy)]
pub struct SingleSitePotential {
    pub params: ModelParams,
}

/// `base^{-alpha}`, dispatching integer alpha to `powi` (severalfold cheaper
/// than `powf`; this sits in the inner loop of every path simulation).
#[inline]
fn inv_power(base: f64, alpha: f64) -> f64 {
    let n = alpha as i32;
    if n as f64 == alpha && (1..=32).contains(&n) {
        base.powi(-n)
    } else {
        base.powf(-alpha)
    }
}

impl SingleSitePotential {
    pub fn new(params: ModelParams) -> Self {
        SingleSitePotential { params }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let p = &self.params;
        let r = crate::numerics::norm(y).max(p.core_radius);
        p.c0 * inv_power(r, p.alpha)
    }

    pub fn value_at_distance(&self, dist: f64) -> f64 {
        let p = &self.params;
        p.c0 * inv_power(dist.max(p.core_radius), p.alpha)
    }

    /// |u| is bounded by this everywhere.
    pub fn sup_abs(&self) -> f64 {
        let p = &self.params;
        p.c0.abs() * inv_power(p.core_radius, p.alpha)
    }
}

/// Displacement field: one integer vector per site of a finite index set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisplacementConfig {
    d: usize,
    map: BTreeMap<Vec<i64>, Vec<i64>>,
}

impl DisplacementConfig {
    pub fn new(d: usize) -> Self {
        DisplacementConfig {
            d,
            map: BTreeMap::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn insert(&mut self, site: Vec<i64>, xi: Vec<i64>) -> Result<()> {
        if site.len() != self.d || xi.len() != self.d {
            return Err(Error::InvalidInput(
                "site/displacement dimension mismatch".into(),
            ));
        }
        self.map.insert(site, xi);
        Ok(())
    }

    pub fn get(&self, site: &[i64]) -> Option<&[i64]> {
        self.map.get(site).map(|v| v.as_slice())
    }

    pub fn sites(&self) -> impl Iterator<Item = (&Vec<i64>, &Vec<i64>)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Zero displacement at every site of an inclusive box `[lo, hi]^d`.
    pub fn zeros_on_box(d: usize, lo: i64, hi: i64) -> Result<Self> {
        let mut cfg = DisplacementConfig::new(d);
        for q in box_points(d, lo, hi) {
            cfg.insert(q, vec![0; d])?;
        }
        Ok(cfg)
    }

    /// One line per site: "q_1 … q_d : xi_1 … xi_d".
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (q, xi) in &self.map {
            let qs: Vec<String> = q.iter().map(|v| v.to_string()).collect();
            let xs: Vec<String> = xi.iter().map(|v| v.to_string()).collect();
            out.push_str(&qs.join(" "));
            out.push_str(" : ");
            out.push_str(&xs.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_lines(text: &str) -> Result<Self> {
        let mut cfg: Option<DisplacementConfig> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (left, right) = line.split_once(':').ok_or_else(|| {
                Error::InvalidInput(format!("line {}: missing ':' separator", ln + 1))
            })?;
            let parse = |side: &str| -> Result<Vec<i64>> {
                side.split_whitespace()
                    .map(|tok| {
                        tok.parse::<i64>().map_err(|_| {
                            Error::InvalidInput(format!("line {}: bad integer '{tok}'", ln + 1))
                        })
                    })
                    .collect()
            };
            let q = parse(left)?;
            let xi = parse(right)?;
            if q.is_empty() || q.len() != xi.len() {
                return Err(Error::InvalidInput(format!(
                    "line {}: site and displacement must have equal positive length",
                    ln + 1
                )));
            }
            let cfg = cfg.get_or_insert_with(|| DisplacementConfig::new(q.len()));
            cfg.insert(q, xi)?;
        }
        cfg.ok_or_else(|| Error::InvalidInput("no sites in configuration text".into()))
    }
}

/// All lattice points of the inclusive box `[lo, hi]^d`, lexicographic.
pub fn box_points(d: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    assert!(hi >= lo);
    let mut out = Vec::new();
    let mut cur = vec![lo; d];
    loop {
        out.push(cur.clone());
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            cur[axis] += 1;
            if cur[axis] <= hi {
                break;
            }
            cur[axis] = lo;
        }
    }
}

fn for_each_shell_point(d: usize, k: i64, f: &mut impl FnMut(&[i64])) {
    fn fill(p: &mut Vec<i64>, axis: usize, face: usize, k: i64, f: &mut impl FnMut(&[i64])) {
        if axis == p.len() {
            f(p);
            return;
        }
        if axis == face {
            fill(p, axis + 1, face, k, f);
            return;
        }
        // Axes before the face axis stay strictly inside; later axes are free.
        let bound = if axis < face { k - 1 } else { k };
        for v in -bound..=bound {
            p[axis] = v;
            fill(p, axis + 1, face, k, f);
        }
    }
    let mut p = vec![0i64; d];
    if k == 0 {
        f(&p);
        return;
    }
    for face in 0..d {
        for sgn in [-k, k] {
            p[face] = sgn;
            fill(&mut p, 0, face, k, f);
        }
    }
}

const MAX_SHELL_POINTS: u64 = 50_000_000;

/// Z(d, theta) = Σ_{p ∈ ℤ^d} exp(-|p|^theta), summed over sup-norm shells
/// with a certified bound <= tol on the dropped tail.
pub fn normalizing_constant(d: usize, theta: f64, tol: f64) -> Result<f64> {
    if d == 0 || !(theta > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidInput(
            "normalizing constant needs d >= 1, theta > 0, tol > 0".into(),
        ));
    }
    let df = d as f64;
    let c_d = 2.0 * df * 3f64.powi(d as i32 - 1);
    // Dropped shells k > K contribute at most
    //   c_d ∫_K^∞ x^{d-1} e^{-x^theta} dx  <=  (2 c_d / theta) K^{d-theta} e^{-K^theta},
    // valid once x^{d-1}e^{-x^theta} is decreasing (K^theta >= (d-1)/theta)
    // and K^theta >= 2·max(0, d/theta - 1).
    let threshold = ((df - 1.0) / theta).max(2.0 * (df / theta - 1.0).max(0.0));
    let mut z = 0.0;
    let mut points: u64 = 0;
    let mut k = 0i64;
    loop {
        let mut shell = 0.0;
        for_each_shell_point(d, k, &mut |p| {
            shell += (-lattice_norm(p).powf(theta)).exp();
            points += 1;
        });
        z += shell;
        if k >= 1 {
            let kf = k as f64;
            let kt = kf.powf(theta);
            if kt >= threshold {
                let tail = 2.0 * c_d / theta * kf.powf(df - theta) * (-kt).exp();
                if tail <= tol {
                    return Ok(z);
                }
            }
        }
        if points > MAX_SHELL_POINTS {
            return Err(Error::ToleranceUnreachable {
                what: "displacement normalizing constant",
            });
        }
        k += 1;
    }
}

/// log P(xi = config) = -Σ_q |xi_q|^theta - N·log Z.
pub fn displacement_log_weight(config: &DisplacementConfig, theta: f64, log_z: f64) -> f64 {
    let cost: f64 = config
        .sites()
        .map(|(_, xi)| lattice_norm(xi).powf(theta))
        .sum();
    -cost - config.len() as f64 * log_z
}

/// Tabulated displacement law: atoms in increasing Euclidean norm with
/// cumulative masses, covering all but <= 1e-12 of the distribution (the
/// residual is folded into the last atom).
#[derive(Debug, Clone)]
pub struct DisplacementLaw {
    pub d: usize,
    pub theta: f64,
    pub z: f64,
    atoms: Vec<(Vec<i64>, f64)>,
}

const ATOM_COVERAGE: f64 = 1.0 - 1e-12;
const MAX_ATOMS: usize = 4_000_000;

impl DisplacementLaw {
    pub fn build(d: usize, theta: f64) -> Result<Self> {
        let z = normalizing_constant(d, theta, 1e-13)?;
        let mut atoms: Vec<(Vec<i64>, f64)> = Vec::new();
        let mut raw = 0.0;
        let mut k = 0i64;
        while raw < ATOM_COVERAGE * z {
            for_each_shell_point(d, k, &mut |p| {
                let w = (-lattice_norm(p).powf(theta)).exp();
                raw += w;
                atoms.push((p.to_vec(), w));
            });
            if atoms.len() > MAX_ATOMS {
                return Err(Error::ToleranceUnreachable {
                    what: "displacement atom table",
                });
            }
            k += 1;
        }
        atoms.sort_by(|(p, _), (q, _)| {
            let np: i64 = p.iter().map(|v| v * v).sum();
            let nq: i64 = q.iter().map(|v| v * v).sum();
            np.cmp(&nq).then_with(|| p.cmp(q))
        });
        let mut cum = 0.0;
        for (_, w) in &mut atoms {
            cum += *w / z;
            *w = cum.min(1.0);
        }
        atoms.last_mut().unwrap().1 = 1.0;
        Ok(DisplacementLaw { d, theta, z, atoms })
    }

    pub fn log_z(&self) -> f64 {
        self.z.ln()
    }

    /// Exact probability of the zero displacement.
    pub fn zero_mass(&self) -> f64 {
        1.0 / self.z
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<i64> {
        let u: f64 = rng.random();
        let idx = self.atoms.partition_point(|(_, cum)| *cum <= u);
        self.atoms[idx.min(self.atoms.len() - 1)].0.clone()
    }

    /// Largest Euclidean norm among tabulated atoms (the sampler never
    /// produces anything longer).
    pub fn max_norm(&self) -> f64 {
        self.atoms
            .iter()
            .map(|(p, _)| lattice_norm(p))
            .fold(0.0, f64::max)
    }

    pub fn sample_config<I>(&self, sites: I, rng: &mut ChaCha8Rng) -> DisplacementConfig
    where
        I: IntoIterator<Item = Vec<i64>>,
    {
        let mut cfg = DisplacementConfig::new(self.d);
        for q in sites {
            let xi = self.sample(rng);
            cfg.insert(q, xi).expect("law and site dimension agree");
        }
        cfg
    }
}

/// iid displacements on `sites` under the (d, theta) law, deterministic in
/// the seed.
pub fn sample_config<I>(params: &ModelParams, sites: I, seed: u64) -> Result<DisplacementConfig>
where
    I: IntoIterator<Item = Vec<i64>>,
{
    let law = DisplacementLaw::build(params.d, params.theta)?;
    let mut rng = stream(seed, &[0x5a]);
    Ok(law.sample_config(sites, &mut rng))
}

/// Truncated lattice sum together with a certified bound on what was cut.
#[derive(Debug, Clone, Copy)]
pub struct PotentialValue {
    pub value: f64,
    /// Bound on the absolute omitted tail, valid when every omitted site q
    /// satisfies |x - q - xi_q| >= |x - q| / 2.
    pub tail_bound: f64,
    /// Caller asserted the displacement condition above; otherwise the
    /// bound is heuristic.
    pub tail_certified: bool,
}

/// Upper bound on Σ_{|q - x| > radius} |u(x - q - xi_q)| assuming each
/// omitted site keeps |x - q - xi_q| >= |x - q|/2. Decays like radius^{d-alpha}.
pub fn lattice_tail_bound(params: &ModelParams, radius: f64) -> f64 {
    let d = params.d as f64;
    let alpha = params.alpha;
    // Omitted sites have sup-distance m >= radius/sqrt(d) - 1/2 from the
    // nearest lattice point; shell m holds at most 2d(3m)^{d-1} sites, each
    // contributing at most |C0| (m/4)^{-alpha}.
    let m = ((radius / d.sqrt() - 0.5).ceil()).max(1.0);
    let c = params.c0.abs() * 2.0 * d * 3f64.powi(params.d as i32 - 1) * 4f64.powf(alpha);
    c * (m.powf(d - 1.0 - alpha) + m.powf(d - alpha) / (alpha - d))
}

/// Smallest truncation radius whose certified tail bound is <= rel_tail·|C0|,
/// capped at 1e4 (slow tails near alpha = d would otherwise demand
/// impractical windows; the honest bound is still reported alongside).
pub fn trunc_radius_for(params: &ModelParams, rel_tail: f64) -> f64 {
    let target = rel_tail * params.c0.abs();
    let mut radius = (2.0 * params.core_radius).max(2.0);
    while lattice_tail_bound(params, radius) > target && radius < 1e4 {
        radius *= 1.25;
    }
    radius.min(1e4)
}

/// Truncation radius at the 1e-6 tail target the eigenvalue solvers need
/// (spatial rescaling amplifies a lattice tail error by r^2, so spectral
/// work wants far tighter tails than Monte Carlo does).
pub fn default_trunc_radius(params: &ModelParams) -> f64 {
    trunc_radius_for(params, 1e-6)
}

fn for_each_ball_site(
    d: usize,
    center: &[f64],
    radius: f64,
    f: &mut impl FnMut(&[i64]) -> Result<()>,
) -> Result<()> {
    fn fill(
        q: &mut Vec<i64>,
        axis: usize,
        center: &[f64],
        radius: f64,
        f: &mut impl FnMut(&[i64]) -> Result<()>,
    ) -> Result<()> {
        if axis == q.len() {
            let dist2: f64 = q
                .iter()
                .zip(center)
                .map(|(&qi, &ci)| (qi as f64 - ci) * (qi as f64 - ci))
                .sum();
            if dist2 <= radius * radius {
                f(q)?;
            }
            return Ok(());
        }
        let lo = (center[axis] - radius).ceil() as i64;
        let hi = (center[axis] + radius).floor() as i64;
        for v in lo..=hi {
            q[axis] = v;
            fill(q, axis + 1, center, radius, f)?;
        }
        Ok(())
    }
    let mut q = vec![0i64; d];
    fill(&mut q, 0, center, radius, f)
}

/// V(x) = Σ_{|q - x| <= trunc_radius} u(x - q - xi_q). The configuration is
/// a complete finite environment: sites beyond its bounding hull are vacuum,
/// but a missing site inside the hull is a coverage error. `tail_asserted`
/// records whether the caller vouches for the omitted-site displacement
/// condition of [`lattice_tail_bound`].
pub fn potential_value(
    u: &SingleSitePotential,
    config: &DisplacementConfig,
    x: &[f64],
    trunc_radius: f64,
    tail_asserted: bool,
) -> Result<PotentialValue> {
    let p = &u.params;
    if x.len() != p.d || config.d() != p.d {
        return Err(Error::InvalidInput(
            "point/config dimension mismatch".into(),
        ));
    }
    if trunc_radius < 2.0 * p.core_radius {
        return Err(Error::InvalidInput(format!(
            "trunc_radius {trunc_radius} must be >= 2·core_radius"
        )));
    }
    let hull = config_hull(config);
    let mut value = 0.0;
    let mut y = vec![0.0; p.d];
    for_each_ball_site(p.d, x, trunc_radius, &mut |q| {
        match config.get(q) {
            Some(xi) => {
                for i in 0..p.d {
                    y[i] = x[i] - q[i] as f64 - xi[i] as f64;
                }
                value += u.value(&y);
            }
            None => {
                if let Some((lo, hi)) = &hull {
                    if q.iter().enumerate().all(|(i, &v)| lo[i] <= v && v <= hi[i]) {
                        return Err(Error::Coverage(format!(
                            "configuration has a hole at site {q:?} inside its hull"
                        )));
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(PotentialValue {
        value,
        tail_bound: lattice_tail_bound(p, trunc_radius),
        tail_certified: tail_asserted,
    })
}

pub(crate) fn config_hull(config: &DisplacementConfig) -> Option<(Vec<i64>, Vec<i64>)> {
    let d = config.d();
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    if config.is_empty() {
        return None;
    }
    for (q, _) in config.sites() {
        for i in 0..d {
            lo[i] = lo[i].min(q[i]);
            hi[i] = hi[i].max(q[i]);
        }
    }
    Some((lo, hi))
}

/// r² · V(r·x): the potential as seen after diffusive rescaling by r >= 1.
pub fn scaled_potential_value(
    u: &SingleSitePotential,
    config: &DisplacementConfig,
    r: f64,
    x: &[f64],
    trunc_radius: f64,
    tail_asserted: bool,
) -> Result<PotentialValue> {
    if !(r >= 1.0) {
        return Err(Error::InvalidInput("scale r must be >= 1".into()));
    }
    let rx: Vec<f64> = x.iter().map(|v| r * v).collect();
    let pv = potential_value(u, config, &rx, trunc_radius, tail_asserted)?;
    Ok(PotentialValue {
        value: r * r * pv.value,
        tail_bound: r * r * pv.tail_bound,
        tail_certified: pv.tail_certified,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct HaloTail {
    /// Largest probed value of the outside-halo potential sum.
    pub sup: f64,
    /// Certified bound on the sum, uniform over the probe region.
    pub bound: f64,
    /// bound = c1 · (r·l)^{d - alpha}.
    pub c1: f64,
}

/// Probes sup_x Σ_{q outside the halo} u(x - q - xi_q) over a grid of
/// spacing 1/2 within distance `probe_margin` of the scaled domain; sites
/// farther than `r·halo_width` from `r·domain` count as outside. Valid when
/// every outside site satisfies d(q + xi_q, probes) >= d(q, probes)/2.
pub fn halo_tail_sup(
    u: &SingleSitePotential,
    config: &DisplacementConfig,
    domain: &GridDomain,
    r: f64,
    halo_width: f64,
    probe_margin: f64,
) -> Result<HaloTail> {
    let p = &u.params;
    if p.c0 <= 0.0 {
        return Err(Error::InvalidInput(
            "halo tail bound applies to the C0 > 0 regime".into(),
        ));
    }
    if domain.d() != p.d || config.d() != p.d {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    if !(r >= 1.0) || !(halo_width > 0.0) || probe_margin < 0.0 {
        return Err(Error::InvalidInput(
            "need r >= 1, halo_width > 0, probe_margin >= 0".into(),
        ));
    }
    if r * halo_width <= probe_margin + 1.0 {
        return Err(Error::InvalidInput(
            "halo must extend beyond the probe margin".into(),
        ));
    }

    let outside: Vec<(&Vec<i64>, &Vec<i64>)> = config
        .sites()
        .filter(|(q, _)| {
            let qf: Vec<f64> = q.iter().map(|&v| v as f64).collect();
            domain.distance_scaled(&qf, r) > r * halo_width
        })
        .collect();

    // Probe grid of spacing 1/2 over the margin neighborhood.
    let (lo, hi) = domain.bounding_box();
    let mut probes: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<i64> = lo
        .iter()
        .map(|&v| ((v as f64 * r - probe_margin) * 2.0).floor() as i64)
        .collect();
    let lo2 = idx.clone();
    let hi2: Vec<i64> = hi
        .iter()
        .map(|&v| (((v + 1) as f64 * r + probe_margin) * 2.0).ceil() as i64)
        .collect();
    'outer: loop {
        let x: Vec<f64> = idx.iter().map(|&v| v as f64 / 2.0).collect();
        if domain.distance_scaled(&x, r) <= probe_margin {
            probes.push(x);
        }
        let mut axis = 0;
        loop {
            if axis == p.d {
                break 'outer;
            }
            idx[axis] += 1;
            if idx[axis] <= hi2[axis] {
                break;
            }
            idx[axis] = lo2[axis];
            axis += 1;
        }
    }
    if probes.is_empty() {
        return Err(Error::InvalidInput("probe region is empty".into()));
    }

    let dist_to_probes = |pt: &[f64]| -> f64 {
        probes
            .iter()
            .map(|x| {
                x.iter()
                    .zip(pt)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    };

    let mut sup = 0.0;
    for x in &probes {
        let mut s = 0.0;
        let mut y = vec![0.0; p.d];
        for (q, xi) in &outside {
            for i in 0..p.d {
                y[i] = x[i] - q[i] as f64 - xi[i] as f64;
            }
            s += u.value(&y);
        }
        sup = f64::max(sup, s);
    }

    // Certified bound: each outside site is at least its probe distance away,
    // halved to absorb the displacement.
    let mut bound = 0.0;
    for (q, _) in &outside {
        let qf: Vec<f64> = q.iter().map(|&v| v as f64).collect();
        bound += u.value_at_distance(dist_to_probes(&qf) / 2.0);
    }
    let c1 = bound / (r * halo_width).powf(p.d as f64 - p.alpha);
    Ok(HaloTail { sup, bound, c1 })
}

/// Displaced centers (q + xi_q, always integer points) pre-counted by
/// position for fast repeated evaluation (Feynman-Kac integrands, mesh
/// assembly). Evaluation sums the profile over centers within
/// `eval_radius` of the query point.
#[derive(Debug, Clone)]
pub struct LatticePotential {
    u: SingleSitePotential,
    eval_radius: f64,
    centers: HashMap<Vec<i64>, u32>,
    /// The same multiset sorted, for evaluation when the environment is
    /// smaller than the lattice ball (keeps the summation order, and hence
    /// the float result, independent of hasher state).
    sorted: Vec<(Vec<i64>, u32)>,
}

impl LatticePotential {
    pub fn new(
        u: SingleSitePotential,
        config: &DisplacementConfig,
        eval_radius: f64,
    ) -> Result<Self> {
        if config.d() != u.params.d {
            return Err(Error::InvalidInput("config dimension mismatch".into()));
        }
        if eval_radius < 2.0 * u.params.core_radius {
            return Err(Error::InvalidInput(
                "eval_radius must be >= 2·core_radius".into(),
            ));
        }
        let mut centers: HashMap<Vec<i64>, u32> = HashMap::new();
        for (q, xi) in config.sites() {
            let center: Vec<i64> = q.iter().zip(xi).map(|(a, b)| a + b).collect();
            *centers.entry(center).or_insert(0) += 1;
        }
        let mut sorted: Vec<(Vec<i64>, u32)> =
            centers.iter().map(|(c, &m)| (c.clone(), m)).collect();
        sorted.sort();
        Ok(LatticePotential {
            u,
            eval_radius,
            centers,
            sorted,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.u.params
    }

    /// Σ u(x - c) over displaced centers c with |x - c| <= eval_radius
    /// (with multiplicity: distinct sites may share a center).
    pub fn value(&self, x: &[f64]) -> f64 {
        let d = self.u.params.d;
        let r2 = self.eval_radius * self.eval_radius;
        let ball = (2.0 * self.eval_radius + 1.0).powi(d as i32);
        // The linear scan beats the per-cell hash probe until the environment
        // is several times larger than the evaluation ball.
        if (self.sorted.len() as f64) < 4.0 * ball {
            let mut total = 0.0;
            for (c, mult) in &self.sorted {
                let dist2: f64 = c
                    .iter()
                    .zip(x)
                    .map(|(&ci, &xi)| (ci as f64 - xi) * (ci as f64 - xi))
                    .sum();
                if dist2 <= r2 {
                    total += *mult as f64 * self.u.value_at_distance(dist2.sqrt());
                }
            }
            return total;
        }
        let mut total = 0.0;
        let mut cell = vec![0i64; d];
        fn scan(
            lp: &LatticePotential,
            x: &[f64],
            cell: &mut Vec<i64>,
            axis: usize,
            r2: f64,
            total: &mut f64,
        ) {
            if axis == cell.len() {
                if let Some(&mult) = lp.centers.get(cell.as_slice()) {
                    let dist2: f64 = cell
                        .iter()
                        .zip(x)
                        .map(|(&ci, &xi)| (ci as f64 - xi) * (ci as f64 - xi))
                        .sum();
                    if dist2 <= r2 {
                        *total += mult as f64 * lp.u.value_at_distance(dist2.sqrt());
                    }
                }
                return;
            }
            let lo = (x[axis] - lp.eval_radius).ceil() as i64;
            let hi = (x[axis] + lp.eval_radius).floor() as i64;
            for v in lo..=hi {
                cell[axis] = v;
                scan(lp, x, cell, axis + 1, r2, total);
            }
        }
        scan(self, x, &mut cell, 0, r2, &mut total);
        total
    }

    /// r² V(r·x).
    pub fn scaled_value(&self, r: f64, x: &[f64]) -> f64 {
        let rx: Vec<f64> = x.iter().map(|v| r * v).collect();
        r * r * self.value(&rx)
    }

    /// Heuristic bound on the truncation error of `value` (certified under
    /// the half-distance condition of [`lattice_tail_bound`]).
    pub fn tail_bound(&self) -> f64 {
        lattice_tail_bound(&self.u.params, self.eval_radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params_1d(alpha: f64, theta: f64, c0: f64) -> ModelParams {
        ModelParams::with_unit_core(1, alpha, theta, c0).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(0, 3.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(2, 2.0, 1.0, 1.0, 1.0).is_err()); // alpha <= d
        assert!(ModelParams::new(1, 3.0, 0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1, 3.0, 1.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1, 3.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn shell_enumeration_counts() {
        for d in 1..=3usize {
            for k in 0..5i64 {
                let mut n = 0u64;
                for_each_shell_point(d, k, &mut |p| {
                    assert_eq!(p.iter().map(|v| v.abs()).max().unwrap(), k);
                    n += 1;
                });
                let expect = if k == 0 {
                    1
                } else {
                    (2 * k + 1).pow(d as u32) - (2 * k - 1).pow(d as u32)
                };
                assert_eq!(n, expect as u64, "d={d} k={k}");
            }
        }
    }

    #[test]
    fn normalizing_constant_closed_forms() {
        // d=1, theta=1: 1 + 2 Σ e^{-p} = 1 + 2/(e-1).
        let z = normalizing_constant(1, 1.0, 1e-12).unwrap();
        assert_relative_eq!(z, 1.0 + 2.0 / (std::f64::consts::E - 1.0), epsilon = 1e-11);
        // d=1, theta=2: rapidly converging theta-like series.
        let z2 = normalizing_constant(1, 2.0, 1e-12).unwrap();
        let direct: f64 = 1.0 + 2.0 * (1..40).map(|k| (-((k * k) as f64)).exp()).sum::<f64>();
        assert_relative_eq!(z2, direct, epsilon = 1e-12);
        assert_abs_diff_eq!(z2, 1.772638, epsilon = 2e-6);
        assert!(z2 >= 1.0);
    }

    #[test]
    fn normalizing_constant_decreasing_in_theta() {
        for d in 1..=2usize {
            let zs: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
                .iter()
                .map(|&th| normalizing_constant(d, th, 1e-10).unwrap())
                .collect();
            for w in zs.windows(2) {
                assert!(
                    w[0] > w[1],
                    "Z must strictly decrease in theta (d={d}): {zs:?}"
                );
            }
            assert!(zs.iter().all(|&z| z >= 1.0));
        }
    }

    #[test]
    fn gaussian_case_factorizes_over_coordinates() {
        // theta = 2 separates: Z(d,2) = Z(1,2)^d.
        let z1 = normalizing_constant(1, 2.0, 1e-13).unwrap();
        let z2 = normalizing_constant(2, 2.0, 1e-12).unwrap();
        let z3 = normalizing_constant(3, 2.0, 1e-11).unwrap();
        assert_relative_eq!(z2, z1 * z1, epsilon = 1e-10);
        assert_relative_eq!(z3, z1 * z1 * z1, epsilon = 1e-9);
    }

    #[test]
    fn log_weight_examples() {
        let mut cfg = DisplacementConfig::new(1);
        for q in -2..=2 {
            cfg.insert(vec![q], vec![0]).unwrap();
        }
        let log_z = normalizing_constant(1, 1.0, 1e-12).unwrap().ln();
        assert_relative_eq!(
            displacement_log_weight(&cfg, 1.0, log_z),
            -5.0 * log_z,
            epsilon = 1e-12
        );

        let mut one = DisplacementConfig::new(2);
        one.insert(vec![0, 0], vec![1, 0]).unwrap();
        let lz2 = normalizing_constant(2, 2.0, 1e-10).unwrap().ln();
        assert_relative_eq!(
            displacement_log_weight(&one, 2.0, lz2),
            -1.0 - lz2,
            epsilon = 1e-12
        );

        let mut two = DisplacementConfig::new(2);
        two.insert(vec![0, 0], vec![1, 0]).unwrap();
        two.insert(vec![1, 0], vec![0, 2]).unwrap();
        let lz = normalizing_constant(2, 1.0, 1e-10).unwrap().ln();
        assert_relative_eq!(
            displacement_log_weight(&two, 1.0, lz),
            -3.0 - 2.0 * lz,
            epsilon = 1e-12
        );
        assert!(displacement_log_weight(&two, 1.0, lz) <= 0.0);
    }

    #[test]
    fn zero_config_maximizes_log_weight() {
        let log_z = normalizing_constant(1, 1.5, 1e-10).unwrap().ln();
        let zero = DisplacementConfig::zeros_on_box(1, -3, 3).unwrap();
        let base = displacement_log_weight(&zero, 1.5, log_z);
        let mut bumped = zero.clone();
        bumped.insert(vec![1], vec![2]).unwrap();
        assert!(displacement_log_weight(&bumped, 1.5, log_z) < base);
    }

    #[test]
    fn sampler_zero_atom_frequency() {
        let law = DisplacementLaw::build(1, 1.0).unwrap();
        let mut rng = stream(42, &[1]);
        let n = 1_000_000u32;
        let mut zeros = 0u32;
        let mut plus = 0u32;
        let mut minus = 0u32;
        for _ in 0..n {
            let p = law.sample(&mut rng);
            match p[0] {
                0 => zeros += 1,
                1 => plus += 1,
                -1 => minus += 1,
                _ => {}
            }
        }
        let p0 = law.zero_mass();
        assert_relative_eq!(p0, 0.46212, epsilon = 1e-4);
        let freq = zeros as f64 / n as f64;
        let se = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!(
            (freq - p0).abs() <= 3.0 * se,
            "freq {freq} vs {p0} (se {se})"
        );
        // Symmetry of +1 and -1 to Monte Carlo accuracy.
        let p1 = (-1.0f64).exp() / law.z;
        let se1 = (2.0 * p1 / n as f64).sqrt();
        assert!(((plus as f64 - minus as f64) / n as f64).abs() <= 4.0 * se1);
    }

    #[test]
    fn sampler_chi_square_small_atoms() {
        // Atoms {|p| <= 2} plus an overflow bin: 6 bins, 5 dof.
        // 99th percentile of chi2(5) is 15.086.
        let law = DisplacementLaw::build(1, 1.0).unwrap();
        let mut rng = stream(7, &[2]);
        let n = 1_000_000usize;
        let mut counts = [0u64; 6];
        for _ in 0..n {
            let p = law.sample(&mut rng)[0];
            match p {
                -2..=2 => counts[(p + 2) as usize] += 1,
                _ => counts[5] += 1,
            }
        }
        let mut expected = [0.0f64; 6];
        for p in -2i64..=2 {
            expected[(p + 2) as usize] = (-(p.abs() as f64)).exp() / law.z * n as f64;
        }
        expected[5] = n as f64 - expected[..5].iter().sum::<f64>();
        let chi2: f64 = counts
            .iter()
            .zip(&expected)
            .map(|(&o, &e)| (o as f64 - e) * (o as f64 - e) / e)
            .sum();
        assert!(chi2 < 15.086, "chi-square {chi2} exceeds the 99% cut");
    }

    #[test]
    fn sampling_is_deterministic() {
        let params = params_1d(3.0, 1.0, 1.0);
        let sites = box_points(1, -5, 5);
        let a = sample_config(&params, sites.clone(), 99).unwrap();
        let b = sample_config(&params, sites, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn potential_value_examples() {
        let u = SingleSitePotential::new(params_1d(3.0, 1.0, 1.0));
        let mut cfg = DisplacementConfig::new(1);
        cfg.insert(vec![0], vec![0]).unwrap();
        let pv = potential_value(&u, &cfg, &[0.0], 2.0, true).unwrap();
        assert_relative_eq!(pv.value, 1.0, epsilon = 1e-14);
        assert!(pv.tail_certified);

        // Exact tail branch at |x| = 2 (truncation window still covers q=0).
        let mut wide = DisplacementConfig::new(1);
        for q in -1..=4 {
            wide.insert(vec![q], vec![0]).unwrap();
        }
        let u5 = SingleSitePotential::new(params_1d(5.0, 1.0, 1.0));
        let pv = potential_value(&u5, &wide, &[2.0], 2.0, true).unwrap();
        // Sites 0..4 lie within distance 2 of x=2; the q=0 center is at
        // distance 2 and contributes 2^{-5}.
        let direct: f64 = [0i64, 1, 2, 3, 4]
            .iter()
            .map(|&q| u5.value(&[2.0 - q as f64]))
            .sum();
        assert_relative_eq!(pv.value, direct, epsilon = 1e-14);
        assert_relative_eq!(u5.value(&[2.0]), 2f64.powi(-5), epsilon = 1e-15);
    }

    #[test]
    fn potential_value_basel_series() {
        // d=1, alpha=2, all displacements zero: V(0) -> 1 + pi^2/3.
        let params = ModelParams::with_unit_core(1, 2.0, 1.0, 1.0).unwrap();
        let u = SingleSitePotential::new(params);
        let limit = 1.0 + std::f64::consts::PI * std::f64::consts::PI / 3.0;
        let mut errs = Vec::new();
        for k in [100i64, 400] {
            let cfg = DisplacementConfig::zeros_on_box(1, -k, k).unwrap();
            let pv = potential_value(&u, &cfg, &[0.0], k as f64 + 0.4, true).unwrap();
            let direct = 1.0 + 2.0 * (1..=k).map(|q| (q as f64).powi(-2)).sum::<f64>();
            assert_relative_eq!(pv.value, direct, epsilon = 1e-12);
            errs.push(limit - pv.value);
        }
        assert!(errs[1] > 0.0 && errs[1] < errs[0]);
        assert!(errs[1] < 0.006);
    }

    #[test]
    fn coverage_error_on_holes_but_not_outside_hull() {
        let u = SingleSitePotential::new(params_1d(3.0, 1.0, 1.0));
        // Hole at q = 0 inside the hull [-1, 1].
        let mut holey = DisplacementConfig::new(1);
        holey.insert(vec![-1], vec![0]).unwrap();
        holey.insert(vec![1], vec![0]).unwrap();
        let err = potential_value(&u, &holey, &[0.0], 3.0, false).unwrap_err();
        assert!(matches!(err, Error::Coverage(_)));
        // Sites beyond the hull are vacuum, not errors.
        let cfg = DisplacementConfig::zeros_on_box(1, -1, 1).unwrap();
        let pv = potential_value(&u, &cfg, &[0.0], 3.0, false).unwrap();
        let direct: f64 = (-1..=1).map(|q| u.value(&[q as f64])).sum();
        assert_relative_eq!(pv.value, direct, epsilon = 1e-14);
        assert!(!pv.tail_certified);
    }

    #[test]
    fn scaled_potential_matches_direct_substitution() {
        let u = SingleSitePotential::new(params_1d(3.0, 1.0, 1.0));
        let cfg = DisplacementConfig::zeros_on_box(1, -20, 20).unwrap();
        // r = 1 is the identity.
        let a = potential_value(&u, &cfg, &[0.3], 10.0, true).unwrap();
        let b = scaled_potential_value(&u, &cfg, 1.0, &[0.3], 10.0, true).unwrap();
        assert_eq!(a.value, b.value);

        // Single site at the core: r=2 gives r²·u(0) = 4.
        let mut single = DisplacementConfig::new(1);
        single.insert(vec![0], vec![0]).unwrap();
        let pv = scaled_potential_value(&u, &single, 2.0, &[0.0], 2.0, true).unwrap();
        assert_relative_eq!(pv.value, 4.0, epsilon = 1e-14);

        // Tail point: r²·C0·|rx - q|^{-alpha} against direct evaluation.
        let r = 8.0;
        let x = [0.75];
        let pv = scaled_potential_value(&u, &cfg, r, &x, 3.0, true).unwrap();
        let mut direct = 0.0;
        for q in -20..=20i64 {
            if (q as f64 - r * x[0]).abs() <= 3.0 {
                direct += r * r * u.value(&[r * x[0] - q as f64]);
            }
        }
        assert_relative_eq!(pv.value, direct, epsilon = 1e-12);
    }

    #[test]
    fn translation_covariance_is_exact() {
        let params = params_1d(3.5, 1.0, 1.0);
        let u = SingleSitePotential::new(params);
        let cfg = sample_config(&params, box_points(1, -30, 30), 5).unwrap();
        let shift = 3i64;
        let mut shifted = DisplacementConfig::new(1);
        for (q, xi) in cfg.sites() {
            shifted.insert(vec![q[0] - shift], xi.clone()).unwrap();
        }
        let x = 0.37;
        let a = potential_value(&u, &cfg, &[x], 12.0, true).unwrap();
        let b = potential_value(&u, &shifted, &[x - shift as f64], 12.0, true).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn sign_regimes_bound_the_potential() {
        let neg = ModelParams::with_unit_core(1, 3.0, 1.0, -2.0).unwrap();
        let u = SingleSitePotential::new(neg);
        let cfg = DisplacementConfig::zeros_on_box(1, -10, 10).unwrap();
        let pv = potential_value(&u, &cfg, &[0.2], 5.0, true).unwrap();
        assert!(pv.value <= 0.0);
        assert!(pv.value >= 21.0 * neg.c0 * 1.0); // N_covered · C0 · r0^{-alpha}
        assert_relative_eq!(u.sup_abs(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn tail_bound_shrinks_with_radius_and_sets_default() {
        let params = params_1d(3.0, 1.0, 1.0);
        let b1 = lattice_tail_bound(&params, 8.0);
        let b2 = lattice_tail_bound(&params, 16.0);
        assert!(b2 < b1);
        // Certified: actual omitted mass (zero displacements) is below the bound.
        let actual: f64 = (9i64..4000).map(|q| 2.0 * (q as f64).powi(-3)).sum();
        assert!(actual <= b1);
        let r = default_trunc_radius(&params);
        assert!(lattice_tail_bound(&params, r) <= 1e-6 || r >= 1e4);
    }

    #[test]
    fn halo_tail_examples() {
        let params = params_1d(3.0, 1.0, 1.0);
        let u = SingleSitePotential::new(params);
        let dom = GridDomain::interval(0, 0, 4).unwrap(); // unit cell [0,1]
        let r = 10.0;
        let cfg = DisplacementConfig::zeros_on_box(1, -60, 70).unwrap();

        let tail = halo_tail_sup(&u, &cfg, &dom, r, 2.0, 2.0).unwrap();
        // Outside sites: q < -20 or q > 30. Direct comparison.
        let brute = |x: f64| -> f64 {
            (-60..=70i64)
                .filter(|&q| (q as f64) < -20.0 || (q as f64) > 30.0)
                .map(|q| u.value(&[x - q as f64]))
                .sum()
        };
        let mut expect: f64 = 0.0;
        let mut x = -2.0;
        while x <= 12.0 + 1e-9 {
            expect = expect.max(brute(x));
            x += 0.5;
        }
        assert_relative_eq!(tail.sup, expect, epsilon = 1e-12);
        assert!(tail.sup <= tail.bound);
        assert!(tail.c1 > 0.0);

        // Monotone nonincreasing in the halo width.
        let wider = halo_tail_sup(&u, &cfg, &dom, r, 4.0, 2.0).unwrap();
        assert!(wider.sup <= tail.sup);

        // No outside sites at all.
        let near = DisplacementConfig::zeros_on_box(1, -15, 25).unwrap();
        let none = halo_tail_sup(&u, &near, &dom, r, 2.0, 2.0).unwrap();
        assert_eq!(none.sup, 0.0);
    }

    #[test]
    fn lattice_potential_matches_direct_sum() {
        let params = params_1d(4.0, 1.0, 1.0);
        let u = SingleSitePotential::new(params);
        let cfg = sample_config(&params, box_points(1, -25, 25), 11).unwrap();
        let lp = LatticePotential::new(u, &cfg, 20.0).unwrap();
        for &x in &[0.0, 0.31, -3.7] {
            let direct: f64 = cfg
                .sites()
                .map(|(q, xi)| {
                    let c = (q[0] + xi[0]) as f64;
                    if (x - c).abs() <= 20.0 {
                        u.value(&[x - c])
                    } else {
                        0.0
                    }
                })
                .sum();
            assert_relative_eq!(lp.value(&[x]), direct, epsilon = 1e-12);
        }
        assert_relative_eq!(
            lp.scaled_value(4.0, &[0.25]),
            16.0 * lp.value(&[1.0]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn config_round_trips_through_lines() {
        let params = ModelParams::with_unit_core(2, 5.0, 1.0, 1.0).unwrap();
        let sites = box_points(2, -2, 2);
        let cfg = sample_config(&params, sites, 3).unwrap();
        let text = cfg.to_lines();
        let back = DisplacementConfig::from_lines(&text).unwrap();
        assert_eq!(cfg, back);
        assert!(text.lines().next().unwrap().contains(" : "));
    }
}
