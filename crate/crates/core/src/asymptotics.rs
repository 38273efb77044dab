//! Closed-form and quadrature-defined constants for the predicted
//! log-moment behavior, regime classification, and intermittency gaps.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::{
    adaptive_simpson, gamma_half_integer, golden_min, min_scan_refine, sphere_surface,
};

/// mu = 2(alpha-2)/(d(alpha-d)); algebraically 1 everywhere in d = 2 and on
/// the whole boundary alpha = d+2, which is returned exactly.
pub fn mu_exponent(d: usize, alpha: f64) -> f64 {
    if d == 2 || (alpha - (d as f64 + 2.0)).abs() < 1e-12 {
        return 1.0;
    }
    2.0 * (alpha - 2.0) / (d as f64 * (alpha - d as f64))
}

/// Which case of the moment-rate table the parameters fall in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// C0 < 0: attractive wells, growing moments, sharp rate.
    NegativeCoupling,
    /// d < alpha < d+2: sharp heavy-tail rate with the quadrature constant.
    HeavyTail,
    /// d = 1, alpha > 3: sharp closed-form constant.
    OneDimSharp,
    /// d = 1, alpha = 3: order of t only.
    OneDimBoundary,
    /// d = 2, alpha > 4: order only, with a negative power of log t.
    TwoDimLog,
    /// d >= 3 with alpha >= d+2, or (d, alpha) = (2, 4): order only,
    /// exponent driven by mu.
    HighDim,
}

pub fn classify_regime(params: &ModelParams) -> Regime {
    let (d, alpha) = (params.d, params.alpha);
    if params.c0 < 0.0 {
        return Regime::NegativeCoupling;
    }
    let df = d as f64;
    if alpha < df + 2.0 - 1e-12 {
        return Regime::HeavyTail;
    }
    if (alpha - (df + 2.0)).abs() < 1e-12 {
        return match d {
            1 => Regime::OneDimBoundary,
            _ => Regime::HighDim,
        };
    }
    match d {
        1 => Regime::OneDimSharp,
        2 => Regime::TwoDimLog,
        _ => Regime::HighDim,
    }
}

/// inf over s >= 0 of c0(rho+s)^{-alpha} + s^theta: the cheapest way to
/// push a repeller at distance rho further out. The interior stationary
/// point satisfies s^{alpha+theta} <= alpha c0/theta, which brackets the
/// search independently of rho.
fn radial_infimum(rho: f64, alpha: f64, theta: f64, c0: f64) -> f64 {
    let phi = |s: f64| c0 * (rho + s).powf(-alpha) + s.powf(theta);
    let cap = (alpha * c0 / theta).powf(1.0 / (alpha + theta));
    let interior = if theta >= 1.0 {
        golden_min(phi, 0.0, cap, 1e-10).1
    } else {
        min_scan_refine(phi, 0.0, cap, 64, 1e-10).1
    };
    interior.min(phi(0.0))
}

/// The heavy-tail constant: integral over q of the cheapest combined
/// potential-plus-displacement price inf_y (c0|q+y|^{-alpha} + |y|^theta),
/// reduced to a radial profile (the optimal y points away from the
/// origin). Absolute error at most tol.
///
/// The radial integral runs over dyadic pieces so the quadrature never
/// sees a badly scaled interval. Since the inner optimum is bounded by S
/// uniformly in rho, the profile is squeezed between c0(rho+S)^{-alpha}
/// and c0 rho^{-alpha}; swapping in the pure power beyond P therefore
/// costs at most surface * c0 * alpha * S * P^{d-alpha-1}/(alpha+1-d),
/// a full power less than the tail itself, and the swapped tail is
/// integrated in closed form.
pub fn c_heavy_tail(d: usize, alpha: f64, theta: f64, c0: f64, tol: f64) -> Result<f64> {
    if d == 0 || !(alpha > d as f64) || !(theta > 0.0) || !(c0 > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidInput(
            "heavy-tail constant needs alpha > d >= 1, theta > 0, c0 > 0, tol > 0".into(),
        ));
    }
    let surface = sphere_surface(d);
    let df = d as f64;
    let s_max = (alpha * c0 / theta).powf(1.0 / (alpha + theta));
    let integrand = |rho: f64| rho.powf(df - 1.0) * radial_infimum(rho, alpha, theta, c0);
    let base = s_max.max(1.0);
    let mut acc = adaptive_simpson(integrand, 0.0, base, tol / 4.0)?;
    let mut left = base;
    for k in 0..64 {
        let swap_err =
            surface * c0 * alpha * s_max * left.powf(df - alpha - 1.0) / (alpha + 1.0 - df);
        if swap_err <= tol / 4.0 {
            return Ok(surface * acc + surface * c0 * left.powf(df - alpha) / (alpha - df));
        }
        let right = 2.0 * left;
        acc += adaptive_simpson(integrand, left, right, tol / 8.0 * 0.5f64.powi(k))?;
        left = right;
    }
    Err(Error::ToleranceUnreachable {
        what: "heavy-tail radial quadrature",
    })
}

/// 2 pi^{d/2} theta |K|^{1+d/theta} / (d(d+theta) Gamma(d/2)): the sharp
/// growth rate coefficient for nonpositive profiles of depth K.
pub fn c_negative(d: usize, theta: f64, k: f64) -> Result<f64> {
    if d == 0 || !(theta > 0.0) {
        return Err(Error::InvalidInput(
            "c_negative needs d >= 1, theta > 0".into(),
        ));
    }
    let df = d as f64;
    Ok(
        2.0 * std::f64::consts::PI.powf(df / 2.0) * theta * k.abs().powf(1.0 + df / theta)
            / (df * (df + theta) * gamma_half_integer(d as u32)),
    )
}

/// (3+theta)/(1+theta) · (pi²/8)^{(1+theta)/(3+theta)}: the sharp
/// one-dimensional decay coefficient for steep tails.
pub fn one_dim_constant(theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidInput(
            "one_dim_constant needs theta > 0".into(),
        ));
    }
    let e = (1.0 + theta) / (3.0 + theta);
    Ok((3.0 + theta) / (1.0 + theta) * (std::f64::consts::PI.powi(2) / 8.0).powf(e))
}

/// Predicted leading behavior of log E[v^p]: rate · t^exponent · (log
/// t)^log_exponent, with `rate` absent in the order-only regimes.
#[derive(Debug, Clone)]
pub struct MomentPrediction {
    pub regime: Regime,
    pub exponent: f64,
    pub log_exponent: f64,
    /// Signed coefficient; None where only the order of growth is known.
    pub rate: Option<f64>,
    /// rate · t^exponent · (log t)^log_exponent at the requested t.
    pub value: Option<f64>,
}

pub fn predicted_log_moment(
    params: &ModelParams,
    t: f64,
    p: f64,
    tol: f64,
) -> Result<MomentPrediction> {
    if !(p >= 1.0) {
        return Err(Error::InvalidInput("moment order p must be >= 1".into()));
    }
    if !(t > std::f64::consts::E) {
        return Err(Error::InvalidInput("prediction needs t > e".into()));
    }
    let (d, alpha, theta) = (params.d, params.alpha, params.theta);
    let df = d as f64;
    let regime = classify_regime(params);
    let (exponent, log_exponent, rate) = match regime {
        Regime::NegativeCoupling => {
            let u0 = params.c0 * params.core_radius.powf(-alpha);
            (1.0 + df / theta, 0.0, Some(c_negative(d, theta, p * u0)?))
        }
        Regime::HeavyTail => {
            let e = (df + theta) / (alpha + theta);
            let c = c_heavy_tail(d, alpha, theta, params.c0, tol)?;
            (e, 0.0, Some(-p.powf(e) * c))
        }
        Regime::OneDimSharp => {
            let e = (1.0 + theta) / (3.0 + theta);
            let c =
                (3.0 + theta) / (1.0 + theta) * (p * std::f64::consts::PI.powi(2) / 8.0).powf(e);
            (e, 0.0, Some(-c))
        }
        Regime::OneDimBoundary => ((1.0 + theta) / (3.0 + theta), 0.0, None),
        Regime::TwoDimLog => ((2.0 + theta) / (4.0 + theta), -theta / (4.0 + theta), None),
        Regime::HighDim => {
            let mu = mu_exponent(d, alpha);
            ((df + theta * mu) / (df + 2.0 + theta * mu), 0.0, None)
        }
    };
    let value = rate.map(|r| r * t.powf(exponent) * t.ln().powf(log_exponent));
    Ok(MomentPrediction {
        regime,
        exponent,
        log_exponent,
        rate,
        value,
    })
}

/// Predicted log of the normalized moment ratio E[v^{p2}]^{1/p2} /
/// E[v^{p1}]^{1/p1}.
#[derive(Debug, Clone, PartialEq)]
pub enum IntermittencyGap {
    /// The sharp-rate regimes: an explicit logarithmic gap.
    Rate(f64),
    /// Only two-sided bounds with unnamed constants exist: the growth
    /// order in t and the power of p entering both bounds.
    OrderOnly { exponent: f64, p_power: f64 },
}

pub fn intermittency_gap(
    params: &ModelParams,
    t: f64,
    p1: f64,
    p2: f64,
    tol: f64,
) -> Result<IntermittencyGap> {
    if !(1.0 <= p1) || !(p1 <= p2) {
        return Err(Error::InvalidInput("need 1 <= p1 <= p2".into()));
    }
    let (d, alpha, theta) = (params.d, params.alpha, params.theta);
    let df = d as f64;
    match classify_regime(params) {
        Regime::HeavyTail => {
            let c = c_heavy_tail(d, alpha, theta, params.c0, tol)?;
            let e = (df + theta) / (alpha + theta);
            let pw = (df - alpha) / (alpha + theta);
            Ok(IntermittencyGap::Rate(
                c * t.powf(e) * (p1.powf(pw) - p2.powf(pw)),
            ))
        }
        Regime::OneDimSharp => {
            let e = (1.0 + theta) / (3.0 + theta);
            let pw = -2.0 / (3.0 + theta);
            let lead =
                (3.0 + theta) / (1.0 + theta) * (std::f64::consts::PI.powi(2) * t / 8.0).powf(e);
            Ok(IntermittencyGap::Rate(lead * (p1.powf(pw) - p2.powf(pw))))
        }
        Regime::NegativeCoupling => {
            let u0 = params.c0 * params.core_radius.powf(-alpha);
            let c = c_negative(d, theta, u0)?;
            let pw = df / theta;
            Ok(IntermittencyGap::Rate(
                c * t.powf(1.0 + df / theta) * (p2.powf(pw) - p1.powf(pw)),
            ))
        }
        Regime::HighDim => {
            let mu = mu_exponent(d, alpha);
            Ok(IntermittencyGap::OrderOnly {
                exponent: (df + theta * mu) / (df + 2.0 + theta * mu),
                p_power: -2.0 / (df + 2.0 + theta * mu),
            })
        }
        Regime::OneDimBoundary | Regime::TwoDimLog => Err(Error::RegimeNotCovered { d, alpha }),
    }
}
