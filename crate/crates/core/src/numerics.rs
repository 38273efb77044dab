//! Small numerical helpers shared across modules: compensated summation,
//! adaptive Simpson quadrature, golden-section minimization, half-integer
//! gamma values, and least-squares line fits.

use crate::{Error, Result};

/// Pairwise (cascade) summation. Deterministic for a fixed input order and
/// much better conditioned than a running sum on long Monte Carlo vectors.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 1);
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 * (b.abs() + 1.0) {
        // Richardson extrapolation of the composite rule.
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::ToleranceUnreachable {
            what: "adaptive Simpson quadrature",
        });
    }
    let l = adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute error
/// target `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(
            "quadrature needs finite bounds and tol > 0".into(),
        ));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    adaptive_step(&f, a, b, fa, fm, fb, whole, tol, 48)
}

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`; returns
/// `(argmin, min)`. Assumes `f` is unimodal on the bracket; callers with
/// possibly multimodal objectives should pre-scan (see [`min_scan_refine`]).
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let mut x1 = b - INV_GOLDEN * (b - a);
    let mut x2 = a + INV_GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > xtol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    if f1 < fm && f1 < f2 {
        (x1, f1)
    } else if f2 < fm {
        (x2, f2)
    } else {
        (xm, fm)
    }
}

/// Coarse scan over `n` points followed by golden-section refinement of the
/// best bracket. Robust against shallow secondary minima.
pub fn min_scan_refine<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize, xtol: f64) -> (f64, f64) {
    assert!(n >= 3 && b > a);
    let h = (b - a) / (n - 1) as f64;
    let mut best_i = 0;
    let mut best_f = f64::INFINITY;
    for i in 0..n {
        let v = f(a + h * i as f64);
        if v < best_f {
            best_f = v;
            best_i = i;
        }
    }
    let lo = a + h * best_i.saturating_sub(1) as f64;
    let hi = (a + h * (best_i + 1) as f64).min(b);
    golden_min(f, lo, hi, xtol)
}

/// Γ(n/2) for positive integer n, exact up to rounding.
/// Even n: ordinary factorial; odd n: √π · (n-2)!! / 2^((n-1)/2).
pub fn gamma_half_integer(n: u32) -> f64 {
    assert!(n >= 1, "gamma_half_integer needs n >= 1");
    if n.is_multiple_of(2) {
        let mut acc = 1.0;
        for k in 2..n / 2 {
            acc *= k as f64;
        }
        acc
    } else {
        let mut acc = std::f64::consts::PI.sqrt();
        let mut k = n as i64 - 2;
        while k >= 1 {
            acc *= k as f64 / 2.0;
            k -= 2;
        }
        acc
    }
}

/// Surface area of the unit sphere in ℝ^d: 2 π^{d/2} / Γ(d/2).
pub fn sphere_surface(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half_integer(d as u32)
}

/// Ordinary least squares line fit `y ≈ slope·x + intercept`, with r².
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput(
            "line fit needs >= 2 paired points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("line fit with constant abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok((slope, intercept, r2))
}

/// Euclidean norm of a slice.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean norm of an integer lattice vector.
pub fn lattice_norm(p: &[i64]) -> f64 {
    p.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt()
}
