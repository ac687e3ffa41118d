//! Instrument-response convolution and curve comparison metrics.
//!
//! The IRF is a unit-area Gaussian; measured coincidences are the ideal
//! g²(τ) convolved with it, with negative delays supplied by the
//! stationarity symmetry g²(−τ) = g²(|τ|). Convolution is direct
//! trapezoidal quadrature on the (nonuniform) composite grid.

use crate::dynamics::G2Curve;
use crate::error::{CoemitError, Result};

#[derive(Debug, Clone, Copy)]
pub struct InstrumentResponse {
    /// Gaussian full width at half maximum, ps.
    pub fwhm: f64,
}

impl InstrumentResponse {
    pub fn new(fwhm: f64) -> Result<Self> {
        if fwhm <= 0.0 {
            return Err(CoemitError::DomainError(format!("fwhm {fwhm} <= 0")));
        }
        Ok(InstrumentResponse { fwhm })
    }

    pub fn sigma(&self) -> f64 {
        self.fwhm / (8.0 * std::f64::consts::LN_2).sqrt()
    }

    fn kernel(&self, x: f64) -> f64 {
        let s = self.sigma();
        (-(x * x) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
    }
}

/// Convolve a curve with the IRF. Output delays are trimmed to those whose
/// ±4·fwhm kernel window the (symmetrically extended) grid covers.
pub fn convolve_irf(curve: &G2Curve, irf: &InstrumentResponse) -> Result<G2Curve> {
    let n = curve.tau.len();
    if n < 2 {
        return Err(CoemitError::DomainError("curve too short to convolve".into()));
    }
    let min_spacing = curve
        .tau
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    // delta limit: kernel narrower than the grid resolves to the identity
    if 8.0 * irf.fwhm < min_spacing {
        return Ok(curve.clone());
    }
    let half = 4.0 * irf.fwhm;
    // symmetric extension: u ∈ {−τ_k} ∪ {τ_k}, value g²(|u|)
    let mut us: Vec<f64> = curve.tau.iter().rev().map(|t| -t).collect();
    let mut gs: Vec<f64> = curve.g2.iter().rev().cloned().collect();
    us.extend(curve.tau.iter().filter(|t| **t > 0.0));
    gs.extend(
        curve
            .tau
            .iter()
            .zip(&curve.g2)
            .filter(|(t, _)| **t > 0.0)
            .map(|(_, g)| *g),
    );
    let tau_max = *curve.tau.last().unwrap();
    let mut tau = Vec::new();
    let mut g2 = Vec::new();
    for (i, &t) in curve.tau.iter().enumerate() {
        if t + half > tau_max {
            break;
        }
        let (lo, hi) = (t - half, t + half);
        let i0 = us.partition_point(|u| *u < lo);
        let i1 = us.partition_point(|u| *u <= hi);
        let window = &us[i0.saturating_sub(1)..(i1 + 1).min(us.len())];
        let wg = &gs[i0.saturating_sub(1)..(i1 + 1).min(gs.len())];
        for w in window.windows(2) {
            let spacing = w[1] - w[0];
            if spacing > irf.fwhm / 10.0 {
                return Err(CoemitError::GridTooCoarse {
                    spacing,
                    limit: irf.fwhm / 10.0,
                });
            }
        }
        // trapezoid of kernel·g and of the kernel itself; dividing by the
        // latter keeps the discrete kernel unit-area
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..window.len() - 1 {
            let (u0, u1) = (window[k], window[k + 1]);
            let (k0, k1) = (irf.kernel(t - u0), irf.kernel(t - u1));
            let h = 0.5 * (u1 - u0);
            num += h * (k0 * wg[k] + k1 * wg[k + 1]);
            den += h * (k0 + k1);
        }
        if den < 1e-300 {
            return Err(CoemitError::DomainError(format!(
                "empty kernel window at tau {t}"
            )));
        }
        tau.push(t);
        g2.push(num / den);
        let _ = i;
    }
    if tau.is_empty() {
        return Err(CoemitError::DomainError(
            "grid does not extend 4×fwhm past any delay".into(),
        ));
    }
    Ok(G2Curve {
        tau,
        g2,
        i0: curve.i0,
        scenario: curve.scenario.clone(),
        numerics: curve.numerics,
    })
}

/// Max-abs and RMS differences of two curves over a τ window, with linear
/// interpolation of `b` onto `a`'s grid.
pub fn compare_curves(a: &G2Curve, b: &G2Curve, window: (f64, f64)) -> Result<(f64, f64)> {
    let (w0, w1) = window;
    let (bmin, bmax) = (b.tau[0], *b.tau.last().unwrap());
    let mut max_abs: f64 = 0.0;
    let mut ssq = 0.0;
    let mut count = 0usize;
    for (t, g) in a.tau.iter().zip(&a.g2) {
        if *t < w0 || *t > w1 || *t < bmin || *t > bmax {
            continue;
        }
        let idx = b.tau.partition_point(|x| *x < *t).min(b.tau.len() - 1);
        let bi = if (b.tau[idx] - t).abs() < 1e-9 || idx == 0 {
            b.g2[idx]
        } else {
            let (t0, t1) = (b.tau[idx - 1], b.tau[idx]);
            let w = (t - t0) / (t1 - t0);
            b.g2[idx - 1] * (1.0 - w) + b.g2[idx] * w
        };
        let d = (g - bi).abs();
        max_abs = max_abs.max(d);
        ssq += d * d;
        count += 1;
    }
    if count == 0 {
        return Err(CoemitError::DisjointSupport);
    }
    Ok((max_abs, (ssq / count as f64).sqrt()))
}
