//! Closed-form reference curves (Eqs. (16)–(17)), the superradiant
//! Markovian reference, and least-squares model fitting.

use crate::dynamics::{g2_curve_regression, G2Curve, Geometry, Grids, PtSettings, Scenario};
use crate::error::{CoemitError, Result};
use crate::quantum::{DecayMode, LindbladSpec};

/// Pure-dephasing coincidence formula, valid for γ_p = γ:
/// g²(τ) = 1 − ½(e^{−(γ+γ_p)|τ|} − e^{−(γ+γ_p+γ_d)|τ|}).
pub fn g2_ppd(tau: f64, gamma: f64, gamma_p: f64, gamma_d: f64) -> Result<f64> {
    let scale = gamma.abs().max(gamma_p.abs()).max(1e-300);
    if (gamma - gamma_p).abs() > 1e-10 * scale {
        return Err(CoemitError::DomainError(format!(
            "g2_ppd requires gamma_p = gamma, got {gamma_p} vs {gamma}"
        )));
    }
    let t = tau.abs();
    let r = gamma + gamma_p;
    Ok(1.0 - 0.5 * ((-r * t).exp() - (-(r + gamma_d) * t).exp()))
}

/// Initial-drop model g²(τ) = 1 − a·e^{−(γ+γ_p)|τ|} (Eq. (17)).
pub fn g2_initial_drop(tau: f64, a: f64, gamma: f64, gamma_p: f64) -> f64 {
    1.0 - a * (-(gamma + gamma_p) * tau.abs()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// Fit γ_d of the pure-dephasing formula (rates γ, γ_p fixed).
    Ppd,
    /// Fit the drop amplitude a of Eq. (17) (rates fixed).
    InitialDrop,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: FitModel,
    /// Named fitted parameters.
    pub params: Vec<(String, f64)>,
    /// RMS residual over the fit window.
    pub residual_norm: f64,
    /// Diagonal of the parameter covariance estimate.
    pub covariance_diag: Vec<f64>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Least-squares fit of `model` to the curve over `tau_window`
/// (inclusive). Samples are weighted by their local grid spacing, so the
/// objective approximates the continuum integral ∫dτ (g² − model)² and the
/// result does not depend on how densely the output grid happens to sample
/// each region. Deterministic: multi-start initializations are fixed by the
/// curve's own rates.
pub fn fit_model(curve: &G2Curve, model: FitModel, tau_window: (f64, f64)) -> Result<FitResult> {
    let (t0, t1) = tau_window;
    let pts: Vec<(f64, f64)> = curve
        .tau
        .iter()
        .zip(&curve.g2)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map(|(t, g)| (*t, *g))
        .collect();
    if pts.len() < 10 {
        return Err(CoemitError::DomainError(format!(
            "fit window [{t0}, {t1}] holds only {} samples",
            pts.len()
        )));
    }
    // trapezoid weights over the (possibly nonuniform) sample grid
    let m = pts.len();
    let ws: Vec<f64> = (0..m)
        .map(|i| {
            let lo = if i > 0 { pts[i - 1].0 } else { pts[i].0 };
            let hi = if i + 1 < m { pts[i + 1].0 } else { pts[i].0 };
            0.5 * (hi - lo)
        })
        .collect();
    let w_sum: f64 = ws.iter().sum();
    if w_sum <= 0.0 {
        return Err(CoemitError::DomainError("degenerate fit grid".into()));
    }
    let gamma = curve.scenario.lindblad.gamma;
    let gamma_p = curve.scenario.lindblad.gamma_p;
    let r = gamma + gamma_p;
    match model {
        FitModel::InitialDrop => {
            // linear in a: closed-form least squares
            let (mut num, mut den) = (0.0, 0.0);
            for (&(t, g), &w) in pts.iter().zip(&ws) {
                let e = (-r * t).exp();
                num += w * e * (1.0 - g);
                den += w * e * e;
            }
            if den < 1e-300 {
                return Err(CoemitError::DomainError("degenerate fit design".into()));
            }
            let a = num / den;
            let ssr: f64 = pts
                .iter()
                .zip(&ws)
                .map(|(&(t, g), &w)| w * (g - g2_initial_drop(t, a, gamma, gamma_p)).powi(2))
                .sum();
            let sigma2 = ssr / w_sum;
            Ok(FitResult {
                model,
                params: vec![("a".into(), a)],
                residual_norm: (ssr / w_sum).sqrt(),
                covariance_diag: vec![sigma2 / den],
            })
        }
        FitModel::Ppd => {
            let f = |gd: f64, t: f64| 1.0 - 0.5 * ((-r * t).exp() - (-(r + gd) * t).exp());
            let ssr_of = |gd: f64| -> f64 {
                pts.iter()
                    .zip(&ws)
                    .map(|(&(t, g), &w)| w * (g - f(gd, t)).powi(2))
                    .sum()
            };
            let mut best: Option<(f64, f64)> = None;
            for start in [0.1 * r, r, 10.0 * r] {
                let mut gd = start;
                let mut lambda = 1e-3;
                let mut converged = false;
                for _ in 0..200 {
                    // Gauss–Newton with Levenberg damping on the single
                    // parameter; ∂f/∂γ_d = −½ t e^{−(r+γ_d)t}
                    let (mut jtj, mut jtr) = (0.0, 0.0);
                    for (&(t, g), &w) in pts.iter().zip(&ws) {
                        let jac = -0.5 * t * (-(r + gd) * t).exp();
                        jtj += w * jac * jac;
                        jtr += w * jac * (g - f(gd, t));
                    }
                    let mut step = jtr / (jtj * (1.0 + lambda)).max(1e-300);
                    let ssr0 = ssr_of(gd);
                    let mut accepted = false;
                    for _ in 0..30 {
                        let cand = (gd + step).max(1e-12);
                        if ssr_of(cand) <= ssr0 {
                            let rel = ((cand - gd) / gd.max(1e-300)).abs();
                            gd = cand;
                            lambda = (lambda * 0.3).max(1e-12);
                            accepted = true;
                            if rel < 1e-12 {
                                converged = true;
                            }
                            break;
                        }
                        step *= 0.5;
                        lambda *= 3.0;
                    }
                    if !accepted || converged {
                        converged = converged || accepted;
                        break;
                    }
                }
                let _ = converged;
                let ssr = ssr_of(gd);
                if best.map_or(true, |(_, s)| ssr < s) {
                    best = Some((gd, ssr));
                }
            }
            let (gd, ssr) = best.ok_or_else(|| {
                CoemitError::NonConvergence("PPD fit found no acceptable minimum".into())
            })?;
            let jtj: f64 = pts
                .iter()
                .zip(&ws)
                .map(|(&(t, _), &w)| w * (0.5 * t * (-(r + gd) * t).exp()).powi(2))
                .sum();
            let sigma2 = ssr / w_sum;
            Ok(FitResult {
                model,
                params: vec![("gamma_d".into(), gd)],
                residual_norm: (ssr / w_sum).sqrt(),
                covariance_diag: vec![sigma2 / jtj.max(1e-300)],
            })
        }
    }
}

/// Exact Markovian g²(τ) of the superradiant geometry via quantum
/// regression; the dephasing-free and PPD references of the paper's panels.
pub fn superradiant_g2_lindblad(spec: &LindbladSpec, grids: &Grids) -> Result<G2Curve> {
    if spec.decay_mode != DecayMode::Superradiant {
        return Err(CoemitError::DomainError(
            "superradiant reference needs Superradiant decay mode".into(),
        ));
    }
    let sc = Scenario {
        lindblad: spec.clone(),
        phonons: None,
        ppd_extra: 0.0,
        geometry: Geometry::Superradiant,
        grids: *grids,
        pt: PtSettings::default(),
    };
    g2_curve_regression(&sc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{g2_curve_regression, NumericsReport};

    fn synthetic_curve(g2_of: impl Fn(f64) -> f64, gamma: f64, gamma_p: f64) -> G2Curve {
        let tau: Vec<f64> = (0..400).map(|i| i as f64 * 5.0).collect();
        let g2 = tau.iter().map(|t| g2_of(*t)).collect();
        let sc = Scenario {
            lindblad: LindbladSpec {
                gamma,
                gamma_p,
                gamma_d: 0.0,
                decay_mode: DecayMode::Independent,
            },
            phonons: None,
            ppd_extra: 0.0,
            geometry: Geometry::MeasurementInduced,
            grids: Grids::new(5.0, 0.0, 2000.0),
            pt: PtSettings::default(),
        };
        G2Curve {
            tau,
            g2,
            i0: 0.5,
            scenario: sc,
            numerics: NumericsReport {
                dt: 5.0,
                svd_threshold: 1e-8,
                max_bond: 1,
                max_bond_used: 1,
                pt_converged: true,
            },
        }
    }

    #[test]
    fn ppd_formula_limits() {
        let g = 1.0 / 1760.0;
        assert!((g2_ppd(0.0, g, g, 1e-3).unwrap() - 1.0).abs() < 1e-14);
        assert!((g2_ppd(1e7, g, g, 1e-3).unwrap() - 1.0).abs() < 1e-12);
        for t in [0.0, 10.0, 500.0, 4000.0] {
            assert!((g2_ppd(t, g, g, 0.0).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((g2_ppd(-50.0, g, g, 1e-3).unwrap() - g2_ppd(50.0, g, g, 1e-3).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn ppd_formula_rejects_unequal_rates() {
        assert!(matches!(
            g2_ppd(1.0, 0.01, 0.02, 1e-3),
            Err(CoemitError::DomainError(_))
        ));
    }

    #[test]
    fn initial_drop_examples() {
        assert!((g2_initial_drop(0.0, 0.0854, 0.01, 0.01) - (1.0 - 0.0854)).abs() < 1e-14);
        assert!((g2_initial_drop(1e6, 0.0854, 0.01, 0.01) - 1.0).abs() < 1e-12);
        assert_eq!(g2_initial_drop(3.0, 0.0, 0.01, 0.01), 1.0);
    }

    #[test]
    fn eq16_matches_lindblad_ppd_simulation() {
        let g = 1.0 / 1760.0;
        let gd = 1.0 / 3900.0;
        let sc = Scenario {
            lindblad: LindbladSpec {
                gamma: g,
                gamma_p: g,
                gamma_d: gd,
                decay_mode: DecayMode::Independent,
            },
            phonons: None,
            ppd_extra: 0.0,
            geometry: Geometry::MeasurementInduced,
            grids: Grids::new(2.0, 0.0, 6000.0),
            pt: PtSettings::default(),
        };
        let curve = g2_curve_regression(&sc).unwrap();
        for (t, got) in curve.tau.iter().zip(&curve.g2) {
            let expect = g2_ppd(*t, g, g, gd).unwrap();
            assert!((got - expect).abs() < 1e-8, "tau {t}: {got} vs {expect}");
        }
    }

    #[test]
    fn fits_recover_generating_parameters() {
        let g = 1.0 / 1760.0;
        let a = 0.0854;
        let curve = synthetic_curve(|t| g2_initial_drop(t, a, g, g), g, g);
        let fit = fit_model(&curve, FitModel::InitialDrop, (0.0, 2000.0)).unwrap();
        assert!((fit.param("a").unwrap() - a).abs() < 1e-6);
        assert!(fit.residual_norm < 1e-12);

        let gd = 1.0 / 3900.0;
        let curve = synthetic_curve(|t| g2_ppd(t, g, g, gd).unwrap(), g, g);
        let fit = fit_model(&curve, FitModel::Ppd, (0.0, 2000.0)).unwrap();
        assert!(
            (fit.param("gamma_d").unwrap() / gd - 1.0).abs() < 1e-6,
            "gamma_d = {}",
            fit.param("gamma_d").unwrap()
        );
    }

    #[test]
    fn fit_window_needs_samples() {
        let g = 1.0 / 1760.0;
        let curve = synthetic_curve(|_| 1.0, g, g);
        assert!(matches!(
            fit_model(&curve, FitModel::InitialDrop, (0.0, 20.0)),
            Err(CoemitError::DomainError(_))
        ));
    }

    #[test]
    fn ppd_anti_dip_deepens_with_gamma_d() {
        let g = 1.0 / 1760.0;
        let mut last_min = 1.0;
        for gd in [1e-4, 3e-4, 1e-3, 3e-3] {
            let m = (0..60000)
                .map(|i| g2_ppd(i as f64 * 0.5, g, g, gd).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(m < last_min, "gamma_d {gd}: min {m} not below {last_min}");
            last_min = m;
        }
    }

    #[test]
    fn superradiant_reference_endpoints() {
        let g = 1.0 / 1760.0;
        let grids = Grids::new(10.0, 0.0, 8000.0);
        let equal = LindbladSpec {
            gamma: g,
            gamma_p: g,
            gamma_d: 0.0,
            decay_mode: DecayMode::Superradiant,
        };
        let c = superradiant_g2_lindblad(&equal, &grids).unwrap();
        assert!((c.g2[0] - 1.0).abs() < 1e-6);

        let pumped = LindbladSpec {
            gamma_p: 10.0 * g,
            ..equal.clone()
        };
        let c = superradiant_g2_lindblad(&pumped, &grids).unwrap();
        assert!(c.g2[0] < 1.0);

        let weak = LindbladSpec {
            gamma_p: 0.1 * g,
            ..equal.clone()
        };
        let bare = superradiant_g2_lindblad(&weak, &grids).unwrap();
        let dephased = superradiant_g2_lindblad(
            &LindbladSpec {
                gamma_d: 1.0 / 199.0,
                ..weak.clone()
            },
            &grids,
        )
        .unwrap();
        assert!(bare.g2[0] > 1.0);
        assert!(dephased.g2[0] > 1.0 && dephased.g2[0] < bare.g2[0]);
    }

    #[test]
    fn superradiant_reference_rejects_independent_mode() {
        let spec = LindbladSpec {
            gamma: 0.01,
            gamma_p: 0.01,
            gamma_d: 0.0,
            decay_mode: DecayMode::Independent,
        };
        assert!(superradiant_g2_lindblad(&spec, &Grids::new(1.0, 0.0, 100.0)).is_err());
    }
}
