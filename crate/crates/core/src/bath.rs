//! Spectral densities, bath correlation functions, discretized
//! influence-functional kernels, and the independent-boson decoherence
//! oracle.
//!
//! Frequencies are rad/ps throughout; J(ω) carries units of rad/ps so that
//! ∫dω J/ω² is dimensionless.

use crate::error::{CoemitError, Result};
use crate::linalg::C64;
use crate::quad::{coth, integrate};
use crate::units::{thermal_energy_mev, HBAR_MEV_PS};
use rayon::prelude::*;

const HBAR_SI: f64 = 1.054571817e-34; // J·s
const EV_SI: f64 = 1.602176634e-19; // J

#[derive(Debug, Clone, PartialEq)]
pub enum SdKind {
    /// Deformation-potential coupling to LA phonons, superohmic (∝ ω³).
    DeformationPotential {
        /// kg/m³
        mass_density: f64,
        /// m/s
        sound_speed: f64,
        /// electron deformation potential, eV
        d_e: f64,
        /// hole deformation potential, eV
        d_h: f64,
        /// electron cutoff, rad/ps
        omega_e: f64,
        /// hole cutoff, rad/ps
        omega_h: f64,
    },
    /// J(ω) = α ω exp(−ω²/ω_c²), ω_c in rad/ps.
    Ohmic { alpha: f64, omega_c: f64 },
    /// Piecewise-linear samples (ω ascending); zero outside the table.
    Tabulated { omega: Vec<f64>, j: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    pub kind: SdKind,
    /// Bath temperature, K.
    pub temperature: f64,
}

impl SpectralDensity {
    /// InGaAs deformation-potential preset ("inGaAs-deformation").
    pub fn ingaas_deformation(temperature: f64) -> Self {
        SpectralDensity {
            kind: SdKind::DeformationPotential {
                mass_density: 5370.0,
                sound_speed: 5110.0,
                d_e: 7.0,
                d_h: -3.5,
                omega_e: 2.9 / HBAR_MEV_PS,
                omega_h: 4.4 / HBAR_MEV_PS,
            },
            temperature,
        }
    }

    /// Ohmic preset ("ohmic"): α = 7.5·10⁻⁵, ħω_c = 4 meV.
    pub fn ohmic_default(temperature: f64) -> Self {
        SpectralDensity {
            kind: SdKind::Ohmic {
                alpha: 7.5e-5,
                omega_c: 4.0 / HBAR_MEV_PS,
            },
            temperature,
        }
    }

    pub fn from_preset(name: &str, temperature: f64) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ingaas-deformation" => Ok(Self::ingaas_deformation(temperature)),
            "ohmic" => Ok(Self::ohmic_default(temperature)),
            other => Err(CoemitError::Format(format!("unknown SD preset {other:?}"))),
        }
    }

    /// J(ω) at ω ≥ 0 (rad/ps).
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 {
            return Err(CoemitError::NegativeFrequency(omega));
        }
        Ok(self.eval_unchecked(omega))
    }

    fn eval_unchecked(&self, omega: f64) -> f64 {
        match &self.kind {
            SdKind::DeformationPotential {
                mass_density,
                sound_speed,
                d_e,
                d_h,
                omega_e,
                omega_h,
            } => {
                let d = d_e * EV_SI * (-omega * omega / (omega_e * omega_e)).exp()
                    - d_h * EV_SI * (-omega * omega / (omega_h * omega_h)).exp();
                let omega_si = omega * 1e12;
                let pref = 4.0 * std::f64::consts::PI.powi(3)
                    * mass_density
                    * HBAR_SI
                    * sound_speed.powi(5);
                omega_si.powi(3) * d * d / pref * 1e-12
            }
            SdKind::Ohmic { alpha, omega_c } => {
                alpha * omega * (-omega * omega / (omega_c * omega_c)).exp()
            }
            SdKind::Tabulated { omega: om, j } => {
                if om.is_empty() || omega < om[0] || omega > *om.last().unwrap() {
                    return 0.0;
                }
                let idx = om.partition_point(|x| *x <= omega).min(om.len() - 1);
                if idx == 0 {
                    return j[0];
                }
                let (x0, x1) = (om[idx - 1], om[idx]);
                let (y0, y1) = (j[idx - 1], j[idx]);
                if x1 == x0 {
                    y0
                } else {
                    y0 + (y1 - y0) * (omega - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Maximum of J on a scan grid; used for the quadrature cutoff.
    pub fn max_j(&self) -> f64 {
        (0..20000)
            .map(|i| self.eval_unchecked(i as f64 * 0.01))
            .fold(0.0, f64::max)
    }

    /// Upper integration limit: smallest ω past the maximum with
    /// J(ω) < 10⁻¹⁴ · max J.
    pub fn omega_max(&self) -> f64 {
        let jmax = self.max_j();
        if jmax <= 0.0 {
            return 0.0;
        }
        let mut past_peak = false;
        for i in 1..40000 {
            let w = i as f64 * 0.01;
            let j = self.eval_unchecked(w);
            if j > 0.5 * jmax {
                past_peak = true;
            }
            if past_peak && j < 1e-14 * jmax {
                return w;
            }
        }
        400.0
    }

    /// coth(ħω/2k_BT); 1 at T = 0.
    fn thermal_factor(&self, omega: f64) -> f64 {
        if self.temperature <= 0.0 {
            return 1.0;
        }
        let x = HBAR_MEV_PS * omega / (2.0 * thermal_energy_mev(self.temperature));
        coth(x)
    }

    /// Canonical text form for cache keys; full float precision.
    pub fn fingerprint(&self) -> String {
        match &self.kind {
            SdKind::DeformationPotential {
                mass_density,
                sound_speed,
                d_e,
                d_h,
                omega_e,
                omega_h,
            } => format!(
                "def-pot rho={mass_density:e} cs={sound_speed:e} De={d_e:e} Dh={d_h:e} we={omega_e:e} wh={omega_h:e} T={:e}",
                self.temperature
            ),
            SdKind::Ohmic { alpha, omega_c } => {
                format!("ohmic alpha={alpha:e} wc={omega_c:e} T={:e}", self.temperature)
            }
            SdKind::Tabulated { omega, j } => {
                let pts: Vec<String> = omega
                    .iter()
                    .zip(j)
                    .map(|(w, v)| format!("{w:e}:{v:e}"))
                    .collect();
                format!("tab {} T={:e}", pts.join(","), self.temperature)
            }
        }
    }
}

const QUAD_TOL: f64 = 1e-8;

/// Finite-temperature bath autocorrelation
/// C(t) = ∫₀^∞ dω J(ω)[coth(ħω/2k_BT) cos ωt − i sin ωt].
pub fn bath_correlation(sd: &SpectralDensity, t: f64) -> Result<C64> {
    let wmax = sd.omega_max();
    if wmax == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    integrate(
        |w| {
            let j = sd.eval_unchecked(w);
            C64::new(
                j * sd.thermal_factor(w) * (w * t).cos(),
                -j * (w * t).sin(),
            )
        },
        1e-12,
        wmax,
        QUAD_TOL,
    )
}

/// Discretized influence-functional coefficients η on a Δt grid.
///
/// eta[0] is the on-site (time-ordered triangle cell) coefficient,
/// eta[d] couples steps separated by d. The influence functional is
/// exp(−Σ_{k≥k'} (s_{μk}−s_{νk})(η_{k−k'} s_{μk'} − η*_{k−k'} s_{νk'}))
/// with s ∈ {0, 1} the excited-state occupation.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    pub dt: f64,
    pub n_steps: usize,
    pub eta: Vec<C64>,
    /// |η| just past the truncation horizon, as a truncation error proxy.
    pub truncation_estimate: f64,
    pub coupling_eigenvalues: [f64; 2],
}

fn eta_onsite(sd: &SpectralDensity, dt: f64, wmax: f64) -> Result<C64> {
    // ∫dω J/ω² [coth·(1−cos ωΔt) − i(ωΔt − sin ωΔt)] (triangle cell)
    integrate(
        |w| {
            let j = sd.eval_unchecked(w);
            let jw2 = j / (w * w);
            C64::new(
                jw2 * sd.thermal_factor(w) * (1.0 - (w * dt).cos()),
                -jw2 * (w * dt - (w * dt).sin()),
            )
        },
        1e-12,
        wmax,
        QUAD_TOL,
    )
}

fn eta_separated(sd: &SpectralDensity, dt: f64, sep: usize, wmax: f64) -> Result<C64> {
    // ∫dω J/ω² · 4 sin²(ωΔt/2) [coth·cos(ωΔt·d) − i sin(ωΔt·d)]
    let d = sep as f64;
    integrate(
        |w| {
            let j = sd.eval_unchecked(w);
            let s = (0.5 * w * dt).sin();
            let amp = j / (w * w) * 4.0 * s * s;
            C64::new(
                amp * sd.thermal_factor(w) * (w * dt * d).cos(),
                -amp * (w * dt * d).sin(),
            )
        },
        1e-12,
        wmax,
        QUAD_TOL,
    )
}

pub fn build_kernel(sd: &SpectralDensity, dt: f64, t_mem: f64) -> Result<MemoryKernel> {
    assert!(dt > 0.0 && t_mem >= dt);
    let n_steps = (t_mem / dt).ceil() as usize;
    let wmax = sd.omega_max();
    if wmax == 0.0 {
        return Ok(MemoryKernel {
            dt,
            n_steps,
            eta: vec![C64::new(0.0, 0.0); n_steps],
            truncation_estimate: 0.0,
            coupling_eigenvalues: [0.0, 1.0],
        });
    }
    let eta: Vec<C64> = (0..n_steps)
        .into_par_iter()
        .map(|sep| {
            if sep == 0 {
                eta_onsite(sd, dt, wmax)
            } else {
                eta_separated(sd, dt, sep, wmax)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let truncation_estimate = eta_separated(sd, dt, n_steps, wmax)?.norm();
    Ok(MemoryKernel {
        dt,
        n_steps,
        eta,
        truncation_estimate,
        coupling_eigenvalues: [0.0, 1.0],
    })
}

impl MemoryKernel {
    /// η for separation d, zero beyond the memory horizon.
    pub fn eta_at(&self, sep: usize) -> C64 {
        self.eta.get(sep).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn zero(dt: f64, n_steps: usize) -> Self {
        MemoryKernel {
            dt,
            n_steps,
            eta: vec![C64::new(0.0, 0.0); n_steps],
            truncation_estimate: 0.0,
            coupling_eigenvalues: [0.0, 1.0],
        }
    }
}

/// Independent-boson decoherence c(t)/c(0) on a time grid.
#[derive(Debug, Clone)]
pub struct IbmDecoherence {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
}

/// IBM decoherence exponent Φ(t) = ∫dω J_eff/ω² [coth·(1−cos ωt) + i sin ωt];
/// J_eff = 2J with `doubling` set (two identical baths acting on the
/// single-excitation manifold).
pub fn ibm_phi(sd: &SpectralDensity, doubling: bool, t: f64) -> Result<C64> {
    let wmax = sd.omega_max();
    let factor = if doubling { 2.0 } else { 1.0 };
    if wmax == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let phi = integrate(
        |w| {
            let jw2 = sd.eval_unchecked(w) / (w * w);
            C64::new(
                jw2 * sd.thermal_factor(w) * (1.0 - (w * t).cos()),
                jw2 * (w * t).sin(),
            )
        },
        1e-12,
        wmax,
        QUAD_TOL,
    )?;
    Ok(phi * factor)
}

/// Long-time plateau exponent Re Φ(∞) = ∫dω (J_eff/ω²) coth(ħω/2k_BT).
pub fn ibm_phi_infinity(sd: &SpectralDensity, doubling: bool) -> Result<f64> {
    let wmax = sd.omega_max();
    let factor = if doubling { 2.0 } else { 1.0 };
    if wmax == 0.0 {
        return Ok(0.0);
    }
    let phi = integrate(
        |w| {
            let jw2 = sd.eval_unchecked(w) / (w * w);
            C64::new(jw2 * sd.thermal_factor(w), 0.0)
        },
        1e-12,
        wmax,
        QUAD_TOL,
    )?;
    Ok(phi.re * factor)
}

pub fn ibm_decoherence(
    sd: &SpectralDensity,
    doubling: bool,
    grid: &[f64],
) -> Result<IbmDecoherence> {
    let values: Vec<C64> = grid
        .par_iter()
        .map(|t| ibm_phi(sd, doubling, *t).map(|phi| (-phi).exp()))
        .collect::<Result<Vec<_>>>()?;
    Ok(IbmDecoherence {
        times: grid.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deformation_sd_vanishes_at_zero() {
        let sd = SpectralDensity::ingaas_deformation(4.0);
        assert_eq!(sd.evaluate(0.0).unwrap(), 0.0);
        assert!(sd.evaluate(-1.0).is_err());
    }

    #[test]
    fn ohmic_value_at_cutoff() {
        let sd = SpectralDensity::ohmic_default(4.0);
        let wc = 4.0 / HBAR_MEV_PS;
        let expect = 7.5e-5 * wc * (-1.0_f64).exp();
        assert!((sd.evaluate(wc).unwrap() - expect).abs() < 1e-15 * expect.abs());
    }

    #[test]
    fn deformation_sd_matches_formula_oracle() {
        // independent re-evaluation of Eq. (15) at ħω = 2 meV in SI units
        let sd = SpectralDensity::ingaas_deformation(4.0);
        let hbar_si = 1.054571817e-34;
        let ev = 1.602176634e-19;
        let w = 2.0 / HBAR_MEV_PS; // rad/ps
        let w_si = w * 1e12;
        let we_si = 2.9 / HBAR_MEV_PS * 1e12;
        let wh_si = 4.4 / HBAR_MEV_PS * 1e12;
        let d = 7.0 * ev * (-w_si * w_si / (we_si * we_si)).exp()
            - (-3.5) * ev * (-w_si * w_si / (wh_si * wh_si)).exp();
        let pi = std::f64::consts::PI;
        let j_si = w_si.powi(3) * d * d / (4.0 * pi.powi(3) * 5370.0 * hbar_si * 5110.0_f64.powi(5));
        let j = j_si * 1e-12;
        let got = sd.evaluate(w).unwrap();
        assert!((got - j).abs() < 1e-12 * j, "got {got}, expected {j}");
    }

    #[test]
    fn superohmic_low_frequency_scaling() {
        let sd = SpectralDensity::ingaas_deformation(4.0);
        let r1 = sd.evaluate(1e-3).unwrap() / 1e-9;
        let r2 = sd.evaluate(1e-4).unwrap() / 1e-12;
        assert!((r1 / r2 - 1.0).abs() < 1e-4, "J/ω³ not constant at ω→0");
    }

    #[test]
    fn correlation_imaginary_part_vanishes_at_zero_time() {
        for sd in [
            SpectralDensity::ingaas_deformation(4.0),
            SpectralDensity::ohmic_default(4.0),
        ] {
            let c0 = bath_correlation(&sd, 0.0).unwrap();
            assert!(c0.im.abs() < 1e-10 * c0.re);
        }
    }

    #[test]
    fn correlation_decays() {
        for sd in [
            SpectralDensity::ingaas_deformation(4.0),
            SpectralDensity::ohmic_default(4.0),
        ] {
            let c0 = bath_correlation(&sd, 0.0).unwrap().norm();
            let c50 = bath_correlation(&sd, 50.0).unwrap().norm();
            assert!(c50 < 1e-3 * c0);
        }
    }

    #[test]
    fn zero_temperature_correlation_is_sd_integral() {
        let mut sd = SpectralDensity::ingaas_deformation(0.0);
        sd.temperature = 0.0;
        let c0 = bath_correlation(&sd, 0.0).unwrap();
        let direct = integrate(
            |w| C64::new(sd.eval_unchecked(w), 0.0),
            1e-12,
            sd.omega_max(),
            1e-10,
        )
        .unwrap();
        assert!((c0.re - direct.re).abs() < 1e-8 * direct.re);
    }

    #[test]
    fn zero_kernel_for_zero_sd() {
        let sd = SpectralDensity {
            kind: SdKind::Tabulated {
                omega: vec![0.0, 1.0, 2.0],
                j: vec![0.0, 0.0, 0.0],
            },
            temperature: 4.0,
        };
        let k = build_kernel(&sd, 0.1, 1.0).unwrap();
        assert!(k.eta.iter().all(|e| e.norm() == 0.0));
        assert_eq!(k.truncation_estimate, 0.0);
    }

    #[test]
    fn kernel_beyond_horizon_not_stored() {
        let sd = SpectralDensity::ingaas_deformation(4.0);
        let k = build_kernel(&sd, 0.5, 2.0).unwrap();
        assert_eq!(k.eta.len(), 4);
        assert_eq!(k.eta_at(10), C64::new(0.0, 0.0));
        assert!(k.truncation_estimate < k.eta[0].norm());
    }

    #[test]
    fn onsite_eta_matches_triangle_oracle() {
        // on-site cell: Re η₀₀ = ∫dω J/ω² coth·(1−cos ωΔt)
        let sd = SpectralDensity::ingaas_deformation(4.0);
        let dt = 0.2;
        let k = build_kernel(&sd, dt, 1.0).unwrap();
        let oracle = integrate(
            |w| {
                let jw2 = sd.eval_unchecked(w) / (w * w);
                C64::new(jw2 * sd.thermal_factor(w) * (1.0 - (w * dt).cos()), 0.0)
            },
            1e-12,
            sd.omega_max(),
            1e-10,
        )
        .unwrap();
        assert!((k.eta[0].re - oracle.re).abs() < 1e-8 * oracle.re.abs());
    }

    #[test]
    fn kernel_subcell_refinement_is_exact() {
        // integration domains add exactly under bisection of the grid:
        // η₀(Δt) = 2η₀(Δt/2) + η₁(Δt/2);  η_d(Δt) = η_{2d−1} + 2η_{2d} + η_{2d+1}
        let sd = SpectralDensity::ingaas_deformation(4.0);
        let dt = 0.2;
        let coarse = build_kernel(&sd, dt, 2.0).unwrap();
        let fine = build_kernel(&sd, dt / 2.0, 2.0 + dt).unwrap();
        let scale = coarse.eta[0].norm();
        let lhs = coarse.eta[0];
        let rhs = fine.eta[0] * 2.0 + fine.eta[1];
        assert!((lhs - rhs).norm() < 1e-7 * scale);
        for d in 1..5 {
            let lhs = coarse.eta[d];
            let rhs = fine.eta[2 * d - 1] + fine.eta[2 * d] * 2.0 + fine.eta[2 * d + 1];
            assert!((lhs - rhs).norm() < 1e-7 * scale);
        }
    }

    #[test]
    fn kernel_telescopes_to_ibm_exponent() {
        // Σ_{k≥k'} Re η over n steps equals Re Φ(nΔt): the discretized
        // influence functional is exact for pure dephasing
        let sd = SpectralDensity::ingaas_deformation(4.0);
        let dt = 0.1;
        let n = 20;
        let k = build_kernel(&sd, dt, n as f64 * dt).unwrap();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..=i {
                sum += k.eta_at(i - j).re;
            }
        }
        let phi = ibm_phi(&sd, false, n as f64 * dt).unwrap();
        assert!((sum - phi.re).abs() < 1e-8, "sum {sum} vs phi {}", phi.re);
    }

    #[test]
    fn ibm_starts_at_unity() {
        let sd = SpectralDensity::ingaas_deformation(4.0);
        let d = ibm_decoherence(&sd, true, &[0.0]).unwrap();
        assert!((d.values[0] - C64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn superohmic_plateau_in_unit_interval() {
        let sd = SpectralDensity::ingaas_deformation(4.0);
        let d = ibm_decoherence(&sd, true, &[5.0, 50.0]).unwrap();
        let plateau = (-ibm_phi_infinity(&sd, true).unwrap()).exp();
        assert!(plateau > 0.0 && plateau < 1.0);
        assert!((d.values[1].norm() - plateau).abs() < 1e-4);
        // plateau effectively reached within ~5 ps
        assert!((d.values[0].norm() - plateau).abs() < 5e-3);
    }

    #[test]
    fn ohmic_coherence_decays_to_zero() {
        let sd = SpectralDensity::ohmic_default(4.0);
        let d = ibm_decoherence(&sd, true, &[2000.0, 10000.0]).unwrap();
        assert!(d.values[0].norm() < 0.7);
        assert!(d.values[1].norm() < 0.1);
    }

    #[test]
    fn doubling_doubles_exponent() {
        let sd = SpectralDensity::ingaas_deformation(4.0);
        let p1 = ibm_phi(&sd, false, 3.0).unwrap();
        let p2 = ibm_phi(&sd, true, 3.0).unwrap();
        assert!((p2 - p1 * 2.0).norm() < 1e-12);
    }
}
