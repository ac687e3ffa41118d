//! Acceptance criteria, one test per criterion. Each test prints a single
//! pass/fail line (visible with --nocapture) and panics on failure.
//!
//! Criteria 5, 6 and 8 share the two full-length phonon curves, computed
//! once per process behind OnceLocks. Criterion 9 repeats the phonon
//! criteria at tightened numerics and is ignored by default: it runs for
//! hours and belongs in a nightly job, not the per-commit suite.

use std::sync::OnceLock;

use coemit::analytic::{fit_model, g2_ppd, FitModel};
use coemit::bath::{build_kernel, ibm_phi, ibm_phi_infinity, MemoryKernel, SpectralDensity};
use coemit::dynamics::{
    coherence_trajectory, extrapolate_dt, g2_curve, g2_curve_regression, g2_zero, G2Curve,
    Geometry, Grids, PtSettings, Scenario,
};
use coemit::linalg::C64;
use coemit::postprocess::{compare_curves, convolve_irf, InstrumentResponse};
use coemit::pt::{build_pt, contract_pt_full};
use coemit::quantum::{
    lindblad_generator, steady_state, DecayMode, DensityMatrix, LindbladSpec,
};

/// γ = γ_p = (1.76 ns)⁻¹ throughout.
const GAMMA: f64 = 1.0 / 1760.0;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn report(label: &str, r: Result<(), String>) {
    match r {
        Ok(()) => println!("{label}: pass"),
        Err(m) => {
            println!("{label}: FAIL ({m})");
            panic!("{label}: {m}");
        }
    }
}

fn markov_scenario(geometry: Geometry, gamma_p: f64, gamma_d: f64) -> Scenario {
    let decay_mode = match geometry {
        Geometry::MeasurementInduced => DecayMode::Independent,
        Geometry::Superradiant => DecayMode::Superradiant,
    };
    Scenario {
        lindblad: LindbladSpec {
            gamma: GAMMA,
            gamma_p,
            gamma_d,
            decay_mode,
        },
        phonons: None,
        ppd_extra: 0.0,
        geometry,
        grids: Grids::new(2.0, 0.0, 6000.0),
        pt: PtSettings::default(),
    }
}

/// Full-length single-photon-coincidence scenario: exact phonon treatment,
/// measurement-induced geometry, grids dense enough near τ_max for the
/// 240 ps IRF of criterion 8.
fn spc_scenario(sd: SpectralDensity) -> Scenario {
    Scenario {
        lindblad: LindbladSpec {
            gamma: GAMMA,
            gamma_p: GAMMA,
            gamma_d: 0.0,
            decay_mode: DecayMode::Independent,
        },
        phonons: Some(sd),
        ppd_extra: 0.0,
        geometry: Geometry::MeasurementInduced,
        grids: Grids {
            dt: 0.2,
            t_settle: 0.0,
            tau_fine_max: 20.0,
            tau_max: 6000.0,
            coarsen: 1.003,
        },
        pt: PtSettings {
            t_mem: 4.0,
            svd_threshold: 1e-8,
            max_bond: 256,
        },
    }
}

static INGAAS_CURVE: OnceLock<G2Curve> = OnceLock::new();
static OHMIC_CURVE: OnceLock<G2Curve> = OnceLock::new();

fn ingaas_curve() -> &'static G2Curve {
    INGAAS_CURVE.get_or_init(|| {
        g2_curve(&spc_scenario(SpectralDensity::ingaas_deformation(4.0)))
            .expect("InGaAs SPC curve")
    })
}

fn ohmic_curve() -> &'static G2Curve {
    OHMIC_CURVE.get_or_init(|| {
        g2_curve(&spc_scenario(SpectralDensity::ohmic_default(4.0))).expect("ohmic SPC curve")
    })
}

/// Independent path-sum oracle, written out from the discretized influence
/// functional itself rather than reusing the library's brute-force helper:
///   I[path] = exp(−Σ_{k≥k'} (s_{μk}−s_{νk})(η_{k−k'} s_{μk'} − η*_{k−k'} s_{νk'}))
/// with path index α = 2s_μ + s_ν, step 0 the fastest digit.
fn path_sum_oracle(kernel: &MemoryKernel, n: usize) -> Vec<C64> {
    let occ = |a: usize| (((a >> 1) & 1) as f64, (a & 1) as f64);
    (0..4usize.pow(n as u32))
        .map(|code| {
            let mut expo = C64::new(0.0, 0.0);
            for k in 0..n {
                let (mu_k, nu_k) = occ((code >> (2 * k)) & 3);
                for kp in 0..=k {
                    let (mu_p, nu_p) = occ((code >> (2 * kp)) & 3);
                    let eta = kernel.eta_at(k - kp);
                    expo += (eta * mu_p - eta.conj() * nu_p) * (mu_k - nu_k);
                }
            }
            (-expo).exp()
        })
        .collect()
}

#[test]
fn criterion_1_brute_force_oracle() {
    let run = || -> Result<(), String> {
        let kernels = [
            build_kernel(&SpectralDensity::ingaas_deformation(4.0), 0.1, 0.5)
                .map_err(|e| e.to_string())?,
            build_kernel(&SpectralDensity::ohmic_default(4.0), 0.1, 0.5)
                .map_err(|e| e.to_string())?,
        ];
        for kernel in &kernels {
            for n in 1..=4 {
                let pt = build_pt(kernel, n, 1e-12, 64).map_err(|e| e.to_string())?;
                let got = contract_pt_full(&pt, n).map_err(|e| e.to_string())?;
                let oracle = path_sum_oracle(kernel, n);
                for (i, (g, o)) in got.iter().zip(&oracle).enumerate() {
                    check(
                        (g - o).norm() < 1e-9,
                        format!("n = {n} path {i}: PT {g} vs oracle {o}"),
                    )?;
                }
            }
        }
        Ok(())
    };
    report("criterion 1 (PT vs path-sum oracle, n <= 4)", run());
}

#[test]
fn criterion_2_markovian_cross_validation() {
    let run = || -> Result<(), String> {
        for geometry in [Geometry::MeasurementInduced, Geometry::Superradiant] {
            for ratio in [0.1, 1.0, 10.0] {
                let sc = markov_scenario(geometry, ratio * GAMMA, 1.0 / 3900.0);
                let a = g2_curve(&sc).map_err(|e| e.to_string())?;
                let b = g2_curve_regression(&sc).map_err(|e| e.to_string())?;
                for i in 0..a.tau.len() {
                    check(
                        (a.g2[i] - b.g2[i]).abs() < 1e-8,
                        format!(
                            "{geometry:?} ratio {ratio} tau {}: pipeline {} vs regression {}",
                            a.tau[i], a.g2[i], b.g2[i]
                        ),
                    )?;
                }
            }
        }
        Ok(())
    };
    report("criterion 2 (pipeline vs quantum regression)", run());
}

#[test]
fn criterion_3_ppd_formula_exactness() {
    let run = || -> Result<(), String> {
        let gd = 1.0 / 3900.0;
        let sc = markov_scenario(Geometry::MeasurementInduced, GAMMA, gd);
        let curve = g2_curve(&sc).map_err(|e| e.to_string())?;
        for (t, got) in curve.tau.iter().zip(&curve.g2) {
            let expect = g2_ppd(*t, GAMMA, GAMMA, gd).map_err(|e| e.to_string())?;
            check(
                (got - expect).abs() < 1e-8,
                format!("tau {t}: simulated {got} vs Eq. (16) {expect}"),
            )?;
        }
        Ok(())
    };
    report("criterion 3 (Eq. (16) exactness)", run());
}

fn ibm_trajectory(sd: &SpectralDensity, dt: f64, n: usize, threshold: f64) -> Vec<(f64, C64)> {
    let sc = Scenario {
        lindblad: LindbladSpec {
            gamma: 0.0,
            gamma_p: 0.0,
            gamma_d: 0.0,
            decay_mode: DecayMode::Independent,
        },
        phonons: Some(sd.clone()),
        ppd_extra: 0.0,
        geometry: Geometry::MeasurementInduced,
        grids: Grids::new(dt, 0.0, 20.0),
        pt: PtSettings {
            t_mem: 6.0,
            svd_threshold: threshold,
            max_bond: 256,
        },
    };
    coherence_trajectory(&sc, &DensityMatrix::psi_s(0.0), n).expect("IBM trajectory")
}

/// Criterion 4 body, reused by the numerics-robustness sweep at tightened
/// settings. Returns the extrapolated trajectory for cross-comparison.
fn run_criterion_4(dt: f64, threshold: f64) -> Result<Vec<(f64, C64)>, String> {
    let sd = SpectralDensity::ingaas_deformation(4.0);
    let n = (20.0 / dt).round() as usize;
    let coarse = ibm_trajectory(&sd, dt, n, threshold);
    let fine = ibm_trajectory(&sd, dt / 2.0, 2 * n, threshold);
    let x = extrapolate_dt(&coarse, &fine, 1).map_err(|e| e.to_string())?;
    for &(t, c) in &x {
        let phi = ibm_phi(&sd, true, t).map_err(|e| e.to_string())?;
        let expect = 0.5 * (-phi.re).exp();
        check(
            (c.re - expect).abs() < 1e-3,
            format!("t {t}: c = {} vs doubled IBM {expect}", c.re),
        )?;
        check(c.im.abs() < 1e-6, format!("t {t}: Im c = {}", c.im))?;
    }
    let plateau = (-ibm_phi_infinity(&sd, true).map_err(|e| e.to_string())?).exp();
    check(
        plateau > 0.0 && plateau < 1.0,
        format!("plateau {plateau} outside (0, 1)"),
    )?;
    Ok(x)
}

#[test]
fn criterion_4_two_pt_ibm_decoherence() {
    report(
        "criterion 4 (two-PT c(t) vs doubled IBM)",
        run_criterion_4(0.5, 1e-8).map(|_| ()),
    );
}

/// Criterion 5 observables of an InGaAs SPC curve; shared with criterion 9.
fn check_criterion_5(curve: &G2Curve) -> Result<(f64, f64), String> {
    let min2 = curve
        .tau
        .iter()
        .zip(&curve.g2)
        .filter(|(t, _)| **t > 0.0 && **t <= 2.0)
        .map(|(_, g)| *g)
        .fold(f64::INFINITY, f64::min);
    let drop = 1.0 - min2;
    check(
        (drop - 0.10).abs() <= 0.03,
        format!("initial drop {drop:.4} outside 10% +- 3%"),
    )?;
    let last = *curve.g2.last().unwrap();
    check(
        (last - 1.0).abs() <= 0.01,
        format!("g2(6 ns) = {last} not within 1 +- 0.01"),
    )?;
    let fit_a = fit_model(curve, FitModel::InitialDrop, (1.0, 6000.0))
        .map_err(|e| e.to_string())?;
    let a = fit_a.param("a").unwrap();
    check(
        (a / 0.0854 - 1.0).abs() <= 0.15,
        format!("fitted a = {a:.4} outside 0.0854 +- 15%"),
    )?;
    let fit_gd = fit_model(curve, FitModel::Ppd, (1.0, 6000.0)).map_err(|e| e.to_string())?;
    let gd = fit_gd.param("gamma_d").unwrap();
    check(
        (1.0 / gd / 3900.0 - 1.0).abs() <= 0.15,
        format!("fitted 1/gamma_d = {:.1} ps outside 3900 ps +- 15%", 1.0 / gd),
    )?;
    Ok((a, gd))
}

#[test]
fn criterion_5_fig2a_observables() {
    report(
        "criterion 5 (Fig. 2(a) observables)",
        check_criterion_5(ingaas_curve()).map(|_| ()),
    );
}

/// Criterion 6 PPD-fit residuals; shared with criterion 9.
fn check_criterion_6(ohmic: &G2Curve, superohmic: &G2Curve) -> Result<(f64, f64), String> {
    let f_oh = fit_model(ohmic, FitModel::Ppd, (1.0, 6000.0)).map_err(|e| e.to_string())?;
    let f_sup = fit_model(superohmic, FitModel::Ppd, (1.0, 6000.0)).map_err(|e| e.to_string())?;
    check(
        f_oh.residual_norm < 1e-2,
        format!("ohmic PPD-fit RMS {} >= 1e-2", f_oh.residual_norm),
    )?;
    check(
        f_sup.residual_norm > 3.0 * f_oh.residual_norm,
        format!(
            "superohmic RMS {} not above 3x ohmic RMS {}",
            f_sup.residual_norm, f_oh.residual_norm
        ),
    )?;
    Ok((f_oh.residual_norm, f_sup.residual_norm))
}

#[test]
fn criterion_6_spectral_density_discrimination() {
    report(
        "criterion 6 (ohmic vs superohmic PPD fits)",
        check_criterion_6(ohmic_curve(), ingaas_curve()).map(|_| ()),
    );
}

#[test]
fn criterion_7_superradiant_orderings() {
    let run = || -> Result<(), String> {
        let g2_at = |ratio: f64, gamma_d: f64| -> Result<f64, String> {
            let spec = LindbladSpec {
                gamma: GAMMA,
                gamma_p: ratio * GAMMA,
                gamma_d,
                decay_mode: DecayMode::Superradiant,
            };
            let l = lindblad_generator(&spec).map_err(|e| e.to_string())?;
            let rho = steady_state(&l).map_err(|e| e.to_string())?;
            g2_zero(&rho).map_err(|e| e.to_string())
        };
        let gd = 1.0 / 199.0;
        for ratio in [0.1, 1.0, 10.0] {
            let bare = g2_at(ratio, 0.0)?;
            let deph = g2_at(ratio, gd)?;
            match ratio {
                r if r < 1.0 => {
                    check(bare > 1.0, format!("ratio 0.1: bare g2(0) = {bare} <= 1"))?;
                    check(
                        deph < bare && deph > 1.0 - 1e-9,
                        format!("ratio 0.1: dephased {deph} not strictly between 1 and {bare}"),
                    )?;
                }
                r if r > 1.0 => {
                    check(bare < 1.0, format!("ratio 10: bare g2(0) = {bare} >= 1"))?;
                    check(
                        deph > bare && deph < 1.0 + 1e-9,
                        format!("ratio 10: dephased {deph} not strictly between {bare} and 1"),
                    )?;
                }
                _ => {
                    check(
                        (bare - 1.0).abs() < 1e-6,
                        format!("ratio 1: bare g2(0) = {bare} not 1 +- 1e-6"),
                    )?;
                    check(
                        (deph - 1.0).abs() < 1e-6,
                        format!("ratio 1: dephased g2(0) = {deph} not 1 +- 1e-6"),
                    )?;
                }
            }
        }
        Ok(())
    };
    report("criterion 7 (superradiant g2(0) orderings)", run());
}

#[test]
fn criterion_8_irf_convolution() {
    let run = || -> Result<(), String> {
        let spc = ingaas_curve();
        let irf = InstrumentResponse::new(240.0).map_err(|e| e.to_string())?;
        let conv = convolve_irf(spc, &irf).map_err(|e| e.to_string())?;
        let min_interior = conv.g2[1..].iter().cloned().fold(f64::INFINITY, f64::min);
        check(
            min_interior >= conv.g2[0] - 1e-6,
            format!(
                "convolved SPC has interior minimum {min_interior} below g2(0) = {}",
                conv.g2[0]
            ),
        )?;
        check(
            conv.g2[0] > 0.5 && conv.g2[0] < 1.0,
            format!("convolved SPC g2(0) = {} outside (0.5, 1)", conv.g2[0]),
        )?;

        // the experimenter's PPD description of the same data: Eq. (16)
        // with the fitted rate, sampled on the same grid
        let fit = fit_model(spc, FitModel::Ppd, (1.0, 6000.0)).map_err(|e| e.to_string())?;
        let gd = fit.param("gamma_d").unwrap();
        let ppd = G2Curve {
            tau: spc.tau.clone(),
            g2: spc
                .tau
                .iter()
                .map(|t| g2_ppd(*t, GAMMA, GAMMA, gd).unwrap())
                .collect(),
            i0: spc.i0,
            scenario: spc.scenario.clone(),
            numerics: spc.numerics,
        };
        let conv_ppd = convolve_irf(&ppd, &irf).map_err(|e| e.to_string())?;
        let (arg_min, min_ppd) = conv_ppd
            .g2
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, g)| {
                if *g < acc.1 {
                    (i, *g)
                } else {
                    acc
                }
            });
        check(
            arg_min > 0
                && arg_min < conv_ppd.g2.len() - 1
                && min_ppd < conv_ppd.g2[0] - 1e-3
                && min_ppd < conv_ppd.g2.last().unwrap() - 1e-3,
            format!(
                "convolved PPD lost its interior minimum: min {min_ppd} at index {arg_min}, \
                 endpoints {} and {}",
                conv_ppd.g2[0],
                conv_ppd.g2.last().unwrap()
            ),
        )?;
        Ok(())
    };
    report("criterion 8 (240 ps IRF dip survival)", run());
}

#[test]
#[ignore = "numerics robustness sweep takes hours; run in the nightly job"]
fn criterion_9_numerics_robustness() {
    let run = || -> Result<(), String> {
        // criterion 4 at halved dt and threshold 1e-10
        let base = run_criterion_4(0.5, 1e-8)?;
        let tight = run_criterion_4(0.25, 1e-10)?;
        for (t, c) in &base {
            let other = tight
                .iter()
                .find(|(tt, _)| (tt - t).abs() < 1e-9)
                .ok_or_else(|| format!("no tightened sample at t = {t}"))?;
            check(
                (c - other.1).norm() < 1e-2,
                format!("criterion 4 shifted by {} at t = {t}", (c - other.1).norm()),
            )?;
        }

        // criteria 5 and 6 at dt = 0.1, threshold 1e-10
        let tighten = |mut sc: Scenario| {
            sc.grids.dt = 0.1;
            sc.pt.svd_threshold = 1e-10;
            sc
        };
        let sup_ref = ingaas_curve();
        let oh_ref = ohmic_curve();
        let sup = g2_curve(&tighten(spc_scenario(SpectralDensity::ingaas_deformation(4.0))))
            .map_err(|e| e.to_string())?;
        let oh = g2_curve(&tighten(spc_scenario(SpectralDensity::ohmic_default(4.0))))
            .map_err(|e| e.to_string())?;
        for (name, a, b) in [("superohmic", sup_ref, &sup), ("ohmic", oh_ref, &oh)] {
            let (max_abs, _) =
                compare_curves(a, b, (0.0, 6000.0)).map_err(|e| e.to_string())?;
            check(
                max_abs < 1e-2,
                format!("{name} curve moved by {max_abs} under tightened numerics"),
            )?;
        }
        let (a_ref, gd_ref) = check_criterion_5(sup_ref)?;
        let (a, gd) = check_criterion_5(&sup)?;
        check(
            (a - a_ref).abs() < 1e-2 && (gd / gd_ref - 1.0).abs() < 1e-2,
            format!("fit drift: a {a_ref} -> {a}, gamma_d {gd_ref} -> {gd}"),
        )?;
        let (rms_oh_ref, rms_sup_ref) = check_criterion_6(oh_ref, sup_ref)?;
        let (rms_oh, rms_sup) = check_criterion_6(&oh, &sup)?;
        check(
            (rms_oh - rms_oh_ref).abs() < 1e-2 && (rms_sup - rms_sup_ref).abs() < 1e-2,
            format!(
                "residual drift: ohmic {rms_oh_ref} -> {rms_oh}, \
                 superohmic {rms_sup_ref} -> {rms_sup}"
            ),
        )?;
        Ok(())
    };
    report("criterion 9 (threshold and dt robustness)", run());
}
