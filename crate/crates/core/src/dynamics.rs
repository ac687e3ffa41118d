//! Observable pipeline: steady states under the full (phonon-dressed)
//! dynamics, emitted intensity, and g²(τ) for both geometries.
//!
//! A g² run is: settle to stationarity, insert the first detection pair
//! σ_S⁻·ρ·σ_S⁺ while keeping the environment bond indices intact, propagate
//! in τ recording Tr[σ_S⁺σ_S⁻ρ′(τ)], and normalize by I₀² (Eq. (2)). With
//! phonons absent an independent quantum-regression path computes the same
//! curve for cross-validation.

use crate::bath::{build_kernel, SpectralDensity};
use crate::error::{CoemitError, Result};
use crate::linalg::{max_abs_diff, C64};
use crate::pt::{build_pt, PtPropagator};
use crate::quantum::{
    lindblad_generator, propagator, sigma_s_minus, steady_state, DecayMode, DensityMatrix,
    LindbladSpec,
};

/// Emitter arrangement selecting which cooperative effect is probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Distant indistinguishable emitters; correlations are induced by the
    /// first detection event.
    MeasurementInduced,
    /// Co-located emitters decaying collectively through σ_S⁻ at rate 2γ.
    Superradiant,
}

/// Time grids of one g² run. All values in ps.
#[derive(Debug, Clone, Copy)]
pub struct Grids {
    /// Fine propagation step; every PT and every recorded point lives on
    /// multiples of it.
    pub dt: f64,
    /// Settling time before the first detection; raised internally to a
    /// scenario-dependent floor (see `g2_curve`).
    pub t_settle: f64,
    /// τ window recorded at every step.
    pub tau_fine_max: f64,
    /// Last recorded delay.
    pub tau_max: f64,
    /// Geometric spacing factor past `tau_fine_max`.
    pub coarsen: f64,
}

impl Grids {
    pub fn new(dt: f64, t_settle: f64, tau_max: f64) -> Self {
        Grids {
            dt,
            t_settle,
            tau_fine_max: 20.0,
            tau_max,
            coarsen: 1.2,
        }
    }
}

/// Process-tensor numerics.
#[derive(Debug, Clone, Copy)]
pub struct PtSettings {
    /// Memory horizon of the discretized influence functional, ps.
    pub t_mem: f64,
    pub svd_threshold: f64,
    pub max_bond: usize,
}

impl Default for PtSettings {
    fn default() -> Self {
        PtSettings {
            t_mem: 3.0,
            svd_threshold: crate::pt::DEFAULT_SVD_THRESHOLD,
            max_bond: crate::pt::DEFAULT_MAX_BOND,
        }
    }
}

/// Everything defining one g²(τ) computation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub lindblad: LindbladSpec,
    /// Per-emitter phonon environment (identical for both emitters).
    pub phonons: Option<SpectralDensity>,
    /// Additional PPD rate folded into the Markovian map only, ps⁻¹
    /// (combined SPC+PPD runs).
    pub ppd_extra: f64,
    pub geometry: Geometry,
    pub grids: Grids,
    pub pt: PtSettings,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.lindblad.validate()?;
        let consistent = matches!(
            (self.geometry, self.lindblad.decay_mode),
            (Geometry::MeasurementInduced, DecayMode::Independent)
                | (Geometry::Superradiant, DecayMode::Superradiant)
        );
        if !consistent {
            return Err(CoemitError::DomainError(format!(
                "geometry {:?} inconsistent with decay mode {:?}",
                self.geometry, self.lindblad.decay_mode
            )));
        }
        if self.ppd_extra < 0.0 {
            return Err(CoemitError::InvalidRate(format!(
                "ppd_extra {}",
                self.ppd_extra
            )));
        }
        let g = &self.grids;
        if !(g.dt > 0.0 && g.tau_max > g.dt && g.coarsen > 1.0 && g.t_settle >= 0.0) {
            return Err(CoemitError::DomainError(format!("bad grids {g:?}")));
        }
        if self.phonons.is_some() && self.pt.t_mem < g.dt {
            return Err(CoemitError::DomainError(format!(
                "t_mem {} < dt {}",
                self.pt.t_mem, g.dt
            )));
        }
        Ok(())
    }

    /// Lindblad spec with the extra PPD rate folded in.
    fn effective_lindblad(&self) -> LindbladSpec {
        let mut l = self.lindblad.clone();
        l.gamma_d += self.ppd_extra;
        l
    }
}

/// Report of the numerics a curve was computed with.
#[derive(Debug, Clone, Copy)]
pub struct NumericsReport {
    pub dt: f64,
    pub svd_threshold: f64,
    pub max_bond: usize,
    pub max_bond_used: usize,
    pub pt_converged: bool,
}

/// A normalized coincidence curve.
#[derive(Debug, Clone)]
pub struct G2Curve {
    pub tau: Vec<f64>,
    pub g2: Vec<f64>,
    pub i0: f64,
    pub scenario: Scenario,
    pub numerics: NumericsReport,
}

/// Emitted intensity I₀ = ⟨σ_S⁺σ_S⁻⟩ (Eq. (1)). Linear in ρ, so it also
/// evaluates Eq.-(2) numerators on unnormalized post-jump states.
pub fn intensity(rho: &DensityMatrix) -> f64 {
    rho.n_ee() + 0.5 * (rho.n_eg() + rho.n_ge()) + rho.coherence().re
}

/// g²(0) = n_ee/I₀² of a stationary state.
pub fn g2_zero(rho_ss: &DensityMatrix) -> Result<f64> {
    let i0 = intensity(rho_ss);
    if i0 <= 1e-14 {
        return Err(CoemitError::ZeroIntensity);
    }
    Ok(rho_ss.n_ee() / (i0 * i0))
}

/// Recorded step indices: every step up to `tau_fine_max`, then geometric
/// coarsening by `coarsen` up to `tau_max`. Step 0 included.
pub fn tau_steps(grids: &Grids) -> Vec<usize> {
    let n_fine = (grids.tau_fine_max / grids.dt).round() as usize;
    let n_max = (grids.tau_max / grids.dt).round() as usize;
    let mut steps: Vec<usize> = (0..=n_fine.min(n_max)).collect();
    let mut next = (n_fine.max(1) as f64) * grids.coarsen;
    while (next.round() as usize) < n_max {
        steps.push(next.round() as usize);
        next *= grids.coarsen;
    }
    if *steps.last().unwrap() != n_max {
        steps.push(n_max);
    }
    steps
}

/// Build (or load from `cache_dir`) the PT of a scenario's phonon
/// environment, sized for `n_steps`. A cached converged PT covers any
/// horizon through its cyclic tail; an unconverged one is reused only when
/// it is long enough.
fn scenario_pt(
    sc: &Scenario,
    n_steps: usize,
    cache_dir: Option<&std::path::Path>,
) -> Result<Option<crate::pt::ProcessTensor>> {
    let Some(sd) = &sc.phonons else {
        return Ok(None);
    };
    let dt = sc.grids.dt;
    let build = || {
        let kernel = build_kernel(sd, dt, sc.pt.t_mem)?;
        build_pt(&kernel, n_steps, sc.pt.svd_threshold, sc.pt.max_bond)
    };
    let pt = match cache_dir {
        Some(dir) => {
            let path = crate::cache::cache_file(
                dir,
                &sd.fingerprint(),
                dt,
                sc.pt.t_mem,
                sc.pt.svd_threshold,
                sc.pt.max_bond,
            );
            let mut pt = crate::cache::load_or_build(&path, build)?;
            if !pt.converged && pt.n_steps < n_steps {
                // cached horizon too short and no repeating tail: rebuild
                pt = build()?;
                crate::cache::save_pt(&path, &pt)?;
            }
            pt.n_steps = pt.n_steps.max(n_steps);
            pt
        }
        None => build()?,
    };
    Ok(Some(pt))
}

/// Numerically exact g²(τ) via the full PT pipeline. Falls back to plain
/// Lindblad stepping when the scenario carries no phonons.
pub fn g2_curve(sc: &Scenario) -> Result<G2Curve> {
    g2_curve_cached(sc, None)
}

/// [`g2_curve`] with an optional on-disk PT cache.
pub fn g2_curve_cached(sc: &Scenario, cache_dir: Option<&std::path::Path>) -> Result<G2Curve> {
    sc.validate()?;
    let spec = sc.effective_lindblad();
    let l = lindblad_generator(&spec)?;
    let dt = sc.grids.dt;
    let m = propagator(&l, dt);

    let slow = spec.gamma.max(1e-300).recip().max(spec.gamma_p.max(1e-300).recip());
    // the run starts from the exact Lindblad steady state, so settling only
    // has to establish the phonon dressing. For independent decay that
    // dressing is trivial: the stationary state is diagonal in occupation,
    // the influence functional is the identity on the diagonal sector, and
    // memory of pre-jump times therefore drops out of the τ dynamics
    // entirely. Only collective decay builds stationary coherences, whose
    // phonon-dressed balance settles on the slow system timescale.
    let t_floor = match (&sc.phonons, sc.geometry) {
        (None, _) => 10.0 * dt,
        (Some(_), Geometry::MeasurementInduced) => 30.0 * sc.pt.t_mem,
        (Some(_), Geometry::Superradiant) => 20.0 * slow,
    };
    let t_settle = sc.grids.t_settle.max(t_floor);
    let n_settle = (t_settle / dt).ceil() as usize;
    let steps = tau_steps(&sc.grids);
    let n_tau = *steps.last().unwrap();

    let pt = scenario_pt(sc, n_settle + n_tau, cache_dir)?;
    let (pt1, pt2) = (pt.as_ref(), pt.as_ref());

    let rho0 = steady_state(&l)?;
    let mut prop = PtPropagator::new(&rho0, pt1, pt2, &m, dt)?;
    let n_back = ((slow / dt).ceil() as usize).min(n_settle).max(1);
    prop.steps(n_settle - n_back)?;
    let before = prop.reduced()?;
    prop.steps(n_back)?;
    let rho_ss = prop.reduced()?;
    // closures carry truncation-level bias that varies slightly along the
    // chain; stationarity is judged against that floor, not machine epsilon
    let tol = (100.0 * sc.pt.svd_threshold).max(1e-9);
    let resid = max_abs_diff(&before.normalized().matrix, &rho_ss.normalized().matrix);
    if resid > tol {
        return Err(CoemitError::NotStationary(resid));
    }
    let i0 = intensity(&rho_ss.normalized());
    if i0 <= 1e-14 {
        return Err(CoemitError::ZeroIntensity);
    }

    // first detection: σ_S⁻ ρ σ_S⁺ on the system indices, environment
    // memory preserved; the post-jump trace is I₀ by construction
    let sm = sigma_s_minus();
    prop.insert_operator(&sm, &sm);

    // τ propagation; normalize recorded numerators against the settle-time
    // trace so truncation-level trace drift cancels
    let trace_ref = rho_ss.trace();
    let mut tau = Vec::with_capacity(steps.len());
    let mut g2 = Vec::with_capacity(steps.len());
    let mut at = 0usize;
    for &s in &steps {
        prop.steps(s - at)?;
        at = s;
        let rho = prop.reduced()?;
        tau.push(s as f64 * dt);
        g2.push(intensity(&rho) / trace_ref / (i0 * i0));
    }

    let numerics = NumericsReport {
        dt,
        svd_threshold: sc.pt.svd_threshold,
        max_bond: sc.pt.max_bond,
        max_bond_used: pt.as_ref().map_or(1, |p| p.max_bond_used),
        pt_converged: pt.as_ref().map_or(true, |p| p.converged),
    };
    Ok(G2Curve {
        tau,
        g2,
        i0,
        scenario: sc.clone(),
        numerics,
    })
}

/// Quantum-regression g²(τ): exact steady state of the Lindblad generator,
/// one jump, then exact exponential propagation per recorded delay.
/// Independent of the stepping pipeline; rejects phonon scenarios.
pub fn g2_curve_regression(sc: &Scenario) -> Result<G2Curve> {
    sc.validate()?;
    if sc.phonons.is_some() {
        return Err(CoemitError::DomainError(
            "quantum regression path is Markovian only".into(),
        ));
    }
    let spec = sc.effective_lindblad();
    let l = lindblad_generator(&spec)?;
    let rho_ss = steady_state(&l)?;
    let i0 = intensity(&rho_ss);
    if i0 <= 1e-14 {
        return Err(CoemitError::ZeroIntensity);
    }
    let sm = sigma_s_minus();
    let jumped = crate::quantum::apply_jump(&rho_ss, &sm);
    let steps = tau_steps(&sc.grids);
    let mut tau = Vec::with_capacity(steps.len());
    let mut g2 = Vec::with_capacity(steps.len());
    for &s in &steps {
        let t = s as f64 * sc.grids.dt;
        let rho = if s == 0 {
            jumped.clone()
        } else {
            propagator(&l, t).apply(&jumped)
        };
        tau.push(t);
        g2.push(intensity(&rho) / (i0 * i0));
    }
    Ok(G2Curve {
        tau,
        g2,
        i0,
        scenario: sc.clone(),
        numerics: NumericsReport {
            dt: sc.grids.dt,
            svd_threshold: sc.pt.svd_threshold,
            max_bond: sc.pt.max_bond,
            max_bond_used: 1,
            pt_converged: true,
        },
    })
}

/// Inter-emitter coherence c(t) = ⟨e₁g₂|ρ̄(t)|g₁e₂⟩ from `rho0`, recorded
/// every step for `n` steps. Pump/decay rates are taken from the scenario
/// as-is (the figure protocol zeroes them).
pub fn coherence_trajectory(
    sc: &Scenario,
    rho0: &DensityMatrix,
    n: usize,
) -> Result<Vec<(f64, C64)>> {
    let spec = sc.effective_lindblad();
    spec.validate()?;
    let dt = sc.grids.dt;
    let m = if spec.gamma == 0.0 && spec.gamma_p == 0.0 && spec.gamma_d == 0.0 {
        crate::quantum::Superoperator::identity()
    } else {
        propagator(&lindblad_generator(&spec)?, dt)
    };
    let pt = match &sc.phonons {
        Some(sd) => {
            let kernel = build_kernel(sd, dt, sc.pt.t_mem)?;
            Some(build_pt(&kernel, n, sc.pt.svd_threshold, sc.pt.max_bond)?)
        }
        None => None,
    };
    let mut prop = PtPropagator::new(rho0, pt.as_ref(), pt.as_ref(), &m, dt)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, prop.reduced()?.coherence()));
    for s in 1..=n {
        prop.step()?;
        out.push((s as f64 * dt, prop.reduced()?.coherence()));
    }
    Ok(out)
}

/// Richardson extrapolation in dt of two time series sharing grid points:
/// the `fine` series was computed at half the step of `coarse`, with the
/// leading discretization error O(dtᵖ).
pub fn extrapolate_dt(
    coarse: &[(f64, C64)],
    fine: &[(f64, C64)],
    p: i32,
) -> Result<Vec<(f64, C64)>> {
    let w = 2f64.powi(p);
    let mut out = Vec::new();
    for &(t, c) in coarse {
        let f = fine
            .iter()
            .find(|(tf, _)| (tf - t).abs() < 1e-9)
            .ok_or(CoemitError::GridMismatch(format!(
                "no fine-grid sample at t = {t}"
            )))?;
        out.push((t, (f.1 * w - c) / (w - 1.0)));
    }
    Ok(out)
}
