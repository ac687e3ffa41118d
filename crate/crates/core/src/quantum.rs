//! Liouville-space algebra for the two-emitter system.
//!
//! Basis ordering is fixed everywhere as {|g1g2>, |g1e2>, |e1g2>, |e1e2>},
//! index i = 2*b1 + b2 with b = 1 for the excited state. The PPD channel
//! uses the jump operator n̂ = σ⁺σ⁻ = σ_z/2 + const per emitter, so a rate
//! γ_d decays the inter-emitter coherence c as e^{-γ_d t}.

use crate::error::{CoemitError, Result};
use crate::linalg::{
    dagger, expm, left_superop, max_abs_diff, right_superop, sandwich_superop, trace, unvectorize,
    vectorize, C64, CMat, CVec,
};

pub const DIM: usize = 4;
pub const LDIM: usize = 16;

/// Basis indices for {gg, ge, eg, ee}.
pub const GG: usize = 0;
pub const GE: usize = 1;
pub const EG: usize = 2;
pub const EE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emitter {
    One,
    Two,
}

#[derive(Debug, Clone)]
pub struct EmitterOperator {
    pub matrix: CMat,
    pub label: String,
}

impl EmitterOperator {
    fn new(matrix: CMat, label: &str) -> Self {
        EmitterOperator {
            matrix,
            label: label.to_string(),
        }
    }

    pub fn identity() -> Self {
        EmitterOperator::new(CMat::identity(DIM, DIM), "1")
    }
}

fn one(i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(DIM, DIM);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

/// σ_i⁻ lowers emitter i, acting as identity on the other tensor factor.
pub fn sigma_minus(e: Emitter) -> EmitterOperator {
    match e {
        Emitter::One => EmitterOperator::new(one(GG, EG) + one(GE, EE), "sigma1-"),
        Emitter::Two => EmitterOperator::new(one(GG, GE) + one(EG, EE), "sigma2-"),
    }
}

pub fn sigma_plus(e: Emitter) -> EmitterOperator {
    let m = sigma_minus(e);
    EmitterOperator::new(dagger(&m.matrix), &m.label.replace('-', "+"))
}

/// Excited-state projector n̂_i = σ_i⁺σ_i⁻ of emitter i.
pub fn number_op(e: Emitter) -> EmitterOperator {
    match e {
        Emitter::One => EmitterOperator::new(one(EG, EG) + one(EE, EE), "n1"),
        Emitter::Two => EmitterOperator::new(one(GE, GE) + one(EE, EE), "n2"),
    }
}

/// Symmetric Dicke lowering operator (σ₁⁻ + σ₂⁻)/√2.
pub fn sigma_s_minus() -> EmitterOperator {
    let m = (sigma_minus(Emitter::One).matrix + sigma_minus(Emitter::Two).matrix)
        / C64::new(std::f64::consts::SQRT_2, 0.0);
    EmitterOperator::new(m, "sigmaS-")
}

pub fn sigma_s_plus() -> EmitterOperator {
    EmitterOperator::new(dagger(&sigma_s_minus().matrix), "sigmaS+")
}

/// Antisymmetric counterpart (σ₁⁻ − σ₂⁻)/√2.
pub fn sigma_a_minus() -> EmitterOperator {
    let m = (sigma_minus(Emitter::One).matrix - sigma_minus(Emitter::Two).matrix)
        / C64::new(std::f64::consts::SQRT_2, 0.0);
    EmitterOperator::new(m, "sigmaA-")
}

pub fn sigma_a_plus() -> EmitterOperator {
    EmitterOperator::new(dagger(&sigma_a_minus().matrix), "sigmaA+")
}

/// Detection phases φ₁, φ₂ of the interferometric intensity operator
/// σ_I⁻ = (e^{-iφ₁}σ₁⁻ + e^{-iφ₂}σ₂⁻)/√2. Defaults to φ₁ = φ₂ = 0,
/// for which σ_I = σ_S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionModel {
    pub phi1: f64,
    pub phi2: f64,
}

impl Default for DetectionModel {
    fn default() -> Self {
        DetectionModel { phi1: 0.0, phi2: 0.0 }
    }
}

impl DetectionModel {
    pub fn sigma_i_minus(&self) -> EmitterOperator {
        let p1 = C64::from_polar(1.0, -self.phi1);
        let p2 = C64::from_polar(1.0, -self.phi2);
        let m = (sigma_minus(Emitter::One).matrix * p1 + sigma_minus(Emitter::Two).matrix * p2)
            / C64::new(std::f64::consts::SQRT_2, 0.0);
        EmitterOperator::new(m, "sigmaI-")
    }

    pub fn sigma_i_plus(&self) -> EmitterOperator {
        EmitterOperator::new(dagger(&self.sigma_i_minus().matrix), "sigmaI+")
    }
}

/// Two-emitter density matrix. `weight` is the trace carried by an
/// unnormalized post-measurement state; 1 for physical states.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub matrix: CMat,
    pub time: f64,
    pub weight: f64,
}

impl DensityMatrix {
    pub fn new(matrix: CMat, time: f64) -> Self {
        let weight = trace(&matrix).re;
        DensityMatrix { matrix, time, weight }
    }

    pub fn from_ket(ket: &CVec, time: f64) -> Self {
        let m = CMat::from_fn(DIM, DIM, |i, j| ket[i] * ket[j].conj());
        DensityMatrix::new(m, time)
    }

    pub fn ground(time: f64) -> Self {
        DensityMatrix::new(one(GG, GG), time)
    }

    pub fn fully_excited(time: f64) -> Self {
        DensityMatrix::new(one(EE, EE), time)
    }

    pub fn psi_s_ket() -> CVec {
        let s = C64::new(1.0 / std::f64::consts::SQRT_2, 0.0);
        CVec::from_fn(DIM, |i, _| match i {
            GE | EG => s,
            _ => C64::new(0.0, 0.0),
        })
    }

    pub fn psi_a_ket() -> CVec {
        let s = C64::new(1.0 / std::f64::consts::SQRT_2, 0.0);
        CVec::from_fn(DIM, |i, _| match i {
            EG => s,
            GE => -s,
            _ => C64::new(0.0, 0.0),
        })
    }

    pub fn psi_s(time: f64) -> Self {
        DensityMatrix::from_ket(&Self::psi_s_ket(), time)
    }

    pub fn psi_a(time: f64) -> Self {
        DensityMatrix::from_ket(&Self::psi_a_ket(), time)
    }

    pub fn n_ee(&self) -> f64 {
        self.matrix[(EE, EE)].re
    }

    /// Occupation of |e₁g₂⟩.
    pub fn n_eg(&self) -> f64 {
        self.matrix[(EG, EG)].re
    }

    /// Occupation of |g₁e₂⟩.
    pub fn n_ge(&self) -> f64 {
        self.matrix[(GE, GE)].re
    }

    /// Inter-emitter coherence c = ⟨e₁g₂|ρ|g₁e₂⟩.
    pub fn coherence(&self) -> C64 {
        self.matrix[(EG, GE)]
    }

    /// Occupation of the symmetric Dicke state |Ψ_S⟩.
    pub fn n_s(&self) -> f64 {
        0.5 * (self.n_eg() + self.n_ge()) + self.coherence().re
    }

    /// Occupation of the antisymmetric Dicke state |Ψ_A⟩.
    pub fn n_a(&self) -> f64 {
        0.5 * (self.n_eg() + self.n_ge()) - self.coherence().re
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    /// Trace-normalized copy with weight 1; no-op for zero trace.
    pub fn normalized(&self) -> Self {
        let t = self.trace();
        if t.abs() < 1e-300 {
            return self.clone();
        }
        DensityMatrix {
            matrix: &self.matrix / C64::new(t, 0.0),
            time: self.time,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayMode {
    /// Distant emitters, per-emitter decay γ(L_{σ₁⁻} + L_{σ₂⁻}).
    Independent,
    /// Co-located emitters, collective decay 2γ L_{σ_S⁻}.
    Superradiant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladSpec {
    pub gamma: f64,
    pub gamma_p: f64,
    pub gamma_d: f64,
    pub decay_mode: DecayMode,
}

impl LindbladSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("gamma", self.gamma),
            ("gamma_p", self.gamma_p),
            ("gamma_d", self.gamma_d),
        ] {
            if r < 0.0 || !r.is_finite() {
                return Err(CoemitError::InvalidRate(format!("{name} = {r}")));
            }
        }
        Ok(())
    }
}

/// 16×16 map on vectorized 4×4 density matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub matrix: CMat,
}

impl Superoperator {
    pub fn zero() -> Self {
        Superoperator { matrix: CMat::zeros(LDIM, LDIM) }
    }

    pub fn identity() -> Self {
        Superoperator { matrix: CMat::identity(LDIM, LDIM) }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let m = unvectorize(&(&self.matrix * vectorize(&rho.matrix)), DIM);
        DensityMatrix { matrix: m, time: rho.time, weight: rho.weight }
    }
}

/// Dissipator superoperator of a single jump operator O:
/// L_O[ρ] = OρO† − ½{O†O, ρ}.
pub fn dissipator(op: &CMat) -> CMat {
    let odo = dagger(op) * op;
    sandwich_superop(op, &dagger(op))
        - (left_superop(&odo, DIM) + right_superop(&odo, DIM)) * C64::new(0.5, 0.0)
}

/// Full Lindblad generator for the Markovian part of the dynamics.
/// H_sys = 0 in the rotating frame, so L is purely dissipative.
pub fn lindblad_generator(spec: &LindbladSpec) -> Result<Superoperator> {
    spec.validate()?;
    let mut l = CMat::zeros(LDIM, LDIM);
    let g = |x: f64| C64::new(x, 0.0);
    l += (dissipator(&sigma_plus(Emitter::One).matrix)
        + dissipator(&sigma_plus(Emitter::Two).matrix))
        * g(spec.gamma_p);
    l += (dissipator(&number_op(Emitter::One).matrix)
        + dissipator(&number_op(Emitter::Two).matrix))
        * g(spec.gamma_d);
    match spec.decay_mode {
        DecayMode::Independent => {
            l += (dissipator(&sigma_minus(Emitter::One).matrix)
                + dissipator(&sigma_minus(Emitter::Two).matrix))
                * g(spec.gamma);
        }
        DecayMode::Superradiant => {
            l += dissipator(&sigma_s_minus().matrix) * g(2.0 * spec.gamma);
        }
    }
    Ok(Superoperator { matrix: l })
}

/// One-step propagator M = e^{LΔt} by Padé scaling-and-squaring.
pub fn propagator(l: &Superoperator, dt: f64) -> Superoperator {
    assert!(dt > 0.0, "propagator needs dt > 0");
    Superoperator { matrix: expm(&(&l.matrix * C64::new(dt, 0.0))) }
}

/// Unique stationary state of L via an SVD null-space solve.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let scale = l.matrix.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if scale < 1e-300 {
        return Err(CoemitError::NoPumpNoDecay);
    }
    let svd = l.matrix.clone().svd(true, true);
    let tol = 1e-10 * scale;
    let null_idx: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < tol)
        .map(|(i, _)| i)
        .collect();
    if null_idx.len() != 1 {
        return Err(CoemitError::DegenerateSteadyState(null_idx.len()));
    }
    let vt = svd.v_t.as_ref().expect("svd computed with v_t");
    let v = vt.row(null_idx[0]).transpose().map(|x| x.conj());
    let m = unvectorize(&v, DIM);
    // hermitize and normalize: the null vector is defined up to phase
    let m = (&m + dagger(&m)) * C64::new(0.5, 0.0);
    let t = trace(&m).re;
    if t.abs() < 1e-14 {
        return Err(CoemitError::DegenerateSteadyState(0));
    }
    Ok(DensityMatrix::new(&m / C64::new(t, 0.0), 0.0))
}

/// Projective jump ρ′ = OρO†, returned unnormalized with its trace in
/// `weight` (Eq.-(4)-style numerators need the raw trace).
pub fn apply_jump(rho: &DensityMatrix, op: &EmitterOperator) -> DensityMatrix {
    let m = &op.matrix * &rho.matrix * dagger(&op.matrix);
    DensityMatrix::new(m, rho.time)
}

/// Hermiticity defect, exposed for trajectory invariant checks.
pub fn hermiticity_defect(rho: &DensityMatrix) -> f64 {
    max_abs_diff(&rho.matrix, &dagger(&rho.matrix))
}
