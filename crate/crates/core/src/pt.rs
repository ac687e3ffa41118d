//! Process tensors: discretized influence functionals in matrix product
//! operator form for a single bosonic environment coupled to one emitter's
//! excited-state occupation.
//!
//! The path index per step is α = 2s_μ + s_ν with s ∈ {0, 1} the
//! excited-state occupation on the ket/bra side. The discretized influence
//! functional is
//!   I = exp(−Σ_{k≥k'} (s_{μk}−s_{νk})(η_{k−k'} s_{μk'} − η*_{k−k'} s_{νk'})),
//! built as an MPS over the path indices by absorbing one step's
//! interactions at a time (a bond-4 carrier transports the new step's path
//! index across its memory window) followed by QR/SVD compression sweeps.
//!
//! Emitted blocks are normalized so the all-ground (α = 0) chain carries
//! weight 1 at every prefix; closures terminate the bond index by
//! contracting the future with α = 0, which is exact because ground-state
//! paths do not couple to the bath. Once blocks become translation
//! invariant (kernel horizon passed) a single converged block is repeated,
//! making 10⁵-step propagation O(1) in memory.

use crate::bath::MemoryKernel;
use crate::error::{CoemitError, Result};
use crate::linalg::{unvectorize, vectorize, C64, CMat, CVec};
use crate::quantum::{DensityMatrix, EmitterOperator, Superoperator, DIM, LDIM};

pub const DEFAULT_SVD_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_MAX_BOND: usize = 256;

/// Occupations (s_μ, s_ν) of a path index α = 2s_μ + s_ν.
fn s_bits(alpha: usize) -> (f64, f64) {
    (((alpha >> 1) & 1) as f64, (alpha & 1) as f64)
}

/// Pairwise influence factor between a step with path index `a_new` and an
/// earlier step `a_old` at kernel coefficient `eta`.
fn b_factor(eta: C64, a_new: usize, a_old: usize) -> C64 {
    let (smu, snu) = s_bits(a_new);
    let (smu_o, snu_o) = s_bits(a_old);
    (-(eta * smu_o - eta.conj() * snu_o) * (smu - snu)).exp()
}

/// One PT block: per path index α a (left bond × right bond) matrix.
#[derive(Debug, Clone)]
pub struct PtBlock {
    pub m: [CMat; 4],
}

impl PtBlock {
    pub fn left_dim(&self) -> usize {
        self.m[0].nrows()
    }

    pub fn right_dim(&self) -> usize {
        self.m[0].ncols()
    }

    /// Matrix over the bond indices at the ground-state path index.
    fn gg(&self) -> &CMat {
        &self.m[0]
    }

}

#[derive(Debug, Clone)]
pub struct ProcessTensor {
    /// Distinct blocks for steps 1..=blocks.len().
    pub blocks: Vec<PtBlock>,
    /// Per-step closure vectors matching each block's right bond.
    pub closures: Vec<CVec>,
    /// Closures in the repeated region, one per unit-cell offset
    /// (valid when `converged`; closure_rep[0] is the cut-`blocks.len()`
    /// closure, equal to the last entry of `closures`).
    pub closure_rep: Vec<CVec>,
    /// Blocks past blocks.len() repeat the last `period` blocks cyclically.
    pub converged: bool,
    /// Unit-cell length of the repeated region (1 unless the build settled
    /// into a longer translation cell).
    pub period: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub svd_threshold: f64,
    pub max_bond: usize,
    pub max_bond_used: usize,
}

impl ProcessTensor {
    /// PT of a decoupled environment: all bonds dimension 1, identity on α.
    pub fn trivial(dt: f64, n_steps: usize) -> Self {
        let one = CMat::identity(1, 1);
        let block = PtBlock {
            m: [one.clone(), one.clone(), one.clone(), one],
        };
        ProcessTensor {
            blocks: vec![block],
            closures: vec![CVec::from_element(1, C64::new(1.0, 0.0))],
            closure_rep: vec![CVec::from_element(1, C64::new(1.0, 0.0))],
            converged: true,
            period: 1,
            dt,
            n_steps,
            svd_threshold: DEFAULT_SVD_THRESHOLD,
            max_bond: DEFAULT_MAX_BOND,
            max_bond_used: 1,
        }
    }

    /// Block for (1-indexed) step l; repeats the converged unit cell past
    /// the end.
    pub fn block(&self, l: usize) -> Result<&PtBlock> {
        assert!(l >= 1);
        let n = self.blocks.len();
        if l <= n {
            Ok(&self.blocks[l - 1])
        } else if self.converged {
            Ok(&self.blocks[n - self.period + (l - n - 1) % self.period])
        } else {
            Err(CoemitError::GridMismatch(format!(
                "step {l} beyond non-converged process tensor of length {}",
                self.blocks.len()
            )))
        }
    }

    pub fn closure(&self, l: usize) -> Result<&CVec> {
        assert!(l >= 1);
        let n = self.closures.len();
        if l <= n {
            Ok(&self.closures[l - 1])
        } else if self.converged {
            Ok(&self.closure_rep[(l - n) % self.period])
        } else {
            Err(CoemitError::GridMismatch(format!(
                "closure {l} beyond non-converged process tensor of length {}",
                self.closures.len()
            )))
        }
    }
}

type Site = [CMat; 4];

fn site_left(site: &Site) -> usize {
    site[0].nrows()
}

fn site_right(site: &Site) -> usize {
    site[0].ncols()
}

/// Stack a site as a (4·left) × right matrix, rows grouped by α.
fn stack_rows(site: &Site) -> CMat {
    let (l, r) = (site_left(site), site_right(site));
    let mut m = CMat::zeros(4 * l, r);
    for (a, s) in site.iter().enumerate() {
        m.view_mut((a * l, 0), (l, r)).copy_from(s);
    }
    m
}

fn unstack_rows(m: &CMat, l: usize) -> Site {
    let r = m.ncols();
    std::array::from_fn(|a| m.view((a * l, 0), (l, r)).into_owned())
}

/// Stack a site as a left × (4·right) matrix, columns grouped by α.
fn stack_cols(site: &Site) -> CMat {
    let (l, r) = (site_left(site), site_right(site));
    let mut m = CMat::zeros(l, 4 * r);
    for (a, s) in site.iter().enumerate() {
        m.view_mut((0, a * r), (l, r)).copy_from(s);
    }
    m
}

fn unstack_cols(m: &CMat, r: usize) -> Site {
    let l = m.nrows();
    std::array::from_fn(|a| m.view((0, a * r), (l, r)).into_owned())
}

/// Thin QR with the R diagonal made real-positive (deterministic gauge).
fn signed_qr(m: &CMat) -> (CMat, CMat) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for k in 0..r.nrows().min(r.ncols()) {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            let pc = phase.conj();
            for j in 0..r.ncols() {
                r[(k, j)] *= pc;
            }
            for i in 0..q.nrows() {
                q[(i, k)] *= phase;
            }
        }
    }
    (q, r)
}

/// SVD truncated at `threshold` relative weight, capped at `max_bond`,
/// largest entry of each left singular vector made real-positive.
fn truncated_svd(m: &CMat, threshold: f64, max_bond: usize) -> Result<(CMat, CMat)> {
    let svd = m.clone().svd(true, true);
    let mut u = svd.u.expect("svd with u");
    let mut vt = svd.v_t.expect("svd with v_t");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|a, b| sv[*b].total_cmp(&sv[*a]));
    let smax = sv[order[0]].max(1e-300);
    let needed = order
        .iter()
        .filter(|i| sv[**i] >= threshold * smax)
        .count()
        .max(1);
    if needed > max_bond {
        let total: f64 = sv.iter().map(|s| s * s).sum();
        let cut: f64 = order[max_bond..].iter().map(|i| sv[*i] * sv[*i]).sum();
        return Err(CoemitError::BondOverflow {
            needed,
            max_bond,
            weight: (cut / total).sqrt(),
        });
    }
    let keep = &order[..needed];
    let mut us = CMat::zeros(u.nrows(), needed);
    let mut vs = CMat::zeros(needed, vt.ncols());
    for (kn, ko) in keep.iter().enumerate() {
        // fix the gauge: largest-|entry| of each left vector real-positive
        let col = u.column(*ko);
        let imax = (0..col.len())
            .max_by(|a, b| col[*a].norm().total_cmp(&col[*b].norm()))
            .unwrap();
        let e = col[imax];
        let phase = if e.norm() > 0.0 { e / e.norm() } else { C64::new(1.0, 0.0) };
        let pc = phase.conj();
        for i in 0..u.nrows() {
            u[(i, *ko)] *= pc;
        }
        for j in 0..vt.ncols() {
            vt[(*ko, j)] *= phase;
        }
        for i in 0..u.nrows() {
            us[(i, kn)] = u[(i, *ko)] * sv[*ko];
        }
        for j in 0..vt.ncols() {
            vs[(kn, j)] = vt[(*ko, j)];
        }
    }
    Ok((us, vs))
}

/// Contract consecutive sites into one unit-cell tensor with a composite
/// physical index. Individual sites of a period-p cell can be rectangular
/// (bond dimension varies inside the cell); the cell itself is square.
fn cell(sites: &[Site]) -> Vec<CMat> {
    let mut out: Vec<CMat> = sites[0].iter().cloned().collect();
    for s in &sites[1..] {
        let mut next = Vec::with_capacity(out.len() * 4);
        for m in &out {
            for al in 0..4 {
                next.push(m * &s[al]);
            }
        }
        out = next;
    }
    out
}

/// Gauge relating two consecutive left-canonical unit cells of a
/// translation invariant chain: finds unitary `w` and phase-like `λ` with
/// b[α] ≈ λ·w†·a[α]·w, as the leading fixed point of the mixed transfer
/// map X ↦ Σ_α a[α]†·X·b[α]. Returns (w, λ, relative residual); `None`
/// when bond dimensions do not line up or the iteration degenerates.
fn gauge_between(a: &[CMat], b: &[CMat], warm: Option<&CMat>) -> Option<(CMat, C64, f64)> {
    let d = a[0].nrows();
    if d == 0
        || a.iter().chain(b.iter()).any(|m| m.nrows() != d || m.ncols() != d)
    {
        return None;
    }
    let mut w = match warm {
        Some(g) if g.nrows() == d => g.clone(),
        _ => CMat::identity(d, d),
    };
    let apply = |x: &CMat| -> CMat {
        let mut next = CMat::zeros(d, d);
        for (ma, mb) in a.iter().zip(b) {
            next += ma.adjoint() * x * mb;
        }
        next
    };
    for _ in 0..500 {
        let mut next = apply(&w);
        // remove the eigenvalue phase so the iterate can settle
        let imax = (0..d * d)
            .max_by(|i, j| next[*i].norm().total_cmp(&next[*j].norm()))
            .unwrap();
        let top = next[imax];
        let nn = next.norm();
        if nn < 1e-300 || top.norm() < 1e-300 {
            return None;
        }
        next *= (top.conj() / top.norm()) * C64::new((d as f64).sqrt() / nn, 0.0);
        let delta = (&next - &w).norm() / (d as f64).sqrt();
        w = next;
        if delta < 1e-13 {
            break;
        }
    }
    // snap to the closest unitary; truncation noise makes w only nearly so
    let svd = w.clone().svd(true, true);
    let w = svd.u.expect("svd u") * svd.v_t.expect("svd v_t");
    let ew = apply(&w);
    let lam = (w.adjoint() * &ew).trace() / C64::new(d as f64, 0.0);
    let mut resid: f64 = 0.0;
    let mut bmax: f64 = 0.0;
    let mabs = |m: &CMat| m.iter().map(|x| x.norm()).fold(0.0, f64::max);
    for (ma, mb) in a.iter().zip(b) {
        let pred = (w.adjoint() * ma * &w) * lam;
        resid = resid.max(mabs(&(mb - pred)));
        bmax = bmax.max(mabs(mb));
    }
    Some((w, lam, resid / bmax.max(1e-300)))
}

struct Builder<'k> {
    kernel: &'k MemoryKernel,
    /// separations with |η| above the numerical floor take part in windows
    k_eff: usize,
    sites: Vec<Site>,
    threshold: f64,
    max_bond: usize,
    max_bond_used: usize,
}

impl<'k> Builder<'k> {
    fn new(kernel: &'k MemoryKernel, threshold: f64, max_bond: usize) -> Self {
        let emax = kernel.eta.iter().map(|e| e.norm()).fold(0.0, f64::max);
        let k_eff = if emax == 0.0 {
            0
        } else {
            (0..kernel.eta.len())
                .rev()
                .find(|i| kernel.eta[*i].norm() >= 1e-16 * emax)
                .unwrap_or(0)
        };
        Builder {
            kernel,
            k_eff,
            sites: Vec::new(),
            threshold,
            max_bond,
            max_bond_used: 1,
        }
    }

    /// Append one time step: widen the window sites with the carrier of the
    /// new step's path index, add the new site, compress, renormalize.
    fn append(&mut self) -> Result<()> {
        let n = self.sites.len(); // 0-indexed position of the new site
        let w_start = n.saturating_sub(self.k_eff);
        // widen existing window sites
        for j in w_start..n {
            let sep = n - j;
            let eta = self.kernel.eta_at(sep);
            let old = &self.sites[j];
            let (l, r) = (site_left(old), site_right(old));
            let with_left_carrier = j > w_start;
            let new: Site = std::array::from_fn(|a| {
                let nl = if with_left_carrier { 4 * l } else { l };
                let mut m = CMat::zeros(nl, 4 * r);
                for c in 0..4 {
                    let b = b_factor(eta, c, a);
                    let li = if with_left_carrier { c * l } else { 0 };
                    for i in 0..l {
                        for jj in 0..r {
                            m[(li + i, c * r + jj)] = old[a][(i, jj)] * b;
                        }
                    }
                }
                m
            });
            self.sites[j] = new;
        }
        // new site: carrier dies against its own path index; on-site factor
        let eta0 = self.kernel.eta_at(0);
        let prev_r = if n == 0 { 0 } else { site_right(&self.sites[n - 1]) };
        let new_site: Site = std::array::from_fn(|a| {
            if n == 0 || w_start == n {
                // no carrier was created (first site, or on-site-only kernel)
                let mut m = CMat::zeros(prev_r.max(1), 1);
                m[(0, 0)] = b_factor(eta0, a, a);
                m
            } else {
                // left bond (c, r_prev) with r_prev = 1 at the old boundary
                let mut m = CMat::zeros(prev_r, 1);
                debug_assert_eq!(prev_r % 4, 0);
                let span = prev_r / 4;
                m[(a * span, 0)] = b_factor(eta0, a, a);
                m
            }
        });
        self.sites.push(new_site);
        self.compress(w_start)?;
        Ok(())
    }

    fn compress(&mut self, w_start: usize) -> Result<()> {
        let n = self.sites.len() - 1;
        // left-to-right QR
        for j in w_start..n {
            let l = site_left(&self.sites[j]);
            let (q, r) = signed_qr(&stack_rows(&self.sites[j]));
            self.sites[j] = unstack_rows(&q, l);
            let next = &self.sites[j + 1];
            self.sites[j + 1] = std::array::from_fn(|a| &r * &next[a]);
        }
        // right-to-left SVD truncation
        for j in (w_start + 1..=n).rev() {
            let r = site_right(&self.sites[j]);
            let (us, vs) = truncated_svd(&stack_cols(&self.sites[j]), self.threshold, self.max_bond)?;
            self.max_bond_used = self.max_bond_used.max(vs.nrows());
            self.sites[j] = unstack_cols(&vs, r);
            let prev = &self.sites[j - 1];
            self.sites[j - 1] = std::array::from_fn(|a| &prev[a] * &us);
        }
        // restore left-canonical form; scale stays at the last site
        for j in w_start..n {
            let l = site_left(&self.sites[j]);
            let (q, r) = signed_qr(&stack_rows(&self.sites[j]));
            self.sites[j] = unstack_rows(&q, l);
            let next = &self.sites[j + 1];
            self.sites[j + 1] = std::array::from_fn(|a| &r * &next[a]);
        }
        // keep entries O(1): overall scale is irrelevant, closures fix it
        let norm: f64 = self.sites[n]
            .iter()
            .flat_map(|m| m.iter().map(|x| x.norm_sqr()))
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            let inv = C64::new(1.0 / norm, 0.0);
            for m in self.sites[n].iter_mut() {
                *m *= inv;
            }
        }
        Ok(())
    }

    /// Index past which sites can no longer change (outside every future window).
    fn final_count(&self) -> usize {
        self.sites.len().saturating_sub(self.k_eff)
    }
}

/// Build a process tensor from a memory kernel.
///
/// Stops early once appended blocks become translation invariant; the
/// converged block then repeats for arbitrarily long horizons.
pub fn build_pt(
    kernel: &MemoryKernel,
    n_steps: usize,
    svd_threshold: f64,
    max_bond: usize,
) -> Result<ProcessTensor> {
    assert!(n_steps >= 1);
    let mut b = Builder::new(kernel, svd_threshold, max_bond);
    if b.k_eff == 0 && kernel.eta_at(0).norm() == 0.0 {
        return Ok(ProcessTensor::trivial(kernel.dt, n_steps));
    }
    // blocks repeat only up to a unitary gauge rotating degenerate singular
    // subspaces, and the build can settle into a translation cell longer
    // than one step; convergence is therefore detected through the mixed
    // transfer fixed point at cell lengths 1..=3, and the last block is
    // regauged so verbatim cyclic repetition reproduces the infinite chain
    // gauge residuals sit at the truncation level, not machine precision;
    // aim for the tight tolerance but accept a stall at the loose one so a
    // slightly elevated truncation floor cannot turn into a runaway build
    let tight = (10.0 * svd_threshold).max(1e-12);
    let loose = (100.0 * svd_threshold).max(1e-12);
    const CONV_RUN: usize = 3;
    const STALL_RUN: usize = 25;
    const MAX_PERIOD: usize = 3;
    // a non-repeating build of this size exhausts memory long before it
    // finishes; fail fast instead
    const MAX_DISTINCT: usize = 8192;
    let mut period = 0usize;
    let mut tight_run = [0usize; MAX_PERIOD];
    let mut loose_run = [0usize; MAX_PERIOD];
    let mut gauges: [Option<CMat>; MAX_PERIOD] = [None, None, None];
    let mut built = 0usize;
    'outer: while built < n_steps {
        if built >= MAX_DISTINCT {
            return Err(CoemitError::NonConvergence(format!(
                "no translation-invariant block after {built} steps"
            )));
        }
        b.append()?;
        built += 1;
        let nf = b.final_count();
        if built <= b.k_eff + 10 {
            continue;
        }
        for p in 1..=MAX_PERIOD {
            if nf < 2 * p {
                continue;
            }
            let ca = cell(&b.sites[nf - 2 * p..nf - p]);
            let cb = cell(&b.sites[nf - p..nf]);
            match gauge_between(&ca, &cb, gauges[p - 1].as_ref()) {
                Some((w, _lam, resid)) if resid < loose => {
                    gauges[p - 1] = Some(w);
                    loose_run[p - 1] += 1;
                    if resid < tight {
                        tight_run[p - 1] += 1;
                    } else {
                        tight_run[p - 1] = 0;
                    }
                    if tight_run[p - 1] >= CONV_RUN || loose_run[p - 1] >= STALL_RUN {
                        period = p;
                        break 'outer;
                    }
                }
                other => {
                    gauges[p - 1] = other.map(|(w, _, _)| w);
                    tight_run[p - 1] = 0;
                    loose_run[p - 1] = 0;
                }
            }
        }
    }
    let converged = period > 0;
    // emit: with convergence keep sites up to the final region; otherwise all
    let n_emit = if converged { b.final_count() } else { b.sites.len() };
    if converged {
        // absorb the gauge so the emitted unit cell repeats verbatim
        let w = gauges[period - 1].as_ref().expect("gauge present at convergence");
        let wd = w.adjoint();
        let last = &b.sites[n_emit - 1];
        b.sites[n_emit - 1] = std::array::from_fn(|a| &last[a] * &wd);
    }
    let period = if converged { period } else { 1 };
    finalize(&b, n_emit, converged, period, kernel.dt, n_steps, svd_threshold, max_bond)
}

/// Leading eigenvector of a linear map by power iteration, with the
/// eigenvalue phase removed each sweep so complex leading eigenvalues
/// still settle.
fn power_fixed_point(apply: impl Fn(&CVec) -> CVec, seed: CVec) -> CVec {
    let mut q = seed;
    for _ in 0..100_000 {
        let mut next = apply(&q);
        let nn = next.norm();
        if nn < 1e-300 {
            break;
        }
        next /= C64::new(nn, 0.0);
        let ov = next.dotc(&q);
        if ov.norm() > 0.0 {
            next *= ov / ov.norm();
        }
        let delta = (&next - &q).norm();
        q = next;
        if delta < 1e-15 {
            break;
        }
    }
    q
}

fn finalize(
    b: &Builder,
    n_emit: usize,
    converged: bool,
    period: usize,
    dt: f64,
    n_steps: usize,
    svd_threshold: f64,
    max_bond: usize,
) -> Result<ProcessTensor> {
    // normalize blocks so the all-ground chain has unit weight per prefix
    let mut blocks: Vec<PtBlock> = Vec::with_capacity(n_emit);
    let mut u = CVec::from_element(1, C64::new(1.0, 0.0));
    for site in &b.sites[..n_emit] {
        let g = &site[0];
        let v = g.transpose() * &u;
        let f = 1.0 / v.norm().max(1e-300);
        let fc = C64::new(f, 0.0);
        blocks.push(PtBlock {
            m: std::array::from_fn(|a| &site[a] * fc),
        });
        u = v * fc;
    }
    let n = blocks.len();
    // leading right eigenvector q of the repeated-cell gg transfer matrix
    let cell_gg = |blocks: &[PtBlock], q: &CVec| -> CVec {
        let mut v = q.clone();
        for j in (0..period).rev() {
            v = blocks[n - period + j].gg() * v;
        }
        v
    };
    let mut q = CVec::from_element(blocks[n - 1].right_dim(), C64::new(1.0, 0.0));
    if converged {
        q = power_fixed_point(|v| cell_gg(&blocks, v), q);
        // pin the repeated cell's gg eigenvalue to exactly 1, spread evenly
        // over the cell's blocks
        let mut unew = u.clone();
        for j in 0..period {
            unew = blocks[n - period + j].gg().transpose() * unew;
        }
        let lam = unew.dot(&q) / u.dot(&q);
        let c = lam.powf(-1.0 / period as f64);
        for blk in blocks[n - period..].iter_mut() {
            for m in blk.m.iter_mut() {
                *m *= c;
            }
        }
    }
    // closures: future contracted at α = 0, total gg weight pinned to 1
    let scale = u.dot(&q);
    q /= scale;
    let mut closures: Vec<CVec> = vec![CVec::zeros(0); n];
    closures[n - 1] = q.clone();
    for l in (0..n - 1).rev() {
        closures[l] = blocks[l + 1].gg() * &closures[l + 1];
    }
    // repeated-region closures at each cell offset: fixed points of the
    // cycled cell products, normalized by the invariant u_l · q_l = 1
    let mut closure_rep: Vec<CVec> = vec![q.clone()];
    if converged && period > 1 {
        let mut uoff = u.clone();
        for j in 1..period {
            // future blocks after cut n+j cycle starting at cell offset j
            let cycle: Vec<&CMat> = (0..period)
                .map(|i| blocks[n - period + (j + i) % period].gg())
                .collect();
            let rep = &blocks[n - period + j - 1];
            uoff = rep.gg().transpose() * uoff;
            let seed = CVec::from_element(rep.right_dim(), C64::new(1.0, 0.0));
            let mut qj = power_fixed_point(
                |v| {
                    let mut next = v.clone();
                    for g in cycle.iter().rev() {
                        next = *g * next;
                    }
                    next
                },
                seed,
            );
            let s = uoff.dot(&qj);
            qj /= s;
            closure_rep.push(qj);
        }
    }
    Ok(ProcessTensor {
        blocks,
        closures,
        closure_rep,
        converged,
        period,
        dt,
        n_steps,
        svd_threshold,
        max_bond,
        max_bond_used: b.max_bond_used,
    })
}

/// Explicit influence functional over all 4ⁿ paths, α₁ fastest index.
/// The brute-force oracle for small n.
pub fn brute_force_if(kernel: &MemoryKernel, n: usize) -> Vec<C64> {
    let total = 4usize.pow(n as u32);
    (0..total)
        .map(|code| {
            let alphas: Vec<usize> = (0..n).map(|k| (code >> (2 * k)) & 3).collect();
            let mut expo = C64::new(0.0, 0.0);
            for k in 0..n {
                for kp in 0..=k {
                    let eta = kernel.eta_at(k - kp);
                    let (smu, snu) = s_bits(alphas[k]);
                    let (smu_o, snu_o) = s_bits(alphas[kp]);
                    expo += (eta * smu_o - eta.conj() * snu_o) * (smu - snu);
                }
            }
            (-expo).exp()
        })
        .collect()
}

/// Full contraction of a PT over n steps, same path ordering as
/// [`brute_force_if`]; uses the step-n closure.
pub fn contract_pt_full(pt: &ProcessTensor, n: usize) -> Result<Vec<C64>> {
    let total = 4usize.pow(n as u32);
    let closure = pt.closure(n)?;
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let mut v = CVec::from_element(1, C64::new(1.0, 0.0));
        for k in 0..n {
            let a = (code >> (2 * k)) & 3;
            v = pt.block(k + 1)?.m[a].transpose() * v;
        }
        out.push(v.dot(closure));
    }
    Ok(out)
}

/// Extended density matrix: 16 system Liouville components, each carrying
/// the two PT bond indices as a (bond₁ × bond₂) matrix.
#[derive(Debug, Clone)]
pub struct ExtendedState {
    pub r: Vec<CMat>,
    pub time: f64,
    pub step: usize,
}

/// Per-emitter path index of a combined Liouville index s = 4j + i.
fn alpha_of(s: usize, emitter: usize) -> usize {
    let i = s % DIM;
    let j = s / DIM;
    let shift = if emitter == 0 { 1 } else { 0 };
    2 * ((i >> shift) & 1) + ((j >> shift) & 1)
}

/// Step-by-step contraction of the two-environment network
/// R_l = Q_l P_l M R_{l-1}.
pub struct PtPropagator<'a> {
    pt1: Option<&'a ProcessTensor>,
    pt2: Option<&'a ProcessTensor>,
    m_step: CMat,
    pub state: ExtendedState,
    dt: f64,
    alpha1: [usize; LDIM],
    alpha2: [usize; LDIM],
}

impl<'a> PtPropagator<'a> {
    pub fn new(
        rho0: &DensityMatrix,
        pt1: Option<&'a ProcessTensor>,
        pt2: Option<&'a ProcessTensor>,
        m_step: &Superoperator,
        dt: f64,
    ) -> Result<Self> {
        for pt in [pt1, pt2].into_iter().flatten() {
            if (pt.dt - dt).abs() > 1e-12 * dt {
                return Err(CoemitError::GridMismatch(format!(
                    "process tensor dt {} vs propagation dt {}",
                    pt.dt, dt
                )));
            }
        }
        let v = vectorize(&rho0.matrix);
        let r = (0..LDIM)
            .map(|s| CMat::from_element(1, 1, v[s]))
            .collect();
        Ok(PtPropagator {
            pt1,
            pt2,
            m_step: m_step.matrix.clone(),
            state: ExtendedState {
                r,
                time: rho0.time,
                step: 0,
            },
            dt,
            alpha1: std::array::from_fn(|s| alpha_of(s, 0)),
            alpha2: std::array::from_fn(|s| alpha_of(s, 1)),
        })
    }

    /// Exchange the Markovian step map mid-run (rates are still per `dt`).
    pub fn set_step_map(&mut self, m_step: &Superoperator) {
        self.m_step = m_step.matrix.clone();
    }

    pub fn step(&mut self) -> Result<()> {
        let l = self.state.step + 1;
        // Markovian half: R ← M R on the system index
        let (b1, b2) = (self.state.r[0].nrows(), self.state.r[0].ncols());
        let mut new: Vec<CMat> = (0..LDIM).map(|_| CMat::zeros(b1, b2)).collect();
        for (sp, dst) in new.iter_mut().enumerate() {
            for s in 0..LDIM {
                let w = self.m_step[(sp, s)];
                if w.norm() > 0.0 {
                    *dst += &self.state.r[s] * w;
                }
            }
        }
        // environment half: contract this step's PT blocks on the bonds
        if let Some(pt) = self.pt1 {
            let blk = pt.block(l)?;
            for (s, m) in new.iter_mut().enumerate() {
                *m = blk.m[self.alpha1[s]].transpose() * &*m;
            }
        }
        if let Some(pt) = self.pt2 {
            let blk = pt.block(l)?;
            for (s, m) in new.iter_mut().enumerate() {
                *m = &*m * &blk.m[self.alpha2[s]];
            }
        }
        self.state.r = new;
        self.state.step = l;
        self.state.time += self.dt;
        Ok(())
    }

    pub fn steps(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }

    /// Reduced density matrix via the closures at the current step.
    pub fn reduced(&self) -> Result<DensityMatrix> {
        let l = self.state.step;
        let q1 = match self.pt1 {
            Some(pt) if l >= 1 => pt.closure(l)?.clone(),
            _ => CVec::from_element(self.state.r[0].nrows(), C64::new(1.0, 0.0)),
        };
        let q2 = match self.pt2 {
            Some(pt) if l >= 1 => pt.closure(l)?.clone(),
            _ => CVec::from_element(self.state.r[0].ncols(), C64::new(1.0, 0.0)),
        };
        let mut v = CVec::zeros(LDIM);
        for s in 0..LDIM {
            v[s] = (q1.transpose() * &self.state.r[s] * &q2)[(0, 0)];
        }
        let mut rho = DensityMatrix::new(unvectorize(&v, DIM), self.state.time);
        rho.weight = rho.trace();
        Ok(rho)
    }

    /// Insert ρ → opL ρ opR† on the system indices only; the PT bond
    /// indices (environment memory) are untouched.
    pub fn insert_operator(&mut self, op_l: &EmitterOperator, op_r: &EmitterOperator) {
        let sup = crate::linalg::sandwich_superop(&op_l.matrix, &crate::linalg::dagger(&op_r.matrix));
        let (b1, b2) = (self.state.r[0].nrows(), self.state.r[0].ncols());
        let mut new: Vec<CMat> = (0..LDIM).map(|_| CMat::zeros(b1, b2)).collect();
        for (sp, dst) in new.iter_mut().enumerate() {
            for s in 0..LDIM {
                let w = sup[(sp, s)];
                if w.norm() > 0.0 {
                    *dst += &self.state.r[s] * w;
                }
            }
        }
        self.state.r = new;
    }
}

/// Propagate ρ₀ under per-step map M with optional per-emitter PTs,
/// recording the reduced state every `record_every` steps (and at step 0).
pub fn propagate(
    rho0: &DensityMatrix,
    pt1: Option<&ProcessTensor>,
    pt2: Option<&ProcessTensor>,
    m_step: &Superoperator,
    dt: f64,
    n: usize,
    record_every: usize,
) -> Result<Vec<DensityMatrix>> {
    let mut prop = PtPropagator::new(rho0, pt1, pt2, m_step, dt)?;
    let mut out = vec![prop.reduced()?];
    for l in 1..=n {
        prop.step()?;
        if l % record_every.max(1) == 0 || l == n {
            out.push(prop.reduced()?);
        }
    }
    Ok(out)
}
