//! First-order solver for the PPT discrimination program
//!
//! ```text
//! maximize    Σ_j p_j ⟨P_j, ρ_j⟩
//! subject to  Σ_j P_j = I,   P_j ⪰ 0,   T_A(P_j) ⪰ 0.
//! ```
//!
//! Over-relaxed ADMM on the split `x = z`, where `x = (P_j, R_j)` lives in
//! the affine set `{Σ P_j = I, R_j = T_A(P_j)}` and `z` in the product of PSD
//! cones. Both projections are closed form: the affine one averages `P_j`
//! with `T_A(R_j)` (the partial transpose is an isometry) and then spreads
//! the completeness defect equally; the cone one clips eigenvalues.
//!
//! Iterates are confined to the block pattern generated by the states under
//! the partial transpose, so PSD projections run per block. Convergence is
//! judged on an honest duality gap: the primal point is made exactly feasible
//! by mixing with `I/k`, and a dual-feasible `Y` is assembled from the scaled
//! multipliers and shifted by a multiple of `I` until every dual constraint
//! holds.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::factorization::{Factorization, Party};
use crate::linalg;
use crate::operator::{transpose_map, FloatOperator, Operator};
use crate::scalar::Scalar;
use crate::states::StateSet;

type Mat = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// States and priors of a discrimination problem, in float mode.
#[derive(Clone, Debug)]
pub struct DiscriminationInstance {
    states: Vec<FloatOperator>,
    priors: Vec<f64>,
}

/// Tolerance on trace and PSD-ness of input states.
pub const INSTANCE_STATE_TOL: f64 = 1e-10;
/// Tolerance on the prior normalization.
pub const INSTANCE_PRIOR_TOL: f64 = 1e-12;

impl DiscriminationInstance {
    pub fn new(states: Vec<FloatOperator>, priors: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidState("no states".into()));
        }
        if priors.len() != states.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), found: priors.len() });
        }
        for (j, s) in states.iter().enumerate() {
            if s.factors() != states[0].factors() {
                return Err(Error::FactorizationMismatch);
            }
            let tr = s.trace();
            if (tr - Complex64::new(1.0, 0.0)).norm() > INSTANCE_STATE_TOL {
                return Err(Error::InvalidState(format!("state {} has trace {tr}", j + 1)));
            }
            if linalg::min_eigenvalue(s) < -INSTANCE_STATE_TOL {
                return Err(Error::InvalidState(format!("state {} is not PSD", j + 1)));
            }
        }
        if priors.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidState("priors must be strictly positive".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > INSTANCE_PRIOR_TOL {
            return Err(Error::InvalidState(format!("priors sum to {total}")));
        }
        Ok(Self { states, priors })
    }

    pub fn uniform(states: Vec<FloatOperator>) -> Result<Self> {
        let k = states.len().max(1);
        Self::new(states, vec![1.0 / k as f64; k])
    }

    pub fn from_set<T: Scalar>(set: &StateSet<T>) -> Result<Self> {
        let f = set.to_float();
        Self::new(f.states().to_vec(), f.priors().to_vec())
    }

    pub fn states(&self) -> &[FloatOperator] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn k(&self) -> usize {
        self.states.len()
    }

    pub fn factors(&self) -> &Factorization {
        self.states[0].factors()
    }

    /// Larger of the two local dimensions.
    pub fn local_dim(&self) -> usize {
        let f = self.factors();
        f.party_dim(Party::A).max(f.party_dim(Party::B))
    }
}

/// Seeded perturbation of the starting point, for robustness experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub seed: u64,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub eps_gap: f64,
    pub max_iter: usize,
    /// Over-relaxation `α ∈ (0, 2)`.
    pub alpha: f64,
    /// Initial ADMM penalty `σ`.
    pub step: f64,
    /// Residual balancing of `σ` at every convergence check.
    pub adaptive_step: bool,
    /// Iterations between convergence checks.
    pub check_interval: usize,
    pub max_local_dim: usize,
    pub perturbation: Option<Perturbation>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_primal: 1e-8,
            eps_dual: 1e-8,
            eps_gap: 1e-8,
            max_iter: 50_000,
            alpha: 1.5,
            step: 1.0,
            adaptive_step: true,
            check_interval: 10,
            max_local_dim: 16,
            perturbation: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_primal", self.eps_primal),
            ("eps_dual", self.eps_dual),
            ("eps_gap", self.eps_gap),
            ("step", self.step),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(invalid(format!("relaxation alpha = {} not in (0, 2)", self.alpha)));
        }
        if self.max_iter == 0 || self.check_interval == 0 {
            return Err(invalid("max_iter and check_interval must be positive"));
        }
        Ok(())
    }
}

/// Measurement operators `P_1 … P_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    operators: Vec<FloatOperator>,
}

impl Measurement {
    pub fn new(operators: Vec<FloatOperator>) -> Result<Self> {
        let first = operators.first().ok_or_else(|| invalid("empty measurement"))?;
        for p in &operators {
            if p.factors() != first.factors() {
                return Err(Error::FactorizationMismatch);
            }
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[FloatOperator] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

/// `Σ_j p_j Tr(P_j ρ_j)`; feasibility is not checked.
pub fn evaluate_primal(m: &Measurement, instance: &DiscriminationInstance) -> Result<f64> {
    if m.len() != instance.k() {
        return Err(Error::DimensionMismatch { expected: instance.k(), found: m.len() });
    }
    let mut v = 0.0;
    for ((p, rho), w) in m.operators.iter().zip(&instance.states).zip(&instance.priors) {
        v += w * p.inner_product(rho)?.re;
    }
    Ok(v)
}

/// Constraint diagnostics of a measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Spectral norm of `Σ P_j − I`.
    pub completeness: f64,
    /// `min_j λ_min(P_j)`.
    pub psd_margin: f64,
    /// `min_j λ_min(T_A(P_j))`.
    pub ppt_margin: f64,
    pub tol: f64,
    /// All three residuals at most `tol`.
    pub feasible: bool,
}

impl FeasibilityReport {
    /// `(completeness, PSD violation, PPT violation)`, violations clipped at zero.
    pub fn residuals(&self) -> (f64, f64, f64) {
        (self.completeness, (-self.psd_margin).max(0.0), (-self.ppt_margin).max(0.0))
    }

    pub fn within(&self, tol: f64) -> bool {
        let (a, b, c) = self.residuals();
        a <= tol && b <= tol && c <= tol
    }
}

pub fn check_feasibility(m: &Measurement, tol: f64) -> Result<FeasibilityReport> {
    let first = &m.operators[0];
    let mut sum = FloatOperator::zeros(first.factors().clone())?;
    let mut psd = f64::INFINITY;
    let mut ppt = f64::INFINITY;
    for p in &m.operators {
        sum = sum.try_add(p)?;
        psd = psd.min(linalg::min_eigenvalue(p));
        ppt = ppt.min(linalg::min_eigenvalue(&p.transpose_a()));
    }
    let defect = sum.try_sub(&FloatOperator::identity(first.factors().clone())?)?;
    let mut rep = FeasibilityReport {
        completeness: linalg::spectral_norm(&defect),
        psd_margin: psd,
        ppt_margin: ppt,
        tol,
        feasible: false,
    };
    rep.feasible = rep.within(tol);
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    /// The input failed validation; no iterations were run.
    InfeasibleInput,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Spectral norm of `Σ P_j − I` for the reported measurement.
    pub primal: f64,
    /// Largest PSD or PPT violation of the reported measurement.
    pub cone: f64,
    /// Dual bound minus reported value.
    pub gap: f64,
    /// Shift needed to make the raw dual estimate feasible.
    pub dual: f64,
    /// ADMM residuals `‖x − z‖` and `σ‖z − z_prev‖`.
    pub admm_primal: f64,
    pub admm_dual: f64,
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub value: f64,
    /// Objective of the dual-feasible point used for the gap.
    pub dual_bound: f64,
    pub measurement: Measurement,
    pub iterations: usize,
    pub residuals: Residuals,
    pub status: Status,
}

/// Partition of the basis such that every state, the identity, and the
/// image of any block-supported matrix under `T_A` stay block supported.
fn invariant_blocks(n: usize, pt: &[usize], mats: &[&[Complex64]]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    fn union(p: &mut [usize], a: usize, b: usize) -> bool {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra == rb {
            return false;
        }
        p[ra.max(rb)] = ra.min(rb);
        true
    }
    for m in mats {
        for (idx, x) in m.iter().enumerate() {
            if *x != ZERO {
                union(&mut parent, idx / n, idx % n);
            }
        }
    }
    loop {
        let mut changed = false;
        for r in 0..n {
            for c in 0..n {
                if find(&mut parent, r) == find(&mut parent, c) {
                    let d = pt[r * n + c];
                    changed |= union(&mut parent, d / n, d % n);
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

struct Space {
    n: usize,
    pt: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Space {
    fn transpose(&self, m: &[Complex64]) -> Mat {
        let mut out = vec![ZERO; m.len()];
        for (x, &d) in m.iter().zip(&self.pt) {
            out[d] = *x;
        }
        out
    }

    fn identity_scaled(&self, s: f64) -> Mat {
        let mut m = vec![ZERO; self.n * self.n];
        for i in 0..self.n {
            m[i * self.n + i] = Complex64::new(s, 0.0);
        }
        m
    }

    fn block(&self, m: &[Complex64], b: &[usize]) -> DMatrix<Complex64> {
        // Hermitian part guards against rounding asymmetry.
        DMatrix::from_fn(b.len(), b.len(), |r, c| {
            (m[b[r] * self.n + b[c]] + m[b[c] * self.n + b[r]].conj()) * 0.5
        })
    }

    fn project_psd(&self, m: &[Complex64]) -> Mat {
        let mut out = vec![ZERO; m.len()];
        for b in &self.blocks {
            if b.len() == 1 {
                let i = b[0] * self.n + b[0];
                out[i] = Complex64::new(m[i].re.max(0.0), 0.0);
                continue;
            }
            let p = linalg::project_psd(self.block(m, b));
            for (r, &gr) in b.iter().enumerate() {
                for (c, &gc) in b.iter().enumerate() {
                    out[gr * self.n + gc] = p[(r, c)];
                }
            }
        }
        out
    }

    fn min_eig(&self, m: &[Complex64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                if b.len() == 1 {
                    m[b[0] * self.n + b[0]].re
                } else {
                    linalg::hermitian_eigen(self.block(m, b)).values[0]
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn max_abs_eig(&self, m: &[Complex64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                if b.len() == 1 {
                    m[b[0] * self.n + b[0]].re.abs()
                } else {
                    let v = linalg::hermitian_eigen(self.block(m, b)).values;
                    v[0].abs().max(v[v.len() - 1].abs())
                }
            })
            .fold(0.0, f64::max)
    }

    /// Closed-form projection onto `{Σ P_j = I, R_j = T_A(P_j)}`; returns the `P_j`.
    fn affine_project(&self, p: &[Mat], r: &[Mat]) -> Vec<Mat> {
        let k = p.len();
        let mut mid: Vec<Mat> = p
            .iter()
            .zip(r)
            .map(|(pj, rj)| {
                let tr = self.transpose(rj);
                pj.iter().zip(&tr).map(|(a, b)| (a + b) * 0.5).collect()
            })
            .collect();
        let mut defect = self.identity_scaled(-1.0);
        for m in &mid {
            add_assign(&mut defect, m, 1.0);
        }
        for m in &mut mid {
            add_assign(m, &defect, -1.0 / k as f64);
        }
        mid
    }
}

fn add_assign(a: &mut [Complex64], b: &[Complex64], s: f64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y * s;
    }
}

fn fro_dist_sqr(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

fn inner_re(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

struct Evaluation {
    value: f64,
    dual_bound: f64,
    dual_shift: f64,
    measurement: Vec<Mat>,
    completeness: f64,
    cone: f64,
}

/// Feasible primal point and dual bound from the current iterates.
fn evaluate(space: &Space, c: &[Mat], z_p: &[Mat], z_r: &[Mat], u_p: &[Mat], u_r: &[Mat], sigma: f64) -> Evaluation {
    let n = space.n;
    let k = c.len();
    let p_hat = space.affine_project(z_p, z_r);
    let violation = p_hat
        .par_iter()
        .map(|p| (-space.min_eig(p)).max(-space.min_eig(&space.transpose(p))).max(0.0))
        .reduce(|| 0.0, f64::max);
    // Mixing with I/k, whose eigenvalues (and those of its partial transpose) are 1/k.
    let theta = violation / (violation + 1.0 / k as f64);
    let guess = space.identity_scaled(1.0 / k as f64);
    let measurement: Vec<Mat> = p_hat
        .iter()
        .map(|p| p.iter().zip(&guess).map(|(a, g)| a * (1.0 - theta) + g * theta).collect())
        .collect();
    let value: f64 = measurement.iter().zip(c).map(|(p, cj)| inner_re(p, cj)).sum();

    let mut sum = space.identity_scaled(-1.0);
    for p in &measurement {
        add_assign(&mut sum, p, 1.0);
    }
    let completeness = space.max_abs_eig(&sum);
    let cone = measurement
        .par_iter()
        .map(|p| (-space.min_eig(p)).max(-space.min_eig(&space.transpose(p))).max(0.0))
        .reduce(|| 0.0, f64::max);

    // Dual estimate: Y_j = c_j + W_j + T_A(Q_j) with W_j, Q_j the PSD parts of −σu.
    let parts: Vec<(Mat, Mat)> = (0..k)
        .into_par_iter()
        .map(|j| {
            let neg_p: Mat = u_p[j].iter().map(|x| -x * sigma).collect();
            let neg_r: Mat = u_r[j].iter().map(|x| -x * sigma).collect();
            let w = space.project_psd(&neg_p);
            let q = space.project_psd(&neg_r);
            let tq = space.transpose(&q);
            let mut yj = c[j].clone();
            add_assign(&mut yj, &w, 1.0);
            add_assign(&mut yj, &tq, 1.0);
            (yj, tq)
        })
        .collect();
    let mut y = vec![ZERO; n * n];
    for (yj, _) in &parts {
        add_assign(&mut y, yj, 1.0 / k as f64);
    }
    let shift = parts
        .par_iter()
        .zip(c.par_iter())
        .map(|((_, tq), cj)| {
            let mut m = y.clone();
            add_assign(&mut m, cj, -1.0);
            add_assign(&mut m, tq, -1.0);
            (-space.min_eig(&m)).max(0.0)
        })
        .reduce(|| 0.0, f64::max);
    let trace_y: f64 = (0..n).map(|i| y[i * n + i].re).sum();
    Evaluation {
        value,
        dual_bound: trace_y + shift * n as f64,
        dual_shift: shift,
        measurement,
        completeness,
        cone,
    }
}

/// Runs the splitting iteration from `P_j = I/k`.
pub fn solve(instance: &DiscriminationInstance, config: &SolverConfig) -> Result<SolverResult> {
    config.validate()?;
    let d = instance.local_dim();
    if d > config.max_local_dim {
        return Err(Error::DimensionCap { dim: d, cap: config.max_local_dim });
    }
    let factors = instance.factors().clone();
    let n = factors.total_dim();
    let k = instance.k();
    let pt = transpose_map(&factors, &factors.party_indices(Party::A));

    let c: Vec<Mat> = instance
        .states
        .iter()
        .zip(&instance.priors)
        .map(|(rho, &w)| rho.entries().iter().map(|x| x * w).collect())
        .collect();
    let refs: Vec<&[Complex64]> = c.iter().map(|m| m.as_slice()).collect();
    let blocks = invariant_blocks(n, &pt, &refs);
    let space = Space { n, pt, blocks };

    let start = space.identity_scaled(1.0 / k as f64);
    let mut z_p = vec![start.clone(); k];
    let mut z_r = vec![start; k];
    if let Some(pert) = config.perturbation {
        let mut rng = ChaCha8Rng::seed_from_u64(pert.seed);
        for m in z_p.iter_mut().chain(z_r.iter_mut()) {
            for b in &space.blocks {
                for (i, &r) in b.iter().enumerate() {
                    for &cc in &b[i..] {
                        let re = rng.random_range(-1.0..1.0) * pert.scale;
                        let im = if r == cc { 0.0 } else { rng.random_range(-1.0..1.0) * pert.scale };
                        m[r * n + cc] += Complex64::new(re, im);
                        if r != cc {
                            m[cc * n + r] += Complex64::new(re, -im);
                        }
                    }
                }
            }
        }
    }
    let mut u_p = vec![vec![ZERO; n * n]; k];
    let mut u_r = vec![vec![ZERO; n * n]; k];
    let mut sigma = config.step;
    let alpha = config.alpha;

    let mut iterations = 0;
    let mut admm = (f64::INFINITY, f64::INFINITY);
    let mut status = Status::MaxIter;
    let mut eval = evaluate(&space, &c, &z_p, &z_r, &u_p, &u_r, sigma);

    while iterations < config.max_iter {
        iterations += 1;
        // x-update: affine projection of z − u + c/σ.
        let a: Vec<Mat> = (0..k)
            .map(|j| {
                let mut m = z_p[j].clone();
                add_assign(&mut m, &u_p[j], -1.0);
                add_assign(&mut m, &c[j], 1.0 / sigma);
                m
            })
            .collect();
        let b: Vec<Mat> = (0..k)
            .map(|j| {
                let mut m = z_r[j].clone();
                add_assign(&mut m, &u_r[j], -1.0);
                m
            })
            .collect();
        let x_p = space.affine_project(&a, &b);
        let x_r: Vec<Mat> = x_p.iter().map(|p| space.transpose(p)).collect();

        // Relaxation, cone projection, multiplier update.
        let relax = |x: &[Mat], z: &[Mat]| -> Vec<Mat> {
            x.iter()
                .zip(z)
                .map(|(xj, zj)| xj.iter().zip(zj).map(|(a, b)| a * alpha + b * (1.0 - alpha)).collect())
                .collect()
        };
        let h_p = relax(&x_p, &z_p);
        let h_r = relax(&x_r, &z_r);
        let shifted: Vec<Mat> = h_p
            .iter()
            .zip(&u_p)
            .chain(h_r.iter().zip(&u_r))
            .map(|(h, u)| h.iter().zip(u).map(|(a, b)| a + b).collect())
            .collect();
        let projected: Vec<Mat> = shifted.par_iter().map(|m| space.project_psd(m)).collect();
        let (new_p, new_r) = projected.split_at(k);

        let mut prim = 0.0;
        let mut dual = 0.0;
        for j in 0..k {
            prim += fro_dist_sqr(&x_p[j], &new_p[j]) + fro_dist_sqr(&x_r[j], &new_r[j]);
            dual += fro_dist_sqr(&z_p[j], &new_p[j]) + fro_dist_sqr(&z_r[j], &new_r[j]);
            add_assign(&mut u_p[j], &h_p[j], 1.0);
            add_assign(&mut u_p[j], &new_p[j], -1.0);
            add_assign(&mut u_r[j], &h_r[j], 1.0);
            add_assign(&mut u_r[j], &new_r[j], -1.0);
        }
        z_p = new_p.to_vec();
        z_r = new_r.to_vec();
        admm = (prim.sqrt(), sigma * dual.sqrt());

        if iterations % config.check_interval == 0 || iterations == config.max_iter {
            eval = evaluate(&space, &c, &z_p, &z_r, &u_p, &u_r, sigma);
            let gap = eval.dual_bound - eval.value;
            if admm.0 <= config.eps_primal
                && admm.1 <= config.eps_dual
                && gap <= config.eps_gap
                && eval.completeness <= config.eps_primal
                && eval.cone <= config.eps_primal
            {
                status = Status::Converged;
                break;
            }
            if config.adaptive_step {
                let rescale = if admm.0 > 10.0 * admm.1 {
                    2.0
                } else if admm.1 > 10.0 * admm.0 {
                    0.5
                } else {
                    1.0
                };
                if rescale != 1.0 {
                    sigma *= rescale;
                    for u in u_p.iter_mut().chain(u_r.iter_mut()) {
                        u.iter_mut().for_each(|x| *x /= rescale);
                    }
                }
            }
        }
    }

    let operators = eval
        .measurement
        .iter()
        .map(|m| {
            let herm: Mat = (0..n * n)
                .map(|i| (m[i] + m[(i % n) * n + i / n].conj()) * 0.5)
                .collect();
            Operator::from_parts(factors.clone(), herm)
        })
        .collect();
    Ok(SolverResult {
        value: eval.value,
        dual_bound: eval.dual_bound,
        measurement: Measurement { operators },
        iterations,
        residuals: Residuals {
            primal: eval.completeness,
            cone: eval.cone,
            gap: eval.dual_bound - eval.value,
            dual: eval.dual_shift,
            admm_primal: admm.0,
            admm_dual: admm.1,
        },
        status,
    })
}
