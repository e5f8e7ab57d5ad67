//! Closed-form dual solutions for the recursive ensembles and their exact
//! verification.
//!
//! For a set with priors `p_j`, a certificate `(Y, Q₁…Q_k)` is checked
//! against `Y − k·p_j·ρ_j − T_A(Q_j) ⪰ 0`, `Q_j ⪰ 0`, and bounds the PPT
//! success probability by `Tr(Y)/k`. With uniform priors `k·p_j = 1`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::factorization::Factorization;
use crate::operator::{kron_all, ExactOperator};
use crate::psd::{is_psd_exact, PsdCheck};
use crate::scalar::{rat, ExactComplex};
use crate::states::{bell_density, ExactStateSet};

/// Dual-feasible candidate `(Y, Q₁…Q_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate {
    y: ExactOperator,
    q: Vec<ExactOperator>,
    t: Option<u32>,
}

impl DualCertificate {
    /// Checks that every operator shares `Y`'s factorization. PSD-ness of the
    /// `Q_j` is left to [`verify`].
    pub fn new(y: ExactOperator, q: Vec<ExactOperator>, t: Option<u32>) -> Result<Self> {
        if q.is_empty() {
            return Err(invalid("certificate needs at least one Q operator"));
        }
        for qj in &q {
            if qj.dim() != y.dim() {
                return Err(Error::DimensionMismatch { expected: y.dim(), found: qj.dim() });
            }
            if qj.factors() != y.factors() {
                return Err(Error::FactorizationMismatch);
            }
        }
        Ok(Self { y, q, t })
    }

    pub fn y(&self) -> &ExactOperator {
        &self.y
    }

    pub fn q(&self) -> &[ExactOperator] {
        &self.q
    }

    pub fn t(&self) -> Option<u32> {
        self.t
    }

    pub fn k(&self) -> usize {
        self.q.len()
    }

    /// Replaces `Q_j` (one-based).
    pub fn with_q(mut self, j: usize, qj: ExactOperator) -> Result<Self> {
        if j == 0 || j > self.q.len() {
            return Err(invalid(format!("Q index {j} out of range")));
        }
        self.q[j - 1] = qj;
        Self::new(self.y, self.q, self.t)
    }
}

/// How a recursive index `j` selects the base operator `Q_r`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BaseIndexMap {
    /// `r = ((j − 1) mod 4) + 1`; keeps `r = j` at `t = 2`.
    #[default]
    Cyclic,
    /// `r = (j mod 4) + 1`, i.e. `r − 1 ≡ j (mod 4)` read literally.
    Shifted,
}

impl BaseIndexMap {
    pub fn base_index(self, j: usize) -> usize {
        match self {
            BaseIndexMap::Cyclic => (j - 1) % 4 + 1,
            BaseIndexMap::Shifted => j % 4 + 1,
        }
    }
}

fn bell_sum(indices: &[usize]) -> ExactOperator {
    indices
        .iter()
        .map(|&i| bell_density(i).expect("valid Bell index"))
        .reduce(|a, b| &a + &b)
        .expect("nonempty sum")
}

fn half_of(terms: [(&[usize], &[usize]); 2]) -> ExactOperator {
    let [(a1, b1), (a2, b2)] = terms;
    let first = bell_sum(a1).kron(&bell_sum(b1)).expect("16-dimensional");
    let second = bell_sum(a2).kron(&bell_sum(b2)).expect("16-dimensional");
    (&first + &second).scale(&rat(1, 2))
}

fn base_y() -> ExactOperator {
    let f = Factorization::interleaved_pairs(2, 2);
    let id = ExactOperator::identity(f).expect("16-dimensional");
    let t = bell_density(2).unwrap().kron(&bell_density(3).unwrap()).unwrap().transpose_a();
    &id.scale(&rat(1, 4)) - &t.scale(&rat(1, 2))
}

fn base_q() -> Vec<ExactOperator> {
    vec![
        half_of([(&[0, 1, 3], &[2]), (&[2], &[0, 1])]),
        half_of([(&[0, 1], &[3]), (&[3], &[0, 1, 2])]),
        half_of([(&[1, 3], &[3]), (&[0], &[0, 1, 2])]),
        half_of([(&[0, 3], &[3]), (&[1], &[0, 1, 2])]),
    ]
}

/// `Y⁽²⁾ = I/4 − T_A(ψ₂⊗ψ₃)/2` with the four base `Q_j⁽²⁾`.
pub fn base_certificate() -> DualCertificate {
    DualCertificate::new(base_y(), base_q(), Some(2)).expect("consistent shapes")
}

/// `Y⁽ᵗ⁾ = (ψ₀+ψ₁)^{⊗(t−2)} ⊗ Y⁽²⁾`, `Q_j⁽ᵗ⁾ = (ψ₀+ψ₁)^{⊗(t−2)} ⊗ Q_r⁽²⁾`, truncated to `k`.
pub fn recursive_certificate(t: u32, k: usize) -> Result<DualCertificate> {
    recursive_certificate_with(t, k, BaseIndexMap::Cyclic)
}

pub fn recursive_certificate_with(t: u32, k: usize, map: BaseIndexMap) -> Result<DualCertificate> {
    if t < 2 {
        return Err(invalid(format!("recursion level t = {t} must be at least 2")));
    }
    if t > 15 {
        return Err(invalid(format!("recursion level t = {t} is too large")));
    }
    let size = 1usize << t;
    if k == 0 || k > size {
        return Err(invalid(format!("k = {k} out of range 1..={size}")));
    }
    let y2 = base_y();
    let q2 = base_q();
    let prefix = if t > 2 {
        let s = bell_sum(&[0, 1]);
        Some(kron_all(std::iter::repeat_n(&s, (t - 2) as usize))?)
    } else {
        None
    };
    let lift = |m: &ExactOperator| -> Result<ExactOperator> {
        match &prefix {
            Some(p) => p.kron(m),
            None => Ok(m.clone()),
        }
    };
    let y = lift(&y2)?;
    let lifted: Vec<ExactOperator> = q2.iter().map(&lift).collect::<Result<_>>()?;
    let q = (1..=k).map(|j| lifted[map.base_index(j) - 1].clone()).collect();
    DualCertificate::new(y, q, Some(t))
}

/// `Tr(Y)/k`.
pub fn certificate_objective(cert: &DualCertificate, k: usize) -> Result<BigRational> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    Ok(cert.y.trace().re / BigRational::from_integer(BigInt::from(k)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// `Y` is not Hermitian.
    YNotHermitian,
    /// `Q_j` is not PSD.
    QNotPsd,
    /// `Y − k·p_j·ρ_j − T_A(Q_j)` is not PSD.
    DualConstraint,
}

/// A violated constraint. `value` is `v†Mv < 0` for the witness `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintFailure {
    pub index: usize,
    pub kind: FailureKind,
    pub witness: Option<Vec<ExactComplex>>,
    pub value: Option<BigRational>,
}

/// Result of exact certificate verification.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub feasible: bool,
    pub objective: BigRational,
    pub y_hermitian: bool,
    /// Per-`j` verdicts of `Q_j ⪰ 0`.
    pub q_psd: Vec<bool>,
    /// Per-`j` verdicts of `Y − k·p_j·ρ_j − T_A(Q_j) ⪰ 0`.
    pub constraint_psd: Vec<bool>,
    pub failures: Vec<ConstraintFailure>,
}

/// `Y − k·p_j·ρ_j − T_A(Q_j)`.
pub fn constraint_operator(
    set: &ExactStateSet,
    cert: &DualCertificate,
    j: usize,
) -> Result<ExactOperator> {
    let k = BigRational::from_integer(BigInt::from(set.k()));
    let weight = &set.priors()[j] * &k;
    let rho = &set.states()[j];
    let weighted = if weight.is_one() { rho.clone() } else { rho.scale(&weight) };
    cert.y.try_sub(&weighted)?.try_sub(&cert.q[j].transpose_a())
}

fn failure(index: usize, kind: FailureKind, m: &ExactOperator, check: PsdCheck<ExactComplex>) -> ConstraintFailure {
    let value = check
        .witness
        .as_ref()
        .and_then(|v| m.quadratic_form(v).ok())
        .map(|q| q.re);
    ConstraintFailure { index, kind, witness: check.witness, value }
}

/// Exact feasibility check of `cert` for `set`; constraints are checked in
/// parallel and reported in index order.
pub fn verify(set: &ExactStateSet, cert: &DualCertificate) -> Result<VerificationReport> {
    if set.k() != cert.k() {
        return Err(Error::DimensionMismatch { expected: set.k(), found: cert.k() });
    }
    if set.dim() != cert.y.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: cert.y.dim() });
    }
    if set.factors() != cert.y.factors() {
        return Err(Error::FactorizationMismatch);
    }
    let y_hermitian = cert.y.is_hermitian_within(0.0);

    let checks: Vec<Result<(Option<ConstraintFailure>, Option<ConstraintFailure>)>> = (0..set.k())
        .into_par_iter()
        .map(|j| {
            let qj = &cert.q[j];
            let qc = is_psd_exact(qj);
            let q_fail = (!qc.psd).then(|| failure(j + 1, FailureKind::QNotPsd, qj, qc));
            let m = constraint_operator(set, cert, j)?;
            let mc = is_psd_exact(&m);
            let m_fail = (!mc.psd).then(|| failure(j + 1, FailureKind::DualConstraint, &m, mc));
            Ok((q_fail, m_fail))
        })
        .collect();

    let mut failures = Vec::new();
    if !y_hermitian {
        failures.push(ConstraintFailure {
            index: 0,
            kind: FailureKind::YNotHermitian,
            witness: None,
            value: None,
        });
    }
    let mut q_psd = Vec::with_capacity(set.k());
    let mut constraint_psd = Vec::with_capacity(set.k());
    for c in checks {
        let (qf, mf) = c?;
        q_psd.push(qf.is_none());
        constraint_psd.push(mf.is_none());
        failures.extend(qf);
        failures.extend(mf);
    }
    Ok(VerificationReport {
        feasible: failures.is_empty(),
        objective: certificate_objective(cert, set.k())?,
        y_hermitian,
        q_psd,
        constraint_psd,
        failures,
    })
}

impl VerificationReport {
    pub fn objective_f64(&self) -> f64 {
        crate::scalar::ratio_to_f64(&self.objective)
    }
}

/// Trivial certificate `Y = c·I`, `Q_j = 0`.
pub fn scaled_identity_certificate(factors: Factorization, c: &BigRational, k: usize) -> Result<DualCertificate> {
    let y = ExactOperator::identity(factors.clone())?.scale(c);
    let zero = ExactOperator::zeros(factors)?;
    DualCertificate::new(y, vec![zero; k], None)
}
