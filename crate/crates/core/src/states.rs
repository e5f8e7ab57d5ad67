//! Bell states, the four-state base ensemble, and the recursive Bell-product
//! ensembles in `C^d ⊗ C^d` with `d = 2^t`.
//!
//! State `j` (one-based) of level `t` is a tensor product of `t` two-qubit
//! Bell states in interleaved order `(A₁,B₁,…,A_t,B_t)`. At `t = 2` the four
//! states are `ψ₀⊗ψ₀, ψ₁⊗ψ₁, ψ₂⊗ψ₁, ψ₃⊗ψ₁`; for `t > 2` the first half
//! prepends `ψ₀` to the level `t-1` list and the second half prepends `ψ₁`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::factorization::{Factorization, Party};
use crate::operator::{kron_all, ExactOperator, Operator};
use crate::scalar::{ExactComplex, Scalar};

/// Tolerance for float-mode state checks (traces, reductions, overlaps).
pub const STATE_TOL: f64 = 1e-10;

/// Pure state `amplitudes / √2^sqrt2_power`.
///
/// The shared radical keeps Bell-product amplitudes rational: every Bell
/// vector is a ±1 pattern over `√2`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T> {
    factors: Factorization,
    amplitudes: Vec<T>,
    sqrt2_power: u32,
}

pub type ExactPureState = PureState<ExactComplex>;

impl<T: Scalar> PureState<T> {
    pub fn new(factors: Factorization, amplitudes: Vec<T>, sqrt2_power: u32) -> Result<Self> {
        if amplitudes.len() != factors.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: factors.total_dim(),
                found: amplitudes.len(),
            });
        }
        let s = Self { factors, amplitudes, sqrt2_power };
        let norm = s.norm_sqr();
        if !T::real_close(&norm, &T::real_from_rational(&rat_one()), 1e-12) {
            return Err(Error::InvalidState(format!(
                "squared norm {} is not 1",
                T::real_to_f64(&norm)
            )));
        }
        Ok(s)
    }

    pub fn factors(&self) -> &Factorization {
        &self.factors
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    pub fn sqrt2_power(&self) -> u32 {
        self.sqrt2_power
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    fn radical_scale(&self) -> T::Real {
        T::real_from_rational(&pow2_inv(self.sqrt2_power))
    }

    pub fn norm_sqr(&self) -> T::Real {
        let s = self
            .amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.conj() * a.clone());
        (s * T::from_real(&self.radical_scale())).real_part()
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> Result<Operator<T>> {
        Operator::outer(self.factors.clone(), &self.amplitudes, &self.radical_scale())
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a.clone() * b.clone());
            }
        }
        Ok(Self {
            factors: self.factors.concat(&other.factors),
            amplitudes: amps,
            sqrt2_power: self.sqrt2_power + other.sqrt2_power,
        })
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_sqr(&self, other: &Self) -> Result<T::Real> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let ip = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(T::zero(), |acc, (a, b)| acc + a.conj() * b.clone());
        let scale = T::from_real(&T::real_from_rational(&pow2_inv(
            self.sqrt2_power + other.sqrt2_power,
        )));
        Ok((ip.conj() * ip * scale).real_part())
    }

    /// Float copy with the radical folded into the amplitudes.
    pub fn to_float(&self) -> PureState<Complex64> {
        let s = 2f64.powf(-(self.sqrt2_power as f64) / 2.0);
        PureState {
            factors: self.factors.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a.to_c64() * s).collect(),
            sqrt2_power: 0,
        }
    }
}

fn rat_one() -> BigRational {
    BigRational::one()
}

/// `2^{-p}`, the square of the radical `1/√2^p`.
fn pow2_inv(p: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << p as usize)
}

/// Amplitude patterns (over `√2`) of the Bell basis in the order
/// `|00⟩, |01⟩, |10⟩, |11⟩`.
pub(crate) const BELL_PATTERNS: [[i64; 4]; 4] = [
    [1, 0, 0, 1],  // ψ₀ = (|00⟩ + |11⟩)/√2
    [0, 1, 1, 0],  // ψ₁ = (|01⟩ + |10⟩)/√2
    [0, 1, -1, 0], // ψ₂ = (|01⟩ − |10⟩)/√2
    [1, 0, 0, -1], // ψ₃ = (|00⟩ − |11⟩)/√2
];

fn check_bell_index(i: usize) -> Result<()> {
    if i > 3 {
        Err(invalid(format!("Bell index {i} out of range 0..=3")))
    } else {
        Ok(())
    }
}

/// `|ψ_i⟩` with factorization `(A:2, B:2)`.
pub fn bell_vector(i: usize) -> Result<ExactPureState> {
    check_bell_index(i)?;
    let amps = BELL_PATTERNS[i].iter().map(|&x| ExactComplex::from_integer(x)).collect();
    PureState::new(Factorization::bipartite(2, 2), amps, 1)
}

/// `ψ_i = |ψ_i⟩⟨ψ_i|` as an exact 4×4 operator.
pub fn bell_density(i: usize) -> Result<ExactOperator> {
    bell_vector(i)?.density()
}

/// `(1/√d) Σ_k ω^{bk} |k⟩|k+a mod d⟩` with `ω = exp(2πi/d)`, in float mode.
pub fn generalized_bell(d: usize, a: usize, b: usize) -> Result<PureState<Complex64>> {
    if d < 2 {
        return Err(invalid(format!("local dimension {d} must be at least 2")));
    }
    if a >= d || b >= d {
        return Err(invalid(format!("shift/phase ({a}, {b}) out of range for d = {d}")));
    }
    let norm = 1.0 / (d as f64).sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        // Reduce the exponent first so that phases like ω^d land exactly on 1.
        let phase = 2.0 * PI * ((b * k) % d) as f64 / d as f64;
        amps[k * d + (k + a) % d] = Complex64::from_polar(norm, phase);
    }
    PureState::new(Factorization::bipartite(d, d), amps, 0)
}

/// Bell labels of the `t = 2` base states.
const BASE_LABELS: [[usize; 2]; 4] = [[0, 0], [1, 1], [2, 1], [3, 1]];

fn check_level(t: u32) -> Result<()> {
    if t < 2 {
        return Err(invalid(format!("recursion level t = {t} must be at least 2")));
    }
    // d² = 4^t must stay addressable; the operator cap is enforced separately.
    if t > 15 {
        return Err(invalid(format!("recursion level t = {t} is too large")));
    }
    Ok(())
}

/// Bell labels `(x₁,…,x_t)` of state `j` (one-based) at level `t`.
pub fn recursive_labels(t: u32, j: usize) -> Result<Vec<usize>> {
    check_level(t)?;
    let size = 1usize << t;
    if j == 0 || j > size {
        return Err(invalid(format!("state index {j} out of range 1..={size}")));
    }
    let mut labels = Vec::with_capacity(t as usize);
    let (mut level, mut j) = (t, j);
    while level > 2 {
        let half = 1usize << (level - 1);
        if j <= half {
            labels.push(0);
        } else {
            labels.push(1);
            j -= half;
        }
        level -= 1;
    }
    labels.extend_from_slice(&BASE_LABELS[j - 1]);
    Ok(labels)
}

/// Pure vector of `ρ_j^{(t)}`.
pub fn recursive_pure_state(t: u32, j: usize) -> Result<ExactPureState> {
    let labels = recursive_labels(t, j)?;
    let vecs: Vec<ExactPureState> = labels.iter().map(|&x| bell_vector(x)).collect::<Result<_>>()?;
    let mut it = vecs.into_iter();
    let first = it.next().expect("t >= 2");
    it.try_fold(first, |acc, v| acc.kron(&v))
}

/// Density operator of `ρ_j^{(t)}`.
pub fn recursive_state(t: u32, j: usize) -> Result<ExactOperator> {
    let labels = recursive_labels(t, j)?;
    let bells: Vec<ExactOperator> = (0..4).map(bell_density).collect::<Result<_>>()?;
    kron_all(labels.iter().map(|&x| &bells[x]))
}

/// Discrimination ensemble: density operators on one factorization with
/// strictly positive priors summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSet<T: Scalar> {
    states: Vec<Operator<T>>,
    priors: Vec<T::Real>,
    t: Option<u32>,
    indices: Option<Vec<usize>>,
}

pub type ExactStateSet = StateSet<ExactComplex>;
pub type FloatStateSet = StateSet<Complex64>;

impl<T: Scalar> StateSet<T> {
    /// Validates unit trace, PSD, shared factorization and the priors.
    pub fn new(states: Vec<Operator<T>>, priors: Vec<T::Real>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidState("empty state set".into()));
        }
        if priors.len() != states.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), found: priors.len() });
        }
        let factors = states[0].factors();
        let one = T::real_from_rational(&rat_one());
        for (j, s) in states.iter().enumerate() {
            if s.factors() != factors {
                return Err(Error::FactorizationMismatch);
            }
            let tr = s.trace();
            if !T::real_close(&tr.real_part(), &one, STATE_TOL)
                || !T::real_close(&tr.imag_part(), &T::real_from_rational(&BigRational::zero()), STATE_TOL)
            {
                return Err(Error::InvalidState(format!("state {} does not have unit trace", j + 1)));
            }
            if !T::is_psd(s) {
                return Err(Error::InvalidState(format!("state {} is not PSD", j + 1)));
            }
        }
        if priors.iter().any(|p| !T::real_is_positive(p)) {
            return Err(Error::InvalidState("priors must be strictly positive".into()));
        }
        let total = priors
            .iter()
            .fold(T::zero(), |acc, p| acc + T::from_real(p))
            .real_part();
        if !T::real_close(&total, &one, 1e-12) {
            return Err(Error::InvalidState("priors do not sum to 1".into()));
        }
        Ok(Self { states, priors, t: None, indices: None })
    }

    /// Uniform priors `1/k`.
    pub fn uniform(states: Vec<Operator<T>>) -> Result<Self> {
        let k = states.len().max(1);
        let p = T::real_from_rational(&BigRational::new(BigInt::one(), BigInt::from(k)));
        Self::new(states, vec![p; k])
    }

    pub fn with_origin(mut self, t: u32, indices: Vec<usize>) -> Self {
        self.t = Some(t);
        self.indices = Some(indices);
        self
    }

    pub fn states(&self) -> &[Operator<T>] {
        &self.states
    }

    pub fn priors(&self) -> &[T::Real] {
        &self.priors
    }

    pub fn k(&self) -> usize {
        self.states.len()
    }

    /// Recursion level when the set came from the recursive construction.
    pub fn t(&self) -> Option<u32> {
        self.t
    }

    /// One-based recursion indices of the members, when constructed.
    pub fn indices(&self) -> Option<&[usize]> {
        self.indices.as_deref()
    }

    /// Local dimension of party A.
    pub fn d(&self) -> usize {
        self.factors().party_dim(Party::A)
    }

    pub fn factors(&self) -> &Factorization {
        self.states[0].factors()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn is_uniform(&self) -> bool {
        self.priors.iter().all(|p| T::real_close(p, &self.priors[0], 0.0))
    }

    pub fn to_float(&self) -> StateSet<Complex64> {
        StateSet {
            states: self.states.iter().map(Operator::to_float).collect(),
            priors: self.priors.iter().map(T::real_to_f64).collect(),
            t: self.t,
            indices: self.indices.clone(),
        }
    }
}

/// The `t = 2` set `{ψ₀⊗ψ₀, ψ₁⊗ψ₁, ψ₂⊗ψ₁, ψ₃⊗ψ₁}`.
pub fn yu_set() -> ExactStateSet {
    recursive_set(2, 4).expect("base set is always valid")
}

/// First `k` states of level `t`.
pub fn recursive_set(t: u32, k: usize) -> Result<ExactStateSet> {
    check_level(t)?;
    let size = 1usize << t;
    if k == 0 || k > size {
        return Err(invalid(format!("k = {k} out of range 1..={size}")));
    }
    recursive_subset(t, &(1..=k).collect::<Vec<_>>())
}

/// Members with the given one-based indices (distinct, in the listed order).
pub fn recursive_subset(t: u32, indices: &[usize]) -> Result<ExactStateSet> {
    check_level(t)?;
    if indices.is_empty() {
        return Err(invalid("empty index list"));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = indices.iter().find(|&&j| !seen.insert(j)) {
        return Err(invalid(format!("index {dup} repeated")));
    }
    let states = indices.iter().map(|&j| recursive_state(t, j)).collect::<Result<Vec<_>>>()?;
    Ok(StateSet::uniform(states)?.with_origin(t, indices.to_vec()))
}

/// True iff both reductions equal `I/d` and the state is pure.
///
/// Interleaved or otherwise mixed factor orders are regrouped into the
/// `A…A|B…B` cut first.
pub fn is_maximally_entangled<T: Scalar>(rho: &Operator<T>) -> Result<bool> {
    let f = rho.factors();
    let (da, db) = (f.party_dim(Party::A), f.party_dim(Party::B));
    if da != db || f.party_indices(Party::A).is_empty() || f.party_indices(Party::B).is_empty() {
        return Err(Error::UnbalancedCut { dim_a: da, dim_b: db });
    }
    let one = T::real_from_rational(&rat_one());
    if !T::real_close(&rho.purity().real_part(), &one, STATE_TOL) {
        return Ok(false);
    }
    let grouped = rho.group_by_party()?;
    let inv_d = T::from_rational(&BigRational::new(BigInt::one(), BigInt::from(da)));
    for party in [Party::A, Party::B] {
        let r = grouped.partial_trace(party)?;
        let n = r.dim();
        for row in 0..n {
            for col in 0..n {
                let want = if row == col { inv_d.clone() } else { T::zero() };
                if !r.entry(row, col).close_to(&want, STATE_TOL) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

pub fn is_maximally_entangled_pure<T: Scalar>(psi: &PureState<T>) -> Result<bool> {
    is_maximally_entangled(&psi.density()?)
}

/// `Tr(ρ_i ρ_j) = δ_ij` for all pairs.
pub fn check_orthonormal<T: Scalar>(set: &StateSet<T>) -> bool {
    let s = set.states();
    for i in 0..s.len() {
        for j in i..s.len() {
            let want = if i == j { T::one() } else { T::zero() };
            match s[i].inner_product(&s[j]) {
                Ok(ip) if ip.close_to(&want, STATE_TOL) => {}
                _ => return false,
            }
        }
    }
    true
}

/// Orthonormality of pure states through `|⟨u|v⟩|²`, avoiding density matrices.
pub fn check_orthonormal_pure<T: Scalar>(states: &[PureState<T>]) -> bool {
    let one = T::real_from_rational(&rat_one());
    let zero = T::real_from_rational(&BigRational::zero());
    for i in 0..states.len() {
        for j in i..states.len() {
            let want = if i == j { &one } else { &zero };
            match states[i].overlap_sqr(&states[j]) {
                Ok(o) if T::real_close(&o, want, STATE_TOL) => {}
                _ => return false,
            }
        }
    }
    true
}
