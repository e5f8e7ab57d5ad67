//! Dense Hermitian operators with tensor-product bookkeeping.

use std::ops::{Add, Neg, Sub};
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::factorization::{check_permutation, Factorization, Party};
use crate::scalar::{ExactComplex, Scalar};

/// Default cap on the total dimension of any operator.
pub const DEFAULT_MAX_DIM: usize = 1024;

static MAX_DIM: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_DIM);

/// Current cap on total operator dimension.
pub fn max_dim() -> usize {
    MAX_DIM.load(Ordering::Relaxed)
}

/// Overrides the process-wide dimension cap.
pub fn set_max_dim(cap: usize) {
    MAX_DIM.store(cap.max(1), Ordering::Relaxed);
}

fn check_cap(dim: usize) -> Result<()> {
    let cap = max_dim();
    if dim > cap {
        Err(Error::DimensionCap { dim, cap })
    } else {
        Ok(())
    }
}

/// Entrywise tolerance of the Hermiticity check in float mode.
pub const FLOAT_HERMITIAN_TOL: f64 = 1e-12;

/// Which tensor factors a partial transpose acts on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartySelector {
    Party(Party),
    Factors(Vec<usize>),
}

impl Default for PartySelector {
    fn default() -> Self {
        PartySelector::Party(Party::A)
    }
}

/// Square Hermitian matrix stored row-major, together with the tensor
/// factorization that fixes its bipartite cut.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T> {
    factors: Factorization,
    dim: usize,
    entries: Vec<T>,
}

pub type ExactOperator = Operator<ExactComplex>;
pub type FloatOperator = Operator<Complex64>;

impl<T: Scalar> Operator<T> {
    /// Validates shape, the dimension cap and Hermiticity.
    pub fn new(factors: Factorization, entries: Vec<T>) -> Result<Self> {
        let dim = factors.total_dim();
        check_cap(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        check_hermitian(&entries, dim)?;
        Ok(Self { factors, dim, entries })
    }

    pub fn from_fn(factors: Factorization, f: impl Fn(usize, usize) -> T) -> Result<Self> {
        let dim = factors.total_dim();
        check_cap(dim)?;
        let entries = (0..dim * dim).map(|i| f(i / dim, i % dim)).collect();
        Self::new(factors, entries)
    }

    /// Caller guarantees the entries are Hermitian and sized to the factorization.
    pub(crate) fn from_parts(factors: Factorization, entries: Vec<T>) -> Self {
        let dim = factors.total_dim();
        debug_assert_eq!(entries.len(), dim * dim);
        Self { factors, dim, entries }
    }

    pub fn zeros(factors: Factorization) -> Result<Self> {
        let dim = factors.total_dim();
        check_cap(dim)?;
        Ok(Self::from_parts(factors, vec![T::zero(); dim * dim]))
    }

    pub fn identity(factors: Factorization) -> Result<Self> {
        let mut m = Self::zeros(factors)?;
        for i in 0..m.dim {
            m.entries[i * m.dim + i] = T::one();
        }
        Ok(m)
    }

    /// `scale · |v⟩⟨v|` for a real `scale`.
    pub fn outer(factors: Factorization, v: &[T], scale: &T::Real) -> Result<Self> {
        let dim = factors.total_dim();
        check_cap(dim)?;
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        let s = T::from_real(scale);
        let conj: Vec<T> = v.iter().map(|x| x.conj()).collect();
        let mut entries = Vec::with_capacity(dim * dim);
        for vr in v {
            if vr.is_zero() {
                entries.extend(std::iter::repeat_n(T::zero(), dim));
                continue;
            }
            let row = vr.clone() * s.clone();
            for c in &conj {
                entries.push(if c.is_zero() { T::zero() } else { row.clone() * c.clone() });
            }
        }
        Ok(Self::from_parts(factors, entries))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &Factorization {
        &self.factors
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> &T {
        &self.entries[row * self.dim + col]
    }

    pub fn into_entries(self) -> Vec<T> {
        self.entries
    }

    /// Same entries under a different factorization of equal total dimension.
    pub fn relabel(mut self, factors: Factorization) -> Result<Self> {
        if factors.total_dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: factors.total_dim() });
        }
        self.factors = factors;
        Ok(self)
    }

    pub fn trace(&self) -> T {
        (0..self.dim).fold(T::zero(), |acc, i| acc + self.entries[i * self.dim + i].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|x| x.is_zero())
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|x| !x.is_zero()).count()
    }

    pub fn scale(&self, r: &T::Real) -> Self {
        let s = T::from_real(r);
        self.map_entries(|x| if x.is_zero() { T::zero() } else { x.clone() * s.clone() })
    }

    fn map_entries(&self, f: impl Fn(&T) -> T) -> Self {
        Self::from_parts(self.factors.clone(), self.entries.iter().map(f).collect())
    }

    fn zip_entries(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.factors != other.factors {
            return Err(Error::FactorizationMismatch);
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect();
        Ok(Self::from_parts(self.factors.clone(), entries))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_entries(other, |a, b| {
            if b.is_zero() {
                a.clone()
            } else if a.is_zero() {
                b.clone()
            } else {
                a.clone() + b.clone()
            }
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_entries(other, |a, b| {
            if b.is_zero() {
                a.clone()
            } else if a.is_zero() {
                -b.clone()
            } else {
                a.clone() - b.clone()
            }
        })
    }

    /// Entrywise Hermiticity test; `tol` is ignored in exact mode.
    pub fn is_hermitian_within(&self, tol: f64) -> bool {
        let n = self.dim;
        (0..n).all(|r| (r..n).all(|c| self.entry(r, c).close_to(&self.entry(c, r).conj(), tol)))
    }

    pub fn to_float(&self) -> FloatOperator {
        Operator::from_parts(self.factors.clone(), self.entries.iter().map(|x| x.to_c64()).collect())
    }

    /// Kronecker product `self ⊗ other`; the factorization is the concatenation.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        check_cap(dim)?;
        let zero = T::zero();
        let mut entries = vec![zero; dim * dim];
        for i in 0..n {
            for j in 0..n {
                let a = &self.entries[i * n + j];
                if a.is_zero() {
                    continue;
                }
                for k in 0..m {
                    let row = (i * m + k) * dim + j * m;
                    for l in 0..m {
                        let b = &other.entries[k * m + l];
                        if !b.is_zero() {
                            entries[row + l] = a.clone() * b.clone();
                        }
                    }
                }
            }
        }
        Ok(Self::from_parts(self.factors.concat(&other.factors), entries))
    }

    fn selected_factors(&self, sel: &PartySelector) -> Result<Vec<usize>> {
        match sel {
            PartySelector::Party(p) => Ok(self.factors.party_indices(*p)),
            PartySelector::Factors(list) => {
                if let Some(&bad) = list.iter().find(|&&i| i >= self.factors.len()) {
                    return Err(Error::InvalidFactor(bad));
                }
                Ok(list.clone())
            }
        }
    }

    fn selected_offsets(&self, selected: &[usize]) -> Vec<usize> {
        selected_offsets(&self.factors, selected)
    }

    /// Transposes the indices of every selected factor.
    pub fn partial_transpose(&self, sel: &PartySelector) -> Result<Self> {
        let selected = self.selected_factors(sel)?;
        let map = transpose_map(&self.factors, &selected);
        let mut entries = vec![T::zero(); self.dim * self.dim];
        for (x, &dest) in self.entries.iter().zip(&map) {
            if !x.is_zero() {
                entries[dest] = x.clone();
            }
        }
        Ok(Self::from_parts(self.factors.clone(), entries))
    }

    /// `T_A`: transpose on every A-factor.
    pub fn transpose_a(&self) -> Self {
        self.partial_transpose(&PartySelector::Party(Party::A))
            .expect("party selector is always valid")
    }

    /// Traces out the listed factors.
    pub fn partial_trace_factors(&self, traced: &[usize]) -> Result<Self> {
        if let Some(&bad) = traced.iter().find(|&&i| i >= self.factors.len()) {
            return Err(Error::InvalidFactor(bad));
        }
        let kept = self.factors.without(traced).ok_or(Error::TraceOutEverything)?;
        let kept_pos: Vec<usize> =
            (0..self.factors.len()).filter(|i| !traced.contains(i)).collect();
        let traced_off = self.selected_offsets(traced);
        // Row-major index of each basis vector within the kept factors.
        let strides = self.factors.strides();
        let kept_strides = kept.strides();
        let dims: Vec<usize> = self.factors.factors().iter().map(|f| f.dim).collect();
        let reduced: Vec<usize> = (0..self.dim)
            .map(|i| {
                kept_pos
                    .iter()
                    .zip(&kept_strides)
                    .map(|(&f, &s)| (i / strides[f]) % dims[f] * s)
                    .sum()
            })
            .collect();
        let m = kept.total_dim();
        let mut entries = vec![T::zero(); m * m];
        let n = self.dim;
        for r in 0..n {
            for c in 0..n {
                if traced_off[r] != traced_off[c] {
                    continue;
                }
                let x = &self.entries[r * n + c];
                if x.is_zero() {
                    continue;
                }
                let slot = &mut entries[reduced[r] * m + reduced[c]];
                *slot = slot.clone() + x.clone();
            }
        }
        Ok(Self::from_parts(kept, entries))
    }

    /// Traces out every factor belonging to `party`.
    pub fn partial_trace(&self, party: Party) -> Result<Self> {
        let traced = self.factors.party_indices(party);
        if traced.is_empty() {
            return Err(invalid(format!("no factor of party {party} to trace out")));
        }
        self.partial_trace_factors(&traced)
    }

    /// `Tr(self† · other)`.
    pub fn inner_product(&self, other: &Self) -> Result<T> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(self.entries.iter().zip(&other.entries).fold(T::zero(), |acc, (a, b)| {
            if a.is_zero() || b.is_zero() {
                acc
            } else {
                acc + a.conj() * b.clone()
            }
        }))
    }

    /// `Tr(self²)` computed as the squared Frobenius norm.
    pub fn purity(&self) -> T {
        self.inner_product(self).expect("same operator")
    }

    /// `v† · self · v`.
    pub fn quadratic_form(&self, v: &[T]) -> Result<T> {
        let n = self.dim;
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.len() });
        }
        let mut acc = T::zero();
        for r in 0..n {
            if v[r].is_zero() {
                continue;
            }
            let mut row = T::zero();
            for c in 0..n {
                let x = &self.entries[r * n + c];
                if !x.is_zero() && !v[c].is_zero() {
                    row = row + x.clone() * v[c].clone();
                }
            }
            acc = acc + v[r].conj() * row;
        }
        Ok(acc)
    }

    /// Re-indexes so that new factor `k` is old factor `perm[k]`.
    pub fn permute_factors(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.factors.len())?;
        let new_factors = self.factors.permuted(perm)?;
        let old_strides = self.factors.strides();
        let new_strides = new_factors.strides();
        let dims: Vec<usize> = self.factors.factors().iter().map(|f| f.dim).collect();
        let map: Vec<usize> = (0..self.dim)
            .map(|i| {
                perm.iter()
                    .enumerate()
                    .map(|(k, &old)| (i / old_strides[old]) % dims[old] * new_strides[k])
                    .sum()
            })
            .collect();
        let n = self.dim;
        let mut entries = vec![T::zero(); n * n];
        for r in 0..n {
            for c in 0..n {
                let x = &self.entries[r * n + c];
                if !x.is_zero() {
                    entries[map[r] * n + map[c]] = x.clone();
                }
            }
        }
        Ok(Self::from_parts(new_factors, entries))
    }

    /// Reorders an interleaved `(A₁,B₁,…,A_t,B_t)` operator to `(A₁,…,A_t,B₁,…,B_t)`.
    pub fn permute_to_cut(&self) -> Result<Self> {
        if !self.factors.is_interleaved() {
            return Err(Error::NotInterleaved);
        }
        self.permute_factors(&cut_permutation(&self.factors))
    }

    /// Reorders any factorization so that all A-factors precede all B-factors,
    /// keeping relative order within each party.
    pub fn group_by_party(&self) -> Result<Self> {
        self.permute_factors(&cut_permutation(&self.factors))
    }
}

/// For every basis index, the part of its row-major value carried by the
/// selected factors.
fn selected_offsets(factors: &Factorization, selected: &[usize]) -> Vec<usize> {
    let strides = factors.strides();
    let dims: Vec<usize> = factors.factors().iter().map(|f| f.dim).collect();
    (0..factors.total_dim())
        .map(|i| selected.iter().map(|&f| (i / strides[f]) % dims[f] * strides[f]).sum())
        .collect()
}

/// Destination of every row-major entry position under the partial
/// transpose on `selected`. The map is an involution.
pub(crate) fn transpose_map(factors: &Factorization, selected: &[usize]) -> Vec<usize> {
    let n = factors.total_dim();
    let off = selected_offsets(factors, selected);
    let mut map = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let r2 = r - off[r] + off[c];
            let c2 = c - off[c] + off[r];
            map.push(r2 * n + c2);
        }
    }
    map
}

fn cut_permutation(f: &Factorization) -> Vec<usize> {
    let mut perm = f.party_indices(Party::A);
    perm.extend(f.party_indices(Party::B));
    perm
}

fn check_hermitian<T: Scalar>(entries: &[T], n: usize) -> Result<()> {
    for r in 0..n {
        for c in r..n {
            let a = &entries[r * n + c];
            let b = &entries[c * n + r];
            if !a.close_to(&b.conj(), FLOAT_HERMITIAN_TOL) {
                return Err(Error::NotHermitian { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Kronecker product of a nonempty sequence of operators.
pub fn kron_all<'a, T: Scalar>(ops: impl IntoIterator<Item = &'a Operator<T>>) -> Result<Operator<T>> {
    let mut it = ops.into_iter();
    let first = it.next().ok_or_else(|| invalid("kron of an empty list"))?.clone();
    it.try_fold(first, |acc, op| acc.kron(op))
}

impl<T: Scalar> Add for &Operator<T> {
    type Output = Operator<T>;
    /// Panics on mismatched shapes; see [`Operator::try_add`].
    fn add(self, rhs: Self) -> Operator<T> {
        self.try_add(rhs).expect("operator shapes must match")
    }
}

impl<T: Scalar> Sub for &Operator<T> {
    type Output = Operator<T>;
    /// Panics on mismatched shapes; see [`Operator::try_sub`].
    fn sub(self, rhs: Self) -> Operator<T> {
        self.try_sub(rhs).expect("operator shapes must match")
    }
}

impl<T: Scalar> Neg for &Operator<T> {
    type Output = Operator<T>;
    fn neg(self) -> Operator<T> {
        self.map_entries(|x| if x.is_zero() { T::zero() } else { -x.clone() })
    }
}
