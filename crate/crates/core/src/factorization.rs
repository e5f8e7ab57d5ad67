//! Ordered tensor factorizations with an A|B party tag on every factor.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::A => f.write_str("A"),
            Party::B => f.write_str("B"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub dim: usize,
    pub party: Party,
}

impl Factor {
    pub fn new(dim: usize, party: Party) -> Self {
        Self { dim, party }
    }
}

/// Ordered list of local factors. Index `0` is the most significant digit of
/// the row-major Kronecker layout.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Factor>", into = "Vec<Factor>")]
pub struct Factorization(Vec<Factor>);

impl TryFrom<Vec<Factor>> for Factorization {
    type Error = Error;
    fn try_from(factors: Vec<Factor>) -> Result<Self> {
        Self::new(factors)
    }
}

impl From<Factorization> for Vec<Factor> {
    fn from(f: Factorization) -> Self {
        f.0
    }
}

impl Factorization {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(invalid("factorization needs at least one factor"));
        }
        if factors.iter().any(|f| f.dim == 0) {
            return Err(invalid("factor dimensions must be positive"));
        }
        Ok(Self(factors))
    }

    /// Single unlabelled-by-cut factor of party A; used for scalars-as-operators
    /// and for plain vectors that carry no bipartition.
    pub fn single(dim: usize, party: Party) -> Self {
        Self(vec![Factor::new(dim.max(1), party)])
    }

    /// `(A: da, B: db)`.
    pub fn bipartite(da: usize, db: usize) -> Self {
        Self(vec![Factor::new(da, Party::A), Factor::new(db, Party::B)])
    }

    /// Interleaved `(A₁, B₁, …, A_t, B_t)` with every local factor of dimension `local`.
    pub fn interleaved_pairs(pairs: usize, local: usize) -> Self {
        let mut v = Vec::with_capacity(2 * pairs);
        for _ in 0..pairs {
            v.push(Factor::new(local, Party::A));
            v.push(Factor::new(local, Party::B));
        }
        Self(v)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.0.iter().map(|f| f.dim).product()
    }

    pub fn party_dim(&self, party: Party) -> usize {
        self.0.iter().filter(|f| f.party == party).map(|f| f.dim).product()
    }

    pub fn party_indices(&self, party: Party) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i].party == party).collect()
    }

    pub fn is_balanced(&self) -> bool {
        self.party_dim(Party::A) == self.party_dim(Party::B)
    }

    /// True for `(A, B, A, B, …)` with an even number of factors.
    pub fn is_interleaved(&self) -> bool {
        self.0.len() % 2 == 0
            && self.0.chunks(2).all(|c| c[0].party == Party::A && c[1].party == Party::B)
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    /// Row-major strides: `stride[i]` is the product of the dimensions after `i`.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.0.len()];
        for i in (0..self.0.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.0[i + 1].dim;
        }
        s
    }

    /// Factors reordered so that position `k` holds old factor `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.0.len())?;
        Ok(Self(perm.iter().map(|&i| self.0[i]).collect()))
    }

    /// Factors with the listed positions removed.
    pub fn without(&self, drop: &[usize]) -> Option<Self> {
        let v: Vec<Factor> = (0..self.0.len())
            .filter(|i| !drop.contains(i))
            .map(|i| self.0[i])
            .collect();
        if v.is_empty() {
            None
        } else {
            Some(Self(v))
        }
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(invalid(format!("permutation of length {} for {n} factors", perm.len())));
    }
    for &p in perm {
        if p >= n {
            return Err(Error::InvalidFactor(p));
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(invalid(format!("factor {p} repeated in permutation")));
        }
    }
    Ok(())
}
