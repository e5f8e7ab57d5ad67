//! Positive-semidefiniteness checks.
//!
//! The exact check splits the matrix into the connected components of its
//! nonzero pattern, clears denominators, and runs symmetric fraction-free
//! (Bareiss) elimination with complete diagonal pivoting on each block. After
//! `k` pivots the working entries equal the Schur complement scaled by the
//! positive leading minor, so signs of the remaining diagonal are those of
//! the true Schur complement. The matrix is PSD iff no remaining diagonal is
//! negative and, once every remaining diagonal is zero, the remaining block
//! is zero.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::linalg;
use crate::operator::{ExactOperator, Operator};
use crate::scalar::{ExactComplex, Scalar};

/// Outcome of a PSD test. When `psd` is false, `witness` holds a vector `v`
/// with `v† M v < 0` (for the tolerance check: `< -ε`).
#[derive(Clone, Debug, PartialEq)]
pub struct PsdCheck<T> {
    pub psd: bool,
    pub witness: Option<Vec<T>>,
}

impl<T> PsdCheck<T> {
    fn pass() -> Self {
        Self { psd: true, witness: None }
    }

    fn fail(v: Vec<T>) -> Self {
        Self { psd: false, witness: Some(v) }
    }
}

/// Connected components of the undirected graph whose edges are the nonzero
/// off-diagonal entries. Each component is sorted; components are ordered by
/// their smallest index.
pub fn components<T: Scalar>(m: &Operator<T>) -> Vec<Vec<usize>> {
    let n = m.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for r in 0..n {
        for c in (r + 1)..n {
            if !m.entry(r, c).is_zero() {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
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

#[derive(Clone, Debug, PartialEq)]
struct GaussInt {
    re: BigInt,
    im: BigInt,
}

impl GaussInt {
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn mul(&self, o: &GaussInt) -> GaussInt {
        GaussInt {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    fn to_exact(&self) -> ExactComplex {
        ExactComplex::new(
            BigRational::from_integer(self.re.clone()),
            BigRational::from_integer(self.im.clone()),
        )
    }
}

/// Exact PSD decision for an operator with rational entries.
pub fn is_psd_exact(m: &ExactOperator) -> PsdCheck<ExactComplex> {
    let n = m.dim();
    for comp in components(m) {
        if let Some(local) = check_block(m, &comp) {
            let mut v = vec![ExactComplex::zero(); n];
            for (k, &i) in comp.iter().enumerate() {
                v[i] = local[k].clone();
            }
            return PsdCheck::fail(v);
        }
    }
    PsdCheck::pass()
}

/// Returns a local witness on `comp` if the principal block is not PSD.
fn check_block(m: &ExactOperator, comp: &[usize]) -> Option<Vec<ExactComplex>> {
    let s = comp.len();
    let a = |i: usize, j: usize| m.entry(comp[i], comp[j]);

    // Clear denominators: a positive scale leaves the PSD verdict unchanged.
    let mut lcm = BigInt::one();
    for i in 0..s {
        for j in 0..s {
            let x = a(i, j);
            lcm = lcm.lcm(x.re.denom()).lcm(x.im.denom());
        }
    }
    let to_int = |r: &BigRational| r.numer() * (&lcm / r.denom());
    let mut w: Vec<GaussInt> = (0..s * s)
        .map(|k| {
            let x = a(k / s, k % s);
            GaussInt { re: to_int(&x.re), im: to_int(&x.im) }
        })
        .collect();

    let mut remaining: Vec<usize> = (0..s).collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut prev = BigInt::one();

    loop {
        if remaining.is_empty() {
            return None;
        }
        let (mut lo, mut hi) = (remaining[0], remaining[0]);
        for &i in &remaining {
            if w[i * s + i].re < w[lo * s + lo].re {
                lo = i;
            }
            if w[i * s + i].re > w[hi * s + hi].re {
                hi = i;
            }
        }
        if w[lo * s + lo].re.is_negative() {
            let mut tail = vec![ExactComplex::zero(); s];
            tail[lo] = ExactComplex::one();
            return Some(complete_witness(m, comp, &pivots, tail));
        }
        if w[hi * s + hi].re.is_zero() {
            // Zero diagonal: any nonzero off-diagonal entry breaks PSD.
            for &i in &remaining {
                for &j in &remaining {
                    let x = &w[i * s + j];
                    if i != j && !x.is_zero() {
                        // v = -S_ij e_i + e_j gives v†Sv = -2|S_ij|² < 0.
                        let mut tail = vec![ExactComplex::zero(); s];
                        tail[i] = -x.to_exact();
                        tail[j] = ExactComplex::one();
                        return Some(complete_witness(m, comp, &pivots, tail));
                    }
                }
            }
            return None;
        }

        let p = hi;
        remaining.retain(|&i| i != p);
        let pp = w[p * s + p].re.clone();
        for &i in &remaining {
            let wip = w[i * s + p].clone();
            for &j in &remaining {
                let wpj = &w[p * s + j];
                let cur = &w[i * s + j];
                let cross = if wip.is_zero() || wpj.is_zero() {
                    None
                } else {
                    Some(wip.mul(wpj))
                };
                if cur.is_zero() && cross.is_none() {
                    continue;
                }
                let mut re = &pp * &cur.re;
                let mut im = &pp * &cur.im;
                if let Some(x) = cross {
                    re -= x.re;
                    im -= x.im;
                }
                debug_assert!((&re % &prev).is_zero() && (&im % &prev).is_zero());
                w[i * s + j] = GaussInt { re: re / &prev, im: im / &prev };
            }
        }
        prev = pp;
        pivots.push(p);
    }
}

/// Lifts a Schur-complement witness `tail` (supported on non-pivot indices)
/// to the full block: `v_P = -A_PP⁻¹ A_PR w`, so that `v†Av = w†Sw`.
fn complete_witness(
    m: &ExactOperator,
    comp: &[usize],
    pivots: &[usize],
    mut tail: Vec<ExactComplex>,
) -> Vec<ExactComplex> {
    if pivots.is_empty() {
        return tail;
    }
    let a = |i: usize, j: usize| m.entry(comp[i], comp[j]);
    let k = pivots.len();
    let mut mat: Vec<Vec<ExactComplex>> =
        pivots.iter().map(|&i| pivots.iter().map(|&j| a(i, j).clone()).collect()).collect();
    let mut rhs: Vec<ExactComplex> = pivots
        .iter()
        .map(|&i| {
            (0..comp.len())
                .filter(|j| !tail[*j].is_zero())
                .fold(ExactComplex::zero(), |acc, j| acc + a(i, j) * &tail[j])
        })
        .collect();
    // Gaussian elimination; A_PP is positive definite so pivots never vanish.
    for col in 0..k {
        let inv = mat[col][col].inv().expect("positive definite pivot block");
        for row in (col + 1)..k {
            if mat[row][col].is_zero() {
                continue;
            }
            let f = &mat[row][col] * &inv;
            for c in col..k {
                let d = &f * &mat[col][c];
                mat[row][c] = &mat[row][c] - &d;
            }
            let d = &f * &rhs[col];
            rhs[row] = &rhs[row] - &d;
        }
    }
    let mut x = vec![ExactComplex::zero(); k];
    for row in (0..k).rev() {
        let mut acc = rhs[row].clone();
        for c in (row + 1)..k {
            acc = &acc - &(&mat[row][c] * &x[c]);
        }
        x[row] = &acc * &mat[row][row].inv().expect("nonzero pivot");
    }
    for (slot, &p) in pivots.iter().enumerate() {
        tail[p] = -x[slot].clone();
    }
    tail
}

/// Tolerance-mode PSD test: minimum eigenvalue `≥ -eps`. The witness is the
/// eigenvector of the minimum eigenvalue.
pub fn is_psd_within<T: Scalar>(m: &Operator<T>, eps: f64) -> PsdCheck<Complex64> {
    let (lam, v) = linalg::min_eigenpair(m);
    if lam >= -eps {
        PsdCheck::pass()
    } else {
        PsdCheck::fail(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::{Factorization, Party};

    fn op(rows: &[&[(i64, i64)]]) -> ExactOperator {
        let n = rows.len();
        let e = rows
            .iter()
            .flat_map(|r| r.iter().map(|&(p, q)| ExactComplex::ratio(p, q)))
            .collect();
        ExactOperator::new(Factorization::single(n, Party::A), e).unwrap()
    }

    fn assert_witness(m: &ExactOperator, check: &PsdCheck<ExactComplex>) {
        assert!(!check.psd);
        let v = check.witness.as_ref().unwrap();
        let q = m.quadratic_form(v).unwrap();
        assert!(q.im.is_zero());
        assert!(q.re.is_negative(), "v†Mv = {q}");
    }

    #[test]
    fn zero_matrix_is_psd() {
        let m = ExactOperator::zeros(Factorization::single(4, Party::A)).unwrap();
        assert!(is_psd_exact(&m).psd);
    }

    #[test]
    fn singular_psd_accepted() {
        // [[1, 1], [1, 1]] is rank one and PSD.
        let m = op(&[&[(1, 1), (1, 1)], &[(1, 1), (1, 1)]]);
        assert!(is_psd_exact(&m).psd);
    }

    #[test]
    fn zero_diagonal_with_coupling_rejected() {
        let m = op(&[&[(0, 1), (1, 2)], &[(1, 2), (0, 1)]]);
        let c = is_psd_exact(&m);
        assert_witness(&m, &c);
    }

    #[test]
    fn hidden_negative_schur_complement() {
        // Positive diagonal, negative determinant: [[1, 2], [2, 1]].
        let m = op(&[&[(1, 1), (2, 1)], &[(2, 1), (1, 1)]]);
        let c = is_psd_exact(&m);
        assert_witness(&m, &c);
    }

    #[test]
    fn zero_schur_with_coupling_after_pivot() {
        // Pivot on index 0 leaves [[0, 1], [1, 0]]-like complement.
        let m = op(&[
            &[(1, 1), (1, 1), (1, 1)],
            &[(1, 1), (1, 1), (2, 1)],
            &[(1, 1), (2, 1), (1, 1)],
        ]);
        let c = is_psd_exact(&m);
        assert_witness(&m, &c);
    }

    #[test]
    fn complex_entries() {
        let i = ExactComplex::new(BigRational::zero(), BigRational::one());
        let one = ExactComplex::one();
        // [[1, i], [-i, 1]] is PSD (eigenvalues 0, 2); with 2i off-diagonal it is not.
        let m = ExactOperator::new(
            Factorization::single(2, Party::A),
            vec![one.clone(), i.clone(), i.conj(), one.clone()],
        )
        .unwrap();
        assert!(is_psd_exact(&m).psd);
        let two_i = &i + &i;
        let m2 = ExactOperator::new(
            Factorization::single(2, Party::A),
            vec![one.clone(), two_i.clone(), two_i.conj(), one],
        )
        .unwrap();
        let c = is_psd_exact(&m2);
        assert_witness(&m2, &c);
    }

    #[test]
    fn components_split_block_diagonal() {
        let m = op(&[
            &[(1, 1), (0, 1), (1, 1)],
            &[(0, 1), (2, 1), (0, 1)],
            &[(1, 1), (0, 1), (1, 1)],
        ]);
        assert_eq!(components(&m), vec![vec![0, 2], vec![1]]);
    }

    #[test]
    fn tolerance_mode() {
        let m = op(&[&[(1, 1), (2, 1)], &[(2, 1), (1, 1)]]);
        let c = is_psd_within(&m, 1e-9);
        assert!(!c.psd);
        assert!(is_psd_within(&m, 1.5).psd);
    }
}
