//! Switched systems `x_{k+1} = A_{σ(k)} x_k`: matrix tuples, index words,
//! word products, and common-invariant-subspace search.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, induced_norm, real_eigenvectors, Matrix, NormKind};
use crate::words::for_each_necklace;

/// Default number of random probes in [`irreducibility_check`].
pub const DEFAULT_TRIALS: usize = 32;

/// The ordered tuple `(A_1, …, A_N)` of equally sized square matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTuple {
    dim: usize,
    mats: Vec<Matrix>,
}

impl MatrixTuple {
    pub fn new(mats: Vec<Matrix>) -> Result<Self> {
        let dim = mats
            .first()
            .ok_or_else(|| Error::InvalidInput("a matrix tuple needs at least one matrix".into()))?
            .dim();
        if let Some(bad) = mats.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { dim, mats })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of matrices `N`.
    #[inline]
    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &Matrix {
        &self.mats[i]
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.mats
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Matrix> {
        self.mats.iter()
    }

    /// `A_{w_k} ⋯ A_{w_1}` for 0-based letters, unchecked.
    pub(crate) fn product(&self, letters: &[usize]) -> Matrix {
        let mut it = letters.iter();
        let first = it.next().expect("empty word");
        it.fold(self.mats[*first].clone(), |acc, &j| self.mats[j].matmul(&acc))
    }
}

/// A nonempty word `(i_1, …, i_k)` over `N` letters, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexWord(Vec<usize>);

impl IndexWord {
    pub fn new(letters: Vec<usize>, n_symbols: usize) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidInput("index words must be nonempty".into()));
        }
        if let Some(&bad) = letters.iter().find(|&&l| l >= n_symbols) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: n_symbols,
            });
        }
        Ok(Self(letters))
    }

    /// Builds a word from 1-based letters, as written in reports.
    pub fn from_one_based(letters: &[usize], n_symbols: usize) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l == 0 || l > n_symbols) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: n_symbols,
            });
        }
        Self::new(letters.iter().map(|l| l - 1).collect(), n_symbols)
    }

    pub(crate) fn from_vec_unchecked(letters: Vec<usize>) -> Self {
        debug_assert!(!letters.is_empty());
        Self(letters)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|l| l + 1).collect()
    }

    /// Concatenation `self` followed by `other`.
    pub fn concat(&self, other: &IndexWord) -> IndexWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        IndexWord(v)
    }
}

impl fmt::Display for IndexWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", l + 1)?;
        }
        write!(f, ")")
    }
}

impl Serialize for IndexWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IndexWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let letters = Vec::<usize>::deserialize(d)?;
        if letters.is_empty() || letters.contains(&0) {
            return Err(serde::de::Error::custom("words are nonempty with 1-based letters"));
        }
        Ok(Self(letters.into_iter().map(|l| l - 1).collect()))
    }
}

/// Matrix product along a word: `A(i_1, …, i_k) = A_{i_k} ⋯ A_{i_1}`.
///
/// The leftmost factor is the last letter, so the first letter acts first.
pub fn word_product(tuple: &MatrixTuple, w: &IndexWord) -> Result<Matrix> {
    if let Some(&bad) = w.letters().iter().find(|&&l| l >= tuple.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: tuple.len(),
        });
    }
    Ok(tuple.product(w.letters()))
}

/// Why an irreducibility verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrreducibleReason {
    /// Dimension one: only trivial subspaces exist.
    Scalar,
    /// The generated unital algebra is all of `M_d(ℝ)`.
    FullAlgebra,
    /// An algebra element with simple spectrum was found and none of its
    /// real eigen-subspaces generates a proper invariant subspace.
    SimpleSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum IrreducibilityStatus {
    Irreducible {
        reason: IrreducibleReason,
    },
    /// Orthonormal basis of a proper nonzero common invariant subspace.
    Reducible {
        basis: Vec<Vec<f64>>,
        dimension: usize,
    },
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibilityVerdict {
    #[serde(flatten)]
    pub status: IrreducibilityStatus,
    pub trials: usize,
}

impl IrreducibilityVerdict {
    pub fn is_reducible(&self) -> bool {
        matches!(self.status, IrreducibilityStatus::Reducible { .. })
    }

    pub fn is_irreducible(&self) -> bool {
        matches!(self.status, IrreducibilityStatus::Irreducible { .. })
    }
}

const GROWTH_TOL: f64 = 1e-8;
const VERIFY_TOL: f64 = 1e-8;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthogonalizes `v` against `basis` (twice, for stability) and returns
/// the normalized remainder when its norm exceeds `tol`.
fn orthonormal_remainder(basis: &[Vec<f64>], mut v: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, &v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let n = norm(&v);
    (n > tol).then(|| v.into_iter().map(|x| x / n).collect())
}

/// Smallest subspace containing `start` and invariant under every
/// generator, as an orthonormal basis.
pub(crate) fn invariant_closure(gens: &[Matrix], start: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = gens[0].dim();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in start {
        let n = norm(v);
        if n == 0.0 {
            continue;
        }
        let unit: Vec<f64> = v.iter().map(|x| x / n).collect();
        if let Some(u) = orthonormal_remainder(&basis, unit, GROWTH_TOL) {
            basis.push(u);
        }
    }
    let mut next = 0;
    while next < basis.len() && basis.len() < d {
        let v = basis[next].clone();
        next += 1;
        for g in gens {
            let w = g.mul_vec(&v);
            if let Some(u) = orthonormal_remainder(&basis, w, GROWTH_TOL) {
                basis.push(u);
                if basis.len() == d {
                    break;
                }
            }
        }
    }
    basis
}

/// Checks that `span(basis)` is invariant under every matrix of the tuple:
/// `‖A_i v − proj(A_i v)‖ ≤ tol·max(1, ‖A_i‖₂)` for each basis vector `v`.
pub fn verify_invariant_subspace(tuple: &MatrixTuple, basis: &[Vec<f64>], tol: f64) -> bool {
    tuple.iter().all(|a| {
        let scale = induced_norm(a, NormKind::Two).unwrap_or(f64::INFINITY).max(1.0);
        basis.iter().all(|v| {
            let mut w = a.mul_vec(v);
            for b in basis {
                let c = dot(b, &w);
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
            norm(&w) <= tol * scale
        })
    })
}

fn algebra_basis(gens: &[Matrix]) -> Vec<Matrix> {
    let d = gens[0].dim();
    let full = d * d;
    let mut flat: Vec<Vec<f64>> = Vec::new();
    let mut mats: Vec<Matrix> = Vec::new();
    let push = |m: Matrix, flat: &mut Vec<Vec<f64>>, mats: &mut Vec<Matrix>| {
        let scale = m.frobenius_norm();
        if scale == 0.0 {
            return;
        }
        let v: Vec<f64> = m.as_slice().iter().map(|x| x / scale).collect();
        if let Some(u) = orthonormal_remainder(flat, v, 1e-9) {
            mats.push(Matrix::from_raw(d, u.clone()));
            flat.push(u);
        }
    };
    push(Matrix::identity(d), &mut flat, &mut mats);
    for g in gens {
        push(g.clone(), &mut flat, &mut mats);
    }
    let mut next = 0;
    while next < mats.len() && mats.len() < full {
        let b = mats[next].clone();
        next += 1;
        for g in gens {
            push(g.matmul(&b), &mut flat, &mut mats);
            if mats.len() == full {
                break;
            }
        }
    }
    mats
}

fn has_simple_spectrum(m: &Matrix) -> bool {
    let Ok(eig) = eigenvalues(m) else {
        return false;
    };
    let scale = eig.iter().map(|e| e.modulus()).fold(0.0, f64::max).max(1e-300);
    let sep = 1e-6 * scale;
    if eig.iter().any(|e| e.im != 0.0 && e.im.abs() <= sep) {
        return false;
    }
    for (i, a) in eig.iter().enumerate() {
        for b in &eig[i + 1..] {
            if (a.re - b.re).hypot(a.im - b.im) <= sep {
                return false;
            }
        }
    }
    true
}

/// Searches for a common invariant subspace of the tuple.
///
/// Candidates are eigen-subspaces of every word product of length at most
/// three, eigen-subspaces of `trials` random elements of the generated
/// algebra, and `trials` random vectors. A `Reducible` verdict always
/// carries a verified basis; `Irreducible` is only returned with a sound
/// reason, otherwise the verdict is `Unknown`.
pub fn irreducibility_check(tuple: &MatrixTuple, trials: usize, seed: u64) -> IrreducibilityVerdict {
    let d = tuple.dim();
    let verdict = |status| IrreducibilityVerdict { status, trials };
    if d == 1 {
        return verdict(IrreducibilityStatus::Irreducible {
            reason: IrreducibleReason::Scalar,
        });
    }
    let scale = tuple
        .iter()
        .map(|a| induced_norm(a, NormKind::Two).unwrap_or(0.0))
        .fold(0.0, f64::max);
    let gens: Vec<Matrix> = if scale > 0.0 {
        tuple.iter().map(|a| a.scaled(1.0 / scale)).collect()
    } else {
        tuple.matrices().to_vec()
    };

    let algebra = algebra_basis(&gens);
    if algebra.len() == d * d {
        return verdict(IrreducibilityStatus::Irreducible {
            reason: IrreducibleReason::FullAlgebra,
        });
    }

    let try_candidate = |cand: &[Vec<f64>]| -> Option<Vec<Vec<f64>>> {
        let basis = invariant_closure(&gens, cand);
        (!basis.is_empty() && basis.len() < d && verify_invariant_subspace(tuple, &basis, VERIFY_TOL)).then_some(basis)
    };
    let reducible = |basis: Vec<Vec<f64>>| {
        let dimension = basis.len();
        verdict(IrreducibilityStatus::Reducible { basis, dimension })
    };

    // eigen-subspaces of short word products
    let mut found = None;
    for_each_necklace(gens.len(), 3, |w| {
        let m = {
            let mut it = w.iter();
            let first = gens[*it.next().unwrap()].clone();
            it.fold(first, |acc, &j| gens[j].matmul(&acc))
        };
        if let Ok(subs) = real_eigenvectors(&m, 1e-9) {
            for s in subs {
                if let Some(b) = try_candidate(&s) {
                    found = Some(b);
                    return false;
                }
            }
        }
        true
    });
    if let Some(b) = found {
        return reducible(b);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut simple_found = false;
    for _ in 0..trials {
        let elem = algebra.iter().fold(Matrix::zeros(d), |acc, b| {
            acc.add(&b.scaled(rng.random_range(-1.0..1.0)))
        });
        if let Ok(subs) = real_eigenvectors(&elem, 1e-9) {
            for s in subs {
                if let Some(b) = try_candidate(&s) {
                    return reducible(b);
                }
            }
            if has_simple_spectrum(&elem) {
                simple_found = true;
            }
        }
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if let Some(b) = try_candidate(&[v]) {
            return reducible(b);
        }
    }
    if simple_found {
        verdict(IrreducibilityStatus::Irreducible {
            reason: IrreducibleReason::SimpleSpectrum,
        })
    } else {
        verdict(IrreducibilityStatus::Unknown)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn rotations_example() -> MatrixTuple {
        MatrixTuple::new(vec![
            Matrix::identity(2),
            m(&[&[0.0, 1.0], &[-1.0, 0.0]]),
            m(&[&[0.0, -0.5], &[1.0, 0.0]]),
        ])
        .unwrap()
    }

    #[test]
    fn word_product_order() {
        let t = rotations_example();
        let w = IndexWord::from_one_based(&[2, 3], 3).unwrap();
        let p = word_product(&t, &w).unwrap();
        assert!(p.sub(&Matrix::diag(&[0.5, 1.0])).max_abs() < 1e-15);
        let single = IndexWord::from_one_based(&[3], 3).unwrap();
        assert_eq!(word_product(&t, &single).unwrap(), *t.get(2));
    }

    #[test]
    fn word_product_rejects_bad_letters() {
        assert!(matches!(
            IndexWord::from_one_based(&[4], 3),
            Err(Error::IndexOutOfRange { index: 4, len: 3 })
        ));
        assert!(IndexWord::new(vec![], 3).is_err());
        let t = rotations_example();
        let w = IndexWord::from_vec_unchecked(vec![5]);
        assert!(word_product(&t, &w).is_err());
    }

    #[test]
    fn shift_pair_products() {
        let a1 = m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
        let a2 = m(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        let t = MatrixTuple::new(vec![a1, a2]).unwrap();
        let w = IndexWord::from_one_based(&[2, 1, 1], 2).unwrap();
        let p = word_product(&t, &w).unwrap();
        let mut e11 = Matrix::zeros(3);
        e11[(0, 0)] = 1.0;
        assert_eq!(p, e11);
    }

    #[test]
    fn identity_alone_is_reducible() {
        let t = MatrixTuple::new(vec![Matrix::identity(2)]).unwrap();
        let v = irreducibility_check(&t, DEFAULT_TRIALS, 0);
        match &v.status {
            IrreducibilityStatus::Reducible { basis, dimension } => {
                assert_eq!(*dimension, 1);
                assert!(verify_invariant_subspace(&t, basis, 1e-8));
            }
            other => panic!("expected reducible, got {other:?}"),
        }
    }

    #[test]
    fn commuting_diagonals_are_reducible_on_an_axis() {
        let t = MatrixTuple::new(vec![Matrix::diag(&[1.0, 2.0]), Matrix::diag(&[-3.0, 0.5])]).unwrap();
        let v = irreducibility_check(&t, DEFAULT_TRIALS, 1);
        let IrreducibilityStatus::Reducible { basis, .. } = &v.status else {
            panic!("expected reducible");
        };
        // oracle: the basis vector is a coordinate axis
        let b = &basis[0];
        assert!(b[0].abs() < 1e-12 || b[1].abs() < 1e-12);
    }

    #[test]
    fn rotation_example_is_irreducible() {
        let v = irreducibility_check(&rotations_example(), DEFAULT_TRIALS, 0);
        assert!(v.is_irreducible(), "{v:?}");
    }

    #[test]
    fn incommensurate_rotations_are_irreducible() {
        let r = |t: f64| m(&[&[t.cos(), -t.sin()], &[t.sin(), t.cos()]]);
        let tuple = MatrixTuple::new(vec![r(1.0), r(2.0_f64.sqrt())]).unwrap();
        let v = irreducibility_check(&tuple, DEFAULT_TRIALS, 3);
        assert_eq!(
            v.status,
            IrreducibilityStatus::Irreducible {
                reason: IrreducibleReason::SimpleSpectrum
            }
        );
    }

    #[test]
    fn block_diagonal_rotation_in_3d_is_reducible() {
        let t = 0.9_f64;
        let a = m(&[&[t.cos(), -t.sin(), 0.0], &[t.sin(), t.cos(), 0.0], &[0.0, 0.0, 0.5]]);
        let tuple = MatrixTuple::new(vec![a]).unwrap();
        let v = irreducibility_check(&tuple, 8, 0);
        assert!(v.is_reducible());
    }

    #[test]
    fn concat_mirrors_application_order() {
        let t = rotations_example();
        let w1 = IndexWord::from_one_based(&[2, 3], 3).unwrap();
        let w2 = IndexWord::from_one_based(&[3, 1, 2], 3).unwrap();
        let lhs = word_product(&t, &w1.concat(&w2)).unwrap();
        let rhs = word_product(&t, &w2).unwrap().matmul(&word_product(&t, &w1).unwrap());
        assert_eq!(lhs, rhs);
    }
}
