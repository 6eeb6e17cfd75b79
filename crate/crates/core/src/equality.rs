//! Tests for `ρ_p = ρ_d`: the cycle condition for a fixed chain, the
//! distinct-index cycle condition over all chains, the orthogonal
//! similarity characterization, and irreducibility of cycle semigroups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsr::{jsr_gripenberg, root, JsrBracket, DEFAULT_BUDGET};
use crate::linalg::{induced_norm, solve_spd_system, spd_sqrt, spectral_radius, Matrix, NormKind, SpdConstraint};
use crate::markov::{enumerate_closed_walks_at, enumerate_cycle_necklaces, CycleRecord, MarkovChain};
use crate::system::{irreducibility_check, IndexWord, IrreducibilityVerdict, MatrixTuple, DEFAULT_TRIALS};

/// Default cap on enumerated cycles or necklaces.
pub const DEFAULT_CYCLE_BUDGET: u64 = 10_000_000;
/// Residual bound on an orthogonality certificate.
pub const CERTIFICATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CycleStatus {
    /// Every `(ν, P)`-cycle up to `max_len` has `ρ^{1/k}` inside the bracket.
    ConsistentUpTo { max_len: usize },
    /// A `(ν, P)`-cycle with `ρ(A(cycle))^{1/k} < lower − tol`.
    Violated {
        cycle: CycleRecord,
        rho_root: f64,
        /// `rho_root / lower`.
        ratio: f64,
    },
    /// The upper bound on `ρ_d` is within tolerance of zero.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityVerdict {
    #[serde(flatten)]
    pub status: CycleStatus,
    pub rho_d_bracket: JsrBracket,
    pub tolerance: f64,
    /// Number of cycles examined.
    pub cycles_checked: u64,
}

impl EqualityVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self.status, CycleStatus::ConsistentUpTo { .. })
    }

    pub fn is_violated(&self) -> bool {
        matches!(self.status, CycleStatus::Violated { .. })
    }
}

/// Cycle condition for a fixed chain, with a fresh branch-and-bound
/// bracket in the spectral norm.
pub fn check_cycle_condition(
    tuple: &MatrixTuple,
    chain: &MarkovChain,
    max_len: usize,
    tol: f64,
) -> Result<EqualityVerdict> {
    let bracket = jsr_gripenberg(tuple, NormKind::Two, tol, DEFAULT_BUDGET)?;
    check_cycle_condition_with(tuple, chain, max_len, tol, &bracket, DEFAULT_CYCLE_BUDGET)
}

/// Streams the `(ν, P)`-cycles of length at most `max_len`, one per
/// rotation class, and stops at the first one whose `ρ(A(cycle))^{1/k}`
/// falls below `lower − tol`. Rotations share a spectral radius, so one
/// representative per class suffices.
pub fn check_cycle_condition_with(
    tuple: &MatrixTuple,
    chain: &MarkovChain,
    max_len: usize,
    tol: f64,
    bracket: &JsrBracket,
    budget: u64,
) -> Result<EqualityVerdict> {
    chain.require_nu()?;
    if chain.n_states() != tuple.len() {
        return Err(Error::DimensionMismatch {
            expected: tuple.len(),
            found: chain.n_states(),
        });
    }
    let verdict = |status, checked| EqualityVerdict {
        status,
        rho_d_bracket: bracket.clone(),
        tolerance: tol,
        cycles_checked: checked,
    };
    if bracket.upper <= tol {
        return Ok(verdict(CycleStatus::Trivial, 0));
    }
    let mut checked = 0u64;
    for cycle in enumerate_cycle_necklaces(chain, max_len, true) {
        if checked >= budget {
            return Err(Error::BudgetExceeded {
                what: "streaming (ν, P)-cycles",
                limit: budget,
            });
        }
        checked += 1;
        let k = cycle.len();
        let r = root(spectral_radius(&tuple.product(cycle.indices.letters()))?, k);
        if r < bracket.lower - tol {
            let ratio = r / bracket.lower;
            return Ok(verdict(
                CycleStatus::Violated {
                    cycle,
                    rho_root: r,
                    ratio,
                },
                checked,
            ));
        }
        if r > bracket.upper + tol {
            return Err(Error::NumericalFailure(format!(
                "cycle {} has ρ^(1/k) = {r} above the upper bound {}",
                cycle.indices, bracket.upper
            )));
        }
    }
    Ok(verdict(CycleStatus::ConsistentUpTo { max_len }, checked))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctCycleWitness {
    pub word: IndexWord,
    pub rho_root: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctCycleResult {
    /// `None` means `ρ_p < ρ_d` up to the bracket tolerance.
    pub witness: Option<DistinctCycleWitness>,
    pub rho_d_bracket: JsrBracket,
    pub tolerance: f64,
    pub necklaces_checked: u64,
}

/// Number of necklaces with pairwise-distinct letters over `n` symbols:
/// `Σ_k C(n, k)·(k − 1)!`.
fn distinct_necklace_count(n: usize) -> u64 {
    let mut total = 0u64;
    let mut choose = 1u64; // C(n, k)
    for k in 1..=n as u64 {
        choose = choose.saturating_mul(n as u64 - k + 1) / k;
        let fact: u64 = (1..k).fold(1u64, |a, b| a.saturating_mul(b));
        total = total.saturating_add(choose.saturating_mul(fact));
    }
    total
}

/// Calls `visit` on every word of pairwise-distinct letters starting with
/// its smallest letter, by length and then lexicographically.
fn for_each_distinct_necklace(n: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    fn extend(
        n: usize,
        len: usize,
        word: &mut Vec<usize>,
        used: &mut [bool],
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if word.len() == len {
            return visit(word);
        }
        let lo = word[0] + 1;
        for j in lo..n {
            if used[j] {
                continue;
            }
            used[j] = true;
            word.push(j);
            let go = extend(n, len, word, used, visit);
            word.pop();
            used[j] = false;
            if !go {
                return false;
            }
        }
        true
    }
    let mut used = vec![false; n];
    for len in 1..=n {
        for first in 0..n {
            used[first] = true;
            let mut word = vec![first];
            let go = extend(n, len, &mut word, &mut used, &mut visit);
            used[first] = false;
            if !go {
                return;
            }
        }
    }
}

/// Searches the words with pairwise-distinct letters for one with
/// `ρ(A(w))^{1/|w|}` within `tol` of both ends of the `ρ_d` bracket.
pub fn check_distinct_cycle(tuple: &MatrixTuple, tol: f64) -> Result<DistinctCycleResult> {
    let bracket = jsr_gripenberg(tuple, NormKind::Two, tol, DEFAULT_BUDGET)?;
    check_distinct_cycle_with(tuple, tol, &bracket, DEFAULT_CYCLE_BUDGET)
}

pub fn check_distinct_cycle_with(
    tuple: &MatrixTuple,
    tol: f64,
    bracket: &JsrBracket,
    budget: u64,
) -> Result<DistinctCycleResult> {
    if distinct_necklace_count(tuple.len()) > budget {
        return Err(Error::BudgetExceeded {
            what: "enumerating distinct-index necklaces",
            limit: budget,
        });
    }
    let mut witness = None;
    let mut failure = None;
    let mut checked = 0u64;
    for_each_distinct_necklace(tuple.len(), |w| {
        checked += 1;
        match spectral_radius(&tuple.product(w)) {
            Ok(r) => {
                let r = root(r, w.len());
                if r >= bracket.lower - tol && r >= bracket.upper - tol {
                    witness = Some(DistinctCycleWitness {
                        word: IndexWord::from_vec_unchecked(w.to_vec()),
                        rho_root: r,
                    });
                    return false;
                }
                true
            }
            Err(e) => {
                failure = Some(e);
                false
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(DistinctCycleResult {
        witness,
        rho_d_bracket: bracket.clone(),
        tolerance: tol,
        necklaces_checked: checked,
    })
}

/// An invertible `G` with `ρ̂⁻¹ G A_i G⁻¹` orthogonal for every nonsingular
/// generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalCertificate {
    pub g: Matrix,
    pub scale: f64,
    /// `‖Bᵢᵀ Bᵢ − I‖₂` with `Bᵢ = ρ̂⁻¹ G A_i G⁻¹`; `None` for singular
    /// generators, which are exempt.
    pub residuals: Vec<Option<f64>>,
}

impl OrthogonalCertificate {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().flatten().fold(0.0, |a: f64, &b| a.max(b))
    }
}

fn is_singular(a: &Matrix) -> Result<bool> {
    let scale = induced_norm(a, NormKind::Two)?;
    Ok(scale == 0.0 || a.determinant().abs() <= 1e-12 * scale.powi(a.dim() as i32))
}

/// Looks for an SPD `Q` with `A_iᵀ Q A_i = ρ̂² Q` for every nonsingular
/// `A_i` and returns `G = Q^{1/2}`, or `None` when no such `Q` exists.
pub fn orthogonal_similarity(tuple: &MatrixTuple, scale: f64) -> Result<Option<OrthogonalCertificate>> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::InvalidInput("scale must be positive and finite".into()));
    }
    let singular: Vec<bool> = tuple.iter().map(is_singular).collect::<Result<_>>()?;
    let constraints: Vec<SpdConstraint> = tuple
        .iter()
        .zip(&singular)
        .filter(|(_, &s)| !s)
        .map(|(a, _)| SpdConstraint::new(a.clone(), scale * scale))
        .collect();
    let g = if constraints.is_empty() {
        Matrix::identity(tuple.dim())
    } else {
        match solve_spd_system(&constraints)? {
            Some(q) => spd_sqrt(&q)?,
            None => return Ok(None),
        }
    };
    let g_inv = g
        .inverse()
        .ok_or_else(|| Error::NumericalFailure("certificate matrix is not invertible".into()))?;
    let id = Matrix::identity(tuple.dim());
    let mut residuals = Vec::with_capacity(tuple.len());
    for (a, &s) in tuple.iter().zip(&singular) {
        if s {
            residuals.push(None);
            continue;
        }
        let b = g.matmul(a).matmul(&g_inv).scaled(1.0 / scale);
        let r = induced_norm(&b.transpose().matmul(&b).sub(&id), NormKind::Two)?;
        if r > CERTIFICATE_TOL {
            return Err(Error::IllConditioned(format!(
                "orthogonality residual {r:e} exceeds {CERTIFICATE_TOL:e}"
            )));
        }
        residuals.push(Some(r));
    }
    Ok(Some(OrthogonalCertificate { g, scale, residuals }))
}

/// Irreducibility of `C(P, s)`: the products along closed walks at `s` of
/// length at most `max_len`. A state on no closed walk yields the identity
/// alone.
pub fn semigroup_irreducibility(
    tuple: &MatrixTuple,
    chain: &MarkovChain,
    s: usize,
    max_len: usize,
) -> Result<IrreducibilityVerdict> {
    semigroup_irreducibility_with(tuple, chain, s, max_len, DEFAULT_CYCLE_BUDGET, DEFAULT_TRIALS, 0)
}

pub fn semigroup_irreducibility_with(
    tuple: &MatrixTuple,
    chain: &MarkovChain,
    s: usize,
    max_len: usize,
    budget: u64,
    trials: usize,
    seed: u64,
) -> Result<IrreducibilityVerdict> {
    if s >= chain.n_states() {
        return Err(Error::IndexOutOfRange {
            index: s,
            len: chain.n_states(),
        });
    }
    if chain.n_states() != tuple.len() {
        return Err(Error::DimensionMismatch {
            expected: tuple.len(),
            found: chain.n_states(),
        });
    }
    let d = tuple.dim();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut gens = Vec::new();
    for (seen, walk) in enumerate_closed_walks_at(chain, s, max_len).enumerate() {
        if seen as u64 >= budget {
            return Err(Error::BudgetExceeded {
                what: "enumerating closed walks",
                limit: budget,
            });
        }
        let m = tuple.product(walk.indices.letters());
        let scale = m.max_abs();
        if scale == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = m.as_slice().iter().map(|x| x / scale).collect();
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-10 {
            basis.push(v.into_iter().map(|x| x / n).collect());
            gens.push(m);
            if gens.len() == d * d {
                break;
            }
        }
    }
    if gens.is_empty() {
        gens.push(Matrix::identity(d));
    }
    Ok(irreducibility_check(&MatrixTuple::new(gens)?, trials, seed))
}
