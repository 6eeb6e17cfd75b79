//! Markov chains of order `m` stored as sparse tensors, their canonical
//! lift to order one, and chains built from periodic words.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsr::{jsr_gripenberg, root, JsrBracket, DEFAULT_BUDGET};
use crate::linalg::{spectral_radius, NormKind};
use crate::markov::{MarkovChain, NU_POSITIVE_TOL};
use crate::system::{IndexWord, MatrixTuple};
use crate::words::{cyclic_windows, for_each_necklace, minimal_period};

/// Default cap on the number of lifted states `N^m`.
pub const DEFAULT_LIFT_CAP: usize = 4096;

const SUM_TOL: f64 = 1e-12;
const SHIFT_TOL: f64 = 1e-10;

/// A pair `(ν, P)` of tensors of orders `m` and `m + 1`.
///
/// Only nonzero entries are stored. Rows `P_{i_1…i_m ·}` may be omitted for
/// tuples with `ν = 0`; the lift fills those rows uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct HigherOrderChain {
    order: usize,
    n_states: usize,
    rows: BTreeMap<Vec<usize>, Vec<(usize, f64)>>,
    nu: BTreeMap<Vec<usize>, f64>,
}

fn check_entry(key: &[usize], len: usize, n_states: usize, value: f64, what: &str) -> Result<f64> {
    if key.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: key.len(),
        });
    }
    if let Some(&bad) = key.iter().find(|&&i| i >= n_states) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: n_states,
        });
    }
    if !value.is_finite() {
        return Err(Error::NonFinite);
    }
    if value < -1e-15 {
        return Err(Error::InvalidInput(format!("{what} has negative entry {value}")));
    }
    Ok(value.max(0.0))
}

impl HigherOrderChain {
    /// Builds and validates a chain from 0-based tensor entries. Repeated
    /// keys are rejected; zero entries are dropped.
    pub fn new(
        order: usize,
        n_states: usize,
        p_entries: impl IntoIterator<Item = (Vec<usize>, f64)>,
        nu_entries: impl IntoIterator<Item = (Vec<usize>, f64)>,
    ) -> Result<Self> {
        if order == 0 || n_states == 0 {
            return Err(Error::InvalidInput("order and state count must be positive".into()));
        }
        let mut rows: BTreeMap<Vec<usize>, Vec<(usize, f64)>> = BTreeMap::new();
        let mut seen_p = std::collections::BTreeSet::new();
        for (key, v) in p_entries {
            let v = check_entry(&key, order + 1, n_states, v, "transition tensor")?;
            if !seen_p.insert(key.clone()) {
                return Err(Error::InvalidInput(format!("repeated transition entry {key:?}")));
            }
            let (prefix, last) = key.split_at(order);
            let row = rows.entry(prefix.to_vec()).or_default();
            if v > 0.0 {
                row.push((last[0], v));
            }
        }
        for (prefix, row) in &mut rows {
            row.sort_by_key(|e| e.0);
            let s: f64 = row.iter().map(|e| e.1).sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidInput(format!(
                    "transition row {:?} sums to {s}",
                    one_based(prefix)
                )));
            }
        }
        let mut nu = BTreeMap::new();
        for (key, v) in nu_entries {
            let v = check_entry(&key, order, n_states, v, "invariant tensor")?;
            if nu.contains_key(&key) {
                return Err(Error::InvalidInput(format!("repeated ν entry {key:?}")));
            }
            if v > 0.0 {
                nu.insert(key, v);
            }
        }
        let total: f64 = nu.values().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidInput(format!("ν sums to {total}")));
        }
        let chain = Self {
            order,
            n_states,
            rows,
            nu,
        };
        for (key, &v) in &chain.nu {
            if v > NU_POSITIVE_TOL && !chain.rows.contains_key(key) {
                return Err(Error::InvalidInput(format!(
                    "no transition row for ν-positive tuple {:?}",
                    one_based(key)
                )));
            }
        }
        let defect = chain.shift_defect();
        if defect > SHIFT_TOL {
            return Err(Error::InvalidInput(format!(
                "ν is not shift-invariant under P (max defect {defect:e})"
            )));
        }
        Ok(chain)
    }

    /// Views an order-one chain as a tensor pair.
    pub fn from_markov(chain: &MarkovChain) -> Result<Self> {
        let nu = chain.require_nu()?;
        let n = chain.n_states();
        let p = (0..n).flat_map(|i| (0..n).map(move |j| (vec![i, j], chain.p(i, j))));
        let nu = nu.iter().enumerate().map(|(i, &v)| (vec![i], v));
        Self::new(1, n, p.collect::<Vec<_>>(), nu.collect::<Vec<_>>())
    }

    /// `max |Σ_{i_1} ν_{i_1…i_m} P_{i_1…i_{m+1}} − ν_{i_2…i_{m+1}}|`.
    pub fn shift_defect(&self) -> f64 {
        let mut pushed: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (key, &v) in &self.nu {
            let Some(row) = self.rows.get(key) else {
                continue;
            };
            for &(j, p) in row {
                let mut next = key[1..].to_vec();
                next.push(j);
                *pushed.entry(next).or_default() += v * p;
            }
        }
        let mut defect = 0.0f64;
        for (key, &v) in &pushed {
            defect = defect.max((v - self.nu(key)).abs());
        }
        for (key, &v) in &self.nu {
            if !pushed.contains_key(key) {
                defect = defect.max(v);
            }
        }
        defect
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn nu(&self, key: &[usize]) -> f64 {
        self.nu.get(key).copied().unwrap_or(0.0)
    }

    /// Nonzero `ν` entries in lexicographic order.
    pub fn nu_entries(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.nu.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Nonzero transitions out of an `m`-tuple, by next letter.
    pub fn row(&self, prefix: &[usize]) -> Option<&[(usize, f64)]> {
        self.rows.get(prefix).map(Vec::as_slice)
    }

    /// Nonzero `P` entries as `(i_1, …, i_{m+1})`.
    pub fn p_entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.rows.iter().flat_map(|(prefix, row)| {
            row.iter().map(move |&(j, p)| {
                let mut key = prefix.clone();
                key.push(j);
                (key, p)
            })
        })
    }
}

fn one_based(key: &[usize]) -> Vec<usize> {
    key.iter().map(|i| i + 1).collect()
}

/// Index of an `m`-tuple among all `N^m` tuples in lexicographic order.
pub fn tuple_index(key: &[usize], n_states: usize) -> usize {
    key.iter().fold(0, |acc, &i| acc * n_states + i)
}

/// Inverse of [`tuple_index`].
pub fn tuple_at(mut index: usize, n_states: usize, order: usize) -> Vec<usize> {
    let mut key = vec![0; order];
    for slot in key.iter_mut().rev() {
        *slot = index % n_states;
        index /= n_states;
    }
    key
}

/// The order-one chain on `m`-tuples with
/// `P̂_{(i_1…i_m),(i_2…i_m j)} = P_{i_1…i_m j}`, `ν̂ = ν`, and the tuple
/// `Â_{i_1…i_m} = A_{i_m}`.
pub fn lift_to_order_one(
    hoc: &HigherOrderChain,
    tuple: &MatrixTuple,
    cap: usize,
) -> Result<(MarkovChain, MatrixTuple)> {
    let n = hoc.n_states;
    if tuple.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: tuple.len(),
        });
    }
    let states = (n as u64)
        .checked_pow(hoc.order as u32)
        .filter(|&s| s <= cap as u64)
        .ok_or(Error::StateExplosion {
            states: (n as f64).powi(hoc.order as i32) as u64,
            cap: cap as u64,
        })? as usize;
    let mut p = vec![0.0; states * states];
    let uniform = 1.0 / n as f64;
    for s in 0..states {
        let key = tuple_at(s, n, hoc.order);
        let base = tuple_index(&key[1..], n) * n;
        let row = &mut p[s * states..(s + 1) * states];
        match hoc.row(&key) {
            Some(entries) => {
                for &(j, v) in entries {
                    row[base + j] = v;
                }
            }
            None => {
                for j in 0..n {
                    row[base + j] = uniform;
                }
            }
        }
    }
    let mut nu = vec![0.0; states];
    for (key, v) in hoc.nu_entries() {
        nu[tuple_index(key, n)] = v;
    }
    let chain = MarkovChain::from_flat(states, p, Some(nu))?;
    let lifted = MatrixTuple::new((0..states).map(|s| tuple.get(s % n).clone()).collect())?;
    Ok((chain, lifted))
}

/// The order-`|w|` chain that cycles deterministically through `w`:
/// `ν = 1/k` on each cyclic window and probability one on the periodic
/// successor.
pub fn build_cycle_chain(w: &IndexWord, n_states: usize) -> Result<HigherOrderChain> {
    if let Some(&bad) = w.letters().iter().find(|&&l| l >= n_states) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: n_states,
        });
    }
    let k = w.len();
    let letters = w.letters();
    let mut nu: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut p: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (j, window) in cyclic_windows(letters, k).into_iter().enumerate() {
        // window j is (w_j, …, w_{j+k-1}); its successor letter is w_{j+k} = w_j
        let mut key = window.clone();
        key.push(letters[j]);
        p.insert(key, 1.0);
        *nu.entry(window).or_default() += 1.0 / k as f64;
    }
    HigherOrderChain::new(k, n_states, p, nu)
}

/// Whether the `|w|` cyclic windows of length `m` are pairwise distinct.
pub fn distinct_window_check(w: &IndexWord, m: usize) -> bool {
    let mut windows = cyclic_windows(w.letters(), m);
    windows.sort_unstable();
    windows.windows(2).all(|p| p[0] != p[1])
}

/// A word whose spectral radius reaches the bracketed `ρ_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitenessWitness {
    /// Primitive necklace representative.
    pub word: IndexWord,
    /// Order of the cycle chain realizing `ρ_d`: the minimal period.
    pub order: usize,
    /// `ρ(A(w))^{1/|w|}`.
    pub rho_root: f64,
    /// True when the reference bracket is tight within the tolerance, so
    /// the word provably attains `ρ_d` up to `tol`.
    pub certified: bool,
    pub bracket: JsrBracket,
}

/// Searches necklaces up to length `max_len` for `ρ(A(w))^{1/|w|}` within
/// `tol` of both ends of the branch-and-bound bracket.
pub fn finiteness_search(tuple: &MatrixTuple, max_len: usize, tol: f64) -> Result<Option<FinitenessWitness>> {
    finiteness_search_with(tuple, max_len, tol, NormKind::Two, DEFAULT_BUDGET)
}

pub fn finiteness_search_with(
    tuple: &MatrixTuple,
    max_len: usize,
    tol: f64,
    kind: NormKind,
    budget: u64,
) -> Result<Option<FinitenessWitness>> {
    if max_len == 0 {
        return Err(Error::InvalidInput("maximum word length must be at least 1".into()));
    }
    let bracket = jsr_gripenberg(tuple, kind, tol, budget)?;
    finiteness_search_in(tuple, max_len, tol, bracket)
}

/// Same search against a precomputed bracket.
pub fn finiteness_search_in(
    tuple: &MatrixTuple,
    max_len: usize,
    tol: f64,
    bracket: JsrBracket,
) -> Result<Option<FinitenessWitness>> {
    if max_len == 0 {
        return Err(Error::InvalidInput("maximum word length must be at least 1".into()));
    }
    let mut found: Option<(Vec<usize>, f64)> = None;
    let mut failure = None;
    for_each_necklace(tuple.len(), max_len, |w| {
        let r = match spectral_radius(&tuple.product(w)) {
            Ok(r) => root(r, w.len()),
            Err(e) => {
                failure = Some(e);
                return false;
            }
        };
        if r >= bracket.lower - tol && r >= bracket.upper - tol {
            found = Some((w.to_vec(), r));
            false
        } else {
            true
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(found.map(|(w, r)| {
        let p = minimal_period(&w);
        let word = w[..p].to_vec();
        FinitenessWitness {
            order: p,
            word: IndexWord::from_vec_unchecked(word),
            rho_root: r,
            certified: !bracket.budget_exhausted && bracket.width() <= tol,
            bracket,
        }
    }))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use proptest::prelude::*;

    fn nilpotent_tuple() -> MatrixTuple {
        MatrixTuple::new(vec![
            Matrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0; 3]]).unwrap(),
            Matrix::from_rows(&[vec![0.0; 3], vec![0.0; 3], vec![1.0, 0.0, 0.0]]).unwrap(),
        ])
        .unwrap()
    }

    fn rotation_tuple() -> MatrixTuple {
        MatrixTuple::new(vec![
            Matrix::identity(2),
            Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap(),
            Matrix::from_rows(&[vec![0.0, -0.5], vec![1.0, 0.0]]).unwrap(),
        ])
        .unwrap()
    }

    fn word(letters: &[usize], n: usize) -> IndexWord {
        IndexWord::from_one_based(letters, n).unwrap()
    }

    /// A random valid order-2 chain over two states: random rows, and `ν`
    /// the stationary law of the lifted chain.
    pub(crate) fn order_two_chain(rows: &[f64; 4]) -> HigherOrderChain {
        let mut p = Vec::new();
        for (r, &a) in rows.iter().enumerate() {
            let key = tuple_at(r, 2, 2);
            let mut k0 = key.clone();
            k0.push(0);
            let mut k1 = key;
            k1.push(1);
            p.push((k0, a));
            p.push((k1, 1.0 - a));
        }
        // stationary law by power iteration on the 4-state lift
        let mut nu = [0.25; 4];
        for _ in 0..20_000 {
            let mut next = [0.0; 4];
            for (key, v) in &p {
                next[tuple_index(&key[1..], 2)] += nu[tuple_index(&key[..2], 2)] * v;
            }
            nu = next;
        }
        let s: f64 = nu.iter().sum();
        let nu: Vec<_> = (0..4).map(|i| (tuple_at(i, 2, 2), nu[i] / s)).collect();
        HigherOrderChain::new(2, 2, p, nu).unwrap()
    }

    #[test]
    fn validation() {
        let bad_row = HigherOrderChain::new(1, 2, vec![(vec![0, 0], 0.5)], vec![(vec![0], 1.0)]);
        assert!(bad_row.is_err());
        let not_invariant = HigherOrderChain::new(
            1,
            2,
            vec![(vec![0, 1], 1.0), (vec![1, 0], 1.0)],
            vec![(vec![0], 0.8), (vec![1], 0.2)],
        );
        assert!(not_invariant.is_err());
        let missing_row = HigherOrderChain::new(1, 2, vec![(vec![0, 0], 1.0)], vec![(vec![1], 1.0)]);
        assert!(missing_row.is_err());
        let out_of_range = HigherOrderChain::new(1, 2, vec![(vec![0, 2], 1.0)], vec![(vec![0], 1.0)]);
        assert!(matches!(out_of_range, Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn order_one_lift_is_identity() {
        let c = MarkovChain::new(
            vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
            Some(vec![0.5, 0.25, 0.25]),
        )
        .unwrap();
        let hoc = HigherOrderChain::from_markov(&c).unwrap();
        let t = rotation_tuple();
        let (lc, lt) = lift_to_order_one(&hoc, &t, DEFAULT_LIFT_CAP).unwrap();
        assert_eq!(lc, c);
        assert_eq!(lt, t);
    }

    #[test]
    fn order_two_lift_sparsity() {
        let hoc = order_two_chain(&[0.3, 0.9, 0.5, 0.2]);
        let t = MatrixTuple::new(vec![Matrix::identity(2), Matrix::diag(&[2.0, 0.5])]).unwrap();
        let (lc, lt) = lift_to_order_one(&hoc, &t, DEFAULT_LIFT_CAP).unwrap();
        assert_eq!(lc.n_states(), 4);
        // oracle: direct formula on all 16 entries
        for s in 0..4 {
            let (i1, i2) = (s / 2, s % 2);
            let mut nonzero = 0;
            for r in 0..4 {
                let (j1, j2) = (r / 2, r % 2);
                let want = if j1 == i2 {
                    hoc.row(&[i1, i2])
                        .unwrap()
                        .iter()
                        .find(|e| e.0 == j2)
                        .map_or(0.0, |e| e.1)
                } else {
                    0.0
                };
                assert_eq!(lc.p(s, r), want);
                nonzero += (lc.p(s, r) > 0.0) as usize;
            }
            assert!(nonzero <= 2);
            assert_eq!(lt.get(s), t.get(i2));
            assert_eq!(lc.nu().unwrap()[s], hoc.nu(&[i1, i2]));
        }
    }

    #[test]
    fn lift_state_cap() {
        let w = word(&[1, 2, 1, 2, 2], 2);
        let hoc = build_cycle_chain(&w, 2).unwrap();
        let t = MatrixTuple::new(vec![Matrix::identity(1), Matrix::identity(1)]).unwrap();
        assert!(matches!(
            lift_to_order_one(&hoc, &t, 16),
            Err(Error::StateExplosion { states: 32, cap: 16 })
        ));
    }

    #[test]
    fn cycle_chain_on_112_lifts_to_a_three_cycle() {
        let hoc = build_cycle_chain(&word(&[1, 1, 2], 2), 2).unwrap();
        assert_eq!(hoc.order(), 3);
        assert_eq!(hoc.shift_defect(), 0.0);
        let (lc, _) = lift_to_order_one(&hoc, &nilpotent_tuple(), DEFAULT_LIFT_CAP).unwrap();
        assert_eq!(lc.n_states(), 8);
        // hand construction: windows 112 → 121 → 211 → 112
        let idx = |k: &[usize]| tuple_index(&k.iter().map(|x| x - 1).collect::<Vec<_>>(), 2);
        let support: Vec<usize> = (0..8).filter(|&s| lc.nu_positive(s)).collect();
        let mut expect = vec![idx(&[1, 1, 2]), idx(&[1, 2, 1]), idx(&[2, 1, 1])];
        expect.sort();
        assert_eq!(support, expect);
        assert_eq!(lc.p(idx(&[1, 1, 2]), idx(&[1, 2, 1])), 1.0);
        assert_eq!(lc.p(idx(&[1, 2, 1]), idx(&[2, 1, 1])), 1.0);
        assert_eq!(lc.p(idx(&[2, 1, 1]), idx(&[1, 1, 2])), 1.0);
        let cycles = crate::markov::enumerate_simple_cycles(&lc, true, 100).unwrap();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].len(), 3);
    }

    #[test]
    fn single_letter_cycle_chain() {
        let hoc = build_cycle_chain(&word(&[1], 3), 3).unwrap();
        assert_eq!(hoc.order(), 1);
        assert_eq!(hoc.nu(&[0]), 1.0);
        assert_eq!(hoc.row(&[0]).unwrap(), &[(0, 1.0)]);
    }

    #[test]
    fn distinct_letters_give_the_order_one_cycle() {
        let w = word(&[2, 3, 1], 3);
        let hoc = build_cycle_chain(&w, 3).unwrap();
        let m = MarkovChain::cycle_chain(&w, 3).unwrap();
        // windows of length 3 determine their last letter; compare on the
        // projection to order one
        assert_eq!(hoc.order(), 3);
        for (key, v) in hoc.nu_entries() {
            assert!((v - m.nu().unwrap()[key[0]]).abs() < 1e-15);
            let (next, p) = hoc.row(key).unwrap()[0];
            assert_eq!(p, 1.0);
            assert_eq!(m.p(key[2], next), 1.0);
        }
    }

    #[test]
    fn periodic_word_windows_merge() {
        let hoc = build_cycle_chain(&word(&[1, 2, 1, 2], 2), 2).unwrap();
        assert_eq!(hoc.nu_entries().count(), 2);
        assert!((hoc.nu(&[0, 1, 0, 1]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn window_checks() {
        assert!(distinct_window_check(&word(&[1, 2, 3], 3), 1));
        assert!(!distinct_window_check(&word(&[1, 1, 2], 2), 1));
        assert!(distinct_window_check(&word(&[1, 1, 2], 2), 3));
        assert!(!distinct_window_check(&word(&[1, 2, 1, 2], 2), 4));
    }

    #[test]
    fn finiteness_examples() {
        let w = finiteness_search_with(&nilpotent_tuple(), 3, 1e-6, NormKind::One, 10_000)
            .unwrap()
            .unwrap();
        assert_eq!(crate::words::canonical_rotation(w.word.letters()), vec![0, 0, 1]);
        assert_eq!(w.order, 3);
        assert!((w.rho_root - 1.0).abs() < 1e-9);
        assert!(w.certified);

        let single = MatrixTuple::new(vec![Matrix::from_rows(&[vec![0.5, 1.0], vec![0.0, 0.25]]).unwrap()]).unwrap();
        let w = finiteness_search(&single, 4, 1e-6).unwrap().unwrap();
        assert_eq!(w.word.to_one_based(), vec![1]);
        assert_eq!(w.order, 1);

        let w = finiteness_search(&rotation_tuple(), 1, 1e-6).unwrap().unwrap();
        assert_eq!(w.word.to_one_based(), vec![1]);
        assert!((w.rho_root - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finiteness_none_when_too_short() {
        // ρ_d = 1 is only reached at length 3
        let r = finiteness_search_with(&nilpotent_tuple(), 2, 1e-6, NormKind::One, 10_000).unwrap();
        assert!(r.is_none());
    }

    proptest! {
        #[test]
        fn cycle_chains_are_shift_invariant(letters in prop::collection::vec(1usize..=3, 1..7)) {
            let w = word(&letters, 3);
            let hoc = build_cycle_chain(&w, 3).unwrap();
            prop_assert!(hoc.shift_defect() <= 1e-15);
            let total: f64 = hoc.nu_entries().map(|e| e.1).sum();
            prop_assert!((total - 1.0).abs() <= 1e-15);
        }

        #[test]
        fn primitive_words_have_distinct_windows(letters in prop::collection::vec(1usize..=3, 1..9)) {
            let w = word(&letters, 3);
            let k = w.len();
            if minimal_period(w.letters()) == k {
                prop_assert!(distinct_window_check(&w, k));
            }
        }
    }
}
