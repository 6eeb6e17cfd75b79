//! Deterministic joint spectral radius `ρ_d`: brute-force brackets,
//! best-first branch-and-bound refinement, and a finite-depth extremal norm.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{induced_norm, spectral_radius, Matrix, NormKind};
use crate::system::{IndexWord, MatrixTuple};
use crate::words::{canonical_rotation, is_canonical_rotation};

/// Default cap on enumerated words.
pub const DEFAULT_WORD_CAP: u64 = 10_000_000;
/// Default node budget for [`jsr_gripenberg`].
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Lower and upper bounds on `ρ_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsrBracket {
    pub lower: f64,
    pub upper: f64,
    /// A word with `ρ(A(w))^{1/|w|} = lower`.
    pub lower_witness: IndexWord,
    /// Longest word length whose norm entered the upper bound.
    pub upper_horizon: usize,
    pub norm_kind: NormKind,
    /// Number of word products evaluated.
    pub nodes: u64,
    /// The search stopped on its budget before reaching the tolerance.
    pub budget_exhausted: bool,
}

impl JsrBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.lower - tol <= x && x <= self.upper + tol
    }
}

/// `x^{1/k}` for `x ≥ 0`.
#[inline]
pub(crate) fn root(x: f64, k: usize) -> f64 {
    if k == 1 {
        x
    } else {
        x.powf(1.0 / k as f64)
    }
}

/// Best lower-bound candidate: larger value wins, then shorter word, then
/// lexicographically smaller word. Total, so merging is order independent.
#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    word: Vec<usize>,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        match self.value.total_cmp(&other.value) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => (self.word.len(), &self.word) < (other.word.len(), &other.word),
        }
    }

    fn merge(a: Candidate, b: Candidate) -> Candidate {
        if b.better_than(&a) {
            b
        } else {
            a
        }
    }
}

struct Partial {
    lower: Candidate,
    upper: f64,
    nodes: u64,
}

fn bruteforce_from(tuple: &MatrixTuple, n: usize, kind: NormKind, first: usize) -> Result<Partial> {
    let mut acc = Partial {
        lower: Candidate {
            value: f64::NEG_INFINITY,
            word: vec![first],
        },
        upper: 0.0,
        nodes: 0,
    };
    let mut word = vec![first];
    let mut products = vec![tuple.get(first).clone()];
    // explicit DFS: `next[k]` is the next letter to try at depth k+1
    let mut next = vec![0usize];
    visit(tuple, n, kind, &word, &products[0], &mut acc)?;
    while let Some(&letter) = next.last() {
        if word.len() == n || letter == tuple.len() {
            next.pop();
            word.pop();
            products.pop();
            continue;
        }
        *next.last_mut().unwrap() += 1;
        let p = tuple.get(letter).matmul(products.last().unwrap());
        word.push(letter);
        visit(tuple, n, kind, &word, &p, &mut acc)?;
        products.push(p);
        next.push(0);
    }
    Ok(acc)
}

fn visit(
    _tuple: &MatrixTuple,
    n: usize,
    kind: NormKind,
    word: &[usize],
    product: &Matrix,
    acc: &mut Partial,
) -> Result<()> {
    let k = word.len();
    acc.nodes += 1;
    if is_canonical_rotation(word) {
        let c = Candidate {
            value: root(spectral_radius(product)?, k),
            word: word.to_vec(),
        };
        if c.better_than(&acc.lower) {
            acc.lower = c;
        }
    }
    if k == n {
        acc.upper = acc.upper.max(root(induced_norm(product, kind)?, n));
    }
    Ok(())
}

fn total_words(n_symbols: usize, n: usize) -> u64 {
    (1..=n as u32)
        .map(|k| (n_symbols as u64).saturating_pow(k))
        .fold(0u64, u64::saturating_add)
}

/// Bracket at a fixed horizon: the upper bound is the largest
/// `‖A(w)‖^{1/n}` over words of length exactly `n`, the lower bound the
/// largest `ρ(A(w))^{1/|w|}` over necklaces of length at most `n`.
pub fn jsr_bounds_bruteforce(tuple: &MatrixTuple, n: usize, kind: NormKind) -> Result<JsrBracket> {
    jsr_bounds_bruteforce_capped(tuple, n, kind, DEFAULT_WORD_CAP)
}

pub fn jsr_bounds_bruteforce_capped(tuple: &MatrixTuple, n: usize, kind: NormKind, cap: u64) -> Result<JsrBracket> {
    if n == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if total_words(tuple.len(), n) > cap {
        return Err(Error::BudgetExceeded {
            what: "enumerating words for the brute-force bracket",
            limit: cap,
        });
    }
    let parts: Vec<Partial> = (0..tuple.len())
        .into_par_iter()
        .map(|first| bruteforce_from(tuple, n, kind, first))
        .collect::<Result<_>>()?;
    let mut nodes = 0;
    let mut upper = 0.0f64;
    let mut best: Option<Candidate> = None;
    for p in parts {
        nodes += p.nodes;
        upper = upper.max(p.upper);
        best = Some(match best {
            None => p.lower,
            Some(b) => Candidate::merge(b, p.lower),
        });
    }
    let best = best.expect("tuple is nonempty");
    Ok(JsrBracket {
        lower: best.value,
        upper,
        lower_witness: IndexWord::from_vec_unchecked(best.word),
        upper_horizon: n,
        norm_kind: kind,
        nodes,
        budget_exhausted: false,
    })
}

struct Node {
    bound: f64,
    seq: u64,
    /// Index of the word's last letter in the arena.
    id: usize,
    depth: usize,
    product: Matrix,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Words of the search tree as `(parent, letter)` links.
struct Arena(Vec<(usize, usize)>);

impl Arena {
    const ROOT: usize = usize::MAX;

    fn push(&mut self, parent: usize, letter: usize) -> usize {
        self.0.push((parent, letter));
        self.0.len() - 1
    }

    fn word(&self, mut id: usize) -> Vec<usize> {
        let mut w = Vec::new();
        while id != Self::ROOT {
            let (parent, letter) = self.0[id];
            w.push(letter);
            id = parent;
        }
        w.reverse();
        w
    }
}

/// Best-first branch and bound over words.
///
/// Each node `w` carries `p(w) = min_{u prefix of w} ‖A(u)‖^{1/|u|}`.
/// Every long word splits into pieces whose norms are bounded by the
/// current frontier, so the largest frontier `p` bounds `ρ_d` from above.
/// Nodes with `p ≤ lower + tol` are closed. The search stops once
/// `upper − lower ≤ tol` or after `budget` products; in the second case the
/// bracket is still valid and is flagged `budget_exhausted`.
pub fn jsr_gripenberg(tuple: &MatrixTuple, kind: NormKind, tol: f64, budget: u64) -> Result<JsrBracket> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut arena = Arena(Vec::new());
    let mut seq = 0u64;
    let mut nodes = 0u64;
    let mut lower = Candidate {
        value: f64::NEG_INFINITY,
        word: vec![0],
    };
    let mut closed_max = 0.0f64;
    let mut depth_max = 1usize;

    for i in 0..tuple.len() {
        let m = tuple.get(i).clone();
        nodes += 1;
        let c = Candidate {
            value: spectral_radius(&m)?,
            word: vec![i],
        };
        if c.better_than(&lower) {
            lower = c;
        }
        heap.push(Node {
            bound: induced_norm(&m, kind)?,
            seq,
            id: arena.push(Arena::ROOT, i),
            depth: 1,
            product: m,
        });
        seq += 1;
    }

    let mut exhausted = false;
    loop {
        // close nodes that can no longer beat the lower bound
        while let Some(top) = heap.peek() {
            if top.bound <= lower.value + tol {
                closed_max = closed_max.max(top.bound);
                depth_max = depth_max.max(top.depth);
                heap.pop();
            } else {
                break;
            }
        }
        let open_max = heap.peek().map_or(0.0, |n| n.bound);
        let upper = open_max.max(closed_max);
        if upper - lower.value <= tol || heap.is_empty() {
            break;
        }
        if nodes >= budget {
            exhausted = true;
            break;
        }
        let node = heap.pop().unwrap();
        let k = node.depth + 1;
        for j in 0..tuple.len() {
            let product = tuple.get(j).matmul(&node.product);
            nodes += 1;
            let id = arena.push(node.id, j);
            let r = root(spectral_radius(&product)?, k);
            if r > lower.value {
                lower = Candidate {
                    value: r,
                    word: canonical_rotation(&arena.word(id)),
                };
            }
            let bound = node.bound.min(root(induced_norm(&product, kind)?, k));
            depth_max = depth_max.max(k);
            heap.push(Node {
                bound,
                seq,
                id,
                depth: k,
                product,
            });
            seq += 1;
        }
    }
    let open_max = heap.peek().map_or(0.0, |n| n.bound);
    let upper = open_max.max(closed_max).max(lower.value);
    Ok(JsrBracket {
        lower: lower.value,
        upper,
        lower_witness: IndexWord::from_vec_unchecked(lower.word),
        upper_horizon: depth_max,
        norm_kind: kind,
        nodes,
        budget_exhausted: exhausted,
    })
}

/// Finite-depth extremal norm
/// `v_D(x) = max_{|w| ≤ D} ρ̂^{−|w|} ‖A(w) x‖`.
#[derive(Debug, Clone)]
pub struct BarabanovApprox {
    tuple: MatrixTuple,
    pub depth: usize,
    pub scale: f64,
    pub norm_kind: NormKind,
}

impl BarabanovApprox {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.eval_depth(x, self.depth)
    }

    fn eval_depth(&self, x: &[f64], depth: usize) -> f64 {
        let own = self.norm_kind.vector_norm(x);
        if depth == 0 {
            return own;
        }
        self.tuple
            .iter()
            .map(|a| self.eval_depth(&a.mul_vec(x), depth - 1) / self.scale)
            .fold(own, f64::max)
    }

    /// `v_{D+1}` with the same scale and norm.
    pub fn deeper(&self) -> BarabanovApprox {
        BarabanovApprox {
            depth: self.depth + 1,
            ..self.clone()
        }
    }
}

pub fn barabanov_approx(tuple: &MatrixTuple, scale: f64, depth: usize, kind: NormKind) -> Result<BarabanovApprox> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::InvalidInput("scale must be positive and finite".into()));
    }
    if total_words(tuple.len(), depth) > DEFAULT_WORD_CAP {
        return Err(Error::BudgetExceeded {
            what: "evaluating the extremal norm",
            limit: DEFAULT_WORD_CAP,
        });
    }
    Ok(BarabanovApprox {
        tuple: tuple.clone(),
        depth,
        scale,
        norm_kind: kind,
    })
}
