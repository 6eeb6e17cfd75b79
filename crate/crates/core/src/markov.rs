//! Order-1 Markov switching laws: stochastic matrices, invariant
//! probabilities, the recurrent/transient decomposition, cycle enumeration
//! and path sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_raw, solve_linear};
use crate::system::IndexWord;
use crate::words::is_canonical_rotation;

/// Entries of `ν` at or below this value count as zero.
pub const NU_POSITIVE_TOL: f64 = 1e-12;
/// Default closed-walk length bound.
pub const DEFAULT_MAX_WALK_LEN: usize = 12;
/// Default cap on the number of simple cycles.
pub const DEFAULT_CYCLE_CAP: u64 = 1_000_000;

const ROW_SUM_TOL: f64 = 1e-12;
const NEG_CLAMP: f64 = -1e-15;
const INVARIANCE_TOL: f64 = 1e-10;
/// Transient blocks larger than this skip the numerical `ρ(Q)` check.
const MAX_DENSE_TRANSIENT: usize = 256;

/// A stochastic matrix `P` with an optional invariant probability `ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    n: usize,
    p: Vec<f64>,
    nu: Option<Vec<f64>>,
}

fn clamp_probabilities(values: &mut [f64], what: &str) -> Result<()> {
    for v in values.iter_mut() {
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
        if *v < NEG_CLAMP {
            return Err(Error::InvalidInput(format!("{what} has negative entry {v}")));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

impl MarkovChain {
    /// Validates a row-major `n × n` stochastic matrix and optional `ν`.
    pub fn from_flat(n: usize, mut p: Vec<f64>, nu: Option<Vec<f64>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("a chain needs at least one state".into()));
        }
        if p.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: p.len(),
            });
        }
        clamp_probabilities(&mut p, "transition matrix")?;
        for (i, row) in p.chunks(n).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidInput(format!(
                    "row {} of the transition matrix sums to {s}",
                    i + 1
                )));
            }
        }
        let chain = Self { n, p, nu: None };
        match nu {
            Some(nu) => chain.with_nu(nu),
            None => Ok(chain),
        }
    }

    pub fn new(rows: Vec<Vec<f64>>, nu: Option<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Self::from_flat(n, rows.concat(), nu)
    }

    /// Attaches an invariant probability, checking `νP = ν`.
    pub fn with_nu(mut self, mut nu: Vec<f64>) -> Result<Self> {
        if nu.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: nu.len(),
            });
        }
        clamp_probabilities(&mut nu, "invariant probability")?;
        let total: f64 = nu.iter().sum();
        if (total - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidInput(format!("invariant probability sums to {total}")));
        }
        let defect = self.invariance_defect(&nu);
        if defect > INVARIANCE_TOL {
            return Err(Error::InvalidInput(format!(
                "ν is not invariant under P (max defect {defect:e})"
            )));
        }
        self.nu = Some(nu);
        Ok(self)
    }

    /// `max_j |(νP)_j − ν_j|`.
    pub fn invariance_defect(&self, nu: &[f64]) -> f64 {
        (0..self.n)
            .map(|j| {
                let s: f64 = (0..self.n).map(|i| nu[i] * self.p(i, j)).sum();
                (s - nu[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn transition_matrix(&self) -> &[f64] {
        &self.p
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn nu(&self) -> Option<&[f64]> {
        self.nu.as_deref()
    }

    pub(crate) fn require_nu(&self) -> Result<&[f64]> {
        self.nu()
            .ok_or_else(|| Error::DegenerateDistribution("the chain has no invariant probability".into()))
    }

    pub fn nu_positive(&self, i: usize) -> bool {
        self.nu.as_ref().is_some_and(|nu| nu[i] > NU_POSITIVE_TOL)
    }

    /// States reachable in one step with positive probability, ascending.
    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let row = &self.p[i * self.n..(i + 1) * self.n];
        row.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(j, _)| j)
    }

    /// The deterministic chain following `w` cyclically, with uniform `ν`
    /// on the letters of `w`. Letters must be pairwise distinct.
    pub fn cycle_chain(w: &IndexWord, n_states: usize) -> Result<Self> {
        let k = w.len();
        let letters = w.letters();
        let mut seen = vec![false; n_states];
        for &l in letters {
            if l >= n_states {
                return Err(Error::IndexOutOfRange {
                    index: l,
                    len: n_states,
                });
            }
            if seen[l] {
                return Err(Error::InvalidInput(
                    "cycle chain letters must be pairwise distinct".into(),
                ));
            }
            seen[l] = true;
        }
        let mut p = vec![0.0; n_states * n_states];
        for i in 0..n_states {
            if !seen[i] {
                p[i * n_states + i] = 1.0;
            }
        }
        for j in 0..k {
            p[letters[j] * n_states + letters[(j + 1) % k]] = 1.0;
        }
        let mut nu = vec![0.0; n_states];
        for &l in letters {
            nu[l] = 1.0 / k as f64;
        }
        Self::from_flat(n_states, p, Some(nu))
    }
}

/// Recurrent/transient structure of a stochastic matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SccDecomposition {
    /// States in block order: recurrent blocks first, then transient states.
    pub permutation: Vec<usize>,
    /// Index sets of the closed strongly connected classes.
    pub recurrent_blocks: Vec<Vec<usize>>,
    /// Transient states, ascending.
    pub transient: Vec<usize>,
    /// `ρ(Q)` for the transient block; `None` when the block is empty or
    /// too large for a dense eigenvalue solve.
    pub transient_spectral_radius: Option<f64>,
}

impl SccDecomposition {
    /// Recurrent block containing `state`, if any.
    pub fn block_of(&self, state: usize) -> Option<usize> {
        self.recurrent_blocks.iter().position(|b| b.contains(&state))
    }

    /// Sub-matrix of `P` on the given index set, row-major.
    pub fn restrict(chain: &MarkovChain, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .flat_map(|&i| idx.iter().map(move |&j| chain.p(i, j)))
            .collect()
    }
}

/// Strongly connected components of the positive-transition graph, in
/// Tarjan's completion order (iterative).
fn tarjan_scc(chain: &MarkovChain) -> Vec<Vec<usize>> {
    let n = chain.n_states();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    let adj: Vec<Vec<usize>> = (0..n).map(|i| chain.successors(i).collect()).collect();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Splits the states into closed classes (recurrent blocks `P_1 … P_R`)
/// and the transient remainder `Q`.
pub fn scc_decompose(chain: &MarkovChain) -> SccDecomposition {
    let n = chain.n_states();
    let mut comp_of = vec![0; n];
    let comps = tarjan_scc(chain);
    for (c, members) in comps.iter().enumerate() {
        for &v in members {
            comp_of[v] = c;
        }
    }
    let mut recurrent: Vec<Vec<usize>> = Vec::new();
    let mut transient = Vec::new();
    for (c, members) in comps.iter().enumerate() {
        let closed = members.iter().all(|&v| chain.successors(v).all(|w| comp_of[w] == c));
        if closed {
            recurrent.push(members.clone());
        } else {
            transient.extend_from_slice(members);
        }
    }
    recurrent.sort_by_key(|b| b[0]);
    transient.sort_unstable();
    let permutation: Vec<usize> = recurrent.iter().flatten().chain(transient.iter()).copied().collect();
    let transient_spectral_radius = if transient.is_empty() || transient.len() > MAX_DENSE_TRANSIENT {
        None
    } else {
        let q = SccDecomposition::restrict(chain, &transient);
        eigenvalues_raw(&q, transient.len())
            .ok()
            .map(|e| e.iter().map(|x| x.modulus()).fold(0.0, f64::max))
    };
    SccDecomposition {
        permutation,
        recurrent_blocks: recurrent,
        transient,
        transient_spectral_radius,
    }
}

/// Extreme invariant probabilities `ν^[1..R]`, one per recurrent block.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantProbabilities {
    pub decomposition: SccDecomposition,
    /// Each extreme probability extended by zeros to all `N` states.
    pub extremes: Vec<Vec<f64>>,
}

impl InvariantProbabilities {
    /// Writes an invariant `ν` as `Σ α_j ν^[j]` and returns the weights.
    ///
    /// Fails when `ν` is not invariant or the reconstruction error exceeds
    /// `1e-10`.
    pub fn decompose(&self, chain: &MarkovChain, nu: &[f64]) -> Result<Vec<f64>> {
        if nu.len() != chain.n_states() {
            return Err(Error::DimensionMismatch {
                expected: chain.n_states(),
                found: nu.len(),
            });
        }
        if chain.invariance_defect(nu) > INVARIANCE_TOL {
            return Err(Error::InvalidInput("ν is not invariant under P".into()));
        }
        let alphas: Vec<f64> = self
            .decomposition
            .recurrent_blocks
            .iter()
            .map(|b| b.iter().map(|&i| nu[i]).sum())
            .collect();
        let err = (0..chain.n_states())
            .map(|i| {
                let rec: f64 = alphas.iter().zip(&self.extremes).map(|(a, e)| a * e[i]).sum();
                (rec - nu[i]).abs()
            })
            .fold(0.0, f64::max);
        if err > INVARIANCE_TOL {
            return Err(Error::InvalidInput(format!(
                "ν does not decompose over the recurrent blocks (error {err:e})"
            )));
        }
        Ok(alphas)
    }
}

/// Stationary probability of each recurrent block, extended by zeros.
pub fn invariant_probabilities(chain: &MarkovChain) -> Result<InvariantProbabilities> {
    let n = chain.n_states();
    let decomposition = scc_decompose(chain);
    let mut extremes = Vec::with_capacity(decomposition.recurrent_blocks.len());
    for block in &decomposition.recurrent_blocks {
        let b = block.len();
        let pb = SccDecomposition::restrict(chain, block);
        // (P_bᵀ − I) ν = 0 with the last equation replaced by Σν = 1
        let mut a = vec![0.0; b * b];
        for i in 0..b {
            for j in 0..b {
                a[i * b + j] = pb[j * b + i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..b {
            a[(b - 1) * b + j] = 1.0;
        }
        let mut rhs = vec![0.0; b];
        rhs[b - 1] = 1.0;
        let local = solve_linear(&a, b, &rhs)?;
        let residual = (0..b)
            .map(|j| {
                let s: f64 = (0..b).map(|i| local[i] * pb[i * b + j]).sum();
                (s - local[j]).abs()
            })
            .fold(0.0, f64::max);
        if residual > INVARIANCE_TOL || local.iter().any(|&x| x < -INVARIANCE_TOL) {
            return Err(Error::NumericalFailure(format!(
                "stationary solve residual {residual:e} on a block of size {b}"
            )));
        }
        let mut full = vec![0.0; n];
        for (&i, &x) in block.iter().zip(&local) {
            full[i] = x.max(0.0);
        }
        extremes.push(full);
    }
    Ok(InvariantProbabilities {
        decomposition,
        extremes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    SimpleCycle,
    ClosedWalk,
}

/// A `P`-cycle `(i_1, …, i_k)`: positive transitions along the word and
/// back from `i_k` to `i_1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub indices: IndexWord,
    pub kind: CycleKind,
    /// Whether `ν_{i_1} > 0`, i.e. the record is a `(ν, P)`-cycle.
    pub probability_positive: bool,
}

impl CycleRecord {
    pub fn starting_index(&self) -> usize {
        self.indices.letters()[0]
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

struct Johnson<'a> {
    adj: &'a [Vec<usize>],
    blocked: Vec<bool>,
    b_sets: Vec<Vec<usize>>,
    stack: Vec<usize>,
    allowed: Vec<bool>,
    found: Vec<Vec<usize>>,
    cap: u64,
}

impl Johnson<'_> {
    fn unblock(&mut self, u: usize) {
        let mut work = vec![u];
        while let Some(u) = work.pop() {
            if !self.blocked[u] {
                continue;
            }
            self.blocked[u] = false;
            work.extend(std::mem::take(&mut self.b_sets[u]));
        }
    }

    fn circuit(&mut self, v: usize, s: usize) -> Result<bool> {
        let mut closed = false;
        self.stack.push(v);
        self.blocked[v] = true;
        let adj = self.adj;
        for &w in &adj[v] {
            if !self.allowed[w] {
                continue;
            }
            if w == s {
                if self.found.len() as u64 >= self.cap {
                    return Err(Error::BudgetExceeded {
                        what: "enumerating simple cycles",
                        limit: self.cap,
                    });
                }
                self.found.push(self.stack.clone());
                closed = true;
            } else if !self.blocked[w] && self.circuit(w, s)? {
                closed = true;
            }
        }
        if closed {
            self.unblock(v);
        } else {
            for &w in &adj[v] {
                if self.allowed[w] && !self.b_sets[w].contains(&v) {
                    self.b_sets[w].push(v);
                }
            }
        }
        self.stack.pop();
        Ok(closed)
    }
}

/// All simple cycles of the positive-transition graph, each listed once
/// starting at its smallest state (its lexicographically least rotation).
///
/// With `require_nu_positive`, only `(ν, P)`-cycles are kept.
pub fn enumerate_simple_cycles(chain: &MarkovChain, require_nu_positive: bool, cap: u64) -> Result<Vec<CycleRecord>> {
    if require_nu_positive {
        chain.require_nu()?;
    }
    let n = chain.n_states();
    let adj: Vec<Vec<usize>> = (0..n).map(|i| chain.successors(i).collect()).collect();
    let mut j = Johnson {
        adj: &adj,
        blocked: vec![false; n],
        b_sets: vec![Vec::new(); n],
        stack: Vec::new(),
        allowed: vec![false; n],
        found: Vec::new(),
        cap,
    };
    for s in 0..n {
        // restrict to the strongly connected piece of {s, …, n-1} holding s
        let fwd = reach(&adj, s, |v| v >= s, false);
        let bwd = reach(&adj, s, |v| v >= s, true);
        for v in 0..n {
            j.allowed[v] = fwd[v] && bwd[v];
            j.blocked[v] = false;
            j.b_sets[v].clear();
        }
        j.circuit(s, s)?;
    }
    Ok(j.found
        .into_iter()
        .map(|c| {
            let positive = chain.nu_positive(c[0]) || c.iter().any(|&i| chain.nu_positive(i));
            CycleRecord {
                indices: IndexWord::from_vec_unchecked(c),
                kind: CycleKind::SimpleCycle,
                probability_positive: positive,
            }
        })
        .filter(|r| !require_nu_positive || r.probability_positive)
        .collect())
}

fn reach(adj: &[Vec<usize>], s: usize, keep: impl Fn(usize) -> bool, reverse: bool) -> Vec<bool> {
    let n = adj.len();
    let radj: Vec<Vec<usize>>;
    let graph = if reverse {
        let mut r = vec![Vec::new(); n];
        for (u, outs) in adj.iter().enumerate() {
            for &v in outs {
                r[v].push(u);
            }
        }
        radj = r;
        &radj
    } else {
        adj
    };
    let mut seen = vec![false; n];
    let mut work = vec![s];
    seen[s] = true;
    while let Some(u) = work.pop() {
        for &v in &graph[u] {
            if keep(v) && !seen[v] {
                seen[v] = true;
                work.push(v);
            }
        }
    }
    seen
}

/// Streaming depth-first enumeration of closed walks.
#[derive(Debug, Clone)]
pub struct ClosedWalks<'a> {
    chain: &'a MarkovChain,
    max_len: usize,
    canonical_only: bool,
    starts: Vec<usize>,
    next_start: usize,
    path: Vec<usize>,
    cursor: Vec<usize>,
}

impl<'a> ClosedWalks<'a> {
    fn new(chain: &'a MarkovChain, max_len: usize, require_nu_positive: bool, canonical_only: bool) -> Self {
        let starts = (0..chain.n_states())
            .filter(|&i| !require_nu_positive || chain.nu_positive(i))
            .collect();
        Self {
            chain,
            max_len,
            canonical_only,
            starts,
            next_start: 0,
            path: Vec::with_capacity(max_len),
            cursor: Vec::with_capacity(max_len),
        }
    }

    fn closes(&self) -> bool {
        let s = self.path[0];
        let last = *self.path.last().unwrap();
        self.chain.p(last, s) > 0.0 && (!self.canonical_only || is_canonical_rotation(&self.path))
    }

    fn record(&self) -> CycleRecord {
        CycleRecord {
            indices: IndexWord::from_vec_unchecked(self.path.clone()),
            kind: CycleKind::ClosedWalk,
            probability_positive: self.chain.nu_positive(self.path[0]),
        }
    }
}

impl Iterator for ClosedWalks<'_> {
    type Item = CycleRecord;

    fn next(&mut self) -> Option<CycleRecord> {
        if self.max_len == 0 {
            return None;
        }
        loop {
            if self.path.is_empty() {
                let s = *self.starts.get(self.next_start)?;
                self.next_start += 1;
                self.path.push(s);
                self.cursor.push(0);
                if self.closes() {
                    return Some(self.record());
                }
                continue;
            }
            let n = self.chain.n_states();
            let top = *self.path.last().unwrap();
            let s = self.path[0];
            let lo = if self.canonical_only { s } else { 0 };
            let depth = self.path.len();
            let mut next = None;
            if depth < self.max_len {
                let from = (*self.cursor.last().unwrap()).max(lo);
                next = (from..n).find(|&c| self.chain.p(top, c) > 0.0);
            }
            match next {
                Some(c) => {
                    *self.cursor.last_mut().unwrap() = c + 1;
                    self.path.push(c);
                    self.cursor.push(0);
                    if self.closes() {
                        return Some(self.record());
                    }
                }
                None => {
                    self.path.pop();
                    self.cursor.pop();
                }
            }
        }
    }
}

/// All closed walks `(i_1, …, i_k)`, `k ≤ max_len`, with positive
/// transitions and closing probability, from every admissible start.
pub fn enumerate_closed_walks(chain: &MarkovChain, max_len: usize, require_nu_positive: bool) -> ClosedWalks<'_> {
    ClosedWalks::new(chain, max_len, require_nu_positive, false)
}

/// Closed walks `(s, i_2, …, i_k)` that start and end at `start`.
pub fn enumerate_closed_walks_at(chain: &MarkovChain, start: usize, max_len: usize) -> ClosedWalks<'_> {
    let mut walks = ClosedWalks::new(chain, max_len, false, false);
    walks.starts = vec![start];
    walks
}

/// Closed walks up to rotation: only walks that are their own
/// lexicographically least rotation are produced.
///
/// Every vertex of a closed walk lies in one communicating class, so a
/// rotation starts at a `ν`-positive state exactly when all do.
pub fn enumerate_cycle_necklaces(chain: &MarkovChain, max_len: usize, require_nu_positive: bool) -> ClosedWalks<'_> {
    ClosedWalks::new(chain, max_len, require_nu_positive, true)
}

/// Cumulative tables for fast path sampling.
#[derive(Debug, Clone)]
pub struct PathSampler {
    n: usize,
    cum_nu: Vec<f64>,
    cum_rows: Vec<f64>,
}

fn draw(cum: &[f64], rng: &mut impl Rng) -> usize {
    let total = *cum.last().unwrap();
    let u = rng.random::<f64>() * total;
    let k = cum.partition_point(|&c| c <= u);
    if k < cum.len() {
        k
    } else {
        // u landed on the total through rounding: take the last positive entry
        let mut k = cum.len() - 1;
        while k > 0 && cum[k - 1] == cum[k] {
            k -= 1;
        }
        k
    }
}

fn cumulative(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

impl PathSampler {
    pub fn new(chain: &MarkovChain) -> Result<Self> {
        let nu = chain.require_nu()?;
        let n = chain.n_states();
        let cum_nu = cumulative(nu);
        if *cum_nu.last().unwrap() <= NU_POSITIVE_TOL {
            return Err(Error::DegenerateDistribution("ν sums to zero".into()));
        }
        let mut cum_rows = Vec::with_capacity(n * n);
        for i in 0..n {
            let row = cumulative(&chain.transition_matrix()[i * n..(i + 1) * n]);
            if *row.last().unwrap() <= NU_POSITIVE_TOL {
                return Err(Error::DegenerateDistribution(format!(
                    "row {} of P sums to zero",
                    i + 1
                )));
            }
            cum_rows.extend(row);
        }
        Ok(Self { n, cum_nu, cum_rows })
    }

    /// Draws `i_1 ~ ν`, then `i_{t+1} ~ P[i_t, ·]`.
    pub fn sample(&self, horizon: usize, rng: &mut impl Rng) -> Vec<usize> {
        let mut out = Vec::with_capacity(horizon);
        if horizon == 0 {
            return out;
        }
        let mut cur = draw(&self.cum_nu, rng);
        out.push(cur);
        for _ in 1..horizon {
            cur = draw(&self.cum_rows[cur * self.n..(cur + 1) * self.n], rng);
            out.push(cur);
        }
        out
    }
}

/// Samples a `(ν, P)`-word of length `horizon`, deterministically per seed.
pub fn sample_path(chain: &MarkovChain, horizon: usize, seed: u64) -> Result<IndexWord> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let sampler = PathSampler::new(chain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(IndexWord::from_vec_unchecked(sampler.sample(horizon, &mut rng)))
}
