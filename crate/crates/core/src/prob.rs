//! Probabilistic joint spectral radius `ρ_p(ν, P)`: exact finite-horizon
//! expectations, the resulting upper bound, and Monte-Carlo estimates.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::higher_order::HigherOrderChain;
use crate::jsr::root;
use crate::linalg::{induced_norm, Matrix, NormKind};
use crate::markov::{MarkovChain, PathSampler, NU_POSITIVE_TOL};
use crate::system::MatrixTuple;

/// Default cap on the number of `(ν, P)`-words per horizon.
pub const DEFAULT_EXPECTATION_CAP: u64 = 10_000_000;

/// The switching law driving the system.
#[derive(Debug, Clone, Copy)]
pub enum SwitchingLaw<'a> {
    Order1(&'a MarkovChain),
    OrderM(&'a HigherOrderChain),
}

impl<'a> From<&'a MarkovChain> for SwitchingLaw<'a> {
    fn from(c: &'a MarkovChain) -> Self {
        SwitchingLaw::Order1(c)
    }
}

impl<'a> From<&'a HigherOrderChain> for SwitchingLaw<'a> {
    fn from(c: &'a HigherOrderChain) -> Self {
        SwitchingLaw::OrderM(c)
    }
}

impl SwitchingLaw<'_> {
    fn n_states(&self) -> usize {
        match self {
            SwitchingLaw::Order1(c) => c.n_states(),
            SwitchingLaw::OrderM(c) => c.n_states(),
        }
    }

    /// Law of the first `min(n, m)` letters, ν-positive entries only.
    fn initial(&self, n: usize) -> Result<Vec<(Vec<usize>, f64)>> {
        match self {
            SwitchingLaw::Order1(c) => {
                let nu = c.require_nu()?;
                Ok(nu
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v > NU_POSITIVE_TOL)
                    .map(|(i, &v)| (vec![i], v))
                    .collect())
            }
            SwitchingLaw::OrderM(c) => {
                let len = n.min(c.order());
                let mut marg: std::collections::BTreeMap<Vec<usize>, f64> = Default::default();
                for (key, v) in c.nu_entries() {
                    *marg.entry(key[..len].to_vec()).or_default() += v;
                }
                Ok(marg.into_iter().filter(|e| e.1 > NU_POSITIVE_TOL).collect())
            }
        }
    }

    /// Positive transitions out of the last `m` letters of `word`.
    fn step(&self, word: &[usize], out: &mut Vec<(usize, f64)>) {
        out.clear();
        match self {
            SwitchingLaw::Order1(c) => {
                let i = *word.last().unwrap();
                out.extend(c.successors(i).map(|j| (j, c.p(i, j))));
            }
            SwitchingLaw::OrderM(c) => {
                if let Some(row) = c.row(&word[word.len() - c.order()..]) {
                    out.extend_from_slice(row);
                }
            }
        }
    }
}

/// `E_n` for a list of horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCurve {
    pub horizons: Vec<usize>,
    pub values: Vec<f64>,
    pub norm_kind: NormKind,
    /// Values are exact sums, hence valid upper bounds on `ρ_p`.
    pub exact: bool,
    /// The word cap stopped the curve before the last requested horizon.
    pub truncated: bool,
}

impl ExpectationCurve {
    /// Smallest `E_n` on the curve, if any.
    pub fn min(&self) -> Option<(usize, f64)> {
        self.horizons
            .iter()
            .zip(&self.values)
            .map(|(&n, &v)| (n, v))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Monte-Carlo estimate of `E_n`. Never a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    #[serde(rename = "n")]
    pub horizon: usize,
    pub samples: u64,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(samples)`.
    pub stderr: f64,
    pub seed: u64,
}

struct Dfs<'a> {
    tuple: &'a MatrixTuple,
    law: SwitchingLaw<'a>,
    n: usize,
    kind: NormKind,
    counter: &'a AtomicU64,
    cap: u64,
}

impl Dfs<'_> {
    /// Sum over completions of `word` (with probability `prob` and product
    /// `product`) of probability × ‖A(w)‖^{1/n}.
    fn run(&self, word: &mut Vec<usize>, prob: f64, product: &Matrix) -> Result<f64> {
        if word.len() == self.n {
            if self.counter.fetch_add(1, Ordering::Relaxed) >= self.cap {
                return Err(self.budget_error());
            }
            return Ok(prob * root(induced_norm(product, self.kind)?, self.n));
        }
        let mut succ = Vec::new();
        self.law.step(word, &mut succ);
        let mut total = 0.0;
        for (j, p) in succ {
            let next = self.tuple.get(j).matmul(product);
            word.push(j);
            total += self.run(word, prob * p, &next)?;
            word.pop();
        }
        Ok(total)
    }

    fn budget_error(&self) -> Error {
        Error::BudgetExceeded {
            what: "enumerating (ν, P)-words",
            limit: self.cap,
        }
    }
}

/// `E_n = Σ ν_{i_1} p_{i_1 i_2} ⋯ p_{i_{n−1} i_n} ‖A_{i_n} ⋯ A_{i_1}‖^{1/n}`
/// summed over `(ν, P)`-words only. For an order-`m` chain the first `m`
/// letters are drawn from `ν` and each later letter from the row of the
/// preceding window.
pub fn exact_expectation<'a>(
    tuple: &MatrixTuple,
    law: impl Into<SwitchingLaw<'a>>,
    n: usize,
    kind: NormKind,
) -> Result<f64> {
    exact_expectation_capped(tuple, law, n, kind, DEFAULT_EXPECTATION_CAP)
}

pub fn exact_expectation_capped<'a>(
    tuple: &MatrixTuple,
    law: impl Into<SwitchingLaw<'a>>,
    n: usize,
    kind: NormKind,
    cap: u64,
) -> Result<f64> {
    let law = law.into();
    if n == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if law.n_states() != tuple.len() {
        return Err(Error::DimensionMismatch {
            expected: tuple.len(),
            found: law.n_states(),
        });
    }
    let counter = AtomicU64::new(0);
    let dfs = Dfs {
        tuple,
        law,
        n,
        kind,
        counter: &counter,
        cap,
    };
    let starts = law.initial(n)?;
    let parts: Vec<f64> = starts
        .par_iter()
        .map(|(prefix, p)| {
            let product = tuple.product(prefix);
            dfs.run(&mut prefix.clone(), *p, &product)
        })
        .collect::<Result<_>>()?;
    if counter.load(Ordering::Relaxed) > cap {
        return Err(dfs.budget_error());
    }
    Ok(parts.iter().sum())
}

/// `min_{n ≤ max_horizon} E_n` with the full curve. When the word cap is
/// hit after at least one horizon, the partial curve is returned with
/// `truncated` set.
pub fn prob_jsr_upper<'a>(
    tuple: &MatrixTuple,
    law: impl Into<SwitchingLaw<'a>>,
    max_horizon: usize,
    kind: NormKind,
) -> Result<(f64, ExpectationCurve)> {
    prob_jsr_upper_capped(tuple, law, max_horizon, kind, DEFAULT_EXPECTATION_CAP)
}

pub fn prob_jsr_upper_capped<'a>(
    tuple: &MatrixTuple,
    law: impl Into<SwitchingLaw<'a>>,
    max_horizon: usize,
    kind: NormKind,
    cap: u64,
) -> Result<(f64, ExpectationCurve)> {
    let law = law.into();
    if max_horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let mut curve = ExpectationCurve {
        horizons: Vec::new(),
        values: Vec::new(),
        norm_kind: kind,
        exact: true,
        truncated: false,
    };
    for n in 1..=max_horizon {
        match exact_expectation_capped(tuple, law, n, kind, cap) {
            Ok(v) => {
                curve.horizons.push(n);
                curve.values.push(v);
            }
            Err(e @ Error::BudgetExceeded { .. }) => {
                if curve.values.is_empty() {
                    return Err(e);
                }
                curve.truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let upper = curve.min().map(|m| m.1).unwrap_or(f64::INFINITY);
    Ok((upper, curve))
}

enum Sampler<'a> {
    Order1(PathSampler),
    OrderM {
        chain: &'a HigherOrderChain,
        starts: Vec<(Vec<usize>, f64)>,
        cum: Vec<f64>,
    },
}

fn pick(cum: &[f64], rng: &mut impl Rng) -> usize {
    let u = rng.random::<f64>() * cum.last().unwrap();
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

impl<'a> Sampler<'a> {
    fn new(law: SwitchingLaw<'a>) -> Result<Self> {
        match law {
            SwitchingLaw::Order1(c) => Ok(Sampler::Order1(PathSampler::new(c)?)),
            SwitchingLaw::OrderM(chain) => {
                let starts = law.initial(chain.order())?;
                if starts.is_empty() {
                    return Err(Error::DegenerateDistribution("ν has no positive entry".into()));
                }
                let cum = starts
                    .iter()
                    .scan(0.0, |acc, e| {
                        *acc += e.1;
                        Some(*acc)
                    })
                    .collect();
                Ok(Sampler::OrderM { chain, starts, cum })
            }
        }
    }

    fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
        match self {
            Sampler::Order1(s) => Ok(s.sample(n, rng)),
            Sampler::OrderM { chain, starts, cum } => {
                let mut w = starts[pick(cum, rng)].0.clone();
                let m = chain.order();
                while w.len() < n {
                    let row = chain
                        .row(&w[w.len() - m..])
                        .ok_or_else(|| Error::DegenerateDistribution("walk left the support of ν".into()))?;
                    let cum: Vec<f64> = row
                        .iter()
                        .scan(0.0, |acc, e| {
                            *acc += e.1;
                            Some(*acc)
                        })
                        .collect();
                    w.push(row[pick(&cum, rng)].0);
                }
                w.truncate(n);
                Ok(w)
            }
        }
    }
}

/// Sample mean of `‖A(w)‖^{1/n}` over independent `(ν, P)`-paths.
///
/// Sample `i` uses its own ChaCha stream `i` of the seeded generator, so
/// the estimate does not depend on the thread count.
pub fn mc_estimate<'a>(
    tuple: &MatrixTuple,
    law: impl Into<SwitchingLaw<'a>>,
    n: usize,
    samples: u64,
    seed: u64,
    kind: NormKind,
) -> Result<McEstimate> {
    let law = law.into();
    if n == 0 || samples == 0 {
        return Err(Error::InvalidInput("horizon and sample count must be positive".into()));
    }
    if law.n_states() != tuple.len() {
        return Err(Error::DimensionMismatch {
            expected: tuple.len(),
            found: law.n_states(),
        });
    }
    let sampler = Sampler::new(law)?;
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let w = sampler.sample(n, &mut rng)?;
            Ok(root(induced_norm(&tuple.product(&w), kind)?, n))
        })
        .collect::<Result<_>>()?;
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let stderr = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        horizon: n,
        samples,
        mean,
        stderr,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::higher_order::{build_cycle_chain, lift_to_order_one, DEFAULT_LIFT_CAP};
    use crate::jsr::jsr_bounds_bruteforce;
    use crate::markov::invariant_probabilities;
    use crate::system::IndexWord;
    use proptest::prelude::*;

    fn rotation_tuple() -> MatrixTuple {
        MatrixTuple::new(vec![
            Matrix::identity(2),
            Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap(),
            Matrix::from_rows(&[vec![0.0, -0.5], vec![1.0, 0.0]]).unwrap(),
        ])
        .unwrap()
    }

    fn rotation_chain() -> MarkovChain {
        MarkovChain::new(
            vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
            Some(vec![0.5, 0.25, 0.25]),
        )
        .unwrap()
    }

    fn nilpotent_tuple() -> MatrixTuple {
        MatrixTuple::new(vec![
            Matrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0; 3]]).unwrap(),
            Matrix::from_rows(&[vec![0.0; 3], vec![0.0; 3], vec![1.0, 0.0, 0.0]]).unwrap(),
        ])
        .unwrap()
    }

    fn uniform_pair() -> MarkovChain {
        MarkovChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], Some(vec![0.5, 0.5])).unwrap()
    }

    /// Brute force over all `N^n` words, weights from the chain directly.
    fn brute_expectation(t: &MatrixTuple, c: &MarkovChain, n: usize, kind: NormKind) -> f64 {
        let big_n = t.len();
        let nu = c.nu().unwrap();
        let mut total = 0.0;
        for code in 0..big_n.pow(n as u32) {
            let w: Vec<usize> = (0..n).map(|k| (code / big_n.pow(k as u32)) % big_n).collect();
            let mut p = nu[w[0]];
            for k in 1..n {
                p *= c.p(w[k - 1], w[k]);
            }
            if p > 0.0 {
                total += p * induced_norm(&t.product(&w), kind).unwrap().powf(1.0 / n as f64);
            }
        }
        total
    }

    #[test]
    fn nilpotent_uniform_chain() {
        let t = nilpotent_tuple();
        let c = uniform_pair();
        let e4 = exact_expectation(&t, &c, 4, NormKind::One).unwrap();
        assert!((e4 - 3.0 / 16.0).abs() < 1e-15);
        assert!((brute_expectation(&t, &c, 4, NormKind::One) - e4).abs() < 1e-15);
        let (upper, curve) = prob_jsr_upper(&t, &c, 8, NormKind::One).unwrap();
        assert!((upper - 3.0 / 256.0).abs() < 1e-15);
        for w in curve.values[1..].windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn rotation_example_curve_is_one() {
        let (upper, curve) = prob_jsr_upper(&rotation_tuple(), &rotation_chain(), 8, NormKind::Two).unwrap();
        assert!((upper - 1.0).abs() < 1e-12);
        assert!(curve.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(curve.exact && !curve.truncated);
    }

    #[test]
    fn single_state_chain() {
        let c = MarkovChain::new(vec![vec![1.0]], Some(vec![1.0])).unwrap();
        let t = MatrixTuple::new(vec![Matrix::identity(2).scaled(0.3)]).unwrap();
        for n in 1..5 {
            assert!((exact_expectation(&t, &c, n, NormKind::Inf).unwrap() - 0.3).abs() < 1e-15);
        }
        let a = Matrix::from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap();
        let t = MatrixTuple::new(vec![a.clone()]).unwrap();
        let (_, curve) = prob_jsr_upper(&t, &c, 6, NormKind::Two).unwrap();
        for (n, v) in curve.horizons.iter().zip(&curve.values) {
            let want = induced_norm(&a.pow(*n as u32), NormKind::Two)
                .unwrap()
                .powf(1.0 / *n as f64);
            assert!((v - want).abs() < 1e-12);
        }
        let est = mc_estimate(&t, &c, 5, 10, 1, NormKind::Two).unwrap();
        assert!((est.mean - curve.values[4]).abs() < 1e-15);
        assert!(est.stderr < 1e-15);
    }

    #[test]
    fn mc_examples() {
        let est = mc_estimate(&rotation_tuple(), &rotation_chain(), 20, 1000, 7, NormKind::Two).unwrap();
        assert!((est.mean - 1.0).abs() < 1e-12);
        let est = mc_estimate(&nilpotent_tuple(), &uniform_pair(), 20, 1000, 7, NormKind::One).unwrap();
        assert!(est.mean <= 0.01);
        let again = mc_estimate(&nilpotent_tuple(), &uniform_pair(), 20, 1000, 7, NormKind::One).unwrap();
        assert_eq!(est, again);
    }

    #[test]
    fn mc_is_thread_count_independent() {
        let t = rotation_tuple();
        let c = MarkovChain::new(
            vec![vec![0.2, 0.5, 0.3], vec![0.3, 0.3, 0.4], vec![0.6, 0.1, 0.3]],
            None,
        )
        .unwrap();
        let nu = invariant_probabilities(&c).unwrap().extremes[0].clone();
        let c = c.with_nu(nu).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| mc_estimate(&t, &c, 6, 2000, 3, NormKind::Two).unwrap());
        let b = four.install(|| mc_estimate(&t, &c, 6, 2000, 3, NormKind::Two).unwrap());
        assert_eq!(a, b);
        let exact = exact_expectation(&t, &c, 6, NormKind::Two).unwrap();
        assert!((a.mean - exact).abs() <= 4.0 * a.stderr, "{a:?} vs {exact}");
    }

    #[test]
    fn expectation_cap() {
        let t = nilpotent_tuple();
        let c = uniform_pair();
        assert!(matches!(
            exact_expectation_capped(&t, &c, 5, NormKind::One, 31),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(exact_expectation_capped(&t, &c, 5, NormKind::One, 32).is_ok());
        let (upper, curve) = prob_jsr_upper_capped(&t, &c, 8, NormKind::One, 20).unwrap();
        assert!(curve.truncated);
        assert_eq!(curve.horizons, vec![1, 2, 3, 4]);
        assert!((upper - 3.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn cycle_chain_112_expectation() {
        let w = IndexWord::from_one_based(&[1, 1, 2], 2).unwrap();
        let hoc = build_cycle_chain(&w, 2).unwrap();
        let e3 = exact_expectation(&nilpotent_tuple(), &hoc, 3, NormKind::One).unwrap();
        assert!((e3 - 1.0).abs() < 1e-15);
    }

    fn arb_chain(n: usize) -> impl Strategy<Value = MarkovChain> {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), n).prop_filter_map(
            "degenerate rows",
            move |rows| {
                let mut rows = rows;
                for (i, r) in rows.iter_mut().enumerate() {
                    // sparsify a little so several recurrent classes appear
                    for (j, x) in r.iter_mut().enumerate() {
                        if *x < 0.3 && i != j {
                            *x = 0.0;
                        }
                    }
                    let s: f64 = r.iter().sum();
                    if s <= 0.0 {
                        return None;
                    }
                    r.iter_mut().for_each(|x| *x /= s);
                }
                MarkovChain::new(rows, None).ok()
            },
        )
    }

    fn arb_tuple(n: usize) -> impl Strategy<Value = MatrixTuple> {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), n)
            .prop_map(|ms| MatrixTuple::new(ms.into_iter().map(|v| Matrix::new(2, v).unwrap()).collect()).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn linear_in_nu(c in arb_chain(3), t in arb_tuple(3), weights in prop::collection::vec(0.05f64..1.0, 3), n in 1usize..=5) {
            let inv = invariant_probabilities(&c).unwrap();
            let r = inv.extremes.len();
            let w: f64 = weights[..r].iter().sum();
            let alphas: Vec<f64> = weights[..r].iter().map(|x| x / w).collect();
            let mut nu = vec![0.0; 3];
            for (a, e) in alphas.iter().zip(&inv.extremes) {
                for i in 0..3 { nu[i] += a * e[i]; }
            }
            let mix = c.clone().with_nu(nu).unwrap();
            let got = exact_expectation(&t, &mix, n, NormKind::Two).unwrap();
            let mut want = 0.0;
            for (a, e) in alphas.iter().zip(&inv.extremes) {
                let ext = c.clone().with_nu(e.clone()).unwrap();
                want += a * exact_expectation(&t, &ext, n, NormKind::Two).unwrap();
            }
            prop_assert!((got - want).abs() <= 1e-12);
        }

        #[test]
        fn dominated_by_worst_word(c in arb_chain(3), t in arb_tuple(3), n in 1usize..=5) {
            let nu = invariant_probabilities(&c).unwrap().extremes[0].clone();
            let c = c.with_nu(nu).unwrap();
            for kind in [NormKind::One, NormKind::Two, NormKind::Inf] {
                let e = exact_expectation(&t, &c, n, kind).unwrap();
                let b = jsr_bounds_bruteforce(&t, n, kind).unwrap();
                prop_assert!(e <= b.upper + 1e-12);
                prop_assert!((e - brute_expectation(&t, &c, n, kind)).abs() <= 1e-12);
            }
        }

        #[test]
        fn lift_preserves_expectations(rows in prop::array::uniform4(0.05f64..0.95), t in arb_tuple(2), n in 1usize..=6) {
            let hoc = crate::higher_order::tests::order_two_chain(&rows);
            let (lc, lt) = lift_to_order_one(&hoc, &t, DEFAULT_LIFT_CAP).unwrap();
            for kind in [NormKind::One, NormKind::Two] {
                let direct = exact_expectation(&t, &hoc, n, kind).unwrap();
                let lifted = exact_expectation(&lt, &lc, n, kind).unwrap();
                prop_assert!((direct - lifted).abs() <= 1e-12, "{} vs {}", direct, lifted);
            }
        }
    }
}
