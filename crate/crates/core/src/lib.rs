//! Deterministic and Markovian joint spectral radius analysis for
//! discrete-time switched linear systems `x_{k+1} = A_{σ(k)} x_k`.
//!
//! The deterministic radius `ρ_d` is the worst-case growth rate over all
//! switching signals. When the signal is drawn from a shift-invariant
//! Markov chain `(ν, P)` the growth rate in expectation is the
//! probabilistic radius `ρ_p(ν, P)`, always at most `ρ_d`. The crate
//! brackets both quantities and tests the cycle conditions under which
//! they coincide.

pub mod equality;
pub mod error;
pub mod higher_order;
pub mod jsr;
pub mod linalg;
pub mod markov;
pub mod prob;
pub mod report;
pub mod schema;
pub mod system;
pub mod words;

pub use equality::{check_cycle_condition, check_distinct_cycle, orthogonal_similarity, CycleStatus, EqualityVerdict};
pub use error::{Error, Result};
pub use higher_order::{finiteness_search, lift_to_order_one, HigherOrderChain};
pub use jsr::{jsr_bounds_bruteforce, jsr_gripenberg, JsrBracket};
pub use linalg::{induced_norm, spectral_radius, Matrix, NormKind};
pub use markov::{invariant_probabilities, scc_decompose, MarkovChain};
pub use prob::{exact_expectation, mc_estimate, prob_jsr_upper, ExpectationCurve, McEstimate, SwitchingLaw};
pub use report::{gap_report, AnalysisConfig, AnalysisReport};
pub use schema::{SpecError, System, SystemSpec};
pub use system::{word_product, IndexWord, MatrixTuple};
