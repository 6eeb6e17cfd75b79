//! JSON input documents describing a switched system and its switching law.
//!
//! Matrices are row-major nested arrays. Letters and tensor indices are
//! 1-based, as in reports.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::higher_order::HigherOrderChain;
use crate::linalg::Matrix;
use crate::markov::{invariant_probabilities, MarkovChain};
use crate::system::MatrixTuple;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub indices: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HigherOrderSpec {
    pub m: usize,
    pub p_entries: Vec<TensorEntry>,
    pub nu_entries: Vec<TensorEntry>,
}

/// Input document: a matrix tuple with an optional order-1 chain and an
/// optional higher-order chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dim: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub higher_order: Option<HigherOrderSpec>,
}

/// Why an input document was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecError {
    /// Malformed JSON or wrong field types.
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    /// Well-formed JSON with invalid content at `path`.
    Invalid { path: String, message: String },
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::Syntax { line, column, message } => write!(f, "line {line}, column {column}: {message}"),
            SpecError::Invalid { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

impl std::error::Error for SpecError {}

fn invalid(path: impl Into<String>, message: impl fmt::Display) -> SpecError {
    SpecError::Invalid {
        path: path.into(),
        message: message.to_string(),
    }
}

/// A validated system.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub tuple: MatrixTuple,
    /// When `nu` is omitted and the chain has a single recurrent class, its
    /// unique invariant probability is filled in.
    pub chain: Option<MarkovChain>,
    pub higher_order: Option<HigherOrderChain>,
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<SystemSpec, SpecError> {
        serde_json::from_str(text).map_err(|e| SpecError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs always serialize")
    }

    pub fn validate(&self) -> Result<System, SpecError> {
        if self.matrices.is_empty() {
            return Err(invalid("matrices", "at least one matrix is required"));
        }
        let d = self.dim;
        let mut mats = Vec::with_capacity(self.matrices.len());
        for (i, rows) in self.matrices.iter().enumerate() {
            let path = format!("matrices[{i}]");
            if rows.len() != d {
                return Err(invalid(&path, format!("has {} rows, expected {d}", rows.len())));
            }
            for (r, row) in rows.iter().enumerate() {
                if row.len() != d {
                    return Err(invalid(
                        format!("{path}[{r}]"),
                        format!("has {} entries, expected {d}", row.len()),
                    ));
                }
            }
            mats.push(Matrix::from_rows(rows).map_err(|e| invalid(&path, e))?);
        }
        let tuple = MatrixTuple::new(mats).map_err(|e| invalid("matrices", e))?;
        let n = tuple.len();

        let chain = match &self.chain {
            None => None,
            Some(c) => Some(validate_chain(c, n)?),
        };
        let higher_order = match &self.higher_order {
            None => None,
            Some(h) => Some(validate_higher_order(h, n)?),
        };
        Ok(System {
            tuple,
            chain,
            higher_order,
        })
    }
}

fn validate_chain(c: &ChainSpec, n: usize) -> Result<MarkovChain, SpecError> {
    if c.p.len() != n {
        return Err(invalid(
            "chain.P",
            format!("has {} rows, expected one per matrix ({n})", c.p.len()),
        ));
    }
    for (i, row) in c.p.iter().enumerate() {
        if row.len() != n {
            return Err(invalid(
                format!("chain.P[{i}]"),
                format!("has {} entries, expected {n}", row.len()),
            ));
        }
    }
    let chain = MarkovChain::new(c.p.clone(), None).map_err(|e| invalid("chain.P", e))?;
    match &c.nu {
        Some(nu) => chain.with_nu(nu.clone()).map_err(|e| invalid("chain.nu", e)),
        None => {
            let inv = invariant_probabilities(&chain).map_err(|e| invalid("chain.P", e))?;
            if inv.extremes.len() == 1 {
                let nu = inv.extremes[0].clone();
                chain.with_nu(nu).map_err(|e| invalid("chain.P", e))
            } else {
                Ok(chain)
            }
        }
    }
}

fn tensor_entries(
    entries: &[TensorEntry],
    path: &str,
    len: usize,
    n: usize,
) -> Result<Vec<(Vec<usize>, f64)>, SpecError> {
    entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let p = format!("{path}[{k}].indices");
            if e.indices.len() != len {
                return Err(invalid(p, format!("has {} indices, expected {len}", e.indices.len())));
            }
            if let Some(&bad) = e.indices.iter().find(|&&i| i == 0 || i > n) {
                return Err(invalid(p, format!("index {bad} outside 1..={n}")));
            }
            Ok((e.indices.iter().map(|i| i - 1).collect(), e.value))
        })
        .collect()
}

fn validate_higher_order(h: &HigherOrderSpec, n: usize) -> Result<HigherOrderChain, SpecError> {
    if h.m == 0 {
        return Err(invalid("higher_order.m", "order must be at least 1"));
    }
    let p = tensor_entries(&h.p_entries, "higher_order.p_entries", h.m + 1, n)?;
    let nu = tensor_entries(&h.nu_entries, "higher_order.nu_entries", h.m, n)?;
    HigherOrderChain::new(h.m, n, p, nu).map_err(|e| invalid("higher_order", e))
}

impl From<SpecError> for Error {
    fn from(e: SpecError) -> Self {
        Error::InvalidInput(e.to_string())
    }
}

impl SystemSpec {
    /// Spec for a tuple with an optional order-1 chain.
    pub fn from_parts(tuple: &MatrixTuple, chain: Option<&MarkovChain>) -> SystemSpec {
        SystemSpec {
            dim: tuple.dim(),
            matrices: tuple.iter().map(Matrix::rows).collect(),
            chain: chain.map(|c| ChainSpec {
                p: c.rows(),
                nu: c.nu().map(<[f64]>::to_vec),
            }),
            higher_order: None,
        }
    }
}

/// Two rotations and a non-orthogonalizable matrix driven by a
/// three-state chain whose every admissible word has norm one.
pub fn example1() -> SystemSpec {
    SystemSpec {
        dim: 2,
        matrices: vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![-1.0, 0.0]],
            vec![vec![0.0, -0.5], vec![1.0, 0.0]],
        ],
        chain: Some(ChainSpec {
            p: vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
            nu: Some(vec![0.5, 0.25, 0.25]),
        }),
        higher_order: None,
    }
}

/// Two nilpotent 3×3 matrices whose only nonzero long products follow the
/// period-3 pattern (1, 1, 2), under the uniform i.i.d. chain.
pub fn example2() -> SystemSpec {
    SystemSpec {
        dim: 3,
        matrices: vec![
            vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0]],
            vec![vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
        ],
        chain: Some(ChainSpec {
            p: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            nu: Some(vec![0.5, 0.5]),
        }),
        higher_order: None,
    }
}
