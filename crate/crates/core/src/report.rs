//! Analysis reports: the JSON documents emitted by the command-line tool.
//!
//! Each section is computed independently; a failing section is recorded in
//! `errors` and the rest of the report is still produced.

use serde::{Deserialize, Serialize};

use crate::equality::{
    check_cycle_condition_with, check_distinct_cycle_with, orthogonal_similarity, DistinctCycleWitness,
    EqualityVerdict, OrthogonalCertificate, DEFAULT_CYCLE_BUDGET,
};
use crate::error::{Error, Result};
use crate::higher_order::{finiteness_search_in, lift_to_order_one, tuple_at, DEFAULT_LIFT_CAP};
use crate::jsr::{jsr_bounds_bruteforce, jsr_gripenberg, JsrBracket};
use crate::linalg::{NormKind, DEFAULT_TOL};
use crate::markov::{MarkovChain, DEFAULT_MAX_WALK_LEN};
use crate::prob::{mc_estimate, prob_jsr_upper, ExpectationCurve, McEstimate, SwitchingLaw};
use crate::schema::{System, SystemSpec};
use crate::system::{IndexWord, MatrixTuple};

pub const REPORT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Brute-force horizon for `ρ_d` and longest horizon of the expectation
    /// curve.
    pub horizon: usize,
    pub norm: NormKind,
    pub tol: f64,
    /// Node budget of the branch-and-bound search.
    pub budget: u64,
    pub mc_samples: u64,
    pub seed: u64,
    pub max_cycle_len: usize,
    pub max_word_len: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            horizon: 8,
            norm: NormKind::Two,
            tol: DEFAULT_TOL,
            budget: crate::jsr::DEFAULT_BUDGET,
            mc_samples: 1000,
            seed: 0,
            max_cycle_len: DEFAULT_MAX_WALK_LEN,
            max_word_len: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoDSection {
    pub lower: f64,
    pub upper: f64,
    pub witness: IndexWord,
    pub horizon: usize,
    pub width: f64,
    pub bruteforce: Option<JsrBracket>,
    pub gripenberg: Option<JsrBracket>,
}

impl RhoDSection {
    /// The combined bracket handed to downstream checks.
    pub fn bracket(&self, norm_kind: NormKind) -> JsrBracket {
        let exhausted = self.gripenberg.as_ref().is_some_and(|g| g.budget_exhausted);
        JsrBracket {
            lower: self.lower,
            upper: self.upper,
            lower_witness: self.witness.clone(),
            upper_horizon: self.horizon,
            norm_kind,
            nodes: [&self.bruteforce, &self.gripenberg]
                .iter()
                .filter_map(|b| b.as_ref().map(|b| b.nodes))
                .sum(),
            budget_exhausted: exhausted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoPSection {
    pub curve: ExpectationCurve,
    /// Minimum of the curve, an upper bound on `ρ_p` when the curve is exact.
    pub upper: f64,
    pub upper_horizon: usize,
    pub mc: Option<McEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclesSection {
    pub count: u64,
    pub max_len: usize,
    /// Set when the chain is higher-order: cycles then run over the lifted
    /// states, listed in `lifted_states`.
    pub lifted_states: Option<Vec<Vec<usize>>>,
    pub verdict: EqualityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctCycleSection {
    pub witness: Option<DistinctCycleWitness>,
    pub necklaces_checked: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalitySection {
    pub scale: f64,
    pub certificate: Option<OrthogonalCertificate>,
    pub residuals: Vec<Option<f64>>,
    /// Every generator is singular, so no constraint applied and the
    /// certificate says nothing.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessStatus {
    Certified,
    Candidate,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitenessSection {
    pub max_word_len: usize,
    pub status: WitnessStatus,
    pub witness: Option<IndexWord>,
    pub order: Option<usize>,
    pub rho_root: Option<f64>,
    pub bracket: JsrBracket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftSection {
    pub order: usize,
    /// Lifted states in index order, each a 1-based window of letters.
    pub states: Vec<Vec<usize>>,
    /// The lifted order-1 system, itself a valid input document.
    pub system: SystemSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioStatus {
    Defined,
    /// `ρ_d` is within tolerance of zero.
    Trivial,
}

/// Interval for `ρ_p / ρ_d`, clamped to `[0, 1]`. The low end is the Monte
/// Carlo mean over the upper `ρ_d` bound, an estimate rather than a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSection {
    pub status: RatioStatus,
    pub low: Option<f64>,
    pub high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionError {
    pub section: String,
    pub message: String,
    pub budget: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub version: String,
    pub command: String,
    pub input: Option<String>,
    pub config: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_d: Option<RhoDSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_p: Option<RhoPSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<CyclesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinct_cycle: Option<DistinctCycleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orthogonality: Option<OrthogonalitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finiteness: Option<FinitenessSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<RatioSection>,
    /// A search stopped on a budget; affected sections are partial.
    pub budget_exhausted: bool,
    pub errors: Vec<SectionError>,
}

impl AnalysisReport {
    pub fn new(command: &str, config: &AnalysisConfig) -> Self {
        Self {
            version: REPORT_VERSION.to_string(),
            command: command.to_string(),
            input: None,
            config: config.clone(),
            rho_d: None,
            rho_p: None,
            cycles: None,
            distinct_cycle: None,
            orthogonality: None,
            finiteness: None,
            lift: None,
            ratio: None,
            budget_exhausted: false,
            errors: Vec::new(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Stores a section result, recording its error instead on failure.
    pub fn record<T>(&mut self, section: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                let budget = matches!(e, Error::BudgetExceeded { .. } | Error::StateExplosion { .. });
                self.budget_exhausted |= budget;
                self.errors.push(SectionError {
                    section: section.to_string(),
                    message: e.to_string(),
                    budget,
                });
                None
            }
        }
    }
}

/// Brute force at `cfg.horizon` and branch and bound, merged.
pub fn rho_d_section(tuple: &MatrixTuple, cfg: &AnalysisConfig) -> (RhoDSection, Vec<(String, Error)>) {
    let mut errs = Vec::new();
    let bf = jsr_bounds_bruteforce(tuple, cfg.horizon, cfg.norm)
        .map_err(|e| errs.push(("rho_d.bruteforce".to_string(), e)))
        .ok();
    let gr = jsr_gripenberg(tuple, cfg.norm, cfg.tol, cfg.budget)
        .map_err(|e| errs.push(("rho_d.gripenberg".to_string(), e)))
        .ok();
    let parts: Vec<&JsrBracket> = bf.iter().chain(gr.iter()).collect();
    let best_lower = parts
        .iter()
        .copied()
        .reduce(|a, b| if b.lower > a.lower { b } else { a });
    let (lower, witness) = match best_lower {
        Some(b) => (b.lower, b.lower_witness.clone()),
        None => (0.0, IndexWord::from_vec_unchecked(vec![0])),
    };
    let upper = parts.iter().map(|b| b.upper).fold(f64::INFINITY, f64::min);
    let upper = if upper.is_finite() { upper.max(lower) } else { lower };
    let section = RhoDSection {
        lower,
        upper,
        witness,
        horizon: cfg.horizon,
        width: upper - lower,
        bruteforce: bf,
        gripenberg: gr,
    };
    (section, errs)
}

pub fn rho_p_section<'a>(
    tuple: &MatrixTuple,
    law: impl Into<SwitchingLaw<'a>> + Copy,
    cfg: &AnalysisConfig,
) -> Result<RhoPSection> {
    let (upper, curve) = prob_jsr_upper(tuple, law, cfg.horizon, cfg.norm)?;
    let (upper_horizon, _) = curve.min().expect("curves hold at least one horizon");
    let mc = if cfg.mc_samples > 0 {
        Some(mc_estimate(
            tuple,
            law,
            cfg.horizon,
            cfg.mc_samples,
            cfg.seed,
            cfg.norm,
        )?)
    } else {
        None
    };
    Ok(RhoPSection {
        curve,
        upper,
        upper_horizon,
        mc,
    })
}

/// The cycle condition; a higher-order chain is lifted first.
pub fn cycles_section(
    tuple: &MatrixTuple,
    law: SwitchingLaw<'_>,
    bracket: &JsrBracket,
    cfg: &AnalysisConfig,
) -> Result<CyclesSection> {
    let (verdict, lifted_states) = match law {
        SwitchingLaw::Order1(chain) => (
            check_cycle_condition_with(tuple, chain, cfg.max_cycle_len, cfg.tol, bracket, DEFAULT_CYCLE_BUDGET)?,
            None,
        ),
        SwitchingLaw::OrderM(hoc) => {
            let (chain, lifted) = lift_to_order_one(hoc, tuple, DEFAULT_LIFT_CAP)?;
            let v = check_cycle_condition_with(
                &lifted,
                &chain,
                cfg.max_cycle_len,
                cfg.tol,
                bracket,
                DEFAULT_CYCLE_BUDGET,
            )?;
            (v, Some(lifted_state_labels(hoc.order(), hoc.n_states())))
        }
    };
    Ok(CyclesSection {
        count: verdict.cycles_checked,
        max_len: cfg.max_cycle_len,
        lifted_states,
        verdict,
    })
}

fn lifted_state_labels(order: usize, n: usize) -> Vec<Vec<usize>> {
    let total = n.pow(order as u32);
    (0..total)
        .map(|s| tuple_at(s, n, order).into_iter().map(|l| l + 1).collect())
        .collect()
}

pub fn distinct_cycle_section(
    tuple: &MatrixTuple,
    bracket: &JsrBracket,
    cfg: &AnalysisConfig,
) -> Result<DistinctCycleSection> {
    let r = check_distinct_cycle_with(tuple, cfg.tol, bracket, DEFAULT_CYCLE_BUDGET)?;
    Ok(DistinctCycleSection {
        witness: r.witness,
        necklaces_checked: r.necklaces_checked,
    })
}

/// Attempts a certificate at the lower `ρ_d` bound. `None` when that bound
/// is within tolerance of zero.
pub fn orthogonality_section(
    tuple: &MatrixTuple,
    bracket: &JsrBracket,
    cfg: &AnalysisConfig,
) -> Result<Option<OrthogonalitySection>> {
    if bracket.lower <= cfg.tol {
        return Ok(None);
    }
    let scale = bracket.lower;
    let certificate = orthogonal_similarity(tuple, scale)?;
    let residuals = certificate.as_ref().map(|c| c.residuals.clone()).unwrap_or_default();
    let vacuous = certificate.is_some() && residuals.iter().all(Option::is_none);
    Ok(Some(OrthogonalitySection {
        scale,
        certificate,
        residuals,
        vacuous,
    }))
}

pub fn finiteness_section(tuple: &MatrixTuple, bracket: JsrBracket, cfg: &AnalysisConfig) -> Result<FinitenessSection> {
    let found = finiteness_search_in(tuple, cfg.max_word_len, cfg.tol, bracket.clone())?;
    Ok(match found {
        Some(w) => FinitenessSection {
            max_word_len: cfg.max_word_len,
            status: if w.certified {
                WitnessStatus::Certified
            } else {
                WitnessStatus::Candidate
            },
            witness: Some(w.word),
            order: Some(w.order),
            rho_root: Some(w.rho_root),
            bracket: w.bracket,
        },
        None => FinitenessSection {
            max_word_len: cfg.max_word_len,
            status: WitnessStatus::None,
            witness: None,
            order: None,
            rho_root: None,
            bracket,
        },
    })
}

pub fn lift_section(system: &System) -> Result<LiftSection> {
    let hoc = system
        .higher_order
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("input has no higher_order chain to lift".into()))?;
    let (chain, lifted) = lift_to_order_one(hoc, &system.tuple, DEFAULT_LIFT_CAP)?;
    Ok(LiftSection {
        order: hoc.order(),
        states: lifted_state_labels(hoc.order(), hoc.n_states()),
        system: SystemSpec::from_parts(&lifted, Some(&chain)),
    })
}

pub fn ratio_section(rho_d: &RhoDSection, rho_p: Option<&RhoPSection>, tol: f64) -> RatioSection {
    if rho_d.upper <= tol {
        return RatioSection {
            status: RatioStatus::Trivial,
            low: None,
            high: None,
        };
    }
    let high = match rho_p {
        Some(p) if rho_d.lower > 0.0 => (p.upper / rho_d.lower).clamp(0.0, 1.0),
        _ => 1.0,
    };
    let low = rho_p
        .and_then(|p| p.mc.as_ref())
        .map_or(0.0, |mc| (mc.mean / rho_d.upper).clamp(0.0, 1.0))
        .min(high);
    RatioSection {
        status: RatioStatus::Defined,
        low: Some(low),
        high: Some(high),
    }
}

impl System {
    /// The law used by probabilistic sections: the higher-order chain when
    /// present, else the order-1 chain if it carries `ν`.
    pub fn law(&self) -> Option<SwitchingLaw<'_>> {
        if let Some(h) = &self.higher_order {
            return Some(SwitchingLaw::OrderM(h));
        }
        self.chain
            .as_ref()
            .filter(|c| c.nu().is_some())
            .map(SwitchingLaw::Order1)
    }
}

/// Fills `rho_d` and returns the combined bracket.
pub fn add_rho_d(report: &mut AnalysisReport, tuple: &MatrixTuple) -> JsrBracket {
    let (section, errs) = rho_d_section(tuple, &report.config);
    for (name, e) in errs {
        report.record::<()>(&name, Err(e));
    }
    let bracket = section.bracket(report.config.norm);
    report.budget_exhausted |= bracket.budget_exhausted;
    report.rho_d = Some(section);
    bracket
}

/// Everything bearing on `ρ_p = ρ_d`: both brackets, the expectation curve
/// with its Monte Carlo estimate, the cycle conditions, the orthogonality
/// attempt and the ratio interval. Sections that need a chain are skipped
/// when there is none.
pub fn gap_report(system: &System, config: &AnalysisConfig) -> AnalysisReport {
    let mut report = AnalysisReport::new("equality", config);
    let tuple = &system.tuple;
    let bracket = add_rho_d(&mut report, tuple);
    if let Some(law) = system.law() {
        let r = rho_p_section(tuple, law, config);
        if let Some(p) = report.record("rho_p", r) {
            report.budget_exhausted |= p.curve.truncated;
            report.rho_p = Some(p);
        }
        let r = cycles_section(tuple, law, &bracket, config);
        report.cycles = report.record("cycles", r);
    }
    let r = distinct_cycle_section(tuple, &bracket, config);
    report.distinct_cycle = report.record("distinct_cycle", r);
    let r = orthogonality_section(tuple, &bracket, config);
    report.orthogonality = report.record("orthogonality", r).flatten();
    let ratio = ratio_section(
        report.rho_d.as_ref().expect("set above"),
        report.rho_p.as_ref(),
        config.tol,
    );
    report.ratio = Some(ratio);
    report
}

/// Convenience wrapper over [`gap_report`] for a tuple and an order-1 chain.
pub fn gap_report_for(tuple: &MatrixTuple, chain: Option<&MarkovChain>, config: &AnalysisConfig) -> AnalysisReport {
    let system = System {
        tuple: tuple.clone(),
        chain: chain.cloned(),
        higher_order: None,
    };
    gap_report(&system, config)
}
