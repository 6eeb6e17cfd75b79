use std::fmt::Write;

use jsrlab_core::equality::CycleStatus;
use jsrlab_core::report::{RatioStatus, WitnessStatus};
use jsrlab_core::AnalysisReport;

/// A few human-readable lines per section.
pub fn render(r: &AnalysisReport) -> String {
    let mut s = String::new();
    if let Some(d) = &r.rho_d {
        let _ = writeln!(
            s,
            "rho_d in [{:.12}, {:.12}] (width {:.3e}), witness {}",
            d.lower, d.upper, d.width, d.witness
        );
    }
    if let Some(p) = &r.rho_p {
        let _ = writeln!(
            s,
            "rho_p <= {:.12} (curve minimum at n = {}){}",
            p.upper,
            p.upper_horizon,
            if p.curve.truncated { ", curve truncated" } else { "" }
        );
        if let Some(mc) = &p.mc {
            let _ = writeln!(
                s,
                "E_{} ~ {:.6} +/- {:.2e} ({} samples, seed {})",
                mc.horizon, mc.mean, mc.stderr, mc.samples, mc.seed
            );
        }
    }
    if let Some(c) = &r.cycles {
        let verdict = match &c.verdict.status {
            CycleStatus::ConsistentUpTo { max_len } => format!("consistent up to length {max_len}"),
            CycleStatus::Violated { cycle, rho_root, .. } => {
                format!("violated by cycle {} with rho^(1/k) = {rho_root:.12}", cycle.indices)
            }
            CycleStatus::Trivial => "trivial (rho_d = 0)".to_string(),
        };
        let _ = writeln!(s, "cycle condition: {verdict}; {} cycles checked", c.count);
    }
    if let Some(d) = &r.distinct_cycle {
        match &d.witness {
            Some(w) => {
                let _ = writeln!(s, "distinct-letter cycle {} attains rho_d", w.word);
            }
            None => {
                let _ = writeln!(s, "no distinct-letter cycle attains rho_d");
            }
        }
    }
    if let Some(o) = &r.orthogonality {
        let _ = match &o.certificate {
            Some(_) if o.vacuous => writeln!(s, "every generator is singular: orthogonality test is vacuous"),
            Some(c) => writeln!(
                s,
                "orthogonal after similarity at scale {:.12}, residual {:.2e}",
                o.scale,
                c.max_residual()
            ),
            None => writeln!(s, "no orthogonalizing similarity at scale {:.12}", o.scale),
        };
    }
    if let Some(f) = &r.finiteness {
        let _ = match (&f.status, &f.witness) {
            (WitnessStatus::None, _) | (_, None) => {
                writeln!(s, "no word of length <= {} attains rho_d", f.max_word_len)
            }
            (status, Some(w)) => writeln!(
                s,
                "finiteness witness {} (order {}), {}",
                w,
                f.order.unwrap_or(w.len()),
                if *status == WitnessStatus::Certified {
                    "certified"
                } else {
                    "candidate"
                }
            ),
        };
    }
    if let Some(l) = &r.lift {
        let _ = writeln!(s, "lifted order-{} chain to {} states", l.order, l.states.len());
    }
    if let Some(q) = &r.ratio {
        let _ = match (&q.status, q.low, q.high) {
            (RatioStatus::Defined, Some(lo), Some(hi)) => writeln!(s, "rho_p / rho_d in [{lo:.6}, {hi:.6}]"),
            _ => writeln!(s, "rho_p / rho_d undefined (rho_d = 0)"),
        };
    }
    if r.budget_exhausted {
        let _ = writeln!(s, "budget exhausted: results are partial");
    }
    for e in &r.errors {
        let _ = writeln!(s, "error in {}: {}", e.section, e.message);
    }
    s
}
