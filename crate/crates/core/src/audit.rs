//! Runtime checks of the exact relationships between grid cells.
//!
//! With a shared sample set the estimators satisfy, up to round-off:
//!
//! - `EU(C1) = EU(C2) + EU(B1)`
//! - `EU(C3, all) = EU(C2) + EU(B3)`
//! - `EU(C3, offdiag) = N/(N-1) * (EU(C2) + EU(B3))`
//! - `TU(B1) = TU(C1)`, `TU(B2) = TU(C2)`, `TU(B3) = TU(C3, all)`
//! - `AU(B) >= AU(C)`
//! - `EU(B2) = 0`
//! - `TU = AU + EU` bitwise for every cell
//!
//! The first four follow from the total term being linear in its first
//! argument, which holds for the log, zero-one, Brier and spherical rules but
//! not for Renyi orders other than 1.

use std::fmt;

use crate::error::{Error, Result};
use crate::measures::{aleatoric, epistemic, total_uncertainty};
use crate::scoring::Rule;
use crate::types::{EnsembleItem, MeasureSpec, Pairs, Predictor, Truth};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The item lacks an input the identity needs (e.g. a reference).
    NotApplicable,
}

/// One audited relationship.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs|` (0 when both sides are the same infinity); for
    /// inequalities, the amount by which it is violated.
    pub deviation: f64,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub checks: Vec<IdentityCheck>,
    pub passed: bool,
}

impl AuditReport {
    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "ok",
                CheckStatus::Fail => "FAIL",
                CheckStatus::NotApplicable => "n/a",
            };
            writeln!(
                f,
                "{status:>4}  {}  lhs={:e} rhs={:e} dev={:e}",
                c.name, c.lhs, c.rhs, c.deviation
            )?;
        }
        Ok(())
    }
}

fn deviation(lhs: f64, rhs: f64) -> f64 {
    if lhs == rhs {
        0.0
    } else {
        (lhs - rhs).abs()
    }
}

fn within(lhs: f64, rhs: f64, tol: f64) -> bool {
    let dev = deviation(lhs, rhs);
    dev <= tol * 1f64.max(lhs.abs()).max(rhs.abs())
}

struct Auditor {
    tol: f64,
    checks: Vec<IdentityCheck>,
}

impl Auditor {
    fn equal(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) {
        let status = if within(lhs, rhs, self.tol) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self.push(name, lhs, rhs, status);
    }

    fn at_least(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) {
        let status = if lhs >= rhs || within(lhs, rhs, self.tol) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        // report the size of the violation, not the slack
        let violation = if lhs >= rhs { 0.0 } else { rhs - lhs };
        self.checks.push(IdentityCheck {
            name: name.into(),
            lhs,
            rhs,
            deviation: violation,
            status,
        });
    }

    fn bitwise(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) {
        let status = if lhs.to_bits() == rhs.to_bits() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self.push(name, lhs, rhs, status);
    }

    fn skip(&mut self, name: impl Into<String>) {
        self.push(name, f64::NAN, f64::NAN, CheckStatus::NotApplicable);
    }

    fn push(&mut self, name: impl Into<String>, lhs: f64, rhs: f64, status: CheckStatus) {
        self.checks.push(IdentityCheck {
            name: name.into(),
            lhs,
            rhs,
            deviation: deviation(lhs, rhs),
            status,
        });
    }
}

/// Audits `item` under the log rule with relative tolerance `tol`.
pub fn audit_identities(item: &EnsembleItem, tol: f64) -> Result<AuditReport> {
    audit_identities_with_rule(item, Rule::Log, tol)
}

/// Audits `item` under an arbitrary rule. The linearity identities are only
/// expected to hold for rules whose total term is linear in its first
/// argument, so a Renyi audit normally fails.
pub fn audit_identities_with_rule(
    item: &EnsembleItem,
    rule: Rule,
    tol: f64,
) -> Result<AuditReport> {
    let n = item.n();
    if n < 2 {
        return Err(Error::NeedTwoSamples(n));
    }
    let has_ref = item.reference.is_some();
    let has_single = item.single.is_some();
    let spec = |p, t| MeasureSpec::epistemic(p, t).with_rule(rule);
    let eu = |p, t| epistemic(&spec(p, t), item);
    let tu = |p, t| total_uncertainty(&spec(p, t), item);

    let mut a = Auditor {
        tol,
        checks: Vec::new(),
    };
    use Predictor::{Average as B, Sampled as C, Single as A};
    use Truth::{Ensemble as T3, Predictive as T2, Reference as T1};

    if has_ref {
        a.equal(
            "EU(C1) = EU(C2) + EU(B1)",
            eu(C, T1)?,
            eu(C, T2)? + eu(B, T1)?,
        );
    } else {
        a.skip("EU(C1) = EU(C2) + EU(B1)");
    }

    let c2_plus_b3 = eu(C, T2)? + eu(B, T3)?;
    a.equal("EU(C3,all) = EU(C2) + EU(B3)", eu(C, T3)?, c2_plus_b3);
    let offdiag = epistemic(&spec(C, T3).with_pairs(Pairs::OffDiagonal), item)?;
    let nf = n as f64;
    a.equal(
        "EU(C3,offdiag) = N/(N-1) (EU(C2) + EU(B3))",
        offdiag,
        nf / (nf - 1.0) * c2_plus_b3,
    );

    if has_ref {
        a.equal("TU(B1) = TU(C1)", tu(B, T1)?, tu(C, T1)?);
    } else {
        a.skip("TU(B1) = TU(C1)");
    }
    a.equal("TU(B2) = TU(C2)", tu(B, T2)?, tu(C, T2)?);
    a.equal("TU(B3) = TU(C3,all)", tu(B, T3)?, tu(C, T3)?);

    a.at_least(
        "AU(B) >= AU(C)",
        aleatoric(B, item, rule)?,
        aleatoric(C, item, rule)?,
    );
    a.bitwise("EU(B2) = 0", eu(B, T2)?, 0.0);

    for p in [A, B, C] {
        if p == A && !has_single {
            continue;
        }
        for t in [T1, T2, T3] {
            if t == T1 && !has_ref {
                continue;
            }
            for pairs in [Pairs::All, Pairs::OffDiagonal] {
                let s = spec(p, t).with_pairs(pairs);
                if pairs == Pairs::OffDiagonal && !s.uses_pairs() {
                    continue;
                }
                let total = total_uncertainty(&s, item)?;
                let sum = aleatoric(p, item, rule)? + epistemic(&s, item)?;
                a.bitwise(
                    format!("{} = AU + EU", s.as_quantity(crate::types::Quantity::Total)),
                    total,
                    sum,
                );
            }
        }
    }

    let passed = a.checks.iter().all(|c| c.status != CheckStatus::Fail);
    Ok(AuditReport {
        checks: a.checks,
        passed,
    })
}
