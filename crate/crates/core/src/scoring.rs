//! Entropy-like, divergence-like and total terms for each scoring rule.
//!
//! All logarithms are natural, so log-rule values are in nats. For every rule
//! `total(p, q) = entropy(p) + divergence(p, q)` holds bitwise because
//! [`total`] is computed as exactly that sum.
//!
//! | rule | entropy | divergence |
//! |---|---|---|
//! | log | `-sum p ln p` | `sum p ln(p/q)` |
//! | zero-one | `1 - max p` | `max p - p[argmax q]` |
//! | Brier | `1 - ||p||^2` | `||p - q||^2` |
//! | spherical | `1 - ||p||` | `||p|| - <p,q>/||q||` |
//! | Renyi-a | `ln(sum p^a)/(1-a)` | `ln(sum p^a q^(1-a))/(a-1)` |
//!
//! A divergence may be `+inf` (support mismatch); that is a value, not an
//! error.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::types::ProbVec;

/// A scoring rule together with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    Log,
    ZeroOne,
    Brier,
    Spherical,
    /// Renyi family of order `alpha` in `[0, inf]`. Order 1 is evaluated
    /// through the Shannon/KL code path.
    Renyi(f64),
}

impl Rule {
    pub fn renyi(alpha: f64) -> Result<Rule> {
        if alpha.is_nan() || alpha < 0.0 {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(Rule::Renyi(alpha))
    }

    /// Collapses `Renyi(1)` onto `Log`.
    fn canonical(self) -> Rule {
        match self {
            Rule::Renyi(1.0) => Rule::Log,
            r => r,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Log => f.write_str("log"),
            Rule::ZeroOne => f.write_str("zero-one"),
            Rule::Brier => f.write_str("brier"),
            Rule::Spherical => f.write_str("spherical"),
            Rule::Renyi(a) if a.is_infinite() => f.write_str("renyi(inf)"),
            Rule::Renyi(a) => write!(f, "renyi({a})"),
        }
    }
}

impl FromStr for Rule {
    type Err = Error;

    /// Accepts `log`, `zero-one`, `brier`, `spherical` and `renyi:<alpha>`.
    fn from_str(s: &str) -> Result<Rule> {
        match s {
            "log" => Ok(Rule::Log),
            "zero-one" | "zero_one" => Ok(Rule::ZeroOne),
            "brier" => Ok(Rule::Brier),
            "spherical" => Ok(Rule::Spherical),
            _ => match s.strip_prefix("renyi:") {
                Some(a) => Rule::renyi(parse_alpha(a)?),
                None => Err(Error::InvalidArgument(format!("unknown rule {s:?}"))),
            },
        }
    }
}

/// Parses a Renyi order; `inf` selects the min-entropy limit.
pub fn parse_alpha(s: &str) -> Result<f64> {
    let alpha = match s.trim() {
        "inf" | "infinity" | "+inf" => f64::INFINITY,
        t => t
            .parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("bad alpha {s:?}")))?,
    };
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(alpha)
}

/// Sums after sorting so that the result does not depend on class order.
fn ordered_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

fn sum_of_squares(p: &[f64]) -> f64 {
    ordered_sum(p.iter().map(|x| x * x).collect())
}

fn dot(p: &[f64], q: &[f64]) -> f64 {
    ordered_sum(p.iter().zip(q).map(|(a, b)| a * b).collect())
}

fn check_dims(p: &ProbVec, q: &ProbVec) -> Result<()> {
    if p.k() != q.k() {
        return Err(Error::DimMismatch {
            expected: p.k(),
            found: q.k(),
        });
    }
    Ok(())
}

/// Entropy-like (aleatoric) term of `p` under `rule`. Always `>= 0`.
pub fn entropy(rule: Rule, p: &ProbVec) -> f64 {
    let p = p.as_slice();
    let h = match rule.canonical() {
        Rule::Log => shannon(p),
        Rule::ZeroOne => 1.0 - max(p),
        Rule::Brier => 1.0 - sum_of_squares(p),
        Rule::Spherical => 1.0 - sum_of_squares(p).sqrt(),
        Rule::Renyi(alpha) => renyi_entropy(alpha, p),
    };
    h.max(0.0)
}

fn shannon(p: &[f64]) -> f64 {
    ordered_sum(
        p.iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| -x * x.ln())
            .collect(),
    )
}

fn max(p: &[f64]) -> f64 {
    p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn renyi_entropy(alpha: f64, p: &[f64]) -> f64 {
    if alpha == 0.0 {
        // Hartley entropy: log of the number of outcomes
        (p.len() as f64).ln()
    } else if alpha == 0.5 {
        2.0 * ordered_sum(p.iter().map(|x| x.sqrt()).collect()).ln()
    } else if alpha == 2.0 {
        -sum_of_squares(p).ln()
    } else if alpha.is_infinite() {
        -max(p).ln()
    } else {
        let s = ordered_sum(
            p.iter()
                .filter(|&&x| x > 0.0)
                .map(|&x| x.powf(alpha))
                .collect(),
        );
        s.ln() / (1.0 - alpha)
    }
}

/// Divergence-like (epistemic) term between `p` and `q` under `rule`.
/// Always `>= 0`, exactly 0 when `p == q`, possibly `+inf`.
pub fn divergence(rule: Rule, p: &ProbVec, q: &ProbVec) -> Result<f64> {
    check_dims(p, q)?;
    if p == q {
        return Ok(0.0);
    }
    let (ps, qs) = (p.as_slice(), q.as_slice());
    let d = match rule.canonical() {
        Rule::Log => kl(ps, qs),
        Rule::ZeroOne => p.max() - ps[q.argmax()],
        Rule::Brier => ordered_sum(ps.iter().zip(qs).map(|(a, b)| (a - b) * (a - b)).collect()),
        Rule::Spherical => sum_of_squares(ps).sqrt() - dot(ps, qs) / sum_of_squares(qs).sqrt(),
        Rule::Renyi(alpha) => renyi_divergence(alpha, ps, qs),
    };
    Ok(d.max(0.0))
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    let mut terms = Vec::with_capacity(p.len());
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            terms.push(a * (a.ln() - b.ln()));
        }
    }
    ordered_sum(terms)
}

fn renyi_divergence(alpha: f64, p: &[f64], q: &[f64]) -> f64 {
    let support = || p.iter().zip(q).filter(|(&a, _)| a > 0.0);
    if alpha == 0.0 {
        -ordered_sum(support().map(|(_, &b)| b).collect()).ln()
    } else if alpha == 0.5 {
        -2.0 * ordered_sum(support().map(|(a, b)| (a * b).sqrt()).collect()).ln()
    } else if alpha == 2.0 {
        if support().any(|(_, &b)| b <= 0.0) {
            return f64::INFINITY;
        }
        ordered_sum(support().map(|(a, b)| a * a / b).collect()).ln()
    } else if alpha.is_infinite() {
        support()
            .map(|(&a, &b)| {
                if b <= 0.0 {
                    f64::INFINITY
                } else {
                    a.ln() - b.ln()
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        if alpha > 1.0 && support().any(|(_, &b)| b <= 0.0) {
            return f64::INFINITY;
        }
        let s = ordered_sum(
            support()
                .map(|(&a, &b)| a.powf(alpha) * b.powf(1.0 - alpha))
                .collect(),
        );
        // for alpha < 1 disjoint supports give ln 0 = -inf, i.e. +inf overall
        s.ln() / (alpha - 1.0)
    }
}

/// Total (cross-entropy-like) term: `entropy(p) + divergence(p, q)`.
pub fn total(rule: Rule, p: &ProbVec, q: &ProbVec) -> Result<f64> {
    Ok(entropy(rule, p) + divergence(rule, p, q)?)
}
