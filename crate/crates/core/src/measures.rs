//! Monte Carlo estimators for the nine-cell grid of total, aleatoric and
//! epistemic uncertainty.
//!
//! Rows pick the predicting model ([`Predictor`]), columns pick how the true
//! model is approximated ([`Truth`]). Every estimator consumes a single set of
//! posterior samples, which serves both as the predicting models and as the
//! candidate true models. Total uncertainty is always assembled as
//! `aleatoric + epistemic`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scoring::{divergence, entropy, Rule};
use crate::types::{
    EnsembleItem, MeasureSpec, Pairs, Predictor, ProbVec, Quantity, ScoreRecord, Truth,
};

/// A measure evaluated on one item.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureValue {
    pub spec: MeasureSpec,
    pub value: f64,
    pub n_samples: usize,
}

/// Arithmetic mean that returns a constant sequence's value unchanged.
fn mean(values: &[f64]) -> f64 {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return first;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Entry-wise average of the sample distributions, renormalized.
pub fn posterior_mean(samples: &[ProbVec]) -> Result<ProbVec> {
    let first = samples.first().ok_or(Error::EmptySamples)?;
    let k = first.k();
    if let Some(bad) = samples.iter().find(|s| s.k() != k) {
        return Err(Error::DimMismatch {
            expected: k,
            found: bad.k(),
        });
    }
    if samples.iter().all(|s| s == first) {
        return Ok(first.clone());
    }
    let n = samples.len() as f64;
    let avg = (0..k)
        .map(|c| samples.iter().map(|s| s[c]).sum::<f64>() / n)
        .collect();
    ProbVec::normalize(avg)
}

/// Aleatoric uncertainty for the given predicting model. Does not depend on
/// how the true model is approximated.
pub fn aleatoric(predictor: Predictor, item: &EnsembleItem, rule: Rule) -> Result<f64> {
    match predictor {
        Predictor::Single => {
            let single = item.single.as_ref().ok_or(Error::MissingSingle)?;
            Ok(entropy(rule, single))
        }
        Predictor::Average => Ok(entropy(rule, &posterior_mean(&item.samples)?)),
        Predictor::Sampled => {
            if item.samples.is_empty() {
                return Err(Error::EmptySamples);
            }
            let hs: Vec<f64> = item.samples.iter().map(|s| entropy(rule, s)).collect();
            Ok(mean(&hs))
        }
    }
}

/// Epistemic uncertainty of the cell `spec.predictor` x `spec.truth`.
/// `spec.quantity` is ignored.
pub fn epistemic(spec: &MeasureSpec, item: &EnsembleItem) -> Result<f64> {
    let rule = spec.rule;
    let d = |p: &ProbVec, q: &ProbVec| {
        if spec.reverse {
            divergence(rule, q, p)
        } else {
            divergence(rule, p, q)
        }
    };
    let avg_over = |f: &dyn Fn(&ProbVec) -> Result<f64>, over: &[ProbVec]| -> Result<f64> {
        if over.is_empty() {
            return Err(Error::EmptySamples);
        }
        let vals = over.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(mean(&vals))
    };
    let samples = &item.samples;
    let single = || item.single.as_ref().ok_or(Error::MissingSingle);
    let reference = || item.reference.as_ref().ok_or(Error::MissingReference);

    match (spec.predictor, spec.truth) {
        (Predictor::Single, Truth::Reference) => d(single()?, reference()?),
        (Predictor::Single, Truth::Predictive) => d(single()?, &posterior_mean(samples)?),
        (Predictor::Single, Truth::Ensemble) => {
            let w = single()?;
            avg_over(&|s| d(w, s), samples)
        }
        (Predictor::Average, Truth::Reference) => d(&posterior_mean(samples)?, reference()?),
        // D(mean, mean) cancels
        (Predictor::Average, Truth::Predictive) => Ok(0.0),
        (Predictor::Average, Truth::Ensemble) => {
            let m = posterior_mean(samples)?;
            avg_over(&|s| d(&m, s), samples)
        }
        (Predictor::Sampled, Truth::Reference) => {
            let r = reference()?;
            avg_over(&|s| d(s, r), samples)
        }
        (Predictor::Sampled, Truth::Predictive) => {
            let m = posterior_mean(samples)?;
            avg_over(&|s| d(s, &m), samples)
        }
        (Predictor::Sampled, Truth::Ensemble) => pairwise(samples, spec.pairs, &d),
    }
}

fn pairwise(
    samples: &[ProbVec],
    pairs: Pairs,
    d: &dyn Fn(&ProbVec, &ProbVec) -> Result<f64>,
) -> Result<f64> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    if pairs == Pairs::OffDiagonal && n < 2 {
        return Err(Error::NeedTwoSamples(n));
    }
    let mut terms = Vec::with_capacity(n * n);
    for (i, p) in samples.iter().enumerate() {
        for (j, q) in samples.iter().enumerate() {
            if i == j {
                // every rule's divergence vanishes on the diagonal
                if pairs == Pairs::All {
                    terms.push(0.0);
                }
                continue;
            }
            terms.push(d(p, q)?);
        }
    }
    Ok(mean(&terms))
}

/// Total uncertainty, computed as `aleatoric + epistemic` of the same cell.
pub fn total_uncertainty(spec: &MeasureSpec, item: &EnsembleItem) -> Result<f64> {
    let au = aleatoric(spec.predictor, item, spec.rule)?;
    let eu = epistemic(spec, item)?;
    Ok(au + eu)
}

/// Evaluates whichever quantity `spec` names.
pub fn evaluate(spec: &MeasureSpec, item: &EnsembleItem) -> Result<MeasureValue> {
    let value = match spec.quantity {
        Quantity::Total => total_uncertainty(spec, item)?,
        Quantity::Aleatoric => aleatoric(spec.predictor, item, spec.rule)?,
        Quantity::Epistemic => epistemic(spec, item)?,
    };
    Ok(MeasureValue {
        spec: *spec,
        value,
        n_samples: item.n(),
    })
}

/// Whether the posterior predictive's top class matches the item's label;
/// `None` when the item has no label.
pub fn is_correct(item: &EnsembleItem) -> Result<Option<bool>> {
    match item.label {
        Some(label) => Ok(Some(posterior_mean(&item.samples)?.argmax() == label)),
        None => Ok(None),
    }
}

/// Scores every item under `spec`, in input order. Items are evaluated in
/// parallel; the first failing item (in input order) is reported with its id.
pub fn score_dataset(spec: &MeasureSpec, items: &[EnsembleItem]) -> Result<Vec<ScoreRecord>> {
    if let Some(first) = items.first() {
        let k = first.k();
        if let Some(bad) = items.iter().find(|it| it.k() != k) {
            return Err(Error::DimMismatch {
                expected: k,
                found: bad.k(),
            }
            .for_item(&bad.id));
        }
    }
    let results: Vec<Result<ScoreRecord>> = items
        .par_iter()
        .map(|item| {
            evaluate(spec, item)
                .and_then(|m| ScoreRecord::new(item.id.clone(), m.value))
                .map_err(|e| e.for_item(&item.id))
        })
        .collect();
    results.into_iter().collect()
}
