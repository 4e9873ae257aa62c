//! Probability vectors, ensemble items, measure specifications and score
//! records. Everything here is immutable once validated.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scoring::Rule;

/// Largest deviation of the input mass from 1 accepted by [`ProbVec::new`].
pub const SUM_TOLERANCE: f64 = 1e-6;

/// Negative entries down to this value are round-off and get clamped to 0.
pub const NEGATIVE_CLAMP: f64 = -1e-12;

/// A categorical distribution over `K >= 2` classes whose entries sum to
/// exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec(Vec<f64>);

impl ProbVec {
    /// Validates a distribution that should already sum to 1 (within
    /// [`SUM_TOLERANCE`]) and renormalizes it.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let clamped = clamp_entries(probs)?;
        let sum: f64 = clamped.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized(sum));
        }
        normalize_clamped(clamped)
    }

    /// Rescales any nonnegative vector with positive mass onto the simplex.
    pub fn normalize(raw: Vec<f64>) -> Result<Self> {
        normalize_clamped(clamp_entries(raw)?)
    }

    /// Uniform distribution over `k` classes.
    pub fn uniform(k: usize) -> Result<Self> {
        Self::normalize(vec![1.0; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.0[self.argmax()]
    }
}

impl Index<usize> for ProbVec {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for ProbVec {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Rescales `raw` onto the simplex. See [`ProbVec::normalize`].
pub fn normalize(raw: Vec<f64>) -> Result<ProbVec> {
    ProbVec::normalize(raw)
}

fn clamp_entries(mut raw: Vec<f64>) -> Result<Vec<f64>> {
    if raw.len() < 2 {
        return Err(Error::TooFewClasses(raw.len()));
    }
    for (index, p) in raw.iter_mut().enumerate() {
        let value = *p;
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        if value < NEGATIVE_CLAMP {
            return Err(Error::NegativeMass { index, value });
        }
        if value <= 0.0 {
            // also folds -0.0 into +0.0
            *p = 0.0;
        }
    }
    Ok(raw)
}

/// Sum in ascending order, so it does not depend on how classes are ordered.
fn canonical_sum(p: &[f64]) -> f64 {
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum()
}

fn normalize_clamped(mut p: Vec<f64>) -> Result<ProbVec> {
    let sum = canonical_sum(&p);
    if sum <= 0.0 {
        return Err(Error::AllZero(sum));
    }
    if sum != 1.0 {
        for x in p.iter_mut() {
            *x /= sum;
        }
    }
    // Division leaves the sum a few ulps off 1; push the residual into the
    // largest entry until the canonical sum is exactly 1.
    for _ in 0..4 {
        let s = canonical_sum(&p);
        if s == 1.0 {
            break;
        }
        let i = argmax(&p);
        p[i] = (p[i] + (1.0 - s)).max(0.0);
    }
    // Rounding can make the residual step overshoot; walk single entries one
    // ulp at a time, largest first. Ties-to-even in the partial sums can make
    // one entry's walk oscillate around 1, in which case the next one is tried.
    let mut order: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    'outer: for i in order {
        let mut last_up = None;
        for _ in 0..64 {
            let s = canonical_sum(&p);
            if s == 1.0 {
                break 'outer;
            }
            let up = s < 1.0;
            if last_up == Some(!up) {
                break;
            }
            last_up = Some(up);
            p[i] = if up { p[i].next_up() } else { p[i].next_down() };
        }
    }
    Ok(ProbVec(p))
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..p.len() {
        if p[i] > p[best] {
            best = i;
        }
    }
    best
}

/// One datapoint's predictive evidence: posterior samples plus optional
/// single-model prediction, reference prediction, label and flag.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleItem {
    pub id: String,
    pub samples: Vec<ProbVec>,
    pub single: Option<ProbVec>,
    pub reference: Option<ProbVec>,
    pub label: Option<usize>,
    pub flag: Option<bool>,
}

impl EnsembleItem {
    pub fn new(id: impl Into<String>, samples: Vec<ProbVec>) -> Self {
        EnsembleItem {
            id: id.into(),
            samples,
            single: None,
            reference: None,
            label: None,
            flag: None,
        }
    }

    pub fn with_single(mut self, single: ProbVec) -> Self {
        self.single = Some(single);
        self
    }

    pub fn with_reference(mut self, reference: ProbVec) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_flag(mut self, flag: bool) -> Self {
        self.flag = Some(flag);
        self
    }

    /// Number of classes, taken from the first sample.
    pub fn k(&self) -> usize {
        self.samples.first().map_or(0, ProbVec::k)
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    /// Checks that every vector shares K, that there is at least one
    /// sample and that the label is in range.
    pub fn validate(self) -> Result<Self> {
        let k = match self.samples.first() {
            Some(s) => s.k(),
            None => return Err(Error::EmptySamples),
        };
        let others = self
            .samples
            .iter()
            .chain(self.single.iter())
            .chain(self.reference.iter());
        for p in others {
            if p.k() != k {
                return Err(Error::DimMismatch {
                    expected: k,
                    found: p.k(),
                });
            }
        }
        if let Some(label) = self.label {
            if label >= k {
                return Err(Error::BadLabel { label, k });
            }
        }
        Ok(self)
    }
}

/// Validates an item. See [`EnsembleItem::validate`].
pub fn validate_item(item: EnsembleItem) -> Result<EnsembleItem> {
    item.validate()
}

/// Which part of the uncertainty a measure quantifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Total,
    Aleatoric,
    Epistemic,
}

/// The model used to predict (rows of the measure grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predictor {
    /// A fixed single model, labelled `A`.
    Single,
    /// The posterior predictive (Bayesian model average), labelled `B`.
    Average,
    /// A model resampled from the posterior for every prediction, labelled `C`.
    Sampled,
}

/// How the unknown true model is approximated (columns of the grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    /// A fixed reference model, labelled `1`.
    Reference,
    /// The posterior predictive distribution, labelled `2`.
    Predictive,
    /// Expectation over posterior samples, labelled `3`.
    Ensemble,
}

/// Normalization of double sums over sample pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Pairs {
    /// Plug-in `1/N^2` over all pairs, diagonal included.
    #[default]
    All,
    /// `1/(N(N-1))` over pairs with `n != n'`.
    OffDiagonal,
}

/// Fully specifies one cell of the measure grid under a scoring rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSpec {
    pub quantity: Quantity,
    pub predictor: Predictor,
    /// Ignored for aleatoric measures.
    pub truth: Truth,
    pub rule: Rule,
    pub pairs: Pairs,
    /// Swap the arguments of every divergence.
    pub reverse: bool,
}

impl MeasureSpec {
    pub fn new(quantity: Quantity, predictor: Predictor, truth: Truth) -> Self {
        MeasureSpec {
            quantity,
            predictor,
            truth,
            rule: Rule::Log,
            pairs: Pairs::All,
            reverse: false,
        }
    }

    pub fn total(predictor: Predictor, truth: Truth) -> Self {
        Self::new(Quantity::Total, predictor, truth)
    }

    pub fn aleatoric(predictor: Predictor) -> Self {
        Self::new(Quantity::Aleatoric, predictor, Truth::Predictive)
    }

    pub fn epistemic(predictor: Predictor, truth: Truth) -> Self {
        Self::new(Quantity::Epistemic, predictor, truth)
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_pairs(mut self, pairs: Pairs) -> Self {
        self.pairs = pairs;
        self
    }

    pub fn with_reverse(mut self, reverse: bool) -> Self {
        self.reverse = reverse;
        self
    }

    /// Same cell with a different quantity.
    pub fn as_quantity(mut self, quantity: Quantity) -> Self {
        self.quantity = quantity;
        self
    }

    /// Whether `pairs` changes the result for this spec.
    pub fn uses_pairs(&self) -> bool {
        self.quantity != Quantity::Aleatoric
            && self.predictor == Predictor::Sampled
            && self.truth == Truth::Ensemble
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::Total => "TU",
            Quantity::Aleatoric => "AU",
            Quantity::Epistemic => "EU",
        })
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Predictor::Single => "A",
            Predictor::Average => "B",
            Predictor::Sampled => "C",
        })
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::Reference => "1",
            Truth::Predictive => "2",
            Truth::Ensemble => "3",
        })
    }
}

impl fmt::Display for MeasureSpec {
    /// Renders e.g. `EU(C3)`, `AU(B)` or `TU(C3,offdiag)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}", self.quantity, self.predictor)?;
        if self.quantity != Quantity::Aleatoric {
            write!(f, "{}", self.truth)?;
        }
        if self.uses_pairs() && self.pairs == Pairs::OffDiagonal {
            f.write_str(",offdiag")?;
        }
        f.write_str(")")
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tu" | "total" => Ok(Quantity::Total),
            "au" | "aleatoric" => Ok(Quantity::Aleatoric),
            "eu" | "epistemic" => Ok(Quantity::Epistemic),
            _ => Err(Error::InvalidArgument(format!("unknown quantity {s:?}"))),
        }
    }
}

impl FromStr for Predictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Predictor::Single),
            "B" | "b" => Ok(Predictor::Average),
            "C" | "c" => Ok(Predictor::Sampled),
            _ => Err(Error::InvalidArgument(format!("unknown predictor {s:?}"))),
        }
    }
}

impl FromStr for Truth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Truth::Reference),
            "2" => Ok(Truth::Predictive),
            "3" => Ok(Truth::Ensemble),
            _ => Err(Error::InvalidArgument(format!(
                "unknown truth approximation {s:?}"
            ))),
        }
    }
}

impl FromStr for Pairs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Pairs::All),
            "offdiag" => Ok(Pairs::OffDiagonal),
            _ => Err(Error::InvalidArgument(format!(
                "unknown pair convention {s:?}"
            ))),
        }
    }
}

/// An item's scalar uncertainty score. Never NaN; may be `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub id: String,
    pub value: f64,
}

impl ScoreRecord {
    pub fn new(id: impl Into<String>, value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::NanScore);
        }
        // -0.0 + 0.0 == +0.0
        Ok(ScoreRecord {
            id: id.into(),
            value: value + 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(p: &[f64]) -> ProbVec {
        ProbVec::new(p.to_vec()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(vec![0.5, 0.5]).unwrap().as_slice(), &[0.5, 0.5]);
        assert_eq!(normalize(vec![2.0, 2.0]).unwrap().as_slice(), &[0.5, 0.5]);
        let third = normalize(vec![0.3, 0.3, 0.3]).unwrap();
        for &p in third.iter() {
            assert!((p - 1.0 / 3.0).abs() < 1e-16);
        }
        assert_eq!(third.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn normalize_reaches_a_fixed_point() {
        // the residual step alone oscillates around 1 on this input
        let p = normalize(vec![
            1.965542560505756e-7,
            3.626345970754721e-7,
            1.973200194148262e-9,
        ])
        .unwrap();
        assert_eq!(canonical_sum(p.as_slice()), 1.0);
        assert_eq!(normalize(p.as_slice().to_vec()).unwrap(), p);
        let reversed: Vec<f64> = p.iter().rev().copied().collect();
        assert_eq!(
            normalize(reversed.clone()).unwrap().as_slice(),
            reversed.as_slice()
        );
    }

    #[test]
    fn normalize_errors() {
        assert!(matches!(normalize(vec![0.0, 0.0]), Err(Error::AllZero(_))));
        assert!(matches!(
            normalize(vec![0.5, -0.1]),
            Err(Error::NegativeMass { index: 1, .. })
        ));
        assert!(matches!(normalize(vec![1.0]), Err(Error::TooFewClasses(1))));
        assert!(matches!(
            normalize(vec![f64::NAN, 1.0]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn tiny_negatives_are_clamped() {
        let p = normalize(vec![1.0, -1e-13]).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0]);
        assert!(p[1].is_sign_positive());
    }

    #[test]
    fn new_rejects_unnormalized_input() {
        assert!(matches!(
            ProbVec::new(vec![0.6, 0.3]),
            Err(Error::NotNormalized(_))
        ));
        assert!(ProbVec::new(vec![0.6, 0.4 + 5e-7]).is_ok());
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(pv(&[0.4, 0.2, 0.4]).argmax(), 0);
        assert_eq!(pv(&[0.2, 0.4, 0.4]).argmax(), 1);
    }

    #[test]
    fn validate_item_examples() {
        let ok = validate_item(EnsembleItem::new("a", vec![pv(&[0.5, 0.5])])).unwrap();
        assert_eq!((ok.k(), ok.n()), (2, 1));

        let mismatch = EnsembleItem::new("b", vec![pv(&[0.5, 0.5]), pv(&[0.2, 0.3, 0.5])]);
        assert_eq!(
            validate_item(mismatch),
            Err(Error::DimMismatch {
                expected: 2,
                found: 3
            })
        );

        let bad_label = EnsembleItem::new("c", vec![pv(&[0.5, 0.5])]).with_label(2);
        assert_eq!(
            validate_item(bad_label),
            Err(Error::BadLabel { label: 2, k: 2 })
        );

        assert_eq!(
            validate_item(EnsembleItem::new("d", vec![])),
            Err(Error::EmptySamples)
        );

        let bad_single =
            EnsembleItem::new("e", vec![pv(&[0.5, 0.5])]).with_single(pv(&[0.2, 0.3, 0.5]));
        assert!(matches!(
            validate_item(bad_single),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn spec_display() {
        let s = MeasureSpec::epistemic(Predictor::Sampled, Truth::Ensemble)
            .with_pairs(Pairs::OffDiagonal);
        assert_eq!(s.to_string(), "EU(C3,offdiag)");
        assert_eq!(
            MeasureSpec::aleatoric(Predictor::Average).to_string(),
            "AU(B)"
        );
        let t =
            MeasureSpec::total(Predictor::Average, Truth::Ensemble).with_pairs(Pairs::OffDiagonal);
        assert_eq!(t.to_string(), "TU(B3)");
    }

    #[test]
    fn score_record_normalizes_negative_zero() {
        let r = ScoreRecord::new("x", -0.0).unwrap();
        assert!(r.value.is_sign_positive());
        assert!(ScoreRecord::new("x", f64::NAN).is_err());
        assert_eq!(
            ScoreRecord::new("x", f64::INFINITY).unwrap().value,
            f64::INFINITY
        );
    }
}
