//! Seeded generators and analytic oracles.
//!
//! All randomness comes from ChaCha20 seeded with `seed`; item `i` of a
//! generated dataset draws from stream `i`, so it does not depend on how
//! many items are generated or on evaluation order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution, Gamma};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{aleatoric, epistemic, posterior_mean};
use crate::scoring::Rule;
use crate::types::{EnsembleItem, MeasureSpec, Predictor, ProbVec, Truth};

/// Sharpness used by [`dirichlet_ensemble`] for samples around the center.
pub const SAMPLE_SHARPNESS: f64 = 50.0;

/// Digamma function for `x > 0`.
///
/// Shifts the argument to `x >= 10` with `psi(x) = psi(x + 1) - 1/x`, then
/// applies the asymptotic series through the `x^-12` term.
pub fn digamma(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    acc + x.ln() - 0.5 / x - series
}

/// Beta posterior over a Bernoulli parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPosterior {
    a: f64,
    b: f64,
}

impl BetaPosterior {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Beta({a}, {b}) needs finite positive shapes"
            )));
        }
        Ok(BetaPosterior { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn density(&self, theta: f64) -> f64 {
        let (a, b) = (self.a, self.b);
        let log_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
        ((a - 1.0) * theta.ln() + (b - 1.0) * (1.0 - theta).ln() - log_beta).exp()
    }
}

// Lanczos approximation (g = 7, n = 9); only used for plotting densities.
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut s = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        s += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

/// Closed-form measures of the Beta-Bernoulli example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaOracle {
    /// Entropy of the posterior predictive `Bern(a/(a+b))`.
    pub au_b: f64,
    /// Posterior expected entropy `E[H(Bern(theta))]`.
    pub au_c: f64,
    /// Mutual information `au_b - au_c`.
    pub eu_c2: f64,
}

fn bernoulli_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

pub fn beta_bernoulli_oracle(post: &BetaPosterior) -> BetaOracle {
    let (a, b) = (post.a, post.b);
    let s = a + b;
    let au_b = bernoulli_entropy(post.mean());
    let psi_s = digamma(s + 1.0);
    let au_c = (a / s) * (psi_s - digamma(a + 1.0)) + (b / s) * (psi_s - digamma(b + 1.0));
    BetaOracle {
        au_b,
        au_c,
        eu_c2: au_b - au_c,
    }
}

/// Draws `n` Bernoulli parameters from the posterior as two-class samples.
/// `single` is set to the posterior mean.
pub fn beta_bernoulli_item(post: &BetaPosterior, n: usize, seed: u64) -> Result<EnsembleItem> {
    if n < 2 {
        return Err(Error::NeedTwoSamples(n));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let beta = Beta::new(post.a, post.b).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let samples = (0..n)
        .map(|_| {
            let theta: f64 = beta.sample(&mut rng);
            ProbVec::normalize(vec![theta, 1.0 - theta])
        })
        .collect::<Result<Vec<_>>>()?;
    let mu = post.mean();
    let single = ProbVec::normalize(vec![mu, 1.0 - mu])?;
    Ok(EnsembleItem::new(format!("beta-{}-{}", post.a, post.b), samples).with_single(single))
}

/// One row of the Beta example grid: measures as a function of the fixed
/// model's parameter `theta`, used either as the predicting model or as the
/// true-model reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaGridRow {
    pub theta: f64,
    pub density: f64,
    /// `H(Bern(theta))`
    pub au_a: f64,
    pub eu_a2: f64,
    pub eu_a3: f64,
    pub eu_b1: f64,
    pub eu_c1: f64,
}

/// Evaluates the theta-dependent cells over `points` equally spaced interior
/// values of theta, using the sample set of `item` for posterior expectations.
pub fn beta_grid(
    post: &BetaPosterior,
    item: &EnsembleItem,
    points: usize,
) -> Result<Vec<BetaGridRow>> {
    (1..=points)
        .map(|i| {
            let theta = i as f64 / (points + 1) as f64;
            let fixed = ProbVec::normalize(vec![theta, 1.0 - theta])?;
            let it = EnsembleItem::new(item.id.clone(), item.samples.clone())
                .with_single(fixed.clone())
                .with_reference(fixed);
            let eu = |p, t| epistemic(&MeasureSpec::epistemic(p, t), &it);
            Ok(BetaGridRow {
                theta,
                density: post.density(theta),
                au_a: aleatoric(Predictor::Single, &it, Rule::Log)?,
                eu_a2: eu(Predictor::Single, Truth::Predictive)?,
                eu_a3: eu(Predictor::Single, Truth::Ensemble)?,
                eu_b1: eu(Predictor::Average, Truth::Reference)?,
                eu_c1: eu(Predictor::Sampled, Truth::Reference)?,
            })
        })
        .collect()
}

/// Dirichlet concentration, shared across classes or given per class.
#[derive(Debug, Clone, PartialEq)]
pub enum Concentration {
    Symmetric(f64),
    PerClass(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub k: usize,
    pub n: usize,
    pub items: usize,
    pub concentration: Concentration,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::TooFewClasses(self.k));
        }
        if self.n < 1 {
            return Err(Error::EmptySamples);
        }
        let ok = match &self.concentration {
            Concentration::Symmetric(c) => c.is_finite() && *c > 0.0,
            Concentration::PerClass(cs) => {
                cs.len() == self.k && cs.iter().all(|c| c.is_finite() && *c > 0.0)
            }
        };
        if !ok {
            return Err(Error::InvalidArgument(
                "concentration must be positive and have one entry per class".into(),
            ));
        }
        Ok(())
    }

    fn alphas(&self) -> Vec<f64> {
        match &self.concentration {
            Concentration::Symmetric(c) => vec![*c; self.k],
            Concentration::PerClass(cs) => cs.clone(),
        }
    }

    fn item_rng(&self, index: usize) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Samples a Dirichlet vector through log-gamma draws, so that very small
/// concentrations underflow to exact zeros instead of an all-zero vector.
fn sample_dirichlet<R: Rng>(rng: &mut R, alphas: &[f64]) -> Result<ProbVec> {
    let logs: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            let a = a.max(f64::MIN_POSITIVE);
            if a >= 1.0 {
                let g: f64 = Gamma::new(a, 1.0).expect("positive shape").sample(rng);
                g.ln()
            } else {
                // G(a) = G(a + 1) * U^(1/a)
                let g: f64 = Gamma::new(a + 1.0, 1.0)
                    .expect("positive shape")
                    .sample(rng);
                let u: f64 = rng.random::<f64>();
                g.ln() + (1.0 - u).ln() / a
            }
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ProbVec::normalize(logs.iter().map(|l| (l - top).exp()).collect())
}

fn ensemble_item<R: Rng>(
    rng: &mut R,
    id: String,
    alphas: &[f64],
    n: usize,
    sharpness: f64,
) -> Result<EnsembleItem> {
    let center = sample_dirichlet(rng, alphas)?;
    let scaled: Vec<f64> = center.iter().map(|c| sharpness * c).collect();
    let samples = (0..n)
        .map(|_| sample_dirichlet(rng, &scaled))
        .collect::<Result<Vec<_>>>()?;
    let single = samples[0].clone();
    let reference = posterior_mean(&samples)?;
    Ok(EnsembleItem::new(id, samples)
        .with_single(single)
        .with_reference(reference))
}

/// Random ensembles: a latent center from `Dirichlet(concentration)`, then
/// `n` samples from `Dirichlet(50 * center)`. `single` is the first sample
/// and `reference` the posterior mean.
pub fn dirichlet_ensemble(cfg: &SynthConfig) -> Result<Vec<EnsembleItem>> {
    cfg.validate()?;
    let alphas = cfg.alphas();
    (0..cfg.items)
        .into_par_iter()
        .map(|i| {
            let mut rng = cfg.item_rng(i);
            ensemble_item(
                &mut rng,
                format!("item-{i}"),
                &alphas,
                cfg.n,
                SAMPLE_SHARPNESS,
            )
        })
        .collect()
}

/// Two populations of ensembles: odd-indexed items use sharpness
/// `spread_lo` (high disagreement, `flag = true`), even-indexed items use
/// `spread_hi` (`flag = false`).
pub fn detection_scenario(
    cfg: &SynthConfig,
    spread_lo: f64,
    spread_hi: f64,
) -> Result<Vec<EnsembleItem>> {
    cfg.validate()?;
    if !(spread_lo > 0.0 && spread_lo < spread_hi && spread_hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < spread_lo < spread_hi, got {spread_lo} and {spread_hi}"
        )));
    }
    let alphas = cfg.alphas();
    (0..cfg.items)
        .into_par_iter()
        .map(|i| {
            let mut rng = cfg.item_rng(i);
            let flagged = i % 2 == 1;
            let sharpness = if flagged { spread_lo } else { spread_hi };
            ensemble_item(&mut rng, format!("item-{i}"), &alphas, cfg.n, sharpness)
                .map(|it| it.with_flag(flagged))
        })
        .collect()
}
