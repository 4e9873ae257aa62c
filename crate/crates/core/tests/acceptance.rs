//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p uncq-core --test acceptance`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use uncq_core::synth::{
    beta_bernoulli_item, beta_bernoulli_oracle, detection_scenario, dirichlet_ensemble,
    BetaPosterior, Concentration, SynthConfig,
};
use uncq_core::{
    aleatoric, auarc, audit_identities, auroc, entropy, epistemic, mann_whitney, score_dataset,
    total_uncertainty, DetectionSet, EnsembleItem, MeasureSpec, Pairs, Predictor, ProbVec,
    Quantity, RetentionSet, Rule, Truth,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn random_probs(rng: &mut impl Rng, k: usize, floor: f64) -> ProbVec {
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + floor).collect();
    ProbVec::new(raw.iter().map(|v| v / raw.iter().sum::<f64>()).collect()).unwrap()
}

fn random_item(rng: &mut impl Rng, id: usize) -> EnsembleItem {
    let k = rng.random_range(2..=6);
    let n = rng.random_range(2..=8);
    // occasional hard zeros exercise the infinite branches
    let draw = |rng: &mut ChaCha20Rng| {
        let mut raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(3)).collect();
        if rng.random_bool(0.1) {
            raw[rng.random_range(0..k)] = 0.0;
        }
        if raw.iter().all(|v| *v == 0.0) {
            raw[0] = 1.0;
        }
        let s: f64 = raw.iter().sum();
        ProbVec::new(raw.iter().map(|v| v / s).collect()).unwrap()
    };
    let mut r = ChaCha20Rng::seed_from_u64(rng.random());
    let samples = (0..n).map(|_| draw(&mut r)).collect();
    EnsembleItem::new(format!("r{id}"), samples)
        .with_single(draw(&mut r))
        .with_reference(draw(&mut r))
}

fn identity_audit() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(20240611);
    let mut items = Vec::with_capacity(1000);
    for i in 0..1000u64 {
        let cfg = SynthConfig {
            k: rng.random_range(2..=10),
            n: rng.random_range(2..=20),
            items: 1,
            concentration: Concentration::Symmetric(rng.random_range(0.1..5.0)),
            seed: i,
        };
        let mut item = dirichlet_ensemble(&cfg)
            .map_err(|e| e.to_string())?
            .remove(0);
        item.id = format!("d{i}");
        items.push(item);
    }
    let mut worst = 0.0f64;
    for item in &items {
        let report = audit_identities(item, 1e-9).map_err(|e| e.to_string())?;
        if !report.passed {
            return Err(format!("{} failed:\n{report}", item.id));
        }
        for c in &report.checks {
            if c.deviation.is_finite() {
                worst = worst.max(c.deviation);
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(10),
        format!("1000 items, worst deviation {worst:.2e}, {elapsed:.2?}"),
        format!("took {elapsed:.2?}"),
    )
}

fn micro_ensemble() -> Outcome {
    let p = |v: [f64; 2]| ProbVec::new(v.to_vec()).unwrap();
    let item = EnsembleItem::new("m", vec![p([0.8, 0.2]), p([0.2, 0.8])]);
    let eu =
        |pr, t, pairs| epistemic(&MeasureSpec::epistemic(pr, t).with_pairs(pairs), &item).unwrap();
    let got = [
        (
            "EU(C2)",
            eu(Predictor::Sampled, Truth::Predictive, Pairs::All),
            0.192745,
        ),
        (
            "EU(B3)",
            eu(Predictor::Average, Truth::Ensemble, Pairs::All),
            0.223144,
        ),
        (
            "EU(C3,all)",
            eu(Predictor::Sampled, Truth::Ensemble, Pairs::All),
            0.415889,
        ),
        (
            "EU(C3,offdiag)",
            eu(Predictor::Sampled, Truth::Ensemble, Pairs::OffDiagonal),
            0.831777,
        ),
        (
            "TU(C2)",
            total_uncertainty(
                &MeasureSpec::total(Predictor::Sampled, Truth::Predictive),
                &item,
            )
            .unwrap(),
            std::f64::consts::LN_2,
        ),
    ];
    let bad: Vec<String> = got
        .iter()
        .filter(|(_, v, want)| (v - want).abs() > 1e-6)
        .map(|(name, v, want)| format!("{name}={v} want {want}"))
        .collect();
    check(
        bad.is_empty(),
        "5 values within 1e-6".into(),
        bad.join(", "),
    )
}

// Independent of the crate: midpoint rule against the Beta(a, b) density with
// integer parameters, where B(a, b) is a ratio of factorials.
fn quadrature_oracle(a: u32, b: u32, points: usize) -> (f64, f64) {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let norm = fact(a + b - 1) / (fact(a - 1) * fact(b - 1));
    let h = |t: f64| -t * t.ln() - (1.0 - t) * (1.0 - t).ln();
    let (mut mean, mut expected_h) = (0.0, 0.0);
    let step = 1.0 / points as f64;
    for i in 0..points {
        let t = (i as f64 + 0.5) * step;
        let w = norm * t.powi(a as i32 - 1) * (1.0 - t).powi(b as i32 - 1) * step;
        mean += w * t;
        expected_h += w * h(t);
    }
    (h(mean), expected_h)
}

fn beta_oracle() -> Outcome {
    let start = Instant::now();
    let post = BetaPosterior::new(2.0, 3.0).map_err(|e| e.to_string())?;
    let oracle = beta_bernoulli_oracle(&post);
    let (q_au_b, q_au_c) = quadrature_oracle(2, 3, 1_000_000);
    let dq = (oracle.au_b - q_au_b)
        .abs()
        .max((oracle.au_c - q_au_c).abs());
    if dq > 1e-9 || (oracle.au_b - 0.673012).abs() > 1e-6 || (oracle.au_c - 0.583333).abs() > 1e-6 {
        return Err(format!(
            "closed form {oracle:?} vs quadrature ({q_au_b}, {q_au_c})"
        ));
    }
    let item = beta_bernoulli_item(&post, 1_000_000, 7).map_err(|e| e.to_string())?;
    let au_c = aleatoric(Predictor::Sampled, &item, Rule::Log).map_err(|e| e.to_string())?;
    let eu_c2 = epistemic(
        &MeasureSpec::epistemic(Predictor::Sampled, Truth::Predictive),
        &item,
    )
    .map_err(|e| e.to_string())?;
    let d_au = (au_c - oracle.au_c).abs();
    let d_eu = (eu_c2 - oracle.eu_c2).abs();
    let elapsed = start.elapsed();
    check(
        d_au <= 2e-3 && d_eu <= 2e-3 && elapsed < Duration::from_secs(5),
        format!("quadrature gap {dq:.1e}, MC gaps au_c {d_au:.1e} eu_c2 {d_eu:.1e}, {elapsed:.2?}"),
        format!("MC gaps au_c {d_au:.1e} eu_c2 {d_eu:.1e}, {elapsed:.2?}"),
    )
}

fn decomposition_bitwise() -> Outcome {
    let rules = [
        Rule::Log,
        Rule::ZeroOne,
        Rule::Brier,
        Rule::Spherical,
        Rule::Renyi(0.0),
        Rule::Renyi(0.5),
        Rule::Renyi(2.0),
        Rule::Renyi(f64::INFINITY),
    ];
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let items: Vec<EnsembleItem> = (0..10_000).map(|i| random_item(&mut rng, i)).collect();
    let mut cells = 0u64;
    for item in &items {
        for rule in rules {
            for p in [Predictor::Single, Predictor::Average, Predictor::Sampled] {
                let au = aleatoric(p, item, rule).map_err(|e| e.to_string())?;
                for t in [Truth::Reference, Truth::Predictive, Truth::Ensemble] {
                    for pairs in [Pairs::All, Pairs::OffDiagonal] {
                        for reverse in [false, true] {
                            let spec = MeasureSpec::total(p, t)
                                .with_rule(rule)
                                .with_pairs(pairs)
                                .with_reverse(reverse);
                            let tu = total_uncertainty(&spec, item).map_err(|e| e.to_string())?;
                            let eu = epistemic(&spec.as_quantity(Quantity::Epistemic), item)
                                .map_err(|e| e.to_string())?;
                            if tu.to_bits() != (au + eu).to_bits() {
                                return Err(format!(
                                    "{} {spec} under {rule}: {tu} vs {au} + {eu}",
                                    item.id
                                ));
                            }
                            cells += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{cells} (item, rule, cell) combinations exact"))
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut datasets = 0;
    for _ in 0..2000 {
        let n = rng.random_range(2..=200);
        let levels = rng.random_range(1..=n.max(2));
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let mut flags: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        flags[0] = true;
        flags[1] = false;
        let d = DetectionSet::new(scores.clone(), flags.clone()).map_err(|e| e.to_string())?;
        let mut twice_u = 0u64;
        let mut pairs = 0u64;
        for (i, &fi) in flags.iter().enumerate() {
            for (j, &fj) in flags.iter().enumerate() {
                if fi && !fj {
                    pairs += 1;
                    twice_u += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 2,
                        std::cmp::Ordering::Equal => 1,
                        std::cmp::Ordering::Less => 0,
                    };
                }
            }
        }
        let mw = mann_whitney(&d);
        if mw.twice_u != twice_u
            || mw.pairs != pairs
            || auroc(&d) != twice_u as f64 / (2 * pairs) as f64
        {
            return Err(format!(
                "brute force mismatch on {n} items: {mw:?} vs ({twice_u}, {pairs})"
            ));
        }
        datasets += 1;
    }

    let r = RetentionSet::new(vec![1.0, 2.0, 3.0, 4.0], vec![true, true, true, false])
        .map_err(|e| e.to_string())?;
    let a = auarc(&r, 0.5).map_err(|e| e.to_string())?;
    if a != 0.9375 {
        return Err(format!("fixture AUARC {a}"));
    }

    for _ in 0..500 {
        let n = rng.random_range(2..=200);
        let scores: Vec<f64> = (0..n)
            .map(|i| i as f64 + rng.random::<f64>() * 0.5)
            .collect();
        let mut flags: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        flags[0] = !flags[1];
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let d = DetectionSet::new(scores, flags.clone()).map_err(|e| e.to_string())?;
        let dn = DetectionSet::new(neg, flags).map_err(|e| e.to_string())?;
        let (m, mn) = (mann_whitney(&d), mann_whitney(&dn));
        let a = auroc(&d);
        let an = auroc(&dn);
        if mn.twice_u != 2 * m.pairs - m.twice_u || (an - (1.0 - a)).abs() > f64::EPSILON {
            return Err(format!("flip failed: {a} vs {an}"));
        }
    }
    Ok(format!(
        "{datasets} brute-force datasets exact, AUARC fixture 0.9375, flip exact"
    ))
}

fn detection() -> Outcome {
    let cfg = SynthConfig {
        k: 10,
        n: 10,
        items: 200,
        concentration: Concentration::Symmetric(1.0),
        seed: 7,
    };
    let items = detection_scenario(&cfg, 1.0, 500.0).map_err(|e| e.to_string())?;
    let scores = score_dataset(
        &MeasureSpec::epistemic(Predictor::Sampled, Truth::Predictive),
        &items,
    )
    .map_err(|e| e.to_string())?;
    let flags = items.iter().map(|i| i.flag.unwrap_or(false)).collect();
    let d = DetectionSet::new(scores.iter().map(|s| s.value).collect(), flags)
        .map_err(|e| e.to_string())?;
    let a = auroc(&d);
    check(
        a >= 0.95,
        format!("auroc {a:.6} (seed 7)"),
        format!("auroc {a:.6} < 0.95"),
    )
}

fn renyi_suite() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let r = |a: f64| Rule::Renyi(a);
    for i in 0..10_000 {
        let k = rng.random_range(2..=12);
        let p = random_probs(&mut rng, k, 0.0);
        let h = [r(0.0), Rule::Log, r(2.0), r(f64::INFINITY)].map(|rule| entropy(rule, &p));
        if h.windows(2).any(|w| w[0] < w[1] - 1e-12) {
            return Err(format!("ordering broken on vector {i}: {h:?}"));
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let k = rng.random_range(2..=12);
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        // keep every entry at least 1e-3
        let floor = 1e-3;
        let p = ProbVec::new(
            raw.iter()
                .map(|v| floor + (1.0 - k as f64 * floor) * v / s)
                .collect(),
        )
        .unwrap();
        let h1 = entropy(Rule::Log, &p);
        for a in [1.0 - 1e-4, 1.0 + 1e-4] {
            worst = worst.max((entropy(r(a), &p) - h1).abs());
        }
    }
    check(
        worst <= 1e-3,
        format!("ordering on 10^4 vectors, continuity gap {worst:.1e}"),
        format!("continuity gap {worst:.1e}"),
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        (
            "identity audit on seeded Dirichlet ensembles",
            identity_audit,
        ),
        ("worked micro-ensemble values", micro_ensemble),
        (
            "Beta(2,3) closed form vs quadrature and Monte Carlo",
            beta_oracle,
        ),
        (
            "TU = AU + EU bitwise for every cell and rule",
            decomposition_bitwise,
        ),
        ("metric oracles", metric_oracles),
        ("constructed detection scenario", detection),
        ("Renyi ordering and continuity", renyi_suite),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {}  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
