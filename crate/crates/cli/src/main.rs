//! `uncq`: score prediction files, evaluate scores, generate synthetic data
//! and audit identities.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 audit failure.

mod plot;

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use uncq_core::io::{read_flags, read_items, read_scores, write_items, write_scores};
use uncq_core::synth::{
    beta_bernoulli_item, beta_bernoulli_oracle, beta_grid, detection_scenario, dirichlet_ensemble,
    BetaPosterior, Concentration, SynthConfig,
};
use uncq_core::{
    auarc, audit_identities_with_rule, aupr, auroc, fpr_at_tpr, is_correct, score_dataset,
    DetectionSet, EnsembleItem, MeasureSpec, Pairs, Predictor, Quantity, RetentionSet, Rule, Truth,
};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_AUDIT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "uncq",
    version,
    about = "Predictive uncertainty measures for classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every item of a prediction file with one measure.
    Score(ScoreArgs),
    /// Compute detection or retention metrics for score files.
    Eval(EvalArgs),
    /// Generate synthetic prediction files.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Check the exact identities between measures on every item.
    Audit(AuditArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    Tu,
    Au,
    Eu,
}

#[derive(Clone, Copy, ValueEnum)]
enum PredictorArg {
    A,
    B,
    C,
}

#[derive(Clone, Copy, ValueEnum)]
enum TruthArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Log,
    ZeroOne,
    Brier,
    Spherical,
    Renyi,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairsArg {
    All,
    Offdiag,
}

#[derive(Args)]
struct RuleArgs {
    #[arg(long, value_enum, default_value = "log")]
    rule: RuleArg,
    /// Renyi order (`inf` allowed); required with `--rule renyi`.
    #[arg(long)]
    alpha: Option<String>,
}

impl RuleArgs {
    fn rule(&self) -> anyhow::Result<Rule> {
        let rule = match self.rule {
            RuleArg::Log => Rule::Log,
            RuleArg::ZeroOne => Rule::ZeroOne,
            RuleArg::Brier => Rule::Brier,
            RuleArg::Spherical => Rule::Spherical,
            RuleArg::Renyi => {
                let alpha = self
                    .alpha
                    .as_deref()
                    .ok_or_else(|| anyhow!("--rule renyi needs --alpha"))?;
                Rule::renyi(uncq_core::scoring::parse_alpha(alpha)?)?
            }
        };
        if self.alpha.is_some() && !matches!(self.rule, RuleArg::Renyi) {
            bail!("--alpha only applies to --rule renyi");
        }
        Ok(rule)
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// Prediction file (line-delimited JSON records).
    #[arg(long = "in")]
    input: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    quantity: QuantityArg,
    #[arg(long, value_enum, ignore_case = true)]
    predictor: PredictorArg,
    /// Ignored for `--quantity au`.
    #[arg(long, value_enum, default_value = "2")]
    truth: TruthArg,
    #[command(flatten)]
    rule: RuleArgs,
    #[arg(long, value_enum, default_value = "all")]
    pairs: PairsArg,
    /// Swap the arguments of every divergence.
    #[arg(long)]
    reverse: bool,
    /// Treat an infinite score as a data error.
    #[arg(long)]
    finite: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Task {
    /// Positives (flag = true) should score higher: AUROC, AUPR, FPR@TPR.
    Detect,
    /// Flags mark correct predictions: accuracy-retention AUC.
    Retain,
}

#[derive(Args)]
struct EvalArgs {
    /// Score CSV; repeat for several datasets.
    #[arg(long, required = true)]
    scores: Vec<PathBuf>,
    /// Prediction file supplying the `flag` (or `label`) of each item; one per `--scores`.
    #[arg(long = "in", conflicts_with = "flags")]
    input: Vec<PathBuf>,
    /// `id,flag` CSV; one per `--scores`.
    #[arg(long)]
    flags: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "detect")]
    task: Task,
    /// Derive flags from labels: misclassified items are positives for
    /// `detect`, correctly classified items are correct for `retain`.
    #[arg(long, requires = "input")]
    labels: bool,
    /// TPR level for FPR@TPR.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Smallest retained fraction for AUARC.
    #[arg(long, default_value_t = 0.5)]
    fmin: f64,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Beta-Bernoulli example: samples of theta plus a closed-form oracle sidecar.
    Beta(BetaArgs),
    /// Random Dirichlet ensembles.
    Dirichlet(DirichletArgs),
    /// Two populations of ensembles with low and high disagreement.
    Detection(DetectionArgs),
}

#[derive(Args)]
struct BetaArgs {
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    #[arg(long, default_value_t = 3.0)]
    b: f64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prediction file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Oracle sidecar (JSON); defaults to `<out>.oracle.json`, or stderr.
    #[arg(long)]
    oracle: Option<PathBuf>,
    /// Write an SVG of the theta-dependent measures.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long, default_value_t = 99)]
    grid: usize,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    items: usize,
    /// Dirichlet concentration: one value, or one per class separated by commas.
    #[arg(long, default_value = "1.0")]
    conc: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl EnsembleArgs {
    fn config(&self) -> anyhow::Result<SynthConfig> {
        let values = self
            .conc
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("bad --conc {:?}", self.conc))?;
        let concentration = match values.as_slice() {
            [c] => Concentration::Symmetric(*c),
            _ => Concentration::PerClass(values),
        };
        let cfg = SynthConfig {
            k: self.k,
            n: self.n,
            items: self.items,
            concentration,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct DirichletArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
}

#[derive(Args)]
struct DetectionArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 1.0)]
    spread_lo: f64,
    #[arg(long, default_value_t = 500.0)]
    spread_hi: f64,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Relative tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    rule: RuleArgs,
    /// Print every check of every item.
    #[arg(long)]
    verbose: bool,
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error: error.into(),
    }
}

fn data(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_DATA,
        error: error.into(),
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Score(args) => run_score(args),
        Command::Eval(args) => run_eval(args),
        Command::Synth(cmd) => run_synth(cmd),
        Command::Audit(args) => run_audit(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn open_items(path: &Path) -> Result<Vec<EnsembleItem>, Failure> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(data)?;
    read_items(BufReader::new(file))
        .with_context(|| path.display().to_string())
        .map_err(data)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p)
                .with_context(|| format!("cannot create {}", p.display()))
                .map_err(data)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_score(args: ScoreArgs) -> Outcome {
    let rule = args.rule.rule().map_err(usage)?;
    let spec = MeasureSpec {
        quantity: match args.quantity {
            QuantityArg::Tu => Quantity::Total,
            QuantityArg::Au => Quantity::Aleatoric,
            QuantityArg::Eu => Quantity::Epistemic,
        },
        predictor: match args.predictor {
            PredictorArg::A => Predictor::Single,
            PredictorArg::B => Predictor::Average,
            PredictorArg::C => Predictor::Sampled,
        },
        truth: match args.truth {
            TruthArg::One => Truth::Reference,
            TruthArg::Two => Truth::Predictive,
            TruthArg::Three => Truth::Ensemble,
        },
        rule,
        pairs: match args.pairs {
            PairsArg::All => Pairs::All,
            PairsArg::Offdiag => Pairs::OffDiagonal,
        },
        reverse: args.reverse,
    };
    let items = open_items(&args.input)?;
    let records = score_dataset(&spec, &items).map_err(data)?;
    if args.finite {
        if let Some(r) = records.iter().find(|r| r.value.is_infinite()) {
            return Err(data(anyhow!("item {}: {} is infinite", r.id, spec)));
        }
    }
    write_scores(&records, sink(args.out.as_deref())?).map_err(data)
}

fn flags_by_id(args: &EvalArgs, index: usize) -> Result<HashMap<String, bool>, Failure> {
    if let Some(path) = args.flags.get(index) {
        let file = File::open(path)
            .with_context(|| format!("cannot open {}", path.display()))
            .map_err(data)?;
        let flags = read_flags(file)
            .with_context(|| path.display().to_string())
            .map_err(data)?;
        return Ok(flags.into_iter().collect());
    }
    let path = &args.input[index];
    let mut out = HashMap::new();
    for item in open_items(path)? {
        let flag = if args.labels {
            let correct = is_correct(&item)
                .map_err(data)?
                .ok_or_else(|| data(anyhow!("item {} has no label", item.id)))?;
            match args.task {
                Task::Detect => !correct,
                Task::Retain => correct,
            }
        } else {
            item.flag
                .ok_or_else(|| data(anyhow!("item {} has no flag", item.id)))?
        };
        out.insert(item.id, flag);
    }
    Ok(out)
}

fn run_eval(args: EvalArgs) -> Outcome {
    let sources = args.input.len() + args.flags.len();
    if sources != args.scores.len() {
        return Err(usage(anyhow!(
            "give one --in or --flags per --scores ({} vs {})",
            sources,
            args.scores.len()
        )));
    }
    if !(args.level > 0.0 && args.level <= 1.0) {
        return Err(usage(anyhow!("--level must be in (0, 1]")));
    }
    if !(0.0..1.0).contains(&args.fmin) {
        return Err(usage(anyhow!("--fmin must be in [0, 1)")));
    }

    let header: &[&str] = match args.task {
        Task::Detect => &["auroc", "aupr", "fpr@tpr"],
        Task::Retain => &["auarc", "accuracy"],
    };
    let mut rows: Vec<(String, usize, Vec<f64>)> = Vec::new();
    for (i, path) in args.scores.iter().enumerate() {
        let file = File::open(path)
            .with_context(|| format!("cannot open {}", path.display()))
            .map_err(data)?;
        let records = read_scores(file)
            .with_context(|| path.display().to_string())
            .map_err(data)?;
        let flags = flags_by_id(&args, i)?;
        let mut scores = Vec::with_capacity(records.len());
        let mut marks = Vec::with_capacity(records.len());
        for r in &records {
            let flag = flags
                .get(&r.id)
                .ok_or_else(|| data(anyhow!("no flag for item {}", r.id)))?;
            scores.push(r.value);
            marks.push(*flag);
        }
        let values = match args.task {
            Task::Detect => {
                let d = DetectionSet::new(scores, marks).map_err(data)?;
                vec![
                    auroc(&d),
                    aupr(&d),
                    fpr_at_tpr(&d, args.level).map_err(usage)?,
                ]
            }
            Task::Retain => {
                let r = RetentionSet::new(scores, marks).map_err(data)?;
                vec![auarc(&r, args.fmin).map_err(usage)?, r.accuracy()]
            }
        };
        rows.push((path.display().to_string(), records.len(), values));
    }

    let mut out = io::stdout().lock();
    let mut emit = || -> io::Result<()> {
        write!(out, "dataset\tn")?;
        for h in header {
            write!(out, "\t{h}")?;
        }
        writeln!(out)?;
        for (name, n, values) in &rows {
            write!(out, "{name}\t{n}")?;
            for v in values {
                write!(out, "\t{v:.6}")?;
            }
            writeln!(out)?;
        }
        if rows.len() > 1 {
            let total: usize = rows.iter().map(|r| r.1).sum();
            write!(out, "macro\t{total}")?;
            for j in 0..header.len() {
                let mean = rows.iter().map(|r| r.2[j]).sum::<f64>() / rows.len() as f64;
                write!(out, "\t{mean:.6}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    };
    emit().map_err(data)
}

fn run_synth(cmd: SynthCommand) -> Outcome {
    match cmd {
        SynthCommand::Beta(args) => synth_beta(args),
        SynthCommand::Dirichlet(args) => {
            let cfg = args.ensemble.config().map_err(usage)?;
            let items = dirichlet_ensemble(&cfg).map_err(data)?;
            write_items(&items, sink(args.ensemble.out.as_deref())?).map_err(data)
        }
        SynthCommand::Detection(args) => {
            let cfg = args.ensemble.config().map_err(usage)?;
            if !(args.spread_lo > 0.0 && args.spread_lo < args.spread_hi) {
                return Err(usage(anyhow!("need 0 < --spread-lo < --spread-hi")));
            }
            let items = detection_scenario(&cfg, args.spread_lo, args.spread_hi).map_err(data)?;
            write_items(&items, sink(args.ensemble.out.as_deref())?).map_err(data)
        }
    }
}

fn synth_beta(args: BetaArgs) -> Outcome {
    let post = BetaPosterior::new(args.a, args.b).map_err(usage)?;
    if args.n < 2 {
        return Err(usage(anyhow!("--n must be at least 2")));
    }
    if args.grid == 0 {
        return Err(usage(anyhow!("--grid must be positive")));
    }
    let item = beta_bernoulli_item(&post, args.n, args.seed).map_err(data)?;
    write_items(std::slice::from_ref(&item), sink(args.out.as_deref())?).map_err(data)?;

    let oracle = beta_bernoulli_oracle(&post);
    let sidecar = format!(
        "{{\"a\":{},\"b\":{},\"au_b\":{},\"au_c\":{},\"eu_c2\":{}}}\n",
        post.a(),
        post.b(),
        oracle.au_b,
        oracle.au_c,
        oracle.eu_c2
    );
    let oracle_path = args.oracle.clone().or_else(|| {
        args.out.as_ref().map(|p| {
            let mut name = p.clone().into_os_string();
            name.push(".oracle.json");
            PathBuf::from(name)
        })
    });
    match oracle_path {
        Some(p) => std::fs::write(&p, sidecar)
            .with_context(|| format!("cannot write {}", p.display()))
            .map_err(data)?,
        None => eprint!("{sidecar}"),
    }

    if let Some(path) = args.plot {
        let rows = beta_grid(&post, &item, args.grid).map_err(data)?;
        let svg = plot::beta_svg(&post, &oracle, &rows);
        std::fs::write(&path, svg)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(data)?;
    }
    Ok(())
}

fn run_audit(args: AuditArgs) -> Outcome {
    let rule = args.rule.rule().map_err(usage)?;
    if args.tol.is_nan() || args.tol < 0.0 {
        return Err(usage(anyhow!("--tol must be nonnegative")));
    }
    let items = open_items(&args.input)?;

    // worst deviation and failure count per identity, in first-seen order
    let mut worst: Vec<(String, f64, usize)> = Vec::new();
    let mut failed_items = 0usize;
    for item in &items {
        let report = audit_identities_with_rule(item, rule, args.tol)
            .map_err(|e| data(anyhow!("item {}: {e}", item.id)))?;
        if !report.passed {
            failed_items += 1;
        }
        if args.verbose {
            println!("# {}\n{report}", item.id);
        }
        for check in &report.checks {
            if check.status == uncq_core::CheckStatus::NotApplicable {
                continue;
            }
            let failed = (check.status == uncq_core::CheckStatus::Fail) as usize;
            match worst.iter_mut().find(|w| w.0 == check.name) {
                Some(w) => {
                    w.1 = w.1.max(check.deviation);
                    w.2 += failed;
                }
                None => worst.push((check.name.clone(), check.deviation, failed)),
            }
        }
    }
    println!("identity\tworst_deviation\tfailures");
    for (name, dev, fails) in &worst {
        println!("{name}\t{dev:e}\t{fails}");
    }
    println!(
        "items {} failed {} rule {} tol {:e}",
        items.len(),
        failed_items,
        rule,
        args.tol
    );
    if failed_items > 0 {
        return Err(Failure {
            code: EXIT_AUDIT,
            error: anyhow!("{failed_items} item(s) failed the identity audit"),
        });
    }
    Ok(())
}
