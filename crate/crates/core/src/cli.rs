//! Command-line experiment harness.
//!
//! Every experiment produces one [`RunReport`]. Reports are deterministic for
//! a fixed configuration apart from `elapsed_ms`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::deriv::{
    adversarial_oracle, check_derivation, check_oracle_consistency, check_two_local, identity_map, induced_map,
    inner_derivation, maps_equal, seeded_rng, Domain, Failure, VerificationReport, WitnessOracle,
    EXHAUSTIVE_PAIR_LIMIT, SAMPLED_ELEMENTS, SAMPLED_PAIRS,
};
use crate::error::{Error, Result};
use crate::extend::{
    check_restriction, extend_corner_derivation, extend_derivation_to_n, extend_two_local_to_n, extension_witness,
    prop9_outcome, CornerDerivation,
};
use crate::extract::{extract_witness_with, verify_extraction, verify_lemma2, verify_lemma3, ExtractOptions};
use crate::matrix::{commutator, corner_embed, CornerContext, Matrix, MatrixRing};
use crate::rings::Ring;
use crate::twogen::{check_prop10_oracle, generate_subring};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;

const WITNESS_STREAM: u64 = 3;
const GENERATOR_STREAM: u64 = 4;
const DEFAULT_WITNESS_SAMPLES: usize = 100;
const DEFAULT_TWO_LOCAL_PAIRS: usize = 1000;
const LEMMA3_LIMIT: u64 = 1 << 16;

#[derive(Debug, Parser)]
#[command(name = "adlocal", version, about = "Exact checks of inner 2-local derivations on matrix rings")]
pub struct Cli {
    #[command(subcommand)]
    pub experiment: Experiment,

    /// Base ring: `zmod:m`, `poly:m:k` or `mat:<ring>:n`.
    #[arg(long, global = true, default_value = "zmod:2")]
    pub ring: String,

    /// Matrix dimension.
    #[arg(long, global = true, default_value_t = 2)]
    pub n: usize,

    #[arg(long, global = true, env = "ADLOCAL_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,

    /// Run extraction over a non-commutative base anyway.
    #[arg(long, global = true)]
    pub force: bool,

    /// Sampled elements for element-wise checks on large carriers.
    #[arg(long, global = true, default_value_t = SAMPLED_ELEMENTS)]
    pub samples: usize,

    /// Sampled pairs for derivation checks on large carriers.
    #[arg(long, global = true, default_value_t = SAMPLED_PAIRS)]
    pub pairs: usize,

    /// Sampled pairs for 2-locality checks on large carriers.
    #[arg(long = "two-local-pairs", global = true, default_value_t = DEFAULT_TWO_LOCAL_PAIRS)]
    pub two_local_pairs: usize,

    /// Number of seeded hidden witnesses (or generator pairs). Without it,
    /// small carriers are run exhaustively and large ones with 100 samples.
    #[arg(long, global = true)]
    pub witnesses: Option<usize>,

    /// Map checked by `two-local-check`.
    #[arg(long, global = true, value_enum, default_value_t = MapKind::Inner)]
    pub map: MapKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Experiment {
    /// Extract and verify a witness for every hidden element.
    ExtractAll,
    /// Check the unit formula and its intermediate identities.
    Lemma2,
    /// Check diagonal differences of elements with equal brackets against x_o.
    Lemma3,
    /// Extend inner corner derivations and check the results.
    ExtendDeriv,
    /// Extend corner oracles to M_n and check restriction and 2-locality.
    #[command(name = "extend-2local")]
    Extend2Local,
    /// Extend, extract and compress back to the corner.
    Prop9,
    /// Two-generated subrings with additive inner 2-local maps.
    Prop10,
    /// Brute-force 2-locality check.
    TwoLocalCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ExtractAll => "extract-all",
            Experiment::Lemma2 => "lemma2",
            Experiment::Lemma3 => "lemma3",
            Experiment::ExtendDeriv => "extend-deriv",
            Experiment::Extend2Local => "extend-2local",
            Experiment::Prop9 => "prop9",
            Experiment::Prop10 => "prop10",
            Experiment::TwoLocalCheck => "two-local-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    /// `ad(a)` from the adversarial oracle, for each hidden `a`.
    Inner,
    /// The identity map (a negative control).
    Identity,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub ring_spec: String,
    pub ring: Arc<Ring>,
    pub n: usize,
    pub seed: u64,
    pub force: bool,
    pub samples: usize,
    pub pairs: usize,
    pub two_local_pairs: usize,
    pub witnesses: Option<usize>,
    pub map: MapKind,
}

impl ExperimentConfig {
    pub fn from_cli(cli: &Cli) -> Result<ExperimentConfig> {
        let ring = Ring::from_spec(&cli.ring)?;
        if cli.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", cli.n)));
        }
        for (name, value) in [
            ("samples", cli.samples),
            ("pairs", cli.pairs),
            ("two-local-pairs", cli.two_local_pairs),
            ("witnesses", cli.witnesses.unwrap_or(1)),
        ] {
            if value == 0 {
                return Err(Error::Config(format!("--{name} must be positive")));
            }
        }
        Ok(ExperimentConfig {
            experiment: cli.experiment,
            ring_spec: cli.ring.clone(),
            ring,
            n: cli.n,
            seed: cli.seed,
            force: cli.force,
            samples: cli.samples,
            pairs: cli.pairs,
            two_local_pairs: cli.two_local_pairs,
            witnesses: cli.witnesses,
            map: cli.map,
        })
    }

    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            experiment: self.experiment.name(),
            ring: self.ring_spec.clone(),
            n: self.n,
            seed: self.seed,
            force: self.force,
            samples: self.samples,
            pairs: self.pairs,
            two_local_pairs: self.two_local_pairs,
            witnesses: self.witnesses,
            map: self.map,
        }
    }

    fn carrier(&self, n: usize) -> Result<MatrixRing> {
        MatrixRing::new(&self.ring, n)
    }

    fn element_domain(&self, carrier: &MatrixRing) -> Domain {
        Domain::elements_with(carrier, self.seed, self.samples)
    }

    /// Hidden elements to run over: every element of a small carrier in
    /// canonical order, otherwise seeded samples.
    fn hidden(&self, carrier: &MatrixRing) -> Result<Vec<Matrix>> {
        let small = carrier.cardinality().is_some_and(|c| c <= EXHAUSTIVE_PAIR_LIMIT);
        match self.witnesses {
            None if small => carrier.enumerate(),
            count => {
                let mut rng = seeded_rng(self.seed, WITNESS_STREAM);
                Ok((0..count.unwrap_or(DEFAULT_WITNESS_SAMPLES)).map(|_| carrier.sample(&mut rng)).collect())
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub experiment: &'static str,
    pub ring: String,
    pub n: usize,
    pub seed: u64,
    pub force: bool,
    pub samples: usize,
    pub pairs: usize,
    pub two_local_pairs: usize,
    pub witnesses: Option<usize>,
    pub map: MapKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

pub type Literal = Vec<Vec<String>>;

#[derive(Clone, Debug, Serialize)]
pub struct FailureRecord {
    pub check: String,
    pub inputs: Vec<Literal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Literal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub got: Option<Literal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl From<&Failure> for FailureRecord {
    fn from(f: &Failure) -> Self {
        FailureRecord {
            check: f.check.clone(),
            inputs: f.inputs.iter().map(Matrix::literal).collect(),
            expected: f.expected.as_ref().map(Matrix::literal),
            got: f.got.as_ref().map(Matrix::literal),
            message: None,
        }
    }
}

/// Field order is the serialized key order.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub status: Status,
    pub checks: u64,
    pub failures: Vec<FailureRecord>,
    pub witnesses: Vec<Literal>,
    pub seed: u64,
    pub elapsed_ms: u64,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => EXIT_PASS,
            Status::Fail => EXIT_FAIL,
            Status::Error => EXIT_CONFIG,
        }
    }
}

struct Outcome {
    report: VerificationReport,
    witnesses: Vec<Matrix>,
}

/// Prepends `context` to every failure's inputs.
fn tagged(mut report: VerificationReport, context: &[Matrix]) -> VerificationReport {
    for f in &mut report.failures {
        f.inputs.splice(0..0, context.iter().cloned());
    }
    report
}

fn merge(parts: impl IntoIterator<Item = VerificationReport>) -> VerificationReport {
    let mut total = VerificationReport::default();
    for part in parts {
        total.absorb(part);
    }
    total
}

pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let outcome = match config.experiment {
        Experiment::ExtractAll => extract_all(config)?,
        Experiment::Lemma2 => lemma2(config)?,
        Experiment::Lemma3 => lemma3(config)?,
        Experiment::ExtendDeriv => extend_deriv(config)?,
        Experiment::Extend2Local => extend_2local(config)?,
        Experiment::Prop9 => prop9(config)?,
        Experiment::Prop10 => prop10(config)?,
        Experiment::TwoLocalCheck => two_local_check(config)?,
    };
    let report = outcome.report;
    Ok(RunReport {
        config: config.echo(),
        status: if report.passed() { Status::Pass } else { Status::Fail },
        checks: report.checked,
        failures: report.failures.iter().map(FailureRecord::from).collect(),
        witnesses: outcome.witnesses.iter().map(Matrix::literal).collect(),
        seed: config.seed,
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}

fn extract_all(config: &ExperimentConfig) -> Result<Outcome> {
    let carrier = config.carrier(config.n)?;
    let opts = ExtractOptions { force: config.force, ..Default::default() };
    let domain = config.element_domain(&carrier);
    let parts = config
        .hidden(&carrier)?
        .par_iter()
        .map(|a| {
            let oracle = adversarial_oracle(a);
            let state = extract_witness_with(&oracle, config.n, opts)?;
            let report = verify_extraction(&state, &oracle, &domain)?;
            Ok((tagged(report, std::slice::from_ref(a)), state.abar))
        })
        .collect::<Result<Vec<_>>>()?;
    let (reports, witnesses): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    Ok(Outcome { report: merge(reports), witnesses })
}

fn lemma2(config: &ExperimentConfig) -> Result<Outcome> {
    let n = config.n;
    let carrier = config.carrier(n)?;
    let parts = config
        .hidden(&carrier)?
        .par_iter()
        .map(|a| {
            let oracle = adversarial_oracle(a);
            let mut report = VerificationReport::default();
            for i in 1..=n {
                for j in (1..=n).filter(|&j| j != i) {
                    report.absorb(verify_lemma2(&oracle, n, i, j)?);
                }
            }
            Ok(tagged(report, std::slice::from_ref(a)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome { report: merge(parts), witnesses: Vec::new() })
}

/// Every pair `(b, c)` with `[b, x_o] = [c, x_o]`, grouped by the bracket.
fn lemma3(config: &ExperimentConfig) -> Result<Outcome> {
    let carrier = config.carrier(config.n)?;
    if carrier.cardinality().is_none_or(|c| c > LEMMA3_LIMIT) {
        return Err(Error::Config(format!("lemma3 enumerates the carrier; {carrier} is too large")));
    }
    let x_o = carrier.staircase()?;
    let elements = carrier.enumerate()?;
    let brackets: Vec<Matrix> = elements.par_iter().map(|b| commutator(b, &x_o)).collect::<Result<_>>()?;
    let mut classes: BTreeMap<&Matrix, Vec<usize>> = BTreeMap::new();
    for (i, t) in brackets.iter().enumerate() {
        classes.entry(t).or_default().push(i);
    }
    let parts = (0..elements.len())
        .into_par_iter()
        .map(|i| {
            let mut report = VerificationReport::default();
            for &j in &classes[&brackets[i]] {
                report.absorb(verify_lemma3(&carrier, &elements[i], &elements[j])?);
            }
            Ok(report)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome { report: merge(parts), witnesses: Vec::new() })
}

fn extend_deriv(config: &ExperimentConfig) -> Result<Outcome> {
    let corner = config.carrier(2)?;
    let parts = config
        .hidden(&corner)?
        .par_iter()
        .map(|b| {
            let d = inner_derivation(b).with_domain(Domain::pairs_with(&corner, config.seed, config.pairs));
            let ext = extend_corner_derivation(&CornerDerivation::new(d.clone()))?;
            let ext = ext.clone().with_domain(Domain::pairs_with(ext.carrier(), config.seed, config.pairs));
            let mut report = check_derivation(&ext)?;
            report.absorb(check_restriction(&ext, &d, config.seed)?);

            let w = extension_witness(b)?;
            let elements = config.element_domain(ext.carrier()).elements(ext.carrier())?;
            let eq = maps_equal(|x| ext.evaluate(x), |x| commutator(&w, x).expect("same carrier"), &elements);
            report.checked += eq.checked;
            if let Some(diff) = eq.first_difference {
                report.record(Failure::new("inner-to-inner", vec![diff.at], diff.right, diff.left));
            }

            if config.n > 2 {
                match extend_derivation_to_n(&d, config.n) {
                    Ok(trace) => {
                        for r in trace.reports {
                            report.absorb(r);
                        }
                        report.absorb(check_restriction(&trace.result, &d, config.seed)?);
                    }
                    Err(Error::NotADerivation(msg)) => {
                        report.record(Failure::bare(format!("derivation: {msg}"), Vec::new()));
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok((tagged(report, std::slice::from_ref(b)), w))
        })
        .collect::<Result<Vec<_>>>()?;
    let (reports, witnesses): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    Ok(Outcome { report: merge(reports), witnesses })
}

fn extend_2local(config: &ExperimentConfig) -> Result<Outcome> {
    if config.n < 3 {
        return Err(Error::Config("extend-2local needs n > 2".into()));
    }
    let corner = config.carrier(2)?;
    let ctx = CornerContext::new(&config.ring, 2, config.n)?;
    let corner_elements = config.element_domain(&corner).elements(&corner)?;
    let reports = config
        .hidden(&corner)?
        .iter()
        .map(|a| {
            let delta: Arc<dyn WitnessOracle> = Arc::new(adversarial_oracle(a));
            let ext = extend_two_local_to_n(delta.clone(), config.n)?;
            let restriction = corner_elements
                .par_iter()
                .map(|x| {
                    let up = corner_embed(x, &ctx)?;
                    let expected = corner_embed(&delta.induced(x)?, &ctx)?;
                    let got = ext.oracle.induced(&up)?;
                    Ok((got != expected).then(|| Failure::new("restriction", vec![up], expected, got)))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut report = VerificationReport { checked: corner_elements.len() as u64, ..Default::default() };
            for f in restriction.into_iter().flatten() {
                report.record(f);
            }
            let carrier = ext.oracle.carrier().clone();
            let anchors = crate::deriv::anchors(&carrier);
            report.absorb(check_oracle_consistency(ext.oracle.as_ref(), &anchors)?);
            let map = induced_map(ext.oracle.clone()).with_domain(Domain::pairs_with(
                &carrier,
                config.seed,
                config.two_local_pairs,
            ));
            report.absorb(check_two_local(&map)?);
            Ok(tagged(report, std::slice::from_ref(a)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome { report: merge(reports), witnesses: Vec::new() })
}

fn prop9(config: &ExperimentConfig) -> Result<Outcome> {
    let corner = config.carrier(2)?;
    let opts = ExtractOptions { force: config.force, ..Default::default() };
    let parts = config
        .hidden(&corner)?
        .par_iter()
        .map(|a| {
            let out = prop9_outcome(Arc::new(adversarial_oracle(a)), config.n, opts, config.seed)?;
            Ok((tagged(out.report, std::slice::from_ref(a)), out.c))
        })
        .collect::<Result<Vec<_>>>()?;
    let (reports, witnesses): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    Ok(Outcome { report: merge(reports), witnesses })
}

/// `(x, y, a)`: generators and the hidden element behind the oracle. The
/// pair `(e12, e21)` with `a = e12` always comes first.
fn prop10_triples(config: &ExperimentConfig, carrier: &MatrixRing) -> Result<Vec<[Matrix; 3]>> {
    let e12 = carrier.unit(1, 2)?;
    let mut out = vec![[e12.clone(), carrier.unit(2, 1)?, e12]];
    let mut rng = seeded_rng(config.seed, GENERATOR_STREAM);
    for _ in 0..config.witnesses.unwrap_or(DEFAULT_WITNESS_SAMPLES) {
        out.push([carrier.sample(&mut rng), carrier.sample(&mut rng), carrier.sample(&mut rng)]);
    }
    Ok(out)
}

fn prop10(config: &ExperimentConfig) -> Result<Outcome> {
    let carrier = config.carrier(config.n)?;
    let parts = prop10_triples(config, &carrier)?
        .par_iter()
        .map(|[x, y, a]| {
            let s = generate_subring(x, y)?;
            let out = check_prop10_oracle(&s, &adversarial_oracle(a))?;
            Ok((tagged(out.report, &[x.clone(), y.clone(), a.clone()]), out.d))
        })
        .collect::<Result<Vec<_>>>()?;
    let (reports, witnesses): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    Ok(Outcome { report: merge(reports), witnesses })
}

fn two_local_check(config: &ExperimentConfig) -> Result<Outcome> {
    let carrier = config.carrier(config.n)?;
    let domain = Domain::pairs_with(&carrier, config.seed, config.two_local_pairs);
    let report = match config.map {
        MapKind::Identity => check_two_local(&identity_map(&carrier).with_domain(domain))?,
        MapKind::Inner => {
            let reports = config
                .hidden(&carrier)?
                .iter()
                .map(|a| {
                    let map = induced_map(Arc::new(adversarial_oracle(a))).with_domain(domain.clone());
                    Ok(tagged(check_two_local(&map)?, std::slice::from_ref(a)))
                })
                .collect::<Result<Vec<_>>>()?;
            merge(reports)
        }
    };
    Ok(Outcome { report, witnesses: Vec::new() })
}

pub fn render(report: &RunReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    text
}

/// Writes the report to `path`, or to standard output.
pub fn emit_report(report: &RunReport, path: Option<&Path>) -> Result<()> {
    let text = render(report);
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn error_report(config: &ExperimentConfig, err: &Error) -> RunReport {
    RunReport {
        config: config.echo(),
        status: Status::Error,
        checks: 0,
        failures: vec![FailureRecord {
            check: "error".into(),
            inputs: Vec::new(),
            expected: None,
            got: None,
            message: Some(err.to_string()),
        }],
        witnesses: Vec::new(),
        seed: config.seed,
        elapsed_ms: 0,
    }
}

/// Parses arguments, runs the experiment and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let config = match ExperimentConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("adlocal: {e}");
            return EXIT_CONFIG;
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("adlocal: {e}");
            let code = if matches!(e, Error::Io(_)) { EXIT_IO } else { EXIT_CONFIG };
            if let Some(path) = &cli.json {
                if emit_report(&error_report(&config, &e), Some(path)).is_err() {
                    return EXIT_IO;
                }
            }
            return code;
        }
    };
    if let Err(e) = emit_report(&report, cli.json.as_deref()) {
        eprintln!("adlocal: {e}");
        return EXIT_IO;
    }
    if cli.json.is_some() {
        println!("{}: {} checks, {} failures", config.experiment.name(), report.checks, report.failures.len());
    }
    report.exit_code()
}
