use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use lss_core::dataset::{
    self, adjudicate, balance, clean, filter_by_length, ratio_histogram, validate,
    AnnotatedExample, BalanceTarget, DatasetError, Outcome, RawAnnotationRecord, Split,
};
use lss_core::generator::{
    generate, GenerationInput, GeneratorError, GeneratorSpec, PromptTemplate, RemoteSettings,
    TemplateError,
};
use lss_core::harness::{
    compare_models, emit_report, eval_correlation, eval_generation, load_corpus, BuiltinMetric,
    CorrelationInputs, EvalOptions, HarnessError, Report, ReportFormat, ScorerError, ScorerPair,
    ScorerRegistry, SubprocessScorer,
};
use lss_core::stats::{self, agreement_tally};
use lss_core::{lss_faithfulness, tokenize, BleuConfig, NormalizationPolicy};
use serde_json::Value;

use crate::args::{
    Cli, Command, DataArg, DataOut, DatasetCommand, EvalCommand, GeneratorArgs, GeneratorKind,
    ScoreArgs,
};
use crate::Failure;

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<GeneratorError> for Failure {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::Invalid(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Generator(g) => g.into(),
            HarnessError::Scorer(_) => Failure::Remote(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<TemplateError> for Failure {
    fn from(e: TemplateError) -> Self {
        match e {
            TemplateError::Read { .. } => Failure::Data(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

struct Context {
    policy: NormalizationPolicy,
    options: EvalOptions,
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    let bleu = BleuConfig::new(g.bleu_max_n).map_err(|e| Failure::Usage(e.to_string()))?;
    let policy = NormalizationPolicy {
        lowercase: !g.no_lowercase,
        ..NormalizationPolicy::default()
    };
    let ctx = Context {
        policy,
        options: EvalOptions {
            policy,
            bleu,
            jobs: g.jobs,
        },
    };
    match cli.command {
        Command::Dataset(cmd) => dataset_command(cmd, &ctx),
        Command::Score(args) => score(args, &ctx),
        Command::Generate(args) => generate_command(&args.io, &args.generator, &ctx),
        Command::Eval(cmd) => eval_command(cmd, &ctx),
        Command::Validate(DataArg { data }) => {
            let examples = dataset::load(&data)?;
            let violations = validate(&examples, ctx.policy);
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for v in &violations {
                let _ = writeln!(
                    out,
                    "{}\t{}",
                    v.id,
                    serde_json::to_string(v).unwrap_or_default()
                );
            }
            let _ = writeln!(out, "{} violations", violations.len());
            if violations.is_empty() {
                Ok(())
            } else {
                Err(Failure::Data(format!(
                    "{} examples violate the subsequence invariant",
                    violations.len()
                )))
            }
        }
    }
}

/// Refuse to overwrite an input.
fn check_out(input: &Path, out: &Path) -> Result<(), Failure> {
    let same = match (input.canonicalize(), out.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        return Err(Failure::Usage(format!(
            "--out {} would overwrite the input",
            out.display()
        )));
    }
    Ok(())
}

fn dataset_command(cmd: DatasetCommand, ctx: &Context) -> Result<(), Failure> {
    match cmd {
        DatasetCommand::Clean(io) => {
            check_out(&io.data.data, &io.out)?;
            let (cleaned, report) = clean(dataset::load(&io.data.data)?);
            dataset::save(&io.out, &cleaned)?;
            print!("{report}");
        }
        DatasetCommand::Balance { io, target } => {
            check_out(&io.data.data, &io.out)?;
            let target = parse_balance_target(&target)?;
            let (kept, report) = balance(dataset::load(&io.data.data)?, target, ctx.policy);
            dataset::save(&io.out, &kept)?;
            print!("{report}");
        }
        DatasetCommand::Adjudicate { io, unresolved } => {
            check_out(&io.data.data, &io.out)?;
            adjudicate_command(&io, unresolved.as_deref(), ctx)?;
        }
        DatasetCommand::Stats(DataArg { data }) => {
            let examples = dataset::load(&data)?;
            let hist = ratio_histogram(&examples, ctx.policy);
            println!("examples\t{}", examples.len());
            for split in [Split::Train, Split::Validation, Split::Test] {
                println!(
                    "{split}\t{}",
                    examples.iter().filter(|e| e.split == split).count()
                );
            }
            println!(
                "rated\t{}",
                examples.iter().filter(|e| e.rating.is_some()).count()
            );
            print!("{hist}");
        }
        DatasetCommand::FilterLength { io, max_tokens } => {
            check_out(&io.data.data, &io.out)?;
            let (kept, report) =
                filter_by_length(dataset::load(&io.data.data)?, max_tokens, ctx.policy);
            dataset::save(&io.out, &kept)?;
            println!("input: {}", report.input);
            println!("removed: {}", report.removed);
            println!("removed_fraction: {}", report.removed_fraction);
        }
    }
    Ok(())
}

fn parse_balance_target(s: &str) -> Result<BalanceTarget, Failure> {
    if s == "mean" {
        return Ok(BalanceTarget::MeanOfOtherBuckets);
    }
    if let Ok(n) = s.parse::<usize>() {
        return Ok(BalanceTarget::Keep(n));
    }
    match s.parse::<f64>() {
        Ok(p) if (0.0..=1.0).contains(&p) => Ok(BalanceTarget::Proportion(p)),
        _ => Err(Failure::Usage(format!(
            "--target {s:?}: expected `mean`, a count, or a fraction in [0, 1]"
        ))),
    }
}

fn adjudicate_command(
    io: &DataOut,
    unresolved_path: Option<&Path>,
    ctx: &Context,
) -> Result<(), Failure> {
    let records: Vec<RawAnnotationRecord> = dataset::read_jsonl(&io.data.data)?;
    let mut consensus = Vec::new();
    let mut unresolved = Vec::new();
    for record in &records {
        match adjudicate(record, ctx.policy)?.outcome {
            Outcome::Consensus(ex) => consensus.push(ex),
            Outcome::Unresolved(r) => unresolved.push(r),
        }
    }
    dataset::save(&io.out, &consensus)?;
    if let Some(path) = unresolved_path {
        dataset::write_jsonl(path, &unresolved)?;
    }

    println!("records: {}", records.len());
    println!("consensus: {}", consensus.len());
    println!("unresolved: {}", unresolved.len());
    if !records.is_empty() {
        let triples: Vec<[&str; 3]> = records
            .iter()
            .map(|r| [0, 1, 2].map(|i| r.annotations[i].lss.as_str()))
            .collect();
        if let Ok(t) = agreement_tally(&triples, ctx.policy) {
            println!("all_same: {:.2}", t.all_same);
            println!("two_same: {:.2}", t.two_same);
            println!("all_different: {:.2}", t.all_different);
        }
    }
    print_rating_agreement(&records);
    Ok(())
}

/// Pairwise QWK between annotator positions, on records rated by all three.
fn print_rating_agreement(records: &[RawAnnotationRecord]) {
    let rated: Vec<[u32; 3]> = records
        .iter()
        .filter_map(|r| {
            let ratings: Vec<u32> = r
                .annotations
                .iter()
                .filter_map(|a| a.rating.map(u32::from))
                .collect();
            <[u32; 3]>::try_from(ratings).ok()
        })
        .collect();
    if rated.is_empty() {
        return;
    }
    println!("rated_triples: {}", rated.len());
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let a: Vec<u32> = rated.iter().map(|r| r[i]).collect();
        let b: Vec<u32> = rated.iter().map(|r| r[j]).collect();
        match stats::quadratic_weighted_kappa(&a, &b, 5) {
            Ok(q) => println!("rating_qwk_{i}_{j}: {q:.4}"),
            Err(e) => println!("rating_qwk_{i}_{j}: n/a ({e})"),
        }
    }
    if let Ok(q) = stats::mean_pairwise_qwk(&rated, 5) {
        println!("rating_qwk_mean: {q:.4}");
    }
}

fn score(args: ScoreArgs, ctx: &Context) -> Result<(), Failure> {
    let bleu = ctx.options.bleu;
    if !args.pairs {
        let claim = tokenize(args.claim.as_deref().unwrap_or_default(), ctx.policy);
        let lss = tokenize(args.lss.as_deref().unwrap_or_default(), ctx.policy);
        println!("{:?}", lss_faithfulness(&claim, &lss, bleu).value());
        return Ok(());
    }
    let metric = if args.metric.eq_ignore_ascii_case("lss-bleu") {
        BuiltinMetric::Bleu
    } else {
        BuiltinMetric::from_name(&args.metric)
            .ok_or_else(|| Failure::Usage(format!("unknown metric {:?}", args.metric)))?
    };
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (idx, line) in stdin.lock().lines().enumerate() {
        let line = line.map_err(|e| Failure::Data(format!("stdin: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: ScorerPair = serde_json::from_str(&line)
            .map_err(|e| Failure::Data(format!("stdin line {}: {e}", idx + 1)))?;
        let s = metric.score(
            &tokenize(&pair.text_a, ctx.policy),
            &tokenize(&pair.text_b, ctx.policy),
            bleu,
        );
        writeln!(out, "{}", serde_json::json!({ "id": pair.id, "score": s }))
            .map_err(|e| Failure::Data(format!("stdout: {e}")))?;
    }
    Ok(())
}

fn parse_params(params: &[String]) -> Result<serde_json::Map<String, Value>, Failure> {
    params
        .iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--param {p:?}: expected KEY=VALUE")))?;
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_owned()));
            Ok((k.to_owned(), value))
        })
        .collect()
}

/// `default_capture` is used for remote batches when `--capture` is absent,
/// so every remote run can be replayed.
fn build_generator(
    args: &GeneratorArgs,
    default_capture: PathBuf,
) -> Result<GeneratorSpec, Failure> {
    let spec = match args.generator {
        GeneratorKind::Extractive => GeneratorSpec::Extractive,
        GeneratorKind::Identity => GeneratorSpec::Identity,
        GeneratorKind::Empty => GeneratorSpec::Empty,
        GeneratorKind::Replay => GeneratorSpec::Replay {
            path: args
                .replay_file
                .clone()
                .ok_or_else(|| Failure::Usage("--generator replay needs --replay-file".into()))?,
        },
        GeneratorKind::Remote => {
            let endpoint = args
                .endpoint
                .clone()
                .ok_or_else(|| Failure::Usage("--generator remote needs --endpoint".into()))?;
            let mut s = RemoteSettings::new(endpoint);
            s.template = PromptTemplate::resolve(&args.prompt_template)?;
            s.token_env = args.token_env.clone();
            s.max_in_flight = args.max_in_flight;
            s.retries = args.retries;
            s.timeout = Duration::from_secs(args.timeout_secs);
            s.parameters = parse_params(&args.params)?;
            s.capture = Some(args.capture.clone().unwrap_or(default_capture));
            GeneratorSpec::Remote(s)
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn generate_command(io: &DataOut, gen: &GeneratorArgs, ctx: &Context) -> Result<(), Failure> {
    check_out(&io.data.data, &io.out)?;
    let spec = build_generator(gen, io.out.with_extension("capture.jsonl"))?;
    let examples = dataset::load(&io.data.data)?;
    let inputs: Vec<GenerationInput> = examples.iter().map(GenerationInput::from).collect();
    let results = generate(&spec, &inputs, ctx.policy)?;
    dataset::write_jsonl(&io.out, &results)?;
    let failed = results.iter().filter(|r| r.failed()).count();
    let repaired = results.iter().filter(|r| r.was_repaired).count();
    println!("generated: {}", results.len());
    println!("repaired: {repaired}");
    println!("failed: {failed}");
    if failed > 0 {
        let first = results
            .iter()
            .find_map(|r| r.error.as_deref())
            .unwrap_or_default();
        return Err(Failure::Remote(format!(
            "{failed} generations failed; first: {first}"
        )));
    }
    Ok(())
}

fn write_reports(report: &dyn Report, dir: &Path, stem: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    for format in ReportFormat::ALL {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        emit_report(report, format, &path)?;
    }
    print!("{}", report.markdown());
    Ok(())
}

/// `name=kind[:arg]`
fn parse_system(s: &str, out: &Path) -> Result<(String, GeneratorSpec), Failure> {
    let usage = || Failure::Usage(format!("--system {s:?}: expected NAME=KIND[:ARG]"));
    let (name, rest) = s.split_once('=').ok_or_else(usage)?;
    let (kind, arg) = match rest.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (rest, None),
    };
    let kind = GeneratorKind::from_str_ci(kind).ok_or_else(usage)?;
    let args = GeneratorArgs {
        generator: kind,
        replay_file: (kind == GeneratorKind::Replay)
            .then(|| arg.map(PathBuf::from))
            .flatten(),
        endpoint: (kind == GeneratorKind::Remote)
            .then(|| arg.map(str::to_owned))
            .flatten(),
        prompt_template: "t5".into(),
        token_env: lss_core::generator::DEFAULT_TOKEN_ENV.into(),
        capture: None,
        max_in_flight: 4,
        retries: 2,
        timeout_secs: 60,
        params: vec![],
    };
    let spec = build_generator(&args, out.join(format!("capture-{name}.jsonl")))?;
    Ok((name.to_owned(), spec))
}

impl GeneratorKind {
    fn from_str_ci(s: &str) -> Option<Self> {
        <Self as clap::ValueEnum>::from_str(s, true).ok()
    }
}

fn eval_command(cmd: EvalCommand, ctx: &Context) -> Result<(), Failure> {
    match cmd {
        EvalCommand::Generation {
            data,
            systems,
            split,
            out,
        } => {
            let split = match split.as_str() {
                "all" => None,
                "train" => Some(Split::Train),
                "validation" => Some(Split::Validation),
                "test" => Some(Split::Test),
                other => return Err(Failure::Usage(format!("unknown split {other:?}"))),
            };
            let systems = systems
                .iter()
                .map(|s| parse_system(s, &out))
                .collect::<Result<Vec<_>, _>>()?;
            let gold = dataset::load(&data.data)?;
            let report = eval_generation(&gold, &systems, split, &ctx.options)?;
            write_reports(&report, &out, "generation")
        }
        EvalCommand::Correlation {
            data,
            generator,
            lss_star_replay_file,
            scorers,
            out,
        } => {
            let spec = build_generator(&generator, out.join("capture.jsonl"))?;
            let star = lss_star_replay_file.map(|path| GeneratorSpec::Replay { path });
            if let Some(s) = &star {
                s.validate()?;
            }
            let mut registry = ScorerRegistry::new();
            for s in &scorers {
                let (name, command) = s.split_once('=').ok_or_else(|| {
                    Failure::Usage(format!("--scorer {s:?}: expected NAME=COMMAND"))
                })?;
                let scorer = SubprocessScorer::from_command_line(name, command)
                    .ok_or_else(|| Failure::Usage(format!("--scorer {s:?}: empty command")))?;
                registry
                    .register(Arc::new(scorer))
                    .map_err(|e: ScorerError| Failure::Usage(e.to_string()))?;
            }
            let metrics = registry.all();
            let examples: Vec<AnnotatedExample> = dataset::load(&data.data)?;
            let inputs = CorrelationInputs {
                examples: &examples,
                generator: &spec,
                lss_star_generator: star.as_ref(),
                metrics: &metrics,
            };
            let report = eval_correlation(&inputs, &ctx.options)?;
            write_reports(&report, &out, "correlation")
        }
        EvalCommand::CompareModels {
            corpora,
            generator,
            max_tokens,
            out,
        } => {
            let spec = build_generator(&generator, out.join("capture.jsonl"))?;
            let corpora = corpora
                .iter()
                .map(|c| {
                    let (name, path) = c.split_once('=').ok_or_else(|| {
                        Failure::Usage(format!("--corpus {c:?}: expected NAME=PATH"))
                    })?;
                    Ok((name.to_owned(), load_corpus(Path::new(path))?))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            let report = compare_models(&corpora, &spec, max_tokens, &ctx.options)?;
            write_reports(&report, &out, "compare-models")
        }
    }
}
