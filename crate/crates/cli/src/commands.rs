use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use indexmap::IndexMap;
use rayon::prelude::*;

use ipvote_core::corpus::{corpus_stats, load_corpus};
use ipvote_core::ensemble::{
    evaluate_ensemble, fit_weights, parse_verdicts, predict_ensemble, verdicts_to_tsv,
};
use ipvote_core::members::{
    load_external_probabilities, predict_proba, train_member, MemberModel, SelectionMetric,
    TrainConfig,
};
use ipvote_core::metrics::{aggregate_scores, confusion_matrix};
use ipvote_core::synth::{self, SynthConfig};
use ipvote_core::tsv::write_atomic;
use ipvote_core::{EnsembleSpec, LabeledCorpus, ProbabilityTable, ScoreSummary, VoteMode};

use crate::args::*;
use crate::report::{render_stats, Report};
use crate::workspace::{RunManifest, Workspace};

pub struct Context {
    pub workspace: Workspace,
    pub seed: u64,
}

impl Context {
    pub fn new(workspace: &Path, seed: u64) -> Result<Self> {
        Ok(Context {
            workspace: Workspace::new(workspace)?,
            seed,
        })
    }

    fn path(&self, p: &Path) -> Result<PathBuf> {
        self.workspace.resolve(p)
    }

    fn rel(&self, p: &Path) -> String {
        self.workspace.relative(p)
    }

    fn manifest(&self, command: &str) -> RunManifest {
        RunManifest {
            workspace: self.workspace.root().to_path_buf(),
            command: command.to_owned(),
            seed: self.seed,
            ..RunManifest::default()
        }
    }

    fn write(&self, path: &Path, contents: &str) -> Result<()> {
        write_atomic(path, contents.as_bytes())?;
        Ok(())
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let ctx = Context::new(&cli.workspace, cli.seed)?;
    match cli.command {
        Command::Stats(a) => cmd_stats(&ctx, &a, out),
        Command::Synth(a) => cmd_synth(&ctx, &a, out),
        Command::Train(a) => cmd_train(&ctx, &a, out),
        Command::Predict(a) => cmd_predict(&ctx, &a, out),
        Command::FitWeights(a) => cmd_fit_weights(&ctx, &a, out),
        Command::Ensemble(a) => cmd_ensemble(&ctx, &a, out),
        Command::Report(a) => cmd_report(&ctx, &a, out),
    }
}

fn load_labeled(ctx: &Context, path: &Path) -> Result<LabeledCorpus> {
    Ok(load_corpus(&ctx.path(path)?, true)?)
}

/// Loads a corpus whose header decides whether it carries labels.
fn load_any(ctx: &Context, path: &Path) -> Result<LabeledCorpus> {
    let resolved = ctx.path(path)?;
    let file = fs::File::open(&resolved)
        .with_context(|| format!("cannot open {}", resolved.display()))?;
    let mut header = String::new();
    BufReader::new(file).read_line(&mut header)?;
    let labeled = header.trim_end_matches('\n') == "id\ttext\tlabel";
    Ok(load_corpus(&resolved, labeled)?)
}

fn load_tables(ctx: &Context, paths: &[PathBuf]) -> Result<Vec<ProbabilityTable>> {
    paths
        .iter()
        .map(|p| Ok(load_external_probabilities(&ctx.path(p)?)?))
        .collect()
}

pub fn cmd_stats(ctx: &Context, args: &StatsArgs, out: &mut dyn Write) -> Result<()> {
    let mut rows = Vec::with_capacity(args.corpus.len());
    for path in &args.corpus {
        let corpus = load_labeled(ctx, path)?;
        rows.push((corpus.split_name().to_owned(), corpus_stats(&corpus)?));
    }
    out.write_all(render_stats(&rows, args.format == Format::Tsv).as_bytes())?;
    Ok(())
}

pub fn cmd_synth(ctx: &Context, args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let config = SynthConfig {
        train_size: args.train_size,
        validation_size: args.validation_size,
        positive_rate: args.positive_rate,
        flip_rate: args.flip_rate,
        seed: ctx.seed,
        ..SynthConfig::default()
    };
    let (train, validation) = synth::generate(&config)?;
    let mut rows = Vec::new();
    for (corpus, target) in [(&train, &args.train_out), (&validation, &args.validation_out)] {
        let path = ctx.path(target)?;
        corpus.write(&path)?;
        rows.push((ctx.rel(&path), corpus_stats(corpus)?));
    }
    out.write_all(render_stats(&rows, false).as_bytes())?;
    Ok(())
}

pub fn cmd_train(ctx: &Context, args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    if args.members == 0 {
        bail!("--members must be at least 1");
    }
    let train = load_labeled(ctx, &args.train)?;
    let validation = load_labeled(ctx, &args.validation)?;
    let selection_metric = match args.select {
        Select::F1 => SelectionMetric::F1,
        Select::Accuracy => SelectionMetric::Accuracy,
    };
    let out_dir = ctx.path(&args.out_dir)?;

    let trained = (0..args.members)
        .into_par_iter()
        .map(|i| {
            let config = TrainConfig {
                epochs: args.epochs,
                learning_rate: args.learning_rate,
                l2: args.l2,
                seed: ctx.seed.wrapping_add(i as u64),
                selection_metric,
            };
            let member_id = format!("member-{i}");
            let member = train_member(&member_id, &train, &validation, &config)?;
            let table = predict_proba(&member.model, &validation)?;
            Ok((member_id, config.seed, member, table))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut manifest = ctx.manifest("train");
    manifest.corpora = vec![
        ctx.rel(&ctx.path(&args.train)?),
        ctx.rel(&ctx.path(&args.validation)?),
    ];
    writeln!(out, "member_id\tseed\tselected_epoch\tf1\taccuracy")?;
    for (member_id, seed, member, table) in &trained {
        let model_path = out_dir.join(format!("{member_id}.model"));
        let history_path = out_dir.join(format!("{member_id}.history.tsv"));
        let probs_path = out_dir.join(format!("{member_id}.{}.prob.tsv", validation.split_name()));
        member.model.save(&model_path)?;
        ctx.write(&history_path, &member.history.to_tsv())?;
        table.write(&probs_path)?;

        let best = member.history.records()[member.selected_epoch];
        writeln!(
            out,
            "{member_id}\t{seed}\t{}\t{}\t{}",
            member.selected_epoch, best.f1, best.accuracy
        )?;
        manifest.member_ids.push(member_id.clone());
        manifest.models.push(ctx.rel(&model_path));
        manifest.histories.push(ctx.rel(&history_path));
        manifest.probability_tables.push(ctx.rel(&probs_path));
    }
    ctx.write(&out_dir.join("manifest.json"), &manifest.to_json()?)?;
    Ok(())
}

pub fn cmd_predict(ctx: &Context, args: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_any(ctx, &args.corpus)?;
    let out_dir = ctx.path(&args.out_dir)?;
    for model_path in &args.models {
        let model = MemberModel::load(&ctx.path(model_path)?)?;
        let table = predict_proba(&model, &corpus)?;
        let path = out_dir.join(format!("{}.{}.prob.tsv", model.member_id(), corpus.split_name()));
        table.write(&path)?;
        writeln!(out, "{}", ctx.rel(&path))?;
    }
    Ok(())
}

pub fn cmd_fit_weights(ctx: &Context, args: &FitWeightsArgs, out: &mut dyn Write) -> Result<()> {
    let validation = load_labeled(ctx, &args.validation)?;
    let tables = load_tables(ctx, &args.probs)?;
    let spec = fit_weights(&tables, &validation)?;
    spec.write(&ctx.path(&args.out)?)?;
    out.write_all(spec.to_tsv().as_bytes())?;
    Ok(())
}

/// Each member's own thresholded F1 on `validation`.
pub fn member_f1_summary(tables: &[ProbabilityTable], validation: &LabeledCorpus) -> Result<ScoreSummary> {
    let labels: IndexMap<String, _> = validation
        .labels()?
        .into_iter()
        .map(|(id, l)| (id.to_owned(), l))
        .collect();
    let f1s = tables
        .iter()
        .map(|t| Ok(confusion_matrix(&t.hard_predictions(), &labels)?.f1()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(aggregate_scores(&f1s)?)
}

fn vote_mode(mode: Mode) -> VoteMode {
    match mode {
        Mode::Soft => VoteMode::Soft,
        Mode::Hard => VoteMode::Hard,
    }
}

pub fn cmd_ensemble(ctx: &Context, args: &EnsembleArgs, out: &mut dyn Write) -> Result<()> {
    let validation = load_labeled(ctx, &args.validation)?;
    let val_tables = load_tables(ctx, &args.probs)?;
    let mode = vote_mode(args.mode);

    let spec = match (&args.spec, mode, args.weighting) {
        (Some(path), _, _) => EnsembleSpec::load(&ctx.path(path)?)?,
        (None, VoteMode::Soft, Weighting::F1) => fit_weights(&val_tables, &validation)?,
        (None, _, _) => {
            for t in &val_tables {
                t.check_coverage(&validation)?;
            }
            EnsembleSpec::equal_weights(val_tables.iter().map(|t| t.member_id().to_owned()).collect())?
        }
    };
    let member_f1 = member_f1_summary(&val_tables, &validation)?;

    let (eval_corpus, eval_tables) = match &args.eval {
        Some(path) => {
            if args.eval_probs.is_empty() {
                bail!("--eval requires --eval-probs for the evaluated corpus");
            }
            (load_any(ctx, path)?, load_tables(ctx, &args.eval_probs)?)
        }
        None => {
            if !args.eval_probs.is_empty() {
                bail!("--eval-probs given without --eval");
            }
            (validation.clone(), val_tables.clone())
        }
    };

    let out_dir = ctx.path(&args.out_dir)?;
    let stem = format!("{}.{}", eval_corpus.split_name(), mode);
    let spec_path = out_dir.join("spec.tsv");
    let verdict_path = out_dir.join(format!("{stem}.verdicts.tsv"));
    spec.write(&spec_path)?;

    let mut manifest = ctx.manifest("ensemble");
    manifest.member_ids = spec.members().to_vec();
    manifest.corpora.push(ctx.rel(&ctx.path(&args.validation)?));
    if let Some(path) = &args.eval {
        manifest.corpora.push(ctx.rel(&ctx.path(path)?));
    }
    for p in args.probs.iter().chain(&args.eval_probs) {
        manifest.probability_tables.push(ctx.rel(&ctx.path(p)?));
    }
    manifest.spec = Some(ctx.rel(&spec_path));

    if eval_corpus.is_labeled() {
        let evaluation = evaluate_ensemble(&spec, &eval_tables, &eval_corpus, mode)?;
        ctx.write(&verdict_path, &verdicts_to_tsv(&evaluation.verdicts))?;
        let report = Report {
            mode: Some(mode),
            corpus: eval_corpus.split_name().to_owned(),
            examples: eval_corpus.len(),
            members: spec.len(),
            confusion: evaluation.confusion,
            member_f1: Some(member_f1),
        };
        let text_path = out_dir.join(format!("{stem}.report.txt"));
        let tsv_path = out_dir.join(format!("{stem}.report.tsv"));
        let text = report.render_text();
        ctx.write(&text_path, &text)?;
        ctx.write(&tsv_path, &report.render_tsv())?;
        manifest.reports = vec![ctx.rel(&verdict_path), ctx.rel(&text_path), ctx.rel(&tsv_path)];
        out.write_all(text.as_bytes())?;
    } else {
        let verdicts = predict_ensemble(&spec, &eval_tables, &eval_corpus, mode)?;
        ctx.write(&verdict_path, &verdicts_to_tsv(&verdicts))?;
        manifest.reports = vec![ctx.rel(&verdict_path)];
        writeln!(out, "{}", ctx.rel(&verdict_path))?;
    }
    ctx.write(&out_dir.join(format!("{stem}.manifest.json")), &manifest.to_json()?)?;
    Ok(())
}

pub fn cmd_report(ctx: &Context, args: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_labeled(ctx, &args.corpus)?;
    let verdict_path = ctx.path(&args.verdicts)?;
    let contents = fs::read_to_string(&verdict_path)
        .with_context(|| format!("cannot read {}", verdict_path.display()))?;
    let predictions: IndexMap<String, _> = parse_verdicts(&verdict_path.display().to_string(), &contents)?
        .into_iter()
        .map(|(id, _, label)| (id, label))
        .collect();
    let labels: IndexMap<String, _> = corpus
        .labels()?
        .into_iter()
        .map(|(id, l)| (id.to_owned(), l))
        .collect();
    let confusion = confusion_matrix(&predictions, &labels)?;

    let (members, member_f1) = match &args.validation {
        Some(path) if !args.member_probs.is_empty() => {
            let validation = load_labeled(ctx, path)?;
            let tables = load_tables(ctx, &args.member_probs)?;
            (tables.len(), Some(member_f1_summary(&tables, &validation)?))
        }
        _ => (0, None),
    };
    let report = Report {
        mode: args.mode.map(vote_mode),
        corpus: corpus.split_name().to_owned(),
        examples: corpus.len(),
        members,
        confusion,
        member_f1,
    };
    let rendered = match args.format {
        Format::Text => report.render_text(),
        Format::Tsv => report.render_tsv(),
    };
    out.write_all(rendered.as_bytes())?;
    Ok(())
}
