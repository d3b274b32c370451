//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ipvote_cli::args::{Format, StatsArgs};
use ipvote_cli::{commands, Cli, Context};
use ipvote_core::ensemble::{decide, majority_vote, soft_predict_proba};
use ipvote_core::members::{loss_and_gradient, select_best_epoch, EpochHistory, FeatureVector, MemberModel, SelectionMetric, HASH_DIM};
use ipvote_core::metrics::{confusion_matrix, f1_from_pr};
use ipvote_core::{ClassLabel, ConfusionMatrix, EnsembleSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let spent = start.elapsed();
    check(spent < budget, || format!("took {spent:?}, budget {budget:?}"))
}

fn label(positive: bool) -> ClassLabel {
    ClassLabel::from_bool(positive)
}

fn ac1_reference_f1() -> Outcome {
    let baseline = f1_from_pr(0.823, 0.699).map_err(|e| e.to_string())?;
    let system = f1_from_pr(0.860, 0.841).map_err(|e| e.to_string())?;
    check((baseline - 0.756).abs() <= 0.001, || format!("baseline F1 {baseline}"))?;
    check((system - 0.851).abs() <= 0.002, || format!("system F1 {system}"))?;
    Ok(format!("baseline {baseline:.4}, system {system:.4}"))
}

fn ac2_metrics_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    for case in 0..1000 {
        let n = rng.gen_range(1..=50);
        // skew some sets so all-negative and all-positive columns show up
        let bias: f64 = [0.0, 0.05, 0.5, 0.95, 1.0][case % 5];
        let mut predicted = IndexMap::new();
        let mut actual = IndexMap::new();
        for i in 0..n {
            predicted.insert(format!("x{i}"), label(rng.gen_bool(bias)));
            actual.insert(format!("x{i}"), label(rng.gen_bool(0.3)));
        }
        let cm = confusion_matrix(&predicted, &actual).map_err(|e| e.to_string())?;

        let mut cells = [[0u64; 2]; 2];
        for (id, p) in &predicted {
            cells[actual[id].as_u8() as usize][p.as_u8() as usize] += 1;
        }
        let expected = ConfusionMatrix { tp: cells[1][1], fp: cells[0][1], fn_: cells[1][0], tn: cells[0][0] };
        check(cm == expected, || format!("case {case}: {cm:?} vs {expected:?}"))?;

        let precision = ratio(cells[1][1], cells[1][1] + cells[0][1]);
        let recall = ratio(cells[1][1], cells[1][1] + cells[1][0]);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        let accuracy = ratio(cells[0][0] + cells[1][1], n as u64);
        let s = cm.scores();
        check(
            s.precision == precision && s.recall == recall && s.f1 == f1 && s.accuracy == accuracy,
            || format!("case {case}: {s:?}"),
        )?;
    }
    within_budget(start, Duration::from_secs(5))?;
    Ok(format!("1000 sets in {:?}", start.elapsed()))
}

fn ac3_ensemble_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ids = |n: usize| (0..n).map(|i| format!("m{i}")).collect::<Vec<_>>();
    let err = |e: ipvote_core::Error| e.to_string();
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = rng.gen_range(1..=7);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let probs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let c = 10f64.powf(rng.gen_range(-3.0..3.0));
        let base = EnsembleSpec::new(ids(n), weights.clone()).map_err(err)?;
        let scaled = EnsembleSpec::new(ids(n), weights.iter().map(|w| w * c).collect()).map_err(err)?;
        let p = soft_predict_proba(&base, &probs).map_err(err)?;
        let q = soft_predict_proba(&scaled, &probs).map_err(err)?;
        worst = worst.max((p - q).abs());
        check((p - q).abs() <= 1e-12, || format!("case {case}: scale {c} moved {p} to {q}"))?;
        check(decide(p).map_err(err)? == decide(q).map_err(err)?, || format!("case {case}: decision flipped"))?;
        let lo = probs.iter().copied().fold(1.0, f64::min);
        let hi = probs.iter().copied().fold(0.0, f64::max);
        check(lo <= p && p <= hi, || format!("case {case}: {p} outside [{lo}, {hi}]"))?;

        let single = EnsembleSpec::new(ids(1), vec![weights[0]]).map_err(err)?;
        let one = soft_predict_proba(&single, &probs[..1]).map_err(err)?;
        check(one == probs[0], || format!("case {case}: n=1 gave {one} for {}", probs[0]))?;
    }

    let mut patterns = 0;
    for n in [1usize, 3, 5] {
        let spec = EnsembleSpec::equal_weights(ids(n)).map_err(err)?;
        for mask in 0u32..1 << n {
            let votes: Vec<ClassLabel> = (0..n).map(|i| label(mask >> i & 1 == 1)).collect();
            let probs: Vec<f64> = votes.iter().map(|v| f64::from(v.as_u8())).collect();
            let soft = decide(soft_predict_proba(&spec, &probs).map_err(err)?).map_err(err)?;
            let hard = majority_vote(&votes).map_err(err)?;
            check(soft == hard, || format!("n={n} pattern {mask:0n$b}: soft {soft} hard {hard}"))?;
            patterns += 1;
        }
    }
    Ok(format!("max scale deviation {worst:e}, {patterns} binary patterns agree"))
}

fn linear_scan(values: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

fn ac4_epoch_selection() -> Outcome {
    let err = |e: ipvote_core::Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ties = 0;
    for case in 0..1000 {
        let len = rng.gen_range(1..=20);
        // coarse quantization so equal maxima are common
        let levels = rng.gen_range(2..=10);
        let q = |rng: &mut ChaCha8Rng| f64::from(rng.gen_range(0..=levels)) / f64::from(levels);
        let metrics: Vec<(f64, f64)> = (0..len).map(|_| (q(&mut rng), q(&mut rng))).collect();
        let history = EpochHistory::from_metrics(metrics.iter().copied()).map_err(err)?;
        let f1s: Vec<f64> = metrics.iter().map(|m| m.0).collect();
        let accs: Vec<f64> = metrics.iter().map(|m| m.1).collect();
        let max = f1s.iter().copied().fold(0.0, f64::max);
        if f1s.iter().filter(|&&v| v == max).count() > 1 {
            ties += 1;
        }
        let by_f1 = select_best_epoch(&history, SelectionMetric::F1).map_err(err)?;
        let by_acc = select_best_epoch(&history, SelectionMetric::Accuracy).map_err(err)?;
        check(by_f1 == linear_scan(&f1s), || format!("case {case}: f1 picked {by_f1}"))?;
        check(by_acc == linear_scan(&accs), || format!("case {case}: accuracy picked {by_acc}"))?;
    }
    check(ties > 100, || format!("only {ties} histories had tied maxima"))?;

    // 10 positives, 90 negatives. Epoch 0 predicts everything negative; epoch 1
    // finds 6 positives at the cost of 8 false alarms.
    let actual: Vec<bool> = (0..100).map(|i| i < 10).collect();
    let epoch0 = vec![false; 100];
    let epoch1: Vec<bool> = (0..100).map(|i| i < 6 || (10..18).contains(&i)).collect();
    let mut metrics = Vec::new();
    for predicted in [&epoch0, &epoch1] {
        let cm = ConfusionMatrix::from_pairs(predicted.iter().zip(&actual).map(|(&p, &a)| (label(p), label(a))));
        metrics.push((cm.f1(), cm.accuracy()));
    }
    check(metrics == [(0.0, 0.9), (0.5, 0.88)], || format!("constructed metrics {metrics:?}"))?;
    let history = EpochHistory::from_metrics(metrics).map_err(err)?;
    let by_f1 = select_best_epoch(&history, SelectionMetric::F1).map_err(err)?;
    let by_acc = select_best_epoch(&history, SelectionMetric::Accuracy).map_err(err)?;
    check((by_f1, by_acc) == (1, 0), || format!("f1 picked {by_f1}, accuracy picked {by_acc}"))?;
    Ok(format!("1000 histories ({ties} with tied F1 maxima); imbalanced case: F1 -> epoch 1, accuracy -> epoch 0"))
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, nnz: usize) -> FeatureVector {
    let pairs = (0..nnz).map(|_| (rng.gen_range(0..dim as u32), f64::from(rng.gen_range(1..=3u8))));
    FeatureVector::from_pairs(pairs).unwrap()
}

fn ac5_gradient_check() -> Outcome {
    let start = Instant::now();
    let err = |e: ipvote_core::Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for case in 0..100 {
        // every tenth instance uses the full hashed dimension
        let full = case % 10 == 0;
        let dim = if full { HASH_DIM } else { rng.gen_range(2..=12) };
        let nnz = if full { 30 } else { dim.min(4) };
        let batch: Vec<(FeatureVector, ClassLabel)> = (0..rng.gen_range(1..=8))
            .map(|_| (random_vector(&mut rng, dim, nnz), label(rng.gen_bool(0.5))))
            .collect();
        let mut weights = vec![0.0; dim];
        let touched: Vec<usize> = batch.iter().flat_map(|(x, _)| x.entries().iter().map(|&(i, _)| i as usize)).collect();
        let coords: Vec<usize> = if full { touched.clone() } else { (0..dim).collect() };
        for &i in &coords {
            weights[i] = rng.gen_range(-1.0..1.0);
        }
        let bias = rng.gen_range(-1.0..1.0);
        let l2 = [0.0, 1e-4, 0.1][case % 3];
        let model = MemberModel::from_parts("g", weights.clone(), bias).map_err(err)?;
        let (_, grad) = loss_and_gradient(&model, &batch, l2).map_err(err)?;

        let mut checked: Vec<usize> = if full {
            // a sample of active coordinates plus untouched ones, where only the
            // penalty contributes
            let mut sample: Vec<usize> = (0..4).map(|_| coords[rng.gen_range(0..coords.len())]).collect();
            sample.extend((0..2).map(|_| rng.gen_range(0..dim)));
            sample
        } else {
            coords
        };
        checked.push(dim);
        for &k in &checked {
            let at = |delta: f64| -> Result<f64, String> {
                let mut w = weights.clone();
                let mut b = bias;
                if k == dim {
                    b += delta;
                } else {
                    w[k] += delta;
                }
                let m = MemberModel::from_parts("g", w, b).map_err(err)?;
                Ok(loss_and_gradient(&m, &batch, l2).map_err(err)?.0)
            };
            let numeric = (at(h)? - at(-h)?) / (2.0 * h);
            let analytic = grad[k];
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
            worst = worst.max(rel);
            check(rel < 1e-4, || format!("case {case} coord {k}: numeric {numeric} analytic {analytic}"))?;
        }
    }
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!("max relative error {worst:.2e} in {:?}", start.elapsed()))
}

fn run_cli(workspace: &Path, args: &[&str]) -> Result<String, String> {
    let mut argv = vec!["ipvote", "--workspace", workspace.to_str().unwrap()];
    argv.extend_from_slice(args);
    let cli = Cli::try_parse_from(argv).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    ipvote_cli::run(cli, &mut out).map_err(|e| format!("{args:?}: {e:#}"))?;
    Ok(String::from_utf8(out).unwrap())
}

fn files_under(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn report_values(tsv: &str) -> BTreeMap<String, String> {
    tsv.lines().skip(1).filter_map(|l| l.split_once('\t')).map(|(k, v)| (k.to_owned(), v.to_owned())).collect()
}

fn desk_run(workspace: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    run_cli(workspace, &["synth", "--train-size", "2000", "--validation-size", "500", "--positive-rate", "0.11", "--flip-rate", "0.2"])?;
    run_cli(workspace, &["train", "--train", "train.tsv", "--validation", "validation.tsv", "--members", "5"])?;
    let probs: Vec<String> = (0..5).map(|i| format!("members/member-{i}.validation.prob.tsv")).collect();
    let mut fit = vec!["fit-weights", "--validation", "validation.tsv", "--probs"];
    fit.extend(probs.iter().map(String::as_str));
    run_cli(workspace, &fit)?;
    for mode in ["soft", "hard"] {
        let mut args = vec!["ensemble", "--validation", "validation.tsv", "--mode", mode, "--spec", "ensemble/spec.tsv", "--probs"];
        args.extend(probs.iter().map(String::as_str));
        run_cli(workspace, &args)?;
    }
    Ok(files_under(workspace))
}

fn ac6_desk_scale_run() -> Outcome {
    let start = Instant::now();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = desk_run(a.path())?;
    let second = desk_run(b.path())?;
    check(first.len() == second.len(), || "reruns wrote different file sets".into())?;
    for (name, bytes) in &first {
        check(second.get(name) == Some(bytes), || format!("{name} differs between reruns"))?;
    }

    let mut summary = Vec::new();
    for mode in ["soft", "hard"] {
        let tsv = String::from_utf8(first[&format!("ensemble/validation.{mode}.report.tsv")].clone()).unwrap();
        let v = report_values(&tsv);
        let num = |k: &str| v[k].parse::<f64>().unwrap();
        let f1 = num("f1");
        check(f1 >= 0.80, || format!("{mode} ensemble F1 {f1} below 0.80"))?;
        let (pos, neg) = (num("tp") + num("fn"), num("fp") + num("tn"));
        check((pos, neg) == (55.0, 445.0), || format!("{mode} row sums {neg}/{pos}, expected 445/55"))?;
        summary.push(format!("{mode} F1 {f1:.3}"));
    }
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!("{}; {} files identical across reruns; {:?} for both runs", summary.join(", "), first.len(), start.elapsed()))
}

fn write_fixture(path: &Path, negatives: usize, positives: usize) {
    let mut s = String::from("id\ttext\tlabel\n");
    for i in 0..negatives + positives {
        s.push_str(&format!("{i}\tfixture tweet {i}\t{}\n", u8::from(i >= negatives)));
    }
    fs::write(path, s).unwrap();
}

fn ac7_class_count_fixture() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_fixture(&dir.path().join("train.tsv"), 4042, 481);
    write_fixture(&dir.path().join("validation.tsv"), 480, 54);
    let ctx = Context::new(dir.path(), 0).map_err(|e| e.to_string())?;
    let args = StatsArgs { corpus: vec!["train.tsv".into(), "validation.tsv".into()], format: Format::Tsv };
    let mut out = Vec::new();
    commands::cmd_stats(&ctx, &args, &mut out).map_err(|e| format!("{e:#}"))?;
    let out = String::from_utf8(out).unwrap();
    let rows: BTreeMap<&str, Vec<&str>> = out.lines().skip(1).map(|l| {
        let mut f = l.split('\t');
        (f.next().unwrap(), f.collect())
    }).collect();
    let total = |split: &str| rows.get(split).map(|r| r[2]);
    check(total("train") == Some("4523"), || format!("train row {:?}", rows.get("train")))?;
    check(total("validation") == Some("534"), || format!("validation row {:?}", rows.get("validation")))?;
    let overall = rows.get("overall").ok_or("no overall row")?;
    let rate: f64 = overall[3].parse().map_err(|_| format!("overall row {overall:?}"))?;
    check(overall[1] == "535" && overall[2] == "5057", || format!("overall row {overall:?}"))?;
    check(rate == 535.0 / 5057.0 && (rate - 0.1058).abs() < 5e-5, || format!("overall rate {rate}"))?;
    Ok(format!("totals 4523/534, overall 535/5057 = {rate:.4}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("reference F1 consistency", ac1_reference_f1),
        ("metrics brute-force oracle", ac2_metrics_oracle),
        ("ensemble formula properties", ac3_ensemble_properties),
        ("best-epoch selection", ac4_epoch_selection),
        ("gradient check", ac5_gradient_check),
        ("desk-scale end-to-end run", ac6_desk_scale_run),
        ("class-count fixture stats", ac7_class_count_fixture),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        match criterion() {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
