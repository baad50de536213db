//! The seven subcommands. Each one loads its inputs, runs the corresponding
//! library operations, and writes artifacts plus `run_config.txt` into
//! `--out-dir`.

use std::io::Write;

use meaad_core::attack::{
    adaptive_attack_all, naive_attack_all, targeted_multi_attack, AttackConfig, AttackKind,
};
use meaad_core::detector::{predict, train_detector, voting_detect, Hyperparams, LabeledExample};
use meaad_core::embedding::{ExpertIndex, QueryLabel, QuerySample};
use meaad_core::error::{Error, Result};
use meaad_core::features::{
    assemble_context_feature, feature_dim, retrieve_supports, ContextFeature, FeatureSubset,
};
use meaad_core::format::{self, FeatureRow};
use meaad_core::metrics::MetricsReport;
use meaad_core::parallel;
use meaad_core::relation::relation_stats;
use meaad_core::scenario::{generate_scenario, ScenarioConfig};

use crate::args::*;
use crate::common::*;

pub fn run_gen(args: &GenArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let queries_per_identity = args.train_queries_per_identity + args.eval_queries_per_identity;
    let config = ScenarioConfig {
        n_identities: args.identities,
        items_per_identity: args.items_per_identity,
        n_experts: args.experts,
        dimension: args.dim,
        cluster_noise: args.cluster_noise,
        cross_expert_jitter: args.expert_jitter,
        queries_per_identity,
        seed,
    };
    let (indexes, queries) = generate_scenario(&config)?;

    // Queries come out identity-major; the first train_queries_per_identity
    // of each identity block are the training split.
    let mut train = Vec::new();
    let mut eval = Vec::new();
    if queries_per_identity > 0 {
        for chunk in queries.chunks(queries_per_identity) {
            train.extend_from_slice(&chunk[..args.train_queries_per_identity]);
            eval.extend_from_slice(&chunk[args.train_queries_per_identity..]);
        }
    }

    ensure_out_dir(&args.out_dir)?;
    for index in &indexes {
        let mut w = create_file(
            &args.out_dir,
            &format!("gallery_expert{}.txt", index.expert_id()),
        )?;
        format::write_embedding_table(&mut w, index)?;
    }
    let mut w = create_file(&args.out_dir, "queries_train.txt")?;
    format::write_query_file(&mut w, args.dim, args.experts, &train)?;
    let mut w = create_file(&args.out_dir, "queries_eval.txt")?;
    format::write_query_file(&mut w, args.dim, args.experts, &eval)?;

    write_run_config(
        &args.out_dir,
        "gen",
        &[
            ("identities".into(), args.identities.to_string()),
            (
                "items_per_identity".into(),
                args.items_per_identity.to_string(),
            ),
            ("experts".into(), args.experts.to_string()),
            ("dim".into(), args.dim.to_string()),
            ("cluster_noise".into(), fmt_f64(args.cluster_noise)),
            ("expert_jitter".into(), fmt_f64(args.expert_jitter)),
            (
                "train_queries_per_identity".into(),
                args.train_queries_per_identity.to_string(),
            ),
            (
                "eval_queries_per_identity".into(),
                args.eval_queries_per_identity.to_string(),
            ),
            ("seed".into(), seed.to_string()),
        ],
    )?;

    println!(
        "gen: {} galleries of {} items, {} train + {} eval queries -> {}",
        indexes.len(),
        args.identities * args.items_per_identity,
        train.len(),
        eval.len(),
        args.out_dir.display()
    );
    Ok(())
}

/// Labels a query 0/1 for the detector, rejecting unlabeled rows.
fn detector_label(query: &QuerySample) -> Result<u8> {
    match query.label {
        QueryLabel::Benign => Ok(0),
        QueryLabel::Adversarial => Ok(1),
        QueryLabel::Unknown => Err(Error::UnlabeledQuery(query.query_id)),
    }
}

/// Context features for every query, in input order.
fn featurize_queries(
    queries: &[QuerySample],
    indexes: &[ExpertIndex],
    k: usize,
) -> Result<Vec<FeatureRow>> {
    parallel::map(queries, |q| -> Result<FeatureRow> {
        let feature = assemble_context_feature(q, indexes, k)?;
        Ok(FeatureRow {
            query_id: q.query_id,
            label: detector_label(q)?,
            values: feature.flat(),
        })
    })
    .into_iter()
    .collect()
}

pub fn run_featurize(args: &FeaturizeArgs) -> Result<()> {
    let indexes = load_galleries(&args.galleries)?;
    let n = indexes.len();
    let dim = indexes[0].dimension();
    let queries = load_queries(&args.queries, dim, n)?;
    if queries.is_empty() {
        return Err(Error::Empty);
    }
    let rows = featurize_queries(&queries, &indexes, args.k)?;
    let d = feature_dim(n, args.k);

    ensure_out_dir(&args.out_dir)?;
    let mut w = create_file(&args.out_dir, "features.txt")?;
    format::write_feature_file(&mut w, n, args.k, d, &rows)?;
    write_run_config(
        &args.out_dir,
        "featurize",
        &[
            ("galleries".into(), path_list(&args.galleries)),
            ("queries".into(), path_list(&args.queries)),
            ("k".into(), args.k.to_string()),
            ("n_experts".into(), n.to_string()),
            ("d".into(), d.to_string()),
        ],
    )?;
    println!(
        "featurize: {} rows, d={} -> {}",
        rows.len(),
        d,
        args.out_dir.display()
    );
    Ok(())
}

fn examples_from_rows(file: &format::FeatureFile) -> Vec<LabeledExample> {
    file.rows
        .iter()
        .map(|row| LabeledExample {
            feature: ContextFeature::from_flat(file.n_experts, file.k, &row.values)
                .unwrap_or_else(|_| ContextFeature::opaque(row.values.clone())),
            label: row.label,
        })
        .collect()
}

pub fn run_train(args: &TrainArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let file = std::fs::File::open(&args.features)?;
    let feature_file = format::read_feature_file(std::io::BufReader::new(file))?;
    let dataset = examples_from_rows(&feature_file);
    let hyperparams = Hyperparams {
        learning_rate: args.lr,
        momentum: args.momentum,
        batch_size: args.batch_size,
        iterations: args.iterations,
    };
    let trained = train_detector(&dataset, hyperparams, seed)?;

    ensure_out_dir(&args.out_dir)?;
    let mut w = create_file(&args.out_dir, "model.txt")?;
    format::write_model(&mut w, &trained.model)?;
    let mut w = create_file(&args.out_dir, "loss.csv")?;
    format::write_loss_csv(&mut w, &trained.loss_trajectory)?;
    write_run_config(
        &args.out_dir,
        "train",
        &[
            ("features".into(), path_name(&args.features)),
            ("lr".into(), fmt_f64(args.lr)),
            ("momentum".into(), fmt_f64(args.momentum)),
            ("batch_size".into(), args.batch_size.to_string()),
            ("iterations".into(), args.iterations.to_string()),
            ("seed".into(), seed.to_string()),
            ("d".into(), feature_file.d.to_string()),
        ],
    )?;
    let first = trained.loss_trajectory.first().copied().unwrap_or(f64::NAN);
    let last = trained.loss_trajectory.last().copied().unwrap_or(f64::NAN);
    println!(
        "train: {} examples, d={}, {} iterations, loss {:.4} -> {:.4}",
        dataset.len(),
        feature_file.d,
        args.iterations,
        first,
        last
    );
    Ok(())
}

pub fn run_eval(args: &EvalArgs) -> Result<()> {
    let indexes = load_galleries(&args.galleries)?;
    let n = indexes.len();
    let dim = indexes[0].dimension();
    let queries = load_queries(&args.queries, dim, n)?;
    if queries.is_empty() {
        return Err(Error::Empty);
    }
    let labels: Vec<u8> = queries.iter().map(detector_label).collect::<Result<_>>()?;

    let benign = labels.iter().filter(|&&l| l == 0).count();
    let adversarial = labels.len() - benign;
    if benign != adversarial {
        eprintln!(
            "warning: evaluation set is unbalanced ({benign} benign vs {adversarial} adversarial)"
        );
    }

    let (scores, predictions): (Vec<f64>, Vec<u8>) = match args.detector {
        DetectorChoice::Mlp => {
            let model_path = args.model.as_ref().ok_or_else(|| {
                Error::InvalidConfig("--model is required with --detector mlp".into())
            })?;
            let file = std::fs::File::open(model_path)?;
            let model = format::read_model(std::io::BufReader::new(file))?;
            let expected = feature_dim(n, args.k);
            if model.input_dim() != expected {
                return Err(Error::NotTrained(format!(
                    "model expects d={}, this scenario produces d={expected} (n={n}, k={})",
                    model.input_dim(),
                    args.k
                )));
            }
            let outcomes: Vec<(f64, u8)> = parallel::map(&queries, |q| -> Result<(f64, u8)> {
                let feature = assemble_context_feature(q, &indexes, args.k)?;
                let p = predict(&model, &feature.flat(), args.prob_threshold)?;
                Ok((p.probability, p.label))
            })
            .into_iter()
            .collect::<Result<_>>()?;
            outcomes.into_iter().unzip()
        }
        DetectorChoice::Voting => {
            let outcomes: Vec<(f64, u8)> = parallel::map(&queries, |q| -> Result<(f64, u8)> {
                let supports = retrieve_supports(q, &indexes, args.k)?;
                let decision = voting_detect(&supports, args.threshold)?;
                // Fewer common supports means more suspicious, so the
                // attack score is the negated count.
                Ok((-(decision.common_count as f64), decision.label))
            })
            .into_iter()
            .collect::<Result<_>>()?;
            outcomes.into_iter().unzip()
        }
    };

    let report = MetricsReport::compute(&scores, &predictions, &labels)?;

    ensure_out_dir(&args.out_dir)?;
    let mut w = create_file(&args.out_dir, "metrics.csv")?;
    format::write_metrics_csv(&mut w, &report)?;
    let mut w = create_file(&args.out_dir, "roc.csv")?;
    format::write_roc_csv(&mut w, &report.roc_points)?;
    let mut w = create_file(&args.out_dir, "predictions.csv")?;
    writeln!(w, "query_id,label,score,predicted")?;
    for ((q, (score, pred)), label) in queries
        .iter()
        .zip(scores.iter().zip(&predictions))
        .zip(&labels)
    {
        writeln!(w, "{},{},{},{}", q.query_id, label, fmt_f64(*score), pred)?;
    }

    let detector_name = match args.detector {
        DetectorChoice::Mlp => "mlp",
        DetectorChoice::Voting => "voting",
    };
    write_run_config(
        &args.out_dir,
        "eval",
        &[
            ("galleries".into(), path_list(&args.galleries)),
            ("queries".into(), path_list(&args.queries)),
            ("k".into(), args.k.to_string()),
            ("detector".into(), detector_name.into()),
            (
                "model".into(),
                args.model
                    .as_ref()
                    .map(|p| path_name(p))
                    .unwrap_or_default(),
            ),
            ("threshold".into(), args.threshold.to_string()),
            ("prob_threshold".into(), fmt_f64(args.prob_threshold)),
        ],
    )?;

    println!("eval ({detector_name}): n={}", queries.len());
    println!("accuracy  {:.4}", report.accuracy);
    println!("precision {:.4}", report.precision);
    println!("recall    {:.4}", report.recall);
    println!("f1        {:.4}", report.f1);
    println!("roc_auc   {:.4}", report.roc_auc);
    Ok(())
}

pub fn run_attack(args: &AttackArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let file = std::fs::File::open(&args.queries)?;
    let (dim, n_experts, queries) = format::read_query_file(std::io::BufReader::new(file))?;
    if queries.is_empty() {
        return Err(Error::Empty);
    }

    let kind = match args.kind {
        AttackChoice::Naive => AttackKind::Naive,
        AttackChoice::Adaptive => AttackKind::Adaptive,
        AttackChoice::Targeted => AttackKind::Targeted,
    };
    let config = AttackConfig {
        kind,
        epsilon: args.epsilon,
        steps: args.steps,
        step_size: args.step_size,
        affinity_weight: args.affinity_weight,
        refresh_every: args.refresh_every,
        target_identity: args.target_identity,
        seed,
    };

    let mut successes: Option<usize> = None;
    let attacked: Vec<QuerySample> = match kind {
        AttackKind::Naive => naive_attack_all(&queries, &config)?,
        AttackKind::Adaptive => {
            let indexes = load_galleries(&args.galleries)?;
            if indexes[0].dimension() != dim || indexes.len() != n_experts {
                return Err(Error::InvalidConfig(
                    "galleries do not match the query file".into(),
                ));
            }
            let model_path = args.model.as_ref().ok_or_else(|| {
                Error::InvalidConfig("--model is required for the adaptive attack".into())
            })?;
            let model_file = std::fs::File::open(model_path)?;
            let model = format::read_model(std::io::BufReader::new(model_file))?;
            adaptive_attack_all(&queries, &indexes, &model, args.k, &config)?
        }
        AttackKind::Targeted => {
            let indexes = load_galleries(&args.galleries)?;
            if indexes[0].dimension() != dim || indexes.len() != n_experts {
                return Err(Error::InvalidConfig(
                    "galleries do not match the query file".into(),
                ));
            }
            let identities = indexes[0].identity_ids();
            if identities.len() < 2 {
                return Err(Error::InvalidConfig(
                    "targeted attack needs at least two identities".into(),
                ));
            }
            if let Some(target) = args.target_identity {
                if !identities.contains(&target) {
                    return Err(Error::InvalidConfig(format!(
                        "target identity {target} is not in the gallery"
                    )));
                }
                if let Some(q) = queries.iter().find(|q| q.identity_id == target) {
                    return Err(Error::InvalidConfig(format!(
                        "query {} already has the target identity {target}",
                        q.query_id
                    )));
                }
            }
            // Fixed target per query: the explicit one, or the next
            // identity in ascending cyclic order.
            let targets: Vec<u64> = queries
                .iter()
                .map(|q| match args.target_identity {
                    Some(t) => t,
                    None => {
                        let pos = identities
                            .iter()
                            .position(|&i| i == q.identity_id)
                            .unwrap_or(0);
                        identities[(pos + 1) % identities.len()]
                    }
                })
                .collect();
            let work: Vec<(QuerySample, u64)> = queries.iter().cloned().zip(targets).collect();
            let outcomes: Vec<_> = parallel::map(&work, |(q, target)| {
                targeted_multi_attack(q, &indexes, *target, args.k, &config)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            successes = Some(outcomes.iter().filter(|o| o.success).count());
            outcomes.into_iter().map(|o| o.query).collect()
        }
    };

    ensure_out_dir(&args.out_dir)?;
    let mut w = create_file(&args.out_dir, "queries_adversarial.txt")?;
    format::write_query_file(&mut w, dim, n_experts, &attacked)?;
    let mut w = create_file(&args.out_dir, "attack_report.csv")?;
    writeln!(
        w,
        "kind,queries,epsilon,steps,step_size,affinity_weight,refresh_every,successes,success_rate"
    )?;
    let (succ_str, rate_str) = match successes {
        Some(s) => (s.to_string(), fmt_f64(s as f64 / attacked.len() as f64)),
        None => (String::new(), String::new()),
    };
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{}",
        kind.as_str(),
        attacked.len(),
        fmt_f64(args.epsilon),
        args.steps,
        fmt_f64(args.step_size),
        fmt_f64(args.affinity_weight),
        args.refresh_every,
        succ_str,
        rate_str
    )?;

    write_run_config(
        &args.out_dir,
        "attack",
        &[
            ("kind".into(), kind.as_str().into()),
            ("queries".into(), path_name(&args.queries)),
            ("galleries".into(), path_list(&args.galleries)),
            (
                "model".into(),
                args.model
                    .as_ref()
                    .map(|p| path_name(p))
                    .unwrap_or_default(),
            ),
            ("k".into(), args.k.to_string()),
            ("epsilon".into(), fmt_f64(args.epsilon)),
            ("steps".into(), args.steps.to_string()),
            ("step_size".into(), fmt_f64(args.step_size)),
            ("affinity_weight".into(), fmt_f64(args.affinity_weight)),
            ("refresh_every".into(), args.refresh_every.to_string()),
            (
                "target_identity".into(),
                args.target_identity
                    .map(|t| t.to_string())
                    .unwrap_or_else(|| "auto".into()),
            ),
            ("seed".into(), seed.to_string()),
        ],
    )?;

    match successes {
        Some(s) => println!(
            "attack ({}): {} queries, {} successes ({:.1}%)",
            kind.as_str(),
            attacked.len(),
            s,
            100.0 * s as f64 / attacked.len() as f64
        ),
        None => println!(
            "attack ({}): {} queries perturbed",
            kind.as_str(),
            attacked.len()
        ),
    }
    Ok(())
}

struct AblationRow {
    mode: &'static str,
    config: String,
    n_experts: usize,
    k: usize,
    d: usize,
    accuracy: f64,
    auc: f64,
    f1: f64,
}

fn train_and_eval_flat(
    train_rows: Vec<(Vec<f64>, u8)>,
    eval_rows: Vec<(Vec<f64>, u8)>,
    hyperparams: Hyperparams,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let dataset: Vec<LabeledExample> = train_rows
        .into_iter()
        .map(|(values, label)| LabeledExample {
            feature: ContextFeature::opaque(values),
            label,
        })
        .collect();
    let trained = train_detector(&dataset, hyperparams, seed)?;
    let mut scores = Vec::with_capacity(eval_rows.len());
    let mut predictions = Vec::with_capacity(eval_rows.len());
    let mut labels = Vec::with_capacity(eval_rows.len());
    for (values, label) in &eval_rows {
        let p = predict(&trained.model, values, 0.5)?;
        scores.push(p.probability);
        predictions.push(p.label);
        labels.push(*label);
    }
    let report = MetricsReport::compute(&scores, &predictions, &labels)?;
    Ok((report.accuracy, report.roc_auc, report.f1))
}

pub fn run_ablate(args: &AblateArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let indexes = load_galleries(&args.galleries)?;
    let n = indexes.len();
    let dim = indexes[0].dimension();
    let load = |path: &std::path::PathBuf| -> Result<Vec<QuerySample>> {
        load_queries(std::slice::from_ref(path), dim, n)
    };
    let train_benign = load(&args.train_benign)?;
    let train_adv = load(&args.train_adversarial)?;
    let eval_benign = load(&args.eval_benign)?;
    let eval_adv = load(&args.eval_adversarial)?;
    let hyperparams = Hyperparams {
        learning_rate: args.lr,
        momentum: args.momentum,
        batch_size: args.batch_size,
        iterations: args.iterations,
    };

    // Feature rows (flat, labeled) for one configuration.
    let rows_for = |indexes: &[ExpertIndex],
                    benign: &[QuerySample],
                    adversarial: &[QuerySample],
                    k: usize|
     -> Result<Vec<(ContextFeature, u8)>> {
        let benign_rows = parallel::map(benign, |q| {
            assemble_context_feature(q, indexes, k).map(|f| (f, 0u8))
        });
        let adv_rows = parallel::map(adversarial, |q| {
            assemble_context_feature(q, indexes, k).map(|f| (f, 1u8))
        });
        benign_rows.into_iter().chain(adv_rows).collect()
    };
    let flatten = |rows: &[(ContextFeature, u8)]| -> Vec<(Vec<f64>, u8)> {
        rows.iter().map(|(f, l)| (f.flat(), *l)).collect()
    };

    let mut table: Vec<AblationRow> = Vec::new();
    match args.mode {
        AblateMode::Experts => {
            for count in 1..=n {
                let sub_indexes = indexes[..count].to_vec();
                let truncate = |qs: &[QuerySample]| -> Result<Vec<QuerySample>> {
                    qs.iter().map(|q| q.truncated(count)).collect()
                };
                let train_rows = rows_for(
                    &sub_indexes,
                    &truncate(&train_benign)?,
                    &truncate(&train_adv)?,
                    args.k,
                )?;
                let eval_rows = rows_for(
                    &sub_indexes,
                    &truncate(&eval_benign)?,
                    &truncate(&eval_adv)?,
                    args.k,
                )?;
                let d = train_rows[0].0.dim();
                let (accuracy, auc, f1) = train_and_eval_flat(
                    flatten(&train_rows),
                    flatten(&eval_rows),
                    hyperparams,
                    seed,
                )?;
                table.push(AblationRow {
                    mode: "experts",
                    config: format!("{count} experts"),
                    n_experts: count,
                    k: args.k,
                    d,
                    accuracy,
                    auc,
                    f1,
                });
            }
        }
        AblateMode::SupportSize => {
            for &k in &args.k_list {
                let train_rows = rows_for(&indexes, &train_benign, &train_adv, k)?;
                let eval_rows = rows_for(&indexes, &eval_benign, &eval_adv, k)?;
                let d = train_rows[0].0.dim();
                let (accuracy, auc, f1) = train_and_eval_flat(
                    flatten(&train_rows),
                    flatten(&eval_rows),
                    hyperparams,
                    seed,
                )?;
                table.push(AblationRow {
                    mode: "support-size",
                    config: format!("K={k}"),
                    n_experts: n,
                    k,
                    d,
                    accuracy,
                    auc,
                    f1,
                });
            }
        }
        AblateMode::Features => {
            let train_rows = rows_for(&indexes, &train_benign, &train_adv, args.k)?;
            let eval_rows = rows_for(&indexes, &eval_benign, &eval_adv, args.k)?;
            let subsets = [
                FeatureSubset {
                    query_support: true,
                    support_support: false,
                    cross_expert: false,
                },
                FeatureSubset {
                    query_support: false,
                    support_support: true,
                    cross_expert: false,
                },
                FeatureSubset {
                    query_support: false,
                    support_support: false,
                    cross_expert: true,
                },
                FeatureSubset {
                    query_support: true,
                    support_support: true,
                    cross_expert: false,
                },
                FeatureSubset {
                    query_support: true,
                    support_support: false,
                    cross_expert: true,
                },
                FeatureSubset {
                    query_support: false,
                    support_support: true,
                    cross_expert: true,
                },
                FeatureSubset::ALL,
            ];
            for subset in subsets {
                let slice = |rows: &[(ContextFeature, u8)]| -> Vec<(Vec<f64>, u8)> {
                    rows.iter().map(|(f, l)| (subset.select(f), *l)).collect()
                };
                let train_flat = slice(&train_rows);
                if train_flat[0].0.is_empty() {
                    eprintln!("skipping empty feature subset {}", subset.name());
                    continue;
                }
                let d = train_flat[0].0.len();
                let (accuracy, auc, f1) =
                    train_and_eval_flat(train_flat, slice(&eval_rows), hyperparams, seed)?;
                table.push(AblationRow {
                    mode: "features",
                    config: subset.name(),
                    n_experts: n,
                    k: args.k,
                    d,
                    accuracy,
                    auc,
                    f1,
                });
            }
        }
    }

    ensure_out_dir(&args.out_dir)?;
    let mut w = create_file(&args.out_dir, "ablation.csv")?;
    writeln!(w, "mode,config,n_experts,k,d,accuracy,auc,f1")?;
    for row in &table {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            row.mode,
            row.config,
            row.n_experts,
            row.k,
            row.d,
            fmt_f64(row.accuracy),
            fmt_f64(row.auc),
            fmt_f64(row.f1)
        )?;
    }
    let mode_name = match args.mode {
        AblateMode::Experts => "experts",
        AblateMode::SupportSize => "support-size",
        AblateMode::Features => "features",
    };
    write_run_config(
        &args.out_dir,
        "ablate",
        &[
            ("galleries".into(), path_list(&args.galleries)),
            ("train_benign".into(), path_name(&args.train_benign)),
            (
                "train_adversarial".into(),
                path_name(&args.train_adversarial),
            ),
            ("eval_benign".into(), path_name(&args.eval_benign)),
            ("eval_adversarial".into(), path_name(&args.eval_adversarial)),
            ("mode".into(), mode_name.into()),
            ("k".into(), args.k.to_string()),
            (
                "k_list".into(),
                args.k_list
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("lr".into(), fmt_f64(args.lr)),
            ("momentum".into(), fmt_f64(args.momentum)),
            ("batch_size".into(), args.batch_size.to_string()),
            ("iterations".into(), args.iterations.to_string()),
            ("seed".into(), seed.to_string()),
        ],
    )?;

    println!("ablate ({mode_name}):");
    println!(
        "{:<16} {:>4} {:>4} {:>5} {:>9} {:>9} {:>9}",
        "config", "n", "k", "d", "accuracy", "auc", "f1"
    );
    for row in &table {
        println!(
            "{:<16} {:>4} {:>4} {:>5} {:>9.4} {:>9.4} {:>9.4}",
            row.config, row.n_experts, row.k, row.d, row.accuracy, row.auc, row.f1
        );
    }
    Ok(())
}

pub fn run_stats(args: &StatsArgs) -> Result<()> {
    let indexes = load_galleries(&args.galleries)?;
    let dim = indexes[0].dimension();
    let queries = load_queries(&args.queries, dim, indexes.len())?;
    if queries.is_empty() {
        return Err(Error::Empty);
    }
    let stats = relation_stats(&queries, &indexes, args.k)?;

    ensure_out_dir(&args.out_dir)?;
    let mut w = create_file(&args.out_dir, "relation.csv")?;
    format::write_relation_csv(&mut w, &stats)?;
    write_run_config(
        &args.out_dir,
        "stats",
        &[
            ("galleries".into(), path_list(&args.galleries)),
            ("queries".into(), path_list(&args.queries)),
            ("k".into(), args.k.to_string()),
        ],
    )?;
    println!("stats: {} rows -> {}", stats.len(), args.out_dir.display());
    Ok(())
}
