//! Cross-module pipeline checks at reduced scale: scenario -> attack ->
//! features -> detector, plus the population-level relation separations the
//! attacks are supposed to produce.

use meaad_core::attack::{adaptive_attack_all, naive_attack_all, AttackConfig, AttackKind};
use meaad_core::detector::{predict, train_detector, Hyperparams, LabeledExample};
use meaad_core::embedding::QuerySample;
use meaad_core::features::assemble_context_feature;
use meaad_core::metrics::roc_auc;
use meaad_core::parallel;
use meaad_core::relation::relation_stats;
use meaad_core::scenario::{generate_scenario, ScenarioConfig};

fn small_scenario() -> ScenarioConfig {
    ScenarioConfig {
        n_identities: 12,
        items_per_identity: 10,
        n_experts: 3,
        dimension: 32,
        cluster_noise: 0.05,
        cross_expert_jitter: 0.02,
        queries_per_identity: 10,
        seed: 21,
    }
}

fn featurize(
    queries: &[QuerySample],
    indexes: &[meaad_core::embedding::ExpertIndex],
    k: usize,
    label: u8,
) -> Vec<LabeledExample> {
    parallel::map(queries, |q| LabeledExample {
        feature: assemble_context_feature(q, indexes, k).unwrap(),
        label,
    })
}

#[test]
fn end_to_end_detection_on_small_scenario() {
    let (indexes, queries) = generate_scenario(&small_scenario()).unwrap();
    let (train_q, eval_q) = queries.split_at(80);

    let attack = AttackConfig {
        seed: 3,
        ..AttackConfig::default()
    };
    let adv_train = naive_attack_all(train_q, &attack).unwrap();
    let adv_eval = naive_attack_all(eval_q, &attack).unwrap();

    let k = 5;
    let mut train_set = featurize(train_q, &indexes, k, 0);
    train_set.extend(featurize(&adv_train, &indexes, k, 1));
    let mut eval_set = featurize(eval_q, &indexes, k, 0);
    eval_set.extend(featurize(&adv_eval, &indexes, k, 1));

    let hyper = Hyperparams {
        batch_size: 128,
        iterations: 800,
        ..Hyperparams::default()
    };
    let trained = train_detector(&train_set, hyper, 5).unwrap();

    let scores: Vec<f64> = eval_set
        .iter()
        .map(|ex| {
            predict(&trained.model, &ex.feature.flat(), 0.5)
                .unwrap()
                .probability
        })
        .collect();
    let labels: Vec<u8> = eval_set.iter().map(|ex| ex.label).collect();
    let auc = roc_auc(&scores, &labels).unwrap().auc;
    assert!(auc > 0.95, "held-out AUC {auc} on the small scenario");
}

#[test]
fn naive_attack_separates_relation_populations() {
    let (indexes, queries) = generate_scenario(&small_scenario()).unwrap();
    let attack = AttackConfig {
        seed: 3,
        ..AttackConfig::default()
    };
    let attacked = naive_attack_all(&queries, &attack).unwrap();

    let k = 5;
    let benign = relation_stats(&queries, &indexes, k).unwrap();
    let adversarial = relation_stats(&attacked, &indexes, k).unwrap();
    let mean = |xs: Vec<f64>| -> f64 {
        let n = xs.len() as f64;
        xs.into_iter().sum::<f64>() / n
    };

    let benign_qs = mean(benign.iter().map(|s| s.query_support_mean).collect());
    let adv_qs = mean(adversarial.iter().map(|s| s.query_support_mean).collect());
    assert!(
        benign_qs > adv_qs,
        "query-support separation: benign {benign_qs} vs adversarial {adv_qs}"
    );

    let benign_cc = mean(
        benign
            .iter()
            .map(|s| s.common_count.unwrap() as f64)
            .collect(),
    );
    let adv_cc = mean(
        adversarial
            .iter()
            .map(|s| s.common_count.unwrap() as f64)
            .collect(),
    );
    assert!(
        benign_cc > adv_cc,
        "common-count separation: benign {benign_cc} vs adversarial {adv_cc}"
    );
}

#[test]
fn adaptive_attack_is_less_detected_than_naive() {
    let (indexes, queries) = generate_scenario(&small_scenario()).unwrap();
    let (train_q, eval_q) = queries.split_at(80);
    let attack = AttackConfig {
        seed: 3,
        ..AttackConfig::default()
    };
    let adv_train = naive_attack_all(train_q, &attack).unwrap();

    let k = 5;
    let mut train_set = featurize(train_q, &indexes, k, 0);
    train_set.extend(featurize(&adv_train, &indexes, k, 1));
    let hyper = Hyperparams {
        batch_size: 128,
        iterations: 800,
        ..Hyperparams::default()
    };
    let trained = train_detector(&train_set, hyper, 5).unwrap();

    let naive_eval = naive_attack_all(eval_q, &attack).unwrap();
    let adaptive_cfg = AttackConfig {
        kind: AttackKind::Adaptive,
        seed: 3,
        ..AttackConfig::default()
    };
    let adaptive_eval =
        adaptive_attack_all(eval_q, &indexes, &trained.model, k, &adaptive_cfg).unwrap();

    let detection_rate = |qs: &[QuerySample]| -> f64 {
        let hits = qs
            .iter()
            .filter(|q| {
                let f = assemble_context_feature(q, &indexes, k).unwrap();
                predict(&trained.model, &f.flat(), 0.5).unwrap().label == 1
            })
            .count();
        hits as f64 / qs.len() as f64
    };
    let naive_rate = detection_rate(&naive_eval);
    let adaptive_rate = detection_rate(&adaptive_eval);
    assert!(
        adaptive_rate < naive_rate,
        "adaptive evasion: adaptive {adaptive_rate} vs naive {naive_rate}"
    );
}

#[test]
fn successful_targeted_attacks_evade_better_than_naive() {
    use meaad_core::attack::targeted_multi_attack;

    let (indexes, queries) = generate_scenario(&small_scenario()).unwrap();
    let (train_q, eval_q) = queries.split_at(80);
    let attack = AttackConfig {
        seed: 3,
        ..AttackConfig::default()
    };
    let adv_train = naive_attack_all(train_q, &attack).unwrap();
    let k = 5;
    let mut train_set = featurize(train_q, &indexes, k, 0);
    train_set.extend(featurize(&adv_train, &indexes, k, 1));
    let hyper = Hyperparams {
        batch_size: 128,
        iterations: 800,
        ..Hyperparams::default()
    };
    let trained = train_detector(&train_set, hyper, 5).unwrap();

    // A generous budget makes targeted attacks succeed; success restores
    // cross-expert consistency, so these examples are the hardest to catch.
    let generous = AttackConfig {
        kind: AttackKind::Targeted,
        epsilon: 1.2,
        steps: 60,
        step_size: 0.25,
        seed: 3,
        ..AttackConfig::default()
    };
    let identities = indexes[0].identity_ids();
    let mut successful = Vec::new();
    for q in eval_q {
        let pos = identities.iter().position(|&i| i == q.identity_id).unwrap();
        let target = identities[(pos + 1) % identities.len()];
        let outcome = targeted_multi_attack(q, &indexes, target, k, &generous).unwrap();
        if outcome.success {
            successful.push(outcome.query);
        }
    }
    assert!(
        !successful.is_empty(),
        "generous budget should yield successes"
    );

    let naive_eval = naive_attack_all(eval_q, &attack).unwrap();
    let detection_rate = |qs: &[QuerySample]| -> f64 {
        let hits = qs
            .iter()
            .filter(|q| {
                let f = assemble_context_feature(q, &indexes, k).unwrap();
                predict(&trained.model, &f.flat(), 0.5).unwrap().label == 1
            })
            .count();
        hits as f64 / qs.len() as f64
    };
    assert!(
        detection_rate(&successful) < detection_rate(&naive_eval),
        "consistency-restoring attacks must be harder to detect"
    );
}

#[cfg(feature = "parallel")]
#[test]
fn parallel_featurization_matches_sequential_bitwise() {
    let (indexes, queries) = generate_scenario(&small_scenario()).unwrap();
    let k = 5;
    let par: Vec<Vec<f64>> = parallel::map(&queries, |q| {
        assemble_context_feature(q, &indexes, k).unwrap().flat()
    });
    let seq: Vec<Vec<f64>> = parallel::map_seq(&queries, |q| {
        assemble_context_feature(q, &indexes, k).unwrap().flat()
    });
    assert_eq!(par, seq, "scheduling must not change a single bit");
}

#[cfg(feature = "parallel")]
#[test]
fn training_bits_do_not_depend_on_thread_count() {
    // The fixed row-block reduction makes training identical under any
    // rayon pool size, including a single thread.
    let (indexes, queries) = generate_scenario(&small_scenario()).unwrap();
    let attack = AttackConfig {
        seed: 3,
        ..AttackConfig::default()
    };
    let adv = naive_attack_all(&queries, &attack).unwrap();
    let k = 4;
    let mut dataset = featurize(&queries, &indexes, k, 0);
    dataset.extend(featurize(&adv, &indexes, k, 1));
    let hyper = Hyperparams {
        batch_size: 64,
        iterations: 60,
        ..Hyperparams::default()
    };

    let wide = train_detector(&dataset, hyper, 9).unwrap();
    let narrow_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let narrow = narrow_pool.install(|| train_detector(&dataset, hyper, 9).unwrap());
    assert_eq!(wide.model, narrow.model);
    assert_eq!(wide.loss_trajectory, narrow.loss_trajectory);
}
