mod common;

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use sphembed::corpus::WindowMode;
use sphembed::eval::{clustering_runs, ClusterAlgorithm, NmiNormalization};
use sphembed::model::{init_embeddings, train, train_with_observer, NegativeReduce, TrainConfig};

fn small_config() -> TrainConfig {
    TrainConfig {
        dim: 16,
        iterations: 3,
        min_count: 1,
        ..TrainConfig::default()
    }
}

fn synthetic_with(
    docs: usize,
    word_kappa: f64,
) -> (
    sphembed::corpus::Vocabulary,
    sphembed::corpus::EncodedCorpus,
    Vec<usize>,
) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    let spec = common::SyntheticSpec {
        docs,
        vocab: 300,
        word_kappa,
        ..Default::default()
    };
    let syn = common::synthetic_corpus(&mut rng, &spec);
    let (vocab, corpus) = common::encode(&syn.text, 1);
    (vocab, corpus, syn.labels)
}

fn synthetic(
    docs: usize,
) -> (
    sphembed::corpus::Vocabulary,
    sphembed::corpus::EncodedCorpus,
    Vec<usize>,
) {
    synthetic_with(docs, 1.0)
}

#[test]
fn zero_iterations_returns_initialization() {
    let (vocab, corpus, _) = synthetic(30);
    let cfg = TrainConfig {
        iterations: 0,
        ..small_config()
    };
    let out = train(&corpus, &vocab, &cfg).unwrap();
    let init = init_embeddings(vocab.len(), corpus.doc_count(), cfg.dim, cfg.seed);
    assert_eq!(out.embeddings, init);
    assert_eq!(out.stats.processed_tuples, 0);
}

#[test]
fn single_thread_runs_are_bit_identical() {
    let (vocab, corpus, _) = synthetic(40);
    let a = train(&corpus, &vocab, &small_config()).unwrap();
    let b = train(&corpus, &vocab, &small_config()).unwrap();
    assert_eq!(a.embeddings, b.embeddings);
    let other_seed = TrainConfig {
        seed: 2,
        ..small_config()
    };
    assert_ne!(
        train(&corpus, &vocab, &other_seed).unwrap().embeddings,
        a.embeddings
    );
}

#[test]
fn rows_stay_unit_norm_with_several_threads() {
    let (vocab, corpus, _) = synthetic(60);
    for threads in [1, 3] {
        let cfg = TrainConfig {
            threads,
            ..small_config()
        };
        let mut processed = Vec::new();
        let out = train_with_observer(&corpus, &vocab, &cfg, |e| {
            assert!(
                e.norm_drift <= 1e-5,
                "epoch {} drift {}",
                e.epoch,
                e.norm_drift
            );
            processed.push(e.tuples);
        })
        .unwrap();
        assert!(out.embeddings.max_norm_deviation() <= 1e-5);
        assert_eq!(processed.len(), 3);
        assert_eq!(processed.iter().sum::<u64>(), out.stats.processed_tuples);
        let rates: Vec<f64> = out.stats.epochs.iter().map(|e| e.learning_rate).collect();
        assert!(rates.windows(2).all(|w| w[1] < w[0]), "{rates:?}");
    }
}

#[test]
fn options_change_the_run() {
    let (vocab, corpus, _) = synthetic(30);
    let base = train(&corpus, &vocab, &small_config()).unwrap();
    let variants = [
        TrainConfig {
            window_mode: WindowMode::Fixed,
            ..small_config()
        },
        TrainConfig {
            neg_reduce: NegativeReduce::Mean,
            ..small_config()
        },
        TrainConfig {
            subsample: None,
            ..small_config()
        },
        TrainConfig {
            neg_power: 0.0,
            ..small_config()
        },
    ];
    for cfg in variants {
        let out = train(&corpus, &vocab, &cfg).unwrap();
        assert_ne!(out.embeddings, base.embeddings, "{cfg:?}");
        assert!(out.embeddings.max_norm_deviation() <= 1e-5);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let (vocab, corpus, _) = synthetic(10);
    for cfg in [
        TrainConfig {
            dim: 1,
            ..small_config()
        },
        TrainConfig {
            margin: 0.0,
            ..small_config()
        },
        TrainConfig {
            window: 0,
            ..small_config()
        },
        TrainConfig {
            initial_lr: -1.0,
            ..small_config()
        },
        TrainConfig {
            threads: 0,
            ..small_config()
        },
        TrainConfig {
            subsample: Some(0.0),
            ..small_config()
        },
    ] {
        assert!(train(&corpus, &vocab, &cfg).is_err(), "{cfg:?}");
    }
}

fn mean_nmi(points: Vec<Vec<f64>>, labels: &[usize]) -> f64 {
    let unit: Vec<Vec<f64>> = points
        .into_iter()
        .map(|p| {
            let n = common::dot(&p, &p).sqrt();
            p.into_iter().map(|x| x / n).collect()
        })
        .collect();
    let runs = clustering_runs(
        ClusterAlgorithm::SKMeans,
        &unit,
        labels,
        3,
        5,
        0,
        NmiNormalization::Geometric,
    )
    .unwrap();
    runs.iter().map(|s| s.nmi).sum::<f64>() / runs.len() as f64
}

#[test]
fn embeddings_recover_document_clusters() {
    // Tight document clusters (the true directions separate perfectly).
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    let spec = common::SyntheticSpec {
        docs: 150,
        vocab: 300,
        kappa: 50.0,
        word_kappa: 5.0,
        ..Default::default()
    };
    let syn = common::synthetic_corpus(&mut rng, &spec);
    let (vocab, corpus) = common::encode(&syn.text, 1);
    assert!(mean_nmi(syn.doc_directions.clone(), &syn.labels) > 0.99);

    let cfg = TrainConfig {
        dim: 10,
        min_count: 1,
        ..TrainConfig::default()
    };
    let out = train(&corpus, &vocab, &cfg).unwrap();
    let word_means: Vec<Vec<f64>> = corpus
        .documents()
        .iter()
        .map(|doc| {
            let mut m = vec![0.0; cfg.dim];
            for &w in doc {
                m.iter_mut()
                    .zip(out.embeddings.target.row(w as usize))
                    .for_each(|(a, &b)| *a += b as f64);
            }
            m
        })
        .collect();
    let nmi = mean_nmi(word_means, &syn.labels);
    assert!(nmi > 0.5, "word-mean NMI {nmi}");

    // Paragraph rows see far fewer updates than words on a corpus this small.
    let fast = TrainConfig {
        initial_lr: 0.2,
        ..cfg
    };
    let out = train(&corpus, &vocab, &fast).unwrap();
    let paragraphs = out
        .embeddings
        .paragraph
        .iter_rows()
        .map(|r| r.iter().map(|&x| x as f64).collect())
        .collect();
    let nmi = mean_nmi(paragraphs, &syn.labels);
    assert!(nmi > 0.5, "paragraph NMI {nmi}");
}
