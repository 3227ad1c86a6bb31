use std::collections::HashMap;
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::hogwild::SharedParams;
use super::{
    init_embeddings, step_rows, Bank, EmbeddingMatrices, NegativeReduce, Scratch, TrainConfig,
};
use crate::corpus::{EncodedCorpus, NegativeSampler, TrainingTuple, TupleSource, Vocabulary};
use crate::error::{Error, Result};
use crate::sphere;

/// Tuples a worker processes between learning-rate updates and loss reports.
pub const LR_UPDATE_INTERVAL: u64 = 10_000;

const COUNT_SALT: u64 = 0x5851_F42D_4C95_7F2D;
const PROBE_SALT: u64 = 0x1405_7B7E_F767_814F;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub tuples: u64,
    /// Mean summed hinge loss per tuple, measured before each update.
    pub mean_loss: f64,
    pub learning_rate: f64,
    pub seconds: f64,
    /// Largest row-norm deviation just before the epoch-end renormalization.
    pub norm_drift: f64,
    /// Riemannian gradient norm of the mean probe loss after this epoch.
    pub grad_norm: Option<f64>,
    /// Mean summed hinge loss of the probe tuples after this epoch.
    pub probe_loss: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainStats {
    pub processed_tuples: u64,
    pub expected_tuples: u64,
    /// Mean loss of each block of [`LR_UPDATE_INTERVAL`] tuples, per worker in
    /// worker order within each epoch.
    pub interval_losses: Vec<f64>,
    pub epochs: Vec<EpochStats>,
    /// Probe gradient norm at initialization.
    pub initial_grad_norm: Option<f64>,
    pub initial_probe_loss: Option<f64>,
}

impl TrainStats {
    pub fn current_learning_rate(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.learning_rate)
    }
}

pub struct TrainOutput {
    pub embeddings: EmbeddingMatrices,
    pub stats: TrainStats,
}

/// Trains embeddings for every vocabulary word and every corpus paragraph.
pub fn train(
    corpus: &EncodedCorpus,
    vocab: &Vocabulary,
    config: &TrainConfig,
) -> Result<TrainOutput> {
    train_with_observer(corpus, vocab, config, |_| {})
}

/// Like [`train`], calling `observer` after every epoch.
pub fn train_with_observer(
    corpus: &EncodedCorpus,
    vocab: &Vocabulary,
    config: &TrainConfig,
    mut observer: impl FnMut(&EpochStats),
) -> Result<TrainOutput> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(Error::Config(
            "cannot train with an empty vocabulary".into(),
        ));
    }
    if corpus.doc_count() == 0 {
        return Err(Error::Config(
            "cannot train on a corpus without documents".into(),
        ));
    }
    if let Some(bad) = corpus
        .documents()
        .iter()
        .flatten()
        .find(|&&w| w as usize >= vocab.len())
    {
        return Err(Error::Config(format!(
            "corpus references word id {bad} outside a vocabulary of {}",
            vocab.len()
        )));
    }

    let sampler = NegativeSampler::from_vocabulary(vocab, config.neg_power)?;
    let source = TupleSource::new(corpus, vocab, &sampler, config.stream_config())?;
    let mut params = init_embeddings(vocab.len(), corpus.doc_count(), config.dim, config.seed);
    let mut stats = TrainStats::default();
    if config.iterations == 0 {
        return Ok(TrainOutput {
            embeddings: params,
            stats,
        });
    }

    let per_epoch = source.count_tuples(
        0..corpus.doc_count(),
        Xoshiro256PlusPlus::seed_from_u64(config.seed ^ COUNT_SALT),
    );
    let expected = (per_epoch * config.iterations as u64).max(1);
    stats.expected_tuples = expected;

    let probe = if config.probe_tuples > 0 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed ^ PROBE_SALT);
        source.sample_tuples(config.probe_tuples, &mut rng)
    } else {
        Vec::new()
    };
    let margin = config.margin;
    let probe_norm = |p: &EmbeddingMatrices| {
        (!probe.is_empty()).then(|| riemannian_gradient_norm(p, &probe, margin))
    };
    let probe_loss =
        |p: &EmbeddingMatrices| (!probe.is_empty()).then(|| mean_loss(p, &probe, margin));
    stats.initial_grad_norm = probe_norm(&params);
    stats.initial_probe_loss = probe_loss(&params);

    let schedule = Schedule {
        initial: config.initial_lr,
        floor: config.lr_floor_fraction,
        expected,
        step_scale: match config.neg_reduce {
            NegativeReduce::Sum => 1.0,
            NegativeReduce::Mean => 1.0 / config.negatives.max(1) as f64,
        },
    };
    let processed = AtomicU64::new(0);
    let workers = config.threads.min(corpus.doc_count()).max(1);
    let ranges = partition(corpus.doc_count(), workers);

    for epoch in 0..config.iterations {
        let started = Instant::now();
        let shared = SharedParams::new(&mut params);
        let reports: Vec<WorkerReport> = if workers == 1 {
            vec![run_worker(
                &source,
                shared,
                ranges[0].clone(),
                worker_rng(config.seed, 0, epoch),
                &processed,
                &schedule,
                margin as f32,
            )]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = ranges
                    .iter()
                    .enumerate()
                    .map(|(w, range)| {
                        let (source, processed, schedule) = (&source, &processed, &schedule);
                        let range = range.clone();
                        let rng = worker_rng(config.seed, w, epoch);
                        scope.spawn(move || {
                            run_worker(
                                source,
                                shared,
                                range,
                                rng,
                                processed,
                                schedule,
                                margin as f32,
                            )
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect()
            })
        };

        let norm_drift = params.renormalize();
        let tuples: u64 = reports.iter().map(|r| r.tuples).sum();
        let loss: f64 = reports.iter().map(|r| r.loss_sum).sum();
        for r in &reports {
            stats.interval_losses.extend_from_slice(&r.interval_losses);
        }
        stats.processed_tuples += tuples;
        let epoch_stats = EpochStats {
            epoch: epoch + 1,
            tuples,
            mean_loss: if tuples > 0 {
                loss / tuples as f64
            } else {
                0.0
            },
            learning_rate: schedule.rate(processed.load(Ordering::Relaxed)),
            seconds: started.elapsed().as_secs_f64(),
            norm_drift,
            grad_norm: probe_norm(&params),
            probe_loss: probe_loss(&params),
        };
        observer(&epoch_stats);
        stats.epochs.push(epoch_stats);
    }

    Ok(TrainOutput {
        embeddings: params,
        stats,
    })
}

struct Schedule {
    initial: f64,
    floor: f64,
    expected: u64,
    step_scale: f64,
}

impl Schedule {
    /// `η₀ · max(1 − processed / expected, floor)`.
    fn rate(&self, processed: u64) -> f64 {
        let remaining = 1.0 - processed as f64 / self.expected as f64;
        self.initial * remaining.max(self.floor)
    }
}

struct WorkerReport {
    tuples: u64,
    loss_sum: f64,
    interval_losses: Vec<f64>,
}

fn run_worker(
    source: &TupleSource<'_>,
    mut params: SharedParams<'_>,
    docs: Range<usize>,
    rng: Xoshiro256PlusPlus,
    processed: &AtomicU64,
    schedule: &Schedule,
    margin: f32,
) -> WorkerReport {
    let mut scratch = Scratch::new(super::ParamRows::dim(&params));
    let mut eta = (schedule.rate(processed.load(Ordering::Relaxed)) * schedule.step_scale) as f32;
    let mut report = WorkerReport {
        tuples: 0,
        loss_sum: 0.0,
        interval_losses: Vec::new(),
    };
    let mut block_tuples = 0u64;
    let mut block_loss = 0.0f64;
    for tuple in source.stream(docs, rng) {
        let l = step_rows(&mut params, &mut scratch, &tuple, eta, margin) as f64;
        block_loss += l;
        block_tuples += 1;
        if block_tuples == LR_UPDATE_INTERVAL {
            let done = processed.fetch_add(block_tuples, Ordering::Relaxed) + block_tuples;
            eta = (schedule.rate(done) * schedule.step_scale) as f32;
            report
                .interval_losses
                .push(block_loss / block_tuples as f64);
            report.tuples += block_tuples;
            report.loss_sum += block_loss;
            block_tuples = 0;
            block_loss = 0.0;
        }
    }
    if block_tuples > 0 {
        processed.fetch_add(block_tuples, Ordering::Relaxed);
        report
            .interval_losses
            .push(block_loss / block_tuples as f64);
        report.tuples += block_tuples;
        report.loss_sum += block_loss;
    }
    report
}

fn worker_rng(seed: u64, worker: usize, epoch: usize) -> Xoshiro256PlusPlus {
    let epoch_offset = (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    Xoshiro256PlusPlus::seed_from_u64((seed ^ worker as u64).wrapping_add(epoch_offset))
}

/// Splits `0..n` into `parts` contiguous ranges of near-equal size.
fn partition(n: usize, parts: usize) -> Vec<Range<usize>> {
    (0..parts)
        .map(|i| (i * n / parts)..((i + 1) * n / parts))
        .collect()
}

/// Mean over `tuples` of the hinge loss summed over each tuple's negatives.
pub fn mean_loss(params: &EmbeddingMatrices, tuples: &[TrainingTuple], margin: f64) -> f64 {
    if tuples.is_empty() {
        return 0.0;
    }
    let row = |bank: Bank, idx: u32| -> Vec<f64> {
        params
            .bank(bank)
            .row(idx as usize)
            .iter()
            .map(|&x| x as f64)
            .collect()
    };
    let mut total = 0.0;
    for t in tuples {
        let u = row(Bank::Target, t.center);
        let v = row(Bank::Context, t.context);
        let d = row(Bank::Paragraph, t.doc);
        for &neg in &t.negatives {
            let n = row(Bank::Target, neg);
            total += super::hinge(&u[..], &v[..], &d[..], &n[..], margin).max(0.0);
        }
    }
    total / tuples.len() as f64
}

/// Norm of the Riemannian gradient of the mean loss over `tuples`.
///
/// Each tuple's loss is summed over its negatives. Euclidean gradients are averaged
/// per parameter row, projected onto that row's tangent space, and the norms of all
/// touched rows combined.
pub fn riemannian_gradient_norm(
    params: &EmbeddingMatrices,
    tuples: &[TrainingTuple],
    margin: f64,
) -> f64 {
    if tuples.is_empty() {
        return 0.0;
    }
    let dim = params.dim();
    let row = |bank: Bank, idx: u32| -> Vec<f64> {
        params
            .bank(bank)
            .row(idx as usize)
            .iter()
            .map(|&x| x as f64)
            .collect()
    };
    let mut sums: HashMap<(Bank, u32), Vec<f64>> = HashMap::new();
    let mut parts = [
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    ];
    for t in tuples {
        let u = row(Bank::Target, t.center);
        let v = row(Bank::Context, t.context);
        let d = row(Bank::Paragraph, t.doc);
        for &neg in &t.negatives {
            let n = row(Bank::Target, neg);
            if super::hinge(&u[..], &v[..], &d[..], &n[..], margin) <= 0.0 {
                continue;
            }
            {
                let [gu, gv, gd, gn] = &mut parts;
                super::fill_gradients(&u[..], &v[..], &d[..], &n[..], [gu, gv, gd, gn]);
            }
            let keys = [
                (Bank::Target, t.center),
                (Bank::Context, t.context),
                (Bank::Paragraph, t.doc),
                (Bank::Target, neg),
            ];
            for (key, g) in keys.into_iter().zip(&parts) {
                let acc = sums.entry(key).or_insert_with(|| vec![0.0; dim]);
                acc.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
        }
    }
    let n = tuples.len() as f64;
    sums.iter()
        .map(|(key, g)| {
            let x = row(key.0, key.1);
            let radial = sphere::dot(&x[..], &g[..]);
            g.iter()
                .zip(&x)
                .map(|(gi, xi)| ((gi - radial * xi) / n).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_covers_range() {
        let parts = partition(10, 3);
        assert_eq!(parts, vec![0..3, 3..6, 6..10]);
        assert_eq!(partition(2, 2), vec![0..1, 1..2]);
    }

    #[test]
    fn schedule_decays_linearly_to_floor() {
        let s = Schedule {
            initial: 0.04,
            floor: 1e-4,
            expected: 1000,
            step_scale: 1.0,
        };
        assert_eq!(s.rate(0), 0.04);
        assert!((s.rate(500) - 0.02).abs() < 1e-12);
        assert!((s.rate(1000) - 0.04 * 1e-4).abs() < 1e-15);
        assert!((s.rate(5000) - 0.04 * 1e-4).abs() < 1e-15);
    }

    #[test]
    fn worker_seeds_differ() {
        use rand::RngCore;
        let mut a = worker_rng(1, 0, 0);
        let mut b = worker_rng(1, 1, 0);
        let mut c = worker_rng(1, 0, 1);
        let (x, y, z) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert!(x != y && x != z && y != z);
    }
}
