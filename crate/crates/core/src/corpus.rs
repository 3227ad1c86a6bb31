//! Corpus ingestion and training-tuple generation.
//!
//! A corpus is UTF-8 text with one paragraph per line; tokens are split on ASCII
//! whitespace and kept verbatim. Line `i` of the file is paragraph `i`, including
//! empty lines, so paragraph ids always line up with line numbers.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type WordId = u32;

/// Tokens that survived the frequency cutoff, ordered by descending count.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, WordId>,
    counts: Vec<u64>,
    total_tokens: u64,
}

impl Vocabulary {
    /// Builds the vocabulary of the corpus at `path`.
    pub fn build(path: impl AsRef<Path>, min_count: u64) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), min_count).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    /// Builds a vocabulary from any line-oriented reader.
    pub fn from_reader<R: BufRead>(reader: R, min_count: u64) -> Result<Self> {
        let mut raw: HashMap<String, u64> = HashMap::new();
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io("<corpus>", e))?;
            for token in tokens(&line) {
                match raw.get_mut(token) {
                    Some(c) => *c += 1,
                    None => {
                        raw.insert(token.to_owned(), 1);
                    }
                }
            }
        }
        Self::from_counts(raw, min_count)
    }

    /// Builds a vocabulary from precomputed counts.
    pub fn from_counts(
        counts: impl IntoIterator<Item = (String, u64)>,
        min_count: u64,
    ) -> Result<Self> {
        let mut entries: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count && *c > 0)
            .collect();
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let total_tokens = entries.iter().map(|(_, c)| c).sum();
        let token_to_id = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i as WordId))
            .collect();
        let (id_to_token, counts) = entries.into_iter().unzip();
        Ok(Vocabulary {
            id_to_token,
            token_to_id,
            counts,
            total_tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<WordId> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: WordId) -> &str {
        &self.id_to_token[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn count(&self, id: WordId) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of corpus tokens that belong to the vocabulary.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Per-word keep probability for frequent-word subsampling; all ones when
    /// `threshold` is `None`.
    pub fn keep_probabilities(&self, threshold: Option<f64>) -> Vec<f64> {
        match threshold {
            None => vec![1.0; self.len()],
            Some(t) => self
                .counts
                .iter()
                .map(|&c| subsample_keep_probability(c, self.total_tokens, t))
                .collect(),
        }
    }

    /// Writes `token<TAB>count` lines.
    pub fn write_dump<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for (token, count) in self.id_to_token.iter().zip(&self.counts) {
            writeln!(writer, "{token}\t{count}")?;
        }
        Ok(())
    }
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split_ascii_whitespace()
}

/// The corpus as word-id sequences, one per input line.
#[derive(Clone, Debug, Default)]
pub struct EncodedCorpus {
    documents: Vec<Vec<WordId>>,
}

impl EncodedCorpus {
    pub fn encode(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), vocab).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn from_reader<R: Read>(reader: R, vocab: &Vocabulary) -> Result<Self> {
        let mut documents = Vec::new();
        for line in BufReader::new(reader).lines() {
            let line = line.map_err(|e| Error::io("<corpus>", e))?;
            documents.push(tokens(&line).filter_map(|t| vocab.id(t)).collect());
        }
        Ok(EncodedCorpus { documents })
    }

    pub fn from_documents(documents: Vec<Vec<WordId>>) -> Self {
        EncodedCorpus { documents }
    }

    pub fn documents(&self) -> &[Vec<WordId>] {
        &self.documents
    }

    pub fn doc_count(&self) -> usize {
        self.documents.len()
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(Vec::len).sum()
    }
}

/// `min(1, √(threshold / f))` with `f = word_count / total`.
pub fn subsample_keep_probability(word_count: u64, total: u64, threshold: f64) -> f64 {
    debug_assert!(total > 0 && threshold > 0.0);
    if word_count == 0 {
        return 1.0;
    }
    let freq = word_count as f64 / total as f64;
    (threshold / freq).sqrt().min(1.0)
}

/// Draws negative words with probability proportional to `count^power`.
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64], power: f64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Config(
                "negative sampler needs a non-empty vocabulary".into(),
            ));
        }
        if !power.is_finite() || power < 0.0 {
            return Err(Error::Config(format!(
                "negative power must be >= 0, got {power}"
            )));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Config("negative sampler weights sum to zero".into()));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc / total
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(NegativeSampler { cumulative })
    }

    pub fn from_vocabulary(vocab: &Vocabulary, power: f64) -> Result<Self> {
        Self::new(vocab.counts(), power)
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Probability of drawing `id`.
    pub fn probability(&self, id: WordId) -> f64 {
        let i = id as usize;
        self.cumulative[i] - if i == 0 { 0.0 } else { self.cumulative[i - 1] }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WordId {
        let r: f64 = rng.gen();
        let idx = self.cumulative.partition_point(|&c| c <= r);
        idx.min(self.cumulative.len() - 1) as WordId
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowMode {
    /// Effective window drawn uniformly from `1..=window` per center token.
    Dynamic,
    Fixed,
}

/// One observed (center, context, paragraph) event plus its negatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingTuple {
    pub center: WordId,
    pub context: WordId,
    pub doc: u32,
    pub negatives: Vec<WordId>,
}

/// Settings shared by every tuple stream over a corpus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamConfig {
    pub window: usize,
    pub negatives: usize,
    pub window_mode: WindowMode,
    pub subsample: Option<f64>,
}

/// Immutable state needed to generate tuples; shared by all workers.
pub struct TupleSource<'a> {
    corpus: &'a EncodedCorpus,
    sampler: &'a NegativeSampler,
    keep: Vec<f64>,
    config: StreamConfig,
}

impl<'a> TupleSource<'a> {
    pub fn new(
        corpus: &'a EncodedCorpus,
        vocab: &Vocabulary,
        sampler: &'a NegativeSampler,
        config: StreamConfig,
    ) -> Result<Self> {
        if config.window == 0 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        if let Some(t) = config.subsample {
            if !(t > 0.0) {
                return Err(Error::Config(format!(
                    "subsample threshold must be > 0, got {t}"
                )));
            }
        }
        Ok(TupleSource {
            corpus,
            sampler,
            keep: vocab.keep_probabilities(config.subsample),
            config,
        })
    }

    pub fn corpus(&self) -> &EncodedCorpus {
        self.corpus
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    /// Tuple stream over the documents in `docs`.
    pub fn stream<R: Rng>(&self, docs: Range<usize>, rng: R) -> TupleStream<'_, R> {
        let end = docs.end.min(self.corpus.doc_count());
        TupleStream {
            source: self,
            rng,
            doc: docs.start,
            end_doc: end,
            kept: Vec::new(),
            center: 0,
            context: 0,
            context_end: 0,
        }
    }

    /// Number of tuples one pass over `docs` would emit with this RNG; draws no
    /// negatives.
    pub fn count_tuples<R: Rng>(&self, docs: Range<usize>, mut rng: R) -> u64 {
        let mut kept = Vec::new();
        let mut total = 0u64;
        for doc in &self.corpus.documents[docs] {
            self.subsample_into(doc, &mut kept, &mut rng);
            for t in 0..kept.len() {
                let (lo, hi) = self.window_bounds(t, kept.len(), &mut rng);
                total += (hi - lo) as u64;
            }
        }
        total
    }

    /// Draws `n` tuples at random positions of the corpus without subsampling.
    /// Used to probe the objective at fixed points during training.
    pub fn sample_tuples<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<TrainingTuple> {
        let mut offsets = Vec::with_capacity(self.corpus.doc_count());
        let mut total = 0usize;
        for doc in &self.corpus.documents {
            total += if doc.len() >= 2 { doc.len() } else { 0 };
            offsets.push(total);
        }
        if total == 0 {
            return Vec::new();
        }
        (0..n)
            .map(|_| {
                let r = rng.gen_range(0..total);
                let d = offsets.partition_point(|&o| o <= r);
                let doc = &self.corpus.documents[d];
                let t = r - if d == 0 { 0 } else { offsets[d - 1] };
                let (lo, hi) = self.window_bounds(t, doc.len(), rng);
                let mut c = rng.gen_range(lo..hi);
                if c >= t {
                    c += 1;
                }
                TrainingTuple {
                    center: doc[t],
                    context: doc[c],
                    doc: d as u32,
                    negatives: (0..self.config.negatives)
                        .map(|_| self.sampler.sample(rng))
                        .collect(),
                }
            })
            .collect()
    }

    fn subsample_into<R: Rng>(&self, doc: &[WordId], kept: &mut Vec<WordId>, rng: &mut R) {
        kept.clear();
        if self.config.subsample.is_none() {
            kept.extend_from_slice(doc);
            return;
        }
        for &w in doc {
            let p = self.keep[w as usize];
            if p >= 1.0 || rng.gen::<f64>() < p {
                kept.push(w);
            }
        }
    }

    /// Inclusive bounds `(lo, hi)` of the context positions around `t`; the window
    /// holds `hi - lo` context slots once `t` itself is excluded.
    fn window_bounds<R: Rng>(&self, t: usize, len: usize, rng: &mut R) -> (usize, usize) {
        let b = match self.config.window_mode {
            WindowMode::Dynamic => rng.gen_range(1..=self.config.window),
            WindowMode::Fixed => self.config.window,
        };
        let lo = t.saturating_sub(b);
        let hi = (t + b).min(len - 1);
        (lo, hi)
    }
}

/// Sequential (center, context, paragraph) tuples over a range of documents.
pub struct TupleStream<'s, R> {
    source: &'s TupleSource<'s>,
    rng: R,
    doc: usize,
    end_doc: usize,
    kept: Vec<WordId>,
    center: usize,
    context: usize,
    context_end: usize,
}

impl<'s, R: Rng> TupleStream<'s, R> {
    /// Next tuple together with the positions of its center and context word in the
    /// subsampled document.
    pub fn next_positioned(&mut self) -> Option<(TrainingTuple, usize, usize)> {
        loop {
            if self.context <= self.context_end && self.center < self.kept.len() {
                if self.context == self.center {
                    self.context += 1;
                    continue;
                }
                let (t, c) = (self.center, self.context);
                self.context += 1;
                let negatives = (0..self.source.config.negatives)
                    .map(|_| self.source.sampler.sample(&mut self.rng))
                    .collect();
                let tuple = TrainingTuple {
                    center: self.kept[t],
                    context: self.kept[c],
                    doc: (self.doc - 1) as u32,
                    negatives,
                };
                return Some((tuple, t, c));
            }

            // Advance to the next center, or the next document.
            if self.context > self.context_end && self.center + 1 < self.kept.len() {
                self.center += 1;
            } else if self.doc < self.end_doc {
                let doc = &self.source.corpus.documents[self.doc];
                self.source
                    .subsample_into(doc, &mut self.kept, &mut self.rng);
                self.doc += 1;
                self.center = 0;
                if self.kept.is_empty() {
                    self.context = 1;
                    self.context_end = 0;
                    continue;
                }
            } else {
                return None;
            }
            let (lo, hi) = self
                .source
                .window_bounds(self.center, self.kept.len(), &mut self.rng);
            self.context = lo;
            self.context_end = hi;
        }
    }
}

impl<R: Rng> Iterator for TupleStream<'_, R> {
    type Item = TrainingTuple;

    fn next(&mut self) -> Option<TrainingTuple> {
        self.next_positioned().map(|(t, _, _)| t)
    }
}

/// Tuple stream over the whole corpus, seeded from `seed`.
pub fn tuple_stream<'s>(
    source: &'s TupleSource<'s>,
    seed: u64,
) -> TupleStream<'s, Xoshiro256PlusPlus> {
    source.stream(
        0..source.corpus.doc_count(),
        Xoshiro256PlusPlus::seed_from_u64(seed),
    )
}
