#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal, WeightedIndex};
use sphembed::corpus::{EncodedCorpus, Vocabulary};

pub fn random_unit<R: Rng>(rng: &mut R, p: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draws from vMF(mu, kappa) with Wood's rejection sampler.
pub fn sample_vmf<R: Rng>(rng: &mut R, mu: &[f64], kappa: f64) -> Vec<f64> {
    let p = mu.len();
    let pm1 = (p - 1) as f64;
    let b = (-2.0 * kappa + (4.0 * kappa * kappa + pm1 * pm1).sqrt()) / pm1;
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + pm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(pm1 / 2.0, pm1 / 2.0).unwrap();
    let w = loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.gen();
        if kappa * w + pm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };
    // Uniform direction orthogonal to mu.
    let mut v = random_unit(rng, p);
    let along = dot(&v, mu);
    v.iter_mut().zip(mu).for_each(|(vi, mi)| *vi -= along * mi);
    let n = dot(&v, &v).sqrt();
    let s = (1.0 - w * w).max(0.0).sqrt();
    mu.iter()
        .zip(&v)
        .map(|(m, vi)| w * m + s * vi / n)
        .collect()
}

pub struct SyntheticCorpus {
    pub text: String,
    pub labels: Vec<usize>,
    pub doc_directions: Vec<Vec<f64>>,
}

pub struct SyntheticSpec {
    pub clusters: usize,
    pub kappa: f64,
    pub vocab: usize,
    pub dim: usize,
    pub docs: usize,
    /// Center words per document; each is followed by its context words.
    pub centers_per_doc: usize,
    pub contexts_per_center: usize,
    /// Concentration of the word-given-paragraph and context-given-word draws.
    pub word_kappa: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            clusters: 3,
            kappa: 5.0,
            vocab: 1000,
            dim: 10,
            docs: 300,
            centers_per_doc: 20,
            contexts_per_center: 4,
            word_kappa: 1.0,
        }
    }
}

/// Text from the two-step model: document directions come from vMF clusters, a
/// center word is drawn with probability proportional to exp(κ_w cos(u, d)) and each
/// of its context words with probability proportional to exp(κ_w cos(v, u)).
pub fn synthetic_corpus<R: Rng>(rng: &mut R, spec: &SyntheticSpec) -> SyntheticCorpus {
    let centers: Vec<Vec<f64>> = (0..spec.clusters)
        .map(|_| random_unit(rng, spec.dim))
        .collect();
    let u: Vec<Vec<f64>> = (0..spec.vocab)
        .map(|_| random_unit(rng, spec.dim))
        .collect();
    let v: Vec<Vec<f64>> = (0..spec.vocab)
        .map(|_| random_unit(rng, spec.dim))
        .collect();
    let context_dists: Vec<WeightedIndex<f64>> = u
        .iter()
        .map(|uw| {
            WeightedIndex::new(v.iter().map(|vw| (spec.word_kappa * dot(vw, uw)).exp())).unwrap()
        })
        .collect();

    let mut text = String::new();
    let mut labels = Vec::with_capacity(spec.docs);
    let mut doc_directions = Vec::with_capacity(spec.docs);
    for j in 0..spec.docs {
        let label = j % spec.clusters;
        let d = sample_vmf(rng, &centers[label], spec.kappa);
        let center_dist =
            WeightedIndex::new(u.iter().map(|uw| (spec.word_kappa * dot(uw, &d)).exp())).unwrap();
        let mut words = Vec::new();
        for _ in 0..spec.centers_per_doc {
            let w = center_dist.sample(rng);
            words.push(w);
            for _ in 0..spec.contexts_per_center {
                words.push(context_dists[w].sample(rng));
            }
        }
        let line: Vec<String> = words.iter().map(|w| format!("w{w}")).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
        labels.push(label);
        doc_directions.push(d);
    }
    SyntheticCorpus {
        text,
        labels,
        doc_directions,
    }
}

pub fn encode(text: &str, min_count: u64) -> (Vocabulary, EncodedCorpus) {
    let vocab = Vocabulary::from_reader(text.as_bytes(), min_count).unwrap();
    let corpus = EncodedCorpus::from_reader(text.as_bytes(), &vocab).unwrap();
    (vocab, corpus)
}
