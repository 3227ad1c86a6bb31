use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::io::EmbeddingTable;
use crate::sphere;

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityPair {
    pub word1: String,
    pub word2: String,
    pub score: f64,
}

/// Human-rated word pairs (WordSim353, MEN, SimLex999 style).
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityDataset {
    pairs: Vec<SimilarityPair>,
}

impl SimilarityDataset {
    pub fn new(pairs: Vec<SimilarityPair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Eval("similarity dataset has no pairs".into()));
        }
        if let Some(p) = pairs.iter().find(|p| !p.score.is_finite()) {
            return Err(Error::Eval(format!(
                "non-finite score for pair ({}, {})",
                p.word1, p.word2
            )));
        }
        Ok(SimilarityDataset { pairs })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path)
    }

    /// Parses `word1<TAB>word2<TAB>score` lines; blank and `#` lines are skipped.
    pub fn from_reader<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let score = fields[2]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(path, i + 1, format!("bad score: {e}")))?;
            pairs.push(SimilarityPair {
                word1: fields[0].to_owned(),
                word2: fields[1].to_owned(),
                score,
            });
        }
        Self::new(pairs).map_err(|e| match e {
            Error::Eval(msg) => Error::parse(path, 0, msg),
            other => other,
        })
    }

    pub fn write_tsv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for p in &self.pairs {
            writeln!(writer, "{}\t{}\t{}", p.word1, p.word2, p.score)?;
        }
        Ok(())
    }

    pub fn pairs(&self) -> &[SimilarityPair] {
        &self.pairs
    }
}

/// Ranks starting at 1; tied values share the average of their ranks.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = 0.5 * (i + j) as f64 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Eval(format!(
            "spearman needs equal lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Eval(
            "spearman needs at least two observations".into(),
        ));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
        .ok_or_else(|| Error::Eval("spearman is undefined when all ranks are tied".into()))
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityReport {
    pub spearman: f64,
    /// Fraction of pairs with both words in the embedding vocabulary.
    pub coverage: f64,
    pub covered: usize,
    pub total: usize,
}

/// Correlates the cosine similarity of each pair's word vectors with the human
/// scores. Pairs with an out-of-vocabulary word are skipped.
pub fn evaluate_word_similarity(
    embeddings: &EmbeddingTable,
    dataset: &SimilarityDataset,
) -> Result<SimilarityReport> {
    let index: HashMap<&str, usize> = embeddings
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut model = Vec::new();
    let mut human = Vec::new();
    for pair in dataset.pairs() {
        if let (Some(&a), Some(&b)) = (
            index.get(pair.word1.as_str()),
            index.get(pair.word2.as_str()),
        ) {
            model.push(cosine(&embeddings.rows[a], &embeddings.rows[b]));
            human.push(pair.score);
        }
    }
    let total = dataset.pairs().len();
    if model.is_empty() {
        return Err(Error::Eval(
            "no similarity pair has both words in the embedding vocabulary".into(),
        ));
    }
    Ok(SimilarityReport {
        spearman: spearman(&model, &human)?,
        coverage: model.len() as f64 / total as f64,
        covered: model.len(),
        total,
    })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = sphere::norm(a) * sphere::norm(b);
    if denom == 0.0 {
        0.0
    } else {
        sphere::dot(a, b) / denom
    }
}
