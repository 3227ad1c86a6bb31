use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Gold classes for each paragraph, read from `label<TAB>document text` lines.
///
/// Class ids are assigned in sorted order of the label strings.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledCorpus {
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub texts: Vec<String>,
}

impl LabeledCorpus {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path)
    }

    pub fn from_reader<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut raw = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let (label, text) = match line.split_once('\t') {
                Some((l, t)) => (l, t),
                None if !line.trim().is_empty() => (line.as_str(), ""),
                None => return Err(Error::parse(path, i + 1, "missing label")),
            };
            let label = label.trim();
            if label.is_empty() {
                return Err(Error::parse(path, i + 1, "empty label"));
            }
            raw.push((label.to_owned(), text.to_owned()));
        }
        if raw.is_empty() {
            return Err(Error::parse(path, 0, "labeled corpus is empty"));
        }
        let class_names: Vec<String> = raw
            .iter()
            .map(|(l, _)| l.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let (labels, texts) = raw
            .into_iter()
            .map(|(l, t)| (class_names.binary_search(&l).unwrap(), t))
            .unzip();
        Ok(LabeledCorpus {
            labels,
            class_names,
            texts,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// Writes the document texts, one per line, as a training corpus.
    pub fn write_texts<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for t in &self.texts {
            writeln!(writer, "{t}")?;
        }
        writer.flush()
    }
}

/// Reads the 0-based indices of training documents, one per line.
pub fn read_split(path: impl AsRef<Path>, doc_count: usize) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_split(BufReader::new(file), path, doc_count)
}

pub fn parse_split<R: BufRead>(reader: R, path: &Path, doc_count: usize) -> Result<Vec<usize>> {
    let mut seen = vec![false; doc_count];
    let mut indices = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let idx: usize = line
            .parse()
            .map_err(|e| Error::parse(path, i + 1, format!("bad index: {e}")))?;
        if idx >= doc_count {
            return Err(Error::parse(
                path,
                i + 1,
                format!("index {idx} out of range for {doc_count} documents"),
            ));
        }
        if std::mem::replace(&mut seen[idx], true) {
            return Err(Error::parse(path, i + 1, format!("duplicate index {idx}")));
        }
        indices.push(idx);
    }
    Ok(indices)
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
