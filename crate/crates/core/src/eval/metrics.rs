//! External clustering measures computed from the cluster/class contingency table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmiNormalization {
    /// `MI / √(H(clusters)·H(classes))`.
    #[default]
    Geometric,
    /// `MI / ((H(clusters) + H(classes)) / 2)`.
    Arithmetic,
}

impl NmiNormalization {
    pub fn name(self) -> &'static str {
        match self {
            NmiNormalization::Geometric => "geometric",
            NmiNormalization::Arithmetic => "arithmetic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringScores {
    /// Mutual information in nats.
    pub mi: f64,
    pub nmi: f64,
    pub ari: f64,
    pub purity: f64,
}

struct Contingency {
    n: usize,
    /// `table[cluster][class]`
    table: Vec<Vec<usize>>,
    cluster_sizes: Vec<usize>,
    class_sizes: Vec<usize>,
}

impl Contingency {
    fn new(assignments: &[usize], labels: &[usize]) -> Self {
        let k = assignments.iter().max().map_or(0, |m| m + 1);
        let c = labels.iter().max().map_or(0, |m| m + 1);
        let mut table = vec![vec![0usize; c]; k];
        for (&a, &l) in assignments.iter().zip(labels) {
            table[a][l] += 1;
        }
        let cluster_sizes = table.iter().map(|r| r.iter().sum()).collect();
        let class_sizes = (0..c).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        Contingency {
            n: assignments.len(),
            table,
            cluster_sizes,
            class_sizes,
        }
    }
}

fn entropy(sizes: &[usize], n: usize) -> f64 {
    let n = n as f64;
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn choose2(x: usize) -> f64 {
    let x = x as f64;
    0.5 * x * (x - 1.0)
}

/// MI, NMI, ARI and purity of `assignments` against gold `labels`.
pub fn clustering_metrics(
    assignments: &[usize],
    labels: &[usize],
    normalization: NmiNormalization,
) -> Result<ClusteringScores> {
    if assignments.len() != labels.len() {
        return Err(Error::Eval(format!(
            "{} assignments for {} labels",
            assignments.len(),
            labels.len()
        )));
    }
    if assignments.is_empty() {
        return Err(Error::Eval("cannot score an empty clustering".into()));
    }
    let ct = Contingency::new(assignments, labels);
    let n = ct.n as f64;

    let mut mi = 0.0;
    for (i, row) in ct.table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            let a = ct.cluster_sizes[i] as f64;
            let b = ct.class_sizes[j] as f64;
            mi += nij / n * (n * nij / (a * b)).ln();
        }
    }
    let mi = mi.max(0.0);

    let h_clusters = entropy(&ct.cluster_sizes, ct.n);
    let h_classes = entropy(&ct.class_sizes, ct.n);
    let nmi = if h_clusters == 0.0 && h_classes == 0.0 {
        return Err(Error::Eval(
            "NMI is undefined for a single cluster against a single class".into(),
        ));
    } else if h_clusters == 0.0 || h_classes == 0.0 {
        0.0
    } else {
        let denom = match normalization {
            NmiNormalization::Geometric => (h_clusters * h_classes).sqrt(),
            NmiNormalization::Arithmetic => 0.5 * (h_clusters + h_classes),
        };
        (mi / denom).clamp(0.0, 1.0)
    };

    let index: f64 = ct.table.iter().flatten().map(|&x| choose2(x)).sum();
    let sum_a: f64 = ct.cluster_sizes.iter().map(|&x| choose2(x)).sum();
    let sum_b: f64 = ct.class_sizes.iter().map(|&x| choose2(x)).sum();
    let pairs = choose2(ct.n);
    let expected = if pairs > 0.0 {
        sum_a * sum_b / pairs
    } else {
        0.0
    };
    let max_index = 0.5 * (sum_a + sum_b);
    let ari = if max_index == expected {
        1.0
    } else {
        (index - expected) / (max_index - expected)
    };

    let majority: usize = ct
        .table
        .iter()
        .map(|r| r.iter().copied().max().unwrap_or(0))
        .sum();
    let purity = majority as f64 / n;

    Ok(ClusteringScores {
        mi,
        nmi,
        ari,
        purity,
    })
}
