//! Evaluation: word similarity, document clustering and k-NN classification.

pub mod cluster;
pub mod data;
pub mod knn;
pub mod metrics;
pub mod similarity;

pub use cluster::{
    cluster, clustering_runs, kmeans, spherical_kmeans, ClusterAlgorithm, ClusterConfig,
    ClusteringResult,
};
pub use data::{mean_std, read_split, LabeledCorpus};
pub use knn::{f1_scores, knn_classify, Distance, F1Scores};
pub use metrics::{clustering_metrics, ClusteringScores, NmiNormalization};
pub use similarity::{
    evaluate_word_similarity, spearman, SimilarityDataset, SimilarityPair, SimilarityReport,
};
