//! The `sphembed` command line.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::{EncodedCorpus, Vocabulary, WindowMode};
use crate::error::{Error, Result};
use crate::eval::{
    clustering_runs, evaluate_word_similarity, f1_scores, knn_classify, mean_std, read_split,
    ClusterAlgorithm, Distance, LabeledCorpus, NmiNormalization, SimilarityDataset,
};
use crate::manifest::{sha256_file, CorpusInfo, RunManifest, MANIFEST_FILE};
use crate::model::io::{write_embeddings_file, EmbeddingTable};
use crate::model::{train_with_observer, NegativeReduce, TrainConfig};

pub const WORDS_FILE: &str = "words.txt";
pub const CONTEXTS_FILE: &str = "contexts.txt";
pub const PARAGRAPHS_FILE: &str = "paragraphs.txt";

type Metric = fn(&crate::eval::ClusteringScores) -> f64;

#[derive(Debug, Parser)]
#[command(
    name = "sphembed",
    version,
    about = "Spherical word and paragraph embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train word, context and paragraph embeddings on a corpus.
    Train(TrainArgs),
    /// Spearman correlation of word-vector cosines with human similarity scores.
    EvalSim(EvalSimArgs),
    /// Cluster paragraph embeddings and score them against gold labels.
    EvalCluster(EvalClusterArgs),
    /// k-NN classification of paragraph embeddings on a train/test split.
    EvalClassify(EvalClassifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReduceArg {
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlgArg {
    Kmeans,
    Skmeans,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NmiArg {
    Geometric,
    Arithmetic,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus file, one paragraph per line.
    #[arg(long, required_unless_present = "from_manifest")]
    pub corpus: Option<PathBuf>,
    /// Corpus lines are `label<TAB>text`; only the text is used.
    #[arg(long)]
    pub labeled: bool,
    /// Directory for the embedding files and the manifest.
    #[arg(long, short, default_value = "embeddings")]
    pub output: PathBuf,
    /// Rerun the configuration recorded in a manifest (other training flags are ignored).
    #[arg(long, value_name = "MANIFEST")]
    pub from_manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(2..))]
    pub dim: u32,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub window: u32,
    #[arg(long, default_value_t = 0.15)]
    pub margin: f64,
    #[arg(long, default_value_t = 2)]
    pub negatives: u32,
    /// Initial learning rate; decays linearly.
    #[arg(long, default_value_t = 0.04)]
    pub lr: f64,
    /// Final learning rate as a fraction of the initial one.
    #[arg(long, default_value_t = 1e-4)]
    pub lr_floor: f64,
    #[arg(long, default_value_t = 10)]
    pub iters: u32,
    /// Discard words seen fewer times (100 for Wikipedia-scale corpora).
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, env = "SPHEMBED_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    #[arg(long, default_value_t = 1e-3)]
    pub subsample: f64,
    /// Exponent on word counts for the negative distribution (0 = uniform).
    #[arg(long, default_value_t = 0.75)]
    pub neg_power: f64,
    /// Always use the full window instead of sampling its size per token.
    #[arg(long)]
    pub fixed_window: bool,
    /// Combine the hinge terms of a tuple's negatives by sum or mean.
    #[arg(long, value_enum, default_value_t = ReduceArg::Sum)]
    pub neg_reduce: ReduceArg,
    /// Also write the vocabulary as `token<TAB>count` lines.
    #[arg(long)]
    pub vocab_dump: Option<PathBuf>,
    /// Suppress per-epoch progress on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvalSimArgs {
    /// Word embedding file.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// `word1<TAB>word2<TAB>score` file.
    #[arg(long)]
    pub dataset: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalClusterArgs {
    #[arg(long)]
    pub doc_embeddings: PathBuf,
    /// `label<TAB>text` file aligned with the paragraph embeddings.
    #[arg(long)]
    pub labels: PathBuf,
    /// Number of clusters; defaults to the number of classes.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value_t = AlgArg::Skmeans)]
    pub alg: AlgArg,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub runs: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NmiArg::Geometric)]
    pub nmi: NmiArg,
}

#[derive(Debug, Args)]
pub struct EvalClassifyArgs {
    #[arg(long)]
    pub doc_embeddings: PathBuf,
    /// `label<TAB>text` file aligned with the paragraph embeddings.
    #[arg(long)]
    pub labels: PathBuf,
    /// Indices of the training documents, one per line; the rest are test documents.
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let stdout = io::stdout();
    match run(cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Train(args) => cmd_train(&args),
        Command::EvalSim(args) => cmd_eval_sim(&args, out),
        Command::EvalCluster(args) => cmd_eval_cluster(&args, out),
        Command::EvalClassify(args) => cmd_eval_classify(&args, out),
    }
}

impl TrainArgs {
    pub fn to_config(&self) -> Result<TrainConfig> {
        if !(self.subsample >= 0.0) {
            return Err(Error::Config(format!(
                "--subsample must be >= 0, got {}",
                self.subsample
            )));
        }
        let threads = match self.threads {
            Some(t) => t as usize,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let config = TrainConfig {
            dim: self.dim as usize,
            margin: self.margin,
            negatives: self.negatives as usize,
            window: self.window as usize,
            iterations: self.iters as usize,
            initial_lr: self.lr,
            lr_floor_fraction: self.lr_floor,
            min_count: self.min_count,
            threads,
            seed: self.seed,
            subsample: (self.subsample > 0.0).then_some(self.subsample),
            neg_power: self.neg_power,
            window_mode: if self.fixed_window {
                WindowMode::Fixed
            } else {
                WindowMode::Dynamic
            },
            neg_reduce: match self.neg_reduce {
                ReduceArg::Sum => NegativeReduce::Sum,
                ReduceArg::Mean => NegativeReduce::Mean,
            },
            probe_tuples: 0,
        };
        config.validate()?;
        Ok(config)
    }
}

fn read_labeled_texts(path: &Path, min_count: u64) -> Result<(Vocabulary, EncodedCorpus)> {
    let labeled = LabeledCorpus::read(path)?;
    let mut text = Vec::new();
    labeled
        .write_texts(&mut text)
        .map_err(|e| Error::io(path, e))?;
    let vocab = Vocabulary::from_reader(io::Cursor::new(&text), min_count)?;
    let corpus = EncodedCorpus::from_reader(io::Cursor::new(&text), &vocab)?;
    Ok((vocab, corpus))
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let (config, corpus_path, labeled, expected_sha) = match &args.from_manifest {
        Some(path) => {
            let m = RunManifest::read(path)?;
            m.config.validate()?;
            let corpus = args.corpus.clone().unwrap_or(m.corpus.path);
            (m.config, corpus, m.corpus.labeled, Some(m.corpus.sha256))
        }
        None => (
            args.to_config()?,
            args.corpus.clone().expect("clap enforces --corpus"),
            args.labeled,
            None,
        ),
    };

    let sha256 = sha256_file(&corpus_path)?;
    if let Some(expected) = expected_sha {
        if expected != sha256 {
            return Err(Error::Config(format!(
                "corpus {} does not match the manifest checksum",
                corpus_path.display()
            )));
        }
    }

    let started = Instant::now();
    let (vocab, corpus, vocab_seconds) = if labeled {
        let (v, c) = read_labeled_texts(&corpus_path, config.min_count)?;
        (v, c, started.elapsed().as_secs_f64())
    } else {
        let v = Vocabulary::build(&corpus_path, config.min_count)?;
        let t = started.elapsed().as_secs_f64();
        let c = EncodedCorpus::encode(&corpus_path, &v)?;
        (v, c, t)
    };
    let encode_seconds = started.elapsed().as_secs_f64() - vocab_seconds;

    if !args.quiet {
        eprintln!(
            "vocabulary: {} words, {} documents, {} tokens",
            vocab.len(),
            corpus.doc_count(),
            corpus.token_count()
        );
    }

    let train_started = Instant::now();
    let quiet = args.quiet;
    let output = train_with_observer(&corpus, &vocab, &config, |e| {
        if !quiet {
            eprintln!(
                "epoch {:>3}  loss {:.6}  lr {:.6}  tuples {}  {:.1}s",
                e.epoch, e.mean_loss, e.learning_rate, e.tuples, e.seconds
            );
        }
    })?;
    let train_seconds = train_started.elapsed().as_secs_f64();

    fs::create_dir_all(&args.output).map_err(|e| Error::io(&args.output, e))?;
    let emb = &output.embeddings;
    write_embeddings_file(args.output.join(WORDS_FILE), vocab.tokens(), &emb.target)?;
    write_embeddings_file(
        args.output.join(CONTEXTS_FILE),
        vocab.tokens(),
        &emb.context,
    )?;
    write_embeddings_file(
        args.output.join(PARAGRAPHS_FILE),
        (0..corpus.doc_count()).map(|i| i.to_string()),
        &emb.paragraph,
    )?;
    if let Some(path) = &args.vocab_dump {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        vocab
            .write_dump(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))?;
    }

    let mut manifest = RunManifest::new(
        config,
        CorpusInfo {
            path: corpus_path,
            sha256,
            labeled,
            documents: corpus.doc_count(),
            tokens: corpus.token_count(),
            vocab_size: vocab.len(),
        },
    );
    manifest.timings.vocab_seconds = vocab_seconds;
    manifest.timings.encode_seconds = encode_seconds;
    manifest.timings.train_seconds = train_seconds;
    manifest.timings.epochs = output.stats.epochs;
    manifest.write(args.output.join(MANIFEST_FILE))
}

fn report_line(out: &mut dyn Write, name: &str, mean: f64, std: f64) -> Result<()> {
    writeln!(out, "{name}\t{mean:.6}\t{std:.6}").map_err(|e| Error::io("<stdout>", e))
}

pub fn cmd_eval_sim(args: &EvalSimArgs, out: &mut dyn Write) -> Result<()> {
    let table = EmbeddingTable::read(&args.embeddings)?;
    let dataset = SimilarityDataset::read(&args.dataset)?;
    let report = evaluate_word_similarity(&table, &dataset)?;
    writeln!(out, "# pairs={} covered={}", report.total, report.covered)
        .map_err(|e| Error::io("<stdout>", e))?;
    report_line(out, "spearman", report.spearman, 0.0)?;
    report_line(out, "coverage", report.coverage, 0.0)
}

fn load_labeled_embeddings(
    doc_embeddings: &Path,
    labels: &Path,
) -> Result<(EmbeddingTable, LabeledCorpus)> {
    let table = EmbeddingTable::read(doc_embeddings)?;
    let labeled = LabeledCorpus::read(labels)?;
    if table.len() != labeled.len() {
        return Err(Error::Eval(format!(
            "{} has {} paragraph rows but {} has {} labels",
            doc_embeddings.display(),
            table.len(),
            labels.display(),
            labeled.len()
        )));
    }
    Ok((table, labeled))
}

pub fn cmd_eval_cluster(args: &EvalClusterArgs, out: &mut dyn Write) -> Result<()> {
    let (table, labeled) = load_labeled_embeddings(&args.doc_embeddings, &args.labels)?;
    let k = args.k.unwrap_or(labeled.class_count());
    let (algorithm, points) = match args.alg {
        AlgArg::Kmeans => (ClusterAlgorithm::KMeans, table.rows),
        AlgArg::Skmeans => (ClusterAlgorithm::SKMeans, table.normalized_rows()),
    };
    let normalization = match args.nmi {
        NmiArg::Geometric => NmiNormalization::Geometric,
        NmiArg::Arithmetic => NmiNormalization::Arithmetic,
    };
    let runs = clustering_runs(
        algorithm,
        &points,
        &labeled.labels,
        k,
        args.runs as usize,
        args.seed,
        normalization,
    )?;
    writeln!(
        out,
        "# alg={} k={} runs={} mi=nats nmi={}",
        match algorithm {
            ClusterAlgorithm::KMeans => "kmeans",
            ClusterAlgorithm::SKMeans => "skmeans",
        },
        k,
        runs.len(),
        normalization.name()
    )
    .map_err(|e| Error::io("<stdout>", e))?;
    let metrics: [(&str, Metric); 4] = [
        ("mi", |s| s.mi),
        ("nmi", |s| s.nmi),
        ("ari", |s| s.ari),
        ("purity", |s| s.purity),
    ];
    for (name, get) in metrics {
        let values: Vec<f64> = runs.iter().map(get).collect();
        let (mean, std) = mean_std(&values);
        report_line(out, name, mean, std)?;
    }
    Ok(())
}

pub fn cmd_eval_classify(args: &EvalClassifyArgs, out: &mut dyn Write) -> Result<()> {
    let (table, labeled) = load_labeled_embeddings(&args.doc_embeddings, &args.labels)?;
    let train_idx = read_split(&args.split, table.len())?;
    let mut is_train = vec![false; table.len()];
    train_idx.iter().for_each(|&i| is_train[i] = true);
    let test_idx: Vec<usize> = (0..table.len()).filter(|&i| !is_train[i]).collect();

    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<usize>) {
        idx.iter()
            .map(|&i| (table.rows[i].clone(), labeled.labels[i]))
            .unzip()
    };
    let (train_points, train_labels) = pick(&train_idx);
    let (test_points, test_labels) = pick(&test_idx);
    let predicted = knn_classify(
        &train_points,
        &train_labels,
        &test_points,
        args.k,
        Distance::Euclidean,
    )?;
    let scores = f1_scores(&predicted, &test_labels, labeled.class_count())?;
    writeln!(
        out,
        "# k={} train={} test={}",
        args.k,
        train_points.len(),
        test_points.len()
    )
    .map_err(|e| Error::io("<stdout>", e))?;
    report_line(out, "macro_f1", scores.macro_f1, 0.0)?;
    report_line(out, "micro_f1", scores.micro_f1, 0.0)
}
