//! The joint spherical objective and its optimizer.
//!
//! A training tuple `(u, v, d)` pairs a center word `u` with a context word `v`
//! seen in its window inside paragraph `d`. Against a sampled negative word `u′`
//! the tuple contributes the hinge
//!
//! ```text
//! max(0, m − v·u − u·d + v·u′ + u′·d)
//! ```
//!
//! where all four vectors live on the unit sphere, so cosines are plain dot
//! products. Each touched row is moved with the modified Riemannian SGD step in
//! [`crate::sphere`].

mod hogwild;
pub mod io;
mod train;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::corpus::{StreamConfig, TrainingTuple, WindowMode};
use crate::error::{Error, Result};
use crate::sphere::{self, dot, SampleRole, UnitVector};

pub use train::{
    mean_loss, riemannian_gradient_norm, train, train_with_observer, EpochStats, TrainOutput,
    TrainStats,
};

/// How the per-negative hinge terms of one tuple are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeReduce {
    Sum,
    /// Divides the step size by the number of negatives.
    Mean,
}

/// Every hyperparameter of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub margin: f64,
    pub negatives: usize,
    pub window: usize,
    pub iterations: usize,
    pub initial_lr: f64,
    pub lr_floor_fraction: f64,
    pub min_count: u64,
    pub threads: usize,
    pub seed: u64,
    /// Frequent-word subsampling threshold; `None` disables subsampling.
    pub subsample: Option<f64>,
    pub neg_power: f64,
    pub window_mode: WindowMode,
    pub neg_reduce: NegativeReduce,
    /// Size of the fixed tuple sample used to track the Riemannian gradient norm
    /// after every epoch; 0 disables tracking.
    #[serde(default)]
    pub probe_tuples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            margin: 0.15,
            negatives: 2,
            window: 10,
            iterations: 10,
            initial_lr: 0.04,
            lr_floor_fraction: 1e-4,
            min_count: 5,
            threads: 1,
            seed: 1,
            subsample: Some(1e-3),
            neg_power: 0.75,
            window_mode: WindowMode::Dynamic,
            neg_reduce: NegativeReduce::Sum,
            probe_tuples: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.dim < 2 {
            return fail(format!("dim must be >= 2, got {}", self.dim));
        }
        if !(self.margin > 0.0) || !self.margin.is_finite() {
            return fail(format!("margin must be > 0, got {}", self.margin));
        }
        if !(self.initial_lr > 0.0) || !self.initial_lr.is_finite() {
            return fail(format!(
                "learning rate must be > 0, got {}",
                self.initial_lr
            ));
        }
        if !(0.0..=1.0).contains(&self.lr_floor_fraction) {
            return fail(format!(
                "lr floor fraction must be in [0, 1], got {}",
                self.lr_floor_fraction
            ));
        }
        if self.window == 0 {
            return fail("window must be >= 1".into());
        }
        if self.threads == 0 {
            return fail("threads must be >= 1".into());
        }
        if let Some(t) = self.subsample {
            if !(t > 0.0) {
                return fail(format!("subsample threshold must be > 0, got {t}"));
            }
        }
        if !(self.neg_power >= 0.0) || !self.neg_power.is_finite() {
            return fail(format!(
                "negative power must be >= 0, got {}",
                self.neg_power
            ));
        }
        Ok(())
    }

    pub fn stream_config(&self) -> StreamConfig {
        StreamConfig {
            window: self.window,
            negatives: self.negatives,
            window_mode: self.window_mode,
            subsample: self.subsample,
        }
    }
}

/// A dense row-major `rows × dim` matrix of `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Matrix {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn from_vec(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::DimensionMismatch {
                expected: rows * dim,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, dim, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Renormalizes every row; returns the largest `|‖row‖ − 1|` seen before.
    pub fn renormalize(&mut self) -> f64 {
        let dim = self.dim;
        let mut worst = 0.0f64;
        for row in self.data.chunks_exact_mut(dim) {
            let n = sphere::norm(row) as f64;
            worst = worst.max((n - 1.0).abs());
            sphere::normalize_in_place(row);
        }
        worst
    }

    /// Largest `|‖row‖ − 1|` over all rows, computed in double precision.
    pub fn max_norm_deviation(&self) -> f64 {
        self.iter_rows()
            .map(|r| {
                let n: f64 = r
                    .iter()
                    .map(|&x| (x as f64) * (x as f64))
                    .sum::<f64>()
                    .sqrt();
                (n - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Which parameter bank a row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bank {
    /// Center-word vectors, also used for negative samples.
    Target,
    Context,
    Paragraph,
}

/// Target-word, context-word and paragraph embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrices {
    pub target: Matrix,
    pub context: Matrix,
    pub paragraph: Matrix,
}

impl EmbeddingMatrices {
    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn bank(&self, bank: Bank) -> &Matrix {
        match bank {
            Bank::Target => &self.target,
            Bank::Context => &self.context,
            Bank::Paragraph => &self.paragraph,
        }
    }

    pub fn bank_mut(&mut self, bank: Bank) -> &mut Matrix {
        match bank {
            Bank::Target => &mut self.target,
            Bank::Context => &mut self.context,
            Bank::Paragraph => &mut self.paragraph,
        }
    }

    pub fn renormalize(&mut self) -> f64 {
        self.target
            .renormalize()
            .max(self.context.renormalize())
            .max(self.paragraph.renormalize())
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.target
            .max_norm_deviation()
            .max(self.context.max_norm_deviation())
            .max(self.paragraph.max_norm_deviation())
    }
}

/// Rows drawn uniformly from the sphere: i.i.d. standard normal coordinates,
/// then normalized. Target, context and paragraph banks are filled in that order.
pub fn init_embeddings(
    vocab_size: usize,
    doc_count: usize,
    dim: usize,
    seed: u64,
) -> EmbeddingMatrices {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut random_bank = |rows: usize| {
        let mut m = Matrix::zeros(rows, dim);
        for row in m.as_mut_slice().chunks_exact_mut(dim) {
            loop {
                for x in row.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *x = z as f32;
                }
                if sphere::normalize_in_place(row) {
                    break;
                }
            }
        }
        m
    };
    EmbeddingMatrices {
        target: random_bank(vocab_size),
        context: random_bank(vocab_size),
        paragraph: random_bank(doc_count),
    }
}

/// Hinge loss of one (tuple, negative) pair.
pub fn loss(
    u: &UnitVector,
    v: &UnitVector,
    d: &UnitVector,
    u_neg: &UnitVector,
    margin: f64,
) -> f64 {
    hinge(
        u.as_slice(),
        v.as_slice(),
        d.as_slice(),
        u_neg.as_slice(),
        margin,
    )
    .max(0.0)
}

/// Value inside the hinge, `m − v·u − u·d + v·u′ + u′·d`.
#[inline]
pub(crate) fn hinge<F: num_traits::Float>(u: &[F], v: &[F], d: &[F], n: &[F], margin: F) -> F {
    margin - dot(v, u) - dot(u, d) + dot(v, n) + dot(n, d)
}

/// Euclidean gradients of the hinge loss with respect to each argument.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub target: Vec<f64>,
    pub context: Vec<f64>,
    pub paragraph: Vec<f64>,
    pub negative: Vec<f64>,
}

/// Gradients of [`loss`]; all zero when the hinge is inactive.
pub fn euclidean_gradients(
    u: &UnitVector,
    v: &UnitVector,
    d: &UnitVector,
    u_neg: &UnitVector,
    margin: f64,
) -> Gradients {
    let (u, v, d, n) = (u.as_slice(), v.as_slice(), d.as_slice(), u_neg.as_slice());
    let p = u.len();
    let mut g = Gradients {
        target: vec![0.0; p],
        context: vec![0.0; p],
        paragraph: vec![0.0; p],
        negative: vec![0.0; p],
    };
    if hinge(u, v, d, n, margin) > 0.0 {
        fill_gradients(
            u,
            v,
            d,
            n,
            [
                &mut g.target,
                &mut g.context,
                &mut g.paragraph,
                &mut g.negative,
            ],
        );
    }
    g
}

/// Writes the active-hinge gradients `[g_u, g_v, g_d, g_u′]` into `out`.
#[inline]
fn fill_gradients<F: num_traits::Float>(u: &[F], v: &[F], d: &[F], n: &[F], out: [&mut [F]; 4]) {
    let [gu, gv, gd, gn] = out;
    for i in 0..u.len() {
        gu[i] = -v[i] - d[i];
        gv[i] = n[i] - u[i];
        gd[i] = n[i] - u[i];
        gn[i] = v[i] + d[i];
    }
}

/// Read and update access to parameter rows, one row at a time.
pub(crate) trait ParamRows {
    fn dim(&self) -> usize;
    fn read(&self, bank: Bank, idx: usize, out: &mut [f32]);
    fn update(&mut self, bank: Bank, idx: usize, f: impl FnOnce(&mut [f32]));
}

impl ParamRows for EmbeddingMatrices {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn read(&self, bank: Bank, idx: usize, out: &mut [f32]) {
        out.copy_from_slice(self.bank(bank).row(idx));
    }

    fn update(&mut self, bank: Bank, idx: usize, f: impl FnOnce(&mut [f32])) {
        f(self.bank_mut(bank).row_mut(idx))
    }
}

/// Per-worker buffers for [`step_rows`].
pub(crate) struct Scratch {
    rows: [Vec<f32>; 4],
    grads: [Vec<f32>; 4],
}

impl Scratch {
    pub(crate) fn new(dim: usize) -> Self {
        Scratch {
            rows: std::array::from_fn(|_| vec![0.0; dim]),
            grads: std::array::from_fn(|_| vec![0.0; dim]),
        }
    }
}

/// Applies one tuple to `params` and returns the summed pre-update hinge loss.
///
/// Negatives are processed one after another. For each, the four rows are
/// snapshotted, the gradients computed from the snapshot, and then the center,
/// context and paragraph rows (positive multiplier) and the negative row (negative
/// multiplier) are moved. A negative that collides with the center word simply
/// receives both updates.
pub(crate) fn step_rows<P: ParamRows>(
    params: &mut P,
    scratch: &mut Scratch,
    tuple: &TrainingTuple,
    eta: f32,
    margin: f32,
) -> f32 {
    let center = tuple.center as usize;
    let context = tuple.context as usize;
    let doc = tuple.doc as usize;
    let mut total = 0.0;
    for &neg in &tuple.negatives {
        let neg = neg as usize;
        let [u, v, d, n] = &mut scratch.rows;
        params.read(Bank::Target, center, u);
        params.read(Bank::Context, context, v);
        params.read(Bank::Paragraph, doc, d);
        params.read(Bank::Target, neg, n);
        let l = hinge(&u[..], &v[..], &d[..], &n[..], margin);
        if !(l > 0.0) {
            continue;
        }
        total += l;
        let [gu, gv, gd, gn] = &mut scratch.grads;
        fill_gradients(
            &u[..],
            &v[..],
            &d[..],
            &n[..],
            [&mut gu[..], &mut gv[..], &mut gd[..], &mut gn[..]],
        );
        params.update(Bank::Target, center, |row| {
            sphere::update_row(row, gu, eta, SampleRole::Positive);
        });
        params.update(Bank::Context, context, |row| {
            sphere::update_row(row, gv, eta, SampleRole::Positive);
        });
        params.update(Bank::Paragraph, doc, |row| {
            sphere::update_row(row, gd, eta, SampleRole::Positive);
        });
        params.update(Bank::Target, neg, |row| {
            sphere::update_row(row, gn, eta, SampleRole::Negative);
        });
    }
    total
}

/// Applies one training tuple to `params` with step size `eta`; returns the summed
/// hinge loss before the update. Inactive hinges leave every row untouched.
pub fn train_step(
    params: &mut EmbeddingMatrices,
    tuple: &TrainingTuple,
    eta: f32,
    margin: f32,
) -> f32 {
    let mut scratch = Scratch::new(params.dim());
    step_rows(params, &mut scratch, tuple, eta, margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uv(c: &[f64]) -> UnitVector {
        UnitVector::normalize(c.to_vec()).unwrap()
    }

    #[test]
    fn loss_examples() {
        let e1 = uv(&[1.0, 0.0]);
        let e2 = uv(&[0.0, 1.0]);
        assert!((loss(&e1, &e1, &e2, &e2, 0.15) - 0.15).abs() < 1e-15);

        let e3 = uv(&[0.0, 0.0, 1.0, 0.0]);
        let e4 = uv(&[0.0, 0.0, 0.0, 1.0]);
        let a = uv(&[1.0, 0.0, 0.0, 0.0]);
        let b = uv(&[0.0, 1.0, 0.0, 0.0]);
        assert!((loss(&a, &b, &e3, &e4, 0.15) - 0.15).abs() < 1e-15);

        // v·u = u·d = 1, v·u′ = u′·d = −1
        let x = uv(&[1.0, 0.0]);
        let anti = uv(&[-1.0, 0.0]);
        assert_eq!(loss(&x, &x, &x, &anti, 0.15), 0.0);
    }

    #[test]
    fn inactive_hinge_has_zero_gradients() {
        let x = uv(&[1.0, 0.0]);
        let anti = uv(&[-1.0, 0.0]);
        let g = euclidean_gradients(&x, &x, &x, &anti, 0.15);
        for part in [&g.target, &g.context, &g.paragraph, &g.negative] {
            assert!(part.iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn active_gradients_match_formula() {
        let u = uv(&[1.0, 2.0, 0.5]);
        let v = uv(&[-1.0, 0.3, 0.2]);
        let d = uv(&[0.1, -1.0, 0.4]);
        let n = uv(&[0.5, 0.5, 0.5]);
        let g = euclidean_gradients(&u, &v, &d, &n, 0.15);
        for i in 0..3 {
            let (u, v, d, n) = (
                u.as_slice()[i],
                v.as_slice()[i],
                d.as_slice()[i],
                n.as_slice()[i],
            );
            assert_eq!(g.target[i], -v - d);
            assert_eq!(g.context[i], n - u);
            assert_eq!(g.paragraph[i], n - u);
            assert_eq!(g.negative[i], v + d);
        }
    }

    #[test]
    fn init_rows_are_unit_and_seeded() {
        let a = init_embeddings(20, 5, 16, 7);
        let b = init_embeddings(20, 5, 16, 7);
        let c = init_embeddings(20, 5, 16, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.paragraph.rows(), 5);
        assert!(a.max_norm_deviation() < 1e-6);
    }

    #[test]
    fn inactive_tuple_is_a_no_op() {
        let mut params = EmbeddingMatrices {
            target: Matrix::from_vec(2, 2, vec![1.0, 0.0, -1.0, 0.0]).unwrap(),
            context: Matrix::from_vec(1, 2, vec![1.0, 0.0]).unwrap(),
            paragraph: Matrix::from_vec(1, 2, vec![1.0, 0.0]).unwrap(),
        };
        let before = params.clone();
        let tuple = TrainingTuple {
            center: 0,
            context: 0,
            doc: 0,
            negatives: vec![1, 1],
        };
        assert_eq!(train_step(&mut params, &tuple, 0.04, 0.15), 0.0);
        assert_eq!(params, before);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = [
            TrainConfig {
                margin: 0.0,
                ..Default::default()
            },
            TrainConfig {
                initial_lr: -1.0,
                ..Default::default()
            },
            TrainConfig {
                dim: 1,
                ..Default::default()
            },
            TrainConfig {
                window: 0,
                ..Default::default()
            },
            TrainConfig {
                threads: 0,
                ..Default::default()
            },
            TrainConfig {
                subsample: Some(0.0),
                ..Default::default()
            },
            TrainConfig {
                neg_power: f64::NAN,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
