//! Geometry of the unit hypersphere `S^{p-1}`.
//!
//! Two layers live here. The typed layer ([`UnitVector`], [`TangentVector`] and the
//! free functions over them) works in `f64` and checks its invariants on
//! construction; it is what the tests and oracles use. The slice kernels at the
//! bottom of the file are generic over the float type and are what the trainer
//! calls on raw embedding rows.

use num_traits::Float;

use crate::error::{Error, Result};

/// Absolute tolerance on `‖x‖ - 1` accepted by [`UnitVector::new`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// Gradients with a norm at or below this are treated as zero.
pub const ZERO_GRADIENT: f64 = 1e-12;

/// Which multiplier a row receives in the update rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleRole {
    /// Rows of the observed tuple: scaled by the cosine distance to the descent direction.
    Positive,
    /// Sampled negative words: scaled by the cosine similarity to the gradient, so the
    /// update vanishes once the row is orthogonal to it.
    Negative,
}

/// A point on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Wraps `coords`, which must already have unit norm (within [`UNIT_NORM_TOLERANCE`]).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Domain(format!(
                "unit vectors need dimension >= 2, got {}",
                coords.len()
            )));
        }
        let norm = norm(&coords);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::Domain(format!("vector norm {norm} is not 1")));
        }
        Ok(UnitVector(coords))
    }

    /// Scales `coords` onto the sphere.
    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Domain(format!(
                "unit vectors need dimension >= 2, got {}",
                coords.len()
            )));
        }
        if !normalize_in_place(&mut coords) {
            return Err(Error::Domain("cannot normalize a zero vector".into()));
        }
        Ok(UnitVector(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.0, &other.0)
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A vector in the tangent hyperplane at `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    base: UnitVector,
    delta: Vec<f64>,
}

impl TangentVector {
    /// Checks `|base · delta| <= 1e-9 · max(1, ‖delta‖)`.
    pub fn new(base: UnitVector, delta: Vec<f64>) -> Result<Self> {
        if delta.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                actual: delta.len(),
            });
        }
        let radial = dot(base.as_slice(), &delta).abs();
        if radial > 1e-9 * norm(&delta).max(1.0) {
            return Err(Error::Domain(format!(
                "vector is not tangent at its base point (radial component {radial:e})"
            )));
        }
        Ok(TangentVector { base, delta })
    }

    pub fn base(&self) -> &UnitVector {
        &self.base
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn norm(&self) -> f64 {
        norm(&self.delta)
    }

    /// Multiplies the tangent direction by `factor`; stays tangent at the same base.
    pub fn scale(mut self, factor: f64) -> Self {
        self.delta.iter_mut().for_each(|d| *d *= factor);
        self
    }
}

/// Great-circle distance in radians, in `[0, π]`.
///
/// Evaluated as `2·atan2(‖x − y‖, ‖x + y‖)`, which equals `arccos(x·y)` for unit
/// vectors but keeps full precision when the points are nearly equal or antipodal.
pub fn geodesic_distance(x: &UnitVector, y: &UnitVector) -> f64 {
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in x.as_slice().iter().zip(y.as_slice()) {
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// `(I − x xᵀ) g`.
pub fn project_to_tangent(x: &UnitVector, g: &[f64]) -> TangentVector {
    assert_eq!(x.dim(), g.len(), "gradient dimension mismatch");
    let radial = dot(x.as_slice(), g);
    let delta = g
        .iter()
        .zip(x.as_slice())
        .map(|(gi, xi)| gi - radial * xi)
        .collect();
    TangentVector {
        base: x.clone(),
        delta,
    }
}

/// Moves along the geodesic leaving `z.base()` in direction `z`, for arc length `‖z‖`.
pub fn exp_map(z: &TangentVector) -> UnitVector {
    let len = z.norm();
    if len < ZERO_GRADIENT {
        return z.base.clone();
    }
    let (sin, cos) = len.sin_cos();
    let mut coords: Vec<f64> = z
        .base
        .as_slice()
        .iter()
        .zip(&z.delta)
        .map(|(x, d)| cos * x + sin * d / len)
        .collect();
    // Analytically unit norm already; this only removes rounding drift.
    normalize_in_place(&mut coords);
    UnitVector(coords)
}

/// `(x + z) / ‖x + z‖`.
pub fn retract(z: &TangentVector) -> UnitVector {
    let mut coords: Vec<f64> = z
        .base
        .as_slice()
        .iter()
        .zip(&z.delta)
        .map(|(x, d)| x + d)
        .collect();
    let len = norm(&coords);
    // ‖x + z‖² = 1 + ‖z‖² for tangent z.
    assert!(len >= 1e-12, "degenerate retraction: ‖x + z‖ = {len:e}");
    coords.iter_mut().for_each(|c| *c /= len);
    UnitVector(coords)
}

/// Step-size multiplier applied to the Riemannian gradient.
///
/// For [`SampleRole::Positive`] this is the cosine distance between `x` and the
/// descent direction `−g`, `1 + x·g/‖g‖ ∈ [0, 2]`. For [`SampleRole::Negative`] it is
/// `x·g/‖g‖ ∈ [−1, 1]`, the negated cosine similarity between `x` and `−g`.
/// Returns 0 when `‖g‖ <= 1e-12`.
pub fn angular_multiplier(x: &UnitVector, g: &[f64], role: SampleRole) -> f64 {
    let gnorm = norm(g);
    if gnorm <= ZERO_GRADIENT {
        return 0.0;
    }
    multiplier(dot(x.as_slice(), g) / gnorm, role)
}

/// One modified Riemannian SGD step: retract `−eta · multiplier · grad` at `x`.
pub fn update_point(x: &UnitVector, g: &[f64], eta: f64, role: SampleRole) -> UnitVector {
    let mult = angular_multiplier(x, g, role);
    if mult == 0.0 {
        return x.clone();
    }
    let step = project_to_tangent(x, g).scale(-eta * mult);
    retract(&step)
}

#[inline]
fn multiplier<F: Float>(cos_to_gradient: F, role: SampleRole) -> F {
    match role {
        SampleRole::Positive => F::one() + cos_to_gradient,
        SampleRole::Negative => cos_to_gradient,
    }
}

#[inline]
pub fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<F: Float>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

/// Rescales `x` to unit norm. Returns `false` (leaving `x` untouched) for a zero or
/// non-finite vector.
pub fn normalize_in_place<F: Float>(x: &mut [F]) -> bool {
    let len = norm(x);
    if !(len > F::zero()) || !len.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|c| *c = *c / len);
    true
}

/// In-place form of [`update_point`] for a raw embedding row.
///
/// `x` must be (close to) unit norm. Returns `true` when the row moved.
pub fn update_row<F: Float>(x: &mut [F], g: &[F], eta: F, role: SampleRole) -> bool {
    debug_assert_eq!(x.len(), g.len());
    let gnorm = norm(g);
    if !(gnorm > F::from(ZERO_GRADIENT).unwrap()) {
        return false;
    }
    let radial = dot(x, g);
    let mult = multiplier(radial / gnorm, role);
    if mult == F::zero() {
        return false;
    }
    let scale = -eta * mult;
    for (xi, &gi) in x.iter_mut().zip(g) {
        *xi = *xi + scale * (gi - radial * *xi);
    }
    normalize_in_place(x)
}
