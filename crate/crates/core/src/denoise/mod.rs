//! Generalized projections: orthogonal projections of models, the built-in
//! Haar hard-threshold denoiser, external denoiser processes and custom maps.
//!
//! A denoiser `D` is treated as a projection onto its own fixed-point set.
//! Nothing is assumed about its Lipschitz behavior; it is only measured.

mod external;

use std::fmt;
use std::sync::Arc;

pub use external::{decode_response, encode_request, BridgeError, ExternalDenoiser, DEFAULT_TIMEOUT};

use crate::error::{Error, Result};
use crate::linalg::{haar_forward, haar_inverse, is_power_of_two, Vector};
use crate::models::ModelSet;

type CustomFn = dyn Fn(&Vector) -> Result<Vector> + Send + Sync;

#[derive(Clone)]
pub enum GeneralizedProjection {
    /// Canonical orthogonal projection onto a model.
    Orth(ModelSet),
    /// Haar transform, keep `k` largest coefficients, inverse transform.
    HaarHt { n: usize, k: usize },
    External(Arc<ExternalDenoiser>),
    Custom { name: String, map: Arc<CustomFn> },
}

impl fmt::Debug for GeneralizedProjection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneralizedProjection::Orth(set) => write!(f, "Orth({})", set.name()),
            GeneralizedProjection::HaarHt { n, k } => write!(f, "HaarHt {{ n: {n}, k: {k} }}"),
            GeneralizedProjection::External(d) => write!(f, "External({:?})", d.command()),
            GeneralizedProjection::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl GeneralizedProjection {
    pub fn orth(set: ModelSet) -> Self {
        GeneralizedProjection::Orth(set)
    }

    pub fn haar_ht(n: usize, k: usize) -> Result<Self> {
        if !is_power_of_two(n) {
            return Err(Error::HaarDimension(n));
        }
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!("haar denoiser needs 1 <= k <= N, got k={k}")));
        }
        Ok(GeneralizedProjection::HaarHt { n, k })
    }

    pub fn external(denoiser: ExternalDenoiser) -> Self {
        GeneralizedProjection::External(Arc::new(denoiser))
    }

    pub fn custom(name: &str, map: impl Fn(&Vector) -> Result<Vector> + Send + Sync + 'static) -> Self {
        GeneralizedProjection::Custom { name: name.to_string(), map: Arc::new(map) }
    }

    /// The identity map, i.e. the projection onto the whole space.
    pub fn identity() -> Self {
        Self::custom("identity", |x| Ok(x.clone()))
    }

    pub fn name(&self) -> String {
        match self {
            GeneralizedProjection::Orth(set) => format!("orth-{}", set.name()),
            GeneralizedProjection::HaarHt { .. } => "builtin-haar-ht".to_string(),
            GeneralizedProjection::External(_) => "external".to_string(),
            GeneralizedProjection::Custom { name, .. } => name.clone(),
        }
    }

    /// Whether `apply(λz) = λ·apply(z)` is guaranteed.
    pub fn is_homogeneous(&self) -> bool {
        matches!(self, GeneralizedProjection::Orth(_) | GeneralizedProjection::HaarHt { .. })
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        match self {
            GeneralizedProjection::Orth(set) => set.project(x),
            GeneralizedProjection::HaarHt { n, k } => {
                x.check_dim(*n)?;
                let c = haar_forward(x)?;
                haar_inverse(&keep_largest(&c, *k))
            }
            GeneralizedProjection::External(d) => d.denoise(x),
            GeneralizedProjection::Custom { map, .. } => {
                let out = map(x)?;
                out.check_dim(x.dim())?;
                Ok(out)
            }
        }
    }

    /// Every output the projection may legitimately return at `z`. Only the
    /// orthogonal projections of sparse and union models are set-valued.
    pub fn apply_all(&self, z: &Vector) -> Result<Vec<Vector>> {
        match self {
            GeneralizedProjection::Orth(set) => {
                let r = set.project_all(z)?;
                Ok(r.minimizers.unwrap_or_else(|| vec![r.canonical]))
            }
            _ => Ok(vec![self.apply(z)?]),
        }
    }
}

/// Keeps the `k` largest-magnitude entries. Independent of the model code:
/// finds the `k`-th magnitude, keeps everything strictly above it, then fills
/// the remaining slots with the lowest-index entries equal to it.
fn keep_largest(c: &Vector, k: usize) -> Vector {
    let mut mags: Vec<f64> = c.as_slice().iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let tau = mags[k - 1];
    let mut out = vec![0.0; c.dim()];
    let mut kept = 0;
    for (i, v) in c.as_slice().iter().enumerate() {
        if v.abs() > tau {
            out[i] = *v;
            kept += 1;
        }
    }
    for (i, v) in c.as_slice().iter().enumerate() {
        if kept == k {
            break;
        }
        if v.abs() == tau {
            out[i] = *v;
            kept += 1;
        }
    }
    Vector::new(out).expect("finite coefficients")
}

/// Observed idempotence residual beyond which a denoiser is far from a projection.
pub const IDEMPOTENCE_REGIME: f64 = 0.02;

#[derive(Clone, Debug)]
pub struct FixedPointProbe {
    pub input: Vector,
    /// `‖D(D(x)) − D(x)‖ / ‖D(x)‖`, absent when `‖D(x)‖ < 1e-14`.
    pub residual: Option<f64>,
    /// Residual exceeds [`IDEMPOTENCE_REGIME`].
    pub outside_regime: bool,
}

pub fn probe_fixed_point(d: &GeneralizedProjection, x: &Vector) -> Result<FixedPointProbe> {
    let dx = d.apply(x)?;
    let residual = idempotence_residual(d, &dx)?;
    Ok(FixedPointProbe {
        input: x.clone(),
        residual,
        outside_regime: residual.is_some_and(|r| r > IDEMPOTENCE_REGIME),
    })
}

/// `‖D(dx) − dx‖ / ‖dx‖` for an already denoised point `dx`.
pub(crate) fn idempotence_residual(d: &GeneralizedProjection, dx: &Vector) -> Result<Option<f64>> {
    let n = dx.norm();
    if n < 1e-14 {
        return Ok(None);
    }
    Ok(Some(d.apply(dx)?.distance(dx) / n))
}
