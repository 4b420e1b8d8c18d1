//! Experiment files. The grammar is described in `docs/config.md`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use gpgd::denoise::ExternalDenoiser;
use gpgd::io::read_image;
use gpgd::solvers::{Algorithm, SolveConfig};
use gpgd::{GeneralizedProjection, MeasurementOp, ModelSet, RngStream, Vector};
use serde::Deserialize;

use crate::seeded_subspace;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub operator: OperatorSpec,
    pub solver: SolverSpec,
    pub projection: ProjectionSpec,
    pub target: TargetSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Sparse {
        #[serde(alias = "N")]
        n: usize,
        k: usize,
    },
    HaarSparse {
        #[serde(alias = "N")]
        n: usize,
        k: usize,
    },
    LowRank {
        rows: usize,
        cols: usize,
        rank: usize,
    },
    Subspace {
        #[serde(alias = "N")]
        n: usize,
        dim: usize,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    DenseGaussian {
        m: usize,
        /// Optional; must equal the model dimension when given.
        #[serde(default, alias = "N")]
        n: Option<usize>,
        seed: u64,
    },
    Mask {
        /// Fraction of entries erased.
        fraction: f64,
        seed: u64,
    },
    Blur {
        sigma: f64,
        #[serde(default)]
        height: Option<usize>,
        #[serde(default)]
        width: Option<usize>,
    },
    Identity,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub algorithm: Algorithm,
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    /// Seed of the starting point.
    #[serde(default)]
    pub init_seed: u64,
}

fn default_max_iters() -> usize {
    500
}

fn default_stop_tol() -> f64 {
    1e-12
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProjectionSpec {
    Orth,
    HaarHt {
        k: usize,
    },
    Identity,
    External {
        command: Vec<String>,
        #[serde(default)]
        noise_level: f64,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
}

fn default_timeout() -> f64 {
    30.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Sampled {
        seed: u64,
        /// Restricts the sampled support to the first `support_limit`
        /// coordinates (Haar coefficients for `haar-sparse`).
        #[serde(default)]
        support_limit: Option<usize>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub trace: Option<PathBuf>,
    pub diagnostics_csv: Option<PathBuf>,
    pub diagnostics_json: Option<PathBuf>,
    /// Final iterate as a GPIM image.
    pub estimate: Option<PathBuf>,
}

/// A config error, already formatted for the user.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Parses TOML, or JSON when the file name ends in `.json`.
pub fn parse(path: &Path, text: &str) -> Result<ExperimentConfig, ConfigError> {
    let name = path.display();
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(text)
            .map_err(|e| ConfigError(format!("{name}: line {}, column {}: {e}", e.line(), e.column())))
    } else {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            match e.span() {
                Some(span) => {
                    let (line, col) = line_col(text, span.start);
                    ConfigError(format!("{name}: line {line}, column {col}: {msg}"))
                }
                None => ConfigError(format!("{name}: {msg}")),
            }
        })
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Everything a solve needs, built from a config.
pub struct Experiment {
    pub op: MeasurementOp,
    pub projection: GeneralizedProjection,
    pub algorithm: Algorithm,
    pub solve: SolveConfig,
    pub init_seed: u64,
    pub target: Vector,
    pub shape: (usize, usize),
}

impl ExperimentConfig {
    /// Relative file paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<Experiment, ConfigError> {
        let bad = |e: gpgd::Error| ConfigError(e.to_string());
        let set = match &self.model {
            ModelSpec::Sparse { n, k } => ModelSet::sparse(*n, *k),
            ModelSpec::HaarSparse { n, k } => ModelSet::haar_sparse(*n, *k),
            ModelSpec::LowRank { rows, cols, rank } => ModelSet::low_rank(*rows, *cols, *rank),
            ModelSpec::Subspace { n, dim, seed } => seeded_subspace(*n, *dim, *seed),
        }
        .map_err(bad)?;
        let n = set.ambient_dim();

        let (target, mut shape) = match &self.target {
            TargetSpec::Sampled { seed, support_limit } => {
                let mut rng = RngStream::new(*seed, 0);
                let x = match support_limit {
                    Some(l) => set.sample_restricted(&mut rng, *l).map_err(bad)?,
                    None => set.sample(&mut rng),
                };
                (x, (1, n))
            }
            TargetSpec::File { path } => {
                let img = read_image(&base.join(path)).map_err(bad)?;
                if img.pixels.dim() != n {
                    return Err(ConfigError(format!(
                        "target image is {}x{} = {} pixels but the model has dimension {n}",
                        img.height,
                        img.width,
                        img.pixels.dim()
                    )));
                }
                (img.pixels, (img.height, img.width))
            }
        };
        if let ModelSpec::LowRank { rows, cols, .. } = &self.model {
            if matches!(self.target, TargetSpec::Sampled { .. }) {
                shape = (*rows, *cols);
            }
        }

        let op = match &self.operator {
            OperatorSpec::DenseGaussian { m, n: given, seed } => {
                if given.is_some_and(|g| g != n) {
                    return Err(ConfigError(format!("operator N = {} does not match model dimension {n}", given.unwrap())));
                }
                MeasurementOp::gaussian(*m, n, &mut RngStream::new(*seed, 0))
            }
            OperatorSpec::Mask { fraction, seed } => MeasurementOp::random_mask(n, *fraction, &mut RngStream::new(*seed, 0)),
            OperatorSpec::Blur { sigma, height, width } => {
                let (h, w) = match (height, width) {
                    (Some(h), Some(w)) => (*h, *w),
                    (None, None) => shape,
                    _ => return Err(ConfigError("blur needs both height and width, or neither".into())),
                };
                if h * w != n {
                    return Err(ConfigError(format!("blur shape {h}x{w} does not match model dimension {n}")));
                }
                MeasurementOp::gaussian_blur(*sigma, h, w)
            }
            OperatorSpec::Identity => Ok(MeasurementOp::identity(n)),
        }
        .map_err(bad)?;

        let projection = match &self.projection {
            ProjectionSpec::Orth => GeneralizedProjection::orth(set.clone()),
            ProjectionSpec::HaarHt { k } => GeneralizedProjection::haar_ht(n, *k).map_err(bad)?,
            ProjectionSpec::Identity => GeneralizedProjection::identity(),
            ProjectionSpec::External { command, noise_level, timeout_secs } => {
                if !(*timeout_secs > 0.0 && timeout_secs.is_finite()) {
                    return Err(ConfigError(format!("timeout_secs must be positive, got {timeout_secs}")));
                }
                let d = ExternalDenoiser::spawn_with_timeout(command, *noise_level, Duration::from_secs_f64(*timeout_secs))
                    .map_err(bad)?;
                GeneralizedProjection::external(d)
            }
        };

        let s = &self.solver;
        let solve = SolveConfig::new(s.mu)
            .with_lambda(s.lambda)
            .with_max_iters(s.max_iters)
            .with_stop_tol(s.stop_tol)
            .with_diagnostics(true);
        Ok(Experiment { op, projection, algorithm: s.algorithm, solve, init_seed: s.init_seed, target, shape })
    }
}
