//! Experiment configuration: JSON with complex scalars as `[re, im]` pairs
//! and matrices as row-major nested arrays.

use modelkit::extensions::BoundaryCondition;
use modelkit::linalg::{CMatrix, CVector};
use modelkit::scenarios;
use modelkit::triple::TripleDescriptor;
use num_complex::Complex64;
use serde::Deserialize;
use std::collections::BTreeMap;

pub type Cpx = [f64; 2];
pub type Matrix = Vec<Vec<Cpx>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub boundary_conditions: Vec<BcSpec>,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub z_grids: Vec<GridSpec>,
    /// Explicit frequency samples for the pointwise checks; generated from
    /// `seed` when absent.
    #[serde(default)]
    pub z_samples: Vec<Cpx>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Random samples drawn per check.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Seed for the check sampler (not the scenario).
    #[serde(default)]
    pub seed: u64,
    pub output: Option<OutputSpec>,
}

fn default_samples() -> usize {
    5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    Random {
        seed: u64,
        dim_h: usize,
        dim_e: usize,
        #[serde(default)]
        spectral_shift: f64,
        /// Optional replacement boundary parameter; must be Hermitian.
        lambda: Option<Matrix>,
    },
    Interval {
        n: usize,
    },
    Star {
        lengths: Vec<f64>,
        n: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum BcSpec {
    Preset {
        preset: String,
        eps: Option<f64>,
        seed: Option<u64>,
    },
    Explicit {
        alpha: Matrix,
        beta: Matrix,
        label: Option<String>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    #[serde(default)]
    pub im_min: f64,
    #[serde(default)]
    pub im_max: f64,
    pub n_re: usize,
    #[serde(default = "one")]
    pub n_im: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    pub format: Option<String>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_matrix(m: &Matrix, what: &str) -> Result<CMatrix, ConfigError> {
    let rows = m.len();
    if rows == 0 {
        return Err(ConfigError(format!("{what}: empty matrix")));
    }
    let cols = m[0].len();
    if cols == 0 || m.iter().any(|r| r.len() != cols) {
        return Err(ConfigError(format!("{what}: ragged matrix")));
    }
    let mut out = CMatrix::zeros(rows, cols);
    for (i, row) in m.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(ConfigError(format!("{what}: non-finite entry")));
            }
            out[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(out)
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<TripleDescriptor, ConfigError> {
        match self {
            ScenarioSpec::Random {
                seed,
                dim_h,
                dim_e,
                spectral_shift,
                lambda,
            } => {
                let seed = match std::env::var("MODELKIT_SEED") {
                    Ok(v) => v
                        .parse::<u64>()
                        .map_err(|_| ConfigError("MODELKIT_SEED must be an integer".into()))?,
                    Err(_) => *seed,
                };
                let t =
                    scenarios::build_random_triple_shifted(seed, *dim_h, *dim_e, *spectral_shift)
                        .map_err(|e| ConfigError(e.to_string()))?;
                match lambda {
                    None => Ok(t),
                    Some(m) => {
                        let lam = parse_matrix(m, "scenario.lambda")?;
                        if lam.nrows() != *dim_e || lam.ncols() != *dim_e {
                            return Err(ConfigError(format!(
                                "scenario.lambda must be {dim_e}x{dim_e}"
                            )));
                        }
                        let herm = modelkit::linalg::hermitize_check(&lam)
                            .map_err(|e| ConfigError(e.to_string()))?;
                        if !herm.pass {
                            return Err(ConfigError(format!(
                                "scenario.lambda is not Hermitian (defect {:e})",
                                herm.defect
                            )));
                        }
                        TripleDescriptor::new(t.a0.clone(), t.pi.clone(), lam, t.label.clone())
                            .map_err(|e| ConfigError(e.to_string()))
                    }
                }
            }
            ScenarioSpec::Interval { n } => scenarios::build_interval_laplacian(*n)
                .map_err(|e| ConfigError(e.to_string())),
            ScenarioSpec::Star { lengths, n } => scenarios::build_star_graph(lengths, *n)
                .map_err(|e| ConfigError(e.to_string())),
        }
    }

    /// A doubled-mesh twin for Richardson refinement, when the scenario is
    /// a discretisation.
    pub fn build_refined(&self) -> Option<TripleDescriptor> {
        match self {
            ScenarioSpec::Random { .. } => None,
            ScenarioSpec::Interval { n } => scenarios::build_interval_laplacian(2 * n).ok(),
            ScenarioSpec::Star { lengths, n } => scenarios::build_star_graph(lengths, 2 * n).ok(),
        }
    }
}

impl BcSpec {
    pub fn build(&self, dim_e: usize) -> Result<BoundaryCondition, ConfigError> {
        match self {
            BcSpec::Preset { preset, eps, seed } => match preset.as_str() {
                "dissipative" => Ok(BoundaryCondition::dissipative(dim_e)),
                "adjoint" => Ok(BoundaryCondition::adjoint_type(dim_e)),
                "neumann" => Ok(BoundaryCondition::neumann(dim_e)),
                "dirichlet_eps" => {
                    let eps = eps.ok_or_else(|| {
                        ConfigError("dirichlet_eps preset needs an eps field".into())
                    })?;
                    BoundaryCondition::dirichlet_eps(dim_e, eps)
                        .map_err(|e| ConfigError(e.to_string()))
                }
                "hermitian_random" => {
                    let seed = seed.ok_or_else(|| {
                        ConfigError("hermitian_random preset needs a seed field".into())
                    })?;
                    Ok(BoundaryCondition::hermitian_random(seed, dim_e))
                }
                other => Err(ConfigError(format!("unknown boundary preset '{other}'"))),
            },
            BcSpec::Explicit { alpha, beta, label } => {
                let a = parse_matrix(alpha, "boundary alpha")?;
                let b = parse_matrix(beta, "boundary beta")?;
                if a.nrows() != dim_e || b.nrows() != dim_e {
                    return Err(ConfigError(format!(
                        "boundary condition must be {dim_e}x{dim_e} to match the scenario"
                    )));
                }
                BoundaryCondition::new(a, b, label.clone().unwrap_or_else(|| "custom".into()))
                    .map_err(|e| ConfigError(e.to_string()))
            }
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<Complex64>, ConfigError> {
        if self.n_re == 0 || self.n_im == 0 {
            return Err(ConfigError("empty frequency grid".into()));
        }
        let mut out = Vec::with_capacity(self.n_re * self.n_im);
        for j in 0..self.n_im {
            let im = if self.n_im == 1 {
                self.im_min
            } else {
                self.im_min
                    + (self.im_max - self.im_min) * j as f64 / (self.n_im - 1) as f64
            };
            for i in 0..self.n_re {
                let re = if self.n_re == 1 {
                    self.re_min
                } else {
                    self.re_min
                        + (self.re_max - self.re_min) * i as f64 / (self.n_re - 1) as f64
                };
                out.push(Complex64::new(re, im));
            }
        }
        Ok(out)
    }
}

pub fn sample_vector(seed: u64, n: usize) -> CVector {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    CVector::from_fn(n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}
