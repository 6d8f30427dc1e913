//! Named verification suites: each check turns one family of identities
//! into report records.

use crate::config::{sample_vector, ExperimentConfig};
use crate::report::CheckRecord;
use modelkit::charfun::{char_function, hardy_bound_check, theta, theta_hat, trace_formula_defect};
use modelkit::dilation::dilation_property_defect;
use modelkit::extensions::{krein_resolvent, BoundaryCondition};
use modelkit::linalg::{self, c, vec_norm};
use modelkit::model::{model_resolvent_defect, toeplitz_check, weight_positivity, ResolventSide};
use modelkit::quad::{HalfLine, QuadratureGrid};
use modelkit::scenarios::exact_interval_m;
use modelkit::triple::{rel_defect, DecomposedVector, TripleDescriptor};
use modelkit::Error;
use num_complex::Complex64;
use std::time::Instant;

pub const ALL_CHECKS: &[&str] = &[
    "validate",
    "green",
    "m_function",
    "m_difference",
    "herglotz",
    "gamma_kernel",
    "char_contraction",
    "theta_cross",
    "krein_identity",
    "bc_residual",
    "trace_formula",
    "model_resolvent",
    "toeplitz",
    "hardy_bound",
    "dilation_property",
    "simplicity",
    "weight_positivity",
    "m_exact",
];

pub struct SuiteCtx<'a> {
    pub t: &'a TripleDescriptor,
    pub bcs: &'a [BoundaryCondition],
    pub config: &'a ExperimentConfig,
}

fn tol(cfg: &ExperimentConfig, name: &str, default: f64) -> f64 {
    cfg.tolerances.get(name).copied().unwrap_or(default)
}

fn default_z_samples(cfg: &ExperimentConfig, upper: bool) -> Vec<Complex64> {
    if !cfg.z_samples.is_empty() {
        return cfg
            .z_samples
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(17));
    (0..cfg.samples)
        .map(|_| {
            let im = rng.gen_range(0.5..2.5);
            c(
                rng.gen_range(-3.0..3.0),
                if upper { im } else { -im },
            )
        })
        .collect()
}

fn record(
    name: &str,
    ctx: &SuiteCtx,
    bc: Option<&BoundaryCondition>,
    z: Option<Complex64>,
    tolerance: f64,
    outcome: Result<f64, Error>,
    started: Instant,
) -> CheckRecord {
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(defect) => CheckRecord {
            check: name.to_string(),
            scenario: ctx.t.label.clone(),
            bc: bc.map(|b| b.label.clone()),
            z,
            defect: Some(defect),
            tol: tolerance,
            pass: Some(defect <= tolerance),
            error: None,
            runtime_ms,
        },
        Err(e) => CheckRecord {
            check: name.to_string(),
            scenario: ctx.t.label.clone(),
            bc: bc.map(|b| b.label.clone()),
            z,
            defect: None,
            tol: tolerance,
            pass: None,
            error: Some(e.to_string()),
            runtime_ms,
        },
    }
}

pub fn run_check(name: &str, ctx: &SuiteCtx) -> Result<Vec<CheckRecord>, String> {
    let t = ctx.t;
    let cfg = ctx.config;
    let mut out = Vec::new();
    match name {
        "validate" => {
            let started = Instant::now();
            for chk in t.validate().checks {
                out.push(CheckRecord {
                    check: format!("validate/{}", chk.name),
                    scenario: t.label.clone(),
                    bc: None,
                    z: None,
                    defect: Some(chk.defect),
                    tol: chk.tolerance,
                    pass: Some(chk.pass),
                    error: None,
                    runtime_ms: started.elapsed().as_secs_f64() * 1e3,
                });
            }
        }
        "green" => {
            let started = Instant::now();
            let tolerance = tol(cfg, name, 1e-10);
            let mut worst: f64 = 0.0;
            for j in 0..cfg.samples as u64 {
                let du = DecomposedVector {
                    f: sample_vector(cfg.seed.wrapping_add(100 + 4 * j), t.dim_h),
                    phi: sample_vector(cfg.seed.wrapping_add(101 + 4 * j), t.dim_e),
                };
                let dv = DecomposedVector {
                    f: sample_vector(cfg.seed.wrapping_add(102 + 4 * j), t.dim_h),
                    phi: sample_vector(cfg.seed.wrapping_add(103 + 4 * j), t.dim_e),
                };
                let (defect, scale) = t.green_defect(&du, &dv);
                worst = worst.max(defect / scale);
            }
            out.push(record(name, ctx, None, None, tolerance, Ok(worst), started));
        }
        "m_function" => {
            // per-point records: M(z)* = M(zbar) at each requested z
            let tolerance = tol(cfg, name, 1e-10);
            for z in default_z_samples(cfg, true) {
                let started = Instant::now();
                let outcome = t.m_function(z).and_then(|m| {
                    let mc = t.m_function(z.conj())?;
                    Ok(rel_defect(&m.adjoint(), &mc))
                });
                out.push(record(name, ctx, None, Some(z), tolerance, outcome, started));
            }
        }
        "m_difference" => {
            let started = Instant::now();
            let tolerance = tol(cfg, name, 1e-10);
            let zs = default_z_samples(cfg, true);
            let outcome = (|| {
                let mut worst: f64 = 0.0;
                for pair in zs.windows(2) {
                    let (z, w) = (pair[0], pair[1].conj());
                    let lhs = t.m_function(z)? - t.m_function(w)?;
                    let rhs = (t.solution_matrix(z.conj())?.adjoint() * t.solution_matrix(w)?)
                        * (z - w);
                    worst = worst.max(rel_defect(&lhs, &rhs));
                }
                Ok(worst)
            })();
            out.push(record(name, ctx, None, None, tolerance, outcome, started));
        }
        "herglotz" => {
            let tolerance = tol(cfg, name, 1e-10);
            for z in default_z_samples(cfg, true) {
                let started = Instant::now();
                let outcome = t
                    .herglotz_defect(z)
                    .map(|r| (r.defect / r.scale).max(-r.min_im_eigenvalue));
                out.push(record(name, ctx, None, Some(z), tolerance, outcome, started));
            }
        }
        "gamma_kernel" => {
            let tolerance = tol(cfg, name, 1e-10);
            for (j, z) in default_z_samples(cfg, true).into_iter().enumerate() {
                let started = Instant::now();
                let phi = sample_vector(cfg.seed.wrapping_add(200 + j as u64), t.dim_e);
                let outcome = t.gamma(z, &phi).map(|d| {
                    let res = t.a_apply(&d) - t.assemble(&d) * z;
                    linalg::vec_max_abs(&res) / vec_norm(&d.f).max(1.0)
                });
                out.push(record(name, ctx, None, Some(z), tolerance, outcome, started));
            }
        }
        "char_contraction" => {
            let tolerance = tol(cfg, name, 1e-10);
            for z in default_z_samples(cfg, true) {
                let started = Instant::now();
                let outcome =
                    char_function(t, z).map(|s| s.contraction_defect.max(s.two_form_defect).max(0.0));
                out.push(record(name, ctx, None, Some(z), tolerance, outcome, started));
            }
        }
        "theta_cross" => {
            let tolerance = tol(cfg, name, 1e-10);
            for bc in ctx.bcs {
                let started = Instant::now();
                let z = c(0.4, -1.2);
                let outcome = theta(t, bc, z).and_then(|s| {
                    let hat = theta_hat(t, bc, z.conj())?;
                    Ok(s.cross_defect.max(hat.cross_defect))
                });
                out.push(record(name, ctx, Some(bc), Some(z), tolerance, outcome, started));
            }
        }
        "krein_identity" => {
            let tolerance = tol(cfg, name, 1e-10);
            for bc in ctx.bcs {
                let started = Instant::now();
                let h = sample_vector(cfg.seed.wrapping_add(300), t.dim_h);
                let z = c(0.4, 1.3);
                let w = c(-0.6, -0.9);
                let outcome = (|| {
                    let rz = krein_resolvent(t, bc, z, &h)?;
                    let rw = krein_resolvent(t, bc, w, &h)?;
                    let rzrw = krein_resolvent(t, bc, z, &t.assemble(&rw))?;
                    let lhs = t.assemble(&rz) - t.assemble(&rw);
                    let rhs = t.assemble(&rzrw) * (z - w);
                    Ok(linalg::vec_max_abs(&(lhs - rhs)) / vec_norm(&h).max(1.0))
                })();
                out.push(record(name, ctx, Some(bc), None, tolerance, outcome, started));
            }
        }
        "bc_residual" => {
            let tolerance = tol(cfg, name, 1e-10);
            for bc in ctx.bcs {
                let started = Instant::now();
                let h = sample_vector(cfg.seed.wrapping_add(400), t.dim_h);
                let z = c(0.2, 1.7);
                let outcome = krein_resolvent(t, bc, z, &h).map(|d| {
                    let residual = &bc.b * t.trace0(&d) + t.trace1(&d);
                    linalg::vec_max_abs(&residual) / vec_norm(&h).max(1.0)
                });
                out.push(record(name, ctx, Some(bc), Some(z), tolerance, outcome, started));
            }
        }
        "trace_formula" => {
            let tolerance = tol(cfg, name, 1e-10);
            for bc in ctx.bcs {
                let started = Instant::now();
                let h = sample_vector(cfg.seed.wrapping_add(500), t.dim_h);
                let outcome = (|| {
                    let lower = trace_formula_defect(t, bc, c(0.2, -1.4), &h)?;
                    let upper = trace_formula_defect(t, bc, c(-0.5, 1.8), &h)?;
                    Ok(lower.max(upper))
                })();
                out.push(record(name, ctx, Some(bc), None, tolerance, outcome, started));
            }
        }
        "model_resolvent" => {
            let tolerance = tol(cfg, name, 1e-8);
            let ks = [-2.3, -0.7, 0.4, 1.9];
            for bc in ctx.bcs {
                let started = Instant::now();
                let h = sample_vector(cfg.seed.wrapping_add(600), t.dim_h);
                let outcome = (|| {
                    let mut worst: f64 = 0.0;
                    for side in [ResolventSide::Plus, ResolventSide::Minus] {
                        worst = worst
                            .max(model_resolvent_defect(t, bc, c(0.3, -1.1), &h, &ks, side)?)
                            .max(model_resolvent_defect(t, bc, c(0.3, 1.1), &h, &ks, side)?);
                    }
                    Ok(worst)
                })();
                out.push(record(name, ctx, Some(bc), None, tolerance, outcome, started));
            }
        }
        "toeplitz" => {
            let started = Instant::now();
            let tolerance = tol(cfg, name, 1e-10);
            let h = sample_vector(cfg.seed.wrapping_add(700), t.dim_h);
            let outcome = toeplitz_check(t, c(0.1, 1.2), &h, &[-2.3, -0.7, 0.4, 1.9]);
            out.push(record(name, ctx, None, None, tolerance, outcome, started));
        }
        "hardy_bound" => {
            let started = Instant::now();
            let tolerance = tol(cfg, name, 0.0);
            let h = sample_vector(cfg.seed.wrapping_add(800), t.dim_h);
            let outcome = hardy_bound_check(t, &h, &[1.0, 0.1, 0.01], 200.0).map(|r| {
                (r.sup - r.bound).max(0.0) / vec_norm(&h).powi(2).max(1e-300)
            });
            out.push(record(name, ctx, None, None, tolerance, outcome, started));
        }
        "dilation_property" => {
            let started = Instant::now();
            let tolerance = tol(cfg, name, 1e-10);
            let outcome = (|| {
                let minus = QuadratureGrid::new(HalfLine::Minus, 30.0, 40, 4)?;
                let plus = QuadratureGrid::new(HalfLine::Plus, 30.0, 40, 4)?;
                let mut worst: f64 = 0.0;
                for j in 0..cfg.samples as u64 {
                    let h = sample_vector(cfg.seed.wrapping_add(900 + j), t.dim_h);
                    let z = c(0.3 * j as f64 - 0.5, -1.0 - 0.2 * j as f64);
                    worst =
                        worst.max(dilation_property_defect(t, z, &h, minus.clone(), plus.clone())?);
                }
                Ok(worst)
            })();
            out.push(record(name, ctx, None, None, tolerance, outcome, started));
        }
        "simplicity" => {
            let started = Instant::now();
            let tolerance = tol(cfg, name, 0.5);
            let zs: Vec<Complex64> = t
                .eigenvalues_a0()
                .iter()
                .map(|&d| c(d, 1e-3 * (1.0 + d.abs())))
                .collect();
            let outcome = t
                .simplicity_probe(&zs)
                .map(|p| (p.dim_h - p.rank) as f64);
            out.push(record(name, ctx, None, None, tolerance, outcome, started));
        }
        "weight_positivity" => {
            let started = Instant::now();
            let tolerance = tol(cfg, name, 1e-10);
            let ks: Vec<f64> = (0..80)
                .map(|j| -8.0 + 0.2 * j as f64)
                .filter(|&k| {
                    t.eigenvalues_a0()
                        .iter()
                        .all(|&d| (k - d).abs() > 1e-3 * d.abs().max(1.0))
                })
                .collect();
            let outcome = weight_positivity(t, &ks).map(|m| (-m).max(0.0));
            out.push(record(name, ctx, None, None, tolerance, outcome, started));
        }
        "m_exact" => {
            // interval-only: discrete M-function against the closed form
            let tolerance = tol(cfg, name, 2e-2);
            for z in default_z_samples(cfg, true) {
                let started = Instant::now();
                let outcome = (|| {
                    let exact = exact_interval_m(z)?;
                    let m = t.m_function(z)?;
                    Ok(rel_defect(&m, &exact))
                })();
                out.push(record(name, ctx, None, Some(z), tolerance, outcome, started));
            }
        }
        other => return Err(format!("unknown check '{other}'")),
    }
    Ok(out)
}
