//! Command-line driver: ingest a scenario + experiment config, run
//! verification suites and spectrum scans, persist machine-readable
//! reports.
//!
//! Exit codes: 0 all checks pass; 1 check failure; 2 config error;
//! 3 numerical breakdown under --strict.

mod config;
mod report;
mod suites;

use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use modelkit::extensions::{candidates_from_scan, spectrum_scan, BoundaryCondition};
use modelkit::triple::TripleDescriptor;
use report::{atomic_write, canonical_json, csv_report, CheckRecord};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "modelkit", version, about = "Boundary-triple verification suites and spectrum scans")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured verification suites and write a report.
    Run(CommonArgs),
    /// Scan frequency grids for candidate spectrum of the configured
    /// boundary conditions.
    Scan(CommonArgs),
    /// Validate the configured scenario and report its invariant checks.
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's output path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: json, csv or both.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads for grid scans.
    #[arg(long)]
    threads: Option<usize>,
    /// Treat numerical breakdowns (singular solves outside stated
    /// preconditions) as fatal (exit 3).
    #[arg(long)]
    strict: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = match &cli.cmd {
        Cmd::Run(args) => run_cmd(args, Mode::Run),
        Cmd::Scan(args) => run_cmd(args, Mode::Scan),
        Cmd::Validate(args) => run_cmd(args, Mode::Validate),
    };
    std::process::exit(code);
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Run,
    Scan,
    Validate,
}

fn run_cmd(args: &CommonArgs, mode: Mode) -> i32 {
    #[cfg(feature = "parallel")]
    if let Some(n) = args.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let raw = match std::fs::read_to_string(&args.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", args.config.display());
            return 2;
        }
    };
    let raw_value: Value = match serde_json::from_str(&raw) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: config is not valid JSON: {e}");
            return 2;
        }
    };
    let cfg: ExperimentConfig = match serde_json::from_value(raw_value.clone()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: config validation failed: {e}");
            return 2;
        }
    };
    let t = match cfg.scenario.build() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let bcs: Vec<BoundaryCondition> = {
        let mut out = Vec::new();
        for spec in &cfg.boundary_conditions {
            match spec.build(t.dim_e) {
                Ok(bc) => out.push(bc),
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
        }
        out
    };

    let (out_dir, format) = output_settings(args, &cfg);
    match mode {
        Mode::Run => run_suites(&cfg, &raw_value, &t, &bcs, &out_dir, &format, args),
        Mode::Scan => run_scan(&cfg, &raw_value, &t, &bcs, &out_dir, &format, args),
        Mode::Validate => run_validate(&raw_value, &t, &out_dir, &format, args),
    }
}

fn output_settings(args: &CommonArgs, cfg: &ExperimentConfig) -> (PathBuf, String) {
    let dir = args
        .out
        .clone()
        .or_else(|| {
            cfg.output
                .as_ref()
                .and_then(|o| o.path.as_ref().map(PathBuf::from))
        })
        .unwrap_or_else(|| PathBuf::from("modelkit-report"));
    let format = args
        .format
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.format.clone()))
        .unwrap_or_else(|| "json".to_string());
    (dir, format)
}

fn write_reports(
    out_dir: &Path,
    format: &str,
    stem: &str,
    body: Value,
    records: &[CheckRecord],
) -> Result<(), i32> {
    let write_json = format == "json" || format == "both";
    let write_csv = format == "csv" || format == "both";
    if !(write_json || write_csv) {
        eprintln!("error: unknown format '{format}' (want json, csv or both)");
        return Err(2);
    }
    if write_json {
        let path = out_dir.join(format!("{stem}.json"));
        if let Err(e) = atomic_write(&path, &canonical_json(&body)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return Err(2);
        }
        println!("wrote {}", path.display());
    }
    if write_csv {
        let path = out_dir.join(format!("{stem}.csv"));
        if let Err(e) = atomic_write(&path, &csv_report(records)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return Err(2);
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn exit_code(records: &[CheckRecord], strict: bool) -> i32 {
    let any_error = records.iter().any(|r| r.error.is_some());
    let any_fail = records.iter().any(|r| r.pass == Some(false));
    if strict && any_error {
        3
    } else if any_fail {
        1
    } else {
        0
    }
}

fn run_suites(
    cfg: &ExperimentConfig,
    raw: &Value,
    t: &TripleDescriptor,
    bcs: &[BoundaryCondition],
    out_dir: &Path,
    format: &str,
    args: &CommonArgs,
) -> i32 {
    let check_names: Vec<String> = if cfg.checks.is_empty() {
        suites::ALL_CHECKS
            .iter()
            .filter(|&&n| n != "m_exact" || t.label.starts_with("interval"))
            .map(|s| s.to_string())
            .collect()
    } else {
        cfg.checks.clone()
    };
    let ctx = suites::SuiteCtx {
        t,
        bcs,
        config: cfg,
    };
    let mut records: Vec<CheckRecord> = Vec::new();
    for name in &check_names {
        match suites::run_check(name, &ctx) {
            Ok(mut rs) => records.append(&mut rs),
            Err(msg) => {
                eprintln!("error: {msg}");
                return 2;
            }
        }
    }
    let body = json!({
        "config": raw,
        "environment": report::environment_value(args.threads),
        "results": records.iter().map(|r| r.to_value()).collect::<Vec<_>>(),
        "summary": report::summary_value(&records),
        "timings_ms": report::timings_value(&records),
    });
    if let Err(code) = write_reports(out_dir, format, "report", body, &records) {
        return code;
    }
    for r in &records {
        if r.pass == Some(false) {
            eprintln!(
                "FAIL {} ({}, bc {:?}): defect {:?} > tol {:e}",
                r.check, r.scenario, r.bc, r.defect, r.tol
            );
        }
    }
    exit_code(&records, args.strict)
}

fn run_scan(
    cfg: &ExperimentConfig,
    raw: &Value,
    t: &TripleDescriptor,
    bcs: &[BoundaryCondition],
    out_dir: &Path,
    format: &str,
    args: &CommonArgs,
) -> i32 {
    if cfg.z_grids.is_empty() {
        eprintln!("error: scan needs at least one z_grid");
        return 2;
    }
    if bcs.is_empty() {
        eprintln!("error: scan needs at least one boundary condition");
        return 2;
    }
    let refined_t = cfg.scenario.build_refined();
    let mut csv = String::from("bc,grid,z_re,z_im,min_sv,op_norm,in_qb,error\n");
    let mut scan_blocks = Vec::new();
    let mut records: Vec<CheckRecord> = Vec::new();
    for (gi, grid_spec) in cfg.z_grids.iter().enumerate() {
        let grid = match grid_spec.points() {
            Ok(g) => g,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        };
        for bc in bcs {
            let started = std::time::Instant::now();
            let samples = spectrum_scan(t, bc, &grid);
            for s in &samples {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    bc.label,
                    gi,
                    s.z.re,
                    s.z.im,
                    s.min_sv.map(|v| format!("{v:e}")).unwrap_or_default(),
                    s.op_norm.map(|v| format!("{v:e}")).unwrap_or_default(),
                    s.in_qb.map(|b| b.to_string()).unwrap_or_default(),
                    s.error.clone().unwrap_or_default(),
                ));
            }
            let cands = candidates_from_scan(t, bc, &grid, &samples);
            // Richardson refinement over a doubled mesh when available; a
            // coarse candidate is extrapolated only against a fine-mesh
            // candidate in its own basin
            let refined: Vec<[f64; 2]> = match &refined_t {
                Some(t2) => {
                    let samples2 = spectrum_scan(t2, bc, &grid);
                    let cands2 = candidates_from_scan(t2, bc, &grid, &samples2);
                    cands
                        .iter()
                        .filter_map(|&zc| {
                            cands2
                                .iter()
                                .min_by(|a, b| {
                                    (*a - zc).norm().partial_cmp(&(*b - zc).norm()).unwrap()
                                })
                                .filter(|&&zf| {
                                    (zf - zc).norm() <= 0.05 * zc.norm().max(1.0)
                                })
                                .map(|&zf| {
                                    let ex = (zf * 4.0 - zc) / 3.0;
                                    [ex.re, ex.im]
                                })
                        })
                        .collect()
                }
                None => Vec::new(),
            };
            let n_errors = samples.iter().filter(|s| s.error.is_some()).count();
            records.push(CheckRecord {
                check: format!("scan/grid{gi}"),
                scenario: t.label.clone(),
                bc: Some(bc.label.clone()),
                z: None,
                defect: Some(n_errors as f64),
                tol: grid.len() as f64,
                pass: Some(true),
                error: if n_errors > 0 {
                    Some(format!("{n_errors} grid points failed"))
                } else {
                    None
                },
                runtime_ms: started.elapsed().as_secs_f64() * 1e3,
            });
            scan_blocks.push(json!({
                "bc": bc.label,
                "grid": gi,
                "points": grid.len(),
                "failed_points": n_errors,
                "candidates": cands.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "candidates_refined": refined,
            }));
        }
    }
    let body = json!({
        "config": raw,
        "environment": report::environment_value(args.threads),
        "scan": scan_blocks,
        "summary": report::summary_value(&records),
        "timings_ms": report::timings_value(&records),
    });
    if let Err(code) = write_reports(out_dir, format, "scan", body, &records) {
        return code;
    }
    let csv_path = out_dir.join("scan_samples.csv");
    if let Err(e) = atomic_write(&csv_path, &csv) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return 2;
    }
    exit_code(&records, args.strict)
}

fn run_validate(
    raw: &Value,
    t: &TripleDescriptor,
    out_dir: &Path,
    format: &str,
    args: &CommonArgs,
) -> i32 {
    let started = std::time::Instant::now();
    let records: Vec<CheckRecord> = t
        .validate()
        .checks
        .into_iter()
        .map(|chk| CheckRecord {
            check: format!("validate/{}", chk.name),
            scenario: t.label.clone(),
            bc: None,
            z: None,
            defect: Some(chk.defect),
            tol: chk.tolerance,
            pass: Some(chk.pass),
            error: None,
            runtime_ms: started.elapsed().as_secs_f64() * 1e3,
        })
        .collect();
    let body = json!({
        "config": raw,
        "environment": report::environment_value(args.threads),
        "results": records.iter().map(|r| r.to_value()).collect::<Vec<_>>(),
        "summary": report::summary_value(&records),
        "timings_ms": report::timings_value(&records),
    });
    if let Err(code) = write_reports(out_dir, format, "validate", body, &records) {
        return code;
    }
    exit_code(&records, args.strict)
}
