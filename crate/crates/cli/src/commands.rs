//! Command implementations: each writes CSV artifacts plus a run manifest
//! into the output directory.

use crate::config::ExperimentConfig;
use crate::csvout::{complex_fields, fmt_f64, CsvFile};
use anyhow::Context;
use cdlab_core::analysis::{cross_term_trace, power_trace};
use cdlab_core::atomic::{assemble, check_intertwining, classify_boundedness};
use cdlab_core::battery::run_battery;
use cdlab_core::geometry::grid_report;
use cdlab_core::intertwiner::{commutant_element, similarity_reduce, solve_sylvester_closed};
use cdlab_core::{C64, Error as CoreError};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Exit classification for structured model errors (unbounded entry,
/// valency too small): distinct from config errors and from crashes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_CHECKS: i32 = 4;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MODEL: i32 = 3;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_path: String,
    pub seed: u64,
    pub trunc_override: Option<usize>,
    pub tol_override: Option<f64>,
    pub timings_ms: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub status: String,
}

impl RunManifest {
    fn new(command: &str, config_path: &Path, seed: u64) -> Self {
        RunManifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_path: config_path.display().to_string(),
            seed,
            trunc_override: None,
            tol_override: None,
            timings_ms: BTreeMap::new(),
            outputs: Vec::new(),
            status: "ok".into(),
        }
    }

    fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

pub struct CommandContext {
    pub config: ExperimentConfig,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub trunc: Option<usize>,
    pub seed: u64,
    pub tol: Option<f64>,
}

impl CommandContext {
    fn manifest(&self, command: &str) -> RunManifest {
        let mut m = RunManifest::new(command, &self.config_path, self.seed);
        m.trunc_override = self.trunc;
        m.tol_override = self.tol;
        m
    }
}

/// Structured model errors become an error record plus exit code 3.
fn model_error_exit(
    err: &CoreError,
    csv: CsvFile,
    manifest: &mut RunManifest,
    dir: &Path,
) -> anyhow::Result<i32> {
    let kind = match err {
        CoreError::UnboundedEntry(_, _) => "unbounded-entry",
        CoreError::ValencyTooSmall(_) => "valency-too-small",
        _ => "model-error",
    };
    let path = csv.finish(&format!("error,{kind},{err}"))?;
    manifest.outputs.push(path.display().to_string());
    manifest.status = format!("error: {err}");
    manifest.write(dir)?;
    Ok(EXIT_MODEL)
}

pub fn cmd_classify(ctx: &CommandContext) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let spec = ctx.config.model_spec(ctx.trunc)?;
    let verdict = classify_boundedness(&spec);
    let mut manifest = ctx.manifest("classify");
    let mut csv = CsvFile::create(&ctx.out_dir, "classify.csv", &["record", "i", "j", "value"])?;
    for i in 0..spec.rank() {
        for j in i..spec.rank() {
            csv.row(&[
                "entry".into(),
                i.to_string(),
                j.to_string(),
                verdict.tag(i, j).label().into(),
            ])?;
        }
    }
    csv.row(&["regime".into(), String::new(), String::new(), verdict.regime.to_string()])?;
    let path = csv.finish("ok")?;
    manifest.outputs.push(path.display().to_string());
    manifest.timings_ms.insert("classify".into(), t0.elapsed().as_secs_f64() * 1e3);
    manifest.write(&ctx.out_dir)?;
    Ok(EXIT_OK)
}

pub fn cmd_assemble(ctx: &CommandContext) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let spec = ctx.config.model_spec(ctx.trunc)?;
    let mut manifest = ctx.manifest("assemble");
    let mut csv = CsvFile::create(&ctx.out_dir, "assemble.csv", &["record", "i", "j", "value"])?;
    let model = match assemble(&spec) {
        Ok(m) => m,
        Err(e) => return model_error_exit(&e, csv, &mut manifest, &ctx.out_dir),
    };
    let op = model.operator().map_err(|e| anyhow::anyhow!("{e}"))?;
    csv.row(&["dim".into(), String::new(), String::new(), op.dim().to_string()])?;
    csv.row(&[
        "band_lower".into(),
        String::new(),
        String::new(),
        op.band().0.to_string(),
    ])?;
    csv.row(&[
        "band_upper".into(),
        String::new(),
        String::new(),
        op.band().1.to_string(),
    ])?;
    for i in 0..spec.rank() {
        for j in 0..spec.rank() {
            if let Some(b) = model.block(i, j) {
                csv.row(&[
                    "block_frobenius".into(),
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(b.frobenius()),
                ])?;
            }
        }
    }
    let resid = check_intertwining(&spec).map_err(|e| anyhow::anyhow!("{e}"))?;
    csv.row(&[
        "intertwining_residual".into(),
        String::new(),
        String::new(),
        fmt_f64(resid),
    ])?;
    let path = csv.finish("ok")?;
    manifest.outputs.push(path.display().to_string());
    manifest.timings_ms.insert("assemble".into(), t0.elapsed().as_secs_f64() * 1e3);
    manifest.write(&ctx.out_dir)?;
    Ok(EXIT_OK)
}

pub fn cmd_geometry(ctx: &CommandContext) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let spec = ctx.config.model_spec(ctx.trunc)?;
    let grid = ctx.config.disc_grid()?;
    let n = spec.rank();
    let mut header: Vec<String> = vec!["re_w".into(), "im_w".into()];
    for k in 0..n {
        for l in 0..n {
            header.push(format!("h_{k}{l}_re"));
            header.push(format!("h_{k}{l}_im"));
        }
    }
    for k in 0..n {
        for l in 0..n {
            header.push(format!("curv_{k}{l}_re"));
            header.push(format!("curv_{k}{l}_im"));
        }
    }
    for i in 0..n.saturating_sub(1) {
        header.push(format!("theta_adj_{i}_re"));
        header.push(format!("theta_adj_{i}_im"));
    }
    for i in 0..n {
        for j in i + 1..n {
            header.push(format!("theta_{i}{j}_re"));
            header.push(format!("theta_{i}{j}_im"));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut manifest = ctx.manifest("geometry");
    let mut csv = CsvFile::create(&ctx.out_dir, "geometry.csv", &header_refs)?;
    let report = grid_report(&spec, &grid).map_err(|e| anyhow::anyhow!("{e}"))?;
    for p in &report.points {
        let mut row = vec![fmt_f64(p.w.re), fmt_f64(p.w.im)];
        for k in 0..n {
            for l in 0..n {
                row.extend(complex_fields(p.grammian[(k, l)]));
            }
        }
        for k in 0..n {
            for l in 0..n {
                row.extend(complex_fields(p.curvature[(k, l)]));
            }
        }
        for v in &p.theta_adjacent {
            row.extend(complex_fields(*v));
        }
        for v in &p.theta_pairs {
            row.extend(complex_fields(*v));
        }
        csv.row(&row)?;
    }
    let path = csv.finish("ok")?;
    manifest.outputs.push(path.display().to_string());
    manifest.timings_ms.insert("geometry".into(), t0.elapsed().as_secs_f64() * 1e3);
    manifest.write(&ctx.out_dir)?;
    Ok(EXIT_OK)
}

pub fn cmd_sylvester(ctx: &CommandContext) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let cfg = ctx.config.sylvester.clone().unwrap_or_default();
    let trunc = ctx.trunc.unwrap_or(cfg.trunc);
    let mut cells = Vec::new();
    for &l0 in &cfg.lambda0 {
        for &v in &cfg.valency {
            for &k in &cfg.shift {
                cells.push((l0, v, k));
            }
        }
    }
    let results = cdlab_core::par::map_collect(&cells, |&(l0, v, k)| {
        let lk1 = l0 + (k as f64 + 1.0) * v;
        let sol = solve_sylvester_closed(l0, lk1, k, trunc)?;
        let big = solve_sylvester_closed(l0, lk1, k, cfg.exponent_trunc)?;
        Ok::<_, CoreError>((sol, big))
    });
    let mut manifest = ctx.manifest("sylvester");
    let mut csv = CsvFile::create(
        &ctx.out_dir,
        "sylvester.csv",
        &[
            "lambda0",
            "valency",
            "shift",
            "trunc",
            "residual",
            "sup_ratio",
            "exponent_expected",
            "exponent_fitted",
            "verdict",
        ],
    )?;
    for ((l0, v, k), res) in cells.iter().zip(results) {
        let (sol, big) = res.map_err(|e| anyhow::anyhow!("{e}"))?;
        let expect = (l0 - (l0 + (*k as f64 + 1.0) * v) + 2.0 * *k as f64 + 2.0) / 2.0;
        csv.row(&[
            fmt_f64(*l0),
            fmt_f64(*v),
            k.to_string(),
            trunc.to_string(),
            fmt_f64(sol.residual),
            fmt_f64(sol.sup_ratio.unwrap_or(f64::NAN)),
            fmt_f64(expect),
            fmt_f64(big.fitted_exponent.unwrap_or(f64::NAN)),
            big.bounded_verdict.label().into(),
        ])?;
    }
    let path = csv.finish("ok")?;
    manifest.outputs.push(path.display().to_string());
    manifest.timings_ms.insert("sylvester".into(), t0.elapsed().as_secs_f64() * 1e3);
    manifest.write(&ctx.out_dir)?;
    Ok(EXIT_OK)
}

pub fn cmd_reduce(ctx: &CommandContext) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let spec = ctx.config.model_spec(ctx.trunc)?;
    let mut manifest = ctx.manifest("reduce");
    let mut csv = CsvFile::create(
        &ctx.out_dir,
        "reduce.csv",
        &["lambda0", "valency", "rank", "trunc", "offdiag_residual", "cond_y"],
    )?;
    let red = match similarity_reduce(&spec) {
        Ok(r) => r,
        Err(e) => return model_error_exit(&e, csv, &mut manifest, &ctx.out_dir),
    };
    csv.row(&[
        fmt_f64(spec.lambda0()),
        fmt_f64(spec.valency()),
        spec.rank().to_string(),
        spec.trunc().to_string(),
        fmt_f64(red.offdiag_residual),
        fmt_f64(red.cond_y),
    ])?;
    let path = csv.finish("ok")?;
    manifest.outputs.push(path.display().to_string());
    manifest.timings_ms.insert("reduce".into(), t0.elapsed().as_secs_f64() * 1e3);
    manifest.write(&ctx.out_dir)?;
    Ok(EXIT_OK)
}

/// Deterministic polynomial symbol of a given degree for the commutant
/// residual table.
fn commutant_symbol(degree: usize) -> Vec<C64> {
    (0..=degree)
        .map(|d| C64::new(1.0 / (1.0 + d as f64), 0.3 / (1.0 + d as f64)))
        .collect()
}

pub fn cmd_commutant(ctx: &CommandContext) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let spec = ctx.config.model_spec(ctx.trunc)?;
    let cfg = ctx.config.commutant.clone().unwrap_or_default();
    let mut manifest = ctx.manifest("commutant");
    let mut csv = CsvFile::create(
        &ctx.out_dir,
        "commutant.csv",
        &["degree", "rank", "trunc", "residual"],
    )?;
    for &deg in &cfg.degrees {
        let phi = commutant_symbol(deg);
        let (_, resid) = match commutant_element(&spec, &phi) {
            Ok(v) => v,
            Err(e) => return model_error_exit(&e, csv, &mut manifest, &ctx.out_dir),
        };
        csv.row(&[
            deg.to_string(),
            spec.rank().to_string(),
            spec.trunc().to_string(),
            fmt_f64(resid),
        ])?;
    }
    let path = csv.finish("ok")?;
    manifest.outputs.push(path.display().to_string());
    manifest.timings_ms.insert("commutant".into(), t0.elapsed().as_secs_f64() * 1e3);
    manifest.write(&ctx.out_dir)?;
    Ok(EXIT_OK)
}

fn prefix_slope(ns: &[usize], norms: &[f64], upto: usize) -> f64 {
    if upto < 1 {
        return f64::NAN;
    }
    let xs: Vec<f64> = ns[..=upto].iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = norms[..=upto].iter().map(|&v| v.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        f64::NAN
    } else {
        (n * sxy - sx * sy) / denom
    }
}

pub fn cmd_powerbound(ctx: &CommandContext) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let cfg = ctx.config.powerbound.clone().unwrap_or_default();
    let trunc = ctx.trunc.unwrap_or(cfg.trunc);
    let spec = ctx.config.model_spec(Some(trunc))?;
    let mut manifest = ctx.manifest("powerbound");
    let mut csv = CsvFile::create(
        &ctx.out_dir,
        "powerbound.csv",
        &["record", "n", "norm", "cumulative_slope"],
    )?;
    let tr = match power_trace(&spec, cfg.n_max, trunc) {
        Ok(t) => t,
        Err(e) => return model_error_exit(&e, csv, &mut manifest, &ctx.out_dir),
    };
    for (idx, (&n, &norm)) in tr.n_values.iter().zip(&tr.norms).enumerate() {
        csv.row(&[
            "power".into(),
            n.to_string(),
            fmt_f64(norm),
            fmt_f64(prefix_slope(&tr.n_values, &tr.norms, idx)),
        ])?;
    }
    csv.row(&[
        "classification".into(),
        String::new(),
        String::new(),
        tr.classification.label().into(),
    ])?;
    csv.row(&["slope".into(), String::new(), String::new(), fmt_f64(tr.slope)])?;
    csv.row(&[
        "r_squared".into(),
        String::new(),
        String::new(),
        fmt_f64(tr.r_squared),
    ])?;

    // the cross-term sequence behind the divergence bound, for rank >= 2
    if spec.rank() >= 2 {
        let mu01 = spec.mu(0, 1);
        let ct = cross_term_trace(spec.lambda(0), spec.lambda(1), -mu01, cfg.n_max, trunc)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        csv.row(&[
            "cross_slope".into(),
            String::new(),
            String::new(),
            fmt_f64(ct.slope.unwrap_or(f64::NAN)),
        ])?;
    }
    let path = csv.finish("ok")?;
    manifest.outputs.push(path.display().to_string());
    manifest.timings_ms.insert("powerbound".into(), t0.elapsed().as_secs_f64() * 1e3);
    manifest.write(&ctx.out_dir)?;
    Ok(EXIT_OK)
}

pub fn cmd_suite(ctx: &CommandContext) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let outcomes = run_battery(ctx.seed).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut manifest = ctx.manifest("suite");
    let mut csv = CsvFile::create(
        &ctx.out_dir,
        "suite.csv",
        &["criterion", "name", "metric", "value"],
    )?;
    let mut all_passed = true;
    for o in &outcomes {
        csv.row(&[
            o.index.to_string(),
            o.name.into(),
            "passed".into(),
            if o.passed { "1".into() } else { "0".into() },
        ])?;
        for (metric, value) in &o.metrics {
            csv.row(&[o.index.to_string(), o.name.into(), metric.clone(), fmt_f64(*value)])?;
        }
        manifest
            .timings_ms
            .insert(format!("criterion_{}", o.index), o.elapsed_ms);
        all_passed &= o.passed;
    }
    let path = csv.finish(if all_passed { "ok" } else { "failed-checks" })?;
    manifest.outputs.push(path.display().to_string());
    manifest.timings_ms.insert("suite".into(), t0.elapsed().as_secs_f64() * 1e3);
    if !all_passed {
        manifest.status = "failed-checks".into();
    }
    manifest.write(&ctx.out_dir)?;
    Ok(if all_passed { EXIT_OK } else { EXIT_FAILED_CHECKS })
}
