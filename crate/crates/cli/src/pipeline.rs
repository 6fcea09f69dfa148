//! The four pipeline commands. All file outputs are deterministic for a
//! fixed config; strip solves run in parallel without affecting output
//! bytes (each strip owns its files, summaries print in index order).

use crate::config::{JobConfig, PlanRow};
use crate::CliError;
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};
use stripweave_core::analysis;
use stripweave_core::bspline::BSplineManifold2D;
use stripweave_core::export::{self, KitLayout, SvgStyle};
use stripweave_core::geometry::StripDomain;
use stripweave_core::solver::{
    solve_embedding, DiagNode, PinMode, QuadratureSpec, SolverState,
};

pub struct PlanOutcome {
    pub rows: Vec<PlanRow>,
    pub exceeded: bool,
}

#[derive(Serialize)]
struct PlanJson<'a> {
    max_strain: f64,
    exceeded: bool,
    strips: &'a [PlanRow],
}

fn out_dir(cfg: &JobConfig, flag: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = flag
        .map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)?;
    Ok(())
}

fn json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Per-strip strain prediction table; exit code 2 when a peak exceeds the
/// planning threshold.
pub fn run_plan(cfg: &JobConfig, out_flag: Option<&Path>) -> Result<PlanOutcome, CliError> {
    let strips = cfg.build_strips()?;
    let dir = out_dir(cfg, out_flag)?;
    let mut rows = Vec::new();
    for strip in &strips {
        let pred = analysis::predict_strip(strip, 33)
            .map_err(|e| CliError::Usage(format!("strip {}: {e}", strip.index())))?;
        let k_min = pred
            .rows
            .iter()
            .map(|r| r.gaussian_curvature)
            .fold(f64::INFINITY, f64::min);
        let k_max = pred
            .rows
            .iter()
            .map(|r| r.gaussian_curvature)
            .fold(f64::NEG_INFINITY, f64::max);
        let b_max = pred.rows.iter().map(|r| r.breadth).fold(0.0, f64::max);
        let (lo, hi) = strip.u2_range();
        rows.push(PlanRow {
            index: strip.index(),
            u2_lo: lo,
            u2_hi: hi,
            k_min,
            k_max,
            breadth_max: b_max,
            peak_e11: pred.peak_e11,
        });
    }
    let exceeded = rows.iter().any(|r| r.peak_e11 > cfg.max_strain);
    println!("strip      u2 range                K range              B_max      peak|E11|");
    for r in &rows {
        println!(
            "{:<10} [{:>8.4}, {:>8.4}]    [{:>8.4}, {:>8.4}]  {:<9.5} {:.3e}{}",
            r.index,
            r.u2_lo,
            r.u2_hi,
            r.k_min,
            r.k_max,
            r.breadth_max,
            r.peak_e11,
            if r.peak_e11 > cfg.max_strain { "  (over)" } else { "" }
        );
    }
    write_text(
        &dir.join("plan.json"),
        &json_pretty(&PlanJson {
            max_strain: cfg.max_strain,
            exceeded,
            strips: &rows,
        }),
    )?;
    Ok(PlanOutcome { rows, exceeded })
}

#[derive(Serialize)]
pub struct StripSummary {
    pub index: usize,
    pub iterations: usize,
    pub energy: f64,
    pub max_e11: f64,
    pub resumed: bool,
}

pub struct SolveOutcome {
    pub summaries: Vec<StripSummary>,
    pub failures: Vec<(usize, String)>,
}

fn checkpoint_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("strip_{index}.json"))
}

fn solve_one(
    cfg: &JobConfig,
    strip: &StripDomain,
    dir: &Path,
    resume: bool,
) -> Result<StripSummary, CliError> {
    let params = cfg.elasticity()?;
    let opts = cfg.solve_options()?;
    let path = checkpoint_path(dir, strip.index());
    let mut resumed = false;

    let (manifold, diag): (BSplineManifold2D, DiagNode) = if resume && path.exists() {
        // Polish the existing checkpoint at its refinement level.
        resumed = true;
        let text = std::fs::read_to_string(&path)?;
        let seed = BSplineManifold2D::from_json(&text)
            .map_err(|e| CliError::MissingInput(format!("checkpoint {}: {e}", path.display())))?;
        let mut st = SolverState::new(
            strip.clone(),
            params,
            seed,
            opts.pin_mode,
            opts.quadrature,
        )
        .map_err(|e| CliError::Solver(e.to_string()))?;
        let tol = opts.tol_rel * params.young * st.area();
        let mut root = DiagNode::root(strip.index(), st.area());
        let mut stage = DiagNode::stage("resume", &st);
        stage.iterations = st
            .solve_to_tol(tol, opts.max_iter, "resume")
            .map_err(|e| CliError::Solver(e.to_string()))?;
        stage.finish(&st);
        root.children.push(stage);
        root.finish(&st);
        (st.into_manifold(), root)
    } else {
        solve_embedding(strip, &params, &opts).map_err(|e| CliError::Solver(e.to_string()))?
    };

    let st = SolverState::new(
        strip.clone(),
        params,
        manifold,
        PinMode::Rigid3,
        QuadratureSpec::default(),
    )
    .map_err(|e| CliError::Solver(e.to_string()))?;
    let [gn, gm] = cfg.export.strain_grid;
    let field = st
        .strain_field(gn.max(2), gm.max(2))
        .map_err(|e| CliError::Solver(e.to_string()))?;

    write_text(&path, &(st.manifold().to_json() + "\n"))?;
    write_text(
        &dir.join(format!("strip_{}.diag.json", strip.index())),
        &json_pretty(&diag),
    )?;
    Ok(StripSummary {
        index: strip.index(),
        iterations: diag.total_iterations(),
        energy: st.strain_energy(),
        max_e11: field.max_abs_e11(),
        resumed,
    })
}

/// Solves every strip (in parallel), writing checkpoints and diagnostics.
pub fn run_solve(
    cfg: &JobConfig,
    out_flag: Option<&Path>,
    threads: Option<usize>,
    resume: bool,
) -> Result<SolveOutcome, CliError> {
    let strips = cfg.build_strips()?;
    let dir = out_dir(cfg, out_flag)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let results: Vec<(usize, Result<StripSummary, CliError>)> = pool.install(|| {
        strips
            .par_iter()
            .map(|strip| (strip.index(), solve_one(cfg, strip, &dir, resume)))
            .collect()
    });

    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for (index, res) in results {
        match res {
            Ok(s) => {
                log::info!("strip {index} solved: W = {:.3e}", s.energy);
                summaries.push(s);
            }
            Err(e) => failures.push((index, e.to_string())),
        }
    }
    summaries.sort_by_key(|s| s.index);
    failures.sort_by_key(|f| f.0);
    for s in &summaries {
        println!(
            "strip {:<3} iterations={:<4} W={:.6e} max|E11|={:.3e}{}",
            s.index,
            s.iterations,
            s.energy,
            s.max_e11,
            if s.resumed { " (resumed)" } else { "" }
        );
    }
    for (i, e) in &failures {
        println!("strip {i:<3} FAILED: {e}");
    }
    Ok(SolveOutcome {
        summaries,
        failures,
    })
}

/// Exports the kit pages plus per-strip heatmaps and CSV dumps from the
/// solve checkpoints.
pub fn run_export(cfg: &JobConfig, out_flag: Option<&Path>) -> Result<(), CliError> {
    let strips = cfg.build_strips()?;
    let dir = out_dir(cfg, out_flag)?;
    let params = cfg.elasticity()?;

    let mut manifolds = Vec::new();
    for strip in &strips {
        let path = checkpoint_path(&dir, strip.index());
        let text = std::fs::read_to_string(&path).map_err(|_| {
            CliError::MissingInput(format!(
                "checkpoint {} (run `solve` first)",
                path.display()
            ))
        })?;
        let m = BSplineManifold2D::from_json(&text)
            .map_err(|e| CliError::MissingInput(format!("checkpoint {}: {e}", path.display())))?;
        manifolds.push(m);
    }

    let layout = KitLayout {
        page_width_mm: cfg.export.page_mm[0],
        page_height_mm: cfg.export.page_mm[1],
        margin_mm: cfg.export.margin_mm,
        scale: cfg.export.scale_mm,
        stroke_mm: cfg.export.stroke_mm,
        gap_mm: cfg.export.gap_mm,
        labels: cfg.export.labels,
        label_font_mm: 4.0,
    };
    let refs: Vec<(usize, &BSplineManifold2D)> = strips
        .iter()
        .zip(&manifolds)
        .map(|(s, m)| (s.index(), m))
        .collect();
    let (pages, _) =
        export::export_kit(&refs, &layout).map_err(|e| CliError::Usage(e.to_string()))?;
    for (k, page) in pages.iter().enumerate() {
        write_text(&dir.join(format!("kit_page_{}.svg", k + 1)), page)?;
    }

    let style = SvgStyle {
        scale: cfg.export.scale_mm,
        stroke_mm: cfg.export.stroke_mm,
        margin_mm: cfg.export.margin_mm.min(5.0),
    };
    let [gn, gm] = cfg.export.strain_grid;
    for (strip, m) in strips.iter().zip(&manifolds) {
        let st = SolverState::new(
            strip.clone(),
            params,
            m.clone(),
            PinMode::Rigid3,
            QuadratureSpec::default(),
        )
        .map_err(|e| CliError::Solver(e.to_string()))?;
        let field = st
            .strain_field(gn.max(2), gm.max(2))
            .map_err(|e| CliError::Solver(e.to_string()))?;
        let svg = export::export_strain_heatmap(m, &field, &style)
            .map_err(|e| CliError::Solver(e.to_string()))?;
        write_text(&dir.join(format!("strip_{}_strain.svg", strip.index())), &svg)?;
        let csv =
            export::export_strain_csv(&field).map_err(|e| CliError::Solver(e.to_string()))?;
        write_text(&dir.join(format!("strip_{}_strain.csv", strip.index())), &csv)?;
        let pattern =
            export::export_strip_svg(m, &style).map_err(|e| CliError::Solver(e.to_string()))?;
        write_text(&dir.join(format!("strip_{}.svg", strip.index())), &pattern)?;
    }
    println!(
        "exported {} kit page(s) and {} strip artifact set(s) to {}",
        pages.len(),
        strips.len(),
        dir.display()
    );
    Ok(())
}

pub struct ValidateOutcome {
    pub report: analysis::AppendixReport,
    pub bands_met: bool,
}

/// Solves the configured strip at each breadth scale and checks the
/// breadth-scaling laws: strain-profile error slope >= 2.5, energy slope
/// in [4.5, 5.5], stress ratio monotone.
pub fn run_validate(
    cfg: &JobConfig,
    out_flag: Option<&Path>,
    threads: Option<usize>,
) -> Result<ValidateOutcome, CliError> {
    let vcfg = cfg
        .validate
        .clone()
        .ok_or_else(|| CliError::Usage("config has no `validate` section".to_string()))?;
    let surface = cfg.build_surface()?;
    let u1 = cfg.u1_range(&surface);
    let params = cfg.elasticity()?;
    let opts = cfg.solve_options()?;
    let dir = out_dir(cfg, out_flag)?;
    if vcfg.betas.len() < 2 {
        return Err(CliError::Usage(
            "validate.betas needs at least two scales".to_string(),
        ));
    }

    let base = StripDomain::new(surface, u1, vcfg.center, vcfg.half_breadth, 0)
        .map_err(|e| CliError::Usage(format!("validate strip: {e}")))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let runs: Vec<Result<analysis::BetaRun, CliError>> = pool.install(|| {
        vcfg.betas
            .par_iter()
            .map(|&beta| {
                let strip = base
                    .scaled_breadth(beta)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                let (m, _) = solve_embedding(&strip, &params, &opts)
                    .map_err(|e| CliError::Solver(format!("beta {beta}: {e}")))?;
                let st = SolverState::new(
                    strip.clone(),
                    params,
                    m,
                    PinMode::Rigid3,
                    QuadratureSpec::default(),
                )
                .map_err(|e| CliError::Solver(e.to_string()))?;
                let field = st
                    .strain_field(65, 9)
                    .map_err(|e| CliError::Solver(e.to_string()))?;
                analysis::beta_run(
                    &strip,
                    params.poisson,
                    params.young,
                    beta,
                    &field,
                    st.strain_energy(),
                )
                .map_err(|e| CliError::Solver(e.to_string()))
            })
            .collect()
    });
    let mut collected = Vec::new();
    for r in runs {
        collected.push(r?);
    }
    let report = analysis::validate_appendix(collected);
    let bands_met = report.e11_err_slopes.iter().all(|&s| s >= 2.5)
        && report
            .energy_slopes
            .iter()
            .all(|&s| (4.5..=5.5).contains(&s))
        && report.stress_ratio_monotone;

    print!("{}", report.table());
    println!("bands met: {bands_met}");
    write_text(&dir.join("validate.json"), &json_pretty(&report))?;
    Ok(ValidateOutcome { report, bands_met })
}
