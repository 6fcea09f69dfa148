//! Job configuration: a single JSON document, schema-validated with
//! unknown keys rejected. Command-line flags override config values.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use stripweave_core::analysis;
use stripweave_core::elasticity::ElasticityParams;
use stripweave_core::geometry::StripDomain;
use stripweave_core::solver::{PinMode, QuadratureSpec, SolveOptions};
use stripweave_core::surface::{DomainRect, SurfaceDefinition};

use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub strips: StripSpec,
    /// Along-strip parameter range; defaults to the surface's u1 domain.
    #[serde(default)]
    pub u1_range: Option<[f64; 2]>,
    #[serde(default = "default_young")]
    pub young: f64,
    #[serde(default = "default_poisson")]
    pub poisson: f64,
    /// Planning threshold on the predicted peak strain.
    #[serde(default = "default_max_strain")]
    pub max_strain: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub export: ExportConfig,
    #[serde(default)]
    pub validate: Option<ValidateConfig>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_young() -> f64 {
    1.0
}
fn default_poisson() -> f64 {
    0.25
}
fn default_max_strain() -> f64 {
    0.01
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SurfaceSpec {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Exprs {
        exprs: [String; 3],
        domain: [[f64; 2]; 2],
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum StripSpec {
    /// Explicit u2 boundaries; strip i spans [boundaries[i], boundaries[i+1]].
    Boundaries { boundaries: Vec<f64> },
    /// Greedy partition targeting the planning threshold.
    Auto {
        auto: AutoSpec,
    },
}

impl Default for StripSpec {
    fn default() -> Self {
        StripSpec::Auto {
            auto: AutoSpec::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoSpec {
    #[serde(default)]
    pub max_strain: Option<f64>,
    #[serde(default)]
    pub u2_range: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "d_spans1")]
    pub spans1: usize,
    #[serde(default = "d_tol_rel")]
    pub tol_rel: f64,
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
    #[serde(default = "d_ode_steps")]
    pub ode_steps: usize,
    #[serde(default = "d_h_bisections")]
    pub h_bisections: usize,
    #[serde(default = "d_natural_rounds")]
    pub natural_rounds: usize,
    #[serde(default = "d_pin")]
    pub pin: String,
}

fn d_spans1() -> usize {
    8
}
fn d_tol_rel() -> f64 {
    1e-8
}
fn d_max_iter() -> usize {
    50
}
fn d_ode_steps() -> usize {
    256
}
fn d_h_bisections() -> usize {
    2
}
fn d_natural_rounds() -> usize {
    2
}
fn d_pin() -> String {
    "rigid3".to_string()
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            spans1: d_spans1(),
            tol_rel: d_tol_rel(),
            max_iter: d_max_iter(),
            ode_steps: d_ode_steps(),
            h_bisections: d_h_bisections(),
            natural_rounds: d_natural_rounds(),
            pin: d_pin(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportConfig {
    #[serde(default = "d_scale")]
    pub scale_mm: f64,
    #[serde(default = "d_page")]
    pub page_mm: [f64; 2],
    #[serde(default = "d_margin")]
    pub margin_mm: f64,
    #[serde(default = "d_stroke")]
    pub stroke_mm: f64,
    #[serde(default = "d_gap")]
    pub gap_mm: f64,
    #[serde(default = "d_grid")]
    pub strain_grid: [usize; 2],
    #[serde(default = "d_labels")]
    pub labels: bool,
}

fn d_scale() -> f64 {
    40.0
}
fn d_page() -> [f64; 2] {
    [210.0, 297.0]
}
fn d_margin() -> f64 {
    10.0
}
fn d_stroke() -> f64 {
    0.2
}
fn d_gap() -> f64 {
    5.0
}
fn d_grid() -> [usize; 2] {
    [33, 9]
}
fn d_labels() -> bool {
    true
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig {
            scale_mm: d_scale(),
            page_mm: d_page(),
            margin_mm: d_margin(),
            stroke_mm: d_stroke(),
            gap_mm: d_gap(),
            strain_grid: d_grid(),
            labels: d_labels(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    /// Center and half-breadth of the reference strip for the beta series.
    pub center: f64,
    pub half_breadth: f64,
    #[serde(default = "d_betas")]
    pub betas: Vec<f64>,
}

fn d_betas() -> Vec<f64> {
    vec![1.0, 0.5, 0.25]
}

/// Summary row describing one strip in `plan` output.
#[derive(Clone, Debug, Serialize)]
pub struct PlanRow {
    pub index: usize,
    pub u2_lo: f64,
    pub u2_hi: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub breadth_max: f64,
    pub peak_e11: f64,
}

impl JobConfig {
    pub fn from_str(text: &str) -> Result<JobConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<JobConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::MissingInput(format!("config {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn build_surface(&self) -> Result<Arc<SurfaceDefinition>, CliError> {
        let def = match &self.surface {
            SurfaceSpec::Builtin { builtin, params } => SurfaceDefinition::builtin(builtin, params),
            SurfaceSpec::Exprs { exprs, domain } => {
                let rect = DomainRect::new(
                    (domain[0][0], domain[0][1]),
                    (domain[1][0], domain[1][1]),
                )
                .and_then(|rect| {
                    SurfaceDefinition::from_exprs(&exprs[0], &exprs[1], &exprs[2], rect)
                });
                rect
            }
        };
        def.map(Arc::new)
            .map_err(|e| CliError::Usage(format!("surface: {e}")))
    }

    pub fn u1_range(&self, surface: &SurfaceDefinition) -> (f64, f64) {
        match self.u1_range {
            Some([a, b]) => (a, b),
            None => surface.domain().u1,
        }
    }

    /// Resolves the strip list (explicit boundaries or auto partition).
    pub fn build_strips(&self) -> Result<Vec<StripDomain>, CliError> {
        let surface = self.build_surface()?;
        let u1 = self.u1_range(&surface);
        let boundaries = match &self.strips {
            StripSpec::Boundaries { boundaries } => {
                if boundaries.len() < 2 || boundaries.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::Usage(
                        "strips.boundaries must be strictly increasing with at least 2 entries"
                            .to_string(),
                    ));
                }
                boundaries.clone()
            }
            StripSpec::Auto { auto } => {
                let u2 = auto
                    .u2_range
                    .map(|[a, b]| (a, b))
                    .unwrap_or(surface.domain().u2);
                let threshold = auto.max_strain.unwrap_or(self.max_strain);
                analysis::suggest_partition(&surface, u1, u2, threshold)
                    .map_err(|e| CliError::Usage(format!("auto partition: {e}")))?
                    .boundaries
            }
        };
        let mut strips = Vec::new();
        for (i, w) in boundaries.windows(2).enumerate() {
            let c = 0.5 * (w[0] + w[1]);
            let hb = 0.5 * (w[1] - w[0]);
            strips.push(
                StripDomain::new(surface.clone(), u1, c, hb, i)
                    .map_err(|e| CliError::Usage(format!("strip {i}: {e}")))?,
            );
        }
        Ok(strips)
    }

    pub fn elasticity(&self) -> Result<ElasticityParams, CliError> {
        ElasticityParams::new(self.young, self.poisson)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn solve_options(&self) -> Result<SolveOptions, CliError> {
        let pin_mode = match self.solver.pin.as_str() {
            "rigid3" => PinMode::Rigid3,
            "three_point" => PinMode::ThreePoint,
            other => {
                return Err(CliError::Usage(format!(
                    "solver.pin must be rigid3 or three_point, got `{other}`"
                )))
            }
        };
        Ok(SolveOptions {
            tol_rel: self.solver.tol_rel,
            max_iter: self.solver.max_iter,
            quadrature: QuadratureSpec::default(),
            ode_steps: self.solver.ode_steps,
            spans1: self.solver.spans1,
            h_bisections: self.solver.h_bisections,
            natural_rounds: self.solver.natural_rounds,
            natural_jump_ratio: 0.1,
            pin_mode,
            release_threshold: 1e-3,
        })
    }
}
