//! Closed-form strain prediction for narrow strips, breadth/partition
//! planning, and validation statistics for the breadth-scaling laws.
//!
//! For a strip of physical half-breadth B over a region of Gaussian
//! curvature K, the leading-order longitudinal strain is
//!   E11(r) = (1/2) K B^2 (r^2 - 1/3),   E22 = -nu E11,
//! with r in [-1, 1] across the breadth, and the strain energy scales as
//!   W = (Y/45) int K^2 B^5 ds + higher order in the breadth.

use crate::error::{Error, Result};
use crate::geometry::{self, StripDomain};
use crate::solver::StrainField;
use crate::surface::SurfaceDefinition;
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Physical half-breadth at u1: the parameter half-breadth times the
/// component of p_2 orthogonal to the center-curve direction.
pub fn estimate_breadth(strip: &StripDomain, u1: f64) -> Result<f64> {
    let jet = strip.surface().jet2(u1, strip.center())?;
    let t = jet.p1.norm();
    if t == 0.0 {
        return Err(Error::RankDeficient {
            u1,
            u2: strip.center(),
            det: 0.0,
        });
    }
    let e1 = jet.p1 / t;
    let w = jet.p2 - e1 * jet.p2.dot(&e1);
    Ok(strip.half_breadth() * w.norm())
}

/// Leading-order (E11, E22) prediction at breadth coordinate r in [-1, 1].
pub fn predict_strain(strip: &StripDomain, poisson: f64, u1: f64, r: f64) -> Result<(f64, f64)> {
    if r.abs() > 1.0 + 1e-12 {
        return Err(Error::Invalid(format!("r = {r} outside [-1, 1]")));
    }
    let k = geometry::gaussian_curvature(strip.surface(), u1, strip.center())?;
    let b = estimate_breadth(strip, u1)?;
    let e11 = 0.5 * k * b * b * (r * r - 1.0 / 3.0);
    Ok((e11, -poisson * e11))
}

/// Per-u1 prediction data for a strip.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrainPredictionRow {
    pub u1: f64,
    pub gaussian_curvature: f64,
    pub breadth: f64,
    /// max over r of |E11|, attained at r = +-1: |K| B^2 / 3.
    pub peak_e11: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrainPrediction {
    pub rows: Vec<StrainPredictionRow>,
    pub peak_e11: f64,
}

/// Samples the prediction along u1 (33 samples by default in callers).
pub fn predict_strip(strip: &StripDomain, samples: usize) -> Result<StrainPrediction> {
    let (a, b) = strip.u1_range();
    let n = samples.max(2);
    let mut rows = Vec::with_capacity(n);
    let mut peak: f64 = 0.0;
    for i in 0..n {
        let u1 = a + (b - a) * i as f64 / (n - 1) as f64;
        let k = geometry::gaussian_curvature(strip.surface(), u1, strip.center())?;
        let bb = estimate_breadth(strip, u1)?;
        let peak_e11 = k.abs() * bb * bb / 3.0;
        peak = peak.max(peak_e11);
        rows.push(StrainPredictionRow {
            u1,
            gaussian_curvature: k,
            breadth: bb,
            peak_e11,
        });
    }
    Ok(StrainPrediction {
        rows,
        peak_e11: peak,
    })
}

/// Leading-order strain energy (Y/45) int K^2 B^5 ds along the center
/// curve (ds = s_0 du1), by Simpson integration on the sample grid.
pub fn energy_prediction(strip: &StripDomain, young: f64, samples: usize) -> Result<f64> {
    let (a, b) = strip.u1_range();
    let n = if samples % 2 == 0 { samples + 1 } else { samples }.max(9);
    let h = (b - a) / (n - 1) as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let u1 = a + h * i as f64;
        let k = geometry::gaussian_curvature(strip.surface(), u1, strip.center())?;
        let bb = estimate_breadth(strip, u1)?;
        let s0 = geometry::center_speed(strip, u1)?;
        let f = k * k * bb.powi(5) * s0;
        let w = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * f;
    }
    Ok(young / 45.0 * acc * h / 3.0)
}

/// Strip boundaries produced by the greedy partition sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub boundaries: Vec<f64>,
    /// Predicted peak |E11| of each strip (len = boundaries.len() - 1).
    pub peaks: Vec<f64>,
}

/// Greedy sweep in u2: each strip grows until the predicted peak strain
/// reaches `max_strain`, then cuts. `max_strain = inf` yields one strip.
pub fn suggest_partition(
    surface: &Arc<SurfaceDefinition>,
    u1_range: (f64, f64),
    u2_range: (f64, f64),
    max_strain: f64,
) -> Result<PartitionPlan> {
    if !(max_strain > 0.0) {
        return Err(Error::Invalid(format!(
            "max_strain must be positive, got {max_strain}"
        )));
    }
    let (lo_all, hi_all) = u2_range;
    if !(lo_all < hi_all) {
        return Err(Error::Invalid("empty u2 range".into()));
    }
    let peak_of = |lo: f64, hi: f64| -> Result<f64> {
        let strip = StripDomain::new(
            surface.clone(),
            u1_range,
            0.5 * (lo + hi),
            0.5 * (hi - lo),
            0,
        )?;
        Ok(predict_strip(&strip, 33)?.peak_e11)
    };
    let min_width = 1e-6 * (hi_all - lo_all);
    let mut boundaries = vec![lo_all];
    let mut peaks = Vec::new();
    let mut lo = lo_all;
    while lo < hi_all - min_width {
        let full = peak_of(lo, hi_all)?;
        let hi = if full <= max_strain {
            hi_all
        } else {
            // Peak grows monotonically with width; bisect for the cut.
            let mut a = lo + min_width;
            let mut b = hi_all;
            if peak_of(lo, a)? > max_strain {
                return Err(Error::Invalid(format!(
                    "curvature too large near u2 = {lo}: even a strip of width {min_width} exceeds max_strain"
                )));
            }
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if peak_of(lo, mid)? <= max_strain {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            a
        };
        peaks.push(peak_of(lo, hi)?);
        boundaries.push(hi);
        lo = hi;
    }
    Ok(PartitionPlan { boundaries, peaks })
}

/// Per-breadth-scale validation numbers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BetaRun {
    pub beta: f64,
    /// max |E11 sampled - E11 predicted| over the field.
    pub max_e11_err: f64,
    /// max |S22| / max |S11| (uniaxiality indicator).
    pub stress_ratio: f64,
    pub energy: f64,
    pub energy_pred: f64,
}

/// Builds the validation numbers for one solved run at breadth scale beta.
pub fn beta_run(
    strip: &StripDomain,
    poisson: f64,
    young: f64,
    beta: f64,
    field: &StrainField,
    energy: f64,
) -> Result<BetaRun> {
    let mut max_err: f64 = 0.0;
    let mut max_s11: f64 = 0.0;
    let mut max_s22: f64 = 0.0;
    for s in &field.samples {
        let (pred, _) = predict_strain(strip, poisson, s.u1, s.r.clamp(-1.0, 1.0))?;
        max_err = max_err.max((s.e11 - pred).abs());
        max_s11 = max_s11.max(s.s11.abs());
        max_s22 = max_s22.max(s.s22.abs());
    }
    Ok(BetaRun {
        beta,
        max_e11_err: max_err,
        stress_ratio: if max_s11 > 0.0 { max_s22 / max_s11 } else { 0.0 },
        energy,
        energy_pred: energy_prediction(strip, young, 65)?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AppendixReport {
    pub runs: Vec<BetaRun>,
    /// log-log slope of max_e11_err between consecutive betas (theory: 3).
    pub e11_err_slopes: Vec<f64>,
    /// log-log slope of W between consecutive betas (theory: 5).
    pub energy_slopes: Vec<f64>,
    /// Stress ratio decreases monotonically with beta.
    pub stress_ratio_monotone: bool,
}

/// Fitted slopes between consecutive (x, y) pairs on a log-log scale.
/// Exact zeros propagate as zero slopes (the flat-surface case).
pub fn loglog_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| {
            if y[0] == 0.0 || y[1] == 0.0 {
                0.0
            } else {
                (y[0] / y[1]).ln() / (x[0] / x[1]).ln()
            }
        })
        .collect()
}

/// Collates beta runs (sorted descending in beta) into the report.
pub fn validate_appendix(mut runs: Vec<BetaRun>) -> AppendixReport {
    runs.sort_by(|a, b| b.beta.partial_cmp(&a.beta).unwrap());
    let betas: Vec<f64> = runs.iter().map(|r| r.beta).collect();
    let errs: Vec<f64> = runs.iter().map(|r| r.max_e11_err).collect();
    let ws: Vec<f64> = runs.iter().map(|r| r.energy).collect();
    let ratios: Vec<f64> = runs.iter().map(|r| r.stress_ratio).collect();
    AppendixReport {
        e11_err_slopes: loglog_slopes(&betas, &errs),
        energy_slopes: loglog_slopes(&betas, &ws),
        stress_ratio_monotone: ratios.windows(2).all(|w| w[1] <= w[0] + 1e-15),
        runs,
    }
}

impl AppendixReport {
    /// Plain-text table for the CLI.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str("beta        max|E11 err|   max|S22|/max|S11|   W              W_pred\n");
        for r in &self.runs {
            out.push_str(&format!(
                "{:<10.5} {:>13.5e} {:>19.5e} {:>14.6e} {:>14.6e}\n",
                r.beta, r.max_e11_err, r.stress_ratio, r.energy, r.energy_pred
            ));
        }
        out.push_str(&format!(
            "E11-error slopes: {:?}\nenergy slopes: {:?}\nstress ratio monotone: {}\n",
            self.e11_err_slopes, self.energy_slopes, self.stress_ratio_monotone
        ));
        out
    }
}

/// RMS distance between two point sets after the best rigid alignment
/// (rotation + translation, no reflection), via 2D Kabsch.
pub fn rigid_align_rms(a: &[Vector2<f64>], b: &[Vector2<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    assert!(!a.is_empty());
    let n = a.len() as f64;
    let ca = a.iter().sum::<Vector2<f64>>() / n;
    let cb = b.iter().sum::<Vector2<f64>>() / n;
    let mut h = Matrix2::zeros();
    for (pa, pb) in a.iter().zip(b) {
        h += (pa - ca) * (pb - cb).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let d = (vt.transpose() * u.transpose()).determinant();
    let flip = Matrix2::new(1.0, 0.0, 0.0, if d < 0.0 { -1.0 } else { 1.0 });
    let r = vt.transpose() * flip * u.transpose();
    let mut acc = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        let mapped = r * (pa - ca) + cb;
        acc += (mapped - pb).norm_squared();
    }
    (acc / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeMap;

    fn strip(name: &str, c: f64, b: f64) -> StripDomain {
        let s = Arc::new(SurfaceDefinition::builtin(name, &BTreeMap::new()).unwrap());
        let d = s.domain();
        StripDomain::new(s, d.u1, c, b, 0).unwrap()
    }

    #[test]
    fn breadth_estimates() {
        let st = strip("plane", 0.0, 0.05);
        assert!((estimate_breadth(&st, 0.3).unwrap() - 0.05).abs() < 1e-14);

        // Orthogonal metric with |p2| = cosh(u2): at the waist B = b.
        let st = strip("catenoid", 0.0, 0.07);
        assert!((estimate_breadth(&st, 1.0).unwrap() - 0.07).abs() < 1e-14);

        // Paraboloid off-center: B = b |p2 - (p2.e1) e1|.
        let st = strip("paraboloid", 0.05, 0.05);
        let jet = st.surface().jet2(0.0, 0.05).unwrap();
        let expect = 0.05 * (jet.p2 - jet.p1 * (jet.p2.dot(&jet.p1) / jet.p1.norm_squared())).norm();
        assert!((estimate_breadth(&st, 0.0).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn strain_prediction_values() {
        // K = 4 at the paraboloid apex; B ~ b there.
        let st = strip("paraboloid", 0.05, 0.05);
        let k = geometry::gaussian_curvature(st.surface(), 0.0, 0.05).unwrap();
        let b = estimate_breadth(&st, 0.0).unwrap();
        let (e11, e22) = predict_strain(&st, 0.25, 0.0, 1.0).unwrap();
        assert!((e11 - 0.5 * k * b * b * (2.0 / 3.0)).abs() < 1e-15);
        assert!((e22 + 0.25 * e11).abs() < 1e-16);

        // Zero crossing at r = 1/sqrt(3).
        let (e11, _) = predict_strain(&st, 0.25, 0.3, 1.0 / 3.0f64.sqrt()).unwrap();
        assert!(e11.abs() < 1e-15);

        // Flat surface predicts zero for all r.
        let st = strip("plane", 0.0, 0.3);
        for r in [-1.0, -0.2, 0.5, 1.0] {
            assert_eq!(predict_strain(&st, 0.25, 0.1, r).unwrap().0, 0.0);
        }
        assert!(predict_strain(&st, 0.25, 0.0, 1.5).is_err());
    }

    #[test]
    fn prediction_integrates_to_zero_over_breadth() {
        // Simpson integral of (r^2 - 1/3) over [-1, 1] vanishes: the
        // leading profile carries no net section force.
        let st = strip("paraboloid", 0.05, 0.0125);
        let n = 101;
        let h = 2.0 / (n - 1) as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let r = -1.0 + h * i as f64;
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * predict_strain(&st, 0.25, 0.2, r).unwrap().0;
        }
        acc *= h / 3.0;
        assert!(acc.abs() < 1e-12, "net section strain {acc}");
    }

    #[test]
    fn partition_plane_is_single_strip() {
        let s = Arc::new(SurfaceDefinition::builtin("plane", &BTreeMap::new()).unwrap());
        let plan = suggest_partition(&s, (-1.0, 1.0), (-1.0, 1.0), 0.01).unwrap();
        assert_eq!(plan.boundaries, vec![-1.0, 1.0]);
        assert_eq!(plan.peaks.len(), 1);
        assert_eq!(plan.peaks[0], 0.0);
    }

    #[test]
    fn partition_infinite_threshold_single_strip() {
        let s = Arc::new(SurfaceDefinition::builtin("paraboloid", &BTreeMap::new()).unwrap());
        let plan = suggest_partition(&s, (-1.0, 1.0), (-1.0, 1.0), f64::INFINITY).unwrap();
        assert_eq!(plan.boundaries.len(), 2);
    }

    #[test]
    fn partition_paraboloid_regression() {
        let s = Arc::new(SurfaceDefinition::builtin("paraboloid", &BTreeMap::new()).unwrap());
        let plan = suggest_partition(&s, (-1.0, 1.0), (0.0, 1.0), 0.01).unwrap();
        // Boundaries are monotone, cover the range, and every strip peak
        // is at (or below, for the last) the threshold.
        assert!(plan.boundaries.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(plan.boundaries[0], 0.0);
        assert_eq!(*plan.boundaries.last().unwrap(), 1.0);
        for (i, &p) in plan.peaks.iter().enumerate() {
            assert!(p <= 0.01 + 1e-9, "strip {i} peak {p}");
        }
        for &p in &plan.peaks[..plan.peaks.len() - 1] {
            assert!((p - 0.01).abs() < 1e-7, "interior strip peak {p} != threshold");
        }
        // Frozen regression: first cut computed by bisection on the
        // predictor (peak (1/3) K B^2 = 0.01 with K sampled along u1).
        let first = plan.boundaries[1];
        assert!(
            (first - 0.175863114).abs() < 1e-6,
            "first boundary moved to {first}"
        );
        assert_eq!(plan.boundaries.len() - 1, plan.peaks.len());
    }

    #[test]
    fn loglog_slopes_scale_invariant() {
        let xs = [1.0, 0.5, 0.25];
        let ys = [8.0, 1.0, 0.125];
        let s1 = loglog_slopes(&xs, &ys);
        let ys_scaled: Vec<f64> = ys.iter().map(|y| y * 17.3).collect();
        let s2 = loglog_slopes(&xs, &ys_scaled);
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a - b).abs() < 1e-12);
            assert!((a - 3.0).abs() < 1e-12);
        }
        // Exact zeros report zero slope.
        let s3 = loglog_slopes(&[1.0, 0.5], &[0.0, 0.0]);
        assert_eq!(s3, vec![0.0]);
    }

    #[test]
    fn rigid_align_recovers_transform() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Vector2<f64>> = (0..40)
            .map(|_| Vector2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let th = 1.1f64;
        let rot = Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos());
        let shift = Vector2::new(3.0, -0.5);
        let moved: Vec<Vector2<f64>> = pts.iter().map(|p| rot * p + shift).collect();
        assert!(rigid_align_rms(&pts, &moved) < 1e-12);

        // A genuine shape change is not absorbed by alignment.
        let mut bent = moved;
        bent[0] += Vector2::new(0.5, 0.0);
        assert!(rigid_align_rms(&pts, &bent) > 1e-3);
    }

    #[test]
    fn energy_prediction_positive_for_curved() {
        let st = strip("paraboloid", 0.05, 0.0125);
        let w = energy_prediction(&st, 1.0, 65).unwrap();
        assert!(w > 0.0);
        let st_half = st.scaled_breadth(0.5).unwrap();
        let w_half = energy_prediction(&st_half, 1.0, 65).unwrap();
        let ratio = w / w_half;
        assert!((ratio - 32.0).abs() < 0.5, "B^5 scaling ratio {ratio}");
        // Hyperbolic paraboloid has K < 0; the prediction must still be
        // positive (K enters squared).
        let st = strip("hyperbolic_paraboloid", 0.05, 0.0125);
        assert!(energy_prediction(&st, 1.0, 65).unwrap() > 0.0);
    }
}
