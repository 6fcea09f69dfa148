//! Seed construction for the Newton iteration: integrate the center-curve
//! ODE, extrude in the breadth direction, and fit a (3,1) B-spline manifold.
//!
//! The center curve satisfies
//!   c'' = [[s'/s, -ks], [ks, s'/s]] c',   |c'| = s
//! where s is the parametrization speed and k the geodesic curvature of the
//! strip's center line. The surface extends the curve by straight rulings
//! whose direction and length reproduce the reference metric on the center
//! line.

use crate::bspline::{fit_least_squares, BSplineManifold2D, BSplineSpace};
use crate::error::{Error, Result};
use crate::geometry::{self, StripDomain};
use nalgebra::{Matrix2, Vector2};

const SPEED_DRIFT_TOL: f64 = 1e-6;

/// Sampled solution of the center-curve ODE on a uniform u1 grid, with the
/// data needed for cubic Hermite interpolation between samples.
#[derive(Clone, Debug)]
pub struct CenterCurveSample {
    pub u1: Vec<f64>,
    pub c: Vec<Vector2<f64>>,
    pub c_dot: Vec<Vector2<f64>>,
    pub c_ddot: Vec<Vector2<f64>>,
    pub speed: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl CenterCurveSample {
    pub fn steps(&self) -> usize {
        self.u1.len() - 1
    }

    fn segment(&self, u: f64) -> Result<(usize, f64, f64)> {
        let (a, b) = (self.u1[0], *self.u1.last().unwrap());
        let tol = 1e-12 * (b - a);
        if u < a - tol || u > b + tol {
            return Err(Error::ParameterOutOfRange(u));
        }
        let h = (b - a) / self.steps() as f64;
        let idx = (((u - a) / h).floor() as usize).min(self.steps() - 1);
        let t = ((u - a) / h - idx as f64).clamp(0.0, 1.0);
        Ok((idx, t, h))
    }

    /// Cubic Hermite interpolation of the curve using the ODE derivative.
    pub fn position(&self, u: f64) -> Result<Vector2<f64>> {
        let (i, t, h) = self.segment(u)?;
        Ok(hermite(self.c[i], self.c_dot[i] * h, self.c[i + 1], self.c_dot[i + 1] * h, t))
    }

    /// Cubic Hermite interpolation of the derivative, seeded with the ODE
    /// right-hand side as its slope.
    pub fn velocity(&self, u: f64) -> Result<Vector2<f64>> {
        let (i, t, h) = self.segment(u)?;
        Ok(hermite(
            self.c_dot[i],
            self.c_ddot[i] * h,
            self.c_dot[i + 1],
            self.c_ddot[i + 1] * h,
            t,
        ))
    }
}

fn hermite(
    p0: Vector2<f64>,
    m0: Vector2<f64>,
    p1: Vector2<f64>,
    m1: Vector2<f64>,
    t: f64,
) -> Vector2<f64> {
    let t2 = t * t;
    let t3 = t2 * t;
    p0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + m0 * (t3 - 2.0 * t2 + t)
        + p1 * (-2.0 * t3 + 3.0 * t2)
        + m1 * (t3 - t2)
}

/// Integrates the center-curve ODE by classical RK4 with `steps` uniform
/// steps, given callbacks for (speed, speed derivative, curvature).
///
/// Initial pose is canonical: c(u1a) = 0, c'(u1a) = (s(u1a), 0); any other
/// pose differs by a rigid motion.
pub fn solve_center_ode_with(
    interval: (f64, f64),
    steps: usize,
    data: &mut dyn FnMut(f64) -> Result<(f64, f64, f64)>,
) -> Result<CenterCurveSample> {
    if steps < 16 {
        return Err(Error::Invalid(format!(
            "center ODE needs at least 16 steps, got {steps}"
        )));
    }
    let (u1a, u1b) = interval;
    let h = (u1b - u1a) / steps as f64;

    let rhs = |u: f64,
               c_dot: Vector2<f64>,
               data: &mut dyn FnMut(f64) -> Result<(f64, f64, f64)>|
     -> Result<(Vector2<f64>, (f64, f64, f64))> {
        let (s, s_dot, kappa) = data(u)?;
        let m = Matrix2::new(s_dot / s, -kappa * s, kappa * s, s_dot / s);
        Ok((m * c_dot, (s, s_dot, kappa)))
    };

    let n = steps + 1;
    let mut out = CenterCurveSample {
        u1: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        c_dot: Vec::with_capacity(n),
        c_ddot: Vec::with_capacity(n),
        speed: Vec::with_capacity(n),
        kappa: Vec::with_capacity(n),
    };

    let (s0, s0_dot, kappa0) = data(u1a)?;
    let mut c = Vector2::zeros();
    let mut v = Vector2::new(s0, 0.0);
    let (a0, _) = rhs(u1a, v, data)?;
    out.u1.push(u1a);
    out.c.push(c);
    out.c_dot.push(v);
    out.c_ddot.push(a0);
    out.speed.push(s0);
    out.kappa.push(kappa0);
    let _ = s0_dot;

    for step in 0..steps {
        let u = u1a + h * step as f64;
        let (k1v, _) = rhs(u, v, data)?;
        let k1c = v;
        let (k2v, _) = rhs(u + 0.5 * h, v + k1v * (0.5 * h), data)?;
        let k2c = v + k1v * (0.5 * h);
        let (k3v, _) = rhs(u + 0.5 * h, v + k2v * (0.5 * h), data)?;
        let k3c = v + k2v * (0.5 * h);
        let (k4v, _) = rhs(u + h, v + k3v * h, data)?;
        let k4c = v + k3v * h;

        c += (k1c + k2c * 2.0 + k3c * 2.0 + k4c) * (h / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);

        let u_next = u1a + h * (step + 1) as f64;
        let (accel, (s, _, kappa)) = rhs(u_next, v, data)?;
        let drift = (v.norm() - s).abs() / s;
        if drift > SPEED_DRIFT_TOL {
            return Err(Error::SpeedDrift {
                drift,
                tol: SPEED_DRIFT_TOL,
            });
        }
        out.u1.push(u_next);
        out.c.push(c);
        out.c_dot.push(v);
        out.c_ddot.push(accel);
        out.speed.push(s);
        out.kappa.push(kappa);
    }
    Ok(out)
}

/// Center-curve ODE for a surface strip: speed and curvature come from the
/// strip's metric along u2 = c.
pub fn solve_center_ode(strip: &StripDomain, steps: usize) -> Result<CenterCurveSample> {
    let mut data = |u1: f64| -> Result<(f64, f64, f64)> {
        let s = geometry::center_speed(strip, u1)?;
        let s_dot = geometry::center_speed_derivative(strip, u1)?;
        let kappa = geometry::geodesic_curvature(strip, u1)?;
        Ok((s, s_dot, kappa))
    };
    solve_center_ode_with(strip.u1_range(), steps, &mut data)
}

/// The seed surface p_s(u1, u2): center curve plus straight rulings. The
/// ruling direction is the image of d/du2 under the metric-preserving map
/// determined by the center-line metric.
pub struct InitialSurface {
    strip: StripDomain,
    center: CenterCurveSample,
}

impl InitialSurface {
    pub fn center(&self) -> &CenterCurveSample {
        &self.center
    }

    pub fn eval(&self, u1: f64, u2: f64) -> Result<Vector2<f64>> {
        let c = self.strip.center();
        let g = geometry::metric(self.strip.surface(), u1, c)?;
        if g.g11 < 1e-8 {
            return Err(Error::DegenerateCenterMetric(g.g11));
        }
        let root_det = g.det().sqrt();
        let m = Matrix2::new(g.g12, -root_det, root_det, g.g12);
        let pos = self.center.position(u1)?;
        let vel = self.center.velocity(u1)?;
        Ok(pos + m * vel * ((u2 - c) / g.g11))
    }
}

pub fn build_initial_surface(strip: &StripDomain, center: CenterCurveSample) -> InitialSurface {
    InitialSurface {
        strip: strip.clone(),
        center,
    }
}

/// Least-squares (3,1) fit of the seed surface: `spans1` cubic spans along
/// the strip, one linear span across (rulings are exactly representable).
pub fn fit_initial_manifold(
    strip: &StripDomain,
    surface: &InitialSurface,
    spans1: usize,
) -> Result<BSplineManifold2D> {
    if spans1 < 2 {
        return Err(Error::Invalid(format!(
            "initial fit needs at least 2 spans, got {spans1}"
        )));
    }
    let (u1a, u1b) = strip.u1_range();
    let (v0, v1) = strip.u2_range();
    let space1 = BSplineSpace::open_uniform(3, u1a, u1b, spans1);
    let space2 = BSplineSpace::open_uniform(1, v0, v1, 1);
    fit_least_squares(
        &space1,
        &space2,
        &|u1, u2| {
            surface
                .eval(u1, u2)
                .expect("seed surface evaluation inside the strip")
        },
        None,
    )
}
