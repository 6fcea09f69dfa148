//! Galerkin assembly and constrained Newton-Raphson iteration for the
//! minimum-strain-energy embedding, plus the refinement schedule driving
//! a strip from its (3,1) seed to the final manifold.
//!
//! The residual assembled here is the exact gradient of the total strain
//! energy with respect to the control-point coordinates,
//!
//!   F[I,i] = int S^{pq} dN_I/du^p dx^i/du^q sqrt(det g0) du,
//!
//! and the Jacobian is the corresponding energy Hessian (material part
//! plus geometric part). Setting the gradient to zero is the discrete weak
//! form of the equilibrium equation with zero external forces and an
//! all-Neumann boundary.

mod diagnostics;

pub use diagnostics::{DiagNode, IterationDiag};

use crate::bspline::BSplineManifold2D;
use crate::elasticity::{strain_state_with, ElasticityParams, Stiffness, StrainState};
use crate::error::{Error, Result};
use crate::geometry::{self, FrameCoeffs, Metric2, StripDomain};
use crate::initial_state;
use crate::quadrature::GaussRule;
use nalgebra::{DMatrix, DVector, Vector2};

/// Gauss point count per span per direction: degree + `extra`.
#[derive(Copy, Clone, Debug)]
pub struct QuadratureSpec {
    pub extra: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { extra: 2 }
    }
}

/// Pinning removes the rigid-motion null space of the all-Neumann problem.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PinMode {
    /// 3 scalar DOFs: one corner control point fully fixed plus the y of
    /// the far corner (2 translations + 1 rotation).
    Rigid3,
    /// 6 scalar DOFs: both ends and the middle of the row nearest the
    /// center line, fully fixed. Used in early iterations, then released.
    ThreePoint,
    /// No pins; the Jacobian is singular (for diagnostics and tests).
    Unpinned,
}

/// Pinned scalar DOFs with their target values.
#[derive(Clone, Debug)]
pub struct PinConfig {
    pub mode: PinMode,
    pub pins: Vec<(usize, f64)>,
}

impl PinConfig {
    pub fn build(mode: PinMode, m: &BSplineManifold2D) -> PinConfig {
        let (n1, n2) = (m.n1(), m.n2());
        let dof = |i1: usize, i2: usize, d: usize| 2 * (i1 * n2 + i2) + d;
        let val = |i1: usize, i2: usize, d: usize| m.control_at(i1, i2)[d];
        let pins = match mode {
            PinMode::Unpinned => vec![],
            PinMode::Rigid3 => vec![
                (dof(0, 0, 0), val(0, 0, 0)),
                (dof(0, 0, 1), val(0, 0, 1)),
                (dof(n1 - 1, 0, 1), val(n1 - 1, 0, 1)),
            ],
            PinMode::ThreePoint => {
                let jc = (n2 - 1) / 2;
                let mut pins = Vec::with_capacity(6);
                for i1 in [0, n1 / 2, n1 - 1] {
                    pins.push((dof(i1, jc, 0), val(i1, jc, 0)));
                    pins.push((dof(i1, jc, 1), val(i1, jc, 1)));
                }
                pins
            }
        };
        PinConfig { mode, pins }
    }

    fn pinned_mask(&self, ndof: usize) -> Vec<bool> {
        let mut mask = vec![false; ndof];
        for &(i, _) in &self.pins {
            mask[i] = true;
        }
        mask
    }
}

/// Per-quadrature-point cache: location, volume weight, material data and
/// the active basis values. All of it depends only on the strip and the
/// knot vectors, not on the control points.
struct QuadPoint {
    vol: f64,
    g0: Metric2,
    stiff: Stiffness,
    first1: usize,
    first2: usize,
    n1_vals: Vec<f64>,
    n1_ders: Vec<f64>,
    n2_vals: Vec<f64>,
    n2_ders: Vec<f64>,
}

/// Options for the embedding driver.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Convergence: reduced residual inf-norm below tol_rel * Y * area.
    pub tol_rel: f64,
    pub max_iter: usize,
    pub quadrature: QuadratureSpec,
    pub ode_steps: usize,
    /// Cubic spans along u1 for the seed fit.
    pub spans1: usize,
    /// Whole-direction u1 bisections after reaching degree (3,3).
    pub h_bisections: usize,
    /// Extra adaptive rounds triggered by the strain-jump check.
    pub natural_rounds: usize,
    /// A knot is flagged when the strain jump across it exceeds this
    /// fraction of the peak strain.
    pub natural_jump_ratio: f64,
    /// Pin mode for the Newton stages (ThreePoint switches to Rigid3 once
    /// the residual drops below `release_threshold` * Y * area).
    pub pin_mode: PinMode,
    pub release_threshold: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_rel: 1e-8,
            max_iter: 50,
            quadrature: QuadratureSpec::default(),
            ode_steps: 256,
            spans1: 8,
            h_bisections: 2,
            natural_rounds: 2,
            natural_jump_ratio: 0.1,
            pin_mode: PinMode::Rigid3,
            release_threshold: 1e-3,
        }
    }
}

/// Result of one Newton update.
#[derive(Copy, Clone, Debug)]
pub struct NewtonDiag {
    pub residual_before: f64,
    pub residual_after: f64,
    pub step_scale: f64,
    /// Levenberg shift of the accepted step (0 for plain Newton).
    pub lambda: f64,
    pub energy_after: f64,
}

/// Sampled strain/stress field over a strip (orthonormal-frame components).
#[derive(Clone, Debug)]
pub struct StrainField {
    pub n1: usize,
    pub n2: usize,
    pub samples: Vec<StrainSample>,
}

#[derive(Copy, Clone, Debug)]
pub struct StrainSample {
    pub u1: f64,
    pub u2: f64,
    /// Normalized breadth coordinate (u2 - c) / half_breadth in [-1, 1].
    pub r: f64,
    pub x: f64,
    pub y: f64,
    pub e11: f64,
    pub e12: f64,
    pub e22: f64,
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
    pub density: f64,
}

impl StrainField {
    pub fn max_abs_e11(&self) -> f64 {
        self.samples.iter().map(|s| s.e11.abs()).fold(0.0, f64::max)
    }
}

/// Single-owner state of one strip solve: the current manifold plus the
/// quadrature cache, rebuilt on refinement (the cache does not depend on
/// the control points, so Newton steps reuse it).
pub struct SolverState {
    strip: StripDomain,
    params: ElasticityParams,
    manifold: BSplineManifold2D,
    pins: PinConfig,
    qps: Vec<QuadPoint>,
    area: f64,
}

impl SolverState {
    pub fn new(
        strip: StripDomain,
        params: ElasticityParams,
        manifold: BSplineManifold2D,
        pin_mode: PinMode,
        quad: QuadratureSpec,
    ) -> Result<SolverState> {
        let pins = PinConfig::build(pin_mode, &manifold);
        let (qps, area) = build_cache(&strip, &params, &manifold, quad)?;
        Ok(SolverState {
            strip,
            params,
            manifold,
            pins,
            qps,
            area,
        })
    }

    pub fn manifold(&self) -> &BSplineManifold2D {
        &self.manifold
    }

    pub fn into_manifold(self) -> BSplineManifold2D {
        self.manifold
    }

    pub fn strip(&self) -> &StripDomain {
        &self.strip
    }

    pub fn params(&self) -> &ElasticityParams {
        &self.params
    }

    /// Reference area of the strip, int sqrt(det g0) du.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn pin_config(&self) -> &PinConfig {
        &self.pins
    }

    pub fn set_pin_mode(&mut self, mode: PinMode) {
        self.pins = PinConfig::build(mode, &self.manifold);
    }

    pub fn ndof(&self) -> usize {
        2 * self.manifold.n1() * self.manifold.n2()
    }

    /// Scalar control DOF access with the solver's indexing
    /// (2 * (i1 * n2 + i2) + axis); used by finite-difference oracles.
    pub fn control_dof(&self, idx: usize) -> f64 {
        self.manifold.control()[idx / 2][idx % 2]
    }

    pub fn set_control_dof(&mut self, idx: usize, value: f64) {
        self.manifold.control_mut()[idx / 2][idx % 2] = value;
    }

    /// Replaces the manifold (after refinement) and rebuilds caches/pins.
    pub fn replace_manifold(
        &mut self,
        manifold: BSplineManifold2D,
        quad: QuadratureSpec,
    ) -> Result<()> {
        let (qps, area) = build_cache(&self.strip, &self.params, &manifold, quad)?;
        self.pins = PinConfig::build(self.pins.mode, &manifold);
        self.manifold = manifold;
        self.qps = qps;
        self.area = area;
        Ok(())
    }

    /// Gradient of the strain energy with respect to all control DOFs.
    pub fn assemble_residual(&self) -> DVector<f64> {
        let n2 = self.manifold.n2();
        let mut f = DVector::zeros(self.ndof());
        let ctrl = self.manifold.control();
        for qp in &self.qps {
            let (x1, x2) = jet_at(qp, ctrl, n2);
            let e = green_strain(qp, x1, x2);
            let s = qp.stiff.contract(&e);
            let sx1 = [
                s.a11 * x1.x + s.a12 * x2.x,
                s.a11 * x1.y + s.a12 * x2.y,
            ];
            let sx2 = [
                s.a12 * x1.x + s.a22 * x2.x,
                s.a12 * x1.y + s.a22 * x2.y,
            ];
            for (a, (&na, &da)) in qp.n1_vals.iter().zip(&qp.n1_ders).enumerate() {
                let i1 = qp.first1 + a;
                for (b, (&nb, &db)) in qp.n2_vals.iter().zip(&qp.n2_ders).enumerate() {
                    let i2 = qp.first2 + b;
                    let dn1 = da * nb;
                    let dn2 = na * db;
                    let base = 2 * (i1 * n2 + i2);
                    f[base] += qp.vol * (sx1[0] * dn1 + sx2[0] * dn2);
                    f[base + 1] += qp.vol * (sx1[1] * dn1 + sx2[1] * dn2);
                }
            }
        }
        f
    }

    /// Energy Hessian: material part C(dN x, dN x) plus geometric part
    /// S(dN, dN) delta_ij. Symmetric by the major symmetry of C.
    pub fn assemble_jacobian(&self) -> DMatrix<f64> {
        let n2 = self.manifold.n2();
        let ndof = self.ndof();
        let mut h = DMatrix::zeros(ndof, ndof);
        let ctrl = self.manifold.control();
        let nloc = self.local_count();
        let mut dn = vec![(0usize, 0.0f64, 0.0f64); nloc];
        // t[loc][i][rs]: contraction C^{pqrs} dN_p x^i_q per local function.
        let mut t = vec![[[0.0f64; 3]; 2]; nloc];
        for qp in &self.qps {
            let (x1, x2) = jet_at(qp, ctrl, n2);
            let e = green_strain(qp, x1, x2);
            let s = qp.stiff.contract(&e);
            let x = [[x1.x, x2.x], [x1.y, x2.y]]; // x[i][q]

            let mut idx = 0;
            for (a, (&na, &da)) in qp.n1_vals.iter().zip(&qp.n1_ders).enumerate() {
                let i1 = qp.first1 + a;
                for (b, (&nb, &db)) in qp.n2_vals.iter().zip(&qp.n2_ders).enumerate() {
                    let i2 = qp.first2 + b;
                    dn[idx] = (2 * (i1 * n2 + i2), da * nb, na * db);
                    idx += 1;
                }
            }
            for (loc, &(_, d1, d2)) in dn.iter().enumerate() {
                let dvec = [d1, d2];
                for i in 0..2 {
                    // G^{rs} = C^{pqrs} dN_p x^i_q, symmetric in (r,s).
                    let mut g = [0.0f64; 3];
                    for p in 0..2 {
                        for q in 0..2 {
                            let w = dvec[p] * x[i][q];
                            if w == 0.0 {
                                continue;
                            }
                            g[0] += qp.stiff.component(p, q, 0, 0) * w;
                            g[1] += qp.stiff.component(p, q, 0, 1) * w;
                            g[2] += qp.stiff.component(p, q, 1, 1) * w;
                        }
                    }
                    t[loc][i] = g;
                }
            }
            for (la, &(dof_a, a1, a2)) in dn.iter().enumerate() {
                for &(dof_b, b1, b2) in dn.iter() {
                    // Geometric stiffness: S^{pq} dN_p dN_q.
                    let geo = s.a11 * a1 * b1 + s.a12 * (a1 * b2 + a2 * b1) + s.a22 * a2 * b2;
                    for i in 0..2 {
                        let g = &t[la][i];
                        for j in 0..2 {
                            // Material part: G^{rs} dNJ_r x^j_s.
                            let mat = g[0] * b1 * x[j][0]
                                + g[1] * (b1 * x[j][1] + b2 * x[j][0])
                                + g[2] * b2 * x[j][1];
                            let v = if i == j { mat + geo } else { mat };
                            h[(dof_a + i, dof_b + j)] += qp.vol * v;
                        }
                    }
                }
            }
        }
        h
    }

    fn local_count(&self) -> usize {
        (self.manifold.space1().degree() + 1) * (self.manifold.space2().degree() + 1)
    }

    /// Total strain energy, int (1/2) C(E,E) sqrt(det g0) du.
    pub fn strain_energy(&self) -> f64 {
        let n2 = self.manifold.n2();
        let ctrl = self.manifold.control();
        let mut w = 0.0;
        for qp in &self.qps {
            let (x1, x2) = jet_at(qp, ctrl, n2);
            let e = green_strain(qp, x1, x2);
            w += qp.vol * 0.5 * qp.stiff.quadratic(&e);
        }
        w
    }

    /// Inf-norm of the residual restricted to the free DOFs.
    pub fn reduced_residual_norm(&self) -> f64 {
        let f = self.assemble_residual();
        let mask = self.pins.pinned_mask(self.ndof());
        f.iter()
            .enumerate()
            .filter(|(i, _)| !mask[*i])
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    /// One Newton update on the free DOFs, with step halving (up to 8
    /// times) if the residual norm would grow.
    ///
    /// When the halved plain step still makes almost no progress (narrow
    /// strips start near-buckled: the Hessian is indefinite along soft
    /// in-plane bending modes and the plain step points uphill in energy),
    /// the step is retried with a ladder of Levenberg shifts and the
    /// largest energy drop wins. Plain Newton resumes on the next call.
    pub fn newton_step(&mut self) -> Result<NewtonDiag> {
        let ndof = self.ndof();
        let mask = self.pins.pinned_mask(ndof);
        let free: Vec<usize> = (0..ndof).filter(|&i| !mask[i]).collect();
        let nf = free.len();
        if nf == 0 {
            return Err(Error::Invalid("no free DOFs to solve".into()));
        }

        let f_full = self.assemble_residual();
        let j_full = self.assemble_jacobian();
        let mut f = DVector::zeros(nf);
        let mut j = DMatrix::zeros(nf, nf);
        for (a, &ia) in free.iter().enumerate() {
            f[a] = f_full[ia];
            for (b, &ib) in free.iter().enumerate() {
                j[(a, b)] = j_full[(ia, ib)];
            }
        }
        let res_before = f.amax();
        let w_before = self.strain_energy();
        let diag_scale = (0..nf).map(|k| j[(k, k)].abs()).fold(0.0, f64::max);
        let saved: Vec<f64> = {
            let ctrl = self.manifold.control();
            free.iter().map(|&i| ctrl[i / 2][i % 2]).collect()
        };
        let apply = |state: &mut SolverState, delta: &DVector<f64>, scale: f64| {
            let ctrl = state.manifold.control_mut();
            for ((&i, &v0), d) in free.iter().zip(&saved).zip(delta.iter()) {
                ctrl[i / 2][i % 2] = v0 + scale * d;
            }
        };
        let solve_shifted = |lambda: f64| -> Option<DVector<f64>> {
            let mut j_reg = j.clone();
            if lambda > 0.0 {
                for k in 0..nf {
                    j_reg[(k, k)] += lambda * diag_scale;
                }
            }
            let lu = j_reg.clone().lu();
            let u_diag = lu.u();
            let mut dmin = f64::INFINITY;
            let mut dmax = 0.0f64;
            for k in 0..nf {
                let d = u_diag[(k, k)].abs();
                dmin = dmin.min(d);
                dmax = dmax.max(d);
            }
            if !(dmin > 1e-12 * dmax) {
                return None;
            }
            let rhs = -&f;
            let mut delta = lu.solve(&rhs)?;
            // One round of iterative refinement; the soft bending modes of
            // narrow strips push the Hessian condition number high enough
            // that the raw LU forward error can degrade the step.
            for _ in 0..1 {
                let resid = &rhs - &j_reg * &delta;
                if let Some(corr) = lu.solve(&resid) {
                    delta += corr;
                } else {
                    break;
                }
            }
            Some(delta).filter(|d| d.iter().all(|v| v.is_finite()))
        };

        // Plain Newton with halving: accept the first scale that does not
        // increase the residual norm (ulp slack for converged states).
        let slack = res_before * (1.0 + 1e-12);
        let delta0 = solve_shifted(0.0).ok_or(Error::DegenerateJacobian {
            cond: f64::INFINITY,
        })?;
        let mut plain: Option<(f64, f64)> = None; // (norm, scale)
        let mut scale = 1.0;
        for _ in 0..=8 {
            apply(self, &delta0, scale);
            let norm = self.reduced_residual_norm();
            if norm.is_finite() && norm <= slack {
                plain = Some((norm, scale));
                break;
            }
            scale *= 0.5;
        }
        if let Some((norm, scale)) = plain {
            // Real progress: done. Near-tie means the plain step stalled.
            if norm <= 0.98 * res_before || norm < f64::MIN_POSITIVE {
                return Ok(NewtonDiag {
                    residual_before: res_before,
                    residual_after: norm,
                    step_scale: scale,
                    lambda: 0.0,
                    energy_after: self.strain_energy(),
                });
            }
        }
        apply(self, &delta0, 0.0);

        // Stalled: Levenberg ladder, accept the largest energy drop.
        let mut best: Option<(f64, f64, f64, DVector<f64>)> = None; // (w, lambda, scale, delta)
        for lambda in [1e-9, 1e-7, 1e-5, 1e-3, 1e-1, 1e1] {
            let Some(delta) = solve_shifted(lambda) else {
                continue;
            };
            let mut scale = 1.0;
            for _ in 0..=8 {
                apply(self, &delta, scale);
                let norm = self.reduced_residual_norm();
                let w = self.strain_energy();
                if norm.is_finite()
                    && w < w_before
                    && best.as_ref().map_or(true, |(bw, ..)| w < *bw)
                {
                    best = Some((w, lambda, scale, delta.clone()));
                }
                scale *= 0.5;
            }
            apply(self, &delta, 0.0);
        }
        if let Some((_, lambda, scale, delta)) = best {
            apply(self, &delta, scale);
            let norm = self.reduced_residual_norm();
            return Ok(NewtonDiag {
                residual_before: res_before,
                residual_after: norm,
                step_scale: scale,
                lambda,
                energy_after: self.strain_energy(),
            });
        }
        // No energy descent found anywhere; fall back to the stalled plain
        // step if it at least did not regress, so the outer loop can run
        // its iteration budget down honestly.
        if let Some((norm, scale)) = plain {
            apply(self, &delta0, scale);
            return Ok(NewtonDiag {
                residual_before: res_before,
                residual_after: norm,
                step_scale: scale,
                lambda: 0.0,
                energy_after: self.strain_energy(),
            });
        }
        Err(Error::NonConvergence {
            stage: "newton-step".to_string(),
            max_iter: 1,
            residual: res_before,
        })
    }

    /// Newton loop to an absolute residual tolerance.
    pub fn solve_to_tol(
        &mut self,
        tol_abs: f64,
        max_iter: usize,
        stage: &str,
    ) -> Result<Vec<IterationDiag>> {
        let mut iters = Vec::new();
        for _ in 0..max_iter {
            let res = self.reduced_residual_norm();
            if res < tol_abs {
                return Ok(iters);
            }
            let d = self.newton_step()?;
            iters.push(IterationDiag {
                residual: d.residual_after,
                energy: d.energy_after,
                step_scale: d.step_scale,
            });
        }
        let res = self.reduced_residual_norm();
        if res < tol_abs {
            return Ok(iters);
        }
        Err(Error::NonConvergence {
            stage: stage.to_string(),
            max_iter,
            residual: res,
        })
    }

    /// Samples strain and stress on an n x m grid over the strip.
    pub fn strain_field(&self, n: usize, m: usize) -> Result<StrainField> {
        if n < 2 || m < 2 {
            return Err(Error::EmptyField);
        }
        let (u1a, u1b) = self.strip.u1_range();
        let (v0, v1) = self.strip.u2_range();
        let c = self.strip.center();
        let hb = self.strip.half_breadth();
        let mut samples = Vec::with_capacity(n * m);
        for i in 0..n {
            let u1 = u1a + (u1b - u1a) * i as f64 / (n - 1) as f64;
            for k in 0..m {
                let u2 = v0 + (v1 - v0) * k as f64 / (m - 1) as f64;
                let g0 = geometry::metric(self.strip.surface(), u1, u2)?;
                let stiff = Stiffness::isotropic(&self.params, &g0)?;
                let frame = geometry::orthonormal_frame(&g0)?;
                let (p, x1, x2) = self.manifold.evaluate_jet1(u1, u2)?;
                let st: StrainState = strain_state_with(&stiff, &frame, &g0, x1, x2);
                samples.push(StrainSample {
                    u1,
                    u2,
                    r: (u2 - c) / hb,
                    x: p.x,
                    y: p.y,
                    e11: st.e_ortho.a11,
                    e12: st.e_ortho.a12,
                    e22: st.e_ortho.a22,
                    s11: st.s_ortho.a11,
                    s12: st.s_ortho.a12,
                    s22: st.s_ortho.a22,
                    density: st.density,
                });
            }
        }
        Ok(StrainField {
            n1: n,
            n2: m,
            samples,
        })
    }
}

fn jet_at(qp: &QuadPoint, ctrl: &[Vector2<f64>], n2: usize) -> (Vector2<f64>, Vector2<f64>) {
    let mut x1 = Vector2::zeros();
    let mut x2 = Vector2::zeros();
    for (a, (&na, &da)) in qp.n1_vals.iter().zip(&qp.n1_ders).enumerate() {
        let i1 = qp.first1 + a;
        for (b, (&nb, &db)) in qp.n2_vals.iter().zip(&qp.n2_ders).enumerate() {
            let c = ctrl[i1 * n2 + qp.first2 + b];
            x1 += c * (da * nb);
            x2 += c * (na * db);
        }
    }
    (x1, x2)
}

fn green_strain(qp: &QuadPoint, x1: Vector2<f64>, x2: Vector2<f64>) -> crate::geometry::Sym2 {
    crate::geometry::Sym2::new(
        0.5 * (x1.dot(&x1) - qp.g0.g11),
        0.5 * (x1.dot(&x2) - qp.g0.g12),
        0.5 * (x2.dot(&x2) - qp.g0.g22),
    )
}

fn build_cache(
    strip: &StripDomain,
    params: &ElasticityParams,
    m: &BSplineManifold2D,
    quad: QuadratureSpec,
) -> Result<(Vec<QuadPoint>, f64)> {
    let s1 = m.space1();
    let s2 = m.space2();
    let (r1a, r1b) = s1.range();
    let (u1a, u1b) = strip.u1_range();
    let (v0, v1) = strip.u2_range();
    let (r2a, r2b) = s2.range();
    let tol1 = 1e-9 * (u1b - u1a);
    let tol2 = 1e-9 * (v1 - v0);
    if (r1a - u1a).abs() > tol1
        || (r1b - u1b).abs() > tol1
        || (r2a - v0).abs() > tol2
        || (r2b - v1).abs() > tol2
    {
        return Err(Error::Invalid(format!(
            "manifold knot ranges [{r1a},{r1b}]x[{r2a},{r2b}] do not match strip domain [{u1a},{u1b}]x[{v0},{v1}]"
        )));
    }
    let rule1 = GaussRule::new(s1.degree() + quad.extra);
    let rule2 = GaussRule::new(s2.degree() + quad.extra);
    let (p1, p2) = (s1.degree(), s2.degree());
    let mut qps = Vec::new();
    let mut area = 0.0;
    for &(a1, b1) in &s1.spans() {
        for &(u1, w1) in &rule1.mapped(a1, b1) {
            let span1 = s1.find_span(u1)?;
            let (v1s, d1s) = s1.basis_row_with_derivs(span1, u1);
            for &(a2, b2) in &s2.spans() {
                for &(u2, w2) in &rule2.mapped(a2, b2) {
                    let span2 = s2.find_span(u2)?;
                    let (v2s, d2s) = s2.basis_row_with_derivs(span2, u2);
                    let g0 = geometry::metric(strip.surface(), u1, u2)?;
                    let stiff = Stiffness::isotropic(params, &g0)?;
                    let vol = w1 * w2 * g0.det().sqrt();
                    area += vol;
                    qps.push(QuadPoint {
                        vol,
                        g0,
                        stiff,
                        first1: span1 - p1,
                        first2: span2 - p2,
                        n1_vals: v1s.clone(),
                        n1_ders: d1s.clone(),
                        n2_vals: v2s,
                        n2_ders: d2s,
                    });
                }
            }
        }
    }
    Ok((qps, area))
}

/// Refinement schedule and driver following the overall flow: seed (3,1),
/// converge, p-refine to (3,3), converge, bisect u1 (twice by default)
/// with a converge after each, then adaptive rounds wherever the strain
/// profile jumps across a knot.
pub fn solve_embedding(
    strip: &StripDomain,
    params: &ElasticityParams,
    opts: &SolveOptions,
) -> Result<(BSplineManifold2D, DiagNode)> {
    let center = initial_state::solve_center_ode(strip, opts.ode_steps)?;
    let seed_surface = initial_state::build_initial_surface(strip, center);
    let seed = initial_state::fit_initial_manifold(strip, &seed_surface, opts.spans1)?;
    solve_embedding_from(strip, params, seed, opts)
}

/// Same driver, seeded from an existing manifold (resume path). The seed
/// stage runs at the seed's current degrees; refinement continues from
/// there.
pub fn solve_embedding_from(
    strip: &StripDomain,
    params: &ElasticityParams,
    seed: BSplineManifold2D,
    opts: &SolveOptions,
) -> Result<(BSplineManifold2D, DiagNode)> {
    let mut st = SolverState::new(
        strip.clone(),
        params.clone(),
        seed,
        opts.pin_mode,
        opts.quadrature,
    )?;
    let tol = opts.tol_rel * params.young * st.area();
    let mut root = DiagNode::root(strip.index(), st.area());

    // Seed stage, optionally with the three-point constraint first.
    let mut stage = DiagNode::stage("seed", &st);
    if st.pins.mode == PinMode::ThreePoint {
        let release = (opts.release_threshold * params.young * st.area()).max(tol);
        let iters = st.solve_to_tol(release, opts.max_iter, "seed/three-point")?;
        stage.iterations.extend(iters);
        st.set_pin_mode(PinMode::Rigid3);
    }
    let iters = st.solve_to_tol(tol, opts.max_iter, "seed")?;
    stage.iterations.extend(iters);
    stage.finish(&st);
    root.children.push(stage);

    // p-refinement to (3,3).
    let (d1, d2) = st.manifold.degrees();
    let raise1 = 3usize.saturating_sub(d1);
    let raise2 = 3usize.saturating_sub(d2);
    if raise1 > 0 || raise2 > 0 {
        let refined = st.manifold.p_refine(raise1, raise2)?;
        let delta = refinement_delta(&st.manifold, &refined)?;
        st.replace_manifold(refined, opts.quadrature)?;
        let mut stage = DiagNode::stage("p-refine(3,3)", &st);
        stage.refine_geometry_delta = Some(delta);
        stage
            .iterations
            .extend(st.solve_to_tol(tol, opts.max_iter, "p-refine(3,3)")?);
        stage.finish(&st);
        root.children.push(stage);
    }

    // Scheduled whole-direction bisections of u1.
    for round in 0..opts.h_bisections {
        let knots = st.manifold.bisection_knots1();
        let refined = st.manifold.h_refine(&knots, &[])?;
        let delta = refinement_delta(&st.manifold, &refined)?;
        st.replace_manifold(refined, opts.quadrature)?;
        let label = format!("h-refine#{}", round + 1);
        let mut stage = DiagNode::stage(&label, &st);
        stage.refine_geometry_delta = Some(delta);
        stage
            .iterations
            .extend(st.solve_to_tol(tol, opts.max_iter, &label)?);
        stage.finish(&st);
        root.children.push(stage);
    }

    // Adaptive rounds: bisect spans adjacent to knots where the strain
    // profile jumps.
    for round in 0..opts.natural_rounds {
        let knots = unnatural_knots(&st, opts.natural_jump_ratio)?;
        if knots.is_empty() {
            break;
        }
        let refined = st.manifold.h_refine(&knots, &[])?;
        let delta = refinement_delta(&st.manifold, &refined)?;
        st.replace_manifold(refined, opts.quadrature)?;
        let label = format!("adaptive#{}", round + 1);
        let mut stage = DiagNode::stage(&label, &st);
        stage.refine_geometry_delta = Some(delta);
        stage
            .iterations
            .extend(st.solve_to_tol(tol, opts.max_iter, &label)?);
        stage.finish(&st);
        root.children.push(stage);
    }

    root.finish(&st);
    Ok((st.manifold, root))
}

/// Max evaluation change introduced by a refinement, sampled on a grid.
fn refinement_delta(before: &BSplineManifold2D, after: &BSplineManifold2D) -> Result<f64> {
    let (a1, b1) = before.space1().range();
    let (a2, b2) = before.space2().range();
    let mut worst: f64 = 0.0;
    for i in 0..=40 {
        let u1 = a1 + (b1 - a1) * i as f64 / 40.0;
        for k in 0..=8 {
            let u2 = a2 + (b2 - a2) * k as f64 / 8.0;
            let d = (before.evaluate(u1, u2)? - after.evaluate(u1, u2)?).norm();
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Finds interior u1 knots across which the E11 profile jumps by more than
/// `ratio` times the peak |E11|; returns the midpoints of both adjacent
/// spans for insertion.
fn unnatural_knots(st: &SolverState, ratio: f64) -> Result<Vec<f64>> {
    let spans = st.manifold.space1().spans();
    if spans.len() < 2 {
        return Ok(Vec::new());
    }
    let (v0, v1) = st.strip.u2_range();
    let field = st.strain_field(65, 7)?;
    let peak = field.max_abs_e11();
    if peak <= 0.0 {
        return Ok(Vec::new());
    }
    let mut flagged = Vec::new();
    for w in spans.windows(2) {
        let (left, right) = (w[0], w[1]);
        let knot = left.1;
        let eps = 0.125 * (left.1 - left.0).min(right.1 - right.0);
        let mut jump: f64 = 0.0;
        for k in 1..6 {
            let u2 = v0 + (v1 - v0) * k as f64 / 6.0;
            let e_minus = sample_e11(st, knot - eps, u2)?;
            let e_plus = sample_e11(st, knot + eps, u2)?;
            jump = jump.max((e_plus - e_minus).abs());
        }
        if jump > ratio * peak {
            flagged.push(0.5 * (left.0 + left.1));
            flagged.push(0.5 * (right.0 + right.1));
        }
    }
    flagged.dedup();
    Ok(flagged)
}

fn sample_e11(st: &SolverState, u1: f64, u2: f64) -> Result<f64> {
    let g0 = geometry::metric(st.strip.surface(), u1, u2)?;
    let stiff = Stiffness::isotropic(&st.params, &g0)?;
    let frame: FrameCoeffs = geometry::orthonormal_frame(&g0)?;
    let (_, x1, x2) = st.manifold.evaluate_jet1(u1, u2)?;
    Ok(strain_state_with(&stiff, &frame, &g0, x1, x2).e_ortho.a11)
}
