//! Material model: isotropic stiffness from Lame parameters, Green strain,
//! 2nd Piola-Kirchhoff stress, and strain-energy density.
//!
//! The energy density here excludes the sqrt(det g0) volume factor; the
//! quadrature layer owns it.

use crate::error::{Error, Result};
use crate::geometry::{orthonormal_frame, Metric2, Sym2};
use nalgebra::{Matrix3, Vector2};

/// Young's modulus / Poisson's ratio with the derived Lame parameters.
///
/// The general-d formulas are implemented; the strip model always uses
/// d = 2.
#[derive(Copy, Clone, Debug)]
pub struct ElasticityParams {
    pub young: f64,
    pub poisson: f64,
    pub dim: usize,
    pub lambda: f64,
    pub mu: f64,
}

impl ElasticityParams {
    pub fn new(young: f64, poisson: f64) -> Result<Self> {
        Self::with_dim(young, poisson, 2)
    }

    pub fn with_dim(young: f64, poisson: f64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidElasticity(format!("dimension {dim} < 2")));
        }
        let d = dim as f64;
        if !(young.is_finite() && young > 0.0) {
            return Err(Error::InvalidElasticity(format!(
                "Young's modulus must be positive, got {young}"
            )));
        }
        if !(poisson > -1.0 && poisson < 1.0 / (d - 1.0)) {
            return Err(Error::InvalidElasticity(format!(
                "Poisson's ratio {poisson} outside (-1, {})",
                1.0 / (d - 1.0)
            )));
        }
        let lambda = poisson * young / ((1.0 + poisson) * (1.0 - (d - 1.0) * poisson));
        let mu = young / (2.0 * (1.0 + poisson));
        if !(lambda.is_finite() && mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidElasticity(
                "derived Lame parameters are not finite".into(),
            ));
        }
        Ok(ElasticityParams {
            young,
            poisson,
            dim,
            lambda,
            mu,
        })
    }
}

impl Default for ElasticityParams {
    /// Paper-strip defaults: Y = 1, nu = 0.25.
    fn default() -> Self {
        ElasticityParams::new(1.0, 0.25).expect("default parameters are valid")
    }
}

/// Isotropic stiffness coefficients
/// C^{ijkl} = lambda g*^{ij} g*^{kl} + mu (g*^{ik} g*^{jl} + g*^{il} g*^{jk})
/// with both major and minor symmetries exact by construction.
#[derive(Copy, Clone, Debug)]
pub struct Stiffness {
    c: [[[[f64; 2]; 2]; 2]; 2],
}

impl Stiffness {
    pub fn isotropic(params: &ElasticityParams, g0: &Metric2) -> Result<Stiffness> {
        let gi = g0.inverse()?;
        let gstar = [[gi.g11, gi.g12], [gi.g12, gi.g22]];
        let (la, mu) = (params.lambda, params.mu);
        let mut c = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        c[i][j][k][l] = la * gstar[i][j] * gstar[k][l]
                            + mu * (gstar[i][k] * gstar[j][l] + gstar[i][l] * gstar[j][k]);
                    }
                }
            }
        }
        Ok(Stiffness { c })
    }

    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.c[i][j][k][l]
    }

    /// S^{kl} = C^{ijkl} E_ij.
    pub fn contract(&self, e: &Sym2) -> Sym2 {
        let em = [[e.a11, e.a12], [e.a12, e.a22]];
        let mut s = [[0.0; 2]; 2];
        for k in 0..2 {
            for l in 0..2 {
                let mut acc = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        acc += self.c[i][j][k][l] * em[i][j];
                    }
                }
                s[k][l] = acc;
            }
        }
        Sym2::new(s[0][0], s[0][1], s[1][1])
    }

    /// C(E, E).
    pub fn quadratic(&self, e: &Sym2) -> f64 {
        let s = self.contract(e);
        s.a11 * e.a11 + 2.0 * s.a12 * e.a12 + s.a22 * e.a22
    }

    /// Quadratic form in the Mandel basis (E11, E22, sqrt(2) E12); its
    /// eigenvalues decide positive definiteness on symmetric tensors.
    pub fn mandel(&self) -> Matrix3<f64> {
        let c = &self.c;
        let r2 = std::f64::consts::SQRT_2;
        Matrix3::new(
            c[0][0][0][0],
            c[0][0][1][1],
            r2 * c[0][0][0][1],
            c[1][1][0][0],
            c[1][1][1][1],
            r2 * c[1][1][0][1],
            r2 * c[0][1][0][0],
            r2 * c[0][1][1][1],
            2.0 * c[0][1][0][1],
        )
    }
}

/// Everything the material model knows at one quadrature point.
#[derive(Copy, Clone, Debug)]
pub struct StrainState {
    pub g0: Metric2,
    /// Induced metric of the embedding, g_t ij = p~_i . p~_j.
    pub gt: Sym2,
    /// Green strain E = (g_t - g0) / 2, coordinate components.
    pub e: Sym2,
    /// Strain in the g0-orthonormal frame.
    pub e_ortho: Sym2,
    /// 2nd Piola-Kirchhoff stress S = C(E, .), coordinate components.
    pub s: Sym2,
    /// Stress in the g0-orthonormal frame.
    pub s_ortho: Sym2,
    /// (1/2) C(E, E), without the volume form.
    pub density: f64,
}

/// Builds the full strain state from the reference metric and the embedding
/// jet (p~_1, p~_2).
pub fn strain_state(
    params: &ElasticityParams,
    g0: &Metric2,
    p1: Vector2<f64>,
    p2: Vector2<f64>,
) -> Result<StrainState> {
    let stiff = Stiffness::isotropic(params, g0)?;
    let frame = orthonormal_frame(g0)?;
    Ok(strain_state_with(&stiff, &frame, g0, p1, p2))
}

/// Same as [`strain_state`] with precomputed stiffness and frame (the
/// solver caches both per quadrature point).
pub fn strain_state_with(
    stiff: &Stiffness,
    frame: &crate::geometry::FrameCoeffs,
    g0: &Metric2,
    p1: Vector2<f64>,
    p2: Vector2<f64>,
) -> StrainState {
    let gt = Sym2::new(p1.dot(&p1), p1.dot(&p2), p2.dot(&p2));
    let e = Sym2::new(
        0.5 * (gt.a11 - g0.g11),
        0.5 * (gt.a12 - g0.g12),
        0.5 * (gt.a22 - g0.g22),
    );
    let s = stiff.contract(&e);
    let density = 0.5 * stiff.quadratic(&e);
    StrainState {
        g0: *g0,
        gt,
        e,
        e_ortho: frame.covariant_to_frame(&e),
        s,
        s_ortho: frame.contravariant_to_frame(&s),
        density,
    }
}

/// Pointwise check of the reference/current state swap: for E = alpha Ebar,
/// compares the strain-energy density (as a 2-form coefficient) computed
/// with the original roles against the swapped roles, returning |W - What|
/// per alpha. The difference is cubic in alpha.
pub fn swap_energy_check(
    params: &ElasticityParams,
    g0: &Metric2,
    e_bar: &Sym2,
    alphas: &[f64],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let gt = Metric2 {
            g11: g0.g11 + 2.0 * alpha * e_bar.a11,
            g12: g0.g12 + 2.0 * alpha * e_bar.a12,
            g22: g0.g22 + 2.0 * alpha * e_bar.a22,
        };
        if !gt.is_positive_definite() {
            return Err(Error::IndefiniteSwappedMetric);
        }
        let e = Sym2::new(alpha * e_bar.a11, alpha * e_bar.a12, alpha * e_bar.a22);
        let c0 = Stiffness::isotropic(params, g0)?;
        let ct = Stiffness::isotropic(params, &gt)?;
        // Swapped: reference becomes gt, strain flips sign; (E,E) pairing
        // makes the sign irrelevant.
        let w = 0.5 * c0.quadratic(&e) * g0.det().sqrt();
        let w_hat = 0.5 * ct.quadratic(&e) * gt.det().sqrt();
        out.push((w - w_hat).abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn lame_parameters_d2() {
        let p = ElasticityParams::new(1.0, 0.25).unwrap();
        assert!((p.lambda - 0.25 / (1.25 * 0.75)).abs() < 1e-15);
        assert!((p.mu - 0.4).abs() < 1e-15);

        let p0 = ElasticityParams::new(1.0, 0.0).unwrap();
        assert_eq!(p0.lambda, 0.0);

        assert!(ElasticityParams::new(1.0, 1.0).is_err());
        assert!(ElasticityParams::new(1.0, -1.0).is_err());
        assert!(ElasticityParams::new(0.0, 0.25).is_err());

        // d = 3 sanity: lambda = nu Y / ((1+nu)(1-2nu)).
        let p3 = ElasticityParams::with_dim(2.0, 0.3, 3).unwrap();
        assert!((p3.lambda - 0.3 * 2.0 / (1.3 * 0.4)).abs() < 1e-14);
    }

    #[test]
    fn stiffness_identity_metric() {
        let p = ElasticityParams::new(1.0, 0.25).unwrap();
        let c = Stiffness::isotropic(&p, &Metric2::identity()).unwrap();
        let expected = p.lambda + 2.0 * p.mu;
        assert!((c.component(0, 0, 0, 0) - expected).abs() < 1e-14);
        assert!((expected - 16.0 / 15.0).abs() < 1e-14);
        // nu = 0 decouples the normal strains.
        let p0 = ElasticityParams::new(1.0, 0.0).unwrap();
        let c0 = Stiffness::isotropic(&p0, &Metric2::identity()).unwrap();
        assert_eq!(c0.component(0, 0, 1, 1), 0.0);
    }

    #[test]
    fn stiffness_scaled_metric() {
        let p = ElasticityParams::new(1.0, 0.25).unwrap();
        let g = Metric2 {
            g11: 4.0,
            g12: 0.0,
            g22: 1.0,
        };
        let c = Stiffness::isotropic(&p, &g).unwrap();
        assert!((c.component(0, 0, 0, 0) - (p.lambda + 2.0 * p.mu) / 16.0).abs() < 1e-14);
    }

    #[test]
    fn stiffness_symmetries_exact() {
        let p = ElasticityParams::new(1.3, 0.31).unwrap();
        let g = Metric2 {
            g11: 2.0,
            g12: 0.6,
            g22: 1.4,
        };
        let c = Stiffness::isotropic(&p, &g).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let v = c.component(i, j, k, l);
                        assert_eq!(v, c.component(k, l, i, j));
                        assert_eq!(v, c.component(j, i, k, l));
                        assert_eq!(v, c.component(i, j, l, k));
                    }
                }
            }
        }
    }

    #[test]
    fn strain_state_isometric_is_stress_free() {
        let p = ElasticityParams::default();
        let st = strain_state(
            &p,
            &Metric2::identity(),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 1.0),
        )
        .unwrap();
        assert_eq!(st.e, Sym2::default());
        assert_eq!(st.s, Sym2::default());
        assert_eq!(st.density, 0.0);
    }

    #[test]
    fn uniaxial_stretch_strain() {
        let p = ElasticityParams::default();
        let eps = 1e-3;
        let st = strain_state(
            &p,
            &Metric2::identity(),
            Vector2::new(1.0 + eps, 0.0),
            Vector2::new(0.0, 1.0),
        )
        .unwrap();
        assert!((st.e.a11 - (eps + 0.5 * eps * eps)).abs() < 1e-15);
        assert_eq!(st.e.a22, 0.0);
        assert_eq!(st.e.a12, 0.0);
    }

    #[test]
    fn density_positive_definite() {
        // Mandel-form eigenvalues are positive for mu > 0, lambda + mu > 0,
        // and the density vanishes only at zero strain.
        let p = ElasticityParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let a = nalgebra::Matrix2::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let m = a.transpose() * a + nalgebra::Matrix2::identity() * 0.1;
            let g = Metric2 {
                g11: m[(0, 0)],
                g12: m[(0, 1)],
                g22: m[(1, 1)],
            };
            let c = Stiffness::isotropic(&p, &g).unwrap();
            let eig = c.mandel().symmetric_eigen().eigenvalues;
            assert!(eig.iter().all(|&l| l > 0.0), "eigenvalues {eig:?}");

            let e = Sym2::new(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            );
            let q = c.quadratic(&e);
            if e.max_abs() > 0.0 {
                assert!(q > 0.0);
            }
        }
    }

    #[test]
    fn density_rigid_motion_invariant() {
        let p = ElasticityParams::default();
        let g = Metric2 {
            g11: 1.3,
            g12: 0.2,
            g22: 0.9,
        };
        let p1 = Vector2::new(1.1, 0.3);
        let p2 = Vector2::new(-0.2, 0.8);
        let base = strain_state(&p, &g, p1, p2).unwrap().density;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = nalgebra::Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos());
            let rot = strain_state(&p, &g, r * p1, r * p2).unwrap().density;
            assert!((rot - base).abs() < 1e-14 * base.max(1.0));
        }
    }

    #[test]
    fn density_scales_linearly_in_young() {
        let g = Metric2 {
            g11: 1.2,
            g12: -0.1,
            g22: 0.8,
        };
        let p1v = Vector2::new(1.05, 0.1);
        let p2v = Vector2::new(0.05, 0.95);
        let w1 = strain_state(&ElasticityParams::new(1.0, 0.25).unwrap(), &g, p1v, p2v)
            .unwrap()
            .density;
        let w7 = strain_state(&ElasticityParams::new(7.0, 0.25).unwrap(), &g, p1v, p2v)
            .unwrap()
            .density;
        assert!((w7 - 7.0 * w1).abs() < 1e-14 * w7.abs());
    }

    #[test]
    fn swap_residual_is_cubic() {
        let p = ElasticityParams::default();
        let g = Metric2 {
            g11: 1.4,
            g12: 0.3,
            g22: 1.1,
        };
        let e_bar = Sym2::new(0.31, 0.12, -0.22);
        let alphas = [0.0, 0.08, 0.04];
        let d = swap_energy_check(&p, &g, &e_bar, &alphas).unwrap();
        assert_eq!(d[0], 0.0);
        let ratio = d[1] / d[2];
        assert!(ratio >= 7.0, "cubic-order ratio {ratio}, expected about 8");
        assert!(ratio <= 9.5, "cubic-order ratio {ratio}, expected about 8");

        let zero = swap_energy_check(&p, &g, &Sym2::default(), &[0.5]).unwrap();
        assert_eq!(zero[0], 0.0);

        // Large alpha pushes the swapped metric out of the positive cone.
        let big = Sym2::new(-2.0, 0.0, -2.0);
        assert!(matches!(
            swap_energy_check(&p, &g, &big, &[1.0]),
            Err(Error::IndefiniteSwappedMetric)
        ));
    }
}
