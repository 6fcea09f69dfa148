//! Differential geometry of the reference state: first fundamental form,
//! orthonormal frames, Gaussian curvature, and geodesic curvature / speed
//! of a strip's center curve.

use crate::error::{Error, Result};
use crate::surface::SurfaceDefinition;
use nalgebra::Vector3;
use std::sync::Arc;

/// Symmetric 2x2 tensor in coordinate components (strain, stress, ...).
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a22.abs())
    }
}

/// First fundamental form at a point. Positive definite by construction
/// (checked where it is computed).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Metric2 {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl Metric2 {
    pub fn identity() -> Self {
        Metric2 {
            g11: 1.0,
            g12: 0.0,
            g22: 1.0,
        }
    }

    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g11 > 0.0 && self.det() > 0.0
    }

    /// Dual (inverse) metric components g*^{ij}.
    pub fn inverse(&self) -> Result<Metric2> {
        let det = self.det();
        if !self.is_positive_definite() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Metric2 {
            g11: self.g22 / det,
            g12: -self.g12 / det,
            g22: self.g11 / det,
        })
    }

    pub fn as_sym(&self) -> Sym2 {
        Sym2::new(self.g11, self.g12, self.g22)
    }
}

/// Metric together with its first partials with respect to u1 and u2.
#[derive(Copy, Clone, Debug)]
pub struct MetricJet {
    pub g: Metric2,
    pub d1: Metric2,
    pub d2: Metric2,
}

/// Orthonormal frame coefficients e_k^i (row k = frame index, column i =
/// coordinate component): e_1 along d/du1, e_2 its +90 degree completion by
/// Gram-Schmidt. Lower triangular, and e^T g e = I.
#[derive(Copy, Clone, Debug)]
pub struct FrameCoeffs {
    pub e: [[f64; 2]; 2],
}

impl FrameCoeffs {
    /// Pulls a symmetric (0,2) tensor into the frame: T<0>_kl = e_k^i e_l^j T_ij.
    pub fn covariant_to_frame(&self, t: &Sym2) -> Sym2 {
        let e = &self.e;
        let row = |k: usize, l: usize| -> f64 {
            e[k][0] * e[l][0] * t.a11
                + (e[k][0] * e[l][1] + e[k][1] * e[l][0]) * t.a12
                + e[k][1] * e[l][1] * t.a22
        };
        Sym2::new(row(0, 0), row(0, 1), row(1, 1))
    }

    /// Pushes a symmetric (2,0) tensor into the frame using the dual
    /// coframe: T<0>^kl = theta^k_i theta^l_j T^ij.
    pub fn contravariant_to_frame(&self, t: &Sym2) -> Sym2 {
        let e = &self.e;
        // theta = e^{-1} with rows as frame covectors.
        let det = e[0][0] * e[1][1] - e[0][1] * e[1][0];
        let th = [
            [e[1][1] / det, -e[0][1] / det],
            [-e[1][0] / det, e[0][0] / det],
        ];
        // theta^k_i has the coframe in ROWS of the inverse transpose; with
        // e[k][i] the matrix (frame x coord), theta is its matrix inverse
        // read as theta[i][k]; transpose to index theta^k_i.
        let thkl = [[th[0][0], th[1][0]], [th[0][1], th[1][1]]];
        let row = |k: usize, l: usize| -> f64 {
            thkl[k][0] * thkl[l][0] * t.a11
                + (thkl[k][0] * thkl[l][1] + thkl[k][1] * thkl[l][0]) * t.a12
                + thkl[k][1] * thkl[l][1] * t.a22
        };
        Sym2::new(row(0, 0), row(0, 1), row(1, 1))
    }
}

/// One rectangular parameter strip D = [u1a, u1b] x [c - b, c + b] carved
/// from a surface's domain.
#[derive(Clone, Debug)]
pub struct StripDomain {
    surface: Arc<SurfaceDefinition>,
    u1a: f64,
    u1b: f64,
    c: f64,
    half_breadth: f64,
    index: usize,
}

impl StripDomain {
    pub fn new(
        surface: Arc<SurfaceDefinition>,
        u1_range: (f64, f64),
        c: f64,
        half_breadth: f64,
        index: usize,
    ) -> Result<Self> {
        let d = surface.domain();
        if !(half_breadth > 0.0) {
            return Err(Error::InvalidStrip(format!(
                "half-breadth must be positive, got {half_breadth}"
            )));
        }
        if !(u1_range.0 < u1_range.1) {
            return Err(Error::InvalidStrip(format!(
                "empty u1 interval [{}, {}]",
                u1_range.0, u1_range.1
            )));
        }
        let tol2 = 1e-12 * (d.u2.1 - d.u2.0);
        if c - half_breadth < d.u2.0 - tol2 || c + half_breadth > d.u2.1 + tol2 {
            return Err(Error::InvalidStrip(format!(
                "breadth interval [{}, {}] not inside surface u2 range [{}, {}]",
                c - half_breadth,
                c + half_breadth,
                d.u2.0,
                d.u2.1
            )));
        }
        let tol1 = 1e-12 * (d.u1.1 - d.u1.0);
        if u1_range.0 < d.u1.0 - tol1 || u1_range.1 > d.u1.1 + tol1 {
            return Err(Error::InvalidStrip(format!(
                "u1 interval [{}, {}] not inside surface u1 range [{}, {}]",
                u1_range.0, u1_range.1, d.u1.0, d.u1.1
            )));
        }
        Ok(StripDomain {
            surface,
            u1a: u1_range.0,
            u1b: u1_range.1,
            c,
            half_breadth,
            index,
        })
    }

    pub fn surface(&self) -> &Arc<SurfaceDefinition> {
        &self.surface
    }
    pub fn u1_range(&self) -> (f64, f64) {
        (self.u1a, self.u1b)
    }
    pub fn center(&self) -> f64 {
        self.c
    }
    pub fn half_breadth(&self) -> f64 {
        self.half_breadth
    }
    pub fn u2_range(&self) -> (f64, f64) {
        (self.c - self.half_breadth, self.c + self.half_breadth)
    }
    pub fn index(&self) -> usize {
        self.index
    }

    /// Same strip with the half-breadth scaled by `beta` (the appendix
    /// beta-series).
    pub fn scaled_breadth(&self, beta: f64) -> Result<StripDomain> {
        StripDomain::new(
            self.surface.clone(),
            (self.u1a, self.u1b),
            self.c,
            self.half_breadth * beta,
            self.index,
        )
    }
}

/// First fundamental form g_ij = p_i . p_j.
pub fn metric(def: &SurfaceDefinition, u1: f64, u2: f64) -> Result<Metric2> {
    let j = def.jet2(u1, u2)?;
    let g = Metric2 {
        g11: j.p1.dot(&j.p1),
        g12: j.p1.dot(&j.p2),
        g22: j.p2.dot(&j.p2),
    };
    if !g.is_positive_definite() {
        return Err(Error::RankDeficient {
            u1,
            u2,
            det: g.det(),
        });
    }
    Ok(g)
}

/// Metric with exact first partials assembled from the second partials of
/// the parametrization.
pub fn metric_jet(def: &SurfaceDefinition, u1: f64, u2: f64) -> Result<MetricJet> {
    let j = def.jet2(u1, u2)?;
    let g = Metric2 {
        g11: j.p1.dot(&j.p1),
        g12: j.p1.dot(&j.p2),
        g22: j.p2.dot(&j.p2),
    };
    if !g.is_positive_definite() {
        return Err(Error::RankDeficient {
            u1,
            u2,
            det: g.det(),
        });
    }
    let d1 = Metric2 {
        g11: 2.0 * j.p11.dot(&j.p1),
        g12: j.p11.dot(&j.p2) + j.p1.dot(&j.p12),
        g22: 2.0 * j.p12.dot(&j.p2),
    };
    let d2 = Metric2 {
        g11: 2.0 * j.p12.dot(&j.p1),
        g12: j.p12.dot(&j.p2) + j.p1.dot(&j.p22),
        g22: 2.0 * j.p22.dot(&j.p2),
    };
    Ok(MetricJet { g, d1, d2 })
}

/// Gaussian curvature, computed extrinsically as det(II)/det(I) from the
/// unit normal and second partials.
pub fn gaussian_curvature(def: &SurfaceDefinition, u1: f64, u2: f64) -> Result<f64> {
    let j = def.jet2(u1, u2)?;
    let cross = j.p1.cross(&j.p2);
    let det1 = cross.norm_squared(); // EG - F^2
    if det1 <= 0.0 {
        return Err(Error::RankDeficient { u1, u2, det: det1 });
    }
    let n: Vector3<f64> = cross / cross.norm();
    let l = n.dot(&j.p11);
    let m = n.dot(&j.p12);
    let nn = n.dot(&j.p22);
    Ok((l * nn - m * m) / det1)
}

/// Parametrization speed of the center curve: s_0(u1) = sqrt(g11(u1, c)).
pub fn center_speed(strip: &StripDomain, u1: f64) -> Result<f64> {
    let g = metric(strip.surface(), u1, strip.center())?;
    Ok(g.g11.sqrt())
}

/// d s_0 / d u1, needed by the seed ODE.
pub fn center_speed_derivative(strip: &StripDomain, u1: f64) -> Result<f64> {
    let mj = metric_jet(strip.surface(), u1, strip.center())?;
    Ok(mj.d1.g11 / (2.0 * mj.g.g11.sqrt()))
}

/// Geodesic curvature of the u2 = c coordinate curve, general-chart form:
///
///   kappa = [g11 (2 dg12/du1 - dg11/du2) - g12 dg11/du1]
///           / (2 g11^{3/2} sqrt(det g))
///
/// Sign convention: positive when the curve turns toward +u2 (e_2 is the
/// +90 degree rotation of e_1 in the oriented chart).
pub fn geodesic_curvature(strip: &StripDomain, u1: f64) -> Result<f64> {
    let mj = metric_jet(strip.surface(), u1, strip.center())?;
    let g = &mj.g;
    let num = g.g11 * (2.0 * mj.d1.g12 - mj.d2.g11) - g.g12 * mj.d1.g11;
    let den = 2.0 * g.g11.powf(1.5) * g.det().sqrt();
    Ok(num / den)
}

/// Gram-Schmidt orthonormal frame: e_1 = (1/sqrt(g11), 0), e_2 completes it.
pub fn orthonormal_frame(g: &Metric2) -> Result<FrameCoeffs> {
    if !g.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let det = g.det();
    let e11 = 1.0 / g.g11.sqrt();
    // e_2 = (d/du2 - (g12/g11) d/du1) normalized; |.|^2 = det/g11.
    let norm = (det / g.g11).sqrt();
    let e21 = -g.g12 / g.g11 / norm;
    let e22 = 1.0 / norm;
    Ok(FrameCoeffs {
        e: [[e11, 0.0], [e21, e22]],
    })
}

/// T<0>_kl = e_k^i e_l^j T_ij for a symmetric (0,2) tensor.
pub fn tensor_to_orthonormal(t: &Sym2, g: &Metric2) -> Result<Sym2> {
    Ok(orthonormal_frame(g)?.covariant_to_frame(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeMap;

    fn builtin(name: &str) -> Arc<SurfaceDefinition> {
        Arc::new(SurfaceDefinition::builtin(name, &BTreeMap::new()).unwrap())
    }

    fn sphere(radius: f64) -> Arc<SurfaceDefinition> {
        let mut p = BTreeMap::new();
        p.insert("radius".to_string(), radius);
        Arc::new(SurfaceDefinition::builtin("sphere_patch", &p).unwrap())
    }

    #[test]
    fn metric_values() {
        let cat = builtin("catenoid");
        let g = metric(&cat, 1.0, 0.5).unwrap();
        let c2 = 0.5f64.cosh().powi(2);
        assert!((g.g11 - c2).abs() < 1e-14);
        assert!((g.g22 - c2).abs() < 1e-14);
        assert!(g.g12.abs() < 1e-14);

        let plane = builtin("plane");
        let g = metric(&plane, 0.3, -0.7).unwrap();
        assert_eq!(g, Metric2::identity());

        let par = builtin("paraboloid");
        let g = metric(&par, 1.0, 1.0).unwrap();
        assert!((g.g11 - 5.0).abs() < 1e-14);
        assert!((g.g12 - 4.0).abs() < 1e-14);
        assert!((g.g22 - 5.0).abs() < 1e-14);
    }

    #[test]
    fn metric_partials_match_finite_differences() {
        let cat = builtin("catenoid");
        let h = 1e-6;
        let (u1, u2) = (0.8, 0.3);
        let mj = metric_jet(&cat, u1, u2).unwrap();
        let gp = metric(&cat, u1 + h, u2).unwrap();
        let gm = metric(&cat, u1 - h, u2).unwrap();
        assert!((mj.d1.g11 - (gp.g11 - gm.g11) / (2.0 * h)).abs() < 1e-7);
        let gp = metric(&cat, u1, u2 + h).unwrap();
        let gm = metric(&cat, u1, u2 - h).unwrap();
        assert!((mj.d2.g11 - (gp.g11 - gm.g11) / (2.0 * h)).abs() < 1e-7);
        assert!((mj.d2.g22 - (gp.g22 - gm.g22) / (2.0 * h)).abs() < 1e-7);
    }

    #[test]
    fn gaussian_curvature_known_values() {
        let par = builtin("paraboloid");
        assert!((gaussian_curvature(&par, 0.0, 0.0).unwrap() - 4.0).abs() < 1e-13);

        let plane = builtin("plane");
        assert_eq!(gaussian_curvature(&plane, 0.2, 0.9).unwrap(), 0.0);

        let cat = builtin("catenoid");
        for u1 in [-2.0, 0.0, 1.5] {
            assert!((gaussian_curvature(&cat, u1, 0.0).unwrap() + 1.0).abs() < 1e-13);
        }
        // K = -1/cosh^4(u2) off the waist.
        let k = gaussian_curvature(&cat, 0.4, 0.6).unwrap();
        assert!((k + 1.0 / 0.6f64.cosh().powi(4)).abs() < 1e-13);

        let sph = sphere(2.0);
        let k = gaussian_curvature(&sph, 0.3, 1.2).unwrap();
        assert!((k - 0.25).abs() < 1e-12);
    }

    /// Theorema Egregium check: extrinsic K agrees with the intrinsic
    /// Brioschi formula evaluated from finite differences of the metric.
    #[test]
    fn extrinsic_matches_brioschi() {
        fn brioschi(def: &SurfaceDefinition, u1: f64, u2: f64) -> f64 {
            let h = 1e-4;
            let g = |a: f64, b: f64| metric(def, a, b).unwrap();
            let g0 = g(u1, u2);
            let (e, f, gg) = (g0.g11, g0.g12, g0.g22);
            let d1 = |sel: fn(&Metric2) -> f64| {
                (sel(&g(u1 + h, u2)) - sel(&g(u1 - h, u2))) / (2.0 * h)
            };
            let d2 = |sel: fn(&Metric2) -> f64| {
                (sel(&g(u1, u2 + h)) - sel(&g(u1, u2 - h))) / (2.0 * h)
            };
            let e1 = d1(|m| m.g11);
            let e2 = d2(|m| m.g11);
            let f1 = d1(|m| m.g12);
            let f2 = d2(|m| m.g12);
            let g1 = d1(|m| m.g22);
            let g2 = d2(|m| m.g22);
            let e22 = (g(u1, u2 + h).g11 - 2.0 * e + g(u1, u2 - h).g11) / (h * h);
            let g11 = (g(u1 + h, u2).g22 - 2.0 * gg + g(u1 - h, u2).g22) / (h * h);
            let f12 = (g(u1 + h, u2 + h).g12 - g(u1 + h, u2 - h).g12 - g(u1 - h, u2 + h).g12
                + g(u1 - h, u2 - h).g12)
                / (4.0 * h * h);
            let m1 = nalgebra::Matrix3::new(
                -0.5 * e22 + f12 - 0.5 * g11,
                0.5 * e1,
                f1 - 0.5 * e2,
                f2 - 0.5 * g1,
                e,
                f,
                0.5 * g2,
                f,
                gg,
            );
            let m2 = nalgebra::Matrix3::new(0.0, 0.5 * e2, 0.5 * g1, 0.5 * e2, e, f, 0.5 * g1, f, gg);
            let det = e * gg - f * f;
            (m1.determinant() - m2.determinant()) / (det * det)
        }

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for name in [
            "paraboloid",
            "hyperbolic_paraboloid",
            "catenoid",
            "helicoid",
            "sphere_patch",
        ] {
            let s = builtin(name);
            let d = s.domain();
            for _ in 0..50 {
                let pad1 = 1e-3 * (d.u1.1 - d.u1.0);
                let pad2 = 1e-3 * (d.u2.1 - d.u2.0);
                let u1 = rng.gen_range(d.u1.0 + pad1..d.u1.1 - pad1);
                let u2 = rng.gen_range(d.u2.0 + pad2..d.u2.1 - pad2);
                let ke = gaussian_curvature(&s, u1, u2).unwrap();
                let ki = brioschi(&s, u1, u2);
                let scale = ke.abs().max(1e-3);
                assert!(
                    (ke - ki).abs() < 1e-6 * scale.max(1.0) + 1e-6 * scale,
                    "{name} at ({u1},{u2}): extrinsic {ke} vs intrinsic {ki}"
                );
            }
        }
    }

    #[test]
    fn center_speed_values() {
        let plane = builtin("plane");
        let strip = StripDomain::new(plane, (-1.0, 1.0), 0.0, 0.1, 0).unwrap();
        assert_eq!(center_speed(&strip, 0.4).unwrap(), 1.0);

        let par = builtin("paraboloid");
        let strip = StripDomain::new(par, (-1.0, 1.0), 0.05, 0.05, 0).unwrap();
        assert!((center_speed(&strip, 1.0).unwrap() - 5.0f64.sqrt()).abs() < 1e-13);

        let cat = builtin("catenoid");
        let strip = StripDomain::new(cat, (-3.0, 3.0), 0.0, 0.1, 0).unwrap();
        assert!((center_speed(&strip, 1.7).unwrap() - 1.0).abs() < 1e-14);
    }

    /// Christoffel-based oracle for the geodesic curvature of the u2 = c
    /// curve, using finite differences of the metric only.
    fn kappa_oracle(strip: &StripDomain, u1: f64) -> f64 {
        let def = strip.surface();
        let c = strip.center();
        let h = 1e-5;
        let g = metric(def, u1, c).unwrap();
        let dg1 = |sel: fn(&Metric2) -> f64| {
            (sel(&metric(def, u1 + h, c).unwrap()) - sel(&metric(def, u1 - h, c).unwrap()))
                / (2.0 * h)
        };
        let dg2 = |sel: fn(&Metric2) -> f64| {
            (sel(&metric(def, u1, c + h).unwrap()) - sel(&metric(def, u1, c - h).unwrap()))
                / (2.0 * h)
        };
        let det = g.det();
        let ginv21 = -g.g12 / det;
        let ginv22 = g.g11 / det;
        // Gamma^2_11 = 1/2 g*^{2l} (2 d1 g_{1l} - dl g_{11})
        let gamma211 = 0.5
            * (ginv21 * (2.0 * dg1(|m| m.g11) - dg1(|m| m.g11))
                + ginv22 * (2.0 * dg1(|m| m.g12) - dg2(|m| m.g11)));
        det.sqrt() * gamma211 / g.g11.powf(1.5)
    }

    #[test]
    fn geodesic_curvature_values() {
        let plane = builtin("plane");
        let strip = StripDomain::new(plane, (-1.0, 1.0), 0.3, 0.05, 0).unwrap();
        assert_eq!(geodesic_curvature(&strip, 0.2).unwrap(), 0.0);

        // Latitude circle at colatitude theta0 on the unit sphere has
        // |kappa| = |cot theta0|; compare against the Christoffel oracle.
        let sph = sphere(1.0);
        for theta0 in [std::f64::consts::FRAC_PI_3, 1.2, 2.0] {
            let strip = StripDomain::new(sph.clone(), (-1.0, 1.0), theta0, 0.05, 0).unwrap();
            let k = geodesic_curvature(&strip, 0.3).unwrap();
            assert!(
                (k.abs() - (1.0 / theta0.tan()).abs()).abs() < 1e-10,
                "theta0={theta0}: kappa={k}"
            );
            let oracle = kappa_oracle(&strip, 0.3);
            assert!((k - oracle).abs() < 1e-6, "kappa {k} vs oracle {oracle}");
        }

        let cat = builtin("catenoid");
        let strip = StripDomain::new(cat, (-3.0, 3.0), 0.0, 0.1, 0).unwrap();
        assert!(geodesic_curvature(&strip, 0.7).unwrap().abs() < 1e-14);

        // General (non-orthogonal) chart: paraboloid off-center strip.
        let par = builtin("paraboloid");
        let strip = StripDomain::new(par, (-1.0, 1.0), 0.35, 0.05, 0).unwrap();
        for u1 in [-0.8, -0.1, 0.5] {
            let k = geodesic_curvature(&strip, u1).unwrap();
            let oracle = kappa_oracle(&strip, u1);
            assert!((k - oracle).abs() < 1e-6 * k.abs().max(1.0));
        }
    }

    #[test]
    fn frame_examples() {
        let f = orthonormal_frame(&Metric2::identity()).unwrap();
        assert_eq!(f.e, [[1.0, 0.0], [0.0, 1.0]]);

        let g = Metric2 {
            g11: 4.0,
            g12: 0.0,
            g22: 1.0,
        };
        let f = orthonormal_frame(&g).unwrap();
        assert!((f.e[0][0] - 0.5).abs() < 1e-15);
        assert_eq!(f.e[0][1], 0.0);
        assert!((f.e[1][1] - 1.0).abs() < 1e-15);

        assert!(orthonormal_frame(&Metric2 {
            g11: 1.0,
            g12: 2.0,
            g22: 1.0
        })
        .is_err());
    }

    #[test]
    fn frame_diagonalizes_metric() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            // Random SPD metric via g = A^T A + eps I.
            let a = nalgebra::Matrix2::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let m = a.transpose() * a + nalgebra::Matrix2::identity() * 0.05;
            let g = Metric2 {
                g11: m[(0, 0)],
                g12: m[(0, 1)],
                g22: m[(1, 1)],
            };
            let f = orthonormal_frame(&g).unwrap();
            let id = f.covariant_to_frame(&g.as_sym());
            assert!((id.a11 - 1.0).abs() < 1e-12);
            assert!(id.a12.abs() < 1e-12);
            assert!((id.a22 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_to_orthonormal_scaling() {
        let g = Metric2 {
            g11: 4.0,
            g12: 0.0,
            g22: 1.0,
        };
        let t = Sym2::new(0.8, -0.3, 0.5);
        let o = tensor_to_orthonormal(&t, &g).unwrap();
        assert!((o.a11 - 0.8 / 4.0).abs() < 1e-15);
        assert!((o.a12 + 0.3 / 2.0).abs() < 1e-15);
        assert!((o.a22 - 0.5).abs() < 1e-15);

        let zero = tensor_to_orthonormal(&Sym2::default(), &g).unwrap();
        assert_eq!(zero, Sym2::default());

        // Metric in its own orthonormal frame is the identity.
        let id = tensor_to_orthonormal(&g.as_sym(), &g).unwrap();
        assert!((id.a11 - 1.0).abs() < 1e-14 && (id.a22 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn contravariant_frame_transform_consistent() {
        // Lowering indices first and using the covariant transform must
        // agree with the contravariant transform.
        let g = Metric2 {
            g11: 3.0,
            g12: 0.7,
            g22: 2.0,
        };
        let s = Sym2::new(1.2, -0.4, 0.9); // S^{ij}
        let f = orthonormal_frame(&g).unwrap();
        let up = f.contravariant_to_frame(&s);
        // S_ij = g_ik S^kl g_lj
        let gm = nalgebra::Matrix2::new(g.g11, g.g12, g.g12, g.g22);
        let sm = nalgebra::Matrix2::new(s.a11, s.a12, s.a12, s.a22);
        let low = gm * sm * gm;
        let down = f.covariant_to_frame(&Sym2::new(low[(0, 0)], low[(0, 1)], low[(1, 1)]));
        assert!((up.a11 - down.a11).abs() < 1e-12);
        assert!((up.a12 - down.a12).abs() < 1e-12);
        assert!((up.a22 - down.a22).abs() < 1e-12);
    }

    #[test]
    fn strip_validation() {
        let par = builtin("paraboloid");
        assert!(StripDomain::new(par.clone(), (-1.0, 1.0), 0.98, 0.05, 0).is_err());
        assert!(StripDomain::new(par.clone(), (-1.0, 1.0), 0.0, 0.0, 0).is_err());
        assert!(StripDomain::new(par.clone(), (-2.0, 1.0), 0.0, 0.05, 0).is_err());
        let s = StripDomain::new(par, (-1.0, 1.0), 0.05, 0.05, 3).unwrap();
        assert_eq!(s.u2_range(), (0.0, 0.1));
        assert_eq!(s.index(), 3);
        let half = s.scaled_breadth(0.5).unwrap();
        assert!((half.half_breadth() - 0.025).abs() < 1e-15);
    }
}
