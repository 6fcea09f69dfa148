//! Parametric surface definitions: built-in parametrizations and a small
//! expression language, evaluated with exact first and second derivatives.

mod expr;
mod jet;

pub use expr::{parse_expression, BinaryOp, ExpressionTree, UnaryOp, Var};
pub use jet::{ExprScalar, Jet2};

use crate::error::{Error, Result};
use nalgebra::Vector3;
use std::collections::BTreeMap;

/// Closed parameter rectangle of a surface.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DomainRect {
    pub u1: (f64, f64),
    pub u2: (f64, f64),
}

impl DomainRect {
    pub fn new(u1: (f64, f64), u2: (f64, f64)) -> Result<Self> {
        if !(u1.0.is_finite() && u1.0 < u1.1 && u2.0.is_finite() && u2.0 < u2.1) {
            return Err(Error::Invalid(format!(
                "invalid domain [{},{}]x[{},{}]",
                u1.0, u1.1, u2.0, u2.1
            )));
        }
        Ok(DomainRect { u1, u2 })
    }

    pub fn contains(&self, u1: f64, u2: f64) -> bool {
        let t1 = 1e-12 * (self.u1.1 - self.u1.0);
        let t2 = 1e-12 * (self.u2.1 - self.u2.0);
        u1 >= self.u1.0 - t1 && u1 <= self.u1.1 + t1 && u2 >= self.u2.0 - t2 && u2 <= self.u2.1 + t2
    }
}

/// Value and partial derivatives of the parametrization at one point:
/// p, p1 = dp/du1, p2 = dp/du2 and the three second partials.
#[derive(Copy, Clone, Debug)]
pub struct SurfaceJet {
    pub p: Vector3<f64>,
    pub p1: Vector3<f64>,
    pub p2: Vector3<f64>,
    pub p11: Vector3<f64>,
    pub p12: Vector3<f64>,
    pub p22: Vector3<f64>,
}

/// A twice-differentiable map (u1, u2) -> R^3 given by three expression
/// trees. Immutable after construction and safe to evaluate concurrently.
#[derive(Clone, Debug)]
pub struct SurfaceDefinition {
    exprs: [ExpressionTree; 3],
    domain: DomainRect,
}

impl SurfaceDefinition {
    /// Parses the one-line form `sx ; sy ; sz ; [a,b]x[c,d]`. Newlines may
    /// be used instead of semicolons. Error offsets refer to the full text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts: Vec<(usize, &str)> = Vec::new();
        let mut start = 0;
        for (i, ch) in text.char_indices() {
            if ch == ';' || ch == '\n' {
                parts.push((start, &text[start..i]));
                start = i + 1;
            }
        }
        parts.push((start, &text[start..]));
        // Ignore empty trailing segments from a final newline.
        while parts.len() > 4 && parts.last().is_some_and(|(_, s)| s.trim().is_empty()) {
            parts.pop();
        }
        if parts.len() != 4 {
            return Err(Error::Syntax {
                offset: 0,
                message: format!(
                    "expected three expressions and a domain clause, found {} parts",
                    parts.len()
                ),
            });
        }
        let ex = expr::parse_expression_at(parts[0].1, parts[0].0)?;
        let ey = expr::parse_expression_at(parts[1].1, parts[1].0)?;
        let ez = expr::parse_expression_at(parts[2].1, parts[2].0)?;
        let (dom_off, dom_src) = parts[3];
        let pad = dom_src.len() - dom_src.trim_start().len();
        let d = expr::parse_domain_clause(dom_src.trim(), dom_off + pad)?;
        Ok(SurfaceDefinition {
            exprs: [ex, ey, ez],
            domain: DomainRect::new((d[0][0], d[0][1]), (d[1][0], d[1][1]))?,
        })
    }

    /// Builds a surface from three expression sources and a numeric domain
    /// (the JSON config form).
    pub fn from_exprs(sx: &str, sy: &str, sz: &str, domain: DomainRect) -> Result<Self> {
        Ok(SurfaceDefinition {
            exprs: [
                parse_expression(sx)?,
                parse_expression(sy)?,
                parse_expression(sz)?,
            ],
            domain,
        })
    }

    /// Named surfaces used throughout the examples and tests.
    ///
    /// `plane`, `paraboloid`, `hyperbolic_paraboloid`, `catenoid`,
    /// `helicoid` take no parameters; `sphere_patch` takes `radius`.
    pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let check_empty = |allowed: &[&str]| -> Result<()> {
            for key in params.keys() {
                if !allowed.contains(&key.as_str()) {
                    return Err(Error::InvalidBuiltinParam {
                        surface: name.to_string(),
                        param: key.clone(),
                    });
                }
            }
            Ok(())
        };
        let text = match name {
            "plane" => {
                check_empty(&[])?;
                "u1 ; u2 ; 0 ; [-1,1]x[-1,1]".to_string()
            }
            "paraboloid" => {
                check_empty(&[])?;
                "u1 ; u2 ; u1^2+u2^2 ; [-1,1]x[-1,1]".to_string()
            }
            "hyperbolic_paraboloid" => {
                check_empty(&[])?;
                "u1 ; u2 ; u1^2-u2^2 ; [-1,1]x[-1,1]".to_string()
            }
            "catenoid" => {
                check_empty(&[])?;
                "cosh(u2)*cos(u1) ; cosh(u2)*sin(u1) ; u2 ; [-pi,pi]x[-pi/2,pi/2]".to_string()
            }
            "helicoid" => {
                check_empty(&[])?;
                "sinh(u2)*cos(u1) ; sinh(u2)*sin(u1) ; u1 ; [-pi,pi]x[-pi/2,pi/2]".to_string()
            }
            "sphere_patch" => {
                check_empty(&["radius"])?;
                let r = params.get("radius").copied().unwrap_or(1.0);
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::InvalidBuiltinParam {
                        surface: name.to_string(),
                        param: "radius".to_string(),
                    });
                }
                format!(
                    "{r:?}*sin(u2)*cos(u1) ; {r:?}*sin(u2)*sin(u1) ; {r:?}*cos(u2) ; [-pi,pi]x[pi/6,5*pi/6]"
                )
            }
            _ => return Err(Error::UnknownBuiltin(name.to_string())),
        };
        SurfaceDefinition::parse(&text)
    }

    pub fn domain(&self) -> DomainRect {
        self.domain
    }

    pub fn exprs(&self) -> &[ExpressionTree; 3] {
        &self.exprs
    }

    /// Position only.
    pub fn evaluate(&self, u1: f64, u2: f64) -> Result<Vector3<f64>> {
        if !self.domain.contains(u1, u2) {
            return Err(Error::DomainViolation { u1, u2 });
        }
        let mut p = Vector3::zeros();
        for (k, e) in self.exprs.iter().enumerate() {
            p[k] = e.eval(u1, u2)?;
        }
        if !(p[0].is_finite() && p[1].is_finite() && p[2].is_finite()) {
            return Err(Error::NonFinite { u1, u2 });
        }
        Ok(p)
    }

    /// Position with exact first and second partial derivatives, computed by
    /// forward-mode differentiation of the expression trees.
    pub fn jet2(&self, u1: f64, u2: f64) -> Result<SurfaceJet> {
        if !self.domain.contains(u1, u2) {
            return Err(Error::DomainViolation { u1, u2 });
        }
        let x = Jet2::var1(u1);
        let y = Jet2::var2(u2);
        let mut jet = SurfaceJet {
            p: Vector3::zeros(),
            p1: Vector3::zeros(),
            p2: Vector3::zeros(),
            p11: Vector3::zeros(),
            p12: Vector3::zeros(),
            p22: Vector3::zeros(),
        };
        for (k, e) in self.exprs.iter().enumerate() {
            let j = e.eval(x, y)?;
            if !j.is_finite() {
                return Err(Error::NonFinite { u1, u2 });
            }
            jet.p[k] = j.v;
            jet.p1[k] = j.d1;
            jet.p2[k] = j.d2;
            jet.p11[k] = j.d11;
            jet.p12[k] = j.d12;
            jet.p22[k] = j.d22;
        }
        Ok(jet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn builtin(name: &str) -> SurfaceDefinition {
        SurfaceDefinition::builtin(name, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn paraboloid_jet_hand_values() {
        let s = builtin("paraboloid");
        let j = s.jet2(0.5, 0.2).unwrap();
        assert!((j.p - Vector3::new(0.5, 0.2, 0.29)).norm() < 1e-15);
        assert!((j.p1 - Vector3::new(1.0, 0.0, 1.0)).norm() < 1e-15);
        assert!((j.p2 - Vector3::new(0.0, 1.0, 0.4)).norm() < 1e-15);
        assert!((j.p11 - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-15);
        assert!((j.p12 - Vector3::zeros()).norm() < 1e-15);
        assert!((j.p22 - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn plane_jet_trivial() {
        let s = builtin("plane");
        let j = s.jet2(-0.3, 0.9).unwrap();
        assert_eq!(j.p1, Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(j.p2, Vector3::new(0.0, 1.0, 0.0));
        assert_eq!(j.p11, Vector3::zeros());
        assert_eq!(j.p12, Vector3::zeros());
        assert_eq!(j.p22, Vector3::zeros());
    }

    #[test]
    fn catenoid_jet_at_origin() {
        let s = builtin("catenoid");
        let j = s.jet2(0.0, 0.0).unwrap();
        assert!((j.p - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((j.p1 - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
        assert!((j.p2 - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn helicoid_matches_paper_parametrization() {
        let s = builtin("helicoid");
        let p = s.evaluate(0.7, 0.3).unwrap();
        assert!((p[0] - 0.3f64.sinh() * 0.7f64.cos()).abs() < 1e-15);
        assert!((p[1] - 0.3f64.sinh() * 0.7f64.sin()).abs() < 1e-15);
        assert!((p[2] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn domain_violation_and_unknown_builtin() {
        let s = builtin("paraboloid");
        assert!(matches!(
            s.evaluate(1.5, 0.0),
            Err(Error::DomainViolation { .. })
        ));
        assert!(matches!(
            SurfaceDefinition::builtin("torus", &BTreeMap::new()),
            Err(Error::UnknownBuiltin(_))
        ));
        let mut bad = BTreeMap::new();
        bad.insert("radius".to_string(), -1.0);
        assert!(SurfaceDefinition::builtin("sphere_patch", &bad).is_err());
        let mut stray = BTreeMap::new();
        stray.insert("height".to_string(), 1.0);
        assert!(SurfaceDefinition::builtin("plane", &stray).is_err());
    }

    #[test]
    fn log_of_negative_is_an_error() {
        let s = SurfaceDefinition::parse("log(u1) ; u2 ; 0 ; [-1,1]x[-1,1]").unwrap();
        assert!(matches!(
            s.evaluate(-0.5, 0.0),
            Err(Error::NonFinite { .. })
        ));
        assert!(s.evaluate(0.5, 0.0).is_ok());
    }

    /// Central finite differences of the position must reproduce the
    /// forward-mode first partials on every builtin.
    #[test]
    fn first_partials_match_finite_differences() {
        let names = [
            "plane",
            "paraboloid",
            "hyperbolic_paraboloid",
            "catenoid",
            "helicoid",
            "sphere_patch",
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let h = 1e-6;
        for name in names {
            let s = builtin(name);
            let d = s.domain();
            for _ in 0..100 {
                // Keep the stencil inside the closed domain.
                let u1 = rng.gen_range(d.u1.0 + 2.0 * h..d.u1.1 - 2.0 * h);
                let u2 = rng.gen_range(d.u2.0 + 2.0 * h..d.u2.1 - 2.0 * h);
                let j = s.jet2(u1, u2).unwrap();
                let fd1 = (s.evaluate(u1 + h, u2).unwrap() - s.evaluate(u1 - h, u2).unwrap())
                    / (2.0 * h);
                let fd2 = (s.evaluate(u1, u2 + h).unwrap() - s.evaluate(u1, u2 - h).unwrap())
                    / (2.0 * h);
                let scale = j.p1.norm().max(1.0);
                assert!(
                    (j.p1 - fd1).norm() < 1e-6 * scale,
                    "{name}: d1 mismatch at ({u1}, {u2})"
                );
                let scale = j.p2.norm().max(1.0);
                assert!(
                    (j.p2 - fd2).norm() < 1e-6 * scale,
                    "{name}: d2 mismatch at ({u1}, {u2})"
                );
            }
        }
    }

    /// Second partials against a finite-difference stencil, at looser
    /// tolerance (second-order truncation).
    #[test]
    fn second_partials_match_finite_differences() {
        let s = builtin("catenoid");
        let h = 1e-4;
        for &(u1, u2) in &[(0.4, 0.2), (-1.0, -0.6), (2.0, 1.2)] {
            let j = s.jet2(u1, u2).unwrap();
            let f = |a: f64, b: f64| s.evaluate(a, b).unwrap();
            let d11 = (f(u1 + h, u2) - f(u1, u2) * 2.0 + f(u1 - h, u2)) / (h * h);
            let d22 = (f(u1, u2 + h) - f(u1, u2) * 2.0 + f(u1, u2 - h)) / (h * h);
            let d12 = (f(u1 + h, u2 + h) - f(u1 + h, u2 - h) - f(u1 - h, u2 + h)
                + f(u1 - h, u2 - h))
                / (4.0 * h * h);
            assert!((j.p11 - d11).norm() < 1e-6 * j.p11.norm().max(1.0));
            assert!((j.p12 - d12).norm() < 1e-6 * j.p12.norm().max(1.0));
            assert!((j.p22 - d22).norm() < 1e-6 * j.p22.norm().max(1.0));
        }
    }

    #[test]
    fn parse_accepts_newline_form() {
        let s = SurfaceDefinition::parse("u1\nu2\nu1^2+u2^2\n[-1,1]x[-1,1]").unwrap();
        let p = s.evaluate(0.5, 0.5).unwrap();
        assert!((p[2] - 0.5).abs() < 1e-15);
        assert!(SurfaceDefinition::parse("u1 ; u2 ; [-1,1]x[-1,1]").is_err());
        assert!(matches!(
            SurfaceDefinition::parse("u1 ;  ; 0 ; [-1,1]x[-1,1]"),
            Err(Error::EmptyExpression)
        ));
    }
}
