//! Non-uniform clamped B-spline spaces and tensor-product manifolds
//! (u1, u2) -> R^2, with geometry-preserving refinement and least-squares
//! fitting.
//!
//! Knot vectors are open (clamped): end knots carry multiplicity p + 1.
//! Evaluation at the right end uses the right-limit convention so the
//! parameter domain is closed.

mod fit;
mod refine;

pub use fit::fit_least_squares;
pub(crate) use refine::cubic_bezier_segments;

use crate::error::{Error, Result};
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

/// Nondecreasing knot sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector(Vec<f64>);

impl KnotVector {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidKnots("need at least two knots".into()));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidKnots("knots must be nondecreasing".into()));
        }
        Ok(KnotVector(knots))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        *self.0.last().unwrap()
    }

    /// Number of knots equal to `u` (exact comparison; knot values are
    /// taken as exact).
    pub fn multiplicity(&self, u: f64) -> usize {
        self.0.iter().filter(|&&k| k == u).count()
    }
}

/// Univariate B-spline space of a given degree over a clamped knot vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BSplineSpace {
    degree: usize,
    knots: KnotVector,
}

impl BSplineSpace {
    pub fn new(degree: usize, knots: KnotVector) -> Result<Self> {
        let m = knots.len();
        if m < 2 * (degree + 1) {
            return Err(Error::InvalidKnots(format!(
                "degree {degree} needs at least {} knots, got {m}",
                2 * (degree + 1)
            )));
        }
        let k = knots.as_slice();
        let (tmin, tmax) = (k[0], k[m - 1]);
        if tmin >= tmax {
            return Err(Error::InvalidKnots("zero-length knot range".into()));
        }
        if k[degree] != tmin || k[m - 1 - degree] != tmax {
            return Err(Error::InvalidKnots(
                "end knots must have multiplicity degree + 1 (clamped)".into(),
            ));
        }
        if knots.multiplicity(tmin) != degree + 1 || knots.multiplicity(tmax) != degree + 1 {
            return Err(Error::InvalidKnots(
                "end knots must have multiplicity exactly degree + 1".into(),
            ));
        }
        // Interior multiplicities at most degree + 1.
        let mut i = degree + 1;
        while i < m - degree - 1 {
            let mult = knots.multiplicity(k[i]);
            if mult > degree + 1 {
                return Err(Error::InvalidKnots(format!(
                    "interior knot {} has multiplicity {mult} > degree + 1",
                    k[i]
                )));
            }
            i += mult;
        }
        Ok(BSplineSpace { degree, knots })
    }

    /// Clamped space with `spans` uniform spans on [a, b].
    pub fn open_uniform(degree: usize, a: f64, b: f64, spans: usize) -> Self {
        assert!(spans >= 1 && b > a);
        let mut knots = vec![a; degree + 1];
        for i in 1..spans {
            knots.push(a + (b - a) * i as f64 / spans as f64);
        }
        knots.extend(std::iter::repeat(b).take(degree + 1));
        BSplineSpace {
            degree,
            knots: KnotVector(knots),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    /// Space dimension n = len(knots) - degree - 1.
    pub fn dim(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots.first(), self.knots.last())
    }

    pub fn contains(&self, u: f64) -> bool {
        u >= self.knots.first() && u <= self.knots.last()
    }

    /// Clamps a parameter into the knot range, tolerating 1e-10 relative
    /// overshoot from accumulated roundoff in grid generation.
    pub fn clamp_param(&self, u: f64) -> Result<f64> {
        let (a, b) = self.range();
        let tol = 1e-10 * (b - a);
        if u < a - tol || u > b + tol {
            return Err(Error::ParameterOutOfRange(u));
        }
        Ok(u.clamp(a, b))
    }

    /// Distinct nonempty spans as (start, end) pairs.
    pub fn spans(&self) -> Vec<(f64, f64)> {
        let k = self.knots.as_slice();
        let mut out = Vec::new();
        for w in k.windows(2) {
            if w[1] > w[0] {
                out.push((w[0], w[1]));
            }
        }
        out
    }

    /// Index of the span containing `u`: largest valid span index s with
    /// knots[s] <= u, using the right-limit convention at the right end.
    pub fn find_span(&self, u: f64) -> Result<usize> {
        let u = self.clamp_param(u)?;
        let k = self.knots.as_slice();
        let n = self.dim();
        let raw = k.partition_point(|&t| t <= u);
        Ok(raw.saturating_sub(1).clamp(self.degree, n - 1))
    }

    /// Single basis function value (order 0) or first derivative (order 1)
    /// by the Cox-de Boor recursion.
    pub fn basis(&self, i: usize, u: f64, order: usize) -> Result<f64> {
        let n = self.dim();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, dim: n });
        }
        let u = self.clamp_param(u)?;
        let k = self.knots.as_slice();
        let p = self.degree;
        match order {
            0 => Ok(cox_de_boor(k, i, p, u)),
            1 => {
                if p == 0 {
                    return Ok(0.0);
                }
                let pf = p as f64;
                let mut d = 0.0;
                let den = k[i + p] - k[i];
                if den > 0.0 {
                    d += pf / den * cox_de_boor(k, i, p - 1, u);
                }
                let den = k[i + p + 1] - k[i + 1];
                if den > 0.0 {
                    d -= pf / den * cox_de_boor(k, i + 1, p - 1, u);
                }
                Ok(d)
            }
            _ => Err(Error::Invalid(format!(
                "basis derivative order {order} not supported"
            ))),
        }
    }

    /// Values of the degree-`p` basis functions active on `span`
    /// (indices span - p ..= span), by the triangular scheme.
    pub fn basis_row(&self, span: usize, u: f64) -> Vec<f64> {
        basis_row_of_degree(self.knots.as_slice(), span, u, self.degree)
    }

    /// Values and first derivatives of the active basis functions on `span`.
    pub fn basis_row_with_derivs(&self, span: usize, u: f64) -> (Vec<f64>, Vec<f64>) {
        let p = self.degree;
        let k = self.knots.as_slice();
        let vals = basis_row_of_degree(k, span, u, p);
        let mut ders = vec![0.0; p + 1];
        if p > 0 {
            // Degree p-1 row on the same span covers indices span-p+1..=span.
            let low = basis_row_of_degree(k, span, u, p - 1);
            let pf = p as f64;
            for a in 0..=p {
                let i = span - p + a;
                let mut d = 0.0;
                if a >= 1 {
                    let den = k[i + p] - k[i];
                    if den > 0.0 {
                        d += pf / den * low[a - 1];
                    }
                }
                if a < p {
                    let den = k[i + p + 1] - k[i + 1];
                    if den > 0.0 {
                        d -= pf / den * low[a];
                    }
                }
                ders[a] = d;
            }
        }
        (vals, ders)
    }
}

/// Naive Cox-de Boor recursion for a single function; right-limit at the
/// global right end so the closed domain evaluates cleanly.
fn cox_de_boor(k: &[f64], i: usize, p: usize, u: f64) -> f64 {
    let tmax = k[k.len() - 1];
    if p == 0 {
        if k[i] <= u && u < k[i + 1] {
            return 1.0;
        }
        if u == tmax && k[i + 1] == tmax && k[i] < tmax {
            return 1.0;
        }
        return 0.0;
    }
    let mut v = 0.0;
    let den = k[i + p] - k[i];
    if den > 0.0 {
        v += (u - k[i]) / den * cox_de_boor(k, i, p - 1, u);
    }
    let den = k[i + p + 1] - k[i + 1];
    if den > 0.0 {
        v += (k[i + p + 1] - u) / den * cox_de_boor(k, i + 1, p - 1, u);
    }
    v
}

fn basis_row_of_degree(knots: &[f64], span: usize, u: f64, p: usize) -> Vec<f64> {
    let mut n = vec![0.0; p + 1];
    n[0] = 1.0;
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let den = right[r + 1] + left[j - r];
            let temp = if den != 0.0 { n[r] / den } else { 0.0 };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// Tensor-product B-spline map (u1, u2) -> R^2. Control points are stored
/// row-major with the u2 index fastest: `control[i1 * n2 + i2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ManifoldRepr", into = "ManifoldRepr")]
pub struct BSplineManifold2D {
    space1: BSplineSpace,
    space2: BSplineSpace,
    control: Vec<Vector2<f64>>,
}

/// Checkpoint JSON schema for a manifold.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct ManifoldRepr {
    degree1: usize,
    degree2: usize,
    knots1: Vec<f64>,
    knots2: Vec<f64>,
    /// Row-major (u2 fastest) [x, y] pairs.
    control: Vec<[f64; 2]>,
}

impl From<BSplineManifold2D> for ManifoldRepr {
    fn from(m: BSplineManifold2D) -> Self {
        ManifoldRepr {
            degree1: m.space1.degree(),
            degree2: m.space2.degree(),
            knots1: m.space1.knots().as_slice().to_vec(),
            knots2: m.space2.knots().as_slice().to_vec(),
            control: m.control.iter().map(|p| [p.x, p.y]).collect(),
        }
    }
}

impl TryFrom<ManifoldRepr> for BSplineManifold2D {
    type Error = Error;
    fn try_from(r: ManifoldRepr) -> Result<Self> {
        BSplineManifold2D::new(
            BSplineSpace::new(r.degree1, KnotVector::new(r.knots1)?)?,
            BSplineSpace::new(r.degree2, KnotVector::new(r.knots2)?)?,
            r.control.iter().map(|p| Vector2::new(p[0], p[1])).collect(),
        )
    }
}

impl BSplineManifold2D {
    pub fn new(
        space1: BSplineSpace,
        space2: BSplineSpace,
        control: Vec<Vector2<f64>>,
    ) -> Result<Self> {
        let (n1, n2) = (space1.dim(), space2.dim());
        if control.len() != n1 * n2 {
            return Err(Error::ControlGridMismatch {
                got_rows: control.len() / n2.max(1),
                got_cols: n2.min(control.len()),
                want_rows: n1,
                want_cols: n2,
            });
        }
        Ok(BSplineManifold2D {
            space1,
            space2,
            control,
        })
    }

    pub fn space1(&self) -> &BSplineSpace {
        &self.space1
    }
    pub fn space2(&self) -> &BSplineSpace {
        &self.space2
    }
    pub fn n1(&self) -> usize {
        self.space1.dim()
    }
    pub fn n2(&self) -> usize {
        self.space2.dim()
    }
    pub fn degrees(&self) -> (usize, usize) {
        (self.space1.degree(), self.space2.degree())
    }

    pub fn control(&self) -> &[Vector2<f64>] {
        &self.control
    }

    /// Mutable control-point access for solver updates; the grid shape is
    /// fixed by the spaces.
    pub fn control_mut(&mut self) -> &mut [Vector2<f64>] {
        &mut self.control
    }

    pub fn control_at(&self, i1: usize, i2: usize) -> Vector2<f64> {
        self.control[i1 * self.n2() + i2]
    }

    pub fn evaluate(&self, u1: f64, u2: f64) -> Result<Vector2<f64>> {
        let u1 = self.space1.clamp_param(u1)?;
        let u2 = self.space2.clamp_param(u2)?;
        let s1 = self.space1.find_span(u1)?;
        let s2 = self.space2.find_span(u2)?;
        let r1 = self.space1.basis_row(s1, u1);
        let r2 = self.space2.basis_row(s2, u2);
        let (p1, p2) = (self.space1.degree(), self.space2.degree());
        let n2 = self.n2();
        let mut out = Vector2::zeros();
        for (a, &b1) in r1.iter().enumerate() {
            let i1 = s1 - p1 + a;
            for (b, &b2) in r2.iter().enumerate() {
                let i2 = s2 - p2 + b;
                out += self.control[i1 * n2 + i2] * (b1 * b2);
            }
        }
        Ok(out)
    }

    /// Position and exact first partials of the piecewise polynomial.
    pub fn evaluate_jet1(&self, u1: f64, u2: f64) -> Result<(Vector2<f64>, Vector2<f64>, Vector2<f64>)> {
        let u1 = self.space1.clamp_param(u1)?;
        let u2 = self.space2.clamp_param(u2)?;
        let s1 = self.space1.find_span(u1)?;
        let s2 = self.space2.find_span(u2)?;
        let (v1, d1) = self.space1.basis_row_with_derivs(s1, u1);
        let (v2, d2) = self.space2.basis_row_with_derivs(s2, u2);
        let (p1, p2) = (self.space1.degree(), self.space2.degree());
        let n2 = self.n2();
        let mut p = Vector2::zeros();
        let mut t1 = Vector2::zeros();
        let mut t2 = Vector2::zeros();
        for a in 0..=p1 {
            let i1 = s1 - p1 + a;
            for b in 0..=p2 {
                let i2 = s2 - p2 + b;
                let c = self.control[i1 * n2 + i2];
                p += c * (v1[a] * v2[b]);
                t1 += c * (d1[a] * v2[b]);
                t2 += c * (v1[a] * d2[b]);
            }
        }
        Ok((p, t1, t2))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifold serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("manifold JSON: {e}")))
    }
}
