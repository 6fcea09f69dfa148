//! Geometry-preserving refinement: knot insertion (Boehm) and degree
//! elevation, plus Bezier segment extraction for export.

use super::{fit::fit_least_squares, BSplineManifold2D, BSplineSpace, KnotVector};
use crate::error::{Error, Result};
use nalgebra::Vector2;

/// Boehm insertion coefficients for one knot `u`: affected control index
/// range is k-p+1 ..= k with blending factors `alphas`.
fn insertion_coeffs(space: &BSplineSpace, u: f64) -> Result<(usize, Vec<f64>, KnotVector)> {
    let (tmin, tmax) = space.range();
    if u <= tmin || u >= tmax {
        if u < tmin || u > tmax {
            return Err(Error::KnotOutOfRange(u));
        }
        return Err(Error::MultiplicityOverflow(u));
    }
    let p = space.degree();
    if space.knots().multiplicity(u) + 1 > p + 1 {
        return Err(Error::MultiplicityOverflow(u));
    }
    let k = space.find_span(u)?;
    let knots = space.knots().as_slice();
    let mut alphas = Vec::with_capacity(p);
    for i in (k + 1 - p)..=k {
        let den = knots[i + p] - knots[i];
        alphas.push(if den > 0.0 { (u - knots[i]) / den } else { 0.0 });
    }
    let mut new_knots = knots.to_vec();
    new_knots.insert(k + 1, u);
    Ok((k, alphas, KnotVector(new_knots)))
}

fn insert_dir1(m: &BSplineManifold2D, u: f64) -> Result<BSplineManifold2D> {
    let (k, alphas, new_knots) = insertion_coeffs(&m.space1, u)?;
    let p = m.space1.degree();
    let (n1, n2) = (m.n1(), m.n2());
    let mut ctrl = vec![Vector2::zeros(); (n1 + 1) * n2];
    for i in 0..=n1 {
        for j in 0..n2 {
            let q = if i <= k - p {
                m.control[i * n2 + j]
            } else if i <= k {
                let a = alphas[i - (k + 1 - p)];
                m.control[i * n2 + j] * a + m.control[(i - 1) * n2 + j] * (1.0 - a)
            } else {
                m.control[(i - 1) * n2 + j]
            };
            ctrl[i * n2 + j] = q;
        }
    }
    BSplineManifold2D::new(
        BSplineSpace::new(p, new_knots)?,
        m.space2.clone(),
        ctrl,
    )
}

fn insert_dir2(m: &BSplineManifold2D, u: f64) -> Result<BSplineManifold2D> {
    let (k, alphas, new_knots) = insertion_coeffs(&m.space2, u)?;
    let p = m.space2.degree();
    let (n1, n2) = (m.n1(), m.n2());
    let mut ctrl = vec![Vector2::zeros(); n1 * (n2 + 1)];
    for i in 0..n1 {
        for j in 0..=n2 {
            let q = if j <= k - p {
                m.control[i * n2 + j]
            } else if j <= k {
                let a = alphas[j - (k + 1 - p)];
                m.control[i * n2 + j] * a + m.control[i * n2 + j - 1] * (1.0 - a)
            } else {
                m.control[i * n2 + j - 1]
            };
            ctrl[i * (n2 + 1) + j] = q;
        }
    }
    BSplineManifold2D::new(
        m.space1.clone(),
        BSplineSpace::new(p, new_knots)?,
        ctrl,
    )
}

/// Knot vector of the same breakpoints with every multiplicity increased by
/// `raise` and the degree raised accordingly.
fn elevated_space(space: &BSplineSpace, raise: usize) -> Result<BSplineSpace> {
    if raise == 0 {
        return Ok(space.clone());
    }
    let mut knots = Vec::new();
    let src = space.knots().as_slice();
    let mut i = 0;
    while i < src.len() {
        let u = src[i];
        let mult = space.knots().multiplicity(u);
        knots.extend(std::iter::repeat(u).take(mult + raise));
        i += mult;
    }
    BSplineSpace::new(space.degree() + raise, KnotVector::new(knots)?)
}

impl BSplineManifold2D {
    /// Inserts the given knots (Boehm's algorithm); the returned manifold
    /// evaluates identically.
    pub fn h_refine(&self, new_knots1: &[f64], new_knots2: &[f64]) -> Result<BSplineManifold2D> {
        let mut m = self.clone();
        for &u in new_knots1 {
            m = insert_dir1(&m, u)?;
        }
        for &u in new_knots2 {
            m = insert_dir2(&m, u)?;
        }
        Ok(m)
    }

    /// Raises the degrees by (raise1, raise2), preserving geometry. The
    /// elevated space shares the breakpoints with every knot multiplicity
    /// increased by the raise, and the control net is the L2 projection of
    /// the current geometry onto it (exact up to roundoff, since the
    /// original spline lies in the elevated space).
    pub fn p_refine(&self, raise1: usize, raise2: usize) -> Result<BSplineManifold2D> {
        if raise1 == 0 && raise2 == 0 {
            return Ok(self.clone());
        }
        let s1 = elevated_space(&self.space1, raise1)?;
        let s2 = elevated_space(&self.space2, raise2)?;
        fit_least_squares(&s1, &s2, &|u1, u2| {
            self.evaluate(u1, u2)
                .expect("p_refine target evaluation stays in range")
        }, None)
    }

    /// Midpoints of every nonempty u1 span (one whole-direction bisection).
    pub fn bisection_knots1(&self) -> Vec<f64> {
        self.space1
            .spans()
            .iter()
            .map(|&(a, b)| 0.5 * (a + b))
            .collect()
    }
}

/// Cubic Bezier segments of a univariate clamped B-spline of degree 1..=3,
/// obtained by knot insertion to full multiplicity; degree 1 and 2 segments
/// are elevated to cubic Bernstein form.
pub(crate) fn cubic_bezier_segments(
    space: &BSplineSpace,
    control: &[Vector2<f64>],
) -> Result<Vec<[Vector2<f64>; 4]>> {
    let p = space.degree();
    if p == 0 || p > 3 {
        return Err(Error::UnsupportedDegree(p, p));
    }
    // Insert interior knots up to multiplicity p.
    let mut sp = space.clone();
    let mut ctrl = control.to_vec();
    loop {
        let mut pending = None;
        let knots = sp.knots().as_slice();
        let (tmin, tmax) = sp.range();
        for &u in knots {
            if u > tmin && u < tmax && sp.knots().multiplicity(u) < p {
                pending = Some(u);
                break;
            }
        }
        let Some(u) = pending else { break };
        let (k, alphas, new_knots) = insertion_coeffs(&sp, u)?;
        let n = ctrl.len();
        let mut next = vec![Vector2::zeros(); n + 1];
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = if i + p <= k {
                ctrl[i]
            } else if i <= k {
                let a = alphas[i - (k + 1 - p)];
                ctrl[i] * a + ctrl[i - 1] * (1.0 - a)
            } else {
                ctrl[i - 1]
            };
        }
        ctrl = next;
        sp = BSplineSpace::new(p, new_knots)?;
    }
    // After full multiplicity: segment s covers control[s*p ..= s*p + p].
    let nseg = sp.spans().len();
    let mut out = Vec::with_capacity(nseg);
    for s in 0..nseg {
        let seg = &ctrl[s * p..s * p + p + 1];
        out.push(match p {
            1 => {
                let (a, b) = (seg[0], seg[1]);
                [
                    a,
                    a + (b - a) / 3.0,
                    a + (b - a) * (2.0 / 3.0),
                    b,
                ]
            }
            2 => {
                let (a, b, c) = (seg[0], seg[1], seg[2]);
                [
                    a,
                    a + (b - a) * (2.0 / 3.0),
                    c + (b - c) * (2.0 / 3.0),
                    c,
                ]
            }
            _ => [seg[0], seg[1], seg[2], seg[3]],
        });
    }
    Ok(out)
}
