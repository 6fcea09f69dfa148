//! Forward-mode second-order dual numbers over two variables.
//!
//! A [`Jet2`] carries a value together with its first and second partial
//! derivatives with respect to (u1, u2). Arithmetic on jets propagates
//! derivatives exactly, so surface evaluation yields analytic second
//! partials instead of finite-difference approximations.

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
}

impl Jet2 {
    pub const fn constant(v: f64) -> Self {
        Jet2 {
            v,
            d1: 0.0,
            d2: 0.0,
            d11: 0.0,
            d12: 0.0,
            d22: 0.0,
        }
    }

    /// Seed for the first variable: d(u1)/d(u1) = 1.
    pub const fn var1(v: f64) -> Self {
        Jet2 {
            v,
            d1: 1.0,
            d2: 0.0,
            d11: 0.0,
            d12: 0.0,
            d22: 0.0,
        }
    }

    /// Seed for the second variable: d(u2)/d(u2) = 1.
    pub const fn var2(v: f64) -> Self {
        Jet2 {
            v,
            d1: 0.0,
            d2: 1.0,
            d11: 0.0,
            d12: 0.0,
            d22: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.d1.is_finite()
            && self.d2.is_finite()
            && self.d11.is_finite()
            && self.d12.is_finite()
            && self.d22.is_finite()
    }

    fn is_constant(&self) -> bool {
        self.d1 == 0.0 && self.d2 == 0.0 && self.d11 == 0.0 && self.d12 == 0.0 && self.d22 == 0.0
    }

    /// Composes an outer scalar function given by its value and first two
    /// derivatives at `self.v`.
    fn chain(self, f: f64, fp: f64, fpp: f64) -> Jet2 {
        Jet2 {
            v: f,
            d1: fp * self.d1,
            d2: fp * self.d2,
            d11: fpp * self.d1 * self.d1 + fp * self.d11,
            d12: fpp * self.d1 * self.d2 + fp * self.d12,
            d22: fpp * self.d2 * self.d2 + fp * self.d22,
        }
    }

    fn recip(self) -> Jet2 {
        let g = self.v;
        self.chain(1.0 / g, -1.0 / (g * g), 2.0 / (g * g * g))
    }
}

impl std::ops::Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d11: self.d11 + o.d11,
            d12: self.d12 + o.d12,
            d22: self.d22 + o.d22,
        }
    }
}

impl std::ops::Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
            d11: self.d11 - o.d11,
            d12: self.d12 - o.d12,
            d22: self.d22 - o.d22,
        }
    }
}

impl std::ops::Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
            d11: -self.d11,
            d12: -self.d12,
            d22: -self.d22,
        }
    }
}

impl std::ops::Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + self.v * o.d2,
            d11: self.d11 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d11,
            d12: self.d12 * o.v + self.d1 * o.d2 + self.d2 * o.d1 + self.v * o.d12,
            d22: self.d22 * o.v + 2.0 * self.d2 * o.d2 + self.v * o.d22,
        }
    }
}

impl std::ops::Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

/// Scalar abstraction shared by plain `f64` evaluation and jet evaluation
/// of expression trees.
pub trait ExprScalar:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// Exponentiation. Negative base with a non-integer exponent is an
    /// evaluation error rather than a NaN.
    fn pow(self, e: Self) -> Result<Self>;
}

impl ExprScalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn pow(self, e: Self) -> Result<Self> {
        if self <= 0.0 && e.fract() != 0.0 {
            return Err(Error::Invalid(format!(
                "{self}^{e}: non-positive base with non-integer exponent"
            )));
        }
        Ok(self.powf(e))
    }
}

impl ExprScalar for Jet2 {
    fn constant(c: f64) -> Self {
        Jet2::constant(c)
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn tan(self) -> Self {
        let t = self.v.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }
    fn sinh(self) -> Self {
        self.chain(self.v.sinh(), self.v.cosh(), self.v.sinh())
    }
    fn cosh(self) -> Self {
        self.chain(self.v.cosh(), self.v.sinh(), self.v.cosh())
    }
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let g = self.v;
        self.chain(g.ln(), 1.0 / g, -1.0 / (g * g))
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * r * r))
    }
    fn abs(self) -> Self {
        let s = if self.v > 0.0 {
            1.0
        } else if self.v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.v.abs(), s, 0.0)
    }
    fn pow(self, e: Self) -> Result<Self> {
        if e.is_constant() && e.v.fract() == 0.0 && e.v.abs() < 1e15 {
            // Integer exponent: valid for any base, including negative.
            let n = e.v;
            let f = self.v.powf(n);
            let fp = if n == 0.0 {
                0.0
            } else {
                n * self.v.powf(n - 1.0)
            };
            let fpp = if n == 0.0 || n == 1.0 {
                0.0
            } else {
                n * (n - 1.0) * self.v.powf(n - 2.0)
            };
            Ok(self.chain(f, fp, fpp))
        } else if self.v > 0.0 {
            Ok((e * self.ln()).exp())
        } else {
            Err(Error::Invalid(format!(
                "{}^{}: non-positive base with non-integer exponent",
                self.v, e.v
            )))
        }
    }
}
