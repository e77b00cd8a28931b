//! First-order forward-mode dual numbers.

use core::ops::{Add, Div, Mul, Neg, Sub};

/// `re + eps·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    #[inline]
    pub const fn new(re: f64, eps: f64) -> Self {
        Dual { re, eps }
    }

    #[inline]
    pub const fn constant(re: f64) -> Self {
        Dual { re, eps: 0.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(self.re * rhs.re, self.eps * rhs.re + self.re * rhs.eps)
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, rhs: Dual) -> Dual {
        Dual::new(
            self.re / rhs.re,
            (self.eps * rhs.re - self.re * rhs.eps) / (rhs.re * rhs.re),
        )
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

/// Scalar arithmetic the expression evaluator is generic over.
///
/// Implementations do not check domains; the evaluator inspects
/// [`Real::value`] before calling a partial operation.
pub trait Real:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn value(&self) -> f64;
    /// Whether the infinitesimal part is identically zero.
    fn is_constant(&self) -> bool;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    /// `self^exponent` for a positive base.
    fn powf(self, exponent: Self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn is_constant(&self) -> bool {
        true
    }
    fn sin(self) -> Self {
        libm::sin(self)
    }
    fn cos(self) -> Self {
        libm::cos(self)
    }
    fn exp(self) -> Self {
        libm::exp(self)
    }
    fn ln(self) -> Self {
        libm::log(self)
    }
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    fn powf(self, exponent: Self) -> Self {
        libm::pow(self, exponent)
    }
}

impl Real for Dual {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.re
    }
    #[inline]
    fn is_constant(&self) -> bool {
        self.eps == 0.0
    }
    fn sin(self) -> Self {
        Dual::new(libm::sin(self.re), self.eps * libm::cos(self.re))
    }
    fn cos(self) -> Self {
        Dual::new(libm::cos(self.re), -self.eps * libm::sin(self.re))
    }
    fn exp(self) -> Self {
        let v = libm::exp(self.re);
        Dual::new(v, self.eps * v)
    }
    fn ln(self) -> Self {
        Dual::new(libm::log(self.re), self.eps / self.re)
    }
    fn sqrt(self) -> Self {
        let v = libm::sqrt(self.re);
        Dual::new(v, self.eps / (2.0 * v))
    }
    fn powf(self, exponent: Self) -> Self {
        let v = libm::pow(self.re, exponent.re);
        let mut d = 0.0;
        if self.eps != 0.0 {
            d += exponent.re * libm::pow(self.re, exponent.re - 1.0) * self.eps;
        }
        if exponent.eps != 0.0 {
            d += v * libm::log(self.re) * exponent.eps;
        }
        Dual::new(v, d)
    }
}

/// Integer power by binary exponentiation; only multiplications and, for
/// negative exponents, one final reciprocal.
pub(crate) fn powi<T: Real>(base: T, exponent: i64) -> T {
    let mut acc = T::from_f64(1.0);
    let mut sq = base;
    let mut e = exponent.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * sq;
        }
        e >>= 1;
        if e > 0 {
            sq = sq * sq;
        }
    }
    if exponent < 0 {
        T::from_f64(1.0) / acc
    } else {
        acc
    }
}
