//! Forward-mode dual numbers, nestable for exact second derivatives.
//!
//! [`Scalar`] abstracts the arithmetic an expression tree is evaluated with.
//! Plain `f64` gives values, `Dual<f64>` gives first derivatives and
//! `Dual<Dual<f64>>` gives second derivatives. Domain checks (log of a
//! non-positive value, division by zero, ...) are made on the primal value so
//! every nesting level fails at exactly the same points.

use crate::expr::EvalError;

/// Arithmetic scalar usable for expression evaluation.
///
/// Fallible operations return [`EvalError::Domain`] outside their domain.
/// `pow` has a default implementation as `exp(o · ln self)` so that the
/// primal value is bit-identical across all nesting depths.
pub trait Scalar: Copy + std::fmt::Debug {
    fn from_f64(v: f64) -> Self;
    /// The underlying primal value.
    fn value(&self) -> f64;
    /// True when the value and every derivative component are exactly zero.
    fn is_identically_zero(&self) -> bool;
    /// True when every derivative component is exactly zero.
    fn has_zero_derivative(&self) -> bool;

    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn div(self, o: Self) -> Result<Self, EvalError>;
    /// Integer power; valid for any base except `0^negative`.
    fn powi(self, k: i32) -> Result<Self, EvalError>;
    fn exp(self) -> Self;
    fn ln(self) -> Result<Self, EvalError>;
    fn sqrt(self) -> Result<Self, EvalError>;
    /// Total on values; differentiating through it at exactly zero is a
    /// domain error (the kink has no derivative).
    fn abs(self) -> Result<Self, EvalError>;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn tanh(self) -> Self;

    /// General power with non-constant exponent; requires a positive base.
    fn pow(self, o: Self) -> Result<Self, EvalError> {
        let l = self
            .ln()
            .map_err(|_| EvalError::Domain("non-integer power of a non-positive base"))?;
        Ok(o.mul(l).exp())
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> f64 {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_identically_zero(&self) -> bool {
        *self == 0.0
    }
    fn has_zero_derivative(&self) -> bool {
        true
    }
    fn add(self, o: f64) -> f64 {
        self + o
    }
    fn sub(self, o: f64) -> f64 {
        self - o
    }
    fn mul(self, o: f64) -> f64 {
        self * o
    }
    fn neg(self) -> f64 {
        -self
    }
    fn div(self, o: f64) -> Result<f64, EvalError> {
        if o == 0.0 {
            Err(EvalError::Domain("division by zero"))
        } else {
            Ok(self / o)
        }
    }
    fn powi(self, k: i32) -> Result<f64, EvalError> {
        if k == 0 {
            return Ok(1.0);
        }
        if self == 0.0 && k < 0 {
            return Err(EvalError::Domain("zero raised to a negative power"));
        }
        Ok(f64::powi(self, k))
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn ln(self) -> Result<f64, EvalError> {
        if self <= 0.0 {
            Err(EvalError::Domain("log of a non-positive value"))
        } else {
            Ok(f64::ln(self))
        }
    }
    fn sqrt(self) -> Result<f64, EvalError> {
        if self <= 0.0 {
            Err(EvalError::Domain("sqrt of a non-positive value"))
        } else {
            Ok(f64::sqrt(self))
        }
    }
    fn abs(self) -> Result<f64, EvalError> {
        Ok(f64::abs(self))
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
    fn sinh(self) -> f64 {
        f64::sinh(self)
    }
    fn cosh(self) -> f64 {
        f64::cosh(self)
    }
    fn tanh(self) -> f64 {
        f64::tanh(self)
    }
}

/// Dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    pub fn constant(v: f64) -> Self {
        Dual {
            re: T::from_f64(v),
            eps: T::from_f64(0.0),
        }
    }

    /// Seed with derivative 1: the independent variable of this level.
    pub fn seeded(v: T) -> Self {
        Dual {
            re: v,
            eps: T::from_f64(1.0),
        }
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn is_identically_zero(&self) -> bool {
        self.re.is_identically_zero() && self.eps.is_identically_zero()
    }
    fn has_zero_derivative(&self) -> bool {
        self.re.has_zero_derivative() && self.eps.is_identically_zero()
    }

    fn add(self, o: Self) -> Self {
        Dual::new(self.re.add(o.re), self.eps.add(o.eps))
    }
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re.sub(o.re), self.eps.sub(o.eps))
    }
    fn mul(self, o: Self) -> Self {
        Dual::new(
            self.re.mul(o.re),
            self.re.mul(o.eps).add(self.eps.mul(o.re)),
        )
    }
    fn neg(self) -> Self {
        Dual::new(self.re.neg(), self.eps.neg())
    }
    fn div(self, o: Self) -> Result<Self, EvalError> {
        if o.value() == 0.0 {
            return Err(EvalError::Domain("division by zero"));
        }
        let re = self.re.div(o.re)?;
        let num = self.eps.mul(o.re).sub(self.re.mul(o.eps));
        let den = o.re.mul(o.re);
        Ok(Dual::new(re, num.div(den)?))
    }
    fn powi(self, k: i32) -> Result<Self, EvalError> {
        if k == 0 {
            return Ok(Dual::constant(1.0));
        }
        if self.value() == 0.0 && k < 0 {
            return Err(EvalError::Domain("zero raised to a negative power"));
        }
        let re = self.re.powi(k)?;
        // d(u^k) = k u^(k-1) u'; k-1 >= 0 whenever the base may vanish.
        let slope = T::from_f64(k as f64).mul(self.re.powi(k - 1)?);
        Ok(Dual::new(re, self.eps.mul(slope)))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps.mul(e))
    }
    fn ln(self) -> Result<Self, EvalError> {
        let re = self.re.ln()?;
        Ok(Dual::new(re, self.eps.div(self.re)?))
    }
    fn sqrt(self) -> Result<Self, EvalError> {
        let s = self.re.sqrt()?;
        let two_s = T::from_f64(2.0).mul(s);
        Ok(Dual::new(s, self.eps.div(two_s)?))
    }
    fn abs(self) -> Result<Self, EvalError> {
        if self.value() == 0.0 {
            return Err(EvalError::Domain("derivative of abs at zero"));
        }
        let sign = T::from_f64(if self.value() > 0.0 { 1.0 } else { -1.0 });
        Ok(Dual::new(self.re.abs()?, self.eps.mul(sign)))
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps.mul(self.re.cos()))
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), self.eps.mul(self.re.sin()).neg())
    }
    fn sinh(self) -> Self {
        Dual::new(self.re.sinh(), self.eps.mul(self.re.cosh()))
    }
    fn cosh(self) -> Self {
        Dual::new(self.re.cosh(), self.eps.mul(self.re.sinh()))
    }
    fn tanh(self) -> Self {
        let th = self.re.tanh();
        let one = T::from_f64(1.0);
        Dual::new(th, self.eps.mul(one.sub(th.mul(th))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D1 = Dual<f64>;
    type D2 = Dual<Dual<f64>>;

    #[test]
    fn first_derivative_of_product() {
        // d/dx (x * x) at 3 = 6
        let x = D1::seeded(3.0);
        let y = x.mul(x);
        assert_eq!(y.re, 9.0);
        assert_eq!(y.eps, 6.0);
    }

    #[test]
    fn second_derivative_via_nesting() {
        // d2/dx2 of x^3 at 2 = 12
        let inner = Dual::<f64>::seeded(2.0);
        let x = D2::new(inner, Dual::constant(1.0));
        let y = x.mul(x).mul(x);
        assert_eq!(y.re.re, 8.0);
        assert_eq!(y.re.eps, 12.0);
        assert_eq!(y.eps.re, 12.0);
        assert_eq!(y.eps.eps, 12.0);
    }

    #[test]
    fn abs_derivative_at_zero_is_domain_error() {
        let x = D1::seeded(0.0);
        assert!(matches!(x.abs(), Err(EvalError::Domain(_))));
        // Plain f64 abs is total.
        assert_eq!(Scalar::abs(0.0_f64).unwrap(), 0.0);
    }

    #[test]
    fn integer_power_of_negative_base() {
        let x = D1::seeded(-2.0);
        let y = x.powi(2).unwrap();
        assert_eq!(y.re, 4.0);
        assert_eq!(y.eps, -4.0);
    }

    #[test]
    fn zero_to_negative_power_fails() {
        assert!(Scalar::powi(0.0_f64, -1).is_err());
        assert!(D1::seeded(0.0).powi(-2).is_err());
    }

    #[test]
    fn pow_requires_positive_base() {
        let x = D1::seeded(-1.0);
        let e = D1::constant(0.5);
        assert!(x.pow(e).is_err());
    }
}
