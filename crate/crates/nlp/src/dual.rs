//! Forward-mode dual numbers.
//!
//! A [`Dual`] carries a value and a single directional derivative. All
//! problem callbacks are written against `Dual`, so one evaluation with a
//! seeded direction yields one column of a Jacobian. Plain evaluation seeds
//! every derivative with zero.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    #[inline]
    pub const fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }

    #[inline]
    pub const fn constant(re: f64) -> Self {
        Self { re, eps: 0.0 }
    }

    #[inline]
    pub const fn variable(re: f64) -> Self {
        Self { re, eps: 1.0 }
    }

    #[inline]
    pub fn sin(self) -> Self {
        Self::new(self.re.sin(), self.eps * self.re.cos())
    }

    #[inline]
    pub fn cos(self) -> Self {
        Self::new(self.re.cos(), -self.eps * self.re.sin())
    }

    #[inline]
    pub fn tan(self) -> Self {
        let t = self.re.tan();
        Self::new(t, self.eps * (1.0 + t * t))
    }

    #[inline]
    pub fn exp(self) -> Self {
        let e = self.re.exp();
        Self::new(e, self.eps * e)
    }

    #[inline]
    pub fn ln(self) -> Self {
        Self::new(self.re.ln(), self.eps / self.re)
    }

    #[inline]
    pub fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Self::new(s, self.eps * 0.5 / s)
    }

    #[inline]
    pub fn powi(self, k: i32) -> Self {
        match k {
            0 => Self::constant(1.0),
            1 => self,
            _ => Self::new(self.re.powi(k), self.eps * k as f64 * self.re.powi(k - 1)),
        }
    }

    #[inline]
    pub fn powf(self, k: f64) -> Self {
        Self::new(self.re.powf(k), self.eps * k * self.re.powf(k - 1.0))
    }

    /// Subgradient at zero is taken as zero.
    #[inline]
    pub fn abs(self) -> Self {
        if self.re > 0.0 {
            self
        } else if self.re < 0.0 {
            -self
        } else {
            Self::new(0.0, 0.0)
        }
    }

    #[inline]
    pub fn square(self) -> Self {
        self * self
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }
}

impl From<f64> for Dual {
    fn from(re: f64) -> Self {
        Self::constant(re)
    }
}

impl fmt::Display for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε", self.re, self.eps)
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
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
        let inv = 1.0 / rhs.re;
        Dual::new(self.re * inv, (self.eps * rhs.re - self.re * rhs.eps) * inv * inv)
    }
}

macro_rules! scalar_ops {
    ($($trait:ident :: $method:ident),*) => {$(
        impl $trait<f64> for Dual {
            type Output = Dual;
            #[inline]
            fn $method(self, rhs: f64) -> Dual {
                $trait::$method(self, Dual::constant(rhs))
            }
        }
        impl $trait<Dual> for f64 {
            type Output = Dual;
            #[inline]
            fn $method(self, rhs: Dual) -> Dual {
                $trait::$method(Dual::constant(self), rhs)
            }
        }
    )*};
}

scalar_ops!(Add::add, Sub::sub, Mul::mul, Div::div);

macro_rules! assign_ops {
    ($($trait:ident :: $method:ident => $op:tt),*) => {$(
        impl $trait for Dual {
            #[inline]
            fn $method(&mut self, rhs: Dual) {
                *self = *self $op rhs;
            }
        }
        impl $trait<f64> for Dual {
            #[inline]
            fn $method(&mut self, rhs: f64) {
                *self = *self $op rhs;
            }
        }
    )*};
}

assign_ops!(AddAssign::add_assign => +, SubAssign::sub_assign => -, MulAssign::mul_assign => *, DivAssign::div_assign => /);

impl Sum for Dual {
    fn sum<I: Iterator<Item = Dual>>(iter: I) -> Dual {
        iter.fold(Dual::constant(0.0), |acc, x| acc + x)
    }
}

/// Lift a slice of values into constant duals.
pub fn constants(values: &[f64]) -> Vec<Dual> {
    values.iter().map(|&v| Dual::constant(v)).collect()
}

/// Real parts of a dual slice.
pub fn values(duals: &[Dual]) -> Vec<f64> {
    duals.iter().map(|d| d.re).collect()
}
