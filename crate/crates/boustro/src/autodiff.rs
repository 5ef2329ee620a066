//! Minimal forward-mode automatic differentiation.
//!
//! The soft scoring pipeline needs exact partials with respect to exactly two
//! parameters (transect angle, x-offset), so the dual number carries a fixed
//! two-slot tangent instead of a generic tape. Every operation propagates
//! both slots at machine precision; "exact" here means exact derivatives of
//! the implemented composition, quadrature weights included.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// The arithmetic the scoring pipeline is generic over: plain `f64` for
/// value-only evaluation, [`Dual2`] for value plus two partials.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// The primal value, derivative information dropped.
    fn value(self) -> f64;
    /// Both tangent slots; zero for scalars that carry no derivatives.
    fn tangents(self) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

/// Dual number with two independent tangent slots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual2 {
    pub re: f64,
    pub dx: [f64; 2],
}

impl Dual2 {
    pub const fn constant(v: f64) -> Self {
        Dual2 { re: v, dx: [0.0, 0.0] }
    }

    /// Seeds an independent variable in tangent slot `slot` (0 or 1).
    pub fn var(v: f64, slot: usize) -> Self {
        let mut dx = [0.0, 0.0];
        dx[slot] = 1.0;
        Dual2 { re: v, dx }
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    fn add(self, o: Dual2) -> Dual2 {
        Dual2 {
            re: self.re + o.re,
            dx: [self.dx[0] + o.dx[0], self.dx[1] + o.dx[1]],
        }
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, o: Dual2) -> Dual2 {
        Dual2 {
            re: self.re - o.re,
            dx: [self.dx[0] - o.dx[0], self.dx[1] - o.dx[1]],
        }
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, o: Dual2) -> Dual2 {
        Dual2 {
            re: self.re * o.re,
            dx: [
                self.re * o.dx[0] + self.dx[0] * o.re,
                self.re * o.dx[1] + self.dx[1] * o.re,
            ],
        }
    }
}

impl Div for Dual2 {
    type Output = Dual2;
    fn div(self, o: Dual2) -> Dual2 {
        // re is a single rounded division so the primal track stays
        // bit-identical to a plain f64 evaluation of the same expression.
        let re = self.re / o.re;
        Dual2 {
            re,
            dx: [
                (self.dx[0] - re * o.dx[0]) / o.re,
                (self.dx[1] - re * o.dx[1]) / o.re,
            ],
        }
    }
}

impl Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        Dual2 {
            re: -self.re,
            dx: [-self.dx[0], -self.dx[1]],
        }
    }
}

impl Scalar for Dual2 {
    fn from_f64(v: f64) -> Self {
        Dual2::constant(v)
    }

    fn value(self) -> f64 {
        self.re
    }

    fn tangents(self) -> [f64; 2] {
        self.dx
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual2 {
            re: e,
            dx: [self.dx[0] * e, self.dx[1] * e],
        }
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        // Zero subgradient at 0: the soft variance is exactly 0 at symmetric
        // configurations and 1/(2*sqrt(0)) would poison the whole gradient
        // with NaN for a quantity whose true one-sided derivative is 0.
        let d = if s > 0.0 { 0.5 / s } else { 0.0 };
        Dual2 {
            re: s,
            dx: [self.dx[0] * d, self.dx[1] * d],
        }
    }

    fn sin(self) -> Self {
        let (s, c) = self.re.sin_cos();
        Dual2 {
            re: s,
            dx: [self.dx[0] * c, self.dx[1] * c],
        }
    }

    fn cos(self) -> Self {
        let (s, c) = self.re.sin_cos();
        Dual2 {
            re: c,
            dx: [-self.dx[0] * s, -self.dx[1] * s],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual2::var(1.7, 0);
        let y = Dual2::var(-0.4, 1);
        let f = x * y + x / y;
        assert!((f.re - (1.7 * -0.4 + 1.7 / -0.4)).abs() < 1e-15);
        // df/dx = y + 1/y, df/dy = x - x/y^2
        assert!((f.dx[0] - (-0.4 + 1.0 / -0.4)).abs() < 1e-12);
        assert!((f.dx[1] - (1.7 - 1.7 / 0.16)).abs() < 1e-12);
    }

    #[test]
    fn transcendental_chain_matches_finite_differences() {
        let g = |x: f64| ((x.sin() * 3.0).exp() + x.cos()).sqrt();
        let x0 = 0.83;
        let x = Dual2::var(x0, 1);
        let three = Dual2::constant(3.0);
        let d = ((x.sin() * three).exp() + x.cos()).sqrt();
        assert!((d.re - g(x0)).abs() < 1e-15);
        assert!((d.dx[1] - fd(g, x0)).abs() < 1e-8);
        assert_eq!(d.dx[0], 0.0);
    }

    #[test]
    fn sqrt_at_zero_keeps_gradient_finite() {
        let x = Dual2::var(0.0, 0);
        let r = x.sqrt();
        assert_eq!(r.re, 0.0);
        assert_eq!(r.dx, [0.0, 0.0]);
    }

    #[test]
    fn slots_stay_independent() {
        let x = Dual2::var(2.0, 0);
        let y = Dual2::var(5.0, 1);
        let f = x * x * y;
        assert_eq!(f.dx[0], 2.0 * 2.0 * 5.0);
        assert_eq!(f.dx[1], 4.0);
    }
}
