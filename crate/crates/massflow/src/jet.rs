//! Second-order jets: value, coordinate gradient and coordinate Hessian.
//!
//! `Jet2` doubles as the pointwise bundle of a scalar field (the value and its
//! first two coordinate partials) and as a forward-mode arithmetic type: every
//! closed-form metric component and conformal factor in the crate is written
//! as a `Jet2` expression, so its derivatives are exact up to rounding — no
//! differencing enters the analytic path.

use crate::linalg::{Mat3, Vec3};
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec3,
    pub hess: Mat3,
}

impl Jet2 {
    pub fn constant(value: f64) -> Self {
        Jet2 {
            value,
            grad: [0.0; 3],
            hess: [[0.0; 3]; 3],
        }
    }

    /// Jet of the coordinate function x_axis at a point.
    pub fn coordinate(p: &[f64; 3], axis: usize) -> Self {
        let mut grad = [0.0; 3];
        grad[axis] = 1.0;
        Jet2 {
            value: p[axis],
            grad,
            hess: [[0.0; 3]; 3],
        }
    }

    /// Jet of r = |x|; requires r > 0.
    pub fn radius(p: &[f64; 3]) -> Self {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let n = [p[0] / r, p[1] / r, p[2] / r];
        let mut hess = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                hess[i][j] = (delta - n[i] * n[j]) / r;
            }
        }
        Jet2 {
            value: r,
            grad: n,
            hess,
        }
    }

    /// Compose with a scalar function given its value and first two
    /// derivatives at `self.value`.
    pub fn chain(&self, f: f64, df: f64, ddf: f64) -> Self {
        let mut hess = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                hess[i][j] = df * self.hess[i][j] + ddf * self.grad[i] * self.grad[j];
            }
        }
        Jet2 {
            value: f,
            grad: [df * self.grad[0], df * self.grad[1], df * self.grad[2]],
            hess,
        }
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    /// Real power; requires a positive base.
    pub fn powf(&self, e: f64) -> Self {
        if e == 0.0 {
            return Jet2::constant(1.0);
        }
        if e == 1.0 {
            return *self;
        }
        let v = self.value;
        self.chain(v.powf(e), e * v.powf(e - 1.0), e * (e - 1.0) * v.powf(e - 2.0))
    }

    pub fn powi(&self, n: i32) -> Self {
        self.powf(n as f64)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut hess = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                hess[i][j] = s * self.hess[i][j];
            }
        }
        Jet2 {
            value: s * self.value,
            grad: [s * self.grad[0], s * self.grad[1], s * self.grad[2]],
            hess,
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        let mut out = self;
        out.value += rhs.value;
        for i in 0..3 {
            out.grad[i] += rhs.grad[i];
            for j in 0..3 {
                out.hess[i][j] += rhs.hess[i][j];
            }
        }
        out
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        self + (-rhs)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let mut hess = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                hess[i][j] = self.value * rhs.hess[i][j]
                    + rhs.value * self.hess[i][j]
                    + self.grad[i] * rhs.grad[j]
                    + rhs.grad[i] * self.grad[j];
            }
        }
        Jet2 {
            value: self.value * rhs.value,
            grad: [
                self.value * rhs.grad[0] + rhs.value * self.grad[0],
                self.value * rhs.grad[1] + rhs.value * self.grad[1],
                self.value * rhs.grad[2] + rhs.value * self.grad[2],
            ],
            hess,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, rhs: Jet2) -> Jet2 {
        self * rhs.recip()
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: f64) -> Jet2 {
        let mut out = self;
        out.value += rhs;
        out
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: f64) -> Jet2 {
        self + (-rhs)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: f64) -> Jet2 {
        self.scale(rhs)
    }
}

impl Div<f64> for Jet2 {
    type Output = Jet2;
    fn div(self, rhs: f64) -> Jet2 {
        self.scale(1.0 / rhs)
    }
}
