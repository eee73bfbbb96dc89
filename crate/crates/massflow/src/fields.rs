//! Scalar field strategies: conformal factors, coordinate functions and the
//! closed-form fields of the static-dilaton suite all implement [`ScalarField`]
//! and hand back exact second-order jets.

use crate::geometry::Point;
use crate::jet::Jet2;
use std::sync::Arc;

pub trait ScalarField: Send + Sync {
    /// Value with coordinate gradient and Hessian at p.
    fn jet(&self, p: Point) -> Jet2;

    fn value(&self, p: Point) -> f64 {
        self.jet(p).value
    }

    /// Open lower bound on |p| below which the closed form is invalid.
    fn min_radius(&self) -> f64 {
        0.0
    }
}

impl<T: ScalarField + ?Sized> ScalarField for Arc<T> {
    fn jet(&self, p: Point) -> Jet2 {
        (**self).jet(p)
    }
    fn value(&self, p: Point) -> f64 {
        (**self).value(p)
    }
    fn min_radius(&self) -> f64 {
        (**self).min_radius()
    }
}

/// f ≡ 1.
pub struct ConstantOne;

impl ScalarField for ConstantOne {
    fn jet(&self, _p: Point) -> Jet2 {
        Jet2::constant(1.0)
    }
}

/// f = 1 + a/(2r): the harmonic model factor. Adds a to the ADM mass of a
/// conformally rescaled flat chart.
pub struct HalfOverR {
    pub a: f64,
}

impl ScalarField for HalfOverR {
    fn jet(&self, p: Point) -> Jet2 {
        Jet2::radius(&p.coords()).recip().scale(0.5 * self.a) + 1.0
    }

    fn min_radius(&self) -> f64 {
        1e-12
    }
}

/// Factor with vanishing normal derivative on the sphere r = r0:
///
///   f(r) = (1 + k/r − c/r²) / (1 + m/(2r)),  k = (a+m)/2,  c = a·r0²/(4r0 + m).
///
/// Properties (for a, r0 > 0, m ≥ 0): ∂_r f(r0) = 0, f → 1 + a/(2r) at
/// infinity, f > 0, and the numerator is superharmonic, so the curvature of
/// f⁴·(1 + m/(2r))⁴δ is nonnegative. Matching m to the base Schwarzschild
/// mass makes the blended-curvature hypothesis hold exactly on that base.
pub struct NeumannCapped {
    pub a: f64,
    pub r0: f64,
    pub m: f64,
}

impl NeumannCapped {
    fn tail_coeff(&self) -> f64 {
        (self.a + self.m) / 2.0
    }

    fn cap_coeff(&self) -> f64 {
        self.a * self.r0 * self.r0 / (4.0 * self.r0 + self.m)
    }
}

impl ScalarField for NeumannCapped {
    fn jet(&self, p: Point) -> Jet2 {
        let rinv = Jet2::radius(&p.coords()).recip();
        let numerator =
            rinv.scale(self.tail_coeff()) - rinv.powf(2.0).scale(self.cap_coeff()) + 1.0;
        let denominator = rinv.scale(0.5 * self.m) + 1.0;
        numerator / denominator
    }

    fn min_radius(&self) -> f64 {
        1e-12
    }
}

/// The linear coordinate function α·x (asymptotic data for harmonic solves).
pub struct LinearFunction {
    pub direction: [f64; 3],
}

impl ScalarField for LinearFunction {
    fn jet(&self, p: Point) -> Jet2 {
        let c = p.coords();
        Jet2 {
            value: self.direction[0] * c[0] + self.direction[1] * c[1] + self.direction[2] * c[2],
            grad: self.direction,
            hess: [[0.0; 3]; 3],
        }
    }
}

/// 1/|x|, the flat harmonic kernel (test field).
pub struct InverseRadius;

impl ScalarField for InverseRadius {
    fn jet(&self, p: Point) -> Jet2 {
        Jet2::radius(&p.coords()).recip()
    }

    fn min_radius(&self) -> f64 {
        1e-12
    }
}

/// Pointwise power f^e of a positive field.
pub struct PowerField {
    pub base: Arc<dyn ScalarField>,
    pub exponent: f64,
}

impl ScalarField for PowerField {
    fn jet(&self, p: Point) -> Jet2 {
        self.base.jet(p).powf(self.exponent)
    }

    fn min_radius(&self) -> f64 {
        self.base.min_radius()
    }
}

/// Wrap a closure producing jets; the workhorse for derived closed-form
/// fields (static potentials, conformal factors built from them, exact
/// solutions in tests).
pub struct FnField<F: Fn(Point) -> Jet2 + Send + Sync> {
    f: F,
    min_radius: f64,
}

impl<F: Fn(Point) -> Jet2 + Send + Sync> FnField<F> {
    pub fn new(f: F) -> Self {
        FnField { f, min_radius: 0.0 }
    }

    pub fn with_min_radius(f: F, min_radius: f64) -> Self {
        FnField { f, min_radius }
    }
}

impl<F: Fn(Point) -> Jet2 + Send + Sync> ScalarField for FnField<F> {
    fn jet(&self, p: Point) -> Jet2 {
        (self.f)(p)
    }

    fn min_radius(&self) -> f64 {
        self.min_radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumann_capped_kills_radial_derivative_at_r0() {
        for (a, r0, m) in [(1.0, 1.0, 0.0), (1.0, 0.5, 1.0), (0.7, 2.0, 0.3)] {
            let f = NeumannCapped { a, r0, m };
            let jet = f.jet(Point::new(r0, 0.0, 0.0));
            assert!(
                jet.grad[0].abs() < 1e-13,
                "d_r f(r0) = {} for (a={a}, r0={r0}, m={m})",
                jet.grad[0]
            );
            assert!(jet.value > 0.0);
        }
    }

    #[test]
    fn neumann_capped_tail_matches_half_over_r() {
        let f = NeumannCapped {
            a: 1.0,
            r0: 0.5,
            m: 1.0,
        };
        let g = HalfOverR { a: 1.0 };
        for r in [50.0, 100.0, 200.0] {
            let p = Point::new(r, 0.0, 0.0);
            let gap = (f.value(p) - g.value(p)).abs();
            assert!(gap * r * r < 2.0, "tail mismatch {gap:.3e} at r={r}");
        }
    }

    #[test]
    fn half_over_r_is_harmonic_profile() {
        // Laplacian of 1 + a/(2r) vanishes: trace of the flat Hessian is zero.
        let f = HalfOverR { a: 3.0 };
        let jet = f.jet(Point::new(1.1, -2.0, 0.7));
        let lap = jet.hess[0][0] + jet.hess[1][1] + jet.hess[2][2];
        assert!(lap.abs() < 1e-13);
    }
}
