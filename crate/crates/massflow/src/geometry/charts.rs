//! Built-in metric strategies: flat space, the isotropic Schwarzschild slice,
//! conformally scaled charts and the charged-dilaton (Gibbons) solution
//! converted to Cartesian coordinates.

use super::{MetricField, Point};
use crate::fields::ScalarField;
use crate::jet::Jet2;
use crate::linalg::Mat3;
use std::sync::Arc;

const ZERO: Jet2 = Jet2 {
    value: 0.0,
    grad: [0.0; 3],
    hess: [[0.0; 3]; 3],
};

fn diagonal(j: Jet2) -> [[Jet2; 3]; 3] {
    let mut out = [[ZERO; 3]; 3];
    for i in 0..3 {
        out[i][i] = j;
    }
    out
}

/// The flat metric δ_ij.
pub struct EuclideanField;

impl MetricField for EuclideanField {
    fn component_jets(&self, _p: Point) -> [[Jet2; 3]; 3] {
        diagonal(Jet2::constant(1.0))
    }

    fn components(&self, _p: Point) -> Mat3 {
        crate::linalg::IDENTITY
    }

    fn label(&self) -> String {
        "euclidean".into()
    }
}

/// A constant coefficient matrix; flat in disguise. Used by tests for the
/// rotated/sheared-frame sanity checks.
pub struct ConstantMetricField {
    pub g: Mat3,
}

impl MetricField for ConstantMetricField {
    fn component_jets(&self, _p: Point) -> [[Jet2; 3]; 3] {
        let mut out = [[ZERO; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = Jet2::constant(self.g[i][j]);
            }
        }
        out
    }

    fn label(&self) -> String {
        "constant".into()
    }
}

/// Time-symmetric Schwarzschild slice in isotropic coordinates,
/// g = (1 + M/2r)⁴ δ.
pub struct SchwarzschildIsotropicField {
    pub mass: f64,
}

impl MetricField for SchwarzschildIsotropicField {
    fn component_jets(&self, p: Point) -> [[Jet2; 3]; 3] {
        let r = Jet2::radius(&p.coords());
        let psi = r.recip().scale(0.5 * self.mass) + 1.0;
        diagonal(psi.powf(4.0))
    }

    fn components(&self, p: Point) -> Mat3 {
        let psi = 1.0 + 0.5 * self.mass / p.radius();
        let c = psi.powi(4);
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            g[i][i] = c;
        }
        g
    }

    fn min_radius(&self) -> f64 {
        1e-12
    }

    fn label(&self) -> String {
        format!("schwarzschild_isotropic(M={})", self.mass)
    }
}

/// A conformally scaled chart f^power · g with jets combined by the product
/// and chain rules from the base jets and the factor jet (never by
/// re-differencing).
pub struct ConformallyScaledField {
    pub base: Arc<dyn MetricField>,
    pub factor: Arc<dyn ScalarField>,
    /// Exponent on the factor; the family g_λ uses 4λ.
    pub power: f64,
    label: String,
}

impl ConformallyScaledField {
    pub fn new(base: Arc<dyn MetricField>, factor: Arc<dyn ScalarField>, power: f64) -> Self {
        let label = format!("conformal(base={}, power={})", base.label(), power);
        ConformallyScaledField {
            base,
            factor,
            power,
            label,
        }
    }
}

impl MetricField for ConformallyScaledField {
    fn component_jets(&self, p: Point) -> [[Jet2; 3]; 3] {
        let scale = self.factor.jet(p).powf(self.power);
        let mut jets = self.base.component_jets(p);
        for row in jets.iter_mut() {
            for j in row.iter_mut() {
                *j = scale * *j;
            }
        }
        jets
    }

    fn components(&self, p: Point) -> Mat3 {
        let s = self.factor.value(p).powf(self.power);
        let mut g = self.base.components(p);
        for row in g.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        g
    }

    fn min_radius(&self) -> f64 {
        self.base.min_radius().max(self.factor.min_radius())
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// The static charged-dilaton solution in Cartesian form,
/// g_ij = B(r) δ_ij + (A(r) − B(r)) x_i x_j / r², with A = (1 − 2M/r)⁻¹ and
/// B = 1 − Q²/(Mr) (the area-radius angular coefficient). Valid for r > 2M.
pub struct GibbonsField {
    pub mass: f64,
    pub charge: f64,
}

impl GibbonsField {
    fn profiles(&self, r: &Jet2) -> (Jet2, Jet2) {
        let rinv = r.recip();
        let a = (-rinv.scale(2.0 * self.mass) + 1.0).recip();
        let b = -rinv.scale(self.charge * self.charge / self.mass) + 1.0;
        (a, b)
    }
}

impl MetricField for GibbonsField {
    fn component_jets(&self, p: Point) -> [[Jet2; 3]; 3] {
        let c = p.coords();
        let r = Jet2::radius(&c);
        let (a, b) = self.profiles(&r);
        let diff = a - b;
        let rinv2 = r.recip().powf(2.0);
        let x = [
            Jet2::coordinate(&c, 0),
            Jet2::coordinate(&c, 1),
            Jet2::coordinate(&c, 2),
        ];
        let mut out = [[ZERO; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let mut v = diff * x[i] * x[j] * rinv2;
                if i == j {
                    v = v + b;
                }
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        out
    }

    fn min_radius(&self) -> f64 {
        2.0 * self.mass
    }

    fn label(&self) -> String {
        format!("gibbons(M={}, Q={})", self.mass, self.charge)
    }
}
