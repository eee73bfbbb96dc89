//! Sphere quadrature: product Gauss–Legendre in cosθ × uniform trapezoid in φ
//! (spectrally accurate on the periodic circle). Hemisphere rules restrict the
//! Gauss nodes to cosθ ∈ [0, 1]; the equatorial circle uses the trapezoid rule.
//! Summation is Kahan-compensated in fixed node-index order, so results do not
//! depend on evaluation order or thread count.

use crate::geometry::Point;
use rayon::prelude::*;

/// Compensated accumulator with a deterministic summation order.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on the
/// Legendre recurrence. Deterministic; nodes ascending.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 2);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Initial guess (Chebyshev-like), then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre nodes mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    gauss_legendre(n)
        .into_iter()
        .map(|(x, w)| (0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w))
        .collect()
}

/// Quadrature resolution and the refinement cross-check switch.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureOpts {
    pub n_zeta: usize,
    pub n_phi: usize,
    /// When set, integrals are recomputed on a finer rule and the pair must
    /// agree to `refine_tol` (absolute + relative).
    pub refine_check: bool,
    pub refine_tol: f64,
}

impl Default for QuadratureOpts {
    fn default() -> Self {
        QuadratureOpts {
            n_zeta: 48,
            n_phi: 96,
            refine_check: false,
            refine_tol: 1e-9,
        }
    }
}

/// Tensor rule on a coordinate sphere or hemisphere of radius ρ.
#[derive(Clone, Debug)]
pub struct SphereRule {
    zeta: Vec<(f64, f64)>,
    n_phi: usize,
    hemisphere: bool,
}

impl SphereRule {
    pub fn full(n_zeta: usize, n_phi: usize) -> Self {
        SphereRule {
            zeta: gauss_legendre(n_zeta),
            n_phi,
            hemisphere: false,
        }
    }

    /// Same construction restricted to cosθ ∈ [0, 1].
    pub fn hemisphere(n_zeta: usize, n_phi: usize) -> Self {
        SphereRule {
            zeta: gauss_legendre_on(n_zeta, 0.0, 1.0),
            n_phi,
            hemisphere: true,
        }
    }

    pub fn is_hemisphere(&self) -> bool {
        self.hemisphere
    }

    pub fn refined(&self) -> Self {
        SphereRule {
            zeta: if self.hemisphere {
                gauss_legendre_on(self.zeta.len() * 3 / 2, 0.0, 1.0)
            } else {
                gauss_legendre(self.zeta.len() * 3 / 2)
            },
            n_phi: self.n_phi * 3 / 2,
            hemisphere: self.hemisphere,
        }
    }

    /// Nodes as points of the sphere of radius ρ with their surface weights
    /// (dσ⁰ = ρ² dζ dφ included).
    pub fn nodes(&self, rho: f64) -> Vec<(Point, f64)> {
        let dphi = 2.0 * std::f64::consts::PI / self.n_phi as f64;
        let mut out = Vec::with_capacity(self.zeta.len() * self.n_phi);
        for &(zeta, wz) in &self.zeta {
            let s = (1.0 - zeta * zeta).max(0.0).sqrt();
            for k in 0..self.n_phi {
                let phi = k as f64 * dphi;
                let p = Point::new(rho * s * phi.cos(), rho * s * phi.sin(), rho * zeta);
                out.push((p, wz * dphi * rho * rho));
            }
        }
        out
    }

    /// ∫ f dσ⁰ over the (hemi)sphere of radius ρ. Node evaluations run in
    /// parallel; the reduction is Kahan in fixed node order.
    pub fn integrate<F: Fn(Point) -> f64 + Sync>(&self, rho: f64, f: F) -> f64 {
        let nodes = self.nodes(rho);
        let terms: Vec<f64> = nodes.par_iter().map(|&(p, w)| w * f(p)).collect();
        let mut acc = KahanSum::default();
        for t in terms {
            acc.add(t);
        }
        acc.value()
    }
}

/// ∫ f ds⁰ over the equatorial circle of radius ρ in the plane y₃ = 0
/// (trapezoid rule, ds⁰ = ρ dφ).
pub fn integrate_equator<F: Fn(Point) -> f64 + Sync>(rho: f64, n_phi: usize, f: F) -> f64 {
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let terms: Vec<f64> = (0..n_phi)
        .into_par_iter()
        .map(|k| {
            let phi = k as f64 * dphi;
            dphi * rho * f(Point::new(rho * phi.cos(), rho * phi.sin(), 0.0))
        })
        .collect();
    let mut acc = KahanSum::default();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}
