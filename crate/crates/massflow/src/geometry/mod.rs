//! Pointwise tensor calculus on coordinate charts: metric jets, Christoffel
//! symbols, scalar curvature, covariant Hessians, Laplace–Beltrami, gradient
//! norms and mean curvature of coordinate hypersurfaces.
//!
//! Everything here is a pure function of its inputs and safe to call from any
//! number of threads.

pub mod charts;
mod fd;

use crate::error::Error;
use crate::fields::ScalarField;
use crate::jet::Jet2;
use crate::linalg::{self, Mat3, Vec3};
use crate::Result;
use std::sync::Arc;

/// A point of ℝ³ (or ℝ³₊ for half-space charts, where `coords[2] = y₃ ≥ 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point([x, y, z])
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0
    }

    pub fn radius(&self) -> f64 {
        linalg::norm(&self.0)
    }
}

impl From<[f64; 3]> for Point {
    fn from(c: [f64; 3]) -> Self {
        Point(c)
    }
}

/// Whether the chart covers an exterior region of ℝ³ or of the half-space ℝ³₊.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    FullExterior,
    HalfExterior,
}

/// How metric derivatives are produced.
///
/// Every built-in metric carries analytic first and second derivatives;
/// finite differencing (4th-order central, one-sided across y₃ = 0) exists as
/// a cross-check oracle only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    /// Step is scaled per point: h = step · max(1, |p|).
    FiniteDifference { step: f64 },
}

/// A smooth metric on a coordinate region, evaluable with two derivative
/// orders. Implementations produce exact (jet-propagated) derivatives.
pub trait MetricField: Send + Sync {
    /// Component jets g_ij with coordinate gradient and Hessian; symmetric in (i, j).
    fn component_jets(&self, p: Point) -> [[Jet2; 3]; 3];

    /// Metric values only (fast path for quadrature-heavy callers).
    fn components(&self, p: Point) -> Mat3 {
        let jets = self.component_jets(p);
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = jets[i][j].value;
            }
        }
        g
    }

    /// Open lower bound on |p| below which the closed form is invalid
    /// (e.g. the horizon radius). Zero when the formula is global.
    fn min_radius(&self) -> f64 {
        0.0
    }

    fn label(&self) -> String;
}

/// Pointwise bundle (g_ij, ∂g_ij, ∂²g_ij) feeding all curvature formulas.
///
/// Index conventions: `dg[k][i][j] = ∂_k g_ij`, `ddg[k][l][i][j] = ∂_k ∂_l g_ij`.
#[derive(Clone, Debug)]
pub struct MetricJet2 {
    pub g: Mat3,
    pub dg: [Mat3; 3],
    pub ddg: [[Mat3; 3]; 3],
    pub g_inv: Mat3,
    pub sqrt_det: f64,
}

impl MetricJet2 {
    /// Assemble from component jets, checking positive definiteness.
    pub fn from_component_jets(jets: &[[Jet2; 3]; 3], at: Point) -> Result<Self> {
        let mut g = [[0.0; 3]; 3];
        let mut dg = [[[0.0; 3]; 3]; 3];
        let mut ddg = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = jets[i][j].value;
                for k in 0..3 {
                    dg[k][i][j] = jets[i][j].grad[k];
                    for l in 0..3 {
                        ddg[k][l][i][j] = jets[i][j].hess[k][l];
                    }
                }
            }
        }
        Self::from_arrays(g, dg, ddg, at)
    }

    pub fn from_arrays(g: Mat3, dg: [Mat3; 3], ddg: [[Mat3; 3]; 3], at: Point) -> Result<Self> {
        let minors = linalg::leading_minors(&g);
        if !(minors[0] > 0.0 && minors[1] > 0.0 && minors[2] > 0.0) {
            return Err(Error::NotPositiveDefinite {
                point: at.coords(),
                minors,
            });
        }
        let g_inv = linalg::inv3(&g).ok_or(Error::NotPositiveDefinite {
            point: at.coords(),
            minors,
        })?;
        Ok(MetricJet2 {
            g,
            dg,
            ddg,
            g_inv,
            sqrt_det: minors[2].sqrt(),
        })
    }
}

/// Coordinate hypersurfaces whose mean curvature the engine evaluates.
///
/// Sign convention: the unit normal is the normalized metric gradient of the
/// defining coordinate function (r for spheres, y₃ for the plane), so the
/// Euclidean sphere of radius ρ has H = +2/ρ with the normal pointing toward
/// spatial infinity, and the plane's normal points into the half-space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoordinateSurface {
    PlaneY3,
    Sphere { radius: f64 },
}

impl CoordinateSurface {
    fn describe(&self) -> String {
        match self {
            CoordinateSurface::PlaneY3 => "plane y3 = 0".to_string(),
            CoordinateSurface::Sphere { radius } => format!("sphere rho = {radius}"),
        }
    }
}

/// A metric strategy plus the chart data the rest of the crate needs: domain
/// kind, excised inner radius and derivative mode.
#[derive(Clone)]
pub struct MetricChart {
    field: Arc<dyn MetricField>,
    pub kind: DomainKind,
    pub inner_radius: f64,
    pub mode: DerivativeMode,
}

impl std::fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricChart")
            .field("label", &self.field.label())
            .field("kind", &self.kind)
            .field("inner_radius", &self.inner_radius)
            .field("mode", &self.mode)
            .finish()
    }
}


impl MetricChart {
    pub fn new(field: Arc<dyn MetricField>, kind: DomainKind, inner_radius: f64) -> Self {
        MetricChart {
            field,
            kind,
            inner_radius,
            mode: DerivativeMode::Analytic,
        }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn field(&self) -> &Arc<dyn MetricField> {
        &self.field
    }

    pub fn label(&self) -> String {
        self.field.label()
    }

    pub fn is_half(&self) -> bool {
        self.kind == DomainKind::HalfExterior
    }

    /// Validity check: inside the metric's closed-form domain and, for
    /// half-space charts, on the correct side of Σ.
    pub fn check_point(&self, p: Point) -> Result<()> {
        let c = p.coords();
        if !c.iter().all(|x| x.is_finite()) {
            return Err(Error::OutsideDomain {
                point: c,
                reason: "non-finite coordinates".into(),
            });
        }
        if self.is_half() && c[2] < -1e-12 {
            return Err(Error::OutsideDomain {
                point: c,
                reason: "y3 < 0 in a half-space chart".into(),
            });
        }
        let r = p.radius();
        if r <= self.field.min_radius() {
            return Err(Error::OutsideDomain {
                point: c,
                reason: format!("|p| = {r} <= validity radius {}", self.field.min_radius()),
            });
        }
        Ok(())
    }

    /// Metric values at a point.
    pub fn metric(&self, p: Point) -> Result<Mat3> {
        self.check_point(p)?;
        Ok(self.field.components(p))
    }

    /// Full two-derivative bundle at a point, analytic or finite-difference
    /// according to the chart's mode.
    pub fn jet(&self, p: Point) -> Result<MetricJet2> {
        self.check_point(p)?;
        match self.mode {
            DerivativeMode::Analytic => {
                MetricJet2::from_component_jets(&self.field.component_jets(p), p)
            }
            DerivativeMode::FiniteDifference { step } => {
                let h = step * p.radius().max(1.0);
                fd::finite_difference_jet(self.field.as_ref(), p, h, self.is_half())
            }
        }
    }

    pub fn scalar_curvature(&self, p: Point) -> Result<f64> {
        Ok(scalar_curvature_of_jet(&self.jet(p)?))
    }

    pub fn covariant_hessian(&self, u: &dyn ScalarField, p: Point) -> Result<Mat3> {
        Ok(covariant_hessian_of(&self.jet(p)?, &u.jet(p)))
    }

    pub fn laplace_beltrami(&self, u: &dyn ScalarField, p: Point) -> Result<f64> {
        Ok(laplace_beltrami_of(&self.jet(p)?, &u.jet(p)))
    }

    pub fn gradient_norm(&self, u: &dyn ScalarField, p: Point) -> Result<f64> {
        Ok(gradient_norm_of(&self.jet(p)?, &u.jet(p)))
    }

    /// Mean curvature of a coordinate surface at p (see [`CoordinateSurface`]
    /// for the sign convention). Errors when p is off the surface by more
    /// than 1e-9 · max(1, scale).
    pub fn mean_curvature(&self, surface: CoordinateSurface, p: Point) -> Result<f64> {
        let offset = match surface {
            CoordinateSurface::PlaneY3 => p.coords()[2].abs(),
            CoordinateSurface::Sphere { radius } => (p.radius() - radius).abs(),
        };
        let scale = match surface {
            CoordinateSurface::PlaneY3 => 1.0,
            CoordinateSurface::Sphere { radius } => radius.max(1.0),
        };
        if offset > 1e-9 * scale {
            return Err(Error::NotOnSurface {
                point: p.coords(),
                surface: surface.describe(),
                offset,
            });
        }
        let jet = self.jet(p)?;
        let phi = match surface {
            CoordinateSurface::PlaneY3 => Jet2::coordinate(&p.coords(), 2),
            CoordinateSurface::Sphere { .. } => Jet2::radius(&p.coords()),
        };
        Ok(mean_curvature_of(&jet, &phi))
    }
}

/// Levi-Civita symbols Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij);
/// indexed `[k][i][j]`, symmetric in (i, j).
pub fn christoffel(jet: &MetricJet2) -> [Mat3; 3] {
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut sum = 0.0;
                for l in 0..3 {
                    let a = jet.dg[i][j][l] + jet.dg[j][i][l] - jet.dg[l][i][j];
                    sum += jet.g_inv[k][l] * a;
                }
                gamma[k][i][j] = 0.5 * sum;
            }
        }
    }
    gamma
}

/// Coordinate partials ∂_m Γ^k_ij, indexed `[m][k][i][j]`.
fn christoffel_partials(jet: &MetricJet2) -> [[Mat3; 3]; 3] {
    // ∂_m g^{kl} = −g^{ka} (∂_m g_ab) g^{bl}
    let mut dginv = [[[0.0; 3]; 3]; 3];
    for m in 0..3 {
        for k in 0..3 {
            for l in 0..3 {
                let mut sum = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        sum += jet.g_inv[k][a] * jet.dg[m][a][b] * jet.g_inv[b][l];
                    }
                }
                dginv[m][k][l] = -sum;
            }
        }
    }
    let mut out = [[[[0.0; 3]; 3]; 3]; 3];
    for m in 0..3 {
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut sum = 0.0;
                    for l in 0..3 {
                        let a = jet.dg[i][j][l] + jet.dg[j][i][l] - jet.dg[l][i][j];
                        let da = jet.ddg[m][i][j][l] + jet.ddg[m][j][i][l] - jet.ddg[m][l][i][j];
                        sum += dginv[m][k][l] * a + jet.g_inv[k][l] * da;
                    }
                    out[m][k][i][j] = 0.5 * sum;
                }
            }
        }
    }
    out
}

/// Scalar curvature R = g^{ij}(∂_k Γ^k_ij − ∂_j Γ^k_ik + Γ^k_kl Γ^l_ij − Γ^k_jl Γ^l_ik).
pub fn scalar_curvature_of_jet(jet: &MetricJet2) -> f64 {
    let gamma = christoffel(jet);
    let dgamma = christoffel_partials(jet);
    let mut r = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let mut ricci = 0.0;
            for k in 0..3 {
                ricci += dgamma[k][k][i][j] - dgamma[j][k][i][k];
                for l in 0..3 {
                    ricci += gamma[k][k][l] * gamma[l][i][j] - gamma[k][j][l] * gamma[l][i][k];
                }
            }
            r += jet.g_inv[i][j] * ricci;
        }
    }
    r
}

/// Covariant Hessian (∇²u)_ij = ∂_i∂_j u − Γ^k_ij ∂_k u.
pub fn covariant_hessian_of(jet: &MetricJet2, u: &Jet2) -> Mat3 {
    let gamma = christoffel(jet);
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut v = u.hess[i][j];
            for k in 0..3 {
                v -= gamma[k][i][j] * u.grad[k];
            }
            out[i][j] = v;
        }
    }
    out
}

/// Δ_g u as the g-trace of the covariant Hessian.
pub fn laplace_beltrami_of(jet: &MetricJet2, u: &Jet2) -> f64 {
    let hess = covariant_hessian_of(jet, u);
    let mut sum = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            sum += jet.g_inv[i][j] * hess[i][j];
        }
    }
    sum
}

pub fn gradient_norm_sq_of(jet: &MetricJet2, u: &Jet2) -> f64 {
    linalg::bilinear(&jet.g_inv, &u.grad, &u.grad)
}

/// |∇u|_g = √(g^{ij} ∂_i u ∂_j u).
pub fn gradient_norm_of(jet: &MetricJet2, u: &Jet2) -> f64 {
    gradient_norm_sq_of(jet, u).max(0.0).sqrt()
}

/// ⟨∇u, ∇v⟩_g.
pub fn gradient_inner_of(jet: &MetricJet2, u: &Jet2, v: &Jet2) -> f64 {
    linalg::bilinear(&jet.g_inv, &u.grad, &v.grad)
}

/// Mean curvature of the level set {φ = const} with respect to the unit
/// normal ν = ∇φ/|∇φ|_g:  H = (g^{ij} − ν^i ν^j)(∇²φ)_ij / |∇φ|_g.
pub fn mean_curvature_of(jet: &MetricJet2, phi: &Jet2) -> f64 {
    let hess = covariant_hessian_of(jet, phi);
    let norm = gradient_norm_of(jet, phi);
    let up: Vec3 = linalg::mat_vec(&jet.g_inv, &phi.grad);
    let nu = linalg::scale(&up, 1.0 / norm);
    let mut h = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            h += (jet.g_inv[i][j] - nu[i] * nu[j]) * hess[i][j];
        }
    }
    h / norm
}

/// Derivative of a scalar field along the unit normal of a coordinate
/// surface, with the same normal convention as [`MetricChart::mean_curvature`].
pub fn normal_derivative(
    chart: &MetricChart,
    surface: CoordinateSurface,
    u: &dyn ScalarField,
    p: Point,
) -> Result<f64> {
    let jet = chart.jet(p)?;
    let phi = match surface {
        CoordinateSurface::PlaneY3 => Jet2::coordinate(&p.coords(), 2),
        CoordinateSurface::Sphere { .. } => Jet2::radius(&p.coords()),
    };
    let norm = gradient_norm_of(&jet, &phi);
    Ok(gradient_inner_of(&jet, &phi, &u.jet(p)) / norm)
}

/// Sampled asymptotic-flatness diagnostic: sup over sampled radii of
/// r^q · max_ij |g_ij − δ_ij| along a handful of rays. The caller judges
/// boundedness; this never proves decay, only consistency with it.
pub fn flatness_samples(chart: &MetricChart, q: f64, radii: &[f64]) -> Result<Vec<f64>> {
    let dirs: [[f64; 3]; 6] = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [-0.6, 0.8, 0.0],
        [0.48, -0.6, 0.64],
        [-0.280, -0.960, 0.0],
    ];
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut worst: f64 = 0.0;
        for d in dirs {
            let mut c = linalg::scale(&d, r);
            if chart.is_half() {
                c[2] = c[2].abs();
            }
            let g = chart.metric(Point(c))?;
            for i in 0..3 {
                for j in 0..3 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((g[i][j] - delta).abs());
                }
            }
        }
        out.push(r.powf(q) * worst);
    }
    Ok(out)
}
