//! Both sides of the harmonic-function mass inequalities, full-space and
//! half-space, over a conformal family g_λ = f^{4λ}g:
//!
//!   lhs  = mass of g_λ (ADM or half-space, by quadrature + extrapolation),
//!   rhs  = (1/16π) ∫ (|∇²_λw|²_λ/|∇^λw|_λ + ((1−λ)R_g + λf⁴R′)|∇^λw|_λ) dV_λ
//!        + (1/8π) ∫_Σ ((1−λ)H_g + λf²H′) |∇^λw|_λ dA_λ   (half-space only),
//!
//! with w the solved metric-harmonic function asymptotic to a coordinate.
//! The slack lhs − rhs is the numerical signature of the inequality; the
//! hypothesis minima locate where the blended curvature conditions fail.
//!
//! The Hessian of the discrete w comes from its interpolation jets,
//! covariantized with the g_λ Christoffel symbols — never by differencing
//! Christoffel-corrected values.

use crate::conformal::ConformalFamily;
use crate::error::Error;
use crate::fields::ScalarField;
use crate::geometry::{
    covariant_hessian_of, gradient_norm_of, CoordinateSurface, DomainKind, Point,
};
use crate::harmonic::{
    assemble, build_grid, solve, BoundaryValues, DiscreteField, DomainSpec, Grid, InnerCondition,
    Resolution, SolveOptions, SolveStats,
};
use crate::linalg;
use crate::quadrature::{KahanSum, QuadratureOpts};
use crate::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Assembled sides of one inequality. Serialized field names and order are
/// part of the report contract.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs_mass: f64,
    pub lhs_error: f64,
    pub rhs_bulk: f64,
    pub rhs_boundary: f64,
    pub slack: f64,
    pub hypothesis_min_scalar: f64,
    pub hypothesis_min_mean: f64,
    pub eps_grad: f64,
    pub truncation_flag: bool,
}

#[derive(Clone, Debug)]
pub struct InequalityOptions {
    /// Floor on |∇w|_λ in the Hessian quotient (critical-point regularization).
    pub eps_grad: f64,
    /// Radii ladder for the mass side.
    pub radii: Vec<f64>,
    pub quad: QuadratureOpts,
    pub solve: SolveOptions,
    /// Re-solve with doubled truncation radius and flag a > 1% drift of the
    /// right hand side.
    pub check_truncation: bool,
}

impl InequalityOptions {
    pub fn new(radii: Vec<f64>) -> Self {
        InequalityOptions {
            eps_grad: 1e-10,
            radii,
            quad: QuadratureOpts::default(),
            solve: SolveOptions::default(),
            check_truncation: false,
        }
    }
}

/// Bulk integrand |∇²_λw|²_λ/max(|∇^λw|_λ, ε) + ((1−λ)R_g + λf⁴R′)·|∇^λw|_λ
/// at p, all metric quantities in g_λ.
pub fn bulk_integrand(
    family: &ConformalFamily,
    w: &dyn ScalarField,
    p: Point,
    eps_grad: f64,
) -> Result<f64> {
    let jet = family.at_lambda().jet(p)?;
    let wj = w.jet(p);
    let hess = covariant_hessian_of(&jet, &wj);
    let mut hess_sq = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    hess_sq += jet.g_inv[i][k] * jet.g_inv[j][l] * hess[i][j] * hess[k][l];
                }
            }
        }
    }
    let grad = gradient_norm_of(&jet, &wj);
    let scalar = family.scalar_coefficient(p)?;
    Ok(hess_sq / grad.max(eps_grad) + scalar * grad)
}

/// Boundary integrand ((1−λ)H_g + λf²H′)·|∇^λw|_λ at p on Σ; the area weight
/// dA_λ is applied by the caller's quadrature.
pub fn boundary_integrand(family: &ConformalFamily, w: &dyn ScalarField, p: Point) -> Result<f64> {
    let jet = family.at_lambda().jet(p)?;
    let grad = gradient_norm_of(&jet, &w.jet(p));
    Ok(family.mean_coefficient(CoordinateSurface::PlaneY3, p)? * grad)
}

/// dA/(dρ dφ) of the plane y₃ = 0 at p: the (ρ, φ) tangents pulled through
/// the ambient metric.
pub(crate) fn induced_area_density(g: &linalg::Mat3, p: Point) -> f64 {
    let c = p.coords();
    let rho = (c[0] * c[0] + c[1] * c[1]).sqrt();
    let t1 = [c[0] / rho, c[1] / rho, 0.0];
    let t2 = [-c[1], c[0], 0.0];
    let e = linalg::bilinear(g, &t1, &t1);
    let f = linalg::bilinear(g, &t1, &t2);
    let g2 = linalg::bilinear(g, &t2, &t2);
    // t2 = dx/dphi carries the factor rho, so no extra Jacobian is needed
    (e * g2 - f * f).max(0.0).sqrt()
}

/// Right-hand-side pieces plus hypothesis minima on a given grid and field.
struct RhsAssembly {
    bulk: f64,
    boundary: f64,
    min_scalar: f64,
    min_mean: f64,
}

fn assemble_rhs(
    family: &ConformalFamily,
    grid: &Grid,
    w: &DiscreteField,
    eps_grad: f64,
) -> Result<RhsAssembly> {
    let d_phi = grid.d_phi();
    // bulk sweep over all cells with volume (the sigma ring has none)
    let mut cells = Vec::new();
    for i in 0..grid.n_r() {
        for j in 0..grid.n_layers() {
            let (dr, dz) = grid.dual_widths(i, j);
            if dz == 0.0 {
                continue;
            }
            for k in 0..grid.n_phi {
                cells.push((i, j, k, dr * dz * d_phi));
            }
        }
    }
    let terms: Vec<Result<(f64, f64)>> = cells
        .par_iter()
        .map(|&(i, j, k, vol)| {
            let p = grid.point(i, j, k);
            let jet = family.at_lambda().jet(p)?;
            let integrand = bulk_integrand(family, w, p, eps_grad)?;
            let scalar = family.scalar_coefficient(p)?;
            Ok((integrand * jet.sqrt_det * vol, scalar))
        })
        .collect();
    let mut bulk_sum = KahanSum::default();
    let mut min_scalar = f64::INFINITY;
    for term in terms {
        let (contribution, scalar) = term?;
        bulk_sum.add(contribution);
        min_scalar = min_scalar.min(scalar);
    }
    let bulk = bulk_sum.value() / (16.0 * std::f64::consts::PI);

    // boundary sweep over the sigma ring with induced-area weights
    let mut boundary = 0.0;
    let mut min_mean = f64::INFINITY;
    if grid.is_half() {
        let j = grid.n_layers() - 1;
        let ring: Vec<(usize, usize, f64)> = (0..grid.n_r())
            .flat_map(|i| {
                let dr = grid.dual_widths(i, j).0;
                (0..grid.n_phi).map(move |k| (i, k, dr * d_phi))
            })
            .collect();
        let terms: Vec<Result<(f64, f64)>> = ring
            .par_iter()
            .map(|&(i, k, weight)| {
                let p = grid.point(i, j, k);
                let g = family.at_lambda().metric(p)?;
                let area = induced_area_density(&g, p);
                let integrand = boundary_integrand(family, w, p)?;
                let mean = family.mean_coefficient(CoordinateSurface::PlaneY3, p)?;
                Ok((integrand * area * weight, mean))
            })
            .collect();
        let mut sum = KahanSum::default();
        for term in terms {
            let (contribution, mean) = term?;
            sum.add(contribution);
            min_mean = min_mean.min(mean);
        }
        boundary = sum.value() / (8.0 * std::f64::consts::PI);
    } else {
        // full-space runs report the blended mean-curvature minimum of the
        // inner excision sphere (the minimality hypothesis) when one exists
        if grid.spec.inner_condition == InnerCondition::Neumann {
            for j in 0..grid.n_layers() {
                for k in 0..grid.n_phi {
                    let p = grid.point(0, j, k);
                    let h = family.mean_coefficient(
                        CoordinateSurface::Sphere {
                            radius: grid.spec.inner_radius,
                        },
                        p,
                    )?;
                    min_mean = min_mean.min(h);
                }
            }
        } else {
            min_mean = 0.0;
        }
    }
    Ok(RhsAssembly {
        bulk,
        boundary,
        min_scalar,
        min_mean,
    })
}

/// Assemble a report from an already-solved field (no truncation study).
pub fn assemble_report(
    family: &ConformalFamily,
    w: &DiscreteField,
    opts: &InequalityOptions,
) -> Result<InequalityReport> {
    let grid = w.grid().clone();
    let chart = family.at_lambda();
    if chart.kind != grid.spec.kind {
        return Err(Error::BadParameter {
            target: "assemble_report".into(),
            message: "grid and chart domain kinds disagree".into(),
        });
    }
    let mass = match grid.spec.kind {
        DomainKind::HalfExterior => crate::mass::half_space_mass(chart, &opts.radii, &opts.quad)?,
        DomainKind::FullExterior => crate::mass::adm_mass(chart, &opts.radii, &opts.quad)?,
    };
    let rhs = assemble_rhs(family, &grid, w, opts.eps_grad)?;
    Ok(InequalityReport {
        lhs_mass: mass.extrapolated,
        lhs_error: mass.error_estimate,
        rhs_bulk: rhs.bulk,
        rhs_boundary: rhs.boundary,
        slack: mass.extrapolated - rhs.bulk - rhs.boundary,
        hypothesis_min_scalar: rhs.min_scalar,
        hypothesis_min_mean: rhs.min_mean,
        eps_grad: opts.eps_grad,
        truncation_flag: false,
    })
}

/// A full evaluation: solve the harmonic problem on the g_λ chart and
/// assemble the report (optionally with the outer-radius doubling study).
pub struct InequalityEvaluation {
    pub report: InequalityReport,
    pub field: DiscreteField,
    pub stats: SolveStats,
}

fn solve_on(
    family: &ConformalFamily,
    outer_radius: f64,
    resolution: Resolution,
    inner_condition: InnerCondition,
    solve_opts: &SolveOptions,
) -> Result<(DiscreteField, SolveStats)> {
    let chart = family.at_lambda();
    let spec = DomainSpec {
        kind: chart.kind,
        inner_radius: chart.inner_radius,
        outer_radius,
        direction: [0.0, 0.0, 1.0],
        inner_condition,
    };
    let grid = Arc::new(build_grid(&spec, resolution)?);
    let system = assemble(&grid, chart, &BoundaryValues::AsymptoticLinear)?;
    solve(&system, &BoundaryValues::AsymptoticLinear, solve_opts)
}

pub fn evaluate(
    family: &ConformalFamily,
    outer_radius: f64,
    resolution: Resolution,
    inner_condition: InnerCondition,
    opts: &InequalityOptions,
) -> Result<InequalityEvaluation> {
    let (field, stats) = solve_on(family, outer_radius, resolution, inner_condition, &opts.solve)?;
    let mut report = assemble_report(family, &field, opts)?;
    if opts.check_truncation {
        // keep the radial node density in log r when the domain doubles
        let inner = family.at_lambda().inner_radius;
        let ratio = (2.0 * outer_radius / inner).ln() / (outer_radius / inner).ln();
        let n_r2 = ((resolution.n_r - 1) as f64 * ratio).ceil() as usize + 1;
        let res2 = Resolution::new(n_r2, resolution.n_theta, resolution.n_phi);
        let (field2, _) = solve_on(
            family,
            2.0 * outer_radius,
            res2,
            inner_condition,
            &opts.solve,
        )?;
        let rhs2 = assemble_rhs(family, field2.grid(), &field2, opts.eps_grad)?;
        let rhs1 = report.rhs_bulk + report.rhs_boundary;
        let moved = (rhs2.bulk + rhs2.boundary - rhs1).abs();
        report.truncation_flag = moved > 0.01 * rhs1.abs() + 1e-9;
    }
    Ok(InequalityEvaluation {
        report,
        field,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::ConformalFactor;
    use crate::fields::ConstantOne;
    use crate::geometry::charts::EuclideanField;
    use crate::geometry::MetricChart;

    fn flat_family(kind: DomainKind) -> ConformalFamily {
        let chart = MetricChart::new(Arc::new(EuclideanField), kind, 0.5);
        ConformalFamily::new(chart, ConformalFactor::new(Arc::new(ConstantOne), 0.9), 0.5)
            .unwrap()
    }

    #[test]
    fn flat_half_space_rigidity_case() {
        // f = 1 on flat half-space with no excision: w = y3 exactly, both
        // sides vanish.
        let family = flat_family(DomainKind::HalfExterior);
        let opts = InequalityOptions::new(vec![4.0, 8.0, 16.0, 32.0]);
        let eval = evaluate(
            &family,
            32.0,
            Resolution::new(16, 12, 24),
            InnerCondition::DirichletLinear,
            &opts,
        )
        .unwrap();
        let r = eval.report;
        assert!(r.lhs_mass.abs() < 1e-10, "lhs {:.3e}", r.lhs_mass);
        assert!(r.rhs_bulk.abs() < 1e-8, "rhs bulk {:.3e}", r.rhs_bulk);
        assert!(r.rhs_boundary.abs() < 1e-10);
        assert!(r.slack.abs() < 1e-8, "slack {:.3e}", r.slack);
        assert!(r.hypothesis_min_scalar.abs() < 1e-12);
        assert!(r.hypothesis_min_mean.abs() < 1e-12);
    }

    #[test]
    fn flat_full_space_equality_case() {
        let family = flat_family(DomainKind::FullExterior);
        let opts = InequalityOptions::new(vec![4.0, 8.0, 16.0, 32.0]);
        let eval = evaluate(
            &family,
            32.0,
            Resolution::new(16, 12, 24),
            InnerCondition::DirichletLinear,
            &opts,
        )
        .unwrap();
        let r = eval.report;
        assert!(r.slack.abs() < 1e-8, "slack {:.3e}", r.slack);
        assert_eq!(r.rhs_boundary, 0.0);
    }

    #[test]
    fn induced_area_density_matches_closed_forms() {
        let p = Point::new(1.2, -0.9, 0.0);
        let rho = (1.2_f64 * 1.2 + 0.9 * 0.9).sqrt();
        // flat plane: dA = rho d(rho) d(phi)
        let flat = induced_area_density(&linalg::IDENTITY, p);
        assert!((flat - rho).abs() < 1e-14);
        // conformally flat f^4 delta: the induced 2-metric scales by f^4
        let f = 1.0 + 0.5 / p.radius();
        let mut g = linalg::IDENTITY;
        for row in g.iter_mut() {
            for v in row.iter_mut() {
                *v *= f.powi(4);
            }
        }
        let scaled = induced_area_density(&g, p);
        assert!((scaled - f.powi(4) * rho).abs() < 1e-12);
    }

    #[test]
    fn sigma_ring_weights_integrate_the_flat_annulus_area() {
        let spec = crate::harmonic::DomainSpec::half(1.0, 16.0);
        let grid = build_grid(&spec, Resolution::new(48, 12, 24)).unwrap();
        let j = grid.n_layers() - 1;
        let mut total = 0.0;
        for i in 0..grid.n_r() {
            let weight = grid.dual_widths(i, j).0 * grid.d_phi();
            for k in 0..grid.n_phi {
                let p = grid.point(i, j, k);
                total += induced_area_density(&linalg::IDENTITY, p) * weight;
            }
        }
        let exact = std::f64::consts::PI * (16.0_f64.powi(2) - 1.0);
        assert!(
            (total - exact).abs() < 2e-3 * exact,
            "annulus area {total} vs {exact}"
        );
    }

    #[test]
    fn bulk_integrand_vanishes_on_flat_linear_data() {
        let family = flat_family(DomainKind::HalfExterior);
        let w = crate::fields::LinearFunction {
            direction: [0.0, 0.0, 1.0],
        };
        let p = Point::new(1.5, 0.3, 0.9);
        let v = bulk_integrand(&family, &w, p, 1e-10).unwrap();
        assert!(v.abs() < 1e-14);
        let b = boundary_integrand(&family, &w, Point::new(1.2, -0.4, 0.0)).unwrap();
        assert!(b.abs() < 1e-14);
    }
}
