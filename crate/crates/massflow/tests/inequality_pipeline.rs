//! End-to-end inequality runs on the registered example metrics: solve the
//! harmonic problem, assemble both sides, check slack and hypothesis minima.

use massflow::conformal::{ConformalFactor, ConformalFamily};
use massflow::fields::{ConstantOne, NeumannCapped};
use massflow::geometry::charts::{EuclideanField, SchwarzschildIsotropicField};
use massflow::geometry::{DomainKind, MetricChart, Point};
use massflow::harmonic::{InnerCondition, Resolution};
use massflow::inequality::{evaluate, InequalityOptions};
use std::sync::Arc;

fn schwarzschild(kind: DomainKind) -> MetricChart {
    MetricChart::new(
        Arc::new(SchwarzschildIsotropicField { mass: 1.0 }),
        kind,
        0.5,
    )
}

fn unit_factor() -> ConformalFactor {
    ConformalFactor::new(Arc::new(ConstantOne), 0.9)
}

#[test]
fn full_space_schwarzschild_slack_is_positive_and_below_mass() {
    let family =
        ConformalFamily::new(schwarzschild(DomainKind::FullExterior), unit_factor(), 0.0).unwrap();
    let opts = InequalityOptions::new(vec![8.0, 16.0, 32.0, 64.0]);
    let eval = evaluate(
        &family,
        32.0,
        Resolution::new(24, 12, 24),
        InnerCondition::Neumann,
        &opts,
    )
    .unwrap();
    let r = eval.report;
    assert!((r.lhs_mass - 1.0).abs() < 1e-4, "lhs {}", r.lhs_mass);
    assert!(r.rhs_bulk >= 0.0 && r.rhs_bulk <= 1.0, "rhs {}", r.rhs_bulk);
    assert!(r.slack >= -1e-6, "slack {}", r.slack);
    // vacuum: the blended scalar coefficient vanishes
    assert!(r.hypothesis_min_scalar.abs() < 1e-9);
    // minimal inner sphere: blended mean curvature vanishes there
    assert!(r.hypothesis_min_mean.abs() < 1e-9);
}

#[test]
fn half_space_schwarzschild_at_lambda_zero() {
    let family =
        ConformalFamily::new(schwarzschild(DomainKind::HalfExterior), unit_factor(), 0.0).unwrap();
    let opts = InequalityOptions::new(vec![8.0, 16.0, 32.0, 64.0]);
    let eval = evaluate(
        &family,
        32.0,
        Resolution::new(24, 12, 24),
        InnerCondition::Neumann,
        &opts,
    )
    .unwrap();
    let r = eval.report;
    assert!((r.lhs_mass - 0.5).abs() < 1e-3, "lhs {}", r.lhs_mass);
    assert!(r.rhs_bulk >= 0.0 && r.rhs_bulk <= 0.5);
    assert!(r.slack >= -1e-6, "slack {}", r.slack);
    // reflection-symmetric metric: the boundary term vanishes pointwise
    assert!(r.rhs_boundary.abs() < 1e-12);
    assert!(r.hypothesis_min_mean.abs() < 1e-10);
}

#[test]
fn half_space_conformal_family_midpoint_lambda() {
    let factor = ConformalFactor::new(
        Arc::new(NeumannCapped {
            a: 1.0,
            r0: 0.5,
            m: 1.0,
        }),
        0.9,
    );
    let family =
        ConformalFamily::new(schwarzschild(DomainKind::HalfExterior), factor, 0.5).unwrap();
    let opts = InequalityOptions::new(vec![8.0, 16.0, 32.0, 64.0]);
    let eval = evaluate(
        &family,
        32.0,
        Resolution::new(24, 12, 24),
        InnerCondition::Neumann,
        &opts,
    )
    .unwrap();
    let r = eval.report;
    assert!(r.slack >= -1e-6, "slack {}", r.slack);
    assert!(
        r.hypothesis_min_scalar >= -1e-9,
        "scalar hypothesis minimum {}",
        r.hypothesis_min_scalar
    );
    assert!(
        r.hypothesis_min_mean >= -1e-9,
        "mean hypothesis minimum {}",
        r.hypothesis_min_mean
    );
    // lhs should sit between the endpoint masses (both near their halves)
    assert!(r.lhs_mass > 0.5 && r.lhs_mass < 1.2, "lhs {}", r.lhs_mass);
}

#[test]
fn lambda_zero_report_equals_direct_assembly() {
    // At lambda = 0 the blended coefficients are arithmetically R_g and H_g,
    // and g_lambda is g itself: the family route and a direct single-metric
    // assembly must produce identical numbers.
    let family =
        ConformalFamily::new(schwarzschild(DomainKind::HalfExterior), unit_factor(), 0.0).unwrap();
    let p = Point::new(1.7, 0.4, 0.8);
    let chart = schwarzschild(DomainKind::HalfExterior);
    let direct_scalar = chart.scalar_curvature(p).unwrap();
    let family_scalar = family.scalar_coefficient(p).unwrap();
    assert_eq!(direct_scalar, family_scalar);
    let q = Point::new(1.7, 0.4, 0.0);
    let direct_mean = chart
        .mean_curvature(massflow::geometry::CoordinateSurface::PlaneY3, q)
        .unwrap();
    let family_mean = family
        .mean_coefficient(massflow::geometry::CoordinateSurface::PlaneY3, q)
        .unwrap();
    assert_eq!(direct_mean, family_mean);
    let g_direct = chart.metric(p).unwrap();
    let g_family = family.at_lambda().metric(p).unwrap();
    assert_eq!(g_direct, g_family);
}

#[test]
fn eps_grad_floor_is_inert_on_registered_examples() {
    let family =
        ConformalFamily::new(schwarzschild(DomainKind::HalfExterior), unit_factor(), 0.0).unwrap();
    let mut opts = InequalityOptions::new(vec![8.0, 16.0, 32.0]);
    let eval = |opts: &InequalityOptions| {
        evaluate(
            &family,
            16.0,
            Resolution::new(16, 12, 24),
            InnerCondition::Neumann,
            opts,
        )
        .unwrap()
        .report
        .rhs_bulk
    };
    let base = eval(&opts);
    opts.eps_grad /= 2.0;
    let halved = eval(&opts);
    assert!(
        (base - halved).abs() <= 1e-3 * base.abs(),
        "rhs moved {} -> {} under eps halving",
        base,
        halved
    );
}

#[test]
fn flat_family_members_stay_rigid_across_lambda() {
    // f = 1: every member is flat; slack vanishes for each lambda.
    let base = MetricChart::new(Arc::new(EuclideanField), DomainKind::HalfExterior, 0.5);
    for lambda in [0.25, 0.75] {
        let family = ConformalFamily::new(base.clone(), unit_factor(), lambda).unwrap();
        let opts = InequalityOptions::new(vec![4.0, 8.0, 16.0, 32.0]);
        let eval = evaluate(
            &family,
            32.0,
            Resolution::new(16, 12, 24),
            InnerCondition::DirichletLinear,
            &opts,
        )
        .unwrap();
        assert!(eval.report.slack.abs() < 1e-8, "slack {}", eval.report.slack);
    }
}
