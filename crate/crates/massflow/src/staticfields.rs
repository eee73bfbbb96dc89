//! Static charged-dilaton data: the Gibbons black-hole solution, its field
//! equations and horizon boundary conditions, the derived conformal factors
//! χ, ψ with their log-ratio defect density, and the vanishing masses of the
//! rescaled metrics γ = χ⁴g and η = ψ⁴g.
//!
//! Closed forms (area-radius coordinate r = |x|, valid for r > 2M):
//!   V² = 1 − 2M/r,  e^{2φ} = 1 − Q²/(Mr),  U = Q/r,
//!   g = V⁻²dr² + (1 − Q²/(Mr)) r² dω².
//!
//! The drift field entering the u, v equations is X = √2·V⁻¹e^{−φ}∇U with
//!   Δu − ⟨∇u, X + ∇φ⟩ = 0,   Δv + ⟨∇v, X − ∇φ⟩ = 0,
//! and the defect density 𝒫 = |∇u/u − ∇v/v − X|² vanishes identically on the
//! Gibbons data (both verified symbolically; the e^{−φ} power and the sign of
//! the ∇φ drift in the u-equation are pinned by that vanishing).

use crate::error::Error;
use crate::fields::{FnField, ScalarField};
use crate::geometry::{
    charts::{ConformallyScaledField, GibbonsField},
    gradient_inner_of, gradient_norm_sq_of, laplace_beltrami_of, DomainKind, MetricChart, Point,
};
use crate::jet::Jet2;
use crate::linalg;
use crate::mass::{adm_mass, extrapolate, MassReport};
use crate::quadrature::QuadratureOpts;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Static data (V, φ, U) on a chart; V is the static potential, φ the scalar
/// field, U the electric potential.
#[derive(Clone)]
pub struct StaticData {
    pub mass: f64,
    pub charge: f64,
    pub lapse: Arc<dyn ScalarField>,
    pub dilaton: Arc<dyn ScalarField>,
    pub electric: Arc<dyn ScalarField>,
    pub chart: MetricChart,
}

/// The Gibbons charged-dilaton solution with analytic jets, registered on the
/// Cartesian-converted area-radius chart.
pub fn gibbons_solution(mass: f64, charge: f64) -> Result<StaticData> {
    if mass <= 0.0 || charge * charge >= 2.0 * mass * mass {
        return Err(Error::BadParameter {
            target: "gibbons_solution".into(),
            message: format!("need M > 0 and Q^2 < 2 M^2, got M = {mass}, Q = {charge}"),
        });
    }
    let horizon = 2.0 * mass;
    let m = mass;
    let q = charge;
    let lapse = Arc::new(FnField::with_min_radius(
        move |p: Point| {
            let rinv = Jet2::radius(&p.coords()).recip();
            (-rinv.scale(2.0 * m) + 1.0).sqrt()
        },
        horizon,
    ));
    let dilaton = Arc::new(FnField::with_min_radius(
        move |p: Point| {
            let rinv = Jet2::radius(&p.coords()).recip();
            (-rinv.scale(q * q / m) + 1.0).ln().scale(0.5)
        },
        horizon,
    ));
    let electric = Arc::new(FnField::with_min_radius(
        move |p: Point| Jet2::radius(&p.coords()).recip().scale(q),
        horizon,
    ));
    let chart = MetricChart::new(
        Arc::new(GibbonsField { mass, charge }),
        DomainKind::FullExterior,
        3.0 * mass,
    );
    Ok(StaticData {
        mass,
        charge,
        lapse,
        dilaton,
        electric,
        chart,
    })
}

impl StaticData {
    /// Residuals of the four coupled field equations at p:
    /// R_g − 2V⁻²e^{−2φ}|∇U|² − 2|∇φ|²,
    /// Δ_gV − V⁻¹e^{−2φ}|∇U|²,
    /// Δ_gU − V⁻¹⟨∇V,∇U⟩ − 2⟨∇φ,∇U⟩,
    /// Δ_gφ + V⁻¹⟨∇V,∇φ⟩ − V⁻²e^{−2φ}|∇U|².
    pub fn field_equation_residuals(&self, p: Point) -> Result<[f64; 4]> {
        let jet = self.chart.jet(p)?;
        let vj = self.lapse.jet(p);
        let fj = self.dilaton.jet(p);
        let uj = self.electric.jet(p);
        let v = vj.value;
        let e2phi = (2.0 * fj.value).exp();
        let du_sq = gradient_norm_sq_of(&jet, &uj);
        let dphi_sq = gradient_norm_sq_of(&jet, &fj);
        let r_g = crate::geometry::scalar_curvature_of_jet(&jet);
        let res_r = r_g - 2.0 / (v * v) / e2phi * du_sq - 2.0 * dphi_sq;
        let res_v = laplace_beltrami_of(&jet, &vj) - du_sq / (v * e2phi);
        let res_u = laplace_beltrami_of(&jet, &uj)
            - gradient_inner_of(&jet, &vj, &uj) / v
            - 2.0 * gradient_inner_of(&jet, &fj, &uj);
        let res_phi = laplace_beltrami_of(&jet, &fj) + gradient_inner_of(&jet, &vj, &fj) / v
            - du_sq / (v * v * e2phi);
        Ok([res_r, res_v, res_u, res_phi])
    }

    /// Derived conformal data (u, v, χ, ψ, the ratio f = χ/ψ and the charts
    /// γ = χ⁴g, η = ψ⁴g, e^{2φ}g).
    pub fn derived(&self) -> DerivedConformalData {
        let lapse = self.lapse.clone();
        let dilaton = self.dilaton.clone();
        let electric = self.electric.clone();
        let min_r = 2.0 * self.mass;
        let u_field: Arc<dyn ScalarField> = Arc::new(FnField::with_min_radius(
            {
                let (l, d, e) = (lapse.clone(), dilaton.clone(), electric.clone());
                move |p: Point| l.jet(p) * d.jet(p).exp() + e.jet(p).scale(2.0_f64.sqrt()) + 1.0
            },
            min_r,
        ));
        let v_field: Arc<dyn ScalarField> = Arc::new(FnField::with_min_radius(
            {
                let (l, d, e) = (lapse.clone(), dilaton.clone(), electric.clone());
                move |p: Point| l.jet(p) * d.jet(p).exp() - e.jet(p).scale(2.0_f64.sqrt()) + 1.0
            },
            min_r,
        ));
        let chi: Arc<dyn ScalarField> = Arc::new(FnField::with_min_radius(
            {
                let (u, v, d) = (u_field.clone(), v_field.clone(), dilaton.clone());
                move |p: Point| {
                    ((u.jet(p) * v.jet(p)).sqrt() * d.jet(p).scale(-0.5).exp()).scale(0.5)
                }
            },
            min_r,
        ));
        let psi: Arc<dyn ScalarField> = Arc::new(FnField::with_min_radius(
            {
                let (l, d) = (lapse.clone(), dilaton.clone());
                move |p: Point| ((d.jet(p).exp() + l.jet(p)) * d.jet(p).scale(-0.5).exp()).scale(0.5)
            },
            min_r,
        ));
        let ratio: Arc<dyn ScalarField> = Arc::new(FnField::with_min_radius(
            {
                let (c, s) = (chi.clone(), psi.clone());
                move |p: Point| c.jet(p) / s.jet(p)
            },
            min_r,
        ));
        let half_dilaton_exp: Arc<dyn ScalarField> = Arc::new(FnField::with_min_radius(
            {
                let d = dilaton.clone();
                move |p: Point| d.jet(p).scale(0.5).exp()
            },
            min_r,
        ));
        let conformal = |factor: &Arc<dyn ScalarField>| -> MetricChart {
            MetricChart::new(
                Arc::new(ConformallyScaledField::new(
                    self.chart.field().clone(),
                    factor.clone(),
                    4.0,
                )),
                DomainKind::FullExterior,
                self.chart.inner_radius,
            )
        };
        DerivedConformalData {
            gamma: conformal(&chi),
            eta: conformal(&psi),
            dilaton_scaled: conformal(&half_dilaton_exp),
            statics: self.clone(),
            u: u_field,
            v: v_field,
            chi,
            psi,
            ratio,
        }
    }

    /// Horizon limits r ↓ 2M of the boundary-condition quantities. Everything
    /// except V itself is sampled at r = 2M(1 + 10^{−k}), k = 2..5, and
    /// extrapolated; V is evaluated in closed form at the horizon.
    pub fn horizon_report(&self) -> Result<HorizonReport> {
        let two_m = 2.0 * self.mass;
        let lapse_at_horizon = (1.0_f64 - 2.0 * self.mass / two_m).max(0.0).sqrt();
        let ks = [2, 3, 4, 5];
        let mut lapse_dilaton = Vec::new();
        let mut lapse_electric = Vec::new();
        let mut lapse_grad_sq = Vec::new();
        let mut alignment = 0.0;
        let mut angular_variation: f64 = 0.0;
        for (idx, k) in ks.iter().enumerate() {
            let r = two_m * (1.0 + 10.0_f64.powi(-k));
            // extrapolation ladder parameter: 1/(r - 2M), increasing in k
            let ladder = 1.0 / (r - two_m);
            let dirs = [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [-0.48, 0.64, 0.6]];
            let mut grad_sq_per_dir = Vec::new();
            let mut vphi = 0.0;
            let mut vu = 0.0;
            for d in dirs {
                let p = Point(linalg::scale(&d, r));
                let jet = self.chart.jet(p)?;
                let vj = self.lapse.jet(p);
                let fj = self.dilaton.jet(p);
                let uj = self.electric.jet(p);
                vphi = gradient_inner_of(&jet, &vj, &fj);
                vu = gradient_inner_of(&jet, &vj, &uj);
                let gsq = gradient_norm_sq_of(&jet, &vj);
                grad_sq_per_dir.push(gsq);
                if idx + 1 == ks.len() {
                    let nu = gradient_norm_sq_of(&jet, &uj).sqrt();
                    let nv = gsq.sqrt();
                    alignment = if nu * nv > 0.0 { vu / (nu * nv) } else { 0.0 };
                }
            }
            let mean = grad_sq_per_dir.iter().sum::<f64>() / grad_sq_per_dir.len() as f64;
            angular_variation = angular_variation.max(
                grad_sq_per_dir
                    .iter()
                    .fold(0.0_f64, |m, v| m.max((v - mean).abs())),
            );
            lapse_dilaton.push((ladder, vphi));
            lapse_electric.push((ladder, vu));
            lapse_grad_sq.push((ladder, mean));
        }
        Ok(HorizonReport {
            lapse_at_horizon,
            lapse_dilaton_limit: extrapolate(&lapse_dilaton)?.value,
            lapse_electric_limit: extrapolate(&lapse_electric)?.value,
            lapse_gradient_sq_limit: extrapolate(&lapse_grad_sq)?.value,
            lapse_gradient_angular_variation: angular_variation,
            alignment,
        })
    }
}

/// Extrapolated boundary values of the horizon conditions ⟨∇V,∇φ⟩ = 0,
/// ⟨∇V,∇U⟩ = 0, |∇V|² = const, V = 0. The constant in |∇V|² is reported, not
/// asserted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HorizonReport {
    pub lapse_at_horizon: f64,
    pub lapse_dilaton_limit: f64,
    pub lapse_electric_limit: f64,
    pub lapse_gradient_sq_limit: f64,
    pub lapse_gradient_angular_variation: f64,
    /// ⟨∇V,∇U⟩/(|∇V||∇U|) at the innermost sample (finite limit recorded).
    pub alignment: f64,
}

/// u, v, χ, ψ, f = χ/ψ and the conformally rescaled charts.
#[derive(Clone)]
pub struct DerivedConformalData {
    pub statics: StaticData,
    pub u: Arc<dyn ScalarField>,
    pub v: Arc<dyn ScalarField>,
    pub chi: Arc<dyn ScalarField>,
    pub psi: Arc<dyn ScalarField>,
    /// f = χ/ψ, so γ = f⁴η.
    pub ratio: Arc<dyn ScalarField>,
    /// γ = χ⁴ g.
    pub gamma: MetricChart,
    /// η = ψ⁴ g.
    pub eta: MetricChart,
    /// e^{2φ} g.
    pub dilaton_scaled: MetricChart,
}

impl DerivedConformalData {
    /// Drift vector X = √2·V⁻¹e^{−φ}·∇U (index raised with g).
    fn drift_vector(&self, p: Point) -> Result<[f64; 3]> {
        let jet = self.statics.chart.jet(p)?;
        let v = self.statics.lapse.value(p);
        let phi = self.statics.dilaton.value(p);
        let uj = self.statics.electric.jet(p);
        let up = linalg::mat_vec(&jet.g_inv, &uj.grad);
        Ok(linalg::scale(&up, 2.0_f64.sqrt() / v * (-phi).exp()))
    }

    /// Residuals of Δu − ⟨∇u, X + ∇φ⟩ and Δv + ⟨∇v, X − ∇φ⟩ at p.
    pub fn uv_residuals(&self, p: Point) -> Result<[f64; 2]> {
        let jet = self.statics.chart.jet(p)?;
        let x = self.drift_vector(p)?;
        let phi_j = self.statics.dilaton.jet(p);
        let uj = self.u.jet(p);
        let vj = self.v.jet(p);
        let res_u = laplace_beltrami_of(&jet, &uj)
            - (linalg::dot(&uj.grad, &x) + gradient_inner_of(&jet, &uj, &phi_j));
        let res_v = laplace_beltrami_of(&jet, &vj)
            + (linalg::dot(&vj.grad, &x) - gradient_inner_of(&jet, &vj, &phi_j));
        Ok([res_u, res_v])
    }

    /// 𝒫 = |∇u/u − ∇v/v − X|²_g ≥ 0; identically zero exactly on the Gibbons
    /// solution.
    pub fn defect_density(&self, p: Point) -> Result<f64> {
        let jet = self.statics.chart.jet(p)?;
        let uj = self.u.jet(p);
        let vj = self.v.jet(p);
        if uj.value <= 0.0 || vj.value <= 0.0 {
            return Err(Error::BadParameter {
                target: "defect_density".into(),
                message: format!(
                    "u = {}, v = {} not positive at {:?}",
                    uj.value,
                    vj.value,
                    p.coords()
                ),
            });
        }
        let x = self.drift_vector(p)?;
        let mut w_cov = [0.0; 3];
        for i in 0..3 {
            w_cov[i] = uj.grad[i] / uj.value - vj.grad[i] / vj.value;
        }
        let mut w = linalg::mat_vec(&jet.g_inv, &w_cov);
        for i in 0..3 {
            w[i] -= x[i];
        }
        Ok(linalg::bilinear(&jet.g, &w, &w))
    }

    /// Residuals of the two conformal-curvature identities
    /// (i) ψ⁴R_η = e^{2φ}R_{e^{2φ}g} and (ii) χ⁴R_γ = 2𝒫 − e^{2φ}R_{e^{2φ}g},
    /// with every curvature evaluated by the engine on the derived charts.
    pub fn curvature_identity_residuals(&self, p: Point) -> Result<[f64; 2]> {
        let psi4 = self.psi.value(p).powi(4);
        let chi4 = self.chi.value(p).powi(4);
        let e2phi = (2.0 * self.statics.dilaton.value(p)).exp();
        let r_eta = self.eta.scalar_curvature(p)?;
        let r_gamma = self.gamma.scalar_curvature(p)?;
        let r_scaled = self.dilaton_scaled.scalar_curvature(p)?;
        let defect = self.defect_density(p)?;
        Ok([
            psi4 * r_eta - e2phi * r_scaled,
            chi4 * r_gamma - (2.0 * defect - e2phi * r_scaled),
        ])
    }

    /// ADM masses of γ and η by quadrature on the derived charts.
    pub fn rescaled_masses(
        &self,
        radii: &[f64],
        opts: &QuadratureOpts,
    ) -> Result<(MassReport, MassReport)> {
        Ok((
            adm_mass(&self.gamma, radii, opts)?,
            adm_mass(&self.eta, radii, opts)?,
        ))
    }

    /// Tail behavior of ψ and f = χ/ψ: per-radius values of r(1 − ψ)
    /// (limit M/2) and r²|f − 1| (bounded).
    pub fn tail_samples(&self, radii: &[f64]) -> Vec<TailSample> {
        radii
            .iter()
            .map(|&r| {
                let p = Point::new(r, 0.0, 0.0);
                TailSample {
                    r,
                    psi_coefficient: r * (1.0 - self.psi.value(p)),
                    ratio_gap: r * r * (self.ratio.value(p) - 1.0).abs(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TailSample {
    pub r: f64,
    pub psi_coefficient: f64,
    pub ratio_gap: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn charged() -> StaticData {
        gibbons_solution(1.0, 0.5).unwrap()
    }

    fn sample_points() -> Vec<Point> {
        vec![
            Point::new(3.0, 0.0, 0.0),
            Point::new(0.0, 4.0, 0.0),
            Point::new(6.0, 0.0, 8.0),
        ]
    }

    #[test]
    fn closed_forms_at_reference_point() {
        let data = charged();
        let p = Point::new(4.0, 0.0, 0.0);
        let v = data.lapse.value(p);
        assert!((v * v - 0.5).abs() < 1e-15);
        let e2phi = (2.0 * data.dilaton.value(p)).exp();
        assert!((e2phi - 15.0 / 16.0).abs() < 1e-15);
        assert!((data.electric.value(p) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn uncharged_limit_is_area_radius_schwarzschild() {
        let data = gibbons_solution(1.0, 0.0).unwrap();
        let p = Point::new(5.0, 0.0, 0.0);
        assert_eq!(data.dilaton.value(p), 0.0);
        assert_eq!(data.electric.value(p), 0.0);
        let g = data.chart.metric(p).unwrap();
        assert!((g[0][0] - 1.0 / (1.0 - 0.4)).abs() < 1e-14);
        assert!((g[1][1] - 1.0).abs() < 1e-14);
        assert!((g[2][2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn parameter_validation() {
        assert!(gibbons_solution(-1.0, 0.0).is_err());
        assert!(gibbons_solution(1.0, 1.5).is_err());
    }

    #[test]
    fn field_equations_hold_on_gibbons_data() {
        let data = charged();
        for p in sample_points() {
            let res = data.field_equation_residuals(p).unwrap();
            for (i, r) in res.iter().enumerate() {
                assert!(r.abs() < 1e-9, "residual {i} = {r:.3e} at {:?}", p.coords());
            }
        }
    }

    #[test]
    fn electric_residuals_vanish_identically_uncharged() {
        let data = gibbons_solution(1.0, 0.0).unwrap();
        for p in sample_points() {
            let res = data.field_equation_residuals(p).unwrap();
            assert_eq!(res[2], 0.0);
        }
    }

    #[test]
    fn perturbed_lapse_shows_in_residuals() {
        let data = charged();
        let base = data.lapse.clone();
        let perturbed = StaticData {
            lapse: Arc::new(FnField::with_min_radius(
                move |p: Point| base.jet(p).scale(1.01),
                2.0,
            )),
            ..data
        };
        let res = perturbed
            .field_equation_residuals(Point::new(2.5, 0.0, 0.0))
            .unwrap();
        assert!(res.iter().any(|r| r.abs() > 1e-4), "{res:?}");
    }

    #[test]
    fn uv_equations_hold_and_defect_vanishes() {
        let derived = charged().derived();
        for p in sample_points() {
            let res = derived.uv_residuals(p).unwrap();
            assert!(res[0].abs() < 1e-9, "res_u = {:.3e}", res[0]);
            assert!(res[1].abs() < 1e-9, "res_v = {:.3e}", res[1]);
            let defect = derived.defect_density(p).unwrap();
            assert!(defect >= 0.0 && defect < 1e-12, "P = {defect:.3e}");
        }
    }

    #[test]
    fn uncharged_uv_reduce_to_harmonic_equation() {
        // Q = 0: u = v, X = 0, phi = 0, so both equations reduce to Delta u = 0.
        let derived = gibbons_solution(1.0, 0.0).unwrap().derived();
        for p in sample_points() {
            let jet = derived.statics.chart.jet(p).unwrap();
            let lap = laplace_beltrami_of(&jet, &derived.u.jet(p));
            assert!(lap.abs() < 1e-9);
            assert_eq!(derived.defect_density(p).unwrap(), 0.0);
        }
    }

    #[test]
    fn perturbed_electric_breaks_uv_and_defect() {
        let data = charged();
        let base = data.electric.clone();
        let perturbed = StaticData {
            electric: Arc::new(FnField::with_min_radius(
                move |p: Point| base.jet(p).scale(1.05),
                2.0,
            )),
            ..data
        }
        .derived();
        let p = Point::new(2.5, 0.0, 0.0);
        let res = perturbed.uv_residuals(p).unwrap();
        assert!(res[0].abs() > 1e-4 || res[1].abs() > 1e-4, "{res:?}");
        assert!(perturbed.defect_density(p).unwrap() > 1e-7);
    }

    #[test]
    fn chi_consistency_invariant() {
        // chi^2 = (1/4) e^{-phi} u v identically
        let derived = charged().derived();
        for p in sample_points() {
            let chi = derived.chi.value(p);
            let expect = 0.25
                * (-derived.statics.dilaton.value(p)).exp()
                * derived.u.value(p)
                * derived.v.value(p);
            assert!((chi * chi - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn positivity_of_derived_quantities() {
        let derived = charged().derived();
        for p in sample_points() {
            assert!(derived.u.value(p) > 0.0);
            assert!(derived.v.value(p) > 0.0);
            assert!(derived.chi.value(p) > 0.0);
            assert!(derived.psi.value(p) > 0.0);
            let ephi_plus_v =
                derived.statics.dilaton.value(p).exp() + derived.statics.lapse.value(p);
            assert!(ephi_plus_v > 0.0);
        }
    }

    #[test]
    fn curvature_identities_hold() {
        let derived = charged().derived();
        for p in sample_points() {
            let res = derived.curvature_identity_residuals(p).unwrap();
            assert!(res[0].abs() < 1e-9, "(i) {:.3e}", res[0]);
            assert!(res[1].abs() < 1e-9, "(ii) {:.3e}", res[1]);
            // blended-curvature instantiation at the midpoint parameter:
            // R_eta + f^4 R_gamma = 2 P psi^-4 >= 0
            let r_eta = derived.eta.scalar_curvature(p).unwrap();
            let r_gamma = derived.gamma.scalar_curvature(p).unwrap();
            let f4 = derived.ratio.value(p).powi(4);
            assert!(r_eta + f4 * r_gamma >= -1e-10);
        }
    }

    #[test]
    fn horizon_conditions() {
        let report = charged().horizon_report().unwrap();
        assert_eq!(report.lapse_at_horizon, 0.0);
        assert!(report.lapse_dilaton_limit.abs() < 1e-3);
        assert!(report.lapse_electric_limit.abs() < 1e-3);
        assert!(report.lapse_gradient_angular_variation < 1e-8);
        // |grad V|^2 -> (M/r^2)^2 at r = 2M: 1/16 for M = 1
        assert!(
            (report.lapse_gradient_sq_limit - 1.0 / 16.0).abs() < 1e-6,
            "{}",
            report.lapse_gradient_sq_limit
        );
        // gradients of V and U are anti-parallel radial fields (the metric
        // conditioning ~ V^-2 near the horizon limits the attainable precision)
        assert!((report.alignment + 1.0).abs() < 1e-9);
    }

    #[test]
    fn tail_behavior_of_psi_and_ratio() {
        let derived = charged().derived();
        let samples = derived.tail_samples(&[50.0, 100.0, 200.0]);
        for s in &samples {
            assert!((s.psi_coefficient - 0.5).abs() < 1e-2, "{s:?}");
            assert!(s.ratio_gap < 2.0, "{s:?}");
        }
    }
}
