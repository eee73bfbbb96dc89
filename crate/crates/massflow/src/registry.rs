//! Name-addressable registries of metric charts and conformal factors.
//!
//! Each built-in variant sits behind the [`MetricField`] / [`ScalarField`]
//! trait and is constructed by a builder keyed on its registry name, so runs
//! select strategies at runtime from CLI flags or a config file:
//!
//! * charts: `euclidean`, `schwarzschild_isotropic(M)`,
//!   `conformal(base, factor, lambda)`, `gibbons(M, Q)`
//! * factors: `one`, `half_over_r(a)`, `neumann_capped(a, r0, m)`
//!
//! The names and their parameters are part of the CLI contract.

use crate::conformal::ConformalFactor;
use crate::error::Error;
use crate::fields::{ConstantOne, HalfOverR, NeumannCapped, ScalarField};
use crate::geometry::charts::{
    ConformallyScaledField, EuclideanField, GibbonsField, SchwarzschildIsotropicField,
};
use crate::geometry::{DomainKind, MetricChart, MetricField};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// A factor request: registry name plus numeric parameters.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct FactorSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl FactorSpec {
    pub fn named(name: &str) -> Self {
        FactorSpec {
            name: name.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }
}

/// A chart request. `base` and `factor` are consumed by the `conformal`
/// builder and rejected elsewhere.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ChartSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<ChartSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<FactorSpec>,
}

impl ChartSpec {
    pub fn named(name: &str) -> Self {
        ChartSpec {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn with_base(mut self, base: ChartSpec) -> Self {
        self.base = Some(Box::new(base));
        self
    }

    pub fn with_factor(mut self, factor: FactorSpec) -> Self {
        self.factor = Some(factor);
        self
    }
}

/// What a chart builder hands back: the metric strategy plus chart defaults.
pub struct BuiltChart {
    pub field: Arc<dyn MetricField>,
    pub default_inner_radius: f64,
    /// Charts that only make sense on the full space reject half kind.
    pub supports_half: bool,
}

pub type ChartBuilder = fn(&ChartSpec, &Registry) -> Result<BuiltChart>;
pub type FactorBuilder = fn(&FactorSpec) -> Result<Arc<dyn ScalarField>>;

pub struct Registry {
    charts: BTreeMap<String, ChartBuilder>,
    factors: BTreeMap<String, FactorBuilder>,
}

fn param(
    params: &BTreeMap<String, f64>,
    key: &str,
    default: Option<f64>,
    target: &str,
) -> Result<f64> {
    match (params.get(key), default) {
        (Some(v), _) => Ok(*v),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(Error::BadParameter {
            target: target.into(),
            message: format!("missing required parameter '{key}'"),
        }),
    }
}

fn reject_unknown(params: &BTreeMap<String, f64>, allowed: &[&str], target: &str) -> Result<()> {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::BadParameter {
                target: target.into(),
                message: format!("unknown parameter '{key}' (allowed: {})", allowed.join(", ")),
            });
        }
    }
    Ok(())
}

fn build_euclidean(spec: &ChartSpec, _reg: &Registry) -> Result<BuiltChart> {
    reject_unknown(&spec.params, &["inner_radius"], "euclidean")?;
    Ok(BuiltChart {
        field: Arc::new(EuclideanField),
        default_inner_radius: param(&spec.params, "inner_radius", Some(1.0), "euclidean")?,
        supports_half: true,
    })
}

fn build_schwarzschild(spec: &ChartSpec, _reg: &Registry) -> Result<BuiltChart> {
    reject_unknown(&spec.params, &["M", "inner_radius"], "schwarzschild_isotropic")?;
    let m = param(&spec.params, "M", Some(1.0), "schwarzschild_isotropic")?;
    if m <= 0.0 {
        return Err(Error::BadParameter {
            target: "schwarzschild_isotropic".into(),
            message: format!("M = {m} must be positive"),
        });
    }
    // The coordinate sphere r = M/2 is the minimal surface of the slice.
    let inner = param(&spec.params, "inner_radius", Some(0.5 * m), "schwarzschild_isotropic")?;
    Ok(BuiltChart {
        field: Arc::new(SchwarzschildIsotropicField { mass: m }),
        default_inner_radius: inner,
        supports_half: true,
    })
}

fn build_gibbons(spec: &ChartSpec, _reg: &Registry) -> Result<BuiltChart> {
    reject_unknown(&spec.params, &["M", "Q", "inner_radius"], "gibbons")?;
    let m = param(&spec.params, "M", None, "gibbons")?;
    let q = param(&spec.params, "Q", None, "gibbons")?;
    if m <= 0.0 || q * q >= 2.0 * m * m {
        return Err(Error::BadParameter {
            target: "gibbons".into(),
            message: format!("need M > 0 and Q^2 < 2 M^2, got M = {m}, Q = {q}"),
        });
    }
    let inner = param(&spec.params, "inner_radius", Some(3.0 * m), "gibbons")?;
    Ok(BuiltChart {
        field: Arc::new(GibbonsField { mass: m, charge: q }),
        default_inner_radius: inner,
        supports_half: false,
    })
}

fn build_conformal(spec: &ChartSpec, reg: &Registry) -> Result<BuiltChart> {
    reject_unknown(&spec.params, &["lambda", "inner_radius"], "conformal")?;
    let base_spec = spec.base.as_deref().ok_or_else(|| Error::BadParameter {
        target: "conformal".into(),
        message: "missing base chart".into(),
    })?;
    let factor_spec = spec.factor.as_ref().ok_or_else(|| Error::BadParameter {
        target: "conformal".into(),
        message: "missing factor".into(),
    })?;
    let lambda = param(&spec.params, "lambda", Some(1.0), "conformal")?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::BadParameter {
            target: "conformal".into(),
            message: format!("lambda = {lambda} outside [0, 1]"),
        });
    }
    let base = reg.build_named_chart(base_spec)?;
    let factor = reg.build_factor(factor_spec)?;
    let inner = param(
        &spec.params,
        "inner_radius",
        Some(base.default_inner_radius),
        "conformal",
    )?;
    Ok(BuiltChart {
        field: Arc::new(ConformallyScaledField::new(
            base.field,
            factor,
            4.0 * lambda,
        )),
        default_inner_radius: inner,
        supports_half: base.supports_half,
    })
}

fn build_one(spec: &FactorSpec) -> Result<Arc<dyn ScalarField>> {
    reject_unknown(&spec.params, &[], "one")?;
    Ok(Arc::new(ConstantOne))
}

fn build_half_over_r(spec: &FactorSpec) -> Result<Arc<dyn ScalarField>> {
    reject_unknown(&spec.params, &["a"], "half_over_r")?;
    Ok(Arc::new(HalfOverR {
        a: param(&spec.params, "a", Some(1.0), "half_over_r")?,
    }))
}

fn build_neumann_capped(spec: &FactorSpec) -> Result<Arc<dyn ScalarField>> {
    reject_unknown(&spec.params, &["a", "r0", "m"], "neumann_capped")?;
    let a = param(&spec.params, "a", Some(1.0), "neumann_capped")?;
    let r0 = param(&spec.params, "r0", Some(1.0), "neumann_capped")?;
    let m = param(&spec.params, "m", Some(0.0), "neumann_capped")?;
    if a <= 0.0 || r0 <= 0.0 || m < 0.0 {
        return Err(Error::BadParameter {
            target: "neumann_capped".into(),
            message: format!("need a > 0, r0 > 0, m >= 0, got a = {a}, r0 = {r0}, m = {m}"),
        });
    }
    Ok(Arc::new(NeumannCapped { a, r0, m }))
}

impl Registry {
    /// Registry with the built-in charts and factors.
    pub fn with_builtins() -> Self {
        let mut reg = Registry {
            charts: BTreeMap::new(),
            factors: BTreeMap::new(),
        };
        reg.register_chart("euclidean", build_euclidean);
        reg.register_chart("schwarzschild_isotropic", build_schwarzschild);
        reg.register_chart("gibbons", build_gibbons);
        reg.register_chart("conformal", build_conformal);
        reg.register_factor("one", build_one);
        reg.register_factor("half_over_r", build_half_over_r);
        reg.register_factor("neumann_capped", build_neumann_capped);
        reg
    }

    pub fn register_chart(&mut self, name: &str, builder: ChartBuilder) {
        self.charts.insert(name.into(), builder);
    }

    pub fn register_factor(&mut self, name: &str, builder: FactorBuilder) {
        self.factors.insert(name.into(), builder);
    }

    pub fn chart_names(&self) -> Vec<&str> {
        self.charts.keys().map(|s| s.as_str()).collect()
    }

    pub fn factor_names(&self) -> Vec<&str> {
        self.factors.keys().map(|s| s.as_str()).collect()
    }

    fn build_named_chart(&self, spec: &ChartSpec) -> Result<BuiltChart> {
        let builder = self.charts.get(&spec.name).ok_or_else(|| {
            Error::UnknownChart(spec.name.clone(), self.chart_names().join(", "))
        })?;
        builder(spec, self)
    }

    /// Build a chart of the requested domain kind.
    pub fn build_chart(&self, spec: &ChartSpec, kind: DomainKind) -> Result<MetricChart> {
        let built = self.build_named_chart(spec)?;
        if kind == DomainKind::HalfExterior && !built.supports_half {
            return Err(Error::BadParameter {
                target: spec.name.clone(),
                message: "chart does not support half-space domains".into(),
            });
        }
        Ok(MetricChart::new(
            built.field,
            kind,
            built.default_inner_radius,
        ))
    }

    pub fn build_factor(&self, spec: &FactorSpec) -> Result<Arc<dyn ScalarField>> {
        let builder = self.factors.get(&spec.name).ok_or_else(|| {
            Error::UnknownFactor(spec.name.clone(), self.factor_names().join(", "))
        })?;
        builder(spec)
    }

    /// Factor wrapped with its declared decay rate (default q = 0.9).
    pub fn build_conformal_factor(&self, spec: &FactorSpec) -> Result<ConformalFactor> {
        Ok(ConformalFactor::new(self.build_factor(spec)?, 0.9))
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn builds_all_registered_names() {
        let reg = Registry::with_builtins();
        assert_eq!(
            reg.chart_names(),
            vec!["conformal", "euclidean", "gibbons", "schwarzschild_isotropic"]
        );
        for name in ["one", "half_over_r", "neumann_capped"] {
            reg.build_factor(&FactorSpec::named(name)).unwrap();
        }
    }

    #[test]
    fn unknown_names_error_with_listing() {
        let reg = Registry::with_builtins();
        let err = reg
            .build_chart(&ChartSpec::named("noSuch"), DomainKind::FullExterior)
            .unwrap_err();
        assert!(err.to_string().contains("euclidean"));
    }

    #[test]
    fn conformal_chart_composes_base_and_factor() {
        let reg = Registry::with_builtins();
        let spec = ChartSpec::named("conformal")
            .with("lambda", 0.5)
            .with_base(ChartSpec::named("euclidean"))
            .with_factor(FactorSpec::named("half_over_r").with("a", 1.0));
        let chart = reg.build_chart(&spec, DomainKind::FullExterior).unwrap();
        let p = Point::new(2.0, 0.0, 0.0);
        let g = chart.metric(p).unwrap();
        let f = 1.0 + 1.0 / (2.0 * 2.0);
        // g_lambda = f^{4*0.5} delta = f^2 delta
        assert!((g[0][0] - f * f).abs() < 1e-14);
    }

    #[test]
    fn gibbons_rejects_half_space_and_bad_charge() {
        let reg = Registry::with_builtins();
        let good = ChartSpec::named("gibbons").with("M", 1.0).with("Q", 0.5);
        assert!(reg.build_chart(&good, DomainKind::FullExterior).is_ok());
        assert!(reg.build_chart(&good, DomainKind::HalfExterior).is_err());
        let bad = ChartSpec::named("gibbons").with("M", 1.0).with("Q", 1.5);
        assert!(reg.build_chart(&bad, DomainKind::FullExterior).is_err());
    }

    #[test]
    fn unknown_parameters_are_rejected() {
        let reg = Registry::with_builtins();
        let spec = ChartSpec::named("schwarzschild_isotropic").with("mass", 1.0);
        assert!(reg.build_chart(&spec, DomainKind::FullExterior).is_err());
    }

    #[test]
    fn chart_spec_round_trips_through_json() {
        let spec = ChartSpec::named("conformal")
            .with("lambda", 0.25)
            .with_base(ChartSpec::named("schwarzschild_isotropic").with("M", 1.0))
            .with_factor(FactorSpec::named("neumann_capped").with("a", 1.0).with("r0", 0.5));
        let text = serde_json::to_string(&spec).unwrap();
        let back: ChartSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
