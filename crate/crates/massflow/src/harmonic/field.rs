//! Solved fields on the spherical grid: local degree-4 Lagrange interpolation
//! with first and second derivatives (exact on degree ≤ 4 polynomials of the
//! grid coordinates), chain-ruled to Cartesian jets so the inequality
//! assembly can covariantize them; plus the text serialization and the
//! boundary-residual report.

use super::{assemble::spherical_metric, Grid, InnerCondition, LinearSystem, NodeClass};
use super::{build_grid, DomainSpec, Resolution};
use crate::error::Error;
use crate::fields::ScalarField;
use crate::geometry::{DomainKind, MetricChart, Point};
use crate::jet::Jet2;
use crate::Result;
use std::sync::Arc;

const WINDOW: usize = 5;

/// Scalar field sampled on a [`Grid`], evaluable anywhere off the polar axis
/// through local polynomial interpolation of degree 4.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    /// ζ layers sorted ascending with their layer indices, for window lookup.
    zeta_sorted: Vec<(f64, usize)>,
}

impl DiscreteField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.node_count());
        let mut zeta_sorted: Vec<(f64, usize)> = grid
            .zeta_layers
            .iter()
            .copied()
            .enumerate()
            .map(|(j, z)| (z, j))
            .collect();
        zeta_sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        DiscreteField {
            grid,
            values,
            zeta_sorted,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at_node(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    /// Interpolation jet in the grid coordinates (r, ζ, φ) at a point given
    /// by those coordinates: value, gradient, Hessian (symmetrized).
    fn spherical_jet(&self, r: f64, zeta: f64, phi: f64) -> ([f64; 10], [usize; WINDOW], [usize; WINDOW], [usize; WINDOW]) {
        let grid = &self.grid;
        // radial window
        let ir = window_start(&grid.radii, r);
        let r_idx: [usize; WINDOW] = std::array::from_fn(|m| ir + m);
        let r_pos: Vec<f64> = r_idx.iter().map(|&i| grid.radii[i]).collect();
        // zeta window over the ascending view
        let zs: Vec<f64> = self.zeta_sorted.iter().map(|e| e.0).collect();
        let iz = window_start(&zs, zeta);
        let z_idx: [usize; WINDOW] = std::array::from_fn(|m| self.zeta_sorted[iz + m].1);
        let z_pos: Vec<f64> = (0..WINDOW).map(|m| zs[iz + m]).collect();
        // periodic phi window
        let n_phi = grid.n_phi;
        let d_phi = grid.d_phi();
        let tau = 2.0 * std::f64::consts::PI;
        let phi_n = phi.rem_euclid(tau);
        let kb = ((phi_n / d_phi).floor() as isize).clamp(0, n_phi as isize - 1);
        let p_idx: [usize; WINDOW] =
            std::array::from_fn(|m| ((kb - 2 + m as isize).rem_euclid(n_phi as isize)) as usize);
        let p_pos: Vec<f64> = (0..WINDOW)
            .map(|m| (kb - 2 + m as isize) as f64 * d_phi)
            .collect();

        let br = lagrange_basis(&r_pos, r);
        let bz = lagrange_basis(&z_pos, zeta);
        let bp = lagrange_basis(&p_pos, phi_n);

        // combos: v, r, z, p, rr, zz, pp, rz, rp, zp
        let mut s = [0.0_f64; 10];
        for (a, &ia) in r_idx.iter().enumerate() {
            for (b, &jb) in z_idx.iter().enumerate() {
                for (c, &kc) in p_idx.iter().enumerate() {
                    let w = self.values[grid.index(ia, jb, kc)];
                    let (r0, r1, r2) = (br.0[a], br.1[a], br.2[a]);
                    let (z0, z1, z2) = (bz.0[b], bz.1[b], bz.2[b]);
                    let (p0, p1, p2) = (bp.0[c], bp.1[c], bp.2[c]);
                    s[0] += w * r0 * z0 * p0;
                    s[1] += w * r1 * z0 * p0;
                    s[2] += w * r0 * z1 * p0;
                    s[3] += w * r0 * z0 * p1;
                    s[4] += w * r2 * z0 * p0;
                    s[5] += w * r0 * z2 * p0;
                    s[6] += w * r0 * z0 * p2;
                    s[7] += w * r1 * z1 * p0;
                    s[8] += w * r1 * z0 * p1;
                    s[9] += w * r0 * z1 * p1;
                }
            }
        }
        (s, r_idx, z_idx, p_idx)
    }
}

fn window_start(sorted: &[f64], x: f64) -> usize {
    let n = sorted.len();
    debug_assert!(n >= WINDOW);
    let idx = sorted.partition_point(|&v| v < x);
    idx.saturating_sub(WINDOW / 2 + 1).min(n - WINDOW)
}

/// Values and first two derivatives of the Lagrange basis through `xs` at x.
fn lagrange_basis(xs: &[f64], x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let mut v = vec![0.0; n];
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for a in 0..n {
        let mut denom = 1.0;
        let mut p = 1.0;
        let mut dp = 0.0;
        let mut ddp = 0.0;
        for b in 0..n {
            if b == a {
                continue;
            }
            denom *= xs[a] - xs[b];
            let t = x - xs[b];
            ddp = ddp * t + 2.0 * dp;
            dp = dp * t + p;
            p *= t;
        }
        v[a] = p / denom;
        d1[a] = dp / denom;
        d2[a] = ddp / denom;
    }
    (v, d1, d2)
}

/// Jet of φ = atan2(y, x) as a function of the Cartesian coordinates.
fn phi_jet(p: Point) -> Jet2 {
    let c = p.coords();
    let (x, y) = (c[0], c[1]);
    let rho_sq = x * x + y * y;
    let value = y.atan2(x);
    let grad = [-y / rho_sq, x / rho_sq, 0.0];
    let q = rho_sq * rho_sq;
    let hess = [
        [2.0 * x * y / q, (y * y - x * x) / q, 0.0],
        [(y * y - x * x) / q, -2.0 * x * y / q, 0.0],
        [0.0, 0.0, 0.0],
    ];
    Jet2 { value, grad, hess }
}

impl ScalarField for DiscreteField {
    fn jet(&self, p: Point) -> Jet2 {
        let c = p.coords();
        let r = p.radius();
        let zeta = c[2] / r;
        let phi = c[1].atan2(c[0]);
        let (s, _, _, _) = self.spherical_jet(r, zeta, phi);

        let r_jet = Jet2::radius(&c);
        let z_jet = Jet2::coordinate(&c, 2) * r_jet.recip();
        let p_jet = phi_jet(p);
        let xi = [r_jet, z_jet, p_jet];
        let d1 = [s[1], s[2], s[3]];
        let d2 = [
            [s[4], s[7], s[8]],
            [s[7], s[5], s[9]],
            [s[8], s[9], s[6]],
        ];
        let mut grad = [0.0; 3];
        let mut hess = [[0.0; 3]; 3];
        for i in 0..3 {
            for a in 0..3 {
                grad[i] += d1[a] * xi[a].grad[i];
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let mut h = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        h += d2[a][b] * xi[a].grad[i] * xi[b].grad[j];
                    }
                    h += d1[a] * xi[a].hess[i][j];
                }
                hess[i][j] = h;
            }
        }
        Jet2 {
            value: s[0],
            grad,
            hess,
        }
    }
}

impl DiscreteField {
    /// Flat text serialization: one header line (grid dimensions and domain
    /// spec), then one value per line in (i, j, k) lexicographic order.
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let kind = match g.spec.kind {
            DomainKind::FullExterior => "full",
            DomainKind::HalfExterior => "half",
        };
        let cond = match g.spec.inner_condition {
            InnerCondition::Neumann => "neumann",
            InnerCondition::DirichletLinear => "dirichlet_linear",
        };
        let mut out = format!(
            "massflow-field 1 kind={kind} n_r={} n_theta={} n_phi={} inner={:.17e} outer={:.17e} direction={:.17e},{:.17e},{:.17e} inner_condition={cond}\n",
            g.resolution.n_r,
            g.resolution.n_theta,
            g.resolution.n_phi,
            g.spec.inner_radius,
            g.spec.outer_radius,
            g.spec.direction[0],
            g.spec.direction[1],
            g.spec.direction[2],
        );
        for v in &self.values {
            out.push_str(&format!("{v:.17e}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<DiscreteField> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedField("empty input".into()))?;
        let mut tokens = header.split_whitespace();
        let magic = tokens.next().unwrap_or("");
        let version = tokens.next().unwrap_or("");
        if magic != "massflow-field" || version != "1" {
            return Err(Error::MalformedField(format!(
                "unrecognized header '{magic} {version}'"
            )));
        }
        let mut kind = None;
        let mut n_r = None;
        let mut n_theta = None;
        let mut n_phi = None;
        let mut inner = None;
        let mut outer = None;
        let mut direction = None;
        let mut cond = InnerCondition::Neumann;
        for tok in tokens {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| Error::MalformedField(format!("bad token '{tok}'")))?;
            match key {
                "kind" => {
                    kind = Some(match val {
                        "full" => DomainKind::FullExterior,
                        "half" => DomainKind::HalfExterior,
                        _ => return Err(Error::MalformedField(format!("bad kind '{val}'"))),
                    })
                }
                "n_r" => n_r = val.parse::<usize>().ok(),
                "n_theta" => n_theta = val.parse::<usize>().ok(),
                "n_phi" => n_phi = val.parse::<usize>().ok(),
                "inner" => inner = val.parse::<f64>().ok(),
                "outer" => outer = val.parse::<f64>().ok(),
                "direction" => {
                    let parts: Vec<f64> = val.split(',').filter_map(|s| s.parse().ok()).collect();
                    if parts.len() != 3 {
                        return Err(Error::MalformedField("bad direction".into()));
                    }
                    direction = Some([parts[0], parts[1], parts[2]]);
                }
                "inner_condition" => {
                    cond = match val {
                        "neumann" => InnerCondition::Neumann,
                        "dirichlet_linear" => InnerCondition::DirichletLinear,
                        _ => {
                            return Err(Error::MalformedField(format!(
                                "bad inner_condition '{val}'"
                            )))
                        }
                    }
                }
                _ => return Err(Error::MalformedField(format!("unknown key '{key}'"))),
            }
        }
        let missing = || Error::MalformedField("missing header field".into());
        let spec = DomainSpec {
            kind: kind.ok_or_else(missing)?,
            inner_radius: inner.ok_or_else(missing)?,
            outer_radius: outer.ok_or_else(missing)?,
            direction: direction.ok_or_else(missing)?,
            inner_condition: cond,
        };
        let resolution = Resolution::new(
            n_r.ok_or_else(missing)?,
            n_theta.ok_or_else(missing)?,
            n_phi.ok_or_else(missing)?,
        );
        let grid = Arc::new(build_grid(&spec, resolution)?);
        let mut values = Vec::with_capacity(grid.node_count());
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            values.push(
                line.parse::<f64>()
                    .map_err(|e| Error::MalformedField(format!("bad value '{line}': {e}")))?,
            );
        }
        if values.len() != grid.node_count() {
            return Err(Error::MalformedField(format!(
                "expected {} values, found {}",
                grid.node_count(),
                values.len()
            )));
        }
        Ok(DiscreteField::new(grid, values))
    }
}

/// Discrete residuals of the solved boundary-value problem.
#[derive(Clone, Copy, Debug)]
pub struct ResidualReport {
    /// max |A w| / (cell volume) over free rows — the pointwise-Laplacian
    /// scale of the interior equation residual.
    pub max_interior_residual: f64,
    /// max |∂_n w| over inner-shell nodes (zero when the inner condition is
    /// Dirichlet data).
    pub neumann_residual: f64,
    /// max |w − data| over Dirichlet nodes.
    pub dirichlet_residual: f64,
    /// min |∇w|_g over the σ ring (None on full grids); the problem requires
    /// it strictly positive.
    pub min_sigma_gradient: Option<f64>,
}

pub fn residual_report(
    field: &DiscreteField,
    chart: &MetricChart,
    system: &LinearSystem,
) -> Result<ResidualReport> {
    let grid = field.grid().clone();
    let applied = system.apply_to_grid_values(field.values());
    let mut max_interior: f64 = 0.0;
    for (row, &res) in applied.iter().enumerate() {
        max_interior = max_interior.max((res / system.row_volume[row]).abs());
    }

    let mut dirichlet: f64 = 0.0;
    for i in 0..grid.n_r() {
        for j in 0..grid.n_layers() {
            if grid.is_free(i, j) {
                continue;
            }
            for k in 0..grid.n_phi {
                let node = grid.index(i, j, k);
                dirichlet =
                    dirichlet.max((field.values()[node] - system.dirichlet_values[node]).abs());
            }
        }
    }

    let mut neumann: f64 = 0.0;
    if grid.spec.inner_condition == InnerCondition::Neumann {
        for j in 0..grid.n_layers() {
            if grid.class(0, j) != NodeClass::InnerBoundary {
                continue;
            }
            for k in 0..grid.n_phi {
                // one-sided second-order radial derivative of w against the
                // metric normal of the inner sphere
                let zeta = grid.zeta_layers[j];
                let phi = grid.phi(k);
                let sm = spherical_metric(chart, grid.radii[0], zeta, phi)?;
                let dw_r = onesided_derivative(
                    &grid.radii[0..3],
                    &[
                        field.value_at_node(0, j, k),
                        field.value_at_node(1, j, k),
                        field.value_at_node(2, j, k),
                    ],
                );
                // tangential derivatives contribute through G^{r zeta}, G^{r phi}
                let dw_z = centered_layer_derivative(field, 0, j, k);
                let dw_p = centered_phi_derivative(field, 0, j, k);
                let conormal =
                    sm.g_inv[0][0] * dw_r + sm.g_inv[0][1] * dw_z + sm.g_inv[0][2] * dw_p;
                let dn = conormal / sm.g_inv[0][0].sqrt();
                neumann = neumann.max(dn.abs());
            }
        }
    }

    let mut min_sigma: Option<f64> = None;
    if grid.is_half() {
        let j = grid.n_layers() - 1;
        let mut min_grad = f64::INFINITY;
        for i in 0..grid.n_r() {
            for k in 0..grid.n_phi {
                let p = grid.point(i, j, k);
                let jet = chart.jet(p)?;
                let wj = field.jet(p);
                min_grad = min_grad.min(crate::geometry::gradient_norm_of(&jet, &wj));
            }
        }
        min_sigma = Some(min_grad);
    }

    Ok(ResidualReport {
        max_interior_residual: max_interior,
        neumann_residual: neumann,
        dirichlet_residual: dirichlet,
        min_sigma_gradient: min_sigma,
    })
}

/// Derivative at xs[0] of the quadratic through (xs, ys).
fn onesided_derivative(xs: &[f64], ys: &[f64]) -> f64 {
    let (x0, x1, x2) = (xs[0], xs[1], xs[2]);
    let (y0, y1, y2) = (ys[0], ys[1], ys[2]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let d012 = (d12 - d01) / (x2 - x0);
    d01 + d012 * (x0 - x1)
}

fn centered_layer_derivative(field: &DiscreteField, i: usize, j: usize, k: usize) -> f64 {
    let grid = field.grid();
    let hi = (j + 1).min(grid.n_layers() - 1);
    let lo = j.saturating_sub(1);
    if hi == lo {
        return 0.0;
    }
    (field.value_at_node(i, hi, k) - field.value_at_node(i, lo, k))
        / (grid.zeta_layers[hi] - grid.zeta_layers[lo])
}

fn centered_phi_derivative(field: &DiscreteField, i: usize, j: usize, k: usize) -> f64 {
    let grid = field.grid();
    let n = grid.n_phi;
    let hi = (k + 1) % n;
    let lo = (k + n - 1) % n;
    (field.value_at_node(i, j, hi) - field.value_at_node(i, j, lo)) / (2.0 * grid.d_phi())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_grid() -> Arc<Grid> {
        let spec = DomainSpec::half(1.0, 16.0);
        Arc::new(build_grid(&spec, Resolution::new(16, 12, 24)).unwrap())
    }

    fn fill(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> f64) -> DiscreteField {
        let mut values = vec![0.0; grid.node_count()];
        for i in 0..grid.n_r() {
            for j in 0..grid.n_layers() {
                for k in 0..grid.n_phi {
                    values[grid.index(i, j, k)] =
                        f(grid.radii[i], grid.zeta_layers[j], grid.phi(k));
                }
            }
        }
        DiscreteField::new(grid.clone(), values)
    }

    #[test]
    fn reproduces_degree_four_polynomials_of_grid_coordinates() {
        let grid = test_grid();
        let poly = |r: f64, z: f64, p: f64| {
            1.0 + r * (2.0 - z) + 0.03 * r * r * z * z - 0.2 * z * z * z * z + 0.1 * p * r
                - 0.01 * p * p * z
        };
        let field = fill(&grid, poly);
        // phi values keep the 5-point window away from the periodic seam,
        // where a non-periodic test polynomial would be meaningless
        for (r, z, phi) in [(1.7, 0.43, 1.1), (3.3, 0.08, 2.4), (9.8, 0.77, 2.0)] {
            let (s, _, _, _) = field.spherical_jet(r, z, phi);
            let expect = poly(r, z, phi);
            assert!(
                (s[0] - expect).abs() < 1e-10 * expect.abs().max(1.0),
                "value {} vs {expect}",
                s[0]
            );
        }
    }

    #[test]
    fn cartesian_jet_of_height_function_is_exact() {
        // w = y3 = r * zeta is bilinear in the grid coordinates: its
        // interpolant and jets are exact.
        let grid = test_grid();
        let field = fill(&grid, |r, z, _| r * z);
        let p = Point::new(1.9, 0.8, 1.4);
        let jet = field.jet(p);
        assert!((jet.value - 1.4).abs() < 1e-12);
        assert!((jet.grad[0]).abs() < 1e-11);
        assert!((jet.grad[1]).abs() < 1e-11);
        assert!((jet.grad[2] - 1.0).abs() < 1e-11);
        for i in 0..3 {
            for j in 0..3 {
                assert!(jet.hess[i][j].abs() < 1e-9, "hess[{i}][{j}] = {}", jet.hess[i][j]);
            }
        }
    }

    #[test]
    fn cartesian_jet_matches_smooth_function() {
        // w = x1 * x3 (degree 2 in Cartesian, transcendental in phi)
        let grid = test_grid();
        let field = fill(&grid, |r, z, p| {
            let s = (1.0 - z * z).max(0.0).sqrt();
            (r * s * p.cos()) * (r * z)
        });
        let p = Point::new(2.1, 1.1, 1.3);
        let jet = field.jet(p);
        let c = p.coords();
        // x1 x3 is transcendental in (zeta, phi); the 5-point windows at this
        // resolution leave interpolation error around 1e-4 of scale
        assert!((jet.value - c[0] * c[2]).abs() < 1e-3);
        assert!((jet.grad[0] - c[2]).abs() < 1e-2, "{:?}", jet.grad);
        assert!((jet.grad[2] - c[0]).abs() < 1e-2);
        assert!((jet.hess[0][2] - 1.0).abs() < 5e-2, "{}", jet.hess[0][2]);
        assert!(jet.hess[1][1].abs() < 5e-2);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let grid = test_grid();
        let field = fill(&grid, |r, z, p| (0.1 * r + z).sin() + 0.001 * p);
        let text = field.to_text();
        let back = DiscreteField::from_text(&text).unwrap();
        assert_eq!(field.values(), back.values());
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn malformed_field_inputs_error() {
        assert!(DiscreteField::from_text("").is_err());
        assert!(DiscreteField::from_text("wrong 1 kind=full\n1.0\n").is_err());
        let grid = test_grid();
        let field = fill(&grid, |_, _, _| 1.0);
        let mut text = field.to_text();
        text.push_str("1.0\n");
        assert!(DiscreteField::from_text(&text).is_err());
    }
}
