//! The exterior boundary/asymptotic value problem: Δ_g w = 0 on a truncated
//! exterior region, Neumann on the inner sphere, w = 0 on the flat boundary
//! ring of a half-space grid, and Dirichlet asymptotic data w = α·x at the
//! truncation sphere.
//!
//! The grid lives in spherical coordinates (r, ζ = cosθ, φ): radii log-spaced
//! over [inner, outer], rings at the midpoints of uniform ζ cells (one-point
//! Gauss per cell) and a uniform periodic φ direction. The polar axis is a
//! natural boundary of the divergence-form operator — the ζ-flux coefficient
//! √G·G^{ζζ} carries the factor 1 − ζ², which vanishes on the pole faces —
//! so the grid needs no axis nodes. Half grids keep an explicit σ node ring
//! at ζ = 0 (the θ = π/2 ring), which carries the Dirichlet rows and the
//! Σ-boundary quadrature of the inequality assembly.

mod assemble;
mod field;
mod solve;

pub use assemble::{assemble, BoundaryValues, LinearSystem};
pub use field::{residual_report, DiscreteField, ResidualReport};
pub use solve::{solve, SolveOptions, SolveStats};

use crate::error::Error;
use crate::geometry::{DomainKind, Point};
use crate::Result;
use serde::{Deserialize, Serialize};

/// How the inner excision boundary is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerCondition {
    /// Zero metric-normal flux: the excision models a minimal boundary sphere.
    Neumann,
    /// Dirichlet asymptotic data on the inner sphere too: the "no excision"
    /// configuration for charts without minimal surfaces (the exact flat
    /// solutions pass through unperturbed).
    DirichletLinear,
}

/// Domain of a harmonic solve.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Asymptotic direction α of the linear data; forced to e₃ on half grids.
    pub direction: [f64; 3],
    pub inner_condition: InnerCondition,
}

impl DomainSpec {
    pub fn full(inner_radius: f64, outer_radius: f64, direction: [f64; 3]) -> Self {
        DomainSpec {
            kind: DomainKind::FullExterior,
            inner_radius,
            outer_radius,
            direction,
            inner_condition: InnerCondition::Neumann,
        }
    }

    pub fn half(inner_radius: f64, outer_radius: f64) -> Self {
        DomainSpec {
            kind: DomainKind::HalfExterior,
            inner_radius,
            outer_radius,
            direction: [0.0, 0.0, 1.0],
            inner_condition: InnerCondition::Neumann,
        }
    }

    pub fn with_inner_condition(mut self, c: InnerCondition) -> Self {
        self.inner_condition = c;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Resolution {
    pub fn new(n_r: usize, n_theta: usize, n_phi: usize) -> Self {
        Resolution { n_r, n_theta, n_phi }
    }

    pub fn doubled(&self) -> Self {
        Resolution {
            n_r: self.n_r * 2,
            n_theta: self.n_theta * 2,
            n_phi: self.n_phi * 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    Interior,
    InnerBoundary,
    SigmaBoundary,
    OuterBoundary,
}

/// Structured spherical grid with per-node classification.
#[derive(Clone, Debug)]
pub struct Grid {
    pub spec: DomainSpec,
    pub resolution: Resolution,
    /// Node radii, log-spaced inclusive of both ends.
    pub radii: Vec<f64>,
    /// Radial dual-cell faces at the node midpoints; `r_faces[i]..r_faces[i+1]`
    /// is the cell of node i, boundary nodes sitting on their outermost face.
    pub r_faces: Vec<f64>,
    /// Ring positions in ζ = cosθ, descending from the pole side; half grids
    /// carry the σ ring ζ = 0 as the final layer.
    pub zeta_layers: Vec<f64>,
    /// ζ cell faces, descending; the first face (and on full grids the last)
    /// sits at |ζ| = 1 where the flux coefficient vanishes.
    pub zeta_faces: Vec<f64>,
    pub n_phi: usize,
}

/// Builds the grid, validating the spec: resolution at least (16, 12, 24),
/// outer radius at least 8x the inner radius.
pub fn build_grid(spec: &DomainSpec, resolution: Resolution) -> Result<Grid> {
    if !(spec.inner_radius > 0.0)
        || !spec.outer_radius.is_finite()
        || spec.outer_radius < 8.0 * spec.inner_radius
    {
        return Err(Error::DegenerateDomain(format!(
            "need 0 < inner and outer >= 8*inner, got inner = {}, outer = {}",
            spec.inner_radius, spec.outer_radius
        )));
    }
    if resolution.n_r < 16 || resolution.n_theta < 12 || resolution.n_phi < 24 {
        return Err(Error::DegenerateDomain(format!(
            "resolution {resolution:?} below the (16, 12, 24) minimum"
        )));
    }
    let mut spec = *spec;
    let norm = crate::linalg::norm(&spec.direction);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateDomain("zero asymptotic direction".into()));
    }
    spec.direction = crate::linalg::scale(&spec.direction, 1.0 / norm);
    if spec.kind == DomainKind::HalfExterior {
        spec.direction = [0.0, 0.0, 1.0];
    }

    let n_r = resolution.n_r;
    let log_step = (spec.outer_radius / spec.inner_radius).ln() / (n_r - 1) as f64;
    let radii: Vec<f64> = (0..n_r)
        .map(|i| spec.inner_radius * (log_step * i as f64).exp())
        .collect();
    // Faces at the node midpoints, where the two-point difference quotients
    // are second-order accurate; boundary nodes sit on their outer faces.
    let mut r_faces = Vec::with_capacity(n_r + 1);
    r_faces.push(radii[0]);
    for i in 0..(n_r - 1) {
        r_faces.push(0.5 * (radii[i] + radii[i + 1]));
    }
    r_faces.push(radii[n_r - 1]);

    let half = spec.kind == DomainKind::HalfExterior;
    let n_theta = resolution.n_theta;
    let span = if half { 1.0 } else { 2.0 };
    let dz = span / n_theta as f64;
    let mut zeta_faces: Vec<f64> = (0..=n_theta).map(|j| 1.0 - j as f64 * dz).collect();
    zeta_faces[n_theta] = if half { 0.0 } else { -1.0 };
    let mut zeta_layers: Vec<f64> = (0..n_theta).map(|j| 1.0 - (j as f64 + 0.5) * dz).collect();
    if half {
        zeta_layers.push(0.0);
    }

    Ok(Grid {
        spec,
        resolution,
        radii,
        r_faces,
        zeta_layers,
        zeta_faces,
        n_phi: resolution.n_phi,
    })
}

impl Grid {
    pub fn is_half(&self) -> bool {
        self.spec.kind == DomainKind::HalfExterior
    }

    pub fn n_r(&self) -> usize {
        self.radii.len()
    }

    pub fn n_layers(&self) -> usize {
        self.zeta_layers.len()
    }

    pub fn node_count(&self) -> usize {
        self.n_r() * self.n_layers() * self.n_phi
    }

    /// Lexicographic (i, j, k) index; this is also the serialization order.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n_layers() + j) * self.n_phi + k
    }

    pub fn phi(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.n_phi as f64
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Point {
        let r = self.radii[i];
        let zeta = self.zeta_layers[j];
        let s = (1.0 - zeta * zeta).max(0.0).sqrt();
        let phi = self.phi(k);
        Point::new(r * s * phi.cos(), r * s * phi.sin(), r * zeta)
    }

    /// Every node belongs to exactly one class; the σ ring takes precedence
    /// at the corners it shares with the inner and outer shells.
    pub fn class(&self, i: usize, j: usize) -> NodeClass {
        if self.is_half() && j + 1 == self.n_layers() {
            NodeClass::SigmaBoundary
        } else if i + 1 == self.n_r() {
            NodeClass::OuterBoundary
        } else if i == 0 {
            NodeClass::InnerBoundary
        } else {
            NodeClass::Interior
        }
    }

    /// Nodes carrying unknowns: interior always, the inner shell when it is a
    /// Neumann boundary.
    pub fn is_free(&self, i: usize, j: usize) -> bool {
        match self.class(i, j) {
            NodeClass::Interior => true,
            NodeClass::InnerBoundary => self.spec.inner_condition == InnerCondition::Neumann,
            _ => false,
        }
    }

    /// Dual widths of the cell of node (i, j): (Δr, Δζ). The σ ring has zero
    /// ζ width (it sits on a face). Interior radial widths carry the
    /// r²-weighted normalization Δr = (f_up² − f_lo²)/(2 r_i), which balances
    /// the midpoint-face fluxes exactly on w = α·x over a flat chart while
    /// agreeing with f_up − f_lo to second order; the half-cells of the
    /// boundary shells keep their plain widths (their nodes sit on a face, so
    /// the weighted form would bias them at first order).
    pub fn dual_widths(&self, i: usize, j: usize) -> (f64, f64) {
        let (lo, up) = (self.r_faces[i], self.r_faces[i + 1]);
        let dr = if i == 0 || i + 1 == self.n_r() {
            up - lo
        } else {
            (up * up - lo * lo) / (2.0 * self.radii[i])
        };
        let dz = if j < self.resolution.n_theta {
            self.zeta_faces[j] - self.zeta_faces[j + 1]
        } else {
            0.0
        };
        (dr, dz)
    }

    pub fn d_phi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_phi as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_node_count_matches_resolution() {
        let spec = DomainSpec::full(1.0, 32.0, [0.0, 0.0, 1.0]);
        let grid = build_grid(&spec, Resolution::new(32, 24, 48)).unwrap();
        assert_eq!(grid.node_count(), 32 * 24 * 48);
        let mut inner = 0;
        let mut outer = 0;
        for i in 0..grid.n_r() {
            for j in 0..grid.n_layers() {
                match grid.class(i, j) {
                    NodeClass::InnerBoundary => inner += 1,
                    NodeClass::OuterBoundary => outer += 1,
                    NodeClass::SigmaBoundary => panic!("no sigma ring on a full grid"),
                    NodeClass::Interior => {}
                }
            }
        }
        assert_eq!(inner, 24);
        assert_eq!(outer, 24);
    }

    #[test]
    fn half_grid_has_sigma_ring_and_halved_span() {
        let spec = DomainSpec::half(1.0, 32.0);
        let grid = build_grid(&spec, Resolution::new(16, 12, 24)).unwrap();
        assert_eq!(grid.n_layers(), 13);
        assert_eq!(grid.zeta_layers[12], 0.0);
        assert_eq!(grid.class(5, 12), NodeClass::SigmaBoundary);
        assert_eq!(grid.class(0, 12), NodeClass::SigmaBoundary);
        assert!(grid.zeta_layers[0] < 1.0);
        let p = grid.point(3, 12, 0);
        assert_eq!(p.coords()[2], 0.0);
    }

    #[test]
    fn rejects_degenerate_specs() {
        let spec = DomainSpec::full(1.0, 7.0, [0.0, 0.0, 1.0]);
        assert!(build_grid(&spec, Resolution::new(16, 12, 24)).is_err());
        let spec = DomainSpec::full(1.0, 32.0, [0.0, 0.0, 1.0]);
        assert!(build_grid(&spec, Resolution::new(8, 12, 24)).is_err());
    }

    #[test]
    fn dual_cell_geometry_identities() {
        let spec = DomainSpec::full(0.5, 64.0, [0.0, 0.0, 1.0]);
        let grid = build_grid(&spec, Resolution::new(24, 12, 24)).unwrap();
        for i in 0..grid.n_r() {
            // faces bracket the node; interior widths obey the r^2-weighted
            // identity and stay close to the plain face gap
            assert!(grid.r_faces[i] <= grid.radii[i] && grid.radii[i] <= grid.r_faces[i + 1]);
            let (dr, _) = grid.dual_widths(i, 0);
            let plain = grid.r_faces[i + 1] - grid.r_faces[i];
            if i == 0 || i + 1 == grid.n_r() {
                assert_eq!(dr, plain);
            } else {
                let expect = (grid.r_faces[i + 1].powi(2) - grid.r_faces[i].powi(2))
                    / (2.0 * grid.radii[i]);
                assert_eq!(dr, expect);
                assert!((dr - plain).abs() < 0.05 * plain.max(1e-300));
            }
        }
        for j in 0..grid.resolution.n_theta {
            let mid = 0.5 * (grid.zeta_faces[j] + grid.zeta_faces[j + 1]);
            assert!((mid - grid.zeta_layers[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn half_grid_forces_vertical_direction() {
        let mut spec = DomainSpec::half(1.0, 16.0);
        spec.direction = [1.0, 0.0, 0.0];
        let grid = build_grid(&spec, Resolution::new(16, 12, 24)).unwrap();
        assert_eq!(grid.spec.direction, [0.0, 0.0, 1.0]);
    }
}
