//! Finite-difference metric jets: the cross-check oracle for the analytic
//! derivative path. Fourth-order central stencils, switching to one-sided
//! stencils in the y₃ direction near the boundary of a half-space chart.

use super::{MetricField, MetricJet2, Point};
use crate::linalg::Mat3;
use crate::Result;

struct Stencil {
    offsets: &'static [i32],
    weights: &'static [f64],
}

const D1_CENTRAL: Stencil = Stencil {
    offsets: &[-2, -1, 1, 2],
    weights: &[1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0],
};

const D2_CENTRAL: Stencil = Stencil {
    offsets: &[-2, -1, 0, 1, 2],
    weights: &[
        -1.0 / 12.0,
        16.0 / 12.0,
        -30.0 / 12.0,
        16.0 / 12.0,
        -1.0 / 12.0,
    ],
};

const D1_FORWARD: Stencil = Stencil {
    offsets: &[0, 1, 2, 3, 4],
    weights: &[
        -25.0 / 12.0,
        48.0 / 12.0,
        -36.0 / 12.0,
        16.0 / 12.0,
        -3.0 / 12.0,
    ],
};

const D2_FORWARD: Stencil = Stencil {
    offsets: &[0, 1, 2, 3, 4, 5],
    weights: &[
        45.0 / 12.0,
        -154.0 / 12.0,
        214.0 / 12.0,
        -156.0 / 12.0,
        61.0 / 12.0,
        -10.0 / 12.0,
    ],
};

fn shifted(p: Point, axis: usize, offset: i32, h: f64) -> Point {
    let mut c = p.coords();
    c[axis] += offset as f64 * h;
    Point(c)
}

/// True when central stencils in direction 2 would cross y₃ = 0.
fn needs_one_sided(p: Point, h: f64, half: bool) -> bool {
    half && p.coords()[2] < 2.0 * h + 1e-14
}

fn apply_1d(
    field: &dyn MetricField,
    p: Point,
    axis: usize,
    stencil: &Stencil,
    h: f64,
    order: u32,
) -> Mat3 {
    let mut acc = [[0.0; 3]; 3];
    for (o, w) in stencil.offsets.iter().zip(stencil.weights) {
        let g = field.components(shifted(p, axis, *o, h));
        for i in 0..3 {
            for j in 0..3 {
                acc[i][j] += w * g[i][j];
            }
        }
    }
    let scale = h.powi(order as i32);
    for row in acc.iter_mut() {
        for v in row.iter_mut() {
            *v /= scale;
        }
    }
    acc
}

fn apply_cross(
    field: &dyn MetricField,
    p: Point,
    axis_a: usize,
    sa: &Stencil,
    axis_b: usize,
    sb: &Stencil,
    h: f64,
) -> Mat3 {
    let mut acc = [[0.0; 3]; 3];
    for (oa, wa) in sa.offsets.iter().zip(sa.weights) {
        for (ob, wb) in sb.offsets.iter().zip(sb.weights) {
            let g = field.components(shifted(shifted(p, axis_a, *oa, h), axis_b, *ob, h));
            let w = wa * wb;
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += w * g[i][j];
                }
            }
        }
    }
    for row in acc.iter_mut() {
        for v in row.iter_mut() {
            *v /= h * h;
        }
    }
    acc
}

pub fn finite_difference_jet(
    field: &dyn MetricField,
    p: Point,
    h: f64,
    half: bool,
) -> Result<MetricJet2> {
    let one_sided = needs_one_sided(p, h, half);
    let d1 = |axis: usize| -> &'static Stencil {
        if axis == 2 && one_sided {
            &D1_FORWARD
        } else {
            &D1_CENTRAL
        }
    };
    let g = field.components(p);
    let mut dg = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        dg[k] = apply_1d(field, p, k, d1(k), h, 1);
    }
    let mut ddg = [[[[0.0; 3]; 3]; 3]; 3];
    for k in 0..3 {
        let diag = if k == 2 && one_sided {
            &D2_FORWARD
        } else {
            &D2_CENTRAL
        };
        ddg[k][k] = apply_1d(field, p, k, diag, h, 2);
    }
    for k in 0..3 {
        for l in (k + 1)..3 {
            let cross = apply_cross(field, p, k, d1(k), l, d1(l), h);
            ddg[k][l] = cross;
            ddg[l][k] = cross;
        }
    }
    MetricJet2::from_arrays(g, dg, ddg, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::charts::SchwarzschildIsotropicField;

    fn max_jet_gap(h: f64) -> f64 {
        let field = SchwarzschildIsotropicField { mass: 1.0 };
        let p = Point::new(1.7, -2.1, 0.9);
        let exact = MetricJet2::from_component_jets(&field.component_jets(p), p).unwrap();
        let fd = finite_difference_jet(&field, p, h, false).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((fd.dg[k][i][j] - exact.dg[k][i][j]).abs());
                    for l in 0..3 {
                        worst = worst.max((fd.ddg[k][l][i][j] - exact.ddg[k][l][i][j]).abs());
                    }
                }
            }
        }
        worst
    }

    #[test]
    fn fourth_order_convergence_to_analytic_jets() {
        let coarse = max_jet_gap(2e-2);
        let fine = max_jet_gap(1e-2);
        let order = (coarse / fine).log2();
        assert!(
            order >= 3.5,
            "observed order {order} (coarse {coarse:.3e}, fine {fine:.3e})"
        );
    }

    #[test]
    fn one_sided_jets_finite_on_boundary() {
        let field = SchwarzschildIsotropicField { mass: 1.0 };
        let p = Point::new(1.3, 0.4, 0.0);
        let fd = finite_difference_jet(&field, p, 1e-2, true).unwrap();
        let exact = MetricJet2::from_component_jets(&field.component_jets(p), p).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert!(fd.dg[k][i][j].is_finite());
                    assert!((fd.dg[k][i][j] - exact.dg[k][i][j]).abs() < 1e-6);
                }
            }
        }
    }
}
