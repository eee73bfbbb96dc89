//! Jacobi-preconditioned conjugate gradients on the symmetric flux-form
//! system. Deterministic: fixed starting guess (the Dirichlet data field
//! restricted to the grid), serial reductions, row-parallel products whose
//! per-row sums do not depend on the thread count.

use super::field::DiscreteField;
use super::{assemble::BoundaryValues, LinearSystem};
use crate::error::Error;
use crate::Result;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Relative residual target ‖b − Ax‖/‖b‖ (absolute when b = 0).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-12,
            max_iter: 50_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = crate::quadrature::KahanSum::default();
    for i in 0..a.len() {
        acc.add(a[i] * b[i]);
    }
    acc.value()
}

/// Solve the assembled system, returning the field over the full grid (free
/// values from CG, Dirichlet nodes holding their data).
pub fn solve(
    system: &LinearSystem,
    bc: &BoundaryValues,
    opts: &SolveOptions,
) -> Result<(DiscreteField, SolveStats)> {
    let n = system.n_free();
    let grid = system.grid.clone();
    let mut scatter = vec![0.0; grid.node_count()];

    // start from the boundary-data field restricted to the grid
    let mut x: Vec<f64> = system
        .free_nodes
        .iter()
        .map(|&node| {
            let (rest, k) = (node / grid.n_phi, node % grid.n_phi);
            let (i, j) = (rest / grid.n_layers(), rest % grid.n_layers());
            match bc {
                BoundaryValues::AsymptoticLinear => {
                    crate::linalg::dot(&grid.spec.direction, &grid.point(i, j, k).coords())
                }
                BoundaryValues::Field(f) => f.value(grid.point(i, j, k)),
            }
        })
        .collect();

    let b = system.rhs();
    let b_norm = dot(b, b).sqrt();
    let target = if b_norm > 0.0 {
        opts.tol * b_norm
    } else {
        opts.tol
    };

    let diag = system.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut ax = vec![0.0; n];
    system.matvec(&x, &mut scatter, &mut ax);
    let mut r: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
    let mut z: Vec<f64> = (0..n).map(|i| inv_diag[i] * r[i]).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res_norm = dot(&r, &r).sqrt();

    let mut best = res_norm;
    let mut since_best = 0usize;
    let mut iterations = 0usize;
    let mut ap = vec![0.0; n];

    while res_norm > target {
        if iterations >= opts.max_iter {
            return Err(Error::MaxIterations {
                max_iter: opts.max_iter,
                residual: res_norm / b_norm.max(1e-300),
            });
        }
        system.matvec(&p, &mut scatter, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::SolverStagnated {
                iterations,
                residual: res_norm / b_norm.max(1e-300),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res_norm = dot(&r, &r).sqrt();
        iterations += 1;
        if res_norm < 0.9 * best {
            best = res_norm;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > 1500 {
                return Err(Error::SolverStagnated {
                    iterations,
                    residual: res_norm / b_norm.max(1e-300),
                });
            }
        }
    }

    let mut values = system.dirichlet_values.clone();
    for (row, &node) in system.free_nodes.iter().enumerate() {
        values[node] = x[row];
    }
    Ok((
        DiscreteField::new(grid, values),
        SolveStats {
            iterations,
            relative_residual: res_norm / b_norm.max(1e-300),
        },
    ))
}
