//! Seven-point symmetric stencils on the voxel grid and a Jacobi-preconditioned
//! conjugate-gradient solver for them.
//!
//! Both the optical and thermal operators are assembled as
//! `diag·x − Σ g_face·x_neighbour` with nonnegative face conductances and
//! `diag ≥ Σ g_face`, i.e. symmetric M-matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Grid;
use crate::math::{dot, norm2};

#[derive(Debug, Clone)]
pub struct Stencil {
    pub grid: Grid,
    pub diag: Vec<f64>,
    /// `coupling[a][v]` is the conductance between `v` and `v + stride(a)`.
    pub coupling: [Vec<f64>; 3],
}

impl Stencil {
    pub fn new(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, diag: vec![0.0; n], coupling: [vec![0.0; n], vec![0.0; n], vec![0.0; n]] }
    }

    /// Couples `lower` and its `+axis` neighbour with conductance `g`.
    #[inline]
    pub fn connect(&mut self, axis: usize, lower: usize, g: f64) {
        let upper = lower + self.grid.stride(axis);
        self.coupling[axis][lower] += g;
        self.diag[lower] += g;
        self.diag[upper] += g;
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// y = A·x
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, &d), &xi) in y.iter_mut().zip(&self.diag).zip(x) {
            *yi = d * xi;
        }
        for axis in 0..3 {
            let s = self.grid.stride(axis);
            let n = self.len();
            if s >= n {
                continue;
            }
            let c = &self.coupling[axis][..n - s];
            for (v, &g) in c.iter().enumerate() {
                if g != 0.0 {
                    y[v] -= g * x[v + s];
                    y[v + s] -= g * x[v];
                }
            }
        }
    }

    /// Adds `value` to the diagonal entry of `v`.
    #[inline]
    pub fn add_diag(&mut self, v: usize, value: f64) {
        self.diag[v] += value;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Target ‖b − A·x‖ / ‖b‖.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A·x = b` in place, starting from the current contents of `x`.
pub fn pcg(a: &Stencil, b: &[f64], x: &mut [f64], opts: CgOptions) -> Result<CgStats> {
    crate::error::require(opts.tol > 0.0, "tolerance", opts.tol, "must be > 0")?;
    let n = a.len();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(CgStats::default());
    }
    let inv_diag: Vec<f64> = a.diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut iterations = 0usize;

    // Outer loop restarts from the true residual if the recurrence drifts.
    loop {
        a.apply(x, &mut q);
        for i in 0..n {
            r[i] = b[i] - q[i];
        }
        let mut rel = norm2(&r) / b_norm;
        if rel <= opts.tol {
            return Ok(CgStats { iterations, relative_residual: rel });
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence { iterations, residual: rel });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < opts.max_iter {
            a.apply(&p, &mut q);
            let pq = dot(&p, &q);
            if pq <= 0.0 {
                break;
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            iterations += 1;
            rel = norm2(&r) / b_norm;
            if rel <= opts.tol {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if rel > opts.tol && iterations >= opts.max_iter {
            return Err(Error::NonConvergence { iterations, residual: rel });
        }
        // Converged on the recurrence; the loop head re-checks the true residual.
        if rel > opts.tol {
            continue;
        }
        a.apply(x, &mut q);
        let true_rel = norm2(&b.iter().zip(&q).map(|(bi, qi)| bi - qi).collect::<Vec<_>>()) / b_norm;
        if true_rel <= opts.tol {
            return Ok(CgStats { iterations, relative_residual: true_rel });
        }
    }
}
