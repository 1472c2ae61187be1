use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use super::grid::{Conductances, VoxelGrid};
use crate::{Error, Result};

/// Sparse conductance matrix of the voxel network, applied matrix-free.
pub(crate) struct Operator<'a> {
    nx: usize,
    ny: usize,
    nz: usize,
    c: &'a Conductances,
}

impl<'a> Operator<'a> {
    pub fn new(grid: &VoxelGrid, c: &'a Conductances) -> Self {
        Self { nx: grid.nx, ny: grid.ny, nz: grid.nz, c }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let (sy, sz) = (nx, nx * ny);
        let c = self.c;
        y.par_chunks_mut(sz).enumerate().for_each(|(k, slab)| {
            for j in 0..ny {
                for i in 0..nx {
                    let a = i + nx * (j + ny * k);
                    let mut v = c.diag[a] * x[a];
                    if i + 1 < nx {
                        v -= c.gx[a] * x[a + 1];
                    }
                    if i > 0 {
                        v -= c.gx[a - 1] * x[a - 1];
                    }
                    if j + 1 < ny {
                        v -= c.gy[a] * x[a + sy];
                    }
                    if j > 0 {
                        v -= c.gy[a - sy] * x[a - sy];
                    }
                    if k + 1 < nz {
                        v -= c.gz[a] * x[a + sz];
                    }
                    if k > 0 {
                        v -= c.gz[a - sz] * x[a - sz];
                    }
                    slab[i + nx * j] = v;
                }
            }
        });
    }
}

/// Jacobi smoother plus a piecewise-constant aggregation coarse space,
/// combined additively.
pub(crate) struct TwoLevel {
    inv_diag: Vec<f64>,
    aggregate: Vec<usize>,
    coarse: Cholesky<f64, Dyn>,
    n_coarse: usize,
}

const COARSE_TARGET: [usize; 3] = [20, 10, 4];

impl TwoLevel {
    pub fn new(grid: &VoxelGrid, c: &Conductances) -> Result<Self> {
        let dims = [grid.nx, grid.ny, grid.nz];
        let size: [usize; 3] = std::array::from_fn(|d| dims[d].div_ceil(COARSE_TARGET[d]).max(1));
        let nc: [usize; 3] = std::array::from_fn(|d| dims[d].div_ceil(size[d]));
        let n_coarse = nc[0] * nc[1] * nc[2];
        let mut aggregate = vec![0; grid.len()];
        for k in 0..grid.nz {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    aggregate[grid.index(i, j, k)] = i / size[0] + nc[0] * (j / size[1] + nc[1] * (k / size[2]));
                }
            }
        }
        let mut ac = DMatrix::<f64>::zeros(n_coarse, n_coarse);
        let mut link = |a: usize, b: usize, g: f64| {
            let (p, q) = (aggregate[a], aggregate[b]);
            if p != q && g != 0.0 {
                ac[(p, p)] += g;
                ac[(q, q)] += g;
                ac[(p, q)] -= g;
                ac[(q, p)] -= g;
            }
        };
        let (sy, sz) = (grid.nx, grid.nx * grid.ny);
        for k in 0..grid.nz {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let a = grid.index(i, j, k);
                    if i + 1 < grid.nx {
                        link(a, a + 1, c.gx[a]);
                    }
                    if j + 1 < grid.ny {
                        link(a, a + sy, c.gy[a]);
                    }
                    if k + 1 < grid.nz {
                        link(a, a + sz, c.gz[a]);
                    }
                }
            }
        }
        for (a, g) in c.boundary.iter().enumerate() {
            ac[(aggregate[a], aggregate[a])] += g;
        }
        let coarse = Cholesky::new(ac).ok_or_else(|| {
            Error::config("thermal network is singular: no heat path to ambient (is the convection coefficient zero?)")
        })?;
        let inv_diag = c.diag.iter().map(|d| 1.0 / d).collect();
        Ok(Self { inv_diag, aggregate, coarse, n_coarse })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let mut rc = DVector::<f64>::zeros(self.n_coarse);
        for (a, v) in r.iter().enumerate() {
            rc[self.aggregate[a]] += v;
        }
        let ec = self.coarse.solve(&rc);
        z.par_iter_mut().enumerate().for_each(|(a, zi)| {
            *zi = self.inv_diag[a] * r[a] + ec[self.aggregate[a]];
        });
    }
}

pub(crate) struct PcgOutcome {
    pub iterations: usize,
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for A x = b, starting from `x`.
pub(crate) fn solve(
    op: &Operator,
    pre: &TwoLevel,
    b: &[f64],
    x: &mut [f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<PcgOutcome> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(PcgOutcome { iterations: 0, history: vec![0.0] });
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    r.par_iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = vec![dot(&r, &r).sqrt() / b_norm];
    for it in 0..max_iterations {
        if *history.last().unwrap_or(&0.0) <= tolerance {
            // The recursive residual drifts from b - Ax; confirm with the true one
            // and restart from it if it is still too large.
            op.apply(x, &mut r);
            r.par_iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
            let true_residual = dot(&r, &r).sqrt() / b_norm;
            if true_residual <= tolerance {
                return Ok(PcgOutcome { iterations: it, history });
            }
            history.push(true_residual);
            pre.apply(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
        }
        op.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        history.push(dot(&r, &r).sqrt() / b_norm);
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    op.apply(x, &mut r);
    r.par_iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let residual = dot(&r, &r).sqrt() / b_norm;
    if residual <= tolerance {
        return Ok(PcgOutcome { iterations: max_iterations, history });
    }
    Err(Error::NoConvergence { solver: "thermal PCG", iterations: max_iterations, residual, history })
}
