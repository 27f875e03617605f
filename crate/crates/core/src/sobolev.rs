//! Discrete W^{1,p}_X machinery: cell-centered gradients, the anisotropic
//! Sobolev norm, Friedrichs mollification with zero-extension, the
//! mollifier approximation check and X-affine residuals.

use rayon::prelude::*;

use crate::error::{Result, XfgError};
use crate::geometry::BoxDomain;
use crate::grid::{ravel, unravel, ScalarField, Subdomain, VectorSampleField};
use crate::linalg::pairwise_sum;
use crate::vector_fields::VectorFieldFamily;

/// Cell-centered Euclidean gradient by corner-averaged forward differences
/// (second order at cell centers, exact on multilinear fields).
pub fn euclidean_gradient(u: &ScalarField) -> VectorSampleField {
    let grid = u.grid();
    let n = grid.dim();
    let vals = u.values();
    let data: Vec<f64> = (0..grid.cell_count())
        .into_par_iter()
        .flat_map_iter(|cell| {
            let corners = grid.cell_corner_nodes(cell);
            (0..n).map(move |axis| {
                corners
                    .iter()
                    .enumerate()
                    .map(|(bits, &node)| grid.corner_gradient_weight(bits, axis) * vals[node])
                    .sum::<f64>()
            })
        })
        .collect();
    VectorSampleField::from_values(grid.clone(), n, data).expect("gradient field is well formed")
}

/// Xu = C(cell center) Du per cell.
pub fn x_gradient(u: &ScalarField, family: &VectorFieldFamily) -> Result<VectorSampleField> {
    let grid = u.grid();
    if grid.dim() != family.n() {
        return Err(XfgError::argument("grid/family dimension mismatch"));
    }
    if !family.domain().contains_with_margin(grid.domain(), 0.0) {
        return Err(XfgError::Domain {
            point: grid.domain().lo.clone(),
            context: format!("grid box exceeds the domain of family {}", family.label()),
        });
    }
    let du = euclidean_gradient(u);
    let m = family.m();
    let n = family.n();
    let data: Vec<f64> = (0..grid.cell_count())
        .into_par_iter()
        .flat_map_iter(|cell| {
            let c = family.coefficient_matrix_unchecked(&grid.cell_center(cell));
            let g = du.get(cell);
            (0..m)
                .map(|j| (0..n).map(|i| c[(j, i)] * g[i]).sum::<f64>())
                .collect::<Vec<f64>>()
        })
        .collect();
    VectorSampleField::from_values(grid.clone(), m, data)
}

/// Midpoint-quadrature L^p norm of a nodal field over a subdomain
/// (cell values are corner averages, colocated with the gradient samples).
pub fn lp_norm_scalar(u: &ScalarField, p: f64, on: &Subdomain) -> f64 {
    let grid = u.grid();
    let vol = grid.cell_volume();
    let cells = on.cells(grid);
    let terms: Vec<f64> = cells
        .par_iter()
        .map(|&c| vol * u.cell_average(c).abs().powf(p))
        .collect();
    pairwise_sum(&terms).powf(1.0 / p)
}

/// L^p norm of one component of a cell field over a subdomain.
pub fn lp_norm_component(w: &VectorSampleField, j: usize, p: f64, on: &Subdomain) -> f64 {
    let grid = w.grid();
    let vol = grid.cell_volume();
    let cells = on.cells(grid);
    let terms: Vec<f64> = cells
        .par_iter()
        .map(|&c| vol * w.get(c)[j].abs().powf(p))
        .collect();
    pairwise_sum(&terms).powf(1.0 / p)
}

/// ||u||_p + sum_j ||X_j u||_p on the whole grid.
pub fn sobolev_x_norm(u: &ScalarField, family: &VectorFieldFamily, p: f64) -> Result<f64> {
    sobolev_x_norm_on(u, family, p, &Subdomain::whole(u.grid()))
}

/// The same norm restricted to a snapped subdomain.
pub fn sobolev_x_norm_on(
    u: &ScalarField,
    family: &VectorFieldFamily,
    p: f64,
    on: &Subdomain,
) -> Result<f64> {
    if p < 1.0 {
        return Err(XfgError::argument("sobolev norm needs p >= 1"));
    }
    let xu = x_gradient(u, family)?;
    let mut total = lp_norm_scalar(u, p, on);
    for j in 0..family.m() {
        total += lp_norm_component(&xu, j, p, on);
    }
    Ok(total)
}

/// A discrete spherically-symmetric bump kernel on a lattice with the given
/// spacings; weights are nonnegative and normalized to sum 1.
#[derive(Debug, Clone)]
pub struct Mollifier {
    eps: f64,
    offsets: Vec<Vec<isize>>,
    weights: Vec<f64>,
    identity: bool,
}

fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

impl Mollifier {
    pub fn for_lattice(spacings: &[f64], eps: f64) -> Result<Mollifier> {
        if eps <= 0.0 {
            return Err(XfgError::argument("mollifier radius must be positive"));
        }
        let radius: Vec<isize> = spacings
            .iter()
            .map(|h| (eps / h).ceil() as isize)
            .collect();
        let shape: Vec<usize> = radius.iter().map(|r| (2 * r + 1) as usize).collect();
        let count: usize = shape.iter().product();
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        for flat in 0..count {
            let multi = unravel(flat, &shape);
            let off: Vec<isize> = multi
                .iter()
                .zip(radius.iter())
                .map(|(m, r)| *m as isize - r)
                .collect();
            let r2: f64 = off
                .iter()
                .zip(spacings.iter())
                .map(|(z, h)| (*z as f64 * h) * (*z as f64 * h))
                .sum();
            let w = bump(r2.sqrt() / eps);
            if w > 0.0 {
                offsets.push(off);
                weights.push(w);
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let identity = offsets.len() == 1;
        Ok(Mollifier {
            eps,
            offsets,
            weights,
            identity,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// True when eps is below the lattice spacing and the kernel collapsed to
    /// a single point mass.
    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Discrete convolution with zero-extension outside the lattice.
    /// `shape` is sites per axis, `values` is site-major with `dim` components.
    fn convolve(&self, shape: &[usize], dim: usize, values: &[f64]) -> Vec<f64> {
        let sites: usize = shape.iter().product();
        let out: Vec<f64> = (0..sites)
            .into_par_iter()
            .flat_map_iter(|site| {
                let multi = unravel(site, shape);
                let mut acc = vec![0.0; dim];
                for (off, w) in self.offsets.iter().zip(self.weights.iter()) {
                    let mut src = Vec::with_capacity(shape.len());
                    let mut inside = true;
                    for a in 0..shape.len() {
                        let i = multi[a] as isize - off[a];
                        if i < 0 || i >= shape[a] as isize {
                            inside = false;
                            break;
                        }
                        src.push(i as usize);
                    }
                    if inside {
                        let flat = ravel(&src, shape);
                        for d in 0..dim {
                            acc[d] += w * values[flat * dim + d];
                        }
                    }
                }
                acc
            })
            .collect();
        out
    }
}

/// Mollifies a nodal field (zero-extension outside the box); also returns the
/// kernel so callers can surface the identity-kernel warning.
pub fn mollify_with_info(u: &ScalarField, eps: f64) -> Result<(ScalarField, Mollifier)> {
    let grid = u.grid();
    let moll = Mollifier::for_lattice(&grid.spacings(), eps)?;
    let values = moll.convolve(grid.res(), 1, u.values());
    Ok((ScalarField::from_values(grid.clone(), values)?, moll))
}

pub fn mollify(u: &ScalarField, eps: f64) -> Result<ScalarField> {
    mollify_with_info(u, eps).map(|(f, _)| f)
}

/// Componentwise mollification of a cell-sampled field on the cell lattice.
pub fn mollify_cells(w: &VectorSampleField, eps: f64) -> Result<VectorSampleField> {
    let grid = w.grid();
    let moll = Mollifier::for_lattice(&grid.spacings(), eps)?;
    let shape = grid.cells_per_axis();
    let values = moll.convolve(&shape, w.dim(), w.values());
    VectorSampleField::from_values(grid.clone(), w.dim(), values)
}

/// Per-eps interior W^{1,p}_X errors of mollify(u, eps) - u.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MollifierApproxReport {
    /// (eps, error) rows in the order given.
    pub rows: Vec<(f64, f64)>,
    /// Errors never increase by more than 5% from one eps to the next.
    pub monotone_within_noise: bool,
    /// How many kernels collapsed to the identity (eps below spacing).
    pub identity_kernels: usize,
}

/// Measures ||mollify(u, eps) - u||_{W^{1,p}_X(interior)} for each eps.
/// The interior box must sit inside the grid box with margin >= max(eps).
pub fn mollifier_approx_check(
    u: &ScalarField,
    family: &VectorFieldFamily,
    eps_list: &[f64],
    interior: &BoxDomain,
    p: f64,
) -> Result<MollifierApproxReport> {
    if eps_list.is_empty() {
        return Err(XfgError::argument("empty eps list"));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(XfgError::argument("eps list must be strictly decreasing"));
    }
    let max_eps = eps_list[0];
    let grid = u.grid();
    if !grid.domain().contains_with_margin(interior, max_eps) {
        return Err(XfgError::argument(format!(
            "interior box must be inside the grid box with margin >= {max_eps}"
        )));
    }
    let sub = Subdomain::snap(grid, interior)?;
    let mut rows = Vec::new();
    let mut identity_kernels = 0;
    for &eps in eps_list {
        let (smoothed, kernel) = mollify_with_info(u, eps)?;
        if kernel.is_identity() {
            identity_kernels += 1;
        }
        let diff = smoothed.sub(u)?;
        let err = sobolev_x_norm_on(&diff, family, p, &sub)?;
        rows.push((eps, err));
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 * 1.05 + 1e-300);
    Ok(MollifierApproxReport {
        rows,
        monotone_within_noise: monotone,
        identity_kernels,
    })
}

/// Best constant approximation of Xu in L^p: returns (c_star, residual).
/// For p = 2 the minimizer is the cell mean; other exponents run a small
/// descent on the strictly convex objective.
pub fn x_affine_residual(
    u: &ScalarField,
    family: &VectorFieldFamily,
    p: f64,
) -> Result<(Vec<f64>, f64)> {
    if p <= 1.0 {
        return Err(XfgError::argument("x_affine_residual needs p > 1"));
    }
    let xu = x_gradient(u, family)?;
    let grid = u.grid();
    let m = family.m();
    let cells = grid.cell_count();
    // measure-weighted mean (uniform cells: plain mean), exact for p = 2
    let mut mean = vec![0.0; m];
    for c in 0..cells {
        for (j, v) in xu.get(c).iter().enumerate() {
            mean[j] += v;
        }
    }
    for v in &mut mean {
        *v /= cells as f64;
    }
    let vol = grid.cell_volume();
    let objective = |c: &[f64]| -> f64 {
        let terms: Vec<f64> = (0..cells)
            .into_par_iter()
            .map(|cell| {
                let d2: f64 = xu
                    .get(cell)
                    .iter()
                    .zip(c.iter())
                    .map(|(w, ci)| (w - ci) * (w - ci))
                    .sum();
                vol * d2.powf(p / 2.0)
            })
            .collect();
        pairwise_sum(&terms)
    };
    let c_star = if (p - 2.0).abs() < 1e-14 {
        mean
    } else {
        minimize_constant(&xu, vol, p, mean)
    };
    Ok((c_star.clone(), objective(&c_star).powf(1.0 / p)))
}

/// Gradient descent with Barzilai-Borwein steps on
/// c -> sum vol * |Xu_c - c|^p, an m-dimensional strictly convex problem.
fn minimize_constant(xu: &VectorSampleField, vol: f64, p: f64, start: Vec<f64>) -> Vec<f64> {
    let m = start.len();
    let cells = xu.grid().cell_count();
    let grad = |c: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; m];
        for cell in 0..cells {
            let w = xu.get(cell);
            let d: Vec<f64> = w.iter().zip(c.iter()).map(|(a, b)| a - b).collect();
            let norm2: f64 = d.iter().map(|v| v * v).sum();
            if norm2 > 0.0 {
                let factor = -p * vol * norm2.powf(p / 2.0 - 1.0);
                for j in 0..m {
                    g[j] += factor * d[j];
                }
            }
        }
        g
    };
    let mut c = start;
    let mut g = grad(&c);
    let mut step = 1e-2;
    for _ in 0..500 {
        let gnorm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-14 {
            break;
        }
        let c_new: Vec<f64> = c.iter().zip(g.iter()).map(|(ci, gi)| ci - step * gi).collect();
        let g_new = grad(&c_new);
        // BB1 step from the last secant pair
        let mut sy = 0.0;
        let mut ss = 0.0;
        for j in 0..m {
            let s = c_new[j] - c[j];
            let y = g_new[j] - g[j];
            sy += s * y;
            ss += s * s;
        }
        step = if sy.abs() > 1e-300 { (ss / sy).abs().clamp(1e-12, 1e6) } else { step };
        c = c_new;
        g = g_new;
    }
    c
}
