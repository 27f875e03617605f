//! Energy minimization with Dirichlet data and the Gamma-convergence desk
//! experiments: convergence of minima for oscillating quadratic sequences and
//! pointwise-converging autonomous sequences.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, XfgError};
use crate::functionals::{evaluate_functional, quadrature_of_samples, FunctionalSpec};
use crate::grid::{Grid, ScalarField, Subdomain};
use crate::integrands::{CheckReport, Integrand, IntegrandKind, MatrixFieldFn, Witness};
use crate::linalg::{self, pairwise_sum};
use crate::sobolev::{lp_norm_scalar, sobolev_x_norm_on, x_gradient};
use crate::vector_fields::VectorFieldFamily;

/// Optional L^p pull toward a target field, lambda * int_A |u - target|^p.
/// Pins flat directions that Dirichlet data alone cannot see.
#[derive(Debug, Clone)]
pub struct Tether {
    pub lambda: f64,
    pub target: ScalarField,
}

/// A well-posed discrete minimization: spec + subdomain + Dirichlet trace.
/// `dirichlet` is a full-grid field; its values on the boundary nodes of `a`
/// are the trace, its interior values seed the iteration.
#[derive(Debug, Clone)]
pub struct EnergyProblem {
    pub spec: FunctionalSpec,
    pub a: Subdomain,
    pub dirichlet: ScalarField,
    pub tether: Option<Tether>,
}

impl EnergyProblem {
    pub fn new(
        spec: FunctionalSpec,
        a: Subdomain,
        dirichlet: ScalarField,
        tether: Option<Tether>,
    ) -> Result<Self> {
        let grid = dirichlet.grid();
        let cells = grid.cells_per_axis();
        for axis in 0..cells.len() {
            if a.cell_hi()[axis] > cells[axis] {
                return Err(XfgError::argument("subdomain exceeds the problem grid"));
            }
        }
        if let Some(t) = &tether {
            if t.lambda < 0.0 {
                return Err(XfgError::argument("tether lambda must be >= 0"));
            }
            if t.target.grid() != grid {
                return Err(XfgError::argument("tether target lives on a different grid"));
            }
        }
        Ok(EnergyProblem {
            spec,
            a,
            dirichlet,
            tether,
        })
    }

    /// Auto-tether rule: degenerate families get lambda = 1e-6 toward the
    /// Dirichlet extension unless the caller pinned a tether explicitly.
    fn resolved_tether(&self) -> Option<Tether> {
        if self.tether.is_some() {
            return self.tether.clone();
        }
        if self.family_degenerate_in_a() {
            return Some(Tether {
                lambda: 1e-6,
                target: self.dirichlet.clone(),
            });
        }
        None
    }

    fn family_degenerate_in_a(&self) -> bool {
        let grid = self.dirichlet.grid();
        self.a.cells(grid).iter().any(|&c| {
            let x = grid.cell_center(c);
            let cm = self.spec.family.coefficient_matrix_unchecked(&x);
            let sv = linalg::singular_values(&cm);
            sv[sv.len() - 1] <= VectorFieldFamily::default_tol(&cm)
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOpts {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
    /// Amplitude of a seeded random perturbation of the initial interior guess.
    pub init_jitter: f64,
}

impl Default for MinimizeOpts {
    fn default() -> Self {
        MinimizeOpts {
            max_iters: 50_000,
            grad_tol: 1e-10,
            seed: 0,
            init_jitter: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    ConjugateGradient,
    Descent,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub u_star: ScalarField,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub path: SolverPath,
    /// Effective tether used (after the degenerate-family default).
    pub lambda: f64,
}

struct ProblemGeometry {
    cells: Vec<usize>,
    free: Vec<usize>,
    free_mask: Vec<bool>,
    corner_weights: Vec<Vec<f64>>, // [bits][axis]
}

fn problem_geometry(grid: &Grid, a: &Subdomain) -> ProblemGeometry {
    let n = grid.dim();
    let cells = a.cells(grid);
    let (node_lo, node_hi) = a.node_range();
    let mut free = Vec::new();
    let mut free_mask = vec![false; grid.node_count()];
    for idx in 0..grid.node_count() {
        let multi = grid.node_multi(idx);
        let inside = (0..n).all(|ax| multi[ax] > node_lo[ax] && multi[ax] < node_hi[ax]);
        if inside {
            free.push(idx);
            free_mask[idx] = true;
        }
    }
    let corner_weights: Vec<Vec<f64>> = (0..(1usize << n))
        .map(|bits| (0..n).map(|ax| grid.corner_gradient_weight(bits, ax)).collect())
        .collect();
    ProblemGeometry {
        cells,
        free,
        free_mask,
        corner_weights,
    }
}

/// Per-cell data for the assembled quadratic form
/// u^T K u = sum_c vol <M_c grad u_c, grad u_c> + lambda sum_c vol (avg_c - t_c)^2.
struct QuadraticCells {
    corners: Vec<Vec<usize>>,
    matrices: Vec<Vec<f64>>, // n x n row-major
    targets: Vec<f64>,       // tether target cell averages
}

fn assemble_quadratic_cells(
    grid: &Grid,
    geo: &ProblemGeometry,
    family: &VectorFieldFamily,
    coeff: &MatrixFieldFn,
    tether_target: Option<&ScalarField>,
) -> Result<QuadraticCells> {
    let n = grid.dim();
    let data: Vec<(Vec<usize>, Vec<f64>, f64)> = geo
        .cells
        .par_iter()
        .map(|&cell| {
            let x = grid.cell_center(cell);
            let c = family.coefficient_matrix_unchecked(&x);
            let a = coeff(&x);
            let m = c.transpose() * a * c; // n x n
            let mut flat = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    flat[i * n + j] = m[(i, j)];
                }
            }
            let t = tether_target.map_or(0.0, |f| f.cell_average(cell));
            (grid.cell_corner_nodes(cell), flat, t)
        })
        .collect();
    let mut corners = Vec::with_capacity(data.len());
    let mut matrices = Vec::with_capacity(data.len());
    let mut targets = Vec::with_capacity(data.len());
    for (cs, m, t) in data {
        corners.push(cs);
        matrices.push(m);
        targets.push(t);
    }
    Ok(QuadraticCells {
        corners,
        matrices,
        targets,
    })
}

/// out = K u (full-length vectors), K from the quadratic cell data.
fn apply_quadratic(
    grid: &Grid,
    geo: &ProblemGeometry,
    qc: &QuadraticCells,
    lambda: f64,
    u: &[f64],
    out: &mut [f64],
) {
    let n = grid.dim();
    let vol = grid.cell_volume();
    let nc = 1usize << n;
    out.iter_mut().for_each(|v| *v = 0.0);
    for (ci, corners) in qc.corners.iter().enumerate() {
        let m = &qc.matrices[ci];
        let mut grad = [0.0_f64; 3];
        for bits in 0..nc {
            let uv = u[corners[bits]];
            for ax in 0..n {
                grad[ax] += geo.corner_weights[bits][ax] * uv;
            }
        }
        let mut mg = [0.0_f64; 3];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += m[i * n + j] * grad[j];
            }
            mg[i] = acc;
        }
        let avg = corners.iter().map(|&cn| u[cn]).sum::<f64>() / nc as f64;
        let tether_term = lambda * vol * avg / nc as f64;
        for bits in 0..nc {
            let mut acc = 0.0;
            for ax in 0..n {
                acc += mg[ax] * geo.corner_weights[bits][ax];
            }
            out[corners[bits]] += vol * acc + tether_term;
        }
    }
}

/// rhs vector r with r_v = lambda sum_c vol t_c / 2^n over incident cells.
fn quadratic_rhs(grid: &Grid, qc: &QuadraticCells, lambda: f64, len: usize) -> Vec<f64> {
    let n = grid.dim();
    let vol = grid.cell_volume();
    let nc = 1usize << n;
    let mut r = vec![0.0; len];
    if lambda == 0.0 {
        return r;
    }
    for (ci, corners) in qc.corners.iter().enumerate() {
        let w = lambda * vol * qc.targets[ci] / nc as f64;
        for &cn in corners {
            r[cn] += w;
        }
    }
    r
}

/// Minimizes the problem energy. Quadratic integrands with p = 2 go through a
/// matrix-free conjugate gradient solve with Dirichlet elimination; everything
/// else runs monotone first-order descent (Barzilai-Borwein trial step,
/// halving Armijo line search with sufficient decrease 1e-4).
pub fn minimize(problem: &EnergyProblem, opts: &MinimizeOpts) -> Result<MinimizeResult> {
    let grid = problem.dirichlet.grid().clone();
    let geo = problem_geometry(&grid, &problem.a);
    let tether = problem.resolved_tether();
    let lambda = tether.as_ref().map_or(0.0, |t| t.lambda);

    let mut u: Vec<f64> = problem.dirichlet.values().to_vec();
    if opts.init_jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for &idx in &geo.free {
            u[idx] += opts.init_jitter * (rng.gen::<f64>() * 2.0 - 1.0);
        }
    }

    let (iterations, converged, path) = match problem.spec.integrand.kind() {
        IntegrandKind::Quadratic(field) => {
            if (problem.spec.integrand.exponent() - 2.0).abs() > 1e-12 {
                return Err(XfgError::argument(
                    "the quadratic minimization path requires p = 2",
                ));
            }
            let field = field.clone();
            let qc = assemble_quadratic_cells(
                &grid,
                &geo,
                &problem.spec.family,
                &field,
                tether.as_ref().map(|t| &t.target),
            )?;
            let (it, ok) = cg_solve(&grid, &geo, &qc, lambda, &mut u, opts)?;
            (it, ok, SolverPath::ConjugateGradient)
        }
        _ => {
            let (it, ok) = descent_solve(problem, &grid, &geo, tether.as_ref(), &mut u, opts)?;
            (it, ok, SolverPath::Descent)
        }
    };

    let u_star = ScalarField::from_values(grid.clone(), u)?;
    let mut energy = evaluate_functional(&problem.spec, &u_star, &problem.a)?;
    if let Some(t) = &tether {
        energy += tether_energy(&grid, &geo, &u_star, t, problem.spec.exponent());
    }
    Ok(MinimizeResult {
        u_star,
        energy,
        iterations,
        converged,
        path,
        lambda,
    })
}

fn tether_energy(
    grid: &Grid,
    geo: &ProblemGeometry,
    u: &ScalarField,
    tether: &Tether,
    p: f64,
) -> f64 {
    let vol = grid.cell_volume();
    let terms: Vec<f64> = geo
        .cells
        .iter()
        .map(|&c| {
            let d = u.cell_average(c) - tether.target.cell_average(c);
            tether.lambda * vol * d.abs().powf(p)
        })
        .collect();
    pairwise_sum(&terms)
}

fn cg_solve(
    grid: &Grid,
    geo: &ProblemGeometry,
    qc: &QuadraticCells,
    lambda: f64,
    u: &mut [f64],
    opts: &MinimizeOpts,
) -> Result<(usize, bool)> {
    let len = u.len();
    let r_full = quadratic_rhs(grid, qc, lambda, len);

    // reduced rhs: b = r - K u_fixed restricted to the free nodes
    let mut u_fixed = u.to_vec();
    for &idx in &geo.free {
        u_fixed[idx] = 0.0;
    }
    let mut ku = vec![0.0; len];
    apply_quadratic(grid, geo, qc, lambda, &u_fixed, &mut ku);
    let b: Vec<f64> = geo.free.iter().map(|&i| r_full[i] - ku[i]).collect();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();

    // initial z from the supplied interior guess
    let mut z: Vec<f64> = geo.free.iter().map(|&i| u[i]).collect();
    let mut full = vec![0.0; len];
    let apply_reduced = |z: &[f64], full: &mut Vec<f64>, ku: &mut Vec<f64>| -> Vec<f64> {
        full.iter_mut().for_each(|v| *v = 0.0);
        for (k, &idx) in geo.free.iter().enumerate() {
            full[idx] = z[k];
        }
        apply_quadratic(grid, geo, qc, lambda, full, ku);
        geo.free.iter().map(|&i| ku[i]).collect()
    };

    let kz = apply_reduced(&z, &mut full, &mut ku);
    let mut res: Vec<f64> = b.iter().zip(kz.iter()).map(|(bi, ki)| bi - ki).collect();
    let mut p: Vec<f64> = res.clone();
    let mut rs_old: f64 = res.iter().map(|v| v * v).sum();
    let threshold = (opts.grad_tol * b_norm).max(1e-300);

    let mut iterations = 0;
    let mut converged = rs_old.sqrt() <= threshold;
    while !converged && iterations < opts.max_iters {
        let kp = apply_reduced(&p, &mut full, &mut ku);
        let p_norm2: f64 = p.iter().map(|v| v * v).sum();
        let pkp: f64 = p.iter().zip(kp.iter()).map(|(a, b)| a * b).sum();
        if pkp < -1e-12 * p_norm2.max(1e-300) {
            return Err(XfgError::Indefinite { curvature: pkp });
        }
        if pkp.abs() <= 1e-300 {
            break; // flat direction: nothing left to gain along p
        }
        let alpha = rs_old / pkp;
        for k in 0..z.len() {
            z[k] += alpha * p[k];
            res[k] -= alpha * kp[k];
        }
        let rs_new: f64 = res.iter().map(|v| v * v).sum();
        iterations += 1;
        if rs_new.sqrt() <= threshold {
            converged = true;
            break;
        }
        let beta = rs_new / rs_old;
        for k in 0..p.len() {
            p[k] = res[k] + beta * p[k];
        }
        rs_old = rs_new;
    }

    for (k, &idx) in geo.free.iter().enumerate() {
        u[idx] = z[k];
    }
    Ok((iterations, converged || b_norm == 0.0))
}

struct DescentWorkspace<'a> {
    problem: &'a EnergyProblem,
    grid: &'a Grid,
    geo: &'a ProblemGeometry,
    tether: Option<&'a Tether>,
}

impl<'a> DescentWorkspace<'a> {
    fn energy(&self, u: &[f64]) -> f64 {
        let grid = self.grid;
        let n = grid.dim();
        let nc = 1usize << n;
        let vol = grid.cell_volume();
        let p = self.problem.spec.exponent();
        let f = &self.problem.spec.integrand;
        let family = &self.problem.spec.family;
        let terms: Vec<f64> = self
            .geo
            .cells
            .par_iter()
            .map(|&cell| {
                let corners = grid.cell_corner_nodes(cell);
                let x = grid.cell_center(cell);
                let mut grad = [0.0_f64; 3];
                let mut avg = 0.0;
                for bits in 0..nc {
                    let uv = u[corners[bits]];
                    avg += uv;
                    for ax in 0..n {
                        grad[ax] += self.geo.corner_weights[bits][ax] * uv;
                    }
                }
                avg /= nc as f64;
                let c = family.coefficient_matrix_unchecked(&x);
                let m = family.m();
                let mut eta = [0.0_f64; 3];
                for j in 0..m {
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += c[(j, i)] * grad[i];
                    }
                    eta[j] = acc;
                }
                let mut e = vol * f.value(&x, &eta[..m]);
                if let Some(t) = self.tether {
                    let d = avg - t.target.cell_average(cell);
                    e += t.lambda * vol * d.abs().powf(p);
                }
                e
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// dE/du on the free nodes (full-length vector, zero elsewhere).
    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let grid = self.grid;
        let n = grid.dim();
        let nc = 1usize << n;
        let vol = grid.cell_volume();
        let p = self.problem.spec.exponent();
        let f = &self.problem.spec.integrand;
        let family = &self.problem.spec.family;
        let per_cell: Vec<(usize, Vec<f64>)> = self
            .geo
            .cells
            .par_iter()
            .map(|&cell| {
                let corners = grid.cell_corner_nodes(cell);
                let x = grid.cell_center(cell);
                let mut grad = [0.0_f64; 3];
                let mut avg = 0.0;
                for bits in 0..nc {
                    let uv = u[corners[bits]];
                    avg += uv;
                    for ax in 0..n {
                        grad[ax] += self.geo.corner_weights[bits][ax] * uv;
                    }
                }
                avg /= nc as f64;
                let c = family.coefficient_matrix_unchecked(&x);
                let m = family.m();
                let mut eta = [0.0_f64; 3];
                for j in 0..m {
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += c[(j, i)] * grad[i];
                    }
                    eta[j] = acc;
                }
                // d f / d eta by central differences
                let mut df = [0.0_f64; 3];
                let mut probe = eta;
                for j in 0..m {
                    let step = 1e-6 * (1.0 + eta[j].abs());
                    probe[j] = eta[j] + step;
                    let hi = f.value(&x, &probe[..m]);
                    probe[j] = eta[j] - step;
                    let lo = f.value(&x, &probe[..m]);
                    probe[j] = eta[j];
                    df[j] = (hi - lo) / (2.0 * step);
                }
                // chain to the Euclidean gradient: d = C^T df
                let mut d = [0.0_f64; 3];
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..m {
                        acc += c[(j, i)] * df[j];
                    }
                    d[i] = acc;
                }
                let tether_slope = self.tether.map_or(0.0, |t| {
                    let diff = avg - t.target.cell_average(cell);
                    t.lambda * vol * p * diff.abs().powf(p - 1.0) * diff.signum() / nc as f64
                });
                let contributions: Vec<f64> = (0..nc)
                    .map(|bits| {
                        let mut acc = 0.0;
                        for ax in 0..n {
                            acc += d[ax] * self.geo.corner_weights[bits][ax];
                        }
                        vol * acc + tether_slope
                    })
                    .collect();
                (cell, contributions)
            })
            .collect();
        let mut g = vec![0.0; u.len()];
        for (cell, contributions) in per_cell {
            let corners = grid.cell_corner_nodes(cell);
            for (bits, &node) in corners.iter().enumerate() {
                g[node] += contributions[bits];
            }
        }
        for (idx, gv) in g.iter_mut().enumerate() {
            if !self.geo.free_mask[idx] {
                *gv = 0.0;
            }
        }
        g
    }
}

fn descent_solve(
    problem: &EnergyProblem,
    grid: &Grid,
    geo: &ProblemGeometry,
    tether: Option<&Tether>,
    u: &mut Vec<f64>,
    opts: &MinimizeOpts,
) -> Result<(usize, bool)> {
    let ws = DescentWorkspace {
        problem,
        grid,
        geo,
        tether,
    };
    let mut energy = ws.energy(u);
    let mut g = ws.gradient(u);
    let mut prev_u: Option<Vec<f64>> = None;
    let mut prev_g: Option<Vec<f64>> = None;
    let mut iterations = 0;
    let mut converged = false;
    let scale = 1.0 + energy.abs();

    while iterations < opts.max_iters {
        // class integrands are nonnegative, so a negative energy means the
        // objective is outside the convex class and unbounded below
        if energy < -1e-9 * scale {
            return Err(XfgError::NonConvex {
                iteration: iterations,
            });
        }
        let g_inf = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if g_inf <= opts.grad_tol * (1.0 + energy.abs()) {
            converged = true;
            break;
        }
        let g_norm2: f64 = g.iter().map(|v| v * v).sum();

        // Barzilai-Borwein trial step from the last secant pair
        let mut step = match (&prev_u, &prev_g) {
            (Some(pu), Some(pg)) => {
                let mut sy = 0.0;
                let mut ss = 0.0;
                for &idx in &geo.free {
                    let s = u[idx] - pu[idx];
                    let y = g[idx] - pg[idx];
                    sy += s * y;
                    ss += s * s;
                }
                if sy > 1e-300 {
                    (ss / sy).clamp(1e-14, 1e10)
                } else {
                    1.0 / (1.0 + g_norm2.sqrt())
                }
            }
            _ => 1.0 / (1.0 + g_norm2.sqrt()),
        };

        prev_u = Some(u.clone());
        prev_g = Some(g.clone());

        // Armijo backtracking with sufficient decrease 1e-4
        let mut accepted = false;
        let mut trial = u.clone();
        for _halving in 0..70 {
            for &idx in &geo.free {
                trial[idx] = u[idx] - step * g[idx];
            }
            let e_trial = ws.energy(&trial);
            if e_trial <= energy - 1e-4 * step * g_norm2 {
                std::mem::swap(u, &mut trial);
                // accepted steps never increase the energy
                assert!(e_trial <= energy + 1e-12 * (1.0 + energy.abs()));
                energy = e_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // energy increases along -gradient even at vanishing steps
            return Err(XfgError::NonConvex {
                iteration: iterations,
            });
        }
        g = ws.gradient(u);
        iterations += 1;
    }
    Ok((iterations, converged))
}

/// (theta/alpha + (1-theta)/beta)^-1, the 1D homogenized coefficient of a
/// two-phase periodic medium; equals the limit minimum for unit Dirichlet
/// data on (0,1).
pub fn homogenization_oracle_1d(alpha: f64, beta: f64, theta: f64) -> Result<f64> {
    if alpha <= 0.0 || beta <= 0.0 {
        return Err(XfgError::argument("phase coefficients must be positive"));
    }
    if !(0.0 < theta && theta < 1.0) {
        return Err(XfgError::argument("volume fraction must lie in (0,1)"));
    }
    Ok(1.0 / (theta / alpha + (1.0 - theta) / beta))
}

/// A sequence (f_h) with its h indices and optional limit member.
pub struct SequenceSpec {
    pub h_list: Vec<usize>,
    pub members: Vec<Integrand>,
    pub limit: Option<Integrand>,
    /// Base period of the oscillation in x-units before the 1/h scaling;
    /// `Some` enables the resolution rule.
    pub oscillating_period: Option<f64>,
    pub label: String,
}

impl SequenceSpec {
    /// Quadratic members a_h(x) = base(frac(h x)) from a periodic base matrix
    /// field on the unit cell.
    pub fn oscillating_quadratic(
        base: MatrixFieldFn,
        m: usize,
        c0: f64,
        c1: f64,
        h_list: Vec<usize>,
        label: impl Into<String>,
    ) -> Result<Self> {
        validate_h_list(&h_list)?;
        let members = h_list
            .iter()
            .map(|&h| {
                let base = base.clone();
                let hf = h as f64;
                Integrand::quadratic(
                    m,
                    c0,
                    c1,
                    format!("oscillating h={h}"),
                    std::sync::Arc::new(move |x: &[f64]| {
                        let y: Vec<f64> = x.iter().map(|v| (v * hf).rem_euclid(1.0)).collect();
                        base(&y)
                    }),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SequenceSpec {
            h_list,
            members,
            limit: None,
            oscillating_period: Some(1.0),
            label: label.into(),
        })
    }

    /// 1D two-phase base: alpha on [0, theta), beta on [theta, 1).
    pub fn two_phase_1d(alpha: f64, beta: f64, theta: f64, h_list: Vec<usize>) -> Result<Self> {
        if alpha <= 0.0 || beta <= 0.0 || !(0.0 < theta && theta < 1.0) {
            return Err(XfgError::argument("bad two-phase parameters"));
        }
        let c0 = alpha.min(beta);
        let c1 = alpha.max(beta);
        let base: MatrixFieldFn = std::sync::Arc::new(move |y: &[f64]| {
            let v = if y[0] < theta { alpha } else { beta };
            nalgebra::DMatrix::from_element(1, 1, v)
        });
        Self::oscillating_quadratic(
            base,
            1,
            c0,
            c1,
            h_list,
            format!("two-phase({alpha},{beta};{theta})"),
        )
    }

    /// Autonomous members sharing declared (c0, c1, p) with their limit.
    pub fn autonomous(
        h_list: Vec<usize>,
        members: Vec<Integrand>,
        limit: Integrand,
        label: impl Into<String>,
    ) -> Result<Self> {
        validate_h_list(&h_list)?;
        if members.len() != h_list.len() {
            return Err(XfgError::argument("one member per h required"));
        }
        let p = limit.exponent();
        let bounds = limit.bounds();
        for m in members.iter().chain(std::iter::once(&limit)) {
            if !m.is_autonomous() {
                return Err(XfgError::argument("autonomous sequence members must be autonomous"));
            }
            if (m.exponent() - p).abs() > 1e-12 || m.bounds() != bounds {
                return Err(XfgError::argument(
                    "sequence members must share (c0, c1, p) with the limit",
                ));
            }
        }
        Ok(SequenceSpec {
            h_list,
            members,
            limit: Some(limit),
            oscillating_period: None,
            label: label.into(),
        })
    }
}

fn validate_h_list(h_list: &[usize]) -> Result<()> {
    if h_list.is_empty() {
        return Err(XfgError::argument("empty h list"));
    }
    if h_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(XfgError::argument("h list must be strictly increasing"));
    }
    if h_list[0] == 0 {
        return Err(XfgError::argument("h must be positive"));
    }
    Ok(())
}

/// The study problem template: family, grid, subdomain and data shared by all
/// members of the sequence.
#[derive(Debug, Clone)]
pub struct StudyProblem {
    pub family: VectorFieldFamily,
    pub grid: Grid,
    pub a: Subdomain,
    pub dirichlet: ScalarField,
    pub tether: Option<Tether>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ReferenceRule {
    /// A closed-form limit minimum (e.g. the 1D homogenization oracle).
    Oracle(f64),
    /// Minimize the limit integrand on the same grid.
    MinimizeLimit,
    /// Aitken extrapolation from the last three minima, reported as an
    /// estimate rather than ground truth.
    Extrapolate,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaStudyRow {
    pub h: usize,
    pub cells: usize,
    pub min_energy: f64,
    pub wx_norm: f64,
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaStudyReport {
    pub rows: Vec<GammaStudyRow>,
    pub reference: f64,
    pub reference_kind: ReferenceRule,
    /// Gaps settle: non-increasing within 10% noise and final gap below the
    /// threshold.
    pub converged: bool,
    /// Raised for lambda = 0 problems over families degenerate inside A;
    /// minima are reported, not certified, in that regime.
    pub flat_directions: bool,
    /// All minimizer norms obey the coercivity surrogate bound.
    pub equicoercive: bool,
    pub notes: Vec<String>,
}

/// Builds F*_h from each member, minimizes with shared data, and compares
/// minima against the reference limit.
pub fn gamma_min_study(
    seq: &SequenceSpec,
    prob: &StudyProblem,
    reference: ReferenceRule,
    opts: &MinimizeOpts,
    gap_threshold_rel: f64,
) -> Result<GammaStudyReport> {
    // resolution rule: >= 8 cells per oscillation period at the largest h
    if let Some(period) = seq.oscillating_period {
        let h_max = *seq.h_list.last().unwrap() as f64;
        let grid = &prob.grid;
        let a_box = prob.a.as_box(grid);
        for axis in 0..grid.dim() {
            let cells_per_unit = 1.0 / grid.spacing(axis);
            let cells_per_period = cells_per_unit * period / h_max;
            let _ = a_box;
            if cells_per_period < 8.0 {
                return Err(XfgError::Resolution {
                    h: h_max as usize,
                    cells_per_period,
                    required: 8.0,
                });
            }
        }
    }

    // class invariant: every member obeys the declared growth bounds
    let spec_box = prob.a.as_box(&prob.grid);
    let sample = crate::sampling::SampleSpec::new(
        crate::sampling::lattice_points(&spec_box, 5),
        crate::sampling::argument_battery(prob.family.m(), opts.seed, 16),
        opts.seed,
    );
    for (idx, member) in seq.members.iter().enumerate() {
        let report = crate::integrands::class_bounds_check(member, &sample, 1e-9)?;
        if !report.passed {
            return Err(XfgError::argument(format!(
                "sequence member {idx} violates its declared class bounds (worst residual {:e})",
                report.worst_residual
            )));
        }
    }

    let notes: Vec<String> = Vec::new();
    let solve = |integrand: &Integrand| -> Result<MinimizeResult> {
        let spec = FunctionalSpec::new(integrand.clone(), prob.family.clone())?;
        let problem = EnergyProblem::new(
            spec,
            prob.a.clone(),
            prob.dirichlet.clone(),
            prob.tether.clone(),
        )?;
        minimize(&problem, opts)
    };

    // independent h-problems run in parallel; rows keep h order
    let solved: Vec<Result<(usize, MinimizeResult, f64)>> = seq
        .h_list
        .par_iter()
        .zip(seq.members.par_iter())
        .map(|(&h, member)| {
            let r = solve(member)?;
            let wx = sobolev_x_norm_on(&r.u_star, &prob.family, member.exponent(), &prob.a)?;
            Ok((h, r, wx))
        })
        .collect();
    let mut results = Vec::new();
    for item in solved {
        results.push(item?);
    }

    let minima: Vec<f64> = results.iter().map(|(_, r, _)| r.energy).collect();
    let (reference_value, reference_kind) = match reference {
        ReferenceRule::Oracle(v) => (v, reference),
        ReferenceRule::MinimizeLimit => {
            let limit = seq.limit.as_ref().ok_or_else(|| {
                XfgError::argument("reference = limit minimum needs a limit integrand")
            })?;
            (solve(limit)?.energy, reference)
        }
        ReferenceRule::Extrapolate => (aitken(&minima), reference),
    };

    let lambda = results.first().map_or(0.0, |(_, r, _)| r.lambda);
    let flat_directions = lambda == 0.0 && {
        let grid = &prob.grid;
        prob.a.cells(grid).iter().any(|&c| {
            let x = grid.cell_center(c);
            let cm = prob.family.coefficient_matrix_unchecked(&x);
            let sv = linalg::singular_values(&cm);
            sv[sv.len() - 1] <= VectorFieldFamily::default_tol(&cm)
        })
    };

    let p = seq.members[0].exponent();
    let c0 = seq.members[0].bounds().0;
    let data_norm = {
        let g_norm = lp_norm_scalar(&prob.dirichlet, p, &prob.a);
        match &prob.tether {
            Some(t) if t.lambda > 0.0 => {
                g_norm + lp_norm_scalar(&t.target, p, &prob.a)
            }
            _ => {
                let vol = prob.a.volume(&prob.grid);
                let g_max = prob
                    .dirichlet
                    .values()
                    .iter()
                    .fold(0.0_f64, |a, v| a.max(v.abs()));
                g_norm + g_max * vol.powf(1.0 / p)
            }
        }
    };

    let mut rows = Vec::new();
    let mut equicoercive = true;
    for ((h, r, wx), _) in results.iter().zip(minima.iter()) {
        let e = r.energy;
        let mut bound = data_norm;
        if c0 > 0.0 {
            bound += prob.family.m() as f64 * (e / c0).powf(1.0 / p)
                + (e / c0).powf(1.0 / p) * prob.a.volume(&prob.grid);
        } else {
            bound = f64::INFINITY;
        }
        if let Some(t) = &prob.tether {
            if t.lambda > 0.0 {
                bound += (e / t.lambda).powf(1.0 / p);
            }
        }
        if *wx > bound * (1.0 + 1e-9) {
            equicoercive = false;
        }
        rows.push(GammaStudyRow {
            h: *h,
            cells: prob.a.cell_count(),
            min_energy: e,
            wx_norm: *wx,
            gap: (e - reference_value).abs(),
            iterations: r.iterations,
        });
    }

    let final_gap = rows.last().map_or(f64::INFINITY, |r| r.gap);
    let gaps_settle = rows
        .windows(2)
        .all(|w| w[1].gap <= w[0].gap * 1.10 + 1e-12 * (1.0 + reference_value.abs()));
    let converged =
        gaps_settle && final_gap <= gap_threshold_rel * (1.0 + reference_value.abs());

    Ok(GammaStudyReport {
        rows,
        reference: reference_value,
        reference_kind,
        converged,
        flat_directions,
        equicoercive,
        notes,
    })
}

/// Aitken delta-squared extrapolation from the last three values.
fn aitken(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return *values.last().unwrap_or(&f64::NAN);
    }
    let (e1, e2, e3) = (values[n - 3], values[n - 2], values[n - 1]);
    let denom = (e3 - e2) - (e2 - e1);
    if denom.abs() < 1e-300 {
        return e3;
    }
    e3 - (e3 - e2) * (e3 - e2) / denom
}

/// For autonomous sequences: F*_h(u, A) -> F_limit(u, A), monotonically beyond
/// the second member, with the final gap below `tol`.
pub fn pointwise_limit_functional_check(
    seq: &SequenceSpec,
    u: &ScalarField,
    family: &VectorFieldFamily,
    a: &Subdomain,
    tol: f64,
) -> Result<CheckReport> {
    let limit = seq
        .limit
        .as_ref()
        .ok_or_else(|| XfgError::argument("pointwise limit check needs a limit integrand"))?;
    if !limit.is_autonomous() || seq.members.iter().any(|m| !m.is_autonomous()) {
        return Err(XfgError::argument(
            "pointwise limit check needs autonomous members",
        ));
    }
    let xu = x_gradient(u, family)?;
    let limit_value = quadrature_of_samples(limit, &xu, a);
    let gaps: Vec<f64> = seq
        .members
        .iter()
        .map(|m| (quadrature_of_samples(m, &xu, a) - limit_value).abs())
        .collect();

    let mut violations = 0;
    let mut worst = 0.0_f64;
    let mut notes = Vec::new();
    for k in 2..gaps.len() {
        let excess = gaps[k] - gaps[k - 1];
        if excess > 1e-12 * (1.0 + limit_value.abs()) {
            violations += 1;
            notes.push(format!(
                "gap increased from h={} to h={}: {:e} -> {:e}",
                seq.h_list[k - 1],
                seq.h_list[k],
                gaps[k - 1],
                gaps[k]
            ));
        }
        worst = worst.max(excess.max(0.0));
    }
    let final_gap = *gaps.last().unwrap();
    if final_gap > tol {
        violations += 1;
        notes.push(format!("final gap {final_gap:e} above tol {tol:e}"));
    }
    worst = worst.max(final_gap);
    Ok(CheckReport {
        samples_tested: gaps.len(),
        violations,
        worst_residual: worst,
        worst_witness: Some(Witness {
            x: vec![*seq.h_list.last().unwrap() as f64],
            arg: vec![final_gap],
        }),
        passed: violations == 0,
        skipped_degenerate: 0,
        lic_warning: false,
        notes,
    })
}

/// Checks the quadratic pushforward of a limit Euclidean coefficient field:
/// a(x) symmetric and <a_e Pi xi, Pi xi> = <a C xi, C xi> on samples.
pub fn quadratic_limit_pushforward_check(
    a_e: &MatrixFieldFn,
    family: &VectorFieldFamily,
    spec: &crate::sampling::SampleSpec,
    tol: f64,
) -> Result<CheckReport> {
    let mut tested = 0;
    let mut violations = 0;
    let mut skipped = 0;
    let mut worst = 0.0_f64;
    let mut worst_witness: Option<Witness> = None;
    for x in &spec.points {
        let c = family.coefficient_matrix(x)?;
        let sv = linalg::singular_values(&c);
        if sv[sv.len() - 1] <= VectorFieldFamily::default_tol(&c) {
            skipped += 1;
            continue;
        }
        let a = match crate::integrands::quadratic_pushforward(a_e, family, x, 0.0) {
            Ok(a) => a,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let sym_gap = linalg::inf_norm(&(a.clone() - a.transpose()));
        let scale = linalg::inf_norm(&a).max(1.0);
        tested += 1;
        if sym_gap > tol * scale {
            violations += 1;
        }
        if sym_gap > worst {
            worst = sym_gap;
            worst_witness = Some(Witness {
                x: x.clone(),
                arg: vec![],
            });
        }
        let b = &c * c.transpose();
        let binv = linalg::cramer_inverse(&b).expect("non-degenerate sample");
        let proj = c.transpose() * binv * &c;
        let ae_x = a_e(x);
        for xi in &spec.args {
            if xi.len() != family.n() {
                continue;
            }
            let v = DVector::from_column_slice(xi);
            let pv = &proj * &v;
            let lhs = (&ae_x * &pv).dot(&pv);
            let cv = &c * &v;
            let rhs = (&a * &cv).dot(&cv);
            let r = (lhs - rhs).abs();
            tested += 1;
            if r > tol * (1.0 + lhs.abs()) {
                violations += 1;
            }
            if r > worst {
                worst = r;
                worst_witness = Some(Witness {
                    x: x.clone(),
                    arg: xi.clone(),
                });
            }
        }
    }
    Ok(CheckReport {
        samples_tested: tested,
        violations,
        worst_residual: worst,
        worst_witness,
        passed: violations == 0,
        skipped_degenerate: skipped,
        lic_warning: false,
        notes: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDomain;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn unit_grid(n: usize, res: usize) -> Grid {
        Grid::uniform(BoxDomain::unit(n), res).unwrap()
    }

    fn dirichlet_problem_1d(res: usize, coeff: MatrixFieldFn) -> EnergyProblem {
        let family = VectorFieldFamily::euclidean(1);
        let integrand = Integrand::quadratic(1, 1.0, 4.0, "a(x) eta^2", coeff).unwrap();
        let spec = FunctionalSpec::new(integrand, family).unwrap();
        let grid = unit_grid(1, res);
        let a = Subdomain::whole(&grid);
        let g = ScalarField::from_fn(grid, |x| x[0]).unwrap();
        EnergyProblem::new(spec, a, g, None).unwrap()
    }

    #[test]
    fn cg_minimizes_the_dirichlet_integral() {
        let problem = dirichlet_problem_1d(65, Arc::new(|_x: &[f64]| nalgebra::DMatrix::from_element(1, 1, 1.0)));
        let result = minimize(&problem, &MinimizeOpts::default()).unwrap();
        assert!(result.converged);
        assert_eq!(result.path, SolverPath::ConjugateGradient);
        assert_abs_diff_eq!(result.energy, 1.0, epsilon = 1e-8);
        // minimizer is the line u = x
        let grid = result.u_star.grid().clone();
        for i in 0..grid.node_count() {
            assert_abs_diff_eq!(result.u_star.values()[i], grid.node_coords(i)[0], epsilon = 1e-7);
        }
    }

    #[test]
    fn cg_two_phase_energy_is_the_harmonic_mean() {
        let coeff: MatrixFieldFn = Arc::new(|x: &[f64]| {
            let a = if x[0] < 0.5 { 1.0 } else { 4.0 };
            nalgebra::DMatrix::from_element(1, 1, a)
        });
        let problem = dirichlet_problem_1d(257, coeff);
        let result = minimize(&problem, &MinimizeOpts::default()).unwrap();
        // exact discrete minimum: 1 / sum(h / a_i) = harmonic mean = 1.6
        assert_abs_diff_eq!(result.energy, 1.6, epsilon = 1e-6);
    }

    #[test]
    fn grushin_quadratic_minimum_with_linear_data() {
        let family = VectorFieldFamily::grushin();
        let integrand = Integrand::quadratic_constant(nalgebra::DMatrix::identity(2, 2), 1.0, 1.0).unwrap();
        let spec = FunctionalSpec::new(integrand, family).unwrap();
        let grid = unit_grid(2, 33);
        let a = Subdomain::whole(&grid);
        let g = ScalarField::from_fn(grid, |x| x[0]).unwrap();
        let problem = EnergyProblem::new(spec, a, g, None).unwrap();
        let result = minimize(&problem, &MinimizeOpts::default()).unwrap();
        assert!(result.converged);
        assert_abs_diff_eq!(result.energy, 1.0, epsilon = 1e-6);
        assert_eq!(result.lambda, 0.0, "(0,1)^2 avoids the degenerate line");
    }

    #[test]
    fn descent_matches_cg_from_random_seeds() {
        // same energy through the general path, from jittered starts
        let family = VectorFieldFamily::grushin();
        let spec = FunctionalSpec::new(Integrand::power(2, 2.0), family).unwrap();
        let grid = unit_grid(2, 17);
        let a = Subdomain::whole(&grid);
        let g = ScalarField::from_fn(grid, |x| x[0]).unwrap();
        let problem = EnergyProblem::new(spec, a, g, None).unwrap();
        let mut energies = Vec::new();
        for seed in [1_u64, 7, 42] {
            let opts = MinimizeOpts {
                grad_tol: 1e-8,
                seed,
                init_jitter: 0.1,
                ..Default::default()
            };
            let r = minimize(&problem, &opts).unwrap();
            assert_eq!(r.path, SolverPath::Descent);
            assert!(r.converged, "descent did not converge for seed {seed}");
            energies.push(r.energy);
        }
        for e in &energies {
            assert_abs_diff_eq!(*e, 1.0, epsilon = 1e-4);
        }
        assert_abs_diff_eq!(energies[0], energies[1], epsilon = 1e-6);
        assert_abs_diff_eq!(energies[1], energies[2], epsilon = 1e-6);
    }

    #[test]
    fn descent_rejects_concave_integrands() {
        let family = VectorFieldFamily::euclidean(1);
        let bad = Integrand::autonomous(
            1,
            2.0,
            0.0,
            1.0,
            "-eta^2",
            Arc::new(|eta: &[f64]| -eta[0] * eta[0]),
        )
        .unwrap();
        let spec = FunctionalSpec::new(bad, family).unwrap();
        let grid = unit_grid(1, 17);
        let a = Subdomain::whole(&grid);
        let g = ScalarField::from_fn(grid, |x| x[0]).unwrap();
        let problem = EnergyProblem::new(spec, a, g, None).unwrap();
        match minimize(&problem, &MinimizeOpts::default()) {
            Err(XfgError::NonConvex { .. }) => {}
            other => panic!("expected non-convex diagnostic, got {other:?}"),
        }
    }

    #[test]
    fn quadratic_path_requires_p_two() {
        let family = VectorFieldFamily::euclidean(1);
        let mut integrand =
            Integrand::quadratic_constant(nalgebra::DMatrix::identity(1, 1), 1.0, 1.0).unwrap();
        integrand.0.exponent = 3.0;
        let spec = FunctionalSpec::new(integrand, family).unwrap();
        let grid = unit_grid(1, 9);
        let a = Subdomain::whole(&grid);
        let g = ScalarField::from_fn(grid, |x| x[0]).unwrap();
        let problem = EnergyProblem::new(spec, a, g, None).unwrap();
        assert!(minimize(&problem, &MinimizeOpts::default()).is_err());
    }

    #[test]
    fn oracle_values() {
        assert_abs_diff_eq!(homogenization_oracle_1d(1.0, 4.0, 0.5).unwrap(), 1.6, epsilon = 1e-15);
        assert_abs_diff_eq!(homogenization_oracle_1d(3.0, 3.0, 0.25).unwrap(), 3.0, epsilon = 1e-15);
        assert!(homogenization_oracle_1d(0.0, 1.0, 0.5).is_err());
        assert!(homogenization_oracle_1d(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn oscillating_study_reaches_the_oracle() {
        let seq = SequenceSpec::two_phase_1d(1.0, 4.0, 0.5, vec![2, 4, 8, 16]).unwrap();
        let family = VectorFieldFamily::euclidean(1);
        let grid = unit_grid(1, 257); // 256 cells: 16 periods * 16 cells
        let a = Subdomain::whole(&grid);
        let dirichlet = ScalarField::from_fn(grid.clone(), |x| x[0]).unwrap();
        let prob = StudyProblem {
            family,
            grid,
            a,
            dirichlet,
            tether: None,
        };
        let oracle = homogenization_oracle_1d(1.0, 4.0, 0.5).unwrap();
        let report = gamma_min_study(
            &seq,
            &prob,
            ReferenceRule::Oracle(oracle),
            &MinimizeOpts::default(),
            0.02,
        )
        .unwrap();
        assert!(report.converged, "rows: {:?}", report.rows);
        assert!(report.equicoercive);
        assert!(!report.flat_directions);
        for row in &report.rows {
            assert_abs_diff_eq!(row.min_energy, 1.6, epsilon = 1e-6);
        }
    }

    #[test]
    fn oscillating_study_refuses_under_resolution() {
        let seq = SequenceSpec::two_phase_1d(1.0, 4.0, 0.5, vec![2, 4, 8, 16, 32]).unwrap();
        let family = VectorFieldFamily::euclidean(1);
        let grid = unit_grid(1, 65); // 64 cells but h_max = 32 needs >= 256
        let a = Subdomain::whole(&grid);
        let dirichlet = ScalarField::from_fn(grid.clone(), |x| x[0]).unwrap();
        let prob = StudyProblem {
            family,
            grid,
            a,
            dirichlet,
            tether: None,
        };
        match gamma_min_study(
            &seq,
            &prob,
            ReferenceRule::Extrapolate,
            &MinimizeOpts::default(),
            0.02,
        ) {
            Err(XfgError::Resolution { .. }) => {}
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    fn scaled_power_member(m: usize, factor: f64) -> Integrand {
        Integrand::autonomous(
            m,
            2.0,
            1.0,
            2.0,
            format!("{factor} |eta|^2"),
            Arc::new(move |eta: &[f64]| factor * eta.iter().map(|v| v * v).sum::<f64>()),
        )
        .unwrap()
    }

    #[test]
    fn autonomous_study_gap_scales_like_one_over_h() {
        let h_list = vec![2, 4, 8, 16];
        let members: Vec<Integrand> = h_list
            .iter()
            .map(|&h| scaled_power_member(2, 1.0 + 1.0 / h as f64))
            .collect();
        let limit = scaled_power_member(2, 1.0);
        let seq = SequenceSpec::autonomous(h_list.clone(), members, limit, "J2").unwrap();

        let family = VectorFieldFamily::heisenberg();
        let grid = unit_grid(3, 7);
        let a = Subdomain::whole(&grid);
        let dirichlet = ScalarField::from_fn(grid.clone(), |x| x[0]).unwrap();
        let tether = Some(Tether {
            lambda: 1.0,
            target: dirichlet.clone(),
        });
        let prob = StudyProblem {
            family,
            grid,
            a,
            dirichlet,
            tether,
        };
        let opts = MinimizeOpts {
            grad_tol: 1e-9,
            ..Default::default()
        };
        let report = gamma_min_study(&seq, &prob, ReferenceRule::MinimizeLimit, &opts, 0.2).unwrap();
        assert!(report.converged, "rows: {:?}", report.rows);
        // u* = x1 for every member: gap_h = Psi(x1)/h = 1/h exactly
        for (row, &h) in report.rows.iter().zip(h_list.iter()) {
            assert_abs_diff_eq!(row.gap, 1.0 / h as f64, epsilon = 1e-4);
        }
        assert!(report.equicoercive);
    }

    #[test]
    fn pointwise_limit_check_scaling() {
        let h_list = vec![2, 4, 8, 16, 32];
        let members: Vec<Integrand> = h_list
            .iter()
            .map(|&h| scaled_power_member(2, 1.0 + 1.0 / h as f64))
            .collect();
        let limit = scaled_power_member(2, 1.0);
        let seq = SequenceSpec::autonomous(h_list, members, limit, "J2").unwrap();
        let family = VectorFieldFamily::heisenberg();
        let grid = unit_grid(3, 17);
        let u = ScalarField::from_fn(grid.clone(), |x| x[2]).unwrap();
        let a = Subdomain::whole(&grid);
        let report = pointwise_limit_functional_check(&seq, &u, &family, &a, 1e-2).unwrap();
        assert!(report.passed, "{:?}", report.notes);

        // constant sequence: all gaps at rounding level
        let h_list = vec![1, 2, 3];
        let members: Vec<Integrand> = (0..3).map(|_| scaled_power_member(2, 1.0)).collect();
        let seq =
            SequenceSpec::autonomous(h_list, members, scaled_power_member(2, 1.0), "const").unwrap();
        let report = pointwise_limit_functional_check(&seq, &u, &family, &a, 1e-14).unwrap();
        assert!(report.passed);
    }

    #[test]
    fn pushforward_limit_check_examples() {
        let heis = VectorFieldFamily::heisenberg();
        let a_e: MatrixFieldFn = Arc::new(|_x: &[f64]| nalgebra::DMatrix::identity(3, 3));
        let spec = crate::sampling::SampleSpec::standard(&BoxDomain::centered(3, 1.0), 3, 3);
        let report = quadratic_limit_pushforward_check(&a_e, &heis, &spec, 1e-10).unwrap();
        assert!(report.passed, "worst {:e}", report.worst_residual);

        let grushin = VectorFieldFamily::grushin();
        let a_e2: MatrixFieldFn = Arc::new(|_x: &[f64]| nalgebra::DMatrix::identity(2, 2));
        let spec2 = crate::sampling::SampleSpec::standard(&BoxDomain::centered(2, 1.0), 2, 3);
        let report = quadratic_limit_pushforward_check(&a_e2, &grushin, &spec2, 1e-10).unwrap();
        assert!(report.passed);
        assert!(report.skipped_degenerate > 0);
    }

    #[test]
    fn aitken_extrapolates_geometric_sequences() {
        // e_h = 5 + 2^-k
        let vals = [5.0 + 0.5, 5.0 + 0.25, 5.0 + 0.125];
        assert_abs_diff_eq!(aitken(&vals), 5.0, epsilon = 1e-12);
    }
}
