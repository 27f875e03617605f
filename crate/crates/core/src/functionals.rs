//! Local integral functionals F*(u, A) = int_A f(x, Xu) dx by midpoint
//! quadrature over snapped subdomains, with measure-property and
//! Jensen-mollification checks.

use rayon::prelude::*;

use crate::error::{Result, XfgError};
use crate::grid::{ScalarField, Subdomain, VectorSampleField};
use crate::integrands::{CheckReport, Integrand, IntegrandKind, Witness};
use crate::linalg::pairwise_sum;
use crate::sobolev::{mollify_cells, x_gradient};
use crate::vector_fields::VectorFieldFamily;

/// An integrand + family + exponent, the data of F*(u, A).
#[derive(Debug, Clone)]
pub struct FunctionalSpec {
    pub integrand: Integrand,
    pub family: VectorFieldFamily,
}

impl FunctionalSpec {
    pub fn new(integrand: Integrand, family: VectorFieldFamily) -> Result<Self> {
        if integrand.arity() != family.m() {
            return Err(XfgError::argument(format!(
                "integrand arity {} != family m {}",
                integrand.arity(),
                family.m()
            )));
        }
        Ok(FunctionalSpec { integrand, family })
    }

    pub fn exponent(&self) -> f64 {
        self.integrand.exponent()
    }
}

fn validate_subdomain(u: &ScalarField, a: &Subdomain) -> Result<()> {
    let cells = u.grid().cells_per_axis();
    for axis in 0..cells.len() {
        if a.cell_hi()[axis] > cells[axis] {
            return Err(XfgError::Domain {
                point: vec![],
                context: "subdomain exceeds the grid".to_string(),
            });
        }
    }
    Ok(())
}

/// Midpoint quadrature of f(x, Xu) over the cells of `a`.
pub fn evaluate_functional(spec: &FunctionalSpec, u: &ScalarField, a: &Subdomain) -> Result<f64> {
    validate_subdomain(u, a)?;
    let xu = x_gradient(u, &spec.family)?;
    Ok(quadrature_of_samples(&spec.integrand, &xu, a))
}

/// The same quadrature from a precomputed Xu field.
pub fn quadrature_of_samples(f: &Integrand, w: &VectorSampleField, a: &Subdomain) -> f64 {
    let grid = w.grid();
    let vol = grid.cell_volume();
    let cells = a.cells(grid);
    let terms: Vec<f64> = cells
        .par_iter()
        .map(|&c| vol * f.value(&grid.cell_center(c), w.get(c)))
        .collect();
    pairwise_sum(&terms)
}

/// Psi_p(u, A) = int_A |Xu|^p dx.
pub fn psi_p(u: &ScalarField, family: &VectorFieldFamily, p: f64, a: &Subdomain) -> Result<f64> {
    validate_subdomain(u, a)?;
    let xu = x_gradient(u, family)?;
    let grid = u.grid();
    let vol = grid.cell_volume();
    let cells = a.cells(grid);
    let terms: Vec<f64> = cells
        .par_iter()
        .map(|&c| {
            let s: f64 = xu.get(c).iter().map(|v| v * v).sum();
            vol * s.powf(p / 2.0)
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Verifies additivity over an exact partition, monotonicity of each part and
/// superadditivity of partial unions.
pub fn measure_property_check(
    spec: &FunctionalSpec,
    u: &ScalarField,
    a: &Subdomain,
    parts: &[Subdomain],
) -> Result<CheckReport> {
    validate_subdomain(u, a)?;
    if parts.is_empty() {
        return Err(XfgError::argument("empty partition"));
    }
    for p in parts {
        validate_subdomain(u, p)?;
    }
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            if !parts[i].disjoint(&parts[j]) {
                return Err(XfgError::argument(format!(
                    "partition parts {i} and {j} overlap"
                )));
            }
        }
    }
    let grid = u.grid();
    let mut covered: Vec<usize> = parts.iter().flat_map(|p| p.cells(grid)).collect();
    covered.sort_unstable();
    let expected = a.cells(grid);
    if covered != expected {
        return Err(XfgError::argument(
            "partition does not cover the subdomain exactly",
        ));
    }

    let xu = x_gradient(u, &spec.family)?;
    let total = quadrature_of_samples(&spec.integrand, &xu, a);
    let part_values: Vec<f64> = parts
        .iter()
        .map(|p| quadrature_of_samples(&spec.integrand, &xu, p))
        .collect();
    let scale = 1.0 + total.abs();

    let mut violations = 0usize;
    let mut worst = 0.0_f64;
    let mut tested = 0usize;
    let mut notes = Vec::new();

    // additivity
    let sum: f64 = pairwise_sum(&part_values);
    let r = (total - sum).abs();
    tested += 1;
    if r > 1e-10 * scale {
        violations += 1;
        notes.push(format!("additivity gap {r:e}"));
    }
    worst = worst.max(r);

    // monotonicity of each part, and superadditivity of partial unions
    let mut prefix = 0.0;
    for (i, v) in part_values.iter().enumerate() {
        tested += 1;
        let gap = v - total;
        if gap > 1e-12 * scale {
            violations += 1;
            notes.push(format!("monotonicity fails on part {i}: {gap:e}"));
        }
        worst = worst.max(gap.max(0.0));

        prefix += v;
        tested += 1;
        let sgap = prefix - total;
        if sgap > 1e-10 * scale {
            violations += 1;
            notes.push(format!("superadditivity fails on parts 0..={i}: {sgap:e}"));
        }
        worst = worst.max(sgap.max(0.0));
    }

    Ok(CheckReport {
        samples_tested: tested,
        violations,
        worst_residual: worst,
        worst_witness: None,
        passed: violations == 0,
        skipped_degenerate: 0,
        lic_warning: false,
        notes,
    })
}

/// Discrete Jensen inequality for mollified gradient fields:
/// quadrature(f(rho_eps * Xu), inner) <= quadrature(f(Xu), outer) + 1e-8 scale.
/// Requires an autonomous convex integrand and inner eroded from outer by eps.
pub fn jensen_mollification_check(
    spec: &FunctionalSpec,
    u: &ScalarField,
    eps: f64,
    inner: &Subdomain,
    outer: &Subdomain,
) -> Result<CheckReport> {
    if !matches!(spec.integrand.kind(), IntegrandKind::Autonomous(_)) {
        return Err(XfgError::argument(
            "jensen check needs an autonomous integrand",
        ));
    }
    validate_subdomain(u, inner)?;
    validate_subdomain(u, outer)?;
    let grid = u.grid();
    let inner_box = inner.as_box(grid);
    let outer_box = outer.as_box(grid);
    if !outer_box.contains_with_margin(&inner_box, eps) {
        return Err(XfgError::argument(format!(
            "inner subdomain must be eroded from the outer one by at least eps = {eps}"
        )));
    }
    let xu = x_gradient(u, &spec.family)?;
    let smoothed = mollify_cells(&xu, eps)?;
    let lhs = quadrature_of_samples(&spec.integrand, &smoothed, inner);
    let rhs = quadrature_of_samples(&spec.integrand, &xu, outer);
    let scale = 1.0 + rhs.abs();
    let residual = (lhs - rhs).max(0.0);
    let violation = lhs > rhs + 1e-8 * scale;
    Ok(CheckReport {
        samples_tested: 1,
        violations: usize::from(violation),
        worst_residual: residual,
        worst_witness: violation.then(|| Witness {
            x: vec![eps],
            arg: vec![lhs, rhs],
        }),
        passed: !violation,
        skipped_degenerate: 0,
        lic_warning: false,
        notes: vec![format!("lhs = {lhs:e}, rhs = {rhs:e}")],
    })
}
