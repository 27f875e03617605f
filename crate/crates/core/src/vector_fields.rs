//! Families of vector fields as coefficient-matrix fields, and the pointwise
//! linear algebra built on them: Gram matrices, inverses, pseudo-inverses,
//! horizontal projections and degeneracy scanning.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Result, XfgError};
use crate::expr::Expr;
use crate::geometry::{BoxDomain, MAX_DIM};
use crate::grid::Grid;
use crate::linalg;

pub type CoeffFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Euclidean,
    Grushin,
    Heisenberg,
    Custom,
}

/// m row vector fields on an n-box, embodied by x -> C(x) (m x n).
#[derive(Clone)]
pub struct VectorFieldFamily {
    m: usize,
    n: usize,
    domain: BoxDomain,
    kind: FamilyKind,
    coeff: CoeffFn,
    lipschitz_hint: Option<f64>,
    label: String,
}

impl fmt::Debug for VectorFieldFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFieldFamily")
            .field("label", &self.label)
            .field("m", &self.m)
            .field("n", &self.n)
            .field("domain", &self.domain)
            .finish()
    }
}

const DEFAULT_HALF_WIDTH: f64 = 8.0;

impl VectorFieldFamily {
    /// X = D, C(x) = I_n.
    pub fn euclidean(n: usize) -> Self {
        Self::euclidean_on(n, BoxDomain::centered(n, DEFAULT_HALF_WIDTH))
    }

    pub fn euclidean_on(n: usize, domain: BoxDomain) -> Self {
        assert!(n >= 1 && n <= MAX_DIM && domain.dim() == n);
        VectorFieldFamily {
            m: n,
            n,
            domain,
            kind: FamilyKind::Euclidean,
            coeff: Arc::new(move |_x| DMatrix::identity(n, n)),
            lipschitz_hint: Some(0.0),
            label: format!("euclidean({n})"),
        }
    }

    /// X_1 = d/dx1, X_2 = x1 d/dx2 on R^2.
    pub fn grushin() -> Self {
        Self::grushin_on(BoxDomain::centered(2, DEFAULT_HALF_WIDTH))
    }

    pub fn grushin_on(domain: BoxDomain) -> Self {
        assert!(domain.dim() == 2);
        VectorFieldFamily {
            m: 2,
            n: 2,
            domain,
            kind: FamilyKind::Grushin,
            coeff: Arc::new(|x| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, x[0]])),
            lipschitz_hint: Some(1.0),
            label: "grushin".to_string(),
        }
    }

    /// X_1 = d/dx1 - (x2/2) d/dx3, X_2 = d/dx2 + (x1/2) d/dx3 on R^3.
    pub fn heisenberg() -> Self {
        Self::heisenberg_on(BoxDomain::centered(3, DEFAULT_HALF_WIDTH))
    }

    pub fn heisenberg_on(domain: BoxDomain) -> Self {
        assert!(domain.dim() == 3);
        VectorFieldFamily {
            m: 2,
            n: 3,
            domain,
            kind: FamilyKind::Heisenberg,
            coeff: Arc::new(|x| {
                DMatrix::from_row_slice(2, 3, &[1.0, 0.0, -x[1] / 2.0, 0.0, 1.0, x[0] / 2.0])
            }),
            lipschitz_hint: Some(0.5),
            label: "heisenberg".to_string(),
        }
    }

    /// Entries given as expressions over `x1..xn`.
    pub fn custom(
        m: usize,
        n: usize,
        domain: BoxDomain,
        entries: Vec<Vec<Expr>>,
        lipschitz_hint: Option<f64>,
    ) -> Result<Self> {
        if n != domain.dim() || n > MAX_DIM {
            return Err(XfgError::argument("custom family: bad ambient dimension"));
        }
        if m == 0 || m > n {
            return Err(XfgError::argument("custom family needs 1 <= m <= n"));
        }
        if entries.len() != m || entries.iter().any(|row| row.len() != n) {
            return Err(XfgError::argument("custom family: coefficient shape must be m x n"));
        }
        let label = format!("custom({m}x{n})");
        let coeff: CoeffFn = Arc::new(move |x| {
            DMatrix::from_fn(entries.len(), entries[0].len(), |j, i| entries[j][i].eval(x))
        });
        Ok(VectorFieldFamily {
            m,
            n,
            domain,
            kind: FamilyKind::Custom,
            coeff,
            lipschitz_hint,
            label,
        })
    }

    /// Arbitrary closure-backed family, used by tests and desk experiments.
    pub fn from_fn(
        m: usize,
        n: usize,
        domain: BoxDomain,
        label: impl Into<String>,
        coeff: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        VectorFieldFamily {
            m,
            n,
            domain,
            kind: FamilyKind::Custom,
            coeff: Arc::new(coeff),
            lipschitz_hint: None,
            label: label.into(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    /// C(x). Errors when x is outside the domain box.
    pub fn coefficient_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if !self.domain.contains(x) {
            return Err(XfgError::Domain {
                point: x.to_vec(),
                context: format!("of family {}", self.label),
            });
        }
        Ok(self.coefficient_matrix_unchecked(x))
    }

    /// C(x) without the domain test; callers on grid loops validate the box once.
    pub fn coefficient_matrix_unchecked(&self, x: &[f64]) -> DMatrix<f64> {
        (self.coeff)(x)
    }

    /// Scale-aware default degeneracy tolerance: 1e-10 * ||C(x)||_inf.
    pub fn default_tol(c: &DMatrix<f64>) -> f64 {
        1e-10 * linalg::inf_norm(c)
    }

    pub fn sigma_min(&self, x: &[f64]) -> Result<f64> {
        let c = self.coefficient_matrix(x)?;
        let sv = linalg::singular_values(&c);
        Ok(sv[sv.len() - 1])
    }

    /// B(x) = C(x) C(x)^T.
    pub fn gram_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let c = self.coefficient_matrix(x)?;
        Ok(&c * c.transpose())
    }

    fn checked_c(&self, x: &[f64], tol: f64) -> Result<DMatrix<f64>> {
        let c = self.coefficient_matrix(x)?;
        let sv = linalg::singular_values(&c);
        let smin = sv[sv.len() - 1];
        if smin <= tol {
            return Err(XfgError::Singular {
                point: x.to_vec(),
                sigma_min: smin,
                tol,
            });
        }
        Ok(c)
    }

    /// B(x)^-1 via Cramer's rule (m <= 3) or pivoted elimination.
    pub fn gram_inverse(&self, x: &[f64], tol: f64) -> Result<DMatrix<f64>> {
        let c = self.checked_c(x, tol)?;
        Ok(gram_inverse_of(&c, x, tol)?)
    }

    /// L^-1(x) = C(x)^T B(x)^-1, the right inverse of L_x(v) = C(x) v.
    pub fn pseudo_inverse_map(&self, x: &[f64], tol: f64) -> Result<DMatrix<f64>> {
        let c = self.checked_c(x, tol)?;
        let binv = gram_inverse_of(&c, x, tol)?;
        Ok(c.transpose() * binv)
    }

    /// Pi_x = C(x)^T B(x)^-1 C(x), the orthogonal projection onto the span of
    /// the rows of C(x).
    pub fn horizontal_projection(&self, x: &[f64], tol: f64) -> Result<DMatrix<f64>> {
        let c = self.checked_c(x, tol)?;
        let binv = gram_inverse_of(&c, x, tol)?;
        Ok(c.transpose() * binv * &c)
    }

    /// Bundles the projection, pseudo-inverse, Gram matrix and bases of the
    /// horizontal space V_x (rows of C) and of N_x = ker C(x).
    pub fn decompose(&self, x: &[f64], tol: f64) -> Result<HorizontalDecomposition> {
        let c = self.checked_c(x, tol)?;
        let binv = gram_inverse_of(&c, x, tol)?;
        let pseudo_inverse = c.transpose() * &binv;
        let projection = &pseudo_inverse * &c;
        let null_basis = linalg::kernel_basis(&c, tol);
        Ok(HorizontalDecomposition {
            point: x.to_vec(),
            projection,
            pseudo_inverse,
            gram: &c * c.transpose(),
            horizontal_basis: c,
            null_basis,
        })
    }

    /// Rank-classifies every node of `sample_grid` by the smallest singular
    /// value of C(x) against `tol`.
    pub fn lic_scan(&self, sample_grid: &Grid, tol: f64) -> Result<LicReport> {
        if tol <= 0.0 {
            return Err(XfgError::argument("lic_scan needs tol > 0"));
        }
        if !self
            .domain
            .contains_with_margin(sample_grid.domain(), 0.0)
        {
            return Err(XfgError::argument(
                "lic_scan sample grid exceeds the family domain",
            ));
        }
        let total = sample_grid.node_count();
        let mut degenerate = 0usize;
        let mut min_sv: Option<f64> = None;
        let mut locations = Vec::new();
        for i in 0..total {
            let x = sample_grid.node_coords(i);
            let c = self.coefficient_matrix_unchecked(&x);
            let sv = linalg::singular_values(&c);
            let smin = sv[sv.len() - 1];
            if smin <= tol {
                degenerate += 1;
                if locations.len() < LIC_LOCATION_CAP {
                    locations.push(x);
                }
            } else {
                min_sv = Some(match min_sv {
                    Some(v) => v.min(smin),
                    None => smin,
                });
            }
        }
        Ok(LicReport {
            total_samples: total,
            degenerate_samples: degenerate,
            degenerate_fraction: degenerate as f64 / total as f64,
            min_singular_value: min_sv,
            degenerate_locations: locations,
        })
    }
}

/// Shared inverse kernel: Cramer for order <= 3, elimination above.
fn gram_inverse_of(c: &DMatrix<f64>, x: &[f64], tol: f64) -> Result<DMatrix<f64>> {
    let b = c * c.transpose();
    let inv = if b.nrows() <= 3 {
        linalg::cramer_inverse(&b)
    } else {
        linalg::elimination_inverse(&b)
    };
    inv.ok_or_else(|| XfgError::Singular {
        point: x.to_vec(),
        sigma_min: 0.0,
        tol,
    })
}

/// The elimination route, exposed so tests can cross-check the Cramer path.
pub fn gram_inverse_elimination(c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    linalg::elimination_inverse(&(c * c.transpose()))
}

const LIC_LOCATION_CAP: usize = 64;

/// Outcome of scanning a lattice for points where the rows of C(x) are
/// linearly dependent.
#[derive(Debug, Clone, Serialize)]
pub struct LicReport {
    pub total_samples: usize,
    pub degenerate_samples: usize,
    pub degenerate_fraction: f64,
    /// Smallest singular value observed over the non-degenerate samples.
    pub min_singular_value: Option<f64>,
    /// Capped list of degenerate sample points.
    pub degenerate_locations: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct HorizontalDecomposition {
    pub point: Vec<f64>,
    pub projection: DMatrix<f64>,
    pub pseudo_inverse: DMatrix<f64>,
    pub gram: DMatrix<f64>,
    /// Rows of C(x), spanning V_x.
    pub horizontal_basis: DMatrix<f64>,
    /// Orthonormal rows spanning N_x = ker C(x).
    pub null_basis: DMatrix<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inf_norm;
    use approx::assert_abs_diff_eq;

    fn mat(rows: usize, cols: usize, vals: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, vals)
    }

    #[test]
    fn coefficient_matrices_of_builtin_families() {
        let e3 = VectorFieldFamily::euclidean(3);
        assert_eq!(
            e3.coefficient_matrix(&[0.3, -0.2, 5.0]).unwrap(),
            DMatrix::identity(3, 3)
        );

        let g = VectorFieldFamily::grushin();
        assert_eq!(
            g.coefficient_matrix(&[2.0, 5.0]).unwrap(),
            mat(2, 2, &[1.0, 0.0, 0.0, 2.0])
        );

        let h = VectorFieldFamily::heisenberg();
        assert_eq!(
            h.coefficient_matrix(&[1.0, 2.0, 7.0]).unwrap(),
            mat(2, 3, &[1.0, 0.0, -1.0, 0.0, 1.0, 0.5])
        );
    }

    #[test]
    fn outside_domain_is_an_error() {
        let g = VectorFieldFamily::grushin_on(BoxDomain::centered(2, 1.0));
        assert!(matches!(
            g.coefficient_matrix(&[2.0, 0.0]),
            Err(XfgError::Domain { .. })
        ));
    }

    #[test]
    fn gram_matrices() {
        let g = VectorFieldFamily::grushin();
        assert_eq!(
            g.gram_matrix(&[2.0, 0.0]).unwrap(),
            mat(2, 2, &[1.0, 0.0, 0.0, 4.0])
        );
        let h = VectorFieldFamily::heisenberg();
        assert_eq!(h.gram_matrix(&[0.0; 3]).unwrap(), DMatrix::identity(2, 2));
        // rows (1,0,-1) and (0,1,0.5), products done by hand
        assert_eq!(
            h.gram_matrix(&[1.0, 2.0, -3.0]).unwrap(),
            mat(2, 2, &[2.0, -0.5, -0.5, 1.25])
        );
    }

    #[test]
    fn gram_inverse_and_degeneracy() {
        let g = VectorFieldFamily::grushin();
        let inv = g.gram_inverse(&[2.0, 1.0], 1e-10).unwrap();
        assert!(inf_norm(&(inv - mat(2, 2, &[1.0, 0.0, 0.0, 0.25]))) < 1e-14);

        let h = VectorFieldFamily::heisenberg();
        assert!(inf_norm(&(h.gram_inverse(&[0.0; 3], 1e-10).unwrap() - DMatrix::identity(2, 2))) < 1e-14);

        match g.gram_inverse(&[0.0, 3.0], 1e-10) {
            Err(XfgError::Singular { point, .. }) => assert_eq!(point, vec![0.0, 3.0]),
            other => panic!("expected singularity error, got {other:?}"),
        }
    }

    #[test]
    fn pseudo_inverse_examples() {
        let e = VectorFieldFamily::euclidean(2);
        assert!(inf_norm(&(e.pseudo_inverse_map(&[0.1, 0.2], 1e-10).unwrap() - DMatrix::identity(2, 2))) < 1e-14);

        let h = VectorFieldFamily::heisenberg();
        let l_inv = h.pseudo_inverse_map(&[0.0; 3], 1e-10).unwrap();
        assert!(inf_norm(&(l_inv - mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]))) < 1e-14);

        let g = VectorFieldFamily::grushin();
        let l_inv = g.pseudo_inverse_map(&[2.0, 0.0], 1e-10).unwrap();
        assert!(inf_norm(&(l_inv - mat(2, 2, &[1.0, 0.0, 0.0, 0.5]))) < 1e-14);
    }

    #[test]
    fn projection_examples() {
        let h = VectorFieldFamily::heisenberg();
        let p0 = h.horizontal_projection(&[0.0; 3], 1e-10).unwrap();
        assert!(inf_norm(&(p0.clone() - mat(3, 3, &[1., 0., 0., 0., 1., 0., 0., 0., 0.]))) < 1e-14);
        // Pi_0 annihilates (0,0,1)
        let e3 = nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!((p0 * e3).norm() < 1e-14);

        let e = VectorFieldFamily::euclidean(3);
        assert!(inf_norm(&(e.horizontal_projection(&[0.5; 3], 1e-10).unwrap() - DMatrix::identity(3, 3))) < 1e-14);

        let g = VectorFieldFamily::grushin();
        assert!(inf_norm(&(g.horizontal_projection(&[2.0, -1.0], 1e-10).unwrap() - DMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn decomposition_null_bases() {
        let h = VectorFieldFamily::heisenberg();
        let d = h.decompose(&[0.0; 3], 1e-10).unwrap();
        assert_eq!(d.null_basis.nrows(), 1);
        assert_abs_diff_eq!(d.null_basis[(0, 2)].abs(), 1.0, epsilon = 1e-12);
        assert!(inf_norm(&(&d.horizontal_basis * d.null_basis.transpose())) < 1e-12);

        let e = VectorFieldFamily::euclidean(2);
        assert_eq!(e.decompose(&[0.0; 2], 1e-10).unwrap().null_basis.nrows(), 0);

        let g = VectorFieldFamily::grushin();
        assert_eq!(g.decompose(&[3.0, 1.0], 1e-10).unwrap().null_basis.nrows(), 0);
    }

    #[test]
    fn lic_scan_grushin_flags_the_degenerate_line() {
        let g = VectorFieldFamily::grushin();
        let grid = Grid::uniform(BoxDomain::centered(2, 1.0), 101).unwrap();
        let report = g.lic_scan(&grid, 1e-10).unwrap();
        assert_eq!(report.total_samples, 101 * 101);
        assert_eq!(report.degenerate_samples, 101);
        assert_abs_diff_eq!(report.degenerate_fraction, 1.0 / 101.0, epsilon = 1e-15);
        assert!(report
            .degenerate_locations
            .iter()
            .all(|x| x[0].abs() < 1e-12));
    }

    #[test]
    fn lic_scan_heisenberg_is_clean() {
        let h = VectorFieldFamily::heisenberg();
        let grid = Grid::uniform(BoxDomain::centered(3, 1.0), 11).unwrap();
        let report = h.lic_scan(&grid, 1e-10).unwrap();
        assert_eq!(report.degenerate_samples, 0);
        assert!(report.min_singular_value.unwrap() > 0.9);
    }

    #[test]
    fn lic_scan_rank_deficient_family_is_fully_degenerate() {
        // X = (d/dx1, 0): second row of C is identically zero
        let f = VectorFieldFamily::from_fn(2, 2, BoxDomain::centered(2, 1.0), "(d1, 0)", |_| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])
        });
        let grid = Grid::uniform(BoxDomain::centered(2, 1.0), 9).unwrap();
        let report = f.lic_scan(&grid, 1e-10).unwrap();
        assert_eq!(report.degenerate_fraction, 1.0);
        assert!(report.min_singular_value.is_none());
    }

    #[test]
    fn custom_family_from_expressions() {
        let vars = ["x1", "x2"];
        let entries = vec![
            vec![Expr::parse("1", &vars).unwrap(), Expr::parse("0", &vars).unwrap()],
            vec![Expr::parse("0", &vars).unwrap(), Expr::parse("x1", &vars).unwrap()],
        ];
        let f = VectorFieldFamily::custom(2, 2, BoxDomain::centered(2, 2.0), entries, None).unwrap();
        assert_eq!(
            f.coefficient_matrix(&[1.5, 0.0]).unwrap(),
            mat(2, 2, &[1.0, 0.0, 0.0, 1.5])
        );
    }
}
