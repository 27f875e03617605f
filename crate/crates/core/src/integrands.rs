//! Integrands on the X-frame and the Euclidean frame, the lift/lower
//! transforms between them, and the sampled class/compatibility checks.
//!
//! An X-frame integrand f(x, eta) eats an m-vector; its Euclidean companion
//! f_e(x, xi) = f(x, C(x) xi) eats an n-vector. Lowering goes back through the
//! pseudo-inverse, f(x, eta) = f_e(x, L^-1(x) eta), with the value 0 on the
//! degenerate set.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, XfgError};
use crate::linalg::{self, check_dim};
use crate::sampling::SampleSpec;
use crate::vector_fields::VectorFieldFamily;

pub type ArgFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type XArgFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type MatrixFieldFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub enum IntegrandKind {
    /// f(x, v) = <a(x) v, v> with a(x) symmetric.
    Quadratic(MatrixFieldFn),
    /// f(v), independent of x (class J2).
    Autonomous(ArgFn),
    /// Arbitrary Borel f(x, v).
    General(XArgFn),
}

impl fmt::Debug for IntegrandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrandKind::Quadratic(_) => write!(f, "Quadratic"),
            IntegrandKind::Autonomous(_) => write!(f, "Autonomous"),
            IntegrandKind::General(_) => write!(f, "General"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct IntegrandCore {
    pub arity: usize,
    pub exponent: f64,
    pub c0: f64,
    pub c1: f64,
    pub kind: IntegrandKind,
    pub label: String,
}

impl IntegrandCore {
    fn validate(&self) -> Result<()> {
        if self.exponent <= 1.0 {
            return Err(XfgError::argument("integrand exponent must satisfy p > 1"));
        }
        if !(0.0 <= self.c0 && self.c0 <= self.c1) {
            return Err(XfgError::argument("integrand bounds need 0 <= c0 <= c1"));
        }
        if self.arity == 0 {
            return Err(XfgError::argument("integrand arity must be positive"));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64], arg: &[f64]) -> f64 {
        match &self.kind {
            IntegrandKind::Quadratic(a) => {
                let m = a(x);
                let v = DVector::from_column_slice(arg);
                (&m * &v).dot(&v)
            }
            IntegrandKind::Autonomous(f) => f(arg),
            IntegrandKind::General(f) => f(x, arg),
        }
    }
}

/// X-frame integrand, argument in R^m.
#[derive(Debug, Clone)]
pub struct Integrand(pub(crate) IntegrandCore);

/// Euclidean-frame integrand, argument in R^n, optionally remembering what it
/// was lifted from.
#[derive(Debug, Clone)]
pub struct EuclideanIntegrand {
    pub(crate) core: IntegrandCore,
    pub provenance: Option<String>,
}

impl Integrand {
    pub fn quadratic(
        arity: usize,
        c0: f64,
        c1: f64,
        label: impl Into<String>,
        field: MatrixFieldFn,
    ) -> Result<Self> {
        let core = IntegrandCore {
            arity,
            exponent: 2.0,
            c0,
            c1,
            kind: IntegrandKind::Quadratic(field),
            label: label.into(),
        };
        core.validate()?;
        Ok(Integrand(core))
    }

    /// Quadratic form with a constant coefficient matrix.
    pub fn quadratic_constant(a: DMatrix<f64>, c0: f64, c1: f64) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(XfgError::argument("quadratic coefficient matrix must be square"));
        }
        let arity = a.nrows();
        let label = format!("quadratic[{arity}x{arity} const]");
        Integrand::quadratic(arity, c0, c1, label, Arc::new(move |_x| a.clone()))
    }

    pub fn autonomous(
        arity: usize,
        p: f64,
        c0: f64,
        c1: f64,
        label: impl Into<String>,
        f: ArgFn,
    ) -> Result<Self> {
        let core = IntegrandCore {
            arity,
            exponent: p,
            c0,
            c1,
            kind: IntegrandKind::Autonomous(f),
            label: label.into(),
        };
        core.validate()?;
        Ok(Integrand(core))
    }

    pub fn general(
        arity: usize,
        p: f64,
        c0: f64,
        c1: f64,
        label: impl Into<String>,
        f: XArgFn,
    ) -> Result<Self> {
        let core = IntegrandCore {
            arity,
            exponent: p,
            c0,
            c1,
            kind: IntegrandKind::General(f),
            label: label.into(),
        };
        core.validate()?;
        Ok(Integrand(core))
    }

    /// |eta|^p with sharp bounds c0 = c1 = 1.
    pub fn power(arity: usize, p: f64) -> Self {
        Integrand::autonomous(
            arity,
            p,
            1.0,
            1.0,
            format!("|eta|^{p}"),
            Arc::new(move |eta: &[f64]| {
                let s: f64 = eta.iter().map(|v| v * v).sum();
                s.powf(p / 2.0)
            }),
        )
        .expect("power integrand is well formed")
    }

    pub fn arity(&self) -> usize {
        self.0.arity
    }

    pub fn exponent(&self) -> f64 {
        self.0.exponent
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.0.c0, self.0.c1)
    }

    pub fn kind(&self) -> &IntegrandKind {
        &self.0.kind
    }

    pub fn label(&self) -> &str {
        &self.0.label
    }

    pub fn is_autonomous(&self) -> bool {
        matches!(self.0.kind, IntegrandKind::Autonomous(_))
    }

    pub fn evaluate(&self, x: &[f64], arg: &[f64]) -> Result<f64> {
        check_dim("integrand argument", arg.len(), self.0.arity)?;
        Ok(self.0.value(x, arg))
    }

    /// Unchecked fast path for grid loops that already validated dimensions.
    pub fn value(&self, x: &[f64], arg: &[f64]) -> f64 {
        self.0.value(x, arg)
    }

    /// Scales the integrand by a positive constant (bounds scale along).
    pub fn scaled(&self, factor: f64) -> Result<Integrand> {
        if factor <= 0.0 {
            return Err(XfgError::argument("scale factor must be positive"));
        }
        let mut core = self.0.clone();
        core.c0 *= factor;
        core.c1 *= factor;
        core.label = format!("{}*{}", factor, core.label);
        core.kind = match &self.0.kind {
            IntegrandKind::Quadratic(a) => {
                let a = a.clone();
                IntegrandKind::Quadratic(Arc::new(move |x: &[f64]| a(x) * factor))
            }
            IntegrandKind::Autonomous(f) => {
                let f = f.clone();
                IntegrandKind::Autonomous(Arc::new(move |v: &[f64]| factor * f(v)))
            }
            IntegrandKind::General(f) => {
                let f = f.clone();
                IntegrandKind::General(Arc::new(move |x: &[f64], v: &[f64]| factor * f(x, v)))
            }
        };
        Ok(Integrand(core))
    }
}

impl EuclideanIntegrand {
    pub fn quadratic(
        arity: usize,
        c0: f64,
        c1: f64,
        label: impl Into<String>,
        field: MatrixFieldFn,
    ) -> Result<Self> {
        let core = IntegrandCore {
            arity,
            exponent: 2.0,
            c0,
            c1,
            kind: IntegrandKind::Quadratic(field),
            label: label.into(),
        };
        core.validate()?;
        Ok(EuclideanIntegrand {
            core,
            provenance: None,
        })
    }

    pub fn autonomous(
        arity: usize,
        p: f64,
        c0: f64,
        c1: f64,
        label: impl Into<String>,
        f: ArgFn,
    ) -> Result<Self> {
        let core = IntegrandCore {
            arity,
            exponent: p,
            c0,
            c1,
            kind: IntegrandKind::Autonomous(f),
            label: label.into(),
        };
        core.validate()?;
        Ok(EuclideanIntegrand {
            core,
            provenance: None,
        })
    }

    pub fn general(
        arity: usize,
        p: f64,
        c0: f64,
        c1: f64,
        label: impl Into<String>,
        f: XArgFn,
    ) -> Result<Self> {
        let core = IntegrandCore {
            arity,
            exponent: p,
            c0,
            c1,
            kind: IntegrandKind::General(f),
            label: label.into(),
        };
        core.validate()?;
        Ok(EuclideanIntegrand {
            core,
            provenance: None,
        })
    }

    /// |xi|^p on R^n.
    pub fn power(arity: usize, p: f64) -> Self {
        let f: ArgFn = Arc::new(move |xi: &[f64]| {
            let s: f64 = xi.iter().map(|v| v * v).sum();
            s.powf(p / 2.0)
        });
        EuclideanIntegrand::autonomous(arity, p, 1.0, 1.0, format!("|xi|^{p}"), f)
            .expect("power integrand is well formed")
    }

    pub fn arity(&self) -> usize {
        self.core.arity
    }

    pub fn exponent(&self) -> f64 {
        self.core.exponent
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.core.c0, self.core.c1)
    }

    pub fn kind(&self) -> &IntegrandKind {
        &self.core.kind
    }

    pub fn label(&self) -> &str {
        &self.core.label
    }

    pub fn evaluate(&self, x: &[f64], arg: &[f64]) -> Result<f64> {
        check_dim("integrand argument", arg.len(), self.core.arity)?;
        Ok(self.core.value(x, arg))
    }

    pub fn value(&self, x: &[f64], arg: &[f64]) -> f64 {
        self.core.value(x, arg)
    }
}

/// f_e(x, xi) = f(x, C(x) xi). Quadratic integrands stay quadratic with
/// a_e(x) = C(x)^T a(x) C(x).
pub fn lift_to_euclidean(f: &Integrand, family: &VectorFieldFamily) -> Result<EuclideanIntegrand> {
    check_dim("lift: integrand arity vs family m", f.arity(), family.m())?;
    let n = family.n();
    let fam = family.clone();
    let kind = match f.kind() {
        IntegrandKind::Quadratic(a) => {
            let a = a.clone();
            IntegrandKind::Quadratic(Arc::new(move |x: &[f64]| {
                let c = fam.coefficient_matrix_unchecked(x);
                c.transpose() * a(x) * c
            }))
        }
        IntegrandKind::Autonomous(g) => {
            let g = g.clone();
            match family.kind() {
                // C = I_n: the lift stays autonomous
                crate::vector_fields::FamilyKind::Euclidean => IntegrandKind::Autonomous(g),
                _ => IntegrandKind::General(Arc::new(move |x: &[f64], xi: &[f64]| {
                    let c = fam.coefficient_matrix_unchecked(x);
                    let eta = &c * DVector::from_column_slice(xi);
                    g(eta.as_slice())
                })),
            }
        }
        IntegrandKind::General(g) => {
            let g = g.clone();
            IntegrandKind::General(Arc::new(move |x: &[f64], xi: &[f64]| {
                let c = fam.coefficient_matrix_unchecked(x);
                let eta = &c * DVector::from_column_slice(xi);
                g(x, eta.as_slice())
            }))
        }
    };
    let core = IntegrandCore {
        arity: n,
        exponent: f.exponent(),
        c0: f.bounds().0,
        c1: f.bounds().1,
        kind,
        label: format!("lift[{} over {}]", f.label(), family.label()),
    };
    Ok(EuclideanIntegrand {
        core,
        provenance: Some(format!("{} over {}", f.label(), family.label())),
    })
}

/// f(x, eta) = f_e(x, L^-1(x) eta) off the degenerate set, 0 on it.
/// Quadratic integrands stay quadratic with
/// a(x) = (B^-1)^T C a_e(x) C^T B^-1.
pub fn lower_to_x(
    f_e: &EuclideanIntegrand,
    family: &VectorFieldFamily,
    tol_rel: f64,
) -> Result<Integrand> {
    check_dim("lower: integrand arity vs family n", f_e.arity(), family.n())?;
    let m = family.m();
    let kind = match f_e.kind() {
        IntegrandKind::Quadratic(a_e) => {
            let a_e = a_e.clone();
            let fam = family.clone();
            IntegrandKind::Quadratic(Arc::new(move |x: &[f64]| {
                match pushforward_at(&fam, &a_e(x), x, tol_rel) {
                    Some(a) => a,
                    None => DMatrix::zeros(fam.m(), fam.m()),
                }
            }))
        }
        _ => {
            let f_e = f_e.clone();
            let fam = family.clone();
            IntegrandKind::General(Arc::new(move |x: &[f64], eta: &[f64]| {
                let c = fam.coefficient_matrix_unchecked(x);
                let tol = tol_rel * linalg::inf_norm(&c);
                let sv = linalg::singular_values(&c);
                if sv[sv.len() - 1] <= tol {
                    return 0.0; // the degenerate branch of the representation
                }
                let b = &c * c.transpose();
                let binv = if b.nrows() <= 3 {
                    linalg::cramer_inverse(&b)
                } else {
                    linalg::elimination_inverse(&b)
                };
                match binv {
                    Some(binv) => {
                        let l_inv = c.transpose() * binv;
                        let xi = l_inv * DVector::from_column_slice(eta);
                        f_e.value(x, xi.as_slice())
                    }
                    None => 0.0,
                }
            }))
        }
    };
    let core = IntegrandCore {
        arity: m,
        exponent: f_e.exponent(),
        c0: f_e.bounds().0,
        c1: f_e.bounds().1,
        kind,
        label: format!("lower[{} over {}]", f_e.label(), family.label()),
    };
    Ok(Integrand(core))
}

fn pushforward_at(
    family: &VectorFieldFamily,
    a_e: &DMatrix<f64>,
    x: &[f64],
    tol_rel: f64,
) -> Option<DMatrix<f64>> {
    let c = family.coefficient_matrix_unchecked(x);
    let tol = tol_rel * linalg::inf_norm(&c);
    let sv = linalg::singular_values(&c);
    if sv[sv.len() - 1] <= tol {
        return None;
    }
    let b = &c * c.transpose();
    let binv = if b.nrows() <= 3 {
        linalg::cramer_inverse(&b)?
    } else {
        linalg::elimination_inverse(&b)?
    };
    Some(binv.transpose() * &c * a_e * c.transpose() * binv)
}

/// a(x) = (B(x)^-1)^T C(x) a_e(x) C(x)^T B(x)^-1 at a single point.
pub fn quadratic_pushforward(
    a_e: &MatrixFieldFn,
    family: &VectorFieldFamily,
    x: &[f64],
    tol: f64,
) -> Result<DMatrix<f64>> {
    let c = family.coefficient_matrix(x)?;
    let sv = linalg::singular_values(&c);
    if sv[sv.len() - 1] <= tol {
        return Err(XfgError::Singular {
            point: x.to_vec(),
            sigma_min: sv[sv.len() - 1],
            tol,
        });
    }
    let a = a_e(x);
    check_dim("pushforward coefficient", a.nrows(), family.n())?;
    pushforward_at(family, &a, x, 0.0).ok_or_else(|| XfgError::Singular {
        point: x.to_vec(),
        sigma_min: sv[sv.len() - 1],
        tol,
    })
}

/// A sampled pass/fail verdict with its worst offender.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub samples_tested: usize,
    pub violations: usize,
    pub worst_residual: f64,
    pub worst_witness: Option<Witness>,
    pub passed: bool,
    /// Samples skipped because the family was degenerate there.
    pub skipped_degenerate: usize,
    /// Raised when the family fails LIC on more than half the x-samples
    /// (uniqueness of representation is not guaranteed in that regime).
    pub lic_warning: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub arg: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Worst {
    residual: f64,
    witness: Option<Witness>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            residual: 0.0,
            witness: None,
        }
    }

    fn offer(&mut self, residual: f64, x: &[f64], arg: &[f64]) {
        let better = match &self.witness {
            None => true,
            Some(w) => {
                residual > self.residual
                    || (residual == self.residual && {
                        let cand: Vec<f64> = x.iter().chain(arg.iter()).copied().collect();
                        let cur: Vec<f64> = w.x.iter().chain(w.arg.iter()).copied().collect();
                        linalg::lex_less(&cand, &cur)
                    })
            }
        };
        if better {
            self.residual = residual;
            self.witness = Some(Witness {
                x: x.to_vec(),
                arg: arg.to_vec(),
            });
        }
    }

    fn merge(&mut self, other: Worst) {
        if let Some(w) = other.witness {
            self.offer(other.residual, &w.x, &w.arg);
        }
    }
}

struct Tally {
    tested: usize,
    violations: usize,
    skipped: usize,
    worst: Worst,
}

impl Tally {
    fn new() -> Self {
        Tally {
            tested: 0,
            violations: 0,
            skipped: 0,
            worst: Worst::new(),
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.tested += other.tested;
        self.violations += other.violations;
        self.skipped += other.skipped;
        self.worst.merge(other.worst);
        self
    }

    fn into_report(self, lic_warning: bool, notes: Vec<String>) -> CheckReport {
        CheckReport {
            samples_tested: self.tested,
            violations: self.violations,
            worst_residual: self.worst.residual,
            worst_witness: self.worst.witness,
            passed: self.violations == 0,
            skipped_degenerate: self.skipped,
            lic_warning,
            notes,
        }
    }
}

/// Runs `per_point` over the x-samples in parallel and merges tallies in
/// deterministic (index) order.
fn run_sampled<F>(points: &[Vec<f64>], per_point: F) -> Tally
where
    F: Fn(&[f64]) -> Tally + Send + Sync,
{
    points
        .par_iter()
        .map(|x| per_point(x))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Tally::new(), Tally::merge)
}

/// Verifies the representability criterion f_e(x, xi) = f_e(x, Pi_x xi) by
/// sampling; degenerate x-samples are skipped and counted.
pub fn compatibility_check(
    f_e: &EuclideanIntegrand,
    family: &VectorFieldFamily,
    spec: &SampleSpec,
    tol: f64,
) -> Result<CheckReport> {
    check_dim("compatibility: arity vs n", f_e.arity(), family.n())?;
    let tally = run_sampled(&spec.points, |x| {
        let mut t = Tally::new();
        let c = family.coefficient_matrix_unchecked(x);
        let sv = linalg::singular_values(&c);
        if sv[sv.len() - 1] <= VectorFieldFamily::default_tol(&c) {
            t.skipped += spec.args.len();
            return t;
        }
        let b = &c * c.transpose();
        let binv = match linalg::cramer_inverse(&b) {
            Some(m) => m,
            None => {
                t.skipped += spec.args.len();
                return t;
            }
        };
        let proj = c.transpose() * binv * &c;
        for xi in &spec.args {
            let v = DVector::from_column_slice(xi);
            let pv = &proj * &v;
            let lhs = f_e.value(x, xi);
            let rhs = f_e.value(x, pv.as_slice());
            let r = (lhs - rhs).abs();
            t.tested += 1;
            if r > tol * (1.0 + lhs.abs()) {
                t.violations += 1;
            }
            t.worst.offer(r, x, xi);
        }
        t
    });
    Ok(tally.into_report(false, Vec::new()))
}

/// Verifies the growth sandwich c0 |eta|^p <= f <= c1 (|eta|^p + 1).
pub fn class_bounds_check(f: &Integrand, spec: &SampleSpec, tol: f64) -> Result<CheckReport> {
    let (c0, c1) = f.bounds();
    let p = f.exponent();
    let tally = run_sampled(&spec.points, |x| {
        let mut t = Tally::new();
        for eta in &spec.args {
            if eta.len() != f.arity() {
                continue;
            }
            let value = f.value(x, eta);
            let pow = eta.iter().map(|v| v * v).sum::<f64>().powf(p / 2.0);
            let lower_gap = c0 * pow - value; // > 0 violates the lower bound
            let upper_gap = value - c1 * (pow + 1.0); // > 0 violates the upper bound
            let r = lower_gap.max(upper_gap).max(0.0);
            t.tested += 1;
            if r > tol * (1.0 + value.abs()) {
                t.violations += 1;
            }
            t.worst.offer(r, x, eta);
        }
        t
    });
    Ok(tally.into_report(false, Vec::new()))
}

/// Midpoint-convexity over sampled argument pairs; quadratic integrands also
/// get a pointwise a(x) >= 0 eigenvalue test.
pub fn convexity_check(f: &Integrand, spec: &SampleSpec, tol: f64) -> Result<CheckReport> {
    let pairs = spec.pairs(256);
    let tally = run_sampled(&spec.points, |x| {
        let mut t = Tally::new();
        for &(i, j) in &pairs {
            let eta = &spec.args[i];
            let zeta = &spec.args[j];
            if eta.len() != f.arity() || zeta.len() != f.arity() {
                continue;
            }
            let mid: Vec<f64> = eta
                .iter()
                .zip(zeta.iter())
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let f_mid = f.value(x, &mid);
            let avg = 0.5 * (f.value(x, eta) + f.value(x, zeta));
            let r = (f_mid - avg).max(0.0);
            t.tested += 1;
            if r > tol * (1.0 + avg.abs()) {
                t.violations += 1;
            }
            t.worst.offer(r, x, &mid);
        }
        if let IntegrandKind::Quadratic(a) = f.kind() {
            let mat = a(x);
            let scale = linalg::inf_norm(&mat).max(1.0);
            let ev = linalg::sym_eigenvalues(&mat);
            let lambda_min = ev[0];
            let r = (-lambda_min).max(0.0);
            t.tested += 1;
            if lambda_min < -tol * scale {
                t.violations += 1;
            }
            t.worst.offer(r, x, &[]);
        }
        t
    });
    Ok(tally.into_report(false, Vec::new()))
}

/// Compares two X-frame integrands along the range of L_x: f(x, C(x) xi)
/// against g(x, C(x) xi). Under LIC this certifies f = g; when the family is
/// degenerate on more than half the samples the report raises `lic_warning`
/// (uniqueness can fail there).
pub fn representation_uniqueness_check(
    f: &Integrand,
    g: &Integrand,
    family: &VectorFieldFamily,
    spec: &SampleSpec,
    tol: f64,
) -> Result<CheckReport> {
    check_dim("uniqueness: arities", f.arity(), g.arity())?;
    check_dim("uniqueness: arity vs m", f.arity(), family.m())?;
    let tally = run_sampled(&spec.points, |x| {
        let mut t = Tally::new();
        let c = family.coefficient_matrix_unchecked(x);
        let sv = linalg::singular_values(&c);
        if sv[sv.len() - 1] <= VectorFieldFamily::default_tol(&c) {
            t.skipped += 1;
        }
        for xi in &spec.args {
            if xi.len() != family.n() {
                continue;
            }
            let eta = &c * DVector::from_column_slice(xi);
            let fv = f.value(x, eta.as_slice());
            let gv = g.value(x, eta.as_slice());
            let r = (fv - gv).abs();
            t.tested += 1;
            if r > tol * (1.0 + fv.abs().max(gv.abs())) {
                t.violations += 1;
            }
            t.worst.offer(r, x, xi);
        }
        t
    });
    let degenerate_fraction = tally.skipped as f64 / spec.points.len().max(1) as f64;
    let lic_warning = degenerate_fraction > 0.5;
    let notes = if lic_warning {
        vec![format!(
            "family fails LIC on {:.0}% of samples; agreement on the range of L_x does not certify uniqueness",
            degenerate_fraction * 100.0
        )]
    } else {
        Vec::new()
    };
    Ok(tally.into_report(lic_warning, notes))
}
