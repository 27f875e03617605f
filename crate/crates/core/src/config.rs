//! JSON configuration schemas and their translation into domain objects.
//!
//! Expressions use variables `x1..xn` for points, `eta1..etam` for X-frame
//! arguments, `xi1..xin` for Euclidean arguments, `y1..yn` for periodic-cell
//! coordinates, and `h` for the sequence index.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, XfgError};
use crate::expr::{numbered_vars, Expr};
use crate::geometry::BoxDomain;
use crate::grid::Grid;
use crate::integrands::{EuclideanIntegrand, Integrand, MatrixFieldFn};
use crate::vector_fields::VectorFieldFamily;

fn vars_of(names: &[String]) -> Vec<&str> {
    names.iter().map(|s| s.as_str()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub domain: Option<BoxDomain>,
    /// m x n entry expressions over x1..xn (custom kind only).
    #[serde(default)]
    pub coeff: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub lipschitz_hint: Option<f64>,
}

impl FamilyConfig {
    pub fn builtin(kind: &str) -> Self {
        FamilyConfig {
            kind: kind.to_string(),
            n: None,
            m: None,
            domain: None,
            coeff: None,
            lipschitz_hint: None,
        }
    }

    pub fn build(&self) -> Result<VectorFieldFamily> {
        match self.kind.as_str() {
            "euclidean" => {
                let n = self.n.unwrap_or(2);
                Ok(match &self.domain {
                    Some(d) => VectorFieldFamily::euclidean_on(n, d.clone()),
                    None => VectorFieldFamily::euclidean(n),
                })
            }
            "grushin" => Ok(match &self.domain {
                Some(d) => VectorFieldFamily::grushin_on(d.clone()),
                None => VectorFieldFamily::grushin(),
            }),
            "heisenberg" => Ok(match &self.domain {
                Some(d) => VectorFieldFamily::heisenberg_on(d.clone()),
                None => VectorFieldFamily::heisenberg(),
            }),
            "custom" => {
                let n = self
                    .n
                    .ok_or_else(|| XfgError::config("custom family needs n"))?;
                let m = self
                    .m
                    .ok_or_else(|| XfgError::config("custom family needs m"))?;
                let domain = self
                    .domain
                    .clone()
                    .ok_or_else(|| XfgError::config("custom family needs a domain"))?;
                let coeff = self
                    .coeff
                    .as_ref()
                    .ok_or_else(|| XfgError::config("custom family needs coeff expressions"))?;
                let names = numbered_vars("x", n);
                let vars = vars_of(&names);
                let entries = coeff
                    .iter()
                    .map(|row| row.iter().map(|e| Expr::parse(e, &vars)).collect())
                    .collect::<Result<Vec<Vec<Expr>>>>()?;
                VectorFieldFamily::custom(m, n, domain, entries, self.lipschitz_hint)
            }
            other => Err(XfgError::config(format!(
                "unknown family kind `{other}` (expected euclidean | grushin | heisenberg | custom)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrandConfig {
    pub kind: String,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub c0: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    /// Quadratic coefficient entries over x1..xn.
    #[serde(default)]
    pub a: Option<Vec<Vec<String>>>,
    /// Autonomous/general formula.
    #[serde(default)]
    pub f: Option<String>,
}

fn default_p() -> f64 {
    2.0
}

fn default_c1() -> f64 {
    1.0
}

impl IntegrandConfig {
    pub fn power(p: f64) -> Self {
        IntegrandConfig {
            kind: "autonomous".into(),
            p,
            c0: 1.0,
            c1: 1.0,
            a: None,
            f: None,
        }
    }

    fn quadratic_field(&self, arity: usize, dim_x: usize) -> Result<MatrixFieldFn> {
        let a = self
            .a
            .as_ref()
            .ok_or_else(|| XfgError::config("quadratic integrand needs `a` entries"))?;
        if a.len() != arity || a.iter().any(|r| r.len() != arity) {
            return Err(XfgError::config(format!(
                "quadratic coefficient must be {arity} x {arity}"
            )));
        }
        let names = numbered_vars("x", dim_x);
        let vars = vars_of(&names);
        let entries = a
            .iter()
            .map(|row| row.iter().map(|e| Expr::parse(e, &vars)).collect())
            .collect::<Result<Vec<Vec<Expr>>>>()?;
        Ok(Arc::new(move |x: &[f64]| {
            nalgebra::DMatrix::from_fn(entries.len(), entries.len(), |i, j| entries[i][j].eval(x))
        }))
    }

    /// X-frame integrand with argument dimension `m` on points of dimension `n`.
    pub fn build(&self, m: usize, n: usize) -> Result<Integrand> {
        match self.kind.as_str() {
            "quadratic" => {
                if (self.p - 2.0).abs() > 1e-12 {
                    return Err(XfgError::config("quadratic integrands require p = 2"));
                }
                let field = self.quadratic_field(m, n)?;
                Integrand::quadratic(m, self.c0, self.c1, self.describe(), field)
            }
            "autonomous" => {
                let src = self
                    .f
                    .as_ref()
                    .ok_or_else(|| XfgError::config("autonomous integrand needs `f`"))?;
                let names = numbered_vars("eta", m);
                let vars = vars_of(&names);
                let expr = Expr::parse(src, &vars)?;
                Integrand::autonomous(
                    m,
                    self.p,
                    self.c0,
                    self.c1,
                    self.describe(),
                    Arc::new(move |eta: &[f64]| expr.eval(eta)),
                )
            }
            "general" => {
                let src = self
                    .f
                    .as_ref()
                    .ok_or_else(|| XfgError::config("general integrand needs `f`"))?;
                let mut names = numbered_vars("x", n);
                names.extend(numbered_vars("eta", m));
                let vars = vars_of(&names);
                let expr = Expr::parse(src, &vars)?;
                Integrand::general(
                    m,
                    self.p,
                    self.c0,
                    self.c1,
                    self.describe(),
                    Arc::new(move |x: &[f64], eta: &[f64]| {
                        let mut scratch = Vec::with_capacity(x.len() + eta.len());
                        scratch.extend_from_slice(x);
                        scratch.extend_from_slice(eta);
                        expr.eval(&scratch)
                    }),
                )
            }
            other => Err(XfgError::config(format!(
                "unknown integrand kind `{other}` (expected quadratic | autonomous | general)"
            ))),
        }
    }

    /// Euclidean-frame integrand with argument dimension `n` (variables xi1..xin).
    pub fn build_euclidean(&self, n: usize) -> Result<EuclideanIntegrand> {
        match self.kind.as_str() {
            "quadratic" => {
                if (self.p - 2.0).abs() > 1e-12 {
                    return Err(XfgError::config("quadratic integrands require p = 2"));
                }
                let field = self.quadratic_field(n, n)?;
                EuclideanIntegrand::quadratic(n, self.c0, self.c1, self.describe(), field)
            }
            "autonomous" => {
                let src = self
                    .f
                    .as_ref()
                    .ok_or_else(|| XfgError::config("autonomous integrand needs `f`"))?;
                let names = numbered_vars("xi", n);
                let vars = vars_of(&names);
                let expr = Expr::parse(src, &vars)?;
                EuclideanIntegrand::autonomous(
                    n,
                    self.p,
                    self.c0,
                    self.c1,
                    self.describe(),
                    Arc::new(move |xi: &[f64]| expr.eval(xi)),
                )
            }
            "general" => {
                let src = self
                    .f
                    .as_ref()
                    .ok_or_else(|| XfgError::config("general integrand needs `f`"))?;
                let mut names = numbered_vars("x", n);
                names.extend(numbered_vars("xi", n));
                let vars = vars_of(&names);
                let expr = Expr::parse(src, &vars)?;
                EuclideanIntegrand::general(
                    n,
                    self.p,
                    self.c0,
                    self.c1,
                    self.describe(),
                    Arc::new(move |x: &[f64], xi: &[f64]| {
                        let mut scratch = Vec::with_capacity(x.len() + xi.len());
                        scratch.extend_from_slice(x);
                        scratch.extend_from_slice(xi);
                        expr.eval(&scratch)
                    }),
                )
            }
            other => Err(XfgError::config(format!(
                "unknown integrand kind `{other}`"
            ))),
        }
    }

    fn describe(&self) -> String {
        match (&self.f, &self.a) {
            (Some(f), _) => f.clone(),
            (None, Some(_)) => format!("{}[matrix]", self.kind),
            _ => self.kind.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "box")]
    pub boxd: BoxDomain,
    /// Nodes per axis: a list, or one count for all axes.
    pub res: ResConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResConfig {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        match &self.res {
            ResConfig::Uniform(r) => Grid::uniform(self.boxd.clone(), *r),
            ResConfig::PerAxis(rs) => Grid::new(self.boxd.clone(), rs.clone()),
        }
    }
}

/// Scalar-field source: an expression over x1..xn.
pub fn parse_field_expr(src: &str, n: usize) -> Result<Expr> {
    let names = numbered_vars("x", n);
    let vars = vars_of(&names);
    Expr::parse(src, &vars)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TetherConfig {
    pub lambda: f64,
    /// Target field expression over x1..xn.
    pub target: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Dirichlet/initial field expression over x1..xn.
    pub dirichlet: String,
    #[serde(default)]
    pub tether: Option<TetherConfig>,
    /// Optional sub-box of the grid; defaults to the whole grid.
    #[serde(rename = "box", default)]
    pub boxd: Option<BoxDomain>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPhaseConfig {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub kind: String,
    /// Two-phase base for 1D oscillating sequences.
    #[serde(default)]
    pub two_phase: Option<TwoPhaseConfig>,
    /// Periodic base entries over y1..yn (oscillating quadratic).
    #[serde(default)]
    pub base: Option<Vec<Vec<String>>>,
    /// Member formula over eta1..etam and h (autonomous sequences).
    #[serde(default)]
    pub f_h: Option<String>,
    /// Limit formula over eta1..etam.
    #[serde(default)]
    pub limit: Option<String>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub c0: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
}

impl SequenceConfig {
    pub fn build(&self, m: usize, n: usize, h_list: Vec<usize>) -> Result<crate::gamma::SequenceSpec> {
        match self.kind.as_str() {
            "oscillating_quadratic" => {
                if let Some(tp) = &self.two_phase {
                    if m != 1 {
                        return Err(XfgError::config("two_phase base is 1x1; family must have m = 1"));
                    }
                    return crate::gamma::SequenceSpec::two_phase_1d(
                        tp.alpha, tp.beta, tp.theta, h_list,
                    );
                }
                let base = self
                    .base
                    .as_ref()
                    .ok_or_else(|| XfgError::config("oscillating sequence needs `two_phase` or `base`"))?;
                if base.len() != m || base.iter().any(|r| r.len() != m) {
                    return Err(XfgError::config(format!("base must be {m} x {m}")));
                }
                let names = numbered_vars("y", n);
                let vars = vars_of(&names);
                let entries = base
                    .iter()
                    .map(|row| row.iter().map(|e| Expr::parse(e, &vars)).collect())
                    .collect::<Result<Vec<Vec<Expr>>>>()?;
                let field: MatrixFieldFn = Arc::new(move |y: &[f64]| {
                    nalgebra::DMatrix::from_fn(entries.len(), entries.len(), |i, j| {
                        entries[i][j].eval(y)
                    })
                });
                crate::gamma::SequenceSpec::oscillating_quadratic(
                    field,
                    m,
                    self.c0,
                    self.c1,
                    h_list,
                    "oscillating_quadratic",
                )
            }
            "autonomous_sequence" => {
                let f_h = self
                    .f_h
                    .as_ref()
                    .ok_or_else(|| XfgError::config("autonomous sequence needs `f_h`"))?;
                let limit_src = self
                    .limit
                    .as_ref()
                    .ok_or_else(|| XfgError::config("autonomous sequence needs `limit`"))?;
                let mut names = numbered_vars("eta", m);
                names.push("h".to_string());
                let vars = vars_of(&names);
                let member_expr = Expr::parse(f_h, &vars)?;
                let limit_names = numbered_vars("eta", m);
                let limit_vars = vars_of(&limit_names);
                let limit_expr = Expr::parse(limit_src, &limit_vars)?;
                let members = h_list
                    .iter()
                    .map(|&h| {
                        let expr = member_expr.clone();
                        let hf = h as f64;
                        Integrand::autonomous(
                            m,
                            self.p,
                            self.c0,
                            self.c1,
                            format!("{f_h} at h={h}"),
                            Arc::new(move |eta: &[f64]| {
                                let mut scratch = Vec::with_capacity(eta.len() + 1);
                                scratch.extend_from_slice(eta);
                                scratch.push(hf);
                                expr.eval(&scratch)
                            }),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                let limit = Integrand::autonomous(
                    m,
                    self.p,
                    self.c0,
                    self.c1,
                    limit_src.clone(),
                    Arc::new(move |eta: &[f64]| limit_expr.eval(eta)),
                )?;
                crate::gamma::SequenceSpec::autonomous(h_list, members, limit, "autonomous_sequence")
            }
            other => Err(XfgError::config(format!(
                "unknown sequence kind `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaExperimentConfig {
    pub family: FamilyConfig,
    pub sequence: SequenceConfig,
    pub grid: GridConfig,
    pub problem: ProblemConfig,
    pub h_list: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    /// "oracle" (needs two_phase), "limit", or "extrapolate" (default).
    #[serde(default)]
    pub reference: Option<String>,
    #[serde(default = "default_gap_threshold")]
    pub gap_threshold: f64,
}

fn default_gap_threshold() -> f64 {
    0.02
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_config_round_trip() {
        let cfg: FamilyConfig = serde_json::from_str(
            r#"{"kind": "grushin", "domain": {"lo": [-1, -1], "hi": [1, 1]}}"#,
        )
        .unwrap();
        let fam = cfg.build().unwrap();
        assert_eq!(fam.m(), 2);
        assert_eq!(fam.domain().hi, vec![1.0, 1.0]);

        let custom: FamilyConfig = serde_json::from_str(
            r#"{"kind": "custom", "n": 2, "m": 2,
                "domain": {"lo": [-1, -1], "hi": [1, 1]},
                "coeff": [["1", "0"], ["0", "x1"]]}"#,
        )
        .unwrap();
        let fam = custom.build().unwrap();
        let c = fam.coefficient_matrix(&[0.5, 0.0]).unwrap();
        assert_eq!(c[(1, 1)], 0.5);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: std::result::Result<FamilyConfig, _> =
            serde_json::from_str(r#"{"kind": "grushin", "typo": 1}"#);
        assert!(r.is_err());
    }

    #[test]
    fn integrand_config_builds_all_kinds() {
        let q: IntegrandConfig = serde_json::from_str(
            r#"{"kind": "quadratic", "c0": 1.0, "c1": 2.0, "a": [["1", "0"], ["0", "1"]]}"#,
        )
        .unwrap();
        let f = q.build(2, 2).unwrap();
        assert_eq!(f.evaluate(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);

        let a: IntegrandConfig = serde_json::from_str(
            r#"{"kind": "autonomous", "p": 2, "c0": 1, "c1": 1, "f": "eta1^2+eta2^2"}"#,
        )
        .unwrap();
        let f = a.build(2, 3).unwrap();
        assert!(f.is_autonomous());
        assert_eq!(f.evaluate(&[0.0; 3], &[1.0, 2.0]).unwrap(), 5.0);

        let g: IntegrandConfig = serde_json::from_str(
            r#"{"kind": "general", "p": 2, "c0": 0, "c1": 9, "f": "x1^2*(eta1^2+eta2^2)"}"#,
        )
        .unwrap();
        let f = g.build(2, 2).unwrap();
        assert_eq!(f.evaluate(&[2.0, 0.0], &[1.0, 1.0]).unwrap(), 8.0);

        let e: IntegrandConfig = serde_json::from_str(
            r#"{"kind": "autonomous", "p": 2, "c0": 1, "c1": 1, "f": "xi1^2+xi2^2+xi3^2"}"#,
        )
        .unwrap();
        let fe = e.build_euclidean(3).unwrap();
        assert_eq!(fe.evaluate(&[0.0; 3], &[0.0, 0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn grid_config_variants() {
        let g: GridConfig = serde_json::from_str(
            r#"{"box": {"lo": [0, 0], "hi": [1, 1]}, "res": 5}"#,
        )
        .unwrap();
        assert_eq!(g.build().unwrap().node_count(), 25);
        let g: GridConfig = serde_json::from_str(
            r#"{"box": {"lo": [0, 0], "hi": [1, 1]}, "res": [3, 5]}"#,
        )
        .unwrap();
        assert_eq!(g.build().unwrap().node_count(), 15);
    }

    #[test]
    fn sequence_config_two_phase_and_autonomous() {
        let s: SequenceConfig = serde_json::from_str(
            r#"{"kind": "oscillating_quadratic", "two_phase": {"alpha": 1, "beta": 4, "theta": 0.5}}"#,
        )
        .unwrap();
        let seq = s.build(1, 1, vec![2, 4]).unwrap();
        assert_eq!(seq.members.len(), 2);

        let s: SequenceConfig = serde_json::from_str(
            r#"{"kind": "autonomous_sequence", "p": 2, "c0": 1, "c1": 2,
                "f_h": "(1 + 1/h)*(eta1^2 + eta2^2)", "limit": "eta1^2 + eta2^2"}"#,
        )
        .unwrap();
        let seq = s.build(2, 3, vec![2, 4, 8]).unwrap();
        let v = seq.members[0].evaluate(&[0.0; 3], &[1.0, 0.0]).unwrap();
        assert_eq!(v, 1.5);
        assert_eq!(seq.limit.as_ref().unwrap().evaluate(&[0.0; 3], &[1.0, 0.0]).unwrap(), 1.0);
    }
}
