//! Axis-aligned boxes in dimension n <= 3.

use serde::{Deserialize, Serialize};

use crate::error::{Result, XfgError};

pub const MAX_DIM: usize = 3;

/// A closed axis-aligned box `[lo_1,hi_1] x ... x [lo_n,hi_n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(XfgError::argument("box lo/hi dimension mismatch"));
        }
        if lo.is_empty() || lo.len() > MAX_DIM {
            return Err(XfgError::argument(format!(
                "box dimension must be 1..={MAX_DIM}, got {}",
                lo.len()
            )));
        }
        for i in 0..lo.len() {
            if !(lo[i] < hi[i]) || !lo[i].is_finite() || !hi[i].is_finite() {
                return Err(XfgError::argument(format!(
                    "box axis {} is empty or not finite: [{}, {}]",
                    i + 1,
                    lo[i],
                    hi[i]
                )));
            }
        }
        Ok(BoxDomain { lo, hi })
    }

    /// `[-r, r]^n`.
    pub fn centered(n: usize, r: f64) -> Self {
        BoxDomain::new(vec![-r; n], vec![r; n]).expect("symmetric box")
    }

    /// `[0, 1]^n`.
    pub fn unit(n: usize) -> Self {
        BoxDomain::new(vec![0.0; n], vec![1.0; n]).expect("unit box")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(self.hi.iter()))
                .all(|(xi, (lo, hi))| *xi >= *lo && *xi <= *hi)
    }

    /// True when `inner` fits in `self` with margin at least `pad` on every side.
    pub fn contains_with_margin(&self, inner: &BoxDomain, pad: f64) -> bool {
        inner.dim() == self.dim()
            && (0..self.dim()).all(|i| {
                inner.lo[i] - self.lo[i] >= pad - 1e-12 && self.hi[i] - inner.hi[i] >= pad - 1e-12
            })
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.hi[i] - self.lo[i]).product()
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_guards() {
        assert!(BoxDomain::new(vec![0.0], vec![1.0]).is_ok());
        assert!(BoxDomain::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![0.0; 4], vec![1.0; 4]).is_err());
    }

    #[test]
    fn membership_and_margin() {
        let b = BoxDomain::centered(2, 1.0);
        assert!(b.contains(&[0.5, -1.0]));
        assert!(!b.contains(&[1.5, 0.0]));
        assert!(!b.contains(&[0.0]));
        let inner = BoxDomain::centered(2, 0.5);
        assert!(b.contains_with_margin(&inner, 0.5));
        assert!(!b.contains_with_margin(&inner, 0.6));
        assert_eq!(b.volume(), 4.0);
    }
}
