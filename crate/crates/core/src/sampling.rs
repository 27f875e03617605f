//! Deterministic sample sets for the check operations: lattice x-points plus a
//! reproducible argument battery (canonical basis, pairwise sums, seeded
//! directions at three scales).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::BoxDomain;

/// Points and argument vectors fed to a sampled check.
#[derive(Debug, Clone)]
pub struct SampleSpec {
    pub points: Vec<Vec<f64>>,
    pub args: Vec<Vec<f64>>,
    seed: u64,
}

pub const DEFAULT_LATTICE_PER_AXIS: usize = 17;
pub const DEFAULT_RANDOM_DIRECTIONS: usize = 64;

impl SampleSpec {
    pub fn new(points: Vec<Vec<f64>>, args: Vec<Vec<f64>>, seed: u64) -> Self {
        SampleSpec { points, args, seed }
    }

    /// 17-per-axis lattice over `domain`, default argument battery of
    /// dimension `arg_dim`.
    pub fn standard(domain: &BoxDomain, arg_dim: usize, seed: u64) -> Self {
        SampleSpec {
            points: lattice_points(domain, DEFAULT_LATTICE_PER_AXIS),
            args: argument_battery(arg_dim, seed, DEFAULT_RANDOM_DIRECTIONS),
            seed,
        }
    }

    /// Deterministic arguments only: canonical basis and pairwise sums.
    pub fn basis(domain: &BoxDomain, per_axis: usize, arg_dim: usize) -> Self {
        SampleSpec {
            points: lattice_points(domain, per_axis),
            args: basis_and_sums(arg_dim),
            seed: 0,
        }
    }

    /// Canonical basis vectors only. Residuals of unit-direction identities
    /// then reproduce hand-computed witnesses exactly.
    pub fn canonical(domain: &BoxDomain, per_axis: usize, arg_dim: usize) -> Self {
        SampleSpec {
            points: lattice_points(domain, per_axis),
            args: canonical_basis(arg_dim),
            seed: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Argument index pairs for midpoint-convexity tests: consecutive pairs
    /// plus a seeded batch, deduplicated, deterministic for a given spec.
    pub fn pairs(&self, extra: usize) -> Vec<(usize, usize)> {
        let n = self.args.len();
        let mut out = Vec::new();
        if n < 2 {
            return out;
        }
        for i in 0..n - 1 {
            out.push((i, i + 1));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x70ab_5afe);
        for _ in 0..extra {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j {
                out.push((i.min(j), i.max(j)));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// `per_axis`-per-axis node lattice over the box (includes both faces).
pub fn lattice_points(domain: &BoxDomain, per_axis: usize) -> Vec<Vec<f64>> {
    assert!(per_axis >= 2);
    let n = domain.dim();
    let total = per_axis.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut idx = flat;
        let mut x = Vec::with_capacity(n);
        for a in 0..n {
            let i = idx % per_axis;
            idx /= per_axis;
            let t = i as f64 / (per_axis - 1) as f64;
            x.push(domain.lo[a] + t * (domain.hi[a] - domain.lo[a]));
        }
        out.push(x);
    }
    out
}

/// The canonical basis of R^dim.
pub fn canonical_basis(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect()
}

/// Canonical basis vectors plus their pairwise sums.
pub fn basis_and_sums(dim: usize) -> Vec<Vec<f64>> {
    let mut out = canonical_basis(dim);
    for i in 0..dim {
        for j in i + 1..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e[j] = 1.0;
            out.push(e);
        }
    }
    out
}

/// Basis + sums + `n_random` seeded unit directions, each at scales 1/2, 1, 2.
pub fn argument_battery(dim: usize, seed: u64, n_random: usize) -> Vec<Vec<f64>> {
    let mut out = basis_and_sums(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let dir = unit_direction(dim, &mut rng);
        for scale in [0.5, 1.0, 2.0] {
            out.push(dir.iter().map(|d| d * scale).collect());
        }
    }
    out
}

/// Uniform points in a box.
pub fn points_in_box(domain: &BoxDomain, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            (0..domain.dim())
                .map(|a| rng.gen_range(domain.lo[a]..domain.hi[a]))
                .collect()
        })
        .collect()
}

/// A unit vector from Box-Muller gaussians (deterministic under the rng).
pub fn unit_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_includes_faces_and_center() {
        let pts = lattice_points(&BoxDomain::centered(2, 1.0), 3);
        assert_eq!(pts.len(), 9);
        assert!(pts.contains(&vec![-1.0, -1.0]));
        assert!(pts.contains(&vec![0.0, 0.0]));
        assert!(pts.contains(&vec![1.0, 1.0]));
    }

    #[test]
    fn battery_composition() {
        let args = argument_battery(2, 7, 4);
        // 2 basis + 1 sum + 4*3 scaled directions
        assert_eq!(args.len(), 15);
        assert_eq!(args[0], vec![1.0, 0.0]);
        assert_eq!(args[2], vec![1.0, 1.0]);
        // scales are 0.5 / 1 / 2 of the same direction
        let d = &args[3];
        let d2 = &args[5];
        assert!((d[0] * 4.0 - d2[0]).abs() < 1e-12);
    }

    #[test]
    fn determinism() {
        let a = argument_battery(3, 42, 8);
        let b = argument_battery(3, 42, 8);
        assert_eq!(a, b);
        let c = argument_battery(3, 43, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn pairs_are_deduplicated_and_sorted() {
        let spec = SampleSpec::standard(&BoxDomain::centered(1, 1.0), 2, 5);
        let pairs = spec.pairs(32);
        for w in pairs.windows(2) {
            assert!(w[0] < w[1]);
        }
        for (i, j) in pairs {
            assert!(i < j && j < spec.args.len());
        }
    }
}
