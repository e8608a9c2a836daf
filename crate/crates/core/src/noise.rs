//! Independent Gaussian perturbation of pairwise distances and the bias
//! matrix used to debias squared observations.
//!
//! Each unordered pair (i, j) gets exactly one Gaussian draw from its own
//! counter-derived stream: the stream key is `splitmix64(seed ^ splitmix64(i
//! << 32 | j))` feeding a ChaCha8 generator, so a draw depends only on
//! `(seed, i, j)` and is reproducible regardless of iteration or thread
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SquaredDistanceMatrix;

/// Per-pair Gaussian standard deviations together with the RNG seed.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    n: usize,
    /// Symmetric, zero-diagonal matrix of standard deviations (lengths).
    sigma: Vec<f64>,
    pub seed: u64,
}

impl NoiseSpec {
    /// Uniform standard deviation on every off-diagonal pair.
    pub fn uniform(n: usize, sigma: f64, seed: u64) -> Result<Self> {
        if sigma < 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma must be finite and nonnegative, got {sigma}"
            )));
        }
        let mut m = vec![sigma; n * n];
        for i in 0..n {
            m[i * n + i] = 0.0;
        }
        Ok(NoiseSpec { n, sigma: m, seed })
    }

    /// Validates symmetry, a zero diagonal and nonnegativity.
    pub fn from_matrix(n: usize, sigma: Vec<f64>, seed: u64) -> Result<Self> {
        if sigma.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n}x{n} sigma matrix"
            )));
        }
        for i in 0..n {
            if sigma[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "sigma diagonal entry ({i},{i}) must be zero"
                )));
            }
            for j in 0..n {
                let v = sigma[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "sigma entry ({i},{j}) = {v} invalid"
                    )));
                }
                if v != sigma[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "sigma matrix asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(NoiseSpec { n, sigma, seed })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.n + j]
    }

    /// Largest standard deviation over all pairs.
    pub fn sigma_max(&self) -> f64 {
        self.sigma.iter().fold(0.0_f64, |m, &x| m.max(x))
    }

    /// The Gaussian draw for unordered pair (i, j); a pure function of
    /// `(seed, i, j)`.
    pub fn draw(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let key = splitmix64(self.seed ^ splitmix64(((a as u64) << 32) | b as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let z: f64 = StandardNormal.sample(&mut rng);
        z * self.sigma(a, b)
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Entrywise squared standard deviations `Σ_ij = σ_ij²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl BiasMatrix {
    pub fn zeros(n: usize) -> Self {
        BiasMatrix {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }
}

/// Result of perturbing a distance matrix: the noisy squared distances and
/// the count of raw distances that went negative before squaring (kept
/// as-is, never clamped).
#[derive(Debug, Clone)]
pub struct Perturbed {
    pub sdm: SquaredDistanceMatrix,
    pub negative_draws: usize,
}

/// Perturbs each observed pairwise distance once: `d̃ = d + δ` with
/// `δ ~ N(0, σ_ij²)`, storing `d̃²` mirrored across the diagonal.
/// Deterministic for a fixed seed.
pub fn perturb_distances(d: &SquaredDistanceMatrix, spec: &NoiseSpec) -> Result<Perturbed> {
    let n = d.size();
    if spec.size() != n {
        return Err(Error::DimensionMismatch(format!(
            "noise spec is {}x{} but matrix is {n}x{n}",
            spec.size(),
            spec.size()
        )));
    }
    let mut out = d.clone();
    let mut negative = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if !d.observed(i, j) {
                continue;
            }
            let delta = spec.draw(i, j);
            if delta == 0.0 {
                // Exact zero draw: avoid the sqrt/square round trip so the
                // entry stays bit-identical.
                continue;
            }
            let dist = d.get(i, j).sqrt();
            let noisy = dist + delta;
            if noisy < 0.0 {
                negative += 1;
            }
            out.set_pair(i, j, noisy * noisy);
        }
    }
    Ok(Perturbed {
        sdm: out,
        negative_draws: negative,
    })
}

/// The bias matrix of a noise spec: entrywise square of sigma.
pub fn bias_matrix(spec: &NoiseSpec) -> BiasMatrix {
    let n = spec.size();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let s = spec.sigma(i, j);
            entries[i * n + j] = s * s;
        }
    }
    BiasMatrix { n, entries }
}

/// Subtracts the bias from observed entries, forcing the diagonal to zero.
/// Entries may go slightly negative; classical MDS tolerates that.
pub fn debias(dt: &SquaredDistanceMatrix, bias: &BiasMatrix) -> Result<SquaredDistanceMatrix> {
    let n = dt.size();
    if bias.size() != n {
        return Err(Error::DimensionMismatch(format!(
            "bias is {}x{} but matrix is {n}x{n}",
            bias.size(),
            bias.size()
        )));
    }
    let mut out = dt.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            if !dt.observed(i, j) {
                continue;
            }
            out.set_pair(i, j, dt.get(i, j) - bias.get(i, j));
        }
    }
    Ok(out)
}
