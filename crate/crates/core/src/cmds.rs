//! Classical MDS with spectral diagnostics.
//!
//! The pipeline is: squared distance matrix → double centering → symmetric
//! eigendecomposition → embedding rows `√λ_i · u_i`. Around it sit the
//! diagnostics that control reconstruction quality under noise: the
//! Gershgorin bound on a perturbation's spectrum, the spectral gap, Weyl and
//! eigenvector perturbation checks, and the theoretical error envelope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{gram_from_sdm, PointCloud, ScaleParams, SquaredDistanceMatrix};
use crate::matrix::{self, Matrix};

/// Gap threshold below which eigenvector comparisons are meaningless and
/// skipped (near-equal eigenvalues mix freely).
pub const GAP_DEGENERATE_TOL: f64 = 1e-8;

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// `λ_1 ≥ … ≥ λ_n`.
    pub eigenvalues: Vec<f64>,
    /// Row `i` is the unit eigenvector matching `eigenvalues[i]`, with the
    /// sign fixed so the entry of largest absolute value is nonnegative.
    pub eigenvectors: Matrix,
}

impl SpectralDecomposition {
    pub fn vector(&self, i: usize) -> &[f64] {
        self.eigenvectors.row(i)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Eigendecomposition of a symmetric matrix with a deterministic ordering
/// and sign convention.
///
/// The input may be asymmetric up to `1e-8` (relative to its largest entry);
/// it is symmetrized by averaging before decomposition.
pub fn symmetric_eig(g: &Matrix) -> Result<SpectralDecomposition> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch("matrix must be square".into()));
    }
    if !g.is_finite() {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    let tol = 1e-8 * g.max_abs().max(1.0);
    if g.asymmetry() > tol {
        return Err(Error::InvalidArgument(format!(
            "matrix asymmetric beyond tolerance: {:.3e} > {tol:.3e}",
            g.asymmetry()
        )));
    }
    let mut work = g.clone();
    work.symmetrize();
    let n = work.rows();
    let (values, vectors) = matrix::sym_eigen(&work)?;
    // Descending by value; stable on ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut eigenvalues = Vec::with_capacity(n);
    let mut rows = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(values[src]);
        // Sign convention: the entry of largest magnitude (first such index
        // on ties) is nonnegative.
        let mut best = 0;
        for i in 1..n {
            if vectors.get(i, src).abs() > vectors.get(best, src).abs() {
                best = i;
            }
        }
        let flip = if vectors.get(best, src) < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            rows.set(dst, i, flip * vectors.get(i, src));
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors: rows,
    })
}

/// Output of [`cmds_embed`]: the embedded cloud plus spectral bookkeeping.
#[derive(Debug, Clone)]
pub struct EmbedResult {
    pub cloud: PointCloud,
    /// The top-k eigenvalues of the centered Gram matrix, descending,
    /// before clamping.
    pub eigenvalues: Vec<f64>,
    /// How many of the top-k eigenvalues were negative and clamped to zero.
    pub clamped: usize,
}

/// Above this size the embedding extracts only the top-k eigenpairs by
/// subspace iteration; the full decomposition remains the fallback.
const FULL_EIG_LIMIT: usize = 64;

/// Classical MDS embedding into `R^k`: double-center the squared distance
/// matrix, eigendecompose, clamp negative top-k eigenvalues to zero and
/// scale the eigenvectors.
///
/// Large inputs take a certified subspace-iteration path for the leading
/// eigenpairs; whenever it cannot certify convergence, or the leading
/// spectrum is not strictly positive (where the magnitude-chasing iteration
/// could mis-rank), the full solver decides.
pub fn cmds_embed(d: &SquaredDistanceMatrix, k: usize) -> Result<EmbedResult> {
    let n = d.size();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "embedding dimension k = {k} must be in 1..={n}"
        )));
    }
    let g = gram_from_sdm(d)?;
    let (values, vectors) = if n > FULL_EIG_LIMIT {
        match matrix::top_eigenpairs(&g, k, 1e-12, 300) {
            Ok((values, vectors)) if values.iter().all(|&l| l > 0.0) => (values, vectors),
            _ => full_top_pairs(&g, k)?,
        }
    } else {
        full_top_pairs(&g, k)?
    };
    let mut clamped = 0;
    let mut coords = vec![0.0; n * k];
    for i in 0..k {
        let lambda = values[i];
        let scale = if lambda > 0.0 {
            lambda.sqrt()
        } else {
            if lambda < 0.0 {
                clamped += 1;
            }
            0.0
        };
        let u = vectors.row(i);
        for j in 0..n {
            coords[j * k + i] = scale * u[j];
        }
    }
    Ok(EmbedResult {
        cloud: PointCloud::new(k, coords)?,
        eigenvalues: values,
        clamped,
    })
}

fn full_top_pairs(g: &Matrix, k: usize) -> Result<(Vec<f64>, Matrix)> {
    let dec = symmetric_eig(g)?;
    let n = g.rows();
    let mut rows = Matrix::zeros(k, n);
    for i in 0..k {
        let u = dec.vector(i);
        for j in 0..n {
            rows.set(i, j, u[j]);
        }
    }
    Ok((dec.eigenvalues[..k].to_vec(), rows))
}

/// Gershgorin bound `max_j Σ_i |A_ij|`; an upper bound on the spectral
/// radius of any square matrix.
pub fn gershgorin_bound(a: &Matrix) -> f64 {
    assert!(a.is_square(), "Gershgorin bound needs a square matrix");
    let n = a.rows();
    let mut best = 0.0_f64;
    for j in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            col += a.get(i, j).abs();
        }
        best = best.max(col);
    }
    best
}

/// Theoretical error envelope for debiased cMDS under independent Gaussian
/// noise:
///
/// ```text
/// prefactor · (σ_M r k / n^ζ) · sqrt( 1/(4 j²) + 8 h / g² )
/// ```
///
/// The unspecified constant in front is exposed as `prefactor` (use 1.0 by
/// default). The value is for plotting and reporting, never a hard
/// assertion.
pub fn theory_error_envelope(
    pi: &ScaleParams,
    sigma_m: f64,
    r: f64,
    k: usize,
    n: usize,
    zeta: f64,
    prefactor: f64,
) -> Result<f64> {
    if !(zeta > 0.0 && zeta < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "zeta must lie in (0, 1/2), got {zeta}"
        )));
    }
    let j = pi.j();
    let g = pi.g();
    if j <= 0.0 || g <= 0.0 {
        return Err(Error::Degenerate(
            "error envelope needs j > 0 and g > 0".into(),
        ));
    }
    let shape = (1.0 / (4.0 * j * j) + 8.0 * pi.h() / (g * g)).sqrt();
    Ok(prefactor * sigma_m * r * k as f64 / (n as f64).powf(zeta) * shape)
}

/// Perturbation comparison between a clean Gram matrix and a noisy one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPerturbationReport {
    /// `‖E‖₂` with `E = G̃ − G`, by power iteration.
    pub e2norm: f64,
    /// Spectral gap `γ₀` of `G` over the first `k` consecutive gaps.
    pub spectral_gap: f64,
    /// `|δλ_i|` for every index, after matching spectra by descending order.
    pub eigenvalue_deltas: Vec<f64>,
    /// `‖δu_i‖` after sign alignment; empty when the gap is degenerate.
    pub eigenvector_deltas: Vec<f64>,
    /// Every `|δλ_i| ≤ ‖E‖₂ + 1e-8`.
    pub weyl_holds: bool,
    /// Eigenvector stability bound `max_i ‖δu_i‖ ≤ 2√2 ‖E‖₂/γ₀ + 1e-8`,
    /// asserted only when `γ₀ > 2‖E‖₂`; `None` otherwise.
    pub davis_kahan_holds: Option<bool>,
    /// Gaps below [`GAP_DEGENERATE_TOL`]: eigenvector comparison skipped.
    pub gap_degenerate: bool,
}

/// Spectral diagnostics of a perturbed Gram matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralDiagnostics {
    /// Spectral gap `γ₀` of the clean matrix over the first `k` gaps.
    pub spectral_gap: f64,
    /// Gershgorin bound on the perturbed matrix's spectral radius.
    pub gershgorin_radius: f64,
    /// Gershgorin bound on the perturbation `E = G̃ − G`; for symmetric `E`
    /// this dominates `‖E‖₂`.
    pub perturbation_2norm_bound: f64,
}

/// The minimum of the first `k` consecutive eigenvalue gaps of a descending
/// spectrum; the `(k+1)`-th value is taken as 0 when it does not exist.
fn spectral_gap(eigenvalues: &[f64], k: usize) -> f64 {
    let n = eigenvalues.len();
    let mut gap = f64::INFINITY;
    for i in 0..k.min(n) {
        let next = if i + 1 < n { eigenvalues[i + 1] } else { 0.0 };
        gap = gap.min(eigenvalues[i] - next);
    }
    if gap.is_finite() {
        gap
    } else {
        0.0
    }
}

/// Builds [`SpectralDiagnostics`] for a clean/noisy Gram pair.
pub fn spectral_diagnostics(g: &Matrix, gt: &Matrix, k: usize) -> Result<SpectralDiagnostics> {
    if g.rows() != gt.rows() || g.cols() != gt.cols() {
        return Err(Error::DimensionMismatch(
            "Gram matrices differ in size".into(),
        ));
    }
    let dec = symmetric_eig(g)?;
    let e = gt.sub(g);
    Ok(SpectralDiagnostics {
        spectral_gap: spectral_gap(&dec.eigenvalues, k),
        gershgorin_radius: gershgorin_bound(gt),
        perturbation_2norm_bound: gershgorin_bound(&e),
    })
}

/// Compares the spectra of `G` and `G̃ = G + E`: measures `‖E‖₂`, per-index
/// eigenvalue and (sign-aligned) eigenvector deltas, and checks the Weyl and
/// eigenvector stability bounds.
pub fn eigen_perturbation_report(
    g: &Matrix,
    gt: &Matrix,
    k: usize,
) -> Result<EigenPerturbationReport> {
    if g.rows() != gt.rows() || g.cols() != gt.cols() {
        return Err(Error::DimensionMismatch(
            "Gram matrices differ in size".into(),
        ));
    }
    let n = g.rows();
    let k = k.min(n);
    let e = gt.sub(g);
    let e2norm = matrix::spectral_norm(&e);
    let clean = symmetric_eig(g)?;
    let noisy = symmetric_eig(gt)?;
    let gamma0 = spectral_gap(&clean.eigenvalues, k);

    let eigenvalue_deltas: Vec<f64> = clean
        .eigenvalues
        .iter()
        .zip(noisy.eigenvalues.iter())
        .map(|(a, b)| (b - a).abs())
        .collect();
    let weyl_holds = eigenvalue_deltas.iter().all(|&d| d <= e2norm + 1e-8);

    let gap_degenerate = gamma0 < GAP_DEGENERATE_TOL;
    let mut eigenvector_deltas = Vec::new();
    let mut davis_kahan_holds = None;
    if !gap_degenerate {
        for i in 0..n {
            let u = clean.vector(i);
            let v = noisy.vector(i);
            // Align signs before differencing: the convention can still flip
            // a vector whose largest entry sits near zero.
            let dot: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            let s = if dot < 0.0 { -1.0 } else { 1.0 };
            let norm: f64 = u
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (s * b - a).powi(2))
                .sum::<f64>()
                .sqrt();
            eigenvector_deltas.push(norm);
        }
        if gamma0 > 2.0 * e2norm {
            let bound = 2.0 * 2.0_f64.sqrt() * e2norm / gamma0 + 1e-8;
            let ok = eigenvector_deltas[..k].iter().all(|&d| d <= bound);
            davis_kahan_holds = Some(ok);
        }
    }

    Ok(EigenPerturbationReport {
        e2norm,
        spectral_gap: gamma0,
        eigenvalue_deltas,
        eigenvector_deltas,
        weyl_holds,
        davis_kahan_holds,
        gap_degenerate,
    })
}
