//! Geometric primitives: point clouds, squared distance matrices,
//! double-centering, scale parameters and the structural loss over optimal
//! rigid alignments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, Matrix};

/// Tolerance for identities that are exact up to rounding.
pub const EXACT_TOL: f64 = 1e-10;
/// Tolerance for composed pipelines.
pub const PIPELINE_TOL: f64 = 1e-8;

/// Squared Euclidean distance between two coordinate slices.
///
/// Shared by every module that measures distances so that a distance
/// computed from coordinates and one read back from a stored matrix are
/// bit-identical.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// An ordered collection of `n` points in `R^k`.
///
/// Serializes as `{"dim": k, "points": [[...], ...]}` with optional labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CloudRepr", try_from = "CloudRepr")]
pub struct PointCloud {
    dim: usize,
    /// Row-major coordinates, `n * dim` entries.
    points: Vec<f64>,
    labels: Option<Vec<String>>,
}

/// Wire representation of a point cloud.
#[derive(Serialize, Deserialize)]
pub struct CloudRepr {
    dim: usize,
    points: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    labels: Option<Vec<String>>,
}

impl From<PointCloud> for CloudRepr {
    fn from(c: PointCloud) -> Self {
        CloudRepr {
            dim: c.dim,
            points: c.iter_points().map(|p| p.to_vec()).collect(),
            labels: c.labels,
        }
    }
}

impl TryFrom<CloudRepr> for PointCloud {
    type Error = Error;

    fn try_from(r: CloudRepr) -> Result<Self> {
        let cloud = PointCloud::from_rows(r.dim, &r.points)?;
        match r.labels {
            Some(labels) => cloud.with_labels(labels),
            None => Ok(cloud),
        }
    }
}

impl PointCloud {
    /// Builds a cloud from flat row-major coordinates.
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()));
        }
        if points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch(format!(
                "coordinate buffer of length {} is not a positive multiple of dim {}",
                points.len(),
                dim
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("point cloud coordinates"));
        }
        Ok(PointCloud {
            dim,
            points,
            labels: None,
        })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(
                "every coordinate vector must have exactly dim entries".into(),
            ));
        }
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            flat.extend_from_slice(r);
        }
        PointCloud::new(dim, flat)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch(
                "one label per point required".into(),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: n >= 1
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.points
    }

    /// The cloud restricted to `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<PointCloud> {
        let mut flat = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidArgument(format!(
                    "point index {i} out of range (n = {})",
                    self.len()
                )));
            }
            flat.extend_from_slice(self.point(i));
        }
        PointCloud::new(self.dim, flat)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut c = vec![0.0; self.dim];
        for p in self.iter_points() {
            for (acc, x) in c.iter_mut().zip(p.iter()) {
                *acc += x;
            }
        }
        for x in c.iter_mut() {
            *x /= n;
        }
        c
    }

    /// The cloud translated so that its centroid is the origin.
    pub fn centered(&self) -> PointCloud {
        let c = self.centroid();
        let mut flat = self.points.clone();
        for p in flat.chunks_exact_mut(self.dim) {
            for (x, m) in p.iter_mut().zip(c.iter()) {
                *x -= m;
            }
        }
        PointCloud {
            dim: self.dim,
            points: flat,
            labels: self.labels.clone(),
        }
    }

    /// Largest point norm, the radius bound of the cloud.
    pub fn radius(&self) -> f64 {
        self.iter_points()
            .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Applies a rigid transform, returning the moved cloud.
    pub fn transformed(&self, alignment: &Alignment) -> PointCloud {
        let k = self.dim;
        let mut flat = Vec::with_capacity(self.points.len());
        for p in self.iter_points() {
            for r in 0..k {
                let mut acc = alignment.translation[r];
                for c in 0..k {
                    acc += alignment.rotation.get(r, c) * p[c];
                }
                flat.push(acc);
            }
        }
        PointCloud {
            dim: k,
            points: flat,
            labels: self.labels.clone(),
        }
    }
}

/// Symmetric `n×n` matrix of squared pairwise distances, optionally masked
/// to an observed pair set.
///
/// Entries are squared lengths; bias-corrected observations may dip slightly
/// below zero, so nonnegativity is enforced only where a matrix is built
/// from actual geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredDistanceMatrix {
    n: usize,
    entries: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl SquaredDistanceMatrix {
    /// Validates symmetry and a zero diagonal, then takes ownership.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {}x{} entries",
                n, n
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("squared distance matrix"));
        }
        let scale = entries.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let tol = 1e-9 * scale.max(1.0);
        for i in 0..n {
            if entries[i * n + i].abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry ({i},{i}) = {} must be zero",
                    entries[i * n + i]
                )));
            }
            for j in (i + 1)..n {
                if (entries[i * n + j] - entries[j * n + i]).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "asymmetric entries at ({i},{j})"
                    )));
                }
            }
        }
        let mut sdm = SquaredDistanceMatrix {
            n,
            entries,
            mask: None,
        };
        // Force exact symmetry and an exactly zero diagonal.
        for i in 0..n {
            sdm.entries[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let v = sdm.entries[i * n + j];
                sdm.entries[j * n + i] = v;
            }
        }
        Ok(sdm)
    }

    /// Builds a masked matrix from an explicit edge list of squared lengths.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries = vec![0.0; n * n];
        let mut mask = vec![false; n * n];
        for i in 0..n {
            mask[i * n + i] = true;
        }
        for &(i, j, d2) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidArgument(format!("bad edge ({i},{j})")));
            }
            if !d2.is_finite() {
                return Err(Error::NonFinite("edge squared length"));
            }
            entries[i * n + j] = d2;
            entries[j * n + i] = d2;
            mask[i * n + j] = true;
            mask[j * n + i] = true;
        }
        Ok(SquaredDistanceMatrix {
            n,
            entries,
            mask: Some(mask),
        })
    }

    pub fn zeros(n: usize) -> Self {
        SquaredDistanceMatrix {
            n,
            entries: vec![0.0; n * n],
            mask: None,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Sets the (i, j) and (j, i) entries together.
    pub fn set_pair(&mut self, i: usize, j: usize, d2: f64) {
        self.entries[i * self.n + j] = d2;
        self.entries[j * self.n + i] = d2;
    }

    pub fn observed(&self, i: usize, j: usize) -> bool {
        match &self.mask {
            None => true,
            Some(m) => m[i * self.n + j],
        }
    }

    pub fn is_fully_observed(&self) -> bool {
        match &self.mask {
            None => true,
            Some(m) => m.iter().all(|&b| b),
        }
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Observed off-diagonal pairs `(i, j)` with `i < j`.
    pub fn observed_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.observed(i, j) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// The principal submatrix on `indices`, fully observed entries required.
    pub fn submatrix(&self, indices: &[usize]) -> Result<SquaredDistanceMatrix> {
        let m = indices.len();
        let mut entries = vec![0.0; m * m];
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                if i >= self.n || j >= self.n {
                    return Err(Error::InvalidArgument("index out of range".into()));
                }
                if !self.observed(i, j) {
                    return Err(Error::RequiresFullObservation);
                }
                entries[a * m + b] = self.get(i, j);
            }
        }
        Ok(SquaredDistanceMatrix {
            n: m,
            entries,
            mask: None,
        })
    }
}

/// Per-principal-direction variances of a cloud, in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    /// `pi[i] = lambda_i / n`, eigenvalues of the centered Gram matrix
    /// divided by the point count, descending.
    pub pi: Vec<f64>,
    /// True when the centered cloud has rank below `k`.
    pub degenerate: bool,
}

impl ScaleParams {
    /// Largest variance `h = pi_1`.
    pub fn h(&self) -> f64 {
        self.pi[0]
    }

    /// Smallest variance `j = pi_k`.
    pub fn j(&self) -> f64 {
        *self.pi.last().unwrap()
    }

    /// Minimum consecutive gap, with `pi_{k+1}` taken as 0, so `g <= j`.
    pub fn g(&self) -> f64 {
        let mut g = f64::INFINITY;
        for w in self.pi.windows(2) {
            g = g.min(w[0] - w[1]);
        }
        g.min(self.j())
    }
}

/// A rigid transform `x -> R x + t` with `R` orthogonal (determinant ±1,
/// reflections allowed).
#[derive(Debug, Clone)]
pub struct Alignment {
    pub rotation: Matrix,
    pub translation: Vec<f64>,
}

impl Alignment {
    /// Validates orthonormality of the rotation columns to `1e-10`.
    pub fn new(rotation: Matrix, translation: Vec<f64>) -> Result<Self> {
        if !rotation.is_square() || rotation.rows() != translation.len() {
            return Err(Error::DimensionMismatch(
                "rotation and translation dimensions differ".into(),
            ));
        }
        let k = rotation.rows();
        for p in 0..k {
            for q in 0..k {
                let dot: f64 = (0..k).map(|i| rotation.get(i, p) * rotation.get(i, q)).sum();
                let expect = if p == q { 1.0 } else { 0.0 };
                if (dot - expect).abs() > EXACT_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "rotation columns not orthonormal: <c{p},c{q}> = {dot}"
                    )));
                }
            }
        }
        Ok(Alignment {
            rotation,
            translation,
        })
    }

    pub fn identity(k: usize) -> Self {
        Alignment {
            rotation: Matrix::identity(k),
            translation: vec![0.0; k],
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    /// Applies the transform to a single point.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let k = self.dim();
        let mut out = self.translation.clone();
        for r in 0..k {
            for c in 0..k {
                out[r] += self.rotation.get(r, c) * p[c];
            }
        }
        out
    }
}

/// Squared distance matrix of a cloud: `entries[i][j] = ‖P_i - P_j‖²`,
/// fully observed.
pub fn squared_distance_matrix(p: &PointCloud) -> SquaredDistanceMatrix {
    let n = p.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let pi = p.point(i);
        for j in (i + 1)..n {
            let d2 = sq_dist(pi, p.point(j));
            entries[i * n + j] = d2;
            entries[j * n + i] = d2;
        }
    }
    SquaredDistanceMatrix {
        n,
        entries,
        mask: None,
    }
}

/// Gram matrix of the centered configuration: `G = -1/2 H D H` with
/// `H = I - (1/n) 11ᵀ`. The result is symmetric with zero row sums.
pub fn gram_from_sdm(d: &SquaredDistanceMatrix) -> Result<Matrix> {
    if !d.is_fully_observed() {
        return Err(Error::RequiresFullObservation);
    }
    let n = d.size();
    let nf = n as f64;
    let mut row_mean = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += d.get(i, j);
        }
        row_mean[i] = acc / nf;
    }
    let grand_mean = row_mean.iter().sum::<f64>() / nf;
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = -0.5 * (d.get(i, j) - row_mean[i] - row_mean[j] + grand_mean);
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    Ok(g)
}

/// Scale parameters of a cloud: eigenvalues of the centered Gram matrix
/// divided by `n`, descending. Rank-deficient clouds are flagged, not
/// rejected; their smallest variance is clamped to zero.
pub fn scale_params(p: &PointCloud) -> Result<ScaleParams> {
    let n = p.len();
    let k = p.dim();
    if n < k {
        return Err(Error::InvalidArgument(format!(
            "need at least k = {k} points, got {n}"
        )));
    }
    // The nonzero eigenvalues of the n×n centered Gram matrix equal those of
    // the k×k scatter matrix  S = Σ_i pc_i pc_iᵀ.
    let centered = p.centered();
    let mut scatter = Matrix::zeros(k, k);
    for pt in centered.iter_points() {
        for r in 0..k {
            for c in r..k {
                let v = scatter.get(r, c) + pt[r] * pt[c];
                scatter.set(r, c, v);
                scatter.set(c, r, v);
            }
        }
    }
    let (mut vals, _) = matrix::sym_eigen(&scatter)?;
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top = vals[0].max(0.0);
    let mut pi: Vec<f64> = vals.iter().map(|&l| (l / n as f64).max(0.0)).collect();
    let mut degenerate = false;
    // Rank deficiency: eigenvalues at the level of rounding noise are zero.
    let rank_tol = 1e-12 * top.max(1e-300);
    for v in pi.iter_mut() {
        if *v * n as f64 <= rank_tol {
            *v = 0.0;
        }
    }
    if pi.last().copied().unwrap_or(0.0) == 0.0 {
        degenerate = true;
    }
    Ok(ScaleParams { pi, degenerate })
}

/// Structural loss between a reconstruction `K` and ground truth `P`:
/// the Frobenius residual, divided by `√n`, after the optimal alignment of
/// `P` onto `K` over the full Euclidean group (reflections included).
///
/// Returns the loss together with the minimizing [`Alignment`].
pub fn structural_loss(k_cloud: &PointCloud, p_cloud: &PointCloud) -> Result<(f64, Alignment)> {
    if k_cloud.dim() != p_cloud.dim() {
        return Err(Error::DimensionMismatch(format!(
            "dims differ: {} vs {}",
            k_cloud.dim(),
            p_cloud.dim()
        )));
    }
    if k_cloud.len() != p_cloud.len() {
        return Err(Error::DimensionMismatch(format!(
            "point counts differ: {} vs {}",
            k_cloud.len(),
            p_cloud.len()
        )));
    }
    let k = k_cloud.dim();
    let n = k_cloud.len();
    let kc = k_cloud.centered();
    let pc = p_cloud.centered();
    // Cross-covariance  M = Σ_i kc_i pc_iᵀ  (k×k).
    let mut m = Matrix::zeros(k, k);
    for (a, b) in kc.iter_points().zip(pc.iter_points()) {
        for r in 0..k {
            for c in 0..k {
                let v = m.get(r, c) + a[r] * b[c];
                m.set(r, c, v);
            }
        }
    }
    // Orthogonal alignment maximizing tr(Rᵀ M) over the whole orthogonal
    // group: R = U Vᵀ with no determinant correction, so reflections are
    // admissible.
    let (u, _sigma, v) = matrix::svd_square(&m)?;
    let rotation = u.matmul(&v.transpose());
    // Residual after rotating centered P onto centered K.
    let mut ss = 0.0;
    for (a, b) in kc.iter_points().zip(pc.iter_points()) {
        for r in 0..k {
            let mut rb = 0.0;
            for c in 0..k {
                rb += rotation.get(r, c) * b[c];
            }
            let d = a[r] - rb;
            ss += d * d;
        }
    }
    let loss = (ss / n as f64).sqrt();
    // Full transform maps original P onto K: t = mean(K) - R mean(P).
    let mean_k = k_cloud.centroid();
    let mean_p = p_cloud.centroid();
    let mut translation = mean_k.clone();
    for r in 0..k {
        for c in 0..k {
            translation[r] -= rotation.get(r, c) * mean_p[c];
        }
    }
    let alignment = Alignment {
        rotation,
        translation,
    };
    Ok((loss, alignment))
}
