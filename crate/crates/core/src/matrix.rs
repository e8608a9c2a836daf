//! Dense matrices and the numerical kernels the rest of the crate builds on.
//!
//! Everything here is plain `f64` on row-major storage. The symmetric
//! eigensolver is the classic EISPACK pair (Householder reduction to
//! tridiagonal form followed by the implicit-shift QL iteration), which is
//! deterministic and accurate to a few ulps of `‖A‖` — far below every
//! tolerance asserted by the higher-level modules. The one-sided Jacobi SVD
//! is only used on small `k×k` cross-covariance matrices.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(v.iter()) {
                acc += a * b;
            }
            out[i] = acc;
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Maximum absolute asymmetry `|a_ij - a_ji|` over all pairs.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Replaces the matrix by `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Returns `(values, vectors)` with eigenvalues in ascending order and the
/// matching eigenvectors as *columns* of `vectors`. The input must already
/// be symmetric; callers are expected to symmetrize first.
pub fn sym_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    assert!(a.is_square(), "sym_eigen requires a square matrix");
    let n = a.rows;
    let mut z = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, &mut d, &mut e);
    tql2(&mut z, &mut d, &mut e)?;
    Ok((d, z))
}

/// Householder reduction of a real symmetric matrix to tridiagonal form,
/// accumulating the orthogonal transform in `z` (EISPACK `tred2`).
///
/// On exit `d` holds the diagonal, `e[1..]` the subdiagonal, and the columns
/// of `z` the accumulated transform.
fn tred2(z: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = z.rows;
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += z.get(i, k).abs();
            }
            if scale == 0.0 {
                e[i] = z.get(i, l);
            } else {
                for k in 0..=l {
                    let v = z.get(i, k) / scale;
                    z.set(i, k, v);
                    h += v * v;
                }
                let f = z.get(i, l);
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z.set(i, l, f - g);
                let mut f_acc = 0.0;
                for j in 0..=l {
                    z.set(j, i, z.get(i, j) / h);
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += z.get(j, k) * z.get(i, k);
                    }
                    for k in (j + 1)..=l {
                        g_acc += z.get(k, j) * z.get(i, k);
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * z.get(i, j);
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = z.get(i, j);
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let v = z.get(j, k) - (f * e[k] + g * z.get(i, k));
                        z.set(j, k, v);
                    }
                }
            }
        } else {
            e[i] = z.get(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    // Accumulate the transformation.
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z.get(i, k) * z.get(k, j);
                }
                for k in 0..i {
                    let v = z.get(k, j) - g * z.get(k, i);
                    z.set(k, j, v);
                }
            }
        }
        d[i] = z.get(i, i);
        z.set(i, i, 1.0);
        for j in 0..i {
            z.set(j, i, 0.0);
            z.set(i, j, 0.0);
        }
    }
}

/// Implicit-shift QL iteration on the tridiagonal form produced by [`tred2`]
/// (EISPACK `tql2`). Eigenvectors accumulate into the columns of `z`.
fn tql2(z: &mut Matrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = z.rows;
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    const MAX_ITER: usize = 50;
    for l in 0..n {
        let mut iter = 0;
        loop {
            // Look for a negligible subdiagonal element to split the matrix.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_ITER {
                return Err(Error::NoConvergence(format!(
                    "QL iteration exceeded {MAX_ITER} steps at index {l}"
                )));
            }
            // Wilkinson shift.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            if g < 0.0 {
                r = -r;
            }
            g = d[m] - d[l] + e[l] / (g + r);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z.get(k, i + 1);
                    z.set(k, i + 1, s * z.get(k, i) + c * f);
                    z.set(k, i, c * z.get(k, i) - s * f);
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Top `k` eigenpairs (algebraically largest) of a symmetric matrix by
/// simultaneous subspace iteration with Rayleigh-Ritz extraction.
///
/// Returns `(values, vectors)` with values descending and eigenvectors as
/// rows. Convergence is certified by the residuals `‖A v − θ v‖ ≤ tol`;
/// if the iteration cannot certify all `k` pairs within `max_iter` sweeps
/// it reports [`Error::NoConvergence`] and callers fall back to the full
/// decomposition. The start basis is fixed, so results are deterministic.
///
/// The subspace chases the largest eigenvalues *by magnitude*, so a
/// spectrum with more than `buffer` negative eigenvalues exceeding the
/// k-th positive one can evade it; [`crate::cmds::cmds_embed`] guards that
/// case by falling back whenever a returned value is not positive.
pub fn top_eigenpairs(
    a: &Matrix,
    k: usize,
    tol_rel: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Matrix)> {
    assert!(a.is_square());
    let n = a.rows;
    assert!(k >= 1 && k <= n);
    let buffer = 4usize;
    let b = (k + buffer).min(n);
    let scale = {
        // Gershgorin bound on the spectral radius.
        let mut best = 0.0_f64;
        for j in 0..n {
            let mut col = 0.0;
            for i in 0..n {
                col += a.get(i, j).abs();
            }
            best = best.max(col);
        }
        best.max(1e-300)
    };
    let tol = tol_rel * scale;
    // Deterministic start basis.
    let mut v = Matrix::zeros(n, b);
    let mut state = 0x9e3779b97f4a7c15_u64;
    for i in 0..n {
        for j in 0..b {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let r = (state >> 11) as f64 / (1u64 << 53) as f64;
            v.set(i, j, r - 0.5);
        }
    }
    orthonormalize_columns(&mut v)?;
    let mut av = a.matmul(&v);
    drop(v);
    for _ in 0..max_iter {
        // Power step: the next basis is orth(A V); A V is already at hand.
        let mut w = av;
        orthonormalize_columns(&mut w)?;
        let aw = a.matmul(&w);
        // Rayleigh-Ritz on the subspace.
        let mut s = Matrix::zeros(b, b);
        for p in 0..b {
            for q in p..b {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += w.get(i, p) * aw.get(i, q);
                }
                s.set(p, q, acc);
                s.set(q, p, acc);
            }
        }
        let (theta, y) = sym_eigen(&s)?;
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&x, &z| theta[z].total_cmp(&theta[x]).then(x.cmp(&z)));
        // Ritz rotation, applied to both W and A·W so the next power step
        // costs nothing extra.
        let mut rotation = Matrix::zeros(b, b);
        for (dst, &src) in order.iter().enumerate() {
            for p in 0..b {
                rotation.set(p, dst, y.get(p, src));
            }
        }
        let ritz = w.matmul(&rotation);
        let a_ritz = aw.matmul(&rotation);
        // Residuals of the k leading pairs: ‖A v − θ v‖.
        let mut converged = true;
        for j in 0..k {
            let th = theta[order[j]];
            let mut res = 0.0;
            for i in 0..n {
                let r = a_ritz.get(i, j) - th * ritz.get(i, j);
                res += r * r;
            }
            if res.sqrt() > tol {
                converged = false;
                break;
            }
        }
        if converged {
            let values: Vec<f64> = order[..k].iter().map(|&s| theta[s]).collect();
            let mut rows = Matrix::zeros(k, n);
            for j in 0..k {
                for i in 0..n {
                    rows.set(j, i, ritz.get(i, j));
                }
            }
            return Ok((values, rows));
        }
        av = a_ritz;
    }
    Err(Error::NoConvergence(format!(
        "subspace iteration did not certify {k} eigenpairs in {max_iter} sweeps"
    )))
}

/// Modified Gram-Schmidt with one reorthogonalization pass; replaces
/// numerically dependent columns with an error.
fn orthonormalize_columns(m: &mut Matrix) -> Result<()> {
    let n = m.rows;
    let b = m.cols;
    for j in 0..b {
        for _ in 0..2 {
            for p in 0..j {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += m.get(i, j) * m.get(i, p);
                }
                for i in 0..n {
                    let v = m.get(i, j) - dot * m.get(i, p);
                    m.set(i, j, v);
                }
            }
        }
        let mut norm = 0.0;
        for i in 0..n {
            norm += m.get(i, j) * m.get(i, j);
        }
        let norm = norm.sqrt();
        if norm < 1e-150 {
            return Err(Error::Degenerate(
                "subspace basis collapsed during orthonormalization".into(),
            ));
        }
        for i in 0..n {
            let v = m.get(i, j) / norm;
            m.set(i, j, v);
        }
    }
    Ok(())
}

/// Singular value decomposition `A = U Σ Vᵀ` of a square matrix by one-sided
/// Jacobi rotations. Intended for the small `k×k` systems that appear in
/// rigid alignment; singular values come back in descending order and both
/// `U` and `V` have orthonormal columns (zero singular directions are
/// completed to a full basis deterministically).
pub fn svd_square(a: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    assert!(a.is_square(), "svd_square requires a square matrix");
    let n = a.rows;
    let mut b = a.clone();
    let mut v = Matrix::identity(n);
    const MAX_SWEEPS: usize = 60;
    let eps = 1e-15;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..n {
                    let bp = b.get(i, p);
                    let bq = b.get(i, q);
                    alpha += bp * bp;
                    beta += bq * bq;
                    gamma += bp * bq;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let bp = b.get(i, p);
                    let bq = b.get(i, q);
                    b.set(i, p, c * bp - s * bq);
                    b.set(i, q, s * bp + c * bq);
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    // Column norms are the singular values.
    let mut order: Vec<usize> = (0..n).collect();
    let mut sigma = vec![0.0; n];
    for (j, s) in sigma.iter_mut().enumerate() {
        *s = (0..n).map(|i| b.get(i, j).powi(2)).sum::<f64>().sqrt();
    }
    order.sort_by(|&x, &y| sigma[y].partial_cmp(&sigma[x]).unwrap().then(x.cmp(&y)));
    let mut u = Matrix::zeros(n, n);
    let mut v_sorted = Matrix::zeros(n, n);
    let mut sigma_sorted = vec![0.0; n];
    let sig_max = order.first().map(|&j| sigma[j]).unwrap_or(0.0);
    let tol = 1e-13 * sig_max.max(1e-300);
    let mut filled = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        sigma_sorted[dst] = sigma[src];
        for i in 0..n {
            v_sorted.set(i, dst, v.get(i, src));
        }
        if sigma[src] > tol {
            for i in 0..n {
                u.set(i, dst, b.get(i, src) / sigma[src]);
            }
            filled.push(dst);
        }
    }
    // Complete U to a full orthonormal basis for the null directions by
    // Gram-Schmidt against the standard basis.
    for dst in 0..n {
        if filled.contains(&dst) {
            continue;
        }
        let mut col = vec![0.0; n];
        'candidate: for axis in 0..n {
            let mut cand = vec![0.0; n];
            cand[axis] = 1.0;
            for &f in &filled {
                let dot: f64 = (0..n).map(|i| cand[i] * u.get(i, f)).sum();
                for (i, c) in cand.iter_mut().enumerate() {
                    *c -= dot * u.get(i, f);
                }
            }
            let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for (c, x) in col.iter_mut().zip(cand.iter()) {
                    *c = x / norm;
                }
                break 'candidate;
            }
        }
        for i in 0..n {
            u.set(i, dst, col[i]);
        }
        filled.push(dst);
    }
    Ok((u, sigma_sorted, v_sorted))
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// Returns an error when a pivot falls below `tol` relative to the largest
/// entry of `A`, which the callers treat as a degenerate configuration.
pub fn solve_linear(a: &Matrix, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    assert!(a.is_square());
    assert_eq!(a.rows, b.len());
    let n = a.rows;
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let scale = m.max_abs().max(1e-300);
    let tol = rel_tol * scale;
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if m.get(r, col).abs() > m.get(pivot, col).abs() {
                pivot = r;
            }
        }
        let pv = m.get(pivot, col);
        if pv.abs() <= tol {
            return Err(Error::Degenerate(format!(
                "singular linear system (pivot {pv:.3e} at column {col})"
            )));
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m.get(col, j);
                m.set(col, j, m.get(pivot, j));
                m.set(pivot, j, tmp);
            }
            rhs.swap(col, pivot);
        }
        for r in (col + 1)..n {
            let factor = m.get(r, col) / m.get(col, col);
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m.get(r, j) - factor * m.get(col, j);
                m.set(r, j, v);
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in (i + 1)..n {
            acc -= m.get(i, j) * x[j];
        }
        x[i] = acc / m.get(i, i);
    }
    Ok(x)
}

/// Numerical rank by row echelon reduction with partial pivoting.
/// A pivot counts while its magnitude exceeds `rel_tol * max|a_ij|`.
pub fn rank(a: &Matrix, rel_tol: f64) -> usize {
    let mut m = a.clone();
    let tol = rel_tol * m.max_abs();
    if tol == 0.0 {
        return 0;
    }
    let mut rank = 0;
    let mut row = 0;
    for col in 0..m.cols {
        if row >= m.rows {
            break;
        }
        let mut pivot = row;
        for r in (row + 1)..m.rows {
            if m.get(r, col).abs() > m.get(pivot, col).abs() {
                pivot = r;
            }
        }
        if m.get(pivot, col).abs() <= tol {
            continue;
        }
        if pivot != row {
            for j in 0..m.cols {
                let tmp = m.get(row, j);
                m.set(row, j, m.get(pivot, j));
                m.set(pivot, j, tmp);
            }
        }
        for r in (row + 1)..m.rows {
            let factor = m.get(r, col) / m.get(row, col);
            if factor == 0.0 {
                continue;
            }
            for j in col..m.cols {
                let v = m.get(r, j) - factor * m.get(row, j);
                m.set(r, j, v);
            }
        }
        rank += 1;
        row += 1;
    }
    rank
}

/// Determinant by Gaussian elimination (small matrices only).
pub fn det(a: &Matrix) -> f64 {
    assert!(a.is_square());
    let n = a.rows;
    let mut m = a.clone();
    let mut sign = 1.0;
    let mut result = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if m.get(r, col).abs() > m.get(pivot, col).abs() {
                pivot = r;
            }
        }
        let pv = m.get(pivot, col);
        if pv == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m.get(col, j);
                m.set(col, j, m.get(pivot, j));
                m.set(pivot, j, tmp);
            }
            sign = -sign;
        }
        result *= m.get(col, col);
        for r in (col + 1)..n {
            let factor = m.get(r, col) / m.get(col, col);
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m.get(r, j) - factor * m.get(col, j);
                m.set(r, j, v);
            }
        }
    }
    sign * result
}

/// Spectral norm `‖A‖₂` estimated by power iteration on `AᵀA`, with a
/// deterministic start vector, relative tolerance `1e-10` and a cap of 1000
/// iterations.
pub fn spectral_norm(a: &Matrix) -> f64 {
    let n = a.cols;
    if n == 0 || a.rows == 0 {
        return 0.0;
    }
    if a.max_abs() == 0.0 {
        return 0.0;
    }
    // Deterministic, non-uniform start so it is not orthogonal to the top
    // singular direction for the structured matrices we feed in.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i % 7) as f64) * 0.125).collect();
    normalize(&mut v);
    let at = a.transpose();
    let mut sigma = 0.0;
    for _ in 0..1000 {
        let av = a.matvec(&v);
        let mut w = at.matvec(&av);
        let norm = normalize(&mut w);
        let new_sigma = norm.sqrt();
        let converged = (new_sigma - sigma).abs() <= 1e-10 * new_sigma.max(1e-300);
        sigma = new_sigma;
        v = w;
        if converged {
            break;
        }
    }
    sigma
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}
