//! Dense linear algebra for small symmetric eigenproblems: dominant
//! eigenpairs by shifted power iteration (Jacobi fallback on small matrices),
//! top singular triples through the smaller Gram matrix, and population
//! covariance. Sized for Hessians up to a few thousand square.

use thiserror::Error;

/// Row-major dense matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count != rows*cols");
        DenseMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        DenseMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matvec dim mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.entries[i * self.cols..(i + 1) * self.cols];
            let mut s = 0.0;
            for (a, b) in row.iter().zip(v) {
                s += a * b;
            }
            out[i] = s;
        }
        out
    }

    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "tr_matvec dim mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = &self.entries[i * self.cols..(i + 1) * self.cols];
            let vi = v[i];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_symmetric_within(&self, rel: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > rel * scale {
                    return false;
                }
            }
        }
        true
    }
}

/// Dominant eigenpair with the iteration count and final residual ‖Mv − λv‖.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("eigen iteration stalled: residual {residual:.3e} > target {target:.3e} after {iterations} iterations")]
    NonConvergence {
        residual: f64,
        target: f64,
        iterations: usize,
    },
}

pub const DEFAULT_EIG_TOL: f64 = 1e-10;
pub const DEFAULT_EIG_MAX_ITER: usize = 10_000;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales `v` to unit norm in place; returns the old norm.
pub fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Largest (algebraic) eigenvalue and eigenvector of a symmetric matrix.
///
/// Shifted power iteration from the all-ones start vector: iterating with
/// M + ‖M‖_F·I makes the algebraically largest eigenvalue the dominant one
/// regardless of sign. On stagnation the iterate is restarted with a canonical
/// basis direction mixed in (deterministic, no deflation). If the tolerance
/// is still unmet after `max_iter` and the matrix is at most 64², falls back
/// to a full Jacobi decomposition; otherwise reports `NonConvergence`.
///
/// Success means residual ‖Mv − λv‖ ≤ tol·‖M‖_F.
pub fn top_eigenpair(
    m: &DenseMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<EigenResult, LinalgError> {
    assert_eq!(m.rows, m.cols, "top_eigenpair needs a square matrix");
    debug_assert!(
        m.is_symmetric_within(1e-10),
        "top_eigenpair needs a symmetric matrix"
    );
    let n = m.rows;
    let frob = m.frobenius_norm();
    if frob == 0.0 {
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        normalize(&mut v);
        return Ok(EigenResult {
            value: 0.0,
            vector: v,
            iterations: 0,
            residual: 0.0,
        });
    }
    let target = tol * frob;
    let shift = frob;

    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut best_res = f64::INFINITY;
    let mut since_improvement = 0usize;
    let mut restart_axis = 0usize;

    for it in 1..=max_iter {
        let mv = m.matvec(&v);
        let lambda = dot(&v, &mv);
        let mut res_sq = 0.0;
        for k in 0..n {
            let r = mv[k] - lambda * v[k];
            res_sq += r * r;
        }
        let residual = res_sq.sqrt();

        if residual <= target {
            // Power iteration can sit on a non-dominant eigenvector when the
            // start vector had no component along the top eigenspace. Probe a
            // few canonical directions; a larger Rayleigh quotient restarts
            // the iteration from the better direction.
            let mut better: Option<usize> = None;
            for j in 0..n.min(16) {
                // Rayleigh quotient of e_j is the diagonal entry.
                if m.get(j, j) > lambda + target {
                    better = Some(j);
                    break;
                }
            }
            match better {
                None => {
                    return Ok(EigenResult {
                        value: lambda,
                        vector: v,
                        iterations: it,
                        residual,
                    });
                }
                Some(j) => {
                    v = vec![0.0; n];
                    v[j] = 1.0;
                    best_res = f64::INFINITY;
                    since_improvement = 0;
                    continue;
                }
            }
        }

        if residual < 0.99 * best_res {
            best_res = residual;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if since_improvement >= 50 {
            // Stagnation: mix in a canonical basis vector, cycling the axis.
            v[restart_axis % n] += 0.5;
            restart_axis += 1;
            normalize(&mut v);
            since_improvement = 0;
            continue;
        }

        let mut next = mv;
        for k in 0..n {
            next[k] += shift * v[k];
        }
        if normalize(&mut next) == 0.0 {
            // Shifted image vanished; restart from a basis vector.
            next = vec![0.0; n];
            next[restart_axis % n] = 1.0;
            restart_axis += 1;
        }
        v = next;
    }

    if n <= 64 {
        let (values, vectors) = jacobi_eigh(m);
        let mut top = 0;
        for i in 1..n {
            if values[i] > values[top] {
                top = i;
            }
        }
        let mut vec_top: Vec<f64> = (0..n).map(|k| vectors.get(k, top)).collect();
        normalize(&mut vec_top);
        let mv = m.matvec(&vec_top);
        let lambda = values[top];
        let residual = (0..n)
            .map(|k| (mv[k] - lambda * vec_top[k]).powi(2))
            .sum::<f64>()
            .sqrt();
        return Ok(EigenResult {
            value: lambda,
            vector: vec_top,
            iterations: max_iter,
            residual,
        });
    }

    Err(LinalgError::NonConvergence {
        residual: best_res,
        target,
        iterations: max_iter,
    })
}

pub fn top_eigenpair_default(m: &DenseMatrix) -> Result<EigenResult, LinalgError> {
    top_eigenpair(m, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER)
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvector matrix with eigenvectors in columns),
/// unordered. Exact within machine precision for the sizes used here.
pub fn jacobi_eigh(m: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    assert_eq!(m.rows, m.cols, "jacobi_eigh needs a square matrix");
    let n = m.rows;
    let mut a = m.entries.clone();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() < 1e-300 {
            break;
        }
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    let values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    (values, v)
}

/// Top singular triple (σ, u, v) with m·v ≈ σ·u, σ ≥ 0.
///
/// Goes through the smaller of mᵀm and m·mᵀ, so a tall-skinny matrix costs an
/// eigenproblem of its column count only.
pub fn top_singular_triple(
    m: &DenseMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>, Vec<f64>), LinalgError> {
    let frob = m.frobenius_norm();
    if frob == 0.0 {
        return Err(LinalgError::NonConvergence {
            residual: f64::INFINITY,
            target: tol,
            iterations: 0,
        });
    }
    if m.cols <= m.rows {
        let g = gram_tt(m); // mᵀm, cols×cols
        let eig = top_eigenpair(&g, tol, max_iter)?;
        let sigma = eig.value.max(0.0).sqrt();
        let v = eig.vector;
        let mut u = m.matvec(&v);
        if normalize(&mut u) == 0.0 {
            return Err(LinalgError::NonConvergence {
                residual: f64::INFINITY,
                target: tol,
                iterations: eig.iterations,
            });
        }
        Ok((sigma, u, v))
    } else {
        let g = gram_nn(m); // m·mᵀ, rows×rows
        let eig = top_eigenpair(&g, tol, max_iter)?;
        let sigma = eig.value.max(0.0).sqrt();
        let u = eig.vector;
        let mut v = m.tr_matvec(&u);
        if normalize(&mut v) == 0.0 {
            return Err(LinalgError::NonConvergence {
                residual: f64::INFINITY,
                target: tol,
                iterations: eig.iterations,
            });
        }
        // Re-orient u so that m·v points along it.
        let mv = m.matvec(&v);
        let mut u = u;
        if dot(&mv, &u) < 0.0 {
            for x in u.iter_mut() {
                *x = -*x;
            }
        }
        Ok((sigma, u, v))
    }
}

fn gram_tt(m: &DenseMatrix) -> DenseMatrix {
    let (r, c) = (m.rows, m.cols);
    let mut g = DenseMatrix::zeros(c, c);
    for k in 0..r {
        let row = &m.entries[k * c..(k + 1) * c];
        for i in 0..c {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..c {
                let val = g.get(i, j) + ri * row[j];
                g.set(i, j, val);
            }
        }
    }
    for i in 0..c {
        for j in (i + 1)..c {
            let val = g.get(i, j);
            g.set(j, i, val);
        }
    }
    g
}

fn gram_nn(m: &DenseMatrix) -> DenseMatrix {
    let (r, c) = (m.rows, m.cols);
    let mut g = DenseMatrix::zeros(r, r);
    for i in 0..r {
        let ri = &m.entries[i * c..(i + 1) * c];
        for j in i..r {
            let rj = &m.entries[j * c..(j + 1) * c];
            let val = dot(ri, rj);
            g.set(i, j, val);
            g.set(j, i, val);
        }
    }
    g
}

/// Population covariance (divide by n) of the points under the uniform
/// empirical distribution. Two-pass: center, then accumulate outer products.
pub fn covariance(points: &[Vec<f64>]) -> DenseMatrix {
    assert!(!points.is_empty(), "covariance of an empty point set");
    let d = points[0].len();
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    for p in points {
        assert_eq!(p.len(), d, "covariance points must share a dimension");
        for k in 0..d {
            mean[k] += p[k];
        }
    }
    for mk in mean.iter_mut() {
        *mk /= n;
    }
    let mut cov = DenseMatrix::zeros(d, d);
    for p in points {
        for a in 0..d {
            let da = p[a] - mean[a];
            for b in a..d {
                let val = cov.get(a, b) + da * (p[b] - mean[b]) / n;
                cov.set(a, b, val);
            }
        }
    }
    for a in 0..d {
        for b in (a + 1)..d {
            let val = cov.get(a, b);
            cov.set(b, a, val);
        }
    }
    cov
}
