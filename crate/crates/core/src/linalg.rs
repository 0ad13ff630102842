//! Dense complex matrix kernels.
//!
//! Everything here is written for small dense problems (dimension up to a
//! few thousand). Matrices are stored row-major. The Hermitian eigensolver
//! reduces to a real symmetric tridiagonal form with complex Householder
//! reflections and finishes with implicit-shift QL, so results are
//! deterministic and independent of any BLAS/LAPACK installation.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Acceptance bound on eigen-pair reconstruction, relative to `max(1, ‖A‖_max)`.
pub const SPECTRUM_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Seeded generator used for every random draw in the crate.
///
/// ChaCha8 has a fixed, documented output stream on all platforms, so a seed
/// printed in output metadata replays the run bit for bit.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter(
                "matrix has non-finite entries".into(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::LengthMismatch {
                expected: rows,
                got: bad.len(),
            });
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, a) in self.row(i).iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape("subtraction of mismatched shapes".into()));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `‖A − A†‖_max`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Hermitian inner product `⟨a|b⟩`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Extends an orthonormal list to a full basis of `C^dim`.
///
/// Candidates are the standard basis vectors in index order; each is
/// orthogonalized twice against everything accepted so far and kept if a
/// non-negligible component survives.
pub fn complete_basis(vectors: &[Vec<C64>], dim: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = vectors.to_vec();
    for e in 0..dim {
        if basis.len() >= dim {
            break;
        }
        let mut cand = vec![ZERO; dim];
        cand[e] = ONE;
        for _ in 0..2 {
            for b in &basis {
                let p = inner(b, &cand);
                for (c, bi) in cand.iter_mut().zip(b) {
                    *c -= p * bi;
                }
            }
        }
        let n = norm(&cand);
        if n > 1e-6 {
            cand.iter_mut().for_each(|c| *c /= n);
            basis.push(cand);
        }
    }
    basis
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
    /// `max_k ‖A v_k − λ_k v_k‖_max`.
    pub residual: f64,
}

/// Diagonalizes a Hermitian matrix.
pub fn herm_eig(a: &CMatrix) -> Result<Spectrum> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let herm = a.hermiticity_residual();
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let n = a.rows;
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0, 0),
            residual: 0.0,
        });
    }

    let (diag, offdiag, q) = tridiagonalize(a);

    // Rotate the complex off-diagonal onto the positive reals with a diagonal
    // unitary, so the remaining problem is real symmetric.
    let mut phases = vec![ONE; n];
    let mut sub = vec![0.0; n];
    for k in 0..n - 1 {
        let e = offdiag[k];
        let mag = e.norm();
        sub[k + 1] = mag;
        phases[k + 1] = if mag > 0.0 { phases[k] * e / mag } else { ONE };
    }

    let mut d = diag;
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql2(&mut d, &mut sub, &mut z, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));

    let qd = CMatrix::from_fn(n, n, |i, k| q[(i, k)] * phases[k]);
    let eigenvectors = CMatrix::from_fn(n, n, |i, jj| {
        let j = order[jj];
        (0..n).map(|k| qd[(i, k)] * z[k * n + j]).sum()
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&j| d[j]).collect();

    let av = a.matmul(&eigenvectors)?;
    let mut residual: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            residual = residual.max((av[(i, j)] - eigenvectors[(i, j)] * eigenvalues[j]).norm());
        }
    }
    if residual > SPECTRUM_TOL * a.max_abs().max(1.0) {
        return Err(Error::NoConvergence(format!(
            "eigenpair residual {residual:e} above tolerance"
        )));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        residual,
    })
}

/// Householder reduction `A = Q T Q†` with `T` Hermitian tridiagonal.
/// Returns the real diagonal of `T`, its complex sub-diagonal
/// (`T[k+1][k]`), and `Q`.
fn tridiagonalize(a: &CMatrix) -> (Vec<f64>, Vec<C64>, CMatrix) {
    let n = a.rows;
    let mut m = a.clone();
    let mut q = CMatrix::identity(n);
    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];

    for k in 0..n.saturating_sub(2) {
        let xnorm = (k + 1..n).map(|i| m[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = m[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;

        v.iter_mut().for_each(|z| *z = ZERO);
        for i in k + 1..n {
            v[i] = m[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm = norm(&v);
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vnorm);

        // A ← (I − 2vv†) A (I − 2vv†) = A − 2 v w† − 2 w v†, w = Av − (v†Av) v
        for i in 0..n {
            p[i] = (k + 1..n).map(|j| m[(i, j)] * v[j]).sum();
        }
        let kappa = inner(&v, &p);
        let w: Vec<C64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();
        for i in 0..n {
            for j in 0..n {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                if upd != ZERO {
                    m[(i, j)] -= upd * 2.0;
                }
            }
        }

        // Q ← Q (I − 2vv†)
        for i in 0..n {
            let qv: C64 = (k + 1..n).map(|j| q[(i, j)] * v[j]).sum();
            for j in k + 1..n {
                q[(i, j)] -= qv * v[j].conj() * 2.0;
            }
        }
    }

    let diag = (0..n).map(|i| m[(i, i)].re).collect();
    let offdiag = (0..n.saturating_sub(1)).map(|k| m[(k + 1, k)]).collect();
    (diag, offdiag, q)
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix.
///
/// `d` is the diagonal, `e[i]` (i ≥ 1) the element coupling `i − 1` and `i`.
/// Eigenvectors are accumulated into the row-major `z`.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    const MAX_ITER: usize = 60;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_ITER {
                    return Err(Error::NoConvergence(format!(
                        "QL iteration budget exhausted at index {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zk = &mut z[k * n..(k + 1) * n];
                        h = zk[i + 1];
                        zk[i + 1] = s * zk[i] + c * h;
                        zk[i] = c * zk[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// `‖U†U − I‖_max`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.cols;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let g: C64 = (0..u.rows).map(|k| u[(k, i)].conj() * u[(k, j)]).sum();
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}

/// Complex standard-Gaussian draw, `E|z|² = 1`.
pub(crate) fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Column-major Ginibre draw: column 0 consumes the first `rows` samples.
fn ginibre(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut g = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            g[(i, j)] = complex_gaussian(rng);
        }
    }
    g
}

/// Haar-distributed unitary: Householder QR of a Ginibre matrix with each
/// column of `Q` rotated by the phase of the matching `R` diagonal entry.
pub fn haar_unitary(dim: usize, seed: u64) -> CMatrix {
    let mut rng = seeded_rng(seed);
    let mut a = ginibre(dim, dim, &mut rng);
    let n = dim;

    let mut reflectors: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut r_diag = vec![ONE; n];
    for k in 0..n {
        let xnorm = (k..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        let x0 = a[(k, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v: Vec<C64> = (k..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vn = norm(&v);
        if vn > 0.0 {
            v.iter_mut().for_each(|z| *z /= vn);
            for j in k..n {
                let s: C64 = (k..n).map(|i| v[i - k].conj() * a[(i, j)]).sum();
                for i in k..n {
                    a[(i, j)] -= v[i - k] * s * 2.0;
                }
            }
            r_diag[k] = alpha;
        } else {
            r_diag[k] = a[(k, k)];
        }
        reflectors.push(v);
    }

    let mut q = CMatrix::identity(n);
    for k in (0..n).rev() {
        let v = &reflectors[k];
        if norm(v) == 0.0 {
            continue;
        }
        for j in 0..n {
            let s: C64 = (k..n).map(|i| v[i - k].conj() * q[(i, j)]).sum();
            for i in k..n {
                q[(i, j)] -= v[i - k] * s * 2.0;
            }
        }
    }
    for (k, r) in r_diag.iter().enumerate() {
        let ph = if r.norm() > 0.0 { r / r.norm() } else { ONE };
        for i in 0..n {
            q[(i, k)] *= ph;
        }
    }
    q
}

/// First column of [`haar_unitary`]`(dim, seed)` without forming the rest:
/// the phase-corrected first column is the normalized first Ginibre column.
pub fn haar_vector(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = seeded_rng(seed);
    let mut v: Vec<C64> = (0..dim).map(|_| complex_gaussian(&mut rng)).collect();
    let n = norm(&v);
    v.iter_mut().for_each(|z| *z /= n);
    v
}
