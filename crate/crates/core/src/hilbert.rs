//! Registers, pure states and reduced density operators.
//!
//! Index convention: amplitudes are ordered mixed-radix with subsystem 0 as
//! the most significant digit. For a register `[2, 2, 2]` the amplitude of
//! `|s e1 e2⟩` sits at `4 s + 2 e1 + e2`. Every module relies on this.

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, inner, norm, CMatrix, C64, HERMITIAN_TOL};

/// Largest total dimension a register may have.
pub const MAX_DIM: usize = 1 << 13;

/// Allowed deviation of a state norm from 1.
pub const NORM_TOL: f64 = 1e-10;

/// Eigenvalues below this are an error; those in `[-NEG_TOL, 0]` count as 0.
pub const NEG_TOL: f64 = 1e-8;

/// Ordered subsystem dimensions. Position 0 is the system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Register {
    dims: Vec<usize>,
}

impl Register {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidParameter("register has no subsystems".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidParameter(format!(
                "subsystem dimension {d} is below 2"
            )));
        }
        let mut total: usize = 1;
        for &d in &dims {
            total = total.saturating_mul(d);
            if total > MAX_DIM {
                return Err(Error::DimensionCap {
                    requested: dims.iter().fold(1usize, |a, &b| a.saturating_mul(b)),
                    cap: MAX_DIM,
                });
            }
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Sub-register over sorted, validated indices.
    pub fn subregister(&self, indices: &[usize]) -> Result<Self> {
        let idx = self.normalize_indices(indices)?;
        Self::new(idx.iter().map(|&i| self.dims[i]).collect())
    }

    /// Sorts and validates a subsystem index set.
    pub fn normalize_indices(&self, indices: &[usize]) -> Result<Vec<usize>> {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        if idx.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::BadIndex(format!(
                "duplicate subsystem in {indices:?}"
            )));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.dims.len()) {
            return Err(Error::BadIndex(format!(
                "subsystem {bad} out of range for {} subsystems",
                self.dims.len()
            )));
        }
        Ok(idx)
    }

    /// Indices not in the (already normalized) set, ascending.
    pub fn complement(&self, sorted: &[usize]) -> Vec<usize> {
        (0..self.dims.len())
            .filter(|i| sorted.binary_search(i).is_err())
            .collect()
    }

    fn product(&self, indices: &[usize]) -> usize {
        indices.iter().map(|&i| self.dims[i]).product()
    }
}

/// Normalized state vector on a register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    register: Register,
    amps: Vec<C64>,
}

impl PureState {
    pub fn new(register: Register, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != register.total_dim() {
            return Err(Error::LengthMismatch {
                expected: register.total_dim(),
                got: amps.len(),
            });
        }
        let n = norm(&amps);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { register, amps })
    }

    /// Rescales to unit norm before validating.
    pub fn normalized(register: Register, mut amps: Vec<C64>) -> Result<Self> {
        let n = norm(&amps);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        amps.iter_mut().for_each(|z| *z /= n);
        Self::new(register, amps)
    }

    pub fn basis(register: Register, index: usize) -> Result<Self> {
        let dim = register.total_dim();
        if index >= dim {
            return Err(Error::BadIndex(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { register, amps })
    }

    /// Single qubit `a|0⟩ + b|1⟩`, normalized.
    pub fn qubit(a: C64, b: C64) -> Result<Self> {
        Self::normalized(Register::qubits(1)?, vec![a, b])
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &PureState) -> Result<f64> {
        if self.register != other.register {
            return Err(Error::RegisterMismatch);
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Amplitudes arranged as a `(kept) × (rest)` matrix; both index sets in
    /// ascending subsystem order.
    pub fn bipartite_matrix(&self, keep: &[usize]) -> Result<CMatrix> {
        let keep = self.register.normalize_indices(keep)?;
        let rest = self.register.complement(&keep);
        let rows = self.register.product(&keep);
        let cols = self.register.product(&rest);
        let map = BipartiteMap::new(&self.register, &keep, &rest);
        let mut data = vec![C64::new(0.0, 0.0); rows * cols];
        for (g, a) in self.amps.iter().enumerate() {
            let (r, c) = map.split(g);
            data[r * cols + c] = *a;
        }
        CMatrix::from_vec(rows, cols, data)
    }

    /// Inverse of [`PureState::bipartite_matrix`].
    pub fn from_bipartite_matrix(register: &Register, keep: &[usize], m: &CMatrix) -> Result<Self> {
        let keep = register.normalize_indices(keep)?;
        let rest = register.complement(&keep);
        if m.rows() != register.product(&keep) || m.cols() != register.product(&rest) {
            return Err(Error::Shape(
                "bipartite matrix does not match register".into(),
            ));
        }
        let map = BipartiteMap::new(register, &keep, &rest);
        let amps = (0..register.total_dim())
            .map(|g| {
                let (r, c) = map.split(g);
                m[(r, c)]
            })
            .collect();
        Self::new(register.clone(), amps)
    }
}

/// Splits a global amplitude index into (kept, rest) mixed-radix indices.
struct BipartiteMap {
    dims: Vec<usize>,
    // for each subsystem: (belongs to keep, stride inside its side)
    placement: Vec<(bool, usize)>,
}

impl BipartiteMap {
    fn new(register: &Register, keep: &[usize], rest: &[usize]) -> Self {
        let dims = register.dims().to_vec();
        let mut placement = vec![(false, 0); dims.len()];
        for (side, set) in [(true, keep), (false, rest)] {
            let mut stride = 1;
            for &i in set.iter().rev() {
                placement[i] = (side, stride);
                stride *= dims[i];
            }
        }
        Self { dims, placement }
    }

    fn split(&self, mut g: usize) -> (usize, usize) {
        let (mut r, mut c) = (0, 0);
        for i in (0..self.dims.len()).rev() {
            let digit = g % self.dims[i];
            g /= self.dims[i];
            let (kept, stride) = self.placement[i];
            if kept {
                r += digit * stride;
            } else {
                c += digit * stride;
            }
        }
        (r, c)
    }
}

/// Kronecker product of states, in order.
pub fn tensor(parts: &[PureState]) -> Result<PureState> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidParameter("tensor of zero states".into()))?;
    let dims: Vec<usize> = parts
        .iter()
        .flat_map(|p| p.register.dims().iter().copied())
        .collect();
    let register = Register::new(dims)?;
    let mut amps = first.amps.clone();
    for p in &parts[1..] {
        amps = amps
            .iter()
            .flat_map(|a| p.amps.iter().map(move |b| a * b))
            .collect();
    }
    PureState::normalized(register, amps)
}

/// `⟨a|b⟩`.
pub fn overlap(a: &PureState, b: &PureState) -> Result<C64> {
    if a.register != b.register {
        return Err(Error::RegisterMismatch);
    }
    Ok(inner(&a.amps, &b.amps))
}

/// Applies `op` to the listed subsystems (taken in ascending order).
pub fn apply_local(state: &PureState, subsystems: &[usize], op: &CMatrix) -> Result<PureState> {
    let m = state.bipartite_matrix(subsystems)?;
    if op.rows() != m.rows() || op.cols() != m.rows() {
        return Err(Error::Shape(format!(
            "operator is {}x{}, subsystems span {}",
            op.rows(),
            op.cols(),
            m.rows()
        )));
    }
    let out = op.matmul(&m)?;
    let amps = PureState::from_bipartite_matrix_unchecked(&state.register, subsystems, &out)?;
    PureState::normalized(state.register.clone(), amps)
}

impl PureState {
    fn from_bipartite_matrix_unchecked(
        register: &Register,
        keep: &[usize],
        m: &CMatrix,
    ) -> Result<Vec<C64>> {
        let keep = register.normalize_indices(keep)?;
        let rest = register.complement(&keep);
        let map = BipartiteMap::new(register, &keep, &rest);
        Ok((0..register.total_dim())
            .map(|g| {
                let (r, c) = map.split(g);
                m[(r, c)]
            })
            .collect())
    }
}

/// Hermitian, positive, unit-trace operator over a sub-register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOp {
    register: Register,
    matrix: CMatrix,
}

impl DensityOp {
    /// Checks hermiticity and trace; positivity is checked on demand.
    pub fn new(register: Register, matrix: CMatrix) -> Result<Self> {
        let d = register.total_dim();
        if matrix.rows() != d || matrix.cols() != d {
            return Err(Error::Shape(format!(
                "density matrix is {}x{}, register has dimension {d}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermiticity_residual();
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > NORM_TOL {
            return Err(Error::InvalidParameter(format!("trace {tr} is not 1")));
        }
        Ok(Self { register, matrix })
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(herm_eig(&self.matrix)?.eigenvalues)
    }

    /// Fails with `NotPositive` if an eigenvalue is below `-NEG_TOL`.
    pub fn check_positive(&self) -> Result<()> {
        let ev = self.eigenvalues()?;
        match ev.first() {
            Some(&l) if l < -NEG_TOL => Err(Error::NotPositive(l)),
            _ => Ok(()),
        }
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        let m = &self.matrix;
        let mut p = 0.0;
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                p += (m[(i, j)] * m[(j, i)]).re;
            }
        }
        p
    }

    /// Von Neumann entropy in bits.
    pub fn entropy_bits(&self) -> Result<f64> {
        entropy_from_eigenvalues(&self.eigenvalues()?)
    }
}

/// `−Σ λ lg λ` with `0 lg 0 = 0`.
pub fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for &l in eigenvalues {
        if l < -NEG_TOL {
            return Err(Error::NotPositive(l));
        }
        if l > 0.0 {
            h -= l * l.log2();
        }
    }
    Ok(h.max(0.0))
}

/// `Tr_{rest} |ψ⟩⟨ψ|`, kept subsystems in their original relative order.
pub fn partial_trace(state: &PureState, keep: &[usize]) -> Result<DensityOp> {
    if keep.is_empty() {
        return Err(Error::BadIndex(
            "partial trace must keep a subsystem".into(),
        ));
    }
    let sub = state.register.subregister(keep)?;
    let m = state.bipartite_matrix(keep)?;
    DensityOp::new(sub, gram_rows(&m))
}

/// `entropy_bits(partial_trace(state, keep))`.
pub fn entropy_bits(rho: &DensityOp) -> Result<f64> {
    rho.entropy_bits()
}

/// Entanglement entropy of `keep` for a pure global state, from the
/// squared singular values of the reshaped amplitudes. Diagonalizes the
/// Gram matrix of whichever side is smaller.
pub fn subsystem_entropy_fast(state: &PureState, keep: &[usize]) -> Result<f64> {
    let keep = state.register.normalize_indices(keep)?;
    if keep.is_empty() || keep.len() == state.register.len() {
        return Ok(0.0);
    }
    let m = state.bipartite_matrix(&keep)?;
    let g = if m.rows() <= m.cols() {
        gram_rows(&m)
    } else {
        gram_rows(&m.transpose())
    };
    entropy_from_eigenvalues(&herm_eig(&g)?.eigenvalues)
}

/// `M M†`, built from contiguous rows. The result is exactly Hermitian.
pub(crate) fn gram_rows(m: &CMatrix) -> CMatrix {
    let n = m.rows();
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        let ri = m.row(i);
        for j in i..n {
            let v: C64 = ri.iter().zip(m.row(j)).map(|(a, b)| a * b.conj()).sum();
            if i == j {
                g[(i, i)] = C64::new(v.re, 0.0);
            } else {
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
    }
    g
}
