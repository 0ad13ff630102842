//! Entanglement-assisted invariance.
//!
//! A unitary `U` on one side of a bipartite pure state is envariant when some
//! unitary `V` on the other side undoes it: `(U ⊗ V)|ψ⟩ = |ψ⟩`. Counters are
//! searched in the family that acts on the right Schmidt basis by phases,
//! coefficient-preserving permutations, and (inside groups of equal Schmidt
//! coefficients) arbitrary block unitaries. Outside that family nothing is
//! claimed.
//!
//! The Born-rule oracle splits uneven branches into equal-amplitude
//! sub-branches, certifies that the sub-branches can be exchanged envariantly,
//! and reads probabilities off by counting. Probabilities are exact rationals.

use num_integer::Integer;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::hilbert::{PureState, Register, MAX_DIM};
use crate::linalg::{complete_basis, herm_eig, inner, norm, unitarity_residual, CMatrix, C64};

/// Exact probability.
pub type Prob = Ratio<u64>;

/// Residual below which a transformation counts as undone.
pub const ENVARIANCE_TOL: f64 = 1e-10;

/// Schmidt coefficients closer than this are treated as equal.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Schmidt coefficients at or below this are treated as zero.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Finegrained states with more branches skip the dense cross-check.
pub const DENSE_CHECK_MAX_BRANCHES: usize = 16;

/// Default denominator cap for rational approximation of probabilities.
pub const MAX_DENOMINATOR: u64 = 1 << 12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Bipartition of a register: `left` against everything else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    left: Vec<usize>,
}

impl Cut {
    pub fn new(left: &[usize]) -> Self {
        let mut left = left.to_vec();
        left.sort_unstable();
        left.dedup();
        Self { left }
    }

    /// System (subsystem 0) against the environment.
    pub fn system() -> Self {
        Self { left: vec![0] }
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    fn validate(&self, register: &Register) -> Result<()> {
        register.normalize_indices(&self.left)?;
        if self.left.is_empty() || self.left.len() == register.len() {
            return Err(Error::BadIndex("cut must leave both sides nonempty".into()));
        }
        Ok(())
    }
}

/// Side of the system/environment cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    System,
    Environment,
}

/// `|ψ⟩ = Σ_k a_k |s_k⟩|ε_k⟩` for a declared cut.
#[derive(Debug, Clone)]
pub struct SchmidtForm {
    /// Descending, `min(d_left, d_right)` entries.
    pub coefficients: Vec<f64>,
    pub left_basis: Vec<Vec<C64>>,
    pub right_basis: Vec<Vec<C64>>,
    /// Largest entry of `Ψ − Σ a_k s_k ε_kᵀ`.
    pub residual: f64,
}

impl SchmidtForm {
    /// Number of coefficients above [`SUPPORT_TOL`].
    pub fn rank(&self) -> usize {
        self.coefficients
            .iter()
            .take_while(|&&s| s > SUPPORT_TOL)
            .count()
    }
}

/// Schmidt decomposition from the eigen-decomposition of the smaller Gram
/// matrix. Each left vector is phased so its first nonzero entry is real
/// positive, which fixes the basis whenever coefficients are distinct.
pub fn schmidt(state: &PureState, cut: &Cut) -> Result<SchmidtForm> {
    cut.validate(state.register())?;
    let psi = state.bipartite_matrix(cut.left())?;
    let (dl, dr) = (psi.rows(), psi.cols());
    let r = dl.min(dr);

    // Small side: eigenvectors; large side: derived as Ψ x̄ / a.
    let left_small = dl <= dr;
    let oriented = if left_small {
        psi.clone()
    } else {
        psi.transpose()
    };
    let spec = herm_eig(&crate::hilbert::gram_rows(&oriented))?;
    let mut coefficients = Vec::with_capacity(r);
    let mut small: Vec<Vec<C64>> = Vec::with_capacity(r);
    for k in (0..r).rev() {
        coefficients.push(spec.eigenvalues[k].max(0.0).sqrt());
        small.push(spec.eigenvectors.column(k));
    }

    // large_k = (oriented)ᵀ conj(small_k) / a_k
    let big_dim = if left_small { dr } else { dl };
    let mut large: Vec<Vec<C64>> = Vec::with_capacity(r);
    for (k, s) in small.iter().enumerate() {
        if coefficients[k] <= 1e-12 {
            break;
        }
        let mut v = vec![ZERO; big_dim];
        for (i, si) in s.iter().enumerate() {
            let w = si.conj();
            for (vj, o) in v.iter_mut().zip(oriented.row(i)) {
                *vj += o * w;
            }
        }
        v.iter_mut().for_each(|z| *z /= coefficients[k]);
        // clean up loss of orthogonality for small coefficients
        for prev in &large {
            let p = inner(prev, &v);
            v.iter_mut().zip(prev).for_each(|(z, q)| *z -= p * q);
        }
        let n = norm(&v);
        v.iter_mut().for_each(|z| *z /= n);
        large.push(v);
    }
    let large = complete_basis(&large, big_dim);
    let large: Vec<Vec<C64>> = large.into_iter().take(r).collect();

    let (mut left_basis, mut right_basis) = if left_small {
        (small, large)
    } else {
        (large, small)
    };
    for (u, v) in left_basis.iter_mut().zip(right_basis.iter_mut()) {
        if let Some(first) = u.iter().find(|z| z.norm() > 1e-12).copied() {
            let ph = first / first.norm();
            u.iter_mut().for_each(|z| *z *= ph.conj());
            v.iter_mut().for_each(|z| *z *= ph);
        }
    }

    let mut residual: f64 = 0.0;
    for i in 0..dl {
        for j in 0..dr {
            let rec: C64 = (0..r)
                .map(|k| left_basis[k][i] * right_basis[k][j] * coefficients[k])
                .sum();
            residual = residual.max((psi[(i, j)] - rec).norm());
        }
    }
    Ok(SchmidtForm {
        coefficients,
        left_basis,
        right_basis,
        residual,
    })
}

fn side_subsystems(state: &PureState, side: Side) -> Vec<usize> {
    match side {
        Side::System => vec![0],
        Side::Environment => (1..state.register().len()).collect(),
    }
}

/// Rewrites rows of the `side × rest` amplitude matrix.
fn edit_side(
    state: &PureState,
    side: Side,
    edit: impl FnOnce(&mut CMatrix) -> Result<()>,
) -> Result<PureState> {
    if state.register().len() < 2 {
        return Err(Error::InvalidParameter("state has no environment".into()));
    }
    let keep = side_subsystems(state, side);
    let mut m = state.bipartite_matrix(&keep)?;
    edit(&mut m)?;
    PureState::from_bipartite_matrix(state.register(), &keep, &m)
}

/// Diagonal phase unitary `Σ_k e^{iφ_k}|k⟩⟨k|` on one side.
pub fn phase_shift(state: &PureState, side: Side, phases: &[f64]) -> Result<PureState> {
    edit_side(state, side, |m| {
        if phases.len() != m.rows() {
            return Err(Error::LengthMismatch {
                expected: m.rows(),
                got: phases.len(),
            });
        }
        for (i, &phi) in phases.iter().enumerate() {
            let ph = C64::from_polar(1.0, phi);
            for j in 0..m.cols() {
                m[(i, j)] *= ph;
            }
        }
        Ok(())
    })
}

/// `|i⟩⟨j| + |j⟩⟨i| + Σ_{k∉{i,j}} |k⟩⟨k|` on one side.
pub fn swap(state: &PureState, side: Side, i: usize, j: usize) -> Result<PureState> {
    edit_side(state, side, |m| {
        if i == j || i >= m.rows() || j >= m.rows() {
            return Err(Error::BadIndex(format!(
                "cannot swap {i} and {j} in dimension {}",
                m.rows()
            )));
        }
        for c in 0..m.cols() {
            let t = m[(i, c)];
            m[(i, c)] = m[(j, c)];
            m[(j, c)] = t;
        }
        Ok(())
    })
}

/// Permutation matrix exchanging basis states `i` and `j`.
pub fn swap_matrix(dim: usize, i: usize, j: usize) -> Result<CMatrix> {
    if i == j || i >= dim || j >= dim {
        return Err(Error::BadIndex(format!(
            "cannot swap {i} and {j} in dimension {dim}"
        )));
    }
    let mut m = CMatrix::identity(dim);
    m[(i, i)] = ZERO;
    m[(j, j)] = ZERO;
    m[(i, j)] = ONE;
    m[(j, i)] = ONE;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Envariant,
    NotEnvariant,
}

/// Outcome of a countertransform search.
#[derive(Debug, Clone)]
pub struct EnvarianceCertificate {
    pub applied: CMatrix,
    pub counter: Option<CMatrix>,
    /// `‖(1 ⊗ V)(U ⊗ 1)|ψ⟩ − |ψ⟩‖₂`, minimized over the counter family when
    /// no counter is returned.
    pub residual: f64,
    pub verdict: Verdict,
}

/// Description of the searched counter family, for reports.
pub const COUNTER_FAMILY: &str =
    "phases, coefficient-preserving permutations and block unitaries within equal-coefficient groups of the right Schmidt basis";

/// Looks for a unitary on the right of `cut` that undoes `applied` on the left.
pub fn find_countertransform(
    state: &PureState,
    applied: &CMatrix,
    cut: &Cut,
) -> Result<EnvarianceCertificate> {
    cut.validate(state.register())?;
    let psi = state.bipartite_matrix(cut.left())?;
    let (dl, dr) = (psi.rows(), psi.cols());
    if applied.rows() != dl || applied.cols() != dl {
        return Err(Error::Shape(format!(
            "applied operator is {}x{}, left side has dimension {dl}",
            applied.rows(),
            applied.cols()
        )));
    }
    let ures = unitarity_residual(applied);
    if ures > 1e-10 {
        return Err(Error::NotUnitary(ures));
    }

    let sf = schmidt(state, cut)?;
    let rank = sf.rank();
    let coeff = &sf.coefficients[..rank];
    let l_s = CMatrix::from_columns(dl, &sf.left_basis[..rank])?;
    let r_s = CMatrix::from_columns(dr, &sf.right_basis[..rank])?;

    // B = L† U L on the support; U L − L B is the part leaving the support.
    let ul = applied.matmul(&l_s)?;
    let b = l_s.adjoint().matmul(&ul)?;
    let leak = ul.sub(&l_s.matmul(&b)?)?.max_abs();

    let groups = coefficient_groups(coeff);
    let mut block = b.clone();
    let mut off_block: f64 = 0.0;
    for i in 0..rank {
        for j in 0..rank {
            if groups[i] != groups[j] {
                off_block = off_block.max(b[(i, j)].norm());
                block[(i, j)] = ZERO;
            }
        }
    }

    let candidate = if leak <= 1e-9 && off_block <= 1e-9 && unitarity_residual(&block) <= 1e-9 {
        // V = R B̄ R† + (1 − R R†)
        let rb = r_s.matmul(&block.conj())?;
        let mut v = rb.matmul(&r_s.adjoint())?;
        let proj = r_s.matmul(&r_s.adjoint())?;
        for i in 0..dr {
            for j in 0..dr {
                let id = if i == j { ONE } else { ZERO };
                v[(i, j)] += id - proj[(i, j)];
            }
        }
        let residual = frobenius_distance(&applied.matmul(&psi)?.matmul(&v.transpose())?, &psi)?;
        Some((v, residual))
    } else {
        None
    };

    match candidate {
        Some((v, residual)) if residual <= ENVARIANCE_TOL => Ok(EnvarianceCertificate {
            applied: applied.clone(),
            counter: Some(v),
            residual,
            verdict: Verdict::Envariant,
        }),
        other => {
            let weights: Vec<Vec<f64>> = (0..rank)
                .map(|i| {
                    (0..rank)
                        .map(|j| coeff[i] * coeff[j] * b[(i, j)].norm())
                        .collect()
                })
                .collect();
            let assignment = max_weight_assignment(&weights);
            let best: f64 = assignment
                .iter()
                .enumerate()
                .map(|(i, &j)| weights[i][j])
                .sum();
            let mut residual = (2.0 - 2.0 * best).max(0.0).sqrt();
            if let Some((_, r)) = other {
                residual = residual.min(r);
            }
            Ok(EnvarianceCertificate {
                applied: applied.clone(),
                counter: None,
                residual,
                verdict: Verdict::NotEnvariant,
            })
        }
    }
}

fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let d = a.sub(b)?;
    Ok(d.as_slice()
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Group label per (descending) coefficient.
fn coefficient_groups(coeff: &[f64]) -> Vec<usize> {
    let mut groups = Vec::with_capacity(coeff.len());
    let mut label = 0;
    let mut head = None;
    for &c in coeff {
        match head {
            Some(h) if h - c <= DEGENERACY_TOL => {}
            Some(_) => {
                label += 1;
                head = Some(c);
            }
            None => head = Some(c),
        }
        groups.push(label);
    }
    groups
}

/// Row → column assignment maximizing the summed weight (Hungarian method).
pub(crate) fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let cost = |i: usize, j: usize| -weights[i][j];
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}

/// Equal probabilities for the equal nonzero Schmidt branches of an even
/// state; zero-coefficient branches get exactly 0.
pub fn equiprobability_certificate(state: &PureState, cut: &Cut) -> Result<Vec<Prob>> {
    let sf = schmidt(state, cut)?;
    let rank = sf.rank();
    let nonzero = &sf.coefficients[..rank];
    if nonzero
        .iter()
        .any(|&c| (c - nonzero[0]).abs() > DEGENERACY_TOL)
    {
        return Err(Error::NotEven);
    }
    Ok((0..sf.coefficients.len())
        .map(|k| {
            if k < rank {
                Prob::new(1, rank as u64)
            } else {
                Prob::new(0, 1)
            }
        })
        .collect())
}

/// Commensurate amplitudes `α ∝ √μ`, `β ∝ √ν`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalAmps {
    mu: u64,
    nu: u64,
}

impl RationalAmps {
    pub fn new(mu: u64, nu: u64) -> Result<Self> {
        if mu < 1 || nu < 1 {
            return Err(Error::InvalidParameter("μ and ν must be positive".into()));
        }
        if mu + nu > MAX_DENOMINATOR {
            return Err(Error::InvalidParameter(format!(
                "μ + ν = {} exceeds {MAX_DENOMINATOR}",
                mu + nu
            )));
        }
        Ok(Self { mu, nu })
    }

    pub fn mu(&self) -> u64 {
        self.mu
    }

    pub fn nu(&self) -> u64 {
        self.nu
    }

    /// `(α, β) = (√(μ/(μ+ν)), √(ν/(μ+ν)))`.
    pub fn amplitudes(&self) -> (f64, f64) {
        let n = (self.mu + self.nu) as f64;
        ((self.mu as f64 / n).sqrt(), (self.nu as f64 / n).sqrt())
    }
}

/// Equal-amplitude refinement `Σ_k c_k |label_k⟩|a_k⟩|e_{env_k}⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FinegrainedState {
    /// Coarse branch of each fine branch.
    pub labels: Vec<usize>,
    /// Environment record index of each fine branch (a permutation).
    pub env: Vec<usize>,
    pub amplitudes: Vec<C64>,
    pub n_coarse: usize,
}

impl FinegrainedState {
    /// Splits coarse branch `b` (amplitude `coarse[b]`) into `counts[b]`
    /// sub-branches of amplitude `coarse[b] / √counts[b]`.
    pub fn split(coarse: &[f64], counts: &[u64]) -> Result<Self> {
        if coarse.len() != counts.len() {
            return Err(Error::LengthMismatch {
                expected: counts.len(),
                got: coarse.len(),
            });
        }
        let mut labels = Vec::new();
        let mut amplitudes = Vec::new();
        for (b, (&a, &cnt)) in coarse.iter().zip(counts).enumerate() {
            for _ in 0..cnt {
                labels.push(b);
                amplitudes.push(C64::new(a / (cnt as f64).sqrt(), 0.0));
            }
        }
        if labels.is_empty() {
            return Err(Error::InvalidParameter("nothing to finegrain".into()));
        }
        let env = (0..labels.len()).collect();
        Ok(Self {
            labels,
            env,
            amplitudes,
            n_coarse: coarse.len(),
        })
    }

    pub fn n_branches(&self) -> usize {
        self.labels.len()
    }

    /// Relabels environment records: branch `k` now correlates with `perm[env_k]`.
    pub fn relabel_environment(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_branches();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidParameter(
                "not a permutation of the records".into(),
            ));
        }
        Ok(Self {
            env: self.env.iter().map(|&e| perm[e]).collect(),
            ..self.clone()
        })
    }

    /// Dense state on `S ⊗ A ⊗ E` with `A` and `E` of dimension `n_branches`.
    pub fn to_pure_state(&self) -> Result<PureState> {
        let n = self.n_branches();
        let s_dim = self.n_coarse.max(2);
        let register = Register::new(vec![s_dim, n.max(2), n.max(2)])?;
        let (da, de) = (register.dims()[1], register.dims()[2]);
        let mut amps = vec![ZERO; register.total_dim()];
        for k in 0..n {
            amps[(self.labels[k] * da + k) * de + self.env[k]] = self.amplitudes[k];
        }
        PureState::normalized(register, amps)
    }

    /// Exact branch counts per coarse label.
    pub fn counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.n_coarse];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

/// Checks that carried the counting argument.
#[derive(Debug, Clone)]
pub struct FinegrainCheck {
    /// `max_{k,l} |c_k − c_l|`.
    pub amplitude_spread: f64,
    /// Worst residual over adjacent fine-branch swaps undone by counterswaps.
    pub swap_residual: f64,
    /// Envariance certificate of a cross-label swap on the dense state, for
    /// at most [`DENSE_CHECK_MAX_BRANCHES`] branches.
    pub dense: Option<EnvarianceCertificate>,
}

/// Certifies the finegrained state: equal amplitudes, and every swap of
/// neighbouring fine branches undone by the matching counterswap of records.
pub fn certify_finegrained(fine: &FinegrainedState) -> Result<FinegrainCheck> {
    let n = fine.n_branches();
    let (lo, hi) = fine
        .amplitudes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
            (lo.min(a.re), hi.max(a.re))
        });
    let imag = fine
        .amplitudes
        .iter()
        .map(|a| a.im.abs())
        .fold(0.0, f64::max);
    let amplitude_spread = (hi - lo).max(imag);

    // Swapping |l_k a_k⟩ ↔ |l_{k+1} a_{k+1}⟩ and e_k ↔ e_{k+1} exchanges the
    // two branch amplitudes and leaves every other branch alone.
    let swap_residual = (0..n.saturating_sub(1))
        .map(|k| std::f64::consts::SQRT_2 * (fine.amplitudes[k] - fine.amplitudes[k + 1]).norm())
        .fold(0.0, f64::max);

    let s_dim = fine.n_coarse.max(2);
    let side = n.max(2);
    let dense = if n <= DENSE_CHECK_MAX_BRANCHES && s_dim * side * side <= MAX_DIM {
        match (0..n.saturating_sub(1)).find(|&k| fine.labels[k] != fine.labels[k + 1]) {
            Some(k) => {
                let state = fine.to_pure_state()?;
                let i = fine.labels[k] * side + k;
                let j = fine.labels[k + 1] * side + k + 1;
                let op = swap_matrix(s_dim * side, i, j)?;
                Some(find_countertransform(&state, &op, &Cut::new(&[0, 1]))?)
            }
            None => None,
        }
    } else {
        None
    };

    Ok(FinegrainCheck {
        amplitude_spread,
        swap_residual,
        dense,
    })
}

/// Result of the finegraining construction for two coarse branches.
#[derive(Debug, Clone)]
pub struct BornCertificate {
    pub p_up: Prob,
    pub p_down: Prob,
    pub finegrained: FinegrainedState,
    pub check: FinegrainCheck,
}

/// Born-rule oracle for `α ∝ √μ, β ∝ √ν`.
pub fn born_finegrain(amps: RationalAmps) -> Result<BornCertificate> {
    let (alpha, beta) = amps.amplitudes();
    let fine = FinegrainedState::split(&[alpha, beta], &[amps.mu, amps.nu])?;
    let check = certify_finegrained(&fine)?;
    ensure_certified(&check)?;
    let counts = fine.counts();
    let total = counts.iter().sum::<u64>();
    Ok(BornCertificate {
        p_up: Prob::new(counts[0], total),
        p_down: Prob::new(counts[1], total),
        finegrained: fine,
        check,
    })
}

fn ensure_certified(check: &FinegrainCheck) -> Result<()> {
    if check.amplitude_spread > 1e-12 || check.swap_residual > ENVARIANCE_TOL {
        return Err(Error::InvalidParameter(format!(
            "finegrained branches are not interchangeable (spread {:e}, swap residual {:e})",
            check.amplitude_spread, check.swap_residual
        )));
    }
    if let Some(cert) = &check.dense {
        if cert.verdict != Verdict::Envariant {
            return Err(Error::InvalidParameter(format!(
                "cross-label swap not undone (residual {:e})",
                cert.residual
            )));
        }
    }
    Ok(())
}

/// Born probabilities of the Schmidt branches of an arbitrary state.
#[derive(Debug, Clone)]
pub struct BornApproximation {
    /// Exact, aligned with descending Schmidt coefficients; sums to 1.
    pub probabilities: Vec<Prob>,
    /// Common denominator used for finegraining.
    pub denominator: u64,
    pub squared_coefficients: Vec<f64>,
    /// `max_k |p_k − a_k²|`; at most `2 / max_denominator`.
    pub max_deviation: f64,
    pub check: FinegrainCheck,
}

/// Approximates squared Schmidt coefficients by rationals `μ_k / M`
/// (`M ≤ max_denominator`), finegrains the resulting commensurate state and
/// counts. An exactly commensurate state is found at its smallest
/// denominator; otherwise the largest-remainder rounding at `max_denominator`
/// is used.
pub fn born_probabilities(
    state: &PureState,
    cut: &Cut,
    max_denominator: u64,
) -> Result<BornApproximation> {
    if !(1..=MAX_DENOMINATOR).contains(&max_denominator) {
        return Err(Error::InvalidParameter(format!(
            "denominator cap must lie in 1..={MAX_DENOMINATOR}"
        )));
    }
    let sf = schmidt(state, cut)?;
    let p: Vec<f64> = sf.coefficients.iter().map(|c| c * c).collect();
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();

    let (counts, denominator) = commensurate_counts(&p, max_denominator);
    let g = counts.iter().fold(denominator, |acc, &c| acc.gcd(&c));
    let counts: Vec<u64> = counts.iter().map(|c| c / g).collect();
    let denominator = denominator / g;

    let coarse: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64 / denominator as f64).sqrt())
        .collect();
    let fine = FinegrainedState::split(&coarse, &counts)?;
    let check = certify_finegrained(&fine)?;
    ensure_certified(&check)?;

    let n = fine.counts();
    let probabilities: Vec<Prob> = n.iter().map(|&c| Prob::new(c, denominator)).collect();
    let max_deviation = probabilities
        .iter()
        .zip(&p)
        .map(|(q, x)| (*q.numer() as f64 / *q.denom() as f64 - x).abs())
        .fold(0.0, f64::max);
    if max_deviation > 2.0 / max_denominator as f64 {
        return Err(Error::InvalidParameter(format!(
            "rational approximation off by {max_deviation:e}"
        )));
    }
    Ok(BornApproximation {
        probabilities,
        denominator,
        squared_coefficients: p,
        max_deviation,
        check,
    })
}

/// Integer counts `μ_k` with `Σ μ_k = D`, approximating `p_k ≈ μ_k / D`.
fn commensurate_counts(p: &[f64], max_denominator: u64) -> (Vec<u64>, u64) {
    for d in 1..=max_denominator {
        let counts: Vec<u64> = p.iter().map(|x| (x * d as f64).round() as u64).collect();
        let exact = p
            .iter()
            .zip(&counts)
            .all(|(x, &c)| (x - c as f64 / d as f64).abs() <= 1e-12);
        if exact && counts.iter().sum::<u64>() == d {
            return (counts, d);
        }
    }
    // Largest-remainder rounding: every count is off by less than one unit.
    let d = max_denominator;
    let scaled: Vec<f64> = p.iter().map(|x| x * d as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|x| x.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(d.saturating_sub(assigned) as usize) {
        counts[k] += 1;
    }
    (counts, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{apply_local, partial_trace, tensor};
    use crate::linalg::{haar_unitary, haar_vector};
    use crate::models::{branching_state, BranchSpec};
    use itertools::Itertools;
    use proptest::prelude::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn bell() -> PureState {
        PureState::new(
            Register::qubits(2).unwrap(),
            vec![c(S), c(0.0), c(0.0), c(S)],
        )
        .unwrap()
    }

    /// `Σ_k a_k U|k⟩ ⊗ V|k⟩` on `d ⊗ d`.
    fn planted(coeffs: &[f64], seed_u: u64, seed_v: u64) -> (PureState, CMatrix, CMatrix) {
        let d = coeffs.len();
        let u = haar_unitary(d, seed_u);
        let v = haar_unitary(d, seed_v);
        let mut amps = vec![c(0.0); d * d];
        for (k, &a) in coeffs.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    amps[i * d + j] += u[(i, k)] * v[(j, k)] * a;
                }
            }
        }
        let st = PureState::normalized(Register::new(vec![d, d]).unwrap(), amps).unwrap();
        (st, u, v)
    }

    /// `U P U†` where `P` swaps basis states `i` and `j`.
    fn swap_in_basis(u: &CMatrix, i: usize, j: usize) -> CMatrix {
        let p = swap_matrix(u.rows(), i, j).unwrap();
        u.matmul(&p).unwrap().matmul(&u.adjoint()).unwrap()
    }

    fn phase_in_basis(u: &CMatrix, phases: &[f64]) -> CMatrix {
        let d = CMatrix::diag(
            &phases
                .iter()
                .map(|&p| C64::from_polar(1.0, p))
                .collect::<Vec<_>>(),
        );
        u.matmul(&d).unwrap().matmul(&u.adjoint()).unwrap()
    }

    #[test]
    fn schmidt_examples() {
        let sf = schmidt(&bell(), &Cut::system()).unwrap();
        assert!((sf.coefficients[0] - S).abs() < 1e-12 && (sf.coefficients[1] - S).abs() < 1e-12);

        let prod = tensor(&[
            PureState::qubit(c(1.0), c(2.0)).unwrap(),
            PureState::qubit(c(1.0), c(-1.0)).unwrap(),
        ])
        .unwrap();
        let sf = schmidt(&prod, &Cut::system()).unwrap();
        assert!((sf.coefficients[0] - 1.0).abs() < 1e-12 && sf.coefficients[1].abs() < 1e-8);
        assert!(sf.residual <= 1e-10);

        // Branching state, S | E: the 2 × 2^N reshape has rows √0.3 e₀ and √0.7 e_last.
        let psi = branching_state(&BranchSpec::from_alpha2(0.3, 5, 0.0).unwrap()).unwrap();
        let sf = schmidt(&psi, &Cut::system()).unwrap();
        assert!((sf.coefficients[0] - 0.7f64.sqrt()).abs() < 1e-12);
        assert!((sf.coefficients[1] - 0.3f64.sqrt()).abs() < 1e-12);
        assert!(sf.residual <= 1e-10);
    }

    #[test]
    fn schmidt_bases_are_orthonormal() {
        for seed in 0..10 {
            let reg = Register::new(vec![3, 2, 4]).unwrap();
            let st = PureState::new(reg, haar_vector(24, seed)).unwrap();
            for cut in [Cut::new(&[0]), Cut::new(&[1]), Cut::new(&[0, 2])] {
                let sf = schmidt(&st, &cut).unwrap();
                assert!(sf.residual <= 1e-10);
                assert!((sf.coefficients.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-10);
                for basis in [&sf.left_basis, &sf.right_basis] {
                    for (a, b) in basis.iter().tuple_combinations() {
                        assert!(inner(a, b).norm() < 1e-10);
                    }
                    for a in basis.iter() {
                        assert!((norm(a) - 1.0).abs() < 1e-10);
                    }
                }
                assert!(sf.coefficients.windows(2).all(|w| w[0] >= w[1]));
                // tie-break: first nonzero left entry is real positive
                for u in &sf.left_basis {
                    let first = u.iter().find(|z| z.norm() > 1e-12).unwrap();
                    assert!(first.im.abs() < 1e-14 && first.re > 0.0);
                }
            }
        }
    }

    #[test]
    fn phase_shift_examples() {
        let plus = PureState::qubit(c(1.0), c(1.0)).unwrap();
        let st = tensor(&[plus, PureState::qubit(c(1.0), c(0.0)).unwrap()]).unwrap();
        let flipped = phase_shift(&st, Side::System, &[0.0, std::f64::consts::PI]).unwrap();
        let want = [S, 0.0, -S, 0.0];
        for (a, w) in flipped.amps().iter().zip(want) {
            assert!((a - c(w)).norm() < 1e-15);
        }
        assert_eq!(phase_shift(&st, Side::System, &[0.0, 0.0]).unwrap(), st);
        let global = phase_shift(&st, Side::System, &[0.7, 0.7]).unwrap();
        assert!((crate::hilbert::overlap(&st, &global).unwrap().norm() - 1.0).abs() < 1e-15);
        assert!(matches!(
            phase_shift(&st, Side::System, &[0.0]),
            Err(Error::LengthMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn swap_examples() {
        let even = bell();
        let twice = swap(
            &swap(&even, Side::System, 0, 1).unwrap(),
            Side::System,
            0,
            1,
        )
        .unwrap();
        assert!(twice.distance(&even).unwrap() <= 1e-12);

        // swap on S, then counterswap on the apparatus, restores the even state
        let swapped = swap(&even, Side::System, 0, 1).unwrap();
        assert!(swapped.distance(&even).unwrap() > 1.0);
        let restored = swap(&swapped, Side::Environment, 0, 1).unwrap();
        assert!(restored.distance(&even).unwrap() <= 1e-12);

        // unentangled (|↑⟩ + i|↓⟩)/√2: the swap produces an orthogonal state
        let lone = tensor(&[
            PureState::qubit(c(1.0), C64::new(0.0, 1.0)).unwrap(),
            PureState::qubit(c(1.0), c(0.0)).unwrap(),
        ])
        .unwrap();
        let out = swap(&lone, Side::System, 0, 1).unwrap();
        assert!(crate::hilbert::overlap(&lone, &out).unwrap().norm() < 1e-15);

        assert!(matches!(
            swap(&even, Side::System, 0, 0),
            Err(Error::BadIndex(_))
        ));
        assert!(matches!(
            swap(&even, Side::System, 0, 2),
            Err(Error::BadIndex(_))
        ));
    }

    #[test]
    fn schmidt_phase_is_envariant() {
        let (st, u, _) = planted(&[0.8, 0.5, 0.33166247903554], 1, 2);
        let op = phase_in_basis(&u, &[0.4, -1.1, 2.5]);
        let cert = find_countertransform(&st, &op, &Cut::system()).unwrap();
        assert_eq!(cert.verdict, Verdict::Envariant);
        assert!(cert.residual <= 1e-12, "{}", cert.residual);
        let v = cert.counter.unwrap();
        assert!(unitarity_residual(&v) < 1e-10);
    }

    #[test]
    fn equal_coefficient_swap_is_envariant() {
        let cert =
            find_countertransform(&bell(), &swap_matrix(2, 0, 1).unwrap(), &Cut::system()).unwrap();
        assert_eq!(cert.verdict, Verdict::Envariant);
        assert!(cert.residual <= 1e-12);

        let a = (0.4f64).sqrt();
        let (st, u, _) = planted(&[a, a, (0.2f64).sqrt()], 3, 4);
        let cert = find_countertransform(&st, &swap_in_basis(&u, 0, 1), &Cut::system()).unwrap();
        assert_eq!(cert.verdict, Verdict::Envariant);
        assert!(cert.residual <= 1e-10);
    }

    #[test]
    fn unequal_coefficient_swap_is_not_envariant() {
        let (a, b) = (0.3f64.sqrt(), 0.7f64.sqrt());
        let st = PureState::new(
            Register::qubits(2).unwrap(),
            vec![c(a), c(0.0), c(0.0), c(b)],
        )
        .unwrap();
        let cert =
            find_countertransform(&st, &swap_matrix(2, 0, 1).unwrap(), &Cut::system()).unwrap();
        assert_eq!(cert.verdict, Verdict::NotEnvariant);
        assert!(cert.counter.is_none());

        // Oracle: every diagonal-phase × permutation counter on a 2-dim
        // environment, phases on a fine grid.
        let psi = st.bipartite_matrix(&[0]).unwrap();
        let applied = swap_matrix(2, 0, 1).unwrap().matmul(&psi).unwrap();
        let mut best = f64::INFINITY;
        for perm in [[0usize, 1], [1, 0]] {
            for t0 in 0..64 {
                for t1 in 0..64 {
                    let th = [t0 as f64, t1 as f64].map(|t| t * std::f64::consts::TAU / 64.0);
                    let mut v = CMatrix::zeros(2, 2);
                    for l in 0..2 {
                        v[(perm[l], l)] = C64::from_polar(1.0, th[l]);
                    }
                    let out = applied.matmul(&v.transpose()).unwrap();
                    best = best.min(frobenius_distance(&out, &psi).unwrap());
                }
            }
        }
        assert!((cert.residual - best).abs() < 1e-9);
        assert!((cert.residual - std::f64::consts::SQRT_2 * (b - a)).abs() < 1e-12);
        assert!(cert.residual > 0.1);
    }

    #[test]
    fn rejects_non_unitary() {
        let op = CMatrix::identity(2).scale(c(2.0));
        assert!(matches!(
            find_countertransform(&bell(), &op, &Cut::system()),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = crate::linalg::seeded_rng(5);
        for n in 1..=6 {
            for _ in 0..20 {
                let w: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..n).map(|_| rand::Rng::random::<f64>(&mut rng)).collect())
                    .collect();
                let got = max_weight_assignment(&w);
                let score = |a: &[usize]| a.iter().enumerate().map(|(i, &j)| w[i][j]).sum::<f64>();
                let best = (0..n)
                    .permutations(n)
                    .map(|p| score(&p))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((score(&got) - best).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equiprobability_examples() {
        assert_eq!(
            equiprobability_certificate(&bell(), &Cut::system()).unwrap(),
            vec![Prob::new(1, 2); 2]
        );

        let r = 1.0 / 3f64.sqrt();
        let mut amps = vec![c(0.0); 9];
        for k in 0..3 {
            amps[k * 3 + k] = c(r);
        }
        let even3 = PureState::new(Register::new(vec![3, 3]).unwrap(), amps).unwrap();
        assert_eq!(
            equiprobability_certificate(&even3, &Cut::system()).unwrap(),
            vec![Prob::new(1, 3); 3]
        );

        let mut amps = vec![c(0.0); 9];
        amps[0] = c(S);
        amps[4] = c(S);
        let padded = PureState::new(Register::new(vec![3, 3]).unwrap(), amps).unwrap();
        let p = equiprobability_certificate(&padded, &Cut::system()).unwrap();
        assert_eq!(p, vec![Prob::new(1, 2), Prob::new(1, 2), Prob::new(0, 1)]);

        let uneven = PureState::new(
            Register::qubits(2).unwrap(),
            vec![c(0.3f64.sqrt()), c(0.0), c(0.0), c(0.7f64.sqrt())],
        )
        .unwrap();
        assert!(matches!(
            equiprobability_certificate(&uneven, &Cut::system()),
            Err(Error::NotEven)
        ));
    }

    #[test]
    fn born_finegrain_examples() {
        let cert = born_finegrain(RationalAmps::new(1, 2).unwrap()).unwrap();
        assert_eq!((cert.p_up, cert.p_down), (Prob::new(1, 3), Prob::new(2, 3)));
        assert!(cert.check.amplitude_spread <= 1e-12);
        let dense = cert.check.dense.as_ref().unwrap();
        assert_eq!(dense.verdict, Verdict::Envariant);

        for k in 1..6 {
            let cert = born_finegrain(RationalAmps::new(k, k).unwrap()).unwrap();
            assert_eq!(cert.p_up, Prob::new(1, 2));
        }

        let cert = born_finegrain(RationalAmps::new(3, 7).unwrap()).unwrap();
        assert_eq!(
            (cert.p_up, cert.p_down),
            (Prob::new(3, 10), Prob::new(7, 10))
        );
        let (alpha, _) = RationalAmps::new(3, 7).unwrap().amplitudes();
        assert!((alpha * alpha - 0.3).abs() < 1e-12);

        // Marginal of S in the dense finegrained state carries the same weights.
        let psi = cert.finegrained.to_pure_state().unwrap();
        let rho = partial_trace(&psi, &[0]).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.3).abs() < 1e-12);

        assert!(RationalAmps::new(0, 3).is_err());
        assert!(RationalAmps::new(4000, 200).is_err());
    }

    #[test]
    fn born_finegrain_without_dense_state() {
        // The structural swap check carries large refinements alone.
        let cert = born_finegrain(RationalAmps::new(49, 50).unwrap()).unwrap();
        assert!(cert.check.dense.is_none());
        assert_eq!(cert.p_up, Prob::new(49, 99));
        assert!(cert.check.swap_residual <= 1e-10);
    }

    #[test]
    fn born_probabilities_examples() {
        let (a, b) = (0.3f64.sqrt(), 0.7f64.sqrt());
        let st = PureState::new(
            Register::qubits(2).unwrap(),
            vec![c(a), c(0.0), c(0.0), c(b)],
        )
        .unwrap();
        let res = born_probabilities(&st, &Cut::system(), 1000).unwrap();
        // descending Schmidt order: 0.7 first
        assert_eq!(res.probabilities, vec![Prob::new(7, 10), Prob::new(3, 10)]);
        assert!(res.max_deviation <= 2e-3);

        let res = born_probabilities(&bell(), &Cut::system(), 1000).unwrap();
        assert_eq!(res.probabilities, vec![Prob::new(1, 2); 2]);

        let reg = Register::new(vec![3, 3]).unwrap();
        let r = 1.0 / 3f64.sqrt();
        let mut amps = vec![c(0.0); 9];
        (0..3).for_each(|k| amps[4 * k] = c(r));
        let res =
            born_probabilities(&PureState::new(reg, amps).unwrap(), &Cut::system(), 1000).unwrap();
        assert_eq!(res.probabilities, vec![Prob::new(1, 3); 3]);
    }

    #[test]
    fn born_probabilities_on_incommensurate_states() {
        for seed in 0..20 {
            let reg = Register::new(vec![3, 4]).unwrap();
            let st = PureState::new(reg, haar_vector(12, seed)).unwrap();
            for m in [10, 100, 1000, 4096] {
                let res = born_probabilities(&st, &Cut::system(), m).unwrap();
                let sum = res
                    .probabilities
                    .iter()
                    .fold(Prob::new(0, 1), |acc, p| acc + p);
                assert_eq!(sum, Prob::new(1, 1));
                for (p, x) in res.probabilities.iter().zip(&res.squared_coefficients) {
                    assert!((*p.numer() as f64 / *p.denom() as f64 - x).abs() <= 2.0 / m as f64);
                }
            }
        }
    }

    #[test]
    fn probabilities_are_additive() {
        let reg = Register::new(vec![4, 4]).unwrap();
        let st = PureState::new(reg, haar_vector(16, 3)).unwrap();
        let p = born_probabilities(&st, &Cut::system(), 1000)
            .unwrap()
            .probabilities;
        let counts: Vec<u64> = p
            .iter()
            .map(|q| q.numer() * (1000 / q.denom().max(&1)))
            .collect();
        for mask in 0u32..16 {
            let sum = (0..4)
                .filter(|k| mask >> k & 1 == 1)
                .fold(Prob::new(0, 1), |acc, k| acc + p[k]);
            let comp = (0..4)
                .filter(|k| mask >> k & 1 == 0)
                .fold(Prob::new(0, 1), |acc, k| acc + p[k]);
            assert_eq!(sum + comp, Prob::new(1, 1));
        }
        assert_eq!(counts.len(), 4);
    }

    #[test]
    fn environment_unitaries_leave_system_alone() {
        for seed in 0..10 {
            let psi = PureState::new(Register::qubits(4).unwrap(), haar_vector(16, seed)).unwrap();
            let before = partial_trace(&psi, &[0]).unwrap();
            let after = apply_local(&psi, &[1, 2, 3], &haar_unitary(8, seed + 100)).unwrap();
            let after = partial_trace(&after, &[0]).unwrap();
            assert!(after.matrix().sub(before.matrix()).unwrap().max_abs() <= 1e-12);
        }
    }

    #[test]
    fn phases_cannot_change_decohered_system() {
        let psi = branching_state(&BranchSpec::from_alpha2(0.3, 3, 0.0).unwrap()).unwrap();
        let before = partial_trace(&psi, &[0]).unwrap();
        let diag = CMatrix::diag(&[c(0.3), c(0.7)]);
        assert!(before.matrix().sub(&diag).unwrap().max_abs() <= 1e-10);
        for k in 0..16 {
            let phi = k as f64 * std::f64::consts::TAU / 16.0;
            let shifted = phase_shift(&psi, Side::System, &[0.0, phi]).unwrap();
            let after = partial_trace(&shifted, &[0]).unwrap();
            assert!(after.matrix().sub(before.matrix()).unwrap().max_abs() <= 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn envariant_verdicts_are_sound(d in 2usize..=4, su in any::<u64>(), sv in any::<u64>(), so in any::<u64>()) {
            let coeffs: Vec<f64> = haar_vector(d, so).iter().map(|z| z.norm()).collect();
            let (st, u, _) = planted(&coeffs, su, sv);
            let phases: Vec<f64> = haar_vector(d, so ^ 1).iter().map(|z| z.arg()).collect();
            let op = phase_in_basis(&u, &phases);
            let cert = find_countertransform(&st, &op, &Cut::system()).unwrap();
            prop_assert_eq!(cert.verdict, Verdict::Envariant);
            // independent re-check of counter ∘ applied
            let v = cert.counter.unwrap();
            let moved = apply_local(&apply_local(&st, &[0], &op).unwrap(), &[1], &v).unwrap();
            prop_assert!(moved.distance(&st).unwrap() <= 1e-10);
        }

        #[test]
        fn finegrain_ignores_record_labels(mu in 1u64..9, nu in 1u64..9, seed in any::<u64>()) {
            let cert = born_finegrain(RationalAmps::new(mu, nu).unwrap()).unwrap();
            let n = (mu + nu) as usize;
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = crate::linalg::seeded_rng(seed);
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            let relabeled = cert.finegrained.relabel_environment(&perm).unwrap();
            let check = certify_finegrained(&relabeled).unwrap();
            prop_assert_eq!(check.dense.map(|c| c.verdict), Some(Verdict::Envariant));
            prop_assert_eq!(relabeled.counts(), cert.finegrained.counts());
        }
    }
}
