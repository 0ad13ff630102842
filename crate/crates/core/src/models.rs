//! State constructors: premeasurement, branching states with tunable record
//! quality, time-parametrized dephasing and Haar-random baselines.
//!
//! Qubit conventions: the system's pointer states are `|↑⟩ = |0⟩` and
//! `|↓⟩ = |1⟩`. Every environment qubit records `|↑⟩` as `|0⟩` and `|↓⟩` as
//! `c|0⟩ + √(1−c²)|1⟩`, so `c` is the per-qubit record overlap.

use crate::error::{Error, Result};
use crate::hilbert::{PureState, Register, NORM_TOL};
use crate::linalg::{haar_vector, CMatrix, C64};

/// Amplitudes, environment size and record overlap of a branching state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSpec {
    pub alpha: C64,
    pub beta: C64,
    pub n_env: usize,
    pub record_overlap: f64,
}

impl BranchSpec {
    pub fn new(alpha: C64, beta: C64, n_env: usize, record_overlap: f64) -> Result<Self> {
        let norm2 = alpha.norm_sqr() + beta.norm_sqr();
        if !norm2.is_finite() || (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm2.sqrt()));
        }
        if n_env < 1 {
            return Err(Error::InvalidParameter("n_env must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&record_overlap) {
            return Err(Error::InvalidParameter(format!(
                "record overlap {record_overlap} outside [0, 1]"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            n_env,
            record_overlap,
        })
    }

    /// Real amplitudes `α = √p`, `β = √(1−p)`.
    pub fn from_alpha2(alpha2: f64, n_env: usize, record_overlap: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha2) {
            return Err(Error::InvalidParameter(format!(
                "|α|² = {alpha2} outside [0, 1]"
            )));
        }
        Self::new(
            C64::new(alpha2.sqrt(), 0.0),
            C64::new((1.0 - alpha2).sqrt(), 0.0),
            n_env,
            record_overlap,
        )
    }
}

/// `α|↑⟩⊗ₖ|ε↑⟩ + β|↓⟩⊗ₖ|ε↓⟩` on `1 + n_env` qubits.
pub fn branching_state(spec: &BranchSpec) -> Result<PureState> {
    let n = spec.n_env;
    let register = Register::qubits(n + 1)?;
    let c = spec.record_overlap;
    let s = (1.0 - c * c).max(0.0).sqrt();
    let env_dim = 1usize << n;
    let mut amps = vec![C64::new(0.0, 0.0); 2 * env_dim];
    amps[0] = spec.alpha;
    for (bits, amp) in amps[env_dim..].iter_mut().enumerate() {
        let ones = bits.count_ones() as i32;
        *amp = spec.beta * (c.powi(n as i32 - ones) * s.powi(ones));
    }
    PureState::normalized(register, amps)
}

/// Copies the computational-basis index of the whole input into a fresh
/// apparatus subsystem prepared in `|A₀⟩ = |0⟩`.
pub fn premeasurement(system: &PureState, pointer_dim: usize) -> Result<PureState> {
    let all: Vec<usize> = (0..system.register().len()).collect();
    premeasure(system, &all, pointer_dim)
}

/// Like [`premeasurement`] but controlled by a single subsystem.
pub fn premeasure_subsystem(
    state: &PureState,
    control: usize,
    pointer_dim: usize,
) -> Result<PureState> {
    premeasure(state, &[control], pointer_dim)
}

fn premeasure(state: &PureState, control: &[usize], pointer_dim: usize) -> Result<PureState> {
    let reg = state.register();
    let control = reg.normalize_indices(control)?;
    let control_dim: usize = control.iter().map(|&i| reg.dims()[i]).product();
    if pointer_dim < control_dim {
        return Err(Error::InvalidParameter(format!(
            "pointer dimension {pointer_dim} cannot hold {control_dim} outcomes"
        )));
    }
    let mut dims = reg.dims().to_vec();
    dims.push(pointer_dim);
    let out_reg = Register::new(dims)?;

    let mut amps = vec![C64::new(0.0, 0.0); out_reg.total_dim()];
    for (g, a) in state.amps().iter().enumerate() {
        let k = control_digit(reg.dims(), &control, g);
        // |k⟩|A_0⟩ → |k⟩|A_k⟩
        amps[g * pointer_dim + k % pointer_dim] = *a;
    }
    PureState::normalized(out_reg, amps)
}

/// Mixed-radix value of the `control` digits of global index `g`.
fn control_digit(dims: &[usize], control: &[usize], mut g: usize) -> usize {
    let mut digits = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        digits[i] = g % dims[i];
        g /= dims[i];
    }
    control.iter().fold(0, |acc, &i| acc * dims[i] + digits[i])
}

/// `|k⟩|j⟩ → |k⟩|(j + k) mod P⟩` on `control ⊗ pointer`.
pub fn controlled_shift(control_dim: usize, pointer_dim: usize) -> CMatrix {
    let n = control_dim * pointer_dim;
    let mut u = CMatrix::zeros(n, n);
    for k in 0..control_dim {
        for j in 0..pointer_dim {
            u[(k * pointer_dim + (j + k) % pointer_dim, k * pointer_dim + j)] = C64::new(1.0, 0.0);
        }
    }
    u
}

/// Elapsed time in units of the decoherence time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSlice {
    t_over_tau: f64,
}

impl TimeSlice {
    pub fn new(t_over_tau: f64) -> Result<Self> {
        if !t_over_tau.is_finite() || t_over_tau < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "time {t_over_tau} must be finite and nonnegative"
            )));
        }
        Ok(Self { t_over_tau })
    }

    pub fn t_over_tau(&self) -> f64 {
        self.t_over_tau
    }
}

/// Per-qubit record overlap after time `t`: `exp(−t / (2 N τ_D))`, so the
/// whole-environment branch overlap is `exp(−t / (2 τ_D))`.
pub fn dephasing_overlap(n_env: usize, slice: TimeSlice) -> f64 {
    (-slice.t_over_tau / (2.0 * n_env as f64)).exp()
}

/// Branching state whose record overlap is set by elapsed time.
pub fn dephase_in_time(alpha: C64, beta: C64, n_env: usize, slice: TimeSlice) -> Result<PureState> {
    if n_env < 1 {
        return Err(Error::InvalidParameter("n_env must be at least 1".into()));
    }
    let spec = BranchSpec::new(alpha, beta, n_env, dephasing_overlap(n_env, slice))?;
    branching_state(&spec)
}

/// Haar-random pure state: the first column of `haar_unitary(dim, seed)`.
pub fn haar_state(register: &Register, seed: u64) -> Result<PureState> {
    let v = haar_vector(register.total_dim(), seed);
    PureState::normalized(register.clone(), v)
}
