//! Copying unitaries and the overlap identity they force.
//!
//! A measurement that leaves `|v⟩` and `|w⟩` undisturbed while writing records
//! `|A_v⟩`, `|A_w⟩` must satisfy `⟨v|w⟩(1 − ⟨A_v|A_w⟩) = 0`: either the states
//! are orthogonal, or the apparatus learned nothing about which one it saw.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{PureState, Register};
use crate::linalg::{complete_basis, inner, norm, unitarity_residual, CMatrix, C64};

/// Largest distance of a post-copy state from `|x⟩ ⊗ record` still counted
/// as undisturbed. Two such defects bound the overlap identity by `1e-9`.
pub const REPEAT_TOL: f64 = 4e-10;

/// System-marginal purity floor for an undisturbed outcome.
pub const PURITY_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);

/// A unitary on `S ⊗ A` together with the apparatus ready state.
#[derive(Debug, Clone)]
pub struct CopyScenario {
    system_dim: usize,
    record_dim: usize,
    copy_unitary: CMatrix,
    ready: PureState,
}

impl CopyScenario {
    pub fn new(system_dim: usize, copy_unitary: CMatrix, ready: PureState) -> Result<Self> {
        let record_dim = ready.register().total_dim();
        if system_dim < 2 || record_dim < 2 {
            return Err(Error::InvalidParameter(
                "system and record dimensions must be at least 2".into(),
            ));
        }
        let d = system_dim * record_dim;
        if copy_unitary.rows() != d || copy_unitary.cols() != d {
            return Err(Error::Shape(format!(
                "copy unitary is {}x{}, expected {d}x{d}",
                copy_unitary.rows(),
                copy_unitary.cols()
            )));
        }
        let res = unitarity_residual(&copy_unitary);
        if res > 1e-10 {
            return Err(Error::NotUnitary(res));
        }
        Ok(Self {
            system_dim,
            record_dim,
            copy_unitary,
            ready,
        })
    }

    /// Does nothing to either side.
    pub fn identity(system_dim: usize, record_dim: usize) -> Result<Self> {
        let ready = PureState::basis(Register::new(vec![record_dim])?, 0)?;
        Self::new(
            system_dim,
            CMatrix::identity(system_dim * record_dim),
            ready,
        )
    }

    /// Controlled shift `|k⟩|0⟩ → |k⟩|k⟩` on a qubit.
    pub fn cnot() -> Result<Self> {
        let basis = [qudit(&[1.0, 0.0])?, qudit(&[0.0, 1.0])?];
        build_copy_unitary(&basis, &basis)
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn record_dim(&self) -> usize {
        self.record_dim
    }

    pub fn copy_unitary(&self) -> &CMatrix {
        &self.copy_unitary
    }

    pub fn ready(&self) -> &PureState {
        &self.ready
    }

    /// `U (|x⟩ ⊗ |A_0⟩)` as a `system × record` matrix.
    fn copy(&self, x: &PureState) -> Result<CMatrix> {
        if x.register().total_dim() != self.system_dim {
            return Err(Error::LengthMismatch {
                expected: self.system_dim,
                got: x.register().total_dim(),
            });
        }
        let input: Vec<C64> = x
            .amps()
            .iter()
            .flat_map(|s| self.ready.amps().iter().map(move |a| s * a))
            .collect();
        let out = self.copy_unitary.mul_vec(&input)?;
        CMatrix::from_vec(self.system_dim, self.record_dim, out)
    }
}

fn qudit(re: &[f64]) -> Result<PureState> {
    PureState::new(
        Register::new(vec![re.len()])?,
        re.iter().map(|&x| C64::new(x, 0.0)).collect(),
    )
}

/// Unitary with `U |s_k⟩|A_0⟩ = |s_k⟩|A_k⟩`, `|A_0⟩` the first record basis
/// state. Both the demanded inputs and outputs are completed to bases by
/// Gram–Schmidt over the standard basis in index order.
pub fn build_copy_unitary(
    pointer_basis: &[PureState],
    records: &[PureState],
) -> Result<CopyScenario> {
    if pointer_basis.len() != records.len() {
        return Err(Error::LengthMismatch {
            expected: pointer_basis.len(),
            got: records.len(),
        });
    }
    let (Some(s0), Some(a0)) = (pointer_basis.first(), records.first()) else {
        return Err(Error::InvalidParameter("no pointer states".into()));
    };
    let ds = s0.register().total_dim();
    let da = a0.register().total_dim();
    if pointer_basis.iter().any(|s| s.register().total_dim() != ds)
        || records.iter().any(|a| a.register().total_dim() != da)
    {
        return Err(Error::RegisterMismatch);
    }
    if pointer_basis.len() > ds {
        return Err(Error::NotOrthonormal(1.0));
    }

    // The demanded map must preserve inner products.
    let mut isometry: f64 = 0.0;
    let mut orthonormality: f64 = 0.0;
    for (i, (si, ai)) in pointer_basis.iter().zip(records).enumerate() {
        for (j, (sj, aj)) in pointer_basis.iter().zip(records).enumerate() {
            let s = inner(si.amps(), sj.amps());
            let a = inner(ai.amps(), aj.amps());
            isometry = isometry.max((s - s * a).norm());
            let id = if i == j { 1.0 } else { 0.0 };
            orthonormality = orthonormality.max((s - id).norm());
        }
    }
    if isometry > 1e-10 {
        return Err(Error::InconsistentRecords(isometry));
    }
    if orthonormality > 1e-10 {
        return Err(Error::NotOrthonormal(orthonormality));
    }

    let product = |s: &PureState, a: &[C64]| -> Vec<C64> {
        s.amps()
            .iter()
            .flat_map(|x| a.iter().map(move |y| x * y))
            .collect()
    };
    let mut ready = vec![ZERO; da];
    ready[0] = C64::new(1.0, 0.0);
    let inputs: Vec<Vec<C64>> = pointer_basis.iter().map(|s| product(s, &ready)).collect();
    let outputs: Vec<Vec<C64>> = pointer_basis
        .iter()
        .zip(records)
        .map(|(s, a)| product(s, a.amps()))
        .collect();
    let d = ds * da;
    let v = CMatrix::from_columns(d, &complete_basis(&inputs, d))?;
    let w = CMatrix::from_columns(d, &complete_basis(&outputs, d))?;
    let u = w.matmul(&v.adjoint())?;
    CopyScenario::new(ds, u, PureState::basis(Register::new(vec![da])?, 0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepeatVerdict {
    RepeatablePair,
    NotRepeatable,
}

/// Post-copy state of one input.
#[derive(Debug, Clone)]
struct Outcome {
    /// `(⟨x| ⊗ 1) U |x, A_0⟩`, normalized when nonzero.
    record: Vec<C64>,
    residual: f64,
    purity: f64,
}

impl Outcome {
    fn repeatable(&self) -> bool {
        self.residual <= REPEAT_TOL && self.purity >= 1.0 - PURITY_TOL
    }
}

fn outcome(scenario: &CopyScenario, x: &PureState) -> Result<Outcome> {
    let m = scenario.copy(x)?;
    let mut record = vec![ZERO; m.cols()];
    for (i, xi) in x.amps().iter().enumerate() {
        let c = xi.conj();
        record
            .iter_mut()
            .zip(m.row(i))
            .for_each(|(r, z)| *r += c * z);
    }
    let mut residual: f64 = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            residual += (m[(i, j)] - x.amps()[i] * record[j]).norm_sqr();
        }
    }
    let purity = crate::hilbert::gram_rows(&m)
        .as_slice()
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>();
    let n = norm(&record);
    if n > 1e-12 {
        record.iter_mut().for_each(|z| *z /= n);
    }
    Ok(Outcome {
        record,
        residual: residual.sqrt(),
        purity,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Eq4Report {
    pub sv_overlap: C64,
    pub record_overlap: C64,
    pub repeat_residual_v: f64,
    pub repeat_residual_w: f64,
    /// `|⟨v|w⟩ (1 − ⟨A_v|A_w⟩)|`.
    pub eq4_residual: f64,
    pub verdict: RepeatVerdict,
}

/// Copies `v` and `w` and checks that both come out undisturbed.
pub fn eq4_check(scenario: &CopyScenario, v: &PureState, w: &PureState) -> Result<Eq4Report> {
    let ov = outcome(scenario, v)?;
    let ow = outcome(scenario, w)?;
    let sv_overlap = inner(v.amps(), w.amps());
    let record_overlap = inner(&ov.record, &ow.record);
    let verdict = if ov.repeatable() && ow.repeatable() {
        RepeatVerdict::RepeatablePair
    } else {
        RepeatVerdict::NotRepeatable
    };
    Ok(Eq4Report {
        sv_overlap,
        record_overlap,
        repeat_residual_v: ov.residual,
        repeat_residual_w: ow.residual,
        eq4_residual: (sv_overlap * (C64::new(1.0, 0.0) - record_overlap)).norm(),
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessRow {
    pub i: usize,
    pub j: usize,
    pub report: Eq4Report,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessTable {
    /// Whether each candidate alone survives the copy.
    pub repeatable: Vec<bool>,
    /// Pairs `i < j` in lexicographic order.
    pub pairs: Vec<WitnessRow>,
    /// Every repeatable pair with distinguishable records is orthogonal.
    pub orthogonal_when_distinguished: bool,
}

/// Pairwise overlap identity over a candidate list.
pub fn orthogonality_witness(
    scenario: &CopyScenario,
    candidates: &[PureState],
) -> Result<WitnessTable> {
    let repeatable = candidates
        .iter()
        .map(|x| outcome(scenario, x).map(|o| o.repeatable()))
        .collect::<Result<Vec<_>>>()?;
    let index: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|i| (i + 1..candidates.len()).map(move |j| (i, j)))
        .collect();
    let pairs = index
        .par_iter()
        .map(|&(i, j)| {
            eq4_check(scenario, &candidates[i], &candidates[j]).map(|report| WitnessRow {
                i,
                j,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let orthogonal_when_distinguished = pairs.iter().all(|row| {
        let r = &row.report;
        r.verdict == RepeatVerdict::NotRepeatable
            || r.record_overlap.norm() >= 1.0 - 1e-9
            || r.sv_overlap.norm() <= 1e-9
    });
    Ok(WitnessTable {
        repeatable,
        pairs,
        orthogonal_when_distinguished,
    })
}
