//! Mutual information between the system and environment fragments,
//! partial-information plots (PIPs), and redundancy.
//!
//! A PIP has one row per fragment size `m = 0..=N` at `f = m/N`. Each row
//! averages `I(S:F)` over every fragment of that size, or over a seeded
//! Monte Carlo sample when there are too many. Sampled sizes `m` and `N − m`
//! share their fragments as complements, so for a pure global state
//! `I(m) + I(N − m) = 2 H_S` holds row by row on sampled curves as well.

use itertools::Itertools;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{subsystem_entropy_fast, PureState};
use crate::linalg::C64;
use crate::models::{dephase_in_time, dephasing_overlap, TimeSlice};

/// Tolerance on entropy identities and clipping of small negative information.
pub const INFO_TOL: f64 = 1e-9;

/// Set of environment subsystem positions (never the system at 0).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fragment {
    indices: Vec<usize>,
}

impl Fragment {
    pub fn new(indices: &[usize], n_env: usize) -> Result<Self> {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        if idx.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::BadIndex(format!(
                "duplicate subsystem in fragment {indices:?}"
            )));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i == 0 || i > n_env) {
            return Err(Error::BadIndex(format!(
                "fragment index {bad} outside environment 1..={n_env}"
            )));
        }
        Ok(Self { indices: idx })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn env_size(state: &PureState) -> Result<usize> {
    match state.register().len() {
        0 | 1 => Err(Error::InvalidParameter(
            "state needs a system and at least one environment subsystem".into(),
        )),
        n => Ok(n - 1),
    }
}

/// `I(S:F) = H_S + H_F − H_SF` in bits.
pub fn mutual_information(state: &PureState, frag: &Fragment) -> Result<f64> {
    let n_env = env_size(state)?;
    if let Some(&bad) = frag.indices.iter().find(|&&i| i > n_env) {
        return Err(Error::BadIndex(format!(
            "fragment index {bad} beyond environment of {n_env}"
        )));
    }
    let h_s = subsystem_entropy_fast(state, &[0])?;
    mutual_information_given(state, h_s, frag.indices())
}

fn mutual_information_given(state: &PureState, h_s: f64, frag: &[usize]) -> Result<f64> {
    if frag.is_empty() {
        return Ok(0.0);
    }
    let h_f = subsystem_entropy_fast(state, frag)?;
    let mut with_s = Vec::with_capacity(frag.len() + 1);
    with_s.push(0);
    with_s.extend_from_slice(frag);
    let h_sf = subsystem_entropy_fast(state, &with_s)?;
    Ok((h_s + h_f - h_sf).max(0.0))
}

/// How fragments are chosen for each PIP row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPolicy {
    /// Sizes with at most this many fragments are enumerated exhaustively.
    pub max_exhaustive: u64,
    /// Monte Carlo sample count for the other sizes.
    pub samples: usize,
    pub seed: u64,
}

impl SamplingPolicy {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn exhaustive() -> Self {
        Self {
            max_exhaustive: u64::MAX,
            ..Self::default()
        }
    }
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        Self {
            max_exhaustive: 1000,
            samples: 200,
            seed: 0,
        }
    }
}

/// How a finished curve was sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    Exhaustive,
    MonteCarlo { seed: u64, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipRow {
    pub m: usize,
    pub f: f64,
    pub i_mean: f64,
    pub i_min: f64,
    pub i_max: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipCurve {
    pub rows: Vec<PipRow>,
    pub h_s: f64,
    pub n_env: usize,
    pub sampling: Sampling,
}

impl PipCurve {
    pub fn row(&self, m: usize) -> Option<&PipRow> {
        self.rows.get(m)
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| {
        acc.saturating_mul((n - i) as u64) / (i as u64 + 1)
    })
}

/// Fragments for every size, in evaluation order.
fn plan_fragments(n_env: usize, policy: &SamplingPolicy) -> (Vec<Vec<Vec<usize>>>, bool) {
    let mut plan: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n_env + 1];
    let mut sampled = false;
    for m in 0..=n_env {
        let partner = n_env - m;
        if binomial(n_env, m) <= policy.max_exhaustive {
            plan[m] = (1..=n_env).combinations(m).collect();
            continue;
        }
        sampled = true;
        if m > partner {
            continue; // filled from its partner below
        }
        let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
        rng.set_stream(m as u64);
        let draws = if m == partner {
            policy.samples / 2
        } else {
            policy.samples
        };
        let mut picks = Vec::with_capacity(draws);
        let mut complements = Vec::with_capacity(draws);
        for _ in 0..draws {
            let mut f: Vec<usize> = index::sample(&mut rng, n_env, m)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            f.sort_unstable();
            let comp: Vec<usize> = (1..=n_env)
                .filter(|i| f.binary_search(i).is_err())
                .collect();
            picks.push(f);
            complements.push(comp);
        }
        if m == partner {
            picks.extend(complements);
            plan[m] = picks;
        } else {
            plan[m] = picks;
            plan[partner] = complements;
        }
    }
    (plan, sampled)
}

/// Partial-information plot of a pure `1 + N` subsystem state.
pub fn pip(state: &PureState, policy: &SamplingPolicy) -> Result<PipCurve> {
    let n_env = env_size(state)?;
    if policy.samples < 2 {
        return Err(Error::InvalidParameter(
            "Monte Carlo needs at least 2 samples".into(),
        ));
    }
    let h_s = subsystem_entropy_fast(state, &[0])?;
    let (plan, sampled) = plan_fragments(n_env, policy);

    let jobs: Vec<(usize, &[usize])> = plan
        .iter()
        .enumerate()
        .flat_map(|(m, frags)| frags.iter().map(move |f| (m, f.as_slice())))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|(_, f)| mutual_information_given(state, h_s, f))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(n_env + 1);
    let mut offset = 0;
    for (m, frags) in plan.iter().enumerate() {
        let vals = &values[offset..offset + frags.len()];
        offset += frags.len();
        let sum: f64 = vals.iter().sum();
        rows.push(PipRow {
            m,
            f: m as f64 / n_env as f64,
            i_mean: sum / vals.len() as f64,
            i_min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            i_max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            n_samples: vals.len(),
        });
    }
    let sampling = if sampled {
        Sampling::MonteCarlo {
            seed: policy.seed,
            samples: policy.samples,
        }
    } else {
        Sampling::Exhaustive
    };
    Ok(PipCurve {
        rows,
        h_s,
        n_env,
        sampling,
    })
}

/// Smallest fragment fraction carrying `(1 − δ) H_S`, and `R_δ = 1/f_δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub delta: f64,
    pub f_delta: f64,
    pub r_delta: f64,
    pub interpolated: bool,
}

/// Locates `f_δ` on a curve.
///
/// Fragments hold at least one subsystem, so `f_δ` never drops below `1/N`;
/// between two nonempty grid sizes the crossing is interpolated linearly.
pub fn find_f_delta(curve: &PipCurve, delta: f64) -> Result<RedundancyReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "δ = {delta} must lie in (0, 1)"
        )));
    }
    if curve.h_s <= INFO_TOL {
        return Err(Error::DegeneratePlateau(curve.h_s));
    }
    let threshold = (1.0 - delta) * curve.h_s;
    let hit = curve
        .rows
        .iter()
        .skip(1)
        .position(|r| r.i_mean >= threshold)
        .map(|p| p + 1)
        .ok_or(Error::NeverReached { threshold })?;

    let row = &curve.rows[hit];
    let (f_delta, interpolated) = if hit == 1 || row.i_mean == threshold {
        (row.f, false)
    } else {
        let prev = &curve.rows[hit - 1];
        let t = (threshold - prev.i_mean) / (row.i_mean - prev.i_mean);
        (prev.f + t * (row.f - prev.f), true)
    };
    Ok(RedundancyReport {
        delta,
        f_delta,
        r_delta: 1.0 / f_delta,
        interpolated,
    })
}

/// `max_m |I(m) + I(N − m) − 2 H_S|`.
pub fn antisymmetry_residual(curve: &PipCurve) -> f64 {
    let n = curve.rows.len();
    (0..n)
        .map(|m| (curve.rows[m].i_mean + curve.rows[n - 1 - m].i_mean - 2.0 * curve.h_s).abs())
        .fold(0.0, f64::max)
}

/// Why a time slice reports a single record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceStatus {
    Reached,
    NeverReached,
    DegeneratePlateau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t_over_tau: f64,
    pub record_overlap: f64,
    pub r_delta: f64,
    pub f_delta: Option<f64>,
    pub status: SliceStatus,
    pub curve: PipCurve,
}

/// Redundancy along a time grid of the dephasing model. Slices where no
/// fragment short of (or including) the whole environment qualifies count
/// as one record.
pub fn redundancy_vs_time(
    alpha: C64,
    beta: C64,
    n_env: usize,
    t_grid: &[f64],
    delta: f64,
    policy: &SamplingPolicy,
) -> Result<Vec<SweepRow>> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "time grid must be ascending".into(),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "δ = {delta} must lie in (0, 1)"
        )));
    }
    t_grid
        .iter()
        .map(|&t| {
            let slice = TimeSlice::new(t)?;
            let state = dephase_in_time(alpha, beta, n_env, slice)?;
            let curve = pip(&state, policy)?;
            let (r_delta, f_delta, status) = match find_f_delta(&curve, delta) {
                Ok(rep) => (rep.r_delta, Some(rep.f_delta), SliceStatus::Reached),
                Err(Error::NeverReached { .. }) => (1.0, None, SliceStatus::NeverReached),
                Err(Error::DegeneratePlateau(_)) => (1.0, None, SliceStatus::DegeneratePlateau),
                Err(e) => return Err(e),
            };
            Ok(SweepRow {
                t_over_tau: t,
                record_overlap: dephasing_overlap(n_env, slice),
                r_delta,
                f_delta,
                status,
                curve,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{partial_trace, Register};
    use crate::models::{branching_state, haar_state, BranchSpec};
    use proptest::prelude::*;

    const H03: f64 = 0.881_290_899_230_692_7;

    /// Slow path: explicit reduced density matrices and their spectra.
    fn mi_oracle(state: &PureState, frag: &[usize]) -> f64 {
        if frag.is_empty() {
            return 0.0;
        }
        let h = |keep: &[usize]| partial_trace(state, keep).unwrap().entropy_bits().unwrap();
        let mut sf = vec![0];
        sf.extend_from_slice(frag);
        h(&[0]) + h(frag) - h(&sf)
    }

    fn branching(alpha2: f64, n: usize, c: f64) -> PureState {
        branching_state(&BranchSpec::from_alpha2(alpha2, n, c).unwrap()).unwrap()
    }

    fn haar(n_env: usize, seed: u64) -> PureState {
        haar_state(&Register::qubits(n_env + 1).unwrap(), seed).unwrap()
    }

    fn curve_from(means: &[f64], h_s: f64) -> PipCurve {
        let n = means.len() - 1;
        PipCurve {
            rows: means
                .iter()
                .enumerate()
                .map(|(m, &i)| PipRow {
                    m,
                    f: m as f64 / n as f64,
                    i_mean: i,
                    i_min: i,
                    i_max: i,
                    n_samples: 1,
                })
                .collect(),
            h_s,
            n_env: n,
            sampling: Sampling::Exhaustive,
        }
    }

    #[test]
    fn fragment_validation() {
        assert!(Fragment::new(&[0], 3).is_err());
        assert!(Fragment::new(&[4], 3).is_err());
        assert!(Fragment::new(&[1, 1], 3).is_err());
        assert_eq!(Fragment::new(&[3, 1], 3).unwrap().indices(), &[1, 3]);
    }

    #[test]
    fn empty_fragment_has_no_information() {
        let psi = haar(4, 1);
        assert_eq!(
            mutual_information(&psi, &Fragment::new(&[], 4).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn ghz_fragments_carry_one_bit() {
        let psi = branching(0.5, 3, 0.0);
        for frag in [
            vec![1],
            vec![2],
            vec![3],
            vec![1, 2],
            vec![1, 3],
            vec![2, 3],
        ] {
            let oracle = mi_oracle(&psi, &frag);
            assert!((oracle - 1.0).abs() < 1e-12);
            let got = mutual_information(&psi, &Fragment::new(&frag, 3).unwrap()).unwrap();
            assert!((got - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn whole_environment_gives_twice_system_entropy() {
        for seed in 0..5 {
            let psi = haar(5, seed);
            let h_s = subsystem_entropy_fast(&psi, &[0]).unwrap();
            let all = Fragment::new(&[1, 2, 3, 4, 5], 5).unwrap();
            assert!((mutual_information(&psi, &all).unwrap() - 2.0 * h_s).abs() < 1e-9);
        }
    }

    #[test]
    fn no_record_curve_is_flat_zero() {
        let curve = pip(&branching(0.5, 3, 1.0), &SamplingPolicy::default()).unwrap();
        assert_eq!(curve.rows.len(), 4);
        assert!(curve.rows.iter().all(|r| r.i_mean.abs() < 1e-9));
        assert!(matches!(
            find_f_delta(&curve, 0.1),
            Err(Error::DegeneratePlateau(_))
        ));
    }

    #[test]
    fn perfect_record_plateau() {
        // Oracle at N = 4 with explicit density matrices; every fragment of a
        // given size is equivalent under relabeling, which carries it to N = 8.
        let small = branching(0.3, 4, 0.0);
        for m in 1..=4 {
            for frag in (1..=4).combinations(m) {
                let want = if m == 4 { 2.0 * H03 } else { H03 };
                assert!((mi_oracle(&small, &frag) - want).abs() < 1e-10);
            }
        }
        let curve = pip(&branching(0.3, 8, 0.0), &SamplingPolicy::default()).unwrap();
        assert_eq!(curve.sampling, Sampling::Exhaustive);
        assert!((curve.h_s - H03).abs() < 1e-10);
        assert_eq!(curve.rows[0].i_mean, 0.0);
        for m in 1..8 {
            assert!((curve.rows[m].i_mean - H03).abs() < 1e-6, "m={m}");
            assert_eq!(curve.rows[m].n_samples as u64, binomial(8, m));
        }
        assert!((curve.rows[8].i_mean - 2.0 * H03).abs() < 1e-6);
    }

    #[test]
    fn random_state_curve_shape() {
        let seeds = 20;
        let (mut first, mut last, mut hs) = (0.0, 0.0, 0.0);
        for seed in 0..seeds {
            let curve = pip(&haar(8, seed), &SamplingPolicy::default()).unwrap();
            first += curve.rows[1].i_mean;
            last += curve.rows[7].i_mean;
            hs += curve.h_s;
        }
        let n = seeds as f64;
        assert!(first / n < 0.1);
        assert!(last / n > 2.0 * hs / n - 0.1);
    }

    #[test]
    fn redundancy_on_perfect_records() {
        let means: Vec<f64> = (0..=8)
            .map(|m| {
                if m == 0 {
                    0.0
                } else if m == 8 {
                    2.0 * H03
                } else {
                    H03
                }
            })
            .collect();
        let curve = curve_from(&means, H03);
        let rep = find_f_delta(&curve, 0.1).unwrap();
        assert_eq!(rep.f_delta, 0.125);
        assert_eq!(rep.r_delta, 8.0);
        assert!(!rep.interpolated);

        let rep = find_f_delta(&curve, 1.0 - 1e-12).unwrap();
        assert_eq!(rep.r_delta, 8.0);
    }

    #[test]
    fn interpolates_between_nonempty_sizes() {
        // I rises 0, 0.2, 0.6, 1.0, 1.4, 2.0 over N = 5 with H_S = 1.
        let curve = curve_from(&[0.0, 0.2, 0.6, 1.0, 1.4, 2.0], 1.0);
        let rep = find_f_delta(&curve, 0.5).unwrap();
        // threshold 0.5 lies between m=1 (0.2) and m=2 (0.6): f = 0.2 + 0.75·0.2
        assert!(rep.interpolated);
        assert!((rep.f_delta - 0.35).abs() < 1e-15);
        assert!((rep.r_delta * rep.f_delta - 1.0).abs() < 1e-12);

        let exact = find_f_delta(&curve, 0.4).unwrap();
        assert!(!exact.interpolated);
        assert_eq!(exact.f_delta, 0.4);
    }

    #[test]
    fn never_reached_and_bad_delta() {
        let curve = curve_from(&[0.0, 0.1, 0.2, 0.3], 1.0);
        assert!(matches!(
            find_f_delta(&curve, 0.1),
            Err(Error::NeverReached { .. })
        ));
        assert!(find_f_delta(&curve, 0.0).is_err());
        assert!(find_f_delta(&curve, 1.0).is_err());
    }

    #[test]
    fn antisymmetry_examples() {
        let curve = pip(&branching(0.3, 6, 0.4), &SamplingPolicy::exhaustive()).unwrap();
        assert!(antisymmetry_residual(&curve) <= 1e-9);
        let curve = pip(&haar(6, 3), &SamplingPolicy::exhaustive()).unwrap();
        assert!(antisymmetry_residual(&curve) <= 1e-9);

        let endpoints = curve_from(&[0.0, 2.0], 1.0);
        assert_eq!(antisymmetry_residual(&endpoints), 0.0);
    }

    #[test]
    fn sampled_curves_stay_antisymmetric() {
        let policy = SamplingPolicy {
            max_exhaustive: 7,
            samples: 40,
            seed: 9,
        };
        for psi in [haar(7, 2), branching(0.4, 7, 0.5)] {
            let curve = pip(&psi, &policy).unwrap();
            assert!(matches!(
                curve.sampling,
                Sampling::MonteCarlo {
                    seed: 9,
                    samples: 40
                }
            ));
            assert_eq!(curve.rows[1].n_samples, 7);
            assert_eq!(curve.rows[3].n_samples, 40);
            assert_eq!(curve.rows[4].n_samples, 40);
            assert!(antisymmetry_residual(&curve) <= 1e-9);
            assert_eq!(curve, pip(&psi, &policy).unwrap());
        }
        // even N: the middle size is closed under complements
        let curve = pip(
            &haar(6, 4),
            &SamplingPolicy {
                max_exhaustive: 10,
                samples: 30,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(curve.rows[3].n_samples, 30);
        assert!(antisymmetry_residual(&curve) <= 1e-9);
    }

    #[test]
    fn time_sweep_examples() {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let grid = [0.0, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 20.0];
        let rows = redundancy_vs_time(s, s, 8, &grid, 0.1, &SamplingPolicy::default()).unwrap();
        assert_eq!(rows[0].r_delta, 1.0);
        assert_eq!(rows[0].status, SliceStatus::DegeneratePlateau);
        for w in rows.windows(2) {
            assert!(
                w[1].r_delta >= w[0].r_delta,
                "{} -> {}",
                w[0].r_delta,
                w[1].r_delta
            );
        }
        assert_eq!(rows.last().unwrap().r_delta, 8.0);

        assert!(redundancy_vs_time(s, s, 4, &[1.0, 0.5], 0.1, &SamplingPolicy::default()).is_err());
    }

    #[test]
    fn information_grows_with_time() {
        let s = C64::new(0.3f64.sqrt(), 0.0);
        let b = C64::new(0.7f64.sqrt(), 0.0);
        let mut prev: Option<PipCurve> = None;
        for t in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            let psi = dephase_in_time(s, b, 6, TimeSlice::new(t).unwrap()).unwrap();
            let curve = pip(&psi, &SamplingPolicy::default()).unwrap();
            if let Some(p) = &prev {
                // Rows above N/2 mirror 2 H_S − I(N − m) and fall once H_S saturates.
                for m in (0..=3).chain([6]) {
                    assert!(curve.rows[m].i_mean >= p.rows[m].i_mean - 1e-9);
                }
            }
            prev = Some(curve);
        }
    }

    #[test]
    fn plateau_redundancy_ignores_delta() {
        let curve = pip(&branching(0.3, 8, 0.0), &SamplingPolicy::default()).unwrap();
        for delta in [0.01, 0.05, 0.1, 0.2, 0.3, 0.5] {
            assert_eq!(find_f_delta(&curve, delta).unwrap().r_delta, 8.0);
        }
    }

    #[test]
    fn redundancy_shrinks_as_delta_tightens() {
        let curve = pip(&branching(0.4, 8, 0.6), &SamplingPolicy::default()).unwrap();
        let mut last = f64::INFINITY;
        for delta in [0.9, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05] {
            if let Ok(rep) = find_f_delta(&curve, delta) {
                assert!(rep.r_delta <= last + 1e-12);
                last = rep.r_delta;
            }
        }
    }

    #[test]
    fn adding_subsystems_never_loses_information() {
        for psi in [haar(6, 11), branching(0.35, 6, 0.3)] {
            let h_s = subsystem_entropy_fast(&psi, &[0]).unwrap();
            for mask in 0u32..64 {
                let frag: Vec<usize> = (1..=6).filter(|i| mask >> (i - 1) & 1 == 1).collect();
                let base = mutual_information_given(&psi, h_s, &frag).unwrap();
                for extra in (1..=6).filter(|i| !frag.contains(i)) {
                    let mut bigger = frag.clone();
                    bigger.push(extra);
                    bigger.sort_unstable();
                    let more = mutual_information_given(&psi, h_s, &bigger).unwrap();
                    assert!(more >= base - 1e-9);
                }
            }
        }
    }

    #[test]
    fn relabeling_environment_keeps_curve() {
        // Reverse the environment order of a Haar state.
        let psi = haar(5, 21);
        let reg = psi.register().clone();
        let amps = psi.amps();
        let perm: Vec<C64> = (0..64)
            .map(|g: usize| {
                let s = g >> 5;
                let env = g & 31;
                let rev = (0..5).fold(0, |acc, b| acc | ((env >> b & 1) << (4 - b)));
                amps[(s << 5) | rev]
            })
            .collect();
        let flipped = PureState::new(reg, perm).unwrap();
        let a = pip(&psi, &SamplingPolicy::exhaustive()).unwrap();
        let b = pip(&flipped, &SamplingPolicy::exhaustive()).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!((ra.i_mean - rb.i_mean).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn information_is_bounded(n in 1usize..=6, seed in any::<u64>(), mask in any::<u32>()) {
            let psi = haar(n, seed);
            let h_s = subsystem_entropy_fast(&psi, &[0]).unwrap();
            let frag: Vec<usize> = (1..=n).filter(|i| mask >> (i - 1) & 1 == 1).collect();
            let mi = mutual_information(&psi, &Fragment::new(&frag, n).unwrap()).unwrap();
            prop_assert!(mi >= 0.0);
            prop_assert!(mi <= 2.0 * h_s + 1e-9);
            prop_assert!((mi - mi_oracle(&psi, &frag)).abs() <= 1e-9);
        }
    }
}
