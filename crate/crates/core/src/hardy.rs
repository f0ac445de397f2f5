//! Hardy configurations on two qubits.
//!
//! Given a state `ψ` and a first direction `n₁` on party 1, the three
//! correlations `S₁(n₁) → S₂(n₂) → S₁(n₃) → S₂(n₄)` are realized by taking
//! each direction as the unique partner of the previous observable. Logically
//! the chain implies `S₁(n₁) → S₂(n₄)`; quantum mechanically the pair
//! `(S₁(n₁), S₂(n₄)) = (1, 0)` keeps probability
//! `⟨ψ|Ŝ₁(n₁)(1 − Ŝ₂(n₄))ψ⟩`, which this module computes, maximizes, and
//! probes under misalignment of `n₄`.

use rayon::prelude::*;

use crate::correlation::{holds, partner_sequence, probability, DEFAULT_TOL};
use crate::error::{LabError, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::random::trial_rng;
use crate::spin::{cross, observable};
use crate::{CMatrix, CVector, Correlation, Direction, LocalObservable, StateVector};
use rand::Rng;

/// Minimum angle between `n_j` and `n_{j+2}` for them to count as non-parallel.
pub const PARALLEL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct HardyConfig {
    psi: StateVector,
    observables: [LocalObservable; 4],
    directions: [Direction; 4],
    p_violation: f64,
    parallel_pairs: Vec<(usize, usize)>,
}

impl HardyConfig {
    pub fn psi(&self) -> &StateVector {
        &self.psi
    }

    /// `[n₁, n₂, n₃, n₄]`.
    pub fn directions(&self) -> [Direction; 4] {
        self.directions
    }

    /// `[S₁(n₁), S₂(n₂), S₁(n₃), S₂(n₄)]`.
    pub fn observables(&self) -> &[LocalObservable; 4] {
        &self.observables
    }

    /// Probability of outcomes `(1, 0)` for `(S₁(n₁), S₂(n₄))`.
    pub fn p_violation(&self) -> f64 {
        self.p_violation
    }

    /// 1-based index pairs `(j, j+2)` whose directions are parallel within
    /// [`PARALLEL_TOL`]. Empty for a proper Hardy configuration.
    pub fn parallel_pairs(&self) -> &[(usize, usize)] {
        &self.parallel_pairs
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.parallel_pairs.is_empty()
    }

    /// The three correlations `S₁(n₁)→S₂(n₂)`, `S₂(n₂)→S₁(n₃)`, `S₁(n₃)→S₂(n₄)`.
    pub fn correlations(&self) -> [Correlation; 3] {
        hardy_correlations(&self.observables)
    }
}

fn hardy_correlations(obs: &[LocalObservable; 4]) -> [Correlation; 3] {
    let link = |a: usize| Correlation::new(obs[a].clone(), obs[a + 1].clone()).expect("alternating parties");
    [link(0), link(1), link(2)]
}

/// Observables for four explicit directions on parties 1, 2, 1, 2.
pub fn hardy_observables(directions: &[Direction; 4]) -> [LocalObservable; 4] {
    std::array::from_fn(|i| observable(directions[i], i % 2 + 1, 2).expect("two parties"))
}

/// Whether all three correlations hold for `psi` with the given directions.
pub fn hardy_conditions_hold(psi: &StateVector, directions: &[Direction; 4], tol: f64) -> Result<bool> {
    for c in hardy_correlations(&hardy_observables(directions)) {
        if !holds(&c, psi, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `√λ|00⟩ + √(1−λ)|11⟩`.
pub fn schmidt_state(lambda: f64) -> Result<StateVector> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(LabError::Precondition(format!("Schmidt coefficient {lambda} outside [0, 1]")));
    }
    StateVector::new(CVector::from_real(&[lambda.sqrt(), 0.0, 0.0, (1.0 - lambda).sqrt()]))
}

fn violation_probability(psi: &StateVector, first: &LocalObservable, last: &LocalObservable) -> Result<f64> {
    let not_last = &CMatrix::identity(4) - last.matrix();
    probability(&(first.matrix() * &not_last), psi)
}

/// Builds the Hardy configuration determined by `(ψ, n₁)`.
pub fn build_hardy(psi: &StateVector, n1: Direction) -> Result<HardyConfig> {
    if psi.n_parties() != 2 {
        return Err(LabError::PartyCount {
            expected: 2,
            got: psi.n_parties(),
        });
    }
    let head = observable(n1, 1, 2)?;
    let seq = partner_sequence(psi, &head, 4).map_err(|(link, e)| LabError::HardyLink {
        link,
        reason: e.to_string(),
    })?;
    let observables: [LocalObservable; 4] = seq.try_into().expect("four observables");
    let directions: [Direction; 4] = std::array::from_fn(|i| {
        observables[i]
            .direction()
            .expect("partner observables carry their direction")
    });

    for (i, c) in hardy_correlations(&observables).iter().enumerate() {
        if !holds(c, psi, DEFAULT_TOL)? {
            return Err(LabError::HardyLink {
                link: i + 1,
                reason: "constructed correlation does not hold".into(),
            });
        }
    }

    let parallel_pairs = [(0, 2), (1, 3)]
        .into_iter()
        .filter(|&(a, b)| directions[a].angle_to(&directions[b]) <= PARALLEL_TOL)
        .map(|(a, b)| (a + 1, b + 1))
        .collect();
    let p_violation = violation_probability(psi, &observables[0], &observables[3])?;
    Ok(HardyConfig {
        psi: psi.clone(),
        observables,
        directions,
        p_violation,
        parallel_pairs,
    })
}

/// `p_violation` for `(ψ, n₁)`, or 0 when the partner construction breaks down
/// (a measure-zero set of inputs).
pub fn hardy_violation(psi: &StateVector, n1: Direction) -> f64 {
    let Ok(head) = observable(n1, 1, 2) else {
        return 0.0;
    };
    match partner_sequence(psi, &head, 4) {
        Ok(seq) => violation_probability(psi, &seq[0], &seq[3]).unwrap_or(0.0),
        Err(_) => 0.0,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub seed: u64,
    pub local: NelderMeadOptions,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0,
            local: NelderMeadOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HardyOptimum {
    pub psi: StateVector,
    pub n1: Direction,
    /// Weight of `|00⟩` in the Schmidt form of `psi`.
    pub lambda: f64,
    pub p_max: f64,
    /// Whether the local search that produced the optimum met its tolerances.
    pub converged: bool,
    pub starts: usize,
}

fn schmidt_from_angle(a: f64) -> StateVector {
    let (s, c) = a.sin_cos();
    StateVector::normalize(CVector::from_real(&[c, 0.0, 0.0, s])).expect("unit vector")
}

fn multistart<F>(cfg: &OptimizerConfig, dims: usize, sample: F) -> Vec<(Vec<f64>, f64, bool)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    (0..cfg.starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = trial_rng(cfg.seed, s as u64);
            let x0: Vec<f64> = (0..dims).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            let m = nelder_mead(|x| -sample(x), &x0, &cfg.local);
            (m.x, -m.value, m.converged)
        })
        .collect()
}

fn best(results: Vec<(Vec<f64>, f64, bool)>) -> (Vec<f64>, f64, bool) {
    results
        .into_iter()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .expect("at least one start")
}

/// Maximizes `p_violation` over two-qubit states and `n₁`.
///
/// Every pure state is locally equivalent to a Schmidt form
/// `cos a|00⟩ + sin a|11⟩`, and the local unitaries are absorbed by the
/// directions, so the search runs over `(a, θ₁, φ₁)` with multi-start
/// Nelder–Mead. Restarts run in parallel; the merge keeps the first
/// strict maximum, so results are independent of scheduling.
pub fn max_hardy_probability(cfg: &OptimizerConfig) -> HardyOptimum {
    let objective = |x: &[f64]| hardy_violation(&schmidt_from_angle(x[0]), Direction::wrapped(x[1], x[2]));
    let (x, p_max, converged) = best(multistart(cfg, 3, objective));
    let psi = schmidt_from_angle(x[0]);
    HardyOptimum {
        lambda: psi.amplitudes()[0].norm_sqr(),
        n1: Direction::wrapped(x[1], x[2]),
        psi,
        p_max,
        converged,
        starts: cfg.starts,
    }
}

/// As [`max_hardy_probability`] with the Schmidt coefficient held at `lambda`.
pub fn max_hardy_probability_at(lambda: f64, cfg: &OptimizerConfig) -> Result<HardyOptimum> {
    let psi = schmidt_state(lambda)?;
    let objective = |x: &[f64]| hardy_violation(&psi, Direction::wrapped(x[0], x[1]));
    let (x, p_max, converged) = best(multistart(cfg, 2, objective));
    Ok(HardyOptimum {
        n1: Direction::wrapped(x[0], x[1]),
        psi,
        lambda,
        p_max,
        converged,
        starts: cfg.starts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub epsilons: Vec<f64>,
    pub leak_probabilities: Vec<f64>,
    /// Least-squares slope of `ln leak` against `ln ε` over the fit window.
    pub fitted_exponent: f64,
    pub fit_window: (f64, f64),
}

/// Default window for the log-log fit.
pub const FIT_WINDOW: (f64, f64) = (1e-4, 1e-2);

/// Rotates the Bloch axis of `d` by `eps` about `axis` (assumed unit and
/// perpendicular to the axis of `d`).
pub fn rotate_direction(d: &Direction, axis: [f64; 3], eps: f64) -> Result<Direction> {
    let v = d.bloch_vector();
    let k_cross_v = cross(axis, v);
    let (s, c) = eps.sin_cos();
    let dot = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2];
    let rotated: [f64; 3] = std::array::from_fn(|i| v[i] * c + k_cross_v[i] * s + axis[i] * dot * (1.0 - c));
    Direction::from_bloch(rotated)
}

/// Rotation axis for misaligning `n₄`: `n₄ × n₂` normalized, or a fixed
/// perpendicular derived from the azimuth of `n₄` when the two are parallel.
pub fn perturbation_axis(n4: &Direction, n2: &Direction) -> [f64; 3] {
    let c = cross(n4.bloch_vector(), n2.bloch_vector());
    let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    if norm > 1e-9 {
        return [c[0] / norm, c[1] / norm, c[2] / norm];
    }
    let (sp, cp) = (n4.phi() / 2.0).sin_cos();
    [-sp, cp, 0.0]
}

/// Leak probability of the correlations after misaligning `n₄` by each `ε`.
///
/// For every `ε`, `n₄` is rotated about [`perturbation_axis`] and the largest
/// `⟨ψ|Ŝ_src(1−Ŝ_tgt)ψ⟩` over the three correlations is recorded.
pub fn sensitivity(config: &HardyConfig, epsilons: &[f64]) -> Result<SensitivityReport> {
    if let Some(e) = epsilons.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(LabError::Precondition(format!("misalignment {e} must be finite and nonnegative")));
    }
    let dirs = config.directions();
    let axis = perturbation_axis(&dirs[3], &dirs[1]);
    let mut leaks = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut perturbed = dirs;
        perturbed[3] = rotate_direction(&dirs[3], axis, eps)?;
        let mut obs = config.observables.clone();
        obs[3] = observable(perturbed[3], 2, 2)?;
        let mut leak: f64 = 0.0;
        for c in hardy_correlations(&obs) {
            leak = leak.max(probability(&c.violation_operator(), &config.psi)?);
        }
        leaks.push(leak);
    }
    let fitted_exponent = loglog_slope(epsilons, &leaks, FIT_WINDOW);
    Ok(SensitivityReport {
        epsilons: epsilons.to_vec(),
        leak_probabilities: leaks,
        fitted_exponent,
        fit_window: FIT_WINDOW,
    })
}

/// Slope of the least-squares line through `(ln x, ln y)` for points with
/// `x` inside `window` and `y > 0`. NaN with fewer than two such points.
pub fn loglog_slope(xs: &[f64], ys: &[f64], window: (f64, f64)) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x >= window.0 && **x <= window.1 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
