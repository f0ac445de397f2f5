//! Chains ("ladders") of correlations on two qubits.
//!
//! A chain is an ordered sequence of local observables on alternating parties
//! with every adjacent pair correlated. This module validates chains against a
//! state, grows the unique maximal chain through an observable of a
//! correlation set, answers which correlations the locality-and-reality rule
//! derives inside a chain, and checks closed chains (a link from the
//! `2k`-th element back to the complement of the head) numerically.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlation::{holds, partner_sequence, solution_space};
use crate::error::{LabError, Result};
use crate::random::{random_direction, random_observable, random_state, trial_rng};
use crate::spin::{observable, projector_from_direction};
use crate::{CMatrix, Correlation, LocalObservable, StateVector};

/// Projectors closer than this (Frobenius) are the same observable.
pub const OBSERVABLE_MATCH_TOL: f64 = 1e-9;

/// Party acting at step `j` of the closed-chain cascade:
/// `(3 − (−1)^j) / 2`, i.e. 2 for odd `j` and 1 for even `j`.
pub fn index_party(j: usize) -> usize {
    if j % 2 == 1 {
        2
    } else {
        1
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    observables: Vec<LocalObservable>,
}

impl Chain {
    /// Two-party observables on strictly alternating parties. A single
    /// observable is accepted (the maximal chain of an isolated observable).
    pub fn new(observables: Vec<LocalObservable>) -> Result<Self> {
        if observables.is_empty() {
            return Err(LabError::InvalidChain("empty chain".into()));
        }
        for (i, o) in observables.iter().enumerate() {
            if o.n_parties() != 2 {
                return Err(LabError::InvalidChain(format!("position {} is not a two-party observable", i + 1)));
            }
        }
        if let Some(i) = observables.windows(2).position(|w| w[0].party() == w[1].party()) {
            return Err(LabError::InvalidChain(format!(
                "positions {} and {} are on the same party",
                i + 1,
                i + 2
            )));
        }
        Ok(Self { observables })
    }

    /// The chain obtained by following partners from `head` for `len` steps.
    pub fn from_partners(psi: &StateVector, head: &LocalObservable, len: usize) -> Result<Self> {
        let seq = partner_sequence(psi, head, len).map_err(|(pos, e)| {
            LabError::InvalidChain(format!("no partner for position {pos}: {e}"))
        })?;
        Self::new(seq)
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn observables(&self) -> &[LocalObservable] {
        &self.observables
    }

    /// Observable at 1-based `position`.
    pub fn at(&self, position: usize) -> Result<&LocalObservable> {
        position
            .checked_sub(1)
            .and_then(|i| self.observables.get(i))
            .ok_or_else(|| LabError::Precondition(format!("position {position} outside 1..={}", self.len())))
    }

    pub fn head(&self) -> &LocalObservable {
        &self.observables[0]
    }

    /// Correlations between adjacent positions.
    pub fn links(&self) -> Vec<Correlation> {
        self.observables
            .windows(2)
            .map(|w| Correlation::new(w[0].clone(), w[1].clone()).expect("alternating parties"))
            .collect()
    }
}

/// Every adjacent pair of the chain is correlated in `psi`.
pub fn verify_chain(c: &Chain, psi: &StateVector, tol: f64) -> Result<bool> {
    for link in c.links() {
        if !holds(&link, psi, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For a chain that holds in `psi` with nonvanishing head, whether every
/// member also acts nontrivially on `psi` (`‖Ŝψ‖ > tol`). A valid chain
/// always passes; `false` means a numerical or construction fault.
///
/// Fails with [`LabError::Precondition`] if the chain does not hold or the
/// head annihilates `psi`.
pub fn check_nonvanishing(c: &Chain, psi: &StateVector, tol: f64) -> Result<bool> {
    if !verify_chain(c, psi, tol)? {
        return Err(LabError::Precondition("chain correlations do not hold for the state".into()));
    }
    let norm = |o: &LocalObservable| -> Result<f64> { Ok(o.matrix().apply(psi.amplitudes())?.norm()) };
    if norm(c.head())? <= tol {
        return Err(LabError::Precondition("head of the chain annihilates the state".into()));
    }
    for o in c.observables() {
        if norm(o)? <= tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Within a chain, the locality-and-reality rule derives `S_i → S_j`
/// exactly when position `i` does not come after position `j`.
pub fn derivable_within_chain(c: &Chain, i: usize, j: usize) -> Result<bool> {
    c.at(i)?;
    c.at(j)?;
    Ok(i <= j)
}

/// Finite set of observables with directed correlations between them, stored
/// by index.
#[derive(Debug, Clone, Default)]
pub struct CorrelationSet {
    observables: Vec<LocalObservable>,
    correlations: Vec<(usize, usize)>,
}

impl CorrelationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observables(&self) -> &[LocalObservable] {
        &self.observables
    }

    /// `(source, target)` index pairs.
    pub fn correlation_indices(&self) -> &[(usize, usize)] {
        &self.correlations
    }

    pub fn len(&self) -> usize {
        self.correlations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correlations.is_empty()
    }

    pub fn index_of(&self, o: &LocalObservable) -> Option<usize> {
        self.observables.iter().position(|x| x.approx_eq(o, OBSERVABLE_MATCH_TOL))
    }

    /// Index of `o`, inserting it if no matching observable is present.
    pub fn add_observable(&mut self, o: LocalObservable) -> usize {
        match self.index_of(&o) {
            Some(i) => i,
            None => {
                self.observables.push(o);
                self.observables.len() - 1
            }
        }
    }

    pub fn add_correlation_indices(&mut self, source: usize, target: usize) -> Result<()> {
        let n = self.observables.len();
        if source >= n || target >= n {
            return Err(LabError::UnknownObservable(format!("index {} of {n}", source.max(target))));
        }
        if self.observables[source].party() == self.observables[target].party() {
            return Err(LabError::SameParty(self.observables[source].party()));
        }
        if !self.correlations.contains(&(source, target)) {
            self.correlations.push((source, target));
        }
        Ok(())
    }

    pub fn add_correlation(&mut self, c: &Correlation) -> Result<()> {
        let s = self.add_observable(c.source().clone());
        let t = self.add_observable(c.target().clone());
        self.add_correlation_indices(s, t)
    }

    pub fn add_chain(&mut self, chain: &Chain) -> Result<()> {
        for o in chain.observables() {
            self.add_observable(o.clone());
        }
        for link in chain.links() {
            self.add_correlation(&link)?;
        }
        Ok(())
    }

    pub fn correlation(&self, i: usize) -> Correlation {
        let (s, t) = self.correlations[i];
        Correlation::new(self.observables[s].clone(), self.observables[t].clone()).expect("validated on insert")
    }

    pub fn correlations(&self) -> Vec<Correlation> {
        (0..self.correlations.len()).map(|i| self.correlation(i)).collect()
    }

    /// Index of the complement `1 − S` of observable `i`, if present.
    pub fn complement_index(&self, i: usize) -> Option<usize> {
        let o = &self.observables[i];
        self.observables
            .iter()
            .position(|x| x.is_complement_of(o, OBSERVABLE_MATCH_TOL))
    }

    /// Adds `(1 − T) → (1 − S)` for every `S → T`, inserting complement
    /// observables as needed.
    pub fn dual_closed(&self) -> Self {
        let mut out = self.clone();
        for (s, t) in self.correlations.clone() {
            let ns = out.add_observable(self.observables[t].complement());
            let nt = out.add_observable(self.observables[s].complement());
            out.add_correlation_indices(ns, nt).expect("parties differ");
        }
        out
    }

    /// `S → T` present iff `(1 − T) → (1 − S)` present.
    pub fn is_dual_closed(&self) -> bool {
        self.correlations.iter().all(|&(s, t)| {
            match (self.complement_index(t), self.complement_index(s)) {
                (Some(ct), Some(cs)) => self.correlations.contains(&(ct, cs)),
                _ => false,
            }
        })
    }

    fn neighbours(&self, x: usize, forward: bool) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .correlations
            .iter()
            .filter_map(|&(s, t)| match forward {
                true if s == x => Some(t),
                false if t == x => Some(s),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// The unique maximal chain of `b` through observable `start`, grown forward
/// along correlations out of the last element and backward along
/// correlations into the first.
///
/// Requires every correlation of `b` to hold for `psi` and `start` not to
/// annihilate `psi`; two distinct partners of one observable are reported as
/// [`LabError::AmbiguousExtension`].
pub fn maximal_chain(b: &CorrelationSet, start: usize, psi: &StateVector, tol: f64) -> Result<Chain> {
    let first = b
        .observables
        .get(start)
        .ok_or_else(|| LabError::UnknownObservable(format!("index {start}")))?;
    for (i, c) in b.correlations().iter().enumerate() {
        if !holds(c, psi, tol)? {
            return Err(LabError::Precondition(format!("correlation {i} does not hold for the state")));
        }
    }
    if first.matrix().apply(psi.amplitudes())?.norm() <= tol {
        return Err(LabError::Precondition("start observable annihilates the state".into()));
    }

    let unique = |x: usize, forward: bool| -> Result<Option<usize>> {
        let n = b.neighbours(x, forward);
        match n.len() {
            0 => Ok(None),
            1 => Ok(Some(n[0])),
            _ => Err(LabError::AmbiguousExtension(format!(
                "observable {x} ({} partners {:?})",
                if forward { "forward" } else { "backward" },
                n
            ))),
        }
    };

    let mut order: VecDeque<usize> = VecDeque::from([start]);
    while let Some(next) = unique(*order.back().expect("nonempty"), true)? {
        if order.contains(&next) {
            break;
        }
        order.push_back(next);
    }
    while let Some(prev) = unique(*order.front().expect("nonempty"), false)? {
        if order.contains(&prev) {
            break;
        }
        order.push_front(prev);
    }
    Chain::new(order.into_iter().map(|i| b.observables[i].clone()).collect())
}

/// The closing link `S₂(n_{2k}) → 1 − S₁(n₁)`.
pub fn closure_correlation(c: &Chain, k: usize) -> Result<Correlation> {
    require_closable(c, k)?;
    Correlation::new(c.at(2 * k)?.clone(), c.head().complement())
}

fn require_closable(c: &Chain, k: usize) -> Result<()> {
    if k == 0 {
        return Err(LabError::Precondition("closure index k must be at least 1".into()));
    }
    if c.head().party() != 1 {
        return Err(LabError::Precondition("closed chains start on party 1".into()));
    }
    if c.len() < 2 * k + 1 {
        return Err(LabError::Precondition(format!(
            "chain of length {} is too short for k = {k} (needs {})",
            c.len(),
            2 * k + 1
        )));
    }
    Ok(())
}

/// One forced identity `P_left = 1 − P_right` of the closed-chain cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeStep {
    pub j: usize,
    /// 1-based chain positions `1 + j` and `2k + 1 − j`.
    pub left: usize,
    pub right: usize,
    pub party: usize,
    /// `‖P_left − (1 − P_right)‖_F` for the chain's actual projectors.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub k: usize,
    /// Dimension of the space of states satisfying the links and the closure.
    pub solution_dim: usize,
    /// `max ‖Ŝ₁(n₁)ψ‖` over the orthonormal basis of that space (0 if empty).
    pub max_head_norm: f64,
    pub head_annihilated: bool,
    /// Identities that a nonvanishing head would force, `j = 1..=2k`.
    pub cascade: Vec<CascadeStep>,
    /// At `j = k` the cascade demands `P = 1 − P` for the projector at
    /// position `k + 1`; `‖2P − 1‖_F`, which is `√2` for any rank-1 `P`.
    pub contradiction_residual: f64,
}

/// Checks a closed chain: every state satisfying the chain links plus
/// `S₂(n_{2k}) → 1 − S₁(n₁)` must be annihilated by the head.
pub fn verify_closure(c: &Chain, k: usize, tol: f64) -> Result<ClosureReport> {
    require_closable(c, k)?;
    let mut rs = c.links();
    rs.push(closure_correlation(c, k)?);
    let basis = solution_space(&rs, 2, tol)?;
    let head = c.head().matrix();
    let mut max_head_norm: f64 = 0.0;
    for v in &basis {
        max_head_norm = max_head_norm.max(head.apply(v)?.norm());
    }

    let id = CMatrix::identity(2);
    let projector = |pos: usize| -> Result<&CMatrix> { Ok(c.at(pos)?.projector().matrix()) };
    let mut cascade = Vec::with_capacity(2 * k);
    for j in 1..=2 * k {
        let (left, right) = (1 + j, 2 * k + 1 - j);
        let forced = &id - projector(right)?;
        cascade.push(CascadeStep {
            j,
            left,
            right,
            party: index_party(j),
            residual: (projector(left)? - &forced).frobenius_norm(),
        });
    }
    let middle = projector(k + 1)?;
    let contradiction_residual = (&middle.scale(crate::Complex64::new(2.0, 0.0)) - &id).frobenius_norm();

    Ok(ClosureReport {
        k,
        solution_dim: basis.len(),
        max_head_norm,
        head_annihilated: max_head_norm <= tol,
        cascade,
        contradiction_residual,
    })
}

/// What imposing the closure on a concrete state does to the last odd link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForcedComplement {
    /// `‖Ŝ₁(n₁)ψ‖`.
    pub head_norm: f64,
    /// `‖A − P_{2k+1}‖_F` where `A` is the partner of `S₂(n_{2k})` in `ψ`;
    /// zero when the link `2k → 2k+1` holds, `None` when `S₂(n_{2k})ψ = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner_vs_next: Option<f64>,
    /// `‖P_{2k+1} − (1 − P₁)‖_F`: the closure needs this to vanish.
    pub next_vs_complement_head: f64,
    pub closure_holds: bool,
    /// Head nonvanishing, so the closure would force `P₁ = 1 − P_{2k+1}`,
    /// and the state refuses it.
    pub contradiction: bool,
}

/// Follows the first step of the closed-chain argument on a concrete state:
/// with a nonvanishing head, partner uniqueness turns the closure into the
/// identity `P₁ = 1 − P_{2k+1}`.
pub fn closure_forces_complement(c: &Chain, psi: &StateVector, k: usize, tol: f64) -> Result<ForcedComplement> {
    require_closable(c, k)?;
    let head_norm = c.head().matrix().apply(psi.amplitudes())?.norm();
    let next = c.at(2 * k + 1)?.projector();
    let partner_vs_next = match crate::correlation::partner(psi, c.at(2 * k)?) {
        Ok(a) => Some(a.distance(next)),
        Err(LabError::SourceAnnihilatesState) => None,
        Err(e) => return Err(e),
    };
    let next_vs_complement_head = next.distance(&c.head().projector().complement());
    let closure_holds = holds(&closure_correlation(c, k)?, psi, tol)?;
    Ok(ForcedComplement {
        head_norm,
        partner_vs_next,
        next_vs_complement_head,
        closure_holds,
        contradiction: head_norm > tol && !closure_holds && next_vs_complement_head > tol,
    })
}

/// How random closed chains are drawn for sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainFamily {
    /// Unitarily random state and head; the rest follows by partners.
    Generic,
    /// Product state `u₁⊥ ⊗ w` for which the closure genuinely holds:
    /// positions `u₁, x, u₁⊥, w, u₁⊥, w, …` with `x` random.
    AdmissibleProduct,
}

/// A random chain of length `2k + 1` with its generating state.
pub fn random_closed_chain<R: Rng + ?Sized>(rng: &mut R, k: usize, family: ChainFamily) -> (StateVector, Chain) {
    let len = 2 * k + 1;
    match family {
        ChainFamily::Generic => loop {
            let psi = random_state(rng, 2);
            let head = random_observable(rng, 1, 2);
            if let Ok(chain) = Chain::from_partners(&psi, &head, len) {
                return (psi, chain);
            }
        },
        ChainFamily::AdmissibleProduct => {
            let u = random_direction(rng);
            let w = random_direction(rng);
            let x = random_direction(rng);
            let u_perp = u.antipode();
            let ket = |d| projector_from_direction(&d).spin_ket().expect("rank-1");
            let psi = StateVector::normalize(ket(u_perp).tensor(&ket(w))).expect("unit product");
            let dirs: Vec<_> = (1..=len)
                .map(|pos| match pos {
                    1 => u,
                    2 => x,
                    p if p % 2 == 1 => u_perp,
                    _ => w,
                })
                .collect();
            let obs = dirs
                .iter()
                .enumerate()
                .map(|(i, d)| observable(*d, i % 2 + 1, 2).expect("two parties"))
                .collect();
            (psi, Chain::new(obs).expect("alternating"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureSweep {
    pub k: usize,
    pub trials: usize,
    pub family: ChainFamily,
    /// Largest `max_head_norm` over all trials.
    pub max_head_norm: f64,
    pub annihilated_trials: usize,
    /// `counts[d]` trials had a solution space of dimension `d`.
    pub solution_dim_counts: [usize; 5],
    /// Trials in which the generating state itself satisfies the closure.
    pub generator_admissible: usize,
}

impl ClosureSweep {
    pub fn all_annihilated(&self) -> bool {
        self.annihilated_trials == self.trials
    }
}

/// Runs [`verify_closure`] on `trials` random chains; trial `t` draws from
/// stream `(k << 32) | t` of `seed`, so results do not depend on scheduling.
pub fn closure_sweep(k: usize, trials: usize, seed: u64, tol: f64, family: ChainFamily) -> Result<ClosureSweep> {
    let reports: Vec<(ClosureReport, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, ((k as u64) << 32) | t as u64);
            let (psi, chain) = random_closed_chain(&mut rng, k, family);
            let report = verify_closure(&chain, k, tol)?;
            let admissible = holds(&closure_correlation(&chain, k)?, &psi, tol)?;
            Ok((report, admissible))
        })
        .collect::<Result<_>>()?;
    let mut sweep = ClosureSweep {
        k,
        trials,
        family,
        max_head_norm: 0.0,
        annihilated_trials: 0,
        solution_dim_counts: [0; 5],
        generator_admissible: 0,
    };
    for (r, admissible) in reports {
        sweep.max_head_norm = sweep.max_head_norm.max(r.max_head_norm);
        sweep.annihilated_trials += usize::from(r.head_annihilated);
        sweep.solution_dim_counts[r.solution_dim.min(4)] += 1;
        sweep.generator_admissible += usize::from(admissible);
    }
    Ok(sweep)
}
