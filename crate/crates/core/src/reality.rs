//! Elements of reality as a propositional inference system.
//!
//! Every observable of a constraint system carries a hidden value in
//! `{0, 1}`; the value of `1 − S` is the negation of the value of `S`, so a
//! complement pair shares one variable. Two kinds of rule act on the values:
//!
//! - a correlation `S → T` fires when `S` has value 1 and forces `T` to 1;
//! - an exclusion forbids one joint outcome of several observables; once all
//!   but one of them agree with the forbidden tuple the last is forced to
//!   the other value.
//!
//! [`propagate`] runs these to a fixpoint, [`derive_contradiction`] refutes
//! both values of one observable with a replayable trace, and [`lhv_search`]
//! enumerates every deterministic assignment.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::chains::{CorrelationSet, OBSERVABLE_MATCH_TOL};
use crate::correlation::probability;
use crate::error::{LabError, Result};
use crate::spin::observable;
use crate::{CMatrix, CVector, Direction, LocalObservable, StateVector};

/// Largest observable count for exhaustive assignment search.
pub const MAX_LHV_OBSERVABLES: usize = 24;

/// Quantum probability below which an outcome tuple counts as excluded.
pub const EXCLUSION_TOL: f64 = 1e-12;

/// Value `value` of base observable `observable`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Literal {
    pub observable: usize,
    pub value: bool,
}

impl Literal {
    pub fn new(observable: usize, value: bool) -> Self {
        Self { observable, value }
    }

    pub fn negated(self) -> Self {
        Self::new(self.observable, !self.value)
    }
}

/// A forbidden joint outcome: `observables[i]` taking `forbidden[i]` for all
/// `i` has zero probability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exclusion {
    pub observables: Vec<usize>,
    pub forbidden: Vec<bool>,
}

impl Exclusion {
    pub fn literals(&self) -> Vec<Literal> {
        self.observables
            .iter()
            .zip(&self.forbidden)
            .map(|(&o, &v)| Literal::new(o, v))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    Implication { premise: Literal, conclusion: Literal },
    Exclusion { forbidden: Vec<Literal> },
}

impl Rule {
    fn satisfied_by(&self, values: &[bool]) -> bool {
        match self {
            Rule::Implication { premise, conclusion } => {
                values[premise.observable] != premise.value || values[conclusion.observable] == conclusion.value
            }
            Rule::Exclusion { forbidden } => forbidden.iter().any(|l| values[l.observable] != l.value),
        }
    }

    fn observables(&self) -> Vec<usize> {
        match self {
            Rule::Implication { premise, conclusion } => vec![premise.observable, conclusion.observable],
            Rule::Exclusion { forbidden } => forbidden.iter().map(|l| l.observable).collect(),
        }
    }
}

/// Base observables (one per complement pair) and the rules over them.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    observables: Vec<LocalObservable>,
    rules: Vec<Rule>,
}

impl ConstraintSystem {
    /// Every correlation `S → T` of a dual-closed set becomes the rule
    /// "S = 1 forces T = 1"; complements map onto their base observable.
    pub fn from_correlations(set: &CorrelationSet) -> Result<Self> {
        if !set.is_dual_closed() {
            return Err(LabError::NotDualClosed);
        }
        let mut observables: Vec<LocalObservable> = Vec::new();
        // (base index, negated) for each observable of the set
        let mut map = Vec::with_capacity(set.observables().len());
        for o in set.observables() {
            let hit = observables.iter().enumerate().find_map(|(b, base)| {
                if base.approx_eq(o, OBSERVABLE_MATCH_TOL) {
                    Some((b, false))
                } else if base.is_complement_of(o, OBSERVABLE_MATCH_TOL) {
                    Some((b, true))
                } else {
                    None
                }
            });
            map.push(hit.unwrap_or_else(|| {
                observables.push(o.clone());
                (observables.len() - 1, false)
            }));
        }
        let lit = |i: usize| {
            let (b, neg) = map[i];
            Literal::new(b, !neg)
        };
        let mut rules = Vec::new();
        for &(s, t) in set.correlation_indices() {
            let r = Rule::Implication { premise: lit(s), conclusion: lit(t) };
            if !rules.contains(&r) {
                rules.push(r);
            }
        }
        Ok(Self { observables, rules })
    }

    pub fn from_exclusions(observables: Vec<LocalObservable>, exclusions: &[Exclusion]) -> Result<Self> {
        let n = observables.len();
        let mut rules = Vec::with_capacity(exclusions.len());
        for e in exclusions {
            if e.observables.is_empty() || e.observables.len() != e.forbidden.len() {
                return Err(LabError::Precondition("exclusion needs matching nonempty observable and outcome lists".into()));
            }
            if let Some(&bad) = e.observables.iter().find(|&&o| o >= n) {
                return Err(LabError::UnknownObservable(format!("index {bad} of {n}")));
            }
            rules.push(Rule::Exclusion { forbidden: e.literals() });
        }
        Ok(Self { observables, rules })
    }

    pub fn observables(&self) -> &[LocalObservable] {
        &self.observables
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// The literal "`o` has value 1", if `o` or its complement is present.
    pub fn literal_of(&self, o: &LocalObservable) -> Option<Literal> {
        self.observables.iter().enumerate().find_map(|(b, base)| {
            if base.approx_eq(o, OBSERVABLE_MATCH_TOL) {
                Some(Literal::new(b, true))
            } else if base.is_complement_of(o, OBSERVABLE_MATCH_TOL) {
                Some(Literal::new(b, false))
            } else {
                None
            }
        })
    }

    /// Same system with the rules in another order.
    pub fn with_rule_order(&self, order: &[usize]) -> Self {
        Self {
            observables: self.observables.clone(),
            rules: order.iter().map(|&i| self.rules[i].clone()).collect(),
        }
    }

    fn involved(&self) -> Vec<bool> {
        let mut used = vec![false; self.observables.len()];
        for r in &self.rules {
            for o in r.observables() {
                used[o] = true;
            }
        }
        used
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    Seed { literal: Literal },
    /// Case split: the observable has some value; this branch takes `literal`.
    Assume { literal: Literal },
    Implied { rule: usize, premises: Vec<Literal>, conclusion: Literal },
}

impl Step {
    pub fn literal(&self) -> Literal {
        match self {
            Step::Seed { literal } | Step::Assume { literal } => *literal,
            Step::Implied { conclusion, .. } => *conclusion,
        }
    }
}

/// Values assigned so far with the step that produced each.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RealityLedger {
    values: BTreeMap<usize, bool>,
    provenance: BTreeMap<usize, usize>,
    steps: Vec<Step>,
}

impl RealityLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn seeded(literal: Literal) -> Self {
        let mut l = Self::new();
        l.record(Step::Seed { literal });
        l
    }

    pub fn value(&self, observable: usize) -> Option<bool> {
        self.values.get(&observable).copied()
    }

    pub fn values(&self) -> &BTreeMap<usize, bool> {
        &self.values
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Step that assigned `observable`.
    pub fn provenance(&self, observable: usize) -> Option<&Step> {
        self.provenance.get(&observable).map(|&i| &self.steps[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn holds(&self, l: Literal) -> bool {
        self.value(l.observable) == Some(l.value)
    }

    /// Records an assumption; `None` if it conflicts with an existing value.
    pub fn assume(&self, literal: Literal) -> Option<Self> {
        match self.value(literal.observable) {
            Some(v) if v != literal.value => None,
            Some(_) => Some(self.clone()),
            None => {
                let mut l = self.clone();
                l.record(Step::Assume { literal });
                Some(l)
            }
        }
    }

    fn record(&mut self, step: Step) {
        let lit = step.literal();
        debug_assert!(!self.values.contains_key(&lit.observable));
        self.values.insert(lit.observable, lit.value);
        self.provenance.insert(lit.observable, self.steps.len());
        self.steps.push(step);
    }
}

/// A rule application that would give `observable` both values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Clash {
    pub observable: usize,
    pub rule: usize,
    pub premises: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Propagation {
    Consistent(RealityLedger),
    Contradiction { ledger: RealityLedger, clash: Clash },
}

enum Fired {
    Nothing,
    Assign(Vec<Literal>, Literal),
    Clash(Clash),
}

fn fire(rule: &Rule, index: usize, ledger: &RealityLedger) -> Fired {
    match rule {
        Rule::Implication { premise, conclusion } => {
            if !ledger.holds(*premise) {
                return Fired::Nothing;
            }
            match ledger.value(conclusion.observable) {
                None => Fired::Assign(vec![*premise], *conclusion),
                Some(v) if v == conclusion.value => Fired::Nothing,
                Some(_) => Fired::Clash(Clash {
                    observable: conclusion.observable,
                    rule: index,
                    premises: vec![*premise, conclusion.negated()],
                }),
            }
        }
        Rule::Exclusion { forbidden } => {
            let mut open = None;
            for (i, l) in forbidden.iter().enumerate() {
                match ledger.value(l.observable) {
                    Some(v) if v != l.value => return Fired::Nothing,
                    Some(_) => {}
                    None if open.is_some() => return Fired::Nothing,
                    None => open = Some(i),
                }
            }
            match open {
                Some(i) => {
                    let premises = forbidden.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, l)| *l).collect();
                    Fired::Assign(premises, forbidden[i].negated())
                }
                None => Fired::Clash(Clash {
                    observable: forbidden.last().expect("nonempty").observable,
                    rule: index,
                    premises: forbidden.clone(),
                }),
            }
        }
    }
}

/// Applies the rules of `system` until nothing changes. At most one new
/// value per observable, so this takes at most `|O| + 1` sweeps.
pub fn propagate(ledger: RealityLedger, system: &ConstraintSystem) -> Propagation {
    let mut ledger = ledger;
    loop {
        let mut changed = false;
        for (i, rule) in system.rules.iter().enumerate() {
            match fire(rule, i, &ledger) {
                Fired::Nothing => {}
                Fired::Assign(premises, conclusion) => {
                    ledger.record(Step::Implied { rule: i, premises, conclusion });
                    changed = true;
                }
                Fired::Clash(clash) => return Propagation::Contradiction { ledger, clash },
            }
        }
        if !changed {
            return Propagation::Consistent(ledger);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DerivationEnd {
    Clash(Clash),
    /// Both values of `observable` lead to a clash.
    Split { observable: usize, branches: Box<[Derivation; 2]> },
}

/// Refutation tree: the steps of this node, then a clash or a case split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Derivation {
    pub steps: Vec<Step>,
    pub end: DerivationEnd,
}

impl Derivation {
    /// Replays the trace from `ledger`, checking every step against the rules.
    pub fn replay(&self, system: &ConstraintSystem, ledger: &RealityLedger) -> Result<()> {
        let bad = |m: String| Err(LabError::InvalidTrace(m));
        let mut ledger = ledger.clone();
        for step in &self.steps {
            let lit = step.literal();
            if ledger.value(lit.observable).is_some() {
                return bad(format!("observable {} assigned twice", lit.observable));
            }
            if let Step::Implied { rule, premises, conclusion } = step {
                match fire_checked(system, *rule, &ledger)? {
                    Fired::Assign(p, c) if &p == premises && c == *conclusion => {}
                    _ => return bad(format!("rule {rule} does not yield {conclusion:?}")),
                }
            }
            ledger.record(step.clone());
        }
        match &self.end {
            DerivationEnd::Clash(clash) => match fire_checked(system, clash.rule, &ledger)? {
                Fired::Clash(c) if &c == clash => Ok(()),
                _ => bad(format!("rule {} does not clash", clash.rule)),
            },
            DerivationEnd::Split { observable, branches } => {
                if ledger.value(*observable).is_some() {
                    return bad(format!("split on assigned observable {observable}"));
                }
                for (branch, value) in branches.iter().zip([false, true]) {
                    match branch.steps.first() {
                        Some(Step::Assume { literal }) if *literal == Literal::new(*observable, value) => {}
                        _ => return bad(format!("branch for {observable} = {value} does not start with it")),
                    }
                    branch.replay(system, &ledger)?;
                }
                Ok(())
            }
        }
    }

    /// Number of rule applications in the whole tree.
    pub fn size(&self) -> usize {
        self.steps.len()
            + match &self.end {
                DerivationEnd::Clash(_) => 1,
                DerivationEnd::Split { branches, .. } => branches.iter().map(Derivation::size).sum(),
            }
    }
}

fn fire_checked(system: &ConstraintSystem, rule: usize, ledger: &RealityLedger) -> Result<Fired> {
    let r = system
        .rules
        .get(rule)
        .ok_or_else(|| LabError::InvalidTrace(format!("no rule {rule}")))?;
    Ok(fire(r, rule, ledger))
}

/// Refutes `ledger` by propagation and, where propagation stalls, by case
/// splits over the remaining observables (each has some value). `None` means
/// a consistent total assignment exists.
fn refute(system: &ConstraintSystem, ledger: RealityLedger, involved: &[bool]) -> Option<Derivation> {
    let start = ledger.steps.len();
    match propagate(ledger, system) {
        Propagation::Contradiction { ledger, clash } => Some(Derivation {
            steps: ledger.steps[start..].to_vec(),
            end: DerivationEnd::Clash(clash),
        }),
        Propagation::Consistent(ledger) => {
            let open = (0..involved.len()).find(|&o| involved[o] && ledger.value(o).is_none())?;
            let mut branches = Vec::with_capacity(2);
            for value in [false, true] {
                let literal = Literal::new(open, value);
                let assumed = ledger.assume(literal).expect("open observable");
                let mut branch = refute(system, assumed, involved)?;
                branch.steps.insert(0, Step::Assume { literal });
                branches.push(branch);
            }
            let branches: [Derivation; 2] = branches.try_into().expect("two branches");
            Some(Derivation {
                steps: ledger.steps[start..].to_vec(),
                end: DerivationEnd::Split { observable: open, branches: Box::new(branches) },
            })
        }
    }
}

/// Refutation of `observable = value`; its trace starts with the seed step.
pub fn refute_seed(system: &ConstraintSystem, observable: usize, value: bool) -> Option<Derivation> {
    let seed = Literal::new(observable, value);
    let involved = system.involved();
    let ledger = RealityLedger::seeded(seed);
    let mut d = refute(system, ledger, &involved)?;
    d.steps.insert(0, Step::Seed { literal: seed });
    Some(d)
}

/// A correlation derived by refutation: `source = 1` forces `target = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DerivedCorrelation {
    pub source: Literal,
    pub target: Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Contradiction {
    pub observable: usize,
    /// `S → 1 − S` then `1 − S → S`.
    pub derived: [DerivedCorrelation; 2],
    /// Refutations of the seeds `S = 1` and `S = 0`.
    pub refutations: [Derivation; 2],
}

impl Contradiction {
    pub fn replay(&self, system: &ConstraintSystem) -> Result<()> {
        for (d, value) in self.refutations.iter().zip([true, false]) {
            let seed = Literal::new(self.observable, value);
            match d.steps.first() {
                Some(Step::Seed { literal }) if *literal == seed => {}
                _ => return Err(LabError::InvalidTrace(format!("refutation does not start from {seed:?}"))),
            }
            let rest = Derivation { steps: d.steps[1..].to_vec(), end: d.end.clone() };
            rest.replay(system, &RealityLedger::seeded(seed))?;
        }
        Ok(())
    }
}

/// Both values of `observable` are refuted, or `None`.
pub fn derive_contradiction(system: &ConstraintSystem, observable: usize) -> Option<Contradiction> {
    let one = refute_seed(system, observable, true)?;
    let zero = refute_seed(system, observable, false)?;
    let s = Literal::new(observable, true);
    Some(Contradiction {
        observable,
        derived: [
            DerivedCorrelation { source: s, target: s.negated() },
            DerivedCorrelation { source: s.negated(), target: s },
        ],
        refutations: [one, zero],
    })
}

/// Every assignment of values to the base observables that violates no
/// rule, as bit masks (bit `i` is the value of observable `i`), ascending.
pub fn lhv_search(system: &ConstraintSystem) -> Result<Vec<u32>> {
    let n = system.observables.len();
    if n > MAX_LHV_OBSERVABLES {
        return Err(LabError::SearchTooLarge(n, MAX_LHV_OBSERVABLES));
    }
    let models = (0..1u32 << n)
        .into_par_iter()
        .filter(|&mask| {
            let values: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            system.rules.iter().all(|r| r.satisfied_by(&values))
        })
        .collect();
    Ok(models)
}

/// Equal superposition of all-zeros and all-ones on `n` qubits.
pub fn ghz_state(n_parties: usize) -> Result<StateVector> {
    if n_parties < 2 {
        return Err(LabError::PartyCount { expected: 2, got: n_parties });
    }
    let dim = 1usize << n_parties;
    let mut amps = vec![0.0; dim];
    amps[0] = std::f64::consts::FRAC_1_SQRT_2;
    amps[dim - 1] = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::new(CVector::from_real(&amps))
}

/// Quantum probability of the outcome tuple that `e` forbids.
pub fn exclusion_probability(psi: &StateVector, observables: &[LocalObservable], e: &Exclusion) -> Result<f64> {
    let mut joint = CMatrix::identity(psi.dim());
    for (&i, &v) in e.observables.iter().zip(&e.forbidden) {
        let o = observables
            .get(i)
            .ok_or_else(|| LabError::UnknownObservable(format!("index {i} of {}", observables.len())))?;
        let factor = if v { o.clone() } else { o.complement() };
        joint = joint.matmul(factor.matrix())?;
    }
    probability(&joint, psi)
}

/// All outcome tuples of joint settings (one observable per party, drawn
/// from `per_party[p]`) with quantum probability at most `tol`. Observable
/// indices refer to `per_party` flattened party by party.
pub fn zero_probability_exclusions(
    psi: &StateVector,
    per_party: &[Vec<LocalObservable>],
    tol: f64,
) -> Result<Vec<Exclusion>> {
    let n = psi.n_parties();
    if per_party.len() != n {
        return Err(LabError::PartyCount { expected: n, got: per_party.len() });
    }
    for (p, obs) in per_party.iter().enumerate() {
        if obs.iter().any(|o| o.party() != p + 1 || o.n_parties() != n) {
            return Err(LabError::Precondition(format!("observables listed for party {} act elsewhere", p + 1)));
        }
    }
    let offsets: Vec<usize> = per_party
        .iter()
        .scan(0, |acc, v| {
            let o = *acc;
            *acc += v.len();
            Some(o)
        })
        .collect();
    let flat = per_party.concat();
    let settings: Vec<Vec<usize>> = per_party.iter().fold(vec![vec![]], |acc, obs| {
        acc.into_iter()
            .flat_map(|s| {
                (0..obs.len()).map(move |i| {
                    let mut t = s.clone();
                    t.push(i);
                    t
                })
            })
            .collect()
    });
    let mut out = Vec::new();
    for setting in settings {
        for outcome in 0..1u32 << n {
            let forbidden: Vec<bool> = (0..n).map(|p| outcome >> (n - 1 - p) & 1 == 1).collect();
            let e = Exclusion {
                observables: setting.iter().enumerate().map(|(p, &i)| offsets[p] + i).collect(),
                forbidden,
            };
            if exclusion_probability(psi, &flat, &e)? <= tol {
                out.push(e);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct GhszSetup {
    pub state: StateVector,
    /// Party-major: x then y for each party; index 0 is the first party's x.
    pub observables: Vec<LocalObservable>,
    pub exclusions: Vec<Exclusion>,
}

impl GhszSetup {
    pub fn system(&self) -> ConstraintSystem {
        ConstraintSystem::from_exclusions(self.observables.clone(), &self.exclusions).expect("indices in range")
    }
}

/// Spin-up projectors along the x and y axes of one party.
pub fn xy_observables(party: usize, n_parties: usize) -> Result<Vec<LocalObservable>> {
    let x = Direction::from_bloch([1.0, 0.0, 0.0])?;
    let y = Direction::from_bloch([0.0, 1.0, 0.0])?;
    Ok(vec![observable(x, party, n_parties)?, observable(y, party, n_parties)?])
}

/// Four-qubit GHZ state with every zero-probability outcome of x/y
/// measurements recorded as an exclusion.
pub fn ghsz_correlations() -> Result<GhszSetup> {
    const N: usize = 4;
    let state = ghz_state(N)?;
    let per_party = (1..=N).map(|p| xy_observables(p, N)).collect::<Result<Vec<_>>>()?;
    let exclusions = zero_probability_exclusions(&state, &per_party, EXCLUSION_TOL)?;
    Ok(GhszSetup { state, observables: per_party.concat(), exclusions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::Chain;
    use crate::hardy::{build_hardy, schmidt_state};
    use crate::random::trial_rng;
    use crate::tensor::kernel_basis;
    use crate::Complex64;
    use rand::seq::SliceRandom;

    fn hardy_system() -> (ConstraintSystem, [LocalObservable; 4]) {
        let psi = schmidt_state(0.8).unwrap();
        let cfg = build_hardy(&psi, Direction::new(1.1, 0.7).unwrap()).unwrap();
        let mut set = CorrelationSet::new();
        for c in cfg.correlations() {
            set.add_correlation(&c).unwrap();
        }
        (ConstraintSystem::from_correlations(&set.dual_closed()).unwrap(), cfg.observables().clone())
    }

    fn obs(theta: f64, phi: f64, party: usize) -> LocalObservable {
        observable(Direction::new(theta, phi).unwrap(), party, 2).unwrap()
    }

    #[test]
    fn requires_dual_closure() {
        let mut set = CorrelationSet::new();
        set.add_correlation(&crate::Correlation::new(obs(0.3, 0.0, 1), obs(1.0, 0.0, 2)).unwrap()).unwrap();
        assert!(matches!(ConstraintSystem::from_correlations(&set), Err(LabError::NotDualClosed)));
        let sys = ConstraintSystem::from_correlations(&set.dual_closed()).unwrap();
        assert_eq!(sys.observables().len(), 2);
        assert_eq!(sys.rules().len(), 2);
    }

    #[test]
    fn hardy_seed_reaches_the_far_end() {
        let (sys, o) = hardy_system();
        let head = sys.literal_of(&o[0]).unwrap();
        let Propagation::Consistent(ledger) = propagate(RealityLedger::seeded(head), &sys) else {
            panic!("hardy correlations are consistent")
        };
        let mut got: Vec<Literal> = ledger.values().iter().map(|(&o, &v)| Literal::new(o, v)).collect();
        got.sort();
        let mut want: Vec<Literal> = o.iter().map(|x| sys.literal_of(x).unwrap()).collect();
        want.sort();
        assert_eq!(got, want);
        let far = sys.literal_of(&o[3]).unwrap();
        assert!(matches!(ledger.provenance(far.observable), Some(Step::Implied { .. })));
    }

    #[test]
    fn empty_set_leaves_ledger_alone() {
        let sys = ConstraintSystem::from_correlations(&CorrelationSet::new()).unwrap();
        let seeded = RealityLedger::seeded(Literal::new(0, true));
        assert_eq!(propagate(seeded.clone(), &sys), Propagation::Consistent(seeded));
    }

    #[test]
    fn conflicting_targets_clash() {
        let (s, t) = (obs(0.3, 0.0, 1), obs(1.0, 0.5, 2));
        let mut set = CorrelationSet::new();
        set.add_correlation(&crate::Correlation::new(s.clone(), t.clone()).unwrap()).unwrap();
        set.add_correlation(&crate::Correlation::new(s.clone(), t.complement()).unwrap()).unwrap();
        let sys = ConstraintSystem::from_correlations(&set.dual_closed()).unwrap();
        let seed = sys.literal_of(&s).unwrap();
        match propagate(RealityLedger::seeded(seed), &sys) {
            Propagation::Contradiction { clash, .. } => {
                assert_eq!(clash.observable, sys.literal_of(&t).unwrap().observable)
            }
            other => panic!("{other:?}"),
        }
        // S = 0 is consistent, so no two-sided contradiction
        assert!(refute_seed(&sys, seed.observable, true).is_some());
        assert!(derive_contradiction(&sys, seed.observable).is_none());
    }

    #[test]
    fn single_correlation_has_no_contradiction() {
        let mut set = CorrelationSet::new();
        set.add_correlation(&crate::Correlation::new(obs(0.3, 0.0, 1), obs(1.0, 0.5, 2)).unwrap()).unwrap();
        let sys = ConstraintSystem::from_correlations(&set.dual_closed()).unwrap();
        assert!(derive_contradiction(&sys, 0).is_none());
        assert!(derive_contradiction(&sys, 1).is_none());
    }

    #[test]
    fn hardy_has_no_contradiction() {
        let (sys, o) = hardy_system();
        let head = sys.literal_of(&o[0]).unwrap();
        assert!(derive_contradiction(&sys, head.observable).is_none());
    }

    #[test]
    fn closed_two_qubit_chain_refutes_one_seed_only() {
        let psi = schmidt_state(0.8).unwrap();
        let chain = Chain::from_partners(&psi, &obs(1.1, 0.7, 1), 3).unwrap();
        let mut set = CorrelationSet::new();
        set.add_chain(&chain).unwrap();
        set.add_correlation(&crate::chains::closure_correlation(&chain, 1).unwrap()).unwrap();
        let sys = ConstraintSystem::from_correlations(&set.dual_closed()).unwrap();
        let head = sys.literal_of(chain.head()).unwrap();
        let d = refute_seed(&sys, head.observable, head.value).unwrap();
        let rest = Derivation { steps: d.steps[1..].to_vec(), end: d.end.clone() };
        rest.replay(&sys, &RealityLedger::seeded(head)).unwrap();
        assert!(derive_contradiction(&sys, head.observable).is_none());
    }

    #[test]
    fn propagation_is_confluent() {
        let (sys, o) = hardy_system();
        let head = sys.literal_of(&o[0]).unwrap();
        let Propagation::Consistent(reference) = propagate(RealityLedger::seeded(head), &sys) else { panic!() };
        let mut rng = trial_rng(5, 0);
        let mut order: Vec<usize> = (0..sys.rules().len()).collect();
        for _ in 0..20 {
            order.shuffle(&mut rng);
            let shuffled = sys.with_rule_order(&order);
            let Propagation::Consistent(l) = propagate(RealityLedger::seeded(head), &shuffled) else { panic!() };
            assert_eq!(l.values(), reference.values());
        }
    }

    #[test]
    fn ghz_state_is_normalized_with_schmidt_rank_two() {
        let psi = ghz_state(4).unwrap();
        assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-15);
        // every bipartition: reshape into a 2^|A| × 2^|B| matrix and count rank
        for left in 1u32..15 {
            let a: Vec<usize> = (0..4).filter(|p| left >> p & 1 == 1).collect();
            let b: Vec<usize> = (0..4).filter(|p| left >> p & 1 == 0).collect();
            let mut m = vec![Complex64::new(0.0, 0.0); 16];
            for idx in 0..16usize {
                let bit = |p: usize| idx >> (3 - p) & 1;
                let r = a.iter().fold(0, |acc, &p| acc << 1 | bit(p));
                let c = b.iter().fold(0, |acc, &p| acc << 1 | bit(p));
                m[r * (1 << b.len()) + c] = psi.amplitudes()[idx];
            }
            let m = CMatrix::new(1 << a.len(), 1 << b.len(), m).unwrap();
            assert_eq!(m.cols() - kernel_basis(&m, 1e-12).len(), 2, "bipartition {a:?}|{b:?}");
        }
    }

    #[test]
    fn ghsz_setup() {
        let g = ghsz_correlations().unwrap();
        assert_eq!(g.observables.len(), 8);
        assert_eq!(g.exclusions.len(), 64);
        let mut seen = [false; 8];
        for e in &g.exclusions {
            for &o in &e.observables {
                seen[o] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        let n0 = observable(Direction::new(std::f64::consts::FRAC_PI_2, 0.0).unwrap(), 1, 4).unwrap();
        assert!(g.observables[0].approx_eq(&n0, 1e-12));
    }

    #[test]
    fn ghsz_contradiction_replays() {
        let g = ghsz_correlations().unwrap();
        let sys = g.system();
        assert!(lhv_search(&sys).unwrap().is_empty());
        let c = derive_contradiction(&sys, 0).unwrap();
        c.replay(&sys).unwrap();
        assert_eq!(c.derived[0].target, Literal::new(0, false));
        // tampering with a step breaks replay
        let mut bad = c.clone();
        bad.refutations[0].steps.push(Step::Seed { literal: Literal::new(7, true) });
        assert!(bad.replay(&sys).is_err());
    }

    #[test]
    fn product_state_admits_local_model() {
        let n = 4;
        let plus = CVector::from_real(&[std::f64::consts::FRAC_1_SQRT_2; 2]);
        let psi = StateVector::new((1..n).fold(plus.clone(), |acc, _| acc.tensor(&plus))).unwrap();
        let per_party = (1..=n).map(|p| xy_observables(p, n).unwrap()).collect::<Vec<_>>();
        let ex = zero_probability_exclusions(&psi, &per_party, EXCLUSION_TOL).unwrap();
        assert!(!ex.is_empty());
        let sys = ConstraintSystem::from_exclusions(per_party.concat(), &ex).unwrap();
        let models = lhv_search(&sys).unwrap();
        assert!(!models.is_empty());
        // x is up on every party in every model
        assert!(models.iter().all(|m| m & 0b0101_0101 == 0b0101_0101));
        assert!(derive_contradiction(&sys, 0).is_none());
    }

    #[test]
    fn unconstrained_search_lists_everything() {
        let o: Vec<_> = (0..3).map(|i| obs(0.1 * i as f64, 0.0, 1)).collect();
        let sys = ConstraintSystem::from_exclusions(o, &[]).unwrap();
        assert_eq!(lhv_search(&sys).unwrap(), (0..8).collect::<Vec<u32>>());
    }

    #[test]
    fn oversized_search_rejected() {
        let o: Vec<_> = (0..25).map(|i| obs(0.01 * i as f64, 0.0, 1)).collect();
        let sys = ConstraintSystem::from_exclusions(o, &[]).unwrap();
        assert!(matches!(lhv_search(&sys), Err(LabError::SearchTooLarge(25, 24))));
    }

    #[test]
    fn malformed_exclusion_rejected() {
        let o = vec![obs(0.1, 0.0, 1)];
        let bad = Exclusion { observables: vec![0, 1], forbidden: vec![true, false] };
        assert!(ConstraintSystem::from_exclusions(o.clone(), &[bad]).is_err());
        let short = Exclusion { observables: vec![0], forbidden: vec![] };
        assert!(ConstraintSystem::from_exclusions(o, &[short]).is_err());
    }
}
