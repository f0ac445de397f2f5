//! JSON shapes for inputs and echoed objects.

use nonlocality_core::chains::{Chain, CorrelationSet};
use nonlocality_core::reality::Exclusion;
use nonlocality_core::spin::observable;
use nonlocality_core::{Complex64, CVector, Direction, LocalObservable, StateVector};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `{"dim": N, "entries": [[re, im], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDto {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl StateDto {
    pub fn from_state(psi: &StateVector) -> Self {
        Self {
            dim: psi.dim(),
            entries: psi.amplitudes().entries().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_state(&self) -> Result<StateVector, CliError> {
        if self.entries.len() != self.dim {
            return Err(CliError::Validation(format!(
                "state: dim is {} but {} entries given",
                self.dim,
                self.entries.len()
            )));
        }
        let v = CVector::new(self.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect())?;
        Ok(StateVector::new(v)?)
    }
}

/// `{"theta": r, "phi": r}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionDto {
    pub theta: f64,
    pub phi: f64,
}

impl DirectionDto {
    pub fn from_direction(d: &Direction) -> Self {
        Self { theta: d.theta(), phi: d.phi() }
    }

    pub fn to_direction(self) -> Result<Direction, CliError> {
        Ok(Direction::new(self.theta, self.phi)?)
    }
}

/// `{"party": p, "direction": {...}}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableDto {
    pub party: usize,
    pub direction: DirectionDto,
}

impl ObservableDto {
    pub fn from_observable(o: &LocalObservable) -> Result<Self, CliError> {
        Ok(Self {
            party: o.party(),
            direction: DirectionDto::from_direction(&o.resolved_direction()?),
        })
    }

    pub fn to_observable(self, n_parties: usize) -> Result<LocalObservable, CliError> {
        Ok(observable(self.direction.to_direction()?, self.party, n_parties)?)
    }
}

pub fn chain_from_dto(obs: &[ObservableDto]) -> Result<Chain, CliError> {
    let obs = obs.iter().map(|o| o.to_observable(2)).collect::<Result<Vec<_>, _>>()?;
    Ok(Chain::new(obs)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationDto {
    pub source: usize,
    pub target: usize,
}

/// `{"observables": [idx, ...], "forbidden_outcome": [b, ...]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionDto {
    pub observables: Vec<usize>,
    pub forbidden_outcome: Vec<u8>,
}

impl ExclusionDto {
    pub fn from_exclusion(e: &Exclusion) -> Self {
        Self {
            observables: e.observables.clone(),
            forbidden_outcome: e.forbidden.iter().map(|&b| u8::from(b)).collect(),
        }
    }

    pub fn to_exclusion(&self) -> Result<Exclusion, CliError> {
        let forbidden = self
            .forbidden_outcome
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(CliError::Validation(format!("forbidden_outcome entries are 0 or 1, got {b}"))),
            })
            .collect::<Result<_, _>>()?;
        Ok(Exclusion { observables: self.observables.clone(), forbidden })
    }
}

/// Observables with binary correlations and/or exclusion constraints.
/// `n_parties` defaults to 2; correlations need it to be 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSetDto {
    #[serde(default = "two", skip_serializing_if = "is_two")]
    pub n_parties: usize,
    pub observables: Vec<ObservableDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub correlations: Vec<CorrelationDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclusions: Vec<ExclusionDto>,
}

fn two() -> usize {
    2
}

fn is_two(n: &usize) -> bool {
    *n == 2
}

impl ConstraintSetDto {
    pub fn from_set(set: &CorrelationSet) -> Result<Self, CliError> {
        Ok(Self {
            n_parties: 2,
            observables: set.observables().iter().map(ObservableDto::from_observable).collect::<Result<_, _>>()?,
            correlations: set
                .correlation_indices()
                .iter()
                .map(|&(source, target)| CorrelationDto { source, target })
                .collect(),
            exclusions: Vec::new(),
        })
    }

    pub fn local_observables(&self) -> Result<Vec<LocalObservable>, CliError> {
        self.observables.iter().map(|o| o.to_observable(self.n_parties)).collect()
    }

    /// The binary correlations as a set; observables are deduplicated.
    pub fn correlation_set(&self) -> Result<CorrelationSet, CliError> {
        if self.n_parties != 2 {
            return Err(CliError::Validation("binary correlations need n_parties = 2".into()));
        }
        let obs = self.local_observables()?;
        let mut set = CorrelationSet::new();
        let idx: Vec<usize> = obs.into_iter().map(|o| set.add_observable(o)).collect();
        for c in &self.correlations {
            let (s, t) = (lookup(&idx, c.source)?, lookup(&idx, c.target)?);
            set.add_correlation_indices(s, t)?;
        }
        Ok(set)
    }

    pub fn exclusion_list(&self) -> Result<Vec<Exclusion>, CliError> {
        self.exclusions.iter().map(ExclusionDto::to_exclusion).collect()
    }
}

fn lookup(idx: &[usize], i: usize) -> Result<usize, CliError> {
    idx.get(i)
        .copied()
        .ok_or_else(|| CliError::Validation(format!("observable index {i} out of range ({} listed)", idx.len())))
}
