//! Seeded sampling of states, directions and projectors.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spin::{observable, projector_from_direction};
use crate::{CVector, Direction, LocalObservable, Projector, StateVector};

/// Independent, reproducible stream for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Unitarily invariant random state on `n_parties` qubits.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n_parties: usize) -> StateVector {
    let dim = 1usize << n_parties;
    loop {
        let entries = (0..dim)
            .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let v = CVector::new(entries).expect("finite gaussian samples");
        if let Ok(psi) = StateVector::normalize(v) {
            return psi;
        }
    }
}

/// Direction whose projector axis is uniform on the Bloch sphere.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        if let Ok(d) = Direction::from_bloch(v) {
            return d;
        }
    }
}

pub fn random_projector<R: Rng + ?Sized>(rng: &mut R) -> Projector {
    projector_from_direction(&random_direction(rng))
}

pub fn random_observable<R: Rng + ?Sized>(rng: &mut R, party: usize, n_parties: usize) -> LocalObservable {
    observable(random_direction(rng), party, n_parties).expect("party in range")
}
