//! Quantum side of the correlation calculus: outcome probabilities, the
//! state-dependent correlation criterion `Ŝ₁ψ = Ŝ₁Ŝ₂ψ`, the unique partner
//! projector of a nonvanishing source, complement duality, and the linear
//! solver for all states compatible with a set of correlations.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{LabError, Result};
use crate::scalar::Real;
use crate::spin::{direction_from_projector, embed, LocalObservable, Projector};
use crate::tensor::{kernel_basis, Matrix, Vector};

/// Default correlation tolerance on normalized states.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Allowed gap between `‖Ŝ₁ψ − Ŝ₁Ŝ₂ψ‖²` and `⟨ψ|Ŝ₁(1−Ŝ₂)ψ⟩` before the two
/// forms of the criterion are declared inconsistent.
pub const FORM_AGREEMENT_SLACK: f64 = 1e-12;

/// Normalized state of `n_parties` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    amplitudes: Vector<T>,
    n_parties: usize,
}

impl<T: Real> StateVector<T> {
    /// Requires `‖ψ‖ = 1` within `1e-12` (single precision: `1e-6`) and a
    /// power-of-two dimension of at least 2.
    pub fn new(amplitudes: Vector<T>) -> Result<Self> {
        let n_parties = qubit_count(amplitudes.dim())?;
        let norm = amplitudes.norm();
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
        if (norm - T::one()).abs() > tol {
            return Err(LabError::NotNormalized(norm.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { amplitudes, n_parties })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalize(amplitudes: Vector<T>) -> Result<Self> {
        let n_parties = qubit_count(amplitudes.dim())?;
        let amplitudes = amplitudes.normalized().ok_or(LabError::NotNormalized(0.0))?;
        Ok(Self { amplitudes, n_parties })
    }

    pub fn amplitudes(&self) -> &Vector<T> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.dim()
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(LabError::NotQubitDimension(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Anything that acts as an operator on the full state space.
pub trait Operator<T> {
    fn operator(&self) -> &Matrix<T>;
}

impl<T: Real> Operator<T> for Matrix<T> {
    fn operator(&self) -> &Matrix<T> {
        self
    }
}

impl<T: Real> Operator<T> for Projector<T> {
    fn operator(&self) -> &Matrix<T> {
        self.matrix()
    }
}

impl<T: Real> Operator<T> for LocalObservable<T> {
    fn operator(&self) -> &Matrix<T> {
        self.matrix()
    }
}

fn check_dim<T: Real>(m: &Matrix<T>, psi: &StateVector<T>) -> Result<()> {
    if m.cols() != psi.dim() || m.rows() != psi.dim() {
        return Err(LabError::DimensionMismatch {
            expected: psi.dim(),
            got: m.cols(),
        });
    }
    Ok(())
}

/// `⟨ψ|P̂ψ⟩`, clamped to `[0, 1]`.
pub fn probability<T: Real, P: Operator<T> + ?Sized>(p: &P, psi: &StateVector<T>) -> Result<T> {
    let m = p.operator();
    check_dim(m, psi)?;
    let value = psi.amplitudes.inner(&m.apply(&psi.amplitudes)?).re;
    Ok(value.max(T::zero()).min(T::one()))
}

/// Directed correlation `source → target`: outcome 1 of `source` forces
/// outcome 1 of `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation<T> {
    source: LocalObservable<T>,
    target: LocalObservable<T>,
}

impl<T: Real> Correlation<T> {
    pub fn new(source: LocalObservable<T>, target: LocalObservable<T>) -> Result<Self> {
        if source.party() == target.party() {
            return Err(LabError::SameParty(source.party()));
        }
        if source.n_parties() != target.n_parties() {
            return Err(LabError::PartyCount {
                expected: source.n_parties(),
                got: target.n_parties(),
            });
        }
        Ok(Self { source, target })
    }

    pub fn source(&self) -> &LocalObservable<T> {
        &self.source
    }

    pub fn target(&self) -> &LocalObservable<T> {
        &self.target
    }

    pub fn n_parties(&self) -> usize {
        self.source.n_parties()
    }

    /// The operator `Ŝ_src(1 − Ŝ_tgt)`, itself a projector (the factors commute).
    pub fn violation_operator(&self) -> Matrix<T> {
        let dim = self.source.matrix().rows();
        let not_target = &Matrix::identity(dim) - self.target.matrix();
        self.source.matrix() * &not_target
    }
}

/// Both residuals of the correlation criterion for one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationCheck<T> {
    /// `‖Ŝ₁ψ − Ŝ₁Ŝ₂ψ‖`
    pub vector_residual: T,
    /// `|⟨Ŝ₁(1−Ŝ₂)ψ|ψ⟩|`
    pub inner_residual: T,
}

impl<T: Real> CorrelationCheck<T> {
    /// Vector form against `tol`.
    pub fn vector_holds(&self, tol: T) -> bool {
        self.vector_residual <= tol
    }

    /// Inner-product form against `tol`. The inner residual is the square of
    /// the vector residual, but it is only resolved to about `1e-16`, so it is
    /// thresholded at `tol` directly rather than at `tol²`.
    pub fn inner_holds(&self, tol: T) -> bool {
        self.inner_residual <= tol
    }

    /// `inner_holds(tol)` and `vector_holds(√tol)` reach the same decision.
    pub fn decisions_agree(&self, tol: T) -> bool {
        self.inner_holds(tol) == self.vector_holds(calibrated_vector_tol(tol))
    }

    pub fn forms_agree(&self) -> bool {
        let slack = T::lit(FORM_AGREEMENT_SLACK).max(T::epsilon() * T::lit(64.0));
        (self.vector_residual * self.vector_residual - self.inner_residual).abs() <= slack
    }
}

/// Vector-form threshold equivalent to the inner-form threshold `tol`.
pub fn calibrated_vector_tol<T: Real>(tol: T) -> T {
    tol.sqrt()
}

/// Evaluates both forms of the criterion without deciding.
pub fn check<T: Real>(c: &Correlation<T>, psi: &StateVector<T>) -> Result<CorrelationCheck<T>> {
    let s1 = c.source.matrix();
    check_dim(s1, psi)?;
    let psi_v = psi.amplitudes();
    let s1_psi = s1.apply(psi_v)?;
    let s1_s2_psi = s1.apply(&c.target.matrix().apply(psi_v)?)?;
    let vector_residual = (&s1_psi - &s1_s2_psi).norm();

    let q = c.violation_operator();
    let inner_residual = q.apply(psi_v)?.inner(psi_v).norm();
    Ok(CorrelationCheck {
        vector_residual,
        inner_residual,
    })
}

/// Whether `source →ψ target` holds: `‖Ŝ₁ψ − Ŝ₁Ŝ₂ψ‖ ≤ tol`.
///
/// The inner-product form `⟨Ŝ₁(1−Ŝ₂)ψ|ψ⟩` is evaluated alongside; if the two
/// disagree by more than [`FORM_AGREEMENT_SLACK`] the operators are not what
/// they claim to be and an error is returned.
pub fn holds<T: Real>(c: &Correlation<T>, psi: &StateVector<T>, tol: T) -> Result<bool> {
    let chk = check(c, psi)?;
    if !chk.forms_agree() {
        return Err(LabError::FormDisagreement {
            vector_sq: (chk.vector_residual * chk.vector_residual).to_f64().unwrap_or(f64::NAN),
            inner: chk.inner_residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(chk.vector_holds(tol))
}

/// Conditional vector of the other party given outcome 1 of `f`: the
/// components `[a, b]` of `ψ` along `u ⊗ ·` (or `· ⊗ u`) where `F = |u⟩⟨u|`.
pub fn conditional_vector<T: Real>(psi: &StateVector<T>, f: &LocalObservable<T>) -> Result<Vector<T>> {
    if psi.n_parties() != 2 || f.n_parties() != 2 {
        return Err(LabError::PartyCount {
            expected: 2,
            got: psi.n_parties().max(f.n_parties()),
        });
    }
    let u = f.projector().spin_ket()?;
    let amp = psi.amplitudes();
    let entries = (0..2)
        .map(|other| {
            (0..2).fold(Complex::zero(), |acc, own| {
                let idx = if f.party() == 1 { 2 * own + other } else { 2 * other + own };
                acc + u[own].conj() * amp[idx]
            })
        })
        .collect();
    Vector::new(entries)
}

/// The unique rank-one projector `A` on the other party with
/// `Ŝ_f →ψ 1⊗A` (or `A⊗1`): `A = |w⟩⟨w| / ‖w‖²` for the conditional vector
/// `w`. Fails when `Ŝ_f ψ = 0` (norm at most [`DEFAULT_TOL`]).
pub fn partner<T: Real>(psi: &StateVector<T>, f: &LocalObservable<T>) -> Result<Projector<T>> {
    let w = conditional_vector(psi, f)?;
    if w.norm() <= T::lit(DEFAULT_TOL) {
        return Err(LabError::SourceAnnihilatesState);
    }
    Projector::from_ket(&w).ok_or(LabError::SourceAnnihilatesState)
}

/// [`partner`] embedded on the other party, with its direction attached.
pub fn partner_observable<T: Real>(psi: &StateVector<T>, f: &LocalObservable<T>) -> Result<LocalObservable<T>> {
    let a = partner(psi, f)?;
    let d = direction_from_projector(&a)?;
    Ok(embed(&a, 3 - f.party(), 2)?.with_direction(d))
}

/// Follows partners from `head` for `len` observables in total, alternating
/// parties: each element is the partner of its predecessor. On failure the
/// 1-based position of the observable whose partner could not be formed is
/// returned with the cause.
pub fn partner_sequence<T: Real>(
    psi: &StateVector<T>,
    head: &LocalObservable<T>,
    len: usize,
) -> std::result::Result<Vec<LocalObservable<T>>, (usize, LabError)> {
    let mut seq = vec![head.clone()];
    while seq.len() < len {
        let last = seq.last().expect("nonempty");
        let next = partner_observable(psi, last).map_err(|e| (seq.len(), e))?;
        seq.push(next);
    }
    Ok(seq)
}

/// `(1 − target) → (1 − source)`.
pub fn dual<T: Real>(c: &Correlation<T>) -> Correlation<T> {
    Correlation {
        source: c.target.complement(),
        target: c.source.complement(),
    }
}

/// Orthonormal basis of all states satisfying every correlation in `rs`.
///
/// Each condition `Ŝ₁(1−Ŝ₂)ψ = 0` is linear in `ψ`; the operators are stacked
/// and their joint kernel returned. An empty list means only `ψ = 0` fits.
pub fn solution_space<T: Real>(rs: &[Correlation<T>], n_parties: usize, tol: T) -> Result<Vec<Vector<T>>> {
    let dim = 1usize << n_parties;
    if rs.is_empty() {
        return Ok((0..dim).map(|i| Vector::basis(dim, i)).collect());
    }
    let mut blocks = Vec::with_capacity(rs.len());
    for c in rs {
        if c.n_parties() != n_parties {
            return Err(LabError::PartyCount {
                expected: n_parties,
                got: c.n_parties(),
            });
        }
        blocks.push(c.violation_operator());
    }
    Ok(kernel_basis(&Matrix::vstack(&blocks)?, tol))
}
