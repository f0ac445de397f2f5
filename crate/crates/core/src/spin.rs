//! Spin 1-0 observables built from spatial directions.
//!
//! A [`Direction`] `(θ, φ)` maps to the rank-1 projector
//!
//! ```text
//! E(θ,φ) = [ cos²(θ/2)                     e^{-iφ/2} cos(θ/2) sin(θ/2) ]
//!          [ e^{iφ/2} cos(θ/2) sin(θ/2)     sin²(θ/2)                   ]
//! ```
//!
//! i.e. `|v⟩⟨v|` with `v = (cos(θ/2), e^{iφ/2} sin(θ/2))`. The azimuth enters
//! through a half angle, so the Bloch axis of `E(θ,φ)` is
//! `(sinθ cos(φ/2), sinθ sin(φ/2), cosθ)` and `φ` ranges over `[0, 4π)` to
//! cover every rank-1 projector. Geometric questions (parallelism, rotations)
//! are answered on that Bloch axis.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{LabError, Result};
use crate::scalar::Real;
use crate::tensor::{is_projector, Matrix, Vector};

/// Tolerance used when validating projector invariants on construction.
pub const PROJECTOR_TOL: f64 = 1e-10;

/// [`PROJECTOR_TOL`], widened to a few ulps for single precision.
pub fn projector_tol<T: Real>() -> T {
    T::lit(PROJECTOR_TOL).max(T::epsilon() * T::lit(64.0))
}

/// Below this magnitude the off-diagonal phase of a 2×2 projector is treated
/// as undefined (poles of the sphere) and φ is reported as 0.
const POLE_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction<T> {
    theta: T,
    phi: T,
}

impl<T: Real> Direction<T> {
    /// Validates `θ ∈ [0, π]` and wraps `φ` into `[0, 4π)`.
    pub fn new(theta: T, phi: T) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(LabError::InvalidDirection("non-finite angle".into()));
        }
        if theta < T::zero() || theta > T::PI() {
            return Err(LabError::InvalidDirection(format!("theta {theta} outside [0, pi]")));
        }
        Ok(Self {
            theta,
            phi: wrap(phi, T::lit(4.0) * T::PI()),
        })
    }

    /// Accepts any finite angles and folds them into canonical range while
    /// preserving the projector: θ is reflected into `[0, π]`, which flips the
    /// sign of `sin(θ/2)` and is compensated by `φ → φ + 2π`.
    pub fn wrapped(theta: T, phi: T) -> Self {
        let two_pi = T::lit(2.0) * T::PI();
        // θ → θ + 2π negates the whole ket, so the projector has period 2π in θ
        let mut t = wrap(theta, two_pi);
        let mut p = phi;
        if t > T::PI() {
            t = two_pi - t;
            p = p + two_pi;
        }
        Self {
            theta: t,
            phi: wrap(p, T::lit(4.0) * T::PI()),
        }
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    /// `n = (sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn unit_vector(&self) -> [T; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Bloch axis of the projector `E(θ,φ)`.
    pub fn bloch_vector(&self) -> [T; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = (self.phi / T::lit(2.0)).sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Direction whose projector has Bloch axis `v` (normalized internally).
    pub fn from_bloch(v: [T; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm <= T::zero() || !norm.is_finite() {
            return Err(LabError::InvalidDirection("zero or non-finite Bloch vector".into()));
        }
        let [x, y, z] = [v[0] / norm, v[1] / norm, v[2] / norm];
        let rho = (x * x + y * y).sqrt();
        let theta = rho.atan2(z);
        let azimuth = if rho == T::zero() {
            T::zero()
        } else {
            wrap(y.atan2(x), T::lit(2.0) * T::PI())
        };
        Ok(Self {
            theta,
            phi: azimuth * T::lit(2.0),
        })
    }

    /// Direction of the complementary projector `1 − E(θ,φ)`.
    pub fn antipode(&self) -> Self {
        let two_pi = T::lit(2.0) * T::PI();
        Self {
            theta: T::PI() - self.theta,
            phi: wrap(self.phi + two_pi, T::lit(4.0) * T::PI()),
        }
    }

    /// Angle between the Bloch axes of the two projectors, in `[0, π]`.
    pub fn angle_to(&self, other: &Self) -> T {
        let a = self.bloch_vector();
        let b = other.bloch_vector();
        let cross = cross(a, b);
        let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        sin.atan2(cos)
    }
}

fn wrap<T: Real>(x: T, period: T) -> T {
    let r = x % period;
    let r = if r < T::zero() { r + period } else { r };
    if r >= period {
        T::zero()
    } else {
        r
    }
}

pub(crate) fn cross<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Hermitian idempotent matrix with its (integer) rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector<T> {
    matrix: Matrix<T>,
    rank: usize,
}

impl<T: Real> Projector<T> {
    /// Validates the projector invariants at [`PROJECTOR_TOL`].
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        Self::with_tolerance(matrix, projector_tol())
    }

    pub fn with_tolerance(matrix: Matrix<T>, tol: T) -> Result<Self> {
        if !is_projector(&matrix, tol) {
            return Err(LabError::NotSpinProjector("matrix is not Hermitian idempotent".into()));
        }
        let trace = matrix.trace().re;
        let rank = trace.round();
        if (trace - rank).abs() > T::lit(1e-9).max(tol) {
            return Err(LabError::NotSpinProjector(format!("trace {trace} is not an integer")));
        }
        Ok(Self {
            matrix,
            rank: rank.to_usize().unwrap_or(0),
        })
    }

    /// `|v⟩⟨v| / ‖v‖²`; `None` for the zero vector.
    pub fn from_ket(v: &Vector<T>) -> Option<Self> {
        let unit = v.normalized()?;
        Some(Self {
            matrix: unit.outer(&unit),
            rank: 1,
        })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `1 − P`.
    pub fn complement(&self) -> Self {
        let n = self.dim();
        Self {
            matrix: &Matrix::identity(n) - &self.matrix,
            rank: n - self.rank,
        }
    }

    /// Unit ket `v` with `P = |v⟩⟨v|`, phase fixed so `v[0]` is real and
    /// nonnegative. Only defined for rank-1 2×2 projectors.
    pub fn spin_ket(&self) -> Result<Vector<T>> {
        self.require_spin()?;
        let p00 = self.matrix.get(0, 0).re.max(T::zero());
        let p11 = self.matrix.get(1, 1).re.max(T::zero());
        let off = self.matrix.get(1, 0);
        let ket = if p00 >= p11 {
            let c = p00.sqrt();
            vec![Complex::new(c, T::zero()), off / Complex::new(c, T::zero())]
        } else {
            // column 1 = v·conj(v₁); rescale so the first entry is real ≥ 0
            let s = p11.sqrt();
            let v0 = self.matrix.get(0, 1) / Complex::new(s, T::zero());
            let v1 = Complex::new(s, T::zero());
            let n0 = v0.norm();
            if n0 == T::zero() {
                vec![Complex::zero(), Complex::one()]
            } else {
                let unphase = v0.conj() / Complex::new(n0, T::zero());
                vec![v0 * unphase, v1 * unphase]
            }
        };
        Vector::new(ket)?
            .normalized()
            .ok_or_else(|| LabError::NotSpinProjector("zero ket".into()))
    }

    fn require_spin(&self) -> Result<()> {
        if self.dim() != 2 || self.rank != 1 {
            return Err(LabError::NotSpinProjector(format!(
                "expected a rank-1 2x2 projector, got rank {} on dimension {}",
                self.rank,
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn distance(&self, other: &Self) -> T {
        (&self.matrix - &other.matrix).frobenius_norm()
    }
}

/// The 2×2 projector `E(θ,φ)`.
pub fn projector_from_direction<T: Real>(d: &Direction<T>) -> Projector<T> {
    let half = d.theta / T::lit(2.0);
    let (s, c) = half.sin_cos();
    let phase = Complex::from_polar(T::one(), d.phi / T::lit(2.0));
    let ket = Vector::new(vec![Complex::new(c, T::zero()), phase * s]).expect("finite angles");
    Projector {
        matrix: ket.outer(&ket),
        rank: 1,
    }
}

/// Inverse of [`projector_from_direction`]: θ from the diagonal, φ/2 from the
/// phase of the lower off-diagonal entry. At the poles φ is reported as 0.
pub fn direction_from_projector<T: Real>(p: &Projector<T>) -> Result<Direction<T>> {
    p.require_spin()?;
    if !is_projector(p.matrix(), projector_tol()) {
        return Err(LabError::NotSpinProjector("matrix is not Hermitian idempotent".into()));
    }
    let p00 = p.matrix.get(0, 0).re.max(T::zero());
    let p11 = p.matrix.get(1, 1).re.max(T::zero());
    let theta = T::lit(2.0) * p11.sqrt().atan2(p00.sqrt());
    let off = p.matrix.get(1, 0);
    let phi = if off.norm() <= T::lit(POLE_EPS).max(T::epsilon()) {
        T::zero()
    } else {
        T::lit(2.0) * wrap(off.arg(), T::lit(2.0) * T::PI())
    };
    Direction::new(theta.min(T::PI()), phi)
}

/// A single-qubit projector acting on one party of an `n_parties`-qubit system.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalObservable<T> {
    party: usize,
    n_parties: usize,
    projector: Projector<T>,
    direction: Option<Direction<T>>,
    embedded: Matrix<T>,
}

impl<T: Real> LocalObservable<T> {
    pub fn party(&self) -> usize {
        self.party
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn projector(&self) -> &Projector<T> {
        &self.projector
    }

    pub fn direction(&self) -> Option<Direction<T>> {
        self.direction
    }

    /// Full-space matrix `1 ⊗ … ⊗ P ⊗ … ⊗ 1`.
    pub fn matrix(&self) -> &Matrix<T> {
        &self.embedded
    }

    pub fn with_direction(mut self, d: Direction<T>) -> Self {
        self.direction = Some(d);
        self
    }

    /// The observable `1 − S` on the same party.
    pub fn complement(&self) -> Self {
        let projector = self.projector.complement();
        let embedded = embed_matrix(projector.matrix(), self.party, self.n_parties);
        Self {
            party: self.party,
            n_parties: self.n_parties,
            projector,
            direction: self.direction.map(|d| d.antipode()),
            embedded,
        }
    }

    /// Same party and projectors within `tol` (Frobenius).
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        self.party == other.party
            && self.n_parties == other.n_parties
            && self.projector.distance(&other.projector) <= tol
    }

    /// `other` is `1 − self` within `tol`.
    pub fn is_complement_of(&self, other: &Self, tol: T) -> bool {
        self.party == other.party
            && self.n_parties == other.n_parties
            && self.projector.complement().distance(&other.projector) <= tol
    }

    /// Direction recorded on construction, or recovered from the projector.
    pub fn resolved_direction(&self) -> Result<Direction<T>> {
        match self.direction {
            Some(d) => Ok(d),
            None => direction_from_projector(&self.projector),
        }
    }
}

fn embed_matrix<T: Real>(p: &Matrix<T>, party: usize, n_parties: usize) -> Matrix<T> {
    let id = Matrix::identity(2);
    let mut out = if party == 1 { p.clone() } else { id.clone() };
    for slot in 2..=n_parties {
        out = out.tensor(if slot == party { p } else { &id });
    }
    out
}

/// Places the single-qubit projector `p` in slot `party` (1-based, party 1 the
/// leftmost tensor factor) of an `n_parties`-qubit system.
pub fn embed<T: Real>(p: &Projector<T>, party: usize, n_parties: usize) -> Result<LocalObservable<T>> {
    if party == 0 || party > n_parties {
        return Err(LabError::PartyOutOfRange { party, n_parties });
    }
    p.require_spin()?;
    Ok(LocalObservable {
        party,
        n_parties,
        projector: p.clone(),
        direction: None,
        embedded: embed_matrix(p.matrix(), party, n_parties),
    })
}

/// `embed(projector_from_direction(d), party, n_parties)` with the direction attached.
pub fn observable<T: Real>(d: Direction<T>, party: usize, n_parties: usize) -> Result<LocalObservable<T>> {
    Ok(embed(&projector_from_direction(&d), party, n_parties)?.with_direction(d))
}
