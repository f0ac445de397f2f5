//! Dense complex vectors and matrices for the small Hilbert spaces used here
//! (dimension 2, 4 and 16). Storage is row-major; all tolerance checks use the
//! Frobenius norm.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{LabError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Vector<T> {
    entries: Vec<Complex<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<Complex<T>>,
}

fn all_finite<T: Real>(entries: &[Complex<T>]) -> bool {
    entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

impl<T: Real> Vector<T> {
    pub fn new(entries: Vec<Complex<T>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(LabError::DimensionMismatch { expected: 1, got: 0 });
        }
        if !all_finite(&entries) {
            return Err(LabError::NonFinite("vector"));
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![Complex::zero(); dim],
        }
    }

    /// Computational basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[index] = Complex::one();
        v
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            entries: values.iter().map(|&x| Complex::new(T::lit(x), T::zero())).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn norm_sqr(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n == T::zero() {
            return None;
        }
        Some(self.scale(Complex::new(n.recip(), T::zero())))
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let entries = self
            .entries
            .iter()
            .flat_map(|a| other.entries.iter().map(move |b| a * b))
            .collect();
        Self { entries }
    }

    /// Outer product `|self⟩⟨other|`.
    pub fn outer(&self, other: &Self) -> Matrix<T> {
        let entries = self
            .entries
            .iter()
            .flat_map(|a| other.entries.iter().map(move |b| a * b.conj()))
            .collect();
        Matrix {
            rows: self.dim(),
            cols: other.dim(),
            entries,
        }
    }
}

impl<T: Real> std::ops::Index<usize> for Vector<T> {
    type Output = Complex<T>;
    fn index(&self, i: usize) -> &Complex<T> {
        &self.entries[i]
    }
}

impl<'a, T: Real> Sub<&'a Vector<T>> for &'a Vector<T> {
    type Output = Vector<T>;
    fn sub(self, rhs: &'a Vector<T>) -> Vector<T> {
        assert_eq!(self.dim(), rhs.dim(), "vector dimension mismatch");
        Vector {
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a, T: Real> Add<&'a Vector<T>> for &'a Vector<T> {
    type Output = Vector<T>;
    fn add(self, rhs: &'a Vector<T>) -> Vector<T> {
        assert_eq!(self.dim(), rhs.dim(), "vector dimension mismatch");
        Vector {
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Matrix<T> {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(LabError::Shape {
                rows,
                cols,
                got: entries.len(),
            });
        }
        if !all_finite(&entries) {
            return Err(LabError::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = Complex::one();
        }
        m
    }

    pub fn diag(values: &[Complex<T>]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.entries[i * n + i] = *v;
        }
        m
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let values: Vec<_> = values.iter().map(|&x| Complex::new(T::lit(x), T::zero())).collect();
        Self::diag(&values)
    }

    /// Builds a matrix from `(re, im)` rows; panics on ragged input.
    pub fn from_rows(rows: &[&[(f64, f64)]]) -> Self {
        let cols = rows[0].len();
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix rows");
            entries.extend(row.iter().map(|&(re, im)| Complex::new(T::lit(re), T::lit(im))));
        }
        Self {
            rows: rows.len(),
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries[row * self.cols + col]
    }

    fn set(&mut self, row: usize, col: usize, value: Complex<T>) {
        self.entries[row * self.cols + col] = value;
    }

    pub fn column(&self, col: usize) -> Vector<T> {
        Vector {
            entries: (0..self.rows).map(|r| self.get(r, col)).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).fold(Complex::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn frobenius_norm(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(LabError::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    out.entries[r * other.cols + c] = out.entries[r * other.cols + c] + a * other.get(k, c);
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &Vector<T>) -> Result<Vector<T>> {
        if self.cols != v.dim() {
            return Err(LabError::DimensionMismatch {
                expected: self.cols,
                got: v.dim(),
            });
        }
        let entries = (0..self.rows)
            .map(|r| {
                self.entries[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v.entries())
                    .fold(Complex::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect();
        Ok(Vector { entries })
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.set(i * other.rows + k, j * other.cols + l, a * other.get(k, l));
                    }
                }
            }
        }
        out
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[Self]) -> Result<Self> {
        let cols = blocks.first().map(|b| b.cols).ok_or(LabError::Shape {
            rows: 0,
            cols: 0,
            got: 0,
        })?;
        let mut entries = Vec::new();
        let mut rows = 0;
        for b in blocks {
            if b.cols != cols {
                return Err(LabError::DimensionMismatch {
                    expected: cols,
                    got: b.cols,
                });
            }
            rows += b.rows;
            entries.extend_from_slice(&b.entries);
        }
        Ok(Self { rows, cols, entries })
    }
}

impl<'a, T: Real> Add<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a, T: Real> Sub<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a, T: Real> Mul<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        self.matmul(rhs).expect("matrix shape mismatch")
    }
}

/// Kronecker product of two matrices.
pub fn tensor<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    a.tensor(b)
}

/// Orthonormal basis of the numerical null space of `m`.
///
/// Householder QR with column pivoting is run on `m†`; columns of `m†` whose
/// remaining norm falls below `tol·‖m‖_F` are treated as rank deficiency, and
/// the trailing columns of the unitary factor span the kernel. A zero matrix
/// yields the full standard basis. `m` need not be square.
pub fn kernel_basis<T: Real>(m: &Matrix<T>, tol: T) -> Vec<Vector<T>> {
    let n = m.cols;
    let scale = m.frobenius_norm();
    if scale == T::zero() {
        return (0..n).map(|i| Vector::basis(n, i)).collect();
    }
    let threshold = tol * scale;

    // a = m†, n × r
    let mut a = m.adjoint();
    let r = a.cols;
    let mut q = Matrix::<T>::identity(n);
    let mut rank = 0;

    for k in 0..n.min(r) {
        // pivot: remaining column with the largest norm below row k
        let (pivot, pivot_norm) = (k..r)
            .map(|j| {
                let s = (k..n).fold(T::zero(), |acc, i| acc + a.get(i, j).norm_sqr());
                (j, s.sqrt())
            })
            .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_norm <= threshold {
            break;
        }
        if pivot != k {
            for i in 0..n {
                let tmp = a.get(i, k);
                a.set(i, k, a.get(i, pivot));
                a.set(i, pivot, tmp);
            }
        }

        // Householder vector v = x − α e₁ with α = −e^{i arg x₀}‖x‖
        let x0 = a.get(k, k);
        let phase = if x0.norm() == T::zero() {
            Complex::one()
        } else {
            x0 / Complex::new(x0.norm(), T::zero())
        };
        let alpha = -phase * Complex::new(pivot_norm, T::zero());
        let mut v: Vec<Complex<T>> = (k..n).map(|i| a.get(i, k)).collect();
        v[0] = v[0] - alpha;
        let v_norm_sqr = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        rank = k + 1;
        if v_norm_sqr == T::zero() {
            continue;
        }
        let two = Complex::new(T::lit(2.0) / v_norm_sqr, T::zero());

        // a ← H a on rows k.., H = I − 2vv†/(v†v)
        for j in k..r {
            let dot = v
                .iter()
                .enumerate()
                .fold(Complex::zero(), |acc, (t, vi)| acc + vi.conj() * a.get(k + t, j));
            let coef = two * dot;
            for (t, vi) in v.iter().enumerate() {
                a.set(k + t, j, a.get(k + t, j) - coef * vi);
            }
        }
        // q ← q H on columns k..
        for i in 0..n {
            let dot = v
                .iter()
                .enumerate()
                .fold(Complex::zero(), |acc, (t, vi)| acc + q.get(i, k + t) * vi);
            let coef = two * dot;
            for (t, vi) in v.iter().enumerate() {
                q.set(i, k + t, q.get(i, k + t) - coef * vi.conj());
            }
        }
    }

    (rank..n).map(|c| q.column(c)).collect()
}

/// Hermitian and idempotent within `tol`, both measured in the Frobenius norm.
pub fn is_projector<T: Real>(m: &Matrix<T>, tol: T) -> bool {
    if !m.is_square() {
        return false;
    }
    let hermitian_gap = (m - &m.adjoint()).frobenius_norm();
    let idempotent_gap = (&(m * m) - m).frobenius_norm();
    hermitian_gap <= tol && idempotent_gap <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    type M = Matrix<f64>;

    fn sigma_x() -> M {
        M::from_rows(&[&[(0., 0.), (1., 0.)], &[(1., 0.), (0., 0.)]])
    }

    #[test]
    fn identity_tensor_identity() {
        assert_eq!(tensor(&M::identity(2), &M::identity(2)), M::identity(4));
    }

    #[test]
    fn z_up_tensor_identity_is_block_diagonal() {
        let f = M::real_diag(&[1., 0.]);
        assert_eq!(f.tensor(&M::identity(2)), M::real_diag(&[1., 1., 0., 0.]));
    }

    #[test]
    fn xx_fixes_bell_state() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = Vector::<f64>::from_real(&[h, 0., 0., h]);
        let xx = sigma_x().tensor(&sigma_x());
        let out = xx.apply(&phi).unwrap();
        assert_abs_diff_eq!((&out - &phi).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn tensor_acts_factorwise() {
        let a = M::from_rows(&[&[(1., 2.), (0., -1.)], &[(3., 0.), (0.5, 0.5)]]);
        let b = sigma_x();
        let u = Vector::<f64>::new(vec![Complex::new(0.3, 0.1), Complex::new(-0.2, 0.7)]).unwrap();
        let v = Vector::<f64>::from_real(&[0.6, 0.8]);
        let lhs = a.tensor(&b).apply(&u.tensor(&v)).unwrap();
        let rhs = a.apply(&u).unwrap().tensor(&b.apply(&v).unwrap());
        assert_abs_diff_eq!((&lhs - &rhs).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn kernel_of_zero_is_everything() {
        let k = kernel_basis(&M::zeros(4, 4), 1e-12);
        assert_eq!(k.len(), 4);
    }

    #[test]
    fn kernel_of_identity_is_trivial() {
        assert!(kernel_basis(&M::identity(4), 1e-12).is_empty());
    }

    #[test]
    fn kernel_of_diag_spans_middle_coordinates() {
        let m = M::real_diag(&[1., 0., 0., 2.]);
        let k = kernel_basis(&m, 1e-12);
        assert_eq!(k.len(), 2);
        for v in &k {
            // support only on coordinates 1 and 2 (0-based)
            assert_abs_diff_eq!(v[0].norm(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(v[3].norm(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(k[0].inner(&k[1]).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn kernel_of_tall_matrix() {
        // rows (1,1,0) and (0,1,1): kernel spanned by (1,-1,1)/√3
        let m = M::from_rows(&[
            &[(1., 0.), (1., 0.), (0., 0.)],
            &[(0., 0.), (1., 0.), (1., 0.)],
            &[(2., 0.), (2., 0.), (0., 0.)],
            &[(0., 0.), (0., 0.), (0., 0.)],
        ]);
        let k = kernel_basis(&m, 1e-12);
        assert_eq!(k.len(), 1);
        assert_abs_diff_eq!(m.apply(&k[0]).unwrap().norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn projector_checks() {
        assert!(is_projector(&M::real_diag(&[1., 0.]), 1e-12));
        assert!(!is_projector(&sigma_x(), 1e-12));
        assert!(!is_projector(&M::zeros(2, 3), 1e-12));
    }

    #[test]
    fn works_in_single_precision() {
        let m = Matrix::<f32>::real_diag(&[1., 0., 0., 2.]);
        assert_eq!(kernel_basis(&m, 1e-5).len(), 2);
        assert!(is_projector(&Matrix::<f32>::real_diag(&[0., 1.]), 1e-6));
    }
}
