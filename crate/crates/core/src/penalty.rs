//! Curvature and slope penalty matrices and the banded SPD solver behind the
//! profile updates.
//!
//! For a length-`m` profile `u` the roughness penalties are the quadratic
//! forms
//!
//! ```text
//! uᵀΩu = Σ_{i=2}^{m-1} (u_{i-1} - 2u_i + u_{i+1})²      (second differences)
//! uᵀΓu = Σ_{i=2}^{m-1} ((u_{i+1} - u_{i-1})/2)²          (central differences)
//! ```
//!
//! summed over interior indices only. Both matrices have bandwidth two, and
//! the weighted normal equations of the profile updates add only a diagonal,
//! so every linear solve in the fit is symmetric pentadiagonal and runs in
//! O(m) time and space.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric banded matrix with bandwidth two: the main diagonal plus the
/// first and second off-diagonals (stored once; symmetry is structural).
#[derive(Clone, Debug, PartialEq)]
pub struct Banded2<T: Scalar = f64> {
    diag: Vec<T>,
    off1: Vec<T>,
    off2: Vec<T>,
}

impl<T: Scalar> Banded2<T> {
    pub fn zeros(m: usize) -> Self {
        Banded2 {
            diag: vec![T::zero(); m],
            off1: vec![T::zero(); m.saturating_sub(1)],
            off2: vec![T::zero(); m.saturating_sub(2)],
        }
    }

    /// Builds a matrix from its three stored bands; `off1` and `off2` must
    /// be one and two entries shorter than `diag`.
    pub fn from_bands(diag: Vec<T>, off1: Vec<T>, off2: Vec<T>) -> Result<Self> {
        let m = diag.len();
        if off1.len() != m.saturating_sub(1) || off2.len() != m.saturating_sub(2) {
            return Err(Error::dim(format!(
                "band lengths ({}, {}, {}) inconsistent for size {m}",
                diag.len(),
                off1.len(),
                off2.len()
            )));
        }
        Ok(Banded2 { diag, off1, off2 })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[T] {
        &self.diag
    }

    pub fn off1(&self) -> &[T] {
        &self.off1
    }

    pub fn off2(&self) -> &[T] {
        &self.off2
    }

    /// `self += c * other`
    pub fn scaled_add(&mut self, c: T, other: &Banded2<T>) {
        assert_eq!(self.size(), other.size(), "banded size mismatch");
        for (a, &b) in self.diag.iter_mut().zip(&other.diag) {
            *a = *a + c * b;
        }
        for (a, &b) in self.off1.iter_mut().zip(&other.off1) {
            *a = *a + c * b;
        }
        for (a, &b) in self.off2.iter_mut().zip(&other.off2) {
            *a = *a + c * b;
        }
    }

    /// Adds `c` to every diagonal entry.
    pub fn add_scalar_diag(&mut self, c: T) {
        for a in &mut self.diag {
            *a = *a + c;
        }
    }

    /// Adds a full diagonal vector.
    pub fn add_diag(&mut self, d: &[T]) {
        assert_eq!(self.size(), d.len(), "diagonal length mismatch");
        for (a, &b) in self.diag.iter_mut().zip(d) {
            *a = *a + b;
        }
    }

    /// Quadratic form `uᵀ A u`.
    pub fn quad_form(&self, u: &[T]) -> T {
        assert_eq!(self.size(), u.len(), "vector length mismatch");
        let m = u.len();
        let mut acc = T::zero();
        for i in 0..m {
            acc = acc + self.diag[i] * u[i] * u[i];
        }
        let mut cross = T::zero();
        for i in 0..m.saturating_sub(1) {
            cross = cross + self.off1[i] * u[i] * u[i + 1];
        }
        for i in 0..m.saturating_sub(2) {
            cross = cross + self.off2[i] * u[i] * u[i + 2];
        }
        acc + T::two() * cross
    }

    /// Matrix-vector product `A u`.
    pub fn mul_vec(&self, u: &[T]) -> Vec<T> {
        assert_eq!(self.size(), u.len(), "vector length mismatch");
        let m = u.len();
        let mut out = vec![T::zero(); m];
        for i in 0..m {
            let mut acc = self.diag[i] * u[i];
            if i >= 1 {
                acc = acc + self.off1[i - 1] * u[i - 1];
            }
            if i + 1 < m {
                acc = acc + self.off1[i] * u[i + 1];
            }
            if i >= 2 {
                acc = acc + self.off2[i - 2] * u[i - 2];
            }
            if i + 2 < m {
                acc = acc + self.off2[i] * u[i + 2];
            }
            out[i] = acc;
        }
        out
    }

    /// Dense copy, for small-size checks and diagnostics.
    pub fn to_dense(&self) -> Array2<T> {
        let m = self.size();
        let mut a = Array2::zeros((m, m));
        for i in 0..m {
            a[[i, i]] = self.diag[i];
            if i + 1 < m {
                a[[i, i + 1]] = self.off1[i];
                a[[i + 1, i]] = self.off1[i];
            }
            if i + 2 < m {
                a[[i, i + 2]] = self.off2[i];
                a[[i + 2, i]] = self.off2[i];
            }
        }
        a
    }
}

/// The pair (Ω, Γ) for one axis length.
#[derive(Clone, Debug)]
pub struct PenaltyPair<T: Scalar = f64> {
    size: usize,
    pub omega: Banded2<T>,
    pub gamma: Banded2<T>,
}

impl<T: Scalar> PenaltyPair<T> {
    pub fn size(&self) -> usize {
        self.size
    }
}

/// Builds Ω and Γ for profiles of length `m`.
///
/// Ω = D₂ᵀD₂ with the (1, -2, 1) stencil over interior rows, Γ = DcᵀDc with
/// the (-1/2, 0, 1/2) stencil. Ω annihilates affine profiles, Γ annihilates
/// constants; both are positive semidefinite.
pub fn build_penalties<T: Scalar>(m: usize) -> Result<PenaltyPair<T>> {
    if m < 3 {
        return Err(Error::TooSmall { rows: m, cols: m });
    }
    let half = T::half();
    let omega = stencil_gram(m, [T::one(), -T::two(), T::one()]);
    let gamma = stencil_gram(m, [-half, T::zero(), half]);
    Ok(PenaltyPair {
        size: m,
        omega,
        gamma,
    })
}

/// Gram matrix SᵀS of the (m-2)×m banded operator applying `stencil` at each
/// interior row.
fn stencil_gram<T: Scalar>(m: usize, stencil: [T; 3]) -> Banded2<T> {
    let mut g = Banded2::zeros(m);
    for r in 1..m - 1 {
        // row r touches columns r-1, r, r+1
        for a in 0..3 {
            for b in a..3 {
                let i = r - 1 + a;
                let j = r - 1 + b;
                let w = stencil[a] * stencil[b];
                match j - i {
                    0 => g.diag[i] = g.diag[i] + w,
                    1 => g.off1[i] = g.off1[i] + w,
                    2 => g.off2[i] = g.off2[i] + w,
                    _ => unreachable!(),
                }
            }
        }
    }
    g
}

/// Assembles the conditional penalty `λ·Ω_{u|v}` for the profile update along
/// the `pen_primary` axis given the fixed profile `other` on the opposite
/// axis:
///
/// ```text
/// λ ( (otherᵀother)·Ω  +  (otherᵀΩ_o·other)·I  +  2(otherᵀΓ_o·other)·Γ )
/// ```
///
/// The three scalar coefficients are computed once; the result is banded,
/// symmetric and positive semidefinite.
pub fn conditional_penalty<T: Scalar>(
    pen_primary: &PenaltyPair<T>,
    pen_other: &PenaltyPair<T>,
    other: &[T],
    lambda: T,
) -> Result<Banded2<T>> {
    if other.len() != pen_other.size() {
        return Err(Error::dim(format!(
            "profile length {} does not match penalty size {}",
            other.len(),
            pen_other.size()
        )));
    }
    let dot = other.iter().map(|&x| x * x).sum::<T>();
    let omega_quad = pen_other.omega.quad_form(other);
    let gamma_quad = pen_other.gamma.quad_form(other);

    let mut out = Banded2::zeros(pen_primary.size());
    out.scaled_add(lambda * dot, &pen_primary.omega);
    out.scaled_add(lambda * T::two() * gamma_quad, &pen_primary.gamma);
    out.add_scalar_diag(lambda * omega_quad);
    Ok(out)
}

/// A symmetric positive-definite pentadiagonal system `A x = b`.
#[derive(Clone, Debug)]
pub struct BandedSpdSystem<T: Scalar = f64> {
    pub matrix: Banded2<T>,
    pub rhs: Vec<T>,
}

impl<T: Scalar> BandedSpdSystem<T> {
    pub fn new(matrix: Banded2<T>, rhs: Vec<T>) -> Result<Self> {
        if matrix.size() != rhs.len() {
            return Err(Error::dim(format!(
                "matrix size {} does not match rhs length {}",
                matrix.size(),
                rhs.len()
            )));
        }
        Ok(BandedSpdSystem { matrix, rhs })
    }
}

/// Solves a pentadiagonal SPD system by banded Cholesky in O(m) time and
/// space. A non-positive pivot reports the system as singular (this happens
/// only when the assembled diagonal lost strict positivity, e.g. λ = 0 with
/// all-zero weights on some row).
pub fn solve_banded_spd<T: Scalar>(sys: &BandedSpdSystem<T>) -> Result<Vec<T>> {
    let a = &sys.matrix;
    let m = a.size();
    // L with the same bandwidth: c0 main diagonal, c1 first sub, c2 second sub.
    let mut c0 = vec![T::zero(); m];
    let mut c1 = vec![T::zero(); m.saturating_sub(1)];
    let mut c2 = vec![T::zero(); m.saturating_sub(2)];

    for j in 0..m {
        let mut pivot = a.diag[j];
        if j >= 1 {
            pivot = pivot - c1[j - 1] * c1[j - 1];
        }
        if j >= 2 {
            pivot = pivot - c2[j - 2] * c2[j - 2];
        }
        if pivot <= T::zero() || !pivot.is_finite() {
            return Err(Error::SingularSystem { pivot: j });
        }
        let root = pivot.sqrt();
        c0[j] = root;
        if j + 1 < m {
            let mut t = a.off1[j];
            if j >= 1 {
                t = t - c2[j - 1] * c1[j - 1];
            }
            c1[j] = t / root;
        }
        if j + 2 < m {
            c2[j] = a.off2[j] / root;
        }
    }

    // Forward substitution L y = b.
    let mut y = vec![T::zero(); m];
    for i in 0..m {
        let mut t = sys.rhs[i];
        if i >= 1 {
            t = t - c1[i - 1] * y[i - 1];
        }
        if i >= 2 {
            t = t - c2[i - 2] * y[i - 2];
        }
        y[i] = t / c0[i];
    }

    // Back substitution Lᵀ x = y.
    let mut x = vec![T::zero(); m];
    for i in (0..m).rev() {
        let mut t = y[i];
        if i + 1 < m {
            t = t - c1[i] * x[i + 1];
        }
        if i + 2 < m {
            t = t - c2[i] * x[i + 2];
        }
        x[i] = t / c0[i];
    }
    Ok(x)
}
