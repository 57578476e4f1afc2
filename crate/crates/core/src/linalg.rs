//! Hermitian operators and density matrices in the Hilbert–Schmidt geometry.
//!
//! Bipartite operators use the convention that subsystem A is the slow
//! (leftmost) Kronecker factor: the composite index of `|a⟩ ⊗ |b⟩` is
//! `a * d_B + b`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{ComplexField, DMatrix, DVector};

pub use nalgebra::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Numerical tolerances used when validating operators and states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Max `|A_ij - conj(A_ji)|` accepted as Hermitian.
    pub hermiticity: f64,
    /// Max `|Tr ρ - 1|` accepted for a density matrix.
    pub trace: f64,
    /// Minimum eigenvalue accepted as positive semidefinite (negative number).
    pub psd: f64,
    /// Max `|O Oᵀ - I|` accepted as orthogonal.
    pub orthogonality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            trace: 1e-12,
            psd: -1e-10,
            orthogonality: 1e-10,
        }
    }
}

/// Subsystem of a bipartite system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subsystem {
    A,
    B,
}

impl TryFrom<u32> for Subsystem {
    type Error = Error;

    fn try_from(id: u32) -> Result<Self> {
        match id {
            0 => Ok(Subsystem::A),
            1 => Ok(Subsystem::B),
            other => Err(Error::InvalidSubsystem(other)),
        }
    }
}

/// Largest entry of `|A - A†|`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// A square Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp {
    mat: CMatrix,
}

impl HermitianOp {
    /// Validates hermiticity with the default tolerance.
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::with_tolerance(mat, Tolerances::default().hermiticity)
    }

    pub fn with_tolerance(mat: CMatrix, tol: f64) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let deviation = hermiticity_deviation(&mat);
        if !(deviation <= tol) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { mat })
    }

    /// Projects a square matrix onto its Hermitian part `(A + A†)/2`.
    pub fn symmetrized(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        Ok(Self::symmetrize_square(mat))
    }

    pub(crate) fn symmetrize_square(mut mat: CMatrix) -> Self {
        let n = mat.nrows();
        for i in 0..n {
            mat[(i, i)] = C64::new(mat[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let v = (mat[(i, j)] + mat[(j, i)].conj()) * 0.5;
                mat[(i, j)] = v;
                mat[(j, i)] = v.conj();
            }
        }
        Self { mat }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self {
            mat: CMatrix::from_diagonal(&v),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    /// Rank-one projector `|ψ⟩⟨ψ|` (the vector is not normalized here).
    pub fn projector(psi: &DVector<C64>) -> Self {
        Self::symmetrize_square(psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    /// Hilbert–Schmidt norm `sqrt(Tr A²)`.
    pub fn hs_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mat: &self.mat * C64::new(s, 0.0),
        }
    }

    /// `self + s * other`, used for linear combinations of basis operators.
    pub fn add_scaled(&mut self, s: f64, other: &HermitianOp) {
        let c = C64::new(s, 0.0);
        self.mat.zip_apply(&other.mat, |a, b| *a += b * c);
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.mat)
    }

    /// Conjugation `U A U†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::symmetrize_square(u * &self.mat * u.adjoint())
    }
}

impl Add for &HermitianOp {
    type Output = HermitianOp;
    fn add(self, rhs: &HermitianOp) -> HermitianOp {
        HermitianOp {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &HermitianOp {
    type Output = HermitianOp;
    fn sub(self, rhs: &HermitianOp) -> HermitianOp {
        HermitianOp {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul<f64> for &HermitianOp {
    type Output = HermitianOp;
    fn mul(self, rhs: f64) -> HermitianOp {
        self.scaled(rhs)
    }
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Decomposition("non-finite matrix entry"));
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// A density matrix on a (possibly trivial) bipartite space `C^{d_A} ⊗ C^{d_B}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOp,
    dims: (usize, usize),
}

impl DensityMatrix {
    /// Validates unit trace and positivity with the default tolerances.
    pub fn new(op: HermitianOp, dims: (usize, usize)) -> Result<Self> {
        Self::with_tolerances(op, dims, &Tolerances::default())
    }

    pub fn with_tolerances(op: HermitianOp, dims: (usize, usize), tol: &Tolerances) -> Result<Self> {
        let (da, db) = dims;
        if da == 0 || db == 0 {
            return Err(Error::InvalidDimension(format!("factor dims {da}x{db}")));
        }
        if da * db != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: da * db,
                found: op.dim(),
            });
        }
        let tr = op.trace();
        if !((tr - 1.0).abs() <= tol.trace) {
            return Err(Error::InvalidState {
                quantity: "trace",
                value: tr,
            });
        }
        let min = min_eigenvalue(&op)?;
        if min < tol.psd {
            return Err(Error::InvalidState {
                quantity: "min_eigenvalue",
                value: min,
            });
        }
        Ok(Self { op, dims })
    }

    /// Single-system state (`d_B = 1`).
    pub fn single(op: HermitianOp) -> Result<Self> {
        let d = op.dim();
        Self::new(op, (d, 1))
    }

    pub(crate) fn new_unchecked(op: HermitianOp, dims: (usize, usize)) -> Self {
        debug_assert_eq!(op.dim(), dims.0 * dims.1);
        Self { op, dims }
    }

    pub fn maximally_mixed(dims: (usize, usize)) -> Self {
        let n = dims.0 * dims.1;
        Self {
            op: HermitianOp::identity(n).scaled(1.0 / n as f64),
            dims,
        }
    }

    /// Pure state from an (unnormalized) state vector.
    pub fn pure(psi: &DVector<C64>, dims: (usize, usize)) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState {
                quantity: "norm",
                value: 0.0,
            });
        }
        Self::new(HermitianOp::projector(&(psi / C64::new(norm, 0.0))), dims)
    }

    pub fn op(&self) -> &HermitianOp {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

/// Hilbert–Schmidt inner product `Tr{A† B}`, real for Hermitian arguments.
pub fn hs_inner(a: &HermitianOp, b: &HermitianOp) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(hs_inner_unchecked(a.matrix(), b.matrix()))
}

pub(crate) fn hs_inner_unchecked(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// Sum of singular values of a real or complex rectangular matrix.
pub fn trace_norm<T>(m: &DMatrix<T>) -> Result<f64>
where
    T: ComplexField<RealField = f64>,
{
    if m.is_empty() {
        return Ok(0.0);
    }
    if m.iter().any(|z| !z.clone().is_finite()) {
        return Err(Error::Decomposition("non-finite matrix entry"));
    }
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or(Error::Decomposition("singular value decomposition"))?;
    Ok(svd.singular_values.iter().sum())
}

/// Trace norm of a Hermitian operator from its eigenvalues.
pub fn trace_norm_hermitian(h: &HermitianOp) -> Result<f64> {
    Ok(h.eigenvalues()?.iter().map(|v| v.abs()).sum())
}

/// Kronecker product `A ⊗ B` with A on the slow axis.
pub fn tensor(a: &HermitianOp, b: &HermitianOp) -> HermitianOp {
    HermitianOp {
        mat: a.matrix().kronecker(b.matrix()),
    }
}

/// Reduced state of the kept subsystem.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> DensityMatrix {
    let (da, db) = rho.dims();
    let m = rho.matrix();
    let out = match keep {
        Subsystem::A => CMatrix::from_fn(da, da, |a, a2| {
            (0..db).map(|b| m[(a * db + b, a2 * db + b)]).sum()
        }),
        Subsystem::B => CMatrix::from_fn(db, db, |b, b2| {
            (0..da).map(|a| m[(a * db + b, a * db + b2)]).sum()
        }),
    };
    let d = out.nrows();
    DensityMatrix::new_unchecked(HermitianOp::symmetrize_square(out), (d, 1))
}

/// Partial transpose on subsystem `sub`.
pub fn partial_transpose(rho: &DensityMatrix, sub: Subsystem) -> HermitianOp {
    let (da, db) = rho.dims();
    let m = rho.matrix();
    let n = da * db;
    let out = CMatrix::from_fn(n, n, |r, c| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        match sub {
            Subsystem::A => m[(a2 * db + b, a * db + b2)],
            Subsystem::B => m[(a * db + b2, a2 * db + b)],
        }
    });
    HermitianOp { mat: out }
}

/// `Tr{ρ²}`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

pub fn min_eigenvalue(h: &HermitianOp) -> Result<f64> {
    h.eigenvalues()?
        .first()
        .copied()
        .ok_or(Error::InvalidDimension("empty operator".into()))
}

/// Largest entry of `|O Oᵀ - I|` for a real square matrix.
pub fn orthogonality_deviation(o: &DMatrix<f64>) -> f64 {
    let n = o.nrows();
    let g = o * o.transpose();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - target).abs());
        }
    }
    dev
}
