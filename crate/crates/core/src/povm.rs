//! Informationally complete (N,M)-POVMs.
//!
//! Elements are indexed `i(α, a) = α·M + a` (zero-based). Construction goes
//! through the spectral decomposition of `SᵀS`, where `S` is the real
//! `d²×NM` matrix expanding the elements in an orthonormal Hermitian basis:
//!
//! ```text
//! Π_i = Σ_μ G̃_μ S̃_μi,   S̃ = √Λ Xᵀ,   G̃ = O G,   O = 1 ⊕ O′
//! ```
//!
//! with `X[·,0] = 1/√(NM)`, `Λ_0 = dN/M`, and `M-1` Helmert vectors per
//! block carrying the eigenvalue `Γ = (xM² - d)/(M(M-1))`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::{gell_mann_basis, rotate_basis, LooBasis};
use crate::error::{Error, Result};
use crate::linalg::{
    hs_inner_unchecked, min_eigenvalue, orthogonality_deviation, CMatrix, HermitianOp, Tolerances,
    C64,
};

/// Tolerance on the axiom residuals of a constructed POVM.
pub const AXIOM_TOLERANCE: f64 = 1e-10;

/// The admissible interval `(low, high]` of the purity parameter `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XRange {
    pub low: f64,
    pub high: f64,
}

impl XRange {
    pub fn contains(&self, x: f64) -> bool {
        x > self.low && x <= self.high
    }
}

/// `(d/M², min(d²/M², d/M)]`.
pub fn feasible_x_range(d: usize, _n: usize, m: usize) -> XRange {
    let (d, m) = (d as f64, m as f64);
    XRange {
        low: d / (m * m),
        high: (d * d / (m * m)).min(d / m),
    }
}

/// `(M-1)N + 1 = d²`.
pub fn is_informationally_complete(d: usize, n: usize, m: usize) -> bool {
    m >= 1 && (m - 1) * n + 1 == d * d
}

/// Parameters `(d, N, M, x)` of an (N,M)-POVM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmPovmSpec {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub x: f64,
}

impl NmPovmSpec {
    pub fn new(d: usize, n: usize, m: usize, x: f64) -> Self {
        Self { d, n, m, x }
    }

    /// SIC parameters `(1, d², 1/d²)`.
    pub fn sic(d: usize) -> Self {
        Self::new(d, 1, d * d, 1.0 / (d * d) as f64)
    }

    pub fn x_range(&self) -> XRange {
        feasible_x_range(self.d, self.n, self.m)
    }

    pub fn is_informationally_complete(&self) -> bool {
        is_informationally_complete(self.d, self.n, self.m)
    }

    /// Checks the integer parameters and that `x` lies in the open-closed range.
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.n < 1 || self.m < 2 {
            return Err(Error::Config(format!(
                "need d >= 1, N >= 1, M >= 2 (got d={}, N={}, M={})",
                self.d, self.n, self.m
            )));
        }
        let r = self.x_range();
        if !(self.x.is_finite() && r.contains(self.x)) {
            return Err(Error::OutOfRange {
                name: "x",
                value: self.x,
                low: r.low,
                high: r.high,
            });
        }
        Ok(())
    }

    pub fn validate_informationally_complete(&self) -> Result<()> {
        self.validate()?;
        if !self.is_informationally_complete() {
            return Err(Error::NotInformationallyComplete {
                d: self.d,
                n: self.n,
                m: self.m,
            });
        }
        Ok(())
    }

    /// `Γ = (xM² - d)/(M(M-1))`, without range checks.
    pub fn gamma_value(&self) -> f64 {
        let (d, m) = (self.d as f64, self.m as f64);
        (self.x * m * m - d) / (m * (m - 1.0))
    }

    /// `γ = d(d-1)/(M(M-1))`, the factor shared by all eigenvalues of `SᵀS`.
    pub fn common_factor(&self) -> f64 {
        let (d, m) = (self.d as f64, self.m as f64);
        d * (d - 1.0) / (m * (m - 1.0))
    }

    /// `x̃ = xM²/d²`.
    pub fn scaled_x(&self) -> f64 {
        let (d, m) = (self.d as f64, self.m as f64);
        self.x * m * m / (d * d)
    }
}

/// `Γ` for `x` in `[d/M², x_max]`; the lower boundary is admitted and gives 0.
pub fn gamma(spec: &NmPovmSpec) -> Result<f64> {
    let r = spec.x_range();
    if !(spec.x >= r.low && spec.x <= r.high) || spec.m < 2 {
        return Err(Error::OutOfRange {
            name: "x",
            value: spec.x,
            low: r.low,
            high: r.high,
        });
    }
    Ok(spec.gamma_value())
}

pub fn scaled_x(spec: &NmPovmSpec) -> f64 {
    spec.scaled_x()
}

/// Spectrum of `SᵀS` in descending order: `dN/M` once, `Γ` with multiplicity
/// `N(M-1)`, and `0` with multiplicity `N-1` (absent for `N = 1`).
pub fn sts_spectrum(spec: &NmPovmSpec) -> Vec<f64> {
    let (n, m) = (spec.n, spec.m);
    let top = spec.d as f64 * n as f64 / m as f64;
    let g = spec.gamma_value();
    let mut out = Vec::with_capacity(n * m);
    out.push(top);
    out.extend(std::iter::repeat_n(g, n * (m - 1)));
    out.extend(std::iter::repeat_n(0.0, n - 1));
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Eigenvectors, eigenvalues and rotation defining the expansion map `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenFrame {
    /// `NM × d²`, orthonormal columns.
    pub vectors: DMatrix<f64>,
    /// `d²` nonzero eigenvalues of `SᵀS`, matching the columns of `vectors`.
    pub eigenvalues: Vec<f64>,
    /// `d² × d²` orthogonal rotation `1 ⊕ O′`.
    pub rotation: DMatrix<f64>,
}

impl EigenFrame {
    /// `S̃ = √Λ Xᵀ` (`d² × NM`).
    pub fn s_tilde(&self) -> DMatrix<f64> {
        let mut s = self.vectors.transpose();
        for (mut row, lam) in s.row_iter_mut().zip(&self.eigenvalues) {
            row *= lam.max(0.0).sqrt();
        }
        s
    }

    /// `S = Oᵀ S̃`, the coefficients in the unrotated basis.
    pub fn s(&self) -> DMatrix<f64> {
        self.rotation.transpose() * self.s_tilde()
    }
}

/// Orthonormal Helmert contrasts of length `m`: vector `k` (1-based) has
/// `1/√(k(k+1))` in its first `k` slots and `-k/√(k(k+1))` in slot `k`.
fn helmert(m: usize) -> Vec<Vec<f64>> {
    (1..m)
        .map(|k| {
            let norm = ((k * (k + 1)) as f64).sqrt();
            (0..m)
                .map(|i| match i.cmp(&k) {
                    std::cmp::Ordering::Less => 1.0 / norm,
                    std::cmp::Ordering::Equal => -(k as f64) / norm,
                    std::cmp::Ordering::Greater => 0.0,
                })
                .collect()
        })
        .collect()
}

fn block_rotation(dim_sq: usize, o_prime: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    let mut o = DMatrix::<f64>::identity(dim_sq, dim_sq);
    if let Some(op) = o_prime {
        if op.nrows() != dim_sq - 1 || op.ncols() != dim_sq - 1 {
            return Err(Error::DimensionMismatch {
                expected: dim_sq - 1,
                found: op.nrows().max(op.ncols()),
            });
        }
        let deviation = orthogonality_deviation(op);
        if deviation > Tolerances::default().orthogonality {
            return Err(Error::NotOrthogonal { deviation });
        }
        o.view_mut((1, 1), (dim_sq - 1, dim_sq - 1)).copy_from(op);
    }
    Ok(o)
}

/// Assembles the eigenframe for an informationally complete spec.
pub fn build_eigframe(spec: &NmPovmSpec, o_prime: Option<&DMatrix<f64>>) -> Result<EigenFrame> {
    if spec.m < 2 || !spec.is_informationally_complete() {
        return Err(Error::NotInformationallyComplete {
            d: spec.d,
            n: spec.n,
            m: spec.m,
        });
    }
    let (n, m) = (spec.n, spec.m);
    let dim_sq = spec.d * spec.d;
    let nm = n * m;

    let mut vectors = DMatrix::<f64>::zeros(nm, dim_sq);
    vectors.column_mut(0).fill(1.0 / (nm as f64).sqrt());
    let contrasts = helmert(m);
    for alpha in 0..n {
        for (k, h) in contrasts.iter().enumerate() {
            let col = 1 + alpha * (m - 1) + k;
            for (a, v) in h.iter().enumerate() {
                vectors[(alpha * m + a, col)] = *v;
            }
        }
    }

    let mut eigenvalues = vec![spec.gamma_value(); dim_sq];
    eigenvalues[0] = spec.d as f64 * n as f64 / m as f64;

    Ok(EigenFrame {
        vectors,
        eigenvalues,
        rotation: block_rotation(dim_sq, o_prime)?,
    })
}

/// Haar-distributed orthogonal `n × n` matrix (QR of a Gaussian matrix with
/// the sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// An (N,M)-POVM: its parameters, the optional construction frame, and the
/// `NM` elements.
#[derive(Clone, Debug, PartialEq)]
pub struct NmPovm {
    spec: NmPovmSpec,
    frame: Option<EigenFrame>,
    elements: Vec<HermitianOp>,
}

impl NmPovm {
    /// Wraps an explicit element list (e.g. a known MUB construction). Only
    /// shapes are checked; use [`validate_povm`] for the axioms.
    pub fn from_elements(spec: NmPovmSpec, elements: Vec<HermitianOp>) -> Result<Self> {
        spec.validate()?;
        if elements.len() != spec.n * spec.m {
            return Err(Error::DimensionMismatch {
                expected: spec.n * spec.m,
                found: elements.len(),
            });
        }
        if let Some(e) = elements.iter().find(|e| e.dim() != spec.d) {
            return Err(Error::DimensionMismatch {
                expected: spec.d,
                found: e.dim(),
            });
        }
        Ok(Self {
            spec,
            frame: None,
            elements,
        })
    }

    pub fn spec(&self) -> &NmPovmSpec {
        &self.spec
    }

    pub fn frame(&self) -> Option<&EigenFrame> {
        self.frame.as_ref()
    }

    pub fn elements(&self) -> &[HermitianOp] {
        &self.elements
    }

    pub fn element(&self, alpha: usize, a: usize) -> &HermitianOp {
        &self.elements[alpha * self.spec.m + a]
    }

    /// `S_μi = Tr{G_μ Π_i}` in the given basis (`d² × NM`).
    pub fn expansion_matrix(&self, basis: &LooBasis) -> Result<DMatrix<f64>> {
        if basis.dim() != self.spec.d {
            return Err(Error::DimensionMismatch {
                expected: self.spec.d,
                found: basis.dim(),
            });
        }
        Ok(DMatrix::from_fn(basis.len(), self.elements.len(), |mu, i| {
            hs_inner_unchecked(basis.ops()[mu].matrix(), self.elements[i].matrix())
        }))
    }
}

/// Elements `Π_i = I/M + √Γ T_i` decomposed into the `x`-independent traceless
/// parts `T_i = Σ_{ν≥1} X_iν G̃_ν`.
fn traceless_parts(spec: &NmPovmSpec, frame: &EigenFrame) -> Result<Vec<HermitianOp>> {
    let rotated = rotate_basis(&gell_mann_basis(spec.d)?, &frame.rotation)?;
    let dim_sq = spec.d * spec.d;
    let parts = (0..spec.n * spec.m)
        .map(|i| {
            let mut coords = vec![0.0; dim_sq];
            for (nu, c) in coords.iter_mut().enumerate().skip(1) {
                *c = frame.vectors[(i, nu)];
            }
            rotated.combine(&coords)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts)
}

/// Builds the POVM `Π = G̃ᵀ S̃` in the canonical Gell-Mann basis rotated by
/// `1 ⊕ O′` and checks the axioms and positivity.
pub fn build_povm(spec: &NmPovmSpec, o_prime: Option<&DMatrix<f64>>) -> Result<NmPovm> {
    spec.validate_informationally_complete()?;
    let frame = build_eigframe(spec, o_prime)?;
    let s_tilde = frame.s_tilde();
    let rotated = rotate_basis(&gell_mann_basis(spec.d)?, &frame.rotation)?;

    let elements = (0..spec.n * spec.m)
        .map(|i| {
            let coords: Vec<f64> = s_tilde.column(i).iter().copied().collect();
            rotated
                .combine(&coords)
                .map(|op| HermitianOp::symmetrize_square(op.into_matrix()))
        })
        .collect::<Result<Vec<_>>>()?;

    for (index, e) in elements.iter().enumerate() {
        let min = min_eigenvalue(e)?;
        if min < Tolerances::default().psd {
            return Err(Error::PositivityViolation {
                index,
                min_eigenvalue: min,
                x: spec.x,
            });
        }
    }

    let povm = NmPovm {
        spec: *spec,
        frame: Some(frame),
        elements,
    };
    let report = validate_povm(&povm);
    if report.max_axiom_deviation() > AXIOM_TOLERANCE {
        return Err(Error::Decomposition("POVM axioms violated after construction"));
    }
    Ok(povm)
}

/// Largest `x` for which [`build_povm`] yields positive elements with the
/// given frame, capped at the algebraic maximum.
///
/// Positivity of `I/M + √Γ T_i` fails first where `√Γ |λ_min(T_i)| = 1/M`,
/// so the boundary is found in closed form from the traceless parts.
pub fn max_feasible_x(d: usize, n: usize, m: usize, o_prime: Option<&DMatrix<f64>>) -> Result<f64> {
    let range = feasible_x_range(d, n, m);
    let probe = NmPovmSpec::new(d, n, m, range.high);
    let frame = build_eigframe(&probe, o_prime)?;
    let mut gamma_cap = f64::INFINITY;
    for t in traceless_parts(&probe, &frame)? {
        let lo = min_eigenvalue(&t)?;
        if lo < 0.0 {
            gamma_cap = gamma_cap.min((1.0 / (m as f64 * lo)).powi(2));
        }
    }
    let (df, mf) = (d as f64, m as f64);
    let x_cap = (gamma_cap * mf * (mf - 1.0) + df) / (mf * mf);
    Ok(x_cap.min(range.high))
}

/// Residuals of each defining relation of an (N,M)-POVM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PovmValidation {
    /// Max entry of `|Σ_a Π_(α,a) - I|` over α.
    pub completeness: f64,
    /// Max `|Tr Π_i - d/M|`.
    pub trace: f64,
    /// Max deviation of `Tr{Π_(α,a) Π_(α,a′)}` from `x δ + (1-δ)(d-Mx)/(M(M-1))`.
    pub same_povm_overlap: f64,
    /// Max `|Tr{Π_(α,a) Π_(β,b)} - d/M²|` for `α ≠ β`; `None` when `N = 1`.
    pub cross_povm_overlap: Option<f64>,
    /// Smallest eigenvalue over all elements.
    pub min_eigenvalue: f64,
}

impl PovmValidation {
    pub fn max_axiom_deviation(&self) -> f64 {
        self.completeness
            .max(self.trace)
            .max(self.same_povm_overlap)
            .max(self.cross_povm_overlap.unwrap_or(0.0))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_axiom_deviation() <= tol && self.min_eigenvalue >= -tol
    }
}

pub fn validate_povm(povm: &NmPovm) -> PovmValidation {
    let NmPovmSpec { d, n, m, x } = povm.spec;
    let (df, mf) = (d as f64, m as f64);
    let el = &povm.elements;

    let identity = CMatrix::identity(d, d);
    let mut completeness = 0.0_f64;
    for alpha in 0..n {
        let mut sum = CMatrix::zeros(d, d);
        for a in 0..m {
            sum += el[alpha * m + a].matrix();
        }
        completeness = completeness.max((sum - &identity).camax());
    }

    let trace = el
        .iter()
        .map(|e| (e.trace() - df / mf).abs())
        .fold(0.0, f64::max);

    let off = (df - mf * x) / (mf * (mf - 1.0));
    let mut same = 0.0_f64;
    let mut cross = 0.0_f64;
    for i in 0..el.len() {
        for j in i..el.len() {
            let ov = hs_inner_unchecked(el[i].matrix(), el[j].matrix());
            if i / m == j / m {
                let target = if i == j { x } else { off };
                same = same.max((ov - target).abs());
            } else {
                cross = cross.max((ov - df / (mf * mf)).abs());
            }
        }
    }

    let min_eigenvalue = el
        .iter()
        .map(|e| min_eigenvalue(e).unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);

    PovmValidation {
        completeness,
        trace,
        same_povm_overlap: same,
        cross_povm_overlap: (n >= 2).then_some(cross),
        min_eigenvalue,
    }
}

/// JSON form of a POVM: parameters, optional `O′` (rows), and elements as
/// row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmFile {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub o_prime: Option<Vec<Vec<f64>>>,
    pub elements: Vec<Vec<[f64; 2]>>,
}

pub(crate) fn matrix_to_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    (0..m.nrows())
        .flat_map(|r| (0..m.ncols()).map(move |c| [m[(r, c)].re, m[(r, c)].im]))
        .collect()
}

pub(crate) fn pairs_to_matrix(dim: usize, pairs: &[[f64; 2]]) -> Result<CMatrix> {
    if pairs.len() != dim * dim {
        return Err(Error::Format(format!(
            "expected {} [re, im] entries for a {dim}x{dim} matrix, got {}",
            dim * dim,
            pairs.len()
        )));
    }
    Ok(CMatrix::from_fn(dim, dim, |r, c| {
        let [re, im] = pairs[r * dim + c];
        C64::new(re, im)
    }))
}

impl NmPovm {
    pub fn to_file(&self) -> PovmFile {
        let o_prime = self.frame.as_ref().and_then(|f| {
            let k = f.rotation.nrows();
            let sub = f.rotation.view((1, 1), (k - 1, k - 1)).into_owned();
            (sub != DMatrix::identity(k - 1, k - 1))
                .then(|| sub.row_iter().map(|r| r.iter().copied().collect()).collect())
        });
        PovmFile {
            d: self.spec.d,
            n: self.spec.n,
            m: self.spec.m,
            x: self.spec.x,
            o_prime,
            elements: self.elements.iter().map(|e| matrix_to_pairs(e.matrix())).collect(),
        }
    }

    /// Reads an element list and validates it against the POVM axioms.
    pub fn from_file(file: &PovmFile) -> Result<Self> {
        let spec = NmPovmSpec::new(file.d, file.n, file.m, file.x);
        let elements = file
            .elements
            .iter()
            .map(|p| HermitianOp::new(pairs_to_matrix(file.d, p)?))
            .collect::<Result<Vec<_>>>()?;
        let mut povm = Self::from_elements(spec, elements)?;
        if let Some(rows) = &file.o_prime {
            let k = rows.len();
            if rows.iter().any(|r| r.len() != k) {
                return Err(Error::Format("o_prime must be square".into()));
            }
            let op = DMatrix::from_fn(k, k, |r, c| rows[r][c]);
            if spec.is_informationally_complete() {
                povm.frame = Some(build_eigframe(&spec, Some(&op))?);
            }
        }
        let report = validate_povm(&povm);
        if !report.passes(AXIOM_TOLERANCE) {
            return Err(Error::Format(format!(
                "element list violates POVM axioms: {report:?}"
            )));
        }
        Ok(povm)
    }
}
