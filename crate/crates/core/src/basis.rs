//! Local orthonormal Hermitian operator (LOO) bases.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    hermiticity_deviation, hs_inner_unchecked, orthogonality_deviation, CMatrix, HermitianOp,
    Tolerances, C64,
};

/// An ordered list of `d²` Hermitian operators, orthonormal under the
/// Hilbert–Schmidt product, with `ops[0] = 1/√d`.
#[derive(Clone, Debug, PartialEq)]
pub struct LooBasis {
    dim: usize,
    ops: Vec<HermitianOp>,
}

impl LooBasis {
    /// Builds a basis and checks the orthonormality and canonical-form invariants.
    pub fn new(dim: usize, ops: Vec<HermitianOp>) -> Result<Self> {
        let basis = Self::new_unchecked(dim, ops)?;
        let report = validate_loo(&basis);
        if !report.passes(1e-12) {
            return Err(Error::Config(format!(
                "not a canonical LOO basis (gram {:e}, identity {:e})",
                report.gram_deviation, report.identity_deviation
            )));
        }
        Ok(basis)
    }

    /// Only shape checks; use [`validate_loo`] to inspect the rest.
    pub fn new_unchecked(dim: usize, ops: Vec<HermitianOp>) -> Result<Self> {
        if ops.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: ops.len(),
            });
        }
        if let Some(op) = ops.iter().find(|op| op.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: op.dim(),
            });
        }
        Ok(Self { dim, ops })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[HermitianOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Expansion coefficients `Tr{G_μ A}`.
    pub fn coordinates(&self, op: &HermitianOp) -> Result<DVector<f64>> {
        if op.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: op.dim(),
            });
        }
        Ok(DVector::from_iterator(
            self.ops.len(),
            self.ops
                .iter()
                .map(|g| hs_inner_unchecked(g.matrix(), op.matrix())),
        ))
    }

    /// `Σ_μ c_μ G_μ`.
    pub fn combine(&self, coords: &[f64]) -> Result<HermitianOp> {
        if coords.len() != self.ops.len() {
            return Err(Error::DimensionMismatch {
                expected: self.ops.len(),
                found: coords.len(),
            });
        }
        let mut out = HermitianOp::zeros(self.dim);
        for (c, g) in coords.iter().zip(&self.ops) {
            if *c != 0.0 {
                out.add_scaled(*c, g);
            }
        }
        Ok(out)
    }
}

/// Canonical generalized Gell-Mann basis, normalized to unit HS norm.
///
/// Order: `1/√d`, then the symmetric operators `(E_jk + E_kj)/√2` and the
/// antisymmetric operators `(-i E_jk + i E_kj)/√2` for `j < k` in
/// lexicographic order, then the diagonal operators
/// `diag(1, …, 1, -l, 0, …)/√(l(l+1))` for `l = 1..d-1`.
pub fn gell_mann_basis(d: usize) -> Result<LooBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "LOO basis needs d >= 2, got {d}"
        )));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut ops = Vec::with_capacity(d * d);
    ops.push(HermitianOp::identity(d).scaled(1.0 / (d as f64).sqrt()));

    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .collect();
    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(d, d);
        m[(j, k)] = C64::new(r, 0.0);
        m[(k, j)] = C64::new(r, 0.0);
        ops.push(HermitianOp::symmetrized(m)?);
    }
    for &(j, k) in &pairs {
        let mut m = CMatrix::zeros(d, d);
        m[(j, k)] = C64::new(0.0, -r);
        m[(k, j)] = C64::new(0.0, r);
        ops.push(HermitianOp::symmetrized(m)?);
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let diag: Vec<f64> = (0..d)
            .map(|i| match i.cmp(&l) {
                std::cmp::Ordering::Less => 1.0 / norm,
                std::cmp::Ordering::Equal => -(l as f64) / norm,
                std::cmp::Ordering::Greater => 0.0,
            })
            .collect();
        ops.push(HermitianOp::from_real_diagonal(&diag));
    }
    Ok(LooBasis { dim: d, ops })
}

/// New basis `G̃_μ = Σ_ν O_μν G_ν` for a real orthogonal `d²×d²` matrix `O`.
pub fn rotate_basis(basis: &LooBasis, o: &DMatrix<f64>) -> Result<LooBasis> {
    let n = basis.len();
    if o.nrows() != n || o.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: o.nrows().max(o.ncols()),
        });
    }
    let deviation = orthogonality_deviation(o);
    if deviation > Tolerances::default().orthogonality {
        return Err(Error::NotOrthogonal { deviation });
    }
    let ops = (0..n)
        .map(|mu| {
            let row: Vec<f64> = o.row(mu).iter().copied().collect();
            basis.combine(&row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LooBasis {
        dim: basis.dim,
        ops,
    })
}

/// Deviations of a candidate basis from the LOO invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LooValidation {
    /// Max `|Tr{G_μ G_ν} - δ_μν|`.
    pub gram_deviation: f64,
    /// Max `|G - G†|` over all operators.
    pub hermiticity_deviation: f64,
    /// Max of `|G_0 - 1/√d|` and `|Tr G_ν|` for `ν ≥ 1`.
    pub identity_deviation: f64,
}

impl LooValidation {
    pub fn passes(&self, tol: f64) -> bool {
        self.gram_deviation <= tol
            && self.hermiticity_deviation <= tol
            && self.identity_deviation <= tol
    }
}

pub fn validate_loo(basis: &LooBasis) -> LooValidation {
    let d = basis.dim;
    let ops = &basis.ops;
    let mut gram_deviation = 0.0_f64;
    for (mu, a) in ops.iter().enumerate() {
        for (nu, b) in ops.iter().enumerate().skip(mu) {
            let target = if mu == nu { 1.0 } else { 0.0 };
            let g = hs_inner_unchecked(a.matrix(), b.matrix());
            gram_deviation = gram_deviation.max((g - target).abs());
        }
    }
    let hermiticity_deviation = ops
        .iter()
        .map(|g| hermiticity_deviation(g.matrix()))
        .fold(0.0, f64::max);

    let mut identity_deviation = match ops.first() {
        Some(g0) => {
            let target = CMatrix::identity(d, d) * C64::new(1.0 / (d as f64).sqrt(), 0.0);
            (g0.matrix() - target).camax()
        }
        None => f64::INFINITY,
    };
    for g in ops.iter().skip(1) {
        identity_deviation = identity_deviation.max(g.trace().abs());
    }
    LooValidation {
        gram_deviation,
        hermiticity_deviation,
        identity_deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DensityMatrix;
    use approx::assert_abs_diff_eq;

    #[test]
    fn qubit_basis_is_normalized_paulis() {
        let b = gell_mann_basis(2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [
            [(r, 0.), (0., 0.), (0., 0.), (r, 0.)],
            [(0., 0.), (r, 0.), (r, 0.), (0., 0.)],
            [(0., 0.), (0., -r), (0., r), (0., 0.)],
            [(r, 0.), (0., 0.), (0., 0.), (-r, 0.)],
        ];
        for (op, e) in b.ops().iter().zip(expect) {
            let want = CMatrix::from_row_slice(2, 2, &e.map(|(re, im)| C64::new(re, im)));
            assert!((op.matrix() - want).camax() < 1e-15);
        }
        assert!(validate_loo(&b).passes(1e-12));
    }

    #[test]
    fn gram_identity_up_to_d5() {
        for d in 2..=5 {
            let b = gell_mann_basis(d).unwrap();
            assert_eq!(b.len(), d * d);
            let v = validate_loo(&b);
            assert!(v.passes(1e-12), "d={d}: {v:?}");
            assert_abs_diff_eq!(b.ops()[0].trace(), (d as f64).sqrt(), epsilon = 1e-12);
        }
        assert!(gell_mann_basis(1).is_err());
    }

    #[test]
    fn scaled_operator_shows_gram_deviation_three() {
        let mut ops = gell_mann_basis(2).unwrap().ops().to_vec();
        ops[1] = ops[1].scaled(2.0);
        let b = LooBasis::new_unchecked(2, ops).unwrap();
        assert_abs_diff_eq!(validate_loo(&b).gram_deviation, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn missing_identity_direction_is_reported() {
        let mut ops = gell_mann_basis(2).unwrap().ops().to_vec();
        ops.swap(0, 3);
        let b = LooBasis::new_unchecked(2, ops).unwrap();
        let v = validate_loo(&b);
        assert!(v.identity_deviation > 0.5);
        assert!(v.gram_deviation < 1e-12);
        assert!(LooBasis::new(2, b.ops().to_vec()).is_err());
    }

    #[test]
    fn rotation_by_identity_and_block_orthogonal() {
        let b = gell_mann_basis(3).unwrap();
        assert_eq!(rotate_basis(&b, &DMatrix::identity(9, 9)).unwrap(), b);

        // 1 ⊕ (Givens rotation on coordinates 1, 2)
        let (s, c) = 0.3_f64.sin_cos();
        let mut o = DMatrix::<f64>::identity(9, 9);
        o[(1, 1)] = c;
        o[(1, 2)] = -s;
        o[(2, 1)] = s;
        o[(2, 2)] = c;
        let rb = rotate_basis(&b, &o).unwrap();
        assert!(validate_loo(&rb).passes(1e-12));
        assert!((rb.ops()[0].matrix() - b.ops()[0].matrix()).camax() < 1e-15);

        let mut bad = DMatrix::<f64>::identity(9, 9);
        bad[(0, 1)] = 0.1;
        assert!(matches!(rotate_basis(&b, &bad), Err(Error::NotOrthogonal { .. })));
    }

    #[test]
    fn parseval_over_basis() {
        let b = gell_mann_basis(3).unwrap();
        let rho = DensityMatrix::single(HermitianOp::from_real_diagonal(&[0.5, 0.3, 0.2])).unwrap();
        let coords = b.coordinates(rho.op()).unwrap();
        assert_abs_diff_eq!(coords.norm_squared(), crate::linalg::purity(&rho), epsilon = 1e-12);
        let back = b.combine(coords.as_slice()).unwrap();
        assert!((back.matrix() - rho.matrix()).camax() < 1e-14);
    }
}
