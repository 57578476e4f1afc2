//! Sufficient conditions for bipartite entanglement from local measurements.
//!
//! Every evaluation returns a [`CriterionReport`] carrying both sides of the
//! inequality and the intermediate bound components. Detection is strict:
//! `lhs > rhs` with no tolerance.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{gell_mann_basis, LooBasis};
use crate::error::{Error, Result};
use crate::linalg::{
    hs_inner_unchecked, min_eigenvalue, partial_trace, partial_transpose, purity, trace_norm,
    CMatrix, DensityMatrix, HermitianOp, Subsystem, C64,
};
use crate::povm::NmPovm;

/// NPT detection threshold on the minimum partial-transpose eigenvalue.
pub const NPT_THRESHOLD: f64 = -1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CriterionId {
    #[serde(rename = "LOO")]
    Loo,
    #[serde(rename = "POVM_CORR")]
    PovmCorr,
    #[serde(rename = "JOINT_PURITY")]
    JointPurity,
    #[serde(rename = "JOINT_PURITY_FREE")]
    JointPurityFree,
    #[serde(rename = "RESCALED")]
    Rescaled,
    #[serde(rename = "NPT")]
    Npt,
}

impl CriterionId {
    pub const ALL: [CriterionId; 6] = [
        CriterionId::Npt,
        CriterionId::Loo,
        CriterionId::PovmCorr,
        CriterionId::JointPurity,
        CriterionId::JointPurityFree,
        CriterionId::Rescaled,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CriterionId::Loo => "LOO",
            CriterionId::PovmCorr => "POVM_CORR",
            CriterionId::JointPurity => "JOINT_PURITY",
            CriterionId::JointPurityFree => "JOINT_PURITY_FREE",
            CriterionId::Rescaled => "RESCALED",
            CriterionId::Npt => "NPT",
        }
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionId {
    type Err = Error;

    /// Accepts the canonical ids and the table labels `SIC1`/`SIC2`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "LOO" => Ok(CriterionId::Loo),
            "POVM_CORR" => Ok(CriterionId::PovmCorr),
            "JOINT_PURITY" | "SIC2" => Ok(CriterionId::JointPurity),
            "JOINT_PURITY_FREE" | "SIC1" => Ok(CriterionId::JointPurityFree),
            "RESCALED" => Ok(CriterionId::Rescaled),
            "NPT" => Ok(CriterionId::Npt),
            other => Err(Error::Config(format!("unknown criterion '{other}'"))),
        }
    }
}

/// Outcome of one criterion on one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion_id: CriterionId,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub detected: bool,
    pub auxiliary: BTreeMap<String, f64>,
}

impl CriterionReport {
    fn inequality(criterion_id: CriterionId, lhs: f64, rhs: f64, aux: &[(&str, f64)]) -> Self {
        let margin = lhs - rhs;
        Self {
            criterion_id,
            lhs,
            rhs,
            margin,
            detected: margin > 0.0,
            auxiliary: aux.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

/// `E_ij = Tr{A_i ⊗ B_j ρ}`.
pub fn expectation_matrix(
    rho: &DensityMatrix,
    a_ops: &[HermitianOp],
    b_ops: &[HermitianOp],
) -> Result<DMatrix<f64>> {
    let (da, db) = rho.dims();
    if let Some(op) = a_ops.iter().find(|op| op.dim() != da) {
        return Err(Error::DimensionMismatch {
            expected: da,
            found: op.dim(),
        });
    }
    if let Some(op) = b_ops.iter().find(|op| op.dim() != db) {
        return Err(Error::DimensionMismatch {
            expected: db,
            found: op.dim(),
        });
    }
    let m = rho.matrix();
    let mut out = DMatrix::<f64>::zeros(a_ops.len(), b_ops.len());
    for (i, a_op) in a_ops.iter().enumerate() {
        // Y = Tr_A{(A ⊗ 1) ρ}, so that Tr{(A ⊗ B) ρ} = Tr{B Y}.
        let am = a_op.matrix();
        let mut y = CMatrix::zeros(db, db);
        for a in 0..da {
            for a2 in 0..da {
                let coef = am[(a, a2)];
                if coef == C64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..db {
                    for b2 in 0..db {
                        y[(b2, b)] += coef * m[(a2 * db + b2, a * db + b)];
                    }
                }
            }
        }
        // Tr{B Y} = Σ conj(B_kl) Y_kl for Hermitian B.
        for (j, b_op) in b_ops.iter().enumerate() {
            out[(i, j)] = hs_inner_unchecked(b_op.matrix(), &y);
        }
    }
    Ok(out)
}

fn local_expectations(rho_local: &DensityMatrix, ops: &[HermitianOp]) -> DVector<f64> {
    DVector::from_iterator(
        ops.len(),
        ops.iter()
            .map(|op| hs_inner_unchecked(op.matrix(), rho_local.matrix())),
    )
}

/// `C_ij = Tr{A_i ⊗ B_j (ρ - ρ^A ⊗ ρ^B)}`.
pub fn correlation_matrix(
    rho: &DensityMatrix,
    a_ops: &[HermitianOp],
    b_ops: &[HermitianOp],
) -> Result<DMatrix<f64>> {
    let joint = expectation_matrix(rho, a_ops, b_ops)?;
    let pa = local_expectations(&partial_trace(rho, Subsystem::A), a_ops);
    let pb = local_expectations(&partial_trace(rho, Subsystem::B), b_ops);
    Ok(joint - pa * pb.transpose())
}

/// Expectation data of a state in a pair of canonical LOO bases, shared by
/// the LOO and rescaled joint-probability criteria.
#[derive(Clone, Debug)]
pub struct LocalCorrelations {
    dims: (usize, usize),
    /// `Tr{G^A_μ ⊗ G^B_ν ρ}`.
    pub joint: DMatrix<f64>,
    /// `Tr{G^A_μ ρ^A}`.
    pub local_a: DVector<f64>,
    /// `Tr{G^B_ν ρ^B}`.
    pub local_b: DVector<f64>,
    pub purity_a: f64,
    pub purity_b: f64,
}

impl LocalCorrelations {
    pub fn new(rho: &DensityMatrix, basis_a: &LooBasis, basis_b: &LooBasis) -> Result<Self> {
        let joint = expectation_matrix(rho, basis_a.ops(), basis_b.ops())?;
        let ra = partial_trace(rho, Subsystem::A);
        let rb = partial_trace(rho, Subsystem::B);
        Ok(Self {
            dims: rho.dims(),
            joint,
            local_a: local_expectations(&ra, basis_a.ops()),
            local_b: local_expectations(&rb, basis_b.ops()),
            purity_a: purity(&ra),
            purity_b: purity(&rb),
        })
    }

    /// `C(G^A, G^B | ρ)`.
    pub fn correlation(&self) -> DMatrix<f64> {
        &self.joint - &self.local_a * self.local_b.transpose()
    }

    pub fn loo_report(&self) -> Result<CriterionReport> {
        let norm = trace_norm(&self.correlation())?;
        let rhs = (1.0 - self.purity_a) * (1.0 - self.purity_b);
        Ok(CriterionReport::inequality(
            CriterionId::Loo,
            norm * norm,
            rhs,
            &[
                ("trace_norm", norm),
                ("purity_a", self.purity_a),
                ("purity_b", self.purity_b),
                ("sigma_a", 1.0 - self.purity_a),
                ("sigma_b", 1.0 - self.purity_b),
            ],
        ))
    }

    pub fn rescaled_report(
        &self,
        x_tilde_a: f64,
        x_tilde_b: f64,
        variant: RescaledVariant,
    ) -> Result<CriterionReport> {
        let (da, db) = self.dims;
        let wa = rescaled_weights(da, x_tilde_a, "x_tilde_a")?;
        let wb = rescaled_weights(db, x_tilde_b, "x_tilde_b")?;
        let scaled = DMatrix::from_fn(self.joint.nrows(), self.joint.ncols(), |i, j| {
            self.joint[(i, j)] * (wa[i] * wb[j]).sqrt()
        });
        let lhs = trace_norm(&scaled)?;

        let sigma = |w: f64, p: f64| w * (1.0 - p);
        let u = |d: usize, w: f64, p: f64| p * w + ((d as f64 + 1.0) - w) / d as f64;
        let (sa, sb) = (sigma(wa[1], self.purity_a), sigma(wb[1], self.purity_b));
        let (ua, ub) = (u(da, wa[1], self.purity_a), u(db, wb[1], self.purity_b));
        let rhs = match variant {
            RescaledVariant::Purity => (sa * sb).sqrt() + (ua * ub).sqrt(),
            RescaledVariant::PurityFree => ((1.0 + x_tilde_a) * (1.0 + x_tilde_b)).sqrt(),
        };
        Ok(CriterionReport::inequality(
            CriterionId::Rescaled,
            lhs,
            rhs,
            &[
                ("x_tilde_a", x_tilde_a),
                ("x_tilde_b", x_tilde_b),
                ("purity_dependent", matches!(variant, RescaledVariant::Purity) as u8 as f64),
                ("sigma_a", sa),
                ("sigma_b", sb),
                ("u_a", ua),
                ("u_b", ub),
                ("purity_a", self.purity_a),
                ("purity_b", self.purity_b),
            ],
        ))
    }
}

/// Diagonal of `Λ/γ` in the canonical basis: `d+1` on the identity direction
/// and `(d x̃ - 1)/(d - 1)` on the traceless directions.
fn rescaled_weights(d: usize, x_tilde: f64, name: &'static str) -> Result<Vec<f64>> {
    let df = d as f64;
    let low = 1.0 / df;
    if !(x_tilde > low && x_tilde <= 1.0) {
        return Err(Error::OutOfRange {
            name,
            value: x_tilde,
            low,
            high: 1.0,
        });
    }
    let mut w = vec![(df * x_tilde - 1.0) / (df - 1.0); d * d];
    w[0] = df + 1.0;
    Ok(w)
}

/// Which rescaled joint-probability inequality to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RescaledVariant {
    /// Rescaled `√(Σ_A Σ_B) + √(U_A U_B)` bound.
    Purity,
    /// Rescaled `√(1 + x̃_A) √(1 + x̃_B)` bound.
    PurityFree,
}

/// `‖C(G^A,G^B|ρ)‖₁² ≤ (1 - Tr{(ρ^A)²})(1 - Tr{(ρ^B)²})`.
pub fn loo_criterion(
    rho: &DensityMatrix,
    basis_a: &LooBasis,
    basis_b: &LooBasis,
) -> Result<CriterionReport> {
    LocalCorrelations::new(rho, basis_a, basis_b)?.loo_report()
}

struct PovmPairTerms {
    joint: DMatrix<f64>,
    local_a: DVector<f64>,
    local_b: DVector<f64>,
    purity_a: f64,
    purity_b: f64,
}

fn povm_pair_terms(rho: &DensityMatrix, pa: &NmPovm, pb: &NmPovm) -> Result<PovmPairTerms> {
    for p in [pa, pb] {
        let s = p.spec();
        if !s.is_informationally_complete() {
            return Err(Error::NotInformationallyComplete {
                d: s.d,
                n: s.n,
                m: s.m,
            });
        }
    }
    let joint = expectation_matrix(rho, pa.elements(), pb.elements())?;
    let ra = partial_trace(rho, Subsystem::A);
    let rb = partial_trace(rho, Subsystem::B);
    Ok(PovmPairTerms {
        joint,
        local_a: local_expectations(&ra, pa.elements()),
        local_b: local_expectations(&rb, pb.elements()),
        purity_a: purity(&ra),
        purity_b: purity(&rb),
    })
}

/// `P_ij = Tr{Π^A_i ⊗ Π^B_j ρ}`.
pub fn joint_probability(rho: &DensityMatrix, pa: &NmPovm, pb: &NmPovm) -> Result<DMatrix<f64>> {
    expectation_matrix(rho, pa.elements(), pb.elements())
}

/// `‖C(Π^A,Π^B|ρ)‖₁² ≤ Γ_A Γ_B (1 - Tr{(ρ^A)²})(1 - Tr{(ρ^B)²})`.
pub fn povm_correlation_criterion(
    rho: &DensityMatrix,
    pa: &NmPovm,
    pb: &NmPovm,
) -> Result<CriterionReport> {
    let t = povm_pair_terms(rho, pa, pb)?;
    let corr = &t.joint - &t.local_a * t.local_b.transpose();
    let norm = trace_norm(&corr)?;
    let (ga, gb) = (pa.spec().gamma_value(), pb.spec().gamma_value());
    let (sa, sb) = (ga * (1.0 - t.purity_a), gb * (1.0 - t.purity_b));
    Ok(CriterionReport::inequality(
        CriterionId::PovmCorr,
        norm * norm,
        sa * sb,
        &[
            ("trace_norm", norm),
            ("gamma_a", ga),
            ("gamma_b", gb),
            ("sigma_a", sa),
            ("sigma_b", sb),
            ("purity_a", t.purity_a),
            ("purity_b", t.purity_b),
        ],
    ))
}

/// `Σ = Γ(1 - purity)` and `U = purity·Γ + (dN/M - Γ)/d` for one side.
fn joint_bound_terms(p: &NmPovm, purity: f64) -> (f64, f64, f64) {
    let s = p.spec();
    let g = s.gamma_value();
    let d = s.d as f64;
    let sigma = g * (1.0 - purity);
    let u = purity * g + (d * s.n as f64 / s.m as f64 - g) / d;
    (g, sigma, u)
}

/// `‖P‖₁ ≤ √(Σ_A Σ_B) + √(U_A U_B)`.
pub fn joint_purity_criterion(
    rho: &DensityMatrix,
    pa: &NmPovm,
    pb: &NmPovm,
) -> Result<CriterionReport> {
    let t = povm_pair_terms(rho, pa, pb)?;
    let lhs = trace_norm(&t.joint)?;
    let (ga, sa, ua) = joint_bound_terms(pa, t.purity_a);
    let (gb, sb, ub) = joint_bound_terms(pb, t.purity_b);
    Ok(CriterionReport::inequality(
        CriterionId::JointPurity,
        lhs,
        (sa * sb).sqrt() + (ua * ub).sqrt(),
        &[
            ("gamma_a", ga),
            ("gamma_b", gb),
            ("sigma_a", sa),
            ("sigma_b", sb),
            ("u_a", ua),
            ("u_b", ub),
            ("purity_a", t.purity_a),
            ("purity_b", t.purity_b),
        ],
    ))
}

/// `‖P‖₁ ≤ √(Σ_A + U_A) √(Σ_B + U_B)` with `Σ + U = Γ(1 - 1/d) + N/M`.
pub fn joint_purity_free_criterion(
    rho: &DensityMatrix,
    pa: &NmPovm,
    pb: &NmPovm,
) -> Result<CriterionReport> {
    let t = povm_pair_terms(rho, pa, pb)?;
    let lhs = trace_norm(&t.joint)?;
    let side = |p: &NmPovm| {
        let s = p.spec();
        let g = s.gamma_value();
        (g, g * (1.0 - 1.0 / s.d as f64) + s.n as f64 / s.m as f64)
    };
    let (ga, ka) = side(pa);
    let (gb, kb) = side(pb);
    Ok(CriterionReport::inequality(
        CriterionId::JointPurityFree,
        lhs,
        (ka * kb).sqrt(),
        &[
            ("gamma_a", ga),
            ("gamma_b", gb),
            ("sigma_plus_u_a", ka),
            ("sigma_plus_u_b", kb),
        ],
    ))
}

/// The joint-probability inequalities in their rescaled form, which depend on
/// the POVMs only through `x̃_A`, `x̃_B`.
pub fn rescaled_joint_criterion(
    rho: &DensityMatrix,
    x_tilde_a: f64,
    x_tilde_b: f64,
    variant: RescaledVariant,
) -> Result<CriterionReport> {
    let (da, db) = rho.dims();
    let ba = gell_mann_basis(da)?;
    let bb = gell_mann_basis(db)?;
    LocalCorrelations::new(rho, &ba, &bb)?.rescaled_report(x_tilde_a, x_tilde_b, variant)
}

/// Negative partial transpose on subsystem A.
pub fn npt_criterion(rho: &DensityMatrix) -> Result<CriterionReport> {
    let min = min_eigenvalue(&partial_transpose(rho, Subsystem::A))?;
    Ok(CriterionReport {
        criterion_id: CriterionId::Npt,
        lhs: -min,
        rhs: 0.0,
        margin: -min,
        detected: min < NPT_THRESHOLD,
        auxiliary: [("min_eigenvalue".to_string(), min)].into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tensor;
    use crate::povm::{build_povm, NmPovmSpec};
    use approx::assert_abs_diff_eq;

    fn singlet_op() -> HermitianOp {
        let h = 0.5;
        let mut m = CMatrix::zeros(4, 4);
        m[(1, 1)] = C64::new(h, 0.0);
        m[(2, 2)] = C64::new(h, 0.0);
        m[(1, 2)] = C64::new(-h, 0.0);
        m[(2, 1)] = C64::new(-h, 0.0);
        HermitianOp::new(m).unwrap()
    }

    fn werner(p: f64) -> DensityMatrix {
        let mut op = HermitianOp::identity(4).scaled((1.0 - p) / 4.0);
        op.add_scaled(p, &singlet_op());
        DensityMatrix::new(op, (2, 2)).unwrap()
    }

    fn qubit_bases() -> (LooBasis, LooBasis) {
        (gell_mann_basis(2).unwrap(), gell_mann_basis(2).unwrap())
    }

    #[test]
    fn product_state_has_zero_correlation() {
        let ra = HermitianOp::from_real_diagonal(&[0.8, 0.2]);
        let rb = HermitianOp::from_real_diagonal(&[0.1, 0.6, 0.3]);
        let rho = DensityMatrix::new(tensor(&ra, &rb), (2, 3)).unwrap();
        let c = correlation_matrix(&rho, gell_mann_basis(2).unwrap().ops(), gell_mann_basis(3).unwrap().ops()).unwrap();
        assert!(c.camax() < 1e-15);
        let (ba, _) = qubit_bases();
        let r = loo_criterion(&rho, &ba, &gell_mann_basis(3).unwrap()).unwrap();
        assert!(r.lhs < 1e-28);
        assert!(!r.detected);
    }

    #[test]
    fn singlet_correlation_matrix() {
        let (ba, bb) = qubit_bases();
        let c = correlation_matrix(&werner(1.0), ba.ops(), bb.ops()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j && i > 0 { -0.5 } else { 0.0 };
                assert_abs_diff_eq!(c[(i, j)], want, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(trace_norm(&c).unwrap(), 1.5, epsilon = 1e-14);
        let cw = correlation_matrix(&werner(0.4), ba.ops(), bb.ops()).unwrap();
        assert_abs_diff_eq!(trace_norm(&cw).unwrap(), 0.6, epsilon = 1e-14);
    }

    #[test]
    fn loo_examples() {
        let (ba, bb) = qubit_bases();
        let r = loo_criterion(&werner(1.0), &ba, &bb).unwrap();
        assert_abs_diff_eq!(r.lhs, 2.25, epsilon = 1e-13);
        assert_abs_diff_eq!(r.rhs, 0.25, epsilon = 1e-14);
        assert!(r.detected);
        let t = loo_criterion(&werner(1.0 / 3.0), &ba, &bb).unwrap();
        assert_abs_diff_eq!(t.lhs, 0.25, epsilon = 1e-13);
        assert_abs_diff_eq!(t.rhs, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn sic_examples() {
        let sic = build_povm(&NmPovmSpec::sic(2), None).unwrap();
        let rho = werner(1.0);

        let r = povm_correlation_criterion(&rho, &sic, &sic).unwrap();
        assert_abs_diff_eq!(r.lhs, 0.0625, epsilon = 1e-13);
        assert_abs_diff_eq!(r.rhs, 0.25 / 36.0, epsilon = 1e-14);
        assert!(r.detected);

        let p = joint_probability(&rho, &sic, &sic).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.0 } else { 1.0 / 12.0 };
                assert_abs_diff_eq!(p[(i, j)], want, epsilon = 1e-14);
            }
        }
        assert_abs_diff_eq!(trace_norm(&p).unwrap(), 0.5, epsilon = 1e-13);

        let jp = joint_purity_criterion(&rho, &sic, &sic).unwrap();
        assert_abs_diff_eq!(jp.auxiliary["sigma_a"], 1.0 / 12.0, epsilon = 1e-14);
        assert_abs_diff_eq!(jp.auxiliary["u_b"], 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(jp.rhs, 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(jp.lhs, 0.5, epsilon = 1e-13);
        assert!(jp.detected);

        let jf = joint_purity_free_criterion(&rho, &sic, &sic).unwrap();
        assert_abs_diff_eq!(jf.auxiliary["sigma_plus_u_a"], 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(jf.rhs, 1.0 / 3.0, epsilon = 1e-14);
        assert!(jf.detected);

        let mixed = DensityMatrix::maximally_mixed((2, 2));
        let p = joint_probability(&mixed, &sic, &sic).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 16.0).abs() < 1e-15));
        let jp = joint_purity_criterion(&mixed, &sic, &sic).unwrap();
        assert_abs_diff_eq!(jp.lhs, 0.25, epsilon = 1e-14);
        assert!(!jp.detected);
        assert!(!joint_purity_free_criterion(&mixed, &sic, &sic).unwrap().detected);
    }

    #[test]
    fn pure_product_kills_sigma() {
        let sic = build_povm(&NmPovmSpec::sic(2), None).unwrap();
        let up = HermitianOp::from_real_diagonal(&[1.0, 0.0]);
        let rho = DensityMatrix::new(tensor(&up, &up), (2, 2)).unwrap();
        let r = joint_purity_criterion(&rho, &sic, &sic).unwrap();
        assert_abs_diff_eq!(r.auxiliary["sigma_a"], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.auxiliary["sigma_b"], 0.0, epsilon = 1e-14);
        let u = (r.auxiliary["u_a"] * r.auxiliary["u_b"]).sqrt();
        assert_abs_diff_eq!(r.rhs, u, epsilon = 1e-14);
        assert_abs_diff_eq!(r.lhs, u, epsilon = 1e-12);
    }

    #[test]
    fn rescaled_matches_sic_on_singlet() {
        let rho = werner(1.0);
        let r = rescaled_joint_criterion(&rho, 1.0, 1.0, RescaledVariant::PurityFree).unwrap();
        assert_abs_diff_eq!(r.rhs, 2.0, epsilon = 1e-15);
        // lhs scales by 1/√(γ_A γ_B) = 6 relative to the element-level ‖P‖₁
        assert_abs_diff_eq!(r.lhs, 3.0, epsilon = 1e-12);
        assert!(r.detected);

        let rp = rescaled_joint_criterion(&rho, 1.0, 1.0, RescaledVariant::Purity).unwrap();
        assert_abs_diff_eq!(rp.rhs, 2.0, epsilon = 1e-14);

        assert!(rescaled_joint_criterion(&rho, 0.5, 1.0, RescaledVariant::PurityFree).is_err());
        assert!(rescaled_joint_criterion(&rho, 1.01, 1.0, RescaledVariant::PurityFree).is_err());
        let w = rescaled_weights(3, 1.0 / 3.0 + 1e-15, "x").unwrap();
        assert!(w[1] < 1e-14);
    }

    #[test]
    fn npt_examples() {
        let r = npt_criterion(&werner(1.0)).unwrap();
        assert_abs_diff_eq!(r.auxiliary["min_eigenvalue"], -0.5, epsilon = 1e-12);
        assert!(r.detected);
        assert!(!npt_criterion(&DensityMatrix::maximally_mixed((2, 2))).unwrap().detected);
        assert!(!npt_criterion(&werner(0.333)).unwrap().detected);
        assert!(npt_criterion(&werner(0.334)).unwrap().detected);
    }

    #[test]
    fn criterion_id_parsing() {
        assert_eq!("sic1".parse::<CriterionId>().unwrap(), CriterionId::JointPurityFree);
        assert_eq!("SIC2".parse::<CriterionId>().unwrap(), CriterionId::JointPurity);
        assert_eq!("povm-corr".parse::<CriterionId>().unwrap(), CriterionId::PovmCorr);
        assert!("CCNR".parse::<CriterionId>().is_err());
        for id in CriterionId::ALL {
            assert_eq!(id.as_str().parse::<CriterionId>().unwrap(), id);
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{id}\""));
        }
    }

    #[test]
    fn report_json_field_names() {
        let r = npt_criterion(&werner(1.0)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for k in ["criterion_id", "lhs", "rhs", "margin", "detected", "auxiliary"] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
        assert_eq!(v["criterion_id"], "NPT");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (ba, _) = qubit_bases();
        let b3 = gell_mann_basis(3).unwrap();
        assert!(matches!(
            loo_criterion(&werner(0.5), &ba, &b3),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
