//! Cross-module invariants on sampled states.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use entdetect::basis::{gell_mann_basis, rotate_basis};
use entdetect::criteria::{
    joint_purity_criterion, joint_purity_free_criterion, loo_criterion, npt_criterion,
    povm_correlation_criterion, rescaled_joint_criterion, LocalCorrelations, RescaledVariant,
};
use entdetect::estimate::{check_state, estimate_ratios, sweep_scaled_x, RatioOptions};
use entdetect::linalg::{
    hermiticity_deviation, min_eigenvalue, partial_trace, partial_transpose, purity, tensor,
    CMatrix, DensityMatrix, HermitianOp, Subsystem, C64,
};
use entdetect::nalgebra::DMatrix;
use entdetect::povm::{
    build_povm, feasible_x_range, max_feasible_x, random_orthogonal, NmPovmSpec,
};
use entdetect::criteria::CriterionId;
use entdetect::sampler::{chains, hit_and_run_step, sample_states, ChainState, SamplerConfig};

fn sampled(dims: (usize, usize), seed: u64) -> DensityMatrix {
    let config = SamplerConfig {
        burn_in: 200,
        thinning: 1,
        ..SamplerConfig::new(dims, seed, 1)
    };
    sample_states(&config).unwrap().pop().unwrap()
}

fn dims_strategy() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just((2, 2)), Just((2, 3)), Just((3, 2)), Just((3, 3))]
}

/// Haar unitary from the QR decomposition of a complex Gaussian matrix.
fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let phase = r[(j, j)] / r[(j, j)].norm();
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn product_state(rng: &mut ChaCha8Rng, dims: (usize, usize)) -> DensityMatrix {
    let a = sampled((dims.0, 1), rng.gen());
    let b = sampled((dims.1, 1), rng.gen());
    DensityMatrix::new(tensor(a.op(), b.op()), dims).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampled_states_are_valid(dims in dims_strategy(), seed in any::<u64>()) {
        let rho = sampled(dims, seed);
        prop_assert!((rho.op().trace() - 1.0).abs() < 1e-12);
        prop_assert!(min_eigenvalue(rho.op()).unwrap() >= -1e-10);
        prop_assert!(hermiticity_deviation(rho.matrix()) < 1e-12);
    }

    #[test]
    fn reduced_states_match_local_expectations(dims in dims_strategy(), seed in any::<u64>()) {
        let rho = sampled(dims, seed);
        let ra = partial_trace(&rho, Subsystem::A);
        let rb = partial_trace(&rho, Subsystem::B);
        prop_assert!((ra.op().trace() - 1.0).abs() < 1e-12);
        prop_assert!((rb.op().trace() - 1.0).abs() < 1e-12);
        for g in gell_mann_basis(dims.0).unwrap().ops() {
            let big = tensor(g, &HermitianOp::identity(dims.1));
            let lhs = (big.matrix() * rho.matrix()).trace().re;
            let rhs = (g.matrix() * ra.matrix()).trace().re;
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_transpose_keeps_trace_and_purity(dims in dims_strategy(), seed in any::<u64>()) {
        let rho = sampled(dims, seed);
        for sub in [Subsystem::A, Subsystem::B] {
            let pt = partial_transpose(&rho, sub);
            prop_assert!((pt.trace() - 1.0).abs() < 1e-12);
            prop_assert!((pt.hs_norm().powi(2) - purity(&rho)).abs() < 1e-12);
        }
        // Spectra of the two partial transposes coincide (global transpose).
        let a = partial_transpose(&rho, Subsystem::A).eigenvalues().unwrap();
        let b = partial_transpose(&rho, Subsystem::B).eigenvalues().unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn joint_expectations_satisfy_parseval(dims in dims_strategy(), seed in any::<u64>()) {
        let rho = sampled(dims, seed);
        let ba = gell_mann_basis(dims.0).unwrap();
        let bb = gell_mann_basis(dims.1).unwrap();
        let local = LocalCorrelations::new(&rho, &ba, &bb).unwrap();
        let sum: f64 = local.joint.iter().map(|v| v * v).sum();
        prop_assert!((sum - purity(&rho)).abs() < 1e-12);
    }

    #[test]
    fn loo_is_basis_and_local_unitary_invariant(dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = sampled(dims, seed);
        let ba = gell_mann_basis(dims.0).unwrap();
        let bb = gell_mann_basis(dims.1).unwrap();
        let base = loo_criterion(&rho, &ba, &bb).unwrap();

        // Any orthogonal mixing of the traceless operators.
        let rotated = |d: usize, rng: &mut ChaCha8Rng| {
            let mut o = DMatrix::<f64>::identity(d * d, d * d);
            o.view_mut((1, 1), (d * d - 1, d * d - 1)).copy_from(&random_orthogonal(d * d - 1, rng));
            rotate_basis(&gell_mann_basis(d).unwrap(), &o).unwrap()
        };
        let (ra, rb) = (rotated(dims.0, &mut rng), rotated(dims.1, &mut rng));
        let r = loo_criterion(&rho, &ra, &rb).unwrap();
        prop_assert!((r.lhs - base.lhs).abs() < 1e-10);

        let u = random_unitary(dims.0, &mut rng).kronecker(&random_unitary(dims.1, &mut rng));
        let moved = DensityMatrix::new(rho.op().conjugate_by(&u), dims).unwrap();
        let m = loo_criterion(&moved, &ba, &bb).unwrap();
        prop_assert!((m.lhs - base.lhs).abs() < 1e-10);
        prop_assert!((m.rhs - base.rhs).abs() < 1e-12);
        prop_assert_eq!(m.detected, base.detected);
    }

    #[test]
    fn product_states_are_never_detected(dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = product_state(&mut rng, dims);
        let ba = gell_mann_basis(dims.0).unwrap();
        let bb = gell_mann_basis(dims.1).unwrap();
        prop_assert!(!npt_criterion(&rho).unwrap().detected);
        prop_assert!(!loo_criterion(&rho, &ba, &bb).unwrap().detected);
        for variant in [RescaledVariant::Purity, RescaledVariant::PurityFree] {
            prop_assert!(!rescaled_joint_criterion(&rho, 1.0, 1.0, variant).unwrap().detected);
        }
    }

    #[test]
    fn element_and_rescaled_joint_criteria_agree(seed in any::<u64>(), frac_a in 0.05f64..1.0, frac_b in 0.05f64..1.0) {
        // Qubit GSIC on A and qutrit MUM on B at arbitrary feasible x.
        let spec = |d, n, m, frac: f64| {
            let lo = feasible_x_range(d, n, m).low;
            let hi = max_feasible_x(d, n, m, None).unwrap();
            NmPovmSpec::new(d, n, m, lo + frac * (hi - lo))
        };
        let sa = spec(2, 1, 4, frac_a);
        let sb = spec(3, 4, 3, frac_b);
        let pa = build_povm(&sa, None).unwrap();
        let pb = build_povm(&sb, None).unwrap();
        let rho = sampled((2, 3), seed);
        let scale = (sa.common_factor() * sb.common_factor()).sqrt();
        let (xa, xb) = (sa.scaled_x(), sb.scaled_x());

        let jp = joint_purity_criterion(&rho, &pa, &pb).unwrap();
        let rp = rescaled_joint_criterion(&rho, xa, xb, RescaledVariant::Purity).unwrap();
        prop_assert!((jp.lhs - scale * rp.lhs).abs() < 1e-12);
        prop_assert!((jp.rhs - scale * rp.rhs).abs() < 1e-12);

        let jf = joint_purity_free_criterion(&rho, &pa, &pb).unwrap();
        let rf = rescaled_joint_criterion(&rho, xa, xb, RescaledVariant::PurityFree).unwrap();
        prop_assert!((jf.lhs - scale * rf.lhs).abs() < 1e-12);
        prop_assert!((jf.rhs - scale * rf.rhs).abs() < 1e-12);
    }

    #[test]
    fn povm_correlation_scales_loo(seed in any::<u64>(), frac in 0.05f64..1.0) {
        let lo = feasible_x_range(2, 3, 2).low;
        let spec = NmPovmSpec::new(2, 3, 2, lo + frac * (1.0 - lo));
        let p = build_povm(&spec, None).unwrap();
        let g = gell_mann_basis(2).unwrap();
        let rho = sampled((2, 2), seed);
        let pc = povm_correlation_criterion(&rho, &p, &p).unwrap();
        let loo = loo_criterion(&rho, &g, &g).unwrap();
        let gamma = spec.gamma_value();
        prop_assert!((pc.lhs - gamma * gamma * loo.lhs).abs() < 1e-12);
        prop_assert!((pc.rhs - gamma * gamma * loo.rhs).abs() < 1e-12);
    }
}

#[test]
fn chain_mean_is_maximally_mixed() {
    let dims = (2, 2);
    let steps = 100_000;
    let batches = 100;
    let mut state = ChainState::maximally_mixed(dims, 2024);
    let mut batch_sums = vec![CMatrix::zeros(4, 4); batches];
    for i in 0..steps {
        hit_and_run_step(&mut state).unwrap();
        batch_sums[i * batches / steps] += state.current().matrix();
    }
    let per = (steps / batches) as f64;
    let means: Vec<CMatrix> = batch_sums.iter().map(|s| s / C64::new(per, 0.0)).collect();
    let target = CMatrix::identity(4, 4) / C64::new(4.0, 0.0);
    for r in 0..4 {
        for c in 0..4 {
            for part in [|z: C64| z.re, |z: C64| z.im] {
                let vals: Vec<f64> = means.iter().map(|m| part(m[(r, c)])).collect();
                let mean = vals.iter().sum::<f64>() / batches as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
                let se = (var / batches as f64).sqrt();
                let want = part(target[(r, c)]);
                assert!(
                    (mean - want).abs() <= 3.0 * se + 1e-15,
                    "entry ({r},{c}): {mean} vs {want}, se {se}"
                );
            }
        }
    }
}

fn lag1_autocorrelation(p: &[f64]) -> f64 {
    let n = p.len() as f64;
    let mean = p.iter().sum::<f64>() / n;
    let var = p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let cov = p.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (n - 1.0);
    cov / var
}

#[test]
fn qubit_purity_decorrelates_within_default_thinning() {
    let states = sample_states(&SamplerConfig::new((2, 1), 5, 20_000)).unwrap();
    let p: Vec<f64> = states.iter().map(purity).collect();
    let rho1 = lag1_autocorrelation(&p);
    assert!(rho1.abs() < 0.1, "lag-1 autocorrelation {rho1}");
}

/// For `d_A d_B ≥ 4` the default thinning leaves visible correlation between
/// consecutive samples (about 0.5 for two qubits), which the batch-means
/// error must pick up.
#[test]
fn batch_means_error_covers_residual_correlation() {
    let config = SamplerConfig::new((2, 2), 5, 20_000);
    let states = sample_states(&config).unwrap();
    let p: Vec<f64> = states.iter().map(purity).collect();
    let rho1 = lag1_autocorrelation(&p);
    assert!(rho1 > 0.1 && rho1 < 0.9, "lag-1 autocorrelation {rho1}");
    for e in estimate_ratios(&config, &RatioOptions::default()).unwrap() {
        let binomial = (e.ratio * (1.0 - e.ratio) / e.n_samples as f64).sqrt();
        assert!(e.std_error > binomial, "{}: {} vs binomial {binomial}", e.criterion_id, e.std_error);
    }
}

#[test]
fn parallel_chains_are_deterministic() {
    let config = SamplerConfig::new((2, 2), 9, 2_000);
    let options = RatioOptions {
        chains: 4,
        ..RatioOptions::default()
    };
    let a = estimate_ratios(&config, &options).unwrap();
    let b = estimate_ratios(&config, &options).unwrap();
    assert_eq!(a, b);
    let sizes: usize = chains(&config, 4).unwrap().iter().map(|c| c.size_hint().0).sum();
    assert_eq!(sizes, 2_000);
}

#[test]
fn sweep_corner_matches_sic_ratio() {
    let config = SamplerConfig::new((2, 3), 3, 3_000);
    let sweep = sweep_scaled_x(&config, &[0.75, 1.0], &[0.5, 2.0 / 3.0, 1.0], 1, 100).unwrap();
    assert_eq!(sweep.points.len(), 6);
    assert_eq!((sweep.points[1].x_tilde_a, sweep.points[1].x_tilde_b), (0.75, 2.0 / 3.0));
    let corner = sweep.points.last().unwrap();
    let options = RatioOptions {
        criteria: vec![CriterionId::JointPurityFree],
        ..RatioOptions::default()
    };
    let sic = &estimate_ratios(&config, &options).unwrap()[0];
    assert_eq!(corner.ratio, sic.ratio);
    assert_eq!(sweep.m2_cutoff_a, 1.0);
    assert!((sweep.m2_cutoff_b - 2.0 / 3.0).abs() < 1e-15);
    let csv = sweep.to_csv();
    assert!(csv.starts_with("# dims=2,3\n"));
    assert!(csv.contains("\nx_tilde_a,x_tilde_b,ratio,std_error,n_samples\n"));
}

#[test]
fn ratio_invariants() {
    let config = SamplerConfig::new((2, 2), 12, 4_000);
    for e in estimate_ratios(&config, &RatioOptions::default()).unwrap() {
        assert_eq!(e.ratio, e.n_detected as f64 / e.n_samples as f64);
        assert!(e.std_error >= (e.ratio * (1.0 - e.ratio) / e.n_samples as f64).sqrt());
    }
}

#[test]
fn check_state_examples() {
    let werner = |p: f64| {
        let m = CMatrix::from_fn(4, 4, |r, c| {
            let s = match (r, c) {
                (1, 1) | (2, 2) => 0.5,
                (1, 2) | (2, 1) => -0.5,
                _ => 0.0,
            };
            let id = if r == c { 0.25 } else { 0.0 };
            C64::new(p * s + (1.0 - p) * id, 0.0)
        });
        DensityMatrix::new(HermitianOp::new(m).unwrap(), (2, 2)).unwrap()
    };
    let all = CriterionId::ALL;
    let singlet = check_state(&werner(1.0), &all, None, None).unwrap();
    assert!(singlet.iter().all(|r| r.detected), "{singlet:?}");
    let mixed = check_state(&DensityMatrix::maximally_mixed((2, 2)), &all, None, None).unwrap();
    assert!(mixed.iter().all(|r| !r.detected));
    let half = check_state(&werner(0.5), &[CriterionId::Npt, CriterionId::Loo], None, None).unwrap();
    assert!(half.iter().all(|r| r.detected));
    // Trace norm of the correlation matrix of the singlet.
    assert!((singlet[1].auxiliary["trace_norm"] - 1.5).abs() < 1e-12);
}
