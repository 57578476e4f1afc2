//! Hit-and-run sampling of density matrices, uniform under the
//! Hilbert–Schmidt (Euclidean) measure.
//!
//! Each step draws an isotropic direction `D` in the traceless Hermitian
//! subspace, computes the chord `{ρ + tD ≥ 0}` through the current state, and
//! moves to a uniform point on the (slightly shrunk) chord.

use std::io::{Read, Write};

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, CMatrix, DensityMatrix, HermitianOp, C64};

/// Relative shrink applied to both chord endpoints.
pub const INTERIOR_MARGIN: f64 = 1e-9;

/// Conditioning above which chord endpoints are found by bisection.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub dims: (usize, usize),
    pub seed: u64,
    pub burn_in: usize,
    pub thinning: usize,
    pub n_samples: usize,
}

impl SamplerConfig {
    /// Config with the default burn-in `20 n²` and thinning `n²`, `n = d_A d_B`.
    pub fn new(dims: (usize, usize), seed: u64, n_samples: usize) -> Self {
        Self {
            dims,
            seed,
            burn_in: default_burn_in(dims),
            thinning: default_thinning(dims),
            n_samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (da, db) = self.dims;
        if da < 1 || db < 1 || da * db < 2 {
            return Err(Error::Config(format!(
                "sampler needs total dimension >= 2, got {da}x{db}"
            )));
        }
        if self.thinning < 1 {
            return Err(Error::Config("thinning must be >= 1".into()));
        }
        if self.n_samples < 1 {
            return Err(Error::Config("n_samples must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn default_thinning(dims: (usize, usize)) -> usize {
    let n = dims.0 * dims.1;
    n * n
}

pub fn default_burn_in(dims: (usize, usize)) -> usize {
    20 * default_thinning(dims)
}

/// Sub-seed of chain `index`: SplitMix64 of `master + index`.
pub fn chain_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniformly distributed unit vector in the traceless Hermitian operators
/// (standard-normal coordinates over an orthonormal basis, normalized).
///
/// Off-diagonal pairs carry the coordinates of the symmetric and
/// antisymmetric Gell-Mann operators; the diagonal is the projection of an
/// isotropic Gaussian onto the traceless diagonal subspace, which is again
/// isotropic there.
pub fn random_traceless_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOp {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMatrix::zeros(dim, dim);
    let diag: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let mean = diag.iter().sum::<f64>() / dim as f64;
    for (i, g) in diag.iter().enumerate() {
        m[(i, i)] = C64::new(g - mean, 0.0);
    }
    for j in 0..dim {
        for k in (j + 1)..dim {
            let s: f64 = rng.sample(StandardNormal);
            let a: f64 = rng.sample(StandardNormal);
            let v = C64::new(s * r, -a * r);
            m[(j, k)] = v;
            m[(k, j)] = v.conj();
        }
    }
    let norm = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    HermitianOp::symmetrize_square(m.unscale(norm))
}

/// The maximal interval `(t_min, t_max)` with `ρ + tD ≥ 0`.
///
/// With `ν` the eigenvalues of `L⁻¹ D L⁻†` (`ρ = L L†`, similar to
/// `ρ^{-1/2} D ρ^{-1/2}`), `t_min = -1/ν_max` and `t_max = -1/ν_min`.
pub fn chord_bounds(rho: &DensityMatrix, direction: &HermitianOp) -> Result<(f64, f64)> {
    if direction.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: direction.dim(),
        });
    }
    if direction.hs_norm() == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let n = rho.dim();
    let chol = Cholesky::new(rho.matrix().clone());
    let well_conditioned = chol.as_ref().map(|c| {
        let l = c.l_dirty();
        let diag = (0..n).map(|i| l[(i, i)].re);
        let (lo, hi) = diag.fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        lo > 0.0 && (hi / lo).powi(2) <= MAX_CONDITION
    });

    match (chol, well_conditioned) {
        (Some(c), Some(true)) => {
            let l = c.l_dirty();
            let y = l
                .solve_lower_triangular(direction.matrix())
                .ok_or(Error::Decomposition("triangular solve"))?;
            let k = l
                .solve_lower_triangular(&y.adjoint())
                .ok_or(Error::Decomposition("triangular solve"))?;
            let ev = HermitianOp::symmetrize_square(k).eigenvalues()?;
            let (nu_min, nu_max) = (ev[0], ev[n - 1]);
            if !(nu_min < 0.0 && nu_max > 0.0) {
                return Err(Error::Decomposition("chord direction without both signs"));
            }
            Ok((-1.0 / nu_max, -1.0 / nu_min))
        }
        _ => chord_bounds_bisection(rho, direction),
    }
}

fn chord_bounds_bisection(rho: &DensityMatrix, direction: &HermitianOp) -> Result<(f64, f64)> {
    let rho_min = min_eigenvalue(rho.op())?;
    if !(rho_min > 0.0) {
        return Err(Error::NotInterior {
            min_eigenvalue: rho_min,
        });
    }
    let dev = direction.eigenvalues()?;
    let rho_max = *rho.op().eigenvalues()?.last().unwrap_or(&1.0);
    let min_at = |t: f64| -> Result<f64> {
        let mut m = rho.op().clone();
        m.add_scaled(t, direction);
        min_eigenvalue(&m)
    };
    // Along a direction with eigenvalue λ < 0 the boundary lies within ρ_max/|λ|.
    let edge = |sign: f64, lam: f64| -> Result<f64> {
        let (mut inside, mut outside) = (0.0, sign * rho_max / lam.abs());
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if min_at(mid)? > 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    };
    let t_max = edge(1.0, dev[0])?;
    let t_min = edge(-1.0, dev[dev.len() - 1])?;
    Ok((t_min, t_max))
}

/// Current point of a hit-and-run chain and its random source.
#[derive(Clone, Debug)]
pub struct ChainState {
    current: DensityMatrix,
    rng: ChaCha8Rng,
}

impl ChainState {
    pub fn maximally_mixed(dims: (usize, usize), seed: u64) -> Self {
        Self {
            current: DensityMatrix::maximally_mixed(dims),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Starts from an interior state.
    pub fn from_state(rho: DensityMatrix, seed: u64) -> Result<Self> {
        let min = min_eigenvalue(rho.op())?;
        if !(min > 0.0) {
            return Err(Error::NotInterior {
                min_eigenvalue: min,
            });
        }
        Ok(Self {
            current: rho,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn current(&self) -> &DensityMatrix {
        &self.current
    }
}

/// One hit-and-run move.
pub fn hit_and_run_step(state: &mut ChainState) -> Result<()> {
    let rho = &state.current;
    let direction = random_traceless_direction(rho.dim(), &mut state.rng);
    let (t_min, t_max) = chord_bounds(rho, &direction)?;
    let lo = t_min * (1.0 - INTERIOR_MARGIN);
    let hi = t_max * (1.0 - INTERIOR_MARGIN);
    let u: f64 = state.rng.gen();
    let t = lo + u * (hi - lo);
    let mut next = rho.op().clone();
    next.add_scaled(t, &direction);
    let dims = rho.dims();
    state.current = DensityMatrix::new_unchecked(
        HermitianOp::symmetrize_square(next.into_matrix()),
        dims,
    );
    Ok(())
}

/// Iterator over the thinned output of one chain.
#[derive(Clone, Debug)]
pub struct Chain {
    state: ChainState,
    thinning: usize,
    remaining: usize,
    pending_burn_in: usize,
}

impl Chain {
    /// A chain starting at the maximally mixed state with the given seed.
    pub fn new(config: &SamplerConfig, seed: u64, n_samples: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            state: ChainState::maximally_mixed(config.dims, seed),
            thinning: config.thinning,
            remaining: n_samples,
            pending_burn_in: config.burn_in,
        })
    }
}

impl Iterator for Chain {
    type Item = Result<DensityMatrix>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let steps = std::mem::take(&mut self.pending_burn_in) + self.thinning;
        for _ in 0..steps {
            if let Err(e) = hit_and_run_step(&mut self.state) {
                self.remaining = 0;
                return Some(Err(e));
            }
        }
        self.remaining -= 1;
        Some(Ok(self.state.current.clone()))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Splits `config.n_samples` over `chains` independent chains seeded with
/// [`chain_seed`]; the first `n_samples % chains` chains get one extra sample.
pub fn chains(config: &SamplerConfig, chains: usize) -> Result<Vec<Chain>> {
    config.validate()?;
    let k = chains.max(1).min(config.n_samples);
    (0..k)
        .map(|i| {
            let n = config.n_samples / k + usize::from(i < config.n_samples % k);
            Chain::new(config, chain_seed(config.seed, i as u64), n)
        })
        .collect()
}

/// `n_samples` states from a single chain started at the maximally mixed state.
pub fn sample_states(config: &SamplerConfig) -> Result<Vec<DensityMatrix>> {
    Chain::new(config, chain_seed(config.seed, 0), config.n_samples)?.collect()
}

const DUMP_MAGIC: &[u8; 4] = b"HSMC";
const DUMP_VERSION: u16 = 1;

/// Streams states as a raw dump: 16-byte header (`HSMC`, version, `d_A`,
/// `d_B`, 6 reserved bytes, all little-endian) followed by each matrix as
/// row-major interleaved `[re, im]` f64 values.
pub struct SampleWriter<W: Write> {
    inner: W,
    dims: (usize, usize),
}

impl<W: Write> SampleWriter<W> {
    pub fn new(mut inner: W, dims: (usize, usize)) -> Result<Self> {
        let to_u16 = |d: usize| {
            u16::try_from(d).map_err(|_| Error::InvalidDimension(format!("{d} exceeds u16")))
        };
        let mut header = [0u8; 16];
        header[..4].copy_from_slice(DUMP_MAGIC);
        header[4..6].copy_from_slice(&DUMP_VERSION.to_le_bytes());
        header[6..8].copy_from_slice(&to_u16(dims.0)?.to_le_bytes());
        header[8..10].copy_from_slice(&to_u16(dims.1)?.to_le_bytes());
        inner.write_all(&header)?;
        Ok(Self { inner, dims })
    }

    pub fn write(&mut self, rho: &DensityMatrix) -> Result<()> {
        if rho.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.0 * self.dims.1,
                found: rho.dim(),
            });
        }
        let m = rho.matrix();
        let n = m.nrows();
        let mut buf = Vec::with_capacity(n * n * 16);
        for r in 0..n {
            for c in 0..n {
                buf.extend_from_slice(&m[(r, c)].re.to_le_bytes());
                buf.extend_from_slice(&m[(r, c)].im.to_le_bytes());
            }
        }
        self.inner.write_all(&buf)?;
        Ok(())
    }

    pub fn into_inner(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Reads a raw dump written by [`SampleWriter`].
pub fn read_samples<R: Read>(mut reader: R) -> Result<((usize, usize), Vec<DensityMatrix>)> {
    let mut header = [0u8; 16];
    reader.read_exact(&mut header)?;
    if &header[..4] != DUMP_MAGIC {
        return Err(Error::Format("bad sample dump magic".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != DUMP_VERSION {
        return Err(Error::Format(format!("unsupported dump version {version}")));
    }
    let da = u16::from_le_bytes([header[6], header[7]]) as usize;
    let db = u16::from_le_bytes([header[8], header[9]]) as usize;
    let n = da * db;
    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    let stride = n * n * 16;
    if stride == 0 || body.len() % stride != 0 {
        return Err(Error::Format("truncated sample dump".into()));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8-byte chunk"));
    let states = body
        .chunks_exact(stride)
        .map(|chunk| {
            let m = CMatrix::from_fn(n, n, |r, c| {
                let off = (r * n + c) * 16;
                C64::new(f(&chunk[off..off + 8]), f(&chunk[off + 8..off + 16]))
            });
            DensityMatrix::new(HermitianOp::new(m)?, (da, db))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(((da, db), states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::gell_mann_basis;
    use approx::assert_abs_diff_eq;

    #[test]
    fn direction_is_unit_and_traceless() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [2, 3, 6] {
            let d = random_traceless_direction(dim, &mut rng);
            assert!(d.trace().abs() < 1e-14);
            assert_abs_diff_eq!(d.hs_norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn direction_coordinates_are_isotropic() {
        let dim = 3;
        let k = dim * dim - 1;
        let basis = gell_mann_basis(dim).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 100_000;
        let mut cov = nalgebra::DMatrix::<f64>::zeros(k, k);
        for _ in 0..draws {
            let d = random_traceless_direction(dim, &mut rng);
            let c = basis.coordinates(&d).unwrap();
            assert!(c[0].abs() < 1e-14);
            let v = c.rows(1, k);
            cov += v * v.transpose();
        }
        cov /= draws as f64;
        let target = 1.0 / k as f64;
        for i in 0..k {
            for j in 0..k {
                let want = if i == j { target } else { 0.0 };
                assert!(
                    (cov[(i, j)] - want).abs() < 0.05 * target,
                    "cov[{i},{j}] = {}",
                    cov[(i, j)]
                );
            }
        }
    }

    fn qubit(diag: [f64; 2]) -> DensityMatrix {
        DensityMatrix::single(HermitianOp::from_real_diagonal(&diag)).unwrap()
    }

    fn sigma_z_dir() -> HermitianOp {
        HermitianOp::from_real_diagonal(&[1.0, -1.0]).scaled(std::f64::consts::FRAC_1_SQRT_2)
    }

    #[test]
    fn chord_bounds_diagonal_cases() {
        let s2 = std::f64::consts::SQRT_2;
        let (lo, hi) = chord_bounds(&qubit([0.5, 0.5]), &sigma_z_dir()).unwrap();
        assert_abs_diff_eq!(lo, -1.0 / s2, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, 1.0 / s2, epsilon = 1e-14);

        let rho = qubit([0.9, 0.1]);
        let (lo, hi) = chord_bounds(&rho, &sigma_z_dir()).unwrap();
        assert_abs_diff_eq!(lo, -0.9 * s2, epsilon = 1e-13);
        assert_abs_diff_eq!(hi, 0.1 * s2, epsilon = 1e-13);

        let mut at_max = rho.op().clone();
        at_max.add_scaled(hi, &sigma_z_dir());
        assert!(min_eigenvalue(&at_max).unwrap().abs() < 1e-10);
    }

    #[test]
    fn chord_bounds_endpoints_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = SamplerConfig::new((2, 3), 9, 5);
        for rho in sample_states(&config).unwrap() {
            let d = random_traceless_direction(6, &mut rng);
            let (lo, hi) = chord_bounds(&rho, &d).unwrap();
            assert!(lo < 0.0 && hi > 0.0);
            for t in [lo, hi] {
                let mut m = rho.op().clone();
                m.add_scaled(t, &d);
                assert!(min_eigenvalue(&m).unwrap().abs() < 1e-10);
            }
            let bis = chord_bounds_bisection(&rho, &d).unwrap();
            assert_abs_diff_eq!(bis.0, lo, epsilon = 1e-10);
            assert_abs_diff_eq!(bis.1, hi, epsilon = 1e-10);
        }
    }

    #[test]
    fn chord_bounds_errors() {
        assert!(matches!(
            chord_bounds(&qubit([0.5, 0.5]), &HermitianOp::zeros(2)),
            Err(Error::ZeroDirection)
        ));
        assert!(matches!(
            chord_bounds(&qubit([1.0, 0.0]), &sigma_z_dir()),
            Err(Error::NotInterior { .. })
        ));
        assert!(ChainState::from_state(qubit([1.0, 0.0]), 0).is_err());
    }

    #[test]
    fn steps_stay_interior_with_unit_trace() {
        let mut state = ChainState::maximally_mixed((2, 2), 11);
        for _ in 0..2000 {
            hit_and_run_step(&mut state).unwrap();
            let rho = state.current();
            assert!((rho.op().trace() - 1.0).abs() < 1e-12);
            assert!(min_eigenvalue(rho.op()).unwrap() > 0.0);
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let config = SamplerConfig {
            burn_in: 10,
            thinning: 3,
            ..SamplerConfig::new((2, 2), 77, 20)
        };
        let a = sample_states(&config).unwrap();
        let b = sample_states(&config).unwrap();
        assert_eq!(a, b);
        let other = sample_states(&SamplerConfig { seed: 78, ..config }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn chains_split_samples() {
        let config = SamplerConfig::new((2, 1), 1, 10);
        let cs = chains(&config, 3).unwrap();
        let sizes: Vec<usize> = cs.iter().map(|c| c.size_hint().0).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        assert_ne!(chain_seed(1, 0), chain_seed(1, 1));
    }

    #[test]
    fn dump_round_trip() {
        let config = SamplerConfig::new((2, 3), 4, 3);
        let states = sample_states(&config).unwrap();
        let mut w = SampleWriter::new(Vec::new(), (2, 3)).unwrap();
        for s in &states {
            w.write(s).unwrap();
        }
        let bytes = w.into_inner().unwrap();
        assert_eq!(&bytes[..4], b"HSMC");
        assert_eq!(bytes.len(), 16 + 3 * 36 * 16);
        let (dims, back) = read_samples(bytes.as_slice()).unwrap();
        assert_eq!(dims, (2, 3));
        assert_eq!(back, states);
        assert!(read_samples(&bytes[..20]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::new((1, 1), 0, 10).validate().is_err());
        assert!(SamplerConfig { thinning: 0, ..SamplerConfig::new((2, 2), 0, 10) }.validate().is_err());
        assert!(SamplerConfig::new((2, 2), 0, 0).validate().is_err());
        let c = SamplerConfig::new((2, 2), 0, 10);
        assert_eq!((c.burn_in, c.thinning), (320, 16));
    }
}
