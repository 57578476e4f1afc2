//! Volume-ratio estimation over sampled states, scaled-parameter sweeps,
//! single-state checks, and the CSV/JSON formats behind the CLI.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{gell_mann_basis, LooBasis};
use crate::criteria::{
    joint_purity_criterion, joint_purity_free_criterion, npt_criterion,
    povm_correlation_criterion, CriterionId, CriterionReport, LocalCorrelations, RescaledVariant,
};
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, HermitianOp};
use crate::povm::{
    build_povm, feasible_x_range, is_informationally_complete, matrix_to_pairs,
    max_feasible_x, pairs_to_matrix, sts_spectrum, NmPovm, NmPovmSpec, XRange,
};
use crate::sampler::{self, SampleWriter, SamplerConfig};

pub const DEFAULT_BATCHES: usize = 100;

/// Receives every sampled state in chain order.
type Sink<'a> = &'a mut dyn FnMut(&DensityMatrix) -> Result<()>;

/// One criterion's detected fraction of the sampled volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub criterion_id: CriterionId,
    pub ratio: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub n_detected: usize,
}

/// `(N, M, x)` of one side's POVM; `d` comes from the subsystem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmParams {
    pub n: usize,
    pub m: usize,
    pub x: f64,
}

impl PovmParams {
    /// `(1, d², 1/d²)`.
    pub fn sic(d: usize) -> Self {
        let s = NmPovmSpec::sic(d);
        Self { n: s.n, m: s.m, x: s.x }
    }

    pub fn spec(&self, d: usize) -> NmPovmSpec {
        NmPovmSpec::new(d, self.n, self.m, self.x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioOptions {
    pub criteria: Vec<CriterionId>,
    /// Defaults to the SIC parameters of subsystem A.
    pub povm_a: Option<PovmParams>,
    pub povm_b: Option<PovmParams>,
    pub chains: usize,
    pub batches: usize,
}

impl Default for RatioOptions {
    fn default() -> Self {
        Self {
            criteria: vec![
                CriterionId::Npt,
                CriterionId::Loo,
                CriterionId::JointPurity,
                CriterionId::JointPurityFree,
            ],
            povm_a: None,
            povm_b: None,
            chains: 1,
            batches: DEFAULT_BATCHES,
        }
    }
}

/// Mean of `flags` and its batch-means standard error, floored at the
/// binomial error `√(R(1-R)/n)`.
pub fn batch_means(flags: &[bool], batches: usize) -> (f64, f64) {
    let n = flags.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let hits = flags.iter().filter(|&&f| f).count();
    let ratio = hits as f64 / n as f64;
    let binomial = (ratio * (1.0 - ratio) / n as f64).sqrt();
    let b = batches.min(n);
    if b < 2 {
        return (ratio, binomial);
    }
    let means: Vec<f64> = (0..b)
        .map(|k| {
            let chunk = &flags[k * n / b..(k + 1) * n / b];
            chunk.iter().filter(|&&f| f).count() as f64 / chunk.len() as f64
        })
        .collect();
    let mean = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    (ratio, (var / b as f64).sqrt().max(binomial))
}

/// Runs the configured chains (in parallel unless a sink is given) and
/// returns `eval` of every emitted state, ordered by chain index.
fn evaluate_samples<T, F>(
    config: &SamplerConfig,
    chains: usize,
    eval: F,
    sink: Option<Sink<'_>>,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&DensityMatrix) -> Result<T> + Sync,
{
    let chains = sampler::chains(config, chains)?;
    match sink {
        Some(sink) => {
            let mut out = Vec::with_capacity(config.n_samples);
            for chain in chains {
                for rho in chain {
                    let rho = rho?;
                    sink(&rho)?;
                    out.push(eval(&rho)?);
                }
            }
            Ok(out)
        }
        None => {
            let per_chain = chains
                .into_par_iter()
                .map(|chain| chain.map(|rho| eval(&rho?)).collect::<Result<Vec<T>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok(per_chain.into_iter().flatten().collect())
        }
    }
}

/// Per-state detection decisions for a fixed criterion list.
struct Detector {
    criteria: Vec<CriterionId>,
    basis_a: LooBasis,
    basis_b: LooBasis,
    x_tilde: (f64, f64),
    povms: Option<(NmPovm, NmPovm)>,
}

impl Detector {
    fn new(dims: (usize, usize), options: &RatioOptions) -> Result<Self> {
        let (da, db) = dims;
        let spec_a = options.povm_a.unwrap_or(PovmParams::sic(da)).spec(da);
        let spec_b = options.povm_b.unwrap_or(PovmParams::sic(db)).spec(db);
        spec_a.validate_informationally_complete()?;
        spec_b.validate_informationally_complete()?;
        let povms = if options.criteria.contains(&CriterionId::PovmCorr) {
            Some((build_povm(&spec_a, None)?, build_povm(&spec_b, None)?))
        } else {
            None
        };
        Ok(Self {
            criteria: options.criteria.clone(),
            basis_a: gell_mann_basis(da)?,
            basis_b: gell_mann_basis(db)?,
            x_tilde: (spec_a.scaled_x(), spec_b.scaled_x()),
            povms,
        })
    }

    fn detect(&self, rho: &DensityMatrix) -> Result<Vec<bool>> {
        let needs_local = self.criteria.iter().any(|c| {
            !matches!(c, CriterionId::Npt | CriterionId::PovmCorr)
        });
        let local = if needs_local {
            Some(LocalCorrelations::new(rho, &self.basis_a, &self.basis_b)?)
        } else {
            None
        };
        let (xa, xb) = self.x_tilde;
        self.criteria
            .iter()
            .map(|c| {
                let report = match (c, &local, &self.povms) {
                    (CriterionId::Npt, _, _) => npt_criterion(rho)?,
                    (CriterionId::PovmCorr, _, Some((pa, pb))) => {
                        povm_correlation_criterion(rho, pa, pb)?
                    }
                    (CriterionId::Loo, Some(l), _) => l.loo_report()?,
                    (CriterionId::JointPurity, Some(l), _) => {
                        l.rescaled_report(xa, xb, RescaledVariant::Purity)?
                    }
                    (CriterionId::JointPurityFree | CriterionId::Rescaled, Some(l), _) => {
                        l.rescaled_report(xa, xb, RescaledVariant::PurityFree)?
                    }
                    _ => unreachable!("detector inputs prepared for every criterion"),
                };
                Ok(report.detected)
            })
            .collect()
    }
}

/// Fraction of sampled states detected by each criterion, all evaluated on
/// one shared sample set.
///
/// The joint-probability criteria are evaluated in their rescaled form,
/// which depends on the POVM parameters only through `x̃` and so does not
/// require the POVM elements to be constructible.
pub fn estimate_ratios(config: &SamplerConfig, options: &RatioOptions) -> Result<Vec<RatioEstimate>> {
    estimate(config, options, None)
}

/// [`estimate_ratios`] that also streams every sampled state to `writer`.
/// Chains then run sequentially; the estimates are unchanged.
pub fn estimate_ratios_with_dump<W: Write>(
    config: &SamplerConfig,
    options: &RatioOptions,
    writer: &mut SampleWriter<W>,
) -> Result<Vec<RatioEstimate>> {
    let mut sink = |rho: &DensityMatrix| writer.write(rho);
    estimate(config, options, Some(&mut sink))
}

fn estimate(
    config: &SamplerConfig,
    options: &RatioOptions,
    sink: Option<Sink<'_>>,
) -> Result<Vec<RatioEstimate>> {
    let rows = flags(config, options, sink)?;
    Ok(summarize(&options.criteria, &rows, options.batches))
}

/// Per-state detection decisions, one row per sampled state with entries in
/// the order of `options.criteria`.
pub fn detection_flags(config: &SamplerConfig, options: &RatioOptions) -> Result<Vec<Vec<bool>>> {
    flags(config, options, None)
}

fn flags(
    config: &SamplerConfig,
    options: &RatioOptions,
    sink: Option<Sink<'_>>,
) -> Result<Vec<Vec<bool>>> {
    config.validate()?;
    if options.criteria.is_empty() {
        return Err(Error::Config("no criteria requested".into()));
    }
    let detector = Detector::new(config.dims, options)?;
    evaluate_samples(config, options.chains, |rho| detector.detect(rho), sink)
}

/// Ratio estimates from rows produced by [`detection_flags`].
pub fn summarize(criteria: &[CriterionId], rows: &[Vec<bool>], batches: usize) -> Vec<RatioEstimate> {
    criteria
        .iter()
        .enumerate()
        .map(|(k, &id)| {
            let flags: Vec<bool> = rows.iter().map(|r| r[k]).collect();
            let (ratio, std_error) = batch_means(&flags, batches);
            RatioEstimate {
                criterion_id: id,
                ratio,
                std_error,
                n_samples: flags.len(),
                n_detected: flags.iter().filter(|&&f| f).count(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x_tilde_a: f64,
    pub x_tilde_b: f64,
    pub ratio: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub dims: (usize, usize),
    /// Largest `x̃` reachable by an informationally complete `M = 2` POVM.
    pub m2_cutoff_a: f64,
    pub m2_cutoff_b: f64,
    /// Grid-major: `x̃_A` outer, `x̃_B` inner.
    pub points: Vec<SweepPoint>,
}

/// `min(1, 2/d)`: the `x̃` at the top of the `M = 2` range.
pub fn m2_cutoff(d: usize) -> f64 {
    (2.0 / d as f64).min(1.0)
}

/// Purity-free rescaled criterion over a grid of `(x̃_A, x̃_B)` on one
/// shared sample set.
pub fn sweep_scaled_x(
    config: &SamplerConfig,
    grid_a: &[f64],
    grid_b: &[f64],
    chains: usize,
    batches: usize,
) -> Result<SweepResult> {
    config.validate()?;
    let (da, db) = config.dims;
    for (d, grid, name) in [(da, grid_a, "x_tilde_a"), (db, grid_b, "x_tilde_b")] {
        if grid.is_empty() {
            return Err(Error::Config(format!("{name} grid is empty")));
        }
        let low = 1.0 / d as f64;
        if let Some(&v) = grid.iter().find(|&&v| !(v > low && v <= 1.0)) {
            return Err(Error::OutOfRange {
                name,
                value: v,
                low,
                high: 1.0,
            });
        }
    }
    let basis_a = gell_mann_basis(da)?;
    let basis_b = gell_mann_basis(db)?;
    let rows = evaluate_samples(
        config,
        chains,
        |rho| {
            let local = LocalCorrelations::new(rho, &basis_a, &basis_b)?;
            let mut flags = Vec::with_capacity(grid_a.len() * grid_b.len());
            for &xa in grid_a {
                for &xb in grid_b {
                    flags.push(local.rescaled_report(xa, xb, RescaledVariant::PurityFree)?.detected);
                }
            }
            Ok(flags)
        },
        None,
    )?;
    let mut points = Vec::with_capacity(grid_a.len() * grid_b.len());
    for (i, &xa) in grid_a.iter().enumerate() {
        for (j, &xb) in grid_b.iter().enumerate() {
            let k = i * grid_b.len() + j;
            let flags: Vec<bool> = rows.iter().map(|r| r[k]).collect();
            let (ratio, std_error) = batch_means(&flags, batches);
            points.push(SweepPoint {
                x_tilde_a: xa,
                x_tilde_b: xb,
                ratio,
                std_error,
                n_samples: flags.len(),
            });
        }
    }
    Ok(SweepResult {
        dims: config.dims,
        m2_cutoff_a: m2_cutoff(da),
        m2_cutoff_b: m2_cutoff(db),
        points,
    })
}

/// Float in CSV form: 17 significant digits.
pub fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ratios_to_csv(estimates: &[RatioEstimate]) -> String {
    let mut out = String::from("criterion_id,ratio,std_error,n_samples,n_detected\n");
    for e in estimates {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.criterion_id,
            csv_float(e.ratio),
            csv_float(e.std_error),
            e.n_samples,
            e.n_detected
        );
    }
    out
}

impl SweepResult {
    /// CSV with `# key=value` metadata lines ahead of the header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# dims={},{}", self.dims.0, self.dims.1);
        let _ = writeln!(out, "# m2_cutoff_x_tilde_a={}", csv_float(self.m2_cutoff_a));
        let _ = writeln!(out, "# m2_cutoff_x_tilde_b={}", csv_float(self.m2_cutoff_b));
        out.push_str("x_tilde_a,x_tilde_b,ratio,std_error,n_samples\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv_float(p.x_tilde_a),
                csv_float(p.x_tilde_b),
                csv_float(p.ratio),
                csv_float(p.std_error),
                p.n_samples
            );
        }
        out
    }
}

/// Parameters and derived quantities of an `(N, M)`-POVM family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmInfo {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub x: f64,
    pub x_range: XRange,
    pub x_in_range: bool,
    pub informationally_complete: bool,
    pub gamma: f64,
    pub x_tilde: f64,
    /// Descending, with multiplicities.
    pub sts_spectrum: Vec<f64>,
    /// `None` when the family is not informationally complete.
    pub max_feasible_x: Option<f64>,
}

pub fn povm_info(d: usize, n: usize, m: usize, x: f64) -> PovmInfo {
    let spec = NmPovmSpec::new(d, n, m, x);
    let range = feasible_x_range(d, n, m);
    let ic = d >= 2 && n >= 1 && m >= 2 && is_informationally_complete(d, n, m);
    PovmInfo {
        d,
        n,
        m,
        x,
        x_range: range,
        x_in_range: range.contains(x),
        informationally_complete: ic,
        gamma: spec.gamma_value(),
        x_tilde: spec.scaled_x(),
        sts_spectrum: if m >= 2 { sts_spectrum(&spec) } else { Vec::new() },
        max_feasible_x: if ic { max_feasible_x(d, n, m, None).ok() } else { None },
    }
}

/// JSON state file: `dims` and the row-major `[re, im]` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: [usize; 2],
    pub entries: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let (da, db) = rho.dims();
        Self {
            dims: [da, db],
            entries: matrix_to_pairs(rho.matrix()),
        }
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        let [da, db] = self.dims;
        let m = pairs_to_matrix(da * db, &self.entries)?;
        DensityMatrix::new(HermitianOp::new(m)?, (da, db))
    }

    pub fn parse(json: &str) -> Result<DensityMatrix> {
        serde_json::from_str::<StateFile>(json)?.to_state()
    }
}

/// Full reports for one state. POVM-based criteria use the canonical
/// `(N, M, x)` POVM of each side (SIC by default); RESCALED is the
/// purity-free rescaled inequality at the corresponding `x̃`.
pub fn check_state(
    rho: &DensityMatrix,
    criteria: &[CriterionId],
    povm_a: Option<PovmParams>,
    povm_b: Option<PovmParams>,
) -> Result<Vec<CriterionReport>> {
    let (da, db) = rho.dims();
    let spec_a = povm_a.unwrap_or(PovmParams::sic(da)).spec(da);
    let spec_b = povm_b.unwrap_or(PovmParams::sic(db)).spec(db);
    let needs_povm = criteria.iter().any(|c| {
        matches!(
            c,
            CriterionId::PovmCorr | CriterionId::JointPurity | CriterionId::JointPurityFree
        )
    });
    let povms = if needs_povm {
        Some((build_povm(&spec_a, None)?, build_povm(&spec_b, None)?))
    } else {
        None
    };
    let basis_a = gell_mann_basis(da)?;
    let basis_b = gell_mann_basis(db)?;
    let local = || LocalCorrelations::new(rho, &basis_a, &basis_b);
    criteria
        .iter()
        .map(|c| match (c, &povms) {
            (CriterionId::Npt, _) => npt_criterion(rho),
            (CriterionId::Loo, _) => local()?.loo_report(),
            (CriterionId::PovmCorr, Some((pa, pb))) => povm_correlation_criterion(rho, pa, pb),
            (CriterionId::JointPurity, Some((pa, pb))) => joint_purity_criterion(rho, pa, pb),
            (CriterionId::JointPurityFree, Some((pa, pb))) => {
                joint_purity_free_criterion(rho, pa, pb)
            }
            (CriterionId::Rescaled, _) => {
                spec_a.validate_informationally_complete()?;
                spec_b.validate_informationally_complete()?;
                local()?.rescaled_report(
                    spec_a.scaled_x(),
                    spec_b.scaled_x(),
                    RescaledVariant::PurityFree,
                )
            }
            _ => unreachable!("POVMs built for every POVM criterion"),
        })
        .collect()
}
