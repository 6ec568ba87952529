//! Empirical Khintchine-type constants for lacunary Walsh series.
//!
//! For a norm `X` and a `q`-lacunary sequence `(n_k)` the constants `A`, `B`
//! are the best ones in `A ‖a‖₂ ≤ ‖Σ a_k w_{n_k}‖_X ≤ B ‖a‖₂`. Scans here
//! only sample: `A_hat` is an upper estimate of `A` and `B_hat` a lower
//! estimate of `B`. Nothing in this module proves an inequality.
//!
//! Every scan is deterministic. Sample `i` draws its index set and its
//! coefficients from a generator seeded with `seed ^ i`, and reductions break
//! ties by the smaller sample index, so reports do not depend on the number of
//! worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{DistributionTable, DyadicSet};
use crate::error::{invalid, Result};
use crate::norms::{norm, Exponent, NormSpec, EXP_NORMALIZATION_NOTE};
use crate::sampling::{corner_cases, lacunary_indices, next_lacunary, rng_for, unit_sphere};
use crate::walsh::{
    l2_norm, lacunary_alpha, min_order, rademacher_sum, synthesize, validate_lacunary, CoeffSeq,
};
use crate::MAX_ORDER;

/// Smallest first index drawn by [`scan_constants`].
pub const SCAN_FIRST_MIN: u64 = 1;
/// Largest first index drawn by [`scan_constants`].
pub const SCAN_FIRST_MAX: u64 = 1 << 6;
/// No sampled index exceeds this.
pub const SCAN_INDEX_CAP: u64 = 1 << 12;
pub const ASCENT_ROUNDS: usize = 100;
const ASCENT_INITIAL_STEP: f64 = 0.5;
/// Largest threshold tried by [`find_local_n`].
pub const LOCAL_SCAN_CAP: u64 = 1 << 10;

/// `‖Σ a_k w_{n_k}‖_X / ‖a‖₂`, synthesized at the order of the largest index.
pub fn ratio(coeffs: &[f64], indices: &[u64], spec: &NormSpec) -> Result<f64> {
    let l2 = l2_norm(coeffs);
    if l2 == 0.0 {
        return invalid("ratio needs a nonzero coefficient vector");
    }
    let f = synthesize(coeffs, indices, min_order(indices))?;
    Ok(norm(&f, spec)? / l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Random,
    /// Random sampling followed by coordinate ascent from both extremes.
    Ascent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub spec: NormSpec,
    pub q: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub samples: usize,
    pub seed: u64,
    pub search: SearchMode,
    #[serde(rename = "A_hat")]
    pub a_hat: f64,
    #[serde(rename = "B_hat")]
    pub b_hat: f64,
    pub argmin_coeffs: CoeffSeq,
    pub argmax_coeffs: CoeffSeq,
    /// Index sets of the two witnesses: `[argmin, argmax]`.
    pub indices_used: Vec<Vec<u64>>,
    pub note: String,
}

impl ConstantsReport {
    /// Recomputes both witnesses; `true` iff they reproduce `A_hat` and `B_hat` exactly.
    pub fn witnesses_reproduce(&self) -> Result<bool> {
        if self.indices_used.len() != 2 {
            return invalid("indices_used must hold the argmin and argmax index sets");
        }
        let lo = ratio(&self.argmin_coeffs, &self.indices_used[0], &self.spec)?;
        let hi = ratio(&self.argmax_coeffs, &self.indices_used[1], &self.spec)?;
        Ok(lo == self.a_hat && hi == self.b_hat)
    }
}

/// One scan sample, as emitted by the per-sample CSV stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_index: usize,
    pub ratio: f64,
    #[serde(skip)]
    pub coeffs: Vec<f64>,
    #[serde(skip)]
    pub indices: Vec<u64>,
}

/// Draws sample `i`: index set first, then the coefficients from the same stream.
/// The first samples use the deterministic corner-case coefficient vectors.
fn draw_sample(
    q: f64,
    m: usize,
    seed: u64,
    i: usize,
    corners: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<u64>)> {
    let mut rng = rng_for(seed, i as u64);
    let indices = lacunary_indices(
        &mut rng,
        q,
        m,
        SCAN_FIRST_MIN,
        SCAN_FIRST_MAX,
        SCAN_INDEX_CAP,
    )?;
    let coeffs = match corners.get(i) {
        Some(c) => c.clone(),
        None => unit_sphere(&mut rng, m),
    };
    Ok((coeffs, indices))
}

fn check_scan_args(spec: &NormSpec, q: f64, m: usize, samples: usize) -> Result<()> {
    spec.validate()?;
    lacunary_alpha(q)?;
    if m == 0 {
        return invalid("M must be at least 1");
    }
    if samples == 0 {
        return invalid("need at least one sample");
    }
    Ok(())
}

/// Every sampled ratio, in sample order.
pub fn scan_samples(
    spec: &NormSpec,
    q: f64,
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<SampleRecord>> {
    check_scan_args(spec, q, m, samples)?;
    let corners = corner_cases(m);
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let (coeffs, indices) = draw_sample(q, m, seed, i, &corners)?;
            let r = ratio(&coeffs, &indices, spec)?;
            Ok(SampleRecord {
                sample_index: i,
                ratio: r,
                coeffs,
                indices,
            })
        })
        .collect()
}

fn pick<'a>(
    a: &'a SampleRecord,
    b: &'a SampleRecord,
    better: impl Fn(f64, f64) -> bool,
) -> &'a SampleRecord {
    if better(b.ratio, a.ratio) || (b.ratio == a.ratio && b.sample_index < a.sample_index) {
        b
    } else {
        a
    }
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let l2 = l2_norm(v);
    (l2 > 0.0).then(|| v.iter().map(|x| x / l2).collect())
}

/// Cyclic coordinate search on the unit sphere, indices fixed.
///
/// Each coordinate is pushed by `±step` and the vector renormalised; a move is
/// kept only if it strictly improves the ratio. After a round without any
/// accepted move the step is halved.
fn ascend(
    start: (Vec<f64>, f64),
    indices: &[u64],
    spec: &NormSpec,
    better: impl Fn(f64, f64) -> bool,
) -> Result<(Vec<f64>, f64)> {
    let (mut best, mut best_ratio) = start;
    let mut step = ASCENT_INITIAL_STEP;
    for _ in 0..ASCENT_ROUNDS {
        let mut moved = false;
        for k in 0..best.len() {
            for sign in [1.0, -1.0] {
                let mut trial = best.clone();
                trial[k] += sign * step;
                let Some(trial) = unit(&trial) else { continue };
                let r = ratio(&trial, indices, spec)?;
                if better(r, best_ratio) {
                    best = trial;
                    best_ratio = r;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok((best, best_ratio))
}

/// Estimates `A(X,q)` and `B(X,q)` over `M`-term sequences.
///
/// Index sets start at `n_1 ∈ [1, 64]` and continue with
/// `n_{k+1} = ⌈q n_k⌉ + {0,1,2}`, never exceeding `2^12`; when long chains
/// would overshoot, the start range is lowered.
pub fn scan_constants(
    spec: &NormSpec,
    q: f64,
    m: usize,
    samples: usize,
    seed: u64,
    search: SearchMode,
) -> Result<ConstantsReport> {
    let records = scan_samples(spec, q, m, samples, seed)?;
    let lo = records
        .par_iter()
        .reduce_with(|a, b| pick(a, b, |x, y| x < y))
        .expect("at least one sample");
    let hi = records
        .par_iter()
        .reduce_with(|a, b| pick(a, b, |x, y| x > y))
        .expect("at least one sample");
    let (mut argmin, mut a_hat) = (lo.coeffs.clone(), lo.ratio);
    let (mut argmax, mut b_hat) = (hi.coeffs.clone(), hi.ratio);
    if search == SearchMode::Ascent {
        let (lo_res, hi_res) = rayon::join(
            || ascend((argmin.clone(), a_hat), &lo.indices, spec, |x, y| x < y),
            || ascend((argmax.clone(), b_hat), &hi.indices, spec, |x, y| x > y),
        );
        (argmin, a_hat) = lo_res?;
        (argmax, b_hat) = hi_res?;
    }
    let mut note =
        String::from("sampled estimates: A_hat bounds A from above, B_hat bounds B from below");
    if matches!(spec.base(), NormSpec::OrliczExp(_)) {
        note.push_str("; ");
        note.push_str(EXP_NORMALIZATION_NOTE);
    }
    Ok(ConstantsReport {
        spec: spec.clone(),
        q,
        m,
        samples,
        seed,
        search,
        a_hat,
        b_hat,
        argmin_coeffs: CoeffSeq(argmin),
        argmax_coeffs: CoeffSeq(argmax),
        indices_used: vec![lo.indices.clone(), hi.indices.clone()],
        note,
    })
}

/// `(1 + √2) (2 + 2α)^{1/(2n)} √n`, the upper bound for `B(2n, q)`.
pub fn eq1_bound(n: u32, q: f64) -> Result<f64> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    let alpha = lacunary_alpha(q)? as f64;
    let n = n as f64;
    Ok((1.0 + 2f64.sqrt()) * (2.0 + 2.0 * alpha).powf(0.5 / n) * n.sqrt())
}

/// `true` iff the report's `B_hat` respects [`eq1_bound`].
pub fn check_bound_eq1(n: u32, q: f64, report: &ConstantsReport) -> Result<bool> {
    let expected = NormSpec::Lp(Exponent::Finite(2.0 * n as f64));
    if report.spec != expected {
        return invalid(format!(
            "report is for {}, the bound needs {expected}",
            report.spec
        ));
    }
    if report.q != q {
        return invalid(format!("report was scanned with q = {}, not {q}", report.q));
    }
    Ok(report.b_hat <= eq1_bound(n, q)?)
}

/// Distribution tables of `W = Σ a_k w_{n_k}` and `R = Σ a_k r_k`.
///
/// Both sums are accumulated in increasing `k` on every cell, so for a given
/// sign pattern they produce the same floating-point value.
pub fn equidistribution_tables(
    coeffs: &[f64],
    indices: &[u64],
) -> Result<(DistributionTable, DistributionTable)> {
    if coeffs.len() != indices.len() || coeffs.is_empty() {
        return invalid(format!(
            "need matching nonempty coefficients and indices, got {} and {}",
            coeffs.len(),
            indices.len()
        ));
    }
    let w = synthesize(coeffs, indices, min_order(indices))?;
    let r = rademacher_sum(coeffs)?;
    Ok((w.distribution(), r.distribution()))
}

/// Checks that `Σ a_k w_{n_k}` and `Σ a_k r_k` are equidistributed.
///
/// The indices must be 2-lacunary; the comparison is exact.
pub fn verify_equidistribution(coeffs: &[f64], indices: &[u64]) -> Result<bool> {
    let (ok, _) = validate_lacunary(indices, 2.0)?;
    if !ok || indices.is_empty() {
        return invalid(format!("indices {indices:?} are not 2-lacunary"));
    }
    let (w, r) = equidistribution_tables(coeffs, indices)?;
    Ok(w == r)
}

/// Outcome of [`find_local_n`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalThresholdReport {
    pub set: DyadicSet,
    pub spec: NormSpec,
    pub q: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub samples: usize,
    pub seed: u64,
    pub floor_a: f64,
    /// First `N` of the doubling scan that passed; absent if the cap was reached.
    #[serde(rename = "N")]
    pub n: Option<u64>,
    /// Worst `(min, max)` local ratio seen at the returned `N`.
    pub ratio_range: Option<(f64, f64)>,
    pub heuristic: bool,
    pub note: String,
}

/// `q`-lacunary chain from `start`, truncated to indices below `2^MAX_ORDER`.
fn chain_from(rng: &mut impl Rng, q: f64, m: usize, start: u64) -> Vec<u64> {
    let limit = 1u64 << MAX_ORDER;
    let mut out = Vec::with_capacity(m);
    let mut n = start;
    while out.len() < m && n < limit {
        out.push(n);
        n = next_lacunary(q, n) + rng.random_range(0..=crate::sampling::MAX_JITTER);
    }
    out
}

/// Heuristic threshold `N` past which local ratios stay in `[floor_A, 1/floor_A]`.
///
/// Tries `N = 1, 2, 4, …, 1024`. For each `N`, sample `i` draws
/// `n_1 ∈ [N, 2N-1]`, continues `q`-lacunarily for up to `M` terms below
/// `2^14` and takes a unit coefficient vector. The result says nothing about
/// the existence or size of a true threshold.
#[allow(clippy::too_many_arguments)]
pub fn find_local_n(
    set: &DyadicSet,
    q: f64,
    spec: &NormSpec,
    m: usize,
    samples: usize,
    seed: u64,
    floor_a: f64,
) -> Result<LocalThresholdReport> {
    if set.cell_count() == 0 {
        return invalid("the set must have positive measure");
    }
    if matches!(spec, NormSpec::Local { .. }) {
        return invalid("pass the unlocalised norm; the set is applied here");
    }
    check_scan_args(spec, q, m, samples)?;
    if floor_a.is_nan() || floor_a > 1.0 {
        return invalid(format!("floor_A must lie in (-∞, 1], got {floor_a}"));
    }
    let local = NormSpec::local(set.clone(), spec.clone())?;
    let mut report = LocalThresholdReport {
        set: set.clone(),
        spec: spec.clone(),
        q,
        m,
        samples,
        seed,
        floor_a,
        n: None,
        ratio_range: None,
        heuristic: true,
        note: String::from(
            "heuristic: empirical doubling scan over sampled sequences; \
             not a construction of the threshold whose existence is known",
        ),
    };
    if matches!(spec.base(), NormSpec::OrliczExp(_)) {
        report.note.push_str("; ");
        report.note.push_str(EXP_NORMALIZATION_NOTE);
    }
    if floor_a <= 0.0 {
        report.n = Some(1);
        return Ok(report);
    }
    let upper = floor_a.recip();
    let mut threshold = 1u64;
    while threshold <= LOCAL_SCAN_CAP {
        let ratios: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for(seed, i as u64);
                let start = rng.random_range(threshold..=2 * threshold - 1);
                let indices = chain_from(&mut rng, q, m, start);
                let coeffs = unit_sphere(&mut rng, indices.len());
                let order = min_order(&indices).max(set.order());
                let f = synthesize(&coeffs, &indices, order)?;
                Ok(norm(&f, &local)? / l2_norm(&coeffs))
            })
            .collect::<Result<_>>()?;
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo >= floor_a && hi <= upper {
            report.n = Some(threshold);
            report.ratio_range = Some((lo, hi));
            return Ok(report);
        }
        threshold *= 2;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `m_W(λ) ≤ C m_R(λ/C)`.
    WalshByRademacher,
    /// `m_R(λ) ≤ C m_W(λ/C)`; experimental, no result is known either way.
    RademacherByWalsh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizationReport {
    pub direction: Direction,
    pub grid: Vec<f64>,
    /// Smallest grid value that works, if any.
    pub constant: Option<f64>,
    pub experimental: bool,
    pub walsh_table: DistributionTable,
    pub rademacher_table: DistributionTable,
}

/// `m_f(λ) ≤ C m_g(λ/C)` for every `λ ≥ 0`.
///
/// Both sides are right-continuous step functions of `λ`, constant between
/// the atoms of `f` and the scaled atoms `C v` of `g`, so those points and
/// `λ = 0` suffice.
fn majorized(f: &DistributionTable, g: &DistributionTable, c: f64) -> bool {
    let lhs_ok = |lambda: f64, rhs: f64| f.measure_above(lambda) <= c * rhs;
    if !lhs_ok(0.0, g.measure_above(0.0)) {
        return false;
    }
    if !f.values().all(|v| lhs_ok(v, g.measure_above(v / c))) {
        return false;
    }
    g.values().all(|v| lhs_ok(c * v, g.measure_above(v)))
}

/// Smallest grid `C > 1` for which one sum majorizes the other in distribution.
pub fn majorization_constant(
    coeffs: &[f64],
    indices: &[u64],
    grid: &[f64],
    direction: Direction,
) -> Result<MajorizationReport> {
    if grid.is_empty() {
        return invalid("the grid of candidates is empty");
    }
    if let Some(bad) = grid.iter().find(|c| !(**c > 1.0) || !c.is_finite()) {
        return invalid(format!("candidates must be finite and > 1, got {bad}"));
    }
    let (w, r) = equidistribution_tables(coeffs, indices)?;
    let (f, g) = match direction {
        Direction::WalshByRademacher => (&w, &r),
        Direction::RademacherByWalsh => (&r, &w),
    };
    let constant = grid
        .iter()
        .copied()
        .filter(|&c| majorized(f, g, c))
        .fold(None, |best: Option<f64>, c| {
            Some(best.map_or(c, |b| b.min(c)))
        });
    Ok(MajorizationReport {
        direction,
        grid: grid.to_vec(),
        constant,
        experimental: direction == Direction::RademacherByWalsh,
        walsh_table: w,
        rademacher_table: r,
    })
}
