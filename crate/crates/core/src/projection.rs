//! Operators on `X_n`, the span of the indicators of the order-`n` cells.
//!
//! `X_n` coincides with the span of `w_0, …, w_{2^n - 1}`. Step functions are
//! kept in the interval basis (cell values); an [`OperatorMatrix`] can be
//! written in either basis and is converted through the sign matrix
//! `θ_{j,k} = w_k(I^n_j)`: Walsh coordinates are `c = θ f / 2^n` and
//! `f = θ c`.
//!
//! The sign-flip operator `T_j` multiplies the `k`-th Walsh coordinate by
//! `θ_{j,k}`. Because `w_k(I_j) w_k(I_i) = w_k(I_{i ⊕ j})`, on cell values it is
//! the permutation `i ↦ i ⊕ j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{check_order, DyadicStep};
use crate::error::{invalid, Result};
use crate::exact::DyadicMatrix;
use crate::norms::{norm, NormSpec};
use crate::sampling::{corner_cases, rng_for, unit_sphere};
use crate::walsh::{analyze, lacunary_alpha, min_order, synthesize, theta_matrix, walsh};

/// Largest order for which dense operator matrices are built.
pub const OPERATOR_MAX_ORDER: u32 = 10;
/// Entry-wise tolerance when the identity check falls back to floating point.
pub const FLOAT_FALLBACK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Interval,
    Walsh,
}

/// Block averages over the order-`s` cells, returned at the order of `f`.
pub fn averaging(f: &DyadicStep, s: u32) -> Result<DyadicStep> {
    let n = f.order();
    if s > n {
        return invalid(format!("averaging order {s} exceeds function order {n}"));
    }
    let block = 1usize << (n - s);
    let values = f
        .values()
        .chunks(block)
        .flat_map(|chunk| {
            let avg = crate::dyadic::pairwise_sum(chunk) / block as f64;
            std::iter::repeat_n(avg, block)
        })
        .collect();
    DyadicStep::new(n, values)
}

/// `T_j f`, i.e. `(T_j f)(I^n_i) = f(I^n_{i ⊕ j})`.
pub fn sign_flip(f: &DyadicStep, j: u64) -> Result<DyadicStep> {
    let n = f.order();
    if j >= 1u64 << n {
        return invalid(format!("sign flip index {j} out of range for order {n}"));
    }
    let j = j as usize;
    let values = (0..f.len()).map(|i| f.value(i ^ j)).collect();
    DyadicStep::new(n, values)
}

fn check_selected(selected: &[u64], n: u32) -> Result<()> {
    for (pos, &m) in selected.iter().enumerate() {
        if m >= 1u64 << n {
            return invalid(format!("selected index {m} does not fit order {n}"));
        }
        if selected[..pos].contains(&m) {
            return invalid(format!("selected index {m} repeated"));
        }
    }
    Ok(())
}

/// `P_n f = Σ ⟨w_{m_k}, f⟩ w_{m_k}`.
pub fn rademacher_projection(f: &DyadicStep, selected: &[u64]) -> Result<DyadicStep> {
    let n = f.order();
    check_selected(selected, n)?;
    let coeffs = analyze(f, selected)?;
    synthesize(&coeffs, selected, n)
}

/// One off-diagonal term of `Q_n`: `q_{row}(f)` gains `coeff · ⟨w_{column}, f⟩`.
///
/// `row` is the Walsh index `m_k` (an element of the selected set), `column`
/// a Walsh index outside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub row: u64,
    pub column: u64,
    pub coeff: f64,
}

/// A linear map `X_n → X_n` in the interval or Walsh basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    n: u32,
    basis: Basis,
    entries: Vec<f64>,
}

fn check_operator_order(n: u32) -> Result<()> {
    check_order(n)?;
    if n > OPERATOR_MAX_ORDER {
        return invalid(format!(
            "dense operators limited to order {OPERATOR_MAX_ORDER}, got {n}"
        ));
    }
    Ok(())
}

fn theta_exact(n: u32) -> Result<DyadicMatrix> {
    let theta = theta_matrix(n)?;
    let dim = theta.dim();
    let num = theta.rows().flatten().map(|&v| v as i128).collect();
    Ok(DyadicMatrix::from_integers(dim, num, 0))
}

impl OperatorMatrix {
    pub fn new(n: u32, basis: Basis, entries: Vec<f64>) -> Result<Self> {
        check_operator_order(n)?;
        let dim = 1usize << n;
        if entries.len() != dim * dim {
            return invalid(format!(
                "order {n} operator needs {} entries, got {}",
                dim * dim,
                entries.len()
            ));
        }
        Ok(OperatorMatrix { n, basis, entries })
    }

    pub fn identity(n: u32, basis: Basis) -> Result<Self> {
        check_operator_order(n)?;
        let dim = 1usize << n;
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Ok(OperatorMatrix { n, basis, entries })
    }

    /// `A_s` on `X_n`, in the interval basis.
    pub fn averaging(n: u32, s: u32) -> Result<Self> {
        check_operator_order(n)?;
        if s > n {
            return invalid(format!("averaging order {s} exceeds {n}"));
        }
        let dim = 1usize << n;
        let block = 1usize << (n - s);
        let weight = (block as f64).recip();
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            let start = i / block * block;
            for j in start..start + block {
                entries[i * dim + j] = weight;
            }
        }
        Ok(OperatorMatrix {
            n,
            basis: Basis::Interval,
            entries,
        })
    }

    /// `T_j` on `X_n`, in the Walsh basis: `diag(θ_{j,0}, …, θ_{j,2^n-1})`.
    pub fn sign_flip(n: u32, j: u64) -> Result<Self> {
        check_operator_order(n)?;
        let dim = 1usize << n;
        if j >= dim as u64 {
            return invalid(format!("sign flip index {j} out of range for order {n}"));
        }
        let theta = theta_matrix(n)?;
        let mut entries = vec![0.0; dim * dim];
        for k in 0..dim {
            entries[k * dim + k] = theta.get(j as usize, k) as f64;
        }
        Ok(OperatorMatrix {
            n,
            basis: Basis::Walsh,
            entries,
        })
    }

    /// `P_n` in the Walsh basis.
    pub fn projection(n: u32, selected: &[u64]) -> Result<Self> {
        Self::build_qn(n, selected, &[])
    }

    /// `Q_n` in the Walsh basis: column `i` holds `q_{m_k}(w_i)` in row `m_k`.
    pub fn build_qn(n: u32, selected: &[u64], perturbation: &[Perturbation]) -> Result<Self> {
        check_operator_order(n)?;
        check_selected(selected, n)?;
        let dim = 1usize << n;
        let mut entries = vec![0.0; dim * dim];
        for &m in selected {
            entries[m as usize * dim + m as usize] = 1.0;
        }
        for p in perturbation {
            if !selected.contains(&p.row) {
                return invalid(format!("perturbation row {} is not selected", p.row));
            }
            if p.column >= dim as u64 {
                return invalid(format!("perturbation column {} out of range", p.column));
            }
            if selected.contains(&p.column) {
                return invalid(format!(
                    "perturbation column {} is selected; q_m(w_i) = δ would break",
                    p.column
                ));
            }
            if !p.coeff.is_finite() {
                return invalid("perturbation coefficient must be finite");
            }
            entries[p.row as usize * dim + p.column as usize] += p.coeff;
        }
        Ok(OperatorMatrix {
            n,
            basis: Basis::Walsh,
            entries,
        })
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim() + j]
    }

    /// Exact matrix in the interval basis.
    pub fn to_exact_interval(&self) -> Option<DyadicMatrix> {
        let dim = self.dim();
        let m = DyadicMatrix::from_f64(dim, &self.entries)?;
        match self.basis {
            Basis::Interval => Some(m),
            Basis::Walsh => {
                let theta = theta_exact(self.n).ok()?;
                theta.checked_mul(&m)?.checked_mul(&theta)?.halve(self.n)
            }
        }
    }

    /// Exact matrix in the Walsh basis.
    pub fn to_exact_walsh(&self) -> Option<DyadicMatrix> {
        let dim = self.dim();
        let m = DyadicMatrix::from_f64(dim, &self.entries)?;
        match self.basis {
            Basis::Walsh => Some(m),
            Basis::Interval => {
                let theta = theta_exact(self.n).ok()?;
                theta.checked_mul(&m)?.checked_mul(&theta)?.halve(self.n)
            }
        }
    }

    /// Floating conversion to `basis`, summing in increasing index order.
    pub fn to_basis(&self, basis: Basis) -> OperatorMatrix {
        if basis == self.basis {
            return self.clone();
        }
        let dim = self.dim();
        let theta = theta_matrix(self.n).expect("order checked on construction");
        let t = |i: usize, j: usize| theta.get(i, j) as f64;
        // θ M θ / 2^n in both directions (θ is symmetric, θ² = 2^n I)
        let mut half = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                half[i * dim + j] = (0..dim).fold(0.0, |acc, k| acc + t(i, k) * self.get(k, j));
            }
        }
        let scale = (dim as f64).recip();
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] =
                    (0..dim).fold(0.0, |acc, k| acc + half[i * dim + k] * t(k, j)) * scale;
            }
        }
        OperatorMatrix {
            n: self.n,
            basis,
            entries,
        }
    }

    /// `T f` for `f` at order `n`.
    pub fn apply(&self, f: &DyadicStep) -> Result<DyadicStep> {
        if f.order() != self.n {
            return invalid(format!(
                "operator on X_{} applied to a function of order {}",
                self.n,
                f.order()
            ));
        }
        let interval = self.to_basis(Basis::Interval);
        Ok(interval.apply_interval(f.values()))
    }

    fn apply_interval(&self, values: &[f64]) -> DyadicStep {
        debug_assert_eq!(self.basis, Basis::Interval);
        let dim = self.dim();
        let out = (0..dim)
            .map(|i| {
                self.entries[i * dim..(i + 1) * dim]
                    .iter()
                    .zip(values)
                    .fold(0.0, |acc, (&m, &v)| acc + m * v)
            })
            .collect();
        DyadicStep::new(self.n, out).expect("dimension matches")
    }
}

impl Serialize for OperatorMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let rows: Vec<&[f64]> = self.entries.chunks(self.dim()).collect();
        let mut st = s.serialize_struct("OperatorMatrix", 3)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("basis", &self.basis)?;
        st.serialize_field("entries", &rows)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for OperatorMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: u32,
            basis: Basis,
            entries: Vec<Vec<f64>>,
        }
        let raw = Raw::deserialize(d)?;
        let dim = 1usize << raw.n.min(31);
        if raw.entries.iter().any(|r| r.len() != dim) {
            return Err(serde::de::Error::custom(
                "operator rows have the wrong length",
            ));
        }
        OperatorMatrix::new(
            raw.n,
            raw.basis,
            raw.entries.into_iter().flatten().collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Outcome of checking `P_n = 2^{-n} Σ_j T_j Q_n T_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub holds: bool,
    /// Largest entry-wise deviation, interval basis.
    pub residual: f64,
    /// `false` when the computation fell back to floating point.
    pub exact: bool,
}

fn xor_perm(dim: usize, j: usize) -> Vec<usize> {
    (0..dim).map(|i| i ^ j).collect()
}

fn averaged_exact(n: u32, q: &DyadicMatrix) -> Option<DyadicMatrix> {
    let dim = q.dim();
    let mut acc = DyadicMatrix::zeros(dim);
    for j in 0..dim {
        acc = acc.checked_add(&q.permute(&xor_perm(dim, j)))?;
    }
    acc.halve(n)
}

fn verify_exact(n: u32, selected: &[u64], q: &OperatorMatrix) -> Option<Result<IdentityCheck>> {
    let q_int = q.to_exact_interval()?;
    let square = q_int.checked_mul(&q_int)?;
    if square != q_int {
        return Some(invalid("Q is not a projection: Q² ≠ Q"));
    }
    let p_int = OperatorMatrix::projection(n, selected)
        .ok()?
        .to_exact_interval()?;
    let averaged = averaged_exact(n, &q_int)?;
    let residual = averaged.max_abs_diff(&p_int)?;
    Some(Ok(IdentityCheck {
        holds: residual == 0.0,
        residual,
        exact: true,
    }))
}

fn verify_float(n: u32, selected: &[u64], q: &OperatorMatrix) -> Result<IdentityCheck> {
    let q_int = q.to_basis(Basis::Interval);
    let dim = q.dim();
    let at = |i: usize, j: usize| q_int.entries[i * dim + j];
    for i in 0..dim {
        for j in 0..dim {
            let sq = (0..dim).fold(0.0, |acc, k| acc + at(i, k) * at(k, j));
            if (sq - at(i, j)).abs() > FLOAT_FALLBACK_TOL {
                return invalid("Q is not a projection: Q² ≠ Q");
            }
        }
    }
    let p_int = OperatorMatrix::projection(n, selected)?.to_basis(Basis::Interval);
    let scale = (dim as f64).recip();
    let mut residual: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            let sum = (0..dim).fold(0.0, |acc, j| acc + at(a ^ j, b ^ j));
            residual = residual.max((sum * scale - p_int.entries[a * dim + b]).abs());
        }
    }
    Ok(IdentityCheck {
        holds: residual <= FLOAT_FALLBACK_TOL,
        residual,
        exact: false,
    })
}

/// Checks the averaging identity `P_n = 2^{-n} Σ_j T_j Q T_j`.
///
/// Runs over the dyadic rationals whenever the entries of `Q` fit, otherwise
/// in floating point with tolerance [`FLOAT_FALLBACK_TOL`].
pub fn verify_averaging_identity(
    n: u32,
    selected: &[u64],
    q: &OperatorMatrix,
) -> Result<IdentityCheck> {
    check_operator_order(n)?;
    check_selected(selected, n)?;
    if q.order() != n {
        return invalid(format!("Q acts on X_{} but n = {n}", q.order()));
    }
    match verify_exact(n, selected, q) {
        Some(result) => result,
        None => verify_float(n, selected, q),
    }
}

/// Deterministic test functions: every `w_k` and every dyadic-interval indicator.
fn extremal_candidates(n: u32) -> Vec<Vec<f64>> {
    let dim = 1usize << n;
    let mut out: Vec<Vec<f64>> = (0..dim as u64)
        .map(|k| walsh(k, n).expect("order checked").into_values())
        .collect();
    for s in 0..=n {
        let width = dim >> s;
        for j in 0..1usize << s {
            let mut chi = vec![0.0; dim];
            chi[j * width..(j + 1) * width].fill(1.0);
            out.push(chi);
        }
    }
    out
}

fn best_ratio(ratios: impl ParallelIterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    ratios.reduce_with(|a, b| {
        if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
            b
        } else {
            a
        }
    })
}

/// Lower bound for `‖T‖_{X_n → X_n}` from sampled functions.
///
/// Candidates are the Walsh functions, indicators of dyadic intervals and
/// `samples` Gaussian vectors (sample `i` seeded with `seed ^ i`). The value
/// is a lower estimate; the true norm is never computed.
pub fn operator_norm_estimate(
    op: &OperatorMatrix,
    spec: &NormSpec,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return invalid("need at least one sample");
    }
    spec.validate()?;
    let n = op.order();
    let interval = op.to_basis(Basis::Interval);
    let fixed = extremal_candidates(n);
    let total = fixed.len() + samples;
    let ratios = (0..total)
        .into_par_iter()
        .map(|idx| -> Result<(usize, f64)> {
            let values = if idx < fixed.len() {
                fixed[idx].clone()
            } else {
                let i = (idx - fixed.len()) as u64;
                unit_sphere(&mut rng_for(seed, i), 1 << n)
            };
            let f = DyadicStep::new(n, values)?;
            let denom = norm(&f, spec)?;
            if denom == 0.0 {
                return Ok((idx, 0.0));
            }
            let image = interval.apply_interval(f.values());
            Ok((idx, norm(&image, spec)? / denom))
        });
    let ratios: Vec<(usize, f64)> = ratios.collect::<Result<_>>()?;
    Ok(best_ratio(ratios.into_par_iter()).map_or(0.0, |b| b.1))
}

/// Empirical basis constant of `(w_{n_k})` next to the bound from averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisConstantReport {
    pub spec: NormSpec,
    pub indices: Vec<u64>,
    /// Smallest consecutive ratio `n_{k+1}/n_k`.
    pub q: f64,
    pub alpha: u32,
    pub samples: usize,
    pub seed: u64,
    /// `sup ‖Σ_{k≤M}‖ / ‖Σ_{k≤N}‖` over samples and cut points `M < N`; a lower estimate.
    pub estimate: f64,
    /// `C + α C₁ φ_X(1) = 1 + α` for `L^p`, `p ≥ 1`; absent otherwise.
    pub bound: Option<f64>,
}

pub fn basis_constant_estimate(
    indices: &[u64],
    spec: &NormSpec,
    samples: usize,
    seed: u64,
) -> Result<BasisConstantReport> {
    if samples == 0 {
        return invalid("need at least one sample");
    }
    spec.validate()?;
    if indices.is_empty() || indices[0] == 0 || indices.windows(2).any(|w| w[1] <= w[0]) {
        return invalid(format!(
            "indices {indices:?} are not lacunary: need strictly increasing positive integers"
        ));
    }
    let q = indices
        .windows(2)
        .map(|w| w[1] as f64 / w[0] as f64)
        .fold(f64::INFINITY, f64::min);
    let alpha = if q.is_finite() { lacunary_alpha(q)? } else { 0 };
    let bound = match spec {
        NormSpec::Lp(crate::norms::Exponent::Finite(p)) if *p >= 1.0 => Some(1.0 + alpha as f64),
        NormSpec::Lp(crate::norms::Exponent::Infinity) => Some(1.0 + alpha as f64),
        _ => None,
    };
    let mut report = BasisConstantReport {
        spec: spec.clone(),
        indices: indices.to_vec(),
        q,
        alpha,
        samples,
        seed,
        estimate: 1.0,
        bound,
    };
    if indices.len() == 1 {
        return Ok(report);
    }
    let n = min_order(indices);
    check_order(n)?;
    let m = indices.len();
    let walsh_fns: Vec<DyadicStep> = indices
        .iter()
        .map(|&k| walsh(k, n))
        .collect::<Result<_>>()?;
    let corners = corner_cases(m);
    let ratios: Vec<(usize, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<(usize, f64)> {
            let coeffs = if i < corners.len() {
                corners[i].clone()
            } else {
                unit_sphere(&mut rng_for(seed, i as u64), m)
            };
            let mut partial = DyadicStep::zero(n)?;
            let mut norms = Vec::with_capacity(m);
            for (a, w) in coeffs.iter().zip(&walsh_fns) {
                partial = &partial + &w.scale(*a);
                norms.push(norm(&partial, spec)?);
            }
            let mut worst: f64 = 0.0;
            for big in 1..m {
                if norms[big] == 0.0 {
                    continue;
                }
                for small in 0..big {
                    worst = worst.max(norms[small] / norms[big]);
                }
            }
            Ok((i, worst))
        })
        .collect::<Result<_>>()?;
    report.estimate = best_ratio(ratios.into_par_iter()).map_or(0.0, |b| b.1);
    Ok(report)
}
