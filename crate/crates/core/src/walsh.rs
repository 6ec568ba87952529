//! Paley-numbered Walsh and Rademacher functions.
//!
//! For `k = a_1 2^0 + … + a_n 2^{n-1}` the Walsh function is
//! `w_k = r_1^{a_1} ⋯ r_n^{a_n}`. On `I^n_j`, with `j = b_1 2^0 + … + b_n 2^{n-1}`,
//! it takes the value `(-1)^{a_1 b_n + a_2 b_{n-1} + … + a_n b_1}`, i.e. the
//! parity of `k & rev_n(j)` where `rev_n` reverses the low `n` bits.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::dyadic::{check_order, pairwise_sum, DyadicStep};
use crate::error::{invalid, Result};

/// Largest order for which a dense [`SignMatrix`] is materialised (16 MiB).
pub const THETA_MAX_ORDER: u32 = 12;

/// A Walsh index together with its binary digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PaleyIndex(pub u64);

impl PaleyIndex {
    /// Digits `(a_1, …, a_n)`, least significant first, of minimal length.
    pub fn bits(self) -> Vec<u8> {
        (0..self.order())
            .map(|i| ((self.0 >> i) & 1) as u8)
            .collect()
    }

    /// `n` with `2^{n-1} ≤ k < 2^n`; zero for `k = 0`.
    pub fn order(self) -> u32 {
        order_of(self.0)
    }

    /// Index of the product `w_i · w_j`.
    pub fn product(self, other: PaleyIndex) -> PaleyIndex {
        walsh_product_index(self, other)
    }
}

impl From<u64> for PaleyIndex {
    fn from(k: u64) -> Self {
        PaleyIndex(k)
    }
}

pub fn order_of(k: u64) -> u32 {
    u64::BITS - k.leading_zeros()
}

/// Reverses the low `n` bits of `j`.
pub fn bit_reverse(j: u64, n: u32) -> u64 {
    if n == 0 {
        0
    } else {
        j.reverse_bits() >> (u64::BITS - n)
    }
}

/// `true` when `w_k` is negative on `I^n_j`.
#[inline]
pub fn walsh_negative(k: u64, j: u64, n: u32) -> bool {
    (k & bit_reverse(j, n)).count_ones() & 1 == 1
}

/// `w_k(I^n_j)` as `±1`.
#[inline]
pub fn walsh_sign(k: u64, j: u64, n: u32) -> i8 {
    if walsh_negative(k, j, n) {
        -1
    } else {
        1
    }
}

fn check_index_fits(k: u64, n: u32) -> Result<()> {
    check_order(n)?;
    if order_of(k) > n {
        return invalid(format!(
            "w_{k} has order {} and is not constant on cells of order {n}",
            order_of(k)
        ));
    }
    Ok(())
}

/// `w_k` as a step function of order `n`.
pub fn walsh(k: impl Into<PaleyIndex>, n: u32) -> Result<DyadicStep> {
    let k = k.into().0;
    check_index_fits(k, n)?;
    Ok(DyadicStep::from_parts_unchecked(
        n,
        (0..1u64 << n).map(|j| walsh_sign(k, j, n) as f64).collect(),
    ))
}

/// `r_k(t) = sign sin(2^k π t)` as a step function of order `n ≥ k`.
pub fn rademacher(k: u32, n: u32) -> Result<DyadicStep> {
    if k == 0 {
        return invalid("Rademacher functions are indexed from 1");
    }
    check_order(n)?;
    if n < k {
        return invalid(format!("r_{k} is not constant on cells of order {n}"));
    }
    let shift = n - k;
    Ok(DyadicStep::from_parts_unchecked(
        n,
        (0..1usize << n)
            .map(|j| if (j >> shift) & 1 == 0 { 1.0 } else { -1.0 })
            .collect(),
    ))
}

/// Index `k` with `w_k = w_i · w_j` (bitwise XOR in Paley numbering).
pub fn walsh_product_index(i: PaleyIndex, j: PaleyIndex) -> PaleyIndex {
    PaleyIndex(i.0 ^ j.0)
}

/// The `2^n × 2^n` sign matrix `θ_{j,k} = w_k(I^n_j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMatrix {
    n: u32,
    entries: Vec<i8>,
}

pub fn theta_matrix(n: u32) -> Result<SignMatrix> {
    if n > THETA_MAX_ORDER {
        return invalid(format!(
            "dense sign matrix limited to order {THETA_MAX_ORDER}, got {n}"
        ));
    }
    let dim = 1u64 << n;
    let mut entries = Vec::with_capacity((dim * dim) as usize);
    for j in 0..dim {
        let rev = bit_reverse(j, n);
        entries.extend((0..dim).map(|k| {
            if (k & rev).count_ones() & 1 == 1 {
                -1
            } else {
                1
            }
        }));
    }
    Ok(SignMatrix { n, entries })
}

impl SignMatrix {
    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, j: usize, k: usize) -> i8 {
        self.entries[j * self.dim() + k]
    }

    pub fn row(&self, j: usize) -> &[i8] {
        let dim = self.dim();
        &self.entries[j * dim..(j + 1) * dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.entries.chunks(self.dim())
    }

    pub fn is_symmetric(&self) -> bool {
        let dim = self.dim();
        (0..dim).all(|j| (j + 1..dim).all(|k| self.get(j, k) == self.get(k, j)))
    }

    /// `θ θᵀ` in integer arithmetic, row-major.
    pub fn gram(&self) -> Vec<i64> {
        let dim = self.dim();
        let mut out = vec![0i64; dim * dim];
        for (j, rj) in self.rows().enumerate() {
            for (k, rk) in self.rows().enumerate().skip(j) {
                let dot: i32 = rj.iter().zip(rk).map(|(&a, &b)| (a * b) as i32).sum();
                out[j * dim + k] = dot as i64;
                out[k * dim + j] = dot as i64;
            }
        }
        out
    }

    /// `θ θᵀ = 2^n · I` exactly.
    pub fn is_orthogonal(&self) -> bool {
        let dim = self.dim();
        let scale = dim as i64;
        self.gram()
            .iter()
            .enumerate()
            .all(|(idx, &g)| g == if idx / dim == idx % dim { scale } else { 0 })
    }

    pub fn to_rows(&self) -> Vec<Vec<i8>> {
        self.rows().map(<[i8]>::to_vec).collect()
    }
}

impl Serialize for SignMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SignMatrix", 2)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("entries", &self.to_rows())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SignMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: u32,
            entries: Vec<Vec<i8>>,
        }
        let raw = Raw::deserialize(d)?;
        let dim = 1usize << raw.n;
        if raw.entries.len() != dim || raw.entries.iter().any(|r| r.len() != dim) {
            return Err(serde::de::Error::custom("sign matrix has wrong shape"));
        }
        if raw.entries.iter().flatten().any(|&v| v != 1 && v != -1) {
            return Err(serde::de::Error::custom("sign matrix entries must be ±1"));
        }
        Ok(SignMatrix {
            n: raw.n,
            entries: raw.entries.into_iter().flatten().collect(),
        })
    }
}

/// A finite coefficient sequence `(a_1, …, a_M)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoeffSeq(pub Vec<f64>);

impl CoeffSeq {
    /// `(Σ a_k²)^{1/2}`.
    pub fn l2(&self) -> f64 {
        l2_norm(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0.0)
    }
}

impl Deref for CoeffSeq {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for CoeffSeq {
    fn from(v: Vec<f64>) -> Self {
        CoeffSeq(v)
    }
}

pub fn l2_norm(a: &[f64]) -> f64 {
    let squares: Vec<f64> = a.iter().map(|x| x * x).collect();
    pairwise_sum(&squares).sqrt()
}

/// Least `α` with `q^α ≥ 2`, and `0` once `q ≥ 2`.
pub fn lacunary_alpha(q: f64) -> Result<u32> {
    if q.is_nan() || q <= 1.0 || q.is_infinite() {
        return invalid(format!("lacunarity ratio must be a finite q > 1, got {q}"));
    }
    if q >= 2.0 {
        return Ok(0);
    }
    let mut alpha = 1;
    let mut power = q;
    while power < 2.0 {
        power *= q;
        alpha += 1;
    }
    Ok(alpha)
}

/// Exact test of `a ≥ q·b` for a finite `q > 0`.
///
/// Every finite `f64` is `m·2^e` with integer `m`, so the comparison reduces
/// to integer arithmetic.
pub(crate) fn ge_scaled(a: u64, q: f64, b: u64) -> bool {
    let bits = q.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), raw_exp - 1075)
    };
    let prod = mant as u128 * b as u128;
    if prod == 0 {
        return true;
    }
    if exp >= 0 {
        let e = exp as u32;
        if e >= prod.leading_zeros() {
            return false;
        }
        a as u128 >= prod << e
    } else {
        let e = (-exp) as u32;
        if e >= 128 {
            return a >= 1;
        }
        let ceil = (prod >> e) + u128::from(prod & ((1u128 << e) - 1) != 0);
        a as u128 >= ceil
    }
}

/// Checks `n_{k+1} ≥ q·n_k` for every consecutive pair; returns the verdict
/// and `α`.
pub fn validate_lacunary(indices: &[u64], q: f64) -> Result<(bool, u32)> {
    let alpha = lacunary_alpha(q)?;
    let ok = indices.windows(2).all(|w| ge_scaled(w[1], q, w[0]))
        && indices.first().is_none_or(|&n| n >= 1);
    Ok((ok, alpha))
}

/// A validated `q`-lacunary sequence of positive Walsh indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LacunarySeq {
    indices: Vec<u64>,
    q: f64,
    alpha: u32,
}

impl LacunarySeq {
    pub fn new(indices: Vec<u64>, q: f64) -> Result<Self> {
        if indices.is_empty() {
            return invalid("a lacunary sequence needs at least one index");
        }
        let (ok, alpha) = validate_lacunary(&indices, q)?;
        if !ok {
            return invalid(format!("indices {indices:?} are not {q}-lacunary"));
        }
        Ok(LacunarySeq { indices, q, alpha })
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }
}

impl AsRef<[u64]> for LacunarySeq {
    fn as_ref(&self) -> &[u64] {
        &self.indices
    }
}

/// Smallest order on which every `w_{n_k}` is constant.
pub fn min_order(indices: &[u64]) -> u32 {
    indices.iter().map(|&k| order_of(k)).max().unwrap_or(0)
}

/// `Σ a_k w_{n_k}` at order `n`, each cell summed in increasing `k`.
pub fn synthesize(coeffs: &[f64], indices: impl AsRef<[u64]>, n: u32) -> Result<DyadicStep> {
    let indices = indices.as_ref();
    if coeffs.len() != indices.len() {
        return invalid(format!(
            "{} coefficients for {} indices",
            coeffs.len(),
            indices.len()
        ));
    }
    check_order(n)?;
    if min_order(indices) > n {
        return invalid(format!(
            "order {n} too small for index {}",
            indices.iter().max().copied().unwrap_or(0)
        ));
    }
    let values = (0..1u64 << n)
        .map(|j| {
            let rev = bit_reverse(j, n);
            coeffs.iter().zip(indices).fold(0.0, |acc, (&a, &k)| {
                if (k & rev).count_ones() & 1 == 1 {
                    acc - a
                } else {
                    acc + a
                }
            })
        })
        .collect();
    Ok(DyadicStep::from_parts_unchecked(n, values))
}

/// `Σ a_k r_k` at order `M`, the Rademacher counterpart of [`synthesize`].
pub fn rademacher_sum(coeffs: &[f64]) -> Result<DyadicStep> {
    let indices: Vec<u64> = (0..coeffs.len() as u32).map(|k| 1u64 << k).collect();
    synthesize(coeffs, &indices, coeffs.len() as u32)
}

/// `(⟨w_{n_k}, f⟩)_k`.
pub fn analyze(f: &DyadicStep, indices: impl AsRef<[u64]>) -> Result<CoeffSeq> {
    let indices = indices.as_ref();
    let n = f.order().max(min_order(indices));
    let f = f.refine(n)?;
    let coeffs = indices
        .iter()
        .map(|&k| {
            let w = walsh(k, n)?;
            Ok((&f * &w).integral())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CoeffSeq(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `r_k` sampled at cell midpoints straight from `sign sin(2^k π t)`.
    fn rademacher_oracle(k: u32, n: u32) -> Vec<f64> {
        (0..1usize << n)
            .map(|j| {
                let t = (j as f64 + 0.5) / (1u64 << n) as f64;
                (2f64.powi(k as i32) * std::f64::consts::PI * t)
                    .sin()
                    .signum()
            })
            .collect()
    }

    #[test]
    fn walsh_examples() {
        assert_eq!(walsh(0u64, 2).unwrap().values(), &[1.0; 4]);
        assert_eq!(walsh(1u64, 1).unwrap().values(), &[1.0, -1.0]);
        let prod = &rademacher(1, 3).unwrap() * &rademacher(3, 3).unwrap();
        assert_eq!(walsh(5u64, 3).unwrap(), prod);
        assert!(walsh(4u64, 2).is_err());
    }

    #[test]
    fn rademacher_examples() {
        assert_eq!(rademacher(1, 1).unwrap().values(), &[1.0, -1.0]);
        assert_eq!(rademacher(2, 2).unwrap().values(), &[1.0, -1.0, 1.0, -1.0]);
        assert!(rademacher(3, 2).is_err());
        assert!(rademacher(0, 2).is_err());
        for k in 1..=10 {
            for n in k..=11 {
                let r = rademacher(k, n).unwrap();
                assert_eq!(r.values(), rademacher_oracle(k, n).as_slice());
                assert_eq!(r, walsh(1u64 << (k - 1), n).unwrap());
            }
        }
    }

    #[test]
    fn paley_bits() {
        assert_eq!(PaleyIndex(0).bits(), Vec::<u8>::new());
        assert_eq!(PaleyIndex(0).order(), 0);
        assert_eq!(PaleyIndex(6).bits(), vec![0, 1, 1]);
        assert_eq!(PaleyIndex(6).order(), 3);
        for k in 1..1000u64 {
            let p = PaleyIndex(k);
            let n = p.order();
            assert!(1 << (n - 1) <= k && k < 1 << n);
            let rebuilt: u64 = p
                .bits()
                .iter()
                .enumerate()
                .map(|(i, &a)| (a as u64) << i)
                .sum();
            assert_eq!(rebuilt, k);
            assert_eq!(*p.bits().last().unwrap(), 1);
        }
    }

    #[test]
    fn product_index_examples() {
        assert_eq!(
            walsh_product_index(PaleyIndex(1), PaleyIndex(2)),
            PaleyIndex(3)
        );
        assert_eq!(
            walsh_product_index(PaleyIndex(5), PaleyIndex(3)),
            PaleyIndex(6)
        );
        let prod = &walsh(5u64, 3).unwrap() * &walsh(3u64, 3).unwrap();
        assert_eq!(prod, walsh(6u64, 3).unwrap());
    }

    #[test]
    fn theta_small() {
        let t = theta_matrix(1).unwrap();
        assert_eq!(t.to_rows(), vec![vec![1, 1], vec![1, -1]]);
        for n in 0..=6 {
            let t = theta_matrix(n).unwrap();
            assert!(t.row(0).iter().all(|&v| v == 1));
            assert!(t.is_symmetric());
            assert!(t.is_orthogonal());
        }
        assert!(theta_matrix(THETA_MAX_ORDER + 1).is_err());
    }

    #[test]
    fn theta_json_shape() {
        let json = serde_json::to_string(&theta_matrix(1).unwrap()).unwrap();
        assert_eq!(json, r#"{"n":1,"entries":[[1,1],[1,-1]]}"#);
        let back: SignMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, theta_matrix(1).unwrap());
    }

    #[test]
    fn synthesize_examples() {
        assert_eq!(
            synthesize(&[1.0], [1], 1).unwrap(),
            rademacher(1, 1).unwrap()
        );
        assert_eq!(
            synthesize(&[1.0, 1.0], [1, 2], 2).unwrap().values(),
            &[2.0, 0.0, 0.0, -2.0]
        );
        assert!(synthesize(&[1.0], [4], 2).is_err());
        assert!(synthesize(&[1.0, 2.0], [1], 2).is_err());
    }

    #[test]
    fn analyze_examples() {
        let r1 = rademacher(1, 1).unwrap();
        assert_eq!(analyze(&r1, [1, 2, 3]).unwrap().0, vec![1.0, 0.0, 0.0]);
        let w0 = walsh(0u64, 0).unwrap();
        assert_eq!(analyze(&w0, [1, 2, 3, 4]).unwrap().0, vec![0.0; 4]);
    }

    #[test]
    fn lacunary_examples() {
        assert_eq!(validate_lacunary(&[1, 2, 4, 8], 2.0).unwrap(), (true, 0));
        assert_eq!(validate_lacunary(&[1, 3, 6], 2.0).unwrap(), (true, 0));
        assert!(!validate_lacunary(&[2, 3], 2.0).unwrap().0);
        assert!(validate_lacunary(&[1, 2], 1.0).is_err());
        assert!(validate_lacunary(&[1, 2], 0.5).is_err());
        assert_eq!(lacunary_alpha(1.5).unwrap(), 2);
        assert_eq!(lacunary_alpha(1.9).unwrap(), 2);
        assert_eq!(lacunary_alpha(1.1).unwrap(), 8);
        assert_eq!(lacunary_alpha(3.0).unwrap(), 0);
        assert!(LacunarySeq::new(vec![2, 3], 2.0).is_err());
        assert_eq!(LacunarySeq::new(vec![2, 3], 1.5).unwrap().alpha(), 2);
    }

    #[test]
    fn lacunary_comparison_is_exact() {
        // 0.1 is not representable; 10·0.1 rounds to 1.0 in floating point
        // but the exact product exceeds 1.
        assert!(!ge_scaled(1, 0.1, 10));
        assert!(ge_scaled(2, 0.1, 10));
        assert!(ge_scaled(3, 1.5, 2));
        assert!(!ge_scaled(2, 1.5, 2));
        assert!(ge_scaled(u64::MAX, 2.0, u64::MAX / 2));
        assert!(!ge_scaled(u64::MAX, 4.0, u64::MAX / 2));
        assert!(ge_scaled(1, f64::MIN_POSITIVE, 1));
    }
}
