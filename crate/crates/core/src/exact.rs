//! Exact arithmetic over dyadic rationals.
//!
//! A [`DyadicMatrix`] stores `num / 2^exp` with one shared exponent and `i128`
//! numerators. Every finite `f64` is a dyadic rational, so conversion from
//! floating entries is exact whenever the numerators fit; all operations are
//! checked and return `None` on overflow.

/// Splits a finite `x` into `(m, e)` with `x = m / 2^e`, `m` odd or zero,
/// `e ≥ 0`. Returns `None` if `x` is not finite or needs `e > 126`.
pub fn split_dyadic(x: f64) -> Option<(i128, u32)> {
    if !x.is_finite() {
        return None;
    }
    if x == 0.0 {
        return Some((0, 0));
    }
    let bits = x.to_bits();
    let sign: i128 = if bits >> 63 == 1 { -1 } else { 1 };
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    let (mut mant, mut exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1i128 << 52), raw_exp - 1075)
    };
    let tz = mant.trailing_zeros() as i32;
    mant >>= tz;
    exp += tz;
    if exp >= 0 {
        let shifted = mant.checked_shl(exp as u32)?;
        if shifted >> exp != mant || shifted.leading_zeros() < 2 {
            return None;
        }
        Some((sign * shifted, 0))
    } else if -exp > 126 {
        None
    } else {
        Some((sign * mant, (-exp) as u32))
    }
}

/// Square matrix over the dyadic rationals, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicMatrix {
    dim: usize,
    exp: u32,
    num: Vec<i128>,
}

impl DyadicMatrix {
    pub fn zeros(dim: usize) -> Self {
        DyadicMatrix {
            dim,
            exp: 0,
            num: vec![0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.num[i * dim + i] = 1;
        }
        m
    }

    /// Exact conversion of a row-major `f64` matrix.
    pub fn from_f64(dim: usize, entries: &[f64]) -> Option<Self> {
        assert_eq!(entries.len(), dim * dim);
        let parts: Vec<(i128, u32)> = entries
            .iter()
            .map(|&x| split_dyadic(x))
            .collect::<Option<_>>()?;
        let exp = parts.iter().map(|p| p.1).max().unwrap_or(0);
        if exp > 126 {
            return None;
        }
        let num = parts
            .into_iter()
            .map(|(m, e)| {
                let shift = exp - e;
                let v = m.checked_mul(1i128.checked_shl(shift)?)?;
                Some(v)
            })
            .collect::<Option<Vec<i128>>>()?;
        Some(DyadicMatrix { dim, exp, num }.normalized())
    }

    /// Builds `num / 2^exp` directly from integer numerators.
    pub fn from_integers(dim: usize, num: Vec<i128>, exp: u32) -> Self {
        assert_eq!(num.len(), dim * dim);
        DyadicMatrix { dim, exp, num }.normalized()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Shared denominator exponent after normalisation.
    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn numerator(&self, i: usize, j: usize) -> i128 {
        self.num[i * self.dim + j]
    }

    /// Divides every entry out by the largest common power of two.
    pub fn normalized(mut self) -> Self {
        let common = self
            .num
            .iter()
            .filter(|&&v| v != 0)
            .map(|v| v.trailing_zeros())
            .min()
            .unwrap_or(u32::MAX)
            .min(self.exp);
        if common > 0 {
            for v in &mut self.num {
                *v >>= common;
            }
            self.exp -= common;
        }
        if self.num.iter().all(|&v| v == 0) {
            self.exp = 0;
        }
        self
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let scale = (-(self.exp as f64)).exp2();
        self.num.iter().map(|&v| v as f64 * scale).collect()
    }

    /// `self / 2^k`.
    pub fn halve(&self, k: u32) -> Option<Self> {
        let exp = self.exp.checked_add(k)?;
        if exp > 126 {
            return None;
        }
        Some(
            DyadicMatrix {
                dim: self.dim,
                exp,
                num: self.num.clone(),
            }
            .normalized(),
        )
    }

    fn aligned(&self, other: &Self) -> Option<(Vec<i128>, Vec<i128>, u32)> {
        let exp = self.exp.max(other.exp);
        let lift = |m: &Self| -> Option<Vec<i128>> {
            let factor = 1i128.checked_shl(exp - m.exp)?;
            m.num.iter().map(|&v| v.checked_mul(factor)).collect()
        };
        Some((lift(self)?, lift(other)?, exp))
    }

    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        assert_eq!(self.dim, other.dim);
        let (a, b, exp) = self.aligned(other)?;
        let num = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| x.checked_add(y))
            .collect::<Option<Vec<i128>>>()?;
        Some(
            DyadicMatrix {
                dim: self.dim,
                exp,
                num,
            }
            .normalized(),
        )
    }

    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        assert_eq!(self.dim, other.dim);
        let (a, b, exp) = self.aligned(other)?;
        let num = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| x.checked_sub(y))
            .collect::<Option<Vec<i128>>>()?;
        Some(
            DyadicMatrix {
                dim: self.dim,
                exp,
                num,
            }
            .normalized(),
        )
    }

    pub fn checked_mul(&self, other: &Self) -> Option<Self> {
        assert_eq!(self.dim, other.dim);
        let dim = self.dim;
        let exp = self.exp.checked_add(other.exp)?;
        if exp > 126 {
            return None;
        }
        let mut num = vec![0i128; dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                let a = self.num[i * dim + k];
                if a == 0 {
                    continue;
                }
                let row = &other.num[k * dim..(k + 1) * dim];
                let out = &mut num[i * dim..(i + 1) * dim];
                for (o, &b) in out.iter_mut().zip(row) {
                    *o = o.checked_add(a.checked_mul(b)?)?;
                }
            }
        }
        Some(DyadicMatrix { dim, exp, num }.normalized())
    }

    /// `max |self - other|` as a float; exactly `0.0` iff the matrices agree.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        let diff = self.checked_sub(other)?;
        let scale = (-(diff.exp as f64)).exp2();
        Some(
            diff.num
                .iter()
                .map(|&v| (v as f64 * scale).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Multiplies entry `(i, j)` by `row_sign[i] · col_sign[j]`.
    pub fn sign_conjugate(&self, row_sign: &[i8], col_sign: &[i8]) -> Self {
        let dim = self.dim;
        let num = self
            .num
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                if row_sign[idx / dim] * col_sign[idx % dim] < 0 {
                    -v
                } else {
                    v
                }
            })
            .collect();
        DyadicMatrix {
            dim,
            exp: self.exp,
            num,
        }
    }

    /// Entry-wise `(i, j) ↦ self[π(i), π(j)]` for a permutation `π`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let dim = self.dim;
        let mut num = Vec::with_capacity(dim * dim);
        for &pi in perm {
            num.extend(perm.iter().map(|&pj| self.num[pi * dim + pj]));
        }
        DyadicMatrix {
            dim,
            exp: self.exp,
            num,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_examples() {
        assert_eq!(split_dyadic(0.0), Some((0, 0)));
        assert_eq!(split_dyadic(-0.0), Some((0, 0)));
        assert_eq!(split_dyadic(1.0), Some((1, 0)));
        assert_eq!(split_dyadic(-3.0), Some((-3, 0)));
        assert_eq!(split_dyadic(0.375), Some((3, 3)));
        assert_eq!(split_dyadic(1024.0), Some((1024, 0)));
        let (m, e) = split_dyadic(0.1).unwrap();
        assert_eq!(m as f64 / 2f64.powi(e as i32), 0.1);
        assert_eq!(split_dyadic(f64::NAN), None);
        assert_eq!(split_dyadic(1e-300), None);
        assert_eq!(split_dyadic(1e300), None);
    }

    #[test]
    fn arithmetic_is_exact() {
        let a = DyadicMatrix::from_f64(2, &[0.5, 0.25, -1.0, 3.0]).unwrap();
        assert_eq!(a.exponent(), 2);
        let i = DyadicMatrix::identity(2);
        assert_eq!(a.checked_mul(&i).unwrap(), a);
        let sq = a.checked_mul(&a).unwrap();
        assert_eq!(sq.to_f64(), vec![0.0, 0.875, -3.5, 8.75]);
        let zero = a.checked_sub(&a).unwrap();
        assert_eq!(zero, DyadicMatrix::zeros(2));
        assert_eq!(a.max_abs_diff(&a), Some(0.0));
        assert_eq!(a.halve(1).unwrap().to_f64(), vec![0.25, 0.125, -0.5, 1.5]);
    }

    #[test]
    fn overflow_is_reported() {
        let big = DyadicMatrix::from_integers(1, vec![i128::MAX / 2], 0);
        assert!(big.checked_mul(&big).is_none());
        assert!(big.checked_add(&big).is_some());
        let bigger = big.checked_add(&big).unwrap();
        assert!(bigger.checked_add(&bigger).is_none());
    }

    #[test]
    fn permute_and_sign() {
        let a = DyadicMatrix::from_integers(2, vec![1, 2, 3, 4], 0);
        assert_eq!(
            a.permute(&[1, 0]),
            DyadicMatrix::from_integers(2, vec![4, 3, 2, 1], 0)
        );
        assert_eq!(
            a.sign_conjugate(&[1, -1], &[1, -1]),
            DyadicMatrix::from_integers(2, vec![1, -2, -3, 4], 0)
        );
    }
}
