//! Step functions on dyadic partitions of `[0,1]`.
//!
//! A [`DyadicStep`] of order `n` holds one value per open interval
//! `I^n_j = (j/2^n, (j+1)/2^n)`; endpoint values are ignored. Every sum over
//! cells goes through [`pairwise_sum`], which halves the slice recursively.
//! For power-of-two lengths this makes sums exactly refinement invariant:
//! duplicating each value doubles every partial sum without rounding.

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::MAX_ORDER;

/// Deterministic pairwise summation in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        len => {
            let (left, right) = values.split_at(len / 2);
            pairwise_sum(left) + pairwise_sum(right)
        }
    }
}

pub(crate) fn check_order(order: u32) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::OrderTooLarge {
            order,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

/// The open dyadic interval `I^s_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    order: u32,
    index: u64,
}

impl DyadicInterval {
    pub fn new(order: u32, index: u64) -> Result<Self> {
        check_order(order)?;
        if index >= 1u64 << order {
            return invalid(format!(
                "interval index {index} out of range for order {order}"
            ));
        }
        Ok(DyadicInterval { order, index })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn measure(&self) -> f64 {
        (-(self.order as f64)).exp2()
    }

    /// Cell indices at order `n ≥ self.order` covered by this interval.
    pub fn cells_at(&self, n: u32) -> std::ops::Range<usize> {
        debug_assert!(n >= self.order);
        let width = 1usize << (n - self.order);
        let start = self.index as usize * width;
        start..start + width
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.index, self.order)
    }
}

impl FromStr for DyadicInterval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (j, order) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("expected \"j/s\", got {s:?}")))?;
        let index = j
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("bad interval index {j:?}: {e}")))?;
        let order = order
            .trim()
            .parse::<u32>()
            .map_err(|e| Error::Parse(format!("bad interval order {order:?}: {e}")))?;
        DyadicInterval::new(order, index)
    }
}

/// A step function constant on each dyadic interval of order `order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStep")]
pub struct DyadicStep {
    order: u32,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawStep {
    order: u32,
    values: Vec<f64>,
}

impl TryFrom<RawStep> for DyadicStep {
    type Error = Error;

    fn try_from(raw: RawStep) -> Result<Self> {
        DyadicStep::new(raw.order, raw.values)
    }
}

impl DyadicStep {
    pub fn new(order: u32, values: Vec<f64>) -> Result<Self> {
        check_order(order)?;
        if values.len() != 1usize << order {
            return invalid(format!(
                "order {order} needs {} values, got {}",
                1usize << order,
                values.len()
            ));
        }
        Ok(DyadicStep { order, values })
    }

    pub fn constant(order: u32, c: f64) -> Result<Self> {
        check_order(order)?;
        Ok(DyadicStep {
            order,
            values: vec![c; 1 << order],
        })
    }

    pub fn zero(order: u32) -> Result<Self> {
        Self::constant(order, 0.0)
    }

    /// Builds the step function whose value on `I^n_j` is `cell(j)`.
    pub fn from_fn(order: u32, cell: impl FnMut(usize) -> f64) -> Result<Self> {
        check_order(order)?;
        Ok(DyadicStep {
            order,
            values: (0..1usize << order).map(cell).collect(),
        })
    }

    /// Indicator function of a dyadic set.
    pub fn indicator(set: &DyadicSet) -> Self {
        DyadicStep {
            order: set.order,
            values: set
                .mask
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(order: u32, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), 1usize << order);
        DyadicStep { order, values }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value on `I^n_j`.
    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Re-expresses the function on the finer partition of order `order`.
    pub fn refine(&self, order: u32) -> Result<Self> {
        if order < self.order {
            return invalid(format!(
                "cannot refine order {} down to {order}",
                self.order
            ));
        }
        check_order(order)?;
        if order == self.order {
            return Ok(self.clone());
        }
        let repeat = 1usize << (order - self.order);
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, repeat))
            .collect();
        Ok(DyadicStep { order, values })
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        let order = self.order.max(other.order);
        let lhs = self.refine(order).expect("order within range");
        let rhs = other.refine(order).expect("order within range");
        let values = lhs
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(&a, &b)| op(a, b))
            .collect();
        DyadicStep { order, values }
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Self {
        DyadicStep {
            order: self.order,
            values: self.values.iter().map(|&v| op(v)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// `∫_0^1 f dm`.
    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn distribution(&self) -> DistributionTable {
        DistributionTable::from_values(&self.values)
    }

    /// Values of `|f|` sorted nonincreasingly, at the same order.
    pub fn decreasing_rearrangement(&self) -> Self {
        let mut values: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        DyadicStep {
            order: self.order,
            values,
        }
    }

    pub fn restrict(&self, set: &DyadicSet) -> Self {
        let ind = DyadicStep::indicator(set);
        self * &ind
    }
}

impl Add for &DyadicStep {
    type Output = DyadicStep;

    fn add(self, rhs: &DyadicStep) -> DyadicStep {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Mul for &DyadicStep {
    type Output = DyadicStep;

    fn mul(self, rhs: &DyadicStep) -> DyadicStep {
        self.zip_with(rhs, |a, b| a * b)
    }
}

/// A step function on `r` equal cells of `[0,1]`, `r` arbitrary.
///
/// This is what transporting a dyadic step through `ρ_E^{-1}` yields when
/// `E` covers a number of cells that is not a power of two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformStep {
    values: Vec<f64>,
}

impl UniformStep {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("a uniform step needs at least one cell");
        }
        Ok(UniformStep { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    /// The same function as a [`DyadicStep`], when the cell count is `2^n`.
    pub fn to_dyadic(&self) -> Option<DyadicStep> {
        let len = self.values.len();
        if !len.is_power_of_two() {
            return None;
        }
        DyadicStep::new(len.trailing_zeros(), self.values.clone()).ok()
    }

    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn distribution(&self) -> DistributionTable {
        DistributionTable::from_values(&self.values)
    }
}

impl From<DyadicStep> for UniformStep {
    fn from(f: DyadicStep) -> Self {
        UniformStep { values: f.values }
    }
}

/// A finite union of dyadic intervals, stored as a cell mask at one order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicSet {
    order: u32,
    mask: Vec<bool>,
}

impl DyadicSet {
    pub fn new(order: u32, mask: Vec<bool>) -> Result<Self> {
        check_order(order)?;
        if mask.len() != 1usize << order {
            return invalid(format!(
                "order {order} needs a mask of {} cells, got {}",
                1usize << order,
                mask.len()
            ));
        }
        Ok(DyadicSet { order, mask })
    }

    /// The whole interval `[0,1]`.
    pub fn full() -> Self {
        DyadicSet {
            order: 0,
            mask: vec![true],
        }
    }

    pub fn interval(iv: DyadicInterval) -> Self {
        Self::from_intervals(&[iv]).expect("single interval is valid")
    }

    /// Union of intervals, expressed at the largest order among them.
    pub fn from_intervals(intervals: &[DyadicInterval]) -> Result<Self> {
        if intervals.is_empty() {
            return invalid("a dyadic set needs at least one interval");
        }
        let order = intervals.iter().map(|iv| iv.order).max().unwrap_or(0);
        let mut mask = vec![false; 1 << order];
        for iv in intervals {
            for cell in iv.cells_at(order) {
                mask[cell] = true;
            }
        }
        Ok(DyadicSet { order, mask })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// `m(E)`, exact as a dyadic rational.
    pub fn measure(&self) -> f64 {
        self.cell_count() as f64 / self.mask.len() as f64
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    pub fn complement(&self) -> Self {
        DyadicSet {
            order: self.order,
            mask: self.mask.iter().map(|&b| !b).collect(),
        }
    }

    pub fn refine(&self, order: u32) -> Result<Self> {
        if order < self.order {
            return invalid(format!(
                "cannot refine set of order {} down to {order}",
                self.order
            ));
        }
        check_order(order)?;
        let repeat = 1usize << (order - self.order);
        let mask = self
            .mask
            .iter()
            .flat_map(|&b| std::iter::repeat_n(b, repeat))
            .collect();
        Ok(DyadicSet { order, mask })
    }

    /// Indices of the cells of the set, increasing.
    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
    }
}

impl fmt::Display for DyadicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for j in self.cells() {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{j}/{}", self.order)?;
        }
        if first {
            // empty set: keep the order visible so it round-trips as an error
            write!(f, "<empty>/{}", self.order)?;
        }
        Ok(())
    }
}

impl FromStr for DyadicSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let intervals = s
            .split(',')
            .filter(|tok| !tok.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<DyadicInterval>>>()?;
        DyadicSet::from_intervals(&intervals)
    }
}

impl Serialize for DyadicSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DyadicSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Distinct values of `|f|` with the measure of the set where each is taken.
///
/// Atoms are sorted by value, strictly decreasing. Values are aggregated under
/// exact floating equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    atoms: Vec<(f64, f64)>,
}

impl DistributionTable {
    pub fn from_values(values: &[f64]) -> Self {
        let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        abs.sort_by(|a, b| b.total_cmp(a));
        let total = abs.len() as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for v in abs {
            match atoms.last() {
                Some(&(last, _)) if last == v => *counts.last_mut().unwrap() += 1,
                _ => {
                    atoms.push((v, 0.0));
                    counts.push(1);
                }
            }
        }
        for (atom, count) in atoms.iter_mut().zip(counts) {
            atom.1 = count as f64 / total;
        }
        DistributionTable { atoms }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `m_f(λ) = m{|f| > λ}`.
    pub fn measure_above(&self, lambda: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|(v, _)| *v > lambda)
            .map(|(_, mu)| mu)
            .sum()
    }

    pub fn total_measure(&self) -> f64 {
        self.atoms.iter().map(|(_, mu)| mu).sum()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|(v, _)| *v)
    }
}
