//! Rearrangement-invariant norms of step functions.
//!
//! Supported norms are `L^p` (quasi-norm for `0 < p < 1`, and `p = ∞`), the
//! exponential Orlicz spaces `L^{M_p}` with `M_p(t) = exp(t^p) - 1` under the
//! Luxemburg norm, and local spaces `X|E` for a dyadic set `E`.
//!
//! The exp-square norm `‖·‖_{L^{M_2}}` carries no extra normalisation: with
//! this convention `‖1‖_{L^{M_2}} = 1/√(ln 2) ≈ 1.2011`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dyadic::{pairwise_sum, DyadicSet, DyadicStep, UniformStep};
use crate::error::{invalid, Error, Result};
use crate::MAX_ORDER;

/// Relative bracket width at which the Luxemburg bisection stops.
pub const LUXEMBURG_REL_TOL: f64 = 1e-12;
pub const LUXEMBURG_MAX_ITER: usize = 200;
/// Beyond this exponent `exp(t) - 1` is treated as `+∞`.
const EXP_OVERFLOW_GUARD: f64 = 700.0;

/// Attached to every report that involves an exp-type norm.
pub const EXP_NORMALIZATION_NOTE: &str = "exp-type norms use M_p(t) = exp(t^p) - 1 under the \
Luxemburg norm with no extra normalisation, so the constant function 1 has norm (ln 2)^(-1/p); \
for p = 2 that is 1/sqrt(ln 2)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormSpec {
    Lp(Exponent),
    OrliczExp(f64),
    Local {
        set: DyadicSet,
        inner: Box<NormSpec>,
    },
}

fn check_positive(p: f64, what: &str) -> Result<()> {
    if p.is_nan() || p <= 0.0 || p.is_infinite() {
        return invalid(format!(
            "{what} exponent must be finite and positive, got {p}"
        ));
    }
    Ok(())
}

impl NormSpec {
    pub fn lp(p: f64) -> Result<Self> {
        check_positive(p, "L^p")?;
        Ok(NormSpec::Lp(Exponent::Finite(p)))
    }

    pub fn l_inf() -> Self {
        NormSpec::Lp(Exponent::Infinity)
    }

    pub fn orlicz_exp(p: f64) -> Result<Self> {
        check_positive(p, "Orlicz")?;
        Ok(NormSpec::OrliczExp(p))
    }

    pub fn local(set: DyadicSet, inner: NormSpec) -> Result<Self> {
        if set.cell_count() == 0 {
            return invalid("local space needs a set of positive measure");
        }
        if matches!(inner, NormSpec::Local { .. }) {
            return invalid("local spaces cannot be nested");
        }
        inner.validate()?;
        Ok(NormSpec::Local {
            set,
            inner: Box::new(inner),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NormSpec::Lp(Exponent::Finite(p)) => check_positive(*p, "L^p"),
            NormSpec::Lp(Exponent::Infinity) => Ok(()),
            NormSpec::OrliczExp(p) => check_positive(*p, "Orlicz"),
            NormSpec::Local { set, inner } => {
                if set.cell_count() == 0 {
                    return invalid("local space needs a set of positive measure");
                }
                if matches!(**inner, NormSpec::Local { .. }) {
                    return invalid("local spaces cannot be nested");
                }
                inner.validate()
            }
        }
    }

    /// Whether the functional fails the triangle inequality in general
    /// (`p < 1`, where neither `|t|^p` nor `M_p` is convex).
    pub fn is_quasi_norm(&self) -> bool {
        match self {
            NormSpec::Lp(Exponent::Finite(p)) | NormSpec::OrliczExp(p) => *p < 1.0,
            NormSpec::Lp(Exponent::Infinity) => false,
            NormSpec::Local { inner, .. } => inner.is_quasi_norm(),
        }
    }

    /// The unlocalised space underneath.
    pub fn base(&self) -> &NormSpec {
        match self {
            NormSpec::Local { inner, .. } => inner,
            other => other,
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::Lp(Exponent::Finite(p)) => write!(f, "lp:{p}"),
            NormSpec::Lp(Exponent::Infinity) => f.write_str("lp:inf"),
            NormSpec::OrliczExp(p) => write!(f, "mp:{p}"),
            NormSpec::Local { set, inner } => write!(f, "local:{set}|{inner}"),
        }
    }
}

impl FromStr for NormSpec {
    type Err = Error;

    /// Grammar: `lp:<p>`, `lp:inf`, `mp:<p>`, `local:<j/s,...>|<inner>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("norm spec {s:?} lacks a ':'")))?;
        let number = |txt: &str| {
            txt.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad exponent {txt:?}: {e}")))
        };
        match kind.trim() {
            "lp" if matches!(rest.trim(), "inf" | "infinity") => Ok(NormSpec::l_inf()),
            "lp" => NormSpec::lp(number(rest)?),
            "mp" => NormSpec::orlicz_exp(number(rest)?),
            "local" => {
                let (set, inner) = rest.split_once('|').ok_or_else(|| {
                    Error::Parse(format!("local spec {s:?} needs '|' before the inner norm"))
                })?;
                NormSpec::local(set.parse()?, inner.parse()?)
            }
            other => Err(Error::Parse(format!("unknown norm kind {other:?}"))),
        }
    }
}

impl Serialize for NormSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NormSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn lp_of_values(values: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => max_abs(values),
        Exponent::Finite(p) if p == 1.0 => {
            let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
            mean(&abs)
        }
        Exponent::Finite(p) if p == 2.0 => {
            let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
            mean(&sq).sqrt()
        }
        Exponent::Finite(p) => {
            let pow: Vec<f64> = values.iter().map(|v| v.abs().powf(p)).collect();
            mean(&pow).powf(p.recip())
        }
    }
}

/// `∫ M_p(|v|/λ) dm` over equal cells.
fn exp_mean(values: &[f64], lambda: f64, p: f64) -> f64 {
    let mut terms = Vec::with_capacity(values.len());
    for v in values {
        let t = (v.abs() / lambda).powf(p);
        if t > EXP_OVERFLOW_GUARD {
            return f64::INFINITY;
        }
        terms.push(t.exp_m1());
    }
    mean(&terms)
}

fn luxemburg_of_values(values: &[f64], p: f64) -> f64 {
    let top = max_abs(values);
    if top == 0.0 {
        return 0.0;
    }
    let over = |lambda: f64| exp_mean(values, lambda, p) > 1.0;
    // bracket: over(lo) && !over(hi)
    let mut hi = top;
    while over(hi) {
        hi *= 2.0;
    }
    let mut lo = top;
    while !over(lo) {
        lo *= 0.5;
    }
    for _ in 0..LUXEMBURG_MAX_ITER {
        if hi - lo <= LUXEMBURG_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if over(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `|v|` sorted decreasingly: the cell values of the decreasing rearrangement.
fn rearranged(values: &[f64]) -> Vec<f64> {
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    abs.sort_unstable_by(|a, b| b.total_cmp(a));
    abs
}

/// Every norm is evaluated on the decreasing rearrangement, so equimeasurable
/// inputs give bit-identical results regardless of summation rounding.
fn norm_of_values(values: &[f64], spec: &NormSpec) -> Result<f64> {
    match spec {
        NormSpec::Lp(p) => Ok(lp_of_values(&rearranged(values), *p)),
        NormSpec::OrliczExp(p) => Ok(luxemburg_of_values(&rearranged(values), *p)),
        NormSpec::Local { .. } => invalid("local spaces cannot be nested"),
    }
}

/// `(∫ |f|^p dm)^{1/p}`.
pub fn lp_norm(f: &DyadicStep, p: f64) -> Result<f64> {
    check_positive(p, "L^p")?;
    norm_of_values(f.values(), &NormSpec::Lp(Exponent::Finite(p)))
}

/// `max |f|`.
pub fn linf_norm(f: &DyadicStep) -> f64 {
    f.max_abs()
}

/// `∫_E (exp((|f|/λ)^p) - 1) dm/m(E)`; `+∞` when an exponent exceeds 700.
pub fn exp_integral(f: &DyadicStep, lambda: f64, set: &DyadicSet, p_exp: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 {
        return invalid(format!("λ must be positive, got {lambda}"));
    }
    check_positive(p_exp, "Orlicz")?;
    let local = localize(f, set)?;
    Ok(exp_mean(&rearranged(local.values()), lambda, p_exp))
}

/// Luxemburg norm of `f` in `L^{M_p}|E`.
pub fn orlicz_norm(f: &DyadicStep, p_exp: f64, set: &DyadicSet) -> Result<f64> {
    check_positive(p_exp, "Orlicz")?;
    let local = localize(f, set)?;
    norm_of_values(local.values(), &NormSpec::OrliczExp(p_exp))
}

/// `f ∘ ρ_E^{-1}`: the values of `f` on the cells of `E`, left to right,
/// spread over equal cells of `[0,1]`.
pub fn localize(f: &DyadicStep, set: &DyadicSet) -> Result<UniformStep> {
    if set.cell_count() == 0 {
        return invalid("cannot localize to a null set");
    }
    let order = f.order().max(set.order());
    let f = f.refine(order)?;
    let set = set.refine(order)?;
    let values: Vec<f64> = set.cells().map(|j| f.value(j)).collect();
    UniformStep::new(values)
}

/// `‖f‖_X` for the space selected by `spec`.
pub fn norm(f: &DyadicStep, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    match spec {
        NormSpec::Local { set, inner } => norm_of_values(localize(f, set)?.values(), inner),
        other => norm_of_values(f.values(), other),
    }
}

/// Norm of an equal-cell step function (e.g. the output of [`localize`]).
pub fn norm_uniform(f: &UniformStep, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    match spec {
        NormSpec::Local { set, inner } => {
            let dyadic = f.to_dyadic().ok_or_else(|| {
                Error::InvalidArgument("localizing needs a step function on 2^n equal cells".into())
            })?;
            norm_of_values(localize(&dyadic, set)?.values(), inner)
        }
        other => norm_of_values(f.values(), other),
    }
}

/// `φ_X(t) = ‖χ_{[0,t]}‖_X` for a dyadic rational `t ∈ (0,1]`.
pub fn fundamental_function(spec: &NormSpec, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 || t > 1.0 {
        return invalid(format!("t must lie in (0,1], got {t}"));
    }
    let order = (0..=MAX_ORDER)
        .find(|&s| (t * (1u64 << s) as f64).fract() == 0.0)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "t = {t} is not a dyadic rational of order ≤ {MAX_ORDER}"
            ))
        })?;
    let cells = (t * (1u64 << order) as f64) as usize;
    let chi = DyadicStep::from_fn(order, |j| if j < cells { 1.0 } else { 0.0 })?;
    norm(&chi, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walsh::{rademacher, walsh};

    fn step(order: u32, values: &[f64]) -> DyadicStep {
        DyadicStep::new(order, values.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lp_examples() {
        let f = step(2, &[2.0, 0.0, 0.0, -2.0]);
        assert_eq!(lp_norm(&f, 2.0).unwrap(), 2f64.sqrt());
        for p in [0.5, 1.0, 2.0, 3.0, 7.5] {
            let c = DyadicStep::constant(3, -1.75).unwrap();
            assert!(close(lp_norm(&c, p).unwrap(), 1.75, 1e-15));
        }
        assert!(lp_norm(&f, 0.0).is_err());
        assert!(lp_norm(&f, -1.0).is_err());
        assert_eq!(linf_norm(&f), 2.0);
    }

    #[test]
    fn exp_integral_examples() {
        let full = DyadicSet::full();
        let w0 = walsh(0u64, 0).unwrap();
        let e = exp_integral(&w0, 1.0, &full, 2.0).unwrap();
        assert!(close(e, std::f64::consts::E - 1.0, 1e-15));

        let zero = DyadicStep::zero(3).unwrap();
        assert_eq!(exp_integral(&zero, 0.3, &full, 2.0).unwrap(), 0.0);

        let r1 = rademacher(1, 1).unwrap();
        let lambda = 1.0 / 2f64.ln().sqrt();
        assert!(close(
            exp_integral(&r1, lambda, &full, 2.0).unwrap(),
            1.0,
            1e-12
        ));

        assert!(exp_integral(&r1, 0.0, &full, 2.0).is_err());
        assert_eq!(exp_integral(&r1, 1e-3, &full, 2.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn exp_integral_decreases_in_lambda() {
        let f = step(2, &[0.3, -1.2, 2.0, 0.0]);
        let full = DyadicSet::full();
        let mut prev = f64::INFINITY;
        for i in 1..60 {
            let lambda = 0.1 * i as f64;
            let v = exp_integral(&f, lambda, &full, 2.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn orlicz_examples() {
        let full = DyadicSet::full();
        let w0 = walsh(0u64, 0).unwrap();
        let expected = 1.0 / 2f64.ln().sqrt();
        assert!(close(
            orlicz_norm(&w0, 2.0, &full).unwrap(),
            expected,
            1e-10
        ));
        assert_eq!(
            orlicz_norm(&DyadicStep::zero(2).unwrap(), 2.0, &full).unwrap(),
            0.0
        );
        // M_1: exp(1/λ) - 1 = 1
        assert!(close(
            orlicz_norm(&w0, 1.0, &full).unwrap(),
            1.0 / 2f64.ln(),
            1e-10
        ));
    }

    #[test]
    fn luxemburg_solves_unit_level() {
        let f = step(3, &[0.1, -4.0, 2.5, 0.0, 1.0, 1.0, -0.3, 7.0]);
        for p in [0.5, 1.0, 2.0, 3.0] {
            let full = DyadicSet::full();
            let lam = orlicz_norm(&f, p, &full).unwrap();
            let level = exp_integral(&f, lam, &full, p).unwrap();
            assert!((level - 1.0).abs() <= 1e-9, "p={p} level={level}");
        }
    }

    #[test]
    fn localize_examples() {
        let f = step(2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            localize(&f, &DyadicSet::full())
                .unwrap()
                .to_dyadic()
                .unwrap(),
            f
        );

        let r2 = rademacher(2, 2).unwrap();
        let left: DyadicSet = "0/1".parse().unwrap();
        assert_eq!(
            localize(&r2, &left).unwrap().to_dyadic().unwrap(),
            rademacher(1, 1).unwrap()
        );

        let odd: DyadicSet = "0/2,1/2,3/2".parse().unwrap();
        let loc = localize(&f, &odd).unwrap();
        assert_eq!(loc.values(), &[1.0, 2.0, 4.0]);
        assert!(loc.to_dyadic().is_none());

        let empty = DyadicSet::new(1, vec![false, false]).unwrap();
        assert!(localize(&f, &empty).is_err());
    }

    #[test]
    fn norm_dispatch() {
        let r2 = rademacher(2, 2).unwrap();
        let spec: NormSpec = "local:0/1|lp:1".parse().unwrap();
        assert_eq!(norm(&r2, &spec).unwrap(), 1.0);

        let f = step(2, &[3.0, -1.0, 0.5, 2.0]);
        let l2 = NormSpec::lp(2.0).unwrap();
        let local_full = NormSpec::local(DyadicSet::full(), l2.clone()).unwrap();
        assert_eq!(norm(&f, &local_full).unwrap(), norm(&f, &l2).unwrap());
        assert_eq!(norm(&f, &NormSpec::l_inf()).unwrap(), 3.0);
    }

    #[test]
    fn fundamental_function_examples() {
        for p in [0.5, 1.0, 2.0, 4.0] {
            let spec = NormSpec::lp(p).unwrap();
            for t in [1.0, 0.5, 0.25, 0.375, 0.8125] {
                let phi = fundamental_function(&spec, t).unwrap();
                assert!(close(phi, t.powf(1.0 / p), 1e-14), "p={p} t={t}");
            }
        }
        let mp2 = NormSpec::orlicz_exp(2.0).unwrap();
        assert!(close(
            fundamental_function(&mp2, 1.0).unwrap(),
            1.0 / 2f64.ln().sqrt(),
            1e-10
        ));
        assert!(close(
            fundamental_function(&mp2, 0.5).unwrap(),
            1.0 / 3f64.ln().sqrt(),
            1e-10
        ));
        assert!(fundamental_function(&mp2, 0.1).is_err());
        assert!(fundamental_function(&mp2, 0.0).is_err());
        assert!(fundamental_function(&mp2, 1.5).is_err());
    }

    #[test]
    fn spec_grammar() {
        for txt in [
            "lp:2",
            "lp:0.5",
            "lp:inf",
            "mp:2",
            "local:0/1|lp:2",
            "local:0/2,3/2|mp:2",
        ] {
            let spec: NormSpec = txt.parse().unwrap();
            assert_eq!(spec.to_string(), txt);
        }
        assert!("lp:0".parse::<NormSpec>().is_err());
        assert!("mp:-1".parse::<NormSpec>().is_err());
        assert!("lq:2".parse::<NormSpec>().is_err());
        assert!("local:0/1|local:0/1|lp:2".parse::<NormSpec>().is_err());
        assert!("local:0/1".parse::<NormSpec>().is_err());
        assert!("lp:0.5".parse::<NormSpec>().unwrap().is_quasi_norm());
        assert!(!"local:0/1|lp:2"
            .parse::<NormSpec>()
            .unwrap()
            .is_quasi_norm());
    }
}
