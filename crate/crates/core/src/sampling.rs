//! Seeded sampling shared by the scans.
//!
//! Sample `i` of a run with seed `s` draws from its own generator seeded with
//! `s ^ i`, so results do not depend on scheduling or on how many samples are
//! requested in total.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::walsh::{ge_scaled, l2_norm};

pub(crate) fn rng_for(seed: u64, sample: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ sample)
}

/// Uniform point on the unit sphere of `R^m`.
pub(crate) fn unit_sphere(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let norm = l2_norm(&v);
        if norm > 1e-300 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Flat, alternating and single-spike unit vectors.
pub(crate) fn corner_cases(m: usize) -> Vec<Vec<f64>> {
    let scale = (m as f64).sqrt().recip();
    let mut out = vec![vec![scale; m]];
    if m > 1 {
        out.push(
            (0..m)
                .map(|k| if k % 2 == 0 { scale } else { -scale })
                .collect(),
        );
    }
    for k in 0..m {
        let mut spike = vec![0.0; m];
        spike[k] = 1.0;
        out.push(spike);
    }
    out
}

/// Smallest integer `c ≥ q·n`.
pub(crate) fn next_lacunary(q: f64, n: u64) -> u64 {
    let mut c = (q * n as f64).ceil() as u64;
    while c > 0 && ge_scaled(c - 1, q, n) {
        c -= 1;
    }
    while !ge_scaled(c, q, n) {
        c += 1;
    }
    c
}

pub(crate) const MAX_JITTER: u64 = 2;

fn worst_chain_end(q: f64, start: u64, m: usize) -> u64 {
    (1..m).fold(start, |n, _| next_lacunary(q, n).saturating_add(MAX_JITTER))
}

/// Draws `n_1 ∈ [lo, hi]` and continues with `n_{k+1} = ⌈q n_k⌉ + jitter`,
/// jitter in `{0, 1, 2}`. The upper end of the start range is lowered so that
/// every chain of length `m` stays at or below `cap`.
pub(crate) fn lacunary_indices(
    rng: &mut impl Rng,
    q: f64,
    m: usize,
    lo: u64,
    hi: u64,
    cap: u64,
) -> Result<Vec<u64>> {
    if m == 0 {
        return invalid("need at least one index");
    }
    if worst_chain_end(q, lo, m) > cap {
        return invalid(format!(
            "{m} terms of a {q}-lacunary sequence starting at {lo} do not fit below {cap}"
        ));
    }
    let (mut ok, mut bad) = (lo, hi + 1);
    if worst_chain_end(q, hi, m) <= cap {
        ok = hi;
    } else {
        while bad - ok > 1 {
            let mid = ok + (bad - ok) / 2;
            if worst_chain_end(q, mid, m) <= cap {
                ok = mid;
            } else {
                bad = mid;
            }
        }
    }
    let mut out = Vec::with_capacity(m);
    let mut n = rng.random_range(lo..=ok);
    out.push(n);
    for _ in 1..m {
        n = next_lacunary(q, n) + rng.random_range(0..=MAX_JITTER);
        out.push(n);
    }
    Ok(out)
}
