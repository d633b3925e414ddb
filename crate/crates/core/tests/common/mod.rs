#![allow(dead_code)]

use ifp_core::encoder::{compute_bound_u, RationalLinearSystem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random `m × n` system with `|a| ≤ amax`, `|b| ≤ bmax`, no zero column and
/// a bounded solution set.
pub fn random_bounded_system(rng: &mut ChaCha8Rng, amax: i64, bmax: i64) -> RationalLinearSystem {
    loop {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=2);
        let a: Vec<Vec<i64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-amax..=amax)).collect())
            .collect();
        let b: Vec<i64> = (0..m).map(|_| rng.gen_range(-bmax..=bmax)).collect();
        if (0..n).any(|j| a.iter().all(|row| row[j] == 0)) {
            continue;
        }
        let sys = RationalLinearSystem::new(a, b, n).unwrap();
        if is_bounded(&sys, 2 * amax * amax) {
            return sys;
        }
    }
}

/// No nonzero `d ≥ 0` with `Ad = 0`; extreme rays of that cone have entries
/// bounded by the 2x2 minors, so searching `[0, limit]^n` is enough.
pub fn is_bounded(sys: &RationalLinearSystem, limit: i64) -> bool {
    let n = sys.variables();
    let mut d = vec![0i64; n];
    loop {
        let mut pos = 0;
        loop {
            if pos == n {
                return true;
            }
            d[pos] += 1;
            if d[pos] <= limit {
                break;
            }
            d[pos] = 0;
            pos += 1;
        }
        if sys
            .matrix()
            .iter()
            .all(|row| row.iter().zip(&d).map(|(a, x)| a * x).sum::<i64>() == 0)
        {
            return false;
        }
    }
}

/// Every integer point of `{y ≥ 0 : Ay = b}` inside `[0, U]^n`, with `U` the
/// Hadamard bound of the original system.
pub fn brute_force_points(sys: &RationalLinearSystem) -> Vec<Vec<i64>> {
    let u = compute_bound_u(sys).unwrap();
    let n = sys.variables();
    let mut out = Vec::new();
    let mut y = vec![0i64; n];
    loop {
        if sys.is_solution(&y) {
            out.push(y.clone());
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return out;
            }
            y[pos] += 1;
            if y[pos] <= u {
                break;
            }
            y[pos] = 0;
            pos += 1;
        }
    }
}
