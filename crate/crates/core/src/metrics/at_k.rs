use crate::error::{Error, Result};

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `C(n-c, k) / C(n, k)` as an exact reduced fraction, when the running
/// products fit in `u128`.
fn miss_ratio_exact(n: usize, correct: usize, k: usize) -> Option<(u128, u128)> {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num = num.checked_mul((n - correct - i) as u128)?;
        den = den.checked_mul((n - i) as u128)?;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    Some((num, den))
}

/// Unbiased @k estimate `1 - C(n-c, k) / C(n, k)`: the probability that a
/// uniformly random k-subset of n samples holds at least one of the
/// `correct` ones.
///
/// Uses the product `prod_{i<k} (n-c-i)/(n-i)`; when it fits in 128-bit
/// integers the fraction is reduced exactly and divided once, so results
/// like `c/n` for k = 1 are correctly rounded.
pub fn estimate_at_k(n: usize, correct: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgs(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    if correct > n {
        return Err(Error::InvalidArgs(format!("correct = {correct} exceeds n = {n}")));
    }
    if n - correct < k {
        return Ok(1.0);
    }
    if let Some((num, den)) = miss_ratio_exact(n, correct, k) {
        return Ok((den - num) as f64 / den as f64);
    }
    let miss = (0..k).fold(1.0_f64, |acc, i| {
        acc * (n - correct - i) as f64 / (n - i) as f64
    });
    Ok(1.0 - miss)
}

/// Expected maximum score over a uniformly random k-subset of the samples.
///
/// With scores sorted ascending, the i-th (1-based) is the subset maximum
/// with probability `C(i-1, k-1) / C(n, k)`. On binary scores this is
/// exactly [`estimate_at_k`].
pub fn score_at_k(per_sample: &[f64], k: usize) -> Result<f64> {
    let n = per_sample.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgs(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    if let Some(bad) = per_sample.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::InvalidArgs(format!("score {bad} outside [0, 1]")));
    }
    let mut sorted = per_sample.to_vec();
    sorted.sort_by(f64::total_cmp);

    // w_n = k/n; w_{i-1} = w_i * (i-k)/(i-1), zero below i = k.
    let mut weight = k as f64 / n as f64;
    let mut total = 0.0;
    for i in (k..=n).rev() {
        total += weight * sorted[i - 1];
        if i > 1 {
            weight *= (i - k) as f64 / (i - 1) as f64;
        }
    }
    Ok(total.clamp(0.0, 1.0))
}
