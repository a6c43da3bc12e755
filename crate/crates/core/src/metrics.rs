//! Episode metrics. The arithmetic is generic over the scalar type so it can
//! be checked exactly with rationals; the harness uses `f64`.

use num_traits::{Float, Num};

use crate::error::{bail, Result};

/// Time-weighted success `s * T* / max(T*, T)`. When `T* = 0` the task was
/// already solved from the start and the time ratio counts as 1.
pub fn compute_twsr<T: Num + PartialOrd + Copy>(s: T, t: T, t_star: T) -> Result<T> {
    let zero = T::zero();
    if s < zero || t < zero || t_star < zero {
        bail!(BadArg, "success, elapsed and optimal time must be non-negative");
    }
    if t_star == zero {
        return Ok(s);
    }
    let denom = if t_star > t { t_star } else { t };
    Ok(s * t_star / denom)
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Float>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let sum = xs.iter().fold(T::zero(), |a, x| a + *x);
    Some(sum / T::from(xs.len()).expect("length fits the scalar"))
}

/// Mean and standard error (sample standard deviation over sqrt(n)); the
/// error is zero for fewer than two samples.
pub fn mean_stderr<T: Float>(xs: &[T]) -> Option<(T, T)> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some((m, T::zero()));
    }
    let n = T::from(xs.len()).expect("length fits the scalar");
    let ss = xs.iter().fold(T::zero(), |a, x| a + (*x - m) * (*x - m));
    let sd = (ss / (n - T::one())).sqrt();
    Some((m, sd / n.sqrt()))
}

/// Five-number summary `[min, q1, median, q3, max]` with linear
/// interpolation between order statistics.
pub fn quartiles<T: Float>(xs: &[T]) -> Option<[T; 5]> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in metric samples"));
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = T::from(pos - lo as f64).expect("fraction fits the scalar");
        v[lo] + (v[hi] - v[lo]) * frac
    };
    Some([v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]])
}
