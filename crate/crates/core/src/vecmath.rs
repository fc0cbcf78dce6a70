//! Tiny helpers for short phase-space vectors stored as slices.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Distance from `u` to `w` and to `-w`, without allocating.
#[inline]
pub fn dist_pm(u: &[f64], w: &[f64]) -> (f64, f64) {
    let mut dm = 0.0;
    let mut dp = 0.0;
    for (x, y) in u.iter().zip(w) {
        dm += (x - y) * (x - y);
        dp += (x + y) * (x + y);
    }
    (dm.sqrt(), dp.sqrt())
}

#[inline]
pub fn lerp_into(a: &[f64], b: &[f64], t: f64, out: &mut [f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x + t * (y - x);
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}
