//! Small numeric helpers shared across modules.

use alloc::vec::Vec;

/// Median of extended reals; `+inf` sorts above every finite value. NaN for an
/// empty input.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        let (lo, hi) = (v[mid - 1], v[mid]);
        if hi.is_infinite() {
            hi
        } else {
            0.5 * (lo + hi)
        }
    }
}

/// SplitMix64 finalizer. A bijection on `u64`.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
