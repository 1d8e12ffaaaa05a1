//! Uniform positivity of windowed matrix products.

use num_bigint::BigInt;

use crate::markov::MeasureSpec;

/// Minimum entry of P_s P_{s+1} ⋯ P_{s+window−1} over all starts s with the
/// window inside `[lo, hi]`. Only starts near block boundaries (and one per
/// constant run) produce distinct products, so only those are evaluated.
pub fn exactness_constant(spec: &MeasureSpec, window: usize, lo: &BigInt, hi: &BigInt) -> f64 {
    if window == 0 || hi - lo + 1 < BigInt::from(window) {
        return f64::NAN;
    }
    let last_start = hi - (window - 1);
    let mut starts: Vec<BigInt> = vec![lo.clone(), last_start.clone()];
    for b in spec.schedule().boundaries() {
        for back in 0..=window {
            let s = &b - back;
            if s >= *lo && s <= last_start {
                starts.push(s);
            }
        }
    }
    starts.sort();
    starts.dedup();
    starts
        .iter()
        .map(|s| {
            let m = spec.transition_product(s, &(s + window));
            (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| *m.get(i, j)).fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}
