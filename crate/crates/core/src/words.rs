//! Combinatorics on finite index words: rotations, necklaces, periods.

/// Whether `w` is the lexicographically least of its rotations.
pub fn is_canonical_rotation(w: &[usize]) -> bool {
    let k = w.len();
    (1..k).all(|r| {
        for i in 0..k {
            let a = w[i];
            let b = w[(i + r) % k];
            if a != b {
                return a < b;
            }
        }
        true
    })
}

/// Lexicographically least rotation of `w`.
pub fn canonical_rotation(w: &[usize]) -> Vec<usize> {
    let k = w.len();
    (0..k)
        .map(|r| w[r..].iter().chain(&w[..r]).copied().collect::<Vec<_>>())
        .min()
        .unwrap_or_default()
}

/// Smallest `p` dividing `|w|` with `w` a repetition of its first `p` letters.
pub fn minimal_period(w: &[usize]) -> usize {
    let k = w.len();
    (1..=k)
        .find(|&p| k.is_multiple_of(p) && (p..k).all(|i| w[i] == w[i - p]))
        .unwrap_or(k)
}

/// The `|w|` cyclic windows of length `m` of `w`.
pub fn cyclic_windows(w: &[usize], m: usize) -> Vec<Vec<usize>> {
    let k = w.len();
    (0..k).map(|j| (0..m).map(|t| w[(j + t) % k]).collect()).collect()
}

/// Calls `visit` on every necklace (canonical rotation) over `n` letters
/// with length in `1..=max_len`, ordered by length then lexicographically.
/// Stops early when `visit` returns `false`.
pub fn for_each_necklace(n: usize, max_len: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    let mut word = Vec::with_capacity(max_len);
    for len in 1..=max_len {
        word.clear();
        word.resize(len, 0);
        loop {
            if is_canonical_rotation(&word) && !visit(&word) {
                return;
            }
            // odometer increment; a carry out of position 0 ends this length
            let mut carry = true;
            for pos in (0..len).rev() {
                word[pos] += 1;
                if word[pos] < n {
                    carry = false;
                    break;
                }
                word[pos] = 0;
            }
            if carry {
                break;
            }
        }
    }
}
