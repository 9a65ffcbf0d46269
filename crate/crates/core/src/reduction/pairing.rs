//! The diagonal pairing bijection `ℕ² → ℕ`.

/// `⟨n, m⟩ = (n+m)(n+m+1)/2 + m`, or `None` on overflow.
pub fn pair(n: u64, m: u64) -> Option<u64> {
    let w = n.checked_add(m)?;
    let tri = if w % 2 == 0 {
        (w / 2).checked_mul(w.checked_add(1)?)?
    } else {
        w.checked_mul(w.div_ceil(2))?
    };
    tri.checked_add(m)
}

/// Inverse of [`pair`].
pub fn unpair(k: u64) -> (u64, u64) {
    // The diagonal w is the largest with w(w+1)/2 <= k.
    let w = (((8 * k as u128 + 1).isqrt() - 1) / 2) as u64;
    let tri = (w as u128 * (w as u128 + 1) / 2) as u64;
    let m = k - tri;
    (w - m, m)
}
