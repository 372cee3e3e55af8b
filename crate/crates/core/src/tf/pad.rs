/// Maps any integer index onto `0..len` by mirror reflection about the end
/// samples (the edge sample is not repeated), extended periodically so that
/// padding wider than the signal still resolves.
#[inline]
pub(crate) fn reflect_index(i: isize, len: usize) -> usize {
    debug_assert!(len > 0);
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let r = i.rem_euclid(period);
    if r < len as isize {
        r as usize
    } else {
        (period - r) as usize
    }
}

/// The signal extended by `left` reflected samples before and `right` after.
pub(crate) fn reflect_pad(x: &[f64], left: usize, right: usize) -> Vec<f64> {
    let len = x.len();
    (0..left + len + right)
        .map(|j| x[reflect_index(j as isize - left as isize, len)])
        .collect()
}
