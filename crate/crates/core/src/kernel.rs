//! Sampled Gaussian kernels and symmetric boundary reflection, shared by the
//! 2-D frame blur and the 1-D score smoother.

/// Normalized Gaussian weights for offsets `-radius..=radius`.
///
/// `sigma == 0` or `radius == 0` yields the identity kernel `[1.0]`.
pub fn gaussian_weights(sigma: f64, radius: usize) -> Vec<f64> {
    if sigma <= 0.0 || radius == 0 {
        return vec![1.0];
    }
    let denom = 2.0 * sigma * sigma;
    let r = radius as isize;
    let mut weights: Vec<f64> = (-r..=r)
        .map(|d| {
            let d = d as f64;
            (-d * d / denom).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// Maps any integer position onto `0..len` by half-sample symmetric
/// reflection (`c b a | a b c | c b a`), repeating for offsets wider than
/// the signal.
///
/// `len` must be non-zero.
pub fn reflect_index(pos: isize, len: usize) -> usize {
    debug_assert!(len > 0);
    let period = 2 * len as isize;
    let m = pos.rem_euclid(period) as usize;
    if m < len {
        m
    } else {
        2 * len - 1 - m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for &(sigma, radius) in &[
            (0.3, 1),
            (2.0, 6),
            (10.0 / 3.0, 10),
            (145.0, 435),
            (280.0, 840),
        ] {
            let w = gaussian_weights(sigma, radius);
            assert_eq!(w.len(), 2 * radius + 1);
            let total: f64 = w.iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "sigma {sigma}: {total}");
            // symmetric and peaked at the centre
            for i in 0..radius {
                assert_eq!(w[i], w[2 * radius - i]);
                assert!(w[i] <= w[i + 1]);
            }
        }
    }

    #[test]
    fn zero_sigma_is_identity() {
        assert_eq!(gaussian_weights(0.0, 5), vec![1.0]);
    }

    #[test]
    fn reflection() {
        let got: Vec<usize> = (-4..8).map(|p| reflect_index(p, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        // offsets far beyond the signal keep bouncing
        assert_eq!(reflect_index(-9, 3), 2);
        assert_eq!(reflect_index(100, 1), 0);
    }
}
