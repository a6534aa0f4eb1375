//! Truncated Gumbel noise for the A* perturbation chain.

use rand::Rng;

/// Draw from the standard Gumbel distribution truncated to `(-∞, bound]`
/// by inverting its CDF: `x = -ln(e^{-bound} - ln U)`.
///
/// `bound = +∞` gives an untruncated standard Gumbel.
pub fn truncated_gumbel<R: Rng + ?Sized>(bound: f64, rng: &mut R) -> f64 {
    // U in (0, 1]: ln U is finite and non-positive.
    let u: f64 = 1.0 - rng.random::<f64>();
    -((-bound).exp() - u.ln()).ln()
}

/// Standard Gumbel draw.
pub fn gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    truncated_gumbel(f64::INFINITY, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn untruncated_mean_is_euler_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| gumbel(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        // Gumbel sd = π/√6; 4 standard errors.
        let se = std::f64::consts::PI / 6f64.sqrt() / (n as f64).sqrt();
        assert!((mean - EULER_GAMMA).abs() < 4.0 * se, "{mean}");
    }

    #[test]
    fn respects_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100_000 {
            assert!(truncated_gumbel(0.0, &mut rng) <= 0.0);
        }
        assert!(truncated_gumbel(-30.0, &mut rng) <= -30.0);
    }

    #[test]
    fn matches_rejection_sampler() {
        // Oracle: draw untruncated Gumbels and keep those below the bound.
        // Two-sample Kolmogorov-Smirnov test at the 1% level.
        let bound = 0.3;
        let n = 20_000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a: Vec<f64> = (0..n).map(|_| truncated_gumbel(bound, &mut rng)).collect();
        let mut b = Vec::with_capacity(n);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        while b.len() < n {
            let x = -(-(1.0 - rng.random::<f64>()).ln()).ln();
            if x <= bound {
                b.push(x);
            }
        }
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < n && j < n {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 - j as f64).abs() / n as f64);
        }
        // p > 0.01  <=>  D < 1.628 * sqrt(2/n)
        let critical = 1.628 * (2.0 / n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} >= {critical}");
    }
}
