//! Two-sample distribution tests with asymptotic p-values.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

fn check_sample(name: &str, s: &[f64]) -> Result<()> {
    if s.len() < 2 {
        return Err(Error::Numeric(format!(
            "{name}: need at least 2 values, got {}",
            s.len()
        )));
    }
    Ok(())
}

/// Two-sided two-sample Kolmogorov-Smirnov test.
///
/// Returns `(D, p)` with the asymptotic Kolmogorov p-value at
/// `lambda = sqrt(n_a n_b / (n_a + n_b)) * D`.
pub fn ks_test(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    check_sample("ks_test sample a", a)?;
    check_sample("ks_test sample b", b)?;
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);

    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let v = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= v {
            i += 1;
        }
        while j < sb.len() && sb[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }

    let ne = na * nb / (na + nb);
    let lambda = ne.sqrt() * d;
    Ok((d, kolmogorov_q(lambda)))
}

/// Complementary CDF of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sided Wilcoxon rank-sum test with the normal approximation and tie
/// correction (no continuity correction).
///
/// Returns `(W, p)` where `W` is the rank sum of sample `a` over the pooled
/// ranking with average ranks for ties.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    check_sample("wilcoxon sample a", a)?;
    check_sample("wilcoxon sample b", b)?;
    let na = a.len();
    let nb = b.len();
    let n = na + nb;

    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| f64::total_cmp(&x.0, &y.0));

    let mut ranks = vec![0.0f64; n];
    let mut tie_term = 0.0f64;
    let mut i = 0usize;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for r in ranks.iter_mut().take(j + 1).skip(i) {
            *r = avg_rank;
        }
        tie_term += t * t * t - t;
        i = j + 1;
    }

    let w: f64 = pooled
        .iter()
        .zip(&ranks)
        .filter(|((_, is_a), _)| *is_a)
        .map(|(_, &r)| r)
        .sum();

    let nf = n as f64;
    let mean = na as f64 * (nf + 1.0) / 2.0;
    let var = (na as f64 * nb as f64 / 12.0) * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return Ok((w, 1.0));
    }
    let z = (w - mean) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let p = (2.0 * (1.0 - normal.cdf(z.abs()))).clamp(0.0, 1.0);
    Ok((w, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn ks_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let (d, p) = ks_test(&a, &a).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn ks_disjoint_support_is_maximal() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| 1000.0 + i as f64).collect();
        let (d, p) = ks_test(&a, &b).unwrap();
        assert_eq!(d, 1.0);
        assert!(p < 1e-6);
    }

    #[test]
    fn ks_same_distribution_rarely_rejects() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut accepted = 0;
        for seed in 0..100u64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let a: Vec<f64> = (0..500).map(|_| rng.sample(normal)).collect();
            let b: Vec<f64> = (0..500).map(|_| rng.sample(normal)).collect();
            let (_, p) = ks_test(&a, &b).unwrap();
            if p > 0.05 {
                accepted += 1;
            }
        }
        assert!(accepted >= 90, "accepted {accepted}/100");
    }

    #[test]
    fn wilcoxon_identical_samples() {
        let a = [2.0, 2.0, 2.0];
        let (_, p) = wilcoxon_rank_sum(&a, &a).unwrap();
        assert_eq!(p, 1.0);

        let a = [1.0, 2.0, 3.0, 4.0];
        let (_, p) = wilcoxon_rank_sum(&a, &a).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wilcoxon_detects_location_shift() {
        let a: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let b: Vec<f64> = (0..50).map(|i| 10.0 + i as f64 * 0.1).collect();
        let (_, p) = wilcoxon_rank_sum(&a, &b).unwrap();
        assert!(p < 1e-6);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(ks_test(&[], &[1.0, 2.0]).is_err());
        assert!(wilcoxon_rank_sum(&[1.0], &[1.0, 2.0]).is_err());
    }
}
