//! Summary statistics and the Mann–Whitney rank-sum test.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Below this size (for both samples, without ties) p-values come from the
/// exact null distribution of U instead of the normal approximation.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// `U` of the first sample: the number of pairs in which it ranks above
    /// the second, ties counting one half.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Midranks (1-based, ties averaged) of `values`.
fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    (ranks, tie_term)
}

/// Frequencies of each `U = 0..=n·m` under the null, for samples of size `n` and `m`.
fn u_distribution(n: usize, m: usize) -> Vec<f64> {
    // counts[i][j] is the distribution for sizes (i, j); U grows by j when the
    // largest element comes from the first sample.
    let max_u = n * m;
    let mut prev: Vec<Vec<f64>> = (0..=m).map(|_| vec![1.0]).collect();
    for i in 1..=n {
        let mut cur: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        cur.push(vec![1.0]);
        for j in 1..=m {
            let mut dist = vec![0.0; i * j + 1];
            for (u, c) in prev[j].iter().enumerate() {
                dist[u + j] += c;
            }
            for (u, c) in cur[j - 1].iter().enumerate() {
                dist[u] += c;
            }
            cur.push(dist);
        }
        prev = cur;
    }
    let dist = prev.swap_remove(m);
    debug_assert_eq!(dist.len(), max_u + 1);
    dist
}

/// Two-sided Mann–Whitney U test with tie correction.
///
/// Uses the exact distribution when both samples have fewer than
/// [`EXACT_LIMIT`] values and there are no ties, and the continuity-corrected
/// normal approximation otherwise. Identical samples give `p = 1`.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidConfig(
            "Mann-Whitney test needs two non-empty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidConfig("Mann-Whitney test got NaN".into()));
    }
    let (n, m) = (a.len(), b.len());
    let joined: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_term) = midranks(&joined);
    let rank_sum: f64 = ranks[..n].iter().sum();
    let u = rank_sum - (n * (n + 1)) as f64 / 2.0;
    let total = (n + m) as f64;

    if joined.iter().all(|&x| x == joined[0]) {
        return Ok(MannWhitney { u, p: 1.0 });
    }

    let p = if tie_term == 0.0 && n < EXACT_LIMIT && m < EXACT_LIMIT {
        let dist = u_distribution(n, m);
        let all: f64 = dist.iter().sum();
        let k = u.round() as usize;
        let lower: f64 = dist[..=k].iter().sum::<f64>() / all;
        let upper: f64 = dist[k..].iter().sum::<f64>() / all;
        (2.0 * lower.min(upper)).min(1.0)
    } else {
        let (nf, mf) = (n as f64, m as f64);
        let mean = nf * mf / 2.0;
        let var = nf * mf / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
            erfc(z / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
        }
    };
    Ok(MannWhitney { u, p })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single value.
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Mean, standard deviation and Student-t 95% confidence interval.
pub fn summarize(values: &[f64]) -> Option<SampleSummary> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let half = if n > 1 {
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        t * std / (n as f64).sqrt()
    } else {
        0.0
    };
    Some(SampleSummary {
        n,
        mean,
        std,
        ci_low: mean - half,
        ci_high: mean + half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [3.0; 25];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.p, 1.0);
        assert_eq!(r.u, 25.0 * 25.0 / 2.0);
    }

    #[test]
    fn disjoint_ranges_are_significant() {
        let a: Vec<f64> = (1..=50).map(f64::from).collect();
        let b: Vec<f64> = (51..=100).map(f64::from).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.p < 1e-9, "{}", r.p);
    }

    #[test]
    fn shuffled_copy_has_central_u() {
        let a: Vec<f64> = (0..30).map(|i| ((i * 7919) % 101) as f64).collect();
        let mut b = a.clone();
        b.reverse();
        b.rotate_left(11);
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(r.u, 30.0 * 30.0 / 2.0);
        assert!(r.p > 0.99);
    }

    #[test]
    fn small_exact_extreme() {
        // Complete separation of 5 vs 5: P(U = 0) = 1/252, two-sided 2/252.
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [6.0, 7.0, 8.0, 9.0, 10.0];
        let r = mann_whitney_u(&a, &b).unwrap();
        assert!((r.p - 2.0 / 252.0).abs() < 1e-15);
    }

    #[test]
    fn u_distribution_counts() {
        let d = u_distribution(2, 2);
        assert_eq!(d, vec![1.0, 1.0, 2.0, 1.0, 1.0]);
        assert_eq!(u_distribution(5, 5).iter().sum::<f64>(), 252.0);
        assert_eq!(u_distribution(3, 1), vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn midranks_average_ties() {
        let (r, t) = midranks(&[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(r, vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(t, 6.0);
    }

    #[test]
    fn summary_values() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        // t_{0.975, 3} = 3.182446305
        assert!((s.ci_high - (2.5 + 3.182446305284263 * s.std / 2.0)).abs() < 1e-9);
        assert_eq!(summarize(&[7.0]).unwrap().std, 0.0);
        assert!(summarize(&[]).is_none());
    }

    proptest::proptest! {
        #[test]
        fn p_is_a_probability_and_u_is_complementary(
            a in proptest::collection::vec(-50i32..50, 1..30),
            b in proptest::collection::vec(-50i32..50, 1..30),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = mann_whitney_u(&a, &b).unwrap();
            let ba = mann_whitney_u(&b, &a).unwrap();
            proptest::prop_assert!((0.0..=1.0).contains(&ab.p));
            proptest::prop_assert_eq!(ab.u + ba.u, (a.len() * b.len()) as f64);
            proptest::prop_assert!((ab.p - ba.p).abs() < 1e-12);
        }
    }
}
