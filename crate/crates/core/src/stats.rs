//! Summary statistics, rank correlation and the paired sign test used by
//! the evaluation harnesses.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n-1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    std_dev(xs) / (xs.len() as f64).sqrt()
}

/// Kendall rank correlation with tie correction (tau-b).
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "kendall_tau needs paired samples");
    let n = a.len();
    if n < 2 {
        return f64::NAN;
    }
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_a = 0i64;
    let mut ties_b = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 && db == 0.0 {
                ties_a += 1;
                ties_b += 1;
            } else if da == 0.0 {
                ties_a += 1;
            } else if db == 0.0 {
                ties_b += 1;
            } else if da * db > 0.0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = (((n0 - ties_a) as f64) * ((n0 - ties_b) as f64)).sqrt();
    if denom == 0.0 {
        return f64::NAN;
    }
    (concordant - discordant) as f64 / denom
}

/// One-sided paired sign test: P(X >= wins) for X ~ Binomial(wins+losses, 1/2).
/// Ties are dropped before calling this (pass only decisive pairs).
pub fn sign_test_one_sided(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    // exact tail sum of C(n, k) / 2^n for k = wins..=n
    let mut log_c = 0.0; // ln C(n, 0)
    let mut tail = 0.0;
    for k in 0..=n {
        if k >= wins {
            tail += (log_c - (n as f64) * std::f64::consts::LN_2).exp();
        }
        if k < n {
            log_c += ((n - k) as f64).ln() - ((k + 1) as f64).ln();
        }
    }
    tail.min(1.0)
}

/// Wins/losses/ties of `a` over `b`, elementwise.
pub fn paired_outcomes(a: &[f64], b: &[f64]) -> (usize, usize, usize) {
    assert_eq!(a.len(), b.len());
    let mut wins = 0;
    let mut losses = 0;
    let mut ties = 0;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            wins += 1;
        } else if x < y {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    (wins, losses, ties)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_std_dev_basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((std_dev(&xs) - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kendall_perfect_orders() {
        let a = [0.1, 0.2, 0.3, 0.4];
        let b = [1.0, 2.0, 3.0, 4.0];
        let r: Vec<f64> = b.iter().rev().cloned().collect();
        assert_eq!(kendall_tau(&a, &b), 1.0);
        assert_eq!(kendall_tau(&a, &r), -1.0);
    }

    #[test]
    fn kendall_known_small_case() {
        // pairs: (1,2): C, (1,3): C, (2,3): D -> (2-1)/3
        let a = [1.0, 2.0, 3.0];
        let b = [1.0, 3.0, 2.0];
        assert!((kendall_tau(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sign_test_matches_hand_binomial() {
        // n=5, wins=5: p = 1/32
        assert!((sign_test_one_sided(5, 0) - 1.0 / 32.0).abs() < 1e-12);
        // n=5, wins=4: p = (1+5)/32
        assert!((sign_test_one_sided(4, 1) - 6.0 / 32.0).abs() < 1e-12);
        // n=20, wins=15: p = sum_{k=15..20} C(20,k)/2^20 = 21700/1048576
        assert!((sign_test_one_sided(15, 5) - 21700.0 / 1048576.0).abs() < 1e-12);
        assert_eq!(sign_test_one_sided(0, 0), 1.0);
    }

    #[test]
    fn paired_outcome_counts() {
        let a = [1.0, 2.0, 3.0];
        let b = [0.5, 2.0, 4.0];
        assert_eq!(paired_outcomes(&a, &b), (1, 1, 1));
    }
}
