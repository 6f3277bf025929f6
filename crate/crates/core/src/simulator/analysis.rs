/// `V_k = 1/2 sum_{i>=k} (i-k+1)(i-k+2) X_i` per sample, where each sample
/// holds `Q_1, Q_2, ...` (counts or fractions) and `X_i = Q_i - Q_{i+1}`.
pub fn lyapunov_series(samples: &[Vec<f64>], k: usize) -> Vec<f64> {
    assert!(k >= 1, "k must be at least 1");
    samples
        .iter()
        .map(|q| {
            let level = |i: usize| q.get(i - 1).copied().unwrap_or(0.0);
            (k..=q.len())
                .map(|i| {
                    let x = level(i) - level(i + 1);
                    let a = (i - k + 1) as f64;
                    0.5 * a * (a + 1.0) * x
                })
                .sum()
        })
        .collect()
}

/// `V_k = sum_{i>=k} sum_{j>=i} Q_j` evaluated literally.
pub fn lyapunov_direct(q: &[f64], k: usize) -> f64 {
    (k..=q.len()).map(|i| q[i - 1..].iter().sum::<f64>()).sum()
}

/// `(1 + lambda) / (1 - lambda)`.
pub fn tail_prefactor(lambda: f64) -> f64 {
    (1.0 + lambda) / (1.0 - lambda)
}

/// `prefactor * q_{k-1} - sum_{i>=k} q_i` for averages `q_1, q_2, ...`
/// (with `q_0 = 1`).
pub fn tail_moment_check(q_bar: &[f64], lambda: f64, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let prev = if k == 1 { 1.0 } else { q_bar.get(k - 2).copied().unwrap_or(0.0) };
    let tail: f64 = q_bar.iter().skip(k - 1).sum();
    tail_prefactor(lambda) * prev - tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov_series(&[vec![0.0; 5]], 1), vec![0.0]);
        let one = vec![1.0, 1.0, 1.0];
        assert_eq!(lyapunov_series(std::slice::from_ref(&one), 1), vec![6.0]);
        assert_eq!(lyapunov_direct(&one, 1), 6.0);
        assert_eq!(lyapunov_series(&[one], 4), vec![0.0]);
    }

    #[test]
    fn closed_form_equals_double_sum() {
        let q = vec![10.0, 7.0, 7.0, 3.0, 1.0];
        for k in 1..=6 {
            assert_eq!(lyapunov_series(std::slice::from_ref(&q), k)[0], lyapunov_direct(&q, k));
        }
    }

    #[test]
    fn tail_prefactors() {
        assert!((tail_prefactor(0.8) - 9.0).abs() < 1e-12);
        assert!((tail_prefactor(0.5) - 3.0).abs() < 1e-12);
        assert!((tail_moment_check(&[0.5, 0.25, 0.125], 0.5, 1) - (3.0 - 0.875)).abs() < 1e-12);
        let q = [0.8, 0.512, 0.2097152, 0.0351844, 0.00099];
        assert!(tail_moment_check(&q, 0.8, 2) > 0.0);
    }
}
