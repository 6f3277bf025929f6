//! Small sampling helpers shared by the generators and the simulator.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Seeded generator used everywhere randomness is needed.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `stream` of the generator seeded with `seed`.
pub fn rng_substream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform random `k`-subset of `0..n` (Floyd's algorithm), written to `out`.
///
/// The subset is uniform; the order of `out` is not.
pub fn floyd_sample<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, out: &mut Vec<usize>) {
    assert!(k <= n, "cannot sample {k} of {n}");
    out.clear();
    if k == n {
        out.extend(0..n);
        return;
    }
    if k <= 32 {
        for j in (n - k)..n {
            let t = rng.gen_range(0..=j);
            if out.contains(&t) {
                out.push(j);
            } else {
                out.push(t);
            }
        }
        return;
    }
    let mut chosen = HashSet::with_capacity(k * 2);
    for j in (n - k)..n {
        let t = rng.gen_range(0..=j);
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.insert(pick);
        out.push(pick);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floyd_returns_distinct_in_range() {
        let mut rng = rng_from_seed(3);
        let mut out = Vec::new();
        for &(n, k) in &[(10, 3), (10, 10), (1000, 100), (5, 0), (1, 1)] {
            floyd_sample(&mut rng, n, k, &mut out);
            assert_eq!(out.len(), k);
            let set: HashSet<_> = out.iter().copied().collect();
            assert_eq!(set.len(), k);
            assert!(out.iter().all(|&x| x < n));
        }
    }

    #[test]
    fn floyd_pairs_are_uniform() {
        // All 10 two-subsets of 0..5 should appear with frequency 1/10.
        let mut rng = rng_from_seed(11);
        let mut counts = [[0u32; 5]; 5];
        let mut out = Vec::new();
        let draws = 200_000;
        for _ in 0..draws {
            floyd_sample(&mut rng, 5, 2, &mut out);
            let (a, b) = (out[0].min(out[1]), out[0].max(out[1]));
            counts[a][b] += 1;
        }
        let expected = draws as f64 / 10.0;
        let sd = (draws as f64 * 0.1 * 0.9).sqrt();
        for a in 0..5 {
            for b in (a + 1)..5 {
                assert!((counts[a][b] as f64 - expected).abs() < 5.0 * sd);
            }
        }
    }

    #[test]
    fn substreams_differ() {
        use rand::RngCore;
        let a = rng_substream(7, 0).next_u64();
        let b = rng_substream(7, 1).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, rng_substream(7, 0).next_u64());
    }
}
