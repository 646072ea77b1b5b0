//! Space-filling designs used to seed multistart solvers and sample boxes.

use rand::seq::SliceRandom;
use rand::Rng;

const PRIMES: [usize; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

fn radical_inverse(mut index: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    out
}

/// The `index`-th point of the Halton sequence in `[0, 1)^D`.
pub fn halton<const D: usize>(index: usize) -> [f64; D] {
    assert!(D <= PRIMES.len(), "halton supports up to {} dimensions", PRIMES.len());
    std::array::from_fn(|d| radical_inverse(index, PRIMES[d]))
}

/// Latin hypercube design of `n` points inside `[lower, upper]`.
///
/// Each coordinate is stratified into `n` equal bins with one jittered
/// sample per bin; bins are independently permuted per coordinate.
pub fn latin_hypercube<R: Rng + ?Sized>(
    n: usize,
    lower: &[f64],
    upper: &[f64],
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let dim = lower.len();
    let mut points = vec![vec![0.0; dim]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for d in 0..dim {
        perm.shuffle(rng);
        let width = (upper[d] - lower[d]) / n as f64;
        for (p, &bin) in points.iter_mut().zip(&perm) {
            let u: f64 = rng.random();
            p[d] = lower[d] + (bin as f64 + u) * width;
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn halton_first_points() {
        assert_eq!(halton::<2>(1), [0.5, 1.0 / 3.0]);
        assert_eq!(halton::<2>(2), [0.25, 2.0 / 3.0]);
        assert_eq!(halton::<1>(3), [0.75]);
    }

    #[test]
    fn lhs_one_point_per_stratum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 32;
        let pts = latin_hypercube(n, &[-1.0; 5], &[1.0; 5], &mut rng);
        for d in 0..5 {
            let mut bins: Vec<usize> = pts
                .iter()
                .map(|p| (((p[d] + 1.0) / 2.0) * n as f64).floor() as usize)
                .collect();
            bins.sort_unstable();
            assert_eq!(bins, (0..n).collect::<Vec<_>>());
        }
    }
}
