//! Deterministic low-discrepancy samples for residual scans and sup norms.

use crate::point::{origin, Pt};

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Van der Corput radical inverse of `i` in the given base, in `(0, 1)`.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    x + 0.5 * f.min(inv * inv)
}

/// `i`-th Halton point of the cube `(0,1)^dim`.
pub fn halton(i: u64, dim: usize) -> Vec<f64> {
    (0..dim).map(|d| radical_inverse(i + 1, PRIMES[d])).collect()
}

/// Deterministic points of the ball of the given radius, log-graded in the
/// radial direction so that both the unit scale and the far field are seen.
pub fn ball_points(n: usize, count: usize, radius: f64, skip: u64) -> Vec<Pt> {
    let r_min: f64 = 0.05;
    (0..count as u64)
        .map(|i| {
            let h = halton(skip * 131 + i, n + 1);
            let r = r_min * (radius / r_min).powf(h[n]);
            let mut p = origin();
            let mut norm2 = 0.0;
            for d in 0..n {
                // Box-Muller-free isotropy is not needed here; a mapped cube
                // direction is fine for a residual scan.
                p[d] = 2.0 * h[d] - 1.0;
                norm2 += p[d] * p[d];
            }
            let norm = norm2.sqrt().max(1e-9);
            for d in 0..n {
                p[d] *= r / norm;
            }
            p
        })
        .collect()
}
