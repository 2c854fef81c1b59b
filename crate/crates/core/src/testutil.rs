//! Shared helpers for unit tests.

use crate::point::Pt;
use crate::sample::ball_points;

/// Deterministic pseudo-random points in a ball of the given radius.
pub fn sample_points(n: usize, count: usize, radius: f64, seed: u64) -> Vec<Pt> {
    ball_points(n, count, radius, seed)
}
