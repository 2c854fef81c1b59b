//! Gauss–Legendre rules, panel decompositions, sphere product rules and
//! compensated summation.

use crate::point::{origin, Pt};

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre polynomial and derivative at x.
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            pp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss rule over consecutive panels `[breaks[i], breaks[i+1]]`.
pub fn panel_rule(breaks: &[f64], m: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(m);
    let mut out = Vec::with_capacity(m * breaks.len().saturating_sub(1));
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for i in 0..m {
            out.push((mid + half * xs[i], half * ws[i]));
        }
    }
    out
}

/// Sorted, deduplicated break list clipped to `[lo, hi]` (endpoints kept).
pub fn clip_breaks(candidates: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut b: Vec<f64> = candidates
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    b.push(lo);
    b.push(hi);
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    b.dedup_by(|a, c| (*a - *c).abs() <= 1e-14 * hi.abs().max(1.0));
    b
}

/// Dyadic break list `lo ∪ {1, 2, 4, ...} · unit ∪ hi` for radially graded
/// panels around a core of the given unit scale.
pub fn dyadic_breaks(unit: f64, hi: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = unit;
    while x < hi {
        b.push(x);
        x *= 2.0;
    }
    b.push(hi);
    b
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Acc {
    sum: f64,
    comp: f64,
}

impl Acc {
    pub fn new() -> Self {
        Acc::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Ordered compensated fold; the reduction order is the slice order, so the
/// result is bitwise reproducible regardless of how the parts were produced.
pub fn compensated_fold(parts: &[f64]) -> f64 {
    let mut acc = Acc::new();
    for &p in parts {
        acc.add(p);
    }
    acc.total()
}

/// Product rule on the full sphere `S^{n-1}` with total weight
/// `|S^{n-1}|`.
///
/// Nodes come out in mirror pairs: entry `2i+1` is entry `2i` with the
/// third coordinate negated (for `n ≥ 3`), so integrands with a small odd
/// part in `y₃` can be accumulated pair-first.
pub struct SphereRule {
    pub nodes: Vec<(Pt, f64)>,
}

impl SphereRule {
    /// `m_polar` Gauss nodes per polar level (forced even), `m_theta`
    /// equispaced azimuth nodes.
    pub fn new(n: usize, m_polar: usize, m_theta: usize) -> Self {
        assert!((3..=crate::point::MAX_DIM).contains(&n));
        let m_polar = m_polar + m_polar % 2;
        // Azimuth rule on S¹ (exact for trigonometric polynomials).
        let mut circle = Vec::with_capacity(m_theta);
        let wt = 2.0 * std::f64::consts::PI / m_theta as f64;
        for i in 0..m_theta {
            let th = wt * (i as f64 + 0.5);
            circle.push(([th.cos(), th.sin()], wt));
        }
        // Polar levels: innermost sets y₃ (paired ±c), outer levels set
        // y₄..y_n.
        let (xs, ws) = gauss_legendre(m_polar);
        let mut nodes: Vec<(Pt, f64)> = Vec::new();
        // Level for y₃: iterate c over the positive half and emit ±c
        // adjacently.
        for half in 0..m_polar / 2 {
            let c = xs[m_polar / 2 + half];
            let w = ws[m_polar / 2 + half];
            let s = (1.0 - c * c).sqrt();
            for &(az, waz) in &circle {
                for &sign in &[1.0, -1.0] {
                    let mut p = origin();
                    p[0] = s * az[0];
                    p[1] = s * az[1];
                    p[2] = sign * c;
                    nodes.push((p, w * waz));
                }
            }
        }
        // Mirror pairs are already adjacent (sign innermost). Extend to
        // higher dimensions one level at a time: the new coordinate c
        // carries the weight (1-c²)^{e/2} with e = level-3. Even e folds a
        // polynomial into Gauss-Legendre; odd e uses Gauss-Chebyshev of the
        // second kind, exact for the sqrt factor.
        for level in 4..=n {
            let e = level - 3;
            let levels: Vec<(f64, f64)> = if e % 2 == 0 {
                (0..m_polar)
                    .map(|i| {
                        let c = xs[i];
                        (c, ws[i] * (1.0 - c * c).powi(e as i32 / 2))
                    })
                    .collect()
            } else {
                (1..=m_polar)
                    .map(|k| {
                        let phi = k as f64 * std::f64::consts::PI / (m_polar as f64 + 1.0);
                        let c = phi.cos();
                        let s2 = 1.0 - c * c;
                        let w = std::f64::consts::PI / (m_polar as f64 + 1.0)
                            * phi.sin()
                            * phi.sin()
                            * s2.powi((e as i32 - 1) / 2);
                        (c, w)
                    })
                    .collect()
            };
            let mut extended = Vec::with_capacity(nodes.len() * m_polar);
            for &(c, wlevel) in &levels {
                let s = (1.0 - c * c).sqrt();
                for &(inner, wi) in &nodes {
                    let mut p = origin();
                    for d in 0..level - 1 {
                        p[d] = s * inner[d];
                    }
                    p[level - 1] = c;
                    extended.push((p, wi * wlevel));
                }
            }
            nodes = extended;
        }
        SphereRule { nodes }
    }

    /// Total weight; equals `|S^{n-1}|` up to the rule's own accuracy.
    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }
}

/// Surface measure of the unit sphere `S^{n-1}`.
pub fn sphere_area(n: usize) -> f64 {
    // 2 π^{n/2} / Γ(n/2) for n = 3..=6.
    match n {
        3 => 4.0 * std::f64::consts::PI,
        4 => 2.0 * std::f64::consts::PI * std::f64::consts::PI,
        5 => 8.0 * std::f64::consts::PI * std::f64::consts::PI / 3.0,
        6 => std::f64::consts::PI.powi(3),
        _ => panic!("unsupported dimension {n}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (xs, ws) = gauss_legendre(8);
        // Degree-15 polynomial integrated exactly.
        let integral: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(&x, &w)| w * (x.powi(14) + 3.0 * x.powi(7) + 1.0))
            .sum();
        let exact = 2.0 / 15.0 + 2.0;
        assert!((integral - exact).abs() < 1e-13);
    }

    #[test]
    fn panel_rule_covers_interval() {
        let rule = panel_rule(&[0.0, 0.5, 2.0], 6);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-13);
        let integral: f64 = rule.iter().map(|(x, w)| w * x.exp()).sum();
        assert!((integral - (2f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn sphere_rule_weights_and_pairs() {
        for n in 3..=6 {
            let rule = SphereRule::new(n, 8, 12);
            assert!(
                (rule.total_weight() - sphere_area(n)).abs() < 1e-10 * sphere_area(n),
                "n={n}"
            );
            // Mirror pairs adjacent in y₃.
            for pair in rule.nodes.chunks(2) {
                assert!((pair[0].0[2] + pair[1].0[2]).abs() < 1e-15);
                assert!((pair[0].1 - pair[1].1).abs() < 1e-15);
            }
            // Second moment of y₃²: |S^{n-1}|/n.
            let m2: f64 = rule.nodes.iter().map(|(p, w)| w * p[2] * p[2]).sum();
            assert!((m2 - sphere_area(n) / n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn neumaier_handles_cancellation() {
        let mut acc = Acc::new();
        acc.add(1e16);
        acc.add(1.0);
        acc.add(-1e16);
        assert_eq!(acc.total(), 1.0);
    }

    #[test]
    fn dyadic_breaks_shape() {
        let b = dyadic_breaks(1.0, 10.0);
        assert_eq!(b, vec![0.0, 1.0, 2.0, 4.0, 8.0, 10.0]);
    }
}
