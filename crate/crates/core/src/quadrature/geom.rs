//! Lattice geometry shared by the integration domains: satellite classes,
//! smooth near-core bumps, and the feature boxes that localize the fine
//! quadrature pass.

use crate::config::{BubbleAtom, ProblemConfig};
use crate::point::{dist2, origin, Pt};

/// Smooth C³ profile: `1` on `[0, 1]`, `0` beyond `2`, a quartic
/// smootherstep on `(1, 2)`. Used only to split integration domains; the
/// analysis cutoff lives in `error_field`.
#[inline]
pub fn bump(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let u = s - 1.0;
        let u2 = u * u;
        1.0 - u2 * u2 * (35.0 - 84.0 * u + u2 * (70.0 - 20.0 * u))
    }
}

/// One orbit of satellites under the lattice symmetry group.
#[derive(Debug, Clone)]
pub struct SatClass {
    /// Index of the representative in `satellites`.
    pub rep: usize,
    /// Orbit size.
    pub count: usize,
}

/// Axis-aligned feature box in the wedge coordinates `(r, χ.., σ)`,
/// clipped to the fundamental domain.
#[derive(Debug, Clone)]
pub struct FeatureBox {
    pub r: (f64, f64),
    /// One arc-angle interval `χ ∈ [0, π/2]` per polar level (the level
    /// coordinate is `cos χ`); index 0 is the `y₃` level, the rest are
    /// `y₄..y_n` levels.
    pub chi: Vec<(f64, f64)>,
    /// Scaled azimuth `σ = θ k / π ∈ (0, 1)`.
    pub sigma: (f64, f64),
}

/// Geometry of a bubble lattice as the integrators see it.
#[derive(Debug, Clone)]
pub struct LatticeGeom {
    pub n: usize,
    pub k: usize,
    pub atoms: Vec<BubbleAtom>,
    /// Indices of the satellites (all atoms but the central one).
    pub satellites: Vec<usize>,
    /// Symmetry orbits of the satellites.
    pub classes: Vec<SatClass>,
    /// Inner bump radius; the bump transition lives on `[r₁, 2r₁]`.
    pub bump_radius: f64,
    /// Fundamental-domain feature boxes.
    pub boxes: Vec<FeatureBox>,
}

impl LatticeGeom {
    pub fn from_config(cfg: &ProblemConfig) -> Self {
        let atoms = cfg.lattice_points();
        let n = cfg.n;
        let k = cfg.k;
        let satellites: Vec<usize> = (1..atoms.len()).collect();
        let mut classes = Vec::new();
        let mut cursor = 1usize;
        if cfg.pattern.has_equator() {
            classes.push(SatClass {
                rep: cursor,
                count: k,
            });
            cursor += k;
        }
        for _ in 0..cfg.pattern.pairs() {
            classes.push(SatClass {
                rep: cursor,
                count: 2 * k,
            });
            cursor += 2 * k;
        }
        debug_assert_eq!(cursor, atoms.len());

        let r1 = cfg.cutoff_radius();
        let mut boxes = Vec::new();
        // Half-width of a box: covers the bump support 2 r₁ with margin.
        let a = 2.5 * r1;
        let half_pi = 0.5 * std::f64::consts::PI;
        let mut add_box = |radius: f64, c3: f64| {
            // Arc-angle radius of the ball seen from the origin.
            let wchi = (a / radius).min(half_pi);
            let ws = (a / (radius * (1.0 - c3 * c3).sqrt().max(1e-3)) * k as f64
                / std::f64::consts::PI)
                .min(1.0);
            let chi_center = c3.clamp(-1.0, 1.0).acos();
            // Clip the y₃ level to the fundamental domain χ ≤ π/2.
            if chi_center - wchi < half_pi {
                let mut chi = vec![(
                    (chi_center - wchi).max(0.0),
                    (chi_center + wchi).min(half_pi),
                )];
                for _ in 4..=n {
                    // Outer levels center on the χ = π/2 boundary.
                    chi.push(((half_pi - wchi).max(0.0), half_pi));
                }
                boxes.push(FeatureBox {
                    r: (radius - a, radius + a),
                    chi,
                    sigma: (0.0, ws),
                });
            }
        };
        if let (Some(_), Some(r)) = (cfg.mu, cfg.r_eq) {
            add_box(r, 0.0);
        }
        for i in 0..cfg.pattern.pairs() {
            add_box(cfg.radius[i], cfg.tau[i]);
            // The under-ring box only pokes into the wedge when the bump
            // reaches across the equatorial plane.
            if cfg.tau[i] * cfg.radius[i] < a {
                add_box(cfg.radius[i], -cfg.tau[i]);
            }
        }
        merge_boxes(&mut boxes);
        LatticeGeom {
            n,
            k,
            atoms,
            satellites,
            classes,
            bump_radius: r1,
            boxes,
        }
    }

    /// Geometry of the satellite-free field (control object).
    pub fn single(n: usize) -> Self {
        LatticeGeom {
            n,
            k: 1,
            atoms: vec![BubbleAtom {
                sign: 1.0,
                center: origin(),
                scale: 1.0,
            }],
            satellites: Vec::new(),
            classes: Vec::new(),
            bump_radius: 0.05,
            boxes: Vec::new(),
        }
    }

    /// `1 - Σ_s bump(|y - ξ_s| / r₁)`: the far-region factor.
    pub fn far_factor(&self, y: &Pt) -> f64 {
        let mut f = 1.0;
        for &s in &self.satellites {
            let a = &self.atoms[s];
            let d = dist2(y, &a.center, self.n).sqrt();
            if d < 2.0 * self.bump_radius {
                f -= bump(d / self.bump_radius);
            }
        }
        f
    }

    /// Orbit multiplicity of the fundamental domain.
    pub fn fd_multiplicity(&self) -> f64 {
        (self.k as f64) * 2f64.powi(self.n as i32 - 1)
    }
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

fn merge_boxes(boxes: &mut Vec<FeatureBox>) {
    let mut merged = true;
    while merged {
        merged = false;
        'outer: for i in 0..boxes.len() {
            for j in (i + 1)..boxes.len() {
                let all = overlap(boxes[i].r, boxes[j].r)
                    && overlap(boxes[i].sigma, boxes[j].sigma)
                    && boxes[i]
                        .chi
                        .iter()
                        .zip(&boxes[j].chi)
                        .all(|(a, b)| overlap(*a, *b));
                if all {
                    let b = boxes.remove(j);
                    let a = &mut boxes[i];
                    a.r = (a.r.0.min(b.r.0), a.r.1.max(b.r.1));
                    a.sigma = (a.sigma.0.min(b.sigma.0), a.sigma.1.max(b.sigma.1));
                    for (ac, bc) in a.chi.iter_mut().zip(&b.chi) {
                        *ac = (ac.0.min(bc.0), ac.1.max(bc.1));
                    }
                    merged = true;
                    break 'outer;
                }
            }
        }
    }
}

/// Maps wedge coordinates to a unit direction: polar levels `cs` (index 0
/// is the `y₃` level, later entries fill `y₄..y_n`) and azimuth `theta`.
#[inline]
pub fn direction(n: usize, cs: &[f64], theta: f64) -> Pt {
    let mut p = origin();
    p[0] = theta.cos();
    p[1] = theta.sin();
    // Innermost level first: y₃, then y₄, ...
    for (level, &c) in cs.iter().enumerate() {
        let s = (1.0 - c * c).sqrt();
        for d in 0..2 + level {
            p[d] *= s;
        }
        p[2 + level] = c;
    }
    debug_assert!(cs.len() == n - 2);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{build_config, Pattern};
    use crate::point::norm;

    #[test]
    fn direction_is_unit_and_ordered() {
        for n in 3..=6 {
            let cs: Vec<f64> = (0..n - 2).map(|i| 0.3 - 0.1 * i as f64).collect();
            let p = direction(n, &cs, 0.7);
            assert!((norm(&p, n) - 1.0).abs() < 1e-14);
            // The first polar level is y₃.
            let mut outer = 1.0;
            for lvl in (0..n - 2).rev() {
                assert!((p[2 + lvl] - outer * cs[lvl]).abs() < 1e-14);
                outer *= (1.0 - cs[lvl] * cs[lvl]).sqrt();
            }
        }
    }

    #[test]
    fn bump_profile() {
        assert_eq!(bump(0.3), 1.0);
        assert_eq!(bump(1.0), 1.0);
        assert_eq!(bump(2.0), 0.0);
        let mid = bump(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        // C³ smoothness at the joints: third difference stays bounded.
        let h = 1e-3;
        for s in [1.0, 2.0] {
            let d3 = (bump(s + 2.0 * h) - 3.0 * bump(s + h) + 3.0 * bump(s) - bump(s - h)).abs()
                / (h * h * h);
            assert!(d3 < 200.0, "third derivative jump too harsh: {d3}");
        }
    }

    #[test]
    fn geometry_classes_and_multiplicity() {
        let cfg = build_config(4, 8, Pattern::Odd(1), &[1.0, 1.0], &[1.0], 2.5, 0.1).unwrap();
        let geom = LatticeGeom::from_config(&cfg);
        assert_eq!(geom.classes.len(), 2);
        assert_eq!(geom.classes[0].count, 8); // equatorial orbit
        assert_eq!(geom.classes[1].count, 16); // doubled ring orbit
        assert_eq!(geom.fd_multiplicity(), 8.0 * 8.0);
        let sum: usize = geom.classes.iter().map(|c| c.count).sum();
        assert_eq!(sum, geom.satellites.len());
    }

    #[test]
    fn far_factor_vanishes_at_cores() {
        let cfg = build_config(4, 8, Pattern::Double, &[1.0], &[1.0], 2.5, 0.1).unwrap();
        let geom = LatticeGeom::from_config(&cfg);
        let core = geom.atoms[1].center;
        assert_eq!(geom.far_factor(&core), 0.0);
        assert_eq!(geom.far_factor(&origin()), 1.0);
    }
}
