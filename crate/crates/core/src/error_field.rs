//! Pointwise error evaluation, its interior symmetric split, the cutoff
//! functions around each satellite, and the symmetry-residual detector.

use crate::bubble::{atom_value, Ansatz, ScalarField};
use crate::config::ProblemConfig;
use crate::point::{
    abs_pow_frac, dist2, half_pow, kelvin_image, norm, norm2, origin, Pt,
};
use crate::sample::ball_points;
use crate::{Error, Result};

/// Error field value `E(y) = Δu + γ|u|^{p-1}u` of the configured ansatz.
pub fn error_eval(cfg: &ProblemConfig, y: &Pt) -> f64 {
    Ansatz::from_config(cfg).error(y)
}

/// Interior decomposition of the error near a satellite core.
///
/// `e_s` collects the part driven only by the ring interaction constants
/// and is even in every local coordinate; `e_star` is the remainder.
#[derive(Debug, Clone, Copy)]
pub struct ErrorSplit {
    /// Symmetric part at the local point.
    pub e_s: f64,
    /// Remainder; `e_s + e_star` is the full error at `ξ + λ y`.
    pub e_star: f64,
    /// The local point `y` in the λ-scaled frame of the anchor bubble.
    pub local_point: Pt,
}

/// Splits the error at `ξ̄_{i,1} + λ_i y` (anchor: first over-ring atom of
/// ring pair `circle_index`) into its even leading part and the remainder.
///
/// Only defined on the interior ball `|y| < δ/(λ k)`.
pub fn error_split_interior(
    cfg: &ProblemConfig,
    circle_index: usize,
    y_local: &Pt,
) -> Result<ErrorSplit> {
    let m = cfg.pattern.pairs();
    if circle_index >= m {
        return Err(Error::Domain(format!(
            "circle index {circle_index} outside 0..{m}"
        )));
    }
    let n = cfg.n;
    let lam = cfg.lambda[circle_index];
    let bound = cfg.delta_eff / (lam * cfg.k as f64);
    let r_local = norm(y_local, n);
    if r_local >= bound {
        return Err(Error::Domain(format!(
            "|y_local| = {r_local} outside the interior ball radius {bound}"
        )));
    }
    let ansatz = Ansatz::from_config(cfg);
    let anchor_idx = anchor_atom_index(cfg, circle_index);
    let anchor = ansatz.atoms[anchor_idx].center;

    // Ring interaction constants of the anchor: the constant Taylor term of
    // every other satellite at the anchor center and the central bubble
    // value there.
    let w = (n - 2) as u32;
    let mut lin = 0.0;
    let mut powp = 0.0;
    for (idx, atom) in ansatz.atoms.iter().enumerate() {
        if idx == 0 || idx == anchor_idx {
            continue;
        }
        let d2 = dist2(&anchor, &atom.center, n);
        // (2 λ_b)^{(n-2)/2} / |ξ - ξ_b|^{n-2}
        let term = half_pow(2.0 * atom.scale, w) / half_pow(d2, w);
        lin += term;
        powp += abs_pow_frac(term, (n + 2) as u32, (n - 2) as u32);
    }
    let u_central = atom_value(n, &anchor, 1.0, &origin());
    let b1 = lin - u_central;
    let b2 = powp - abs_pow_frac(u_central, (n + 2) as u32, (n - 2) as u32);

    let u_local = atom_value(n, y_local, 1.0, &origin());
    let up1 = abs_pow_frac(u_local, 4, (n - 2) as u32);
    let e_s = cfg.gamma * (cfg.p * up1 * b1 / (lam * lam) + b2);

    let mut global = anchor;
    for i in 0..n {
        global[i] += lam * y_local[i];
    }
    let full = ansatz.error(&global);
    Ok(ErrorSplit {
        e_s,
        e_star: full - e_s,
        local_point: *y_local,
    })
}

fn anchor_atom_index(cfg: &ProblemConfig, circle_index: usize) -> usize {
    let eq = if cfg.pattern.has_equator() { cfg.k } else { 0 };
    1 + eq + 2 * cfg.k * circle_index
}

/// The transition profile: `1` for `s ≤ 1`, `0` for `s ≥ 2`, cubic
/// smoothstep in between (C¹).
pub fn transition(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let u = s - 1.0;
        1.0 - (3.0 * u * u - 2.0 * u * u * u)
    }
}

/// Cutoff function of one atom: `ζ(k δ⁻¹ d(y))` where `d` is the plain
/// distance to the center for `|y| ≤ 1` and the Kelvin-reflected distance
/// `|y|⁻² |y - ξ |y|²|` for `|y| > 1`. Under-ring cutoffs are exactly the
/// same formula anchored at the reflected center.
pub fn cutoff(cfg: &ProblemConfig, atom_index: usize, y: &Pt) -> f64 {
    let atoms = Ansatz::from_config(cfg).atoms;
    cutoff_at(cfg, &atoms[atom_index].center, y)
}

/// Cutoff anchored at an arbitrary center.
pub fn cutoff_at(cfg: &ProblemConfig, center: &Pt, y: &Pt) -> f64 {
    let n = cfg.n;
    let r2 = norm2(y, n);
    let d = if r2 > 1.0 {
        let mut s = 0.0;
        for i in 0..n {
            let v = y[i] - center[i] * r2;
            s += v * v;
        }
        s.sqrt() / r2
    } else {
        dist2(y, center, n).sqrt()
    };
    transition(d * cfg.k as f64 / cfg.delta_eff)
}

/// Symmetry generators probed by [`symmetry_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Rotation by `2π j / k` in the `(y₁, y₂)` plane.
    Rotation(usize),
    /// Sign flip of coordinate `alpha` (1-based, `alpha ≥ 2`).
    Reflection(usize),
    /// Kelvin transform with the field's homogeneity weight.
    Kelvin,
}

/// Residual of one generator on one field: `max |f(y) - f(σ y)|` over the
/// deterministic sample (Kelvin: `|f(y) - |y|^w f(y/|y|²)|`).
#[derive(Debug, Clone)]
pub struct SymmetryReport {
    pub residuals: Vec<(String, f64)>,
    pub max_residual: f64,
    pub sample_size: usize,
}

/// Max symmetry residual of a field over the full generator set: one
/// rotation step, the half-turn, all coordinate reflections `α = 2..n`,
/// and the Kelvin transform with the field's weight.
pub fn symmetry_residual(field: &ScalarField, cfg: &ProblemConfig) -> SymmetryReport {
    let mut gens = vec![Generator::Rotation(1), Generator::Rotation(cfg.k / 2)];
    for alpha in 2..=cfg.n {
        gens.push(Generator::Reflection(alpha));
    }
    gens.push(Generator::Kelvin);
    symmetry_residual_for(field, cfg, &gens, 200)
}

/// Residuals for an explicit generator list.
pub fn symmetry_residual_for(
    field: &ScalarField,
    cfg: &ProblemConfig,
    generators: &[Generator],
    sample_size: usize,
) -> SymmetryReport {
    let n = cfg.n;
    let points = symmetry_sample(cfg, sample_size);
    let mut residuals = Vec::new();
    let mut max_residual: f64 = 0.0;
    for g in generators {
        let mut worst: f64 = 0.0;
        for y in &points {
            let f0 = field.value(y);
            let f1 = match g {
                Generator::Rotation(j) => {
                    let th = 2.0 * std::f64::consts::PI * (*j as f64) / cfg.k as f64;
                    let (c, s) = (th.cos(), th.sin());
                    let mut z = *y;
                    z[0] = c * y[0] - s * y[1];
                    z[1] = s * y[0] + c * y[1];
                    field.value(&z)
                }
                Generator::Reflection(alpha) => {
                    let mut z = *y;
                    z[alpha - 1] = -z[alpha - 1];
                    field.value(&z)
                }
                Generator::Kelvin => {
                    let image = kelvin_image(y, n);
                    let r = norm(y, n);
                    r.powi(field.kelvin_weight()) * field.value(&image)
                }
            };
            worst = worst.max((f0 - f1).abs());
        }
        let name = match g {
            Generator::Rotation(j) => format!("rotation-{j}"),
            Generator::Reflection(a) => format!("reflection-y{a}"),
            Generator::Kelvin => "kelvin".into(),
        };
        max_residual = max_residual.max(worst);
        residuals.push((name, worst));
    }
    SymmetryReport {
        residuals,
        max_residual,
        sample_size: points.len(),
    }
}

/// Deterministic sample kept away from every bubble core (and its Kelvin
/// image, which coincides with the core up to `O(λ²)`), so that residual
/// thresholds are not polluted by floating-point noise on huge field values.
fn symmetry_sample(cfg: &ProblemConfig, size: usize) -> Vec<Pt> {
    let n = cfg.n;
    let atoms = cfg.lattice_points();
    let mut out = Vec::with_capacity(size);
    let mut batch = 0u64;
    while out.len() < size && batch < 40 {
        for y in ball_points(n, 2 * size, 3.0, 1000 + batch) {
            let r = norm(&y, n);
            if r < 0.25 {
                continue;
            }
            let image = kelvin_image(&y, n);
            // Exclusion margin scales with the core size: field values of
            // order scale^{-(n+2)/2} there would turn f64 roundoff into
            // spurious residuals.
            let clear = atoms.iter().all(|a| {
                let margin = (12.0 * a.scale).clamp(0.02, 0.3);
                dist2(&y, &a.center, n).sqrt() > margin
                    && dist2(&image, &a.center, n).sqrt() > margin
            });
            if clear {
                out.push(y);
                if out.len() == size {
                    break;
                }
            }
        }
        batch += 1;
    }
    out
}
