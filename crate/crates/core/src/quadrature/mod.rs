//! Symmetry-aware quadrature over `ℝ^n`: weighted `L^q` norms, the sup
//! norm, the energy functional and kernel projections.
//!
//! Every domain is split into near-core balls (integrated in bubble-scaled
//! polar coordinates) and the remaining wedge (coarse panels plus fine
//! feature boxes, with an inversion-mapped tail). Results are bitwise
//! deterministic for a fixed spec: the cell list is fixed, each cell is
//! summed in a fixed order, and the cross-cell reduction is an ordered
//! compensated fold independent of the thread count.

pub mod engine;
pub mod geom;
pub mod rules;

use crate::bubble::{atom_value, Ansatz, ScalarField};
use crate::config::ProblemConfig;
use crate::error_field::cutoff_at;
use crate::point::{dist2, norm, origin, Pt};
use crate::{Error, Result};
use engine::{
    ball_integral_vec, far_integral_vec, lattice_far_vec, radial_rule, EngineParams, FarMode,
};
use geom::{bump, LatticeGeom};
use rules::sphere_area;
use serde::{Deserialize, Serialize};

/// How the unbounded exterior is folded into a bounded region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExteriorMap {
    /// Radial inversion `r ↦ 1/r` (exact for Kelvin-covariant fields).
    Kelvin,
    /// Algebraic compactification `r ↦ 2/s` with finer panel grading.
    RadialCompactify,
}

/// Region selector of the weighted norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    All,
    /// The ball `B(ξ_a, δ/k)` of one atom (lattice index).
    Interior(usize),
    /// Complement of all satellite balls.
    Exterior,
}

/// Node counts and policies governing all integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss nodes per radial panel of the wedge.
    pub radial_nodes: usize,
    /// Gauss nodes per angular panel.
    pub angular_nodes: usize,
    /// Gauss nodes per radial panel inside near-core balls.
    pub near_bubble_nodes: usize,
    /// Exploit the lattice symmetry group for invariant integrands.
    pub use_fundamental_domain: bool,
    pub exterior_map: ExteriorMap,
    /// Seed of the rank-1 lattice fallback (`n ≥ 5`).
    pub seed: u64,
    pub target_rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radial_nodes: 8,
            angular_nodes: 8,
            near_bubble_nodes: 12,
            use_fundamental_domain: true,
            exterior_map: ExteriorMap::Kelvin,
            seed: 0x5eed,
            target_rel_tol: 1e-3,
        }
    }
}

impl QuadratureSpec {
    /// The spec with all node counts multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |v: usize| ((v as f64 * factor).round() as usize).max(2);
        QuadratureSpec {
            radial_nodes: s(self.radial_nodes),
            angular_nodes: s(self.angular_nodes),
            near_bubble_nodes: s(self.near_bubble_nodes),
            ..self.clone()
        }
    }
}

/// Integral of a (vector) integrand over `ℝ^n` around a bubble lattice.
///
/// `symmetric` asserts the integrand is invariant under the lattice group,
/// enabling the fundamental-domain shortcut. Returns `(value, tail_ext)`
/// where `tail_ext` is the two-octave tail extension used as a divergence
/// telltale.
pub fn integrate_lattice_vec(
    geom: &LatticeGeom,
    spec: &QuadratureSpec,
    scale: f64,
    symmetric: bool,
    dim: usize,
    f: &(dyn Fn(&Pt, &mut [f64]) + Sync),
) -> (Vec<f64>, Vec<f64>) {
    let params = EngineParams::from_spec(spec, scale);
    let n = geom.n;
    let r1 = geom.bump_radius;
    let mut total = vec![0.0; dim];

    let use_fd = symmetric && spec.use_fundamental_domain && !geom.classes.is_empty();
    let ball_indices: Vec<(usize, f64)> = if use_fd {
        geom.classes
            .iter()
            .map(|c| (c.rep, c.count as f64))
            .collect()
    } else {
        geom.satellites.iter().map(|&s| (s, 1.0)).collect()
    };
    for (idx, mult) in ball_indices {
        let atom = &geom.atoms[idx];
        let center = atom.center;
        let g = move |y: &Pt, out: &mut [f64]| {
            f(y, out);
            let b = bump(dist2(y, &center, n).sqrt() / r1);
            for c in out.iter_mut() {
                *c *= b;
            }
        };
        let part = ball_integral_vec(
            n,
            &atom.center,
            atom.scale,
            2.0 * r1,
            &[r1],
            &params,
            dim,
            &g,
        );
        for c in 0..dim {
            total[c] += mult * part[c];
        }
    }

    let far_f = |y: &Pt, out: &mut [f64]| {
        let factor = geom.far_factor(y);
        if factor == 0.0 {
            for c in out.iter_mut() {
                *c = 0.0;
            }
            return;
        }
        f(y, out);
        for c in out.iter_mut() {
            *c *= factor;
        }
    };
    let (far_value, tail_ext) = if n >= 5 {
        (lattice_far_vec(geom, spec, dim, &far_f), vec![0.0; dim])
    } else {
        let mode = if use_fd { FarMode::Fundamental } else { FarMode::Full };
        let far = far_integral_vec(geom, &params, mode, dim, &far_f);
        (far.value, far.tail_extension)
    };
    for c in 0..dim {
        total[c] += far_value[c];
    }
    (total, tail_ext)
}

fn scalar(
    geom: &LatticeGeom,
    spec: &QuadratureSpec,
    scale: f64,
    symmetric: bool,
    f: &(dyn Fn(&Pt) -> f64 + Sync),
) -> (f64, f64) {
    let g = |y: &Pt, out: &mut [f64]| out[0] = f(y);
    let (v, e) = integrate_lattice_vec(geom, spec, scale, symmetric, 1, &g);
    (v[0], e[0])
}

/// `‖ (1+|y|)^{n+2-2n/q} · field ‖_{L^q(region)}`.
pub fn weighted_lq_norm(
    field: &ScalarField,
    q: f64,
    cfg: &ProblemConfig,
    spec: &QuadratureSpec,
    region: Region,
) -> Result<f64> {
    let symmetric = matches!(field, ScalarField::Ansatz(_) | ScalarField::Error(_));
    weighted_lq_norm_fn(|y| field.value(y), q, cfg, spec, region, symmetric)
}

/// Closure variant of [`weighted_lq_norm`]; `symmetric` asserts invariance
/// of `|field|` under the lattice symmetry group.
pub fn weighted_lq_norm_fn<F: Fn(&Pt) -> f64 + Sync>(
    field: F,
    q: f64,
    cfg: &ProblemConfig,
    spec: &QuadratureSpec,
    region: Region,
    symmetric: bool,
) -> Result<f64> {
    let geom = LatticeGeom::from_config(cfg);
    let n = cfg.n;
    let wexp = n as f64 + 2.0 - 2.0 * n as f64 / q;
    let integrand = |y: &Pt| -> f64 {
        let w = (1.0 + norm(y, n)).powf(wexp);
        (w * field(y).abs()).powf(q)
    };
    match region {
        Region::All => {
            let (v, ext) = scalar(&geom, spec, 1.0, symmetric, &integrand);
            if ext.abs() > 3.0 * spec.target_rel_tol * v.abs() {
                return Err(Error::Divergence {
                    growth: ext.abs(),
                    tol: spec.target_rel_tol,
                });
            }
            Ok(v.max(0.0).powf(1.0 / q))
        }
        Region::Interior(atom_index) => {
            Ok(interior_power(&geom, spec, atom_index, &integrand)?.powf(1.0 / q))
        }
        Region::Exterior => {
            let (all, ext) = scalar(&geom, spec, 1.0, symmetric, &integrand);
            if ext.abs() > 3.0 * spec.target_rel_tol * all.abs() {
                return Err(Error::Divergence {
                    growth: ext.abs(),
                    tol: spec.target_rel_tol,
                });
            }
            let mut outside = all;
            if symmetric && spec.use_fundamental_domain {
                for class in geom.classes.clone() {
                    outside -=
                        class.count as f64 * interior_power(&geom, spec, class.rep, &integrand)?;
                }
            } else {
                for &s in &geom.satellites.clone() {
                    outside -= interior_power(&geom, spec, s, &integrand)?;
                }
            }
            Ok(outside.max(0.0).powf(1.0 / q))
        }
    }
}

/// `∫_{B(ξ_a, δ/k)}` of the q-th power integrand (sharp ball).
fn interior_power(
    geom: &LatticeGeom,
    spec: &QuadratureSpec,
    atom_index: usize,
    integrand: &(dyn Fn(&Pt) -> f64 + Sync),
) -> Result<f64> {
    if atom_index >= geom.atoms.len() {
        return Err(Error::Domain(format!(
            "atom index {atom_index} outside the lattice (size {})",
            geom.atoms.len()
        )));
    }
    let params = EngineParams::from_spec(spec, 1.0);
    let atom = &geom.atoms[atom_index];
    let g = |y: &Pt, out: &mut [f64]| out[0] = integrand(y);
    let v = ball_integral_vec(
        geom.n,
        &atom.center,
        atom.scale,
        geom.bump_radius,
        &[],
        &params,
        1,
        &g,
    );
    Ok(v[0])
}

/// Result of [`sup_weighted_norm`]: the sup and where it was attained.
#[derive(Debug, Clone, Copy)]
pub struct SupNorm {
    pub value: f64,
    pub argmax: Pt,
}

/// Sup of `(1 + |y|^{n-2}) |field|` over a deterministic dense sample of
/// the fundamental domain, graded radially and refined near the cores.
pub fn sup_weighted_norm(
    field: &ScalarField,
    cfg: &ProblemConfig,
    spec: &QuadratureSpec,
) -> SupNorm {
    sup_weighted_norm_fn(|y| field.value(y), cfg, spec)
}

/// Closure variant of [`sup_weighted_norm`].
pub fn sup_weighted_norm_fn<F: Fn(&Pt) -> f64>(
    field: F,
    cfg: &ProblemConfig,
    spec: &QuadratureSpec,
) -> SupNorm {
    let n = cfg.n;
    let geom = LatticeGeom::from_config(cfg);
    let sphere = rules::SphereRule::new(n, spec.angular_nodes, 2 * spec.angular_nodes);
    let mut radii = Vec::new();
    let levels = 12 * spec.radial_nodes;
    for i in 0..=levels {
        radii.push(1e-2 * (1e5f64).powf(i as f64 / levels as f64));
    }
    let mut best = SupNorm {
        value: 0.0,
        argmax: origin(),
    };
    let mut consider = |y: &Pt| {
        let w = 1.0 + norm(y, n).powi(n as i32 - 2);
        let v = w * field(y).abs();
        if v > best.value {
            best = SupNorm {
                value: v,
                argmax: *y,
            };
        }
    };
    for &r in &radii {
        for (omega, _) in &sphere.nodes {
            let mut y = origin();
            for d in 0..n {
                y[d] = r * omega[d];
            }
            consider(&y);
        }
    }
    // Near-core refinement around each class representative.
    for class in &geom.classes {
        let atom = geom.atoms[class.rep];
        for i in 0..=40 {
            let s = 0.05 * i as f64 * geom.bump_radius / atom.scale.max(1e-12);
            for (omega, _) in sphere.nodes.iter().step_by(3) {
                let mut y = atom.center;
                for d in 0..n {
                    y[d] += atom.scale * s * omega[d];
                }
                consider(&y);
            }
        }
    }
    best
}

/// Energy `e(u) = ½∫|∇u|² - γ(n-2)/(2n) ∫ |u|^{2n/(n-2)}` of the ansatz.
pub fn energy(cfg: &ProblemConfig, spec: &QuadratureSpec) -> Result<f64> {
    let ansatz = Ansatz::from_config(cfg);
    let geom = LatticeGeom::from_config(cfg);
    energy_of(&ansatz, &geom, spec)
}

/// Energy of an arbitrary ansatz over a given geometry.
pub fn energy_of(ansatz: &Ansatz, geom: &LatticeGeom, spec: &QuadratureSpec) -> Result<f64> {
    let n = ansatz.n;
    let f = |y: &Pt, out: &mut [f64]| {
        let (u, g) = ansatz.value_grad(y);
        out[0] = crate::point::dot(&g, &g, n);
        out[1] = crate::point::abs_pow_frac(u, 2 * n as u32, (n - 2) as u32);
    };
    let (v, ext) = integrate_lattice_vec(geom, spec, 1.0, true, 2, &f);
    for c in 0..2 {
        if ext[c].abs() > 3.0 * spec.target_rel_tol * v[c].abs() {
            return Err(Error::Divergence {
                growth: ext[c].abs(),
                tol: spec.target_rel_tol,
            });
        }
    }
    let gamma = ansatz.gamma;
    Ok(0.5 * v[0] - gamma * (n as f64 - 2.0) / (2.0 * n as f64) * v[1])
}

/// Energy of the single standard bubble from a one-dimensional radial
/// rule; the reference constant of all energy studies.
pub fn single_bubble_energy(n: usize, gl: usize) -> f64 {
    let nf = n as f64;
    let w = (nf - 2.0) / 2.0;
    let gamma = nf * (nf - 2.0) / 4.0;
    let breaks: Vec<f64> = vec![0.0, 0.25, 0.5, 1.0, 1.5, 2.0];
    let nodes = radial_rule(&breaks, gl, n as i32 - 1, Some((ExteriorMap::Kelvin, 60)));
    let mut grad2 = 0.0;
    let mut upow = 0.0;
    for (r, wt) in nodes {
        let den = 1.0 + r * r;
        // |U'(r)|² and U^{2n/(n-2)}
        let du = -(nf - 2.0) * 2f64.powf(w) * r / den.powf(nf / 2.0);
        grad2 += wt * du * du;
        upow += wt * (2.0 / den).powf(nf);
    }
    let area = sphere_area(n);
    0.5 * area * grad2 - gamma * (nf - 2.0) / (2.0 * nf) * area * upow
}

/// `∫ f(|y-A|) g(|y-B|) dy` over `ℝ^n` in bipolar coordinates; the
/// workhorse of the pairwise interaction energy.
pub fn pair_integral<F, G>(n: usize, f: F, g: G, d: f64, f_scale: f64, g_scale: f64) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let ring = match n {
        3 => 2.0 * std::f64::consts::PI,
        4 => 4.0 * std::f64::consts::PI,
        5 => 2.0 * std::f64::consts::PI * std::f64::consts::PI,
        6 => 8.0 * std::f64::consts::PI * std::f64::consts::PI / 3.0,
        _ => panic!("unsupported dimension {n}"),
    };
    // Radial panels: core scale of f at 0, feature of g near r = d.
    let mut cand = vec![0.0];
    let mut x = f_scale;
    while x < 16.0 * d.max(1.0) {
        cand.push(x);
        x *= 2.0;
    }
    for m in [-4.0, -2.0, -1.0, 1.0, 2.0, 4.0] {
        cand.push(d + m * g_scale);
    }
    cand.push(d);
    let hi = 16.0 * d.max(1.0);
    let breaks = rules::clip_breaks(&cand, 0.0, hi);
    let rnodes = radial_rule(&breaks, 10, n as i32 - 1, Some((ExteriorMap::Kelvin, 50)));
    // Angular panels graded toward the g-feature at ϑ = 0.
    let wfeat = (g_scale / d.max(1e-12)).min(0.5);
    let mut tcand = vec![0.0, std::f64::consts::PI];
    let mut t = wfeat;
    while t < std::f64::consts::PI {
        tcand.push(t);
        t *= 2.0;
    }
    tcand.push(std::f64::consts::PI / 2.0);
    let tbreaks = rules::clip_breaks(&tcand, 0.0, std::f64::consts::PI);
    let tnodes = radial_rule(&tbreaks, 8, 0, None);
    let mut acc = rules::Acc::new();
    for &(r, wr) in &rnodes {
        let fr = f(r);
        if fr == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for &(th, wt) in &tnodes {
            let s = (r * r + d * d - 2.0 * r * d * th.cos()).sqrt();
            inner += wt * th.sin().powi(n as i32 - 2) * g(s);
        }
        acc.add(wr * fr * inner);
    }
    ring * acc.total()
}

/// Deflated energy route: `e(u) = (2k+1) e(U) + γ/2 Σ_{a≠b} s_a s_b P_ab
/// - γ(n-2)/(2n) G`, with `P_ab = ∫ U_a^p U_b` from two-dimensional
/// bipolar quadrature and `G = ∫ (|u|^{2n/(n-2)} - Σ_a U_a^{2n/(n-2)})`.
///
/// The `(2k+1) e(U)` bulk never enters a quadrature, so the returned value
/// resolves the interaction terms far below the bulk magnitude.
pub fn energy_interaction(cfg: &ProblemConfig, spec: &QuadratureSpec) -> Result<f64> {
    let ansatz = Ansatz::from_config(cfg);
    let geom = LatticeGeom::from_config(cfg);
    let n = cfg.n;
    let atoms = &ansatz.atoms;
    // Pairwise gradient interactions via ∫∇U_a·∇U_b = γ ∫ U_a^p U_b,
    // localizing the p-power at the more concentrated atom. Distinct
    // (scale, scale, distance) triples are cached.
    let mut cache: std::collections::BTreeMap<(u64, u64, u64), f64> = Default::default();
    let mut pair_sum = 0.0;
    for a in 0..atoms.len() {
        for b in (a + 1)..atoms.len() {
            let (fst, snd) = if atoms[a].scale <= atoms[b].scale {
                (a, b)
            } else {
                (b, a)
            };
            let d = dist2(&atoms[fst].center, &atoms[snd].center, n).sqrt();
            let key = (
                atoms[fst].scale.to_bits(),
                atoms[snd].scale.to_bits(),
                (d * 1e12).round() as u64,
            );
            let val = *cache.entry(key).or_insert_with(|| {
                let la = atoms[fst].scale;
                let lb = atoms[snd].scale;
                let wpow = (n as f64 - 2.0) / 2.0;
                let f = move |r: f64| (2.0 * la / (la * la + r * r)).powf(wpow + 2.0);
                let g = move |s: f64| (2.0 * lb / (lb * lb + s * s)).powf(wpow);
                pair_integral(n, f, g, d, la, lb)
            });
            pair_sum += 2.0 * atoms[a].sign * atoms[b].sign * val;
        }
    }
    // Nonlinear interaction G.
    let crit_num = 2 * n as u32;
    let crit_den = (n - 2) as u32;
    let g_int = |y: &Pt| -> f64 {
        let mut u = 0.0;
        let mut powsum = 0.0;
        for a in atoms {
            let v = atom_value(n, y, a.scale, &a.center);
            u += a.sign * v;
            powsum += crate::point::abs_pow_frac(v, crit_num, crit_den);
        }
        crate::point::abs_pow_frac(u, crit_num, crit_den) - powsum
    };
    let (g_val, _) = scalar(&geom, spec, 1.0, true, &g_int);
    let a_n = single_bubble_energy(n, 24);
    let bulk = (atoms.len()) as f64 * a_n;
    Ok(bulk + 0.5 * cfg.gamma * pair_sum - cfg.gamma * (n as f64 - 2.0) / (2.0 * n as f64) * g_val)
}

/// Both projections of the error onto a rescaled kernel element.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    /// `∫_{ℝ^n} E · Z̄_α`.
    pub full: f64,
    /// `∫ ζ̄ E · Z̄_α` (cutoff-localized).
    pub localized: f64,
}

/// Projects the error field onto `Z̄_α` anchored at the given satellite.
pub fn project_on_kernel(
    cfg: &ProblemConfig,
    atom_index: usize,
    alpha: usize,
    spec: &QuadratureSpec,
) -> Result<Projection> {
    let ansatz = Ansatz::from_config(cfg);
    project_field_on_kernel(cfg, &ansatz, |y| ansatz.error(y), atom_index, alpha, spec)
}

/// Generic projection of an arbitrary field (linearity and sign tests).
pub fn project_field_on_kernel<F: Fn(&Pt) -> f64 + Sync>(
    cfg: &ProblemConfig,
    ansatz: &Ansatz,
    field: F,
    atom_index: usize,
    alpha: usize,
    spec: &QuadratureSpec,
) -> Result<Projection> {
    let n = cfg.n;
    if alpha != 3 && alpha != n + 1 {
        return Err(Error::Domain(format!(
            "projection kernel index alpha = {alpha} must be 3 or n+1 = {}",
            n + 1
        )));
    }
    if atom_index == 0 || atom_index >= ansatz.atoms.len() {
        return Err(Error::Domain(format!(
            "projection anchor {atom_index} is not a satellite"
        )));
    }
    let geom = LatticeGeom::from_config(cfg);
    let anchor = ansatz.atoms[atom_index];
    let zbar = |y: &Pt| -> f64 {
        crate::bubble::scaled_kernel_z(n, alpha, &anchor.center, anchor.scale, y)
            .expect("alpha validated")
    };
    let r1 = geom.bump_radius;

    // Localized: the cutoff has support in B(ξ, 2δ/k).
    let params = EngineParams::from_spec(spec, 1.0);
    let loc_f = |y: &Pt, out: &mut [f64]| {
        out[0] = cutoff_at(cfg, &anchor.center, y) * field(y) * zbar(y);
    };
    let localized = ball_integral_vec(
        n,
        &anchor.center,
        anchor.scale,
        2.0 * r1,
        &[r1],
        &params,
        1,
        &loc_f,
    )[0];

    // Full space: Z̄ breaks the lattice symmetry, so integrate all balls
    // explicitly and the far region over the full wedge orbit; a reduced
    // node budget keeps this tractable (the far share of the projection is
    // small).
    let scale = if n >= 4 { 0.45 } else { 0.8 };
    let g = |y: &Pt, out: &mut [f64]| out[0] = field(y) * zbar(y);
    let (v, _) = integrate_lattice_vec(&geom, spec, scale, false, 1, &g);
    Ok(Projection {
        full: v[0],
        localized,
    })
}

/// Outcome of [`refine_until`].
#[derive(Debug, Clone, Copy)]
pub struct Refined {
    pub value: f64,
    pub achieved_tol: f64,
    pub doublings: usize,
}

/// Doubles all node counts until two successive values agree to `rel_tol`
/// (relative to the last value, absolute floor `1e-300`), or errors with
/// both values when the budget (4 doublings) is exhausted.
pub fn refine_until<T: Fn(&QuadratureSpec) -> Result<f64>>(
    spec: &QuadratureSpec,
    thunk: T,
    rel_tol: f64,
) -> Result<Refined> {
    if rel_tol <= 0.0 {
        return Err(Error::Domain(format!("rel_tol = {rel_tol} must be > 0")));
    }
    const BUDGET: usize = 4;
    let mut prev = thunk(spec)?;
    let mut factor = 2.0;
    for step in 1..=BUDGET {
        let value = thunk(&spec.scaled(factor))?;
        let achieved = (value - prev).abs() / value.abs().max(1e-300);
        if achieved < rel_tol {
            return Ok(Refined {
                value,
                achieved_tol: achieved,
                doublings: step,
            });
        }
        if step == BUDGET {
            return Err(Error::ToleranceNotMet {
                last: value,
                previous: prev,
            });
        }
        prev = value;
        factor *= 2.0;
    }
    unreachable!()
}

#[cfg(test)]
mod tests;
