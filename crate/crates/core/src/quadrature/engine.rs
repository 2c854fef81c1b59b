//! Integration domains: near-core balls in bubble-scaled polar
//! coordinates, the wedge of the fundamental domain with localized fine
//! boxes, and inversion-mapped radial tails.

use super::geom::{direction, LatticeGeom};
use super::rules::{clip_breaks, compensated_fold, dyadic_breaks, gauss_legendre, SphereRule};
use super::{ExteriorMap, QuadratureSpec};
use crate::point::{origin, Pt};
use rayon::prelude::*;

/// Node-count bundle actually used by the integrators, derived from a
/// [`QuadratureSpec`] and a context-dependent scale.
#[derive(Debug, Clone)]
pub struct EngineParams {
    pub near_gl: usize,
    pub radial_gl: usize,
    pub angular_gl: usize,
    pub box_gl: usize,
    pub box_panels: usize,
    pub sphere_polar: usize,
    pub sphere_theta: usize,
    pub tail_octaves: usize,
    pub map: ExteriorMap,
}

impl EngineParams {
    pub fn from_spec(spec: &QuadratureSpec, scale: f64) -> Self {
        let s = |base: usize, lo: usize| ((base as f64 * scale).round() as usize).max(lo);
        let radial_gl = s(spec.radial_nodes, 3);
        EngineParams {
            near_gl: s(spec.near_bubble_nodes, 4),
            radial_gl,
            angular_gl: s(spec.angular_nodes, 3),
            box_gl: s(spec.angular_nodes, 3),
            box_panels: s(4, 2),
            sphere_polar: s(spec.angular_nodes, 4),
            sphere_theta: 2 * s(spec.angular_nodes, 4),
            // Deepening the tail with the radial budget makes borderline
            // (non-integrable) tails visible to refinement checks.
            tail_octaves: 8 + radial_gl / 4,
            map: spec.exterior_map,
        }
    }
}

/// Vector-valued integrand: writes the integrand components at `y`.
pub type VecIntegrand<'a> = &'a (dyn Fn(&Pt, &mut [f64]) + Sync);

/// Integral over the ball `B(center, radius)` in `λ`-scaled polar
/// coordinates, with dyadic radial panels pinned at `extra_breaks`.
pub fn ball_integral_vec(
    n: usize,
    center: &Pt,
    lam: f64,
    radius: f64,
    extra_breaks: &[f64],
    params: &EngineParams,
    dim: usize,
    f: VecIntegrand,
) -> Vec<f64> {
    let s_max = radius / lam;
    let mut cand = dyadic_breaks(1.0, s_max);
    for &b in extra_breaks {
        cand.push(b / lam);
    }
    let breaks = clip_breaks(&cand, 0.0, s_max);
    let sphere = SphereRule::new(n, params.sphere_polar, params.sphere_theta);
    let (gx, gw) = gauss_legendre(params.near_gl);
    let lam_n = lam.powi(n as i32);

    let panels: Vec<(f64, f64)> = breaks.windows(2).map(|p| (p[0], p[1])).collect();
    let partials: Vec<Vec<f64>> = panels
        .par_iter()
        .map(|&(a, b)| {
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut acc = vec![0.0; dim];
            let mut tmp = vec![0.0; dim];
            let mut pair = vec![0.0; dim];
            for i in 0..params.near_gl {
                let s = mid + half * gx[i];
                let wr = half * gw[i] * s.powi(n as i32 - 1) * lam_n;
                // Mirror pairs of the sphere rule are adjacent; sum each
                // pair first so odd parts cancel at node level.
                for nodes in sphere.nodes.chunks(2) {
                    for v in pair.iter_mut() {
                        *v = 0.0;
                    }
                    for (omega, w_omega) in nodes {
                        let mut y = *center;
                        for d in 0..n {
                            y[d] += lam * s * omega[d];
                        }
                        f(&y, &mut tmp);
                        for c in 0..dim {
                            pair[c] += w_omega * tmp[c];
                        }
                    }
                    for c in 0..dim {
                        acc[c] += wr * pair[c];
                    }
                }
            }
            acc
        })
        .collect();
    fold_components(&partials, dim)
}

fn fold_components(partials: &[Vec<f64>], dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|c| {
            let col: Vec<f64> = partials.iter().map(|p| p[c]).collect();
            compensated_fold(&col)
        })
        .collect()
}

/// Radial nodes `(r, w)` with `w` carrying `r^{rpow}` and any tail-map
/// jacobian. `tail = true` appends inversion-mapped panels covering
/// `r > breaks.last()`.
pub fn radial_rule(
    breaks: &[f64],
    gl: usize,
    rpow: i32,
    tail: Option<(ExteriorMap, usize)>,
    ) -> Vec<(f64, f64)> {
    let (gx, gw) = gauss_legendre(gl);
    let mut out = Vec::new();
    for p in breaks.windows(2) {
        let (a, b) = (p[0], p[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for i in 0..gl {
            let r = mid + half * gx[i];
            out.push((r, half * gw[i] * r.powi(rpow)));
        }
    }
    if let Some((map, octaves)) = tail {
        let r_edge = *breaks.last().unwrap();
        out.extend(tail_nodes(r_edge, map, octaves, 0, gl, rpow));
    }
    out
}

/// Inversion-mapped tail nodes covering `r > r_edge`, octaves
/// `skip..skip+count` counted from the edge.
pub fn tail_nodes(
    r_edge: f64,
    map: ExteriorMap,
    count: usize,
    skip: usize,
    gl: usize,
    rpow: i32,
) -> Vec<(f64, f64)> {
    let (gx, gw) = gauss_legendre(gl);
    let mut out = Vec::new();
    // Substitution u = r_edge / r, u ∈ (0, 1): r = r_edge/u,
    // r^rpow dr = r_edge^{rpow+1} u^{-(rpow+2)} du. The two exterior maps
    // share this form; they differ only in panel grading.
    let per_octave = match map {
        ExteriorMap::Kelvin => 1usize,
        ExteriorMap::RadialCompactify => 2usize,
    };
    for oct in skip..skip + count {
        let hi = 0.5f64.powi(oct as i32);
        let lo = 0.5 * hi;
        for sub in 0..per_octave {
            let w = (hi - lo) / per_octave as f64;
            let a = lo + sub as f64 * w;
            let b = a + w;
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for i in 0..gl {
                let u = mid + half * gx[i];
                let r = r_edge / u;
                let jac = r_edge.powi(rpow + 1) * u.powi(-(rpow + 2));
                out.push((r, half * gw[i] * jac));
            }
        }
    }
    out
}

/// How the wedge integral treats the symmetry group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarMode {
    /// Integrand is invariant: integrate the fundamental domain and
    /// multiply by the orbit count.
    Fundamental,
    /// Integrate all group images of the fundamental domain explicitly.
    Full,
}

pub struct FarResult {
    pub value: Vec<f64>,
    /// Contribution of two extra tail octaves; a divergence telltale.
    pub tail_extension: Vec<f64>,
}

#[derive(Clone)]
struct Cell {
    /// Radial panel; `tail_octave = Some(o)` marks a mapped panel.
    r: (f64, f64),
    tail_octave: Option<usize>,
    /// One arc-angle interval per polar level (within `[0, π/2]`); the
    /// level coordinate is `cos χ` and the measure `sin^{L+1}χ dχ`.
    chi: Vec<(f64, f64)>,
    sigma: (f64, f64),
    fine: bool,
    tail_extension: bool,
}

/// Two-pass wedge integral over `ℝ^n` minus nothing: the caller's
/// integrand decides what vanishes near the cores (usually via
/// `geom.far_factor`). Pass one covers the wedge with coarse panels,
/// skipping the feature boxes; pass two covers each feature box with a
/// fine grid. Tail octaves use the spec's exterior map.
pub fn far_integral_vec(
    geom: &LatticeGeom,
    params: &EngineParams,
    mode: FarMode,
    dim: usize,
    f: VecIntegrand,
) -> FarResult {
    let cells = build_cells(geom, params);
    let partials: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|cell| cell_value(cell, geom, params, mode, dim, f))
        .collect();
    let mult = match mode {
        FarMode::Fundamental => geom.fd_multiplicity(),
        FarMode::Full => 1.0,
    };
    let main: Vec<Vec<f64>> = cells
        .iter()
        .zip(&partials)
        .filter(|(c, _)| !c.tail_extension)
        .map(|(_, p)| p.clone())
        .collect();
    let ext: Vec<Vec<f64>> = cells
        .iter()
        .zip(&partials)
        .filter(|(c, _)| c.tail_extension)
        .map(|(_, p)| p.clone())
        .collect();
    let mut value = fold_components(&main, dim);
    let mut tail_extension = fold_components(&ext, dim);
    for v in value.iter_mut() {
        *v *= mult;
    }
    for v in tail_extension.iter_mut() {
        *v *= mult;
    }
    FarResult {
        value,
        tail_extension,
    }
}

fn build_cells(geom: &LatticeGeom, params: &EngineParams) -> Vec<Cell> {
    let n = geom.n;
    // Radial breaks: a coarse base plus every box edge.
    let mut rb = vec![0.0, 0.25, 0.5, 0.75, 0.9, 1.0, 1.12, 1.3, 1.6, 2.0];
    for b in &geom.boxes {
        rb.push(b.r.0);
        rb.push(b.r.1);
    }
    let rbreaks = clip_breaks(&rb, 0.0, 2.0);
    // Arc-angle breaks per polar level.
    let half_pi = 0.5 * std::f64::consts::PI;
    let mut cbreaks: Vec<Vec<f64>> = Vec::new();
    for level in 0..n - 2 {
        let mut cb = vec![0.0, 0.25 * half_pi, 0.5 * half_pi, 0.75 * half_pi, half_pi];
        for b in &geom.boxes {
            cb.push(b.chi[level].0);
            cb.push(b.chi[level].1);
        }
        cbreaks.push(clip_breaks(&cb, 0.0, half_pi));
    }
    let mut sb = vec![0.0, 0.2, 0.45, 0.7, 1.0];
    for b in &geom.boxes {
        sb.push(b.sigma.0);
        sb.push(b.sigma.1);
    }
    let sbreaks = clip_breaks(&sb, 0.0, 1.0);

    let mut cells = Vec::new();
    let rpanels: Vec<(f64, f64)> = rbreaks.windows(2).map(|p| (p[0], p[1])).collect();
    let spanels: Vec<(f64, f64)> = sbreaks.windows(2).map(|p| (p[0], p[1])).collect();
    let cpanels: Vec<Vec<(f64, f64)>> = cbreaks
        .iter()
        .map(|b| b.windows(2).map(|p| (p[0], p[1])).collect())
        .collect();

    // Pass one: coarse cells, skipping those inside a feature box.
    let mut stack = vec![Vec::<(f64, f64)>::new()];
    for level in 0..n - 2 {
        let mut next = Vec::new();
        for prefix in &stack {
            for &cp in &cpanels[level] {
                let mut p = prefix.clone();
                p.push(cp);
                next.push(p);
            }
        }
        stack = next;
    }
    for &rp in &rpanels {
        for cvec in &stack {
            for &sp in &spanels {
                let inside = geom.boxes.iter().any(|b| {
                    within(rp, b.r)
                        && within(sp, b.sigma)
                        && cvec.iter().zip(&b.chi).all(|(cp, bc)| within(*cp, *bc))
                });
                if inside {
                    continue;
                }
                cells.push(Cell {
                    r: rp,
                    tail_octave: None,
                    chi: cvec.clone(),
                    sigma: sp,
                    fine: false,
                    tail_extension: false,
                });
            }
        }
    }
    // Pass two: fine grids inside each box.
    for b in &geom.boxes {
        let rfine = split((b.r.0.max(0.0), b.r.1.min(2.0)), params.box_panels);
        let sfine = split(
            (b.sigma.0.max(0.0), b.sigma.1.min(1.0)),
            params.box_panels,
        );
        let mut cfine: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for level in 0..n - 2 {
            let pieces = split(
                (b.chi[level].0.max(0.0), b.chi[level].1.min(half_pi)),
                params.box_panels,
            );
            let mut next = Vec::new();
            for prefix in &cfine {
                for &piece in &pieces {
                    let mut p = prefix.clone();
                    p.push(piece);
                    next.push(p);
                }
            }
            cfine = next;
        }
        for &rp in &rfine {
            for cvec in &cfine {
                for &sp in &sfine {
                    cells.push(Cell {
                        r: rp,
                        tail_octave: None,
                        chi: cvec.clone(),
                        sigma: sp,
                        fine: true,
                        tail_extension: false,
                    });
                }
            }
        }
    }
    // Tail cells: mapped octaves beyond r = 2, one cell per octave over the
    // whole coarse angular grid; plus the two-octave extension telltale.
    for oct in 0..params.tail_octaves + 2 {
        let ext = oct >= params.tail_octaves;
        for cvec in &stack {
            for &sp in &spanels {
                cells.push(Cell {
                    r: (2.0, f64::INFINITY),
                    tail_octave: Some(oct),
                    chi: cvec.clone(),
                    sigma: sp,
                    fine: false,
                    tail_extension: ext,
                });
            }
        }
    }
    cells
}

fn within(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 >= b.0 - 1e-13 && a.1 <= b.1 + 1e-13
}

fn split(range: (f64, f64), pieces: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(pieces);
    if range.1 <= range.0 {
        return out;
    }
    let h = (range.1 - range.0) / pieces as f64;
    for i in 0..pieces {
        let a = range.0 + i as f64 * h;
        out.push((a, if i + 1 == pieces { range.1 } else { a + h }));
    }
    out
}

fn cell_value(
    cell: &Cell,
    geom: &LatticeGeom,
    params: &EngineParams,
    mode: FarMode,
    dim: usize,
    f: VecIntegrand,
) -> Vec<f64> {
    let n = geom.n;
    let k = geom.k as f64;
    let gl = if cell.fine { params.box_gl } else { params.angular_gl };
    let rgl = if cell.fine { params.box_gl } else { params.radial_gl };

    // Radial nodes for this cell.
    let rnodes: Vec<(f64, f64)> = match cell.tail_octave {
        None => radial_rule(&[cell.r.0, cell.r.1], rgl, n as i32 - 1, None),
        Some(oct) => tail_nodes(2.0, params.map, 1, oct, rgl, n as i32 - 1),
    };
    // Angular nodes per level in the arc variable χ (coordinate cos χ),
    // measure sin^{level+1}(χ) dχ — smooth at both poles.
    let (gx, gw) = gauss_legendre(gl);
    let cnodes: Vec<Vec<(f64, f64)>> = (0..n - 2)
        .map(|level| {
            let (a, b) = cell.chi[level];
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            (0..gl)
                .map(|i| {
                    let chi = mid + half * gx[i];
                    let w = half * gw[i] * chi.sin().powi(level as i32 + 1);
                    (chi.cos(), w)
                })
                .collect()
        })
        .collect();
    let snodes: Vec<(f64, f64)> = {
        let (a, b) = cell.sigma;
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        (0..gl)
            .map(|i| {
                let s = mid + half * gx[i];
                (s, half * gw[i] * std::f64::consts::PI / k)
            })
            .collect()
    };

    // Odometer over radial × levels × sigma.
    let mut counts = vec![rnodes.len()];
    counts.extend(cnodes.iter().map(|v| v.len()));
    counts.push(snodes.len());
    let total: usize = counts.iter().product();

    let mut acc = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut cs = vec![0.0; n - 2];
    for flat in 0..total {
        let mut rest = flat;
        let ri = rest % counts[0];
        rest /= counts[0];
        let (r, wr) = rnodes[ri];
        let mut w = wr;
        for level in 0..n - 2 {
            let ci = rest % counts[1 + level];
            rest /= counts[1 + level];
            let (c, wc) = cnodes[level][ci];
            cs[level] = c;
            w *= wc;
        }
        let (sig, wsig) = snodes[rest];
        w *= wsig;
        let theta = sig * std::f64::consts::PI / k;

        match mode {
            FarMode::Fundamental => {
                let omega = direction(n, &cs, theta);
                let mut y = origin();
                for d in 0..n {
                    y[d] = r * omega[d];
                }
                f(&y, &mut tmp);
                for c in 0..dim {
                    acc[c] += w * tmp[c];
                }
            }
            FarMode::Full => {
                // levels[L] = coordinate y_{3+L} of the unit direction;
                // srho is the planar magnitude left after all polar levels.
                let mut levels = vec![0.0; n - 2];
                let mut outer = 1.0;
                for l in (0..n - 2).rev() {
                    levels[l] = outer * cs[l];
                    outer *= (1.0 - cs[l] * cs[l]).sqrt();
                }
                let srho = outer;
                // Group images: rotations × y₂ flip × sign flips of the
                // outer levels, with the y₃ flip innermost so that mirror
                // evaluations are added consecutively.
                let outer_masks = 1usize << (n - 3);
                for j in 0..geom.k {
                    let base = 2.0 * std::f64::consts::PI * j as f64 / geom.k as f64;
                    for refl in 0..2usize {
                        let th = if refl == 0 { base + theta } else { base - theta };
                        let (ct, st) = (th.cos(), th.sin());
                        for mask in 0..outer_masks {
                            for s3 in [1.0f64, -1.0] {
                                let mut y = origin();
                                y[0] = r * srho * ct;
                                y[1] = r * srho * st;
                                y[2] = r * s3 * levels[0];
                                for l in 1..n - 2 {
                                    let sgn = if mask >> (l - 1) & 1 == 1 { -1.0 } else { 1.0 };
                                    y[2 + l] = r * sgn * levels[l];
                                }
                                f(&y, &mut tmp);
                                for c in 0..dim {
                                    acc[c] += w * tmp[c];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    acc
}

/// Deterministic rank-1 lattice over a tangent-mapped cube; the fallback
/// far-region rule for `n ≥ 5` (tripled tolerance by contract).
pub fn lattice_far_vec(
    geom: &LatticeGeom,
    spec: &QuadratureSpec,
    dim: usize,
    f: VecIntegrand,
) -> Vec<f64> {
    let n = geom.n;
    let points = (spec.radial_nodes * spec.angular_nodes * 600).next_power_of_two();
    // Korobov generator from the seed.
    let a = odd_from_seed(spec.seed);
    let mut gen = vec![1u64; n];
    for d in 1..n {
        gen[d] = gen[d - 1].wrapping_mul(a) % points as u64;
    }
    let scale = 1.2f64;
    let block = 4096u64;
    let nblocks = (points as u64).div_ceil(block);
    let parts: Vec<Vec<f64>> = (0..nblocks)
        .into_par_iter()
        .map(|blk| {
            let mut acc = vec![0.0; dim];
            let mut tmp = vec![0.0; dim];
            for i in blk * block..((blk + 1) * block).min(points as u64) {
                let mut y = origin();
                let mut jac = 1.0;
                for d in 0..n {
                    let u = ((i.wrapping_mul(gen[d]) % points as u64) as f64 + 0.5)
                        / points as f64;
                    let t = std::f64::consts::PI * (u - 0.5);
                    y[d] = scale * t.tan();
                    let c = t.cos();
                    jac *= scale * std::f64::consts::PI / (c * c);
                }
                f(&y, &mut tmp);
                for cidx in 0..dim {
                    acc[cidx] += jac * tmp[cidx] / points as f64;
                }
            }
            acc
        })
        .collect();
    fold_components(&parts, dim)
}

fn odd_from_seed(seed: u64) -> u64 {
    (seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407) | 1) % 0xFFFF | 0x101
}
