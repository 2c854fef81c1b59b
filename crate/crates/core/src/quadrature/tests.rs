use super::engine::{ball_integral_vec, EngineParams};
use super::geom::LatticeGeom;
use super::rules::sphere_area;
use super::*;
use crate::bubble::Ansatz;
use crate::config::{build_config, Pattern};
use crate::point::{abs_pow_frac, half_pow, pt};

fn cfg(n: usize, k: usize) -> ProblemConfig {
    let q = if n == 3 { 2.0 } else { 2.5 };
    build_config(n, k, Pattern::Double, &[1.0], &[1.0], q, 0.1).unwrap()
}

/// Smooth radial profile: 1 inside r=0.5, 0 outside r=1.
fn smoothed_ball(r: f64) -> f64 {
    geom::bump(2.0 * r)
}

#[test]
fn ball_integral_volume() {
    let params = EngineParams::from_spec(&QuadratureSpec::default(), 1.0);
    for n in 3..=4 {
        let one = |_: &Pt, out: &mut [f64]| out[0] = 1.0;
        let v = ball_integral_vec(n, &origin(), 0.01, 0.35, &[], &params, 1, &one)[0];
        let want = sphere_area(n) / n as f64 * 0.35f64.powi(n as i32);
        assert!((v - want).abs() < 1e-10 * want, "n={n}: {v} vs {want}");
    }
}

#[test]
fn lattice_decomposition_reproduces_gaussian() {
    // Balls + wedge + tail must reassemble a plain integral: ∫ e^{-r²} =
    // π^{n/2}, with the lattice decomposition of a k = 4 configuration.
    let spec = QuadratureSpec::default();
    for n in 3..=4 {
        let c = cfg(n, 4);
        let geom = LatticeGeom::from_config(&c);
        let f = |y: &Pt, out: &mut [f64]| out[0] = (-crate::point::norm2(y, n)).exp();
        let want = std::f64::consts::PI.powf(n as f64 / 2.0);
        for symmetric in [true, false] {
            let (v, _) = integrate_lattice_vec(&geom, &spec, 1.0, symmetric, 1, &f);
            assert!(
                (v[0] - want).abs() < 2e-6 * want,
                "n={n} sym={symmetric}: {} vs {want}",
                v[0]
            );
        }
    }
}

#[test]
fn single_geometry_full_integral() {
    let spec = QuadratureSpec::default();
    for n in 3..=4 {
        let geom = LatticeGeom::single(n);
        let f = |y: &Pt, out: &mut [f64]| out[0] = (-crate::point::norm2(y, n)).exp();
        let (v, _) = integrate_lattice_vec(&geom, &spec, 1.0, false, 1, &f);
        let want = std::f64::consts::PI.powf(n as f64 / 2.0);
        assert!((v[0] - want).abs() < 1e-7 * want, "n={n}: {} vs {want}", v[0]);
    }
}

#[test]
fn weighted_norm_matches_radial_oracle() {
    // Field chosen so the weighted integrand is the smoothed ball: the
    // norm reduces to a one-dimensional radial integral.
    let c = cfg(3, 8);
    let q = c.q;
    let wexp = 3.0 + 2.0 - 2.0 * 3.0 / q;
    let field = |y: &Pt| smoothed_ball(norm(y, 3)) * (1.0 + norm(y, 3)).powf(-wexp);
    let spec = QuadratureSpec::default();
    let got = weighted_lq_norm_fn(field, q, &c, &spec, Region::All, true).unwrap();
    // 1-D oracle.
    let nodes = radial_rule(&[0.0, 0.25, 0.5, 0.75, 1.0], 40, 2, None);
    let oracle: f64 = nodes
        .iter()
        .map(|&(r, w)| w * smoothed_ball(r).powf(q))
        .sum::<f64>()
        * sphere_area(3);
    let oracle = oracle.powf(1.0 / q);
    assert!(
        (got - oracle).abs() < 1e-3 * oracle,
        "{got} vs oracle {oracle}"
    );
}

#[test]
fn weighted_norm_regions_are_monotone() {
    let c = cfg(4, 8);
    let spec = QuadratureSpec::default();
    let err = ScalarField::Error(Ansatz::from_config(&c));
    let all = weighted_lq_norm(&err, c.q, &c, &spec, Region::All).unwrap();
    let int = weighted_lq_norm(&err, c.q, &c, &spec, Region::Interior(1)).unwrap();
    let ext = weighted_lq_norm(&err, c.q, &c, &spec, Region::Exterior).unwrap();
    assert!(all >= int && all >= ext);
    // Disjoint decomposition: all^q = ext^q + 2k · int^q (class symmetry).
    let lhs = all.powf(c.q);
    let rhs = ext.powf(c.q) + 16.0 * int.powf(c.q);
    assert!((lhs - rhs).abs() < 2.0 * spec.target_rel_tol * lhs, "{lhs} vs {rhs}");
}

#[test]
fn weighted_norm_detects_divergence() {
    // (w |f|)^q ~ (1+r)^{-3} in n=3 is a log-divergent tail.
    let c = cfg(3, 4);
    let q = 2.0;
    let wexp = 3.0 + 2.0 - 2.0 * 3.0 / q;
    let field = move |y: &Pt| (1.0 + norm(y, 3)).powf(-1.5 - wexp);
    let spec = QuadratureSpec::default();
    let err = weighted_lq_norm_fn(field, q, &c, &spec, Region::All, true).unwrap_err();
    assert!(matches!(err, Error::Divergence { .. }), "{err}");
}

#[test]
fn fundamental_domain_matches_full_on_symmetric_integrand() {
    let c = cfg(3, 4);
    let spec = QuadratureSpec::default();
    let geom = LatticeGeom::from_config(&c);
    let ansatz = Ansatz::from_config(&c);
    let q = c.q;
    let f = |y: &Pt, out: &mut [f64]| {
        let w = (1.0 + norm(y, 3)).powf(3.0 + 2.0 - 6.0 / q);
        out[0] = (w * ansatz.error(y).abs()).powf(q);
    };
    let (fd, _) = integrate_lattice_vec(&geom, &spec, 1.0, true, 1, &f);
    let (full, _) = integrate_lattice_vec(&geom, &spec, 1.0, false, 1, &f);
    assert!(
        (fd[0] - full[0]).abs() < 2.0 * spec.target_rel_tol * full[0].abs(),
        "fd {} vs full {}",
        fd[0],
        full[0]
    );
}

#[test]
fn quadrature_is_bitwise_deterministic() {
    let c = cfg(4, 8);
    let spec = QuadratureSpec::default();
    let err = ScalarField::Error(Ansatz::from_config(&c));
    let a = weighted_lq_norm(&err, c.q, &c, &spec, Region::All).unwrap();
    let b = weighted_lq_norm(&err, c.q, &c, &spec, Region::All).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    // Independent of the worker count.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let c1 = pool.install(|| weighted_lq_norm(&err, c.q, &c, &spec, Region::All).unwrap());
    assert_eq!(a.to_bits(), c1.to_bits());
}

#[test]
fn sup_norm_of_bubble_matches_radial_scan() {
    let spec = QuadratureSpec::default();
    for n in 3..=4 {
        let c = cfg(n, 4);
        let field = ScalarField::Bubble {
            n,
            atom: crate::config::BubbleAtom {
                sign: 1.0,
                center: origin(),
                scale: 1.0,
            },
        };
        let sup = sup_weighted_norm(&field, &c, &spec);
        // Radial scan oracle.
        let mut oracle: f64 = 0.0;
        for i in 0..200000 {
            let r = 1e-2 * (1e5f64).powf(i as f64 / 199999.0);
            let u = half_pow(2.0 / (1.0 + r * r), (n - 2) as u32);
            oracle = oracle.max((1.0 + r.powi(n as i32 - 2)) * u);
        }
        assert!(
            (sup.value - oracle).abs() < 1e-3 * oracle,
            "n={n}: {} vs {oracle}",
            sup.value
        );
        if n == 3 {
            // Max of (1+r)·sqrt(2/(1+r²)) is 2 at r = 1.
            assert!((sup.value - 2.0).abs() < 1e-3);
            assert!((norm(&sup.argmax, 3) - 1.0).abs() < 2e-2);
        }
    }
}

#[test]
fn sup_norm_zero_and_homogeneous() {
    let c = cfg(3, 4);
    let spec = QuadratureSpec::default();
    let zero = sup_weighted_norm_fn(|_| 0.0, &c, &spec);
    assert_eq!(zero.value, 0.0);
    let f = |y: &Pt| 1.0 / (1.0 + norm(y, 3).powi(2));
    let one = sup_weighted_norm_fn(f, &c, &spec);
    let three = sup_weighted_norm_fn(|y| -3.0 * f(y), &c, &spec);
    assert!((three.value - 3.0 * one.value).abs() < 1e-12 * one.value);
}

#[test]
fn single_bubble_energy_reference() {
    // e(U) = π²/2 at n=3 and 4π²/3 at n=4.
    let a3 = single_bubble_energy(3, 24);
    assert!((a3 - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-9);
    let a4 = single_bubble_energy(4, 24);
    assert!((a4 - 4.0 * std::f64::consts::PI.powi(2) / 3.0).abs() < 1e-9);
}

#[test]
fn energy_of_single_bubble_self_consistent() {
    let spec = QuadratureSpec::default();
    for n in 3..=4 {
        let single = Ansatz::single_bubble(n);
        let geom = LatticeGeom::single(n);
        let e1 = energy_of(&single, &geom, &spec).unwrap();
        let e2 = energy_of(&single, &geom, &spec.scaled(2.0)).unwrap();
        let oracle = single_bubble_energy(n, 30);
        assert!((e1 - e2).abs() < 1e-3 * e2.abs(), "n={n}");
        assert!((e2 - oracle).abs() < 1e-4 * oracle.abs(), "n={n}: {e2} vs {oracle}");
    }
}

#[test]
fn energy_invariant_under_atom_relabeling() {
    let c = cfg(4, 4);
    let spec = QuadratureSpec::default();
    let e1 = energy(&c, &spec).unwrap();
    let mut ansatz = Ansatz::from_config(&c);
    let geom = LatticeGeom::from_config(&c);
    ansatz.atoms[1..].reverse();
    let e2 = energy_of(&ansatz, &geom, &spec).unwrap();
    assert!((e1 - e2).abs() <= 1e-11 * e1.abs(), "{e1} vs {e2}");
}

#[test]
fn pair_integral_matches_direct_quadrature() {
    // ∫ U^p(y) U(y - d e₁) dy at n=3 against the generic lattice
    // integrator.
    let n = 3;
    let d = 0.8;
    let w = 0.5;
    let f = move |r: f64| (2.0 / (1.0 + r * r)).powf(w + 2.0);
    let g = move |s: f64| (2.0 / (1.0 + s * s)).powf(w);
    let got = pair_integral(n, f, g, d, 1.0, 1.0);
    let geom = LatticeGeom::single(n);
    let spec = QuadratureSpec::default().scaled(1.5);
    let shifted = pt(&[d]);
    let direct = |y: &Pt, out: &mut [f64]| {
        let r = norm(y, n);
        let s = crate::point::dist2(y, &shifted, n).sqrt();
        out[0] = (2.0 / (1.0 + r * r)).powf(w + 2.0) * (2.0 / (1.0 + s * s)).powf(w);
    };
    let (v, _) = integrate_lattice_vec(&geom, &spec, 1.0, false, 1, &direct);
    assert!(
        (got - v[0]).abs() < 2e-4 * v[0].abs(),
        "bipolar {got} vs direct {}",
        v[0]
    );
}

#[test]
fn projection_sign_flip_is_exact() {
    let c = cfg(4, 6);
    let spec = QuadratureSpec::default();
    let ansatz = Ansatz::from_config(&c);
    let plus =
        project_field_on_kernel(&c, &ansatz, |y| ansatz.error(y), 1, 5, &spec).unwrap();
    let minus =
        project_field_on_kernel(&c, &ansatz, |y| -ansatz.error(y), 1, 5, &spec).unwrap();
    assert_eq!(plus.full.to_bits(), (-minus.full).to_bits());
    assert_eq!(plus.localized.to_bits(), (-minus.localized).to_bits());
    assert!(project_on_kernel(&c, 0, 5, &spec).is_err());
    assert!(project_on_kernel(&c, 1, 4, &spec).is_err());
}

#[test]
fn refine_until_converges_on_bubble_power() {
    // ∫_{ℝ³} U^p dy against a high-resolution radial oracle.
    let geom = LatticeGeom::single(3);
    let spec = QuadratureSpec {
        radial_nodes: 4,
        angular_nodes: 4,
        near_bubble_nodes: 6,
        ..QuadratureSpec::default()
    };
    let thunk = |s: &QuadratureSpec| -> crate::Result<f64> {
        let f = |y: &Pt, out: &mut [f64]| {
            let u = half_pow(2.0 / (1.0 + crate::point::norm2(y, 3)), 1);
            out[0] = abs_pow_frac(u, 5, 1);
        };
        Ok(integrate_lattice_vec(&geom, s, 1.0, false, 1, &f).0[0])
    };
    let refined = refine_until(&spec, thunk, 1e-6).unwrap();
    let nodes = radial_rule(&[0.0, 0.5, 1.0, 2.0], 60, 2, Some((ExteriorMap::Kelvin, 60)));
    let oracle: f64 = nodes
        .iter()
        .map(|&(r, w)| w * (2.0 / (1.0 + r * r)).powf(2.5))
        .sum::<f64>()
        * sphere_area(3);
    assert!(
        (refined.value - oracle).abs() < 1e-5 * oracle,
        "{} vs {oracle}",
        refined.value
    );
}

#[test]
fn refine_until_zero_and_borderline() {
    let spec = QuadratureSpec::default();
    let refined = refine_until(&spec, |_| Ok(0.0), 1e-10).unwrap();
    assert_eq!(refined.value, 0.0);
    assert_eq!(refined.doublings, 1);
    // Borderline tail (1+r)^{-n}: each refinement deepens the mapped tail,
    // so the value keeps drifting and the budget runs out.
    let geom = LatticeGeom::single(3);
    let thunk = |s: &QuadratureSpec| -> crate::Result<f64> {
        let f = |y: &Pt, out: &mut [f64]| out[0] = (1.0 + norm(y, 3)).powi(-3);
        Ok(integrate_lattice_vec(&geom, s, 1.0, false, 1, &f).0[0])
    };
    let err = refine_until(&spec, thunk, 1e-9).unwrap_err();
    assert!(matches!(err, Error::ToleranceNotMet { .. }), "{err}");
}
