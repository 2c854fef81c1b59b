//! Parameters, derived scalars and bubble-center lattices.
//!
//! A configuration fixes the dimension `n`, the number `k` of points per
//! ring, the ring pattern, and the free parameters `(ℓ, t, q, δ)`. The
//! scaling parameters are derived deterministically:
//!
//! * `n ≥ 4`: `λ = ℓ^{2/(n-2)} / k²`, `τ = t / k^{1 - 2/(n-1)}`;
//! * `n = 3`: `λ = ℓ² / (k² ln²k)`, `τ = t / √(ln k)`.
//!
//! Every ring radius satisfies `λ² + R² = 1`, which makes each satellite
//! bubble invariant under the Kelvin transform.

use crate::point::{dist2, origin, pt, Pt};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Ring pattern of the construction.
///
/// * `Double` — one pair of rings at heights `±τ` (the base construction);
/// * `Even(m)` — `m` pairs of rings at heights `±τ_i`;
/// * `Odd(m)` — `m` pairs plus one equatorial ring at height `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    Double,
    Even(usize),
    Odd(usize),
}

impl Pattern {
    /// Number of doubled ring pairs.
    pub fn pairs(&self) -> usize {
        match self {
            Pattern::Double => 1,
            Pattern::Even(m) | Pattern::Odd(m) => *m,
        }
    }

    /// Whether the pattern carries an equatorial ring.
    pub fn has_equator(&self) -> bool {
        matches!(self, Pattern::Odd(_))
    }

    /// Expected lengths of the `ell` and `t` sequences.
    pub fn expected_lens(&self) -> (usize, usize) {
        let m = self.pairs();
        if self.has_equator() {
            (m + 1, m)
        } else {
            (m, m)
        }
    }
}

/// One signed, scaled, translated copy of the standard bubble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleAtom {
    /// `+1` for the central bubble, `-1` for every satellite.
    pub sign: f64,
    /// Center of the bubble in `ℝ^n`.
    pub center: Pt,
    /// Concentration scale (`1` for the central bubble).
    pub scale: f64,
}

/// Validated problem configuration with all derived scalars populated.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub n: usize,
    pub k: usize,
    pub pattern: Pattern,
    /// `ℓ` parameters. For `Odd(m)` the first entry drives the equatorial
    /// ring, the remaining `m` drive the doubled rings.
    pub ell: Vec<f64>,
    /// `t` parameters, one per doubled ring pair.
    pub t: Vec<f64>,
    pub q: f64,
    /// Requested cutoff radius parameter.
    pub delta: f64,
    pub strict_q: bool,
    /// Lower bound `η` of the admissible `(η, η⁻¹)` window for `ℓ`, `t`.
    pub eta_bound: f64,
    // Derived scalars.
    pub p: f64,
    pub gamma: f64,
    /// Concentration scales, one per doubled ring pair.
    pub lambda: Vec<f64>,
    /// Ring heights, one per doubled ring pair.
    pub tau: Vec<f64>,
    /// Ring radii, `λ_i² + R_i² = 1`.
    pub radius: Vec<f64>,
    /// Equatorial concentration scale (odd pattern only).
    pub mu: Option<f64>,
    /// Equatorial ring radius, `μ² + R² = 1` (odd pattern only).
    pub r_eq: Option<f64>,
    /// Effective cutoff parameter after the inter-center distance guard.
    pub delta_eff: f64,
    /// Non-fatal observations gathered while building.
    pub warnings: Vec<String>,
}

fn check_window(name: &str, values: &[f64], eta: f64) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !(v > eta && v < 1.0 / eta) {
            return Err(Error::Validation(format!(
                "{name}[{i}] = {v} outside the window ({eta}, {})",
                1.0 / eta
            )));
        }
    }
    Ok(())
}

fn scales_for(n: usize, k: usize, ell: f64, t: f64) -> (f64, f64) {
    let kf = k as f64;
    if n >= 4 {
        let lambda = ell.powf(2.0 / (n as f64 - 2.0)) / (kf * kf);
        let tau = t / kf.powf(1.0 - 2.0 / (n as f64 - 1.0));
        (lambda, tau)
    } else {
        let lk = kf.ln();
        let lambda = ell * ell / (kf * kf * lk * lk);
        let tau = t / lk.sqrt();
        (lambda, tau)
    }
}

/// Builds a validated configuration with all derived scalars.
pub fn build_config(
    n: usize,
    k: usize,
    pattern: Pattern,
    ell: &[f64],
    t: &[f64],
    q: f64,
    delta: f64,
) -> Result<ProblemConfig> {
    build_config_with_eta(n, k, pattern, ell, t, q, delta, false, 1e-2)
}

/// Full-control constructor behind [`build_config`].
#[allow(clippy::too_many_arguments)]
pub fn build_config_with_eta(
    n: usize,
    k: usize,
    pattern: Pattern,
    ell: &[f64],
    t: &[f64],
    q: f64,
    delta: f64,
    strict_q: bool,
    eta_bound: f64,
) -> Result<ProblemConfig> {
    if !(3..=crate::point::MAX_DIM).contains(&n) {
        return Err(Error::Validation(format!(
            "n = {n} outside the supported range 3..={}",
            crate::point::MAX_DIM
        )));
    }
    if k < 2 {
        return Err(Error::Validation(format!("k = {k} below the bound k >= 2")));
    }
    if pattern.pairs() == 0 {
        return Err(Error::Validation("pattern requires m >= 1".into()));
    }
    let (ne, nt) = pattern.expected_lens();
    if ell.len() != ne {
        return Err(Error::Shape(format!(
            "ell has length {} but pattern {:?} needs {ne}",
            ell.len(),
            pattern
        )));
    }
    if t.len() != nt {
        return Err(Error::Shape(format!(
            "t has length {} but pattern {:?} needs {nt}",
            t.len(),
            pattern
        )));
    }
    let nf = n as f64;
    let q_lo = nf / 2.0;
    let q_hi = nf;
    if !(q > q_lo && q < q_hi) {
        return Err(Error::Validation(format!(
            "q = {q} outside ({q_lo}, {q_hi})"
        )));
    }
    let q_strict_hi = nf / (2.0 - 2.0 / (nf - 1.0));
    if strict_q && q >= q_strict_hi {
        return Err(Error::Validation(format!(
            "q = {q} violates the strict bound q < {q_strict_hi}"
        )));
    }
    if delta <= 0.0 {
        return Err(Error::Validation(format!("delta = {delta} must be > 0")));
    }
    check_window("ell", ell, eta_bound)?;
    check_window("t", t, eta_bound)?;

    let mut warnings = Vec::new();
    let m = pattern.pairs();
    let ring_ell = if pattern.has_equator() { &ell[1..] } else { ell };
    let mut lambda = Vec::with_capacity(m);
    let mut tau = Vec::with_capacity(m);
    let mut radius = Vec::with_capacity(m);
    for i in 0..m {
        let (la, ta) = scales_for(n, k, ring_ell[i], t[i]);
        if !(la > 0.0 && la < 1.0) {
            return Err(Error::Validation(format!(
                "lambda[{i}] = {la} outside (0, 1); shrink ell or grow k"
            )));
        }
        if !(ta > 0.0 && ta < 1.0) {
            return Err(Error::Validation(format!(
                "tau[{i}] = {ta} outside (0, 1); shrink t or grow k"
            )));
        }
        lambda.push(la);
        tau.push(ta);
        radius.push((1.0 - la * la).sqrt());
    }
    let (mu, r_eq) = if pattern.has_equator() {
        let (mu, _) = scales_for(n, k, ell[0], 1.0);
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Validation(format!(
                "mu = {mu} outside (0, 1); shrink ell[0] or grow k"
            )));
        }
        (Some(mu), Some((1.0 - mu * mu).sqrt()))
    } else {
        (None, None)
    };
    if k < 8 {
        warnings.push(format!(
            "k = {k}: asymptotic claims assume k large; asymptotic checks are gated to k >= 8"
        ));
    }

    let mut cfg = ProblemConfig {
        n,
        k,
        pattern,
        ell: ell.to_vec(),
        t: t.to_vec(),
        q,
        delta,
        strict_q,
        eta_bound,
        p: (nf + 2.0) / (nf - 2.0),
        gamma: nf * (nf - 2.0) / 4.0,
        lambda,
        tau,
        radius,
        mu,
        r_eq,
        delta_eff: delta,
        warnings,
    };

    // Keep the cutoff balls disjoint: require delta_eff/k below half the
    // minimal inter-center distance.
    let dmin = cfg.min_center_distance();
    let bound = 0.5 * cfg.k as f64 * dmin;
    if cfg.delta >= bound {
        let shrunk = 0.99 * bound;
        cfg.warnings.push(format!(
            "delta = {} exceeds half the minimal center spacing ({:.6e}); shrunk to {:.6e}",
            cfg.delta, bound, shrunk
        ));
        cfg.delta_eff = shrunk;
    }
    Ok(cfg)
}

impl ProblemConfig {
    /// Central atom followed by all satellites.
    ///
    /// Ordering: central; equatorial ring `j = 1..k` (odd pattern); then per
    /// ring pair `i`: the over-ring `j = 1..k`, then the under-ring
    /// `j = 1..k`.
    pub fn lattice_points(&self) -> Vec<BubbleAtom> {
        let mut atoms = Vec::with_capacity(1 + self.satellite_count());
        atoms.push(BubbleAtom {
            sign: 1.0,
            center: origin(),
            scale: 1.0,
        });
        let k = self.k;
        if let (Some(mu), Some(r)) = (self.mu, self.r_eq) {
            for j in 0..k {
                let th = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                atoms.push(BubbleAtom {
                    sign: -1.0,
                    center: pt(&[r * th.cos(), r * th.sin()]),
                    scale: mu,
                });
            }
        }
        for i in 0..self.pattern.pairs() {
            let (la, ta, r) = (self.lambda[i], self.tau[i], self.radius[i]);
            let rho = r * (1.0 - ta * ta).sqrt();
            for &side in &[1.0, -1.0] {
                for j in 0..k {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                    atoms.push(BubbleAtom {
                        sign: -1.0,
                        center: pt(&[rho * th.cos(), rho * th.sin(), side * r * ta]),
                        scale: la,
                    });
                }
            }
        }
        atoms
    }

    /// Number of satellite atoms.
    pub fn satellite_count(&self) -> usize {
        let k = self.k;
        let m = self.pattern.pairs();
        2 * m * k + if self.pattern.has_equator() { k } else { 0 }
    }

    /// Minimal pairwise distance between atom centers.
    pub fn min_center_distance(&self) -> f64 {
        let atoms = self.lattice_points();
        let mut dmin = f64::INFINITY;
        for a in 1..atoms.len() {
            for b in (a + 1)..atoms.len() {
                let d = dist2(&atoms[a].center, &atoms[b].center, self.n).sqrt();
                if d < dmin {
                    dmin = d;
                }
            }
        }
        dmin
    }

    /// Cutoff ball radius `δ_eff / k`.
    pub fn cutoff_radius(&self) -> f64 {
        self.delta_eff / self.k as f64
    }
}

/// One validated invariant with its measured residual.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
    pub detail: String,
}

/// Diagnostics report of [`validate`]; never fails, only reports.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub checks: Vec<Diagnostic>,
    pub warnings: Vec<String>,
}

impl DiagnosticsReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Lists every invariant of the configuration with pass/fail and residual.
pub fn validate(cfg: &ProblemConfig) -> DiagnosticsReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool, residual: f64, detail: String| {
        checks.push(Diagnostic {
            name: name.to_string(),
            pass,
            residual,
            detail,
        });
    };

    for i in 0..self_rings(cfg) {
        let res = (cfg.lambda[i] * cfg.lambda[i] + cfg.radius[i] * cfg.radius[i] - 1.0).abs();
        push(
            &format!("pythagoras-ring-{i}"),
            res <= 1e-12,
            res,
            format!("|lambda^2 + R^2 - 1| for ring pair {i}"),
        );
        push(
            &format!("tau-range-{i}"),
            cfg.tau[i] > 0.0 && cfg.tau[i] < 1.0,
            0.0,
            format!("tau[{i}] = {}", cfg.tau[i]),
        );
        push(
            &format!("lambda-range-{i}"),
            cfg.lambda[i] > 0.0 && cfg.lambda[i] < 1.0,
            0.0,
            format!("lambda[{i}] = {}", cfg.lambda[i]),
        );
    }
    if let (Some(mu), Some(r)) = (cfg.mu, cfg.r_eq) {
        let res = (mu * mu + r * r - 1.0).abs();
        push(
            "pythagoras-equator",
            res <= 1e-12,
            res,
            "|mu^2 + R^2 - 1| for the equatorial ring".into(),
        );
    }
    let satellites = cfg.lattice_points();
    let mut worst = 0.0f64;
    for a in satellites.iter().skip(1) {
        let res = (crate::point::norm2(&a.center, cfg.n) + a.scale * a.scale - 1.0).abs();
        worst = worst.max(res);
    }
    push(
        "kelvin-compatibility",
        worst <= 1e-12,
        worst,
        "max over satellites of ||center|^2 + scale^2 - 1|".into(),
    );
    let dmin = cfg.min_center_distance();
    let sep = cfg.delta_eff / cfg.k as f64;
    push(
        "cutoff-separation",
        sep < 0.5 * dmin,
        sep / dmin,
        format!("delta_eff/k = {sep:.6e} vs half min spacing {:.6e}", 0.5 * dmin),
    );
    let qhi = cfg.n as f64 / (2.0 - 2.0 / (cfg.n as f64 - 1.0));
    push(
        "q-window",
        cfg.q > cfg.n as f64 / 2.0 && cfg.q < cfg.n as f64 && (!cfg.strict_q || cfg.q < qhi),
        0.0,
        format!("q = {}, strict bound {qhi}", cfg.q),
    );
    DiagnosticsReport {
        checks,
        warnings: cfg.warnings.clone(),
    }
}

fn self_rings(cfg: &ProblemConfig) -> usize {
    cfg.pattern.pairs()
}

/// On-disk configuration format.
///
/// Keys: `{"n","k","pattern","m","ell","t","q","delta","strict_q"}` with
/// `pattern ∈ {"double","even","odd"}`; unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: usize,
    pub k: usize,
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub ell: Vec<f64>,
    pub t: Vec<f64>,
    pub q: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub strict_q: bool,
}

fn default_delta() -> f64 {
    0.1
}

impl ConfigFile {
    /// Parses a JSON document, rejecting unknown keys.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Builds the validated configuration, optionally overriding `k`.
    pub fn build(&self, k_override: Option<usize>) -> Result<ProblemConfig> {
        let pattern = match (self.pattern.as_str(), self.m) {
            ("double", None) => Pattern::Double,
            ("double", Some(_)) => {
                return Err(Error::Config(
                    "pattern \"double\" does not take an \"m\" field".into(),
                ))
            }
            ("even", Some(m)) => Pattern::Even(m),
            ("odd", Some(m)) => Pattern::Odd(m),
            ("even", None) | ("odd", None) => {
                return Err(Error::Config(format!(
                    "pattern \"{}\" requires an \"m\" field",
                    self.pattern
                )))
            }
            (other, _) => {
                return Err(Error::Config(format!(
                    "pattern \"{other}\" is not one of \"double\", \"even\", \"odd\""
                )))
            }
        };
        build_config_with_eta(
            self.n,
            k_override.unwrap_or(self.k),
            pattern,
            &self.ell,
            &self.t,
            self.q,
            self.delta,
            self.strict_q,
            1e-2,
        )
    }

    /// Echo of a built configuration.
    pub fn from_config(cfg: &ProblemConfig) -> Self {
        let (pattern, m) = match cfg.pattern {
            Pattern::Double => ("double".to_string(), None),
            Pattern::Even(m) => ("even".to_string(), Some(m)),
            Pattern::Odd(m) => ("odd".to_string(), Some(m)),
        };
        ConfigFile {
            n: cfg.n,
            k: cfg.k,
            pattern,
            m,
            ell: cfg.ell.clone(),
            t: cfg.t.clone(),
            q: cfg.q,
            delta: cfg.delta,
            strict_q: cfg.strict_q,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::norm;

    fn double(n: usize, k: usize) -> ProblemConfig {
        build_config(n, k, Pattern::Double, &[1.0], &[1.0], 2.5, 0.1).unwrap()
    }

    #[test]
    fn derived_scalars_n4() {
        let cfg = double(4, 10);
        assert!((cfg.lambda[0] - 0.01).abs() < 1e-15);
        let tau_expected = 10f64.powf(-1.0 / 3.0);
        assert!((cfg.tau[0] - tau_expected).abs() < 1e-12);
        assert!((cfg.tau[0] - 0.46416).abs() < 1e-4);
        assert!((cfg.radius[0] - (1.0f64 - 1e-4).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn derived_scalars_n3() {
        let cfg = build_config(3, 10, Pattern::Double, &[1.0], &[1.0], 1.8, 0.1).unwrap();
        let ln10 = 10f64.ln();
        assert!((cfg.lambda[0] - 1.0 / (100.0 * ln10 * ln10)).abs() < 1e-15);
        assert!((cfg.lambda[0] - 1.8861e-3).abs() < 1e-6);
        assert!((cfg.tau[0] - 1.0 / ln10.sqrt()).abs() < 1e-15);
        assert!((cfg.tau[0] - 0.65904).abs() < 1e-4);
    }

    #[test]
    fn q_window_and_strict_q() {
        // q = 3.5 sits in the base window (2, 4) at n = 4 ...
        assert!(build_config(4, 10, Pattern::Double, &[1.0], &[1.0], 3.5, 0.1).is_ok());
        // ... but violates the strict bound q < 3.
        let err = build_config_with_eta(
            4,
            10,
            Pattern::Double,
            &[1.0],
            &[1.0],
            3.5,
            0.1,
            true,
            1e-2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("strict"));
        // Outside the base window entirely.
        let err = build_config(4, 10, Pattern::Double, &[1.0], &[1.0], 4.2, 0.1).unwrap_err();
        assert!(err.to_string().contains("(2, 4)"));
    }

    #[test]
    fn shape_errors() {
        let err =
            build_config(4, 10, Pattern::Even(2), &[1.0], &[1.0, 1.0], 2.5, 0.1).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
        let err = build_config(4, 10, Pattern::Odd(1), &[1.0], &[1.0, 1.0], 2.5, 0.1).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
        // Odd(m) takes m+1 ell values and m t values.
        assert!(build_config(4, 10, Pattern::Odd(1), &[1.0, 1.0], &[1.0], 2.5, 0.1).is_ok());
    }

    #[test]
    fn lattice_double_k2_antipodal() {
        let cfg = build_config(3, 2, Pattern::Double, &[1.0], &[0.5], 1.8, 0.1).unwrap();
        let atoms = cfg.lattice_points();
        assert_eq!(atoms.len(), 1 + 4);
        let (r, ta) = (cfg.radius[0], cfg.tau[0]);
        let rho = r * (1.0 - ta * ta).sqrt();
        let over1 = atoms[1].center;
        let over2 = atoms[2].center;
        assert!((over1[0] - rho).abs() < 1e-15 && over1[1].abs() < 1e-15);
        assert!((over1[2] - r * ta).abs() < 1e-15);
        // theta_2 = pi flips the first coordinate.
        assert!((over2[0] + rho).abs() < 1e-12 && over2[1].abs() < 1e-12);
        // Under-ring atoms are the y3-reflections of the over-ring atoms.
        let under1 = atoms[3].center;
        assert!((under1[0] - over1[0]).abs() < 1e-15);
        assert!((under1[2] + over1[2]).abs() < 1e-15);
    }

    #[test]
    fn satellite_centers_have_norm_r() {
        let cfg = double(4, 7);
        for a in cfg.lattice_points().iter().skip(1) {
            assert!((norm(&a.center, 4) - cfg.radius[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn odd_pattern_counts_and_scales() {
        let cfg = build_config(4, 3, Pattern::Odd(1), &[1.0, 1.0], &[1.0], 2.5, 0.1).unwrap();
        let atoms = cfg.lattice_points();
        assert_eq!(atoms.len(), 10); // 1 + 3 + 6
        let mu = cfg.mu.unwrap();
        for a in &atoms[1..4] {
            assert_eq!(a.scale, mu);
            assert!(a.center[2].abs() < 1e-15);
        }
        for a in &atoms[4..10] {
            assert_eq!(a.scale, cfg.lambda[0]);
        }
    }

    #[test]
    fn validate_reports() {
        let cfg = double(4, 10);
        let rep = validate(&cfg);
        assert!(rep.all_pass());

        let mut broken = cfg.clone();
        broken.radius[0] += 1e-6;
        let rep = validate(&broken);
        assert!(!rep.all_pass());
        let pyth = rep
            .checks
            .iter()
            .find(|c| c.name == "pythagoras-ring-0")
            .unwrap();
        assert!(pyth.residual > 1e-12);

        let small = build_config(3, 2, Pattern::Double, &[1.0], &[0.5], 1.8, 0.1).unwrap();
        assert!(small
            .warnings
            .iter()
            .any(|w| w.contains("asymptotic claims assume k large")));
    }

    #[test]
    fn delta_shrinks_with_warning() {
        // A huge delta collides with the inter-center spacing.
        let cfg = build_config(4, 8, Pattern::Double, &[1.0], &[1.0], 3.0, 0.1).unwrap();
        assert_eq!(cfg.delta_eff, cfg.delta); // 0.1 is fine at k = 8
        let cfg = build_config(4, 8, Pattern::Double, &[1.0], &[1.0], 3.0, 5.0).unwrap();
        assert!(cfg.delta_eff < 5.0);
        assert!(cfg.warnings.iter().any(|w| w.contains("shrunk")));
        assert!(cfg.delta_eff / (cfg.k as f64) < 0.5 * cfg.min_center_distance());
    }

    #[test]
    fn config_file_round_trip_is_identity() {
        let cfg = build_config(4, 12, Pattern::Even(2), &[1.0, 0.8], &[1.0, 1.2], 2.5, 0.1)
            .unwrap();
        let file = ConfigFile::from_config(&cfg);
        let parsed = ConfigFile::from_json(&file.to_json()).unwrap();
        assert_eq!(file, parsed);
        let rebuilt = parsed.build(None).unwrap();
        assert_eq!(cfg, rebuilt);
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        let text = r#"{"n":4,"k":8,"pattern":"double","ell":[1.0],"t":[1.0],"q":2.5,"delta":0.1,"bogus":3}"#;
        assert!(ConfigFile::from_json(text).is_err());
    }

    #[test]
    fn rotation_permutes_satellites() {
        let cfg = double(4, 6);
        let atoms = cfg.lattice_points();
        let th = 2.0 * std::f64::consts::PI / cfg.k as f64;
        let (c, s) = (th.cos(), th.sin());
        for a in atoms.iter().skip(1) {
            let rotated = [
                c * a.center[0] - s * a.center[1],
                s * a.center[0] + c * a.center[1],
                a.center[2],
                a.center[3],
            ];
            let hit = atoms.iter().skip(1).any(|b| {
                dist2(&pt(&rotated), &b.center, 4) < 1e-24 && (a.scale - b.scale).abs() == 0.0
            });
            assert!(hit);
        }
    }

    #[test]
    fn lambda_k2_invariance() {
        // n >= 4: lambda * k^2 depends only on ell.
        let a = build_config(5, 8, Pattern::Double, &[1.0], &[1.0], 3.5, 0.1).unwrap();
        let b = build_config(5, 32, Pattern::Double, &[1.0], &[1.0], 3.5, 0.1).unwrap();
        assert!((a.lambda[0] * 64.0 - b.lambda[0] * 1024.0).abs() < 1e-14);
        // n = 3: lambda * k^2 ln^2 k depends only on ell.
        let a = build_config(3, 8, Pattern::Double, &[1.0], &[0.9], 1.8, 0.1).unwrap();
        let b = build_config(3, 32, Pattern::Double, &[1.0], &[0.9], 1.8, 0.1).unwrap();
        let va = a.lambda[0] * 64.0 * 8f64.ln().powi(2);
        let vb = b.lambda[0] * 1024.0 * 32f64.ln().powi(2);
        assert!((va - vb).abs() < 1e-14);
    }
}
