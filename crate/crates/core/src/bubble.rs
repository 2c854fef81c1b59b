//! Closed-form evaluation of bubbles, ansatz fields, kernel elements and
//! rank functions.
//!
//! The standard bubble is `U(y) = (2 / (1 + |y|²))^{(n-2)/2}`; its scaled
//! translate is `U_{α,ξ}(y) = α^{-(n-2)/2} U((y-ξ)/α) = (2α / (α² +
//! |y-ξ|²))^{(n-2)/2}`. Each bubble solves `-ΔU = γ U^p` exactly, which the
//! error-field module exploits to avoid numerical differentiation.

use crate::config::{BubbleAtom, ProblemConfig};
use crate::point::{
    abs_pow_frac, axpy, dot, half_pow, kelvin_image, norm2, origin, scale, sub, Pt, MAX_DIM,
};
use crate::{Error, Result};

/// Dense symmetric `n×n` matrix stored on the stack (Hessians).
pub type Mat = [[f64; MAX_DIM]; MAX_DIM];

/// Value of a single (unsigned) bubble `U_{α,ξ}` at `y`.
///
/// Errors when `alpha <= 0`.
pub fn bubble(n: usize, y: &Pt, alpha: f64, center: &Pt) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::Domain(format!("bubble scale alpha = {alpha} must be > 0")));
    }
    Ok(atom_value(n, y, alpha, center))
}

#[inline]
pub(crate) fn atom_value(n: usize, y: &Pt, alpha: f64, center: &Pt) -> f64 {
    let d2 = crate::point::dist2(y, center, n);
    half_pow(2.0 * alpha / (alpha * alpha + d2), (n - 2) as u32)
}

/// Value and gradient of a single bubble.
#[inline]
pub(crate) fn atom_value_grad(n: usize, y: &Pt, alpha: f64, center: &Pt) -> (f64, Pt) {
    let diff = sub(y, center, n);
    let d2 = norm2(&diff, n);
    let denom = alpha * alpha + d2;
    let value = half_pow(2.0 * alpha / denom, (n - 2) as u32);
    // ∇U = -(n-2) (2α)^{(n-2)/2} (α²+d²)^{-n/2} (y-ξ)
    let coeff = -((n as f64) - 2.0) * half_pow(2.0 * alpha, (n - 2) as u32)
        / half_pow(denom, n as u32);
    (value, scale(&diff, coeff, n))
}

/// Value, gradient and Hessian of a single bubble.
#[inline]
pub(crate) fn atom_value_grad_hess(n: usize, y: &Pt, alpha: f64, center: &Pt) -> (f64, Pt, Mat) {
    let w = (n as f64 - 2.0) / 2.0;
    let diff = sub(y, center, n);
    let d2 = norm2(&diff, n);
    let denom = alpha * alpha + d2;
    let front = half_pow(2.0 * alpha, (n - 2) as u32);
    let value = front / half_pow(denom, (n - 2) as u32);
    // F(s) = (2α)^w (α²+s)^{-w} at s = d²; value = F, ∇ = 2F'(y-ξ),
    // Hess = 2F' I + 4F'' (y-ξ)⊗(y-ξ).
    let fp = -w * front / half_pow(denom, n as u32);
    let fpp = w * (w + 1.0) * front / half_pow(denom, (n + 2) as u32);
    let grad = scale(&diff, 2.0 * fp, n);
    let mut hess = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..n {
        for j in 0..n {
            hess[i][j] = 4.0 * fpp * diff[i] * diff[j];
        }
        hess[i][i] += 2.0 * fp;
    }
    (value, grad, hess)
}

/// Signed superposition of bubbles: the ansatz field and its derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    pub n: usize,
    pub atoms: Vec<BubbleAtom>,
    /// `p = (n+2)/(n-2)`.
    pub p: f64,
    /// `γ = n(n-2)/4`.
    pub gamma: f64,
}

impl Ansatz {
    /// Ansatz of a validated configuration: central bubble + satellites.
    pub fn from_config(cfg: &ProblemConfig) -> Self {
        Ansatz {
            n: cfg.n,
            atoms: cfg.lattice_points(),
            p: cfg.p,
            gamma: cfg.gamma,
        }
    }

    /// The single standard bubble (no satellites); control object in tests
    /// and rank studies.
    pub fn single_bubble(n: usize) -> Self {
        let nf = n as f64;
        Ansatz {
            n,
            atoms: vec![BubbleAtom {
                sign: 1.0,
                center: origin(),
                scale: 1.0,
            }],
            p: (nf + 2.0) / (nf - 2.0),
            gamma: nf * (nf - 2.0) / 4.0,
        }
    }

    pub fn value(&self, y: &Pt) -> f64 {
        let mut u = 0.0;
        for a in &self.atoms {
            u += a.sign * atom_value(self.n, y, a.scale, &a.center);
        }
        u
    }

    pub fn value_grad(&self, y: &Pt) -> (f64, Pt) {
        let mut u = 0.0;
        let mut g = origin();
        for a in &self.atoms {
            let (v, gv) = atom_value_grad(self.n, y, a.scale, &a.center);
            u += a.sign * v;
            for i in 0..self.n {
                g[i] += a.sign * gv[i];
            }
        }
        (u, g)
    }

    pub fn value_grad_hess(&self, y: &Pt) -> (f64, Pt, Mat) {
        let mut u = 0.0;
        let mut g = origin();
        let mut h = [[0.0; MAX_DIM]; MAX_DIM];
        for a in &self.atoms {
            let (v, gv, hv) = atom_value_grad_hess(self.n, y, a.scale, &a.center);
            u += a.sign * v;
            for i in 0..self.n {
                g[i] += a.sign * gv[i];
                for j in 0..self.n {
                    h[i][j] += a.sign * hv[i][j];
                }
            }
        }
        (u, g, h)
    }

    /// Error field `E = Δu + γ|u|^{p-1}u` via the algebraic identity
    /// `Δu = -γ Σ_a sign_a U_a^p`; no numerical differentiation.
    ///
    /// The per-atom power `U_a^p` is routed through the same power function
    /// as the nonlinear term, so a satellite-free ansatz gives a bitwise
    /// zero error.
    pub fn error(&self, y: &Pt) -> f64 {
        let m = (self.n - 2) as u32;
        let mut u = 0.0;
        let mut pow_sum = 0.0;
        for a in &self.atoms {
            let d2 = crate::point::dist2(y, &a.center, self.n);
            let base = 2.0 * a.scale / (a.scale * a.scale + d2);
            let v = half_pow(base, m);
            u += a.sign * v;
            pow_sum += a.sign * abs_pow_frac(v, (self.n + 2) as u32, (self.n - 2) as u32);
        }
        let nonlinear = abs_pow_frac(u, (self.n + 2) as u32, (self.n - 2) as u32).copysign(u);
        self.gamma * (nonlinear - pow_sum)
    }

    /// Gradient of the error field, assembled per atom in closed form.
    pub fn error_grad(&self, y: &Pt) -> Pt {
        let mut u = 0.0;
        let mut grad_u = origin();
        let mut pow_grad = origin();
        for a in &self.atoms {
            let diff = sub(y, &a.center, self.n);
            let d2 = norm2(&diff, self.n);
            let denom = a.scale * a.scale + d2;
            let base = 2.0 * a.scale / denom;
            u += a.sign * half_pow(base, (self.n - 2) as u32);
            let gcoeff = -((self.n as f64) - 2.0) * half_pow(2.0 * a.scale, (self.n - 2) as u32)
                / half_pow(denom, self.n as u32);
            // ∇(U_a^p) = p U_a^{p-1} ∇U_a and U_a^{p-1} = base².
            let pcoeff = self.p * base * base * gcoeff;
            for i in 0..self.n {
                grad_u[i] += a.sign * gcoeff * diff[i];
                pow_grad[i] += a.sign * pcoeff * diff[i];
            }
        }
        let du = self.p * abs_pow_frac(u, 4, (self.n - 2) as u32);
        let mut g = origin();
        for i in 0..self.n {
            g[i] = self.gamma * (du * grad_u[i] - pow_grad[i]);
        }
        g
    }

    /// Number of rank functions `z_j` generated by the invariances: `4n-2`.
    pub fn rank_function_count(&self) -> usize {
        4 * self.n - 2
    }
}

/// Kernel elements of the linearization at the standard bubble:
/// `Z_α = ∂U/∂y_α` for `α = 1..n` and `Z_{n+1} = y·∇U + (n-2)/2 · U`.
pub fn kernel_z(n: usize, alpha: usize, y: &Pt) -> Result<f64> {
    if alpha == 0 || alpha > n + 1 {
        return Err(Error::Domain(format!(
            "kernel index alpha = {alpha} outside 1..={}",
            n + 1
        )));
    }
    let (u, g) = atom_value_grad(n, y, 1.0, &origin());
    Ok(if alpha <= n {
        g[alpha - 1]
    } else {
        dot(y, &g, n) + 0.5 * (n as f64 - 2.0) * u
    })
}

/// Gradient of `Z_α`.
pub fn kernel_z_grad(n: usize, alpha: usize, y: &Pt) -> Result<Pt> {
    if alpha == 0 || alpha > n + 1 {
        return Err(Error::Domain(format!(
            "kernel index alpha = {alpha} outside 1..={}",
            n + 1
        )));
    }
    let (_, g, h) = atom_value_grad_hess(n, y, 1.0, &origin());
    let mut out = origin();
    if alpha <= n {
        for i in 0..n {
            out[i] = h[alpha - 1][i];
        }
    } else {
        // ∇Z_{n+1} = (1 + (n-2)/2) ∇U + H y
        let c = 1.0 + 0.5 * (n as f64 - 2.0);
        for i in 0..n {
            let mut hy = 0.0;
            for j in 0..n {
                hy += h[i][j] * y[j];
            }
            out[i] = c * g[i] + hy;
        }
    }
    Ok(out)
}

/// Rescaled-translated kernel element
/// `Z̄_α(y) = λ^{-(n-2)/2} Z_α((y - ξ)/λ)` anchored at a satellite.
pub fn scaled_kernel_z(n: usize, alpha: usize, center: &Pt, lam: f64, y: &Pt) -> Result<f64> {
    let local = scale(&sub(y, center, n), 1.0 / lam, n);
    Ok(kernel_z(n, alpha, &local)? / half_pow(lam, (n - 2) as u32))
}

/// The `4n-2` invariance-generated rank functions `z_j` built from a field
/// `u` and its gradient (here the ansatz):
///
/// * `z_0 = (n-2)/2 · u + ∇u·y`,
/// * `z_α = ∂u/∂y_α` for `α = 1..n`,
/// * `z_{n+α} = -2 y_α z_0 + |y|² z_α` for `α = 1..3`,
/// * rotation generators `-y_α z_β + y_β z_α` for the index ranges
///   `β = 1, α = 2..n`; `β = 2, α = 3..n`; `β = 3, α = 4..n`.
pub fn rank_function(ansatz: &Ansatz, j: usize, y: &Pt) -> Result<f64> {
    let count = ansatz.rank_function_count();
    if j >= count {
        return Err(Error::Domain(format!(
            "rank function index {j} outside 0..{count}"
        )));
    }
    let (u, g) = ansatz.value_grad(y);
    Ok(rank_values(ansatz.n, u, &g, y)[j])
}

/// All rank function values at once; the Gram accumulation path.
pub fn rank_values_at(ansatz: &Ansatz, y: &Pt) -> Vec<f64> {
    let (u, g) = ansatz.value_grad(y);
    rank_values(ansatz.n, u, &g, y)
}

fn rank_values(n: usize, u: f64, g: &Pt, y: &Pt) -> Vec<f64> {
    let mut z = vec![0.0; 4 * n - 2];
    let r2 = norm2(y, n);
    z[0] = 0.5 * (n as f64 - 2.0) * u + dot(g, y, n);
    for alpha in 1..=n {
        z[alpha] = g[alpha - 1];
    }
    for alpha in 1..=3 {
        z[n + alpha] = -2.0 * y[alpha - 1] * z[0] + r2 * z[alpha];
    }
    let mut idx = n + 4;
    for alpha in 2..=n {
        z[idx] = -y[alpha - 1] * z[1] + y[0] * z[alpha];
        idx += 1;
    }
    for alpha in 3..=n {
        z[idx] = -y[alpha - 1] * z[2] + y[1] * z[alpha];
        idx += 1;
    }
    for alpha in 4..=n {
        z[idx] = -y[alpha - 1] * z[3] + y[2] * z[alpha];
        idx += 1;
    }
    debug_assert_eq!(idx, 4 * n - 2);
    z
}

/// Gradient of a rank function, assembled from the ansatz Hessian.
pub fn rank_function_grad(ansatz: &Ansatz, j: usize, y: &Pt) -> Result<Pt> {
    let n = ansatz.n;
    let count = ansatz.rank_function_count();
    if j >= count {
        return Err(Error::Domain(format!(
            "rank function index {j} outside 0..{count}"
        )));
    }
    let (u, g, h) = ansatz.value_grad_hess(y);
    let z = rank_values(n, u, &g, y);
    // ∇z_0 = ((n-2)/2 + 1) ∇u + H y
    let mut gz0 = origin();
    let c0 = 0.5 * (n as f64 - 2.0) + 1.0;
    for i in 0..n {
        let mut hy = 0.0;
        for l in 0..n {
            hy += h[i][l] * y[l];
        }
        gz0[i] = c0 * g[i] + hy;
    }
    let grad_z = |alpha: usize| -> Pt {
        // ∇z_α = H e_α
        let mut out = origin();
        for i in 0..n {
            out[i] = h[alpha - 1][i];
        }
        out
    };
    let kelvin_grad = |alpha: usize| -> Pt {
        // ∇(-2 y_α z_0 + |y|² z_α)
        let mut out = axpy(&scale(&gz0, -2.0 * y[alpha - 1], n), 2.0 * z[alpha], y, n);
        out[alpha - 1] -= 2.0 * z[0];
        let r2 = norm2(y, n);
        let ga = grad_z(alpha);
        for i in 0..n {
            out[i] += r2 * ga[i];
        }
        out
    };
    let rotation_grad = |beta: usize, alpha: usize| -> Pt {
        // ∇(-y_α z_β + y_β z_α)
        let gb = grad_z(beta);
        let ga = grad_z(alpha);
        let mut out = origin();
        for i in 0..n {
            out[i] = -y[alpha - 1] * gb[i] + y[beta - 1] * ga[i];
        }
        out[alpha - 1] -= z[beta];
        out[beta - 1] += z[alpha];
        out
    };
    Ok(if j == 0 {
        gz0
    } else if j <= n {
        grad_z(j)
    } else if j <= n + 3 {
        kelvin_grad(j - n)
    } else if j <= 2 * n + 2 {
        rotation_grad(1, j - n - 2)
    } else if j <= 3 * n {
        rotation_grad(2, j - 2 * n)
    } else {
        rotation_grad(3, j - 3 * n + 3)
    })
}

/// Kelvin pullback `|y|^{2-n} f(y / |y|²)`; errors at `y = 0`.
pub fn kelvin_pullback<F: Fn(&Pt) -> f64>(n: usize, f: F, y: &Pt) -> Result<f64> {
    let r2 = norm2(y, n);
    if r2 == 0.0 {
        return Err(Error::Domain("kelvin pullback undefined at y = 0".into()));
    }
    let image = kelvin_image(y, n);
    Ok(f(&image) / half_pow(r2, (n - 2) as u32))
}

/// An evaluatable field with closed-form value and gradient.
#[derive(Debug, Clone)]
pub enum ScalarField {
    /// One bubble `U_{α,ξ}` (unsigned).
    Bubble { n: usize, atom: BubbleAtom },
    /// The signed multi-bubble ansatz.
    Ansatz(Ansatz),
    /// The error field of an ansatz.
    Error(Ansatz),
    /// Kernel element `Z_α` of the standard bubble.
    Kernel { n: usize, alpha: usize },
    /// Rank function `z_j` of an ansatz.
    Rank { ansatz: Ansatz, j: usize },
}

impl ScalarField {
    pub fn dim(&self) -> usize {
        match self {
            ScalarField::Bubble { n, .. } | ScalarField::Kernel { n, .. } => *n,
            ScalarField::Ansatz(a) | ScalarField::Error(a) | ScalarField::Rank { ansatz: a, .. } => {
                a.n
            }
        }
    }

    pub fn value(&self, y: &Pt) -> f64 {
        match self {
            ScalarField::Bubble { n, atom } => atom_value(*n, y, atom.scale, &atom.center),
            ScalarField::Ansatz(a) => a.value(y),
            ScalarField::Error(a) => a.error(y),
            ScalarField::Kernel { n, alpha } => kernel_z(*n, *alpha, y).unwrap_or(f64::NAN),
            ScalarField::Rank { ansatz, j } => rank_function(ansatz, *j, y).unwrap_or(f64::NAN),
        }
    }

    pub fn gradient(&self, y: &Pt) -> Pt {
        match self {
            ScalarField::Bubble { n, atom } => atom_value_grad(*n, y, atom.scale, &atom.center).1,
            ScalarField::Ansatz(a) => a.value_grad(y).1,
            ScalarField::Error(a) => a.error_grad(y),
            ScalarField::Kernel { n, alpha } => kernel_z_grad(*n, *alpha, y).unwrap_or(origin()),
            ScalarField::Rank { ansatz, j } => {
                rank_function_grad(ansatz, *j, y).unwrap_or(origin())
            }
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            ScalarField::Bubble { .. } => "bubble".into(),
            ScalarField::Ansatz(_) => "ansatz".into(),
            ScalarField::Error(_) => "error".into(),
            ScalarField::Kernel { alpha, .. } => format!("kernel-Z{alpha}"),
            ScalarField::Rank { j, .. } => format!("rank-z{j}"),
        }
    }

    /// Homogeneity weight of the field under the Kelvin transform:
    /// `f(y) = |y|^w f(y/|y|²)` with `w = 2-n` for bubble-type fields and
    /// `w = -(n+2)` for the error field.
    pub fn kelvin_weight(&self) -> i32 {
        let n = self.dim() as i32;
        match self {
            ScalarField::Error(_) => -(n + 2),
            _ => 2 - n,
        }
    }
}

/// Central finite-difference gradient used by consistency tests.
pub fn fd_gradient<F: Fn(&Pt) -> f64>(n: usize, f: F, y: &Pt, h: f64) -> Pt {
    let mut g = origin();
    for i in 0..n {
        let mut yp = *y;
        let mut ym = *y;
        yp[i] += h;
        ym[i] -= h;
        g[i] = (f(&yp) - f(&ym)) / (2.0 * h);
    }
    g
}

/// Central finite-difference Laplacian used by consistency tests.
pub fn fd_laplacian<F: Fn(&Pt) -> f64>(n: usize, f: F, y: &Pt, h: f64) -> f64 {
    let f0 = f(y);
    let mut s = 0.0;
    for i in 0..n {
        let mut yp = *y;
        let mut ym = *y;
        yp[i] += h;
        ym[i] -= h;
        s += f(&yp) - 2.0 * f0 + f(&ym);
    }
    s / (h * h)
}
