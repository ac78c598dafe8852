//! Pointwise constitutive algebra for the nonlinear strain–stress law
//!
//! ```text
//! eps = E1 (1 + l1 tr eps) T + E2 (1 + l2 tr eps) tr(T) I
//! ```
//!
//! and its stress-explicit inversion with truncated divergence.

use crate::error::{Error, Result};

/// Material and model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Drag coefficient.
    pub alpha: f64,
    /// Fluid dynamic viscosity.
    pub nu: f64,
    /// Fluid density.
    pub rho: f64,
    /// Solid density weighting the solid body force.
    pub rho_s: f64,
    pub e1: f64,
    pub e2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Truncation threshold for the divergence.
    pub delta: f64,
    /// Spatial dimension.
    pub dim: usize,
}

impl MaterialParams {
    /// Parameters of the manufactured-solution experiments.
    pub fn manufactured() -> Self {
        Self {
            alpha: 1.0,
            nu: 1.0,
            rho: 1.0,
            rho_s: 0.0,
            e1: 1.0,
            e2: -0.2,
            lambda1: 2.0,
            lambda2: 2.0,
            delta: 0.4,
            dim: 2,
        }
    }

    /// Parameters of the bottom-loaded rectangle experiment with
    /// `lambda1 = lambda2 = lambda`.
    pub fn practical(lambda: f64) -> Self {
        Self {
            alpha: 1.0,
            nu: 0.1,
            rho: 1.0,
            rho_s: 2.0,
            e1: 1.0 / 8.0,
            e2: -3.0 / 64.0,
            lambda1: lambda,
            lambda2: lambda,
            delta: 10.0,
            dim: 2,
        }
    }

    /// Checks positivity of the physical coefficients and the sign
    /// conditions `E1 > 0`, `E2 < 0`, `E1 - d|E2| > 0`.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("nu", self.nu),
            ("rho", self.rho),
            ("delta", self.delta),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.rho_s >= 0.0) {
            return Err(Error::Parameter(format!("rho_s must be non-negative, got {}", self.rho_s)));
        }
        if self.dim != 2 {
            return Err(Error::Parameter(format!("only dimension 2 is supported, got {}", self.dim)));
        }
        if !self.sign_conditions_hold() {
            return Err(Error::Parameter(format!(
                "compliance moduli violate E1 > 0, E2 < 0, E1 - d|E2| > 0 (E1 = {}, E2 = {})",
                self.e1, self.e2
            )));
        }
        if !self.lambda1.is_finite() || !self.lambda2.is_finite() {
            return Err(Error::Parameter("lambda1 and lambda2 must be finite".into()));
        }
        Ok(())
    }

    pub fn sign_conditions_hold(&self) -> bool {
        self.e1 > 0.0 && self.e2 < 0.0 && self.e1 - self.dim as f64 * self.e2.abs() > 0.0
    }
}

/// Clamp to `[-r, r]`.
pub fn truncate(f: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("truncation threshold must be positive, got {r}")));
    }
    Ok(truncate_unchecked(f, r))
}

#[inline]
pub(crate) fn truncate_unchecked(f: f64, r: f64) -> f64 {
    if f.abs() <= r {
        f
    } else {
        r.copysign(f)
    }
}

/// `F(s) = E1 (1 + l1 s) - d |E2| (1 + l2 s)`.
pub fn coeff_f(s: f64, p: &MaterialParams) -> f64 {
    p.e1 * (1.0 + p.lambda1 * s) - p.dim as f64 * p.e2.abs() * (1.0 + p.lambda2 * s)
}

/// Frozen coefficients `(B1, B2)` for a divergence value `s`; the
/// divergence is truncated at `delta` first.
pub fn coeffs_b1b2(s: f64, p: &MaterialParams) -> Result<(f64, f64)> {
    let t = truncate_unchecked(s, p.delta);
    let a = 1.0 + p.lambda1 * t;
    if !(a > 0.0) {
        return Err(Error::ConstitutivePositivity {
            cell: None,
            quantity: "1 + lambda1 T(div u)",
            value: a,
        });
    }
    let f = coeff_f(t, p);
    if !(f > 0.0) {
        return Err(Error::ConstitutivePositivity {
            cell: None,
            quantity: "F(T(div u))",
            value: f,
        });
    }
    Ok((1.0 / a, (1.0 + p.lambda2 * t) / (a * f)))
}

/// Stress from a symmetric 2x2 strain via the truncated stress-explicit law.
pub fn stress(eps: [[f64; 2]; 2], p: &MaterialParams) -> Result<[[f64; 2]; 2]> {
    let tr = eps[0][0] + eps[1][1];
    let (b1, b2) = coeffs_b1b2(tr, p)?;
    let vol = p.e2.abs() / p.e1 * b2 * tr;
    let s = b1 / p.e1;
    Ok([
        [s * eps[0][0] + vol, s * eps[0][1]],
        [s * eps[1][0], s * eps[1][1] + vol],
    ])
}

/// Strain from stress and the trace of strain, evaluating the implicit law
/// directly. Used to check the stress inversion.
pub fn strain_from_stress(t: [[f64; 2]; 2], tr_eps: f64, p: &MaterialParams) -> [[f64; 2]; 2] {
    let a = p.e1 * (1.0 + p.lambda1 * tr_eps);
    let b = p.e2 * (1.0 + p.lambda2 * tr_eps) * (t[0][0] + t[1][1]);
    [[a * t[0][0] + b, a * t[0][1]], [a * t[1][0], a * t[1][1] + b]]
}

/// Uniform bounds on the truncated coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaConstants {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    pub gamma5: f64,
    pub gamma6: f64,
    pub gamma7: f64,
    pub gamma8: f64,
    pub admissible: bool,
}

impl GammaConstants {
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.gamma1,
            self.gamma2,
            self.gamma3,
            self.gamma4,
            self.gamma5,
            self.gamma6,
            self.gamma7,
            self.gamma8,
        ]
    }
}

/// Computes the gamma constants and whether the smallness conditions on
/// `lambda1`, `lambda2` hold for this `delta`. Inadmissibility is reported,
/// not raised.
pub fn validate_smallness(p: &MaterialParams) -> GammaConstants {
    let d = p.dim as f64;
    let l1 = p.lambda1.abs() * p.delta;
    let l2 = p.lambda2.abs() * p.delta;
    let gamma3 = p.e1 + d * p.e2;
    let gamma4 = p.e1 * p.lambda1 + d * p.e2 * p.lambda2;
    let g4d = gamma4.abs() * p.delta;
    GammaConstants {
        gamma1: 1.0 / (1.0 + l1),
        gamma2: 1.0 / (1.0 - l1),
        gamma3,
        gamma4,
        gamma5: 1.0 / (gamma3 + g4d),
        gamma6: 1.0 / (gamma3 - g4d),
        gamma7: 1.0 - l2,
        gamma8: 1.0 + l2,
        admissible: 1.0 - l1 > 0.0 && gamma3 - g4d > 0.0 && 1.0 - l2 > 0.0,
    }
}

/// Lamé parameters to compliance moduli `(E1, E2)`.
///
/// `lambda = 0` yields `E2 = 0`, which fails the strict sign condition;
/// callers validating parameters will reject it.
pub fn lame_to_e(mu: f64, lambda: f64, d: usize) -> Result<(f64, f64)> {
    if !(mu > 0.0) {
        return Err(Error::Parameter(format!("shear modulus must be positive, got {mu}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Parameter(format!("Lame lambda must be non-negative, got {lambda}")));
    }
    let d = d as f64;
    Ok((1.0 / (2.0 * mu), -lambda / (2.0 * mu * (d * lambda + 2.0 * mu))))
}

/// Inverse of [`lame_to_e`]: `(mu, lambda)` from `(E1, E2)`.
pub fn e_to_lame(e1: f64, e2: f64, d: usize) -> (f64, f64) {
    let mu = 1.0 / (2.0 * e1);
    let lambda = -4.0 * mu * mu * e2 / (1.0 + 2.0 * mu * d as f64 * e2);
    (mu, lambda)
}
