//! Problem parameters and the Gaussian constants derived from them.
//!
//! Each input mode carries the unnormalized squeezed vacuum
//! `exp(α/2 · a†²)|0⟩` and loses photons through `a† → c·a† + s·b†` with
//! `c² + s² = 1`. Linearizing both squeezing exponents turns the reduced
//! single-mode state into an average over a zero-mean Gaussian pair
//! `(ξ, ξ̃)` with covariance `Σ`. That pair is split as `ξ = ξ₀ + χ`,
//! `ξ̃ = ξ₀ + χ̃`: the shared part `ξ₀` is sampled, while the fluctuations
//! `(χ, χ̃)` (variance `var_chi`, covariance `h`) are integrated analytically.
//!
//! All closed forms below are written with `α` in the numerator so that the
//! vacuum input `α = 0` needs no special casing.

use crate::error::{domain, Result};

/// Immutable problem parameters with every derived distribution constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    alpha: f64,
    c: f64,
    s: f64,
    sigma11: f64,
    sigma12: f64,
    var_xi0: f64,
    var_chi: f64,
    h: f64,
    epsilon: f64,
    prefactor_per_mode: f64,
    norm_per_mode: f64,
    scale_per_mode: f64,
}

/// Builds the parameters for squeezing `alpha` and loss level `loss_s2 = s²`,
/// with `h` fixed at the value minimizing the perturbation parameter.
pub fn derive_params(alpha: f64, loss_s2: f64) -> Result<ModelParams> {
    ModelParams::new(alpha, loss_s2)
}

impl ModelParams {
    pub fn new(alpha: f64, loss_s2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(domain("alpha", alpha, "0 <= alpha < 1"));
        }
        if !(0.0..=1.0).contains(&loss_s2) {
            return Err(domain("loss_s2", loss_s2, "0 <= loss_s2 <= 1"));
        }
        let h = optimal_h(alpha, loss_s2);
        Ok(Self::assemble(alpha, loss_s2, h))
    }

    /// Replaces `h` by any value in [`Self::h_bounds`]. The optimum is the
    /// lower end of that interval.
    pub fn with_h(self, h: f64) -> Result<Self> {
        let (lo, hi) = self.h_bounds();
        let tol = 1e-15 * (1.0 + lo.abs().max(hi.abs()));
        if !(h >= lo - tol && h <= hi + tol) {
            return Err(domain("h", h, "within [-(1/2)/(1/alpha + s^2), s^2/(1/alpha^2 - s^4)]"));
        }
        Ok(Self::assemble(self.alpha, self.loss_s2(), h.clamp(lo, hi)))
    }

    fn assemble(alpha: f64, loss_s2: f64, h: f64) -> Self {
        let s2 = loss_s2;
        let c2 = 1.0 - s2;
        let det_scale = 1.0 - alpha * alpha * s2 * s2;
        let sigma11 = alpha / det_scale;
        let sigma12 = alpha * alpha * s2 / det_scale;
        let var_chi = alpha / (1.0 + alpha * s2) + h;
        let var_xi0 = (sigma12 - h).max(0.0);
        Self {
            alpha,
            c: c2.sqrt(),
            s: s2.sqrt(),
            sigma11,
            sigma12,
            var_xi0,
            var_chi,
            h,
            epsilon: c2 * var_chi.max(h.abs()),
            prefactor_per_mode: 1.0 / det_scale.sqrt(),
            norm_per_mode: (1.0 - alpha * alpha).sqrt(),
            scale_per_mode: ((1.0 - alpha * alpha) / det_scale).sqrt(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Amplitude transmission `c`.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Loss amplitude `s`.
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn transmission_c2(&self) -> f64 {
        self.c * self.c
    }

    pub fn loss_s2(&self) -> f64 {
        self.s * self.s
    }

    /// Per-mode covariance of `(ξ, ξ̃)`.
    pub fn sigma(&self) -> [[f64; 2]; 2] {
        [[self.sigma11, self.sigma12], [self.sigma12, self.sigma11]]
    }

    pub fn det_sigma(&self) -> f64 {
        self.sigma11 * self.sigma11 - self.sigma12 * self.sigma12
    }

    /// Variance of the sampled component `ξ₀`.
    pub fn var_xi0(&self) -> f64 {
        self.var_xi0
    }

    /// Variance of `χ` (and of `χ̃`).
    pub fn var_chi(&self) -> f64 {
        self.var_chi
    }

    /// Covariance of `(χ, χ̃)`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Admissible interval for `h`: the lower end keeps `Γ` positive
    /// semi-definite, the upper end keeps `var_xi0 ≥ 0`.
    pub fn h_bounds(&self) -> (f64, f64) {
        (optimal_h(self.alpha, self.loss_s2()), self.sigma12)
    }

    /// Eigenvalues of the covariance `Γ` of `(ξ₀, χ, χ̃)`.
    pub fn gamma_eigenvalues(&self) -> [f64; 3] {
        [self.var_xi0, self.var_chi - self.h, self.var_chi + self.h]
    }

    /// `ε = c² · max(var_chi, |h|)`; small values mean fast Taylor convergence.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `(det Σ)^{1/2} / α = 1 / sqrt(1 − α² s⁴)`.
    pub fn prefactor_per_mode(&self) -> f64 {
        self.prefactor_per_mode
    }

    /// `sqrt(1 − α²)`, the normalization of the squeezed input state.
    pub fn norm_per_mode(&self) -> f64 {
        self.norm_per_mode
    }

    /// `prefactor_per_mode · norm_per_mode`, evaluated as a single square
    /// root so that full loss gives exactly 1.
    pub fn scale_per_mode(&self) -> f64 {
        self.scale_per_mode
    }

    /// Overall multiplier `scale_per_mode^N` applied to every probability.
    pub fn scale(&self, modes: usize) -> f64 {
        self.scale_per_mode.powi(modes as i32)
    }
}

/// `h = −½ / (1/α + s²)`: the value making `var_chi = |h|`.
fn optimal_h(alpha: f64, s2: f64) -> f64 {
    -0.5 * alpha / (1.0 + alpha * s2)
}

/// Perturbation parameter at the optimal `h`: `½ c² / (1/α + s²)`.
pub fn optimal_epsilon(alpha: f64, loss_s2: f64) -> f64 {
    0.5 * (1.0 - loss_s2) * alpha / (1.0 + alpha * loss_s2)
}

/// Squeezing and perturbation parameter from a reported mean photon number
/// per mode and collection efficiency `c²`.
///
/// Uses `⟨n⟩ = sinh² r` and `α = tanh r`.
pub fn params_from_experiment(mean_photons_per_mode: f64, transmission_c2: f64) -> Result<(f64, f64)> {
    if !(mean_photons_per_mode >= 0.0 && mean_photons_per_mode.is_finite()) {
        return Err(domain(
            "mean_photons_per_mode",
            mean_photons_per_mode,
            "finite and >= 0",
        ));
    }
    if !(0.0..=1.0).contains(&transmission_c2) {
        return Err(domain("transmission_c2", transmission_c2, "0 <= c^2 <= 1"));
    }
    let r = mean_photons_per_mode.sqrt().asinh();
    let alpha = r.tanh();
    Ok((alpha, optimal_epsilon(alpha, 1.0 - transmission_c2)))
}
