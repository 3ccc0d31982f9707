//! Independent reference evaluators for tests. Nothing here calls into the
//! closed-form mode evaluators.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

/// Free Schrödinger Gaussian and its x-derivative by direct momentum-space
/// integration: `ψ(t,x) = (2π)^{-1/2} ∫ A(p) e^{i(px - p²t/2m)} dp`.
pub struct MomentumSpaceGaussian {
    pub mass: f64,
    pub x0: f64,
    pub sigma: f64,
    pub p0: f64,
    pub t0: f64,
    pub coef: f64,
}

impl MomentumSpaceGaussian {
    fn amplitude(&self, p: f64) -> C64 {
        let i = C64::i();
        let s2 = self.sigma * self.sigma;
        (2.0 * s2 / PI).powf(0.25)
            * (-s2 * (p - self.p0).powi(2)).exp()
            * (i * (-p * self.x0 + p * p * self.t0 / (2.0 * self.mass))).exp()
            * self.coef
    }

    /// `(ψ, ∂_x ψ)` at `(t, x)`.
    pub fn eval(&self, t: f64, x: f64) -> (C64, C64) {
        let half = 14.0 / self.sigma;
        let n = 40_000;
        let dp = 2.0 * half / n as f64;
        let i = C64::i();
        let mut v = C64::default();
        let mut d = C64::default();
        for k in 0..=n {
            let p = self.p0 - half + k as f64 * dp;
            let w = if k == 0 || k == n { 0.5 * dp } else { dp };
            let term = self.amplitude(p) * (i * (p * x - p * p * t / (2.0 * self.mass))).exp() * w;
            v += term;
            d += term * i * p;
        }
        let s = 1.0 / (2.0 * PI).sqrt();
        (v * s, d * s)
    }

    /// `⟨self|other⟩` from the momentum amplitudes.
    pub fn overlap_with(&self, other: &MomentumSpaceGaussian) -> C64 {
        let half = 14.0 / self.sigma.min(other.sigma);
        let n = 40_000;
        let dp = 2.0 * half / n as f64;
        let centre = 0.5 * (self.p0 + other.p0);
        let mut acc = C64::default();
        for k in 0..=n {
            let p = centre - half + k as f64 * dp;
            let w = if k == 0 || k == n { 0.5 * dp } else { dp };
            acc += self.amplitude(p).conj() * other.amplitude(p) * w;
        }
        acc
    }
}
