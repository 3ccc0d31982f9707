use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{density_bilinear, StateError, Wavefunction};
use crate::spacetime::Event;

/// Below this modulus an overlap is too small to condition on.
pub const DEFAULT_OVERLAP_FLOOR: f64 = 1e-8;

/// Composite trapezoid rule on `n` equally spaced points of `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XQuadrature {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl XQuadrature {
    pub fn new(a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 2 && b > a, "quadrature needs n >= 2 and b > a");
        Self { a, b, n }
    }

    /// Symmetric window around `center` with spacing at most `max_spacing`.
    pub fn around(center: f64, half_width: f64, max_spacing: f64) -> Self {
        let n = (2.0 * half_width / max_spacing).ceil() as usize + 1;
        Self::new(center - half_width, center + half_width, n.max(2))
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.n - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.n {
            self.b
        } else {
            self.a + k as f64 * self.spacing()
        }
    }

    pub fn weight(&self, k: usize) -> f64 {
        let h = self.spacing();
        if k == 0 || k + 1 == self.n {
            0.5 * h
        } else {
            h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n).map(move |k| (self.node(k), self.weight(k)))
    }

    pub fn integrate<F: FnMut(f64) -> C64>(&self, mut f: F) -> C64 {
        self.nodes().fold(C64::default(), |acc, (x, w)| acc + f(x) * w)
    }
}

/// `⟨f|i⟩ = ∫ ψ_f* ĵ⁰ ψ_i dx` on the slice `t = t_slice`.
pub fn overlap(
    psi_f: &Wavefunction,
    psi_i: &Wavefunction,
    t_slice: f64,
    quad: &XQuadrature,
) -> Result<C64, StateError> {
    let model = psi_i.model();
    if psi_f.model() != model {
        return Err(StateError::ModelMismatch(psi_f.model().name(), model.name()));
    }
    let value = quad.integrate(|x| {
        let e = Event::new(t_slice, x);
        density_bilinear(model, &psi_f.jet(e), &psi_i.jet(e))
    });
    if value.norm() < DEFAULT_OVERLAP_FLOOR {
        log::warn!("overlap modulus {:.3e} is below the floor {DEFAULT_OVERLAP_FLOOR:e}", value.norm());
    }
    Ok(value)
}

/// `|⟨f|i⟩(t1) - ⟨f|i⟩(t2)|`.
pub fn slice_independence_check(
    psi_f: &Wavefunction,
    psi_i: &Wavefunction,
    t1: f64,
    t2: f64,
    quad: &XQuadrature,
) -> Result<f64, StateError> {
    let a = overlap(psi_f, psi_i, t1, quad)?;
    let b = overlap(psi_f, psi_i, t2, quad)?;
    Ok((a - b).norm())
}
