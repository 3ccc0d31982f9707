use num_complex::Complex64 as C64;

use super::bilinear::gamma;
use super::{Spinor, WaveModel, Wavefunction};
use crate::spacetime::Event;

pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Modulus of the free wave operator applied to `psi` at `e`, with all
/// derivatives taken by central differences of step `h`. Spinors report the
/// larger component.
///
/// Schrödinger: `i∂_t + ∂_x²/2m`. Klein–Gordon: `∂_t² - ∂_x² + m²`.
/// Dirac: `iγ⁰∂_t + iγ¹∂_x - m`.
pub fn wave_equation_residual(psi: &Wavefunction, e: Event, h: f64) -> f64 {
    assert!(h > 0.0, "finite-difference step must be positive");
    let at = |dt: f64, dx: f64| psi.evaluate(Event::new(e.t + dt, e.x + dx));
    let c = at(0.0, 0.0);
    let (tp, tm) = (at(h, 0.0), at(-h, 0.0));
    let (xp, xm) = (at(0.0, h), at(0.0, -h));
    let i = C64::i();
    let mut out: Spinor = [C64::default(); 2];
    match psi.model() {
        WaveModel::Schrodinger { mass } => {
            let d_t = (tp[0] - tm[0]) / (2.0 * h);
            let d_xx = (xp[0] - 2.0 * c[0] + xm[0]) / (h * h);
            out[0] = i * d_t + d_xx / (2.0 * mass);
        }
        WaveModel::KleinGordon { mass } => {
            let d_tt = (tp[0] - 2.0 * c[0] + tm[0]) / (h * h);
            let d_xx = (xp[0] - 2.0 * c[0] + xm[0]) / (h * h);
            out[0] = d_tt - d_xx + mass * mass * c[0];
        }
        WaveModel::Dirac { mass } => {
            let d_t: Spinor = [(tp[0] - tm[0]) / (2.0 * h), (tp[1] - tm[1]) / (2.0 * h)];
            let d_x: Spinor = [(xp[0] - xm[0]) / (2.0 * h), (xp[1] - xm[1]) / (2.0 * h)];
            let g0 = gamma(0, d_t);
            let g1 = gamma(1, d_x);
            for k in 0..2 {
                out[k] = i * (g0[k] + g1[k]) - mass * c[k];
            }
        }
    }
    out[0].norm().max(out[1].norm())
}
