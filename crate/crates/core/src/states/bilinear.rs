use num_complex::Complex64 as C64;

use super::{Jet, Spinor, WaveModel};

/// `γ^μ s` with `γ⁰ = diag(1, -1)` and `γ¹ = [[0, 1], [-1, 0]]`.
pub(crate) fn gamma(mu: usize, s: Spinor) -> Spinor {
    match mu {
        0 => [s[0], -s[1]],
        _ => [s[1], -s[0]],
    }
}

/// `ψ̄_f γ^μ ψ_i = ψ_f† γ⁰γ^μ ψ_i`. `γ⁰γ⁰ = 1` and `γ⁰γ¹ = σ_x`.
pub fn dirac_bar_gamma(f: Spinor, mu: usize, i: Spinor) -> C64 {
    match mu {
        0 => f[0].conj() * i[0] + f[1].conj() * i[1],
        _ => f[0].conj() * i[1] + f[1].conj() * i[0],
    }
}

/// `ψ̄_f ψ_i`.
pub fn dirac_scalar(f: Spinor, i: Spinor) -> C64 {
    f[0].conj() * i[0] - f[1].conj() * i[1]
}

/// Complex current bilinear `ψ_f* ĵ^α ψ_i`, contravariant index.
///
/// Klein–Gordon uses `(i/2m)(ψ_f* ∂^α ψ_i - (∂^α ψ_f*) ψ_i)`, which gives
/// `+p^α/m` for a positive-frequency plane wave. The Schrödinger spatial
/// part is `(1/2mi)(ψ_f* ∂_x ψ_i - (∂_x ψ_f*) ψ_i)`.
pub fn current_bilinear(model: WaveModel, f: &Jet, i: &Jet) -> [C64; 2] {
    let (fv, iv) = (f.value[0], i.value[0]);
    match model {
        WaveModel::Schrodinger { mass } => {
            let spatial = (fv.conj() * i.dx[0] - f.dx[0].conj() * iv) / C64::new(0.0, 2.0 * mass);
            [fv.conj() * iv, spatial]
        }
        WaveModel::KleinGordon { mass } => {
            let k = C64::new(0.0, 1.0 / (2.0 * mass));
            let time = k * (fv.conj() * i.dt[0] - f.dt[0].conj() * iv);
            let space = k * (-fv.conj() * i.dx[0] + f.dx[0].conj() * iv);
            [time, space]
        }
        WaveModel::Dirac { .. } => [
            dirac_bar_gamma(f.value, 0, i.value),
            dirac_bar_gamma(f.value, 1, i.value),
        ],
    }
}

/// Time component of [`current_bilinear`]: the integrand of the inner product.
pub fn density_bilinear(model: WaveModel, f: &Jet, i: &Jet) -> C64 {
    match model {
        WaveModel::Schrodinger { .. } => f.value[0].conj() * i.value[0],
        WaveModel::KleinGordon { mass } => {
            C64::new(0.0, 1.0 / (2.0 * mass))
                * (f.value[0].conj() * i.dt[0] - f.dt[0].conj() * i.value[0])
        }
        WaveModel::Dirac { .. } => dirac_bar_gamma(f.value, 0, i.value),
    }
}
