use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::{dirac_spinor, WaveModel};
use crate::spacetime::Event;

/// Two complex components. Scalar models only use the first.
pub type Spinor = [C64; 2];

pub const ZERO_SPINOR: Spinor = [C64::new(0.0, 0.0), C64::new(0.0, 0.0)];

/// Value and first derivatives `∂_t`, `∂_x` at one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: Spinor,
    pub dt: Spinor,
    pub dx: Spinor,
}

impl Jet {
    pub const ZERO: Jet = Jet { value: ZERO_SPINOR, dt: ZERO_SPINOR, dx: ZERO_SPINOR };

    /// Covariant gradient `∂_α`.
    pub fn lower_grad(&self) -> [Spinor; 2] {
        [self.dt, self.dx]
    }

    /// Contravariant gradient `∂^α = (∂_t, -∂_x)`.
    pub fn upper_grad(&self) -> [Spinor; 2] {
        [self.dt, scale(self.dx, C64::new(-1.0, 0.0))]
    }

    pub fn conj(&self) -> Jet {
        Jet { value: conj(self.value), dt: conj(self.dt), dx: conj(self.dx) }
    }

    fn accumulate(&mut self, other: &Jet) {
        for c in 0..2 {
            self.value[c] += other.value[c];
            self.dt[c] += other.dt[c];
            self.dx[c] += other.dx[c];
        }
    }
}

pub(crate) fn scale(s: Spinor, c: C64) -> Spinor {
    [s[0] * c, s[1] * c]
}

pub(crate) fn conj(s: Spinor) -> Spinor {
    [s[0].conj(), s[1].conj()]
}

/// Freely spreading Schrödinger Gaussian, differentiated `order` times in x.
///
/// At `t = t0` the undifferentiated packet is centred on `x0` with
/// `|ψ|²` of standard deviation `sigma` and unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMode {
    pub mass: f64,
    pub x0: f64,
    pub sigma: f64,
    pub p0: f64,
    pub t0: f64,
    pub order: u32,
    pub coef: C64,
}

impl GaussianMode {
    fn jet(&self, e: Event) -> Jet {
        let m = self.mass;
        let s2 = self.sigma * self.sigma;
        let tau = e.t - self.t0;
        let alpha = C64::new(s2, tau / (2.0 * m));
        let y = e.x - self.x0 - self.p0 * tau / m;
        let i = C64::i();
        let phase = -y * y / (4.0 * alpha) + i * self.p0 * (e.x - self.x0)
            - i * self.p0 * self.p0 * tau / (2.0 * m);
        let psi = (2.0 * PI * s2).powf(-0.25) * (s2 / alpha).sqrt() * phase.exp() * self.coef;

        // ∂_x^n ψ = ψ·H_n with H_{n+1} = g·H_n + n·g'·H_{n-1}
        let g = -y / (2.0 * alpha) + i * self.p0;
        let gp = -1.0 / (2.0 * alpha);
        let n = self.order as usize;
        let mut h = vec![C64::new(1.0, 0.0), g];
        for k in 1..=n + 1 {
            let next = g * h[k] + (k as f64) * gp * h[k - 1];
            h.push(next);
        }
        let value = psi * h[n];
        let dx = psi * h[n + 1];
        let dt = i / (2.0 * m) * psi * h[n + 2];
        Jet {
            value: [value, C64::default()],
            dt: [dt, C64::default()],
            dx: [dx, C64::default()],
        }
    }

    /// `⟨φ_q|ψ⟩` against `φ_q = e^{-i(E_q t - q x)}/√(2π)`.
    fn momentum_amplitude(&self, q: f64) -> C64 {
        let i = C64::i();
        let s2 = self.sigma * self.sigma;
        let e_q = q * q / (2.0 * self.mass);
        let base = (2.0 * s2 / PI).powf(0.25)
            * (-s2 * (q - self.p0).powi(2)).exp()
            * (i * (e_q * self.t0 - q * self.x0)).exp();
        self.coef * (i * q).powu(self.order) * base
    }
}

/// `coef · spinor · e^{-i(E t - p x)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMode {
    pub p: f64,
    pub energy: f64,
    pub spinor: Spinor,
    pub coef: C64,
}

impl PlaneMode {
    fn jet(&self, e: Event) -> Jet {
        let i = C64::i();
        let phase = (-i * (self.energy * e.t - self.p * e.x)).exp() * self.coef;
        let value = scale(self.spinor, phase);
        Jet {
            value,
            dt: scale(value, -i * self.energy),
            dx: scale(value, i * self.p),
        }
    }
}

/// Envelope `a(p) = exp(-(p-p0)²/(4σp²))` of a relativistic momentum packet.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumProfile {
    pub p0: f64,
    pub sigma_p: f64,
    pub x0: f64,
    pub t0: f64,
    pub coef: C64,
}

impl MomentumProfile {
    pub fn envelope(&self, p: f64) -> f64 {
        (-(p - self.p0).powi(2) / (4.0 * self.sigma_p * self.sigma_p)).exp()
    }
}

/// Positive-frequency packet stored as its Gauss–Hermite plane-wave nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketMode {
    pub profile: MomentumProfile,
    pub nodes: Vec<PlaneMode>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Gaussian(GaussianMode),
    Plane(PlaneMode),
    Packet(PacketMode),
}

impl Mode {
    fn jet(&self, e: Event) -> Jet {
        match self {
            Mode::Gaussian(g) => g.jet(e),
            Mode::Plane(p) => p.jet(e),
            Mode::Packet(pk) => {
                let mut acc = Jet::ZERO;
                for node in &pk.nodes {
                    acc.accumulate(&node.jet(e));
                }
                acc
            }
        }
    }

    fn scaled(&self, c: C64) -> Mode {
        match self {
            Mode::Gaussian(g) => Mode::Gaussian(GaussianMode { coef: g.coef * c, ..g.clone() }),
            Mode::Plane(p) => Mode::Plane(PlaneMode { coef: p.coef * c, ..p.clone() }),
            Mode::Packet(pk) => Mode::Packet(PacketMode {
                profile: MomentumProfile { coef: pk.profile.coef * c, ..pk.profile.clone() },
                nodes: pk
                    .nodes
                    .iter()
                    .map(|n| PlaneMode { coef: n.coef * c, ..n.clone() })
                    .collect(),
            }),
        }
    }
}

/// A free solution of one wave model, evaluated analytically.
///
/// Internally a linear combination of modes; every mode is an exact
/// solution, so any combination is one too.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    model: WaveModel,
    modes: Vec<Mode>,
    normalization: f64,
}

impl Wavefunction {
    pub(crate) fn from_modes(model: WaveModel, modes: Vec<Mode>, normalization: f64) -> Self {
        Self { model, modes, normalization }
    }

    /// Exact plane wave with an explicit energy, which may violate the
    /// dispersion relation.
    pub fn plane_wave(model: WaveModel, p: f64, energy: f64, coef: C64) -> Self {
        let spinor = match model {
            WaveModel::Dirac { mass } => dirac_spinor(p, mass),
            _ => [C64::new(1.0, 0.0), C64::default()],
        };
        Self::from_modes(model, vec![Mode::Plane(PlaneMode { p, energy, spinor, coef })], 1.0)
    }

    /// Plane wave with unit ĵ⁰ norm in the momentum-delta sense:
    /// `⟨φ_q|φ_p⟩ = δ(p - q)`.
    pub fn normalized_plane_wave(model: WaveModel, p: f64) -> Self {
        let e = model.energy(p);
        let norm = match model {
            WaveModel::Schrodinger { .. } => (2.0 * PI).sqrt(),
            WaveModel::KleinGordon { mass } | WaveModel::Dirac { mass } => {
                (2.0 * PI * e / mass).sqrt()
            }
        };
        Self::plane_wave(model, p, e, C64::new(1.0 / norm, 0.0))
    }

    pub fn model(&self) -> WaveModel {
        self.model
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Constant the raw construction was divided by to reach unit norm.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Number of meaningful components: 2 for Dirac, 1 otherwise.
    pub fn components(&self) -> usize {
        self.model.components()
    }

    pub fn jet(&self, e: Event) -> Jet {
        let mut acc = Jet::ZERO;
        for mode in &self.modes {
            acc.accumulate(&mode.jet(e));
        }
        acc
    }

    pub fn evaluate(&self, e: Event) -> Spinor {
        self.jet(e).value
    }

    /// Covariant gradient `∂_α ψ`, analytic for every mode type.
    pub fn gradient(&self, e: Event) -> [Spinor; 2] {
        self.jet(e).lower_grad()
    }

    pub fn scaled(&self, c: C64) -> Wavefunction {
        Wavefunction {
            model: self.model,
            modes: self.modes.iter().map(|m| m.scaled(c)).collect(),
            normalization: self.normalization,
        }
    }

    /// `Σ c_k ψ_k`. All parts must share the model of the first one.
    pub fn linear_combination(parts: &[(C64, &Wavefunction)]) -> Option<Wavefunction> {
        let model = parts.first()?.1.model;
        if parts.iter().any(|(_, w)| w.model != model) {
            return None;
        }
        let modes = parts
            .iter()
            .flat_map(|(c, w)| w.modes.iter().map(move |m| m.scaled(*c)))
            .collect();
        Some(Wavefunction { model, modes, normalization: 1.0 })
    }

    /// `⟨φ_q|ψ⟩` against the normalized plane wave of momentum `q`.
    ///
    /// Available when every mode is square integrable with a closed-form
    /// momentum representation; `None` when a bare plane wave is present.
    pub fn momentum_amplitude(&self, q: f64) -> Option<C64> {
        let mut acc = C64::default();
        for mode in &self.modes {
            match mode {
                Mode::Gaussian(g) => acc += g.momentum_amplitude(q),
                Mode::Packet(pk) => {
                    let m = self.model.mass();
                    let e_q = self.model.energy(q);
                    let prof = &pk.profile;
                    let phase = (C64::i() * (e_q * prof.t0 - q * prof.x0)).exp();
                    acc += prof.coef * (2.0 * PI * e_q / m).sqrt() * prof.envelope(q) * phase;
                }
                Mode::Plane(_) => return None,
            }
        }
        Some(acc)
    }
}
