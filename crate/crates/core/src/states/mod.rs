//! Free-particle wavefunctions for the Schrödinger, Klein–Gordon and Dirac
//! equations, their inner products, and wave-equation residuals.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod bilinear;
mod quadrature;
mod residual;
mod wavefunction;

pub use bilinear::{current_bilinear, density_bilinear, dirac_bar_gamma, dirac_scalar};
pub use quadrature::{overlap, slice_independence_check, XQuadrature, DEFAULT_OVERLAP_FLOOR};
pub use residual::{wave_equation_residual, DEFAULT_FD_STEP};
pub use wavefunction::{
    GaussianMode, Jet, Mode, MomentumProfile, PacketMode, PlaneMode, Spinor, Wavefunction,
    ZERO_SPINOR,
};

pub const DEFAULT_HERMITE_NODES: usize = 96;
pub const MIN_HERMITE_NODES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("{field} must be positive, got {value}")]
    NonPositiveWidth { field: &'static str, value: f64 },
    #[error("{field} must be finite")]
    NonFinite { field: &'static str },
    #[error("{kind} packets are not available for the {model} model")]
    Unsupported { kind: &'static str, model: &'static str },
    #[error("Gauss-Hermite rule needs at least {MIN_HERMITE_NODES} nodes, got {0}")]
    TooFewNodes(usize),
    #[error("wavefunctions belong to different models ({0} vs {1})")]
    ModelMismatch(&'static str, &'static str),
    #[error("superposition has no components")]
    EmptySuperposition,
}

/// Wave equation and rest mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WaveModel {
    Schrodinger { mass: f64 },
    KleinGordon { mass: f64 },
    Dirac { mass: f64 },
}

impl WaveModel {
    pub fn mass(self) -> f64 {
        match self {
            WaveModel::Schrodinger { mass }
            | WaveModel::KleinGordon { mass }
            | WaveModel::Dirac { mass } => mass,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WaveModel::Schrodinger { .. } => "schrodinger",
            WaveModel::KleinGordon { .. } => "klein-gordon",
            WaveModel::Dirac { .. } => "dirac",
        }
    }

    /// Free dispersion relation (positive frequency for the relativistic models).
    pub fn energy(self, p: f64) -> f64 {
        match self {
            WaveModel::Schrodinger { mass } => p * p / (2.0 * mass),
            WaveModel::KleinGordon { mass } | WaveModel::Dirac { mass } => {
                (p * p + mass * mass).sqrt()
            }
        }
    }

    pub fn components(self) -> usize {
        match self {
            WaveModel::Dirac { .. } => 2,
            _ => 1,
        }
    }

    pub fn same_kind(self, other: WaveModel) -> bool {
        std::mem::discriminant(&self) == std::mem::discriminant(&other)
    }

    pub fn validate(self) -> Result<(), StateError> {
        let m = self.mass();
        if !(m > 0.0) || !m.is_finite() {
            return Err(StateError::NonPositiveMass(m));
        }
        Ok(())
    }
}

/// Positive-energy spinor with `ū u = 1` in the representation
/// `γ⁰ = diag(1, -1)`, `γ¹ = [[0, 1], [-1, 0]]`.
pub fn dirac_spinor(p: f64, mass: f64) -> Spinor {
    let e = (p * p + mass * mass).sqrt();
    let n = (2.0 * mass * (e + mass)).sqrt();
    [C64::new((e + mass) / n, 0.0), C64::new(p / n, 0.0)]
}

fn default_nodes() -> usize {
    DEFAULT_HERMITE_NODES
}

/// State family and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PacketKind {
    /// Closed-form spreading Gaussian, Schrödinger only. `sigma` is the
    /// standard deviation of `|ψ|²` at `t0`; `order` applies `∂_x` that
    /// many times (order 1 is the odd `x·Gaussian` state).
    GaussianPosition {
        x0: f64,
        sigma: f64,
        #[serde(default)]
        p0: f64,
        #[serde(default)]
        t0: f64,
        #[serde(default)]
        order: u32,
    },
    /// Momentum envelope `exp(-(p-p0)²/(4σp²))`, phase-centred at `(t0, x0)`.
    GaussianMomentum {
        p0: f64,
        sigma_p: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        t0: f64,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    /// Unit-amplitude plane wave. A nonzero `energy_offset` breaks the
    /// dispersion relation on purpose.
    PlaneWave {
        p: f64,
        #[serde(default)]
        energy_offset: f64,
    },
    /// Narrow Gaussian standing in for a position eigenstate: at `t_f` its
    /// amplitude is `exp(-(x-x_f)²/(2ε²))/(√(2π)ε)`, integrating to one.
    PositionSurrogate { x_f: f64, t_f: f64, epsilon: f64 },
    Superposition { components: Vec<Component> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    /// `[re, im]`
    pub coefficient: [f64; 2],
    pub state: PacketKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub model: WaveModel,
    pub kind: PacketKind,
}

impl PacketSpec {
    pub fn new(model: WaveModel, kind: PacketKind) -> Self {
        Self { model, kind }
    }
}

fn positive(field: &'static str, value: f64) -> Result<(), StateError> {
    if !value.is_finite() {
        return Err(StateError::NonFinite { field });
    }
    if value <= 0.0 {
        return Err(StateError::NonPositiveWidth { field, value });
    }
    Ok(())
}

fn finite(field: &'static str, value: f64) -> Result<(), StateError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(StateError::NonFinite { field })
    }
}

pub fn build_wavefunction(spec: &PacketSpec) -> Result<Wavefunction, StateError> {
    spec.model.validate()?;
    build_kind(spec.model, &spec.kind)
}

fn build_kind(model: WaveModel, kind: &PacketKind) -> Result<Wavefunction, StateError> {
    match *kind {
        PacketKind::GaussianPosition { x0, sigma, p0, t0, order } => {
            positive("sigma", sigma)?;
            finite("x0", x0)?;
            finite("p0", p0)?;
            finite("t0", t0)?;
            match model {
                WaveModel::Schrodinger { mass } => Ok(schrodinger_gaussian(
                    mass,
                    x0,
                    sigma,
                    p0,
                    t0,
                    order,
                    C64::new(1.0, 0.0),
                )),
                _ => Err(StateError::Unsupported { kind: "gaussian-position", model: model.name() }),
            }
        }
        PacketKind::GaussianMomentum { p0, sigma_p, x0, t0, nodes } => {
            positive("sigma_p", sigma_p)?;
            finite("x0", x0)?;
            finite("p0", p0)?;
            finite("t0", t0)?;
            if nodes < MIN_HERMITE_NODES {
                return Err(StateError::TooFewNodes(nodes));
            }
            match model {
                // the Schrödinger momentum Gaussian is the position Gaussian of width 1/(2σp)
                WaveModel::Schrodinger { mass } => Ok(schrodinger_gaussian(
                    mass,
                    x0,
                    1.0 / (2.0 * sigma_p),
                    p0,
                    t0,
                    0,
                    C64::new(1.0, 0.0),
                )),
                _ => Ok(relativistic_packet(model, p0, sigma_p, x0, t0, nodes)),
            }
        }
        PacketKind::PlaneWave { p, energy_offset } => {
            finite("p", p)?;
            finite("energy_offset", energy_offset)?;
            Ok(Wavefunction::plane_wave(
                model,
                p,
                model.energy(p) + energy_offset,
                C64::new(1.0, 0.0),
            ))
        }
        PacketKind::PositionSurrogate { x_f, t_f, epsilon } => {
            positive("epsilon", epsilon)?;
            finite("x_f", x_f)?;
            finite("t_f", t_f)?;
            match model {
                WaveModel::Schrodinger { mass } => Ok(position_surrogate(mass, x_f, t_f, epsilon)),
                _ => Err(StateError::Unsupported { kind: "position-surrogate", model: model.name() }),
            }
        }
        PacketKind::Superposition { ref components } => {
            if components.is_empty() {
                return Err(StateError::EmptySuperposition);
            }
            let built = components
                .iter()
                .map(|c| {
                    finite("coefficient", c.coefficient[0])?;
                    finite("coefficient", c.coefficient[1])?;
                    Ok((C64::new(c.coefficient[0], c.coefficient[1]), build_kind(model, &c.state)?))
                })
                .collect::<Result<Vec<_>, StateError>>()?;
            let parts: Vec<(C64, &Wavefunction)> = built.iter().map(|(c, w)| (*c, w)).collect();
            Ok(Wavefunction::linear_combination(&parts).expect("shared model"))
        }
    }
}

pub fn schrodinger_gaussian(
    mass: f64,
    x0: f64,
    sigma: f64,
    p0: f64,
    t0: f64,
    order: u32,
    coef: C64,
) -> Wavefunction {
    Wavefunction::from_modes(
        WaveModel::Schrodinger { mass },
        vec![Mode::Gaussian(GaussianMode { mass, x0, sigma, p0, t0, order, coef })],
        1.0,
    )
}

/// Narrow Gaussian at `(t_f, x_f)` whose amplitude integrates to one there.
pub fn position_surrogate(mass: f64, x_f: f64, t_f: f64, epsilon: f64) -> Wavefunction {
    let sigma = epsilon / std::f64::consts::SQRT_2;
    let s2 = sigma * sigma;
    let coef = (2.0 * PI * s2).powf(0.25) / (4.0 * PI * s2).sqrt();
    schrodinger_gaussian(mass, x_f, sigma, 0.0, t_f, 0, C64::new(coef, 0.0))
}

fn relativistic_packet(
    model: WaveModel,
    p0: f64,
    sigma_p: f64,
    x0: f64,
    t0: f64,
    nodes: usize,
) -> Wavefunction {
    let mass = model.mass();
    let rule = GaussHermite::new(NonZeroUsize::new(nodes).expect("checked above"));
    let i = C64::i();
    // p = p0 + 2σp·y turns the envelope into the Hermite weight e^{-y²}
    let mut modes = Vec::with_capacity(nodes);
    let mut norm2 = 0.0;
    for &(y, w) in rule.as_node_weight_pairs() {
        let p = p0 + 2.0 * sigma_p * y;
        let e = model.energy(p);
        let spinor = match model {
            WaveModel::Dirac { .. } => dirac_spinor(p, mass),
            _ => [C64::new(1.0, 0.0), C64::default()],
        };
        let coef = 2.0 * sigma_p * w * (i * (e * t0 - p * x0)).exp();
        modes.push(PlaneMode { p, energy: e, spinor, coef });
        norm2 += 2.0 * PI * 2.0 * sigma_p * w * (-y * y).exp() * e / mass;
    }
    let n = norm2.sqrt();
    let inv = C64::new(1.0 / n, 0.0);
    for node in &mut modes {
        node.coef *= inv;
    }
    let profile = MomentumProfile { p0, sigma_p, x0, t0, coef: inv };
    Wavefunction::from_modes(model, vec![Mode::Packet(PacketMode { profile, nodes: modes })], n)
}
