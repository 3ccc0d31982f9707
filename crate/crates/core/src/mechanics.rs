//! Particle and field Lagrangians, the phase-symmetry current, and the
//! canonical energy-momentum tensor.
//!
//! Field Lagrangians are normalized by the overlap `c = ⟨f|i⟩`:
//!
//! * Klein–Gordon: `L = (1/2m) Re[(∂_αψ_f* ∂^αψ_i - m² ψ_f* ψ_i) / c]`
//! * Dirac: `L = Re[(i ψ̄_f γ^α ∂_αψ_i - m ψ̄_f ψ_i) / c]`
//!
//! Both are evaluated through a holomorphic extension in which `ψ_i`,
//! `ψ_f`, `ψ_i*` and `ψ_f*` are independent slots. The canonical
//! quantities are built from the slot derivatives
//! `Π_φ^β = ∂L/∂(∂_β φ)`:
//!
//! * `J^β = -i Σ_φ q_φ Π_φ^β φ` with `q = +1` for `ψ_i, ψ_f` and `-1` for
//!   their conjugates,
//! * `T^{αβ} = Σ_φ ∂^α φ Π_φ^β - g^{αβ} L`.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::currents::{rest_density, CurrentField, CurrentSource, FinalFamily};
use crate::spacetime::{causal_class, minkowski_dot, CausalClass, Event, FourVector};
use crate::states::{dirac_bar_gamma, dirac_scalar, Jet, Spinor, WaveModel, Wavefunction};
use crate::trajectories::{checkable_indices, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanicsError {
    #[error("four-velocity is null")]
    NullVelocity,
    #[error("current is null")]
    NullCurrent,
    #[error("no field Lagrangian for the {0} model")]
    UnsupportedModel(&'static str),
}

/// Velocity and current of one particle at one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleKinematics {
    pub u: FourVector,
    pub j: FourVector,
    pub rho0: f64,
}

impl ParticleKinematics {
    pub fn new(u: FourVector, j: FourVector) -> Self {
        Self { u, j, rho0: rest_density(j) }
    }

    /// Velocity pinned to the current.
    pub fn guided(j: FourVector) -> Self {
        let rho0 = rest_density(j);
        Self { u: j * (1.0 / rho0), j, rho0 }
    }

    pub fn u_class(&self) -> CausalClass {
        causal_class(self.u, 0.0)
    }

    pub fn j_class(&self) -> CausalClass {
        causal_class(self.j, 0.0)
    }
}

/// `∓ρ₀|u·u|^(1/2) + u·j`, upper sign for timelike `u`.
pub fn particle_lagrangian(k: &ParticleKinematics) -> Result<f64, MechanicsError> {
    let uu = k.u.square();
    if uu == 0.0 {
        return Err(MechanicsError::NullVelocity);
    }
    Ok(-uu.signum() * k.rho0 * uu.abs().sqrt() + minkowski_dot(k.u, k.j))
}

/// `∂L/∂u^α = j_α - ρ₀ u_α / |u·u|^(1/2)`, covariant components.
pub fn dl_du(k: &ParticleKinematics) -> Result<[f64; 2], MechanicsError> {
    let uu = k.u.square();
    if uu == 0.0 {
        return Err(MechanicsError::NullVelocity);
    }
    let s = k.rho0 / uu.abs().sqrt();
    let (j, u) = (k.j.lower(), k.u.lower());
    Ok([j[0] - s * u[0], j[1] - s * u[1]])
}

/// `∂L/∂j^β = u_β - sgn(u·u) sgn(j·j) |u·u|^(1/2) j_β / ρ₀`, covariant
/// components. Vanishes when `u = j/ρ₀` in either causal class.
pub fn dl_dj(k: &ParticleKinematics) -> Result<[f64; 2], MechanicsError> {
    let (uu, jj) = (k.u.square(), k.j.square());
    if uu == 0.0 {
        return Err(MechanicsError::NullVelocity);
    }
    if jj == 0.0 {
        return Err(MechanicsError::NullCurrent);
    }
    let s = uu.signum() * jj.signum() * uu.abs().sqrt() / k.rho0;
    let (j, u) = (k.j.lower(), k.u.lower());
    Ok([u[0] - s * j[0], u[1] - s * j[1]])
}

/// Generalized momentum `-∂L/∂u^α = ρ₀u_α/|u·u|^(1/2) - j_α`, raised.
pub fn generalized_momentum(k: &ParticleKinematics) -> Result<FourVector, MechanicsError> {
    let d = dl_du(k)?;
    Ok(FourVector::raise([-d[0], -d[1]]))
}

const I: usize = 0;
const F: usize = 1;
const IC: usize = 2;
const FC: usize = 3;
const CHARGE: [f64; 4] = [1.0, 1.0, -1.0, -1.0];

/// Values and covariant gradients of the four independent field slots
/// `ψ_i, ψ_f, ψ_i*, ψ_f*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSlots {
    pub value: [Spinor; 4],
    pub grad: [[Spinor; 2]; 4],
}

impl FieldSlots {
    pub fn from_jets(f: &Jet, i: &Jet) -> Self {
        let (ic, fc) = (i.conj(), f.conj());
        Self {
            value: [i.value, f.value, ic.value, fc.value],
            grad: [i.lower_grad(), f.lower_grad(), ic.lower_grad(), fc.lower_grad()],
        }
    }

    fn upper(&self, slot: usize, alpha: usize) -> Spinor {
        let g = self.grad[slot][alpha];
        if alpha == 0 {
            g
        } else {
            [-g[0], -g[1]]
        }
    }
}

/// `r^T γ⁰γ^μ s` without conjugating `r`.
fn plain_bar_gamma(r: Spinor, mu: usize, s: Spinor) -> C64 {
    match mu {
        0 => r[0] * s[0] + r[1] * s[1],
        _ => r[0] * s[1] + r[1] * s[0],
    }
}

fn plain_scalar(r: Spinor, s: Spinor) -> C64 {
    r[0] * s[0] - r[1] * s[1]
}

fn field_mass(model: WaveModel) -> Result<f64, MechanicsError> {
    match model {
        WaveModel::KleinGordon { mass } | WaveModel::Dirac { mass } => Ok(mass),
        WaveModel::Schrodinger { .. } => Err(MechanicsError::UnsupportedModel(model.name())),
    }
}

/// Holomorphic extension of the field Lagrangian. Equals the real density
/// when the conjugate slots hold the conjugates of the others.
pub fn holomorphic_lagrangian(model: WaveModel, c: C64, s: &FieldSlots) -> Result<C64, MechanicsError> {
    let m = field_mass(model)?;
    let (v, g) = (&s.value, &s.grad);
    Ok(match model {
        WaveModel::KleinGordon { .. } => {
            let dot = |a: usize, b: usize| g[a][0][0] * g[b][0][0] - g[a][1][0] * g[b][1][0];
            let x = dot(FC, I) - m * m * v[FC][0] * v[I][0];
            let y = dot(F, IC) - m * m * v[F][0] * v[IC][0];
            (x / c + y / c.conj()) / (4.0 * m)
        }
        _ => {
            let i = C64::i();
            let x = i * (plain_bar_gamma(v[FC], 0, g[I][0]) + plain_bar_gamma(v[FC], 1, g[I][1]))
                - m * plain_scalar(v[FC], v[I]);
            let y = -i * (plain_bar_gamma(g[IC][0], 0, v[F]) + plain_bar_gamma(g[IC][1], 1, v[F]))
                - m * plain_scalar(v[IC], v[F]);
            (x / c + y / c.conj()) / 2.0
        }
    })
}

/// `Π_φ^β = ∂L/∂(∂_β φ)` for each slot, indexed `[slot][β]`.
pub fn derivative_slots(model: WaveModel, c: C64, s: &FieldSlots) -> Result<[[Spinor; 2]; 4], MechanicsError> {
    let m = field_mass(model)?;
    let zero = [C64::default(); 2];
    let mut out = [[zero; 2]; 4];
    match model {
        WaveModel::KleinGordon { .. } => {
            let k = 1.0 / (4.0 * m);
            for beta in 0..2 {
                out[I][beta][0] = s.upper(FC, beta)[0] * k / c;
                out[F][beta][0] = s.upper(IC, beta)[0] * k / c.conj();
                out[IC][beta][0] = s.upper(F, beta)[0] * k / c.conj();
                out[FC][beta][0] = s.upper(I, beta)[0] * k / c;
            }
        }
        _ => {
            let ki = C64::new(0.0, 0.5) / c;
            let kc = C64::new(0.0, -0.5) / c.conj();
            let (fc, f) = (s.value[FC], s.value[F]);
            // (γ⁰γ^β) is real symmetric: identity for β = 0, σ_x for β = 1
            out[I][0] = [fc[0] * ki, fc[1] * ki];
            out[I][1] = [fc[1] * ki, fc[0] * ki];
            out[IC][0] = [f[0] * kc, f[1] * kc];
            out[IC][1] = [f[1] * kc, f[0] * kc];
        }
    }
    Ok(out)
}

/// Phase-symmetry current from the derivative slots, before the real part.
pub fn noether_from_slots(model: WaveModel, c: C64, s: &FieldSlots) -> Result<[C64; 2], MechanicsError> {
    let pi = derivative_slots(model, c, s)?;
    let mut j = [C64::default(); 2];
    for (beta, jb) in j.iter_mut().enumerate() {
        for slot in 0..4 {
            for a in 0..model.components() {
                *jb += -C64::i() * CHARGE[slot] * pi[slot][beta][a] * s.value[slot][a];
            }
        }
    }
    Ok(j)
}

/// Canonical tensor from the derivative slots, `[α][β]`, before the real part.
pub fn tensor_from_slots(model: WaveModel, c: C64, s: &FieldSlots) -> Result<[[C64; 2]; 2], MechanicsError> {
    let pi = derivative_slots(model, c, s)?;
    let l = holomorphic_lagrangian(model, c, s)?;
    let mut t = [[C64::default(); 2]; 2];
    for (alpha, row) in t.iter_mut().enumerate() {
        for (beta, tab) in row.iter_mut().enumerate() {
            for slot in 0..4 {
                let d = s.upper(slot, alpha);
                for a in 0..model.components() {
                    *tab += d[a] * pi[slot][beta][a];
                }
            }
            *tab -= metric(alpha, beta) * l;
        }
    }
    Ok(t)
}

fn metric(alpha: usize, beta: usize) -> f64 {
    match (alpha, beta) {
        (0, 0) => 1.0,
        (1, 1) => -1.0,
        _ => 0.0,
    }
}

/// Field, normalization and model behind a current field. The standard
/// field is the pair `f = i` with `c = 1`.
fn field_parts(field: &CurrentField) -> (&Wavefunction, &Wavefunction, C64) {
    match field {
        CurrentField::Conditional(pair) => (pair.final_state(), pair.initial(), pair.overlap()),
        CurrentField::Standard(psi) => (psi, psi, C64::new(1.0, 0.0)),
    }
}

fn slots_at(field: &CurrentField, e: Event) -> (WaveModel, C64, FieldSlots) {
    let (f, i, c) = field_parts(field);
    (i.model(), c, FieldSlots::from_jets(&f.jet(e), &i.jet(e)))
}

/// Real field Lagrangian density at `e`.
pub fn field_lagrangian_density(field: &CurrentField, e: Event) -> Result<f64, MechanicsError> {
    let (model, c, s) = slots_at(field, e);
    Ok(holomorphic_lagrangian(model, c, &s)?.re)
}

/// Phase-symmetry current evaluated from the Lagrangian's derivative slots.
pub fn noether_current(field: &CurrentField, e: Event) -> Result<FourVector, MechanicsError> {
    let (model, c, s) = slots_at(field, e);
    let j = noether_from_slots(model, c, &s)?;
    Ok(FourVector::new(j[0].re, j[1].re))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorProvenance {
    Conditional,
    Standard,
}

/// `T^{αβ}`, contravariant, indexed `[α][β]`. Not symmetrized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMomentumTensor {
    pub components: [[f64; 2]; 2],
    pub provenance: TensorProvenance,
}

impl EnergyMomentumTensor {
    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &[[f64; 2]; 2]) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                m = m.max((self.components[a][b] - other[a][b]).abs());
            }
        }
        m
    }
}

fn provenance(field: &CurrentField) -> TensorProvenance {
    match field {
        CurrentField::Conditional(_) => TensorProvenance::Conditional,
        CurrentField::Standard(_) => TensorProvenance::Standard,
    }
}

fn real_part(t: [[C64; 2]; 2]) -> [[f64; 2]; 2] {
    [[t[0][0].re, t[0][1].re], [t[1][0].re, t[1][1].re]]
}

/// Canonical tensor built from the derivative slots.
pub fn em_tensor(field: &CurrentField, e: Event) -> Result<EnergyMomentumTensor, MechanicsError> {
    let (model, c, s) = slots_at(field, e);
    let t = tensor_from_slots(model, c, &s)?;
    Ok(EnergyMomentumTensor { components: real_part(t), provenance: provenance(field) })
}

/// Complex tensor bilinear `T̂` with `T = Re[T̂ / c]`:
///
/// * Klein–Gordon: `(1/2m)(∂^αψ_f* ∂^βψ_i + ∂^βψ_f* ∂^αψ_i) - g^{αβ} ℒ`
/// * Dirac: `i ψ̄_f γ^β ∂^α ψ_i - g^{αβ} ℒ`
///
/// where `ℒ` is the bracket of the field Lagrangian without the overlap.
pub fn tensor_bilinear(model: WaveModel, f: &Jet, i: &Jet) -> Result<[[C64; 2]; 2], MechanicsError> {
    let m = field_mass(model)?;
    let (uf, ui) = (f.upper_grad(), i.upper_grad());
    let (lf, li) = (f.lower_grad(), i.lower_grad());
    let mut t = [[C64::default(); 2]; 2];
    let lag = match model {
        WaveModel::KleinGordon { .. } => {
            let grad = lf[0][0].conj() * ui[0][0] + lf[1][0].conj() * ui[1][0];
            (grad - m * m * f.value[0].conj() * i.value[0]) / (2.0 * m)
        }
        _ => {
            let kin = dirac_bar_gamma(f.value, 0, li[0]) + dirac_bar_gamma(f.value, 1, li[1]);
            C64::i() * kin - m * dirac_scalar(f.value, i.value)
        }
    };
    for alpha in 0..2 {
        for beta in 0..2 {
            let kinetic = match model {
                WaveModel::KleinGordon { .. } => {
                    (uf[alpha][0].conj() * ui[beta][0] + uf[beta][0].conj() * ui[alpha][0]) / (2.0 * m)
                }
                _ => C64::i() * dirac_bar_gamma(f.value, beta, ui[alpha]),
            };
            t[alpha][beta] = kinetic - metric(alpha, beta) * lag;
        }
    }
    Ok(t)
}

/// Closed-form tensor, cross-check for [`em_tensor`].
pub fn em_tensor_closed_form(field: &CurrentField, e: Event) -> Result<EnergyMomentumTensor, MechanicsError> {
    let (f, i, c) = field_parts(field);
    let t = tensor_bilinear(i.model(), &f.jet(e), &i.jet(e))?;
    let mut out = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            out[a][b] = (t[a][b] / c).re;
        }
    }
    Ok(EnergyMomentumTensor { components: out, provenance: provenance(field) })
}

/// `ψ_i* T̂ ψ_i`.
pub fn standard_tensor(psi: &Wavefunction, e: Event) -> Result<EnergyMomentumTensor, MechanicsError> {
    let j = psi.jet(e);
    let t = tensor_bilinear(psi.model(), &j, &j)?;
    Ok(EnergyMomentumTensor { components: real_part(t), provenance: TensorProvenance::Standard })
}

/// `Σ_f T_f ρ(f) Δf`, accumulated as `Re[T̂(f, i) conj⟨f|i⟩] Δf`.
pub fn average_tensor_over_finals(
    psi_i: &Wavefunction,
    family: &FinalFamily,
    e: Event,
) -> Result<[[f64; 2]; 2], MechanicsError> {
    let ji = psi_i.jet(e);
    let mut acc = [[0.0; 2]; 2];
    for m in family.members() {
        let t = tensor_bilinear(psi_i.model(), &m.psi.jet(e), &ji)?;
        let w = m.overlap.conj() * m.weight;
        for a in 0..2 {
            for b in 0..2 {
                acc[a][b] += (t[a][b] * w).re;
            }
        }
    }
    Ok(acc)
}

/// `∂_β T^{αβ}` by central differences of step `h`.
pub fn tensor_divergence(field: &CurrentField, e: Event, h: f64) -> Result<FourVector, MechanicsError> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let t = |ev: Event| em_tensor(field, ev).map(|t| t.components);
    let (tp, tm) = (t(Event::new(e.t + h, e.x))?, t(Event::new(e.t - h, e.x))?);
    let (xp, xm) = (t(Event::new(e.t, e.x + h))?, t(Event::new(e.t, e.x - h))?);
    let d = |alpha: usize| (tp[alpha][0] - tm[alpha][0] + xp[alpha][1] - xm[alpha][1]) / (2.0 * h);
    Ok(FourVector::new(d(0), d(1)))
}

/// Largest `|∂L/∂j|` over the checkable samples of a trajectory, with the
/// velocity taken from the curve tangent.
pub fn source_term_check(field: &dyn CurrentSource, traj: &Trajectory) -> Result<f64, MechanicsError> {
    let mut worst: f64 = 0.0;
    for i in checkable_indices(traj) {
        let u = traj.velocity(i).ok_or(MechanicsError::NullVelocity)?;
        let j = field.current(traj.samples[i].event);
        let d = dl_dj(&ParticleKinematics::new(u, j))?;
        worst = worst.max(d[0].abs()).max(d[1].abs());
    }
    Ok(worst)
}

/// One entry of an identity report.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    /// `residual(h) / residual(h/2)` where a convergence rate is checked.
    pub convergence_ratio: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    /// Pass when `residual ≤ tolerance`.
    pub fn bounded(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), residual, convergence_ratio: None, tolerance, passed: residual <= tolerance }
    }

    /// Pass when the halving ratio is within `tolerance` of `expected`.
    pub fn converging(name: impl Into<String>, coarse: f64, fine: f64, expected: f64, tolerance: f64) -> Self {
        let ratio = coarse / fine;
        Self {
            name: name.into(),
            residual: fine,
            convergence_ratio: Some(ratio),
            tolerance,
            passed: ratio.is_finite() && (ratio - expected).abs() <= tolerance * expected,
        }
    }

    /// Pass when the residual exceeds `floor`: for negative controls.
    pub fn exceeding(name: impl Into<String>, residual: f64, floor: f64) -> Self {
        Self { name: name.into(), residual, convergence_ratio: None, tolerance: floor, passed: residual > floor }
    }

    pub fn to_json(&self) -> serde_json::Value {
        use crate::output::json_float;
        serde_json::json!({
            "name": self.name,
            "residual": json_float(self.residual),
            "convergence_ratio": self.convergence_ratio.map(json_float),
            "tolerance": json_float(self.tolerance),
            "passed": self.passed,
        })
    }
}
