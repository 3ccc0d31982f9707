//! Standard and conditional current fields, averaging over final states,
//! continuity, and the narrow-final measurement limit.

use std::io::{self, Write};

use num_complex::Complex64 as C64;
use rand::Rng;
use thiserror::Error;

use crate::output::{fmt_float, CsvWriter};
use crate::spacetime::{causal_class, minkowski_dot, CausalClass, Event, FourVector};
use crate::states::{
    current_bilinear, overlap, position_surrogate, StateError, Wavefunction, XQuadrature,
    DEFAULT_OVERLAP_FLOOR,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurrentError {
    #[error("|<f|i>| = {modulus:.3e} is below the overlap floor {floor:e}")]
    OverlapBelowFloor { modulus: f64, floor: f64 },
    #[error("initial and final states use different wave equations ({0} vs {1})")]
    ModelMismatch(&'static str, &'static str),
    #[error("final family member has no closed-form momentum amplitude")]
    NoMomentumAmplitude,
    #[error(transparent)]
    State(#[from] StateError),
}

/// Initial state, final state and their overlap `⟨f|i⟩`.
#[derive(Debug, Clone)]
pub struct BoundaryPair {
    psi_i: Wavefunction,
    psi_f: Wavefunction,
    overlap_fi: C64,
}

impl BoundaryPair {
    /// Pair with a known overlap. Both states must use the same model.
    pub fn new(psi_f: Wavefunction, psi_i: Wavefunction, overlap_fi: C64) -> Result<Self, CurrentError> {
        if psi_f.model() != psi_i.model() {
            return Err(CurrentError::ModelMismatch(psi_f.model().name(), psi_i.model().name()));
        }
        Self::from_parts(psi_f, psi_i, overlap_fi)
    }

    /// Overlap computed on the slice `t_slice`.
    pub fn from_quadrature(
        psi_f: Wavefunction,
        psi_i: Wavefunction,
        t_slice: f64,
        quad: &XQuadrature,
    ) -> Result<Self, CurrentError> {
        let c = overlap(&psi_f, &psi_i, t_slice, quad)?;
        Self::new(psi_f, psi_i, c)
    }

    /// Like [`BoundaryPair::new`] but only the kind of wave equation has to
    /// agree, so states with different masses can be paired.
    pub fn from_parts(psi_f: Wavefunction, psi_i: Wavefunction, overlap_fi: C64) -> Result<Self, CurrentError> {
        if !psi_f.model().same_kind(psi_i.model()) {
            return Err(CurrentError::ModelMismatch(psi_f.model().name(), psi_i.model().name()));
        }
        let modulus = overlap_fi.norm();
        if !(modulus >= DEFAULT_OVERLAP_FLOOR) {
            return Err(CurrentError::OverlapBelowFloor { modulus, floor: DEFAULT_OVERLAP_FLOOR });
        }
        Ok(Self { psi_i, psi_f, overlap_fi })
    }

    pub fn initial(&self) -> &Wavefunction {
        &self.psi_i
    }

    pub fn final_state(&self) -> &Wavefunction {
        &self.psi_f
    }

    pub fn overlap(&self) -> C64 {
        self.overlap_fi
    }
}

/// Anything that assigns a current vector to each event.
pub trait CurrentSource: Sync {
    fn current(&self, e: Event) -> FourVector;

    fn rest_density(&self, e: Event) -> f64 {
        rest_density(self.current(e))
    }
}

#[derive(Debug, Clone)]
pub enum CurrentField {
    Conditional(BoundaryPair),
    Standard(Wavefunction),
}

impl CurrentField {
    pub fn j(&self, e: Event) -> FourVector {
        match self {
            CurrentField::Conditional(pair) => conditional_current(pair, e),
            CurrentField::Standard(psi) => standard_current(psi, e),
        }
    }

    pub fn rho0(&self, e: Event) -> f64 {
        rest_density(self.j(e))
    }
}

impl CurrentSource for CurrentField {
    fn current(&self, e: Event) -> FourVector {
        self.j(e)
    }
}

/// The same vector everywhere.
#[derive(Debug, Clone, Copy)]
pub struct UniformCurrent(pub FourVector);

impl CurrentSource for UniformCurrent {
    fn current(&self, _e: Event) -> FourVector {
        self.0
    }
}

/// Adapter for analytic test fields.
pub struct FnCurrent<F>(pub F);

impl<F: Fn(Event) -> FourVector + Sync> CurrentSource for FnCurrent<F> {
    fn current(&self, e: Event) -> FourVector {
        (self.0)(e)
    }
}

/// `ψ_f* ĵ^α ψ_i` before the real part is taken.
pub fn jhat_bilinear(psi_f: &Wavefunction, psi_i: &Wavefunction, e: Event) -> [C64; 2] {
    current_bilinear(psi_i.model(), &psi_f.jet(e), &psi_i.jet(e))
}

/// `Re[ψ_f* ĵ^α ψ_i / ⟨f|i⟩]`.
pub fn conditional_current(pair: &BoundaryPair, e: Event) -> FourVector {
    let b = jhat_bilinear(&pair.psi_f, &pair.psi_i, e);
    let c = pair.overlap_fi;
    FourVector::new((b[0] / c).re, (b[1] / c).re)
}

pub fn standard_current(psi: &Wavefunction, e: Event) -> FourVector {
    let b = jhat_bilinear(psi, psi, e);
    FourVector::new(b[0].re, b[1].re)
}

/// `|j·j|^(1/2)`.
pub fn rest_density(j: FourVector) -> f64 {
    minkowski_dot(j, j).abs().sqrt()
}

/// `∂_t j⁰ + ∂_x j¹` by central differences.
pub fn continuity_residual(field: &dyn CurrentSource, e: Event, h: f64) -> f64 {
    assert!(h > 0.0, "finite-difference step must be positive");
    let jt_p = field.current(Event::new(e.t + h, e.x)).v0;
    let jt_m = field.current(Event::new(e.t - h, e.x)).v0;
    let jx_p = field.current(Event::new(e.t, e.x + h)).v1;
    let jx_m = field.current(Event::new(e.t, e.x - h)).v1;
    (jt_p - jt_m) / (2.0 * h) + (jx_p - jx_m) / (2.0 * h)
}

/// One candidate outcome `f` with its measure `Δf` and overlap `⟨f|i⟩`.
#[derive(Debug, Clone)]
pub struct FinalMember {
    pub psi: Wavefunction,
    pub weight: f64,
    pub overlap: C64,
}

/// Discretized family of final states used to average conditional currents.
#[derive(Debug, Clone)]
pub struct FinalFamily {
    members: Vec<FinalMember>,
}

impl FinalFamily {
    pub fn from_members(members: Vec<FinalMember>) -> Self {
        Self { members }
    }

    /// Orthonormal discrete family: overlaps by quadrature, unit weights.
    pub fn discrete(
        psi_i: &Wavefunction,
        finals: Vec<Wavefunction>,
        t_slice: f64,
        quad: &XQuadrature,
    ) -> Result<Self, CurrentError> {
        let members = finals
            .into_iter()
            .map(|psi| {
                let c = overlap(&psi, psi_i, t_slice, quad)?;
                Ok(FinalMember { psi, weight: 1.0, overlap: c })
            })
            .collect::<Result<Vec<_>, CurrentError>>()?;
        Ok(Self { members })
    }

    /// Narrow Gaussians of width `epsilon` centred on the trapezoid nodes of
    /// `grid` at time `t_f` (Schrödinger only).
    pub fn position_surrogates(
        psi_i: &Wavefunction,
        t_f: f64,
        epsilon: f64,
        grid: &XQuadrature,
    ) -> Result<Self, CurrentError> {
        let mass = psi_i.model().mass();
        let members = grid
            .nodes()
            .map(|(x_f, w)| surrogate_member(psi_i, mass, x_f, t_f, epsilon, w))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { members })
    }

    /// Monte Carlo variant: `count` uniformly drawn centres on `[a, b]`,
    /// each carrying weight `(b - a)/count`.
    pub fn sampled_positions<R: Rng>(
        psi_i: &Wavefunction,
        t_f: f64,
        epsilon: f64,
        range: (f64, f64),
        count: usize,
        rng: &mut R,
    ) -> Result<Self, CurrentError> {
        let mass = psi_i.model().mass();
        let w = (range.1 - range.0) / count as f64;
        let members = (0..count)
            .map(|_| {
                let x_f = rng.gen_range(range.0..range.1);
                surrogate_member(psi_i, mass, x_f, t_f, epsilon, w)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { members })
    }

    /// Normalized plane waves on the trapezoid nodes of a momentum grid,
    /// with closed-form overlaps.
    pub fn momentum_grid(psi_i: &Wavefunction, grid: &XQuadrature) -> Result<Self, CurrentError> {
        let model = psi_i.model();
        let members = grid
            .nodes()
            .map(|(q, w)| {
                let c = psi_i.momentum_amplitude(q).ok_or(CurrentError::NoMomentumAmplitude)?;
                Ok(FinalMember { psi: Wavefunction::normalized_plane_wave(model, q), weight: w, overlap: c })
            })
            .collect::<Result<Vec<_>, CurrentError>>()?;
        Ok(Self { members })
    }

    pub fn members(&self) -> &[FinalMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `Σ |⟨f|i⟩|² Δf`.
    pub fn total_probability(&self) -> f64 {
        self.members.iter().map(|m| m.overlap.norm_sqr() * m.weight).sum()
    }
}

fn surrogate_member(
    psi_i: &Wavefunction,
    mass: f64,
    x_f: f64,
    t_f: f64,
    epsilon: f64,
    weight: f64,
) -> Result<FinalMember, CurrentError> {
    let psi = position_surrogate(mass, x_f, t_f, epsilon);
    let quad = XQuadrature::around(x_f, 12.0 * epsilon, epsilon / 8.0);
    let c = overlap(&psi, psi_i, t_f, &quad)?;
    Ok(FinalMember { psi, weight, overlap: c })
}

/// Result of [`average_over_finals`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedCurrent {
    pub j: FourVector,
    /// `Σ ρ(f) Δf - 1`
    pub completeness_defect: f64,
}

/// `Σ_f j_f(e) ρ(f) Δf` with `ρ(f) = |⟨f|i⟩|²`.
///
/// Each term is accumulated as `Re[ψ_f* ĵ ψ_i · conj⟨f|i⟩]`, which equals
/// the conditional current times `ρ(f)` and stays finite for members whose
/// overlap is below the conditioning floor.
pub fn average_over_finals(psi_i: &Wavefunction, family: &FinalFamily, e: Event) -> AveragedCurrent {
    let model = psi_i.model();
    let ji = psi_i.jet(e);
    let mut acc = FourVector::ZERO;
    for m in &family.members {
        let b = current_bilinear(model, &m.psi.jet(e), &ji);
        let c = m.overlap.conj() * m.weight;
        acc = acc + FourVector::new((b[0] * c).re, (b[1] * c).re);
    }
    let defect = family.total_probability() - 1.0;
    if defect.abs() > 1e-6 {
        log::debug!("final family completeness defect {defect:.3e}");
    }
    AveragedCurrent { j: acc, completeness_defect: defect }
}

/// Moments of the normalized time component on one slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceProfile {
    pub t: f64,
    /// `∫ j⁰ dx`
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
    /// Smallest `j⁰/∫j⁰` on the slice.
    pub min_density: f64,
}

pub fn slice_profile(field: &dyn CurrentSource, t: f64, slice: &XQuadrature) -> SliceProfile {
    let values: Vec<(f64, f64, f64)> = slice
        .nodes()
        .map(|(x, w)| (x, w, field.current(Event::new(t, x)).v0))
        .collect();
    let mass: f64 = values.iter().map(|(_, w, d)| w * d).sum();
    let mean = values.iter().map(|(x, w, d)| w * d * x).sum::<f64>() / mass;
    let variance = values.iter().map(|(x, w, d)| w * d * (x - mean).powi(2)).sum::<f64>() / mass;
    let min_density = values.iter().map(|(_, _, d)| d / mass).fold(f64::INFINITY, f64::min);
    SliceProfile { t, mass, mean, variance, min_density }
}

/// Conditional current for a position-measurement surrogate at `(t_f, x_f)`.
pub fn measurement_pair(
    psi_i: &Wavefunction,
    x_f: f64,
    t_f: f64,
    epsilon: f64,
) -> Result<BoundaryPair, CurrentError> {
    let member = surrogate_member(psi_i, psi_i.model().mass(), x_f, t_f, epsilon, 1.0)?;
    BoundaryPair::new(member.psi, psi_i.clone(), member.overlap)
}

/// Slice moments of the conditional density at each of `times`.
pub fn measurement_limit_profile(
    pair: &BoundaryPair,
    times: &[f64],
    slice: &XQuadrature,
) -> Vec<SliceProfile> {
    let field = CurrentField::Conditional(pair.clone());
    times.iter().map(|&t| slice_profile(&field, t, slice)).collect()
}

/// One row of a current grid dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSample {
    pub event: Event,
    pub j: FourVector,
    pub rho0: f64,
    pub class: CausalClass,
}

pub fn sample_grid(field: &dyn CurrentSource, ts: &[f64], xs: &[f64], null_tol: f64) -> Vec<GridSample> {
    let mut out = Vec::with_capacity(ts.len() * xs.len());
    for &t in ts {
        for &x in xs {
            let event = Event::new(t, x);
            let j = field.current(event);
            out.push(GridSample { event, j, rho0: rest_density(j), class: causal_class(j, null_tol) });
        }
    }
    out
}

pub const GRID_HEADER: [&str; 6] = ["t", "x", "j0", "j1", "rho0", "class"];

pub fn write_grid_csv<W: Write>(out: W, rows: &[GridSample]) -> io::Result<W> {
    let mut w = CsvWriter::new(out, &GRID_HEADER)?;
    for r in rows {
        w.row(&[
            fmt_float(r.event.t),
            fmt_float(r.event.x),
            fmt_float(r.j.v0),
            fmt_float(r.j.v1),
            fmt_float(r.rho0),
            r.class.as_str().to_string(),
        ])?;
    }
    Ok(w.into_inner())
}
