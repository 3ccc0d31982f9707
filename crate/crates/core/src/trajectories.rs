//! World lines as flow lines of a current field.
//!
//! Curves are parametrized by `λ` with `dx/dλ = s·j(x)`, where the
//! orientation `s = ±1` is fixed by the sign of `j⁰` at the start event.
//! Along the curve `dτ = ρ₀ dλ`, which stays finite where the current
//! crosses the light cone and `ρ₀ → 0`.

use std::io::{self, Write};

use thiserror::Error;

use crate::currents::{rest_density, CurrentSource};
use crate::output::{fmt_float, CsvWriter};
use crate::spacetime::{
    boost, causal_class, proper_time_increment, CausalClass, Event, FourVector, DEFAULT_NULL_TOL,
};

pub const DEFAULT_STEP: f64 = 1e-3;
/// Crossings are localized to this width in `λ`.
pub const CROSSING_LAMBDA_TOL: f64 = 1e-10;
/// Samples with `|j·j| < GUARD_BAND·(j0² + j1²)` are too close to a crossing
/// for the identity checks.
pub const GUARD_BAND: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("step and span must be positive and finite (step {step}, span {span})")]
    BadStep { step: f64, span: f64 },
    #[error("current magnitude {magnitude:.3e} exceeds the bound at lambda = {lambda}")]
    Runaway { lambda: f64, magnitude: f64 },
    #[error("curve left the integration box at lambda = {lambda} (t = {t}, x = {x})")]
    LeftBounds { lambda: f64, t: f64, x: f64 },
    #[error("non-finite current at lambda = {lambda}")]
    NonFinite { lambda: f64 },
    #[error("sample {0} is not an interior sample")]
    NotInterior(usize),
    #[error("sample {0} lies inside the light-cone guard band")]
    GuardBand(usize),
}

/// How the curve tangent is derived from the current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityLaw {
    /// Tangent along the current itself.
    Guided,
    /// Tangent boosted away from the current by a fixed rapidity. Used to
    /// show that the identity checks detect a velocity that is not pinned
    /// to the current.
    Boosted { rapidity: f64 },
}

impl VelocityLaw {
    fn apply(self, v: FourVector) -> FourVector {
        match self {
            VelocityLaw::Guided => v,
            VelocityLaw::Boosted { rapidity } => boost(v, rapidity),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub t_min: f64,
    pub t_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl Bounds {
    fn contains(&self, e: Event) -> bool {
        e.t >= self.t_min && e.t <= self.t_max && e.x >= self.x_min && e.x <= self.x_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub lambda_span: f64,
    pub step: f64,
    pub null_tol: f64,
    pub max_current: f64,
    pub bounds: Option<Bounds>,
    pub law: VelocityLaw,
}

impl FlowOptions {
    pub fn new(lambda_span: f64, step: f64) -> Self {
        Self {
            lambda_span,
            step,
            null_tol: DEFAULT_NULL_TOL,
            max_current: 1e6,
            bounds: None,
            law: VelocityLaw::Guided,
        }
    }

    pub fn with_law(mut self, law: VelocityLaw) -> Self {
        self.law = law;
        self
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = Some(bounds);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub lambda: f64,
    pub event: Event,
    pub j: FourVector,
    /// `dx/dλ` actually used by the integrator.
    pub tangent: FourVector,
    pub rho0: f64,
    pub tau: f64,
    pub class: CausalClass,
}

/// Light-cone crossing of the current, located by bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub lambda: f64,
    pub event: Event,
    pub tau: f64,
    /// Width in `λ` of the final bisection bracket.
    pub lambda_window: f64,
    /// Proper time elapsed across the final bracket.
    pub tau_window: f64,
    pub rho0: f64,
    pub from: CausalClass,
    pub to: CausalClass,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub step: f64,
    /// `+1` or `-1`; see the module docs.
    pub orientation: f64,
    pub crossings: Vec<Crossing>,
    pub law: VelocityLaw,
}

impl Trajectory {
    /// Run-length encoded causal classes with `Null` marking each crossing.
    pub fn class_sequence(&self) -> Vec<CausalClass> {
        let mut out: Vec<CausalClass> = Vec::new();
        for s in &self.samples {
            if s.class == CausalClass::Null {
                continue;
            }
            match out.last() {
                None => out.push(s.class),
                Some(&last) if last != s.class => {
                    out.push(CausalClass::Null);
                    out.push(s.class);
                }
                _ => {}
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Four-velocity reconstructed from the tangent at sample `index`.
    pub fn velocity(&self, index: usize) -> Option<FourVector> {
        let v = self.samples.get(index)?.tangent;
        let n = proper_time_increment(v);
        (n > 0.0).then(|| v * (self.orientation / n))
    }
}

struct Stepper<'a> {
    field: &'a dyn CurrentSource,
    orientation: f64,
    law: VelocityLaw,
}

impl Stepper<'_> {
    fn tangent(&self, e: Event) -> FourVector {
        self.law.apply(self.field.current(e) * self.orientation)
    }

    /// One RK4 step of size `h` from `e` with known tangent `k1`.
    fn step(&self, e: Event, k1: FourVector, h: f64) -> Event {
        let k2 = self.tangent(e.offset(k1, 0.5 * h));
        let k3 = self.tangent(e.offset(k2, 0.5 * h));
        let k4 = self.tangent(e.offset(k3, h));
        let slope = (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (1.0 / 6.0);
        e.offset(slope, h)
    }

    /// Simpson estimate of `∫ |dx/dλ| dλ` over one step, with the midpoint
    /// taken from the cubic Hermite interpolant.
    fn proper_time(&self, a: Event, ka: FourVector, b: Event, kb: FourVector, h: f64) -> f64 {
        let mid = Event::new(
            0.5 * (a.t + b.t) + h * (ka.v0 - kb.v0) / 8.0,
            0.5 * (a.x + b.x) + h * (ka.v1 - kb.v1) / 8.0,
        );
        let km = self.tangent(mid);
        h / 6.0 * (proper_time_increment(ka) + 4.0 * proper_time_increment(km) + proper_time_increment(kb))
    }
}

/// Integrate the flow line of `field` through `start` with fixed-step RK4.
pub fn integrate_flowline(
    field: &dyn CurrentSource,
    start: Event,
    opts: &FlowOptions,
) -> Result<Trajectory, TrajectoryError> {
    let h = opts.step;
    if !(h > 0.0 && h.is_finite() && opts.lambda_span > 0.0 && opts.lambda_span.is_finite()) {
        return Err(TrajectoryError::BadStep { step: h, span: opts.lambda_span });
    }
    let j_start = field.current(start);
    let orientation = if j_start.v0 < 0.0 { -1.0 } else { 1.0 };
    let stepper = Stepper { field, orientation, law: opts.law };
    let n_steps = (opts.lambda_span / h).round() as usize;

    let check = |lambda: f64, e: Event, j: FourVector| -> Result<(), TrajectoryError> {
        if !j.is_finite() || !e.is_finite() {
            return Err(TrajectoryError::NonFinite { lambda });
        }
        if j.max_abs() > opts.max_current {
            return Err(TrajectoryError::Runaway { lambda, magnitude: j.max_abs() });
        }
        if let Some(b) = opts.bounds {
            if !b.contains(e) {
                return Err(TrajectoryError::LeftBounds { lambda, t: e.t, x: e.x });
            }
        }
        Ok(())
    };

    let make_sample = |lambda: f64, event: Event, j: FourVector, tau: f64| Sample {
        lambda,
        event,
        j,
        tangent: opts.law.apply(j * orientation),
        rho0: rest_density(j),
        tau,
        class: causal_class(j, opts.null_tol),
    };

    check(0.0, start, j_start)?;
    let mut samples = Vec::with_capacity(n_steps + 1);
    samples.push(make_sample(0.0, start, j_start, 0.0));
    let mut crossings = Vec::new();

    for n in 0..n_steps {
        let prev = samples[n];
        let next_event = stepper.step(prev.event, prev.tangent, h);
        let lambda = (n + 1) as f64 * h;
        let j = field.current(next_event);
        check(lambda, next_event, j)?;
        let tangent = opts.law.apply(j * orientation);
        let tau = prev.tau + stepper.proper_time(prev.event, prev.tangent, next_event, tangent, h);
        let sample = make_sample(lambda, next_event, j, tau);
        if prev.j.square() * j.square() < 0.0 {
            crossings.push(locate_crossing(&stepper, &prev, &sample));
        }
        samples.push(sample);
    }

    Ok(Trajectory { samples, step: h, orientation, crossings, law: opts.law })
}

fn locate_crossing(stepper: &Stepper<'_>, a: &Sample, b: &Sample) -> Crossing {
    let sign_a = a.j.square().signum();
    let at = |d: f64| -> Event {
        if d == 0.0 {
            a.event
        } else {
            stepper.step(a.event, a.tangent, d)
        }
    };
    let (mut lo, mut hi) = (0.0, b.lambda - a.lambda);
    while hi - lo > CROSSING_LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        if stepper.field.current(at(mid)).square().signum() == sign_a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau_at = |d: f64| -> f64 {
        if d == 0.0 {
            return a.tau;
        }
        let e = at(d);
        a.tau + stepper.proper_time(a.event, a.tangent, e, stepper.tangent(e), d)
    };
    // Simpson directly over the final bracket: differencing two estimates
    // anchored at the step start would leave their quadrature errors behind.
    let (e_lo, e_hi) = (at(lo), at(hi));
    let tau_window = stepper.proper_time(e_lo, stepper.tangent(e_lo), e_hi, stepper.tangent(e_hi), hi - lo);
    let mid = 0.5 * (lo + hi);
    let event = at(mid);
    Crossing {
        lambda: a.lambda + mid,
        event,
        tau: tau_at(lo) + 0.5 * tau_window,
        lambda_window: hi - lo,
        tau_window,
        rho0: rest_density(stepper.field.current(event)),
        from: a.class,
        to: b.class,
    }
}

fn outside_guard(s: &Sample) -> bool {
    s.j.square().abs() >= GUARD_BAND * (s.j.v0 * s.j.v0 + s.j.v1 * s.j.v1)
}

/// Interior sample with all three stencil points clear of the guard band.
fn stencil(traj: &Trajectory, index: usize) -> Result<[&Sample; 3], TrajectoryError> {
    if index == 0 || index + 1 >= traj.samples.len() {
        return Err(TrajectoryError::NotInterior(index));
    }
    let s = [&traj.samples[index - 1], &traj.samples[index], &traj.samples[index + 1]];
    if !s.iter().all(|x| outside_guard(x)) || s[0].class != s[2].class {
        return Err(TrajectoryError::GuardBand(index));
    }
    Ok(s)
}

/// Equation-of-motion residual `d(ρ₀u_α)/dτ - [±∂_αρ₀ + u^β(∂_βj_α - ∂_αj_β)]`
/// at sample `index`, returned with the index raised.
///
/// The velocity comes from the stored tangent, `u = s·T/|T·T|^(1/2)`, and
/// `d/dτ = (s/|T·T|^(1/2)) d/dλ` by central differences along the curve.
/// The spatial derivatives of the field use the trajectory step. The sign in
/// front of `∂ρ₀` follows the causal class of `u`.
pub fn eom_residual(
    field: &dyn CurrentSource,
    traj: &Trajectory,
    index: usize,
) -> Result<FourVector, TrajectoryError> {
    let [prev, here, next] = stencil(traj, index)?;
    let h = traj.step;
    let s = traj.orientation;
    let unit = |t: FourVector| t * (s / proper_time_increment(t));
    let flux = |smp: &Sample| -> [f64; 2] { (unit(smp.tangent) * smp.rho0).lower() };

    let (fp, fm) = (flux(next), flux(prev));
    let speed = proper_time_increment(here.tangent);
    let lhs = [
        s / speed * (fp[0] - fm[0]) / (2.0 * h),
        s / speed * (fp[1] - fm[1]) / (2.0 * h),
    ];

    let u = unit(here.tangent);
    let sign = causal_class(u, 0.0).sign();
    let e = here.event;
    // d[beta][alpha] = ∂_β j_α, and grad_rho[alpha] = ∂_α ρ₀
    let mut d = [[0.0; 2]; 2];
    let mut grad_rho = [0.0; 2];
    for (beta, shift) in [FourVector::new(1.0, 0.0), FourVector::new(0.0, 1.0)].into_iter().enumerate() {
        let jp = field.current(e.offset(shift, h));
        let jm = field.current(e.offset(shift, -h));
        let (lp, lm) = (jp.lower(), jm.lower());
        for alpha in 0..2 {
            d[beta][alpha] = (lp[alpha] - lm[alpha]) / (2.0 * h);
        }
        grad_rho[beta] = (rest_density(jp) - rest_density(jm)) / (2.0 * h);
    }
    let uu = u.components();
    let mut rhs = [0.0; 2];
    for alpha in 0..2 {
        rhs[alpha] = sign * grad_rho[alpha];
        for beta in 0..2 {
            rhs[alpha] += uu[beta] * (d[beta][alpha] - d[alpha][beta]);
        }
    }
    Ok(FourVector::raise([lhs[0] - rhs[0], lhs[1] - rhs[1]]))
}

/// Generalized momentum `ρ₀u^α - j^α` at sample `index`.
pub fn momentum_along(
    field: &dyn CurrentSource,
    traj: &Trajectory,
    index: usize,
) -> Result<FourVector, TrajectoryError> {
    let smp = traj.samples.get(index).ok_or(TrajectoryError::NotInterior(index))?;
    if !outside_guard(smp) {
        return Err(TrajectoryError::GuardBand(index));
    }
    let j = field.current(smp.event);
    let u = traj.velocity(index).ok_or(TrajectoryError::GuardBand(index))?;
    Ok(u * rest_density(j) - j)
}

/// Indices usable by [`eom_residual`].
pub fn checkable_indices(traj: &Trajectory) -> Vec<usize> {
    (1..traj.samples.len().saturating_sub(1)).filter(|&i| stencil(traj, i).is_ok()).collect()
}

pub const TRAJECTORY_HEADER: [&str; 8] = ["lambda", "t", "x", "j0", "j1", "rho0", "tau", "class"];
pub const CROSSING_HEADER: [&str; 9] =
    ["lambda", "t", "x", "tau", "lambda_window", "tau_window", "rho0", "from", "to"];

pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> io::Result<W> {
    let mut w = CsvWriter::new(out, &TRAJECTORY_HEADER)?;
    for s in &traj.samples {
        w.row(&[
            fmt_float(s.lambda),
            fmt_float(s.event.t),
            fmt_float(s.event.x),
            fmt_float(s.j.v0),
            fmt_float(s.j.v1),
            fmt_float(s.rho0),
            fmt_float(s.tau),
            s.class.as_str().to_string(),
        ])?;
    }
    Ok(w.into_inner())
}

pub fn write_crossings_csv<W: Write>(out: W, traj: &Trajectory) -> io::Result<W> {
    let mut w = CsvWriter::new(out, &CROSSING_HEADER)?;
    for c in &traj.crossings {
        w.row(&[
            fmt_float(c.lambda),
            fmt_float(c.event.t),
            fmt_float(c.event.x),
            fmt_float(c.tau),
            fmt_float(c.lambda_window),
            fmt_float(c.tau_window),
            fmt_float(c.rho0),
            c.from.as_str().to_string(),
            c.to.as_str().to_string(),
        ])?;
    }
    Ok(w.into_inner())
}
