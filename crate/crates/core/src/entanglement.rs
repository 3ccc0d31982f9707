//! Entangled states as finite sums of products, projection onto one
//! particle, and the two-particle correlation pipeline.

use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::currents::{conditional_current, BoundaryPair, CurrentError};
use crate::output::{fmt_float, json_float, CsvWriter};
use crate::spacetime::Event;
use crate::states::{density_bilinear, position_surrogate, StateError, WaveModel, Wavefunction, XQuadrature};

pub const MAX_PARTICLES: usize = 4;
/// Projections whose unnormalized norm falls below this are rejected.
pub const PROJECTION_FLOOR: f64 = 1e-8;
/// Default bound on the factorization defect of a product state.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntanglementError {
    #[error("a multi-particle state needs between 2 and {MAX_PARTICLES} particles, got {0}")]
    ParticleCount(usize),
    #[error("term {term} has {got} factors, expected {expected}")]
    Ragged { term: usize, got: usize, expected: usize },
    #[error("state has no terms")]
    Empty,
    #[error("factor model differs from the state model")]
    ModelMismatch,
    #[error("finals must cover every particle except {keep} exactly once")]
    BadFinals { keep: usize },
    #[error("projected norm {norm:.3e} is below the floor: outcome incompatible with the state")]
    IncompatibleOutcome { norm: f64 },
    #[error("{0} requires a scalar wave equation")]
    ScalarOnly(&'static str),
    #[error("the correlation pipeline runs in the Schrodinger model only")]
    SchrodingerOnly,
    #[error(transparent)]
    Current(#[from] CurrentError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone)]
pub struct Term {
    pub coefficient: C64,
    pub factors: Vec<Wavefunction>,
}

/// `Σ_k c_k Π_j φ_{k,j}(e_j)`: each factor propagates on its own, so the
/// amplitude is a genuine multi-time solution.
#[derive(Debug, Clone)]
pub struct MultiParticleState {
    model: WaveModel,
    terms: Vec<Term>,
}

impl MultiParticleState {
    pub fn new(model: WaveModel, terms: Vec<Term>) -> Result<Self, EntanglementError> {
        let n = terms.first().ok_or(EntanglementError::Empty)?.factors.len();
        if !(2..=MAX_PARTICLES).contains(&n) {
            return Err(EntanglementError::ParticleCount(n));
        }
        for (k, t) in terms.iter().enumerate() {
            if t.factors.len() != n {
                return Err(EntanglementError::Ragged { term: k, got: t.factors.len(), expected: n });
            }
            if t.factors.iter().any(|f| f.model() != model) {
                return Err(EntanglementError::ModelMismatch);
            }
        }
        Ok(Self { model, terms })
    }

    pub fn model(&self) -> WaveModel {
        self.model
    }

    pub fn particles(&self) -> usize {
        self.terms[0].factors.len()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `Σ_kl c_k* c_l Π_j ⟨φ_{k,j}|φ_{l,j}⟩` with every overlap on `t = 0`.
    pub fn norm_sqr(&self, quad: &XQuadrature) -> f64 {
        let mut acc = C64::default();
        for tk in &self.terms {
            for tl in &self.terms {
                let prod = tk.factors.iter().zip(&tl.factors).fold(C64::new(1.0, 0.0), |p, (a, b)| {
                    p * raw_overlap(a, b, 0.0, quad)
                });
                acc += tk.coefficient.conj() * tl.coefficient * prod;
            }
        }
        acc.re
    }

    /// `⟨x₁,t₁; x₂,t₂; …|i⟩` for scalar models.
    pub fn amplitude(&self, events: &[Event]) -> Result<C64, EntanglementError> {
        if self.model.components() != 1 {
            return Err(EntanglementError::ScalarOnly("amplitude"));
        }
        assert_eq!(events.len(), self.particles(), "one event per particle");
        Ok(self
            .terms
            .iter()
            .map(|t| t.factors.iter().zip(events).fold(t.coefficient, |acc, (f, &e)| acc * f.evaluate(e)[0]))
            .sum())
    }
}

/// Outcome imposed on one particle: a final state, the slice on which its
/// overlaps are computed, and the quadrature for that slice.
#[derive(Debug, Clone)]
pub struct FinalCondition {
    pub particle: usize,
    pub psi: Wavefunction,
    pub t_slice: f64,
    pub quad: XQuadrature,
}

impl FinalCondition {
    /// Width-`epsilon` position outcome `x_f` at `t_f`.
    pub fn surrogate(particle: usize, mass: f64, x_f: f64, t_f: f64, epsilon: f64) -> Self {
        Self {
            particle,
            psi: position_surrogate(mass, x_f, t_f, epsilon),
            t_slice: t_f,
            quad: XQuadrature::around(x_f, 12.0 * epsilon, epsilon / 8.0),
        }
    }
}

/// `(1/N) Σ_k a_k φ_{k,keep}` with `a_k = c_k Π_{j≠keep} ⟨f_j|φ_{k,j}⟩`.
#[derive(Debug, Clone)]
pub struct Projection {
    pub psi: Wavefunction,
    /// Complex `N`: `|N|` is the unnormalized norm and its phase makes the
    /// largest `a_k` (first on ties) real and positive.
    pub normalization: C64,
    /// `|N|²`, the probability density of the imposed outcomes.
    pub weight: f64,
    /// `a_k / N`.
    pub coefficients: Vec<C64>,
}

fn raw_overlap(psi_f: &Wavefunction, psi_i: &Wavefunction, t: f64, quad: &XQuadrature) -> C64 {
    let model = psi_i.model();
    quad.integrate(|x| {
        let e = Event::new(t, x);
        density_bilinear(model, &psi_f.jet(e), &psi_i.jet(e))
    })
}

/// Gram matrix `⟨φ_{k,keep}|φ_{l,keep}⟩`, evaluated on the slice `t = 0`.
fn gram(state: &MultiParticleState, keep: usize, quad: &XQuadrature) -> Vec<Vec<C64>> {
    let f: Vec<&Wavefunction> = state.terms.iter().map(|t| &t.factors[keep]).collect();
    f.iter().map(|a| f.iter().map(|b| raw_overlap(a, b, 0.0, quad)).collect()).collect()
}

fn quadratic_form(g: &[Vec<C64>], v: &[C64]) -> f64 {
    let mut acc = C64::default();
    for (k, row) in g.iter().enumerate() {
        for (l, &gkl) in row.iter().enumerate() {
            acc += v[k].conj() * gkl * v[l];
        }
    }
    acc.re
}

fn check_finals(state: &MultiParticleState, finals: &[FinalCondition], keep: usize) -> Result<(), EntanglementError> {
    let n = state.particles();
    let mut seen = vec![false; n];
    for f in finals {
        if f.particle >= n || f.particle == keep || seen[f.particle] || f.psi.model() != state.model {
            return Err(EntanglementError::BadFinals { keep });
        }
        seen[f.particle] = true;
    }
    if keep >= n || seen.iter().filter(|s| **s).count() != n - 1 {
        return Err(EntanglementError::BadFinals { keep });
    }
    Ok(())
}

fn branch_weights(state: &MultiParticleState, finals: &[FinalCondition]) -> Vec<C64> {
    state
        .terms
        .iter()
        .map(|t| {
            finals.iter().fold(t.coefficient, |acc, f| {
                acc * raw_overlap(&f.psi, &t.factors[f.particle], f.t_slice, &f.quad)
            })
        })
        .collect()
}

/// Updated wavefunction of particle `keep` given outcomes for all others.
/// `gram_quad` integrates the kept factors against each other.
pub fn project_single_particle(
    state: &MultiParticleState,
    finals: &[FinalCondition],
    keep: usize,
    gram_quad: &XQuadrature,
) -> Result<Projection, EntanglementError> {
    check_finals(state, finals, keep)?;
    let a = branch_weights(state, finals);
    // Dividing by the leading weight first makes a single-term state give
    // exactly φ/‖φ‖ whatever the finals are.
    let lead = a.iter().fold(a[0], |best, &v| if v.norm() > best.norm() { v } else { best });
    if !(lead.norm() > 0.0) {
        return Err(EntanglementError::IncompatibleOutcome { norm: 0.0 });
    }
    let ratios: Vec<C64> = a.iter().map(|v| v / lead).collect();
    let q = quadratic_form(&gram(state, keep, gram_quad), &ratios).max(0.0);
    let weight = lead.norm_sqr() * q;
    let norm = weight.sqrt();
    if !(norm >= PROJECTION_FLOOR) {
        return Err(EntanglementError::IncompatibleOutcome { norm });
    }
    let normalization = lead * q.sqrt();
    let coefficients: Vec<C64> = ratios.iter().map(|r| r / q.sqrt()).collect();
    let parts: Vec<(C64, &Wavefunction)> =
        coefficients.iter().zip(&state.terms).map(|(&c, t)| (c, &t.factors[keep])).collect();
    let psi = Wavefunction::linear_combination(&parts).ok_or(EntanglementError::ModelMismatch)?;
    Ok(Projection { psi, normalization, weight, coefficients })
}

/// Norm distance between the projections obtained with every final's
/// overlap taken on slice `t1` versus `t2`.
pub fn slice_independence_of_projection(
    state: &MultiParticleState,
    finals: &[FinalCondition],
    keep: usize,
    t1: f64,
    t2: f64,
    gram_quad: &XQuadrature,
) -> Result<f64, EntanglementError> {
    let at = |t: f64| -> Vec<FinalCondition> {
        finals.iter().map(|f| FinalCondition { t_slice: t, ..f.clone() }).collect()
    };
    let p1 = project_single_particle(state, &at(t1), keep, gram_quad)?;
    let p2 = project_single_particle(state, &at(t2), keep, gram_quad)?;
    let diff: Vec<C64> = p1.coefficients.iter().zip(&p2.coefficients).map(|(a, b)| a - b).collect();
    Ok(quadratic_form(&gram(state, keep, gram_quad), &diff).max(0.0).sqrt())
}

/// `Re[⟨x_f|x⟩⟨x|i⟩/⟨x_f|i⟩]`: the time component of the conditional current.
pub fn conditional_density(pair: &BoundaryPair, e: Event) -> Result<f64, EntanglementError> {
    if !matches!(pair.initial().model(), WaveModel::Schrodinger { .. }) {
        return Err(EntanglementError::SchrodingerOnly);
    }
    Ok(conditional_current(pair, e).v0)
}

/// `ρ₁(x|x_f) ρ₂(x'|x'_f)`.
pub fn joint_conditional_density(
    first: &BoundaryPair,
    second: &BoundaryPair,
    e: Event,
    e_prime: Event,
) -> Result<f64, EntanglementError> {
    Ok(conditional_density(first, e)? * conditional_density(second, e_prime)?)
}

/// Measurement times, outcome grids and probe lattice of the correlation
/// pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSetup {
    pub t_f: f64,
    pub t_f_prime: f64,
    pub epsilon: f64,
    /// Outcome grid for `x_f`; spacing should not exceed `epsilon`.
    pub grid: XQuadrature,
    pub grid_prime: XQuadrature,
    pub probes: Vec<f64>,
    pub probes_prime: Vec<f64>,
    pub quadrature_tol: f64,
}

struct ProbeVectors {
    outcome: Vec<C64>,
    projected: Vec<C64>,
}

/// Outcome tables for a two-particle Schrödinger state.
///
/// For outcomes `g_a` (particle 1) and `h_b` (particle 2) the overlaps
/// `O1[k][a] = ⟨g_a|φ_{k,1}⟩` and `O2[k][b] = ⟨h_b|φ_{k,2}⟩` are computed
/// once. Re-projecting particle 1 on each outcome of particle 2 then costs
/// a sum over terms: the projected state is `S1_b = Σ_k c_k O2[k][b] φ_{k,1}`
/// up to a constant that cancels in the conditional density.
pub struct CorrelationEngine<'a> {
    state: &'a MultiParticleState,
    setup: CorrelationSetup,
    finals: Vec<Wavefunction>,
    finals_prime: Vec<Wavefunction>,
    o1: Vec<Vec<C64>>,
    o2: Vec<Vec<C64>>,
    /// `A[a][b] = Σ_k c_k O1[k][a] O2[k][b]`
    joint: Vec<Vec<C64>>,
    norm_sqr: f64,
}

impl<'a> CorrelationEngine<'a> {
    pub fn new(state: &'a MultiParticleState, setup: CorrelationSetup) -> Result<Self, EntanglementError> {
        let mass = match state.model {
            WaveModel::Schrodinger { mass } => mass,
            _ => return Err(EntanglementError::SchrodingerOnly),
        };
        if state.particles() != 2 {
            return Err(EntanglementError::ParticleCount(state.particles()));
        }
        let build = |grid: &XQuadrature, t_f: f64| -> Vec<Wavefunction> {
            grid.nodes().map(|(x, _)| position_surrogate(mass, x, t_f, setup.epsilon)).collect()
        };
        let finals = build(&setup.grid, setup.t_f);
        let finals_prime = build(&setup.grid_prime, setup.t_f_prime);
        let table = |finals: &[Wavefunction], grid: &XQuadrature, particle: usize, t_f: f64| -> Vec<Vec<C64>> {
            state
                .terms
                .iter()
                .map(|t| {
                    finals
                        .par_iter()
                        .enumerate()
                        .map(|(a, g)| {
                            let quad = XQuadrature::around(grid.node(a), 12.0 * setup.epsilon, setup.epsilon / 8.0);
                            raw_overlap(g, &t.factors[particle], t_f, &quad)
                        })
                        .collect()
                })
                .collect()
        };
        let o1 = table(&finals, &setup.grid, 0, setup.t_f);
        let o2 = table(&finals_prime, &setup.grid_prime, 1, setup.t_f_prime);
        let joint = (0..finals.len())
            .map(|a| {
                (0..finals_prime.len())
                    .map(|b| state.terms.iter().enumerate().map(|(k, t)| t.coefficient * o1[k][a] * o2[k][b]).sum())
                    .collect()
            })
            .collect();
        // the norm is taken on a window three times wider than the outcome grid
        let (lo, hi) = (setup.grid.a.min(setup.grid_prime.a), setup.grid.b.max(setup.grid_prime.b));
        let half = 1.5 * (hi - lo);
        let mid = 0.5 * (lo + hi);
        let norm_sqr = state.norm_sqr(&XQuadrature::around(mid, half, 0.01));
        Ok(Self { state, setup, finals, finals_prime, o1, o2, joint, norm_sqr })
    }

    pub fn setup(&self) -> &CorrelationSetup {
        &self.setup
    }

    /// `1 - Σ_ab |A_ab|² Δ_a Δ_b / ‖Ψ‖²`: probability missed by the outcome
    /// grids and the width of the surrogates.
    pub fn truncation_estimate(&self) -> f64 {
        let mut acc = 0.0;
        for (a, row) in self.joint.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                acc += v.norm_sqr() * self.setup.grid.weight(a) * self.setup.grid_prime.weight(b);
            }
        }
        1.0 - acc / self.norm_sqr
    }

    /// Outcome values `g_a*(e)` and re-projected states `S_b(e)` for one
    /// particle; `b` runs over the other particle's outcomes.
    fn probe_vectors(&self, particle: usize, e: Event) -> ProbeVectors {
        let phi: Vec<C64> =
            self.state.terms.iter().map(|t| t.coefficient * t.factors[particle].evaluate(e)[0]).collect();
        let (outcomes, other) = if particle == 0 { (&self.finals, &self.o2) } else { (&self.finals_prime, &self.o1) };
        let n_other = other[0].len();
        ProbeVectors {
            outcome: outcomes.iter().map(|w| w.evaluate(e)[0].conj()).collect(),
            projected: (0..n_other).map(|b| phi.iter().zip(other).map(|(p, o)| p * o[b]).sum()).collect(),
        }
    }

    /// `Σ_ab ρ₁ ρ₂ |A_ab|² Δ_a Δ_b` with
    /// `ρ₁ = Re[g_a* S1_b / A_ab]` and `ρ₂ = Re[h_b* S2_a / A_ab]`.
    fn pair_sum(&self, p: &ProbeVectors, q: &ProbeVectors) -> f64 {
        let mut acc = 0.0;
        for (a, row) in self.joint.iter().enumerate() {
            let wa = self.setup.grid.weight(a);
            let mut inner = 0.0;
            for (b, amp) in row.iter().enumerate() {
                let n2 = amp.norm_sqr();
                if n2 > f64::MIN_POSITIVE {
                    let c = amp.conj();
                    let r1 = (p.outcome[a] * p.projected[b] * c).re;
                    let r2 = (q.outcome[b] * q.projected[a] * c).re;
                    inner += r1 * r2 / n2 * self.setup.grid_prime.weight(b);
                }
            }
            acc += inner * wa;
        }
        acc
    }

    /// Marginal density on the probe lattice at times `(t, t')`, indexed
    /// `[probe][probe_prime]`.
    pub fn marginal_grid(&self, t: f64, t_prime: f64) -> Vec<Vec<f64>> {
        let p: Vec<ProbeVectors> = self.setup.probes.iter().map(|&x| self.probe_vectors(0, Event::new(t, x))).collect();
        let q: Vec<ProbeVectors> =
            self.setup.probes_prime.iter().map(|&x| self.probe_vectors(1, Event::new(t_prime, x))).collect();
        p.par_iter().map(|pv| q.par_iter().map(|qv| self.pair_sum(pv, qv)).collect()).collect()
    }

    /// `|⟨x,t; x',t'|i⟩|²` on the probe lattice.
    pub fn quantum_grid(&self, t: f64, t_prime: f64) -> Result<Vec<Vec<f64>>, EntanglementError> {
        self.setup
            .probes
            .iter()
            .map(|&x| {
                self.setup
                    .probes_prime
                    .iter()
                    .map(|&y| Ok(self.state.amplitude(&[Event::new(t, x), Event::new(t_prime, y)])?.norm_sqr()))
                    .collect()
            })
            .collect()
    }

    pub fn report(&self, t: f64, t_prime: f64) -> Result<CorrelationReport, EntanglementError> {
        let rho_model = self.marginal_grid(t, t_prime);
        let rho_qm = self.quantum_grid(t, t_prime)?;
        Ok(CorrelationReport {
            t,
            t_prime,
            epsilon: self.setup.epsilon,
            probes: self.setup.probes.clone(),
            probes_prime: self.setup.probes_prime.clone(),
            linf_rel_error: linf_relative(&rho_model, &rho_qm),
            factorization_defect: factorization_defect(&rho_model),
            truncation_estimate: self.truncation_estimate(),
            quadrature_tol: self.setup.quadrature_tol,
            rho_model,
            rho_qm,
        })
    }
}

/// Marginal density at one probe pair.
pub fn marginal_density(
    state: &MultiParticleState,
    setup: &CorrelationSetup,
    e: Event,
    e_prime: Event,
) -> Result<f64, EntanglementError> {
    let one = CorrelationSetup { probes: vec![e.x], probes_prime: vec![e_prime.x], ..setup.clone() };
    Ok(CorrelationEngine::new(state, one)?.marginal_grid(e.t, e_prime.t)[0][0])
}

/// `max |a - b| / max |b|` over the lattice.
pub fn linf_relative(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            num = num.max((x - y).abs());
            den = den.max(y.abs());
        }
    }
    num / den
}

/// Relative Frobenius distance to the best rank-1 approximation.
pub fn factorization_defect(m: &[Vec<f64>]) -> f64 {
    let (r, c) = (m.len(), m.first().map_or(0, Vec::len));
    let s = DMatrix::from_fn(r, c, |i, j| m[i][j]).singular_values();
    let total = s.norm();
    if total == 0.0 {
        return 0.0;
    }
    let lead = s.max();
    ((total * total - lead * lead).max(0.0)).sqrt() / total
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub t: f64,
    pub t_prime: f64,
    pub epsilon: f64,
    pub probes: Vec<f64>,
    pub probes_prime: Vec<f64>,
    /// `[probe][probe_prime]`
    pub rho_model: Vec<Vec<f64>>,
    pub rho_qm: Vec<Vec<f64>>,
    pub linf_rel_error: f64,
    pub factorization_defect: f64,
    pub truncation_estimate: f64,
    pub quadrature_tol: f64,
}

impl CorrelationReport {
    pub fn to_json(&self) -> serde_json::Value {
        let grid = |m: &[Vec<f64>]| -> serde_json::Value {
            m.iter().map(|r| r.iter().map(|&v| json_float(v)).collect::<Vec<_>>()).collect()
        };
        let list = |v: &[f64]| -> serde_json::Value { v.iter().map(|&x| json_float(x)).collect() };
        serde_json::json!({
            "t": json_float(self.t),
            "t_prime": json_float(self.t_prime),
            "epsilon": json_float(self.epsilon),
            "x": list(&self.probes),
            "x_prime": list(&self.probes_prime),
            "rho_model": grid(&self.rho_model),
            "rho_qm": grid(&self.rho_qm),
            "linf_rel_error": json_float(self.linf_rel_error),
            "factorization_defect": json_float(self.factorization_defect),
            "truncation_estimate": json_float(self.truncation_estimate),
            "quadrature_tol": json_float(self.quadrature_tol),
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<W> {
        let mut w = CsvWriter::new(out, &["x", "x_prime", "rho_model", "rho_qm"])?;
        for (i, &x) in self.probes.iter().enumerate() {
            for (j, &y) in self.probes_prime.iter().enumerate() {
                w.row(&[fmt_float(x), fmt_float(y), fmt_float(self.rho_model[i][j]), fmt_float(self.rho_qm[i][j])])?;
            }
        }
        Ok(w.into_inner())
    }
}

/// Reports along a sequence of probe times approaching the measurements.
pub fn measurement_limit_correlation(
    state: &MultiParticleState,
    setup: &CorrelationSetup,
    times: &[(f64, f64)],
) -> Result<Vec<CorrelationReport>, EntanglementError> {
    let engine = CorrelationEngine::new(state, setup.clone())?;
    times.iter().map(|&(t, tp)| engine.report(t, tp)).collect()
}
