use serde::Serialize;

/// One verifiable identity with its default acceptance rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckDescriptor {
    pub id: &'static str,
    pub module: &'static str,
    pub identity: &'static str,
    /// `max`: residual ≤ tolerance. `ratio`: halving ratio within the
    /// relative tolerance of `expected`. `exceeds`: residual > tolerance.
    pub rule: &'static str,
    pub tolerance: f64,
    pub expected: Option<f64>,
}

const fn max(id: &'static str, module: &'static str, identity: &'static str, tolerance: f64) -> CheckDescriptor {
    CheckDescriptor { id, module, identity, rule: "max", tolerance, expected: None }
}

const fn ratio(
    id: &'static str,
    module: &'static str,
    identity: &'static str,
    expected: f64,
    tolerance: f64,
) -> CheckDescriptor {
    CheckDescriptor { id, module, identity, rule: "ratio", tolerance, expected: Some(expected) }
}

const fn exceeds(id: &'static str, module: &'static str, identity: &'static str, floor: f64) -> CheckDescriptor {
    CheckDescriptor { id, module, identity, rule: "exceeds", tolerance: floor, expected: None }
}

pub const CHECKS: &[CheckDescriptor] = &[
    ratio("wave-residual", "states", "FD wave-equation residual of every built state -> 0 at second order", 4.0, 0.2),
    max("projection-slice", "entanglement", "projected wavefunction independent of the overlap slice (norm)", 1e-8),
    ratio("continuity", "currents", "d_a j^a of the conditional current -> 0 at second order", 4.0, 0.2),
    max("averaging", "currents", "sum_f rho(f) j_f = standard current (L-inf relative)", 1e-4),
    ratio("averaging-refinement", "currents", "averaging error halves when the outcome grid is refined", 2.0, 0.2),
    max("measurement-slice", "currents", "normalized j0 at t_f = eps-Gaussian at x_f (L-inf)", 1e-8),
    max("measurement-mean", "currents", "|mean(t) - x_f| just before t_f", 1e-3),
    exceeds("measurement-negativity", "currents", "-min j0 / int j0 far before t_f (j0 changes sign)", 0.0),
    max("crossing-tau", "trajectories", "tau stationary at light-cone crossings (tau over the bisection bracket)", 1e-8),
    max("noether", "mechanics", "Noether current of the field Lagrangian = conditional current", 1e-10),
    ratio("tensor-divergence", "mechanics", "d_b T^ab -> 0 at second order", 4.0, 0.2),
    max("tensor-plane-wave", "mechanics", "T^ab = p^a p^b / m for a plane-wave pair", 1e-10),
    max("tensor-average", "mechanics", "family average of T^ab = standard tensor (relative)", 1e-4),
    ratio("eom", "mechanics", "particle equation of motion along guided trajectories -> 0 at second order", 4.0, 0.2),
    max("momentum", "mechanics", "p^a = rho0 u^a - j^a = 0 under guidance", 1e-8),
    max("source-term", "mechanics", "dL/dj = 0 under guidance", 1e-12),
    exceeds("perturbation", "mechanics", "boosted velocity law: residual / guided residual for eom, momentum, source-term", 10.0),
    max("correlation", "entanglement", "marginal density = |amplitude|^2 at the measurement slice (L-inf relative)", 1e-2),
    exceeds("entangled-defect", "entanglement", "factorization defect of an entangled marginal / quadrature tolerance", 10.0),
    max("product-defect", "entanglement", "factorization defect of a product-state marginal", 1e-8),
];

pub fn find(id: &str) -> &'static CheckDescriptor {
    CHECKS.iter().find(|c| c.id == id).unwrap_or_else(|| panic!("unknown check id {id}"))
}

/// Descriptors, optionally restricted to one module.
pub fn list_checks(module: Option<&str>) -> Vec<CheckDescriptor> {
    CHECKS.iter().filter(|c| module.map_or(true, |m| c.module == m)).copied().collect()
}
