use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checks::find;
use super::{
    FamilySpec, LawSpec, LoadedScenario, ProjectionSpec, Range, RunOptions, RunReport, ScenarioError, Task,
};
use crate::currents::{
    average_over_finals, continuity_residual, measurement_limit_profile, measurement_pair, sample_grid,
    slice_profile, standard_current, write_grid_csv, BoundaryPair, CurrentField, FinalFamily,
};
use crate::entanglement::{
    measurement_limit_correlation, slice_independence_of_projection, CorrelationSetup, FinalCondition,
    MultiParticleState, Term, DEFAULT_QUADRATURE_TOL,
};
use crate::mechanics::{
    average_tensor_over_finals, em_tensor, noether_current, source_term_check, standard_tensor, tensor_divergence,
    IdentityCheck, MechanicsError,
};
use crate::output::{fmt_float, write_json, CsvWriter};
use crate::spacetime::{Event, FourVector};
use crate::states::{wave_equation_residual, WaveModel, Wavefunction, XQuadrature};
use crate::trajectories::{
    checkable_indices, eom_residual, integrate_flowline, momentum_along, write_crossings_csv, write_trajectory_csv,
    Bounds, FlowOptions, Trajectory, VelocityLaw,
};

/// Below this relative size a finite-difference residual is treated as
/// roundoff and a convergence ratio is meaningless.
const ROUNDOFF_FLOOR: f64 = 1e-11;

struct Sink {
    dir: Option<PathBuf>,
    csv: bool,
    json: bool,
    artifacts: Vec<String>,
}

impl Sink {
    fn write<F>(&mut self, name: &str, f: F) -> Result<(), ScenarioError>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| ScenarioError::runtime(format!("{}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        f(&mut out).and_then(|_| out.flush()).map_err(|e| ScenarioError::runtime(format!("{}: {e}", path.display())))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn csv<F>(&mut self, name: &str, f: F) -> Result<(), ScenarioError>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        if self.csv {
            self.write(name, f)
        } else {
            Ok(())
        }
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), ScenarioError> {
        if self.json {
            self.write(name, |out| write_json(out, value))
        } else {
            Ok(())
        }
    }
}

struct Ctx<'a> {
    loaded: &'a LoadedScenario,
    sink: Sink,
    checks: Vec<IdentityCheck>,
    summary: BTreeMap<String, f64>,
    seed: u64,
}

impl Ctx<'_> {
    fn max(&mut self, id: &str, residual: f64, tolerance: Option<f64>) {
        let d = find(id);
        self.checks.push(IdentityCheck::bounded(id, residual, tolerance.unwrap_or(d.tolerance)));
    }

    /// Halving-ratio check; residuals already at roundoff on both grids
    /// pass as converged.
    fn ratio(&mut self, name: String, id: &str, coarse: f64, fine: f64, scale: f64) {
        let d = find(id);
        let floor = ROUNDOFF_FLOOR * scale.max(f64::MIN_POSITIVE);
        if coarse <= floor && fine <= floor {
            self.checks.push(IdentityCheck::bounded(name, fine, floor));
        } else {
            let expected = d.expected.expect("ratio descriptor");
            self.checks.push(IdentityCheck::converging(name, coarse, fine, expected, d.tolerance));
        }
    }

    fn exceeding(&mut self, name: String, residual: f64, floor: f64) {
        self.checks.push(IdentityCheck::exceeding(name, residual, floor));
    }

    fn note(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }

    fn state(&self, name: &str) -> &Wavefunction {
        self.loaded.state(name)
    }

    fn field(&self, initial: &str, final_state: Option<&str>) -> Result<CurrentField, ScenarioError> {
        let psi_i = self.state(initial).clone();
        match final_state {
            None => Ok(CurrentField::Standard(psi_i)),
            Some(f) => {
                let n = &self.loaded.scenario.numeric;
                let pair = BoundaryPair::from_quadrature(self.state(f).clone(), psi_i, n.overlap_time, &n.overlap)
                    .map_err(ScenarioError::runtime)?;
                Ok(CurrentField::Conditional(pair))
            }
        }
    }
}

pub(super) fn run(loaded: &LoadedScenario, opts: &RunOptions) -> Result<RunReport, ScenarioError> {
    let s = &loaded.scenario;
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| ScenarioError::runtime(format!("{}: {e}", dir.display())))?;
    }
    let mut ctx = Ctx {
        loaded,
        sink: Sink { dir: opts.out_dir.clone(), csv: s.outputs.csv, json: s.outputs.json, artifacts: Vec::new() },
        checks: Vec::new(),
        summary: BTreeMap::new(),
        seed: opts.seed.unwrap_or(s.numeric.seed),
    };
    match &s.task {
        Task::CurrentGrid { initial, final_state, t, x, continuity } => {
            current_grid(&mut ctx, initial, final_state.as_deref(), t, x, *continuity)?
        }
        Task::Trajectory { initial, final_state, starts, lambda_span, step, law, max_current, bounds } => {
            let mut flow = FlowOptions::new(*lambda_span, *step).with_law(velocity_law(*law));
            flow.null_tol = s.numeric.null_tol;
            flow.max_current = *max_current;
            if let Some(b) = bounds {
                flow = flow.with_bounds(Bounds { t_min: b.t_min, t_max: b.t_max, x_min: b.x_min, x_max: b.x_max });
            }
            trajectory(&mut ctx, initial, final_state.as_deref(), starts, &flow)?
        }
        Task::AveragingCheck { initial, family, t, x, tolerance, refine } => {
            averaging(&mut ctx, initial, family, t, x, *tolerance, *refine)?
        }
        Task::MeasurementLimit {
            initial, x_f, t_f, epsilon, times, slice, tolerance, mean_tolerance, expect_negative,
        } => measurement(
            &mut ctx,
            initial,
            (*x_f, *t_f, *epsilon),
            times,
            slice,
            (*tolerance, *mean_tolerance),
            *expect_negative,
        )?,
        Task::CorrelationPipeline {
            state,
            t_f,
            t_f_prime,
            epsilon,
            grid,
            grid_prime,
            probes,
            probes_prime,
            times,
            tolerance,
            quadrature_tol,
            product,
            projection,
        } => {
            let setup = CorrelationSetup {
                t_f: *t_f,
                t_f_prime: *t_f_prime,
                epsilon: *epsilon,
                grid: *grid,
                grid_prime: grid_prime.unwrap_or(*grid),
                probes: probes.values(),
                probes_prime: probes_prime.unwrap_or(*probes).values(),
                quadrature_tol: quadrature_tol.unwrap_or(DEFAULT_QUADRATURE_TOL),
            };
            correlation(&mut ctx, state, &setup, times, *tolerance, *product, projection.as_ref())?
        }
        Task::IdentitySuite { initial, final_state, start, lambda_span, step, t, x, perturbation_rapidity } => {
            identity_suite(
                &mut ctx,
                initial,
                final_state,
                Event::new(start[0], start[1]),
                (*lambda_span, *step),
                t,
                x,
                *perturbation_rapidity,
            )?
        }
    }
    let Ctx { mut sink, checks, summary, seed, .. } = ctx;
    let mut report = RunReport {
        scenario: s.name.clone(),
        task: s.task.kind(),
        checks,
        artifacts: Vec::new(),
        version: env!("CARGO_PKG_VERSION"),
        config_hash: loaded.config_hash.clone(),
        seed,
        summary,
    };
    if sink.json && sink.dir.is_some() {
        report.artifacts = sink.artifacts.clone();
        report.artifacts.push("report.json".to_string());
        let value = report.to_json();
        sink.json("report.json", &value)?;
    }
    report.artifacts = sink.artifacts;
    Ok(report)
}

fn velocity_law(law: LawSpec) -> VelocityLaw {
    match law {
        LawSpec::Guided => VelocityLaw::Guided,
        LawSpec::Boosted { rapidity } => VelocityLaw::Boosted { rapidity },
    }
}

/// Probe events of a `t × x` lattice.
fn lattice(t: &Range, x: &Range) -> Vec<Event> {
    let xs = x.values();
    t.values().into_iter().flat_map(|t| xs.iter().map(move |&x| Event::new(t, x))).collect()
}

fn max_abs_over<F: Fn(Event) -> f64>(events: &[Event], f: F) -> f64 {
    events.iter().map(|&e| f(e)).fold(0.0, f64::max)
}

fn continuity_check(ctx: &mut Ctx, field: &CurrentField, events: &[Event]) {
    let h = ctx.loaded.scenario.numeric.fd_step;
    let coarse = max_abs_over(events, |e| continuity_residual(field, e, h).abs());
    let fine = max_abs_over(events, |e| continuity_residual(field, e, h / 2.0).abs());
    let scale = max_abs_over(events, |e| field.j(e).max_abs()) / h;
    ctx.ratio("continuity".into(), "continuity", coarse, fine, scale);
}

fn wave_check(ctx: &mut Ctx, label: &str, psi: &Wavefunction, events: &[Event]) {
    let h = ctx.loaded.scenario.numeric.fd_step;
    let coarse = max_abs_over(events, |e| wave_equation_residual(psi, e, h));
    let fine = max_abs_over(events, |e| wave_equation_residual(psi, e, h / 2.0));
    let m = psi.model().mass();
    let scale = max_abs_over(events, |e| psi.evaluate(e).iter().map(|c| c.norm()).fold(0.0, f64::max)) * m.max(1.0 / m);
    ctx.ratio(format!("wave-residual[{label}]"), "wave-residual", coarse, fine, scale);
}

fn current_grid(
    ctx: &mut Ctx,
    initial: &str,
    final_state: Option<&str>,
    t: &Range,
    x: &Range,
    continuity: bool,
) -> Result<(), ScenarioError> {
    let field = ctx.field(initial, final_state)?;
    let rows = sample_grid(&field, &t.values(), &x.values(), ctx.loaded.scenario.numeric.null_tol);
    ctx.sink.csv("current_grid.csv", |out| write_grid_csv(out, &rows).map(|_| ()))?;
    ctx.note("rows", rows.len() as f64);
    if continuity {
        continuity_check(ctx, &field, &lattice(t, x));
    }
    Ok(())
}

fn integrate(field: &CurrentField, start: Event, flow: &FlowOptions) -> Result<Trajectory, ScenarioError> {
    integrate_flowline(field, start, flow).map_err(ScenarioError::runtime)
}

fn trajectory(
    ctx: &mut Ctx,
    initial: &str,
    final_state: Option<&str>,
    starts: &[[f64; 2]],
    flow: &FlowOptions,
) -> Result<(), ScenarioError> {
    let field = ctx.field(initial, final_state)?;
    let mut worst_window: f64 = 0.0;
    let mut crossings = 0;
    for (k, s) in starts.iter().enumerate() {
        let traj = integrate(&field, Event::new(s[0], s[1]), flow)?;
        ctx.sink.csv(&format!("trajectory_{k}.csv"), |out| write_trajectory_csv(out, &traj).map(|_| ()))?;
        ctx.sink.csv(&format!("crossings_{k}.csv"), |out| write_crossings_csv(out, &traj).map(|_| ()))?;
        ctx.note(&format!("rows_{k}"), traj.len() as f64);
        crossings += traj.crossings.len();
        worst_window = traj.crossings.iter().map(|c| c.tau_window.abs()).fold(worst_window, f64::max);
    }
    ctx.note("crossings", crossings as f64);
    ctx.max("crossing-tau", worst_window, None);
    Ok(())
}

fn build_family(
    ctx: &Ctx,
    psi_i: &Wavefunction,
    family: &FamilySpec,
    refined: bool,
) -> Result<FinalFamily, ScenarioError> {
    let halve = |g: &XQuadrature| if refined { XQuadrature::new(g.a, g.b, 2 * g.n - 1) } else { *g };
    match family {
        FamilySpec::PositionSurrogates { t_f, epsilon, grid } => {
            FinalFamily::position_surrogates(psi_i, *t_f, *epsilon, &halve(grid))
        }
        FamilySpec::SampledPositions { t_f, epsilon, range, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            FinalFamily::sampled_positions(psi_i, *t_f, *epsilon, (range[0], range[1]), *count, &mut rng)
        }
        FamilySpec::MomentumGrid { grid } => FinalFamily::momentum_grid(psi_i, &halve(grid)),
    }
    .map_err(ScenarioError::runtime)
}

/// Largest deviation of the family average from the standard current,
/// relative to the largest standard component.
fn averaging_error(psi_i: &Wavefunction, family: &FinalFamily, events: &[Event]) -> (f64, Vec<[FourVector; 2]>) {
    let rows: Vec<[FourVector; 2]> =
        events.iter().map(|&e| [average_over_finals(psi_i, family, e).j, standard_current(psi_i, e)]).collect();
    let scale = rows.iter().map(|r| r[1].max_abs()).fold(0.0, f64::max);
    let err = rows.iter().map(|r| (r[0] - r[1]).max_abs()).fold(0.0, f64::max);
    (err / scale, rows)
}

fn averaging(
    ctx: &mut Ctx,
    initial: &str,
    family: &FamilySpec,
    t: &Range,
    x: &Range,
    tolerance: f64,
    refine: bool,
) -> Result<(), ScenarioError> {
    let psi_i = ctx.state(initial).clone();
    let events = lattice(t, x);
    let fam = build_family(ctx, &psi_i, family, false)?;
    let (err, rows) = averaging_error(&psi_i, &fam, &events);
    ctx.sink.csv("averaging.csv", |out| {
        let mut w = CsvWriter::new(out, &["t", "x", "j0_avg", "j1_avg", "j0_std", "j1_std"])?;
        for (e, r) in events.iter().zip(&rows) {
            w.row(&[fmt_float(e.t), fmt_float(e.x), fmt_float(r[0].v0), fmt_float(r[0].v1), fmt_float(r[1].v0), fmt_float(r[1].v1)])?;
        }
        Ok(())
    })?;
    ctx.note("members", fam.len() as f64);
    ctx.note("total_probability", fam.total_probability());
    ctx.max("averaging", err, Some(tolerance));
    if refine {
        let fine_fam = build_family(ctx, &psi_i, family, true)?;
        let (fine, _) = averaging_error(&psi_i, &fine_fam, &events);
        let d = find("averaging-refinement");
        ctx.checks.push(IdentityCheck::converging(
            "averaging-refinement",
            err,
            fine,
            d.expected.expect("ratio descriptor"),
            d.tolerance,
        ));
    }
    if !matches!(psi_i.model(), WaveModel::Schrodinger { .. }) {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for &e in &events {
            let avg = average_tensor_over_finals(&psi_i, &fam, e).map_err(ScenarioError::runtime)?;
            let std = standard_tensor(&psi_i, e).map_err(ScenarioError::runtime)?;
            worst = worst.max(std.max_abs_diff(&avg));
            scale = std.components.iter().flatten().fold(scale, |m, v| m.max(v.abs()));
        }
        ctx.max("tensor-average", worst / scale, None);
    }
    Ok(())
}

fn measurement(
    ctx: &mut Ctx,
    initial: &str,
    (x_f, t_f, epsilon): (f64, f64, f64),
    times: &[f64],
    slice: &XQuadrature,
    (tolerance, mean_tolerance): (f64, f64),
    expect_negative: bool,
) -> Result<(), ScenarioError> {
    let pair = measurement_pair(ctx.state(initial), x_f, t_f, epsilon).map_err(ScenarioError::runtime)?;
    let field = CurrentField::Conditional(pair.clone());

    let gaussian = |x: f64| (-(x - x_f).powi(2) / (2.0 * epsilon * epsilon)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * epsilon);
    let at_tf = slice_profile(&field, t_f, slice);
    let rows: Vec<(f64, f64, f64)> =
        slice.nodes().map(|(x, _)| (x, field.j(Event::new(t_f, x)).v0 / at_tf.mass, gaussian(x))).collect();
    let slice_err = rows.iter().map(|(_, d, g)| (d - g).abs()).fold(0.0, f64::max);
    ctx.sink.csv("slice.csv", |out| {
        let mut w = CsvWriter::new(out, &["x", "density", "gaussian"])?;
        for (x, d, g) in &rows {
            w.row(&[fmt_float(*x), fmt_float(*d), fmt_float(*g)])?;
        }
        Ok(())
    })?;
    ctx.max("measurement-slice", slice_err, Some(tolerance));

    let profiles = measurement_limit_profile(&pair, times, slice);
    ctx.sink.csv("measurement_profile.csv", |out| {
        let mut w = CsvWriter::new(out, &["t", "mass", "mean", "variance", "min_density"])?;
        for p in &profiles {
            w.row(&[fmt_float(p.t), fmt_float(p.mass), fmt_float(p.mean), fmt_float(p.variance), fmt_float(p.min_density)])?;
        }
        Ok(())
    })?;
    let closest = profiles
        .iter()
        .min_by(|a, b| (a.t - t_f).abs().total_cmp(&(b.t - t_f).abs()))
        .expect("validated non-empty times");
    ctx.note("mean_probe_time", closest.t);
    ctx.max("measurement-mean", (closest.mean - x_f).abs(), Some(mean_tolerance));
    if expect_negative {
        let lowest = profiles.iter().map(|p| p.min_density).fold(f64::INFINITY, f64::min);
        ctx.exceeding("measurement-negativity".into(), -lowest, find("measurement-negativity").tolerance);
    }
    Ok(())
}

fn multi_state(ctx: &Ctx, name: &str) -> Result<MultiParticleState, ScenarioError> {
    let def = &ctx.loaded.scenario.entangled[name];
    let terms = def
        .terms
        .iter()
        .map(|t| Term {
            coefficient: C64::new(t.coefficient[0], t.coefficient[1]),
            factors: t.factors.iter().map(|f| ctx.state(f).clone()).collect(),
        })
        .collect();
    MultiParticleState::new(ctx.loaded.scenario.model, terms)
        .map_err(|e| ScenarioError::Validation { path: format!("entangled.{name}"), message: e.to_string() })
}

fn correlation(
    ctx: &mut Ctx,
    name: &str,
    setup: &CorrelationSetup,
    times: &[[f64; 2]],
    tolerance: f64,
    product: bool,
    projection: Option<&ProjectionSpec>,
) -> Result<(), ScenarioError> {
    let state = multi_state(ctx, name)?;
    let mut pairs: Vec<(f64, f64)> = times.iter().map(|p| (p[0], p[1])).collect();
    let slice = (setup.t_f, setup.t_f_prime);
    if !pairs.contains(&slice) {
        pairs.push(slice);
    }
    let reports = measurement_limit_correlation(&state, setup, &pairs).map_err(ScenarioError::runtime)?;
    for (k, r) in reports.iter().enumerate() {
        ctx.sink.json(&format!("correlation_{k}.json"), &r.to_json())?;
        ctx.sink.csv(&format!("correlation_{k}.csv"), |out| r.write_csv(out).map(|_| ()))?;
    }
    let at = reports.iter().find(|r| (r.t, r.t_prime) == slice).expect("slice pair added above");
    ctx.note("linf_rel_error", at.linf_rel_error);
    ctx.note("factorization_defect", at.factorization_defect);
    ctx.note("truncation_estimate", at.truncation_estimate);
    ctx.max("correlation", at.linf_rel_error, Some(tolerance));
    if product {
        ctx.max("product-defect", at.factorization_defect, Some(setup.quadrature_tol));
    } else {
        let d = find("entangled-defect");
        ctx.exceeding("entangled-defect".into(), at.factorization_defect, d.tolerance * setup.quadrature_tol);
    }
    if let Some(p) = projection {
        let n = &ctx.loaded.scenario.numeric;
        let cond = FinalCondition { particle: 1, psi: ctx.state(&p.final_state).clone(), t_slice: p.slices[0], quad: n.overlap };
        let gap = slice_independence_of_projection(&state, &[cond.clone()], 0, p.slices[0], p.slices[1], &n.overlap)
            .map_err(ScenarioError::runtime)?;
        ctx.max("projection-slice", gap, None);
        let projected = crate::entanglement::project_single_particle(&state, &[cond], 0, &n.overlap)
            .map_err(ScenarioError::runtime)?;
        let events = lattice(&Range { start: 0.0, stop: setup.t_f, count: 3 }, &Range { start: -2.0, stop: 2.0, count: 5 });
        wave_check(ctx, "projected", &projected.psi, &events);
    }
    Ok(())
}

/// Maximum over the samples of both curves that sit at the same `λ`.
fn eom_convergence(field: &CurrentField, coarse: &Trajectory, fine: &Trajectory) -> Result<(f64, f64), ScenarioError> {
    let fine_ok: std::collections::BTreeSet<usize> = checkable_indices(fine).into_iter().collect();
    let (mut c, mut f) = (0.0_f64, 0.0_f64);
    for i in checkable_indices(coarse) {
        if !fine_ok.contains(&(2 * i)) {
            continue;
        }
        c = c.max(eom_residual(field, coarse, i).map_err(ScenarioError::runtime)?.max_abs());
        f = f.max(eom_residual(field, fine, 2 * i).map_err(ScenarioError::runtime)?.max_abs());
    }
    Ok((c, f))
}

fn max_momentum(field: &CurrentField, traj: &Trajectory) -> Result<f64, ScenarioError> {
    checkable_indices(traj)
        .into_iter()
        .map(|i| momentum_along(field, traj, i).map(FourVector::max_abs).map_err(ScenarioError::runtime))
        .try_fold(0.0, |m, r| r.map(|v| f64::max(m, v)))
}

fn max_eom(field: &CurrentField, traj: &Trajectory) -> Result<f64, ScenarioError> {
    checkable_indices(traj)
        .into_iter()
        .map(|i| eom_residual(field, traj, i).map(FourVector::max_abs).map_err(ScenarioError::runtime))
        .try_fold(0.0, |m, r| r.map(|v| f64::max(m, v)))
}

#[allow(clippy::too_many_arguments)]
fn identity_suite(
    ctx: &mut Ctx,
    initial: &str,
    final_state: &str,
    start: Event,
    (span, step): (f64, f64),
    t: &Range,
    x: &Range,
    rapidity: f64,
) -> Result<(), ScenarioError> {
    let field = ctx.field(initial, Some(final_state))?;
    let events = lattice(t, x);
    let h = ctx.loaded.scenario.numeric.fd_step;

    let (psi_i, psi_f) = (ctx.state(initial).clone(), ctx.state(final_state).clone());
    wave_check(ctx, "initial", &psi_i, &events);
    wave_check(ctx, "final", &psi_f, &events);
    continuity_check(ctx, &field, &events);

    match noether_current(&field, events[0]) {
        Err(MechanicsError::UnsupportedModel(_)) => log::info!("no field Lagrangian for this model; skipping field checks"),
        _ => {
            let mut worst: f64 = 0.0;
            for &e in &events {
                let n = noether_current(&field, e).map_err(ScenarioError::runtime)?;
                worst = worst.max((n - field.j(e)).max_abs());
            }
            ctx.max("noether", worst, None);
            let div = |h: f64| -> Result<f64, ScenarioError> {
                events.iter().try_fold(0.0, |m, &e| {
                    tensor_divergence(&field, e, h).map(|d| f64::max(m, d.max_abs())).map_err(ScenarioError::runtime)
                })
            };
            let (coarse, fine) = (div(h)?, div(h / 2.0)?);
            let scale = events.iter().try_fold(0.0, |m, &e| {
                em_tensor(&field, e)
                    .map(|t| t.components.iter().flatten().fold(m, |a: f64, v| a.max(v.abs())))
                    .map_err(ScenarioError::runtime)
            })? / h;
            ctx.ratio("tensor-divergence".into(), "tensor-divergence", coarse, fine, scale);
        }
    }

    let mut flow = FlowOptions::new(span, step);
    flow.null_tol = ctx.loaded.scenario.numeric.null_tol;
    let guided = integrate(&field, start, &flow)?;
    let half = integrate(&field, start, &FlowOptions { step: step / 2.0, ..flow })?;
    ctx.sink.csv("identity_trajectory.csv", |out| write_trajectory_csv(out, &guided).map(|_| ()))?;
    let (coarse, fine) = eom_convergence(&field, &guided, &half)?;
    let scale = guided.samples.iter().map(|s| s.j.max_abs()).fold(0.0, f64::max) / step;
    ctx.ratio("eom".into(), "eom", coarse, fine, scale);
    let momentum = max_momentum(&field, &guided)?;
    ctx.max("momentum", momentum, None);
    let source = source_term_check(&field, &guided).map_err(ScenarioError::runtime)?;
    ctx.max("source-term", source, None);
    let windows = guided.crossings.iter().map(|c| c.tau_window.abs()).fold(0.0, f64::max);
    ctx.max("crossing-tau", windows, None);

    let boosted = integrate(&field, start, &flow.with_law(VelocityLaw::Boosted { rapidity }))?;
    let factor = find("perturbation").tolerance;
    let eom_b = max_eom(&field, &boosted)?;
    let eom_g = max_eom(&field, &guided)?;
    ctx.exceeding("perturbation[eom]".into(), eom_b, factor * eom_g);
    let mom_b = max_momentum(&field, &boosted)?;
    ctx.exceeding("perturbation[momentum]".into(), mom_b, factor * momentum);
    let src_b = source_term_check(&field, &boosted).map_err(ScenarioError::runtime)?;
    ctx.exceeding("perturbation[source-term]".into(), src_b, factor * source);
    ctx.note("eom_guided", eom_g);
    ctx.note("eom_boosted", eom_b);
    ctx.note("crossings", guided.crossings.len() as f64);
    Ok(())
}
