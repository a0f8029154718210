//! The four experiment drivers: convergence tables, energy traces,
//! solver iteration studies, and explicit-step stability scans, each
//! emitted as CSV with a sidecar metadata record.
//!
//! Row failures (a solver blowing up on one mesh) are recorded in the
//! row's status column and the run continues; configuration errors
//! abort the whole run.

use crate::config::{Experiment, ExperimentConfig, Formulation};
use crate::reference::{assemble, mesh_h, reference_for};
use rkn_core::linalg::{power_iteration_genev, seeded_unit_vector, SolverMethod, SparseMatrix};
use rkn_core::models::{self, ExactSolution, SecondOrderSystem, Separable1d, Separable2d};
use rkn_core::stepping::{
    central_start, reduce_first_order, CentralStepper, RknStepper, RkStepper, StepState,
};
use rkn_core::tableau::{by_name, extend_tableau, ButcherTableau, NamedTableau, NystromTableau};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

pub struct Outcome {
    pub rows_failed: usize,
    pub csv_path: PathBuf,
}

type Rows = Vec<Vec<String>>;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome, String> {
    let started = Instant::now();
    let (header, rows, failed) = match cfg.experiment {
        Experiment::Converge => run_converge(cfg)?,
        Experiment::Energy => run_energy(cfg)?,
        Experiment::SolveStudy => run_solve_study(cfg)?,
        Experiment::Stability => run_stability(cfg)?,
    };
    write_csv(cfg, header, &rows)?;
    write_sidecar(cfg, started.elapsed().as_secs_f64())?;
    Ok(Outcome { rows_failed: failed, csv_path: cfg.out.clone() })
}

fn fmt_e(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else if x.is_infinite() && x > 0.0 {
        "inf".to_string()
    } else {
        "nan".to_string()
    }
}

fn fmt_t(x: f64) -> String {
    format!("{x:.6}")
}

fn write_csv(cfg: &ExperimentConfig, header: &[&str], rows: &Rows) -> Result<(), String> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(&cfg.out, text)
        .map_err(|e| format!("cannot write {}: {e}", cfg.out.display()))
}

fn write_sidecar(cfg: &ExperimentConfig, wall: f64) -> Result<(), String> {
    let mut path = cfg.out.clone().into_os_string();
    path.push(".meta");
    let unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut f = std::fs::File::create(&path)
        .map_err(|e| format!("cannot write sidecar: {e}"))?;
    let body = format!(
        "# experiment metadata\nlibrary_version = {}\n{}wall_clock_s = {:.6}\ngenerated_unix = {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.echo(),
        wall,
        unix
    );
    f.write_all(body.as_bytes()).map_err(|e| format!("cannot write sidecar: {e}"))
}

/// Nystrom tableau plus the underlying RK tableau when one exists.
struct TableauPair {
    nystrom: NystromTableau,
    rk: Option<ButcherTableau>,
}

fn resolve_tableau(cfg: &ExperimentConfig) -> Result<TableauPair, String> {
    match by_name(&cfg.tableau).map_err(|e| e.to_string())? {
        NamedTableau::Rk(t) => Ok(TableauPair { nystrom: extend_tableau(&t), rk: Some(t) }),
        NamedTableau::NystromOnly(n) => Ok(TableauPair { nystrom: n, rk: None }),
    }
}

fn steps_for(t_final: f64, dt0: f64) -> (usize, f64) {
    let steps = ((t_final / dt0).round() as usize).max(1);
    (steps, t_final / steps as f64)
}

fn discrete_l2(mass: &SparseMatrix, e: &[f64]) -> f64 {
    let me = mass.spmv(e).expect("dims");
    e.iter().zip(&me).map(|(a, b)| a * b).sum::<f64>().sqrt()
}

struct RowStats {
    dt: f64,
    error: f64,
    mean_iters: f64,
    seconds: f64,
}

/// Integrate one mesh of a converge-style run and measure the error
/// against the exact-solution interpolant at t_final.
fn integrate_and_measure(cfg: &ExperimentConfig, n: usize) -> Result<RowStats, String> {
    let setup_start = Instant::now();
    let base = assemble(&cfg.model, n)?;
    let reference =
        reference_for(&cfg.model).ok_or_else(|| format!("no reference for '{}'", cfg.model))?;
    let sys = if reference.manufactured {
        models::manufactured_problem(&base, &reference.exact).map_err(|e| e.to_string())?
    } else {
        base
    };
    let h = mesh_h(&sys, n);
    let (steps, dt) = steps_for(cfg.t_final, cfg.dt_rule.dt_for(h));
    let y0 = models::interpolate(&sys, &reference.exact, 0.0).map_err(|e| e.to_string())?;
    let v0 =
        models::interpolate_velocity(&sys, &reference.exact, 0.0).map_err(|e| e.to_string())?;
    sys.dirichlet.check_consistent(0.0, &y0, &v0, 1e-10).map_err(|e| e.to_string())?;

    let mut total_iters = 0usize;
    let mut final_y: Vec<f64>;
    let loop_seconds;

    match cfg.formulation {
        Formulation::Rkn => {
            let pair = resolve_tableau(cfg)?;
            let bc = cfg.bc_or_default(pair.nystrom.is_explicit());
            let mut stepper = RknStepper::new(&sys, pair.nystrom, bc, cfg.solver.clone());
            stepper.prepare(dt).map_err(|e| e.to_string())?;
            let mut state = StepState::new(0.0, y0, v0);
            let t0 = Instant::now();
            for _ in 0..steps {
                let (next, report) = stepper.step(&state, dt).map_err(|e| e.to_string())?;
                total_iters += report.iterations;
                state = next;
            }
            loop_seconds = t0.elapsed().as_secs_f64();
            final_y = state.y;
        }
        Formulation::Rk => {
            let pair = resolve_tableau(cfg)?;
            let rk = pair
                .rk
                .ok_or_else(|| format!("tableau '{}' has no first-order form", cfg.tableau))?;
            let red = reduce_first_order(&sys).map_err(|e| e.to_string())?;
            let mut stepper = RkStepper::new(&red, rk, cfg.solver.clone());
            stepper.prepare(dt).map_err(|e| e.to_string())?;
            let mut state = StepState::new(0.0, y0, v0);
            let t0 = Instant::now();
            for _ in 0..steps {
                let (next, report) = stepper.step_state(&state, dt).map_err(|e| e.to_string())?;
                total_iters += report.iterations;
                state = next;
            }
            loop_seconds = t0.elapsed().as_secs_f64();
            final_y = state.y;
        }
        Formulation::Central => {
            let stepper = CentralStepper::new(&sys, false).map_err(|e| e.to_string())?;
            let mut y_prev = central_start(&sys, &y0, &v0, dt).map_err(|e| e.to_string())?;
            let mut y = y0;
            let mut t = 0.0;
            let t0 = Instant::now();
            for _ in 0..steps {
                let y_next = stepper.step(t, &y_prev, &y, dt).map_err(|e| e.to_string())?;
                y_prev = y;
                y = y_next;
                t += dt;
            }
            loop_seconds = t0.elapsed().as_secs_f64();
            final_y = y;
        }
    }

    let y_ref =
        models::interpolate(&sys, &reference.exact, cfg.t_final).map_err(|e| e.to_string())?;
    for (a, b) in final_y.iter_mut().zip(&y_ref) {
        *a -= b;
    }
    let error = discrete_l2(&sys.mass, &final_y);
    let seconds = if cfg.include_setup_time {
        setup_start.elapsed().as_secs_f64()
    } else {
        loop_seconds
    };
    Ok(RowStats { dt, error, mean_iters: total_iters as f64 / steps as f64, seconds })
}

const CONVERGE_HEADER: &[&str] =
    &["n", "dt", "error", "order", "mean_iters", "wall_time_s", "status"];

fn run_converge(cfg: &ExperimentConfig) -> Result<(&'static [&'static str], Rows, usize), String> {
    let mut rows = Vec::new();
    let mut failed = 0usize;
    let mut prev: Option<(usize, f64)> = None;
    for &n in &cfg.n_list {
        match integrate_and_measure(cfg, n) {
            Ok(stats) => {
                // observed order = log(e_prev / e) / log(n / n_prev)
                let order = match prev {
                    Some((pn, pe)) if pe > 0.0 && stats.error > 0.0 => {
                        let o = (pe / stats.error).ln() / (n as f64 / pn as f64).ln();
                        if o.is_finite() {
                            format!("{o:.4}")
                        } else {
                            String::new()
                        }
                    }
                    _ => String::new(),
                };
                prev = Some((n, stats.error));
                rows.push(vec![
                    n.to_string(),
                    fmt_e(stats.dt),
                    fmt_e(stats.error),
                    order,
                    format!("{:.4}", stats.mean_iters),
                    fmt_t(stats.seconds),
                    "ok".into(),
                ]);
            }
            Err(e) => {
                failed += 1;
                prev = None;
                rows.push(vec![
                    n.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("failed: {}", sanitize(&e)),
                ]);
            }
        }
    }
    Ok((CONVERGE_HEADER, rows, failed))
}

/// Homogeneous-boundary initial displacement for energy runs.
fn energy_initial(sys: &SecondOrderSystem) -> Result<Vec<f64>, String> {
    use std::f64::consts::PI;
    let exact = match sys.mesh.kind {
        models::ModelKind::Oscillator => ExactSolution::D1(Separable1d {
            space: Arc::new(|_| 1.0),
            space_dx: Arc::new(|_| 0.0),
            time: Arc::new(|_| 1.0),
            time_dt: Arc::new(|_| 0.0),
            time_dtt: Arc::new(|_| 0.0),
        }),
        models::ModelKind::Wave1d | models::ModelKind::Telegraph1d => {
            ExactSolution::D1(Separable1d {
                space: Arc::new(|x: f64| (PI * x).sin()),
                space_dx: Arc::new(|x: f64| PI * (PI * x).cos()),
                time: Arc::new(|_| 1.0),
                time_dt: Arc::new(|_| 0.0),
                time_dtt: Arc::new(|_| 0.0),
            })
        }
        models::ModelKind::Wave2d => ExactSolution::D2(Separable2d {
            space: Arc::new(|x: f64, y: f64| (PI * x).sin() * (PI * y).sin()),
            time: Arc::new(|_| 1.0),
            time_dt: Arc::new(|_| 0.0),
            time_dtt: Arc::new(|_| 0.0),
        }),
        models::ModelKind::Beam1d => ExactSolution::D1(Separable1d {
            // clamped-compatible bubble
            space: Arc::new(|x: f64| x * x * (1.0 - x) * (1.0 - x)),
            space_dx: Arc::new(|x: f64| 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x)),
            time: Arc::new(|_| 1.0),
            time_dt: Arc::new(|_| 0.0),
            time_dtt: Arc::new(|_| 0.0),
        }),
    };
    models::interpolate(sys, &exact, 0.0).map_err(|e| e.to_string())
}

fn method_label(cfg: &ExperimentConfig) -> String {
    match cfg.formulation {
        Formulation::Central => "central".into(),
        Formulation::Rkn => cfg.tableau.clone(),
        Formulation::Rk => format!("rk-{}", cfg.tableau),
    }
}

const ENERGY_HEADER: &[&str] =
    &["method", "n", "t", "kinetic", "potential", "total", "status"];

fn run_energy(cfg: &ExperimentConfig) -> Result<(&'static [&'static str], Rows, usize), String> {
    let label = method_label(cfg);
    let mut rows = Vec::new();
    let mut failed = 0usize;
    for &n in &cfg.n_list {
        if let Err(e) = energy_trace(cfg, n, &label, &mut rows) {
            failed += 1;
            rows.push(vec![
                label.clone(),
                n.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("failed: {}", sanitize(&e)),
            ]);
        }
    }
    Ok((ENERGY_HEADER, rows, failed))
}

fn energy_row(label: &str, n: usize, rep: &models::EnergyReport) -> Vec<String> {
    vec![
        label.to_string(),
        n.to_string(),
        fmt_e(rep.t),
        fmt_e(rep.kinetic),
        fmt_e(rep.potential),
        fmt_e(rep.total),
        "ok".into(),
    ]
}

fn energy_trace(
    cfg: &ExperimentConfig,
    n: usize,
    label: &str,
    rows: &mut Rows,
) -> Result<(), String> {
    let sys = assemble(&cfg.model, n)?;
    let h = mesh_h(&sys, n);
    let (steps, dt) = steps_for(cfg.t_final, cfg.dt_rule.dt_for(h));
    let y0 = energy_initial(&sys)?;
    let v0 = vec![0.0; sys.m];
    match cfg.formulation {
        Formulation::Central => {
            let stepper = CentralStepper::new(&sys, false).map_err(|e| e.to_string())?;
            let mut y_prev = central_start(&sys, &y0, &v0, dt).map_err(|e| e.to_string())?;
            let mut y = y0;
            let mut t = 0.0;
            rows.push(energy_row(
                label,
                n,
                &models::energy(&sys, 0.0, &y, &v0).map_err(|e| e.to_string())?,
            ));
            for _ in 0..steps {
                let y_next = stepper.step(t, &y_prev, &y, dt).map_err(|e| e.to_string())?;
                // the t = 0 row was already emitted with the exact v0;
                // later rows use the centered velocity estimate
                if t > 0.0 {
                    let vel: Vec<f64> = y_next
                        .iter()
                        .zip(&y_prev)
                        .map(|(a, b)| (a - b) / (2.0 * dt))
                        .collect();
                    let rep = models::energy(&sys, t, &y, &vel).map_err(|e| e.to_string())?;
                    rows.push(energy_row(label, n, &rep));
                }
                y_prev = y;
                y = y_next;
                t += dt;
            }
        }
        Formulation::Rkn => {
            let pair = resolve_tableau(cfg)?;
            let bc = cfg.bc_or_default(pair.nystrom.is_explicit());
            let mut stepper = RknStepper::new(&sys, pair.nystrom, bc, cfg.solver.clone());
            stepper.prepare(dt).map_err(|e| e.to_string())?;
            let mut state = StepState::new(0.0, y0, v0);
            rows.push(energy_row(
                label,
                n,
                &models::energy(&sys, 0.0, &state.y, &state.y_t).map_err(|e| e.to_string())?,
            ));
            for _ in 0..steps {
                let (next, _) = stepper.step(&state, dt).map_err(|e| e.to_string())?;
                state = next;
                let rep = models::energy(&sys, state.t, &state.y, &state.y_t)
                    .map_err(|e| e.to_string())?;
                rows.push(energy_row(label, n, &rep));
            }
        }
        Formulation::Rk => {
            let pair = resolve_tableau(cfg)?;
            let rk = pair
                .rk
                .ok_or_else(|| format!("tableau '{}' has no first-order form", cfg.tableau))?;
            let red = reduce_first_order(&sys).map_err(|e| e.to_string())?;
            let mut stepper = RkStepper::new(&red, rk, cfg.solver.clone());
            stepper.prepare(dt).map_err(|e| e.to_string())?;
            let mut state = StepState::new(0.0, y0, v0);
            rows.push(energy_row(
                label,
                n,
                &models::energy(&sys, 0.0, &state.y, &state.y_t).map_err(|e| e.to_string())?,
            ));
            for _ in 0..steps {
                let (next, _) = stepper.step_state(&state, dt).map_err(|e| e.to_string())?;
                state = next;
                let rep = models::energy(&sys, state.t, &state.y, &state.y_t)
                    .map_err(|e| e.to_string())?;
                rows.push(energy_row(label, n, &rep));
            }
        }
    }
    Ok(())
}

const STUDY_HEADER: &[&str] = &["n", "mean_iters", "max_iters", "wall_time_s", "status"];

fn run_solve_study(
    cfg: &ExperimentConfig,
) -> Result<(&'static [&'static str], Rows, usize), String> {
    if cfg.formulation == Formulation::Central {
        return Err("solve-study needs formulation rkn or rk".into());
    }
    if cfg.solver.method != SolverMethod::Gmres {
        return Err("solve-study needs --solver gmres".into());
    }
    let mut rows = Vec::new();
    let mut failed = 0usize;
    for &n in &cfg.n_list {
        match study_row(cfg, n) {
            Ok((mean, max, secs)) => rows.push(vec![
                n.to_string(),
                format!("{mean:.4}"),
                max.to_string(),
                fmt_t(secs),
                "ok".into(),
            ]),
            Err(StudyFailure::NonConvergence) => {
                failed += 1;
                rows.push(vec![
                    n.to_string(),
                    format!("{:.4}", cfg.solver.max_iters as f64),
                    cfg.solver.max_iters.to_string(),
                    String::new(),
                    "nonconvergence: iteration cap recorded".into(),
                ]);
            }
            Err(StudyFailure::Other(e)) => {
                failed += 1;
                rows.push(vec![
                    n.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("failed: {}", sanitize(&e)),
                ]);
            }
        }
    }
    Ok((STUDY_HEADER, rows, failed))
}

enum StudyFailure {
    NonConvergence,
    Other(String),
}

/// Polynomial bump initial data for iteration studies. Unlike the sine
/// reference solutions this is not an eigenvector of the (K, M)
/// pencil, so the Krylov spaces have full dimension and iteration
/// counts reflect the operator conditioning.
fn study_initial(sys: &SecondOrderSystem) -> Result<Vec<f64>, String> {
    let exact = match sys.mesh.kind {
        models::ModelKind::Oscillator => ExactSolution::D1(Separable1d {
            space: Arc::new(|_| 1.0),
            space_dx: Arc::new(|_| 0.0),
            time: Arc::new(|_| 1.0),
            time_dt: Arc::new(|_| 0.0),
            time_dtt: Arc::new(|_| 0.0),
        }),
        models::ModelKind::Wave1d | models::ModelKind::Telegraph1d => {
            ExactSolution::D1(Separable1d {
                space: Arc::new(|x: f64| x * (1.0 - x)),
                space_dx: Arc::new(|x: f64| 1.0 - 2.0 * x),
                time: Arc::new(|_| 1.0),
                time_dt: Arc::new(|_| 0.0),
                time_dtt: Arc::new(|_| 0.0),
            })
        }
        models::ModelKind::Wave2d => ExactSolution::D2(Separable2d {
            space: Arc::new(|x: f64, y: f64| x * (1.0 - x) * y * (1.0 - y)),
            time: Arc::new(|_| 1.0),
            time_dt: Arc::new(|_| 0.0),
            time_dtt: Arc::new(|_| 0.0),
        }),
        models::ModelKind::Beam1d => ExactSolution::D1(Separable1d {
            space: Arc::new(|x: f64| x * x * (1.0 - x) * (1.0 - x)),
            space_dx: Arc::new(|x: f64| 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x)),
            time: Arc::new(|_| 1.0),
            time_dt: Arc::new(|_| 0.0),
            time_dtt: Arc::new(|_| 0.0),
        }),
    };
    models::interpolate(sys, &exact, 0.0).map_err(|e| e.to_string())
}

fn study_row(cfg: &ExperimentConfig, n: usize) -> Result<(f64, usize, f64), StudyFailure> {
    let wrap = |e: rkn_core::stepping::SteppingError| match e {
        rkn_core::stepping::SteppingError::Linalg(
            rkn_core::linalg::LinalgError::NonConvergence { .. },
        ) => StudyFailure::NonConvergence,
        other => StudyFailure::Other(other.to_string()),
    };
    // the study measures solver behavior, so it always runs the
    // unforced model with homogeneous boundary data
    let sys = assemble(&cfg.model, n).map_err(StudyFailure::Other)?;
    let h = mesh_h(&sys, n);
    let (steps, dt) = steps_for(cfg.t_final, cfg.dt_rule.dt_for(h));
    let y0 = study_initial(&sys).map_err(StudyFailure::Other)?;
    let v0 = vec![0.0; sys.m];

    let mut iters = Vec::with_capacity(steps);
    let seconds;
    match cfg.formulation {
        Formulation::Rkn => {
            let pair = resolve_tableau(cfg).map_err(StudyFailure::Other)?;
            let bc = cfg.bc_or_default(pair.nystrom.is_explicit());
            let mut stepper = RknStepper::new(&sys, pair.nystrom, bc, cfg.solver.clone());
            stepper.prepare(dt).map_err(wrap)?;
            let mut state = StepState::new(0.0, y0, v0);
            let t0 = Instant::now();
            for _ in 0..steps {
                let (next, report) = stepper.step(&state, dt).map_err(wrap)?;
                iters.push(report.iterations);
                state = next;
            }
            seconds = t0.elapsed().as_secs_f64();
        }
        Formulation::Rk => {
            let pair = resolve_tableau(cfg).map_err(StudyFailure::Other)?;
            let rk = pair.rk.ok_or_else(|| {
                StudyFailure::Other(format!("tableau '{}' has no first-order form", cfg.tableau))
            })?;
            let red = reduce_first_order(&sys).map_err(wrap)?;
            let mut stepper = RkStepper::new(&red, rk, cfg.solver.clone());
            stepper.prepare(dt).map_err(wrap)?;
            let mut state = StepState::new(0.0, y0, v0);
            let t0 = Instant::now();
            for _ in 0..steps {
                let (next, report) = stepper.step_state(&state, dt).map_err(wrap)?;
                iters.push(report.iterations);
                state = next;
            }
            seconds = t0.elapsed().as_secs_f64();
        }
        Formulation::Central => unreachable!("rejected above"),
    }
    let mean = iters.iter().sum::<usize>() as f64 / iters.len() as f64;
    let max = iters.into_iter().max().unwrap_or(0);
    Ok((mean, max, seconds))
}

const STABILITY_HEADER: &[&str] = &[
    "n",
    "lambda_max",
    "dt_stable",
    "steps_to_tfinal",
    "runtime_s",
    "gl2_runtime_s",
    "status",
];

fn run_stability(
    cfg: &ExperimentConfig,
) -> Result<(&'static [&'static str], Rows, usize), String> {
    let mut rows = Vec::new();
    let mut failed = 0usize;
    for &n in &cfg.n_list {
        match stability_row(cfg, n) {
            Ok(row) => rows.push(row),
            Err(e) => {
                failed += 1;
                rows.push(vec![
                    n.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("failed: {}", sanitize(&e)),
                ]);
            }
        }
    }
    Ok((STABILITY_HEADER, rows, failed))
}

/// Empirical stable-step bound for central differencing.
pub fn stable_dt(lambda_max: f64) -> f64 {
    if lambda_max <= 1e-12 {
        f64::INFINITY
    } else {
        2.0 / lambda_max.sqrt()
    }
}

/// One stability row: estimate lambda_max on the constrained pencil,
/// verify boundedness at 0.99 dt_stable and blow-up at 1.05 dt_stable,
/// and record the implicit GL(2) runtime at dt = h for comparison.
fn stability_row(cfg: &ExperimentConfig, n: usize) -> Result<Vec<String>, String> {
    let sys = assemble(&cfg.model, n)?;
    if sys.damping.nnz() > 0 {
        return Err("stability experiment needs an undamped model (C = 0)".into());
    }
    // the central scheme evolves the constrained system, so the
    // eigenvalue bound comes from the free-DOF pencil
    let free: Vec<usize> =
        (0..sys.m).filter(|l| !sys.dirichlet.indices.contains(l)).collect();
    let kff = sys.stiffness.submatrix(&free, &free);
    let mff = sys.mass.submatrix(&free, &free);
    let lambda = power_iteration_genev(&kff, &mff, 1e-9, 5_000_000).map_err(|e| e.to_string())?;
    let dt_s = stable_dt(lambda);
    if !dt_s.is_finite() {
        return Ok(vec![
            n.to_string(),
            fmt_e(lambda),
            "inf".into(),
            String::new(),
            String::new(),
            String::new(),
            "ok".into(),
        ]);
    }

    // seeded random initial data excites all modes
    let mut y0 = vec![0.0; sys.m];
    let rand_free = seeded_unit_vector(free.len(), 0x57ab);
    for (v, &l) in rand_free.iter().zip(&free) {
        y0[l] = *v;
    }
    let v0 = vec![0.0; sys.m];
    // boundedness is measured in the discrete L2 norm sqrt(y^T M y);
    // the plain 2-norm would mislabel neutral trajectories as unstable
    // on the beam, whose value and slope DOFs carry very different
    // mass weights
    let norm0 = discrete_l2(&sys.mass, &y0);
    let bound = 10.0 * norm0 + 1.0;

    let run_central = |dt: f64, max_steps: usize| -> Result<(bool, f64), String> {
        let stepper = CentralStepper::new(&sys, false).map_err(|e| e.to_string())?;
        let mut y_prev = central_start(&sys, &y0, &v0, dt).map_err(|e| e.to_string())?;
        let mut y = y0.clone();
        let mut t = 0.0;
        let t0 = Instant::now();
        for _ in 0..max_steps {
            let y_next = stepper.step(t, &y_prev, &y, dt).map_err(|e| e.to_string())?;
            y_prev = y;
            y = y_next;
            t += dt;
            let norm = discrete_l2(&sys.mass, &y);
            if !norm.is_finite() || norm > bound {
                return Ok((false, t0.elapsed().as_secs_f64()));
            }
        }
        Ok((true, t0.elapsed().as_secs_f64()))
    };

    let steps_stable = (cfg.t_final / (0.99 * dt_s)).ceil() as usize;
    let (bounded, runtime) = run_central(0.99 * dt_s, steps_stable)?;
    let blow_steps = steps_stable.max(2000);
    let (still_bounded, _) = run_central(1.05 * dt_s, blow_steps)?;
    let blew_up = !still_bounded;

    // implicit comparison: GL(2) at dt = h
    let gl2_runtime = {
        let pair_tab = by_name("gl2").map_err(|e| e.to_string())?;
        let NamedTableau::Rk(t) = pair_tab else { unreachable!("gl2 is an RK tableau") };
        let nystrom = extend_tableau(&t);
        let h = mesh_h(&sys, n);
        let (steps, dt) = steps_for(cfg.t_final, h);
        let mut stepper = RknStepper::new(
            &sys,
            nystrom,
            cfg.bc_or_default(false),
            cfg.solver.clone(),
        );
        stepper.prepare(dt).map_err(|e| e.to_string())?;
        let mut state = StepState::new(0.0, y0.clone(), v0.clone());
        let t0 = Instant::now();
        for _ in 0..steps {
            let (next, _) = stepper.step(&state, dt).map_err(|e| e.to_string())?;
            state = next;
            let norm = discrete_l2(&sys.mass, &state.y);
            if !norm.is_finite() || norm > bound {
                return Err("GL(2) run exceeded the boundedness threshold".into());
            }
        }
        t0.elapsed().as_secs_f64()
    };

    let status = match (bounded, blew_up) {
        (true, true) => "ok".to_string(),
        (false, _) => "stability-check-failed: unstable at 0.99*dt_stable".to_string(),
        (_, false) => "stability-check-failed: bounded at 1.05*dt_stable".to_string(),
    };
    Ok(vec![
        n.to_string(),
        fmt_e(lambda),
        fmt_e(dt_s),
        steps_stable.to_string(),
        fmt_t(runtime),
        fmt_t(gl2_runtime),
        status,
    ])
}

/// Strip commas/newlines so failure messages stay single CSV fields.
fn sanitize(msg: &str) -> String {
    msg.replace([',', '\n'], ";")
}
