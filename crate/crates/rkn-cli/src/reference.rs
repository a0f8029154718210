//! Reference solutions and initial data for the built-in models.
//!
//! Each model ships with a separable exact solution used for initial
//! data and error measurement:
//!
//! * oscillator:  y(t) = cos(t), the unforced exact solution.
//! * wave1d:      u = sin(pi x) cos(pi t), an exact unforced solution,
//!   so the measured error is dominated by the O(h^2) spatial error.
//! * wave2d:      u = sin(pi x) sin(pi y) cos(sqrt(2) pi t), likewise.
//! * telegraph1d: the decaying mode
//!   u = e^{-t/2} (cos(w t) + sin(w t)/(2w)) sin(pi x), w^2 = pi^2 - 1/4.
//! * beam1d:      manufactured u = x^2 (1 - x) (1 + t^2 / 2); the cubic
//!   spatial factor is exactly representable by Hermite elements and
//!   the quadratic time factor is integrated exactly by two-stage
//!   collocation, so errors sit at solver tolerance.

use rkn_core::models::{self, ExactSolution, SecondOrderSystem, Separable1d, Separable2d};
use std::f64::consts::PI;
use std::sync::Arc;

pub struct Reference {
    pub exact: ExactSolution,
    /// Whether the system must be equipped with manufactured forcing
    /// and boundary data (true when `exact` does not satisfy the
    /// unforced PDE).
    pub manufactured: bool,
}

/// Assemble a model by CLI name.
pub fn assemble(model: &str, n: usize) -> Result<SecondOrderSystem, String> {
    let sys = match model {
        "oscillator" => Ok(models::oscillator()),
        "wave1d" => models::assemble_wave_1d(n, 1.0),
        "wave2d" => models::assemble_wave_2d(n),
        "telegraph1d" => models::assemble_telegraph_1d(n),
        "beam1d" => models::assemble_beam_1d(n),
        other => return Err(format!("unknown model '{other}'")),
    };
    sys.map_err(|e| e.to_string())
}

/// Mesh parameter used by dt rules; the oscillator has no mesh, so n
/// acts as a resolution count with h = 1/n.
pub fn mesh_h(sys: &SecondOrderSystem, n: usize) -> f64 {
    match sys.mesh.kind {
        models::ModelKind::Oscillator => 1.0 / n as f64,
        _ => sys.mesh.h,
    }
}

pub fn reference_for(model: &str) -> Option<Reference> {
    match model {
        "oscillator" => Some(Reference {
            exact: ExactSolution::D1(Separable1d {
                space: Arc::new(|_| 1.0),
                space_dx: Arc::new(|_| 0.0),
                time: Arc::new(|t: f64| t.cos()),
                time_dt: Arc::new(|t: f64| -t.sin()),
                time_dtt: Arc::new(|t: f64| -t.cos()),
            }),
            manufactured: false,
        }),
        "wave1d" => Some(Reference {
            exact: ExactSolution::D1(Separable1d {
                space: Arc::new(|x: f64| (PI * x).sin()),
                space_dx: Arc::new(|x: f64| PI * (PI * x).cos()),
                time: Arc::new(|t: f64| (PI * t).cos()),
                time_dt: Arc::new(|t: f64| -PI * (PI * t).sin()),
                time_dtt: Arc::new(|t: f64| -PI * PI * (PI * t).cos()),
            }),
            manufactured: false,
        }),
        "wave2d" => {
            let omega = 2.0_f64.sqrt() * PI;
            Some(Reference {
                exact: ExactSolution::D2(Separable2d {
                    space: Arc::new(|x: f64, y: f64| (PI * x).sin() * (PI * y).sin()),
                    time: Arc::new(move |t: f64| (omega * t).cos()),
                    time_dt: Arc::new(move |t: f64| -omega * (omega * t).sin()),
                    time_dtt: Arc::new(move |t: f64| -omega * omega * (omega * t).cos()),
                }),
                manufactured: false,
            })
        }
        "telegraph1d" => {
            // q'' + q' + pi^2 q = 0 with q(0) = 1, q'(0) = 0
            let w = (PI * PI - 0.25).sqrt();
            let q = move |t: f64| (-0.5 * t).exp() * ((w * t).cos() + (w * t).sin() / (2.0 * w));
            let qd = move |t: f64| -(-0.5 * t).exp() * (w * t).sin() * (w + 1.0 / (4.0 * w));
            let qdd = move |t: f64| -qd(t) - PI * PI * q(t);
            Some(Reference {
                exact: ExactSolution::D1(Separable1d {
                    space: Arc::new(|x: f64| (PI * x).sin()),
                    space_dx: Arc::new(|x: f64| PI * (PI * x).cos()),
                    time: Arc::new(q),
                    time_dt: Arc::new(qd),
                    time_dtt: Arc::new(qdd),
                }),
                manufactured: false,
            })
        }
        "beam1d" => Some(Reference {
            exact: ExactSolution::D1(Separable1d {
                space: Arc::new(|x: f64| x * x * (1.0 - x)),
                space_dx: Arc::new(|x: f64| 2.0 * x - 3.0 * x * x),
                time: Arc::new(|t: f64| 1.0 + 0.5 * t * t),
                time_dt: Arc::new(|t: f64| t),
                time_dtt: Arc::new(|_| 1.0),
            }),
            manufactured: true,
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telegraph_time_factor_solves_its_ode() {
        let r = reference_for("telegraph1d").unwrap();
        let ExactSolution::D1(e) = &r.exact else { panic!() };
        for &t in &[0.0, 0.3, 1.7] {
            let residual = (e.time_dtt)(t) + (e.time_dt)(t) + PI * PI * (e.time)(t);
            assert!(residual.abs() < 1e-12, "residual {residual} at t = {t}");
        }
        assert!(((e.time)(0.0) - 1.0).abs() < 1e-15);
        assert!((e.time_dt)(0.0).abs() < 1e-15);
    }

    #[test]
    fn wave_references_satisfy_the_pde() {
        // u_tt = Laplacian u pointwise for the continuous solutions
        let r = reference_for("wave1d").unwrap();
        let ExactSolution::D1(e) = &r.exact else { panic!() };
        // u_tt + pi^2 u = 0 and -u_xx = pi^2 u
        for &t in &[0.1, 0.9] {
            let ratio = (e.time_dtt)(t) / (e.time)(t);
            assert!((ratio + PI * PI).abs() < 1e-9);
        }
        let r2 = reference_for("wave2d").unwrap();
        let ExactSolution::D2(e2) = &r2.exact else { panic!() };
        for &t in &[0.2, 0.8] {
            let ratio = (e2.time_dtt)(t) / (e2.time)(t);
            assert!((ratio + 2.0 * PI * PI).abs() < 1e-9);
        }
    }

    #[test]
    fn every_model_assembles_and_has_reference() {
        for model in ["oscillator", "wave1d", "wave2d", "telegraph1d", "beam1d"] {
            let sys = assemble(model, 4).unwrap();
            assert!(reference_for(model).is_some(), "{model}");
            assert!(mesh_h(&sys, 4) > 0.0);
        }
        assert!(assemble("nosuch", 4).is_err());
        assert!(reference_for("nosuch").is_none());
    }
}
