//! Linear second-order test systems: M y'' + C y' + K y = f(t).
//!
//! All models are assembled on uniform meshes of the unit interval or
//! unit square. The 2D operators are built from the 1D ones through the
//! tensor identities `M2 = M1 (x) M1` and `K2 = K1 (x) M1 + M1 (x) K1`.

use crate::linalg::SparseMatrix;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("mesh needs at least 2 elements, got {n}")]
    TooFewElements { n: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("boundary data disagrees with the initial state at index {index} (|diff| = {diff:.3e})")]
    InconsistentBoundaryData { index: usize, diff: f64 },
    #[error("exact solution dimensionality does not match the model")]
    ExactSolutionMismatch,
}

pub type TimeVec = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ScalarFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Oscillator,
    Wave1d,
    Wave2d,
    Telegraph1d,
    Beam1d,
}

/// Mesh metadata carried by every assembled system.
#[derive(Clone, Copy, Debug)]
pub struct MeshInfo {
    pub kind: ModelKind,
    pub dim: usize,
    /// Elements (or cells per axis in 2D).
    pub n: usize,
    pub h: f64,
}

/// Strongly constrained degrees of freedom with their time-dependent
/// data. The three callbacks return values over `indices` only and are
/// the boundary data together with its first and second analytic time
/// derivatives.
#[derive(Clone)]
pub struct BoundarySpec {
    pub indices: Vec<usize>,
    pub value: TimeVec,
    pub velocity: TimeVec,
    pub acceleration: TimeVec,
}

impl BoundarySpec {
    /// Homogeneous Dirichlet data on the given indices.
    pub fn homogeneous(indices: Vec<usize>) -> Self {
        let k = indices.len();
        let zero: TimeVec = Arc::new(move |_| vec![0.0; k]);
        Self { indices, value: zero.clone(), velocity: zero.clone(), acceleration: zero }
    }

    /// Check that the boundary data agrees with an initial state at
    /// time `t0` to within `tol`.
    pub fn check_consistent(
        &self,
        t0: f64,
        y0: &[f64],
        v0: &[f64],
        tol: f64,
    ) -> Result<(), ModelError> {
        let hv = (self.value)(t0);
        let hd = (self.velocity)(t0);
        for (k, &l) in self.indices.iter().enumerate() {
            let dy = (hv[k] - y0[l]).abs();
            if dy > tol {
                return Err(ModelError::InconsistentBoundaryData { index: l, diff: dy });
            }
            let dv = (hd[k] - v0[l]).abs();
            if dv > tol {
                return Err(ModelError::InconsistentBoundaryData { index: l, diff: dv });
            }
        }
        Ok(())
    }
}

/// An assembled semidiscrete system. Immutable after assembly; the
/// forcing and boundary callbacks must be pure functions of t.
#[derive(Clone)]
pub struct SecondOrderSystem {
    pub m: usize,
    pub mass: SparseMatrix,
    pub damping: SparseMatrix,
    pub stiffness: SparseMatrix,
    pub forcing: TimeVec,
    pub dirichlet: BoundarySpec,
    pub mesh: MeshInfo,
    pub label: String,
}

impl SecondOrderSystem {
    pub fn unforced(
        mass: SparseMatrix,
        damping: SparseMatrix,
        stiffness: SparseMatrix,
        dirichlet: BoundarySpec,
        mesh: MeshInfo,
        label: impl Into<String>,
    ) -> Self {
        let m = mass.n_rows();
        let zero: TimeVec = Arc::new(move |_| vec![0.0; m]);
        Self { m, mass, damping, stiffness, forcing: zero, dirichlet, mesh, label: label.into() }
    }
}

/// Discrete energy split at one time level.
#[derive(Clone, Copy, Debug)]
pub struct EnergyReport {
    pub t: f64,
    /// `1/2 y_t^T M y_t`
    pub kinetic: f64,
    /// `1/2 y^T K y`
    pub potential: f64,
    pub total: f64,
}

/// Evaluate the discrete energy `1/2 y_t^T M y_t + 1/2 y^T K y`.
pub fn energy(
    sys: &SecondOrderSystem,
    t: f64,
    y: &[f64],
    y_t: &[f64],
) -> Result<EnergyReport, ModelError> {
    if y.len() != sys.m || y_t.len() != sys.m {
        return Err(ModelError::DimensionMismatch { expected: sys.m, found: y.len().max(y_t.len()) });
    }
    let mut work = vec![0.0; sys.m];
    sys.mass.spmv_into(y_t, &mut work);
    let kinetic = 0.5 * dot(y_t, &work);
    sys.stiffness.spmv_into(y, &mut work);
    let potential = 0.5 * dot(y, &work);
    Ok(EnergyReport { t, kinetic, potential, total: kinetic + potential })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// 1D P1 mass and stiffness on a uniform n-element mesh of [0, L].
fn p1_pair(n: usize, length: f64) -> (SparseMatrix, SparseMatrix) {
    let h = length / n as f64;
    let m_e = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
    let k_e = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
    let mut mt = Vec::with_capacity(4 * n);
    let mut kt = Vec::with_capacity(4 * n);
    for e in 0..n {
        for a in 0..2 {
            for b in 0..2 {
                mt.push((e + a, e + b, m_e[a][b]));
                kt.push((e + a, e + b, k_e[a][b]));
            }
        }
    }
    let m = SparseMatrix::from_triplets(n + 1, n + 1, &mt).expect("in range");
    let k = SparseMatrix::from_triplets(n + 1, n + 1, &kt).expect("in range");
    (m, k)
}

/// P1 wave equation on [0, L]: hat functions, C = 0, both endpoints
/// constrained.
pub fn assemble_wave_1d(n: usize, length: f64) -> Result<SecondOrderSystem, ModelError> {
    if n < 2 {
        return Err(ModelError::TooFewElements { n });
    }
    let (mass, stiffness) = p1_pair(n, length);
    let m = n + 1;
    let mesh = MeshInfo { kind: ModelKind::Wave1d, dim: 1, n, h: length / n as f64 };
    Ok(SecondOrderSystem::unforced(
        mass,
        SparseMatrix::zeros(m, m),
        stiffness,
        BoundarySpec::homogeneous(vec![0, n]),
        mesh,
        "wave1d",
    ))
}

/// Q1 wave equation on the unit square, n x n cells. All boundary nodes
/// are constrained. Node (a, b) has index `a*(n+1) + b` and coordinates
/// `(a*h, b*h)`.
pub fn assemble_wave_2d(n: usize) -> Result<SecondOrderSystem, ModelError> {
    if n < 2 {
        return Err(ModelError::TooFewElements { n });
    }
    let (m1, k1) = p1_pair(n, 1.0);
    let mass = SparseMatrix::kron(&m1, &m1);
    let stiffness = {
        let km = SparseMatrix::kron(&k1, &m1);
        let mk = SparseMatrix::kron(&m1, &k1);
        let mut entries: Vec<(usize, usize, f64)> = km.iter().collect();
        entries.extend(mk.iter());
        SparseMatrix::from_triplets(km.n_rows(), km.n_cols(), &entries).expect("in range")
    };
    let nn = n + 1;
    let mut boundary = Vec::new();
    for a in 0..nn {
        for b in 0..nn {
            if a == 0 || a == n || b == 0 || b == n {
                boundary.push(a * nn + b);
            }
        }
    }
    let m = nn * nn;
    let mesh = MeshInfo { kind: ModelKind::Wave2d, dim: 2, n, h: 1.0 / n as f64 };
    Ok(SecondOrderSystem::unforced(
        mass,
        SparseMatrix::zeros(m, m),
        stiffness,
        BoundarySpec::homogeneous(boundary),
        mesh,
        "wave2d",
    ))
}

/// Telegraph equation on [0, 1]: as the 1D wave system but with C = M.
pub fn assemble_telegraph_1d(n: usize) -> Result<SecondOrderSystem, ModelError> {
    let mut sys = assemble_wave_1d(n, 1.0)?;
    sys.damping = sys.mass.clone();
    sys.mesh.kind = ModelKind::Telegraph1d;
    sys.label = "telegraph1d".into();
    Ok(sys)
}

/// Clamped Euler-Bernoulli beam on [0, 1] with Hermite cubic elements
/// (EI = 1, unit density). Node i carries a value DOF `2i` and a slope
/// DOF `2i + 1`; value and slope are constrained at both ends.
pub fn assemble_beam_1d(n: usize) -> Result<SecondOrderSystem, ModelError> {
    if n < 2 {
        return Err(ModelError::TooFewElements { n });
    }
    let h = 1.0 / n as f64;
    let (h2, h3) = (h * h, h * h * h);
    let mf = h / 420.0;
    let m_e = [
        [156.0 * mf, 22.0 * h * mf, 54.0 * mf, -13.0 * h * mf],
        [22.0 * h * mf, 4.0 * h2 * mf, 13.0 * h * mf, -3.0 * h2 * mf],
        [54.0 * mf, 13.0 * h * mf, 156.0 * mf, -22.0 * h * mf],
        [-13.0 * h * mf, -3.0 * h2 * mf, -22.0 * h * mf, 4.0 * h2 * mf],
    ];
    let kf = 1.0 / h3;
    let k_e = [
        [12.0 * kf, 6.0 * h * kf, -12.0 * kf, 6.0 * h * kf],
        [6.0 * h * kf, 4.0 * h2 * kf, -6.0 * h * kf, 2.0 * h2 * kf],
        [-12.0 * kf, -6.0 * h * kf, 12.0 * kf, -6.0 * h * kf],
        [6.0 * h * kf, 2.0 * h2 * kf, -6.0 * h * kf, 4.0 * h2 * kf],
    ];
    let m_dofs = 2 * (n + 1);
    let mut mt = Vec::with_capacity(16 * n);
    let mut kt = Vec::with_capacity(16 * n);
    for e in 0..n {
        let dofs = [2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3];
        for a in 0..4 {
            for b in 0..4 {
                mt.push((dofs[a], dofs[b], m_e[a][b]));
                kt.push((dofs[a], dofs[b], k_e[a][b]));
            }
        }
    }
    let mass = SparseMatrix::from_triplets(m_dofs, m_dofs, &mt).expect("in range");
    let stiffness = SparseMatrix::from_triplets(m_dofs, m_dofs, &kt).expect("in range");
    let mesh = MeshInfo { kind: ModelKind::Beam1d, dim: 1, n, h };
    Ok(SecondOrderSystem::unforced(
        mass,
        SparseMatrix::zeros(m_dofs, m_dofs),
        stiffness,
        BoundarySpec::homogeneous(vec![0, 1, 2 * n, 2 * n + 1]),
        mesh,
        "beam1d",
    ))
}

/// Single-DOF oscillator y'' = -y, handy for convergence studies.
pub fn oscillator() -> SecondOrderSystem {
    let one = SparseMatrix::identity(1);
    let mesh = MeshInfo { kind: ModelKind::Oscillator, dim: 0, n: 1, h: 1.0 };
    SecondOrderSystem::unforced(
        one.clone(),
        SparseMatrix::zeros(1, 1),
        one,
        BoundarySpec::homogeneous(Vec::new()),
        mesh,
        "oscillator",
    )
}

/// Separable space-time exact solution u(x, t) = space(x) * time(t).
/// `space_dx` supplies the spatial derivative needed for slope DOFs.
#[derive(Clone)]
pub struct Separable1d {
    pub space: ScalarFn,
    pub space_dx: ScalarFn,
    pub time: ScalarFn,
    pub time_dt: ScalarFn,
    pub time_dtt: ScalarFn,
}

/// Separable exact solution u(x, y, t) = space(x, y) * time(t).
#[derive(Clone)]
pub struct Separable2d {
    pub space: ScalarFn2,
    pub time: ScalarFn,
    pub time_dt: ScalarFn,
    pub time_dtt: ScalarFn,
}

#[derive(Clone)]
pub enum ExactSolution {
    D1(Separable1d),
    D2(Separable2d),
}

impl ExactSolution {
    pub fn time_factors(&self) -> (ScalarFn, ScalarFn, ScalarFn) {
        match self {
            ExactSolution::D1(e) => (e.time.clone(), e.time_dt.clone(), e.time_dtt.clone()),
            ExactSolution::D2(e) => (e.time.clone(), e.time_dt.clone(), e.time_dtt.clone()),
        }
    }
}

/// DOF vector of the spatial factor of a separable exact solution.
pub fn spatial_dof_vector(
    sys: &SecondOrderSystem,
    exact: &ExactSolution,
) -> Result<Vec<f64>, ModelError> {
    match (sys.mesh.kind, exact) {
        (ModelKind::Oscillator, ExactSolution::D1(e)) => Ok(vec![(e.space)(0.0)]),
        (ModelKind::Wave1d | ModelKind::Telegraph1d, ExactSolution::D1(e)) => {
            let n = sys.mesh.n;
            let h = sys.mesh.h;
            Ok((0..=n).map(|i| (e.space)(i as f64 * h)).collect())
        }
        (ModelKind::Beam1d, ExactSolution::D1(e)) => {
            let n = sys.mesh.n;
            let h = sys.mesh.h;
            let mut dofs = Vec::with_capacity(2 * (n + 1));
            for i in 0..=n {
                let x = i as f64 * h;
                dofs.push((e.space)(x));
                dofs.push((e.space_dx)(x));
            }
            Ok(dofs)
        }
        (ModelKind::Wave2d, ExactSolution::D2(e)) => {
            let n = sys.mesh.n;
            let h = sys.mesh.h;
            let nn = n + 1;
            let mut dofs = Vec::with_capacity(nn * nn);
            for a in 0..nn {
                for b in 0..nn {
                    dofs.push((e.space)(a as f64 * h, b as f64 * h));
                }
            }
            Ok(dofs)
        }
        _ => Err(ModelError::ExactSolutionMismatch),
    }
}

/// DOF interpolant of the exact solution at time t.
pub fn interpolate(
    sys: &SecondOrderSystem,
    exact: &ExactSolution,
    t: f64,
) -> Result<Vec<f64>, ModelError> {
    let s = spatial_dof_vector(sys, exact)?;
    let (time, _, _) = exact.time_factors();
    let ft = time(t);
    Ok(s.into_iter().map(|v| v * ft).collect())
}

/// DOF interpolant of the exact time derivative at time t.
pub fn interpolate_velocity(
    sys: &SecondOrderSystem,
    exact: &ExactSolution,
    t: f64,
) -> Result<Vec<f64>, ModelError> {
    let s = spatial_dof_vector(sys, exact)?;
    let (_, time_dt, _) = exact.time_factors();
    let ft = time_dt(t);
    Ok(s.into_iter().map(|v| v * ft).collect())
}

/// Equip a system with manufactured forcing and Dirichlet data so the
/// DOF interpolant of `exact` solves the semidiscrete equations
/// exactly:
///
/// ```text
/// f(t) = M y_ex''(t) + C y_ex'(t) + K y_ex(t).
/// ```
pub fn manufactured_problem(
    sys: &SecondOrderSystem,
    exact: &ExactSolution,
) -> Result<SecondOrderSystem, ModelError> {
    let s = spatial_dof_vector(sys, exact)?;
    let ms = sys.mass.spmv(&s).expect("assembled dims agree");
    let cs = sys.damping.spmv(&s).expect("assembled dims agree");
    let ks = sys.stiffness.spmv(&s).expect("assembled dims agree");
    let (time, time_dt, time_dtt) = exact.time_factors();

    let mut out = sys.clone();
    {
        let (time, time_dt, time_dtt) = (time.clone(), time_dt.clone(), time_dtt.clone());
        out.forcing = Arc::new(move |t: f64| {
            let (ft, fdt, fdtt) = (time(t), time_dt(t), time_dtt(t));
            ms.iter()
                .zip(&cs)
                .zip(&ks)
                .map(|((m, c), k)| fdtt * m + fdt * c + ft * k)
                .collect()
        });
    }
    let indices = sys.dirichlet.indices.clone();
    let restricted: Vec<f64> = indices.iter().map(|&l| s[l]).collect();
    let bc = |factor: ScalarFn, vals: Vec<f64>| -> TimeVec {
        Arc::new(move |t: f64| {
            let ft = factor(t);
            vals.iter().map(|v| v * ft).collect()
        })
    };
    out.dirichlet = BoundarySpec {
        indices,
        value: bc(time, restricted.clone()),
        velocity: bc(time_dt, restricted.clone()),
        acceleration: bc(time_dtt, restricted),
    };
    // the boundary data is consistent with the interpolated initial
    // state by construction; verify the claim once
    let y0 = interpolate(sys, exact, 0.0)?;
    let v0 = interpolate_velocity(sys, exact, 0.0)?;
    out.dirichlet.check_consistent(0.0, &y0, &v0, 1e-10)?;
    Ok(out)
}
