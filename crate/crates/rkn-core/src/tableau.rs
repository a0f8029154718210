//! Butcher and Nystrom tableaux: construction, extension, verification,
//! and triangular factoring.
//!
//! A Runge-Kutta method for first-order systems is given by its Butcher
//! tableau (A, b, c). Applying such a method to a second-order equation
//! reduced to first-order form and eliminating the redundant stage set
//! yields an extended Nystrom tableau (Abar, A, bbar, b, c) with
//!
//! ```text
//! Abar = A^2,    bbar = A^T b.
//! ```
//!
//! Nystrom-type tableaux also exist that are not derivable this way
//! (e.g. [`classical_nystrom_tableau`]).

use crate::linalg::dense::{self, DMat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableauError {
    #[error("{family:?} collocation supports 1..=5 stages, got {s}")]
    UnsupportedStageCount { family: CollocationFamily, s: usize },
    #[error("tableau weights must sum to 1, got {sum}")]
    InconsistentWeights { sum: f64 },
    #[error("tableau dimensions disagree")]
    DimensionMismatch,
    #[error("LDU factorization failed: zero leading principal minor (pivot {pivot})")]
    SingularFactorization { pivot: usize },
    #[error("unknown tableau name '{0}'")]
    UnknownName(String),
}

/// Structural class of a Butcher matrix, decided by exact zero tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableauKind {
    Explicit,
    DiagonallyImplicit,
    FullyImplicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollocationFamily {
    GaussLegendre,
    RadauIIA,
}

/// Coefficients (A, b, c) of an s-stage Runge-Kutta method.
#[derive(Clone, Debug)]
pub struct ButcherTableau {
    pub s: usize,
    pub a: DMat,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub kind: TableauKind,
}

impl ButcherTableau {
    /// Validate dimensions and consistency (sum b = 1 within 1e-12),
    /// then classify the structure.
    pub fn new(a: DMat, b: Vec<f64>, c: Vec<f64>) -> Result<Self, TableauError> {
        let s = b.len();
        if c.len() != s || a.n_rows() != s || a.n_cols() != s {
            return Err(TableauError::DimensionMismatch);
        }
        let sum: f64 = b.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(TableauError::InconsistentWeights { sum });
        }
        let kind = if a.is_strictly_lower() {
            TableauKind::Explicit
        } else if a.is_lower() {
            TableauKind::DiagonallyImplicit
        } else {
            TableauKind::FullyImplicit
        };
        Ok(Self { s, a, b, c, kind })
    }
}

/// Extended tableau for Runge-Kutta-Nystrom methods. `inherited` marks
/// tableaux produced by [`extend_tableau`], for which `Abar = A^2` and
/// `bbar = A^T b` hold by construction.
#[derive(Clone, Debug)]
pub struct NystromTableau {
    pub s: usize,
    pub abar: DMat,
    pub a: DMat,
    pub bbar: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub inherited: bool,
}

impl NystromTableau {
    /// True when both `Abar` and `A` are strictly lower triangular, so
    /// the stages can be evaluated by forward substitution.
    pub fn is_explicit(&self) -> bool {
        self.abar.is_strictly_lower() && self.a.is_strictly_lower()
    }
}

// Collocation nodes, stored to full double precision.
// Gauss-Legendre: roots of the shifted Legendre polynomial P_s(2x-1).
// RadauIIA: right Radau points (c_s = 1 exactly).
const GAUSS_NODES: [&[f64]; 5] = [
    &[0.5],
    &[0.21132486540518711775, 0.78867513459481288225],
    &[0.11270166537925831148, 0.5, 0.88729833462074168852],
    &[
        0.069431844202973712388,
        0.33000947820757186760,
        0.66999052179242813240,
        0.93056815579702628761,
    ],
    &[
        0.046910077030668003601,
        0.23076534494715845448,
        0.5,
        0.76923465505284154552,
        0.95308992296933199640,
    ],
];

const RADAU_IIA_NODES: [&[f64]; 5] = [
    &[1.0],
    &[1.0 / 3.0, 1.0],
    &[0.15505102572168219018, 0.64494897427831780982, 1.0],
    &[
        0.088587959512703947396,
        0.40946686444073471087,
        0.78765946176084705603,
        1.0,
    ],
    &[
        0.057104196114517682193,
        0.27684301363812382768,
        0.58359043236891682006,
        0.86024013565621944669,
        1.0,
    ],
];

/// Build the collocation tableau on the family's nodes: `c` holds the
/// nodes, `A[i][j] = int_0^{c_i} l_j`, `b[j] = int_0^1 l_j` with `l_j`
/// the Lagrange basis on the nodes. The integrals are evaluated exactly
/// through a monomial-basis Vandermonde solve (s <= 5 keeps this well
/// conditioned).
pub fn collocation_tableau(
    family: CollocationFamily,
    s: usize,
) -> Result<ButcherTableau, TableauError> {
    if s < 1 || s > 5 {
        return Err(TableauError::UnsupportedStageCount { family, s });
    }
    let nodes: &[f64] = match family {
        CollocationFamily::GaussLegendre => GAUSS_NODES[s - 1],
        CollocationFamily::RadauIIA => RADAU_IIA_NODES[s - 1],
    };
    let c = nodes.to_vec();
    // Vandermonde V[k][j] = c_j^k; row i of A solves V a_i = (c_i^{k+1}/(k+1))_k
    let mut v = DMat::zeros(s, s);
    for k in 0..s {
        for j in 0..s {
            v.set(k, j, c[j].powi(k as i32));
        }
    }
    let mut a = DMat::zeros(s, s);
    for i in 0..s {
        let w: Vec<f64> = (0..s).map(|k| c[i].powi(k as i32 + 1) / (k as f64 + 1.0)).collect();
        let row = dense::lu_solve(&v, &w).expect("collocation Vandermonde is nonsingular");
        for j in 0..s {
            a.set(i, j, row[j]);
        }
    }
    let w: Vec<f64> = (0..s).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    let b = dense::lu_solve(&v, &w).expect("collocation Vandermonde is nonsingular");
    let tab = ButcherTableau::new(a, b, c)?;
    let expected_order = match family {
        CollocationFamily::GaussLegendre => 2 * s,
        CollocationFamily::RadauIIA => 2 * s - 1,
    };
    assert!(
        verify_order(&tab, expected_order),
        "stored {family:?} nodes for s={s} fail the order-{expected_order} conditions"
    );
    Ok(tab)
}

/// Extend a Butcher tableau to the Nystrom form: `Abar = A^2`,
/// `bbar = A^T b`; `A`, `b`, `c` are carried over.
pub fn extend_tableau(tab: &ButcherTableau) -> NystromTableau {
    let abar = tab.a.matmul(&tab.a);
    let bbar = tab.a.transpose_mul_vec(&tab.b);
    NystromTableau {
        s: tab.s,
        abar,
        a: tab.a.clone(),
        bbar,
        b: tab.b.clone(),
        c: tab.c.clone(),
        inherited: true,
    }
}

/// The classical four-stage Nystrom scheme. Not derivable from any
/// Runge-Kutta method (`Abar != A^2`), hence `inherited = false`.
pub fn classical_nystrom_tableau() -> NystromTableau {
    let abar = DMat::from_rows(&[
        vec![0.0, 0.0, 0.0, 0.0],
        vec![1.0 / 8.0, 0.0, 0.0, 0.0],
        vec![1.0 / 8.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.5, 0.0],
    ]);
    let a = DMat::from_rows(&[
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.0, 0.0],
        vec![0.0, 0.5, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
    ]);
    NystromTableau {
        s: 4,
        abar,
        a,
        bbar: vec![1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.0],
        b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        c: vec![0.0, 0.5, 0.5, 1.0],
        inherited: false,
    }
}

/// The classical explicit fourth-order Runge-Kutta tableau.
pub fn classical_rk4() -> ButcherTableau {
    let a = DMat::from_rows(&[
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.0, 0.0],
        vec![0.0, 0.5, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
    ]);
    ButcherTableau::new(
        a,
        vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        vec![0.0, 0.5, 0.5, 1.0],
    )
    .expect("classical RK4 coefficients are consistent")
}

/// Check the simplified quadrature conditions B(p):
/// `sum_i b_i c_i^{k-1} = 1/k` for all k <= p, within 1e-10.
pub fn verify_order(tab: &ButcherTableau, p: usize) -> bool {
    for k in 1..=p {
        let lhs: f64 = tab
            .b
            .iter()
            .zip(&tab.c)
            .map(|(&bi, &ci)| bi * ci.powi(k as i32 - 1))
            .sum();
        if (lhs - 1.0 / k as f64).abs() > 1e-10 {
            return false;
        }
    }
    true
}

/// The largest q such that the stage conditions C(k) hold for all
/// k <= q: `sum_j a_ij c_j^{k-1} = c_i^k / k` for every stage i.
pub fn stage_order(tab: &ButcherTableau) -> usize {
    let mut q = 0;
    'outer: for k in 1..=(2 * tab.s + 1) {
        for i in 0..tab.s {
            let lhs: f64 = (0..tab.s)
                .map(|j| tab.a.get(i, j) * tab.c[j].powi(k as i32 - 1))
                .sum();
            let rhs = tab.c[i].powi(k as i32) / k as f64;
            if (lhs - rhs).abs() > 1e-10 {
                break 'outer;
            }
        }
        q = k;
    }
    q
}

/// How a lower-triangular approximation of a stage-coupling matrix is
/// formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriangularSource {
    /// Diagonal part only.
    Diagonal,
    /// Lower triangle including the diagonal.
    LowerPart,
    /// `L*D` from the LDU factorization (no pivoting).
    ClinesLd,
}

/// Lower-triangular approximation used to build stage-segregated
/// preconditioners.
#[derive(Clone, Debug)]
pub struct TriangularApproximation {
    pub atilde: DMat,
    pub source: TriangularSource,
}

/// Form the requested triangular approximation of `abar`. The LDU route
/// runs without pivoting (pivoting would destroy the triangular
/// structure the preconditioner relies on); a vanishing leading
/// principal minor is reported as an error so the caller can fall back
/// to another preconditioner.
pub fn triangular_approx(
    abar: &DMat,
    source: TriangularSource,
) -> Result<TriangularApproximation, TableauError> {
    let atilde = match source {
        TriangularSource::Diagonal => abar.diagonal_part(),
        TriangularSource::LowerPart => abar.lower_part(),
        TriangularSource::ClinesLd => {
            let (l, d, _u) = dense::ldu(abar)
                .map_err(|e| match e {
                    crate::linalg::LinalgError::SingularFactorization { pivot } => {
                        TableauError::SingularFactorization { pivot }
                    }
                    _ => TableauError::SingularFactorization { pivot: 0 },
                })?;
            let mut ld = DMat::zeros(abar.n_rows(), abar.n_cols());
            for i in 0..abar.n_rows() {
                for j in 0..=i {
                    ld.set(i, j, l.get(i, j) * d[j]);
                }
            }
            ld
        }
    };
    Ok(TriangularApproximation { atilde, source })
}

/// Tableaux addressable by name from the command line.
pub enum NamedTableau {
    /// A Runge-Kutta tableau; usable for both RK stepping and (via
    /// [`extend_tableau`]) RKN stepping.
    Rk(ButcherTableau),
    /// A genuine Nystrom tableau with no underlying RK method.
    NystromOnly(NystromTableau),
}

/// Look up a tableau by CLI name: `gl1`..`gl3`, `radau1`..`radau3`,
/// `nystrom4`.
pub fn by_name(name: &str) -> Result<NamedTableau, TableauError> {
    let rk = |family, s| collocation_tableau(family, s).map(NamedTableau::Rk);
    match name {
        "gl1" => rk(CollocationFamily::GaussLegendre, 1),
        "gl2" => rk(CollocationFamily::GaussLegendre, 2),
        "gl3" => rk(CollocationFamily::GaussLegendre, 3),
        "radau1" => rk(CollocationFamily::RadauIIA, 1),
        "radau2" => rk(CollocationFamily::RadauIIA, 2),
        "radau3" => rk(CollocationFamily::RadauIIA, 3),
        "nystrom4" => Ok(NamedTableau::NystromOnly(classical_nystrom_tableau())),
        other => Err(TableauError::UnknownName(other.to_string())),
    }
}
