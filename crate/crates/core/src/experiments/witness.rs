use alloc::format;

#[allow(unused_imports)]
use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::lagrangian::{unitary_of, CanonicalForm, LagrangianFrame};
use crate::linalg::{cidentity, kernel_split, C64};
use crate::slp::{eigen_multiplicity, monodromy_graph, SLProblem};
use crate::Tolerances;

use super::{frame_of, nth_eigenvalue, resolution, DirichletData};

/// Which end of `lambda_j(Σ_r)` is targeted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize),
    serde(rename_all = "lowercase")
)]
pub enum Side {
    Left,
    Right,
}

/// A boundary condition in `Σ_r` whose `j`-th eigenvalue is an endpoint of
/// `lambda_j(Σ_r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub side: Side,
    pub j: usize,
    pub r: usize,
    /// The Dirichlet eigenvalue at that end.
    pub target: f64,
    /// `lambda_j` of the witness.
    pub lambda: f64,
    /// `dim(Gr(gamma_target(T)) ∩ witness)`.
    pub multiplicity: usize,
    /// Tuning parameter: `A = (tan(s0) + 1) I`.
    pub s0: f64,
    pub form: CanonicalForm,
    pub frame: LagrangianFrame,
}

/// Largest exponent `k` tried for `|tan(s0) + 1| = 10^k`.
const MAX_TUNING: i32 = 4;
/// Singular value of `U(Gr) - I` above which a Dirichlet direction is not
/// treated as an eigenvector at the target.
const KERNEL_TOL: f64 = 1e-6;

/// Builds a witness for the closed endpoint of `lambda_j(Σ_r)` on `side`.
///
/// The intersection with `L_D` is the span of the `r` directions of `L_D`
/// closest to `Gr(gamma_target(T))` (so it contains as much of the
/// eigenspace at the target as `r` allows), and `A` is a multiple of the
/// identity pushed towards `+inf` (left) or `-inf` (right) until the `j`-th
/// eigenvalue lands on the target.
pub fn endpoint_witness(
    p: &SLProblem,
    j: usize,
    r: usize,
    side: Side,
    tol: &Tolerances,
) -> Result<Witness> {
    let m = 2 * p.n();
    if j == 0 || r > m {
        return Err(Error::InvalidProblem(format!("need j >= 1 and r <= {m}")));
    }
    let dd = DirichletData::compute(p, j + m + 1, tol)?;
    endpoint_witness_with(p, &dd, j, r, side, tol)
}

pub(crate) fn endpoint_witness_with(
    p: &SLProblem,
    dd: &DirichletData,
    j: usize,
    r: usize,
    side: Side,
    tol: &Tolerances,
) -> Result<Witness> {
    let m = 2 * p.n();
    let idx = match side {
        Side::Left if j <= m - r => {
            return Err(Error::CasePrecludesAttainment(format!(
                "lambda_{j}(Σ_{r}) is unbounded below since j <= 2n - r"
            )));
        }
        Side::Left => j - (m - r),
        Side::Right => j,
    };
    let (below, above) = dd.neighbours(idx)?;
    match side {
        Side::Left if r <= below => {
            return Err(Error::CasePrecludesAttainment(format!(
                "left endpoint is open: r = {r} <= b1 = {below}"
            )));
        }
        Side::Right if r <= above => {
            return Err(Error::CasePrecludesAttainment(format!(
                "right endpoint is open: r = {r} <= c2 = {above}"
            )));
        }
        _ => {}
    }
    let target = dd.value(idx);
    let l = below + above + 1;
    let u = unitary_of(&monodromy_graph(p, target, tol)?).into_matrix();
    let ks = kernel_split(&(u - cidentity(m)), 0.0);
    if ks.sigmas[l - 1] > KERNEL_TOL {
        return Err(Error::TuningFailed(format!(
            "Gr(gamma(T)) meets L_D in fewer than {l} dimensions at lambda = {target} (singular value {:e})",
            ks.sigmas[l - 1]
        )));
    }
    let basis = ks.complement;
    let sign = match side {
        Side::Left => 1.0,
        Side::Right => -1.0,
    };
    let want = r.min(l);
    let mut last = f64::NAN;
    for k in 0..=MAX_TUNING {
        let c = sign * 10f64.powi(k);
        let form = CanonicalForm {
            r,
            a: cidentity(m - r) * C64::new(c, 0.0),
            basis: basis.clone(),
        };
        let frame = frame_of(&form);
        let lambda = nth_eigenvalue(p, &frame, j, tol)?;
        last = lambda;
        if (lambda - target).abs() <= resolution(tol, target) {
            let multiplicity = eigen_multiplicity(p, &frame, target, tol)?;
            if multiplicity >= want {
                return Ok(Witness {
                    side,
                    j,
                    r,
                    target,
                    lambda,
                    multiplicity,
                    s0: (c - 1.0).atan(),
                    form,
                    frame,
                });
            }
        }
    }
    Err(Error::TuningFailed(format!(
        "lambda_{j} stayed at {last} instead of {target}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::layer_of;
    use core::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn free_1d_right_endpoint_of_first_eigenvalue() {
        let p = SLProblem::free(1, PI);
        let w = endpoint_witness(&p, 1, 1, Side::Right, &tol()).unwrap();
        assert!((w.lambda - 1.0).abs() < 1e-8, "{}", w.lambda);
        assert_eq!(layer_of(&w.frame, &tol()).unwrap(), 1);
        assert!(w.multiplicity >= 1);
    }

    #[test]
    fn free_1d_left_endpoint_of_second_eigenvalue() {
        let p = SLProblem::free(1, PI);
        let w = endpoint_witness(&p, 2, 1, Side::Left, &tol()).unwrap();
        assert!((w.lambda - 1.0).abs() < 1e-8, "{}", w.lambda);
        assert_eq!(layer_of(&w.frame, &tol()).unwrap(), 1);
    }

    #[test]
    fn open_endpoints_are_refused() {
        let p = SLProblem::free(1, PI);
        // r = 0 <= c2 = 0
        assert!(matches!(
            endpoint_witness(&p, 1, 0, Side::Right, &tol()),
            Err(Error::CasePrecludesAttainment(_))
        ));
        // j <= 2n - r
        assert!(matches!(
            endpoint_witness(&p, 1, 1, Side::Left, &tol()),
            Err(Error::CasePrecludesAttainment(_))
        ));
        // double eigenvalue: r = 1 <= c2 = 1 for j = 1
        let p2 = SLProblem::free(2, PI);
        assert!(matches!(
            endpoint_witness(&p2, 1, 1, Side::Right, &tol()),
            Err(Error::CasePrecludesAttainment(_))
        ));
    }

    #[test]
    fn double_problem_closed_right_endpoint() {
        let p = SLProblem::free(2, PI);
        let w = endpoint_witness(&p, 1, 2, Side::Right, &tol()).unwrap();
        assert!((w.lambda - 1.0).abs() < 1e-8);
        assert_eq!(w.multiplicity, 2);
    }
}
