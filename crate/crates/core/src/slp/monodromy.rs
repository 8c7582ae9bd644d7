use crate::error::{Error, Result};
use crate::lagrangian::{frame_from_pre_s, intersection_dim, LagrangianFrame, SymplecticMat};
use crate::linalg::{self, RMat};
use crate::Tolerances;

use super::hamiltonian::Generator;
use super::integrator::{self, Failure, Options, StepStats};
use super::SLProblem;

/// Tolerance tightenings tried after a symplectic-defect breach.
const TIGHTENINGS: usize = 2;
const TIGHTEST: f64 = 1e-14;
/// Column norm above which the propagated graph frame is re-orthonormalized.
const RENORMALIZE_AT: f64 = 1e3;

/// Fundamental solution `gamma_lambda(T)` with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Monodromy {
    pub lambda: f64,
    pub gamma: SymplecticMat,
    pub stats: StepStats,
    pub symp_defect: f64,
}

fn divergence(f: Failure, lambda: f64) -> Error {
    let t = match f {
        Failure::NonFinite { t } | Failure::StepBudget { t } | Failure::StepTooSmall { t } => t,
    };
    Error::IntegratorDivergence { t, lambda }
}

/// Integrates `Y' = F(t) Y` across all segments of `p`, where `F` is the
/// generator or its block-diagonal extension when `stacked`.
fn propagate(
    p: &SLProblem,
    lambda: f64,
    y0: RMat,
    rtol: f64,
    stacked: bool,
) -> Result<(RMat, StepStats)> {
    let n = p.n();
    let opts = Options::with_tol(rtol);
    let mut y = y0;
    let mut stats = StepStats::default();
    for seg in p.segments() {
        let gen = Generator::new(p, lambda, seg)?;
        let mut failed: Option<Error> = None;
        let f = |t: f64| -> RMat {
            let g = match gen.eval(t) {
                Ok(g) => g,
                Err(e) => {
                    failed.get_or_insert(e);
                    return RMat::from_element(y_rows(n, stacked), y_rows(n, stacked), f64::NAN);
                }
            };
            if stacked {
                let mut big = RMat::zeros(4 * n, 4 * n);
                big.view_mut((2 * n, 2 * n), (2 * n, 2 * n)).copy_from(&g);
                big
            } else {
                g
            }
        };
        let hook = |_t: f64, y: &mut RMat| {
            if stacked && y.column_iter().any(|c| c.norm() > RENORMALIZE_AT) {
                *y = y.clone().qr().q();
            }
        };
        let local = Options {
            h_init: (stats.last_h > 0.0).then_some(stats.last_h),
            ..opts
        };
        let out = integrator::integrate(f, seg.0, seg.1, y, &local, hook);
        if let Some(e) = failed {
            return Err(e);
        }
        let (y1, s) = out.map_err(|f| divergence(f, lambda))?;
        stats.merge(&s);
        y = y1;
    }
    Ok((y, stats))
}

fn y_rows(n: usize, stacked: bool) -> usize {
    if stacked {
        4 * n
    } else {
        2 * n
    }
}

/// `gamma_lambda(T)` for `gamma' = J B_lambda gamma`, `gamma(0) = I`. The
/// integrator tolerance is tightened when the symplectic defect exceeds
/// `tol.symp`.
pub fn monodromy(p: &SLProblem, lambda: f64, tol: &Tolerances) -> Result<Monodromy> {
    let n = p.n();
    let mut rtol = tol.integrator;
    let mut defect = f64::NAN;
    for _ in 0..=TIGHTENINGS {
        let (gamma, stats) = propagate(p, lambda, RMat::identity(2 * n, 2 * n), rtol, false)?;
        let gamma = SymplecticMat::new_unchecked(n, gamma);
        defect = gamma.defect();
        if defect <= tol.symp {
            return Ok(Monodromy {
                lambda,
                gamma,
                stats,
                symp_defect: defect,
            });
        }
        if rtol <= TIGHTEST {
            break;
        }
        rtol = (rtol * 1e-2).max(TIGHTEST);
    }
    Err(Error::SymplecticDefect { defect, lambda })
}

/// Orthonormal frame of `Gr(gamma_lambda(T))` in the standard boundary
/// basis.
///
/// The graph `[I; gamma(t)]` is propagated as a `4n x 2n` frame and
/// re-orthonormalized whenever it grows, so the result stays accurate for
/// strongly negative `lambda` where `gamma` itself overflows.
pub fn monodromy_graph(p: &SLProblem, lambda: f64, tol: &Tolerances) -> Result<LagrangianFrame> {
    let n = p.n();
    let mut start = RMat::zeros(4 * n, 2 * n);
    start.view_mut((0, 0), (2 * n, 2 * n)).fill_with_identity();
    start
        .view_mut((2 * n, 0), (2 * n, 2 * n))
        .fill_with_identity();
    let start = start * core::f64::consts::FRAC_1_SQRT_2;
    let mut rtol = tol.integrator;
    let mut defect = f64::NAN;
    for _ in 0..=TIGHTENINGS {
        let (y, _) = propagate(p, lambda, start.clone(), rtol, true)?;
        let z = linalg::orthonormalize(&frame_from_pre_s(&linalg::to_complex(&y)));
        let m = 2 * n;
        let x = z.rows(0, m);
        let yy = z.rows(m, m);
        defect = (x.adjoint() * yy - yy.adjoint() * x).norm();
        if defect <= tol.symp {
            return Ok(LagrangianFrame::new_unchecked(z));
        }
        if rtol <= TIGHTEST {
            break;
        }
        rtol = (rtol * 1e-2).max(TIGHTEST);
    }
    Err(Error::SymplecticDefect { defect, lambda })
}

/// `dim(Gr(gamma_lambda(T)) ∩ L0)`, the multiplicity of `lambda` as an
/// eigenvalue for the boundary condition `L0`.
pub fn eigen_multiplicity(
    p: &SLProblem,
    l0: &LagrangianFrame,
    lambda: f64,
    tol: &Tolerances,
) -> Result<usize> {
    if l0.m() != 2 * p.n() {
        return Err(Error::DimensionMismatch {
            expected: 2 * p.n(),
            found: l0.m(),
        });
    }
    intersection_dim(&monodromy_graph(p, lambda, tol)?, l0, tol.rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{dirichlet, graph_lagrangian, neumann, unitary_of};
    use crate::slp::CoefficientFn;
    use core::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn free_rotation_at_pi() {
        let p = SLProblem::free(1, PI);
        let m = monodromy(&p, 1.0, &tol()).unwrap();
        assert!((m.gamma.matrix() + RMat::identity(2, 2)).norm() < 1e-8);
        assert!(m.symp_defect <= tol().symp);
    }

    #[test]
    fn zero_lambda_is_a_shear() {
        let p = SLProblem::free(1, 2.5);
        let m = monodromy(&p, 0.0, &tol()).unwrap();
        let want = RMat::from_row_slice(2, 2, &[1.0, 0.0, 2.5, 1.0]);
        assert!((m.gamma.matrix() - want).norm() < 1e-10);
    }

    #[test]
    fn hyperbolic_closed_form() {
        // lambda = -mu^2: x = cosh, y = mu sinh
        let mu: f64 = 1.7;
        let t = 1.3;
        let p = SLProblem::free(1, t);
        let g = monodromy(&p, -mu * mu, &tol()).unwrap();
        let (c, s) = ((mu * t).cosh(), (mu * t).sinh());
        let want = RMat::from_row_slice(2, 2, &[c, mu * s, s / mu, c]);
        assert!((g.gamma.matrix() - want).norm() < 1e-9 * c);
    }

    #[test]
    fn stacked_graph_matches_direct_graph() {
        let mut p = SLProblem::free(2, 1.5);
        p.q = CoefficientFn::Constant(RMat::from_row_slice(2, 2, &[0.2, -0.4, 0.1, 0.3]));
        p.r = CoefficientFn::Polynomial(alloc::vec![
            RMat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -2.0]),
            RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        ]);
        for lambda in [-30.0, 0.7, 12.0] {
            let direct = graph_lagrangian(&monodromy(&p, lambda, &tol()).unwrap().gamma);
            let stacked = monodromy_graph(&p, lambda, &tol()).unwrap();
            let d = (unitary_of(&direct).into_matrix() - unitary_of(&stacked).into_matrix()).norm();
            assert!(d < 1e-8, "lambda {lambda}: {d}");
        }
    }

    #[test]
    fn multiplicities_of_free_problem() {
        let p = SLProblem::free(1, PI);
        let d = dirichlet(2);
        assert_eq!(eigen_multiplicity(&p, &d, 1.0, &tol()).unwrap(), 1);
        assert_eq!(eigen_multiplicity(&p, &d, 4.0, &tol()).unwrap(), 1);
        assert_eq!(eigen_multiplicity(&p, &d, 2.5, &tol()).unwrap(), 0);
        assert_eq!(eigen_multiplicity(&p, &neumann(2), 0.0, &tol()).unwrap(), 1);
        let p2 = SLProblem::free(2, PI);
        assert_eq!(
            eigen_multiplicity(&p2, &dirichlet(4), 4.0, &tol()).unwrap(),
            2
        );
    }

    #[test]
    fn very_negative_lambda_stays_finite() {
        let p = SLProblem::free(1, PI);
        let g = monodromy_graph(&p, -1e5, &tol()).unwrap();
        assert!(crate::lagrangian::dist(&g, &dirichlet(2)).unwrap() < 1e-2);
    }
}
