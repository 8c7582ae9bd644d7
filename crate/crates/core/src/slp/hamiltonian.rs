use crate::error::{Error, Result};
use crate::linalg::RMat;

use super::{CoefficientFn, SLProblem};

fn p_inverse(pm: RMat, t: f64) -> Result<RMat> {
    let chol = pm.clone().cholesky().ok_or(Error::SingularP { t })?;
    let eig = pm.symmetric_eigenvalues();
    if eig.min() <= 1e-13 * eig.max() {
        return Err(Error::SingularP { t });
    }
    Ok(chol.inverse())
}

/// `B = [[P^-1, -P^-1 Q], [-Q^T P^-1, Q^T P^-1 Q - R + lambda D]]`.
pub fn b_lambda(p: &SLProblem, t: f64, lambda: f64) -> Result<RMat> {
    b_at(p, t, None, lambda)
}

/// `B` at `t`; inside a segment piecewise-constant coefficients take the
/// segment's value so that the right end of a segment sees the left limit.
fn b_at(p: &SLProblem, t: f64, seg: Option<(f64, f64)>, lambda: f64) -> Result<RMat> {
    let n = p.n();
    let ev = |c: &CoefficientFn| match seg {
        Some(s) => c.eval_in(t, s),
        None => c.eval(t),
    };
    let pinv = p_inverse(ev(&p.p), t)?;
    let q = ev(&p.q);
    let pq = &pinv * &q;
    let mut b = RMat::zeros(2 * n, 2 * n);
    b.view_mut((0, 0), (n, n)).copy_from(&pinv);
    b.view_mut((0, n), (n, n)).copy_from(&(-&pq));
    b.view_mut((n, 0), (n, n)).copy_from(&(-pq.transpose()));
    let lower = q.transpose() * &pq - ev(&p.r) + ev(&p.d) * lambda;
    b.view_mut((n, n), (n, n)).copy_from(&lower);
    Ok(b)
}

/// `J B` with `J = [[0, -I], [I, 0]]`, the generator of `z' = J B z`.
pub fn jb_lambda(p: &SLProblem, t: f64, lambda: f64) -> Result<RMat> {
    Ok(j_times(p.n(), &b_lambda(p, t, lambda)?))
}

fn j_times(n: usize, b: &RMat) -> RMat {
    let mut out = RMat::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, 2 * n)).copy_from(&(-b.rows(n, n)));
    out.view_mut((n, 0), (n, 2 * n)).copy_from(&b.rows(0, n));
    out
}

/// `J B_lambda` on one integration segment, cached when the coefficients
/// do not vary inside it.
pub(crate) struct Generator<'a> {
    p: &'a SLProblem,
    lambda: f64,
    seg: (f64, f64),
    cached: Option<RMat>,
}

impl<'a> Generator<'a> {
    pub(crate) fn new(p: &'a SLProblem, lambda: f64, seg: (f64, f64)) -> Result<Self> {
        let mut g = Generator {
            p,
            lambda,
            seg,
            cached: None,
        };
        if [&p.p, &p.q, &p.r, &p.d]
            .iter()
            .all(|c| c.is_segment_constant())
        {
            g.cached = Some(g.compute(0.5 * (seg.0 + seg.1))?);
        }
        Ok(g)
    }

    fn compute(&self, t: f64) -> Result<RMat> {
        Ok(j_times(
            self.p.n(),
            &b_at(self.p, t, Some(self.seg), self.lambda)?,
        ))
    }

    pub(crate) fn eval(&self, t: f64) -> Result<RMat> {
        match &self.cached {
            Some(m) => Ok(m.clone()),
            None => self.compute(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_lambda_examples() {
        let p = SLProblem::free(1, 1.0);
        let b = b_lambda(&p, 0.3, 2.5).unwrap();
        assert_eq!(b, RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.5]));

        let mut p2 = SLProblem::free(2, 1.0);
        p2.p = CoefficientFn::Constant(RMat::from_diagonal_element(2, 2, 4.0));
        let b = b_lambda(&p2, 0.0, 0.0).unwrap();
        let mut want = RMat::zeros(4, 4);
        want[(0, 0)] = 0.25;
        want[(1, 1)] = 0.25;
        assert!((b - want).norm() < 1e-15);

        let mut pq = SLProblem::free(1, 1.0);
        pq.q = CoefficientFn::Constant(RMat::from_element(1, 1, 3.0));
        let b = b_lambda(&pq, 0.0, 0.0).unwrap();
        assert!((&b - RMat::from_row_slice(2, 2, &[1.0, -3.0, -3.0, 9.0])).norm() < 1e-14);
        assert_eq!(b, b.transpose());
    }

    #[test]
    fn generator_of_free_problem() {
        // y' = -lambda x, x' = y
        let p = SLProblem::free(1, 1.0);
        let g = jb_lambda(&p, 0.0, 2.0).unwrap();
        assert_eq!(g, RMat::from_row_slice(2, 2, &[0.0, -2.0, 1.0, 0.0]));
    }

    #[test]
    fn segment_generator_uses_left_limit_at_breakpoint() {
        let mut p = SLProblem::free(1, 2.0);
        p.r = CoefficientFn::PiecewiseConstant {
            breaks: alloc::vec![1.0],
            values: alloc::vec![RMat::from_element(1, 1, 3.0), RMat::from_element(1, 1, 5.0)],
        };
        let g = Generator::new(&p, 0.0, (0.0, 1.0)).unwrap();
        assert_eq!(g.eval(1.0).unwrap()[(0, 1)], 3.0);
        let g = Generator::new(&p, 0.0, (1.0, 2.0)).unwrap();
        assert_eq!(g.eval(1.0).unwrap()[(0, 1)], 5.0);
    }
}
