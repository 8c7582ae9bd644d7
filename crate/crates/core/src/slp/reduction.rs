use crate::error::{Error, Result};
use crate::lagrangian::{LagrangianFrame, SymplecticMat};
use crate::linalg::RMat;
#[allow(unused_imports)]
use nalgebra::ComplexField;

use super::{CoefficientFn, SLProblem};

/// Boundary-data map `(X, Y) -> (G X, G^{-1} Y)` with `G = diag(S, S)`,
/// `S = D^{-1/2}`, induced by `x = S w`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTransform {
    s: RMat,
    s_inv: RMat,
}

impl BoundaryTransform {
    /// `D^{-1/2}`.
    pub fn s(&self) -> &RMat {
        &self.s
    }

    /// The real symplectic `4n x 4n` matrix of the transform.
    pub fn symplectic(&self) -> SymplecticMat {
        let n = self.s.nrows();
        let mut m = RMat::zeros(4 * n, 4 * n);
        for (k, blk) in [&self.s, &self.s, &self.s_inv, &self.s_inv]
            .into_iter()
            .enumerate()
        {
            m.view_mut((k * n, k * n), (n, n)).copy_from(blk);
        }
        SymplecticMat::new_unchecked(2 * n, m)
    }

    pub fn apply(&self, l: &LagrangianFrame) -> LagrangianFrame {
        l.transformed(&self.symplectic())
    }
}

fn map(c: &CoefficientFn, s: &RMat) -> CoefficientFn {
    let f = |m: &RMat| s * m * s;
    match c {
        CoefficientFn::Constant(m) => CoefficientFn::Constant(f(m)),
        CoefficientFn::Polynomial(cs) => CoefficientFn::Polynomial(cs.iter().map(f).collect()),
        CoefficientFn::PiecewiseConstant { breaks, values } => CoefficientFn::PiecewiseConstant {
            breaks: breaks.clone(),
            values: values.iter().map(f).collect(),
        },
    }
}

/// Substitutes `x = D^{-1/2} w` in a problem with constant weight `D`,
/// giving `P~ = S P S`, `Q~ = S Q S`, `R~ = S R S` and `D~ = I`. Boundary
/// conditions carry over through the returned transform.
pub fn weighted_reduction(p: &SLProblem) -> Result<(SLProblem, BoundaryTransform)> {
    if !p.d.is_constant() {
        return Err(Error::DNotConstant);
    }
    let n = p.n();
    let d = p.d.eval(0.0);
    let eig = d.symmetric_eigen();
    let root = |e: fn(f64) -> f64| {
        let diag = RMat::from_diagonal(&eig.eigenvalues.map(e));
        &eig.eigenvectors * diag * eig.eigenvectors.transpose()
    };
    let s = root(|x| 1.0 / x.sqrt());
    let s_inv = root(f64::sqrt);
    let reduced = SLProblem::new(
        n,
        p.t_end(),
        map(&p.p, &s),
        map(&p.q, &s),
        map(&p.r, &s),
        CoefficientFn::identity(n),
    )?;
    Ok((reduced, BoundaryTransform { s, s_inv }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::dirichlet;
    use crate::slp::eigenvalues_shooting;
    use crate::Tolerances;
    use core::f64::consts::PI;

    #[test]
    fn identity_weight_is_unchanged() {
        let p = SLProblem::free(2, 1.0);
        let (q, t) = weighted_reduction(&p).unwrap();
        assert_eq!(q, p);
        assert!((t.s() - RMat::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn scalar_weight_scales_spectrum() {
        let mut p = SLProblem::free(1, PI);
        p.d = CoefficientFn::Constant(RMat::from_element(1, 1, 4.0));
        let tol = Tolerances::default();
        let direct = eigenvalues_shooting(&p, &dirichlet(2), (0.1, 2.4), &tol)
            .unwrap()
            .values();
        let (q, t) = weighted_reduction(&p).unwrap();
        let reduced = eigenvalues_shooting(&q, &t.apply(&dirichlet(2)), (0.1, 2.4), &tol)
            .unwrap()
            .values();
        assert_eq!(direct.len(), 3);
        for ((a, b), j) in direct.iter().zip(&reduced).zip([1.0f64, 2.0, 3.0]) {
            assert!((a - j * j / 4.0).abs() < 1e-8);
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn time_dependent_weight_is_rejected() {
        let mut p = SLProblem::free(1, 1.0);
        p.d = CoefficientFn::Polynomial(alloc::vec![
            RMat::from_element(1, 1, 1.0),
            RMat::from_element(1, 1, 1.0)
        ]);
        assert_eq!(weighted_reduction(&p).unwrap_err(), Error::DNotConstant);
    }

    #[test]
    fn transform_is_symplectic() {
        let mut p = SLProblem::free(2, 1.0);
        p.d = CoefficientFn::Constant(RMat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]));
        let (_, t) = weighted_reduction(&p).unwrap();
        assert!(t.symplectic().defect() < 1e-14);
    }
}
