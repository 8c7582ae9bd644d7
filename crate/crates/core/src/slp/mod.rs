//! Matrix Sturm-Liouville problems `-(P x' + Q x)' + Q^T x' + R x = lambda D x`
//! on `[0, T]` and their spectra.

mod galerkin;
mod hamiltonian;
pub mod integrator;
mod monodromy;
mod reduction;
mod shooting;

use alloc::format;
use alloc::vec::Vec;
use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::linalg::RMat;

pub use galerkin::{galerkin_spectrum, galerkin_spectrum_with_vectors, GalerkinSystem};
pub use hamiltonian::{b_lambda, jb_lambda};
pub use monodromy::{eigen_multiplicity, monodromy, monodromy_graph, Monodromy};
pub use reduction::{weighted_reduction, BoundaryTransform};
pub use shooting::{
    count_eigenvalues, eigenvalues_shooting, lower_spectral_bound, lowest_eigenvalues, Diagnostics,
    Eigenvalue, LowerBound, Method, MultiplicityMismatch, Spectrum,
};

/// Matrix-valued coefficient on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientFn {
    Constant(RMat),
    /// `sum_k C_k t^k`.
    Polynomial(Vec<RMat>),
    /// `values[i]` on `[breaks[i-1], breaks[i])`, with `breaks` strictly
    /// increasing inside `(0, T)` and one more value than breaks.
    PiecewiseConstant {
        breaks: Vec<f64>,
        values: Vec<RMat>,
    },
}

impl CoefficientFn {
    pub fn zero(n: usize) -> Self {
        CoefficientFn::Constant(RMat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        CoefficientFn::Constant(RMat::identity(n, n))
    }

    fn matrices(&self) -> &[RMat] {
        match self {
            CoefficientFn::Constant(m) => core::slice::from_ref(m),
            CoefficientFn::Polynomial(c) => c,
            CoefficientFn::PiecewiseConstant { values, .. } => values,
        }
    }

    pub fn eval(&self, t: f64) -> RMat {
        match self {
            CoefficientFn::Constant(m) => m.clone(),
            CoefficientFn::Polynomial(c) => {
                let mut acc = c[c.len() - 1].clone();
                for ck in c.iter().rev().skip(1) {
                    acc = acc * t + ck;
                }
                acc
            }
            CoefficientFn::PiecewiseConstant { breaks, values } => {
                let i = breaks.iter().take_while(|&&b| t >= b).count();
                values[i].clone()
            }
        }
    }

    /// Value on the open segment `seg`, which must not contain breakpoints.
    pub fn eval_in(&self, t: f64, seg: (f64, f64)) -> RMat {
        match self {
            CoefficientFn::PiecewiseConstant { .. } => self.eval(0.5 * (seg.0 + seg.1)),
            _ => self.eval(t),
        }
    }

    fn is_segment_constant(&self) -> bool {
        matches!(self, CoefficientFn::PiecewiseConstant { .. }) || self.is_constant()
    }

    pub fn is_constant(&self) -> bool {
        match self {
            CoefficientFn::Constant(_) => true,
            CoefficientFn::Polynomial(c) => c.iter().skip(1).all(|m| m.iter().all(|&x| x == 0.0)),
            CoefficientFn::PiecewiseConstant { values, .. } => {
                values.windows(2).all(|w| w[0] == w[1])
            }
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        match self {
            CoefficientFn::PiecewiseConstant { breaks, .. } => breaks,
            _ => &[],
        }
    }

    fn check_shape(&self, n: usize, name: &str, t_end: f64) -> Result<()> {
        let ms = self.matrices();
        if ms.is_empty() {
            return Err(Error::InvalidProblem(format!("{name} has no data")));
        }
        for m in ms {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidProblem(format!("{name} must be {n}x{n}")));
            }
            if !m.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidProblem(format!(
                    "{name} has non-finite entries"
                )));
            }
        }
        if let CoefficientFn::PiecewiseConstant { breaks, values } = self {
            if values.len() != breaks.len() + 1 {
                return Err(Error::InvalidProblem(format!(
                    "{name} needs one more value than breakpoints"
                )));
            }
            let inside = breaks.iter().all(|&b| b > 0.0 && b < t_end);
            let increasing = breaks.windows(2).all(|w| w[0] < w[1]);
            if !inside || !increasing {
                return Err(Error::InvalidProblem(format!(
                    "{name} breakpoints must increase inside (0, T)"
                )));
            }
        }
        Ok(())
    }
}

/// Coefficients `P, Q, R, D` of dimension `n` on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SLProblem {
    n: usize,
    t_end: f64,
    pub p: CoefficientFn,
    pub q: CoefficientFn,
    pub r: CoefficientFn,
    pub d: CoefficientFn,
}

const VALIDATION_POINTS: usize = 33;

impl SLProblem {
    /// Validates shapes, symmetry of `P, R, D` and positivity of `P, D` on a
    /// grid that includes both sides of every breakpoint.
    pub fn new(
        n: usize,
        t_end: f64,
        p: CoefficientFn,
        q: CoefficientFn,
        r: CoefficientFn,
        d: CoefficientFn,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidProblem("n must be positive".into()));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidProblem("T must be positive".into()));
        }
        for (c, name) in [(&p, "P"), (&q, "Q"), (&r, "R"), (&d, "D")] {
            c.check_shape(n, name, t_end)?;
        }
        let prob = SLProblem {
            n,
            t_end,
            p,
            q,
            r,
            d,
        };
        for t in prob.validation_grid() {
            for (c, name, definite) in [
                (&prob.p, "P", true),
                (&prob.r, "R", false),
                (&prob.d, "D", true),
            ] {
                let m = c.eval(t);
                let asym = (&m - m.transpose()).norm();
                if asym > 1e-12 * m.norm().max(1.0) {
                    return Err(Error::InvalidProblem(format!(
                        "{name} is not symmetric at t = {t}"
                    )));
                }
                if definite && m.clone().cholesky().is_none() {
                    return Err(Error::InvalidProblem(format!(
                        "{name} is not positive definite at t = {t}"
                    )));
                }
            }
        }
        Ok(prob)
    }

    /// `P = D = I`, `Q = R = 0`.
    pub fn free(n: usize, t_end: f64) -> Self {
        SLProblem {
            n,
            t_end,
            p: CoefficientFn::identity(n),
            q: CoefficientFn::zero(n),
            r: CoefficientFn::zero(n),
            d: CoefficientFn::identity(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn is_constant(&self) -> bool {
        [&self.p, &self.q, &self.r, &self.d]
            .iter()
            .all(|c| c.is_constant())
    }

    /// Sorted union of coefficient breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = [&self.p, &self.q, &self.r, &self.d]
            .iter()
            .flat_map(|c| c.breakpoints().iter().copied())
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Integration segments `[t_i, t_{i+1}]` split at breakpoints.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        let mut pts = alloc::vec![0.0];
        pts.extend(self.breakpoints());
        pts.push(self.t_end);
        pts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    fn validation_grid(&self) -> Vec<f64> {
        let mut g: Vec<f64> = (0..VALIDATION_POINTS)
            .map(|k| self.t_end * k as f64 / (VALIDATION_POINTS - 1) as f64)
            .collect();
        let span = self.t_end * 1e-9;
        for b in self.breakpoints() {
            g.push(b - span);
            g.push(b);
        }
        g
    }

    /// Rough size of the low spectrum, used to place the initial search
    /// grid: `(pi/T)^2 max|P| / min D + (|R| + |Q|^2 / min P) / min D`.
    pub fn spectral_scale(&self) -> f64 {
        let mut s = 1.0f64;
        for t in self.validation_grid() {
            let p = self.p.eval(t).symmetric_eigenvalues();
            let d = self.d.eval(t).symmetric_eigenvalues();
            let (pmin, pmax) = (p.min(), p.max());
            let dmin = d.min();
            let q = crate::linalg::real_spectral_norm(&self.q.eval(t));
            let r = crate::linalg::real_spectral_norm(&self.r.eval(t));
            let w = (core::f64::consts::PI / self.t_end).powi(2);
            s = s.max((w * pmax + r + q * q / pmin) / dmin);
        }
        s
    }

    /// Spacing of `sqrt(lambda)` between consecutive eigenvalues of one
    /// scalar component, lower estimate.
    pub(crate) fn sqrt_spacing(&self) -> f64 {
        let mut ratio = f64::INFINITY;
        for t in self.validation_grid() {
            let p = self.p.eval(t).symmetric_eigenvalues();
            let d = self.d.eval(t).symmetric_eigenvalues();
            ratio = ratio.min(p.min() / d.max());
        }
        core::f64::consts::PI / self.t_end * ratio.sqrt()
    }
}
