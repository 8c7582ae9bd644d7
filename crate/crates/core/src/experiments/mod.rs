//! Drivers that probe how eigenvalue branches depend on the boundary
//! condition: layers `Σ_r`, tan-paths, jumps at layer changes, the range of
//! `lambda_j` over a layer and the `lambda -> -inf` limit of the graph.

mod jump;
mod limit;
mod range;
mod witness;

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
#[allow(unused_imports)]
use nalgebra::ComplexField;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lagrangian::{
    canonical_form, dirichlet, intersection_dim, lagrangian_from_unitary, CanonicalForm,
    LagrangianFrame, UnitaryRep,
};
use crate::linalg::{cidentity, C64};
use crate::sampling;
use crate::slp::{lowest_eigenvalues, SLProblem};
use crate::Tolerances;

pub use jump::{jump_experiment, BranchLimit, JumpOptions, JumpReport, JumpSide, SingularPath};
pub use limit::{limit_experiment, LimitOptions, LimitReport, Transversality};
pub use range::{
    constant_branch_check, range_scan, ConstantBranchReport, Endpoint, RangeCase, RangeOptions,
    RangeReport, TanSweep, WitnessOutcome,
};
pub use witness::{endpoint_witness, Side, Witness};

/// `r = dim(L ∩ L_D)`.
pub fn layer_of(l: &LagrangianFrame, tol: &Tolerances) -> Result<usize> {
    intersection_dim(l, &dirichlet(l.m()), tol.rank)
}

/// `L_s` with canonical form `(r, A0 + tan(s) I)`; `L_D` for `|s| >= pi/2`.
pub fn tan_path(l0: &LagrangianFrame, s: f64, tol: &Tolerances) -> Result<LagrangianFrame> {
    Ok(tan_path_canonical(&canonical_form(l0, tol)?, s))
}

pub fn tan_path_canonical(cf: &CanonicalForm, s: f64) -> LagrangianFrame {
    if s.abs() >= FRAC_PI_2 {
        return dirichlet(cf.m());
    }
    let a = &cf.a + cidentity(cf.k0()) * C64::new(s.tan(), 0.0);
    frame_of(&cf.with_a(a))
}

/// Frame of a canonical form built through its unitary, which stays well
/// conditioned when `A` is large.
pub fn frame_of(cf: &CanonicalForm) -> LagrangianFrame {
    lagrangian_from_unitary(&UnitaryRep::new_unchecked(cf.unitary()))
}

/// Random element of `Σ_r` in `C^{2m}`: Haar basis (so a Haar `r`-plane of
/// `L_D`) and a Hermitized standard normal `A`.
pub fn sample_layer<R: Rng + ?Sized>(rng: &mut R, m: usize, r: usize) -> CanonicalForm {
    let basis = sampling::unitary(rng, m);
    let a = sampling::hermitian(rng, m - r);
    CanonicalForm { r, a, basis }
}

/// `lambda_j(L)` counted from 1 with multiplicity.
pub fn nth_eigenvalue(
    p: &SLProblem,
    l: &LagrangianFrame,
    j: usize,
    tol: &Tolerances,
) -> Result<f64> {
    lowest_values(p, l, j, tol).map(|v| v[j - 1])
}

/// `lambda_1(L), ..., lambda_k(L)`.
pub fn lowest_values(
    p: &SLProblem,
    l: &LagrangianFrame,
    k: usize,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidProblem(
            "eigenvalue indices start at 1".into(),
        ));
    }
    let mut v = lowest_eigenvalues(p, l, k, tol)?.values();
    v.truncate(k);
    Ok(v)
}

/// Relative distance under which two computed eigenvalues cannot be told
/// apart, and the slack used when comparing against an endpoint.
pub(crate) fn resolution(tol: &Tolerances, x: f64) -> f64 {
    100.0 * tol.lambda * x.abs().max(1.0)
}

/// Dirichlet eigenvalues with the cluster structure needed by the case
/// table.
#[derive(Clone, Debug)]
pub(crate) struct DirichletData {
    values: Vec<f64>,
    /// Index of the cluster of each eigenvalue (0-based positions).
    cluster: Vec<usize>,
}

impl DirichletData {
    /// The `count` lowest Dirichlet eigenvalues; refuses near-degenerate
    /// clusters.
    pub fn compute(p: &SLProblem, count: usize, tol: &Tolerances) -> Result<Self> {
        let spectrum = lowest_eigenvalues(p, &dirichlet(2 * p.n()), count, tol)?;
        let mut values = Vec::new();
        let mut cluster = Vec::new();
        for (c, e) in spectrum.eigenvalues.iter().enumerate() {
            if e.spread > resolution(tol, e.lambda) {
                return Err(Error::ClusterAmbiguous { gap: e.spread });
            }
            for _ in 0..e.multiplicity {
                values.push(e.lambda);
                cluster.push(c);
            }
        }
        for w in spectrum.eigenvalues.windows(2) {
            let gap = w[1].lambda - w[0].lambda;
            if gap < resolution(tol, w[1].lambda) {
                return Err(Error::ClusterAmbiguous { gap });
            }
        }
        Ok(DirichletData { values, cluster })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `lambda_i(L_D)`, 1-based.
    pub fn value(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    /// Numbers of equal eigenvalues with smaller and larger index than `i`.
    pub fn neighbours(&self, i: usize) -> Result<(usize, usize)> {
        if i == 0 || i >= self.len() {
            return Err(Error::InvalidProblem(format!(
                "Dirichlet index {i} outside the computed range"
            )));
        }
        let c = self.cluster[i - 1];
        let below = self.cluster[..i - 1].iter().filter(|&&x| x == c).count();
        let above = self.cluster[i..].iter().filter(|&&x| x == c).count();
        Ok((below, above))
    }
}
