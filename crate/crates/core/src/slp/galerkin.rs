//! Finite-element discretization of the index form
//! `I(xi, eta) = int <P xi', eta'> + <Q xi, eta'> + <Q^T xi', eta> + <R xi, eta>
//!               - <A (xi(0), xi(T)), (eta(0), eta(T))>`
//! on `{xi : (xi(0), xi(T)) in V(L0)}` against the mass form `<D xi, eta>`.
//!
//! Interior nodes carry piecewise-linear hats; the two end hats are tied
//! together through `(xi(0), xi(T)) = V u`, `u in C^{k0}`, which spans the
//! same space as adding the linear boundary functions to `H_0`.

use alloc::vec::Vec;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::lagrangian::{canonical_form, LagrangianFrame};
use crate::linalg::{self, CMat, RMat};
use crate::Tolerances;

use super::shooting::{Diagnostics, Eigenvalue, Method, Spectrum};
use super::SLProblem;

/// Reduced Hermitian stiffness and mass matrices on the trial space.
/// Unknowns are ordered as interior nodal values followed by `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct GalerkinSystem {
    pub stiffness: CMat,
    pub mass: CMat,
    pub mesh: usize,
    pub k0: usize,
}

impl GalerkinSystem {
    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    pub fn rayleigh(&self, x: &CMat) -> f64 {
        let num = (x.adjoint() * &self.stiffness * x)[(0, 0)].re;
        let den = (x.adjoint() * &self.mass * x)[(0, 0)].re;
        num / den
    }

    /// Assembles the system for `L0` on `mesh` uniform elements.
    pub fn assemble(
        p: &SLProblem,
        l0: &LagrangianFrame,
        mesh: usize,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = p.n();
        if l0.m() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: l0.m(),
            });
        }
        if mesh < 1 {
            return Err(Error::MeshTooCoarse {
                requested: 1,
                available: 0,
            });
        }
        let cf = canonical_form(l0, tol)?;
        let k0 = cf.k0();
        let (kf, mf) = nodal_matrices(p, mesh);
        let v = cf.v_basis();
        let e = prolongation(n, mesh, &v);
        let mut stiffness = project(&kf, &e);
        let mass = project(&mf, &e);
        let interior = (mesh - 1) * n;
        let mut bt = stiffness.view_mut((interior, interior), (k0, k0));
        bt -= &cf.a;
        stiffness = linalg::hermitize(&stiffness);
        Ok(GalerkinSystem {
            stiffness,
            mass: linalg::hermitize(&mass),
            mesh,
            k0,
        })
    }

    /// All eigenvalues (ascending) and `M`-orthonormal eigenvectors.
    pub fn solve(&self) -> Result<(Vec<f64>, CMat)> {
        let chol = self.mass.clone().cholesky().ok_or(Error::MassNotPositive)?;
        let l = chol.l();
        let x = l
            .solve_lower_triangular(&self.stiffness)
            .ok_or(Error::MassNotPositive)?;
        let c = l
            .solve_lower_triangular(&x.adjoint())
            .ok_or(Error::MassNotPositive)?;
        let eig = SymmetricEigen::new(linalg::hermitize(&c));
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut y = CMat::zeros(self.dim(), self.dim());
        for (k, &i) in order.iter().enumerate() {
            y.set_column(k, &eig.eigenvectors.column(i));
        }
        let vectors = l
            .adjoint()
            .solve_upper_triangular(&y)
            .ok_or(Error::MassNotPositive)?;
        Ok((values, vectors))
    }
}

const GAUSS: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Nodal stiffness and mass matrices over all `mesh + 1` nodes.
fn nodal_matrices(p: &SLProblem, mesh: usize) -> (RMat, RMat) {
    let n = p.n();
    let dim = (mesh + 1) * n;
    let h = p.t_end() / mesh as f64;
    let mut k = RMat::zeros(dim, dim);
    let mut m = RMat::zeros(dim, dim);
    for e in 0..mesh {
        let t0 = e as f64 * h;
        for &(s, w) in &GAUSS {
            let t = t0 + s * h;
            let (pm, q, r, d) = (p.p.eval(t), p.q.eval(t), p.r.eval(t), p.d.eval(t));
            let phi = [1.0 - s, s];
            let dphi = [-1.0 / h, 1.0 / h];
            for a in 0..2 {
                for b in 0..2 {
                    let blk = &pm * (dphi[b] * dphi[a])
                        + &q * (phi[b] * dphi[a])
                        + q.transpose() * (dphi[b] * phi[a])
                        + &r * (phi[b] * phi[a]);
                    let (ra, cb) = ((e + a) * n, (e + b) * n);
                    let mut kv = k.view_mut((ra, cb), (n, n));
                    kv += blk * (w * h);
                    let mut mv = m.view_mut((ra, cb), (n, n));
                    mv += &d * (phi[b] * phi[a] * w * h);
                }
            }
        }
    }
    (k, m)
}

/// Maps reduced unknowns to nodal values: interior nodes are copied and
/// the end nodes are `V u`.
fn prolongation(n: usize, mesh: usize, v: &CMat) -> CMat {
    let k0 = v.ncols();
    let interior = (mesh - 1) * n;
    let mut e = CMat::zeros((mesh + 1) * n, interior + k0);
    e.view_mut((n, 0), (interior, interior))
        .fill_with_identity();
    e.view_mut((0, interior), (n, k0)).copy_from(&v.rows(0, n));
    e.view_mut((mesh * n, interior), (n, k0))
        .copy_from(&v.rows(n, n));
    e
}

/// `E* A E`.
fn project(a: &RMat, e: &CMat) -> CMat {
    e.adjoint() * linalg::to_complex(a) * e
}

fn check_count(sys: &GalerkinSystem, k: usize) -> Result<()> {
    if k >= sys.dim() {
        return Err(Error::MeshTooCoarse {
            requested: k,
            available: sys.dim(),
        });
    }
    Ok(())
}

/// Lowest `k` eigenvalues (with `M`-orthonormal eigenvectors as columns)
/// together with the assembled system.
pub fn galerkin_spectrum_with_vectors(
    p: &SLProblem,
    l0: &LagrangianFrame,
    mesh: usize,
    k: usize,
    tol: &Tolerances,
) -> Result<(GalerkinSystem, Vec<f64>, CMat)> {
    let sys = GalerkinSystem::assemble(p, l0, mesh, tol)?;
    check_count(&sys, k)?;
    let (values, vectors) = sys.solve()?;
    let vecs = vectors.columns(0, k).into_owned();
    Ok((sys, values[..k].to_vec(), vecs))
}

/// Relative distance below which discrete eigenvalues form one cluster.
const CLUSTER_TOL: f64 = 1e-8;

/// Lowest `k` discrete eigenvalues of the index form, grouped into
/// clusters.
pub fn galerkin_spectrum(
    p: &SLProblem,
    l0: &LagrangianFrame,
    mesh: usize,
    k: usize,
    tol: &Tolerances,
) -> Result<Spectrum> {
    let (sys, values, vectors) = galerkin_spectrum_with_vectors(p, l0, mesh, k, tol)?;
    let mut eigenvalues: Vec<Eigenvalue> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let x = vectors.columns(i, 1).into_owned();
        let residual = (sys.rayleigh(&x) - v).abs();
        match eigenvalues.last_mut() {
            Some(last) if v - last.lambda <= CLUSTER_TOL * v.abs().max(1.0) => {
                last.multiplicity += 1;
                last.residual = last.residual.max(residual);
                last.spread = v - last.lambda;
            }
            _ => eigenvalues.push(Eigenvalue {
                lambda: v,
                multiplicity: 1,
                residual,
                spread: 0.0,
            }),
        }
    }
    let window = (
        values.first().copied().unwrap_or(0.0),
        values.last().copied().unwrap_or(0.0),
    );
    let diagnostics = Diagnostics {
        evaluations: sys.dim(),
        mesh: Some(mesh),
        ..Diagnostics::default()
    };
    Ok(Spectrum {
        eigenvalues,
        method: Method::Galerkin,
        window,
        diagnostics,
    })
}
