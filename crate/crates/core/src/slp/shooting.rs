//! Eigenvalues as crossings of the relative eigenangles of
//! `U(L0)^{-1} U(Gr(gamma_lambda(T)))` through multiples of `2 pi`.
//!
//! `lambda -> Gr(gamma_lambda(T))` is a positive path, so every branch
//! turns counterclockwise and each crossing is one eigenvalue. As
//! `lambda -> -inf` the graph tends to the Dirichlet subspace and the
//! relative angles tend to those of `U(L0)^{-1}`; [`lower_spectral_bound`]
//! certifies a `lambda` below which no branch can reach `0 mod 2 pi`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, TAU};
#[allow(unused_imports)]
use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::lagrangian::{unitary_of, LagrangianFrame};
use crate::linalg::{self, cidentity, CMat};
use crate::maslov::{
    e_ceil, maslov_index, match_angles, snap, track_angles, window_angles, LagrangianPath,
    TrackOptions,
};
use crate::Tolerances;

use super::monodromy::monodromy_graph;
use super::SLProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    Shooting,
    Galerkin,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Eigenvalue {
    pub lambda: f64,
    pub multiplicity: usize,
    /// `multiplicity`-th smallest singular value of `U(Gr) - U(L0)` for
    /// shooting; Rayleigh-quotient defect for Galerkin.
    pub residual: f64,
    /// Distance between the extreme members of the cluster.
    pub spread: f64,
}

/// Shooting disagreement between the number of branch crossings and the
/// intersection dimension at a cluster.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MultiplicityMismatch {
    pub lambda: f64,
    pub crossings: usize,
    pub intersection: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Diagnostics {
    /// Monodromy evaluations (shooting) or trial-space dimension (Galerkin).
    pub evaluations: usize,
    pub lambda_far: Option<f64>,
    /// Eigenvalues strictly below the window, counted with multiplicity.
    pub below_window: usize,
    pub refinement_depth: usize,
    pub mismatches: Vec<MultiplicityMismatch>,
    /// Smallest relative gap between neighbouring reported eigenvalues.
    pub min_gap: Option<f64>,
    pub mesh: Option<usize>,
    pub notes: Vec<String>,
}

/// Sorted eigenvalues with multiplicities found in `window`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigenvalue>,
    pub method: Method,
    pub window: (f64, f64),
    pub diagnostics: Diagnostics,
}

impl Spectrum {
    /// Eigenvalues repeated according to multiplicity.
    pub fn values(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| core::iter::repeat_n(e.lambda, e.multiplicity))
            .collect()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }

    /// `j`-th eigenvalue (from 1) counted with multiplicity, relative to
    /// the eigenvalues below the window.
    pub fn lambda_j(&self, j: usize) -> Option<f64> {
        let k = j.checked_sub(1 + self.diagnostics.below_window)?;
        self.values().get(k).copied()
    }
}

/// A spectral parameter below the whole spectrum, with the lifted
/// relative angles there (all in `(0, 2 pi)`).
#[derive(Clone, Debug, PartialEq)]
pub struct LowerBound {
    pub lambda: f64,
    /// `dist(Gr(gamma_lambda(T)), L_D)`.
    pub dist: f64,
    pub angles: Vec<f64>,
}

const MAX_MARCH: usize = 40;
/// Minimum gap, in units of `tol.eig`, between the lifted angles at the
/// lower bound and `2 pi`.
const BOUND_CLEARANCE: f64 = 100.0;
const MAX_ROOT_ITERATIONS: usize = 100;
/// Relative distance below which crossings are merged into one eigenvalue.
const CLUSTER_TOL: f64 = 1e-7;

struct Evaluator<'a> {
    p: &'a SLProblem,
    u0_adj: CMat,
    tol: &'a Tolerances,
    count: usize,
}

impl<'a> Evaluator<'a> {
    fn new(p: &'a SLProblem, l0: &LagrangianFrame, tol: &'a Tolerances) -> Result<Self> {
        if l0.m() != 2 * p.n() {
            return Err(Error::DimensionMismatch {
                expected: 2 * p.n(),
                found: l0.m(),
            });
        }
        Ok(Evaluator {
            p,
            u0_adj: unitary_of(l0).matrix().adjoint(),
            tol,
            count: 0,
        })
    }

    fn graph_unitary(&mut self, lambda: f64) -> Result<CMat> {
        self.count += 1;
        Ok(unitary_of(&monodromy_graph(self.p, lambda, self.tol)?).into_matrix())
    }

    fn angles(&mut self, lambda: f64) -> Result<Vec<f64>> {
        let u = self.graph_unitary(lambda)?;
        Ok(linalg::eigenangles(&(&self.u0_adj * u)))
    }
}

/// Whether arcs of half-width `w` around the angles `psi` (in `[0, 2pi)`,
/// exactly zero for directions of `L0 ∩ L_D`) keep every nonzero angle
/// out of the connected arc component containing `0`.
fn arcs_separate(psi: &[f64], w: f64) -> bool {
    let has_zero = psi.contains(&0.0);
    psi.iter().filter(|&&a| a != 0.0).all(|&a| {
        let reach = if has_zero { 2.0 * w } else { w };
        a > reach && a < TAU - reach
    })
}

/// Marches `lambda = -sigma 4^k` until the Dirichlet distance certifies
/// that no relative angle can reach `0 mod 2 pi` further left.
pub fn lower_spectral_bound(
    p: &SLProblem,
    l0: &LagrangianFrame,
    tol: &Tolerances,
) -> Result<LowerBound> {
    let mut ev = Evaluator::new(p, l0, tol)?;
    lower_bound_with(&mut ev, tol)
}

fn lower_bound_with(ev: &mut Evaluator<'_>, tol: &Tolerances) -> Result<LowerBound> {
    let m = ev.u0_adj.nrows();
    let psi = window_angles(linalg::eigenangles(&ev.u0_adj), tol.eig);
    let sigma = ev.p.spectral_scale();
    let mut prev = f64::INFINITY;
    let mut lambda = -sigma;
    for _ in 0..MAX_MARCH {
        let u = ev.graph_unitary(lambda)?;
        let d = linalg::spectral_norm(&(&u - cidentity(m)));
        let w = 2.0 * (0.5 * d).min(1.0).asin();
        if d <= prev && w < FRAC_PI_4 && arcs_separate(&psi, w) {
            let wrapped = linalg::eigenangles(&(&ev.u0_adj * &u));
            let (lifted, _) = match_angles(&psi, &wrapped);
            // Branches starting on the cycle must have left it forward.
            let zero_forward = lifted
                .iter()
                .zip(&psi)
                .all(|(&a, &b)| b != 0.0 || (a > tol.eig && a <= w + 1e-9));
            // An angle within snapping distance of 2 pi would hide the
            // crossing just above `lambda`.
            let clear = lifted.iter().all(|&a| a < TAU - BOUND_CLEARANCE * tol.eig);
            if zero_forward && clear {
                return Ok(LowerBound {
                    lambda,
                    dist: d,
                    angles: lifted,
                });
            }
        }
        prev = d;
        lambda *= 4.0;
    }
    Err(Error::LowerBoundNotFound { lambda })
}

/// Initial scan points on `[lambda_far, hi]`: geometric below `-sigma`, then
/// uniform in `s = sign(lambda) sqrt|lambda|`.
fn scan_grid(p: &SLProblem, lambda_far: f64, lo: f64, hi: f64) -> Vec<f64> {
    let sigma = p.spectral_scale();
    let mut pts = alloc::vec![lambda_far];
    let mut l = lambda_far / 4.0;
    while l < -sigma {
        pts.push(l);
        l /= 4.0;
    }
    let step = p.sqrt_spacing() / 4.0;
    let to_s = |l: f64| l.signum() * l.abs().sqrt();
    let s1 = to_s(hi);
    let s_start = to_s(lambda_far.max(-sigma));
    let count = ((s1 - s_start) / step).ceil().max(1.0) as usize;
    for k in 0..=count {
        let s = s_start + (s1 - s_start) * k as f64 / count as f64;
        pts.push(s * s.abs());
    }
    pts.push(lo);
    pts.push(hi);
    pts.retain(|&x| x >= lambda_far && x <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
    pts
}

/// Number of eigenvalues strictly below the parameter at which the lifted
/// angles were taken.
fn count_below(lifted: &[f64], tol: f64) -> usize {
    lifted
        .iter()
        .map(|&a| (e_ceil(snap(a, tol) / TAU) - 1).max(0) as usize)
        .sum()
}

struct Root {
    lambda: f64,
}

/// Finds `lambda` in `(a, b]` where the branch `j` (lifted values `ta` at
/// `a`) crosses `target`, by the Illinois method.
fn find_crossing(
    ev: &mut Evaluator<'_>,
    a: f64,
    b: f64,
    ta: &[f64],
    fa0: f64,
    fb0: f64,
    j: usize,
    target: f64,
    tol: &Tolerances,
) -> Result<Root> {
    let branch = |ev: &mut Evaluator<'_>, l: f64| -> Result<f64> {
        let w = ev.angles(l)?;
        let (lifted, _) = match_angles(ta, &w);
        Ok(lifted[j] - target)
    };
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (fa0, fb0);
    // The crossing was counted with snapped angles; the raw values can sit
    // on the wrong side by less than the snapping radius.
    if fb <= 0.0 {
        return Ok(Root { lambda: b });
    }
    if fa >= 0.0 {
        return Ok(Root { lambda: a });
    }
    let mut side = 0i8;
    for _ in 0..MAX_ROOT_ITERATIONS {
        if b - a <= tol.lambda * b.abs().max(1.0) {
            let lambda = if fb.abs() < fa.abs() { b } else { a };
            return Ok(Root { lambda });
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = branch(ev, c)?;
        if fc == 0.0 {
            return Ok(Root { lambda: c });
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::CrossingUnresolved {
        lambda: 0.5 * (a + b),
    })
}

struct Scan {
    lambda_far: f64,
    roots: Vec<f64>,
    below: usize,
    depth: usize,
}

fn scan(
    ev: &mut Evaluator<'_>,
    lb: &LowerBound,
    lo: f64,
    hi: f64,
    tol: &Tolerances,
) -> Result<Scan> {
    let grid = scan_grid(ev.p, lb.lambda, lo, hi);
    let mut initial = Vec::with_capacity(grid.len());
    initial.push((lb.lambda, lb.angles.clone()));
    for &l in &grid[1..] {
        initial.push((l, ev.angles(l)?));
    }
    let tracked = {
        let mut cb = |l: f64| ev.angles(l);
        track_angles(initial, Some(&mut cb), tol, TrackOptions::default())?
    };
    let br = tracked.branches;
    let lo_idx = br
        .ts
        .iter()
        .position(|&t| t >= lo)
        .unwrap_or(br.ts.len() - 1);
    let below = count_below(&br.thetas[lo_idx], tol.eig);

    let mut roots = Vec::new();
    for i in lo_idx.max(1)..br.ts.len() {
        let (ta, tb) = (br.ts[i - 1], br.ts[i]);
        let (ya, yb) = (&br.thetas[i - 1], &br.thetas[i]);
        for j in 0..ya.len() {
            let (sa, sb) = (snap(ya[j], tol.eig), snap(yb[j], tol.eig));
            let mut k = (sa / TAU).floor() + 1.0;
            while k * TAU <= sb {
                let target = k * TAU;
                // Snapping can count a crossing at `tb` that the raw branch
                // only reaches in the next interval.
                let root = if yb[j] < target && i + 1 < br.ts.len() {
                    let yc = &br.thetas[i + 1];
                    find_crossing(
                        ev,
                        tb,
                        br.ts[i + 1],
                        yb,
                        yb[j] - target,
                        yc[j] - target,
                        j,
                        target,
                        tol,
                    )?
                } else {
                    find_crossing(
                        ev,
                        ta,
                        tb,
                        ya,
                        ya[j] - target,
                        yb[j] - target,
                        j,
                        target,
                        tol,
                    )?
                };
                if root.lambda >= lo - tol.lambda * lo.abs().max(1.0) {
                    roots.push(root.lambda);
                }
                k += 1.0;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(Scan {
        lambda_far: lb.lambda,
        roots,
        below,
        depth: tracked.depth,
    })
}

/// Groups roots into eigenvalues and checks each against the
/// intersection dimension.
fn assemble(
    ev: &mut Evaluator<'_>,
    roots: &[f64],
    diag: &mut Diagnostics,
    tol: &Tolerances,
) -> Result<Vec<Eigenvalue>> {
    let mut out: Vec<Eigenvalue> = Vec::new();
    let mut i = 0;
    while i < roots.len() {
        let mut k = i + 1;
        while k < roots.len() && roots[k] - roots[k - 1] <= CLUSTER_TOL * roots[k].abs().max(1.0) {
            k += 1;
        }
        let cluster = &roots[i..k];
        let lambda = cluster.iter().sum::<f64>() / cluster.len() as f64;
        let mult = cluster.len();
        let u = ev.graph_unitary(lambda)?;
        let u0 = ev.u0_adj.adjoint();
        let s = linalg::singular_values(&(u - u0));
        let dim = s.iter().filter(|&&x| x < tol.rank).count();
        if dim != mult {
            diag.mismatches.push(MultiplicityMismatch {
                lambda,
                crossings: mult,
                intersection: dim,
            });
        }
        out.push(Eigenvalue {
            lambda,
            multiplicity: mult,
            residual: s[mult.min(s.len()) - 1],
            spread: cluster[mult - 1] - cluster[0],
        });
        i = k;
    }
    diag.min_gap = out
        .windows(2)
        .map(|w| (w[1].lambda - w[0].lambda) / w[1].lambda.abs().max(1.0))
        .min_by(f64::total_cmp);
    Ok(out)
}

/// Eigenvalues in `[lo, hi]` for the boundary condition `L0`, with
/// multiplicities.
pub fn eigenvalues_shooting(
    p: &SLProblem,
    l0: &LagrangianFrame,
    window: (f64, f64),
    tol: &Tolerances,
) -> Result<Spectrum> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidProblem(
            "window must be finite with lo <= hi".into(),
        ));
    }
    let mut ev = Evaluator::new(p, l0, tol)?;
    let lb = lower_bound_with(&mut ev, tol)?;
    shoot(&mut ev, &lb, lo.max(lb.lambda), hi, window, tol)
}

fn shoot(
    ev: &mut Evaluator<'_>,
    lb: &LowerBound,
    lo: f64,
    hi: f64,
    window: (f64, f64),
    tol: &Tolerances,
) -> Result<Spectrum> {
    let sc = scan(ev, lb, lo, hi.max(lo), tol)?;
    let mut diag = Diagnostics {
        lambda_far: Some(sc.lambda_far),
        below_window: sc.below,
        refinement_depth: sc.depth,
        ..Diagnostics::default()
    };
    let eigenvalues = assemble(ev, &sc.roots, &mut diag, tol)?;
    diag.evaluations = ev.count;
    Ok(Spectrum {
        eigenvalues,
        method: Method::Shooting,
        window,
        diagnostics: diag,
    })
}

/// The `k` lowest eigenvalues counted with multiplicity (a cluster that
/// straddles `k` is kept whole).
pub fn lowest_eigenvalues(
    p: &SLProblem,
    l0: &LagrangianFrame,
    k: usize,
    tol: &Tolerances,
) -> Result<Spectrum> {
    let mut ev = Evaluator::new(p, l0, tol)?;
    let lb = lower_bound_with(&mut ev, tol)?;
    let mut hi = p.spectral_scale() * (k as f64).powi(2).max(1.0) / p.n() as f64;
    for _ in 0..MAX_MARCH {
        let mut sp = shoot(&mut ev, &lb, lb.lambda, hi, (lb.lambda, hi), tol)?;
        if sp.total_multiplicity() >= k {
            let mut acc = 0;
            sp.eigenvalues.retain(|e| {
                let keep = acc < k;
                acc += e.multiplicity;
                keep
            });
            let top = sp.eigenvalues.last().map_or(hi, |e| e.lambda);
            sp.window = (lb.lambda, top);
            return Ok(sp);
        }
        hi = if hi > 0.0 { 4.0 * hi } else { 1.0 };
    }
    Err(Error::InvalidProblem(
        "spectrum search did not reach the requested count".into(),
    ))
}

/// Total multiplicity of the spectrum in `(a, b)` as the Maslov index of
/// `lambda -> Gr(gamma_lambda(T))` on `[a, b]` relative to `L0`.
pub fn count_eigenvalues(
    p: &SLProblem,
    l0: &LagrangianFrame,
    a: f64,
    b: f64,
    tol: &Tolerances,
) -> Result<usize> {
    if !(a < b) {
        return Ok(0);
    }
    let mut ev = Evaluator::new(p, l0, tol)?;
    let u0 = ev.u0_adj.adjoint();
    for lambda in [a, b] {
        let s = linalg::singular_values(&(ev.graph_unitary(lambda)? - &u0));
        if s[0] < tol.eig {
            return Err(Error::EndpointOnSpectrum { lambda });
        }
    }
    let grid = scan_grid(p, a, a, b);
    let pieces = grid.len().max(2) - 1;
    let path = LagrangianPath::from_fn(a, b, pieces, |l| monodromy_graph(p, l, tol))?;
    let idx = maslov_index(l0, &path, tol)?.index;
    if idx < 0 {
        return Err(Error::InvalidProblem(
            "negative spectral flow along a positive path".into(),
        ));
    }
    Ok(idx as usize)
}
