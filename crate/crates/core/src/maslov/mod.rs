//! Maslov index of a Lagrangian path relative to a fixed Lagrangian `L0`.
//!
//! The eigenangles of `U(L0)^{-1} U(L(t))` are lifted to continuous branches
//! `theta_j(t)`; the index is `sum_j E(theta_j(b) / 2pi) - E(theta_j(a) / 2pi)`
//! with `E` the ceiling function.

mod axioms;

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, TAU};
#[allow(unused_imports)]
use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::lagrangian::{intersection_dim, unitary_of, LagrangianFrame};
use crate::linalg::{self, CMat};
use crate::Tolerances;

pub use axioms::{verify_index_axioms, AxiomFailure, AxiomOutcome, AxiomReport};

/// Ceiling, `E(a) = -floor(-a)`.
pub fn e_ceil(a: f64) -> i64 {
    -((-a).floor() as i64)
}

/// Rounds angles within `tol` of a multiple of `2 pi` onto it.
pub fn snap(theta: f64, tol: f64) -> f64 {
    let k = (theta / TAU).round();
    if (theta - k * TAU).abs() < tol {
        k * TAU
    } else {
        theta
    }
}

/// Angles in `[0, 2 pi)` with values within `tol` of `0` or `2 pi` set to `0`.
pub fn window_angles(mut angles: Vec<f64>, tol: f64) -> Vec<f64> {
    for a in angles.iter_mut() {
        let s = snap(*a, tol);
        *a = if s == 0.0 || s == TAU { 0.0 } else { *a };
    }
    angles.sort_by(f64::total_cmp);
    angles
}

/// `U(L0)^{-1} U(L)`.
pub fn relative_unitary(l0: &LagrangianFrame, l: &LagrangianFrame) -> Result<CMat> {
    if l0.m() != l.m() {
        return Err(Error::DimensionMismatch {
            expected: l0.m(),
            found: l.m(),
        });
    }
    Ok(unitary_of(l0).matrix().adjoint() * unitary_of(l).matrix())
}

/// Sorted eigenangles in `[0, 2 pi)` of `U(L0)^{-1} U(L)`.
pub fn relative_angles(l0: &LagrangianFrame, l: &LagrangianFrame) -> Result<Vec<f64>> {
    Ok(linalg::eigenangles(&relative_unitary(l0, l)?))
}

type Evaluator<'a> = Box<dyn Fn(f64) -> Result<LagrangianFrame> + 'a>;

/// A continuous path of Lagrangian subspaces on `[a, b]`, given by samples
/// and optionally by a callback used for adaptive refinement.
pub struct LagrangianPath<'a> {
    a: f64,
    b: f64,
    samples: Vec<(f64, LagrangianFrame)>,
    evaluator: Option<Evaluator<'a>>,
}

impl<'a> LagrangianPath<'a> {
    /// Path known only through samples, which must be strictly increasing
    /// in `t` and share the half-dimension.
    pub fn from_samples(samples: Vec<(f64, LagrangianFrame)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidProblem(
                "a path needs at least two samples".into(),
            ));
        }
        let m = samples[0].1.m();
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidProblem(
                    "path samples must be strictly increasing".into(),
                ));
            }
        }
        if let Some(bad) = samples.iter().find(|s| s.1.m() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: bad.1.m(),
            });
        }
        let a = samples[0].0;
        let b = samples[samples.len() - 1].0;
        Ok(LagrangianPath {
            a,
            b,
            samples,
            evaluator: None,
        })
    }

    /// Path given by a callback, initially sampled at `pieces + 1` equally
    /// spaced points.
    pub fn from_fn<F>(a: f64, b: f64, pieces: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<LagrangianFrame> + 'a,
    {
        let pieces = pieces.max(1);
        let mut samples = Vec::with_capacity(pieces + 1);
        for k in 0..=pieces {
            let t = if k == pieces {
                b
            } else {
                a + (b - a) * k as f64 / pieces as f64
            };
            samples.push((t, f(t)?));
        }
        let mut p = Self::from_samples(samples)?;
        p.evaluator = Some(Box::new(f));
        Ok(p)
    }

    pub fn with_evaluator<F>(mut self, f: F) -> Self
    where
        F: Fn(f64) -> Result<LagrangianFrame> + 'a,
    {
        self.evaluator = Some(Box::new(f));
        self
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn m(&self) -> usize {
        self.samples[0].1.m()
    }

    pub fn samples(&self) -> &[(f64, LagrangianFrame)] {
        &self.samples
    }

    pub fn eval(&self, t: f64) -> Option<Result<LagrangianFrame>> {
        self.evaluator.as_ref().map(|f| f(t))
    }
}

/// Lifted eigenangle branches: `thetas[k][j]` is branch `j` at `ts[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleBranches {
    pub ts: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
}

impl AngleBranches {
    pub fn branch_count(&self) -> usize {
        self.thetas.first().map_or(0, Vec::len)
    }

    pub fn first(&self) -> &[f64] {
        &self.thetas[0]
    }

    pub fn last(&self) -> &[f64] {
        &self.thetas[self.thetas.len() - 1]
    }

    /// `sum_j E(theta_j(end) / 2pi) - E(theta_j(start) / 2pi)` with endpoint
    /// angles snapped to multiples of `2 pi` within `tol`.
    pub fn e_sum(&self, tol: f64) -> i64 {
        e_sum(self.first(), self.last(), tol)
    }
}

pub fn e_sum(start: &[f64], end: &[f64], tol: f64) -> i64 {
    start
        .iter()
        .zip(end)
        .map(|(&a, &b)| e_ceil(snap(b, tol) / TAU) - e_ceil(snap(a, tol) / TAU))
        .sum()
}

/// Matches wrapped angles to lifted branches by minimal total angular
/// displacement. Returns the new lifted angles and the largest displacement.
pub fn match_angles(lifted: &[f64], wrapped: &[f64]) -> (Vec<f64>, f64) {
    let m = lifted.len();
    let mut cost = Vec::with_capacity(m * m);
    for &th in lifted {
        for &ph in wrapped {
            cost.push(linalg::wrap_pi(ph - th).abs());
        }
    }
    let assign = linalg::hungarian(&cost, m);
    let mut out = Vec::with_capacity(m);
    let mut worst = 0.0f64;
    for (i, &th) in lifted.iter().enumerate() {
        let d = linalg::wrap_pi(wrapped[assign[i]] - th);
        worst = worst.max(d.abs());
        out.push(th + d);
    }
    (out, worst)
}

/// Controls adaptive refinement while tracking branches.
#[derive(Clone, Copy, Debug)]
pub struct TrackOptions {
    /// Maximal number of bisections of an initial sample interval.
    pub max_depth: usize,
    /// Accept a step only after the midpoint confirms the matching.
    pub verify_midpoints: bool,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            max_depth: 40,
            verify_midpoints: true,
        }
    }
}

/// Outcome of [`track_angles`].
#[derive(Clone, Debug, PartialEq)]
pub struct Tracked {
    pub branches: AngleBranches,
    pub depth: usize,
}

/// Lifts eigenangle samples to continuous branches.
///
/// `initial` holds `(t, angles in [0, 2pi))` at strictly increasing `t`.
/// When consecutive samples are too far apart, `eval` is called at
/// midpoints; without it the step fails with [`Error::NoEvaluator`].
pub fn track_angles(
    initial: Vec<(f64, Vec<f64>)>,
    mut eval: Option<&mut dyn FnMut(f64) -> Result<Vec<f64>>>,
    tol: &Tolerances,
    opts: TrackOptions,
) -> Result<Tracked> {
    let mut iter = initial.into_iter();
    let (t0, a0) = iter.next().expect("at least one sample");
    let start = window_angles(a0, tol.eig);
    let mut pending: Vec<(f64, Vec<f64>, usize)> = iter.rev().map(|(t, a)| (t, a, 0)).collect();
    let mut ts = alloc::vec![t0];
    let mut thetas = alloc::vec![start];
    let mut depth = 0usize;
    // Each pending entry carries the bisection depth of the interval that
    // ends at it.
    while let Some((t1, a1, level)) = pending.pop() {
        let t = *ts.last().unwrap();
        let cur = thetas.last().unwrap().clone();
        let (direct, worst) = match_angles(&cur, &a1);
        let refine = worst >= FRAC_PI_4;
        if !refine && opts.verify_midpoints && level < opts.max_depth {
            if let Some(f) = eval.as_deref_mut() {
                let tm = 0.5 * (t + t1);
                let am = f(tm)?;
                let (mid, w1) = match_angles(&cur, &am);
                let (end, w2) = match_angles(&mid, &a1);
                let agree = sorted_close(&end, &direct, 1e-6);
                if w1 < FRAC_PI_4 && w2 < FRAC_PI_4 && agree {
                    ts.push(tm);
                    thetas.push(mid);
                    ts.push(t1);
                    thetas.push(end);
                    depth = depth.max(level);
                    continue;
                }
                pending.push((t1, a1, level + 1));
                pending.push((tm, am, level + 1));
                depth = depth.max(level + 1);
                continue;
            }
        }
        if !refine {
            ts.push(t1);
            thetas.push(direct);
            depth = depth.max(level);
            continue;
        }
        let Some(f) = eval.as_deref_mut() else {
            return Err(Error::NoEvaluator { t });
        };
        if level >= opts.max_depth {
            return Err(Error::RefinementLimit { t });
        }
        let tm = 0.5 * (t + t1);
        let am = f(tm)?;
        pending.push((t1, a1, level + 1));
        pending.push((tm, am, level + 1));
        depth = depth.max(level + 1);
    }
    Ok(Tracked {
        branches: AngleBranches { ts, thetas },
        depth,
    })
}

fn sorted_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).all(|(x, y)| (x - y).abs() < tol)
}

/// Maslov index together with the tracked branches.
#[derive(Clone, Debug, PartialEq)]
pub struct MaslovResult {
    pub index: i64,
    pub branches: AngleBranches,
    /// `dim(L0 ∩ L(a))` and `dim(L0 ∩ L(b))`.
    pub endpoint_dims: (usize, usize),
    pub refinement_depth: usize,
}

pub fn track_branches(
    l0: &LagrangianFrame,
    path: &LagrangianPath<'_>,
    tol: &Tolerances,
) -> Result<Tracked> {
    track_branches_with(l0, path, tol, TrackOptions::default())
}

pub fn track_branches_with(
    l0: &LagrangianFrame,
    path: &LagrangianPath<'_>,
    tol: &Tolerances,
    opts: TrackOptions,
) -> Result<Tracked> {
    let u0_adj = unitary_of(l0).matrix().adjoint();
    let angles_of = |f: &LagrangianFrame| -> Result<Vec<f64>> {
        if f.m() != l0.m() {
            return Err(Error::DimensionMismatch {
                expected: l0.m(),
                found: f.m(),
            });
        }
        Ok(linalg::eigenangles(&(&u0_adj * unitary_of(f).matrix())))
    };
    let mut initial = Vec::with_capacity(path.samples.len());
    for (t, f) in &path.samples {
        initial.push((*t, angles_of(f)?));
    }
    match &path.evaluator {
        Some(ev) => {
            let mut cb = |t: f64| -> Result<Vec<f64>> { angles_of(&ev(t)?) };
            track_angles(initial, Some(&mut cb), tol, opts)
        }
        None => track_angles(initial, None, tol, opts),
    }
}

pub fn maslov_index(
    l0: &LagrangianFrame,
    path: &LagrangianPath<'_>,
    tol: &Tolerances,
) -> Result<MaslovResult> {
    maslov_index_with(l0, path, tol, TrackOptions::default())
}

pub fn maslov_index_with(
    l0: &LagrangianFrame,
    path: &LagrangianPath<'_>,
    tol: &Tolerances,
    opts: TrackOptions,
) -> Result<MaslovResult> {
    let tracked = track_branches_with(l0, path, tol, opts)?;
    let first = &path.samples[0].1;
    let last = &path.samples[path.samples.len() - 1].1;
    Ok(MaslovResult {
        index: tracked.branches.e_sum(tol.eig),
        endpoint_dims: (
            intersection_dim(l0, first, tol.rank)?,
            intersection_dim(l0, last, tol.rank)?,
        ),
        branches: tracked.branches,
        refinement_depth: tracked.depth,
    })
}

/// Number of eigenangles of `U(L)` in `(0, theta0)`.
pub fn nu_plus(l: &LagrangianFrame, theta0: f64, tol: &Tolerances) -> Result<usize> {
    let angles = window_angles(unitary_of(l).angles(), tol.eig);
    if angles
        .iter()
        .any(|&a| linalg::wrap_pi(a - theta0).abs() < tol.eig)
    {
        return Err(Error::ThetaOnSpectrum { theta: theta0 });
    }
    Ok(angles.iter().filter(|&&a| a > 0.0 && a < theta0).count())
}
