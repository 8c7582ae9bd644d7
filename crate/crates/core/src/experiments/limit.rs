use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::lagrangian::{dirichlet, dist, intersection_dim, LagrangianFrame};
use crate::maslov::{maslov_index, LagrangianPath};
use crate::slp::{monodromy_graph, SLProblem};
use crate::Tolerances;

use super::lowest_values;

#[derive(Clone, Debug)]
pub struct LimitOptions {
    /// Most negative `lambda` of the grid.
    pub floor: f64,
    /// Ratio between consecutive grid points.
    pub ratio: f64,
    /// Largest `lambda` of the tail; defaults to
    /// `min(-sigma, lambda_1(L_D) - 1)` with `sigma` the spectral scale.
    pub tail_top: Option<f64>,
    /// Tail parameters used for the pairwise transversality checks.
    pub tail_points: usize,
}

impl LimitOptions {
    pub fn new(floor: f64) -> Self {
        LimitOptions {
            floor,
            ratio: 2.0,
            tail_top: None,
            tail_points: 6,
        }
    }
}

/// `dim(Gr(gamma_a(T)) ∩ Gr(gamma_b(T)))` for two tail parameters.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Transversality {
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LimitReport {
    /// Decreasing negative grid.
    pub grid: Vec<f64>,
    /// `dist(Gr(gamma_lambda(T)), L_D)` on the grid.
    pub dist_curve: Vec<f64>,
    /// First grid index from which the distance decreases strictly.
    pub monotone_from: usize,
    /// `s` interval of the tail, `lambda = tan(s)`; its left end is
    /// `-pi/2`, where the path is `L_D`.
    pub tail_window: (f64, f64),
    pub maslov_on_tail: i64,
    pub transversality: Vec<Transversality>,
    pub lambda1_dirichlet: f64,
    pub tolerances: Tolerances,
}

impl LimitReport {
    pub fn final_dist(&self) -> f64 {
        *self.dist_curve.last().expect("non-empty grid")
    }

    /// Tail monotone, index `2n` and all tail graphs pairwise transversal.
    pub fn consistent(&self, n: usize) -> bool {
        let top = self.tail_window.1.tan();
        let tail_start = self
            .grid
            .iter()
            .position(|&l| l <= top * (1.0 - 1e-12))
            .unwrap_or(self.grid.len() - 1);
        let monotone = self.monotone_from <= tail_start;
        monotone
            && self.maslov_on_tail == 2 * n as i64
            && self.transversality.iter().all(|t| t.dim == 0)
    }
}

/// Distance of `Gr(gamma_lambda(T))` to `L_D` on a geometric grid down to
/// `opts.floor`, the Maslov index of `s -> Gr(gamma_{tan s}(T))` on the
/// tail starting at `L_D`, and pairwise transversality on the tail.
pub fn limit_experiment(
    p: &SLProblem,
    opts: &LimitOptions,
    tol: &Tolerances,
) -> Result<LimitReport> {
    let m = 2 * p.n();
    let d = dirichlet(m);
    let lambda1 = lowest_values(p, &d, 1, tol)?[0];
    if !(opts.floor < lambda1) || !(opts.ratio > 1.0) {
        return Err(Error::InvalidProblem(
            "the floor must lie below lambda_1(L_D) and the ratio above 1".into(),
        ));
    }
    let sigma = p.spectral_scale();
    let tail_top = opts
        .tail_top
        .unwrap_or((-sigma).min(lambda1 - 1.0))
        .max(opts.floor);
    let mut grid = Vec::new();
    let mut l = -sigma.max(1.0);
    while l > opts.floor {
        grid.push(l);
        l *= opts.ratio;
    }
    grid.push(opts.floor);
    let mut frames: Vec<LagrangianFrame> = Vec::with_capacity(grid.len());
    let mut dist_curve = Vec::with_capacity(grid.len());
    for &l in &grid {
        let g = monodromy_graph(p, l, tol)?;
        dist_curve.push(dist(&g, &d)?);
        frames.push(g);
    }
    let mut monotone_from = dist_curve.len() - 1;
    while monotone_from > 0 && dist_curve[monotone_from] < dist_curve[monotone_from - 1] {
        monotone_from -= 1;
    }

    // Tail: grid points at or below tail_top, in increasing s.
    let mut tail: Vec<(f64, LagrangianFrame)> = grid
        .iter()
        .zip(&frames)
        .filter(|(&l, _)| l <= tail_top)
        .map(|(&l, f)| (l.atan(), f.clone()))
        .collect();
    tail.reverse();
    let top_s = tail_top.atan();
    if tail.last().is_none_or(|(s, _)| *s < top_s) {
        tail.push((top_s, monodromy_graph(p, tail_top, tol)?));
    }
    let tail_lambdas: Vec<f64> = tail.iter().map(|(s, _)| s.tan()).collect();
    let tail_frames: Vec<LagrangianFrame> = tail.iter().map(|(_, f)| f.clone()).collect();
    let mut samples = alloc::vec![(-FRAC_PI_2, d.clone())];
    samples.extend(tail);
    let eval = |s: f64| -> Result<LagrangianFrame> {
        if s <= -FRAC_PI_2 {
            Ok(dirichlet(m))
        } else {
            monodromy_graph(p, s.tan(), tol)
        }
    };
    let path = LagrangianPath::from_samples(samples)?.with_evaluator(eval);
    let maslov_on_tail = maslov_index(&d, &path, tol)?.index;

    let k = tail_frames.len();
    let picks: Vec<usize> = if k <= opts.tail_points {
        (0..k).collect()
    } else {
        (0..opts.tail_points)
            .map(|i| i * (k - 1) / (opts.tail_points - 1).max(1))
            .collect()
    };
    let mut transversality = Vec::new();
    for (x, &a) in picks.iter().enumerate() {
        for &b in &picks[x + 1..] {
            transversality.push(Transversality {
                lambda_a: tail_lambdas[a],
                lambda_b: tail_lambdas[b],
                dim: intersection_dim(&tail_frames[a], &tail_frames[b], tol.rank)?,
            });
        }
    }
    Ok(LimitReport {
        grid,
        dist_curve,
        monotone_from,
        tail_window: (-FRAC_PI_2, top_s),
        maslov_on_tail,
        transversality,
        lambda1_dirichlet: lambda1,
        tolerances: *tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn free_1d_limit() {
        let p = SLProblem::free(1, PI);
        let tol = Tolerances::default();
        let rep = limit_experiment(&p, &LimitOptions::new(-1e6), &tol).unwrap();
        assert_eq!(rep.monotone_from, 0);
        assert!(rep.final_dist() < 5e-3, "{}", rep.final_dist());
        assert_eq!(rep.maslov_on_tail, 2);
        assert!(rep.transversality.iter().all(|t| t.dim == 0));
        assert!(rep.consistent(1));
    }

    #[test]
    fn distance_matches_closed_form() {
        // For lambda = -mu^2 the graph is X = M Y over Y = (x(0), x(T)) with
        // M = mu / sinh(mu T) [[cosh(mu T), -1], [-1, cosh(mu T)]].
        use crate::linalg::{to_complex, RMat};
        let p = SLProblem::free(1, PI);
        let tol = Tolerances::default();
        let rep = limit_experiment(&p, &LimitOptions::new(-400.0), &tol).unwrap();
        for (&l, &dc) in rep.grid.iter().zip(&rep.dist_curve) {
            let mu = (-l).sqrt();
            let (coth, csch) = (1.0 / (mu * PI).tanh(), 1.0 / (mu * PI).sinh());
            let mut z = RMat::zeros(4, 2);
            z.view_mut((0, 0), (2, 2))
                .copy_from(&(RMat::from_row_slice(2, 2, &[coth, -csch, -csch, coth]) * mu));
            z.view_mut((2, 0), (2, 2)).fill_with_identity();
            let exact = LagrangianFrame::new_unchecked(to_complex(&z));
            let want = dist(&exact, &dirichlet(2)).unwrap();
            assert!(
                (dc - want).abs() < 1e-8 * want.max(1.0),
                "{l}: {dc} vs {want}"
            );
        }
    }

    #[test]
    fn floor_above_spectrum_is_rejected() {
        let p = SLProblem::free(1, PI);
        assert!(limit_experiment(&p, &LimitOptions::new(2.0), &Tolerances::default()).is_err());
    }
}
