use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use nalgebra::ComplexField;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lagrangian::{
    dirichlet, lagrangian_from_unitary, CanonicalForm, LagrangianFrame, UnitaryRep,
};
use crate::linalg::{self, cidentity, CMat, C64, I};
use crate::maslov::{maslov_index, LagrangianPath};
use crate::sampling;
use crate::slp::SLProblem;
use crate::Tolerances;

use super::{layer_of, lowest_values};

/// `s -> B diag(I_r, C(A1 + cot(s) I_q), C(A2)) B*` with the Cayley map
/// `C(A) = (A + i)(A - i)^{-1}`, continued by `I_q` at `s = 0`.
///
/// Away from `0` the layer is `r`; at `0` it is `r + q`. As `s -> 0+` the
/// `q` directions are pushed to `+inf`, as `s -> 0-` to `-inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularPath {
    pub basis: CMat,
    pub r: usize,
    pub a1: CMat,
    pub a2: CMat,
}

fn cayley(a: &CMat) -> CMat {
    let k = a.nrows();
    let id = cidentity(k);
    let num = a + &id * I;
    let den = a - &id * I;
    linalg::solve(&den.transpose(), &num.transpose())
        .expect("A - iI is invertible for Hermitian A")
        .transpose()
}

impl SingularPath {
    /// Random basis and blocks with `q` jumping directions.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize, r: usize, q: usize) -> Self {
        assert!(r + q <= m && q >= 1, "need 1 <= q <= m - r");
        SingularPath {
            basis: sampling::unitary(rng, m),
            r,
            a1: sampling::hermitian(rng, q),
            a2: sampling::hermitian(rng, m - r - q),
        }
    }

    /// The loop through `L_D` obtained from the tan-path of `cf` by
    /// `s -> pi/2 - s`: `A = A0 + cot(s) I`.
    pub fn dirichlet_loop(cf: &CanonicalForm) -> Self {
        SingularPath {
            basis: cf.basis.clone(),
            r: cf.r,
            a1: cf.a.clone(),
            a2: CMat::zeros(0, 0),
        }
    }

    pub fn m(&self) -> usize {
        self.basis.nrows()
    }

    pub fn q(&self) -> usize {
        self.a1.nrows()
    }

    pub fn eval(&self, s: f64) -> LagrangianFrame {
        let (m, r, q) = (self.m(), self.r, self.q());
        let mut d = cidentity(m);
        if s != 0.0 {
            let a = &self.a1 + cidentity(q) * C64::new(1.0 / s.tan(), 0.0);
            d.view_mut((r, r), (q, q)).copy_from(&cayley(&a));
        }
        let k2 = self.a2.nrows();
        if k2 > 0 {
            d.view_mut((r + q, r + q), (k2, k2))
                .copy_from(&cayley(&self.a2));
        }
        let u = &self.basis * d * self.basis.adjoint();
        lagrangian_from_unitary(&UnitaryRep::new_unchecked(u))
    }
}

#[derive(Clone, Debug)]
pub struct JumpOptions {
    /// Half-width of the parameter interval.
    pub eps: f64,
    pub j_max: usize,
    /// Halvings of `eps` always evaluated on each side.
    pub min_levels: usize,
    /// Halvings allowed while waiting for divergent branches to pass the
    /// floor and for the extrapolated limits to settle.
    pub max_levels: usize,
    /// Defaults to `lambda_1(L_D) - 50 max(1, |lambda_1(L_D)|)`.
    pub floor: Option<f64>,
    /// Absolute tolerance for extrapolated limits.
    pub match_tol: f64,
    /// Parameters per side at which the layer is checked.
    pub pattern_samples: usize,
}

impl Default for JumpOptions {
    fn default() -> Self {
        JumpOptions {
            eps: 0.5,
            j_max: 6,
            min_levels: 8,
            max_levels: 24,
            floor: None,
            match_tol: 1e-6,
            pattern_samples: 8,
        }
    }
}

/// One-sided limit of `lambda_j(L_s)` compared with `lambda_{j-k}(L_0)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BranchLimit {
    pub j: usize,
    /// Extrapolated limit; `None` for branches expected to diverge.
    pub limit: Option<f64>,
    /// Difference between the two highest extrapolation orders.
    pub error_estimate: f64,
    /// `lambda_{j-k}(L_0)`, or `None` when `j <= k`.
    pub expected: Option<f64>,
    /// Value at the parameter closest to `0`.
    pub last_value: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct JumpSide {
    /// `dim(L_s ∩ L_D)` on this side.
    pub c: usize,
    /// Jump number: `-mu` on `[-eps, 0]`, `mu` on `[0, eps]`.
    pub k: i64,
    pub s: Vec<f64>,
    /// `values[i][j - 1] = lambda_j(L_{s[i]})`.
    pub values: Vec<Vec<f64>>,
    pub limits: Vec<BranchLimit>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct JumpReport {
    pub c_minus: usize,
    pub c0: usize,
    pub c_plus: usize,
    pub k_minus: i64,
    pub k_plus: i64,
    /// `0 <= k± <= c0 - c±`.
    pub bounds_hold: bool,
    /// `lambda_1(L_0), ..., lambda_{j_max}(L_0)`.
    pub lambda0: Vec<f64>,
    pub floor: f64,
    pub left: JumpSide,
    pub right: JumpSide,
    pub match_tol: f64,
    pub tolerances: Tolerances,
}

impl JumpReport {
    pub fn consistent(&self) -> bool {
        self.bounds_hold
            && self
                .left
                .limits
                .iter()
                .chain(&self.right.limits)
                .all(|b| b.ok)
    }
}

/// Neville extrapolation of `(x_i, y_i)` to `x = 0`.
fn extrapolate(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (x[i + k] * p[i] - x[i] * p[i + 1]) / (x[i + k] - x[i]);
        }
    }
    p[0]
}

/// Number of trailing samples used for extrapolation.
const EXTRAPOLATION_POINTS: usize = 4;

fn limits(side: &JumpSide, lambda0: &[f64], floor: f64, match_tol: f64) -> Vec<BranchLimit> {
    let j_max = lambda0.len();
    let count = side.s.len();
    (1..=j_max)
        .map(|j| {
            let branch: Vec<f64> = side.values.iter().map(|v| v[j - 1]).collect();
            let last_value = branch[count - 1];
            let shifted = j as i64 - side.k;
            if side.k >= 0 && shifted <= 0 {
                let tail = &branch[count.saturating_sub(3)..];
                let falling = tail.windows(2).all(|w| w[1] < w[0]);
                return BranchLimit {
                    j,
                    limit: None,
                    error_estimate: 0.0,
                    expected: None,
                    last_value,
                    ok: falling && last_value < floor,
                };
            }
            let expected = (side.k >= 0)
                .then(|| lambda0.get(shifted as usize - 1).copied())
                .flatten();
            let from = count.saturating_sub(EXTRAPOLATION_POINTS);
            let hi = extrapolate(&side.s[from..], &branch[from..]);
            let lo = extrapolate(&side.s[from + 1..], &branch[from + 1..]);
            let ok = match expected {
                Some(e) => (hi - e).abs() <= match_tol,
                // Beyond the computed part of the L_0 spectrum nothing is checked.
                None => side.k >= 0,
            };
            BranchLimit {
                j,
                limit: Some(hi),
                error_estimate: (hi - lo).abs(),
                expected,
                last_value,
                ok,
            }
        })
        .collect()
}

/// Checks the relabelling `lim_{s -> 0±} lambda_j(L_s) = lambda_{j - k±}(L_0)`
/// along `path` on `[-eps, eps]`, where `k±` are the Maslov indices of the
/// two halves relative to `L_D`.
pub fn jump_experiment(
    p: &SLProblem,
    path: &dyn Fn(f64) -> Result<LagrangianFrame>,
    opts: &JumpOptions,
    tol: &Tolerances,
) -> Result<JumpReport> {
    let m = 2 * p.n();
    let eps = opts.eps;
    if !(eps > 0.0) || opts.j_max == 0 {
        return Err(Error::InvalidProblem("need eps > 0 and j_max >= 1".into()));
    }
    let l0 = path(0.0)?;
    if l0.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: l0.m(),
        });
    }
    let c0 = layer_of(&l0, tol)?;
    let mut layers = [0usize; 2];
    for (side, sign) in [-1.0, 1.0].into_iter().enumerate() {
        let dims = (0..opts.pattern_samples.max(1))
            .map(|i| layer_of(&path(sign * eps * 0.5f64.powi(i as i32))?, tol))
            .collect::<Result<Vec<_>>>()?;
        if dims.iter().any(|&d| d != dims[0]) {
            return Err(Error::PatternViolation(format!(
                "dim(L_s ∩ L_D) varies for s of sign {sign}: {dims:?}"
            )));
        }
        layers[side] = dims[0];
    }
    let d = dirichlet(m);
    let mu_left = maslov_index(&d, &LagrangianPath::from_fn(-eps, 0.0, 16, path)?, tol)?.index;
    let mu_right = maslov_index(&d, &LagrangianPath::from_fn(0.0, eps, 16, path)?, tol)?.index;
    let (k_minus, k_plus) = (-mu_left, mu_right);
    let bounds_hold = k_minus >= 0
        && k_plus >= 0
        && k_minus <= c0 as i64 - layers[0] as i64
        && k_plus <= c0 as i64 - layers[1] as i64;

    let lambda0 = lowest_values(p, &l0, opts.j_max, tol)?;
    let floor = match opts.floor {
        Some(f) => f,
        None => {
            let l1 = lowest_values(p, &d, 1, tol)?[0];
            l1 - 50.0 * l1.abs().max(1.0)
        }
    };
    let mut sides = Vec::with_capacity(2);
    for (idx, (sign, k)) in [(-1.0, k_minus), (1.0, k_plus)].into_iter().enumerate() {
        let diverging = k.clamp(0, opts.j_max as i64) as usize;
        let mut side = JumpSide {
            c: layers[idx],
            k,
            s: Vec::new(),
            values: Vec::new(),
            limits: Vec::new(),
        };
        for level in 0..=opts.max_levels {
            let s = sign * eps * 0.5f64.powi(level as i32);
            side.s.push(s);
            side.values
                .push(lowest_values(p, &path(s)?, opts.j_max, tol)?);
            if level + 1 < opts.min_levels.max(EXTRAPOLATION_POINTS) {
                continue;
            }
            let last = side.values.last().unwrap();
            side.limits = limits(&side, &lambda0, floor, opts.match_tol);
            let settled = side.limits[diverging..]
                .iter()
                .all(|b| b.error_estimate <= 0.1 * opts.match_tol);
            if settled && last[..diverging].iter().all(|&v| v < floor) {
                break;
            }
        }
        sides.push(side);
    }
    let right = sides.pop().unwrap();
    let left = sides.pop().unwrap();
    Ok(JumpReport {
        c_minus: layers[0],
        c0,
        c_plus: layers[1],
        k_minus,
        k_plus,
        bounds_hold,
        lambda0,
        floor,
        left,
        right,
        match_tol: opts.match_tol,
        tolerances: *tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{frame_of, sample_layer, tan_path_canonical};
    use core::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn neville_is_exact_on_cubics() {
        let x = [0.4, 0.2, 0.1, 0.05];
        let y: Vec<f64> = x
            .iter()
            .map(|t| 2.0 - t + 3.0 * t * t - t * t * t)
            .collect();
        assert!((extrapolate(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_path_layers() {
        let mut rng = sampling::rng(2);
        let sp = SingularPath::random(&mut rng, 4, 1, 2);
        assert_eq!(layer_of(&sp.eval(0.0), &tol()).unwrap(), 3);
        assert_eq!(layer_of(&sp.eval(0.3), &tol()).unwrap(), 1);
        assert_eq!(layer_of(&sp.eval(-1e-3), &tol()).unwrap(), 1);
    }

    #[test]
    fn continuous_tan_path_has_no_jumps() {
        let p = SLProblem::free(1, PI);
        let mut rng = sampling::rng(7);
        let cf = sample_layer(&mut rng, 2, 1);
        let path = |s: f64| Ok(tan_path_canonical(&cf, s));
        let opts = JumpOptions {
            j_max: 3,
            ..JumpOptions::default()
        };
        let rep = jump_experiment(&p, &path, &opts, &tol()).unwrap();
        assert_eq!((rep.c_minus, rep.c0, rep.c_plus), (1, 1, 1));
        assert_eq!((rep.k_minus, rep.k_plus), (0, 0));
        assert!(rep.consistent(), "{rep:?}");
    }

    #[test]
    fn dirichlet_loop_jumps_by_codimension() {
        let p = SLProblem::free(1, PI);
        let mut rng = sampling::rng(8);
        let cf = sample_layer(&mut rng, 2, 1);
        let sp = SingularPath::dirichlet_loop(&cf);
        let path = |s: f64| Ok(sp.eval(s));
        let opts = JumpOptions {
            j_max: 3,
            ..JumpOptions::default()
        };
        let rep = jump_experiment(&p, &path, &opts, &tol()).unwrap();
        assert_eq!((rep.c_minus, rep.c0, rep.c_plus), (1, 2, 1));
        assert_eq!((rep.k_minus, rep.k_plus), (0, 1));
        assert!(rep.consistent(), "{rep:?}");
        assert!(rep.right.limits[0].last_value < rep.floor);
        let l2 = rep.right.limits[1].limit.unwrap();
        assert!((l2 - 1.0).abs() < 1e-6, "{l2}");
    }

    #[test]
    fn constant_path_is_trivial() {
        let p = SLProblem::free(1, PI);
        let mut rng = sampling::rng(9);
        let l = frame_of(&sample_layer(&mut rng, 2, 0));
        let path = |_s: f64| Ok(l.clone());
        let opts = JumpOptions {
            j_max: 2,
            min_levels: 4,
            ..JumpOptions::default()
        };
        let rep = jump_experiment(&p, &path, &opts, &tol()).unwrap();
        assert_eq!((rep.k_minus, rep.k_plus), (0, 0));
        assert!(rep.consistent());
    }
}
