use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::sampling;
use crate::slp::SLProblem;
use crate::Tolerances;

use super::witness::endpoint_witness_with;
use super::{
    frame_of, lowest_values, nth_eigenvalue, resolution, sample_layer, tan_path_canonical,
    DirichletData, Side,
};

/// An end of the predicted range; `value = None` stands for `-inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Endpoint {
    pub value: Option<f64>,
    pub closed: bool,
}

/// Row of the case table for `lambda_j(Σ_r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum RangeCase {
    /// `j <= 2n - r` and `r <= c2`: `(-inf, lambda_j(L_D))`.
    UnboundedOpen,
    /// `j <= 2n - r` and `r > c2`: `(-inf, lambda_j(L_D)]`.
    UnboundedClosed,
    /// `r <= min(b1, c2)`: both ends open.
    Case1,
    /// `c2 < r <= b1`: left open, right closed.
    Case2,
    /// `b1 < r <= c2`: left closed, right open.
    Case3,
    /// `r > max(b1, c2)`: both ends closed.
    Case4,
}

impl RangeCase {
    pub fn classify(j: usize, r: usize, n: usize, b1: usize, c2: usize) -> Self {
        if j <= 2 * n - r {
            return if r <= c2 {
                RangeCase::UnboundedOpen
            } else {
                RangeCase::UnboundedClosed
            };
        }
        match (r > b1, r > c2) {
            (false, false) => RangeCase::Case1,
            (false, true) => RangeCase::Case2,
            (true, false) => RangeCase::Case3,
            (true, true) => RangeCase::Case4,
        }
    }

    pub fn left_closed(self) -> bool {
        matches!(self, RangeCase::Case3 | RangeCase::Case4)
    }

    pub fn right_closed(self) -> bool {
        matches!(
            self,
            RangeCase::UnboundedClosed | RangeCase::Case2 | RangeCase::Case4
        )
    }

    pub fn describe(self) -> &'static str {
        match self {
            RangeCase::UnboundedOpen => "j <= 2n - r and r <= c2: (-inf, lambda_j(L_D))",
            RangeCase::UnboundedClosed => "j <= 2n - r and r > c2: (-inf, lambda_j(L_D)]",
            RangeCase::Case1 => "r <= min(b1, c2): (lambda_{j-2n+r}(L_D), lambda_j(L_D))",
            RangeCase::Case2 => "c2 < r <= b1: (lambda_{j-2n+r}(L_D), lambda_j(L_D)]",
            RangeCase::Case3 => "b1 < r <= c2: [lambda_{j-2n+r}(L_D), lambda_j(L_D))",
            RangeCase::Case4 => "r > max(b1, c2): [lambda_{j-2n+r}(L_D), lambda_j(L_D)]",
        }
    }
}

/// Outcome of a witness attempt at one end.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WitnessOutcome {
    pub side: Side,
    pub predicted_closed: bool,
    pub target: f64,
    /// `lambda_j` of the witness when one was built.
    pub attained: Option<f64>,
    pub s0: Option<f64>,
    pub note: String,
}

/// `lambda_j` along the tan-path of one sampled boundary condition.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TanSweep {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
    /// Non-increasing in `s` up to the resolution.
    pub monotone: bool,
}

#[derive(Clone, Debug)]
pub struct RangeOptions {
    pub samples: usize,
    pub seed: u64,
    /// Number of samples also swept along their tan-path.
    pub sweeps: usize,
    pub sweep_s: Vec<f64>,
}

impl Default for RangeOptions {
    fn default() -> Self {
        RangeOptions {
            samples: 200,
            seed: 0,
            sweeps: 4,
            sweep_s: alloc::vec![-1.2, -0.6, 0.0, 0.6, 1.2],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RangeReport {
    pub j: usize,
    pub r: usize,
    pub n: usize,
    pub b1: usize,
    pub b2: usize,
    pub c1: usize,
    pub c2: usize,
    /// Dirichlet eigenvalues used, with multiplicity.
    pub dirichlet: Vec<f64>,
    pub case: RangeCase,
    pub lower: Endpoint,
    pub upper: Endpoint,
    pub samples: Vec<f64>,
    pub sample_min: f64,
    pub sample_max: f64,
    pub sweeps: Vec<TanSweep>,
    pub witnesses: Vec<WitnessOutcome>,
    /// For unbounded ranges: whether a tan-path towards `pi/2` drove
    /// `lambda_j` below `floor`.
    pub divergence: Option<bool>,
    pub floor: f64,
    pub violations: Vec<String>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl RangeReport {
    pub fn consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Halvings of `pi/2 - s` tried while looking for divergence.
const MAX_DIVERGENCE_LEVELS: i32 = 20;

/// Samples `lambda_j` over `Σ_r` and checks it against the case table:
/// the hull `[lambda_{j-2n+r}(L_D), lambda_j(L_D)]`, open ends never hit,
/// closed ends attained by a witness, monotonicity along tan-paths and
/// divergence when the range is unbounded below.
pub fn range_scan(
    p: &SLProblem,
    j: usize,
    r: usize,
    opts: &RangeOptions,
    tol: &Tolerances,
) -> Result<RangeReport> {
    let n = p.n();
    let m = 2 * n;
    if j == 0 || r > m {
        return Err(Error::InvalidProblem(format!(
            "need j >= 1 and 0 <= r <= {m}"
        )));
    }
    let dd = DirichletData::compute(p, j + m + 1, tol)?;
    let (c1, c2) = dd.neighbours(j)?;
    let left_idx = (j > m - r).then(|| j - (m - r));
    let (b1, b2) = match left_idx {
        Some(i) => dd.neighbours(i)?,
        None => (0, 0),
    };
    let case = RangeCase::classify(j, r, n, b1, c2);
    let lower = Endpoint {
        value: left_idx.map(|i| dd.value(i)),
        closed: case.left_closed(),
    };
    let upper = Endpoint {
        value: Some(dd.value(j)),
        closed: case.right_closed(),
    };
    let l1 = dd.value(1);
    let floor = l1 - 50.0 * l1.abs().max(1.0);
    let mut violations = Vec::new();

    let mut rng = sampling::rng(opts.seed);
    let mut forms = Vec::with_capacity(opts.samples);
    let mut samples = Vec::with_capacity(opts.samples);
    for _ in 0..opts.samples {
        let cf = sample_layer(&mut rng, m, r);
        samples.push(nth_eigenvalue(p, &frame_of(&cf), j, tol)?);
        forms.push(cf);
    }
    let mut sweeps = Vec::new();
    for cf in forms.iter().take(opts.sweeps) {
        let mut values = Vec::with_capacity(opts.sweep_s.len());
        for &s in &opts.sweep_s {
            values.push(nth_eigenvalue(p, &tan_path_canonical(cf, s), j, tol)?);
        }
        let monotone = values
            .windows(2)
            .all(|w| w[1] <= w[0] + resolution(tol, w[0]));
        if !monotone {
            violations.push(format!("lambda_{j} increases along a tan-path: {values:?}"));
        }
        samples.extend(values.iter().copied());
        sweeps.push(TanSweep {
            s: opts.sweep_s.clone(),
            values,
            monotone,
        });
    }
    for &v in &samples {
        check_sample(v, &lower, &upper, tol, &mut violations);
    }

    let mut witnesses = Vec::new();
    for (side, end) in [(Side::Left, lower), (Side::Right, upper)] {
        let Some(target) = end.value else { continue };
        let outcome = match endpoint_witness_with(p, &dd, j, r, side, tol) {
            Ok(w) => WitnessOutcome {
                side,
                predicted_closed: end.closed,
                target,
                attained: Some(w.lambda),
                s0: Some(w.s0),
                note: String::new(),
            },
            Err(Error::CasePrecludesAttainment(note)) | Err(Error::TuningFailed(note)) => {
                WitnessOutcome {
                    side,
                    predicted_closed: end.closed,
                    target,
                    attained: None,
                    s0: None,
                    note,
                }
            }
            Err(e) => return Err(e),
        };
        if end.closed != outcome.attained.is_some() {
            violations.push(format!(
                "{side:?} endpoint {target} predicted {} but the witness {}",
                if end.closed { "closed" } else { "open" },
                if outcome.attained.is_some() {
                    "attained it"
                } else {
                    "failed"
                }
            ));
        }
        witnesses.push(outcome);
    }

    let divergence = match (lower.value, forms.first()) {
        (None, Some(cf)) => {
            let d = diverges(p, cf, j, floor, tol)?;
            if !d {
                violations.push(format!(
                    "lambda_{j} did not fall below {floor} along a tan-path"
                ));
            }
            Some(d)
        }
        _ => None,
    };

    let sample_min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let sample_max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RangeReport {
        j,
        r,
        n,
        b1,
        b2,
        c1,
        c2,
        dirichlet: dd.values().to_vec(),
        case,
        lower,
        upper,
        samples,
        sample_min,
        sample_max,
        sweeps,
        witnesses,
        divergence,
        floor,
        violations,
        seed: opts.seed,
        tolerances: *tol,
    })
}

fn check_sample(
    v: f64,
    lower: &Endpoint,
    upper: &Endpoint,
    tol: &Tolerances,
    violations: &mut Vec<String>,
) {
    if let Some(lo) = lower.value {
        let slack = resolution(tol, lo);
        if v < lo - slack {
            violations.push(format!("sample {v} below the left endpoint {lo}"));
        } else if !lower.closed && v <= lo + slack {
            violations.push(format!("sample {v} attains the open left endpoint {lo}"));
        }
    }
    if let Some(hi) = upper.value {
        let slack = resolution(tol, hi);
        if v > hi + slack {
            violations.push(format!("sample {v} above the right endpoint {hi}"));
        } else if !upper.closed && v >= hi - slack {
            violations.push(format!("sample {v} attains the open right endpoint {hi}"));
        }
    }
}

/// Whether `lambda_j` along the tan-path towards `pi/2` falls below
/// `floor` while still decreasing over the last three samples.
fn diverges(
    p: &SLProblem,
    cf: &crate::lagrangian::CanonicalForm,
    j: usize,
    floor: f64,
    tol: &Tolerances,
) -> Result<bool> {
    let mut values: Vec<f64> = Vec::new();
    for k in 1..=MAX_DIVERGENCE_LEVELS {
        let s = FRAC_PI_2 - 0.5f64.powi(k);
        values.push(nth_eigenvalue(p, &tan_path_canonical(cf, s), j, tol)?);
        let t = values.len();
        if t >= 3
            && values[t - 1] < floor
            && values[t - 1] < values[t - 2]
            && values[t - 2] < values[t - 3]
        {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `lambda_{j0}(L)` over samples of `Σ_r`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConstantBranchReport {
    pub j0: usize,
    pub r0: usize,
    pub r: usize,
    pub dirichlet_value: f64,
    pub values: Vec<f64>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl ConstantBranchReport {
    pub fn consistent(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// Checks that `lambda_{j0}` is constant on `Σ_r` when `lambda_{j0}(L_D)`
/// closes a cluster of multiplicity `r0` and `r >= 2n - r0 + 1`.
pub fn constant_branch_check(
    p: &SLProblem,
    j0: usize,
    r0: usize,
    r: usize,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ConstantBranchReport> {
    let n = p.n();
    let m = 2 * n;
    if r0 == 0 || r0 > n || j0 < r0 {
        return Err(Error::PremiseFailed(format!(
            "need 1 <= r0 <= n and j0 >= r0 (r0 = {r0}, j0 = {j0})"
        )));
    }
    if r + r0 <= m || r > m {
        return Err(Error::PremiseFailed(format!(
            "r = {r} outside [{}, {m}]",
            m - r0 + 1
        )));
    }
    let dd = DirichletData::compute(p, j0 + 1, tol)?;
    let (below, above) = dd.neighbours(j0)?;
    if below + 1 != r0 || above != 0 {
        return Err(Error::PremiseFailed(format!(
            "lambda_{j0}(L_D) = {} is not the last of a cluster of multiplicity {r0} ({} below, {above} above)",
            dd.value(j0),
            below
        )));
    }
    let target = dd.value(j0);
    let mut rng = sampling::rng(seed);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let cf = sample_layer(&mut rng, m, r);
        values.push(lowest_values(p, &frame_of(&cf), j0, tol)?[j0 - 1]);
    }
    let max_deviation = values
        .iter()
        .map(|v| (v - target).abs())
        .fold(0.0, f64::max);
    Ok(ConstantBranchReport {
        j0,
        r0,
        r,
        dirichlet_value: target,
        values,
        max_deviation,
        tolerance: resolution(tol, target),
        seed,
    })
}
