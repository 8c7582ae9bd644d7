//! Randomized checks of the Maslov index axioms: reparametrization (I),
//! homotopy with fixed endpoints (II), path additivity (III), symplectic
//! invariance (IV) and direct sums (V).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use nalgebra::ComplexField;

use rand::Rng;

use super::{maslov_index, LagrangianPath};
use crate::error::Result;
use crate::lagrangian::{lagrangian_from_unitary, LagrangianFrame, UnitaryRep};
use crate::linalg::{expi_hermitian, CMat};
use crate::sampling::{self, SeededRng};
use crate::Tolerances;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AxiomFailure {
    pub trial: usize,
    pub expected: Option<i64>,
    pub found: Option<i64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AxiomOutcome {
    pub axiom: &'static str,
    pub trials: usize,
    pub passed: usize,
    pub failures: Vec<AxiomFailure>,
}

impl AxiomOutcome {
    fn new(axiom: &'static str) -> Self {
        AxiomOutcome {
            axiom,
            trials: 0,
            passed: 0,
            failures: Vec::new(),
        }
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.passed == self.trials
    }

    fn record(&mut self, trial: usize, outcome: Result<(i64, i64)>, what: &str) {
        self.trials += 1;
        match outcome {
            Ok((a, b)) if a == b => self.passed += 1,
            Ok((a, b)) => self.failures.push(AxiomFailure {
                trial,
                expected: Some(a),
                found: Some(b),
                detail: String::from(what),
            }),
            Err(e) => self.failures.push(AxiomFailure {
                trial,
                expected: None,
                found: None,
                detail: format!("{what}: {e}"),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AxiomReport {
    pub seed: u64,
    pub outcomes: Vec<AxiomOutcome>,
}

impl AxiomReport {
    pub fn ok(&self) -> bool {
        self.outcomes.iter().all(AxiomOutcome::ok)
    }

    pub fn outcome(&self, axiom: &str) -> Option<&AxiomOutcome> {
        self.outcomes.iter().find(|o| o.axiom == axiom)
    }
}

/// `U(t) = exp(i t H1) U_b exp(i t^2 H2)` on `[0, 1]`.
#[derive(Clone)]
struct RandomPath {
    base: CMat,
    h1: CMat,
    h2: CMat,
}

impl RandomPath {
    fn sample(rng: &mut SeededRng, m: usize) -> Self {
        let scale = rng.random_range(1.0..4.0);
        RandomPath {
            base: sampling::unitary(rng, m),
            h1: sampling::hermitian(rng, m) * nalgebra::Complex::new(scale, 0.0),
            h2: sampling::hermitian(rng, m) * nalgebra::Complex::new(scale, 0.0),
        }
    }

    fn unitary(&self, t: f64) -> CMat {
        expi_hermitian(&self.h1, t) * &self.base * expi_hermitian(&self.h2, t * t)
    }

    fn frame(&self, t: f64) -> LagrangianFrame {
        frame_of(self.unitary(t))
    }
}

fn frame_of(u: CMat) -> LagrangianFrame {
    lagrangian_from_unitary(&UnitaryRep::new_unchecked(u))
}

fn index_of<F>(l0: &LagrangianFrame, a: f64, b: f64, f: F, tol: &Tolerances) -> Result<i64>
where
    F: Fn(f64) -> LagrangianFrame,
{
    let path = LagrangianPath::from_fn(a, b, 8, |t| Ok(f(t)))?;
    Ok(maslov_index(l0, &path, tol)?.index)
}

/// Runs `trials` random instances of axioms I, III, IV, V and
/// `max(1, trials / 4)` homotopy pairs for axiom II.
pub fn verify_index_axioms(seed: u64, trials: usize, tol: &Tolerances) -> AxiomReport {
    let mut rng = sampling::rng(seed);
    let mut reparam = AxiomOutcome::new("I");
    let mut homotopy = AxiomOutcome::new("II");
    let mut additivity = AxiomOutcome::new("III");
    let mut symplectic = AxiomOutcome::new("IV");
    let mut sums = AxiomOutcome::new("V");

    for trial in 0..trials {
        let m = rng.random_range(1..=3);
        let path = RandomPath::sample(&mut rng, m);
        let l0 = frame_of(sampling::unitary(&mut rng, m));

        // I: monotone reparametrization of [0, 1].
        let c = rng.random_range(-0.9..0.9);
        let cubic = rng.random_bool(0.5);
        let g = move |s: f64| {
            if cubic {
                s * s * s
            } else {
                s + c * (2.0 * PI * s).sin() / (2.0 * PI)
            }
        };
        let res = (|| {
            let base = index_of(&l0, 0.0, 1.0, |t| path.frame(t), tol)?;
            let re = index_of(&l0, 0.0, 1.0, |s| path.frame(g(s)), tol)?;
            Ok((base, re))
        })();
        reparam.record(trial, res, "reparametrized index differs");

        // III: split at a random interior point.
        let cut = rng.random_range(0.1..0.9);
        let res = (|| {
            let whole = index_of(&l0, 0.0, 1.0, |t| path.frame(t), tol)?;
            let left = index_of(&l0, 0.0, cut, |t| path.frame(t), tol)?;
            let right = index_of(&l0, cut, 1.0, |t| path.frame(t), tol)?;
            Ok((whole, left + right))
        })();
        additivity.record(trial, res, "split indices do not add up");

        // IV: the same real symplectic map applied to both arguments.
        let s = sampling::symplectic(&mut rng, m, 0.5);
        let res = (|| {
            let base = index_of(&l0, 0.0, 1.0, |t| path.frame(t), tol)?;
            let moved = index_of(
                &l0.transformed(&s),
                0.0,
                1.0,
                |t| path.frame(t).transformed(&s),
                tol,
            )?;
            Ok((base, moved))
        })();
        symplectic.record(trial, res, "symplectic image has a different index");

        // V: direct sum with an independent path.
        let m2 = rng.random_range(1..=2);
        let other = RandomPath::sample(&mut rng, m2);
        let l0b = frame_of(sampling::unitary(&mut rng, m2));
        let res = (|| {
            let a = index_of(&l0, 0.0, 1.0, |t| path.frame(t), tol)?;
            let b = index_of(&l0b, 0.0, 1.0, |t| other.frame(t), tol)?;
            let sum = index_of(
                &l0.direct_sum(&l0b),
                0.0,
                1.0,
                |t| path.frame(t).direct_sum(&other.frame(t)),
                tol,
            )?;
            Ok((a + b, sum))
        })();
        sums.record(trial, res, "direct sum index is not additive");
    }

    // II: U(sigma, t) = U(t) exp(i sigma bump(t) K) keeps both endpoints.
    for trial in 0..(trials / 4).max(1) {
        let m = rng.random_range(1..=3);
        let path = RandomPath::sample(&mut rng, m);
        let l0 = frame_of(sampling::unitary(&mut rng, m));
        let k = sampling::hermitian(&mut rng, m)
            * nalgebra::Complex::new(rng.random_range(0.5..2.0), 0.0);
        let deformed = |sigma: f64, t: f64| {
            let bump = (PI * t).sin().powi(2);
            frame_of(path.unitary(t) * expi_hermitian(&k, sigma * bump))
        };
        let res = (|| {
            let a = index_of(&l0, 0.0, 1.0, |t| deformed(0.0, t), tol)?;
            let b = index_of(&l0, 0.0, 1.0, |t| deformed(1.0, t), tol)?;
            Ok((a, b))
        })();
        homotopy.record(trial, res, "homotopic paths have different indices");
    }

    AxiomReport {
        seed,
        outcomes: alloc::vec![reparam, homotopy, additivity, symplectic, sums],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_axiom_run_passes() {
        let report = verify_index_axioms(7, 8, &Tolerances::default());
        for o in &report.outcomes {
            assert!(o.ok(), "{o:?}");
        }
        assert_eq!(report.outcome("II").unwrap().trials, 2);
    }

    #[test]
    fn constant_paths_pass_all_axioms() {
        let mut rng = sampling::rng(3);
        let u = sampling::unitary(&mut rng, 2);
        let l0 = frame_of(sampling::unitary(&mut rng, 2));
        let tol = Tolerances::default();
        let base = index_of(&l0, 0.0, 1.0, |_| frame_of(u.clone()), &tol).unwrap();
        let split = index_of(&l0, 0.0, 0.3, |_| frame_of(u.clone()), &tol).unwrap()
            + index_of(&l0, 0.3, 1.0, |_| frame_of(u.clone()), &tol).unwrap();
        assert_eq!((base, split), (0, 0));
    }
}
