//! Command dispatch.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;
use sl_maslov_core::experiments::{
    jump_experiment, limit_experiment, range_scan, tan_path_canonical, JumpOptions, LimitOptions,
    RangeCase, RangeOptions, SingularPath,
};
use sl_maslov_core::lagrangian::{canonical_form, dirichlet};
use sl_maslov_core::maslov::{maslov_index, verify_index_axioms, AngleBranches, LagrangianPath};
use sl_maslov_core::sampling;
use sl_maslov_core::slp::{
    eigenvalues_shooting, galerkin_spectrum, lowest_eigenvalues, Method, SLProblem, Spectrum,
};
use sl_maslov_core::{CanonicalForm, LagrangianFrame};

use crate::config::{Command, JumpPath, RunConfig, SolveMethod};
use crate::error::CliError;
use crate::report::{fmt_f64, fmt_opt, OutputDir, Report, Status, REPORT_SCHEMA};

/// Report payload and the checks it failed.
struct Finished<T: Serialize> {
    result: T,
    failures: Vec<String>,
}

impl<T: Serialize> Finished<T> {
    fn ok(result: T) -> Self {
        Finished {
            result,
            failures: Vec::new(),
        }
    }
}

/// Runs `cfg`, writes `report.json` and the CSV artifacts into `cfg.out`
/// and returns the report path. A failed invariant check still writes the
/// report and then returns [`CliError::Check`].
pub fn run(cfg: &RunConfig) -> Result<std::path::PathBuf, CliError> {
    let hash = cfg.hash();
    let mut out = OutputDir::create(&cfg.out, &hash, cfg.seed, cfg.tolerances)?;
    let p = cfg.problem.build()?;
    match cfg.command {
        Command::Solve => {
            let f = solve(cfg, &p, &mut out)?;
            finish(cfg, &hash, &mut out, f)
        }
        Command::Maslov => {
            let f = maslov(cfg, &p, &mut out)?;
            finish(cfg, &hash, &mut out, f)
        }
        Command::Jump => {
            let f = jump(cfg, &p, &mut out)?;
            finish(cfg, &hash, &mut out, f)
        }
        Command::Range => {
            let f = range(cfg, &p, &mut out)?;
            finish(cfg, &hash, &mut out, f)
        }
        Command::Limit => {
            let f = limit(cfg, &p, &mut out)?;
            finish(cfg, &hash, &mut out, f)
        }
        Command::Axioms => {
            let f = axioms(cfg, &mut out)?;
            finish(cfg, &hash, &mut out, f)
        }
    }
}

/// Runs `cfg` and converts the outcome into an exit status, writing
/// `error.json` (when the output directory is usable) and printing the
/// error record to stderr on failure.
pub fn execute(cfg: &RunConfig) -> i32 {
    match run(cfg) {
        Ok(_) => 0,
        Err(e) => {
            let hash = cfg.hash();
            let record = e.record(Some(&hash));
            if let Ok(mut out) = OutputDir::create(&cfg.out, &hash, cfg.seed, cfg.tolerances) {
                let _ = out.write_error(&record);
            }
            eprintln!(
                "{}",
                serde_json::to_string(&record).expect("error record serializes")
            );
            record.exit_code
        }
    }
}

fn finish<T: Serialize>(
    cfg: &RunConfig,
    hash: &str,
    out: &mut OutputDir,
    f: Finished<T>,
) -> Result<std::path::PathBuf, CliError> {
    let status = if f.failures.is_empty() {
        Status::Ok
    } else {
        Status::CheckFailed
    };
    let mut artifacts = out.written().to_vec();
    artifacts.push("report.json".into());
    let report = Report {
        schema: REPORT_SCHEMA,
        command: cfg.command.name(),
        config_hash: hash,
        seed: cfg.seed,
        tolerances: cfg.tolerances,
        problem: &cfg.problem_label,
        bc: &cfg.bc_label,
        status,
        failures: f.failures.clone(),
        artifacts,
        result: &f.result,
    };
    out.write_json("report.json", &report)?;
    if f.failures.is_empty() {
        Ok(out.path().join("report.json"))
    } else {
        Err(CliError::Check(f.failures.join("; ")))
    }
}

fn bc_frame(cfg: &RunConfig, p: &SLProblem) -> Result<LagrangianFrame, CliError> {
    cfg.bc.frame(p.n(), &cfg.tolerances)
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Shooting => "shooting",
        Method::Galerkin => "galerkin",
    }
}

fn solve(
    cfg: &RunConfig,
    p: &SLProblem,
    out: &mut OutputDir,
) -> Result<Finished<Spectrum>, CliError> {
    let tol = &cfg.tolerances;
    let l0 = bc_frame(cfg, p)?;
    let spec = match (cfg.method, cfg.window) {
        (SolveMethod::Shooting, Some(w)) => eigenvalues_shooting(p, &l0, w, tol)?,
        (SolveMethod::Shooting, None) => lowest_eigenvalues(p, &l0, cfg.count, tol)?,
        (SolveMethod::Galerkin, w) => {
            let mut s = galerkin_spectrum(p, &l0, cfg.mesh, cfg.count, tol)?;
            if let Some((lo, hi)) = w {
                s.eigenvalues.retain(|e| e.lambda > lo && e.lambda < hi);
                s.window = (lo, hi);
            }
            s
        }
    };
    let mut j = spec.diagnostics.below_window + 1;
    let mut rows = Vec::new();
    for e in &spec.eigenvalues {
        rows.push(vec![
            j.to_string(),
            fmt_f64(e.lambda),
            e.multiplicity.to_string(),
            method_name(spec.method).to_string(),
            fmt_f64(e.residual),
        ]);
        j += e.multiplicity;
    }
    out.write_csv(
        "spectrum.csv",
        &header(&["j", "lambda", "multiplicity", "method", "residual"]),
        rows,
    )?;
    Ok(Finished::ok(spec))
}

#[derive(Serialize)]
struct IndexSummary {
    interval: (f64, f64),
    index: i64,
    expected: i64,
    endpoint_dims: (usize, usize),
    refinement_depth: usize,
}

#[derive(Serialize)]
struct MaslovSummary {
    m: usize,
    r: usize,
    lower: IndexSummary,
    upper: IndexSummary,
}

fn maslov(
    cfg: &RunConfig,
    p: &SLProblem,
    out: &mut OutputDir,
) -> Result<Finished<MaslovSummary>, CliError> {
    let tol = &cfg.tolerances;
    let cf = canonical_form(&bc_frame(cfg, p)?, tol)?;
    let m = cf.m();
    let d = dirichlet(m);
    let mut halves = Vec::new();
    for (name, a, b, expected) in [
        ("lower", -FRAC_PI_2, 0.0, 0),
        ("upper", 0.0, FRAC_PI_2, -((m - cf.r) as i64)),
    ] {
        let path = LagrangianPath::from_fn(a, b, 16, |s| Ok(tan_path_canonical(&cf, s)))?;
        let res = maslov_index(&d, &path, tol)?;
        write_angles(out, &format!("angles_{name}.csv"), &res.branches)?;
        halves.push(IndexSummary {
            interval: (a, b),
            index: res.index,
            expected,
            endpoint_dims: res.endpoint_dims,
            refinement_depth: res.refinement_depth,
        });
    }
    let upper = halves.pop().expect("two halves");
    let lower = halves.pop().expect("two halves");
    let failures = [("[-pi/2, 0]", &lower), ("[0, pi/2]", &upper)]
        .iter()
        .filter(|(_, h)| h.index != h.expected)
        .map(|(iv, h)| {
            format!(
                "tan-path index on {iv} is {} instead of {}",
                h.index, h.expected
            )
        })
        .collect();
    Ok(Finished {
        result: MaslovSummary {
            m,
            r: cf.r,
            lower,
            upper,
        },
        failures,
    })
}

fn write_angles(out: &mut OutputDir, name: &str, b: &AngleBranches) -> Result<(), CliError> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=b.branch_count()).map(|j| format!("theta_{j}")));
    let rows = b.ts.iter().zip(&b.thetas).map(|(t, th)| {
        let mut row = vec![fmt_f64(*t)];
        row.extend(th.iter().map(|&x| fmt_f64(x)));
        row
    });
    out.write_csv(name, &h, rows)
}

fn singular_path(cfg: &RunConfig, p: &SLProblem) -> Result<SingularPath, CliError> {
    let m = 2 * p.n();
    match cfg.path {
        JumpPath::DirichletLoop => {
            let cf: CanonicalForm = canonical_form(&bc_frame(cfg, p)?, &cfg.tolerances)?;
            Ok(SingularPath::dirichlet_loop(&cf))
        }
        JumpPath::Random => {
            let r = cfg
                .r
                .ok_or_else(|| CliError::invalid("r", "a random jump path needs --r"))?;
            let q = cfg.q.unwrap_or(m.saturating_sub(r));
            if r + q > m {
                return Err(CliError::invalid("q", &format!("need r + q <= 2n = {m}")));
            }
            Ok(SingularPath::random(&mut sampling::rng(cfg.seed), m, r, q))
        }
    }
}

fn jump(
    cfg: &RunConfig,
    p: &SLProblem,
    out: &mut OutputDir,
) -> Result<Finished<sl_maslov_core::experiments::JumpReport>, CliError> {
    let path = singular_path(cfg, p)?;
    let opts = JumpOptions {
        j_max: cfg.j_max,
        floor: cfg.floor,
        ..JumpOptions::default()
    };
    let eval = |s: f64| Ok(path.eval(s));
    let rep = jump_experiment(p, &eval, &opts, &cfg.tolerances)?;
    for (name, side) in [
        ("branches_left.csv", &rep.left),
        ("branches_right.csv", &rep.right),
    ] {
        let mut h = vec!["s".to_string()];
        h.extend((1..=cfg.j_max).map(|j| format!("lambda_{j}")));
        let rows = side.s.iter().zip(&side.values).map(|(s, v)| {
            let mut row = vec![fmt_f64(*s)];
            row.extend(v.iter().map(|&x| fmt_f64(x)));
            row
        });
        out.write_csv(name, &h, rows)?;
    }
    let rows = [("left", &rep.left), ("right", &rep.right)]
        .into_iter()
        .flat_map(|(name, side)| {
            side.limits.iter().map(move |b| {
                vec![
                    name.to_string(),
                    b.j.to_string(),
                    fmt_opt(b.limit),
                    fmt_f64(b.error_estimate),
                    fmt_opt(b.expected),
                    fmt_f64(b.last_value),
                    b.ok.to_string(),
                ]
            })
        });
    out.write_csv(
        "limits.csv",
        &header(&[
            "side",
            "j",
            "limit",
            "error_estimate",
            "expected",
            "last_value",
            "ok",
        ]),
        rows,
    )?;
    let mut failures = Vec::new();
    if !rep.bounds_hold {
        failures.push(format!(
            "jump numbers k- = {}, k+ = {} violate 0 <= k± <= c0 - c± with c = ({}, {}, {})",
            rep.k_minus, rep.k_plus, rep.c_minus, rep.c0, rep.c_plus
        ));
    }
    for (name, side) in [("left", &rep.left), ("right", &rep.right)] {
        for b in side.limits.iter().filter(|b| !b.ok) {
            failures.push(format!("{name} limit of lambda_{} does not match", b.j));
        }
    }
    Ok(Finished {
        result: rep,
        failures,
    })
}

/// Case table for `lambda_j(Σ_r)`, printed when `j` or `r` is out of range.
pub fn case_table_explanation(j: usize, r: usize, n: usize) -> String {
    let m = 2 * n;
    let mut s = format!(
        "j = {j}, r = {r} is incompatible with n = {n}: need j >= 1 and 0 <= r <= 2n = {m}. \
         With b1, c2 the Dirichlet multiplicity counts below lambda_{{j-2n+r}} and above lambda_j, the cases are:"
    );
    for c in [
        RangeCase::UnboundedOpen,
        RangeCase::UnboundedClosed,
        RangeCase::Case1,
        RangeCase::Case2,
        RangeCase::Case3,
        RangeCase::Case4,
    ] {
        s.push_str(&format!(" [{:?}] {};", c, c.describe()));
    }
    s.pop();
    s
}

fn range(
    cfg: &RunConfig,
    p: &SLProblem,
    out: &mut OutputDir,
) -> Result<Finished<sl_maslov_core::experiments::RangeReport>, CliError> {
    let j = cfg
        .j
        .ok_or_else(|| CliError::invalid("j", "range needs --j"))?;
    let r = cfg
        .r
        .ok_or_else(|| CliError::invalid("r", "range needs --r"))?;
    if j == 0 || r > 2 * p.n() {
        return Err(CliError::Check(case_table_explanation(j, r, p.n())));
    }
    let opts = RangeOptions {
        samples: cfg.samples,
        seed: cfg.seed,
        ..RangeOptions::default()
    };
    let rep = range_scan(p, j, r, &opts, &cfg.tolerances)?;
    out.write_csv(
        "samples.csv",
        &header(&["sample", "lambda"]),
        rep.samples
            .iter()
            .enumerate()
            .map(|(i, &x)| vec![i.to_string(), fmt_f64(x)]),
    )?;
    let rows = rep.sweeps.iter().enumerate().flat_map(|(k, sw)| {
        sw.s.iter()
            .zip(&sw.values)
            .map(move |(&s, &v)| vec![k.to_string(), fmt_f64(s), fmt_f64(v)])
    });
    out.write_csv("sweeps.csv", &header(&["sweep", "s", "lambda"]), rows)?;
    let failures = rep.violations.clone();
    Ok(Finished {
        result: rep,
        failures,
    })
}

/// Default `limit` floor per unit of spectral scale.
pub const DEFAULT_LIMIT_FLOOR: f64 = -1e7;

#[derive(Serialize)]
struct LimitSummary<'a> {
    final_dist: f64,
    report: &'a sl_maslov_core::experiments::LimitReport,
}

fn limit(
    cfg: &RunConfig,
    p: &SLProblem,
    out: &mut OutputDir,
) -> Result<Finished<serde_json::Value>, CliError> {
    let floor = cfg
        .floor
        .unwrap_or(DEFAULT_LIMIT_FLOOR * p.spectral_scale().max(1.0));
    let rep = limit_experiment(p, &LimitOptions::new(floor), &cfg.tolerances)?;
    out.write_csv(
        "dist_curve.csv",
        &header(&["lambda", "dist"]),
        rep.grid
            .iter()
            .zip(&rep.dist_curve)
            .map(|(&l, &d)| vec![fmt_f64(l), fmt_f64(d)]),
    )?;
    out.write_csv(
        "transversality.csv",
        &header(&["lambda_a", "lambda_b", "dim"]),
        rep.transversality
            .iter()
            .map(|t| vec![fmt_f64(t.lambda_a), fmt_f64(t.lambda_b), t.dim.to_string()]),
    )?;
    let n = p.n();
    let mut failures = Vec::new();
    if !rep.consistent(n) {
        failures.push(format!(
            "tail not monotone, Maslov index {} instead of {}, or tail graphs not transversal",
            rep.maslov_on_tail,
            2 * n
        ));
    }
    let result = serde_json::to_value(LimitSummary {
        final_dist: rep.final_dist(),
        report: &rep,
    })
    .map_err(|e| CliError::invalid("limit", &e.to_string()))?;
    Ok(Finished { result, failures })
}

fn axioms(
    cfg: &RunConfig,
    out: &mut OutputDir,
) -> Result<Finished<sl_maslov_core::maslov::AxiomReport>, CliError> {
    let rep = verify_index_axioms(cfg.seed, cfg.trials, &cfg.tolerances);
    out.write_csv(
        "axioms.csv",
        &header(&["axiom", "trials", "passed", "failures"]),
        rep.outcomes.iter().map(|o| {
            vec![
                o.axiom.to_string(),
                o.trials.to_string(),
                o.passed.to_string(),
                o.failures.len().to_string(),
            ]
        }),
    )?;
    let failures = rep
        .outcomes
        .iter()
        .filter(|o| !o.ok())
        .map(|o| {
            format!(
                "axiom {} failed {} of {} trials",
                o.axiom,
                o.trials - o.passed,
                o.trials
            )
        })
        .collect();
    Ok(Finished {
        result: rep,
        failures,
    })
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}
