//! Dense complex linear algebra helpers on top of nalgebra.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use nalgebra::{Complex, ComplexField, DMatrix, RealField, SymmetricEigen};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn cidentity(m: usize) -> CMat {
    CMat::identity(m, m)
}

/// Singular values sorted ascending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(f64::total_cmp);
    s
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn real_spectral_norm(m: &RMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Orthonormal basis of the column span of a full-rank tall matrix.
pub fn orthonormalize(z: &CMat) -> CMat {
    z.clone().qr().q()
}

pub fn unitary_defect(u: &CMat) -> f64 {
    let m = u.nrows();
    (u.adjoint() * u - cidentity(m)).norm()
}

pub fn hermitian_defect(a: &CMat) -> f64 {
    (a - a.adjoint()).norm()
}

pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).map(|z| z * 0.5)
}

pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_pi(x: f64) -> f64 {
    let mut y = x % TAU;
    if y <= -PI {
        y += TAU;
    } else if y > PI {
        y -= TAU;
    }
    y
}

/// Wraps an angle into `[0, 2 pi)`.
pub fn wrap_2pi(x: f64) -> f64 {
    let mut y = x % TAU;
    if y < 0.0 {
        y += TAU;
    }
    if y >= TAU {
        y -= TAU;
    }
    y
}

/// Eigenangles in `[0, 2 pi)` of a unitary matrix, sorted ascending.
///
/// Uses a rotated Cayley transform so that the work is done by a Hermitian
/// eigensolver: for `E = e^{i a} W` with `-1` away from the spectrum,
/// `K = i (I + E)^{-1} (I - E)` is Hermitian with eigenvalues `tan(phi / 2)`.
pub fn eigenangles(w: &CMat) -> Vec<f64> {
    let m = w.nrows();
    if m == 0 {
        return Vec::new();
    }
    let id = cidentity(m);
    let candidates = 2 * m + 1;
    let mut best: Option<(f64, f64, CMat)> = None;
    for k in 0..candidates {
        let alpha = 0.1 + TAU * k as f64 / candidates as f64;
        let e = w * C64::new(alpha.cos(), alpha.sin());
        let Some(x) = solve(&(&id + &e), &(&id - &e)) else {
            continue;
        };
        let kmat = x * I;
        let size = kmat.iter().fold(0.0f64, |acc, z| acc.max(z.modulus()));
        if !size.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| size < b.0) {
            best = Some((size, alpha, kmat));
        }
    }
    let (_, alpha, kmat) = best.expect("unitary matrix has a regular Cayley rotation");
    let eig = SymmetricEigen::new(hermitize(&kmat));
    let mut out: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&kappa| wrap_2pi(2.0 * kappa.atan() - alpha))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Right singular vectors of a square matrix split by a threshold: the
/// kernel basis (singular values below `tol`), its orthogonal complement,
/// and all singular values in the order of the returned columns.
pub struct KernelSplit {
    pub kernel: CMat,
    pub complement: CMat,
    pub sigmas: Vec<f64>,
}

pub fn kernel_split(m: &CMat, tol: f64) -> KernelSplit {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v = svd.v_t.expect("requested right vectors").adjoint();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let sigmas: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let r = sigmas.iter().filter(|&&s| s < tol).count();
    let cols: Vec<_> = order.iter().map(|&i| v.column(i).into_owned()).collect();
    let stack = |range: core::ops::Range<usize>| {
        let mut out = CMat::zeros(n, range.len());
        for (c, i) in range.enumerate() {
            out.set_column(c, &cols[i]);
        }
        out
    };
    KernelSplit {
        kernel: stack(0..r),
        complement: stack(r..n),
        sigmas,
    }
}

/// Minimum-cost perfect matching on a square cost matrix given row-major.
/// Returns `assign[row] = column`.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    // Potentials formulation, 1-based with a virtual column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Matrix exponential of `i t H` for Hermitian `H`.
pub fn expi_hermitian(h: &CMat, t: f64) -> CMat {
    let eig = SymmetricEigen::new(hermitize(h));
    let q = &eig.eigenvectors;
    let d = CMat::from_diagonal(&eig.eigenvalues.map(|l| {
        let a = l * t;
        C64::new(a.cos(), a.sin())
    }));
    q * d * q.adjoint()
}

pub fn pi() -> f64 {
    <f64 as RealField>::pi()
}
