//! Seeded random matrices used by the experiment drivers and tests.

use nalgebra::ComplexField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lagrangian::SymplecticMat;
use crate::linalg::{CMat, RMat, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| C64::new(normal(rng), normal(rng)))
}

pub fn real_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> RMat {
    RMat::from_fn(rows, cols, |_, _| normal(rng))
}

/// Haar-distributed unitary (QR of a complex Gaussian with phase correction).
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CMat {
    let qr = complex_gaussian(rng, m, m).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.modulus() > 0.0 {
            d / C64::new(d.modulus(), 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Hermitized standard normal matrix.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CMat {
    let g = complex_gaussian(rng, m, m);
    (&g + g.adjoint()).map(|z| z * 0.5)
}

pub fn real_symmetric<R: Rng + ?Sized>(rng: &mut R, m: usize, scale: f64) -> RMat {
    let g = real_gaussian(rng, m, m);
    (&g + g.transpose()) * (0.5 * scale)
}

/// Random real symplectic matrix of size `2n` built from shears and a
/// block-diagonal factor. `scale` controls how far it is from the identity.
pub fn symplectic<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> SymplecticMat {
    let s1 = real_symmetric(rng, n, scale);
    let s2 = real_symmetric(rng, n, scale);
    let g = RMat::identity(n, n) + real_gaussian(rng, n, n) * (0.5 * scale);
    let g = if g.determinant().abs() < 1e-3 {
        RMat::identity(n, n)
    } else {
        g
    };
    let ginv_t = g
        .clone()
        .try_inverse()
        .expect("checked determinant")
        .transpose();
    let mut upper = RMat::identity(2 * n, 2 * n);
    upper.view_mut((0, n), (n, n)).copy_from(&s1);
    let mut lower = RMat::identity(2 * n, 2 * n);
    lower.view_mut((n, 0), (n, n)).copy_from(&s2);
    let mut diag = RMat::zeros(2 * n, 2 * n);
    diag.view_mut((0, 0), (n, n)).copy_from(&g);
    diag.view_mut((n, n), (n, n)).copy_from(&ginv_t);
    SymplecticMat::new_unchecked(n, upper * lower * diag)
}

/// Random well-conditioned invertible complex matrix.
pub fn invertible<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CMat {
    loop {
        let g = complex_gaussian(rng, m, m) + CMat::identity(m, m) * C64::new(2.0, 0.0);
        let s = crate::linalg::singular_values(&g);
        if s[0] > 0.1 * s[m - 1] {
            return g;
        }
    }
}
