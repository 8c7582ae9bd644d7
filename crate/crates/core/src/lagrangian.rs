//! Lagrangian subspaces of `(C^{2m}, omega_m)` and their unitary picture.
//!
//! A frame `Z = [X; Y]` (`2m x m`) spans a Lagrangian subspace when it has
//! full rank and `X* Y` is Hermitian. The map
//! `U(L) = (X + iY)(X - iY)^{-1}` identifies the Lagrangian Grassmannian
//! with `U(m)`; it does not depend on the frame chosen for `L`.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, cidentity, CMat, RMat, C64, I};
use crate::Tolerances;

/// Full-rank isotropic `2m x m` frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianFrame {
    m: usize,
    z: CMat,
}

impl LagrangianFrame {
    /// Wraps a frame without validation. Callers must guarantee the
    /// invariants; every constructor in this crate does.
    pub fn new_unchecked(z: CMat) -> Self {
        let m = z.ncols();
        debug_assert_eq!(z.nrows(), 2 * m);
        LagrangianFrame { m, z }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn z(&self) -> &CMat {
        &self.z
    }

    pub fn x(&self) -> CMat {
        self.z.rows(0, self.m).into_owned()
    }

    pub fn y(&self) -> CMat {
        self.z.rows(self.m, self.m).into_owned()
    }

    /// Same subspace with an orthonormal frame.
    pub fn orthonormalized(&self) -> LagrangianFrame {
        LagrangianFrame {
            m: self.m,
            z: linalg::orthonormalize(&self.z),
        }
    }

    /// Frame `Z G` for an invertible `m x m` matrix `G`; same subspace.
    pub fn times(&self, g: &CMat) -> LagrangianFrame {
        LagrangianFrame {
            m: self.m,
            z: &self.z * g,
        }
    }

    /// Image under a real `2m x 2m` symplectic matrix.
    pub fn transformed(&self, s: &SymplecticMat) -> LagrangianFrame {
        LagrangianFrame {
            m: self.m,
            z: linalg::to_complex(s.matrix()) * &self.z,
        }
    }

    /// Direct sum in `C^{2m1} + C^{2m2}`, coordinates `(x1, x2, y1, y2)`.
    pub fn direct_sum(&self, other: &LagrangianFrame) -> LagrangianFrame {
        let (m1, m2) = (self.m, other.m);
        let m = m1 + m2;
        let mut z = CMat::zeros(2 * m, m);
        z.view_mut((0, 0), (m1, m1)).copy_from(&self.z.rows(0, m1));
        z.view_mut((m1, m1), (m2, m2))
            .copy_from(&other.z.rows(0, m2));
        z.view_mut((m, 0), (m1, m1)).copy_from(&self.z.rows(m1, m1));
        z.view_mut((m + m1, m1), (m2, m2))
            .copy_from(&other.z.rows(m2, m2));
        LagrangianFrame { m, z }
    }
}

/// Checks the frame invariants and wraps `z`.
pub fn validate_frame(z: &CMat, m: usize, tol: &Tolerances) -> Result<LagrangianFrame> {
    if z.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: z.ncols(),
        });
    }
    if z.nrows() != 2 * m {
        return Err(Error::DimensionMismatch {
            expected: 2 * m,
            found: z.nrows(),
        });
    }
    if !z.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::RankDeficient { sigma: f64::NAN });
    }
    let s = linalg::singular_values(z);
    let smax = s.last().copied().unwrap_or(0.0);
    let rel = if smax > 0.0 { s[0] / smax } else { 0.0 };
    if rel <= tol.rank {
        return Err(Error::RankDeficient { sigma: rel });
    }
    let q = linalg::orthonormalize(z);
    let x = q.rows(0, m);
    let y = q.rows(m, m);
    let xy = x.adjoint() * y;
    let defect = (&xy - xy.adjoint()).norm();
    if defect > tol.unit {
        return Err(Error::NotIsotropic { defect });
    }
    Ok(LagrangianFrame { m, z: z.clone() })
}

/// `U(L)` as an `m x m` unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryRep {
    u: CMat,
}

impl UnitaryRep {
    pub fn new(u: CMat, tol: &Tolerances) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::DimensionMismatch {
                expected: u.nrows(),
                found: u.ncols(),
            });
        }
        let defect = linalg::unitary_defect(&u);
        if !(defect <= tol.unit) {
            return Err(Error::NotUnitary { defect });
        }
        Ok(UnitaryRep { u })
    }

    pub fn new_unchecked(u: CMat) -> Self {
        UnitaryRep { u }
    }

    pub fn m(&self) -> usize {
        self.u.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.u
    }

    pub fn into_matrix(self) -> CMat {
        self.u
    }

    /// Eigenangles in `[0, 2 pi)`, sorted.
    pub fn angles(&self) -> Vec<f64> {
        linalg::eigenangles(&self.u)
    }
}

pub fn unitary_of(f: &LagrangianFrame) -> UnitaryRep {
    let q = linalg::orthonormalize(&f.z);
    let m = f.m;
    let x = q.rows(0, m).into_owned();
    let y = q.rows(m, m).into_owned();
    let num = &x + &y * I;
    let den = &x - &y * I;
    // U = num den^{-1}, i.e. den^T U^T = num^T.
    let ut = linalg::solve(&den.transpose(), &num.transpose())
        .expect("X - iY is invertible for Lagrangian frames");
    UnitaryRep { u: ut.transpose() }
}

pub fn lagrangian_from_unitary(u: &UnitaryRep) -> LagrangianFrame {
    let m = u.m();
    let id = cidentity(m);
    let x = &u.u + &id;
    let y = (&u.u - &id) * (-I);
    let mut z = CMat::zeros(2 * m, m);
    z.view_mut((0, 0), (m, m)).copy_from(&x);
    z.view_mut((m, 0), (m, m)).copy_from(&y);
    LagrangianFrame { m, z }
}

fn check_same_m(a: &LagrangianFrame, b: &LagrangianFrame) -> Result<()> {
    if a.m != b.m {
        return Err(Error::DimensionMismatch {
            expected: a.m,
            found: b.m,
        });
    }
    Ok(())
}

/// `||U(L1) - U(L2)||` in the operator norm.
pub fn dist(l1: &LagrangianFrame, l2: &LagrangianFrame) -> Result<f64> {
    check_same_m(l1, l2)?;
    Ok(linalg::spectral_norm(
        &(unitary_of(l1).u - unitary_of(l2).u),
    ))
}

/// Outcome of a thresholded intersection computation.
#[derive(Clone, Debug, PartialEq)]
pub struct Intersection {
    pub dim: usize,
    /// Largest singular value counted as zero.
    pub largest_accepted: Option<f64>,
    /// Smallest singular value counted as nonzero.
    pub smallest_rejected: Option<f64>,
}

/// `ker(U2^{-1} U1 - I) = ker(U1 - U2)`; using the difference keeps the
/// computation exactly symmetric in the two arguments.
pub fn intersection(
    l1: &LagrangianFrame,
    l2: &LagrangianFrame,
    tau_rank: f64,
) -> Result<Intersection> {
    check_same_m(l1, l2)?;
    let s = linalg::singular_values(&(unitary_of(l1).u - unitary_of(l2).u));
    let dim = s.iter().filter(|&&x| x < tau_rank).count();
    Ok(Intersection {
        dim,
        largest_accepted: if dim > 0 { Some(s[dim - 1]) } else { None },
        smallest_rejected: s.get(dim).copied(),
    })
}

pub fn intersection_dim(
    l1: &LagrangianFrame,
    l2: &LagrangianFrame,
    tau_rank: f64,
) -> Result<usize> {
    Ok(intersection(l1, l2, tau_rank)?.dim)
}

/// Basis of `L1 ∩ L2` as columns of a `2m x dim` matrix.
pub fn intersection_basis(
    l1: &LagrangianFrame,
    l2: &LagrangianFrame,
    tau_rank: f64,
) -> Result<CMat> {
    check_same_m(l1, l2)?;
    let u1 = unitary_of(l1).u;
    let u2 = unitary_of(l2).u;
    let ks = linalg::kernel_split(&(&u1 - &u2), tau_rank);
    let frame = lagrangian_from_unitary(&UnitaryRep { u: u1 });
    Ok(frame.z * ks.kernel)
}

/// `S (y0, x0, yT, xT) = (-y0, yT, x0, xT)`; `S` is an involution.
pub fn apply_s(v: &[C64]) -> Vec<C64> {
    let n = v.len() / 4;
    let (y0, rest) = v.split_at(n);
    let (x0, rest) = rest.split_at(n);
    let (yt, xt) = rest.split_at(n);
    y0.iter()
        .map(|&c| -c)
        .chain(yt.iter().copied())
        .chain(x0.iter().copied())
        .chain(xt.iter().copied())
        .collect()
}

/// Maps boundary data `z(0) = (y(0), x(0))`, `z(T) = (y(T), x(T))` to the
/// standard basis `(-y(0), y(T), x(0), x(T))`.
pub fn boundary_basis_change(z0: &[C64], zt: &[C64]) -> Vec<C64> {
    let v: Vec<C64> = z0.iter().chain(zt.iter()).copied().collect();
    apply_s(&v)
}

/// `S` as a real `4n x 4n` matrix.
pub fn s_matrix(n: usize) -> RMat {
    let mut s = RMat::zeros(4 * n, 4 * n);
    for i in 0..n {
        s[(i, i)] = -1.0;
        s[(n + i, 2 * n + i)] = 1.0;
        s[(2 * n + i, n + i)] = 1.0;
        s[(3 * n + i, 3 * n + i)] = 1.0;
    }
    s
}

/// Frame given in the `(z(0), z(T))` coordinates moved to the standard basis.
pub fn frame_from_pre_s(z_pre: &CMat) -> CMat {
    let n = z_pre.nrows() / 4;
    linalg::to_complex(&s_matrix(n)) * z_pre
}

pub fn dirichlet(m: usize) -> LagrangianFrame {
    let mut z = CMat::zeros(2 * m, m);
    z.view_mut((0, 0), (m, m)).fill_with_identity();
    LagrangianFrame { m, z }
}

pub fn neumann(m: usize) -> LagrangianFrame {
    let mut z = CMat::zeros(2 * m, m);
    z.view_mut((m, 0), (m, m)).fill_with_identity();
    LagrangianFrame { m, z }
}

/// `J_n = [[0, -I], [I, 0]]`.
pub fn j_matrix(n: usize) -> RMat {
    let mut j = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

/// Real `2n x 2n` matrix `M` with `M^T J M = J`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMat {
    n: usize,
    m: RMat,
}

impl SymplecticMat {
    pub fn new(n: usize, m: RMat, tol: &Tolerances) -> Result<Self> {
        if m.nrows() != 2 * n || m.ncols() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: m.nrows(),
            });
        }
        let s = SymplecticMat { n, m };
        let defect = s.defect();
        if !(defect <= tol.symp) {
            return Err(Error::NotSymplectic { defect });
        }
        Ok(s)
    }

    pub fn new_unchecked(n: usize, m: RMat) -> Self {
        SymplecticMat { n, m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &RMat {
        &self.m
    }

    /// `||M^T J M - J|| / max(1, ||M||^2)` (Frobenius norms).
    pub fn defect(&self) -> f64 {
        let j = j_matrix(self.n);
        let scale = self.m.norm_squared().max(1.0);
        (self.m.transpose() * &j * &self.m - j).norm() / scale
    }
}

/// Frame `[-I, 0; D1, D2; 0, I; D3, D4]` of `Gr(M) = {(v, Mv)}` in the
/// standard basis.
pub fn graph_lagrangian(m: &SymplecticMat) -> LagrangianFrame {
    let n = m.n;
    let d = &m.m;
    let mut z = RMat::zeros(4 * n, 2 * n);
    for i in 0..n {
        z[(i, i)] = -1.0;
        z[(2 * n + i, n + i)] = 1.0;
    }
    z.view_mut((n, 0), (n, 2 * n)).copy_from(&d.rows(0, n));
    z.view_mut((3 * n, 0), (n, 2 * n)).copy_from(&d.rows(n, n));
    LagrangianFrame {
        m: 2 * n,
        z: linalg::to_complex(&z),
    }
}

/// Layer number `r = dim(L ∩ L_D)`, Hermitian `A` on the complement and the
/// unitary basis `[W | V]` with `W` spanning `L ∩ L_D` in the `x`-free
/// coordinates. The frame is `[B (I_r + A); B (0_r + I_k0)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalForm {
    pub r: usize,
    pub a: CMat,
    pub basis: CMat,
}

impl CanonicalForm {
    pub fn m(&self) -> usize {
        self.basis.nrows()
    }

    pub fn k0(&self) -> usize {
        self.m() - self.r
    }

    /// Columns of the basis spanning `V(L)`.
    pub fn v_basis(&self) -> CMat {
        self.basis.columns(self.r, self.k0()).into_owned()
    }

    pub fn with_a(&self, a: CMat) -> CanonicalForm {
        CanonicalForm {
            r: self.r,
            a,
            basis: self.basis.clone(),
        }
    }

    /// `U = B (I_r + (A + i)(A - i)^{-1}) B*`, computed without forming the
    /// frame so that large `A` stays well conditioned.
    pub fn unitary(&self) -> CMat {
        let k0 = self.k0();
        let id = cidentity(k0);
        let num = &self.a + &id * I;
        let den = &self.a - &id * I;
        let ua = linalg::solve(&den.transpose(), &num.transpose())
            .expect("A - iI is invertible for Hermitian A")
            .transpose();
        let mut d = cidentity(self.m());
        d.view_mut((self.r, self.r), (k0, k0)).copy_from(&ua);
        &self.basis * d * self.basis.adjoint()
    }
}

pub fn canonical_form(l: &LagrangianFrame, tol: &Tolerances) -> Result<CanonicalForm> {
    let m = l.m;
    let u = unitary_of(l).u;
    let ks = linalg::kernel_split(&(&u - cidentity(m)), tol.rank);
    if let Some(&sigma) = ks
        .sigmas
        .iter()
        .find(|&&s| s >= 0.1 * tol.rank && s <= 10.0 * tol.rank)
    {
        return Err(Error::RankAmbiguous {
            sigma,
            tol: tol.rank,
        });
    }
    let r = ks.kernel.ncols();
    let k0 = m - r;
    let mut basis = CMat::zeros(m, m);
    basis.view_mut((0, 0), (m, r)).copy_from(&ks.kernel);
    basis.view_mut((0, r), (m, k0)).copy_from(&ks.complement);
    let v = ks.complement;
    let ua = v.adjoint() * &u * &v;
    let id = cidentity(k0);
    let a = linalg::solve(&(&ua - &id), &(&ua + &id)).expect("1 is not an eigenvalue of U_A") * I;
    Ok(CanonicalForm {
        r,
        a: linalg::hermitize(&a),
        basis,
    })
}

pub fn frame_from_canonical(c: &CanonicalForm, tol: &Tolerances) -> Result<LagrangianFrame> {
    let k0 = c.k0();
    if c.a.nrows() != k0 || c.a.ncols() != k0 {
        return Err(Error::DimensionMismatch {
            expected: k0,
            found: c.a.nrows(),
        });
    }
    let defect = linalg::hermitian_defect(&c.a);
    if !(defect <= tol.unit * c.a.norm().max(1.0)) {
        return Err(Error::NotHermitian { defect });
    }
    let m = c.m();
    let mut top = cidentity(m);
    top.view_mut((c.r, c.r), (k0, k0)).copy_from(&c.a);
    let bottom = CMat::from_diagonal(&DVector::from_fn(m, |i, _| {
        if i < c.r {
            C64::new(0.0, 0.0)
        } else {
            C64::new(1.0, 0.0)
        }
    }));
    let mut z = CMat::zeros(2 * m, m);
    z.view_mut((0, 0), (m, m)).copy_from(&(&c.basis * top));
    z.view_mut((m, 0), (m, m)).copy_from(&(&c.basis * bottom));
    Ok(LagrangianFrame { m, z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::ComplexField;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn diag(entries: &[C64]) -> CMat {
        CMat::from_diagonal(&DVector::from_row_slice(entries))
    }

    #[test]
    fn validate_examples() {
        let mut z = CMat::zeros(4, 2);
        z[(0, 0)] = c(1.0);
        z[(1, 1)] = c(1.0);
        assert!(validate_frame(&z, 2, &tol()).is_ok());
        assert!(validate_frame(&CMat::from_element(2, 1, c(1.0)), 1, &tol()).is_ok());
        let bad = CMat::from_row_slice(
            4,
            2,
            &[
                c(1.0),
                c(0.0),
                c(0.0),
                c(1.0),
                c(0.0),
                c(1.0),
                c(-1.0),
                c(0.0),
            ],
        );
        assert!(matches!(
            validate_frame(&bad, 2, &tol()),
            Err(Error::NotIsotropic { .. })
        ));
        let flat = CMat::from_row_slice(
            4,
            2,
            &[
                c(1.0),
                c(2.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
            ],
        );
        assert!(matches!(
            validate_frame(&flat, 2, &tol()),
            Err(Error::RankDeficient { .. })
        ));
        assert!(matches!(
            validate_frame(&z, 3, &tol()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unitary_examples() {
        assert!((unitary_of(&dirichlet(2)).u - cidentity(2)).norm() < 1e-15);
        assert!((unitary_of(&neumann(2)).u + cidentity(2)).norm() < 1e-15);
        let line = LagrangianFrame::new_unchecked(CMat::from_element(2, 1, c(1.0)));
        assert!((unitary_of(&line).u[(0, 0)] - I).modulus() < 1e-15);
    }

    #[test]
    fn from_unitary_examples() {
        let d = lagrangian_from_unitary(&UnitaryRep::new(cidentity(2), &tol()).unwrap());
        assert_eq!(intersection_dim(&d, &dirichlet(2), 1e-8).unwrap(), 2);
        let nm = lagrangian_from_unitary(&UnitaryRep::new(-cidentity(2), &tol()).unwrap());
        assert_eq!(intersection_dim(&nm, &neumann(2), 1e-8).unwrap(), 2);
        let u = UnitaryRep::new(diag(&[I, c(1.0)]), &tol()).unwrap();
        assert_eq!(
            intersection_dim(&lagrangian_from_unitary(&u), &dirichlet(2), 1e-8).unwrap(),
            1
        );
        let not_unitary = UnitaryRep::new(diag(&[c(2.0)]), &tol());
        assert!(matches!(not_unitary, Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn dist_examples() {
        assert_eq!(dist(&dirichlet(2), &dirichlet(2)).unwrap(), 0.0);
        assert!((dist(&dirichlet(2), &neumann(2)).unwrap() - 2.0).abs() < 1e-14);
        let line = LagrangianFrame::new_unchecked(CMat::from_element(2, 1, c(1.0)));
        assert!((dist(&line, &dirichlet(1)).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            dist(&line, &dirichlet(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn s_is_an_involution() {
        let v: Vec<C64> = (0..8).map(|k| C64::new(k as f64, -(k as f64))).collect();
        assert_eq!(apply_s(&apply_s(&v)), v);
        let zero = vec![c(0.0); 4];
        assert_eq!(boundary_basis_change(&zero[..2], &zero[2..]), zero);
        // Unit vectors follow the columns of S.
        let s = s_matrix(1);
        for k in 0..4 {
            let mut e = vec![c(0.0); 4];
            e[k] = c(1.0);
            let img = apply_s(&e);
            for i in 0..4 {
                assert_eq!(img[i].re, s[(i, k)]);
            }
        }
        let s2 = s_matrix(2);
        assert_eq!(&s2 * &s2, RMat::identity(8, 8));
    }

    #[test]
    fn graph_examples() {
        let t = tol();
        let id = SymplecticMat::new(1, RMat::identity(2, 2), &t).unwrap();
        assert_eq!(
            intersection_dim(&graph_lagrangian(&id), &dirichlet(2), 1e-8).unwrap(),
            1
        );
        let minus = SymplecticMat::new(1, -RMat::identity(2, 2), &t).unwrap();
        assert_eq!(
            intersection_dim(&graph_lagrangian(&minus), &dirichlet(2), 1e-8).unwrap(),
            1
        );
        let id2 = SymplecticMat::new(2, RMat::identity(4, 4), &t).unwrap();
        assert_eq!(
            intersection_dim(&graph_lagrangian(&id2), &dirichlet(4), 1e-8).unwrap(),
            2
        );
        let not = SymplecticMat::new(1, RMat::identity(2, 2) * 2.0, &t);
        assert!(matches!(not, Err(Error::NotSymplectic { .. })));
    }

    #[test]
    fn canonical_examples() {
        let t = tol();
        let cd = canonical_form(&dirichlet(2), &t).unwrap();
        assert_eq!((cd.r, cd.k0()), (2, 0));
        let cn = canonical_form(&neumann(2), &t).unwrap();
        assert_eq!(cn.r, 0);
        assert!(cn.a.norm() < 1e-14);
        let u = UnitaryRep::new(diag(&[I, c(1.0)]), &t).unwrap();
        let cf = canonical_form(&lagrangian_from_unitary(&u), &t).unwrap();
        assert_eq!((cf.r, cf.k0()), (1, 1));
        assert!((cf.a[(0, 0)] - c(1.0)).modulus() < 1e-12);
        for form in [cd, cn, cf] {
            let back = frame_from_canonical(&form, &t).unwrap();
            let orig = lagrangian_from_unitary(&UnitaryRep::new_unchecked(form.unitary()));
            assert!(dist(&back, &orig).unwrap() < 1e-12);
            assert_eq!(
                intersection_dim(&back, &dirichlet(2), 1e-8).unwrap(),
                form.r
            );
        }
    }

    #[test]
    fn frame_from_canonical_rejects_non_hermitian() {
        let form = CanonicalForm {
            r: 0,
            a: CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]),
            basis: cidentity(2),
        };
        assert!(matches!(
            frame_from_canonical(&form, &tol()),
            Err(Error::NotHermitian { .. })
        ));
        let empty = CanonicalForm {
            r: 2,
            a: CMat::zeros(0, 0),
            basis: cidentity(2),
        };
        let d = frame_from_canonical(&empty, &tol()).unwrap();
        assert_eq!(dist(&d, &dirichlet(2)).unwrap(), 0.0);
    }

    #[test]
    fn intersection_basis_lies_in_both() {
        let t = tol();
        let u = UnitaryRep::new(diag(&[I, c(1.0)]), &t).unwrap();
        let l = lagrangian_from_unitary(&u);
        let b = intersection_basis(&l, &dirichlet(2), 1e-8).unwrap();
        assert_eq!(b.ncols(), 1);
        // Dirichlet means the lower half vanishes.
        assert!(b.rows(2, 2).norm() < 1e-14 * b.norm());
    }
}
