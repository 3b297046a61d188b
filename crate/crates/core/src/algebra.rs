//! The Lie algebra sl(2) over the reals or the complex numbers.
//!
//! Coordinates refer to the standard basis
//! `e1 = [[1/2,0],[0,-1/2]]`, `e2 = [[0,1/2],[1/2,0]]`, `e3 = [[0,1/2],[-1/2,0]]`
//! or to an adapted (pseudo-)orthonormal basis whose structure constants are fixed
//! by its kind. The Killing form is `B(x,y) = 2 Tr(xy)`, with Gram matrix
//! `diag(1,1,-1)` in the standard basis.

use std::fmt::Debug;

use nalgebra::{ComplexField, Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use thiserror::Error;

pub type Vec3<T> = Vector3<T>;
pub type Mat3<T> = Matrix3<T>;

/// Default absolute tolerance for basis and self-adjointness tests on unit-scaled input.
pub const BASIS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Real,
    Complex,
}

/// Ground field of a computation. Implemented for `f64` and `Complex64` only; there is no
/// implicit promotion between the two.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Debug + Send + Sync {
    const MODE: Mode;
    /// Real mode keeps the real part.
    fn from_c64(z: Complex64) -> Self;
    fn to_c64(self) -> Complex64;
    fn re(self) -> f64 {
        self.to_c64().re
    }
    fn im(self) -> f64 {
        self.to_c64().im
    }
    fn lit(x: f64) -> Self {
        Self::from_real(x)
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Real;
    fn from_c64(z: Complex64) -> Self {
        z.re
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    const MODE: Mode = Mode::Complex;
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn to_c64(self) -> Complex64 {
        self
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error("operands refer to different bases ({0:?} vs {1:?})")]
    BasisMismatch(BasisId, BasisId),
    #[error("no bracket table for basis {0:?}")]
    UnknownStructure(BasisId),
    #[error("basis vectors are linearly dependent (|det| = {0:e})")]
    Degenerate(f64),
    #[error("map is not B-self-adjoint or not invertible")]
    NotSelfAdjoint,
    #[error("gram matrix must be symmetric and non-degenerate")]
    BadGram,
}

/// The sign in `[v1,v2] = δ v3` (orthonormal) or `[v2,v3] = δ v1` (pseudo-orthonormal).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Delta {
    Plus,
    Minus,
}

impl Delta {
    pub fn sign(self) -> f64 {
        match self {
            Delta::Plus => 1.0,
            Delta::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Delta::Plus => Delta::Minus,
            Delta::Minus => Delta::Plus,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s < 0.0 {
            Delta::Minus
        } else {
            Delta::Plus
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// `B(v1,v1) = B(v2,v2) = -B(v3,v3) = 1`, all other pairings zero.
    Orthonormal(Delta),
    /// `B(v1,v1) = B(v2,v3) = 1`, `B(v1,vk) = B(vk,vk) = 0` for `k = 2,3`.
    PseudoOrthonormal(Delta),
    Neither,
}

impl BasisKind {
    pub fn delta(self) -> Option<Delta> {
        match self {
            BasisKind::Orthonormal(d) | BasisKind::PseudoOrthonormal(d) => Some(d),
            BasisKind::Neither => None,
        }
    }

    pub fn with_delta(self, d: Delta) -> Self {
        match self {
            BasisKind::Orthonormal(_) => BasisKind::Orthonormal(d),
            BasisKind::PseudoOrthonormal(_) => BasisKind::PseudoOrthonormal(d),
            BasisKind::Neither => BasisKind::Neither,
        }
    }

    /// Gram matrix of the Killing form in a basis of this kind.
    pub fn gram<T: Scalar>(self) -> Option<Mat3<T>> {
        match self {
            BasisKind::Orthonormal(_) => Some(orthonormal_gram()),
            BasisKind::PseudoOrthonormal(_) => Some(pseudo_orthonormal_gram()),
            BasisKind::Neither => None,
        }
    }

    /// Bracket of coordinate vectors using this kind's structure constants.
    pub fn bracket<T: Scalar>(self, z: &Vec3<T>, w: &Vec3<T>) -> Option<Vec3<T>> {
        match self {
            BasisKind::Orthonormal(d) => {
                let s = T::lit(d.sign());
                Some(
                    Vec3::new(
                        z[2] * w[1] - z[1] * w[2],
                        z[0] * w[2] - z[2] * w[0],
                        z[0] * w[1] - z[1] * w[0],
                    ) * s,
                )
            }
            BasisKind::PseudoOrthonormal(d) => {
                let s = T::lit(d.sign());
                Some(
                    Vec3::new(
                        z[1] * w[2] - z[2] * w[1],
                        z[0] * w[1] - z[1] * w[0],
                        z[2] * w[0] - z[0] * w[2],
                    ) * s,
                )
            }
            BasisKind::Neither => None,
        }
    }
}

pub fn orthonormal_gram<T: Scalar>() -> Mat3<T> {
    Mat3::from_diagonal(&Vec3::new(T::one(), T::one(), -T::one()))
}

pub fn pseudo_orthonormal_gram<T: Scalar>() -> Mat3<T> {
    let (o, l) = (T::zero(), T::one());
    Mat3::new(l, o, o, o, o, l, o, l, o)
}

/// Which basis a coordinate vector is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisId {
    Standard,
    Adapted(BasisKind),
}

impl BasisId {
    pub fn kind(self) -> BasisKind {
        match self {
            BasisId::Standard => BasisKind::Orthonormal(Delta::Plus),
            BasisId::Adapted(k) => k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraElement<T: Scalar> {
    pub coords: Vec3<T>,
    pub basis: BasisId,
}

impl<T: Scalar> AlgebraElement<T> {
    pub fn standard(coords: Vec3<T>) -> Self {
        Self { coords, basis: BasisId::Standard }
    }

    pub fn new(coords: Vec3<T>, basis: BasisId) -> Self {
        Self { coords, basis }
    }

    /// The i-th standard basis vector, `i` in 0..3.
    pub fn e(i: usize) -> Self {
        let mut c = Vec3::zeros();
        c[i] = T::one();
        Self::standard(c)
    }
}

fn same_basis<T: Scalar>(x: &AlgebraElement<T>, y: &AlgebraElement<T>) -> Result<BasisKind, AlgebraError> {
    if x.basis != y.basis {
        return Err(AlgebraError::BasisMismatch(x.basis, y.basis));
    }
    match x.basis.kind() {
        BasisKind::Neither => Err(AlgebraError::UnknownStructure(x.basis)),
        k => Ok(k),
    }
}

pub fn bracket<T: Scalar>(x: &AlgebraElement<T>, y: &AlgebraElement<T>) -> Result<AlgebraElement<T>, AlgebraError> {
    let kind = same_basis(x, y)?;
    let c = kind.bracket(&x.coords, &y.coords).expect("structure known");
    Ok(AlgebraElement::new(c, x.basis))
}

pub fn killing<T: Scalar>(x: &AlgebraElement<T>, y: &AlgebraElement<T>) -> Result<T, AlgebraError> {
    let kind = same_basis(x, y)?;
    let g: Mat3<T> = kind.gram().expect("structure known");
    Ok(x.coords.dot(&(g * y.coords)))
}

/// Killing form in standard coordinates.
pub fn killing_std<T: Scalar>(z: &Vec3<T>, w: &Vec3<T>) -> T {
    z[0] * w[0] + z[1] * w[1] - z[2] * w[2]
}

/// Bracket in standard coordinates.
pub fn bracket_std<T: Scalar>(z: &Vec3<T>, w: &Vec3<T>) -> Vec3<T> {
    BasisKind::Orthonormal(Delta::Plus).bracket(z, w).expect("standard table")
}

/// `z1 e1 + z2 e2 + z3 e3` as a traceless 2×2 matrix.
pub fn to_matrix2<T: Scalar>(z: &Vec3<T>) -> Matrix2<T> {
    let h = T::lit(0.5);
    Matrix2::new(z[0] * h, (z[1] + z[2]) * h, (z[1] - z[2]) * h, -z[0] * h)
}

/// Inverse of [`to_matrix2`] on traceless matrices.
pub fn from_matrix2<T: Scalar>(m: &Matrix2<T>) -> Vec3<T> {
    Vec3::new(m[(0, 0)] - m[(1, 1)], m[(0, 1)] + m[(1, 0)], m[(0, 1)] - m[(1, 0)])
}

/// `2 Tr(xy)` evaluated on the matrix realisations.
pub fn killing_trace<T: Scalar>(z: &Vec3<T>, w: &Vec3<T>) -> T {
    (to_matrix2(z) * to_matrix2(w)).trace() * T::lit(2.0)
}

/// Matrix of `ad_z` in standard coordinates.
pub fn ad_matrix<T: Scalar>(z: &Vec3<T>) -> Mat3<T> {
    let mut m = Mat3::zeros();
    for j in 0..3 {
        let mut e = Vec3::zeros();
        e[j] = T::one();
        m.set_column(j, &bracket_std(z, &e));
    }
    m
}

/// `½ Tr(ad_x ∘ ad_y)`.
pub fn killing_ad<T: Scalar>(z: &Vec3<T>, w: &Vec3<T>) -> T {
    (ad_matrix(z) * ad_matrix(w)).trace() * T::lit(0.5)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BilinearForm<T: Scalar> {
    gram: Mat3<T>,
}

impl<T: Scalar> BilinearForm<T> {
    pub fn new(gram: Mat3<T>) -> Result<Self, AlgebraError> {
        let asym = (gram - gram.transpose()).iter().map(|x| x.modulus()).fold(0.0, f64::max);
        if asym > BASIS_TOL || gram.determinant().modulus() <= BASIS_TOL {
            return Err(AlgebraError::BadGram);
        }
        Ok(Self { gram })
    }

    pub fn killing() -> Self {
        Self { gram: orthonormal_gram() }
    }

    pub fn gram(&self) -> &Mat3<T> {
        &self.gram
    }

    pub fn eval(&self, z: &Vec3<T>, w: &Vec3<T>) -> T {
        z.dot(&(self.gram * w))
    }
}

fn max_abs<T: Scalar>(m: &Mat3<T>) -> f64 {
    m.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

/// True iff `‖ΦᵀG − GΦ‖∞ ≤ tol` and `|det Φ| > tol`.
pub fn check_self_adjoint<T: Scalar>(m: &Mat3<T>, tol: f64) -> bool {
    let g: Mat3<T> = orthonormal_gram();
    let r = m.transpose() * g - g * m;
    max_abs(&r) <= tol && m.determinant().modulus() > tol
}

/// A B-self-adjoint isomorphism in standard coordinates, defining `q(x,y) = B(Φx,y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfAdjointMap<T: Scalar> {
    matrix: Mat3<T>,
}

impl<T: Scalar> SelfAdjointMap<T> {
    /// Validates with a tolerance relative to the matrix scale.
    pub fn new(matrix: Mat3<T>) -> Result<Self, AlgebraError> {
        let scale = max_abs(&matrix).max(1.0);
        let g: Mat3<T> = orthonormal_gram();
        let r = max_abs(&(matrix.transpose() * g - g * matrix));
        let det = matrix.determinant().modulus();
        if !matrix.iter().all(|x| x.modulus().is_finite()) || r > BASIS_TOL * scale {
            return Err(AlgebraError::NotSelfAdjoint);
        }
        if det <= BASIS_TOL * scale.powi(3) {
            return Err(AlgebraError::Degenerate(det));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self { matrix: Mat3::identity() }
    }

    pub fn matrix(&self) -> &Mat3<T> {
        &self.matrix
    }

    pub fn inverse(&self) -> Mat3<T> {
        self.matrix.try_inverse().expect("validated as invertible")
    }

    /// `q(x,y) = B(Φx,y)`.
    pub fn metric(&self, z: &Vec3<T>, w: &Vec3<T>) -> T {
        killing_std(&(self.matrix * z), w)
    }
}

/// Classify a triple given in a common basis. The kind is recognised up to reordering;
/// δ refers to the remaining vectors taken in their given order.
pub fn classify_basis<T: Scalar>(v: &[AlgebraElement<T>; 3], tol: f64) -> Result<BasisKind, AlgebraError> {
    same_basis(&v[0], &v[1])?;
    same_basis(&v[1], &v[2])?;
    let frame = Mat3::from_columns(&[v[0].coords, v[1].coords, v[2].coords]);
    let norms: f64 = v.iter().map(|x| x.coords.norm()).product();
    let det = frame.determinant().modulus();
    if !(det > tol * norms.max(f64::MIN_POSITIVE)) {
        return Err(AlgebraError::Degenerate(det));
    }
    let mut g = Mat3::<T>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            g[(i, j)] = killing(&v[i], &v[j])?;
        }
    }
    let near = |x: T, y: f64| (x - T::lit(y)).modulus() <= tol;
    let others = |k: usize| -> (usize, usize) {
        match k {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    };
    for k in 0..3 {
        let (i, j) = others(k);
        let on = near(g[(k, k)], -1.0)
            && near(g[(i, i)], 1.0)
            && near(g[(j, j)], 1.0)
            && near(g[(i, j)], 0.0)
            && near(g[(i, k)], 0.0)
            && near(g[(j, k)], 0.0);
        if on {
            // [vi,vj] = δ vk, and B(vk,vk) = -1.
            let d = -killing(&bracket(&v[i], &v[j])?, &v[k])?;
            return Ok(BasisKind::Orthonormal(Delta::from_sign(d.re())));
        }
    }
    for k in 0..3 {
        let (i, j) = others(k);
        let pon = near(g[(k, k)], 1.0)
            && near(g[(i, i)], 0.0)
            && near(g[(j, j)], 0.0)
            && near(g[(i, j)], 1.0)
            && near(g[(k, i)], 0.0)
            && near(g[(k, j)], 0.0);
        if pon {
            // [vi,vj] = δ vk, and B(vk,vk) = 1.
            let d = killing(&bracket(&v[i], &v[j])?, &v[k])?;
            return Ok(BasisKind::PseudoOrthonormal(Delta::from_sign(d.re())));
        }
    }
    Ok(BasisKind::Neither)
}

/// Classify the columns of a change-of-basis matrix given in standard coordinates.
pub fn classify_frame<T: Scalar>(p: &Mat3<T>, tol: f64) -> Result<BasisKind, AlgebraError> {
    let v = [0, 1, 2].map(|i| AlgebraElement::standard(p.column(i).into_owned()));
    classify_basis(&v, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(a: f64, b: f64, c: f64) -> Vec3<f64> {
        Vec3::new(a, b, c)
    }

    #[test]
    fn standard_brackets() {
        let e = |i| AlgebraElement::<f64>::e(i);
        assert_eq!(bracket(&e(0), &e(1)).unwrap().coords, v(0.0, 0.0, 1.0));
        assert_eq!(bracket(&e(0), &e(2)).unwrap().coords, v(0.0, 1.0, 0.0));
        assert_eq!(bracket(&e(1), &e(2)).unwrap().coords, v(-1.0, 0.0, 0.0));
        let x = AlgebraElement::standard(v(0.3, -1.2, 2.5));
        assert_eq!(bracket(&x, &x).unwrap().coords, v(0.0, 0.0, 0.0));
    }

    #[test]
    fn brackets_match_matrix_commutator() {
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let (a, b) = (AlgebraElement::<f64>::e(i), AlgebraElement::<f64>::e(j));
            let (ma, mb) = (to_matrix2(&a.coords), to_matrix2(&b.coords));
            let comm = from_matrix2(&(ma * mb - mb * ma));
            assert!((comm - bracket(&a, &b).unwrap().coords).norm() < 1e-15);
        }
    }

    #[test]
    fn killing_values() {
        let e = |i| AlgebraElement::<f64>::e(i);
        assert_eq!(killing(&e(0), &e(0)).unwrap(), 1.0);
        assert_eq!(killing(&e(2), &e(2)).unwrap(), -1.0);
        assert_eq!(killing(&e(0), &e(1)).unwrap(), 0.0);
        assert_eq!(killing_trace(&e(2).coords, &e(2).coords), -1.0);
    }

    #[test]
    fn mismatched_bases_rejected() {
        let x = AlgebraElement::<f64>::e(0);
        let y = AlgebraElement::new(v(1.0, 0.0, 0.0), BasisId::Adapted(BasisKind::PseudoOrthonormal(Delta::Plus)));
        assert!(matches!(bracket(&x, &y), Err(AlgebraError::BasisMismatch(..))));
        let z = AlgebraElement::new(v(1.0, 0.0, 0.0), BasisId::Adapted(BasisKind::Neither));
        assert!(matches!(killing(&z, &z), Err(AlgebraError::UnknownStructure(_))));
    }

    #[test]
    fn self_adjoint_checks() {
        assert!(check_self_adjoint(&Mat3::<f64>::identity(), 1e-9));
        assert!(check_self_adjoint(&Mat3::from_diagonal(&v(1.0, 2.0, 3.0)), 1e-9));
        let mut m = Mat3::<f64>::identity();
        m[(0, 1)] = 1.0;
        assert!(!check_self_adjoint(&m, 1e-9));
        assert!(!check_self_adjoint(&Mat3::from_diagonal(&v(1.0, 0.0, 3.0)), 1e-9));
        assert!(SelfAdjointMap::new(m).is_err());
    }

    #[test]
    fn classify_examples() {
        let e = |i| AlgebraElement::<f64>::e(i);
        assert_eq!(classify_basis(&[e(0), e(1), e(2)], BASIS_TOL).unwrap(), BasisKind::Orthonormal(Delta::Plus));
        let r = 0.5f64.sqrt();
        let u = [e(0), AlgebraElement::standard(v(0.0, r, r)), AlgebraElement::standard(v(0.0, r, -r))];
        assert_eq!(classify_basis(&u, BASIS_TOL).unwrap(), BasisKind::PseudoOrthonormal(Delta::Plus));
        let w = [e(0), AlgebraElement::standard(v(0.0, 2.0, 0.0)), e(2)];
        assert_eq!(classify_basis(&w, BASIS_TOL).unwrap(), BasisKind::Neither);
        let d = [e(0), e(1), AlgebraElement::standard(v(1.0, 1.0, 0.0))];
        assert!(matches!(classify_basis(&d, BASIS_TOL), Err(AlgebraError::Degenerate(_))));
    }

    #[test]
    fn classify_detects_negative_delta_and_reordering() {
        let e = |i| AlgebraElement::<f64>::e(i);
        let flipped = [AlgebraElement::standard(v(-1.0, 0.0, 0.0)), e(1), e(2)];
        assert_eq!(classify_basis(&flipped, BASIS_TOL).unwrap(), BasisKind::Orthonormal(Delta::Minus));
        let reordered = [e(2), e(0), e(1)];
        assert!(matches!(classify_basis(&reordered, BASIS_TOL).unwrap(), BasisKind::Orthonormal(_)));
    }

    #[test]
    fn complex_scalars_share_formulas() {
        let i = Complex64::new(0.0, 1.0);
        let z = Vec3::new(i, Complex64::new(1.0, 0.0), Complex64::new(2.0, -1.0));
        let w = Vec3::new(Complex64::new(0.5, 0.5), i, Complex64::new(-1.0, 0.0));
        assert!((killing_trace(&z, &w) - killing_std(&z, &w)).norm() < 1e-14);
        assert!((killing_ad(&z, &w) - killing_std(&z, &w)).norm() < 1e-14);
    }
}
