//! Case-specific Euler–Arnold (Lax) vector fields `ż = [z, Φ⁻¹z]` in adapted coordinates,
//! their two quadratic first integrals, and reconstruction of group-level geodesics.

use nalgebra::Matrix2;
use thiserror::Error;

use crate::algebra::{bracket_std, to_matrix2, AlgebraElement, AlgebraError, BasisId, Delta, Mat3, Scalar, SelfAdjointMap, Vec3};
use crate::normal_form::{Case, InverseParams, NormalForm, NormalFormError};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("Φ is singular")]
    Singular,
    #[error("element must be given in the standard basis")]
    NotStandard,
}

/// Polynomial coefficients of the δ = +1 field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coeffs<T: Scalar> {
    /// `(a z₂z₃, b z₁z₃, c z₁z₂)`, `c = a + b`.
    Case1 { a: T, b: T, c: T },
    /// `(b(z₂²+z₃²), z₁(a z₃ − b z₂), z₁(a z₂ + b z₃))`.
    Case2 { a: T, b: T },
    /// `(b z₃², −z₁(a z₂ + b z₃), a z₁z₃)`.
    Case3 { a: T, b: T },
    /// `ζν²·(z₃(z₁ − ζν z₃), z₂z₃ − z₁² + ζν z₁z₃, −z₃²)`.
    Case4 { zeta: T, nu: T },
}

impl<T: Scalar> Coeffs<T> {
    pub fn case(&self) -> Case {
        match self {
            Coeffs::Case1 { .. } => Case::Case1,
            Coeffs::Case2 { .. } => Case::Case2,
            Coeffs::Case3 { .. } => Case::Case3,
            Coeffs::Case4 { .. } => Case::Case4,
        }
    }

    pub fn from_inverse(inv: &InverseParams<T>) -> Self {
        match *inv {
            InverseParams::Case1 { nu: [n1, n2, n3] } => {
                let a = n2 - n3;
                let b = n3 - n1;
                Coeffs::Case1 { a, b, c: a + b }
            }
            InverseParams::Case2 { eta, gamma, zeta } => Coeffs::Case2 { a: gamma - eta, b: zeta },
            InverseParams::Case3 { eta, nu, zeta } => Coeffs::Case3 { a: eta - nu, b: zeta * nu * nu },
            InverseParams::Case4 { nu, zeta } => Coeffs::Case4 { zeta, nu },
        }
    }

    pub fn values(&self) -> Vec<T> {
        match *self {
            Coeffs::Case1 { a, b, c } => vec![a, b, c],
            Coeffs::Case2 { a, b } | Coeffs::Case3 { a, b } => vec![a, b],
            Coeffs::Case4 { zeta, nu } => vec![zeta, nu],
        }
    }

    pub fn names(&self) -> &'static [&'static str] {
        match self {
            Coeffs::Case1 { .. } => &["a", "b", "c"],
            Coeffs::Case2 { .. } | Coeffs::Case3 { .. } => &["a", "b"],
            Coeffs::Case4 { .. } => &["zeta", "nu"],
        }
    }

    fn eval(&self, z: &Vec3<T>) -> Vec3<T> {
        let (z1, z2, z3) = (z[0], z[1], z[2]);
        match *self {
            Coeffs::Case1 { a, b, c } => Vec3::new(a * z2 * z3, b * z1 * z3, c * z1 * z2),
            Coeffs::Case2 { a, b } => {
                Vec3::new(b * (z2 * z2 + z3 * z3), z1 * (a * z3 - b * z2), z1 * (a * z2 + b * z3))
            }
            Coeffs::Case3 { a, b } => Vec3::new(b * z3 * z3, -z1 * (a * z2 + b * z3), a * z1 * z3),
            Coeffs::Case4 { zeta, nu } => {
                let k = zeta * nu * nu;
                let zn = zeta * nu;
                Vec3::new(
                    k * z3 * (z1 - zn * z3),
                    k * (z2 * z3 - z1 * z1 + zn * z1 * z3),
                    -k * z3 * z3,
                )
            }
        }
    }

    fn jacobian(&self, z: &Vec3<T>) -> Mat3<T> {
        let (z1, z2, z3) = (z[0], z[1], z[2]);
        let o = T::zero();
        let two = T::lit(2.0);
        match *self {
            Coeffs::Case1 { a, b, c } => Mat3::new(o, a * z3, a * z2, b * z3, o, b * z1, c * z2, c * z1, o),
            Coeffs::Case2 { a, b } => Mat3::new(
                o,
                two * b * z2,
                two * b * z3,
                a * z3 - b * z2,
                -b * z1,
                a * z1,
                a * z2 + b * z3,
                a * z1,
                b * z1,
            ),
            Coeffs::Case3 { a, b } => {
                Mat3::new(o, o, two * b * z3, -(a * z2 + b * z3), -a * z1, -b * z1, a * z3, o, a * z1)
            }
            Coeffs::Case4 { zeta, nu } => {
                let k = zeta * nu * nu;
                let zn = zeta * nu;
                Mat3::new(
                    k * z3,
                    o,
                    k * (z1 - two * zn * z3),
                    k * (zn * z3 - two * z1),
                    k * z3,
                    k * (z2 + zn * z1),
                    o,
                    o,
                    -two * k * z3,
                )
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstIntegrals<T: Scalar> {
    /// `B(z, z)`.
    pub i1: T,
    /// `B(z, Φ⁻¹z)`.
    pub i2: T,
}

/// Euler–Arnold field in adapted coordinates. δ enters as a global sign.
#[derive(Clone, Debug, PartialEq)]
pub struct EAField<T: Scalar> {
    pub coeffs: Coeffs<T>,
    pub delta: Delta,
    pub inverse: InverseParams<T>,
    gram: Mat3<T>,
    /// Gram matrix of `(z, w) ↦ B(z, Φ⁻¹w)`; symmetric because Φ⁻¹ is B-self-adjoint.
    i2_form: Mat3<T>,
}

impl<T: Scalar> EAField<T> {
    pub fn from_inverse(inverse: InverseParams<T>, delta: Delta) -> Self {
        let case = inverse.case();
        let gram: Mat3<T> = if case.pseudo_orthonormal() {
            crate::algebra::pseudo_orthonormal_gram()
        } else {
            crate::algebra::orthonormal_gram()
        };
        let i2_form = gram * inverse.matrix();
        Self { coeffs: Coeffs::from_inverse(&inverse), delta, inverse, gram, i2_form }
    }

    pub fn case(&self) -> Case {
        self.coeffs.case()
    }

    pub fn gram(&self) -> &Mat3<T> {
        &self.gram
    }

    pub fn i2_form(&self) -> &Mat3<T> {
        &self.i2_form
    }

    pub fn eval(&self, z: &Vec3<T>) -> Vec3<T> {
        let v = self.coeffs.eval(z);
        match self.delta {
            Delta::Plus => v,
            Delta::Minus => -v,
        }
    }

    pub fn jacobian(&self, z: &Vec3<T>) -> Mat3<T> {
        let j = self.coeffs.jacobian(z);
        match self.delta {
            Delta::Plus => j,
            Delta::Minus => -j,
        }
    }

    pub fn first_integrals(&self, z: &Vec3<T>) -> FirstIntegrals<T> {
        FirstIntegrals { i1: z.dot(&(self.gram * z)), i2: z.dot(&(self.i2_form * z)) }
    }

    /// Gradients `(∇I1, ∇I2)`.
    pub fn integral_gradients(&self, z: &Vec3<T>) -> (Vec3<T>, Vec3<T>) {
        let two = T::lit(2.0);
        ((self.gram * z) * two, (self.i2_form * z) * two)
    }

    /// Same field with time reversed (δ flipped).
    pub fn reversed(&self) -> Self {
        Self { delta: self.delta.flip(), ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().iter().all(|c| c.modulus() == 0.0)
            || matches!(self.coeffs, Coeffs::Case4 { zeta, nu } if (zeta * nu).modulus() == 0.0)
    }
}

pub fn build_field<T: Scalar>(nf: &NormalForm<T>) -> Result<EAField<T>, FieldError> {
    Ok(EAField::from_inverse(nf.inverse_params()?, nf.delta()))
}

/// `[z, Φ⁻¹z]` for `z` in the standard basis.
pub fn lax_rhs<T: Scalar>(phi: &SelfAdjointMap<T>, z: &AlgebraElement<T>) -> Result<AlgebraElement<T>, FieldError> {
    if z.basis != BasisId::Standard {
        return Err(FieldError::NotStandard);
    }
    let inv = phi.matrix().try_inverse().ok_or(FieldError::Singular)?;
    if inv.iter().any(|x| !x.modulus().is_finite()) {
        return Err(FieldError::Singular);
    }
    let w = inv * z.coords;
    Ok(AlgebraElement::standard(bracket_std(&z.coords, &w)))
}

#[derive(Clone, Debug)]
pub struct GroupCurve {
    pub t: Vec<f64>,
    pub gamma: Vec<Matrix2<f64>>,
    /// Set when the input curve stopped before the requested span (e.g. blow-up).
    pub truncated: bool,
}

/// Solve `γ̇ = γ·x(t)`, `γ(0) = id` for a curve sampled at uniform step `h`
/// (coordinates in the standard basis). Classical RK4 with midpoint values from
/// cubic interpolation of the samples; `γ` is rescaled to unit determinant after each step.
pub fn group_reconstruct(x: &[Vec3<f64>], h: f64, truncated: bool) -> GroupCurve {
    let n = x.len();
    let mut gamma = Vec::with_capacity(n);
    let mut t = Vec::with_capacity(n);
    if n == 0 {
        return GroupCurve { t, gamma, truncated };
    }
    let xs: Vec<Matrix2<f64>> = x.iter().map(to_matrix2).collect();
    let mut g = Matrix2::identity();
    gamma.push(g);
    t.push(0.0);
    let mid = |i: usize| -> Matrix2<f64> {
        if n == 2 {
            return (xs[0] + xs[1]) * 0.5;
        }
        if n == 3 {
            // quadratic through the three samples
            return if i == 0 {
                (xs[0] * 3.0 + xs[1] * 6.0 - xs[2]) / 8.0
            } else {
                (xs[2] * 3.0 + xs[1] * 6.0 - xs[0]) / 8.0
            };
        }
        if i == 0 {
            (xs[0] * 5.0 + xs[1] * 15.0 - xs[2] * 5.0 + xs[3]) / 16.0
        } else if i + 2 >= n {
            (xs[n - 1] * 5.0 + xs[n - 2] * 15.0 - xs[n - 3] * 5.0 + xs[n - 4]) / 16.0
        } else {
            (-xs[i - 1] + xs[i] * 9.0 + xs[i + 1] * 9.0 - xs[i + 2]) / 16.0
        }
    };
    for i in 0..n - 1 {
        let (x0, xm, x1) = (xs[i], mid(i), xs[i + 1]);
        let k1 = g * x0;
        let k2 = (g + k1 * (h / 2.0)) * xm;
        let k3 = (g + k2 * (h / 2.0)) * xm;
        let k4 = (g + k3 * h) * x1;
        g += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let d = g.determinant();
        if d > 0.0 {
            g /= d.sqrt();
        }
        gamma.push(g);
        t.push((i + 1) as f64 * h);
    }
    GroupCurve { t, gamma, truncated }
}
