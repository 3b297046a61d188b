//! Reduction of a B-self-adjoint map to one of four normal forms in an adapted
//! orthonormal or pseudo-orthonormal basis.
//!
//! | case | template | basis |
//! |------|----------|-------|
//! | 1 | `diag(λ1,λ2,λ3)` | orthonormal |
//! | 2 | `[[μ,0,0],[0,α,β],[0,-β,α]]`, β > 0 | orthonormal |
//! | 3 | `[[μ,0,0],[0,λ,ζ],[0,0,λ]]`, ζ ≠ 0 | pseudo-orthonormal |
//! | 4 | `[[λ,0,ζ],[ζ,λ,0],[0,0,λ]]`, ζ > 0 (real) | pseudo-orthonormal |
//!
//! Adapted bases are normalised to δ = +1. Case 2 only occurs in real mode.

use std::fmt;

use nalgebra::{ComplexField, Matrix3};
use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{
    classify_frame, killing_std, AlgebraError, BasisKind, Delta, Mat3, Mode, Scalar, SelfAdjointMap, Vec3,
    BASIS_TOL,
};

#[derive(Debug, Error)]
pub enum NormalFormError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("eigenvalue clustering is inconsistent with the rank test: {0}")]
    Ambiguous(String),
    #[error("map has a zero eigenvalue")]
    Singular,
    #[error("adapted basis construction failed: {0}")]
    Construction(String),
}

#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions {
    /// Computed roots closer than `cluster_rel·‖Φ‖` are merged.
    pub cluster_rel: f64,
    /// Singular values below `rank_rel·‖Φ‖` count as zero.
    pub rank_rel: f64,
    /// Relative threshold on the depressed-cubic invariants used to detect repeated roots.
    pub multiplicity_rel: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { cluster_rel: 1e-7, rank_rel: 1e-8, multiplicity_rel: 1e-9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigen {
    pub value: Complex64,
    pub alg_mult: usize,
    pub geo_mult: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigen>,
    pub tol_cluster: f64,
}

impl Spectrum {
    /// Σ (alg − geo): 0 diagonalisable, 1 one 2×2 Jordan block, 2 one 3×3 block.
    pub fn defect(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.alg_mult.saturating_sub(e.geo_mult)).sum()
    }

    pub fn has_nonreal(&self) -> bool {
        self.eigenvalues.iter().any(|e| e.value.im != 0.0)
    }

    pub fn max_geo_mult(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.geo_mult).max().unwrap_or(0)
    }
}

fn frob<T: Scalar>(m: &Mat3<T>) -> f64 {
    m.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

/// Roots of `t³ + p t + q` with multiplicities.
fn depressed_roots(p: Complex64, q: Complex64, scale: f64, real: bool, tau: f64) -> Vec<(Complex64, usize)> {
    let zero = Complex64::new(0.0, 0.0);
    if p.norm() <= tau * scale * scale && q.norm() <= tau * scale.powi(3) {
        return vec![(zero, 3)];
    }
    let disc = -4.0 * p * p * p - 27.0 * q * q;
    let size = 4.0 * p.norm().powi(3) + 27.0 * q.norm_sqr();
    if disc.norm() <= tau * size {
        let r = -1.5 * q / p;
        let (r, s) = if real { (Complex64::new(r.re, 0.0), Complex64::new(-2.0 * r.re, 0.0)) } else { (r, -2.0 * r) };
        return vec![(r, 2), (s, 1)];
    }
    let mut roots: Vec<Complex64> = if real && disc.re > 0.0 {
        let (p, q) = (p.re, q.re);
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (1.5 * q / p * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let th = arg.acos() / 3.0;
        (0..3)
            .map(|k| Complex64::new(m * (th - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos(), 0.0))
            .collect()
    } else if real {
        let (p, q) = (p.re, q.re);
        let sd = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let a = -q.signum() * (q.abs() / 2.0 + sd).cbrt();
        let b = if a != 0.0 { -p / (3.0 * a) } else { 0.0 };
        let t = a + b;
        let w = (0.75 * t * t + p).max(0.0).sqrt();
        vec![Complex64::new(t, 0.0), Complex64::new(-t / 2.0, w), Complex64::new(-t / 2.0, -w)]
    } else {
        let sd = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let (c1, c2) = (-q / 2.0 + sd, -q / 2.0 - sd);
        let c = if c1.norm() >= c2.norm() { c1 } else { c2 };
        let u = c.powf(1.0 / 3.0);
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        (0..3)
            .map(|k| {
                let uk = u * w.powi(k);
                uk - p / (3.0 * uk)
            })
            .collect()
    };
    for t in roots.iter_mut() {
        for _ in 0..3 {
            let d = 3.0 * *t * *t + p;
            if d.norm() == 0.0 {
                break;
            }
            let step = (*t * *t * *t + p * *t + q) / d;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            *t -= step;
        }
    }
    if real && disc.re < 0.0 {
        // keep the pair exactly conjugate
        let c = roots[1];
        roots[1] = Complex64::new(c.re, c.im.abs());
        roots[2] = roots[1].conj();
    }
    roots.into_iter().map(|r| (r, 1)).collect()
}

/// Right singular vectors of `m`, ordered by increasing singular value.
fn right_singular<T: Scalar>(m: &Mat3<T>) -> ([f64; 3], [Vec3<T>; 3]) {
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap());
    let s = idx.map(|i| svd.singular_values[i]);
    let v = idx.map(|i| vt.row(i).adjoint());
    (s, v)
}

/// Spectrum with multiplicities. Eigenvalues are returned as complex numbers in both modes.
pub fn spectrum3<T: Scalar>(phi: &Mat3<T>, opts: &SpectrumOptions) -> Spectrum {
    let c: Matrix3<Complex64> = phi.map(|x| x.to_c64());
    let scale = frob(phi).max(f64::MIN_POSITIVE);
    let m = c.trace() / 3.0;
    let a = c - Matrix3::identity() * m;
    let minors = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] + a[(0, 0)] * a[(2, 2)] - a[(0, 2)] * a[(2, 0)]
        + a[(1, 1)] * a[(2, 2)]
        - a[(1, 2)] * a[(2, 1)];
    let p = minors;
    let q = -a.determinant();
    let real = T::MODE == Mode::Real;
    let raw = depressed_roots(p, q, scale, real, opts.multiplicity_rel);

    let tol = opts.cluster_rel * scale;
    let mut merged: Vec<(Complex64, usize)> = Vec::new();
    for (r, k) in raw {
        let v = r + m;
        if let Some(e) = merged.iter_mut().find(|(w, _)| (*w - v).norm() <= tol) {
            let tot = e.1 + k;
            e.0 = (e.0 * e.1 as f64 + v * k as f64) / tot as f64;
            e.1 = tot;
        } else {
            merged.push((v, k));
        }
    }
    merged.sort_by(|x, y| x.0.re.partial_cmp(&y.0.re).unwrap().then(x.0.im.partial_cmp(&y.0.im).unwrap()));
    let rank_tol = opts.rank_rel * scale;
    let eigenvalues = merged
        .into_iter()
        .map(|(value, alg_mult)| {
            let shifted = c - Matrix3::identity() * value;
            let (s, _) = right_singular(&shifted);
            let geo = s.iter().filter(|&&x| x <= rank_tol).count();
            Eigen { value, alg_mult, geo_mult: geo.min(alg_mult) }
        })
        .collect();
    Spectrum { eigenvalues, tol_cluster: tol }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Case {
    Case1,
    Case2,
    Case3,
    Case4,
}

impl Case {
    pub fn number(self) -> u8 {
        match self {
            Case::Case1 => 1,
            Case::Case2 => 2,
            Case::Case3 => 3,
            Case::Case4 => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Case::Case1),
            2 => Some(Case::Case2),
            3 => Some(Case::Case3),
            4 => Some(Case::Case4),
            _ => None,
        }
    }

    pub fn pseudo_orthonormal(self) -> bool {
        matches!(self, Case::Case3 | Case::Case4)
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Params<T: Scalar> {
    Case1 { lambda: [T; 3] },
    Case2 { mu: T, alpha: T, beta: T },
    Case3 { mu: T, lambda: T, zeta: T },
    Case4 { lambda: T, zeta: T },
}

impl<T: Scalar> Params<T> {
    pub fn case(&self) -> Case {
        match self {
            Params::Case1 { .. } => Case::Case1,
            Params::Case2 { .. } => Case::Case2,
            Params::Case3 { .. } => Case::Case3,
            Params::Case4 { .. } => Case::Case4,
        }
    }

    /// Matrix of Φ in the adapted basis.
    pub fn template(&self) -> Mat3<T> {
        let o = T::zero();
        match *self {
            Params::Case1 { lambda: [l1, l2, l3] } => Mat3::new(l1, o, o, o, l2, o, o, o, l3),
            Params::Case2 { mu, alpha, beta } => Mat3::new(mu, o, o, o, alpha, beta, o, -beta, alpha),
            Params::Case3 { mu, lambda, zeta } => Mat3::new(mu, o, o, o, lambda, zeta, o, o, lambda),
            Params::Case4 { lambda, zeta } => Mat3::new(lambda, o, zeta, zeta, lambda, o, o, o, lambda),
        }
    }

    pub fn basis_kind(&self, delta: Delta) -> BasisKind {
        if self.case().pseudo_orthonormal() {
            BasisKind::PseudoOrthonormal(delta)
        } else {
            BasisKind::Orthonormal(delta)
        }
    }

    /// Parameter values in declaration order.
    pub fn values(&self) -> Vec<T> {
        match *self {
            Params::Case1 { lambda } => lambda.to_vec(),
            Params::Case2 { mu, alpha, beta } => vec![mu, alpha, beta],
            Params::Case3 { mu, lambda, zeta } => vec![mu, lambda, zeta],
            Params::Case4 { lambda, zeta } => vec![lambda, zeta],
        }
    }

    pub fn names(&self) -> &'static [&'static str] {
        match self {
            Params::Case1 { .. } => &["lambda1", "lambda2", "lambda3"],
            Params::Case2 { .. } => &["mu", "alpha", "beta"],
            Params::Case3 { .. } => &["mu", "lambda", "zeta"],
            Params::Case4 { .. } => &["lambda", "zeta"],
        }
    }
}

/// Parameters of Φ⁻¹ in the adapted basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InverseParams<T: Scalar> {
    Case1 { nu: [T; 3] },
    Case2 { eta: T, gamma: T, zeta: T },
    Case3 { eta: T, nu: T, zeta: T },
    Case4 { nu: T, zeta: T },
}

impl<T: Scalar> InverseParams<T> {
    pub fn case(&self) -> Case {
        match self {
            InverseParams::Case1 { .. } => Case::Case1,
            InverseParams::Case2 { .. } => Case::Case2,
            InverseParams::Case3 { .. } => Case::Case3,
            InverseParams::Case4 { .. } => Case::Case4,
        }
    }

    /// Matrix of Φ⁻¹ in the adapted basis.
    pub fn matrix(&self) -> Mat3<T> {
        let o = T::zero();
        match *self {
            InverseParams::Case1 { nu: [n1, n2, n3] } => Mat3::new(n1, o, o, o, n2, o, o, o, n3),
            InverseParams::Case2 { eta, gamma, zeta } => Mat3::new(eta, o, o, o, gamma, zeta, o, -zeta, gamma),
            InverseParams::Case3 { eta, nu, zeta } => Mat3::new(eta, o, o, o, nu, -zeta * nu * nu, o, o, nu),
            InverseParams::Case4 { nu, zeta } => {
                let zn2 = zeta * nu * nu;
                Mat3::new(nu, o, -zn2, -zn2, nu, zeta * zn2 * nu, o, o, nu)
            }
        }
    }

    pub fn values(&self) -> Vec<T> {
        match *self {
            InverseParams::Case1 { nu } => nu.to_vec(),
            InverseParams::Case2 { eta, gamma, zeta } => vec![eta, gamma, zeta],
            InverseParams::Case3 { eta, nu, zeta } => vec![eta, nu, zeta],
            InverseParams::Case4 { nu, zeta } => vec![nu, zeta],
        }
    }

    pub fn names(&self) -> &'static [&'static str] {
        match self {
            InverseParams::Case1 { .. } => &["nu1", "nu2", "nu3"],
            InverseParams::Case2 { .. } => &["eta", "gamma", "zeta"],
            InverseParams::Case3 { .. } => &["eta", "nu", "zeta"],
            InverseParams::Case4 { .. } => &["nu", "zeta"],
        }
    }
}

fn recip<T: Scalar>(x: T) -> Result<T, NormalFormError> {
    if x.modulus() == 0.0 || !x.modulus().is_finite() {
        return Err(NormalFormError::Singular);
    }
    let r = T::one() / x;
    if r.modulus().is_finite() {
        Ok(r)
    } else {
        Err(NormalFormError::Singular)
    }
}

pub fn invert_params<T: Scalar>(params: &Params<T>) -> Result<InverseParams<T>, NormalFormError> {
    Ok(match *params {
        Params::Case1 { lambda } => {
            InverseParams::Case1 { nu: [recip(lambda[0])?, recip(lambda[1])?, recip(lambda[2])?] }
        }
        Params::Case2 { mu, alpha, beta } => {
            let n = recip(alpha * alpha + beta * beta)?;
            InverseParams::Case2 { eta: recip(mu)?, gamma: alpha * n, zeta: -beta * n }
        }
        Params::Case3 { mu, lambda, zeta } => InverseParams::Case3 { eta: recip(mu)?, nu: recip(lambda)?, zeta },
        Params::Case4 { lambda, zeta } => InverseParams::Case4 { nu: recip(lambda)?, zeta },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm<T: Scalar> {
    pub params: Params<T>,
    /// Columns are the adapted basis vectors in standard coordinates.
    pub p: Mat3<T>,
    pub basis_kind: BasisKind,
    pub spectrum: Spectrum,
}

impl<T: Scalar> NormalForm<T> {
    /// Assemble a normal form from known parts (no reduction performed).
    pub fn from_parts(params: Params<T>, p: Mat3<T>, delta: Delta) -> Self {
        let spectrum = spectrum3(&params.template(), &SpectrumOptions::default());
        Self { basis_kind: params.basis_kind(delta), params, p, spectrum }
    }

    /// Normal form given directly in its own adapted basis: `P = I` for orthonormal cases, and
    /// `(e₁, (e₂+e₃)/√2, (e₂−e₃)/√2)` up to orientation for pseudo-orthonormal ones.
    pub fn canonical(params: Params<T>) -> Self {
        let mut p = Mat3::identity();
        if params.case().pseudo_orthonormal() {
            let (o, l, h) = (T::zero(), T::one(), T::lit(std::f64::consts::FRAC_1_SQRT_2));
            p = Mat3::new(l, o, o, o, h, h, o, h, -h);
        }
        let delta = fix_delta(&mut p, params.case()).expect("canonical frames are recognised");
        Self::from_parts(params, p, delta)
    }

    pub fn case(&self) -> Case {
        self.params.case()
    }

    pub fn mode(&self) -> Mode {
        T::MODE
    }

    pub fn delta(&self) -> Delta {
        self.basis_kind.delta().unwrap_or(Delta::Plus)
    }

    pub fn template(&self) -> Mat3<T> {
        self.params.template()
    }

    /// `P·template·P⁻¹`, the map in standard coordinates.
    pub fn reconstruct(&self) -> Mat3<T> {
        self.p * self.template() * self.p.try_inverse().expect("adapted basis is invertible")
    }

    /// Gram matrix of the adapted basis.
    pub fn gram(&self) -> Mat3<T> {
        let g: Mat3<T> = crate::algebra::orthonormal_gram();
        self.p.transpose() * g * self.p
    }

    pub fn inverse_params(&self) -> Result<InverseParams<T>, NormalFormError> {
        invert_params(&self.params)
    }

    /// Standard coordinates to adapted coordinates.
    pub fn to_adapted(&self, z: &Vec3<T>) -> Vec3<T> {
        self.p.try_inverse().expect("adapted basis is invertible") * z
    }

    pub fn to_standard(&self, z: &Vec3<T>) -> Vec3<T> {
        self.p * z
    }
}

fn lift<T: Scalar>(z: Complex64) -> T {
    T::from_c64(z)
}

fn b<T: Scalar>(x: &Vec3<T>, y: &Vec3<T>) -> T {
    killing_std(x, y)
}

/// Make the largest component have non-negative real part.
fn canonical_sign<T: Scalar>(v: Vec3<T>) -> Vec3<T> {
    let mut best = 0;
    for i in 1..3 {
        if v[i].modulus() > v[best].modulus() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let c = v[best].to_c64();
    if c.re < 0.0 || (c.re == 0.0 && c.im < 0.0) {
        -v
    } else {
        v
    }
}

fn null_space<T: Scalar>(m: &Mat3<T>, dim: usize) -> Vec<Vec3<T>> {
    let (_, v) = right_singular(m);
    v[..dim].to_vec()
}

struct Normalized<T: Scalar> {
    v: Vec3<T>,
    /// `B(w,w)/‖w‖²` before normalisation.
    ratio: Complex64,
    eig: Complex64,
}

/// B-orthonormalise a spanning set of a non-degenerate subspace, with pivoting.
fn b_orthonormalize<T: Scalar>(vs: Vec<Vec3<T>>, eig: Complex64) -> Result<Vec<Normalized<T>>, NormalFormError> {
    let mut out: Vec<Normalized<T>> = Vec::new();
    let mut rem = vs;
    while !rem.is_empty() {
        for w in rem.iter_mut() {
            for u in &out {
                let s = b(&u.v, &u.v);
                *w -= u.v * (b(w, &u.v) / s);
            }
        }
        let score = |w: &Vec3<T>| b(w, w).modulus() / w.norm_squared().max(f64::MIN_POSITIVE);
        let (idx, best) = rem
            .iter()
            .enumerate()
            .map(|(i, w)| (i, score(w)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let w = if best > BASIS_TOL {
            rem.remove(idx)
        } else if rem.len() >= 2 {
            let s = rem[0] + rem[1];
            if score(&s) <= BASIS_TOL {
                return Err(NormalFormError::Construction("eigenspace is isotropic".into()));
            }
            rem.remove(0);
            s
        } else {
            return Err(NormalFormError::Construction("isotropic eigenvector".into()));
        };
        let bw = b(&w, &w);
        let ratio = bw.to_c64() / w.norm_squared();
        let v = match T::MODE {
            Mode::Real => w * T::lit(1.0 / bw.re().abs().sqrt()),
            Mode::Complex => w * (T::one() / bw.sqrt()),
        };
        out.push(Normalized { v: canonical_sign(v), ratio, eig });
    }
    Ok(out)
}

fn fix_delta<T: Scalar>(p: &mut Mat3<T>, case: Case) -> Result<Delta, NormalFormError> {
    let kind = classify_frame(p, 1e-6)?;
    let d = kind.delta().ok_or_else(|| NormalFormError::Construction(format!("adapted basis not recognised: {kind:?}")))?;
    if d == Delta::Minus {
        if case == Case::Case4 {
            *p = -*p;
        } else {
            let c = -p.column(0).into_owned();
            p.set_column(0, &c);
        }
    }
    Ok(Delta::Plus)
}

fn case1<T: Scalar>(phi: &Mat3<T>, spec: &Spectrum) -> Result<(Params<T>, Mat3<T>), NormalFormError> {
    let mut all: Vec<Normalized<T>> = Vec::new();
    for e in &spec.eigenvalues {
        let shifted = phi - Mat3::identity() * lift::<T>(e.value);
        let basis = null_space(&shifted, e.alg_mult);
        all.extend(b_orthonormalize(basis, e.value)?);
    }
    // The most negative vector plays the role of v3.
    let (k, _) = all
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, n)| if n.ratio.re < acc.1 { (i, n.ratio.re) } else { acc });
    let third = all.remove(k);
    if T::MODE == Mode::Real && (third.ratio.re >= 0.0 || all.iter().any(|n| n.ratio.re <= 0.0)) {
        return Err(NormalFormError::Construction("eigenbasis does not have signature (2,1)".into()));
    }
    let v3 = match T::MODE {
        Mode::Real => third.v,
        Mode::Complex => third.v * T::from_c64(Complex64::new(0.0, 1.0)),
    };
    all.sort_by(|x, y| x.eig.re.partial_cmp(&y.eig.re).unwrap().then(x.eig.im.partial_cmp(&y.eig.im).unwrap()));
    let p = Mat3::from_columns(&[all[0].v, all[1].v, v3]);
    let lambda = [lift(all[0].eig), lift(all[1].eig), lift(third.eig)];
    Ok((Params::Case1 { lambda }, p))
}

fn case2<T: Scalar>(phi: &Mat3<T>, spec: &Spectrum) -> Result<(Params<T>, Mat3<T>), NormalFormError> {
    let mu = spec
        .eigenvalues
        .iter()
        .find(|e| e.value.im == 0.0)
        .ok_or_else(|| NormalFormError::Construction("no real eigenvalue".into()))?
        .value;
    let lam = spec
        .eigenvalues
        .iter()
        .find(|e| e.value.im > 0.0)
        .ok_or_else(|| NormalFormError::Construction("no complex pair".into()))?
        .value;
    let shifted = phi - Mat3::identity() * lift::<T>(mu);
    let w = null_space(&shifted, 1)[0];
    let bw = b(&w, &w).re();
    if bw <= 0.0 {
        return Err(NormalFormError::Construction("real eigenvector is not spacelike".into()));
    }
    let v1 = canonical_sign(w * T::lit(1.0 / bw.sqrt()));
    let c: Matrix3<Complex64> = phi.map(|x| x.to_c64());
    let big = null_space(&(c - Matrix3::identity() * lam), 1)[0];
    let h = killing_std(&big, &big);
    let big = big * (Complex64::new(2.0, 0.0) / h).sqrt();
    let mut v2: Vec3<T> = big.map(|x| T::lit(x.re));
    let mut v3: Vec3<T> = big.map(|x| T::lit(x.im));
    if canonical_sign(v2) != v2 {
        v2 = -v2;
        v3 = -v3;
    }
    let p = Mat3::from_columns(&[v1, v2, v3]);
    Ok((Params::Case2 { mu: lift(mu), alpha: T::lit(lam.re), beta: T::lit(lam.im) }, p))
}

fn case3<T: Scalar>(phi: &Mat3<T>, spec: &Spectrum) -> Result<(Params<T>, Mat3<T>), NormalFormError> {
    let jordan = spec
        .eigenvalues
        .iter()
        .find(|e| e.alg_mult > e.geo_mult)
        .ok_or_else(|| NormalFormError::Construction("no Jordan block".into()))?;
    let lam: T = lift(jordan.value);
    let n = phi - Mat3::identity() * lam;
    let (mu, v1, v3) = if jordan.alg_mult == 2 {
        let mu = spec.eigenvalues.iter().find(|e| e.alg_mult == 1).expect("simple eigenvalue").value;
        let v1 = null_space(&(phi - Mat3::identity() * lift::<T>(mu)), 1)[0];
        let gen = null_space(&(n * n), 2);
        let v3 = if (n * gen[0]).norm() >= (n * gen[1]).norm() { gen[0] } else { gen[1] };
        (mu, v1, v3)
    } else {
        let (_, sv) = right_singular(&n);
        let v3 = sv[2];
        let v2 = n * v3;
        let u2 = v2 / T::lit(v2.norm());
        let candidates = [sv[0], sv[1]].map(|k| k - u2 * u2.dotc(&k));
        let v1 = if candidates[0].norm() >= candidates[1].norm() { candidates[0] } else { candidates[1] };
        (jordan.value, v1, v3)
    };
    let v2 = n * v3;
    let (b11, b13, b23, b33) = (b(&v1, &v1), b(&v1, &v3), b(&v2, &v3), b(&v3, &v3));
    if T::MODE == Mode::Real && b11.re() <= 0.0 {
        return Err(NormalFormError::Construction("eigenvector of μ is not spacelike".into()));
    }
    if b23.modulus() == 0.0 {
        return Err(NormalFormError::Construction("Jordan chain is B-degenerate".into()));
    }
    let r11 = b11.sqrt();
    let two = T::lit(2.0);
    let u1 = v1 / r11 - v2 * (b13 / (b23 * r11));
    let u2 = v2 / b23;
    let u3 = v3 - v2 * (b33 / (two * b23));
    let p = Mat3::from_columns(&[u1, u2, u3]);
    Ok((Params::Case3 { mu: lift(mu), lambda: lam, zeta: b23 }, p))
}

fn case4<T: Scalar>(phi: &Mat3<T>, spec: &Spectrum) -> Result<(Params<T>, Mat3<T>), NormalFormError> {
    let lam: T = lift(spec.eigenvalues[0].value);
    let n = phi - Mat3::identity() * lam;
    let (_, sv) = right_singular(&(n * n));
    let v3 = sv[2];
    let v1 = n * v3;
    let v2 = n * v1;
    let (b11, b13, b23, b33) = (b(&v1, &v1), b(&v1, &v3), b(&v2, &v3), b(&v3, &v3));
    if T::MODE == Mode::Real && b11.re() <= 0.0 {
        return Err(NormalFormError::Construction("Jordan chain head is not spacelike".into()));
    }
    let two = T::lit(2.0);
    let k = -b13 / (two * b11);
    let l = -(b33 + two * k * b13 + k * k * b11) / (two * b23);
    let u1 = v1 + v2 * k;
    let u2 = v2;
    let u3 = v3 + v1 * k + v2 * l;
    let z2 = b(&u1, &u1);
    let zeta = z2.sqrt();
    let w1 = u1 / zeta;
    let w2 = u2 / b(&u2, &u3);
    let p = Mat3::from_columns(&[w1, w2, u3]);
    Ok((Params::Case4 { lambda: lam, zeta }, p))
}

pub fn reduce<T: Scalar>(phi: &Mat3<T>) -> Result<NormalForm<T>, NormalFormError> {
    reduce_with(phi, &SpectrumOptions::default())
}

pub fn reduce_with<T: Scalar>(phi: &Mat3<T>, opts: &SpectrumOptions) -> Result<NormalForm<T>, NormalFormError> {
    let map = SelfAdjointMap::new(*phi).map_err(|e| match e {
        AlgebraError::Degenerate(_) => NormalFormError::Singular,
        e => e.into(),
    })?;
    let phi = map.matrix();
    let spec = spectrum3(phi, opts);
    if spec.eigenvalues.iter().any(|e| e.geo_mult == 0) {
        return Err(NormalFormError::Ambiguous(format!("{:?}", spec.eigenvalues)));
    }
    let case = if T::MODE == Mode::Real && spec.has_nonreal() {
        Case::Case2
    } else {
        match spec.defect() {
            0 => Case::Case1,
            1 => Case::Case3,
            2 if spec.eigenvalues.len() == 1 => Case::Case4,
            _ => return Err(NormalFormError::Ambiguous(format!("{:?}", spec.eigenvalues))),
        }
    };
    let (params, mut p) = match case {
        Case::Case1 => case1(phi, &spec)?,
        Case::Case2 => case2(phi, &spec)?,
        Case::Case3 => case3(phi, &spec)?,
        Case::Case4 => case4(phi, &spec)?,
    };
    let delta = fix_delta(&mut p, case)?;
    let nf = NormalForm { basis_kind: params.basis_kind(delta), params, p, spectrum: spec };
    let scale = frob(phi).max(1.0);
    let res = frob(&(nf.reconstruct() - phi)) / scale;
    let gram_expected: Mat3<T> = nf.basis_kind.gram().expect("adapted");
    let gres = frob(&(nf.gram() - gram_expected));
    if !(res <= 1e-6 && gres <= 1e-6) {
        return Err(NormalFormError::Construction(format!(
            "certification failed: reconstruction residual {res:e}, gram residual {gres:e}"
        )));
    }
    Ok(nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{pseudo_orthonormal_frame, random_automorphism};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spectrum_examples() {
        let s = spectrum3(&Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 3.0)), &SpectrumOptions::default());
        assert_eq!(s.eigenvalues.len(), 3);
        assert!(s.eigenvalues.iter().all(|e| e.alg_mult == 1 && e.geo_mult == 1));

        let m = Mat3::new(2.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 5.0);
        let s = spectrum3(&m, &SpectrumOptions::default());
        assert_eq!(s.eigenvalues.len(), 2);
        let two = s.eigenvalues.iter().find(|e| (e.value - c(2.0, 0.0)).norm() < 1e-12).unwrap();
        assert_eq!((two.alg_mult, two.geo_mult), (2, 1));
        let five = s.eigenvalues.iter().find(|e| (e.value - c(5.0, 0.0)).norm() < 1e-12).unwrap();
        assert_eq!((five.alg_mult, five.geo_mult), (1, 1));

        let rot = Mat3::new(3.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, -2.0, 1.0);
        let s = spectrum3(&rot, &SpectrumOptions::default());
        let vals: Vec<_> = s.eigenvalues.iter().map(|e| e.value).collect();
        for want in [c(1.0, 2.0), c(1.0, -2.0), c(3.0, 0.0)] {
            assert!(vals.iter().any(|v| (v - want).norm() < 1e-12), "{vals:?}");
        }
    }

    #[test]
    fn spectrum_triple_roots() {
        let s = spectrum3(&Mat3::<f64>::identity(), &SpectrumOptions::default());
        assert_eq!(s.eigenvalues.len(), 1);
        assert_eq!((s.eigenvalues[0].alg_mult, s.eigenvalues[0].geo_mult), (3, 3));
        let j = Mat3::new(2.0, 0.0, 1.0, 1.0, 2.0, 0.0, 0.0, 0.0, 2.0);
        let s = spectrum3(&j, &SpectrumOptions::default());
        assert_eq!(s.eigenvalues.len(), 1);
        assert_eq!((s.eigenvalues[0].alg_mult, s.eigenvalues[0].geo_mult), (3, 1));
    }

    #[test]
    fn diagonal_map_reduces_to_identity_basis() {
        let nf = reduce(&Mat3::from_diagonal(&Vec3::new(2.0, 3.0, 5.0))).unwrap();
        assert_eq!(nf.case(), Case::Case1);
        assert!((nf.p - Mat3::identity()).norm() < 1e-14);
        assert_eq!(nf.params, Params::Case1 { lambda: [2.0, 3.0, 5.0] });
    }

    #[test]
    fn case3_from_random_pseudo_orthonormal_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p0 = pseudo_orthonormal_frame(&mut rng);
        let t = Params::Case3 { mu: 1.0, lambda: 2.0, zeta: 1.0 }.template();
        let phi = p0 * t * p0.try_inverse().unwrap();
        let nf = reduce(&phi).unwrap();
        let Params::Case3 { mu, lambda, zeta } = nf.params else { panic!("{:?}", nf.params) };
        assert!((mu - 1.0).abs() < 1e-9 && (lambda - 2.0).abs() < 1e-9 && zeta != 0.0);
        assert!((nf.p.try_inverse().unwrap() * phi * nf.p - nf.template()).norm() < 1e-8);
        assert!((nf.gram() - crate::algebra::pseudo_orthonormal_gram()).norm() < 1e-8);
        assert_eq!(nf.basis_kind, BasisKind::PseudoOrthonormal(Delta::Plus));
    }

    #[test]
    fn case2_spectrum_reproduced() {
        let t = Params::Case2 { mu: 1.0, alpha: 2.0, beta: 1.0 }.template();
        let nf = reduce(&t).unwrap();
        let Params::Case2 { mu, alpha, beta } = nf.params else { panic!() };
        assert!((mu - 1.0).abs() < 1e-12 && (alpha - 2.0).abs() < 1e-12 && (beta - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_automorphism(&mut rng, 1.0);
        let nf2 = reduce(&(a * t * a.try_inverse().unwrap())).unwrap();
        assert_eq!(nf2.case(), Case::Case2);
        assert!((nf2.reconstruct() - a * t * a.try_inverse().unwrap()).norm() < 1e-9);
    }

    #[test]
    fn case4_has_positive_zeta() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p0 = pseudo_orthonormal_frame(&mut rng);
        let t = Params::Case4 { lambda: -1.5, zeta: 0.7 }.template();
        let nf = reduce(&(p0 * t * p0.try_inverse().unwrap())).unwrap();
        let Params::Case4 { lambda, zeta } = nf.params else { panic!() };
        assert!((lambda + 1.5).abs() < 1e-7 && zeta > 0.0);
    }

    #[test]
    fn triple_eigenvalue_with_two_dimensional_eigenspace_is_case3() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p0 = pseudo_orthonormal_frame(&mut rng);
        let t = Params::Case3 { mu: 2.0, lambda: 2.0, zeta: -0.5 }.template();
        let phi = p0 * t * p0.try_inverse().unwrap();
        let nf = reduce(&phi).unwrap();
        assert_eq!(nf.case(), Case::Case3);
        let Params::Case3 { zeta, .. } = nf.params else { panic!() };
        assert!(zeta < 0.0);
    }

    #[test]
    fn inverse_parameters() {
        let inv = invert_params(&Params::Case1 { lambda: [1.0, 0.5, 1.0 / 3.0] }).unwrap();
        let InverseParams::Case1 { nu } = inv else { panic!() };
        assert!((nu[0] - 1.0).abs() < 1e-15 && (nu[1] - 2.0).abs() < 1e-15 && (nu[2] - 3.0).abs() < 1e-14);
        assert_eq!(
            invert_params(&Params::Case3 { mu: 0.5, lambda: 1.0, zeta: 1.0 }).unwrap(),
            InverseParams::Case3 { eta: 2.0, nu: 1.0, zeta: 1.0 }
        );
        assert_eq!(
            invert_params(&Params::Case2 { mu: 1.0, alpha: 0.0, beta: 1.0 }).unwrap(),
            InverseParams::Case2 { eta: 1.0, gamma: 0.0, zeta: -1.0 }
        );
        assert!(matches!(invert_params(&Params::Case1 { lambda: [1.0, 0.0, 2.0] }), Err(NormalFormError::Singular)));
    }

    #[test]
    fn inverse_templates_invert() {
        let ps = [
            Params::Case1 { lambda: [1.5, -0.5, 2.0] },
            Params::Case2 { mu: 0.7, alpha: -1.2, beta: 0.4 },
            Params::Case3 { mu: 1.1, lambda: -0.6, zeta: 2.5 },
            Params::Case4 { lambda: 0.8, zeta: 1.3 },
        ];
        for p in ps {
            let inv = invert_params(&p).unwrap().matrix();
            let num = p.template().try_inverse().unwrap();
            assert!((inv - num).norm() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn non_self_adjoint_rejected() {
        let mut m = Mat3::<f64>::identity();
        m[(0, 1)] = 1.0;
        assert!(matches!(reduce(&m), Err(NormalFormError::Algebra(AlgebraError::NotSelfAdjoint))));
    }

    #[test]
    fn complex_diagonal_cases() {
        let d = Mat3::from_diagonal(&Vec3::new(c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)));
        let nf = reduce(&d).unwrap();
        assert_eq!(nf.case(), Case::Case1);
        assert!((nf.reconstruct() - d).norm() < 1e-12);
        let d = Mat3::from_diagonal(&Vec3::new(c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)));
        let nf = reduce(&d).unwrap();
        assert_eq!(nf.spectrum.max_geo_mult(), 2);
    }
}
