//! Projective compactification of the Euler–Arnold fields: affine charts around the plane
//! at infinity, chart pushforwards, singular points and leaves of the induced foliation at
//! infinity, and escape times from time-form quadratures.
//!
//! Points of ℝP³ are written homogeneously as `(Z₁:Z₂:Z₃:Z₀)`, the affine space being
//! `Z₀ = 1`. Charts:
//!
//! | chart | homogeneous point | plane at infinity |
//! |-------|-------------------|-------------------|
//! | `Affine` | `(z₁:z₂:z₃:1)` | n/a |
//! | `X` | `(x₁:x₂:1:x₃)` | `x₃ = 0` |
//! | `Y` | `(y₁:1:y₂:y₃)` | `y₃ = 0` |
//! | `U` | `(1:u₂:u₁:u₃)` | `u₃ = 0` |
//! | `W` | `(1:w₂:w₃:w₁)` | `w₁ = 0` |

use std::fmt;

use nalgebra::Matrix2;
use thiserror::Error;

use crate::algebra::{Delta, Mat3, Scalar, Vec3};
use crate::euler_arnold::{Coeffs, EAField};
use crate::normal_form::Case;
use crate::quadrature::{self, QuadratureError};

#[derive(Debug, Error, PartialEq)]
pub enum ChartError {
    #[error("point lies on the hyperplane excluded by chart {0}")]
    ForbiddenHyperplane(ChartId),
    #[error("chart {chart} is not available for case {case}")]
    Unsupported { chart: ChartId, case: Case },
    #[error("escape quadrature not available: {0}")]
    NoTimeForm(String),
    #[error("initial point does not lie on the given leaf")]
    LeafMismatch,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChartId {
    Affine,
    X,
    Y,
    U,
    W,
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChartId::Affine => "affine",
            ChartId::X => "x",
            ChartId::Y => "y",
            ChartId::U => "u",
            ChartId::W => "w",
        };
        f.write_str(s)
    }
}

/// How chart coordinates `ξ` sit in homogeneous coordinates: `Z_k = 1` for the normalising
/// index `k`, `ξ[inv] = Z₀`, and `ξ[i] = Z_m` for each `(i, m)` in `ratio`.
#[derive(Clone, Copy, Debug)]
struct Layout {
    k: usize,
    inv: usize,
    ratio: [(usize, usize); 2],
}

impl ChartId {
    pub const ALL: [ChartId; 5] = [ChartId::Affine, ChartId::X, ChartId::Y, ChartId::U, ChartId::W];

    fn layout(self) -> Option<Layout> {
        match self {
            ChartId::Affine => None,
            ChartId::X => Some(Layout { k: 2, inv: 2, ratio: [(0, 0), (1, 1)] }),
            ChartId::Y => Some(Layout { k: 1, inv: 2, ratio: [(0, 0), (1, 2)] }),
            ChartId::U => Some(Layout { k: 0, inv: 2, ratio: [(0, 2), (1, 1)] }),
            ChartId::W => Some(Layout { k: 0, inv: 0, ratio: [(1, 1), (2, 2)] }),
        }
    }

    /// Index of the coordinate that vanishes on the plane at infinity.
    pub fn infinity_coordinate(self) -> Option<usize> {
        self.layout().map(|l| l.inv)
    }

    /// Indices of the two coordinates along the plane at infinity.
    pub fn infinity_plane_coordinates(self) -> Option<[usize; 2]> {
        self.layout().map(|l| [l.ratio[0].0, l.ratio[1].0])
    }

    pub fn to_homogeneous<T: Scalar>(self, p: &Vec3<T>) -> [T; 4] {
        match self.layout() {
            None => [p[0], p[1], p[2], T::one()],
            Some(l) => {
                let mut h = [T::zero(); 4];
                h[l.k] = T::one();
                h[3] = p[l.inv];
                for (i, m) in l.ratio {
                    h[m] = p[i];
                }
                h
            }
        }
    }

    pub fn from_homogeneous<T: Scalar>(self, h: &[T; 4]) -> Result<Vec3<T>, ChartError> {
        let scale = h.iter().map(|x| x.modulus()).fold(0.0, f64::max);
        let (n, l) = match self.layout() {
            None => (h[3], None),
            Some(l) => (h[l.k], Some(l)),
        };
        if n.modulus() <= f64::EPSILON * scale || scale == 0.0 {
            return Err(ChartError::ForbiddenHyperplane(self));
        }
        Ok(match l {
            None => Vec3::new(h[0] / n, h[1] / n, h[2] / n),
            Some(l) => {
                let mut p = Vec3::zeros();
                p[l.inv] = h[3] / n;
                for (i, m) in l.ratio {
                    p[i] = h[m] / n;
                }
                p
            }
        })
    }
}

/// Exact rational transition between charts.
pub fn to_chart<T: Scalar>(point: &Vec3<T>, from: ChartId, to: ChartId) -> Result<Vec3<T>, ChartError> {
    if from == to {
        return Ok(*point);
    }
    to.from_homogeneous(&from.to_homogeneous(point))
}

/// An Euler–Arnold field written in a chart: `P(ξ)/ξ_inv` with `P` polynomial
/// (`P = E` and no prefactor in the affine chart).
#[derive(Clone, Debug)]
pub struct ChartField {
    pub field: EAField<f64>,
    pub chart: ChartId,
}

impl ChartField {
    /// Polynomial part `P`.
    pub fn polynomial(&self, xi: &Vec3<f64>) -> Vec3<f64> {
        match self.chart.layout() {
            None => self.field.eval(xi),
            Some(l) => {
                let mut zh = Vec3::zeros();
                zh[l.k] = 1.0;
                for (i, m) in l.ratio {
                    zh[m] = xi[i];
                }
                let e = self.field.eval(&zh);
                let mut p = Vec3::zeros();
                for (i, m) in l.ratio {
                    p[i] = e[m] - xi[i] * e[l.k];
                }
                p[l.inv] = -xi[l.inv] * e[l.k];
                p
            }
        }
    }

    /// Full chart field; undefined on the plane at infinity.
    pub fn eval(&self, xi: &Vec3<f64>) -> Vec3<f64> {
        let p = self.polynomial(xi);
        match self.chart.layout() {
            None => p,
            Some(l) => p / xi[l.inv],
        }
    }

    /// Induced field on the plane at infinity, in the two remaining chart coordinates.
    pub fn at_infinity(&self, eta: [f64; 2]) -> [f64; 2] {
        let Some(l) = self.chart.layout() else {
            return [f64::NAN; 2];
        };
        let mut xi = Vec3::zeros();
        xi[l.ratio[0].0] = eta[0];
        xi[l.ratio[1].0] = eta[1];
        let p = self.polynomial(&xi);
        [p[l.ratio[0].0], p[l.ratio[1].0]]
    }

    /// Jacobian of [`Self::at_infinity`] by central differences.
    pub fn infinity_jacobian(&self, eta: [f64; 2]) -> Matrix2<f64> {
        let h = 1e-5;
        let mut j = Matrix2::zeros();
        for c in 0..2 {
            let (mut p, mut m) = (eta, eta);
            p[c] += h;
            m[c] -= h;
            let (fp, fm) = (self.at_infinity(p), self.at_infinity(m));
            for r in 0..2 {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }
}

fn supported(chart: ChartId, case: Case) -> bool {
    match chart {
        ChartId::Affine | ChartId::X => true,
        ChartId::Y | ChartId::U => case == Case::Case1,
        ChartId::W => case == Case::Case3,
    }
}

/// Field in the given chart, for the chart/case pairs with published coordinate expressions.
pub fn field_in_chart(f: &EAField<f64>, chart: ChartId) -> Result<ChartField, ChartError> {
    if !supported(chart, f.case()) {
        return Err(ChartError::Unsupported { chart, case: f.case() });
    }
    Ok(ChartField { field: f.clone(), chart })
}

fn pushforward(f: &EAField<f64>, chart: ChartId) -> ChartField {
    ChartField { field: f.clone(), chart }
}

/// Points `v = (v₁, v₂, 1)` with `E(v) = κv`, `κ ≠ 0`, from the closed forms of each case.
/// Returned as `(v, κ)`; in real mode only real solutions are kept.
pub fn idempotent_sections<T: Scalar>(f: &EAField<T>) -> Vec<(Vec3<T>, T)> {
    let real = T::MODE == crate::algebra::Mode::Real;
    let root = |x: T| -> Option<T> {
        if real && x.re() < 0.0 {
            None
        } else {
            Some(x.sqrt())
        }
    };
    let one = T::one();
    let mut cands: Vec<Vec3<T>> = Vec::new();
    match f.coeffs {
        Coeffs::Case1 { a, b, c } => {
            if c.modulus() > 0.0 {
                if let (Some(x1), Some(x2)) = (root(a / c), root(b / c)) {
                    for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        cands.push(Vec3::new(x1 * T::lit(s1), x2 * T::lit(s2), one));
                    }
                }
            }
        }
        Coeffs::Case2 { a, b } => {
            let r = (a * a + b * b).sqrt();
            let (d1, d2) = (b + r, b - r);
            let d = if d1.modulus() >= d2.modulus() { d1 } else { d2 };
            if d.modulus() > 0.0 {
                let rho = a / d;
                let den = a * rho + b;
                if den.modulus() > 0.0 {
                    if let Some(x1) = root(b * (rho * rho + one) / den) {
                        cands.push(Vec3::new(x1, rho, one));
                        cands.push(Vec3::new(-x1, rho, one));
                    }
                }
            }
        }
        Coeffs::Case3 { a, b } => {
            if a.modulus() > 0.0 {
                if let Some(x1) = root(b / a) {
                    let x2 = -b / (a * T::lit(2.0));
                    cands.push(Vec3::new(x1, x2, one));
                    cands.push(Vec3::new(-x1, x2, one));
                }
            }
        }
        Coeffs::Case4 { zeta, nu } => {
            let zn = zeta * nu;
            cands.push(Vec3::new(zn / T::lit(2.0), -zn * zn / T::lit(8.0), one));
        }
    }
    let scale = f.coeffs.values().iter().map(|c| c.modulus()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    cands
        .into_iter()
        .filter_map(|v| {
            let e = f.eval(&v);
            let kappa = e[2];
            let res = (e - v * kappa).norm();
            let ok = kappa.modulus() > 1e-14 * scale * v.norm().powi(2) && res <= 1e-10 * e.norm().max(1.0);
            ok.then_some((v, kappa))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularKind {
    /// Projection of an idempotent ray.
    IdempotentType,
    /// Origin of a chart with non-degenerate, non-saddle, non-center linear part.
    AxisPoint,
    Saddle,
    Center,
    /// Vanishing determinant of the linear part.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfinitySingularity {
    pub chart: ChartId,
    pub coords: [f64; 2],
    pub kind: SingularKind,
}

fn classify_linear(j: &Matrix2<f64>) -> SingularKind {
    let s = j.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let det = j.determinant();
    let tr = j.trace();
    if det.abs() <= 1e-8 * s * s {
        SingularKind::Degenerate
    } else if det < 0.0 {
        SingularKind::Saddle
    } else if tr.abs() <= 1e-8 * s {
        SingularKind::Center
    } else {
        SingularKind::AxisPoint
    }
}

/// Singular points of the foliation at infinity: projections of idempotents (in the X chart)
/// and those chart origins of X, Y, U where the induced field vanishes.
pub fn infinity_singularities(f: &EAField<f64>) -> Vec<InfinitySingularity> {
    if f.is_zero() {
        return Vec::new();
    }
    let scale = f.coeffs.values().iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for chart in [ChartId::X, ChartId::Y, ChartId::U] {
        if chart != ChartId::X {
            // with c = 0 the Y and U origins are regular points of the saturated foliation
            if let Coeffs::Case1 { c, .. } = f.coeffs {
                if c == 0.0 {
                    continue;
                }
            }
        }
        let cf = pushforward(f, chart);
        let v = cf.at_infinity([0.0, 0.0]);
        if v[0].abs().max(v[1].abs()) <= 1e-12 * scale {
            out.push(InfinitySingularity {
                chart,
                coords: [0.0, 0.0],
                kind: classify_linear(&cf.infinity_jacobian([0.0, 0.0])),
            });
        }
        if chart == ChartId::X {
            for (v, _) in idempotent_sections(f) {
                out.push(InfinitySingularity { chart, coords: [v[0], v[1]], kind: SingularKind::IdempotentType });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConicType {
    Ellipse,
    Hyperbola,
    Parabola,
    Line,
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LeafParam {
    /// `θ ↦ (α₁cos θ, α₂sin θ)` in the X chart.
    Angle { alpha: [f64; 2] },
    /// The X-chart coordinate `x₁`.
    X1,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafAtInfinity {
    /// `I1/I2` at the direction; `None` when `I2` vanishes.
    pub k: Option<f64>,
    /// `(I1, I2)` at the direction.
    pub pair: (f64, f64),
    pub conic: ConicType,
    /// Symmetric matrix of the conic `I2(d)·I1(x) − I1(d)·I2(x) = 0` in homogeneous coordinates.
    pub form: Mat3<f64>,
    /// Projection of the direction to the X chart, if `d₃ ≠ 0`.
    pub point: Option<[f64; 2]>,
    pub param: Option<LeafParam>,
    /// Parameter interval of the leaf through `point` between consecutive singular points.
    pub param_bounds: Option<(f64, f64)>,
}

fn classify_conic(m: &Mat3<f64>) -> ConicType {
    let s = m.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if s == 0.0 {
        return ConicType::Degenerate;
    }
    let m = m / s;
    let tol = 1e-10;
    let d3 = m.determinant();
    let d2 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if d3.abs() > tol {
        if d2 > tol {
            ConicType::Ellipse
        } else if d2 < -tol {
            ConicType::Hyperbola
        } else {
            ConicType::Parabola
        }
    } else if d2 < -tol {
        ConicType::Line
    } else if d2 > tol {
        ConicType::Degenerate
    } else {
        // parallel, coincident or empty pairs
        let q = m.fixed_view::<2, 2>(0, 0);
        let rank2 = q.iter().any(|x| x.abs() > tol);
        if rank2 {
            // one non-zero direction: x'² coefficient × constant term decide real/imaginary
            let (ev, evec) = {
                let e = nalgebra::SymmetricEigen::new(q.into_owned());
                (e.eigenvalues, e.eigenvectors)
            };
            let i = if ev[0].abs() >= ev[1].abs() { 0 } else { 1 };
            let u = evec.column(i);
            let lin = m[(0, 2)] * u[0] + m[(1, 2)] * u[1];
            let disc = lin * lin - ev[i] * m[(2, 2)];
            if disc > tol {
                ConicType::Line
            } else {
                ConicType::Degenerate
            }
        } else {
            ConicType::Line
        }
    }
}

/// Leaf of the foliation at infinity through the direction `d`: the conic cut out by the
/// level of the quotient `I1/I2`.
pub fn leaf_at_infinity(f: &EAField<f64>, direction: &Vec3<f64>) -> Result<LeafAtInfinity, ChartError> {
    let n = direction.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(ChartError::ForbiddenHyperplane(ChartId::Affine));
    }
    let d = direction / n;
    let fi = f.first_integrals(&d);
    let (i1, i2) = (fi.i1, fi.i2);
    let g = f.gram();
    let q = f.i2_form();
    let form = g * i2 - q * i1;
    let point = (d[2].abs() > 1e-12).then(|| [d[0] / d[2], d[1] / d[2]]);
    let k = (i2.abs() > 1e-14).then(|| i1 / i2);
    let scale = g.norm().max(q.norm());
    if i1.abs() <= 1e-12 * scale && i2.abs() <= 1e-12 * scale {
        return Ok(LeafAtInfinity {
            k: None,
            pair: (i1, i2),
            conic: ConicType::Degenerate,
            form,
            point,
            param: None,
            param_bounds: None,
        });
    }
    let conic = classify_conic(&form);
    let sing: Vec<[f64; 2]> = infinity_singularities(f)
        .into_iter()
        .filter(|s| s.chart == ChartId::X)
        .map(|s| s.coords)
        .filter(|p| {
            let x = Vec3::new(p[0], p[1], 1.0);
            (x.dot(&(form * x))).abs() <= 1e-9 * form.norm() * x.norm_squared()
        })
        .collect();
    let diagonal = form[(0, 1)].abs() + form[(0, 2)].abs() + form[(1, 2)].abs() <= 1e-14 * form.norm();
    let (param, param_bounds) = match (conic, point) {
        (ConicType::Ellipse, Some(p)) if diagonal => {
            let alpha = [(-form[(2, 2)] / form[(0, 0)]).sqrt(), (-form[(2, 2)] / form[(1, 1)]).sqrt()];
            let ang = |q: &[f64; 2]| (q[1] / alpha[1]).atan2(q[0] / alpha[0]);
            let th = ang(&p);
            let mut ths: Vec<f64> = sing.iter().map(ang).collect();
            let bounds = if ths.is_empty() {
                Some((th - std::f64::consts::PI, th + std::f64::consts::PI))
            } else {
                ths.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let lo = ths.iter().rev().find(|&&x| x <= th).copied();
                let hi = ths.iter().find(|&&x| x > th).copied();
                let tau = std::f64::consts::TAU;
                Some((lo.unwrap_or(ths[ths.len() - 1] - tau), hi.unwrap_or(ths[0] + tau)))
            };
            (Some(LeafParam::Angle { alpha }), bounds)
        }
        (ConicType::Degenerate, _) | (_, None) => (None, None),
        (_, Some(p)) => {
            let lo = sing.iter().map(|s| s[0]).filter(|&x| x < p[0]).fold(f64::NEG_INFINITY, f64::max);
            let hi = sing.iter().map(|s| s[0]).filter(|&x| x > p[0]).fold(f64::INFINITY, f64::min);
            (Some(LeafParam::X1), Some((lo, hi)))
        }
    };
    Ok(LeafAtInfinity { k, pair: (i1, i2), conic, form, point, param, param_bounds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Future,
    Past,
}

impl Endpoint {
    pub fn flip(self) -> Self {
        match self {
            Endpoint::Future => Endpoint::Past,
            Endpoint::Past => Endpoint::Future,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Endpoint::Future => 1.0,
            Endpoint::Past => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Escape {
    pub finite: bool,
    /// Signed escape time (`±∞` when not finite).
    pub value: f64,
}

impl Escape {
    fn infinite(e: Endpoint) -> Self {
        Escape { finite: false, value: e.sign() * f64::INFINITY }
    }

    fn at(e: Endpoint, magnitude: f64) -> Self {
        if magnitude.is_finite() {
            Escape { finite: true, value: e.sign() * magnitude }
        } else {
            Escape::infinite(e)
        }
    }
}

const QUAD_TOL: f64 = 1e-10;

/// `lead·Π(u − rᵢ)·Π(αⱼ + βⱼu²)` with the quadratic factors free of real roots.
#[derive(Clone, Debug)]
struct Factored {
    lead: f64,
    roots: Vec<f64>,
    quads: Vec<(f64, f64)>,
}

impl Factored {
    fn new() -> Self {
        Self { lead: 1.0, roots: Vec::new(), quads: Vec::new() }
    }

    /// Multiply by `α + βu²`.
    fn even(mut self, alpha: f64, beta: f64) -> Self {
        if beta != 0.0 && -alpha / beta >= 0.0 {
            let r = (-alpha / beta).sqrt();
            self.lead *= beta;
            self.roots.push(r);
            self.roots.push(-r);
        } else {
            self.quads.push((alpha, beta));
        }
        self
    }

    /// Multiply by `p + q·u`.
    fn linear(mut self, p: f64, q: f64) -> Self {
        if q != 0.0 {
            self.lead *= q;
            self.roots.push(-p / q);
        } else {
            self.lead *= p;
        }
        self
    }

    fn degree(&self) -> usize {
        self.roots.len() + 2 * self.quads.iter().filter(|q| q.1 != 0.0).count()
    }

    fn is_zero(&self) -> bool {
        self.lead == 0.0 || self.quads.iter().any(|&(a, b)| a == 0.0 && b == 0.0)
    }

    /// `|Q(u)|` with the factor `(u − r_skip)` omitted.
    fn abs_without(&self, u: f64, skip: Option<usize>) -> f64 {
        let mut v = self.lead.abs();
        for (i, r) in self.roots.iter().enumerate() {
            if Some(i) != skip {
                v *= (u - r).abs();
            }
        }
        for &(a, b) in &self.quads {
            v *= (a + b * u * u).abs();
        }
        v
    }

    /// `|Q(σ/v)|·v^deg`, smooth at `v = 0`.
    fn abs_at_infinity(&self, sigma: f64, v: f64) -> f64 {
        let mut x = self.lead.abs();
        for r in &self.roots {
            x *= (sigma - r * v).abs();
        }
        for &(a, b) in &self.quads {
            x *= if b != 0.0 { (a * v * v + b).abs() } else { a.abs() };
        }
        x
    }

    fn multiplicity(&self, r: f64, tol: f64) -> usize {
        self.roots.iter().filter(|&&x| (x - r).abs() <= tol).count()
    }

    /// Nearest root strictly beyond `u` in direction `sigma`.
    fn next_root(&self, u: f64, sigma: f64, tol: f64) -> Option<(usize, f64)> {
        self.roots
            .iter()
            .enumerate()
            .filter(|(_, &r)| sigma * (r - u) > tol)
            .min_by(|x, y| (sigma * (x.1 - u)).partial_cmp(&(sigma * (y.1 - u))).unwrap())
            .map(|(i, &r)| (i, r))
    }

    fn root_index(&self, u: f64, tol: f64) -> Option<usize> {
        self.roots.iter().position(|&r| (r - u).abs() <= tol)
    }
}

/// `∫ du/√|Q(u)|` over `[ua, ub]` where either end may be a simple root (given by index).
fn segment(q: &Factored, ua: f64, ub: f64, ra: Option<usize>, rb: Option<usize>) -> Result<f64, ChartError> {
    if ua == ub {
        return Ok(0.0);
    }
    if ra.is_some() && rb.is_some() {
        let m = 0.5 * (ua + ub);
        return Ok(segment(q, ua, m, ra, None)? + segment(q, m, ub, None, rb)?);
    }
    let sigma = (ub - ua).signum();
    let len = (ub - ua).abs();
    let est = if let Some(i) = rb {
        let r = q.roots[i];
        quadrature::integrate(|w| {
            let u = r - sigma * w * w;
            2.0 / q.abs_without(u, Some(i)).sqrt()
        }, 0.0, len.sqrt(), QUAD_TOL, 1e-12)?
    } else if let Some(i) = ra {
        let r = q.roots[i];
        quadrature::integrate(|w| {
            let u = r + sigma * w * w;
            2.0 / q.abs_without(u, Some(i)).sqrt()
        }, 0.0, len.sqrt(), QUAD_TOL, 1e-12)?
    } else {
        quadrature::integrate(|u| 1.0 / q.abs_without(u, None).sqrt(), ua.min(ub), ua.max(ub), QUAD_TOL, 1e-12)?
    };
    Ok(est.value)
}

/// `∫ du/√|Q(u)|` from `u0` to `σ∞` (finite only for degree ≥ 3).
fn to_infinity(q: &Factored, u0: f64, r0: Option<usize>, sigma: f64) -> Result<f64, ChartError> {
    if q.degree() < 3 {
        return Ok(f64::INFINITY);
    }
    let um = u0 + sigma * u0.abs().max(1.0);
    let near = segment(q, u0, um, r0, None)?;
    let deg = q.degree() as i32;
    // u = σ/v: du/√|Q| = v^{deg/2 − 2} dv / √(|Q(σ/v)| v^deg)
    let far = quadrature::integrate(
        |v| v.powi(deg / 2 - 2) / q.abs_at_infinity(sigma, v).sqrt(),
        0.0,
        1.0 / um.abs(),
        QUAD_TOL,
        1e-12,
    )?;
    Ok(near + far.value)
}

/// Travel time magnitude (in units of `∫du/√|Q|`) of a motion starting at `u0` in direction
/// `sigma` that reflects at simple roots. Infinite when a multiple root is approached, the
/// motion is periodic, or `u → ±∞` is not reached in finite time.
fn reflecting_travel(q: &Factored, u0: f64, sigma: f64, tol: f64) -> Result<f64, ChartError> {
    let r0 = q.root_index(u0, tol);
    match q.next_root(u0, sigma, tol) {
        None => to_infinity(q, u0, r0, sigma),
        Some((i, r)) => {
            if q.multiplicity(r, tol) > 1 {
                return Ok(f64::INFINITY);
            }
            let t1 = segment(q, u0, r, r0, Some(i))?;
            match q.next_root(r, -sigma, tol) {
                None => Ok(t1 + to_infinity(q, r, Some(i), -sigma)?),
                Some(_) => Ok(f64::INFINITY),
            }
        }
    }
}

/// Escape toward a root in a height-function time form `dt = x₃⁰ sgn(P₀)/√(|P₀||P(u)|) du`,
/// with `u` moving in direction `sgn(P₀·x₃⁰)` in forward time.
fn height_form(p: &Factored, u0: f64, x30: f64, endpoint: Endpoint, tol: f64) -> Result<Escape, ChartError> {
    let p0 = p.abs_without(u0, None);
    let dir_fwd = {
        let mut s = p.lead.signum();
        for r in &p.roots {
            s *= (u0 - r).signum();
        }
        for &(a, b) in &p.quads {
            s *= (a + b * u0 * u0).signum();
        }
        s * x30.signum()
    };
    let sigma = dir_fwd * endpoint.sign();
    let Some((i, r)) = p.next_root(u0, sigma, tol) else {
        return Ok(Escape::infinite(endpoint));
    };
    if p.multiplicity(r, tol) > 1 {
        return Ok(Escape::infinite(endpoint));
    }
    let integral = segment(p, u0, r, None, Some(i))?;
    Ok(Escape::at(endpoint, x30.abs() / p0.sqrt() * integral))
}

fn rel_zero(x: f64, scale: f64) -> bool {
    x.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE)
}

/// Case 3 (and the invariant planes of case 2) in the X chart: `ẋ₁ = (b − a x₁²)/x₃`,
/// `ẋ₃ = −a x₁`; on the invariant lines `x₁² = b/a` the motion continues in `x₂` with
/// `ẋ₂ = −x₁(b + 2a x₂)/x₃`.
fn escape_quadratic_plane(a: f64, b: f64, x: &Vec3<f64>, endpoint: Endpoint, line_x2: bool) -> Result<Escape, ChartError> {
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    let scale = a.abs().max(b.abs());
    let p = Factored::new().even(b, -a);
    let p0 = b - a * x1 * x1;
    if !rel_zero(p0, scale * (1.0 + x1 * x1)) {
        return height_form(&p, x1, x3, endpoint, 1e-12 * (1.0 + x1.abs()));
    }
    let l = Factored::new().linear(-x1 * b, -x1 * 2.0 * a);
    let l0 = -x1 * (b + 2.0 * a * x2);
    if line_x2 && !rel_zero(l0, scale * (1.0 + x2.abs()) * (1.0 + x1.abs())) {
        return height_form(&l, x2, x3, endpoint, 1e-12 * (1.0 + x2.abs()));
    }
    // idempotent ray: x₃(t) = x₃⁰ − a x₁ t
    let t = x3 / (a * x1);
    Ok(if t * endpoint.sign() > 0.0 { Escape::at(endpoint, t.abs()) } else { Escape::infinite(endpoint) })
}

fn escape_case1(a: f64, b: f64, c: f64, z: &Vec3<f64>, endpoint: Endpoint) -> Result<Escape, ChartError> {
    if a == 0.0 || b == 0.0 {
        return Ok(Escape::infinite(endpoint));
    }
    let (z1, z2, z3) = (z[0], z[1], z[2]);
    let (beta, delta) = (b / a, c / a);
    let snap = |x: f64, s: f64| if x.abs() <= 1e-12 * s { 0.0 } else { x };
    let alpha = snap(z2 * z2 - beta * z1 * z1, z2 * z2 + (beta * z1 * z1).abs());
    let gamma = snap(z3 * z3 - delta * z1 * z1, z3 * z3 + (delta * z1 * z1).abs());
    let q = Factored::new().even(alpha, beta).even(gamma, delta);
    if q.is_zero() {
        return Ok(Escape::infinite(endpoint));
    }
    let scale = z.norm().max(f64::MIN_POSITIVE);
    let v1 = a * z2 * z3;
    let sigma = if v1.abs() > 1e-14 * a.abs() * scale * scale {
        v1.signum() * endpoint.sign()
    } else {
        let acc = a * z1 * (b * z3 * z3 + c * z2 * z2);
        if acc.abs() <= 1e-14 * (a.abs() + b.abs() + c.abs()) * scale.powi(3) {
            return Ok(Escape::infinite(endpoint));
        }
        acc.signum()
    };
    let tol = 1e-12 * scale;
    let travel = reflecting_travel(&q, z1, sigma, tol)?;
    Ok(Escape::at(endpoint, travel / a.abs()))
}

fn escape_case4(zeta: f64, nu: f64, z: &Vec3<f64>, endpoint: Endpoint) -> Result<Escape, ChartError> {
    if z[2] == 0.0 {
        return Ok(Escape::infinite(endpoint));
    }
    let k = zeta * nu * nu;
    let zn = zeta * nu;
    let (x1, x2, x3) = (z[0] / z[2], z[1] / z[2], 1.0 / z[2]);
    let p = Factored::new().linear(-k * zn, 2.0 * k);
    let p0 = k * (2.0 * x1 - zn);
    if !rel_zero(p0, k.abs() * (1.0 + x1.abs() + zn.abs())) {
        return height_form(&p, x1, x3, endpoint, 1e-12 * (1.0 + x1.abs()));
    }
    let l = Factored::new().linear(k * zn * zn / 4.0, 2.0 * k);
    let l0 = k * (zn * zn / 4.0 + 2.0 * x2);
    if !rel_zero(l0, k.abs() * (1.0 + x2.abs() + zn * zn)) {
        return height_form(&l, x2, x3, endpoint, 1e-12 * (1.0 + x2.abs()));
    }
    // idempotent ray: x₃(t) = x₃⁰ + ζν² t
    let t = -x3 / k;
    Ok(if t * endpoint.sign() > 0.0 { Escape::at(endpoint, t.abs()) } else { Escape::infinite(endpoint) })
}

/// Case 2 with `b > 0`: on the invariant planes `z₂ = ρ z₃`, `aρ² + 2bρ − a = 0`, the flow is
/// `ż₁ = b(1+ρ²) z₃²`, `ż₃ = (aρ + b) z₁z₃`.
fn escape_case2(a: f64, b: f64, z: &Vec3<f64>, endpoint: Endpoint) -> Result<Escape, ChartError> {
    if b < 0.0 {
        // E(a,b) = −E(−a,−b): reverse time
        let e = escape_case2(-a, -b, z, endpoint.flip())?;
        return Ok(Escape { finite: e.finite, value: -e.value });
    }
    if a == 0.0 {
        return Err(ChartError::NoTimeForm("case 2 with a = 0".into()));
    }
    let r = (a * a + b * b).sqrt();
    let scale = z.norm();
    for rho in [(-b + r) / a, (-b - r) / a] {
        if (z[1] - rho * z[2]).abs() <= 1e-9 * scale * (1.0 + rho.abs()) {
            if z[2] == 0.0 {
                return Ok(Escape::infinite(endpoint));
            }
            let x = Vec3::new(z[0] / z[2], 0.0, 1.0 / z[2]);
            return escape_quadratic_plane(a * rho + b, b * (1.0 + rho * rho), &x, endpoint, false);
        }
    }
    Err(ChartError::NoTimeForm("case 2 leaves off the invariant planes".into()))
}

/// Escape time of the solution through `z0` (adapted coordinates) toward the plane at
/// infinity, from the time form along its leaf.
pub fn escape_time(f: &EAField<f64>, z0: &Vec3<f64>, endpoint: Endpoint) -> Result<Escape, ChartError> {
    if f.delta == Delta::Minus {
        let e = escape_time(&f.reversed(), z0, endpoint.flip())?;
        return Ok(Escape { finite: e.finite, value: -e.value });
    }
    if z0.norm() == 0.0 || f.is_zero() {
        return Ok(Escape::infinite(endpoint));
    }
    match f.coeffs {
        Coeffs::Case1 { a, b, c } => escape_case1(a, b, c, z0, endpoint),
        Coeffs::Case2 { a, b } => escape_case2(a, b, z0, endpoint),
        Coeffs::Case3 { a, b } => {
            if z0[2] == 0.0 {
                return Ok(Escape::infinite(endpoint));
            }
            let x = Vec3::new(z0[0] / z0[2], z0[1] / z0[2], 1.0 / z0[2]);
            escape_quadratic_plane(a, b, &x, endpoint, true)
        }
        Coeffs::Case4 { zeta, nu } => escape_case4(zeta, nu, z0, endpoint),
    }
}

/// [`escape_time`] for a point known to lie over `leaf`.
pub fn escape_quadrature(
    f: &EAField<f64>,
    leaf: &LeafAtInfinity,
    z0: &Vec3<f64>,
    endpoint: Endpoint,
) -> Result<Escape, ChartError> {
    let fi = f.first_integrals(z0);
    let (p1, p2) = leaf.pair;
    let cross = fi.i1 * p2 - fi.i2 * p1;
    let scale = (fi.i1.abs() + fi.i2.abs()) * (p1.abs() + p2.abs());
    if cross.abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) && scale > 0.0 {
        return Err(ChartError::LeafMismatch);
    }
    escape_time(f, z0, endpoint)
}
