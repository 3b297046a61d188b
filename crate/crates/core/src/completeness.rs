//! Completeness verdicts: metric-level criterion, idempotent rays and their blow-up times,
//! per-geodesic maximal domains, causal type, and a recipe for complete metrics.

use std::fmt;

use thiserror::Error;

use crate::algebra::{Mode, Scalar, Vec3};
use crate::charts::{self, ChartError, ConicType, Endpoint};
use crate::euler_arnold::{build_field, Coeffs, EAField, FieldError};
use crate::integrator::{integrate, IntegratorError, IntegratorOptions};
use crate::normal_form::{Case, InverseParams, NormalForm, Params};

#[derive(Debug, Error)]
pub enum VerdictError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error("not implemented: {0}")]
    NotImplemented(String),
    #[error("blow-up time undefined for s0 = 0 (the origin is a fixed point)")]
    ZeroScale,
    #[error("only shifts r = 0 and r = 1 are available, got {0}")]
    InvalidShift(i32),
    #[error("initial point is not finite")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionId {
    /// Case 1: `ab ≤ 0`, `a = ν₂−ν₃`, `b = ν₃−ν₁`.
    Case1Product,
    /// Case 3: `(η−ν)ζ ≤ 0`.
    Case3Product,
    /// Cases 2 and 4 are never complete in real mode.
    AlwaysIncomplete,
    /// Complex mode: some eigenvalue has an eigenspace of dimension ≥ 2.
    Eigenspace,
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriterionId::Case1Product => "case1_product",
            CriterionId::Case3Product => "case3_product",
            CriterionId::AlwaysIncomplete => "always_incomplete",
            CriterionId::Eigenspace => "eigenspace_dimension",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricVerdict {
    pub complete: bool,
    /// The product tested (real mode) or the largest eigenspace dimension (complex mode).
    pub criterion_value: Option<f64>,
    pub criterion_id: CriterionId,
}

pub fn metric_verdict<T: Scalar>(nf: &NormalForm<T>) -> MetricVerdict {
    if T::MODE == Mode::Complex {
        let g = nf.spectrum.max_geo_mult();
        return MetricVerdict { complete: g >= 2, criterion_value: Some(g as f64), criterion_id: CriterionId::Eigenspace };
    }
    let product = match nf.inverse_params() {
        Ok(InverseParams::Case1 { nu }) => Some(((nu[1] - nu[2]) * (nu[2] - nu[0])).re()),
        Ok(InverseParams::Case3 { eta, nu, zeta }) => Some(((eta - nu) * zeta).re()),
        // the parameters of a valid normal form are invertible; fall back on the direct form
        Err(_) => match nf.params {
            Params::Case1 { lambda } => {
                let l = lambda.map(|x| x.re());
                Some((1.0 / l[1] - 1.0 / l[2]) * (1.0 / l[2] - 1.0 / l[0]))
            }
            Params::Case3 { mu, lambda, zeta } => Some((1.0 / mu.re() - 1.0 / lambda.re()) * zeta.re()),
            _ => None,
        },
        _ => None,
    };
    match (nf.case(), product) {
        (Case::Case1, Some(p)) => MetricVerdict { complete: p <= 0.0, criterion_value: Some(p), criterion_id: CriterionId::Case1Product },
        (Case::Case3, Some(p)) => MetricVerdict { complete: p <= 0.0, criterion_value: Some(p), criterion_id: CriterionId::Case3Product },
        _ => MetricVerdict { complete: false, criterion_value: None, criterion_id: CriterionId::AlwaysIncomplete },
    }
}

/// A ray `s ↦ s·direction` invariant under the flow, on which `ṡ = κs²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdempotentRay<T: Scalar> {
    /// Unit vector.
    pub direction: Vec3<T>,
    /// Growth constant for the unit direction.
    pub kappa: T,
    /// The chart section `(v₁, v₂, 1)` over the same ray.
    pub section: Vec3<T>,
    /// Growth constant for `section`.
    pub section_kappa: T,
}

/// Idempotent rays of the field, each certified by `‖E(v) − κv‖ ≤ 1e−10`.
pub fn find_idempotents<T: Scalar>(f: &EAField<T>) -> Vec<IdempotentRay<T>> {
    charts::idempotent_sections(f)
        .into_iter()
        .map(|(v, k)| {
            let n = T::lit(v.norm());
            IdempotentRay { direction: v / n, kappa: k / n, section: v, section_kappa: k }
        })
        .collect()
}

/// Pole `1/(κ s₀)` of `s(t) = s₀/(1 − κ s₀ t)`.
pub fn blowup_time<T: Scalar>(ray: &IdempotentRay<T>, s0: T) -> Result<T, VerdictError> {
    if s0.modulus() == 0.0 {
        return Err(VerdictError::ZeroScale);
    }
    Ok(T::one() / (ray.kappa * s0))
}

/// The side toward which a half-complete geodesic is defined for all time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Future,
    Past,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeodesicClass {
    PointGeodesic,
    Complete,
    HalfComplete(Side),
    BoundedInterval,
}

impl fmt::Display for GeodesicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeodesicClass::PointGeodesic => f.write_str("point_geodesic"),
            GeodesicClass::Complete => f.write_str("complete"),
            GeodesicClass::HalfComplete(Side::Future) => f.write_str("half_complete_future"),
            GeodesicClass::HalfComplete(Side::Past) => f.write_str("half_complete_past"),
            GeodesicClass::BoundedInterval => f.write_str("bounded_interval"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicVerdict {
    pub class: GeodesicClass,
    /// Maximal existence interval `(t₋, t₊)`, with infinite ends as `±∞`.
    pub endpoints: Option<(f64, f64)>,
    /// Set when the leaf is a hyperbola, a configuration without a published analysis.
    pub extrapolated: bool,
}

impl GeodesicVerdict {
    fn from_endpoints(tm: f64, tp: f64) -> Self {
        let class = match (tm.is_finite(), tp.is_finite()) {
            (false, false) => GeodesicClass::Complete,
            (true, true) => GeodesicClass::BoundedInterval,
            (true, false) => GeodesicClass::HalfComplete(Side::Future),
            (false, true) => GeodesicClass::HalfComplete(Side::Past),
        };
        Self { class, endpoints: Some((tm, tp)), extrapolated: false }
    }

    fn complete() -> Self {
        Self::from_endpoints(f64::NEG_INFINITY, f64::INFINITY)
    }
}

const MEMBERSHIP_TOL: f64 = 1e-9;

/// Maximal domain of the solution through `z0`, given in the adapted coordinates of `nf`.
pub fn geodesic_verdict(nf: &NormalForm<f64>, z0: &Vec3<f64>) -> Result<GeodesicVerdict, VerdictError> {
    geodesic_verdict_field(&build_field(nf)?, z0)
}

pub fn geodesic_verdict_field(f: &EAField<f64>, z0: &Vec3<f64>) -> Result<GeodesicVerdict, VerdictError> {
    if !z0.iter().all(|x| x.is_finite()) {
        return Err(VerdictError::NonFinite);
    }
    let n = z0.norm();
    let scale = f.coeffs.values().iter().map(|c| c.abs()).fold(0.0, f64::max);
    if n == 0.0 || f.eval(z0).norm() <= MEMBERSHIP_TOL * scale * n * n {
        return Ok(GeodesicVerdict { class: GeodesicClass::PointGeodesic, ..GeodesicVerdict::complete() });
    }
    let u = z0 / n;
    match f.coeffs {
        Coeffs::Case1 { a, b, .. } if a * b <= 0.0 => return Ok(GeodesicVerdict::complete()),
        Coeffs::Case3 { a, b } if a * b <= 0.0 => return Ok(GeodesicVerdict::complete()),
        Coeffs::Case3 { .. } | Coeffs::Case4 { .. } if u[2].abs() <= MEMBERSHIP_TOL => {
            return Ok(GeodesicVerdict::complete())
        }
        Coeffs::Case2 { a, b } => {
            if a == 0.0 {
                return Err(VerdictError::NotImplemented("case 2 with a = 0 has no per-geodesic description".into()));
            }
            let r = (a * a + b * b).sqrt();
            let on_plane = [(-b + r) / a, (-b - r) / a]
                .iter()
                .any(|rho| (u[1] - rho * u[2]).abs() <= MEMBERSHIP_TOL * (1.0 + rho.abs()));
            if !on_plane {
                return Ok(GeodesicVerdict { class: GeodesicClass::BoundedInterval, endpoints: None, extrapolated: false });
            }
        }
        _ => {}
    }
    for ray in find_idempotents(f) {
        let d = ray.direction;
        let s0 = u.dot(&d);
        if (u - d * s0).norm() <= MEMBERSHIP_TOL {
            let t = blowup_time(&ray, s0 * n)?;
            return Ok(if t > 0.0 {
                GeodesicVerdict::from_endpoints(f64::NEG_INFINITY, t)
            } else {
                GeodesicVerdict::from_endpoints(t, f64::INFINITY)
            });
        }
    }
    let tp = charts::escape_time(f, z0, Endpoint::Future)?.value;
    let tm = charts::escape_time(f, z0, Endpoint::Past)?.value;
    let mut v = GeodesicVerdict::from_endpoints(tm, tp);
    if let Coeffs::Case1 { .. } = f.coeffs {
        v.extrapolated = charts::leaf_at_infinity(f, z0)?.conic == ConicType::Hyperbola;
    }
    Ok(v)
}

/// Endpoints `(t₋, t₊)` detected by direct integration up to `|t| = horizon`; `None` on a side
/// where no blow-up was found.
pub fn estimate_endpoints(
    f: &EAField<f64>,
    z0: &Vec3<f64>,
    horizon: f64,
    opts: &IntegratorOptions,
) -> Result<(Option<f64>, Option<f64>), VerdictError> {
    let opts = IntegratorOptions { record: false, ..*opts };
    let fwd = integrate(f, *z0, (0.0, horizon), &opts)?.blow_up_time();
    let bwd = integrate(f, *z0, (0.0, -horizon), &opts)?.blow_up_time();
    Ok((bwd, fwd))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalType {
    Spacelike,
    Null,
    Timelike,
}

impl fmt::Display for CausalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CausalType::Spacelike => "spacelike",
            CausalType::Null => "null",
            CausalType::Timelike => "timelike",
        })
    }
}

/// `q(ẋ,ẋ) = B(z₀, Φ⁻¹z₀)` for `z0` in adapted coordinates.
pub fn metric_norm(nf: &NormalForm<f64>, z0: &Vec3<f64>) -> Result<f64, VerdictError> {
    let minv = nf.template().try_inverse().ok_or(FieldError::Singular)?;
    Ok(z0.dot(&(nf.gram() * minv * z0)))
}

pub fn causal_type(nf: &NormalForm<f64>, z0: &Vec3<f64>) -> Result<CausalType, VerdictError> {
    let q = metric_norm(nf, z0)?;
    let scale = z0.norm_squared() * nf.template().try_inverse().map(|m| m.norm()).unwrap_or(1.0);
    Ok(if q.abs() <= 1e-10 * scale {
        CausalType::Null
    } else if q > 0.0 {
        CausalType::Spacelike
    } else {
        CausalType::Timelike
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompleteMetric {
    /// Diagonal of `Φ⁻¹` in an orthonormal basis.
    pub nu: [f64; 3],
    /// Diagonal coefficients of `I2 − I1`.
    pub j: [f64; 3],
}

impl CompleteMetric {
    pub fn normal_form(&self) -> NormalForm<f64> {
        NormalForm::canonical(Params::Case1 { lambda: self.nu.map(|x| 1.0 / x) })
    }
}

/// Diagonal metric with `I2 − I1` positive definite: `ν₁, ν₂ > 1` on the spacelike directions,
/// and on the timelike one `0 < ν₃ < 1` (`r = 0`) or `ν₃ < 0` (`r = 1`).
pub fn build_complete_metric(r: i32) -> Result<CompleteMetric, VerdictError> {
    let nu = match r {
        0 => [2.0, 3.0, 0.5],
        1 => [2.0, 3.0, -1.0],
        _ => return Err(VerdictError::InvalidShift(r)),
    };
    let j = [nu[0] - 1.0, nu[1] - 1.0, 1.0 - nu[2]];
    debug_assert!(j.iter().all(|&x| x > 0.0));
    Ok(CompleteMetric { nu, j })
}
