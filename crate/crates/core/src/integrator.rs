//! Adaptive Dormand–Prince 8(5,3) integration of Euler–Arnold fields along real time,
//! complex rays and closed polygonal loops in complex time, with finite-time blow-up
//! detection and first-integral drift monitoring.
//!
//! Every path is parametrised by real arc length `s ≥ 0`; along a path with unit
//! direction `d` the time is `t = t₀ + d·s` and the integrated system is `dz/ds = d·f(z)`.

#![allow(clippy::excessive_precision)]

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{Scalar, Vec3};
use crate::euler_arnold::EAField;

#[derive(Debug, Error, PartialEq)]
pub enum IntegratorError {
    #[error("invalid time span: {0}")]
    InvalidSpan(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("loop is not closed (first and last vertex differ)")]
    OpenLoop,
    #[error("integration along loop segment {segment} stopped early: {reason}")]
    LoopInterrupted { segment: usize, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Norm above which a collapsing step is examined for blow-up.
    pub max_norm: f64,
    /// Step size below which integration stops.
    pub min_step: f64,
    pub max_steps: usize,
    /// Number of accepted steps in the `1/‖z‖` extrapolation.
    pub fit_window: usize,
    /// Keep every accepted step; otherwise only the endpoints are stored.
    pub record: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            max_norm: 1e8,
            min_step: 1e-12,
            max_steps: 2_000_000,
            fit_window: 10,
            record: true,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.rel_tol) || !pos(self.abs_tol) {
            return Err(IntegratorError::InvalidOptions("tolerances must be positive".into()));
        }
        if !pos(self.max_norm) || !pos(self.min_step) {
            return Err(IntegratorError::InvalidOptions("max_norm and min_step must be positive".into()));
        }
        if self.max_steps == 0 || self.fit_window < 2 {
            return Err(IntegratorError::InvalidOptions("max_steps ≥ 1 and fit_window ≥ 2 required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination<T> {
    SpanCompleted,
    BlowUp { t_est: T },
    StepCollapse { t_est: T },
    MaxSteps,
}

impl<T> Termination<T> {
    pub fn is_blow_up(&self) -> bool {
        matches!(self, Termination::BlowUp { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Termination::SpanCompleted => "SpanCompleted",
            Termination::BlowUp { .. } => "BlowUp",
            Termination::StepCollapse { .. } => "StepCollapse",
            Termination::MaxSteps => "MaxSteps",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample<T> {
    /// Arc length along the path.
    pub s: f64,
    pub t: T,
    pub z: Vec3<T>,
    /// `dz/ds`.
    pub dz: Vec3<T>,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T: Scalar> {
    pub samples: Vec<Sample<T>>,
    pub termination: Termination<T>,
    /// Maximum over accepted steps of `|Iₖ(z) − Iₖ(z₀)| / max(1, |Iₖ(z₀)|)`.
    pub integral_drift: [f64; 2],
    /// Largest `‖z‖` seen at accepted steps.
    pub sup_norm: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl<T: Scalar> Trajectory<T> {
    pub fn last(&self) -> &Sample<T> {
        self.samples.last().expect("trajectories hold at least the initial sample")
    }

    pub fn blow_up_time(&self) -> Option<T> {
        match self.termination {
            Termination::BlowUp { t_est } => Some(t_est),
            _ => None,
        }
    }

    /// Cubic Hermite interpolation at arc length `s` between recorded samples.
    pub fn dense(&self, s: f64) -> Option<Vec3<T>> {
        let n = self.samples.len();
        if n == 0 || s < self.samples[0].s || s > self.samples[n - 1].s {
            return None;
        }
        let i = self.samples.partition_point(|x| x.s <= s).clamp(1, n.max(2) - 1);
        if n == 1 {
            return Some(self.samples[0].z);
        }
        let (a, b) = (&self.samples[i - 1], &self.samples[i]);
        let h = b.s - a.s;
        if h == 0.0 {
            return Some(b.z);
        }
        let th = (s - a.s) / h;
        let h00 = 2.0 * th.powi(3) - 3.0 * th * th + 1.0;
        let h10 = th.powi(3) - 2.0 * th * th + th;
        let h01 = -2.0 * th.powi(3) + 3.0 * th * th;
        let h11 = th.powi(3) - th * th;
        let l = |x: f64| T::lit(x);
        Some(a.z * l(h00) + a.dz * l(h10 * h) + b.z * l(h01) + b.dz * l(h11 * h))
    }
}

// Dormand–Prince 8(5,3) tableau, digits as published.
const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;
const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;
const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;
const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

struct StepResult<T> {
    z: Vec3<T>,
    err: f64,
}

fn dop853_step<T: Scalar, F: Fn(&Vec3<T>) -> Vec3<T>>(
    rhs: &F,
    y: &Vec3<T>,
    k1: &Vec3<T>,
    h: f64,
    opts: &IntegratorOptions,
) -> StepResult<T> {
    let m = |c: f64| T::lit(c * h);
    let k2 = rhs(&(y + k1 * m(A21)));
    let k3 = rhs(&(y + k1 * m(A31) + k2 * m(A32)));
    let k4 = rhs(&(y + k1 * m(A41) + k3 * m(A43)));
    let k5 = rhs(&(y + k1 * m(A51) + k3 * m(A53) + k4 * m(A54)));
    let k6 = rhs(&(y + k1 * m(A61) + k4 * m(A64) + k5 * m(A65)));
    let k7 = rhs(&(y + k1 * m(A71) + k4 * m(A74) + k5 * m(A75) + k6 * m(A76)));
    let k8 = rhs(&(y + k1 * m(A81) + k4 * m(A84) + k5 * m(A85) + k6 * m(A86) + k7 * m(A87)));
    let k9 = rhs(&(y + k1 * m(A91) + k4 * m(A94) + k5 * m(A95) + k6 * m(A96) + k7 * m(A97) + k8 * m(A98)));
    let k10 = rhs(
        &(y + k1 * m(A101) + k4 * m(A104) + k5 * m(A105) + k6 * m(A106) + k7 * m(A107) + k8 * m(A108) + k9 * m(A109)),
    );
    let k11 = rhs(
        &(y + k1 * m(A111)
            + k4 * m(A114)
            + k5 * m(A115)
            + k6 * m(A116)
            + k7 * m(A117)
            + k8 * m(A118)
            + k9 * m(A119)
            + k10 * m(A1110)),
    );
    let k12 = rhs(
        &(y + k1 * m(A121)
            + k4 * m(A124)
            + k5 * m(A125)
            + k6 * m(A126)
            + k7 * m(A127)
            + k8 * m(A128)
            + k9 * m(A129)
            + k10 * m(A1210)
            + k11 * m(A1211)),
    );
    let l = |c: f64| T::lit(c);
    let inc = k1 * l(B1) + k6 * l(B6) + k7 * l(B7) + k8 * l(B8) + k9 * l(B9) + k10 * l(B10) + k11 * l(B11) + k12 * l(B12);
    let z = y + inc * T::lit(h);
    let e5 = inc - k1 * l(BHH1) - k9 * l(BHH2) - k12 * l(BHH3);
    let e8 = k1 * l(ER1)
        + k6 * l(ER6)
        + k7 * l(ER7)
        + k8 * l(ER8)
        + k9 * l(ER9)
        + k10 * l(ER10)
        + k11 * l(ER11)
        + k12 * l(ER12);
    let (mut s5, mut s8) = (0.0, 0.0);
    for i in 0..3 {
        let sk = opts.abs_tol + opts.rel_tol * y[i].modulus().max(z[i].modulus());
        s5 += (e5[i].modulus() / sk).powi(2);
        s8 += (e8[i].modulus() / sk).powi(2);
    }
    let mut deno = s8 + 0.01 * s5;
    if deno <= 0.0 {
        deno = 1.0;
    }
    let err = h.abs() * s8 * (1.0 / (deno * 3.0)).sqrt();
    let finite = z.iter().all(|c| c.modulus().is_finite());
    StepResult { z, err: if finite && err.is_finite() { err } else { f64::INFINITY } }
}

fn initial_step<T: Scalar, F: Fn(&Vec3<T>) -> Vec3<T>>(rhs: &F, y: &Vec3<T>, f0: &Vec3<T>, opts: &IntegratorOptions) -> f64 {
    let sk = |i: usize| opts.abs_tol + opts.rel_tol * y[i].modulus();
    let dnf: f64 = (0..3).map(|i| (f0[i].modulus() / sk(i)).powi(2)).sum();
    let dny: f64 = (0..3).map(|i| (y[i].modulus() / sk(i)).powi(2)).sum();
    let h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * (dny / dnf).sqrt() };
    let f1 = rhs(&(y + f0 * T::lit(h)));
    let der2 = (0..3).map(|i| ((f1[i] - f0[i]).modulus() / sk(i)).powi(2)).sum::<f64>().sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
    (100.0 * h).min(h1)
}

/// Zero of the least-squares line through `(s, 1/‖z‖)`, if the line decreases.
fn extrapolate_pole(window: &[(f64, f64)]) -> Option<f64> {
    let n = window.len() as f64;
    if window.len() < 2 {
        return None;
    }
    let s0 = window[0].0;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(s, y) in window {
        let x = s - s0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let den = n * sxx - sx * sx;
    if den <= 0.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / den;
    let icpt = (sy - slope * sx) / n;
    if !(slope < 0.0) {
        return None;
    }
    let root = s0 - icpt / slope;
    let last = window[window.len() - 1].0;
    (root.is_finite() && root >= s0 && root <= last + 1e3 * (last - s0).max(f64::MIN_POSITIVE)).then_some(root)
}

/// Integrate `dz/ds = dir·rhs(z)` for `s ∈ [0, s_end]`, reporting time `t = t0 + dir·s`.
/// `integrals` (if given) is evaluated at every accepted step for drift monitoring.
pub fn integrate_path<T, F, I>(
    rhs: F,
    integrals: Option<I>,
    z0: Vec3<T>,
    t0: T,
    dir: T,
    s_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory<T>, IntegratorError>
where
    T: Scalar,
    F: Fn(&Vec3<T>) -> Vec3<T>,
    I: Fn(&Vec3<T>) -> [T; 2],
{
    opts.validate()?;
    if !(s_end.is_finite() && s_end >= 0.0) {
        return Err(IntegratorError::InvalidSpan(format!("path length {s_end}")));
    }
    if !z0.iter().all(|c| c.modulus().is_finite()) {
        return Err(IntegratorError::InvalidSpan("initial condition is not finite".into()));
    }
    let g = |z: &Vec3<T>| rhs(z) * dir;
    let time = |s: f64| t0 + dir * T::lit(s);
    let inv0 = integrals.as_ref().map(|i| i(&z0));

    let mut z = z0;
    let mut k1 = g(&z);
    let mut s = 0.0;
    let mut drift = [0.0f64; 2];
    let mut sup = z.norm();
    let mut samples = vec![Sample { s, t: time(s), z, dz: k1 }];
    let mut window: std::collections::VecDeque<(f64, f64)> = std::collections::VecDeque::with_capacity(opts.fit_window);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let done_tol = 1e-14 * s_end.max(1.0);

    let mut h = if s_end > 0.0 { initial_step(&g, &z, &k1, opts).min(s_end) } else { 0.0 };
    let safe = 0.9;
    let beta = 0.04;
    let expo1 = 1.0 / 8.0 - 0.2 * beta;
    let (facc1, facc2): (f64, f64) = (1.0 / 0.333, 1.0 / 6.0);
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;

    let termination = loop {
        if s_end - s <= done_tol {
            break Termination::SpanCompleted;
        }
        if accepted + rejected >= opts.max_steps {
            break Termination::MaxSteps;
        }
        if h < opts.min_step {
            let norm = z.norm();
            let pole = extrapolate_pole(window.make_contiguous());
            break match pole {
                Some(p) if norm > opts.max_norm => Termination::BlowUp { t_est: time(p) },
                _ => Termination::StepCollapse { t_est: time(s) },
            };
        }
        let step = h.min(s_end - s);
        let r = dop853_step(&g, &z, &k1, step, opts);
        let fac11 = r.err.powf(expo1);
        if r.err <= 1.0 {
            let fac = facc2.max(facc1.min(fac11 / facold.powf(beta) / safe));
            let mut h_new = step / fac;
            facold = r.err.max(1e-4);
            accepted += 1;
            s += step;
            z = r.z;
            k1 = g(&z);
            let norm = z.norm();
            sup = sup.max(norm);
            if let (Some(i), Some(v0)) = (integrals.as_ref(), inv0) {
                let v = i(&z);
                for k in 0..2 {
                    let d = (v[k] - v0[k]).modulus() / v0[k].modulus().max(1.0);
                    drift[k] = drift[k].max(d);
                }
            }
            if window.len() == opts.fit_window {
                window.pop_front();
            }
            window.push_back((s, if norm > 0.0 { 1.0 / norm } else { f64::INFINITY }));
            let sample = Sample { s, t: time(s), z, dz: k1 };
            if opts.record || samples.len() == 1 {
                samples.push(sample);
            } else {
                samples[1] = sample;
            }
            if last_rejected {
                h_new = h_new.min(step);
            }
            last_rejected = false;
            h = h_new;
        } else {
            rejected += 1;
            last_rejected = true;
            h = step / facc1.min(fac11 / safe);
            if !h.is_finite() {
                h = step * 0.1;
            }
        }
    };
    Ok(Trajectory { samples, termination, integral_drift: drift, sup_norm: sup, accepted, rejected })
}

fn field_integrals<T: Scalar>(f: &EAField<T>) -> impl Fn(&Vec3<T>) -> [T; 2] + '_ {
    move |z| {
        let i = f.first_integrals(z);
        [i.i1, i.i2]
    }
}

/// Real-time integration over `t_span = (t0, t1)`; `t1 < t0` integrates backwards.
pub fn integrate<T: Scalar>(
    f: &EAField<T>,
    z0: Vec3<T>,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<Trajectory<T>, IntegratorError> {
    let (t0, t1) = t_span;
    if !t0.is_finite() || !t1.is_finite() {
        return Err(IntegratorError::InvalidSpan(format!("({t0}, {t1})")));
    }
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    integrate_path(|z| f.eval(z), Some(field_integrals(f)), z0, T::lit(t0), T::lit(dir), (t1 - t0).abs(), opts)
}

#[derive(Clone, Debug, PartialEq)]
pub enum ComplexPath {
    /// `t = s·e^{iθ}`, `s ∈ [0, r_max]`.
    Ray { theta: f64, r_max: f64 },
    /// Closed polyline of complex times; the solution starts at the first vertex.
    Loop(Vec<Complex64>),
}

/// Integrate along the ray `t = s·e^{iθ}` from `t = 0`.
pub fn integrate_complex_ray(
    f: &EAField<Complex64>,
    z0: Vec3<Complex64>,
    theta: f64,
    r_max: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory<Complex64>, IntegratorError> {
    if !theta.is_finite() {
        return Err(IntegratorError::InvalidSpan(format!("angle {theta}")));
    }
    let dir = Complex64::from_polar(1.0, theta);
    integrate_path(|z| f.eval(z), Some(field_integrals(f)), z0, Complex64::new(0.0, 0.0), dir, r_max, opts)
}

/// Continue the solution along a closed polyline in complex time and return `‖z_end − z₀‖`.
pub fn monodromy_loop(
    f: &EAField<Complex64>,
    z0: Vec3<Complex64>,
    vertices: &[Complex64],
    opts: &IntegratorOptions,
) -> Result<f64, IntegratorError> {
    monodromy_loop_with(|z| f.eval(z), z0, vertices, opts)
}

/// [`monodromy_loop`] for an arbitrary right-hand side.
pub fn monodromy_loop_with<F: Fn(&Vec3<Complex64>) -> Vec3<Complex64>>(
    rhs: F,
    z0: Vec3<Complex64>,
    vertices: &[Complex64],
    opts: &IntegratorOptions,
) -> Result<f64, IntegratorError> {
    let (first, last) = match (vertices.first(), vertices.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Ok(0.0),
    };
    if (first - last).norm() > 1e-12 * first.norm().max(1.0) {
        return Err(IntegratorError::OpenLoop);
    }
    let opts = IntegratorOptions { record: false, ..*opts };
    let mut z = z0;
    for (k, w) in vertices.windows(2).enumerate() {
        let d = w[1] - w[0];
        let len = d.norm();
        if len == 0.0 {
            continue;
        }
        let tr = integrate_path(&rhs, None::<fn(&Vec3<Complex64>) -> [Complex64; 2]>, z, w[0], d / len, len, &opts)?;
        if tr.termination != Termination::SpanCompleted {
            return Err(IntegratorError::LoopInterrupted { segment: k, reason: format!("{:?}", tr.termination) });
        }
        z = tr.last().z;
    }
    Ok((z - z0).norm())
}

/// Integrate along a [`ComplexPath`]; loops return the concatenated trajectory.
pub fn integrate_complex_path(
    f: &EAField<Complex64>,
    z0: Vec3<Complex64>,
    path: &ComplexPath,
    opts: &IntegratorOptions,
) -> Result<Trajectory<Complex64>, IntegratorError> {
    match path {
        ComplexPath::Ray { theta, r_max } => integrate_complex_ray(f, z0, *theta, *r_max, opts),
        ComplexPath::Loop(v) => {
            if v.len() < 2 || (v[0] - v[v.len() - 1]).norm() > 1e-12 * v[0].norm().max(1.0) {
                return Err(IntegratorError::OpenLoop);
            }
            let mut out: Option<Trajectory<Complex64>> = None;
            let mut z = z0;
            let mut s_off = 0.0;
            for w in v.windows(2) {
                let d = w[1] - w[0];
                let len = d.norm();
                if len == 0.0 {
                    continue;
                }
                let mut tr = integrate_path(|x| f.eval(x), Some(field_integrals(f)), z, w[0], d / len, len, opts)?;
                for smp in tr.samples.iter_mut() {
                    smp.s += s_off;
                }
                s_off += len;
                z = tr.last().z;
                let stop = tr.termination != Termination::SpanCompleted;
                out = Some(match out {
                    None => tr,
                    Some(mut acc) => {
                        acc.samples.extend(tr.samples.into_iter().skip(1));
                        acc.termination = tr.termination;
                        acc.integral_drift = [0, 1].map(|k| acc.integral_drift[k].max(tr.integral_drift[k]));
                        acc.sup_norm = acc.sup_norm.max(tr.sup_norm);
                        acc.accepted += tr.accepted;
                        acc.rejected += tr.rejected;
                        acc
                    }
                });
                if stop {
                    break;
                }
            }
            Ok(out.unwrap_or_else(|| Trajectory {
                samples: vec![Sample { s: 0.0, t: v[0], z: z0, dz: f.eval(&z0) }],
                termination: Termination::SpanCompleted,
                integral_drift: [0.0; 2],
                sup_norm: z0.norm(),
                accepted: 0,
                rejected: 0,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Delta;
    use crate::normal_form::InverseParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn case1(nu: [f64; 3]) -> EAField<f64> {
        EAField::from_inverse(InverseParams::Case1 { nu }, Delta::Plus)
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn zero_field_is_constant() {
        let f = case1([1.0, 1.0, 1.0]);
        let z0 = Vec3::new(0.3, -2.0, 1.0);
        let tr = integrate(&f, z0, (0.0, 5.0), &IntegratorOptions::default()).unwrap();
        assert_eq!(tr.termination, Termination::SpanCompleted);
        assert!(tr.samples.iter().all(|s| s.z == z0));
    }

    #[test]
    fn idempotent_blow_up_time() {
        // ν = (1,3,2): (a,b,c) = (1,1,2); section (1/√2, 1/√2, 1) has κ = 1.
        let f = case1([1.0, 3.0, 2.0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for s0 in [0.5, 1.0, 2.0, 4.0] {
            let tr = integrate(&f, Vec3::new(r, r, 1.0) * s0, (0.0, 10.0), &IntegratorOptions::default()).unwrap();
            let t = tr.blow_up_time().expect("blow-up");
            assert!((t - 1.0 / s0).abs() * s0 <= 1e-6, "s0={s0}: {t}");
        }
    }

    #[test]
    fn backward_integration_finds_past_pole() {
        let f = case1([1.0, 3.0, 2.0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let tr = integrate(&f, Vec3::new(-r, -r, -1.0), (0.0, -10.0), &IntegratorOptions::default()).unwrap();
        let t = tr.blow_up_time().unwrap();
        assert!((t + 1.0).abs() < 1e-6);
        let fwd = integrate(&f, Vec3::new(-r, -r, -1.0), (0.0, 10.0), &IntegratorOptions::default()).unwrap();
        assert_eq!(fwd.termination, Termination::SpanCompleted);
    }

    #[test]
    fn complete_field_stays_bounded() {
        // ν = (1,2,3): J = 2.5·I1 − I2 = 1.5z₁² + 0.5z₂² + 0.5z₃² is conserved and positive definite.
        let f = case1([1.0, 2.0, 3.0]);
        let j = |z: &Vec3<f64>| 1.5 * z[0] * z[0] + 0.5 * z[1] * z[1] + 0.5 * z[2] * z[2];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let z0 = crate::sampling::unit_vector(&mut rng);
            let tr = integrate(&f, z0, (0.0, 100.0), &IntegratorOptions::default()).unwrap();
            assert_eq!(tr.termination, Termination::SpanCompleted);
            assert!(tr.sup_norm.powi(2) <= j(&z0) / 0.5 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn drift_is_small_on_unit_interval() {
        let f = case1([0.7, 1.9, -1.3]);
        let tr = integrate(&f, Vec3::new(0.2, 0.5, -0.4), (0.0, 10.0), &IntegratorOptions::default()).unwrap();
        assert!(tr.integral_drift[0] < 1e-10 && tr.integral_drift[1] < 1e-10, "{:?}", tr.integral_drift);
    }

    #[test]
    fn homogeneity_time_scaling() {
        let f = case1([0.7, 1.9, 1.3]);
        let z0 = Vec3::new(0.2, 0.5, -0.4);
        let sigma = 2.5;
        let a = integrate(&f, z0, (0.0, 2.0 * sigma), &IntegratorOptions::default()).unwrap();
        let b = integrate(&f, z0 * sigma, (0.0, 2.0), &IntegratorOptions::default()).unwrap();
        assert!((b.last().z - a.last().z * sigma).norm() < 1e-8);
    }

    #[test]
    fn dense_output_interpolates() {
        let f = case1([0.7, 1.9, 1.3]);
        let tr = integrate(&f, Vec3::new(0.2, 0.5, -0.4), (0.0, 3.0), &IntegratorOptions::default()).unwrap();
        let mid = tr.dense(1.2345).unwrap();
        let direct = integrate(&f, Vec3::new(0.2, 0.5, -0.4), (0.0, 1.2345), &IntegratorOptions::default()).unwrap();
        assert!((mid - direct.last().z).norm() < 1e-6);
        assert!(tr.dense(-1.0).is_none());
    }

    #[test]
    fn invalid_span_rejected() {
        let f = case1([1.0, 2.0, 3.0]);
        assert!(integrate(&f, Vec3::zeros(), (0.0, f64::NAN), &IntegratorOptions::default()).is_err());
        let bad = IntegratorOptions { rel_tol: 0.0, ..Default::default() };
        assert!(integrate(&f, Vec3::zeros(), (0.0, 1.0), &bad).is_err());
    }

    fn complex_case1(nu: [f64; 3]) -> EAField<Complex64> {
        EAField::from_inverse(InverseParams::Case1 { nu: nu.map(c) }, Delta::Plus)
    }

    #[test]
    fn real_ray_matches_real_integration() {
        let fr = case1([0.7, 1.9, 1.3]);
        let fc = complex_case1([0.7, 1.9, 1.3]);
        let z0 = Vec3::new(0.2, 0.5, -0.4);
        let a = integrate(&fr, z0, (0.0, 3.0), &IntegratorOptions::default()).unwrap();
        let b = integrate_complex_ray(&fc, z0.map(c), 0.0, 3.0, &IntegratorOptions::default()).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x.z - y.z.map(|w| w.re)).norm() < 1e-14);
            assert!(y.z.iter().all(|w| w.im == 0.0));
        }
    }

    #[test]
    fn complex_ray_through_pole() {
        let f = complex_case1([1.0, 3.0, 2.0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s0 = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let t_star = 1.0 / s0;
        let z0 = Vec3::new(c(r), c(r), c(1.0)) * s0;
        let tr = integrate_complex_ray(&f, z0, t_star.arg(), 10.0, &IntegratorOptions::default()).unwrap();
        let t = tr.blow_up_time().expect("blow-up");
        assert!((t - t_star).norm() <= 1e-5);
    }

    #[test]
    fn loops_return_to_start() {
        let f = complex_case1([1.0, 3.0, 2.0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let z0 = Vec3::new(c(r), c(r), c(1.0));
        // circle (as a 64-gon) of radius 1/2 around the pole t* = 1
        let poly: Vec<Complex64> =
            (0..=64).map(|k| c(1.0) - Complex64::from_polar(0.5, std::f64::consts::TAU * k as f64 / 64.0)).collect();
        // start at t = 1/2 on the polygon: move there from t = 0 first
        let start = integrate_complex_ray(&f, z0, 0.0, 0.5, &IntegratorOptions::default()).unwrap().last().z;
        let dev = monodromy_loop(&f, start, &poly, &IntegratorOptions::default()).unwrap();
        assert!(dev <= 1e-8, "{dev}");
        assert_eq!(monodromy_loop(&f, start, &[c(0.5)], &IntegratorOptions::default()).unwrap(), 0.0);
        assert_eq!(monodromy_loop(&f, start, &[c(0.5), c(1.0)], &IntegratorOptions::default()), Err(IntegratorError::OpenLoop));
    }

    #[test]
    fn generic_square_loop() {
        let f = complex_case1([0.8, 1.7, -1.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z0 = Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)).map(c);
        let ctr = Complex64::new(2.0, 2.0);
        let sq = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5)].map(|(x, y)| ctr + Complex64::new(x, y));
        let tr = integrate_complex_path(&f, z0, &ComplexPath::Loop(vec![c(0.0), sq[0], c(0.0)]), &IntegratorOptions::default());
        assert!(tr.is_ok());
        let start = integrate_path(|z| f.eval(z), None::<fn(&Vec3<Complex64>) -> [Complex64; 2]>, z0, c(0.0), sq[0] / sq[0].norm(), sq[0].norm(), &IntegratorOptions::default())
            .unwrap()
            .last()
            .z;
        let dev = monodromy_loop(&f, start, &sq, &IntegratorOptions::default()).unwrap();
        assert!(dev <= 1e-8, "{dev}");
    }
}
