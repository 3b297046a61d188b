//! Trajectory CSV for `integrate`: header, one row per accepted step, and a `#` footer with the
//! termination reason and first-integral drift. Coordinates are in the standard basis.

use std::fmt::Write;

use num_complex::Complex64;
use sl2geo::algebra::{Mat3, Scalar, Vec3};
use sl2geo::integrator::{integrate, integrate_complex_path, ComplexPath, IntegratorOptions, Termination, Trajectory};

use crate::input::InputError;
use crate::report::{field, normal_form};

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn footer<T: Scalar>(out: &mut String, tr: &Trajectory<T>, t_fields: impl Fn(T) -> String) {
    let (name, t) = match tr.termination {
        Termination::BlowUp { t_est } | Termination::StepCollapse { t_est } => (tr.termination.name(), Some(t_est)),
        _ => (tr.termination.name(), None),
    };
    let _ = write!(out, "# termination={name}");
    if let Some(t) = t {
        let _ = write!(out, " {}", t_fields(t));
    }
    let _ = writeln!(
        out,
        " drift_i1={} drift_i2={} accepted={} rejected={}",
        num(tr.integral_drift[0]),
        num(tr.integral_drift[1]),
        tr.accepted,
        tr.rejected
    );
}

pub fn real(phi: &Mat3<f64>, z0: &Vec3<f64>, tspan: (f64, f64), opts: &IntegratorOptions) -> Result<String, InputError> {
    let nf = normal_form(phi)?;
    let f = field(&nf)?;
    let tr = integrate(&f, nf.to_adapted(z0), tspan, opts).map_err(|e| InputError(e.to_string()))?;
    let mut out = String::from("t,z1,z2,z3\n");
    for s in &tr.samples {
        let z = nf.to_standard(&s.z);
        let _ = writeln!(out, "{},{},{},{}", num(s.t), num(z[0]), num(z[1]), num(z[2]));
    }
    footer(&mut out, &tr, |t| format!("t_est={}", num(t)));
    Ok(out)
}

pub fn complex(
    phi: &Mat3<Complex64>,
    z0: &Vec3<Complex64>,
    path: &ComplexPath,
    opts: &IntegratorOptions,
) -> Result<String, InputError> {
    let nf = normal_form(phi)?;
    let f = field(&nf)?;
    let tr = integrate_complex_path(&f, nf.to_adapted(z0), path, opts).map_err(|e| InputError(e.to_string()))?;
    let mut out = String::from("t_re,t_im,z1_re,z1_im,z2_re,z2_im,z3_re,z3_im\n");
    for s in &tr.samples {
        let z = nf.to_standard(&s.z);
        let _ = write!(out, "{},{}", num(s.t.re), num(s.t.im));
        for c in z.iter() {
            let _ = write!(out, ",{},{}", num(c.re), num(c.im));
        }
        out.push('\n');
    }
    footer(&mut out, &tr, |t| format!("t_est_re={} t_est_im={}", num(t.re), num(t.im)));
    Ok(out)
}
