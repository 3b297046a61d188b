//! JSON reports for `classify`, `verdict` and `idempotents`.
//!
//! Keys are fixed; objects are written with sorted keys. Real scalars are JSON numbers,
//! complex scalars are `{"re": .., "im": ..}`, and non-finite values are the strings
//! `"inf"`, `"-inf"` or `"nan"`.

use num_complex::Complex64;
use serde_json::{json, Map, Value};
use sl2geo::algebra::{Mat3, Scalar, Vec3};
use sl2geo::charts::infinity_singularities;
use sl2geo::completeness::{causal_type, find_idempotents, geodesic_verdict, metric_norm, metric_verdict, VerdictError};
use sl2geo::euler_arnold::{build_field, EAField};
use sl2geo::normal_form::{reduce, NormalForm};

use crate::input::InputError;

pub trait ToJson {
    fn json(&self) -> Value;
}

impl ToJson for f64 {
    fn json(&self) -> Value {
        if self.is_finite() {
            json!(self)
        } else if self.is_nan() {
            json!("nan")
        } else if *self > 0.0 {
            json!("inf")
        } else {
            json!("-inf")
        }
    }
}

impl ToJson for Complex64 {
    fn json(&self) -> Value {
        json!({ "re": self.re.json(), "im": self.im.json() })
    }
}

pub fn vector<T: ToJson>(v: &Vec3<T>) -> Value {
    Value::Array(v.iter().map(ToJson::json).collect())
}

fn named<T: ToJson>(names: &[&str], values: &[T]) -> Value {
    let mut m = Map::new();
    for (n, v) in names.iter().zip(values) {
        m.insert(n.to_string(), v.json());
    }
    Value::Object(m)
}

pub fn normal_form<T: Scalar>(phi: &Mat3<T>) -> Result<NormalForm<T>, InputError> {
    reduce(phi).map_err(|e| InputError(format!("normal form: {e}")))
}

pub fn field<T: Scalar>(nf: &NormalForm<T>) -> Result<EAField<T>, InputError> {
    build_field(nf).map_err(|e| InputError(format!("field: {e}")))
}

fn idempotent_list<T: Scalar + ToJson>(nf: &NormalForm<T>, f: &EAField<T>, causal: impl Fn(&Vec3<T>) -> Option<String>) -> Value {
    Value::Array(
        find_idempotents(f)
            .iter()
            .map(|r| {
                let mut o = json!({
                    "direction": vector(&r.direction),
                    "direction_standard": vector(&nf.to_standard(&r.direction)),
                    "kappa": r.kappa.json(),
                    "section": vector(&r.section),
                    "section_kappa": r.section_kappa.json(),
                });
                if let Some(c) = causal(&r.direction) {
                    o["causal_type"] = json!(c);
                }
                o
            })
            .collect(),
    )
}

fn classify_base<T: Scalar + ToJson>(nf: &NormalForm<T>, f: &EAField<T>, mode: &str) -> Value {
    let v = metric_verdict(nf);
    json!({
        "mode": mode,
        "case": nf.case().number(),
        "delta": nf.delta().sign(),
        "params": named(nf.params.names(), &nf.params.values()),
        "inverse_params": nf.inverse_params().map(|p| named(p.names(), &p.values())).unwrap_or(Value::Null),
        "coefficients": named(f.coeffs.names(), &f.coeffs.values()),
        "field": if f.is_zero() { "zero" } else { "nonzero" },
        "complete": v.complete,
        "criterion": v.criterion_value.map(|x| x.json()).unwrap_or(Value::Null),
        "criterion_id": v.criterion_id.to_string(),
    })
}

pub fn classify_real(phi: &Mat3<f64>) -> Result<Value, InputError> {
    let nf = normal_form(phi)?;
    let f = field(&nf)?;
    let mut r = classify_base(&nf, &f, "real");
    r["idempotents"] = idempotent_list(&nf, &f, |d| causal_type(&nf, d).ok().map(|c| c.to_string()));
    r["infinity_singularities"] = Value::Array(
        infinity_singularities(&f)
            .iter()
            .map(|s| {
                json!({
                    "chart": s.chart.to_string(),
                    "coords": [s.coords[0].json(), s.coords[1].json()],
                    "kind": format!("{:?}", s.kind),
                })
            })
            .collect(),
    );
    Ok(r)
}

pub fn classify_complex(phi: &Mat3<Complex64>) -> Result<Value, InputError> {
    let nf = normal_form(phi)?;
    let f = field(&nf)?;
    let mut r = classify_base(&nf, &f, "complex");
    r["idempotents"] = idempotent_list(&nf, &f, |_| None);
    Ok(r)
}

pub fn idempotents_real(phi: &Mat3<f64>) -> Result<Value, InputError> {
    let nf = normal_form(phi)?;
    let f = field(&nf)?;
    Ok(idempotent_list(&nf, &f, |d| causal_type(&nf, d).ok().map(|c| c.to_string())))
}

pub fn idempotents_complex(phi: &Mat3<Complex64>) -> Result<Value, InputError> {
    let nf = normal_form(phi)?;
    let f = field(&nf)?;
    Ok(idempotent_list(&nf, &f, |_| None))
}

/// Geodesic verdict for `z0` given in standard coordinates.
pub fn verdict(phi: &Mat3<f64>, z0: &Vec3<f64>) -> Result<Value, InputError> {
    let nf = normal_form(phi)?;
    let za = nf.to_adapted(z0);
    let base = json!({
        "z0_adapted": vector(&za),
        "causal_type": causal_type(&nf, &za).map(|c| c.to_string()).map_err(|e| InputError(e.to_string()))?,
        "metric_norm": metric_norm(&nf, &za).map_err(|e| InputError(e.to_string()))?.json(),
    });
    let mut r = base;
    match geodesic_verdict(&nf, &za) {
        Ok(v) => {
            r["class"] = json!(v.class.to_string());
            r["endpoints"] = v.endpoints.map(|(a, b)| json!([a.json(), b.json()])).unwrap_or(Value::Null);
            r["extrapolated"] = json!(v.extrapolated);
        }
        Err(VerdictError::NotImplemented(reason)) => {
            r["class"] = json!("not_implemented");
            r["endpoints"] = Value::Null;
            r["extrapolated"] = json!(false);
            r["reason"] = json!(reason);
        }
        Err(e) => return Err(InputError(e.to_string())),
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: [f64; 3]) -> Mat3<f64> {
        Mat3::from_diagonal(&Vec3::new(d[0], d[1], d[2]))
    }

    #[test]
    fn classify_examples() {
        let r = classify_real(&diag([1.0, 0.5, 1.0 / 3.0])).unwrap();
        assert_eq!(r["case"], 1);
        assert_eq!(r["complete"], true);
        assert!((r["criterion"].as_f64().unwrap() + 2.0).abs() < 1e-12);
        let r = classify_real(&Mat3::identity()).unwrap();
        assert_eq!(r["complete"], true);
        assert_eq!(r["field"], "zero");
        let c = Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 3.0).map(|x| Complex64::new(x, 0.0)));
        assert_eq!(classify_complex(&c).unwrap()["complete"], false);
    }

    #[test]
    fn non_finite_as_strings() {
        assert_eq!(f64::INFINITY.json(), json!("inf"));
        assert_eq!(f64::NEG_INFINITY.json(), json!("-inf"));
        assert_eq!(1.5f64.json(), json!(1.5));
    }
}
