//! Seeded random generation of automorphisms, adapted frames, normal-form parameters and
//! self-adjoint maps. Used by tests, scans and the verification suite.

use rand::Rng;

use crate::algebra::{Mat3, Vec3};
use crate::normal_form::{Case, Params};

fn rot12(t: f64) -> Mat3<f64> {
    let (s, c) = t.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn boost13(r: f64) -> Mat3<f64> {
    let (ch, sh) = (r.cosh(), r.sinh());
    Mat3::new(ch, 0.0, sh, 0.0, 1.0, 0.0, sh, 0.0, ch)
}

/// Random element of SO(2,1) preserving the Killing form `diag(1,1,−1)`.
pub fn random_automorphism<R: Rng>(rng: &mut R, max_rapidity: f64) -> Mat3<f64> {
    let t1 = rng.gen_range(0.0..std::f64::consts::TAU);
    let t2 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = rng.gen_range(-max_rapidity..=max_rapidity);
    rot12(t1) * boost13(r) * rot12(t2)
}

/// Random orthonormal frame (columns) with `B(vᵢ,vⱼ) = diag(1,1,−1)`.
pub fn orthonormal_frame<R: Rng>(rng: &mut R) -> Mat3<f64> {
    random_automorphism(rng, 1.0)
}

/// Random pseudo-orthonormal frame (columns) with Gram `[[1,0,0],[0,0,1],[0,1,0]]`.
pub fn pseudo_orthonormal_frame<R: Rng>(rng: &mut R) -> Mat3<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u0 = Mat3::new(1.0, 0.0, 0.0, 0.0, s, s, 0.0, s, -s);
    let k = rng.gen_range(0.5..2.0);
    random_automorphism(rng, 1.0) * u0 * Mat3::from_diagonal(&Vec3::new(1.0, k, 1.0 / k))
}

fn signed<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let x = rng.gen_range(lo..hi);
    if rng.gen_bool(0.5) {
        x
    } else {
        -x
    }
}

/// Random non-degenerate normal-form parameters for `case`.
pub fn random_params<R: Rng>(rng: &mut R, case: Case) -> Params<f64> {
    match case {
        Case::Case1 => loop {
            let l = [signed(rng, 0.4, 2.5), signed(rng, 0.4, 2.5), signed(rng, 0.4, 2.5)];
            if (l[0] - l[1]).abs() >= 0.2 && (l[1] - l[2]).abs() >= 0.2 && (l[0] - l[2]).abs() >= 0.2 {
                break Params::Case1 { lambda: l };
            }
        },
        Case::Case2 => {
            Params::Case2 { mu: signed(rng, 0.4, 2.5), alpha: rng.gen_range(-2.0..2.0), beta: rng.gen_range(0.3..2.0) }
        }
        Case::Case3 => loop {
            let (mu, lambda) = (signed(rng, 0.5, 2.0), signed(rng, 0.5, 2.0));
            if (mu - lambda).abs() >= 0.2 {
                break Params::Case3 { mu, lambda, zeta: signed(rng, 0.3, 2.0) };
            }
        },
        Case::Case4 => Params::Case4 { lambda: signed(rng, 0.4, 2.5), zeta: rng.gen_range(0.3..2.0) },
    }
}

/// Random frame of the kind adapted to `case`.
pub fn random_frame<R: Rng>(rng: &mut R, case: Case) -> Mat3<f64> {
    if case.pseudo_orthonormal() {
        pseudo_orthonormal_frame(rng)
    } else {
        orthonormal_frame(rng)
    }
}

/// `P·template·P⁻¹` for a random adapted frame `P`.
pub fn phi_from_params<R: Rng>(rng: &mut R, params: &Params<f64>) -> Mat3<f64> {
    let p = random_frame(rng, params.case());
    p * params.template() * p.try_inverse().expect("frames are invertible")
}

/// Random self-adjoint map (standard coordinates) whose normal form is of type `case`.
pub fn random_phi<R: Rng>(rng: &mut R, case: Case) -> Mat3<f64> {
    let params = random_params(rng, case);
    phi_from_params(rng, &params)
}

/// Uniform random point on the unit sphere.
pub fn unit_vector<R: Rng>(rng: &mut R) -> Vec3<f64> {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}
