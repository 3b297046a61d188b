//! Self-check suites run by `verify`. Each suite draws seeded samples and counts how many pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sl2geo::algebra::{bracket_std, check_self_adjoint, orthonormal_gram, AlgebraElement, Mat3, SelfAdjointMap, Vec3};
use sl2geo::charts::{escape_time, to_chart, ChartId, Endpoint};
use sl2geo::completeness::{build_complete_metric, causal_type, find_idempotents, metric_verdict, CausalType};
use sl2geo::euler_arnold::{build_field, lax_rhs};
use sl2geo::integrator::{integrate, IntegratorOptions, Termination};
use sl2geo::normal_form::{reduce, Case, NormalForm};
use sl2geo::sampling::{random_params, random_phi, unit_vector};

const CASES: [Case; 4] = [Case::Case1, Case::Case2, Case::Case3, Case::Case4];

#[derive(Clone, Copy, Debug)]
pub struct Faults {
    /// Added to the `(1,1)` entry of the Killing Gram matrix used by the invariance suite.
    pub gram_perturbation: f64,
    /// Largest accepted relative first-integral drift over `[0, 10]`.
    pub drift_bound: f64,
}

impl Default for Faults {
    fn default() -> Self {
        Self { gram_perturbation: 0.0, drift_bound: 1e-8 }
    }
}

pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
}

impl SuiteResult {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    CASES[rng.gen_range(0..4)]
}

fn random_vec(rng: &mut ChaCha8Rng) -> Vec3<f64> {
    Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn count(n: usize, mut check: impl FnMut() -> bool) -> (usize, usize) {
    ((0..n).filter(|_| check()).count(), n)
}

fn ad_invariance(rng: &mut ChaCha8Rng, faults: &Faults) -> (usize, usize) {
    let mut g: Mat3<f64> = orthonormal_gram();
    g[(0, 0)] += faults.gram_perturbation;
    count(200, || {
        let (x, y, z) = (random_vec(rng), random_vec(rng), random_vec(rng));
        let lhs = bracket_std(&x, &y).dot(&(g * z));
        let rhs = -y.dot(&(g * bracket_std(&x, &z)));
        (lhs - rhs).abs() <= 1e-12
    })
}

fn sampled_maps_self_adjoint(rng: &mut ChaCha8Rng) -> (usize, usize) {
    count(200, || {
        let case = random_case(rng);
        check_self_adjoint(&random_phi(rng, case), 1e-10)
    })
}

fn normal_form_round_trip(rng: &mut ChaCha8Rng) -> (usize, usize) {
    count(200, || {
        let case = random_case(rng);
        let phi = random_phi(rng, case);
        reduce(&phi).is_ok_and(|nf| nf.case() == case && (nf.reconstruct() - phi).norm() <= 1e-8 * phi.norm())
    })
}

fn integrals_annihilate_field(rng: &mut ChaCha8Rng) -> (usize, usize) {
    count(200, || {
        let case = random_case(rng);
        let nf = NormalForm::canonical(random_params(rng, case));
        let f = build_field(&nf).expect("canonical forms are invertible");
        let z = random_vec(rng);
        let e = f.eval(&z);
        let (g1, g2) = f.integral_gradients(&z);
        g1.dot(&e).abs() <= 1e-12 && g2.dot(&e).abs() <= 1e-12
    })
}

fn lax_pair_matches_field(rng: &mut ChaCha8Rng) -> (usize, usize) {
    count(100, || {
        let case = random_case(rng);
        let phi = random_phi(rng, case);
        let (Ok(nf), Ok(sam)) = (reduce(&phi), SelfAdjointMap::new(phi)) else { return false };
        let f = build_field(&nf).expect("reduced forms are invertible");
        let z = random_vec(rng);
        let lax = lax_rhs(&sam, &AlgebraElement::standard(nf.to_standard(&z))).expect("standard basis");
        let e = f.eval(&z);
        (nf.to_adapted(&lax.coords) - e).norm() <= 1e-8 * (1.0 + e.norm())
    })
}

fn drift(rng: &mut ChaCha8Rng, faults: &Faults) -> (usize, usize) {
    let opts = IntegratorOptions { record: false, ..Default::default() };
    let mut passed = 0;
    let mut total = 0;
    while total < 40 {
        let f = build_field(&NormalForm::canonical(random_params(rng, CASES[total % 4]))).expect("invertible");
        let z0 = unit_vector(rng) * rng.gen_range(0.05..0.25);
        if integrate(&f, z0, (0.0, 20.0), &opts).expect("valid span").termination != Termination::SpanCompleted {
            continue;
        }
        total += 1;
        let tr = integrate(&f, z0, (0.0, 10.0), &opts).expect("valid span");
        passed += (tr.integral_drift[0].max(tr.integral_drift[1]) <= faults.drift_bound) as usize;
    }
    (passed, total)
}

fn idempotents_certified_and_null(rng: &mut ChaCha8Rng) -> (usize, usize) {
    let mut passed = 0;
    let mut total = 0;
    for _ in 0..100 {
        let case = random_case(rng);
        let nf = NormalForm::canonical(random_params(rng, case));
        let f = build_field(&nf).expect("invertible");
        for r in find_idempotents(&f) {
            total += 1;
            let residual = (f.eval(&r.direction) - r.direction * r.kappa).norm();
            passed += (residual <= 1e-10 && causal_type(&nf, &r.direction).ok() == Some(CausalType::Null)) as usize;
        }
    }
    (passed, total)
}

fn chart_round_trips(rng: &mut ChaCha8Rng) -> (usize, usize) {
    count(200, || {
        let z = random_vec(rng);
        ChartId::ALL.iter().all(|&c| {
            to_chart(&z, ChartId::Affine, c)
                .and_then(|p| to_chart(&p, c, ChartId::Affine))
                .is_ok_and(|back| (back - z).norm() <= 1e-10 * (1.0 + z.norm()))
        })
    })
}

fn escape_vs_integration(rng: &mut ChaCha8Rng) -> (usize, usize) {
    let opts = IntegratorOptions { record: false, ..Default::default() };
    let mut passed = 0;
    let mut total = 0;
    while total < 12 {
        let case = [Case::Case1, Case::Case3, Case::Case4][total % 3];
        let nf = NormalForm::canonical(random_params(rng, case));
        let f = build_field(&nf).expect("invertible");
        let z0 = unit_vector(rng);
        let Ok(q) = escape_time(&f, &z0, Endpoint::Future) else { continue };
        if !q.finite {
            continue;
        }
        total += 1;
        let t = integrate(&f, z0, (0.0, 2.0 * q.value), &opts).expect("valid span").blow_up_time();
        passed += t.is_some_and(|t| (t - q.value).abs() <= 1e-4 * q.value.abs()) as usize;
    }
    (passed, total)
}

fn complete_metrics() -> (usize, usize) {
    let ok = [0, 1].iter().filter(|&&r| {
        build_complete_metric(r).is_ok_and(|m| m.j.iter().all(|&x| x > 0.0) && metric_verdict(&m.normal_form()).complete)
    });
    (ok.count(), 2)
}

pub fn run(seed: u64, faults: &Faults) -> Vec<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = &mut rng;
    let suites: Vec<(&'static str, (usize, usize))> = vec![
        ("ad_invariance", ad_invariance(r, faults)),
        ("self_adjoint_sampling", sampled_maps_self_adjoint(r)),
        ("normal_form_round_trip", normal_form_round_trip(r)),
        ("first_integrals", integrals_annihilate_field(r)),
        ("lax_pair", lax_pair_matches_field(r)),
        ("integral_drift", drift(r, faults)),
        ("idempotents", idempotents_certified_and_null(r)),
        ("chart_round_trip", chart_round_trips(r)),
        ("escape_quadrature", escape_vs_integration(r)),
        ("complete_metric", complete_metrics()),
    ];
    suites.into_iter().map(|(name, (passed, total))| SuiteResult { name, passed, total }).collect()
}
