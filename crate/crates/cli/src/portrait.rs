//! Portrait of the foliation at infinity: singular points in every chart, and leaves traced in
//! the X chart from seeded random points.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sl2geo::algebra::{Mat3, Vec3};
use sl2geo::charts::{field_in_chart, infinity_singularities, leaf_at_infinity, ChartField, ChartId};

use crate::input::InputError;
use crate::report::{field, normal_form};
use crate::trajectory::num;

const STEP: f64 = 0.02;
const STEPS: usize = 250;
const BOX: f64 = 5.0;

fn unit_field(cf: &ChartField, p: [f64; 2], floor: f64) -> Option<[f64; 2]> {
    let v = cf.at_infinity(p);
    let n = v[0].hypot(v[1]);
    (n > floor).then(|| [v[0] / n, v[1] / n])
}

/// Arc-length RK4 along the normalised field, in direction `sign`. Stops next to a singular
/// point, where every leaf of the pencil meets.
fn trace(cf: &ChartField, p0: [f64; 2], sign: f64, floor: f64, stops: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    let mut p = p0;
    let h = sign * STEP;
    let add = |p: [f64; 2], k: [f64; 2], s: f64| [p[0] + s * k[0], p[1] + s * k[1]];
    for _ in 0..STEPS {
        let Some(k1) = unit_field(cf, p, floor) else { break };
        let Some(k2) = unit_field(cf, add(p, k1, h / 2.0), floor) else { break };
        let Some(k3) = unit_field(cf, add(p, k2, h / 2.0), floor) else { break };
        let Some(k4) = unit_field(cf, add(p, k3, h), floor) else { break };
        p = [
            p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if p[0].abs() > BOX || p[1].abs() > BOX || stops.iter().any(|s| (p[0] - s[0]).hypot(p[1] - s[1]) < 2.0 * STEP) {
            break;
        }
        pts.push(p);
    }
    pts
}

pub fn portrait(phi: &Mat3<f64>, seed: u64, leaves: usize) -> Result<String, InputError> {
    let nf = normal_form(phi)?;
    let f = field(&nf)?;
    let mut out = format!("# seed={seed} leaves={leaves} chart=x\ntype,id,chart,c1,c2,label\n");
    let singular = infinity_singularities(&f);
    for (i, s) in singular.iter().enumerate() {
        let _ = writeln!(out, "singular,{i},{},{},{},{:?}", s.chart, num(s.coords[0]), num(s.coords[1]), s.kind);
    }
    if f.is_zero() {
        return Ok(out);
    }
    let cf = field_in_chart(&f, ChartId::X).map_err(|e| InputError(e.to_string()))?;
    let floor = 1e-9 * f.coeffs.values().iter().map(|c| c.abs()).fold(0.0, f64::max);
    let stops: Vec<[f64; 2]> = singular.iter().filter(|s| s.chart == ChartId::X).map(|s| s.coords).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for id in 0..leaves {
        let p0 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let label = leaf_at_infinity(&f, &Vec3::new(p0[0], p0[1], 1.0))
            .map(|l| format!("{:?}", l.conic))
            .unwrap_or_else(|_| "Unknown".into());
        let mut back = trace(&cf, p0, -1.0, floor, &stops);
        back.reverse();
        back.push(p0);
        back.extend(trace(&cf, p0, 1.0, floor, &stops));
        for p in back {
            let _ = writeln!(out, "leaf,{id},x,{},{},{label}", num(p[0]), num(p[1]));
        }
    }
    Ok(out)
}
