//! One stretch run: the flat unit disc pushed from Ball(1) out to the sphere of radius 2.
//!
//! `cargo run --release --example stretch`

use std::f64::consts::PI;
use std::time::Instant;

use complete_curves::convex::ConvexBody;
use complete_curves::curve::AnalyticMap;
use complete_curves::net::{hopf_skeleton, TangentNet};
use complete_curves::stretch::{run_lemma, StretchOptions};

fn main() -> complete_curves::Result<()> {
    let d = ConvexBody::centered_ball(1.0)?;
    let dp = ConvexBody::centered_ball(2.0)?;
    let phases: Vec<(f64, f64)> = (0..4).map(|j| (j as f64 * PI / 2.0, -(j as f64) * PI / 4.0)).collect();
    let net = TangentNet::new(&d, hopf_skeleton(&d, 0.4, &phases)?, 0.9)?;
    let x = AnalyticMap::flat_disc(1.0)?;
    let t = Instant::now();
    let out = run_lemma(&x, &d, &dp, &net, StretchOptions::default())?;
    let r = &out.report;
    println!("outer radius {:.3}, {} sectors, {:.1?}", r.outer, r.arcs, t.elapsed());
    for s in &r.steps {
        let worst = s.checks.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k.as_str()).collect::<Vec<_>>();
        println!("step {}: |zeta| {:.3}  w-coefficient {:.1e}  failed {:?}", s.n, s.zeta.norm(), s.w_coefficient, worst);
    }
    for (k, c) in &r.conclusions {
        println!("({k}) pass {} value {:?} threshold {}", c.pass, c.value, c.threshold);
    }
    println!("samples {}  pass {}", r.samples, r.pass);
    Ok(())
}
