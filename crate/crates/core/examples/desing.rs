//! Implicitization of a nodal cubic and level shifts of the node ζξ.
//!
//! `cargo run --release --example desing`

use complete_curves::convex::ConvexBody;
use complete_curves::curve::{double_points, AnalyticMap};
use complete_curves::desing::{critical_points, implicitize, lambda_sweep, BivariatePolynomial, LevelOptions};
use num_complex::Complex64;

fn main() -> complete_curves::Result<()> {
    let c = |re: f64| Complex64::new(re, 0.0);
    // t ↦ (t², t(t² − 1)) has a node at the origin from t = ±1.
    let x = AnalyticMap::polynomial(1.5, vec![c(0.0), c(0.0), c(1.0)], vec![c(0.0), c(-1.0), c(0.0), c(1.0)])?;
    let p = implicitize(&x)?;
    println!("implicit degrees {:?}", p.degrees());
    let region = ConvexBody::centered_ball(3.0)?;
    for cp in critical_points(&p, &region)?.points {
        println!("critical point {:?} det H {:.4}", cp.q, cp.det_hessian);
    }
    for dp in double_points(&x, 1e-10)? {
        println!("double point {:?}", dp.w);
    }

    let node = BivariatePolynomial::from_terms(&[(1, 1, c(1.0))])?;
    let ball = ConvexBody::centered_ball(1.0)?;
    let sweep = lambda_sweep(&node, &ball, 0.01, 4, 0.2, LevelOptions::default())?;
    for e in &sweep.entries {
        println!("lambda {:.5}: regular {} min |grad| {:.5} hausdorff {:.5}", e.lambda, e.regular, e.min_grad, e.hausdorff);
    }
    println!("chosen {:?}", sweep.chosen);
    Ok(())
}
