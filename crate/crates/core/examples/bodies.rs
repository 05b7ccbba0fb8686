//! Curvature, distance and d-values of nested convex bodies.
//!
//! `cargo run --release --example bodies`

use complete_curves::convex::{dee, ConvexBody};
use complete_curves::geometry::PointC2;

fn main() -> complete_curves::Result<()> {
    let d = ConvexBody::centered_ball(1.0)?;
    let dp = ConvexBody::centered_ball(2.0)?;
    let m = dee(&d, &dp)?;
    println!("balls 1 < 2: kappa {:.6} dist {:.6} dee {:.9} (2/sqrt 3 = {:.9})", m.kappa, m.dist, m.dee, 2.0 / 3f64.sqrt());

    for t in [1e-2, 1e-4, 1e-6] {
        let m = dee(&d, &ConvexBody::centered_ball(1.0 + t)?)?;
        println!("gap {t:.0e}: sqrt(t)/dee = {:.6}", t.sqrt() / m.dee);
    }

    let e = ConvexBody::axis_ellipsoid(PointC2::ZERO, [1.0, 1.5, 2.0, 1.2])?;
    let k = e.kappa_max()?;
    for t in [-0.2, 0.5, 1.0, 2.0] {
        let p = e.parallel_body(t)?;
        println!("ellipsoid parallel t = {t:4}: kappa {:.6}, expected {:.6}", p.kappa_max()?, k / (1.0 + t * k));
    }
    let outer = e.parallel_body(1.0)?;
    let m = dee(&e, &outer)?;
    println!("ellipsoid vs its parallel body at 1: dist {:.6} dee {:.6}", m.dist, m.dee);
    Ok(())
}
