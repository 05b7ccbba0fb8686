//! Tangent net along a great circle with its length bound and path oracle.
//!
//! `cargo run --release --example net`

use std::time::Instant;

use complete_curves::convex::{dee, ConvexBody};
use complete_curves::geometry::PointC2;
use complete_curves::net::{analytic_lower_bound, build_net, min_path_length, BoundaryArc, BoundaryArcSet, Resolution};
use num_complex::Complex64;

fn main() -> complete_curves::Result<()> {
    let d = ConvexBody::centered_ball(1.0)?;
    let dp = ConvexBody::centered_ball(2.0)?;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let a = PointC2::new(one, zero);
    let b = PointC2::new(Complex64::new(0.0, 1.0), zero);
    let arcs = BoundaryArcSet { arcs: vec![BoundaryArc::circle(&d, a, b, 720)?] };
    for eps in [1.0, 0.3, 0.1] {
        let net = build_net(&arcs, &d, &dp, eps)?;
        let t = Instant::now();
        let o = min_path_length(&net, &d, &dp, &Resolution::default())?;
        println!(
            "eps {eps}: m {} radius {:.3e} bound {:.5} oracle {:.5} slack {:.3} nodes {} ({:.2?})",
            net.len(),
            net.radius,
            analytic_lower_bound(&net, &d, &dp)?,
            o.min_length.unwrap_or(f64::NAN),
            o.slack,
            o.nodes,
            t.elapsed()
        );
    }
    println!("dee = {:.6}", dee(&d, &dp)?.dee);
    Ok(())
}
