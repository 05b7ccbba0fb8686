//! Holomorphic maps: double points, image versus intrinsic distance, transversality.
//!
//! `cargo run --release --example curve`

use complete_curves::convex::ConvexBody;
use complete_curves::curve::{double_points, image_distance, intrinsic_distance, transversal_boundary, AnalyticMap};
use num_complex::Complex64;

fn main() -> complete_curves::Result<()> {
    let c = |re: f64| Complex64::new(re, 0.0);
    // (z² − 1, z(z² − 1)) sends ±1 to the origin.
    let x = AnalyticMap::polynomial(1.5, vec![c(-1.0), c(0.0), c(1.0)], vec![c(0.0), c(-1.0), c(0.0), c(1.0)])?;
    for dp in double_points(&x, 1e-10)? {
        println!("double point {:?} from {} and {}, normal crossing {}", dp.w, dp.p, dp.q, dp.normal_crossing);
    }
    let (p, q) = (c(-1.0), c(1.0));
    println!("intrinsic {:.4}  image {:.4}", intrinsic_distance(&x, p, q, 120)?, image_distance(&x, p, q, 120)?);

    let disc = AnalyticMap::flat_disc(1.0)?;
    let ball = ConvexBody::centered_ball(1.0)?;
    println!("flat disc meets the unit sphere transversally: {}", transversal_boundary(&disc, &ball, 1e-6)?);
    Ok(())
}
