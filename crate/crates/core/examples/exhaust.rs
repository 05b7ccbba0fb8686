//! Refined chains and d-proper sequences.
//!
//! `cargo run --release --example exhaust`

use complete_curves::convex::{chain_metrics, d_proper_sequence, refine_pair, ConvexBody};

fn main() -> complete_curves::Result<()> {
    let a = ConvexBody::centered_ball(1.0)?;
    let b = ConvexBody::centered_ball(2.0)?;
    let chain = refine_pair(&a, &b)?;
    println!("m = {} (harmonic threshold {:.4})", chain.m, chain.threshold);
    let mut sum = 0.0;
    for (k, m) in chain_metrics(&chain).iter().enumerate() {
        sum += m.dee;
        println!("  pair {k}: dist {:.5} kappa {:.5} dee {:.5} running {:.5}", m.dist, m.kappa, m.dee, sum);
    }

    let balls = (1..=6).map(|r| ConvexBody::centered_ball(r as f64)).collect::<Result<Vec<_>, _>>()?;
    for target in [1.0, 3.0, 5.0] {
        let seq = d_proper_sequence(&balls, target)?;
        println!(
            "target {target}: {} bodies, {} chains, d-sum {:.4}, success {}",
            seq.bodies.len(),
            seq.chains,
            seq.total(),
            seq.success
        );
    }
    Ok(())
}
