//! Recursion driver on a config file, followed by the image audit.
//!
//! `cargo run --release --example pipeline -- configs/chain3.toml`

use std::path::PathBuf;

use complete_curves::pipeline::{image_completeness_audit, run_recursion_full, RunConfig};

fn main() -> complete_curves::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("configs/chain3.toml"));
    let cfg = RunConfig::load(&path)?;
    let out = run_recursion_full(&cfg)?;
    let r = &out.report;
    println!("schedule {:?} (halving {})", r.schedule, r.schedule_ok);
    for it in &r.iterations {
        let net = it.net.as_ref();
        println!(
            "iteration {}: dee {:.5} eps {:.4} slabs {:?} oracle {:?} accepted {}",
            it.n,
            it.metrics.dee,
            it.eps,
            net.map(|n| n.slabs),
            net.and_then(|n| n.oracle),
            it.accepted
        );
        for (k, c) in &it.checks {
            println!("  {k}: pass {} value {:?} threshold {:.4}", c.pass, c.value, c.threshold);
        }
    }
    if let Some(h) = &r.halted {
        println!("halted in iteration {} at {}: {}", h.iteration, h.stage, h.message);
    }
    let audit = image_completeness_audit(&out.curve, r, cfg.resolution.trim)?;
    println!("budget {:.5}, audit {audit:?}", r.budget);
    Ok(())
}
