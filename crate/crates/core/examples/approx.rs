//! Polynomial fits on disjoint compacta: one value on each of two discs.
//!
//! `cargo run --release --example approx`

use complete_curves::approx::{runge_fit, CompactSet, CompactaSpec, FitOptions, Norm, PiecewiseTarget, SetTarget, TargetFn};
use num_complex::Complex64;

fn main() -> complete_curves::Result<()> {
    let spec = CompactaSpec {
        sets: vec![
            CompactSet::disc(Complex64::new(-1.5, 0.0), 1.0, 64),
            CompactSet::disc(Complex64::new(1.5, 0.0), 1.0, 64),
        ],
        connected_complement: true,
    };
    let target = PiecewiseTarget {
        sets: vec![
            SetTarget { func: TargetFn::Constant(Complex64::new(0.0, 0.0)), norm: Norm::C1 },
            SetTarget { func: TargetFn::Constant(Complex64::new(1.0, 0.0)), norm: Norm::C0 },
        ],
    };
    for degree in [5, 10, 20, 40] {
        let (_, rep) = runge_fit(&spec, &target, FitOptions { degree, scale: None })?;
        println!(
            "degree {degree:3}: left C1 {:.2e}  right C0 {:.2e}  condition {:.2e}",
            rep.per_set[0].c1, rep.per_set[1].c0, rep.condition_estimate
        );
    }
    Ok(())
}
