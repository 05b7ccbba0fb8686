use std::path::Path;

use complete_curves::pipeline::{image_completeness_audit, run_recursion_full, Mode, RunConfig, RunReport};

fn flatdisc() -> RunConfig {
    RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/flatdisc.toml")).unwrap()
}

/// One flagship iteration in embedded mode. The stretched map is far above
/// the desingularization cap, so the run continues immersed with a waiver.
#[test]
fn flagship_iteration_records_every_check() {
    let mut cfg = flatdisc();
    cfg.mode = Mode::Embedded;
    let out = run_recursion_full(&cfg).unwrap();
    let r = &out.report;
    assert_eq!(r.iterations.len(), 1);
    let it = &r.iterations[0];
    assert_eq!(it.mode, Mode::Immersed);
    assert!(r.waivers.iter().any(|w| w.contains("desingularization cap")));
    assert!(r.waivers.iter().any(|w| w.starts_with("one-form ratio")));
    assert!(it.double_points.is_some());

    let stretch = it.stretch.as_ref().unwrap();
    assert!(stretch.pass, "{:?}", stretch.failures);
    for key in ["D_1", "E_1", "F_1"] {
        assert!(it.checks[key].pass, "{key}: {:?}", it.checks[key]);
    }
    assert!(it.checks["D_1"].value.unwrap() < it.eps);
    assert!(it.checks["E_1"].value.unwrap() < 1e-2);

    // The flat annulus has image length close to its radial width, which is
    // below dee - eps for this pair; the iteration is rejected honestly.
    let g = &it.checks["G_1"];
    let len = it.length.unwrap();
    assert!(!g.pass);
    assert!((g.threshold - (2.0 / 3f64.sqrt() - 0.1)).abs() < 1e-12);
    assert!(len > 0.9 && len < g.threshold, "{len}");
    assert!(!it.accepted);
    assert_eq!(r.halted.as_ref().unwrap().stage, "verify");

    assert_eq!(r.budget, 0.0);
    assert_eq!(r.ledger(), r.budget);
    assert!(!r.pass());
    let back = RunReport::from_json(&r.to_json()).unwrap();
    assert_eq!(back.to_json(), r.to_json());

    let audit = image_completeness_audit(&out.curve, r, cfg.resolution.trim).unwrap();
    assert_eq!(audit.measured, 0.0);
    assert!(audit.pass);
}
