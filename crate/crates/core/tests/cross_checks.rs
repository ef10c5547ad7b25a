//! Cross-module scenarios at the documented desk scales.

use cdlab_core::atomic::{spec_from_m, ModelSpec};
use cdlab_core::bergman::connector_entry;
use cdlab_core::geometry::{grammian_closed, grammian_truncated, DiscGrid};
use cdlab_core::intertwiner::{solve_sylvester_closed, Boundedness};
use cdlab_core::C64;

#[test]
fn grammian_two_routes_across_default_grid() {
    let spec = ModelSpec::new(
        0.9,
        1.5,
        3,
        &[
            (0, 1, C64::new(1.0, 0.3)),
            (1, 2, C64::new(-0.5, 0.2)),
            (0, 2, C64::new(0.1, 0.1)),
        ],
        512,
    )
    .unwrap();
    let grid = DiscGrid::default_grid();
    let mut worst = 0.0_f64;
    for &w in &grid.points {
        let a = grammian_closed(&spec, w).unwrap();
        let b = grammian_truncated(&spec, w).unwrap();
        let dev = a.sub(&b).max_abs() / a.max_abs().max(1.0);
        worst = worst.max(dev);
        a.cholesky().unwrap();
    }
    assert!(worst <= 1e-8, "two-route deviation {worst}");
}

#[test]
fn shift_solution_sup_stability_tracks_valency() {
    // over the parameter box: bounded (ratio <= 1.05) iff valency >= 2,
    // divergent (ratio >= 1.3) at valency 1
    for &l0 in &[1.0, 1.5, 2.0] {
        for &v in &[1.0, 2.0, 3.0] {
            for &k in &[0usize, 1, 2] {
                let lk1 = l0 + (k as f64 + 1.0) * v;
                let sol = solve_sylvester_closed(l0, lk1, k, 2048).unwrap();
                let ratio = sol.sup_ratio.unwrap();
                if v >= 2.0 {
                    assert!(ratio <= 1.05, "l0={l0} v={v} k={k}: ratio {ratio}");
                    assert_eq!(sol.bounded_verdict, Boundedness::Bounded);
                } else {
                    assert!(ratio >= 1.3, "l0={l0} v={v} k={k}: ratio {ratio}");
                    assert_eq!(sol.bounded_verdict, Boundedness::Divergent);
                }
            }
        }
    }
}

#[test]
fn connector_entry_matches_block_of_power_structure() {
    // entries of the canonical connector agree with the closed-form entry
    // evaluator used by the dichotomy sweep
    let (li, lj, k, n) = (1.0, 4.0, 1usize, 64usize);
    let conn = cdlab_core::bergman::build_connector(li, lj, k, n).unwrap();
    for l in 0..(n - k) as u64 {
        let direct = connector_entry(li, lj, k, l).unwrap();
        let stored = conn.entry(l as usize + k, l as usize).re;
        assert!((direct - stored).abs() <= 1e-14 * direct.max(1.0));
    }
}

#[test]
fn power_trace_flags_edge_dominated_norms() {
    use cdlab_core::analysis::{power_trace, PowerClass};
    // rank-3 chain at the boundedness boundary: the (0,2) coupling raises
    // the inner index, and its entries increase toward the cut, so large
    // powers concentrate there and must be flagged
    let spec = spec_from_m(
        1.0,
        1.0,
        3,
        &[
            (0, 1, C64::new(-1.0, 0.0)),
            (1, 2, C64::new(-1.0, 0.0)),
            (0, 2, C64::new(-1.0, 0.0)),
        ],
        256,
    )
    .unwrap();
    let tr = power_trace(&spec, 100, 256).unwrap();
    assert!(tr.contaminated);
    assert_eq!(tr.classification, PowerClass::Inconclusive);
}

#[test]
fn assembled_models_are_bitwise_deterministic() {
    let spec = ModelSpec::new(
        1.3,
        2.0,
        3,
        &[(0, 1, C64::new(0.9, -0.2)), (1, 2, C64::new(1.0, 0.0))],
        128,
    )
    .unwrap();
    let a = cdlab_core::atomic::assemble(&spec).unwrap();
    let b = cdlab_core::atomic::assemble(&spec).unwrap();
    let (ba, bb) = (a.blocks().to_band(), b.blocks().to_band());
    assert_eq!(ba.to_dense(), bb.to_dense());
}
