mod common;

use common::{ball, budget, cubic_field, operator};
use stable_conley::conley_engine::{EngineConfig, HomologicalIndex, HomologyGroup};
use stable_conley::spectral_model::{Frame, PermissibleField};
use stable_conley::stable_index::{
    assemble_stable_index, continuation_check, continuation_sweep, decomposition_shift, stable_equal,
    suspension_consistency, Provenance, StableIndex,
};
use stable_conley::ConleyError;

#[test]
fn linear_repeller_desuspends_to_degree_zero() {
    let f = PermissibleField::linear(operator(&[-1.0, 1.0]));
    let a = assemble_stable_index(&f, &ball(1.0), &Frame::leading(2), &budget(), &EngineConfig::default()).unwrap();
    assert_eq!(a.index.shift, 1);
    assert!(a.index.is_sphere(0));
    assert_eq!(a.signature, (1, 1, 0));
    assert_eq!(a.index.provenance.frame, format!("{:016x}", Frame::<f64>::leading(2).fingerprint()));
}

#[test]
fn degenerate_frames_are_refused() {
    let f = PermissibleField::linear(operator(&[0.0, 1.0]));
    let err =
        assemble_stable_index(&f, &ball(1.0), &Frame::leading(2), &budget(), &EngineConfig::default()).unwrap_err();
    assert!(matches!(err, ConleyError::Nondegeneracy { .. }));
}

#[test]
fn suspension_by_stable_and_unstable_directions() {
    let f = cubic_field(&[-1.0, 1.0, -2.0], 1.0);
    let v = Frame::coordinate(&[0]).unwrap();
    let cfg = EngineConfig::default();
    for (w, un) in [(vec![0, 1], 0), (vec![0, 2], 1)] {
        let w = Frame::coordinate(&w).unwrap();
        let r = suspension_consistency(&f, &ball(0.5), &v, &w, &budget(), &budget(), &cfg).unwrap();
        assert_eq!(r.u_negative, un);
        assert!(r.consistent(), "{r:?}");
    }
}

#[test]
fn flipped_decomposition_shifts_by_one() {
    let f = cubic_field(&[-1.0, 1.0], 1.0);
    let k = f.operator().eigenvalue_flip(0).unwrap();
    let g = f.alternative_decomposition(&k).unwrap();
    let r =
        decomposition_shift(&f, &g, &ball(0.5), &Frame::coordinate(&[0]).unwrap(), &budget(), &EngineConfig::default())
            .unwrap();
    assert_eq!(r.shift, 1);
    assert!(r.homology_identical);
    assert!(r.reconciled);
    assert!(!stable_equal(&r.first, &r.second));
}

#[test]
fn torsion_survives_desuspension() {
    let rp2 = HomologicalIndex::new(vec![HomologyGroup::free(1), HomologyGroup::new(0, vec![2])]);
    let e = StableIndex::from_homology(&rp2.shifted(1), 1, Provenance::default());
    assert_eq!(e.group(1), HomologyGroup::new(0, vec![2]));
    let free = StableIndex::from_homology(&HomologicalIndex::sphere(1), 1, Provenance::default());
    assert!(!stable_equal(&e, &free));
}

#[test]
fn small_continuation_keeps_the_index() {
    let f = cubic_field(&[-1.0, 1.0], 1.0);
    let g = f.with_scaled_map(0.9);
    let r = continuation_check(
        &f,
        &g,
        &ball(0.5),
        &Frame::coordinate(&[0]).unwrap(),
        5,
        &budget(),
        &EngineConfig::default(),
        None,
    )
    .unwrap();
    assert!(r.steps.iter().all(|s| s.isolated));
    assert!(stable_equal(r.start.as_ref().unwrap(), r.end.as_ref().unwrap()));
}

#[test]
fn continuation_breaks_when_equilibria_reach_the_boundary() {
    // a(s) = 1 + 12s puts the equilibria ±1/√a on ∂X at s = 0.25.
    let f = cubic_field(&[-1.0, 1.0], 1.0);
    let g = cubic_field(&[-1.0, 1.0], 13.0);
    let v = Frame::coordinate(&[0]).unwrap();
    let cfg = EngineConfig::default();
    let r = continuation_sweep(&f, &g, &ball(0.5), &v, 11, &budget(), &cfg, None).unwrap();
    // First grid value past s = 0.25 is step 3.
    let (step, s) = r.break_at.unwrap();
    assert_eq!(step, 3, "break at s = {s}");
    assert!(r.steps[..step].iter().all(|x| x.isolated));
    let err = continuation_check(&f, &g, &ball(0.5), &v, 11, &budget(), &cfg, None).unwrap_err();
    assert!(matches!(err, ConleyError::ContinuationBreak { step: k, .. } if k == step));
    let tight = continuation_check(&f, &g, &ball(0.5), &v, 11, &budget(), &cfg, Some(0.1));
    assert!(matches!(tight, Err(ConleyError::Argument(_))));
}
