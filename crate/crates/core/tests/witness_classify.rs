use std::sync::Arc;

use holoseq::algebra::{escape_probes, truncate, SequenceExpression};
use holoseq::classify::{classify, osgood_estimate, Flag, Thresholds};
use holoseq::geometry::Domain;
use holoseq::sequence::{FnSequence, Sequence};
use holoseq::witness::{
    radii_schedule, residual_escape, trivial_witness, tolerance, WitnessConfig, WitnessKind, WitnessSequence,
};
use holoseq::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn witness(kind: WitnessKind, domain: &Domain, n_max: usize) -> WitnessSequence {
    WitnessSequence::new(kind, domain, 1.0, WitnessConfig { n_max, ..WitnessConfig::default() }).unwrap()
}

#[test]
fn plane_pointwise_witness_growth() {
    let w = witness(WitnessKind::SpNotSuc, &Domain::plane(), 4);
    let s = w.schedule().unwrap();
    let f2 = w.eval(2, re(s.s(3))).unwrap();
    assert!((f2 - 2f64.exp()).norm() < tolerance(2, 1e-10));
    assert!(f2.norm() > 6.389);
    assert!(w.eval(4, re(s.s(5))).unwrap().norm() > 53.598);
    // replay reproduces the fit report up to rounding
    for n in 1..=3 {
        let rep = w.member(n).unwrap().report.clone().unwrap();
        let again = w.revalidate(n).unwrap().unwrap();
        assert!((again - rep.achieved_error).abs() <= 1e-3 * rep.tolerance);
    }
}

#[test]
fn compact_witness_growth() {
    let d = witness(WitnessKind::SucNotSu, &Domain::unit_disc(), 3);
    assert!(d.eval(3, d.probe(3)).unwrap().norm() > 19.086);
    let p = witness(WitnessKind::SucNotSu, &Domain::plane(), 1);
    assert_eq!(p.probe(1), re(1.0));
    assert!(p.eval(1, re(1.0)).unwrap().norm() > 1.718);
    let found = escape_probes(&d, 1.0, 3).unwrap();
    let ks: Vec<usize> = found.probes.iter().map(|q| q.n).collect();
    assert_eq!(ks, vec![1, 2, 3]);
    for q in &found.probes {
        assert_eq!(q.z, d.probe(q.n));
    }
}

#[test]
fn gamma_must_be_below_radius() {
    let cfg = WitnessConfig { gamma: 1.0, ..WitnessConfig::default() };
    assert!(matches!(
        WitnessSequence::new(WitnessKind::SpNotSuc, &Domain::unit_disc(), 1.0, cfg),
        Err(Error::Config(_))
    ));
}

#[test]
fn escape_needs_a_compactly_convergent_base() {
    let sp = Arc::new(witness(WitnessKind::SpNotSuc, &Domain::unit_disc(), 4));
    assert!(matches!(residual_escape(sp, None, 0.5, 3, 4), Err(Error::Rejected(_))));
}

#[test]
fn escape_agrees_with_base_before_start() {
    let base = Arc::new(trivial_witness(WitnessKind::ZOverN, &Domain::plane()).unwrap());
    let esc = residual_escape(base.clone(), None, 0.5, 2, 4).unwrap();
    assert!(esc.passed());
    for n in 1..esc.n0 {
        let z = Complex64::new(0.3, -0.2);
        assert_eq!(esc.eval(n, z).unwrap(), base.eval(n, z).unwrap());
    }
    for s in &esc.steps {
        assert!(esc.eval(s.n, s.z).unwrap().norm() > 1.0);
    }
}

#[test]
fn textbook_sequences() {
    let th = Thresholds::default();
    let z_pow = trivial_witness(WitnessKind::ZPowerN, &Domain::unit_disc()).unwrap();
    let v = classify(&z_pow, &Domain::unit_disc(), 6, &th);
    assert_eq!((v.pointwise, v.compact, v.uniform), (Flag::Yes, Flag::Yes, Flag::No));
    assert!(v.evidence.iter().all(|e| e.values.len() == 6));
    let z_over_n = trivial_witness(WitnessKind::ZOverN, &Domain::plane()).unwrap();
    let v = classify(&z_over_n, &Domain::plane(), 6, &th);
    assert_eq!(v.uniform, Flag::No);
    let json = serde_json::to_value(&v).unwrap();
    assert_eq!(json["uniform"], "no");
}

#[test]
fn osgood_on_truncated_sequence_flags_everything() {
    let f = SequenceExpression::Leaf(Arc::new(trivial_witness(WitnessKind::ZPowerN, &Domain::unit_disc()).unwrap()));
    let t = truncate(f, 2).unwrap();
    let o = osgood_estimate(&t, &Domain::unit_disc(), 5, 0.25, 2.0, &Thresholds::default()).unwrap();
    assert!(!o.cells.is_empty());
    assert!(o.cells.iter().all(|c| c.flagged && c.trajectory.len() == 5));
    assert_eq!(o.to_csv().lines().count(), o.cells.len() + 1);
    assert!(o.to_svg().starts_with("<svg"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn schedule_is_ordered(gamma in 0.05..0.95f64, disc in any::<bool>()) {
        let d = if disc { Domain::unit_disc() } else { Domain::plane() };
        let s = radii_schedule(&d, gamma, 5).unwrap();
        prop_assert!(s.all_hold());
        for n in 1..=5 {
            prop_assert!(s.s(n + 1) < s.s(n));
            prop_assert!(s.t(n) < s.t(n + 1));
            prop_assert!(s.r(n) > 0.0);
            prop_assert!((s.s(n) - s.t(1) / (2.0 * (n * n) as f64)).abs() < 1e-15);
        }
        prop_assert!(s.s(1) < s.t(1));
        prop_assert!(s.t(6) < s.big_r());
    }

    #[test]
    fn hierarchy_holds_for_power_families(amp in 0.1..10.0f64, p in -2.0..1.0f64, k in 0u32..3, disc in any::<bool>()) {
        let d = if disc { Domain::unit_disc() } else { Domain::plane() };
        let f = FnSequence { name: "family".into(), f: move |n: usize, z: Complex64| z.powu(k) * amp * (n as f64).powf(p) };
        let v = classify(&f, &d, 6, &Thresholds::default());
        if v.uniform == Flag::Yes {
            prop_assert_eq!(v.compact, Flag::Yes);
        }
        if v.compact == Flag::Yes {
            prop_assert_eq!(v.pointwise, Flag::Yes);
        }
    }

    #[test]
    fn truncated_families_are_uniform(amp in 0.1..10.0f64, k in 0u32..3, n0 in 1usize..=5) {
        let f = FnSequence { name: "family".into(), f: move |n: usize, z: Complex64| z.powu(k) * amp * n as f64 };
        let t = truncate(SequenceExpression::Leaf(Arc::new(f)), n0).unwrap();
        let v = classify(&t, &Domain::plane(), 6, &Thresholds::default());
        prop_assert_eq!(v.class(), "uniform");
    }
}
