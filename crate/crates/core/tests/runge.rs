use holoseq::geometry::{pole_anchor_set, Anchor, CompactRegion, Domain, PoleAnchorSet, RegionKind, Shape};
use holoseq::runge::{runge_fit, PiecewiseConstantTarget, RationalFunction};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn two_discs() -> PiecewiseConstantTarget {
    PiecewiseConstantTarget::new()
        .with(CompactRegion::closed_disc("unit", c(0.0, 0.0), 1.0, 20.0), c(0.0, 0.0))
        .with(CompactRegion::closed_disc("small", c(3.0, 0.0), 0.1, 20.0), c(1.0, 0.0))
}

/// Least squares on the monomials of `(z - 1.5) / 1.6` with twice-applied
/// Gram-Schmidt; returns the sup error on `check`.
fn monomial_oracle(nodes: &[(Complex64, Complex64)], check: &[(Complex64, Complex64)], degree: usize) -> f64 {
    let w = |z: Complex64| (z - 1.5) / 1.6;
    let m = nodes.len();
    let cols: Vec<Vec<Complex64>> = (0..=degree).map(|k| nodes.iter().map(|(z, _)| w(*z).powu(k as u32)).collect()).collect();
    let mut q: Vec<Vec<Complex64>> = Vec::new();
    let mut r = vec![vec![Complex64::new(0.0, 0.0); degree + 1]; degree + 1];
    for (j, col) in cols.iter().enumerate() {
        let mut v = col.clone();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let h: Complex64 = qi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                r[i][j] += h;
                for k in 0..m {
                    v[k] -= h * qi[k];
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        r[j][j] = Complex64::new(norm, 0.0);
        q.push(v.into_iter().map(|x| x / norm).collect());
    }
    let rhs: Vec<Complex64> = q.iter().map(|qi| qi.iter().zip(nodes).map(|(a, (_, f))| a.conj() * f).sum()).collect();
    let mut coef = vec![Complex64::new(0.0, 0.0); degree + 1];
    for i in (0..=degree).rev() {
        let mut s = rhs[i];
        for k in i + 1..=degree {
            s -= r[i][k] * coef[k];
        }
        coef[i] = s / r[i][i];
    }
    check
        .iter()
        .map(|(z, f)| {
            let p = coef.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * w(*z) + a);
            (p - f).norm()
        })
        .fold(0.0, f64::max)
}

fn samples(t: &PiecewiseConstantTarget, validation: bool) -> Vec<(Complex64, Complex64)> {
    t.pieces
        .iter()
        .flat_map(|p| {
            let g = if validation { p.region.validation_grid().all() } else { p.region.fit_grid.all() };
            let v = p.value.at(Complex64::new(0.0, 0.0));
            g.into_iter().map(move |z| (z, v))
        })
        .collect()
}

// Frozen from `monomial_oracle` with degrees 1, 2, 3, ...
const ORACLE_FIRST_DEGREE: usize = 18;

#[test]
fn monomial_oracle_reaches_tolerance_at_frozen_degree() {
    let t = two_discs();
    let (fit, val) = (samples(&t, false), samples(&t, true));
    let first = (1..60).find(|&d| monomial_oracle(&fit, &val, d) < 1e-3).unwrap();
    assert_eq!(first, ORACLE_FIRST_DEGREE);
}

#[test]
fn polynomial_separates_two_discs() {
    let t = two_discs();
    let (f, rep) = runge_fit(&t, &PoleAnchorSet::infinity_only(), 1e-3, 256).unwrap();
    assert!(rep.success, "{rep:?}");
    assert!(rep.achieved_error < 1e-3);
    assert_eq!(f.poles(), vec![Anchor::Infinity]);
    // escalation doubles, so the accepted degree is within a factor two of
    // the least degree the monomial oracle needs
    assert!(rep.degree <= 2 * ORACLE_FIRST_DEGREE + 1, "degree {}", rep.degree);
    assert!((f.eval(c(3.0, 0.0)).unwrap() - 1.0).norm() < 1e-3);
    // achieved error bounds the sup on the validation grid, recomputed here
    let val = samples(&t, true);
    let got = f.eval_many(&val.iter().map(|p| p.0).collect::<Vec<_>>()).unwrap();
    let sup = got.iter().zip(&val).map(|(a, (_, b))| (a - b).norm()).fold(0.0, f64::max);
    assert!(sup <= rep.achieved_error);
}

#[test]
fn annulus_fit_uses_the_hole() {
    let annulus = Domain::new(Shape::Diff(vec![Shape::disc(0.0, 0.0, 2.0), Shape::disc(0.0, 0.0, 1.0)])).unwrap();
    let anchors = pole_anchor_set(&annulus, None).unwrap();
    let arc: Vec<Complex64> = (0..=20).map(|k| Complex64::from_polar(1.2, -0.3 + 0.6 * k as f64 / 20.0)).collect();
    let circle: Vec<Complex64> = (0..120).map(|k| Complex64::from_polar(1.8, k as f64 * std::f64::consts::TAU / 120.0)).collect();
    let t = PiecewiseConstantTarget::new()
        .with(CompactRegion::new("arc", RegionKind::Points(arc.clone()), 20.0), c(1.0, 0.0))
        .with(CompactRegion::new("outer", RegionKind::Points(circle.clone()), 20.0), c(0.0, 0.0));
    let (f, rep) = runge_fit(&t, &anchors, 1e-2, 256).unwrap();
    assert!(rep.success, "{rep:?}");
    assert!(f.poles().iter().any(|p| matches!(p, Anchor::Finite(_))));
    for p in f.poles() {
        if let Anchor::Finite(z) = p {
            assert!(!annulus.contains(z));
        }
    }
    for z in &arc {
        assert!((f.eval(*z).unwrap() - 1.0).norm() < 1e-2);
    }
}

#[test]
fn overlapping_pieces_rejected() {
    let t = PiecewiseConstantTarget::new()
        .with(CompactRegion::closed_disc("a", c(0.0, 0.0), 1.0, 10.0), c(0.0, 0.0))
        .with(CompactRegion::closed_disc("b", c(0.5, 0.0), 1.0, 10.0), c(1.0, 0.0));
    assert!(t.validate().is_err());
}

#[test]
fn anchor_on_target_rejected() {
    let t = two_discs();
    let anchors = PoleAnchorSet {
        anchors: vec![holoseq::geometry::TaggedAnchor { point: Anchor::Finite(c(0.0, 0.0)), component: "x".into() }],
        source: holoseq::geometry::AnchorSource::UserSupplied,
    };
    assert!(runge_fit(&t, &anchors, 1e-3, 64).is_err());
}

#[test]
fn zero_target_gives_zero() {
    let t = PiecewiseConstantTarget::new().with(CompactRegion::closed_disc("a", c(0.0, 0.0), 1.0, 10.0), c(0.0, 0.0));
    let (f, rep) = runge_fit(&t, &PoleAnchorSet::infinity_only(), 1e-6, 16).unwrap();
    assert_eq!(rep.achieved_error, 0.0);
    assert_eq!(f.eval(c(7.0, 1.0)).unwrap(), c(0.0, 0.0));
}

#[test]
fn closed_forms_evaluate() {
    let p = RationalFunction::polynomial(vec![c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
    assert!((p.eval(c(2.0, 0.0)).unwrap() - 9.0).norm() < 1e-14);
    let r = RationalFunction::with_principal(vec![], c(0.0, 0.0), vec![c(1.0, 0.0)]);
    assert!((r.eval(c(0.5, 0.0)).unwrap() - 2.0).norm() < 1e-14);
    assert!(r.eval(c(0.0, 0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn constants_fit_exactly_and_replay(x in -2.0..2.0f64, y in -2.0..2.0f64, r in 0.1..1.0f64, v in -3.0..3.0f64) {
        let t = PiecewiseConstantTarget::new().with(CompactRegion::closed_disc("d", c(x, y), r, 10.0), c(v, 0.0));
        let (f, rep) = runge_fit(&t, &PoleAnchorSet::infinity_only(), 1e-8, 8).unwrap();
        prop_assert!(rep.success);
        let pts = t.pieces[0].region.validation_grid().all();
        let a = f.eval_many(&pts).unwrap();
        let b = f.eval_many(&pts).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.iter().all(|w| (w - v).norm() < 1e-8));
    }

    #[test]
    fn scaling_the_target_scales_the_fit(s in 0.5..4.0f64) {
        let base = two_discs();
        let scaled = PiecewiseConstantTarget::new()
            .with(CompactRegion::closed_disc("unit", c(0.0, 0.0), 1.0, 20.0), c(0.0, 0.0))
            .with(CompactRegion::closed_disc("small", c(3.0, 0.0), 0.1, 20.0), c(s, 0.0));
        let (_, a) = runge_fit(&base, &PoleAnchorSet::infinity_only(), 1e-3, 32).unwrap();
        let (_, b) = runge_fit(&scaled, &PoleAnchorSet::infinity_only(), 1e-3 * s, 32).unwrap();
        prop_assert_eq!(a.degree, b.degree);
        prop_assert!((b.achieved_error - s * a.achieved_error).abs() <= 1e-9 * s);
    }
}
