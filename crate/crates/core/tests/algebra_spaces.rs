use std::sync::Arc;

use holoseq::algebra::{
    exponent_profile, q_independent_generators, truncate, Entire, MultivariatePolynomial, SequenceExpression, Term,
};
use holoseq::geometry::{CompactRegion, Domain};
use holoseq::sequence::{FnSequence, Sequence};
use holoseq::spaces::{hv_norm, metric_big_d, metric_d, seq_sup_seminorm, MetricContext};
use holoseq::witness::{trivial_witness, WitnessKind};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn term(l: f64, alpha: &[u32]) -> Term {
    Term { lambda: c(l, 0.0), alpha: alpha.to_vec() }
}

#[test]
fn generator_invariants() {
    let h = q_independent_generators(12).unwrap();
    let mut primes: Vec<u64> = h.generators.iter().map(|g| g.prime).collect();
    primes.dedup();
    assert_eq!(primes.len(), 12);
    for g in &h.generators {
        assert!(g.value > 0.0 && g.value <= 1.0);
        // exact form sqrt(p) / 2^shift
        let exact = (g.prime as f64).sqrt() / (1u64 << g.shift) as f64;
        assert!((exact - g.value).abs() <= 1e-15);
    }
    let two = q_independent_generators(2).unwrap().values();
    assert!((two[0] - 0.70711).abs() < 1e-5 && (two[1] - 0.86603).abs() < 1e-5);
}

#[test]
fn exponent_examples() {
    let h2 = q_independent_generators(2).unwrap();
    let p = MultivariatePolynomial::new(vec![term(1.0, &[1, 1]), term(-1.0, &[0, 2])]).unwrap();
    let prof = exponent_profile(&p, &h2).unwrap();
    let (a, b) = (2f64.sqrt() / 2.0, 3f64.sqrt() / 2.0);
    assert!((prof.values[0] - (a + b)).abs() < 1e-15);
    assert!((prof.values[1] - 2.0 * b).abs() < 1e-15);
    assert!((prof.values[0] - 1.57313).abs() < 1e-5);
    assert_eq!(prof.dominant, 1);
    assert!(prof.distinct);

    let h1 = q_independent_generators(1).unwrap();
    let q = MultivariatePolynomial::new(vec![term(1.0, &[2]), term(1.0, &[1])]).unwrap();
    let prof = exponent_profile(&q, &h1).unwrap();
    assert!((prof.values[0] - 2f64.sqrt()).abs() < 1e-15);
    assert!((prof.values[1] - a).abs() < 1e-15);
    assert_eq!(prof.dominant, 0);
}

#[test]
fn constant_terms_rejected() {
    assert!(MultivariatePolynomial::new(vec![term(1.0, &[0, 0])]).is_err());
    assert!(MultivariatePolynomial::new(vec![]).is_err());
}

#[test]
fn weighted_norm_examples() {
    assert!((hv_norm(&Entire::monomial(1)).unwrap().value - (-1f64).exp()).abs() < 1e-12);
    assert!((hv_norm(&Entire::monomial(4)).unwrap().value - 4.6888).abs() < 1e-4);
}

// brute-force radial and angular scan of e^{-r} |phi(r e^{i t})|
fn scan_norm(phi: &Entire) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..=4000 {
        let r = i as f64 * 0.005;
        for k in 0..360 {
            let z = Complex64::from_polar(r, k as f64 * std::f64::consts::TAU / 360.0);
            best = best.max((-r).exp() * phi.eval(z).norm());
        }
    }
    best
}

#[test]
fn weighted_norm_matches_scan_for_mixed_polynomial() {
    let phi = Entire::Polynomial(vec![c(1.0, 0.0), c(-2.0, 1.0), c(0.0, 0.0), c(0.5, 0.0)]);
    let got = hv_norm(&phi).unwrap();
    let scan = scan_norm(&phi);
    assert!(got.value >= scan - 1e-12);
    assert!(got.value - scan < 1e-4, "{} vs {scan}", got.value);
    assert!((phi.eval(got.argmax).norm() * (-got.argmax.norm()).exp() - got.value).abs() < 1e-12);
}

#[test]
fn seminorm_and_distance_examples() {
    let z_over_n = trivial_witness(WitnessKind::ZOverN, &Domain::plane()).unwrap();
    let k3 = CompactRegion::closed_disc("K", c(0.0, 0.0), 3.0, 10.0);
    let r = seq_sup_seminorm(&z_over_n, &k3, 8).unwrap();
    assert!((r.value - 3.0).abs() < 1e-12);
    assert_eq!(r.argmax_n, 1);
    let sup6 = z_over_n.eval_many(6, &k3.fit_grid.all()).unwrap().iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!((sup6 - 0.5).abs() < 1e-12);

    let ctx = MetricContext::new(&Domain::plane(), 8, 2.0).unwrap();
    let zero = FnSequence { name: "0".into(), f: |_: usize, _: Complex64| c(0.0, 0.0) };
    let one = FnSequence { name: "1".into(), f: |_: usize, _: Complex64| c(1.0, 0.0) };
    let d = metric_big_d(&zero, &one, &ctx, 8).unwrap();
    assert!((d.value - 0.5 * (1.0 - 0.5f64.powi(8))).abs() < 1e-12);
}

#[test]
fn small_metric_context_rejected() {
    assert!(MetricContext::new(&Domain::plane(), 2, 4.0).is_err());
}

fn polynomials() -> impl Strategy<Value = MultivariatePolynomial> {
    (1usize..=3)
        .prop_flat_map(|n| prop::collection::vec((prop::collection::vec(0u32..4, n), -3.0..3.0f64), 1..5))
        .prop_filter_map("valid", |ts| {
            let terms = ts.into_iter().map(|(alpha, l)| Term { lambda: c(l, 0.0), alpha }).collect();
            MultivariatePolynomial::new(terms).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_and_float_distinctness_agree(p in polynomials()) {
        let h = q_independent_generators(p.n_vars).unwrap();
        let prof = exponent_profile(&p, &h).unwrap();
        let float = (0..prof.values.len()).all(|i| (0..i).all(|j| (prof.values[i] - prof.values[j]).abs() > 1e-12));
        prop_assert_eq!(float, prof.distinct);
        prop_assert!(prof.values.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn dominant_index_ignores_coefficient_scaling(p in polynomials(), re in -5.0..5.0f64, im in -5.0..5.0f64) {
        prop_assume!(re.hypot(im) > 1e-3);
        let h = q_independent_generators(p.n_vars).unwrap();
        let a = exponent_profile(&p, &h).unwrap();
        let b = exponent_profile(&p.scaled(c(re, im)), &h).unwrap();
        prop_assert_eq!(a.dominant, b.dominant);
    }

    #[test]
    fn truncation_zeroes_the_tail(n0 in 1usize..8, n in 1usize..12, x in -3.0..3.0f64, y in -3.0..3.0f64) {
        let f = SequenceExpression::Leaf(Arc::new(trivial_witness(WitnessKind::ZOverN, &Domain::plane()).unwrap()));
        let t = truncate(f.clone(), n0).unwrap();
        let z = c(x, y);
        let got = t.eval(n, z).unwrap();
        if n >= n0 {
            prop_assert_eq!(got, c(0.0, 0.0));
        } else {
            prop_assert_eq!(got, f.eval(n, z).unwrap());
        }
    }

    #[test]
    fn metric_d_is_a_metric_on_polynomials(a in prop::array::uniform3(-2.0..2.0f64), b in prop::array::uniform3(-2.0..2.0f64), e in prop::array::uniform3(-2.0..2.0f64)) {
        let ctx = MetricContext::new(&Domain::unit_disc(), 5, 4.0).unwrap();
        let mk = |k: [f64; 3]| move |zs: &[Complex64]| Ok(zs.iter().map(|z| k[0] + z * (k[1] + z * k[2])).collect());
        let (f, g, h) = (mk(a), mk(b), mk(e));
        let fg = metric_d(&f, &g, &ctx).unwrap().value;
        let gf = metric_d(&g, &f, &ctx).unwrap().value;
        let gh = metric_d(&g, &h, &ctx).unwrap().value;
        let fh = metric_d(&f, &h, &ctx).unwrap().value;
        prop_assert_eq!(fg, gf);
        prop_assert!(fh <= fg + gh);
        prop_assert_eq!(metric_d(&f, &f, &ctx).unwrap().value, 0.0);
        prop_assert!(fg < 1.0);
    }

    #[test]
    fn weighted_norm_is_homogeneous(k in 0usize..8, re in -4.0..4.0f64, im in -4.0..4.0f64) {
        prop_assume!(re.hypot(im) > 1e-3);
        let phi = Entire::monomial(k);
        let l = c(re, im);
        let a = hv_norm(&phi).unwrap().value;
        let b = hv_norm(&phi.scaled(l)).unwrap().value;
        prop_assert!((b - l.norm() * a).abs() <= 1e-12 * l.norm() * a);
    }
}
