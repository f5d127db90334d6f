//! Exit criteria, one line each. Runs without the libtest harness so the
//! lines always reach stdout.

use std::f64::consts::E;
use std::sync::Arc;
use std::time::Instant;

use holoseq::algebra::{combine, exponent_profile, q_independent_generators, truncate, Entire, MultivariatePolynomial, SequenceExpression, Term};
use holoseq::classify::{classify, osgood_estimate, Thresholds};
use holoseq::geometry::{exhaustion_set_with_density, Domain};
use holoseq::sequence::{FnSequence, Sequence};
use holoseq::spaces::{hv_norm, local_growth, metric_big_d, metric_d, metric_dtilde, x_norm, MetricContext};
use holoseq::witness::{residual_escape, trivial_witness, tolerance, WitnessConfig, WitnessKind, WitnessSequence};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria known to fail; see the README section on the Osgood map.
const KNOWN_RED: &[usize] = &[9];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn witness(kind: WitnessKind, domain: &Domain, c: f64, n_max: usize) -> Arc<WitnessSequence> {
    let cfg = WitnessConfig { n_max, ..WitnessConfig::default() };
    Arc::new(WitnessSequence::new(kind, domain, c, cfg).expect("witness setup"))
}

/// Sup of the member on its certified vanishing set, evaluated here from the
/// stored function rather than read from the certificate.
fn vanishing_sup(seq: &WitnessSequence, n: usize) -> f64 {
    let m = seq.member(n).expect("member");
    let Some(set) = m.vanishing_set() else { return 0.0 };
    let norm = seq.normalization();
    let pts: Vec<Complex64> = set.validation_nodes(0).iter().map(|w| norm.to_global(*w)).collect();
    m.function.eval_many(&pts).expect("eval").iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn witness_certificates(kind: WitnessKind, seqs: &[(&str, Arc<WitnessSequence>)]) -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, seq) in seqs {
        for n in 1..=5 {
            let tau = tolerance(n, 1e-10);
            let small = vanishing_sup(seq, n);
            let probe = seq.eval(n, seq.probe(n)).expect("probe").norm();
            let bound = (n as f64).exp() - 1.0;
            if !(small < 2.0 * tau && probe > bound) {
                ok = false;
                notes.push(format!("{name} n={n}: sup {small:.3e} vs {:.3e}, probe {probe:.4} vs {bound:.4}", 2.0 * tau));
            }
            if n == 4 {
                notes.push(format!("{name} |f_4(probe)| = {probe:.4}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    let _ = kind;
    outcome(ok, format!("{} in {secs:.1}s", notes.join("; ")))
}

fn criterion_3(sp_disc: &Arc<WitnessSequence>) -> Outcome {
    let th = Thresholds::default();
    let plane = Domain::plane();
    let disc = Domain::unit_disc();
    let z_over_n = SequenceExpression::Leaf(Arc::new(trivial_witness(WitnessKind::ZOverN, &plane).unwrap()));
    let z_pow_n = SequenceExpression::Leaf(Arc::new(trivial_witness(WitnessKind::ZPowerN, &disc).unwrap()));
    let sp = SequenceExpression::Leaf(sp_disc.clone());
    sp_disc.prefetch(&(1..=8).collect::<Vec<_>>()).expect("build to n = 8");
    let cases: Vec<(SequenceExpression, &Domain, &str)> = vec![
        (z_over_n.clone(), &plane, "compact-not-uniform"),
        (z_pow_n.clone(), &disc, "compact-not-uniform"),
        (sp.clone(), &disc, "pointwise-not-compact"),
        (truncate(z_over_n, 3).unwrap(), &plane, "uniform"),
        (truncate(z_pow_n, 3).unwrap(), &disc, "uniform"),
        (truncate(sp, 4).unwrap(), &disc, "uniform"),
    ];
    let mut wrong = Vec::new();
    let mut got = Vec::new();
    for (f, d, want) in &cases {
        let v = classify(f, d, 8, &th);
        got.push(format!("{} -> {}", v.label, v.class()));
        if v.class() != *want {
            wrong.push(format!("{} gave {} (want {want})", v.label, v.class()));
        }
    }
    if wrong.is_empty() {
        outcome(true, got.join(", "))
    } else {
        outcome(false, wrong.join("; "))
    }
}

fn criterion_4() -> Outcome {
    let p = MultivariatePolynomial::new(vec![
        Term { lambda: re(1.0), alpha: vec![1, 1] },
        Term { lambda: re(-1.0), alpha: vec![0, 2] },
    ])
    .unwrap();
    let h = q_independent_generators(2).unwrap();
    let prof = exponent_profile(&p, &h).unwrap();
    let disc = Domain::unit_disc();
    let seqs: Vec<Arc<WitnessSequence>> = h.values().iter().map(|c| witness(WitnessKind::SpNotSuc, &disc, *c, 5)).collect();
    let expr = combine(&p, seqs.iter().map(|s| SequenceExpression::Leaf(s.clone())).collect()).unwrap();
    let sched = seqs[0].schedule().unwrap();
    let pts: Vec<(f64, f64)> = (3..=5)
        .map(|n| (n as f64, expr.eval(n, re(sched.s(n + 1))).unwrap().norm().ln()))
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let ck = 3f64.sqrt();
    let rel = (slope - ck).abs() / ck;
    outcome(
        rel < 0.15 && prof.distinct && (prof.dominant_value - ck).abs() < 1e-12,
        format!("slope {slope:.5} vs sqrt(3) (rel {rel:.3}), exponents distinct: {}", prof.distinct),
    )
}

fn criterion_5(base: &Arc<WitnessSequence>) -> Outcome {
    let mut worst_k: f64 = 0.0;
    for k in 0..=10 {
        let exact = if k == 0 { 1.0 } else { (k as f64 / E).powi(k as i32) };
        let got = hv_norm(&Entire::monomial(k)).unwrap().value;
        worst_k = worst_k.max((got - exact).abs());
    }
    let g = SequenceExpression::Leaf(base.clone()).product(Entire::monomial(2));
    let ng = x_norm(&g, base).unwrap().value;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_h: f64 = 0.0;
    for _ in 0..100 {
        let l = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let v = x_norm(&g.clone().scale(l), base).unwrap().value;
        worst_h = worst_h.max((v - l.norm() * ng).abs() / (l.norm() * ng));
    }
    outcome(worst_k <= 1e-9 && worst_h <= 1e-12, format!("monomial gap {worst_k:.2e}, homogeneity gap {worst_h:.2e}"))
}

fn criterion_6(base: &Arc<WitnessSequence>) -> Outcome {
    let sched = base.schedule().unwrap();
    let delta = sched.t(1) / 2.0;
    let mut prev = 0.0;
    let mut ok = true;
    let mut vals = Vec::new();
    for n in 2..=5 {
        let sup = local_growth(&Entire::monomial(1), base.as_ref(), delta, n, 20.0).unwrap();
        let bound = 0.9 * base.c() * sched.s(n + 1) * ((n as f64).exp() - 1.0);
        ok &= sup > bound && sup > prev;
        vals.push(format!("n={n}: {sup:.3e} > {bound:.3e}"));
        prev = sup;
    }
    outcome(ok, vals.join(", "))
}

type Coeffs = Vec<[Complex64; 3]>;

fn random_sequence(rng: &mut ChaCha8Rng, n_trunc: usize) -> (Coeffs, usize) {
    let cut = rng.gen_range(1..=n_trunc + 1);
    let coeffs = (0..n_trunc)
        .map(|_| std::array::from_fn(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))))
        .collect();
    (coeffs, cut)
}

fn as_sequence(c: Coeffs, cut: usize) -> impl Sequence {
    FnSequence {
        name: "random".into(),
        f: move |n: usize, z: Complex64| {
            if n >= cut || n > c.len() {
                return Complex64::new(0.0, 0.0);
            }
            let a = &c[n - 1];
            a[0] + z * (a[1] + z * a[2])
        },
    }
}

fn criterion_7() -> Outcome {
    let ctx = MetricContext::new(&Domain::unit_disc(), 6, 6.0).unwrap();
    let n_trunc = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut fails = Vec::new();
    for t in 0..200 {
        let seqs: Vec<_> = (0..3)
            .map(|_| {
                let (c, cut) = random_sequence(&mut rng, n_trunc);
                as_sequence(c, cut)
            })
            .collect();
        let (f, g, h) = (&seqs[0], &seqs[1], &seqs[2]);
        let idx = rng.gen_range(1..=n_trunc);
        let d = |a: &dyn Sequence, b: &dyn Sequence| {
            metric_d(&|z| a.eval_many(idx, z), &|z| b.eval_many(idx, z), &ctx).unwrap().value
        };
        let dt = |a: &dyn Sequence, b: &dyn Sequence| metric_dtilde(a, b, &ctx, n_trunc).unwrap().value;
        let db = |a: &dyn Sequence, b: &dyn Sequence| metric_big_d(a, b, &ctx, n_trunc).unwrap().value;
        for (name, dist) in [
            ("d", &d as &dyn Fn(&dyn Sequence, &dyn Sequence) -> f64),
            ("dtilde", &dt),
            ("D", &db),
        ] {
            let (fg, gf, gh, fh) = (dist(f, g), dist(g, f), dist(g, h), dist(f, h));
            if fg != gf {
                fails.push(format!("triple {t}: {name} asymmetric"));
            }
            if fh > fg + gh {
                fails.push(format!("triple {t}: {name} triangle {fh} > {fg} + {gh}"));
            }
        }
        if dt(f, g) >= 1.0 {
            fails.push(format!("triple {t}: dtilde >= 1"));
        }
        let n0 = rng.gen_range(1..=n_trunc);
        let full = {
            let (c, _) = random_sequence(&mut rng, n_trunc);
            SequenceExpression::Leaf(Arc::new(as_sequence(c, usize::MAX)))
        };
        let cut = truncate(full.clone(), n0).unwrap();
        let v = dt(&full, &cut);
        if v > 2f64.powi(1 - n0 as i32) {
            fails.push(format!("triple {t}: truncation distance {v} at n0 = {n0}"));
        }
    }
    outcome(fails.is_empty(), if fails.is_empty() { "200 triples".to_string() } else { fails.join("; ") })
}

fn criterion_8() -> Outcome {
    let disc = Domain::unit_disc();
    let base = Arc::new(trivial_witness(WitnessKind::ZPowerN, &disc).unwrap());
    let esc = residual_escape(base, None, 0.5, 3, 6).unwrap();
    let mut ok = !esc.steps.is_empty();
    let mut notes = Vec::new();
    for s in &esc.steps {
        let n = s.n;
        let k = exhaustion_set_with_density(&disc, n, 20.0);
        let pts = k.validation_nodes(0);
        let g = s.function.eval_many(&pts).unwrap();
        let dev = pts.iter().zip(&g).map(|(z, v)| (v - z.powu(n as u32)).norm()).fold(0.0, f64::max);
        let at = s.function.eval(s.z).unwrap().norm();
        ok &= dev < 0.5 / n as f64 && at > 1.0 && !k.contains(s.z);
        notes.push(format!("n={n}: dev {dev:.3e}, |g(z_n)| {at:.3}"));
    }
    outcome(ok, format!("n0 = {}, {}", esc.n0, notes.join(", ")))
}

fn criterion_9(sp_disc: &Arc<WitnessSequence>) -> Outcome {
    let o = osgood_estimate(sp_disc.as_ref(), &Domain::unit_disc(), 5, 0.1, 2.0, &Thresholds::default()).unwrap();
    let mut seg_flagged = 0;
    let (mut far, mut far_flagged) = (0, 0);
    for c in &o.cells {
        let h = c.size / 2.0;
        let (x0, x1, y0, y1) = (c.center.re - h, c.center.re + h, c.center.im - h, c.center.im + h);
        let meets = y0 <= 0.0 && y1 >= 0.0 && x1 >= 0.0 && x0 < 1.0;
        let dx = (x0 - 1.0).max(-x1).max(0.0);
        let dy = y0.max(-y1).max(0.0);
        if meets && c.flagged {
            seg_flagged += 1;
        }
        if dx.hypot(dy) > 0.1 {
            far += 1;
            if c.flagged {
                far_flagged += 1;
            }
        }
    }
    let frac = far_flagged as f64 / far.max(1) as f64;
    outcome(
        seg_flagged == 0 && frac >= 0.9,
        format!("{seg_flagged} flagged cells meet the segment, {far_flagged}/{far} far cells flagged ({:.1}%)", 100.0 * frac),
    )
}

fn main() {
    let plane = Domain::plane();
    let disc = Domain::unit_disc();
    let sp_plane = witness(WitnessKind::SpNotSuc, &plane, 1.0, 5);
    let sp_disc = witness(WitnessKind::SpNotSuc, &disc, 1.0, 8);
    let suc_plane = witness(WitnessKind::SucNotSu, &plane, 1.0, 5);
    let suc_disc = witness(WitnessKind::SucNotSu, &disc, 1.0, 5);

    let mut criteria: Vec<(usize, &str, Box<dyn FnOnce() -> Outcome>)> = Vec::new();
    criteria.push((1, "pointwise-not-compact witness certificates", {
        let s = vec![("plane", sp_plane.clone()), ("disc", sp_disc.clone())];
        Box::new(move || witness_certificates(WitnessKind::SpNotSuc, &s))
    }));
    criteria.push((2, "compact-not-uniform witness certificates", {
        let s = vec![("plane", suc_plane), ("disc", suc_disc)];
        Box::new(move || witness_certificates(WitnessKind::SucNotSu, &s))
    }));
    let s3 = sp_disc.clone();
    criteria.push((3, "classifier concordance at n_max = 8", Box::new(move || criterion_3(&s3))));
    criteria.push((4, "free algebra growth follows the dominant exponent", Box::new(criterion_4)));
    let s5 = sp_disc.clone();
    criteria.push((5, "weighted norms", Box::new(move || criterion_5(&s5))));
    let s6 = sp_disc.clone();
    criteria.push((6, "local growth of z * f_n near the origin", Box::new(move || criterion_6(&s6))));
    criteria.push((7, "metric axioms on random truncated triples", Box::new(criterion_7)));
    criteria.push((8, "escape from A_3 for z^n on the disc", Box::new(criterion_8)));
    let s9 = sp_disc.clone();
    criteria.push((9, "Osgood map of the pointwise witness on the disc", Box::new(move || criterion_9(&s9))));

    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id}: {name} [{:.1}s] {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.passed && !KNOWN_RED.contains(&id) {
            unexpected.push(id);
        }
        if o.passed && KNOWN_RED.contains(&id) {
            println!("note: criterion {id} is listed as known red but passed");
        }
    }
    if !unexpected.is_empty() {
        eprintln!("failing criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
