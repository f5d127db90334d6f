//! Metrics on holomorphic functions and on sequences of them, and the
//! weighted sup norm with weight `e^{-|z|}`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Entire, SequenceExpression};
use crate::error::{Error, Result};
use crate::geometry::{exhaustion_set_with_density, CompactRegion, Domain};
use crate::sequence::Sequence;
use crate::witness::WitnessSequence;

/// Function of one complex variable evaluated on a batch of points.
pub type Func<'a> = &'a dyn Fn(&[Complex64]) -> Result<Vec<Complex64>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContextConfig {
    pub domain: Domain,
    #[serde(default = "default_j")]
    pub j: usize,
    #[serde(default = "default_density")]
    pub density: f64,
}

fn default_j() -> usize {
    8
}

fn default_density() -> f64 {
    8.0
}

/// Exhaustion prefix `K_1..K_J` with fixed sample grids.
#[derive(Clone, Debug)]
pub struct MetricContext {
    pub domain: Domain,
    pub grids: Vec<Vec<Complex64>>,
    pub density: f64,
}

impl MetricContext {
    pub fn new(domain: &Domain, j: usize, density: f64) -> Result<MetricContext> {
        if j < 3 {
            return Err(Error::Config(format!("need at least 3 exhaustion sets, got {j}")));
        }
        if !(density > 0.0) {
            return Err(Error::Config("density must be positive".into()));
        }
        let grids = (1..=j)
            .map(|n| {
                let k = exhaustion_set_with_density(domain, n, density);
                let mut g = k.fit_grid.all();
                g.extend(k.fit_nodes(0));
                g
            })
            .collect();
        Ok(MetricContext { domain: domain.clone(), grids, density })
    }

    pub fn from_config(c: &ContextConfig) -> Result<MetricContext> {
        MetricContext::new(&c.domain, c.j, c.density)
    }

    pub fn j(&self) -> usize {
        self.grids.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub summands: Vec<f64>,
    /// Bound on the omitted part of the series.
    pub tail_bound: f64,
    pub warning: Option<String>,
}

fn bounded(u: f64) -> f64 {
    if u.is_infinite() {
        1.0
    } else {
        u / (1.0 + u)
    }
}

fn series(us: &[f64]) -> (f64, Vec<f64>) {
    let summands: Vec<f64> = us.iter().enumerate().map(|(i, u)| 0.5f64.powi(i as i32 + 1) * bounded(*u)).collect();
    (summands.iter().sum(), summands)
}

fn sup_diff(f: &[Complex64], g: &[Complex64]) -> f64 {
    f.iter().zip(g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

/// `sum_j 2^{-j} u_j / (1 + u_j)`, `u_j` the sampled sup of `|f - g|` on `K_j`.
pub fn metric_d(f: Func, g: Func, ctx: &MetricContext) -> Result<MetricValue> {
    let us: Vec<f64> = ctx.grids.iter().map(|pts| Ok(sup_diff(&f(pts)?, &g(pts)?))).collect::<Result<_>>()?;
    let (value, summands) = series(&us);
    Ok(MetricValue { value, summands, tail_bound: 0.5f64.powi(ctx.j() as i32), warning: None })
}

fn member<'a>(s: &'a dyn Sequence, n: usize) -> impl Fn(&[Complex64]) -> Result<Vec<Complex64>> + 'a {
    move |z: &[Complex64]| s.eval_many(n, z)
}

/// `sum_{n <= n_trunc} 2^{-n} d(F_n, G_n) / (1 + d(F_n, G_n))`.
pub fn metric_dtilde(f: &dyn Sequence, g: &dyn Sequence, ctx: &MetricContext, n_trunc: usize) -> Result<MetricValue> {
    if n_trunc < 1 {
        return Err(Error::Config("truncation index starts at 1".into()));
    }
    let ds: Vec<f64> = (1..=n_trunc)
        .map(|n| Ok(metric_d(&member(f, n), &member(g, n), ctx)?.value))
        .collect::<Result<_>>()?;
    let (value, summands) = series(&ds);
    Ok(MetricValue { value, summands, tail_bound: 0.5f64.powi(n_trunc as i32), warning: None })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub value: f64,
    pub argmax_n: usize,
    /// Per-index sampled sups.
    pub trajectory: Vec<f64>,
    /// Largest sup over the last third of indices, an estimate for the tail.
    pub tail_estimate: f64,
    pub divergent: bool,
}

fn sup_over_n(f: &dyn Sequence, g: Option<&dyn Sequence>, pts: &[Complex64], n_trunc: usize) -> Result<SeminormReport> {
    if n_trunc < 1 {
        return Err(Error::Config("truncation index starts at 1".into()));
    }
    let mut traj = Vec::with_capacity(n_trunc);
    for n in 1..=n_trunc {
        let a = f.eval_many(n, pts)?;
        let s = match g {
            Some(g) => sup_diff(&a, &g.eval_many(n, pts)?),
            None => a.iter().map(|v| v.norm()).fold(0.0, f64::max),
        };
        traj.push(s);
    }
    let argmax = (0..traj.len()).fold(0, |b, i| if traj[i] > traj[b] { i } else { b });
    let start = n_trunc - n_trunc.div_ceil(3);
    let tail = &traj[start..];
    let tail_estimate = tail.iter().cloned().fold(0.0, f64::max);
    let divergent = tail.len() >= 2 && tail.windows(2).all(|w| w[1] > w[0]) && tail_estimate > 0.0;
    Ok(SeminormReport { value: traj[argmax], argmax_n: argmax + 1, trajectory: traj, tail_estimate, divergent })
}

/// `sup_n sup_K |F_n|` over `n <= n_trunc`.
pub fn seq_sup_seminorm(f: &dyn Sequence, k: &CompactRegion, n_trunc: usize) -> Result<SeminormReport> {
    let mut pts = k.fit_grid.all();
    pts.extend(k.fit_nodes(0));
    sup_over_n(f, None, &pts, n_trunc)
}

/// `sum_j 2^{-j} ||F - G||_{K_j} / (1 + ||F - G||_{K_j})`.
pub fn metric_big_d(f: &dyn Sequence, g: &dyn Sequence, ctx: &MetricContext, n_trunc: usize) -> Result<MetricValue> {
    let reports: Vec<SeminormReport> =
        ctx.grids.iter().map(|pts| sup_over_n(f, Some(g), pts, n_trunc)).collect::<Result<_>>()?;
    let us: Vec<f64> = reports.iter().map(|r| r.value).collect();
    let (value, summands) = series(&us);
    let warning = reports
        .iter()
        .position(|r| r.divergent)
        .map(|j| format!("sup over n on K_{} is still growing at n = {n_trunc}", j + 1));
    Ok(MetricValue { value, summands, tail_bound: 0.5f64.powi(ctx.j() as i32), warning })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub argmax: Complex64,
    /// Radius of the disc that was searched.
    pub radius: f64,
    /// The envelope fell for three doublings in a row and stayed below the
    /// maximum found.
    pub certified: bool,
}

impl Entire {
    pub fn scaled(&self, s: Complex64) -> Entire {
        match self {
            Entire::Polynomial(c) => Entire::Polynomial(c.iter().map(|a| a * s).collect()),
            Entire::ExpSum { lambdas, cs } => {
                Entire::ExpSum { lambdas: lambdas.iter().map(|l| l * s).collect(), cs: cs.clone() }
            }
        }
    }

    /// Parses `"1"`, `"z"`, `"z^k"`, or a JSON form of the type.
    pub fn parse(s: &str) -> Result<Entire> {
        let t = s.trim();
        if t == "1" {
            return Ok(Entire::monomial(0));
        }
        if t == "z" {
            return Ok(Entire::monomial(1));
        }
        if let Some(k) = t.strip_prefix("z^") {
            let k: usize = k.parse().map_err(|_| Error::Config(format!("bad exponent in {t:?}")))?;
            return Ok(Entire::monomial(k));
        }
        serde_json::from_str(t).map_err(|e| Error::Config(format!("cannot parse function {t:?}: {e}")))
    }
}

const ANGLES: usize = 256;
const RADIAL_STEPS: usize = 4000;

fn circle_max(phi: &Entire, r: f64) -> (f64, Complex64) {
    if r == 0.0 {
        let z = Complex64::new(0.0, 0.0);
        return (phi.eval(z).norm(), z);
    }
    let at = |th: f64| {
        let z = Complex64::from_polar(r, th);
        (phi.eval(z).norm(), z)
    };
    let h = 2.0 * PI / ANGLES as f64;
    let best = (0..ANGLES).map(|k| k as f64 * h).fold(0.0, |b, th| if at(th).0 > at(b).0 { th } else { b });
    let th = golden_max(|t| at(t).0, best - h, best + h);
    let (v, z) = at(th);
    let (v0, z0) = at(best);
    if v0 > v {
        (v0, z0)
    } else {
        (v, z)
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}

fn admissible(phi: &Entire) -> Result<()> {
    match phi {
        Entire::Polynomial(_) => Ok(()),
        Entire::ExpSum { cs, .. } => {
            if cs.iter().all(|c| c.abs() < 1.0) {
                Ok(())
            } else {
                Err(Error::Rejected("exponential sums need every |c| < 1 to have finite weighted norm".into()))
            }
        }
    }
}

/// `sup_z e^{-|z|} |phi(z)|`.
pub fn hv_norm(phi: &Entire) -> Result<NormReport> {
    admissible(phi)?;
    let env = |r: f64| (-r).exp() * circle_max(phi, r).0;
    let mut best = env(0.0);
    let mut r = 1.0f64;
    let mut falls = 0;
    let mut prev = best;
    let mut certified = false;
    while r < 1e6 {
        let e = env(r);
        best = best.max(e);
        falls = if e < prev { falls + 1 } else { 0 };
        prev = e;
        if falls >= 3 && e < best {
            certified = true;
            break;
        }
        r *= 2.0;
    }
    let radius = r;
    let h = radius / RADIAL_STEPS as f64;
    let k = (0..=RADIAL_STEPS).fold(0, |b, k| if env(k as f64 * h) > env(b as f64 * h) { k } else { b });
    let lo = (k as f64 - 1.0).max(0.0) * h;
    let rr = golden_max(env, lo, (k as f64 + 1.0) * h);
    let (rr, v) = if env(rr) >= env(k as f64 * h) { (rr, env(rr)) } else { (k as f64 * h, env(k as f64 * h)) };
    let argmax = circle_max(phi, rr).1;
    Ok(NormReport { value: v, argmax, radius, certified })
}

/// Splits `g` into `phi * base` when it was built that way.
fn factor(g: &SequenceExpression, base: &Arc<WitnessSequence>) -> Option<Entire> {
    let is_base = |s: &Arc<dyn Sequence>| std::ptr::eq(Arc::as_ptr(s) as *const u8, Arc::as_ptr(base) as *const u8);
    match g {
        SequenceExpression::Leaf(s) if is_base(s) => Some(Entire::monomial(0)),
        SequenceExpression::Product(phi, f) => match f.as_ref() {
            SequenceExpression::Leaf(s) if is_base(s) => Some(phi.clone()),
            _ => None,
        },
        SequenceExpression::SpanMember { lambdas, cs, f } => match f.as_ref() {
            SequenceExpression::Leaf(s) if is_base(s) => Some(Entire::ExpSum { lambdas: lambdas.clone(), cs: cs.clone() }),
            _ => None,
        },
        SequenceExpression::Scale(l, f) => factor(f, base).map(|p| p.scaled(*l)),
        _ => None,
    }
}

/// Norm of `g = phi * f` in the space built over the base `f`: `||phi||_v`.
pub fn x_norm(g: &SequenceExpression, base: &Arc<WitnessSequence>) -> Result<NormReport> {
    match factor(g, base) {
        Some(phi) => hv_norm(&phi),
        None => Err(Error::Rejected(format!("{} is not a multiple of the registered base", g.label()))),
    }
}

/// Order of vanishing of a polynomial at `a`; `None` for the zero
/// polynomial or non-polynomial input.
pub fn zero_multiplicity(phi: &Entire, a: Complex64) -> Option<usize> {
    let Entire::Polynomial(c) = phi else { return None };
    // Taylor coefficients of phi(z + a) by repeated synthetic division
    let mut coeffs = c.clone();
    let scale = c.iter().map(|x| x.norm()).fold(0.0, f64::max) * (1.0 + a.norm()).powi(c.len() as i32);
    for k in 0..coeffs.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in (k..coeffs.len()).rev() {
            acc = acc * a + coeffs[j];
            coeffs[j] = acc;
        }
        if coeffs[k].norm() > 1e-12 * scale {
            return Some(k);
        }
    }
    None
}

/// `sup |phi * f_n|` over the grid of `{|z| <= delta}` together with the
/// base's moving probes in that disc.
pub fn local_growth(phi: &Entire, base: &dyn Sequence, delta: f64, n: usize, density: f64) -> Result<f64> {
    let disc = CompactRegion::closed_disc("D(0,delta)", Complex64::new(0.0, 0.0), delta, density);
    let mut pts = disc.fit_grid.all();
    pts.extend(base.compact_probes(n).into_iter().filter(|z| z.norm() <= delta));
    let v = base.eval_many(n, &pts)?;
    Ok(pts.iter().zip(v).map(|(z, f)| (phi.eval(*z) * f).norm()).fold(0.0, f64::max))
}
