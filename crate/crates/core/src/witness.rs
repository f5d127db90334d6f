//! Explicit witness sequences: pointwise-but-not-compact, compact-but-not-
//! uniform, the closed-form examples `z/n` and `z^n`, and the escape
//! construction that pushes a compactly convergent sequence out of the sets
//! `A_k = {g : |g_n| <= 1 on K for all n >= k}`.
//!
//! All constructions work in a local frame where `0` lies in the domain and
//! the segment `[0, R)` runs along the positive real axis. Functions are
//! returned in the original variable.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    distance_to_complement, exhaustion_set_with_density, pole_anchor_set, BBox, CompactRegion, Domain, PoleAnchorSet,
    Predicate, RegionKind, Shape, DEFAULT_DENSITY,
};
use crate::runge::{self, FitOptions, FitReport, PiecewiseConstantTarget, RationalFunction};
use crate::sequence::Sequence;

const C0: Complex64 = Complex64::new(0.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `max(e^{-n^2}, floor)`.
pub fn tolerance(n: usize, floor: f64) -> f64 {
    (-((n * n) as f64)).exp().max(floor)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessConfig {
    pub gamma: f64,
    pub density: f64,
    pub tau_floor: f64,
    pub max_degree: usize,
    pub n_max: usize,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig { gamma: 0.5, density: DEFAULT_DENSITY, tau_floor: 1e-10, max_degree: 1024, n_max: 5 }
    }
}

/// Rigid motion `w = rotation * (z - shift)` into the local frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: Complex64,
    pub rotation: Complex64,
}

impl Normalization {
    pub fn for_domain(domain: &Domain) -> Result<Normalization> {
        let shift = domain
            .interior_point()
            .ok_or_else(|| Error::Config("domain has no interior point".into()))?;
        Ok(Normalization { shift, rotation: re(1.0) })
    }

    pub fn to_local(&self, z: Complex64) -> Complex64 {
        self.rotation * (z - self.shift)
    }

    pub fn to_global(&self, w: Complex64) -> Complex64 {
        w / self.rotation + self.shift
    }

    pub fn affine(&self) -> runge::Affine {
        runge::Affine { a: self.rotation, b: -self.rotation * self.shift }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulletCheck {
    pub n: usize,
    pub bullet: String,
    pub distance: f64,
    pub required: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadiiSchedule {
    /// `None` when the ray `[0, +inf)` lies in the domain.
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
    pub gamma: f64,
    pub n_max: usize,
    /// `s_1 ..= s_{n_max + 1}`, local frame.
    pub s: Vec<f64>,
    /// `t_1 ..= t_{n_max + 1}`.
    pub t: Vec<f64>,
    /// `r_1 ..= r_{n_max}`.
    pub r: Vec<f64>,
    pub checks: Vec<BulletCheck>,
    pub normalization: Normalization,
}

impl RadiiSchedule {
    pub fn s(&self, n: usize) -> f64 {
        self.s[n - 1]
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t[n - 1]
    }

    pub fn r(&self, n: usize) -> f64 {
        self.r[n - 1]
    }

    pub fn big_r(&self) -> f64 {
        self.big_r.unwrap_or(f64::INFINITY)
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Domain, anchors and ray data in the local frame.
#[derive(Clone)]
struct Frame {
    norm: Normalization,
    local: Domain,
    anchors: PoleAnchorSet,
    big_r: f64,
}

impl Frame {
    fn new(domain: &Domain) -> Result<Frame> {
        domain.validate()?;
        let norm = Normalization::for_domain(domain)?;
        let local = domain.rigid(norm.shift, norm.rotation);
        let anchors = pole_anchor_set(&local, local.poles.as_deref())?;
        let big_r = local.ray_extent();
        if !(big_r > 0.0) {
            return Err(Error::Config("domain contains no segment [0, x] with x > 0".into()));
        }
        Ok(Frame { norm, local, anchors, big_r })
    }
}

fn dist_to_segment(z: Complex64, a: f64, b: f64) -> f64 {
    let x = z.re.clamp(a, b);
    (z - re(x)).norm()
}

/// Compact exhaustion of `G = Omega \ [0, R]`: a lens around `t_1` that
/// stays a fixed fraction away from the segment and grows slowly with `n`.
fn lens_compact(frame: &Frame, sigma: f64, n: usize, density: f64) -> CompactRegion {
    let nf = n as f64;
    let ln = nf.ln();
    let rho = sigma * (0.35 + 0.05 * ln);
    let delta = 0.25 * sigma / (1.0 + 0.1 * ln);
    let big_r = frame.big_r;
    let shape = frame.local.shape.clone();
    let predicate: Predicate = Arc::new(move |z: Complex64| {
        z.norm() <= nf
            && shape.depth(z) >= 1.0 / nf
            && (z - re(sigma)).norm() <= rho
            && dist_to_segment(z, 0.0, big_r.min(1e300)) >= delta
    });
    let bbox = BBox { min: Complex64::new(sigma - rho, -rho), max: Complex64::new(sigma + rho, rho) };
    CompactRegion::area(format!("K_{n}"), predicate, bbox, density)
}

/// `K_n(Omega)`, cut to `|z| <= n - 1/2` when the ray is unbounded so that
/// `t_n = n` stays outside.
fn suc_compact(frame: &Frame, n: usize, density: f64) -> CompactRegion {
    if frame.big_r.is_finite() {
        return exhaustion_set_with_density(&frame.local, n, density);
    }
    let nf = n as f64;
    let outer = nf - 0.5;
    let shape = frame.local.shape.clone();
    let predicate: Predicate = Arc::new(move |z: Complex64| z.norm() <= outer && shape.depth(z) >= 1.0 / nf);
    let mut bbox = BBox::square(outer);
    if let Some(b) = frame.local.shape.bbox() {
        bbox = bbox.intersect(&b);
    }
    let mut region = CompactRegion::area(format!("K_{n}"), predicate.clone(), bbox, density);
    if region.fit_grid.is_empty() && predicate(C0) {
        region = CompactRegion::new(format!("K_{n}"), RegionKind::Points(vec![C0]), density);
    }
    region
}

fn region_points(region: &CompactRegion) -> Vec<Complex64> {
    let mut v = region.fit_grid.all();
    if let RegionKind::Area { .. } = region.kind {
        v.extend(region.fit_nodes(0));
    }
    v
}

fn min_dist<F: Fn(Complex64) -> f64>(pts: &[Complex64], f: F) -> f64 {
    pts.iter().map(|z| f(*z)).fold(f64::INFINITY, f64::min)
}

fn schedule_in(frame: &Frame, gamma: f64, n_max: usize, density: f64) -> Result<RadiiSchedule> {
    if n_max < 1 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    let big_r = frame.big_r;
    if !(gamma > 0.0 && gamma < big_r.min(1.0)) {
        return Err(Error::Config(format!("gamma must lie in (0, min(1, R)) = (0, {}), got {gamma}", big_r.min(1.0))));
    }
    let t_of = |n: usize| if big_r.is_finite() { big_r - gamma / (n * n) as f64 } else { n as f64 };
    let t: Vec<f64> = (1..=n_max + 1).map(t_of).collect();
    let t1 = t[0];
    let s: Vec<f64> = (1..=n_max + 1).map(|n| t1 / (2 * n * n) as f64).collect();
    let mut r = Vec::with_capacity(n_max);
    let mut checks = Vec::new();
    let complement = |z: Complex64| distance_to_complement(&frame.local, z);
    for n in 1..=n_max {
        let (sn, sn1, tn) = (s[n - 1], s[n], t[n - 1]);
        if !(sn1 < sn && sn < t1 && t1 <= tn && tn < t[n] && t[n] < big_r) {
            return Err(Error::Schedule { n, bullet: "ordering 0 < s_{n+1} < s_n < t_1 <= t_n < t_{n+1} < R".into() });
        }
        let lens = region_points(&lens_compact(frame, t1, n, density));
        let kn = region_points(&suc_compact(frame, n, density));
        let d_lens = min_dist(&lens, |z| dist_to_segment(z, 0.0, tn));
        let seg: Vec<Complex64> = (0..=200).map(|k| re(sn + (tn - sn) * k as f64 / 200.0)).collect();
        let mut d_omega = min_dist(&lens, complement).min(min_dist(&seg, complement));
        d_omega = d_omega.min(complement(C0)).min(complement(re(sn1)));
        let d_tn = min_dist(&kn, |z| (z - re(tn)).norm());
        let m = d_lens.min(sn1).min(sn - sn1).min(d_omega).min(d_tn);
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Schedule { n, bullet: "no positive separation radius".into() });
        }
        let rn = 0.5 * m;
        let mut push = |bullet: &str, distance: f64, required: f64| {
            checks.push(BulletCheck { n, bullet: bullet.into(), distance, required, holds: distance >= required });
        };
        push("(K_n + D(0,r_n)) and ([0,t_n] + D(0,r_n)) disjoint", d_lens, 2.0 * rn);
        push("D(0,r_n) and D(s_{n+1},r_n) disjoint", sn1, 2.0 * rn);
        push("D(s_{n+1},r_n) and D(s_n,r_n) disjoint", sn - sn1, 2.0 * rn);
        push("L_n + D(0,r_n) inside the domain", d_omega, rn);
        push("D(t_n,r_n) and K_n + D(0,r_n) disjoint", d_tn, 2.0 * rn);
        r.push(rn);
    }
    if let Some(bad) = checks.iter().find(|c| !c.holds) {
        return Err(Error::Schedule { n: bad.n, bullet: bad.bullet.clone() });
    }
    Ok(RadiiSchedule {
        big_r: big_r.is_finite().then_some(big_r),
        gamma,
        n_max,
        s,
        t,
        r,
        checks,
        normalization: frame.norm,
    })
}

/// Radii, probe points and separation checks for `n = 1..=n_max`.
pub fn radii_schedule(domain: &Domain, gamma: f64, n_max: usize) -> Result<RadiiSchedule> {
    let frame = Frame::new(domain)?;
    schedule_in(&frame, gamma, n_max, DEFAULT_DENSITY)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// Pointwise but not compactly convergent.
    SpNotSuc,
    /// Compactly but not uniformly convergent.
    SucNotSu,
    ZOverN,
    ZPowerN,
}

impl WitnessKind {
    pub fn parse(s: &str) -> Result<WitnessKind> {
        match s {
            "sp-not-suc" => Ok(WitnessKind::SpNotSuc),
            "suc-not-su" => Ok(WitnessKind::SucNotSu),
            "z-over-n" => Ok(WitnessKind::ZOverN),
            "z-power-n" => Ok(WitnessKind::ZPowerN),
            _ => Err(Error::Config(format!("unknown witness kind {s:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            WitnessKind::SpNotSuc => "sp-not-suc",
            WitnessKind::SucNotSu => "suc-not-su",
            WitnessKind::ZOverN => "z-over-n",
            WitnessKind::ZPowerN => "z-power-n",
        }
    }

    /// (pointwise, compact, uniform) membership claimed by the construction.
    pub fn claimed(&self) -> (bool, bool, bool) {
        match self {
            WitnessKind::SpNotSuc => (true, false, false),
            _ => (true, true, false),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Certificate {
    fn above(name: &str, value: f64, bound: f64) -> Certificate {
        Certificate { name: name.into(), value, bound, passed: value > bound }
    }

    fn below(name: &str, value: f64, bound: f64) -> Certificate {
        Certificate { name: name.into(), value, bound, passed: value < bound }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessMember {
    pub n: usize,
    pub function: RationalFunction,
    pub report: Option<FitReport>,
    pub tolerance: f64,
    /// Probe point in the original variable.
    pub probe: Complex64,
    pub certificates: Vec<Certificate>,
    #[serde(skip)]
    target: Option<PiecewiseConstantTarget>,
    #[serde(skip)]
    vanishing_set: Option<CompactRegion>,
}

impl WitnessMember {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }

    /// Compact set on which the member is certified small, local frame.
    pub fn vanishing_set(&self) -> Option<&CompactRegion> {
        self.vanishing_set.as_ref()
    }
}

pub struct WitnessSequence {
    kind: WitnessKind,
    c: f64,
    domain: Domain,
    config: WitnessConfig,
    frame: Frame,
    schedule: Option<RadiiSchedule>,
    cache: Mutex<BTreeMap<usize, Arc<WitnessMember>>>,
}

impl WitnessSequence {
    pub fn new(kind: WitnessKind, domain: &Domain, c: f64, config: WitnessConfig) -> Result<WitnessSequence> {
        let frame = Frame::new(domain)?;
        let schedule = match kind {
            WitnessKind::SpNotSuc | WitnessKind::SucNotSu => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::Config(format!("c must be positive, got {c}")));
                }
                Some(schedule_in(&frame, config.gamma, config.n_max, config.density)?)
            }
            WitnessKind::ZOverN => {
                if domain.shape != Shape::Plane {
                    return Err(Error::Rejected("z/n is a witness only on the whole plane".into()));
                }
                None
            }
            WitnessKind::ZPowerN => {
                if domain.shape != Shape::disc(0.0, 0.0, 1.0) {
                    return Err(Error::Rejected("z^n is a witness only on the unit disc".into()));
                }
                None
            }
        };
        Ok(WitnessSequence {
            kind,
            c,
            domain: domain.clone(),
            config,
            frame,
            schedule,
            cache: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn kind(&self) -> WitnessKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn config(&self) -> &WitnessConfig {
        &self.config
    }

    pub fn schedule(&self) -> Option<&RadiiSchedule> {
        self.schedule.as_ref()
    }

    pub fn n_max(&self) -> usize {
        self.config.n_max
    }

    pub fn normalization(&self) -> Normalization {
        self.frame.norm
    }

    /// Distinguished point of index `n`: `s_{n+1}`, `t_n`, `n` or `1 - 1/(2n^2)`.
    pub fn probe(&self, n: usize) -> Complex64 {
        match (self.kind, &self.schedule) {
            (WitnessKind::SpNotSuc, Some(s)) => self.frame.norm.to_global(re(s.s(n + 1))),
            (WitnessKind::SucNotSu, Some(s)) => self.frame.norm.to_global(re(s.t(n))),
            (WitnessKind::ZOverN, _) => re(n as f64),
            _ => re(1.0 - 0.5 / (n * n) as f64),
        }
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::Config("indices start at 1".into()));
        }
        if self.schedule.is_some() && n > self.config.n_max {
            return Err(Error::Config(format!("index {n} beyond the computed schedule (n_max = {})", self.config.n_max)));
        }
        Ok(())
    }

    /// Builds (or fetches) the `n`-th member. Failed fits are kept with
    /// failing certificates.
    pub fn member(&self, n: usize) -> Result<Arc<WitnessMember>> {
        self.check_index(n)?;
        if let Some(m) = self.cache.lock().unwrap().get(&n) {
            return Ok(m.clone());
        }
        let built = Arc::new(self.build(n)?);
        let mut cache = self.cache.lock().unwrap();
        Ok(cache.entry(n).or_insert(built).clone())
    }

    /// Builds the listed members on up to `crate::worker_threads()` threads.
    pub fn prefetch(&self, ns: &[usize]) -> Result<()> {
        let todo: Vec<usize> = {
            let cache = self.cache.lock().unwrap();
            ns.iter().cloned().filter(|n| !cache.contains_key(n)).collect()
        };
        let workers = crate::worker_threads().min(todo.len()).max(1);
        if workers == 1 {
            for n in todo {
                self.member(n)?;
            }
            return Ok(());
        }
        let next = Mutex::new(todo.into_iter());
        let first_err: Mutex<Option<Error>> = Mutex::new(None);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let n = match next.lock().unwrap().next() {
                        Some(n) => n,
                        None => break,
                    };
                    if let Err(e) = self.member(n) {
                        first_err.lock().unwrap().get_or_insert(e);
                    }
                });
            }
        });
        match first_err.into_inner().unwrap() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Re-measures the stored function against its target; `None` for the
    /// closed-form kinds.
    pub fn revalidate(&self, n: usize) -> Result<Option<f64>> {
        let m = self.member(n)?;
        match &m.target {
            Some(t) => Ok(Some(runge::revalidate(t, &self.local_function(&m.function), &self.fit_options())?)),
            None => Ok(None),
        }
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions { max_degree: self.config.max_degree, ..FitOptions::default() }
    }

    /// The same function read in the local frame.
    fn local_function(&self, f: &RationalFunction) -> RationalFunction {
        let mut g = f.clone();
        g.map = runge::Affine::identity();
        g
    }

    fn build(&self, n: usize) -> Result<WitnessMember> {
        let nf = n as f64;
        match self.kind {
            WitnessKind::ZOverN => {
                let f = RationalFunction::polynomial(vec![C0, re(1.0 / nf)]);
                Ok(self.closed_form(n, f))
            }
            WitnessKind::ZPowerN => {
                let mut coeffs = vec![C0; n + 1];
                coeffs[n] = re(1.0);
                Ok(self.closed_form(n, RationalFunction::polynomial(coeffs)))
            }
            WitnessKind::SpNotSuc | WitnessKind::SucNotSu => self.fit_member(n),
        }
    }

    fn closed_form(&self, n: usize, f: RationalFunction) -> WitnessMember {
        WitnessMember {
            n,
            function: f,
            report: None,
            tolerance: 0.0,
            probe: self.probe(n),
            certificates: vec![],
            target: None,
            vanishing_set: None,
        }
    }

    fn fit_member(&self, n: usize) -> Result<WitnessMember> {
        let sched = self.schedule.as_ref().expect("fitted kinds carry a schedule");
        let density = self.config.density;
        let tau = tolerance(n, self.config.tau_floor);
        let peak = (self.c * n as f64).exp();
        let (target, vanishing) = match self.kind {
            WitnessKind::SpNotSuc => {
                let (sn, sn1, tn) = (sched.s(n), sched.s(n + 1), sched.t(n));
                let lens = lens_compact(&self.frame, sched.t(1), n, density);
                let mut t = PiecewiseConstantTarget::new();
                let nonempty = !lens.fit_grid.is_empty();
                if nonempty {
                    t = t.with(lens.clone(), C0);
                }
                t = t
                    .with(CompactRegion::point("0", C0), C0)
                    .with(CompactRegion::segment("[s_n,t_n]", re(sn), re(tn), density), C0)
                    .with(CompactRegion::point("s_{n+1}", re(sn1)), re(peak));
                (t, nonempty.then_some(lens))
            }
            _ => {
                let kn = suc_compact(&self.frame, n, density);
                let t = PiecewiseConstantTarget::new()
                    .with(kn.clone(), C0)
                    .with(CompactRegion::point("t_n", re(sched.t(n))), re(peak));
                (t, Some(kn))
            }
        };
        target.validate()?;
        let (local, report) = runge::runge_fit_with(&target, &self.frame.anchors, tau, &self.fit_options())?;
        let probe_local = match self.kind {
            WitnessKind::SpNotSuc => re(sched.s(n + 1)),
            _ => re(sched.t(n)),
        };
        let mut certificates = vec![Certificate::above("growth", local.eval(probe_local)?.norm(), peak - 1.0)];
        let sup = match &vanishing {
            Some(k) => local.eval_many(&k.validation_nodes(0))?.iter().map(|v| v.norm()).fold(0.0, f64::max),
            None => 0.0,
        };
        certificates.push(Certificate::below("vanishing", sup, 2.0 * tau));
        certificates.push(Certificate::below("fit", report.achieved_error, tau));
        let mut function = local;
        function.map = self.frame.norm.affine();
        Ok(WitnessMember {
            n,
            function,
            report: Some(report),
            tolerance: tau,
            probe: self.frame.norm.to_global(probe_local),
            certificates,
            target: Some(target),
            vanishing_set: vanishing,
        })
    }

    /// A few fixed points of the domain where the members eventually vanish.
    fn fixed_points(&self) -> Vec<Complex64> {
        let norm = self.frame.norm;
        let mut pts = vec![norm.to_global(C0)];
        let inner = match (self.kind, &self.schedule) {
            (WitnessKind::SpNotSuc, Some(s)) => {
                pts.push(norm.to_global(re(s.s(1))));
                pts.push(norm.to_global(re(s.t(1))));
                Some(lens_compact(&self.frame, s.t(1), 2.min(s.n_max), self.config.density))
            }
            (WitnessKind::SucNotSu, Some(_)) => Some(suc_compact(&self.frame, 2, self.config.density)),
            _ => None,
        };
        if let Some(k) = inner {
            let grid = &k.fit_grid.interior;
            let step = (grid.len() / 12).max(1);
            pts.extend(grid.iter().step_by(step).map(|z| norm.to_global(*z)));
        }
        pts
    }
}

impl Sequence for WitnessSequence {
    fn label(&self) -> String {
        match self.kind {
            WitnessKind::SpNotSuc | WitnessKind::SucNotSu => format!("{}(c={})", self.kind.as_str(), self.c),
            k => k.as_str().to_string(),
        }
    }

    fn eval_many(&self, n: usize, zs: &[Complex64]) -> Result<Vec<Complex64>> {
        match self.kind {
            WitnessKind::ZOverN => {
                self.check_index(n)?;
                Ok(zs.iter().map(|z| z / n as f64).collect())
            }
            WitnessKind::ZPowerN => {
                self.check_index(n)?;
                Ok(zs.iter().map(|z| z.powu(n as u32)).collect())
            }
            _ => self.member(n)?.function.eval_many(zs),
        }
    }

    fn pointwise_points(&self) -> Vec<Complex64> {
        match self.kind {
            WitnessKind::SpNotSuc | WitnessKind::SucNotSu => self.fixed_points(),
            _ => vec![],
        }
    }

    fn compact_probes(&self, n: usize) -> Vec<Complex64> {
        match self.kind {
            WitnessKind::SpNotSuc => vec![self.probe(n)],
            _ => vec![],
        }
    }

    fn escape_probes(&self, n: usize) -> Vec<Complex64> {
        vec![self.probe(n)]
    }
}

pub fn build_sp_not_suc(domain: &Domain, c: f64, n: usize) -> Result<RationalFunction> {
    build_checked(WitnessKind::SpNotSuc, domain, c, n)
}

pub fn build_suc_not_su(domain: &Domain, c: f64, n: usize) -> Result<RationalFunction> {
    build_checked(WitnessKind::SucNotSu, domain, c, n)
}

fn build_checked(kind: WitnessKind, domain: &Domain, c: f64, n: usize) -> Result<RationalFunction> {
    let config = WitnessConfig { n_max: n.max(1), ..WitnessConfig::default() };
    let seq = WitnessSequence::new(kind, domain, c, config)?;
    let m = seq.member(n)?;
    let report = m.report.as_ref().expect("fitted member");
    if !report.success {
        return Err(Error::Fit { n, achieved: report.achieved_error, tol: report.tolerance });
    }
    Ok(m.function.clone())
}

pub fn trivial_witness(kind: WitnessKind, domain: &Domain) -> Result<WitnessSequence> {
    match kind {
        WitnessKind::ZOverN | WitnessKind::ZPowerN => WitnessSequence::new(kind, domain, 0.0, WitnessConfig::default()),
        _ => Err(Error::Config("trivial witnesses are z-over-n and z-power-n".into())),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EscapeStep {
    pub n: usize,
    pub z: Complex64,
    pub r: f64,
    pub function: RationalFunction,
    pub report: FitReport,
    pub certificates: Vec<Certificate>,
}

/// A sequence agreeing with a compactly convergent base up to `n_0 - 1` and
/// exceeding 1 in modulus at escape points `z_n` from then on.
#[derive(Serialize)]
pub struct EscapeConstruction {
    pub base_label: String,
    pub k: usize,
    pub eps: f64,
    pub n0: usize,
    pub n_max: usize,
    pub compact_label: String,
    pub steps: Vec<EscapeStep>,
    #[serde(skip)]
    base: Arc<WitnessSequence>,
}

impl EscapeConstruction {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.certificates.iter().all(|c| c.passed))
    }

    /// Whether the produced sequence leaves `A_k`: some `n >= k` has
    /// `|g_n| > 1` at a point of the compact set used for `A_k`.
    pub fn escapes(&self) -> bool {
        self.steps.iter().any(|s| s.n >= self.k && s.certificates.iter().any(|c| c.name == "escape" && c.passed))
    }

    pub fn base(&self) -> &Arc<WitnessSequence> {
        &self.base
    }

    fn step(&self, n: usize) -> Option<&EscapeStep> {
        self.steps.iter().find(|s| s.n == n)
    }
}

impl Sequence for EscapeConstruction {
    fn label(&self) -> String {
        format!("escape({}, k={}, eps={})", self.base_label, self.k, self.eps)
    }

    fn eval_many(&self, n: usize, zs: &[Complex64]) -> Result<Vec<Complex64>> {
        if n < self.n0 {
            return self.base.eval_many(n, zs);
        }
        match self.step(n) {
            Some(s) => s.function.eval_many(zs),
            None => Err(Error::Config(format!("index {n} beyond the computed escape steps"))),
        }
    }

    fn escape_probes(&self, n: usize) -> Vec<Complex64> {
        self.step(n).map(|s| vec![s.z]).unwrap_or_default()
    }
}

/// Modifies the compactly convergent `base` from the first index `n_0` with
/// `K inside K_n` on, so that `|g_n - f_n| < eps/n` on `K_n` and `|g_n(z_n)| > 1`
/// at a point `z_n` outside `K_n`. `compact` defaults to `K_k`; all sets are in
/// the original variable.
pub fn residual_escape(
    base: Arc<WitnessSequence>,
    compact: Option<&CompactRegion>,
    eps: f64,
    k: usize,
    n_max: usize,
) -> Result<EscapeConstruction> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("eps must lie in (0, 1), got {eps}")));
    }
    if k < 1 || n_max < k {
        return Err(Error::Config(format!("need 1 <= k <= n_max, got k = {k}, n_max = {n_max}")));
    }
    if !base.kind().claimed().1 {
        return Err(Error::Rejected(format!("{} is not compactly convergent", base.label())));
    }
    let frame = &base.frame;
    let density = base.config.density;
    let default_k;
    let (compact, compact_label): (Vec<Complex64>, String) = match compact {
        Some(c) => (c.fit_grid.all().iter().map(|z| frame.norm.to_local(*z)).collect(), c.label.clone()),
        None => {
            default_k = exhaustion_set_with_density(&frame.local, k, density);
            (default_k.fit_grid.all(), default_k.label.clone())
        }
    };
    let n0 = (1..=n_max)
        .find(|&n| {
            let nf = n as f64;
            compact.iter().all(|z| z.norm() <= nf && distance_to_complement(&frame.local, *z) >= 1.0 / nf)
        })
        .ok_or_else(|| Error::Diagnostic(format!("compact set not inside K_n for any n <= {n_max}")))?;
    let opts = FitOptions { max_degree: base.config.max_degree, ..FitOptions::default() };
    let mut steps = Vec::new();
    for n in n0..=n_max {
        let kn = exhaustion_set_with_density(&frame.local, n, density);
        let pts = region_points(&kn);
        let edge = pts.iter().filter(|z| z.im.abs() < 1.0 / density && z.re >= 0.0).map(|z| z.re).fold(0.0, f64::max);
        let zl = if frame.big_r.is_finite() { re(0.5 * (edge + frame.big_r)) } else { re(n as f64 + 1.0) };
        if kn.contains(zl) || !frame.local.contains(zl) {
            return Err(Error::Diagnostic(format!("no escape point outside K_{n} at n = {n}")));
        }
        let gap = min_dist(&pts, |z| (z - zl).norm());
        let r = (0.5 * gap).min(distance_to_complement(&frame.local, zl));
        let b = base.clone();
        let norm = frame.norm;
        let f_n: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync> =
            Arc::new(move |w: Complex64| b.eval(n, norm.to_global(w)).unwrap_or(Complex64::new(f64::NAN, f64::NAN)));
        let target = PiecewiseConstantTarget::new()
            .with_fn(kn.clone(), f_n.clone())
            .with(CompactRegion::point("z_n", zl), re(2.0));
        target.validate()?;
        let tol = eps / n as f64;
        let (mut g, report) = runge::runge_fit_with(&target, &frame.anchors, tol, &opts)?;
        let val = kn.validation_nodes(0);
        let gv = g.eval_many(&val)?;
        let dev = val.iter().zip(&gv).map(|(w, v)| (v - f_n(*w)).norm()).fold(0.0, f64::max);
        let at = g.eval(zl)?.norm();
        let certificates = vec![
            Certificate::below("closeness", dev, tol),
            Certificate::above("escape", at, 1.0),
        ];
        g.map = norm.affine();
        steps.push(EscapeStep { n, z: norm.to_global(zl), r, function: g, report, certificates });
    }
    Ok(EscapeConstruction {
        base_label: base.label(),
        k,
        eps,
        n0,
        n_max,
        compact_label,
        steps,
        base,
    })
}
