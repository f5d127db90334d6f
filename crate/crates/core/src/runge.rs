//! Least-squares approximation by rational functions whose poles are
//! restricted to a prescribed anchor set.
//!
//! The basis is built by a weighted Arnoldi process over the variables `z`
//! (anchor at infinity) and `1/(z - e)` (finite anchor `e`), which yields
//! unit-norm orthogonal columns on the fit nodes. The recurrence is stored so
//! the fitted function can be replayed at arbitrary points.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Anchor, CompactRegion, PoleAnchorSet};
use crate::linalg::{caxpy_neg, cdot, cdot_weighted, weighted_norm, CompensatedSum};

const EVAL_CHUNK: usize = 256;
const COMPENSATE_ABOVE: usize = 50;

/// Value prescribed on one piece: a constant, or a holomorphic function
/// (used when an existing sequence member is kept on a compact set).
#[derive(Clone)]
pub enum PieceValue {
    Constant(Complex64),
    Function(Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>),
}

impl PieceValue {
    pub fn at(&self, z: Complex64) -> Complex64 {
        match self {
            PieceValue::Constant(c) => *c,
            PieceValue::Function(f) => f(z),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, PieceValue::Constant(c) if *c == Complex64::new(0.0, 0.0))
    }
}

impl std::fmt::Debug for PieceValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PieceValue::Constant(c) => write!(f, "Constant({c})"),
            PieceValue::Function(_) => write!(f, "Function"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TargetPiece {
    pub region: CompactRegion,
    pub value: PieceValue,
}

#[derive(Clone, Debug, Default)]
pub struct PiecewiseConstantTarget {
    pub pieces: Vec<TargetPiece>,
}

impl PiecewiseConstantTarget {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, region: CompactRegion, value: Complex64) -> Self {
        self.pieces.push(TargetPiece { region, value: PieceValue::Constant(value) });
        self
    }

    pub fn with_fn(
        mut self,
        region: CompactRegion,
        f: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
    ) -> Self {
        self.pieces.push(TargetPiece { region, value: PieceValue::Function(f) });
        self
    }

    /// Rejects targets whose pieces share a fit-grid point.
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.pieces.iter().enumerate() {
            for q in &self.pieces[i + 1..] {
                for z in p.region.fit_grid.all() {
                    if q.region.contains(z) {
                        return Err(Error::Rejected(format!(
                            "pieces {} and {} overlap at {z}",
                            p.region.label, q.region.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Input map `w = a z + b` applied before the stored representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub a: Complex64,
    pub b: Complex64,
}

impl Affine {
    pub fn identity() -> Affine {
        Affine { a: Complex64::new(1.0, 0.0), b: Complex64::new(0.0, 0.0) }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.a * z + self.b
    }

    pub fn invert(&self, w: Complex64) -> Complex64 {
        (w - self.b) / self.a
    }
}

/// One orthogonal basis column: `var(z) * col[parent]` with earlier columns
/// subtracted sweep by sweep, then divided by `diag`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    /// Index into the anchor list; `None` marks the constant column.
    pub anchor: Option<usize>,
    pub parent: usize,
    pub passes: Vec<Vec<Complex64>>,
    pub diag: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Form {
    /// Monomial coefficients and principal parts `c_k (w - e)^{-k}`, k >= 1.
    Explicit { poly: Vec<Complex64>, principal: Vec<Vec<Complex64>> },
    Orthogonal { columns: Vec<Column>, coefficients: Vec<Complex64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalFunction {
    /// Anchors in the stored (mapped) variable `w`.
    pub anchors: Vec<Anchor>,
    pub multiplicities: Vec<usize>,
    pub map: Affine,
    pub form: Form,
}

impl RationalFunction {
    pub fn zero() -> RationalFunction {
        RationalFunction {
            anchors: vec![Anchor::Infinity],
            multiplicities: vec![0],
            map: Affine::identity(),
            form: Form::Explicit { poly: vec![], principal: vec![vec![]] },
        }
    }

    pub fn polynomial(coeffs: Vec<Complex64>) -> RationalFunction {
        let deg = coeffs.len().saturating_sub(1);
        RationalFunction {
            anchors: vec![Anchor::Infinity],
            multiplicities: vec![deg],
            map: Affine::identity(),
            form: Form::Explicit { poly: coeffs, principal: vec![vec![]] },
        }
    }

    /// `sum_k c_k (z - e)^{-k}` plus an optional polynomial part.
    pub fn with_principal(poly: Vec<Complex64>, e: Complex64, principal: Vec<Complex64>) -> RationalFunction {
        let mut anchors = vec![Anchor::Finite(e)];
        let mut mult = vec![principal.len()];
        let mut parts = vec![principal];
        if !poly.is_empty() {
            anchors.push(Anchor::Infinity);
            mult.push(poly.len() - 1);
            parts.push(vec![]);
        }
        RationalFunction {
            anchors,
            multiplicities: mult,
            map: Affine::identity(),
            form: Form::Explicit { poly, principal: parts },
        }
    }

    /// Poles in the original variable.
    pub fn poles(&self) -> Vec<Anchor> {
        self.anchors
            .iter()
            .zip(&self.multiplicities)
            .filter(|(_, m)| **m > 0)
            .map(|(a, _)| match a {
                Anchor::Infinity => Anchor::Infinity,
                Anchor::Finite(w) => Anchor::Finite(self.map.invert(*w)),
            })
            .collect()
    }

    pub fn total_degree(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    fn check_pole(&self, w: Complex64, z: Complex64) -> Result<()> {
        for (a, m) in self.anchors.iter().zip(&self.multiplicities) {
            if let Anchor::Finite(e) = a {
                if *m > 0 && (w - e).norm() == 0.0 {
                    return Err(Error::Pole(z));
                }
            }
        }
        if !w.re.is_finite() || !w.im.is_finite() {
            return Err(Error::Pole(z));
        }
        Ok(())
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_many(&[z])?[0])
    }

    pub fn eval_many(&self, zs: &[Complex64]) -> Result<Vec<Complex64>> {
        let ws: Vec<Complex64> = zs.iter().map(|z| self.map.apply(*z)).collect();
        for (w, z) in ws.iter().zip(zs) {
            self.check_pole(*w, *z)?;
        }
        let out = match &self.form {
            Form::Explicit { poly, principal } => ws.iter().map(|w| self.eval_explicit(poly, principal, *w)).collect(),
            Form::Orthogonal { columns, coefficients } => {
                let mut out = Vec::with_capacity(ws.len());
                for chunk in ws.chunks(EVAL_CHUNK) {
                    out.extend(eval_orthogonal(&self.anchors, columns, coefficients, chunk));
                }
                out
            }
        };
        // far from the fit nodes the stored recurrence can leave the
        // floating range; such values are reported as infinite
        Ok(out
            .into_iter()
            .map(|v| if v.re.is_finite() && v.im.is_finite() { v } else { Complex64::new(f64::INFINITY, 0.0) })
            .collect())
    }

    fn eval_explicit(&self, poly: &[Complex64], principal: &[Vec<Complex64>], w: Complex64) -> Complex64 {
        let compensate = self.total_degree() > COMPENSATE_ABOVE;
        let mut acc = CompensatedSum::default();
        let mut plain = Complex64::new(0.0, 0.0);
        let mut push = |t: Complex64| {
            if compensate {
                acc.add(t)
            } else {
                plain += t
            }
        };
        let mut p = Complex64::new(1.0, 0.0);
        for c in poly {
            push(c * p);
            p *= w;
        }
        for (a, part) in self.anchors.iter().zip(principal) {
            if let Anchor::Finite(e) = a {
                let u = 1.0 / (w - e);
                let mut p = u;
                for c in part {
                    push(c * p);
                    p *= u;
                }
            }
        }
        if compensate {
            acc.value()
        } else {
            plain
        }
    }

    pub fn scaled(&self, s: Complex64) -> RationalFunction {
        let mut f = self.clone();
        match &mut f.form {
            Form::Explicit { poly, principal } => {
                poly.iter_mut().for_each(|c| *c *= s);
                principal.iter_mut().flatten().for_each(|c| *c *= s);
            }
            Form::Orthogonal { coefficients, .. } => coefficients.iter_mut().for_each(|c| *c *= s),
        }
        f
    }
}

fn var_value(anchor: &Anchor, w: Complex64) -> Complex64 {
    match anchor {
        Anchor::Infinity => w,
        Anchor::Finite(e) => 1.0 / (w - e),
    }
}

fn eval_orthogonal(anchors: &[Anchor], columns: &[Column], coeffs: &[Complex64], ws: &[Complex64]) -> Vec<Complex64> {
    let m = ws.len();
    let d = columns.len();
    let vars: Vec<(Vec<f64>, Vec<f64>)> = anchors
        .iter()
        .map(|a| {
            let v: Vec<Complex64> = ws.iter().map(|w| var_value(a, *w)).collect();
            (v.iter().map(|c| c.re).collect(), v.iter().map(|c| c.im).collect())
        })
        .collect();
    let mut cr = vec![0.0f64; d * m];
    let mut ci = vec![0.0f64; d * m];
    for (j, col) in columns.iter().enumerate() {
        let (done, rest) = cr.split_at_mut(j * m);
        let (done_i, rest_i) = ci.split_at_mut(j * m);
        let (vr, vi) = (&mut rest[..m], &mut rest_i[..m]);
        match col.anchor {
            None => {
                vr.iter_mut().for_each(|x| *x = 1.0);
                vi.iter_mut().for_each(|x| *x = 0.0);
            }
            Some(a) => {
                let (xr, xi) = &vars[a];
                let p = col.parent;
                let (pr, pi) = (&done[p * m..p * m + m], &done_i[p * m..p * m + m]);
                for k in 0..m {
                    vr[k] = xr[k] * pr[k] - xi[k] * pi[k];
                    vi[k] = xr[k] * pi[k] + xi[k] * pr[k];
                }
            }
        }
        for pass in &col.passes {
            for (i, h) in pass.iter().enumerate() {
                caxpy_neg(*h, &done[i * m..i * m + m], &done_i[i * m..i * m + m], vr, vi);
            }
        }
        let s = 1.0 / col.diag;
        vr.iter_mut().for_each(|x| *x *= s);
        vi.iter_mut().for_each(|x| *x *= s);
    }
    let compensate = d > COMPENSATE_ABOVE + 1;
    (0..m)
        .map(|k| {
            if compensate {
                let mut acc = CompensatedSum::default();
                for j in 0..d {
                    acc.add(coeffs[j] * Complex64::new(cr[j * m + k], ci[j * m + k]));
                }
                acc.value()
            } else {
                (0..d).map(|j| coeffs[j] * Complex64::new(cr[j * m + k], ci[j * m + k])).sum()
            }
        })
        .collect()
}

/// Weighted orthonormal basis on a fixed node set.
struct Basis<'a> {
    anchors: &'a [Anchor],
    weights: Vec<f64>,
    vars: Vec<(Vec<f64>, Vec<f64>)>,
    qr: Vec<Vec<f64>>,
    qi: Vec<Vec<f64>>,
    columns: Vec<Column>,
    degree: Vec<usize>,
    last: Vec<usize>,
    saturated: bool,
}

impl<'a> Basis<'a> {
    fn new(anchors: &'a [Anchor], nodes: &[Complex64], weights: &[f64]) -> Basis<'a> {
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let m = nodes.len();
        let vars = anchors
            .iter()
            .map(|a| {
                let v: Vec<Complex64> = nodes.iter().map(|w| var_value(a, *w)).collect();
                (v.iter().map(|c| c.re).collect(), v.iter().map(|c| c.im).collect())
            })
            .collect();
        Basis {
            anchors,
            weights,
            vars,
            qr: vec![vec![1.0; m]],
            qi: vec![vec![0.0; m]],
            columns: vec![Column { anchor: None, parent: 0, passes: vec![], diag: 1.0 }],
            degree: vec![0; anchors.len()],
            last: vec![0; anchors.len()],
            saturated: false,
        }
    }

    fn extend_to(&mut self, deg: usize) {
        while !self.saturated && self.degree.iter().any(|d| *d < deg) {
            for a in 0..self.anchors.len() {
                if self.degree[a] < deg && !self.saturated {
                    self.push_column(a);
                }
            }
        }
    }

    fn push_column(&mut self, a: usize) {
        let m = self.weights.len();
        let parent = self.last[a];
        let (xr, xi) = &self.vars[a];
        let (pr, pi) = (&self.qr[parent], &self.qi[parent]);
        let mut vr: Vec<f64> = (0..m).map(|k| xr[k] * pr[k] - xi[k] * pi[k]).collect();
        let mut vi: Vec<f64> = (0..m).map(|k| xr[k] * pi[k] + xi[k] * pr[k]).collect();
        let before = weighted_norm(&vr, &vi, &self.weights);
        let j = self.qr.len();
        // two sweeps of modified Gram-Schmidt; `eval_orthogonal` replays the
        // same subtractions in the same order, so values at the nodes are
        // reproduced exactly
        let mut passes = Vec::with_capacity(2);
        for _pass in 0..2 {
            let mut h = vec![Complex64::new(0.0, 0.0); j];
            for i in 0..j {
                h[i] = cdot_weighted(&self.qr[i], &self.qi[i], &vr, &vi, &self.weights);
                caxpy_neg(h[i], &self.qr[i], &self.qi[i], &mut vr, &mut vi);
            }
            passes.push(h);
        }
        let diag = weighted_norm(&vr, &vi, &self.weights);
        if !(diag > 1e-13 * before) || !diag.is_finite() || j >= m {
            self.saturated = true;
            return;
        }
        let s = 1.0 / diag;
        vr.iter_mut().for_each(|x| *x *= s);
        vi.iter_mut().for_each(|x| *x *= s);
        self.qr.push(vr);
        self.qi.push(vi);
        self.columns.push(Column { anchor: Some(a), parent, passes, diag });
        self.last[a] = j;
        self.degree[a] += 1;
    }

    /// Weighted projection of `f`, i.e. the least-squares coefficients.
    fn project(&self, fr: &[f64], fi: &[f64]) -> Vec<Complex64> {
        let m = self.weights.len();
        let mut rr = fr.to_vec();
        let mut ri = fi.to_vec();
        let mut wr = vec![0.0; m];
        let mut wi = vec![0.0; m];
        let mut c = vec![Complex64::new(0.0, 0.0); self.qr.len()];
        // two sweeps against the residual guard against loss of orthogonality
        for _ in 0..2 {
            for k in 0..m {
                wr[k] = self.weights[k] * rr[k];
                wi[k] = self.weights[k] * ri[k];
            }
            for j in 0..self.qr.len() {
                let cj = cdot(&self.qr[j], &self.qi[j], &wr, &wi);
                c[j] += cj;
            }
            rr = fr.to_vec();
            ri = fi.to_vec();
            for j in 0..self.qr.len() {
                caxpy_neg(c[j], &self.qr[j], &self.qi[j], &mut rr, &mut ri);
            }
        }
        c
    }

    /// Values of the expansion with coefficients `c` on the nodes.
    fn apply(&self, c: &[Complex64]) -> Vec<Complex64> {
        let m = self.weights.len();
        let mut vr = vec![0.0; m];
        let mut vi = vec![0.0; m];
        for (j, cj) in c.iter().enumerate() {
            caxpy_neg(-cj, &self.qr[j], &self.qi[j], &mut vr, &mut vi);
        }
        (0..m).map(|k| Complex64::new(vr[k], vi[k])).collect()
    }

    fn function(&self, c: Vec<Complex64>) -> RationalFunction {
        RationalFunction {
            anchors: self.anchors.to_vec(),
            multiplicities: self.degree.clone(),
            map: Affine::identity(),
            form: Form::Orthogonal { columns: self.columns.clone(), coefficients: c },
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub start_degree: usize,
    pub max_degree: usize,
    pub lawson_iterations: usize,
    /// Lawson stops once sup/L2 error drops below this ratio.
    pub lawson_ratio: f64,
    /// Lawson runs only when the least-squares error is within this factor of
    /// the tolerance.
    pub lawson_window: f64,
    /// Lawson is skipped above this per-anchor degree.
    pub lawson_max_degree: usize,
    /// Least-squares weight of isolated target points.
    pub point_weight: f64,
    /// Segment nodes per basis column.
    pub segment_nodes_per_degree: f64,
    /// Boundary nodes per basis column on two-dimensional pieces.
    pub boundary_nodes_per_degree: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            start_degree: 8,
            max_degree: 256,
            lawson_iterations: 20,
            lawson_ratio: 1.5,
            lawson_window: 100.0,
            lawson_max_degree: 256,
            point_weight: 900.0,
            segment_nodes_per_degree: 2.0,
            boundary_nodes_per_degree: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceError {
    pub label: String,
    pub fit_error: f64,
    pub validation_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeStep {
    pub degree: usize,
    pub fit_error: f64,
    pub validation_error: f64,
    pub lawson_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Sup error over validation and fit nodes.
    pub achieved_error: f64,
    pub fit_error: f64,
    pub piece_errors: Vec<PieceError>,
    /// Total number of non-constant basis functions.
    pub degree: usize,
    pub anchor_degrees: Vec<usize>,
    pub tolerance: f64,
    pub iterations: usize,
    pub success: bool,
    pub ladder: Vec<DegreeStep>,
}

struct Assembled {
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
    values: Vec<Complex64>,
    owner: Vec<usize>,
}

fn assemble(target: &PiecewiseConstantTarget, cols: usize, opts: &FitOptions) -> Assembled {
    let mut a = Assembled { nodes: vec![], weights: vec![], values: vec![], owner: vec![] };
    for (i, p) in target.pieces.iter().enumerate() {
        let (pts, w) = match &p.region.kind {
            crate::geometry::RegionKind::Points(_) => (p.region.fit_nodes(0), opts.point_weight),
            crate::geometry::RegionKind::Segment(..) => {
                (p.region.fit_nodes((opts.segment_nodes_per_degree * cols as f64) as usize), 1.0)
            }
            crate::geometry::RegionKind::Area { .. } => {
                (p.region.fit_nodes((opts.boundary_nodes_per_degree * cols as f64) as usize), 1.0)
            }
        };
        for z in pts {
            a.nodes.push(z);
            a.weights.push(w);
            a.values.push(p.value.at(z));
            a.owner.push(i);
        }
    }
    a
}

fn validation_set(target: &PiecewiseConstantTarget, cols: usize, opts: &FitOptions) -> Vec<(usize, Complex64)> {
    let mut v = Vec::new();
    for (i, p) in target.pieces.iter().enumerate() {
        let min = match &p.region.kind {
            crate::geometry::RegionKind::Points(_) => 0,
            crate::geometry::RegionKind::Segment(..) => (opts.segment_nodes_per_degree * cols as f64) as usize,
            crate::geometry::RegionKind::Area { .. } => (opts.boundary_nodes_per_degree * cols as f64) as usize,
        };
        v.extend(p.region.validation_nodes(min).into_iter().map(|z| (i, z)));
    }
    v
}

fn check_anchors(target: &PiecewiseConstantTarget, anchors: &[Anchor]) -> Result<()> {
    for a in anchors {
        if let Anchor::Finite(e) = a {
            for p in &target.pieces {
                let hit = p.region.contains(*e)
                    || p.region.fit_grid.all().iter().chain(p.region.validation_grid().all().iter()).any(|z| (z - e).norm() == 0.0);
                if hit {
                    return Err(Error::Rejected(format!("anchor {a} lies in target piece {}", p.region.label)));
                }
            }
        }
    }
    Ok(())
}

struct Candidate {
    f: RationalFunction,
    fit_error: f64,
    validation_error: f64,
    pieces: Vec<PieceError>,
}

fn errors_on(
    target: &PiecewiseConstantTarget,
    asm: &Assembled,
    fitted: &[Complex64],
    f: &RationalFunction,
    val: &[(usize, Complex64)],
) -> Candidate {
    let np = target.pieces.len();
    let mut fit_e = vec![0.0f64; np];
    for k in 0..asm.nodes.len() {
        let e = (fitted[k] - asm.values[k]).norm();
        fit_e[asm.owner[k]] = fit_e[asm.owner[k]].max(if e.is_finite() { e } else { f64::INFINITY });
    }
    let mut val_e = vec![0.0f64; np];
    let pts: Vec<Complex64> = val.iter().map(|(_, z)| *z).collect();
    match f.eval_many(&pts) {
        Ok(vals) => {
            for ((i, z), v) in val.iter().zip(vals) {
                let e = (v - target.pieces[*i].value.at(*z)).norm();
                val_e[*i] = val_e[*i].max(e);
            }
        }
        Err(_) => val_e.iter_mut().for_each(|e| *e = f64::INFINITY),
    }
    let pieces: Vec<PieceError> = (0..np)
        .map(|i| PieceError {
            label: target.pieces[i].region.label.clone(),
            fit_error: fit_e[i],
            validation_error: val_e[i].max(fit_e[i]),
        })
        .collect();
    let fit_error = fit_e.iter().cloned().fold(0.0, f64::max);
    let validation_error = pieces.iter().map(|p| p.validation_error).fold(0.0, f64::max);
    Candidate { f: f.clone(), fit_error, validation_error, pieces }
}

/// Degree-escalating least-squares fit with optional Lawson reweighting.
pub fn runge_fit(
    target: &PiecewiseConstantTarget,
    anchors: &PoleAnchorSet,
    tol: f64,
    max_degree: usize,
) -> Result<(RationalFunction, FitReport)> {
    let opts = FitOptions { max_degree, ..FitOptions::default() };
    runge_fit_with(target, anchors, tol, &opts)
}

pub fn runge_fit_with(
    target: &PiecewiseConstantTarget,
    anchors: &PoleAnchorSet,
    tol: f64,
    opts: &FitOptions,
) -> Result<(RationalFunction, FitReport)> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let anchor_pts = anchors.points();
    check_anchors(target, &anchor_pts)?;
    if target.pieces.iter().all(|p| p.value.is_zero()) {
        let f = RationalFunction::zero();
        let report = FitReport {
            achieved_error: 0.0,
            fit_error: 0.0,
            piece_errors: target
                .pieces
                .iter()
                .map(|p| PieceError { label: p.region.label.clone(), fit_error: 0.0, validation_error: 0.0 })
                .collect(),
            degree: 0,
            anchor_degrees: vec![0; anchor_pts.len()],
            tolerance: tol,
            iterations: 0,
            success: true,
            ladder: vec![],
        };
        return Ok((f, report));
    }
    let mut best: Option<Candidate> = None;
    let mut ladder = Vec::new();
    let mut iterations = 0;
    let mut deg = opts.start_degree.min(opts.max_degree).max(1);
    loop {
        let cols = deg * anchor_pts.len() + 1;
        let asm = assemble(target, cols, opts);
        let val = validation_set(target, cols, opts);
        let fr: Vec<f64> = asm.values.iter().map(|v| v.re).collect();
        let fi: Vec<f64> = asm.values.iter().map(|v| v.im).collect();
        let mut weights = asm.weights.clone();
        let mut basis = Basis::new(&anchor_pts, &asm.nodes, &weights);
        basis.extend_to(deg);
        let c = basis.project(&fr, &fi);
        let fitted = basis.apply(&c);
        let f = basis.function(c);
        let mut cand = errors_on(target, &asm, &fitted, &f, &val);
        iterations += 1;
        let mut lawson = 0;
        if cand.validation_error >= tol
            && cand.fit_error < opts.lawson_window * tol
            && deg <= opts.lawson_max_degree
            && opts.lawson_iterations > 0
        {
            let mut err: Vec<f64> = fitted.iter().zip(&asm.values).map(|(a, b)| (a - b).norm()).collect();
            while lawson < opts.lawson_iterations {
                let sup = err.iter().cloned().fold(0.0, f64::max);
                let wsum: f64 = weights.iter().sum();
                let l2 = (weights.iter().zip(&err).map(|(w, e)| w * e * e).sum::<f64>() / wsum).sqrt();
                if !(sup > 0.0) || sup / l2 < opts.lawson_ratio {
                    break;
                }
                for k in 0..weights.len() {
                    weights[k] = (weights[k] * err[k] / sup).max(1e-300);
                }
                let mut b = Basis::new(&anchor_pts, &asm.nodes, &weights);
                b.extend_to(deg);
                let c = b.project(&fr, &fi);
                let fit = b.apply(&c);
                err = fit.iter().zip(&asm.values).map(|(a, b)| (a - b).norm()).collect();
                let g = b.function(c);
                lawson += 1;
                iterations += 1;
                let next = errors_on(target, &asm, &fit, &g, &val);
                if next.validation_error < cand.validation_error {
                    cand = next;
                }
                if cand.validation_error < tol {
                    break;
                }
            }
        }
        ladder.push(DegreeStep {
            degree: deg,
            fit_error: cand.fit_error,
            validation_error: cand.validation_error,
            lawson_iterations: lawson,
        });
        let success = cand.validation_error < tol;
        let saturated = basis.saturated;
        if best.as_ref().map_or(true, |b| cand.validation_error < b.validation_error) {
            best = Some(cand);
        }
        if success || deg >= opts.max_degree || saturated {
            break;
        }
        deg = (deg * 2).min(opts.max_degree);
    }
    let best = best.expect("at least one degree tried");
    let report = FitReport {
        achieved_error: best.validation_error,
        fit_error: best.fit_error,
        piece_errors: best.pieces,
        degree: best.f.total_degree(),
        anchor_degrees: best.f.multiplicities.clone(),
        tolerance: tol,
        iterations,
        success: best.validation_error < tol,
        ladder,
    };
    Ok((best.f, report))
}

pub fn evaluate(f: &RationalFunction, points: &[Complex64]) -> Result<Vec<Complex64>> {
    f.eval_many(points)
}

/// Recomputes the sup error of a fitted function on the node sets used by
/// `runge_fit_with` at the function's degree.
pub fn revalidate(target: &PiecewiseConstantTarget, f: &RationalFunction, opts: &FitOptions) -> Result<f64> {
    if target.pieces.iter().all(|p| p.value.is_zero()) && f.total_degree() == 0 {
        return Ok(0.0);
    }
    let deg = f.multiplicities.iter().cloned().max().unwrap_or(0);
    let cols = deg * f.anchors.len() + 1;
    let asm = assemble(target, cols, opts);
    let val = validation_set(target, cols, opts);
    let fitted = f.eval_many(&asm.nodes)?;
    Ok(errors_on(target, &asm, &fitted, f, &val).validation_error)
}
