//! Planar domains described by constructive solid geometry, their compact
//! exhaustions, sample grids and pole anchors.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Default sample density in points per unit length.
pub const DEFAULT_DENSITY: f64 = 20.0;
/// Validation grids are this many times denser than fit grids.
pub const VALIDATION_FACTOR: f64 = 4.0;
/// Interior validation points evaluated per two-dimensional piece.
pub const INTERIOR_CHECKS: usize = 1500;

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Plane,
    /// Open disc.
    Disc { center: Complex64, radius: f64 },
    /// Open half-plane `{z : <normal, z> < offset}` with unit normal.
    HalfPlane { normal: Complex64, offset: f64 },
    Union(Vec<Shape>),
    Intersect(Vec<Shape>),
    /// First argument minus the closures of the rest.
    Diff(Vec<Shape>),
}

impl Shape {
    pub fn disc(cx: f64, cy: f64, r: f64) -> Shape {
        Shape::Disc { center: Complex64::new(cx, cy), radius: r }
    }

    pub fn half_plane(nx: f64, ny: f64, offset: f64) -> Shape {
        let len = nx.hypot(ny);
        Shape::HalfPlane { normal: Complex64::new(nx / len, ny / len), offset: offset / len }
    }

    /// Signed depth: positive inside with value equal to a lower bound of the
    /// distance to the complement, nonpositive outside.
    pub fn depth(&self, z: Complex64) -> f64 {
        match self {
            Shape::Plane => f64::INFINITY,
            Shape::Disc { center, radius } => radius - (z - center).norm(),
            Shape::HalfPlane { normal, offset } => offset - (normal.re * z.re + normal.im * z.im),
            Shape::Union(args) => args.iter().map(|s| s.depth(z)).fold(f64::NEG_INFINITY, f64::max),
            Shape::Intersect(args) => args.iter().map(|s| s.depth(z)).fold(f64::INFINITY, f64::min),
            Shape::Diff(args) => {
                let mut d = args[0].depth(z);
                for s in &args[1..] {
                    d = d.min(-s.depth(z));
                }
                d
            }
        }
    }

    fn is_primitive(&self) -> bool {
        matches!(self, Shape::Plane | Shape::Disc { .. } | Shape::HalfPlane { .. })
    }

    fn is_convex(&self) -> bool {
        match self {
            Shape::Plane | Shape::Disc { .. } | Shape::HalfPlane { .. } => true,
            Shape::Intersect(args) => args.iter().all(|s| s.is_convex()),
            _ => false,
        }
    }

    /// Axis-aligned bounding box, `None` when unbounded.
    pub fn bbox(&self) -> Option<BBox> {
        match self {
            Shape::Plane | Shape::HalfPlane { .. } => None,
            Shape::Disc { center, radius } => Some(BBox {
                min: Complex64::new(center.re - radius, center.im - radius),
                max: Complex64::new(center.re + radius, center.im + radius),
            }),
            Shape::Union(args) => {
                let mut acc: Option<BBox> = None;
                for s in args {
                    let b = s.bbox()?;
                    acc = Some(match acc {
                        None => b,
                        Some(a) => a.union(&b),
                    });
                }
                acc
            }
            Shape::Intersect(args) => {
                let mut acc: Option<BBox> = None;
                for b in args.iter().filter_map(|s| s.bbox()) {
                    acc = Some(match acc {
                        None => b,
                        Some(a) => a.intersect(&b),
                    });
                }
                acc
            }
            Shape::Diff(args) => args[0].bbox(),
        }
    }

    /// Image under `z -> rot * (z - shift)` with `|rot| = 1`.
    pub fn rigid(&self, shift: Complex64, rot: Complex64) -> Shape {
        match self {
            Shape::Plane => Shape::Plane,
            Shape::Disc { center, radius } => Shape::Disc { center: rot * (center - shift), radius: *radius },
            Shape::HalfPlane { normal, offset } => {
                let n = rot * normal;
                let off = offset - (normal.re * shift.re + normal.im * shift.im);
                Shape::HalfPlane { normal: n, offset: off }
            }
            Shape::Union(a) => Shape::Union(a.iter().map(|s| s.rigid(shift, rot)).collect()),
            Shape::Intersect(a) => Shape::Intersect(a.iter().map(|s| s.rigid(shift, rot)).collect()),
            Shape::Diff(a) => Shape::Diff(a.iter().map(|s| s.rigid(shift, rot)).collect()),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Shape::Plane => json!("plane"),
            Shape::Disc { center, radius } => json!({"disc": {"cx": center.re, "cy": center.im, "r": radius}}),
            Shape::HalfPlane { normal, offset } => {
                json!({"halfplane": {"nx": normal.re, "ny": normal.im, "offset": offset}})
            }
            Shape::Union(a) => json!({"op": "union", "args": a.iter().map(|s| s.to_json()).collect::<Vec<_>>()}),
            Shape::Intersect(a) => {
                json!({"op": "intersect", "args": a.iter().map(|s| s.to_json()).collect::<Vec<_>>()})
            }
            Shape::Diff(a) => json!({"op": "diff", "args": a.iter().map(|s| s.to_json()).collect::<Vec<_>>()}),
        }
    }

    fn from_json(v: &Value) -> std::result::Result<Shape, String> {
        let num = |o: &Value, k: &str| -> std::result::Result<f64, String> {
            o.get(k).and_then(Value::as_f64).ok_or_else(|| format!("missing number '{k}'"))
        };
        if v.as_str() == Some("plane") {
            return Ok(Shape::Plane);
        }
        if let Some(d) = v.get("disc") {
            let r = num(d, "r")?;
            if !(r > 0.0 && r.is_finite()) {
                return Err(format!("disc radius must be positive, got {r}"));
            }
            return Ok(Shape::disc(num(d, "cx")?, num(d, "cy")?, r));
        }
        if let Some(h) = v.get("halfplane") {
            let (nx, ny) = (num(h, "nx")?, num(h, "ny")?);
            if nx.hypot(ny) == 0.0 {
                return Err("halfplane normal must be nonzero".into());
            }
            return Ok(Shape::half_plane(nx, ny, num(h, "offset")?));
        }
        if let Some(op) = v.get("op").and_then(Value::as_str) {
            let args = v
                .get("args")
                .and_then(Value::as_array)
                .ok_or("operator node needs 'args'")?
                .iter()
                .map(Shape::from_json)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if args.is_empty() {
                return Err(format!("'{op}' needs at least one argument"));
            }
            return match op {
                "union" => Ok(Shape::Union(args)),
                "intersect" => Ok(Shape::Intersect(args)),
                "diff" => Ok(Shape::Diff(args)),
                other => Err(format!("unknown operator '{other}'")),
            };
        }
        Err(format!("unrecognized shape node: {v}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: Complex64,
    pub max: Complex64,
}

impl BBox {
    pub fn union(&self, o: &BBox) -> BBox {
        BBox {
            min: Complex64::new(self.min.re.min(o.min.re), self.min.im.min(o.min.im)),
            max: Complex64::new(self.max.re.max(o.max.re), self.max.im.max(o.max.im)),
        }
    }

    pub fn intersect(&self, o: &BBox) -> BBox {
        BBox {
            min: Complex64::new(self.min.re.max(o.min.re), self.min.im.max(o.min.im)),
            max: Complex64::new(self.max.re.min(o.max.re), self.max.im.min(o.max.im)),
        }
    }

    pub fn square(r: f64) -> BBox {
        BBox { min: Complex64::new(-r, -r), max: Complex64::new(r, r) }
    }

    pub fn is_empty(&self) -> bool {
        self.min.re > self.max.re || self.min.im > self.max.im
    }
}

/// A point of the extended plane used as a pole location.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Anchor {
    Infinity,
    Finite(Complex64),
}

impl Serialize for Anchor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Anchor::Infinity => s.serialize_str("inf"),
            Anchor::Finite(z) => [z.re, z.im].serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Anchor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        anchor_from_json(&v).map_err(D::Error::custom)
    }
}

fn anchor_from_json(v: &Value) -> std::result::Result<Anchor, String> {
    if v.as_str() == Some("inf") {
        return Ok(Anchor::Infinity);
    }
    match v.as_array().map(|a| a.iter().map(Value::as_f64).collect::<Vec<_>>()) {
        Some(p) if p.len() == 2 && p.iter().all(Option::is_some) => {
            Ok(Anchor::Finite(Complex64::new(p[0].unwrap(), p[1].unwrap())))
        }
        _ => Err(format!("pole must be \"inf\" or [x, y], got {v}")),
    }
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Anchor::Infinity => write!(f, "inf"),
            Anchor::Finite(z) => write!(f, "({}, {})", z.re, z.im),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorSource {
    Computed,
    UserSupplied,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedAnchor {
    pub point: Anchor,
    /// Label of the complement component this anchor stands for.
    pub component: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleAnchorSet {
    pub anchors: Vec<TaggedAnchor>,
    pub source: AnchorSource,
}

impl PoleAnchorSet {
    pub fn points(&self) -> Vec<Anchor> {
        self.anchors.iter().map(|a| a.point).collect()
    }

    pub fn infinity_only() -> PoleAnchorSet {
        PoleAnchorSet {
            anchors: vec![TaggedAnchor { point: Anchor::Infinity, component: "unbounded".into() }],
            source: AnchorSource::Computed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub shape: Shape,
    pub poles: Option<Vec<Anchor>>,
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut v = json!({"shape": self.shape.to_json()});
        if let Some(p) = &self.poles {
            v["poles"] = serde_json::to_value(p).map_err(serde::ser::Error::custom)?;
        }
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        let shape = Shape::from_json(v.get("shape").ok_or_else(|| D::Error::custom("missing 'shape'"))?)
            .map_err(D::Error::custom)?;
        let poles = match v.get("poles") {
            None | Some(Value::Null) => None,
            Some(Value::Array(a)) => {
                Some(a.iter().map(anchor_from_json).collect::<std::result::Result<Vec<_>, _>>().map_err(D::Error::custom)?)
            }
            Some(other) => return Err(D::Error::custom(format!("'poles' must be a list, got {other}"))),
        };
        Ok(Domain { shape, poles })
    }
}

impl Domain {
    pub fn new(shape: Shape) -> Result<Domain> {
        let d = Domain { shape, poles: None };
        d.validate()?;
        Ok(d)
    }

    pub fn plane() -> Domain {
        Domain { shape: Shape::Plane, poles: None }
    }

    pub fn unit_disc() -> Domain {
        Domain { shape: Shape::disc(0.0, 0.0, 1.0), poles: None }
    }

    pub fn from_json_str(s: &str) -> Result<Domain> {
        let d: Domain = serde_json::from_str(s).map_err(|e| Error::Config(format!("domain: {e}")))?;
        d.validate()?;
        Ok(d)
    }

    /// Checks nonemptiness by sampling and validates any user-supplied poles.
    pub fn validate(&self) -> Result<()> {
        if self.interior_point().is_none() {
            return Err(Error::Config("domain has no interior sample point".into()));
        }
        if let Some(p) = &self.poles {
            for a in p {
                if let Anchor::Finite(z) = a {
                    if self.contains(*z) {
                        return Err(Error::Config(format!("pole {a} lies inside the domain")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.shape.depth(z) > 0.0
    }

    pub fn is_unbounded(&self) -> bool {
        self.shape.bbox().is_none()
    }

    /// Some point of the domain, found on a coarse deterministic search.
    pub fn interior_point(&self) -> Option<Complex64> {
        if self.contains(Complex64::new(0.0, 0.0)) {
            return Some(Complex64::new(0.0, 0.0));
        }
        let (c, r) = match self.shape.bbox() {
            Some(b) => ((b.min + b.max) / 2.0, ((b.max - b.min) / 2.0).norm().max(1e-9)),
            None => (Complex64::new(0.0, 0.0), 1e3),
        };
        let mut best: Option<(f64, Complex64)> = None;
        for level in 1..=7 {
            let k = 1 << level;
            let h = r / k as f64;
            for i in -k..=k {
                for j in -k..=k {
                    let z = c + Complex64::new(i as f64 * h, j as f64 * h);
                    let d = self.shape.depth(z);
                    if d > 0.0 && best.map_or(true, |(bd, _)| d > bd) {
                        best = Some((d, z));
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(_, z)| z)
    }

    pub fn rigid(&self, shift: Complex64, rot: Complex64) -> Domain {
        Domain {
            shape: self.shape.rigid(shift, rot),
            poles: self.poles.as_ref().map(|p| {
                p.iter()
                    .map(|a| match a {
                        Anchor::Infinity => Anchor::Infinity,
                        Anchor::Finite(z) => Anchor::Finite(rot * (z - shift)),
                    })
                    .collect()
            }),
        }
    }

    /// Largest `x >= 0` with `[0, x]` inside the domain; infinite for rays.
    pub fn ray_extent(&self) -> f64 {
        let mut x = 0.0f64;
        for _ in 0..100_000 {
            let d = distance_to_complement(self, Complex64::new(x, 0.0));
            if d.is_infinite() || x > 1e12 {
                return f64::INFINITY;
            }
            if d < 1e-13 * (1.0 + x) {
                return x;
            }
            x += d;
        }
        x
    }
}

/// Distance from `z` to the complement of the domain, zero outside.
pub fn distance_to_complement(domain: &Domain, z: Complex64) -> f64 {
    domain.shape.depth(z).max(0.0)
}

pub fn pole_anchor_set(domain: &Domain, overrides: Option<&[Anchor]>) -> Result<PoleAnchorSet> {
    let overrides = overrides.or(domain.poles.as_deref());
    if let Some(list) = overrides {
        let mut anchors = Vec::new();
        for (i, a) in list.iter().enumerate() {
            if let Anchor::Finite(z) = a {
                if domain.contains(*z) {
                    return Err(Error::Rejected(format!("override pole {a} lies inside the domain")));
                }
            }
            let component = match a {
                Anchor::Infinity => "unbounded".to_string(),
                Anchor::Finite(_) => format!("user-{i}"),
            };
            if !anchors.iter().any(|t: &TaggedAnchor| t.point == *a) {
                anchors.push(TaggedAnchor { point: *a, component });
            }
        }
        return Ok(PoleAnchorSet { anchors, source: AnchorSource::UserSupplied });
    }
    let mut anchors = vec![TaggedAnchor { point: Anchor::Infinity, component: "unbounded".into() }];
    for (k, c) in bounded_components(&domain.shape)?.into_iter().enumerate() {
        anchors.push(TaggedAnchor { point: Anchor::Finite(c), component: format!("hole-{k}") });
    }
    Ok(PoleAnchorSet { anchors, source: AnchorSource::Computed })
}

/// Representative points of the bounded complement components.
fn bounded_components(shape: &Shape) -> Result<Vec<Complex64>> {
    match shape {
        s if s.is_convex() => Ok(vec![]),
        Shape::Diff(args) => {
            let outer = &args[0];
            let mut holes = bounded_components(outer)?;
            // discs whose closure sits inside the outer set; overlapping ones merge
            let mut discs: Vec<(Complex64, f64)> = Vec::new();
            let mut merged_outside = Vec::new();
            for s in &args[1..] {
                match s {
                    Shape::Disc { center, radius } => {
                        let inside = outer.depth(*center) > *radius;
                        if inside {
                            discs.push((*center, *radius));
                        } else {
                            merged_outside.push((*center, *radius));
                        }
                    }
                    Shape::HalfPlane { .. } => {}
                    _ => {
                        return Err(Error::Config(
                            "complement components are ambiguous for this shape; supply \"poles\"".into(),
                        ))
                    }
                }
            }
            let n = discs.len();
            let mut parent: Vec<usize> = (0..n).collect();
            fn find(p: &mut Vec<usize>, i: usize) -> usize {
                let mut r = i;
                while p[r] != r {
                    r = p[r];
                }
                p[i] = r;
                r
            }
            for i in 0..n {
                for j in i + 1..n {
                    if (discs[i].0 - discs[j].0).norm() <= discs[i].1 + discs[j].1 {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        parent[b] = a;
                    }
                }
            }
            let mut touches_outside = vec![false; n];
            for i in 0..n {
                for (c, r) in &merged_outside {
                    if (discs[i].0 - c).norm() <= discs[i].1 + r {
                        let root = find(&mut parent, i);
                        touches_outside[root] = true;
                    }
                }
            }
            for i in 0..n {
                let root = find(&mut parent, i);
                if root == i && !touches_outside[root] {
                    holes.push(discs[i].0);
                }
            }
            Ok(holes)
        }
        Shape::Union(args) if args.len() == 1 => bounded_components(&args[0]),
        Shape::Union(args) if args.iter().all(|s| s.is_primitive()) && args.len() == 2 => Ok(vec![]),
        _ => Err(Error::Config("complement components are ambiguous for this shape; supply \"poles\"".into())),
    }
}

/// Membership predicate of a two-dimensional compact piece.
pub type Predicate = Arc<dyn Fn(Complex64) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum RegionKind {
    Points(Vec<Complex64>),
    Segment(Complex64, Complex64),
    Area { predicate: Predicate, bbox: BBox },
}

impl fmt::Debug for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionKind::Points(p) => write!(f, "Points({p:?})"),
            RegionKind::Segment(a, b) => write!(f, "Segment({a}, {b})"),
            RegionKind::Area { bbox, .. } => write!(f, "Area({bbox:?})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SampleGrid {
    pub interior: Vec<Complex64>,
    pub boundary: Vec<Complex64>,
}

impl SampleGrid {
    pub fn all(&self) -> Vec<Complex64> {
        let mut v = self.interior.clone();
        v.extend_from_slice(&self.boundary);
        v
    }

    pub fn len(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct CompactRegion {
    pub label: String,
    pub kind: RegionKind,
    pub density: f64,
    pub fit_grid: SampleGrid,
    validation: Arc<OnceLock<SampleGrid>>,
}

impl CompactRegion {
    pub fn new(label: impl Into<String>, kind: RegionKind, density: f64) -> CompactRegion {
        let fit_grid = sample_kind(&kind, density);
        CompactRegion { label: label.into(), kind, density, fit_grid, validation: Arc::new(OnceLock::new()) }
    }

    /// Grid at four times the fit density, built on first use.
    pub fn validation_grid(&self) -> &SampleGrid {
        self.validation.get_or_init(|| sample_kind(&self.kind, self.density * VALIDATION_FACTOR))
    }

    pub fn point(label: impl Into<String>, z: Complex64) -> CompactRegion {
        CompactRegion::new(label, RegionKind::Points(vec![z]), DEFAULT_DENSITY)
    }

    pub fn segment(label: impl Into<String>, a: Complex64, b: Complex64, density: f64) -> CompactRegion {
        CompactRegion::new(label, RegionKind::Segment(a, b), density)
    }

    pub fn area(label: impl Into<String>, predicate: Predicate, bbox: BBox, density: f64) -> CompactRegion {
        CompactRegion::new(label, RegionKind::Area { predicate, bbox }, density)
    }

    pub fn closed_disc(label: impl Into<String>, c: Complex64, r: f64, density: f64) -> CompactRegion {
        let bbox = BBox { min: c - Complex64::new(r, r), max: c + Complex64::new(r, r) };
        CompactRegion::area(label, Arc::new(move |z: Complex64| (z - c).norm() <= r), bbox, density)
    }

    pub fn is_empty(&self) -> bool {
        self.fit_grid.is_empty() && self.validation_grid().is_empty()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match &self.kind {
            RegionKind::Points(p) => p.iter().any(|q| (q - z).norm() <= 1e-12),
            RegionKind::Segment(a, b) => {
                let d = b - a;
                let t = if d.norm_sqr() == 0.0 { 0.0 } else { ((z - a) * d.conj()).re / d.norm_sqr() };
                (0.0..=1.0).contains(&t) && (a + d * t - z).norm() <= 1e-12 * (1.0 + d.norm())
            }
            RegionKind::Area { predicate, .. } => predicate(z),
        }
    }

    /// Nodes used by the approximation solver. For two-dimensional pieces only
    /// boundary nodes are returned: by the maximum modulus principle the
    /// error of a holomorphic approximant is largest on the boundary.
    pub fn fit_nodes(&self, min_count: usize) -> Vec<Complex64> {
        match &self.kind {
            RegionKind::Points(p) => p.clone(),
            RegionKind::Segment(a, b) => {
                let m = ((self.density * (b - a).norm()).ceil() as usize + 1).max(min_count).max(2);
                chebyshev_segment(*a, *b, m)
            }
            RegionKind::Area { predicate, bbox } => {
                let coarse = boundary_points(predicate, bbox, 1.0 / self.density);
                let perimeter = coarse.len() as f64 / self.density;
                let h = if min_count > 0 && perimeter > 0.0 {
                    (1.0 / self.density).min(perimeter / min_count as f64)
                } else {
                    1.0 / self.density
                };
                let mut pts = boundary_points(predicate, bbox, h);
                if pts.is_empty() {
                    pts = self.fit_grid.interior.clone();
                }
                pts
            }
        }
    }

    /// Validation nodes matching `fit_nodes(min_count)` at four times the density.
    pub fn validation_nodes(&self, min_count: usize) -> Vec<Complex64> {
        let factor = VALIDATION_FACTOR as usize;
        let grid = self.validation_grid();
        let mut v = grid.boundary.clone();
        match &self.kind {
            // the error of a holomorphic approximant peaks on the boundary, so
            // the interior is only spot-checked
            RegionKind::Area { .. } => {
                let step = grid.interior.len().div_ceil(INTERIOR_CHECKS).max(1);
                v.extend(grid.interior.iter().step_by(step));
            }
            _ => v.extend_from_slice(&grid.interior),
        }
        match &self.kind {
            RegionKind::Points(_) => {}
            RegionKind::Segment(a, b) => {
                let m = ((self.density * (b - a).norm()).ceil() as usize + 1).max(min_count).max(2);
                v.extend(chebyshev_segment(*a, *b, factor * m));
                let u = factor * m;
                v.extend((0..u).map(|k| a + (b - a) * (k as f64 + 0.5) / u as f64));
            }
            RegionKind::Area { predicate, bbox } => {
                let coarse = boundary_points(predicate, bbox, 1.0 / self.density);
                let perimeter = coarse.len() as f64 / self.density;
                if min_count > 0 && perimeter > 0.0 {
                    let h = (1.0 / self.density).min(perimeter / min_count as f64) / VALIDATION_FACTOR;
                    v.extend(boundary_points(predicate, bbox, h));
                }
            }
        }
        v
    }
}

fn chebyshev_segment(a: Complex64, b: Complex64, m: usize) -> Vec<Complex64> {
    if m == 1 {
        return vec![(a + b) / 2.0];
    }
    (0..m)
        .map(|k| {
            let t = 0.5 - 0.5 * (PI * k as f64 / (m - 1) as f64).cos();
            a + (b - a) * t
        })
        .collect()
}

fn sample_kind(kind: &RegionKind, density: f64) -> SampleGrid {
    match kind {
        RegionKind::Points(p) => SampleGrid { interior: p.clone(), boundary: vec![] },
        RegionKind::Segment(a, b) => {
            let m = (density * (b - a).norm()).round() as usize;
            let interior = (0..=m).map(|k| if m == 0 { *a } else { a + (b - a) * (k as f64 / m as f64) }).collect();
            SampleGrid { interior, boundary: vec![] }
        }
        RegionKind::Area { predicate, bbox } => {
            let h = 1.0 / density;
            let interior = lattice(bbox, h).into_iter().filter(|z| predicate(*z)).collect();
            let boundary = boundary_points(predicate, bbox, h);
            SampleGrid { interior, boundary }
        }
    }
}

/// Axis-aligned lattice with spacing `h` anchored at the origin.
fn lattice(bbox: &BBox, h: f64) -> Vec<Complex64> {
    if bbox.is_empty() {
        return vec![];
    }
    let (i0, i1) = ((bbox.min.re / h).ceil() as i64, (bbox.max.re / h).floor() as i64);
    let (j0, j1) = ((bbox.min.im / h).ceil() as i64, (bbox.max.im / h).floor() as i64);
    let mut out = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            out.push(Complex64::new(i as f64 * h, j as f64 * h));
        }
    }
    out
}

/// Points on the boundary of `{predicate}` spaced roughly `h` apart.
///
/// Cells of a coarse lattice whose corners disagree are refined by quadtree
/// subdivision; crossings on the finest cell edges are located by bisection
/// (keeping the inside end) and thinned greedily to a minimum separation.
pub fn boundary_points(predicate: &Predicate, bbox: &BBox, h: f64) -> Vec<Complex64> {
    if bbox.is_empty() {
        return vec![];
    }
    let span = (bbox.max.re - bbox.min.re).max(bbox.max.im - bbox.min.im);
    let coarse = (h / 2.0).max(span / 400.0);
    let pad = Complex64::new(coarse, coarse);
    let (lo, hi) = (bbox.min - pad, bbox.max + pad);
    let nx = ((hi.re - lo.re) / coarse).ceil() as usize + 1;
    let ny = ((hi.im - lo.im) / coarse).ceil() as usize + 1;
    let at = |i: usize, j: usize| Complex64::new(lo.re + i as f64 * coarse, lo.im + j as f64 * coarse);
    let mut inside = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            inside[j * nx + i] = predicate(at(i, j));
        }
    }
    let bisect = |mut a: Complex64, mut b: Complex64| {
        // a inside, b outside
        for _ in 0..40 {
            let m = (a + b) / 2.0;
            if predicate(m) {
                a = m;
            } else {
                b = m;
            }
        }
        a
    };
    let mut crossings = Vec::new();
    let edge = |p: Complex64, q: Complex64, fp: bool, fq: bool, out: &mut Vec<Complex64>| {
        if fp != fq {
            out.push(if fp { bisect(p, q) } else { bisect(q, p) });
        }
    };
    let target = h / 2.0;
    let mut stack: Vec<(Complex64, f64, [bool; 4])> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let f = [inside[j * nx + i], inside[j * nx + i + 1], inside[(j + 1) * nx + i + 1], inside[(j + 1) * nx + i]];
            if f.iter().any(|x| *x) && !f.iter().all(|x| *x) {
                stack.push((at(i, j), coarse, f));
            }
        }
    }
    while let Some((c, size, f)) = stack.pop() {
        if size <= target * 1.0001 {
            let p = [c, c + size, c + Complex64::new(size, size), c + Complex64::new(0.0, size)];
            for e in 0..4 {
                edge(p[e], p[(e + 1) % 4], f[e], f[(e + 1) % 4], &mut crossings);
            }
            continue;
        }
        let half = size / 2.0;
        let g = |x: f64, y: f64| c + Complex64::new(x * half, y * half);
        let mut flag = [[false; 3]; 3];
        for (yy, row) in flag.iter_mut().enumerate() {
            for (xx, v) in row.iter_mut().enumerate() {
                *v = match (xx, yy) {
                    (0, 0) => f[0],
                    (2, 0) => f[1],
                    (2, 2) => f[2],
                    (0, 2) => f[3],
                    _ => predicate(g(xx as f64, yy as f64)),
                };
            }
        }
        for (ox, oy) in [(0usize, 0usize), (1, 0), (1, 1), (0, 1)] {
            let sub = [flag[oy][ox], flag[oy][ox + 1], flag[oy + 1][ox + 1], flag[oy + 1][ox]];
            if sub.iter().any(|x| *x) && !sub.iter().all(|x| *x) {
                stack.push((g(ox as f64, oy as f64), half, sub));
            }
        }
    }
    // an isolated inside node with no disagreeing cell still needs a node
    if crossings.is_empty() {
        for j in 0..ny {
            for i in 0..nx {
                if inside[j * nx + i] {
                    crossings.push(at(i, j));
                }
            }
        }
    }
    // corners recomputed by the quadtree can round across the boundary
    crossings.retain(|z| predicate(*z));
    crossings.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    thin(crossings, 0.8 * h)
}

fn thin(points: Vec<Complex64>, sep: f64) -> Vec<Complex64> {
    let key = |z: Complex64| ((z.re / sep).floor() as i64, (z.im / sep).floor() as i64);
    let mut cells: HashMap<(i64, i64), Vec<Complex64>> = HashMap::new();
    let mut out = Vec::new();
    for z in points {
        let (kx, ky) = key(z);
        let mut clash = false;
        'scan: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = cells.get(&(kx + dx, ky + dy)) {
                    if v.iter().any(|q| (q - z).norm() < sep) {
                        clash = true;
                        break 'scan;
                    }
                }
            }
        }
        if !clash {
            cells.entry((kx, ky)).or_default().push(z);
            out.push(z);
        }
    }
    out
}

/// `K_n = {|z| <= n, dist(z, complement) >= 1/n}`.
pub fn exhaustion_set(domain: &Domain, n: usize) -> CompactRegion {
    exhaustion_set_with_density(domain, n, DEFAULT_DENSITY)
}

pub fn exhaustion_set_with_density(domain: &Domain, n: usize, density: f64) -> CompactRegion {
    let nf = n as f64;
    let shape = domain.shape.clone();
    let predicate: Predicate = Arc::new(move |z: Complex64| z.norm() <= nf && shape.depth(z) >= 1.0 / nf);
    let mut bbox = BBox::square(nf);
    if let Some(b) = domain.shape.bbox() {
        bbox = bbox.intersect(&b);
    }
    let mut region = CompactRegion::area(format!("K_{n}"), predicate.clone(), bbox, density);
    // degenerate members (a single point such as the centre of a unit disc)
    if region.fit_grid.interior.is_empty() && region.fit_grid.boundary.is_empty() {
        if let Some(z) = domain.interior_point() {
            if predicate(z) {
                region = CompactRegion::new(format!("K_{n}"), RegionKind::Points(vec![z]), density);
            }
        }
    }
    region
}

pub fn sample_compact(region: &CompactRegion, density: f64) -> SampleGrid {
    if density <= 0.0 {
        return SampleGrid { interior: vec![], boundary: vec![] };
    }
    sample_kind(&region.kind, density)
}
