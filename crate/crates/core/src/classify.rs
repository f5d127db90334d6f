//! Empirical convergence classification at finite resolution, and an
//! estimate of the open set where convergence is locally uniform.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{exhaustion_set_with_density, BBox, Domain};
use crate::sequence::Sequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Yes,
    No,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub eps_p: f64,
    pub eps_u: f64,
    /// A tail whose log-log slope is at most this counts as decaying even
    /// above the threshold.
    pub decay_slope: f64,
    /// Sample density for the exhaustion grids.
    pub density: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { eps_p: 1e-3, eps_u: 1e-3, decay_slope: -0.5, density: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrajectory {
    pub label: String,
    /// `|f_n|` (or its sup over a set) for `n = 1..=n_max`.
    pub values: Vec<f64>,
    /// Slope of `log |f_n|` against `n`.
    pub rate: f64,
    pub decays: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub label: String,
    pub pointwise: Flag,
    pub compact: Flag,
    pub uniform: Flag,
    pub evidence: Vec<ProbeTrajectory>,
    pub n_max: usize,
    pub thresholds: Thresholds,
    pub notes: Vec<String>,
}

impl ConvergenceVerdict {
    /// Short name of the verdict, e.g. `compact-not-uniform`.
    pub fn class(&self) -> &'static str {
        use Flag::*;
        match (self.pointwise, self.compact, self.uniform) {
            (Yes, Yes, Yes) => "uniform",
            (Yes, Yes, No) => "compact-not-uniform",
            (Yes, No, No) => "pointwise-not-compact",
            (No, No, No) => "not-pointwise",
            _ => "inconclusive",
        }
    }
}

/// First index of the last third of `1..=n_max`.
pub fn tail_start(n_max: usize) -> usize {
    n_max + 1 - n_max.div_ceil(3)
}

fn log_rate(values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        values.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(i, v)| ((i + 1) as f64, v.ln())).collect();
    if pts.len() < 2 {
        return f64::NEG_INFINITY;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    num / den
}

/// Tail below `eps`, or strictly decreasing with log-log slope at most
/// `slope` between the ends of the tail.
pub fn tail_decays(values: &[f64], eps: f64, slope: f64) -> bool {
    let n_max = values.len();
    if n_max == 0 {
        return false;
    }
    let s = tail_start(n_max);
    let tail = &values[s - 1..];
    if tail.iter().all(|v| *v < eps) {
        return true;
    }
    if tail.len() < 2 || !tail.windows(2).all(|w| w[1] < w[0]) || !tail.iter().all(|v| v.is_finite()) {
        return false;
    }
    let (a, b) = (tail[0], tail[tail.len() - 1]);
    if a <= 0.0 {
        return false;
    }
    let loglog = if b <= 0.0 { f64::NEG_INFINITY } else { (b / a).ln() / (n_max as f64 / s as f64).ln() };
    loglog <= slope
}

fn trajectory(label: String, values: Vec<f64>, eps: f64, slope: f64) -> ProbeTrajectory {
    let decays = tail_decays(&values, eps, slope);
    ProbeTrajectory { label, rate: log_rate(&values), values, decays }
}

fn sup_trajectory(f: &dyn Sequence, pts: &[Complex64], n_max: usize) -> Result<Vec<f64>> {
    (1..=n_max).map(|n| Ok(f.eval_many(n, pts)?.iter().map(|v| v.norm()).fold(0.0, f64::max))).collect()
}

fn sample_set(domain: &Domain, j: usize, density: f64) -> Vec<Complex64> {
    let k = exhaustion_set_with_density(domain, j, density);
    let mut pts = k.fit_grid.all();
    pts.extend(k.fit_nodes(0));
    pts
}

fn coarse_points(domain: &Domain, density: f64) -> Vec<Complex64> {
    let pts = sample_set(domain, 2, density);
    let step = (pts.len() / 24).max(1);
    pts.into_iter().step_by(step).collect()
}

/// Classifies `f` from its first `n_max` members.
pub fn classify(f: &dyn Sequence, domain: &Domain, n_max: usize, th: &Thresholds) -> ConvergenceVerdict {
    match classify_inner(f, domain, n_max, th) {
        Ok(v) => v,
        Err(e) => ConvergenceVerdict {
            label: f.label(),
            pointwise: Flag::Inconclusive,
            compact: Flag::Inconclusive,
            uniform: Flag::Inconclusive,
            evidence: vec![],
            n_max,
            thresholds: *th,
            notes: vec![format!("evaluation failed: {e}")],
        },
    }
}

fn classify_inner(f: &dyn Sequence, domain: &Domain, n_max: usize, th: &Thresholds) -> Result<ConvergenceVerdict> {
    let mut evidence = Vec::new();
    let mut notes = vec![format!("verdicts hold at resolution n_max = {n_max}")];
    let n_max = n_max.max(1);
    let s = tail_start(n_max);

    let mut points = f.pointwise_points();
    if points.is_empty() {
        points = coarse_points(domain, th.density);
    }
    points.retain(|z| domain.contains(*z));
    let mut pointwise = true;
    for z in &points {
        let vals = (1..=n_max).map(|n| Ok(f.eval(n, *z)?.norm())).collect::<Result<Vec<f64>>>()?;
        let t = trajectory(format!("z = {z}"), vals, th.eps_p, th.decay_slope);
        pointwise &= t.decays;
        evidence.push(t);
    }

    // exhaustion sets beyond the tail start may hold points where the early
    // tail members are not yet controlled
    let mut compact = true;
    let mut largest = Vec::new();
    for j in 1..=s {
        let mut pts = sample_set(domain, j, th.density);
        if pts.is_empty() {
            continue;
        }
        let vals = sup_trajectory(f, &pts, n_max)?;
        let t = trajectory(format!("sup over K_{j}"), vals, th.eps_p, th.decay_slope);
        compact &= t.decays;
        evidence.push(t);
        largest = std::mem::take(&mut pts);
    }
    let moving: Vec<Vec<Complex64>> = (1..=n_max).map(|n| f.compact_probes(n)).collect();
    if moving.iter().any(|v| !v.is_empty()) {
        let vals = (1..=n_max)
            .map(|n| Ok(f.eval_many(n, &moving[n - 1])?.iter().map(|v| v.norm()).fold(0.0, f64::max)))
            .collect::<Result<Vec<f64>>>()?;
        let t = trajectory("moving points of a fixed compact set".into(), vals, th.eps_p, th.decay_slope);
        compact &= t.decays;
        evidence.push(t);
    }

    let escape: Vec<Vec<Complex64>> = (1..=n_max).map(|n| f.escape_probes(n)).collect();
    let mut escape_vals = vec![0.0; n_max];
    for n in 1..=n_max {
        if !escape[n - 1].is_empty() {
            escape_vals[n - 1] = f.eval_many(n, &escape[n - 1])?.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
    }
    let large: Vec<usize> = (s..=n_max).collect();
    let above = large.iter().filter(|n| escape_vals[**n - 1] > th.eps_u).count();
    let has_escape = large.iter().any(|n| !escape[*n - 1].is_empty());
    if has_escape {
        evidence.push(trajectory("escape points".into(), escape_vals.clone(), th.eps_u, th.decay_slope));
    }
    let uniform = if has_escape && 2 * above >= large.len() {
        Flag::No
    } else {
        let tail_sup = if largest.is_empty() {
            0.0
        } else {
            sup_trajectory(f, &largest, n_max)?[s - 1..].iter().cloned().fold(0.0, f64::max)
        };
        if above == 0 && tail_sup < th.eps_u {
            Flag::Yes
        } else {
            Flag::Inconclusive
        }
    };

    let mut pointwise = if pointwise { Flag::Yes } else { Flag::No };
    let mut compact = if compact { Flag::Yes } else { Flag::No };
    let mut uniform = uniform;
    // enforce uniform => compact => pointwise
    if compact == Flag::Yes && pointwise != Flag::Yes {
        notes.push("compact decay seen but pointwise test failed; compact downgraded".into());
        compact = Flag::Inconclusive;
    }
    if uniform == Flag::Yes && compact != Flag::Yes {
        notes.push("uniform decay seen but compact test failed; uniform downgraded".into());
        uniform = Flag::Inconclusive;
    }
    if pointwise == Flag::No {
        compact = Flag::No;
        uniform = Flag::No;
    }
    if compact == Flag::No {
        uniform = Flag::No;
    }
    if pointwise == Flag::Inconclusive && compact == Flag::Yes {
        pointwise = Flag::Inconclusive;
    }
    Ok(ConvergenceVerdict {
        label: f.label(),
        pointwise,
        compact,
        uniform,
        evidence,
        n_max,
        thresholds: *th,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub center: Complex64,
    pub size: f64,
    /// `max_{n in tail} sup_cell |f_n|`.
    pub tail_sup: f64,
    pub trajectory: Vec<f64>,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsgoodEstimate {
    pub window: (Complex64, Complex64),
    pub cell_size: f64,
    pub n_max: usize,
    pub cells: Vec<Cell>,
    /// Centres of window cells with no sample point in the domain.
    pub excluded: Vec<Complex64>,
    pub thresholds: Thresholds,
}

const CELL_SUBDIV: usize = 4;

impl OsgoodEstimate {
    pub fn flagged(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.flagged)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("cx,cy,size,tail_sup,flagged\n");
        for c in &self.cells {
            let _ = writeln!(s, "{},{},{},{:e},{}", c.center.re, c.center.im, c.size, c.tail_sup, c.flagged);
        }
        s
    }

    /// Heatmap of `log10` of the per-cell tail sup; flagged cells outlined.
    pub fn to_svg(&self) -> String {
        let (lo, hi) = self.window;
        let px = 480.0;
        let scale = px / (hi.re - lo.re).max(hi.im - lo.im);
        let w = (hi.re - lo.re) * scale;
        let h = (hi.im - lo.im) * scale;
        let logs: Vec<f64> = self.cells.iter().map(|c| c.tail_sup.max(1e-300).log10()).collect();
        let (vmin, vmax) = (-16.0f64, logs.iter().cloned().fold(-16.0f64, f64::max).max(-15.0));
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{:.0}" viewBox="0 0 {w:.0} {:.0}">"#,
            h + 30.0,
            h + 30.0
        );
        for (c, l) in self.cells.iter().zip(&logs) {
            let t = ((l - vmin) / (vmax - vmin)).clamp(0.0, 1.0);
            let (r, g, b) = ((255.0 * t) as u8, (80.0 * (1.0 - (2.0 * t - 1.0).abs())) as u8, (255.0 * (1.0 - t)) as u8);
            let x = (c.center.re - c.size / 2.0 - lo.re) * scale;
            let y = (hi.im - c.center.im - c.size / 2.0) * scale;
            let stroke = if c.flagged { r#" stroke="white" stroke-width="1""# } else { "" };
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},{g},{b})"{stroke}><title>{:.3e}</title></rect>"#,
                c.size * scale,
                c.size * scale,
                c.tail_sup
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="4" y="{:.0}" font-size="12" font-family="monospace">log10 tail sup: blue {vmin:.0} .. red {vmax:.1}; outlined = flagged</text>"#,
            h + 20.0
        );
        s.push_str("</svg>\n");
        s
    }
}

/// Per-cell tail sups on a square grid over the domain (clipped to
/// `[-window, window]^2` when unbounded).
pub fn osgood_estimate(
    f: &dyn Sequence,
    domain: &Domain,
    n_max: usize,
    cell_size: f64,
    window: f64,
    th: &Thresholds,
) -> Result<OsgoodEstimate> {
    let n_max = n_max.max(1);
    let bbox = domain.shape.bbox().unwrap_or(BBox::square(window)).intersect(&BBox::square(window));
    let nx = ((bbox.max.re - bbox.min.re) / cell_size).ceil().max(1.0) as usize;
    let ny = ((bbox.max.im - bbox.min.im) / cell_size).ceil().max(1.0) as usize;
    let s = tail_start(n_max);
    let mut cells = Vec::new();
    let mut excluded = Vec::new();
    let probes: Vec<Vec<Complex64>> = (1..=n_max).map(|n| f.compact_probes(n)).collect();
    for iy in 0..ny {
        for ix in 0..nx {
            let x0 = bbox.min.re + ix as f64 * cell_size;
            let y0 = bbox.min.im + iy as f64 * cell_size;
            let center = Complex64::new(x0 + cell_size / 2.0, y0 + cell_size / 2.0);
            let mut pts = Vec::new();
            for a in 0..=CELL_SUBDIV {
                for b in 0..=CELL_SUBDIV {
                    let z = Complex64::new(
                        x0 + cell_size * a as f64 / CELL_SUBDIV as f64,
                        y0 + cell_size * b as f64 / CELL_SUBDIV as f64,
                    );
                    if domain.contains(z) {
                        pts.push(z);
                    }
                }
            }
            if pts.is_empty() {
                excluded.push(center);
                continue;
            }
            let inside = |z: &Complex64| (z.re - x0).clamp(0.0, cell_size) == z.re - x0 && (z.im - y0).clamp(0.0, cell_size) == z.im - y0;
            let mut traj = Vec::with_capacity(n_max);
            for n in 1..=n_max {
                let mut q = pts.clone();
                q.extend(probes[n - 1].iter().filter(|z| inside(z)));
                traj.push(f.eval_many(n, &q)?.iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
            let tail_sup = traj[s - 1..].iter().cloned().fold(0.0, f64::max);
            let flagged = tail_decays(&traj, th.eps_u, th.decay_slope);
            cells.push(Cell { center, size: cell_size, tail_sup, trajectory: traj, flagged });
        }
    }
    Ok(OsgoodEstimate { window: (bbox.min, bbox.max), cell_size, n_max, cells, excluded, thresholds: *th })
}
