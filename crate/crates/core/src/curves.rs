//! Immersed curves in the pillowcase, stored as polylines in the plane
//! covering the torus, with the doubling and figure-eight constructions and a
//! set of regular homotopy invariants.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pillowcase::{lift, r3_of, Side, CORNERS_R3};

pub type Point = [f64; 2];

/// Samples per 2π of parameter.
pub const DEFAULT_DENSITY: usize = 720;
/// Largest turn between consecutive segments of an immersed polyline.
pub const MAX_TURN: f64 = 15.0 * PI / 180.0;
/// Crossings at a smaller angle are tangential.
pub const MIN_CROSSING_ANGLE: f64 = 1e-3;
/// Distance under which a polyline vertex counts as sitting on a corner.
pub const CORNER_SNAP: f64 = 1e-9;
/// Intersections this close to a corner are arc endpoints, not crossings.
const CORNER_EXCLUSION: f64 = 1e-6;
/// Parameter distance under which two crossings are the same.
const PARAM_DEDUP: f64 = 1e-7;
const DECK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Circle,
    GoodArc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub kind: ComponentKind,
    /// Unreduced lift. Circles repeat their start point up to a deck
    /// transformation; arcs run from corner to corner.
    pub lift: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImmersedCurve {
    pub side: Side,
    pub components: Vec<Component>,
}

/// `x ↦ sign·x + shift`, the map taking the start of a closed lift to its end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deck {
    pub sign: i8,
    pub shift: Point,
}

impl Deck {
    pub fn apply(&self, p: Point) -> Point {
        let s = f64::from(self.sign);
        [s * p[0] + self.shift[0], s * p[1] + self.shift[1]]
    }

    pub fn apply_vector(&self, v: Point) -> Point {
        let s = f64::from(self.sign);
        [s * v[0], s * v[1]]
    }

    /// Lattice class of the shift in units of 2π.
    pub fn lattice(&self) -> [i64; 2] {
        [(self.shift[0] / TAU).round() as i64, (self.shift[1] / TAU).round() as i64]
    }

    pub fn inverse(&self) -> Deck {
        let s = f64::from(self.sign);
        Deck { sign: self.sign, shift: [-s * self.shift[0], -s * self.shift[1]] }
    }

    /// `k`-fold composite, negative `k` for the inverse.
    pub fn power(&self, k: i64) -> Deck {
        let step = if k >= 0 { *self } else { self.inverse() };
        let mut out = Deck { sign: 1, shift: [0.0, 0.0] };
        for _ in 0..k.unsigned_abs() {
            let s = f64::from(step.sign);
            out = Deck {
                sign: out.sign * step.sign,
                shift: [s * out.shift[0] + step.shift[0], s * out.shift[1] + step.shift[1]],
            };
        }
        out
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn turn(a: Point, b: Point) -> f64 {
    cross(a, b).atan2(dot(a, b))
}

fn near_lattice(v: Point, period: f64) -> Option<Point> {
    let r = [(v[0] / period).round() * period, (v[1] / period).round() * period];
    (norm(sub(v, r)) < DECK_TOLERANCE).then_some(r)
}

/// Distance from `p` to the corner lattice `πℤ²`.
pub fn corner_lattice_distance(p: Point) -> f64 {
    norm(sub(p, [(p[0] / PI).round() * PI, (p[1] / PI).round() * PI]))
}

fn snap_corner(p: Point) -> Option<Point> {
    let c = [(p[0] / PI).round() * PI, (p[1] / PI).round() * PI];
    (norm(sub(p, c)) < CORNER_SNAP).then_some(c)
}

impl Component {
    pub fn circle(lift: Vec<Point>) -> Self {
        Component { kind: ComponentKind::Circle, lift }
    }

    pub fn good_arc(lift: Vec<Point>) -> Self {
        Component { kind: ComponentKind::GoodArc, lift }
    }

    pub fn segments(&self) -> usize {
        self.lift.len().saturating_sub(1)
    }

    pub fn deck(&self) -> Result<Deck> {
        let (Some(first), Some(last)) = (self.lift.first(), self.lift.last()) else {
            return Err(Error::InvalidCurve("empty component".into()));
        };
        match self.kind {
            ComponentKind::GoodArc => {
                let (Some(c0), Some(c1)) = (snap_corner(*first), snap_corner(*last)) else {
                    return Err(Error::InvalidCurve("good arc must start and end at corners".into()));
                };
                Ok(Deck { sign: 1, shift: [2.0 * (c1[0] - c0[0]), 2.0 * (c1[1] - c0[1])] })
            }
            ComponentKind::Circle => {
                if self.lift.len() < 4 {
                    return Err(Error::InvalidCurve("circle needs at least three segments".into()));
                }
                let d0 = sub(self.lift[1], self.lift[0]);
                let dn = sub(*last, self.lift[self.lift.len() - 2]);
                for sign in [1i8, -1] {
                    let s = f64::from(sign);
                    let shift = [last[0] - s * first[0], last[1] - s * first[1]];
                    if let Some(shift) = near_lattice(shift, TAU) {
                        let deck = Deck { sign, shift };
                        if turn(dn, deck.apply_vector(d0)).abs() < MAX_TURN {
                            return Ok(deck);
                        }
                    }
                }
                Err(Error::InvalidCurve("circle lift does not close up in the pillowcase".into()))
            }
        }
    }

    /// The closed lift: the circle itself, or the arc followed by its point
    /// reflection through the end corner.
    pub fn circle_lift(&self) -> Result<(Vec<Point>, Deck)> {
        let deck = self.deck()?;
        match self.kind {
            ComponentKind::Circle => Ok((self.lift.clone(), deck)),
            ComponentKind::GoodArc => {
                let end = snap_corner(*self.lift.last().expect("checked by deck")).expect("checked by deck");
                let mut pts = self.lift.clone();
                let n = pts.len() - 1;
                pts.extend(self.lift.iter().rev().skip(1).map(|p| [2.0 * end[0] - p[0], 2.0 * end[1] - p[1]]));
                debug_assert_eq!(pts.len(), 2 * n + 1);
                Ok((pts, deck))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let deck = self.deck()?;
        let pts = &self.lift;
        let interior = match self.kind {
            ComponentKind::Circle => &pts[..],
            ComponentKind::GoodArc => &pts[1..pts.len() - 1],
        };
        if interior.iter().any(|p| corner_lattice_distance(*p) < CORNER_EXCLUSION) {
            return Err(Error::InvalidCurve("curve passes through a corner".into()));
        }
        for w in pts.windows(3) {
            if turn(sub(w[1], w[0]), sub(w[2], w[1])).abs() >= MAX_TURN {
                return Err(Error::InvalidCurve("polyline turns too sharply to be an immersion".into()));
            }
        }
        if pts.windows(2).any(|w| norm(sub(w[1], w[0])) == 0.0) {
            return Err(Error::InvalidCurve("repeated vertex".into()));
        }
        if self.kind == ComponentKind::GoodArc {
            // the reflected continuation is automatically tangent; check the
            // closing corner as well
            let (closed, _) = self.circle_lift()?;
            let n = closed.len();
            let a = sub(closed[n - 1], closed[n - 2]);
            let b = deck.apply_vector(sub(closed[1], closed[0]));
            if turn(a, b).abs() > 1e-2 {
                return Err(Error::InvalidCurve("equivariant lift is not smooth".into()));
            }
        }
        Ok(())
    }

    /// Total turning of the closed lift over π, including the turn across
    /// the closing point.
    pub fn rotation_halves(&self) -> Result<i64> {
        let (pts, deck) = self.circle_lift()?;
        let mut total = 0.0;
        for w in pts.windows(3) {
            total += turn(sub(w[1], w[0]), sub(w[2], w[1]));
        }
        let n = pts.len();
        total += turn(sub(pts[n - 1], pts[n - 2]), deck.apply_vector(sub(pts[1], pts[0])));
        Ok((total / PI).round() as i64)
    }

    pub fn r3(&self) -> Vec<[f64; 3]> {
        self.lift.iter().map(|p| r3_of(p[0], p[1])).collect()
    }

    /// Polyline length in the plane.
    pub fn length(&self) -> f64 {
        self.lift.windows(2).map(|w| norm(sub(w[1], w[0]))).sum()
    }

    fn map(&self, f: impl Fn(Point) -> Point) -> Component {
        Component { kind: self.kind, lift: self.lift.iter().map(|p| f(*p)).collect() }
    }

    pub fn reversed(&self) -> Component {
        Component { kind: self.kind, lift: self.lift.iter().rev().copied().collect() }
    }
}

impl ImmersedCurve {
    pub fn new(side: Side, components: Vec<Component>) -> Self {
        ImmersedCurve { side, components }
    }

    pub fn empty(side: Side) -> Self {
        ImmersedCurve { side, components: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        self.components.iter().try_for_each(Component::validate)
    }

    pub fn map_lift(&self, f: impl Fn(Point) -> Point + Copy) -> ImmersedCurve {
        ImmersedCurve { side: self.side, components: self.components.iter().map(|c| c.map(f)).collect() }
    }

    pub fn with_side(&self, side: Side) -> ImmersedCurve {
        ImmersedCurve { side, ..self.clone() }
    }

    pub fn theta(&self) -> ImmersedCurve {
        self.map_lift(lift::theta)
    }

    pub fn w1(&self) -> ImmersedCurve {
        self.map_lift(lift::w1)
    }

    pub fn w2(&self) -> ImmersedCurve {
        self.map_lift(lift::w2)
    }

    /// Union of components; both curves must live on the same side.
    pub fn union(&self, other: &ImmersedCurve) -> Result<ImmersedCurve> {
        if self.side != other.side {
            return Err(Error::InvalidCurve("curves live on different sides".into()));
        }
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        Ok(ImmersedCurve { side: self.side, components })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<ImmersedCurve> {
        let c: ImmersedCurve = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

fn sample(n: usize, f: impl Fn(f64) -> Point) -> Vec<Point> {
    (0..=n).map(|k| f(k as f64 / n as f64)).collect()
}

fn samples_for(span: f64, density: usize) -> usize {
    ((span / TAU) * density as f64).ceil().max(8.0) as usize
}

/// The vertical circle `{[π/2, θ]}`.
pub fn b_ver(density: usize) -> ImmersedCurve {
    let n = samples_for(TAU, density);
    ImmersedCurve::new(Side::P0, vec![Component::circle(sample(n, |u| [PI / 2.0, TAU * u]))])
}

/// Straight good arc from the corner `start` along `direction` until it hits
/// the corner `start + π·direction`.
fn straight_arc(start: Point, direction: Point, density: usize) -> ImmersedCurve {
    let span = PI * norm(direction);
    let n = samples_for(span, density);
    let lift = sample(n, |u| [start[0] + PI * u * direction[0], start[1] + PI * u * direction[1]]);
    ImmersedCurve::new(Side::P0, vec![Component::good_arc(lift)])
}

/// Paths of the bottom and top edges leaving a corner, `[σ, 0]` for
/// `σ ∈ [0, length]` and its images under the symmetries.
#[derive(Debug, Clone, Serialize)]
pub struct CornerPaths {
    pub bl: Vec<Point>,
    pub br: Vec<Point>,
    pub tl: Vec<Point>,
    pub tr: Vec<Point>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StandardArcs {
    /// Bottom edge `[x, 0]`.
    pub beta: ImmersedCurve,
    pub corner_paths: CornerPaths,
    /// `t ↦ (t, t)`, bottom left to top right.
    pub slope_one: ImmersedCurve,
    /// `t ↦ (t, 2t)`, bottom left to bottom right.
    pub slope_two: ImmersedCurve,
}

pub fn standard_arcs(density: usize, corner_path_length: f64) -> StandardArcs {
    let n = samples_for(corner_path_length, density);
    let bl = sample(n, |u| [corner_path_length * u, 0.0]);
    let br: Vec<Point> = bl.iter().map(|p| lift::w2(*p)).collect();
    let tr: Vec<Point> = bl.iter().map(|p| lift::w1(*p)).collect();
    let tl: Vec<Point> = br.iter().map(|p| lift::w1(*p)).collect();
    StandardArcs {
        beta: straight_arc([0.0, 0.0], [1.0, 0.0], density),
        corner_paths: CornerPaths { bl, br, tl, tr },
        slope_one: straight_arc([0.0, 0.0], [1.0, 1.0], density),
        slope_two: straight_arc([0.0, 0.0], [1.0, 2.0], density),
    }
}

pub fn beta(density: usize) -> ImmersedCurve {
    straight_arc([0.0, 0.0], [1.0, 0.0], density)
}

pub fn slope_one_arc(density: usize) -> ImmersedCurve {
    straight_arc([0.0, 0.0], [1.0, 1.0], density)
}

pub fn slope_two_arc(density: usize) -> ImmersedCurve {
    straight_arc([0.0, 0.0], [1.0, 2.0], density)
}

fn require_circles(c: &ImmersedCurve) -> Result<()> {
    if c.components.iter().any(|k| k.kind != ComponentKind::Circle) {
        return Err(Error::InvalidCurve("doubling needs circle components".into()));
    }
    Ok(())
}

/// Two copies of every circle component.
pub fn double(c: &ImmersedCurve) -> Result<ImmersedCurve> {
    require_circles(c)?;
    let components = c.components.iter().flat_map(|k| [k.clone(), k.clone()]).collect();
    Ok(ImmersedCurve { side: c.side, components })
}

/// Every circle component traversed twice.
pub fn twisted_double(c: &ImmersedCurve) -> Result<ImmersedCurve> {
    require_circles(c)?;
    let mut components = Vec::with_capacity(c.components.len());
    for k in &c.components {
        let deck = k.deck()?;
        let mut lift = k.lift.clone();
        lift.extend(k.lift.iter().skip(1).map(|p| deck.apply(*p)));
        components.push(Component::circle(lift));
    }
    Ok(ImmersedCurve { side: c.side, components })
}

/// Resamples a polyline at `n` uniform arclength steps.
pub fn resample(points: &[Point], n: usize) -> Vec<Point> {
    let mut cumulative = vec![0.0];
    for w in points.windows(2) {
        cumulative.push(cumulative.last().copied().unwrap_or(0.0) + norm(sub(w[1], w[0])));
    }
    let total = *cumulative.last().unwrap_or(&0.0);
    let mut out = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for k in 0..=n {
        let target = total * k as f64 / n as f64;
        while seg + 2 < cumulative.len() && cumulative[seg + 1] < target {
            seg += 1;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let u = if len > 0.0 { ((target - cumulative[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = (points[seg], points[seg + 1]);
        out.push([a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]);
    }
    out
}

/// Figure eight of a good arc: its equivariant circle lift, parameterized
/// proportionally to arclength by `σ ∈ [0, 2π]`, pushed off by
/// `−2s cos σ` along the left normal.
pub fn figure_eight(arc: &ImmersedCurve, s: f64) -> Result<ImmersedCurve> {
    let [component] = arc.components.as_slice() else {
        return Err(Error::InvalidCurve("figure eight needs a single good arc".into()));
    };
    if component.kind != ComponentKind::GoodArc {
        return Err(Error::InvalidCurve("figure eight needs a good arc".into()));
    }
    if s == 0.0 || s.abs() > 1.0 {
        return Err(Error::OutOfDomain { what: "figure_eight", detail: format!("s = {s} outside 0 < |s| ≤ 1") });
    }
    component.validate()?;
    let (closed, deck) = component.circle_lift()?;
    let total: f64 = closed.windows(2).map(|w| norm(sub(w[1], w[0]))).sum();
    let n = samples_for(total, DEFAULT_DENSITY);
    let pts = resample(&closed, n);
    let step = total / n as f64;
    // across the closing point the neighbouring segment comes from the deck
    // transformation
    let tangent = |k: usize| -> Point {
        let a = if k == 0 { deck.apply_vector(sub(pts[n], pts[n - 1])) } else { sub(pts[k], pts[k - 1]) };
        let b = if k == n { deck.apply_vector(sub(pts[1], pts[0])) } else { sub(pts[k + 1], pts[k]) };
        let t = [a[0] / norm(a) + b[0] / norm(b), a[1] / norm(a) + b[1] / norm(b)];
        let l = norm(t);
        [t[0] / l, t[1] / l]
    };
    let mut curvature = 0.0f64;
    for w in pts.windows(3) {
        curvature = curvature.max(turn(sub(w[1], w[0]), sub(w[2], w[1])).abs() / step);
    }
    if 2.0 * s.abs() * curvature > 0.5 {
        return Err(Error::OutOfDomain {
            what: "figure_eight",
            detail: format!("offset 2|s| = {} exceeds the normal injectivity radius; use a smaller s", 2.0 * s.abs()),
        });
    }
    let lift: Vec<Point> = (0..=n)
        .map(|k| {
            let sigma = TAU * k as f64 / n as f64;
            let t = tangent(k);
            let normal = [-t[1], t[0]];
            let off = -2.0 * s * sigma.cos();
            [pts[k][0] + off * normal[0], pts[k][1] + off * normal[1]]
        })
        .collect();
    let out = ImmersedCurve::new(arc.side, vec![Component::circle(lift)]);
    let arc_crossings = self_crossings(component)?.len();
    let crossings = self_crossings(&out.components[0])?.len();
    if crossings != 1 + 4 * arc_crossings {
        return Err(Error::OutOfDomain {
            what: "figure_eight",
            detail: format!("offset curve has {crossings} double points; use a smaller s"),
        });
    }
    Ok(out)
}

/// A crossing between two parameter values, possibly on the same component.
/// Parameters are segment index plus the fraction along the segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub component_a: usize,
    pub param_a: f64,
    pub component_b: usize,
    pub param_b: f64,
    /// Location in the lift of the first curve.
    pub point: Point,
    /// Crossing angle in `(0, π/2]`.
    pub angle: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntersectionReport {
    pub count: usize,
    pub points: Vec<Crossing>,
}

#[derive(Clone, Copy)]
struct Segment {
    component: usize,
    index: usize,
    /// Fractions of the original segment covered by this piece.
    from: f64,
    to: f64,
    a: Point,
    b: Point,
}

/// Segments of the other curve under `±x + 2π(m, n)`, placed so that every
/// segment starting in `[0, 2π)²` meets its partners.
struct Broadphase {
    cell: f64,
    origin: f64,
    cols: usize,
    cells: Vec<Vec<usize>>,
    segments: Vec<Segment>,
}

const BROADPHASE_MARGIN: f64 = 1.0;
const BROADPHASE_CELLS: usize = 96;

fn reduce_offset(p: Point) -> Point {
    [(p[0] / TAU).floor() * TAU, (p[1] / TAU).floor() * TAU]
}

fn split_long(p: Point, q: Point, out: &mut Vec<(f64, f64)>) {
    let pieces = (norm(sub(q, p)) / (0.5 * BROADPHASE_MARGIN)).ceil().max(1.0) as usize;
    out.extend((0..pieces).map(|k| (k as f64 / pieces as f64, (k + 1) as f64 / pieces as f64)));
}

fn lerp(p: Point, q: Point, u: f64) -> Point {
    [p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1])]
}

impl Broadphase {
    fn new(curve: &[Component]) -> Self {
        let origin = -BROADPHASE_MARGIN;
        let span = TAU + 2.0 * BROADPHASE_MARGIN;
        let cols = BROADPHASE_CELLS;
        let cell = span / cols as f64;
        let mut bp = Broadphase { cell, origin, cols, cells: vec![Vec::new(); cols * cols], segments: Vec::new() };
        let mut pieces = Vec::new();
        for (ci, comp) in curve.iter().enumerate() {
            for (si, w) in comp.lift.windows(2).enumerate() {
                pieces.clear();
                split_long(w[0], w[1], &mut pieces);
                for &(from, to) in &pieces {
                    let (p, q) = (lerp(w[0], w[1], from), lerp(w[0], w[1], to));
                    for sign in [1.0, -1.0] {
                        let (p, q) = ([sign * p[0], sign * p[1]], [sign * q[0], sign * q[1]]);
                        let off = reduce_offset(p);
                        for di in -1..=1 {
                            for dj in -1..=1 {
                                let shift = [di as f64 * TAU - off[0], dj as f64 * TAU - off[1]];
                                let seg = Segment {
                                    component: ci,
                                    index: si,
                                    from,
                                    to,
                                    a: [p[0] + shift[0], p[1] + shift[1]],
                                    b: [q[0] + shift[0], q[1] + shift[1]],
                                };
                                bp.insert(seg);
                            }
                        }
                    }
                }
            }
        }
        bp
    }

    fn range(&self, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let a = ((lo - self.origin) / self.cell).floor();
        let b = ((hi - self.origin) / self.cell).floor();
        if b < 0.0 || a >= self.cols as f64 {
            return None;
        }
        Some((a.max(0.0) as usize, (b as usize).min(self.cols - 1)))
    }

    fn insert(&mut self, seg: Segment) {
        let (Some(xs), Some(ys)) = (
            self.range(seg.a[0].min(seg.b[0]), seg.a[0].max(seg.b[0])),
            self.range(seg.a[1].min(seg.b[1]), seg.a[1].max(seg.b[1])),
        ) else {
            return;
        };
        let id = self.segments.len();
        self.segments.push(seg);
        for i in xs.0..=xs.1 {
            for j in ys.0..=ys.1 {
                self.cells[j * self.cols + i].push(id);
            }
        }
    }

    fn candidates(&self, a: Point, b: Point, out: &mut Vec<usize>) {
        out.clear();
        let (Some(xs), Some(ys)) =
            (self.range(a[0].min(b[0]), a[0].max(b[0])), self.range(a[1].min(b[1]), a[1].max(b[1])))
        else {
            return;
        };
        for i in xs.0..=xs.1 {
            for j in ys.0..=ys.1 {
                out.extend_from_slice(&self.cells[j * self.cols + i]);
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

/// Parameters `(u, v)` with `p + u(q − p) = r + v(t − r)`, both in `[0, 1]`.
fn segment_hit(p: Point, q: Point, r: Point, t: Point) -> Option<(f64, f64, f64)> {
    let d1 = sub(q, p);
    let d2 = sub(t, r);
    let den = cross(d1, d2);
    let scale = norm(d1) * norm(d2);
    if den.abs() <= 1e-14 * scale {
        return None;
    }
    let w = sub(r, p);
    let u = cross(w, d2) / den;
    let v = cross(w, d1) / den;
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&u) || !(-SLACK..=1.0 + SLACK).contains(&v) {
        return None;
    }
    Some((u.clamp(0.0, 1.0), v.clamp(0.0, 1.0), (den.abs() / scale).min(1.0).asin()))
}

fn periodic_gap(a: f64, b: f64, period: Option<f64>) -> f64 {
    let d = (a - b).abs();
    match period {
        Some(p) => d.min(p - d),
        None => d,
    }
}

fn raw_crossings(a: &[Component], b: &[Component], same: bool) -> Vec<Crossing> {
    let bp = Broadphase::new(b);
    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for (ci, comp) in a.iter().enumerate() {
        jobs.extend((0..comp.segments()).map(|si| (ci, si)));
    }
    let found: Vec<Crossing> = jobs
        .par_iter()
        .map_init(Vec::new, |cands, &(ci, si)| {
            let comp = &a[ci];
            let (p, q) = (comp.lift[si], comp.lift[si + 1]);
            let off = reduce_offset(p);
            let (p, q) = (sub(p, off), sub(q, off));
            let mut hits = Vec::new();
            bp.candidates(p, q, cands);
            for &id in cands.iter() {
                let seg = &bp.segments[id];
                let Some((u, v, angle)) = segment_hit(p, q, seg.a, seg.b) else { continue };
                let x = [p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1])];
                if corner_lattice_distance(x) < CORNER_EXCLUSION {
                    continue;
                }
                let param_a = si as f64 + u;
                let param_b = seg.index as f64 + seg.from + v * (seg.to - seg.from);
                if same && ci == seg.component {
                    let period = (comp.kind == ComponentKind::Circle).then_some(comp.segments() as f64);
                    if periodic_gap(param_a, param_b, period) < 1e-6 {
                        continue;
                    }
                }
                hits.push(Crossing {
                    component_a: ci,
                    param_a,
                    component_b: seg.component,
                    param_b,
                    point: [x[0] + off[0], x[1] + off[1]],
                    angle,
                });
            }
            hits
        })
        .flatten()
        .collect();
    found
}

fn dedup_crossings(mut raw: Vec<Crossing>, a: &[Component], b: &[Component], same: bool) -> Vec<Crossing> {
    if same {
        for c in &mut raw {
            if (c.component_a, c.param_a) > (c.component_b, c.param_b) {
                std::mem::swap(&mut c.component_a, &mut c.component_b);
                std::mem::swap(&mut c.param_a, &mut c.param_b);
            }
        }
    }
    raw.sort_by(|x, y| {
        (x.component_a, x.component_b).cmp(&(y.component_a, y.component_b)).then(x.param_a.total_cmp(&y.param_a))
    });
    let period =
        |comps: &[Component], i: usize| (comps[i].kind == ComponentKind::Circle).then_some(comps[i].segments() as f64);
    let mut out: Vec<Crossing> = Vec::new();
    for c in raw {
        let dup = out.iter().rev().take(64).any(|o| {
            o.component_a == c.component_a
                && o.component_b == c.component_b
                && periodic_gap(o.param_a, c.param_a, period(a, c.component_a)) < PARAM_DEDUP
                && periodic_gap(o.param_b, c.param_b, period(b, c.component_b)) < PARAM_DEDUP
        });
        if !dup {
            out.push(c);
        }
    }
    out
}

/// All crossings of `a` with `b` in the pillowcase, counted by parameter
/// pair: a multiply traversed curve contributes once per pass.
pub fn crossings(a: &ImmersedCurve, b: &ImmersedCurve) -> Result<Vec<Crossing>> {
    if a.side != b.side {
        return Err(Error::InvalidCurve("curves live on different sides".into()));
    }
    Ok(dedup_crossings(raw_crossings(&a.components, &b.components, false), &a.components, &b.components, false))
}

/// Transverse intersections of two curves in general position.
pub fn intersect(a: &ImmersedCurve, b: &ImmersedCurve) -> Result<IntersectionReport> {
    let points = crossings(a, b)?;
    if let Some(bad) = points.iter().find(|c| c.angle < MIN_CROSSING_ANGLE) {
        return Err(Error::Numerical {
            what: "intersect",
            detail: format!(
                "tangential crossing at ({:.6}, {:.6}); curves are not in general position",
                bad.point[0], bad.point[1]
            ),
        });
    }
    Ok(IntersectionReport { count: points.len(), points })
}

/// Double points of one component in the pillowcase.
pub fn self_crossings(c: &Component) -> Result<Vec<Crossing>> {
    let comps = std::slice::from_ref(c);
    Ok(dedup_crossings(raw_crossings(comps, comps, true), comps, comps, true))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ComponentInvariants {
    pub kind: ComponentKind,
    /// Winding numbers about the corners `bl, br, tl, tr`, measured on the
    /// sphere with `tr` at infinity; `None` for arcs.
    pub windings: Option<[i32; 4]>,
    /// Class of the closed lift in `H₁(T)`, up to sign; `None` when the lift
    /// only closes up after the elliptic involution.
    pub homology: Option<[i64; 2]>,
    pub double_points: usize,
    pub tangential_points: usize,
    /// Turning of the closed lift in units of π.
    pub rotation_halves: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurveInvariants {
    pub component_count: usize,
    /// Sorted, so that curves compare as multisets of components.
    pub components: Vec<ComponentInvariants>,
}

impl ComponentInvariants {
    /// Equality of the parts preserved by regular homotopy in the punctured
    /// pillowcase. Raw double point counts change by two under a
    /// Reidemeister II move, so only their parity enters.
    pub fn same_class(&self, other: &ComponentInvariants) -> bool {
        self.kind == other.kind
            && self.windings == other.windings
            && self.homology == other.homology
            && self.rotation_halves == other.rotation_halves
            && self.double_points % 2 == other.double_points % 2
    }
}

impl CurveInvariants {
    pub fn total_double_points(&self) -> usize {
        self.components.iter().map(|c| c.double_points).sum()
    }

    /// Multiset comparison of components up to regular homotopy.
    pub fn same_class(&self, other: &CurveInvariants) -> bool {
        if self.component_count != other.component_count {
            return false;
        }
        let mut unused: Vec<&ComponentInvariants> = other.components.iter().collect();
        for c in &self.components {
            let Some(i) = unused.iter().position(|o| c.same_class(o)) else { return false };
            unused.swap_remove(i);
        }
        true
    }
}

/// Orthonormal frame with `tr` as the projection pole.
fn stereographic(r: [f64; 3]) -> Point {
    let k = 1.0 / 3f64.sqrt();
    let pole = [-k, -k, k];
    let e1 = [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2, 0.0];
    let e2 = [k / 2f64.sqrt(), k / 2f64.sqrt(), 2.0 * k / 2f64.sqrt()];
    let l = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let u = [r[0] / l, r[1] / l, r[2] / l];
    let d = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let den = 1.0 - d(u, pole);
    [d(u, e1) / den, d(u, e2) / den]
}

/// Winding numbers of a closed curve in R³ about the corners.
pub fn corner_windings(path: &[[f64; 3]]) -> [i32; 4] {
    let plane: Vec<Point> = path.iter().map(|r| stereographic(*r)).collect();
    let mut out = [0; 4];
    for (k, corner) in CORNERS_R3.iter().enumerate().take(3) {
        let c = stereographic(*corner);
        let mut total = 0.0;
        for w in plane.windows(2) {
            total += turn(sub(w[0], c), sub(w[1], c));
        }
        if let (Some(first), Some(last)) = (plane.first(), plane.last()) {
            total += turn(sub(*last, c), sub(*first, c));
        }
        out[k] = (total / TAU).round() as i32;
    }
    out
}

fn normalize_sign(v: [i64; 2]) -> [i64; 2] {
    if v[0] < 0 || (v[0] == 0 && v[1] < 0) {
        [-v[0], -v[1]]
    } else {
        v
    }
}

pub fn component_invariants(c: &Component) -> Result<ComponentInvariants> {
    c.validate()?;
    let deck = c.deck()?;
    let crossings = self_crossings(c)?;
    let tangential = crossings.iter().filter(|x| x.angle < MIN_CROSSING_ANGLE).count();
    let mut inv = ComponentInvariants {
        kind: c.kind,
        windings: (c.kind == ComponentKind::Circle).then(|| corner_windings(&c.r3())),
        homology: (deck.sign > 0).then(|| normalize_sign(deck.lattice())),
        double_points: crossings.len() - tangential,
        tangential_points: tangential,
        rotation_halves: c.rotation_halves()?,
    };
    // orientation is not part of the data
    let negated = inv.windings.map(|w| w.map(|x| -x));
    let key = (inv.rotation_halves, inv.windings);
    let flipped = (-inv.rotation_halves, negated);
    if flipped > key {
        inv.rotation_halves = flipped.0;
        inv.windings = flipped.1;
    }
    Ok(inv)
}

pub fn invariants(c: &ImmersedCurve) -> Result<CurveInvariants> {
    let mut components = c.components.iter().map(component_invariants).collect::<Result<Vec<_>>>()?;
    components.sort();
    Ok(CurveInvariants { component_count: components.len(), components })
}

/// Largest distance from a point of one R³ polyline to the other polyline,
/// symmetrized.
pub fn hausdorff_r3(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    directed_r3(a, b).max(directed_r3(b, a))
}

pub fn point_segment_r3(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let w = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let t = if len2 > 0.0 { ((w[0] * d[0] + w[1] * d[1] + w[2] * d[2]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let e = [w[0] - t * d[0], w[1] - t * d[1], w[2] - t * d[2]];
    (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt()
}

/// Largest distance from a vertex of `a` to the polyline `b`.
pub fn directed_r3(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.par_iter()
        .map(|p| {
            if b.len() == 1 {
                return point_segment_r3(*p, b[0], b[0]);
            }
            b.windows(2).map(|w| point_segment_r3(*p, w[0], w[1])).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn beta_meets_vertical_circle_once() {
        let r = intersect(&beta(DEFAULT_DENSITY), &b_ver(DEFAULT_DENSITY)).unwrap();
        assert_eq!(r.count, 1);
        let p = r.points[0].point;
        assert!((p[0] - FRAC_PI_2).abs() < 1e-12 && p[1].abs() < 1e-12);
    }

    /// Brute force over all segment pairs and all 18 translates, without the
    /// broadphase.
    fn brute_force(a: &ImmersedCurve, b: &ImmersedCurve) -> usize {
        let mut hits: Vec<(f64, f64)> = Vec::new();
        for ca in &a.components {
            for cb in &b.components {
                for (i, s) in ca.lift.windows(2).enumerate() {
                    for (j, t) in cb.lift.windows(2).enumerate() {
                        for sign in [1.0, -1.0] {
                            for m in -3..=3 {
                                for n in -3..=3 {
                                    let tr = |p: Point| [sign * p[0] + TAU * m as f64, sign * p[1] + TAU * n as f64];
                                    if let Some((u, v, _)) = segment_hit(s[0], s[1], tr(t[0]), tr(t[1])) {
                                        let x = [s[0][0] + u * (s[1][0] - s[0][0]), s[0][1] + u * (s[1][1] - s[0][1])];
                                        if corner_lattice_distance(x) < CORNER_EXCLUSION {
                                            continue;
                                        }
                                        let key = (i as f64 + u, j as f64 + v);
                                        if hits.iter().all(|h| (h.0 - key.0).abs() + (h.1 - key.1).abs() > 1e-7) {
                                            hits.push(key);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        hits.len()
    }

    #[test]
    fn straight_arcs_share_only_their_corner() {
        let a = slope_one_arc(90);
        let b = slope_two_arc(90);
        assert_eq!(brute_force(&a, &b), 0);
        assert_eq!(intersect(&a, &b).unwrap().count, 0);
        let c = figure_eight(&b, 0.05).unwrap();
        let c = ImmersedCurve::new(Side::P0, vec![Component::circle(resample(&c.components[0].lift, 300))]);
        assert_eq!(brute_force(&a, &c), intersect(&a, &c).unwrap().count);
    }

    #[test]
    fn figure_eight_of_bottom_edge() {
        let s = 0.05;
        let f = figure_eight(&beta(DEFAULT_DENSITY), s).unwrap();
        let lift = &f.components[0].lift;
        for (k, p) in lift.iter().enumerate() {
            let sigma = TAU * k as f64 / (lift.len() - 1) as f64;
            assert!((p[0] - sigma).abs() < 1e-12 && (p[1] + 2.0 * s * sigma.cos()).abs() < 1e-12);
        }
        let d = self_crossings(&f.components[0]).unwrap();
        assert_eq!(d.len(), 1);
        let x = d[0].point;
        let (g, t) = crate::pillowcase::canonical(x[0], x[1]);
        assert!((g - FRAC_PI_2).abs() < 1e-9 && t.abs().min((t - TAU).abs()) < 1e-9);
        let inv = invariants(&f).unwrap();
        let w = inv.components[0].windings.unwrap();
        assert_eq!(w[0].abs(), 1);
        assert_eq!(w[1], -w[0]);
        assert_eq!((w[2], w[3]), (0, 0));
        let g = figure_eight(&beta(DEFAULT_DENSITY), -s).unwrap();
        assert!(hausdorff_r3(&f.components[0].r3(), &g.components[0].r3()) < 1e-4);
        assert_eq!(invariants(&g).unwrap(), inv);
    }

    #[test]
    fn figure_eights_of_standard_arcs_have_one_double_point() {
        for arc in [beta(DEFAULT_DENSITY), slope_one_arc(DEFAULT_DENSITY), slope_two_arc(DEFAULT_DENSITY)] {
            for s in [0.01, 0.05, 0.1] {
                let f = figure_eight(&arc, s).unwrap();
                assert_eq!(invariants(&f).unwrap().total_double_points(), 1);
            }
        }
    }

    #[test]
    fn vertical_circle_invariants() {
        let inv = invariants(&b_ver(DEFAULT_DENSITY)).unwrap();
        let c = &inv.components[0];
        // the circle separates {bl, tl} from {br, tr}
        assert_eq!(c.windings, Some([1, 0, 1, 0]));
        assert_eq!(c.homology, Some([0, 1]));
        assert_eq!(c.double_points, 0);
        assert_eq!(c.rotation_halves, 0);
        let d = invariants(&double(&b_ver(DEFAULT_DENSITY)).unwrap()).unwrap();
        assert_eq!(d.component_count, 2);
        let t = invariants(&twisted_double(&b_ver(DEFAULT_DENSITY)).unwrap()).unwrap();
        assert_eq!(t.component_count, 1);
        assert_eq!(t.components[0].homology, Some([0, 2]));
        assert!(double(&beta(90)).is_err());
        assert_eq!(invariants(&ImmersedCurve::empty(Side::P0)).unwrap().component_count, 0);
    }

    #[test]
    fn doubling_doubles_windings() {
        let f = figure_eight(&beta(DEFAULT_DENSITY), 0.05).unwrap();
        let w = corner_windings(&f.components[0].r3());
        let t = twisted_double(&f).unwrap();
        let w2 = corner_windings(&t.components[0].r3());
        assert_eq!(w2, w.map(|x| 2 * x));
        let total: i32 = double(&f).unwrap().components.iter().map(|c| corner_windings(&c.r3())[0]).sum();
        assert_eq!(total, 2 * w[0]);
    }

    #[test]
    fn corner_paths_start_at_their_corners() {
        let arcs = standard_arcs(DEFAULT_DENSITY, 0.5);
        let r = |p: Point| r3_of(p[0], p[1]);
        assert_eq!(r(arcs.corner_paths.bl[0]), CORNERS_R3[0]);
        for (path, corner) in [(&arcs.corner_paths.br, 1), (&arcs.corner_paths.tl, 2), (&arcs.corner_paths.tr, 3)] {
            let x = r(path[0]);
            assert!((0..3).all(|k| (x[k] - CORNERS_R3[corner][k]).abs() < 1e-12));
        }
    }

    #[test]
    fn symmetries_permute_windings() {
        let f = figure_eight(&slope_two_arc(DEFAULT_DENSITY), 0.05).unwrap();
        let w = corner_windings(&f.components[0].r3());
        // differences from the tr winding are the intrinsic quantities
        let rel = |w: [i32; 4]| [w[0] - w[3], w[1] - w[3], w[2] - w[3], 0];
        for (img, perm) in [(f.w1(), lift::W1_CORNERS), (f.w2(), lift::W2_CORNERS)] {
            let v = corner_windings(&img.components[0].r3());
            for k in 0..4 {
                assert_eq!(v[perm[k]] - v[perm[3]], rel(w)[k]);
            }
        }
        let v = corner_windings(&f.theta().components[0].r3());
        assert_eq!(v, w.map(|x| -x));
        let h = |c: &ImmersedCurve| c.components[0].deck().unwrap().lattice();
        assert_eq!(h(&f.theta()), [h(&f)[0], -h(&f)[1]]);
    }

    #[test]
    fn json_round_trip() {
        let c = figure_eight(&beta(90), 0.05).unwrap();
        let text = c.to_json().unwrap();
        assert!(text.contains("\"kind\": \"circle\""));
        assert_eq!(ImmersedCurve::from_json(&text).unwrap(), c);
    }

    #[test]
    fn rejects_corner_crossing_and_cusps() {
        let through = ImmersedCurve::new(
            Side::P0,
            vec![Component::circle((0..=40).map(|k| [0.0, TAU * k as f64 / 40.0]).collect())],
        );
        assert!(through.validate().is_err());
        let cusp = Component::good_arc(vec![[0.0, 0.0], [1.0, 0.1], [0.5, 0.2], [PI, 0.0]]);
        assert!(cusp.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn intersect_is_symmetric(s in 0.02f64..0.1, shift in 0.1f64..3.0) {
                let a = figure_eight(&slope_one_arc(240), s).unwrap();
                let b = b_ver(240).map_lift(move |p| [p[0] + shift - FRAC_PI_2, p[1]]);
                let ab = intersect(&a, &b).unwrap();
                let ba = intersect(&b, &a).unwrap();
                prop_assert_eq!(ab.count, ba.count);
                for p in &ab.points {
                    let r = r3_of(p.point[0], p.point[1]);
                    let matched = ba.points.iter().any(|q| {
                        let t = r3_of(q.point[0], q.point[1]);
                        (0..3).all(|k| (r[k] - t[k]).abs() < 1e-9)
                    });
                    prop_assert!(matched);
                }
            }
        }
    }
}
