//! Composition of immersed curves with the correspondence given by the two
//! restriction maps: the fiber product over a curve, traced by
//! pseudo-arclength continuation, and its push-forward to the second
//! pillowcase.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::curves::{self, Component, ComponentKind, CurveInvariants, Deck, ImmersedCurve, Point};
use crate::error::{Error, Result};
use crate::pillowcase::{pi1_chars, triple_angles, Side};
use crate::quat::norm3;
use crate::variety::{self, sheet_label, FiberStatus, FoldCircle, SheetLabel};
use crate::words::{embed, named, reduced, Variant};

/// Initial continuation step.
pub const INITIAL_STEP: f64 = 1e-3;
pub const MAX_STEP: f64 = 5e-3;
pub const MIN_STEP: f64 = 1e-7;
pub const MAX_STEPS: usize = 100_000;
/// Residual of the reduced defining function accepted by the corrector.
pub const CORRECTOR_TOLERANCE: f64 = 1e-12;
/// Smallest angle between a curve and a fold image at a crossing.
pub const MIN_FOLD_ANGLE: f64 = 1e-2;
const CORRECTOR_ITERATIONS: usize = 8;
const DIFF_STEP: f64 = 1e-7;
/// Largest change of tangent direction accepted in one step.
const MAX_TANGENT_TURN: f64 = 0.2;

/// The lift of one input component as a path over the whole real line.
#[derive(Debug, Clone)]
pub struct PeriodicPath {
    points: Vec<Point>,
    cumulative: Vec<f64>,
    pub period: f64,
    pub deck: Deck,
    pub kind: ComponentKind,
}

impl PeriodicPath {
    pub fn new(c: &Component) -> Result<Self> {
        c.validate()?;
        let (points, deck) = c.circle_lift()?;
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for w in points.windows(2) {
            let step = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            cumulative.push(cumulative[cumulative.len() - 1] + step);
        }
        let period = cumulative[cumulative.len() - 1];
        Ok(PeriodicPath { points, cumulative, period, deck, kind: c.kind })
    }

    /// Number of whole periods below `t`.
    pub fn periods(&self, t: f64) -> i64 {
        (t / self.period).floor() as i64
    }

    pub fn at(&self, t: f64) -> Point {
        let k = self.periods(t);
        let local = t - k as f64 * self.period;
        let seg = match self.cumulative.binary_search_by(|c| c.total_cmp(&local)) {
            Ok(i) => i.min(self.points.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.points.len() - 2),
        };
        let len = self.cumulative[seg + 1] - self.cumulative[seg];
        let u = if len > 0.0 { (local - self.cumulative[seg]) / len } else { 0.0 };
        let (a, b) = (self.points[seg], self.points[seg + 1]);
        let p = [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])];
        if k == 0 {
            p
        } else {
            self.deck.power(k).apply(p)
        }
    }

    /// Shift of `τ` matching a shift of `t` by `k` periods.
    pub fn tau_shift(&self, k: i64) -> f64 {
        if self.deck.sign < 0 && k.rem_euclid(2) == 1 {
            PI
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FiberSample {
    pub t: f64,
    pub nu: f64,
    pub tau: f64,
    pub gamma: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    /// Index of the input component.
    pub component: usize,
    /// Closed loop; the last sample repeats the first up to `closing_periods`
    /// periods of the input path.
    pub samples: Vec<FiberSample>,
    pub closing_periods: i64,
    /// Sample indices where `t` reverses, which happens exactly at folds.
    pub fold_crossings: Vec<usize>,
    /// Sheet of each sample; `None` within reach of a fold.
    pub sheets: Vec<Option<SheetLabel>>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FiberProduct {
    pub input: ImmersedCurve,
    pub variant: Variant,
    pub s: f64,
    pub branches: Vec<Branch>,
}

struct Tracer<'a> {
    path: &'a PeriodicPath,
    variant: Variant,
    s: f64,
}

type State = Vector3<f64>;

impl Tracer<'_> {
    fn residual(&self, x: &State) -> [f64; 2] {
        let p = self.path.at(x[0]);
        reduced(self.variant, self.s, p[0], p[1], x[1], x[2])
    }

    fn jacobian(&self, x: &State) -> [[f64; 3]; 2] {
        let mut j = [[0.0; 3]; 2];
        for k in 0..3 {
            let mut a = *x;
            let mut b = *x;
            a[k] += DIFF_STEP;
            b[k] -= DIFF_STEP;
            let (fa, fb) = (self.residual(&a), self.residual(&b));
            for r in 0..2 {
                j[r][k] = (fa[r] - fb[r]) / (2.0 * DIFF_STEP);
            }
        }
        j
    }

    fn tangent(&self, x: &State, previous: Option<&State>) -> State {
        let j = self.jacobian(x);
        let t = Vector3::new(j[0][0], j[0][1], j[0][2]).cross(&Vector3::new(j[1][0], j[1][1], j[1][2]));
        let mut t = t.normalize();
        match previous {
            Some(p) if t.dot(p) < 0.0 => t = -t,
            None if t[0] < 0.0 => t = -t,
            _ => {}
        }
        t
    }

    /// Newton on the defining equations plus the plane `T·(y − anchor) = offset`.
    fn correct(&self, guess: State, anchor: &State, direction: &State, offset: f64) -> Option<(State, f64, usize)> {
        let mut y = guess;
        for it in 0..CORRECTOR_ITERATIONS {
            let f = self.residual(&y);
            let plane = direction.dot(&(y - anchor)) - offset;
            let res = f[0].abs().max(f[1].abs());
            if res < CORRECTOR_TOLERANCE && plane.abs() < 1e-13 {
                return Some((y, res, it));
            }
            let j = self.jacobian(&y);
            let m = Matrix3::new(
                j[0][0],
                j[0][1],
                j[0][2],
                j[1][0],
                j[1][1],
                j[1][2],
                direction[0],
                direction[1],
                direction[2],
            );
            let dy = m.lu().solve(&Vector3::new(-f[0], -f[1], -plane))?;
            y += dy;
        }
        let f = self.residual(&y);
        let res = f[0].abs().max(f[1].abs());
        (res < CORRECTOR_TOLERANCE).then_some((y, res, CORRECTOR_ITERATIONS))
    }

    fn sample(&self, x: &State) -> FiberSample {
        let p = self.path.at(x[0]);
        FiberSample { t: x[0], nu: x[1], tau: x[2], gamma: p[0], theta: p[1] }
    }

    /// Images of the start state under whole periods of the input path.
    fn start_images(&self, start: &State, near: &State) -> Vec<(i64, State)> {
        let k_near = ((near[0] - start[0]) / self.path.period).round() as i64;
        (k_near - 1..=k_near + 1)
            .map(|k| {
                let tau = start[2] + self.path.tau_shift(k);
                // nearest representative of τ mod 2π
                let tau = tau + ((near[2] - tau) / TAU).round() * TAU;
                (k, Vector3::new(start[0] + k as f64 * self.path.period, start[1], tau))
            })
            .collect()
    }

    fn trace(&self, start: State, max_step: f64) -> Result<(Vec<State>, i64, f64)> {
        let t0 = self.tangent(&start, None);
        let mut x = start;
        let mut tan = t0;
        let mut h = INITIAL_STEP.min(max_step);
        let mut states = vec![start];
        let mut max_res = 0.0f64;
        let mut travelled = 0.0;
        for _ in 0..MAX_STEPS {
            let predicted = x + tan * h;
            let accepted = self.correct(predicted, &x, &tan, h).and_then(|(y, res, it)| {
                let t_new = self.tangent(&y, Some(&tan));
                let ok = t_new.dot(&tan) > MAX_TANGENT_TURN.cos() && (y - predicted).norm() < 0.5 * h;
                ok.then_some((y, t_new, res, it))
            });
            let Some((y, t_new, res, it)) = accepted else {
                h *= 0.5;
                if h < MIN_STEP {
                    return Err(Error::NotConverged { what: "fiber product continuation", residual: h });
                }
                continue;
            };
            travelled += (y - x).norm();
            max_res = max_res.max(res);
            // closure: crossing the plane through an image of the start
            if travelled > 10.0 * max_step {
                for (k, z) in self.start_images(&start, &y) {
                    let before = t0.dot(&(x - z));
                    let after = t0.dot(&(y - z));
                    if before < 0.0 && after >= 0.0 && (y - z).norm() < 2.0 * h.max(1e-6) + 1e-9 {
                        states.push(z);
                        return Ok((states, k, max_res));
                    }
                }
            }
            states.push(y);
            x = y;
            tan = t_new;
            if it <= 3 {
                h = (h * 1.5).min(max_step);
            }
        }
        Err(Error::Numerical {
            what: "fiber product continuation",
            detail: format!("branch did not close in {MAX_STEPS} steps"),
        })
    }

    /// Whether `root` over the parameter `t0` lies on the traced loop.
    fn visits(&self, states: &[State], t0: f64, root: [f64; 2]) -> bool {
        for w in states.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let ka = ((a[0] - t0) / self.path.period).floor();
            let kb = ((b[0] - t0) / self.path.period).floor();
            if ka == kb {
                continue;
            }
            let k = ka.max(kb) as i64;
            let target = t0 + k as f64 * self.path.period;
            let u = (target - a[0]) / (b[0] - a[0]);
            let nu = a[1] + u * (b[1] - a[1]);
            let tau = a[2] + u * (b[2] - a[2]) - self.path.tau_shift(k);
            let gap = ((tau - root[1] + PI).rem_euclid(TAU) - PI).abs();
            if (nu - root[0]).abs() < 1e-4 && gap < 1e-4 {
                return true;
            }
        }
        false
    }
}

fn seed_parameter(path: &PeriodicPath, variant: Variant, s: f64) -> Result<(f64, Vec<[f64; 2]>)> {
    let base = match path.kind {
        ComponentKind::Circle => 0.0,
        ComponentKind::GoodArc => 0.25 * path.period,
    };
    // move off the base parameter if its fiber is degenerate
    for k in 0..64 {
        let t = base + (k as f64) * 0.013 * path.period * if k % 2 == 0 { 1.0 } else { -1.0 };
        let p = path.at(t);
        let fiber = variety::solve_fiber(variant, s, p[0], p[1])?;
        if fiber.status == FiberStatus::TwoSheets {
            return Ok((t, fiber.solutions));
        }
    }
    Err(Error::Numerical { what: "fiber_product", detail: "no regular fiber to seed from".into() })
}

fn sheets_of(samples: &[FiberSample], crossings: &[usize]) -> Vec<Option<SheetLabel>> {
    samples
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let near_fold = crossings.iter().any(|&c| c.abs_diff(i) < 3);
            (!near_fold).then(|| sheet_label(p.gamma, p.theta, p.tau))
        })
        .collect()
}

fn fold_reversals(states: &[FiberSample]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut last_sign = 0.0;
    for (i, w) in states.windows(2).enumerate() {
        let dt = w[1].t - w[0].t;
        if dt == 0.0 {
            continue;
        }
        let sign = dt.signum();
        if last_sign != 0.0 && sign != last_sign {
            out.push(i);
        }
        last_sign = sign;
    }
    // the loop may close across a reversal
    if let (Some(first), Some(last)) =
        (states.windows(2).find(|w| w[1].t != w[0].t), states.windows(2).rev().find(|w| w[1].t != w[0].t))
    {
        if (first[1].t - first[0].t).signum() != (last[1].t - last[0].t).signum() {
            out.push(states.len() - 1);
        }
    }
    out
}

fn trace_component(component: usize, c: &Component, variant: Variant, s: f64, max_step: f64) -> Result<Vec<Branch>> {
    let path = PeriodicPath::new(c)?;
    let (t0, roots) = seed_parameter(&path, variant, s)?;
    let tracer = Tracer { path: &path, variant, s };
    let mut branches: Vec<(Vec<State>, i64, f64)> = Vec::new();
    for root in roots {
        if branches.iter().any(|(states, _, _)| tracer.visits(states, t0, root)) {
            continue;
        }
        branches.push(tracer.trace(Vector3::new(t0, root[0], root[1]), max_step)?);
    }
    Ok(branches
        .into_iter()
        .map(|(states, closing_periods, max_residual)| {
            let samples: Vec<FiberSample> = states.iter().map(|x| tracer.sample(x)).collect();
            let fold_crossings = fold_reversals(&samples);
            let sheets = sheets_of(&samples, &fold_crossings);
            Branch { component, samples, closing_periods, fold_crossings, sheets, max_residual }
        })
        .collect())
}

/// The fiber product of a curve with the variety, as closed loops.
pub fn fiber_product(c: &ImmersedCurve, variant: Variant, s: f64) -> Result<FiberProduct> {
    fiber_product_with_step(c, variant, s, MAX_STEP)
}

fn fiber_product_with_step(c: &ImmersedCurve, variant: Variant, s: f64, max_step: f64) -> Result<FiberProduct> {
    if c.side != Side::P0 {
        return Err(Error::InvalidCurve("composition takes curves in the first pillowcase".into()));
    }
    if s == 0.0 {
        return Err(Error::OutOfDomain { what: "fiber_product", detail: "s = 0 is not transverse".into() });
    }
    let per_component: Vec<Vec<Branch>> = c
        .components
        .par_iter()
        .enumerate()
        .map(|(i, k)| trace_component(i, k, variant, s, max_step))
        .collect::<Result<_>>()?;
    Ok(FiberProduct { input: c.clone(), variant, s, branches: per_component.into_iter().flatten().collect() })
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldCrossing {
    pub component: usize,
    pub corner: usize,
    pub point: Point,
    pub angle: f64,
}

/// The fold images as closed curves in the first pillowcase. Each image is
/// invariant under the involution, so half of it already closes up there.
pub fn fold_image_curve(folds: &[FoldCircle]) -> ImmersedCurve {
    let components = folds
        .iter()
        .map(|f| {
            let lift = f.image_lift();
            let half = lift.len() / 2;
            Component::circle(lift[..=half].to_vec())
        })
        .collect();
    ImmersedCurve::new(Side::P0, components)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransversalityReport {
    pub transverse: bool,
    pub crossings: Vec<FoldCrossing>,
}

pub fn check_transversality(c: &ImmersedCurve, variant: Variant, s: f64) -> Result<TransversalityReport> {
    let folds = variety::fold_locus(variant, s)?;
    check_transversality_with(c, &folds)
}

pub fn check_transversality_with(c: &ImmersedCurve, folds: &[FoldCircle]) -> Result<TransversalityReport> {
    let images = fold_image_curve(folds);
    let found = curves::crossings(&c.with_side(Side::P0), &images)?;
    let crossings: Vec<FoldCrossing> = found
        .iter()
        .map(|x| FoldCrossing {
            component: x.component_a,
            corner: folds[x.component_b].corner_index(),
            point: x.point,
            angle: x.angle,
        })
        .collect();
    let transverse = crossings.iter().all(|x| x.angle > MIN_FOLD_ANGLE);
    Ok(TransversalityReport { transverse, crossings })
}

/// `π₁` of a fiber sample as a point of the plane, continuing `previous`.
fn pushed_point(variant_s: f64, x: &FiberSample, previous: Option<(Point, [f64; 3])>) -> Result<(Point, [f64; 3])> {
    let rep = embed(variant_s, x.gamma, x.theta, x.nu, x.tau);
    let c = rep.eval(&named::c());
    let d = rep.eval(&named::d());
    let (g, t, n) = triple_angles(d, c, rep.f, previous.map(|p| p.1))?;
    let p = match previous {
        Some((q, _)) => [g + ((q[0] - g) / TAU).round() * TAU, t + ((q[1] - t) / TAU).round() * TAU],
        None => [g, t],
    };
    Ok((p, n))
}

fn push_branch(fp_s: f64, b: &Branch) -> Result<Component> {
    let mut lift = Vec::with_capacity(b.samples.len());
    let mut prev: Option<(Point, [f64; 3])> = None;
    for x in &b.samples {
        let next = pushed_point(fp_s, x, prev)?;
        lift.push(next.0);
        prev = Some(next);
    }
    Ok(Component::circle(lift))
}

/// The composed curve in the second pillowcase.
pub fn push_forward(fp: &FiberProduct) -> Result<ImmersedCurve> {
    let components = fp.branches.iter().map(|b| push_branch(fp.s, b)).collect::<Result<Vec<_>>>()?;
    let out = ImmersedCurve::new(Side::P1, components);
    out.validate()?;
    Ok(out)
}

/// Fiber product and push-forward, refining the continuation once when the
/// pushed polyline is too coarse to pass as an immersion.
pub fn compose(c: &ImmersedCurve, variant: Variant, s: f64) -> Result<(FiberProduct, ImmersedCurve)> {
    let report = check_transversality(c, variant, s)?;
    if !report.transverse {
        let worst = report.crossings.iter().map(|x| x.angle).fold(f64::INFINITY, f64::min);
        return Err(Error::Numerical {
            what: "compose",
            detail: format!("curve is tangent to a fold image (crossing angle {worst:.2e}); try another s"),
        });
    }
    let fp = fiber_product(c, variant, s)?;
    match push_forward(&fp) {
        Ok(out) => Ok((fp, out)),
        Err(Error::InvalidCurve(_)) => {
            let fp = fiber_product_with_step(c, variant, s, 0.25 * MAX_STEP)?;
            let out = push_forward(&fp)?;
            Ok((fp, out))
        }
        Err(e) => Err(e),
    }
}

/// Composition with the transposed correspondence, for curves in the second
/// pillowcase. The second projection is the first one twisted by `Θ` and an
/// involution of the variety, so the transpose is `Θ` on both ends of the
/// forward composition.
pub fn pull_back(c: &ImmersedCurve, variant: Variant, s: f64) -> Result<ImmersedCurve> {
    if c.side != Side::P1 {
        return Err(Error::InvalidCurve("pull_back takes curves in the second pillowcase".into()));
    }
    let (_, out) = compose(&c.theta().with_side(Side::P0), variant, s)?;
    Ok(out.theta().with_side(Side::P0))
}

/// Points of a pushed-forward branch in R³.
pub fn branch_r3(s: f64, b: &Branch) -> Vec<[f64; 3]> {
    b.samples.iter().map(|x| pi1_chars(&embed(s, x.gamma, x.theta, x.nu, x.tau))).collect()
}

/// Distance from `p` to the closed curve `f` on `[0, 2π]`: dense scan, then
/// golden-section refinement around the best sample.
pub fn distance_to_parametric(p: [f64; 3], f: &impl Fn(f64) -> [f64; 3], scan: usize) -> f64 {
    let d = |u: f64| {
        let q = f(u);
        norm3([p[0] - q[0], p[1] - q[1], p[2] - q[2]])
    };
    let h = TAU / scan as f64;
    let values: Vec<f64> = (0..scan).map(|k| d(k as f64 * h)).collect();
    // near a double point the closest sample may sit on the wrong strand, so
    // every local minimum of the scan is refined
    let mut best = f64::INFINITY;
    let floor = values.iter().copied().fold(f64::INFINITY, f64::min);
    for k in 0..scan {
        let (prev, next) = (values[(k + scan - 1) % scan], values[(k + 1) % scan]);
        if values[k] <= prev && values[k] <= next && values[k] <= floor + 0.5 {
            let u = k as f64 * h;
            best = best.min(golden_min(&d, u - h, u + h));
        }
    }
    best
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
    }
    fc.min(fd)
}

/// Distance from `p` to a sampled curve, refined on the parabola through
/// three consecutive samples around the nearest segment.
pub fn distance_to_samples(p: [f64; 3], pts: &[[f64; 3]]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return pts.windows(2).map(|w| curves::point_segment_r3(p, w[0], w[1])).fold(f64::INFINITY, f64::min);
    }
    let (k, coarse) = pts
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i, curves::point_segment_r3(p, w[0], w[1])))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, f64::INFINITY));
    let mut best = coarse;
    for start in [k.saturating_sub(1), k.min(n - 3)] {
        let (a, b, c) = (pts[start], pts[start + 1], pts[start + 2]);
        let (l1, l2) = (norm3(sub3(b, a)), norm3(sub3(c, b)));
        if l1 == 0.0 || l2 == 0.0 {
            continue;
        }
        // Lagrange basis on the chord-length nodes 0, l1, l1 + l2
        let (x0, x1, x2) = (0.0, l1, l1 + l2);
        let q = |x: f64| {
            let w0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
            let w1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
            let w2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
            [w0 * a[0] + w1 * b[0] + w2 * c[0], w0 * a[1] + w1 * b[1] + w2 * c[1], w0 * a[2] + w1 * b[2] + w2 * c[2]]
        };
        best = best.min(golden_min(&|x| norm3(sub3(p, q(x))), x0, x2));
    }
    best
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Hausdorff distance in R³ between a pushed branch and a closed
/// parametric curve on `[0, 2π]`.
pub fn hausdorff_to_parametric(points: &[[f64; 3]], f: impl Fn(f64) -> [f64; 3] + Sync, samples: usize) -> f64 {
    let forward = points.par_iter().map(|p| distance_to_parametric(*p, &f, 720)).reduce(|| 0.0, f64::max);
    let backward = (0..samples)
        .into_par_iter()
        .map(|k| distance_to_samples(f(TAU * k as f64 / samples as f64), points))
        .reduce(|| 0.0, f64::max);
    forward.max(backward)
}

/// `[σ, −2s cos σ]` in R³.
pub fn figure_eight_r3(s: f64) -> impl Fn(f64) -> [f64; 3] + Sync {
    move |sigma: f64| crate::pillowcase::r3_of(sigma, -2.0 * s * sigma.cos())
}

/// `[σ, −2s cos(σ + k·η(s, σ))]` in R³.
pub fn shifted_figure_eight_r3(s: f64, eta_multiple: f64) -> impl Fn(f64) -> [f64; 3] + Sync {
    move |sigma: f64| {
        let e = variety::eta(s, sigma).unwrap_or(f64::NAN);
        crate::pillowcase::r3_of(sigma, -2.0 * s * (sigma + eta_multiple * e).cos())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionReport {
    pub variant: Variant,
    pub s: f64,
    pub input_kind: ComponentKind,
    pub computed: CurveInvariants,
    pub predicted: CurveInvariants,
    /// Agreement up to regular homotopy, see [`CurveInvariants::same_class`].
    pub invariants_match: bool,
    /// Agreement including raw double point counts.
    pub invariants_identical: bool,
    pub computed_double_points: usize,
    pub predicted_double_points: usize,
    pub branches: usize,
    pub fold_crossings: usize,
    /// Hausdorff distance in R³ from each computed component to the
    /// prediction's components, matched greedily.
    pub hausdorff: Vec<f64>,
}

/// Composes a one-component curve and compares with the figure eight (arcs)
/// or the double (circles) of the input.
pub fn compare_with_prediction(c: &ImmersedCurve, variant: Variant, s: f64) -> Result<PredictionReport> {
    let [component] = c.components.as_slice() else {
        return Err(Error::InvalidCurve("compare_with_prediction takes a single component".into()));
    };
    let (fp, out) = compose(c, variant, s)?;
    let predicted = match component.kind {
        ComponentKind::GoodArc => curves::figure_eight(c, s)?,
        ComponentKind::Circle => curves::double(c)?,
    }
    .with_side(Side::P1);
    let computed = curves::invariants(&out)?;
    let expected = curves::invariants(&predicted)?;
    let hausdorff = out
        .components
        .iter()
        .map(|k| {
            let a = k.r3();
            predicted.components.iter().map(|q| curves::hausdorff_r3(&a, &q.r3())).fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(PredictionReport {
        variant,
        s,
        input_kind: component.kind,
        invariants_match: computed.same_class(&expected),
        invariants_identical: computed == expected,
        computed_double_points: computed.total_double_points(),
        predicted_double_points: expected.total_double_points(),
        computed,
        predicted: expected,
        branches: fp.branches.len(),
        fold_crossings: fp.branches.iter().map(|b| b.fold_crossings.len()).sum(),
        hausdorff,
    })
}

/// Tangent of the composed bottom edge, in R³, at its points with first
/// coordinate zero, scaled to first coordinate −1.
pub fn tangent_anchor(variant: Variant, s: f64) -> Result<Vec<[f64; 3]>> {
    let beta = curves::beta(curves::DEFAULT_DENSITY);
    let fp = fiber_product(&beta, variant, s)?;
    let path = PeriodicPath::new(&beta.components[0])?;
    let tracer = Tracer { path: &path, variant, s };
    let chars = |x: &State| {
        let p = path.at(x[0]);
        pi1_chars(&embed(s, p[0], p[1], x[1], x[2]))
    };
    let mut out = Vec::new();
    for b in &fp.branches {
        let states: Vec<State> = b.samples.iter().map(|x| Vector3::new(x.t, x.nu, x.tau)).collect();
        for w in states.windows(2) {
            let (a, z) = (w[0], w[1]);
            if chars(&a)[0].signum() == chars(&z)[0].signum() {
                continue;
            }
            // bisection on the exact branch between two samples
            let dir = (z - a).normalize();
            let len = (z - a).norm();
            let point_at = |u: f64| tracer.correct(a + (z - a) * u, &a, &dir, u * len).map(|r| r.0);
            let (mut lo, mut hi) = (0.0, 1.0);
            let sign_lo = chars(&a)[0].signum();
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let Some(y) = point_at(mid) else { break };
                if chars(&y)[0].signum() == sign_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let y =
                point_at(0.5 * (lo + hi)).ok_or(Error::NotConverged { what: "tangent_anchor", residual: f64::NAN })?;
            let t = tracer.tangent(&y, Some(&dir));
            let h = 1e-5;
            let (p, m) = (chars(&(y + t * h)), chars(&(y - t * h)));
            let v = [(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h), (p[2] - m[2]) / (2.0 * h)];
            if v[0].abs() < 1e-12 {
                continue;
            }
            let k = -1.0 / v[0];
            out.push([v[0] * k, v[1] * k, v[2] * k]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{b_ver, beta, slope_one_arc};
    use crate::variety::k_circle;
    use crate::words::defining;

    #[test]
    fn bottom_edge_crosses_fold_images_twice() {
        for v in Variant::BOTH {
            let r = check_transversality(&beta(curves::DEFAULT_DENSITY), v, 0.05).unwrap();
            assert!(r.transverse);
            assert_eq!(r.crossings.len(), 2);
            let r = check_transversality(&b_ver(curves::DEFAULT_DENSITY), v, 0.05).unwrap();
            assert_eq!(r.crossings.len(), 0);
        }
    }

    /// Vertical circle grazing the image circle about `[0, 0]` from inside.
    fn grazing_circle(folds: &[FoldCircle], depth: f64) -> ImmersedCurve {
        let reach = |p: &Point| p[0].sin().asin();
        let lift = folds[0].image_lift();
        let far = lift.iter().max_by(|a, b| reach(a).total_cmp(&reach(b))).copied().unwrap();
        let gamma = reach(&far) - depth;
        ImmersedCurve::new(
            Side::P0,
            vec![Component::circle((0..=720).map(|k| [gamma, far[1] + TAU * k as f64 / 720.0]).collect())],
        )
    }

    #[test]
    fn tangent_circle_is_refused() {
        let s = 0.05;
        for v in Variant::BOTH {
            let folds = variety::fold_locus(v, s).unwrap();
            let r = check_transversality_with(&grazing_circle(&folds, 1e-6), &folds).unwrap();
            assert!(!r.transverse);
            assert!(matches!(compose(&grazing_circle(&folds, 1e-6), v, s), Err(Error::Numerical { .. })));
            let r = check_transversality_with(&grazing_circle(&folds, 1e-3), &folds).unwrap();
            assert!(r.transverse);
            assert_eq!(r.crossings.len(), 4);
        }
    }

    #[test]
    fn vertical_circle_gives_two_branches() {
        for v in Variant::BOTH {
            let fp = fiber_product(&b_ver(curves::DEFAULT_DENSITY), v, 0.05).unwrap();
            assert_eq!(fp.branches.len(), 2);
            let mut labels = Vec::new();
            for b in &fp.branches {
                assert!(b.fold_crossings.is_empty());
                assert!(b.max_residual < 1e-11);
                let l: Vec<SheetLabel> = b.sheets.iter().flatten().copied().collect();
                assert!(l.iter().all(|x| *x == l[0]));
                labels.push(l[0]);
                for x in &b.samples {
                    let g = defining(v, &embed(0.05, x.gamma, x.theta, x.nu, x.tau));
                    assert!(g[0].abs().max(g[1].abs()) < 1e-9);
                    assert!((x.gamma - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
                }
            }
            assert_ne!(labels[0], labels[1]);
        }
    }

    #[test]
    fn bottom_edge_loop_matches_closed_form_circle() {
        for v in Variant::BOTH {
            let s = 0.05;
            let fp = fiber_product(&beta(curves::DEFAULT_DENSITY), v, s).unwrap();
            assert_eq!(fp.branches.len(), 1);
            let b = &fp.branches[0];
            assert_eq!(b.fold_crossings.len(), 2);
            let chars = |r: &crate::words::Rep| [(r.b * r.a.conj()).real(), (r.b * r.h.conj()).real(), 0.0];
            let model = |sigma: f64| chars(&k_circle(v, s, sigma).unwrap());
            for x in b.samples.iter().step_by(7) {
                let p = chars(&embed(s, x.gamma, x.theta, x.nu, x.tau));
                assert!(distance_to_parametric(p, &model, 720) < 1e-6);
            }
        }
    }

    #[test]
    fn slope_one_loop_crosses_folds_twice() {
        let fp = fiber_product(&slope_one_arc(curves::DEFAULT_DENSITY), Variant::Earring, 0.05).unwrap();
        assert_eq!(fp.branches.len(), 1);
        assert_eq!(fp.branches[0].fold_crossings.len(), 2);
    }

    #[test]
    fn push_forward_factors_through_first_projection() {
        let s = 0.05;
        for v in Variant::BOTH {
            let fp = fiber_product(&b_ver(curves::DEFAULT_DENSITY), v, s).unwrap();
            for b in &fp.branches {
                for x in b.samples.iter().step_by(50) {
                    let rep = embed(s, x.gamma, x.theta, x.nu, x.tau);
                    assert!(crate::pillowcase::verify_factorization(v, s, &rep).unwrap() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn bypass_bottom_edge_is_the_figure_eight() {
        let s = 0.1;
        let fp = fiber_product(&beta(curves::DEFAULT_DENSITY), Variant::Bypass, s).unwrap();
        let pts = branch_r3(s, &fp.branches[0]);
        assert!(hausdorff_to_parametric(&pts, figure_eight_r3(s), 4000) < 1e-6);
    }
}
