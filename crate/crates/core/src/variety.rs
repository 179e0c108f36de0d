//! The varieties as zero sets over the torus of `(γ, θ)`: fibers of the
//! projection, its fold circles, the resulting topology, and the closed-form
//! circles over the bottom edge.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::newton;
use crate::pillowcase::CORNER_ANGLES;
use crate::quat::Quat;
use crate::words::{defining, reduced, ChartPoint, Rep, Variant};

/// Default perturbation parameter.
pub const DEFAULT_S: f64 = 0.05;
/// Range of |s| the numerics are tuned for.
pub const S_RANGE: (f64, f64) = (0.01, 0.1);
/// Largest continuation step in `s` when following fiber roots from `s = 0`.
pub const S_STEP: f64 = 0.01;
/// Smallest `s` step tried before a root is declared lost.
pub const S_STEP_FLOOR: f64 = 1e-4;
/// Roots closer than this in `(ν, τ)` are the same root.
pub const DEDUP_RADIUS: f64 = 1e-6;
/// Jacobian condition number above which a fiber counts as folded.
pub const FOLD_CONDITION: f64 = 1e8;
/// Required |G| at an accepted root.
pub const ROOT_TOLERANCE: f64 = 1e-10;
/// Samples per fold circle.
pub const FOLD_SAMPLES: usize = 360;
/// Residual accepted on the augmented fold system.
pub const FOLD_TOLERANCE: f64 = 1e-10;
/// Step for the fourth-order differences inside the fold determinant.
const FOLD_DIFF_STEP: f64 = 1e-3;
/// Step for the Newton Jacobian of the augmented fold system.
const FOLD_NEWTON_STEP: f64 = 1e-5;
/// Half width, in units of |s|, of the band around a fold image where any
/// fiber status is accepted.
pub const FOLD_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberStatus {
    TwoSheets,
    FoldRegion,
    Empty,
}

impl FiberStatus {
    pub fn name(self) -> &'static str {
        match self {
            FiberStatus::TwoSheets => "two_sheets",
            FiberStatus::FoldRegion => "fold_region",
            FiberStatus::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FiberSolutions {
    pub gamma: f64,
    pub theta: f64,
    pub variant: Variant,
    pub s: f64,
    /// Roots as `(ν, τ)` with `τ ∈ [0, 2π)`.
    pub solutions: Vec<[f64; 2]>,
    pub status: FiberStatus,
}

/// Which component of the variety minus its fold circles a point lies on.
///
/// The sign of `x = cos τ sin γ + sin τ sin θ` is invariant under the free
/// involution and separates the two sheets; `Plus` contains `[π/2, 0, 0, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SheetLabel {
    Plus,
    Minus,
}

pub fn sheet_coordinate(gamma: f64, theta: f64, tau: f64) -> f64 {
    tau.cos() * gamma.sin() + tau.sin() * theta.sin()
}

pub fn sheet_label(gamma: f64, theta: f64, tau: f64) -> SheetLabel {
    if sheet_coordinate(gamma, theta, tau) >= 0.0 {
        SheetLabel::Plus
    } else {
        SheetLabel::Minus
    }
}

fn reduced_vec(variant: Variant, s: f64, gamma: f64, theta: f64) -> impl Fn(&[f64]) -> Vec<f64> {
    move |x: &[f64]| reduced(variant, s, gamma, theta, x[0], x[1]).to_vec()
}

fn angle_gap(a: f64, b: f64) -> f64 {
    ((a - b + PI).rem_euclid(TAU) - PI).abs()
}

/// Follows one root from `s = 0` to the target `s`, halving the step on
/// failure. Returns `None` when the root is lost.
fn continue_root(variant: Variant, s: f64, gamma: f64, theta: f64, seed: [f64; 2]) -> Option<[f64; 2]> {
    let mut x = seed.to_vec();
    let mut current = 0.0f64;
    let mut step = S_STEP.min(s.abs()).max(f64::MIN_POSITIVE);
    let dir = s.signum();
    while (s - current).abs() > 1e-15 {
        let next = if (s - current).abs() <= step { s } else { current + dir * step };
        let out = newton::solve(reduced_vec(variant, next, gamma, theta), &x, newton::TOLERANCE);
        let moved = (out.x[0] - x[0]).abs().max(angle_gap(out.x[1], x[1]));
        if out.converged && moved < 10.0 * step.max(1e-3) {
            x = out.x;
            current = next;
            step = (step * 1.5).min(S_STEP);
        } else {
            step *= 0.5;
            if step < S_STEP_FLOOR * s.abs().max(1e-2) {
                return None;
            }
        }
    }
    Some([x[0], x[1]])
}

pub fn fiber_jacobian(variant: Variant, s: f64, gamma: f64, theta: f64, root: [f64; 2]) -> DMatrix<f64> {
    newton::jacobian(&reduced_vec(variant, s, gamma, theta), &root, newton::FD_STEP)
}

/// Roots `(ν, τ)` of the defining function over a fixed `(γ, θ)`.
pub fn solve_fiber(variant: Variant, s: f64, gamma: f64, theta: f64) -> Result<FiberSolutions> {
    let (sg, st) = (gamma.sin(), theta.sin());
    let mut out = FiberSolutions { gamma, theta, variant, s, solutions: Vec::new(), status: FiberStatus::Empty };
    if sg.hypot(st) < 1e-12 {
        // over a corner: a circle of solutions at s = 0, none nearby otherwise
        if s == 0.0 {
            out.status = FiberStatus::FoldRegion;
            return Ok(out);
        }
        return Ok(out);
    }
    let tau0 = st.atan2(sg);
    let mut roots: Vec<[f64; 2]> = Vec::new();
    let mut ill_conditioned = false;
    for seed_tau in [tau0, tau0 + PI] {
        let Some(root) = continue_root(variant, s, gamma, theta, [0.0, seed_tau]) else { continue };
        let g = defining(variant, &crate::words::embed(s, gamma, theta, root[0], root[1]));
        if g[0].abs().max(g[1].abs()) >= ROOT_TOLERANCE {
            continue;
        }
        if newton::condition_number(&fiber_jacobian(variant, s, gamma, theta, root)) > FOLD_CONDITION {
            ill_conditioned = true;
        }
        let root = [root[0], root[1].rem_euclid(TAU)];
        if roots.iter().all(|r| (r[0] - root[0]).abs().max(angle_gap(r[1], root[1])) > DEDUP_RADIUS) {
            roots.push(root);
        } else {
            ill_conditioned = true;
        }
    }
    out.status = match (roots.len(), ill_conditioned) {
        (0, _) => FiberStatus::Empty,
        (2, false) => FiberStatus::TwoSheets,
        _ => FiberStatus::FoldRegion,
    };
    out.solutions = roots;
    Ok(out)
}

/// Point of a fold circle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FoldSample {
    pub point: ChartPoint,
    /// Corner chart coordinates `(x, y)` with `(sin γ, sin θ) = R_τ (x, y)`.
    pub chart: [f64; 2],
    /// `(sin γ, sin θ)`.
    pub image: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldCircle {
    /// Signs of `cos γ` and `cos θ` at the corner.
    pub corner: (i8, i8),
    pub variant: Variant,
    pub s: f64,
    pub samples: Vec<FoldSample>,
}

impl FoldCircle {
    pub fn corner_angles(&self) -> [f64; 2] {
        corner_for_signs(self.corner)
    }

    /// Index into the corner tables of the pillowcase module.
    pub fn corner_index(&self) -> usize {
        match self.corner {
            (1, 1) => 0,
            (-1, 1) => 1,
            (1, -1) => 2,
            _ => 3,
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.image[0].hypot(p.image[1])).collect()
    }

    /// Winding number of the image about the corner.
    pub fn image_winding(&self) -> i32 {
        let mut total = 0.0;
        let n = self.samples.len();
        for k in 0..n {
            let a = self.samples[k].image;
            let b = self.samples[(k + 1) % n].image;
            total += (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
        }
        (total / TAU).round() as i32
    }

    /// Image as a closed polygon of `(γ, θ)` lifts around the corner.
    pub fn image_lift(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(|p| [p.point.gamma, p.point.theta]).collect()
    }
}

fn corner_for_signs(corner: (i8, i8)) -> [f64; 2] {
    [if corner.0 > 0 { 0.0 } else { PI }, if corner.1 > 0 { 0.0 } else { PI }]
}

fn angle_from_sine(sine: f64, sign: i8) -> f64 {
    let a = sine.clamp(-1.0, 1.0).asin();
    if sign > 0 {
        a
    } else {
        PI - a
    }
}

/// `(γ, θ)` of the corner chart point `(x, y)` at `τ`.
fn chart_angles(corner: (i8, i8), x: f64, y: f64, tau: f64) -> (f64, f64) {
    let u = tau.cos() * x - tau.sin() * y;
    let v = tau.sin() * x + tau.cos() * y;
    (angle_from_sine(u, corner.0), angle_from_sine(v, corner.1))
}

fn diff4<F: Fn(f64) -> [f64; 2]>(f: F, h: f64) -> [f64; 2] {
    let (a, b, c, d) = (f(2.0 * h), f(h), f(-h), f(-2.0 * h));
    [(-a[0] + 8.0 * b[0] - 8.0 * c[0] + d[0]) / (12.0 * h), (-a[1] + 8.0 * b[1] - 8.0 * c[1] + d[1]) / (12.0 * h)]
}

/// Determinant of the reduced defining function's derivative in `(ν, τ)`;
/// it vanishes exactly where the projection to `(γ, θ)` folds.
pub fn fold_determinant(variant: Variant, s: f64, gamma: f64, theta: f64, nu: f64, tau: f64) -> f64 {
    let dn = diff4(|h| reduced(variant, s, gamma, theta, nu + h, tau), FOLD_DIFF_STEP);
    let dt = diff4(|h| reduced(variant, s, gamma, theta, nu, tau + h), FOLD_DIFF_STEP);
    dn[0] * dt[1] - dn[1] * dt[0]
}

fn fold_system(variant: Variant, s: f64, corner: (i8, i8), tau: f64) -> impl Fn(&[f64]) -> Vec<f64> {
    move |z: &[f64]| {
        let (gamma, theta) = chart_angles(corner, z[0], z[1], tau);
        let g = reduced(variant, s, gamma, theta, z[2], tau);
        vec![g[0], g[1], fold_determinant(variant, s, gamma, theta, z[2], tau)]
    }
}

fn solve_fold(variant: Variant, s: f64, corner: (i8, i8), tau: f64, guess: &[f64]) -> Result<Vec<f64>> {
    let sys = fold_system(variant, s, corner, tau);
    let mut x = guess.to_vec();
    let mut res = f64::INFINITY;
    for _ in 0..newton::MAX_ITERATIONS {
        let fx = sys(&x);
        res = fx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res < FOLD_TOLERANCE {
            return Ok(x);
        }
        let jac = newton::jacobian(&sys, &x, FOLD_NEWTON_STEP);
        let Some(dx) = jac.lu().solve(&nalgebra::DVector::from_vec(fx.iter().map(|v| -v).collect())) else {
            break;
        };
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + lambda * d).collect();
            let rt = sys(&trial).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if rt < res || lambda < 1e-3 {
                x = trial;
                break;
            }
            lambda *= 0.5;
        }
    }
    Err(Error::NotConverged { what: "fold circle", residual: res })
}

/// The fold circle over one corner, by continuation in `τ`.
pub fn fold_circle(variant: Variant, s: f64, corner: (i8, i8)) -> Result<FoldCircle> {
    if s == 0.0 {
        return Err(Error::OutOfDomain { what: "fold_locus", detail: "s = 0 has circle fibers, not folds".into() });
    }
    let eps = f64::from(corner.0 * corner.1);
    let nu0 = match variant {
        Variant::Earring => s * f64::from(corner.0),
        Variant::Bypass => 0.0,
    };
    let mut guess = vec![0.0, -2.0 * s * eps, nu0];
    let mut samples = Vec::with_capacity(FOLD_SAMPLES);
    let mut prev: Option<Vec<f64>> = None;
    for k in 0..=FOLD_SAMPLES {
        let tau = TAU * k as f64 / FOLD_SAMPLES as f64;
        if let Some(p) = &prev {
            // linear extrapolation from the last two solutions
            if samples.len() >= 2 {
                let a: &FoldSample = &samples[samples.len() - 2];
                let b: &FoldSample = &samples[samples.len() - 1];
                guess =
                    vec![2.0 * b.chart[0] - a.chart[0], 2.0 * b.chart[1] - a.chart[1], 2.0 * b.point.nu - a.point.nu];
            } else {
                guess = p.clone();
            }
        }
        let z = solve_fold(variant, s, corner, tau, &guess)?;
        if k == FOLD_SAMPLES {
            let first = &samples[0];
            let spacing = samples
                .windows(2)
                .map(|w: &[FoldSample]| (w[1].chart[0] - w[0].chart[0]).hypot(w[1].chart[1] - w[0].chart[1]))
                .fold(0.0f64, f64::max);
            let gap = (z[0] - first.chart[0]).hypot(z[1] - first.chart[1]).max((z[2] - first.point.nu).abs());
            if gap > 10.0 * spacing {
                return Err(Error::Numerical {
                    what: "fold_locus",
                    detail: format!("loop failed to close, gap {gap:.3e}"),
                });
            }
            break;
        }
        let (gamma, theta) = chart_angles(corner, z[0], z[1], tau);
        let image = [gamma.sin(), theta.sin()];
        if image[0].hypot(image[1]) < 0.1 * s.abs() {
            return Err(Error::Numerical {
                what: "fold_locus",
                detail: "fold circle collapsed onto its corner".into(),
            });
        }
        samples.push(FoldSample { point: ChartPoint { s, gamma, theta, nu: z[2], tau }, chart: [z[0], z[1]], image });
        prev = Some(z);
    }
    Ok(FoldCircle { corner, variant, s, samples })
}

pub const CORNER_SIGNS: [(i8, i8); 4] = [(1, 1), (-1, 1), (1, -1), (-1, -1)];

/// The four fold circles, one per corner, in the corner order of the
/// pillowcase module.
pub fn fold_locus(variant: Variant, s: f64) -> Result<Vec<FoldCircle>> {
    CORNER_SIGNS.par_iter().map(|&c| fold_circle(variant, s, c)).collect()
}

/// Differentials of both projections at a point of the variety, restricted
/// to its tangent plane.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FoldDifferentials {
    /// Smallest over largest singular value of the first projection.
    pub rank_ratio_first: f64,
    pub rank_ratio_second: f64,
    /// Angle between the two kernels inside the tangent plane.
    pub kernel_angle: f64,
}

fn smallest_right_singular(m: DMatrix<f64>) -> Result<(f64, [f64; 2])> {
    let svd = m.svd(false, true);
    let vt = svd.v_t.ok_or(Error::Numerical { what: "svd", detail: "no right singular vectors".into() })?;
    let sv = &svd.singular_values;
    let (big, small) = if sv[0] >= sv[1] { (0, 1) } else { (1, 0) };
    Ok((sv[small] / sv[big].max(f64::MIN_POSITIVE), [vt[(small, 0)], vt[(small, 1)]]))
}

pub fn fold_differentials(variant: Variant, pt: &ChartPoint) -> Result<FoldDifferentials> {
    let s = pt.s;
    let g = |x: &[f64]| defining(variant, &crate::words::embed(s, x[0], x[1], x[2], x[3])).to_vec();
    let x0 = [pt.gamma, pt.theta, pt.nu, pt.tau];
    let mut jac = newton::jacobian(&g, &x0, newton::FD_STEP);
    // zero rows make the decomposition square so that the null space shows up
    jac = jac.insert_rows(2, 2, 0.0);
    let svd = jac.svd(false, true);
    let vt = svd.v_t.ok_or(Error::Numerical { what: "svd", detail: "no right singular vectors".into() })?;
    // the two right singular vectors with the smallest singular values span
    // the tangent plane
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let basis: Vec<[f64; 4]> = order[..2].iter().map(|&r| [vt[(r, 0)], vt[(r, 1)], vt[(r, 2)], vt[(r, 3)]]).collect();
    let h = 1e-6;
    let mut d0 = DMatrix::zeros(2, 2);
    let mut d1 = DMatrix::zeros(3, 2);
    for (col, v) in basis.iter().enumerate() {
        d0[(0, col)] = v[0];
        d0[(1, col)] = v[1];
        let at = |t: f64| {
            let rep = crate::words::embed(s, x0[0] + t * v[0], x0[1] + t * v[1], x0[2] + t * v[2], x0[3] + t * v[3]);
            crate::pillowcase::pi1_chars(&rep)
        };
        let (fp, fm) = (at(h), at(-h));
        for row in 0..3 {
            d1[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    let (rank_ratio_first, k0) = smallest_right_singular(d0)?;
    let (rank_ratio_second, k1) = smallest_right_singular(d1)?;
    let cos = (k0[0] * k1[0] + k0[1] * k1[1]).abs().min(1.0);
    Ok(FoldDifferentials { rank_ratio_first, rank_ratio_second, kernel_angle: cos.acos() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Outside,
    Inside,
    Band,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifiedFiber {
    pub fiber: FiberSolutions,
    pub region: Region,
    pub consistent: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StatusCounts {
    pub two_sheets: usize,
    pub fold_region: usize,
    pub empty: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopologyReport {
    pub variant: Variant,
    pub s: f64,
    pub grid: usize,
    pub points: usize,
    pub degenerate: bool,
    pub fold_circles: usize,
    pub fold_windings: Vec<i32>,
    pub fold_radius_min: Vec<f64>,
    pub fold_radius_max: Vec<f64>,
    pub counts: StatusCounts,
    pub inconsistent: usize,
    /// Root count over points well outside every fold image.
    pub sheets_outside: usize,
    pub euler_characteristic: i64,
    pub genus: i64,
    pub quotient_euler_characteristic: i64,
    pub quotient_genus: i64,
    pub notes: Vec<String>,
}

fn winding_about(poly: &[[f64; 2]], p: [f64; 2]) -> i32 {
    let mut total = 0.0;
    for k in 0..poly.len() {
        let a = [poly[k][0] - p[0], poly[k][1] - p[1]];
        let b = [poly[(k + 1) % poly.len()][0] - p[0], poly[(k + 1) % poly.len()][1] - p[1]];
        total += (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
    }
    (total / TAU).round() as i32
}

fn distance_to_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
        best = best.min((a[0] + t * d[0] - p[0]).hypot(a[1] + t * d[1] - p[1]));
    }
    best
}

/// Offset from `p` to the nearest lift of the corner `c`.
fn offset_to_corner(p: [f64; 2], c: [f64; 2]) -> [f64; 2] {
    let r = |x: f64| (x + PI).rem_euclid(TAU) - PI;
    [r(p[0] - c[0]), r(p[1] - c[1])]
}

/// Position of `(γ, θ)` relative to the fold images.
pub fn fold_region(folds: &[FoldCircle], gamma: f64, theta: f64) -> Region {
    let Some(first) = folds.first() else { return Region::Outside };
    let band = FOLD_BAND * first.s.abs();
    for fold in folds {
        let c = fold.corner_angles();
        let poly: Vec<[f64; 2]> = fold.image_lift().iter().map(|q| offset_to_corner(*q, c)).collect();
        let p = offset_to_corner([gamma, theta], c);
        if p[0].hypot(p[1]) > 4.0 * first.s.abs() + 0.5 {
            continue;
        }
        if distance_to_polygon(&poly, p) <= band {
            return Region::Band;
        }
        if winding_about(&poly, p) != 0 {
            return Region::Inside;
        }
    }
    Region::Outside
}

/// Base points: a `grid × grid` lattice on the torus plus a 4× finer patch
/// around each corner.
pub fn topology_grid(s: f64, grid: usize) -> Vec<[f64; 2]> {
    let h = TAU / grid as f64;
    let mut pts: Vec<[f64; 2]> = (0..grid * grid).map(|k| [(k % grid) as f64 * h, (k / grid) as f64 * h]).collect();
    let fine = h / 4.0;
    let half = ((4.0 * s.abs().max(0.01)) / fine).ceil() as i64;
    for c in CORNER_ANGLES {
        for i in -half..=half {
            for j in -half..=half {
                if i % 4 == 0 && j % 4 == 0 {
                    continue;
                }
                let p = [(c[0] + i as f64 * fine).rem_euclid(TAU), (c[1] + j as f64 * fine).rem_euclid(TAU)];
                pts.push(p);
            }
        }
    }
    pts
}

pub fn classify_grid(variant: Variant, s: f64, grid: usize, folds: &[FoldCircle]) -> Result<Vec<ClassifiedFiber>> {
    topology_grid(s, grid)
        .par_iter()
        .map(|p| {
            let fiber = solve_fiber(variant, s, p[0], p[1])?;
            let region = if s == 0.0 {
                if p[0].sin().hypot(p[1].sin()) < 1e-12 {
                    Region::Inside
                } else {
                    Region::Outside
                }
            } else {
                fold_region(folds, p[0], p[1])
            };
            let consistent = match (region, fiber.status, s == 0.0) {
                (Region::Band, _, _) => true,
                (Region::Outside, st, _) => st == FiberStatus::TwoSheets,
                (Region::Inside, st, true) => st == FiberStatus::FoldRegion,
                (Region::Inside, st, false) => st == FiberStatus::Empty,
            };
            Ok(ClassifiedFiber { fiber, region, consistent })
        })
        .collect()
}

fn genus_of(chi: i64) -> i64 {
    (2 - chi) / 2
}

pub fn verify_topology(
    variant: Variant,
    s: f64,
    grid: usize,
) -> Result<(TopologyReport, Vec<ClassifiedFiber>, Vec<FoldCircle>)> {
    let degenerate = s == 0.0;
    let folds = if degenerate { Vec::new() } else { fold_locus(variant, s)? };
    let fibers = classify_grid(variant, s, grid, &folds)?;
    let mut counts = StatusCounts::default();
    for f in &fibers {
        match f.fiber.status {
            FiberStatus::TwoSheets => counts.two_sheets += 1,
            FiberStatus::FoldRegion => counts.fold_region += 1,
            FiberStatus::Empty => counts.empty += 1,
        }
    }
    let inconsistent = fibers.iter().filter(|f| !f.consistent).count();
    let outside_counts: Vec<usize> =
        fibers.iter().filter(|f| f.region == Region::Outside).map(|f| f.fiber.solutions.len()).collect();
    let sheets_outside = outside_counts.first().copied().unwrap_or(0);
    let uniform = outside_counts.iter().all(|&n| n == sheets_outside);
    let mut notes = Vec::new();
    // circles where the sheets meet: fold circles, or at s = 0 the circle
    // fibers over the four fixed points
    let circles = if degenerate { 4 } else { folds.len() };
    if degenerate {
        notes.push("s = 0: the fibers over the four fixed points are circles; the projection is not a fold map".into());
    }
    let windings: Vec<i32> = folds.iter().map(|f| f.image_winding()).collect();
    if !uniform || inconsistent > 0 || windings.iter().any(|w| w.abs() != 1) {
        return Err(Error::Numerical {
            what: "verify_topology",
            detail: format!("fiber classification disagrees with the two-sheet fold model at {inconsistent} points"),
        });
    }
    // sheets copies of the torus minus one disk per circle, glued along the
    // circles, which contribute nothing
    let chi = sheets_outside as i64 * (-(circles as i64));
    let report = TopologyReport {
        variant,
        s,
        grid,
        points: fibers.len(),
        degenerate,
        fold_circles: folds.len(),
        fold_windings: windings,
        fold_radius_min: folds.iter().map(|f| f.radii().into_iter().fold(f64::INFINITY, f64::min)).collect(),
        fold_radius_max: folds.iter().map(|f| f.radii().into_iter().fold(0.0, f64::max)).collect(),
        counts,
        inconsistent,
        sheets_outside,
        euler_characteristic: chi,
        genus: genus_of(chi),
        quotient_euler_characteristic: chi / 2,
        quotient_genus: genus_of(chi / 2),
        notes,
    };
    Ok((report, fibers, folds))
}

/// Solution of `2η = −s cos(σ + 2η)` by fixed-point iteration.
pub fn eta(s: f64, sigma: f64) -> Result<f64> {
    if s.abs() >= 0.5 {
        return Err(Error::OutOfDomain { what: "eta", detail: format!("|s| = {} is not below 1/2", s.abs()) });
    }
    let mut e = 0.0f64;
    for _ in 0..500 {
        let next = -0.5 * s * (sigma + 2.0 * e).cos();
        if (next - e).abs() < 1e-17 {
            return Ok(next);
        }
        e = next;
    }
    let residual = (2.0 * e + s * (sigma + 2.0 * e).cos()).abs();
    if residual < 1e-14 {
        Ok(e)
    } else {
        Err(Error::NotConverged { what: "eta", residual })
    }
}

/// The closed-form circle of representations over the bottom edge, not gauge
/// fixed: `a = f = i`.
pub fn k_circle(variant: Variant, s: f64, sigma: f64) -> Result<Rep> {
    let axis = Quat::new(0.0, 0.0, -sigma.sin(), sigma.cos()); // e^{σi} k
    let base_h = Quat::new(0.0, 0.0, sigma.cos(), sigma.sin()); // e^{σi} j
    let (h, twist) = match variant {
        Variant::Bypass => (base_h, s * sigma.cos()),
        Variant::Earring => {
            let e = eta(s, sigma)?;
            let r = Quat::exp_axis(axis, e);
            (r * base_h * r.conj(), -2.0 * e)
        }
    };
    let esh = Quat::exp(h.scale(s));
    let b = esh * Quat::exp_axis(axis, -sigma) * Quat::I * esh.conj();
    let p = esh * Quat::exp_axis(axis, twist) * esh.conj();
    Ok(Rep { a: Quat::I, b, f: Quat::I, h, p, q: esh })
}
