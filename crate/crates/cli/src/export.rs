//! File writers: CSV sample clouds, JSON reports and SVG plots of the
//! fundamental domain `[0, π] × [0, 2π]`.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use pillowcase_core::curves::{ImmersedCurve, Point};
use pillowcase_core::pillowcase::{canonical, r3_of};
use pillowcase_core::scene::Scene;
use pillowcase_core::variety::{ClassifiedFiber, FoldCircle};
use serde::Serialize;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct FiberRow {
    gamma: f64,
    theta: f64,
    status: &'static str,
    region: &'static str,
    roots: usize,
    nu_1: Option<f64>,
    tau_1: Option<f64>,
    nu_2: Option<f64>,
    tau_2: Option<f64>,
}

/// One row per base point; `nu_k, tau_k` are the fiber roots.
pub fn write_fibers_csv(path: &Path, fibers: &[ClassifiedFiber]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for f in fibers {
        let root = |k: usize| f.fiber.solutions.get(k).copied();
        w.serialize(FiberRow {
            gamma: f.fiber.gamma,
            theta: f.fiber.theta,
            status: f.fiber.status.name(),
            region: match f.region {
                pillowcase_core::variety::Region::Outside => "outside",
                pillowcase_core::variety::Region::Inside => "inside",
                pillowcase_core::variety::Region::Band => "band",
            },
            roots: f.fiber.solutions.len(),
            nu_1: root(0).map(|r| r[0]),
            tau_1: root(0).map(|r| r[1]),
            nu_2: root(1).map(|r| r[0]),
            tau_2: root(1).map(|r| r[1]),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FoldRow {
    corner_gamma_sign: i8,
    corner_theta_sign: i8,
    index: usize,
    gamma: f64,
    theta: f64,
    nu: f64,
    tau: f64,
    sin_gamma: f64,
    sin_theta: f64,
}

pub fn write_folds_csv(path: &Path, folds: &[FoldCircle]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for f in folds {
        for (index, p) in f.samples.iter().enumerate() {
            w.serialize(FoldRow {
                corner_gamma_sign: f.corner.0,
                corner_theta_sign: f.corner.1,
                index,
                gamma: p.point.gamma,
                theta: p.point.theta,
                nu: p.point.nu,
                tau: p.point.tau,
                sin_gamma: p.image[0],
                sin_theta: p.image[1],
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    component: usize,
    index: usize,
    gamma: f64,
    theta: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// Lift coordinates together with the R³ point of each vertex.
pub fn write_curve_csv(path: &Path, curve: &ImmersedCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (component, c) in curve.components.iter().enumerate() {
        for (index, p) in c.lift.iter().enumerate() {
            let r = r3_of(p[0], p[1]);
            w.serialize(CurveRow { component, index, gamma: p[0], theta: p[1], x: r[0], y: r[1], z: r[2] })?;
        }
    }
    w.flush()?;
    Ok(())
}

const SCALE: f64 = 160.0;
const MARGIN: f64 = 24.0;
const COLORS: [&str; 6] = ["#1f4e9c", "#c0392b", "#27864a", "#8e44ad", "#d35400", "#2c3e50"];

fn to_px(p: Point) -> (f64, f64) {
    (MARGIN + p[0] / PI * SCALE, MARGIN + (TAU - p[1]) / PI * SCALE)
}

/// Polyline pieces inside the fundamental domain, split where the reduced
/// path jumps across an edge identification.
fn reduced_pieces(lift: &[Point]) -> Vec<Vec<Point>> {
    let mut pieces: Vec<Vec<Point>> = Vec::new();
    let mut current: Vec<Point> = Vec::new();
    for p in lift {
        let (g, t) = canonical(p[0], p[1]);
        let q = [g, t];
        if let Some(last) = current.last() {
            if (q[0] - last[0]).abs() > 0.5 || (q[1] - last[1]).abs() > 0.5 {
                pieces.push(std::mem::take(&mut current));
            }
        }
        current.push(q);
    }
    if current.len() > 1 {
        pieces.push(current);
    }
    pieces.retain(|p| p.len() > 1);
    pieces
}

fn path_data(points: &[Point]) -> String {
    let mut d = String::new();
    for (k, p) in points.iter().enumerate() {
        let (x, y) = to_px(*p);
        let _ = write!(d, "{}{x:.3},{y:.3}", if k == 0 { "M" } else { " L" });
    }
    d
}

/// SVG 1.1 drawing of a scene; identical inputs give identical bytes.
pub fn scene_svg(scene: &Scene, title: &str) -> String {
    let width = 2.0 * MARGIN + SCALE;
    let height = 2.0 * MARGIN + 2.0 * SCALE;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let (x0, y0) = to_px([0.0, TAU]);
    let _ = writeln!(
        out,
        r##"<rect x="{x0:.3}" y="{y0:.3}" width="{SCALE:.3}" height="{:.3}" fill="none" stroke="#888" stroke-width="1"/>"##,
        2.0 * SCALE
    );
    let (_, ym) = to_px([0.0, PI]);
    let _ = writeln!(
        out,
        r##"<line x1="{x0:.3}" y1="{ym:.3}" x2="{:.3}" y2="{ym:.3}" stroke="#ccc" stroke-width="0.5" stroke-dasharray="3,3"/>"##,
        x0 + SCALE
    );
    if let Some(folds) = &scene.fold_images {
        for c in &folds.components {
            // fold images are small loops; draw each reduced piece
            for piece in reduced_pieces(&c.lift) {
                let _ = writeln!(
                    out,
                    r##"<path d="{}" fill="none" stroke="#999" stroke-width="0.8"/>"##,
                    path_data(&piece)
                );
            }
        }
    }
    for (k, named) in scene.curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(out, r#"<g id="curve-{k}" stroke="{color}" fill="none" stroke-width="1.2">"#);
        let _ = writeln!(out, "<desc>{}</desc>", escape(&named.name));
        for c in &named.curve.components {
            for piece in reduced_pieces(&c.lift) {
                let _ = writeln!(out, r#"<path d="{}"/>"#, path_data(&piece));
            }
        }
        let _ = writeln!(out, "</g>");
    }
    for corner in [[0.0, 0.0], [PI, 0.0], [0.0, PI], [PI, PI], [0.0, TAU], [PI, TAU]] {
        let (x, y) = to_px(corner);
        let _ = writeln!(out, r##"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="#000"/>"##);
    }
    let _ = writeln!(out, "</svg>");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use pillowcase_core::curves::{beta, figure_eight};
    use pillowcase_core::pillowcase::Side;

    #[test]
    fn svg_is_deterministic() {
        let mut scene = Scene::new(Side::P0);
        scene.push("f8", figure_eight(&beta(180), 0.05).unwrap()).unwrap();
        let a = scene_svg(&scene, "t");
        let b = scene_svg(&scene, "t");
        assert_eq!(a, b);
        assert!(a.starts_with("<?xml"));
        assert!(a.contains("<desc>f8</desc>"));
        assert_eq!(a.matches("<circle").count(), 6);
    }

    #[test]
    fn pieces_split_at_identifications() {
        // a horizontal line crossing γ = π folds back into the domain
        let lift: Vec<Point> = (0..=40).map(|k| [2.0 + 0.05 * k as f64, 1.0]).collect();
        let pieces = reduced_pieces(&lift);
        assert_eq!(pieces.len(), 2);
        assert!(pieces.iter().flatten().all(|p| (0.0..=PI).contains(&p[0])));
    }
}
