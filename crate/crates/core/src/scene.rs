//! The (3,7) torus knot split along a sphere: a slope-one arc on one side,
//! a slope-two arc plus a doubled twisted vertical circle on the other, and
//! the two ways of pairing them through the correspondence.

use serde::Serialize;

use crate::compose::{compose, fold_image_curve, pull_back};
use crate::curves::{b_ver, double, intersect, slope_one_arc, slope_two_arc, twisted_double, Crossing, ImmersedCurve};
use crate::error::Result;
use crate::pillowcase::Side;
use crate::variety;
use crate::words::Variant;

#[derive(Debug, Clone, Serialize)]
pub struct NamedCurve {
    pub name: String,
    pub curve: ImmersedCurve,
}

#[derive(Debug, Clone, Serialize)]
pub struct Scene {
    pub side: Side,
    pub curves: Vec<NamedCurve>,
    /// Fold images and their lifts, drawn for orientation.
    pub fold_images: Option<ImmersedCurve>,
}

impl Scene {
    pub fn new(side: Side) -> Self {
        Scene { side, curves: Vec::new(), fold_images: None }
    }

    pub fn push(&mut self, name: &str, curve: ImmersedCurve) -> Result<()> {
        if curve.side != self.side {
            return Err(crate::Error::InvalidCurve(format!(
                "{name} lives on {:?}, scene is {:?}",
                curve.side, self.side
            )));
        }
        self.curves.push(NamedCurve { name: name.to_string(), curve });
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingPart {
    pub against: String,
    pub count: usize,
    pub points: Vec<Crossing>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Pairing {
    pub side: Side,
    pub count: usize,
    pub parts: Vec<PairingPart>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TorusKnotReport {
    pub variant: Variant,
    pub s: f64,
    /// Composed slope-one arc against the far side, in the second pillowcase.
    pub forward: Pairing,
    /// Slope-one arc against the pulled-back far side, in the first.
    pub backward: Pairing,
    pub forward_scene: Scene,
    pub backward_scene: Scene,
}

fn pairing(side: Side, curve: &ImmersedCurve, others: &[NamedCurve]) -> Result<Pairing> {
    let parts = others
        .iter()
        .map(|o| {
            let r = intersect(curve, &o.curve)?;
            Ok(PairingPart { against: o.name.clone(), count: r.count, points: r.points })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Pairing { side, count: parts.iter().map(|p| p.count).sum(), parts })
}

pub fn torus_knot_scene(variant: Variant, s: f64, density: usize) -> Result<TorusKnotReport> {
    let a1 = slope_one_arc(density);
    let a2 = slope_two_arc(density).with_side(Side::P1);
    let circles = double(&twisted_double(&b_ver(density))?)?.with_side(Side::P1);
    let folds = variety::fold_locus(variant, s)?;
    let fold_images = fold_image_curve(&folds);

    let (_, pushed) = compose(&a1, variant, s)?;
    let far = [
        NamedCurve { name: "A2".into(), curve: a2.clone() },
        NamedCurve { name: "D(D~(B_ver))".into(), curve: circles.clone() },
    ];
    let forward = pairing(Side::P1, &pushed, &far)?;
    let mut forward_scene = Scene::new(Side::P1);
    forward_scene.push("u(A1)", pushed)?;
    for c in &far {
        forward_scene.push(&c.name, c.curve.clone())?;
    }
    // fold images of the second projection are the Θ-images of the first
    forward_scene.fold_images = Some(fold_images.theta().with_side(Side::P1));

    let pulled = [
        NamedCurve { name: "u*(A2)".into(), curve: pull_back(&a2, variant, s)? },
        NamedCurve { name: "u*(D(D~(B_ver)))".into(), curve: pull_back(&circles, variant, s)? },
    ];
    let backward = pairing(Side::P0, &a1, &pulled)?;
    let mut backward_scene = Scene::new(Side::P0);
    backward_scene.push("A1", a1)?;
    for c in &pulled {
        backward_scene.push(&c.name, c.curve.clone())?;
    }
    backward_scene.fold_images = Some(fold_images);

    Ok(TorusKnotReport { variant, s, forward, backward, forward_scene, backward_scene })
}

/// Single-curve scene for plotting a composition result.
pub fn composition_scene(input: &ImmersedCurve, output: &ImmersedCurve, variant: Variant, s: f64) -> Result<Scene> {
    let mut scene = Scene::new(Side::P1);
    scene.push("input", input.with_side(Side::P1))?;
    scene.push("composed", output.clone())?;
    let folds = variety::fold_locus(variant, s)?;
    scene.fold_images = Some(fold_image_curve(&folds).theta().with_side(Side::P1));
    Ok(scene)
}
