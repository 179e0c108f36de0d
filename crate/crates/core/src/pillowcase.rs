//! The pillowcase `T/ι`, its embedding in R³ by characters, the two
//! restriction maps from the variety, and the symmetries relating them.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::{cross3, dot3, norm3, Quat};
use crate::words::{self, embed, named, ChartPoint, Rep, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    P0,
    P1,
}

/// R³ images of the corners `[0,0]`, `[π,0]`, `[0,π]`, `[π,π]`.
pub const CORNERS_R3: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [-1.0, 1.0, -1.0], [1.0, -1.0, -1.0], [-1.0, -1.0, 1.0]];

/// Corner lifts in the same order as [`CORNERS_R3`].
pub const CORNER_ANGLES: [[f64; 2]; 4] = [[0.0, 0.0], [PI, 0.0], [0.0, PI], [PI, PI]];

pub const CORNER_NAMES: [&str; 4] = ["bl", "br", "tl", "tr"];

const SURFACE_TOLERANCE: f64 = 1e-6;
const CORNER_TOLERANCE: f64 = 1e-8;
const ANGLE_EPS: f64 = 1e-12;

pub fn r3_of(gamma: f64, theta: f64) -> [f64; 3] {
    [gamma.cos(), theta.cos(), (gamma - theta).cos()]
}

/// `x² + y² + z² − 2xyz − 1`, zero on the pillowcase.
pub fn surface_residual(r: [f64; 3]) -> f64 {
    r[0] * r[0] + r[1] * r[1] + r[2] * r[2] - 2.0 * r[0] * r[1] * r[2] - 1.0
}

/// Orbit representative with `γ ∈ [0, π]`; on the edges `γ ∈ {0, π}` also
/// `θ ∈ [0, π]`.
pub fn canonical(gamma: f64, theta: f64) -> (f64, f64) {
    let mut g = gamma.rem_euclid(TAU);
    let mut t = theta.rem_euclid(TAU);
    if g > PI {
        g = TAU - g;
        t = (TAU - t).rem_euclid(TAU);
    }
    if (g.abs() < ANGLE_EPS || (g - PI).abs() < ANGLE_EPS) && t > PI {
        t = TAU - t;
    }
    if t >= TAU {
        t = 0.0;
    }
    (g, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PillowPoint {
    pub side: Side,
    pub gamma: f64,
    pub theta: f64,
    pub r3: [f64; 3],
}

impl PillowPoint {
    pub fn new(side: Side, gamma: f64, theta: f64) -> Self {
        let (g, t) = canonical(gamma, theta);
        PillowPoint { side, gamma: g, theta: t, r3: r3_of(g, t) }
    }

    pub fn is_corner(&self) -> bool {
        CORNERS_R3.iter().any(|c| (0..3).all(|k| (c[k] - self.r3[k]).abs() < CORNER_TOLERANCE))
    }

    pub fn distance_r3(&self, other: &PillowPoint) -> f64 {
        norm3([self.r3[0] - other.r3[0], self.r3[1] - other.r3[1], self.r3[2] - other.r3[2]])
    }
}

/// Distance in the lift from `(γ, θ)` to the nearest corner lattice point.
pub fn corner_distance(gamma: f64, theta: f64) -> f64 {
    let dg = gamma - (gamma / PI).round() * PI;
    let dt = theta - (theta / PI).round() * PI;
    dg.hypot(dt)
}

/// `(Re(b ā), Re(f ā), Re(b f̄))`.
pub fn pi0_chars(rep: &Rep) -> [f64; 3] {
    [(rep.b * rep.a.conj()).real(), (rep.f * rep.a.conj()).real(), (rep.b * rep.f.conj()).real()]
}

/// `(Re(c d̄), Re(f d̄), Re(c f̄))`.
pub fn pi1_chars(rep: &Rep) -> [f64; 3] {
    let c = rep.eval(&named::c());
    let d = rep.eval(&named::d());
    [(c * d.conj()).real(), (rep.f * d.conj()).real(), (c * rep.f.conj()).real()]
}

pub fn pi0(pt: &ChartPoint) -> PillowPoint {
    PillowPoint::new(Side::P0, pt.gamma, pt.theta)
}

/// Angles `(γ, θ)` of a coplanar triple of traceless unit quaternions,
/// measured from the first around a plane normal.
///
/// The normal is aligned with `reference` when given, which keeps lifts
/// along a path continuous.
pub fn triple_angles(a: Quat, b: Quat, f: Quat, reference: Option<[f64; 3]>) -> Result<(f64, f64, [f64; 3])> {
    let (va, vb, vf) = (a.vector(), b.vector(), f.vector());
    let nb = cross3(va, vb);
    let nf = cross3(va, vf);
    let mut n = if norm3(nb) >= norm3(nf) { nb } else { nf };
    let len = norm3(n);
    if len < 1e-9 {
        return Err(Error::Numerical { what: "triple_angles", detail: "collinear triple (corner)".into() });
    }
    n = [n[0] / len, n[1] / len, n[2] / len];
    if let Some(r) = reference {
        if dot3(n, r) < 0.0 {
            n = [-n[0], -n[1], -n[2]];
        }
    }
    let gamma = dot3(cross3(va, vb), n).atan2(dot3(va, vb));
    let theta = dot3(cross3(va, vf), n).atan2(dot3(va, vf));
    Ok((gamma, theta, n))
}

/// Point of the second pillowcase, read through `d ↦ a, c ↦ b, f ↦ f`.
pub fn pi1(rep: &Rep) -> Result<PillowPoint> {
    let chars = pi1_chars(rep);
    let res = surface_residual(chars).abs();
    if res > SURFACE_TOLERANCE {
        return Err(Error::OffVariety(res));
    }
    let c = rep.eval(&named::c());
    let d = rep.eval(&named::d());
    let (g, t, _) = triple_angles(d, c, rep.f, None)?;
    let mut p = PillowPoint::new(Side::P1, g, t);
    p.r3 = chars;
    Ok(p)
}

/// `Θ[γ, θ] = [γ, −θ]`, in R³ `(x, y, 2xy − z)`.
pub fn theta_map(p: &PillowPoint) -> PillowPoint {
    PillowPoint::new(p.side, p.gamma, -p.theta)
}

pub fn theta_r3(r: [f64; 3]) -> [f64; 3] {
    [r[0], r[1], 2.0 * r[0] * r[1] - r[2]]
}

/// Identification of the two pillowcases; the coordinates are unchanged.
pub fn psi_map(p: &PillowPoint) -> PillowPoint {
    PillowPoint { side: Side::P1, ..*p }
}

pub fn psi_inverse(p: &PillowPoint) -> PillowPoint {
    PillowPoint { side: Side::P0, ..*p }
}

pub fn w1_hat(p: &PillowPoint) -> PillowPoint {
    PillowPoint::new(p.side, p.gamma + PI, p.theta + PI)
}

pub fn w2_hat(p: &PillowPoint) -> PillowPoint {
    PillowPoint::new(p.side, p.gamma + PI, p.theta)
}

/// Lift-level versions acting on `(γ, θ)` in the plane.
pub mod lift {
    use std::f64::consts::PI;

    pub fn theta(p: [f64; 2]) -> [f64; 2] {
        [p[0], -p[1]]
    }
    pub fn w1(p: [f64; 2]) -> [f64; 2] {
        [p[0] + PI, p[1] + PI]
    }
    pub fn w2(p: [f64; 2]) -> [f64; 2] {
        [p[0] + PI, p[1]]
    }
    /// Corner index permutation induced by `w1`.
    pub const W1_CORNERS: [usize; 4] = [3, 2, 1, 0];
    /// Corner index permutation induced by `w2`.
    pub const W2_CORNERS: [usize; 4] = [1, 0, 3, 2];
}

/// Upstairs involution covering `Ŵ₁`.
pub fn w1_upstairs(pt: &ChartPoint) -> ChartPoint {
    ChartPoint { gamma: pt.gamma + PI, theta: pt.theta + PI, nu: -pt.nu, tau: pt.tau + PI, ..*pt }
}

/// Upstairs involution covering `Ŵ₂`.
pub fn w2_upstairs(pt: &ChartPoint) -> ChartPoint {
    ChartPoint { gamma: pt.gamma + PI, nu: -pt.nu, tau: PI - pt.tau, ..*pt }
}

/// Images of `a, b, f, h` under the involution of the tangle group.
fn u_images(variant: Variant, rep: &Rep) -> (Quat, Quat, Quat, Quat) {
    let c = rep.eval(&named::c());
    let d = rep.eval(&named::d());
    let a = d.conj();
    let b = d.conj() * c.conj() * d;
    let f = rep.f.conj();
    let h = match variant {
        Variant::Earring => rep.h.conj() * rep.eval(&named::w()).conj(),
        Variant::Bypass => rep.eval(&"AhQPHpqHa".parse().expect("fixed word")),
    };
    (a, b, f, h)
}

/// Slice coordinates of `(a, b, f, h)` after conjugating `a` to `i` and `b`,
/// `f` into the `i j` plane, with `sin γ ≥ 0` (ties broken by `sin θ ≥ 0`).
pub fn regauge(s: f64, a: Quat, b: Quat, f: Quat, h: Quat) -> Result<ChartPoint> {
    let (_, _, n) = triple_angles(a, b, f, None)?;
    let va = a.vector();
    let la = norm3(va);
    let e1 = [va[0] / la, va[1] / la, va[2] / la];
    let e2 = cross3(n, e1);
    let frame = |v: [f64; 3]| [dot3(e1, v), dot3(e2, v), dot3(n, v)];
    let vb = frame(b.vector());
    let vf = frame(f.vector());
    let vh = frame(h.vector());
    if vf[2].abs() > 1e-6 || vb[2].abs() > 1e-6 {
        return Err(Error::Numerical { what: "regauge", detail: "meridian images are not coplanar".into() });
    }
    let mut gamma = vb[1].atan2(vb[0]);
    let mut theta = vf[1].atan2(vf[0]);
    let nu = vh[0];
    let mut tau = vh[2].atan2(vh[1]);
    let flip = gamma.sin() < -ANGLE_EPS || (gamma.sin().abs() <= ANGLE_EPS && theta.sin() < 0.0);
    if flip {
        gamma = -gamma;
        theta = -theta;
        tau += PI;
    }
    ChartPoint::new(s, gamma, theta, nu, tau)
}

/// The involution of the variety induced by the tangle symmetry, returned as
/// slice coordinates together with the re-embedded representation.
pub fn u_involution(variant: Variant, s: f64, rep: &Rep) -> Result<(ChartPoint, Rep)> {
    let (a, b, f, h) = u_images(variant, rep);
    let pt = regauge(s, a, b, f, h)?;
    Ok((pt, words::embed_l(&pt)?))
}

/// R³ distance between `π₁(ρ)` and `Ψ Θ π₀ U(ρ)`.
pub fn verify_factorization(variant: Variant, s: f64, rep: &Rep) -> Result<f64> {
    let (_, image) = u_involution(variant, s, rep)?;
    let lhs = pi1_chars(rep);
    let rhs = theta_r3(pi0_chars(&image));
    Ok(norm3([lhs[0] - rhs[0], lhs[1] - rhs[1], lhs[2] - rhs[2]]))
}

/// All six characters, used to compare conjugacy classes.
pub fn six_characters(rep: &Rep) -> [f64; 6] {
    let a = pi0_chars(rep);
    let b = pi1_chars(rep);
    [a[0], a[1], a[2], b[0], b[1], b[2]]
}

pub fn embed_point(pt: &ChartPoint) -> Rep {
    embed(pt.s, pt.gamma, pt.theta, pt.nu, pt.tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::{defining, rho_eps};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        (0..3).all(|k| (a[k] - b[k]).abs() < tol)
    }

    /// A point of the unperturbed variety over `(γ, θ)` on the chosen sheet.
    fn unperturbed(gamma: f64, theta: f64, sheet: f64) -> ChartPoint {
        let tau = (sheet * theta.sin()).atan2(sheet * gamma.sin());
        ChartPoint::new(0.0, gamma, theta, 0.0, tau).unwrap()
    }

    #[test]
    fn corners_and_plug_ins() {
        let p = pi0(&ChartPoint::new(0.1, 0.0, 0.0, 0.2, 1.0).unwrap());
        assert!(p.is_corner());
        assert!(close3(p.r3, [1.0, 1.0, 1.0], 1e-15));
        let p = pi0(&ChartPoint::new(0.1, FRAC_PI_2, 0.0, 0.0, 0.0).unwrap());
        assert!(close3(p.r3, [0.0, 1.0, 0.0], 1e-15));
        assert!(!p.is_corner());
    }

    #[test]
    fn explicit_point_has_expected_second_image() {
        let r = rho_eps(0.05, 1, 1);
        assert!(r.eval(&named::c()).max_abs_diff(Quat::J) < 1e-15);
        assert!(r.eval(&named::d()).max_abs_diff(Quat::I) < 1e-15);
        assert!(close3(pi1(&r).unwrap().r3, [0.0, 1.0, 0.0], 1e-15));
    }

    #[test]
    fn off_variety_second_image_is_rejected() {
        // G₂ ≈ 0.3
        let r = embed(0.1, 1.0, 2.0, 0.3, 0.5);
        assert!(defining(Variant::Earring, &r)[1].abs() > 0.1);
        assert!(matches!(pi1(&r), Err(Error::OffVariety(_))));
    }

    #[test]
    fn theta_on_named_point() {
        let p = PillowPoint::new(Side::P0, 0.7, 1.1);
        let t = theta_map(&p);
        assert!(close3(t.r3, theta_r3(p.r3), 1e-12));
        assert!(close3(t.r3, r3_of(0.7, -1.1), 1e-15));
    }

    #[test]
    fn w2_fixes_the_middle_of_the_bottom_edge() {
        let p = w2_hat(&PillowPoint::new(Side::P0, FRAC_PI_2, 0.0));
        assert!((p.gamma - FRAC_PI_2).abs() < 1e-15 && p.theta == 0.0);
    }

    #[test]
    fn canonical_representatives() {
        assert_eq!(canonical(0.0, 5.0), (0.0, TAU - 5.0));
        let (g, t) = canonical(4.0, 1.0);
        assert!((g - (TAU - 4.0)).abs() < 1e-15 && (t - (TAU - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn explicit_points_are_fixed_by_the_involution() {
        for v in Variant::BOTH {
            for (e1, e2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let r = rho_eps(0.05, e1, e2);
                let (_, u) = u_involution(v, 0.05, &r).unwrap();
                let a = six_characters(&r);
                let b = six_characters(&u);
                assert!((0..6).all(|k| (a[k] - b[k]).abs() < 1e-10));
                assert!(verify_factorization(v, 0.05, &r).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn unperturbed_involution_formula() {
        for v in Variant::BOTH {
            for (g, t, sheet) in [(0.8, 2.1, 1.0), (2.5, 4.4, -1.0), (1.3, 0.2, 1.0)] {
                let pt = unperturbed(g, t, sheet);
                let (u, _) = u_involution(v, 0.0, &embed_point(&pt)).unwrap();
                // expected [−γ, θ, 0, π − τ] up to the free involution
                let expected = ChartPoint::new(0.0, -g, t, 0.0, PI - pt.tau).unwrap();
                let matches = |e: ChartPoint| {
                    let d = |x: f64, y: f64| ((x - y + PI).rem_euclid(TAU) - PI).abs();
                    d(e.gamma, u.gamma) < 1e-10 && d(e.theta, u.theta) < 1e-10 && d(e.tau, u.tau) < 1e-10
                };
                assert!(u.nu.abs() < 1e-12);
                assert!(matches(expected) || matches(expected.iota()), "{v} {u:?} vs {expected:?}");
            }
        }
    }

    fn angles() -> impl Strategy<Value = (f64, f64)> {
        (-10.0f64..10.0, -10.0f64..10.0)
    }

    proptest! {
        #[test]
        fn pillowcase_points_satisfy_surface(a in angles()) {
            let p = PillowPoint::new(Side::P0, a.0, a.1);
            prop_assert!(surface_residual(p.r3).abs() < 1e-12);
            prop_assert!((0.0..=PI).contains(&p.gamma));
            prop_assert!(close3(p.r3, r3_of(a.0, a.1), 1e-12));
        }

        #[test]
        fn theta_and_w_are_involutions_and_commute(a in angles()) {
            let p = PillowPoint::new(Side::P0, a.0, a.1);
            prop_assert!(close3(theta_map(&theta_map(&p)).r3, p.r3, 1e-12));
            prop_assert!(close3(w1_hat(&w1_hat(&p)).r3, p.r3, 1e-12));
            prop_assert!(close3(w2_hat(&w2_hat(&p)).r3, p.r3, 1e-12));
            prop_assert!(close3(w1_hat(&theta_map(&p)).r3, theta_map(&w1_hat(&p)).r3, 1e-12));
            prop_assert!(close3(w2_hat(&theta_map(&p)).r3, theta_map(&w2_hat(&p)).r3, 1e-12));
        }

        #[test]
        fn character_route_matches_coordinates(s in -0.2f64..0.2, a in angles(), nu in -0.5f64..0.5, tau in 0.0..TAU) {
            let pt = ChartPoint::new(s, a.0, a.1, nu, tau).unwrap();
            prop_assert!(close3(pi0_chars(&embed_point(&pt)), pi0(&pt).r3, 1e-10));
        }

        #[test]
        fn theta_reverses_orientation(a in angles()) {
            // Jacobian of the lift map (γ, θ) ↦ (γ, −θ)
            let h = 1e-6;
            let f = |g: f64, t: f64| lift::theta([g, t]);
            let dg = [(f(a.0 + h, a.1)[0] - f(a.0 - h, a.1)[0]) / (2.0 * h), (f(a.0 + h, a.1)[1] - f(a.0 - h, a.1)[1]) / (2.0 * h)];
            let dt = [(f(a.0, a.1 + h)[0] - f(a.0, a.1 - h)[0]) / (2.0 * h), (f(a.0, a.1 + h)[1] - f(a.0, a.1 - h)[1]) / (2.0 * h)];
            prop_assert!((dg[0] * dt[1] - dg[1] * dt[0] + 1.0).abs() < 1e-7);
        }
    }
}
