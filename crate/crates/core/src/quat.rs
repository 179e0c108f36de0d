//! Unit quaternions as a model of SU(2).
//!
//! A quaternion is stored as `(w, x, y, z)` meaning `w + x i + y j + z k`.
//! Inverses of unit quaternions are conjugates, so word evaluation only ever
//! conjugates.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Products longer than this are renormalized to the unit sphere.
pub const RENORMALIZE_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const ONE: Quat = Quat::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quat = Quat::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quat = Quat::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quat = Quat::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat { w, x, y, z }
    }

    /// Pure quaternion with imaginary part `v`.
    pub const fn pure(v: [f64; 3]) -> Self {
        Quat::new(0.0, v[0], v[1], v[2])
    }

    pub fn conj(self) -> Self {
        Quat::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn real(self) -> f64 {
        self.w
    }

    pub fn im(self) -> Self {
        Quat::new(0.0, self.x, self.y, self.z)
    }

    pub fn vector(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalize(self) -> Self {
        let n = self.norm();
        self.scale(1.0 / n)
    }

    pub fn scale(self, t: f64) -> Self {
        Quat::new(self.w * t, self.x * t, self.y * t, self.z * t)
    }

    /// Largest coordinate difference.
    pub fn max_abs_diff(self, other: Quat) -> f64 {
        let d = self - other;
        d.w.abs().max(d.x.abs()).max(d.y.abs()).max(d.z.abs())
    }

    /// `exp(v) = cos|v| + sinc|v| v` for the imaginary part of `v`.
    pub fn exp(v: Quat) -> Self {
        let r = (v.x * v.x + v.y * v.y + v.z * v.z).sqrt();
        let c = r.cos();
        let sinc = if r < 1e-8 { 1.0 - r * r / 6.0 } else { r.sin() / r };
        Quat::new(c, sinc * v.x, sinc * v.y, sinc * v.z)
    }

    /// `cos t + sin t u` for a unit pure `u`.
    pub fn exp_axis(axis: Quat, t: f64) -> Self {
        Quat::new(t.cos(), 0.0, 0.0, 0.0) + axis.im().scale(t.sin())
    }

    /// Product of a sequence, renormalizing every [`RENORMALIZE_EVERY`] factors.
    pub fn product<I: IntoIterator<Item = Quat>>(factors: I) -> Self {
        let mut acc = Quat::ONE;
        for (n, q) in factors.into_iter().enumerate() {
            acc = acc * q;
            if (n + 1) % RENORMALIZE_EVERY == 0 {
                acc = acc.normalize();
            }
        }
        acc
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, o: Quat) -> Quat {
        Quat::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, o: Quat) -> Quat {
        Quat::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quat {
    type Output = Quat;
    fn sub(self, o: Quat) -> Quat {
        Quat::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        self.scale(-1.0)
    }
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Power series for exp, summed until terms vanish.
    fn series_exp(v: Quat) -> Quat {
        let mut term = Quat::ONE;
        let mut sum = Quat::ONE;
        for n in 1..60 {
            term = (term * v).scale(1.0 / n as f64);
            sum = sum + term;
        }
        sum
    }

    #[test]
    fn basis_products() {
        assert_eq!(Quat::I * Quat::J, Quat::K);
        assert_eq!(Quat::J * Quat::K, Quat::I);
        assert_eq!(Quat::K * Quat::I, Quat::J);
        assert_eq!(Quat::I * Quat::I, -Quat::ONE);
    }

    #[test]
    fn exp_of_quarter_turn() {
        let e = Quat::exp(Quat::K.scale(std::f64::consts::FRAC_PI_2));
        assert!(e.max_abs_diff(Quat::K) < 1e-15);
        let e = Quat::exp(Quat::pure([0.0, 0.0, 0.0]));
        assert_eq!(e, Quat::ONE);
    }

    #[test]
    fn exp_matches_series() {
        for v in [[0.3, -0.2, 0.7], [1e-9, 0.0, 2e-9], [1.5, 0.5, -1.0]] {
            let q = Quat::pure(v);
            assert!(Quat::exp(q).max_abs_diff(series_exp(q)) < 1e-14);
        }
    }

    #[test]
    fn long_product_stays_unit() {
        let g = Quat::exp(Quat::pure([0.31, 0.72, -0.45]));
        let p = Quat::product(std::iter::repeat_n(g, 10_000));
        assert!((p.norm() - 1.0).abs() < 1e-13);
    }

    fn unit() -> impl Strategy<Value = Quat> {
        (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b, c)| Quat::exp(Quat::pure([a, b, c])))
    }

    proptest! {
        #[test]
        fn multiplication_is_associative(a in unit(), b in unit(), c in unit()) {
            prop_assert!(((a * b) * c).max_abs_diff(a * (b * c)) < 1e-14);
        }

        #[test]
        fn conjugate_inverts(a in unit()) {
            prop_assert!((a * a.conj()).max_abs_diff(Quat::ONE) < 1e-14);
        }

        #[test]
        fn norm_is_multiplicative(a in unit(), b in unit()) {
            prop_assert!(((a * b).norm() - 1.0).abs() < 1e-14);
        }
    }
}
