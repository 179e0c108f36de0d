//! Group words over the tangle generators, the slice embedding of the
//! perturbed representation space, and the two defining functions whose zero
//! sets are the earring and bypass varieties.
//!
//! Words are written compactly: a lowercase letter is a generator, the
//! matching uppercase letter is its inverse. `"QPbpq"` is `q̄ p̄ b p q`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Quat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gen {
    A,
    B,
    F,
    H,
    P,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    pub gen: Gen,
    pub inverse: bool,
}

/// A freely reduced word.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            match out.last() {
                Some(prev) if prev.gen == l.gen && prev.inverse != l.inverse => {
                    out.pop();
                }
                _ => out.push(l),
            }
        }
        Word(out)
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|l| Letter { gen: l.gen, inverse: !l.inverse }).collect())
    }

    pub fn then(&self, other: &Word) -> Self {
        Word::from_letters(self.0.iter().chain(other.0.iter()).copied())
    }

    /// `[x, y] = x y x̄ ȳ`.
    pub fn commutator(x: &Word, y: &Word) -> Self {
        x.then(y).then(&x.inverse()).then(&y.inverse())
    }
}

impl FromStr for Word {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for ch in text.chars().filter(|c| !c.is_whitespace()) {
            let gen = match ch.to_ascii_lowercase() {
                'a' => Gen::A,
                'b' => Gen::B,
                'f' => Gen::F,
                'h' => Gen::H,
                'p' => Gen::P,
                'q' => Gen::Q,
                _ => return Err(Error::OutOfDomain { what: "word", detail: format!("unknown letter {ch:?}") }),
            };
            letters.push(Letter { gen, inverse: ch.is_ascii_uppercase() });
        }
        Ok(Word::from_letters(letters))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            let c = match l.gen {
                Gen::A => 'a',
                Gen::B => 'b',
                Gen::F => 'f',
                Gen::H => 'h',
                Gen::P => 'p',
                Gen::Q => 'q',
            };
            write!(f, "{}", if l.inverse { c.to_ascii_uppercase() } else { c })?;
        }
        Ok(())
    }
}

fn word(text: &str) -> Word {
    text.parse().expect("named words are well formed")
}

/// Named words of the presentations.
pub mod named {
    use super::{word, Word};

    /// Longitude of the first perturbation curve, `b h`.
    pub fn lambda_p() -> Word {
        word("bh")
    }
    /// Longitude of the second perturbation curve, `f ā h`.
    pub fn lambda_q() -> Word {
        word("fAh")
    }
    pub fn c() -> Word {
        word("QPbpq")
    }
    pub fn d() -> Word {
        word("QPBpbaFqf")
    }
    pub fn e() -> Word {
        word("baF")
    }
    pub fn g() -> Word {
        word("QbaFq")
    }
    /// The earring word `[ā h q̄ p̄, h]`, sent to −1 by the w₂ condition.
    pub fn w() -> Word {
        Word::commutator(&word("AhQP"), &word("h"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Earring,
    Bypass,
}

impl Variant {
    pub const BOTH: [Variant; 2] = [Variant::Earring, Variant::Bypass];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Earring => "earring",
            Variant::Bypass => "bypass",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "earring" => Ok(Variant::Earring),
            "bypass" => Ok(Variant::Bypass),
            other => Err(Error::OutOfDomain { what: "variant", detail: other.to_string() }),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresentationName {
    /// Earring tangle group.
    Earring,
    /// Bypass tangle group; same relators, no w₂ word.
    Bypass,
    /// Incoming boundary group on a, b, e, f.
    Incoming,
    /// Outgoing boundary group on d, c, g, f.
    Outgoing,
}

/// A presentation with relators written symbolically over its own
/// generators. Letters `c d e g` denote the named words above.
#[derive(Debug, Clone)]
pub struct Presentation {
    pub name: PresentationName,
    pub generators: Vec<&'static str>,
    pub relators: Vec<&'static str>,
}

impl Presentation {
    pub fn new(name: PresentationName) -> Self {
        match name {
            PresentationName::Earring | PresentationName::Bypass => Presentation {
                name,
                generators: vec!["a", "b", "f", "p", "q", "h"],
                relators: vec!["[p,bh]", "[q,fAh]"],
            },
            PresentationName::Incoming => {
                Presentation { name, generators: vec!["a", "b", "e", "f"], relators: vec!["baFE"] }
            }
            PresentationName::Outgoing => {
                Presentation { name, generators: vec!["d", "c", "g", "f"], relators: vec!["cdFG"] }
            }
        }
    }

    /// Relators expanded into words over the six tangle generators.
    pub fn expanded_relators(&self) -> Vec<Word> {
        self.relators.iter().map(|r| expand(r)).collect()
    }
}

fn expand(text: &str) -> Word {
    if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        let (x, y) = inner.split_once(',').expect("commutator has two entries");
        return Word::commutator(&expand(x), &expand(y));
    }
    let mut out = Word::empty();
    for ch in text.chars() {
        let piece = match ch.to_ascii_lowercase() {
            'c' => named::c(),
            'd' => named::d(),
            'e' => named::e(),
            'g' => named::g(),
            _ => word(&ch.to_ascii_lowercase().to_string()),
        };
        out = out.then(&if ch.is_ascii_uppercase() { piece.inverse() } else { piece });
    }
    out
}

/// Value of the slice coordinates `(s, γ, θ, ν, τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub s: f64,
    pub gamma: f64,
    pub theta: f64,
    pub nu: f64,
    pub tau: f64,
}

/// Largest |ν| in the slice domain.
pub const NU_MAX: f64 = 0.5;

pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(std::f64::consts::TAU);
    if r >= std::f64::consts::TAU {
        0.0
    } else {
        r
    }
}

impl ChartPoint {
    /// Validated point with angles reduced to `[0, 2π)`.
    pub fn new(s: f64, gamma: f64, theta: f64, nu: f64, tau: f64) -> Result<Self> {
        if nu.is_nan() || nu.abs() > NU_MAX {
            return Err(Error::OutOfDomain { what: "ν", detail: format!("{nu} not in [-1/2, 1/2]") });
        }
        Ok(ChartPoint { s, gamma: wrap_angle(gamma), theta: wrap_angle(theta), nu, tau: wrap_angle(tau) })
    }

    /// The free involution `(s, γ, θ, ν, τ) ↦ (s, −γ, −θ, ν, τ + π)`.
    pub fn iota(self) -> Self {
        ChartPoint {
            s: self.s,
            gamma: wrap_angle(-self.gamma),
            theta: wrap_angle(-self.theta),
            nu: self.nu,
            tau: wrap_angle(self.tau + std::f64::consts::PI),
        }
    }
}

/// Images of the six generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rep {
    pub a: Quat,
    pub b: Quat,
    pub f: Quat,
    pub h: Quat,
    pub p: Quat,
    pub q: Quat,
}

/// `e^{t k} i`.
fn rotated_i(t: f64) -> Quat {
    Quat::new(0.0, t.cos(), t.sin(), 0.0)
}

/// `ν i + √(1−ν²) e^{τ i} j`.
pub fn h_of(nu: f64, tau: f64) -> Quat {
    let r = (1.0 - nu * nu).sqrt();
    Quat::new(0.0, nu, r * tau.cos(), r * tau.sin())
}

/// The slice embedding without domain checks, for inner loops.
pub fn embed(s: f64, gamma: f64, theta: f64, nu: f64, tau: f64) -> Rep {
    let a = Quat::I;
    let b = rotated_i(gamma);
    let f = rotated_i(theta);
    let h = h_of(nu, tau);
    Rep::with_perturbation(s, a, b, f, h)
}

pub fn embed_l(pt: &ChartPoint) -> Result<Rep> {
    if pt.nu.is_nan() || pt.nu.abs() > NU_MAX {
        return Err(Error::OutOfDomain { what: "ν", detail: format!("{} not in [-1/2, 1/2]", pt.nu) });
    }
    Ok(embed(pt.s, pt.gamma, pt.theta, pt.nu, pt.tau))
}

impl Rep {
    /// Completes `(a, b, f, h)` by the perturbation conditions
    /// `p = exp(s Im(b h))`, `q = exp(s Im(f ā h))`.
    pub fn with_perturbation(s: f64, a: Quat, b: Quat, f: Quat, h: Quat) -> Rep {
        let p = Quat::exp((b * h).im().scale(s));
        let q = Quat::exp((f * a.conj() * h).im().scale(s));
        Rep { a, b, f, h, p, q }
    }

    pub fn image(&self, gen: Gen) -> Quat {
        match gen {
            Gen::A => self.a,
            Gen::B => self.b,
            Gen::F => self.f,
            Gen::H => self.h,
            Gen::P => self.p,
            Gen::Q => self.q,
        }
    }

    pub fn eval(&self, w: &Word) -> Quat {
        Quat::product(w.letters().iter().map(|l| {
            let x = self.image(l.gen);
            if l.inverse {
                x.conj()
            } else {
                x
            }
        }))
    }

    /// Conjugate every generator by `u`: `x ↦ u x ū`.
    pub fn conjugate(&self, u: Quat) -> Rep {
        let c = |x: Quat| u * x * u.conj();
        Rep { a: c(self.a), b: c(self.b), f: c(self.f), h: c(self.h), p: c(self.p), q: c(self.q) }
    }
}

pub fn eval_word(rep: &Rep, w: &Word) -> Quat {
    rep.eval(w)
}

/// Earring defining function `(Re(p q h̄ a h̄), Re(p q h̄ a))`.
pub fn g_earring(rep: &Rep) -> [f64; 2] {
    let Rep { a, h, p, q, .. } = *rep;
    let pqha = p * q * h.conj() * a;
    [(pqha * h.conj()).real(), pqha.real()]
}

/// Bypass defining function `(Re(q̄ p̄ h p q h̄ a), Re(h̄ a))`.
pub fn g_bypass(rep: &Rep) -> [f64; 2] {
    let Rep { a, h, p, q, .. } = *rep;
    let pq = p * q;
    [(pq.conj() * h * pq * h.conj() * a).real(), (h.conj() * a).real()]
}

pub fn defining(variant: Variant, rep: &Rep) -> [f64; 2] {
    match variant {
        Variant::Earring => g_earring(rep),
        Variant::Bypass => g_bypass(rep),
    }
}

pub fn g_at(variant: Variant, pt: &ChartPoint) -> [f64; 2] {
    defining(variant, &embed(pt.s, pt.gamma, pt.theta, pt.nu, pt.tau))
}

/// Below this |s| the reduced system uses its exact `s → 0` limit.
pub const REDUCED_LIMIT_S: f64 = 1e-12;

/// Defining function with the first component divided by its vanishing
/// order in `s`, so that the zero set stays regular as `s → 0`.
///
/// At `s = 0` both variants reduce to `(sin θ cos τ − sin γ sin τ, ν)`.
pub fn reduced(variant: Variant, s: f64, gamma: f64, theta: f64, nu: f64, tau: f64) -> [f64; 2] {
    if s.abs() < REDUCED_LIMIT_S {
        return [theta.sin() * tau.cos() - gamma.sin() * tau.sin(), nu];
    }
    let g = defining(variant, &embed(s, gamma, theta, nu, tau));
    match variant {
        Variant::Earring => [g[0] / s, g[1]],
        Variant::Bypass => [g[0] / (2.0 * s), g[1]],
    }
}

/// Leading terms of the reduced first component:
/// `sin θ cos τ − sin γ sin τ + 2 s cos γ cos θ`.
pub fn reduced_leading(s: f64, gamma: f64, theta: f64, tau: f64) -> f64 {
    theta.sin() * tau.cos() - gamma.sin() * tau.sin() + 2.0 * s * gamma.cos() * theta.cos()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityReport {
    /// `p̄ a f̄ q f = h p q h̄ a`.
    pub shuffle: f64,
    pub relator_p: f64,
    pub relator_q: f64,
    pub perturbation_p: f64,
    pub perturbation_q: f64,
}

impl IdentityReport {
    pub fn max(&self) -> f64 {
        self.shuffle.max(self.relator_p).max(self.relator_q).max(self.perturbation_p).max(self.perturbation_q)
    }
}

pub fn check_rep_identities(s: f64, rep: &Rep) -> IdentityReport {
    let lhs = rep.eval(&word("PaFqf"));
    let rhs = rep.eval(&word("hpqHa"));
    let rp = rep.eval(&Word::commutator(&word("p"), &named::lambda_p()));
    let rq = rep.eval(&Word::commutator(&word("q"), &named::lambda_q()));
    let p_expected = Quat::exp(rep.eval(&named::lambda_p()).im().scale(s));
    let q_expected = Quat::exp(rep.eval(&named::lambda_q()).im().scale(s));
    IdentityReport {
        shuffle: lhs.max_abs_diff(rhs),
        relator_p: rp.max_abs_diff(Quat::ONE),
        relator_q: rq.max_abs_diff(Quat::ONE),
        perturbation_p: rep.p.max_abs_diff(p_expected),
        perturbation_q: rep.q.max_abs_diff(q_expected),
    }
}

pub fn check_identities(pt: &ChartPoint) -> Result<IdentityReport> {
    Ok(check_rep_identities(pt.s, &embed_l(pt)?))
}

/// Value of the earring word `w`; the w₂ condition asks for −1.
pub fn w2_value(variant: Variant, rep: &Rep) -> Result<Quat> {
    match variant {
        Variant::Earring => Ok(rep.eval(&named::w())),
        Variant::Bypass => {
            Err(Error::OutOfDomain { what: "w2_value", detail: "the bypass tangle has no w2 word".into() })
        }
    }
}

/// The four explicit representations `a = i, b = j, f = ε₁ i, h = ε₂ j,
/// p = 1, q = exp(s ε₁ ε₂ j)`, zeros of both defining functions for every `s`.
pub fn rho_eps(s: f64, eps1: i8, eps2: i8) -> Rep {
    let e1 = f64::from(eps1.signum());
    let e2 = f64::from(eps2.signum());
    Rep {
        a: Quat::I,
        b: Quat::J,
        f: Quat::I.scale(e1),
        h: Quat::J.scale(e2),
        p: Quat::ONE,
        q: Quat::exp(Quat::J.scale(s * e1 * e2)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    /// Power series of exp, independent of `Quat::exp`.
    fn series_exp(v: Quat) -> Quat {
        let mut term = Quat::ONE;
        let mut sum = Quat::ONE;
        for n in 1..40 {
            term = (term * v).scale(1.0 / n as f64);
            sum = sum + term;
        }
        sum
    }

    #[test]
    fn words_reduce_and_invert() {
        let w: Word = "abBa".parse().unwrap();
        assert_eq!(w.to_string(), "aa");
        assert_eq!(named::d().inverse().to_string(), "FQfABPbpq");
        assert_eq!(named::w().to_string(), "AhQPhpqHaH");
        assert!(Word::commutator(&named::c(), &named::c()).is_empty());
        assert!("xyz".parse::<Word>().is_err());
    }

    #[test]
    fn origin_embeds_to_basis() {
        let r = embed(0.3, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(r.a, Quat::I);
        assert!(r.b.max_abs_diff(Quat::I) < 1e-16 && r.f.max_abs_diff(Quat::I) < 1e-16);
        assert!(r.h.max_abs_diff(Quat::J) < 1e-16);
    }

    #[test]
    fn quarter_turn_b_is_traceless_against_a() {
        let r = embed(0.1, FRAC_PI_2, 0.0, 0.0, 0.0);
        assert!(r.eval(&"bA".parse().unwrap()).real().abs() < 1e-15);
        assert!(r.b.max_abs_diff(Quat::J) < 1e-15);
    }

    #[test]
    fn perturbation_matches_series() {
        let r = embed(0.1, 0.7, 1.3, 0.2, 2.0);
        let p = series_exp((r.b * r.h).im().scale(0.1));
        let q = series_exp((r.f * r.a.conj() * r.h).im().scale(0.1));
        assert!(r.p.max_abs_diff(p) < 1e-12 && r.q.max_abs_diff(q) < 1e-12);
    }

    #[test]
    fn nu_out_of_range_is_rejected() {
        assert!(ChartPoint::new(0.1, 0.0, 0.0, 0.6, 0.0).is_err());
        assert!(ChartPoint::new(0.1, 0.0, 0.0, 0.5, 0.0).is_ok());
    }

    #[test]
    fn unperturbed_defining_functions() {
        for (g, t, n, u) in [(0.3, 1.1, 0.2, 2.0), (4.0, 5.5, -0.4, 0.1)] {
            let r = embed(0.0, g, t, n, u);
            assert_eq!(r.p, Quat::ONE);
            assert_eq!(r.q, Quat::ONE);
            let ge = g_earring(&r);
            let gb = g_bypass(&r);
            assert!(ge[0].abs() < 1e-12 && gb[0].abs() < 1e-12);
            assert!((ge[1] - n).abs() < 1e-12 && (gb[1] - n).abs() < 1e-15);
        }
    }

    #[test]
    fn explicit_points_are_zeros() {
        for s in [0.01, 0.05, 0.1] {
            for (e1, e2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let r = rho_eps(s, e1, e2);
                let ge = g_earring(&r);
                let gb = g_bypass(&r);
                assert!(ge[0].abs().max(ge[1].abs()) < 1e-10);
                assert!(gb[0].abs().max(gb[1].abs()) < 1e-10);
                assert!((w2_value(Variant::Earring, &r).unwrap() + Quat::ONE).norm() < 1e-10);
                // the same representation is the slice point [π/2, θ, 0, τ]
                let theta = if e1 > 0 { 0.0 } else { PI };
                let tau = if e2 > 0 { 0.0 } else { PI };
                let e = embed(s, FRAC_PI_2, theta, 0.0, tau);
                for gen in [Gen::A, Gen::B, Gen::F, Gen::H, Gen::P, Gen::Q] {
                    assert!(e.image(gen).max_abs_diff(r.image(gen)) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn named_point_identity() {
        let rep = check_identities(&ChartPoint::new(0.1, FRAC_PI_2, 0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(rep.shuffle < 1e-12);
    }

    #[test]
    fn boundary_relators_hold_in_the_tangle_group() {
        let r = embed(0.07, 0.4, 2.2, 0.1, 1.0);
        for name in [PresentationName::Incoming, PresentationName::Outgoing] {
            for w in Presentation::new(name).expanded_relators() {
                assert!(r.eval(&w).max_abs_diff(Quat::ONE) < 1e-14, "{name:?}");
            }
        }
        for w in Presentation::new(PresentationName::Earring).expanded_relators() {
            assert!(r.eval(&w).max_abs_diff(Quat::ONE) < 1e-12);
        }
    }

    #[test]
    fn bypass_has_no_w2() {
        assert!(w2_value(Variant::Bypass, &embed(0.1, 1.0, 1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn asymptotic_residual_is_quadratic() {
        // hold (γ, θ, τ) and solve G₂ = 0 for ν at each s
        let (gamma, theta, tau) = (1.0, 2.0, 0.7);
        let residual = |s: f64| {
            let out = crate::newton::solve(|x| vec![g_earring(&embed(s, gamma, theta, x[0], tau))[1]], &[0.03], 1e-14);
            assert!(out.converged);
            let g1 = g_earring(&embed(s, gamma, theta, out.x[0], tau))[0];
            (g1 / s - reduced_leading(s, gamma, theta, tau)).abs()
        };
        let ratio = residual(0.05) / residual(0.025);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    fn chart() -> impl Strategy<Value = ChartPoint> {
        (-0.2f64..0.2, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU, -0.5f64..0.5, 0.0..std::f64::consts::TAU)
            .prop_map(|(s, g, t, n, u)| ChartPoint::new(s, g, t, n, u).unwrap())
    }

    proptest! {
        #[test]
        fn identities_hold(pt in chart()) {
            prop_assert!(check_identities(&pt).unwrap().max() < 1e-11);
        }

        #[test]
        fn bypass_second_component_is_nu(pt in chart()) {
            prop_assert!((g_at(Variant::Bypass, &pt)[1] - pt.nu).abs() < 1e-15);
        }

        #[test]
        fn defining_functions_are_iota_invariant(pt in chart()) {
            for v in Variant::BOTH {
                let a = g_at(v, &pt);
                let b = g_at(v, &pt.iota());
                prop_assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
            }
        }

        #[test]
        fn unperturbed_maps_agree(mut pt in chart()) {
            pt.s = 0.0;
            let a = g_at(Variant::Earring, &pt);
            let b = g_at(Variant::Bypass, &pt);
            prop_assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }
}
