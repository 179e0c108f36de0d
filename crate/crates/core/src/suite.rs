//! Self-checks run by `verify-all`: each one recomputes a structural fact
//! and compares it with a pinned tolerance.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::compose::{compare_with_prediction, tangent_anchor};
use crate::curves::{b_ver, beta, slope_one_arc, DEFAULT_DENSITY};
use crate::error::Result;
use crate::pillowcase::{corner_distance, verify_factorization};
use crate::scene::torus_knot_scene;
use crate::variety::{self, solve_fiber, FiberStatus};
use crate::words::{self, defining, embed, ChartPoint, Variant, NU_MAX};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64, detail: String) -> Check {
        Check { name: name.into(), passed: value < tolerance, value, tolerance, detail }
    }

    fn equal(name: &str, got: usize, want: usize, detail: String) -> Check {
        Check { name: name.into(), passed: got == want, value: got as f64, tolerance: want as f64, detail }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub variant: Variant,
    pub s: f64,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteOptions {
    pub samples: usize,
    pub grid: usize,
    /// Constant added to every defining-function value the suite evaluates,
    /// to confirm that the checks can fail.
    pub g_fault: f64,
}

impl SuiteOptions {
    pub fn standard() -> Self {
        SuiteOptions { samples: 200, grid: 64, g_fault: 0.0 }
    }
}

pub fn random_chart_point(rng: &mut impl Rng, s: f64) -> Result<ChartPoint> {
    ChartPoint::new(
        s,
        rng.gen_range(0.0..TAU),
        rng.gen_range(0.0..TAU),
        rng.gen_range(-NU_MAX..NU_MAX),
        rng.gen_range(0.0..TAU),
    )
}

/// Points of the variety over random bases at least `margin` from the corners.
pub fn sample_variety(
    variant: Variant,
    s: f64,
    count: usize,
    margin: f64,
    rng: &mut impl Rng,
) -> Result<Vec<ChartPoint>> {
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count.max(1) {
        attempts += 1;
        let (g, t) = (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
        if corner_distance(g, t) < margin {
            continue;
        }
        let fiber = solve_fiber(variant, s, g, t)?;
        if fiber.status != FiberStatus::TwoSheets {
            continue;
        }
        let root = fiber.solutions[rng.gen_range(0..fiber.solutions.len())];
        out.push(ChartPoint::new(s, g, t, root[0], root[1])?);
    }
    Ok(out)
}

fn faulty(variant: Variant, fault: f64, pt: &ChartPoint) -> f64 {
    let g = defining(variant, &embed(pt.s, pt.gamma, pt.theta, pt.nu, pt.tau));
    (g[0] + fault).abs().max((g[1] + fault).abs())
}

pub fn run(variant: Variant, s: f64, seed: u64, opts: SuiteOptions) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..opts.samples {
        worst = worst.max(words::check_identities(&random_chart_point(&mut rng, s)?)?.max());
    }
    checks.push(Check::below("identities", worst, 1e-11, format!("{} random chart points", opts.samples)));

    let pts = sample_variety(variant, s, opts.samples, 0.3, &mut rng)?;
    let on = pts.iter().map(|p| faulty(variant, opts.g_fault, p)).fold(0.0f64, f64::max);
    checks.push(Check::below("fiber roots", on, 1e-10, format!("{} points", pts.len())));

    let mut fac = 0.0f64;
    for p in &pts {
        fac = fac.max(verify_factorization(variant, s, &embed(p.s, p.gamma, p.theta, p.nu, p.tau))?);
    }
    checks.push(Check::below("factorization", fac, 1e-7, "R³ distance".into()));

    let mut kc = 0.0f64;
    for k in 0..360 {
        let rep = variety::k_circle(variant, s, TAU * k as f64 / 360.0)?;
        let g = defining(variant, &rep);
        kc = kc.max((g[0] + opts.g_fault).abs().max((g[1] + opts.g_fault).abs()));
    }
    checks.push(Check::below("closed-form circle", kc, 1e-9, "360 samples".into()));

    let folds = variety::fold_locus(variant, s)?;
    let dev = folds
        .iter()
        .flat_map(|f| f.radii())
        .map(|r| (r - 2.0 * s.abs()).abs() / (2.0 * s.abs()))
        .fold(0.0f64, f64::max);
    checks.push(Check::equal("fold circles", folds.len(), 4, String::new()));
    checks.push(Check::below("fold radius", dev, 0.25, "relative deviation from 2|s|".into()));
    let windings_ok = folds.iter().all(|f| f.image_winding().abs() == 1);
    checks.push(Check {
        name: "fold windings".into(),
        passed: windings_ok,
        value: 1.0,
        tolerance: 1.0,
        detail: String::new(),
    });

    match variety::verify_topology(variant, s, opts.grid) {
        Ok((t, _, _)) => {
            checks.push(Check::equal("genus", t.genus as usize, 5, format!("quotient genus {}", t.quotient_genus)))
        }
        Err(e) => checks.push(Check {
            name: "genus".into(),
            passed: false,
            value: f64::NAN,
            tolerance: 5.0,
            detail: e.to_string(),
        }),
    }

    for (name, curve) in [
        ("beta", beta(DEFAULT_DENSITY)),
        ("slope one", slope_one_arc(DEFAULT_DENSITY)),
        ("B_ver", b_ver(DEFAULT_DENSITY)),
    ] {
        let r = compare_with_prediction(&curve, variant, s)?;
        checks.push(Check {
            name: format!("composition {name}"),
            passed: r.invariants_match,
            value: r.computed_double_points as f64,
            tolerance: r.predicted_double_points as f64,
            detail: format!("{} branches, {} fold crossings", r.branches, r.fold_crossings),
        });
    }

    let anchors = tangent_anchor(variant, s)?;
    let gap = anchors
        .iter()
        .map(|v| {
            let a = (v[1]).abs().max((v[2] - (-1.0 + 2.0 * s)).abs());
            let b = (v[1]).abs().max((v[2] - (-1.0 - 2.0 * s)).abs());
            a.min(b)
        })
        .fold(0.0f64, f64::max);
    checks.push(Check::below(
        "tangent anchor",
        if anchors.len() == 2 { gap } else { f64::INFINITY },
        3.0 * s * s,
        format!("{} anchors", anchors.len()),
    ));

    let scene = torus_knot_scene(variant, s, DEFAULT_DENSITY)?;
    checks.push(Check::equal("scene forward", scene.forward.count, 9, String::new()));
    checks.push(Check::equal("scene backward", scene.backward.count, 9, String::new()));

    Ok(SuiteReport { variant, s, seed, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injected_fault_is_caught() {
        let opts = SuiteOptions { samples: 10, grid: 24, g_fault: 1e-3 };
        let r = run(Variant::Bypass, 0.05, 0, opts).unwrap();
        assert!(!r.passed());
        assert!(r.checks.iter().any(|c| c.name == "fiber roots" && !c.passed));
    }

    #[test]
    fn sampled_points_lie_on_the_variety() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = sample_variety(Variant::Earring, 0.05, 20, 0.3, &mut rng).unwrap();
        assert_eq!(pts.len(), 20);
        assert!(pts.iter().all(|p| faulty(Variant::Earring, 0.0, p) < 1e-10));
    }
}
