mod export;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pillowcase_core::compose::{compose, pull_back};
use pillowcase_core::curves::{self, ImmersedCurve, DEFAULT_DENSITY};
use pillowcase_core::pillowcase::Side;
use pillowcase_core::scene::{composition_scene, torus_knot_scene, Scene};
use pillowcase_core::suite::{self, SuiteOptions, SuiteReport};
use pillowcase_core::variety::{self, DEFAULT_S};
use pillowcase_core::words::Variant;
use pillowcase_core::Error as CoreError;
use serde::Serialize;

const EXIT_VERIFICATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const TORUS_KNOT_RANK: usize = 9;

#[derive(Parser)]
#[command(
    name = "pillowcase",
    version,
    about = "Perturbed character varieties, pillowcase restriction maps and immersed curve composition"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Tangle; `verify-all` runs both when omitted, everything else uses earring.
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantArg>,
    /// Perturbation parameter.
    #[arg(long, global = true, default_value_t = DEFAULT_S, allow_negative_numbers = true)]
    s: f64,
    /// Grid resolution for fiber classification.
    #[arg(long, global = true, default_value_t = 64)]
    grid: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory; PILLOWCASE_OUT takes precedence.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Print machine-readable results on stdout.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Earring,
    Bypass,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Earring => Variant::Earring,
            VariantArg::Bypass => Variant::Bypass,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify fibers over a grid, extract fold circles and report the topology.
    Trace,
    /// Push a curve in the first pillowcase through the correspondence.
    Compose {
        /// Curve JSON file or builtin name (beta, slope-one, slope-two, b-ver).
        curve: String,
        /// Compose with the transposed correspondence instead; the curve must
        /// live in the second pillowcase.
        #[arg(long)]
        pull_back: bool,
        #[arg(long, default_value_t = DEFAULT_DENSITY)]
        density: usize,
    },
    /// Build the torus-knot scene and count both pairings.
    TorusKnot {
        #[arg(long, default_value_t = DEFAULT_DENSITY)]
        density: usize,
    },
    /// Run the verification suite.
    VerifyAll {
        /// Constant added to the defining functions, to check that the suite fails.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        g_fault: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Count transverse intersections of two curves.
    Intersect {
        first: String,
        second: String,
        #[arg(long, default_value_t = DEFAULT_DENSITY)]
        density: usize,
    },
    /// Write a builtin curve as JSON.
    Curve {
        name: String,
        #[arg(long, default_value_t = DEFAULT_DENSITY)]
        density: usize,
        /// Place the curve in the second pillowcase.
        #[arg(long)]
        second: bool,
    },
}

struct Settings {
    variant: Variant,
    variant_given: bool,
    s: f64,
    grid: usize,
    seed: u64,
    out: PathBuf,
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = std::env::var_os("PILLOWCASE_OUT").map(PathBuf::from).unwrap_or(cli.global.out);
    let ctx = Settings {
        variant: cli.global.variant.map(Variant::from).unwrap_or(Variant::Earring),
        variant_given: cli.global.variant.is_some(),
        s: cli.global.s,
        grid: cli.global.grid,
        seed: cli.global.seed,
        out,
        json: cli.global.json,
    };
    match run(&ctx, cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFICATION),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<CoreError>()) {
        Some(CoreError::NotConverged { .. } | CoreError::Numerical { .. } | CoreError::OffVariety(_)) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Returns whether every check passed.
fn run(ctx: &Settings, command: Command) -> Result<bool> {
    std::fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;
    match command {
        Command::Trace => trace(ctx),
        Command::Compose { curve, pull_back, density } => compose_cmd(ctx, &curve, pull_back, density),
        Command::TorusKnot { density } => torus_knot(ctx, density),
        Command::VerifyAll { g_fault, samples } => verify_all(ctx, SuiteOptions { samples, grid: ctx.grid, g_fault }),
        Command::Intersect { first, second, density } => intersect(ctx, &first, &second, density),
        Command::Curve { name, density, second } => {
            let mut c = builtin(&name, density).ok_or_else(|| anyhow::anyhow!("unknown builtin curve {name:?}"))?;
            if second {
                c = c.with_side(Side::P1);
            }
            let path = ctx.out.join(format!("{name}.json"));
            std::fs::write(&path, c.to_json()? + "\n")?;
            println!("{}", path.display());
            Ok(true)
        }
    }
}

fn builtin(name: &str, density: usize) -> Option<ImmersedCurve> {
    Some(match name {
        "beta" => curves::beta(density),
        "slope-one" => curves::slope_one_arc(density),
        "slope-two" => curves::slope_two_arc(density),
        "b-ver" => curves::b_ver(density),
        _ => return None,
    })
}

fn load_curve(source: &str, density: usize) -> Result<(String, ImmersedCurve)> {
    if let Some(c) = builtin(source, density) {
        return Ok((source.to_string(), c));
    }
    let path = Path::new(source);
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading curve {source:?} (not a builtin name either)"))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "curve".into());
    Ok((stem, ImmersedCurve::from_json(&text)?))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn trace(ctx: &Settings) -> Result<bool> {
    let (report, fibers, folds) = variety::verify_topology(ctx.variant, ctx.s, ctx.grid)?;
    export::write_fibers_csv(&ctx.out.join("fibers.csv"), &fibers)?;
    export::write_folds_csv(&ctx.out.join("folds.csv"), &folds)?;
    export::write_json(&ctx.out.join("topology.json"), &report)?;
    if !folds.is_empty() {
        let mut scene = Scene::new(Side::P0);
        scene.fold_images = Some(pillowcase_core::compose::fold_image_curve(&folds));
        std::fs::write(
            ctx.out.join("folds.svg"),
            export::scene_svg(&scene, &format!("fold images, {} s={}", ctx.variant, ctx.s)),
        )?;
    }
    if ctx.json {
        print_json(&report)?;
    } else {
        println!("variant {}  s {}  grid {}", report.variant, report.s, report.grid);
        if report.degenerate {
            println!("degenerate: circle fibers over the whole pillowcase");
        }
        println!(
            "fibers: {} two sheets, {} fold region, {} empty, {} inconsistent",
            report.counts.two_sheets, report.counts.fold_region, report.counts.empty, report.inconsistent
        );
        let lo = report.fold_radius_min.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = report.fold_radius_max.iter().copied().fold(0.0, f64::max);
        if report.fold_circles > 0 {
            println!("fold circles {}  radius {lo:.5}..{hi:.5}", report.fold_circles);
        }
        println!(
            "euler characteristic {}  genus {}  quotient genus {}",
            report.euler_characteristic, report.genus, report.quotient_genus
        );
        for note in &report.notes {
            println!("note: {note}");
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct ComposeSummary {
    input: String,
    variant: Variant,
    s: f64,
    direction: &'static str,
    components: usize,
    invariants: curves::CurveInvariants,
    files: Vec<PathBuf>,
}

fn compose_cmd(ctx: &Settings, source: &str, backward: bool, density: usize) -> Result<bool> {
    let (name, input) = load_curve(source, density)?;
    let output = if backward { pull_back(&input, ctx.variant, ctx.s)? } else { compose(&input, ctx.variant, ctx.s)?.1 };
    let stem = format!("{name}-{}", if backward { "pulled" } else { "composed" });
    let files = vec![
        ctx.out.join(format!("{stem}.json")),
        ctx.out.join(format!("{stem}.csv")),
        ctx.out.join(format!("{stem}.svg")),
    ];
    std::fs::write(&files[0], output.to_json()? + "\n")?;
    export::write_curve_csv(&files[1], &output)?;
    let scene = if backward {
        let mut scene = Scene::new(Side::P0);
        scene.push("input", input.with_side(Side::P0))?;
        scene.push("pulled back", output.clone())?;
        scene.fold_images = Some(pillowcase_core::compose::fold_image_curve(&variety::fold_locus(ctx.variant, ctx.s)?));
        scene
    } else {
        composition_scene(&input, &output, ctx.variant, ctx.s)?
    };
    std::fs::write(&files[2], export::scene_svg(&scene, &format!("{stem}, {} s={}", ctx.variant, ctx.s)))?;
    let summary = ComposeSummary {
        input: name,
        variant: ctx.variant,
        s: ctx.s,
        direction: if backward { "pull_back" } else { "push_forward" },
        components: output.components.len(),
        invariants: curves::invariants(&output)?,
        files,
    };
    if ctx.json {
        print_json(&summary)?;
    } else {
        println!("{} composed with the {} correspondence at s = {}", summary.input, summary.variant, summary.s);
        for (k, c) in summary.invariants.components.iter().enumerate() {
            println!(
                "component {k}: {:?}  double points {}  tangential {}  rotation {}/2  homology {:?}",
                c.kind, c.double_points, c.tangential_points, c.rotation_halves, c.homology
            );
        }
        for f in &summary.files {
            println!("wrote {}", f.display());
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct PairingSummary {
    variant: Variant,
    s: f64,
    forward: usize,
    forward_parts: Vec<(String, usize)>,
    backward: usize,
    backward_parts: Vec<(String, usize)>,
}

fn torus_knot(ctx: &Settings, density: usize) -> Result<bool> {
    let r = torus_knot_scene(ctx.variant, ctx.s, density)?;
    let title = |dir: &str| format!("torus knot {dir} pairing, {} s={}", ctx.variant, ctx.s);
    std::fs::write(ctx.out.join("torus-knot-forward.svg"), export::scene_svg(&r.forward_scene, &title("forward")))?;
    std::fs::write(ctx.out.join("torus-knot-backward.svg"), export::scene_svg(&r.backward_scene, &title("backward")))?;
    export::write_json(&ctx.out.join("torus-knot.json"), &(&r.forward, &r.backward))?;
    let parts = |p: &pillowcase_core::scene::Pairing| p.parts.iter().map(|x| (x.against.clone(), x.count)).collect();
    let summary = PairingSummary {
        variant: r.variant,
        s: r.s,
        forward: r.forward.count,
        forward_parts: parts(&r.forward),
        backward: r.backward.count,
        backward_parts: parts(&r.backward),
    };
    let ok = summary.forward == TORUS_KNOT_RANK && summary.backward == TORUS_KNOT_RANK;
    if ctx.json {
        print_json(&summary)?;
    } else {
        for (dir, count, parts) in [
            ("forward", summary.forward, &summary.forward_parts),
            ("backward", summary.backward, &summary.backward_parts),
        ] {
            let detail: Vec<String> = parts.iter().map(|(n, c)| format!("{n}: {c}")).collect();
            println!("{dir:<8} {count}  ({})", detail.join(", "));
        }
        println!("{}", if ok { "PASS" } else { "FAIL" });
    }
    Ok(ok)
}

fn verify_all(ctx: &Settings, opts: SuiteOptions) -> Result<bool> {
    let variants: Vec<Variant> = if ctx.variant_given { vec![ctx.variant] } else { Variant::BOTH.to_vec() };
    let reports = variants
        .into_iter()
        .map(|v| suite::run(v, ctx.s, ctx.seed, opts))
        .collect::<pillowcase_core::Result<Vec<SuiteReport>>>()?;
    let ok = reports.iter().all(SuiteReport::passed);
    if ctx.json {
        print_json(&reports)?;
    } else {
        for r in &reports {
            println!("{} s={} seed={}", r.variant, r.s, r.seed);
            for c in &r.checks {
                println!(
                    "  {:<4} {:<26} {:>12.4e}  tol {:>10.3e}  {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance,
                    c.detail
                );
            }
        }
        println!("{}", if ok { "all checks passed" } else { "verification FAILED" });
    }
    Ok(ok)
}

#[derive(Serialize)]
struct IntersectSummary {
    first: String,
    second: String,
    count: usize,
    points: Vec<curves::Crossing>,
}

fn intersect(ctx: &Settings, first: &str, second: &str, density: usize) -> Result<bool> {
    let (a_name, a) = load_curve(first, density)?;
    let (b_name, b) = load_curve(second, density)?;
    let r = curves::intersect(&a, &b)?;
    if ctx.json {
        print_json(&IntersectSummary { first: a_name, second: b_name, count: r.count, points: r.points })?;
    } else {
        println!("transverse intersections of {a_name} and {b_name}: {}", r.count);
    }
    Ok(true)
}
