//! Command-line front end. Each subcommand runs one experiment, writes CSV
//! (and sometimes PGM) files into `--out`, and a `manifest.txt` listing the
//! resolved arguments and a checksum of every output.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cantor::{
    level_union_measure, pointwise_jacobian_integral, CantorMapSpec, EvalMode, PiecewiseRadialMap, Side, Variant,
};
use crate::degree::{degree, Domain, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::{RegularGrid, SupCube};
use crate::jacobian::{
    change_of_variables_check, ciarlet_necas_check, cn_stability_experiment, preimage_count, reflection_diagnostic,
    CnSettings, MollifierSettings,
};
use crate::maps::{Affine, ComplexPower, Map, SmoothFold};
use crate::norms::{gagliardo_seminorm, Quadrature, SeminormDomain, SeminormParams};
use crate::report::{num, parse_config, point, Manifest, Raster, Table};
use crate::testfn::PolyBump;

const SUBCOMMANDS: &[&str] = &[
    "construct",
    "evaluate",
    "seminorm",
    "degree",
    "cov-check",
    "verify-cn",
    "verify-lusin",
    "verify-orientation",
    "cn-stability",
    "preimages",
];

#[derive(Debug, Parser)]
#[command(name = "fracjac", version, about = "Degree, distributional Jacobian and Cantor-map experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; results are bit-reproducible at 1.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Preset file of `key=value` lines, applied before command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level measures of a Cantor construction and a raster of its image set.
    Construct(ConstructArgs),
    /// Evaluate a map on a grid of points.
    Evaluate(EvaluateArgs),
    /// Gagliardo seminorm with refinement history.
    Seminorm(SeminormArgs),
    /// Topological degree at a target point.
    Degree(DegreeArgs),
    /// Change-of-variables identity with a polynomial bump.
    CovCheck(CovArgs),
    /// Ciarlet–Nečas comparison of J_f(U) and |f(U)|.
    VerifyCn(CnArgs),
    /// Singular Jacobian mass of the Lusin (N) construction.
    VerifyLusin(LusinArgs),
    /// Pointwise Jacobian sign against degree for the reflected map.
    VerifyOrientation(OrientationArgs),
    /// CN verdicts and image measures along construction levels.
    CnStability(StabilityArgs),
    /// Connected components of an epsilon-preimage.
    Preimages(PreimageArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CantorArgs {
    #[arg(long, default_value = "lusin-n")]
    pub variant: Variant,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Orientation variant: `a_k = 2^{-Ak}`.
    #[arg(long = "a-exp", default_value_t = 0.5)]
    pub a_exp: f64,
    /// Orientation variant: `b_k = 2^{Bk}`.
    #[arg(long = "b-exp", default_value_t = 0.2)]
    pub b_exp: f64,
    #[arg(long, default_value_t = 6)]
    pub level: usize,
}

impl CantorArgs {
    pub fn spec(&self) -> Result<CantorMapSpec> {
        match self.variant {
            Variant::LusinN => CantorMapSpec::lusin_n(self.n, self.alpha, self.level),
            Variant::Orientation => CantorMapSpec::orientation(self.n, self.alpha, self.a_exp, self.b_exp, self.level),
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct MapArgs {
    /// identity, reflect, square, cube, double, fold, lusin-n, orientation,
    /// orientation-reflected. Defaults to the Cantor map of `--variant`.
    #[arg(long)]
    pub map: Option<String>,
    #[command(flatten)]
    pub cantor: CantorArgs,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub cantor: CantorArgs,
    /// Raster width and height in pixels (two-dimensional constructions).
    #[arg(long, default_value_t = 512)]
    pub raster: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Points per axis on the closed unit cube.
    #[arg(long, default_value_t = 11)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct SeminormArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long, default_value_t = 0.3)]
    pub s: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Grid cells per axis at the finest resolution.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Use Monte Carlo with this many samples instead of the grid.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long = "holder-exponent")]
    pub holder_exponent: Option<f64>,
    #[arg(long = "half-side", default_value_t = 1.0)]
    pub half_side: f64,
    #[arg(long = "slice-axis")]
    pub slice_axis: Option<usize>,
    #[arg(long = "slice-offset", default_value_t = 0.0)]
    pub slice_offset: f64,
}

#[derive(Debug, Args)]
pub struct DegreeArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Target point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
    pub y: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long = "half-side", default_value_t = 1.0)]
    pub half_side: f64,
}

#[derive(Debug, Args)]
pub struct CovArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long = "psi-center", value_delimiter = ',', allow_hyphen_values = true, default_value = "0.2,-0.1")]
    pub psi_center: Vec<f64>,
    #[arg(long = "psi-radius", default_value_t = 0.5)]
    pub psi_radius: f64,
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    #[arg(long = "image-nodes", default_value_t = 256)]
    pub image_nodes: usize,
    /// Coarsest mollifier scale; three halvings are used.
    #[arg(long, default_value_t = 0.05)]
    pub scale: f64,
}

#[derive(Debug, Args)]
pub struct CnArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// `U` as `center..., half side`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0,0.75")]
    pub u: Vec<f64>,
    /// Base width `h`: cutoffs `4h, 2h, h`, mollifier scales `h/2, h/4, h/8`.
    #[arg(long, default_value_t = 0.02)]
    pub h: f64,
    #[arg(long = "source-grid", default_value_t = 256)]
    pub source_grid: usize,
    #[arg(long, default_value_t = 256)]
    pub raster: usize,
}

#[derive(Debug, Args)]
pub struct LusinArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 8)]
    pub level: usize,
    #[arg(long, default_value_t = 0.02)]
    pub h: f64,
}

#[derive(Debug, Args)]
pub struct OrientationArgs {
    #[arg(long, default_value_t = 5)]
    pub level: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 100)]
    pub targets: usize,
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Side of the Jacobian sign raster.
    #[arg(long, default_value_t = 256)]
    pub raster: usize,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
    pub levels: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0,0.6666666666666666")]
    pub u: Vec<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub h: f64,
    #[arg(long = "source-grid", default_value_t = 256)]
    pub source_grid: usize,
    #[arg(long, default_value_t = 256)]
    pub raster: usize,
    #[arg(long, default_value_t = 1.5)]
    pub contraction: f64,
}

#[derive(Debug, Args)]
pub struct PreimageArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.25,0")]
    pub y: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
}

/// Builds one of the named test maps.
pub fn builtin_map(args: &MapArgs) -> Result<Box<dyn Map>> {
    let n = args.cantor.n;
    let planar = |name: &str| -> Result<()> {
        if n != 2 {
            return Err(Error::Config(format!("map {name} is planar; use --n 2")));
        }
        Ok(())
    };
    let name = args.map.clone().unwrap_or_else(|| args.cantor.variant.to_string());
    Ok(match name.as_str() {
        "identity" => Box::new(Affine::identity(n)),
        "reflect" => Box::new(Affine::reflection(n)),
        "double" => Box::new(Affine::scaling(n, 2.0)),
        "square" => {
            planar("square")?;
            Box::new(ComplexPower::new(2)?)
        }
        "cube" => {
            planar("cube")?;
            Box::new(ComplexPower::new(3)?)
        }
        "fold" => Box::new(SmoothFold::new(n, 0.1)?),
        "lusin-n" => {
            let mut c = args.cantor.clone();
            c.variant = Variant::LusinN;
            Box::new(PiecewiseRadialMap::new(c.spec()?)?)
        }
        "orientation" | "orientation-reflected" => {
            let mut c = args.cantor.clone();
            c.variant = Variant::Orientation;
            let f = PiecewiseRadialMap::new(c.spec()?)?;
            if name == "orientation" {
                Box::new(f)
            } else {
                Box::new(f.reflected())
            }
        }
        other => return Err(Error::Config(format!("unknown map {other:?}"))),
    })
}

/// Files and status produced by one experiment.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub rasters: Vec<(String, Raster)>,
    /// Headline status, e.g. a verdict; echoed to stdout and the manifest.
    pub status: String,
}

impl Outcome {
    fn table(name: &str, table: Table, status: impl Into<String>) -> Self {
        Self {
            tables: vec![(name.to_string(), table)],
            rasters: Vec::new(),
            status: status.into(),
        }
    }
}

fn cube_from(u: &[f64], n: usize) -> Result<SupCube> {
    if u.len() != n + 1 {
        return Err(Error::Config(format!("expected {} numbers for center and half side", n + 1)));
    }
    SupCube::new(u[..n].to_vec(), u[n])
}

fn check_target(y: &[f64], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(Error::Config(format!("target has {} coordinates, map has {n}", y.len())));
    }
    Ok(())
}

fn run_construct(a: &ConstructArgs) -> Result<Outcome> {
    let spec = a.cantor.spec()?;
    let mut t = Table::new(&["level", "domain_measure", "image_measure", "domain_exact", "image_exact"]);
    for k in 1..=spec.level {
        let d = level_union_measure(&spec, Side::Domain, k)?;
        let i = level_union_measure(&spec, Side::Image, k)?;
        let exact = |m: &crate::cantor::MeasureValue| m.exact().map(|r| r.to_string()).unwrap_or_default();
        t.push(vec![k.to_string(), num(d.to_f64()), num(i.to_f64()), exact(&d), exact(&i)])?;
    }
    let mut out = Outcome::table("level_measures.csv", t, "OK");
    if spec.n == 2 && spec.level >= 1 {
        let f = PiecewiseRadialMap::new(spec.clone())?;
        let cubes = f.level_cubes(spec.level)?;
        // Frame covering every image cube.
        let reach = cubes
            .iter()
            .flat_map(|c| c.image.upper().into_iter().chain(c.image.lower().into_iter().map(|v| -v)))
            .fold(1.0_f64, f64::max);
        let m = a.raster.max(1);
        let mut r = Raster::new(m, m);
        let px = 2.0 * reach / m as f64;
        for c in &cubes {
            let (lo, hi) = (c.image.lower(), c.image.upper());
            let i0 = ((lo[0] + reach) / px).floor().max(0.0) as usize;
            let i1 = (((hi[0] + reach) / px).ceil() as usize).min(m);
            let j0 = ((lo[1] + reach) / px).floor().max(0.0) as usize;
            let j1 = (((hi[1] + reach) / px).ceil() as usize).min(m);
            for i in i0..i1 {
                for j in j0..j1 {
                    r.set_from_bottom(i, j, u16::MAX);
                }
            }
        }
        out.rasters.push(("image_set.pgm".into(), r));
    }
    Ok(out)
}

fn run_evaluate(a: &EvaluateArgs) -> Result<Outcome> {
    let f = builtin_map(&a.map)?;
    let n = f.dim();
    if a.grid < 2 {
        return Err(Error::Config("evaluate needs --grid >= 2".into()));
    }
    let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    header.extend((0..n).map(|i| format!("f{i}")));
    header.push("jacobian".into());
    let mut t = Table::new(&header);
    let total = a.grid.pow(n as u32);
    for mut idx in 0..total {
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let v = -1.0 + 2.0 * (idx % a.grid) as f64 / (a.grid - 1) as f64;
                idx /= a.grid;
                v
            })
            .collect();
        let fx = f.eval(&x);
        let mut row: Vec<String> = x.iter().chain(&fx).map(|v| num(*v)).collect();
        row.push(f.jacobian(&x).map(num).unwrap_or_default());
        t.push(row)?;
    }
    Ok(Outcome::table("evaluate.csv", t, "OK"))
}

fn run_seminorm(a: &SeminormArgs, seed: u64) -> Result<Outcome> {
    let f = builtin_map(&a.map)?;
    let n = f.dim();
    let cube = SupCube::new(vec![0.0; n], a.half_side)?;
    let domain = match a.slice_axis {
        Some(axis) => SeminormDomain::Slice {
            cube,
            axis,
            offset: a.slice_offset,
        },
        None => SeminormDomain::Cube(cube),
    };
    let quadrature = match a.samples {
        Some(samples) => Quadrature::MonteCarlo { samples, seed },
        None => Quadrature::Grid(a.grid),
    };
    let mut params = SeminormParams::new(a.s, a.p, domain.clone(), quadrature)?;
    if let Some(h) = a.holder_exponent {
        params = params.with_holder_exponent(h)?;
    }
    let est = gagliardo_seminorm(f.as_ref(), &params)?;
    let mut t = Table::new(&["resolution", "estimate", "method", "s", "p", "domain"]);
    for (res, v) in &est.history {
        t.push(vec![
            res.to_string(),
            num(*v),
            est.method.clone(),
            num(a.s),
            num(a.p),
            domain.describe(),
        ])?;
    }
    Ok(Outcome::table("seminorm.csv", t, "OK"))
}

fn run_degree(a: &DegreeArgs) -> Result<Outcome> {
    let f = builtin_map(&a.map)?;
    let n = f.dim();
    check_target(&a.y, n)?;
    let cube = SupCube::new(vec![0.0; n], a.half_side)?;
    let gf = GridFunction::sample(f.as_ref(), RegularGrid::new(cube.clone(), a.grid)?)?;
    let mut t = Table::new(&["map", "y", "degree", "boundary_gap", "interpolation_error", "status"]);
    let status = match degree(&gf, &Domain::Cube(cube), &a.y) {
        Ok(r) => {
            t.push(vec![
                f.label(),
                point(&a.y),
                r.value.to_string(),
                num(r.boundary_gap),
                num(r.interpolation_error),
                "CERTIFIED".into(),
            ])?;
            "CERTIFIED"
        }
        Err(e @ (Error::RefineGrid { .. } | Error::Degenerate { .. })) => {
            t.push(vec![f.label(), point(&a.y), String::new(), String::new(), String::new(), format!("INCONCLUSIVE: {e}")])?;
            "INCONCLUSIVE"
        }
        Err(e) => return Err(e),
    };
    Ok(Outcome::table("degree.csv", t, status))
}

fn run_cov(a: &CovArgs) -> Result<Outcome> {
    let f = builtin_map(&a.map)?;
    let n = f.dim();
    check_target(&a.psi_center, n)?;
    let psi = PolyBump::new(a.psi_center.clone(), a.psi_radius, 3)?;
    let ms = MollifierSettings::halving(a.scale, 3, 4);
    let c = change_of_variables_check(f.as_ref(), &SupCube::unit(n), &psi, &ms, a.grid, a.image_nodes)?;
    let mut t = Table::new(&["map", "psi", "lhs", "rhs", "difference", "relative_difference", "status"]);
    t.push(vec![
        f.label(),
        psi_label(&psi),
        num(c.lhs.limit),
        num(c.rhs),
        num(c.difference),
        num(c.relative_difference),
        c.status.to_string(),
    ])?;
    Ok(Outcome::table("cov_check.csv", t, c.status.to_string()))
}

fn psi_label(p: &PolyBump) -> String {
    format!("bump({};r={})", point(&p.center), p.radius)
}

fn run_cn(a: &CnArgs) -> Result<Outcome> {
    let f = builtin_map(&a.map)?;
    let n = f.dim();
    let u = cube_from(&a.u, n)?;
    let settings = CnSettings::with_base(a.h, a.source_grid, a.raster);
    let r = ciarlet_necas_check(f.as_ref(), &SupCube::unit(n), &u, &settings)?;
    let mut t = Table::new(&[
        "map",
        "u",
        "jacobian_measure",
        "image_lower",
        "image_upper",
        "boundary_image_measure",
        "verdict",
    ]);
    t.push(vec![
        f.label(),
        u.describe(),
        num(r.jacobian_measure),
        num(r.image.lower),
        num(r.image.upper),
        num(r.boundary_image_measure),
        r.verdict.to_string(),
    ])?;
    let mut b = Table::new(&["cutoff_width", "pairing"]);
    for (d, v) in &r.bracketing {
        b.push(vec![num(*d), num(*v)])?;
    }
    Ok(Outcome {
        tables: vec![("verify_cn.csv".into(), t), ("cn_bracketing.csv".into(), b)],
        rasters: Vec::new(),
        status: r.verdict.to_string(),
    })
}

fn run_lusin(a: &LusinArgs) -> Result<Outcome> {
    let spec = CantorMapSpec::lusin_n(a.n, a.alpha, a.level)?;
    let mut t = Table::new(&["level", "pointwise_integral", "image_measure", "full_measure", "singular_gap"]);
    let full = 2f64.powi(a.n as i32);
    for k in 1..=a.level {
        let pw = pointwise_jacobian_integral(&spec, k)?;
        let img = level_union_measure(&spec, Side::Image, k)?.to_f64();
        t.push(vec![k.to_string(), num(pw), num(img), num(full), num(full - pw)])?;
    }
    let limit = PiecewiseRadialMap::with_mode(spec.clone(), EvalMode::Limit { tolerance: 1e-6 })?;
    let q0 = SupCube::unit(a.n);
    let r = ciarlet_necas_check(&limit, &q0, &q0, &CnSettings::with_base(a.h, 256, 256))?;
    let pw = pointwise_jacobian_integral(&spec, a.level)?;
    let mut s = Table::new(&["jacobian_measure", "pointwise_integral", "gap", "expected_gap", "verdict"]);
    let expected = spec.image_limit_measure().unwrap_or(f64::NAN);
    s.push(vec![
        num(r.jacobian_measure),
        num(pw),
        num(r.jacobian_measure - pw),
        num(expected),
        r.verdict.to_string(),
    ])?;
    Ok(Outcome {
        tables: vec![("lusin_levels.csv".into(), t), ("lusin_summary.csv".into(), s)],
        rasters: Vec::new(),
        status: r.verdict.to_string(),
    })
}

fn run_orientation(a: &OrientationArgs, seed: u64) -> Result<Outcome> {
    let spec = CantorMapSpec::orientation_default(2, a.level)?;
    let r = reflection_diagnostic(&spec, a.samples, a.targets, a.grid, seed)?;
    let minus_one = r.degrees.iter().filter(|d| **d == -1).count();
    let mut t = Table::new(&[
        "defined_points",
        "positive_jacobian",
        "positive_fraction",
        "targets",
        "degree_minus_one",
        "uncertified",
    ]);
    t.push(vec![
        r.defined.to_string(),
        r.positive.to_string(),
        num(r.positive_fraction()),
        a.targets.to_string(),
        minus_one.to_string(),
        r.uncertified.to_string(),
    ])?;
    // Sign map of the reflected limit Jacobian: white positive, black negative,
    // mid-gray where undefined.
    let f = PiecewiseRadialMap::with_mode(spec, EvalMode::Limit { tolerance: 1e-5 })?.reflected();
    let m = a.raster.max(1);
    let mut img = Raster::new(m, m);
    for i in 0..m {
        for j in 0..m {
            let x = [-1.0 + (i as f64 + 0.5) * 2.0 / m as f64, -1.0 + (j as f64 + 0.5) * 2.0 / m as f64];
            let v = match f.analytic_differential(&x) {
                Ok(d) if d.jacobian > 0.0 => u16::MAX,
                Ok(_) => 0,
                Err(_) => 32768,
            };
            img.set_from_bottom(i, j, v);
        }
    }
    let ok = r.positive_fraction() >= 0.999 && minus_one == a.targets;
    Ok(Outcome {
        tables: vec![("verify_orientation.csv".into(), t)],
        rasters: vec![("jacobian_sign.pgm".into(), img)],
        status: if ok { "HOLDS" } else { "INCONCLUSIVE" }.into(),
    })
}

fn run_stability(a: &StabilityArgs) -> Result<Outcome> {
    let level = *a.levels.iter().max().ok_or_else(|| Error::Config("no levels".into()))?;
    let spec = CantorMapSpec::lusin_n(2, a.alpha, level)?;
    let u = cube_from(&a.u, 2)?;
    let settings = CnSettings::with_base(a.h, a.source_grid, a.raster);
    let st = cn_stability_experiment(&spec, &a.levels, &u, &settings, a.contraction)?;
    let mut t = Table::new(&[
        "level",
        "verdict",
        "jacobian_measure",
        "image_lower",
        "image_upper",
        "image_measure",
        "gap_to_previous",
    ]);
    for (i, r) in st.rows.iter().enumerate() {
        t.push(vec![
            r.level.to_string(),
            r.verdict.to_string(),
            num(r.jacobian_measure),
            num(r.image.lower),
            num(r.image.upper),
            num(r.image_measure),
            if i == 0 { String::new() } else { num(st.gaps[i - 1]) },
        ])?;
    }
    Ok(Outcome::table("cn_stability.csv", t, st.converging.to_string()))
}

fn run_preimages(a: &PreimageArgs) -> Result<Outcome> {
    let f = builtin_map(&a.map)?;
    let n = f.dim();
    check_target(&a.y, n)?;
    let gf = GridFunction::sample(f.as_ref(), RegularGrid::new(SupCube::unit(n), a.grid)?)?;
    let c = preimage_count(&gf, &a.y, a.eps)?;
    let mut t = Table::new(&["map", "y", "epsilon", "components", "minimum_epsilon"]);
    t.push(vec![
        f.label(),
        point(&a.y),
        num(a.eps),
        c.components.to_string(),
        num(c.minimum_epsilon),
    ])?;
    Ok(Outcome::table("preimages.csv", t, "OK"))
}

/// Runs a parsed command without touching the file system.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Construct(a) => run_construct(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Seminorm(a) => run_seminorm(a, cli.seed),
        Command::Degree(a) => run_degree(a),
        Command::CovCheck(a) => run_cov(a),
        Command::VerifyCn(a) => run_cn(a),
        Command::VerifyLusin(a) => run_lusin(a),
        Command::VerifyOrientation(a) => run_orientation(a, cli.seed),
        Command::CnStability(a) => run_stability(a),
        Command::Preimages(a) => run_preimages(a),
    }
}

/// Inserts `--key=value` flags from the `--config` file right after the
/// subcommand name, so explicit flags given later take precedence.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(Path::new(&path))
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.to_string_lossy())))?;
    let entries = parse_config(&text)?;
    let pos = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .ok_or_else(|| Error::Config("missing subcommand".into()))?;
    let mut out = args[..=pos].to_vec();
    out.extend(entries.iter().map(|(k, v)| OsString::from(format!("--{k}={v}"))));
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

/// Parses, runs and writes outputs; returns the process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let args = match expand_config(args.into_iter().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return 2;
    }
    // A pool may already exist when called repeatedly in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    match run(&cli, &args) {
        Ok(status) => {
            println!("status={status}");
            0
        }
        Err(e @ (Error::Config(_) | Error::Parameter(_) | Error::EmbeddingInapplicable { .. })) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(cli: &Cli, args: &[OsString]) -> Result<String> {
    let outcome = execute(cli)?;
    fs::create_dir_all(&cli.out)?;
    let mut manifest = Manifest::new();
    manifest.set("program", concat!("fracjac ", env!("CARGO_PKG_VERSION")));
    let command = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    manifest.set("args", command);
    manifest.set("threads", cli.threads);
    manifest.set("seed", cli.seed);
    manifest.set("status", &outcome.status);
    for (name, table) in &outcome.tables {
        let path = cli.out.join(name);
        table.write(&path)?;
        manifest.add_file(path);
    }
    for (name, raster) in &outcome.rasters {
        let path = cli.out.join(name);
        raster.write_pgm(&path)?;
        manifest.add_file(path);
    }
    manifest.write(&cli.out)?;
    Ok(outcome.status)
}
