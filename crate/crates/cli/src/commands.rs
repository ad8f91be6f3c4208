use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use mintube::analytic::{
    catenoid_flux, catenoid_mesh, catenoid_total_curvature, ncatenoid_lifetime, profile_height,
    AnalyticError, CatenoidSpec,
};
use mintube::flux::{verify_identity_11, verify_identity_12, LifetimeBound};
use mintube::mesh::obj::{read_obj, write_obj};
use mintube::mesh::{slice, TriMesh};
use mintube::report::{analyze, refinement_delta, Relation, TubeReport, SCHEMA_VERSION};
use mintube::solver::{
    solve_annulus, AnnulusMesh, AnnulusProblem, ConvergenceReport, SolverOptions,
};
use mintube::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cli::{
    AnalyzeArgs, AnnulusArgs, CatenoidArgs, Cli, Command, NcatenoidArgs, Resolution, SweepArgs,
    Verify,
};

/// Tolerances of the built-in checks.
pub mod tol {
    pub const FLUX_RELATIVE: f64 = 1e-3;
    pub const FLUX_HORIZONTAL: f64 = 1e-6;
    pub const CATENOID_ALPHA: f64 = 1e-5;
    pub const CATENOID_FLOW_DEVIATION: f64 = 1e-3;
    pub const ANNULUS_FLOW_DEVIATION: f64 = 1e-2;
    pub const IDENTITY: f64 = 1e-3;
    pub const CATENOID_CAPACITY: f64 = 2e-2;
    pub const ANNULUS_CAPACITY: f64 = 5e-2;
    pub const CATENOID_CURVATURE: f64 = 2e-2;
    pub const COAXIAL_ALPHA: f64 = 1e-4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    ChecksFailed,
}

impl Outcome {
    fn from_pass(passed: bool) -> Self {
        if passed {
            Self::Passed
        } else {
            Self::ChecksFailed
        }
    }
}

/// Output files are collected in memory and written only once every step
/// has succeeded.
struct Outputs {
    dir: PathBuf,
    quiet: bool,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path, quiet: bool) -> Self {
        Self {
            dir: dir.to_owned(),
            quiet,
            files: Vec::new(),
        }
    }

    fn say(&self, line: std::fmt::Arguments) {
        if !self.quiet {
            println!("{line}");
        }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_owned(), bytes));
    }

    fn mesh(&mut self, name: &str, mesh: &TriMesh) -> Result<()> {
        let mut buf = Vec::new();
        write_obj(mesh, &mut buf)?;
        self.add(name, buf);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.add(name, buf);
        Ok(())
    }

    fn report(&mut self, stem: &str, report: &TubeReport) -> Result<()> {
        let mut json = Vec::new();
        report.write_json(&mut json)?;
        self.add(&format!("{stem}_report.json"), json);
        let mut csv = Vec::new();
        report.write_slice_csv(&mut csv)?;
        self.add(&format!("{stem}_slices.csv"), csv);
        Ok(())
    }

    fn commit(self) -> Result<()> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            self.say(format_args!("wrote {}", path.display()));
        }
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let mut out = Outputs::new(&cli.out, cli.quiet);
    let outcome = match &cli.command {
        Command::Catenoid(args) => catenoid(args, &mut out)?,
        Command::Ncatenoid(args) => ncatenoid(args, &mut out)?,
        Command::SolveAnnulus(args) => solve(args, &mut out)?,
        Command::Analyze(args) => analyze_obj(args, &mut out)?,
        Command::Sweep(args) => sweep(args, &mut out)?,
    };
    out.commit()?;
    Ok(outcome)
}

/// `count` evenly spaced levels strictly inside `(lo, hi)`.
pub fn interior_levels(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|k| lo + (hi - lo) * k as f64 / (count + 1) as f64)
        .collect()
}

fn print_checks(out: &Outputs, report: &TubeReport) {
    for c in &report.checks {
        let rel = match c.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        let tag = if c.passed { "PASS" } else { "FAIL" };
        out.say(format_args!(
            "{tag} {}: {:e} {rel} {:e}",
            c.name, c.value, c.threshold
        ));
    }
}

fn lifetime_value(bound: &LifetimeBound) -> f64 {
    bound.value().unwrap_or(f64::INFINITY)
}

/// A finite bound must cover the observed height; an unbounded one holds
/// trivially and is recorded as such.
fn lifetime_check(report: &mut TubeReport, height: f64) {
    match report.lifetime_bound {
        LifetimeBound::Finite { value, .. } => {
            report.check("lifetime_bound", value, Relation::AtLeast, height);
        }
        LifetimeBound::Unbounded => {
            report.check("lifetime_bound_unbounded", 1.0, Relation::AtLeast, 1.0);
        }
    }
}

fn catenoid(args: &CatenoidArgs, out: &mut Outputs) -> Result<Outcome> {
    let (v_min, v_max) = (args.v[0], args.v[1]);
    let spec = CatenoidSpec {
        neck_radius: args.a,
        v_min,
        v_max,
        nu: args.res.nu,
        nv: args.res.nv,
    };
    let mesh = catenoid_mesh(&spec)?;
    let levels = if args.levels.is_empty() {
        interior_levels(v_min, v_max, 3)
    } else {
        args.levels.clone()
    };
    let mut report = analyze(&mesh, "catenoid", &levels)?;
    report.config = serde_json::to_value(args)?;

    if args.verify == Verify::All {
        let exact = catenoid_flux(args.a);
        let j = Vec3::from(report.flow);
        report.check(
            "J3_relative_error",
            (j.z - exact.z).abs() / exact.z,
            Relation::AtMost,
            tol::FLUX_RELATIVE,
        );
        report.check(
            "J_horizontal_ratio",
            j.xy().norm() / j.norm(),
            Relation::AtMost,
            tol::FLUX_HORIZONTAL,
        );
        report.check("alpha", report.alpha, Relation::AtMost, tol::CATENOID_ALPHA);
        report.check(
            "flow_deviation_ratio",
            report.flow_deviation / j.norm(),
            Relation::AtMost,
            tol::CATENOID_FLOW_DEVIATION,
        );
        report.check(
            "identity_residual",
            report.max_identity_residual(),
            Relation::AtMost,
            tol::IDENTITY,
        );
        report.check(
            "theorem1_min_margin",
            report.min_theorem1_margin(),
            Relation::AtLeast,
            0.0,
        );
        report.check(
            "eq17_min_margin",
            report.min_eq17_margin(),
            Relation::AtLeast,
            0.0,
        );
        let unbounded = matches!(report.lifetime_bound, LifetimeBound::Unbounded);
        report.check(
            "lifetime_bound_unbounded",
            f64::from(u8::from(unbounded)),
            Relation::AtLeast,
            1.0,
        );
        if let Some(cap) = &report.capacity {
            let err = cap.coarea_relative_error;
            report.check(
                "capacity_coarea_relative_error",
                err,
                Relation::AtMost,
                tol::CATENOID_CAPACITY,
            );
        }
        let g_exact = catenoid_total_curvature(args.a, v_min, v_max)?;
        let g_err = (report.total_curvature.g - g_exact).abs() / g_exact;
        report.check(
            "total_curvature_relative_error",
            g_err,
            Relation::AtMost,
            tol::CATENOID_CURVATURE,
        );
    }
    print_checks(out, &report);
    out.mesh("catenoid.obj", &mesh)?;
    out.report("catenoid", &report)?;
    Ok(Outcome::from_pass(report.passed))
}

#[derive(Debug, Serialize)]
struct LifetimeRow {
    n: usize,
    f0: f64,
    /// `None` serialises as "infinite".
    #[serde(serialize_with = "finite_or_infinite")]
    lifetime: Option<f64>,
    /// Height above the neck where the radius reaches `cap·f0`.
    half_heights: Vec<f64>,
}

fn finite_or_infinite<S: serde::Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str("infinite"),
    }
}

#[derive(Debug, Serialize)]
struct LifetimeTable<'a> {
    schema: u32,
    config: &'a NcatenoidArgs,
    rows: Vec<LifetimeRow>,
    decreasing_in_n: bool,
}

fn ncatenoid(args: &NcatenoidArgs, out: &mut Outputs) -> Result<Outcome> {
    ensure!(!args.n.0.is_empty(), "no dimensions given");
    ensure!(
        args.caps.iter().all(|&c| c >= 1.0),
        "radius caps must be at least 1 (the neck)"
    );
    let mut rows = Vec::new();
    for &n in &args.n.0 {
        let lifetime = match ncatenoid_lifetime(n, args.f0) {
            Ok(v) => Some(v),
            Err(AnalyticError::InfiniteLifetime) => None,
            Err(e) => return Err(e).with_context(|| format!("n = {n}")),
        };
        let half_heights = args
            .caps
            .iter()
            .map(|&c| profile_height(n, args.f0, c * args.f0))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(LifetimeRow {
            n,
            f0: args.f0,
            lifetime,
            half_heights,
        });
    }
    let finite: Vec<f64> = rows.iter().filter_map(|r| r.lifetime).collect();
    let decreasing_in_n = finite.windows(2).all(|w| w[1] < w[0]);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n".to_owned(), "f0".to_owned(), "lifetime".to_owned()];
    header.extend(args.caps.iter().map(|c| format!("half_height_at_{c}")));
    w.write_record(&header)?;
    for r in &rows {
        let mut rec = vec![r.n.to_string(), r.f0.to_string()];
        rec.push(
            r.lifetime
                .map_or_else(|| "infinite".to_owned(), |v| v.to_string()),
        );
        rec.extend(r.half_heights.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    for r in &rows {
        match r.lifetime {
            Some(v) => out.say(format_args!("n={} lifetime {v}", r.n)),
            None => out.say(format_args!(
                "n={} lifetime infinite (half-heights {:?})",
                r.n, r.half_heights
            )),
        }
    }
    out.say(format_args!(
        "{} finite life-times decreasing in n",
        if decreasing_in_n { "PASS" } else { "FAIL" }
    ));
    out.add("ncatenoid.csv", w.into_inner()?);
    out.json(
        "ncatenoid.json",
        &LifetimeTable {
            schema: SCHEMA_VERSION,
            config: args,
            rows,
            decreasing_in_n,
        },
    )?;
    Ok(Outcome::from_pass(decreasing_in_n))
}

fn annulus_problem(
    r: &[f64],
    heights: &[f64],
    offset: f64,
    res: Resolution,
) -> Result<AnnulusProblem> {
    Ok(AnnulusProblem::offset_circles(
        r[0], r[1], heights[0], heights[1], offset, res.nu, res.nv,
    )?)
}

fn solve_and_analyze(
    problem: &AnnulusProblem,
    options: &SolverOptions,
    levels: &[f64],
) -> Result<(AnnulusMesh, ConvergenceReport, TubeReport)> {
    let (mesh, conv) = solve_annulus(problem, options)?;
    let report = analyze(&mesh.mesh, "solve-annulus", levels)?;
    Ok((mesh, conv, report))
}

/// Theorem checks shared by single solves and sweeps; `eps` is the
/// discretization error estimate.
fn annulus_checks(report: &mut TubeReport, offset: f64, height: f64, eps: f64) {
    if offset == 0.0 {
        report.check(
            "alpha_coaxial",
            report.alpha,
            Relation::AtMost,
            tol::COAXIAL_ALPHA,
        );
    } else {
        report.check(
            "alpha_positive",
            report.alpha,
            Relation::AtLeast,
            mintube::flux::ALPHA_ZERO_TOL,
        );
    }
    report.check(
        "theorem1_min_margin",
        report.min_theorem1_margin(),
        Relation::AtLeast,
        -eps,
    );
    report.check(
        "eq17_min_margin",
        report.min_eq17_margin(),
        Relation::AtLeast,
        -eps,
    );
    lifetime_check(report, height);
}

fn solve(args: &AnnulusArgs, out: &mut Outputs) -> Result<Outcome> {
    let problem = annulus_problem(&args.r, &args.heights, args.offset, args.res)?;
    ensure!(args.slices > 0, "need at least one slice level");
    let options = SolverOptions {
        max_iterations: args.max_iterations,
        tolerance: args.tolerance,
        ..SolverOptions::default()
    };
    let (t1, t2) = problem.heights();
    let levels = interior_levels(t1, t2, args.slices);
    let (mesh, conv, mut report) = solve_and_analyze(&problem, &options, &levels)?;
    report.config = serde_json::to_value(args)?;
    out.say(format_args!(
        "converged in {} iterations, residual {:e}",
        conv.iterations, conv.final_residual
    ));

    if args.verify == Verify::All {
        let fine_problem =
            annulus_problem(&args.r, &args.heights, args.offset, args.res.doubled())?;
        let (_, _, fine) =
            solve_and_analyze(&fine_problem, &options, &levels).context("refinement solve")?;
        let eps = refinement_delta(&report, &fine).context("refined slices do not match")?;
        report.eps_disc = Some(eps);
        report.check(
            "solver_residual",
            conv.final_residual,
            Relation::AtMost,
            args.tolerance,
        );
        annulus_checks(&mut report, args.offset, t2 - t1, eps);
        let jn = report.flow_norm;
        report.check(
            "flow_deviation_ratio",
            report.flow_deviation / jn,
            Relation::AtMost,
            tol::ANNULUS_FLOW_DEVIATION,
        );
        report.check(
            "identity_residual",
            report.max_identity_residual(),
            Relation::AtMost,
            tol::IDENTITY,
        );
        if let Some(cap) = &report.capacity {
            let err = cap.coarea_relative_error;
            report.check(
                "capacity_coarea_relative_error",
                err,
                Relation::AtMost,
                tol::ANNULUS_CAPACITY,
            );
        }
    }
    print_checks(out, &report);
    out.mesh("annulus.obj", &mesh.mesh)?;
    out.json("annulus_convergence.json", &conv)?;
    out.report("annulus", &report)?;
    Ok(Outcome::from_pass(report.passed))
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn analyze_obj(args: &AnalyzeArgs, out: &mut Outputs) -> Result<Outcome> {
    let file =
        fs::File::open(&args.mesh).with_context(|| format!("opening {}", args.mesh.display()))?;
    let mesh = read_obj(BufReader::new(file))
        .with_context(|| format!("reading {}", args.mesh.display()))?;
    let levels = if args.levels.is_empty() {
        let (lo, hi) = mesh.height_range();
        interior_levels(lo, hi, 5)
    } else {
        args.levels.clone()
    };
    let mut report = analyze(&mesh, "analyze", &levels)?;
    report.config = serde_json::to_value(args)?;

    if args.verify == Verify::All {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let mut worst: f64 = 0.0;
        for &t in &levels {
            for cycle in &slice(&mesh, t)?.cycles {
                let q = random_unit(&mut rng);
                let r12 = verify_identity_12(cycle, &q)?;
                worst = worst
                    .max(verify_identity_11(cycle, &q)?.relative())
                    .max(r12.plus.relative())
                    .max(r12.minus.relative());
            }
        }
        report.check(
            "identity_residual",
            report.max_identity_residual(),
            Relation::AtMost,
            tol::IDENTITY,
        );
        report.check(
            "identity_residual_random_q",
            worst,
            Relation::AtMost,
            tol::IDENTITY,
        );
        report.check(
            "theorem1_min_margin",
            report.min_theorem1_margin(),
            Relation::AtLeast,
            0.0,
        );
        report.check(
            "eq17_min_margin",
            report.min_eq17_margin(),
            Relation::AtLeast,
            0.0,
        );
        let (lo, hi) = mesh.height_range();
        lifetime_check(&mut report, hi - lo);
    }
    print_checks(out, &report);
    let stem = args
        .mesh
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh")
        .to_owned();
    out.report(&stem, &report)?;
    Ok(Outcome::from_pass(report.passed))
}

#[derive(Debug, Serialize)]
struct SweepRow {
    offset: f64,
    iterations: usize,
    alpha: f64,
    min_theorem1_margin: f64,
    min_eq17_margin: f64,
    eps_disc: f64,
    eq4_bound: f64,
    /// Slab height over the bound: how tight the life-time estimate is.
    eq4_ratio: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct SweepSummary<'a> {
    schema: u32,
    config: &'a SweepArgs,
    rows: &'a [SweepRow],
    alpha_increasing: bool,
    passed: bool,
}

fn sweep(args: &SweepArgs, out: &mut Outputs) -> Result<Outcome> {
    if args.offsets.is_empty() {
        bail!("empty offset list");
    }
    ensure!(args.slices > 0, "need at least one slice level");
    let options = SolverOptions::default();
    // validate every problem before solving any
    let problems = args
        .offsets
        .iter()
        .map(|&o| {
            Ok((
                annulus_problem(&args.r, &args.heights, o, args.res)?,
                annulus_problem(&args.r, &args.heights, o, args.res.doubled())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (t1, t2) = (args.heights[0], args.heights[1]);
    let levels = interior_levels(t1, t2, args.slices);
    let mut rows = Vec::new();
    for (&offset, (coarse, fine)) in args.offsets.iter().zip(&problems) {
        let (_, conv, mut report) = solve_and_analyze(coarse, &options, &levels)
            .with_context(|| format!("offset {offset}"))?;
        let (_, _, fine_report) = solve_and_analyze(fine, &options, &levels)
            .with_context(|| format!("offset {offset}, refined"))?;
        let eps = refinement_delta(&report, &fine_report).context("refined slices do not match")?;
        annulus_checks(&mut report, offset, t2 - t1, eps);
        let bound = lifetime_value(&report.lifetime_bound);
        rows.push(SweepRow {
            offset,
            iterations: conv.iterations,
            alpha: report.alpha,
            min_theorem1_margin: report.min_theorem1_margin(),
            min_eq17_margin: report.min_eq17_margin(),
            eps_disc: eps,
            eq4_bound: bound,
            eq4_ratio: (t2 - t1) / bound,
            passed: report.passed,
        });
    }
    let mut by_offset: Vec<&SweepRow> = rows.iter().collect();
    by_offset.sort_by(|a, b| a.offset.abs().total_cmp(&b.offset.abs()));
    let alpha_increasing = by_offset.windows(2).all(|w| w[1].alpha >= w[0].alpha);
    let passed = alpha_increasing && rows.iter().all(|r| r.passed);
    for r in &rows {
        out.say(format_args!(
            "{} offset {}: alpha {:e}, margin {:e}, eps {:e}, ratio {:e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.offset,
            r.alpha,
            r.min_theorem1_margin,
            r.eps_disc,
            r.eq4_ratio
        ));
    }
    out.say(format_args!(
        "{} alpha increases with |offset|",
        if alpha_increasing { "PASS" } else { "FAIL" }
    ));

    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    out.add("sweep.csv", w.into_inner()?);
    out.json(
        "sweep.json",
        &SweepSummary {
            schema: SCHEMA_VERSION,
            config: args,
            rows: &rows,
            alpha_increasing,
            passed,
        },
    )?;
    Ok(Outcome::from_pass(passed))
}
