//! Command-line surface for the real-gerbe calculus library: file I/O,
//! fixture and random-data generators, verification suites, and reports.
//! Every subcommand is a thin adapter — all numeric logic lives in the
//! library crate.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use gerbe_core::bundle::{
    ctilde_class, holonomy_form, is_flat, loop_holonomy, validate_bundle, w1_class, Metric0,
};
use gerbe_core::cohomology::{betti, solve_real, solve_sign, Field};
use gerbe_core::error::{GerbeError, Result};
use gerbe_core::fixtures;
use gerbe_core::gerbe::{
    build_adaptation, gerbe_class, holonomy_class, holonomy_form_b, object_connection,
    overlap_holonomy_forms, surface_holonomy, trivialize, validate, GerbeConnection,
};
use gerbe_core::io;
use gerbe_core::report::{Report, RunConfig, Status};
use gerbe_core::simplicial::{loop_sum, Complex, Sign};
use gerbe_core::transgression::{
    mapspace_section, mapspace_wellposed, section_equivalent, t3_coordinate_tori, torus_holonomy,
};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(name = "gerbetool", about = "Real line bundles and real gerbes on simplicial complexes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Numeric tolerance for residual checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for random data generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Trial count for randomized suites.
    #[arg(long, global = true, default_value_t = 10)]
    trials: usize,
    /// Complex file.
    #[arg(short = 'c', long, global = true)]
    complex: Option<PathBuf>,
    /// Gerbe file (transitions, optional connection and metric).
    #[arg(short = 'g', long, global = true)]
    gerbe: Option<PathBuf>,
    /// Bundle file (signs, logs, optional metric).
    #[arg(short = 'b', long, global = true)]
    bundle: Option<PathBuf>,
    /// Simplicial map file.
    #[arg(short = 'm', long, global = true)]
    map: Option<PathBuf>,
    /// Loop file.
    #[arg(short = 'l', long, global = true)]
    r#loop: Option<PathBuf>,
    /// Output file or directory (defaults to stdout / current directory).
    #[arg(short = 'o', long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check cocycle and compatibility conditions of the given data.
    Validate,
    /// Compute characteristic classes and Betti numbers.
    Classify,
    /// Loop holonomy of a bundle or surface holonomy of a gerbe.
    Holonomy,
    /// Build an adaptation from a gerbe connection and metric.
    Adapt,
    /// Solve for an object (trivialization) and flat object connection.
    Trivialize,
    /// Run loop-space / map-space transgression suites.
    Transgress,
    /// Emit fixture or random data files.
    Generate {
        /// Fixture name (circle, torus, klein, rp2, t3, rp3, cylinder, disk,
        /// pants, sphere, prism-cylinder, prism-pants, random-bundle,
        /// random-gerbe).
        name: String,
        /// Size parameter for sized fixtures.
        #[arg(long)]
        size: Option<usize>,
    },
    /// Re-render a previously written JSON report.
    Report {
        /// Path of the JSON report to read.
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = RunConfig { tolerance: cli.tol, seed: cli.seed, trials: cli.trials };
    match run(&cli, config) {
        Ok(report) => {
            let rendered = match cli.format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json(),
            };
            match &cli.out {
                Some(path) if !path.is_dir() => {
                    if std::fs::write(path, &rendered).is_err() {
                        eprintln!("cannot write {}", path.display());
                        return ExitCode::from(2);
                    }
                }
                _ => print!("{rendered}"),
            }
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn require<'a, T>(opt: &'a Option<T>, what: &str) -> Result<&'a T> {
    opt.as_ref()
        .ok_or_else(|| GerbeError::ReferenceError(format!("this command needs {what}")))
}

fn load_complex(path: &Path) -> Result<Complex> {
    let f: io::ComplexFile = io::read_json(path)?;
    io::complex_from_file(&f)
}

fn run(cli: &Cli, config: RunConfig) -> Result<Report> {
    match &cli.cmd {
        Cmd::Validate => cmd_validate(cli, config),
        Cmd::Classify => cmd_classify(cli, config),
        Cmd::Holonomy => cmd_holonomy(cli, config),
        Cmd::Adapt => cmd_adapt(cli, config),
        Cmd::Trivialize => cmd_trivialize(cli, config),
        Cmd::Transgress => cmd_transgress(cli, config),
        Cmd::Generate { name, size } => cmd_generate(cli, config, name, *size),
        Cmd::Report { input } => {
            let report: Report = io::read_json(input)?;
            Ok(report)
        }
    }
}

fn cmd_validate(cli: &Cli, config: RunConfig) -> Result<Report> {
    let mut report = Report::new("validate", config);
    let c = load_complex(require(&cli.complex, "a complex file (-c)")?)?;
    report.pass("complex", None);
    if let Some(path) = &cli.bundle {
        let bf: io::BundleFile = io::read_json(path)?;
        let (b, _h) = io::bundle_from_file(&c, &bf)?;
        let bad = validate_bundle(&c, &b);
        if bad.is_empty() {
            report.pass("bundle-cocycle", None);
        } else {
            report.fail("bundle-cocycle", None, format!("sign cocycle fails on {bad:?}"));
        }
    }
    if let Some(path) = &cli.gerbe {
        let gf: io::GerbeFile = io::read_json(path)?;
        let (g, conn, h) = io::gerbe_from_file(&c, &gf)?;
        let violations = validate(&c, &g, conn.as_ref(), h.as_ref(), config.tolerance);
        if violations.is_empty() {
            report.pass("gerbe-data", None);
        } else {
            report.fail("gerbe-data", None, violations.join("; "));
        }
    }
    Ok(report)
}

fn cmd_classify(cli: &Cli, config: RunConfig) -> Result<Report> {
    let mut report = Report::new("classify", config);
    let c = load_complex(require(&cli.complex, "a complex file (-c)")?)?;
    let dim = c.dim();
    for field in [Field::GF2, Field::R] {
        let name = match field {
            Field::GF2 => "betti-gf2",
            Field::R => "betti-r",
        };
        let bs: Vec<String> = (0..=dim).map(|k| betti(&c, k, field).to_string()).collect();
        report.record(name, Status::Pass, None, Some(bs.join(",")));
    }
    if let Some(path) = &cli.bundle {
        let bf: io::BundleFile = io::read_json(path)?;
        let (b, h) = io::bundle_from_file(&c, &bf)?;
        let w1 = w1_class(&c, &b)?;
        let trivial = solve_sign(&c, &w1.rep)?.is_some();
        report.record("w1-class", Status::Pass, None, Some(classword(trivial)));
        if is_flat(&c, &b, config.tolerance) {
            let h = h.unwrap_or_else(|| Metric0::flat(&c));
            let ct = ctilde_class(&c, &b, &h, config.tolerance)?;
            let trivial = solve_real(&c, &ct.rep, config.tolerance)?.is_some();
            report.record("log-holonomy-class", Status::Pass, None, Some(classword(trivial)));
        } else {
            report.skip("log-holonomy-class", "connection is not flat".into());
        }
    }
    if let Some(path) = &cli.gerbe {
        let gf: io::GerbeFile = io::read_json(path)?;
        let (g, conn, _h) = io::gerbe_from_file(&c, &gf)?;
        let cls = gerbe_class(&c, &g)?;
        let trivial = solve_sign(&c, &cls.rep)?.is_some();
        report.record("gerbe-class", Status::Pass, None, Some(classword(trivial)));
        let conn = conn.unwrap_or_else(|| GerbeConnection::zero(&c));
        match holonomy_class(&c, &g, &conn, config.tolerance) {
            Ok(hc) => {
                let ts = solve_sign(&c, &hc.sign.rep)?.is_some();
                let tr = solve_real(&c, &hc.real.rep, config.tolerance)?.is_some();
                report.record("holonomy-class-sign", Status::Pass, None, Some(classword(ts)));
                report.record("holonomy-class-log", Status::Pass, None, Some(classword(tr)));
            }
            Err(GerbeError::NotFlat(res, _)) => {
                report.skip("holonomy-class", format!("connection is not flat ({res:e})"));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

fn classword(trivial: bool) -> String {
    if trivial { "trivial".into() } else { "nontrivial".into() }
}

fn cmd_holonomy(cli: &Cli, config: RunConfig) -> Result<Report> {
    let mut report = Report::new("holonomy", config);
    let c = load_complex(require(&cli.complex, "a complex file (-c)")?)?;
    if let Some(path) = &cli.bundle {
        let bf: io::BundleFile = io::read_json(path)?;
        let (b, h) = io::bundle_from_file(&c, &bf)?;
        let lf: io::LoopFile = io::read_json(require(&cli.r#loop, "a loop file (-l)")?)?;
        let rho = io::loop_from_file(&lf)?;
        rho.validate_on(&c)?;
        let hol = loop_holonomy(&b, &rho)?;
        report.record(
            "loop-holonomy",
            Status::Pass,
            None,
            Some(format!("sign={:?} log={:.12e}", hol.sign, hol.log)),
        );
        if let Some(h) = h {
            // holonomy = (∏ signs)·exp(∫ holonomy form) along the loop
            let theta = holonomy_form(&c, &b, &h);
            let ts = loop_sum(&theta, &rho)?;
            let sgn = rho
                .edges()
                .fold(Sign::PLUS, |a, (p, q)| a * b.sigma.get(&[p, q]).unwrap());
            if sgn == hol.sign {
                report.pass("holonomy-sign-product", None);
            } else {
                report.fail("holonomy-sign-product", None, "sign mismatch".into());
            }
            report.check_residual("holonomy-form-pairing", (hol.log - ts).abs());
        }
    }
    if let Some(gpath) = &cli.gerbe {
        let gf: io::GerbeFile = io::read_json(gpath)?;
        let (g, conn, _h) = io::gerbe_from_file(&c, &gf)?;
        let conn = conn.unwrap_or_else(|| GerbeConnection::zero(&c));
        let f = io::load_map(require(&cli.map, "a map file (-m)")?)?;
        let hol = surface_holonomy(&g, &conn, &f, None, config.tolerance)?;
        report.record(
            "surface-holonomy",
            Status::Pass,
            None,
            Some(format!("sign={:?} log={:.12e}", hol.sign, hol.log)),
        );
    }
    Ok(report)
}

fn cmd_adapt(cli: &Cli, config: RunConfig) -> Result<Report> {
    let mut report = Report::new("adapt", config);
    let c = load_complex(require(&cli.complex, "a complex file (-c)")?)?;
    let gf: io::GerbeFile = io::read_json(require(&cli.gerbe, "a gerbe file (-g)")?)?;
    let (_g, conn, h) = io::gerbe_from_file(&c, &gf)?;
    let conn = conn
        .ok_or_else(|| GerbeError::ReferenceError("gerbe file carries no connection".into()))?;
    let h = h.ok_or_else(|| GerbeError::ReferenceError("gerbe file carries no metric".into()))?;
    let theta = overlap_holonomy_forms(&c, &conn, &h);
    let beta = build_adaptation(&c, &theta)?;
    report.check_residual(
        "adaptation-residual",
        gerbe_core::gerbe::adaptation_residual(&c, &beta, &theta),
    );
    match holonomy_form_b(&c, &conn, &beta, config.tolerance) {
        Ok((_b2, spread)) => report.check_residual("holonomy-form-chart-spread", spread),
        Err(GerbeError::NotFlat(res, _)) => {
            report.skip("holonomy-form", format!("connection is not flat ({res:e})"));
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn cmd_trivialize(cli: &Cli, config: RunConfig) -> Result<Report> {
    let mut report = Report::new("trivialize", config);
    let c = load_complex(require(&cli.complex, "a complex file (-c)")?)?;
    let gf: io::GerbeFile = io::read_json(require(&cli.gerbe, "a gerbe file (-g)")?)?;
    let (g, conn, _h) = io::gerbe_from_file(&c, &gf)?;
    match trivialize(&c, &g)? {
        Some(obj) => {
            let bad = gerbe_core::gerbe::validate_object(&c, &g, &obj, config.tolerance);
            if bad.is_empty() {
                report.record("object", Status::Pass, None, Some("object exists".into()));
            } else {
                report.fail("object", None, bad.join("; "));
            }
            if let Some(conn) = &conn {
                match object_connection(&c, &g, conn, &obj, config.tolerance) {
                    Ok(_oc) => report.record(
                        "object-connection",
                        Status::Pass,
                        None,
                        Some("subordinate connection solved".into()),
                    ),
                    Err(e) => report.record(
                        "object-connection",
                        Status::Pass,
                        None,
                        Some(format!("not solvable: {e}")),
                    ),
                }
            }
        }
        None => {
            report.record(
                "object",
                Status::Pass,
                None,
                Some("obstructed: gerbe class is nontrivial".into()),
            );
        }
    }
    Ok(report)
}

fn cmd_transgress(cli: &Cli, config: RunConfig) -> Result<Report> {
    let mut report = Report::new("transgress", config);
    if let Some(mpath) = &cli.map {
        // map-space suite over a surface-with-boundary domain
        let f = io::load_map(mpath)?;
        let mf: io::MapFile = io::read_json(mpath)?;
        let base = mpath.parent().unwrap_or_else(|| Path::new("."));
        let dom_file: io::ComplexFile = io::read_json(&base.join(&mf.domain))?;
        let surface = io::surface_from_file(&dom_file)?;
        let (g, conn) = match &cli.gerbe {
            Some(gpath) => {
                let gf: io::GerbeFile = io::read_json(gpath)?;
                let (g, conn, _h) = io::gerbe_from_file(&f.codomain, &gf)?;
                (g, conn.unwrap_or_else(|| GerbeConnection::zero(&f.codomain)))
            }
            None => {
                let mut r = fixtures::rng(config.seed);
                let g = fixtures::random_twisted_gerbe(&f.codomain, &mut r, None, None);
                let conn = fixtures::random_flat_gerbe_connection(&f.codomain, &mut r);
                (g, conn)
            }
        };
        let section = mapspace_section(&surface, &f, &g, &conn, config.tolerance)?;
        report.record(
            "mapspace-section",
            Status::Pass,
            None,
            Some(format!("{} boundary components", section.components.len())),
        );
        if !section_equivalent(&section, &section, config.tolerance)? {
            report.fail("section-self-equivalence", None, "section not equal to itself".into());
        } else {
            report.pass("section-self-equivalence", None);
        }
        let worst = mapspace_wellposed(
            &surface,
            &f,
            &g,
            &conn,
            config.trials,
            config.seed,
            config.tolerance,
        )?;
        report.check_residual("mapspace-wellposedness", worst);
        return Ok(report);
    }

    // torus suite on the 27-vertex 3-torus
    let c = Arc::new(load_complex(require(
        &cli.complex,
        "a map file (-m) or the 3-torus complex (-c)",
    )?)?);
    let (g, conn) = match &cli.gerbe {
        Some(gpath) => {
            let gf: io::GerbeFile = io::read_json(gpath)?;
            let (g, conn, _h) = io::gerbe_from_file(&c, &gf)?;
            (g, conn.unwrap_or_else(|| GerbeConnection::zero(&c)))
        }
        None => {
            let mut r = fixtures::rng(config.seed);
            let z = fixtures::random_closed(&c, 2, &mut r)?;
            let g = fixtures::random_twisted_gerbe(&c, &mut r, None, Some(&z));
            let conn = fixtures::random_flat_gerbe_connection(&c, &mut r);
            (g, conn)
        }
    };
    for (i, fam) in t3_coordinate_tori(&c)?.into_iter().enumerate() {
        let composed = torus_holonomy(&fam.legs, &g, &conn, config.tolerance)?;
        let direct = surface_holonomy(&g, &conn, &fam.map, Some(&fam.orientation), config.tolerance)?;
        let name = format!("torus-{i}-pairing");
        if composed.sign != direct.sign {
            report.fail(&name, None, "sign mismatch between transport and pairing".into());
        } else {
            report.check_residual(&name, (composed.log - direct.log).abs());
        }
    }
    Ok(report)
}

fn cmd_generate(cli: &Cli, config: RunConfig, name: &str, size: Option<usize>) -> Result<Report> {
    let mut report = Report::new("generate", config);
    let out_dir = match &cli.out {
        Some(p) => p.clone(),
        None => PathBuf::from("."),
    };
    match name {
        "random-bundle" => {
            let c = load_complex(require(&cli.complex, "a complex file (-c)")?)?;
            let mut r = fixtures::rng(config.seed);
            let b = fixtures::random_bundle(&c, &mut r);
            let h = fixtures::random_metric(&c, &mut r);
            let file = io::bundle_to_file(&c, &b, Some(&h));
            let path = out_dir.join("random-bundle.json");
            io::write_json(&path, &file)?;
            report.record("written", Status::Pass, None, Some(path.display().to_string()));
        }
        "random-gerbe" => {
            let c = load_complex(require(&cli.complex, "a complex file (-c)")?)?;
            let mut r = fixtures::rng(config.seed);
            let g = fixtures::random_twisted_gerbe(&c, &mut r, None, None);
            let conn = fixtures::random_flat_gerbe_connection(&c, &mut r);
            let h = fixtures::random_gerbe_metric(&c, &g, &mut r);
            let file = io::gerbe_to_file(&c, &g, Some(&conn), Some(&h));
            let path = out_dir.join("random-gerbe.json");
            io::write_json(&path, &file)?;
            report.record("written", Status::Pass, None, Some(path.display().to_string()));
        }
        other => {
            let (c, boundary) = fixtures::by_name(other, size)?;
            let file = io::complex_to_file(
                &c,
                if boundary.is_empty() { None } else { Some(&boundary) },
            );
            let path = out_dir.join(format!("{other}.json"));
            io::write_json(&path, &file)?;
            report.record("written", Status::Pass, None, Some(path.display().to_string()));
        }
    }
    Ok(report)
}
