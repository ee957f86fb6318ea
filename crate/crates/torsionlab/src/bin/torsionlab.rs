//! Command-line front end: batch evaluation, cross-validation between the
//! combinatorial and zeta-regularized pipelines, and table emission.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use serde::Serialize;

use torsionlab::assembly::{
    symmetric_space_torsion, trivially_acting_subgroup, SymmetricSpaceFamily, TorusElement,
};
use torsionlab::chain::{
    hat_torsion, torsion_acyclic, torsion_with_cohomology, CohomologyMetric,
};
use torsionlab::cw::{build_circle, circle_de_rham_metric, cochain_complex};
use torsionlab::error::{Error, Result};
use torsionlab::group::{ClassFunction, Subgroup};
use torsionlab::linalg::C64;
use torsionlab::schema::{
    class_function_to_schema, complex_from_schema, filtered_from_schema, ComplexSchema,
    FilteredComplexSchema, ValueRecord, SCHEMA_VERSION,
};
use torsionlab::selftest;
use torsionlab::spectral::spectral_decomposition;
use torsionlab::zeta::{psi_closed_tau0, psi_constant_d, psi_scalar, ZetaAccuracy};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Parser)]
#[command(name = "torsionlab", version, about = "Equivariant torsion calculator")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "pretty")]
    format: Format,
    /// Target accuracy for zeta-regularized values; the TORSIONLAB_ACCURACY
    /// environment variable takes precedence when set.
    #[arg(long, global = true)]
    accuracy: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate psi(lambda, a, tau) with branch diagnostics.
    Psi {
        /// Holonomy exponent, in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        /// Rotation number, in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        /// Phase of the unimodular twist, as a fraction of a full turn.
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
    },
    /// Torsion of a complex given as schema JSON.
    Complex {
        input: PathBuf,
        /// Reduce modulo pullbacks from the quotient by the trivially
        /// acting subgroup.
        #[arg(long)]
        hat: bool,
        /// Generators of the reduction subgroup (element indices);
        /// defaults to the full kernel of the cohomology action.
        #[arg(long, value_delimiter = ',')]
        gamma0: Option<Vec<usize>>,
    },
    /// Combinatorial torsion of an equivariant circle model.
    Circle {
        #[command(flatten)]
        circle: CircleArgs,
    },
    /// Combinatorial vs zeta-regularized circle torsion, element by element.
    Compare {
        #[command(flatten)]
        circle: CircleArgs,
        /// Largest allowed deviation after normalization.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Three-term torsion decomposition of a filtered complex.
    Filtered { input: PathBuf },
    /// Weyl-formula torsion table for a symmetric-space family.
    Symmetric {
        #[arg(long, value_enum)]
        family: Family,
        /// Torus rank parameter m of the so-even family.
        #[arg(long)]
        m: Option<usize>,
        /// Block split parameter p of the so-even family.
        #[arg(long)]
        p: Option<usize>,
        /// Rank of G for the other-odd family.
        #[arg(long)]
        rank_g: Option<usize>,
        /// Rank of K for the other-odd family.
        #[arg(long)]
        rank_k: Option<usize>,
        /// Torus element as comma-separated fractions, e.g. "1/2,0"; repeat
        /// for a table.
        #[arg(long = "t", required = true)]
        elements: Vec<String>,
    },
    /// Run the seeded property suites and emit a machine-readable report.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict to the named suites; repeatable.
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
}

#[derive(clap::Args)]
struct CircleArgs {
    /// Number of arcs.
    #[arg(long)]
    n: usize,
    /// Rotation step of the generator, in arcs.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Holonomy phase around the circle, as a fraction of a full turn.
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    /// Fiber twist phase of the generator, as a fraction of a full turn.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    SoEven,
    Su3So3,
    OtherOdd,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Structure(_)
        | Error::Contract(_)
        | Error::UnsupportedSpace(_)
        | Error::Schema(_)
        | Error::Json(_)
        | Error::Io(_) => 2,
        Error::Precision { .. } => 3,
        Error::NotAcyclic { .. } | Error::NotQuasiIso { .. } => 4,
        Error::Mismatch { .. } => 5,
        _ => 1,
    }
}

fn accuracy(cli: &Cli) -> Result<ZetaAccuracy> {
    if std::env::var("TORSIONLAB_ACCURACY").is_ok() {
        return ZetaAccuracy::from_env();
    }
    match cli.accuracy {
        Some(eps) => ZetaAccuracy::new(eps),
        None => Ok(ZetaAccuracy::default()),
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Psi { a, tau, lambda } => cmd_psi(cli, *a, *tau, *lambda),
        Cmd::Complex { input, hat, gamma0 } => cmd_complex(cli, input, *hat, gamma0.as_deref()),
        Cmd::Circle { circle } => cmd_circle(cli, circle),
        Cmd::Compare { circle, tol } => cmd_compare(cli, circle, *tol),
        Cmd::Filtered { input } => cmd_filtered(cli, input),
        Cmd::Symmetric { family, m, p, rank_g, rank_k, elements } => {
            let family = resolve_family(*family, *m, *p, *rank_g, *rank_k)?;
            cmd_symmetric(cli, family, elements)
        }
        Cmd::Selftest { seed, suites } => cmd_selftest(cli, *seed, suites),
    }
}

fn unit_phase(x: f64) -> C64 {
    C64::new(0.0, 2.0 * PI * x).exp()
}

#[derive(Serialize)]
struct PsiRecord {
    schema_version: u32,
    a: f64,
    tau: f64,
    lambda: f64,
    value: f64,
    value_im: f64,
    branch: &'static str,
    /// extra branch diagnostics, stable keys
    constant_d: Option<f64>,
    closed_form_deviation: Option<f64>,
}

fn cmd_psi(cli: &Cli, a: f64, tau: f64, lambda: f64) -> Result<()> {
    let acc = accuracy(cli)?;
    let lam = unit_phase(lambda);
    let value = psi_scalar(lam, a, tau, &acc)?;
    let branch = if a == 0.0 && tau == 0.0 {
        "riemann"
    } else if a == 0.0 {
        "digamma"
    } else {
        "mellin"
    };
    let constant_d = (branch == "digamma").then(|| psi_constant_d().0);
    let closed_form_deviation = (tau == 0.0 && a > 0.0 && a < 1.0)
        .then(|| (value - psi_closed_tau0(lam, a).unwrap()).norm());
    let rec = PsiRecord {
        schema_version: SCHEMA_VERSION,
        a,
        tau,
        lambda,
        value: value.re,
        value_im: value.im,
        branch,
        constant_d,
        closed_form_deviation,
    };
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string(&rec)?),
        Format::Csv => {
            println!("a,tau,lambda,value,value_im,branch");
            println!("{a},{tau},{lambda},{:.12},{:.12},{branch}", rec.value, rec.value_im);
        }
        Format::Pretty => {
            println!("psi(lambda = e^(2 pi i {lambda}), a = {a}, tau = {tau})");
            println!("  value  = {:.12} + {:.12}i", rec.value, rec.value_im);
            println!("  branch = {branch}");
            if let Some(d) = rec.constant_d {
                println!("  digamma constant D = {d:.12}");
            }
            if let Some(dev) = rec.closed_form_deviation {
                println!("  deviation from 2 log(2 sin pi a) = {dev:.3e}");
            }
        }
    }
    Ok(())
}

fn print_class_function(cli: &Cli, rho: &ClassFunction, heading: &str) -> Result<()> {
    match cli.format {
        Format::Json => {
            println!("{}", serde_json::to_string(&class_function_to_schema(rho))?)
        }
        Format::Csv => {
            println!("class_rep,value,value_im");
            for (rep, v) in rho.group().class_reps().iter().zip(rho.class_values()) {
                println!("{rep},{:.12},{:.12}", v.re, v.im);
            }
        }
        Format::Pretty => {
            println!("{heading}");
            for (rep, v) in rho.group().class_reps().iter().zip(rho.class_values()) {
                if v.im.abs() <= 1e-12 {
                    println!("  class of g{rep}: {:.12}", v.re);
                } else {
                    println!("  class of g{rep}: {:.12} + {:.12}i", v.re, v.im);
                }
            }
        }
    }
    Ok(())
}

fn cmd_complex(cli: &Cli, input: &PathBuf, hat: bool, gamma0: Option<&[usize]>) -> Result<()> {
    let raw = std::fs::read_to_string(input)?;
    let schema: ComplexSchema =
        serde_json::from_str(&raw).map_err(|e| Error::Schema(e.to_string()))?;
    let (cx, metric) = complex_from_schema(&schema)?;
    if hat {
        let mu = metric.unwrap_or_else(|| CohomologyMetric::standard(&cx));
        let sub = match gamma0 {
            Some(gens) => Subgroup::generated(cx.group(), gens)?,
            None => trivially_acting_subgroup(&cx)?,
        };
        let rho = hat_torsion(&cx, &mu, &sub)?;
        return print_class_function(cli, &rho, "torsion modulo pullbacks");
    }
    let rho = match metric {
        Some(mu) => torsion_with_cohomology(&cx, &mu)?,
        None => torsion_acyclic(&cx)?,
    };
    print_class_function(cli, &rho, "torsion")
}

fn circle_torsion(args: &CircleArgs) -> Result<ClassFunction> {
    let u = torsionlab::linalg::CMatrix::from_element(1, 1, unit_phase(args.a));
    let lam = torsionlab::linalg::CMatrix::from_element(1, 1, unit_phase(args.lambda));
    let (x, f) = build_circle(args.n, args.k, &u, &lam)?;
    let cx = cochain_complex(&x, &f)?;
    let mu = circle_de_rham_metric(&x, &f, &cx)?;
    torsion_with_cohomology(&cx, &mu)
}

fn cmd_circle(cli: &Cli, args: &CircleArgs) -> Result<()> {
    let rho = circle_torsion(args)?;
    print_class_function(cli, &rho, "combinatorial circle torsion")
}

fn cmd_compare(cli: &Cli, args: &CircleArgs, tol: f64) -> Result<()> {
    let acc = accuracy(cli)?;
    let rho = circle_torsion(args)?;
    let order = rho.group().order();
    // the element r rotates by r k / n turns and crosses the closing edge
    // floor(r k / n) times, picking up the inverse holonomy each time
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for r in 0..order {
        let turns = r * args.k;
        let tau = (turns % args.n) as f64 / args.n as f64;
        let phase = unit_phase(args.lambda).powu(r as u32)
            * unit_phase(-args.a).powu((turns / args.n) as u32);
        let analytic = psi_scalar(phase, args.a, tau, &acc)?;
        let normalized = rho.eval(r) * torsionlab::ANALYTIC_OVER_COMBINATORIAL;
        let deviation = (normalized - analytic).norm();
        worst = worst.max(deviation);
        rows.push((r, normalized, analytic, deviation));
    }
    match cli.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                element: usize,
                combinatorial: [f64; 2],
                analytic: [f64; 2],
                deviation: f64,
            }
            #[derive(Serialize)]
            struct Report {
                schema_version: u32,
                normalization: &'static str,
                rows: Vec<Row>,
                max_deviation: f64,
            }
            let report = Report {
                schema_version: SCHEMA_VERSION,
                normalization: "combinatorial value scaled by 2",
                rows: rows
                    .iter()
                    .map(|&(r, c, a, d)| Row {
                        element: r,
                        combinatorial: [c.re, c.im],
                        analytic: [a.re, a.im],
                        deviation: d,
                    })
                    .collect(),
                max_deviation: worst,
            };
            println!("{}", serde_json::to_string(&report)?);
        }
        Format::Csv => {
            println!("element,combinatorial,combinatorial_im,analytic,analytic_im,deviation");
            for (r, c, a, d) in &rows {
                println!("{r},{:.12},{:.12},{:.12},{:.12},{d:.3e}", c.re, c.im, a.re, a.im);
            }
        }
        Format::Pretty => {
            println!("circle n = {}, k = {}, a = {}, lambda phase = {}", args.n, args.k, args.a, args.lambda);
            println!("normalization: combinatorial value scaled by 2");
            for (r, c, a, d) in &rows {
                println!(
                    "  element {r}: combinatorial {:.9}{:+.9}i  analytic {:.9}{:+.9}i  deviation {d:.3e}",
                    c.re, c.im, a.re, a.im
                );
            }
            println!("max deviation: {worst:.3e}");
        }
    }
    if worst > tol {
        return Err(Error::Mismatch { what: "combinatorial vs analytic circle torsion".into(), deviation: worst });
    }
    Ok(())
}

fn cmd_filtered(cli: &Cli, input: &PathBuf) -> Result<()> {
    let raw = std::fs::read_to_string(input)?;
    let schema: FilteredComplexSchema =
        serde_json::from_str(&raw).map_err(|e| Error::Schema(e.to_string()))?;
    let (fc, metric) = filtered_from_schema(&schema)?;
    let mu = metric.unwrap_or_else(|| CohomologyMetric::standard(fc.complex()));
    let graded: Vec<CohomologyMetric> = (0..fc.pieces())
        .map(|p| Ok(CohomologyMetric::standard(&fc.graded_piece(p)?)))
        .collect::<Result<_>>()?;
    let dec = spectral_decomposition(&fc, &mu, &graded)?;
    let direct = torsion_with_cohomology(fc.complex(), &mu)?;
    let deviation = dec.total.sub(&direct).max_abs();
    print_class_function(cli, &dec.cell_term, "cell term")?;
    print_class_function(cli, &dec.ss_term, "spectral-sequence term")?;
    print_class_function(cli, &dec.psi_term, "limit-comparison term")?;
    print_class_function(cli, &dec.total, "total")?;
    if cli.format == Format::Pretty {
        println!("deviation from direct torsion: {deviation:.3e}");
    }
    if deviation > 1e-8 {
        return Err(Error::Mismatch { what: "torsion decomposition identity".into(), deviation });
    }
    Ok(())
}

fn resolve_family(
    family: Family,
    m: Option<usize>,
    p: Option<usize>,
    rank_g: Option<usize>,
    rank_k: Option<usize>,
) -> Result<SymmetricSpaceFamily> {
    let need = |v: Option<usize>, name: &str| {
        v.ok_or_else(|| Error::Contract(format!("family requires --{name}")))
    };
    Ok(match family {
        Family::SoEven => SymmetricSpaceFamily::SoEven { m: need(m, "m")?, p: need(p, "p")? },
        Family::Su3So3 => SymmetricSpaceFamily::Su3So3,
        Family::OtherOdd => SymmetricSpaceFamily::OtherOdd {
            rank_g: need(rank_g, "rank-g")?,
            rank_k: need(rank_k, "rank-k")?,
        },
    })
}

fn parse_element(raw: &str) -> Result<TorusElement> {
    let mut coords = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        let (num, den) = match part.split_once('/') {
            Some((n, d)) => (
                n.trim().parse::<i64>().map_err(|_| Error::Contract(format!("bad fraction {part:?}")))?,
                d.trim().parse::<i64>().map_err(|_| Error::Contract(format!("bad fraction {part:?}")))?,
            ),
            None => (
                part.parse::<i64>().map_err(|_| Error::Contract(format!("bad fraction {part:?}")))?,
                1,
            ),
        };
        coords.push((num, den));
    }
    TorusElement::new(&coords)
}

fn cmd_symmetric(cli: &Cli, family: SymmetricSpaceFamily, elements: &[String]) -> Result<()> {
    let acc = accuracy(cli)?;
    // grid points are independent; evaluate them in parallel, emit in order
    let records: Vec<Result<ValueRecord>> = std::thread::scope(|scope| {
        let handles: Vec<_> = elements
            .iter()
            .map(|raw| {
                let family = &family;
                let acc = &acc;
                scope.spawn(move || -> Result<ValueRecord> {
                    let t = parse_element(raw)?;
                    let value = symmetric_space_torsion(family, &t, acc)?;
                    let coords: Vec<[i64; 2]> = t
                        .coords()
                        .iter()
                        .map(|c| [*Ratio::numer(c), *Ratio::denom(c)])
                        .collect();
                    Ok(ValueRecord::new(coords, C64::new(value, 0.0), "analytic", "weyl-sum"))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let records: Vec<ValueRecord> = records.into_iter().collect::<Result<_>>()?;
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string(&records)?),
        Format::Csv => {
            println!("t,value");
            for (raw, rec) in elements.iter().zip(&records) {
                println!("\"{raw}\",{:.12}", rec.value);
            }
        }
        Format::Pretty => {
            println!("symmetric-space torsion ({} points)", records.len());
            for (raw, rec) in elements.iter().zip(&records) {
                println!("  t = {raw}: {:.12}", rec.value);
            }
        }
    }
    Ok(())
}

fn cmd_selftest(cli: &Cli, seed: u64, suites: &[String]) -> Result<()> {
    let names: Vec<&str> = suites.iter().map(String::as_str).collect();
    let report = selftest::run(seed, if names.is_empty() { None } else { Some(&names) })?;
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string(&report)?),
        Format::Csv => {
            println!("suite,passed,failed");
            for s in &report.suites {
                println!("{},{},{}", s.name, s.passed, s.failed);
            }
        }
        Format::Pretty => {
            for s in &report.suites {
                println!("{}: {} passed, {} failed", s.name, s.passed, s.failed);
                for f in &s.failures {
                    println!("  FAIL {f}");
                }
            }
            println!("overall: {}", if report.ok { "ok" } else { "FAILED" });
        }
    }
    if !report.ok {
        return Err(Error::Mismatch { what: "self-test suites".into(), deviation: f64::NAN });
    }
    Ok(())
}
